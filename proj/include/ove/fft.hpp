#pragma once

// Thin FFTW wrapper for in-place 2D transforms on x-fastest complex buffers.
// Plans are created once per shape with FFTW_ESTIMATE, so the chosen
// algorithm and the results are the same on every run.

#include "ove/lattice.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <span>
#include <utility>

namespace ove::fft
{

namespace detail
{

struct PlanPair
{
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache
{
public:
  static PlanCache& instance()
  {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(int nx, int ny)
  {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({nx, ny});
    if (it != plans_.end())
      return it->second;
    // FFTW is row-major: slowest dimension first, so (ny, nx) for x-fastest data.
    auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    p.forward = fftw_plan_dft_2d(ny, nx, scratch, scratch, FFTW_FORWARD, flags);
    p.backward = fftw_plan_dft_2d(ny, nx, scratch, scratch, FFTW_BACKWARD, flags);
    fftw_free(scratch);
    plans_.emplace(std::make_pair(nx, ny), p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

private:
  PlanCache() = default;
  ~PlanCache()
  {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, PlanPair> plans_;
};

inline fftw_complex* as_fftw(std::span<Complex> data)
{
  return reinterpret_cast<fftw_complex*>(data.data());
}

} // namespace detail

/// Unnormalized forward transform, exp(-i k x) kernel.
inline void forward(std::span<Complex> data, const Grid2D& grid)
{
  auto plans = detail::PlanCache::instance().get(grid.nx, grid.ny);
  fftw_execute_dft(plans.forward, detail::as_fftw(data), detail::as_fftw(data));
}

/// Inverse transform including the 1/N factor.
inline void inverse(std::span<Complex> data, const Grid2D& grid)
{
  auto plans = detail::PlanCache::instance().get(grid.nx, grid.ny);
  fftw_execute_dft(plans.backward, detail::as_fftw(data), detail::as_fftw(data));
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data)
    v *= scale;
}

} // namespace ove::fft
