#pragma once

// Discrete interconnect models: splitter fanout matrices, the Boolean Haar
// filter bank over 21x21 images, a saturable neuron response and the
// planar vs volumetric footprint counts.

#include "ove/error.hpp"
#include "ove/haar.hpp"
#include "ove/lattice.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace ove
{

enum class CouplingMode
{
  coherent,
  incoherent,
};

/// rows x cols transfer matrix stored row-major. Incoherent entries are
/// real, non-negative power fractions held in the real part.
struct CouplingMatrix
{
  int rows = 0;
  int cols = 0;
  CouplingMode mode = CouplingMode::incoherent;
  std::vector<Complex> entries;

  CouplingMatrix() = default;
  CouplingMatrix(int r, int c, CouplingMode m) : rows(r), cols(c), mode(m)
  {
    if (r < 0 || c < 0)
      throw InvalidArgument("coupling matrix dimensions must be non-negative");
    entries.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), Complex{});
  }

  static CouplingMatrix identity(int n, CouplingMode m)
  {
    CouplingMatrix out(n, n, m);
    for (int k = 0; k < n; ++k)
      out(k, k) = 1.0;
    return out;
  }

  Complex& operator()(int r, int c) { return entries[static_cast<std::size_t>(r) * cols + c]; }
  Complex operator()(int r, int c) const { return entries[static_cast<std::size_t>(r) * cols + c]; }

  /// Fraction of power leaving input c.
  double column_power(int c) const
  {
    double s = 0.0;
    for (int r = 0; r < rows; ++r)
      s += mode == CouplingMode::coherent ? std::norm((*this)(r, c)) : (*this)(r, c).real();
    return s;
  }

  bool passive(double tol = 1e-9) const
  {
    for (int c = 0; c < cols; ++c)
      if (column_power(c) > 1.0 + tol)
        return false;
    return true;
  }

  void validate() const
  {
    if (entries.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
      throw InvalidArgument("coupling matrix entry count does not match its shape");
    if (mode == CouplingMode::incoherent)
      for (const auto& e : entries)
        if (!(e.real() >= 0.0) || e.imag() != 0.0)
          throw InvalidArgument("incoherent coupling entries must be non-negative reals");
  }
};

inline int exact_sqrt(int n)
{
  if (n < 0)
    return -1;
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : -1;
}

/// Equal lossless 1-to-fan splitters on a square input array. Input (ix, iy)
/// of the side-N array feeds the F x F block of outputs starting at (ix, iy)
/// on the side-(N + F - 1) output array; both are indexed row-major.
inline CouplingMatrix fanout_matrix(int n_in, int fan)
{
  if (n_in < 1 || fan < 1)
    throw InvalidArgument("fanout needs n_in >= 1 and fan >= 1");
  const int n = exact_sqrt(n_in);
  const int f = exact_sqrt(fan);
  if (n < 0)
    throw InvalidArgument("input count " + std::to_string(n_in) + " is not a perfect square");
  if (f < 0)
    throw InvalidArgument("fan " + std::to_string(fan) + " is not a perfect square");
  const int side = n + f - 1;
  CouplingMatrix m(side * side, n_in, CouplingMode::incoherent);
  const double share = 1.0 / fan;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      for (int b = 0; b < f; ++b)
        for (int a = 0; a < f; ++a)
          m((iy + b) * side + ix + a, iy * n + ix) = share;
  return m;
}

inline std::vector<Complex> apply_coupling(const CouplingMatrix& m, std::span<const Complex> amplitudes)
{
  if (m.mode != CouplingMode::coherent)
    throw InvalidArgument("amplitude inputs need a coherent matrix");
  if (amplitudes.size() != static_cast<std::size_t>(m.cols))
    throw InvalidArgument("input length " + std::to_string(amplitudes.size()) + " does not match " +
                          std::to_string(m.cols) + " matrix columns");
  std::vector<Complex> out(m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      out[r] += m(r, c) * amplitudes[c];
  return out;
}

inline std::vector<double> apply_coupling(const CouplingMatrix& m, std::span<const double> intensities)
{
  if (m.mode != CouplingMode::incoherent)
    throw InvalidArgument("intensity inputs need an incoherent matrix");
  if (intensities.size() != static_cast<std::size_t>(m.cols))
    throw InvalidArgument("input length " + std::to_string(intensities.size()) + " does not match " +
                          std::to_string(m.cols) + " matrix columns");
  for (double v : intensities)
    if (!(v >= 0.0))
      throw InvalidArgument("intensities must be non-negative");
  std::vector<double> out(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      out[r] += m(r, c).real() * intensities[c];
  return out;
}

inline constexpr int haar_image_side = 21;
inline constexpr int haar_cells = 7;

/// Row-major intensity image.
struct Image
{
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  double operator()(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double& operator()(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
};

struct HaarResponse
{
  double s_plus = 0.0;
  double s_minus = 0.0;
  double response = 0.0;
};

using HaarBankOutput = std::array<std::array<HaarResponse, haar_cells>, haar_cells>;

/// Tiles the image into 7x7 non-overlapping 3x3 patches and applies the two
/// Boolean halves of the pattern; the difference is taken after detection.
inline HaarBankOutput haar_filter_bank(const Image& image, HaarKind kind)
{
  if (image.rows != haar_image_side || image.cols != haar_image_side ||
      image.pixels.size() != static_cast<std::size_t>(haar_image_side * haar_image_side))
    throw InvalidArgument("Haar bank needs a 21x21 image, got " + std::to_string(image.rows) + "x" +
                          std::to_string(image.cols));
  for (double v : image.pixels)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("image intensities must be finite and non-negative");
  const auto pattern = haar_pattern(kind);
  HaarBankOutput out{};
  for (int pr = 0; pr < haar_cells; ++pr)
    for (int pc = 0; pc < haar_cells; ++pc) {
      HaarResponse& h = out[pr][pc];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const double v = image(3 * pr + r, 3 * pc + c);
          if (pattern[r][c] > 0)
            h.s_plus += v;
          else if (pattern[r][c] < 0)
            h.s_minus += v;
        }
      h.response = h.s_plus - h.s_minus;
    }
  return out;
}

/// Saturable response I / (1 + I / i_sat).
inline double neuron_nonlinearity(double intensity, double i_sat)
{
  if (!(intensity >= 0.0))
    throw InvalidArgument("neuron input intensity must be non-negative");
  if (!(i_sat > 0.0))
    throw InvalidArgument("saturation intensity must be positive");
  if (std::isinf(intensity))
    return i_sat;
  return intensity / (1.0 + intensity / i_sat);
}

struct ScalingReport
{
  std::int64_t n_neurons = 0;
  std::int64_t elements_2d = 0;
  std::int64_t planes_3d = 0;
  std::int64_t elements_per_plane_3d = 0;
  double pitch_um = 0.0;
  double footprint_2d_um2 = 0.0;
  double footprint_3d_um2 = 0.0;
  int fan = 0;
};

/// Full connectivity laid out in a plane needs n^2 elements; the volumetric
/// layout uses n planes of n elements. footprint_3d is the per-plane area.
inline ScalingReport footprint_scaling(std::int64_t n_neurons, double pitch_um, int fan = 1)
{
  if (n_neurons < 1)
    throw InvalidArgument("footprint scaling needs n_neurons >= 1");
  if (!(pitch_um > 0.0) || !std::isfinite(pitch_um))
    throw InvalidArgument("pitch must be positive");
  ScalingReport r;
  r.n_neurons = n_neurons;
  r.elements_2d = n_neurons * n_neurons;
  r.planes_3d = n_neurons;
  r.elements_per_plane_3d = n_neurons;
  r.pitch_um = pitch_um;
  r.fan = fan;
  const double cell = pitch_um * pitch_um;
  r.footprint_2d_um2 = static_cast<double>(r.elements_2d) * cell;
  r.footprint_3d_um2 = static_cast<double>(r.elements_per_plane_3d) * cell;
  return r;
}

} // namespace ove
