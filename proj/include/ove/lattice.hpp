#pragma once

// Core sampled types: lateral grids, complex scalar fields, index volumes,
// multilayer phase elements and input/target mapping tasks.
//
// Lengths are in micrometers. Sample (i, j) of a grid sits at
// ((i - nx/2) dx, (j - ny/2) dy) and is stored at linear index i + nx j.

#include "ove/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ove
{

using Complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double default_wavelength_um = 1.55;

struct Grid2D
{
  int nx = 128;
  int ny = 128;
  double dx = 0.25;
  double dy = 0.25;

  void validate() const
  {
    if (nx < 2 || ny < 2)
      throw InvalidArgument("grid needs nx >= 2 and ny >= 2");
    if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy))
      throw InvalidArgument("grid spacing must be positive and finite");
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j; }

  double x(int i) const { return (i - nx / 2) * dx; }
  double y(int j) const { return (j - ny / 2) * dy; }

  double width() const { return nx * dx; }
  double height() const { return ny * dy; }
  double cell_area() const { return dx * dy; }

  /// Angular spatial frequency of FFT bin i (standard FFT ordering).
  double kx(int i) const { return 2.0 * pi * (i <= (nx - 1) / 2 ? i : i - nx) / width(); }
  double ky(int j) const { return 2.0 * pi * (j <= (ny - 1) / 2 ? j : j - ny) / height(); }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Scalar complex amplitude on a uniform lateral grid.
class ComplexField
{
public:
  ComplexField() = default;

  ComplexField(Grid2D grid, double wavelength_um)
      : grid_(grid), wavelength_(wavelength_um)
  {
    grid_.validate();
    if (!(wavelength_um > 0.0) || !std::isfinite(wavelength_um))
      throw InvalidArgument("wavelength must be positive");
    values_.assign(grid_.size(), Complex{});
  }

  ComplexField(Grid2D grid, double wavelength_um, std::vector<Complex> values)
      : ComplexField(grid, wavelength_um)
  {
    if (values.size() != grid_.size())
      throw InvalidArgument("field value count does not match grid");
    values_ = std::move(values);
  }

  const Grid2D& grid() const { return grid_; }
  double wavelength() const { return wavelength_; }

  std::span<const Complex> values() const { return values_; }
  std::span<Complex> values() { return values_; }

  Complex operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  Complex& operator()(int i, int j) { return values_[grid_.index(i, j)]; }

  bool compatible(const ComplexField& other) const
  {
    return grid_ == other.grid_ && wavelength_ == other.wavelength_;
  }

  ComplexField& operator*=(Complex s)
  {
    for (auto& v : values_)
      v *= s;
    return *this;
  }

  friend bool operator==(const ComplexField&, const ComplexField&) = default;

private:
  Grid2D grid_{};
  double wavelength_ = default_wavelength_um;
  std::vector<Complex> values_;
};

inline void require_compatible(const ComplexField& a, const ComplexField& b)
{
  if (!a.compatible(b))
    throw GridMismatch("fields differ in grid or wavelength");
}

/// Sum of |u|^2 dx dy.
inline double power(const ComplexField& field)
{
  double sum = 0.0;
  for (const auto& v : field.values())
    sum += std::norm(v);
  return sum * field.grid().cell_area();
}

/// Returns field / sqrt(power(field)).
inline ComplexField normalize(const ComplexField& field)
{
  const double p = power(field);
  if (!(p > 0.0) || !std::isfinite(p))
    throw InvalidArgument("degenerate field");
  ComplexField out = field;
  out *= Complex(1.0 / std::sqrt(p), 0.0);
  return out;
}

/// Inner product <a, b> = sum conj(a) b dx dy.
inline Complex overlap(const ComplexField& a, const ComplexField& b)
{
  require_compatible(a, b);
  Complex sum{};
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k)
    sum += std::conj(va[k]) * vb[k];
  return sum * a.grid().cell_area();
}

/// Graded-index voxel grid: index n0 + dn over nz slices of thickness dz.
/// Voxels are stored x-fastest, then y, then z.
class IndexVolume
{
public:
  IndexVolume() = default;

  IndexVolume(Grid2D grid, int nz, double dz, double n0, double dn_min, double dn_max)
      : grid_(grid), nz_(nz), dz_(dz), n0_(n0), dn_min_(dn_min), dn_max_(dn_max)
  {
    grid_.validate();
    if (nz < 1)
      throw InvalidArgument("volume needs nz >= 1");
    if (!(dz > 0.0) || !std::isfinite(dz))
      throw InvalidArgument("volume needs dz > 0");
    if (!(n0 >= 1.0) || !std::isfinite(n0))
      throw InvalidArgument("background index n0 must be >= 1");
    if (!(dn_min <= dn_max) || !std::isfinite(dn_min) || !std::isfinite(dn_max))
      throw InvalidArgument("dn_min must not exceed dn_max");
    const double fill = (dn_min <= 0.0 && 0.0 <= dn_max) ? 0.0 : dn_min;
    dn_.assign(grid_.size() * static_cast<std::size_t>(nz), fill);
  }

  IndexVolume(Grid2D grid, int nz, double dz, double n0, double dn_min, double dn_max,
              std::vector<double> dn)
      : IndexVolume(grid, nz, dz, n0, dn_min, dn_max)
  {
    if (dn.size() != dn_.size())
      throw InvalidArgument("voxel count does not match volume shape");
    dn_ = std::move(dn);
    validate_bounds();
  }

  const Grid2D& grid() const { return grid_; }
  int nz() const { return nz_; }
  double dz() const { return dz_; }
  double n0() const { return n0_; }
  double dn_min() const { return dn_min_; }
  double dn_max() const { return dn_max_; }
  double thickness() const { return nz_ * dz_; }
  std::size_t voxel_count() const { return dn_.size(); }

  std::span<const double> dn() const { return dn_; }
  std::span<double> dn() { return dn_; }

  std::span<const double> slice(int z) const { return std::span<const double>(dn_).subspan(z * grid_.size(), grid_.size()); }
  std::span<double> slice(int z) { return std::span<double>(dn_).subspan(z * grid_.size(), grid_.size()); }

  double& at(int i, int j, int z) { return dn_[grid_.index(i, j) + grid_.size() * z]; }
  double at(int i, int j, int z) const { return dn_[grid_.index(i, j) + grid_.size() * z]; }

  void validate_bounds() const
  {
    for (std::size_t v = 0; v < dn_.size(); ++v)
      if (!(dn_[v] >= dn_min_ && dn_[v] <= dn_max_))
        throw InvalidArgument("voxel " + std::to_string(v) + " outside [dn_min, dn_max]");
  }

  void clip_to_bounds()
  {
    for (auto& v : dn_)
      v = std::min(std::max(v, dn_min_), dn_max_);
  }

  bool same_shape(const IndexVolume& o) const
  {
    return grid_ == o.grid_ && nz_ == o.nz_ && dz_ == o.dz_ && n0_ == o.n0_ &&
           dn_min_ == o.dn_min_ && dn_max_ == o.dn_max_;
  }

  friend bool operator==(const IndexVolume&, const IndexVolume&) = default;

private:
  Grid2D grid_{};
  int nz_ = 1;
  double dz_ = 0.5;
  double n0_ = 1.5;
  double dn_min_ = 0.0;
  double dn_max_ = 0.05;
  std::vector<double> dn_;
};

/// Stack of thin phase masks separated by homogeneous gaps.
/// Propagation applies layer k, then travels gaps[k] in a medium of index n_gap.
struct LayeredElement
{
  Grid2D grid{};
  std::vector<std::vector<double>> layers;
  std::vector<double> gaps;
  double n_gap = 1.0;

  LayeredElement() = default;

  LayeredElement(Grid2D g, std::vector<std::vector<double>> phase_layers,
                 std::vector<double> gap_lengths, double gap_index)
      : grid(g), layers(std::move(phase_layers)), gaps(std::move(gap_lengths)), n_gap(gap_index)
  {
    validate();
  }

  /// num_layers zero-phase masks, each followed by the same gap.
  static LayeredElement uniform(Grid2D g, int num_layers, double gap_um, double gap_index)
  {
    return LayeredElement(g, std::vector<std::vector<double>>(num_layers, std::vector<double>(g.size(), 0.0)),
                          std::vector<double>(num_layers, gap_um), gap_index);
  }

  void validate() const
  {
    grid.validate();
    if (layers.empty())
      throw InvalidArgument("layered element needs at least one layer");
    if (layers.size() != gaps.size())
      throw InvalidArgument("layered element needs one gap per layer");
    if (!(n_gap >= 1.0))
      throw InvalidArgument("gap index must be >= 1");
    for (double g : gaps)
      if (!(g >= 0.0) || !std::isfinite(g))
        throw InvalidArgument("gaps must be non-negative");
    for (const auto& layer : layers) {
      if (layer.size() != grid.size())
        throw InvalidArgument("phase mask size does not match grid");
      for (double p : layer)
        if (!std::isfinite(p))
          throw InvalidArgument("phase values must be finite");
    }
  }

  std::size_t parameter_count() const { return layers.size() * grid.size(); }

  friend bool operator==(const LayeredElement&, const LayeredElement&) = default;
};

struct MappingPair
{
  ComplexField input;
  ComplexField target;
  double weight = 1.0;
};

/// Ordered (input, target, weight) pairs on one grid and wavelength.
/// Inputs and targets are normalized to unit power on construction.
class MappingTask
{
public:
  MappingTask() = default;

  explicit MappingTask(std::vector<MappingPair> pairs) : pairs_(std::move(pairs))
  {
    if (pairs_.empty())
      throw InvalidArgument("mapping task needs at least one pair");
    double total = 0.0;
    for (auto& p : pairs_) {
      require_compatible(p.input, pairs_.front().input);
      require_compatible(p.target, pairs_.front().input);
      if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
        throw InvalidArgument("pair weights must be non-negative");
      total += p.weight;
      p.input = normalize(p.input);
      p.target = normalize(p.target);
    }
    if (!(total > 0.0))
      throw InvalidArgument("pair weights must sum to a positive value");
  }

  /// Equal weights 1/P.
  static MappingTask uniform(const std::vector<ComplexField>& inputs, const std::vector<ComplexField>& targets)
  {
    if (inputs.size() != targets.size())
      throw InvalidArgument("inputs and targets differ in length");
    std::vector<MappingPair> pairs;
    const double w = inputs.empty() ? 1.0 : 1.0 / static_cast<double>(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k)
      pairs.push_back({inputs[k], targets[k], w});
    return MappingTask(std::move(pairs));
  }

  const std::vector<MappingPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  const Grid2D& grid() const { return pairs_.front().input.grid(); }
  double wavelength() const { return pairs_.front().input.wavelength(); }

private:
  std::vector<MappingPair> pairs_;
};

} // namespace ove
