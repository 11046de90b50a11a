#pragma once

// Forward scalar propagation: angular-spectrum free-space steps, symmetric
// split-step BPM through an IndexVolume and thin-mask propagation through a
// LayeredElement.
//
// Time dependence is exp(-i w t); a forward-travelling plane wave picks up
// exp(+i kz z). Both operators keep the per-plane fields of a forward pass on
// request so the learning-tomography adjoint can reuse them.

#include "ove/fft.hpp"
#include "ove/lattice.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace ove
{

enum class TransferModel
{
  exact,   // exp(i d sqrt(k^2 - kx^2 - ky^2))
  fresnel, // exp(i d (k - (kx^2 + ky^2) / 2k))
};

enum class EvanescentPolicy
{
  zero,
  keep,
};

struct PropagationSpec
{
  TransferModel transfer_model = TransferModel::exact;
  EvanescentPolicy evanescent = EvanescentPolicy::zero;
  /// Super-Gaussian edge absorber, fraction of the window on each side; 0 disables it.
  double absorber_width = 0.1;

  void validate() const
  {
    if (!(absorber_width >= 0.0 && absorber_width < 0.5))
      throw InvalidArgument("absorber width fraction must lie in [0, 0.5)");
  }

  /// Lossless settings: exact kernel, evanescent kept, no absorber.
  static PropagationSpec unitary() { return {TransferModel::exact, EvanescentPolicy::keep, 0.0}; }

  friend bool operator==(const PropagationSpec&, const PropagationSpec&) = default;
};

/// 1D absorber profile; 1 inside, exp(-3 s^4) across the edge band of relative depth s.
inline double absorber_profile(double position, double extent, double width_fraction)
{
  if (width_fraction <= 0.0)
    return 1.0;
  const double half = 0.5 * extent;
  const double band = width_fraction * extent;
  const double inner = half - band;
  const double a = std::abs(position);
  if (a <= inner)
    return 1.0;
  const double s = std::min((a - inner) / band, 1.0);
  return std::exp(-3.0 * s * s * s * s);
}

inline std::vector<double> absorber_mask(const Grid2D& grid, double width_fraction)
{
  std::vector<double> mask(grid.size(), 1.0);
  if (width_fraction <= 0.0)
    return mask;
  for (int j = 0; j < grid.ny; ++j) {
    const double my = absorber_profile(grid.y(j), grid.height(), width_fraction);
    for (int i = 0; i < grid.nx; ++i)
      mask[grid.index(i, j)] = my * absorber_profile(grid.x(i), grid.width(), width_fraction);
  }
  return mask;
}

/// Homogeneous-medium step of fixed length, optionally followed by the absorber.
class Drift
{
public:
  Drift() = default;

  Drift(const Grid2D& grid, double wavelength_um, double distance_um, double n_medium,
        const PropagationSpec& spec, bool with_absorber)
      : grid_(grid)
  {
    spec.validate();
    if (!(distance_um >= 0.0))
      throw InvalidArgument("propagation distance must be non-negative");
    identity_ = distance_um == 0.0;
    if (identity_)
      return;
    const double k = 2.0 * pi * n_medium / wavelength_um;
    transfer_.resize(grid.size());
    for (int j = 0; j < grid.ny; ++j) {
      const double ky = grid.ky(j);
      for (int i = 0; i < grid.nx; ++i) {
        const double kx = grid.kx(i);
        const double kt2 = kx * kx + ky * ky;
        const double radicand = k * k - kt2;
        Complex h;
        if (radicand < 0.0 && spec.evanescent == EvanescentPolicy::zero) {
          h = 0.0;
        } else if (spec.transfer_model == TransferModel::fresnel) {
          h = std::polar(1.0, distance_um * (k - kt2 / (2.0 * k)));
        } else if (radicand >= 0.0) {
          h = std::polar(1.0, distance_um * std::sqrt(radicand));
        } else {
          h = std::exp(-distance_um * std::sqrt(-radicand));
        }
        transfer_[grid.index(i, j)] = h;
      }
    }
    if (with_absorber && spec.absorber_width > 0.0)
      mask_ = absorber_mask(grid, spec.absorber_width);
  }

  bool identity() const { return identity_; }

  void apply(std::span<Complex> u) const
  {
    if (identity_)
      return;
    fft::forward(u, grid_);
    for (std::size_t k = 0; k < u.size(); ++k)
      u[k] *= transfer_[k];
    fft::inverse(u, grid_);
    for (std::size_t k = 0; k < mask_.size(); ++k)
      u[k] *= mask_[k];
  }

  void apply_adjoint(std::span<Complex> u) const
  {
    if (identity_)
      return;
    for (std::size_t k = 0; k < mask_.size(); ++k)
      u[k] *= mask_[k];
    fft::forward(u, grid_);
    for (std::size_t k = 0; k < u.size(); ++k)
      u[k] *= std::conj(transfer_[k]);
    fft::inverse(u, grid_);
  }

private:
  Grid2D grid_{};
  bool identity_ = true;
  std::vector<Complex> transfer_;
  std::vector<double> mask_;
};

inline ComplexField free_space(const ComplexField& field, double distance_um, double n_medium,
                               const PropagationSpec& spec = {})
{
  if (distance_um == 0.0)
    return field;
  Drift step(field.grid(), field.wavelength(), distance_um, n_medium, spec, true);
  ComplexField out = field;
  step.apply(out.values());
  return out;
}

/// Fields recorded at every modulation plane of a forward pass (after the
/// plane's phase, before the following drift).
struct ForwardTrace
{
  std::vector<std::vector<Complex>> planes;
};

/// Split-step propagator bound to one volume: half drift, then per slice a
/// phase screen exp(i k0 dn dz) (times the absorber) followed by a full
/// drift, with the last full drift replaced by a half drift.
class BpmOperator
{
public:
  BpmOperator(const IndexVolume& volume, double wavelength_um, const PropagationSpec& spec)
      : grid_(volume.grid()), nz_(volume.nz()), k0dz_(2.0 * pi / wavelength_um * volume.dz())
  {
    half_ = Drift(grid_, wavelength_um, 0.5 * volume.dz(), volume.n0(), spec, false);
    full_ = Drift(grid_, wavelength_um, volume.dz(), volume.n0(), spec, false);
    const auto mask = absorber_mask(grid_, spec.absorber_width);
    screens_.resize(grid_.size() * nz_);
    for (int z = 0; z < nz_; ++z) {
      auto dn = volume.slice(z);
      for (std::size_t k = 0; k < grid_.size(); ++k)
        screens_[z * grid_.size() + k] = std::polar(mask[k], k0dz_ * dn[k]);
    }
  }

  const Grid2D& grid() const { return grid_; }
  int slices() const { return nz_; }
  /// d(phase)/d(dn) of one slice.
  double phase_per_index() const { return k0dz_; }

  void forward(std::span<Complex> u, ForwardTrace* trace = nullptr) const
  {
    if (trace) {
      trace->planes.assign(nz_, {});
    }
    half_.apply(u);
    for (int z = 0; z < nz_; ++z) {
      auto screen = std::span<const Complex>(screens_).subspan(z * grid_.size(), grid_.size());
      for (std::size_t k = 0; k < u.size(); ++k)
        u[k] *= screen[k];
      if (trace)
        trace->planes[z].assign(u.begin(), u.end());
      if (z + 1 < nz_)
        full_.apply(u);
    }
    half_.apply(u);
  }

  /// Back-propagates the adjoint source s and accumulates
  /// 2 Re(conj(g) dOut/dp) into grad, where g is the back-propagated source
  /// at each slice. grad has one entry per voxel.
  void accumulate_gradient(const ForwardTrace& trace, std::vector<Complex> source,
                           std::span<double> grad) const
  {
    std::span<Complex> r(source);
    half_.apply_adjoint(r);
    for (int z = nz_ - 1; z >= 0; --z) {
      const auto& b = trace.planes[z];
      auto g = grad.subspan(z * grid_.size(), grid_.size());
      for (std::size_t k = 0; k < r.size(); ++k) {
        // 2 Re(conj(r) * i k0dz * b)
        const Complex t = std::conj(r[k]) * b[k];
        g[k] += -2.0 * k0dz_ * t.imag();
      }
      auto screen = std::span<const Complex>(screens_).subspan(z * grid_.size(), grid_.size());
      for (std::size_t k = 0; k < r.size(); ++k)
        r[k] *= std::conj(screen[k]);
      if (z > 0)
        full_.apply_adjoint(r);
    }
  }

private:
  Grid2D grid_;
  int nz_;
  double k0dz_;
  Drift half_;
  Drift full_;
  std::vector<Complex> screens_;
};

inline ComplexField bpm(const IndexVolume& volume, const ComplexField& input, const PropagationSpec& spec = {})
{
  if (!(input.grid() == volume.grid()))
    throw GridMismatch("input grid does not match volume lateral grid");
  BpmOperator op(volume, input.wavelength(), spec);
  ComplexField out = input;
  op.forward(out.values());
  return out;
}

/// Thin-mask propagator: layer k multiplies by exp(i phase_k), then drifts gaps[k].
class LayeredOperator
{
public:
  LayeredOperator(const LayeredElement& element, double wavelength_um, const PropagationSpec& spec)
      : grid_(element.grid)
  {
    element.validate();
    for (std::size_t l = 0; l < element.layers.size(); ++l) {
      std::vector<Complex> mask(grid_.size());
      for (std::size_t k = 0; k < grid_.size(); ++k)
        mask[k] = std::polar(1.0, element.layers[l][k]);
      masks_.push_back(std::move(mask));
      drifts_.emplace_back(grid_, wavelength_um, element.gaps[l], element.n_gap, spec, true);
    }
  }

  const Grid2D& grid() const { return grid_; }
  int layers() const { return static_cast<int>(masks_.size()); }

  void forward(std::span<Complex> u, ForwardTrace* trace = nullptr) const
  {
    if (trace)
      trace->planes.assign(masks_.size(), {});
    for (std::size_t l = 0; l < masks_.size(); ++l) {
      for (std::size_t k = 0; k < u.size(); ++k)
        u[k] *= masks_[l][k];
      if (trace)
        trace->planes[l].assign(u.begin(), u.end());
      drifts_[l].apply(u);
    }
  }

  void accumulate_gradient(const ForwardTrace& trace, std::vector<Complex> source,
                           std::span<double> grad) const
  {
    std::span<Complex> r(source);
    for (int l = layers() - 1; l >= 0; --l) {
      drifts_[l].apply_adjoint(r);
      const auto& b = trace.planes[l];
      auto g = grad.subspan(l * grid_.size(), grid_.size());
      for (std::size_t k = 0; k < r.size(); ++k)
        g[k] += -2.0 * (std::conj(r[k]) * b[k]).imag();
      for (std::size_t k = 0; k < r.size(); ++k)
        r[k] *= std::conj(masks_[l][k]);
    }
  }

private:
  Grid2D grid_;
  std::vector<std::vector<Complex>> masks_;
  std::vector<Drift> drifts_;
};

inline ComplexField layered(const LayeredElement& element, const ComplexField& input,
                            const PropagationSpec& spec = {})
{
  if (!(input.grid() == element.grid))
    throw GridMismatch("input grid does not match element grid");
  LayeredOperator op(element, input.wavelength(), spec);
  ComplexField out = input;
  op.forward(out.values());
  return out;
}

} // namespace ove
