#pragma once

// Simulation experiments: multiplexed-grating efficiency, the plane-wave to
// LP-mode lantern, the Haar GRIN mapping and the coupling reports that score
// them.

#include "ove/fft.hpp"
#include "ove/haar.hpp"
#include "ove/lattice.hpp"
#include "ove/propagation.hpp"
#include "ove/sources.hpp"
#include "ove/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ove
{

struct CrosstalkReport
{
  /// |overlap|^2, indexed [target][input].
  CouplingTable matrix;
  double diagonal_mean = 0.0;
  double offdiag_mean = 0.0;
  /// Smallest per-input ratio of intended to strongest unintended coupling, in dB.
  double worst_extinction_db = std::numeric_limits<double>::infinity();
};

inline CrosstalkReport crosstalk_from_table(CouplingTable table)
{
  CrosstalkReport r;
  r.matrix = std::move(table);
  const std::size_t nt = r.matrix.size();
  const std::size_t ni = nt ? r.matrix.front().size() : 0;
  double dsum = 0.0, osum = 0.0;
  std::size_t dn = 0, on = 0;
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < ni; ++i) {
      if (t == i) {
        dsum += r.matrix[t][i];
        ++dn;
      } else {
        osum += r.matrix[t][i];
        ++on;
      }
    }
  r.diagonal_mean = dn ? dsum / dn : 0.0;
  r.offdiag_mean = on ? osum / on : 0.0;
  for (std::size_t i = 0; i < std::min(nt, ni); ++i) {
    double worst = 0.0;
    for (std::size_t t = 0; t < nt; ++t)
      if (t != i)
        worst = std::max(worst, r.matrix[t][i]);
    if (worst > 0.0) {
      const double db = 10.0 * std::log10(r.matrix[i][i] / worst);
      r.worst_extinction_db = std::min(r.worst_extinction_db, db);
    }
  }
  return r;
}

inline CrosstalkReport crosstalk(const Design& design, const std::vector<ComplexField>& inputs,
                                 const std::vector<ComplexField>& targets, const PropagationSpec& prop = {})
{
  if (inputs.size() != targets.size())
    throw InvalidArgument("crosstalk needs as many targets as inputs");
  if (inputs.empty())
    throw InvalidArgument("crosstalk needs at least one input");
  return crosstalk_from_table(coupling_table(design, inputs, targets, prop));
}

/// Least-squares slope of log(eta) against log(m).
inline double fit_log_slope(const std::vector<int>& m_values, const std::vector<double>& eta)
{
  if (m_values.size() != eta.size() || m_values.size() < 2)
    throw InvalidArgument("slope fit needs at least two matching points");
  double sx = 0, sy = 0;
  const double n = static_cast<double>(m_values.size());
  for (std::size_t k = 0; k < eta.size(); ++k) {
    if (!(m_values[k] > 0) || !(eta[k] > 0.0))
      throw InvalidArgument("slope fit needs positive values");
    sx += std::log(static_cast<double>(m_values[k]));
    sy += std::log(eta[k]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    const double dx = std::log(static_cast<double>(m_values[k])) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(eta[k]) - my);
  }
  if (!(sxx > 0.0))
    throw InvalidArgument("slope fit needs distinct m values");
  return sxy / sxx;
}

/// First-order efficiency of one weak sinusoidal index grating read at Bragg
/// incidence: (pi dn L / lambda)^2.
inline double weak_grating_efficiency(double dn_amp, double thickness_um, double wavelength_um, double n0)
{
  if (!(dn_amp >= 0.0) || !(thickness_um >= 0.0) || !(wavelength_um > 0.0) || !(n0 >= 1.0))
    throw InvalidArgument("grating parameters out of range");
  const double a = pi * dn_amp * thickness_um / wavelength_um;
  const double eta = a * a;
  if (eta > 0.05)
    throw InvalidArgument("weak-coupling formula invalid");
  return eta;
}

/// Lateral sampling, slice count, background and wavelength of a grating
/// volume; the read beam is a normally incident plane wave on a periodic window.
struct HolographyGeometry
{
  Grid2D grid{64, 64, 0.5, 0.5};
  int nz = 32;
  double n0 = 1.5;
  double wavelength_um = default_wavelength_um;

  void validate() const
  {
    grid.validate();
    if (nz < 1)
      throw InvalidArgument("holography geometry needs nz >= 1");
    if (!(n0 >= 1.0) || !(wavelength_um > 0.0))
      throw InvalidArgument("holography geometry needs n0 >= 1 and a positive wavelength");
  }

  PropagationSpec propagation() const { return {TransferModel::exact, EvanescentPolicy::zero, 0.0}; }
};

/// Integer x-bins for m carriers, equally spaced from 20% to 60% of Nyquist.
inline std::vector<int> carrier_bins(const Grid2D& grid, int m)
{
  if (m < 1)
    throw InvalidArgument("need m >= 1 carriers");
  const double nyq = grid.nx / 2;
  const double lo = 0.2 * nyq, hi = 0.6 * nyq;
  std::vector<int> bins;
  for (int j = 0; j < m; ++j) {
    const double q = m == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (m - 1);
    bins.push_back(static_cast<int>(std::lround(q)));
  }
  for (std::size_t j = 1; j < bins.size(); ++j)
    if (bins[j] == bins[j - 1])
      throw InvalidArgument("aliasing: " + std::to_string(m) + " carriers do not fit between 20% and 60% of Nyquist");
  return bins;
}

/// Power fractions of `field` in the given x-bins (ky = 0).
inline std::vector<double> bin_fractions(const ComplexField& field, const std::vector<int>& bins)
{
  std::vector<Complex> spec(field.values().begin(), field.values().end());
  fft::forward(spec, field.grid());
  double total = 0.0;
  for (const auto& v : spec)
    total += std::norm(v);
  std::vector<double> out;
  const int nx = field.grid().nx;
  for (int q : bins)
    out.push_back(std::norm(spec[static_cast<std::size_t>((q % nx + nx) % nx)]) / total);
  return out;
}

struct EfficiencyPoint
{
  int m = 0;
  std::vector<int> bins;
  std::vector<double> eta_per_output;
  double eta_mean = 0.0;
};

struct EfficiencyCurve
{
  std::vector<int> m_values;
  /// Mean per-output efficiency at each m.
  std::vector<double> eta_per_output;
  double fitted_log_slope = 0.0;
  std::vector<EfficiencyPoint> points;
};

inline EfficiencyCurve make_curve(std::vector<EfficiencyPoint> points)
{
  EfficiencyCurve c;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k > 0 && points[k].m <= points[k - 1].m)
      throw InvalidArgument("m values must be strictly increasing");
    c.m_values.push_back(points[k].m);
    c.eta_per_output.push_back(points[k].eta_mean);
  }
  c.fitted_log_slope = c.m_values.size() >= 2 ? fit_log_slope(c.m_values, c.eta_per_output)
                                              : std::numeric_limits<double>::quiet_NaN();
  c.points = std::move(points);
  return c;
}

/// Volume holding the sum of Bragg-matched slanted gratings, one per bin,
/// each of amplitude dn_budget / bins.size(). The grating vector of bin q
/// is (Kx, kz - k) so that it couples the normal read beam into order q.
inline IndexVolume grating_volume(const std::vector<int>& bins, double dn_budget, double thickness_um,
                                  const HolographyGeometry& geo)
{
  geo.validate();
  if (bins.empty())
    throw InvalidArgument("need at least one grating");
  if (!(dn_budget >= 0.0) || !(thickness_um > 0.0))
    throw InvalidArgument("grating budget and thickness must be positive");
  const auto& g = geo.grid;
  const double k = 2.0 * pi * geo.n0 / geo.wavelength_um;
  const double dz = thickness_um / geo.nz;
  const double amp = dn_budget / static_cast<double>(bins.size());
  IndexVolume vol(g, geo.nz, dz, geo.n0, -dn_budget, dn_budget);
  for (int q : bins) {
    if (std::abs(q) >= g.nx / 2)
      throw InvalidArgument("aliasing: carrier bin " + std::to_string(q) + " beyond Nyquist");
    const double kx = 2.0 * pi * q / g.width();
    if (!(kx * kx < k * k))
      throw InvalidArgument("aliasing: carrier bin " + std::to_string(q) + " does not propagate");
    const double kz_shift = std::sqrt(k * k - kx * kx) - k;
    for (int z = 0; z < geo.nz; ++z) {
      const double zc = (z + 0.5) * dz;
      auto s = vol.slice(z);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          s[g.index(i, j)] += amp * std::cos(kx * g.x(i) + kz_shift * zc);
    }
  }
  vol.clip_to_bounds();
  return vol;
}

inline ComplexField read_beam(const HolographyGeometry& geo)
{
  return plane_wave(geo.grid, geo.wavelength_um, 0.0, 0.0);
}

/// Superposition of m equal-amplitude gratings, read once; per-order
/// first-order efficiencies.
inline EfficiencyPoint superposed_grating_efficiency(int m, double dn_budget, double thickness_um,
                                                     const HolographyGeometry& geo = {})
{
  EfficiencyPoint p;
  p.m = m;
  p.bins = carrier_bins(geo.grid, m);
  const auto vol = grating_volume(p.bins, dn_budget, thickness_um, geo);
  const auto out = bpm(vol, read_beam(geo), geo.propagation());
  p.eta_per_output = bin_fractions(out, p.bins);
  for (double e : p.eta_per_output)
    p.eta_mean += e;
  p.eta_mean /= m;
  return p;
}

/// Unit-power superposition of the tilted plane waves on the given bins.
inline ComplexField fanout_target(const Grid2D& grid, double wavelength_um, const std::vector<int>& bins)
{
  ComplexField t(grid, wavelength_um);
  for (int q : bins) {
    const double kx = 2.0 * pi * q / grid.width();
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        t(i, j) += std::polar(1.0, kx * grid.x(i));
  }
  return normalize(t);
}

struct FanoutConfig
{
  HolographyGeometry geometry{};
  double thickness_um = 16.0;
  OptimizerConfig optimizer{2.5e-4, 0.9, 0.999, 300, 1, Projection::clip};
};

struct FanoutRun
{
  EfficiencyPoint point;
  DesignRun run;
};

/// Per-voxel design of a 1 -> m fanout under |dn| <= dn_budget. The single
/// task pair maps the read beam onto the equal superposition of the m
/// output orders; eta_per_output is the power landing in each order.
inline FanoutRun optimized_fanout_run(int m, double dn_budget, const FanoutConfig& config = {})
{
  const auto& geo = config.geometry;
  geo.validate();
  FanoutRun r;
  r.point.m = m;
  r.point.bins = carrier_bins(geo.grid, m);
  const double dz = config.thickness_um / geo.nz;
  const auto input = read_beam(geo);
  MappingTask task({{input, fanout_target(geo.grid, geo.wavelength_um, r.point.bins), 1.0}});
  const auto init = initial_volume(geo.grid, geo.nz, dz, geo.n0, -dn_budget, dn_budget, config.optimizer.seed);
  r.run = optimize(task, init, {LossKind::mode_coupling, 0.0}, config.optimizer, geo.propagation());
  const auto out = propagate(r.run.result, input, geo.propagation());
  r.point.eta_per_output = bin_fractions(out, r.point.bins);
  for (double e : r.point.eta_per_output)
    r.point.eta_mean += e;
  r.point.eta_mean /= m;
  return r;
}

inline EfficiencyPoint optimized_fanout_efficiency(int m, double dn_budget, const FanoutConfig& config = {})
{
  return optimized_fanout_run(m, dn_budget, config).point;
}

/// Grid, slice count and index bounds of a design volume.
struct VolumeShape
{
  Grid2D grid{64, 64, 0.25, 0.25};
  int nz = 48;
  double dz = 1.0;
  double n0 = 1.5;
  double dn_min = 0.0;
  double dn_max = 0.05;

  IndexVolume initial(std::uint64_t seed) const { return initial_volume(grid, nz, dz, n0, dn_min, dn_max, seed); }
};

struct ExperimentConfig
{
  OptimizerConfig optimizer{2e-3, 0.9, 0.999, 300, 1, Projection::clip};
  LossSpec loss{};
  PropagationSpec propagation{};
};

struct ExperimentResult
{
  DesignRun run;
  CrosstalkReport report;
  std::vector<ComplexField> inputs;
  std::vector<ComplexField> targets;
};

inline ExperimentResult run_mapping(const std::vector<ComplexField>& inputs, const std::vector<ComplexField>& targets,
                                    const Design& initial, const ExperimentConfig& config)
{
  ExperimentResult r;
  auto task = MappingTask::uniform(inputs, targets);
  for (const auto& p : task.pairs()) {
    r.inputs.push_back(p.input);
    r.targets.push_back(p.target);
  }
  r.run = optimize(task, initial, config.loss, config.optimizer, config.propagation);
  r.report = crosstalk_from_table(r.run.coupling_after);
  return r;
}

inline constexpr double lantern_apodization = 0.1;

/// Tilted plane waves (x-angles paired with y-angles, missing y-angles are 0)
/// mapped in order onto the fiber's LP modes.
inline ExperimentResult lantern_experiment(const FiberSpec& fiber, const std::vector<double>& angles_x,
                                           const std::vector<double>& angles_y, const VolumeShape& shape = {},
                                           const ExperimentConfig& config = {})
{
  if (angles_x.empty())
    throw InvalidArgument("lantern needs at least one input angle");
  if (angles_y.size() > angles_x.size())
    throw InvalidArgument("more y-angles than x-angles");
  const auto modes = lp_modes(fiber, shape.grid);
  if (angles_x.size() > modes.size())
    throw InvalidArgument("task overdetermined for fiber");
  std::vector<ComplexField> in, out;
  for (std::size_t k = 0; k < angles_x.size(); ++k) {
    const double ty = k < angles_y.size() ? angles_y[k] : 0.0;
    in.push_back(plane_wave(shape.grid, fiber.wavelength_um, angles_x[k], ty, lantern_apodization));
    out.push_back(modes[k].field);
  }
  return run_mapping(in, out, shape.initial(config.optimizer.seed), config);
}

/// Default lantern inputs: plane waves tilted by +-1, +-2, ... FFT bins along x.
inline std::vector<double> lantern_angles(const Grid2D& grid, double wavelength_um, int count)
{
  std::vector<double> a;
  for (int k = 0; k < count; ++k) {
    const int q = (k / 2 + 1) * (k % 2 == 0 ? 1 : -1);
    a.push_back(bin_angle(grid, wavelength_um, q));
  }
  return a;
}

struct HaarGrinLayout
{
  double patch_um = 6.0;
  double spot_radius_um = 1.5;
  double ring_radius_um = 6.0;
  double wavelength_um = default_wavelength_um;
};

struct HaarGrinPair
{
  HaarKind kind;
  bool minus_lobe;
  Point2 target_center;
};

/// Pair list: each signed kind contributes its plus and minus lobe, the
/// uniform kind one input. Uniform maps to the centre spot; the remaining
/// pairs take the ring positions in order.
inline std::vector<HaarGrinPair> haar_grin_pairs(const std::vector<HaarKind>& kinds, const HaarGrinLayout& layout)
{
  std::vector<HaarGrinPair> pairs;
  for (auto k : kinds) {
    pairs.push_back({k, false, {}});
    if (k != HaarKind::uniform)
      pairs.push_back({k, true, {}});
  }
  const bool has_uniform = std::find(kinds.begin(), kinds.end(), HaarKind::uniform) != kinds.end();
  std::size_t ring_count = pairs.size() - (has_uniform ? 1 : 0);
  std::size_t slot = 0;
  for (auto& p : pairs) {
    if (p.kind == HaarKind::uniform && has_uniform) {
      p.target_center = {};
      continue;
    }
    const double phi = 2.0 * pi * static_cast<double>(slot++) / static_cast<double>(ring_count);
    p.target_center = {layout.ring_radius_um * std::cos(phi), layout.ring_radius_um * std::sin(phi)};
  }
  return pairs;
}

inline VolumeShape haar_grin_default_shape() { return {Grid2D{64, 64, 0.5, 0.5}, 48, 2.0, 1.5, 0.0, 0.05}; }

inline ExperimentResult haar_grin_experiment(const std::vector<HaarKind>& kinds, const VolumeShape& shape,
                                             const ExperimentConfig& config = {}, const HaarGrinLayout& layout = {})
{
  if (kinds.empty())
    throw InvalidArgument("Haar GRIN experiment needs at least one kind");
  for (std::size_t a = 0; a < kinds.size(); ++a)
    for (std::size_t b = a + 1; b < kinds.size(); ++b)
      if (kinds[a] == kinds[b])
        throw InvalidArgument("Haar kinds must be distinct");
  std::vector<ComplexField> in, out;
  for (const auto& p : haar_grin_pairs(kinds, layout)) {
    const auto masks = haar_mask_field(shape.grid, layout.wavelength_um, p.kind, layout.patch_um);
    in.push_back(p.minus_lobe ? *masks.minus : masks.plus);
    out.push_back(spot_target(shape.grid, layout.wavelength_um, p.target_center, layout.spot_radius_um));
  }
  return run_mapping(in, out, shape.initial(config.optimizer.seed), config);
}

/// Intensity-weighted centroid of |field|^2.
inline Point2 intensity_centroid(const ComplexField& f)
{
  const auto& g = f.grid();
  double s = 0, sx = 0, sy = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double w = std::norm(f(i, j));
      s += w;
      sx += w * g.x(i);
      sy += w * g.y(j);
    }
  if (!(s > 0.0))
    throw InvalidArgument("degenerate field");
  return {sx / s, sy / s};
}

} // namespace ove
