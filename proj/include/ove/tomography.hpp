#pragma once

// Learning tomography: scalar loss of a design over a MappingTask, its exact
// adjoint gradient with respect to every voxel (or layer phase), and a
// bias-corrected momentum optimizer with bound handling.

#include "ove/lattice.hpp"
#include "ove/parallel.hpp"
#include "ove/propagation.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

namespace ove
{

using Design = std::variant<IndexVolume, LayeredElement>;

enum class LossKind
{
  mode_coupling, // sum_p w_p (1 - |<target_p, out_p>|^2)
  intensity_mse, // sum_p w_p sum (|out_p|^2 - |target_p|^2)^2 dx dy
};

struct LossSpec
{
  LossKind kind = LossKind::mode_coupling;
  double tv_weight = 0.0;

  void validate() const
  {
    if (!(tv_weight >= 0.0) || !std::isfinite(tv_weight))
      throw InvalidArgument("tv_weight must be non-negative");
  }
};

enum class Projection
{
  clip,
  sigmoid,
};

struct OptimizerConfig
{
  double step_size = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int max_iters = 200;
  std::uint64_t seed = 1;
  Projection projection = Projection::clip;

  void validate() const
  {
    if (!(step_size >= 0.0) || !std::isfinite(step_size))
      throw InvalidArgument("step_size must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw InvalidArgument("momentum coefficients must lie in [0, 1)");
    if (max_iters < 1)
      throw InvalidArgument("max_iters must be >= 1");
  }

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Couplings |<target_t, out_i>|^2, indexed [t][i].
using CouplingTable = std::vector<std::vector<double>>;

struct DesignRun
{
  OptimizerConfig config;
  std::vector<double> loss_history;
  Design result;
  CouplingTable coupling_before;
  CouplingTable coupling_after;
};

inline const Grid2D& design_grid(const Design& d)
{
  return std::visit([](const auto& x) -> const Grid2D& {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, IndexVolume>)
      return x.grid();
    else
      return x.grid;
  }, d);
}

inline ComplexField propagate(const Design& design, const ComplexField& input, const PropagationSpec& spec = {})
{
  return std::visit([&](const auto& d) {
    if constexpr (std::is_same_v<std::decay_t<decltype(d)>, IndexVolume>)
      return bpm(d, input, spec);
    else
      return layered(d, input, spec);
  }, design);
}

/// Number of free parameters: voxels or phase samples.
inline std::size_t parameter_count(const Design& design)
{
  return std::visit([](const auto& d) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(d)>, IndexVolume>)
      return d.voxel_count();
    else
      return d.parameter_count();
  }, design);
}

inline std::vector<double> get_parameters(const Design& design)
{
  if (const auto* v = std::get_if<IndexVolume>(&design))
    return {v->dn().begin(), v->dn().end()};
  const auto& e = std::get<LayeredElement>(design);
  std::vector<double> p;
  p.reserve(e.parameter_count());
  for (const auto& layer : e.layers)
    p.insert(p.end(), layer.begin(), layer.end());
  return p;
}

/// Copies parameters into the design without bound checks.
inline void set_parameters(Design& design, std::span<const double> p)
{
  if (p.size() != parameter_count(design))
    throw InvalidArgument("parameter count does not match design");
  if (auto* v = std::get_if<IndexVolume>(&design)) {
    std::copy(p.begin(), p.end(), v->dn().begin());
    return;
  }
  auto& e = std::get<LayeredElement>(design);
  std::size_t k = 0;
  for (auto& layer : e.layers)
    for (auto& x : layer)
      x = p[k++];
}

namespace detail
{

inline constexpr double tv_epsilon = 1e-4;

struct Shape3
{
  int nx, ny, nz;
};

inline Shape3 parameter_shape(const Design& d)
{
  const auto& g = design_grid(d);
  if (const auto* v = std::get_if<IndexVolume>(&d))
    return {g.nx, g.ny, v->nz()};
  return {g.nx, g.ny, static_cast<int>(std::get<LayeredElement>(d).layers.size())};
}

} // namespace detail

/// Smoothed isotropic total variation with forward differences:
/// sum_v sqrt(|D p(v)|^2 + eps^2) - eps, differences across the far edge taken as zero.
/// Adds weight * dTV/dp to grad when grad is non-empty.
inline double total_variation(std::span<const double> p, int nx, int ny, int nz, double weight = 1.0,
                              std::span<double> grad = {})
{
  const double eps = detail::tv_epsilon;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = static_cast<std::size_t>(nx) * ny;
  double tv = 0.0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const std::size_t v = x * sx + y * sy + z * sz;
        const double dx = x + 1 < nx ? p[v + sx] - p[v] : 0.0;
        const double dy = y + 1 < ny ? p[v + sy] - p[v] : 0.0;
        const double dz = z + 1 < nz ? p[v + sz] - p[v] : 0.0;
        const double mag = std::sqrt(dx * dx + dy * dy + dz * dz + eps * eps);
        tv += mag - eps;
        if (!grad.empty()) {
          const double s = weight / mag;
          if (x + 1 < nx) {
            grad[v + sx] += s * dx;
            grad[v] -= s * dx;
          }
          if (y + 1 < ny) {
            grad[v + sy] += s * dy;
            grad[v] -= s * dy;
          }
          if (z + 1 < nz) {
            grad[v + sz] += s * dz;
            grad[v] -= s * dz;
          }
        }
      }
  return weight * tv;
}

struct Evaluation
{
  double loss = 0.0;
  std::vector<double> gradient;
  /// Per-pair values of the data term, before weighting.
  std::vector<double> pair_terms;
};

inline void require_task_fits(const Design& design, const MappingTask& task)
{
  if (!(design_grid(design) == task.grid()))
    throw GridMismatch("design and task grids differ");
}

/// Loss and, when requested, its exact gradient under the discretized forward model.
inline Evaluation evaluate(const Design& design, const MappingTask& task, const LossSpec& spec,
                           const PropagationSpec& prop = {}, bool want_gradient = true)
{
  spec.validate();
  require_task_fits(design, task);
  const auto& grid = task.grid();
  const double area = grid.cell_area();
  const std::size_t np = parameter_count(design);
  const std::size_t P = task.size();

  std::vector<double> terms(P, 0.0);
  std::vector<std::vector<double>> pair_grads(want_gradient ? P : 0);

  auto run_pairs = [&](const auto& op) {
    parallel_for(P, [&](std::size_t p) {
      const auto& pair = task.pairs()[p];
      std::vector<Complex> u(pair.input.values().begin(), pair.input.values().end());
      ForwardTrace trace;
      op.forward(u, want_gradient ? &trace : nullptr);
      const auto t = pair.target.values();
      std::vector<Complex> source;
      if (want_gradient)
        source.resize(u.size());
      if (spec.kind == LossKind::mode_coupling) {
        Complex c{};
        for (std::size_t k = 0; k < u.size(); ++k)
          c += std::conj(t[k]) * u[k];
        c *= area;
        terms[p] = 1.0 - std::norm(c);
        if (want_gradient)
          for (std::size_t k = 0; k < u.size(); ++k)
            source[k] = -pair.weight * area * c * t[k];
      } else {
        double sum = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
          const double diff = std::norm(u[k]) - std::norm(t[k]);
          sum += diff * diff;
          if (want_gradient)
            source[k] = 2.0 * pair.weight * area * diff * u[k];
        }
        terms[p] = sum * area;
      }
      if (want_gradient) {
        pair_grads[p].assign(np, 0.0);
        op.accumulate_gradient(trace, std::move(source), pair_grads[p]);
      }
    });
  };

  if (const auto* v = std::get_if<IndexVolume>(&design))
    run_pairs(BpmOperator(*v, task.wavelength(), prop));
  else
    run_pairs(LayeredOperator(std::get<LayeredElement>(design), task.wavelength(), prop));

  Evaluation ev;
  ev.pair_terms = terms;
  for (std::size_t p = 0; p < P; ++p)
    ev.loss += task.pairs()[p].weight * terms[p];
  if (want_gradient) {
    ev.gradient.assign(np, 0.0);
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t k = 0; k < np; ++k)
        ev.gradient[k] += pair_grads[p][k];
  }
  if (spec.tv_weight > 0.0) {
    const auto params = get_parameters(design);
    const auto s = detail::parameter_shape(design);
    ev.loss += total_variation(params, s.nx, s.ny, s.nz, spec.tv_weight,
                               want_gradient ? std::span<double>(ev.gradient) : std::span<double>{});
  }
  return ev;
}

inline double loss(const Design& design, const MappingTask& task, const LossSpec& spec,
                   const PropagationSpec& prop = {})
{
  return evaluate(design, task, spec, prop, false).loss;
}

inline std::vector<double> gradient(const Design& design, const MappingTask& task, const LossSpec& spec,
                                    const PropagationSpec& prop = {})
{
  return evaluate(design, task, spec, prop, true).gradient;
}

inline CouplingTable coupling_table(const Design& design, const std::vector<ComplexField>& inputs,
                                    const std::vector<ComplexField>& targets, const PropagationSpec& prop = {})
{
  std::vector<ComplexField> outputs(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) { outputs[i] = propagate(design, inputs[i], prop); });
  CouplingTable table(targets.size(), std::vector<double>(inputs.size(), 0.0));
  for (std::size_t t = 0; t < targets.size(); ++t)
    for (std::size_t i = 0; i < inputs.size(); ++i)
      table[t][i] = std::norm(overlap(targets[t], outputs[i]));
  return table;
}

inline CouplingTable coupling_table(const Design& design, const MappingTask& task, const PropagationSpec& prop = {})
{
  std::vector<ComplexField> in, out;
  for (const auto& p : task.pairs()) {
    in.push_back(p.input);
    out.push_back(p.target);
  }
  return coupling_table(design, in, out, prop);
}

/// Uniform doubles in [0, 1) from the top 53 bits of a 64-bit Mersenne twister.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 engine_;
};

/// Bounds midpoint plus seeded uniform noise of amplitude 1e-4 dn_max.
inline IndexVolume initial_volume(const Grid2D& grid, int nz, double dz, double n0, double dn_min, double dn_max,
                                  std::uint64_t seed)
{
  IndexVolume v(grid, nz, dz, n0, dn_min, dn_max);
  Rng rng(seed);
  const double mid = 0.5 * (dn_min + dn_max);
  const double amp = 1e-4 * std::abs(dn_max);
  for (auto& x : v.dn())
    x = mid + amp * (2.0 * rng.uniform() - 1.0);
  v.clip_to_bounds();
  return v;
}

namespace detail
{

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Maps optimizer variables to design parameters and back-propagates gradients.
struct Parameterization
{
  bool volume = false;
  Projection projection = Projection::clip;
  double lo = 0.0, hi = 0.0;

  bool reparameterized() const { return volume && projection == Projection::sigmoid; }

  std::vector<double> to_variables(std::vector<double> p) const
  {
    if (!reparameterized())
      return p;
    const double span = hi - lo;
    for (auto& x : p) {
      const double s = std::clamp((x - lo) / span, 1e-9, 1.0 - 1e-9);
      x = std::log(s / (1.0 - s));
    }
    return p;
  }

  std::vector<double> to_parameters(const std::vector<double>& var) const
  {
    std::vector<double> p = var;
    if (reparameterized()) {
      for (auto& x : p)
        x = std::clamp(lo + (hi - lo) * sigmoid(x), lo, hi);
    } else if (volume) {
      for (auto& x : p)
        x = std::clamp(x, lo, hi);
    }
    return p;
  }

  void chain(const std::vector<double>& var, std::vector<double>& grad) const
  {
    if (!reparameterized())
      return;
    for (std::size_t k = 0; k < var.size(); ++k) {
      const double s = sigmoid(var[k]);
      grad[k] *= (hi - lo) * s * (1.0 - s);
    }
  }
};

inline bool all_finite(const std::vector<double>& v)
{
  for (double x : v)
    if (!std::isfinite(x))
      return false;
  return true;
}

} // namespace detail

/// First-order momentum descent. Each iteration proposes a bias-corrected
/// adaptive step; a proposal that raises the loss is rejected and the step
/// size halved, so loss_history is non-increasing. With sigmoid projection
/// the step size is measured in dn units at the steepest point of the map.
inline DesignRun optimize(const MappingTask& task, const Design& initial, const LossSpec& loss_spec,
                          const OptimizerConfig& config, const PropagationSpec& prop = {})
{
  config.validate();
  loss_spec.validate();
  require_task_fits(initial, task);

  detail::Parameterization param;
  if (const auto* v = std::get_if<IndexVolume>(&initial)) {
    v->validate_bounds();
    param.volume = true;
    param.projection = config.projection;
    param.lo = v->dn_min();
    param.hi = v->dn_max();
    if (config.projection == Projection::sigmoid && !(param.hi > param.lo))
      throw InvalidArgument("sigmoid projection needs dn_max > dn_min");
  }

  Design current = initial;
  std::vector<double> var = param.to_variables(get_parameters(initial));

  auto eval_at = [&](const std::vector<double>& x, Design& d, int iteration) {
    set_parameters(d, param.to_parameters(x));
    auto ev = evaluate(d, task, loss_spec, prop, true);
    param.chain(x, ev.gradient);
    if (!std::isfinite(ev.loss) || !detail::all_finite(ev.gradient))
      throw OptimizerAbort("non-finite loss or gradient", iteration);
    return ev;
  };

  DesignRun run;
  run.config = config;
  run.coupling_before = coupling_table(initial, task, prop);

  auto ev = eval_at(var, current, 0);
  double L = ev.loss;
  std::vector<double> g = std::move(ev.gradient);
  run.loss_history.push_back(L);

  double lr = config.step_size;
  if (param.reparameterized())
    lr = config.step_size * 4.0 / (param.hi - param.lo);
  const double eps = 1e-12;
  std::vector<double> m(var.size(), 0.0), s(var.size(), 0.0);
  int t = 0;
  Design candidate = current;
  std::vector<double> m_new(var.size()), s_new(var.size()), trial(var.size());

  for (int it = 1; it < config.max_iters; ++it) {
    const int t_new = t + 1;
    const double c1 = 1.0 - std::pow(config.beta1, t_new);
    const double c2 = 1.0 - std::pow(config.beta2, t_new);
    for (std::size_t k = 0; k < var.size(); ++k) {
      m_new[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      s_new[k] = config.beta2 * s[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mh = m_new[k] / c1;
      const double sh = s_new[k] / c2;
      trial[k] = var[k] - lr * mh / (std::sqrt(sh) + eps);
    }
    if (param.volume && !param.reparameterized())
      for (auto& x : trial)
        x = std::clamp(x, param.lo, param.hi);

    auto cand = eval_at(trial, candidate, it);
    if (cand.loss <= L) {
      var.swap(trial);
      std::swap(current, candidate);
      m.swap(m_new);
      s.swap(s_new);
      t = t_new;
      L = cand.loss;
      g = std::move(cand.gradient);
    } else {
      lr *= 0.5;
    }
    run.loss_history.push_back(L);
  }

  set_parameters(current, param.to_parameters(var));
  run.result = std::move(current);
  run.coupling_after = coupling_table(run.result, task, prop);
  return run;
}

} // namespace ove
