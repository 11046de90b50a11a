#pragma once

// Flat "key.path = value" run configuration. Lines starting with '#' are
// comments; every key is optional and unknown keys are rejected. Parsing
// never throws: it returns the config with defaults filled in together with
// a list of errors, each naming the offending key.

#include "ove/experiments.hpp"
#include "ove/haar.hpp"
#include "ove/io.hpp"
#include "ove/sources.hpp"
#include "ove/tomography.hpp"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace ove
{

enum class DesignFamily
{
  volume,
  layered,
};

enum class TaskKind
{
  lantern,
  haar_grin,
  fanout,
  custom,
};

struct DesignConfig
{
  double wavelength_um = default_wavelength_um;
  double n0 = 1.5;
  double dn_min = 0.0;
  double dn_max = 0.05;
  Grid2D grid{64, 64, 0.25, 0.25};
  DesignFamily family = DesignFamily::volume;
  int nz = 48;
  double dz = 1.0;
  int num_layers = 3;
  double gap_um = 10.0;
  double n_gap = 1.0;

  TaskKind task = TaskKind::lantern;
  double fiber_core_radius_um = 5.0;
  double fiber_n_core = 1.45;
  double fiber_n_clad = 1.444;
  int lantern_count = 2;
  /// Input tilts in degrees; empty selects +-1, +-2, ... FFT bins along x.
  std::vector<double> angles_x_deg;
  std::vector<double> angles_y_deg;
  std::vector<HaarKind> haar_kinds{HaarKind::vertical, HaarKind::horizontal, HaarKind::diagonal, HaarKind::uniform};
  double haar_patch_um = 6.0;
  double haar_spot_radius_um = 1.5;
  double haar_ring_radius_um = 6.0;
  int fanout_m = 2;
  std::vector<std::string> custom_inputs;
  std::vector<std::string> custom_targets;

  OptimizerConfig optimizer{};
  LossKind loss = LossKind::mode_coupling;
  double tv_weight = 0.0;
  PropagationSpec propagation{};

  friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

struct ConfigError
{
  std::string key;
  std::string reason;

  std::string message() const { return key.empty() ? reason : key + ": " + reason; }
};

struct ConfigResult
{
  DesignConfig config;
  std::vector<ConfigError> errors;

  bool ok() const { return errors.empty(); }

  std::string summary() const
  {
    std::string s;
    for (const auto& e : errors)
      s += (s.empty() ? "" : "; ") + e.message();
    return s;
  }
};

inline std::string_view to_string(TaskKind k)
{
  switch (k) {
  case TaskKind::lantern: return "lantern";
  case TaskKind::haar_grin: return "haar-grin";
  case TaskKind::fanout: return "fanout";
  case TaskKind::custom: return "custom";
  }
  return "?";
}

namespace detail
{

inline std::string trim(std::string_view s)
{
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos)
    return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline std::vector<std::string> split_list(const std::string& v)
{
  std::vector<std::string> out;
  if (trim(v).empty())
    return out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ','))
    out.push_back(trim(cur));
  return out;
}

template <class T> std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f)
{
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k)
    s += (k ? "," : "") + f(v[k]);
  return s;
}

// One entry per accepted key: how to read it and how to write it back.
struct KeyHandler
{
  std::string key;
  std::function<std::string(DesignConfig&, const std::string&)> set; // returns an error reason or ""
  std::function<std::string(const DesignConfig&)> get;
};

inline std::string set_double(double& dst, const std::string& v)
{
  double x;
  if (!io::parse_double(v, x) || !std::isfinite(x))
    return "expected a finite number, got '" + v + "'";
  dst = x;
  return {};
}

inline std::string set_int(int& dst, const std::string& v)
{
  long long x;
  if (!io::parse_int(v, x) || x < -(1LL << 31) || x > (1LL << 31) - 1)
    return "expected an integer, got '" + v + "'";
  dst = static_cast<int>(x);
  return {};
}

inline std::vector<KeyHandler> key_table()
{
  using C = DesignConfig;
  std::vector<KeyHandler> t;
  auto real = [&t](std::string key, double C::*member) {
    t.push_back({key, [member](C& c, const std::string& v) { return set_double(c.*member, v); },
                 [member](const C& c) { return io::format_number(c.*member); }});
  };
  auto integer = [&t](std::string key, int C::*member) {
    t.push_back({key, [member](C& c, const std::string& v) { return set_int(c.*member, v); },
                 [member](const C& c) { return std::to_string(c.*member); }});
  };
  auto list = [&t](std::string key, std::vector<double> C::*member) {
    t.push_back({key,
                 [member](C& c, const std::string& v) {
                   std::vector<double> out;
                   for (const auto& item : split_list(v)) {
                     double x;
                     if (!io::parse_double(item, x) || !std::isfinite(x))
                       return "expected a comma-separated list of numbers, got '" + v + "'";
                     out.push_back(x);
                   }
                   c.*member = out;
                   return std::string();
                 },
                 [member](const C& c) {
                   return join<double>(c.*member, [](const double& x) { return io::format_number(x); });
                 }});
  };
  auto paths = [&t](std::string key, std::vector<std::string> C::*member) {
    t.push_back({key,
                 [member](C& c, const std::string& v) {
                   c.*member = split_list(v);
                   return std::string();
                 },
                 [member](const C& c) { return join<std::string>(c.*member, [](const std::string& s) { return s; }); }});
  };
  auto choice = [&t](std::string key, auto getter, auto setter) { t.push_back({key, setter, getter}); };

  real("wavelength_um", &C::wavelength_um);
  real("n0", &C::n0);
  real("dn_min", &C::dn_min);
  real("dn_max", &C::dn_max);
  t.push_back({"grid.nx", [](C& c, const std::string& v) { return set_int(c.grid.nx, v); },
               [](const C& c) { return std::to_string(c.grid.nx); }});
  t.push_back({"grid.ny", [](C& c, const std::string& v) { return set_int(c.grid.ny, v); },
               [](const C& c) { return std::to_string(c.grid.ny); }});
  t.push_back({"grid.dx", [](C& c, const std::string& v) { return set_double(c.grid.dx, v); },
               [](const C& c) { return io::format_number(c.grid.dx); }});
  t.push_back({"grid.dy", [](C& c, const std::string& v) { return set_double(c.grid.dy, v); },
               [](const C& c) { return io::format_number(c.grid.dy); }});
  choice(
      "design.family", [](const C& c) { return std::string(c.family == DesignFamily::volume ? "volume" : "layered"); },
      [](C& c, const std::string& v) {
        if (v == "volume")
          c.family = DesignFamily::volume;
        else if (v == "layered")
          c.family = DesignFamily::layered;
        else
          return "expected volume or layered, got '" + v + "'";
        return std::string();
      });
  integer("volume.nz", &C::nz);
  real("volume.dz", &C::dz);
  integer("layered.num_layers", &C::num_layers);
  real("layered.gap_um", &C::gap_um);
  real("layered.n_gap", &C::n_gap);
  choice(
      "task.kind", [](const C& c) { return std::string(to_string(c.task)); },
      [](C& c, const std::string& v) {
        if (v == "lantern")
          c.task = TaskKind::lantern;
        else if (v == "haar-grin")
          c.task = TaskKind::haar_grin;
        else if (v == "fanout")
          c.task = TaskKind::fanout;
        else if (v == "custom")
          c.task = TaskKind::custom;
        else
          return "expected lantern, haar-grin, fanout or custom, got '" + v + "'";
        return std::string();
      });
  real("task.fiber.core_radius_um", &C::fiber_core_radius_um);
  real("task.fiber.n_core", &C::fiber_n_core);
  real("task.fiber.n_clad", &C::fiber_n_clad);
  integer("task.lantern.count", &C::lantern_count);
  list("task.angles_x_deg", &C::angles_x_deg);
  list("task.angles_y_deg", &C::angles_y_deg);
  choice(
      "task.haar.kinds",
      [](const C& c) {
        return join<HaarKind>(c.haar_kinds, [](const HaarKind& k) { return std::string(to_string(k)); });
      },
      [](C& c, const std::string& v) {
        std::vector<HaarKind> kinds;
        for (const auto& item : split_list(v)) {
          try {
            kinds.push_back(parse_haar_kind(item));
          } catch (const InvalidArgument& e) {
            return std::string(e.what());
          }
        }
        c.haar_kinds = kinds;
        return std::string();
      });
  real("task.haar.patch_um", &C::haar_patch_um);
  real("task.haar.spot_radius_um", &C::haar_spot_radius_um);
  real("task.haar.ring_radius_um", &C::haar_ring_radius_um);
  integer("task.fanout.m", &C::fanout_m);
  paths("task.custom.inputs", &C::custom_inputs);
  paths("task.custom.targets", &C::custom_targets);
  t.push_back({"optimizer.step_size", [](C& c, const std::string& v) { return set_double(c.optimizer.step_size, v); },
               [](const C& c) { return io::format_number(c.optimizer.step_size); }});
  t.push_back({"optimizer.beta1", [](C& c, const std::string& v) { return set_double(c.optimizer.beta1, v); },
               [](const C& c) { return io::format_number(c.optimizer.beta1); }});
  t.push_back({"optimizer.beta2", [](C& c, const std::string& v) { return set_double(c.optimizer.beta2, v); },
               [](const C& c) { return io::format_number(c.optimizer.beta2); }});
  t.push_back({"optimizer.max_iters", [](C& c, const std::string& v) { return set_int(c.optimizer.max_iters, v); },
               [](const C& c) { return std::to_string(c.optimizer.max_iters); }});
  t.push_back({"optimizer.seed",
               [](C& c, const std::string& v) {
                 long long x;
                 if (!io::parse_int(v, x) || x < 0)
                   return "expected a non-negative integer, got '" + v + "'";
                 c.optimizer.seed = static_cast<std::uint64_t>(x);
                 return std::string();
               },
               [](const C& c) { return std::to_string(c.optimizer.seed); }});
  choice(
      "optimizer.projection",
      [](const C& c) { return std::string(c.optimizer.projection == Projection::clip ? "clip" : "sigmoid"); },
      [](C& c, const std::string& v) {
        if (v == "clip")
          c.optimizer.projection = Projection::clip;
        else if (v == "sigmoid")
          c.optimizer.projection = Projection::sigmoid;
        else
          return "expected clip or sigmoid, got '" + v + "'";
        return std::string();
      });
  real("optimizer.tv_weight", &C::tv_weight);
  choice(
      "optimizer.loss",
      [](const C& c) { return std::string(c.loss == LossKind::mode_coupling ? "mode_coupling" : "intensity_mse"); },
      [](C& c, const std::string& v) {
        if (v == "mode_coupling")
          c.loss = LossKind::mode_coupling;
        else if (v == "intensity_mse")
          c.loss = LossKind::intensity_mse;
        else
          return "expected mode_coupling or intensity_mse, got '" + v + "'";
        return std::string();
      });
  choice(
      "propagation.transfer_model",
      [](const C& c) {
        return std::string(c.propagation.transfer_model == TransferModel::exact ? "exact" : "fresnel");
      },
      [](C& c, const std::string& v) {
        if (v == "exact")
          c.propagation.transfer_model = TransferModel::exact;
        else if (v == "fresnel")
          c.propagation.transfer_model = TransferModel::fresnel;
        else
          return "expected exact or fresnel, got '" + v + "'";
        return std::string();
      });
  choice(
      "propagation.evanescent_policy",
      [](const C& c) { return std::string(c.propagation.evanescent == EvanescentPolicy::zero ? "zero" : "keep"); },
      [](C& c, const std::string& v) {
        if (v == "zero")
          c.propagation.evanescent = EvanescentPolicy::zero;
        else if (v == "keep")
          c.propagation.evanescent = EvanescentPolicy::keep;
        else
          return "expected zero or keep, got '" + v + "'";
        return std::string();
      });
  t.push_back({"propagation.absorber_width",
               [](C& c, const std::string& v) { return set_double(c.propagation.absorber_width, v); },
               [](const C& c) { return io::format_number(c.propagation.absorber_width); }});
  return t;
}

inline const std::vector<KeyHandler>& keys()
{
  static const std::vector<KeyHandler> table = key_table();
  return table;
}

inline void validate_config(const DesignConfig& c, std::vector<ConfigError>& errors)
{
  auto check = [&](bool ok, std::string key, std::string reason) {
    if (!ok)
      errors.push_back({std::move(key), std::move(reason)});
  };
  check(c.wavelength_um > 0.0, "wavelength_um", "must be positive");
  check(c.n0 >= 1.0, "n0", "must be >= 1");
  check(c.dn_min <= c.dn_max, "dn_min, dn_max", "dn_max must not be below dn_min");
  check(c.grid.nx >= 2, "grid.nx", "must be >= 2");
  check(c.grid.ny >= 2, "grid.ny", "must be >= 2");
  check(c.grid.dx > 0.0, "grid.dx", "must be positive");
  check(c.grid.dy > 0.0, "grid.dy", "must be positive");
  check(c.nz >= 1, "volume.nz", "must be >= 1");
  check(c.dz > 0.0, "volume.dz", "must be positive");
  check(c.num_layers >= 1, "layered.num_layers", "must be >= 1");
  check(c.gap_um >= 0.0, "layered.gap_um", "must be non-negative");
  check(c.n_gap >= 1.0, "layered.n_gap", "must be >= 1");
  check(c.fiber_core_radius_um > 0.0, "task.fiber.core_radius_um", "must be positive");
  check(c.fiber_n_core > c.fiber_n_clad && c.fiber_n_clad >= 1.0, "task.fiber.n_core, task.fiber.n_clad",
        "need n_core > n_clad >= 1");
  check(c.lantern_count >= 1, "task.lantern.count", "must be >= 1");
  check(c.angles_y_deg.size() <= c.angles_x_deg.size(), "task.angles_y_deg", "more y-angles than x-angles");
  for (double a : c.angles_x_deg)
    check(std::abs(a) < 90.0, "task.angles_x_deg", "angles must lie in (-90, 90)");
  for (double a : c.angles_y_deg)
    check(std::abs(a) < 90.0, "task.angles_y_deg", "angles must lie in (-90, 90)");
  check(!c.haar_kinds.empty(), "task.haar.kinds", "must list at least one kind");
  for (std::size_t a = 0; a < c.haar_kinds.size(); ++a)
    for (std::size_t b = a + 1; b < c.haar_kinds.size(); ++b)
      check(c.haar_kinds[a] != c.haar_kinds[b], "task.haar.kinds", "kinds must be distinct");
  check(c.haar_patch_um > 0.0, "task.haar.patch_um", "must be positive");
  check(c.haar_spot_radius_um > 0.0, "task.haar.spot_radius_um", "must be positive");
  check(c.haar_ring_radius_um >= 0.0, "task.haar.ring_radius_um", "must be non-negative");
  check(c.fanout_m >= 1, "task.fanout.m", "must be >= 1");
  if (c.task == TaskKind::custom) {
    check(!c.custom_inputs.empty(), "task.custom.inputs", "required when task.kind = custom");
    check(!c.custom_targets.empty(), "task.custom.targets", "required when task.kind = custom");
    check(c.custom_inputs.size() == c.custom_targets.size(), "task.custom.targets",
          "must list as many targets as inputs");
  }
  check(c.optimizer.step_size >= 0.0, "optimizer.step_size", "must be non-negative");
  check(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0, "optimizer.beta1", "must lie in [0, 1)");
  check(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0, "optimizer.beta2", "must lie in [0, 1)");
  check(c.optimizer.max_iters >= 1, "optimizer.max_iters", "must be >= 1");
  check(c.tv_weight >= 0.0, "optimizer.tv_weight", "must be non-negative");
  check(c.propagation.absorber_width >= 0.0 && c.propagation.absorber_width < 0.5, "propagation.absorber_width",
        "must lie in [0, 0.5)");
  if (c.family == DesignFamily::volume && c.optimizer.projection == Projection::sigmoid)
    check(c.dn_max > c.dn_min, "optimizer.projection", "sigmoid projection needs dn_max > dn_min");
}

} // namespace detail

inline ConfigResult parse_config(std::string_view text)
{
  ConfigResult r;
  std::vector<std::string> seen;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      r.errors.push_back({"", "line " + std::to_string(line_no) + ": expected key = value"});
      continue;
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto& table = detail::keys();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& h) { return h.key == key; });
    if (it == table.end()) {
      r.errors.push_back({key, "unknown key"});
      continue;
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      r.errors.push_back({key, "duplicate key"});
      continue;
    }
    seen.push_back(key);
    if (auto err = it->set(r.config, value); !err.empty())
      r.errors.push_back({key, err});
  }
  detail::validate_config(r.config, r.errors);
  return r;
}

/// Every key with its resolved value, one per line, in a fixed order.
inline std::string serialize_config(const DesignConfig& c)
{
  std::string out;
  for (const auto& h : detail::keys())
    out += h.key + " = " + h.get(c) + "\n";
  return out;
}

inline FiberSpec fiber_of(const DesignConfig& c)
{
  return {c.fiber_core_radius_um, c.fiber_n_core, c.fiber_n_clad, c.wavelength_um};
}

inline VolumeShape volume_shape_of(const DesignConfig& c) { return {c.grid, c.nz, c.dz, c.n0, c.dn_min, c.dn_max}; }

inline ExperimentConfig experiment_config_of(const DesignConfig& c)
{
  return {c.optimizer, {c.loss, c.tv_weight}, c.propagation};
}

inline HaarGrinLayout haar_layout_of(const DesignConfig& c)
{
  return {c.haar_patch_um, c.haar_spot_radius_um, c.haar_ring_radius_um, c.wavelength_um};
}

inline Design initial_design(const DesignConfig& c)
{
  if (c.family == DesignFamily::layered)
    return LayeredElement::uniform(c.grid, c.num_layers, c.gap_um, c.n_gap);
  return volume_shape_of(c).initial(c.optimizer.seed);
}

inline double degrees(double d) { return d * pi / 180.0; }

/// Inputs and targets of the configured task, before normalization.
inline std::pair<std::vector<ComplexField>, std::vector<ComplexField>> task_fields(const DesignConfig& c)
{
  std::vector<ComplexField> in, out;
  switch (c.task) {
  case TaskKind::lantern: {
    const auto fiber = fiber_of(c);
    const auto modes = lp_modes(fiber, c.grid);
    std::vector<double> ax, ay;
    if (c.angles_x_deg.empty()) {
      ax = lantern_angles(c.grid, c.wavelength_um, c.lantern_count);
    } else {
      for (double a : c.angles_x_deg)
        ax.push_back(degrees(a));
      for (double a : c.angles_y_deg)
        ay.push_back(degrees(a));
    }
    if (ax.size() > modes.size())
      throw InvalidArgument("task overdetermined for fiber");
    for (std::size_t k = 0; k < ax.size(); ++k) {
      in.push_back(plane_wave(c.grid, c.wavelength_um, ax[k], k < ay.size() ? ay[k] : 0.0, lantern_apodization));
      out.push_back(modes[k].field);
    }
    break;
  }
  case TaskKind::haar_grin: {
    const auto layout = haar_layout_of(c);
    for (const auto& p : haar_grin_pairs(c.haar_kinds, layout)) {
      const auto masks = haar_mask_field(c.grid, c.wavelength_um, p.kind, layout.patch_um);
      in.push_back(p.minus_lobe ? *masks.minus : masks.plus);
      out.push_back(spot_target(c.grid, c.wavelength_um, p.target_center, layout.spot_radius_um));
    }
    break;
  }
  case TaskKind::fanout:
    in.push_back(plane_wave(c.grid, c.wavelength_um, 0.0, 0.0));
    out.push_back(fanout_target(c.grid, c.wavelength_um, carrier_bins(c.grid, c.fanout_m)));
    break;
  case TaskKind::custom:
    for (const auto& p : c.custom_inputs)
      in.push_back(io::import_field(p));
    for (const auto& p : c.custom_targets)
      out.push_back(io::import_field(p));
    for (const auto& f : in)
      if (f.grid() != c.grid || f.wavelength() != c.wavelength_um)
        throw GridMismatch("custom field does not match the configured grid and wavelength");
    for (const auto& f : out)
      if (f.grid() != c.grid || f.wavelength() != c.wavelength_um)
        throw GridMismatch("custom field does not match the configured grid and wavelength");
    break;
  }
  return {in, out};
}

} // namespace ove
