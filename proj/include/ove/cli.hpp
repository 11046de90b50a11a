#pragma once

// Command-line front end. run_cli parses argv, runs one subcommand and
// returns the process exit code: 0 on success, 1 on a runtime failure (one
// diagnostic line on the error stream) and 2 on a usage error.

#include "ove/config.hpp"
#include "ove/experiments.hpp"
#include "ove/interconnect.hpp"
#include "ove/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace ove::cli
{

namespace fs = std::filesystem;

namespace detail
{

inline std::vector<int> parse_int_list(const std::string& s, const std::string& flag)
{
  std::vector<int> out;
  for (const auto& item : ove::detail::split_list(s)) {
    long long v;
    if (!io::parse_int(item, v) || v < 1 || v > (1LL << 30))
      throw CLI::ValidationError(flag, "expected a comma-separated list of positive integers, got '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty())
    throw CLI::ValidationError(flag, "list must not be empty");
  return out;
}

inline DesignConfig load_config(const std::string& path)
{
  const auto r = parse_config(io::read_file(path));
  if (!r.ok())
    throw InvalidArgument(path + ": " + r.summary());
  return r.config;
}

inline void echo_config(std::ostream& out, const DesignConfig& c, const fs::path& dir)
{
  const auto text = serialize_config(c);
  out << "# resolved configuration\n" << text;
  io::write_atomic(dir / "config.cfg", text);
}

inline void echo_options(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv,
                         const fs::path& dir)
{
  std::string text;
  for (const auto& [k, v] : kv)
    text += k + " = " + v + "\n";
  out << "# resolved options\n" << text;
  io::write_atomic(dir / "options.cfg", text);
}

inline void write_loss(const std::vector<double>& history, const fs::path& path)
{
  io::Csv csv({"iteration", "loss"});
  for (std::size_t k = 0; k < history.size(); ++k)
    csv.row(k, history[k]);
  csv.write(path);
}

inline void write_crosstalk(const CrosstalkReport& r, const fs::path& path)
{
  io::Csv csv({"target", "input", "coupling"});
  for (std::size_t t = 0; t < r.matrix.size(); ++t)
    for (std::size_t i = 0; i < r.matrix[t].size(); ++i)
      csv.row(t, i, r.matrix[t][i]);
  csv.write(path);
}

inline void write_design(const Design& d, const fs::path& dir)
{
  if (const auto* v = std::get_if<IndexVolume>(&d)) {
    io::export_volume(*v, dir / "volume.ivol");
    return;
  }
  const auto& e = std::get<LayeredElement>(d);
  io::Csv csv({"layer", "i", "j", "phase"});
  for (std::size_t l = 0; l < e.layers.size(); ++l)
    for (int j = 0; j < e.grid.ny; ++j)
      for (int i = 0; i < e.grid.nx; ++i)
        csv.row(l, i, j, e.layers[l][e.grid.index(i, j)]);
  csv.write(dir / "layers.csv");
}

/// Shared tail of design-style subcommands: volume, tables and renders.
inline void write_run(const ExperimentResult& r, const DesignConfig& c, const fs::path& dir,
                      std::vector<std::pair<std::string, double>> extra = {})
{
  write_design(r.run.result, dir);
  write_loss(r.run.loss_history, dir / "loss.csv");
  write_crosstalk(r.report, dir / "crosstalk.csv");
  io::Csv summary({"metric", "value"});
  summary.row("loss_initial", r.run.loss_history.front());
  summary.row("loss_final", r.run.loss_history.back());
  summary.row("diagonal_mean", r.report.diagonal_mean);
  summary.row("offdiag_mean", r.report.offdiag_mean);
  summary.row("worst_extinction_db", r.report.worst_extinction_db);
  for (const auto& [k, v] : extra)
    summary.row(k, v);
  summary.write(dir / "summary.csv");
  for (std::size_t k = 0; k < r.inputs.size(); ++k) {
    const auto out = propagate(r.run.result, r.inputs[k], c.propagation);
    io::render_field(out, dir / ("output_" + std::to_string(k) + ".pgm"));
    io::render_field(r.targets[k], dir / ("target_" + std::to_string(k) + ".pgm"));
  }
}

inline ExperimentResult run_configured(const DesignConfig& c)
{
  auto [in, out] = task_fields(c);
  return run_mapping(in, out, initial_design(c), experiment_config_of(c));
}

inline ComplexField parse_input(const std::string& spec, const DesignConfig& c)
{
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  std::vector<double> args;
  auto numbers = [&]() {
    for (const auto& item : ove::detail::split_list(rest)) {
      double v;
      if (!io::parse_double(item, v))
        throw InvalidArgument("input spec '" + spec + "': '" + item + "' is not a number");
      args.push_back(v);
    }
  };
  if (kind == "plane") {
    numbers();
    args.resize(2, 0.0);
    return plane_wave(c.grid, c.wavelength_um, degrees(args[0]), degrees(args[1]));
  }
  if (kind == "gaussian") {
    numbers();
    if (args.empty())
      throw InvalidArgument("input spec '" + spec + "' needs a waist");
    args.resize(3, 0.0);
    return gaussian(c.grid, c.wavelength_um, args[0], {args[1], args[2]});
  }
  if (kind == "mode") {
    numbers();
    const auto modes = lp_modes(fiber_of(c), c.grid);
    const int k = args.empty() ? 0 : static_cast<int>(args[0]);
    if (k < 0 || k >= static_cast<int>(modes.size()))
      throw InvalidArgument("input spec '" + spec + "': fiber guides " + std::to_string(modes.size()) + " modes");
    return modes[k].field;
  }
  if (kind == "field")
    return io::import_field(rest);
  throw InvalidArgument("input spec '" + spec + "': expected plane:, gaussian:, mode: or field:");
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Optical volume element design and analysis"};
  app.require_subcommand(1);
  std::string out_dir;

  std::string config_path;
  auto* design = app.add_subcommand("design", "optimize the design described by a config file");
  design->add_option("config", config_path, "config file")->required();
  design->add_option("--out", out_dir, "output directory")->required();

  std::string volume_path, input_spec;
  auto* prop = app.add_subcommand("propagate", "one forward pass through a stored volume");
  prop->add_option("config", config_path, "config file")->required();
  prop->add_option("--volume", volume_path, "ivol-1 volume")->required();
  prop->add_option("--input", input_spec, "plane:tx,ty | gaussian:w0[,x,y] | mode:k | field:path")->required();
  prop->add_option("--out", out_dir, "output directory")->required();

  auto* lantern = app.add_subcommand("lantern", "plane-wave to fiber-mode lantern");
  lantern->add_option("config", config_path, "config file")->required();
  lantern->add_option("--out", out_dir, "output directory")->required();

  auto* haar = app.add_subcommand("haar-grin", "GRIN volume routing Haar patterns to spots");
  haar->add_option("config", config_path, "config file")->required();
  haar->add_option("--out", out_dir, "output directory")->required();

  double budget = 5e-3, thickness = 16.0;
  std::string m_list = "1,2,4,8", scheme = "both";
  int holo_iters = 300;
  std::uint64_t holo_seed = 1;
  auto* holo = app.add_subcommand("holography", "multiplexed grating efficiency versus M");
  holo->add_option("--budget", budget, "index modulation budget")->check(CLI::PositiveNumber);
  holo->add_option("--m", m_list, "comma-separated multiplexing counts");
  holo->add_option("--scheme", scheme, "superposed, optimized or both")
      ->check(CLI::IsMember({"superposed", "optimized", "both"}));
  holo->add_option("--thickness", thickness, "grating thickness in um")->check(CLI::PositiveNumber);
  holo->add_option("--iters", holo_iters, "optimizer evaluations for the optimized scheme")
      ->check(CLI::PositiveNumber);
  holo->add_option("--seed", holo_seed, "optimizer seed");
  holo->add_option("--out", out_dir, "output directory")->required();

  std::string n_list;
  double pitch = 20.0;
  int fan = 1;
  auto* scaling = app.add_subcommand("scaling", "planar versus volumetric element counts");
  scaling->add_option("--n", n_list, "comma-separated neuron counts")->required();
  scaling->add_option("--pitch", pitch, "element pitch in um")->check(CLI::PositiveNumber);
  scaling->add_option("--fan", fan, "fan-out per neuron")->check(CLI::PositiveNumber);
  scaling->add_option("--out", out_dir, "output directory")->required();

  std::string image_path, kind_name = "all";
  auto* bank = app.add_subcommand("haar-bank", "7x7 Boolean Haar filter bank on a 21x21 image");
  bank->add_option("--image", image_path, "21x21 graymap")->required();
  bank->add_option("--kind", kind_name, "vertical, horizontal, diagonal, uniform or all")
      ->check(CLI::IsMember({"vertical", "horizontal", "diagonal", "uniform", "all"}));
  bank->add_option("--out", out_dir, "output directory")->required();

  std::vector<int> holo_m, scaling_n;
  try {
    app.parse(argc, argv);
    if (holo->parsed())
      holo_m = detail::parse_int_list(m_list, "--m");
    if (scaling->parsed())
      scaling_n = detail::parse_int_list(n_list, "--n");
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    if (design->parsed() || lantern->parsed() || haar->parsed()) {
      auto c = detail::load_config(config_path);
      if (lantern->parsed())
        c.task = TaskKind::lantern;
      if (haar->parsed())
        c.task = TaskKind::haar_grin;
      detail::echo_config(out, c, dir);
      const auto r = detail::run_configured(c);
      std::vector<std::pair<std::string, double>> extra;
      if (c.task == TaskKind::haar_grin) {
        double worst = 0.0;
        for (std::size_t k = 0; k < r.inputs.size(); ++k) {
          const auto p = intensity_centroid(propagate(r.run.result, r.inputs[k], c.propagation));
          const auto t = intensity_centroid(r.targets[k]);
          worst = std::max(worst, std::hypot(p.x - t.x, p.y - t.y));
        }
        extra.push_back({"max_centroid_distance_um", worst});
      }
      detail::write_run(r, c, dir, extra);
      out << "loss " << io::format_number(r.run.loss_history.front()) << " -> "
          << io::format_number(r.run.loss_history.back()) << ", diagonal_mean "
          << io::format_number(r.report.diagonal_mean) << ", offdiag_mean "
          << io::format_number(r.report.offdiag_mean) << "\n";
    } else if (prop->parsed()) {
      const auto c = detail::load_config(config_path);
      detail::echo_config(out, c, dir);
      const auto vol = io::import_volume(volume_path);
      const auto input = detail::parse_input(input_spec, c);
      const auto field = bpm(vol, input, c.propagation);
      io::export_field(field, dir / "output.cfield");
      io::render_field(field, dir / "output.pgm");
      out << "output power " << io::format_number(power(field)) << "\n";
    } else if (holo->parsed()) {
      detail::echo_options(out,
                           {{"budget", io::format_number(budget)},
                            {"m", m_list},
                            {"scheme", scheme},
                            {"thickness_um", io::format_number(thickness)},
                            {"iters", std::to_string(holo_iters)},
                            {"seed", std::to_string(holo_seed)}},
                           dir);
      io::Csv csv({"scheme", "m", "eta_mean", "eta_min", "eta_max", "fitted_log_slope"});
      auto emit = [&](const std::string& name, const std::vector<EfficiencyPoint>& pts) {
        const auto curve = make_curve(pts);
        for (const auto& p : pts) {
          const auto [lo, hi] = std::minmax_element(p.eta_per_output.begin(), p.eta_per_output.end());
          csv.row(name, p.m, p.eta_mean, *lo, *hi, curve.fitted_log_slope);
        }
        out << name << " slope " << io::format_number(curve.fitted_log_slope) << "\n";
      };
      if (scheme != "optimized") {
        std::vector<EfficiencyPoint> pts;
        for (int m : holo_m)
          pts.push_back(superposed_grating_efficiency(m, budget, thickness));
        emit("superposed", pts);
      }
      if (scheme != "superposed") {
        FanoutConfig fc;
        fc.thickness_um = thickness;
        fc.optimizer.max_iters = holo_iters;
        fc.optimizer.seed = holo_seed;
        std::vector<EfficiencyPoint> pts;
        for (int m : holo_m)
          pts.push_back(optimized_fanout_efficiency(m, budget, fc));
        emit("optimized", pts);
      }
      csv.write(dir / "efficiency.csv");
    } else if (scaling->parsed()) {
      detail::echo_options(out, {{"n", n_list}, {"pitch_um", io::format_number(pitch)}, {"fan", std::to_string(fan)}},
                           dir);
      io::Csv csv({"n", "elements_2d", "planes_3d", "elements_per_plane_3d", "pitch_um", "footprint_2d_um2",
                   "footprint_3d_um2"});
      for (int n : scaling_n) {
        const auto r = footprint_scaling(n, pitch, fan);
        csv.row(r.n_neurons, r.elements_2d, r.planes_3d, r.elements_per_plane_3d, r.pitch_um, r.footprint_2d_um2,
                r.footprint_3d_um2);
      }
      csv.write(dir / "scaling.csv");
    } else if (bank->parsed()) {
      detail::echo_options(out, {{"image", image_path}, {"kind", kind_name}}, dir);
      const auto img = io::read_pgm(image_path);
      std::vector<HaarKind> kinds;
      if (kind_name == "all")
        kinds = {HaarKind::vertical, HaarKind::horizontal, HaarKind::diagonal, HaarKind::uniform};
      else
        kinds = {parse_haar_kind(kind_name)};
      io::Csv csv({"kind", "row", "col", "s_plus", "s_minus", "response"});
      for (auto k : kinds) {
        const auto res = haar_filter_bank(img, k);
        for (int r = 0; r < haar_cells; ++r)
          for (int c = 0; c < haar_cells; ++c)
            csv.row(to_string(k), r, c, res[r][c].s_plus, res[r][c].s_minus, res[r][c].response);
      }
      csv.write(dir / "haar_bank.csv");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

} // namespace ove::cli
