// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "ove/cli.hpp"
#include "reference_runs.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace ove;
namespace fs = std::filesystem;

namespace
{

constexpr double lambda = 1.55;
const std::string fixture_dir = OVE_FIXTURE_DIR;

struct Outcome
{
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what)
  {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<void(Outcome&)>& body)
{
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.note(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0)
    o.require(secs < limit_s, "runtime " + num(secs) + " s >= " + num(limit_s) + " s");
  if (!o.pass)
    ++failures;
  std::printf("criterion %d %s: %s (%s; %.2f s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
  std::fflush(stdout);
}

fs::path scratch(const std::string& name)
{
  auto dir = fs::temp_directory_path() / ("ove_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- gradient check helpers

ComplexField smooth_field(const Grid2D& g, unsigned seed)
{
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexField f(g, lambda);
  for (auto& v : f.values())
    v = {n(rng), n(rng)};
  fft::forward(f.values(), g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (std::hypot(g.kx(i), g.ky(j)) > 2.5)
        f(i, j) = 0.0;
  fft::inverse(f.values(), g);
  return normalize(f);
}

MappingTask correlated_task(const Design& d, const Grid2D& g, unsigned seed)
{
  std::vector<MappingPair> p;
  for (int k = 0; k < 2; ++k) {
    auto in = smooth_field(g, seed + 10 * k);
    auto out = propagate(d, in, PropagationSpec{});
    auto noise = smooth_field(g, seed + 10 * k + 1);
    ComplexField t(g, lambda);
    for (std::size_t i = 0; i < g.size(); ++i)
      t.values()[i] = out.values()[i] + 0.8 * noise.values()[i];
    p.push_back({in, t, 0.5 + k});
  }
  return MappingTask(p);
}

double fd_max_rel(const Design& d, const MappingTask& task, LossKind kind, int samples, unsigned seed)
{
  const LossSpec spec{kind, 0.0};
  const PropagationSpec prop{};
  const auto g = gradient(d, task, spec, prop);
  const auto base = get_parameters(d);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
  const double h = 1e-6;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const std::size_t k = pick(rng);
    auto plus = base, minus = base;
    plus[k] += h;
    minus[k] -= h;
    Design dp = d, dm = d;
    set_parameters(dp, plus);
    set_parameters(dm, minus);
    const double fd = (loss(dp, task, spec, prop) - loss(dm, task, spec, prop)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[k]) / std::max(std::abs(g[k]), std::abs(fd)));
  }
  return worst;
}

void gradient_check(Outcome& o)
{
  Grid2D g{16, 16, 0.5, 0.5};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  std::vector<double> dn(g.size() * 8);
  for (auto& x : dn)
    x = u(rng);
  Design vol = IndexVolume(g, 8, 0.5, 1.5, 0.0, 0.05, dn);
  std::uniform_real_distribution<double> ph(-0.5, 0.5);
  std::vector<std::vector<double>> phases(3, std::vector<double>(g.size()));
  for (auto& l : phases)
    for (auto& x : l)
      x = ph(rng);
  Design lay = LayeredElement(g, phases, std::vector<double>(3, 6.0), 1.0);
  double worst = 0.0;
  for (const auto* d : {&vol, &lay}) {
    const auto task = correlated_task(*d, g, 21);
    for (auto kind : {LossKind::mode_coupling, LossKind::intensity_mse})
      worst = std::max(worst, fd_max_rel(*d, task, kind, 20, 4));
  }
  o.note("max relative error " + num(worst) + " over 80 samples");
  o.require(worst <= 1e-4, "relative error <= 1e-4");
}

// ---- propagation oracles

double moment_radius(const ComplexField& f)
{
  const auto& g = f.grid();
  double s0 = 0, s2 = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double I = std::norm(f(i, j));
      s0 += I;
      s2 += I * g.x(i) * g.x(i);
    }
  return 2.0 * std::sqrt(s2 / s0);
}

void propagation_oracles(Outcome& o)
{
  const PropagationSpec plain{TransferModel::exact, EvanescentPolicy::zero, 0.0};
  {
    Grid2D g{256, 256, 0.25, 0.25};
    const double w0 = 4 * lambda;
    const double zR = pi * w0 * w0 / lambda;
    const double ratio = moment_radius(free_space(gaussian(g, lambda, w0), zR, 1.0, plain)) / w0;
    o.note("(a) width ratio " + num(ratio));
    o.require(std::abs(ratio - std::sqrt(2.0)) <= 0.01 * std::sqrt(2.0), "(a) Rayleigh width within 1%");
  }
  {
    Grid2D g{32, 32, 0.5, 0.5};
    const double delta = 0.013, dz = 0.5;
    const int nz = 20;
    IndexVolume v(g, nz, dz, 1.5, 0.0, 0.05, std::vector<double>(g.size() * nz, delta));
    const auto f = plane_wave(g, lambda, 0.0, 0.0);
    auto expected = free_space(f, nz * dz, 1.5, plain);
    expected *= std::polar(1.0, 2 * pi / lambda * delta * nz * dz);
    const auto got = bpm(v, f, plain);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      err = std::max(err, std::abs(got.values()[k] - expected.values()[k]));
    o.note("(b) slab error " + num(err));
    o.require(err <= 1e-6, "(b) slab phase within 1e-6");
  }
  {
    Grid2D g{64, 64, 0.5, 0.5};
    const double n0 = 1.5, dz = 0.5, P = 100.0;
    const int nz = static_cast<int>(P / dz);
    const double sqrtA = 2 * pi / P;
    IndexVolume v(g, nz, dz, n0, -10.0, 0.0);
    for (int z = 0; z < nz; ++z)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          v.at(i, j, z) = -n0 * sqrtA * sqrtA * (g.x(i) * g.x(i) + g.y(j) * g.y(j)) / 2;
    const double w = std::sqrt(2.0 / (2 * pi / lambda * n0 * sqrtA));
    const auto beam = gaussian(g, lambda, w);
    const double ov = std::abs(overlap(bpm(v, beam, plain), beam));
    o.note("(c) self-imaging overlap " + num(ov));
    o.require(ov >= 0.99, "(c) GRIN overlap >= 0.99");
  }
  {
    Grid2D g{32, 32, 0.8, 0.8};
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.05);
    std::vector<double> dn(g.size() * 10);
    for (auto& x : dn)
      x = u(rng);
    IndexVolume v(g, 10, 0.5, 1.5, 0.0, 0.05, dn);
    auto f = smooth_field(g, 5);
    const double drift = std::abs(power(bpm(v, f, PropagationSpec::unitary())) - 1.0);
    // every bin of this coarser grid propagates in n = 1.2
    Grid2D gl{32, 32, 1.0, 1.0};
    std::vector<std::vector<double>> layers(3, std::vector<double>(gl.size()));
    std::uniform_real_distribution<double> ph(-pi, pi);
    for (auto& l : layers)
      for (auto& x : l)
        x = ph(rng);
    LayeredElement e(gl, layers, {3.0, 4.0, 5.0}, 1.2);
    const double drift_l = std::abs(power(layered(e, smooth_field(gl, 12), PropagationSpec::unitary())) - 1.0);
    o.note("(d) power drift " + num(std::max(drift, drift_l)));
    o.require(drift <= 1e-9 && drift_l <= 1e-9, "(d) power conserved to 1e-9");
  }
}

// ---- holography

void holography_scaling(Outcome& o)
{
  std::vector<EfficiencyPoint> sup, opt;
  for (int m : {1, 2, 4, 8})
    sup.push_back(superposed_grating_efficiency(m, ref::holography_budget, ref::holography_thickness));
  for (int m : {1, 2, 4})
    opt.push_back(optimized_fanout_efficiency(m, ref::holography_budget));
  const double s_sup = make_curve(sup).fitted_log_slope;
  const double s_opt = make_curve(opt).fitted_log_slope;
  o.note("superposed slope " + num(s_sup) + ", optimized slope " + num(s_opt));
  o.require(std::abs(s_sup + 2.0) <= 0.2, "superposed slope -2 +/- 0.2");
  o.require(s_opt >= -1.3, "optimized slope >= -1.3");
  o.require(s_opt - s_sup >= 0.5, "slopes differ by >= 0.5");
}

// ---- footprint

void footprint(Outcome& o)
{
  int bad = 0;
  for (std::int64_t n = 1; n <= 1024; ++n) {
    const auto r = footprint_scaling(n, 20.0);
    if (r.elements_2d != n * n || r.planes_3d != n)
      ++bad;
  }
  const auto r = footprint_scaling(225, 20.0);
  const double side = std::sqrt(r.footprint_3d_um2);
  o.note("n=225 window " + num(side) + " um side");
  o.require(bad == 0, "n^2 / n counts for all n");
  o.require(side == 300.0 && r.elements_per_plane_3d == 225, "300x300 um^2 window");
}

// ---- Haar bank

constexpr int haar_weights[4][3][3] = {{{1, 0, -1}, {1, 0, -1}, {1, 0, -1}},
                                       {{1, 1, 1}, {0, 0, 0}, {-1, -1, -1}},
                                       {{1, 0, -1}, {0, 0, 0}, {-1, 0, 1}},
                                       {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}};

void haar_bank(Outcome& o)
{
  const HaarKind kinds[4] = {HaarKind::vertical, HaarKind::horizontal, HaarKind::diagonal, HaarKind::uniform};
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> q(0, 255);
  long mismatches = 0;
  for (int n = 0; n < 100; ++n) {
    Image img{21, 21, std::vector<double>(441)};
    for (auto& p : img.pixels)
      p = n % 2 == 0 ? q(rng) : u(rng);
    for (int k = 0; k < 4; ++k) {
      const auto out = haar_filter_bank(img, kinds[k]);
      for (int pr = 0; pr < 7; ++pr)
        for (int pc = 0; pc < 7; ++pc) {
          double plus = 0, minus = 0;
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
              const double v = img.pixels[(3 * pr + r) * 21 + 3 * pc + c];
              if (haar_weights[k][r][c] == 1)
                plus += v;
              if (haar_weights[k][r][c] == -1)
                minus += v;
            }
          const auto& cell = out[pr][pc];
          if (cell.s_plus != plus || cell.s_minus != minus || cell.response != plus - minus)
            ++mismatches;
        }
    }
  }
  long nonzero = 0;
  for (double level : {0.0, 1.0, 3.25, 255.0}) {
    Image img{21, 21, std::vector<double>(441, level)};
    for (int k = 0; k < 3; ++k)
      for (const auto& row : haar_filter_bank(img, kinds[k]))
        for (const auto& cell : row)
          nonzero += cell.response != 0.0;
  }
  o.note(std::to_string(mismatches) + " mismatches over 19600 cells, " + std::to_string(nonzero) +
         " nonzero constant-image responses");
  o.require(mismatches == 0, "bit-exact oracle match");
  o.require(nonzero == 0, "constant images give zero");
}

// ---- lantern

void lantern(Outcome& o)
{
  const auto fix = ref::read_fixture(fixture_dir + "/lantern_baseline.txt");
  const auto r = ref::lantern_run();
  const auto& h = r.run.loss_history;
  const double ratio = h.back() / h.front();
  o.note("loss ratio " + num(ratio) + ", diag " + num(r.report.diagonal_mean) + ", offdiag " +
         num(r.report.offdiag_mean) + ", " + std::to_string(h.size()) + " loss evaluations");
  o.require(r.run.config.max_iters <= 500 && h.size() <= 501, "<= 500 iterations");
  o.require(ratio <= 0.5, "final loss <= 0.5 x initial");
  o.require(r.report.diagonal_mean >= 2.0 * r.report.offdiag_mean, "diagonal >= 2 x offdiag");
  o.require(ref::within_relative(h.back(), fix.at("loss_final"), 0.05) &&
                ref::within_relative(r.report.diagonal_mean, fix.at("diagonal_mean"), 0.05) &&
                ref::within_relative(r.report.offdiag_mean, fix.at("offdiag_mean"), 0.05),
            "fixture within 5%");
}

// ---- LP modes

FiberSpec fiber_with_v(double V)
{
  FiberSpec f;
  f.core_radius_um = 5.0;
  f.n_clad = 1.444;
  f.wavelength_um = lambda;
  const double na = V * lambda / (2 * pi * f.core_radius_um);
  f.n_core = std::sqrt(f.n_clad * f.n_clad + na * na);
  return f;
}

void lp_solver(Outcome& o)
{
  Grid2D g{128, 128, 0.25, 0.25};
  auto groups = [](const std::vector<LPMode>& modes) {
    std::set<std::string> s;
    for (const auto& m : modes)
      s.insert("LP" + std::to_string(m.l) + std::to_string(m.m));
    return s;
  };
  const auto low = lp_modes(fiber_with_v(1.0), g);
  const auto high = lp_modes(fiber_with_v(5.0), g);
  double worst = 0.0;
  for (std::size_t a = 0; a < high.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      worst = std::max(worst, std::abs(overlap(high[a].field, high[b].field)));
  o.note(std::to_string(low.size()) + " mode(s) at V=1, " + std::to_string(high.size()) +
         " at V=5, max overlap " + num(worst));
  o.require(groups(low) == std::set<std::string>{"LP01"}, "V=1 gives LP01 only");
  o.require(groups(high) == std::set<std::string>{"LP01", "LP11", "LP21", "LP02"}, "V=5 mode groups");
  o.require(worst <= 1e-6, "pairwise overlap <= 1e-6");
}

// ---- determinism

int cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "ove_cli");
  std::vector<const char*> argv;
  for (auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

void determinism(Outcome& o)
{
  const auto dir = scratch("determinism");
  io::write_atomic(dir / "small.cfg", "grid.nx = 32\ngrid.ny = 32\ngrid.dx = 0.5\ngrid.dy = 0.5\nvolume.nz = 8\n"
                                      "optimizer.max_iters = 20\noptimizer.step_size = 0.002\n");
  io::write_atomic(dir / "layered.cfg", "grid.nx = 32\ngrid.ny = 32\ngrid.dx = 0.5\ngrid.dy = 0.5\n"
                                        "design.family = layered\noptimizer.max_iters = 10\n"
                                        "optimizer.step_size = 0.05\n");
  Image img{21, 21, std::vector<double>(441)};
  for (int k = 0; k < 441; ++k)
    img.pixels[k] = (k * 37) % 256;
  io::write_atomic(dir / "img.pgm", io::write_pgm(img));
  std::size_t compared = 0;
  int failed = 0;
  for (const char* run : {"a", "b"}) {
    const auto out = dir / run;
    failed += cli({"design", (dir / "small.cfg").string(), "--out", (out / "volume").string()}) != 0;
    failed += cli({"design", (dir / "layered.cfg").string(), "--out", (out / "layered").string()}) != 0;
    failed += cli({"holography", "--m", "1,2", "--iters", "10", "--out", (out / "holography").string()}) != 0;
    failed += cli({"haar-bank", "--image", (dir / "img.pgm").string(), "--out", (out / "bank").string()}) != 0;
    failed += cli({"scaling", "--n", "1,15,225", "--out", (out / "scaling").string()}) != 0;
  }
  int differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file())
      continue;
    const auto twin = dir / "b" / fs::relative(e.path(), dir / "a");
    ++compared;
    if (!fs::exists(twin) || io::read_file(e.path()) != io::read_file(twin))
      ++differing;
  }
  o.note(std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ");
  o.require(failed == 0, "all runs succeed");
  o.require(compared >= 10 && differing == 0, "byte-identical reruns");
}

// ---- IO

std::string format_error(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

void io_round_trips(Outcome& o)
{
  const auto dir = scratch("io");
  Grid2D g{9, 7, 0.25, 0.3};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  std::vector<double> dn(g.size() * 4);
  for (auto& x : dn)
    x = static_cast<float>(u(rng));
  const IndexVolume vol(g, 4, 0.5, 1.5, 0.0, 0.05, dn);
  io::export_volume(vol, dir / "v.ivol");
  const auto back = io::import_volume(dir / "v.ivol");
  o.require(back.same_shape(vol) && std::equal(back.dn().begin(), back.dn().end(), vol.dn().begin(), vol.dn().end()), "volume round-trip bit-identical");
  io::export_volume(back, dir / "v2.ivol");
  o.require(io::read_file(dir / "v2.ivol") == io::read_file(dir / "v.ivol"), "volume re-export identical");

  ComplexField f(g, lambda);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : f.values())
    v = {n(rng), n(rng)};
  io::export_field(f, dir / "f.cfield");
  o.require(io::import_field(dir / "f.cfield") == f, "field round-trip bit-identical");

  DesignConfig c;
  c.wavelength_um = 1.31;
  c.grid.dx = 0.1;
  c.optimizer.seed = 77;
  c.task = TaskKind::fanout;
  const auto text = serialize_config(c);
  const auto parsed = parse_config(text);
  o.require(parsed.ok() && parsed.config == c && serialize_config(parsed.config) == text,
            "config round-trip identical");

  const auto payload = io::read_file(dir / "v.ivol");
  io::write_atomic(dir / "v.ivol", payload.substr(0, payload.size() - 4));
  o.require(contains(format_error([&] { io::import_volume(dir / "v.ivol"); }), "size mismatch"),
            "truncated volume -> size mismatch");
  auto swapped = payload;
  for (std::size_t k = 0; k + 4 <= swapped.size(); k += 4) {
    std::swap(swapped[k], swapped[k + 3]);
    std::swap(swapped[k + 1], swapped[k + 2]);
  }
  io::write_atomic(dir / "v.ivol", swapped);
  const auto swap_msg = format_error([&] { io::import_volume(dir / "v.ivol"); });
  o.require(contains(swap_msg, "bound violation") || contains(swap_msg, "non-finite"),
            "byte-swapped volume rejected");
  auto high = payload;
  const float big = 0.2f;
  std::memcpy(high.data() + 12, &big, 4);
  io::write_atomic(dir / "v.ivol", high);
  o.require(contains(format_error([&] { io::import_volume(dir / "v.ivol"); }), "bound violation"),
            "out-of-bounds voxel -> bound violation");
  io::write_atomic(dir / "v.ivol", payload);
  auto meta = io::read_file(io::sidecar_path(dir / "v.ivol"));
  meta.replace(meta.find("ivol-1"), 6, "ivol-7");
  io::write_atomic(io::sidecar_path(dir / "v.ivol"), meta);
  o.require(contains(format_error([&] { io::import_volume(dir / "v.ivol"); }), "ivol-7"),
            "version mismatch names the version");
  const auto fbytes = io::read_file(dir / "f.cfield");
  io::write_atomic(dir / "f.cfield", fbytes.substr(0, fbytes.size() - 3));
  o.require(contains(format_error([&] { io::import_field(dir / "f.cfield"); }), "size mismatch"),
            "truncated field -> size mismatch");
  const auto bad = parse_config("dn_min = 0.1\ndn_max = 0.0\ngrid.nx = -3\nbogus = 1\n");
  o.require(!bad.ok() && bad.errors.size() >= 3, "invalid config reports each error");
  o.note("round-trips and corrupt fixtures checked");
}

} // namespace

int main()
{
  criterion(1, "gradient-vs-finite-differences", 60, gradient_check);
  criterion(2, "propagation-oracles", 60, propagation_oracles);
  criterion(3, "holography-efficiency-scaling", 1200, holography_scaling);
  criterion(4, "footprint-scaling", 1, footprint);
  criterion(5, "haar-bank-oracle", 1, haar_bank);
  criterion(6, "lantern-mode-sorting", 600, lantern);
  criterion(7, "lp-mode-solver", 10, lp_solver);
  criterion(8, "determinism", 0, determinism);
  criterion(9, "io-round-trips", 0, io_round_trips);
  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures == 0 ? 0 : 1;
}
