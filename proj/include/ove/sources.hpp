#pragma once

// Input and target field generators: tilted plane waves, Gaussians, spot
// targets, Haar amplitude masks and step-index fiber LP modes.

#include "ove/haar.hpp"
#include "ove/lattice.hpp"
#include "ove/propagation.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace ove
{

struct Point2
{
  double x = 0.0;
  double y = 0.0;
};

/// Unit-power exp(i k0 (sin(tx) x + sin(ty) y)) with k0 = 2 pi / wavelength,
/// optionally apodized by the absorber profile of the given width fraction.
inline ComplexField plane_wave(const Grid2D& grid, double wavelength_um, double theta_x, double theta_y,
                               double apodization_width = 0.0)
{
  grid.validate();
  const double limit_x = wavelength_um / (2.0 * grid.dx);
  const double limit_y = wavelength_um / (2.0 * grid.dy);
  if (std::abs(std::sin(theta_x)) >= limit_x || std::abs(std::sin(theta_y)) >= limit_y ||
      std::abs(theta_x) >= pi / 2 || std::abs(theta_y) >= pi / 2)
    throw InvalidArgument("aliased source");
  const double k0 = 2.0 * pi / wavelength_um;
  const double kx = k0 * std::sin(theta_x);
  const double ky = k0 * std::sin(theta_y);
  const auto mask = absorber_mask(grid, apodization_width);
  ComplexField f(grid, wavelength_um);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      f(i, j) = std::polar(mask[grid.index(i, j)], kx * grid.x(i) + ky * grid.y(j));
  return normalize(f);
}

/// Incidence angle whose transverse wavenumber lands on FFT bin (qx, qy).
inline double bin_angle(const Grid2D& grid, double wavelength_um, int q, bool along_y = false)
{
  const double extent = along_y ? grid.height() : grid.width();
  const double s = q * wavelength_um / extent;
  if (std::abs(s) >= 1.0)
    throw InvalidArgument("aliased source");
  return std::asin(s);
}

/// Unit-power exp(-r^2 / w0^2) centred at `center`.
inline ComplexField gaussian(const Grid2D& grid, double wavelength_um, double waist_um, Point2 center = {})
{
  grid.validate();
  if (!(waist_um >= 2.0 * std::max(grid.dx, grid.dy)))
    throw InvalidArgument("waist below two grid samples is unresolvable");
  ComplexField f(grid, wavelength_um);
  const double inv = 1.0 / (waist_um * waist_um);
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j) - center.y;
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i) - center.x;
      f(i, j) = std::exp(-(x * x + y * y) * inv);
    }
  }
  return normalize(f);
}

inline bool inside_window(const Grid2D& grid, Point2 p)
{
  return p.x >= grid.x(0) && p.x <= grid.x(grid.nx - 1) && p.y >= grid.y(0) && p.y <= grid.y(grid.ny - 1);
}

/// Smooth focal-spot target: Gaussian whose 1/e^2 intensity radius is radius_um.
inline ComplexField spot_target(const Grid2D& grid, double wavelength_um, Point2 center, double radius_um)
{
  grid.validate();
  if (!(radius_um >= std::max(grid.dx, grid.dy)))
    throw InvalidArgument("spot radius below the grid pitch");
  if (!inside_window(grid, center))
    throw InvalidArgument("spot centre outside the window");
  ComplexField f(grid, wavelength_um);
  const double inv = 1.0 / (radius_um * radius_um);
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j) - center.y;
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i) - center.x;
      f(i, j) = std::exp(-(x * x + y * y) * inv);
    }
  }
  return normalize(f);
}

struct HaarMaskFields
{
  ComplexField plus;
  /// Empty for the uniform kind, which has no -1 cells.
  std::optional<ComplexField> minus;
  HaarPattern pattern{};
};

/// Amplitude masks of one Haar pattern over a centred square patch split
/// into 3x3 cells; rows run along y, columns along x.
inline HaarMaskFields haar_mask_field(const Grid2D& grid, double wavelength_um, HaarKind kind,
                                      double patch_extent_um, Point2 center = {})
{
  grid.validate();
  const double half = 0.5 * patch_extent_um;
  if (!(patch_extent_um > 0.0) || !inside_window(grid, {center.x - half, center.y - half}) ||
      !inside_window(grid, {center.x + half, center.y + half}))
    throw InvalidArgument("Haar patch does not fit inside the window");
  HaarMaskFields out;
  out.pattern = haar_pattern(kind);
  ComplexField plus(grid, wavelength_um);
  ComplexField minus(grid, wavelength_um);
  const double cell = patch_extent_um / 3.0;
  for (int j = 0; j < grid.ny; ++j) {
    const double v = grid.y(j) - center.y + half;
    if (v < 0.0 || v >= patch_extent_um)
      continue;
    const int row = std::min(2, static_cast<int>(v / cell));
    for (int i = 0; i < grid.nx; ++i) {
      const double u = grid.x(i) - center.x + half;
      if (u < 0.0 || u >= patch_extent_um)
        continue;
      const int col = std::min(2, static_cast<int>(u / cell));
      const int s = out.pattern[row][col];
      if (s > 0)
        plus(i, j) = 1.0;
      else if (s < 0)
        minus(i, j) = 1.0;
    }
  }
  out.plus = normalize(plus);
  if (kind != HaarKind::uniform)
    out.minus = normalize(minus);
  return out;
}

struct FiberSpec
{
  double core_radius_um = 5.0;
  double n_core = 1.45;
  double n_clad = 1.444;
  double wavelength_um = default_wavelength_um;

  void validate() const
  {
    if (!(n_core > n_clad) || !(n_clad >= 1.0))
      throw InvalidArgument("fiber needs n_core > n_clad >= 1");
    if (!(core_radius_um > 0.0) || !(wavelength_um > 0.0))
      throw InvalidArgument("fiber needs positive core radius and wavelength");
  }

  double v_number() const
  {
    return 2.0 * pi / wavelength_um * core_radius_um * std::sqrt(n_core * n_core - n_clad * n_clad);
  }

  friend bool operator==(const FiberSpec&, const FiberSpec&) = default;
};

enum class ModeParity
{
  none, // l == 0
  cos,
  sin,
};

struct LPMode
{
  int l = 0;
  int m = 1;
  ModeParity parity = ModeParity::none;
  double n_eff = 0.0;
  ComplexField field;

  std::string name() const
  {
    std::string s = "LP" + std::to_string(l) + std::to_string(m);
    if (parity == ModeParity::cos)
      s += "c";
    else if (parity == ModeParity::sin)
      s += "s";
    return s;
  }
};

namespace detail
{

// u J_{l+1}(u) - w J_l(u) K_{l+1}(w) / K_l(w): the weakly guiding LP
// eigenvalue equation multiplied through by J_l(u), so it has no poles.
inline double lp_characteristic(int l, double u, double w)
{
  const double ratio = std::cyl_bessel_k(l + 1, w) / std::cyl_bessel_k(l, w);
  return u * std::cyl_bessel_j(l + 1, u) - w * ratio * std::cyl_bessel_j(l, u);
}

} // namespace detail

/// Effective indices of the guided LP(l, m) modes for one azimuthal order,
/// highest first (m = 1, 2, ...).
inline std::vector<double> lp_effective_indices(const FiberSpec& fiber, int l, int scan_points = 2000,
                                                double tolerance = 1e-10)
{
  fiber.validate();
  const double k0a = 2.0 * pi / fiber.wavelength_um * fiber.core_radius_um;
  const double nc2 = fiber.n_core * fiber.n_core;
  const double ncl2 = fiber.n_clad * fiber.n_clad;
  auto eval = [&](double n_eff) {
    const double n2 = n_eff * n_eff;
    return detail::lp_characteristic(l, k0a * std::sqrt(std::max(nc2 - n2, 0.0)),
                                     k0a * std::sqrt(std::max(n2 - ncl2, 0.0)));
  };
  std::vector<double> roots;
  const double span = fiber.n_core - fiber.n_clad;
  // scan from n_core downward so roots come out in order of m
  auto at = [&](int k) { return fiber.n_core - span * (k + 0.5) / scan_points; };
  double prev_n = at(0);
  double prev_f = eval(prev_n);
  for (int k = 1; k < scan_points; ++k) {
    const double n = at(k);
    const double f = eval(n);
    if (prev_f == 0.0) {
      roots.push_back(prev_n);
    } else if ((prev_f < 0.0) != (f < 0.0) && f != 0.0) {
      double hi = prev_n, lo = n, fhi = prev_f;
      int iter = 0;
      while (hi - lo > tolerance) {
        const double mid = 0.5 * (hi + lo);
        const double fm = eval(mid);
        if ((fm < 0.0) == (fhi < 0.0)) {
          hi = mid;
          fhi = fm;
        } else {
          lo = mid;
        }
        if (++iter > 200)
          throw Error("LP root search did not converge for l=" + std::to_string(l) + " in bracket [" +
                      std::to_string(n) + ", " + std::to_string(prev_n) + "]");
      }
      roots.push_back(0.5 * (hi + lo));
    }
    prev_n = n;
    prev_f = f;
  }
  return roots;
}

/// All guided LP modes sampled on `grid`, unit power, ordered by (l, m, parity)
/// and orthonormalized on the grid.
inline std::vector<LPMode> lp_modes(const FiberSpec& fiber, const Grid2D& grid)
{
  fiber.validate();
  grid.validate();
  if (fiber.core_radius_um > 0.4 * std::min(grid.width(), grid.height()))
    throw InvalidArgument("fiber core does not fit in the grid window");
  const double a = fiber.core_radius_um;
  const double k0a = 2.0 * pi / fiber.wavelength_um * a;
  std::vector<LPMode> modes;
  for (int l = 0;; ++l) {
    const auto indices = lp_effective_indices(fiber, l);
    if (indices.empty())
      break;
    for (std::size_t mi = 0; mi < indices.size(); ++mi) {
      const double n_eff = indices[mi];
      const double u = k0a * std::sqrt(fiber.n_core * fiber.n_core - n_eff * n_eff);
      const double w = k0a * std::sqrt(n_eff * n_eff - fiber.n_clad * fiber.n_clad);
      const double jl = std::cyl_bessel_j(l, u);
      const double kl = std::cyl_bessel_k(l, w);
      const std::vector<ModeParity> parities =
          l == 0 ? std::vector<ModeParity>{ModeParity::none} : std::vector<ModeParity>{ModeParity::cos, ModeParity::sin};
      for (auto parity : parities) {
        ComplexField f(grid, fiber.wavelength_um);
        for (int j = 0; j < grid.ny; ++j) {
          for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i), y = grid.y(j);
            const double r = std::hypot(x, y) / a;
            const double radial =
                r < 1.0 ? std::cyl_bessel_j(l, u * r) / jl : std::cyl_bessel_k(l, w * r) / kl;
            const double phi = std::atan2(y, x);
            const double angular = parity == ModeParity::sin ? std::sin(l * phi) : std::cos(l * phi);
            f(i, j) = radial * angular;
          }
        }
        modes.push_back({l, static_cast<int>(mi) + 1, parity, n_eff, normalize(f)});
      }
    }
  }
  // The window truncates the cladding tails and makes the grid slightly
  // asymmetric, so restore exact orthonormality by two Gram-Schmidt passes.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t a_idx = 0; a_idx < modes.size(); ++a_idx) {
      auto& fa = modes[a_idx].field;
      for (std::size_t b_idx = 0; b_idx < a_idx; ++b_idx) {
        const auto& fb = modes[b_idx].field;
        const Complex c = overlap(fb, fa);
        auto va = fa.values();
        auto vb = fb.values();
        for (std::size_t k = 0; k < va.size(); ++k)
          va[k] -= c * vb[k];
      }
      fa = normalize(fa);
    }
  }
  return modes;
}

} // namespace ove
