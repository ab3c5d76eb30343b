#pragma once
// Closed-form reference solutions used to validate the solver.
//
// d = 1: for any absolutely continuous density of mass N, the optimal external
// charge is a comb of N - 1 unit point charges at the interior unit-mass
// quantiles l_1 < ... < l_{N-1} of the density, with potential
// v(x) = -sum_i |x - l_i|. The optimal transport cost itself is carried by the
// cyclic-shift plan that moves mass one quantile cell forward.
//
// d = 3, N = 2, uniform unit-ball droplet: the optimal pair map sends r to the
// antipodal point t(r) = -(r/|r|)(1 - |r|^3)^{1/3}, the potential gradient is
// grad v(r) = -(r - t(r))/|r - t(r)|^3, and the external dual charge is the
// radial density -Laplacian(v)/(4 pi):
//   rho_ext(r) = (2 pi)^{-1} / ( r (1 - r^3)^{2/3} ( r + (1 - r^3)^{1/3} )^3 ),
// which carries total charge 1; the enclosed charge has the closed form
// Q(r) = r^2 / (r + (1 - r^3)^{1/3})^2. Both singular endpoints (r -> 0 and
// r -> 1) are integrable.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "dualcharge/common.hpp"
#include "dualcharge/geometry.hpp"
#include "dualcharge/kernels.hpp"
#include "dualcharge/model.hpp"
#include "dualcharge/quadrature.hpp"

namespace dualcharge {

// ---------------------------------------------------------------------------
// General 1D density profiles (oracle-side only; the solver itself works with
// uniform densities).

class DensityProfile1D {
 public:
  /// Density given by an unnormalized shape; rescaled to carry mass n.
  static DensityProfile1D from_shape(Support<1> support, int n,
                                     std::function<double(double)> shape) {
    DensityProfile1D p(std::move(support), n, std::move(shape));
    const double total = integrate(p.density_, p.support_.lo, p.support_.hi, 1e-12);
    if (total <= 0.0) throw ConfigError("density shape has non-positive mass");
    const double scale = n / total;
    auto base = std::move(p.density_);
    p.density_ = [base, scale](double x) { return scale * base(x); };
    return p;
  }

  /// Density claimed to be normalized to mass n already; verified to 1e-8.
  static DensityProfile1D from_density(Support<1> support, int n,
                                       std::function<double(double)> density) {
    DensityProfile1D p(std::move(support), n, std::move(density));
    const double total = integrate(p.density_, p.support_.lo, p.support_.hi, 1e-12);
    if (std::abs(total - n) > 1e-8 * n)
      throw ConfigError("density does not integrate to the electron number");
    return p;
  }

  static DensityProfile1D uniform(const Density<1>& rho) {
    const double amp = rho.amplitude();
    return from_density(rho.support, rho.n_electrons, [amp](double) { return amp; });
  }

  double density(double x) const { return density_(x); }
  const Support<1>& support() const { return support_; }
  int n_electrons() const { return n_; }

  /// Cumulative mass on [lo, x].
  double cdf(double x) const {
    if (x <= support_.lo) return 0.0;
    if (x >= support_.hi) x = support_.hi;
    return integrate(density_, support_.lo, x, 1e-12, 1e-12);
  }

 private:
  DensityProfile1D(Support<1> support, int n, std::function<double(double)> density)
      : support_(support), n_(n), density_(std::move(density)) {
    if (n < 2) throw ConfigError("density profile needs at least two electrons");
  }

  Support<1> support_;
  int n_;
  std::function<double(double)> density_;
};

// ---------------------------------------------------------------------------
// 1D comb solution.

/// N - 1 unit point charges at the interior unit-mass quantiles.
struct Comb1D {
  std::vector<double> breakpoints;

  double mass() const { return static_cast<double>(breakpoints.size()); }
};

/// Locate the unit-mass quantiles of the profile by bisection on its CDF.
inline Comb1D breakpoints(const DensityProfile1D& profile, double tol = 1e-10) {
  Comb1D comb;
  const auto& sup = profile.support();
  for (int i = 1; i < profile.n_electrons(); ++i) {
    const double target = static_cast<double>(i);
    comb.breakpoints.push_back(
        bisect([&](double x) { return profile.cdf(x) - target; }, sup.lo, sup.hi, tol));
  }
  return comb;
}

inline Comb1D breakpoints(const Density<1>& rho, double tol = 1e-10) {
  return breakpoints(DensityProfile1D::uniform(rho), tol);
}

/// v(x) = -sum_i |x - l_i|.
inline double comb_potential(const Comb1D& comb, double x) {
  double v = 0.0;
  for (double l : comb.breakpoints) v -= std::abs(x - l);
  return v;
}

inline double comb_potential_derivative(const Comb1D& comb, double x) {
  double d = 0.0;
  for (double l : comb.breakpoints) d -= (x > l) - (x < l);
  return d;
}

/// Potential-field adapter for the comb, usable wherever a dual-charge
/// potential is expected.
struct CombPotential {
  Comb1D comb;

  double potential(const Point<1>& r) const { return comb_potential(comb, r[0]); }
  Point<1> potential_gradient(const Point<1>& r) const {
    return {comb_potential_derivative(comb, r[0])};
  }
};

/// Optimal interaction cost of the uniform 1D droplet: the cyclic-shift plan
/// places the N copies of a point one quantile cell apart and integrates the
/// interaction cost over the density.
inline double exact_1d_energy(const Density<1>& rho) {
  const auto& sup = rho.support;
  const int n = rho.n_electrons;
  const double len = sup.diameter();
  const double cell = len / n;
  auto orbit_cost = [&](double s) {
    Configuration<1> config(n);
    const double offset = s - sup.lo;
    for (int k = 0; k < n; ++k) {
      double x = std::fmod(offset + k * cell, len);
      if (x < 0.0) x += len;
      config[k] = {sup.lo + x};
    }
    return cost<1>(config);
  };
  return integrate(orbit_cost, sup.lo, sup.lo + cell, 1e-10) / cell;
}

// ---------------------------------------------------------------------------
// 3D two-electron droplet on the unit ball.

/// Radius of the antipodal partner: |t(r)| = (1 - r^3)^{1/3} for r <= 1, and 0
/// beyond the droplet edge (all charge enclosed).
inline double seidl_partner_radius(double r) {
  if (r >= 1.0) return 0.0;
  // Factored form keeps full precision as r approaches the edge.
  return std::cbrt((1.0 - r) * (1.0 + r + r * r));
}

/// Optimal pair map of the two-electron droplet.
inline Point<3> seidl_map_2e(const Point<3>& r) {
  const double rad = norm<3>(r);
  if (rad == 0.0) throw SingularityError("pair map undefined at the origin");
  if (rad > 1.0) throw ConfigError("pair map defined inside the unit droplet only");
  return scale<3>(r, -seidl_partner_radius(rad) / rad);
}

/// Radial derivative of the exact potential: v'(r) = -1/(r + |t(r)|)^2.
inline double exact_2e_potential_derivative(double r) {
  const double w = r + seidl_partner_radius(r);
  return -1.0 / (w * w);
}

/// grad v(r) = -(r - t(r))/|r - t(r)|^3, pointing radially inward.
inline Point<3> exact_2e_gradient(const Point<3>& r) {
  const double rad = norm<3>(r);
  if (rad == 0.0) throw SingularityError("exact potential gradient undefined at the origin");
  return scale<3>(r, exact_2e_potential_derivative(rad) / rad);
}

/// Exact potential by radial quadrature of v', anchored at v(anchor) = 0.
inline double exact_2e_potential(double r, double anchor = 1.0) {
  if (r < 0.0) throw ConfigError("radius must be non-negative");
  if (r == anchor) return 0.0;
  if (std::abs(r - anchor) <= 1e-10)  // too short for quadrature; v' is smooth here
    return (r - anchor) * exact_2e_potential_derivative(0.5 * (r + anchor));
  auto d = [](double s) { return exact_2e_potential_derivative(s); };
  if (r > anchor) return integrate_singular(d, anchor, r, 1e-10, 1e-10);
  return -integrate_singular(d, r, anchor, 1e-10, 1e-10);
}

/// External dual charge density -Laplacian(v)/(4 pi) of the exact potential.
inline double exact_2e_charge(double r) {
  if (r <= 0.0) throw SingularityError("dual charge density diverges at the origin");
  if (r >= 1.0) {
    if (r == 1.0) throw SingularityError("dual charge density diverges at the droplet edge");
    return 0.0;
  }
  const double u = seidl_partner_radius(r);
  const double w = r + u;
  return 0.5 / kPi / (r * u * u * w * w * w);
}

/// Charge enclosed within radius r: Q(r) = -r^2 v'(r) = r^2/(r + |t(r)|)^2.
inline double exact_2e_enclosed_charge(double r) {
  if (r <= 0.0) return 0.0;
  const double w = r + seidl_partner_radius(r);
  return r * r / (w * w);
}

/// Mean dual-charge density over a radial shell.
inline double exact_2e_shell_average(const Shell& shell) {
  const double q =
      exact_2e_enclosed_charge(shell.outer) - exact_2e_enclosed_charge(shell.inner);
  return q / shell.mass();
}

/// Optimal interaction cost of the two-electron droplet:
/// integral of rho(r)/2 * 1/|r - t(r)| = 3 int_0^1 r^2/(r + |t(r)|) dr.
inline double exact_2e_energy() {
  return 3.0 * integrate_singular(
                   [](double r) { return r * r / (r + seidl_partner_radius(r)); }, 0.0, 1.0,
                   1e-10);
}

/// Potential-field adapter for the exact droplet solution.
struct Droplet2ePotential {
  double anchor = 1.0;

  double potential(const Point<3>& r) const { return exact_2e_potential(norm<3>(r), anchor); }
  Point<3> potential_gradient(const Point<3>& r) const { return exact_2e_gradient(r); }
};

}  // namespace dualcharge
