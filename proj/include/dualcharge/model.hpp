#pragma once
// Target densities, charge basis elements, weighted dual charges, and their
// electrostatic potentials and interaction energies in closed form.
//
// Conventions. The interaction kernel is 1/|r - r'| in d = 3 and -|r - r'| in
// d = 1. The interaction energy of two charge distributions is
//   D(mu, nu) = integral of k(r - r') dmu(r) dnu(r'),
// without the electrostatic 1/2. All 3D distributions here are radial and
// centered at the origin, so Newton's theorem applies: a uniform ball of
// charge q and radius R generates
//   v(r) = q / r                      for r >= R,
//   v(r) = q (3 R^2 - r^2) / (2 R^3)  for r <  R,
// and a spherical annulus is the difference of two such balls. In particular
// the potential of an annulus is constant inside its inner radius.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "dualcharge/common.hpp"
#include "dualcharge/geometry.hpp"
#include "dualcharge/quadrature.hpp"

namespace dualcharge {

// ---------------------------------------------------------------------------
// Target densities: uniform on an interval (d = 1) or a centered ball (d = 3),
// normalized to carry total mass equal to the electron number.

template <int Dim>
struct Density;

template <>
struct Density<1> {
  Support<1> support;
  int n_electrons = 2;

  double amplitude() const { return n_electrons / support.volume(); }
};

template <>
struct Density<3> {
  Support<3> support;
  int n_electrons = 2;

  double amplitude() const { return n_electrons / support.volume(); }
};

// ---------------------------------------------------------------------------
// Basis elements for the external dual charge: intervals carrying unit height
// in d = 1, spherical annuli carrying unit volumetric density in d = 3.

struct Segment {
  double lo = 0.0;
  double hi = 1.0;

  double mass() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

struct Shell {
  double inner = 0.0;
  double outer = 1.0;

  double mass() const {
    return 4.0 / 3.0 * kPi * (outer * outer * outer - inner * inner * inner);
  }
};

template <int Dim>
struct BasisTraits;
template <>
struct BasisTraits<1> {
  using Element = Segment;
};
template <>
struct BasisTraits<3> {
  using Element = Shell;
};

template <int Dim>
using BasisElement = typename BasisTraits<Dim>::Element;

// ---------------------------------------------------------------------------
// Closed-form potentials of single elements.

/// Potential of a unit-height charge on [lo, hi] under the kernel -|x - y|:
/// -integral over the segment of |x - s| ds.
inline double segment_potential(const Segment& e, double x) {
  if (x <= e.lo || x >= e.hi) return -e.mass() * std::abs(x - e.center());
  const double dl = x - e.lo;
  const double dr = e.hi - x;
  return -0.5 * (dl * dl + dr * dr);
}

/// d/dx of segment_potential; piecewise linear, slope -2 inside the segment.
inline double segment_force(const Segment& e, double x) {
  if (x <= e.lo) return e.mass();
  if (x >= e.hi) return -e.mass();
  return -(2.0 * x - e.lo - e.hi);
}

/// Potential of a uniform ball of given total charge and radius at distance r
/// from its center. radius = 0 is a point charge.
inline double ball_potential(double radius, double charge, double r) {
  if (charge == 0.0) return 0.0;
  if (r >= radius) {
    if (r == 0.0) throw SingularityError("point-charge potential at the origin");
    return charge / r;
  }
  return charge * (3.0 * radius * radius - r * r) / (2.0 * radius * radius * radius);
}

/// Radial derivative of ball_potential: -q/r^2 outside, -q r / R^3 inside.
inline double ball_potential_derivative(double radius, double charge, double r) {
  if (charge == 0.0) return 0.0;
  if (r >= radius) {
    if (r == 0.0) throw SingularityError("point-charge field at the origin");
    return -charge / (r * r);
  }
  return -charge * r / (radius * radius * radius);
}

namespace detail {
inline double unit_density_ball_charge(double radius) {
  return 4.0 / 3.0 * kPi * radius * radius * radius;
}
}  // namespace detail

/// Potential of a unit-density annulus at radius r (difference of two balls).
inline double shell_potential(const Shell& e, double r) {
  return ball_potential(e.outer, detail::unit_density_ball_charge(e.outer), r) -
         ball_potential(e.inner, detail::unit_density_ball_charge(e.inner), r);
}

inline double shell_potential_derivative(const Shell& e, double r) {
  return ball_potential_derivative(e.outer, detail::unit_density_ball_charge(e.outer), r) -
         ball_potential_derivative(e.inner, detail::unit_density_ball_charge(e.inner), r);
}

inline double basis_potential(const Segment& e, const Point<1>& r) {
  return segment_potential(e, r[0]);
}

inline double basis_potential(const Shell& e, const Point<3>& r) {
  return shell_potential(e, norm<3>(r));
}

/// Gradient of basis_potential with respect to r.
inline Point<1> basis_force(const Segment& e, const Point<1>& r) {
  return {segment_force(e, r[0])};
}

inline Point<3> basis_force(const Shell& e, const Point<3>& r) {
  const double rad = norm<3>(r);
  if (rad == 0.0) return {0.0, 0.0, 0.0};
  return scale<3>(r, shell_potential_derivative(e, rad) / rad);
}

// ---------------------------------------------------------------------------
// Basis sets and dual charges.

template <int Dim>
struct BasisSet {
  std::vector<BasisElement<Dim>> elements;

  std::size_t size() const { return elements.size(); }

  std::vector<double> masses() const {
    std::vector<double> m(elements.size());
    for (std::size_t i = 0; i < elements.size(); ++i) m[i] = elements[i].mass();
    return m;
  }

  /// m elements of equal width tiling the support: the interval [lo, hi] in
  /// d = 1, the radial range [0, R] in d = 3.
  static BasisSet evenly_spaced(const Support<Dim>& support, int m) {
    if (m < 1) throw ConfigError("basis needs at least one element");
    BasisSet basis;
    basis.elements.reserve(m);
    if constexpr (Dim == 1) {
      const double w = support.diameter() / m;
      for (int i = 0; i < m; ++i)
        basis.elements.push_back(
            {support.lo + i * w, i + 1 == m ? support.hi : support.lo + (i + 1) * w});
    } else {
      const double w = support.radius / m;
      for (int i = 0; i < m; ++i)
        basis.elements.push_back({i * w, i + 1 == m ? support.radius : (i + 1) * w});
    }
    return basis;
  }
};

/// A weighted combination of basis elements: the external charge
/// rho_ext = sum_i nu_i rho_i and its potential v = rho_ext convolved with the
/// interaction kernel.
template <int Dim>
struct DualCharge {
  BasisSet<Dim> basis;
  std::vector<double> weights;

  DualCharge() = default;
  DualCharge(BasisSet<Dim> b, std::vector<double> w) : basis(std::move(b)), weights(std::move(w)) {
    if (basis.size() != weights.size())
      throw ConfigError("dual charge weight count does not match basis size");
  }
  explicit DualCharge(BasisSet<Dim> b)
      : basis(std::move(b)), weights(basis.size(), 0.0) {}

  double potential(const Point<Dim>& r) const {
    double v = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
      v += weights[i] * basis_potential(basis.elements[i], r);
    return v;
  }

  Point<Dim> potential_gradient(const Point<Dim>& r) const {
    Point<Dim> g;
    g.fill(0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const Point<Dim> f = basis_force(basis.elements[i], r);
      for (int k = 0; k < Dim; ++k) g[k] += weights[i] * f[k];
    }
    return g;
  }

  /// Total external charge sum_i nu_i m_i.
  double charge_mass() const {
    double m = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) m += weights[i] * basis.elements[i].mass();
    return m;
  }
};

// ---------------------------------------------------------------------------
// Interaction energies D(mu, nu) in closed form.

/// Integral of |x - y| over [a1, b1] x [a2, b2]. Corner sum of the double
/// antiderivative -|x - y|^3 / 6.
inline double segment_pair_integral(double a1, double b1, double a2, double b2) {
  auto phi = [](double x, double y) {
    const double d = std::abs(x - y);
    return -d * d * d / 6.0;
  };
  return phi(b1, b2) - phi(a1, b2) - phi(b1, a2) + phi(a1, a2);
}

/// D for two concentric uniform balls:
/// q1 q2 (3 / (2 R_out)) (1 - R_in^2 / (5 R_out^2)). Reduces to 6/5 q^2 / R
/// for identical balls and to 3 q1 q2 / (2 R) for a point charge at the center.
inline double concentric_ball_energy(double r1, double q1, double r2, double q2) {
  if (q1 == 0.0 || q2 == 0.0) return 0.0;
  const double r_out = std::max(r1, r2);
  const double r_in = std::min(r1, r2);
  if (r_out == 0.0) throw SingularityError("interaction energy of two point charges at the origin");
  return q1 * q2 * 1.5 / r_out * (1.0 - r_in * r_in / (5.0 * r_out * r_out));
}

inline double coulomb_energy(const Segment& e1, const Segment& e2) {
  return -segment_pair_integral(e1.lo, e1.hi, e2.lo, e2.hi);
}

inline double coulomb_energy(const Shell& e1, const Shell& e2) {
  auto ball = [](double radius) {
    return std::pair<double, double>{radius, detail::unit_density_ball_charge(radius)};
  };
  const auto [ao, qao] = ball(e1.outer);
  const auto [ai, qai] = ball(e1.inner);
  const auto [bo, qbo] = ball(e2.outer);
  const auto [bi, qbi] = ball(e2.inner);
  return concentric_ball_energy(ao, qao, bo, qbo) - concentric_ball_energy(ao, qao, bi, qbi) -
         concentric_ball_energy(ai, qai, bo, qbo) + concentric_ball_energy(ai, qai, bi, qbi);
}

inline double coulomb_energy(const Segment& e, const Density<1>& rho) {
  return -rho.amplitude() * segment_pair_integral(e.lo, e.hi, rho.support.lo, rho.support.hi);
}
inline double coulomb_energy(const Density<1>& rho, const Segment& e) {
  return coulomb_energy(e, rho);
}

inline double coulomb_energy(const Shell& e, const Density<3>& rho) {
  const Shell full{0.0, rho.support.radius};
  // Uniform density rho has amplitude N / |B_R|; reuse the unit-density shell form.
  return rho.amplitude() * coulomb_energy(e, full);
}
inline double coulomb_energy(const Density<3>& rho, const Shell& e) {
  return coulomb_energy(e, rho);
}

inline double coulomb_energy(const Density<1>& r1, const Density<1>& r2) {
  return -r1.amplitude() * r2.amplitude() *
         segment_pair_integral(r1.support.lo, r1.support.hi, r2.support.lo, r2.support.hi);
}

inline double coulomb_energy(const Density<3>& r1, const Density<3>& r2) {
  return concentric_ball_energy(r1.support.radius, static_cast<double>(r1.n_electrons),
                                r2.support.radius, static_cast<double>(r2.n_electrons));
}

template <int Dim, typename Other>
double coulomb_energy(const DualCharge<Dim>& charge, const Other& other) {
  double d = 0.0;
  for (std::size_t i = 0; i < charge.basis.size(); ++i)
    d += charge.weights[i] * coulomb_energy(charge.basis.elements[i], other);
  return d;
}

template <int Dim>
double coulomb_energy(const DualCharge<Dim>& a, const DualCharge<Dim>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.basis.size(); ++i)
    d += a.weights[i] * coulomb_energy(a.basis.elements[i], b);
  return d;
}

template <int Dim>
double coulomb_energy(const Density<Dim>& rho, const DualCharge<Dim>& charge) {
  return coulomb_energy(charge, rho);
}

// ---------------------------------------------------------------------------
// Per-element energy tables and the external coupling term.

/// D(rho_i, rho) for every basis element, built once and reused.
template <int Dim>
std::vector<double> element_density_energies(const BasisSet<Dim>& basis,
                                             const Density<Dim>& rho) {
  std::vector<double> d(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    d[i] = coulomb_energy(basis.elements[i], rho);
  return d;
}

/// Gram-type table D(rho_i, rho_j) of the basis elements.
template <int Dim>
std::vector<std::vector<double>> element_pair_energies(const BasisSet<Dim>& basis) {
  std::vector<std::vector<double>> g(basis.size(), std::vector<double>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i; j < basis.size(); ++j)
      g[i][j] = g[j][i] = coulomb_energy(basis.elements[i], basis.elements[j]);
  return g;
}

/// Coupling term D(rho_ext[nu], rho) = integral of v[nu] d rho.
template <int Dim>
double external_term(const DualCharge<Dim>& charge, const Density<Dim>& rho) {
  return coulomb_energy(charge, rho);
}

/// Same coupling term for an arbitrary potential given as a scalar profile
/// (v(x) in d = 1, v(|r|) in d = 3), by adaptive quadrature.
template <typename F>
double external_term_quadrature(F&& v, const Density<1>& rho, double rel_tol = 1e-9) {
  return rho.amplitude() *
         integrate(std::forward<F>(v), rho.support.lo, rho.support.hi, rel_tol);
}

template <typename F>
double external_term_quadrature(F&& v, const Density<3>& rho, double rel_tol = 1e-9) {
  auto radial = [&v](double r) { return 4.0 * kPi * r * r * v(r); };
  return rho.amplitude() * integrate(radial, 0.0, rho.support.radius, rel_tol);
}

}  // namespace dualcharge
