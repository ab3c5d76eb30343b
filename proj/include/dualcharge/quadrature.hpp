#pragma once
// Adaptive quadrature wrappers with an enforced error contract, plus generic
// pairwise interaction energies computed by nested quadrature. The nested
// forms serve as the fallback for measures without closed-form energies and as
// the independent oracle the closed forms are tested against.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "dualcharge/common.hpp"

namespace dualcharge {

/// Adaptive Gauss-Kronrod integration of f over [a, b]. Throws
/// QuadratureError if the error estimate exceeds max(abs_tol, rel_tol * |I|).
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-9, double abs_tol = 1e-12) {
  if (a == b) return 0.0;
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, 15, rel_tol * 0.1, &error);
  if (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    std::ostringstream msg;
    msg << "quadrature over [" << a << ", " << b << "] reached error " << error
        << " (value " << value << ", requested rel " << rel_tol << ", abs " << abs_tol << ")";
    throw QuadratureError(msg.str());
  }
  return value;
}

/// Tanh-sinh integration for integrands with integrable endpoint
/// singularities. Same error contract as integrate().
template <typename F>
double integrate_singular(F&& f, double a, double b, double rel_tol = 1e-9,
                          double abs_tol = 1e-12) {
  if (a == b) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  double error = 0.0;
  double l1 = 0.0;
  const double value = ts.integrate(std::forward<F>(f), a, b, rel_tol * 0.1, &error, &l1);
  if (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    std::ostringstream msg;
    msg << "singular quadrature over [" << a << ", " << b << "] reached relative error "
        << error << " (value " << value << ")";
    throw QuadratureError(msg.str());
  }
  return value;
}

/// Interaction energy of two 1D charge densities f1, f2 under the kernel
/// -|x - y|, by nested adaptive quadrature (inner integral split at the kink).
template <typename F1, typename F2>
double pair_energy_1d(F1 f1, double a1, double b1, F2 f2, double a2, double b2,
                      double rel_tol = 1e-8) {
  auto outer = [&](double x) {
    auto inner = [&](double y) { return f2(y) * -std::abs(x - y); };
    if (x > a2 && x < b2)
      return f1(x) * (integrate(inner, a2, x, rel_tol * 0.1, 1e-9) +
                      integrate(inner, x, b2, rel_tol * 0.1, 1e-9));
    return f1(x) * integrate(inner, a2, b2, rel_tol * 0.1, 1e-9);
  };
  return integrate(outer, a1, b1, rel_tol);
}

/// Interaction energy of two radial charge distributions given as
/// charge-per-radius profiles lam(r) (i.e. 4 pi r^2 times the volumetric
/// density), under the Coulomb kernel: D = integral of lam1(r) lam2(s) / max(r, s).
template <typename L1, typename L2>
double pair_energy_radial(L1 lam1, double a1, double b1, L2 lam2, double a2, double b2,
                          double rel_tol = 1e-8) {
  auto outer = [&](double r) {
    double inner = 0.0;
    const double lo_cut = std::min(std::max(r, a2), b2);
    if (lo_cut > a2 && r > 0.0)
      inner += integrate([&](double s) { return lam2(s); }, a2, lo_cut, rel_tol * 0.1, 1e-9) / r;
    if (b2 > lo_cut)
      inner += integrate([&](double s) { return lam2(s) / s; }, lo_cut, b2, rel_tol * 0.1, 1e-9);
    return lam1(r) * inner;
  };
  return integrate(outer, a1, b1, rel_tol);
}

/// Bisection root bracket for a monotone function: returns x in [lo, hi] with
/// |f(x)| driven below what the bracket width tol allows.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  const bool increasing = f(hi) > flo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dualcharge
