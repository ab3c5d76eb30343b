#pragma once
// Points and particle supports for dimensions 1 and 3.
//
// The support of the target density is an interval [lo, hi] in d = 1 and a
// centered ball of given radius in d = 3. Both supply containment tests,
// clamping, specular reflection (used by the reflected Langevin walk), and
// uniform sampling.

#include <array>
#include <cmath>
#include <random>

namespace dualcharge {

template <int Dim>
using Point = std::array<double, Dim>;

template <int Dim>
inline double dot(const Point<Dim>& a, const Point<Dim>& b) {
  double s = 0.0;
  for (int k = 0; k < Dim; ++k) s += a[k] * b[k];
  return s;
}

template <int Dim>
inline double norm_sq(const Point<Dim>& a) {
  return dot<Dim>(a, a);
}

template <int Dim>
inline double norm(const Point<Dim>& a) {
  return std::sqrt(norm_sq<Dim>(a));
}

template <int Dim>
inline Point<Dim> sub(const Point<Dim>& a, const Point<Dim>& b) {
  Point<Dim> r;
  for (int k = 0; k < Dim; ++k) r[k] = a[k] - b[k];
  return r;
}

template <int Dim>
inline Point<Dim> add(const Point<Dim>& a, const Point<Dim>& b) {
  Point<Dim> r;
  for (int k = 0; k < Dim; ++k) r[k] = a[k] + b[k];
  return r;
}

template <int Dim>
inline Point<Dim> scale(const Point<Dim>& a, double c) {
  Point<Dim> r;
  for (int k = 0; k < Dim; ++k) r[k] = c * a[k];
  return r;
}

namespace detail {

// Fold x into [lo, hi] by repeated specular reflection at both ends.
inline double triangle_fold(double x, double lo, double hi) {
  const double len = hi - lo;
  double t = std::fmod(x - lo, 2.0 * len);
  if (t < 0.0) t += 2.0 * len;
  return lo + (t <= len ? t : 2.0 * len - t);
}

}  // namespace detail

template <int Dim>
struct Support;

template <>
struct Support<1> {
  double lo = -1.0;
  double hi = 1.0;

  double diameter() const { return hi - lo; }
  double volume() const { return hi - lo; }

  bool contains(const Point<1>& p, double tol = 0.0) const {
    return p[0] >= lo - tol && p[0] <= hi + tol;
  }

  Point<1> clamp(Point<1> p) const {
    if (p[0] < lo) p[0] = lo;
    if (p[0] > hi) p[0] = hi;
    return p;
  }

  Point<1> reflect(Point<1> p) const {
    if (p[0] < lo || p[0] > hi) p[0] = detail::triangle_fold(p[0], lo, hi);
    return clamp(p);  // absorb the last ulp of fold rounding
  }

  template <typename Rng>
  Point<1> sample_uniform(Rng& rng) const {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(rng)};
  }
};

template <>
struct Support<3> {
  double radius = 1.0;

  double diameter() const { return 2.0 * radius; }
  double volume() const { return 4.0 / 3.0 * kPi * radius * radius * radius; }

  bool contains(const Point<3>& p, double tol = 0.0) const {
    return norm<3>(p) <= radius + tol;
  }

  Point<3> clamp(Point<3> p) const {
    const double r = norm<3>(p);
    if (r > radius) p = scale<3>(p, radius / r);
    return p;
  }

  // Radial specular reflection at the sphere: fold |p| into [0, radius],
  // keeping the direction. Valid for arbitrary overshoot.
  Point<3> reflect(Point<3> p) const {
    const double r = norm<3>(p);
    if (r <= radius || r == 0.0) return p;
    const double rf = detail::triangle_fold(r, 0.0, radius);
    return clamp(scale<3>(p, rf / r));  // absorb the last ulp of fold rounding
  }

  template <typename Rng>
  Point<3> sample_uniform(Rng& rng) const {
    std::uniform_real_distribution<double> u(-radius, radius);
    while (true) {
      Point<3> p = {u(rng), u(rng), u(rng)};
      if (norm_sq<3>(p) <= radius * radius) return p;
    }
  }
};

}  // namespace dualcharge
