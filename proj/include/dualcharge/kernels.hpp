#pragma once
// Pairwise interaction kernels and N-particle interaction costs.
//
// The pair kernel is the Coulomb interaction 1/|r - r'| in d = 3 and its
// one-dimensional analogue -|r - r'|. The N-particle cost is the sum over
// unordered pairs. In d = 3 a truncated variant caps each pair term at 1/alpha
// so that gradients stay bounded near coincidence; at separation exactly alpha
// both branches agree in value and the smooth branch is used for the gradient.

#include <cmath>
#include <span>
#include <vector>

#include "dualcharge/common.hpp"
#include "dualcharge/geometry.hpp"

namespace dualcharge {

template <int Dim>
using Configuration = std::vector<Point<Dim>>;

template <int Dim>
inline double kernel(const Point<Dim>& a, const Point<Dim>& b) {
  static_assert(Dim == 1 || Dim == 3, "kernel defined for d = 1 and d = 3 only");
  if constexpr (Dim == 1) {
    return -std::abs(a[0] - b[0]);
  } else {
    const double r = norm<3>(sub<3>(a, b));
    if (r == 0.0) throw SingularityError("coulomb kernel evaluated at coincident points");
    return 1.0 / r;
  }
}

template <int Dim>
inline double cost(std::span<const Point<Dim>> config) {
  double c = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = i + 1; j < config.size(); ++j)
      c += kernel<Dim>(config[i], config[j]);
  return c;
}

/// Interaction cost with each 1/|r_i - r_j| capped at 1/alpha (d = 3 only).
inline double truncated_cost(std::span<const Point<3>> config, double alpha) {
  double c = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = i + 1; j < config.size(); ++j) {
      const double r = norm<3>(sub<3>(config[i], config[j]));
      c += (r < alpha) ? 1.0 / alpha : 1.0 / r;
    }
  return c;
}

template <int Dim>
inline void cost_gradient(std::span<const Point<Dim>> config, std::span<Point<Dim>> grad) {
  static_assert(Dim == 1 || Dim == 3);
  for (auto& g : grad) g.fill(0.0);
  for (std::size_t i = 0; i < config.size(); ++i) {
    for (std::size_t j = i + 1; j < config.size(); ++j) {
      if constexpr (Dim == 1) {
        const double d = config[i][0] - config[j][0];
        const double s = (d > 0.0) - (d < 0.0);
        grad[i][0] -= s;
        grad[j][0] += s;
      } else {
        const Point<3> d = sub<3>(config[i], config[j]);
        const double r = norm<3>(d);
        if (r == 0.0) throw SingularityError("cost gradient at coincident points");
        const double w = 1.0 / (r * r * r);
        for (int k = 0; k < 3; ++k) {
          grad[i][k] -= w * d[k];
          grad[j][k] += w * d[k];
        }
      }
    }
  }
}

/// Gradient of truncated_cost: capped pairs contribute zero, pairs at
/// separation >= alpha use the smooth Coulomb branch.
inline void truncated_cost_gradient(std::span<const Point<3>> config, double alpha,
                                    std::span<Point<3>> grad) {
  for (auto& g : grad) g.fill(0.0);
  for (std::size_t i = 0; i < config.size(); ++i) {
    for (std::size_t j = i + 1; j < config.size(); ++j) {
      const Point<3> d = sub<3>(config[i], config[j]);
      const double r = norm<3>(d);
      if (r < alpha) continue;
      const double w = 1.0 / (r * r * r);
      for (int k = 0; k < 3; ++k) {
        grad[i][k] -= w * d[k];
        grad[j][k] += w * d[k];
      }
    }
  }
}

/// Default pair truncation scale: 1e-3 times the support diameter.
template <int Dim>
inline double default_truncation_alpha(const Support<Dim>& support) {
  return 1e-3 * support.diameter();
}

}  // namespace dualcharge
