#pragma once

// Zero-temperature limit: E_N(v) is the minimum of the potential-energy
// landscape c_alpha(r_1..r_N) - sum_i v(r_i) over configurations confined to
// the support. Local minima abound, so the global search runs many projected
// gradient descents (Armijo backtracking) from independent random starts and
// keeps the best. F_SCE[nu] adds the density coupling int v[nu] rho.
//
// Start k draws its RNG stream from (seed, k), so enlarging n_starts extends
// the start set without perturbing earlier starts: the returned value is
// monotone in n_starts for a fixed seed.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "dualcharge/common.hpp"
#include "dualcharge/geometry.hpp"
#include "dualcharge/kernels.hpp"
#include "dualcharge/model.hpp"
#include "dualcharge/parallel.hpp"
#include "dualcharge/sampler.hpp"

namespace dualcharge {

struct MultistartConfig {
  int n_starts = 0;  // 0 resolves to 64 N
  int max_descent_iters = 500;
  double armijo_c = 1e-4;   // sufficient-decrease fraction
  double backtrack = 0.5;   // step shrink factor
  double alpha = 0.0;       // cost truncation radius; 0 resolves to 1e-3 diam
  std::uint64_t seed = 0;
  bool structured_init = false;  // cell/shell-seeded starts instead of uniform
};

inline void validate(const MultistartConfig& cfg) {
  if (cfg.n_starts < 0) throw ConfigError("multistart: n_starts must be nonnegative");
  if (cfg.max_descent_iters < 1)
    throw ConfigError("multistart: need at least one descent iteration");
  if (!(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0))
    throw ConfigError("multistart: armijo_c must lie in (0, 1)");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw ConfigError("multistart: backtrack must lie in (0, 1)");
  if (cfg.alpha < 0.0) throw ConfigError("multistart: alpha must be nonnegative");
}

template <int Dim>
struct EnergyMinimum {
  double value = std::numeric_limits<double>::infinity();
  Configuration<Dim> configuration;
  int n_starts_used = 0;
  double non_converged_fraction = 0.0;
  bool reliable = true;  // false when over 20% of starts failed to converge
};

namespace detail {

template <int Dim, typename Potential>
double landscape_value(const Potential& v, const Configuration<Dim>& x, double alpha) {
  double c;
  if constexpr (Dim == 3) {
    c = truncated_cost(x, alpha);
  } else {
    c = cost<Dim>(std::span<const Point<Dim>>(x));
  }
  double pot = 0.0;
  for (const auto& p : x) pot += v.potential(p);
  return c - pot;
}

template <int Dim, typename Potential>
void landscape_gradient(const Potential& v, const Configuration<Dim>& x, double alpha,
                        Configuration<Dim>& g) {
  g.resize(x.size());
  if constexpr (Dim == 3) {
    truncated_cost_gradient(x, alpha, std::span<Point<Dim>>(g));
  } else {
    cost_gradient<1>(x, std::span<Point<Dim>>(g));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Point<Dim> pv = v.potential_gradient(x[i]);
    for (int k = 0; k < Dim; ++k) g[i][k] -= pv[k];
  }
}

/// Projected gradient descent with Armijo backtracking from x. Returns true
/// when a stationary point was reached (step below tolerance, or no descent
/// direction survives the line search), false when iterations ran out.
template <int Dim, typename Potential>
bool descend(const Potential& v, const Support<Dim>& support, double alpha,
             const MultistartConfig& cfg, Configuration<Dim>& x, double& value) {
  const double diam = support.diameter();
  const double step_tol = 1e-9 * diam;
  Configuration<Dim> g, y;
  double energy = landscape_value<Dim>(v, x, alpha);
  landscape_gradient<Dim>(v, x, alpha, g);
  double gmax = 0.0;
  for (const auto& p : g)
    for (int k = 0; k < Dim; ++k) gmax = std::max(gmax, std::abs(p[k]));
  const double t0 = 0.1 * diam / std::max(1.0, gmax);
  double t = t0;

  for (int it = 0; it < cfg.max_descent_iters; ++it) {
    bool accepted = false;
    double trial_energy = 0.0;
    while (t >= 1e-14 * t0) {
      y.resize(x.size());
      double step_inf = 0.0, gain = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        Point<Dim> p = x[i];
        for (int k = 0; k < Dim; ++k) p[k] -= t * g[i][k];
        y[i] = support.clamp(p);
        for (int k = 0; k < Dim; ++k) {
          const double d = y[i][k] - x[i][k];
          step_inf = std::max(step_inf, std::abs(d));
          gain += g[i][k] * d;
        }
      }
      if (step_inf <= step_tol) {
        value = energy;
        return true;
      }
      trial_energy = landscape_value<Dim>(v, y, alpha);
      if (trial_energy <= energy + cfg.armijo_c * gain) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack;
    }
    if (!accepted) {  // no descent at any step size: stationary within resolution
      value = energy;
      return true;
    }
    x.swap(y);
    energy = trial_energy;
    landscape_gradient<Dim>(v, x, alpha, g);
    t = std::min(t / cfg.backtrack, 1e3 * t0);
  }
  value = energy;
  return false;
}

template <int Dim>
Configuration<Dim> uniform_start(const Support<Dim>& support, int n, std::mt19937_64& rng) {
  Configuration<Dim> x;
  x.reserve(n);
  for (int i = 0; i < n; ++i) x.push_back(support.sample_uniform(rng));
  return x;
}

/// One particle per equal-measure cell (d = 1) or equal-volume shell (d = 3),
/// jittered, as a structured alternative to uniform starts.
template <int Dim>
Configuration<Dim> structured_start(const Support<Dim>& support, int n, std::mt19937_64& rng) {
  Configuration<Dim> x;
  x.reserve(n);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  if constexpr (Dim == 1) {
    const double w = support.diameter() / n;
    for (int i = 0; i < n; ++i)
      x.push_back(support.clamp({support.lo + (i + 0.5 + jitter(rng)) * w}));
  } else {
    std::normal_distribution<double> gauss;
    for (int i = 0; i < n; ++i) {
      const double r =
          support.radius * std::cbrt(std::min(1.0, std::max(0.0, (i + 0.5 + jitter(rng)) / n)));
      Point<3> dir{gauss(rng), gauss(rng), gauss(rng)};
      const double len = norm<3>(dir);
      if (len < 1e-12) {
        dir = {1.0, 0.0, 0.0};
        x.push_back(scale<3>(dir, r));
      } else {
        x.push_back(scale<3>(dir, r / len));
      }
    }
  }
  return x;
}

}  // namespace detail

/// Minimum of c_alpha - sum_i v(r_i) over Omega^N by multistart projected
/// gradient descent, for any potential exposing potential() and
/// potential_gradient().
template <int Dim, typename Potential>
EnergyMinimum<Dim> e_n_omega_with(const Potential& v, const Support<Dim>& support,
                                  int n_electrons, const MultistartConfig& cfg) {
  validate(cfg);
  if (n_electrons < 1) throw ConfigError("need at least one electron");
  const int starts = cfg.n_starts > 0 ? cfg.n_starts : 64 * n_electrons;
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : default_truncation_alpha(support);

  std::vector<double> values(starts);
  std::vector<Configuration<Dim>> configs(starts);
  std::vector<char> converged(starts);
  parallel_for(starts, [&](std::size_t s) {
    std::mt19937_64 rng(detail::derive_stream(cfg.seed, s));
    configs[s] = cfg.structured_init
                     ? detail::structured_start<Dim>(support, n_electrons, rng)
                     : detail::uniform_start<Dim>(support, n_electrons, rng);
    converged[s] =
        detail::descend<Dim>(v, support, alpha, cfg, configs[s], values[s]) ? 1 : 0;
  });

  EnergyMinimum<Dim> best;
  best.n_starts_used = starts;
  int failures = 0;
  for (int s = 0; s < starts; ++s) {
    if (!converged[s]) ++failures;
    if (values[s] < best.value) {  // strict: ties keep the earliest start
      best.value = values[s];
      best.configuration = configs[s];
    }
  }
  best.non_converged_fraction = static_cast<double>(failures) / starts;
  best.reliable = best.non_converged_fraction <= 0.2;
  return best;
}

template <int Dim>
EnergyMinimum<Dim> e_n_omega(const DualCharge<Dim>& charge, const Density<Dim>& rho,
                             const MultistartConfig& cfg) {
  return e_n_omega_with<Dim>(charge, rho.support, rho.n_electrons, cfg);
}

/// F_SCE[nu] = E_N(v[nu]) + int v[nu] rho, the zero-temperature dual value.
template <int Dim>
double f_sce(const DualCharge<Dim>& charge, const Density<Dim>& rho,
             const MultistartConfig& cfg) {
  return e_n_omega(charge, rho, cfg).value + external_term(charge, rho);
}

}  // namespace dualcharge
