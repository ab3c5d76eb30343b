#pragma once

// Stochastic maximization of the dual objective G[nu] = F_beta(v[nu]) + int
// v[nu] rho over the basis weights. The gradient has one entry per basis
// element, dG/dnu_i = D(rho_i, rho - rho[nu]): the exact interaction
// D(rho_i, rho) minus the sampled moment from the Gibbs ensemble. The outer
// loop is Nesterov-accelerated gradient ascent with a fixed step; the
// stopping tolerance couples to the Monte Carlo noise of the gradient
// because iterating below that noise floor cannot make progress.
//
// Each iteration re-seeds the sampler from (seed, iteration), so a full run
// is reproducible while successive iterations remain independent.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <vector>

#include "dualcharge/common.hpp"
#include "dualcharge/kernels.hpp"
#include "dualcharge/model.hpp"
#include "dualcharge/sampler.hpp"

namespace dualcharge {

struct OptimizerConfig {
  double step_size = 0.0;  // 0 resolves to 0.5 / max row sum of the basis Gram matrix
  double momentum = 0.9;
  int max_iters = 500;
  double grad_tol = 0.0;
  bool project_delta_b = false;
  SamplerConfig sampler;
};

inline void validate(const OptimizerConfig& cfg) {
  if (cfg.step_size < 0.0) throw ConfigError("optimizer: step_size must be nonnegative");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ConfigError("optimizer: momentum must lie in [0, 1)");
  if (cfg.max_iters < 1) throw ConfigError("optimizer: need at least one iteration");
  if (cfg.grad_tol < 0.0) throw ConfigError("optimizer: grad_tol must be nonnegative");
  validate(cfg.sampler);
}

struct GradientEstimate {
  std::vector<double> values;
  std::vector<double> std_errors;
};

/// dG/dnu_i = D(rho_i, rho) - D(rho_i, rho[nu]), the second term estimated by
/// Langevin sampling; std errors are the moment estimator's.
template <int Dim>
GradientEstimate gradient(const DualCharge<Dim>& charge, const Density<Dim>& rho,
                          const SamplerConfig& cfg) {
  const MomentEstimate moments = estimate_moments(charge, rho, cfg);
  const std::vector<double> target = element_density_energies(charge.basis, rho);
  GradientEstimate g;
  g.values.resize(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) g.values[i] = target[i] - moments.values[i];
  g.std_errors = moments.std_errors;
  return g;
}

struct IterationRecord {
  double grad_norm = 0.0;
  double mass = 0.0;
  double se_norm = 0.0;
};

struct OptimizerState {
  std::vector<double> nu;
  std::vector<double> buffer;  // accumulated momentum
  long iteration = 0;
  std::vector<IterationRecord> history;  // one record per iteration
  bool converged = false;
  double step_used = 0.0;
};

/// Euclidean projection onto Delta_B = {nu >= 0, sum_i nu_i m_i <= bound}.
/// KKT form x = max(0, nu - lambda m) with lambda found by bisection.
inline std::vector<double> project_delta_b(std::vector<double> nu,
                                           const std::vector<double>& masses, double bound) {
  if (nu.size() != masses.size())
    throw ConfigError("projection: weight and mass vectors differ in size");
  if (bound < 0.0) throw ConfigError("projection: mass bound must be nonnegative");
  auto clipped_mass = [&](double lambda, std::vector<double>& out) {
    double total = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      out[i] = std::max(0.0, nu[i] - lambda * masses[i]);
      total += out[i] * masses[i];
    }
    return total;
  };
  std::vector<double> x(nu.size());
  if (clipped_mass(0.0, x) <= bound) return x;
  double lo = 0.0, hi = 1.0;
  while (clipped_mass(hi, x) > bound) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw DivergenceError("projection: could not bracket the multiplier");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clipped_mass(mid, x) > bound ? lo : hi) = mid;
  }
  clipped_mass(hi, x);
  return x;
}

/// Default step: 0.5 over the largest absolute row sum of the Gram matrix
/// D(rho_i, rho_j), a cheap bound on the objective's curvature scale.
template <int Dim>
double default_step_size(const BasisSet<Dim>& basis) {
  const std::vector<std::vector<double>> gram = element_pair_energies(basis);
  double worst = 0.0;
  for (const auto& row : gram) {
    double sum = 0.0;
    for (double e : row) sum += std::abs(e);
    worst = std::max(worst, sum);
  }
  if (!(worst > 0.0)) throw ConfigError("optimizer: degenerate basis Gram matrix");
  return 0.5 / worst;
}

namespace detail {

struct NoopMonitor {
  template <typename... Args>
  void operator()(Args&&...) const {}
};

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

/// NAG ascent with an injectable gradient: grad_at(charge, sampler_cfg) is
/// evaluated at the lookahead point nu + momentum * buffer. The monitor is
/// called once per iteration with the state and the current iterate's charge.
template <int Dim, typename GradFn, typename Monitor = detail::NoopMonitor>
OptimizerState nag_run_with(std::vector<double> nu0, const Density<Dim>& rho,
                            const BasisSet<Dim>& basis, const OptimizerConfig& cfg,
                            GradFn&& grad_at, Monitor&& monitor = {}) {
  validate(cfg);
  if (nu0.size() != basis.size())
    throw ConfigError("optimizer: initial weights do not match basis size");
  const std::vector<double> masses = basis.masses();
  const double bound = rho.n_electrons - 1.0;

  OptimizerState state;
  state.nu = std::move(nu0);
  state.buffer.assign(state.nu.size(), 0.0);
  state.step_used = cfg.step_size > 0.0 ? cfg.step_size : default_step_size(basis);
  state.history.reserve(cfg.max_iters);

  std::vector<double> lookahead(state.nu.size());
  for (long iter = 0; iter < cfg.max_iters; ++iter) {
    for (std::size_t i = 0; i < state.nu.size(); ++i)
      lookahead[i] = state.nu[i] + cfg.momentum * state.buffer[i];
    SamplerConfig iter_cfg = cfg.sampler;
    iter_cfg.seed = detail::derive_stream(cfg.sampler.seed, static_cast<std::uint64_t>(iter));
    const GradientEstimate g =
        grad_at(DualCharge<Dim>(basis, lookahead), static_cast<const SamplerConfig&>(iter_cfg));

    const double grad_norm = detail::norm2(g.values);
    const double se_norm = detail::norm2(g.std_errors);
    ++state.iteration;
    if (grad_norm <= std::max(cfg.grad_tol, 3.0 * se_norm)) {
      state.converged = true;
      double mass = 0.0;
      for (std::size_t i = 0; i < state.nu.size(); ++i) mass += state.nu[i] * masses[i];
      state.history.push_back({grad_norm, mass, se_norm});
      monitor(state, DualCharge<Dim>(basis, state.nu));
      break;
    }

    for (std::size_t i = 0; i < state.nu.size(); ++i) {
      state.buffer[i] = cfg.momentum * state.buffer[i] + state.step_used * g.values[i];
      state.nu[i] += state.buffer[i];
    }
    if (cfg.project_delta_b) state.nu = project_delta_b(state.nu, masses, bound);

    const double nu_norm = detail::norm2(state.nu);
    if (nu_norm > 1e6) {
      char msg[120];
      std::snprintf(msg, sizeof(msg),
                    "optimizer: weights diverged (norm %.3g at iteration %ld)", nu_norm,
                    iter + 1);
      throw DivergenceError(msg);
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < state.nu.size(); ++i) mass += state.nu[i] * masses[i];
    state.history.push_back({grad_norm, mass, se_norm});
    monitor(state, DualCharge<Dim>(basis, state.nu));
  }
  return state;
}

template <int Dim, typename Monitor = detail::NoopMonitor>
OptimizerState nag_run(std::vector<double> nu0, const Density<Dim>& rho,
                       const BasisSet<Dim>& basis, const OptimizerConfig& cfg,
                       Monitor&& monitor = {}) {
  return nag_run_with(
      std::move(nu0), rho, basis, cfg,
      [&rho](const DualCharge<Dim>& charge, const SamplerConfig& iter_cfg) {
        return gradient(charge, rho, iter_cfg);
      },
      std::forward<Monitor>(monitor));
}

// ---------------------------------------------------------------------------
// Importance-sampling free energy, F_beta = -log(z_beta)/beta with z_beta the
// mean Gibbs weight under independent uniform configurations. Practical only
// while beta times the Hamiltonian spread stays moderate; used as a
// diagnostic and as the finite-difference oracle for the gradient.

struct FreeEnergyEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double effective_samples = 0.0;
};

template <int Dim, typename Potential>
FreeEnergyEstimate free_energy_estimate_with(const Potential& v, const Density<Dim>& rho,
                                             double beta, long n_samples, std::uint64_t seed,
                                             double alpha = 0.0) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("free energy: beta must be positive and finite");
  if (n_samples < 2) throw ConfigError("free energy: need at least two samples");
  const double a = alpha > 0.0 ? alpha : default_truncation_alpha(rho.support);
  std::mt19937_64 engine(detail::derive_stream(seed, 0));
  std::vector<double> log_weight(n_samples);
  Configuration<Dim> config(rho.n_electrons);
  for (long k = 0; k < n_samples; ++k) {
    for (auto& p : config) p = rho.support.sample_uniform(engine);
    double c;
    if constexpr (Dim == 3) {
      c = truncated_cost(config, a);
    } else {
      c = cost<Dim>(std::span<const Point<Dim>>(config));
    }
    double pot = 0.0;
    for (const auto& p : config) pot += v.potential(p);
    log_weight[k] = -beta * (c - pot);
  }
  double peak = log_weight.front();
  for (double h : log_weight) peak = std::max(peak, h);
  double sum = 0.0, sum_sq = 0.0;
  for (double h : log_weight) {
    const double w = std::exp(h - peak);
    sum += w;
    sum_sq += w * w;
  }
  const double ess = sum * sum / sum_sq;
  if (ess < 10.0) {
    char msg[120];
    std::snprintf(msg, sizeof(msg),
                  "free energy: importance weights degenerate (ESS %.2f < 10)", ess);
    throw SamplerError(msg);
  }
  const double mean = sum / n_samples;
  const double var =
      (sum_sq / n_samples - mean * mean) * n_samples / (n_samples - 1.0);
  FreeEnergyEstimate out;
  out.value = -(peak + std::log(mean)) / beta;
  out.std_error = std::sqrt(var / n_samples) / (mean * beta);
  out.effective_samples = ess;
  return out;
}

template <int Dim>
FreeEnergyEstimate free_energy_estimate(const DualCharge<Dim>& charge, const Density<Dim>& rho,
                                        double beta, long n_samples, std::uint64_t seed) {
  return free_energy_estimate_with<Dim>(charge, rho, beta, n_samples, seed);
}

}  // namespace dualcharge
