#pragma once

// Unadjusted Langevin sampling of the N-particle Gibbs ensemble with
// Hamiltonian H = c - sum_i v(r_i) at inverse temperature beta, restricted to
// the support of rho by specular reflection. The sampled cloud feeds Monte
// Carlo estimates of the interaction moments between each basis element and
// the ensemble: the observable sum_j v_i(r_j) averages to D(rho_i, rho[nu]).
//
// In d = 3 the drift uses the truncated cost gradient so forces stay bounded;
// near-coincident configurations carry exponentially small Gibbs weight, so
// the stationary ensemble is essentially unaffected. beta = infinity is
// accepted and turns the noise off, leaving pure reflected gradient flow.
//
// Chains are independent units of work. Each chain draws its own RNG stream
// from (seed, chain index), and aggregation runs in fixed chain order, so
// results do not depend on how chains are scheduled.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <vector>

#include "dualcharge/common.hpp"
#include "dualcharge/geometry.hpp"
#include "dualcharge/kernels.hpp"
#include "dualcharge/model.hpp"
#include "dualcharge/parallel.hpp"

namespace dualcharge {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for substream `index` of `seed`. One avalanche round decorrelates
/// neighbouring indices, so chains (and optimizer iterations) get independent
/// streams from a single user-facing seed.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed + 0x9e3779b97f4a7c15ULL * index;
  return splitmix64(state);
}

}  // namespace detail

struct SamplerConfig {
  double beta = 50.0;
  double eta = 0.0;  // Langevin step size; 0 resolves to 1e-3 diam(support)^2
  int n_chains = 8;
  long burn_in = 10000;
  long n_steps = 100000;
  int thin = 10;
  std::uint64_t seed = 0;
  double alpha = 0.0;  // d = 3 drift truncation radius; 0 resolves to 1e-3 diam
};

inline void validate(const SamplerConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw ConfigError("sampler: beta must be positive");
  if (cfg.eta < 0.0) throw ConfigError("sampler: eta must be nonnegative");
  if (cfg.n_chains < 1) throw ConfigError("sampler: need at least one chain");
  if (cfg.burn_in < 0) throw ConfigError("sampler: burn_in must be nonnegative");
  if (cfg.n_steps < 1) throw ConfigError("sampler: need at least one step");
  if (cfg.thin < 1) throw ConfigError("sampler: thin must be at least 1");
  if (cfg.n_steps / cfg.thin < 1) throw ConfigError("sampler: thinning retains no samples");
}

template <int Dim>
double resolved_eta(const SamplerConfig& cfg, const Support<Dim>& support) {
  if (cfg.eta > 0.0) return cfg.eta;
  const double d = support.diameter();
  return 1e-3 * d * d;
}

template <int Dim>
double resolved_alpha(const SamplerConfig& cfg, const Support<Dim>& support) {
  return cfg.alpha > 0.0 ? cfg.alpha : default_truncation_alpha(support);
}

/// N particles confined to the support, plus the RNG stream that drives them.
template <int Dim>
struct ParticleSystem {
  Support<Dim> support;
  Configuration<Dim> positions;
  std::mt19937_64 engine;
  std::uint64_t steps = 0;

  ParticleSystem(const Support<Dim>& supp, int n_particles, std::uint64_t stream_seed)
      : support(supp), engine(stream_seed) {
    if (n_particles < 1) throw ConfigError("particle system needs at least one particle");
    positions.reserve(n_particles);
    for (int i = 0; i < n_particles; ++i) positions.push_back(support.sample_uniform(engine));
  }

  Configuration<Dim> scratch;  // cost gradient buffer reused across steps
};

/// One Euler-Maruyama step r += eta (-grad c + grad v) + sqrt(2 eta/beta) xi,
/// followed by reflection into the support.
template <int Dim>
void langevin_step(ParticleSystem<Dim>& state, const DualCharge<Dim>& charge,
                   const SamplerConfig& cfg) {
  const std::size_t n = state.positions.size();
  state.scratch.resize(n);
  const double eta = resolved_eta(cfg, state.support);
  if constexpr (Dim == 1) {
    cost_gradient<1>(state.positions, std::span<Point<1>>(state.scratch));
  } else {
    truncated_cost_gradient(state.positions, resolved_alpha(cfg, state.support),
                            std::span<Point<3>>(state.scratch));
  }
  const double sigma = std::sqrt(2.0 * eta / cfg.beta);  // 0 at beta = infinity
  std::normal_distribution<double> gauss;
  for (std::size_t i = 0; i < n; ++i) {
    Point<Dim> p = state.positions[i];
    const Point<Dim> pull = charge.potential_gradient(p);
    for (int k = 0; k < Dim; ++k) {
      p[k] += eta * (pull[k] - state.scratch[i][k]);
      if (sigma > 0.0) p[k] += sigma * gauss(state.engine);
    }
    for (int k = 0; k < Dim; ++k) {
      if (!std::isfinite(p[k])) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "langevin_step: particle %zu left the finite range at step %llu "
                      "(eta = %g too large?)",
                      i, static_cast<unsigned long long>(state.steps), eta);
        throw SamplerError(msg);
      }
    }
    state.positions[i] = state.support.reflect(p);
  }
  ++state.steps;
}

/// Monte Carlo estimate of D(rho_i, rho[nu]) for every basis element i.
struct MomentEstimate {
  std::vector<double> values;
  std::vector<double> std_errors;  // between-chain; 0 when only one chain ran
  long n_samples = 0;
};

namespace detail {

/// Drive one chain: burn in, then hand every retained (thinned) state to
/// `collect`. Chain `index` draws stream (cfg.seed, index).
template <int Dim, typename Collect>
void run_chain(const DualCharge<Dim>& charge, const Density<Dim>& rho,
               const SamplerConfig& cfg, std::size_t index, Collect&& collect) {
  ParticleSystem<Dim> state(rho.support, rho.n_electrons, derive_stream(cfg.seed, index));
  for (long s = 0; s < cfg.burn_in; ++s) langevin_step(state, charge, cfg);
  for (long s = 1; s <= cfg.n_steps; ++s) {
    langevin_step(state, charge, cfg);
    if (s % cfg.thin == 0) collect(state.positions);
  }
}

/// Mean over chains plus between-chain standard error, in fixed chain order.
inline void reduce_chains(const std::vector<std::vector<double>>& chain_means,
                          std::vector<double>& values, std::vector<double>& std_errors) {
  const std::size_t chains = chain_means.size();
  const std::size_t m = chain_means.front().size();
  values.assign(m, 0.0);
  std_errors.assign(m, 0.0);
  for (const auto& cm : chain_means)
    for (std::size_t i = 0; i < m; ++i) values[i] += cm[i];
  for (double& v : values) v /= chains;
  if (chains < 2) return;
  for (const auto& cm : chain_means)
    for (std::size_t i = 0; i < m; ++i) {
      const double d = cm[i] - values[i];
      std_errors[i] += d * d;
    }
  for (double& se : std_errors) se = std::sqrt(se / (chains - 1) / chains);
}

}  // namespace detail

/// Estimate D(rho_i, rho[nu]) = < sum_j v_i(r_j) > over the Gibbs ensemble,
/// one estimate per basis element, with between-chain standard errors.
template <int Dim>
MomentEstimate estimate_moments(const DualCharge<Dim>& charge, const Density<Dim>& rho,
                                const SamplerConfig& cfg) {
  validate(cfg);
  const std::size_t m = charge.basis.size();
  const long retained = cfg.n_steps / cfg.thin;
  std::vector<std::vector<double>> chain_means(cfg.n_chains, std::vector<double>(m, 0.0));
  parallel_for(cfg.n_chains, [&](std::size_t c) {
    auto& acc = chain_means[c];
    detail::run_chain(charge, rho, cfg, c, [&](const Configuration<Dim>& positions) {
      for (std::size_t i = 0; i < m; ++i) {
        double obs = 0.0;
        for (const auto& r : positions) obs += basis_potential(charge.basis.elements[i], r);
        acc[i] += obs;
      }
    });
    for (double& a : acc) a /= retained;
  });
  MomentEstimate out;
  out.n_samples = static_cast<long>(cfg.n_chains) * retained;
  detail::reduce_chains(chain_means, out.values, out.std_errors);
  return out;
}

/// Position histogram of the sampled ensemble: linear bins over the interval
/// in d = 1, radial bins over [0, R] in d = 3. Values are densities (per
/// length, resp. per volume), normalized so that the histogram integrates to
/// N over the support.
struct Histogram {
  std::vector<double> edges;       // bins + 1 monotone edges
  std::vector<double> values;      // one density value per bin
  std::vector<double> std_errors;  // between-chain; 0 when only one chain ran
  std::vector<double> measures;    // length resp. volume of each bin
  long n_samples = 0;

  double mass() const {
    double total = 0.0;
    for (std::size_t b = 0; b < values.size(); ++b) total += values[b] * measures[b];
    return total;
  }
};

template <int Dim>
Histogram density_histogram(const DualCharge<Dim>& charge, const Density<Dim>& rho,
                            const SamplerConfig& cfg, int bins) {
  validate(cfg);
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  const long retained = cfg.n_steps / cfg.thin;

  Histogram out;
  out.edges.resize(bins + 1);
  out.measures.resize(bins);
  double lo = 0.0, width = 0.0;
  if constexpr (Dim == 1) {
    lo = rho.support.lo;
    width = rho.support.diameter() / bins;
    for (int b = 0; b <= bins; ++b) out.edges[b] = lo + b * width;
    out.edges[bins] = rho.support.hi;
    for (int b = 0; b < bins; ++b) out.measures[b] = out.edges[b + 1] - out.edges[b];
  } else {
    width = rho.support.radius / bins;
    for (int b = 0; b <= bins; ++b) out.edges[b] = b * width;
    out.edges[bins] = rho.support.radius;
    for (int b = 0; b < bins; ++b) {
      const double a = out.edges[b], c = out.edges[b + 1];
      out.measures[b] = 4.0 / 3.0 * kPi * (c * c * c - a * a * a);
    }
  }

  std::vector<std::vector<double>> chain_values(cfg.n_chains, std::vector<double>(bins, 0.0));
  parallel_for(cfg.n_chains, [&](std::size_t c) {
    std::vector<long> counts(bins, 0);
    detail::run_chain(charge, rho, cfg, c, [&](const Configuration<Dim>& positions) {
      for (const auto& r : positions) {
        const double coord = Dim == 1 ? r[0] - lo : norm<Dim>(r);
        int b = static_cast<int>(coord / width);
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1;
        ++counts[b];
      }
    });
    const double total = static_cast<double>(retained) * rho.n_electrons;
    for (int b = 0; b < bins; ++b)
      chain_values[c][b] = rho.n_electrons * (counts[b] / total) / out.measures[b];
  });
  out.n_samples = static_cast<long>(cfg.n_chains) * retained * rho.n_electrons;
  detail::reduce_chains(chain_values, out.values, out.std_errors);
  return out;
}

}  // namespace dualcharge
