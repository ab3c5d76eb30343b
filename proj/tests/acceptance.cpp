// Acceptance suite for the dual charge solver. Each criterion is a
// self-contained scenario ending in exactly one [PASS]/[FAIL] line; detail
// lines above it show the measured quantities. Run with no arguments for all
// seven criteria, or pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualcharge/experiment.hpp"
#include "dualcharge/kernels.hpp"
#include "dualcharge/model.hpp"
#include "dualcharge/optimizer.hpp"
#include "dualcharge/oracles.hpp"
#include "dualcharge/quadrature.hpp"
#include "dualcharge/sampler.hpp"
#include "dualcharge/zero_temp.hpp"

using namespace dualcharge;

namespace {

std::string note(const char* fmt, ...) {
  char buf[320];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

struct Checker {
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    std::printf("    %-4s %s\n", cond ? "ok" : "BAD", what.c_str());
    if (!cond) ok = false;
  }
};

double tick() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point origin = clock::now();
  return std::chrono::duration<double>(clock::now() - origin).count();
}

// Least-squares additive alignment of values against oracle on a shared grid.
double align_offset(const std::vector<double>& oracle, const std::vector<double>& values) {
  double s = 0.0;
  for (std::size_t i = 0; i < oracle.size(); ++i) s += oracle[i] - values[i];
  return s / static_cast<double>(oracle.size());
}

double overlap_length(double lo, double hi, double wlo, double whi) {
  return std::max(0.0, std::min(hi, whi) - std::max(lo, wlo));
}

// Adaptive quadrature with a split at a known kink of the integrand, so the
// rule only ever sees smooth pieces.
template <typename F>
double integrate_split(F&& f, double a, double b, double kink, double rel_tol) {
  if (!(kink > a && kink < b)) return integrate(f, a, b, rel_tol);
  return integrate(f, a, kink, rel_tol) + integrate(f, kink, b, rel_tol);
}

// ---------------------------------------------------------------------------
// Criterion 1: one-dimensional four-electron recovery. Uniform density on
// [-2, 2], beta = 10, twenty segments. The optimum is three unit point
// charges at -1, 0, 1; the discretized run must land on their potential
// within 0.15 sup-distance, carry mass 3 +- 0.15, and concentrate at least
// 80% of the charge within 0.25 of the three sites.

bool criterion_1() {
  const Support<1> box{-2.0, 2.0};
  const Density<1> rho{box, 4};
  const BasisSet<1> basis = BasisSet<1>::evenly_spaced(box, 20);

  OptimizerConfig cfg;
  cfg.max_iters = 500;
  cfg.project_delta_b = true;
  cfg.sampler.beta = 10.0;
  // The ascent stops once the gradient reaches the sampling noise floor, so
  // the floor has to sit below the charge sharpness the checks ask for:
  // triple the default sample budget per gradient.
  cfg.sampler.n_steps = 300000;
  cfg.sampler.burn_in = 20000;
  cfg.sampler.seed = 1;

  const OptimizerState state = nag_run(std::vector<double>(basis.size(), 0.0), rho, basis, cfg);
  const DualCharge<1> charge(basis, state.nu);
  std::printf("    ran %ld iterations (converged: %s)\n", state.iteration,
              state.converged ? "yes" : "no");

  Checker c;
  const double mass = charge.charge_mass();
  c.expect(std::abs(mass - 3.0) <= 0.15, note("charge mass %.4f in 3 +- 0.15", mass));

  const Comb1D comb = breakpoints(rho);
  const int grid = 401;
  std::vector<double> oracle(grid), values(grid);
  for (int i = 0; i < grid; ++i) {
    const double x = -2.0 + 4.0 * i / (grid - 1);
    oracle[i] = comb_potential(comb, x);
    values[i] = charge.potential({x});
  }
  const double offset = align_offset(oracle, values);
  double sup = 0.0;
  for (int i = 0; i < grid; ++i) sup = std::max(sup, std::abs(values[i] + offset - oracle[i]));
  c.expect(sup <= 0.15, note("aligned sup-distance to the comb potential %.4f <= 0.15", sup));

  double near = 0.0, total = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (state.nu[i] <= 0.0) continue;
    const Segment& e = basis.elements[i];
    total += state.nu[i] * (e.hi - e.lo);
    for (double site : comb.breakpoints)
      near += state.nu[i] * overlap_length(e.lo, e.hi, site - 0.25, site + 0.25);
  }
  const double frac = total > 0.0 ? near / total : 0.0;
  c.expect(frac >= 0.8, note("charge fraction within 0.25 of {-1, 0, 1}: %.3f >= 0.8", frac));
  return c.ok;
}

// ---------------------------------------------------------------------------
// Criterion 2: two-electron droplet in the unit ball, fifteen shells, beta
// schedule 5 -> 20 -> 50 with warm starts. At the coldest stage the potential
// must match the analytic solution within 0.1 sup-distance on 0.1 <= r <= 0.9,
// each fully interior shell must carry the analytic charge within 20%, and
// the total mass must be 1 +- 0.1.

bool criterion_2() {
  const Density<3> rho{{1.0}, 2};
  const BasisSet<3> basis = BasisSet<3>::evenly_spaced(rho.support, 15);

  // Stage knobs. The ascent stops once the gradient reaches three times the
  // between-chain standard error, and that floor (not the iteration caps)
  // sets how deep each stage converges, so the cold stage carries most of
  // the sample budget. A second beta-50 pass at a reduced step polishes the
  // iterate: the smaller step shrinks the random walk the gradient noise
  // induces on the weights while the heavier sampling lowers the floor.
  struct Stage {
    double beta, eta, step_scale;
    int chains;
    long steps;
    int cap;
  };
  const Stage stages[] = {{5.0, 4e-3, 1.0, 16, 60000, 80},
                          {20.0, 2e-3, 1.0, 16, 90000, 80},
                          {50.0, 2e-3, 1.0, 32, 300000, 120},
                          {50.0, 2e-3, 0.3, 64, 300000, 40}};

  std::vector<double> nu(basis.size(), 0.0);
  const double base_step = default_step_size(basis);
  int stage_index = 0;
  for (const Stage& st : stages) {
    OptimizerConfig cfg;
    cfg.max_iters = st.cap;
    cfg.step_size = base_step * st.step_scale;
    cfg.project_delta_b = true;
    cfg.sampler.beta = st.beta;
    cfg.sampler.eta = st.eta;
    cfg.sampler.alpha = 0.02;  // capped pair force times eta stays small
    cfg.sampler.n_chains = st.chains;
    cfg.sampler.n_steps = st.steps;
    cfg.sampler.burn_in = st.steps / 8;
    cfg.sampler.seed = 20 + 10 * stage_index++;
    const OptimizerState state = nag_run(nu, rho, basis, cfg);
    nu = state.nu;
    const IterationRecord last =
        state.history.empty() ? IterationRecord{} : state.history.back();
    std::printf(
        "    beta %.0f: %ld iterations (converged: %s, mass %.3f, |g| %.2e, floor %.2e)\n",
        st.beta, state.iteration, state.converged ? "yes" : "no", last.mass,
        last.grad_norm, 3.0 * last.se_norm);
  }
  const DualCharge<3> charge(basis, nu);

  Checker c;
  const int grid = 81;
  std::vector<double> oracle(grid), values(grid);
  for (int i = 0; i < grid; ++i) {
    const double r = 0.1 + 0.8 * i / (grid - 1);
    oracle[i] = exact_2e_potential(r);
    values[i] = charge.potential({r, 0.0, 0.0});
  }
  const double offset = align_offset(oracle, values);
  double sup = 0.0;
  for (int i = 0; i < grid; ++i) sup = std::max(sup, std::abs(values[i] + offset - oracle[i]));
  c.expect(sup <= 0.1,
           note("aligned sup-distance on 0.1 <= r <= 0.9: %.4f <= 0.1", sup));

  const std::vector<double> masses = basis.masses();
  double worst_rel = 0.0;
  int worst_shell = -1;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Shell& e = basis.elements[k];
    if (e.inner < 0.1 || e.outer > 0.8) continue;  // fully interior shells only
    const double exact = exact_2e_enclosed_charge(e.outer) - exact_2e_enclosed_charge(e.inner);
    const double rel = std::abs(nu[k] * masses[k] - exact) / exact;
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_shell = static_cast<int>(k);
    }
  }
  c.expect(worst_rel <= 0.2,
           note("worst interior shell charge error %.3f (shell %d) <= 0.2", worst_rel, worst_shell));

  const double mass = charge.charge_mass();
  c.expect(std::abs(mass - 1.0) <= 0.1, note("charge mass %.4f in 1 +- 0.1", mass));
  return c.ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: transport energies of uniform ball droplets at beta = 50,
// N = 3, 4, 5 against reference values. The final dual value must land in
// [0.95, 1.005] times the reference, and every iterate must respect weak
// duality: its dual value may never exceed the reference band's upper edge.

bool criterion_3() {
  const double refs[] = {2.327, 4.935, 8.626};
  Checker c;
  for (int idx = 0; idx < 3; ++idx) {
    const int n = 3 + idx;
    const double ref = refs[idx];
    const Density<3> rho{{1.0}, n};
    const BasisSet<3> basis = BasisSet<3>::evenly_spaced(rho.support, 15);

    OptimizerConfig cfg;
    cfg.max_iters = 160;
    cfg.project_delta_b = true;
    cfg.sampler.beta = 50.0;
    cfg.sampler.eta = 1e-3;
    cfg.sampler.alpha = 0.02;
    cfg.sampler.n_steps = 50000;
    cfg.sampler.burn_in = 5000;
    cfg.sampler.seed = 300 + 7 * n;

    // Weak duality along the trajectory: the dual value of every iterate,
    // evaluated by a cheap structured multistart, stays below the band edge.
    double max_iterate_value = -std::numeric_limits<double>::infinity();
    auto monitor = [&rho, &max_iterate_value](const OptimizerState& s, const DualCharge<3>& ch) {
      MultistartConfig zt;
      zt.n_starts = 32;
      zt.structured_init = true;
      zt.seed = 9000 + static_cast<std::uint64_t>(s.iteration);
      const double f = e_n_omega(ch, rho, zt).value + external_term(ch, rho);
      max_iterate_value = std::max(max_iterate_value, f);
    };
    const OptimizerState state =
        nag_run(std::vector<double>(basis.size(), 0.0), rho, basis, cfg, monitor);
    const DualCharge<3> charge(basis, state.nu);

    // Final value with a thorough multistart, uniform and structured.
    MultistartConfig uniform;
    uniform.seed = 500 + n;
    MultistartConfig structured;
    structured.structured_init = true;
    structured.seed = 600 + n;
    const double e_min =
        std::min(e_n_omega(charge, rho, uniform).value, e_n_omega(charge, rho, structured).value);
    const double f = e_min + external_term(charge, rho);

    std::printf("    N=%d: %ld iterations, f_sce %.4f (reference %.3f)\n", n, state.iteration, f,
                ref);
    c.expect(f >= 0.95 * ref && f <= 1.005 * ref,
             note("N=%d final value %.4f in [%.4f, %.4f]", n, f, 0.95 * ref, 1.005 * ref));
    c.expect(max_iterate_value <= 1.005 * ref,
             note("N=%d max iterate value %.4f <= %.4f (weak duality)", n, max_iterate_value,
                  1.005 * ref));
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: the sampled ascent gradient against a centered finite
// difference of the importance-sampled objective, d = 1, N = 2, beta = 1,
// one basis element, five random weights, agreement within three combined
// standard errors.

bool criterion_4() {
  const Support<1> box{-1.0, 1.0};
  const Density<1> rho{box, 2};
  const BasisSet<1> basis = BasisSet<1>::evenly_spaced(box, 1);
  const double beta = 1.0, eps = 0.1;

  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  Checker c;
  for (int trial = 0; trial < 5; ++trial) {
    const double nu0 = u(rng);
    auto objective = [&](double nu, std::uint64_t seed) {
      const DualCharge<1> charge(basis, {nu});
      const FreeEnergyEstimate f = free_energy_estimate(charge, rho, beta, 1000000, seed);
      return std::pair<double, double>(f.value + external_term(charge, rho), f.std_error);
    };
    const auto [gp, sp] = objective(nu0 + eps, 900 + 2 * trial);
    const auto [gm, sm] = objective(nu0 - eps, 901 + 2 * trial);
    const double fd = (gp - gm) / (2.0 * eps);
    const double fd_se = std::hypot(sp, sm) / (2.0 * eps);

    SamplerConfig cfg;
    cfg.beta = beta;
    cfg.eta = 2e-3;  // keeps the walker discretization bias well under the noise
    cfg.n_steps = 30000;
    cfg.burn_in = 3000;
    cfg.seed = 700 + trial;
    const GradientEstimate g = gradient(DualCharge<1>(basis, {nu0}), rho, cfg);
    const double tol = 3.0 * std::hypot(g.std_errors[0], fd_se);
    c.expect(std::abs(g.values[0] - fd) <= tol,
             note("nu %.3f: gradient %.4f vs finite difference %.4f (tol %.4f)", nu0, g.values[0],
                  fd, tol));
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// Criterion 5: closed forms against quadrature and the exact identities.

bool criterion_5() {
  Checker c;

  // Interaction of two uniform unit balls: 1.2 q1 q2, also reproduced by
  // nested radial quadrature of charge layer against charge layer.
  {
    const double closed = coulomb_energy(Density<3>{{1.0}, 2}, Density<3>{{1.0}, 3});
    c.expect(std::abs(closed - 7.2) <= 1e-12,
             note("ball-ball interaction %.12f = 1.2 q1 q2", closed));
    auto layer = [](double r) {
      return integrate_split([r](double s) { return 4.0 * kPi * s * s / std::max(r, s); }, 0.0,
                             1.0, r, 1e-9);
    };
    const double amp1 = 2.0 / (4.0 / 3.0 * kPi), amp2 = 3.0 / (4.0 / 3.0 * kPi);
    const double quad =
        amp1 * amp2 * integrate([&](double r) { return 4.0 * kPi * r * r * layer(r); }, 0.0, 1.0,
                                1e-8);
    c.expect(std::abs(quad - closed) <= 1e-6 * std::abs(closed),
             note("nested quadrature %.8f matches to 1e-6 relative", quad));
  }

  // Segment potentials against direct quadrature at interior and exterior points.
  {
    const BasisSet<1> basis = BasisSet<1>::evenly_spaced({-2.0, 2.0}, 6);
    double worst = 0.0;
    for (const Segment& e : basis.elements)
      for (double x : {-1.7, -0.3, 0.4, 1.9}) {
        const double quad =
            -integrate_split([&](double y) { return std::abs(x - y); }, e.lo, e.hi, x, 1e-10);
        worst = std::max(worst, std::abs(basis_potential(e, {x}) - quad) / std::abs(quad));
      }
    c.expect(worst <= 1e-6, note("segment potentials match quadrature, worst rel %.2e", worst));
  }

  // Shell potentials against layered radial quadrature.
  {
    const BasisSet<3> basis = BasisSet<3>::evenly_spaced({1.0}, 5);
    double worst = 0.0;
    for (const Shell& e : basis.elements)
      for (double r : {0.05, 0.3, 0.77, 1.5}) {
        const double quad = integrate_split(
            [&](double s) { return 4.0 * kPi * s * s / std::max(r, s); }, e.inner, e.outer, r,
            1e-10);
        worst = std::max(worst, std::abs(basis_potential(e, {r, 0.0, 0.0}) - quad) / std::abs(quad));
      }
    c.expect(worst <= 1e-6, note("shell potentials match quadrature, worst rel %.2e", worst));
  }

  // The analytic two-electron charge carries unit mass. The substitution
  // r = 1 - s^3 turns the outer-edge singularity into a polynomial factor.
  {
    const double total = integrate(
        [](double s) {
          const double r = 1.0 - s * s * s;
          return 4.0 * kPi * r * r * exact_2e_charge(r) * 3.0 * s * s;
        },
        0.0, 1.0, 1e-8);
    c.expect(std::abs(total - 1.0) <= 1e-6, note("two-electron charge mass %.8f = 1", total));
  }

  // Exact four-electron identities on [-2, 2]: interaction minimum 4,
  // coupling -14, total -10, and the closed-form transport energy agrees.
  {
    const Support<1> box{-2.0, 2.0};
    const Density<1> rho{box, 4};
    const Comb1D comb = breakpoints(rho);
    MultistartConfig cfg;
    cfg.n_starts = 256;
    cfg.seed = 505;
    const double e_min = e_n_omega_with<1>(CombPotential{comb}, box, 4, cfg).value;
    c.expect(std::abs(e_min - 4.0) <= 1e-6, note("comb interaction minimum %.8f = 4", e_min));
    const double coupling =
        external_term_quadrature([&](double x) { return comb_potential(comb, x); }, rho);
    c.expect(std::abs(coupling + 14.0) <= 1e-6, note("comb coupling %.8f = -14", coupling));
    const double f = e_min + coupling;
    c.expect(std::abs(f + 10.0) <= 1e-6, note("comb dual value %.8f = -10", f));
    c.expect(std::abs(exact_1d_energy(rho) + 10.0) <= 1e-9,
             note("closed-form transport energy %.8f = -10", exact_1d_energy(rho)));
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: sampler consistency. At near-zero beta the ensemble is the
// uniform product measure, so every moment must equal the element-density
// interaction within three standard errors; particles must stay inside the
// support after every single step even under violent kicks; and fixed seeds
// must reproduce estimates bit for bit.

bool criterion_6() {
  Checker c;

  {
    const Support<1> box{-1.0, 1.0};
    const Density<1> rho{box, 3};
    const BasisSet<1> basis = BasisSet<1>::evenly_spaced(box, 5);
    const DualCharge<1> charge(basis, {0.4, -0.2, 0.7, 0.1, -0.5});
    SamplerConfig cfg;
    cfg.beta = 1e-6;
    cfg.eta = 2e-8;  // keeps the step deviation sane as beta -> 0
    cfg.n_steps = 30000;
    cfg.burn_in = 3000;
    cfg.seed = 601;
    const MomentEstimate m = estimate_moments(charge, rho, cfg);
    const std::vector<double> target = element_density_energies(basis, rho);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double pull = std::abs(m.values[i] - target[i]) / m.std_errors[i];
      worst = std::max(worst, pull);
      ok = ok && pull <= 3.0;
    }
    c.expect(ok, note("1D near-zero-beta moments match D(rho_i, rho), worst %.2f sigma", worst));
  }
  {
    const Density<3> rho{{1.0}, 2};
    const BasisSet<3> basis = BasisSet<3>::evenly_spaced(rho.support, 4);
    const DualCharge<3> charge(basis, {0.3, -0.1, 0.2, 0.4});
    SamplerConfig cfg;
    cfg.beta = 1e-6;
    cfg.eta = 5e-10;  // curved-wall reflection bias scales with the step deviation
    cfg.n_steps = 40000;
    cfg.burn_in = 4000;
    cfg.seed = 602;
    const MomentEstimate m = estimate_moments(charge, rho, cfg);
    const std::vector<double> target = element_density_energies(basis, rho);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double pull = std::abs(m.values[i] - target[i]) / m.std_errors[i];
      worst = std::max(worst, pull);
      ok = ok && pull <= 3.0;
    }
    c.expect(ok, note("3D near-zero-beta moments match D(rho_i, rho), worst %.2f sigma", worst));
  }

  {
    const Support<1> box{-1.0, 1.0};
    const BasisSet<1> basis = BasisSet<1>::evenly_spaced(box, 3);
    const DualCharge<1> charge(basis, {1.0, -2.0, 1.5});
    SamplerConfig cfg;
    cfg.beta = 1.0;
    cfg.eta = 2.0;  // step deviation twice the box size
    ParticleSystem<1> sys(box, 4, 77);
    long violations = 0;
    for (int s = 0; s < 3000; ++s) {
      langevin_step(sys, charge, cfg);
      for (const Point<1>& p : sys.positions)
        if (!box.contains(p, 0.0)) ++violations;
    }
    c.expect(violations == 0, note("1D confinement after every step: %ld violations", violations));
  }
  {
    const Support<3> ball{1.0};
    const BasisSet<3> basis = BasisSet<3>::evenly_spaced(ball, 3);
    const DualCharge<3> charge(basis, {2.0, -1.0, 1.0});
    SamplerConfig cfg;
    cfg.beta = 1.0;
    cfg.eta = 2.0;
    cfg.alpha = 0.01;
    ParticleSystem<3> sys(ball, 3, 78);
    long violations = 0;
    for (int s = 0; s < 3000; ++s) {
      langevin_step(sys, charge, cfg);
      for (const Point<3>& p : sys.positions)
        if (!ball.contains(p, 0.0)) ++violations;
    }
    c.expect(violations == 0, note("3D confinement after every step: %ld violations", violations));
  }

  {
    const Support<1> box{-1.0, 1.0};
    const Density<1> rho{box, 2};
    const BasisSet<1> basis = BasisSet<1>::evenly_spaced(box, 4);
    const DualCharge<1> charge(basis, {0.2, 0.1, -0.3, 0.5});
    SamplerConfig cfg;
    cfg.beta = 2.0;
    cfg.n_steps = 5000;
    cfg.burn_in = 500;
    cfg.seed = 42;
    const MomentEstimate a = estimate_moments(charge, rho, cfg);
    const MomentEstimate b = estimate_moments(charge, rho, cfg);
    c.expect(a.values == b.values && a.std_errors == b.std_errors,
             "repeated runs with one seed are byte-identical");
  }
  return c.ok;
}

// ---------------------------------------------------------------------------
// Criterion 7: property suites. Kernel invariances, analytic gradients of
// every potential against finite differences, weak-duality slack on the
// oracle cases, and the simplex-with-mass-cap projection against a
// brute-force active-set oracle.

// Brute-force projection onto {x >= 0, m.x <= b} by active-set enumeration.
std::vector<double> projection_oracle(const std::vector<double>& nu, const std::vector<double>& m,
                                      double b) {
  const int n = static_cast<int>(nu.size());
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& x) {
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      if (x[i] < -1e-10) return;
      mass += x[i] * m[i];
    }
    if (mass > b + 1e-9) return;
    double dist = 0.0;
    for (int i = 0; i < n; ++i) dist += (x[i] - nu[i]) * (x[i] - nu[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  };
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < n; ++i)
      if (!((mask >> i) & 1)) x[i] = nu[i];
    consider(x);
    double num = -b, den = 0.0;
    for (int i = 0; i < n; ++i)
      if (!((mask >> i) & 1)) {
        num += nu[i] * m[i];
        den += m[i] * m[i];
      }
    if (den > 0.0) {
      const double lambda = num / den;
      std::vector<double> y(n, 0.0);
      for (int i = 0; i < n; ++i)
        if (!((mask >> i) & 1)) y[i] = nu[i] - lambda * m[i];
      consider(y);
    }
  }
  return best;
}

bool criterion_7() {
  Checker c;

  // Kernel invariance: translations and particle relabelings leave the cost
  // unchanged, and the gradient commutes with relabeling.
  {
    std::mt19937_64 rng(701);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Point<3>> config(5);
      for (auto& p : config) p = {u(rng), u(rng), u(rng)};
      bool separated = true;
      for (std::size_t i = 0; i < config.size(); ++i)
        for (std::size_t j = i + 1; j < config.size(); ++j)
          if (norm<3>(sub<3>(config[i], config[j])) < 0.05) separated = false;
      if (!separated) continue;

      const double base = cost<3>(std::span<const Point<3>>(config));
      std::vector<Point<3>> shifted = config;
      const Point<3> t{u(rng), u(rng), u(rng)};
      for (auto& p : shifted)
        for (int k = 0; k < 3; ++k) p[k] += t[k];
      worst = std::max(worst,
                       std::abs(cost<3>(std::span<const Point<3>>(shifted)) - base) /
                           std::abs(base));

      std::vector<Point<3>> permuted = config;
      std::shuffle(permuted.begin(), permuted.end(), rng);
      worst = std::max(worst,
                       std::abs(cost<3>(std::span<const Point<3>>(permuted)) - base) /
                           std::abs(base));
      worst = std::max(
          worst, std::abs(truncated_cost(std::span<const Point<3>>(permuted), 0.01) - base) /
                     std::abs(base));
    }
    c.expect(worst <= 1e-12, note("cost invariances, worst relative drift %.2e", worst));
  }
  {
    std::mt19937_64 rng(702);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Point<1>> config(4);
      for (auto& p : config) p = {u(rng)};
      bool separated = true;
      for (std::size_t i = 0; i < config.size(); ++i)
        for (std::size_t j = i + 1; j < config.size(); ++j)
          if (std::abs(config[i][0] - config[j][0]) < 0.05) separated = false;
      if (!separated) continue;
      const double base = cost<1>(std::span<const Point<1>>(config));
      std::vector<Point<1>> shifted = config;
      for (auto& p : shifted) p[0] += 0.37;
      worst = std::max(worst, std::abs(cost<1>(std::span<const Point<1>>(shifted)) - base));
      std::vector<Point<1>> permuted = config;
      std::shuffle(permuted.begin(), permuted.end(), rng);
      worst = std::max(worst, std::abs(cost<1>(std::span<const Point<1>>(permuted)) - base));
    }
    c.expect(worst <= 1e-12, note("1D cost invariances, worst drift %.2e", worst));
  }

  // Analytic gradients of every potential against centered differences.
  {
    const double h = 1e-4;
    double worst = 0.0;

    const BasisSet<1> basis1 = BasisSet<1>::evenly_spaced({-2.0, 2.0}, 5);
    const DualCharge<1> mix1(basis1, {0.3, -0.2, 0.8, 0.1, -0.4});
    const Comb1D comb = breakpoints(Density<1>{{-2.0, 2.0}, 4});
    const CombPotential comb_v{comb};
    auto check1 = [&](auto&& v, double x) {
      const double fd = (v.potential(Point<1>{x + h}) - v.potential(Point<1>{x - h})) / (2.0 * h);
      worst = std::max(worst, std::abs(v.potential_gradient(Point<1>{x})[0] - fd));
    };
    for (double x : {-1.55, -0.42, 0.3, 1.7}) {
      check1(mix1, x);
      check1(comb_v, x);
    }

    const BasisSet<3> basis3 = BasisSet<3>::evenly_spaced({1.0}, 4);
    const DualCharge<3> mix3(basis3, {0.5, -0.3, 0.2, 0.6});
    const Droplet2ePotential droplet;
    auto check3 = [&](auto&& v, const Point<3>& p) {
      const Point<3> g = v.potential_gradient(p);
      for (int k = 0; k < 3; ++k) {
        Point<3> hi = p, lo = p;
        hi[k] += h;
        lo[k] -= h;
        const double fd = (v.potential(hi) - v.potential(lo)) / (2.0 * h);
        worst = std::max(worst, std::abs(g[k] - fd));
      }
    };
    // radii chosen off the shell boundaries, where curvature jumps
    for (double r : {0.2, 0.55, 0.85}) {
      const Point<3> p{0.48 * r, -0.6 * r, 0.64 * r};
      check3(mix3, p);
      check3(droplet, p);
    }
    c.expect(worst <= 1e-6, note("potential gradients vs finite differences, worst %.2e", worst));
  }

  // Weak duality slack on the oracle cases: arbitrary feasible weights may
  // never beat the exact transport energy by more than roundoff.
  {
    std::mt19937_64 rng(703);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double min_slack = std::numeric_limits<double>::infinity();

    const Support<1> box{-2.0, 2.0};
    const Density<1> rho1{box, 4};
    const BasisSet<1> basis1 = BasisSet<1>::evenly_spaced(box, 8);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> nu(basis1.size());
      for (double& w : nu) w = 0.6 * u(rng);
      const DualCharge<1> charge(basis1, nu);
      MultistartConfig cfg;
      cfg.seed = 7100 + trial;
      const double f = e_n_omega(charge, rho1, cfg).value + external_term(charge, rho1);
      min_slack = std::min(min_slack, exact_1d_energy(rho1) - f);
    }

    const Density<3> rho3{{1.0}, 2};
    const BasisSet<3> basis3 = BasisSet<3>::evenly_spaced(rho3.support, 6);
    const std::vector<double> masses = basis3.masses();
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> nu(basis3.size());
      double mass = 0.0;
      for (std::size_t i = 0; i < nu.size(); ++i) {
        nu[i] = u(rng);
        mass += nu[i] * masses[i];
      }
      for (double& w : nu) w /= std::max(1.0, mass);  // keep total charge feasible
      const DualCharge<3> charge(basis3, nu);
      MultistartConfig cfg;
      cfg.seed = 7200 + trial;
      const double f = e_n_omega(charge, rho3, cfg).value + external_term(charge, rho3);
      min_slack = std::min(min_slack, exact_2e_energy() - f);
    }
    c.expect(min_slack >= -1e-6, note("weak-duality slack on oracle cases >= %.2e", min_slack));
  }

  // Projection against the brute-force oracle on random small instances.
  {
    std::mt19937_64 rng(704);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::uniform_real_distribution<double> um(0.1, 2.0);
    std::uniform_int_distribution<int> usize(1, 5);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = usize(rng);
      std::vector<double> nu(n), m(n);
      for (int i = 0; i < n; ++i) {
        nu[i] = u(rng);
        m[i] = um(rng);
      }
      const double b = um(rng);
      const std::vector<double> mine = project_delta_b(nu, m, b);
      const std::vector<double> ref = projection_oracle(nu, m, b);
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(mine[i] - ref[i]));
    }
    c.expect(worst <= 1e-8, note("projection vs active-set oracle, worst gap %.2e", worst));
  }
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* label;
    bool (*fn)();
  };
  const Entry entries[] = {
      {1, "one-dimensional four-electron recovery", criterion_1},
      {2, "two-electron droplet with temperature schedule", criterion_2},
      {3, "droplet energies against reference values", criterion_3},
      {4, "gradient against finite-difference objective", criterion_4},
      {5, "closed forms against quadrature and exact identities", criterion_5},
      {6, "sampler consistency and confinement", criterion_6},
      {7, "invariance, gradient, duality and projection properties", criterion_7},
  };

  std::vector<int> wanted;
  for (int a = 1; a < argc; ++a) {
    const int id = std::atoi(argv[a]);
    if (id < 1 || id > 7) {
      std::fprintf(stderr, "usage: %s [criterion numbers 1..7]\n", argv[0]);
      return 2;
    }
    wanted.push_back(id);
  }

  bool all_ok = true;
  for (const Entry& e : entries) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), e.id) == wanted.end()) continue;
    std::printf("  criterion %d: %s\n", e.id, e.label);
    std::fflush(stdout);
    const double start = tick();
    const bool ok = e.fn();
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", e.id, e.label,
                tick() - start);
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
