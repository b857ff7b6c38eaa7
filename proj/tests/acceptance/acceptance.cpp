// Acceptance gate: one PASS/FAIL line per criterion with the measured quantity and runtime.
// Exit status is the number of failed criteria (capped at 255).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "bdb/abstract.hpp"
#include "bdb/error.hpp"
#include "bdb/gevrey.hpp"
#include "bdb/grid.hpp"
#include "bdb/lingroup.hpp"
#include "bdb/model.hpp"
#include "bdb/multiindex.hpp"
#include "bdb/solver.hpp"
#include "bdb/xnorm.hpp"
#include "support.hpp"

using namespace bdb;
using bdb::testing::random_smooth;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[192];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

/// The demo configuration: d = 1, 64 x 64, lambda = (0, 1), eta = 1, U = 1, tau = 0.05.
ModelParams demo_params() {
    ModelParams p;
    p.entropy = {0.0, 1.0, 1.0};
    p.band = {0.5, 1};
    p.physical = {1.0, 0.05};
    return p;
}

const PhaseGrid kDemoGrid{1, 64, 64, 1.0};

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

/// Demo initial datum: equilibrium plus `amplitude` times the first spatial mode, shaped in p.
PhaseGridFunction demo_initial(const ModelParams& p, double amplitude) {
    return bdb::testing::perturbed_equilibrium(kDemoGrid, p.entropy, p.band, amplitude);
}

Outcome antisymmetry() {
    const auto p = demo_params();
    const LinearizedOperator op(kDemoGrid, p.entropy, p.band, p.physical.U);
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto g = random_smooth(kDemoGrid, rng);
        const auto& xn = op.xnorm();
        worst = std::max(worst, std::abs(xn.inner(op.apply(g), g)) / xn.inner(g, g));
    }
    return {worst <= 1e-10, fmt("max |<Lg,g>_X|/|g|_X^2 = %.2e over 50 fields (limit 1e-10)", worst)};
}

Outcome isometry() {
    const auto p = demo_params();
    const LinearizedOperator op(kDemoGrid, p.entropy, p.band, p.physical.U);
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto g = random_smooth(kDemoGrid, rng);
        const double n0 = op.xnorm().norm(g);
        for (int k = 1; k <= 10; ++k) {
            const double t = 0.1 * k;
            worst = std::max(worst, std::abs(op.xnorm().norm(op.group_action(t, g)) - n0) / n0);
        }
    }
    return {worst < 1e-8, fmt("max relative drift of |e^{tL}g|_X on t in [0,1] = %.2e (limit 1e-8)", worst)};
}

Outcome resolvent() {
    const auto p = demo_params();
    const LinearizedOperator op(kDemoGrid, p.entropy, p.band, p.physical.U);
    const auto& xn = op.xnorm();
    std::mt19937_64 rng(303);
    double round_trip = 0.0;
    double excess = -std::numeric_limits<double>::infinity();
    for (const cplx sigma : {cplx(1.0, 0.0), cplx(1.0, 3.0), cplx(-0.5, 1.0)}) {
        for (int i = 0; i < 20; ++i) {
            const SpectralField h = to_spectral(random_smooth(kDemoGrid, rng), Axes::kSpace);
            const SpectralField f = op.resolvent(sigma, h);
            SpectralField back = op.apply(f);
            for (std::size_t j = 0; j < back.coeffs.size(); ++j) back.coeffs[j] += sigma * f.coeffs[j] - h.coeffs[j];
            const double hn = xn.norm(h);
            round_trip = std::max(round_trip, xn.norm(back) / hn);
            excess = std::max(excess, xn.norm(f) - (hn / std::abs(sigma.real()) + 1e-9));
        }
    }
    return {round_trip < 1e-9 && excess <= 0.0,
            fmt("round-trip residual %.2e (limit 1e-9), max |R h| - |h|/|Re s| - 1e-9 = %.2e (limit 0)", round_trip,
                excess)};
}

Outcome expansion() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (int n = 1; n <= 2; ++n) {
            const auto family = random_commuting_family(1000 * seed + static_cast<std::uint64_t>(n), 6, n);
            std::mt19937_64 rng(seed * 31 + static_cast<std::uint64_t>(n));
            const Eigen::MatrixXd L = gaussian(rng, 6, 6);
            for (const auto& alpha : multi_indices_up_to(n, 4))
                if (order(alpha) > 0) worst = std::max(worst, expansion_check(L, family, alpha));
        }
    }
    return {worst < 1e-10, fmt("max expansion residual %.2e over 10 seeds, n <= 2, |alpha| <= 4 (limit 1e-10)", worst)};
}

Outcome lemma_r() {
    int trials = 0, failures = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RandomSystemOptions so;
        so.n = 1 + static_cast<int>(seed % 2);
        so.m = 3 + static_cast<int>(seed % 6);
        const FiniteSystem sys = random_system(500 + seed, so);
        const auto c = constants_estimate(sys);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int t = 0; t < 10; ++t) {
            const double nu = (0.1 + 0.08 * t) / std::max(c.r, 1e-12);  // nu r in [0.1, 0.82]
            const MultiIndex N = sys.n() == 1 ? MultiIndex{2 + t % 4} : MultiIndex{1 + t % 3, 1 + (t / 3) % 3};
            Eigen::VectorXd y(sys.m());
            for (auto& v : y) v = normal(rng);
            const auto sides = lemma_R_check(sys, c.C, c.r, nu, N, y);
            ++trials;
            if (!sides.holds()) ++failures;
            worst_ratio = std::max(worst_ratio, sides.lhs / sides.rhs);
        }
    }
    return {failures == 0 && trials == 100,
            fmt("%.0f/%.0f trials hold, max lhs/rhs = %.3f", trials - failures, static_cast<double>(trials),
                worst_ratio)};
}

Outcome abstract_decay() {
    bool ok = true;
    std::string detail;
    for (std::uint64_t k = 0; k < 5; ++k) {
        RandomSystemOptions so;
        so.n = 1 + static_cast<int>(k % 2);
        so.m = 4 + static_cast<int>(k);  // n = 1: dimension 4, 6, 8
        const FiniteSystem sys = random_system(900 + k, so);
        const auto c = constants_estimate(sys);
        const double nu = working_radius(sys, c);
        const auto u0 = admissible_initial(sys, nu, 0.9 * c.epsilon * nu, 1900 + k);
        const auto rep = picard_solve_abstract(sys, u0, c, nu);
        const bool good = sys.m() <= 8 && rep.converged && rep.contraction_factor <= 1.0 - 0.5 * c.C1 &&
                          rep.decay_ratio <= 1.0 + 1e-6;
        ok = ok && good;
        detail += fmt("[m=%.0f q=%.2e/%.3f", sys.m(), rep.contraction_factor, 1.0 - 0.5 * c.C1) +
                  fmt(" decay=%.3f]", rep.decay_ratio);
    }
    return {ok, "contraction q vs 1-C1/2 and decay ratio (limit 1+1e-6): " + detail};
}

KineticConstants demo_constants() {
    const auto p = demo_params();
    const LinearizedOperator op(kDemoGrid, p.entropy, p.band, p.physical.U);
    return kinetic_constants(op);
}

SolverConfig demo_solver(double t_end) {
    SolverConfig cfg;
    cfg.dt = 2.5e-4;
    cfg.t_end = t_end;
    cfg.record_every = 20;
    return cfg;
}

Outcome small_data_decay() {
    const auto p = demo_params();
    const auto k = demo_constants();
    const double tau = p.physical.tau;
    const auto rec = evolve(demo_initial(p, 1e-4), p, demo_solver(10.0 * tau));
    const double rate = 1.0 / tau - 1.0 / k.tau0;
    double weighted = 0.0, relaxation_only = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        weighted = std::max(weighted, std::exp(rate * rec.times[i]) * rec.norm_x[i] / rec.norm_x[0]);
        relaxation_only = std::max(relaxation_only, std::exp(rec.times[i] / tau) * rec.norm_x[i] / rec.norm_x[0]);
    }
    const auto fit = decay_fit(rec);
    return {weighted <= 4.0 && rec.times.back() >= 10.0 * tau - 1e-12,
            fmt("tau0 = %.3e (C = %.3f, ", k.tau0, k.C) + fmt("r = %.3f), max weighted growth %.4f (limit 4); ", k.r, weighted) +
                fmt("without tau0: %.4f; fitted rate %.3f", relaxation_only, fit.rate)};
}

Outcome continuous_dependence() {
    const auto p = demo_params();
    const auto k = demo_constants();
    const double tau = p.physical.tau;
    const GevreySchedule schedule{0.05, 1.0, 0.0, 4};
    const XNorm xn(kDemoGrid, p.entropy, p.band, p.physical.U);
    const double delta0 = 1e-5;

    PhaseGridFunction f = demo_initial(p, 1e-4);
    std::mt19937_64 rng(808);
    PhaseGridFunction h = random_smooth(kDemoGrid, rng, 2, 2);
    h *= delta0 / analytic_seminorm(h, schedule.nu0, schedule.n_max, xn).value;
    PhaseGridFunction g = f + h;

    const double rate = 1.0 / tau - 1.0 / k.tau0;
    double worst = analytic_seminorm(f - g, schedule.nu0, schedule.n_max, xn).value / delta0;
    double worst_relaxation = worst;
    const int segments = 10;
    const double span = 5.0 * tau / segments;
    double t = 0.0;
    for (int s = 0; s < segments; ++s) {
        const auto cfg = demo_solver(span);
        f = evolve(f, p, cfg, t).final_state;
        g = evolve(g, p, cfg, t).final_state;
        t += span;
        const double gap = analytic_seminorm(f - g, norm_schedule(t, schedule), schedule.n_max, xn).value;
        worst = std::max(worst, gap / (delta0 * std::exp(-rate * t)));
        worst_relaxation = std::max(worst_relaxation, gap / (delta0 * std::exp(-t / tau)));
    }
    return {worst <= 4.0, fmt("max gap / (delta0 e^{-(1/tau-1/tau0)t}) = %.3e (limit 4); without tau0: %.4f", worst,
                              worst_relaxation)};
}

Outcome bgk_conservation() {
    ModelParams p = demo_params();
    SolverConfig cfg;
    cfg.dt = 2.5e-4;
    cfg.t_end = 1000 * cfg.dt;
    cfg.collision = Collision::kBgk;
    cfg.record_every = 100;
    PhaseGridFunction f0 = demo_initial(p, 0.02);
    f0 += bdb::testing::perturbed_equilibrium(kDemoGrid, p.entropy, p.band, 0.01, 2);
    f0 -= PhaseGridFunction::equilibrium(kDemoGrid, p.entropy, p.band);
    const auto rec = evolve(f0, p, cfg);
    const double worst = std::max(rec.bgk_mass_residual, rec.bgk_energy_residual);
    return {rec.steps == 1000 && worst < 1e-9,
            fmt("%.0f steps, max per-step residual / dt: mass %.2e, energy %.2e (limit 1e-9)",
                static_cast<double>(rec.steps), rec.bgk_mass_residual, rec.bgk_energy_residual)};
}

Outcome strang_order() {
    const auto p = demo_params();
    const PhaseGridFunction f0 = demo_initial(p, 0.1);
    std::vector<PhaseGridFunction> finals;
    const double dt = 1e-3;
    for (double h : {dt, dt / 2, dt / 4}) {
        SolverConfig cfg;
        cfg.dt = h;
        cfg.t_end = 0.06;
        cfg.record_every = 1000;
        cfg.enforce_cfl = false;
        finals.push_back(evolve(f0, p, cfg).final_state);
    }
    const XNorm xn(kDemoGrid, p.entropy, p.band, p.physical.U);
    const double e1 = xn.norm(finals[0] - finals[1]);
    const double e2 = xn.norm(finals[1] - finals[2]);
    const double observed = std::log2(e1 / e2);
    return {observed >= 1.8, fmt("observed order %.3f (limit 1.8), differences %.2e, %.2e", observed, e1, e2)};
}

Outcome stability_diagnostics() {
    bool ok = true;
    double worst_linear = 0.0;
    std::string detail;
    for (double lambda0 : {0.0, -1.0, 0.5}) {
        const EntropyParams free{lambda0, 0.0, 1.0};
        const BandParams bp{0.5, 1};
        const double k0 = criticality_value(free, bp, 1.0);
        const double m0 = penrose_margin(free, bp, 1.0, PenroseGrid::defaults(), 64);
        ok = ok && k0 == 0.0 && m0 == 1.0;
        if (lambda0 == 0.0) detail = fmt("lambda1 = 0: criticality %.17g, Penrose margin %.17g; ", k0, m0);
        for (double lambda1 : {0.5, 1.0, 2.0}) {
            const EntropyParams ep{lambda0, lambda1, 1.0};
            const double base = criticality_value(ep, bp, 1.0);
            for (double U : {0.25, 0.5, 3.0, 10.0})
                worst_linear = std::max(worst_linear, std::abs(criticality_value(ep, bp, U) - U * base) / (U * base));
        }
    }
    ok = ok && worst_linear <= 1e-12;
    return {ok, detail + fmt("max relative deviation from linearity in U %.2e (limit 1e-12)", worst_linear)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "anti-symmetry of L", 30.0, antisymmetry},
        {2, "contraction-group isometry", 120.0, isometry},
        {3, "resolvent identity and bound", 120.0, resolvent},
        {4, "commutator expansion", 10.0, expansion},
        {5, "analytic-weight remainder inequality", 30.0, lemma_r},
        {6, "abstract decay", 120.0, abstract_decay},
        {7, "nonlinear small-data decay", 300.0, small_data_decay},
        {8, "continuous dependence", 300.0, continuous_dependence},
        {9, "BGK moment conservation", 120.0, bgk_conservation},
        {10, "integrator order", 180.0, strang_order},
        {11, "stability diagnostics", 60.0, stability_diagnostics},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = secs <= c.budget_s;
        const bool pass = out.passed && in_budget;
        if (!pass) ++failed;
        std::printf("%s %2d %s: %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    out.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", exceeded");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return std::min(failed, 255);
}
