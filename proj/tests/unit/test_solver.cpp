#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdb/error.hpp"
#include "bdb/lingroup.hpp"
#include "bdb/solver.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bdb;
using bdb::testing::kTwoPi;
using bdb::testing::max_abs_diff;
using bdb::testing::perturbed_equilibrium;

namespace {

const PhaseGrid kGrid{1, 16, 32, 1.0};
const EntropyParams kEp{0.0, 1.0, 1.0};
const BandParams kBp{0.5, 1};

ModelParams params(double U, double tau) { return ModelParams{kEp, kBp, PhysicalParams{U, tau}}; }

SolverConfig config(double dt, double t_end, int record_every = 1) {
    SolverConfig c;
    c.dt = dt;
    c.t_end = t_end;
    c.record_every = record_every;
    return c;
}

PhaseGridFunction physical(const SpectralField& g, double t, const ModelParams& p) {
    PhaseGridFunction f = from_spectral(g);
    const double e = std::isinf(p.physical.tau) ? 1.0 : std::exp(-t / p.physical.tau);
    f *= e;
    f += PhaseGridFunction::equilibrium(g.grid, p.entropy, p.band);
    return f;
}

}  // namespace

TEST_CASE("configuration checks") {
    const auto p = params(1.0, 0.05);
    CHECK_NOTHROW(config(1e-3, 0.1).validate(kGrid, p));
    CHECK_THROWS_AS(config(1e-2, 0.1).validate(kGrid, p), Error);  // dt > tau/10
    CHECK_THROWS_AS(config(-1e-3, 0.1).validate(kGrid, p), Error);
    const PhaseGrid fine{1, 64, 64, 1.0};
    // max|grad eps| = 2 pi for eps0 = 1/2, so the limit on 64 nodes is 1 / (4 pi^2 64)
    CHECK(cfl_number(1.0 / (kTwoPi * kTwoPi * 64), fine, kBp) == doctest::Approx(1.0));
    CHECK_THROWS_AS(config(4.5e-4, 0.1).validate(fine, p), Error);
    SolverConfig loose = config(4.5e-4, 0.1);
    loose.enforce_cfl = false;
    CHECK_NOTHROW(loose.validate(fine, p));
}

TEST_CASE("equilibrium is stationary") {
    const auto F = PhaseGridFunction::equilibrium(kGrid, kEp, kBp);
    for (double tau : {0.05, std::numeric_limits<double>::infinity()}) {
        const auto rec = evolve(F, params(1.0, tau), config(1e-3, 0.05, 5));
        REQUIRE(rec.times.size() == 11);
        for (double n : rec.norm_x) CHECK(n < 1e-12);
        CHECK(max_abs_diff(rec.final_state, F) < 1e-12);
    }
}

TEST_CASE("free transport matches the characteristic solution") {
    // f0 = F + a cos(2 pi x) cos(2 pi p) + b sin(4 pi x + 1); exact f(t) = f0(x - t eps'(p), p)
    const double a = 0.1, b = 0.05;
    auto f0_fn = [&](double x, double p) {
        return equilibrium(std::span<const double>(&p, 1), kEp, kBp) + a * std::cos(kTwoPi * x) * std::cos(kTwoPi * p) +
               b * std::sin(2 * kTwoPi * x + 1.0);
    };
    const auto f0 = PhaseGridFunction::from_function(kGrid, [&](auto x, auto p) { return f0_fn(x[0], p[0]); });
    const auto p = params(0.0, std::numeric_limits<double>::infinity());
    const double T = 0.3;
    const auto rec = evolve(f0, p, config(1e-3, T, 50));
    const auto exact = PhaseGridFunction::from_function(kGrid, [&](auto x, auto pp) {
        const double v = band_gradient(pp, kBp)[0];
        return f0_fn(x[0] - T * v, pp[0]);
    });
    CHECK(max_abs_diff(rec.final_state, exact) < 1e-10);
    CHECK(std::abs(rec.final_state.l2_norm() - f0.l2_norm()) < 1e-10 * f0.l2_norm());
    for (double n : rec.norm_x) CHECK(n == doctest::Approx(rec.norm_x.front()).epsilon(1e-12));
}

TEST_CASE("Strang splitting is second order") {
    const auto f0 = perturbed_equilibrium(kGrid, kEp, kBp, 0.1);
    const auto p = params(1.0, 0.05);
    const XNorm xn(kGrid, kEp, kBp, 1.0);
    std::vector<PhaseGridFunction> finals;
    for (double dt : {1.2e-3, 6e-4, 3e-4}) finals.push_back(evolve(f0, p, config(dt, 0.06, 1000)).final_state);
    const double e1 = xn.norm(finals[0] - finals[1]);
    const double e2 = xn.norm(finals[1] - finals[2]);
    const double order = std::log2(e1 / e2);
    MESSAGE("observed order " << order << " (" << e1 << ", " << e2 << ")");
    CHECK(order >= 1.8);
    CHECK(order <= 2.5);
}

TEST_CASE("pure relaxation decays at rate 1/tau") {
    const auto f0 = perturbed_equilibrium(kGrid, kEp, kBp, 1e-3);
    const double tau = 0.05;
    const auto rec = evolve(f0, params(0.0, tau), config(1e-3, 0.2, 5));
    const auto fit = decay_fit(rec);
    CHECK(fit.rate == doctest::Approx(1.0 / tau).epsilon(0.01));
    CHECK(fit.monotone);
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        CHECK(rec.norm_x[i] == doctest::Approx(rec.norm_x[0] * std::exp(-rec.times[i] / tau)).epsilon(1e-10));
    // relaxation towards F conserves the zero-mode moments only up to the equilibrium's own
    CHECK(rec.mass.back() == doctest::Approx(rec.mass.front()).epsilon(1e-12));
}

TEST_CASE("decay fit on synthetic records") {
    std::vector<double> t, n;
    for (int i = 0; i <= 40; ++i) {
        t.push_back(0.05 * i);
        n.push_back(2.0 * std::exp(-3.0 * t.back()));
    }
    const auto fit = decay_fit(t, n);
    CHECK(fit.rate == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(fit.log_C == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(fit.residual < 1e-10);
    CHECK(fit.monotone);
    n[30] *= 1.5;
    CHECK_FALSE(decay_fit(t, n).monotone);
    std::vector<double> few_t(t.begin(), t.begin() + 9), few_n(n.begin(), n.begin() + 9);
    CHECK_THROWS_AS(decay_fit(few_t, few_n), Error);
}

TEST_CASE("transformed evolution: trivial data and the linear group") {
    const auto p = params(1.0, 0.05);
    const PhaseGridFunction zero(kGrid);
    const auto traj = evolve_transformed(zero, p, config(1e-3, 0.05, 10));
    for (const auto& s : traj.samples)
        for (const auto& c : s.coeffs) CHECK(std::abs(c) == 0.0);

    std::mt19937_64 rng(4);
    const auto g0 = bdb::testing::random_smooth(kGrid, rng, 3, 3, 0.1);
    const LinearizedOperator op(kGrid, kEp, kBp, 1.0);
    const auto lin = evolve_transformed(g0, p, config(1e-3, 0.1, 20), false);
    for (std::size_t k = 0; k < lin.times.size(); ++k) {
        const auto expect = op.propagate(lin.times[k], g0);
        CHECK(max_abs_diff(from_spectral(lin.samples[k]), expect) < 1e-10);
    }
}

TEST_CASE("transformed and physical evolutions agree") {
    const double tau = 0.05;
    const auto p = params(1.0, tau);
    const auto f0 = perturbed_equilibrium(kGrid, kEp, kBp, 1e-2);
    const auto F = PhaseGridFunction::equilibrium(kGrid, kEp, kBp);
    const auto cfg = config(2.5e-4, 5 * tau, 100);
    const auto rec = evolve(f0, p, cfg);
    const auto traj = evolve_transformed(f0 - F, p, cfg);
    REQUIRE(traj.times.size() == rec.times.size());
    const auto via_g = physical(traj.samples.back(), traj.times.back(), p);
    const double diff = max_abs_diff(rec.final_state, via_g);
    MESSAGE("max |f - (F + e^{-t/tau} g)| = " << diff);
    CHECK(diff < 1e-8);
    const auto rebuilt = physical_record(traj, p, cfg);
    for (std::size_t k = 0; k < rec.times.size(); ++k)
        CHECK(std::abs(rebuilt.norm_x[k] - rec.norm_x[k]) < 1e-6 * rec.norm_x[0]);
}

TEST_CASE("Picard map") {
    const double tau = 0.05;
    const LinearizedOperator op(kGrid, kEp, kBp, 0.0);
    std::mt19937_64 rng(5);
    const auto g0 = bdb::testing::random_smooth(kGrid, rng, 2, 2, 1e-3);

    SUBCASE("constant trajectory is fixed without interaction") {
        TransformedTrajectory u;
        for (int k = 0; k <= 20; ++k) {
            u.times.push_back(k * 1e-3);
            u.samples.push_back(to_spectral(g0, Axes::kSpace));
        }
        const auto phi = picard_step(u, op, tau);
        CHECK(trajectory_distance(phi, u, op.xnorm()) == 0.0);
    }

    SUBCASE("contraction and agreement with the integrator") {
        const auto p = params(1.0, tau);
        const auto F = PhaseGridFunction::equilibrium(kGrid, kEp, kBp);
        const auto h0 = perturbed_equilibrium(kGrid, kEp, kBp, 1e-3) - F;
        auto cfg = config(2.5e-4, tau, 20);
        cfg.picard_tol = 1e-13;
        const auto sol = picard_solve(h0, p, cfg);
        MESSAGE("Picard iterations " << sol.iterations << ", contraction " << sol.contraction);
        CHECK(sol.iterations >= 2);
        CHECK(sol.contraction <= 0.9);
        CHECK(sol.contraction > 0.0);
        const auto traj = evolve_transformed(h0, p, cfg);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            const std::size_t idx = k * 20;
            REQUIRE(sol.g.times[idx] == doctest::Approx(traj.times[k]));
            worst = std::max(worst, max_abs_diff(from_spectral(sol.g.samples[idx]), from_spectral(traj.samples[k])));
        }
        MESSAGE("Picard vs Lawson " << worst);
        CHECK(worst < 1e-6);

        cfg.scheme = Scheme::kDuhamelPicard;
        const auto rec = evolve(F + h0, p, cfg);
        cfg.scheme = Scheme::kStrangSplit;
        const auto split = evolve(F + h0, p, cfg);
        CHECK(max_abs_diff(rec.final_state, split.final_state) < 1e-6);
    }
}

TEST_CASE("BGK collision") {
    const double tau = 0.05;
    const auto p = params(1.0, tau);
    const double dt = 1e-3;

    SUBCASE("equilibrium is stationary") {
        const auto F = PhaseGridFunction::equilibrium(kGrid, kEp, kBp);
        const auto rec = evolve_bgk(F, p, config(dt, 0.05, 10));
        CHECK(max_abs_diff(rec.final_state, F) < 1e-10);
    }

    SUBCASE("collision conserves mass and energy pointwise") {
        const auto f0 = perturbed_equilibrium(kGrid, kEp, kBp, 0.05);
        const auto rec = evolve_bgk(f0, p, config(dt, 0.1, 10));
        MESSAGE("residual rates " << rec.bgk_mass_residual << " " << rec.bgk_energy_residual);
        CHECK(rec.bgk_mass_residual < 1e-9);
        CHECK(rec.bgk_energy_residual < 1e-9);
        CHECK(rec.mass.back() == doctest::Approx(rec.mass.front()).epsilon(1e-12));
        // the perturbation relaxes to a local equilibrium, not to F
        CHECK(rec.norm_x.back() < rec.norm_x.front());
    }

    SUBCASE("vanishing density switches collisions off") {
        // x-independent with zero momentum mean: transport and the field term leave it alone too
        const auto f0 =
            PhaseGridFunction::from_function(kGrid, [](auto, auto pp) { return 0.1 * std::sin(kTwoPi * pp[0]); });
        const auto bgk = evolve_bgk(f0, p, config(dt, 0.05, 10));
        CHECK(max_abs_diff(bgk.final_state, f0) < 1e-15);
        CHECK(bgk.bgk_mass_residual == 0.0);
    }
}

TEST_CASE("resuming from a snapshot reproduces the run") {
    const auto p = params(1.0, 0.05);
    const auto f0 = perturbed_equilibrium(kGrid, kEp, kBp, 1e-2);
    const auto whole = evolve(f0, p, config(1e-3, 0.04, 10));
    const auto first = evolve(f0, p, config(1e-3, 0.02, 10));
    const auto path = (std::filesystem::temp_directory_path() / "bdb_resume_test.bin").string();
    write_snapshot(path, Snapshot{first.final_state, first.times.back(), p});
    const auto snap = read_snapshot(path);
    std::filesystem::remove(path);
    const auto second = evolve(snap.field, snap.params, config(1e-3, 0.02, 10), snap.time);
    CHECK(second.times.front() == doctest::Approx(0.02));
    CHECK(second.times.back() == doctest::Approx(0.04));
    CHECK(max_abs_diff(second.final_state, whole.final_state) < 1e-14);
}

TEST_CASE("records, NDJSON and failure modes") {
    const auto p = params(1.0, 0.05);
    const auto f0 = perturbed_equilibrium(kGrid, kEp, kBp, 1e-3);
    auto cfg = config(1e-3, 0.02, 4);
    cfg.gevrey = GevreySchedule{0.05, 1.0, 0.0, 4};
    cfg.density_every = 2;
    const auto rec = evolve(f0, p, cfg);
    REQUIRE(rec.times.size() == 6);
    for (std::size_t i = 1; i < rec.times.size(); ++i) CHECK(rec.times[i] > rec.times[i - 1]);
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        CHECK(rec.norm_gevrey[i] >= rec.norm_x[i]);
        CHECK(rec.nu[i] == doctest::Approx(0.05 * std::exp(-rec.times[i])));
    }
    CHECK(rec.densities.size() == 3);
    std::ostringstream os;
    write_trajectory_ndjson(os, rec);
    std::istringstream is(os.str());
    std::string line;
    int count = 0;
    while (std::getline(is, line)) {
        const auto j = nlohmann::json::parse(line);
        for (const char* key : {"t", "norm_X", "norm_gevrey", "nu", "mass", "energy"}) CHECK(j.contains(key));
        ++count;
    }
    CHECK(count == 6);

    PhaseGridFunction bad = f0;
    bad.at(3, 4) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(evolve(bad, p, cfg), Error);

    // an unresolved stiff field step grows without bound
    auto loose = config(1.5e-3, 2.0, 10);
    loose.enforce_cfl = false;
    try {
        evolve(perturbed_equilibrium(kGrid, kEp, kBp, 1e-3, 3), params(2000.0, 1.0), loose);
        FAIL("expected blow-up");
    } catch (const Error& e) {
        CHECK((e.code() == ErrorCode::kBlowUp || e.code() == ErrorCode::kNanDetected));
    }
}
