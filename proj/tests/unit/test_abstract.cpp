#include <cmath>
#include <random>
#include <vector>

#include "bdb/abstract.hpp"
#include "bdb/error.hpp"
#include "bdb/lingroup.hpp"
#include "doctest.h"

using namespace bdb;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int m) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd out(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out(i, j) = normal(rng);
    return out;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int m) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) out(i) = normal(rng);
    return out;
}

/// Two-dimensional system with A = diag(1, 2), L = omega I + small rotation, and the truncated
/// product e1 * e1 = e2: the smallest non-trivial instance of the algebra construction.
FiniteSystem diagonal_pair() {
    RandomSystemOptions o;
    o.m = 2;
    o.conjugation = 0.0;
    return random_system(11, o);
}

/// Classical RK4 for the untransformed equation, used as the independent oracle.
std::vector<Eigen::VectorXd> rk4_physical(const FiniteSystem& sys, const Eigen::VectorXd& x0, double dt, int steps,
                                          int substeps) {
    std::vector<Eigen::VectorXd> out{x0};
    Eigen::VectorXd x = x0;
    const double h = dt / substeps;
    for (int s = 0; s < steps; ++s) {
        for (int k = 0; k < substeps; ++k) {
            const Eigen::VectorXd k1 = sys.rhs(x);
            const Eigen::VectorXd k2 = sys.rhs(x + 0.5 * h * k1);
            const Eigen::VectorXd k3 = sys.rhs(x + 0.5 * h * k2);
            const Eigen::VectorXd k4 = sys.rhs(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push_back(x);
    }
    return out;
}

}  // namespace

TEST_CASE("commutator tower") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd L = random_matrix(rng, 5);
    const auto family = random_commuting_family(4, 5, 2);
    CHECK((commutator_tower(L, family, MultiIndex{0, 0}) - L).norm() == 0.0);

    // order independence of the nested brackets for commuting generators
    for (const auto& alpha : multi_indices_up_to(2, 4)) {
        const auto a = commutator_tower(L, family, alpha);
        const auto b = commutator_tower_reversed(L, family, alpha);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, a.norm()));
    }

    const std::vector<Eigen::MatrixXd> identity{Eigen::MatrixXd::Identity(5, 5)};
    for (int k = 1; k <= 3; ++k) CHECK(commutator_tower(L, identity, MultiIndex{k}).norm() == 0.0);
}

TEST_CASE("commutator expansion") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd L = random_matrix(rng, 4);
    const std::vector<Eigen::MatrixXd> A{random_matrix(rng, 4)};
    CHECK(expansion_check(L, A, MultiIndex{1}) < 1e-13);

    // [L, A^2] by hand: [L,A]A + A[L,A] and A L1 = L1 A - L2
    const Eigen::MatrixXd L1 = L * A[0] - A[0] * L;
    const Eigen::MatrixXd L2 = L1 * A[0] - A[0] * L1;
    const Eigen::MatrixXd direct = L * A[0] * A[0] - A[0] * A[0] * L;
    CHECK((direct - (L1 * A[0] + A[0] * L1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct - (2.0 * L1 * A[0] - L2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(expansion_check(L, A, MultiIndex{2}) < 1e-12);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 lrng(seed);
        const Eigen::MatrixXd Ls = random_matrix(lrng, 6);
        for (int n = 1; n <= 2; ++n) {
            const auto family = random_commuting_family(seed + 100, 6, n);
            for (const auto& alpha : multi_indices_up_to(n, 4)) CHECK(expansion_check(Ls, family, alpha) < 1e-10);
        }
    }
}

TEST_CASE("envelope fit") {
    // exact geometric peaks: log(C r^k) recovered
    std::vector<double> peaks;
    for (int k = 0; k <= 6; ++k) peaks.push_back(std::log(2.0) + k * std::log(0.5));
    auto fit = fit_envelope(peaks, 1.0);
    CHECK(fit.C == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r == doctest::Approx(0.5).epsilon(1e-12));

    // line lies above every point and touches the hull at order 1
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> p(7);
        for (auto& v : p) v = u(rng);
        fit = fit_envelope(p, 1.0);
        double touch = -1e300;
        for (int k = 0; k <= 6; ++k) {
            const double line = std::log(fit.C) + k * std::log(fit.r);
            CHECK(line >= p[static_cast<std::size_t>(k)] - 1e-12);
        }
        // no line with a smaller value at k = 1 can stay above the points 0, 1 and j
        touch = std::max(touch, p[1]);
        for (int j = 2; j <= 6; ++j) touch = std::max(touch, p[0] + (p[static_cast<std::size_t>(j)] - p[0]) / j);
        CHECK(std::log(fit.C * fit.r) == doctest::Approx(touch).epsilon(1e-12));
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> zero(5, -inf);
    fit = fit_envelope(zero);
    CHECK(fit.C == 0.0);
    CHECK(fit.r == 0.0);

    CHECK(mu0_of(1, 1.0, 0.5, 1.0) == doctest::Approx(1.0));
    CHECK(nu0_bound(1, 1.0, 0.5, 2.0) == doctest::Approx((1.0 - 0.25) / 0.5));
    CHECK(std::isinf(nu0_bound(2, 1.0, 0.0, 1.0)));
}

TEST_CASE("random systems satisfy the structural hypotheses") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RandomSystemOptions o;
        o.n = 1 + static_cast<int>(seed % 2);
        o.m = 2 + static_cast<int>(seed % 7);
        const auto sys = random_system(seed, o);
        CHECK_NOTHROW(sys.validate());
        CHECK(sys.commutation_residual() < 1e-12);
        CHECK(sys.derivation_residual() < 1e-10);
        CHECK(sys.C_L >= 1.0);
        CHECK(sys.rhs(sys.xbar).norm() == 0.0);

        // ||e^{tL}|| <= C_L e^{omega t} for t of both signs
        for (double t : {-2.0, -0.5, 0.3, 1.0, 3.0}) {
            const double norm = sys.group(t).operatorNorm();
            CHECK(norm <= sys.C_L * std::exp(sys.omega * t) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("validation rejects non-commuting generators") {
    std::mt19937_64 rng(9);
    FiniteSystem sys;
    sys.L = random_matrix(rng, 3);
    sys.A = {random_matrix(rng, 3), random_matrix(rng, 3)};
    sys.xbar = Eigen::VectorXd::Zero(3);
    sys.omega = 1.0;
    try {
        sys.validate();
        FAIL("expected hypothesis-violated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kHypothesisViolated);
    }
}

TEST_CASE("constants estimate") {
    // L = 0: every commutator vanishes
    FiniteSystem zero = diagonal_pair();
    zero.L.setZero();
    auto c = constants_estimate(zero);
    CHECK(c.C == 0.0);
    CHECK(c.mu0 == 0.0);

    const auto sys = random_system(21, {});
    c = constants_estimate(sys);
    CHECK(c.C * c.r < sys.omega / (c.n * c.C_L * c.C_L));
    CHECK(c.nu0 < c.nu0_max);
    CHECK(c.mu0 == doctest::Approx(mu0_of(c.n, c.C * c.C_L * c.C_L, c.r, c.nu0)));
    CHECK(c.mu0 < c.omega);
    CHECK(c.C0 == doctest::Approx(0.75));
    CHECK(c.C1 == doctest::Approx(0.5));
    CHECK(c.epsilon == doctest::Approx(c.C0 * c.R_prime));

    // holdout: the fitted bound certifies fresh samples; without the 5% inflation it is still within 1.05
    CHECK(tower_ratio_on_samples(sys, c.C, c.r, 8, 300, 12345) <= 1.0);
    CHECK(tower_ratio_on_samples(sys, c.C / 1.05, c.r, 8, 300, 54321) <= 1.05);

    // side condition enforced
    FiniteSystem strong = sys;
    std::mt19937_64 rng(2);
    strong.L += 5.0 * random_matrix(rng, sys.m());
    try {
        constants_estimate(strong);
        FAIL("expected hypothesis-violated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kHypothesisViolated);
    }
}

TEST_CASE("remainder inequality for the analytic weights") {
    const auto sys = random_system(31, {});
    const auto c = constants_estimate(sys);
    std::mt19937_64 rng(8);
    const Eigen::VectorXd y = random_vector(rng, sys.m());
    const MultiIndex N{4};

    auto zero = lemma_R_check(sys, c.C, c.r, 0.0, N, y);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.rhs == 0.0);

    // L a polynomial in the generator commutes with it
    FiniteSystem commuting = sys;
    commuting.L = 0.5 * sys.A[0] + 0.1 * sys.A[0] * sys.A[0];
    CHECK(lemma_R_check(commuting, c.C, c.r, 0.3 / c.r, N, y).lhs < 1e-9);

    for (int trial = 0; trial < 100; ++trial) {
        const auto sides = lemma_R_check(sys, c.C, c.r, 0.3 / c.r, N, random_vector(rng, sys.m()));
        CHECK(sides.holds());
    }

    RandomSystemOptions two;
    two.n = 2;
    const auto sys2 = random_system(32, two);
    const auto c2 = constants_estimate(sys2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto sides = lemma_R_check(sys2, c2.C, c2.r, 0.3 / c2.r, MultiIndex{2, 2}, random_vector(rng, sys2.m()));
        CHECK(sides.holds());
    }
}

TEST_CASE("quadratic bounds") {
    RandomSystemOptions o;
    o.m = 5;
    const auto sys = random_system(41, o);
    const double cq = bilinear_constant(sys);
    std::mt19937_64 rng(10);

    const Eigen::VectorXd x = random_vector(rng, sys.m());
    CHECK(lipschitz_check(sys, cq, x, x, MultiIndex{2}).lhs == 0.0);
    FiniteSystem linear = sys;
    linear.Qbil.clear();
    CHECK(lipschitz_check(linear, cq, x, random_vector(rng, sys.m()), MultiIndex{2}).lhs == 0.0);
    CHECK(h3a_check(linear, cq, x, MultiIndex{1}).lhs == 0.0);

    // the norm condition on the bilinear map itself
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd a = random_vector(rng, sys.m());
        const Eigen::VectorXd b = random_vector(rng, sys.m());
        double rhs = 0.0;
        for (const auto& g : sys.A) rhs += (g * a).norm() * b.norm() + a.norm() * (g * b).norm();
        CHECK(sys.bilinear(a, b).norm() <= cq * rhs * (1.0 + 1e-12));
    }

    for (int trial = 0; trial < 100; ++trial) {
        const MultiIndex alpha{trial % 5};
        CHECK(h3a_check(sys, cq, random_vector(rng, sys.m()), alpha).holds());
        CHECK(lipschitz_check(sys, cq, random_vector(rng, sys.m()), random_vector(rng, sys.m()), alpha).holds());
    }
}

TEST_CASE("analytic norm") {
    const auto sys = diagonal_pair();
    Eigen::VectorXd e2 = Eigen::VectorXd::Zero(2);
    e2(1) = 1.0;
    // A = diag(1, 2) at t = 0: exponential series in 2 nu
    CHECK(analytic_norm(sys, e2, 0.3, 0.0) == doctest::Approx(std::exp(0.6)).epsilon(1e-13));
    CHECK(analytic_norm(sys, e2, 0.0, 1.7) == doctest::Approx(e2.norm()).epsilon(1e-13));
}

TEST_CASE("Picard solve") {
    SUBCASE("no quadratic term is a fixed point at once") {
        RandomSystemOptions o;
        o.with_quadratic = false;
        const auto sys = random_system(51, o);
        const auto c = constants_estimate(sys);
        std::mt19937_64 rng(1);
        const Eigen::VectorXd u0 = random_vector(rng, sys.m());
        const auto rep = picard_solve_abstract(sys, u0, c, working_radius(sys, c));
        CHECK(rep.iterations == 1);
        for (const auto& u : rep.u) CHECK((u - u0).norm() == 0.0);
    }

    SUBCASE("matches a fine ODE integration") {
        const auto sys = diagonal_pair();
        const auto c = constants_estimate(sys);
        const double nu = working_radius(sys, c);
        const Eigen::VectorXd u0 = admissible_initial(sys, nu, 0.9 * c.epsilon * nu, 3);
        const auto rep = picard_solve_abstract(sys, u0, c, nu);
        const double dt = rep.times[1] - rep.times[0];
        const auto oracle = rk4_physical(sys, sys.xbar + u0, dt, static_cast<int>(rep.times.size()) - 1, 100);
        double worst = 0.0;
        for (std::size_t k = 0; k < rep.times.size(); ++k) {
            const Eigen::VectorXd x = sys.xbar + sys.group(-rep.times[k]) * rep.u[k];
            worst = std::max(worst, (x - oracle[k]).norm());
        }
        CHECK(worst < 1e-8);
    }

    SUBCASE("contraction and decay bounds on random admissible systems") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            RandomSystemOptions o;
            o.n = 1 + static_cast<int>(seed % 2);
            o.m = 3 + static_cast<int>(seed);
            const auto sys = random_system(seed, o);
            const auto c = constants_estimate(sys);
            const double nu = working_radius(sys, c);
            const auto u0 = admissible_initial(sys, nu, c.epsilon * nu, seed);
            const auto rep = picard_solve_abstract(sys, u0, c, nu);
            CHECK(rep.converged);
            CHECK(rep.contraction_factor > 0.0);
            CHECK(rep.contraction_factor <= 1.0 - 0.5 * c.C1);
            CHECK(rep.transformed_ratio <= 1.0);
            CHECK(rep.decay_ratio <= 1.0 + 1e-6);

            // continuous dependence: C1 ||u - w|| <= ||u0 - w0||
            const auto w0 = admissible_initial(sys, nu, 0.4 * c.epsilon * nu, seed + 99);
            const auto rw = picard_solve_abstract(sys, w0, c, nu);
            std::vector<Eigen::VectorXd> gap;
            for (std::size_t k = 0; k < rep.u.size(); ++k) gap.push_back(rep.u[k] - rw.u[k]);
            const double mu0 = mu0_of(c.n, c.C_group, c.r, nu);
            CHECK(c.C1 * trajectory_norm(sys, rep.times, gap, nu, c.omega, mu0) <=
                  analytic_norm(sys, u0 - w0, nu, 0.0) * (1.0 + 1e-12));
        }
    }

    SUBCASE("inadmissible data are rejected") {
        const auto sys = random_system(61, {});
        const auto c = constants_estimate(sys);
        const double nu = working_radius(sys, c);
        const auto u0 = admissible_initial(sys, nu, 2.0 * c.epsilon * nu, 1);
        try {
            picard_solve_abstract(sys, u0, c, nu);
            FAIL("expected invalid-argument");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kInvalidArgument);
        }
    }
}

TEST_CASE("kinetic constants") {
    const LinearizedOperator op(PhaseGrid{1, 16, 32, 1.0}, EntropyParams{0.0, 1.0, 1.0}, BandParams{0.5, 1}, 1.0);
    const auto k = kinetic_constants(op, 5);
    CHECK(k.C > 0.0);
    CHECK(k.r > 0.0);
    CHECK(k.delta == doctest::Approx(k.C * k.r));
    CHECK(k.nu0 * k.r < 1.0);
    CHECK(k.omega0 > 2.0 * k.C * k.r / std::pow(1.0 - k.r * k.nu0, 2));
    CHECK(k.tau0 == doctest::Approx(1.0 / (k.omega0 + 2.0 * k.delta)));
    CHECK(k.tau0 < 1.0 / (2.0 * k.C * k.r));
    // the fitted line dominates every certified peak
    for (std::size_t j = 0; j < k.log_peaks.size(); ++j)
        CHECK(std::log(k.C) + static_cast<double>(j) * std::log(k.r) >= k.log_peaks[j] - 1e-12);
}

TEST_CASE("verification battery") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto a = verification_battery(seed);
        const auto b = verification_battery(seed);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            INFO(a[i].name);
            CHECK(a[i].passed);
            CHECK(a[i].lhs == b[i].lhs);
            CHECK(a[i].rhs == b[i].rhs);
        }
    }
}
