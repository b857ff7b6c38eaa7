#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bdb/gevrey.hpp"
#include "bdb/multiindex.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bdb;
using bdb::testing::kTwoPi;

namespace {
const PhaseGrid kGrid{1, 32, 64, 1.0};
const EntropyParams kEp{0.0, 1.0, 1.0};
const BandParams kBp{0.5, 1};
}  // namespace

TEST_CASE("norm schedule") {
    GevreySchedule s{0.3, 2.0, 0.0, 6};
    CHECK(norm_schedule(0.0, s) == 0.3);
    CHECK(norm_schedule(std::log(2.0) / s.mu, s) == doctest::Approx(0.15).epsilon(1e-14));
    s.mu = 0.0;
    CHECK(norm_schedule(5.0, s) == 0.3);
}

TEST_CASE("analytic seminorm") {
    const XNorm xn(kGrid, kEp, kBp, 1.0);
    std::mt19937_64 rng(1);
    const auto f = bdb::testing::random_smooth(kGrid, rng);
    CHECK(analytic_seminorm(f, 0.0, 6, xn).value == doctest::Approx(xn.norm(f)).epsilon(1e-14));

    // single spatial mode, constant in p: partial sums of the exponential series
    const auto g = PhaseGridFunction::from_function(kGrid, [](auto x, auto) { return std::cos(kTwoPi * x[0]); });
    const double base = xn.norm(g);
    const double nu = 0.1;
    double partial = 0.0;
    for (int n = 0; n <= 8; ++n) {
        partial += std::pow(nu * kTwoPi, n) / factorial(n);
        const auto r = analytic_seminorm(g, nu, n, xn);
        CHECK(bdb::testing::relative_error(r.value, base * partial) < 1e-12);
        CHECK(bdb::testing::relative_error(r.last_shell, base * std::pow(nu * kTwoPi, n) / factorial(n)) < 1e-10);
    }

    double prev = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double v = analytic_seminorm(f, 0.01 * i, 6, xn).value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("truncation shell is small for analytic fields at the default radius") {
    const XNorm xn(kGrid, kEp, kBp, 1.0);
    std::mt19937_64 rng(2);
    const auto f = bdb::testing::random_smooth(kGrid, rng, 2, 2);
    const auto r = analytic_seminorm(f, 0.05, 6, xn);
    CHECK(r.last_shell < 0.01 * r.value);
}

TEST_CASE("conjugated norms at t = 0 reduce to plain derivative sums") {
    const LinearizedOperator L(kGrid, kEp, kBp, 1.0);
    std::mt19937_64 rng(3);
    const auto f = bdb::testing::random_smooth(kGrid, rng);
    const double nu = 0.04;
    const int n = 3;
    double direct = 0.0;
    for (const auto& [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}}) {
        for (const auto& ab : multi_indices_up_to(2, n)) {
            const std::vector<int> alpha{ab[0] + a}, beta{ab[1] + b};
            direct += std::pow(nu, ab[0] + ab[1]) / factorial(ab) *
                      L.xnorm().norm(spectral_derivative(f, alpha, beta, n + 1));
        }
    }
    CHECK(bdb::testing::relative_error(conjugated_norm_Yt(f, 0.0, nu, n, L).value, direct) < 1e-12);

    // nu = 0 keeps only the first-order shell
    double shell = 0.0;
    for (const auto& [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}})
        shell += L.xnorm().norm(spectral_derivative(f, std::vector<int>{a}, std::vector<int>{b}));
    CHECK(bdb::testing::relative_error(conjugated_norm_Yt(f, 0.0, 0.0, 4, L).value, shell) < 1e-12);
    CHECK(bdb::testing::relative_error(base_norm_Xt(f, 0.0, L, 3.0), shell) < 1e-12);
}

TEST_CASE("base norm of x-independent fields") {
    const LinearizedOperator L(kGrid, kEp, kBp, 1.0);
    PhaseGridFunction c(kGrid);
    for (auto& v : c.values()) v = 0.4;
    const double t = 0.3, delta = 2.0;
    CHECK(bdb::testing::relative_error(base_norm_Xt(c, t, L, delta), std::exp(-delta * t) * L.xnorm().norm(c)) <
          1e-12);
}

TEST_CASE("without the field term the conjugated norm matches free transport") {
    const LinearizedOperator L(kGrid, kEp, kBp, 0.0);
    const auto f = PhaseGridFunction::from_function(kGrid, [](auto x, auto p) {
        return std::cos(kTwoPi * x[0]) * (1.0 + 0.3 * std::sin(kTwoPi * p[0]));
    });
    const double t = 0.05, nu = 0.03;
    const int n = 4;
    // e^{-tL} f = f(x - t grad eps, p), and e^{tL} is an X isometry when U = 0
    const auto h = PhaseGridFunction::from_function(kGrid, [&](auto x, auto p) {
        const double shifted = x[0] - t * band_gradient(std::vector<double>{p[0]}, kBp)[0];
        return std::cos(kTwoPi * shifted) * (1.0 + 0.3 * std::sin(kTwoPi * p[0]));
    });
    double expect = 0.0;
    for (const auto& [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}})
        for (const auto& ab : multi_indices_up_to(2, n))
            expect += std::pow(nu, ab[0] + ab[1]) / factorial(ab) *
                      L.xnorm().norm(spectral_derivative(h, std::vector<int>{ab[0] + a},
                                                         std::vector<int>{ab[1] + b}, n + 1));
    CHECK(bdb::testing::relative_error(conjugated_norm_Yt(f, t, nu, n, L).value, expect) < 1e-10);

    // base norm drift is controlled by the first tower constant
    const auto g = PhaseGridFunction::from_function(kGrid, [](auto x, auto p) {
        return std::sin(kTwoPi * 2 * x[0]) * std::cos(kTwoPi * p[0]) + 0.5;
    });
    const double v0 = base_norm_Xt(g, 0.0, L, 0.0);
    const double dx = L.xnorm().norm(spectral_derivative(g, std::vector<int>{1}, std::vector<int>{0}));
    const double c1 = L.tower_bound(std::vector<int>{1});
    for (double s : {1e-3, 1e-2, 5e-2}) CHECK(std::abs(base_norm_Xt(g, s, L, 0.0) - v0) <= s * c1 * dx + 1e-12);
    // x-independent fields are not transported at all
    const auto flat = PhaseGridFunction::from_function(kGrid, [](auto, auto p) { return std::cos(kTwoPi * p[0]); });
    CHECK(bdb::testing::relative_error(base_norm_Xt(flat, 0.7, L, 0.0), base_norm_Xt(flat, 0.0, L, 0.0)) < 1e-8);
}

TEST_CASE("shrinking-radius norm of a frozen profile does not grow") {
    // With Q = 0 the transformed unknown is constant; the norm with mu, delta above the
    // commutator constants must be non-increasing in t.
    const PhaseGrid grid{1, 16, 64, 1.0};
    const LinearizedOperator L(grid, kEp, kBp, 1.0);
    double C = 0.0, r = 0.0;
    for (int k = 0; k <= 6; ++k) {
        const double c = L.tower_bound(std::vector<int>{k}) / factorial(k);
        if (k == 0) C = c;
        else r = std::max(r, std::pow(c / C, 1.0 / k));
    }
    GevreySchedule s;
    s.nu0 = 0.5 / r;
    s.n_max = 6;
    s.delta = C * r;
    s.mu = 2.0 * C * r / std::pow(1.0 - s.nu0 * r, 2);
    std::mt19937_64 rng(4);
    const auto u = bdb::testing::random_smooth(grid, rng, 2, 2, 1e-3);
    double prev = transformed_norm(u, 0.0, s, L).value;
    for (int i = 1; i <= 8; ++i) {
        const double cur = transformed_norm(u, 0.002 * i, s, L).value;
        CHECK(cur <= prev * (1.0 + 1e-6));
        prev = cur;
    }
}

TEST_CASE("equivalence constant between the product-form norm and Y_0") {
    // S(nu) = analytic_seminorm (product form), Y(nu) = conjugated_norm_Yt at t = 0. Y contains S as its
    // first shell, and (n + 1) q^n <= 1/(1 - q)^2 bounds the derivative shells by S at any radius mu > nu:
    //   S(nu) <= Y(nu) <= (1 + 2d / (mu (1 - nu/mu)^2)) S(mu).
    const LinearizedOperator L(kGrid, kEp, kBp, 1.0);
    std::mt19937_64 rng(17);
    const int n = 4;
    const double nu = 0.02;
    for (double mu : {0.03, 0.05, 0.1}) {
        const double bound = 1.0 + 2.0 * kGrid.d / (mu * std::pow(1.0 - nu / mu, 2));
        double lower = std::numeric_limits<double>::infinity();
        double measured = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const auto f = bdb::testing::random_smooth(kGrid, rng, 2 + trial % 3, 2 + trial % 3);
            const double y = conjugated_norm_Yt(f, 0.0, nu, n, L).value;
            lower = std::min(lower, y / analytic_seminorm(f, nu, n, L.xnorm()).value);
            measured = std::max(measured, y / analytic_seminorm(f, mu, n + 1, L.xnorm()).value);
        }
        MESSAGE("nu = " << nu << ", mu = " << mu << ": measured C = " << measured << ", bound " << bound);
        CHECK(lower >= 1.0);
        CHECK(measured <= bound);
        CHECK(measured >= 1.0);
    }
}
