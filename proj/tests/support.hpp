#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bdb/grid.hpp"
#include "bdb/model.hpp"

namespace bdb::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Random smooth field: a few low spatial and momentum Fourier modes with random amplitudes.
inline PhaseGridFunction random_smooth(const PhaseGrid& grid, std::mt19937_64& rng, int kx_max = 3, int kp_max = 3,
                                       double amplitude = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    PhaseGridFunction out(grid);
    for (int kx = 0; kx <= kx_max; ++kx) {
        for (int kp = 0; kp <= kp_max; ++kp) {
            const double a = amplitude * normal(rng) / (1.0 + kx + kp);
            const double phx = kTwoPi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const double php = kTwoPi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            std::vector<double> x(static_cast<std::size_t>(grid.d));
            std::vector<double> p(static_cast<std::size_t>(grid.d));
            for (std::size_t ix = 0; ix < grid.x_size(); ++ix) {
                grid.x_node(ix, x);
                double sx = 0.0;
                for (double xi : x) sx += xi;
                const double cx = std::cos(kTwoPi * kx * sx / grid.lx + phx);
                for (std::size_t ip = 0; ip < grid.p_size(); ++ip) {
                    grid.p_node(ip, p);
                    double sp = 0.0;
                    for (double pi : p) sp += pi;
                    out.at(ix, ip) += a * cx * std::cos(kTwoPi * kp * sp + php);
                }
            }
        }
    }
    return out;
}

/// Random field with every grid coefficient populated (white noise).
inline PhaseGridFunction random_noise(const PhaseGrid& grid, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    PhaseGridFunction out(grid);
    for (auto& v : out.values()) v = normal(rng);
    return out;
}

/// F(p) + amplitude cos(2 pi k x_1 / Lx) (1 + cos(2 pi p_1) / 2): a smooth single-mode perturbation.
inline PhaseGridFunction perturbed_equilibrium(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp,
                                               double amplitude, int k = 1) {
    return PhaseGridFunction::from_function(grid, [&](auto x, auto p) {
        return equilibrium(p, ep, bp) +
               amplitude * std::cos(kTwoPi * k * x[0] / grid.lx) * (1.0 + 0.5 * std::cos(kTwoPi * p[0]));
    });
}

inline double max_abs_diff(const PhaseGridFunction& a, const PhaseGridFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace bdb::testing
