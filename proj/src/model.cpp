#include "bdb/model.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "bdb/error.hpp"
#include "bdb/multiindex.hpp"
#include "bdb/taylor.hpp"

namespace bdb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::shared_ptr<const TaylorBasis> cached_basis(int variables, int degree) {
    thread_local std::map<std::pair<int, int>, std::shared_ptr<const TaylorBasis>> cache;
    auto& slot = cache[{variables, degree}];
    if (!slot) slot = std::make_shared<const TaylorBasis>(variables, degree);
    return slot;
}

void check_point(std::span<const double> p, const BandParams& bp) {
    if (static_cast<int>(p.size()) != bp.d)
        throw Error(ErrorCode::kShapeMismatch, "momentum point has " + std::to_string(p.size()) +
                                                   " components, band dimension is " + std::to_string(bp.d));
}

// Trapezoid sum of g(eps(p)) over an n^d tensor grid of the unit torus.
template <class G>
double torus_trapezoid(const BandParams& bp, int n, G&& g) {
    std::vector<double> cosines(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) cosines[static_cast<std::size_t>(k)] = std::cos(kTwoPi * k / n);
    std::size_t total = 1;
    for (int i = 0; i < bp.d; ++i) total *= static_cast<std::size_t>(n);
    double sum = 0.0;
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        double c = 0.0;
        for (int i = 0; i < bp.d; ++i) {
            c += cosines[rest % static_cast<std::size_t>(n)];
            rest /= static_cast<std::size_t>(n);
        }
        sum += g(-2.0 * bp.epsilon0 * c);
    }
    return sum / static_cast<double>(total);
}

}  // namespace

void BandParams::validate() const {
    if (!(epsilon0 > 0.0) || !std::isfinite(epsilon0))
        throw Error(ErrorCode::kInvalidArgument, "epsilon0 must be positive and finite");
    if (d < 1 || d > 3) throw Error(ErrorCode::kInvalidArgument, "dimension d must be 1, 2 or 3");
}

void EntropyParams::validate() const {
    if (!std::isfinite(lambda0)) throw Error(ErrorCode::kInvalidArgument, "lambda0 must be finite");
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1))
        throw Error(ErrorCode::kInvalidArgument, "lambda1 must be finite and >= 0");
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw Error(ErrorCode::kInvalidArgument, "eta must be finite and >= 0");
}

void PhysicalParams::validate() const {
    // U = 0 is admitted as the non-interacting limit (free transport plus relaxation).
    if (!(U >= 0.0) || !std::isfinite(U)) throw Error(ErrorCode::kInvalidArgument, "U must be finite and >= 0");
    if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive (inf disables relaxation)");
}

void ModelParams::validate() const {
    entropy.validate();
    band.validate();
    physical.validate();
}

double band_energy(std::span<const double> p, const BandParams& bp) {
    check_point(p, bp);
    double c = 0.0;
    for (double pi : p) c += std::cos(kTwoPi * pi);
    return -2.0 * bp.epsilon0 * c;
}

void band_gradient(std::span<const double> p, const BandParams& bp, std::span<double> out) {
    check_point(p, bp);
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = 2.0 * kTwoPi * bp.epsilon0 * std::sin(kTwoPi * p[i]);
}

std::vector<double> band_gradient(std::span<const double> p, const BandParams& bp) {
    std::vector<double> out(p.size());
    band_gradient(p, bp, out);
    return out;
}

double band_energy_derivative(std::span<const double> p, std::span<const int> gamma, const BandParams& bp) {
    check_point(p, bp);
    if (gamma.size() != p.size()) throw Error(ErrorCode::kShapeMismatch, "multi-index length differs from d");
    int axis = -1;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (gamma[i] < 0) throw Error(ErrorCode::kInvalidArgument, "negative derivative order");
        if (gamma[i] == 0) continue;
        if (axis >= 0) return 0.0;
        axis = static_cast<int>(i);
    }
    if (axis < 0) return band_energy(p, bp);
    const int k = gamma[static_cast<std::size_t>(axis)];
    const double phase = kTwoPi * p[static_cast<std::size_t>(axis)] + k * std::numbers::pi / 2.0;
    return -2.0 * bp.epsilon0 * std::pow(kTwoPi, k) * std::cos(phase);
}

double equilibrium_of_energy(double energy, const EntropyParams& ep) {
    const double z = ep.lambda0 + ep.lambda1 * energy;
    if (ep.eta == 0.0) return std::exp(z);
    if (z >= 0.0) return 1.0 / (ep.eta + std::exp(-z));
    const double e = std::exp(z);
    return e / (ep.eta * e + 1.0);
}

double equilibrium(std::span<const double> p, const EntropyParams& ep, const BandParams& bp) {
    return equilibrium_of_energy(band_energy(p, bp), ep);
}

double equilibrium_weight_of_energy(double energy, const EntropyParams& ep) {
    const double z = ep.lambda0 + ep.lambda1 * energy;
    const double f = equilibrium_of_energy(energy, ep);
    if (ep.eta == 0.0) return f;
    // 1 - eta F = 1 / (1 + eta e^z), evaluated without overflow
    const double complement = z > 0.0 ? std::exp(-z) / (std::exp(-z) + ep.eta) : 1.0 / (1.0 + ep.eta * std::exp(z));
    return f * complement;
}

EquilibriumWeight equilibrium_weight(std::span<const double> p, const EntropyParams& ep, const BandParams& bp) {
    const double w = equilibrium_weight_of_energy(band_energy(p, bp), ep);
    if (!(w > 0.0) || !std::isfinite(1.0 / w))
        throw Error(ErrorCode::kDegenerateWeight, "equilibrium weight underflows at working precision");
    return {w, 1.0 / w};
}

void equilibrium_gradient(std::span<const double> p, const EntropyParams& ep, const BandParams& bp,
                          std::span<double> out) {
    const double w = equilibrium_weight_of_energy(band_energy(p, bp), ep);
    band_gradient(p, bp, out);
    for (std::size_t i = 0; i < p.size(); ++i) out[i] *= ep.lambda1 * w;
}

double equilibrium_derivative(std::span<const double> p, std::span<const int> gamma, const EntropyParams& ep,
                              const BandParams& bp) {
    check_point(p, bp);
    if (gamma.size() != p.size()) throw Error(ErrorCode::kShapeMismatch, "multi-index length differs from d");
    const int degree = order(gamma);
    if (degree == 0) return equilibrium(p, ep, bp);
    auto basis = cached_basis(bp.d, degree);

    // eps(p + h) = -2 eps0 sum_i sum_k (2 pi)^k h_i^k / k! cos(2 pi p_i + k pi / 2)
    TaylorSeries energy(basis);
    MultiIndex mono(static_cast<std::size_t>(bp.d), 0);
    for (int i = 0; i < bp.d; ++i) {
        for (int k = 0; k <= degree; ++k) {
            mono.assign(static_cast<std::size_t>(bp.d), 0);
            mono[static_cast<std::size_t>(i)] = k;
            const double phase = kTwoPi * p[static_cast<std::size_t>(i)] + k * std::numbers::pi / 2.0;
            energy.coefficient(basis->index_of(mono)) +=
                -2.0 * bp.epsilon0 * std::pow(kTwoPi, k) / factorial(k) * std::cos(phase);
        }
    }
    TaylorSeries z = energy * ep.lambda1;
    z.coefficient(0) += ep.lambda0;

    TaylorSeries f(basis);
    if (ep.eta == 0.0) {
        f = z.exp();
    } else if (z.value() >= 0.0) {
        TaylorSeries denom = (z * -1.0).exp();
        denom.coefficient(0) += ep.eta;
        f = denom.reciprocal();
    } else {
        const TaylorSeries e = z.exp();
        TaylorSeries denom = e * ep.eta;
        denom.coefficient(0) += 1.0;
        f = e * denom.reciprocal();
    }
    return f.derivative(gamma);
}

double criticality_value(const EntropyParams& ep, const BandParams& bp, double U, int nodes_per_dim) {
    if (nodes_per_dim < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 quadrature nodes");
    if (ep.lambda1 == 0.0) return 0.0;
    const double integral =
        torus_trapezoid(bp, nodes_per_dim, [&](double e) { return equilibrium_weight_of_energy(e, ep); });
    return U * ep.lambda1 * integral;
}

double criticality_value(const EntropyParams& ep, const BandParams& bp, double U) {
    if (ep.lambda1 == 0.0) return 0.0;
    // The integrand is analytic and periodic, so the trapezoid rule converges geometrically;
    // refine until two successive node counts agree.
    const int cap = bp.d == 1 ? 1 << 14 : (bp.d == 2 ? 512 : 96);
    int n = 32;
    double prev = criticality_value(ep, bp, U, n);
    while (n * 2 <= cap) {
        n *= 2;
        const double cur = criticality_value(ep, bp, U, n);
        if (std::abs(cur - prev) <= 1e-15 * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

MomentumQuadrature::MomentumQuadrature(const BandParams& bp, int np) : band_(bp) {
    bp.validate();
    if (np < 2) throw Error(ErrorCode::kInvalidArgument, "momentum quadrature needs >= 2 nodes");
    std::size_t total = 1;
    for (int i = 0; i < bp.d; ++i) total *= static_cast<std::size_t>(np);
    weight_ = 1.0 / static_cast<double>(total);
    energy_.resize(total);
    std::vector<double> p(static_cast<std::size_t>(bp.d));
    for (std::size_t flat = 0; flat < total; ++flat) {
        // last momentum axis varies fastest
        std::size_t rest = flat;
        for (int i = bp.d - 1; i >= 0; --i) {
            p[static_cast<std::size_t>(i)] = static_cast<double>(rest % static_cast<std::size_t>(np)) / np;
            rest /= static_cast<std::size_t>(np);
        }
        energy_[flat] = band_energy(p, bp);
    }
}

namespace {

struct MomentEval {
    double r0, r1;     // residuals of the two moment constraints
    double j00, j01, j11;
};

MomentEval eval_moments(double l0, double l1, double m0, double m1, const MomentumQuadrature& quad, double eta) {
    const EntropyParams ep{l0, l1, eta};
    MomentEval out{-m0, -m1, 0.0, 0.0, 0.0};
    const double q = quad.weight();
    for (double e : quad.energies()) {
        const double f = equilibrium_of_energy(e, ep);
        const double w = equilibrium_weight_of_energy(e, ep);
        out.r0 += q * f;
        out.r1 += q * e * f;
        out.j00 += q * w;
        out.j01 += q * e * w;
        out.j11 += q * e * e * w;
    }
    return out;
}

}  // namespace

BgkResult bgk_multipliers_from_moments(double m0, double m1, const MomentumQuadrature& quad, double eta,
                                       const BgkOptions& options) {
    if (!std::isfinite(m0) || !std::isfinite(m1) || !(m0 > 0.0) || (eta > 0.0 && !(m0 * eta < 1.0)))
        throw Error(ErrorCode::kNonRealizableMoments,
                    "mass " + std::to_string(m0) + " outside the realizable interval (0, 1/eta)");
    const double energy_scale = m0 * 2.0 * quad.band().d * quad.band().epsilon0;
    auto scaled_norm = [&](const MomentEval& ev) {
        return std::hypot(ev.r0 / m0, ev.r1 / energy_scale);
    };

    auto solve_from = [&](double l0, double l1) -> std::optional<BgkResult> {
        MomentEval ev = eval_moments(l0, l1, m0, m1, quad, eta);
        double res = scaled_norm(ev);
        for (int it = 0; it <= options.max_iter; ++it) {
            if (!std::isfinite(res)) return std::nullopt;
            if (res <= options.tolerance || it == options.max_iter) {
                if (res > 1e-10) return std::nullopt;
                return BgkResult{l0, l1, it, std::abs(ev.r0) / m0, std::abs(ev.r1) / energy_scale};
            }
            const double det = ev.j00 * ev.j11 - ev.j01 * ev.j01;
            const double scale = ev.j00 * ev.j11;
            if (!(std::abs(det) > 1e-300) || !(std::abs(det) > 1e-14 * std::abs(scale)))
                throw Error(ErrorCode::kSingularJacobian, "moment Jacobian determinant underflows");
            const double d0 = (ev.j11 * ev.r0 - ev.j01 * ev.r1) / det;
            const double d1 = (ev.j00 * ev.r1 - ev.j01 * ev.r0) / det;
            double step = 1.0;
            bool accepted = false;
            for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
                const double n0 = l0 - step * d0;
                const double n1 = l1 - step * d1;
                const MomentEval trial = eval_moments(n0, n1, m0, m1, quad, eta);
                const double trial_res = scaled_norm(trial);
                if (std::isfinite(trial_res) && trial_res < res) {
                    l0 = n0;
                    l1 = n1;
                    ev = trial;
                    res = trial_res;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                // no further decrease possible: accept if already at rounding level
                if (res <= 1e-10) return BgkResult{l0, l1, it, std::abs(ev.r0) / m0, std::abs(ev.r1) / energy_scale};
                return std::nullopt;
            }
        }
        return std::nullopt;
    };

    if (options.initial) {
        if (auto r = solve_from(options.initial->first, options.initial->second)) return *r;
    }
    const double l0 = eta > 0.0 ? -std::log(1.0 / m0 - eta) : std::log(m0);
    if (auto r = solve_from(l0, 0.0)) return *r;
    throw Error(ErrorCode::kNonRealizableMoments,
                "Newton iteration for the moment multipliers did not converge within " +
                    std::to_string(options.max_iter) + " iterations");
}

BgkResult bgk_multipliers(std::span<const double> f, const MomentumQuadrature& quad, double eta,
                          const BgkOptions& options) {
    if (f.size() != quad.size())
        throw Error(ErrorCode::kShapeMismatch, "momentum profile size differs from quadrature size");
    double m0 = 0.0;
    double m1 = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        m0 += f[k];
        m1 += f[k] * quad.energies()[k];
    }
    m0 *= quad.weight();
    m1 *= quad.weight();
    return bgk_multipliers_from_moments(m0, m1, quad, eta, options);
}

}  // namespace bdb
