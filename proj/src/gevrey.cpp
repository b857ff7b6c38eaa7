#include "bdb/gevrey.hpp"

#include <cmath>

#include "bdb/error.hpp"
#include "bdb/multiindex.hpp"

namespace bdb {

void GevreySchedule::validate() const {
    if (!(nu0 > 0.0) || !std::isfinite(nu0)) throw Error(ErrorCode::kInvalidArgument, "nu0 must be positive");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error(ErrorCode::kInvalidArgument, "mu must be >= 0");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::kInvalidArgument, "delta must be >= 0");
    if (n_max < 1) throw Error(ErrorCode::kInvalidArgument, "n_max must be >= 1");
}

double norm_schedule(double t, const GevreySchedule& schedule) { return schedule.nu0 * std::exp(-schedule.mu * t); }

namespace {

struct DerivativeTerm {
    MultiIndex alpha;
    MultiIndex beta;
    int order;
    double coefficient;  // nu^{|alpha|+|beta|} / (alpha! beta!)
};

std::vector<DerivativeTerm> derivative_terms(int d, int n_max, double nu) {
    std::vector<DerivativeTerm> out;
    // enumerate (alpha, beta) as one multi-index of length 2d
    for (const auto& ab : multi_indices_up_to(2 * d, n_max)) {
        DerivativeTerm t;
        t.alpha.assign(ab.begin(), ab.begin() + d);
        t.beta.assign(ab.begin() + d, ab.end());
        t.order = order(ab);
        t.coefficient = t.order == 0 ? 1.0 : std::pow(nu, t.order) / factorial(ab);
        if (t.coefficient == 0.0) continue;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

SeminormResult analytic_seminorm(const PhaseGridFunction& f, double nu, int n_max, const XNorm& xnorm) {
    if (!(nu >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "nu must be >= 0");
    const int d = f.grid().d;
    SpectralField modal = to_spectral(f, Axes::kPhaseSpace);
    SeminormResult out;
    for (const auto& term : derivative_terms(d, n_max, nu)) {
        const SpectralField deriv = spectral_derivative(modal, term.alpha, term.beta, n_max);
        const double contribution = term.coefficient * xnorm.norm(deriv);
        out.value += contribution;
        if (term.order == n_max) out.last_shell += contribution;
    }
    return out;
}

SeminormResult conjugated_norm_Yt(const PhaseGridFunction& f, double t, double nu, int n_max,
                                  const LinearizedOperator& L) {
    if (!(nu >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "nu must be >= 0");
    const int d = f.grid().d;
    SpectralField h = to_spectral(f, Axes::kSpace);
    L.propagate(t, h);
    to_momentum_modes(h);

    std::vector<std::pair<MultiIndex, MultiIndex>> shells;
    shells.emplace_back(MultiIndex(static_cast<std::size_t>(d), 0), MultiIndex(static_cast<std::size_t>(d), 0));
    for (int i = 0; i < d; ++i) {
        shells.emplace_back(unit_index(d, i), MultiIndex(static_cast<std::size_t>(d), 0));
        shells.emplace_back(MultiIndex(static_cast<std::size_t>(d), 0), unit_index(d, i));
    }
    SeminormResult out;
    const auto terms = derivative_terms(d, n_max, nu);
    for (const auto& [a, b] : shells) {
        for (const auto& term : terms) {
            SpectralField deriv = spectral_derivative(h, add(term.alpha, a), add(term.beta, b), n_max + 1);
            to_momentum_nodes(deriv);
            L.group_action(t, deriv);
            const double contribution = term.coefficient * L.xnorm().norm(deriv);
            out.value += contribution;
            if (term.order == n_max) out.last_shell += contribution;
        }
    }
    return out;
}

double base_norm_Xt(const PhaseGridFunction& f, double t, const LinearizedOperator& L, double delta) {
    return std::exp(-delta * t) * conjugated_norm_Yt(f, t, 0.0, 0, L).value;
}

SeminormResult transformed_norm(const PhaseGridFunction& u, double t, const GevreySchedule& schedule,
                                const LinearizedOperator& L) {
    SeminormResult y = conjugated_norm_Yt(u, t, norm_schedule(t, schedule), schedule.n_max, L);
    const double damp = std::exp(-schedule.delta * t);
    y.value *= damp;
    y.last_shell *= damp;
    return y;
}

}  // namespace bdb
