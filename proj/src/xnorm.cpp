#include "bdb/xnorm.hpp"

#include <cmath>

#include "bdb/error.hpp"
#include "bdb/multiindex.hpp"

namespace bdb {

XNorm::XNorm(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp, double U, int k)
    : grid_(grid), ep_(ep), bp_(bp), U_(U), k_(k) {
    grid_.validate();
    ep_.validate();
    bp_.validate();
    if (bp_.d != grid_.d) throw Error(ErrorCode::kShapeMismatch, "band dimension differs from grid dimension");
    if (k_ < 0) throw Error(ErrorCode::kInvalidArgument, "Sobolev order must be >= 0");
    if (!(U_ >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "U must be >= 0 in the X norm");
    w_.resize(grid_.p_size());
    inv_w_.resize(grid_.p_size());
    std::vector<double> p(static_cast<std::size_t>(grid_.d));
    for (std::size_t ip = 0; ip < grid_.p_size(); ++ip) {
        grid_.p_node(ip, p);
        const auto ew = equilibrium_weight(p, ep_, bp_);
        w_[ip] = ew.w;
        inv_w_[ip] = ew.inverse;
    }
    const auto alphas = multi_indices_up_to(grid_.d, k_);
    mode_weight_.assign(grid_.x_size(), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(grid_.d));
    for (std::size_t m = 0; m < grid_.x_size(); ++m) {
        // flat -> per-axis FFT index
        std::size_t rest = m;
        for (std::size_t i = idx.size(); i-- > 0;) {
            idx[i] = static_cast<int>(rest % static_cast<std::size_t>(grid_.nx));
            rest /= static_cast<std::size_t>(grid_.nx);
        }
        double total = 0.0;
        for (const auto& a : alphas) {
            double term = 1.0;
            for (std::size_t i = 0; i < idx.size(); ++i)
                term *= std::norm(derivative_symbol(static_cast<std::size_t>(idx[i]), grid_.nx, grid_.lx, a[i]));
            total += term;
        }
        mode_weight_[m] = total;
    }
}

double XNorm::mode_energy(std::span<const cplx> column) const {
    const double q = grid_.p_weight();
    double s = 0.0;
    cplx rho = 0.0;
    for (std::size_t k = 0; k < column.size(); ++k) {
        s += std::norm(column[k]) * inv_w_[k];
        rho += column[k];
    }
    return q * s + coupling() * std::norm(rho * q);
}

double XNorm::inner(const SpectralField& f, const SpectralField& g) const {
    check_same_grid(f.grid, grid_);
    check_same_grid(g.grid, grid_);
    if (f.momentum != MomentumRep::kNodal || g.momentum != MomentumRep::kNodal) {
        SpectralField a = f;
        SpectralField b = g;
        to_momentum_nodes(a);
        to_momentum_nodes(b);
        return inner(a, b);
    }
    const std::size_t P = grid_.p_size();
    const double q = grid_.p_weight();
    double total = 0.0;
    for (std::size_t m = 0; m < grid_.x_size(); ++m) {
        const double wm = mode_weight_[m];
        if (wm == 0.0) continue;
        const cplx* a = f.coeffs.data() + m * P;
        const cplx* b = g.coeffs.data() + m * P;
        double s = 0.0;
        cplx ra = 0.0;
        cplx rb = 0.0;
        for (std::size_t k = 0; k < P; ++k) {
            s += (std::conj(a[k]) * b[k]).real() * inv_w_[k];
            ra += a[k];
            rb += b[k];
        }
        total += wm * (q * s + coupling() * q * q * (std::conj(ra) * rb).real());
    }
    return total * grid_.x_volume();
}

double XNorm::norm(const SpectralField& f) const { return std::sqrt(std::max(0.0, inner(f, f))); }

double XNorm::inner(const PhaseGridFunction& f, const PhaseGridFunction& g) const {
    return inner(to_spectral(f, Axes::kSpace), to_spectral(g, Axes::kSpace));
}

double XNorm::norm(const PhaseGridFunction& f) const {
    const SpectralField s = to_spectral(f, Axes::kSpace);
    return norm(s);
}

double weighted_inner_product(const PhaseGridFunction& f, const PhaseGridFunction& g, const EntropyParams& ep,
                              const BandParams& bp, double U) {
    check_same_grid(f.grid(), g.grid());
    const PhaseGrid& grid = f.grid();
    if (bp.d != grid.d) throw Error(ErrorCode::kShapeMismatch, "band dimension differs from grid dimension");
    std::vector<double> inv_w(grid.p_size());
    std::vector<double> p(static_cast<std::size_t>(grid.d));
    for (std::size_t ip = 0; ip < grid.p_size(); ++ip) {
        grid.p_node(ip, p);
        inv_w[ip] = equilibrium_weight(p, ep, bp).inverse;
    }
    const double q = grid.p_weight();
    double kinetic = 0.0;
    double coupled = 0.0;
    for (std::size_t ix = 0; ix < grid.x_size(); ++ix) {
        auto a = f.column(ix);
        auto b = g.column(ix);
        double s = 0.0;
        double ra = 0.0;
        double rb = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            s += a[k] * b[k] * inv_w[k];
            ra += a[k];
            rb += b[k];
        }
        kinetic += s * q;
        coupled += ra * q * rb * q;
    }
    return (kinetic + U * ep.lambda1 * coupled) * grid.x_cell();
}

}  // namespace bdb
