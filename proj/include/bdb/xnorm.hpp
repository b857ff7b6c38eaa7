#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bdb/grid.hpp"
#include "bdb/model.hpp"

namespace bdb {

/// Smallest Sobolev order with k > d/2, the order used by default for the X norm.
inline int default_sobolev_order(int d) { return d / 2 + 1; }

/// The X inner product sum_{|alpha| <= k} <d_x^alpha f, d_x^alpha g>_0 on a grid.
/// Evaluated per spatial Fourier mode: mode xi carries the weight sum_alpha |(i xi)^alpha|^2
/// and the momentum Gram matrix diag(q / w) + U lambda1 q q^T.
class XNorm {
public:
    XNorm(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp, double U, int k);
    XNorm(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp, double U)
        : XNorm(grid, ep, bp, U, default_sobolev_order(grid.d)) {}

    const PhaseGrid& grid() const { return grid_; }
    int order() const { return k_; }
    const EntropyParams& entropy() const { return ep_; }
    const BandParams& band() const { return bp_; }
    double U() const { return U_; }
    /// U lambda1, the coefficient of the density-density term.
    double coupling() const { return U_ * ep_.lambda1; }
    const std::vector<double>& weight() const { return w_; }
    const std::vector<double>& inverse_weight() const { return inv_w_; }
    double mode_weight(std::size_t mode) const { return mode_weight_[mode]; }

    double inner(const PhaseGridFunction& f, const PhaseGridFunction& g) const;
    double norm(const PhaseGridFunction& f) const;
    /// Same pairing for x-spectral fields (momentum nodes or modes).
    double inner(const SpectralField& f, const SpectralField& g) const;
    double norm(const SpectralField& f) const;
    /// Contribution of a single x-mode (Gram form of the momentum vector), without the mode weight.
    double mode_energy(std::span<const cplx> column) const;

private:
    PhaseGrid grid_;
    EntropyParams ep_;
    BandParams bp_;
    double U_;
    int k_;
    std::vector<double> w_;
    std::vector<double> inv_w_;
    std::vector<double> mode_weight_;
};

}  // namespace bdb
