#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "bdb/grid.hpp"
#include "bdb/model.hpp"
#include "bdb/xnorm.hpp"

namespace bdb {

struct DispersionSample {
    cplx sigma;
    std::vector<double> xi;
    cplx value;
};

/// Linearization of the transport and field terms around the equilibrium:
///   L f = grad eps . grad_x f + U grad_x rho_f . grad_p F.
/// Per spatial mode xi it acts on momentum columns as M_xi = i A_xi with
///   A_xi = diag(xi . grad eps(p_k)) + U (xi . grad F(p_k)) q^T,   q_k = 1/Np^d.
/// A_xi is self-adjoint for the Gram matrix of the weighted inner product, so e^{tL} is an
/// isometry of the X norm. Evolution of d_t u + L u = 0 is u(t) = e^{-tL} u(0) = propagate(t).
class LinearizedOperator {
public:
    LinearizedOperator(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp, double U);
    ~LinearizedOperator();
    LinearizedOperator(const LinearizedOperator&) = delete;
    LinearizedOperator& operator=(const LinearizedOperator&) = delete;

    const PhaseGrid& grid() const { return grid_; }
    const EntropyParams& entropy() const { return ep_; }
    const BandParams& band() const { return bp_; }
    double U() const { return U_; }
    const XNorm& xnorm() const { return xnorm_; }
    /// xi . grad eps and xi . grad F use this wavevector; components at the Nyquist index are
    /// zero, matching the first-derivative symbol of the grid.
    std::vector<double> wavevector(std::size_t mode) const;

    PhaseGridFunction apply(const PhaseGridFunction& f) const;
    /// In x-spectral form (momentum nodes).
    SpectralField apply(const SpectralField& f) const;
    /// Dense M_xi for one flat x-mode.
    Eigen::MatrixXcd mode_matrix(std::size_t mode) const;

    /// e^{tL} g for t of either sign.
    PhaseGridFunction group_action(double t, const PhaseGridFunction& g) const;
    void group_action(double t, SpectralField& g) const;
    /// e^{-tL} g, the solution operator of d_t u + L u = 0.
    PhaseGridFunction propagate(double t, const PhaseGridFunction& g) const { return group_action(-t, g); }
    void propagate(double t, SpectralField& g) const { group_action(-t, g); }

    /// Solves (sigma + L) f = h mode by mode. Throws on-spectrum when Re sigma = 0 or the
    /// dispersion function of some mode is below 1e-12 in modulus. The solution is complex
    /// in x when sigma is not real, so this form returns x-spectral data.
    SpectralField resolvent(cplx sigma, const SpectralField& h) const;
    /// Real-field form; sigma must be real (invalid-argument otherwise).
    PhaseGridFunction resolvent(double sigma, const PhaseGridFunction& h) const;

    /// D(sigma, xi) = 1 + U int i xi.grad F / (sigma + i xi.grad eps) dp on the momentum nodes.
    cplx dispersion_function(cplx sigma, std::span<const double> xi) const;
    DispersionSample dispersion(cplx sigma, std::span<const double> xi) const;
    /// Real-sigma form 1 + U lambda1 int |xi.grad eps|^2 w / (sigma^2 + |xi.grad eps|^2) dp.
    double dispersion_reduced(double sigma, std::span<const double> xi) const;

    /// Commutator tower with momentum derivatives: Lt_0 = L, Lt_{beta+e_i} = [Lt_beta, d_{p_i}].
    /// Closed form (-1)^{|beta|} (d_p^beta grad eps . grad_x f + U grad_x rho_f . grad_p d_p^beta F).
    PhaseGridFunction commutator_tower(std::span<const int> beta, const PhaseGridFunction& f) const;
    /// Sharp constant c with ||Lt_beta f||_X <= c sum_j ||d_{x_j} f||_X on the grid.
    double tower_bound(std::span<const int> beta) const;

    /// Builds every mode decomposition now instead of lazily.
    void prepare() const;

private:
    struct ModeData;
    const ModeData& mode_data(std::size_t mode) const;
    Eigen::MatrixXd mode_matrix_real(std::span<const double> xi) const;

    PhaseGrid grid_;
    EntropyParams ep_;
    BandParams bp_;
    double U_;
    XNorm xnorm_;
    Eigen::MatrixXd grad_eps_;  // p_size x d
    Eigen::MatrixXd grad_f_;    // p_size x d
    Eigen::MatrixXd chol_;      // lower Cholesky factor of the momentum Gram matrix
    mutable std::vector<std::unique_ptr<ModeData>> modes_;
    mutable std::unique_ptr<std::once_flag[]> once_;
};

/// Free-function form of the dispersion function with its own momentum quadrature.
cplx dispersion_function(cplx sigma, std::span<const double> xi, const EntropyParams& ep, const BandParams& bp,
                         double U, int np = 256);

struct PenroseGrid {
    std::vector<double> gamma;
    std::vector<double> tau;
    std::vector<double> eta;  // |eta|, direction e_1
    /// gamma log-spaced on [1e-3, 10] x 20, tau on [-20, 20] x 81, |eta| log-spaced on [1e-2, 50] x 30.
    static PenroseGrid defaults();
    std::size_t size() const { return gamma.size() * tau.size() * eta.size(); }
};

struct PenroseSample {
    double gamma, tau, eta, value;
};

/// Value of the Penrose functional at one (gamma, tau, eta) for the homogeneous equilibrium:
///   |1 + U/(1+|eta|^2) int_0^S e^{-sigma s} int i eta.grad F e^{-i eta.grad eps s} dp ds|,
/// sigma = gamma + i tau, S chosen so that e^{-gamma S} = 1e-12. The s-integral is exact per node.
double penrose_value(double gamma, double tau, double eta, const EntropyParams& ep, const BandParams& bp, double U,
                     int np = 256);
std::vector<PenroseSample> penrose_scan(const EntropyParams& ep, const BandParams& bp, double U,
                                        const PenroseGrid& grid, int np = 256);
/// Minimum of penrose_value over the sample grid. Positive values are evidence of stability only.
double penrose_margin(const EntropyParams& ep, const BandParams& bp, double U, const PenroseGrid& grid,
                      int np = 256);

}  // namespace bdb
