#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bdb {

class PhaseGridFunction;

/// Tight-binding band: eps(p) = -2 eps0 sum_i cos(2 pi p_i) on the unit momentum torus.
struct BandParams {
    double epsilon0 = 0.5;
    int d = 1;
    void validate() const;
};

/// Multipliers of the equilibrium 1/(eta + exp(-lambda0 - lambda1 eps)).
/// eta = 1 is Fermi-Dirac, eta = 0 Maxwell-Boltzmann.
struct EntropyParams {
    double lambda0 = 0.0;
    double lambda1 = 1.0;
    double eta = 1.0;
    void validate() const;
};

/// Interaction strength and relaxation time. tau may be +inf to switch relaxation off.
struct PhysicalParams {
    double U = 1.0;
    double tau = 0.05;
    void validate() const;
};

struct ModelParams {
    EntropyParams entropy;
    BandParams band;
    PhysicalParams physical;
    void validate() const;
};

double band_energy(std::span<const double> p, const BandParams& bp);
void band_gradient(std::span<const double> p, const BandParams& bp, std::span<double> out);
std::vector<double> band_gradient(std::span<const double> p, const BandParams& bp);
/// d^gamma eps at p. Mixed derivatives vanish since eps is a sum of one-variable terms.
double band_energy_derivative(std::span<const double> p, std::span<const int> gamma,
                              const BandParams& bp);

/// Equilibrium as a function of the energy value (overflow-safe).
double equilibrium_of_energy(double energy, const EntropyParams& ep);
double equilibrium(std::span<const double> p, const EntropyParams& ep, const BandParams& bp);
void equilibrium_gradient(std::span<const double> p, const EntropyParams& ep, const BandParams& bp,
                          std::span<double> out);
/// d^gamma F at p, any order, from a truncated Taylor expansion of the composition.
double equilibrium_derivative(std::span<const double> p, std::span<const int> gamma,
                              const EntropyParams& ep, const BandParams& bp);

struct EquilibriumWeight {
    double w;
    double inverse;
};
/// w = F (1 - eta F), the derivative of F with respect to its exponent.
/// Throws degenerate-weight when w underflows.
EquilibriumWeight equilibrium_weight(std::span<const double> p, const EntropyParams& ep,
                                     const BandParams& bp);
double equilibrium_weight_of_energy(double energy, const EntropyParams& ep);

/// K = U lambda1 int w dp. The trapezoid rule is refined until it stops changing.
double criticality_value(const EntropyParams& ep, const BandParams& bp, double U);
/// Same integral with a fixed number of nodes per dimension.
double criticality_value(const EntropyParams& ep, const BandParams& bp, double U, int nodes_per_dim);

/// <f,g>_0 = int int f g / w dp dx + U lambda1 int rho_f rho_g dx.
double weighted_inner_product(const PhaseGridFunction& f, const PhaseGridFunction& g,
                              const EntropyParams& ep, const BandParams& bp, double U);

/// Momentum nodes k/Np with equal trapezoid weights and the band energy at each node.
class MomentumQuadrature {
public:
    MomentumQuadrature(const BandParams& bp, int np);
    std::size_t size() const { return energy_.size(); }
    double weight() const { return weight_; }
    const std::vector<double>& energies() const { return energy_; }
    const BandParams& band() const { return band_; }

private:
    BandParams band_;
    double weight_;
    std::vector<double> energy_;
};

struct BgkOptions {
    int max_iter = 50;
    double tolerance = 1e-13;
    /// Warm start; the closed-form guess is used when absent or when the warm start fails.
    std::optional<std::pair<double, double>> initial;
};

struct BgkResult {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    int iterations = 0;
    double mass_residual = 0.0;    // relative to m0
    double energy_residual = 0.0;  // relative to m0 * 2 d eps0
};

/// Multipliers of the equilibrium sharing mass and energy with the momentum profile f
/// (one x location). Newton on the 2x2 moment map with step halving.
BgkResult bgk_multipliers(std::span<const double> f, const MomentumQuadrature& quad, double eta,
                          const BgkOptions& options = {});
BgkResult bgk_multipliers_from_moments(double m0, double m1, const MomentumQuadrature& quad,
                                       double eta, const BgkOptions& options = {});

}  // namespace bdb
