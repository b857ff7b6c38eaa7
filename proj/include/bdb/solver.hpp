#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bdb/gevrey.hpp"
#include "bdb/grid.hpp"
#include "bdb/lingroup.hpp"
#include "bdb/model.hpp"

namespace bdb {

enum class Scheme { kStrangSplit, kDuhamelPicard };
enum class Collision { kRelaxation, kBgk };

struct SolverConfig {
    double dt = 2.5e-4;
    double t_end = 0.5;
    Scheme scheme = Scheme::kStrangSplit;
    Collision collision = Collision::kRelaxation;
    int picard_max_iter = 40;
    double picard_tol = 1e-12;
    /// Record norms every this many steps (the final step is always recorded).
    int record_every = 10;
    /// Keep a density snapshot every this many records; 0 disables.
    int density_every = 0;
    /// Analytic norm of f - F along the run; absent to skip (it costs a few group actions per record).
    std::optional<GevreySchedule> gevrey;
    /// Refuse steps violating dt max|grad eps| (2 pi Nx / Lx) <= 1.
    bool enforce_cfl = true;

    /// dt > 0, t_end >= 0, dt <= tau/10, and the transport CFL bound when enforced.
    void validate(const PhaseGrid& grid, const ModelParams& params) const;
};

/// dt max|grad eps| (2 pi Nx / Lx); the configured step is accepted when this is <= 1.
double cfl_number(double dt, const PhaseGrid& grid, const BandParams& bp);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> norm_x;       // ||f - F||_X
    std::vector<double> norm_gevrey;  // NaN when not requested
    std::vector<double> nu;
    std::vector<double> mass;    // int int f dp dx
    std::vector<double> energy;  // int int eps f dp dx
    std::vector<SpatialFunction> densities;
    std::vector<double> density_times;
    std::size_t steps = 0;
    /// Largest pointwise |int (f' - f) dp| and |int eps (f' - f) dp| over BGK collision substeps.
    double bgk_mass_residual = 0.0;
    double bgk_energy_residual = 0.0;
    PhaseGridFunction final_state;
};

/// Integrates d_t f + grad eps . grad_x f + U grad_x rho_f . grad_p f = C(f) on [0, t_end] with the
/// symmetric splitting C(dt/2) T(dt/2) N(dt) T(dt/2) C(dt/2): exact transport T, explicit RK4 for the
/// field term N with dealiased products, and an exact collision step C (relaxation towards F, or towards
/// the local moment-matched equilibrium for BGK). With scheme = duhamel_picard the transformed equation
/// is solved by Picard iteration instead. Throws blow-up when ||f - F||_X exceeds 1e6 times its initial
/// value and nan-detected on non-finite data.
TrajectoryRecord evolve(const PhaseGridFunction& f0, const ModelParams& params, const SolverConfig& config,
                        double t0 = 0.0);

/// BGK collision with the same splitting; equivalent to evolve with collision = bgk.
TrajectoryRecord evolve_bgk(const PhaseGridFunction& f0, const ModelParams& params, const SolverConfig& config,
                            double t0 = 0.0);

/// Samples g(t_k) of the transformed unknown g = e^{t/tau}(f - F) in x-spectral form.
struct TransformedTrajectory {
    std::vector<double> times;
    std::vector<SpectralField> samples;
};

/// Solves d_t g + L g = -U e^{-t/tau} grad_x rho_g . grad_p g by Lawson RK4: the linear part is the exact
/// group of the linearized operator, the quadratic term is integrated in the rotating frame.
/// `with_quadratic = false` drops the right side (pure linear group).
TransformedTrajectory evolve_transformed(const PhaseGridFunction& g0, const ModelParams& params,
                                         const SolverConfig& config, bool with_quadratic = true);
/// Record of the physical field f = F + e^{-t/tau} g rebuilt from a transformed trajectory.
TrajectoryRecord physical_record(const TransformedTrajectory& g, const ModelParams& params,
                                 const SolverConfig& config);

/// One application of Phi(u)(t) = u(0) + int_0^t e^{sL} Q_s(e^{-sL} u(s)) ds on the sample grid
/// (trapezoid rule). u holds samples of u = e^{tL} g.
TransformedTrajectory picard_step(const TransformedTrajectory& u, const LinearizedOperator& op, double tau);
/// sup_k ||a_k - b_k||_X.
double trajectory_distance(const TransformedTrajectory& a, const TransformedTrajectory& b, const XNorm& xnorm);

struct PicardSolution {
    TransformedTrajectory u;
    /// The same samples conjugated back, g(t) = e^{-tL} u(t).
    TransformedTrajectory g;
    int iterations = 0;
    /// Largest ratio of successive sup distances.
    double contraction = 0.0;
    std::vector<double> distances;
};
/// Iterates picard_step from u = u0 on the uniform grid of spacing dt over [0, t_end]; throws
/// contraction-failure when the distance has not dropped below tol after max_iter iterations.
PicardSolution picard_solve(const PhaseGridFunction& g0, const ModelParams& params, const SolverConfig& config);

struct DecayFit {
    double rate = 0.0;
    double log_C = 0.0;
    double residual = 0.0;  // RMS of the log residual
    bool monotone = true;   // false if the norm grew by more than 1e-8 relative between samples
};
/// Least-squares fit of log ||f - F||_X against t on the tail half of the record. Requires at least
/// 10 samples with norm above 1e-14 (invalid-argument otherwise).
DecayFit decay_fit(const TrajectoryRecord& record);
DecayFit decay_fit(const std::vector<double>& times, const std::vector<double>& norms);

/// One NDJSON line per recorded sample: {"t","norm_X","norm_gevrey","nu","mass","energy"}.
void write_trajectory_ndjson(std::ostream& out, const TrajectoryRecord& record);

}  // namespace bdb
