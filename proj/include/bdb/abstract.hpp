#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdb/multiindex.hpp"

namespace bdb {

class LinearizedOperator;

/// Dense finite-dimensional instance of the abstract Cauchy problem
///   d_t x = -L (x - xbar) + Q(x - xbar),   Q(y) = Qbil(y, y),
/// on R^m with the Euclidean norm, commuting generators A_1..A_n, and a group bound
/// ||e^{tL}|| <= C_L e^{omega t} for all real t. The transformed unknown is
/// u = e^{tL}(x - xbar), which solves d_t u = e^{tL} Q(e^{-tL} u).
struct FiniteSystem {
    Eigen::MatrixXd L;
    std::vector<Eigen::MatrixXd> A;
    /// Qbil(x, y)_k = x^T Qbil[k] y.
    std::vector<Eigen::MatrixXd> Qbil;
    Eigen::VectorXd xbar;
    double C_L = 1.0;
    double omega = 0.0;

    int m() const { return static_cast<int>(L.rows()); }
    int n() const { return static_cast<int>(A.size()); }

    /// Shapes, finiteness and pairwise commutation (hypothesis-violated otherwise).
    void validate() const;
    double commutation_residual() const;
    /// max_i ||A_i Qbil(x,y) - Qbil(A_i x, y) - Qbil(x, A_i y)||, zero for derivations.
    double derivation_residual() const;

    Eigen::VectorXd bilinear(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    Eigen::VectorXd rhs(const Eigen::VectorXd& x) const;
    /// e^{tL}.
    Eigen::MatrixXd group(double t) const;
    /// A^alpha y.
    Eigen::VectorXd power_apply(std::span<const int> alpha, const Eigen::VectorXd& y) const;
    /// Stacked generator [A_1; ...; A_n], injective on the systems built here.
    Eigen::MatrixXd stacked_generators() const;
};

struct RandomSystemOptions {
    int n = 1;
    /// Dimension for n = 1 (2..8). For n = 2 the dimension follows from the degree bound.
    int m = 4;
    int degree = 2;  // n = 2 only: monomials x^i y^j with 0 < i + j <= degree
    double omega = 1.0;
    double conjugation = 0.3;
    double quadratic_scale = 1.0;
    bool with_quadratic = true;
};

/// Truncated polynomial algebra with Euler-type generators (diagonal in the monomial basis, so
/// the product is a derivation for each A_i), skew rotation plus omega I for L, all conjugated by a
/// random well-conditioned P. The skew strength is halved until C r < omega / (n C_L^2).
FiniteSystem random_system(std::uint64_t seed, const RandomSystemOptions& options = {});

/// n commuting m x m matrices, each a random cubic polynomial in one random matrix.
std::vector<Eigen::MatrixXd> random_commuting_family(std::uint64_t seed, int m, int n);

/// L_0 = L, L_{alpha + e_i} = [L_alpha, A_i], built in graded order.
Eigen::MatrixXd commutator_tower(const Eigen::MatrixXd& L, std::span<const Eigen::MatrixXd> A,
                                 std::span<const int> alpha);
Eigen::MatrixXd commutator_tower(const FiniteSystem& sys, std::span<const int> alpha);
/// Same tower built with the generator order reversed at every step; used to exhibit order independence.
Eigen::MatrixXd commutator_tower_reversed(const Eigen::MatrixXd& L, std::span<const Eigen::MatrixXd> A,
                                          std::span<const int> alpha);

/// max entry of [L, A^alpha] - sum_{0 != gamma <= alpha} binom(alpha, gamma) (-1)^{|gamma|-1} L_gamma A^{alpha-gamma}.
double expansion_check(const Eigen::MatrixXd& L, std::span<const Eigen::MatrixXd> A, std::span<const int> alpha);
double expansion_check(const FiniteSystem& sys, std::span<const int> alpha);

/// Line log C + k log r above the points (k, peaks[k]) for k = 0..depth with the smallest value
/// at k = 1 (i.e. the smallest product C r); among those, the smallest slope. -inf entries are skipped.
struct EnvelopeFit {
    double C = 0.0;
    double r = 0.0;
};
EnvelopeFit fit_envelope(std::span<const double> log_peaks, double inflate = 1.05);

/// Certified per-order peaks log max_{|alpha| = k} sigma_max(L_alpha S^+) / alpha!, where S is the
/// stacked generator; sigma_max(L_alpha S^+) bounds ||L_alpha y|| / sum_i ||A_i y|| for every y.
/// The order-zero entry is -inf unless requested: only L_gamma with gamma != 0 enter the commutator
/// expansion, and the order-zero bound would tie C to ||L S^+|| instead of to the commutators.
std::vector<double> tower_peaks(const FiniteSystem& sys, int depth, bool include_order_zero = false);

/// Largest observed ratio ||L_alpha y|| / (C alpha! r^|alpha| sum_i ||A_i y||) over random y and
/// |alpha| <= depth. Values <= 1 mean the bound holds on the sample.
double tower_ratio_on_samples(const FiniteSystem& sys, double C, double r, int depth, int samples,
                              std::uint64_t seed, bool include_order_zero = false);

/// C_Q with ||Qbil(x,y)|| <= C_Q sum_i (||A_i x|| ||y|| + ||x|| ||A_i y||), certified as
/// sqrt(sum_k ||Qbil[k]||_2^2) sigma_max(S^+).
double bilinear_constant(const FiniteSystem& sys);

struct ConstantsOptions {
    int depth = 8;
    bool include_order_zero = false;
    double inflate = 1.05;
    /// nu0 as a fraction of the admissible bound, used when nu0 is not given.
    double nu0_fraction = 0.5;
    std::optional<double> nu0;
    /// Lipschitz shrink factor of the remark on R'; 1/2 gives the standard contraction constants.
    double gamma = 0.5;
};

/// Constants of the fixed-point argument in the transformed (time-weighted) hypotheses:
/// C' = C C_L^2, M_1 = M_1' = 2 C_Q C_L^3, M_0 = M_0' = 0, mu0 = n C' r / (1 - nu0 r)^n,
/// R' = (gamma/2)(omega - mu0)/M_1', C0 = 1 - R' M_1/(omega - mu0), C1 = 1 - 2 R' M_1'/(omega - mu0),
/// and the small-data threshold epsilon = C0 R' (so ||u0|| <= epsilon nu means ||u0|| <= C0 R' nu).
struct ContractionConstants {
    int n = 1;
    double C = 0.0;
    double r = 0.0;
    double C_L = 1.0;
    double omega = 0.0;
    double C_group = 0.0;  // C C_L^2
    double nu0 = 0.0;
    double nu0_max = 0.0;
    double mu0 = 0.0;
    double C_Q = 0.0;
    double M0 = 0.0, M1 = 0.0, M0p = 0.0, M1p = 0.0;
    double gamma = 0.5;
    double R_prime = 0.0;
    double C0 = 1.0;
    double C1 = 1.0;
    double epsilon = 0.0;
};

/// Fits (C, r), checks C r < omega/(n C_L^2) and nu0 < nu0_max, and fills the remaining constants.
/// Throws hypothesis-violated with the failing ratio.
ContractionConstants constants_estimate(const FiniteSystem& sys, const ConstantsOptions& options = {});
/// mu0 = n C r / (1 - nu0 r)^n.
double mu0_of(int n, double C, double r, double nu0);
/// (1/r)(1 - (n C r / omega)^{1/n}); +inf when r = 0.
double nu0_bound(int n, double C, double r, double omega);

struct InequalitySides {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds(double rel = 1e-9) const { return lhs <= rhs * (1.0 + rel) + 1e-300; }
};

/// sum_{alpha <= N} nu^|alpha|/alpha! ||[L, A^alpha] y||  vs
/// n C nu r/(1 - nu r)^n sum_{alpha < N} nu^|alpha|/alpha! sum_i ||A^{alpha+e_i} y||.
InequalitySides lemma_R_check(const FiniteSystem& sys, double C, double r, double nu, std::span<const int> N,
                              const Eigen::VectorXd& y);

/// ||A^alpha Q(y)|| vs sum_gamma binom ||A^{alpha-gamma} y|| M1 sum_i ||A^{gamma+e_i} y|| with M1 = 2 C_Q.
InequalitySides h3a_check(const FiniteSystem& sys, double C_Q, const Eigen::VectorXd& y, std::span<const int> alpha);

/// ||A^alpha (Q(y) - Q(x))|| vs the Lipschitz display with M1' = 2 C_Q, M0' = 0; the suprema over the
/// segment [x, y] are taken over `segment_points` equispaced points (a lower bound of the true right side).
InequalitySides lipschitz_check(const FiniteSystem& sys, double C_Q, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y, std::span<const int> alpha, int segment_points = 11);

/// Truncated sum_{|alpha| <= depth} nu^|alpha|/alpha! ||e^{tL} A^alpha e^{-tL} y||.
double analytic_norm(const FiniteSystem& sys, const Eigen::VectorXd& y, double nu, double t, int depth = 24);

struct PicardOptions {
    double T = 0.0;   // default 5/omega
    double dt = 0.0;  // default min(0.01/omega, T/200)
    int max_iter = 60;
    double tol = 1e-14;
    int depth = 24;
};

struct PicardReport {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> u;
    int iterations = 0;
    bool converged = false;
    /// Largest ratio of successive iterate distances in the ||.||_{nu, omega} trajectory norm.
    double contraction_factor = 0.0;
    double trajectory_norm = 0.0;
    /// max_t ||u(t)||_{X_t^{nu e^{-omega t}}} / (2 epsilon nu).
    double transformed_ratio = 0.0;
    /// max_t ||x(t) - xbar||_{X_0^{nu e^{-omega t}}} / (2 C_L epsilon nu e^{-omega t}).
    double decay_ratio = 0.0;
    double initial_norm = 0.0;  // ||u0||_{X_0^nu}
};

/// Iterates Phi(u)(t) = u0 + int_0^t e^{sL} Q(e^{-sL} u(s)) ds from u = u0 on the sample grid with
/// the trapezoid rule. Throws invalid-argument if u0 is not admissible (||u0||_{X_0^nu} > epsilon nu)
/// and contraction-failure if the iteration does not converge.
PicardReport picard_solve_abstract(const FiniteSystem& sys, const Eigen::VectorXd& u0,
                                   const ContractionConstants& consts, double nu, const PicardOptions& options = {});

/// sup_k ( ||u_k||_{X_{t_k}^{nu(t_k)}} + (mu - mu0) sum_i int_0^{t_k} nu(s) ||A_{sL}^{e_i} u(s)||_{X_s^{nu(s)}} ds ),
/// nu(t) = nu e^{-mu t}, trapezoid in s.
double trajectory_norm(const FiniteSystem& sys, std::span<const double> times, std::span<const Eigen::VectorXd> u,
                       double nu, double mu, double mu0, int depth = 24);

/// Working radius min(nu0, 1/max_i ||A_i||_2); any radius up to nu0 is admissible and this one keeps
/// the analytic weights of moderate size.
double working_radius(const FiniteSystem& sys, const ContractionConstants& consts);

/// Random vector scaled to ||y||_{X_0^nu} = target.
Eigen::VectorXd admissible_initial(const FiniteSystem& sys, double nu, double target, std::uint64_t seed,
                                   int depth = 24);

/// Constants of the commutator hypothesis for the kinetic linearization and the relaxation-time
/// threshold derived from them: delta = C r, omega0 = margin * 2d C r / (1 - r nu0)^{2d},
/// tau0 = 1/(omega0 + 2 delta) < 1/(2 C r).
struct KineticConstants {
    double C = 0.0;
    double r = 0.0;
    double delta = 0.0;
    double nu0 = 0.0;
    double omega0 = 0.0;
    double tau0 = 0.0;
    std::vector<double> log_peaks;
};
KineticConstants kinetic_constants(const LinearizedOperator& op, int depth = 6, double nu0_fraction = 0.5,
                                   double margin = 1.01);

struct CheckRecord {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    std::uint64_t seed = 0;
    bool passed = false;
};

struct BatteryOptions {
    int trials = 20;
    int max_order = 4;
    double gamma = 0.5;
};

/// Full verification battery for one seed: commuting expansion, the commutator hypothesis on a holdout
/// sample, the remainder inequality, the quadratic bounds, Picard contraction, the transformed and decay bounds,
/// continuous dependence and the gamma remark.
std::vector<CheckRecord> verification_battery(std::uint64_t seed, const BatteryOptions& options = {});

}  // namespace bdb
