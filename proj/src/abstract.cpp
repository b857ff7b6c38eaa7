#include "bdb/abstract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "bdb/error.hpp"
#include "bdb/lingroup.hpp"

namespace bdb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd out(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) out(i, j) = normal(rng);
    return out;
}

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int m) {
    return gaussian_matrix(rng, m, 1).col(0);
}

double sigma_max(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()(0);
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& S) {
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(S).pseudoInverse();
}

/// Graded multi-indices up to an order with parent links, so that A^alpha v is one product away
/// from an already computed vector.
struct IndexTable {
    std::vector<MultiIndex> list;
    std::vector<int> parent;     // index of alpha - e_gen
    std::vector<int> generator;  // gen with alpha = parent + e_gen
    std::vector<int> order;
    std::vector<double> inv_factorial;
    std::vector<std::vector<int>> child;  // child[a][i] = index of alpha + e_i, -1 beyond the table

    IndexTable(int n, int max_order) {
        list = multi_indices_up_to(n, max_order);
        std::map<MultiIndex, int> where;
        for (std::size_t a = 0; a < list.size(); ++a) where[list[a]] = static_cast<int>(a);
        parent.assign(list.size(), -1);
        generator.assign(list.size(), -1);
        order.resize(list.size());
        inv_factorial.resize(list.size());
        child.assign(list.size(), std::vector<int>(static_cast<std::size_t>(n), -1));
        for (std::size_t a = 0; a < list.size(); ++a) {
            order[a] = bdb::order(list[a]);
            inv_factorial[a] = 1.0 / factorial(list[a]);
            for (int i = 0; i < n; ++i) {
                auto up = add(list[a], unit_index(n, i));
                auto it = where.find(up);
                if (it != where.end()) child[a][static_cast<std::size_t>(i)] = it->second;
            }
            for (int i = 0; i < n && order[a] > 0; ++i) {
                if (list[a][static_cast<std::size_t>(i)] == 0) continue;
                parent[a] = where.at(subtract(list[a], unit_index(n, i)));
                generator[a] = i;
                break;
            }
        }
    }
};

/// Norms ||G A^alpha v|| for every alpha in the table, in table order.
std::vector<double> conjugated_power_norms(const FiniteSystem& sys, const IndexTable& table, const Eigen::MatrixXd& G,
                                           const Eigen::VectorXd& v) {
    std::vector<Eigen::VectorXd> powers(table.list.size());
    std::vector<double> out(table.list.size());
    for (std::size_t a = 0; a < table.list.size(); ++a) {
        if (table.parent[a] < 0)
            powers[a] = v;
        else
            powers[a] = sys.A[static_cast<std::size_t>(table.generator[a])] * powers[static_cast<std::size_t>(table.parent[a])];
        out[a] = (G * powers[a]).norm();
    }
    return out;
}

struct ShellSums {
    double value = 0.0;   // sum nu^|a|/a! ||A^a y||
    double derived = 0.0; // sum_i sum nu^|a|/a! ||A^{a+e_i} y||
};

ShellSums shell_sums(const IndexTable& table, const std::vector<double>& norms, double nu, int depth) {
    ShellSums s;
    for (std::size_t a = 0; a < table.list.size(); ++a) {
        if (table.order[a] > depth) break;
        const double w = std::pow(nu, table.order[a]) * table.inv_factorial[a];
        s.value += w * norms[a];
        for (int c : table.child[a]) s.derived += w * norms[static_cast<std::size_t>(c)];
    }
    return s;
}

double trajectory_norm_impl(const FiniteSystem& sys, const IndexTable& table, std::span<const Eigen::MatrixXd> G,
                            std::span<const Eigen::MatrixXd> Ginv, std::span<const double> times,
                            std::span<const Eigen::VectorXd> u, double nu, double mu, double mu0, int depth) {
    double best = 0.0;
    double integral = 0.0;
    double prev_integrand = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double nu_t = nu * std::exp(-mu * times[k]);
        const auto norms = conjugated_power_norms(sys, table, G[k], Ginv[k] * u[k]);
        const auto s = shell_sums(table, norms, nu_t, depth);
        const double integrand = nu_t * s.derived;
        if (k > 0) integral += 0.5 * (times[k] - times[k - 1]) * (integrand + prev_integrand);
        prev_integrand = integrand;
        best = std::max(best, s.value + (mu - mu0) * integral);
    }
    return best;
}

struct Degrees {
    std::vector<MultiIndex> list;
};

Degrees algebra_degrees(const RandomSystemOptions& o) {
    Degrees d;
    if (o.n == 1) {
        for (int k = 1; k <= o.m; ++k) d.list.push_back({k});
    } else {
        for (int total = 1; total <= o.degree; ++total)
            for (int i = total; i >= 0; --i) d.list.push_back({i, total - i});
    }
    return d;
}

FiniteSystem conjugate_system(const Eigen::MatrixXd& L0, const std::vector<Eigen::MatrixXd>& A0,
                              const std::vector<Eigen::MatrixXd>& Q0, const Eigen::MatrixXd& P,
                              const Eigen::VectorXd& xbar, double omega) {
    const Eigen::MatrixXd Pinv = P.inverse();
    FiniteSystem sys;
    sys.L = P * L0 * Pinv;
    for (const auto& a : A0) sys.A.push_back(P * a * Pinv);
    const int m = static_cast<int>(L0.rows());
    sys.Qbil.assign(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(m, m));
    for (int k = 0; k < m; ++k) {
        Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(m, m);
        for (int l = 0; l < m; ++l) mixed += P(k, l) * Q0[static_cast<std::size_t>(l)];
        sys.Qbil[static_cast<std::size_t>(k)] = Pinv.transpose() * mixed * Pinv;
    }
    sys.xbar = xbar;
    sys.omega = omega;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    sys.C_L = svd.singularValues()(0) / svd.singularValues()(m - 1);
    return sys;
}

}  // namespace

void FiniteSystem::validate() const {
    const int dim = m();
    if (dim < 1 || L.cols() != dim) throw Error(ErrorCode::kShapeMismatch, "L must be square and nonempty");
    if (A.empty()) throw Error(ErrorCode::kShapeMismatch, "at least one generator is required");
    for (const auto& a : A)
        if (a.rows() != dim || a.cols() != dim) throw Error(ErrorCode::kShapeMismatch, "generator shape differs from L");
    if (!Qbil.empty()) {
        if (static_cast<int>(Qbil.size()) != dim) throw Error(ErrorCode::kShapeMismatch, "bilinear tensor has wrong length");
        for (const auto& q : Qbil)
            if (q.rows() != dim || q.cols() != dim) throw Error(ErrorCode::kShapeMismatch, "bilinear slice shape");
    }
    if (xbar.size() != dim) throw Error(ErrorCode::kShapeMismatch, "equilibrium length differs from m");
    if (!L.allFinite() || !xbar.allFinite()) throw Error(ErrorCode::kNanDetected, "non-finite system data");
    if (!(C_L >= 1.0) || !std::isfinite(omega)) throw Error(ErrorCode::kInvalidArgument, "group bound needs C_L >= 1");
    const double res = commutation_residual();
    if (!(res < 1e-12)) throw Error(ErrorCode::kHypothesisViolated, "generators do not commute: residual " + std::to_string(res));
}

double FiniteSystem::commutation_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = i + 1; j < A.size(); ++j)
            worst = std::max(worst, (A[i] * A[j] - A[j] * A[i]).cwiseAbs().maxCoeff());
    return worst;
}

double FiniteSystem::derivation_residual() const {
    if (Qbil.empty()) return 0.0;
    const int dim = m();
    double worst = 0.0;
    for (const auto& a : A) {
        for (int k = 0; k < dim; ++k) {
            Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(dim, dim);
            for (int l = 0; l < dim; ++l) lhs += a(k, l) * Qbil[static_cast<std::size_t>(l)];
            const auto& q = Qbil[static_cast<std::size_t>(k)];
            worst = std::max(worst, (lhs - a.transpose() * q - q * a).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

Eigen::VectorXd FiniteSystem::bilinear(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m());
    for (std::size_t k = 0; k < Qbil.size(); ++k) out(static_cast<Eigen::Index>(k)) = x.dot(Qbil[k] * y);
    return out;
}

Eigen::VectorXd FiniteSystem::rhs(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd y = x - xbar;
    return -L * y + bilinear(y, y);
}

Eigen::MatrixXd FiniteSystem::group(double t) const { return (t * L).exp(); }

Eigen::VectorXd FiniteSystem::power_apply(std::span<const int> alpha, const Eigen::VectorXd& y) const {
    Eigen::VectorXd v = y;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k) v = A[i] * v;
    return v;
}

Eigen::MatrixXd FiniteSystem::stacked_generators() const {
    Eigen::MatrixXd S(m() * n(), m());
    for (int i = 0; i < n(); ++i) S.middleRows(i * m(), m()) = A[static_cast<std::size_t>(i)];
    return S;
}

std::vector<Eigen::MatrixXd> random_commuting_family(std::uint64_t seed, int m, int n) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd base = gaussian_matrix(rng, m, m) / std::sqrt(static_cast<double>(m));
    const Eigen::MatrixXd base2 = base * base;
    const Eigen::MatrixXd base3 = base2 * base;
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<Eigen::MatrixXd> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(coef(rng) * Eigen::MatrixXd::Identity(m, m) + coef(rng) * base + coef(rng) * base2 +
                      coef(rng) * base3);
    }
    return out;
}

Eigen::MatrixXd commutator_tower(const Eigen::MatrixXd& L, std::span<const Eigen::MatrixXd> A,
                                 std::span<const int> alpha) {
    Eigen::MatrixXd cur = L;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k) cur = cur * A[i] - A[i] * cur;
    return cur;
}

Eigen::MatrixXd commutator_tower(const FiniteSystem& sys, std::span<const int> alpha) {
    return commutator_tower(sys.L, sys.A, alpha);
}

Eigen::MatrixXd commutator_tower_reversed(const Eigen::MatrixXd& L, std::span<const Eigen::MatrixXd> A,
                                          std::span<const int> alpha) {
    Eigen::MatrixXd cur = L;
    for (std::size_t i = alpha.size(); i-- > 0;)
        for (int k = 0; k < alpha[i]; ++k) cur = cur * A[i] - A[i] * cur;
    return cur;
}

double expansion_check(const Eigen::MatrixXd& L, std::span<const Eigen::MatrixXd> A, std::span<const int> alpha) {
    const auto m = L.rows();
    auto power = [&](std::span<const int> beta) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m, m);
        for (std::size_t i = 0; i < beta.size(); ++i)
            for (int k = 0; k < beta[i]; ++k) out = out * A[i];
        return out;
    };
    const Eigen::MatrixXd Aalpha = power(alpha);
    const Eigen::MatrixXd direct = L * Aalpha - Aalpha * L;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
    for (const auto& gamma : multi_indices_in_box(alpha)) {
        const int g = order(gamma);
        if (g == 0) continue;
        const double sign = (g % 2 == 1) ? 1.0 : -1.0;
        sum += binomial(alpha, gamma) * sign * commutator_tower(L, A, gamma) * power(subtract(alpha, gamma));
    }
    return (direct - sum).cwiseAbs().maxCoeff();
}

double expansion_check(const FiniteSystem& sys, std::span<const int> alpha) {
    return expansion_check(sys.L, sys.A, alpha);
}

EnvelopeFit fit_envelope(std::span<const double> log_peaks, double inflate) {
    const auto finite = [](double v) { return std::isfinite(v); };
    if (log_peaks.empty() || std::none_of(log_peaks.begin(), log_peaks.end(), finite)) return {0.0, 0.0};
    const double e0 = log_peaks[0];
    const double e1 = log_peaks.size() > 1 ? log_peaks[1] : -kInf;
    double h1 = finite(e1) ? e1 : -kInf;
    if (finite(e0))
        for (std::size_t j = 2; j < log_peaks.size(); ++j)
            if (finite(log_peaks[j])) h1 = std::max(h1, e0 + (log_peaks[j] - e0) / static_cast<double>(j));
    if (!finite(h1)) {
        // only the order-zero term is present: every commutator vanishes
        if (finite(e0)) return {std::exp(e0) * inflate, 0.0};
        throw Error(ErrorCode::kHypothesisViolated, "envelope has no finite value at orders 0 and 1");
    }
    double slope_lo = -kInf;
    for (std::size_t j = 2; j < log_peaks.size(); ++j)
        if (finite(log_peaks[j]))
            slope_lo = std::max(slope_lo, (log_peaks[j] - h1) / static_cast<double>(j - 1));
    const double slope_hi = finite(e0) ? h1 - e0 : kInf;
    double slope = finite(slope_lo) ? std::min(slope_lo, slope_hi) : slope_hi;
    if (!finite(slope)) slope = 0.0;
    const double intercept = h1 - slope;
    return {std::exp(intercept) * inflate, std::exp(slope)};
}

std::vector<double> tower_peaks(const FiniteSystem& sys, int depth, bool include_order_zero) {
    const Eigen::MatrixXd Splus = pseudo_inverse(sys.stacked_generators());
    const IndexTable table(sys.n(), depth);
    std::vector<Eigen::MatrixXd> tower(table.list.size());
    std::vector<double> peaks(static_cast<std::size_t>(depth) + 1, 0.0);
    for (std::size_t a = 0; a < table.list.size(); ++a) {
        if (table.parent[a] < 0) {
            tower[a] = sys.L;
        } else {
            const auto& prev = tower[static_cast<std::size_t>(table.parent[a])];
            const auto& gen = sys.A[static_cast<std::size_t>(table.generator[a])];
            tower[a] = prev * gen - gen * prev;
        }
        const double c = sigma_max(tower[a] * Splus) * table.inv_factorial[a];
        auto& slot = peaks[static_cast<std::size_t>(table.order[a])];
        slot = std::max(slot, c);
    }
    for (double& p : peaks) p = p > 0.0 ? std::log(p) : -kInf;
    if (!include_order_zero) peaks[0] = -kInf;
    return peaks;
}

double tower_ratio_on_samples(const FiniteSystem& sys, double C, double r, int depth, int samples,
                              std::uint64_t seed, bool include_order_zero) {
    std::mt19937_64 rng(seed);
    const IndexTable table(sys.n(), depth);
    std::vector<Eigen::MatrixXd> tower(table.list.size());
    for (std::size_t a = 0; a < table.list.size(); ++a) {
        if (table.parent[a] < 0) {
            tower[a] = sys.L;
        } else {
            const auto& prev = tower[static_cast<std::size_t>(table.parent[a])];
            const auto& gen = sys.A[static_cast<std::size_t>(table.generator[a])];
            tower[a] = prev * gen - gen * prev;
        }
    }
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Eigen::VectorXd y = gaussian_vector(rng, sys.m());
        double base = 0.0;
        for (const auto& a : sys.A) base += (a * y).norm();
        for (std::size_t a = include_order_zero ? 0 : 1; a < table.list.size(); ++a) {
            const double lhs = (tower[a] * y).norm();
            if (lhs == 0.0) continue;
            const double rhs = C * std::pow(r, table.order[a]) * base / table.inv_factorial[a];
            worst = std::max(worst, rhs > 0.0 ? lhs / rhs : kInf);
        }
    }
    return worst;
}

double bilinear_constant(const FiniteSystem& sys) {
    double sq = 0.0;
    for (const auto& q : sys.Qbil) {
        const double s = sigma_max(q);
        sq += s * s;
    }
    if (sq == 0.0) return 0.0;
    return std::sqrt(sq) * sigma_max(pseudo_inverse(sys.stacked_generators()));
}

double mu0_of(int n, double C, double r, double nu0) {
    return static_cast<double>(n) * C * r / std::pow(1.0 - nu0 * r, n);
}

double nu0_bound(int n, double C, double r, double omega) {
    if (r == 0.0) return kInf;
    const double ratio = static_cast<double>(n) * C * r / omega;
    if (ratio >= 1.0) return 0.0;
    return (1.0 - std::pow(ratio, 1.0 / static_cast<double>(n))) / r;
}

ContractionConstants constants_estimate(const FiniteSystem& sys, const ConstantsOptions& options) {
    sys.validate();
    if (!(sys.omega > 0.0)) throw Error(ErrorCode::kInvalidArgument, "omega must be positive");
    if (!(options.gamma > 0.0 && options.gamma < 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
    ContractionConstants c;
    c.n = sys.n();
    c.C_L = sys.C_L;
    c.omega = sys.omega;
    c.gamma = options.gamma;
    const auto fit = fit_envelope(tower_peaks(sys, options.depth, options.include_order_zero), options.inflate);
    c.C = fit.C;
    c.r = fit.r;
    const double side = sys.omega / (static_cast<double>(c.n) * c.C_L * c.C_L);
    if (!(c.C * c.r < side))
        throw Error(ErrorCode::kHypothesisViolated,
                    "commutator bound C r = " + std::to_string(c.C * c.r) + " is not below omega/(n C_L^2) = " +
                        std::to_string(side) + " (ratio " + std::to_string(c.C * c.r / side) + ")");
    c.C_group = c.C * c.C_L * c.C_L;
    c.nu0_max = nu0_bound(c.n, c.C_group, c.r, c.omega);
    if (options.nu0) {
        c.nu0 = *options.nu0;
    } else {
        c.nu0 = std::isfinite(c.nu0_max) ? options.nu0_fraction * c.nu0_max : 1.0;
    }
    if (!(c.nu0 > 0.0 && c.nu0 < c.nu0_max))
        throw Error(ErrorCode::kHypothesisViolated, "nu0 = " + std::to_string(c.nu0) + " is not below the admissible bound " +
                                                        std::to_string(c.nu0_max));
    c.mu0 = mu0_of(c.n, c.C_group, c.r, c.nu0);
    c.C_Q = bilinear_constant(sys);
    const double cube = c.C_L * c.C_L * c.C_L;
    c.M1 = c.M1p = 2.0 * c.C_Q * cube;
    if (c.M1p == 0.0) {
        c.R_prime = kInf;
        c.C0 = c.C1 = 1.0;
        c.epsilon = kInf;
        return c;
    }
    const double gap = c.omega - c.mu0;
    c.R_prime = 0.5 * c.gamma * gap / c.M1p;
    c.C0 = 1.0 - c.R_prime * c.M1 / gap;
    c.C1 = 1.0 - 2.0 * c.R_prime * c.M1p / gap;
    c.epsilon = c.C0 * c.R_prime;
    return c;
}

InequalitySides lemma_R_check(const FiniteSystem& sys, double C, double r, double nu, std::span<const int> N,
                              const Eigen::VectorXd& y) {
    if (!(nu * r < 1.0)) throw Error(ErrorCode::kInvalidArgument, "remainder bound requires nu r < 1");
    InequalitySides out;
    const int n = sys.n();
    for (const auto& alpha : multi_indices_in_box(N)) {
        const double w = std::pow(nu, order(alpha)) / factorial(alpha);
        const Eigen::VectorXd Ay = sys.power_apply(alpha, y);
        out.lhs += w * (sys.L * Ay - sys.power_apply(alpha, sys.L * y)).norm();
        if (std::equal(alpha.begin(), alpha.end(), N.begin())) continue;
        for (const auto& a : sys.A) out.rhs += w * (a * Ay).norm();
    }
    out.rhs *= static_cast<double>(n) * C * nu * r / std::pow(1.0 - nu * r, n);
    return out;
}

InequalitySides h3a_check(const FiniteSystem& sys, double C_Q, const Eigen::VectorXd& y, std::span<const int> alpha) {
    InequalitySides out;
    out.lhs = sys.power_apply(alpha, sys.bilinear(y, y)).norm();
    const double M1 = 2.0 * C_Q;
    for (const auto& gamma : multi_indices_in_box(alpha)) {
        const Eigen::VectorXd Ag = sys.power_apply(gamma, y);
        double first = 0.0;
        for (const auto& a : sys.A) first += (a * Ag).norm();
        out.rhs += binomial(alpha, gamma) * sys.power_apply(subtract(alpha, gamma), y).norm() * M1 * first;
    }
    return out;
}

InequalitySides lipschitz_check(const FiniteSystem& sys, double C_Q, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y, std::span<const int> alpha, int segment_points) {
    InequalitySides out;
    const Eigen::VectorXd diff = y - x;
    out.lhs = sys.power_apply(alpha, sys.bilinear(y, y) - sys.bilinear(x, x)).norm();
    const double M1p = 2.0 * C_Q;
    const auto gammas = multi_indices_in_box(alpha);
    auto first_order = [&](const Eigen::VectorXd& v, std::span<const int> gamma) {
        const Eigen::VectorXd Ag = sys.power_apply(gamma, v);
        double s = 0.0;
        for (const auto& a : sys.A) s += (a * Ag).norm();
        return s;
    };
    double sup_first = 0.0;
    double sup_second = 0.0;
    const int pts = std::max(segment_points, 2);
    for (int s = 0; s < pts; ++s) {
        const double theta = static_cast<double>(s) / static_cast<double>(pts - 1);
        const Eigen::VectorXd z = theta * x + (1.0 - theta) * y;
        double first = 0.0;
        double second = 0.0;
        for (const auto& gamma : gammas) {
            const double b = binomial(alpha, gamma);
            const auto rest = subtract(alpha, gamma);
            first += b * sys.power_apply(rest, z).norm() * M1p * first_order(diff, gamma);
            second += b * sys.power_apply(rest, diff).norm() * M1p * first_order(z, gamma);
        }
        sup_first = std::max(sup_first, first);
        sup_second = std::max(sup_second, second);
    }
    out.rhs = sup_first + sup_second;
    return out;
}

double analytic_norm(const FiniteSystem& sys, const Eigen::VectorXd& y, double nu, double t, int depth) {
    const IndexTable table(sys.n(), depth);
    const Eigen::MatrixXd G = sys.group(t);
    const Eigen::MatrixXd Ginv = sys.group(-t);
    std::vector<Eigen::VectorXd> powers(table.list.size());
    double total = 0.0;
    for (std::size_t a = 0; a < table.list.size(); ++a) {
        if (table.parent[a] < 0)
            powers[a] = Ginv * y;
        else
            powers[a] = sys.A[static_cast<std::size_t>(table.generator[a])] * powers[static_cast<std::size_t>(table.parent[a])];
        total += std::pow(nu, table.order[a]) * table.inv_factorial[a] * (G * powers[a]).norm();
    }
    return total;
}

double trajectory_norm(const FiniteSystem& sys, std::span<const double> times, std::span<const Eigen::VectorXd> u,
                       double nu, double mu, double mu0, int depth) {
    if (times.size() != u.size()) throw Error(ErrorCode::kShapeMismatch, "times and samples differ in length");
    const IndexTable table(sys.n(), depth + 1);
    std::vector<Eigen::MatrixXd> G, Ginv;
    for (double t : times) {
        G.push_back(sys.group(t));
        Ginv.push_back(sys.group(-t));
    }
    return trajectory_norm_impl(sys, table, G, Ginv, times, u, nu, mu, mu0, depth);
}

double working_radius(const FiniteSystem& sys, const ContractionConstants& consts) {
    double spread = 0.0;
    for (const auto& a : sys.A) spread = std::max(spread, sigma_max(a));
    return spread > 0.0 ? std::min(consts.nu0, 1.0 / spread) : consts.nu0;
}

Eigen::VectorXd admissible_initial(const FiniteSystem& sys, double nu, double target, std::uint64_t seed, int depth) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd y = gaussian_vector(rng, sys.m());
    const double norm = analytic_norm(sys, y, nu, 0.0, depth);
    return y * (target / norm);
}

PicardReport picard_solve_abstract(const FiniteSystem& sys, const Eigen::VectorXd& u0,
                                   const ContractionConstants& consts, double nu, const PicardOptions& options) {
    sys.validate();
    if (u0.size() != sys.m()) throw Error(ErrorCode::kShapeMismatch, "initial datum length differs from m");
    if (!(nu > 0.0 && nu <= consts.nu0 * (1.0 + 1e-12)))
        throw Error(ErrorCode::kInvalidArgument, "nu must lie in (0, nu0]");
    const double omega = sys.omega;
    const double T = options.T > 0.0 ? options.T : 5.0 / omega;
    const double dt_target = options.dt > 0.0 ? options.dt : std::min(0.01 / omega, T / 200.0);
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt_target - 1e-9));
    const double dt = T / static_cast<double>(steps);

    PicardReport rep;
    rep.initial_norm = analytic_norm(sys, u0, nu, 0.0, options.depth);
    if (rep.initial_norm > consts.epsilon * nu * (1.0 + 1e-12))
        throw Error(ErrorCode::kInvalidArgument, "initial datum is not admissible: ||u0|| = " +
                                                     std::to_string(rep.initial_norm) + " > epsilon nu = " +
                                                     std::to_string(consts.epsilon * nu));

    rep.times.resize(steps + 1);
    std::vector<Eigen::MatrixXd> G(steps + 1), Ginv(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        rep.times[k] = dt * static_cast<double>(k);
        G[k] = sys.group(rep.times[k]);
        Ginv[k] = sys.group(-rep.times[k]);
    }
    const IndexTable table(sys.n(), options.depth + 1);
    const double mu0 = mu0_of(consts.n, consts.C_group, consts.r, nu);

    rep.u.assign(steps + 1, u0);
    std::vector<Eigen::VectorXd> next(steps + 1), diff(steps + 1), q(steps + 1);
    double prev = -1.0;
    const double floor = 1e-11 * rep.initial_norm;
    for (int it = 1; it <= options.max_iter; ++it) {
        for (std::size_t k = 0; k <= steps; ++k) {
            const Eigen::VectorXd v = Ginv[k] * rep.u[k];
            q[k] = G[k] * sys.bilinear(v, v);
        }
        next[0] = u0;
        for (std::size_t k = 1; k <= steps; ++k) next[k] = next[k - 1] + 0.5 * dt * (q[k - 1] + q[k]);
        for (std::size_t k = 0; k <= steps; ++k) diff[k] = next[k] - rep.u[k];
        const double dist = trajectory_norm_impl(sys, table, G, Ginv, rep.times, diff, nu, omega, mu0, options.depth);
        if (prev > floor && dist > 0.0) rep.contraction_factor = std::max(rep.contraction_factor, dist / prev);
        rep.u.swap(next);
        prev = dist;
        rep.iterations = it;
        if (dist <= options.tol * std::max(rep.initial_norm, std::numeric_limits<double>::min())) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged)
        throw Error(ErrorCode::kContractionFailure, "Picard iteration did not converge; measured factor " +
                                                        std::to_string(rep.contraction_factor));

    rep.trajectory_norm = trajectory_norm_impl(sys, table, G, Ginv, rep.times, rep.u, nu, omega, mu0, options.depth);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.m(), sys.m());
    for (std::size_t k = 0; k <= steps; ++k) {
        const double shrink = std::exp(-omega * rep.times[k]);
        const double nu_t = nu * shrink;
        const auto norms_u = conjugated_power_norms(sys, table, G[k], Ginv[k] * rep.u[k]);
        const double transformed = shell_sums(table, norms_u, nu_t, options.depth).value;
        const auto norms_x = conjugated_power_norms(sys, table, I, Ginv[k] * rep.u[k]);
        const double physical = shell_sums(table, norms_x, nu_t, options.depth).value;
        if (std::isfinite(consts.epsilon)) {
            rep.transformed_ratio = std::max(rep.transformed_ratio, transformed / (2.0 * consts.epsilon * nu));
            rep.decay_ratio =
                std::max(rep.decay_ratio, physical / (2.0 * consts.C_L * consts.epsilon * nu * shrink));
        }
    }
    return rep;
}

FiniteSystem random_system(std::uint64_t seed, const RandomSystemOptions& o) {
    if (o.n != 1 && o.n != 2) throw Error(ErrorCode::kInvalidArgument, "random systems support n = 1 or 2");
    if (o.n == 1 && (o.m < 2 || o.m > 8)) throw Error(ErrorCode::kInvalidArgument, "n = 1 needs 2 <= m <= 8");
    if (o.n == 2 && (o.degree < 1 || o.degree > 2)) throw Error(ErrorCode::kInvalidArgument, "n = 2 needs degree 1 or 2");
    if (!(o.omega > 0.0)) throw Error(ErrorCode::kInvalidArgument, "omega must be positive");
    std::mt19937_64 rng(seed);
    const auto deg = algebra_degrees(o).list;
    const int m = static_cast<int>(deg.size());

    std::vector<Eigen::MatrixXd> A0;
    for (int i = 0; i < o.n; ++i) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < m; ++k) a(k, k) = deg[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        A0.push_back(a);
    }
    std::uniform_real_distribution<double> weight(0.5, 1.0);
    std::vector<Eigen::MatrixXd> Q0(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(m, m));
    for (int l = 0; l < m; ++l) {
        const double b = o.with_quadratic ? o.quadratic_scale * weight(rng) : 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (add(deg[static_cast<std::size_t>(i)], deg[static_cast<std::size_t>(j)]) == deg[static_cast<std::size_t>(l)])
                    Q0[static_cast<std::size_t>(l)](i, j) = b;
    }
    const Eigen::MatrixXd G = gaussian_matrix(rng, m, m);
    Eigen::MatrixXd K = 0.5 * (G - G.transpose());
    K /= sigma_max(K);
    const Eigen::MatrixXd P =
        Eigen::MatrixXd::Identity(m, m) + o.conjugation * gaussian_matrix(rng, m, m) / std::sqrt(static_cast<double>(m));
    const Eigen::VectorXd xbar = gaussian_vector(rng, m);

    double kappa = o.omega;
    for (int attempt = 0; attempt < 80; ++attempt, kappa *= 0.5) {
        const Eigen::MatrixXd L0 = o.omega * Eigen::MatrixXd::Identity(m, m) + kappa * K;
        FiniteSystem sys = conjugate_system(L0, A0, Q0, P, xbar, o.omega);
        const auto fit = fit_envelope(tower_peaks(sys, 8), 1.05);
        // keep a factor 4 below the side condition so nu0 and omega - mu0 have room
        if (fit.C * fit.r < 0.25 * o.omega / (o.n * sys.C_L * sys.C_L)) return sys;
    }
    throw Error(ErrorCode::kHypothesisViolated, "could not reach the commutator side condition");
}

KineticConstants kinetic_constants(const LinearizedOperator& op, int depth, double nu0_fraction, double margin) {
    const int d = op.grid().d;
    KineticConstants k;
    k.log_peaks.assign(static_cast<std::size_t>(depth) + 1, -kInf);
    for (int ord = 0; ord <= depth; ++ord) {
        double best = 0.0;
        for (const auto& beta : multi_indices_of_order(d, ord))
            best = std::max(best, op.tower_bound(beta) / factorial(beta));
        k.log_peaks[static_cast<std::size_t>(ord)] = best > 0.0 ? std::log(best) : -kInf;
    }
    const auto fit = fit_envelope(k.log_peaks, 1.05);
    k.C = fit.C;
    k.r = fit.r;
    k.delta = k.C * k.r;
    k.nu0 = k.r > 0.0 ? nu0_fraction / k.r : nu0_fraction;
    const double base = 2.0 * d * k.C * k.r / std::pow(1.0 - k.r * k.nu0, 2 * d);
    k.omega0 = margin * base;
    k.tau0 = (k.omega0 + 2.0 * k.delta) > 0.0 ? 1.0 / (k.omega0 + 2.0 * k.delta) : kInf;
    return k;
}

std::vector<CheckRecord> verification_battery(std::uint64_t seed, const BatteryOptions& options) {
    std::vector<CheckRecord> out;
    auto record = [&](std::string name, double lhs, double rhs) {
        out.push_back({std::move(name), lhs, rhs, seed, lhs <= rhs});
    };
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

    for (int n = 1; n <= 2; ++n) {
        const auto family = random_commuting_family(seed * 7 + static_cast<std::uint64_t>(n), 6, n);
        std::mt19937_64 lrng(seed * 13 + static_cast<std::uint64_t>(n));
        const Eigen::MatrixXd L = gaussian_matrix(lrng, 6, 6);
        double worst = 0.0;
        for (const auto& alpha : multi_indices_up_to(n, options.max_order))
            worst = std::max(worst, expansion_check(L, family, alpha));
        record("expansion.n" + std::to_string(n), worst, 1e-10);
    }

    RandomSystemOptions so;
    so.n = 1 + static_cast<int>(seed % 2);
    so.m = 3 + static_cast<int>(seed % 5);
    so.degree = 2;
    const FiniteSystem sys = random_system(seed, so);
    record("system.commutation", sys.commutation_residual(), 1e-12);
    record("system.derivation", sys.derivation_residual(), 1e-10);

    ConstantsOptions co;
    co.gamma = options.gamma;
    const auto c = constants_estimate(sys, co);
    record("h2b.side_condition", c.C * c.r, c.omega / (c.n * c.C_L * c.C_L));
    record("h2b.holdout", tower_ratio_on_samples(sys, c.C, c.r, 8, 200, seed + 1), 1.0);

    InequalitySides worst_R{0.0, 1.0};
    const double nu_R = c.r > 0.0 ? 0.3 / c.r : 0.3;
    const MultiIndex N = sys.n() == 1 ? MultiIndex{4} : MultiIndex{2, 2};
    for (int t = 0; t < options.trials; ++t) {
        const auto sides = lemma_R_check(sys, c.C, c.r, nu_R, N, gaussian_vector(rng, sys.m()));
        if (sides.lhs * worst_R.rhs >= worst_R.lhs * sides.rhs) worst_R = sides;
    }
    record("lemma_R", worst_R.lhs, worst_R.rhs);

    InequalitySides worst_a{0.0, 1.0}, worst_b{0.0, 1.0};
    std::uniform_int_distribution<int> pick(0, options.max_order);
    for (int t = 0; t < options.trials; ++t) {
        MultiIndex alpha(static_cast<std::size_t>(sys.n()), 0);
        alpha[0] = pick(rng);
        if (sys.n() == 2) alpha[1] = std::max(0, pick(rng) - alpha[0]);
        const auto a = h3a_check(sys, c.C_Q, gaussian_vector(rng, sys.m()), alpha);
        if (a.lhs * worst_a.rhs >= worst_a.lhs * a.rhs) worst_a = a;
        const auto b = lipschitz_check(sys, c.C_Q, gaussian_vector(rng, sys.m()), gaussian_vector(rng, sys.m()), alpha);
        if (b.lhs * worst_b.rhs >= worst_b.lhs * b.rhs) worst_b = b;
    }
    record("h3a.bilinear", worst_a.lhs, worst_a.rhs);
    record("h3b.lipschitz", worst_b.lhs, worst_b.rhs);

    const double nu = working_radius(sys, c);
    const Eigen::VectorXd u0 = admissible_initial(sys, nu, 0.9 * c.epsilon * nu, seed + 2);
    const Eigen::VectorXd w0 = admissible_initial(sys, nu, 0.5 * c.epsilon * nu, seed + 3);
    const auto ru = picard_solve_abstract(sys, u0, c, nu);
    const auto rw = picard_solve_abstract(sys, w0, c, nu);
    record("picard.contraction", ru.contraction_factor, 1.0 - 0.5 * c.C1);
    record("picard.transformed_bound", ru.transformed_ratio, 1.0);
    record("picard.decay_bound", ru.decay_ratio, 1.0 + 1e-6);

    std::vector<Eigen::VectorXd> gap(ru.u.size());
    for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = ru.u[k] - rw.u[k];
    const double mu0 = mu0_of(c.n, c.C_group, c.r, nu);
    const double initial_gap = analytic_norm(sys, u0 - w0, nu, 0.0);
    record("prop.continuous_dependence", c.C1 * trajectory_norm(sys, ru.times, gap, nu, c.omega, mu0), initial_gap);

    double pointwise = 0.0;
    for (std::size_t k = 0; k < gap.size(); k += 10)
        pointwise = std::max(pointwise, analytic_norm(sys, gap[k], nu * std::exp(-c.omega * ru.times[k]), ru.times[k]));
    record("remark.gamma_lipschitz", pointwise, initial_gap / (1.0 - c.gamma));
    return out;
}

}  // namespace bdb
