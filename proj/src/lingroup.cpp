#include "bdb/lingroup.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "bdb/error.hpp"
#include "bdb/multiindex.hpp"
#include "bdb/parallel.hpp"

namespace bdb {

namespace {

Eigen::MatrixXd momentum_points(const PhaseGrid& g) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(g.p_size()), g.d);
    std::vector<double> p(static_cast<std::size_t>(g.d));
    for (std::size_t ip = 0; ip < g.p_size(); ++ip) {
        g.p_node(ip, p);
        for (int i = 0; i < g.d; ++i) pts(static_cast<Eigen::Index>(ip), i) = p[static_cast<std::size_t>(i)];
    }
    return pts;
}

}  // namespace

struct LinearizedOperator::ModeData {
    bool identity = false;
    // e^{tM} = backward diag(e^{i theta t}) forward
    Eigen::MatrixXd forward;
    Eigen::MatrixXd backward;
    Eigen::VectorXd theta;
};

LinearizedOperator::LinearizedOperator(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp,
                                       double U)
    : grid_(grid), ep_(ep), bp_(bp), U_(U), xnorm_(grid, ep, bp, U) {
    if (!(U_ >= 0.0) || !std::isfinite(U_)) throw Error(ErrorCode::kInvalidArgument, "U must be finite and >= 0");
    const auto P = static_cast<Eigen::Index>(grid_.p_size());
    const Eigen::MatrixXd pts = momentum_points(grid_);
    grad_eps_.resize(P, grid_.d);
    grad_f_.resize(P, grid_.d);
    std::vector<double> p(static_cast<std::size_t>(grid_.d));
    std::vector<double> ge(static_cast<std::size_t>(grid_.d));
    std::vector<double> gf(static_cast<std::size_t>(grid_.d));
    for (Eigen::Index k = 0; k < P; ++k) {
        for (int i = 0; i < grid_.d; ++i) p[static_cast<std::size_t>(i)] = pts(k, i);
        band_gradient(p, bp_, ge);
        equilibrium_gradient(p, ep_, bp_, gf);
        for (int i = 0; i < grid_.d; ++i) {
            grad_eps_(k, i) = ge[static_cast<std::size_t>(i)];
            grad_f_(k, i) = gf[static_cast<std::size_t>(i)];
        }
    }
    const double q = grid_.p_weight();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(P, P, xnorm_.coupling() * q * q);
    for (Eigen::Index k = 0; k < P; ++k) gram(k, k) += q * xnorm_.inverse_weight()[static_cast<std::size_t>(k)];
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::kDegenerateWeight, "momentum Gram matrix is not SPD");
    chol_ = llt.matrixL();
    modes_.resize(grid_.x_size());
    once_ = std::make_unique<std::once_flag[]>(grid_.x_size());
}

LinearizedOperator::~LinearizedOperator() = default;

std::vector<double> LinearizedOperator::wavevector(std::size_t mode) const {
    std::vector<int> k(static_cast<std::size_t>(grid_.d));
    grid_.x_wavenumbers(mode, k);
    std::vector<double> xi(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        xi[i] = k[i] == -grid_.nx / 2 ? 0.0 : 2.0 * std::numbers::pi * k[i] / grid_.lx;
    return xi;
}

Eigen::MatrixXd LinearizedOperator::mode_matrix_real(std::span<const double> xi) const {
    const auto P = static_cast<Eigen::Index>(grid_.p_size());
    Eigen::VectorXd a = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(P);
    for (int i = 0; i < grid_.d; ++i) {
        a += xi[static_cast<std::size_t>(i)] * grad_eps_.col(i);
        b += xi[static_cast<std::size_t>(i)] * grad_f_.col(i);
    }
    Eigen::MatrixXd A = (U_ * grid_.p_weight()) * b * Eigen::RowVectorXd::Ones(P);
    A.diagonal() += a;
    return A;
}

Eigen::MatrixXcd LinearizedOperator::mode_matrix(std::size_t mode) const {
    const auto xi = wavevector(mode);
    return cplx(0.0, 1.0) * mode_matrix_real(xi).cast<cplx>();
}

const LinearizedOperator::ModeData& LinearizedOperator::mode_data(std::size_t mode) const {
    std::call_once(once_[mode], [&] {
        auto data = std::make_unique<ModeData>();
        const auto xi = wavevector(mode);
        if (std::all_of(xi.begin(), xi.end(), [](double v) { return v == 0.0; })) {
            data->identity = true;
        } else {
            // S = R A R^{-1} with R = chol^T is symmetric because the Gram matrix symmetrizes A.
            const Eigen::MatrixXd A = mode_matrix_real(xi);
            const auto upper = chol_.transpose().triangularView<Eigen::Upper>();
            const Eigen::MatrixXd RA = chol_.transpose() * A;
            Eigen::MatrixXd S = upper.transpose().solve(RA.transpose()).transpose();
            S = 0.5 * (S + S.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
            data->theta = eig.eigenvalues();
            data->forward = eig.eigenvectors().transpose() * chol_.transpose();
            data->backward = upper.solve(eig.eigenvectors());
        }
        modes_[mode] = std::move(data);
    });
    return *modes_[mode];
}

void LinearizedOperator::prepare() const {
    parallel_for(grid_.x_size(), [&](std::size_t m) { (void)mode_data(m); });
}

SpectralField LinearizedOperator::apply(const SpectralField& f) const {
    check_same_grid(f.grid, grid_);
    SpectralField in = f;
    to_momentum_nodes(in);
    SpectralField out{grid_, MomentumRep::kNodal, std::vector<cplx>(grid_.size(), 0.0)};
    const auto P = static_cast<Eigen::Index>(grid_.p_size());
    parallel_for(grid_.x_size(), [&](std::size_t m) {
        const auto xi = wavevector(m);
        Eigen::Map<const Eigen::VectorXcd> x(in.coeffs.data() + m * grid_.p_size(), P);
        Eigen::Map<Eigen::VectorXcd> y(out.coeffs.data() + m * grid_.p_size(), P);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(P);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(P);
        for (int i = 0; i < grid_.d; ++i) {
            a += xi[static_cast<std::size_t>(i)] * grad_eps_.col(i);
            b += xi[static_cast<std::size_t>(i)] * grad_f_.col(i);
        }
        const cplx rho = x.sum() * grid_.p_weight();
        y = cplx(0.0, 1.0) * (a.cast<cplx>().cwiseProduct(x) + (U_ * rho) * b.cast<cplx>());
    });
    return out;
}

PhaseGridFunction LinearizedOperator::apply(const PhaseGridFunction& f) const {
    check_same_grid(f.grid(), grid_);
    // real-space evaluation with spectral x-derivatives
    PhaseGridFunction out(grid_);
    const auto rho = density(f);
    std::vector<int> zero(static_cast<std::size_t>(grid_.d), 0);
    for (int j = 0; j < grid_.d; ++j) {
        const auto e = unit_index(grid_.d, j);
        const auto dxf = spectral_derivative(f, e, zero);
        const auto rho_hat = spatial_to_spectral(grid_, rho.values);
        // d_{x_j} rho from its spectrum
        SpectralField rs{grid_, MomentumRep::kNodal, std::vector<cplx>(grid_.size(), 0.0)};
        for (std::size_t m = 0; m < grid_.x_size(); ++m) rs.at(m, 0) = rho_hat[m];
        const auto drho = from_spectral(spectral_derivative(rs, e, zero));
        for (std::size_t ix = 0; ix < grid_.x_size(); ++ix) {
            const double dr = drho.at(ix, 0);
            for (std::size_t ip = 0; ip < grid_.p_size(); ++ip) {
                const auto k = static_cast<Eigen::Index>(ip);
                out.at(ix, ip) += grad_eps_(k, j) * dxf.at(ix, ip) + U_ * dr * grad_f_(k, j);
            }
        }
    }
    return out;
}

void LinearizedOperator::group_action(double t, SpectralField& g) const {
    check_same_grid(g.grid, grid_);
    to_momentum_nodes(g);
    if (t == 0.0) return;
    const auto P = static_cast<Eigen::Index>(grid_.p_size());
    parallel_for(grid_.x_size(), [&](std::size_t m) {
        const ModeData& md = mode_data(m);
        if (md.identity) return;
        Eigen::Map<Eigen::VectorXcd> x(g.coeffs.data() + m * grid_.p_size(), P);
        Eigen::VectorXcd z = md.forward.cast<cplx>() * x;
        for (Eigen::Index k = 0; k < P; ++k) z(k) *= std::polar(1.0, md.theta(k) * t);
        x = md.backward.cast<cplx>() * z;
    });
}

PhaseGridFunction LinearizedOperator::group_action(double t, const PhaseGridFunction& g) const {
    check_same_grid(g.grid(), grid_);
    if (t == 0.0) return g;
    SpectralField s = to_spectral(g, Axes::kSpace);
    group_action(t, s);
    return from_spectral(s);
}

cplx LinearizedOperator::dispersion_function(cplx sigma, std::span<const double> xi) const {
    if (static_cast<int>(xi.size()) != grid_.d) throw Error(ErrorCode::kShapeMismatch, "wavevector length differs from d");
    const cplx I(0.0, 1.0);
    cplx acc = 0.0;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(grid_.p_size()); ++k) {
        double a = 0.0;
        double b = 0.0;
        for (int i = 0; i < grid_.d; ++i) {
            a += xi[static_cast<std::size_t>(i)] * grad_eps_(k, i);
            b += xi[static_cast<std::size_t>(i)] * grad_f_(k, i);
        }
        acc += I * b / (sigma + I * a);
    }
    return 1.0 + U_ * grid_.p_weight() * acc;
}

DispersionSample LinearizedOperator::dispersion(cplx sigma, std::span<const double> xi) const {
    return {sigma, std::vector<double>(xi.begin(), xi.end()), dispersion_function(sigma, xi)};
}

double LinearizedOperator::dispersion_reduced(double sigma, std::span<const double> xi) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(grid_.p_size()); ++k) {
        double a = 0.0;
        for (int i = 0; i < grid_.d; ++i) a += xi[static_cast<std::size_t>(i)] * grad_eps_(k, i);
        acc += a * a * xnorm_.weight()[static_cast<std::size_t>(k)] / (sigma * sigma + a * a);
    }
    return 1.0 + U_ * ep_.lambda1 * grid_.p_weight() * acc;
}

PhaseGridFunction LinearizedOperator::resolvent(double sigma, const PhaseGridFunction& h) const {
    check_same_grid(h.grid(), grid_);
    return from_spectral(resolvent(cplx(sigma, 0.0), to_spectral(h, Axes::kSpace)));
}

SpectralField LinearizedOperator::resolvent(cplx sigma, const SpectralField& h) const {
    check_same_grid(h.grid, grid_);
    if (sigma.real() == 0.0) throw Error(ErrorCode::kOnSpectrum, "resolvent needs Re sigma != 0");
    SpectralField s = h;
    to_momentum_nodes(s);
    const cplx I(0.0, 1.0);
    const std::size_t P = grid_.p_size();
    std::vector<char> on_spectrum(grid_.x_size(), 0);
    parallel_for(grid_.x_size(), [&](std::size_t m) {
        const auto xi = wavevector(m);
        cplx* col = s.coeffs.data() + m * P;
        std::vector<cplx> denom(P);
        std::vector<cplx> b(P);
        cplx num = 0.0;
        cplx disp = 0.0;
        for (std::size_t k = 0; k < P; ++k) {
            double a = 0.0;
            double bk = 0.0;
            for (int i = 0; i < grid_.d; ++i) {
                a += xi[static_cast<std::size_t>(i)] * grad_eps_(static_cast<Eigen::Index>(k), i);
                bk += xi[static_cast<std::size_t>(i)] * grad_f_(static_cast<Eigen::Index>(k), i);
            }
            denom[k] = sigma + I * a;
            b[k] = bk;
            num += col[k] / denom[k];
            disp += I * bk / denom[k];
        }
        const double q = grid_.p_weight();
        const cplx D = 1.0 + U_ * q * disp;
        if (std::abs(D) < 1e-12) {
            on_spectrum[m] = 1;
            return;
        }
        const cplx rho = q * num / D;
        for (std::size_t k = 0; k < P; ++k) col[k] = (col[k] - I * U_ * b[k] * rho) / denom[k];
    });
    if (std::any_of(on_spectrum.begin(), on_spectrum.end(), [](char c) { return c != 0; }))
        throw Error(ErrorCode::kOnSpectrum, "dispersion function vanishes at the requested sigma");
    return s;
}

PhaseGridFunction LinearizedOperator::commutator_tower(std::span<const int> beta, const PhaseGridFunction& f) const {
    check_same_grid(f.grid(), grid_);
    if (static_cast<int>(beta.size()) != grid_.d) throw Error(ErrorCode::kShapeMismatch, "multi-index length differs from d");
    PhaseGridFunction out(grid_);
    const auto rho = density(f);
    const auto rho_hat = spatial_to_spectral(grid_, rho.values);
    std::vector<int> zero(static_cast<std::size_t>(grid_.d), 0);
    std::vector<double> p(static_cast<std::size_t>(grid_.d));
    const double sign = order(beta) % 2 == 0 ? 1.0 : -1.0;
    for (int j = 0; j < grid_.d; ++j) {
        const auto e = unit_index(grid_.d, j);
        const auto be = add(beta, e);
        std::vector<double> deps(grid_.p_size());
        std::vector<double> dF(grid_.p_size());
        for (std::size_t ip = 0; ip < grid_.p_size(); ++ip) {
            grid_.p_node(ip, p);
            deps[ip] = band_energy_derivative(p, be, bp_);
            dF[ip] = equilibrium_derivative(p, be, ep_, bp_);
        }
        const auto dxf = spectral_derivative(f, e, zero);
        SpectralField rs{grid_, MomentumRep::kNodal, std::vector<cplx>(grid_.size(), 0.0)};
        for (std::size_t m = 0; m < grid_.x_size(); ++m) rs.at(m, 0) = rho_hat[m];
        const auto drho = from_spectral(spectral_derivative(rs, e, zero));
        for (std::size_t ix = 0; ix < grid_.x_size(); ++ix) {
            const double dr = drho.at(ix, 0);
            for (std::size_t ip = 0; ip < grid_.p_size(); ++ip)
                out.at(ix, ip) += sign * (deps[ip] * dxf.at(ix, ip) + U_ * dr * dF[ip]);
        }
    }
    return out;
}

double LinearizedOperator::tower_bound(std::span<const int> beta) const {
    if (static_cast<int>(beta.size()) != grid_.d) throw Error(ErrorCode::kShapeMismatch, "multi-index length differs from d");
    const auto P = static_cast<Eigen::Index>(grid_.p_size());
    const auto upper = chol_.transpose().triangularView<Eigen::Upper>();
    std::vector<double> p(static_cast<std::size_t>(grid_.d));
    double best = 0.0;
    for (int j = 0; j < grid_.d; ++j) {
        const auto be = add(beta, unit_index(grid_.d, j));
        Eigen::VectorXd deps(P);
        Eigen::VectorXd dF(P);
        for (Eigen::Index k = 0; k < P; ++k) {
            grid_.p_node(static_cast<std::size_t>(k), p);
            deps(k) = band_energy_derivative(p, be, bp_);
            dF(k) = equilibrium_derivative(p, be, ep_, bp_);
        }
        Eigen::MatrixXd B = (U_ * grid_.p_weight()) * dF * Eigen::RowVectorXd::Ones(P);
        B.diagonal() += deps;
        // operator norm in the Gram geometry: || R B R^{-1} ||_2
        const Eigen::MatrixXd RB = chol_.transpose() * B;
        const Eigen::MatrixXd T = upper.transpose().solve(RB.transpose()).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

cplx dispersion_function(cplx sigma, std::span<const double> xi, const EntropyParams& ep, const BandParams& bp,
                         double U, int np) {
    if (static_cast<int>(xi.size()) != bp.d) throw Error(ErrorCode::kShapeMismatch, "wavevector length differs from d");
    const MomentumQuadrature quad(bp, np);
    const cplx I(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(bp.d));
    std::vector<double> ge(static_cast<std::size_t>(bp.d));
    std::vector<double> gf(static_cast<std::size_t>(bp.d));
    const PhaseGrid g{bp.d, 8, np, 1.0};
    cplx acc = 0.0;
    for (std::size_t k = 0; k < quad.size(); ++k) {
        g.p_node(k, p);
        band_gradient(p, bp, ge);
        equilibrium_gradient(p, ep, bp, gf);
        double a = 0.0;
        double b = 0.0;
        for (std::size_t i = 0; i < xi.size(); ++i) {
            a += xi[i] * ge[i];
            b += xi[i] * gf[i];
        }
        acc += I * b / (sigma + I * a);
    }
    return 1.0 + U * quad.weight() * acc;
}

PenroseGrid PenroseGrid::defaults() {
    PenroseGrid g;
    auto logspace = [](double lo, double hi, int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            v[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
        return v;
    };
    g.gamma = logspace(1e-3, 10.0, 20);
    g.tau.resize(81);
    for (int i = 0; i < 81; ++i) g.tau[static_cast<std::size_t>(i)] = -20.0 + 40.0 * i / 80.0;
    g.eta = logspace(1e-2, 50.0, 30);
    return g;
}

namespace {

struct PenroseNodes {
    std::vector<double> slope;  // e_1 . grad eps
    std::vector<double> force;  // e_1 . grad F
    double weight;
};

PenroseNodes penrose_nodes(const EntropyParams& ep, const BandParams& bp, int np) {
    const PhaseGrid g{bp.d, 8, np, 1.0};
    PenroseNodes nodes;
    nodes.weight = g.p_weight();
    std::vector<double> p(static_cast<std::size_t>(bp.d));
    std::vector<double> ge(static_cast<std::size_t>(bp.d));
    std::vector<double> gf(static_cast<std::size_t>(bp.d));
    for (std::size_t k = 0; k < g.p_size(); ++k) {
        g.p_node(k, p);
        band_gradient(p, bp, ge);
        equilibrium_gradient(p, ep, bp, gf);
        nodes.slope.push_back(ge[0]);
        nodes.force.push_back(gf[0]);
    }
    return nodes;
}

double penrose_at(double gamma, double tau, double eta, double U, const PenroseNodes& nodes) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Penrose samples need gamma > 0");
    if (eta == 0.0) throw Error(ErrorCode::kInvalidArgument, "Penrose samples need eta != 0");
    const cplx I(0.0, 1.0);
    const double horizon = std::log(1e12) / gamma;
    const cplx sigma(gamma, tau);
    cplx acc = 0.0;
    for (std::size_t k = 0; k < nodes.slope.size(); ++k) {
        if (nodes.force[k] == 0.0) continue;
        const cplx rate = sigma + I * (eta * nodes.slope[k]);
        // int_0^S e^{-rate s} ds
        const cplx integral = (1.0 - std::exp(-rate * horizon)) / rate;
        acc += I * eta * nodes.force[k] * integral;
    }
    return std::abs(1.0 + U / (1.0 + eta * eta) * nodes.weight * acc);
}

}  // namespace

double penrose_value(double gamma, double tau, double eta, const EntropyParams& ep, const BandParams& bp, double U,
                     int np) {
    return penrose_at(gamma, tau, eta, U, penrose_nodes(ep, bp, np));
}

std::vector<PenroseSample> penrose_scan(const EntropyParams& ep, const BandParams& bp, double U,
                                        const PenroseGrid& grid, int np) {
    const PenroseNodes nodes = penrose_nodes(ep, bp, np);
    std::vector<PenroseSample> out(grid.size());
    const std::size_t per_gamma = grid.tau.size() * grid.eta.size();
    parallel_for(grid.gamma.size(), [&](std::size_t ig) {
        std::size_t idx = ig * per_gamma;
        for (double tau : grid.tau)
            for (double eta : grid.eta)
                out[idx++] = {grid.gamma[ig], tau, eta, penrose_at(grid.gamma[ig], tau, eta, U, nodes)};
    });
    return out;
}

double penrose_margin(const EntropyParams& ep, const BandParams& bp, double U, const PenroseGrid& grid, int np) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : penrose_scan(ep, bp, U, grid, np)) best = std::min(best, s.value);
    return best;
}

}  // namespace bdb
