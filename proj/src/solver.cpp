#include "bdb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <json.hpp>

#include "bdb/error.hpp"
#include "bdb/parallel.hpp"
#include "bdb/xnorm.hpp"

namespace bdb {

namespace {

constexpr double kBlowUpFactor = 1e6;
const cplx kI(0.0, 1.0);

void axpy(SpectralField& y, cplx a, const SpectralField& x) {
    for (std::size_t i = 0; i < y.coeffs.size(); ++i) y.coeffs[i] += a * x.coeffs[i];
}

SpectralField zeros_like(const SpectralField& f) {
    return SpectralField{f.grid, MomentumRep::kNodal, std::vector<cplx>(f.coeffs.size(), 0.0)};
}

SpectralField difference(const SpectralField& a, const SpectralField& b) {
    SpectralField out = a;
    axpy(out, -1.0, b);
    return out;
}

double relaxation_factor(double t, double tau) { return std::isinf(tau) ? 1.0 : std::exp(-t / tau); }

/// Wavevectors with zeroed Nyquist components, matching the linearized operator.
std::vector<double> wavevectors(const PhaseGrid& g) {
    std::vector<double> xi(g.x_size() * static_cast<std::size_t>(g.d));
    std::vector<int> k(static_cast<std::size_t>(g.d));
    for (std::size_t m = 0; m < g.x_size(); ++m) {
        g.x_wavenumbers(m, k);
        for (int i = 0; i < g.d; ++i) {
            const int ki = k[static_cast<std::size_t>(i)];
            xi[m * g.d + i] = ki == -g.nx / 2 ? 0.0 : 2.0 * std::numbers::pi * ki / g.lx;
        }
    }
    return xi;
}

/// The field term -U sum_j d_{x_j} rho_f d_{p_j} f with dealiased products.
class FieldTerm {
public:
    FieldTerm(const PhaseGrid& grid, double U) : grid_(grid), U_(U), xi_(wavevectors(grid)) {}

    SpectralField operator()(const SpectralField& f, double scale) const {
        SpectralField out = zeros_like(f);
        if (U_ == 0.0 || scale == 0.0) return out;
        const std::vector<cplx> rho = density_spectral(f);
        const std::vector<int> zero(static_cast<std::size_t>(grid_.d), 0);
        std::vector<cplx> grad_rho(grid_.x_size());
        for (int j = 0; j < grid_.d; ++j) {
            for (std::size_t m = 0; m < grid_.x_size(); ++m) grad_rho[m] = kI * xi_[m * grid_.d + j] * rho[m];
            std::vector<int> beta(static_cast<std::size_t>(grid_.d), 0);
            beta[static_cast<std::size_t>(j)] = 1;
            const SpectralField dp = spectral_derivative(f, zero, beta);
            axpy(out, -U_ * scale, dealiased_product(grad_rho, dp));
        }
        return out;
    }

private:
    PhaseGrid grid_;
    double U_;
    std::vector<double> xi_;
};

/// Shared per-run data: equilibrium, band energies, transport frequencies and the X norm.
struct RunContext {
    RunContext(const PhaseGrid& g, const ModelParams& p)
        : grid(g),
          params(p),
          xnorm(g, p.entropy, p.band, p.physical.U),
          field(g, p.physical.U),
          quad(p.band, g.np) {
        const PhaseGridFunction eq = PhaseGridFunction::equilibrium(g, p.entropy, p.band);
        const auto col = eq.column(0);
        F.assign(col.begin(), col.end());
        const std::size_t P = g.p_size();
        energy.resize(P);
        for (std::size_t k = 0; k < P; ++k) energy[k] = band_energy(g.p_node(k), p.band);
        const auto xi = wavevectors(g);
        frequency.assign(g.size(), 0.0);
        std::vector<double> grad(static_cast<std::size_t>(g.d));
        for (std::size_t k = 0; k < P; ++k) {
            band_gradient(g.p_node(k), p.band, grad);
            for (std::size_t m = 0; m < g.x_size(); ++m) {
                double w = 0.0;
                for (int i = 0; i < g.d; ++i) w += xi[m * g.d + i] * grad[static_cast<std::size_t>(i)];
                frequency[m * P + k] = w;
            }
        }
    }

    SpectralField deviation(const SpectralField& f) const {
        SpectralField out = f;
        for (std::size_t k = 0; k < F.size(); ++k) out.coeffs[k] -= F[k];
        return out;
    }

    /// Exact transport e^{-h grad eps . grad_x}.
    void transport(double h, SpectralField& f) const {
        const std::size_t P = grid.p_size();
        parallel_for(grid.x_size(), [&](std::size_t m) {
            for (std::size_t k = 0; k < P; ++k) f.coeffs[m * P + k] *= std::polar(1.0, -h * frequency[m * P + k]);
        });
    }

    /// Exact relaxation towards F over a time h.
    void relax(double h, SpectralField& f) const {
        const double e = relaxation_factor(h, params.physical.tau);
        if (e == 1.0) return;
        for (auto& c : f.coeffs) c *= e;
        for (std::size_t k = 0; k < F.size(); ++k) f.coeffs[k] += (1.0 - e) * F[k];
    }

    void field_rk4(double h, SpectralField& f) const {
        const SpectralField k1 = field(f, 1.0);
        SpectralField y = f;
        axpy(y, h / 2, k1);
        const SpectralField k2 = field(y, 1.0);
        y = f;
        axpy(y, h / 2, k2);
        const SpectralField k3 = field(y, 1.0);
        y = f;
        axpy(y, h, k3);
        const SpectralField k4 = field(y, 1.0);
        axpy(f, h / 6, k1);
        axpy(f, h / 3, k2);
        axpy(f, h / 3, k3);
        axpy(f, h / 6, k4);
    }

    PhaseGrid grid;
    ModelParams params;
    XNorm xnorm;
    FieldTerm field;
    MomentumQuadrature quad;
    std::vector<double> F;
    std::vector<double> energy;
    std::vector<double> frequency;  // xi . grad eps per (mode, node)
};

/// BGK collision over a time h, applied node-wise in x with warm-started multipliers.
class BgkStep {
public:
    explicit BgkStep(const RunContext& ctx) : ctx_(ctx), warm_(ctx.grid.x_size()) {}

    void operator()(double h, SpectralField& f, TrajectoryRecord& rec) {
        const double tau = ctx_.params.physical.tau;
        if (std::isinf(tau) || h == 0.0) return;
        PhaseGridFunction phys = from_spectral(f);
        const std::size_t X = ctx_.grid.x_size();
        const std::size_t P = ctx_.grid.p_size();
        const double q = ctx_.grid.p_weight();
        const double eta = ctx_.params.entropy.eta;
        std::vector<double> dmass(X, 0.0);
        std::vector<double> denergy(X, 0.0);
        std::vector<std::string> failure(X);
        parallel_for(X, [&](std::size_t ix) {
            auto col = phys.column(ix);
            double rho = 0.0;
            double scale = 0.0;
            for (double v : col) {
                rho += v * q;
                scale += std::abs(v) * q;
            }
            // a density at round-off level switches the collision off: its prefactor rho (1 - eta rho) vanishes
            if (std::abs(rho) <= 1e-14 * scale) return;
            const double rate = rho * (1.0 - eta * rho) / tau;
            if (rate == 0.0) return;
            BgkOptions opts;
            opts.initial = warm_[ix];
            BgkResult res;
            try {
                res = bgk_multipliers(col, ctx_.quad, eta, opts);
            } catch (const Error& e) {
                failure[ix] = e.what();
                return;
            }
            warm_[ix] = std::make_pair(res.lambda0, res.lambda1);
            const EntropyParams local{res.lambda0, res.lambda1, eta};
            const double decay = std::exp(-h * rate);
            double dm = 0.0;
            double de = 0.0;
            for (std::size_t k = 0; k < P; ++k) {
                const double target = equilibrium_of_energy(ctx_.energy[k], local);
                const double updated = target + decay * (col[k] - target);
                dm += (updated - col[k]) * q;
                de += ctx_.energy[k] * (updated - col[k]) * q;
                col[k] = updated;
            }
            dmass[ix] = std::abs(dm) / h;
            denergy[ix] = std::abs(de) / h;
        });
        for (std::size_t ix = 0; ix < X; ++ix) {
            if (!failure[ix].empty()) throw Error(ErrorCode::kNonRealizableMoments, failure[ix]);
            rec.bgk_mass_residual = std::max(rec.bgk_mass_residual, dmass[ix]);
            rec.bgk_energy_residual = std::max(rec.bgk_energy_residual, denergy[ix]);
        }
        f = to_spectral(phys, Axes::kSpace);
    }

private:
    const RunContext& ctx_;
    std::vector<std::optional<std::pair<double, double>>> warm_;
};

class Recorder {
public:
    Recorder(const RunContext& ctx, const SolverConfig& config) : ctx_(ctx), config_(config) {}

    void record(double t, const SpectralField& f, TrajectoryRecord& rec) {
        const SpectralField dev = ctx_.deviation(f);
        const double nx = ctx_.xnorm.norm(dev);
        double ng = std::numeric_limits<double>::quiet_NaN();
        double nu = std::numeric_limits<double>::quiet_NaN();
        if (config_.gevrey) {
            nu = norm_schedule(t, *config_.gevrey);
            ng = analytic_seminorm(from_spectral(dev), nu, config_.gevrey->n_max, ctx_.xnorm).value;
        }
        const double vol = ctx_.grid.x_volume();
        const double q = ctx_.grid.p_weight();
        double mass = 0.0;
        double energy = 0.0;
        for (std::size_t k = 0; k < ctx_.grid.p_size(); ++k) {
            mass += f.coeffs[k].real() * q;
            energy += ctx_.energy[k] * f.coeffs[k].real() * q;
        }
        if (!std::isfinite(nx) || !std::isfinite(mass) || !std::isfinite(energy))
            throw Error(ErrorCode::kNanDetected, "non-finite state at t = " + std::to_string(t));
        if (rec.norm_x.empty()) {
            threshold_ = kBlowUpFactor * std::max(nx, 1e-12);
            gevrey_threshold_ = kBlowUpFactor * std::max(std::isnan(ng) ? 0.0 : ng, 1e-12);
        }
        if (nx > threshold_ || (!std::isnan(ng) && ng > gevrey_threshold_))
            throw Error(ErrorCode::kBlowUp, "norm " + std::to_string(nx) + " at t = " + std::to_string(t));
        rec.times.push_back(t);
        rec.norm_x.push_back(nx);
        rec.norm_gevrey.push_back(ng);
        rec.nu.push_back(nu);
        rec.mass.push_back(mass * vol);
        rec.energy.push_back(energy * vol);
        if (config_.density_every > 0 && (rec.times.size() - 1) % static_cast<std::size_t>(config_.density_every) == 0) {
            rec.densities.push_back(density(from_spectral(f)));
            rec.density_times.push_back(t);
        }
    }

private:
    const RunContext& ctx_;
    const SolverConfig& config_;
    double threshold_ = 0.0;
    double gevrey_threshold_ = 0.0;
};

struct StepPlan {
    std::size_t steps;
    double h;
};

StepPlan plan_steps(const SolverConfig& config) {
    if (config.t_end == 0.0) return {0, config.dt};
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(config.t_end / config.dt - 1e-9)));
    return {n, config.t_end / static_cast<double>(n)};
}

bool is_record_step(std::size_t step, std::size_t total, int every) {
    return step == total || step % static_cast<std::size_t>(std::max(every, 1)) == 0;
}

void check_initial(const PhaseGridFunction& f0, const ModelParams& params) {
    params.validate();
    f0.grid().validate();
    if (f0.grid().d != params.band.d) throw Error(ErrorCode::kShapeMismatch, "grid and band dimensions differ");
    if (!f0.all_finite()) throw Error(ErrorCode::kNanDetected, "initial data is not finite");
}

TrajectoryRecord run_split(const PhaseGridFunction& f0, const ModelParams& params, const SolverConfig& config,
                           double t0) {
    const RunContext ctx(f0.grid(), params);
    Recorder recorder(ctx, config);
    BgkStep bgk(ctx);
    TrajectoryRecord rec;
    SpectralField f = to_spectral(f0, Axes::kSpace);
    const StepPlan plan = plan_steps(config);
    auto collide = [&](double h) {
        if (config.collision == Collision::kBgk)
            bgk(h, f, rec);
        else
            ctx.relax(h, f);
    };
    recorder.record(t0, f, rec);
    for (std::size_t n = 1; n <= plan.steps; ++n) {
        collide(plan.h / 2);
        ctx.transport(plan.h / 2, f);
        ctx.field_rk4(plan.h, f);
        ctx.transport(plan.h / 2, f);
        collide(plan.h / 2);
        if (is_record_step(n, plan.steps, config.record_every))
            recorder.record(t0 + static_cast<double>(n) * plan.h, f, rec);
    }
    rec.steps = plan.steps;
    rec.final_state = from_spectral(f);
    return rec;
}

}  // namespace

void SolverConfig::validate(const PhaseGrid& grid, const ModelParams& params) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::kInvalidArgument, "t_end must be >= 0");
    if (picard_max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "picard_max_iter must be >= 1");
    if (!(picard_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "picard_tol must be positive");
    if (record_every < 1) throw Error(ErrorCode::kInvalidArgument, "record_every must be >= 1");
    if (density_every < 0) throw Error(ErrorCode::kInvalidArgument, "density_every must be >= 0");
    if (gevrey) gevrey->validate();
    const double tau = params.physical.tau;
    if (dt > tau / 10.0)
        throw Error(ErrorCode::kInvalidArgument,
                    "dt = " + std::to_string(dt) + " does not resolve relaxation (dt <= tau/10 required)");
    if (enforce_cfl) {
        const double c = cfl_number(dt, grid, params.band);
        if (c > 1.0)
            throw Error(ErrorCode::kInvalidArgument, "transport CFL number " + std::to_string(c) + " exceeds 1");
    }
}

double cfl_number(double dt, const PhaseGrid& grid, const BandParams& bp) {
    const double max_grad = 4.0 * std::numbers::pi * bp.epsilon0 * std::sqrt(static_cast<double>(grid.d));
    return dt * max_grad * 2.0 * std::numbers::pi * grid.nx / grid.lx;
}

TrajectoryRecord evolve(const PhaseGridFunction& f0, const ModelParams& params, const SolverConfig& config,
                        double t0) {
    check_initial(f0, params);
    config.validate(f0.grid(), params);
    if (config.scheme == Scheme::kStrangSplit) return run_split(f0, params, config, t0);

    if (config.collision == Collision::kBgk)
        throw Error(ErrorCode::kInvalidArgument, "the Picard scheme only supports relaxation collisions");
    const PhaseGridFunction eq = PhaseGridFunction::equilibrium(f0.grid(), params.entropy, params.band);
    const PicardSolution sol = picard_solve(f0 - eq, params, config);
    TransformedTrajectory kept;
    const std::size_t last = sol.g.times.size() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k != 0 && !is_record_step(k, last, config.record_every)) continue;
        kept.times.push_back(sol.g.times[k]);
        kept.samples.push_back(sol.g.samples[k]);
    }
    TrajectoryRecord rec = physical_record(kept, params, config);
    for (double& t : rec.times) t += t0;
    for (double& t : rec.density_times) t += t0;
    rec.steps = last;
    return rec;
}

TrajectoryRecord evolve_bgk(const PhaseGridFunction& f0, const ModelParams& params, const SolverConfig& config,
                            double t0) {
    SolverConfig c = config;
    c.collision = Collision::kBgk;
    c.scheme = Scheme::kStrangSplit;
    return evolve(f0, params, c, t0);
}

TransformedTrajectory evolve_transformed(const PhaseGridFunction& g0, const ModelParams& params,
                                         const SolverConfig& config, bool with_quadratic) {
    check_initial(g0, params);
    config.validate(g0.grid(), params);
    const PhaseGrid& grid = g0.grid();
    const LinearizedOperator op(grid, params.entropy, params.band, params.physical.U);
    const FieldTerm field(grid, with_quadratic ? params.physical.U : 0.0);
    const double tau = params.physical.tau;
    auto rhs = [&](double t, const SpectralField& g) { return field(g, relaxation_factor(t, tau)); };

    const StepPlan plan = plan_steps(config);
    SpectralField g = to_spectral(g0, Axes::kSpace);
    TransformedTrajectory out;
    out.times.push_back(0.0);
    out.samples.push_back(g);
    const double h = plan.h;
    for (std::size_t n = 1; n <= plan.steps; ++n) {
        const double t = static_cast<double>(n - 1) * h;
        if (!with_quadratic || params.physical.U == 0.0) {
            op.propagate(h, g);
        } else {
            // Lawson RK4 in the frame v = e^{tL} g.
            const SpectralField k1 = rhs(t, g);
            SpectralField a = g;
            axpy(a, h / 2, k1);
            op.propagate(h / 2, a);
            const SpectralField k2 = rhs(t + h / 2, a);
            SpectralField half = g;
            op.propagate(h / 2, half);
            SpectralField b = half;
            axpy(b, h / 2, k2);
            const SpectralField k3 = rhs(t + h / 2, b);
            SpectralField c = half;
            axpy(c, h, k3);
            op.propagate(h / 2, c);
            const SpectralField k4 = rhs(t + h, c);
            axpy(g, h / 6, k1);
            op.propagate(h / 2, g);
            axpy(g, h / 3, k2);
            axpy(g, h / 3, k3);
            op.propagate(h / 2, g);
            axpy(g, h / 6, k4);
        }
        for (const auto& c : g.coeffs)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw Error(ErrorCode::kNanDetected, "non-finite transformed state at step " + std::to_string(n));
        if (is_record_step(n, plan.steps, config.record_every)) {
            out.times.push_back(static_cast<double>(n) * h);
            out.samples.push_back(g);
        }
    }
    return out;
}

TrajectoryRecord physical_record(const TransformedTrajectory& g, const ModelParams& params,
                                 const SolverConfig& config) {
    if (g.samples.empty() || g.samples.size() != g.times.size())
        throw Error(ErrorCode::kShapeMismatch, "trajectory times and samples differ");
    const RunContext ctx(g.samples.front().grid, params);
    Recorder recorder(ctx, config);
    TrajectoryRecord rec;
    SpectralField f;
    for (std::size_t k = 0; k < g.samples.size(); ++k) {
        f = g.samples[k];
        to_momentum_nodes(f);
        const double e = relaxation_factor(g.times[k], params.physical.tau);
        for (auto& c : f.coeffs) c *= e;
        for (std::size_t i = 0; i < ctx.F.size(); ++i) f.coeffs[i] += ctx.F[i];
        recorder.record(g.times[k], f, rec);
    }
    rec.steps = g.samples.size() - 1;
    rec.final_state = from_spectral(f);
    return rec;
}

TransformedTrajectory picard_step(const TransformedTrajectory& u, const LinearizedOperator& op, double tau) {
    if (u.samples.empty() || u.samples.size() != u.times.size())
        throw Error(ErrorCode::kShapeMismatch, "trajectory times and samples differ");
    const FieldTerm field(op.grid(), op.U());
    const std::size_t K = u.samples.size();
    std::vector<SpectralField> integrand(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double s = u.times[k];
        SpectralField w = u.samples[k];
        op.propagate(s, w);
        SpectralField q = field(w, relaxation_factor(s, tau));
        op.group_action(s, q);
        integrand[k] = std::move(q);
    }
    TransformedTrajectory out;
    out.times = u.times;
    out.samples.reserve(K);
    SpectralField acc = u.samples.front();
    to_momentum_nodes(acc);
    out.samples.push_back(acc);
    for (std::size_t k = 1; k < K; ++k) {
        const double w = 0.5 * (u.times[k] - u.times[k - 1]);
        axpy(acc, w, integrand[k - 1]);
        axpy(acc, w, integrand[k]);
        out.samples.push_back(acc);
    }
    return out;
}

double trajectory_distance(const TransformedTrajectory& a, const TransformedTrajectory& b, const XNorm& xnorm) {
    if (a.samples.size() != b.samples.size()) throw Error(ErrorCode::kShapeMismatch, "trajectories differ in length");
    double sup = 0.0;
    for (std::size_t k = 0; k < a.samples.size(); ++k)
        sup = std::max(sup, xnorm.norm(difference(a.samples[k], b.samples[k])));
    return sup;
}

PicardSolution picard_solve(const PhaseGridFunction& g0, const ModelParams& params, const SolverConfig& config) {
    check_initial(g0, params);
    config.validate(g0.grid(), params);
    const LinearizedOperator op(g0.grid(), params.entropy, params.band, params.physical.U);
    const StepPlan plan = plan_steps(config);
    const SpectralField start = to_spectral(g0, Axes::kSpace);
    PicardSolution sol;
    for (std::size_t n = 0; n <= plan.steps; ++n) {
        sol.u.times.push_back(static_cast<double>(n) * plan.h);
        sol.u.samples.push_back(start);
    }
    const double initial = op.xnorm().norm(start);
    double prev = -1.0;
    bool converged = initial == 0.0;
    while (!converged && sol.iterations < config.picard_max_iter) {
        TransformedTrajectory next = picard_step(sol.u, op, params.physical.tau);
        const double dist = trajectory_distance(next, sol.u, op.xnorm());
        if (!std::isfinite(dist)) throw Error(ErrorCode::kNanDetected, "non-finite Picard iterate");
        sol.u = std::move(next);
        ++sol.iterations;
        sol.distances.push_back(dist);
        if (prev > 1e-11 * initial) sol.contraction = std::max(sol.contraction, dist / prev);
        prev = dist;
        converged = dist <= config.picard_tol * initial;
    }
    if (!converged)
        throw Error(ErrorCode::kContractionFailure,
                    "Picard iteration did not converge in " + std::to_string(config.picard_max_iter) +
                        " iterations (last distance " + std::to_string(prev) + ")");
    sol.g.times = sol.u.times;
    sol.g.samples = sol.u.samples;
    for (std::size_t k = 0; k < sol.g.samples.size(); ++k) op.propagate(sol.g.times[k], sol.g.samples[k]);
    return sol;
}

DecayFit decay_fit(const std::vector<double>& times, const std::vector<double>& norms) {
    if (times.size() != norms.size()) throw Error(ErrorCode::kShapeMismatch, "times and norms differ in length");
    std::vector<double> t;
    std::vector<double> y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (norms[i] > 1e-14 && std::isfinite(norms[i])) {
            t.push_back(times[i]);
            y.push_back(std::log(norms[i]));
        }
    }
    if (t.size() < 10)
        throw Error(ErrorCode::kInvalidArgument,
                    "decay fit needs at least 10 samples above 1e-14, got " + std::to_string(t.size()));
    DecayFit fit;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] > y[i - 1] + 1e-8) fit.monotone = false;
    const std::size_t first = t.size() / 2;
    const auto n = static_cast<double>(t.size() - first);
    double st = 0.0;
    double sy = 0.0;
    for (std::size_t i = first; i < t.size(); ++i) {
        st += t[i];
        sy += y[i];
    }
    const double tm = st / n;
    const double ym = sy / n;
    double stt = 0.0;
    double sty = 0.0;
    for (std::size_t i = first; i < t.size(); ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
    }
    if (stt == 0.0) throw Error(ErrorCode::kInvalidArgument, "decay fit needs distinct sample times");
    const double slope = sty / stt;
    fit.rate = -slope;
    fit.log_C = ym - slope * tm;
    double ss = 0.0;
    for (std::size_t i = first; i < t.size(); ++i) {
        const double r = y[i] - (fit.log_C + slope * t[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

DecayFit decay_fit(const TrajectoryRecord& record) { return decay_fit(record.times, record.norm_x); }

void write_trajectory_ndjson(std::ostream& out, const TrajectoryRecord& record) {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        nlohmann::json line = {{"t", record.times[i]},
                               {"norm_X", finite_or_null(record.norm_x[i])},
                               {"norm_gevrey", finite_or_null(record.norm_gevrey[i])},
                               {"nu", finite_or_null(record.nu[i])},
                               {"mass", record.mass[i]},
                               {"energy", record.energy[i]}};
        out << line.dump() << '\n';
    }
}

}  // namespace bdb
