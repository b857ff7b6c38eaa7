#include "bdb/grid.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "bdb/error.hpp"
#include "bdb/multiindex.hpp"
#include "fft.hpp"

namespace bdb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t ipow(int base, int exp) {
    std::size_t out = 1;
    for (int i = 0; i < exp; ++i) out *= static_cast<std::size_t>(base);
    return out;
}

void flat_to_multi(std::size_t flat, int n, std::span<int> out) {
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = static_cast<int>(flat % static_cast<std::size_t>(n));
        flat /= static_cast<std::size_t>(n);
    }
}

void transform_x(std::vector<cplx>& data, const PhaseGrid& g, int sign) {
    detail::dft(data.data(), g.d, g.nx, g.p_size(), g.p_size(), 1, sign);
}

void transform_p(std::vector<cplx>& data, const PhaseGrid& g, int sign) {
    detail::dft(data.data(), g.d, g.np, g.x_size(), 1, g.p_size(), sign);
}

void scale(std::vector<cplx>& data, double s) {
    for (auto& c : data) c *= s;
}

}  // namespace

void PhaseGrid::validate() const {
    if (d < 1 || d > 3) throw Error(ErrorCode::kInvalidArgument, "grid dimension must be 1, 2 or 3");
    if (nx < 8 || nx % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "Nx must be even and >= 8");
    if (np < 8 || np % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "Np must be even and >= 8");
    if (!(lx > 0.0) || !std::isfinite(lx)) throw Error(ErrorCode::kInvalidArgument, "Lx must be positive");
}

std::size_t PhaseGrid::x_size() const { return ipow(nx, d); }
std::size_t PhaseGrid::p_size() const { return ipow(np, d); }
double PhaseGrid::x_cell() const { return std::pow(lx / nx, d); }
double PhaseGrid::x_volume() const { return std::pow(lx, d); }
double PhaseGrid::p_weight() const { return 1.0 / static_cast<double>(p_size()); }

void PhaseGrid::x_node(std::size_t ix, std::span<double> out) const {
    std::array<int, 3> idx{};
    flat_to_multi(ix, nx, std::span<int>(idx.data(), static_cast<std::size_t>(d)));
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i)] * lx / nx;
}

void PhaseGrid::p_node(std::size_t ip, std::span<double> out) const {
    std::array<int, 3> idx{};
    flat_to_multi(ip, np, std::span<int>(idx.data(), static_cast<std::size_t>(d)));
    for (int i = 0; i < d; ++i)
        out[static_cast<std::size_t>(i)] = static_cast<double>(idx[static_cast<std::size_t>(i)]) / np;
}

std::vector<double> PhaseGrid::x_node(std::size_t ix) const {
    std::vector<double> out(static_cast<std::size_t>(d));
    x_node(ix, out);
    return out;
}

std::vector<double> PhaseGrid::p_node(std::size_t ip) const {
    std::vector<double> out(static_cast<std::size_t>(d));
    p_node(ip, out);
    return out;
}

void PhaseGrid::x_wavenumbers(std::size_t mode, std::span<int> out) const {
    flat_to_multi(mode, nx, out);
    for (auto& k : out) k = fft_wavenumber(static_cast<std::size_t>(k), nx);
}

void PhaseGrid::p_wavenumbers(std::size_t mode, std::span<int> out) const {
    flat_to_multi(mode, np, out);
    for (auto& k : out) k = fft_wavenumber(static_cast<std::size_t>(k), np);
}

int fft_wavenumber(std::size_t j, int n) {
    const int k = static_cast<int>(j);
    return k < n / 2 ? k : k - n;
}

cplx derivative_symbol(std::size_t j, int n, double period, int order) {
    if (order == 0) return 1.0;
    const int k = fft_wavenumber(j, n);
    if (k == -n / 2 && order % 2 == 1) return 0.0;
    const cplx base(0.0, kTwoPi * k / period);
    cplx out = 1.0;
    for (int i = 0; i < order; ++i) out *= base;
    return out;
}

void check_same_grid(const PhaseGrid& a, const PhaseGrid& b) {
    if (!(a == b)) throw Error(ErrorCode::kGridMismatch, "fields live on different grids");
}

PhaseGridFunction::PhaseGridFunction(const PhaseGrid& grid) : grid_(grid) {
    grid_.validate();
    values_.assign(grid_.size(), 0.0);
}

PhaseGridFunction::PhaseGridFunction(const PhaseGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (values_.size() != grid_.size())
        throw Error(ErrorCode::kShapeMismatch, "value array has " + std::to_string(values_.size()) +
                                                   " entries, grid needs " + std::to_string(grid_.size()));
}

PhaseGridFunction PhaseGridFunction::from_function(
    const PhaseGrid& grid, const std::function<double(std::span<const double>, std::span<const double>)>& fn) {
    PhaseGridFunction out(grid);
    std::vector<double> x(static_cast<std::size_t>(grid.d));
    std::vector<double> p(static_cast<std::size_t>(grid.d));
    for (std::size_t ix = 0; ix < grid.x_size(); ++ix) {
        grid.x_node(ix, x);
        for (std::size_t ip = 0; ip < grid.p_size(); ++ip) {
            grid.p_node(ip, p);
            out.at(ix, ip) = fn(x, p);
        }
    }
    return out;
}

PhaseGridFunction PhaseGridFunction::equilibrium(const PhaseGrid& grid, const EntropyParams& ep,
                                                 const BandParams& bp) {
    PhaseGridFunction out(grid);
    std::vector<double> column(grid.p_size());
    std::vector<double> p(static_cast<std::size_t>(grid.d));
    for (std::size_t ip = 0; ip < grid.p_size(); ++ip) {
        grid.p_node(ip, p);
        column[ip] = bdb::equilibrium(p, ep, bp);
    }
    for (std::size_t ix = 0; ix < grid.x_size(); ++ix) std::copy(column.begin(), column.end(), out.column(ix).begin());
    return out;
}

PhaseGridFunction& PhaseGridFunction::operator+=(const PhaseGridFunction& o) {
    check_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

PhaseGridFunction& PhaseGridFunction::operator-=(const PhaseGridFunction& o) {
    check_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

PhaseGridFunction& PhaseGridFunction::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

double PhaseGridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double PhaseGridFunction::l2_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s * grid_.x_cell() * grid_.p_weight());
}

bool PhaseGridFunction::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

SpectralField to_spectral(const PhaseGridFunction& f, Axes axes) {
    const PhaseGrid& g = f.grid();
    SpectralField s{g, MomentumRep::kNodal, std::vector<cplx>(f.values().begin(), f.values().end())};
    transform_x(s.coeffs, g, -1);
    scale(s.coeffs, 1.0 / static_cast<double>(g.x_size()));
    if (axes == Axes::kPhaseSpace) to_momentum_modes(s);
    return s;
}

void to_momentum_modes(SpectralField& s) {
    if (s.momentum == MomentumRep::kModal) return;
    transform_p(s.coeffs, s.grid, -1);
    scale(s.coeffs, s.grid.p_weight());
    s.momentum = MomentumRep::kModal;
}

void to_momentum_nodes(SpectralField& s) {
    if (s.momentum == MomentumRep::kNodal) return;
    transform_p(s.coeffs, s.grid, +1);
    s.momentum = MomentumRep::kNodal;
}

PhaseGridFunction from_spectral(const SpectralField& s) {
    if (s.coeffs.size() != s.grid.size()) throw Error(ErrorCode::kShapeMismatch, "spectral field size mismatch");
    std::vector<cplx> data = s.coeffs;
    if (s.momentum == MomentumRep::kModal) transform_p(data, s.grid, +1);
    transform_x(data, s.grid, +1);
    PhaseGridFunction out(s.grid);
    for (std::size_t i = 0; i < data.size(); ++i) out.values()[i] = data[i].real();
    return out;
}

namespace {

void check_orders(int d, std::span<const int> alpha, std::span<const int> beta, int max_order) {
    if (static_cast<int>(alpha.size()) != d || static_cast<int>(beta.size()) != d)
        throw Error(ErrorCode::kShapeMismatch, "derivative multi-index length differs from d");
    for (int a : alpha)
        if (a < 0) throw Error(ErrorCode::kInvalidArgument, "negative derivative order");
    for (int b : beta)
        if (b < 0) throw Error(ErrorCode::kInvalidArgument, "negative derivative order");
    if (order(alpha) + order(beta) > max_order)
        throw Error(ErrorCode::kOrderExceedsTruncation,
                    "derivative order " + std::to_string(order(alpha) + order(beta)) + " exceeds " +
                        std::to_string(max_order));
}

// Multiplier table per flat mode index for one set of axes.
std::vector<cplx> symbol_table(int d, int n, double period, std::span<const int> orders) {
    const std::size_t total = ipow(n, d);
    std::vector<cplx> out(total, 1.0);
    std::array<int, 3> idx{};
    for (std::size_t m = 0; m < total; ++m) {
        flat_to_multi(m, n, std::span<int>(idx.data(), static_cast<std::size_t>(d)));
        for (int i = 0; i < d; ++i)
            out[m] *= derivative_symbol(static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]), n, period,
                                        orders[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

SpectralField spectral_derivative(const SpectralField& f, std::span<const int> alpha, std::span<const int> beta,
                                  int max_order) {
    const PhaseGrid& g = f.grid;
    check_orders(g.d, alpha, beta, max_order);
    SpectralField out = f;
    const bool need_p = order(beta) > 0;
    if (need_p && out.momentum == MomentumRep::kNodal) {
        to_momentum_modes(out);
    }
    const auto xs = symbol_table(g.d, g.nx, g.lx, alpha);
    const auto ps = need_p ? symbol_table(g.d, g.np, 1.0, beta) : std::vector<cplx>(g.p_size(), 1.0);
    for (std::size_t m = 0; m < g.x_size(); ++m)
        for (std::size_t k = 0; k < g.p_size(); ++k) out.at(m, k) *= xs[m] * ps[k];
    if (need_p && f.momentum == MomentumRep::kNodal) to_momentum_nodes(out);
    return out;
}

PhaseGridFunction spectral_derivative(const PhaseGridFunction& f, std::span<const int> alpha,
                                      std::span<const int> beta, int max_order) {
    check_orders(f.grid().d, alpha, beta, max_order);
    if (order(alpha) + order(beta) == 0) return f;
    const PhaseGrid& g = f.grid();
    if (order(alpha) == 0) {
        // momentum-only derivative: skip the spatial transform
        std::vector<cplx> data(f.values().begin(), f.values().end());
        transform_p(data, g, -1);
        const auto ps = symbol_table(g.d, g.np, 1.0, beta);
        for (std::size_t m = 0; m < g.x_size(); ++m)
            for (std::size_t k = 0; k < g.p_size(); ++k) data[m * g.p_size() + k] *= ps[k] * g.p_weight();
        transform_p(data, g, +1);
        PhaseGridFunction out(g);
        for (std::size_t i = 0; i < data.size(); ++i) out.values()[i] = data[i].real();
        return out;
    }
    return from_spectral(spectral_derivative(to_spectral(f, Axes::kSpace), alpha, beta, max_order));
}

SpatialFunction density(const PhaseGridFunction& f) {
    const PhaseGrid& g = f.grid();
    SpatialFunction out{g, std::vector<double>(g.x_size(), 0.0)};
    for (std::size_t ix = 0; ix < g.x_size(); ++ix) {
        double s = 0.0;
        for (double v : f.column(ix)) s += v;
        out.values[ix] = s * g.p_weight();
    }
    return out;
}

SpatialFunction energy_moment(const PhaseGridFunction& f, const BandParams& bp) {
    const PhaseGrid& g = f.grid();
    if (bp.d != g.d) throw Error(ErrorCode::kShapeMismatch, "band dimension differs from grid dimension");
    const MomentumQuadrature quad(bp, g.np);
    SpatialFunction out{g, std::vector<double>(g.x_size(), 0.0)};
    for (std::size_t ix = 0; ix < g.x_size(); ++ix) {
        double s = 0.0;
        auto col = f.column(ix);
        for (std::size_t k = 0; k < col.size(); ++k) s += col[k] * quad.energies()[k];
        out.values[ix] = s * g.p_weight();
    }
    return out;
}

std::vector<cplx> density_spectral(const SpectralField& s) {
    const PhaseGrid& g = s.grid;
    std::vector<cplx> out(g.x_size(), 0.0);
    for (std::size_t m = 0; m < g.x_size(); ++m) {
        if (s.momentum == MomentumRep::kModal) {
            out[m] = s.at(m, 0);
            continue;
        }
        cplx acc = 0.0;
        for (std::size_t k = 0; k < g.p_size(); ++k) acc += s.at(m, k);
        out[m] = acc * g.p_weight();
    }
    return out;
}

std::vector<cplx> spatial_to_spectral(const PhaseGrid& grid, std::span<const double> values) {
    if (values.size() != grid.x_size()) throw Error(ErrorCode::kShapeMismatch, "spatial array size mismatch");
    std::vector<cplx> data(values.begin(), values.end());
    detail::dft(data.data(), grid.d, grid.nx, 1, 1, 1, -1);
    scale(data, 1.0 / static_cast<double>(grid.x_size()));
    return data;
}

namespace {

// For one axis: where coefficient j of an n-point grid lands on the m-point padded grid.
// The Nyquist coefficient is split evenly between +n/2 and -n/2 so real data stays real.
struct Placement {
    std::array<std::size_t, 2> index;
    std::array<double, 2> factor;
    int count;
};

Placement place(std::size_t j, int n, int m) {
    const int k = fft_wavenumber(j, n);
    if (k == -n / 2)
        return {{static_cast<std::size_t>(m - n / 2), static_cast<std::size_t>(n / 2)}, {0.5, 0.5}, 2};
    const auto idx = static_cast<std::size_t>(k >= 0 ? k : k + m);
    return {{idx, 0}, {1.0, 0.0}, 1};
}

struct PaddedMap {
    // per coarse mode: list of (padded flat index, factor)
    std::vector<std::vector<std::pair<std::size_t, double>>> targets;
    int m;
};

PaddedMap padded_map(const PhaseGrid& g) {
    PaddedMap map;
    map.m = 3 * g.nx / 2;
    map.targets.resize(g.x_size());
    std::array<int, 3> idx{};
    for (std::size_t mode = 0; mode < g.x_size(); ++mode) {
        flat_to_multi(mode, g.nx, std::span<int>(idx.data(), static_cast<std::size_t>(g.d)));
        std::vector<std::pair<std::size_t, double>> cur{{0, 1.0}};
        for (int axis = 0; axis < g.d; ++axis) {
            const Placement pl = place(static_cast<std::size_t>(idx[static_cast<std::size_t>(axis)]), g.nx, map.m);
            std::vector<std::pair<std::size_t, double>> next;
            for (const auto& [base, fac] : cur)
                for (int c = 0; c < pl.count; ++c)
                    next.emplace_back(base * static_cast<std::size_t>(map.m) + pl.index[static_cast<std::size_t>(c)],
                                      fac * pl.factor[static_cast<std::size_t>(c)]);
            cur = std::move(next);
        }
        map.targets[mode] = std::move(cur);
    }
    return map;
}

}  // namespace

SpectralField dealiased_product(std::span<const cplx> a_hat, const SpectralField& b_hat) {
    const PhaseGrid& g = b_hat.grid;
    if (b_hat.momentum != MomentumRep::kNodal)
        throw Error(ErrorCode::kInvalidArgument, "dealiased product expects momentum nodes");
    if (a_hat.size() != g.x_size()) throw Error(ErrorCode::kShapeMismatch, "multiplier size mismatch");
    thread_local PhaseGrid cached_grid{};
    thread_local PaddedMap map;
    if (!(cached_grid == g) || map.targets.empty()) {
        map = padded_map(g);
        cached_grid = g;
    }
    const std::size_t P = g.p_size();
    const std::size_t padded = ipow(map.m, g.d);

    std::vector<cplx> a_pad(padded, 0.0);
    std::vector<cplx> b_pad(padded * P, 0.0);
    for (std::size_t mode = 0; mode < g.x_size(); ++mode) {
        for (const auto& [t, fac] : map.targets[mode]) {
            a_pad[t] += fac * a_hat[mode];
            const cplx* src = b_hat.coeffs.data() + mode * P;
            cplx* dst = b_pad.data() + t * P;
            for (std::size_t k = 0; k < P; ++k) dst[k] += fac * src[k];
        }
    }
    detail::dft(a_pad.data(), g.d, map.m, 1, 1, 1, +1);
    detail::dft(b_pad.data(), g.d, map.m, P, P, 1, +1);
    for (std::size_t t = 0; t < padded; ++t) {
        const cplx a = a_pad[t];
        cplx* row = b_pad.data() + t * P;
        for (std::size_t k = 0; k < P; ++k) row[k] *= a;
    }
    detail::dft(b_pad.data(), g.d, map.m, P, P, 1, -1);
    const double norm = 1.0 / static_cast<double>(padded);

    SpectralField out{g, MomentumRep::kNodal, std::vector<cplx>(g.size(), 0.0)};
    for (std::size_t mode = 0; mode < g.x_size(); ++mode) {
        cplx* dst = out.coeffs.data() + mode * P;
        // both Nyquist images alias onto the stored coefficient, so they fold with weight 1
        for (const auto& target : map.targets[mode]) {
            const cplx* src = b_pad.data() + target.first * P;
            for (std::size_t k = 0; k < P; ++k) dst[k] += norm * src[k];
        }
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'B', 'D', 'B', 'S', 'N', 'A', 'P', '1'};
constexpr std::uint32_t kSnapshotVersion = 1;

template <class T>
T swap_bytes(T v) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

template <class T>
void put(std::ostream& os, T v) {
    if constexpr (std::endian::native == std::endian::big) v = swap_bytes(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_double(std::ostream& os, double v) { put(os, std::bit_cast<std::uint64_t>(v)); }

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error(ErrorCode::kIo, "snapshot truncated");
    if constexpr (std::endian::native == std::endian::big) v = swap_bytes(v);
    return v;
}

double get_double(std::istream& is) { return std::bit_cast<double>(get<std::uint64_t>(is)); }

}  // namespace

void write_snapshot(const std::string& path, const Snapshot& snap) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::kIo, "cannot open snapshot for writing: " + path);
    const PhaseGrid& g = snap.field.grid();
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kSnapshotVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.d));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.nx));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.np));
    put_double(os, g.lx);
    put_double(os, snap.time);
    const ModelParams& p = snap.params;
    for (double v : {p.entropy.lambda0, p.entropy.lambda1, p.entropy.eta, p.physical.U, p.physical.tau,
                     p.band.epsilon0})
        put_double(os, v);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(snap.field.values().size()));
    for (double v : snap.field.values()) put_double(os, v);
    if (!os) throw Error(ErrorCode::kIo, "failed writing snapshot: " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::kIo, "cannot open snapshot: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error(ErrorCode::kIo, "not a snapshot file: " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kSnapshotVersion)
        throw Error(ErrorCode::kIo, "unsupported snapshot version " + std::to_string(version));
    PhaseGrid g;
    g.d = static_cast<int>(get<std::uint32_t>(is));
    g.nx = static_cast<int>(get<std::uint32_t>(is));
    g.np = static_cast<int>(get<std::uint32_t>(is));
    g.lx = get_double(is);
    g.validate();
    Snapshot snap;
    snap.time = get_double(is);
    snap.params.entropy.lambda0 = get_double(is);
    snap.params.entropy.lambda1 = get_double(is);
    snap.params.entropy.eta = get_double(is);
    snap.params.physical.U = get_double(is);
    snap.params.physical.tau = get_double(is);
    snap.params.band.epsilon0 = get_double(is);
    snap.params.band.d = g.d;
    const auto count = get<std::uint64_t>(is);
    if (count != g.size()) throw Error(ErrorCode::kIo, "snapshot value count does not match its grid");
    std::vector<double> values(count);
    for (auto& v : values) v = get_double(is);
    snap.field = PhaseGridFunction(g, std::move(values));
    return snap;
}

}  // namespace bdb
