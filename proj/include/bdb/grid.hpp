#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdb/model.hpp"

namespace bdb {

using cplx = std::complex<double>;

/// Periodic tensor grid: Nx^d nodes on the spatial torus of side Lx times Np^d nodes
/// on the unit momentum torus. Flat indices are row-major (last axis fastest) and a
/// phase-space sample sits at ix * Np^d + ip.
struct PhaseGrid {
    int d = 1;
    int nx = 64;
    int np = 64;
    double lx = 1.0;

    void validate() const;
    std::size_t x_size() const;
    std::size_t p_size() const;
    std::size_t size() const { return x_size() * p_size(); }
    /// Volume of one spatial cell, (Lx/Nx)^d.
    double x_cell() const;
    double x_volume() const;
    /// Trapezoid weight of one momentum node, 1/Np^d.
    double p_weight() const;
    void x_node(std::size_t ix, std::span<double> out) const;
    void p_node(std::size_t ip, std::span<double> out) const;
    std::vector<double> x_node(std::size_t ix) const;
    std::vector<double> p_node(std::size_t ip) const;
    /// Signed integer wavenumbers of a flat x-mode (or p-mode) index, standard FFT ordering.
    void x_wavenumbers(std::size_t mode, std::span<int> out) const;
    void p_wavenumbers(std::size_t mode, std::span<int> out) const;

    bool operator==(const PhaseGrid&) const = default;
};

/// Index j of an n-point FFT mapped to its signed wavenumber: 0..n/2-1, then -n/2..-1.
int fft_wavenumber(std::size_t j, int n);

/// Symbol of the order-th derivative for FFT index j on a period: (2 pi i k / period)^order.
/// Odd orders vanish at the Nyquist index so that derivatives of real fields stay real.
cplx derivative_symbol(std::size_t j, int n, double period, int order);

void check_same_grid(const PhaseGrid& a, const PhaseGrid& b);

/// Real samples f(x, p) on a PhaseGrid.
class PhaseGridFunction {
public:
    PhaseGridFunction() = default;
    explicit PhaseGridFunction(const PhaseGrid& grid);
    PhaseGridFunction(const PhaseGrid& grid, std::vector<double> values);
    static PhaseGridFunction from_function(
        const PhaseGrid& grid, const std::function<double(std::span<const double>, std::span<const double>)>& fn);
    /// The equilibrium F(p), constant in x.
    static PhaseGridFunction equilibrium(const PhaseGrid& grid, const EntropyParams& ep, const BandParams& bp);

    const PhaseGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double& at(std::size_t ix, std::size_t ip) { return values_[ix * grid_.p_size() + ip]; }
    double at(std::size_t ix, std::size_t ip) const { return values_[ix * grid_.p_size() + ip]; }
    std::span<const double> column(std::size_t ix) const {
        return {values_.data() + ix * grid_.p_size(), grid_.p_size()};
    }
    std::span<double> column(std::size_t ix) { return {values_.data() + ix * grid_.p_size(), grid_.p_size()}; }

    PhaseGridFunction& operator+=(const PhaseGridFunction& o);
    PhaseGridFunction& operator-=(const PhaseGridFunction& o);
    PhaseGridFunction& operator*=(double s);
    friend PhaseGridFunction operator+(PhaseGridFunction a, const PhaseGridFunction& b) { return a += b; }
    friend PhaseGridFunction operator-(PhaseGridFunction a, const PhaseGridFunction& b) { return a -= b; }
    friend PhaseGridFunction operator*(double s, PhaseGridFunction a) { return a *= s; }

    double max_abs() const;
    /// Plain grid L2 norm (trapezoid in both variables).
    double l2_norm() const;
    bool all_finite() const;

private:
    PhaseGrid grid_;
    std::vector<double> values_;
};

/// Real samples of a function of x only.
struct SpatialFunction {
    PhaseGrid grid;
    std::vector<double> values;
};

/// Which variables a SpectralField is transformed in. Space: x-modes by momentum nodes.
/// PhaseSpace: x-modes by momentum modes.
enum class Axes { kSpace, kPhaseSpace };
enum class MomentumRep { kNodal, kModal };

/// Fourier coefficients c = (1/N) sum f e^{-i k x}; a constant c maps to the zero mode c.
/// Layout matches PhaseGridFunction: x-mode index times Np^d plus momentum index.
struct SpectralField {
    PhaseGrid grid;
    MomentumRep momentum = MomentumRep::kNodal;
    std::vector<cplx> coeffs;

    cplx& at(std::size_t mode, std::size_t ip) { return coeffs[mode * grid.p_size() + ip]; }
    cplx at(std::size_t mode, std::size_t ip) const { return coeffs[mode * grid.p_size() + ip]; }
};

SpectralField to_spectral(const PhaseGridFunction& f, Axes axes = Axes::kSpace);
/// Inverse transform; the imaginary part (round-off for real data) is dropped.
PhaseGridFunction from_spectral(const SpectralField& s);
/// Switch the momentum representation of a field in place.
void to_momentum_modes(SpectralField& s);
void to_momentum_nodes(SpectralField& s);

inline constexpr int kDefaultMaxDerivativeOrder = 16;

/// d_x^alpha d_p^beta f via Fourier multipliers (i xi)^alpha (2 pi i k)^beta.
PhaseGridFunction spectral_derivative(const PhaseGridFunction& f, std::span<const int> alpha,
                                      std::span<const int> beta, int max_order = kDefaultMaxDerivativeOrder);
/// Same multipliers applied to a field in either representation; result keeps the representation.
SpectralField spectral_derivative(const SpectralField& f, std::span<const int> alpha, std::span<const int> beta,
                                  int max_order = kDefaultMaxDerivativeOrder);

/// rho_f(x) = int f dp by the momentum trapezoid rule.
SpatialFunction density(const PhaseGridFunction& f);
/// int eps(p) f dp.
SpatialFunction energy_moment(const PhaseGridFunction& f, const BandParams& bp);
/// Momentum integral of x-spectral data: one coefficient per x-mode.
std::vector<cplx> density_spectral(const SpectralField& s);

/// Spatial Fourier coefficients of a function of x only (same normalization as to_spectral).
std::vector<cplx> spatial_to_spectral(const PhaseGrid& grid, std::span<const double> values);

/// a(x) b(x, p) for x-spectral inputs, with 3/2-rule zero padding in x so that the
/// quadratic product does not alias. b and the result use momentum nodes.
SpectralField dealiased_product(std::span<const cplx> a_hat, const SpectralField& b_hat);

/// Binary snapshot of a field and the parameters it was produced with.
struct Snapshot {
    PhaseGridFunction field;
    double time = 0.0;
    ModelParams params;
};
void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);

}  // namespace bdb
