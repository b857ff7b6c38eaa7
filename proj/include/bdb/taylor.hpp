#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "bdb/multiindex.hpp"

namespace bdb {

/// Monomial bookkeeping shared by all series of the same (variables, degree).
class TaylorBasis {
public:
    TaylorBasis(int variables, int degree);

    int variables() const { return variables_; }
    int degree() const { return degree_; }
    std::size_t size() const { return monomials_.size(); }
    const MultiIndex& monomial(std::size_t i) const { return monomials_[i]; }
    /// Position of a monomial, or size() if its degree exceeds the truncation.
    std::size_t index_of(std::span<const int> gamma) const;

    struct Term {
        std::size_t a, b, out;
    };
    /// All (a, b, a+b) index triples with total degree within the truncation.
    const std::vector<Term>& product_table() const { return table_; }

private:
    int variables_;
    int degree_;
    std::vector<MultiIndex> monomials_;
    std::vector<std::size_t> lookup_;  // dense base-(degree+1) code -> index
    std::vector<Term> table_;
    std::size_t code(std::span<const int> gamma) const;
};

/// Multivariate power series truncated at a total degree. Used to get exact
/// high-order derivatives of the equilibrium without symbolic algebra.
class TaylorSeries {
public:
    explicit TaylorSeries(std::shared_ptr<const TaylorBasis> basis);
    static TaylorSeries constant(std::shared_ptr<const TaylorBasis> basis, double c);

    const TaylorBasis& basis() const { return *basis_; }
    std::shared_ptr<const TaylorBasis> basis_ptr() const { return basis_; }
    double& coefficient(std::size_t i) { return coeffs_[i]; }
    double coefficient(std::size_t i) const { return coeffs_[i]; }
    double value() const { return coeffs_[0]; }
    /// Partial derivative d^gamma at the expansion point (gamma! times the coefficient).
    double derivative(std::span<const int> gamma) const;

    TaylorSeries& operator+=(const TaylorSeries& o);
    TaylorSeries& operator*=(double s);
    TaylorSeries operator+(const TaylorSeries& o) const;
    TaylorSeries operator*(const TaylorSeries& o) const;
    TaylorSeries operator*(double s) const;

    TaylorSeries exp() const;
    TaylorSeries reciprocal() const;

private:
    std::shared_ptr<const TaylorBasis> basis_;
    std::vector<double> coeffs_;
    TaylorSeries nilpotent_part() const;
};

}  // namespace bdb
