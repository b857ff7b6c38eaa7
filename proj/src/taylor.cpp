#include "bdb/taylor.hpp"

#include <cmath>

#include "bdb/error.hpp"

namespace bdb {

TaylorBasis::TaylorBasis(int variables, int degree) : variables_(variables), degree_(degree) {
    if (variables < 1 || degree < 0)
        throw Error(ErrorCode::kInvalidArgument, "taylor basis needs >= 1 variable and degree >= 0");
    monomials_ = multi_indices_up_to(variables, degree);
    std::size_t codes = 1;
    for (int i = 0; i < variables; ++i) codes *= static_cast<std::size_t>(degree + 1);
    lookup_.assign(codes, monomials_.size());
    for (std::size_t i = 0; i < monomials_.size(); ++i) lookup_[code(monomials_[i])] = i;
    for (std::size_t a = 0; a < monomials_.size(); ++a) {
        for (std::size_t b = 0; b < monomials_.size(); ++b) {
            if (order(monomials_[a]) + order(monomials_[b]) > degree) continue;
            table_.push_back({a, b, lookup_[code(add(monomials_[a], monomials_[b]))]});
        }
    }
}

std::size_t TaylorBasis::code(std::span<const int> gamma) const {
    std::size_t c = 0;
    for (int g : gamma) c = c * static_cast<std::size_t>(degree_ + 1) + static_cast<std::size_t>(g);
    return c;
}

std::size_t TaylorBasis::index_of(std::span<const int> gamma) const {
    if (static_cast<int>(gamma.size()) != variables_) return size();
    for (int g : gamma)
        if (g < 0) return size();
    if (order(gamma) > degree_) return size();
    return lookup_[code(gamma)];
}

TaylorSeries::TaylorSeries(std::shared_ptr<const TaylorBasis> basis)
    : basis_(std::move(basis)), coeffs_(basis_->size(), 0.0) {}

TaylorSeries TaylorSeries::constant(std::shared_ptr<const TaylorBasis> basis, double c) {
    TaylorSeries s(std::move(basis));
    s.coeffs_[0] = c;
    return s;
}

double TaylorSeries::derivative(std::span<const int> gamma) const {
    const std::size_t i = basis_->index_of(gamma);
    if (i == basis_->size())
        throw Error(ErrorCode::kOrderExceedsTruncation, "derivative order exceeds series degree");
    return factorial(gamma) * coeffs_[i];
}

TaylorSeries& TaylorSeries::operator+=(const TaylorSeries& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
}

TaylorSeries& TaylorSeries::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
}

TaylorSeries TaylorSeries::operator+(const TaylorSeries& o) const {
    TaylorSeries out = *this;
    out += o;
    return out;
}

TaylorSeries TaylorSeries::operator*(double s) const {
    TaylorSeries out = *this;
    out *= s;
    return out;
}

TaylorSeries TaylorSeries::operator*(const TaylorSeries& o) const {
    TaylorSeries out(basis_);
    for (const auto& t : basis_->product_table()) out.coeffs_[t.out] += coeffs_[t.a] * o.coeffs_[t.b];
    return out;
}

TaylorSeries TaylorSeries::nilpotent_part() const {
    TaylorSeries s = *this;
    s.coeffs_[0] = 0.0;
    return s;
}

// exp(c + s) = e^c * sum_k s^k / k!, exact because s^k vanishes beyond the degree.
TaylorSeries TaylorSeries::exp() const {
    const TaylorSeries s = nilpotent_part();
    TaylorSeries sum = constant(basis_, 1.0);
    TaylorSeries term = constant(basis_, 1.0);
    for (int k = 1; k <= basis_->degree(); ++k) {
        term = term * s;
        term *= 1.0 / k;
        sum += term;
    }
    sum *= std::exp(coeffs_[0]);
    return sum;
}

// 1/(c + s) = (1/c) * sum_k (-s/c)^k.
TaylorSeries TaylorSeries::reciprocal() const {
    const double c = coeffs_[0];
    if (c == 0.0) throw Error(ErrorCode::kInvalidArgument, "reciprocal of a series with zero constant term");
    const TaylorSeries s = nilpotent_part() * (-1.0 / c);
    TaylorSeries sum = constant(basis_, 1.0);
    TaylorSeries term = constant(basis_, 1.0);
    for (int k = 1; k <= basis_->degree(); ++k) {
        term = term * s;
        sum += term;
    }
    sum *= 1.0 / c;
    return sum;
}

}  // namespace bdb
