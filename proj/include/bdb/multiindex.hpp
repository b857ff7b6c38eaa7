#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace bdb {

using MultiIndex = std::vector<int>;

inline int order(std::span<const int> alpha) {
    return std::accumulate(alpha.begin(), alpha.end(), 0);
}

inline double factorial(int k) { return std::tgamma(static_cast<double>(k) + 1.0); }

inline double factorial(std::span<const int> alpha) {
    double out = 1.0;
    for (int a : alpha) out *= factorial(a);
    return out;
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::round(factorial(n) / (factorial(k) * factorial(n - k)));
}

/// Product of componentwise binomials.
inline double binomial(std::span<const int> alpha, std::span<const int> gamma) {
    double out = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) out *= binomial(alpha[i], gamma[i]);
    return out;
}

inline bool leq(std::span<const int> a, std::span<const int> b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

inline MultiIndex unit_index(int n, int i) {
    MultiIndex e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(i)] = 1;
    return e;
}

inline MultiIndex add(std::span<const int> a, std::span<const int> b) {
    MultiIndex out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

inline MultiIndex subtract(std::span<const int> a, std::span<const int> b) {
    MultiIndex out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

/// All multi-indices of length n with total order <= max_order, graded (order 0 first).
inline std::vector<MultiIndex> multi_indices_up_to(int n, int max_order) {
    std::vector<MultiIndex> out;
    for (int total = 0; total <= max_order; ++total) {
        MultiIndex cur(static_cast<std::size_t>(n), 0);
        // enumerate compositions of `total` into n parts, lexicographically descending
        auto rec = [&](auto&& self, int pos, int remaining) -> void {
            if (pos == n - 1) {
                cur[static_cast<std::size_t>(pos)] = remaining;
                out.push_back(cur);
                return;
            }
            for (int v = remaining; v >= 0; --v) {
                cur[static_cast<std::size_t>(pos)] = v;
                self(self, pos + 1, remaining - v);
            }
        };
        if (n == 0) {
            if (total == 0) out.emplace_back();
            continue;
        }
        rec(rec, 0, total);
    }
    return out;
}

/// All multi-indices of exactly the given order.
inline std::vector<MultiIndex> multi_indices_of_order(int n, int k) {
    std::vector<MultiIndex> out;
    for (auto& a : multi_indices_up_to(n, k))
        if (order(a) == k) out.push_back(a);
    return out;
}

/// All gamma with gamma <= bound componentwise (box enumeration).
inline std::vector<MultiIndex> multi_indices_in_box(std::span<const int> bound) {
    std::vector<MultiIndex> out;
    MultiIndex cur(bound.size(), 0);
    if (bound.empty()) {
        out.push_back(cur);
        return out;
    }
    while (true) {
        out.push_back(cur);
        std::size_t i = 0;
        while (i < cur.size()) {
            if (cur[i] < bound[i]) {
                ++cur[i];
                break;
            }
            cur[i] = 0;
            ++i;
        }
        if (i == cur.size()) break;
    }
    return out;
}

}  // namespace bdb
