#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "mua/errors.hpp"

namespace mua {

namespace detail {

inline void check_order_args(std::size_t N, std::size_t k, double q) {
    if (N == 0 || k < 1 || k > N) throw DomainError("order statistic index out of range");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("order statistic probability outside [0,1]");
}

}  // namespace detail

// P(k-th largest of N i.i.d. draws <= x) as a function of q = F(x):
// at most k-1 of the N draws exceed x.
inline double order_stat_cdf(std::size_t N, std::size_t k, double q) {
    detail::check_order_args(N, k, q);
    // q^i and (1-q)^i by repeated multiplication; pow only for large N.
    constexpr std::size_t kSmall = 64;
    double qp[kSmall + 1], rp[kSmall + 1];
    const bool small = N <= kSmall;
    if (small) {
        qp[0] = rp[0] = 1.0;
        for (std::size_t i = 1; i <= N; ++i) {
            qp[i] = qp[i - 1] * q;
            rp[i] = rp[i - 1] * (1.0 - q);
        }
    }
    auto term = [&](std::size_t j, double binom) {
        if (small) return binom * rp[j] * qp[N - j];
        return binom * std::pow(1.0 - q, static_cast<double>(j)) * std::pow(q, static_cast<double>(N - j));
    };
    double binom = 1.0;  // C(N, j)
    double head = 0.0, tail = 0.0;
    for (std::size_t j = 0; j <= N; ++j) {
        (j < k ? head : tail) += term(j, binom);
        binom = binom * static_cast<double>(N - j) / static_cast<double>(j + 1);
    }
    // Sum whichever side is smaller for accuracy near 0 and near 1.
    return std::clamp(head <= tail ? head : 1.0 - tail, 0.0, 1.0);
}

// d/dq order_stat_cdf = N C(N-1, k-1) q^(N-k) (1-q)^(k-1).
inline double order_stat_density(std::size_t N, std::size_t k, double q) {
    detail::check_order_args(N, k, q);
    double c = static_cast<double>(N);
    for (std::size_t i = 1; i < k; ++i) c = c * static_cast<double>(N - i) / static_cast<double>(i);
    return c * std::pow(q, static_cast<double>(N - k)) * std::pow(1.0 - q, static_cast<double>(k - 1));
}

// Inverse of order_stat_cdf in q: Newton steps kept inside a shrinking
// bisection bracket.
inline double order_stat_inverse(std::size_t N, std::size_t k, double p, double tol = 1e-12) {
    detail::check_order_args(N, k, p);
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0, q = p;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double f = order_stat_cdf(N, k, q) - p;
        if (f < 0.0)
            lo = q;
        else
            hi = q;
        if (f == 0.0) return q;
        const double d = order_stat_density(N, k, q);
        double next = d > 0.0 ? q - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - q) <= 0.25 * tol) return next;
        q = next;
    }
    return 0.5 * (lo + hi);
}

// Maps a CDF value of the k-th order statistic to the k'-th one.
inline double order_stat_transfer(std::size_t N, std::size_t k, std::size_t k_prime, double q) {
    detail::check_order_args(N, k, q);
    detail::check_order_args(N, k_prime, q);
    if (k == k_prime) return q;
    return order_stat_cdf(N, k_prime, order_stat_inverse(N, k, q));
}

}  // namespace mua
