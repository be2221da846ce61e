#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "mua/errors.hpp"
#include "mua/marginal.hpp"

namespace mua {

// Accumulates samples; finalize() yields the empirical CDF.
class EcdfBuilder {
public:
    void insert(double x) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("EcdfBuilder: sample outside [0,1]");
        pending_.push_back(x);
    }

    [[nodiscard]] std::size_t count() const noexcept { return sorted_.size() + pending_.size(); }

    [[nodiscard]] StepCdf finalize() const {
        flush();
        if (sorted_.empty()) throw EmptyEstimatorError("EcdfBuilder: no samples");
        std::vector<double> pts;
        std::vector<double> cum;
        const double n = static_cast<double>(sorted_.size());
        for (std::size_t i = 0; i < sorted_.size(); ++i) {
            if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
            pts.push_back(sorted_[i]);
            cum.push_back(static_cast<double>(i + 1) / n);
        }
        return StepCdf(std::move(pts), std::move(cum));
    }

private:
    void flush() const {
        if (pending_.empty()) return;
        std::sort(pending_.begin(), pending_.end());
        const auto mid = static_cast<std::ptrdiff_t>(sorted_.size());
        sorted_.insert(sorted_.end(), pending_.begin(), pending_.end());
        std::inplace_merge(sorted_.begin(), sorted_.begin() + mid, sorted_.end());
        pending_.clear();
    }

    mutable std::vector<double> sorted_;
    mutable std::vector<double> pending_;
};

// Half-width of the DKW band holding with probability at least 1 - alpha.
inline double dkw_epsilon(std::size_t t, double alpha) {
    if (t == 0) throw DomainError("dkw_epsilon: t must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("dkw_epsilon: alpha must lie in (0,1]");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(t)));
}

// Supremum over [0,1] of |a - b|, exact when both are piecewise monotone
// between their breakpoints (checks each breakpoint and its left limit).
inline double sup_distance(const Marginal& a, const Marginal& b, std::vector<double> extra = {}) {
    std::vector<double> xs = std::move(extra);
    for (double x : a.breakpoints()) xs.push_back(x);
    for (double x : b.breakpoints()) xs.push_back(x);
    xs.push_back(0.0);
    xs.push_back(1.0);
    double d = 0.0;
    for (double x : xs) {
        if (x < 0.0 || x > 1.0) continue;
        d = std::max(d, std::abs(a.cdf(x) - b.cdf(x)));
        const double left = std::nextafter(x, -std::numeric_limits<double>::infinity());
        if (left >= 0.0) d = std::max(d, std::abs(a.cdf(left) - b.cdf(left)));
    }
    return d;
}

class CdfBand {
public:
    CdfBand(StepCdf center, double half_width) : center_(std::move(center)), eps_(half_width) {
        if (!(half_width >= 0.0)) throw DomainError("CdfBand: negative half-width");
    }

    static CdfBand dkw(const EcdfBuilder& samples, double alpha) {
        return CdfBand(samples.finalize(), dkw_epsilon(samples.count(), alpha));
    }

    [[nodiscard]] double lower(double x) const { return std::max(0.0, center_.cdf(x) - eps_); }
    [[nodiscard]] double upper(double x) const { return std::min(1.0, center_.cdf(x) + eps_); }
    [[nodiscard]] double half_width() const noexcept { return eps_; }
    [[nodiscard]] const StepCdf& center() const noexcept { return center_; }

    [[nodiscard]] bool contains(const Marginal& truth) const { return sup_distance(center_, truth) <= eps_; }

private:
    StepCdf center_;
    double eps_;
};

}  // namespace mua
