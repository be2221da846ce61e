#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "mua/errors.hpp"

namespace mua {

// A bounded function on [0,1] used as (an estimate of) a marginal CDF.
// Estimates need not be monotone; all operations stay well defined.
class Marginal {
public:
    virtual ~Marginal() = default;

    [[nodiscard]] virtual double cdf(double x) const = 0;
    // Riemann integral of the function over [0, x].
    [[nodiscard]] virtual double integral_to(double x) const = 0;
    // Points where the function jumps or changes formula.
    [[nodiscard]] virtual std::vector<double> breakpoints() const = 0;

    // Stieltjes integral of t dF(t) over [0, y].
    [[nodiscard]] virtual double moment(double y) const { return y * cdf(y) - integral_to(y); }

    [[nodiscard]] double integral(double a, double b) const { return integral_to(b) - integral_to(a); }
    // Stieltjes integral of t dF(t) over (a, b].
    [[nodiscard]] double stieltjes(double a, double b) const { return moment(b) - moment(a); }

    // Evaluates cdf and moment on an ascending grid.
    virtual void tabulate(std::span<const double> grid, std::span<double> cdf_out,
                          std::span<double> moment_out) const {
        for (std::size_t m = 0; m < grid.size(); ++m) {
            cdf_out[m] = cdf(grid[m]);
            moment_out[m] = moment(grid[m]);
        }
    }
};

using MarginalPtr = std::shared_ptr<const Marginal>;

// Piecewise-constant function with finitely many points p_0 < ... < p_{m-1}:
// value `before` on [0, p_0), at[j] at p_j, after[j] on (p_j, p_{j+1}).
// Right-continuous step CDFs have at == after; censored-interval estimates
// use left-open pieces where they differ.
class PiecewiseConstant : public Marginal {
public:
    PiecewiseConstant() = default;

    PiecewiseConstant(std::vector<double> points, std::vector<double> at, std::vector<double> after,
                      double before = 0.0)
        : points_(std::move(points)), at_(std::move(at)), after_(std::move(after)), before_(before) {
        if (at_.size() != points_.size() || after_.size() != points_.size())
            throw DimensionError("PiecewiseConstant: size mismatch");
        for (std::size_t j = 1; j < points_.size(); ++j)
            if (!(points_[j - 1] < points_[j]))
                throw DomainError("PiecewiseConstant: points must be strictly increasing");
        build();
    }

    static PiecewiseConstant constant(double c) { return PiecewiseConstant({}, {}, {}, c); }

    [[nodiscard]] double cdf(double x) const override {
        const std::ptrdiff_t j = locate(x);
        if (j < 0) return before_;
        return points_[j] == x ? at_[j] : after_[j];
    }

    [[nodiscard]] double integral_to(double x) const override {
        if (x <= 0.0) return 0.0;
        const std::ptrdiff_t j = locate(x);
        if (j < 0) return before_ * x;
        return area_[j] + after_[j] * (x - points_[j]);
    }

    [[nodiscard]] double moment(double y) const override {
        const std::ptrdiff_t j = locate(y);
        if (j < 0) return 0.0;
        if (points_[j] == y) return jump_moment_[j] + y * (at_[j] - left_limit(j));
        return jump_moment_[j + 1];
    }

    [[nodiscard]] std::vector<double> breakpoints() const override { return points_; }

    void tabulate(std::span<const double> grid, std::span<double> cdf_out,
                  std::span<double> moment_out) const override {
        std::ptrdiff_t j = -1;
        const auto m = static_cast<std::ptrdiff_t>(points_.size());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double x = grid[g];
            while (j + 1 < m && points_[j + 1] <= x) ++j;
            if (j < 0) {
                cdf_out[g] = before_;
                moment_out[g] = 0.0;
            } else if (points_[j] == x) {
                cdf_out[g] = at_[j];
                moment_out[g] = jump_moment_[j] + x * (at_[j] - left_limit(j));
            } else {
                cdf_out[g] = after_[j];
                moment_out[g] = jump_moment_[j + 1];
            }
        }
    }

    [[nodiscard]] const std::vector<double>& points() const noexcept { return points_; }
    [[nodiscard]] const std::vector<double>& at_values() const noexcept { return at_; }
    [[nodiscard]] const std::vector<double>& after_values() const noexcept { return after_; }
    [[nodiscard]] double before_value() const noexcept { return before_; }

private:
    [[nodiscard]] std::ptrdiff_t locate(double x) const {
        return std::upper_bound(points_.begin(), points_.end(), x) - points_.begin() - 1;
    }
    [[nodiscard]] double left_limit(std::ptrdiff_t j) const { return j == 0 ? before_ : after_[j - 1]; }

    void build() {
        const std::size_t m = points_.size();
        area_.assign(m, 0.0);
        jump_moment_.assign(m + 1, 0.0);
        double acc = 0.0;
        double prev_x = 0.0;
        double prev_v = before_;
        for (std::size_t j = 0; j < m; ++j) {
            acc += prev_v * (std::max(points_[j], 0.0) - prev_x);
            area_[j] = acc;
            prev_x = std::max(points_[j], 0.0);
            prev_v = after_[j];
            jump_moment_[j + 1] = jump_moment_[j] + points_[j] * (after_[j] - left_limit(static_cast<std::ptrdiff_t>(j)));
        }
    }

    std::vector<double> points_, at_, after_;
    double before_ = 0.0;
    std::vector<double> area_;         // integral over [0, p_j]
    std::vector<double> jump_moment_;  // sum of p_i * jump_i over i < j
};

// Right-continuous step CDF: value cum_probs[j] on [jump_points[j], jump_points[j+1]).
class StepCdf : public PiecewiseConstant {
public:
    StepCdf() = default;
    StepCdf(std::vector<double> jump_points, std::vector<double> cum_probs)
        : PiecewiseConstant(jump_points, cum_probs, cum_probs, 0.0) {}

    [[nodiscard]] const std::vector<double>& jump_points() const noexcept { return points(); }
    [[nodiscard]] const std::vector<double>& cum_probs() const noexcept { return at_values(); }
};

// Closed-form CDF with a cached integral table. Breakpoints mark
// discontinuities or formula changes; the function must be smooth between them.
class AnalyticMarginal : public Marginal {
public:
    AnalyticMarginal(std::function<double(double)> F, std::vector<double> breakpoints, std::size_t cells = 1024)
        : F_(std::move(F)), breaks_(std::move(breakpoints)) {
        std::sort(breaks_.begin(), breaks_.end());
        breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
        knots_.reserve(cells + breaks_.size() + 2);
        for (std::size_t c = 0; c <= cells; ++c) knots_.push_back(static_cast<double>(c) / static_cast<double>(cells));
        for (double b : breaks_)
            if (b > 0.0 && b < 1.0) knots_.push_back(b);
        std::sort(knots_.begin(), knots_.end());
        knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
        cum_.assign(knots_.size(), 0.0);
        for (std::size_t j = 1; j < knots_.size(); ++j) cum_[j] = cum_[j - 1] + piece(knots_[j - 1], knots_[j]);
    }

    [[nodiscard]] double cdf(double x) const override { return F_(x); }

    [[nodiscard]] double integral_to(double x) const override {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return cum_.back() + (x - 1.0) * F_(1.0);
        const auto j = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin() - 1);
        return cum_[j] + piece(knots_[j], x);
    }

    [[nodiscard]] std::vector<double> breakpoints() const override { return breaks_; }

private:
    [[nodiscard]] double piece(double a, double b) const {
        if (!(b > a)) return 0.0;
        return boost::math::quadrature::gauss<double, 15>::integrate(F_, a, b);
    }

    std::function<double(double)> F_;
    std::vector<double> breaks_;
    std::vector<double> knots_;
    std::vector<double> cum_;
};

// Marginals F_1..F_K of the opposing bids; rank 1 is the highest opposing bid.
class CdfProfile {
public:
    CdfProfile() = default;
    explicit CdfProfile(std::vector<MarginalPtr> marginals) : m_(std::move(marginals)) {
        for (const auto& p : m_)
            if (!p) throw std::invalid_argument("CdfProfile: null marginal");
    }

    [[nodiscard]] std::size_t K() const noexcept { return m_.size(); }
    // 1-based rank.
    [[nodiscard]] const Marginal& rank(std::size_t k) const {
        if (k < 1 || k > m_.size()) throw std::out_of_range("CdfProfile: rank " + std::to_string(k) + " out of range");
        return *m_[k - 1];
    }
    [[nodiscard]] const std::vector<MarginalPtr>& marginals() const noexcept { return m_; }

private:
    std::vector<MarginalPtr> m_;
};

}  // namespace mua
