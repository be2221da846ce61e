#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "mua/auction.hpp"
#include "mua/marginal.hpp"

namespace mua {

struct BandedEstimate {
    std::optional<double> estimate;  // empty when coverage is zero
    std::size_t coverage = 0;
};

// Estimator of each marginal F_k from interval-censored observations.
// Coverage t_k(x) counts stored intervals (lo, hi] containing x; the estimate
// is the fraction of those rounds in which beta_k <= x is known.
// All counts are rank queries on sorted endpoint arrays, so a query is O(log n).
class BandedCdfState {
public:
    explicit BandedCdfState(std::size_t K) : ranks_(K) {
        if (K == 0) throw DimensionError("BandedCdfState: K must be positive");
    }

    [[nodiscard]] std::size_t K() const noexcept { return ranks_.size(); }

    void observe(const BanditObservation& obs) {
        require_same_size(obs.size(), K(), "BandedCdfState::observe");
        for (std::size_t i = 0; i < obs.size(); ++i) record(obs.rank_of_slot(i), obs.slots[i]);
    }

    // Records one censored observation of the rank-k opposing bid.
    void record(std::size_t k, const SlotObservation& s) {
        Rank& r = rank(k);
        if (!(s.lo < s.hi)) return;  // empty interval carries no information
        r.all_lo.add(s.lo);
        r.all_hi.add(s.hi);
        if (s.status == SlotStatus::Below) {
            r.below_lo.add(s.lo);
            r.below_hi.add(s.hi);
        } else if (s.status == SlotStatus::At) {
            r.at_val.add(s.value);
            r.at_hi.add(s.hi);
        }
    }

    [[nodiscard]] std::size_t coverage(std::size_t k, double x) const {
        const Rank& r = rank(k);
        return r.all_lo.count_less(x) - r.all_hi.count_less(x);
    }

    [[nodiscard]] BandedEstimate eval(std::size_t k, double x) const {
        const Rank& r = rank(k);
        BandedEstimate out;
        out.coverage = coverage(k, x);
        if (out.coverage == 0) return out;
        const std::size_t known = (r.below_lo.count_less(x) - r.below_hi.count_less(x)) +
                                  (r.at_val.count_less_equal(x) - r.at_hi.count_less(x));
        out.estimate = static_cast<double>(known) / static_cast<double>(out.coverage);
        return out;
    }

    // Points where some estimate or coverage may change.
    [[nodiscard]] std::vector<double> breakpoints(std::size_t k) const {
        const Rank& r = rank(k);
        std::vector<double> pts;
        for (const Sorted* s : {&r.all_lo, &r.all_hi, &r.at_val}) {
            const auto& v = s->values();
            pts.insert(pts.end(), v.begin(), v.end());
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

    [[nodiscard]] std::vector<double> all_breakpoints() const {
        std::vector<double> pts;
        for (std::size_t k = 1; k <= K(); ++k) {
            auto b = breakpoints(k);
            pts.insert(pts.end(), b.begin(), b.end());
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

private:
    // Sorted multiset with lazy merging of new values.
    class Sorted {
    public:
        void add(double x) { pending_.push_back(x); }
        [[nodiscard]] std::size_t count_less(double x) const {
            flush();
            return static_cast<std::size_t>(std::lower_bound(v_.begin(), v_.end(), x) - v_.begin());
        }
        [[nodiscard]] std::size_t count_less_equal(double x) const {
            flush();
            return static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), x) - v_.begin());
        }
        [[nodiscard]] const std::vector<double>& values() const {
            flush();
            return v_;
        }

    private:
        void flush() const {
            if (pending_.empty()) return;
            std::sort(pending_.begin(), pending_.end());
            const auto mid = static_cast<std::ptrdiff_t>(v_.size());
            v_.insert(v_.end(), pending_.begin(), pending_.end());
            std::inplace_merge(v_.begin(), v_.begin() + mid, v_.end());
            pending_.clear();
        }
        mutable std::vector<double> v_;
        mutable std::vector<double> pending_;
    };

    struct Rank {
        Sorted all_lo, all_hi, below_lo, below_hi, at_val, at_hi;
    };

    Rank& rank(std::size_t k) {
        if (k < 1 || k > ranks_.size()) throw std::out_of_range("BandedCdfState: rank out of range");
        return ranks_[k - 1];
    }
    const Rank& rank(std::size_t k) const {
        if (k < 1 || k > ranks_.size()) throw std::out_of_range("BandedCdfState: rank out of range");
        return ranks_[k - 1];
    }

    std::vector<Rank> ranks_;
};

// Piecewise-constant snapshot of one banded marginal over [0,1]. Pieces with
// zero coverage take the nearest covered value to the right, else to the
// left, else 0.
struct BandedSnapshot {
    std::vector<double> points;
    // Per point: value and coverage at the point, then on the open cell after it.
    std::vector<double> at, after;
    std::vector<std::size_t> at_cov, after_cov;
    double before = 0.0;
    std::size_t before_cov = 0;
};

namespace detail {

// Evaluates f on every piece defined by `points` inside [0,1].
template <class Eval>
void for_each_piece(const std::vector<double>& points, Eval&& f) {
    const std::size_t m = points.size();
    for (std::size_t j = 0; j < m; ++j) {
        f(j, points[j], false);
        const double next = j + 1 < m ? points[j + 1] : std::max(points[j], 1.0) + 1.0;
        f(j, 0.5 * (points[j] + next), true);
    }
}

// Fills uncovered entries of a sequence ordered along the x-axis.
inline void fill_uncovered(std::vector<double>& val, const std::vector<bool>& covered) {
    const std::size_t n = val.size();
    std::optional<double> right;
    std::vector<std::optional<double>> next_right(n);
    for (std::size_t i = n; i-- > 0;) {
        if (covered[i]) right = val[i];
        next_right[i] = right;
    }
    std::optional<double> left;
    for (std::size_t i = 0; i < n; ++i) {
        if (covered[i]) {
            left = val[i];
        } else if (next_right[i]) {
            val[i] = *next_right[i];
        } else {
            val[i] = left.value_or(0.0);
        }
    }
}

}  // namespace detail

// Builds the filled estimate of rank k over the given sorted points (which
// must include every breakpoint of rank k).
inline PiecewiseConstant banded_profile_marginal(const BandedCdfState& s, std::size_t k,
                                                 std::vector<double> points) {
    std::vector<double> seq;  // before, at_0, after_0, at_1, after_1, ...
    std::vector<bool> cov;
    const double first = points.empty() ? 1.0 : points.front();
    if (points.empty() || first > 0.0) {
        const auto e = s.eval(k, points.empty() ? 0.5 : 0.5 * first);
        seq.push_back(e.estimate.value_or(0.0));
        cov.push_back(e.coverage > 0);
    } else {
        seq.push_back(0.0);
        cov.push_back(false);
    }
    detail::for_each_piece(points, [&](std::size_t, double x, bool) {
        const auto e = s.eval(k, x);
        seq.push_back(e.estimate.value_or(0.0));
        cov.push_back(e.coverage > 0);
    });
    detail::fill_uncovered(seq, cov);
    const std::size_t m = points.size();
    std::vector<double> at(m), after(m);
    for (std::size_t j = 0; j < m; ++j) {
        at[j] = seq[1 + 2 * j];
        after[j] = seq[2 + 2 * j];
    }
    return PiecewiseConstant(std::move(points), std::move(at), std::move(after), seq[0]);
}

inline CdfProfile banded_profile(const BandedCdfState& s) {
    std::vector<MarginalPtr> ms;
    for (std::size_t k = 1; k <= s.K(); ++k)
        ms.push_back(std::make_shared<PiecewiseConstant>(banded_profile_marginal(s, k, s.breakpoints(k))));
    return CdfProfile(std::move(ms));
}

}  // namespace mua
