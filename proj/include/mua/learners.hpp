#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mua/auction.hpp"
#include "mua/banded_cdf.hpp"
#include "mua/ecdf.hpp"
#include "mua/order_stats.hpp"
#include "mua/utility.hpp"

namespace mua {

struct FullFeedback {
    BidVector beta;
};
struct BanditFeedback {
    BanditObservation obs;
};
struct UtilityFeedback {
    double utility = 0.0;
};
using Feedback = std::variant<FullFeedback, BanditFeedback, UtilityFeedback>;

enum class FeedbackKind { Full, Bandit, Utility };

class Learner {
public:
    virtual ~Learner() = default;
    // Bid for round t (1-based).
    [[nodiscard]] virtual BidVector next_bid(std::size_t t) = 0;
    virtual void observe(const Feedback& fb) = 0;
    [[nodiscard]] virtual FeedbackKind required_feedback() const = 0;
    // Whether the bid sequence depends on the horizon T.
    [[nodiscard]] virtual bool horizon_dependent() const { return false; }
    [[nodiscard]] virtual std::string name() const = 0;
};

// Decides when an estimate-based bid is recomputed. ratio = 0 recomputes
// every round; otherwise after `warmup` observations the bid is recomputed
// once the observation count grows by the factor (1 + ratio).
struct RefreshPolicy {
    double ratio = 0.0;
    std::size_t warmup = 32;

    [[nodiscard]] bool due(std::size_t n, std::size_t last) const {
        if (ratio <= 0.0 || n <= warmup) return true;
        return static_cast<double>(n) >= static_cast<double>(last) * (1.0 + ratio);
    }
};

namespace detail {

template <class T>
const T& expect_feedback(const Feedback& fb, const char* who) {
    if (const T* p = std::get_if<T>(&fb)) return *p;
    throw std::invalid_argument(std::string(who) + ": unexpected feedback type");
}

inline BidConstraints truthful_constraints(AuctionFormat f) {
    BidConstraints c;
    c.first_coordinate_truthful = f == AuctionFormat::Uniform;
    return c;
}

inline CdfProfile constant_profile(std::size_t K, double value) {
    std::vector<MarginalPtr> ms(K, std::make_shared<PiecewiseConstant>(PiecewiseConstant::constant(value)));
    return CdfProfile(std::move(ms));
}

inline std::size_t default_exploration(std::size_t K, std::size_t T) {
    const double Kd = static_cast<double>(K), Td = static_cast<double>(T);
    return std::max(K, static_cast<std::size_t>(std::ceil(std::cbrt(Kd * Kd * Td * Td) - 1e-9)));
}

}  // namespace detail

// Follow-the-empirical-leader with full observation of the opposing bids.
class FullInfoLearner final : public Learner {
public:
    FullInfoLearner(AuctionFormat format, ValuationVector v, RefreshPolicy refresh = {})
        : format_(format), v_(std::move(v)), refresh_(refresh), samples_(v_.size()) {}

    BidVector next_bid(std::size_t) override {
        const std::size_t n = samples_[0].count();
        if (n == 0) return as_bid(v_);
        if (!bid_ || refresh_.due(n, last_n_)) {
            bid_ = maximize(format_, empirical_profile(), v_, detail::truthful_constraints(format_)).b_star;
            last_n_ = n;
        }
        return *bid_;
    }

    void observe(const Feedback& fb) override {
        const auto& beta = detail::expect_feedback<FullFeedback>(fb, "FullInfoLearner").beta;
        require_same_size(beta.size(), v_.size(), "FullInfoLearner::observe");
        for (std::size_t k = 0; k < beta.size(); ++k) samples_[k].insert(beta[k]);
    }

    [[nodiscard]] CdfProfile empirical_profile() const {
        std::vector<MarginalPtr> ms;
        for (const auto& s : samples_) ms.push_back(std::make_shared<StepCdf>(s.finalize()));
        return CdfProfile(std::move(ms));
    }

    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Full; }
    [[nodiscard]] std::string name() const override { return "full_info"; }

private:
    AuctionFormat format_;
    ValuationVector v_;
    RefreshPolicy refresh_;
    std::vector<EcdfBuilder> samples_;
    std::optional<BidVector> bid_;
    std::size_t last_n_ = 0;
};

// Bid with the first k entries at 1 and the rest at 0 (k 1-based).
inline BidVector exploration_bid(std::size_t K, std::size_t k) {
    std::vector<double> b(K, 0.0);
    std::fill(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(std::min(k, K)), 1.0);
    return BidVector(std::move(b));
}

// True when every rank is covered at every point of (0,1].
inline bool covers_unit_interval(const BandedCdfState& s) {
    for (std::size_t k = 1; k <= s.K(); ++k) {
        const auto pts = s.breakpoints(k);
        if (pts.empty()) return false;
        if (pts.front() > 0.0 && s.coverage(k, 0.5 * pts.front()) == 0) return false;
        bool ok = true;
        detail::for_each_piece(pts, [&](std::size_t, double x, bool) {
            if (x > 0.0 && x <= 1.0 && s.coverage(k, x) == 0) ok = false;
        });
        if (!ok) return false;
    }
    return true;
}

// Uniform-price explore-then-commit under bandit feedback.
class EtcLearner final : public Learner {
public:
    EtcLearner(ValuationVector v, std::size_t T, std::optional<std::size_t> exploration = std::nullopt)
        : v_(std::move(v)), T_(T), t_expl_(exploration.value_or(detail::default_exploration(v_.size(), T))),
          banded_(v_.size()) {}

    BidVector next_bid(std::size_t t) override {
        const std::size_t K = v_.size();
        if (t <= t_expl_) return exploration_bid(K, (t - 1) % K + 1);
        if (!committed_) {
            if (!covers_unit_interval(banded_))
                throw std::logic_error("EtcLearner: banded estimate lacks coverage at commit time");
            committed_ = maximize(AuctionFormat::Uniform, banded_profile(banded_), v_,
                                  detail::truthful_constraints(AuctionFormat::Uniform))
                             .b_star;
        }
        return *committed_;
    }

    void observe(const Feedback& fb) override {
        banded_.observe(detail::expect_feedback<BanditFeedback>(fb, "EtcLearner").obs);
    }

    [[nodiscard]] std::size_t exploration_rounds() const noexcept { return t_expl_; }
    [[nodiscard]] const BandedCdfState& banded() const noexcept { return banded_; }
    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Bandit; }
    [[nodiscard]] bool horizon_dependent() const override { return true; }
    [[nodiscard]] std::string name() const override { return "etc"; }

private:
    ValuationVector v_;
    std::size_t T_;
    std::size_t t_expl_;
    BandedCdfState banded_;
    std::optional<BidVector> committed_;
};

// Successive elimination over per-coordinate bid intervals (uniform format,
// bandit feedback).
class IntervalRefineLearner final : public Learner {
public:
    IntervalRefineLearner(ValuationVector v, std::size_t T, RefreshPolicy refresh = {},
                          std::optional<std::size_t> exploration = std::nullopt)
        : v_(std::move(v)), T_(T), t_expl_(exploration.value_or(detail::default_exploration(v_.size(), T))),
          refresh_(refresh), banded_(v_.size()), boxes_(v_.size(), Interval{}),
          profile_(detail::constant_profile(v_.size(), 0.0)) {}

    BidVector next_bid(std::size_t t) override {
        const std::size_t K = v_.size();
        std::vector<std::optional<double>> pins(K);
        if (t <= t_expl_ && gap_ <= 0.0) {
            const std::size_t k = (t - 1) % K + 1;
            pins[k - 1] = boxes_[k - 1].hi;
            if (k < K) pins[k] = boxes_[k].lo;
        } else if (K > 1) {
            const std::size_t kt = (t - 1) % (2 * (K - 1)) + 2;
            const std::size_t k = kt / 2;
            pins[k - 1] = kt % 2 == 0 ? boxes_[k - 1].hi : boxes_[k - 1].lo;
        }
        return solve(pins);
    }

    void observe(const Feedback& fb) override {
        banded_.observe(detail::expect_feedback<BanditFeedback>(fb, "IntervalRefineLearner").obs);
        ++rounds_;
        if (refresh_.due(rounds_, last_refine_)) {
            refine_intervals(rounds_);
            last_refine_ = rounds_;
        }
    }

    // Shrinks the boxes to the convex hull of the estimated near-optimal set.
    void refine_intervals(std::size_t t) { refine_intervals(t, banded_profile(banded_)); }

    // Same with an externally supplied estimate, which is also used for bidding.
    void refine_intervals(std::size_t t, CdfProfile estimate) {
        const std::size_t K = v_.size();
        require_same_size(estimate.K(), K, "IntervalRefineLearner::refine_intervals");
        profile_ = std::move(estimate);
        cache_.clear();
        BidConstraints c;
        c.boxes = boxes_;
        SeparableObjective obj(AuctionFormat::Uniform, profile_, v_, candidate_grid(profile_, v_, c), c);
        const std::size_t rounds_per_rank = t / K;
        const double width =
            rounds_per_rank == 0
                ? std::numeric_limits<double>::infinity()
                : std::sqrt(std::log(2.0 * static_cast<double>(T_) * static_cast<double>(T_)) /
                            (2.0 * static_cast<double>(rounds_per_rank)));
        const auto refined = superlevel_hull(obj, obj.max_value() - width);
        for (std::size_t k = 0; k < K; ++k) {
            boxes_[k].lo = std::max(boxes_[k].lo, refined.boxes[k].lo);
            boxes_[k].hi = std::min(boxes_[k].hi, refined.boxes[k].hi);
        }
        gap_ = K == 1 ? -1.0 : std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < K; ++k) gap_ = std::min(gap_, boxes_[k].lo - boxes_[k + 1].hi);
    }

    [[nodiscard]] const std::vector<Interval>& intervals() const noexcept { return boxes_; }
    [[nodiscard]] double gap() const noexcept { return gap_; }
    [[nodiscard]] std::size_t exploration_rounds() const noexcept { return t_expl_; }
    [[nodiscard]] std::size_t fallback_count() const noexcept { return fallbacks_; }
    [[nodiscard]] const BandedCdfState& banded() const noexcept { return banded_; }
    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Bandit; }
    [[nodiscard]] bool horizon_dependent() const override { return true; }
    [[nodiscard]] std::string name() const override { return "interval_refine"; }

private:
    BidVector solve(const std::vector<std::optional<double>>& pins) {
        std::vector<double> key;
        for (const auto& p : pins) key.push_back(p ? *p : -1.0);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        BidConstraints c;
        c.boxes = boxes_;
        c.pins = pins;
        std::optional<BidVector> b;
        try {
            b = maximize(AuctionFormat::Uniform, profile_, v_, c).b_star;
        } catch (const ConstraintError&) {
            ++fallbacks_;
            c.pins.clear();
            try {
                b = maximize(AuctionFormat::Uniform, profile_, v_, c).b_star;
            } catch (const ConstraintError&) {
                b = maximize(AuctionFormat::Uniform, profile_, v_).b_star;
            }
        }
        cache_.emplace(std::move(key), *b);
        return *b;
    }

    ValuationVector v_;
    std::size_t T_;
    std::size_t t_expl_;
    RefreshPolicy refresh_;
    BandedCdfState banded_;
    std::vector<Interval> boxes_;
    double gap_ = -std::numeric_limits<double>::infinity();
    CdfProfile profile_;
    std::map<std::vector<double>, BidVector> cache_;
    std::size_t rounds_ = 0;
    std::size_t last_refine_ = 0;
    std::size_t fallbacks_ = 0;
};

// Estimate of every marginal from the best-covered rank via the
// order-statistic transfer map (i.i.d. opponents, known N).
inline CdfProfile transfer_profile(const BandedCdfState& s, std::size_t N) {
    const std::size_t K = s.K();
    std::vector<double> pts = s.all_breakpoints();
    std::vector<double> xs;  // sample abscissa of every piece, in x order
    if (pts.empty() || pts.front() > 0.0) xs.push_back(pts.empty() ? 0.5 : 0.5 * pts.front());
    detail::for_each_piece(pts, [&](std::size_t, double x, bool) { xs.push_back(x); });
    std::vector<std::vector<double>> val(K, std::vector<double>(xs.size(), 0.0));
    std::vector<bool> covered(xs.size(), false);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::size_t best_k = 0, best_cov = 0;
        std::optional<double> est;
        for (std::size_t k = 1; k <= K; ++k) {
            const auto e = s.eval(k, xs[i]);
            if (e.coverage > best_cov) {
                best_cov = e.coverage;
                best_k = k;
                est = e.estimate;
            }
        }
        if (best_cov == 0) continue;
        covered[i] = true;
        const double q = order_stat_inverse(N, best_k, *est);  // base CDF value implied by rank best_k
        for (std::size_t k = 1; k <= K; ++k) val[k - 1][i] = k == best_k ? *est : order_stat_cdf(N, k, q);
    }
    std::vector<MarginalPtr> ms;
    const std::size_t offset = (pts.empty() || pts.front() > 0.0) ? 1 : 0;
    for (std::size_t k = 0; k < K; ++k) {
        detail::fill_uncovered(val[k], covered);
        const std::size_t m = pts.size();
        std::vector<double> at(m), after(m);
        for (std::size_t j = 0; j < m; ++j) {
            at[j] = val[k][offset + 2 * j];
            after[j] = val[k][offset + 2 * j + 1];
        }
        const double before = offset == 1 ? val[k][0] : (m ? at[0] : 0.0);
        ms.push_back(std::make_shared<PiecewiseConstant>(pts, std::move(at), std::move(after), before));
    }
    return CdfProfile(std::move(ms));
}

// Uniform-price learner for i.i.d. opponents of known population N.
class UbiidLearner final : public Learner {
public:
    UbiidLearner(ValuationVector v, std::size_t N, RefreshPolicy refresh = {})
        : v_(std::move(v)), N_(N), refresh_(refresh), banded_(v_.size()) {
        if (N_ < v_.size()) throw ConfigError("ubiid: population N must be at least K");
    }

    BidVector next_bid(std::size_t) override {
        if (!bid_ || (rounds_ > 0 && refresh_.due(rounds_, last_n_))) {
            const CdfProfile p = rounds_ == 0 ? detail::constant_profile(v_.size(), 0.0) : estimate_profile();
            bid_ = maximize(AuctionFormat::Uniform, p, v_, detail::truthful_constraints(AuctionFormat::Uniform)).b_star;
            last_n_ = rounds_;
        }
        return *bid_;
    }

    void observe(const Feedback& fb) override {
        banded_.observe(detail::expect_feedback<BanditFeedback>(fb, "UbiidLearner").obs);
        ++rounds_;
    }

    [[nodiscard]] CdfProfile estimate_profile() const { return transfer_profile(banded_, N_); }
    [[nodiscard]] const BandedCdfState& banded() const noexcept { return banded_; }
    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Bandit; }
    [[nodiscard]] std::string name() const override { return "ubiid"; }

private:
    ValuationVector v_;
    std::size_t N_;
    RefreshPolicy refresh_;
    BandedCdfState banded_;
    std::optional<BidVector> bid_;
    std::size_t rounds_ = 0;
    std::size_t last_n_ = 0;
};

class TruthfulUnitDemandLearner final : public Learner {
public:
    explicit TruthfulUnitDemandLearner(const ValuationVector& v) : bid_(truthful(v)) {}
    BidVector next_bid(std::size_t) override { return bid_; }
    void observe(const Feedback&) override {}
    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Utility; }
    [[nodiscard]] std::string name() const override { return "truthful_unit_demand"; }

private:
    static BidVector truthful(const ValuationVector& v) {
        std::vector<double> b(v.size(), 0.0);
        b[0] = v[0];
        return BidVector(std::move(b));
    }
    BidVector bid_;
};

class FixedBidLearner final : public Learner {
public:
    explicit FixedBidLearner(BidVector b) : bid_(std::move(b)) {}
    BidVector next_bid(std::size_t) override { return bid_; }
    void observe(const Feedback&) override {}
    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Utility; }
    [[nodiscard]] std::string name() const override { return "fixed_bid"; }

private:
    BidVector bid_;
};

// All non-increasing K-vectors over {0, 1/(m-1), ..., 1}, lexicographically ascending.
inline std::vector<BidVector> sorted_grid_vectors(std::size_t K, std::size_t m) {
    std::vector<BidVector> out;
    std::vector<std::size_t> idx(K, 0);
    auto emit = [&] {
        std::vector<double> b(K);
        for (std::size_t j = 0; j < K; ++j) b[j] = static_cast<double>(idx[j]) / static_cast<double>(m - 1);
        out.emplace_back(std::move(b));
    };
    // Recursive enumeration keeps idx[0] >= idx[1] >= ... in lexicographic order.
    auto rec = [&](auto&& self, std::size_t j, std::size_t cap) -> void {
        if (j == K) {
            emit();
            return;
        }
        for (std::size_t i = 0; i <= cap; ++i) {
            idx[j] = i;
            self(self, j + 1, i);
        }
    };
    rec(rec, 0, m - 1);
    return out;
}

// Largest per-coordinate level count L >= 2 whose sorted K-vector grid,
// C(L+K-1, K) points, has at most m points.
inline std::size_t grid_levels_for(std::size_t K, std::size_t m) {
    auto count = [K](std::size_t L) {
        double c = 1.0;  // C(L+K-1, K)
        for (std::size_t i = 1; i <= K; ++i) c = c * static_cast<double>(L - 1 + i) / static_cast<double>(i);
        return c;
    };
    std::size_t L = 2;
    while (count(L + 1) <= static_cast<double>(m) + 0.5) ++L;
    return L;
}

// Explore-then-commit over a fixed grid of about m bid vectors using
// realized utility only.
class DiscretizedEtcLearner final : public Learner {
public:
    DiscretizedEtcLearner(std::size_t K, std::size_t T, std::optional<std::size_t> grid_size = std::nullopt,
                          std::optional<std::size_t> exploration = std::nullopt) {
        const double Td = static_cast<double>(T);
        const std::size_t m = grid_size.value_or(
            std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::cbrt(Td) - 1e-9))));
        if (m < 2) throw ConfigError("discretized_etc: grid size must be at least 2");
        arms_ = sorted_grid_vectors(K, grid_levels_for(K, m));
        const std::size_t t_expl =
            exploration.value_or(static_cast<std::size_t>(std::ceil(std::cbrt(Td * Td) - 1e-9)));
        pulls_per_arm_ = std::max<std::size_t>(1, (t_expl + arms_.size() - 1) / arms_.size());
        sum_.assign(arms_.size(), 0.0);
    }

    BidVector next_bid(std::size_t t) override {
        const std::size_t r = t - 1;
        if (r < pulls_per_arm_ * arms_.size()) {
            current_ = r % arms_.size();
            exploring_ = true;
            return arms_[current_];
        }
        exploring_ = false;
        if (!best_) best_ = static_cast<std::size_t>(std::max_element(sum_.begin(), sum_.end()) - sum_.begin());
        return arms_[*best_];
    }

    void observe(const Feedback& fb) override {
        const double u = detail::expect_feedback<UtilityFeedback>(fb, "DiscretizedEtcLearner").utility;
        if (exploring_) sum_[current_] += u;
    }

    [[nodiscard]] const std::vector<BidVector>& arms() const noexcept { return arms_; }
    [[nodiscard]] std::size_t pulls_per_arm() const noexcept { return pulls_per_arm_; }
    [[nodiscard]] FeedbackKind required_feedback() const override { return FeedbackKind::Utility; }
    [[nodiscard]] bool horizon_dependent() const override { return true; }
    [[nodiscard]] std::string name() const override { return "discretized_etc"; }

private:
    std::vector<BidVector> arms_;
    std::size_t pulls_per_arm_ = 1;
    std::vector<double> sum_;
    std::size_t current_ = 0;
    bool exploring_ = false;
    std::optional<std::size_t> best_;
};

}  // namespace mua
