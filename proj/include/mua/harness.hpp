#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mua/auction.hpp"
#include "mua/distributions.hpp"
#include "mua/learners.hpp"
#include "mua/rng.hpp"
#include "mua/utility.hpp"

namespace mua {

// ---------------------------------------------------------------- oracle

// Best fixed bid under the true marginals. Continuous kinds use a dense
// uniform grid plus breakpoints, then zoom in around the incumbent.
inline MaximizeResult best_fixed_bid(const AdversaryDistribution& dist, const ValuationVector& v,
                                     AuctionFormat format, std::size_t dense = 10000) {
    require_same_size(dist.K(), v.size(), "best_fixed_bid");
    if (!dist.continuous()) return maximize(format, dist.profile(), v);
    std::vector<double> extra = dist.oracle_breakpoints();
    for (std::size_t i = 0; i <= dense; ++i) extra.push_back(static_cast<double>(i) / static_cast<double>(dense));
    MaximizeResult best = maximize(format, dist.profile(), v, {}, extra);
    double h = 1.0 / static_cast<double>(dense);
    for (int round = 0; round < 4; ++round) {
        for (double c : best.b_star)
            for (int s = -100; s <= 100; ++s) extra.push_back(c + h * static_cast<double>(s) / 100.0);
        MaximizeResult next = maximize(format, dist.profile(), v, {}, extra);
        if (next.value >= best.value) best = std::move(next);
        h /= 50.0;
    }
    return best;
}

// ---------------------------------------------------------------- learners

struct LearnerSpec {
    std::string name = "truthful_unit_demand";
    RefreshPolicy refresh;
    std::optional<std::size_t> exploration;   // exploration length override
    std::optional<std::size_t> grid_size;     // discretized_etc grid points
    std::optional<std::vector<double>> fixed_bid;
    bool fixed_bid_oracle = false;            // fixed_bid plays the oracle bid
};

enum class FeedbackMode { Full, Bandit };

inline const char* to_string(FeedbackMode f) { return f == FeedbackMode::Full ? "full" : "bandit"; }

// Rejects learner/format/feedback/distribution combinations before round 1.
inline void check_compatibility(const LearnerSpec& spec, AuctionFormat format, FeedbackMode feedback,
                                const AdversaryDistribution& dist, const ValuationVector& v) {
    if (dist.K() != v.size())
        throw ConfigError("distribution K (" + std::to_string(dist.K()) + ") differs from valuation length (" +
                          std::to_string(v.size()) + ")");
    const std::string& n = spec.name;
    auto need = [&](bool ok, const std::string& why) {
        if (!ok) throw ConfigError("learner '" + n + "' " + why);
    };
    if (n == "full_info") {
        need(feedback == FeedbackMode::Full, "requires full feedback");
    } else if (n == "etc" || n == "interval_refine") {
        need(format == AuctionFormat::Uniform, "requires the uniform format");
        need(feedback == FeedbackMode::Bandit, "requires bandit feedback");
    } else if (n == "ubiid") {
        need(format == AuctionFormat::Uniform, "requires the uniform format");
        need(feedback == FeedbackMode::Bandit, "requires bandit feedback");
        need(dist.iid_population().has_value(), "requires an iid_order_stats distribution");
    } else if (n == "discretized_etc") {
        need(format == AuctionFormat::Discriminatory, "requires the discriminatory format");
    } else if (n == "fixed_bid") {
        need(spec.fixed_bid_oracle || spec.fixed_bid.has_value(), "requires a bid vector or \"oracle\"");
        if (spec.fixed_bid) need(spec.fixed_bid->size() == v.size(), "bid length must equal K");
    } else if (n != "truthful_unit_demand") {
        throw ConfigError("unknown learner '" + n + "'");
    }
}

inline std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, AuctionFormat format, const ValuationVector& v,
                                             std::size_t T, const AdversaryDistribution& dist,
                                             const BidVector& oracle_bid) {
    const std::string& n = spec.name;
    if (n == "full_info") return std::make_unique<FullInfoLearner>(format, v, spec.refresh);
    if (n == "etc") return std::make_unique<EtcLearner>(v, T, spec.exploration);
    if (n == "interval_refine") return std::make_unique<IntervalRefineLearner>(v, T, spec.refresh, spec.exploration);
    if (n == "ubiid") return std::make_unique<UbiidLearner>(v, dist.iid_population().value(), spec.refresh);
    if (n == "truthful_unit_demand") return std::make_unique<TruthfulUnitDemandLearner>(v);
    if (n == "fixed_bid")
        return std::make_unique<FixedBidLearner>(spec.fixed_bid_oracle ? oracle_bid : BidVector(*spec.fixed_bid));
    if (n == "discretized_etc") return std::make_unique<DiscretizedEtcLearner>(v.size(), T, spec.grid_size, spec.exploration);
    throw ConfigError("unknown learner '" + n + "'");
}

// ---------------------------------------------------------------- episodes

struct Problem {
    AuctionFormat format = AuctionFormat::Uniform;
    ValuationVector v;
    DistributionPtr dist;
    FeedbackMode feedback = FeedbackMode::Full;
    LearnerSpec learner;
};

struct Oracle {
    BidVector b_star;
    double value = 0.0;
};

inline Oracle make_oracle(const Problem& p) {
    auto r = best_fixed_bid(*p.dist, p.v, p.format);
    return {std::move(r.b_star), r.value};
}

struct RoundRecord {
    std::size_t t = 0;
    double instant_regret = 0.0;
    double cumulative_regret = 0.0;
    double realized_utility = 0.0;
};

using TraceSink = std::function<void(const RoundRecord&)>;

struct EpisodeResult {
    std::vector<double> checkpoint_regret;  // cumulative regret at each checkpoint
    double cumulative_regret = 0.0;
    double realized_utility = 0.0;          // diagnostic only
    double min_instant_regret = 0.0;
};

// Plays T rounds. Regret is measured against the oracle's expected utility
// using the exact expected utility of each played bid.
inline EpisodeResult run_episode(const Problem& p, const Oracle& oracle, std::size_t T, std::uint64_t seed,
                                 std::uint64_t replication, std::span<const std::size_t> checkpoints = {},
                                 const TraceSink& sink = {}) {
    check_compatibility(p.learner, p.format, p.feedback, *p.dist, p.v);
    auto learner = make_learner(p.learner, p.format, p.v, T, *p.dist, oracle.b_star);
    std::map<std::vector<double>, double> memo;
    std::optional<BidVector> last_bid;
    double last_value = 0.0;
    EpisodeResult res;
    res.min_instant_regret = std::numeric_limits<double>::infinity();
    std::size_t next_cp = 0;
    for (std::size_t t = 1; t <= T; ++t) {
        BidVector b = learner->next_bid(t);
        Rng rng(seed, replication, t);
        const BidVector beta = p.dist->sample(rng);
        const AuctionOutcome out = settle(p.format, b, beta, p.v);
        switch (learner->required_feedback()) {
            case FeedbackKind::Full: learner->observe(FullFeedback{beta}); break;
            case FeedbackKind::Bandit:
                learner->observe(BanditFeedback{observation_from_outcome(b, out.allocation, out.clearing_price)});
                break;
            case FeedbackKind::Utility: learner->observe(UtilityFeedback{out.utility}); break;
        }
        if (!last_bid || !(*last_bid == b)) {
            auto [it, fresh] = memo.try_emplace(b.vec(), 0.0);
            if (fresh) it->second = eval_expected_utility(p.format, p.dist->profile(), b, p.v);
            last_value = it->second;
            last_bid = b;
        }
        const double instant = oracle.value - last_value;
        res.cumulative_regret += instant;
        res.realized_utility += out.utility;
        res.min_instant_regret = std::min(res.min_instant_regret, instant);
        while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
            res.checkpoint_regret.push_back(res.cumulative_regret);
            ++next_cp;
        }
        if (sink) sink({t, instant, res.cumulative_regret, out.utility});
    }
    return res;
}

struct RegretTrace {
    std::vector<double> instant_regret;
    std::vector<double> cumulative_regret;
};

inline RegretTrace run_episode_trace(const Problem& p, const Oracle& oracle, std::size_t T, std::uint64_t seed,
                                     std::uint64_t replication = 0) {
    RegretTrace tr;
    tr.instant_regret.reserve(T);
    tr.cumulative_regret.reserve(T);
    run_episode(p, oracle, T, seed, replication, {}, [&](const RoundRecord& r) {
        tr.instant_regret.push_back(r.instant_regret);
        tr.cumulative_regret.push_back(r.cumulative_regret);
    });
    return tr;
}

// ---------------------------------------------------------------- statistics

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points_used = 0;
    std::vector<std::string> warnings;
};

// Least-squares fit of log(regret) against log(T).
inline SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
    SlopeFit fit;
    std::vector<double> xs, ys;
    for (const auto& [T, r] : points) {
        if (!(T > 0.0) || !(r > 0.0)) {
            fit.warnings.push_back("dropped nonpositive point (T=" + std::to_string(T) + ", regret=" + std::to_string(r) + ")");
            continue;
        }
        xs.push_back(std::log(T));
        ys.push_back(std::log(r));
    }
    fit.points_used = xs.size();
    if (xs.size() < 3) throw std::invalid_argument("fit_loglog_slope: fewer than 3 positive points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: all horizons identical");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr m;
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return m;
}

// ---------------------------------------------------------------- experiments

struct ExperimentSpec {
    Problem problem;
    std::size_t T = 1;
    std::vector<std::uint64_t> seeds{0};
    std::size_t replications = 1;
    std::vector<std::size_t> T_grid;  // empty: single horizon T
};

struct HorizonStat {
    std::size_t T = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t episodes = 0;
    std::vector<double> values;  // per episode, in episode order
};

struct Summary {
    BidVector b_star;
    double oracle_value = 0.0;
    std::vector<HorizonStat> horizons;
    std::optional<SlopeFit> slope;
    double mean_realized_utility = 0.0;  // at the largest horizon
    double min_instant_regret = 0.0;
};

struct EpisodeRow {
    std::size_t replication;
    RoundRecord record;
};

// Runs every (seed, replication) episode, optionally in parallel. Results are
// joined by episode index, so output does not depend on the thread count.
// `trace` receives the rounds of each largest-horizon episode, episode by
// episode in index order.
inline Summary run_experiment(const ExperimentSpec& spec, std::size_t threads = 1,
                              const std::function<void(std::size_t, const RoundRecord&)>& trace = {}) {
    const Problem& p = spec.problem;
    check_compatibility(p.learner, p.format, p.feedback, *p.dist, p.v);
    if (spec.T < 1) throw ConfigError("T must be at least 1");
    if (spec.replications < 1) throw ConfigError("replications must be at least 1");
    if (spec.seeds.empty()) throw ConfigError("at least one seed required");
    std::vector<std::size_t> H = spec.T_grid.empty() ? std::vector<std::size_t>{spec.T} : spec.T_grid;
    std::sort(H.begin(), H.end());
    H.erase(std::unique(H.begin(), H.end()), H.end());
    if (H.front() < 1) throw ConfigError("horizons must be at least 1");

    const Oracle oracle = make_oracle(p);
    const bool per_horizon = make_learner(p.learner, p.format, p.v, H.back(), *p.dist, oracle.b_star)->horizon_dependent();

    struct Job {
        std::uint64_t seed;
        std::size_t replication;  // global episode index
        std::size_t horizon;      // index into H, or H.size() for all
    };
    std::vector<Job> jobs;
    const std::size_t n_eps = spec.seeds.size() * spec.replications;
    for (std::size_t e = 0; e < n_eps; ++e) {
        const std::uint64_t seed = spec.seeds[e / spec.replications];
        if (per_horizon)
            for (std::size_t h = 0; h < H.size(); ++h) jobs.push_back({seed, e, h});
        else
            jobs.push_back({seed, e, H.size()});
    }

    std::vector<EpisodeResult> results(jobs.size());
    std::vector<std::vector<RoundRecord>> buffers(jobs.size());
    std::mutex mu;
    std::condition_variable cv;
    std::size_t next_to_emit = 0;
    std::vector<bool> done(jobs.size(), false);
    std::atomic<std::size_t> next_job{0};
    std::exception_ptr failure;

    auto is_traced = [&](const Job& j) { return trace && (j.horizon == H.size() || j.horizon + 1 == H.size()); };

    auto flush_ready = [&] {  // caller holds mu
        while (next_to_emit < jobs.size() && done[next_to_emit]) {
            if (is_traced(jobs[next_to_emit]))
                for (const auto& r : buffers[next_to_emit]) trace(jobs[next_to_emit].replication, r);
            buffers[next_to_emit].clear();
            buffers[next_to_emit].shrink_to_fit();
            ++next_to_emit;
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs.size()));
    // A single worker finishes jobs in index order, so rows can stream straight through.
    const bool direct = n_threads == 1;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next_job.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& j = jobs[i];
            try {
                const std::size_t T = j.horizon == H.size() ? H.back() : H[j.horizon];
                const std::vector<std::size_t> cps = j.horizon == H.size() ? H : std::vector<std::size_t>{T};
                TraceSink sink;
                if (is_traced(j)) {
                    if (direct)
                        sink = [&trace, rep = j.replication](const RoundRecord& r) { trace(rep, r); };
                    else
                        sink = [&buf = buffers[i]](const RoundRecord& r) { buf.push_back(r); };
                }
                results[i] = run_episode(p, oracle, T, j.seed, j.replication, cps, sink);
            } catch (const std::exception& e) {
                std::lock_guard lk(mu);
                if (!failure)
                    failure = std::make_exception_ptr(
                        std::runtime_error("episode " + std::to_string(j.replication) + ": " + e.what()));
            }
            std::lock_guard lk(mu);
            done[i] = true;
            flush_ready();
        }
    };

    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    Summary s;
    s.b_star = oracle.b_star;
    s.oracle_value = oracle.value;
    s.min_instant_regret = std::numeric_limits<double>::infinity();
    std::vector<double> realized;
    for (std::size_t h = 0; h < H.size(); ++h) {
        HorizonStat st;
        st.T = H[h];
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (per_horizon && jobs[i].horizon != h) continue;
            st.values.push_back(per_horizon ? results[i].cumulative_regret : results[i].checkpoint_regret[h]);
        }
        const auto ms = mean_stderr(st.values);
        st.mean = ms.mean;
        st.stderr_ = ms.stderr_;
        st.episodes = st.values.size();
        s.horizons.push_back(std::move(st));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        s.min_instant_regret = std::min(s.min_instant_regret, results[i].min_instant_regret);
        if (!per_horizon || jobs[i].horizon + 1 == H.size()) realized.push_back(results[i].realized_utility);
    }
    s.mean_realized_utility = mean_stderr(realized).mean;
    if (!spec.T_grid.empty()) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& st : s.horizons) pts.emplace_back(static_cast<double>(st.T), st.mean);
        try {
            s.slope = fit_loglog_slope(pts);
        } catch (const std::invalid_argument&) {
            s.slope.reset();
        }
    }
    return s;
}

}  // namespace mua
