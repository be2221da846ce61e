#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mua/bid_vector.hpp"
#include "mua/marginal.hpp"
#include "mua/order_stats.hpp"
#include "mua/rng.hpp"
#include "mua/utility.hpp"

namespace mua {

// Samplable law of the opposing bid vector with exact marginal CDFs.
class AdversaryDistribution {
public:
    virtual ~AdversaryDistribution() = default;

    [[nodiscard]] std::size_t K() const noexcept { return profile_.K(); }
    [[nodiscard]] const CdfProfile& profile() const noexcept { return profile_; }

    [[nodiscard]] virtual BidVector sample(Rng& rng) const = 0;
    [[nodiscard]] virtual std::string kind() const = 0;
    // True when some marginal is not a step function.
    [[nodiscard]] virtual bool continuous() const { return false; }
    // Population size when bids are top order statistics of i.i.d. draws.
    [[nodiscard]] virtual std::optional<std::size_t> iid_population() const { return std::nullopt; }

    // P(beta_k <= x), k 1-based.
    [[nodiscard]] double marginal_cdf(std::size_t k, double x) const {
        if (k < 1 || k > K())
            throw std::out_of_range("marginal_cdf: rank " + std::to_string(k) + " out of range [1," +
                                    std::to_string(K()) + "]");
        return profile_.rank(k).cdf(x);
    }

    // Points where some marginal changes formula; used to refine oracle grids.
    [[nodiscard]] std::vector<double> oracle_breakpoints() const {
        std::vector<double> pts;
        for (const auto& m : profile_.marginals()) {
            auto b = m->breakpoints();
            pts.insert(pts.end(), b.begin(), b.end());
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

protected:
    CdfProfile profile_;
};

using DistributionPtr = std::shared_ptr<const AdversaryDistribution>;

// ---------------------------------------------------------------- specs

struct DiscreteSpec {
    std::vector<BidVector> atoms;
    std::vector<double> probabilities;
};

struct BaseLaw {
    enum class Kind { Uniform, Power, Bernoulli };
    Kind kind = Kind::Uniform;
    double lo = 0.0, hi = 1.0;   // Uniform support
    double gamma = 1.0;          // Power: F(x) = x^gamma
    double p = 0.5;              // Bernoulli: P(bid = level)
    double level = 1.0;

    static BaseLaw uniform(double lo = 0.0, double hi = 1.0) { return {Kind::Uniform, lo, hi}; }
    static BaseLaw power(double gamma) {
        BaseLaw b;
        b.kind = Kind::Power;
        b.gamma = gamma;
        return b;
    }
    static BaseLaw bernoulli(double p, double level) {
        BaseLaw b;
        b.kind = Kind::Bernoulli;
        b.p = p;
        b.level = level;
        return b;
    }
};

struct IidOrderStatsSpec {
    std::size_t N = 1;
    std::size_t K = 1;
    BaseLaw base;
};

// Independent uniform laws on disjoint intervals, intervals[0] the highest.
struct DeltaSeparatedSpec {
    std::vector<Interval> intervals;
    double delta = 0.0;
};

// Single-unit lower-bound instance; for K > 1 it is embedded as the lowest
// opposing bid (scaled into [0, 1/2]) below deterministic bids 1 - j/(2K).
struct FirstPriceHardSpec {
    double T = 1.0;
    std::optional<long> index;
    std::size_t K = 1;
};

// Three-unit lower-bound instance with an optional local bump on F_2.
struct Uniform3HardSpec {
    double T = 1.0;
    std::optional<long> index;
    std::optional<double> epsilon;  // default T^{-1/3} / 700
};

// Two opponents each bidding 2/3 with probability p, else 0.
struct IidBernoulliHardSpec {
    double p = 0.5;
};

using DistributionSpec = std::variant<DiscreteSpec, IidOrderStatsSpec, DeltaSeparatedSpec, FirstPriceHardSpec,
                                      Uniform3HardSpec, IidBernoulliHardSpec>;

// ---------------------------------------------------------------- kinds

namespace detail {

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Smallest x in [0,1] with F(x) >= u, by bisection.
inline double bisect_inverse(const std::function<double(double)>& F, double u) {
    if (F(0.0) >= u) return 0.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 64 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (F(mid) >= u)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace detail

class DiscreteDistribution final : public AdversaryDistribution {
public:
    explicit DiscreteDistribution(DiscreteSpec spec) : atoms_(std::move(spec.atoms)) {
        if (atoms_.empty()) throw ConfigError("discrete: at least one atom required");
        if (spec.probabilities.size() != atoms_.size()) throw ConfigError("discrete: one probability per atom required");
        const std::size_t K = atoms_[0].size();
        double total = 0.0;
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
            if (atoms_[a].size() != K) throw ConfigError("discrete: atoms must share the same K");
            if (!(spec.probabilities[a] >= 0.0)) throw ConfigError("discrete: probabilities must be nonnegative");
            total += spec.probabilities[a];
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("discrete: probabilities must sum to 1");
        cum_.resize(atoms_.size());
        double acc = 0.0;
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
            acc += spec.probabilities[a] / total;
            cum_[a] = acc;
        }
        cum_.back() = 1.0;
        std::vector<MarginalPtr> ms;
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<std::pair<double, double>> mass;
            for (std::size_t a = 0; a < atoms_.size(); ++a) mass.emplace_back(atoms_[a][k], spec.probabilities[a] / total);
            std::sort(mass.begin(), mass.end());
            std::vector<double> pts, cum;
            double c = 0.0;
            for (std::size_t i = 0; i < mass.size(); ++i) {
                c += mass[i].second;
                if (i + 1 < mass.size() && mass[i + 1].first == mass[i].first) continue;
                pts.push_back(mass[i].first);
                cum.push_back(std::min(c, 1.0));
            }
            cum.back() = 1.0;
            ms.push_back(std::make_shared<StepCdf>(std::move(pts), std::move(cum)));
        }
        profile_ = CdfProfile(std::move(ms));
    }

    [[nodiscard]] BidVector sample(Rng& rng) const override {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        return atoms_[std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), atoms_.size() - 1)];
    }
    [[nodiscard]] std::string kind() const override { return "discrete"; }

private:
    std::vector<BidVector> atoms_;
    std::vector<double> cum_;
};

class IidOrderStatsDistribution final : public AdversaryDistribution {
public:
    explicit IidOrderStatsDistribution(IidOrderStatsSpec spec) : spec_(spec) {
        if (spec.K < 1) throw ConfigError("iid_order_stats: K must be at least 1");
        if (spec.N < spec.K) throw ConfigError("iid_order_stats: N must be at least K");
        const BaseLaw& b = spec.base;
        std::function<double(double)> F;
        std::vector<double> breaks;
        switch (b.kind) {
            case BaseLaw::Kind::Uniform:
                if (!(0.0 <= b.lo && b.lo < b.hi && b.hi <= 1.0))
                    throw ConfigError("iid_order_stats: uniform base needs 0 <= lo < hi <= 1");
                F = [lo = b.lo, hi = b.hi](double x) { return detail::clamp01((x - lo) / (hi - lo)); };
                breaks = {b.lo, b.hi};
                break;
            case BaseLaw::Kind::Power:
                if (!(b.gamma > 0.0)) throw ConfigError("iid_order_stats: power base needs gamma > 0");
                F = [g = b.gamma](double x) { return x <= 0.0 ? 0.0 : std::pow(std::min(x, 1.0), g); };
                break;
            case BaseLaw::Kind::Bernoulli:
                if (!(b.p >= 0.0 && b.p <= 1.0)) throw ConfigError("iid_order_stats: Bernoulli p outside [0,1]");
                if (!(b.level > 0.0 && b.level <= 1.0)) throw ConfigError("iid_order_stats: Bernoulli level outside (0,1]");
                break;
        }
        std::vector<MarginalPtr> ms;
        for (std::size_t k = 1; k <= spec.K; ++k) {
            if (b.kind == BaseLaw::Kind::Bernoulli) {
                ms.push_back(std::make_shared<StepCdf>(std::vector<double>{0.0, b.level},
                                                       std::vector<double>{order_stat_cdf(spec.N, k, 1.0 - b.p), 1.0}));
            } else {
                ms.push_back(std::make_shared<AnalyticMarginal>(
                    [F, N = spec.N, k](double x) { return order_stat_cdf(N, k, F(x)); }, breaks));
            }
        }
        profile_ = CdfProfile(std::move(ms));
    }

    [[nodiscard]] BidVector sample(Rng& rng) const override {
        std::vector<double> draws(spec_.N);
        for (double& d : draws) d = base_inverse(rng.uniform());
        std::partial_sort(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(spec_.K), draws.end(),
                          std::greater<>());
        draws.resize(spec_.K);
        return BidVector(std::move(draws));
    }
    [[nodiscard]] std::string kind() const override { return "iid_order_stats"; }
    [[nodiscard]] bool continuous() const override { return spec_.base.kind != BaseLaw::Kind::Bernoulli; }
    [[nodiscard]] std::optional<std::size_t> iid_population() const override { return spec_.N; }
    [[nodiscard]] const IidOrderStatsSpec& spec() const noexcept { return spec_; }

private:
    [[nodiscard]] double base_inverse(double u) const {
        const BaseLaw& b = spec_.base;
        switch (b.kind) {
            case BaseLaw::Kind::Uniform: return b.lo + u * (b.hi - b.lo);
            case BaseLaw::Kind::Power: return std::pow(u, 1.0 / b.gamma);
            case BaseLaw::Kind::Bernoulli: return u < 1.0 - b.p ? 0.0 : b.level;
        }
        return 0.0;
    }

    IidOrderStatsSpec spec_;
};

class DeltaSeparatedDistribution final : public AdversaryDistribution {
public:
    explicit DeltaSeparatedDistribution(DeltaSeparatedSpec spec) : iv_(std::move(spec.intervals)) {
        if (iv_.empty()) throw ConfigError("delta_separated: at least one interval required");
        if (spec.delta < 0.0) throw ConfigError("delta_separated: delta must be nonnegative");
        for (std::size_t k = 0; k < iv_.size(); ++k) {
            if (!(0.0 <= iv_[k].lo && iv_[k].lo <= iv_[k].hi && iv_[k].hi <= 1.0))
                throw ConfigError("delta_separated: interval " + std::to_string(k + 1) + " must satisfy 0 <= lo <= hi <= 1");
            if (k + 1 < iv_.size()) {
                const double gap = iv_[k].lo - iv_[k + 1].hi;
                if (!(gap > 0.0) || gap < spec.delta - 1e-12)
                    throw ConfigError("delta_separated: intervals " + std::to_string(k + 1) + " and " +
                                      std::to_string(k + 2) + " overlap or are closer than delta");
            }
        }
        std::vector<MarginalPtr> ms;
        for (const Interval& I : iv_) {
            if (I.lo == I.hi)
                ms.push_back(std::make_shared<StepCdf>(std::vector<double>{I.lo}, std::vector<double>{1.0}));
            else
                ms.push_back(std::make_shared<AnalyticMarginal>(
                    [I](double x) { return detail::clamp01((x - I.lo) / (I.hi - I.lo)); },
                    std::vector<double>{I.lo, I.hi}));
        }
        profile_ = CdfProfile(std::move(ms));
    }

    [[nodiscard]] BidVector sample(Rng& rng) const override {
        std::vector<double> b(iv_.size());
        for (std::size_t k = 0; k < iv_.size(); ++k) b[k] = iv_[k].lo + rng.uniform() * (iv_[k].hi - iv_[k].lo);
        return BidVector(std::move(b));
    }
    [[nodiscard]] std::string kind() const override { return "delta_separated"; }
    [[nodiscard]] bool continuous() const override {
        return std::any_of(iv_.begin(), iv_.end(), [](const Interval& I) { return I.lo < I.hi; });
    }
    [[nodiscard]] const std::vector<Interval>& intervals() const noexcept { return iv_; }

private:
    std::vector<Interval> iv_;
};

class FirstPriceHardDistribution final : public AdversaryDistribution {
public:
    static double base_cdf(double b) {
        if (b < 0.0) return 0.0;
        if (b < 1.0 / 3.0) return 1.0 / (3.0 * (1.0 - b));
        return std::min(1.0, 0.25 + 0.75 * b);
    }

    explicit FirstPriceHardDistribution(FirstPriceHardSpec spec) : spec_(spec) {
        if (!(spec.T >= 1.0)) throw ConfigError("first_price_hard: T must be at least 1");
        if (spec.K < 1) throw ConfigError("first_price_hard: K must be at least 1");
        const double width = std::pow(spec.T, -1.0 / 3.0) / 9.0;
        if (spec.index) {
            const long max_index = static_cast<long>(std::floor(3.0 * std::cbrt(spec.T)));
            if (*spec.index < 0 || *spec.index > max_index)
                throw ConfigError("first_price_hard: index must lie in [0, floor(3 T^{1/3})] = [0," +
                                  std::to_string(max_index) + "]; T too small for this index");
            lo_ = static_cast<double>(*spec.index) * width;
            hi_ = static_cast<double>(*spec.index + 1) * width;
        }
        const double scale = spec.K == 1 ? 1.0 : 0.5;
        scale_ = scale;
        std::vector<MarginalPtr> ms;
        const std::size_t K = spec.K;
        for (std::size_t j = 1; j < K; ++j) {
            const double pad = 1.0 - static_cast<double>(j) / (2.0 * static_cast<double>(K));
            ms.push_back(std::make_shared<StepCdf>(std::vector<double>{pad}, std::vector<double>{1.0}));
        }
        std::vector<double> breaks{0.0, scale / 3.0};
        if (spec.index) {
            breaks.push_back(scale * lo_);
            breaks.push_back(scale * hi_);
        }
        ms.push_back(std::make_shared<AnalyticMarginal>([this](double x) { return perturbed_cdf(x / scale_); }, breaks));
        profile_ = CdfProfile(std::move(ms));
    }

    FirstPriceHardDistribution(const FirstPriceHardDistribution&) = delete;
    FirstPriceHardDistribution& operator=(const FirstPriceHardDistribution&) = delete;

    // CDF of the single-unit instance (unscaled).
    [[nodiscard]] double perturbed_cdf(double b) const {
        if (spec_.index && b >= lo_ && b < hi_) return base_cdf(hi_);
        return base_cdf(b);
    }

    [[nodiscard]] Interval perturbation_interval() const { return {lo_, hi_}; }

    [[nodiscard]] BidVector sample(Rng& rng) const override {
        const double u = rng.uniform();
        double b;
        if (u <= 1.0 / 3.0)
            b = 0.0;
        else if (u < 0.5)
            b = 1.0 - 1.0 / (3.0 * u);
        else
            b = std::min(1.0, (u - 0.25) * 4.0 / 3.0);
        if (spec_.index && b > lo_ && b <= hi_) b = lo_;
        const std::size_t K = spec_.K;
        std::vector<double> beta(K);
        for (std::size_t j = 1; j < K; ++j) beta[j - 1] = 1.0 - static_cast<double>(j) / (2.0 * static_cast<double>(K));
        beta[K - 1] = scale_ * b;
        return BidVector(std::move(beta));
    }
    [[nodiscard]] std::string kind() const override { return "first_price_hard"; }
    [[nodiscard]] bool continuous() const override { return true; }

private:
    FirstPriceHardSpec spec_;
    double lo_ = 0.0, hi_ = 0.0, scale_ = 1.0;
};

class Uniform3HardDistribution final : public AdversaryDistribution {
public:
    static constexpr double a0 = 5.0 / 900.0;
    static constexpr double c = 1.0 / 3.0;  // v_2 = v_3

    static double F1_base(double y) {
        if (y <= 0.0) return 0.0;
        if (y <= a0) return y;
        if (y <= 1.0 / 6.0) return (std::log(c - a0) - std::log(c - y)) / 3.0 + a0;
        return tail(F1_base(1.0 / 6.0), y);
    }
    static double F2_base(double y) {
        if (y <= 0.0) return 0.0;
        if (y <= a0) return 21.0 * y;
        if (y <= 1.0 / 6.0) return 1.0 / 9.0 + F1_base(y);
        return tail(1.0 / 9.0 + F1_base(1.0 / 6.0), y);
    }
    static double F3_base(double y) {
        if (y <= 0.0) return 0.0;
        if (y <= a0) return 101.0 * y;
        if (y <= 1.0 / 6.0) return 5.0 / 9.0 + F1_base(y);
        return tail(5.0 / 9.0 + F1_base(1.0 / 6.0), y);
    }

    explicit Uniform3HardDistribution(Uniform3HardSpec spec) : spec_(spec) {
        if (!(spec.T >= 1.0)) throw ConfigError("uniform3_hard: T must be at least 1");
        eps_ = spec.epsilon.value_or(std::pow(spec.T, -1.0 / 3.0) / 700.0);
        if (!(eps_ > 0.0)) throw ConfigError("uniform3_hard: epsilon must be positive");
        if (spec.index) {
            const long max_index = static_cast<long>(std::floor(1.0 / (7.0 * eps_)));
            if (*spec.index < 0 || *spec.index > max_index)
                throw ConfigError("uniform3_hard: index must lie in [0, floor(1/(7 eps))] = [0," + std::to_string(max_index) + "]");
            a_ = a0 + static_cast<double>(*spec.index) * eps_;
            if (a_ + eps_ > 1.0 / 6.0) throw ConfigError("uniform3_hard: perturbation interval leaves (5/900, 1/6]");
        }
        std::vector<double> breaks{a0, 1.0 / 6.0, 1.0 / 3.0};
        std::vector<double> breaks2 = breaks;
        if (spec.index) breaks2.insert(breaks2.end(), {a_, a_ + eps_ / 2.0, a_ + eps_});
        profile_ = CdfProfile({std::make_shared<AnalyticMarginal>(&F1_base, breaks),
                               std::make_shared<AnalyticMarginal>([this](double y) { return F2(y); }, breaks2),
                               std::make_shared<AnalyticMarginal>(&F3_base, breaks)});
    }

    Uniform3HardDistribution(const Uniform3HardDistribution&) = delete;
    Uniform3HardDistribution& operator=(const Uniform3HardDistribution&) = delete;

    // Triangular bump of height eps/2 on the perturbation interval.
    [[nodiscard]] double bump(double y) const {
        if (!spec_.index || !(y > a_ && y < a_ + eps_)) return 0.0;
        return std::min(y - a_, a_ + eps_ - y);
    }
    [[nodiscard]] double F2(double y) const { return F2_base(y) + bump(y); }
    [[nodiscard]] Interval perturbation_interval() const { return {a_, a_ + eps_}; }
    [[nodiscard]] double epsilon() const noexcept { return eps_; }

    [[nodiscard]] BidVector sample(Rng& rng) const override {
        const double u = rng.uniform();
        double b1 = detail::bisect_inverse(&F1_base, u);
        double b2 = std::min(b1, detail::bisect_inverse([this](double y) { return F2(y); }, u));
        double b3 = std::min(b2, detail::bisect_inverse(&F3_base, u));
        return BidVector({b1, b2, b3});
    }
    [[nodiscard]] std::string kind() const override { return "uniform3_hard"; }
    [[nodiscard]] bool continuous() const override { return true; }

private:
    // Flat on (1/6, 1/3], then uniform density up to 1.
    static double tail(double at_sixth, double y) {
        if (y <= 1.0 / 3.0) return at_sixth;
        return std::min(1.0, at_sixth + (1.0 - at_sixth) * (y - 1.0 / 3.0) / (2.0 / 3.0));
    }

    Uniform3HardSpec spec_;
    double eps_ = 0.0;
    double a_ = 0.0;
};

inline DistributionPtr build_distribution(const DistributionSpec& spec) {
    return std::visit(
        [](const auto& s) -> DistributionPtr {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, DiscreteSpec>) {
                return std::make_shared<DiscreteDistribution>(s);
            } else if constexpr (std::is_same_v<S, IidOrderStatsSpec>) {
                return std::make_shared<IidOrderStatsDistribution>(s);
            } else if constexpr (std::is_same_v<S, DeltaSeparatedSpec>) {
                return std::make_shared<DeltaSeparatedDistribution>(s);
            } else if constexpr (std::is_same_v<S, FirstPriceHardSpec>) {
                return std::make_shared<FirstPriceHardDistribution>(s);
            } else if constexpr (std::is_same_v<S, Uniform3HardSpec>) {
                return std::make_shared<Uniform3HardDistribution>(s);
            } else {
                if (!(s.p >= 0.0 && s.p <= 1.0)) throw ConfigError("iid_bernoulli_hard: p outside [0,1]");
                return std::make_shared<IidOrderStatsDistribution>(
                    IidOrderStatsSpec{2, 2, BaseLaw::bernoulli(s.p, 2.0 / 3.0)});
            }
        },
        spec);
}

inline BidVector sample(const AdversaryDistribution& d, Rng& rng) { return d.sample(rng); }

}  // namespace mua
