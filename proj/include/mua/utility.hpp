#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mua/bid_vector.hpp"
#include "mua/marginal.hpp"

namespace mua {

// Expected utility of bid b against opposing marginals `profile`.
// With G_i = F_{K-i+1}, G_{K+1} = 0, b_{K+1} = 0 and V_i = v_1 + ... + v_i:
//   discriminatory: sum_i G_i(b_i) (v_i - b_i)
//   uniform: sum_i (G_i(b_{i+1}) - G_{i+1}(b_{i+1})) (V_i - i b_{i+1})
//                 + (G_i(b_i) - G_i(b_{i+1})) V_i - i * int_{(b_{i+1}, b_i]} x dG_i
inline double eval_expected_utility(AuctionFormat format, const CdfProfile& profile, const BidVector& b,
                                    const ValuationVector& v) {
    const std::size_t K = b.size();
    require_same_size(K, v.size(), "eval_expected_utility");
    require_same_size(K, profile.K(), "eval_expected_utility");
    auto G = [&](std::size_t i) -> const Marginal& { return profile.rank(K - i + 1); };
    double u = 0.0;
    if (format == AuctionFormat::Discriminatory) {
        for (std::size_t i = 1; i <= K; ++i) u += G(i).cdf(b[i - 1]) * (v[i - 1] - b[i - 1]);
        return u;
    }
    double V = 0.0;
    for (std::size_t i = 1; i <= K; ++i) {
        V += v[i - 1];
        const double hi = b[i - 1];
        const double lo = b.at_or_zero(i);
        const double gi_lo = G(i).cdf(lo);
        const double gnext_lo = i < K ? G(i + 1).cdf(lo) : 0.0;
        const double di = static_cast<double>(i);
        u += (gi_lo - gnext_lo) * (V - di * lo) + (G(i).cdf(hi) - gi_lo) * V - di * G(i).stieltjes(lo, hi);
    }
    return u;
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    [[nodiscard]] bool contains(const Interval& o) const noexcept { return lo <= o.lo && o.hi <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct BidConstraints {
    std::vector<Interval> boxes;                // empty means [0,1] everywhere
    std::vector<std::optional<double>> pins;    // empty means no pins
    bool first_coordinate_truthful = false;     // forces b_1 = v_1

    // Feasible interval of coordinate j (0-based) after combining all rules.
    [[nodiscard]] Interval effective(std::size_t j, const ValuationVector& v) const {
        Interval box = j < boxes.size() ? boxes[j] : Interval{};
        if (!(0.0 <= box.lo && box.lo <= box.hi && box.hi <= 1.0))
            throw ConstraintError("coordinate " + std::to_string(j + 1) + ": invalid box");
        std::optional<double> fixed;
        if (j < pins.size() && pins[j]) fixed = *pins[j];
        if (j == 0 && first_coordinate_truthful) {
            if (fixed && *fixed != v[0]) throw ConstraintError("pin on b_1 conflicts with truthful b_1 = v_1");
            fixed = v[0];
        }
        if (fixed) {
            if (!box.contains(*fixed))
                throw ConstraintError("coordinate " + std::to_string(j + 1) + ": pinned value outside its box");
            return {*fixed, *fixed};
        }
        return box;
    }
};

// Ascending grid: breakpoints of every marginal, 0, 1, the valuations,
// constraint endpoints and pins, plus `extra`; clipped to [0,1].
inline std::vector<double> candidate_grid(const CdfProfile& profile, const ValuationVector& v,
                                          const BidConstraints& c = {}, std::span<const double> extra = {}) {
    std::vector<double> g{0.0, 1.0};
    for (const auto& m : profile.marginals()) {
        auto b = m->breakpoints();
        g.insert(g.end(), b.begin(), b.end());
    }
    for (double x : v) g.push_back(x);
    for (std::size_t j = 0; j < v.size(); ++j) {
        const Interval e = c.effective(j, v);
        g.push_back(e.lo);
        g.push_back(e.hi);
    }
    g.insert(g.end(), extra.begin(), extra.end());
    std::erase_if(g, [](double x) { return !(x >= 0.0 && x <= 1.0); });
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

// Expected utility written as sum_j phi_j(b_j), tabulated on a grid.
// Uniform: phi_1 = V_1 G_1 - M_1 and, for j >= 2,
//   phi_j(y) = V_j G_j - j M_j - G_j (V_{j-1} - (j-1) y) - (j-1) y G_{j-1} + (j-1) M_{j-1},
// where M_j(y) = int_{[0,y]} x dG_j. Discriminatory: phi_j = G_j (v_j - y).
class SeparableObjective {
public:
    static constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    SeparableObjective(AuctionFormat format, const CdfProfile& profile, const ValuationVector& v,
                       std::vector<double> grid, const BidConstraints& c = {})
        : K_(v.size()), grid_(std::move(grid)) {
        require_same_size(K_, profile.K(), "SeparableObjective");
        const std::size_t M = grid_.size();
        if (M == 0) throw ConstraintError("empty candidate grid");
        std::vector<std::vector<double>> G(K_ + 1, std::vector<double>(M, 0.0));
        std::vector<std::vector<double>> Mo(K_ + 1, std::vector<double>(M, 0.0));
        for (std::size_t j = 1; j <= K_; ++j) profile.rank(K_ - j + 1).tabulate(grid_, G[j], Mo[j]);
        phi_.assign(K_, std::vector<double>(M, kNegInf));
        lo_idx_.resize(K_);
        hi_idx_.resize(K_);
        double Vprev = 0.0;
        for (std::size_t j = 1; j <= K_; ++j) {
            const Interval box = c.effective(j - 1, v);
            lo_idx_[j - 1] = static_cast<std::size_t>(std::lower_bound(grid_.begin(), grid_.end(), box.lo) - grid_.begin());
            hi_idx_[j - 1] = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), box.hi) - grid_.begin());
            const double Vj = Vprev + v[j - 1];
            const double jm1 = static_cast<double>(j - 1);
            for (std::size_t m = lo_idx_[j - 1]; m < hi_idx_[j - 1]; ++m) {
                const double y = grid_[m];
                double p;
                if (format == AuctionFormat::Discriminatory) {
                    p = G[j][m] * (v[j - 1] - y);
                } else {
                    p = Vj * G[j][m] - static_cast<double>(j) * Mo[j][m];
                    if (j >= 2) p += -G[j][m] * (Vprev - jm1 * y) - jm1 * y * G[j - 1][m] + jm1 * Mo[j - 1][m];
                }
                phi_[j - 1][m] = p;
            }
            Vprev = Vj;
        }
    }

    [[nodiscard]] std::size_t K() const noexcept { return K_; }
    [[nodiscard]] const std::vector<double>& grid() const noexcept { return grid_; }
    [[nodiscard]] double phi(std::size_t j, std::size_t m) const { return phi_[j][m]; }
    [[nodiscard]] bool feasible(std::size_t j, std::size_t m) const { return m >= lo_idx_[j] && m < hi_idx_[j]; }

    // back[j][m]: best value of coordinates j..K-1 given b_j = grid[m].
    [[nodiscard]] std::vector<std::vector<double>> backward() const {
        const std::size_t M = grid_.size();
        std::vector<std::vector<double>> S(K_, std::vector<double>(M, kNegInf));
        S[K_ - 1] = phi_[K_ - 1];
        for (std::size_t j = K_ - 1; j-- > 0;) {
            double run = kNegInf;
            for (std::size_t m = 0; m < M; ++m) {
                run = std::max(run, S[j + 1][m]);
                if (phi_[j][m] != kNegInf && run != kNegInf) S[j][m] = phi_[j][m] + run;
            }
        }
        return S;
    }

    // fwd[j][m]: best value of coordinates 0..j given b_j = grid[m].
    [[nodiscard]] std::vector<std::vector<double>> forward() const {
        const std::size_t M = grid_.size();
        std::vector<std::vector<double>> F(K_, std::vector<double>(M, kNegInf));
        F[0] = phi_[0];
        for (std::size_t j = 1; j < K_; ++j) {
            double run = kNegInf;
            for (std::size_t m = M; m-- > 0;) {
                run = std::max(run, F[j - 1][m]);
                if (phi_[j][m] != kNegInf && run != kNegInf) F[j][m] = phi_[j][m] + run;
            }
        }
        return F;
    }

    [[nodiscard]] double max_value() const {
        const auto S = backward();
        return *std::max_element(S[0].begin(), S[0].end());
    }

    [[nodiscard]] double value_at(std::span<const std::size_t> idx) const {
        double s = 0.0;
        for (std::size_t j = 0; j < K_; ++j) s += phi_[j][idx[j]];
        return s;
    }

private:
    std::size_t K_;
    std::vector<double> grid_;
    std::vector<std::vector<double>> phi_;
    std::vector<std::size_t> lo_idx_, hi_idx_;
};

inline constexpr double kTieTolerance = 1e-12;

struct MaximizeResult {
    BidVector b_star;
    double value = 0.0;  // eval_expected_utility at b_star
};

namespace detail {

// Argmax with the tie rule: prefer a vector made of 0s and 1s if it is
// within tolerance of the optimum, else the lexicographically smallest one.
inline std::vector<std::size_t> argmax_indices(const SeparableObjective& obj,
                                               const std::vector<std::vector<double>>& S, double& best) {
    const std::size_t K = obj.K();
    const auto& g = obj.grid();
    const std::size_t M = g.size();
    best = *std::max_element(S[0].begin(), S[0].end());
    if (best == SeparableObjective::kNegInf) throw ConstraintError("no sorted bid vector satisfies the constraints");

    if (g.front() == 0.0 && g.back() == 1.0) {
        for (std::size_t ones = 0; ones <= K; ++ones) {
            std::vector<std::size_t> idx(K);
            bool ok = true;
            for (std::size_t j = 0; j < K && ok; ++j) {
                idx[j] = j < ones ? M - 1 : 0;
                ok = obj.feasible(j, idx[j]);
            }
            if (ok && obj.value_at(idx) >= best - kTieTolerance) return idx;
        }
    }

    std::vector<std::size_t> idx(K);
    std::size_t limit = M;
    double target = best;
    for (std::size_t j = 0; j < K; ++j) {
        std::size_t pick = limit;
        for (std::size_t m = 0; m < limit; ++m)
            if (S[j][m] != SeparableObjective::kNegInf && S[j][m] >= target - kTieTolerance) {
                pick = m;
                break;
            }
        if (pick == limit) throw std::logic_error("argmax reconstruction failed");
        idx[j] = pick;
        limit = pick + 1;
        if (j + 1 < K) {
            target = SeparableObjective::kNegInf;
            for (std::size_t m = 0; m < limit; ++m) target = std::max(target, S[j + 1][m]);
        }
    }
    return idx;
}

inline BidVector bid_from_indices(const std::vector<double>& grid, const std::vector<std::size_t>& idx) {
    std::vector<double> b(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) b[j] = grid[idx[j]];
    return BidVector(std::move(b));
}

}  // namespace detail

// Exact maximizer of the expected utility over sorted vectors on the candidate grid.
inline MaximizeResult maximize(AuctionFormat format, const CdfProfile& profile, const ValuationVector& v,
                               const BidConstraints& c = {}, std::span<const double> extra_grid = {}) {
    SeparableObjective obj(format, profile, v, candidate_grid(profile, v, c, extra_grid), c);
    double best = 0.0;
    const auto idx = detail::argmax_indices(obj, obj.backward(), best);
    BidVector b = detail::bid_from_indices(obj.grid(), idx);
    const double value = eval_expected_utility(format, profile, b, v);
    return {std::move(b), value};
}

struct HullResult {
    std::vector<Interval> boxes;
    double max_value = 0.0;  // optimum of the separable objective on the grid
};

// Per-coordinate range of grid vectors whose objective is at least `threshold`.
inline HullResult superlevel_hull(const SeparableObjective& obj, double threshold) {
    const std::size_t K = obj.K();
    const auto& g = obj.grid();
    const auto S = obj.backward();
    const auto F = obj.forward();
    HullResult out;
    out.max_value = *std::max_element(S[0].begin(), S[0].end());
    if (out.max_value == SeparableObjective::kNegInf) throw ConstraintError("no sorted bid vector satisfies the constraints");
    const double cut = threshold - kTieTolerance;
    for (std::size_t j = 0; j < K; ++j) {
        std::optional<std::size_t> first, last;
        for (std::size_t m = 0; m < g.size(); ++m) {
            if (S[j][m] == SeparableObjective::kNegInf || F[j][m] == SeparableObjective::kNegInf) continue;
            if (F[j][m] + S[j][m] - obj.phi(j, m) >= cut) {
                if (!first) first = m;
                last = m;
            }
        }
        if (!first) throw std::logic_error("superlevel_hull: empty superlevel set");
        out.boxes.push_back({g[*first], g[*last]});
    }
    return out;
}

inline HullResult superlevel_hull(AuctionFormat format, const CdfProfile& profile, const ValuationVector& v,
                                  double threshold, const BidConstraints& c = {},
                                  std::span<const double> extra_grid = {}) {
    return superlevel_hull(SeparableObjective(format, profile, v, candidate_grid(profile, v, c, extra_grid), c),
                           threshold);
}

}  // namespace mua
