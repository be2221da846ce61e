#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "mua/bid_vector.hpp"

namespace mua {

struct AuctionOutcome {
    std::size_t allocation = 0;
    std::vector<double> unit_prices;
    double utility = 0.0;
    // (K+1)-th largest of all 2K bids; equals the uniform unit price.
    double clearing_price = 0.0;

    friend bool operator==(const AuctionOutcome&, const AuctionOutcome&) = default;
};

// Number of units won. Ties go to the bidder.
inline std::size_t allocate(const BidVector& b, const BidVector& beta) {
    require_same_size(b.size(), beta.size(), "allocate");
    const std::size_t K = b.size();
    std::size_t x = 0;
    while (x < K && b[x] >= beta[K - 1 - x]) ++x;
    return x;
}

namespace detail {

inline double realized_utility(const ValuationVector& v, const std::vector<double>& prices) {
    double u = 0.0;
    for (std::size_t l = 0; l < prices.size(); ++l) u += v[l] - prices[l];
    return u;
}

}  // namespace detail

inline AuctionOutcome settle(AuctionFormat format, const BidVector& b, const BidVector& beta,
                             const ValuationVector& v) {
    require_same_size(b.size(), beta.size(), "settle");
    require_same_size(b.size(), v.size(), "settle");
    const std::size_t K = b.size();
    AuctionOutcome out;
    out.allocation = allocate(b, beta);
    const std::size_t x = out.allocation;
    const double rival = x > 0 ? beta[K - x] : 0.0;  // beta_{K-x+1}, 0 when x = 0
    out.clearing_price = std::max(b.at_or_zero(x), rival);
    if (format == AuctionFormat::Uniform)
        out.unit_prices.assign(x, out.clearing_price);
    else
        out.unit_prices.assign(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(x));
    out.utility = detail::realized_utility(v, out.unit_prices);
    return out;
}

// Reference implementation: merge and sort all 2K bids, bidder first on ties.
inline AuctionOutcome oracle_settle(AuctionFormat format, const BidVector& b, const BidVector& beta,
                                    const ValuationVector& v) {
    require_same_size(b.size(), beta.size(), "oracle_settle");
    require_same_size(b.size(), v.size(), "oracle_settle");
    const std::size_t K = b.size();
    struct Entry {
        double value;
        bool mine;
    };
    std::vector<Entry> all;
    all.reserve(2 * K);
    for (double x : b) all.push_back({x, true});
    for (double x : beta) all.push_back({x, false});
    std::stable_sort(all.begin(), all.end(), [](const Entry& l, const Entry& r) {
        if (l.value != r.value) return l.value > r.value;
        return l.mine && !r.mine;
    });
    AuctionOutcome out;
    for (std::size_t i = 0; i < K; ++i)
        if (all[i].mine) ++out.allocation;
    out.clearing_price = all[K].value;
    for (std::size_t l = 0; l < out.allocation; ++l)
        out.unit_prices.push_back(format == AuctionFormat::Uniform ? all[K].value : b[l]);
    out.utility = detail::realized_utility(v, out.unit_prices);
    return out;
}

enum class SlotStatus { At, Below, Above };

// Censored view of one opposing bid on the interval (lo, hi].
struct SlotObservation {
    double lo = 0.0;
    double hi = 0.0;
    SlotStatus status = SlotStatus::Above;
    double value = 0.0;  // meaningful only for At

    friend bool operator==(const SlotObservation&, const SlotObservation&) = default;
};

// slots[i] (0-based) concerns the opposing bid of rank K - i, i.e. slot 0
// observes the lowest opposing bid on (b_2, b_1].
struct BanditObservation {
    std::vector<SlotObservation> slots;

    [[nodiscard]] std::size_t size() const noexcept { return slots.size(); }
    // 1-based rank of the opposing bid observed by slot i.
    [[nodiscard]] std::size_t rank_of_slot(std::size_t i) const noexcept { return slots.size() - i; }

    friend bool operator==(const BanditObservation&, const BanditObservation&) = default;
};

// Rebuilds the per-slot view using only the allocation and the clearing price.
inline BanditObservation observation_from_outcome(const BidVector& b, std::size_t allocation,
                                                  double clearing_price) {
    const std::size_t K = b.size();
    BanditObservation obs;
    obs.slots.resize(K);
    for (std::size_t i = 0; i < K; ++i) {
        SlotObservation& s = obs.slots[i];
        s.lo = b.at_or_zero(i + 1);
        s.hi = b[i];
        const std::size_t slot = i + 1;  // 1-based
        if (slot < allocation) {
            s.status = SlotStatus::Below;
        } else if (slot == allocation) {
            if (clearing_price > s.lo) {
                s.status = SlotStatus::At;
                s.value = clearing_price;
            } else {
                s.status = SlotStatus::Below;
            }
        } else {
            s.status = SlotStatus::Above;
        }
    }
    return obs;
}

inline BanditObservation extract_bandit_observation(const BidVector& b, const BidVector& beta) {
    require_same_size(b.size(), beta.size(), "extract_bandit_observation");
    const std::size_t x = allocate(b, beta);
    const std::size_t K = b.size();
    const double price = std::max(b.at_or_zero(x), x > 0 ? beta[K - x] : 0.0);
    return observation_from_outcome(b, x, price);
}

// Direct evaluation of the censoring indicators with full knowledge of beta.
inline BanditObservation direct_bandit_observation(const BidVector& b, const BidVector& beta) {
    require_same_size(b.size(), beta.size(), "direct_bandit_observation");
    const std::size_t K = b.size();
    BanditObservation obs;
    obs.slots.resize(K);
    for (std::size_t i = 0; i < K; ++i) {
        SlotObservation& s = obs.slots[i];
        s.lo = b.at_or_zero(i + 1);
        s.hi = b[i];
        const double y = beta[K - 1 - i];
        if (y > s.lo && y <= s.hi) {
            s.status = SlotStatus::At;
            s.value = y;
        } else if (y <= s.lo) {
            s.status = SlotStatus::Below;
        } else {
            s.status = SlotStatus::Above;
        }
    }
    return obs;
}

}  // namespace mua
