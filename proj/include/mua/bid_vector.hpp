#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mua/errors.hpp"

namespace mua {

enum class AuctionFormat { Uniform, Discriminatory };

inline const char* to_string(AuctionFormat f) {
    return f == AuctionFormat::Uniform ? "uniform" : "discriminatory";
}

// Non-increasing K-vector with entries in [0,1]. Indexing is 0-based;
// element i corresponds to the (i+1)-th highest bid or unit.
template <class Tag>
class SortedUnitVector {
public:
    SortedUnitVector() = default;

    explicit SortedUnitVector(std::vector<double> values) : values_(std::move(values)) {
        validate();
    }
    SortedUnitVector(std::initializer_list<double> values) : values_(values) { validate(); }

    static SortedUnitVector zeros(std::size_t k) { return SortedUnitVector(std::vector<double>(k, 0.0)); }

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
    // Value with the convention that index K (one past the end) is 0.
    [[nodiscard]] double at_or_zero(std::size_t i) const noexcept {
        return i < values_.size() ? values_[i] : 0.0;
    }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& vec() const noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const SortedUnitVector&, const SortedUnitVector&) = default;

private:
    void validate() const {
        if (values_.empty()) throw DimensionError("vector must have at least one entry");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double x = values_[i];
            if (!(x >= 0.0 && x <= 1.0))
                throw DomainError("entry " + std::to_string(i) + " outside [0,1]");
            if (i > 0 && values_[i - 1] < x)
                throw DomainError("entries must be non-increasing");
        }
    }

    std::vector<double> values_;
};

struct BidTag {};
struct ValuationTag {};

using BidVector = SortedUnitVector<BidTag>;
using ValuationVector = SortedUnitVector<ValuationTag>;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
}

inline BidVector as_bid(const ValuationVector& v) { return BidVector(v.vec()); }

}  // namespace mua
