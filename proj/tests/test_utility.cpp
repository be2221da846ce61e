#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "mua/auction.hpp"
#include "mua/distributions.hpp"
#include "mua/ecdf.hpp"
#include "mua/utility.hpp"
#include "test_support.hpp"

using namespace mua;
using namespace mua::testing;

namespace {

constexpr AuctionFormat kFormats[] = {AuctionFormat::Uniform, AuctionFormat::Discriminatory};

CdfProfile point_mass(std::vector<double> beta) {
    std::vector<MarginalPtr> ms;
    for (double x : beta) ms.push_back(std::make_shared<StepCdf>(std::vector<double>{x}, std::vector<double>{1.0}));
    return CdfProfile(std::move(ms));
}

CdfProfile uniform_k1() {
    return CdfProfile({std::make_shared<AnalyticMarginal>([](double x) { return std::clamp(x, 0.0, 1.0); },
                                                          std::vector<double>{})});
}

}  // namespace

TEST(EvalExpectedUtility, DocumentedExamples) {
    EXPECT_NEAR(eval_expected_utility(AuctionFormat::Discriminatory, uniform_k1(), BidVector({0.5}), ValuationVector({1.0})),
                0.25, 1e-12);
    const auto prof = point_mass({0.6, 0.2});
    const BidVector b({0.7, 0.3});
    const ValuationVector v({1.0, 0.5});
    EXPECT_NEAR(eval_expected_utility(AuctionFormat::Discriminatory, prof, b, v), 0.3, 1e-12);
    EXPECT_NEAR(eval_expected_utility(AuctionFormat::Uniform, prof, b, v), 0.7, 1e-12);
    for (auto f : kFormats)
        EXPECT_NEAR(eval_expected_utility(f, prof, b, v), settle(f, b, BidVector({0.6, 0.2}), v).utility, 1e-12);
}

TEST(EvalExpectedUtility, DimensionMismatchThrows) {
    const auto prof = point_mass({0.6, 0.2});
    EXPECT_THROW((void)eval_expected_utility(AuctionFormat::Uniform, prof, BidVector({0.5}), ValuationVector({1.0})),
                 DimensionError);
    EXPECT_THROW((void)eval_expected_utility(AuctionFormat::Uniform, prof, BidVector({0.5, 0.1}), ValuationVector({1.0})),
                 DimensionError);
}

// Single-atom profiles: the expectation is the realized utility of that atom.
TEST(EvalExpectedUtility, MatchesSettleOnRandomAtoms) {
    Rng rng(11);
    for (int it = 0; it < 2000; ++it) {
        const std::size_t K = 1 + rng() % 4;
        const BidVector beta = random_bid(rng, K);
        const BidVector b = random_bid(rng, K);
        const ValuationVector v = random_valuation(rng, K);
        for (auto f : kFormats)
            ASSERT_NEAR(eval_expected_utility(f, point_mass(beta.vec()), b, v), settle(f, b, beta, v).utility, 1e-12);
    }
}

TEST(EvalExpectedUtility, MatchesMonteCarloSettle) {
    Rng rng(3);
    const auto d = build_distribution(IidOrderStatsSpec{4, 3, BaseLaw::uniform()});
    for (int it = 0; it < 6; ++it) {
        const BidVector b = random_bid(rng, 3);
        const ValuationVector v = random_valuation(rng, 3);
        for (auto f : kFormats) {
            const int n = 20000;
            double s = 0.0, s2 = 0.0;
            Rng draw(100 + it);
            for (int i = 0; i < n; ++i) {
                const double u = settle(f, b, d->sample(draw), v).utility;
                s += u;
                s2 += u * u;
            }
            const double mean = s / n;
            const double se = std::sqrt(std::max(s2 / n - mean * mean, 0.0) / n);
            EXPECT_NEAR(eval_expected_utility(f, d->profile(), b, v), mean, 4 * se + 1e-9);
        }
    }
}

TEST(EvalExpectedUtility, CrossingProfilesDoNotThrow) {
    Rng rng(8);
    for (int it = 0; it < 200; ++it) {
        const auto prof = random_profile(rng, 3, 4, true);
        const BidVector b = random_bid(rng, 3);
        for (auto f : kFormats) EXPECT_TRUE(std::isfinite(eval_expected_utility(f, prof, b, random_valuation(rng, 3))));
    }
}

TEST(CandidateGrid, DocumentedExamples) {
    EcdfBuilder e;
    e.insert(0.2);
    e.insert(0.4);
    const CdfProfile prof({std::make_shared<StepCdf>(e.finalize())});
    EXPECT_EQ(candidate_grid(prof, ValuationVector({1.0})), (std::vector<double>{0.0, 0.2, 0.4, 1.0}));

    const CdfProfile empty({std::make_shared<PiecewiseConstant>(PiecewiseConstant::constant(0.0)),
                            std::make_shared<PiecewiseConstant>(PiecewiseConstant::constant(0.0))});
    EXPECT_EQ(candidate_grid(empty, ValuationVector({0.7, 0.3})), (std::vector<double>{0.0, 0.3, 0.7, 1.0}));

    BidConstraints c;
    c.pins = {std::nullopt, 0.3};
    const auto g = candidate_grid(point_mass({0.6, 0.2}), ValuationVector({0.9, 0.5}), c);
    EXPECT_TRUE(std::binary_search(g.begin(), g.end(), 0.3));
    EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
    EXPECT_EQ(std::adjacent_find(g.begin(), g.end()), g.end());
}

TEST(Maximize, DocumentedExamples) {
    EcdfBuilder e;
    e.insert(0.2);
    e.insert(0.4);
    const CdfProfile prof({std::make_shared<StepCdf>(e.finalize())});
    const auto r = maximize(AuctionFormat::Discriminatory, prof, ValuationVector({1.0}));
    EXPECT_EQ(r.b_star.vec(), std::vector<double>{0.4});
    EXPECT_NEAR(r.value, 0.6, 1e-12);

    for (auto f : kFormats) {
        const auto z = maximize(f, point_mass({0.6, 0.3, 0.1}), ValuationVector({0.0, 0.0, 0.0}));
        EXPECT_EQ(z.value, 0.0);
        EXPECT_EQ(z.b_star.vec(), (std::vector<double>{0.0, 0.0, 0.0}));
    }

    const auto u = maximize(AuctionFormat::Uniform, uniform_k1(), ValuationVector({1.0}));
    EXPECT_EQ(u.b_star.vec(), std::vector<double>{1.0});
    EXPECT_NEAR(u.value, 0.5, 1e-9);
}

TEST(Maximize, TruthfulFirstCoordinate) {
    Rng rng(21);
    BidConstraints c;
    c.first_coordinate_truthful = true;
    for (int it = 0; it < 50; ++it) {
        const auto prof = random_profile(rng, 3, 5, false);
        const auto v = coarse_valuation(rng, 3);
        const auto r = maximize(AuctionFormat::Uniform, prof, v, c);
        EXPECT_EQ(r.b_star[0], v[0]);
        // the truthful restriction loses nothing in the uniform format
        EXPECT_NEAR(r.value, maximize(AuctionFormat::Uniform, prof, v).value, 1e-12);
    }
}

TEST(Maximize, MatchesBruteForceEnumeration) {
    Rng rng(2024);
    int checked = 0;
    for (int it = 0; it < 100; ++it) {
        const std::size_t K = 1 + it % 3;
        const bool crossing = it % 4 == 3;
        const auto prof = random_profile(rng, K, 2 + rng() % 6, crossing);
        const auto v = coarse_valuation(rng, K);
        for (auto f : kFormats) {
            const auto grid = candidate_grid(prof, v);
            ASSERT_LE(grid.size(), 30u);
            const auto dp = maximize(f, prof, v);
            const auto bf = brute_force_maximize(f, prof, v, grid);
            EXPECT_NEAR(dp.value, bf.value, 1e-12) << "it=" << it;
            EXPECT_EQ(dp.b_star.vec(), bf.b_star) << "it=" << it << " format=" << to_string(f);
            ++checked;
        }
    }
    EXPECT_EQ(checked, 200);
}

TEST(Maximize, MatchesBruteForceUnderConstraints) {
    Rng rng(77);
    for (int it = 0; it < 60; ++it) {
        const std::size_t K = 2 + it % 2;
        const auto prof = random_profile(rng, K, 4, false);
        const auto v = coarse_valuation(rng, K);
        BidConstraints c;
        for (std::size_t j = 0; j < K; ++j) {
            double a = std::round(rng.uniform() * 10) / 10, b = std::round(rng.uniform() * 10) / 10;
            if (a > b) std::swap(a, b);
            c.boxes.push_back({a, b});
        }
        if (it % 3 == 0) c.pins = {std::nullopt, c.boxes[1].hi};
        for (auto f : kFormats) {
            const auto grid = candidate_grid(prof, v, c);
            const auto bf = brute_force_maximize(f, prof, v, grid, c);
            if (bf.b_star.empty()) {
                EXPECT_THROW((void)maximize(f, prof, v, c), ConstraintError);
                continue;
            }
            const auto dp = maximize(f, prof, v, c);
            EXPECT_NEAR(dp.value, bf.value, 1e-12);
            EXPECT_EQ(dp.b_star.vec(), bf.b_star);
        }
    }
}

TEST(Maximize, InfeasibleConstraintsThrow) {
    const auto prof = point_mass({0.6, 0.2});
    const ValuationVector v({0.9, 0.5});
    BidConstraints unsorted;
    unsorted.boxes = {{0.0, 0.2}, {0.5, 1.0}};
    EXPECT_THROW((void)maximize(AuctionFormat::Uniform, prof, v, unsorted), ConstraintError);
    BidConstraints outside;
    outside.boxes = {{0.0, 1.0}, {0.5, 1.0}};
    outside.pins = {std::nullopt, 0.3};
    EXPECT_THROW((void)maximize(AuctionFormat::Uniform, prof, v, outside), ConstraintError);
    BidConstraints conflict;
    conflict.first_coordinate_truthful = true;
    conflict.pins = {0.5};
    EXPECT_THROW((void)maximize(AuctionFormat::Uniform, prof, v, conflict), ConstraintError);
}

// The optimum over sorted vectors lies on the candidate grid.
TEST(Maximize, CandidateGridSuffices) {
    Rng rng(5);
    for (int it = 0; it < 60; ++it) {
        const std::size_t K = 1 + it % 3;
        const auto prof = random_profile(rng, K, 4, false);
        const auto v = coarse_valuation(rng, K);
        for (auto f : kFormats) {
            const auto dp = maximize(f, prof, v);
            std::vector<double> dense;
            for (int i = 0; i <= 200; ++i) dense.push_back(i / 200.0 + (i % 2 ? 1e-7 : 0.0));
            dense.back() = 1.0;
            double best = -std::numeric_limits<double>::infinity();
            for_each_sorted_vector(dense, K, [&](const std::vector<double>& b) {
                best = std::max(best, eval_expected_utility(f, prof, BidVector(b), v));
            });
            EXPECT_LE(best, dp.value + 1e-9) << "it=" << it;
        }
    }
}

TEST(EvalExpectedUtility, UniformClippingNeverHurts) {
    Rng rng(99);
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i) grid.push_back(i / 12.0);
    for (int it = 0; it < 60; ++it) {
        const std::size_t K = 1 + it % 3;
        const auto prof = random_profile(rng, K, 5, false);
        const auto v = random_valuation(rng, K);
        for_each_sorted_vector(grid, K, [&](const std::vector<double>& b) {
            std::vector<double> c(K);
            c[0] = v[0];
            for (std::size_t j = 1; j < K; ++j) c[j] = std::min(b[j], v[j]);
            ASSERT_GE(eval_expected_utility(AuctionFormat::Uniform, prof, BidVector(c), v),
                      eval_expected_utility(AuctionFormat::Uniform, prof, BidVector(b), v) - 1e-12);
        });
    }
}

TEST(SeparableObjective, AgreesWithDirectEvaluation) {
    Rng rng(17);
    for (int it = 0; it < 40; ++it) {
        const std::size_t K = 1 + it % 3;
        const auto prof = random_profile(rng, K, 5, it % 2 == 1);
        const auto v = coarse_valuation(rng, K);
        for (auto f : kFormats) {
            const SeparableObjective obj(f, prof, v, candidate_grid(prof, v));
            const auto& g = obj.grid();
            std::vector<std::size_t> idx(K);
            std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t j, std::size_t cap) {
                if (j == K) {
                    std::vector<double> b(K);
                    for (std::size_t i = 0; i < K; ++i) b[i] = g[idx[i]];
                    ASSERT_NEAR(obj.value_at(idx), eval_expected_utility(f, prof, BidVector(b), v), 1e-12);
                    return;
                }
                for (std::size_t m = 0; m <= cap; ++m) {
                    idx[j] = m;
                    rec(j + 1, m);
                }
            };
            rec(0, g.size() - 1);
        }
    }
}

TEST(SuperlevelHull, DocumentedExamples) {
    const auto prof = point_mass({0.6, 0.2});
    const ValuationVector v({0.9, 0.5});
    BidConstraints c;
    c.boxes = {{0.1, 0.9}, {0.0, 0.8}};
    const auto full = superlevel_hull(AuctionFormat::Uniform, prof, v, -std::numeric_limits<double>::infinity(), c);
    EXPECT_EQ(full.boxes, (std::vector<Interval>{{0.1, 0.9}, {0.0, 0.8}}));

    for (auto f : kFormats) {
        const auto grid = candidate_grid(prof, v);
        const SeparableObjective obj(f, prof, v, grid);
        const auto top = superlevel_hull(obj, obj.max_value());
        std::vector<double> lo(2, 2.0), hi(2, -1.0);
        for_each_sorted_vector(grid, 2, [&](const std::vector<double>& b) {
            if (eval_expected_utility(f, prof, BidVector(b), v) >= obj.max_value() - kTieTolerance)
                for (int j = 0; j < 2; ++j) {
                    lo[j] = std::min(lo[j], b[j]);
                    hi[j] = std::max(hi[j], b[j]);
                }
        });
        for (int j = 0; j < 2; ++j) EXPECT_EQ(top.boxes[j], (Interval{lo[j], hi[j]}));
    }
}

TEST(SuperlevelHull, SpansTwoSeparatedNearOptimalBids) {
    // two atoms: bidding 0.3 wins against the low atom cheaply, 0.8 wins against both
    const auto d = DiscreteDistribution(DiscreteSpec{{BidVector({0.8}), BidVector({0.3})}, {0.5, 0.5}});
    const ValuationVector v({1.0});
    const SeparableObjective obj(AuctionFormat::Discriminatory, d.profile(), v, candidate_grid(d.profile(), v));
    // U(0.3) = 0.35, U(0.8) = 0.2
    const auto h = superlevel_hull(obj, 0.19);
    EXPECT_EQ(h.boxes[0], (Interval{0.3, 0.8}));
    EXPECT_EQ(superlevel_hull(obj, 0.3).boxes[0], (Interval{0.3, 0.3}));
}

TEST(SuperlevelHull, MatchesBruteForceAndContainsMaximizers) {
    Rng rng(31);
    for (int it = 0; it < 100; ++it) {
        const std::size_t K = 2;
        const auto prof = random_profile(rng, K, 3 + rng() % 5, it % 4 == 0);
        const auto v = coarse_valuation(rng, K);
        for (auto f : kFormats) {
            const auto grid = candidate_grid(prof, v);
            ASSERT_LE(grid.size(), 30u);
            const SeparableObjective obj(f, prof, v, grid);
            const double thr = obj.max_value() - rng.uniform() * 0.3;
            const auto h = superlevel_hull(obj, thr);
            std::vector<double> lo(K, 2.0), hi(K, -1.0);
            for_each_sorted_vector(grid, K, [&](const std::vector<double>& b) {
                if (eval_expected_utility(f, prof, BidVector(b), v) >= thr - kTieTolerance)
                    for (std::size_t j = 0; j < K; ++j) {
                        lo[j] = std::min(lo[j], b[j]);
                        hi[j] = std::max(hi[j], b[j]);
                    }
            });
            const auto best = maximize(f, prof, v);
            for (std::size_t j = 0; j < K; ++j) {
                EXPECT_EQ(h.boxes[j], (Interval{lo[j], hi[j]})) << "it=" << it;
                EXPECT_TRUE(h.boxes[j].contains(best.b_star[j]));
            }
        }
    }
}

TEST(SuperlevelHull, ThresholdAboveMaximumIsAContractViolation) {
    const auto prof = point_mass({0.6, 0.2});
    const ValuationVector v({0.9, 0.5});
    const SeparableObjective obj(AuctionFormat::Uniform, prof, v, candidate_grid(prof, v));
    EXPECT_THROW((void)superlevel_hull(obj, obj.max_value() + 1.0), std::logic_error);
}
