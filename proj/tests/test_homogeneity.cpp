#include <gtest/gtest.h>

#include <random>

#include "oracles/chi_square_oracle.hpp"
#include "synthdse/homogeneity.hpp"
#include "synthdse/io/loaders.hpp"
#include "test_support.hpp"

using namespace synthdse;

TEST(EqualityCondition, Examples) {
    std::vector<CellCounts> same{{"S", "A", 100, 90, 10}, {"S", "B", 100, 90, 10}};
    EXPECT_TRUE(equality_condition(same).holds);
    EXPECT_DOUBLE_EQ(*equality_condition(same).max_deviation, 0.0);

    std::vector<CellCounts> differ{{"S", "A", 100, 90, 10}, {"S", "B", 100, 70, 30}};
    const auto e = equality_condition(differ);
    EXPECT_FALSE(e.holds);
    EXPECT_DOUBLE_EQ(*e.max_deviation, 0.25);

    std::vector<CellCounts> none{{"S", "A", 100, 100, 0}, {"S", "B", 50, 50, 0}};
    EXPECT_TRUE(equality_condition(none).holds);
    EXPECT_FALSE(equality_condition(none).max_deviation);

    std::vector<CellCounts> empty{{"S", "A", 0, 0, 0}};
    EXPECT_THROW(equality_condition(empty), degenerate_stratum_error);
}

TEST(ChiSquareSf, KnownValues) {
    EXPECT_DOUBLE_EQ(chi_square_sf(0.0, 3), 1.0);
    EXPECT_NEAR(chi_square_sf(3.841459, 1), 0.05, 1e-7);
    EXPECT_NEAR(chi_square_sf(12.5, 1), 4.0695e-4, 1e-7);
    EXPECT_THROW(chi_square_sf(1.0, 0), error);
    EXPECT_THROW(chi_square_sf(-1.0, 2), error);
}

TEST(ChiSquareSf, MatchesClosedFormOracle) {
    for (long df : {1L, 2L, 3L, 4L, 5L, 7L, 10L, 25L, 50L, 101L, 500L}) {
        for (double q : {0.01, 0.3, 0.8, 1.0, 1.5, 2.5, 4.0}) {
            const double x = q * static_cast<double>(df);
            EXPECT_NEAR(chi_square_sf(x, df), oracle::chi_square_sf(x, df), 1e-10)
                << "x=" << x << " df=" << df;
        }
    }
}

TEST(ChiSquareSf, AccurateForLargeDf) {
    // against the oracle where its recurrence is still well conditioned
    for (long df : {1000L, 4000L, 10000L}) {
        for (double q : {0.95, 1.0, 1.05}) {
            const double x = q * static_cast<double>(df);
            EXPECT_NEAR(chi_square_sf(x, df), oracle::chi_square_sf(x, df), 1e-10);
        }
    }
}

TEST(ChiSquareSf, MonotoneInX) {
    for (long df : {1L, 4L, 30L}) {
        double prev = 1.0;
        for (double x = 0.0; x < 100.0; x += 0.25) {
            const double p = chi_square_sf(x, df);
            EXPECT_LE(p, prev);
            EXPECT_GE(p, 0.0);
            prev = p;
        }
    }
}

TEST(ChiSquareStratum, HandComputedTwoByTwo) {
    std::vector<CellCounts> cells{{"S", "A", 100, 90, 10}, {"S", "B", 100, 70, 30}};
    const auto r = chi_square_stratum("S", cells);
    ASSERT_TRUE(r);
    EXPECT_NEAR(r->statistic, 12.5, 1e-12);
    EXPECT_EQ(r->df, 1);
    EXPECT_NEAR(r->p_value, 4.07e-4, 5e-6);
    EXPECT_NEAR(r->statistic, oracle::pearson({{10, 30}, {90, 70}}), 1e-12);
}

TEST(ChiSquareStratum, ProportionalTableIsZero) {
    std::vector<CellCounts> cells{{"S", "A", 100, 90, 10}, {"S", "B", 300, 270, 30}};
    const auto r = chi_square_stratum("S", cells);
    ASSERT_TRUE(r);
    EXPECT_NEAR(r->statistic, 0.0, 1e-12);
    EXPECT_NEAR(r->p_value, 1.0, 1e-12);
}

TEST(ChiSquareStratum, ZeroIffEqualityHolds) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        auto cells = trial % 2 ? testing_support::proportional_stratum(rng, 2 + trial % 6)
                               : testing_support::random_stratum(rng, 2 + trial % 6, 5000);
        const auto r = chi_square_stratum("S", cells);
        if (!r) {
            continue;
        }
        const bool equal = equality_condition(cells).holds;
        EXPECT_EQ(equal, r->statistic < 1e-9) << trial;
    }
}

TEST(ChiSquareStratum, MatchesOracleOnRandomTables) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cells = testing_support::random_stratum(rng, 2 + trial % 12, 50000);
        std::vector<std::vector<double>> obs(2);
        for (const auto &c : cells) {
            obs[0].push_back(static_cast<double>(c.imputed));
            obs[1].push_back(static_cast<double>(c.data_defined));
        }
        const auto r = chi_square_stratum("S", cells);
        ASSERT_TRUE(r);
        EXPECT_NEAR(r->statistic, oracle::pearson(obs), 1e-8 * std::max(1.0, r->statistic));
        EXPECT_EQ(r->df, static_cast<long>(cells.size()) - 1);
    }
}

TEST(Homogeneity, ExclusionsFlagsAndCombination) {
    std::vector<CellCounts> cells{
        {"S1", "A", 100, 90, 10}, {"S1", "B", 100, 70, 30},          // df 1
        {"S2", "A", 1000, 960, 40}, {"S2", "B", 500, 470, 30}, {"S2", "C", 800, 790, 10}, // df 2
        {"S3", "A", 100, 100, 0}, {"S3", "B", 100, 100, 0},          // II_i = 0
        {"S4", "A", 50, 45, 5},                                     // one region
        {"S5", "A", 20, 18, 2}, {"S5", "B", 30, 29, 1}};             // small expected counts
    const auto h = chi_square_homogeneity(cells);
    ASSERT_EQ(h.strata.size(), 3u);
    ASSERT_EQ(h.excluded.size(), 2u);
    EXPECT_EQ(h.excluded[0].stratum, "S3");
    EXPECT_EQ(h.excluded[1].stratum, "S4");
    double sum = 0.0;
    long df = 0;
    for (const auto &s : h.strata) {
        sum += s.statistic;
        df += s.df;
    }
    EXPECT_DOUBLE_EQ(h.combined_statistic, sum);
    EXPECT_EQ(h.combined_df, df);
    EXPECT_EQ(h.combined_df, 4);
    EXPECT_NEAR(h.combined_p, oracle::chi_square_sf(sum, df), 1e-10);
    EXPECT_TRUE(h.strata[2].low_expected);
    EXPECT_FALSE(h.strata[1].low_expected);
    ASSERT_TRUE(h.worst);
    for (const auto &s : h.strata) {
        EXPECT_LE(h.worst->p_value, s.p_value);
    }
}

TEST(Homogeneity, HeterogeneousFixtureRejected) {
    const auto cells = io::load_cells(testing_support::test_data_path("heterogeneous_cells.csv"));
    EXPECT_EQ(cells.size(), 50u);
    const auto h = chi_square_homogeneity(cells);
    EXPECT_LT(h.combined_p, 1e-4);
    EXPECT_LT(h.worst->p_value, 1e-4);
}
