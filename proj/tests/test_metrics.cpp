#include <gtest/gtest.h>

#include <random>

#include "synthdse/metrics.hpp"

using namespace synthdse;

TEST(Shares, Values) {
    auto s = shares({{"A", 105}, {"B", 105}});
    EXPECT_DOUBLE_EQ(s["A"], 0.5);
    s = shares({{"A", 118.125}, {"B", 91.875}});
    EXPECT_DOUBLE_EQ(s["A"], 0.5625);
    EXPECT_DOUBLE_EQ(s["B"], 0.4375);
    EXPECT_DOUBLE_EQ(shares({{"A", 7}})["A"], 1.0);
    EXPECT_THROW(shares({{"A", 0}, {"B", 0}}), undefined_rate_error);
    EXPECT_THROW(shares({{"A", -1}, {"B", 3}}), validation_error);
}

TEST(Shares, SumToOneAndDifferencesToZero) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1e7);
    for (int trial = 0; trial < 500; ++trial) {
        std::map<std::string, double> a, b;
        for (int k = 0; k < 1 + trial % 60; ++k) {
            a["u" + std::to_string(k)] = u(rng);
            b["u" + std::to_string(k)] = u(rng);
        }
        const auto sa = shares(a), sb = shares(b);
        double total = 0.0, diff = 0.0;
        for (const auto &[unit, s] : sa) {
            total += s;
            diff += s - sb.at(unit);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_NEAR(diff, 0.0, 1e-12);
    }
}

TEST(ShareDifference, Interval) {
    const auto r = share_difference_ci(0.5625, 0.5, 0.01, 1.96, "A");
    EXPECT_NEAR(r.share_diff, 0.0625, 1e-15);
    EXPECT_NEAR(r.ci_lo, 0.0429, 1e-12);
    EXPECT_NEAR(r.ci_hi, 0.0821, 1e-12);
    const auto z = share_difference_ci(0.3, 0.2, 0.0);
    EXPECT_DOUBLE_EQ(z.ci_lo, z.share_diff);
    EXPECT_DOUBLE_EQ(z.ci_hi, z.share_diff);
    const auto e = share_difference_ci(0.4, 0.4, 0.02);
    EXPECT_DOUBLE_EQ(e.share_diff, 0.0);
    EXPECT_DOUBLE_EQ(e.ci_lo, -e.ci_hi);
    EXPECT_THROW(share_difference_ci(0.4, 0.4, -0.1), validation_error);
    EXPECT_DOUBLE_EQ(default_z, 1.96);
}

TEST(MeanImputationRate, Values) {
    std::vector<CellCounts> cells{{"S1", "A", 100, 90, 10}, {"S2", "A", 100, 70, 30}};
    auto m = mean_imputation_rate(cells);
    ASSERT_TRUE(m.mir);
    EXPECT_DOUBLE_EQ(*m.mir, 20.0);
    EXPECT_EQ(m.n_star, 2u);

    cells.push_back({"S3", "A", 0, 0, 0});
    m = mean_imputation_rate(cells);
    EXPECT_DOUBLE_EQ(*m.mir, 20.0);
    EXPECT_EQ(m.n_star, 2u);

    std::vector<CellCounts> none{{"S1", "A", 100, 100, 0}, {"S2", "A", 50, 50, 0}};
    EXPECT_DOUBLE_EQ(*mean_imputation_rate(none).mir, 0.0);
    std::vector<CellCounts> empty{{"S1", "A", 0, 0, 0}};
    EXPECT_FALSE(mean_imputation_rate(empty).mir);
    EXPECT_EQ(mean_imputation_rate(empty).n_star, 0u);
}

TEST(RelativeDifferences, Values) {
    const double s = 599525.0 * (1.0 + 1.470 / 100.0);
    EXPECT_NEAR(s, 608338.0, 0.1);
    EXPECT_NEAR(reldif_census(s, 599525), 1.470, 1e-9);
    EXPECT_DOUBLE_EQ(reldif_census(100, 100), 0.0);
    EXPECT_DOUBLE_EQ(reldif_census(105, 100), 5.0);
    EXPECT_NEAR(reldif_dd(608338, 567337), 7.2269, 1e-4);
    EXPECT_DOUBLE_EQ(reldif_dd(90, 90), 0.0);
    EXPECT_DOUBLE_EQ(reldif_dd(118.125, 90), 31.25);
    EXPECT_THROW(reldif_census(1, 0), undefined_rate_error);
    EXPECT_THROW(reldif_dd(1, 0), undefined_rate_error);
}

TEST(StateAdjustedDifference, HudsonAndBronx) {
    const double nj = state_offset_from_ii_census_pct(2.869);
    EXPECT_NEAR(nj, 2.9537, 1e-4);
    const double hudson = reldif_dd(599525.0 * 1.01470, 567337) - nj;
    EXPECT_NEAR(hudson, 4.273, 0.0005);

    const double ny = state_offset_from_ii_census_pct(4.913);
    EXPECT_NEAR(ny, 5.1668, 1e-4);
    const double s = 1285415.0 * (1.0 + 2.405 / 100.0);
    EXPECT_NEAR(reldif_dd(s, 1169523), 12.55266, 1e-4);
    EXPECT_NEAR(reldif_dd(s, 1169523) - ny, 7.386, 0.0005);
}

TEST(StateAdjustedDifference, ZeroPointAndTranslation) {
    const double ii_s = 300, dd_s = 10000, dd = 1234;
    const double s = dd * (1.0 + ii_s / dd_s);
    EXPECT_NEAR(sad(s, dd, ii_s, dd_s), 0.0, 1e-12);
    const double other = 1400;
    EXPECT_NEAR(sad(other, dd, ii_s, dd_s) + state_offset(ii_s, dd_s), reldif_dd(other, dd), 1e-12);
    EXPECT_THROW(sad(1, 0, 1, 1), undefined_rate_error);
    EXPECT_THROW(sad(1, 1, 1, 0), undefined_rate_error);
    // the published-rate route agrees with counts: r = II/C gives II/DD = r/(1-r)
    EXPECT_NEAR(state_offset_from_ii_census_pct(ii_s / (ii_s + dd_s) * 100), state_offset(ii_s, dd_s),
                1e-12);
}

TEST(Summarize, Values) {
    const std::vector<double> v{1, 2, 3};
    auto s = summarize(v);
    EXPECT_EQ(s.min, 1);
    EXPECT_EQ(s.max, 3);
    EXPECT_EQ(s.median, 2);
    EXPECT_EQ(s.mean, 2);
    EXPECT_DOUBLE_EQ(s.sd, 1);
    EXPECT_TRUE(s.sd_defined);

    const std::vector<double> nj{4.273, 3.255, 2.693};
    s = summarize(nj);
    EXPECT_NEAR(s.mean, 3.407, 5e-4);
    EXPECT_EQ(s.min, 2.693);
    EXPECT_EQ(s.max, 4.273);

    const std::vector<double> even{4, 1, 3, 2};
    EXPECT_DOUBLE_EQ(summarize(even).median, 2.5);

    const std::vector<double> one{7.5};
    s = summarize(one);
    EXPECT_EQ(s.median, 7.5);
    EXPECT_EQ(s.sd, 0.0);
    EXPECT_FALSE(s.sd_defined);

    EXPECT_THROW(summarize(std::vector<double>{}), validation_error);
}
