#ifndef SYNTHDSE_METRICS_HPP
#define SYNTHDSE_METRICS_HPP
//! \file
//! \brief Comparison statistics: population shares, share differences with
//! confidence intervals, mean imputation rate, relative differences on a
//! census or data-defined base, state adjusted difference and five-number
//! summaries.
//!
//! Percentages are plain numbers (4.913 means 4.913%).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthdse/domain.hpp"

namespace synthdse {

inline constexpr double default_z = 1.96;

/// Each unit's total as a fraction of the national total.
inline std::map<std::string, double> shares(const std::map<std::string, double> &totals) {
    double national = 0.0;
    for (const auto &[unit, t] : totals) {
        if (t < 0.0) {
            throw validation_error("negative total for unit '" + unit + "'");
        }
        national += t;
    }
    if (!(national > 0.0)) {
        throw undefined_rate_error("shares undefined: national total is zero");
    }
    std::map<std::string, double> out;
    for (const auto &[unit, t] : totals) {
        out[unit] = t / national;
    }
    return out;
}

struct ShareRecord {
    std::string unit;
    double share = 0.0;      // synthetic share
    double share_diff = 0.0; // synthetic share minus census share
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// diff = syn - census, interval diff -/+ z * se.
inline ShareRecord share_difference_ci(double syn_share, double census_share, double se,
                                       double z = default_z, std::string unit = {}) {
    if (se < 0.0) {
        throw validation_error("standard error must be nonnegative");
    }
    const double diff = syn_share - census_share;
    return {std::move(unit), syn_share, diff, se, diff - z * se, diff + z * se};
}

struct MeanImputationRate {
    std::optional<double> mir; // percent; nullopt when no stratum has C_ik != 0
    std::size_t n_star = 0;
};

/// Average over strata with C_ik != 0 of II_ik / C_ik, in percent. `cells`
/// are the unit's cells; several cells of one stratum are pooled first.
inline MeanImputationRate mean_imputation_rate(std::span<const CellCounts> cells) {
    std::map<StratumId, StratumTotals> pooled;
    for (const auto &c : cells) {
        auto &t = pooled[c.stratum];
        t.census += c.census;
        t.imputed += c.imputed;
    }
    MeanImputationRate out;
    double sum = 0.0;
    for (const auto &[_, t] : pooled) {
        if (t.census == 0) {
            continue;
        }
        sum += static_cast<double>(t.imputed) / static_cast<double>(t.census) * 100.0;
        ++out.n_star;
    }
    if (out.n_star > 0) {
        out.mir = sum / static_cast<double>(out.n_star);
    }
    return out;
}

/// (S - C) / C x 100.
inline double reldif_census(double synthetic, double census) {
    if (census == 0.0) {
        throw undefined_rate_error("relative difference undefined: census count is zero");
    }
    return (synthetic - census) / census * 100.0;
}

/// (S - DD) / DD x 100.
inline double reldif_dd(double synthetic, double data_defined) {
    if (data_defined == 0.0) {
        throw undefined_rate_error("relative difference undefined: DD is zero");
    }
    return (synthetic - data_defined) / data_defined * 100.0;
}

/// II_s / DD_s x 100, the state offset subtracted by sad().
inline double state_offset(double state_imputed, double state_dd) {
    if (state_dd == 0.0) {
        throw undefined_rate_error("state offset undefined: state DD is zero");
    }
    return state_imputed / state_dd * 100.0;
}

/// State offset from a published II/C percentage: II/DD = r / (1 - r).
inline double state_offset_from_ii_census_pct(double ii_census_pct) {
    const double r = ii_census_pct / 100.0;
    if (r >= 1.0) {
        throw undefined_rate_error("state imputation rate of 100% leaves DD = 0");
    }
    return r / (1.0 - r) * 100.0;
}

/// State adjusted difference: ((S_j - DD_j)/DD_j - II_s/DD_s) x 100.
inline double sad(double synthetic, double data_defined, double state_imputed, double state_dd) {
    if (data_defined == 0.0 || state_dd == 0.0) {
        throw undefined_rate_error("state adjusted difference undefined: zero DD");
    }
    return ((synthetic - data_defined) / data_defined - state_imputed / state_dd) * 100.0;
}

struct Summary {
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double sd = 0.0;               // sample sd, n - 1 denominator
    bool sd_defined = true;        // false for a single value (sd reported as 0)
    std::size_t n = 0;
};

inline Summary summarize(std::span<const double> values) {
    if (values.empty()) {
        throw validation_error("cannot summarize an empty list");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    Summary s;
    s.n = v.size();
    s.min = v.front();
    s.max = v.back();
    const std::size_t mid = v.size() / 2;
    s.median = v.size() % 2 == 1 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
    double sum = 0.0;
    for (double x : values) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(s.n);
    if (s.n == 1) {
        s.sd = 0.0;
        s.sd_defined = false;
        return s;
    }
    double ss = 0.0;
    for (double x : values) {
        ss += (x - s.mean) * (x - s.mean);
    }
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    return s;
}

} // namespace synthdse

#endif
