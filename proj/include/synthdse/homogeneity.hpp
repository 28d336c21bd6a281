#ifndef SYNTHDSE_HOMOGENEITY_HPP
#define SYNTHDSE_HOMOGENEITY_HPP
//! \file
//! \brief Tests of the synthetic assumption for imputations: the exact
//! proportionality condition under which all four formulas coincide, and a
//! Pearson chi-square test of homogeneity of imputation rates across the
//! regions of each post-stratum.
//!
//! The chi-square test is a standard stand-in for the original dissertation
//! test, whose construction is unpublished: per stratum, a 2 x K table with
//! rows (II, DD) and one column per region, df = K - 1; strata are combined
//! by summing statistics and degrees of freedom.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "synthdse/domain.hpp"

namespace synthdse {

struct EqualityCheck {
    bool holds = false;
    std::optional<double> max_deviation; // max_k |II_ik/II_i - C_ik/C_i|, when II_i > 0
};

/// True iff II_ik * C_i == C_ik * II_i for every region (exact integer test).
inline EqualityCheck equality_condition(std::span<const CellCounts> cells) {
    const auto t = totals_of(cells);
    if (t.census <= 0) {
        throw degenerate_stratum_error("equality condition needs C_i > 0");
    }
    EqualityCheck out;
    out.holds = std::all_of(cells.begin(), cells.end(), [&](const CellCounts &c) {
        return static_cast<__int128>(c.imputed) * t.census ==
               static_cast<__int128>(c.census) * t.imputed;
    });
    if (t.imputed > 0) {
        double worst = 0.0;
        for (const auto &c : cells) {
            const double d = std::abs(static_cast<double>(c.imputed) / static_cast<double>(t.imputed) -
                                      static_cast<double>(c.census) / static_cast<double>(t.census));
            worst = std::max(worst, d);
        }
        out.max_deviation = worst;
    }
    return out;
}

/// Upper tail P(X > x) of a chi-square variable with `df` degrees of freedom.
inline double chi_square_sf(double x, long df) {
    if (df < 1) {
        throw validation_error("chi-square degrees of freedom must be at least 1");
    }
    if (!(x >= 0.0)) {
        throw validation_error("chi-square statistic must be nonnegative");
    }
    if (x == 0.0) {
        return 1.0;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    return boost::math::gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

struct StratumChiSquare {
    StratumId stratum;
    double statistic = 0.0;
    long df = 0;
    double p_value = 1.0;
    bool low_expected = false; // some expected cell below 5; still included
};

struct ExcludedStratum {
    StratumId stratum;
    std::string reason;
};

struct HomogeneityResult {
    std::vector<StratumChiSquare> strata;
    std::vector<ExcludedStratum> excluded;
    double combined_statistic = 0.0;
    long combined_df = 0;
    double combined_p = 1.0;
    std::optional<StratumChiSquare> worst; // stratum with the smallest p-value
};

inline constexpr double low_expected_threshold = 5.0;

/// Pearson statistic for one stratum; nullopt plus a reason if it cannot be tested.
inline std::optional<StratumChiSquare> chi_square_stratum(const StratumId &id,
                                                          std::span<const CellCounts> cells,
                                                          std::string *why = nullptr) {
    const auto t = totals_of(cells);
    auto reject = [&](std::string reason) -> std::optional<StratumChiSquare> {
        if (why) {
            *why = std::move(reason);
        }
        return std::nullopt;
    };
    if (t.imputed <= 0) {
        return reject("II_i = 0");
    }
    if (t.data_defined <= 0) {
        return reject("DD_i = 0");
    }
    std::size_t columns = 0;
    StratumChiSquare out{id};
    const double census_total = static_cast<double>(t.census);
    const double ii_total = static_cast<double>(t.imputed);
    const double dd_total = static_cast<double>(t.data_defined);
    for (const auto &c : cells) {
        if (c.census == 0) {
            continue;
        }
        ++columns;
        const double ck = static_cast<double>(c.census);
        const double e_ii = ck * ii_total / census_total;
        const double e_dd = ck * dd_total / census_total;
        const double d_ii = static_cast<double>(c.imputed) - e_ii;
        const double d_dd = static_cast<double>(c.data_defined) - e_dd;
        out.statistic += d_ii * d_ii / e_ii + d_dd * d_dd / e_dd;
        if (e_ii < low_expected_threshold || e_dd < low_expected_threshold) {
            out.low_expected = true;
        }
    }
    if (columns < 2) {
        return reject("fewer than 2 regions with C_ik > 0");
    }
    out.df = static_cast<long>(columns) - 1;
    out.p_value = chi_square_sf(out.statistic, out.df);
    return out;
}

/// Per-stratum and combined homogeneity test over all strata in `cells`.
inline HomogeneityResult chi_square_homogeneity(std::span<const CellCounts> cells) {
    HomogeneityResult out;
    for (const auto &[id, stratum_cells] : group_by_stratum(cells)) {
        std::string why;
        if (auto r = chi_square_stratum(id, stratum_cells, &why)) {
            out.combined_statistic += r->statistic;
            out.combined_df += r->df;
            if (!out.worst || r->p_value < out.worst->p_value) {
                out.worst = *r;
            }
            out.strata.push_back(std::move(*r));
        } else {
            out.excluded.push_back({id, why});
        }
    }
    if (out.combined_df > 0) {
        out.combined_p = chi_square_sf(out.combined_statistic, out.combined_df);
    }
    return out;
}

} // namespace synthdse

#endif
