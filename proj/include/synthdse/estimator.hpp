#ifndef SYNTHDSE_ESTIMATOR_HPP
#define SYNTHDSE_ESTIMATOR_HPP
//! \file
//! \brief Post-stratum dual system estimates and their synthetic allocation
//! to regions under the Census Bureau formula and three alternatives.
//!
//! Every formula has the shape
//!
//!     S_ik = base_ik + (dse_i - sum_k base_ik) * w_ik / sum_k w_ik
//!
//! with (base, w) = (0, C) for the Bureau formula, (0, DD) for Alt1,
//! (C, II) for Alt2 and (C, DD) for Alt3, so all four share one normalization
//! argument: the regional values always sum to dse_i.

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "synthdse/domain.hpp"

namespace synthdse {

/// CE / (CE + EE).
inline double correct_enumeration_rate(Count correct, Count erroneous,
                                       const StratumId &stratum = {}) {
    if (correct < 0 || erroneous < 0) {
        throw undefined_rate_error("negative CE or EE for stratum '" + stratum + "'");
    }
    const Count total = correct + erroneous;
    if (total == 0) {
        throw undefined_rate_error("correct enumeration rate undefined for stratum '" + stratum +
                                   "': CE + EE = 0");
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

/// DD x CR / MR.
inline double dual_system_estimate(double data_defined, double cr, double mr,
                                   const StratumId &stratum = {}) {
    if (!(mr > 0.0)) {
        throw undefined_rate_error("match rate must be positive for stratum '" + stratum + "'");
    }
    return data_defined * cr / mr;
}

struct CorrectionFactors {
    double ccf = 0.0;
    double dcf = 0.0;
};

/// CCF = dse / C and DCF = dse / DD.
inline CorrectionFactors correction_factors(double dse, Count census, Count data_defined,
                                            const StratumId &stratum = {}) {
    if (census <= 0 || data_defined <= 0) {
        throw degenerate_stratum_error("stratum '" + stratum +
                                       "' needs positive C and DD for correction factors");
    }
    return {dse / static_cast<double>(census), dse / static_cast<double>(data_defined)};
}

/// Estimates one stratum from its survey inputs and all of its cells.
inline StratumEstimate estimate_stratum(const StratumSurveyInputs &survey,
                                        std::span<const CellCounts> cells) {
    const auto totals = totals_of(cells);
    const double cr = correct_enumeration_rate(survey.correct, survey.erroneous, survey.stratum);
    const double dse = dual_system_estimate(static_cast<double>(totals.data_defined), cr,
                                            survey.match_rate, survey.stratum);
    const auto f = correction_factors(dse, totals.census, totals.data_defined, survey.stratum);
    return {survey.stratum, dse, f.ccf, f.dcf, totals};
}

/// Estimates every stratum. Each survey row must have cells and vice versa.
inline std::vector<StratumEstimate> estimate_strata(std::span<const CellCounts> cells,
                                                    std::span<const StratumSurveyInputs> survey) {
    const auto by_stratum = group_by_stratum(cells);
    std::map<StratumId, const StratumSurveyInputs *> survey_of;
    for (const auto &s : survey) {
        survey_of[s.stratum] = &s;
    }
    std::string missing;
    for (const auto &[id, _] : by_stratum) {
        if (!survey_of.contains(id)) {
            missing += (missing.empty() ? "" : ", ") + id;
        }
    }
    for (const auto &[id, _] : survey_of) {
        if (!by_stratum.contains(id)) {
            missing += (missing.empty() ? "" : ", ") + id;
        }
    }
    if (!missing.empty()) {
        throw validation_error("strata without matching cells/survey rows: " + missing);
    }
    std::vector<StratumEstimate> out;
    out.reserve(by_stratum.size());
    for (const auto &[id, stratum_cells] : by_stratum) {
        out.push_back(estimate_stratum(*survey_of.at(id), stratum_cells));
    }
    return out;
}

// --- allocation ---------------------------------------------------------------

struct RegionValue {
    RegionId region;
    double value = 0.0;
};

struct StratumAllocation {
    std::vector<RegionValue> values; // one per input cell, in input order
    std::vector<std::string> warnings;
};

namespace detail {

/// base_k + (total - sum(base)) * w_k / sum(w). Requires sum(w) > 0.
inline std::vector<double> distribute(double total, std::span<const double> base,
                                      std::span<const double> weights) {
    double base_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k) {
        base_sum += base[k];
        weight_sum += weights[k];
    }
    const double residual = total - base_sum;
    std::vector<double> out(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        out[k] = base[k] + residual * weights[k] / weight_sum;
    }
    return out;
}

inline StratumAllocation label(std::span<const CellCounts> cells, std::vector<double> values) {
    StratumAllocation out;
    out.values.reserve(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        out.values.push_back({cells[k].region, values[k]});
    }
    return out;
}

inline void check_single_stratum(const StratumEstimate &est, std::span<const CellCounts> cells) {
    for (const auto &c : cells) {
        if (c.stratum != est.stratum) {
            throw validation_error("cell (" + c.stratum + ", " + c.region +
                                   ") passed to allocation of stratum '" + est.stratum + "'");
        }
    }
}

} // namespace detail

/// Distributes the stratum's dse to its regions under `formula`.
///
/// Alt2 with no imputations in the stratum (II_i = 0) falls back to the
/// Bureau allocation and records a warning. Values are never clamped; Alt2
/// can legitimately produce S_ik < C_ik, or even negative values when
/// dse_i is far below C_i.
inline StratumAllocation allocate(const StratumEstimate &est, std::span<const CellCounts> cells,
                                  FormulaKind formula) {
    detail::check_single_stratum(est, cells);
    const auto t = totals_of(cells);
    if (t.census <= 0) {
        throw degenerate_stratum_error("stratum '" + est.stratum + "' has C_i = 0");
    }
    const std::size_t n = cells.size();
    std::vector<double> zero(n, 0.0), census(n), dd(n), ii(n);
    for (std::size_t k = 0; k < n; ++k) {
        census[k] = static_cast<double>(cells[k].census);
        dd[k] = static_cast<double>(cells[k].data_defined);
        ii[k] = static_cast<double>(cells[k].imputed);
    }
    switch (formula) {
    case FormulaKind::census_bureau:
        return detail::label(cells, detail::distribute(est.dse, zero, census));
    case FormulaKind::alt1:
    case FormulaKind::alt3:
        if (t.data_defined <= 0) {
            throw degenerate_stratum_error("stratum '" + est.stratum + "' has DD_i = 0 under " +
                                           std::string(to_string(formula)));
        }
        return detail::label(cells, formula == FormulaKind::alt1
                                        ? detail::distribute(est.dse, zero, dd)
                                        : detail::distribute(est.dse, census, dd));
    case FormulaKind::alt2:
        if (t.imputed == 0) {
            auto out = detail::label(cells, detail::distribute(est.dse, zero, census));
            out.warnings.push_back("stratum '" + est.stratum +
                                   "': II_i = 0, alt2 falls back to census-proportional allocation");
            return out;
        }
        return detail::label(cells, detail::distribute(est.dse, census, ii));
    }
    throw error("unknown formula");
}

/// Alt2 with caller-supplied undercount weights (e.g. a subset of the
/// imputations); same zero-weight fallback as allocate().
inline StratumAllocation allocate_alt2_weighted(const StratumEstimate &est,
                                                std::span<const CellCounts> cells,
                                                std::span<const Count> weights) {
    detail::check_single_stratum(est, cells);
    if (weights.size() != cells.size()) {
        throw validation_error("alt2 weights do not match cells of stratum '" + est.stratum + "'");
    }
    Count weight_total = 0;
    for (auto w : weights) {
        weight_total += w;
    }
    if (weight_total == 0) {
        auto out = allocate(est, cells, FormulaKind::census_bureau);
        out.warnings.push_back("stratum '" + est.stratum +
                               "': alt2 weights sum to 0, falling back to census-proportional "
                               "allocation");
        return out;
    }
    if (totals_of(cells).census <= 0) {
        throw degenerate_stratum_error("stratum '" + est.stratum + "' has C_i = 0");
    }
    std::vector<double> census(cells.size()), w(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        census[k] = static_cast<double>(cells[k].census);
        w[k] = static_cast<double>(weights[k]);
    }
    return detail::label(cells, detail::distribute(est.dse, census, w));
}

struct AllocationResult {
    AllocationTable table;
    std::vector<std::string> warnings;
};

/// Allocates every stratum in `estimates` with `formula`.
inline AllocationResult allocate_all(std::span<const StratumEstimate> estimates,
                                     std::span<const CellCounts> cells, FormulaKind formula) {
    const auto by_stratum = group_by_stratum(cells);
    AllocationResult out;
    out.table.formula = formula;
    for (const auto &est : estimates) {
        auto it = by_stratum.find(est.stratum);
        if (it == by_stratum.end()) {
            throw validation_error("no cells for stratum '" + est.stratum + "'");
        }
        auto alloc = allocate(est, it->second, formula);
        for (auto &rv : alloc.values) {
            out.table.entries[{est.stratum, rv.region}] = rv.value;
        }
        for (auto &w : alloc.warnings) {
            out.warnings.push_back(std::move(w));
        }
    }
    return out;
}

/// Cells whose allocation is negative. Reported, never corrected.
inline std::vector<std::string> negative_allocations(const AllocationTable &table) {
    std::vector<std::string> out;
    for (const auto &[key, s] : table.entries) {
        if (s < 0.0) {
            out.push_back(std::string(to_string(table.formula)) + " allocation for (" + key.first +
                          ", " + key.second + ") is negative");
        }
    }
    return out;
}

// --- aggregation --------------------------------------------------------------

/// Sums S_ik over strata per geographic unit at `level`.
inline std::map<std::string, double> aggregate_regions(const AllocationTable &table,
                                                       const GeoHierarchy &geo, GeoLevel level) {
    std::map<std::string, double> out;
    std::set<RegionId> offenders;
    for (const auto &[key, s] : table.entries) {
        auto unit = geo.resolve(key.second, level);
        if (!unit) {
            offenders.insert(key.second);
            continue;
        }
        out[*unit] += s;
    }
    if (!offenders.empty()) {
        std::string msg = "regions without a " + std::string(to_string(level)) + ":";
        for (const auto &r : offenders) {
            msg += " " + r;
        }
        throw mapping_error(msg);
    }
    return out;
}

/// Census (or DD, II) totals per geographic unit, for share and SAD bases.
inline std::map<std::string, StratumTotals> aggregate_cells(std::span<const CellCounts> cells,
                                                            const GeoHierarchy &geo,
                                                            GeoLevel level) {
    std::map<std::string, StratumTotals> out;
    std::set<RegionId> offenders;
    for (const auto &c : cells) {
        auto unit = geo.resolve(c.region, level);
        if (!unit) {
            offenders.insert(c.region);
            continue;
        }
        auto &t = out[*unit];
        t.census += c.census;
        t.data_defined += c.data_defined;
        t.imputed += c.imputed;
    }
    if (!offenders.empty()) {
        std::string msg = "regions without a " + std::string(to_string(level)) + ":";
        for (const auto &r : offenders) {
            msg += " " + r;
        }
        throw mapping_error(msg);
    }
    return out;
}

// --- normalization --------------------------------------------------------------

struct NormalizationResidual {
    StratumId stratum;
    double residual = 0.0; // |sum_k S_ik - dse_i| / dse_i
    bool flagged = false;
};

inline constexpr double normalization_flag_threshold = 1e-9;

/// Relative normalization residual for every stratum present in `table`.
inline std::vector<NormalizationResidual>
check_normalization(const AllocationTable &table, std::span<const StratumEstimate> estimates) {
    std::map<StratumId, double> sums;
    for (const auto &[key, s] : table.entries) {
        sums[key.first] += s;
    }
    std::map<StratumId, double> dse_of;
    for (const auto &e : estimates) {
        dse_of[e.stratum] = e.dse;
    }
    std::vector<NormalizationResidual> out;
    for (const auto &[id, sum] : sums) {
        auto it = dse_of.find(id);
        double r = std::numeric_limits<double>::infinity();
        if (it != dse_of.end()) {
            const double dse = it->second;
            r = dse != 0.0 ? std::abs(sum - dse) / std::abs(dse) : std::abs(sum);
        }
        out.push_back({id, r, !(r <= normalization_flag_threshold)});
    }
    return out;
}

} // namespace synthdse

#endif
