#ifndef SYNTHDSE_DOMAIN_HPP
#define SYNTHDSE_DOMAIN_HPP
//! \file
//! \brief Domain types shared by every module: census cells, survey inputs,
//! per-stratum estimates, allocation tables, geography and the two-state
//! scenario used by the variance analysis.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synthdse/error.hpp"

namespace synthdse {

/// Person counts are exact integers; every derived quantity is a double.
using Count = std::int64_t;
using StratumId = std::string;
using RegionId = std::string;

/// Census counts for one (post-stratum, region) cell.
///
/// `census` is the total census count, `data_defined` the records with enough
/// information to enter matching, `imputed` the whole-person imputations
/// (including late adds). The identity census = data_defined + imputed is
/// checked by validate_cells, not enforced at construction.
struct CellCounts {
    StratumId stratum;
    RegionId region;
    Count census = 0;
    Count data_defined = 0;
    Count imputed = 0;

    friend bool operator==(const CellCounts &, const CellCounts &) = default;
};

/// E-sample and P-sample quantities for one post-stratum.
struct StratumSurveyInputs {
    StratumId stratum;
    Count correct = 0;   // CE
    Count erroneous = 0; // EE
    double match_rate = 1.0;

    friend bool operator==(const StratumSurveyInputs &, const StratumSurveyInputs &) = default;
};

/// Stratum sums of the cell counts.
struct StratumTotals {
    Count census = 0;
    Count data_defined = 0;
    Count imputed = 0;
};

inline StratumTotals totals_of(std::span<const CellCounts> cells) {
    StratumTotals t;
    for (const auto &c : cells) {
        t.census += c.census;
        t.data_defined += c.data_defined;
        t.imputed += c.imputed;
    }
    return t;
}

/// Dual system estimate and the two coverage factors for one post-stratum.
struct StratumEstimate {
    StratumId stratum;
    double dse = 0.0;
    double ccf = 0.0; // dse / C_i
    double dcf = 0.0; // dse / DD_i
    StratumTotals totals;
};

enum class FormulaKind { census_bureau, alt1, alt2, alt3 };

inline constexpr std::array<FormulaKind, 4> all_formulas{
    FormulaKind::census_bureau, FormulaKind::alt1, FormulaKind::alt2, FormulaKind::alt3};

inline constexpr std::string_view to_string(FormulaKind f) noexcept {
    switch (f) {
    case FormulaKind::census_bureau:
        return "cb";
    case FormulaKind::alt1:
        return "alt1";
    case FormulaKind::alt2:
        return "alt2";
    case FormulaKind::alt3:
        return "alt3";
    }
    return "?";
}

inline std::optional<FormulaKind> parse_formula(std::string_view s) noexcept {
    for (auto f : all_formulas) {
        if (to_string(f) == s) {
            return f;
        }
    }
    return std::nullopt;
}

using CellKey = std::pair<StratumId, RegionId>;

/// Per-cell synthetic estimates under one formula. The map keeps entries in
/// (stratum, region) order so every sum over it is reproducible.
struct AllocationTable {
    FormulaKind formula = FormulaKind::census_bureau;
    std::map<CellKey, double> entries;
};

enum class GeoLevel { region, group, state };

inline constexpr std::string_view to_string(GeoLevel l) noexcept {
    switch (l) {
    case GeoLevel::region:
        return "region";
    case GeoLevel::group:
        return "group";
    case GeoLevel::state:
        return "state";
    }
    return "?";
}

inline std::optional<GeoLevel> parse_geo_level(std::string_view s) noexcept {
    for (auto l : {GeoLevel::region, GeoLevel::group, GeoLevel::state}) {
        if (to_string(l) == s) {
            return l;
        }
    }
    return std::nullopt;
}

/// Region -> state map plus an optional region -> county-group map.
struct GeoHierarchy {
    std::map<RegionId, std::string> state_of;
    std::map<RegionId, std::string> group_of;

    /// Geographic unit of `region` at `level`, or nullopt when unmapped.
    [[nodiscard]] std::optional<std::string> resolve(const RegionId &region, GeoLevel level) const {
        switch (level) {
        case GeoLevel::region:
            return region;
        case GeoLevel::state: {
            auto it = state_of.find(region);
            return it == state_of.end() ? std::nullopt : std::optional{it->second};
        }
        case GeoLevel::group: {
            auto it = group_of.find(region);
            return it == group_of.end() ? std::nullopt : std::optional{it->second};
        }
        }
        return std::nullopt;
    }
};

/// Counts for a single post-stratum split across two states (no movers).
///
/// `lambda` is the size ratio of state 2 to state 1 (CE2 = lambda * CE1,
/// MN2 = lambda * MN1, NN2 = lambda * NN1); 1 for the equal-size case.
struct TwoStateScenario {
    Count ce1 = 0, ce2 = 0;
    Count ee1 = 0, ee2 = 0;
    Count mn1 = 0, mn2 = 0;
    Count nn1 = 0, nn2 = 0;
    Count ii1 = 0, ii2 = 0;
    double lambda = 1.0;

    friend bool operator==(const TwoStateScenario &, const TwoStateScenario &) = default;
};

// --- simulation configuration ------------------------------------------------

/// How true cell populations are produced for each replicate.
enum class TruthMode {
    fixed,  // truth = configured value every replicate
    poisson // truth ~ Poisson(configured value), redrawn per replicate
};

/// Which imputation records weight the Alt2 undercount distribution.
enum class ImputationPool {
    all,      // inherent imputations and late adds
    inherent, // inherent imputations only
};

/// Generating process for one (stratum, region) cell.
struct SimCell {
    StratumId stratum;
    RegionId region;
    Count truth = 0;
    double capture_prob = 1.0;  // census capture, per person, (0, 1]
    double ee_rate = 0.0;       // erroneous records per true person, [0, 1)
    double ii_rate = 0.0;       // inherent imputation among captured, [0, 1)
    double late_add_rate = 0.0; // late adds among captured non-imputed, [0, 1)
};

struct SimConfig {
    std::vector<SimCell> cells;
    TruthMode truth_mode = TruthMode::fixed;
    ImputationPool alt2_pool = ImputationPool::all;
    double psample_rate = 1.0; // P-sample inclusion probability, (0, 1]
    std::size_t n_reps = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t n_strata() const {
        std::set<StratumId> s;
        for (const auto &c : cells) {
            s.insert(c.stratum);
        }
        return s.size();
    }

    [[nodiscard]] std::size_t n_regions() const {
        std::set<RegionId> s;
        for (const auto &c : cells) {
            s.insert(c.region);
        }
        return s.size();
    }
};

/// Throws config_error naming the first out-of-range field.
inline void validate_config(const SimConfig &cfg) {
    if (cfg.cells.empty()) {
        throw config_error("simulation config has no cells");
    }
    if (cfg.n_reps < 1) {
        throw config_error("n_reps must be at least 1");
    }
    if (!(cfg.psample_rate > 0.0 && cfg.psample_rate <= 1.0)) {
        throw config_error("psample_rate must lie in (0, 1]");
    }
    std::set<CellKey> seen;
    for (const auto &c : cfg.cells) {
        const std::string where = " in cell (" + c.stratum + ", " + c.region + ")";
        if (!seen.insert({c.stratum, c.region}).second) {
            throw config_error("duplicate cell" + where);
        }
        if (c.truth <= 0) {
            throw config_error("truth must be positive" + where);
        }
        if (!(c.capture_prob > 0.0 && c.capture_prob <= 1.0)) {
            throw config_error("capture_prob must lie in (0, 1]" + where);
        }
        if (!(c.ee_rate >= 0.0 && c.ee_rate < 1.0)) {
            throw config_error("ee_rate must lie in [0, 1)" + where);
        }
        if (!(c.ii_rate >= 0.0 && c.ii_rate < 1.0)) {
            throw config_error("ii_rate must lie in [0, 1)" + where);
        }
        if (!(c.late_add_rate >= 0.0 && c.late_add_rate < 1.0)) {
            throw config_error("late_add_rate must lie in [0, 1)" + where);
        }
    }
}

// --- validation -------------------------------------------------------------

enum class ViolationKind { identity_mismatch, negative_count, duplicate_key };

struct Violation {
    std::size_t index = 0; // position in the input list
    ViolationKind kind = ViolationKind::identity_mismatch;
    std::string message;
};

/// Reports every malformed cell. An empty result means the data is
/// well-formed; callers decide whether to abort.
inline std::vector<Violation> validate_cells(std::span<const CellCounts> cells) {
    std::vector<Violation> out;
    std::set<CellKey> seen;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto &c = cells[i];
        const std::string where = "(" + c.stratum + ", " + c.region + ")";
        if (c.census < 0 || c.data_defined < 0 || c.imputed < 0) {
            out.push_back({i, ViolationKind::negative_count, "negative count in cell " + where});
        }
        if (c.census != c.data_defined + c.imputed) {
            out.push_back({i, ViolationKind::identity_mismatch,
                           "C ≠ DD + II in cell " + where + ": " + std::to_string(c.census) +
                               " != " + std::to_string(c.data_defined) + " + " +
                               std::to_string(c.imputed)});
        }
        if (!seen.insert({c.stratum, c.region}).second) {
            out.push_back({i, ViolationKind::duplicate_key, "duplicate cell " + where});
        }
    }
    return out;
}

/// Cells grouped by stratum, strata in key order, cells in input order.
inline std::map<StratumId, std::vector<CellCounts>>
group_by_stratum(std::span<const CellCounts> cells) {
    std::map<StratumId, std::vector<CellCounts>> out;
    for (const auto &c : cells) {
        out[c.stratum].push_back(c);
    }
    return out;
}

} // namespace synthdse

#endif
