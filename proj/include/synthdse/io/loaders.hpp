#ifndef SYNTHDSE_IO_LOADERS_HPP
#define SYNTHDSE_IO_LOADERS_HPP
//! \file
//! \brief Loaders for the delimited-text inputs.
//!
//! | file            | header                                                  |
//! |-----------------|---------------------------------------------------------|
//! | cells           | stratum,region,C,DD,II                                  |
//! | strata          | stratum,CE,EE,MR                                        |
//! | geo             | region,state[,group]                                    |
//! | standard errors | state,se_share_diff                                     |
//! | county groups   | state,group,C,DD,reldif_cb,reldif_alt1,reldif_alt2      |
//! |                 |   [,ii_c_pct,ii_dd_pct,sad_cb,sad_alt1,sad_alt2]        |
//! | state rates     | state,ii_tot[,ii_non_la,ii_la,census_share,...]         |
//! | scenarios       | id,CE1,CE2,EE1,EE2,MN1,MN2,NN1,NN2,II1,II2[,lambda]     |
//!
//! Every loader throws parse_error with file and line on malformed input and
//! validation_error listing every violation when the data breaks an invariant.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "synthdse/domain.hpp"
#include "synthdse/io/csv.hpp"

namespace synthdse::io {

inline std::string join_lines(const std::vector<std::string> &lines) {
    std::string out;
    for (const auto &l : lines) {
        out += "\n  " + l;
    }
    return out;
}

inline std::vector<CellCounts> cells_from_csv(const CsvTable &t) {
    const auto cs = t.require_column("stratum");
    const auto cr = t.require_column("region");
    const auto cc = t.require_column("C");
    const auto cd = t.require_column("DD");
    const auto ci = t.require_column("II");
    std::vector<CellCounts> cells;
    cells.reserve(t.rows.size());
    for (const auto &r : t.rows) {
        cells.push_back({parse_label(t, r, cs), parse_label(t, r, cr), parse_integer(t, r, cc),
                         parse_integer(t, r, cd), parse_integer(t, r, ci)});
    }
    std::vector<std::string> problems;
    for (const auto &v : validate_cells(cells)) {
        std::string what = v.kind == ViolationKind::identity_mismatch ? "C ≠ DD + II"
                           : v.kind == ViolationKind::negative_count  ? "negative count"
                                                                      : "duplicate (stratum, region)";
        problems.push_back(what + " at line " + std::to_string(t.rows[v.index].line) + " (" +
                           v.message + ")");
    }
    if (!problems.empty()) {
        throw validation_error(t.source + ": invalid cells:" + join_lines(problems));
    }
    return cells;
}

inline std::vector<CellCounts> load_cells(const std::string &path) {
    return cells_from_csv(read_csv(path));
}

inline std::vector<StratumSurveyInputs> load_strata(const std::string &path) {
    const auto t = read_csv(path);
    const auto cs = t.require_column("stratum");
    const auto cce = t.require_column("CE");
    const auto cee = t.require_column("EE");
    const auto cmr = t.require_column("MR");
    std::vector<StratumSurveyInputs> out;
    std::vector<std::string> problems;
    std::set<StratumId> seen;
    for (const auto &r : t.rows) {
        StratumSurveyInputs s{parse_label(t, r, cs), parse_integer(t, r, cce),
                              parse_integer(t, r, cee), parse_real(t, r, cmr)};
        const std::string at = " at line " + std::to_string(r.line);
        if (!(s.match_rate > 0.0)) {
            problems.push_back("match rate must be positive" + at);
        } else if (s.match_rate > 1.0) {
            problems.push_back("match rate must not exceed 1" + at);
        }
        if (s.correct < 0 || s.erroneous < 0) {
            problems.push_back("negative CE or EE" + at);
        }
        if (!seen.insert(s.stratum).second) {
            problems.push_back("duplicate stratum '" + s.stratum + "'" + at);
        }
        out.push_back(std::move(s));
    }
    if (!problems.empty()) {
        throw validation_error(path + ": invalid strata:" + join_lines(problems));
    }
    return out;
}

inline GeoHierarchy load_geo(const std::string &path) {
    const auto t = read_csv(path);
    const auto cr = t.require_column("region");
    const auto cs = t.require_column("state");
    const auto cg = t.column("group");
    GeoHierarchy geo;
    std::vector<std::string> problems;
    for (const auto &r : t.rows) {
        const auto region = parse_label(t, r, cr);
        if (!geo.state_of.emplace(region, parse_label(t, r, cs)).second) {
            problems.push_back("duplicate region '" + region + "' at line " +
                               std::to_string(r.line));
        }
        if (cg) {
            if (r.fields[*cg].empty()) {
                problems.push_back("region '" + region + "' has no group at line " +
                                   std::to_string(r.line));
            } else {
                geo.group_of[region] = r.fields[*cg];
            }
        }
    }
    if (!problems.empty()) {
        throw validation_error(path + ": invalid geography:" + join_lines(problems));
    }
    return geo;
}

inline std::map<std::string, double> load_se(const std::string &path) {
    const auto t = read_csv(path);
    const auto cs = t.require_column("state");
    const auto ce = t.require_column("se_share_diff");
    std::map<std::string, double> out;
    std::vector<std::string> problems;
    for (const auto &r : t.rows) {
        const double se = parse_real(t, r, ce);
        const std::string at = " at line " + std::to_string(r.line);
        if (se < 0.0) {
            problems.push_back("negative standard error" + at);
        }
        if (!out.emplace(parse_label(t, r, cs), se).second) {
            problems.push_back("duplicate state" + at);
        }
    }
    if (!problems.empty()) {
        throw validation_error(path + ": invalid standard errors:" + join_lines(problems));
    }
    return out;
}

/// Dangling references between loaded inputs; empty when consistent.
/// `geo` and `se` are checked only when given.
inline std::vector<std::string> check_references(const std::vector<CellCounts> &cells,
                                                 const std::vector<StratumSurveyInputs> *strata,
                                                 const GeoHierarchy *geo,
                                                 const std::map<std::string, double> *se) {
    std::vector<std::string> out;
    std::set<StratumId> cell_strata;
    std::set<RegionId> regions;
    for (const auto &c : cells) {
        cell_strata.insert(c.stratum);
        regions.insert(c.region);
    }
    if (strata) {
        std::set<StratumId> survey_strata;
        for (const auto &s : *strata) {
            survey_strata.insert(s.stratum);
        }
        for (const auto &s : cell_strata) {
            if (!survey_strata.contains(s)) {
                out.push_back("stratum '" + s + "' has cells but no survey row");
            }
        }
        for (const auto &s : survey_strata) {
            if (!cell_strata.contains(s)) {
                out.push_back("stratum '" + s + "' has a survey row but no cells");
            }
        }
    }
    if (geo) {
        for (const auto &r : regions) {
            if (!geo->state_of.contains(r)) {
                out.push_back("region '" + r + "' missing from geography");
            } else if (!geo->group_of.empty() && !geo->group_of.contains(r)) {
                out.push_back("region '" + r + "' has no county group");
            }
        }
        if (se) {
            std::set<std::string> states;
            for (const auto &r : regions) {
                if (auto it = geo->state_of.find(r); it != geo->state_of.end()) {
                    states.insert(it->second);
                }
            }
            for (const auto &s : states) {
                if (!se->contains(s)) {
                    out.push_back("state '" + s + "' has no standard error");
                }
            }
        }
    }
    return out;
}

// --- published county-group and state tables -------------------------------------

/// One county group with its published census-base relative differences
/// (cb, alt1, alt2) and, when present, the published comparison columns.
struct CountyGroupRow {
    std::string state;
    std::string group;
    Count census = 0;
    Count data_defined = 0;
    std::array<double, 3> reldif_census{};
    std::optional<double> ii_c_pct;
    std::optional<double> ii_dd_pct;
    std::optional<std::array<double, 3>> published_sad;
    std::size_t line = 0;
};

inline constexpr std::array<FormulaKind, 3> published_formulas{
    FormulaKind::census_bureau, FormulaKind::alt1, FormulaKind::alt2};

inline std::vector<CountyGroupRow> load_county_groups(const std::string &path) {
    const auto t = read_csv(path);
    const auto cs = t.require_column("state");
    const auto cg = t.require_column("group");
    const auto cc = t.require_column("C");
    const auto cd = t.require_column("DD");
    const std::array<std::size_t, 3> rel{t.require_column("reldif_cb"),
                                         t.require_column("reldif_alt1"),
                                         t.require_column("reldif_alt2")};
    const auto cic = t.column("ii_c_pct");
    const auto cid = t.column("ii_dd_pct");
    const std::array<std::optional<std::size_t>, 3> sad{t.column("sad_cb"), t.column("sad_alt1"),
                                                        t.column("sad_alt2")};
    std::vector<CountyGroupRow> out;
    std::vector<std::string> problems;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto &r : t.rows) {
        CountyGroupRow row;
        row.line = r.line;
        row.state = parse_label(t, r, cs);
        row.group = parse_label(t, r, cg);
        row.census = parse_integer(t, r, cc);
        row.data_defined = parse_integer(t, r, cd);
        for (std::size_t f = 0; f < 3; ++f) {
            row.reldif_census[f] = parse_real(t, r, rel[f]);
        }
        if (cic) {
            row.ii_c_pct = parse_real(t, r, *cic);
        }
        if (cid) {
            row.ii_dd_pct = parse_real(t, r, *cid);
        }
        if (sad[0] && sad[1] && sad[2]) {
            row.published_sad = std::array<double, 3>{
                parse_real(t, r, *sad[0]), parse_real(t, r, *sad[1]), parse_real(t, r, *sad[2])};
        }
        const std::string at = " at line " + std::to_string(r.line);
        if (row.data_defined <= 0 || row.census <= 0) {
            problems.push_back("C and DD must be positive" + at);
        } else if (row.data_defined > row.census) {
            problems.push_back("DD exceeds C" + at);
        }
        if (!seen.insert({row.state, row.group}).second) {
            problems.push_back("duplicate county group '" + row.group + "'" + at);
        }
        out.push_back(std::move(row));
    }
    if (!problems.empty()) {
        throw validation_error(path + ": invalid county groups:" + join_lines(problems));
    }
    return out;
}

struct StateRates {
    std::string state;
    double ii_tot = 0.0; // II as a percentage of C
    std::optional<double> ii_non_la;
    std::optional<double> ii_la;
    std::optional<double> census_share;
    std::optional<Count> n_post_strata;
    std::optional<double> mean_ii_post_strata;
};

inline std::map<std::string, StateRates> load_state_rates(const std::string &path) {
    const auto t = read_csv(path);
    const auto cs = t.require_column("state");
    const auto ct = t.require_column("ii_tot");
    const auto cn = t.column("ii_non_la");
    const auto cl = t.column("ii_la");
    const auto csh = t.column("census_share");
    const auto cp = t.column("n_post_strata");
    const auto cm = t.column("mean_ii_post_strata");
    std::map<std::string, StateRates> out;
    for (const auto &r : t.rows) {
        StateRates s;
        s.state = parse_label(t, r, cs);
        s.ii_tot = parse_real(t, r, ct);
        if (cn) s.ii_non_la = parse_real(t, r, *cn);
        if (cl) s.ii_la = parse_real(t, r, *cl);
        if (csh) s.census_share = parse_real(t, r, *csh);
        if (cp) s.n_post_strata = parse_integer(t, r, *cp);
        if (cm) s.mean_ii_post_strata = parse_real(t, r, *cm);
        if (!(s.ii_tot >= 0.0 && s.ii_tot < 100.0)) {
            throw validation_error(location(t, r) + ": ii_tot must lie in [0, 100)");
        }
        if (!out.emplace(s.state, s).second) {
            throw validation_error(location(t, r) + ": duplicate state '" + s.state + "'");
        }
    }
    return out;
}

struct NamedScenario {
    std::string id;
    TwoStateScenario scenario;
};

inline std::vector<NamedScenario> load_scenarios(const std::string &path) {
    const auto t = read_csv(path);
    const auto cid = t.require_column("id");
    const std::array<const char *, 10> names{"CE1", "CE2", "EE1", "EE2", "MN1",
                                             "MN2", "NN1", "NN2", "II1", "II2"};
    std::array<std::size_t, 10> cols{};
    for (std::size_t i = 0; i < names.size(); ++i) {
        cols[i] = t.require_column(names[i]);
    }
    const auto cl = t.column("lambda");
    std::vector<NamedScenario> out;
    for (const auto &r : t.rows) {
        NamedScenario ns{parse_label(t, r, cid), {}};
        auto &s = ns.scenario;
        Count *fields[] = {&s.ce1, &s.ce2, &s.ee1, &s.ee2, &s.mn1,
                           &s.mn2, &s.nn1, &s.nn2, &s.ii1, &s.ii2};
        for (std::size_t i = 0; i < cols.size(); ++i) {
            *fields[i] = parse_integer(t, r, cols[i]);
        }
        if (cl && !r.fields[*cl].empty()) {
            s.lambda = parse_real(t, r, *cl);
        } else if (s.ce1 > 0) {
            s.lambda = static_cast<double>(s.ce2) / static_cast<double>(s.ce1);
        }
        out.push_back(std::move(ns));
    }
    return out;
}

} // namespace synthdse::io

#endif
