#include "cli_app.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "synthdse/estimator.hpp"
#include "synthdse/homogeneity.hpp"
#include "synthdse/io/loaders.hpp"
#include "synthdse/io/report.hpp"
#include "synthdse/io/sim_config.hpp"
#include "synthdse/metrics.hpp"
#include "synthdse/rng.hpp"
#include "synthdse/simulator.hpp"
#include "synthdse/variance_lab.hpp"

namespace synthdse::cli {

namespace {

using io::Percent;
using io::Report;
using io::Table;
using io::Value;

struct OutputOptions {
    std::string format = "csv";
    std::string path;
};

void add_output_options(CLI::App *cmd, OutputOptions &o) {
    cmd->add_option("--format", o.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", o.path,
                    "output file; defaults to $SYNTHDSE_OUTPUT_DIR/<command>.<format>, else stdout");
}

void emit(const Report &r, const OutputOptions &o, std::ostream &out) {
    std::string path = o.path;
    if (path.empty()) {
        if (const char *dir = std::getenv("SYNTHDSE_OUTPUT_DIR"); dir && *dir) {
            path = (std::filesystem::path(dir) / (r.manifest.command + "." + o.format)).string();
        }
    }
    io::write_report(r, o.format == "json" ? io::Format::json : io::Format::csv, path, out);
}

std::vector<FormulaKind> parse_formulas(const std::string &name) {
    if (name == "all") {
        return {all_formulas.begin(), all_formulas.end()};
    }
    if (auto f = parse_formula(name)) {
        return {*f};
    }
    throw CLI::ValidationError("--formula", "expected cb, alt1, alt2, alt3 or all");
}

nlohmann::json formula_names(std::span<const FormulaKind> fs) {
    auto j = nlohmann::json::array();
    for (auto f : fs) {
        j.push_back(std::string(to_string(f)));
    }
    return j;
}

void require_references(const std::vector<std::string> &problems) {
    if (!problems.empty()) {
        throw validation_error("inconsistent inputs:" + io::join_lines(problems));
    }
}

/// Group -> state, requiring every region of a group to sit in one state.
std::map<std::string, std::string> state_of_groups(const GeoHierarchy &geo) {
    std::map<std::string, std::string> out;
    std::vector<std::string> problems;
    for (const auto &[region, group] : geo.group_of) {
        auto st = geo.state_of.find(region);
        if (st == geo.state_of.end()) {
            continue;
        }
        auto [it, fresh] = out.emplace(group, st->second);
        if (!fresh && it->second != st->second) {
            problems.push_back("group '" + group + "' spans states '" + it->second + "' and '" +
                               st->second + "'");
        }
    }
    if (!problems.empty()) {
        throw mapping_error("county groups must nest in states:" + io::join_lines(problems));
    }
    return out;
}

// --- estimate / allocate ----------------------------------------------------------

struct ModelInputs {
    std::vector<CellCounts> cells;
    std::vector<StratumSurveyInputs> strata;
    std::vector<StratumEstimate> estimates;
};

ModelInputs load_model(const std::string &cells_path, const std::string &strata_path,
                       Report &r) {
    ModelInputs m;
    m.cells = io::load_cells(cells_path);
    m.strata = io::load_strata(strata_path);
    require_references(io::check_references(m.cells, &m.strata, nullptr, nullptr));
    r.manifest.inputs.push_back(io::record_input("cells", cells_path));
    r.manifest.inputs.push_back(io::record_input("strata", strata_path));
    m.estimates = estimate_strata(m.cells, m.strata);
    return m;
}

Report run_estimate(const std::string &cells_path, const std::string &strata_path) {
    Report r;
    r.manifest.command = "estimate";
    const auto m = load_model(cells_path, strata_path, r);
    std::map<StratumId, StratumSurveyInputs> survey;
    for (const auto &s : m.strata) {
        survey.emplace(s.stratum, s);
    }
    Table t{"estimates",
            {"stratum", "C", "DD", "II", "CE", "EE", "MR", "CR", "dse", "ccf", "dcf"},
            {}};
    for (const auto &e : m.estimates) {
        const auto &s = survey.at(e.stratum);
        t.rows.push_back({e.stratum, e.totals.census, e.totals.data_defined, e.totals.imputed,
                          s.correct, s.erroneous, s.match_rate,
                          correct_enumeration_rate(s.correct, s.erroneous, s.stratum), e.dse,
                          e.ccf, e.dcf});
    }
    r.tables.push_back(std::move(t));
    return r;
}

Report run_allocate(const std::string &cells_path, const std::string &strata_path,
                    const std::string &formula_name, const std::string &geo_path,
                    const std::string &level_name, std::ostream &err) {
    Report r;
    r.manifest.command = "allocate";
    const auto formulas = parse_formulas(formula_name);
    const auto level = parse_geo_level(level_name);
    if (!level) {
        throw CLI::ValidationError("--level", "expected region, group or state");
    }
    if (*level != GeoLevel::region && geo_path.empty()) {
        throw CLI::ValidationError("--level", "aggregation above region needs --geo");
    }
    const auto m = load_model(cells_path, strata_path, r);
    std::optional<GeoHierarchy> geo;
    if (!geo_path.empty()) {
        geo = io::load_geo(geo_path);
        r.manifest.inputs.push_back(io::record_input("geo", geo_path));
        require_references(io::check_references(m.cells, nullptr, &*geo, nullptr));
    }
    r.manifest.parameters["formulas"] = formula_names(formulas);
    r.manifest.parameters["level"] = std::string(to_string(*level));

    Table alloc{"allocations", {"formula", "stratum", "region", "S"}, {}};
    Table agg{"aggregates", {"formula", "unit", "S"}, {}};
    for (auto f : formulas) {
        const auto res = allocate_all(m.estimates, m.cells, f);
        for (const auto &w : res.warnings) {
            err << "warning: " << w << '\n';
        }
        for (const auto &w : negative_allocations(res.table)) {
            err << "warning: negative allocation " << w << '\n';
        }
        for (const auto &[key, s] : res.table.entries) {
            alloc.rows.push_back({std::string(to_string(f)), key.first, key.second, s});
        }
        if (*level != GeoLevel::region) {
            for (const auto &[unit, s] : aggregate_regions(res.table, *geo, *level)) {
                agg.rows.push_back({std::string(to_string(f)), unit, s});
            }
        }
    }
    r.tables.push_back(std::move(alloc));
    if (*level != GeoLevel::region) {
        r.tables.push_back(std::move(agg));
    }
    return r;
}

// --- compare ----------------------------------------------------------------------

Report run_compare(const std::string &cells_path, const std::string &strata_path,
                   const std::string &geo_path, const std::string &se_path,
                   const std::string &level_name, double z, const std::string &plot_path) {
    Report r;
    r.manifest.command = "compare";
    const auto level = parse_geo_level(level_name);
    if (!level || *level == GeoLevel::region) {
        throw CLI::ValidationError("--level", "expected group or state");
    }
    if (!(z > 0.0)) {
        throw CLI::ValidationError("--z", "must be positive");
    }
    const auto m = load_model(cells_path, strata_path, r);
    const auto geo = io::load_geo(geo_path);
    r.manifest.inputs.push_back(io::record_input("geo", geo_path));
    std::optional<std::map<std::string, double>> se;
    if (!se_path.empty()) {
        se = io::load_se(se_path);
        r.manifest.inputs.push_back(io::record_input("se", se_path));
        if (*level != GeoLevel::state) {
            throw CLI::ValidationError("--se", "standard errors are given per state");
        }
    }
    require_references(io::check_references(m.cells, nullptr, &geo, se ? &*se : nullptr));
    r.manifest.parameters["formulas"] = formula_names(all_formulas);
    r.manifest.parameters["level"] = std::string(to_string(*level));
    r.manifest.parameters["z"] = z;

    std::map<std::string, double> census_totals;
    for (const auto &[unit, t] : aggregate_cells(m.cells, geo, *level)) {
        census_totals[unit] = static_cast<double>(t.census);
    }
    const auto census_share = shares(census_totals);
    std::array<std::map<std::string, double>, 4> syn_share;
    for (std::size_t f = 0; f < 4; ++f) {
        const auto res = allocate_all(m.estimates, m.cells, all_formulas[f]);
        syn_share[f] = shares(aggregate_regions(res.table, geo, *level));
    }

    Table t{"shares", {"unit", "census_share"}, {}};
    for (auto f : all_formulas) {
        t.columns.push_back("share_" + std::string(to_string(f)));
    }
    for (auto f : all_formulas) {
        t.columns.push_back("diff_" + std::string(to_string(f)));
    }
    for (const char *c : {"se", "ci_lo", "ci_hi"}) {
        t.columns.push_back(c);
    }
    Table plot{"plot", {"state"}, {}};
    for (auto f : all_formulas) {
        plot.columns.push_back("diff_" + std::string(to_string(f)));
    }
    plot.columns.push_back("ci_lo");
    plot.columns.push_back("ci_hi");

    for (const auto &[unit, cs] : census_share) {
        std::vector<Value> row{unit, cs};
        std::vector<Value> prow{unit};
        for (std::size_t f = 0; f < 4; ++f) {
            row.push_back(syn_share[f].at(unit));
        }
        for (std::size_t f = 0; f < 4; ++f) {
            const double d = syn_share[f].at(unit) - cs;
            row.push_back(d);
            prow.push_back(d);
        }
        if (se) {
            // interval around the census-bureau share difference
            const auto rec = share_difference_ci(syn_share[0].at(unit), cs, se->at(unit), z, unit);
            row.insert(row.end(), {rec.se, rec.ci_lo, rec.ci_hi});
            prow.insert(prow.end(), {rec.ci_lo, rec.ci_hi});
        } else {
            row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}});
            prow.insert(prow.end(), {std::monostate{}, std::monostate{}});
        }
        t.rows.push_back(std::move(row));
        plot.rows.push_back(std::move(prow));
    }
    if (!plot_path.empty()) {
        io::write_file(plot_path, io::to_csv(plot));
    }
    r.tables.push_back(std::move(t));
    return r;
}

// --- sad --------------------------------------------------------------------------

struct SadCheck {
    std::vector<std::string> deviations;
    double max_deviation = 0.0;
};

Report run_sad_groups(const std::vector<std::string> &group_paths, const std::string &rates_path,
                      bool check, double tolerance, SadCheck &result) {
    Report r;
    r.manifest.command = "sad";
    const auto rates = io::load_state_rates(rates_path);
    r.manifest.inputs.push_back(io::record_input("state_rates", rates_path));
    r.manifest.parameters["formulas"] = formula_names(io::published_formulas);
    r.manifest.parameters["level"] = "group";

    Table t{"sad", {"state", "group", "C", "DD", "state_offset"}, {}};
    for (auto f : io::published_formulas) {
        t.columns.push_back("reldif_dd_" + std::string(to_string(f)));
    }
    for (auto f : io::published_formulas) {
        t.columns.push_back("sad_" + std::string(to_string(f)));
    }
    if (check) {
        for (auto f : io::published_formulas) {
            t.columns.push_back("published_sad_" + std::string(to_string(f)));
        }
        t.columns.push_back("max_abs_deviation");
        r.manifest.parameters["tolerance"] = tolerance;
    }
    for (const auto &path : group_paths) {
        const auto rows = io::load_county_groups(path);
        r.manifest.inputs.push_back(io::record_input("groups", path));
        for (const auto &g : rows) {
            auto rate = rates.find(g.state);
            if (rate == rates.end()) {
                throw validation_error(path + ":" + std::to_string(g.line) + ": state '" +
                                       g.state + "' missing from state rates");
            }
            const double offset = state_offset_from_ii_census_pct(rate->second.ii_tot);
            const double census = static_cast<double>(g.census);
            const double dd = static_cast<double>(g.data_defined);
            std::vector<Value> row{g.state, g.group, g.census, g.data_defined, Percent{offset}};
            std::array<double, 3> sads{};
            for (std::size_t f = 0; f < 3; ++f) {
                const double s = census * (1.0 + g.reldif_census[f] / 100.0);
                row.push_back(Percent{reldif_dd(s, dd)});
                sads[f] = reldif_dd(s, dd) - offset;
            }
            for (double v : sads) {
                row.push_back(Percent{v});
            }
            if (check) {
                if (!g.published_sad) {
                    throw validation_error(path + ": --check needs sad_cb, sad_alt1, sad_alt2 columns");
                }
                double worst = 0.0;
                for (std::size_t f = 0; f < 3; ++f) {
                    const double dev = std::abs(sads[f] - (*g.published_sad)[f]);
                    worst = std::max(worst, dev);
                    row.push_back(Percent{(*g.published_sad)[f]});
                    if (dev > tolerance) {
                        result.deviations.push_back(
                            g.state + " " + g.group + " " + std::string(to_string(io::published_formulas[f])) +
                            ": computed " + io::format_percent(sads[f]) + ", published " +
                            io::format_percent((*g.published_sad)[f]));
                    }
                }
                result.max_deviation = std::max(result.max_deviation, worst);
                row.push_back(Percent{worst});
            }
            t.rows.push_back(std::move(row));
        }
    }
    r.tables.push_back(std::move(t));
    return r;
}

Report run_sad_model(const std::string &cells_path, const std::string &strata_path,
                     const std::string &geo_path, const std::string &level_name) {
    Report r;
    r.manifest.command = "sad";
    const auto level = parse_geo_level(level_name);
    if (!level || *level == GeoLevel::state) {
        throw CLI::ValidationError("--level", "expected region or group");
    }
    const auto m = load_model(cells_path, strata_path, r);
    const auto geo = io::load_geo(geo_path);
    r.manifest.inputs.push_back(io::record_input("geo", geo_path));
    require_references(io::check_references(m.cells, nullptr, &geo, nullptr));
    r.manifest.parameters["formulas"] = formula_names(all_formulas);
    r.manifest.parameters["level"] = std::string(to_string(*level));

    const auto units = aggregate_cells(m.cells, geo, *level);
    const auto states = aggregate_cells(m.cells, geo, GeoLevel::state);
    std::map<std::string, std::string> state_of_unit =
        *level == GeoLevel::group ? state_of_groups(geo) : geo.state_of;
    std::array<std::map<std::string, double>, 4> syn;
    for (std::size_t f = 0; f < 4; ++f) {
        syn[f] = aggregate_regions(allocate_all(m.estimates, m.cells, all_formulas[f]).table, geo,
                                   *level);
    }
    Table t{"sad", {"state", "unit", "C", "DD", "state_offset"}, {}};
    for (const char *kind : {"reldif_c_", "reldif_dd_", "sad_"}) {
        for (auto f : all_formulas) {
            t.columns.push_back(kind + std::string(to_string(f)));
        }
    }
    for (const auto &[unit, tot] : units) {
        const auto &state = state_of_unit.at(unit);
        const auto &st = states.at(state);
        const double offset = state_offset(static_cast<double>(st.imputed),
                                           static_cast<double>(st.data_defined));
        const double census = static_cast<double>(tot.census);
        const double dd = static_cast<double>(tot.data_defined);
        std::vector<Value> row{state, unit, tot.census, tot.data_defined, Percent{offset}};
        for (std::size_t f = 0; f < 4; ++f) {
            row.push_back(Percent{reldif_census(syn[f].at(unit), census)});
        }
        for (std::size_t f = 0; f < 4; ++f) {
            row.push_back(Percent{reldif_dd(syn[f].at(unit), dd)});
        }
        for (std::size_t f = 0; f < 4; ++f) {
            row.push_back(Percent{sad(syn[f].at(unit), dd, static_cast<double>(st.imputed),
                                      static_cast<double>(st.data_defined))});
        }
        t.rows.push_back(std::move(row));
    }
    r.tables.push_back(std::move(t));
    return r;
}

// --- mir / homogeneity ------------------------------------------------------------

Report run_mir(const std::string &cells_path, const std::string &geo_path) {
    Report r;
    r.manifest.command = "mir";
    const auto cells = io::load_cells(cells_path);
    const auto geo = io::load_geo(geo_path);
    r.manifest.inputs.push_back(io::record_input("cells", cells_path));
    r.manifest.inputs.push_back(io::record_input("geo", geo_path));
    require_references(io::check_references(cells, nullptr, &geo, nullptr));
    std::map<std::string, std::vector<CellCounts>> by_state;
    for (const auto &c : cells) {
        by_state[geo.state_of.at(c.region)].push_back(c);
    }
    Table t{"mir", {"state", "mir", "n_star"}, {}};
    for (const auto &[state, cs] : by_state) {
        const auto m = mean_imputation_rate(cs);
        t.rows.push_back({state, m.mir ? Value{Percent{*m.mir}} : Value{std::monostate{}},
                          static_cast<std::int64_t>(m.n_star)});
    }
    r.tables.push_back(std::move(t));
    return r;
}

Report run_homogeneity(const std::string &cells_path) {
    Report r;
    r.manifest.command = "homogeneity";
    const auto cells = io::load_cells(cells_path);
    r.manifest.inputs.push_back(io::record_input("cells", cells_path));
    const auto h = chi_square_homogeneity(cells);
    Table strata{"strata", {"stratum", "statistic", "df", "p_value", "low_expected"}, {}};
    for (const auto &s : h.strata) {
        strata.rows.push_back(
            {s.stratum, s.statistic, static_cast<std::int64_t>(s.df), s.p_value, s.low_expected});
    }
    Table excluded{"excluded", {"stratum", "reason"}, {}};
    for (const auto &e : h.excluded) {
        excluded.rows.push_back({e.stratum, e.reason});
    }
    Table summary{"summary",
                  {"combined_statistic", "combined_df", "combined_p", "worst_stratum", "worst_p",
                   "n_strata", "n_excluded"},
                  {}};
    summary.rows.push_back(
        {h.combined_statistic, static_cast<std::int64_t>(h.combined_df), h.combined_p,
         h.worst ? Value{h.worst->stratum} : Value{std::monostate{}},
         h.worst ? Value{h.worst->p_value} : Value{std::monostate{}},
         static_cast<std::int64_t>(h.strata.size()), static_cast<std::int64_t>(h.excluded.size())});
    r.tables.push_back(std::move(summary));
    r.tables.push_back(std::move(strata));
    r.tables.push_back(std::move(excluded));
    return r;
}

// --- variance ---------------------------------------------------------------------

Report run_variance(const std::string &path, Count threshold) {
    Report r;
    r.manifest.command = "variance";
    const auto scenarios = io::load_scenarios(path);
    r.manifest.inputs.push_back(io::record_input("scenarios", path));
    r.manifest.parameters["threshold"] = threshold;
    std::vector<DeltaComparison> comparisons;
    std::vector<std::string> problems;
    Table t{"comparisons",
            {"id", "lambda", "truth_1", "truth_2", "ccf_1", "ccf_2", "dcf_1", "dcf_2", "delta_c",
             "delta_d", "diff_exact", "diff_direct", "diff_approx", "forms_agree", "predicted",
             "actual"},
            {}};
    for (const auto &ns : scenarios) {
        try {
            const auto c = delta_comparison(ns.scenario);
            t.rows.push_back({ns.id, ns.scenario.lambda, c.truth.first, c.truth.second,
                              c.ccf.first, c.ccf.second, c.dcf.first, c.dcf.second, c.delta_c,
                              c.delta_d, c.diff_exact, c.diff_direct, c.diff_approx,
                              c.forms_agree, std::string(to_string(c.predicted)),
                              std::string(to_string(c.actual))});
            comparisons.push_back(c);
        } catch (const error &e) {
            problems.push_back("scenario '" + ns.id + "': " + e.what());
        }
    }
    if (!problems.empty()) {
        throw validation_error(path + ": invalid scenarios:" + io::join_lines(problems));
    }
    const auto f = empirical_frequency(comparisons, threshold);
    auto n = [](std::size_t v) { return Value{static_cast<std::int64_t>(v)}; };
    Table freq{"frequency", {"size", "CCF", "DCF", "total"}, {}};
    freq.rows.push_back({std::string("small"), n(f.small_ccf), n(f.small_dcf), n(f.small_total())});
    freq.rows.push_back({std::string("large"), n(f.large_ccf), n(f.large_dcf), n(f.large_total())});
    freq.rows.push_back({std::string("total"), n(f.ccf_total()), n(f.dcf_total()), n(f.total())});
    freq.rows.push_back({std::string("ties"), std::monostate{}, std::monostate{}, n(f.ties)});
    r.tables.push_back(std::move(t));
    r.tables.push_back(std::move(freq));
    return r;
}

// --- simulate ---------------------------------------------------------------------

Report run_simulate(const std::string &path, unsigned workers, std::optional<std::uint64_t> seed,
                    std::optional<std::size_t> reps) {
    Report r;
    r.manifest.command = "simulate";
    auto cfg = io::load_sim_config(path);
    r.manifest.inputs.push_back(io::record_input("config", path));
    if (seed) {
        cfg.seed = *seed;
    }
    if (reps) {
        cfg.n_reps = *reps;
    }
    validate_config(cfg);
    r.manifest.parameters["seed"] = cfg.seed;
    r.manifest.parameters["n_reps"] = cfg.n_reps;
    r.manifest.parameters["rng"] = std::string(rng_name);
    r.manifest.parameters["rng_version"] = rng_version;
    r.manifest.parameters["formulas"] = formula_names(all_formulas);
    // worker count is deliberately absent: it must not change the report

    const auto rep = run_monte_carlo(cfg, workers);
    Table summary{"summary",
                  {"seed", "n_reps", "degenerate_reps", "alt2_fallbacks",
                   "max_normalization_residual", "cb_between_fraction"},
                  {}};
    summary.rows.push_back({static_cast<std::int64_t>(rep.seed),
                            static_cast<std::int64_t>(rep.n_reps),
                            static_cast<std::int64_t>(rep.degenerate_reps),
                            static_cast<std::int64_t>(rep.alt2_fallbacks),
                            rep.max_normalization_residual, rep.cb_between_fraction()});
    Table regions{"regions",
                  {"region", "formula", "truth_mean", "bias", "bias_se", "rmse", "wins", "tied"},
                  {}};
    for (std::size_t k = 0; k < rep.regions.size(); ++k) {
        const auto &rs = rep.region_stats[k];
        for (std::size_t f = 0; f < 4; ++f) {
            regions.rows.push_back({rep.regions[k], std::string(to_string(all_formulas[f])),
                                    rs.truth.mean, rs.error[f].mean, rs.error[f].se(),
                                    std::sqrt(rs.squared_error[f].mean),
                                    static_cast<std::int64_t>(rs.wins[f]),
                                    static_cast<std::int64_t>(rs.tied)});
        }
    }
    Table cells{"cells",
                {"stratum", "region", "formula", "truth_mean", "census_mean", "allocation_mean",
                 "allocation_se", "bias", "bias_se"},
                {}};
    for (std::size_t i = 0; i < rep.cells.size(); ++i) {
        const auto &cs = rep.cell_stats[i];
        for (std::size_t f = 0; f < 4; ++f) {
            cells.rows.push_back({rep.cells[i].stratum, rep.cells[i].region,
                                  std::string(to_string(all_formulas[f])), cs.truth.mean,
                                  cs.census.mean, cs.allocation[f].mean, cs.allocation[f].se(),
                                  cs.error[f].mean, cs.error[f].se()});
        }
    }
    r.tables.push_back(std::move(summary));
    r.tables.push_back(std::move(regions));
    r.tables.push_back(std::move(cells));
    return r;
}

// --- validate ---------------------------------------------------------------------

struct ValidateInputs {
    std::string cells, strata, geo, se, state_rates, scenarios, config;
    std::vector<std::string> groups;
    double tolerance = 0.01;
};

Report run_validate(const ValidateInputs &in, std::size_t &failures) {
    Report r;
    r.manifest.command = "validate";
    Table t{"checks", {"file", "check", "status", "message"}, {}};
    auto record = [&](const std::string &file, const std::string &check, auto &&fn) {
        try {
            fn();
            t.rows.push_back({file, check, std::string("ok"), std::string()});
            return true;
        } catch (const error &e) {
            ++failures;
            t.rows.push_back({file, check, std::string("fail"), std::string(e.what())});
            return false;
        }
    };
    auto hash = [&](const std::string &role, const std::string &path) {
        try {
            r.manifest.inputs.push_back(io::record_input(role, path));
        } catch (const error &) {
            // unreadable; the load check reports it
        }
    };

    std::optional<std::vector<CellCounts>> cells;
    std::optional<std::vector<StratumSurveyInputs>> strata;
    std::optional<GeoHierarchy> geo;
    std::optional<std::map<std::string, double>> se;
    std::optional<std::map<std::string, io::StateRates>> rates;
    if (!in.cells.empty()) {
        hash("cells", in.cells);
        record(in.cells, "load", [&] { cells = io::load_cells(in.cells); });
    }
    if (!in.strata.empty()) {
        hash("strata", in.strata);
        record(in.strata, "load", [&] { strata = io::load_strata(in.strata); });
    }
    if (!in.geo.empty()) {
        hash("geo", in.geo);
        record(in.geo, "load", [&] { geo = io::load_geo(in.geo); });
    }
    if (!in.se.empty()) {
        hash("se", in.se);
        record(in.se, "load", [&] { se = io::load_se(in.se); });
    }
    if (cells) {
        record(in.cells, "references", [&] {
            require_references(io::check_references(*cells, strata ? &*strata : nullptr,
                                                    geo ? &*geo : nullptr, se ? &*se : nullptr));
        });
        if (strata) {
            record(in.strata, "estimable", [&] { (void)estimate_strata(*cells, *strata); });
        }
    }
    if (!in.state_rates.empty()) {
        hash("state_rates", in.state_rates);
        record(in.state_rates, "load", [&] { rates = io::load_state_rates(in.state_rates); });
    }
    for (const auto &path : in.groups) {
        hash("groups", path);
        std::vector<io::CountyGroupRow> rows;
        if (!record(path, "load", [&] { rows = io::load_county_groups(path); })) {
            continue;
        }
        if (rates) {
            record(path, "sad_reproduction", [&] {
                SadCheck check;
                (void)run_sad_groups({path}, in.state_rates, true, in.tolerance, check);
                if (!check.deviations.empty()) {
                    throw validation_error("published SAD not reproduced within " +
                                           io::format_real(in.tolerance) + ":" +
                                           io::join_lines(check.deviations));
                }
            });
        }
    }
    if (!in.scenarios.empty()) {
        hash("scenarios", in.scenarios);
        record(in.scenarios, "load", [&] {
            for (const auto &ns : io::load_scenarios(in.scenarios)) {
                try {
                    validate_scenario(ns.scenario);
                    if (!is_lambda_scaled(ns.scenario)) {
                        throw validation_error("not lambda-scaled");
                    }
                } catch (const error &e) {
                    throw validation_error("scenario '" + ns.id + "': " + e.what());
                }
            }
        });
    }
    if (!in.config.empty()) {
        hash("config", in.config);
        record(in.config, "load", [&] { (void)io::load_sim_config(in.config); });
    }
    r.manifest.parameters["tolerance"] = in.tolerance;
    r.tables.push_back(std::move(t));
    return r;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Synthetic allocation of dual-system estimates", "synthdse"};
    app.set_version_flag("--version", std::string(io::tool_version));
    app.require_subcommand(1);

    OutputOptions o;
    std::string cells, strata, geo, se, formula = "all", level = "region", plot;
    double z = default_z;

    auto *estimate = app.add_subcommand("estimate", "per-stratum DSE, CCF and DCF");
    estimate->add_option("--cells", cells, "stratum,region,C,DD,II")->required();
    estimate->add_option("--strata", strata, "stratum,CE,EE,MR")->required();
    add_output_options(estimate, o);

    auto *allocate_cmd = app.add_subcommand("allocate", "synthetic allocations per cell");
    allocate_cmd->add_option("--cells", cells)->required();
    allocate_cmd->add_option("--strata", strata)->required();
    allocate_cmd->add_option("--formula", formula, "cb, alt1, alt2, alt3 or all")
        ->capture_default_str();
    allocate_cmd->add_option("--geo", geo, "region,state[,group]");
    allocate_cmd->add_option("--level", level, "region, group or state")->capture_default_str();
    add_output_options(allocate_cmd, o);

    std::string compare_level = "state";
    auto *compare = app.add_subcommand("compare", "synthetic versus census shares");
    compare->add_option("--cells", cells)->required();
    compare->add_option("--strata", strata)->required();
    compare->add_option("--geo", geo)->required();
    compare->add_option("--se", se, "state,se_share_diff");
    compare->add_option("--z", z, "interval multiplier")->capture_default_str();
    compare->add_option("--level", compare_level)->capture_default_str();
    compare->add_option("--plot-data", plot, "csv: state, diff per formula, ci_lo, ci_hi");
    add_output_options(compare, o);

    std::vector<std::string> groups;
    std::string rates;
    bool check = false;
    double tolerance = 0.01;
    std::string sad_level = "group";
    auto *sad_cmd = app.add_subcommand("sad", "state adjusted differences per county group");
    sad_cmd->add_option("--groups", groups, "published county-group tables");
    sad_cmd->add_option("--state-rates", rates, "state,ii_tot,...");
    sad_cmd->add_flag("--check", check, "compare against the published SAD columns");
    sad_cmd->add_option("--tolerance", tolerance, "percentage points")->capture_default_str();
    sad_cmd->add_option("--cells", cells);
    sad_cmd->add_option("--strata", strata);
    sad_cmd->add_option("--geo", geo);
    sad_cmd->add_option("--level", sad_level)->capture_default_str();
    add_output_options(sad_cmd, o);

    auto *mir = app.add_subcommand("mir", "mean imputation rate per state");
    mir->add_option("--cells", cells)->required();
    mir->add_option("--geo", geo)->required();
    add_output_options(mir, o);

    auto *homog = app.add_subcommand("homogeneity", "chi-square test of the synthetic assumption");
    homog->add_option("--cells", cells)->required();
    add_output_options(homog, o);

    std::string scenarios;
    Count threshold = 50000;
    auto *variance = app.add_subcommand("variance", "two-state CCF versus DCF comparison");
    variance->add_option("--scenarios", scenarios)->required();
    variance->add_option("--threshold", threshold, "CE1 + CE2 at which a stratum counts as large")
        ->capture_default_str();
    add_output_options(variance, o);

    std::string config;
    unsigned workers = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    auto *simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of the formulas");
    simulate->add_option("--config", config, "JSON simulation config")->required();
    simulate->add_option("--workers", workers, "threads, 0 = all cores")->capture_default_str();
    simulate->add_option("--seed", seed, "overrides the config seed");
    simulate->add_option("--reps", reps, "overrides the config replicate count");
    add_output_options(simulate, o);

    ValidateInputs vin;
    auto *validate = app.add_subcommand("validate", "check input files for consistency");
    validate->add_option("--cells", vin.cells);
    validate->add_option("--strata", vin.strata);
    validate->add_option("--geo", vin.geo);
    validate->add_option("--se", vin.se);
    validate->add_option("--groups", vin.groups);
    validate->add_option("--state-rates", vin.state_rates);
    validate->add_option("--scenarios", vin.scenarios);
    validate->add_option("--config", vin.config);
    validate->add_option("--tolerance", vin.tolerance)->capture_default_str();
    add_output_options(validate, o);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion &e) {
        out << io::tool_version << '\n';
        return ok;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n";
        const auto *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return usage;
    }

    try {
        Report r;
        if (estimate->parsed()) {
            r = run_estimate(cells, strata);
        } else if (allocate_cmd->parsed()) {
            r = run_allocate(cells, strata, formula, geo, level, err);
        } else if (compare->parsed()) {
            r = run_compare(cells, strata, geo, se, compare_level, z, plot);
        } else if (sad_cmd->parsed()) {
            if (!groups.empty()) {
                if (rates.empty()) {
                    throw CLI::ValidationError("--groups", "needs --state-rates");
                }
                SadCheck result;
                r = run_sad_groups(groups, rates, check, tolerance, result);
                emit(r, o, out);
                if (!result.deviations.empty()) {
                    err << "published SAD not reproduced within " << io::format_real(tolerance)
                        << ":" << io::join_lines(result.deviations) << '\n';
                    return failure;
                }
                return ok;
            }
            if (cells.empty() || strata.empty() || geo.empty()) {
                throw CLI::ValidationError("sad", "give --groups with --state-rates, or "
                                                  "--cells, --strata and --geo");
            }
            r = run_sad_model(cells, strata, geo, sad_level);
        } else if (mir->parsed()) {
            r = run_mir(cells, geo);
        } else if (homog->parsed()) {
            r = run_homogeneity(cells);
        } else if (variance->parsed()) {
            r = run_variance(scenarios, threshold);
        } else if (simulate->parsed()) {
            r = run_simulate(config, workers, seed, reps);
        } else if (validate->parsed()) {
            std::size_t failures = 0;
            r = run_validate(vin, failures);
            emit(r, o, out);
            if (failures > 0) {
                for (const auto &row : r.tables.front().rows) {
                    if (std::get<std::string>(row[2]) == "fail") {
                        err << std::get<std::string>(row[0]) << " [" << std::get<std::string>(row[1])
                            << "]: " << std::get<std::string>(row[3]) << '\n';
                    }
                }
                return failure;
            }
            return ok;
        }
        emit(r, o, out);
        return ok;
    } catch (const CLI::Error &e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return failure;
    }
}

} // namespace synthdse::cli
