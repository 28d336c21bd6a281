#ifndef SYNTHDSE_SIMULATOR_HPP
#define SYNTHDSE_SIMULATOR_HPP
//! \file
//! \brief Monte Carlo testbed for the synthetic assumption.
//!
//! Measurement model for a cell with T true persons:
//!   captured  ~ Bin(T, capture_prob)              census enumerations of true persons
//!   inherent  ~ Bin(captured, ii_rate)            whole-person imputations
//!   late      ~ Bin(captured - inherent, late_add_rate)
//!   erroneous ~ Bin(T, ee_rate)                   erroneous records (not in truth)
//!   matched   ~ Bin(captured - inherent - late, psample_rate)
//!   unmatched ~ Bin(T - (captured - inherent - late), psample_rate)
//! giving C = captured + erroneous, II = inherent + late, DD = C - II,
//! CE = captured - inherent - late and EE = erroneous. Imputed persons never
//! enter the E-sample or the matching. Per stratum, MR = matched /
//! (matched + unmatched), a simplified stand-in for the production matching
//! rate.
//!
//! A replicate in which some stratum cannot be estimated (CE + EE = 0, no
//! matches, C_i = 0 or DD_i = 0) is marked degenerate: its counts enter the
//! count statistics, its allocations do not.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "synthdse/domain.hpp"
#include "synthdse/estimator.hpp"
#include "synthdse/rng.hpp"

namespace synthdse {

/// Stratum -> cell indices and region -> cell indices for a config.
struct SimLayout {
    std::vector<StratumId> strata;                 // sorted
    std::vector<std::vector<std::size_t>> stratum_cells;
    std::vector<RegionId> regions;                 // sorted
    std::vector<std::vector<std::size_t>> region_cells;

    explicit SimLayout(const SimConfig &cfg) {
        std::map<StratumId, std::vector<std::size_t>> by_s;
        std::map<RegionId, std::vector<std::size_t>> by_r;
        for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
            by_s[cfg.cells[i].stratum].push_back(i);
            by_r[cfg.cells[i].region].push_back(i);
        }
        for (auto &[id, idx] : by_s) {
            strata.push_back(id);
            stratum_cells.push_back(std::move(idx));
        }
        for (auto &[id, idx] : by_r) {
            regions.push_back(id);
            region_cells.push_back(std::move(idx));
        }
    }
};

/// True count per config cell for one replicate.
inline std::vector<Count> generate_population(const SimConfig &cfg, std::size_t replicate) {
    validate_config(cfg);
    std::vector<Count> truth(cfg.cells.size());
    for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
        const Count configured = cfg.cells[i].truth;
        if (cfg.truth_mode == TruthMode::fixed) {
            truth[i] = configured;
            continue;
        }
        KeyedStream rng(cfg.seed, replicate, i, StreamPurpose::truth);
        std::poisson_distribution<Count> draw(static_cast<double>(configured));
        // an empty cell would make the stratum degenerate for no modelling reason
        Count t = 0;
        while (t == 0) {
            t = draw(rng);
        }
        truth[i] = t;
    }
    return truth;
}

/// Everything observed about one cell in one replicate.
struct MeasuredCell {
    Count truth = 0;
    Count captured = 0;
    Count inherent = 0;
    Count late = 0;
    Count erroneous = 0;
    Count matched = 0;
    Count unmatched = 0;

    [[nodiscard]] Count correct() const { return captured - inherent - late; }
    [[nodiscard]] Count census() const { return captured + erroneous; }
    [[nodiscard]] Count imputed() const { return inherent + late; }
    [[nodiscard]] Count data_defined() const { return census() - imputed(); }
};

struct SimMeasurement {
    std::vector<MeasuredCell> measured;        // config cell order
    std::vector<CellCounts> cells;             // config cell order
    std::vector<StratumSurveyInputs> survey;   // SimLayout stratum order
};

/// Assembles census cells and stratum survey inputs from per-cell outcomes.
/// A stratum without any P-sample persons gets match rate 0.
inline SimMeasurement assemble_measurement(const SimConfig &cfg, const SimLayout &layout,
                                           std::vector<MeasuredCell> measured) {
    SimMeasurement out;
    out.cells.reserve(measured.size());
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const auto &m = measured[i];
        out.cells.push_back({cfg.cells[i].stratum, cfg.cells[i].region, m.census(),
                             m.data_defined(), m.imputed()});
    }
    for (std::size_t s = 0; s < layout.strata.size(); ++s) {
        Count ce = 0, ee = 0, mn = 0, nn = 0;
        for (auto i : layout.stratum_cells[s]) {
            ce += measured[i].correct();
            ee += measured[i].erroneous;
            mn += measured[i].matched;
            nn += measured[i].unmatched;
        }
        const double mr = mn + nn > 0 ? static_cast<double>(mn) / static_cast<double>(mn + nn) : 0.0;
        out.survey.push_back({layout.strata[s], ce, ee, mr});
    }
    out.measured = std::move(measured);
    return out;
}

/// Census and survey outcome for one replicate given its true counts.
inline SimMeasurement simulate_measurement(std::span<const Count> truth, const SimConfig &cfg,
                                           std::size_t replicate) {
    validate_config(cfg);
    if (truth.size() != cfg.cells.size()) {
        throw config_error("truth vector does not match config cells");
    }
    const SimLayout layout(cfg);
    std::vector<MeasuredCell> measured(cfg.cells.size());
    for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
        const auto &c = cfg.cells[i];
        KeyedStream rng(cfg.seed, replicate, i, StreamPurpose::measurement);
        auto binom = [&](Count n, double p) -> Count {
            if (n <= 0 || p <= 0.0) {
                return 0;
            }
            if (p >= 1.0) {
                return n;
            }
            return std::binomial_distribution<Count>(n, p)(rng);
        };
        auto &m = measured[i];
        m.truth = truth[i];
        m.captured = binom(m.truth, c.capture_prob);
        m.inherent = binom(m.captured, c.ii_rate);
        m.late = binom(m.captured - m.inherent, c.late_add_rate);
        m.erroneous = binom(m.truth, c.ee_rate);
        m.matched = binom(m.correct(), cfg.psample_rate);
        m.unmatched = binom(m.truth - m.correct(), cfg.psample_rate);
    }
    return assemble_measurement(cfg, layout, std::move(measured));
}

/// Allocations of one replicate, per formula, in config cell order.
struct ReplicateAllocation {
    bool degenerate = false;
    std::string reason;
    std::array<std::vector<double>, 4> by_formula;
    std::vector<double> dse; // per stratum, SimLayout order
    double max_residual = 0.0;
    std::size_t fallbacks = 0; // alt2 strata without imputations
};

inline ReplicateAllocation allocate_measurement(const SimConfig &cfg, const SimLayout &layout,
                                                const SimMeasurement &m) {
    ReplicateAllocation out;
    for (auto &v : out.by_formula) {
        v.assign(cfg.cells.size(), 0.0);
    }
    for (std::size_t s = 0; s < layout.strata.size(); ++s) {
        const auto &idx = layout.stratum_cells[s];
        const auto &survey = m.survey[s];
        std::vector<CellCounts> cells;
        std::vector<Count> inherent;
        for (auto i : idx) {
            cells.push_back(m.cells[i]);
            inherent.push_back(m.measured[i].inherent);
        }
        const auto t = totals_of(cells);
        std::string why;
        if (survey.correct + survey.erroneous == 0) {
            why = "CE + EE = 0";
        } else if (!(survey.match_rate > 0.0)) {
            why = "no P-sample matches";
        } else if (t.census == 0) {
            why = "C_i = 0";
        } else if (t.data_defined == 0) {
            why = "DD_i = 0";
        }
        if (!why.empty()) {
            out.degenerate = true;
            out.reason = "stratum '" + survey.stratum + "': " + why;
            return out;
        }
        const auto est = estimate_stratum(survey, cells);
        out.dse.push_back(est.dse);
        for (std::size_t f = 0; f < all_formulas.size(); ++f) {
            const auto formula = all_formulas[f];
            StratumAllocation alloc =
                formula == FormulaKind::alt2 && cfg.alt2_pool == ImputationPool::inherent
                    ? allocate_alt2_weighted(est, cells, inherent)
                    : allocate(est, cells, formula);
            if (formula == FormulaKind::alt2 && !alloc.warnings.empty()) {
                ++out.fallbacks;
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                out.by_formula[f][idx[k]] = alloc.values[k].value;
                sum += alloc.values[k].value;
            }
            out.max_residual = std::max(out.max_residual, std::abs(sum - est.dse) / est.dse);
        }
    }
    return out;
}

// --- statistics ------------------------------------------------------------------

/// Mean and variance accumulator; merge() combines partial results (Chan et al.).
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void merge(const RunningStats &o) noexcept {
        if (o.n == 0) {
            return;
        }
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / total;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }

    [[nodiscard]] double variance() const noexcept {
        return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    }
    /// Standard error of the mean.
    [[nodiscard]] double se() const noexcept {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

struct CellStats {
    RunningStats truth, census, data_defined, imputed, correct, erroneous;
    std::array<RunningStats, 4> allocation; // non-degenerate replicates only
    std::array<RunningStats, 4> error;      // allocation - truth
};

struct RegionStats {
    RunningStats truth;
    std::array<RunningStats, 4> error;        // S_k - T_k
    std::array<RunningStats, 4> squared_error;
    std::array<std::size_t, 4> wins{};        // smallest |error| alone
    std::size_t tied = 0;                     // smallest |error| shared
};

struct MonteCarloReport {
    std::uint64_t seed = 0;
    std::size_t n_reps = 0;
    std::size_t degenerate_reps = 0;
    std::size_t alt2_fallbacks = 0;
    double max_normalization_residual = 0.0;
    std::size_t cb_between = 0;     // cells where CB lies between Alt1 and Alt2
    std::size_t cb_between_of = 0;  // cells examined
    std::vector<SimCell> cells;
    std::vector<CellStats> cell_stats;
    std::vector<RegionId> regions;
    std::vector<RegionStats> region_stats;

    [[nodiscard]] double cb_between_fraction() const {
        return cb_between_of ? static_cast<double>(cb_between) / static_cast<double>(cb_between_of)
                             : 0.0;
    }
};

/// Replicates per accumulation block. Blocks are the unit of work handed to
/// workers and are always reduced in block order, so the report does not
/// depend on the worker count.
inline constexpr std::size_t replicate_block = 64;

namespace detail {

struct BlockAccumulator {
    std::vector<CellStats> cells;
    std::vector<RegionStats> regions;
    std::size_t degenerate = 0;
    std::size_t fallbacks = 0;
    double max_residual = 0.0;
    std::size_t cb_between = 0;
    std::size_t cb_between_of = 0;
};

inline void run_replicate(const SimConfig &cfg, const SimLayout &layout, std::size_t rep,
                          BlockAccumulator &acc) {
    const auto truth = generate_population(cfg, rep);
    const auto m = simulate_measurement(truth, cfg, rep);
    for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
        auto &cs = acc.cells[i];
        const auto &mc = m.measured[i];
        cs.truth.add(static_cast<double>(mc.truth));
        cs.census.add(static_cast<double>(mc.census()));
        cs.data_defined.add(static_cast<double>(mc.data_defined()));
        cs.imputed.add(static_cast<double>(mc.imputed()));
        cs.correct.add(static_cast<double>(mc.correct()));
        cs.erroneous.add(static_cast<double>(mc.erroneous));
    }
    const auto alloc = allocate_measurement(cfg, layout, m);
    if (alloc.degenerate) {
        ++acc.degenerate;
        return;
    }
    acc.fallbacks += alloc.fallbacks;
    acc.max_residual = std::max(acc.max_residual, alloc.max_residual);
    const auto &cb = alloc.by_formula[0];
    const auto &a1 = alloc.by_formula[1];
    const auto &a2 = alloc.by_formula[2];
    for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
        auto &cs = acc.cells[i];
        for (std::size_t f = 0; f < 4; ++f) {
            const double s = alloc.by_formula[f][i];
            cs.allocation[f].add(s);
            cs.error[f].add(s - static_cast<double>(truth[i]));
        }
        ++acc.cb_between_of;
        if (std::min(a1[i], a2[i]) <= cb[i] && cb[i] <= std::max(a1[i], a2[i])) {
            ++acc.cb_between;
        }
    }
    for (std::size_t r = 0; r < layout.regions.size(); ++r) {
        double t = 0.0;
        std::array<double, 4> s{};
        for (auto i : layout.region_cells[r]) {
            t += static_cast<double>(truth[i]);
            for (std::size_t f = 0; f < 4; ++f) {
                s[f] += alloc.by_formula[f][i];
            }
        }
        auto &rs = acc.regions[r];
        rs.truth.add(t);
        std::array<double, 4> abs_err{};
        for (std::size_t f = 0; f < 4; ++f) {
            const double e = s[f] - t;
            rs.error[f].add(e);
            rs.squared_error[f].add(e * e);
            abs_err[f] = std::abs(e);
        }
        const double best = *std::min_element(abs_err.begin(), abs_err.end());
        const auto n_best = std::count(abs_err.begin(), abs_err.end(), best);
        if (n_best == 1) {
            ++rs.wins[static_cast<std::size_t>(
                std::find(abs_err.begin(), abs_err.end(), best) - abs_err.begin())];
        } else {
            ++rs.tied;
        }
    }
}

} // namespace detail

/// Runs cfg.n_reps replicates on `workers` threads (0 = hardware concurrency)
/// and reports bias, MSE and winner counts per formula.
inline MonteCarloReport run_monte_carlo(const SimConfig &cfg, unsigned workers = 1) {
    validate_config(cfg);
    const SimLayout layout(cfg);
    const std::size_t n_blocks = (cfg.n_reps + replicate_block - 1) / replicate_block;
    std::vector<detail::BlockAccumulator> blocks(n_blocks);
    for (auto &b : blocks) {
        b.cells.resize(cfg.cells.size());
        b.regions.resize(layout.regions.size());
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t b = next++; b < n_blocks; b = next++) {
            const std::size_t end = std::min(cfg.n_reps, (b + 1) * replicate_block);
            for (std::size_t rep = b * replicate_block; rep < end; ++rep) {
                detail::run_replicate(cfg, layout, rep, blocks[b]);
            }
        }
    };
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_blocks));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    MonteCarloReport out;
    out.seed = cfg.seed;
    out.n_reps = cfg.n_reps;
    out.cells = cfg.cells;
    out.regions = layout.regions;
    out.cell_stats.resize(cfg.cells.size());
    out.region_stats.resize(layout.regions.size());
    for (const auto &b : blocks) {
        out.degenerate_reps += b.degenerate;
        out.alt2_fallbacks += b.fallbacks;
        out.max_normalization_residual = std::max(out.max_normalization_residual, b.max_residual);
        out.cb_between += b.cb_between;
        out.cb_between_of += b.cb_between_of;
        for (std::size_t i = 0; i < b.cells.size(); ++i) {
            auto &dst = out.cell_stats[i];
            const auto &src = b.cells[i];
            dst.truth.merge(src.truth);
            dst.census.merge(src.census);
            dst.data_defined.merge(src.data_defined);
            dst.imputed.merge(src.imputed);
            dst.correct.merge(src.correct);
            dst.erroneous.merge(src.erroneous);
            for (std::size_t f = 0; f < 4; ++f) {
                dst.allocation[f].merge(src.allocation[f]);
                dst.error[f].merge(src.error[f]);
            }
        }
        for (std::size_t r = 0; r < b.regions.size(); ++r) {
            auto &dst = out.region_stats[r];
            const auto &src = b.regions[r];
            dst.truth.merge(src.truth);
            for (std::size_t f = 0; f < 4; ++f) {
                dst.error[f].merge(src.error[f]);
                dst.squared_error[f].merge(src.squared_error[f]);
                dst.wins[f] += src.wins[f];
            }
            dst.tied += src.tied;
        }
    }
    return out;
}

} // namespace synthdse

#endif
