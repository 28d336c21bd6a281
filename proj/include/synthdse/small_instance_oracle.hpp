#ifndef SYNTHDSE_SMALL_INSTANCE_ORACLE_HPP
#define SYNTHDSE_SMALL_INSTANCE_ORACLE_HPP
//! \file
//! \brief Exact expectations of the simulator's measurement model by
//! exhaustive enumeration, for instances small enough to list every outcome.
//!
//! Per cell the oracle enumerates every (captured, inherent, late, erroneous,
//! matched, unmatched) tuple with its binomial probability, takes the product
//! over cells, and pushes each joint outcome through the same estimation and
//! allocation path as a simulated replicate. Monte Carlo means must converge
//! to these values; a mismatch points at the sampler, not the formulas.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "synthdse/simulator.hpp"

namespace synthdse {

inline constexpr double default_oracle_limit = 1e7;

struct OracleCellExpectation {
    double census = 0.0, data_defined = 0.0, imputed = 0.0, correct = 0.0, erroneous = 0.0;
    std::array<double, 4> allocation{}; // conditional on a non-degenerate outcome
};

struct OracleResult {
    double outcomes = 0.0;             // joint outcomes enumerated
    double degenerate_probability = 0.0;
    std::vector<OracleCellExpectation> cells; // config cell order
};

namespace detail {

inline double binomial_pmf(Count n, Count k, double p) {
    if (k < 0 || k > n) {
        return 0.0;
    }
    double coef = 1.0;
    for (Count j = 1; j <= k; ++j) {
        coef = coef * static_cast<double>(n - k + j) / static_cast<double>(j);
    }
    return coef * std::pow(p, static_cast<double>(k)) *
           std::pow(1.0 - p, static_cast<double>(n - k));
}

struct CellOutcome {
    MeasuredCell m;
    double prob = 0.0;
};

/// Outcomes of one cell with positive probability.
inline std::vector<CellOutcome> cell_outcomes(const SimCell &c, double q) {
    std::vector<CellOutcome> out;
    const Count t = c.truth;
    for (Count cap = 0; cap <= t; ++cap) {
        const double p_cap = binomial_pmf(t, cap, c.capture_prob);
        if (p_cap == 0.0) {
            continue;
        }
        for (Count inh = 0; inh <= cap; ++inh) {
            const double p_inh = binomial_pmf(cap, inh, c.ii_rate);
            if (p_inh == 0.0) {
                continue;
            }
            for (Count late = 0; late <= cap - inh; ++late) {
                const double p_late = binomial_pmf(cap - inh, late, c.late_add_rate);
                if (p_late == 0.0) {
                    continue;
                }
                const Count correct = cap - inh - late;
                for (Count ee = 0; ee <= t; ++ee) {
                    const double p_ee = binomial_pmf(t, ee, c.ee_rate);
                    if (p_ee == 0.0) {
                        continue;
                    }
                    for (Count mn = 0; mn <= correct; ++mn) {
                        const double p_mn = binomial_pmf(correct, mn, q);
                        if (p_mn == 0.0) {
                            continue;
                        }
                        for (Count nn = 0; nn <= t - correct; ++nn) {
                            const double p_nn = binomial_pmf(t - correct, nn, q);
                            if (p_nn == 0.0) {
                                continue;
                            }
                            out.push_back({{t, cap, inh, late, ee, mn, nn},
                                           p_cap * p_inh * p_late * p_ee * p_mn * p_nn});
                        }
                    }
                }
            }
        }
    }
    return out;
}

/// Number of outcomes cell_outcomes() would list, without listing them.
inline double cell_outcome_count(const SimCell &c, double q) {
    auto options = [](Count n, double p) {
        return p <= 0.0 || p >= 1.0 ? 1.0 : static_cast<double>(n + 1);
    };
    auto reachable = [](Count n, double p, Count k) {
        return p <= 0.0 ? k == 0 : p >= 1.0 ? k == n : true;
    };
    const Count t = c.truth;
    double total = 0.0;
    for (Count cap = 0; cap <= t; ++cap) {
        if (!reachable(t, c.capture_prob, cap)) {
            continue;
        }
        for (Count inh = 0; inh <= cap; ++inh) {
            if (!reachable(cap, c.ii_rate, inh)) {
                continue;
            }
            for (Count late = 0; late <= cap - inh; ++late) {
                if (!reachable(cap - inh, c.late_add_rate, late)) {
                    continue;
                }
                const Count correct = cap - inh - late;
                total += options(t, c.ee_rate) * options(correct, q) * options(t - correct, q);
            }
        }
    }
    return total;
}

} // namespace detail

/// Exact expectations for a fixed-truth config. Throws config_error with
/// the outcome-space size when it exceeds `max_outcomes`.
inline OracleResult small_instance_oracle(const SimConfig &cfg,
                                          double max_outcomes = default_oracle_limit) {
    validate_config(cfg);
    if (cfg.truth_mode != TruthMode::fixed) {
        throw config_error("small-instance oracle needs fixed truths");
    }
    double size = 1.0;
    for (const auto &c : cfg.cells) {
        size *= detail::cell_outcome_count(c, cfg.psample_rate);
    }
    if (size > max_outcomes) {
        throw config_error("outcome space too large to enumerate: about " +
                           std::to_string(static_cast<long double>(size)) + " outcomes (limit " +
                           std::to_string(static_cast<long double>(max_outcomes)) + ")");
    }

    std::vector<std::vector<detail::CellOutcome>> per_cell;
    for (const auto &c : cfg.cells) {
        per_cell.push_back(detail::cell_outcomes(c, cfg.psample_rate));
    }

    const SimLayout layout(cfg);
    const std::size_t n = cfg.cells.size();
    OracleResult out;
    out.outcomes = size;
    out.cells.resize(n);
    std::vector<std::array<double, 4>> weighted_alloc(n);
    double nondegenerate = 0.0;

    std::vector<std::size_t> pick(n, 0);
    std::vector<MeasuredCell> joint(n);
    for (;;) {
        double prob = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto &o = per_cell[i][pick[i]];
            joint[i] = o.m;
            prob *= o.prob;
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto &e = out.cells[i];
            const auto &m = joint[i];
            e.census += prob * static_cast<double>(m.census());
            e.data_defined += prob * static_cast<double>(m.data_defined());
            e.imputed += prob * static_cast<double>(m.imputed());
            e.correct += prob * static_cast<double>(m.correct());
            e.erroneous += prob * static_cast<double>(m.erroneous);
        }
        const auto alloc = allocate_measurement(cfg, layout, assemble_measurement(cfg, layout, joint));
        if (alloc.degenerate) {
            out.degenerate_probability += prob;
        } else {
            nondegenerate += prob;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t f = 0; f < 4; ++f) {
                    weighted_alloc[i][f] += prob * alloc.by_formula[f][i];
                }
            }
        }
        // odometer over the per-cell outcome lists
        std::size_t i = 0;
        while (i < n && ++pick[i] == per_cell[i].size()) {
            pick[i] = 0;
            ++i;
        }
        if (i == n) {
            break;
        }
    }
    if (nondegenerate > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < 4; ++f) {
                out.cells[i].allocation[f] = weighted_alloc[i][f] / nondegenerate;
            }
        }
    }
    return out;
}

} // namespace synthdse

#endif
