#ifndef SYNTHDSE_IO_SIM_CONFIG_HPP
#define SYNTHDSE_IO_SIM_CONFIG_HPP
//! \file
//! \brief JSON simulation config.
//!
//!     {
//!       "seed": 42, "n_reps": 2000,
//!       "truth_mode": "fixed" | "poisson",
//!       "alt2_pool": "all" | "inherent",
//!       "psample_rate": 1.0,
//!       "defaults": { "capture_prob": 0.95, "ee_rate": 0.0, ... },
//!       "cells": [ { "stratum": "S1", "region": "A", "truth": 10000,
//!                    "capture_prob": 0.9, "ee_rate": 0.02,
//!                    "ii_rate": 0.05, "late_add_rate": 0.0 }, ... ]
//!     }
//!
//! Cell fields fall back to "defaults", then to the SimCell defaults.
//! Unknown keys are rejected.

#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "synthdse/domain.hpp"

namespace synthdse::io {

namespace detail {

inline void reject_unknown(const nlohmann::json &obj, const std::set<std::string> &known,
                           const std::string &where) {
    for (const auto &[key, _] : obj.items()) {
        if (!known.contains(key)) {
            throw config_error(where + ": unknown key '" + key + "'");
        }
    }
}

} // namespace detail

inline SimConfig sim_config_from_json(const nlohmann::json &j) {
    if (!j.is_object()) {
        throw config_error("simulation config must be a JSON object");
    }
    detail::reject_unknown(
        j, {"seed", "n_reps", "truth_mode", "alt2_pool", "psample_rate", "defaults", "cells"},
        "config");
    SimConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t{0});
        const auto reps = j.value("n_reps", std::int64_t{1});
        if (reps < 1) {
            throw config_error("n_reps must be at least 1");
        }
        cfg.n_reps = static_cast<std::size_t>(reps);
        cfg.psample_rate = j.value("psample_rate", 1.0);
        const auto mode = j.value("truth_mode", std::string{"fixed"});
        if (mode == "fixed") {
            cfg.truth_mode = TruthMode::fixed;
        } else if (mode == "poisson") {
            cfg.truth_mode = TruthMode::poisson;
        } else {
            throw config_error("truth_mode must be 'fixed' or 'poisson'");
        }
        const auto pool = j.value("alt2_pool", std::string{"all"});
        if (pool == "all") {
            cfg.alt2_pool = ImputationPool::all;
        } else if (pool == "inherent") {
            cfg.alt2_pool = ImputationPool::inherent;
        } else {
            throw config_error("alt2_pool must be 'all' or 'inherent'");
        }
        const std::set<std::string> rate_keys{"capture_prob", "ee_rate", "ii_rate",
                                              "late_add_rate"};
        SimCell defaults;
        if (j.contains("defaults")) {
            const auto &d = j.at("defaults");
            detail::reject_unknown(d, rate_keys, "defaults");
            defaults.capture_prob = d.value("capture_prob", defaults.capture_prob);
            defaults.ee_rate = d.value("ee_rate", defaults.ee_rate);
            defaults.ii_rate = d.value("ii_rate", defaults.ii_rate);
            defaults.late_add_rate = d.value("late_add_rate", defaults.late_add_rate);
        }
        if (!j.contains("cells") || !j.at("cells").is_array()) {
            throw config_error("config needs a 'cells' array");
        }
        std::set<std::string> cell_keys = rate_keys;
        cell_keys.insert({"stratum", "region", "truth"});
        for (const auto &c : j.at("cells")) {
            detail::reject_unknown(c, cell_keys, "cell");
            SimCell cell = defaults;
            cell.stratum = c.at("stratum").get<std::string>();
            cell.region = c.at("region").get<std::string>();
            cell.truth = c.at("truth").get<Count>();
            cell.capture_prob = c.value("capture_prob", defaults.capture_prob);
            cell.ee_rate = c.value("ee_rate", defaults.ee_rate);
            cell.ii_rate = c.value("ii_rate", defaults.ii_rate);
            cell.late_add_rate = c.value("late_add_rate", defaults.late_add_rate);
            cfg.cells.push_back(std::move(cell));
        }
    } catch (const nlohmann::json::exception &e) {
        throw config_error(std::string("malformed simulation config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

inline SimConfig load_sim_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error(path + ": cannot open file");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error &e) {
        throw parse_error(path + ": " + e.what());
    }
    return sim_config_from_json(j);
}

} // namespace synthdse::io

#endif
