#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli_app.hpp"
#include "synthdse/io/csv.hpp"
#include "test_support.hpp"

using synthdse::cli::run_cli;
using testing_support::data_path;
using testing_support::test_data_path;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_dir(const std::string &name) {
    auto p = std::filesystem::temp_directory_path() / ("synthdse_cli_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST(Cli, AllocateWorkedInstance) {
    const auto r = cli({"allocate", "--cells", data_path("worked/cells.csv"), "--strata",
                        data_path("worked/strata.csv"), "--formula", "all"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "formula,stratum,region,S\n"
                     "cb,S1,A,105\ncb,S1,B,105\n"
                     "alt1,S1,A,118.125\nalt1,S1,B,91.875\n"
                     "alt2,S1,A,102.5\nalt2,S1,B,107.5\n"
                     "alt3,S1,A,105.625\nalt3,S1,B,104.375\n");
}

TEST(Cli, AllocateAggregatesToState) {
    const auto r = cli({"allocate", "--cells", data_path("worked/cells.csv"), "--strata",
                        data_path("worked/strata.csv"), "--formula", "alt1", "--geo",
                        data_path("worked/geo.csv"), "--level", "state", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["tables"]["aggregates"][0]["unit"], "X");
    EXPECT_EQ(j["tables"]["aggregates"][0]["S"], 118.125);
    EXPECT_EQ(j["manifest"]["parameters"]["level"], "state");
    EXPECT_EQ(j["manifest"]["inputs"].size(), 3u);
}

TEST(Cli, Estimate) {
    const auto r = cli({"estimate", "--cells", data_path("worked/cells.csv"), "--strata",
                        data_path("worked/strata.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("S1,200,160,40,84,16,0.64,0.84,210,1.05,1.3125"), std::string::npos)
        << r.out;
}

TEST(Cli, CompareWritesPlotData) {
    const auto dir = temp_dir("compare");
    const auto plot = (dir / "plot.csv").string();
    const auto r = cli({"compare", "--cells", data_path("worked/cells.csv"), "--strata",
                        data_path("worked/strata.csv"), "--geo", data_path("worked/geo.csv"),
                        "--se", data_path("worked/se.csv"), "--plot-data", plot});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = synthdse::io::read_csv(plot);
    EXPECT_EQ(t.header, (std::vector<std::string>{"state", "diff_cb", "diff_alt1", "diff_alt2",
                                                  "diff_alt3", "ci_lo", "ci_hi"}));
    ASSERT_EQ(t.rows.size(), 2u);
    // X: census share 0.5, alt1 share 0.5625
    EXPECT_DOUBLE_EQ(synthdse::io::parse_real(t, t.rows[0], 2), 0.0625);
    EXPECT_NEAR(synthdse::io::parse_real(t, t.rows[0], 5), -0.0196, 1e-15);
    std::filesystem::remove_all(dir);
}

TEST(Cli, SadReproducesPublishedTables) {
    const auto r = cli({"sad", "--groups", data_path("county_groups_nj.csv"),
                        data_path("county_groups_ny.csv"), data_path("county_groups_ca.csv"),
                        "--state-rates", data_path("state_imputation_rates.csv"), "--check"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto at = r.out.find("NJ,Hudson,599525,567337,");
    ASSERT_NE(at, std::string::npos);
    const auto line = r.out.substr(at, r.out.find('\n', at) - at);
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) {
        fields.push_back(f);
    }
    // sad_cb, sad_alt1, sad_alt2 follow the state offset and three reldif_dd columns
    ASSERT_GE(fields.size(), 11u);
    EXPECT_NEAR(std::stod(fields[8]), 4.273, 0.01);
    EXPECT_NEAR(std::stod(fields[9]), 3.507, 0.01);
    EXPECT_NEAR(std::stod(fields[10]), 4.583, 0.01);
}

TEST(Cli, SadCheckFailsOnCorruptedFixture) {
    const auto dir = temp_dir("sad_corrupt");
    auto text = slurp(data_path("county_groups_nj.csv"));
    const auto at = text.find("4.273");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 5, "4.373");
    const auto path = (dir / "nj.csv").string();
    std::ofstream(path) << text;
    const auto r = cli({"sad", "--groups", path, "--state-rates",
                        data_path("state_imputation_rates.csv"), "--check"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Hudson"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Cli, SadFromModel) {
    const auto r = cli({"sad", "--cells", data_path("example/cells.csv"), "--strata",
                        data_path("example/strata.csv"), "--geo", data_path("example/geo.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
}

TEST(Cli, MirAndHomogeneity) {
    auto r = cli({"mir", "--cells", data_path("worked/cells.csv"), "--geo", data_path("worked/geo.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "state,mir,n_star\nX,10.000,1\nY,30.000,1\n");
    r = cli({"homogeneity", "--cells", data_path("worked/cells.csv"), "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["tables"]["strata"][0]["statistic"].get<double>(), 12.5, 1e-12);
}

TEST(Cli, VarianceFromScenarioFile) {
    const auto r = cli({"variance", "--scenarios", data_path("scenarios.csv"), "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    const auto &rows = j["tables"]["comparisons"];
    ASSERT_GE(rows.size(), 2u);
    EXPECT_EQ(rows[0]["actual"], "DCF");
    EXPECT_NEAR(rows[0]["delta_c"].get<double>(), 192.234, 5e-4);
    EXPECT_EQ(rows[1]["actual"], "CCF");
    EXPECT_EQ(j["tables"]["frequency"].size(), 4u);
}

TEST(Cli, SimulateDeterministicAcrossWorkers) {
    const auto dir = temp_dir("simulate");
    const auto one = (dir / "one.json").string(), four = (dir / "four.json").string();
    ASSERT_EQ(cli({"simulate", "--config", data_path("sim/homogeneous.json"), "--reps", "300",
                   "--workers", "1", "--format", "json", "--out", one}).code, 0);
    ASSERT_EQ(cli({"simulate", "--config", data_path("sim/homogeneous.json"), "--reps", "300",
                   "--workers", "4", "--format", "json", "--out", four}).code, 0);
    EXPECT_EQ(slurp(one), slurp(four));
    const auto j = nlohmann::json::parse(slurp(one));
    EXPECT_EQ(j["manifest"]["parameters"]["rng"], "splitmix64-keyed");
    EXPECT_EQ(j["manifest"]["parameters"]["seed"], 7);
    std::filesystem::remove_all(dir);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const auto dir = temp_dir("envdir");
    ::setenv("SYNTHDSE_OUTPUT_DIR", dir.c_str(), 1);
    const auto r = cli({"estimate", "--cells", data_path("worked/cells.csv"), "--strata",
                        data_path("worked/strata.csv")});
    ::unsetenv("SYNTHDSE_OUTPUT_DIR");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_TRUE(std::filesystem::exists(dir / "estimate.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "estimate.csv.manifest.json"));
    std::filesystem::remove_all(dir);
}

TEST(Cli, ValidateReportsCorruptedFixture) {
    const auto dir = temp_dir("validate");
    const auto bad = (dir / "cells.csv").string();
    std::ofstream(bad) << "stratum,region,C,DD,II\nS1,A,100,95,10\nS1,B,100,70,30\n";
    auto r = cli({"validate", "--cells", bad, "--strata", data_path("worked/strata.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("C ≠ DD + II at line 2"), std::string::npos);

    r = cli({"validate", "--cells", data_path("worked/cells.csv"), "--strata",
             data_path("worked/strata.csv"), "--geo", data_path("worked/geo.csv"), "--se",
             data_path("worked/se.csv"), "--groups", data_path("county_groups_nj.csv"),
             "--state-rates", data_path("state_imputation_rates.csv"), "--scenarios",
             data_path("scenarios.csv"), "--config", data_path("sim/two_region.json")});
    EXPECT_EQ(r.code, 0) << r.err;

    const auto geo = (dir / "geo.csv").string();
    std::ofstream(geo) << "region,state\nA,X\n";
    r = cli({"validate", "--cells", data_path("worked/cells.csv"), "--geo", geo});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("region 'B' missing from geography"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"estimate", "--cells", "x", "--strata", "y", "--bogus"}).code, 2);
    EXPECT_EQ(cli({"allocate", "--cells", data_path("worked/cells.csv"), "--strata",
                   data_path("worked/strata.csv"), "--formula", "alt9"}).code, 2);
    EXPECT_EQ(cli({"estimate", "--cells", "x", "--strata", "y", "--format", "xml"}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, MissingInputFileExitsOne) {
    const auto r = cli({"estimate", "--cells", "/nonexistent.csv", "--strata", "/nonexistent2.csv"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("/nonexistent.csv"), std::string::npos);
}
