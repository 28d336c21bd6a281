#ifndef SYNTHDSE_IO_REPORT_HPP
#define SYNTHDSE_IO_REPORT_HPP
//! \file
//! \brief Tabular reports written as csv or json.
//!
//! csv: one file per table, percentages fixed at 3 decimals, other reals in
//! shortest round-trip form, the manifest in a `<path>.manifest.json`
//! sidecar. json: one document holding the manifest and every table at full
//! precision. Nothing time- or host-dependent is written, so identical
//! inputs and flags give byte-identical files.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "synthdse/error.hpp"
#include "synthdse/io/csv.hpp"

namespace synthdse::io {

inline constexpr const char *tool_name = "synthdse";
inline constexpr const char *tool_version = "0.1.0";

/// A percentage: 3 decimals in csv, full precision in json.
struct Percent {
    double value = 0.0;
};

using Value = std::variant<std::monostate, std::string, std::int64_t, double, Percent, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
};

struct InputRecord {
    std::string role;
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::vector<InputRecord> inputs;
    std::map<std::string, nlohmann::json> parameters; // formulas, level, z, seed ...
};

struct Report {
    RunManifest manifest;
    std::vector<Table> tables;
};

enum class Format { csv, json };

inline std::string sha256_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw parse_error(path + ": cannot open file");
    }
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

inline InputRecord record_input(std::string role, const std::string &path) {
    return {std::move(role), path, sha256_file(path)};
}

inline std::string format_real(double v) {
    if (v == 0.0) {
        v = 0.0; // drop the sign of -0
    }
    // shortest round-trip digits; plain notation unless the magnitude is extreme
    const double mag = std::abs(v);
    const auto style = mag == 0.0 || (mag >= 1e-6 && mag < 1e15) ? std::chars_format::fixed
                                                                 : std::chars_format::scientific;
    char buf[400];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, style);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

inline std::string format_percent(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
    std::string s = ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
    if (s == "-0.000") {
        s = "0.000";
    }
    return s;
}

inline std::string format_value(const Value &v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string &s) const { return quote_csv(s); }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_real(d); }
        std::string operator()(Percent p) const { return format_percent(p.value); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(Visitor{}, v);
}

inline nlohmann::json to_json_value(const Value &v) {
    struct Visitor {
        nlohmann::json operator()(std::monostate) const { return nullptr; }
        nlohmann::json operator()(const std::string &s) const { return s; }
        nlohmann::json operator()(std::int64_t i) const { return i; }
        nlohmann::json operator()(double d) const {
            return std::isfinite(d) ? nlohmann::json(d) : nlohmann::json(nullptr);
        }
        nlohmann::json operator()(Percent p) const { return (*this)(p.value); }
        nlohmann::json operator()(bool b) const { return b; }
    };
    return std::visit(Visitor{}, v);
}

inline std::string to_csv(const Table &t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        out += (i ? "," : "") + quote_csv(t.columns[i]);
    }
    out += '\n';
    for (const auto &row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += (i ? "," : "") + format_value(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json manifest_json(const RunManifest &m) {
    nlohmann::ordered_json j;
    j["tool"] = tool_name;
    j["version"] = tool_version;
    j["command"] = m.command;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto &in : m.inputs) {
        j["inputs"].push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
    }
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto &[k, v] : m.parameters) {
        params[k] = nlohmann::ordered_json::parse(v.dump());
    }
    j["parameters"] = params;
    return j;
}

inline std::string to_json(const Report &r) {
    nlohmann::ordered_json j;
    j["manifest"] = manifest_json(r.manifest);
    nlohmann::ordered_json tables = nlohmann::ordered_json::object();
    for (const auto &t : r.tables) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto &row : t.rows) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < row.size(); ++i) {
                obj[t.columns[i]] = nlohmann::ordered_json::parse(to_json_value(row[i]).dump());
            }
            rows.push_back(std::move(obj));
        }
        tables[t.name] = std::move(rows);
    }
    j["tables"] = std::move(tables);
    return j.dump(2) + "\n";
}

/// Path of table `index` in csv mode: the first table takes `path`, later
/// tables insert `_<name>` before the extension.
inline std::string csv_table_path(const std::string &path, const Table &t, std::size_t index) {
    if (index == 0) {
        return path;
    }
    const auto dot = path.rfind('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + "_" + t.name;
    }
    return path.substr(0, dot) + "_" + t.name + path.substr(dot);
}

inline void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error(path + ": cannot open for writing");
    }
    out << content;
    if (!out) {
        throw error(path + ": write failed");
    }
}

/// Writes `r` to `path`, or to `stream` when `path` is empty (csv tables
/// are then separated by "# table: <name>" lines and no sidecar is written).
inline void write_report(const Report &r, Format format, const std::string &path,
                         std::ostream &stream) {
    if (format == Format::json) {
        if (path.empty()) {
            stream << to_json(r);
        } else {
            write_file(path, to_json(r));
        }
        return;
    }
    if (path.empty()) {
        for (std::size_t i = 0; i < r.tables.size(); ++i) {
            if (r.tables.size() > 1) {
                stream << (i ? "\n" : "") << "# table: " << r.tables[i].name << '\n';
            }
            stream << to_csv(r.tables[i]);
        }
        return;
    }
    for (std::size_t i = 0; i < r.tables.size(); ++i) {
        write_file(csv_table_path(path, r.tables[i], i), to_csv(r.tables[i]));
    }
    write_file(path + ".manifest.json", manifest_json(r.manifest).dump(2) + "\n");
}

} // namespace synthdse::io

#endif
