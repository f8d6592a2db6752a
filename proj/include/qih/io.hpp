#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "qih/common.hpp"
#include "qih/ocp.hpp"
#include "qih/terminal_region.hpp"

namespace qih::io {

using Json = nlohmann::ordered_json;

// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("format_number: conversion failed");
    return std::string(buf, end);
}

inline double parse_number(std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

// ---------------------------------------------------------------------------
// RFC-4180 CSV
// ---------------------------------------------------------------------------

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("csv: no column '" + name + "'");
    }
    double number(std::size_t row, const std::string& name) const { return parse_number(rows.at(row).at(column(name))); }
};

inline std::string to_csv(const CsvTable& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(fields[i]);
        }
        out += "\r\n";
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = field_started = true;
        } else if (c == ',') {
            record.push_back(field);
            field.clear();
            field_started = false;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            record.push_back(field);
            records.push_back(record);
            record.clear();
            field.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw Error("csv: unterminated quoted field");
    if (field_started || !record.empty()) {
        record.push_back(field);
        records.push_back(record);
    }
    CsvTable t;
    if (records.empty()) return t;
    t.header = records.front();
    t.rows.assign(records.begin() + 1, records.end());
    for (const auto& r : t.rows)
        if (r.size() != t.header.size()) throw Error("csv: ragged row");
    return t;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline CsvTable trace_table(const ClosedLoopTrace& tr) {
    CsvTable t;
    t.header = {"t",  "x1", "x2",          "X1",             "X2", "u1",      "u2",      "U1",
                "U2", "V",  "log10V",      "terminal_value", "xx", "log10xx", "feasible"};
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const Vector& x = tr.states[k];
        const Vector& X = tr.states_absolute[k];
        const Vector& u = tr.inputs[k];
        const Vector& U = tr.inputs_absolute[k];
        t.rows.push_back({format_number(tr.times[k]), format_number(x(0)), format_number(x(1)), format_number(X(0)),
                          format_number(X(1)), format_number(u(0)), format_number(u(1)), format_number(U(0)),
                          format_number(U(1)), format_number(tr.V[k]), format_number(std::log10(tr.V[k])),
                          format_number(tr.terminal_value[k]), format_number(tr.sq_norm[k]),
                          format_number(std::log10(tr.sq_norm[k])), tr.feasible[k] ? "1" : "0"});
    }
    return t;
}

inline CsvTable sweep_table(const SweepResult& s) {
    CsvTable t;
    t.header = {"approach", "rho_x", "rho_u", "kappa", "gamma", "alpha", "area"};
    for (const SweepRow& r : s.rows) {
        t.rows.push_back({to_string(r.approach), format_number(r.rho_x), format_number(r.rho_u), format_number(r.kappa),
                          format_number(r.gamma), format_number(r.alpha), format_number(r.area)});
    }
    return t;
}

struct RegionRow {
    SynthesisResult synth;
    TerminalRegion region;
};

inline CsvTable region_table(const std::vector<RegionRow>& rows) {
    CsvTable t;
    t.header = {"approach", "method", "rho_x", "rho_u", "kappa", "gamma", "alpha", "area"};
    for (const RegionRow& r : rows) {
        t.rows.push_back({to_string(r.synth.approach), to_string(r.region.method), format_number(r.synth.rho_x),
                          format_number(r.synth.rho_u), format_number(r.synth.kappa), format_number(r.region.gamma),
                          format_number(r.region.alpha),
                          format_number(r.region.area.value_or(std::numeric_limits<double>::quiet_NaN()))});
    }
    return t;
}

inline CsvTable boundary_table(const std::vector<Vector>& points) {
    CsvTable t;
    t.header = {"x1", "x2"};
    for (const Vector& p : points) t.rows.push_back({format_number(p(0)), format_number(p(1))});
    return t;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Json to_json(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

inline Json to_json(const Matrix& m) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        j.push_back(row);
    }
    return j;
}

// Non-finite doubles are not representable in JSON; they become strings.
inline Json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

inline Json to_json(const SynthesisResult& s) {
    Json j;
    j["approach"] = to_string(s.approach);
    j["lyapunov_form"] = to_string(s.lyapunov_form);
    j["kappa"] = s.kappa;
    j["rho_x"] = s.rho_x;
    j["rho_u"] = s.rho_u;
    j["K"] = to_json(s.K);
    j["P"] = to_json(s.P);
    j["Q_star"] = to_json(s.Q_star);
    j["Delta_Q"] = to_json(s.Delta_Q);
    j["residual"] = defining_residual(s);
    j["warnings"] = s.warnings;
    return j;
}

inline Json to_json(const TerminalRegion& r) {
    Json j;
    j["method"] = to_string(r.method);
    j["gamma"] = r.gamma;
    j["alpha"] = r.alpha;
    j["area"] = r.area ? Json(*r.area) : Json(nullptr);
    return j;
}

inline Json trace_summary(const ClosedLoopTrace& tr) {
    Json j;
    j["completed"] = tr.completed;
    j["status"] = tr.status;
    j["alpha"] = tr.alpha;
    j["steps"] = tr.size();
    if (tr.size() > 0) {
        j["final_state"] = to_json(tr.states.back());
        j["final_norm"] = tr.states.back().norm();
    }
    double worst_increase = 0.0;
    for (std::size_t k = 1; k < tr.V.size(); ++k) worst_increase = std::max(worst_increase, tr.V[k] - tr.V[k - 1]);
    j["max_V_increase"] = worst_increase;
    double worst_terminal = 0.0;
    for (double v : tr.terminal_value) worst_terminal = std::max(worst_terminal, v / tr.alpha);
    j["max_terminal_ratio"] = number(worst_terminal);
    Json cost = Json::array(), iters = Json::array();
    for (std::size_t k = 0; k < tr.size(); ++k) {
        cost.push_back(number(tr.cost[k]));
        iters.push_back(tr.iterations[k]);
    }
    j["cost"] = cost;
    j["iterations"] = iters;
    return j;
}

}  // namespace qih::io
