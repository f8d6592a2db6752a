#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qih/common.hpp"
#include "qih/model.hpp"
#include "qih/ocp.hpp"
#include "qih/synthesis.hpp"
#include "qih/terminal_region.hpp"

namespace qih {

// Everything a CLI run needs. Defaults are the CSTR study: W_x = diag(10, 2),
// W_u = diag(1, 0.5), and the three initial conditions P1, P2, P3.
struct RunConfig {
    std::string model = "cstr2";
    std::map<std::string, double> params;   // model parameter overrides

    std::vector<double> W_x = {10, 0, 0, 2};  // row-major
    std::vector<double> W_u = {1, 0, 0, 0.5};

    Approach approach = Approach::LqrBased;
    std::optional<double> kappa;
    std::optional<double> rho_x;
    std::optional<double> rho_u;
    LyapunovForm lyapunov_form = LyapunovForm::Standard;
    std::vector<RegionMethod> methods = {RegionMethod::InequalityBased};

    std::optional<double> T_p;              // unset: per-IC minimum horizon + δ_c
    double dc = 1.0;
    double T_max = 40.0;
    double t_end = 60.0;
    std::vector<std::vector<double>> ics = {{-0.001, -0.05}, {-0.625, 0.38}, {0.4, 0.23}};

    int sweep_iteration = 1;
    std::optional<double> sweep_start;
    double sweep_factor = 1.5;
    double sweep_cap = 1e4;
    std::vector<double> sweep_values;
    bool sweep_values_set = false;

    std::string out = "out";
    std::optional<int> samples;             // boundary samples per shell
    double beta = 0.98;
    std::uint64_t seed = 1;
    int jobs = 0;                           // 0: hardware concurrency

    // Tuning used in the study when a parameter is not given.
    double kappa_for(Approach) const { return kappa.value_or(0.1059); }
    double rho_x_for(Approach) const { return rho_x.value_or(50.0); }
    double rho_u_for(Approach a) const {
        if (rho_u) return *rho_u;
        switch (a) {
            case Approach::ArbitraryController: return 20.0;
            case Approach::LqrBased: return 1500.0;
            default: return 0.0;
        }
    }

    NonlinearModel build_model() const {
        if (model == "cstr2") {
            CstrParams p;
            for (const auto& [k, v] : params) p.set(k, v);
            return make_cstr(p);
        }
        if (model == "linear-test") {
            if (!params.empty()) throw ConfigError("model 'linear-test' takes no parameters");
            return make_linear_test();
        }
        throw ConfigError("unknown model '" + model + "' (expected cstr2|linear-test)");
    }

    Weights weights(int n_x, int n_u) const {
        auto square = [](const std::vector<double>& v, int n, const char* name) {
            if (static_cast<int>(v.size()) != n * n) {
                throw ConfigError(std::string(name) + ": expected " + std::to_string(n * n) + " entries, got " +
                                  std::to_string(v.size()));
            }
            Matrix m(n, n);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) m(i, k) = v[static_cast<std::size_t>(i * n + k)];
            return m;
        };
        Weights w{square(W_x, n_x, "W_x"), square(W_u, n_u, "W_u")};
        w.validate();
        return w;
    }

    SamplingOptions sampling() const {
        SamplingOptions s;
        if (samples) {
            s.angles = *samples;
            s.samples = *samples;
        }
        s.beta = beta;
        s.seed = seed;
        return s;
    }

    SweepSchedule sweep_schedule() const {
        SweepSchedule s = SweepSchedule::standard(approach, sweep_iteration);
        s.kappa = kappa.value_or(0.0);
        s.fixed_rho_x = rho_x_for(approach);
        if (sweep_start) s.start = *sweep_start;
        s.factor = sweep_factor;
        s.cap = sweep_cap;
        s.values = sweep_values;
        s.method = methods.front();
        s.synthesis.lyapunov_form = lyapunov_form;
        return s;
    }

    std::vector<Vector> initial_conditions(int n_x) const {
        std::vector<Vector> out_ics;
        for (std::size_t i = 0; i < ics.size(); ++i) {
            if (static_cast<int>(ics[i].size()) != n_x) {
                throw ConfigError("ics[" + std::to_string(i) + "]: expected " + std::to_string(n_x) + " entries");
            }
            Vector x(n_x);
            for (int k = 0; k < n_x; ++k) x(k) = ics[i][static_cast<std::size_t>(k)];
            if (!x.allFinite()) throw ConfigError("ics[" + std::to_string(i) + "]: non-finite entry");
            out_ics.push_back(x);
        }
        return out_ics;
    }

    void validate() const {
        if (!(dc > 0.0)) throw ConfigError("dc: must be positive");
        if (T_p && !(*T_p >= dc)) throw ConfigError("tp: must be at least dc");
        if (T_p && std::abs(*T_p / dc - std::round(*T_p / dc)) > 1e-9) throw ConfigError("tp: must be a multiple of dc");
        if (!(T_max >= dc)) throw ConfigError("t_max: must be at least dc");
        if (!(t_end >= 0.0)) throw ConfigError("t_end: must be non-negative");
        if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta: must lie in (0, 1)");
        if (samples && *samples < 8) throw ConfigError("samples: need at least 8");
        if (kappa && !(*kappa > 0.0)) throw ConfigError("kappa: must be positive");
        if (methods.empty()) throw ConfigError("method: none selected");
        if (sweep_iteration != 1 && sweep_iteration != 2) throw ConfigError("sweep_iteration: must be 1 or 2");
        if (sweep_values_set && sweep_values.empty()) throw ConfigError("sweep_values: empty grid");
        if (jobs < 0) throw ConfigError("jobs: must be non-negative");
    }
};

namespace detail {

inline std::string json_location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline std::vector<RegionMethod> parse_methods(const std::string& s) {
    if (s == "both") return {RegionMethod::NormBased, RegionMethod::InequalityBased};
    return {parse_region_method(s)};
}

}  // namespace detail

// Reads a flat JSON object. Model parameters go under their own names
// (k_0, E_a, ...); unknown keys are rejected.
inline RunConfig parse_config(const std::string& text, RunConfig cfg = {}) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: parse error at " + detail::json_location(text, e.byte == 0 ? 0 : e.byte - 1) +
                          ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    static const std::set<std::string> model_params = {"z_T_cw", "z_T_f", "E_a", "alpha_0", "k_0", "m1_scale",
                                                       "m2_scale"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        try {
            auto num = [&]() -> double {
                if (!v.is_number()) throw ConfigError("expected a number");
                return v.get<double>();
            };
            auto str = [&]() -> std::string {
                if (!v.is_string()) throw ConfigError("expected a string");
                return v.get<std::string>();
            };
            auto list = [&]() {
                if (!v.is_array()) throw ConfigError("expected an array of numbers");
                std::vector<double> out;
                for (const auto& e : v) {
                    if (!e.is_number()) throw ConfigError("expected an array of numbers");
                    out.push_back(e.get<double>());
                }
                return out;
            };
            if (model_params.count(key)) cfg.params[key] = num();
            else if (key == "model") cfg.model = str();
            else if (key == "W_x") cfg.W_x = list();
            else if (key == "W_u") cfg.W_u = list();
            else if (key == "approach") cfg.approach = parse_approach(str());
            else if (key == "kappa") cfg.kappa = num();
            else if (key == "rho_x") cfg.rho_x = num();
            else if (key == "rho_u") cfg.rho_u = num();
            else if (key == "lyapunov_form") cfg.lyapunov_form = parse_lyapunov_form(str());
            else if (key == "method") cfg.methods = detail::parse_methods(str());
            else if (key == "tp") cfg.T_p = num();
            else if (key == "dc") cfg.dc = num();
            else if (key == "t_max") cfg.T_max = num();
            else if (key == "t_end") cfg.t_end = num();
            else if (key == "ics") {
                if (!v.is_array()) throw ConfigError("expected an array of [x1, x2] pairs");
                cfg.ics.clear();
                for (const auto& e : v) {
                    if (!e.is_array()) throw ConfigError("expected an array of [x1, x2] pairs");
                    std::vector<double> x;
                    for (const auto& c : e) {
                        if (!c.is_number()) throw ConfigError("expected numbers");
                        x.push_back(c.get<double>());
                    }
                    cfg.ics.push_back(x);
                }
            } else if (key == "sweep_iteration") {
                if (!v.is_number_integer()) throw ConfigError("expected an integer");
                cfg.sweep_iteration = v.get<int>();
            } else if (key == "sweep_start") cfg.sweep_start = num();
            else if (key == "sweep_factor") cfg.sweep_factor = num();
            else if (key == "sweep_cap") cfg.sweep_cap = num();
            else if (key == "sweep_values") {
                cfg.sweep_values = list();
                cfg.sweep_values_set = true;
            } else if (key == "out") cfg.out = str();
            else if (key == "samples") {
                if (!v.is_number_integer()) throw ConfigError("expected an integer");
                cfg.samples = v.get<int>();
            } else if (key == "beta") cfg.beta = num();
            else if (key == "seed") {
                if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer");
                cfg.seed = v.get<std::uint64_t>();
            } else if (key == "jobs") {
                if (!v.is_number_integer()) throw ConfigError("expected an integer");
                cfg.jobs = v.get<int>();
            } else {
                throw ConfigError("unknown key");
            }
        } catch (const ConfigError& e) {
            throw ConfigError("config field '" + key + "': " + e.what());
        }
    }
    return cfg;
}

inline std::vector<double> parse_ic(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            throw ConfigError("--ic: cannot parse '" + s + "'");
        }
        if (used != part.size()) throw ConfigError("--ic: cannot parse '" + s + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace qih
