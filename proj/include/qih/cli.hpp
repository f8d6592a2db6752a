#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <thread>

#include "qih/config.hpp"
#include "qih/io.hpp"
#include "qih/ocp.hpp"

namespace qih::cli {

enum ExitCode { kOk = 0, kConfigError = 1, kFailure = 2 };

// Runs fn(0..n-1) on up to `jobs` threads. Results are written by index, so
// the outcome does not depend on scheduling; the lowest-index exception wins.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Context {
    RunConfig cfg;
    NonlinearModel model;
    LinearizedModel lin;
    Weights weights;
    std::filesystem::path out;

    explicit Context(const RunConfig& c) : cfg(c) {
        cfg.validate();
        model = cfg.build_model();
        weights = cfg.weights(model.n_x, model.n_u);
        lin = linearize(model);
    }

    void prepare_output() const { std::filesystem::create_directories(out); }
    std::string path(const std::string& name) const { return (out / name).string(); }
};

inline std::string matrix_text(const Matrix& m) {
    std::ostringstream ss;
    ss << std::setprecision(6);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ss << "  [";
        for (Eigen::Index k = 0; k < m.cols(); ++k) ss << (k ? ", " : "") << std::setw(12) << m(i, k);
        ss << "]\n";
    }
    return ss.str();
}

inline SynthesisResult synthesize_for(const Context& ctx, Approach a) {
    SynthesisOptions opts{ctx.cfg.lyapunov_form};
    try {
        return synthesize(ctx.lin, ctx.weights, a, ctx.cfg.kappa_for(a), ctx.cfg.rho_x_for(a), ctx.cfg.rho_u_for(a), opts);
    } catch (const ConfigError& e) {
        throw ConfigError("approach " + to_string(a) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("approach " + to_string(a) + ": " + e.what());
    }
}

inline TerminalRegion region_for(const Context& ctx, const SynthesisResult& s, RegionMethod m) {
    try {
        return compute_region(ctx.model, s, m, ctx.cfg.sampling());
    } catch (const NumericalError& e) {
        throw NumericalError("approach " + to_string(s.approach) + ", method " + to_string(m) + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

inline int cmd_linearize(const RunConfig& cfg, std::ostream& os) {
    Context ctx(cfg);
    ctx.out = cfg.out;
    ctx.prepare_output();
    const Eigen::VectorXcd ev = eigenvalues(ctx.lin.A);
    os << "model " << ctx.model.name << "\nA =\n" << matrix_text(ctx.lin.A) << "B =\n" << matrix_text(ctx.lin.B)
       << "eigenvalues:";
    io::Json eig = io::Json::array();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        os << " " << ev(i).real();
        if (ev(i).imag() != 0.0) os << (ev(i).imag() > 0 ? "+" : "") << ev(i).imag() << "i";
        eig.push_back(io::Json::array({ev(i).real(), ev(i).imag()}));
    }
    os << "\n";
    io::Json j;
    j["model"] = ctx.model.name;
    j["A"] = io::to_json(ctx.lin.A);
    j["B"] = io::to_json(ctx.lin.B);
    j["eigenvalues"] = eig;
    j["X_s"] = io::to_json(ctx.model.X_s);
    j["U_s"] = io::to_json(ctx.model.U_s);
    io::write_text(ctx.path("linearize.json"), j.dump(2) + "\n");
    return kOk;
}

inline int cmd_region(const RunConfig& cfg, std::ostream& os) {
    Context ctx(cfg);
    ctx.out = cfg.out;
    const Approach a = cfg.approach;
    const SynthesisResult s = synthesize_for(ctx, a);
    std::vector<io::RegionRow> rows(cfg.methods.size());
    parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) { rows[i] = {s, region_for(ctx, s, cfg.methods[i])}; });

    ctx.prepare_output();
    const std::string tag = to_string(a);
    io::write_text(ctx.path("region_" + tag + ".csv"), io::to_csv(io::region_table(rows)));
    io::Json j;
    j["synthesis"] = io::to_json(s);
    j["regions"] = io::Json::array();
    for (const auto& r : rows) {
        j["regions"].push_back(io::to_json(r.region));
        if (ctx.model.n_x == 2) {
            io::write_text(ctx.path("boundary_" + tag + "_" + to_string(r.region.method) + ".csv"),
                           io::to_csv(io::boundary_table(ellipse_boundary(r.region.P, r.region.alpha))));
        }
    }
    io::write_text(ctx.path("region_" + tag + ".json"), j.dump(2) + "\n");

    os << "approach " << tag << "  K =\n" << matrix_text(s.K) << "P =\n" << matrix_text(s.P);
    for (const auto& w : s.warnings) os << "warning: " << w << "\n";
    for (const auto& r : rows) {
        os << std::setprecision(6) << to_string(r.region.method) << ": gamma=" << r.region.gamma
           << " alpha=" << r.region.alpha;
        if (r.region.area) os << " area=" << *r.region.area;
        os << "\n";
    }
    return kOk;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& os) {
    Context ctx(cfg);
    ctx.out = cfg.out;
    const SweepSchedule schedule = cfg.sweep_schedule();
    const SweepResult res = sweep(ctx.model, ctx.weights, schedule, cfg.sampling());

    ctx.prepare_output();
    const std::string stem = "sweep_" + to_string(cfg.approach) + "_it" + std::to_string(schedule.iteration);
    io::write_text(ctx.path(stem + ".csv"), io::to_csv(io::sweep_table(res)));
    io::Json j;
    j["approach"] = to_string(cfg.approach);
    j["iteration"] = schedule.iteration;
    j["method"] = to_string(schedule.method);
    j["best_row"] = res.best ? io::Json(*res.best) : io::Json(nullptr);
    j["best_parameter"] = io::number(res.best_parameter);
    io::Json infeasible = io::Json::array();
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const SweepRow& r = res.rows[i];
        os << (res.best && *res.best == i ? "* " : "  ") << to_string(r.approach) << std::setprecision(6)
           << " rho_x=" << r.rho_x << " rho_u=" << r.rho_u << " kappa=" << r.kappa;
        if (r.feasible) {
            os << " gamma=" << r.gamma << " alpha=" << r.alpha << " area=" << r.area << "\n";
        } else {
            os << " infeasible: " << r.message << "\n";
            infeasible.push_back({{"row", i}, {"message", r.message}});
        }
    }
    j["infeasible_rows"] = infeasible;
    io::write_text(ctx.path(stem + ".json"), j.dump(2) + "\n");
    if (!res.best) {
        std::cerr << "sweep: no feasible row\n";
        return kFailure;
    }
    return kOk;
}

// Horizon steps for a simulation: the configured T_p, or the minimum feasible
// horizon plus one control interval.
inline std::optional<int> simulation_steps(const Context& ctx, const TerminalRegion& region, const Vector& x0) {
    if (ctx.cfg.T_p) return static_cast<int>(std::llround(*ctx.cfg.T_p / ctx.cfg.dc));
    const MinHorizonResult mh = min_horizon(ctx.model, ctx.weights, region, x0, ctx.cfg.dc, ctx.cfg.T_max);
    if (!mh.T_p_min) return std::nullopt;
    return mh.steps + 1;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& os) {
    Context ctx(cfg);
    ctx.out = cfg.out;
    const Approach a = cfg.approach;
    const SynthesisResult s = synthesize_for(ctx, a);
    const TerminalRegion region = region_for(ctx, s, cfg.methods.front());
    const std::vector<Vector> ics = cfg.initial_conditions(ctx.model.n_x);
    if (ics.empty()) throw ConfigError("ics: no initial conditions");

    struct Run {
        std::optional<int> steps;
        ClosedLoopTrace trace;
    };
    std::vector<Run> runs(ics.size());
    parallel_for(ics.size(), cfg.jobs, [&](std::size_t i) {
        runs[i].steps = simulation_steps(ctx, region, ics[i]);
        if (!runs[i].steps) return;
        RecedingHorizonConfig rc;
        rc.horizon_steps = *runs[i].steps;
        rc.control_interval = cfg.dc;
        rc.t_end = cfg.t_end;
        runs[i].trace = receding_horizon(ctx.model, ctx.weights, region, ics[i], rc);
    });

    ctx.prepare_output();
    io::Json summary;
    summary["approach"] = to_string(a);
    summary["synthesis"] = io::to_json(s);
    summary["region"] = io::to_json(region);
    summary["runs"] = io::Json::array();
    bool all_ok = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string name = "trace_" + to_string(a) + "_ic" + std::to_string(i + 1) + ".csv";
        io::Json r;
        r["ic"] = io::to_json(ics[i]);
        if (!runs[i].steps) {
            r["status"] = "infeasible: no feasible horizon up to t_max";
            all_ok = false;
            std::cerr << "ic " << i + 1 << ": infeasible up to T_max=" << cfg.T_max << "\n";
        } else {
            const ClosedLoopTrace& tr = runs[i].trace;
            io::write_text(ctx.path(name), io::to_csv(io::trace_table(tr)));
            r["trace"] = name;
            r["T_p"] = *runs[i].steps * cfg.dc;
            r.update(io::trace_summary(tr));
            if (!tr.completed) {
                all_ok = false;
                std::cerr << "ic " << i + 1 << ": " << tr.status << "\n";
            }
            os << "ic " << i + 1 << " T_p=" << *runs[i].steps * cfg.dc << " status=" << tr.status << std::setprecision(4)
               << " |x(t_end)|=" << (tr.size() ? tr.states.back().norm() : 0.0) << "\n";
        }
        summary["runs"].push_back(r);
    }
    io::write_text(ctx.path("simulate_" + to_string(a) + ".json"), summary.dump(2) + "\n");
    return all_ok ? kOk : kFailure;
}

inline int cmd_min_horizon(const RunConfig& cfg, std::ostream& os) {
    Context ctx(cfg);
    ctx.out = cfg.out;
    const std::vector<Approach> approaches = {Approach::ChenAllgower, Approach::ArbitraryController,
                                              Approach::LqrBased};
    const std::vector<Vector> ics = cfg.initial_conditions(ctx.model.n_x);
    if (ics.empty()) throw ConfigError("ics: no initial conditions");

    std::vector<TerminalRegion> regions(approaches.size());
    parallel_for(approaches.size(), cfg.jobs, [&](std::size_t i) {
        regions[i] = region_for(ctx, synthesize_for(ctx, approaches[i]), cfg.methods.front());
    });
    std::vector<MinHorizonResult> cells(approaches.size() * ics.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
        const std::size_t a = c / ics.size(), i = c % ics.size();
        cells[c] = min_horizon(ctx.model, ctx.weights, regions[a], ics[i], cfg.dc, cfg.T_max);
    });

    ctx.prepare_output();
    io::CsvTable t;
    t.header = {"approach"};
    for (std::size_t i = 0; i < ics.size(); ++i) t.header.push_back("P" + std::to_string(i + 1));
    io::Json j;
    j["dc"] = cfg.dc;
    j["t_max"] = cfg.T_max;
    j["method"] = to_string(cfg.methods.front());
    j["rows"] = io::Json::array();
    bool all_feasible = true;
    for (std::size_t a = 0; a < approaches.size(); ++a) {
        std::vector<std::string> row = {to_string(approaches[a])};
        io::Json jr;
        jr["approach"] = to_string(approaches[a]);
        jr["alpha"] = regions[a].alpha;
        jr["T_p_min"] = io::Json::array();
        os << std::left << std::setw(4) << to_string(approaches[a]) << std::right;
        for (std::size_t i = 0; i < ics.size(); ++i) {
            const MinHorizonResult& m = cells[a * ics.size() + i];
            if (m.T_p_min) {
                row.push_back(io::format_number(*m.T_p_min));
                jr["T_p_min"].push_back(*m.T_p_min);
                os << std::setw(8) << *m.T_p_min;
            } else {
                all_feasible = false;
                row.push_back("infeasible@" + io::format_number(cfg.T_max));
                jr["T_p_min"].push_back(nullptr);
                os << std::setw(8) << ">" + io::format_number(cfg.T_max);
            }
        }
        os << "\n";
        t.rows.push_back(row);
        j["rows"].push_back(jr);
    }
    io::write_text(ctx.path("min_horizon.csv"), io::to_csv(t));
    io::write_text(ctx.path("min_horizon.json"), j.dump(2) + "\n");
    if (!all_feasible) {
        std::cerr << "min-horizon: some cells infeasible up to T_max=" << cfg.T_max << "\n";
        return kFailure;
    }
    return kOk;
}

// Maps library exceptions to exit codes with the diagnostic on stderr.
inline int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace qih::cli
