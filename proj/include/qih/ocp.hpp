#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qih/common.hpp"
#include "qih/model.hpp"
#include "qih/synthesis.hpp"
#include "qih/terminal_region.hpp"

namespace qih {

enum class InnerSolver {
    // Box-projected Levenberg–Marquardt on the least-squares structure of the cost.
    ProjectedGaussNewton,
    // Projected steepest descent with Armijo backtracking.
    ProjectedGradient,
};

struct OcpOptions {
    int substeps = 10;               // RK4 steps per control interval
    double fd_step = 1e-6;           // central finite-difference step
    double mu0 = 1e3;                // initial terminal penalty weight
    double mu_factor = 10.0;
    int penalty_rounds = 8;
    int max_inner_iterations = 500;
    double rel_cost_tol = 1e-10;
    double terminal_tol = 1e-6;      // relative to alpha
    double box_tol = 1e-9;
    double terminal_margin = 1e-7;   // penalized target is alpha·(1 - margin)
    bool stagnation_exit = true;     // stop escalating once the violation no longer shrinks
    InnerSolver inner = InnerSolver::ProjectedGaussNewton;
};

struct OCPProblem {
    NonlinearModel model;
    Weights weights;
    TerminalRegion terminal;
    int horizon_steps = 1;           // N piecewise-constant moves
    double control_interval = 1.0;   // δ_c
    Vector x0;
    OcpOptions options;

    double horizon_time() const { return horizon_steps * control_interval; }
};

struct OCPSolution {
    Matrix u_seq;                    // N × n_u
    double cost = std::numeric_limits<double>::infinity();
    double terminal_value = std::numeric_limits<double>::infinity();
    Vector terminal_state;
    bool feasible = false;
    int iterations = 0;
    double constraint_violation = std::numeric_limits<double>::infinity();
    std::string diagnostic;
};

namespace detail {

// Single-shooting residuals r(w) with cost J(w) = |r|² split into stage, input and
// terminal blocks; the terminal value v = z_Nᵀ P z_N equals |r_terminal|².
class ShootingResiduals {
public:
    explicit ShootingResiduals(const OCPProblem& p)
        : p_(p), rk4_(p.model), n_x_(p.model.n_x), n_u_(p.model.n_u), N_(p.horizon_steps),
          S_(p.options.substeps), z_(p.model.n_x), u_(p.model.n_u) {
        Lx_ = p.weights.W_x.llt().matrixU();
        Lu_ = p.weights.W_u.llt().matrixU();
        Eigen::LLT<Matrix> llt_p(p.terminal.P);
        if (llt_p.info() != Eigen::Success) throw ConfigError("OCP: terminal P is not positive definite");
        Lp_ = llt_p.matrixU();
        h_ = p.control_interval / S_;
    }

    Eigen::Index variables() const { return static_cast<Eigen::Index>(N_) * n_u_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(N_ * S_ + 1) * n_x_ + variables() + n_x_; }
    Eigen::Index terminal_offset() const { return size() - n_x_; }
    int n_x() const { return n_x_; }

    // Fills r; returns false when the rollout diverges.
    bool evaluate(const Vector& w, Vector& r) {
        r.resize(size());
        Eigen::Index row = 0;
        z_ = p_.x0;
        const int nodes = N_ * S_;
        auto stage = [&](int node) {
            const double weight = (node == 0 || node == nodes) ? 0.5 * h_ : h_;
            r.segment(row, n_x_).noalias() = std::sqrt(weight) * (Lx_ * z_);
            row += n_x_;
        };
        stage(0);
        for (int k = 0; k < N_; ++k) {
            u_ = w.segment(static_cast<Eigen::Index>(k) * n_u_, n_u_);
            for (int s = 0; s < S_; ++s) {
                rk4_.step(z_, u_, h_);
                stage(k * S_ + s + 1);
            }
        }
        if (!z_.allFinite()) return false;
        const double sq = std::sqrt(p_.control_interval);
        for (int k = 0; k < N_; ++k) {
            r.segment(row, n_u_).noalias() = sq * (Lu_ * w.segment(static_cast<Eigen::Index>(k) * n_u_, n_u_));
            row += n_u_;
        }
        r.segment(row, n_x_).noalias() = Lp_ * z_;
        return r.allFinite();
    }

    const Vector& terminal_state() const { return z_; }

private:
    const OCPProblem& p_;
    Rk4Stepper rk4_;
    int n_x_, n_u_, N_, S_;
    double h_ = 0.0;
    Matrix Lx_, Lu_, Lp_;
    Vector z_, u_;
};

// Penalized objective |r|² + μ·max(0, v - target)².
struct PenaltyObjective {
    double mu = 0.0;
    double target = 0.0;

    double terminal_value(const ShootingResiduals& res, const Vector& r) const {
        return r.tail(res.n_x()).squaredNorm();
    }
    double excess(const ShootingResiduals& res, const Vector& r) const {
        return std::max(0.0, terminal_value(res, r) - target);
    }
    double operator()(const ShootingResiduals& res, const Vector& r) const {
        const double e = excess(res, r);
        return r.squaredNorm() + mu * e * e;
    }
};

// min ½ dᵀHd + gᵀd  s.t. lo ≤ d ≤ hi with H positive definite and lo ≤ 0 ≤ hi.
// Primal active set; exact on the free subspace, so it tolerates the rank-one
// stiffness of large penalty weights.
inline Vector box_qp(const Matrix& H, const Vector& g, const Vector& lo, const Vector& hi) {
    const Eigen::Index n = g.size();
    Vector d = Vector::Zero(n);
    // 0: free, -1: at lower bound, +1: at upper bound
    std::vector<int> state(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lo(i) >= 0.0 && g(i) > 0.0) state[i] = -1;
        else if (hi(i) <= 0.0 && g(i) < 0.0) state[i] = 1;
    }
    for (int it = 0; it < 10 * static_cast<int>(n) + 10; ++it) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i)
            if (state[i] == 0) free.push_back(i);
        const Vector grad = g + H * d;
        Vector p = Vector::Zero(n);
        if (!free.empty()) {
            const auto m = static_cast<Eigen::Index>(free.size());
            Matrix Hf(m, m);
            Vector gf(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                gf(a) = grad(free[a]);
                for (Eigen::Index b = 0; b < m; ++b) Hf(a, b) = H(free[a], free[b]);
            }
            const Vector pf = Hf.ldlt().solve(-gf);
            for (Eigen::Index a = 0; a < m; ++a) p(free[a]) = pf(a);
        }
        const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
        if (p.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
            // Release the bound with the most wrong-signed multiplier.
            Eigen::Index worst = -1;
            double worst_value = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double wrong = state[i] == -1 ? -grad(i) : state[i] == 1 ? grad(i) : 0.0;
                if (wrong > worst_value) {
                    worst_value = wrong;
                    worst = i;
                }
            }
            if (worst < 0) break;
            state[worst] = 0;
            continue;
        }
        double tau = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (p(i) > 0.0 && d(i) + tau * p(i) > hi(i)) {
                tau = (hi(i) - d(i)) / p(i);
                blocking = i;
            } else if (p(i) < 0.0 && d(i) + tau * p(i) < lo(i)) {
                tau = (lo(i) - d(i)) / p(i);
                blocking = i;
            }
        }
        d += std::max(tau, 0.0) * p;
        if (blocking >= 0) {
            state[blocking] = p(blocking) > 0.0 ? 1 : -1;
            d(blocking) = p(blocking) > 0.0 ? hi(blocking) : lo(blocking);
        }
    }
    return d.cwiseMax(lo).cwiseMin(hi);
}

struct InnerResult {
    Vector w;
    int iterations = 0;
    bool diverged = false;
};

inline Matrix fd_jacobian(ShootingResiduals& res, const Vector& w, double h, const Vector& lo, const Vector& hi,
                          bool& ok) {
    const Eigen::Index n = w.size();
    Matrix J(res.size(), n);
    Vector rp, rm;
    ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        // Central differences; one-sided at an active bound so the rollout stays inside the box.
        Vector wp = w, wm = w;
        const double hp = w(i) + h > hi(i) ? 0.0 : h;
        const double hm = w(i) - h < lo(i) ? 0.0 : h;
        wp(i) += hp;
        wm(i) -= hm;
        if (!res.evaluate(wp, rp) || !res.evaluate(wm, rm)) {
            ok = false;
            return J;
        }
        J.col(i) = (rp - rm) / (hp + hm);
    }
    return J;
}

// Box-projected Levenberg–Marquardt. The penalty term uses the generalized
// Gauss–Newton curvature 2μ[∇v∇vᵀ + (v - target)₊·2J_tᵀJ_t], where J_t is the
// Jacobian of the terminal residual block.
inline InnerResult gauss_newton(ShootingResiduals& res, Vector w, const PenaltyObjective& obj, const Vector& lo,
                                const Vector& hi, const OcpOptions& opt) {
    InnerResult out;
    Vector r, r_trial;
    if (!res.evaluate(w, r)) {
        out.diverged = true;
        out.w = w;
        return out;
    }
    double f = obj(res, r);
    double lambda = 1e-3;
    const Eigen::Index nt = res.n_x();
    for (int it = 0; it < opt.max_inner_iterations; ++it) {
        out.iterations = it + 1;
        bool ok = true;
        const Matrix J = fd_jacobian(res, w, opt.fd_step, lo, hi, ok);
        if (!ok) break;
        const Matrix H0 = 2.0 * J.transpose() * J;
        const Vector g0 = 2.0 * J.transpose() * r;
        const auto Jt = J.bottomRows(nt);
        const Vector grad_v = 2.0 * Jt.transpose() * r.tail(nt);
        const double gap = obj.terminal_value(res, r) - obj.target;
        const double e = std::max(0.0, gap);
        // Active-penalty model: linearized excess plus the (v - target)₊ curvature of v.
        Matrix H1 = H0 + 2.0 * obj.mu * grad_v * grad_v.transpose();
        if (e > 0.0) H1.noalias() += 4.0 * obj.mu * e * Jt.transpose() * Jt;
        const Vector g1 = g0 + 2.0 * obj.mu * gap * grad_v;
        auto model = [&](const Vector& d) {
            const double lin = std::max(0.0, gap + grad_v.dot(d));
            double m = r.squaredNorm() + g0.dot(d) + 0.5 * d.dot(H0 * d) + obj.mu * lin * lin;
            if (e > 0.0) m += 2.0 * obj.mu * e * (Jt * d).squaredNorm();
            return m;
        };
        const Vector diag0 = H0.diagonal().cwiseMax(1e-12 * std::max(1.0, H0.diagonal().maxCoeff()));
        const Vector diag1 = H1.diagonal().cwiseMax(1e-12 * std::max(1.0, H1.diagonal().maxCoeff()));
        bool accepted = false;
        double decrease = 0.0;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Vector d;
            if (e == 0.0) {
                Matrix Hl = H0;
                Hl.diagonal() += lambda * diag0;
                d = box_qp(Hl, g0, lo - w, hi - w);
            }
            if (e > 0.0 || gap + grad_v.dot(d) > 0.0) {
                Matrix Hl = H1;
                Hl.diagonal() += lambda * diag1;
                d = box_qp(Hl, g1, lo - w, hi - w);
            }
            if (d.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, w.cwiseAbs().maxCoeff())) break;
            const double predicted = f - model(d);
            const Vector w_trial = (w + d).cwiseMax(lo).cwiseMin(hi);
            if (predicted > 0.0 && res.evaluate(w_trial, r_trial)) {
                const double f_trial = obj(res, r_trial);
                const double ratio = (f - f_trial) / predicted;
                if (f_trial < f) {
                    decrease = f - f_trial;
                    w = w_trial;
                    r = r_trial;
                    f = f_trial;
                    if (ratio > 0.75) lambda = std::max(lambda / 5.0, 1e-12);
                    else if (ratio < 0.25) lambda *= 2.0;
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if (!accepted || decrease <= opt.rel_cost_tol * std::max(f, 1e-300)) break;
    }
    out.w = w;
    return out;
}

inline InnerResult projected_gradient(ShootingResiduals& res, Vector w, const PenaltyObjective& obj,
                                      const Vector& lo, const Vector& hi, const OcpOptions& opt) {
    InnerResult out;
    Vector r, rp, rm;
    if (!res.evaluate(w, r)) {
        out.diverged = true;
        out.w = w;
        return out;
    }
    double f = obj(res, r);
    double step = 1e-3;
    for (int it = 0; it < opt.max_inner_iterations; ++it) {
        out.iterations = it + 1;
        Vector g(w.size());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            Vector wp = w, wm = w;
            wp(i) += opt.fd_step;
            wm(i) -= opt.fd_step;
            if (!res.evaluate(wp, rp) || !res.evaluate(wm, rm)) {
                g(i) = 0.0;
                continue;
            }
            g(i) = (obj(res, rp) - obj(res, rm)) / (2.0 * opt.fd_step);
        }
        bool accepted = false;
        double decrease = 0.0;
        step *= 2.0;
        for (int ls = 0; ls < 60; ++ls) {
            const Vector w_trial = (w - step * g).cwiseMax(lo).cwiseMin(hi);
            const double predicted = g.dot(w - w_trial);
            if (predicted <= 0.0) break;
            if (res.evaluate(w_trial, rp)) {
                const double f_trial = obj(res, rp);
                if (f - f_trial >= 1e-4 * predicted) {
                    decrease = f - f_trial;
                    w = w_trial;
                    f = f_trial;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted || decrease <= opt.rel_cost_tol * std::max(f, 1e-300)) break;
    }
    out.w = w;
    return out;
}

inline Vector flatten(const Matrix& u_seq) {
    Vector w(u_seq.size());
    for (Eigen::Index k = 0; k < u_seq.rows(); ++k) w.segment(k * u_seq.cols(), u_seq.cols()) = u_seq.row(k).transpose();
    return w;
}

inline Matrix unflatten(const Vector& w, int N, int n_u) {
    Matrix u(N, n_u);
    for (int k = 0; k < N; ++k) u.row(k) = w.segment(static_cast<Eigen::Index>(k) * n_u, n_u).transpose();
    return u;
}

}  // namespace detail

inline void validate_problem(const OCPProblem& p) {
    if (p.horizon_steps < 1) throw ConfigError("OCP: horizon must contain at least one move");
    if (!(p.control_interval > 0.0)) throw ConfigError("OCP: control interval must be positive");
    if (p.x0.size() != p.model.n_x || !p.x0.allFinite()) throw ConfigError("OCP: initial state invalid");
    if (!(p.terminal.alpha > 0.0)) throw ConfigError("OCP: terminal alpha must be positive");
    if (p.options.substeps < 1) throw ConfigError("OCP: substeps must be at least 1");
}

// Rollout of the clipped linear law u = -Kz sampled at each move.
inline Matrix linear_rollout(const OCPProblem& p) {
    Matrix u(p.horizon_steps, p.model.n_u);
    Rk4Stepper rk4(p.model);
    Vector z = p.x0;
    for (int k = 0; k < p.horizon_steps; ++k) {
        const Vector uk = p.model.input_box.clip(-p.terminal.K * z);
        u.row(k) = uk.transpose();
        rk4.advance(z, uk, p.control_interval, p.options.substeps);
        if (!z.allFinite()) break;
    }
    return u;
}

// Terminal state and value reached by a given input sequence.
inline std::pair<Vector, double> rollout_terminal(const OCPProblem& p, const Matrix& u_seq) {
    Rk4Stepper rk4(p.model);
    Vector z = p.x0;
    for (int k = 0; k < p.horizon_steps; ++k) {
        rk4.advance(z, Vector(u_seq.row(k).transpose()), p.control_interval, p.options.substeps);
    }
    return {z, z.allFinite() ? z.dot(p.terminal.P * z) : std::numeric_limits<double>::infinity()};
}

// Direct single shooting with exterior terminal penalty and box projection.
inline OCPSolution solve_ocp(const OCPProblem& p, const std::optional<Matrix>& warm_start = std::nullopt) {
    validate_problem(p);
    const OcpOptions& opt = p.options;
    const int N = p.horizon_steps;
    const int n_u = p.model.n_u;

    Vector lo(N * n_u), hi(N * n_u);
    for (int k = 0; k < N; ++k) {
        lo.segment(k * n_u, n_u) = p.model.input_box.lower;
        hi.segment(k * n_u, n_u) = p.model.input_box.upper;
    }
    Vector w = Vector::Zero(N * n_u);
    if (warm_start) {
        if (warm_start->rows() != N || warm_start->cols() != n_u) throw ConfigError("OCP: warm start has wrong shape");
        w = detail::flatten(*warm_start);
    }
    w = w.cwiseMax(lo).cwiseMin(hi);

    detail::ShootingResiduals res(p);
    const double alpha = p.terminal.alpha;
    detail::PenaltyObjective obj{opt.mu0, alpha * (1.0 - opt.terminal_margin)};
    OCPSolution sol;
    double previous_violation = std::numeric_limits<double>::infinity();
    Vector r;
    for (int round = 0; round < opt.penalty_rounds; ++round, obj.mu *= opt.mu_factor) {
        const detail::InnerResult inner = opt.inner == InnerSolver::ProjectedGaussNewton
                                              ? detail::gauss_newton(res, w, obj, lo, hi, opt)
                                              : detail::projected_gradient(res, w, obj, lo, hi, opt);
        sol.iterations += inner.iterations;
        if (inner.diverged) {
            sol.diagnostic = "state integration diverged";
            break;
        }
        w = inner.w;
        res.evaluate(w, r);
        const double violation = std::max(0.0, obj.terminal_value(res, r) - alpha);
        if (violation <= opt.terminal_tol * alpha) break;
        if (opt.stagnation_exit && round >= 2 && violation >= 0.99 * previous_violation) {
            sol.diagnostic = "terminal violation stagnated";
            break;
        }
        previous_violation = violation;
    }

    sol.u_seq = detail::unflatten(w, N, n_u);
    if (!res.evaluate(w, r)) {
        sol.feasible = false;
        if (sol.diagnostic.empty()) sol.diagnostic = "state integration diverged";
        return sol;
    }
    sol.cost = r.squaredNorm();
    sol.terminal_value = obj.terminal_value(res, r);
    sol.terminal_state = res.terminal_state();
    double box_violation = 0.0;
    for (int k = 0; k < N; ++k) box_violation = std::max(box_violation, p.model.input_box.violation(sol.u_seq.row(k).transpose()));
    sol.constraint_violation = std::max(std::max(0.0, sol.terminal_value - alpha) / alpha, box_violation);
    sol.feasible = sol.terminal_value <= alpha * (1.0 + opt.terminal_tol) && box_violation <= opt.box_tol;
    if (!sol.feasible && sol.diagnostic.empty()) sol.diagnostic = "penalty rounds exhausted";
    return sol;
}

// Cold-start policy: zeros first, then the clipped linear-controller rollout.
inline OCPSolution solve_ocp_cold(const OCPProblem& p) {
    OCPSolution sol = solve_ocp(p);
    if (sol.feasible) return sol;
    OCPSolution second = solve_ocp(p, linear_rollout(p));
    second.iterations += sol.iterations;
    return second.feasible || second.constraint_violation < sol.constraint_violation ? second : sol;
}

// ---------------------------------------------------------------------------
// Receding-horizon closed loop
// ---------------------------------------------------------------------------

struct ClosedLoopTrace {
    std::vector<double> times;
    std::vector<Vector> states;            // deviation
    std::vector<Vector> states_absolute;
    std::vector<Vector> inputs;            // deviation
    std::vector<Vector> inputs_absolute;
    std::vector<double> V;                 // x(t)ᵀ P x(t)
    std::vector<double> terminal_value;    // z(t+T_p)ᵀ P z(t+T_p) of the solve at t
    std::vector<double> sq_norm;           // |x(t)|²
    std::vector<double> cost;
    std::vector<int> iterations;
    std::vector<bool> feasible;
    std::vector<double> warm_start_terminal_value;  // shifted guess evaluated before re-solving (NaN at t=0)
    double alpha = 0.0;
    bool completed = false;
    std::string status;

    std::size_t size() const { return times.size(); }
};

struct RecedingHorizonConfig {
    int horizon_steps = 4;
    double control_interval = 1.0;
    double t_end = 60.0;
    OcpOptions options;
};

inline ClosedLoopTrace receding_horizon(const NonlinearModel& model, const Weights& weights,
                                        const TerminalRegion& region, const Vector& x0,
                                        const RecedingHorizonConfig& cfg) {
    if (!x0.allFinite() || x0.size() != model.n_x) throw ConfigError("receding_horizon: invalid initial state");
    if (!(cfg.t_end >= 0.0)) throw ConfigError("receding_horizon: t_end must be non-negative");

    OCPProblem problem{model, weights, region, cfg.horizon_steps, cfg.control_interval, x0, cfg.options};
    validate_problem(problem);
    ClosedLoopTrace trace;
    trace.alpha = region.alpha;
    Rk4Stepper plant(model);
    Vector x = x0;
    std::optional<Matrix> warm;
    const int steps = static_cast<int>(std::llround(cfg.t_end / cfg.control_interval));

    for (int k = 0; k <= steps; ++k) {
        const double t = k * cfg.control_interval;
        if (!x.allFinite()) throw NumericalError("receding_horizon: plant state diverged at t=" + std::to_string(t));
        problem.x0 = x;
        double warm_value = std::numeric_limits<double>::quiet_NaN();
        OCPSolution sol;
        if (warm) {
            warm_value = rollout_terminal(problem, *warm).second;
            sol = solve_ocp(problem, warm);
            if (!sol.feasible) sol = solve_ocp_cold(problem);
        } else {
            sol = solve_ocp_cold(problem);
        }

        trace.times.push_back(t);
        trace.states.push_back(x);
        trace.states_absolute.push_back(model.to_absolute_state(x));
        const Vector u = sol.u_seq.row(0).transpose();
        trace.inputs.push_back(u);
        trace.inputs_absolute.push_back(model.to_absolute_input(u));
        trace.V.push_back(x.dot(region.P * x));
        trace.sq_norm.push_back(x.squaredNorm());
        trace.terminal_value.push_back(sol.terminal_value);
        trace.cost.push_back(sol.cost);
        trace.iterations.push_back(sol.iterations);
        trace.feasible.push_back(sol.feasible);
        trace.warm_start_terminal_value.push_back(warm_value);

        if (!sol.feasible) {
            trace.status = "infeasible at t=" + std::to_string(t) + ": " + sol.diagnostic;
            return trace;
        }
        if (k == steps) break;

        plant.advance(x, u, cfg.control_interval, cfg.options.substeps);

        // Shift: drop the applied move, append the clipped linear law at the predicted terminal state.
        Matrix next(problem.horizon_steps, model.n_u);
        if (problem.horizon_steps > 1) next.topRows(problem.horizon_steps - 1) = sol.u_seq.bottomRows(problem.horizon_steps - 1);
        next.row(problem.horizon_steps - 1) = model.input_box.clip(-region.K * sol.terminal_state).transpose();
        warm = next;
    }
    trace.completed = true;
    trace.status = "ok";
    return trace;
}

// ---------------------------------------------------------------------------
// Minimum feasible horizon
// ---------------------------------------------------------------------------

struct MinHorizonResult {
    std::optional<double> T_p_min;
    int steps = 0;                      // N at T_p_min, or the last N tried
    std::vector<bool> scanned_feasible; // per N = 1, 2, ...
};

inline MinHorizonResult min_horizon(const NonlinearModel& model, const Weights& weights, const TerminalRegion& region,
                                    const Vector& x0, double control_interval, double T_max,
                                    const OcpOptions& options = {}) {
    if (!(T_max >= control_interval)) throw ConfigError("min_horizon: T_max must be at least one control interval");
    const int max_steps = static_cast<int>(std::floor(T_max / control_interval + 1e-9));
    MinHorizonResult out;
    for (int N = 1; N <= max_steps; ++N) {
        OCPProblem problem{model, weights, region, N, control_interval, x0, options};
        const OCPSolution sol = solve_ocp_cold(problem);
        out.scanned_feasible.push_back(sol.feasible);
        out.steps = N;
        if (sol.feasible) {
            out.T_p_min = N * control_interval;
            return out;
        }
    }
    return out;
}

}  // namespace qih
