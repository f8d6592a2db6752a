#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qih/common.hpp"

namespace qih {

// Right-hand side f(x, u) written into dx; all arguments in deviation coordinates.
using VectorField = std::function<void(const Eigen::Ref<const Vector>& x,
                                       const Eigen::Ref<const Vector>& u,
                                       Eigen::Ref<Vector> dx)>;

struct InputBox {
    Vector lower;
    Vector upper;

    Eigen::Index size() const { return lower.size(); }

    bool contains(const Vector& u, double tol = 0.0) const {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            if (u(i) < lower(i) - tol || u(i) > upper(i) + tol) return false;
        }
        return true;
    }

    // Strict interior containment of the origin.
    bool contains_origin_strictly() const {
        return (lower.array() < 0.0).all() && (upper.array() > 0.0).all();
    }

    Vector clip(const Vector& u) const { return u.cwiseMax(lower).cwiseMin(upper); }

    // Largest distance by which u leaves the box (0 when inside).
    double violation(const Vector& u) const {
        double v = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            v = std::max({v, lower(i) - u(i), u(i) - upper(i)});
        }
        return v;
    }
};

// Autonomous continuous-time model in deviation coordinates x = X - X_s, u = U - U_s.
struct NonlinearModel {
    std::string name;
    int n_x = 0;
    int n_u = 0;
    VectorField f;
    InputBox input_box;
    Vector X_s;
    Vector U_s;

    Vector eval(const Vector& x, const Vector& u) const {
        Vector dx(n_x);
        f(x, u, dx);
        return dx;
    }

    Vector to_absolute_state(const Vector& x) const { return x + X_s; }
    Vector to_absolute_input(const Vector& u) const { return u + U_s; }
};

inline void validate_model(const NonlinearModel& m) {
    if (m.n_x <= 0 || m.n_u <= 0) throw ConfigError("model '" + m.name + "': dimensions must be positive");
    if (!m.f) throw ConfigError("model '" + m.name + "': missing vector field");
    if (m.input_box.lower.size() != m.n_u || m.input_box.upper.size() != m.n_u) {
        throw ConfigError("model '" + m.name + "': input box dimension mismatch");
    }
    if (!m.input_box.contains_origin_strictly()) {
        throw ConfigError("model '" + m.name + "': input box must contain the origin in its interior");
    }
}

struct LinearizedModel {
    Matrix A;
    Matrix B;
};

// ---------------------------------------------------------------------------
// CSTR benchmark
// ---------------------------------------------------------------------------

enum class SteadyStatePolicy {
    // Keep the reference operating point and subtract the constant residual
    // f_abs(X_s, U_s) so that the origin is an exact equilibrium.
    Compensate,
    // Damped Newton on f_abs(X, U_s) = 0 starting from the reference X_s.
    Refine,
};

struct CstrParams {
    double z_T_cw = 0.38;
    double z_T_f = 0.395;
    double E_a = 5.0;
    double alpha_0 = 1.95e-4;
    double k_0 = 300.0;
    double m1_scale = 600.0;
    double m2_scale = 40.0;
    Vector X_s = (Vector(2) << 0.6416, 0.5387).finished();
    Vector U_s = (Vector(2) << 0.5833, 0.5000).finished();
    Vector u_lower = (Vector(2) << -0.4167, -0.4750).finished();
    Vector u_upper = (Vector(2) << 0.4167, 0.5).finished();
    SteadyStatePolicy steady_state = SteadyStatePolicy::Compensate;

    // Sets a scalar parameter by its name; unknown names are rejected.
    void set(const std::string& key, double value) {
        static const std::map<std::string, double CstrParams::*> fields = {
            {"z_T_cw", &CstrParams::z_T_cw},   {"z_T_f", &CstrParams::z_T_f},
            {"E_a", &CstrParams::E_a},         {"alpha_0", &CstrParams::alpha_0},
            {"k_0", &CstrParams::k_0},         {"m1_scale", &CstrParams::m1_scale},
            {"m2_scale", &CstrParams::m2_scale},
        };
        auto it = fields.find(key);
        if (it == fields.end()) throw ConfigError("unknown CSTR parameter '" + key + "'");
        this->*(it->second) = value;
    }
};

// Dimensionless CSTR dynamics in absolute coordinates (z_c, z_T) with scaled inputs.
inline void cstr_absolute_rhs(const CstrParams& p, const Eigen::Ref<const Vector>& X,
                              const Eigen::Ref<const Vector>& U, Eigen::Ref<Vector> dX) {
    const double zc = X(0);
    const double zT = X(1);
    const double m1 = p.m1_scale * U(0);
    const double m2 = p.m2_scale * U(1);
    const double rate = p.k_0 * zc * std::exp(-p.E_a / zT);
    dX(0) = (1.0 - zc) / m2 - rate;
    dX(1) = (p.z_T_f - zT) / m2 + rate - p.alpha_0 * m1 * (zT - p.z_T_cw);
}

namespace detail {

inline Vector refine_cstr_steady_state(const CstrParams& p) {
    Vector X = p.X_s;
    Vector F(2), Ft(2);
    auto residual = [&](const Vector& x, Vector& out) { cstr_absolute_rhs(p, x, p.U_s, out); };
    residual(X, F);
    for (int iter = 0; iter < 100 && F.norm() > 1e-15; ++iter) {
        Matrix J(2, 2);
        const double h = 1e-7;
        for (int j = 0; j < 2; ++j) {
            Vector xp = X, xm = X;
            xp(j) += h;
            xm(j) -= h;
            Vector fp(2), fm(2);
            residual(xp, fp);
            residual(xm, fm);
            J.col(j) = (fp - fm) / (2.0 * h);
        }
        const Vector step = J.fullPivLu().solve(-F);
        double damping = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            Vector trial = X + damping * step;
            residual(trial, Ft);
            if (Ft.allFinite() && Ft.norm() < F.norm()) {
                X = trial;
                F = Ft;
                break;
            }
            damping *= 0.5;
        }
        if (damping < 1e-8) break;
    }
    if (!F.allFinite()) throw NumericalError("CSTR steady-state refinement diverged");
    return X;
}

}  // namespace detail

inline NonlinearModel make_cstr(CstrParams params = {}) {
    if (!(params.k_0 > 0.0) || !std::isfinite(params.k_0)) throw ConfigError("CSTR: k_0 must be positive");
    if (!(params.E_a > 0.0) || !std::isfinite(params.E_a)) throw ConfigError("CSTR: E_a must be positive");
    if (params.m2_scale * params.U_s(1) == 0.0) throw ConfigError("CSTR: steady dilution term m_2 is zero");
    if (!std::isfinite(params.alpha_0) || !std::isfinite(params.z_T_f) || !std::isfinite(params.z_T_cw)) {
        throw ConfigError("CSTR: parameters must be finite");
    }

    if (params.steady_state == SteadyStatePolicy::Refine) {
        params.X_s = detail::refine_cstr_steady_state(params);
    }
    Vector residual(2);
    cstr_absolute_rhs(params, params.X_s, params.U_s, residual);
    if (!residual.allFinite()) throw ConfigError("CSTR: dynamics not finite at the operating point");

    NonlinearModel m;
    m.name = "cstr2";
    m.n_x = 2;
    m.n_u = 2;
    m.X_s = params.X_s;
    m.U_s = params.U_s;
    m.input_box = {params.u_lower, params.u_upper};
    m.f = [params, residual](const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                             Eigen::Ref<Vector> dx) {
        const Eigen::Vector2d X(params.X_s(0) + x(0), params.X_s(1) + x(1));
        const Eigen::Vector2d U(params.U_s(0) + u(0), params.U_s(1) + u(1));
        cstr_absolute_rhs(params, X, U, dx);
        dx -= residual;
    };
    validate_model(m);
    return m;
}

// Linear test plant dx/dt = A0 x + B0 u with a symmetric unit input box.
inline NonlinearModel make_linear_model(const Matrix& A0, const Matrix& B0, std::string name = "linear-test") {
    if (A0.rows() != A0.cols() || B0.rows() != A0.rows()) throw ConfigError("linear model: dimension mismatch");
    NonlinearModel m;
    m.name = std::move(name);
    m.n_x = static_cast<int>(A0.rows());
    m.n_u = static_cast<int>(B0.cols());
    m.X_s = Vector::Zero(m.n_x);
    m.U_s = Vector::Zero(m.n_u);
    m.input_box = {Vector::Constant(m.n_u, -1.0), Vector::Constant(m.n_u, 1.0)};
    m.f = [A0, B0](const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, Eigen::Ref<Vector> dx) {
        dx.noalias() = A0 * x;
        dx.noalias() += B0 * u;
    };
    validate_model(m);
    return m;
}

inline Matrix linear_test_A() { return (Matrix(2, 2) << 0.5, 1.0, -0.2, -0.3).finished(); }
inline Matrix linear_test_B() { return (Matrix(2, 2) << 1.0, 0.0, 0.0, 1.0).finished(); }

inline NonlinearModel make_linear_test() { return make_linear_model(linear_test_A(), linear_test_B()); }

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

// Central-difference Jacobians of f at the origin.
inline LinearizedModel linearize(const NonlinearModel& model, double h = 1e-6) {
    if (!(h > 0.0)) throw ConfigError("linearize: step must be positive");
    const Vector x0 = Vector::Zero(model.n_x);
    const Vector u0 = Vector::Zero(model.n_u);
    LinearizedModel lin{Matrix(model.n_x, model.n_x), Matrix(model.n_x, model.n_u)};
    Vector fp(model.n_x), fm(model.n_x);

    auto column = [&](Vector& xp, Vector& xm, Vector& up, Vector& um, const std::string& coord) {
        model.f(xp, up, fp);
        model.f(xm, um, fm);
        if (!fp.allFinite() || !fm.allFinite()) {
            throw NumericalError("linearize: non-finite f when perturbing " + coord);
        }
        return Vector((fp - fm) / (2.0 * h));
    };
    for (int j = 0; j < model.n_x; ++j) {
        Vector xp = x0, xm = x0, up = u0, um = u0;
        xp(j) += h;
        xm(j) -= h;
        lin.A.col(j) = column(xp, xm, up, um, "x" + std::to_string(j + 1));
    }
    for (int j = 0; j < model.n_u; ++j) {
        Vector xp = x0, xm = x0, up = u0, um = u0;
        up(j) += h;
        um(j) -= h;
        lin.B.col(j) = column(xp, xm, up, um, "u" + std::to_string(j + 1));
    }
    return lin;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

// Classical fixed-step RK4 with preallocated stage storage.
class Rk4Stepper {
public:
    explicit Rk4Stepper(const NonlinearModel& model)
        : model_(&model), k1_(model.n_x), k2_(model.n_x), k3_(model.n_x), k4_(model.n_x), tmp_(model.n_x) {}

    void step(Vector& x, const Vector& u, double h) {
        const VectorField& f = model_->f;
        f(x, u, k1_);
        tmp_ = x + 0.5 * h * k1_;
        f(tmp_, u, k2_);
        tmp_ = x + 0.5 * h * k2_;
        f(tmp_, u, k3_);
        tmp_ = x + h * k3_;
        f(tmp_, u, k4_);
        x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    // Advances x over `duration` with constant u in `substeps` equal steps.
    void advance(Vector& x, const Vector& u, double duration, int substeps) {
        const double h = duration / substeps;
        for (int s = 0; s < substeps; ++s) step(x, u, h);
    }

private:
    const NonlinearModel* model_;
    Vector k1_, k2_, k3_, k4_, tmp_;
};

struct PiecewiseConstantInput {
    double t0 = 0.0;
    double interval = 1.0;
    std::vector<Vector> moves;

    // Move active at time t; the last move is held beyond the final interval.
    const Vector& at(double t) const {
        if (moves.empty()) throw ConfigError("piecewise-constant input has no moves");
        const double k = std::floor((t - t0) / interval + 1e-12);
        const auto idx = static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(moves.size() - 1)));
        return moves[idx];
    }

    static PiecewiseConstantInput constant(const Vector& u, double t0 = 0.0, double interval = 1.0) {
        return {t0, interval, {u}};
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
};

// RK4 over [t_begin, t_end]; every constant-input segment gets `substeps` equal steps.
inline Trajectory integrate(const NonlinearModel& model, const Vector& x0, const PiecewiseConstantInput& input,
                            double t_begin, double t_end, int substeps = 10) {
    if (!(t_end > t_begin)) throw ConfigError("integrate: t_end must exceed t_begin");
    if (substeps < 1) throw ConfigError("integrate: substeps must be at least 1");
    if (x0.size() != model.n_x) throw ConfigError("integrate: initial state dimension mismatch");

    Trajectory traj;
    traj.times.push_back(t_begin);
    traj.states.push_back(x0);
    Rk4Stepper rk4(model);
    Vector x = x0;
    double t = t_begin;
    while (t < t_end - 1e-12 * std::max(1.0, std::abs(t_end))) {
        const double k = std::floor((t - input.t0) / input.interval + 1e-9);
        double seg_end = input.t0 + (k + 1.0) * input.interval;
        if (input.moves.size() <= 1 || seg_end > t_end) seg_end = t_end;
        const Vector& u = input.at(t);
        const double h = (seg_end - t) / substeps;
        for (int s = 0; s < substeps; ++s) {
            rk4.step(x, u, h);
            const double ts = (s + 1 == substeps) ? seg_end : t + (s + 1) * h;
            if (!x.allFinite()) throw NumericalError("integrate: state diverged at t=" + std::to_string(ts));
            traj.times.push_back(ts);
            traj.states.push_back(x);
        }
        t = seg_end;
    }
    return traj;
}

}  // namespace qih
