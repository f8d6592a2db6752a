#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qih/common.hpp"
#include "qih/model.hpp"
#include "qih/synthesis.hpp"

namespace qih {

enum class RegionMethod { NormBased, InequalityBased };

inline std::string to_string(RegionMethod m) { return m == RegionMethod::NormBased ? "norm" : "ineq"; }

inline RegionMethod parse_region_method(const std::string& s) {
    if (s == "norm") return RegionMethod::NormBased;
    if (s == "ineq") return RegionMethod::InequalityBased;
    throw ConfigError("unknown region method '" + s + "' (expected norm|ineq)");
}

struct SamplingOptions {
    int angles = 3600;          // angular grid per shell (2 states)
    int shells = 8;             // concentric shells for the Ψ search
    int lipschitz_shells = 5;   // interior shells added to the boundary for L_Φ
    int samples = 10000;        // shell samples for more than 2 states
    double beta = 0.98;         // multiplicative shrink factor for α
    double floor_ratio = 1e-12; // α below floor_ratio·γ is a failure
    double psi_tolerance = 1e-12;
    bool refine = true;
    std::uint64_t seed = 1;
};

struct TerminalRegion {
    Matrix P;
    double alpha = 0.0;
    double gamma = 0.0;
    Matrix K;
    RegionMethod method = RegionMethod::InequalityBased;
    std::optional<double> area;

    double level(const Vector& x) const { return x.dot(P * x); }
    bool contains(const Vector& x, double rel_tol = 0.0) const { return level(x) <= alpha * (1.0 + rel_tol); }
};

// ---------------------------------------------------------------------------
// Step S1: input-feasibility bound
// ---------------------------------------------------------------------------

// Largest γ with -Kx inside the box for every xᵀPx ≤ γ. Over that ellipsoid the
// extreme of k_i x is ±sqrt(γ k_i P⁻¹ k_iᵀ), so each input row gives one bound.
inline double compute_gamma(const Matrix& P, const Matrix& K, const InputBox& box) {
    if (!is_spd(P)) throw ConfigError("compute_gamma: P must be symmetric positive definite");
    if (!box.contains_origin_strictly()) throw ConfigError("compute_gamma: box must contain the origin strictly");
    const Matrix P_inv = P.llt().solve(Matrix::Identity(P.rows(), P.cols()));
    double gamma = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        const Vector k = K.row(i).transpose();
        const double spread = k.dot(P_inv * k);
        if (spread <= 1e-15) continue;
        const double margin = std::min(-box.lower(i), box.upper(i));
        gamma = std::min(gamma, margin * margin / spread);
    }
    return gamma;
}

inline double region_area(const Matrix& P, double alpha) {
    if (P.rows() != 2) throw ConfigError("region_area: area is defined for 2 states only");
    if (!is_spd(P)) throw ConfigError("region_area: P must be symmetric positive definite");
    if (!(alpha > 0.0)) throw ConfigError("region_area: alpha must be positive");
    return std::numbers::pi * alpha / std::sqrt(P.determinant());
}

// ---------------------------------------------------------------------------
// Ellipsoid parametrization
// ---------------------------------------------------------------------------

// Maps unit directions d to points x = sqrt(level)·P^{-1/2} d, so xᵀPx = level.
class EllipsoidMap {
public:
    explicit EllipsoidMap(const Matrix& P) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(P));
        if (es.eigenvalues().minCoeff() <= 0.0) throw ConfigError("ellipsoid: P must be positive definite");
        inv_sqrt_ = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose();
    }

    Vector point(const Vector& direction, double level) const { return std::sqrt(level) * (inv_sqrt_ * direction); }

    Vector point(double theta, double level) const {
        Vector d(2);
        d << std::cos(theta), std::sin(theta);
        return point(d, level);
    }

    Eigen::Index dim() const { return inv_sqrt_.rows(); }

private:
    Matrix inv_sqrt_;
};

// Evenly spaced points on the 2-D boundary xᵀPx = α, as a closed polyline.
inline std::vector<Vector> ellipse_boundary(const Matrix& P, double alpha, int points = 361) {
    if (P.rows() != 2) throw ConfigError("ellipse_boundary: 2 states required");
    EllipsoidMap map(P);
    std::vector<Vector> out;
    out.reserve(points);
    for (int i = 0; i < points; ++i) {
        out.push_back(map.point(2.0 * std::numbers::pi * i / (points - 1), alpha));
    }
    return out;
}

// Uniform samples from the solid ellipsoid xᵀPx ≤ α.
inline std::vector<Vector> sample_ellipsoid(const Matrix& P, double alpha, int count, std::uint64_t seed) {
    EllipsoidMap map(P);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto n = static_cast<double>(map.dim());
    std::vector<Vector> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vector d(map.dim());
        for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = normal(rng);
        d.normalize();
        const double r = std::pow(uniform(rng), 1.0 / n);
        out.push_back(map.point(d, alpha * r * r));
    }
    return out;
}

// Random samples on the boundary xᵀPx = α.
inline std::vector<Vector> sample_boundary(const Matrix& P, double alpha, int count, std::uint64_t seed) {
    EllipsoidMap map(P);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<Vector> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vector d(map.dim());
        for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = normal(rng);
        out.push_back(map.point(Vector(d.normalized()), alpha));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Nonlinearity gap Φ_K and certificate Ψ
// ---------------------------------------------------------------------------

class NonlinearityGap {
public:
    NonlinearityGap(const NonlinearModel& model, const SynthesisResult& synth)
        : model_(model), K_(synth.K), A_K_(synth.closed_loop()), P_(synth.P), Delta_Q_(synth.Delta_Q),
          Q_star_(synth.Q_star), fx_(model.n_x), u_(model.n_u) {}

    // Φ_K(x) = f(x, -Kx) - A_K x
    Vector phi(const Vector& x) const {
        closed_loop_rhs(x);
        return fx_ - A_K_ * x;
    }

    // Ψ(x) = xᵀ ΔQ x - 2 xᵀ P Φ_K(x)
    double psi(const Vector& x) const { return x.dot(Delta_Q_ * x) - 2.0 * x.dot(P_ * phi(x)); }

    // dV/dt of V = xᵀPx along the nonlinear closed loop u = -Kx.
    double vdot(const Vector& x) const {
        closed_loop_rhs(x);
        return 2.0 * x.dot(P_ * fx_);
    }

    double stage_decrease(const Vector& x) const { return x.dot(Q_star_ * x); }

    const NonlinearModel& model() const { return model_; }
    const Matrix& K() const { return K_; }
    const Matrix& P() const { return P_; }
    const Matrix& Delta_Q() const { return Delta_Q_; }

private:
    void closed_loop_rhs(const Vector& x) const {
        u_.noalias() = -K_ * x;
        model_.f(x, u_, fx_);
    }

    NonlinearModel model_;
    Matrix K_, A_K_, P_, Delta_Q_, Q_star_;
    mutable Vector fx_, u_;
};

namespace detail {

struct ShellExtremum {
    double value = 0.0;
    Vector x;
};

// Golden-section minimization of g on [a, b].
template <typename G>
double golden_section_min(G&& g, double a, double b, double& best_arg, int iterations = 60) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double gc = g(c), gd = g(d);
    for (int i = 0; i < iterations; ++i) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    if (gc < gd) {
        best_arg = c;
        return gc;
    }
    best_arg = d;
    return gd;
}

// Minimum of score(x) over the solid ellipsoid xᵀPx ≤ α, sampled on concentric
// shells with levels α·s/shells, s = 1..shells (plus `extra_levels`), then refined.
template <typename Score>
ShellExtremum shell_minimum(const Matrix& P, double alpha, const std::vector<double>& level_fractions,
                            const SamplingOptions& opts, Score&& score) {
    EllipsoidMap map(P);
    ShellExtremum best{std::numeric_limits<double>::infinity(), Vector()};
    if (map.dim() == 2) {
        const double dtheta = 2.0 * std::numbers::pi / opts.angles;
        double best_theta = 0.0, best_level = 0.0;
        for (double frac : level_fractions) {
            const double level = alpha * frac;
            for (int a = 0; a < opts.angles; ++a) {
                const double theta = a * dtheta;
                const Vector x = map.point(theta, level);
                const double v = score(x);
                if (v < best.value) {
                    best = {v, x};
                    best_theta = theta;
                    best_level = level;
                }
            }
        }
        if (opts.refine && std::isfinite(best.value)) {
            double theta_star = best_theta;
            const double v = golden_section_min([&](double th) { return score(map.point(th, best_level)); },
                                                best_theta - dtheta, best_theta + dtheta, theta_star);
            if (v < best.value) best = {v, map.point(theta_star, best_level)};
        }
        return best;
    }

    // Higher dimensions: seeded random directions on each shell, then a
    // shrinking random-perturbation descent around the best direction.
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    const int per_shell = std::max(1, opts.samples / static_cast<int>(level_fractions.size()));
    Vector best_dir;
    double best_level = 0.0;
    for (double frac : level_fractions) {
        const double level = alpha * frac;
        for (int i = 0; i < per_shell; ++i) {
            Vector d(map.dim());
            for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = normal(rng);
            d.normalize();
            const Vector x = map.point(d, level);
            const double v = score(x);
            if (v < best.value) {
                best = {v, x};
                best_dir = d;
                best_level = level;
            }
        }
    }
    if (opts.refine && best_dir.size() > 0) {
        double step = 0.1;
        for (int it = 0; it < 200 && step > 1e-8; ++it) {
            Vector d = best_dir;
            for (Eigen::Index j = 0; j < d.size(); ++j) d(j) += step * normal(rng);
            d.normalize();
            const Vector x = map.point(d, best_level);
            const double v = score(x);
            if (v < best.value) {
                best = {v, x};
                best_dir = d;
            } else {
                step *= 0.9;
            }
        }
    }
    return best;
}

inline std::vector<double> uniform_levels(int shells) {
    std::vector<double> out;
    for (int s = 1; s <= shells; ++s) out.push_back(static_cast<double>(s) / shells);
    return out;
}

}  // namespace detail

// min over Ω = {xᵀPx ≤ α} of Ψ(x) together with its minimizer.
inline detail::ShellExtremum min_psi(const NonlinearityGap& gap, double alpha, const SamplingOptions& opts = {}) {
    return detail::shell_minimum(gap.P(), alpha, detail::uniform_levels(opts.shells), opts,
                                 [&](const Vector& x) { return gap.psi(x); });
}

// L_Φ = max over Ω\{0} of |Φ_K(x)|/|x|, sampled on the boundary and interior shells.
inline double lipschitz_ratio(const NonlinearityGap& gap, double alpha, const SamplingOptions& opts = {}) {
    if (!(alpha > 0.0)) throw ConfigError("lipschitz_ratio: alpha must be positive");
    std::vector<double> levels;
    const int interior = opts.lipschitz_shells;
    for (int s = 1; s <= interior; ++s) levels.push_back(static_cast<double>(s) / (interior + 1));
    levels.push_back(1.0);
    const auto best = detail::shell_minimum(gap.P(), alpha, levels, opts,
                                            [&](const Vector& x) { return -gap.phi(x).norm() / x.norm(); });
    return std::max(0.0, -best.value);
}

inline double lipschitz_ratio(const NonlinearModel& model, const SynthesisResult& synth, double alpha,
                              const SamplingOptions& opts = {}) {
    return lipschitz_ratio(NonlinearityGap(model, synth), alpha, opts);
}

// Bound on L_Φ below which the norm argument certifies the decrease.
inline double lipschitz_bound(const SynthesisResult& synth) {
    return min_eigenvalue(synth.Delta_Q) / (2.0 * spectral_norm(synth.P));
}

inline double alpha_norm_based(const NonlinearModel& model, const SynthesisResult& synth, double gamma,
                               const SamplingOptions& opts = {}) {
    if (!(gamma > 0.0)) throw ConfigError("alpha_norm_based: gamma must be positive");
    const NonlinearityGap gap(model, synth);
    const double bound = lipschitz_bound(synth);
    const double floor = opts.floor_ratio * gamma;
    for (double alpha = gamma; alpha >= floor; alpha *= opts.beta) {
        if (lipschitz_ratio(gap, alpha, opts) <= bound) return alpha;
    }
    throw NumericalError("norm condition unsatisfiable at floor");
}

inline double alpha_inequality_based(const NonlinearModel& model, const SynthesisResult& synth, double gamma,
                                     const SamplingOptions& opts = {}) {
    if (!(gamma > 0.0)) throw ConfigError("alpha_inequality_based: gamma must be positive");
    const NonlinearityGap gap(model, synth);
    const double floor = opts.floor_ratio * gamma;
    for (double alpha = gamma; alpha >= floor; alpha *= opts.beta) {
        if (min_psi(gap, alpha, opts).value >= -opts.psi_tolerance) return alpha;
    }
    throw NumericalError("inequality condition unsatisfiable at floor");
}

// Steps S1 + S2a/S2b for one synthesis result.
inline TerminalRegion compute_region(const NonlinearModel& model, const SynthesisResult& synth, RegionMethod method,
                                     const SamplingOptions& opts = {}) {
    TerminalRegion region;
    region.P = synth.P;
    region.K = synth.K;
    region.method = method;
    region.gamma = compute_gamma(synth.P, synth.K, model.input_box);
    region.alpha = method == RegionMethod::NormBased ? alpha_norm_based(model, synth, region.gamma, opts)
                                                     : alpha_inequality_based(model, synth, region.gamma, opts);
    if (model.n_x == 2) region.area = region_area(synth.P, region.alpha);
    return region;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

struct SweepSchedule {
    Approach approach = Approach::ArbitraryController;
    int iteration = 1;           // 1: vary rho_x; 2: rho_x fixed at fixed_rho_x, vary rho_u
    double kappa = 0.0;          // CA only; <= 0 selects the default 0.95·(-Re λ_max)
    double fixed_rho_x = 50.0;   // iteration 2
    double start = 0.1;
    double factor = 1.5;
    double cap = 1e4;
    std::vector<double> values;  // explicit grid; overrides start/factor/cap
    RegionMethod method = RegionMethod::InequalityBased;
    SynthesisOptions synthesis;

    // Starting values of the five iteration schedules.
    static SweepSchedule standard(Approach approach, int iteration) {
        SweepSchedule s;
        s.approach = approach;
        s.iteration = iteration;
        s.start = approach == Approach::LqrBased ? 1.1 : 0.1;
        return s;
    }

    std::vector<double> grid() const {
        if (!values.empty()) return values;
        if (!(start > 0.0) || !(factor > 1.0) || !(cap >= start)) {
            throw ConfigError("sweep: need start > 0, factor > 1 and cap >= start");
        }
        std::vector<double> g;
        for (double v = start; v <= cap * (1.0 + 1e-12); v *= factor) g.push_back(v);
        return g;
    }
};

struct SweepRow {
    Approach approach = Approach::ArbitraryController;
    double rho_x = 0.0;
    double rho_u = 0.0;
    double kappa = 0.0;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double area = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::optional<std::size_t> best;  // row with the largest area
    double best_parameter = std::numeric_limits<double>::quiet_NaN();
};

inline SynthesisResult synthesize(const LinearizedModel& lin, const Weights& w, Approach approach, double kappa,
                                  double rho_x, double rho_u, const SynthesisOptions& opts = {}) {
    switch (approach) {
        case Approach::ChenAllgower:
            return synthesize_chen_allgower(lin, w, kappa > 0.0 ? kappa : default_kappa(lin, w), opts);
        case Approach::ArbitraryController: return synthesize_arbitrary(lin, w, rho_x, rho_u, std::nullopt, opts);
        case Approach::LqrBased: return synthesize_lqr(lin, w, rho_x, rho_u);
    }
    throw ConfigError("unknown approach");
}

inline SweepResult sweep(const NonlinearModel& model, const Weights& weights, const SweepSchedule& schedule,
                         const SamplingOptions& opts = {}) {
    const LinearizedModel lin = linearize(model);
    std::vector<std::pair<double, double>> params;  // (rho_x, rho_u)
    if (schedule.approach == Approach::ChenAllgower) {
        params.emplace_back(0.0, 0.0);
    } else {
        const std::vector<double> g = schedule.grid();
        if (g.empty()) throw ConfigError("sweep: empty parameter grid");
        const double fixed_rho_u = schedule.approach == Approach::LqrBased ? 1.0 : 0.0;
        for (double v : g) {
            if (schedule.iteration == 1) params.emplace_back(v, fixed_rho_u);
            else params.emplace_back(schedule.fixed_rho_x, v);
        }
    }

    SweepResult out;
    for (const auto& [rho_x, rho_u] : params) {
        SweepRow row;
        row.approach = schedule.approach;
        row.rho_x = rho_x;
        row.rho_u = rho_u;
        try {
            const SynthesisResult synth =
                synthesize(lin, weights, schedule.approach, schedule.kappa, rho_x, rho_u, schedule.synthesis);
            row.kappa = synth.kappa;
            const TerminalRegion region = compute_region(model, synth, schedule.method, opts);
            row.gamma = region.gamma;
            row.alpha = region.alpha;
            row.area = region.area.value_or(std::numeric_limits<double>::quiet_NaN());
            row.feasible = true;
        } catch (const Error& e) {
            row.message = e.what();
        }
        out.rows.push_back(row);
    }
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const SweepRow& r = out.rows[i];
        if (!r.feasible || std::isnan(r.area)) continue;
        if (!out.best || r.area > out.rows[*out.best].area) out.best = i;
    }
    if (out.best) {
        const SweepRow& r = out.rows[*out.best];
        out.best_parameter = schedule.approach == Approach::ChenAllgower ? r.kappa
                             : schedule.iteration == 1                  ? r.rho_x
                                                                        : r.rho_u;
    }
    return out;
}

}  // namespace qih
