#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qih/common.hpp"
#include "qih/model.hpp"

namespace qih {

struct Weights {
    Matrix W_x;
    Matrix W_u;

    void validate() const {
        if (!is_spd(W_x)) throw ConfigError("W_x must be symmetric positive definite");
        if (!is_spd(W_u)) throw ConfigError("W_u must be symmetric positive definite");
    }

    // Stage-cost weights of the CSTR study.
    static Weights cstr_default() {
        return {(Matrix(2, 2) << 10.0, 0.0, 0.0, 2.0).finished(), (Matrix(2, 2) << 1.0, 0.0, 0.0, 0.5).finished()};
    }
};

enum class Approach { ChenAllgower, ArbitraryController, LqrBased };

inline std::string to_string(Approach a) {
    switch (a) {
        case Approach::ChenAllgower: return "ca";
        case Approach::ArbitraryController: return "ac";
        case Approach::LqrBased: return "lqr";
    }
    return "?";
}

inline Approach parse_approach(const std::string& s) {
    if (s == "ca") return Approach::ChenAllgower;
    if (s == "ac") return Approach::ArbitraryController;
    if (s == "lqr") return Approach::LqrBased;
    throw ConfigError("unknown approach '" + s + "' (expected ca|ac|lqr)");
}

// Which Lyapunov equation defines P for the CA and AC approaches.
//   Standard:   A_Kᵀ P + P A_K = -Q   (V = xᵀPx decreases along A_K)
//   Transposed: A_K P + P A_Kᵀ = -Q   (convention of the reference CSTR matrices)
enum class LyapunovForm { Standard, Transposed };

inline std::string to_string(LyapunovForm f) { return f == LyapunovForm::Standard ? "standard" : "transposed"; }

inline LyapunovForm parse_lyapunov_form(const std::string& s) {
    if (s == "standard") return LyapunovForm::Standard;
    if (s == "transposed") return LyapunovForm::Transposed;
    throw ConfigError("unknown lyapunov form '" + s + "' (expected standard|transposed)");
}

struct SynthesisOptions {
    LyapunovForm lyapunov_form = LyapunovForm::Standard;
};

struct SynthesisResult {
    Approach approach = Approach::LqrBased;
    LinearizedModel lin;
    Matrix K;
    Matrix P;
    Matrix Q_star;
    Matrix Delta_Q;
    double kappa = 0.0;
    double rho_x = 0.0;
    double rho_u = 0.0;
    LyapunovForm lyapunov_form = LyapunovForm::Standard;
    std::vector<std::string> warnings;

    Matrix closed_loop() const { return lin.A - lin.B * K; }
};

// ---------------------------------------------------------------------------
// Lyapunov equation
// ---------------------------------------------------------------------------

// Solves A_clᵀ P + P A_cl = -Q through the Kronecker-sum system
// (I ⊗ A_clᵀ + A_clᵀ ⊗ I) vec(P) = -vec(Q).
inline Matrix solve_lyapunov(const Matrix& A_cl, const Matrix& Q) {
    const Eigen::Index n = A_cl.rows();
    if (A_cl.cols() != n || Q.rows() != n || Q.cols() != n) throw ConfigError("solve_lyapunov: dimension mismatch");
    const Eigen::VectorXcd eig = eigenvalues(A_cl);
    if (eig.real().maxCoeff() >= 0.0) {
        std::ostringstream msg;
        msg << "solve_lyapunov: closed-loop matrix is not Hurwitz; offending eigenvalues:";
        for (Eigen::Index i = 0; i < eig.size(); ++i) {
            if (eig(i).real() >= 0.0) msg << " (" << eig(i).real() << (eig(i).imag() < 0 ? "" : "+") << eig(i).imag() << "i)";
        }
        throw NumericalError(msg.str());
    }

    const Matrix At = A_cl.transpose();
    const Matrix I = Matrix::Identity(n, n);
    Matrix kron_sum = Matrix::Zero(n * n, n * n);
    // vec(At P) = (I ⊗ At) vec(P);  vec(P A) = (Aᵀ ⊗ I) vec(P) = (At ⊗ I) vec(P)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron_sum.block(i * n, j * n, n, n) += I(i, j) * At;
            kron_sum.block(i * n, j * n, n, n) += At(i, j) * I;
        }
    }
    Eigen::FullPivLU<Matrix> lu(kron_sum);
    if (!lu.isInvertible()) throw NumericalError("solve_lyapunov: singular Kronecker system");
    const Vector rhs = -Eigen::Map<const Vector>(Q.data(), n * n);
    const Vector vecP = lu.solve(rhs);
    Matrix P = Eigen::Map<const Matrix>(vecP.data(), n, n);
    return symmetrize(P);
}

inline double lyapunov_residual(const Matrix& A_cl, const Matrix& P, const Matrix& Q) {
    return (A_cl.transpose() * P + P * A_cl + Q).norm();
}

inline Matrix solve_lyapunov(const Matrix& A_cl, const Matrix& Q, LyapunovForm form) {
    return form == LyapunovForm::Standard ? solve_lyapunov(A_cl, Q) : solve_lyapunov(A_cl.transpose(), Q);
}

// ---------------------------------------------------------------------------
// Continuous algebraic Riccati equation
// ---------------------------------------------------------------------------

struct CareResult {
    Matrix P;
    Matrix K;
    int iterations = 0;
    // Successive Kleinman iterates P_0, P_1, ...; kept for convergence diagnostics.
    std::vector<Matrix> history;
};

inline double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& P) {
    return (A.transpose() * P + P * A - P * B * R.ldlt().solve(B.transpose() * P) + Q).norm();
}

// Stabilizing gain from the shifted Lyapunov equation
// (A + βI) Z + Z (A + βI)ᵀ = 2 B Bᵀ,  K₀ = Bᵀ Z⁻¹, which gives (A - B K₀) Z + Z (A - B K₀)ᵀ = -2βZ.
inline Matrix stabilizing_gain(const Matrix& A, const Matrix& B) {
    const Eigen::Index n = A.rows();
    if (is_hurwitz(A)) return Matrix::Zero(B.cols(), n);
    const double beta = std::max(1.0, A.cwiseAbs().rowwise().sum().maxCoeff());
    const Matrix shifted = -(A + beta * Matrix::Identity(n, n));
    // shifted Z + Z shiftedᵀ = -2BBᵀ, i.e. the transposed orientation of solve_lyapunov
    const Matrix Z = solve_lyapunov(shifted.transpose(), 2.0 * B * B.transpose());
    Eigen::LLT<Matrix> llt(Z);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("solve_care: no stabilizing initial gain found ((A,B) not controllable)");
    }
    Matrix K0 = B.transpose() * llt.solve(Matrix::Identity(n, n));
    if (!is_hurwitz(A - B * K0)) {
        throw NumericalError("solve_care: no stabilizing initial gain found ((A,B) not stabilizable)");
    }
    return K0;
}

// Kleinman–Newton iteration for Aᵀ P + P A - P B R⁻¹ Bᵀ P + Q = 0.
inline CareResult solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                             int max_iterations = 200, double rel_tol = 1e-12) {
    if (!is_spd(Q)) throw ConfigError("solve_care: Q must be symmetric positive definite");
    if (!is_spd(R)) throw ConfigError("solve_care: R must be symmetric positive definite");
    const Eigen::LDLT<Matrix> Rinv(R);
    CareResult out;
    Matrix K = stabilizing_gain(A, B);
    for (int it = 0; it < max_iterations; ++it) {
        const Matrix P = solve_lyapunov(A - B * K, Q + K.transpose() * R * K);
        out.history.push_back(P);
        K = Rinv.solve(B.transpose() * P);
        out.iterations = it + 1;
        if (it > 0) {
            const Matrix& prev = out.history[out.history.size() - 2];
            if ((P - prev).norm() <= rel_tol * prev.norm()) {
                out.P = P;
                out.K = K;
                return out;
            }
        }
    }
    throw NumericalError("solve_care: Kleinman iteration did not converge in " + std::to_string(max_iterations) +
                         " steps");
}

// ---------------------------------------------------------------------------
// Terminal-ingredient synthesis
// ---------------------------------------------------------------------------

namespace detail {

inline void check_dims(const LinearizedModel& lin, const Weights& w) {
    const auto n = lin.A.rows();
    const auto m = lin.B.cols();
    if (lin.A.cols() != n || lin.B.rows() != n) throw ConfigError("synthesis: A/B dimension mismatch");
    if (w.W_x.rows() != n || w.W_u.rows() != m) throw ConfigError("synthesis: weight dimension mismatch");
    w.validate();
}

inline void require_positive_definite(const Matrix& dq, const std::string& what) {
    const double scale = std::max(1.0, dq.cwiseAbs().maxCoeff());
    if (!(min_eigenvalue(dq) > 1e-14 * scale)) {
        throw ConfigError(what + ": Delta_Q must be positive definite (smallest eigenvalue " +
                          std::to_string(min_eigenvalue(dq)) + ")");
    }
}

}  // namespace detail

inline Matrix default_gain(const LinearizedModel& lin, const Weights& w) {
    return solve_care(lin.A, lin.B, w.W_x, w.W_u).K;
}

// Admissible upper end of kappa: -Re λ_max(A - BK).
inline double kappa_limit(const LinearizedModel& lin, const Matrix& K) {
    return -spectral_abscissa(lin.A - lin.B * K);
}

inline double default_kappa(const LinearizedModel& lin, const Weights& w) {
    return 0.95 * kappa_limit(lin, default_gain(lin, w));
}

inline SynthesisResult synthesize_chen_allgower(const LinearizedModel& lin, const Weights& w, double kappa,
                                                const SynthesisOptions& opts = {}) {
    detail::check_dims(lin, w);
    SynthesisResult r;
    r.approach = Approach::ChenAllgower;
    r.lin = lin;
    r.kappa = kappa;
    r.lyapunov_form = opts.lyapunov_form;
    r.K = default_gain(lin, w);
    const double limit = kappa_limit(lin, r.K);
    if (!(kappa > 0.0) || !(kappa < limit)) {
        throw ConfigError("chen-allgower: kappa=" + std::to_string(kappa) + " outside admissible interval (0, " +
                          std::to_string(limit) + ")");
    }
    const Eigen::Index n = lin.A.rows();
    r.Q_star = w.W_x + r.K.transpose() * w.W_u * r.K;
    r.P = solve_lyapunov(r.closed_loop() + kappa * Matrix::Identity(n, n), r.Q_star, opts.lyapunov_form);
    r.Delta_Q = 2.0 * kappa * r.P;
    return r;
}

inline SynthesisResult synthesize_arbitrary(const LinearizedModel& lin, const Weights& w, double rho_x,
                                            double rho_u, const std::optional<Matrix>& K_override = std::nullopt,
                                            const SynthesisOptions& opts = {}) {
    detail::check_dims(lin, w);
    if (!(rho_x > 0.0)) throw ConfigError("arbitrary-controller: rho_x must be > 0");
    if (!(rho_u >= 0.0)) throw ConfigError("arbitrary-controller: rho_u must be >= 0");
    SynthesisResult r;
    r.approach = Approach::ArbitraryController;
    r.lin = lin;
    r.rho_x = rho_x;
    r.rho_u = rho_u;
    r.lyapunov_form = opts.lyapunov_form;
    if (K_override) {
        if (K_override->rows() != lin.B.cols() || K_override->cols() != lin.A.rows()) {
            throw ConfigError("arbitrary-controller: gain override has wrong shape");
        }
        r.K = *K_override;
        if (!is_hurwitz(r.closed_loop())) throw ConfigError("arbitrary-controller: gain override does not stabilize (A,B)");
    } else {
        r.K = default_gain(lin, w);
    }
    r.Q_star = w.W_x + r.K.transpose() * w.W_u * r.K;
    r.Delta_Q = rho_x * w.W_x + rho_u * r.K.transpose() * w.W_u * r.K;
    detail::require_positive_definite(r.Delta_Q, "arbitrary-controller");
    r.P = solve_lyapunov(r.closed_loop(), r.Q_star + r.Delta_Q, opts.lyapunov_form);
    return r;
}

inline SynthesisResult synthesize_lqr(const LinearizedModel& lin, const Weights& w, double rho_x, double rho_u) {
    detail::check_dims(lin, w);
    if (!(rho_x >= 1.0) || !(rho_u >= 1.0)) {
        throw ConfigError("lqr-based: rho_x and rho_u must be >= 1 so that the inflated weights dominate W_x, W_u");
    }
    SynthesisResult r;
    r.approach = Approach::LqrBased;
    r.lin = lin;
    r.rho_x = rho_x;
    r.rho_u = rho_u;
    if (rho_x == 1.0) r.warnings.push_back("rho_x = 1: state weight inflation is not strict");
    if (rho_u == 1.0) r.warnings.push_back("rho_u = 1: input weight inflation is not strict");

    const CareResult care = solve_care(lin.A, lin.B, rho_x * w.W_x, rho_u * w.W_u);
    r.K = care.K;
    r.P = care.P;
    r.Q_star = w.W_x + r.K.transpose() * w.W_u * r.K;
    r.Delta_Q = (rho_x - 1.0) * w.W_x + (rho_u - 1.0) * r.K.transpose() * w.W_u * r.K;
    detail::require_positive_definite(r.Delta_Q, "lqr-based");
    return r;
}

// Residual of the equation that defines P for this result, relative to |P|.
inline double defining_residual(const SynthesisResult& r) {
    const Matrix Ak = r.closed_loop();
    const Eigen::Index n = Ak.rows();
    Matrix M = Ak;
    Matrix Q = r.Q_star + r.Delta_Q;
    if (r.approach == Approach::ChenAllgower) {
        M = Ak + r.kappa * Matrix::Identity(n, n);
        Q = r.Q_star;
    }
    if (r.lyapunov_form == LyapunovForm::Transposed) M.transposeInPlace();
    return lyapunov_residual(M, r.P, Q) / r.P.norm();
}

}  // namespace qih
