#include <random>

#include <gtest/gtest.h>

#include "qih/model.hpp"
#include "qih/synthesis.hpp"

using namespace qih;

namespace {

// P = ∫ e^{Aᵀt} Q e^{At} dt through A = VΛV⁻¹:
// P = W [-M_ij / (λ_i + λ_j)] Wᵀ with W = V⁻ᵀ and M = Vᵀ Q V.
Matrix integral_oracle(const Matrix& A, const Matrix& Q) {
    Eigen::EigenSolver<Matrix> es(A);
    const Eigen::MatrixXcd V = es.eigenvectors();
    const Eigen::VectorXcd lam = es.eigenvalues();
    const Eigen::MatrixXcd W = V.inverse().transpose();
    const Eigen::MatrixXcd M = V.transpose() * Q.cast<std::complex<double>>() * V;
    Eigen::MatrixXcd inner(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) inner(i, j) = -M(i, j) / (lam(i) + lam(j));
    return (W * inner * W.transpose()).real();
}

// Stabilizing CARE solution from the stable invariant subspace of the Hamiltonian.
Matrix hamiltonian_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    const Eigen::Index n = A.rows();
    Matrix H(2 * n, 2 * n);
    H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
    Eigen::EigenSolver<Matrix> es(H);
    Eigen::MatrixXcd X(2 * n, n);
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i)
        if (es.eigenvalues()(i).real() < 0) X.col(c++) = es.eigenvectors().col(i);
    EXPECT_EQ(c, n);
    return (X.bottomRows(n) * X.topRows(n).inverse()).real();
}

double max_rel(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

Matrix random_hurwitz(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> margin(0.05, 2.0);
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    return A - (spectral_abscissa(A) + margin(rng)) * Matrix::Identity(n, n);
}

Matrix random_spd(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = g(rng);
    return M * M.transpose() + 0.1 * Matrix::Identity(n, n);
}

struct Cstr {
    NonlinearModel model = make_cstr();
    LinearizedModel lin = linearize(model);
    Weights w = Weights::cstr_default();
};

void expect_invariants(const SynthesisResult& r) {
    EXPECT_LE(symmetry_defect(r.P), 1e-12);
    EXPECT_GT(min_eigenvalue(r.P), 0.0);
    EXPECT_LE(defining_residual(r), 1e-9);
    EXPECT_TRUE(is_hurwitz(r.closed_loop()));
}

}  // namespace

TEST(Lyapunov, NegativeIdentity) {
    const Matrix P = solve_lyapunov(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    EXPECT_LE((P - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Lyapunov, CompanionMatrixMatchesOracle) {
    const Matrix A = (Matrix(2, 2) << 0, 1, -2, -3).finished();
    const Matrix Q = Matrix::Identity(2, 2);
    const Matrix P = solve_lyapunov(A, Q);
    EXPECT_LE(max_rel(P, integral_oracle(A, Q)), 1e-10);
    EXPECT_LE(lyapunov_residual(A, P, Q), 1e-10 * Q.norm());
}

TEST(Lyapunov, RandomHurwitzSystemsMatchOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = trial % 2 == 0 ? 2 : 3;
        const Matrix A = random_hurwitz(rng, n);
        const Matrix Q = random_spd(rng, n);
        const Matrix P = solve_lyapunov(A, Q);
        const Matrix oracle = integral_oracle(A, Q);
        EXPECT_LE((P - oracle).norm() / oracle.norm(), 1e-8) << "trial " << trial;
    }
}

TEST(Lyapunov, TransposedFormSolvesItsOwnEquation) {
    std::mt19937_64 rng(11);
    const Matrix A = random_hurwitz(rng, 3);
    const Matrix Q = random_spd(rng, 3);
    const Matrix P = solve_lyapunov(A, Q, LyapunovForm::Transposed);
    EXPECT_LE((A * P + P * A.transpose() + Q).norm(), 1e-10 * Q.norm());
}

TEST(Lyapunov, NonHurwitzNamesEigenvalues) {
    const Matrix A = (Matrix(2, 2) << 0.2, 0, 0, -1).finished();
    try {
        solve_lyapunov(A, Matrix::Identity(2, 2));
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("0.2"), std::string::npos);
    }
}

TEST(Care, ScalarByHand) {
    // 2ap - p²b²/r + q = 0 with a=0, b=q=r=1 gives p=1, k=p·b/r=1.
    const Matrix one = Matrix::Identity(1, 1);
    const CareResult c = solve_care(Matrix::Zero(1, 1), one, one, one);
    EXPECT_NEAR(c.P(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(c.K(0, 0), 1.0, 1e-12);
}

TEST(Care, CstrResidualAndHamiltonianOracle) {
    Cstr c;
    const CareResult r = solve_care(c.lin.A, c.lin.B, c.w.W_x, c.w.W_u);
    EXPECT_LE(care_residual(c.lin.A, c.lin.B, c.w.W_x, c.w.W_u, r.P), 1e-9 * c.w.W_x.norm());
    EXPECT_LE(max_rel(r.P, hamiltonian_care(c.lin.A, c.lin.B, c.w.W_x, c.w.W_u)), 1e-8);
    EXPECT_LE(max_rel(r.K, Matrix(c.w.W_u.inverse() * c.lin.B.transpose() * r.P)), 1e-10);
}

TEST(Care, KleinmanIteratesDecreaseMonotonically) {
    Cstr c;
    const CareResult r = solve_care(c.lin.A, c.lin.B, 50.0 * c.w.W_x, 1500.0 * c.w.W_u);
    ASSERT_GE(r.history.size(), 2u);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        EXPECT_GE(min_eigenvalue(r.history[i - 1] - r.history[i]), -1e-10 * r.history[i].norm()) << "iterate " << i;
    }
}

TEST(Care, RandomSystemsMatchHamiltonian) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix A(3, 3), B(3, 2);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) A(i, j) = g(rng);
            for (int j = 0; j < 2; ++j) B(i, j) = g(rng);
        }
        const Matrix Q = random_spd(rng, 3), R = random_spd(rng, 2);
        const CareResult r = solve_care(A, B, Q, R);
        EXPECT_LE(max_rel(r.P, hamiltonian_care(A, B, Q, R)), 1e-8) << "trial " << trial;
    }
}

TEST(ChenAllgower, InvariantsAndSideCondition) {
    Cstr c;
    const SynthesisResult r = synthesize_chen_allgower(c.lin, c.w, 0.1059);
    expect_invariants(r);
    EXPECT_TRUE(is_hurwitz(r.closed_loop() + r.kappa * Matrix::Identity(2, 2)));
    EXPECT_LE((r.Delta_Q - 2.0 * r.kappa * r.P).norm(), 1e-12 * r.P.norm());
    EXPECT_THROW(synthesize_chen_allgower(c.lin, c.w, kappa_limit(c.lin, r.K) * 1.01), ConfigError);
    EXPECT_THROW(synthesize_chen_allgower(c.lin, c.w, 0.0), ConfigError);
}

TEST(ChenAllgower, SmallKappaLimit) {
    Cstr c;
    const SynthesisResult r = synthesize_chen_allgower(c.lin, c.w, 1e-9);
    const Matrix plain = solve_lyapunov(r.closed_loop(), r.Q_star);
    EXPECT_LE(max_rel(r.P, plain), 1e-6);
}

TEST(ChenAllgower, DefaultKappaIsFractionOfLimit) {
    Cstr c;
    const Matrix K = default_gain(c.lin, c.w);
    EXPECT_NEAR(default_kappa(c.lin, c.w), 0.95 * -spectral_abscissa(c.lin.A - c.lin.B * K), 1e-14);
}

TEST(Arbitrary, InvariantsAndDefaultGain) {
    Cstr c;
    const SynthesisResult r = synthesize_arbitrary(c.lin, c.w, 50, 20);
    expect_invariants(r);
    const SynthesisResult ca = synthesize_chen_allgower(c.lin, c.w, 0.1059);
    EXPECT_LE((r.K - ca.K).norm(), 1e-14);
    const Matrix dq = 50.0 * c.w.W_x + 20.0 * r.K.transpose() * c.w.W_u * r.K;
    EXPECT_LE((r.Delta_Q - dq).norm(), 1e-12 * dq.norm());
}

TEST(Arbitrary, SmallRhoLimit) {
    Cstr c;
    const SynthesisResult r = synthesize_arbitrary(c.lin, c.w, 1e-9, 0.0);
    EXPECT_LE(max_rel(r.P, solve_lyapunov(r.closed_loop(), r.Q_star)), 1e-6);
}

TEST(Arbitrary, RejectsBadInputs) {
    Cstr c;
    EXPECT_THROW(synthesize_arbitrary(c.lin, c.w, 0.0, 1.0), ConfigError);
    EXPECT_THROW(synthesize_arbitrary(c.lin, c.w, 1.0, -1.0), ConfigError);
    EXPECT_THROW(synthesize_arbitrary(c.lin, c.w, 1.0, 0.0, Matrix::Zero(2, 2)), ConfigError);
}

TEST(Arbitrary, AcceptsStabilizingOverride) {
    Cstr c;
    const Matrix K = solve_care(c.lin.A, c.lin.B, 5.0 * c.w.W_x, c.w.W_u).K;
    const SynthesisResult r = synthesize_arbitrary(c.lin, c.w, 1.0, 1.0, K);
    EXPECT_EQ(r.K, K);
    expect_invariants(r);
}

TEST(Lqr, InvariantsAndCareConsistency) {
    Cstr c;
    const SynthesisResult r = synthesize_lqr(c.lin, c.w, 50, 1500);
    expect_invariants(r);
    EXPECT_LE(max_rel(r.P, hamiltonian_care(c.lin.A, c.lin.B, 50.0 * c.w.W_x, 1500.0 * c.w.W_u)), 1e-8);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Lqr, UnitInflationRejected) {
    Cstr c;
    EXPECT_THROW(synthesize_lqr(c.lin, c.w, 1.0, 1.0), ConfigError);
    EXPECT_THROW(synthesize_lqr(c.lin, c.w, 0.5, 2.0), ConfigError);
}

TEST(Lqr, NonStrictInflationWarns) {
    Cstr c;
    const SynthesisResult r = synthesize_lqr(c.lin, c.w, 50, 1);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("rho_u"), std::string::npos);
}

TEST(Lqr, MinEigenvalueGrowsWithInputWeight) {
    Cstr c;
    double previous = 0.0;
    for (double rho_u : {1.1, 10.0, 100.0, 1500.0}) {
        const double lam = min_eigenvalue(synthesize_lqr(c.lin, c.w, 50, rho_u).P);
        EXPECT_GE(lam, previous) << "rho_u=" << rho_u;
        previous = lam;
    }
}

TEST(Synthesis, LinearTestModelAllApproaches) {
    const NonlinearModel m = make_linear_test();
    const LinearizedModel lin = linearize(m);
    const Weights w{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    expect_invariants(synthesize_chen_allgower(lin, w, default_kappa(lin, w)));
    expect_invariants(synthesize_arbitrary(lin, w, 1.0, 1.0));
    expect_invariants(synthesize_lqr(lin, w, 2.0, 2.0));
}

TEST(Synthesis, ParseNames) {
    EXPECT_EQ(parse_approach("ca"), Approach::ChenAllgower);
    EXPECT_EQ(parse_approach("ac"), Approach::ArbitraryController);
    EXPECT_EQ(parse_approach("lqr"), Approach::LqrBased);
    EXPECT_THROW(parse_approach("pid"), ConfigError);
    EXPECT_EQ(parse_lyapunov_form("transposed"), LyapunovForm::Transposed);
}
