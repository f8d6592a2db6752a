#include <cmath>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "qih/model.hpp"

using namespace qih;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

NonlinearModel decay_model() {
    NonlinearModel m;
    m.name = "decay";
    m.n_x = 1;
    m.n_u = 1;
    m.f = [](const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> dx) {
        dx(0) = -x(0);
    };
    m.input_box = {vec({-1}), vec({1})};
    m.X_s = vec({0});
    m.U_s = vec({0});
    return m;
}

}  // namespace

TEST(Cstr, DefaultsMatchParameterTable) {
    CstrParams p;
    EXPECT_EQ(p.z_T_cw, 0.38);
    EXPECT_EQ(p.z_T_f, 0.395);
    EXPECT_EQ(p.E_a, 5.0);
    EXPECT_EQ(p.alpha_0, 1.95e-4);
    EXPECT_EQ(p.k_0, 300.0);
}

TEST(Cstr, OriginIsExactEquilibrium) {
    const NonlinearModel m = make_cstr();
    EXPECT_LE(m.eval(Vector::Zero(2), Vector::Zero(2)).norm(), 1e-12);
}

TEST(Cstr, ReferenceOperatingPointIsNearlyStationary) {
    // Hand evaluation of the absolute dynamics at the 4-digit operating point.
    const double zc = 0.6416, zT = 0.5387, U1 = 0.5833, U2 = 0.5;
    const double rate = 300.0 * zc * std::exp(-5.0 / zT);
    const double f1 = (1.0 - zc) / (40.0 * U2) - rate;
    const double f2 = (0.395 - zT) / (40.0 * U2) + rate - 1.95e-4 * 600.0 * U1 * (zT - 0.38);
    EXPECT_LE(std::abs(f1), 1e-4);
    EXPECT_LE(std::abs(f2), 1e-4);
}

TEST(Cstr, UpperFlowInputByHand) {
    const double zc = 0.6416, zT = 0.5387;
    const double rate = 300.0 * zc * std::exp(-5.0 / zT);
    const double at_upper = (1.0 - zc) / (40.0 * 1.0) - rate;
    const double offset = (1.0 - zc) / (40.0 * 0.5) - rate;  // removed so the origin is stationary
    const NonlinearModel m = make_cstr();
    EXPECT_NEAR(m.eval(Vector::Zero(2), vec({0.0, 0.5}))(0), at_upper - offset, 1e-14);
}

TEST(Cstr, InputBoxContainsOriginStrictly) {
    const NonlinearModel m = make_cstr();
    EXPECT_TRUE(m.input_box.contains_origin_strictly());
    EXPECT_TRUE((m.input_box.lower.array() < 0).all());
    EXPECT_TRUE((m.input_box.upper.array() > 0).all());
}

TEST(Cstr, RejectsInvalidParameters) {
    CstrParams p;
    p.k_0 = 0.0;
    EXPECT_THROW(make_cstr(p), ConfigError);
    p = {};
    p.E_a = -1.0;
    EXPECT_THROW(make_cstr(p), ConfigError);
    p = {};
    p.m2_scale = 0.0;
    EXPECT_THROW(make_cstr(p), ConfigError);
    p = {};
    EXPECT_THROW(p.set("no_such_param", 1.0), ConfigError);
}

TEST(Cstr, RefinedSteadyStateIsStationary) {
    CstrParams p;
    p.steady_state = SteadyStatePolicy::Refine;
    const NonlinearModel m = make_cstr(p);
    EXPECT_LE(m.eval(Vector::Zero(2), Vector::Zero(2)).norm(), 1e-12);
}

TEST(Linearize, LinearModelIsRecoveredExactly) {
    const NonlinearModel m = make_linear_test();
    const LinearizedModel lin = linearize(m);
    EXPECT_LE((lin.A - linear_test_A()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((lin.B - linear_test_B()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Linearize, CentralDifferencesConvergeAtSecondOrder) {
    // The reference Jacobian comes from Richardson extrapolation, so the check
    // does not rely on the step under test.
    const NonlinearModel m = make_cstr();
    const LinearizedModel l1 = linearize(m, 1e-2);
    const LinearizedModel l2 = linearize(m, 5e-3);
    const LinearizedModel l4 = linearize(m, 2.5e-3);
    const Matrix refA = (4.0 * l4.A - l2.A) / 3.0;
    const double e1 = (l1.A - refA).norm(), e2 = (l2.A - refA).norm();
    ASSERT_GT(e2, 0.0);
    EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(Linearize, CstrMatchesRichardsonReference) {
    const NonlinearModel m = make_cstr();
    const LinearizedModel lin = linearize(m);
    const LinearizedModel a = linearize(m, 1e-3), b = linearize(m, 5e-4);
    EXPECT_LE((lin.A - (4.0 * b.A - a.A) / 3.0).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((lin.B - (4.0 * b.B - a.B) / 3.0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Linearize, OpenLoopIsUnstable) {
    const LinearizedModel lin = linearize(make_cstr());
    EXPECT_GT(spectral_abscissa(lin.A), 0.0);
    EXPECT_FALSE(is_hurwitz(lin.A));
}

TEST(Integrate, ExponentialDecay) {
    const NonlinearModel m = decay_model();
    const auto traj = integrate(m, vec({1.0}), PiecewiseConstantInput::constant(vec({0.0})), 0.0, 1.0, 20);
    EXPECT_NEAR(traj.states.back()(0), std::exp(-1.0), 1e-6);
    EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
}

TEST(Integrate, FourthOrderErrorRatio) {
    const NonlinearModel m = decay_model();
    auto error = [&](int substeps) {
        const auto traj = integrate(m, vec({1.0}), PiecewiseConstantInput::constant(vec({0.0})), 0.0, 1.0, substeps);
        return std::abs(traj.states.back()(0) - std::exp(-1.0));
    };
    const double ratio = error(8) / error(16);
    EXPECT_GE(ratio, 14.0);
    EXPECT_LE(ratio, 18.0);
}

TEST(Integrate, CstrEquilibriumStaysPut) {
    const NonlinearModel m = make_cstr();
    const auto traj = integrate(m, Vector::Zero(2), PiecewiseConstantInput::constant(Vector::Zero(2)), 0.0, 10.0);
    for (const Vector& x : traj.states) EXPECT_LE(x.norm(), 1e-8);
}

TEST(Integrate, CstrDivergesLikeTheLinearization) {
    const NonlinearModel m = make_cstr();
    const Vector x0 = vec({0.01, 0.0});
    const auto traj = integrate(m, x0, PiecewiseConstantInput::constant(Vector::Zero(2)), 0.0, 20.0);
    const Vector x20 = traj.states.back();
    EXPECT_GT(x20.norm(), x0.norm());
    const LinearizedModel lin = linearize(m);
    const Vector linear = (lin.A * 20.0).exp() * x0;
    EXPECT_GT(linear.norm(), x0.norm());
    EXPECT_GT(x20.dot(linear), 0.0);
}

TEST(Integrate, ShiftOfOriginEquivalence) {
    // Absolute-coordinate plant with the same stationarity offset as the deviation model.
    const CstrParams p;
    Vector offset(2);
    cstr_absolute_rhs(p, p.X_s, p.U_s, offset);
    NonlinearModel abs_model;
    abs_model.name = "cstr-absolute";
    abs_model.n_x = 2;
    abs_model.n_u = 2;
    abs_model.f = [p, offset](const Eigen::Ref<const Vector>& X, const Eigen::Ref<const Vector>& U,
                              Eigen::Ref<Vector> dX) {
        cstr_absolute_rhs(p, X, U, dX);
        dX -= offset;
    };
    abs_model.input_box = {p.u_lower + p.U_s, p.u_upper + p.U_s};
    abs_model.X_s = Vector::Zero(2);
    abs_model.U_s = Vector::Zero(2);

    const NonlinearModel dev = make_cstr();
    const Vector x0 = vec({0.05, -0.02});
    PiecewiseConstantInput u{0.0, 1.0, {vec({0.1, -0.05}), vec({-0.2, 0.1}), vec({0.0, 0.3})}};
    PiecewiseConstantInput U = u;
    for (auto& mv : U.moves) mv += p.U_s;
    const auto a = integrate(abs_model, x0 + p.X_s, U, 0.0, 3.0);
    const auto d = integrate(dev, x0, u, 0.0, 3.0);
    ASSERT_EQ(a.states.size(), d.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        EXPECT_LE((a.states[k] - p.X_s - d.states[k]).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Integrate, DivergenceReportsTime) {
    NonlinearModel m = decay_model();
    m.f = [](const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> dx) {
        dx(0) = x(0) * x(0);
    };
    try {
        integrate(m, vec({10.0}), PiecewiseConstantInput::constant(vec({0.0})), 0.0, 5.0);
        FAIL() << "expected divergence";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("t="), std::string::npos);
    }
}

TEST(PiecewiseInput, HoldsLastMove) {
    PiecewiseConstantInput u{0.0, 1.0, {vec({1.0}), vec({2.0})}};
    EXPECT_EQ(u.at(0.5)(0), 1.0);
    EXPECT_EQ(u.at(1.0)(0), 2.0);
    EXPECT_EQ(u.at(7.0)(0), 2.0);
}
