#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qih {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad parameters, malformed config, violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Numerical failure: divergence, singular systems, non-Hurwitz matrices.
class NumericalError : public Error {
public:
    using Error::Error;
};

inline std::string format_vector(const Vector& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(v(i));
    }
    return out + "]";
}

inline double symmetry_defect(const Matrix& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline Matrix symmetrize(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline bool is_spd(const Matrix& m, double sym_tol = 1e-12) {
    if (m.rows() != m.cols() || m.rows() == 0) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (symmetry_defect(m) > sym_tol * scale) return false;
    return min_eigenvalue(m) > 0.0;
}

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues();
}

// Largest real part among the eigenvalues of a.
inline double spectral_abscissa(const Matrix& a) {
    return eigenvalues(a).real().maxCoeff();
}

inline bool is_hurwitz(const Matrix& a) {
    return spectral_abscissa(a) < 0.0;
}

inline double spectral_norm(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace qih
