#pragma once

#include <complex>

#include <Eigen/Dense>

namespace exdyn {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;    // density matrices and general operators
using RealOperator = Eigen::MatrixXd;  // real symmetric model operators

inline constexpr cplx I{0.0, 1.0};

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

inline double hermiticity_error(const Operator& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace exdyn
