#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isocycle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;

/// Bad or inconsistent user input (files, matrices, exponents, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A group element or path came too close to the discriminant locus.
struct DiscriminantError : std::runtime_error {
    explicit DiscriminantError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Cycle transport failed (clearance could not be restored).
struct IsotopyError : std::runtime_error {
    explicit IsotopyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Quadrature hit a pole or could not produce a value.
struct QuadratureError : std::runtime_error {
    explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bilinear (not Hermitian) quadratic form x A x^T on row vectors.
inline Complex bilinear(const CMatrix& a, const CVector& x) {
    return (x.transpose() * a * x)(0, 0);
}

}  // namespace isocycle
