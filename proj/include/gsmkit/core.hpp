#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gsmkit {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Vec2 = Eigen::Vector2d;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

namespace constants {
inline constexpr double c0 = 299792458.0;
inline constexpr double mu0 = 1.25663706212e-6;
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);
inline constexpr double eta0 = mu0 * c0;
}  // namespace constants

inline double wavenumber(double frequency_hz) { return 2.0 * pi * frequency_hz / constants::c0; }

// Error taxonomy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (non-positive sizes, non-transverse fields, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Evaluation outside the domain where a quantity is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid geometry or layout.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent run parameters (too few modes, port too coarse, ...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Factorization, eigen-decomposition or iteration failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsmkit
