#pragma once
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace diracsim {

using cd = std::complex<double>;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Array shapes of two operands disagree.
struct ShapeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Periodic box too small for the requested horizon.
struct BoxSizeError : Error {
    using Error::Error;
};

// Input carries no information (e.g. all-zero data handed to a fit).
struct DegenerateInputError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

}  // namespace diracsim
