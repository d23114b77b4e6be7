#pragma once

#include <complex>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace speclab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx iu{0.0, 1.0};
inline constexpr double inf = std::numeric_limits<double>::infinity();

// Default relative tolerance for spectral comparisons.
inline constexpr double spectral_rtol = 1e-10;

struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace speclab
