#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace enlarge {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using RowMatrixXd = RowMatrix<double>;

// Raised when a configuration or precondition is invalid.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The drift rho(x, t) does not exist: the residual variance has reached zero.
class DriftUndefined : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// The integrability classifier refused to build a decomposition.
class Refusal : public std::runtime_error {
public:
    Refusal(const std::string& what, bool undecided)
        : std::runtime_error(what), undecided_(undecided) {}
    bool undecided() const { return undecided_; }

private:
    bool undecided_;
};

// A Stieltjes sum blew past its overflow guard.
class NonIntegrable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace enlarge
