#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace skillforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

/// Raised for malformed or contradictory configuration input. The CLI maps
/// this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised for filesystem and serialization failures. The CLI maps this to
/// exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace skillforge
