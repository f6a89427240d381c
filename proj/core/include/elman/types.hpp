#pragma once

#include <Eigen/Dense>

namespace elman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace elman
