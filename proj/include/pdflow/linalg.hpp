#pragma once

#include <Eigen/Dense>

namespace pdflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Largest singular value; 0 for empty matrices.
double spectral_norm(const Mat& m);

}  // namespace pdflow
