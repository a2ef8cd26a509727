#pragma once

#include <Eigen/Dense>
#include <array>

#include "coltrack/geometry.hpp"

namespace coltrack::sen {

/// Position normalization applied to scope/colon coordinates before they
/// enter the network. Stored in the model metadata so inference is
/// self-contained.
struct Normalization {
  Point3 center;       // subtracted from every position
  double scale = 1.0;  // mm; divides every centered position
};

/// Per-timestep network input built from one scope shape:
///   A: N x 6, row n = normalized position of point n ++ its direction
///   P: N x N, centered positional Gram matrix, scaled by 1/scale^2
///   D: N x N, directional Gram matrix (unit diagonal)
struct SenFeature {
  Eigen::MatrixXd A;
  Eigen::MatrixXd P;
  Eigen::MatrixXd D;
};

SenFeature build_feature(const ColonoscopeShape& shape, const Normalization& norm);

/// The three feature planes zero-padded to a common N x max(N, 6) canvas,
/// ready to be stacked as convolution input channels.
std::array<Eigen::MatrixXd, 3> stack_feature(const SenFeature& feature);

}  // namespace coltrack::sen
