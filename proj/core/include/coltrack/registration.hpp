#pragma once

#include <vector>

#include "coltrack/geometry.hpp"

namespace coltrack {

struct IcpParams {
  int max_iterations = 100;
  double convergence_tol = 1e-6;  // mm, change in residual between iterations
  double trim_fraction = 0.0;     // worst pairs dropped, in [0, 1)
};

struct IcpResult {
  RigidTransform transform;
  double mean_residual = 0.0;  // RMS point distance over kept pairs, mm
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> residual_history;  // residual before + after each step
};

/// Least-squares rigid alignment of index-wise corresponding point sets
/// (cross-covariance SVD, reflections excluded). Requires >= 3 points and a
/// non-degenerate configuration.
RigidTransform procrustes(const std::vector<Point3>& src,
                          const std::vector<Point3>& dst);

/// Point-to-point ICP aligning `src` onto `target`, starting from `initial`.
/// Alternates nearest-point correspondence with a Procrustes update. With
/// trim_fraction > 0 the worst pairs are excluded from each update.
IcpResult icp(const std::vector<Point3>& src, const std::vector<Point3>& target,
              const IcpParams& params = {},
              const RigidTransform& initial = RigidTransform::identity());

}  // namespace coltrack
