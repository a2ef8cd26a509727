#include "coltrack/registration.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "coltrack/errors.hpp"

namespace coltrack {

RigidTransform procrustes(const std::vector<Point3>& src,
                          const std::vector<Point3>& dst) {
  if (src.size() != dst.size()) {
    throw_invalid_input("procrustes: point lists differ in length");
  }
  if (src.size() < 3) {
    throw_invalid_input("procrustes: needs at least 3 correspondences");
  }
  const double n = static_cast<double>(src.size());

  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean += to_eigen(src[i]);
    dst_mean += to_eigen(dst[i]);
  }
  src_mean /= n;
  dst_mean /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cov += (to_eigen(dst[i]) - dst_mean) * (to_eigen(src[i]) - src_mean).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sing = svd.singularValues();
  // A configuration with fewer than two independent directions leaves the
  // rotation under-determined.
  if (sing(1) <= 1e-12 * std::max(sing(0), 1.0)) {
    throw_invalid_input("procrustes: rank-deficient (collinear or coincident) points");
  }

  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }

  RigidTransform out;
  out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  out.translation = dst_mean - out.rotation * src_mean;
  return out;
}

namespace {

double rms_residual(const std::vector<double>& dist2, const std::vector<std::size_t>& kept) {
  double sum = 0.0;
  for (std::size_t i : kept) sum += dist2[i];
  return std::sqrt(sum / static_cast<double>(kept.size()));
}

}  // namespace

IcpResult icp(const std::vector<Point3>& src, const std::vector<Point3>& target,
              const IcpParams& params, const RigidTransform& initial) {
  if (src.empty()) throw_invalid_input("icp: empty source point set");
  if (target.size() < 3) throw_invalid_input("icp: target needs at least 3 points");
  if (params.max_iterations < 1) throw_invalid_input("icp: max_iterations must be >= 1");
  if (params.convergence_tol <= 0.0) throw_invalid_input("icp: convergence_tol must be > 0");
  if (params.trim_fraction < 0.0 || params.trim_fraction >= 1.0) {
    throw_invalid_input("icp: trim_fraction must be in [0, 1)");
  }

  const std::size_t n = src.size();
  const std::size_t kept_count = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil((1.0 - params.trim_fraction) * n)));

  IcpResult result;
  result.transform = initial;

  std::vector<Point3> moved(n);
  std::vector<std::size_t> corr(n);
  std::vector<double> dist2(n);
  std::vector<std::size_t> order(n);

  auto update_correspondences = [&] {
    std::set<std::size_t> distinct;
    for (std::size_t i = 0; i < n; ++i) {
      moved[i] = result.transform.apply(src[i]);
      const NearestResult nr = nearest_index(moved[i], target);
      corr[i] = nr.index;
      dist2[i] = nr.distance * nr.distance;
      distinct.insert(nr.index);
    }
    if (distinct.size() == 1) {
      throw Error(ErrorCategory::DegenerateRegistration,
                  "icp: all source points correspond to a single target point");
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (kept_count < n) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return dist2[a] < dist2[b]; });
      order.resize(kept_count);
    }
  };

  update_correspondences();
  double residual = rms_residual(dist2, order);
  result.residual_history.push_back(residual);

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    std::vector<Point3> kept_src(order.size());
    std::vector<Point3> kept_dst(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      kept_src[k] = src[order[k]];
      kept_dst[k] = target[corr[order[k]]];
    }
    result.transform = procrustes(kept_src, kept_dst);
    result.iterations_used = iter + 1;

    update_correspondences();
    const double next = rms_residual(dist2, order);
    result.residual_history.push_back(next);
    const double change = std::abs(residual - next);
    residual = next;
    if (change < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  result.mean_residual = residual;
  return result;
}

}  // namespace coltrack
