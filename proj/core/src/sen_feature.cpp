#include "coltrack/sen/feature.hpp"

#include "coltrack/errors.hpp"

namespace coltrack::sen {

SenFeature build_feature(const ColonoscopeShape& shape, const Normalization& norm) {
  validate(shape);
  if (norm.scale <= 0.0) throw_invalid_input("build_feature: normalization scale must be > 0");

  const auto n = static_cast<Eigen::Index>(shape.points.size());
  SenFeature f;
  f.A.resize(n, 6);
  f.P.resize(n, n);
  f.D.resize(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Point3 p = (shape.points[i] - norm.center) * (1.0 / norm.scale);
    const UnitVec3& d = shape.directions[i];
    f.A(i, 0) = p.x;
    f.A(i, 1) = p.y;
    f.A(i, 2) = p.z;
    f.A(i, 3) = d.x;
    f.A(i, 4) = d.y;
    f.A(i, 5) = d.z;
  }

  Point3 centroid{0, 0, 0};
  for (const auto& p : shape.points) centroid += p;
  centroid = centroid * (1.0 / static_cast<double>(n));

  const double inv_scale2 = 1.0 / (norm.scale * norm.scale);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point3 ci = shape.points[i] - centroid;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Point3 cj = shape.points[j] - centroid;
      f.P(i, j) = ci.dot(cj) * inv_scale2;
      f.D(i, j) = shape.directions[i].dot(shape.directions[j]);
    }
  }
  return f;
}

std::array<Eigen::MatrixXd, 3> stack_feature(const SenFeature& feature) {
  const Eigen::Index rows = feature.P.rows();
  const Eigen::Index cols = std::max<Eigen::Index>(rows, 6);
  std::array<Eigen::MatrixXd, 3> planes;
  for (auto& p : planes) p = Eigen::MatrixXd::Zero(rows, cols);
  planes[0].block(0, 0, rows, 6) = feature.A;
  planes[1].block(0, 0, rows, feature.P.cols()) = feature.P;
  planes[2].block(0, 0, rows, feature.D.cols()) = feature.D;
  return planes;
}

}  // namespace coltrack::sen
