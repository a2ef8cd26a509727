#include "coltrack/geometry.hpp"

#include <algorithm>
#include <limits>

#include "coltrack/errors.hpp"

namespace coltrack {

void validate(const ColonoscopeShape& shape) {
  if (shape.points.size() < 2) {
    throw_invalid_input("colonoscope shape needs at least 2 points");
  }
  if (shape.points.size() != shape.directions.size()) {
    throw_invalid_input("colonoscope shape: points/directions length mismatch");
  }
  for (const auto& p : shape.points) {
    if (!p.finite()) throw_invalid_input("colonoscope shape: non-finite point");
  }
  for (const auto& d : shape.directions) {
    if (std::abs(d.norm() - 1.0) > 1e-9) {
      throw_invalid_input("colonoscope shape: direction is not unit length");
    }
  }
}

void validate(const ColonShape& shape) {
  if (shape.points.size() < 2) {
    throw_invalid_input("colon shape needs at least 2 points");
  }
  for (std::size_t i = 0; i < shape.points.size(); ++i) {
    if (!shape.points[i].finite()) {
      throw_invalid_input("colon shape: non-finite point");
    }
    if (i > 0 && distance(shape.points[i], shape.points[i - 1]) == 0.0) {
      throw_invalid_input("colon shape: consecutive points coincide");
    }
  }
}

bool RigidTransform::is_rigid(double tol) const {
  const Eigen::Matrix3d err =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform axis_angle_transform(const Point3& axis, double angle_rad,
                                    const Point3& translation) {
  RigidTransform t;
  t.rotation =
      Eigen::AngleAxisd(angle_rad, to_eigen(axis).normalized()).toRotationMatrix();
  t.translation = to_eigen(translation);
  return t;
}

double arclength(const std::vector<Point3>& polyline) {
  if (polyline.size() < 2) {
    throw_invalid_input("arclength: polyline needs at least 2 points");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    total += distance(polyline[i], polyline[i - 1]);
  }
  return total;
}

std::vector<Point3> resample_uniform(const std::vector<Point3>& polyline,
                                     std::size_t count) {
  if (count < 2) throw_invalid_input("resample_uniform: count must be >= 2");
  const double total = arclength(polyline);
  if (total <= 0.0) {
    throw_invalid_input("resample_uniform: degenerate zero-length polyline");
  }

  // Cumulative arclength per vertex.
  std::vector<double> cum(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    cum[i] = cum[i - 1] + distance(polyline[i], polyline[i - 1]);
  }

  std::vector<Point3> out;
  out.reserve(count);
  out.push_back(polyline.front());
  std::size_t seg = 0;
  for (std::size_t k = 1; k + 1 < count; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (seg + 2 < polyline.size() && cum[seg + 1] < target) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
    out.push_back(polyline[seg] + (polyline[seg + 1] - polyline[seg]) * t);
  }
  out.push_back(polyline.back());
  return out;
}

NearestResult nearest_index(const Point3& query, const std::vector<Point3>& points) {
  if (points.empty()) throw_invalid_input("nearest_index: empty point list");
  NearestResult best{0, distance(query, points[0])};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = distance(query, points[i]);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

ColonoscopeShape apply_transform(const RigidTransform& t, const ColonoscopeShape& shape) {
  ColonoscopeShape out;
  out.points.reserve(shape.points.size());
  out.directions.reserve(shape.directions.size());
  for (const auto& p : shape.points) out.points.push_back(t.apply(p));
  for (const auto& d : shape.directions) out.directions.push_back(t.apply(d));
  return out;
}

ColonShape apply_transform(const RigidTransform& t, const ColonShape& shape) {
  ColonShape out;
  out.points.reserve(shape.points.size());
  for (const auto& p : shape.points) out.points.push_back(t.apply(p));
  return out;
}

PolylineProjection project_to_polyline(const Point3& query,
                                       const std::vector<Point3>& polyline) {
  if (polyline.size() < 2) {
    throw_invalid_input("project_to_polyline: polyline needs at least 2 points");
  }
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Point3 a = polyline[i];
    const Point3 b = polyline[i + 1];
    const Point3 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (query - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Point3 proj = a + ab * t;
    const double d = distance(query, proj);
    const double seg_len = std::sqrt(len2);
    if (d < best.distance) {
      best = {i, t, d, cum + t * seg_len, proj};
    }
    cum += seg_len;
  }
  return best;
}

}  // namespace coltrack
