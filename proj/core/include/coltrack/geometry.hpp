#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

namespace coltrack {

/// 3-D point, millimeters. Also used as a plain vector where convenient.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Point3& operator+=(const Point3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }

  double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
  Point3 cross(const Point3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Point3 normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
  }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

inline Eigen::Vector3d to_eigen(const Point3& p) { return {p.x, p.y, p.z}; }
inline Point3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

/// Direction along the scope; unit norm within 1e-9.
struct UnitVec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  static UnitVec3 from(const Point3& v) {
    const Point3 n = v.normalized();
    return {n.x, n.y, n.z};
  }

  Point3 as_point() const { return {x, y, z}; }
  double dot(const UnitVec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Measured scope shape: N points with tangent directions, points[0] is the
/// tip and the list runs tip -> body.
struct ColonoscopeShape {
  std::vector<Point3> points;
  std::vector<UnitVec3> directions;

  std::size_t size() const { return points.size(); }
  const Point3& tip() const { return points.front(); }
};

/// Colon centerline shape: M ordered points, cecum -> anus.
struct ColonShape {
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
};

/// Throws invalid-input if the shape violates its invariants.
void validate(const ColonoscopeShape& shape);
void validate(const ColonShape& shape);

/// Proper rigid motion: p -> R p + t, det(R) = +1.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const {
    return from_eigen(rotation * to_eigen(p) + translation);
  }
  UnitVec3 apply(const UnitVec3& d) const {
    const Eigen::Vector3d r = rotation * Eigen::Vector3d(d.x, d.y, d.z);
    return {r.x(), r.y(), r.z()};
  }

  /// this ∘ other: apply `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  /// Orthogonal within tol and det = +1 within tol.
  bool is_rigid(double tol = 1e-9) const;
};

/// Build a rotation from axis-angle (axis need not be unit length).
RigidTransform axis_angle_transform(const Point3& axis, double angle_rad,
                                    const Point3& translation = {0, 0, 0});

/// Total polyline length, mm. Requires >= 2 points.
double arclength(const std::vector<Point3>& polyline);

/// `count` points at equal arclength spacing along the polyline (linear
/// interpolation within segments). Endpoints are preserved.
std::vector<Point3> resample_uniform(const std::vector<Point3>& polyline,
                                     std::size_t count);

struct NearestResult {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Index of the closest point (ties -> smallest index). Requires non-empty.
NearestResult nearest_index(const Point3& query, const std::vector<Point3>& points);

ColonoscopeShape apply_transform(const RigidTransform& t, const ColonoscopeShape& shape);
ColonShape apply_transform(const RigidTransform& t, const ColonShape& shape);

struct PolylineProjection {
  std::size_t segment = 0;   // segment [segment, segment+1]
  double t = 0.0;            // fraction within the segment
  double distance = 0.0;     // mm to the projected point
  double arclength = 0.0;    // mm from polyline start to the projected point
  Point3 point;              // the projected point itself
};

/// Closest point on the polyline (not just the closest vertex).
PolylineProjection project_to_polyline(const Point3& query,
                                       const std::vector<Point3>& polyline);

}  // namespace coltrack
