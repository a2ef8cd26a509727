#pragma once

#include <cmath>
#include <vector>

#include "coltrack/errors.hpp"
#include "coltrack/geometry.hpp"
#include "coltrack/rng.hpp"

/// Runs `expr`, expecting a coltrack::Error of the given category.
#define CHECK_COLTRACK_ERROR(expr, cat)                                      \
  do {                                                                       \
    try {                                                                    \
      expr;                                                                  \
      FAIL_CHECK("expected a coltrack::Error from `" #expr "`");             \
    } catch (const coltrack::Error& err_) {                                  \
      CHECK_MESSAGE(err_.category() == coltrack::ErrorCategory::cat,         \
                    "category was ", coltrack::to_string(err_.category()),   \
                    ": ", err_.what());                                      \
    }                                                                        \
  } while (0)

namespace coltrack::testing {

inline Point3 random_point(Rng& rng, double extent = 100.0) {
  return {rng.uniform(-extent, extent), rng.uniform(-extent, extent),
          rng.uniform(-extent, extent)};
}

inline UnitVec3 random_direction(Rng& rng) {
  for (;;) {
    const Point3 v{rng.normal(), rng.normal(), rng.normal()};
    if (v.norm() > 1e-6) return UnitVec3::from(v);
  }
}

inline std::vector<Point3> random_points(Rng& rng, std::size_t count,
                                         double extent = 100.0) {
  std::vector<Point3> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) pts.push_back(random_point(rng, extent));
  return pts;
}

inline RigidTransform random_transform(Rng& rng, double max_angle_rad,
                                       double max_translation) {
  const Point3 axis = random_direction(rng).as_point();
  const double angle = rng.uniform(-max_angle_rad, max_angle_rad);
  const Point3 t{rng.uniform(-max_translation, max_translation),
                 rng.uniform(-max_translation, max_translation),
                 rng.uniform(-max_translation, max_translation)};
  return axis_angle_transform(axis, angle, t);
}

/// Random rigid motion rotating about the centroid of `pts`, so the maximum
/// point displacement stays bounded by the shape extent, not its distance
/// from the origin.
inline RigidTransform random_perturbation_about(Rng& rng,
                                                const std::vector<Point3>& pts,
                                                double max_angle_rad,
                                                double max_translation) {
  Point3 c{0, 0, 0};
  for (const auto& p : pts) c += p;
  c = c * (1.0 / static_cast<double>(pts.size()));
  const RigidTransform rot = random_transform(rng, max_angle_rad, 0.0);
  const Point3 t{rng.uniform(-max_translation, max_translation),
                 rng.uniform(-max_translation, max_translation),
                 rng.uniform(-max_translation, max_translation)};
  RigidTransform out;
  out.rotation = rot.rotation;
  out.translation = to_eigen(c + t) - rot.rotation * to_eigen(c);
  return out;
}

/// A smooth wandering polyline, useful as a stand-in centerline.
inline std::vector<Point3> wiggly_polyline(std::size_t count, double step = 10.0) {
  std::vector<Point3> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = static_cast<double>(i) * step;
    pts.push_back({s, 40.0 * std::sin(s / 90.0), 25.0 * std::cos(s / 140.0)});
  }
  return pts;
}

inline ColonoscopeShape synthetic_scope(Rng& rng, std::size_t n,
                                        double extent = 100.0) {
  ColonoscopeShape shape;
  shape.points = random_points(rng, n, extent);
  for (std::size_t i = 0; i < n; ++i)
    shape.directions.push_back(random_direction(rng));
  return shape;
}

inline double max_pointwise_gap(const std::vector<Point3>& a,
                                const std::vector<Point3>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, distance(a[i], b[i]));
  return worst;
}

}  // namespace coltrack::testing
