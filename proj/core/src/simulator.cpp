#include "coltrack/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "coltrack/errors.hpp"
#include "coltrack/rng.hpp"

namespace coltrack {
namespace {

double smoothstep01(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Anatomical template, cecum -> anus. Jittered and rescaled per seed.
constexpr std::array<Point3, 14> kTemplate = {{
    {-280.0, -320.0, 30.0},  // cecum pole
    {-290.0, -240.0, 10.0},
    {-300.0, -60.0, 0.0},    // ascending mid
    {-280.0, 120.0, 40.0},   // hepatic flexure
    {-120.0, 160.0, 80.0},
    {0.0, 120.0, 90.0},      // transverse mid
    {120.0, 160.0, 80.0},
    {280.0, 180.0, 30.0},    // splenic flexure
    {300.0, -40.0, 0.0},     // descending mid
    {280.0, -220.0, 10.0},
    {120.0, -300.0, 60.0},   // sigmoid loop
    {40.0, -260.0, 30.0},
    {10.0, -300.0, 15.0},    // rectum
    {0.0, -340.0, 0.0},      // anus
}};

// Segment boundaries as fixed fractions of total insertion depth (from the
// anus). Matching the template geometry approximately; the labels are
// definitional for the synthetic phantom.
struct SegmentFraction {
  const char* label;
  double lo;
  double hi;
};
constexpr std::array<SegmentFraction, 8> kSegmentFractions = {{
    {"cecum", 0.945, 1.0},
    {"ascending", 0.745, 0.945},
    {"hepatic_flexure", 0.700, 0.745},
    {"transverse", 0.430, 0.700},
    {"splenic_flexure", 0.385, 0.430},
    {"descending", 0.210, 0.385},
    {"sigmoid", 0.055, 0.210},
    {"rectum", 0.0, 0.055},
}};

Point3 catmull_rom(const Point3& p0, const Point3& p1, const Point3& p2,
                   const Point3& p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  auto comp = [&](double a0, double a1, double a2, double a3) {
    return 0.5 * (2.0 * a1 + (-a0 + a2) * t +
                  (2.0 * a0 - 5.0 * a1 + 4.0 * a2 - a3) * t2 +
                  (-a0 + 3.0 * a1 - 3.0 * a2 + a3) * t3);
  };
  return {comp(p0.x, p1.x, p2.x, p3.x), comp(p0.y, p1.y, p2.y, p3.y),
          comp(p0.z, p1.z, p2.z, p3.z)};
}

/// Arclength lookup over a polyline stored cecum -> anus. `cum` runs from 0
/// at the cecum to total at the anus; insertion depth s = total - cum.
class ArcIndex {
 public:
  explicit ArcIndex(const std::vector<Point3>& points) : points_(points) {
    cum_.resize(points.size());
    cum_[0] = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      cum_[i] = cum_[i - 1] + distance(points[i - 1], points[i]);
  }

  double total() const { return cum_.back(); }

  Point3 at_cum(double c) const {
    c = std::clamp(c, 0.0, total());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), c);
    std::size_t j = it == cum_.end() ? cum_.size() - 1
                                     : static_cast<std::size_t>(it - cum_.begin());
    if (j == 0) j = 1;
    const double seg = cum_[j] - cum_[j - 1];
    const double f = seg > 0.0 ? (c - cum_[j - 1]) / seg : 0.0;
    return points_[j - 1] + (points_[j] - points_[j - 1]) * f;
  }

  Point3 at_depth(double s) const { return at_cum(total() - s); }

  /// Unit tangent pointing toward the cecum (increasing insertion depth).
  UnitVec3 tangent_at_depth(double s) const {
    const double c = std::clamp(total() - s, 0.0, total());
    const double h = 2.0;
    const Point3 a = at_cum(c - h);
    const Point3 b = at_cum(c + h);
    return UnitVec3::from(a - b);
  }

 private:
  const std::vector<Point3>& points_;
  std::vector<double> cum_;
};

double segment_distance(double s, const ColonSegmentInterval& seg) {
  if (s < seg.s_begin) return seg.s_begin - s;
  if (s > seg.s_end) return s - seg.s_end;
  return 0.0;
}

/// Spatial amplitude field: each segment's amplitude, extended across
/// boundaries with slope amplitude_ramp_per_mm so the field is continuous
/// and never exceeds the owning segment's amplitude.
double amplitude_at(const ColonModel& model, const DeformationParams& params,
                    double s) {
  double a = std::numeric_limits<double>::infinity();
  for (const auto& seg : model.segments)
    a = std::min(a, params.amplitude(seg.label) +
                        params.amplitude_ramp_per_mm * segment_distance(s, seg));
  return a;
}

/// Tip coupling: full deformation wherever the shaft lies (s <= tip) and up
/// to release_hold_mm ahead of the tip, fading to zero over release_ramp_mm.
double tip_weight(const DeformationParams& params, double tip_s, double s) {
  const double ahead = s - tip_s - params.release_hold_mm;
  if (ahead <= 0.0) return 1.0;
  return 1.0 - smoothstep01(ahead / params.release_ramp_mm);
}

/// Sigmoid/rectum membership for the stochastic drift share, smoothed over
/// 60 mm past the sigmoid's deep end.
double drift_membership(const ColonModel& model, double s) {
  double sigmoid_end = 0.0;
  for (const auto& seg : model.segments)
    if (seg.label == "sigmoid") sigmoid_end = seg.s_end;
  if (s <= sigmoid_end) return 1.0;
  return 1.0 - smoothstep01((s - sigmoid_end) / 60.0);
}

UnitVec3 drift_direction(double s) {
  return UnitVec3::from(
      Point3{0.15 * std::cos(s / 90.0), 0.15 * std::sin(s / 130.0), 1.0});
}

/// Seeded random-walk drift state in [-1, 1]; pure in (seed, time_index).
double drift_value(const DeformationParams& params, int time_index) {
  Rng rng(params.noise_seed);
  double eta = 0.0;
  for (int k = 0; k < time_index; ++k)
    eta = std::clamp(eta + params.drift_step * rng.normal(), -1.0, 1.0);
  return eta;
}

Point3 displacement_impl(const ColonModel& model, const ArcIndex& arc,
                         const DeformationParams& params, double s,
                         double tip_s, double eta) {
  const double a = amplitude_at(model, params, s);
  if (a <= 0.0) return {0.0, 0.0, 0.0};
  const double w =
      tip_weight(params, tip_s, s) *
      smoothstep01(params.anus_fix_mm > 0.0 ? s / params.anus_fix_mm : 1.0);
  if (w <= 0.0) return {0.0, 0.0, 0.0};
  const double rho = params.drift_fraction * drift_membership(model, s);
  const Point3 tangent = arc.tangent_at_depth(s).as_point();
  const Point3 drift = drift_direction(s).as_point();
  const Point3 dir = tangent * (1.0 - rho) + drift * (rho * eta);
  return dir * (a * w);
}

void validate_model(const ColonModel& model) {
  if (model.centerline.size() < 2)
    throw_invalid_input("colon model centerline needs at least 2 points");
  if (model.segments.empty())
    throw_invalid_input("colon model has no segments");
  if (!(model.total_length > 0.0))
    throw_invalid_input("colon model total length must be positive");
}

}  // namespace

double DeformationParams::amplitude(const std::string& segment_label) const {
  if (segment_label == "cecum") return cecum;
  if (segment_label == "ascending") return ascending;
  if (segment_label == "hepatic_flexure") return hepatic_flexure;
  if (segment_label == "transverse") return transverse;
  if (segment_label == "splenic_flexure") return splenic_flexure;
  if (segment_label == "descending") return descending;
  if (segment_label == "sigmoid") return sigmoid;
  if (segment_label == "rectum") return rectum;
  throw_invalid_input("unknown colon segment label '" + segment_label + "'");
}

ColonModel generate_colon(std::uint64_t seed) {
  Rng rng(seed);

  std::array<Point3, kTemplate.size()> control = kTemplate;
  for (auto& p : control) {
    p.x += rng.uniform(-8.0, 8.0);
    p.y += rng.uniform(-8.0, 8.0);
    p.z += rng.uniform(-8.0, 8.0);
  }
  const double target = 1480.0 * (1.0 + 0.04 * rng.uniform(-1.0, 1.0));

  // Clamped Catmull-Rom through the control points, 60 samples per span.
  std::vector<Point3> raw;
  const int spans = static_cast<int>(control.size()) - 1;
  raw.reserve(static_cast<std::size_t>(spans) * 60 + 1);
  for (int i = 0; i < spans; ++i) {
    const Point3& p0 = control[static_cast<std::size_t>(std::max(i - 1, 0))];
    const Point3& p1 = control[static_cast<std::size_t>(i)];
    const Point3& p2 = control[static_cast<std::size_t>(i + 1)];
    const Point3& p3 =
        control[static_cast<std::size_t>(std::min(i + 2, spans))];
    for (int k = 0; k < 60; ++k)
      raw.push_back(catmull_rom(p0, p1, p2, p3, k / 60.0));
  }
  raw.push_back(control.back());

  const double scale = target / arclength(raw);
  for (auto& p : raw) p = p * scale;

  ColonModel model;
  const int npts = std::max(2, static_cast<int>(std::llround(target / 2.0)));
  model.centerline = resample_uniform(raw, npts);
  model.total_length = arclength(model.centerline);

  for (const auto& f : kSegmentFractions)
    model.segments.push_back(
        {f.label, f.lo * model.total_length, f.hi * model.total_length});

  const ArcIndex arc(model.centerline);
  auto landmark = [&](const char* label, double depth_fraction) {
    model.landmarks.push_back(
        {label, arc.at_depth(depth_fraction * model.total_length)});
  };
  landmark("cecum_pole", 1.0);
  landmark("hepatic_flexure", 0.7225);
  landmark("splenic_flexure", 0.4075);
  landmark("sigmoid_takeoff", 0.21);
  landmark("anus", 0.0);

  model.rest_shape.points = resample_uniform(model.centerline, 12);
  return model;
}

Point3 displacement_at(const ColonModel& model, double s, double tip_arclength,
                       const DeformationParams& params, int time_index) {
  validate_model(model);
  if (s < 0.0 || s > model.total_length)
    throw_invalid_input("arclength " + std::to_string(s) +
                        " outside [0, " + std::to_string(model.total_length) + "]");
  if (tip_arclength < 0.0 || tip_arclength > model.total_length)
    throw_invalid_input("tip arclength " + std::to_string(tip_arclength) +
                        " outside [0, " + std::to_string(model.total_length) + "]");
  if (time_index < 0) throw_invalid_input("time_index must be non-negative");
  const ArcIndex arc(model.centerline);
  return displacement_impl(model, arc, params, s, tip_arclength,
                           drift_value(params, time_index));
}

ColonShape deform_colon(const ColonModel& model, double tip_arclength,
                        const DeformationParams& params, int time_index) {
  validate_model(model);
  if (tip_arclength < 0.0 || tip_arclength > model.total_length)
    throw_invalid_input("tip arclength " + std::to_string(tip_arclength) +
                        " outside [0, " + std::to_string(model.total_length) + "]");
  if (time_index < 0) throw_invalid_input("time_index must be non-negative");
  if (model.rest_shape.points.size() < 2)
    throw_invalid_input("colon model rest shape is missing");

  const ArcIndex arc(model.centerline);
  const double eta = drift_value(params, time_index);
  const auto m = model.rest_shape.points.size();

  ColonShape deformed;
  deformed.points.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = model.total_length *
                     (static_cast<double>(m - 1 - i) / static_cast<double>(m - 1));
    deformed.points.push_back(
        model.rest_shape.points[i] +
        displacement_impl(model, arc, params, s, tip_arclength, eta));
  }
  return deformed;
}

MarkerSet place_markers(const ColonModel& model) {
  validate_model(model);
  // Fixed insertion-depth fractions; segment boundaries are fixed fractions
  // too, so the assignments below hold for every seed.
  constexpr std::array<double, 12> kFractions = {
      0.0450,  // rectum
      0.1200,  // sigmoid
      0.1364,  // sigmoid
      0.2897,  // descending
      0.4000,  // splenic flexure
      0.4715,  // transverse
      0.5625,  // transverse
      0.6534,  // transverse
      0.7374,  // hepatic flexure
      0.8352,  // ascending
      0.9261,  // ascending
      0.9700,  // cecum
  };

  const ArcIndex arc(model.centerline);
  MarkerSet set;
  set.markers.reserve(kFractions.size());
  for (std::size_t i = 0; i < kFractions.size(); ++i) {
    const double s = kFractions[i] * model.total_length;
    const Point3 on_curve = arc.at_depth(s);
    const Point3 tangent = arc.tangent_at_depth(s).as_point();

    // Radial direction: a fixed reference axis projected off the tangent,
    // with a fallback when they are nearly parallel.
    Point3 radial{0.36, 0.48, 0.80};
    Point3 perp = radial - tangent * radial.dot(tangent);
    if (perp.norm() < 0.2) {
      radial = {1.0, 0.0, 0.0};
      perp = radial - tangent * radial.dot(tangent);
    }
    perp = perp * (1.0 / perp.norm());

    Marker marker;
    marker.label = i + 1 < 10 ? "M0" + std::to_string(i + 1)
                              : "M" + std::to_string(i + 1);
    marker.arclength = s;
    marker.position = on_curve + perp * 10.0;
    for (const auto& seg : model.segments)
      if (s >= seg.s_begin && s <= seg.s_end) {
        marker.segment = seg.label;
        break;
      }
    set.markers.push_back(std::move(marker));
  }
  return set;
}

InsertionSequence simulate_retraction(const ColonModel& model,
                                      const DeformationParams& params,
                                      int frame_count, double noise_mm,
                                      std::uint64_t seed) {
  validate_model(model);
  constexpr int kWindow = 20;  // SEN tracking window
  if (frame_count < kWindow)
    throw_invalid_input("frame_count " + std::to_string(frame_count) +
                        " is below the tracking window of " +
                        std::to_string(kWindow));
  if (noise_mm < 0.0) throw_invalid_input("noise_mm must be non-negative");

  Rng master(seed);
  Rng schedule_rng(master.fork(0));
  Rng point_noise(master.fork(1));
  Rng dir_noise(master.fork(2));

  // Monotone retraction schedule: strictly positive seeded steps normalized
  // so the tip starts exactly at total_length and ends exactly at 0.
  std::vector<double> tip_schedule(static_cast<std::size_t>(frame_count));
  {
    std::vector<double> cum(static_cast<std::size_t>(frame_count), 0.0);
    for (int k = 1; k < frame_count; ++k)
      cum[static_cast<std::size_t>(k)] =
          cum[static_cast<std::size_t>(k - 1)] + schedule_rng.uniform(0.4, 1.6);
    const double last = cum.back();
    tip_schedule[0] = model.total_length;
    for (int k = 1; k < frame_count; ++k)
      tip_schedule[static_cast<std::size_t>(k)] =
          model.total_length * (1.0 - cum[static_cast<std::size_t>(k)] / last);
  }

  const ArcIndex rest_arc(model.centerline);
  const std::size_t nverts = model.centerline.size();
  // Material cum coordinates (from the cecum) of the stored vertices.
  std::vector<double> material_cum(nverts);
  material_cum[0] = 0.0;
  for (std::size_t j = 1; j < nverts; ++j)
    material_cum[j] = material_cum[j - 1] +
                      distance(model.centerline[j - 1], model.centerline[j]);

  constexpr std::array<double, 6> kStations = {0.0, 60.0, 120.0, 180.0, 240.0, 300.0};

  InsertionSequence sequence;
  sequence.meta = {seed, noise_mm, frame_count};
  sequence.markers = place_markers(model).markers;
  sequence.frames.reserve(static_cast<std::size_t>(frame_count));

  std::vector<Point3> deformed(nverts);
  std::vector<double> dcum(nverts);

  for (int t = 0; t < frame_count; ++t) {
    const double tip_s = tip_schedule[static_cast<std::size_t>(t)];
    const double eta = drift_value(params, t);

    for (std::size_t j = 0; j < nverts; ++j) {
      const double s = model.total_length - material_cum[j];
      deformed[j] = model.centerline[j] +
                    displacement_impl(model, rest_arc, params,
                                      std::clamp(s, 0.0, model.total_length),
                                      tip_s, eta);
    }
    dcum[0] = 0.0;
    for (std::size_t j = 1; j < nverts; ++j)
      dcum[j] = dcum[j - 1] + distance(deformed[j - 1], deformed[j]);

    // World position along the deformed shape at a given deformed-arclength
    // coordinate, continuing straight out of the anus beyond the end.
    const Point3 exit_dir = (deformed[nverts - 1] - deformed[nverts - 2]) *
                            (1.0 / distance(deformed[nverts - 1], deformed[nverts - 2]));
    auto at_deformed_arc = [&](double a) -> Point3 {
      if (a <= 0.0) return deformed[0];
      if (a >= dcum.back())
        return deformed[nverts - 1] + exit_dir * (a - dcum.back());
      const auto it = std::upper_bound(dcum.begin(), dcum.end(), a);
      std::size_t j = static_cast<std::size_t>(it - dcum.begin());
      if (j == 0) j = 1;
      const double seg = dcum[j] - dcum[j - 1];
      const double f = seg > 0.0 ? (a - dcum[j - 1]) / seg : 0.0;
      return deformed[j - 1] + (deformed[j] - deformed[j - 1]) * f;
    };

    // Tip: material point at depth tip_s, located on the deformed polyline.
    const double tip_material = model.total_length - tip_s;
    const auto it = std::upper_bound(material_cum.begin(), material_cum.end(),
                                     tip_material);
    std::size_t j = it == material_cum.end()
                        ? nverts - 1
                        : static_cast<std::size_t>(it - material_cum.begin());
    if (j == 0) j = 1;
    const double mseg = material_cum[j] - material_cum[j - 1];
    const double mf = mseg > 0.0 ? (tip_material - material_cum[j - 1]) / mseg : 0.0;
    const double tip_arc = dcum[j - 1] + mf * (dcum[j] - dcum[j - 1]);

    ColonoscopeShape scope;
    scope.points.reserve(kStations.size());
    scope.directions.reserve(kStations.size());
    for (const double station : kStations) {
      const double a = tip_arc + station;  // toward the anus and beyond
      Point3 p = at_deformed_arc(a);
      // Central difference toward the tip (decreasing deformed arc).
      const double h = 2.0;
      Point3 d = at_deformed_arc(std::max(a - h, 0.0)) - at_deformed_arc(a + h);

      const Point3 pn{point_noise.normal(), point_noise.normal(),
                      point_noise.normal()};
      p += pn * noise_mm;
      const Point3 dn{dir_noise.normal(), dir_noise.normal(), dir_noise.normal()};
      d += dn * (0.01 * noise_mm * d.norm());

      scope.points.push_back(p);
      scope.directions.push_back(UnitVec3::from(d));
    }

    SequenceFrame frame;
    frame.scope = std::move(scope);
    frame.colon_truth = deform_colon(model, tip_s, params, t);
    frame.tip_arclength = tip_s;
    frame.time_index = t;
    sequence.frames.push_back(std::move(frame));
  }
  return sequence;
}

}  // namespace coltrack
