#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coltrack/geometry.hpp"

namespace coltrack {

/// Insertion-depth convention used across the project: arclength s is
/// measured from the anus (s = 0) to the cecum (s = total_length), i.e. s is
/// the inserted scope length. The tip retracts from total_length to 0.
struct ColonSegmentInterval {
  std::string label;
  double s_begin = 0.0;  // insertion depth, mm; s_begin < s_end
  double s_end = 0.0;
};

struct ColonLandmark {
  std::string label;
  Point3 position;  // CT/world coordinates
};

struct ColonModel {
  std::vector<Point3> centerline;  // dense polyline, ordered cecum -> anus
  double total_length = 0.0;       // mm
  std::vector<ColonSegmentInterval> segments;  // anatomical order cecum -> rectum
  std::vector<ColonLandmark> landmarks;        // >= 4, for colon registration
  ColonShape rest_shape;                       // resample_uniform(centerline, 12)
};

/// Segment mobility amplitudes in mm plus the coupling that ties
/// displacement to the tip position. The deterministic part of the field is
/// tangential (the scope shaft stretches the colon along itself); the
/// sigmoid/rectum part adds a seeded anterior drift.
struct DeformationParams {
  double cecum = 8.0;
  double ascending = 8.0;
  double hepatic_flexure = 35.0;
  double transverse = 70.0;
  double splenic_flexure = 35.0;
  double descending = 8.0;
  double sigmoid = 80.0;
  double rectum = 35.0;

  double release_hold_mm = 140.0;      // full deformation up to this far ahead of the tip
  double release_ramp_mm = 300.0;      // fade-out band beyond the hold
  double amplitude_ramp_per_mm = 0.4;  // spatial Lipschitz bound on the amplitude field
  double anus_fix_mm = 160.0;          // displacement fades to zero at the anus
  double drift_fraction = 0.35;        // stochastic share in sigmoid/rectum
  double drift_step = 0.08;            // random-walk increment per frame
  std::uint64_t noise_seed = 0;

  double amplitude(const std::string& segment_label) const;
};

struct Marker {
  std::string label;    // M01..M12, ordered by increasing arclength
  std::string segment;  // owning segment label
  Point3 position;      // CT coordinates, 10 mm radially off the centerline
  double arclength = 0.0;  // insertion depth of the attachment point, mm
};

struct MarkerSet {
  std::vector<Marker> markers;
};

struct SequenceFrame {
  ColonoscopeShape scope;   // world coordinates (sensor offsets are I/O concerns)
  ColonShape colon_truth;   // deformed colon, world coordinates
  double tip_arclength = 0.0;  // ground-truth tip insertion depth, mm
  int time_index = 0;
};

struct SequenceMeta {
  std::uint64_t seed = 0;
  double noise_mm = 0.0;
  int frame_count = 0;
};

struct InsertionSequence {
  std::vector<SequenceFrame> frames;
  std::vector<Marker> markers;
  SequenceMeta meta;
};

/// Deterministic synthetic colon: smooth centerline through a fixed
/// anatomical template with seeded jitter, scaled so the total length lands
/// in [1200, 1800] mm. Same seed, same model.
ColonModel generate_colon(std::uint64_t seed);

/// Displacement of the material point at insertion depth s for the given
/// tip position and frame. |result| <= amplitude of the segment owning s.
Point3 displacement_at(const ColonModel& model, double s, double tip_arclength,
                       const DeformationParams& params, int time_index);

/// The 12 rest-shape points displaced by the deformation field.
/// Zero amplitudes reproduce the rest shape exactly.
ColonShape deform_colon(const ColonModel& model, double tip_arclength,
                        const DeformationParams& params, int time_index);

/// Fixed fractional positions spanning all 8 segments, offset 10 mm
/// radially from the centerline. Labels M01..M12 by increasing arclength.
MarkerSet place_markers(const ColonModel& model);

/// Cecum-to-anus retraction: seeded monotone tip schedule from total_length
/// to 0, 6 scope points at 0/60/.../300 mm behind the tip measured along the
/// deformed centerline (continuing straight out of the anus once the scope
/// leaves the body), tangent directions, Gaussian point noise (sigma =
/// noise_mm) and small angular direction noise. frame_count must be >= 20
/// (the tracking window).
InsertionSequence simulate_retraction(const ColonModel& model,
                                      const DeformationParams& params,
                                      int frame_count, double noise_mm,
                                      std::uint64_t seed);

}  // namespace coltrack
