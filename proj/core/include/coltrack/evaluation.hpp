#pragma once

#include <string>
#include <vector>

#include "coltrack/simulator.hpp"
#include "coltrack/tracking.hpp"

namespace coltrack {

struct MarkerError {
  std::string label;
  std::string segment;
  double error_mm = 0.0;
  int frame_of_closest_approach = 0;
};

/// Tracking error per marker for one run. The frame of closest approach is
/// the one minimizing |ground-truth tip arclength - marker arclength|
/// (earliest frame on ties); the error is the distance from that frame's
/// TipEstimate.position to the marker.
std::vector<MarkerError> marker_errors(
    const std::vector<TipEstimate>& estimates,
    const std::vector<double>& truth_tip_arclengths, const MarkerSet& markers);

struct MarkerStats {
  std::string label;
  std::string segment;
  double avg_mm = 0.0;
  double max_mm = 0.0;
  double min_mm = 0.0;
};

struct TrackingReport {
  std::vector<MarkerStats> markers;  // order of the first run
  int runs = 0;
};

/// Per-marker average/maximum/minimum across runs. Runs are matched by
/// marker label, so per-run marker order does not matter; every run must
/// cover the same marker set.
TrackingReport aggregate(const std::vector<std::vector<MarkerError>>& runs);

/// Serialized form:
/// {"markers":[{"label","segment","avg_mm","max_mm","min_mm"}],
///  "runs":int,"config_digest":string}
std::string report_json_string(const TrackingReport& report,
                               const std::string& config_digest);
void write_report_json(const std::string& path, const TrackingReport& report,
                       const std::string& config_digest);

struct StoredReport {
  TrackingReport report;
  std::string config_digest;
};
StoredReport read_report(const std::string& path);

/// CSV with header label,segment,avg_mm,max_mm,min_mm.
std::string report_csv_string(const TrackingReport& report);
void write_report_csv(const std::string& path, const TrackingReport& report);

/// Fixed-width per-marker table for terminal output.
std::string format_report_table(const TrackingReport& report);

}  // namespace coltrack
