#include "coltrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>

#include "coltrack/errors.hpp"

namespace coltrack {
namespace {

using nlohmann::json;

std::string format_mm(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

}  // namespace

std::vector<MarkerError> marker_errors(
    const std::vector<TipEstimate>& estimates,
    const std::vector<double>& truth_tip_arclengths, const MarkerSet& markers) {
  if (estimates.size() != truth_tip_arclengths.size())
    throw_invalid_input("got " + std::to_string(estimates.size()) +
                        " estimates but " +
                        std::to_string(truth_tip_arclengths.size()) +
                        " truth arclengths");
  if (estimates.empty())
    throw_invalid_input("marker_errors needs at least one frame");
  if (markers.markers.empty()) throw_invalid_input("marker set is empty");

  std::vector<MarkerError> out;
  out.reserve(markers.markers.size());
  for (const auto& marker : markers.markers) {
    std::size_t best = 0;
    double best_gap = std::abs(truth_tip_arclengths[0] - marker.arclength);
    for (std::size_t t = 1; t < truth_tip_arclengths.size(); ++t) {
      const double gap = std::abs(truth_tip_arclengths[t] - marker.arclength);
      if (gap < best_gap) {
        best_gap = gap;
        best = t;
      }
    }
    MarkerError e;
    e.label = marker.label;
    e.segment = marker.segment;
    e.frame_of_closest_approach = static_cast<int>(best);
    e.error_mm = distance(estimates[best].position, marker.position);
    out.push_back(std::move(e));
  }
  return out;
}

TrackingReport aggregate(const std::vector<std::vector<MarkerError>>& runs) {
  if (runs.empty()) throw_invalid_input("aggregate needs at least one run");
  const auto& first = runs.front();
  if (first.empty()) throw_invalid_input("runs carry no markers");

  TrackingReport report;
  report.runs = static_cast<int>(runs.size());
  report.markers.reserve(first.size());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (!index.emplace(first[i].label, i).second)
      throw_invalid_input("duplicate marker label '" + first[i].label + "'");
    MarkerStats s;
    s.label = first[i].label;
    s.segment = first[i].segment;
    s.max_mm = -std::numeric_limits<double>::infinity();
    s.min_mm = std::numeric_limits<double>::infinity();
    report.markers.push_back(std::move(s));
  }

  for (const auto& run : runs) {
    if (run.size() != first.size())
      throw_invalid_input("runs cover different marker sets");
    std::vector<bool> seen(first.size(), false);
    for (const auto& e : run) {
      const auto it = index.find(e.label);
      if (it == index.end() || seen[it->second])
        throw_invalid_input("runs cover different marker sets");
      seen[it->second] = true;
      auto& s = report.markers[it->second];
      if (e.segment != s.segment)
        throw_invalid_input("marker '" + e.label +
                            "' has inconsistent segments across runs");
      s.avg_mm += e.error_mm;
      s.max_mm = std::max(s.max_mm, e.error_mm);
      s.min_mm = std::min(s.min_mm, e.error_mm);
    }
  }
  for (auto& s : report.markers) s.avg_mm /= report.runs;
  return report;
}

std::string report_json_string(const TrackingReport& report,
                               const std::string& config_digest) {
  json markers = json::array();
  for (const auto& s : report.markers)
    markers.push_back({{"label", s.label},
                       {"segment", s.segment},
                       {"avg_mm", s.avg_mm},
                       {"max_mm", s.max_mm},
                       {"min_mm", s.min_mm}});
  const json j{{"markers", std::move(markers)},
               {"runs", report.runs},
               {"config_digest", config_digest}};
  return j.dump(2) + "\n";
}

void write_report_json(const std::string& path, const TrackingReport& report,
                       const std::string& config_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open for writing: " + path);
  out << report_json_string(report, config_digest);
  if (!out) throw_io("failed writing report: " + path);
}

StoredReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_io(path + " is not valid JSON (" + e.what() + ")");
  }
  StoredReport stored;
  try {
    stored.config_digest = j.at("config_digest").get<std::string>();
    stored.report.runs = j.at("runs").get<int>();
    for (const auto& e : j.at("markers")) {
      MarkerStats s;
      s.label = e.at("label").get<std::string>();
      s.segment = e.at("segment").get<std::string>();
      s.avg_mm = e.at("avg_mm").get<double>();
      s.max_mm = e.at("max_mm").get<double>();
      s.min_mm = e.at("min_mm").get<double>();
      stored.report.markers.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw_io("report " + path + " is malformed: " + e.what());
  }
  return stored;
}

std::string report_csv_string(const TrackingReport& report) {
  std::ostringstream out;
  out << "label,segment,avg_mm,max_mm,min_mm\n";
  for (const auto& s : report.markers)
    out << s.label << ',' << s.segment << ',' << format_mm(s.avg_mm) << ','
        << format_mm(s.max_mm) << ',' << format_mm(s.min_mm) << '\n';
  return out.str();
}

void write_report_csv(const std::string& path, const TrackingReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open for writing: " + path);
  out << report_csv_string(report);
  if (!out) throw_io("failed writing report: " + path);
}

std::string format_report_table(const TrackingReport& report) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-6s %-18s %10s %10s %10s\n", "marker",
                "segment", "avg_mm", "max_mm", "min_mm");
  out << buf;
  for (const auto& s : report.markers) {
    std::snprintf(buf, sizeof(buf), "%-6s %-18s %10.3f %10.3f %10.3f\n",
                  s.label.c_str(), s.segment.c_str(), s.avg_mm, s.max_mm,
                  s.min_mm);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "runs: %d\n", report.runs);
  out << buf;
  return out.str();
}

}  // namespace coltrack
