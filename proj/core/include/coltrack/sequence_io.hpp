#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coltrack/geometry.hpp"
#include "coltrack/simulator.hpp"

namespace coltrack {

/// FNV-1a 64-bit digest, lowercase hex. Used for config/colon digests.
std::string fnv1a_hex(const std::string& data);

/// Digest of the model's canonical JSON serialization.
std::string colon_model_digest(const ColonModel& model);

void write_colon_model(const std::string& path, const ColonModel& model);
ColonModel read_colon_model(const std::string& path);

void write_markers(const std::string& path, const MarkerSet& markers,
                   const std::string& colon_digest);
struct StoredMarkers {
  MarkerSet markers;
  std::string colon_digest;
};
StoredMarkers read_markers(const std::string& path);

/// Sequence files are JSONL: a header line followed by one frame per line
/// {"t", "scope": {"points", "dirs"}, "colon", "tip_s"}. Scope data is
/// stored in the EM sensor frame, colon truth and the sensor-side landmark
/// positions in the Kinect frame; consumers recover the frames via ICP
/// (scope) and landmark Procrustes (colon).
struct LandmarkPair {
  std::string label;
  Point3 ct;      // CT/world coordinates
  Point3 sensor;  // Kinect frame
};

struct SequenceHeader {
  int version = 1;
  std::string config_digest;
  std::string colon_digest;
  int n = 0;
  int m = 0;
  int frame_count = 0;
  double noise_mm = 0.0;
  std::uint64_t seed = 0;
  double total_length = 0.0;
  std::vector<Marker> markers;          // CT coordinates
  std::vector<LandmarkPair> landmarks;
};

struct StoredFrame {
  ColonoscopeShape scope;  // EM frame
  ColonShape colon;        // Kinect frame
  double tip_arclength = 0.0;
  int time_index = 0;
};

struct StoredSequence {
  SequenceHeader header;
  std::vector<StoredFrame> frames;
};

void write_sequence(const std::string& path, const InsertionSequence& sequence,
                    const ColonModel& model, const RigidTransform& em_offset,
                    const RigidTransform& kinect_offset,
                    const std::string& config_digest,
                    const std::string& colon_digest);

StoredSequence read_sequence(const std::string& path);

/// Tip estimate files are JSONL: a header line followed by one record per
/// frame {"t", "index", "pos", "dist"}; "index" is 0-based.
struct TipRecord {
  int time_index = 0;
  int colon_index = 0;
  Point3 position;
  double distance_mm = 0.0;
};

struct EstimatesHeader {
  std::string config_digest;
  std::string colon_digest;
  std::string estimator;
  std::string sequence_file;
  int frame_count = 0;
};

struct StoredEstimates {
  EstimatesHeader header;
  std::vector<TipRecord> records;
};

void write_estimates(const std::string& path, const EstimatesHeader& header,
                     const std::vector<TipRecord>& records);
StoredEstimates read_estimates(const std::string& path);

}  // namespace coltrack
