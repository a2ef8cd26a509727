#pragma once

#include <cstdint>
#include <string>

#include "coltrack/geometry.hpp"
#include "coltrack/registration.hpp"
#include "coltrack/sen/train.hpp"
#include "coltrack/simulator.hpp"

namespace coltrack::cli {

/// Axis-angle sensor mounting offset, as written in config files.
struct OffsetSpec {
  Point3 axis;
  double angle_deg = 0.0;
  Point3 translation;

  RigidTransform transform() const;
};

/// Everything the pipeline needs, in one file. Every CLI flag mirrors one of
/// these keys and flags win over the file. All randomness flows from `seed`
/// and `colon_seed`; per-run stream seeds are forked from `seed`.
struct PipelineConfig {
  std::string out_dir = "out";
  std::uint64_t seed = 739241;
  std::uint64_t colon_seed = 7001;

  int train_runs = 10;
  int eval_runs = 5;
  int frame_count = 240;
  double noise_mm = 1.0;
  DeformationParams deformation;

  OffsetSpec em_offset{{0.2, 0.5, 0.8}, 5.0, {15.0, -10.0, 8.0}};
  OffsetSpec kinect_offset{{0.7, -0.3, 0.6}, 9.0, {-40.0, 25.0, 60.0}};

  sen::SenArch arch;
  sen::TrainConfig train;  // seed and digests are derived, not configured
  IcpParams icp;
  double icp_target_step_mm = 5.0;

  std::string estimator = "sen";  // sen | rigid | oracle
  bool reregister = false;
};

PipelineConfig default_config();

/// Reads a config JSON file. Keys are optional (defaults apply); unknown
/// keys are configuration errors so typos cannot silently revert a value.
PipelineConfig load_config(const std::string& path);

/// Full config as pretty JSON (the shape load_config accepts).
std::string config_json(const PipelineConfig& config);

/// Digest over the data-defining fields: everything except out_dir and the
/// tracker section, so switching the estimator can reuse simulated data and
/// checkpoints while any change to data or training invalidates them.
std::string config_digest(const PipelineConfig& config);

}  // namespace coltrack::cli
