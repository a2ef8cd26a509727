#pragma once

#include <cstdint>
#include <vector>

#include "coltrack/geometry.hpp"
#include "coltrack/sen/model.hpp"

namespace coltrack::sen {

/// One recorded movement: scope frames already registered into the colon
/// frame, paired with the per-frame colon truth (m points each).
struct TrainingSequence {
  std::vector<ColonoscopeShape> frames;
  std::vector<std::vector<Point3>> truths;
};

struct TrainingDataset {
  std::vector<TrainingSequence> sequences;
};

struct SenArch {
  int n = 6;
  int m = 12;
  int window = 20;
  int hidden = 72;
  int conv_kernels = 8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double gradient_clip = 5.0;       // global-norm clip; <= 0 disables
  double validation_fraction = 0.15;
  int threads = 0;                  // 0 picks hardware concurrency
  std::string colon_digest;         // recorded into the checkpoint meta
  std::string config_digest;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  SenModel model;  // parameters from the best validation epoch
  std::vector<EpochStats> history;
  int best_epoch = -1;
};

/// Adam over exact window gradients. Deterministic for a fixed dataset,
/// arch, and config: the result does not depend on the thread count.
/// Throws EmptyDataset when no window can be formed, InvalidInput on shape
/// mismatches, TrainingDiverged when a loss stops being finite.
TrainResult train(const TrainingDataset& dataset, const SenArch& arch,
                  const TrainConfig& config);

/// Normalization used by `train`: center is the centroid of every scope and
/// truth point in the dataset, scale the maximum distance from that center.
Normalization dataset_normalization(const TrainingDataset& dataset);

}  // namespace coltrack::sen
