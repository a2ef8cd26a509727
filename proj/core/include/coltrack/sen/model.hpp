#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "coltrack/sen/feature.hpp"

namespace coltrack::sen {

/// Architecture + normalization metadata. Every weight shape is derivable
/// from this block, which is what checkpoint loading validates against.
struct SenMeta {
  int n = 6;             // scope points per frame
  int m = 12;            // colon points estimated
  int window = 20;       // timesteps per estimate
  int hidden = 72;       // LSTM units
  int conv_kernels = 8;  // 5x5 kernels over the 3 feature planes
  Normalization norm;
  std::string colon_digest;   // colon model this net was trained against
  std::string config_digest;  // pipeline config that produced it

  int plane_rows() const { return n; }
  int plane_cols() const { return n > 6 ? n : 6; }
  int lstm_input() const { return conv_kernels * plane_rows() * plane_cols(); }
  int output_dim() const { return 3 * m; }
};

/// One 5x5 kernel with a weight plane per input channel (A, P, D) and a bias.
struct ConvKernel {
  std::vector<Eigen::Matrix<double, 5, 5>> w;
  double bias = 0.0;
};

struct LstmWeights {
  // Gate order everywhere: input, forget, candidate, output.
  Eigen::MatrixXd wi, wf, wg, wo;  // hidden x input
  Eigen::MatrixXd ui, uf, ug, uo;  // hidden x hidden
  Eigen::VectorXd bi, bf, bg, bo;  // hidden
};

struct DenseWeights {
  Eigen::MatrixXd w;  // output_dim x hidden
  Eigen::VectorXd b;  // output_dim
};

struct SenModel {
  SenMeta meta;
  std::vector<ConvKernel> conv;
  LstmWeights lstm;
  DenseWeights dense;
};

/// Gradient of the loss w.r.t. every parameter; mirrors SenModel's layout.
struct SenGradients {
  std::vector<ConvKernel> conv;
  LstmWeights lstm;
  DenseWeights dense;
};

/// Fresh model with small uniform random weights; deterministic per seed.
SenModel init_model(const SenMeta& meta, std::uint64_t seed);

/// Zero-valued gradients shaped for `meta`.
SenGradients zero_gradients(const SenMeta& meta);

std::size_t parameter_count(const SenMeta& meta);

/// Flat parameter/gradient views in a fixed documented order:
/// conv kernels (kernel-major, channel, row, col), conv biases, lstm W/U/b in
/// gate order i,f,g,o, dense weight (row-major), dense bias.
Eigen::VectorXd flatten_parameters(const SenModel& model);
void unflatten_parameters(const Eigen::VectorXd& flat, SenModel& model);
Eigen::VectorXd flatten_gradients(const SenGradients& grads, const SenMeta& meta);

/// Checkpoint JSON: {"meta": {...}, "weights": {name: {"shape": [...],
/// "data": [...]}}}. Loading validates every shape against the meta block.
void save_checkpoint(const SenModel& model, const std::string& path);
SenModel load_checkpoint(const std::string& path);

}  // namespace coltrack::sen
