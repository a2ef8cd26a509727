#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "coltrack/geometry.hpp"
#include "coltrack/sen/model.hpp"

namespace coltrack::sen {

using PlaneStack = std::array<Eigen::MatrixXd, 3>;

/// Same-padded 5x5 convolution over the three feature planes followed by
/// bias and ReLU. `pre` holds pre-activation maps (needed for backprop),
/// `post` the rectified maps, one per kernel.
struct ConvResult {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;
};

ConvResult conv_forward(const PlaneStack& planes,
                        const std::vector<ConvKernel>& kernels);

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

LstmState initial_state(int hidden);

struct LstmStepCache {
  Eigen::VectorXd x, i, f, g, o, c, tanh_c, h_prev, c_prev;
};

/// One LSTM cell update. Gate order: input, forget, candidate, output.
LstmState lstm_step(const LstmWeights& w, const Eigen::VectorXd& x,
                    const LstmState& prev, LstmStepCache* cache = nullptr);

struct ForwardCache {
  std::vector<PlaneStack> planes;                   // inputs, oldest first
  std::vector<std::vector<Eigen::MatrixXd>> conv_pre;
  std::vector<LstmStepCache> steps;
  Eigen::VectorXd h_final;
  Eigen::VectorXd u;  // dense output before de-normalization
};

/// Runs one window (oldest frame first) through conv, LSTM and the dense
/// head, then de-normalizes to millimetres. `window.size()` must equal
/// `model.meta.window` and every plane must match the meta's plane shape.
std::vector<Point3> forward(const SenModel& model,
                            const std::vector<PlaneStack>& window,
                            ForwardCache* cache = nullptr);

/// Convenience: builds features for each scope frame, stacks and forwards.
std::vector<Point3> estimate_colon(const SenModel& model,
                                   const std::vector<ColonoscopeShape>& window);

/// Mean over colon points of the squared Euclidean error, in mm^2.
double loss(const std::vector<Point3>& estimate,
            const std::vector<Point3>& truth);

/// Exact reverse-mode gradients for `loss(forward(window), truth)`,
/// accumulated into `grads` so batches can share one accumulator.
void backward(const SenModel& model, const ForwardCache& cache,
              const std::vector<Point3>& estimate,
              const std::vector<Point3>& truth, SenGradients& grads);

}  // namespace coltrack::sen
