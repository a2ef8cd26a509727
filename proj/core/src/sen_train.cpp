#include "coltrack/sen/train.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <thread>

#include "coltrack/errors.hpp"
#include "coltrack/rng.hpp"
#include "coltrack/sen/network.hpp"

namespace coltrack::sen {
namespace {

struct SampleRef {
  std::size_t sequence;
  std::size_t end_frame;  // inclusive; window covers [end-window+1, end]
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(first, last) over [0, count) split across workers. Each range is
/// disjoint, so workers never share output slots.
void parallel_ranges(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t first = w * chunk;
    const std::size_t last = std::min(count, first + chunk);
    if (first >= last) break;
    pool.emplace_back(fn, first, last);
  }
  for (auto& t : pool) t.join();
}

void validate_dataset(const TrainingDataset& dataset, const SenArch& arch) {
  if (arch.n < 2 || arch.m < 1 || arch.window < 1 || arch.hidden < 1 ||
      arch.conv_kernels < 1)
    throw_invalid_input("training architecture has non-positive dimensions");
  for (std::size_t s = 0; s < dataset.sequences.size(); ++s) {
    const auto& seq = dataset.sequences[s];
    if (seq.frames.size() != seq.truths.size())
      throw_invalid_input("sequence " + std::to_string(s) +
                          " has mismatched frame and truth counts");
    if (static_cast<int>(seq.frames.size()) < arch.window)
      throw_invalid_input("sequence " + std::to_string(s) + " has " +
                          std::to_string(seq.frames.size()) +
                          " frames, fewer than the window of " +
                          std::to_string(arch.window));
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      if (static_cast<int>(seq.frames[t].points.size()) != arch.n)
        throw_invalid_input("sequence " + std::to_string(s) + " frame " +
                            std::to_string(t) + " has " +
                            std::to_string(seq.frames[t].points.size()) +
                            " scope points, expected " + std::to_string(arch.n));
      if (static_cast<int>(seq.truths[t].size()) != arch.m)
        throw_invalid_input("sequence " + std::to_string(s) + " frame " +
                            std::to_string(t) + " has " +
                            std::to_string(seq.truths[t].size()) +
                            " truth points, expected " + std::to_string(arch.m));
    }
  }
}

}  // namespace

Normalization dataset_normalization(const TrainingDataset& dataset) {
  Point3 sum{0.0, 0.0, 0.0};
  std::size_t count = 0;
  for (const auto& seq : dataset.sequences) {
    for (const auto& frame : seq.frames)
      for (const auto& p : frame.points) {
        sum += p;
        ++count;
      }
    for (const auto& truth : seq.truths)
      for (const auto& p : truth) {
        sum += p;
        ++count;
      }
  }
  if (count == 0)
    throw Error(ErrorCategory::EmptyDataset,
                "cannot derive normalization from an empty dataset");
  Normalization norm;
  norm.center = sum * (1.0 / static_cast<double>(count));
  double max_dist = 0.0;
  for (const auto& seq : dataset.sequences) {
    for (const auto& frame : seq.frames)
      for (const auto& p : frame.points)
        max_dist = std::max(max_dist, distance(p, norm.center));
    for (const auto& truth : seq.truths)
      for (const auto& p : truth)
        max_dist = std::max(max_dist, distance(p, norm.center));
  }
  norm.scale = max_dist > 0.0 ? max_dist : 1.0;
  return norm;
}

TrainResult train(const TrainingDataset& dataset, const SenArch& arch,
                  const TrainConfig& config) {
  validate_dataset(dataset, arch);
  if (config.epochs < 1) throw_configuration("epochs must be at least 1");
  if (config.batch_size < 1) throw_configuration("batch_size must be at least 1");
  if (!(config.learning_rate >= 0.0))
    throw_configuration("learning_rate must be non-negative");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0)
    throw_configuration("validation_fraction must be in [0, 1)");

  std::vector<SampleRef> samples;
  for (std::size_t s = 0; s < dataset.sequences.size(); ++s) {
    const auto& seq = dataset.sequences[s];
    for (std::size_t end = static_cast<std::size_t>(arch.window) - 1;
         end < seq.frames.size(); ++end)
      samples.push_back({s, end});
  }
  if (samples.empty())
    throw Error(ErrorCategory::EmptyDataset,
                "training dataset yields no windows");

  const Normalization norm = dataset_normalization(dataset);

  SenMeta meta;
  meta.n = arch.n;
  meta.m = arch.m;
  meta.window = arch.window;
  meta.hidden = arch.hidden;
  meta.conv_kernels = arch.conv_kernels;
  meta.norm = norm;
  meta.colon_digest = config.colon_digest;
  meta.config_digest = config.config_digest;

  // Per-frame feature planes never change during training.
  std::vector<std::vector<PlaneStack>> planes(dataset.sequences.size());
  for (std::size_t s = 0; s < dataset.sequences.size(); ++s) {
    const auto& seq = dataset.sequences[s];
    planes[s].reserve(seq.frames.size());
    for (const auto& frame : seq.frames)
      planes[s].push_back(stack_feature(build_feature(frame, norm)));
  }

  auto window_of = [&](const SampleRef& ref) {
    std::vector<PlaneStack> window;
    window.reserve(static_cast<std::size_t>(arch.window));
    const std::size_t first = ref.end_frame + 1 - static_cast<std::size_t>(arch.window);
    for (std::size_t t = first; t <= ref.end_frame; ++t)
      window.push_back(planes[ref.sequence][t]);
    return window;
  };

  Rng rng(config.seed);
  const std::uint64_t init_seed = rng.fork(0);
  Rng shuffle_rng(rng.fork(1));
  Rng split_rng(rng.fork(2));

  // Validation split: deterministic shuffle, tail fraction held out.
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(split_rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  std::size_t val_count = static_cast<std::size_t>(
      std::llround(config.validation_fraction * static_cast<double>(samples.size())));
  if (config.validation_fraction > 0.0 && val_count == 0 && samples.size() > 1)
    val_count = 1;
  if (val_count >= samples.size()) val_count = samples.size() - 1;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(val_count), order.end());
  std::sort(val_idx.begin(), val_idx.end());

  SenModel model = init_model(meta, init_seed);
  Eigen::VectorXd params = flatten_parameters(model);
  const Eigen::Index pcount = params.size();

  // Adam state.
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(pcount);
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(pcount);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long adam_t = 0;

  const int threads = resolve_threads(config.threads);

  // Per-sample scratch reused across batches: flat gradient and loss slots.
  std::vector<Eigen::VectorXd> grad_slots(static_cast<std::size_t>(config.batch_size));
  std::vector<double> loss_slots(static_cast<std::size_t>(config.batch_size));

  auto eval_loss = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::vector<double> losses(idx.size());
    parallel_ranges(idx.size(), threads, [&](std::size_t first, std::size_t last) {
      for (std::size_t k = first; k < last; ++k) {
        const SampleRef& ref = samples[idx[k]];
        const auto estimate = forward(model, window_of(ref));
        losses[k] = loss(estimate,
                         dataset.sequences[ref.sequence].truths[ref.end_frame]);
      }
    });
    double sum = 0.0;
    for (double l : losses) sum += l;  // fixed order, thread-count independent
    return sum / static_cast<double>(idx.size());
  };

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(config.epochs));
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params = params;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Deterministic per-epoch shuffle of the training indices.
    for (std::size_t i = train_idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          shuffle_rng.uniform() * static_cast<double>(i));
      std::swap(train_idx[i - 1], train_idx[std::min(j, i - 1)]);
    }

    double epoch_loss_sum = 0.0;
    for (std::size_t batch_start = 0; batch_start < train_idx.size();
         batch_start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t batch_end = std::min(
          train_idx.size(), batch_start + static_cast<std::size_t>(config.batch_size));
      const std::size_t batch_n = batch_end - batch_start;

      parallel_ranges(batch_n, threads, [&](std::size_t first, std::size_t last) {
        for (std::size_t k = first; k < last; ++k) {
          const SampleRef& ref = samples[train_idx[batch_start + k]];
          ForwardCache cache;
          const auto estimate = forward(model, window_of(ref), &cache);
          const auto& truth = dataset.sequences[ref.sequence].truths[ref.end_frame];
          loss_slots[k] = loss(estimate, truth);
          SenGradients grads = zero_gradients(meta);
          backward(model, cache, estimate, truth, grads);
          grad_slots[k] = flatten_gradients(grads, meta);
        }
      });

      // Reduce in sample order so results do not depend on the thread count.
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(pcount);
      for (std::size_t k = 0; k < batch_n; ++k) {
        grad += grad_slots[k];
        epoch_loss_sum += loss_slots[k];
      }
      grad /= static_cast<double>(batch_n);

      if (!grad.allFinite())
        throw Error(ErrorCategory::TrainingDiverged,
                    "training diverged at epoch " + std::to_string(epoch) +
                        ": non-finite gradient");

      if (config.gradient_clip > 0.0) {
        const double gnorm = grad.norm();
        if (gnorm > config.gradient_clip) grad *= config.gradient_clip / gnorm;
      }

      ++adam_t;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t));
      adam_m = beta1 * adam_m + (1.0 - beta1) * grad;
      adam_v = beta2 * adam_v + (1.0 - beta2) * grad.cwiseProduct(grad);
      params -= (config.learning_rate *
                 (adam_m.array() / bc1) /
                 ((adam_v.array() / bc2).sqrt() + adam_eps))
                    .matrix();
      unflatten_parameters(params, model);
    }

    EpochStats stats;
    stats.train_loss = epoch_loss_sum / static_cast<double>(train_idx.size());
    stats.val_loss = val_idx.empty() ? stats.train_loss : eval_loss(val_idx);
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
      throw Error(ErrorCategory::TrainingDiverged,
                  "training diverged at epoch " + std::to_string(epoch) +
                      ": non-finite loss");
    result.history.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      best_params = params;
      result.best_epoch = epoch;
    }
  }

  unflatten_parameters(best_params, model);
  result.model = std::move(model);
  return result;
}

}  // namespace coltrack::sen
