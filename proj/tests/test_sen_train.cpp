#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "coltrack/sen/network.hpp"
#include "coltrack/sen/train.hpp"
#include "helpers.hpp"

using namespace coltrack;
using namespace coltrack::sen;
namespace th = coltrack::testing;

namespace {

SenArch tiny_arch() {
  SenArch arch;
  arch.n = 4;
  arch.m = 3;
  arch.window = 3;
  arch.hidden = 8;
  arch.conv_kernels = 2;
  return arch;
}

/// One constant-truth sequence: the scope wiggles, the colon stays put.
TrainingDataset toy_dataset(std::uint64_t seed, int frames = 10) {
  Rng rng(seed);
  const auto target = th::random_points(rng, 3, 5.0);

  TrainingDataset dataset;
  TrainingSequence seq;
  for (int t = 0; t < frames; ++t) {
    ColonoscopeShape scope;
    for (int i = 0; i < 4; ++i) {
      scope.points.push_back({static_cast<double>(i) + 0.1 * t,
                              rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
      scope.directions.push_back(th::random_direction(rng));
    }
    seq.frames.push_back(scope);
    seq.truths.push_back(target);
  }
  dataset.sequences.push_back(seq);
  return dataset;
}

bool same_weights(const SenModel& a, const SenModel& b) {
  const Eigen::VectorXd fa = flatten_parameters(a);
  const Eigen::VectorXd fb = flatten_parameters(b);
  return fa.size() == fb.size() && (fa - fb).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

TEST_SUITE("sen_train") {

TEST_CASE("zero learning rate never moves the weights") {
  const auto dataset = toy_dataset(90);
  TrainConfig config;
  config.learning_rate = 0.0;
  config.epochs = 1;
  config.batch_size = 4;
  config.seed = 7;
  config.validation_fraction = 0.0;
  config.threads = 1;

  const auto one = train(dataset, tiny_arch(), config);
  config.epochs = 3;
  const auto three = train(dataset, tiny_arch(), config);

  // Three epochs of zero-rate updates leave the initialization untouched, so
  // both runs return it and every epoch sees the same loss.
  CHECK(same_weights(one.model, three.model));
  REQUIRE(three.history.size() == 3);
  // Same loss every epoch (summation order varies with the shuffle).
  CHECK(three.history[1].train_loss ==
        doctest::Approx(three.history[0].train_loss).epsilon(1e-12));
  CHECK(three.history[2].train_loss ==
        doctest::Approx(three.history[0].train_loss).epsilon(1e-12));

  config.learning_rate = 1e-3;
  const auto moved = train(dataset, tiny_arch(), config);
  CHECK_FALSE(same_weights(one.model, moved.model));
}

TEST_CASE("a constant-target toy problem converges") {
  const auto dataset = toy_dataset(91);
  TrainConfig config;
  config.learning_rate = 0.01;
  config.epochs = 200;
  config.batch_size = 8;
  config.seed = 11;
  config.validation_fraction = 0.0;
  config.threads = 1;

  const auto result = train(dataset, tiny_arch(), config);
  REQUIRE(result.history.size() == 200);
  const double initial = result.history.front().train_loss;
  const double final_loss = result.history.back().train_loss;
  CHECK(final_loss < 0.01 * initial);
}

TEST_CASE("training is reproducible for a fixed seed") {
  const auto dataset = toy_dataset(92);
  TrainConfig config;
  config.learning_rate = 2e-3;
  config.epochs = 5;
  config.batch_size = 4;
  config.seed = 1234;
  config.validation_fraction = 0.25;
  config.threads = 1;

  const auto a = train(dataset, tiny_arch(), config);
  const auto b = train(dataset, tiny_arch(), config);
  CHECK(same_weights(a.model, b.model));
  CHECK(a.best_epoch == b.best_epoch);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].val_loss == b.history[e].val_loss);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto dataset = toy_dataset(93, 14);
  TrainConfig config;
  config.learning_rate = 2e-3;
  config.epochs = 4;
  config.batch_size = 6;
  config.seed = 77;
  config.validation_fraction = 0.2;

  config.threads = 1;
  const auto serial = train(dataset, tiny_arch(), config);
  config.threads = 4;
  const auto parallel = train(dataset, tiny_arch(), config);

  CHECK(same_weights(serial.model, parallel.model));
  REQUIRE(serial.history.size() == parallel.history.size());
  for (std::size_t e = 0; e < serial.history.size(); ++e) {
    CHECK(serial.history[e].train_loss == parallel.history[e].train_loss);
    CHECK(serial.history[e].val_loss == parallel.history[e].val_loss);
  }
}

TEST_CASE("an absurd learning rate reports divergence with the epoch") {
  const auto dataset = toy_dataset(94);
  TrainConfig config;
  config.learning_rate = 1e200;
  config.epochs = 5;
  config.batch_size = 8;
  config.seed = 3;
  config.gradient_clip = 0.0;
  config.validation_fraction = 0.0;
  config.threads = 1;

  try {
    train(dataset, tiny_arch(), config);
    FAIL_CHECK("expected training to diverge");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::TrainingDiverged);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("empty and malformed datasets are rejected") {
  TrainConfig config;
  config.threads = 1;
  CHECK_COLTRACK_ERROR(train({}, tiny_arch(), config), EmptyDataset);

  auto short_seq = toy_dataset(95, 2);  // fewer frames than the window
  CHECK_COLTRACK_ERROR(train(short_seq, tiny_arch(), config), InvalidInput);

  auto mismatched = toy_dataset(96);
  mismatched.sequences[0].truths.pop_back();
  CHECK_COLTRACK_ERROR(train(mismatched, tiny_arch(), config), InvalidInput);

  auto wrong_m = toy_dataset(97);
  wrong_m.sequences[0].truths[3].push_back({0, 0, 0});
  CHECK_COLTRACK_ERROR(train(wrong_m, tiny_arch(), config), InvalidInput);
}

TEST_CASE("config invariants are enforced") {
  const auto dataset = toy_dataset(98);
  TrainConfig config;
  config.threads = 1;

  config.epochs = 0;
  CHECK_COLTRACK_ERROR(train(dataset, tiny_arch(), config), Configuration);
  config.epochs = 1;
  config.learning_rate = -1.0;
  CHECK_COLTRACK_ERROR(train(dataset, tiny_arch(), config), Configuration);
  config.learning_rate = 1e-3;
  config.batch_size = 0;
  CHECK_COLTRACK_ERROR(train(dataset, tiny_arch(), config), Configuration);
  config.batch_size = 1;
  config.validation_fraction = 1.0;
  CHECK_COLTRACK_ERROR(train(dataset, tiny_arch(), config), Configuration);
}

TEST_CASE("best_epoch is the argmin of the validation loss") {
  const auto dataset = toy_dataset(99, 16);
  TrainConfig config;
  config.learning_rate = 5e-3;
  config.epochs = 12;
  config.batch_size = 4;
  config.seed = 21;
  config.validation_fraction = 0.3;
  config.threads = 1;

  const auto result = train(dataset, tiny_arch(), config);
  REQUIRE(result.best_epoch >= 0);
  double best = result.history[static_cast<std::size_t>(result.best_epoch)].val_loss;
  for (const auto& stats : result.history) CHECK(best <= stats.val_loss);
}

TEST_CASE("dataset_normalization matches a direct computation") {
  const auto dataset = toy_dataset(101, 8);
  const auto norm = dataset_normalization(dataset);

  Point3 sum{0, 0, 0};
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
  const Point3 center = sum * (1.0 / static_cast<double>(count));
  CHECK(distance(center, norm.center) < 1e-12);

  double max_dist = 0.0;
  for (const auto& seq : dataset.sequences) {
    for (const auto& frame : seq.frames)
      for (const auto& p : frame.points) max_dist = std::max(max_dist, distance(p, center));
    for (const auto& truth : seq.truths)
      for (const auto& p : truth) max_dist = std::max(max_dist, distance(p, center));
  }
  CHECK(norm.scale == doctest::Approx(max_dist).epsilon(1e-12));

  CHECK_COLTRACK_ERROR(dataset_normalization({}), EmptyDataset);
}

TEST_CASE("the returned model carries the digests and normalization") {
  const auto dataset = toy_dataset(102);
  TrainConfig config;
  config.learning_rate = 1e-3;
  config.epochs = 2;
  config.batch_size = 4;
  config.seed = 5;
  config.threads = 1;
  config.colon_digest = "aaaabbbbccccdddd";
  config.config_digest = "1111222233334444";

  const auto result = train(dataset, tiny_arch(), config);
  CHECK(result.model.meta.colon_digest == "aaaabbbbccccdddd");
  CHECK(result.model.meta.config_digest == "1111222233334444");
  const auto norm = dataset_normalization(dataset);
  CHECK(distance(result.model.meta.norm.center, norm.center) < 1e-12);
  CHECK(result.model.meta.norm.scale == norm.scale);
}

}  // TEST_SUITE
