#include <benchmark/benchmark.h>

#include <vector>

#include "coltrack/geometry.hpp"
#include "coltrack/registration.hpp"
#include "coltrack/rng.hpp"
#include "coltrack/sen/feature.hpp"
#include "coltrack/sen/network.hpp"
#include "coltrack/simulator.hpp"
#include "coltrack/tracking.hpp"

namespace {

using namespace coltrack;

ColonoscopeShape make_scope(Rng& rng, int n) {
  ColonoscopeShape shape;
  for (int i = 0; i < n; ++i) {
    shape.points.push_back({60.0 * i + rng.normal(0.0, 5.0),
                            rng.normal(0.0, 20.0), rng.normal(0.0, 20.0)});
    shape.directions.push_back(UnitVec3::from(
        {1.0, rng.normal(0.0, 0.2), rng.normal(0.0, 0.2)}));
  }
  return shape;
}

void bm_generate_colon(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(generate_colon(seed++).total_length);
}
BENCHMARK(bm_generate_colon);

void bm_deform_colon(benchmark::State& state) {
  const ColonModel model = generate_colon(7);
  const DeformationParams params;
  int t = 0;
  for (auto _ : state) {
    const ColonShape shape =
        deform_colon(model, model.total_length * 0.6, params, t++);
    benchmark::DoNotOptimize(shape.points.front().x);
  }
}
BENCHMARK(bm_deform_colon);

void bm_simulate_retraction(benchmark::State& state) {
  const ColonModel model = generate_colon(7);
  const DeformationParams params;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const InsertionSequence seq =
        simulate_retraction(model, params, 40, 1.0, seed++);
    benchmark::DoNotOptimize(seq.frames.back().tip_arclength);
  }
}
BENCHMARK(bm_simulate_retraction);

void bm_resample_centerline(benchmark::State& state) {
  const ColonModel model = generate_colon(7);
  for (auto _ : state) {
    const auto pts = resample_uniform(model.centerline, 300);
    benchmark::DoNotOptimize(pts.back().x);
  }
}
BENCHMARK(bm_resample_centerline);

void bm_procrustes(benchmark::State& state) {
  Rng rng(11);
  std::vector<Point3> src;
  for (int i = 0; i < 64; ++i)
    src.push_back({rng.uniform(-100, 100), rng.uniform(-100, 100),
                   rng.uniform(-100, 100)});
  const RigidTransform move = axis_angle_transform({1, 2, 3}, 0.4, {5, -3, 9});
  std::vector<Point3> dst;
  for (const auto& p : src) dst.push_back(move.apply(p));
  for (auto _ : state) {
    const RigidTransform t = procrustes(src, dst);
    benchmark::DoNotOptimize(t.translation.x());
  }
}
BENCHMARK(bm_procrustes);

void bm_icp_register_first_frame(benchmark::State& state) {
  const ColonModel model = generate_colon(7);
  const InsertionSequence seq =
      simulate_retraction(model, DeformationParams{}, 20, 0.0, 3);
  const RigidTransform offset =
      axis_angle_transform({0.2, 0.5, 0.8}, 0.0873, {15, -10, 8});
  const ColonoscopeShape sensed =
      apply_transform(offset, seq.frames.front().scope);
  for (auto _ : state) {
    const RigidTransform t = register_first_frame(sensed, model);
    benchmark::DoNotOptimize(t.translation.x());
  }
}
BENCHMARK(bm_icp_register_first_frame);

void bm_build_feature(benchmark::State& state) {
  Rng rng(13);
  const ColonoscopeShape scope = make_scope(rng, 6);
  const sen::Normalization norm{{150.0, 0.0, 0.0}, 400.0};
  for (auto _ : state) {
    const sen::SenFeature feature = sen::build_feature(scope, norm);
    benchmark::DoNotOptimize(feature);
  }
}
BENCHMARK(bm_build_feature);

void bm_sen_forward_default_arch(benchmark::State& state) {
  sen::SenMeta meta;  // defaults: n=6, m=12, window=20, hidden=72, kernels=8
  meta.norm = {{150.0, 0.0, 0.0}, 400.0};
  const sen::SenModel model = sen::init_model(meta, 21);

  Rng rng(17);
  std::vector<ColonoscopeShape> window;
  for (int t = 0; t < meta.window; ++t) window.push_back(make_scope(rng, meta.n));

  for (auto _ : state) {
    const auto estimate = sen::estimate_colon(model, window);
    benchmark::DoNotOptimize(estimate.back().z);
  }
}
BENCHMARK(bm_sen_forward_default_arch);

void bm_sen_backward_default_arch(benchmark::State& state) {
  sen::SenMeta meta;
  meta.norm = {{150.0, 0.0, 0.0}, 400.0};
  const sen::SenModel model = sen::init_model(meta, 21);

  Rng rng(19);
  std::vector<sen::PlaneStack> window;
  for (int t = 0; t < meta.window; ++t)
    window.push_back(
        sen::stack_feature(sen::build_feature(make_scope(rng, meta.n), meta.norm)));
  std::vector<Point3> truth;
  for (int i = 0; i < meta.m; ++i)
    truth.push_back({100.0 * i, 25.0, -10.0});

  for (auto _ : state) {
    sen::ForwardCache cache;
    const auto estimate = sen::forward(model, window, &cache);
    sen::SenGradients grads = sen::zero_gradients(meta);
    sen::backward(model, cache, estimate, truth, grads);
    benchmark::DoNotOptimize(grads.dense.b.sum());
  }
}
BENCHMARK(bm_sen_backward_default_arch);

void bm_tracker_push_frame(benchmark::State& state) {
  const ColonModel model = generate_colon(7);
  const InsertionSequence seq =
      simulate_retraction(model, DeformationParams{}, 120, 1.0, 5);

  sen::SenMeta meta;
  meta.norm = {{150.0, 0.0, 0.0}, 400.0};
  const sen::SenModel net = sen::init_model(meta, 23);
  Tracker tracker(net, model.rest_shape, RigidTransform::identity());

  std::size_t t = 0;
  for (auto _ : state) {
    const TipEstimate est = tracker.push_frame(seq.frames[t % 120].scope);
    benchmark::DoNotOptimize(est.colon_index);
    ++t;
  }
}
BENCHMARK(bm_tracker_push_frame);

}  // namespace

BENCHMARK_MAIN();
