#include "coltrack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "coltrack/errors.hpp"
#include "coltrack/sen/network.hpp"

namespace coltrack {

RigidTransform register_first_frame(const ColonoscopeShape& first_frame,
                                    const ColonModel& model,
                                    const IcpParams& params,
                                    double target_step_mm) {
  validate(first_frame);
  if (target_step_mm <= 0.0)
    throw_invalid_input("target_step_mm must be positive");
  const double length = arclength(model.centerline);
  if (length <= 0.0) throw_invalid_input("colon centerline has zero length");
  const auto count = static_cast<std::size_t>(
      std::max<long long>(2, std::llround(length / target_step_mm) + 1));
  const std::vector<Point3> target = resample_uniform(model.centerline, count);
  return icp(first_frame.points, target, params).transform;
}

Tracker::Tracker(sen::SenModel model, ColonShape rest_colon,
                 RigidTransform registration)
    : scope_points_(static_cast<std::size_t>(model.meta.n)),
      window_capacity_(static_cast<std::size_t>(model.meta.window)),
      rest_colon_(std::move(rest_colon)),
      registration_(std::move(registration)) {
  validate(rest_colon_);
  if (static_cast<int>(rest_colon_.size()) != model.meta.m)
    throw_configuration("model estimates " + std::to_string(model.meta.m) +
                        " colon points but rest shape has " +
                        std::to_string(rest_colon_.size()));
  estimator_ = [model = std::move(model)](
                   const std::vector<ColonoscopeShape>& window) {
    return sen::estimate_colon(model, window);
  };
}

Tracker::Tracker(ShapeEstimator estimator, int n, int window,
                 ColonShape rest_colon, RigidTransform registration)
    : estimator_(std::move(estimator)),
      scope_points_(static_cast<std::size_t>(n > 0 ? n : 0)),
      window_capacity_(static_cast<std::size_t>(window > 0 ? window : 0)),
      rest_colon_(std::move(rest_colon)),
      registration_(std::move(registration)) {
  if (!estimator_) throw_configuration("tracker needs an estimator");
  if (n < 1 || window < 1)
    throw_configuration("tracker needs n >= 1 and window >= 1");
  validate(rest_colon_);
}

void Tracker::enable_reregistration(std::vector<Point3> target,
                                    IcpParams params) {
  if (target.size() < 2)
    throw_configuration("re-registration target needs at least 2 points");
  reregister_ = true;
  reregister_target_ = std::move(target);
  reregister_params_ = params;
}

TipEstimate Tracker::push_frame(const ColonoscopeShape& scope) {
  validate(scope);
  if (scope.size() != scope_points_)
    throw_invalid_input("frame has " + std::to_string(scope.size()) +
                        " scope points, tracker expects " +
                        std::to_string(scope_points_));

  if (reregister_)
    registration_ =
        icp(scope.points, reregister_target_, reregister_params_, registration_)
            .transform;

  window_.push_back(apply_transform(registration_, scope));
  if (window_.size() > window_capacity_) window_.pop_front();

  std::vector<ColonoscopeShape> padded;
  padded.reserve(window_capacity_);
  for (std::size_t k = window_.size(); k < window_capacity_; ++k)
    padded.push_back(window_.front());
  padded.insert(padded.end(), window_.begin(), window_.end());

  std::vector<Point3> estimate = estimator_(padded);
  if (estimate.size() != rest_colon_.size())
    throw_configuration("estimator returned " +
                        std::to_string(estimate.size()) +
                        " points but rest shape has " +
                        std::to_string(rest_colon_.size()));

  const Point3 tip = window_.back().tip();
  const NearestResult near = nearest_index(tip, estimate);

  TipEstimate out;
  out.position = rest_colon_.points[near.index];
  out.colon_index = static_cast<int>(near.index);
  out.estimated_shape = std::move(estimate);
  out.distance_to_estimate = near.distance;
  out.registered_tip = tip;
  out.time_index = frame_counter_;
  ++frame_counter_;
  return out;
}

std::vector<TipEstimate> Tracker::run_sequence(
    const std::vector<ColonoscopeShape>& frames) {
  std::vector<TipEstimate> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      out.push_back(push_frame(frames[i]));
    } catch (const Error& e) {
      throw Error(e.category(),
                  "frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TipEstimate> Tracker::run_sequence(
    const InsertionSequence& sequence) {
  std::vector<ColonoscopeShape> frames;
  frames.reserve(sequence.frames.size());
  for (const auto& f : sequence.frames) frames.push_back(f.scope);
  return run_sequence(frames);
}

double interpolated_insertion_depth(const TipEstimate& estimate,
                                    double total_length) {
  if (estimate.estimated_shape.size() < 2)
    throw_invalid_input("depth interpolation needs at least 2 estimated points");
  if (total_length <= 0.0)
    throw_invalid_input("total_length must be positive");
  const PolylineProjection proj =
      project_to_polyline(estimate.registered_tip, estimate.estimated_shape);
  const auto last = static_cast<double>(estimate.estimated_shape.size() - 1);
  const double index = static_cast<double>(proj.segment) + proj.t;
  return total_length * (last - index) / last;
}

}  // namespace coltrack
