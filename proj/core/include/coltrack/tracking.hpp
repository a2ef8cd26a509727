#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "coltrack/geometry.hpp"
#include "coltrack/registration.hpp"
#include "coltrack/sen/model.hpp"
#include "coltrack/simulator.hpp"

namespace coltrack {

/// Result of mapping one scope frame onto the colon model.
///
/// `position` is always an element of the rest shape: the tip is snapped to
/// the nearest estimated colon point and reported as the corresponding rest
/// point, never an interpolated location. `colon_index` is 0-based.
struct TipEstimate {
  Point3 position;
  int colon_index = 0;
  std::vector<Point3> estimated_shape;
  double distance_to_estimate = 0.0;  // |registered tip - nearest estimate| in mm
  Point3 registered_tip;              // tip after scope->CT registration
  int time_index = 0;
};

/// Maps a full window of registered scope shapes to an estimated colon shape
/// (one Point3 per colon model point, CT coordinates).
using ShapeEstimator =
    std::function<std::vector<Point3>(const std::vector<ColonoscopeShape>&)>;

/// Registers the first scope frame of a session against the dense colon
/// centerline with ICP and returns the scope->CT transform. The centerline is
/// resampled to roughly `target_step_mm` spacing so correspondence search is
/// not biased by uneven vertex density.
RigidTransform register_first_frame(const ColonoscopeShape& first_frame,
                                    const ColonModel& model,
                                    const IcpParams& params = {},
                                    double target_step_mm = 5.0);

/// Online two-step tracker: keeps a sliding window of registered scope
/// shapes, runs a shape estimator over the window, and snaps the tip to the
/// nearest estimated colon point.
///
/// Frames must be pushed in order by a single owner. Until the window is
/// full it is padded by repeating the earliest frame.
class Tracker {
 public:
  /// SEN-backed tracker. The model's output dimension must match
  /// `rest_colon`.
  Tracker(sen::SenModel model, ColonShape rest_colon, RigidTransform registration);

  /// Tracker with a caller-supplied estimator (rigid baseline, oracle stubs).
  /// `n` / `window` describe the scope frames the estimator expects; the
  /// estimator must return exactly `rest_colon.size()` points.
  Tracker(ShapeEstimator estimator, int n, int window, ColonShape rest_colon,
          RigidTransform registration);

  /// Re-run ICP against `target` on every pushed frame, warm-started from the
  /// current registration. Off by default; the initial registration is held
  /// fixed.
  void enable_reregistration(std::vector<Point3> target, IcpParams params = {});

  TipEstimate push_frame(const ColonoscopeShape& scope);

  /// Folds push_frame over the frames in order. Errors gain the frame index.
  std::vector<TipEstimate> run_sequence(
      const std::vector<ColonoscopeShape>& frames);
  std::vector<TipEstimate> run_sequence(const InsertionSequence& sequence);

  const RigidTransform& registration() const { return registration_; }
  int frame_counter() const { return frame_counter_; }
  std::size_t window_capacity() const { return window_capacity_; }
  const ColonShape& rest_colon() const { return rest_colon_; }

 private:
  ShapeEstimator estimator_;
  std::size_t scope_points_;
  std::size_t window_capacity_;
  ColonShape rest_colon_;
  RigidTransform registration_;
  std::deque<ColonoscopeShape> window_;
  int frame_counter_ = 0;
  bool reregister_ = false;
  std::vector<Point3> reregister_target_;
  IcpParams reregister_params_;
};

/// Extension beyond the index map: projects the registered tip onto the
/// estimated shape polyline and linearly interpolates the rest-point
/// insertion depths, giving a continuous depth estimate in mm.
double interpolated_insertion_depth(const TipEstimate& estimate,
                                    double total_length);

}  // namespace coltrack
