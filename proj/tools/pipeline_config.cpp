#include "pipeline_config.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <vector>

#include "coltrack/errors.hpp"
#include "coltrack/sequence_io.hpp"

namespace coltrack::cli {
namespace {

using nlohmann::json;

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

Point3 point_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3)
    throw_configuration("config key '" + key + "' must be [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json offset_json(const OffsetSpec& o) {
  return json{{"axis", point_json(o.axis)},
              {"angle_deg", o.angle_deg},
              {"translation", point_json(o.translation)}};
}

json deformation_json(const DeformationParams& d) {
  return json{{"cecum", d.cecum},
              {"ascending", d.ascending},
              {"hepatic_flexure", d.hepatic_flexure},
              {"transverse", d.transverse},
              {"splenic_flexure", d.splenic_flexure},
              {"descending", d.descending},
              {"sigmoid", d.sigmoid},
              {"rectum", d.rectum},
              {"release_hold_mm", d.release_hold_mm},
              {"release_ramp_mm", d.release_ramp_mm},
              {"amplitude_ramp_per_mm", d.amplitude_ramp_per_mm},
              {"anus_fix_mm", d.anus_fix_mm},
              {"drift_fraction", d.drift_fraction},
              {"drift_step", d.drift_step}};
}

json build_json(const PipelineConfig& c, bool data_fields_only) {
  json j{
      {"seed", c.seed},
      {"colon_seed", c.colon_seed},
      {"simulator",
       {{"train_runs", c.train_runs},
        {"eval_runs", c.eval_runs},
        {"frame_count", c.frame_count},
        {"noise_mm", c.noise_mm},
        {"deformation", deformation_json(c.deformation)}}},
      {"em_offset", offset_json(c.em_offset)},
      {"kinect_offset", offset_json(c.kinect_offset)},
      {"sen",
       {{"n", c.arch.n},
        {"m", c.arch.m},
        {"window", c.arch.window},
        {"hidden", c.arch.hidden},
        {"conv_kernels", c.arch.conv_kernels}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"gradient_clip", c.train.gradient_clip},
        {"validation_fraction", c.train.validation_fraction}}},
      {"icp",
       {{"max_iterations", c.icp.max_iterations},
        {"convergence_tol", c.icp.convergence_tol},
        {"trim_fraction", c.icp.trim_fraction},
        {"target_step_mm", c.icp_target_step_mm}}},
  };
  if (!data_fields_only) {
    j["out_dir"] = c.out_dir;
    j["train"]["threads"] = c.train.threads;
    j["tracker"] = {{"estimator", c.estimator}, {"reregister", c.reregister}};
  }
  return j;
}

/// Reads `key` into `value` when present, remembering which keys were seen.
class KeyReader {
 public:
  KeyReader(const json& node, std::string scope)
      : node_(node), scope_(std::move(scope)) {}

  template <typename T>
  void read(const char* key, T& value) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      value = it->get<T>();
    } catch (const json::exception&) {
      throw_configuration("config key '" + scoped(key) + "' has the wrong type");
    }
  }

  void read_point(const char* key, Point3& value) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it != node_.end()) value = point_from(*it, scoped(key));
  }

  const json* object(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    if (!it->is_object())
      throw_configuration("config key '" + scoped(key) + "' must be an object");
    return &*it;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      (void)value;
      if (!seen_.count(key))
        throw_configuration("unknown config key '" + scoped(key) + "'");
    }
  }

 private:
  std::string scoped(const std::string& key) const {
    return scope_.empty() ? key : scope_ + "." + key;
  }

  const json& node_;
  std::string scope_;
  std::set<std::string> seen_;
};

void read_offset(const json* node, const std::string& scope, OffsetSpec& o) {
  if (!node) return;
  KeyReader r(*node, scope);
  r.read_point("axis", o.axis);
  r.read("angle_deg", o.angle_deg);
  r.read_point("translation", o.translation);
  r.finish();
}

}  // namespace

RigidTransform OffsetSpec::transform() const {
  return axis_angle_transform(axis, angle_deg * kDegToRad,
                              translation);
}

PipelineConfig default_config() { return {}; }

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_io(path + " is not valid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw_configuration(path + " must hold a JSON object");

  PipelineConfig c;
  KeyReader root(j, "");
  root.read("out_dir", c.out_dir);
  root.read("seed", c.seed);
  root.read("colon_seed", c.colon_seed);

  if (const json* sim = root.object("simulator")) {
    KeyReader r(*sim, "simulator");
    r.read("train_runs", c.train_runs);
    r.read("eval_runs", c.eval_runs);
    r.read("frame_count", c.frame_count);
    r.read("noise_mm", c.noise_mm);
    if (const json* def = r.object("deformation")) {
      KeyReader d(*def, "simulator.deformation");
      d.read("cecum", c.deformation.cecum);
      d.read("ascending", c.deformation.ascending);
      d.read("hepatic_flexure", c.deformation.hepatic_flexure);
      d.read("transverse", c.deformation.transverse);
      d.read("splenic_flexure", c.deformation.splenic_flexure);
      d.read("descending", c.deformation.descending);
      d.read("sigmoid", c.deformation.sigmoid);
      d.read("rectum", c.deformation.rectum);
      d.read("release_hold_mm", c.deformation.release_hold_mm);
      d.read("release_ramp_mm", c.deformation.release_ramp_mm);
      d.read("amplitude_ramp_per_mm", c.deformation.amplitude_ramp_per_mm);
      d.read("anus_fix_mm", c.deformation.anus_fix_mm);
      d.read("drift_fraction", c.deformation.drift_fraction);
      d.read("drift_step", c.deformation.drift_step);
      d.finish();
    }
    r.finish();
  }

  read_offset(root.object("em_offset"), "em_offset", c.em_offset);
  read_offset(root.object("kinect_offset"), "kinect_offset", c.kinect_offset);

  if (const json* sen = root.object("sen")) {
    KeyReader r(*sen, "sen");
    r.read("n", c.arch.n);
    r.read("m", c.arch.m);
    r.read("window", c.arch.window);
    r.read("hidden", c.arch.hidden);
    r.read("conv_kernels", c.arch.conv_kernels);
    r.finish();
  }

  if (const json* train = root.object("train")) {
    KeyReader r(*train, "train");
    r.read("learning_rate", c.train.learning_rate);
    r.read("epochs", c.train.epochs);
    r.read("batch_size", c.train.batch_size);
    r.read("gradient_clip", c.train.gradient_clip);
    r.read("validation_fraction", c.train.validation_fraction);
    r.read("threads", c.train.threads);
    r.finish();
  }

  if (const json* icp = root.object("icp")) {
    KeyReader r(*icp, "icp");
    r.read("max_iterations", c.icp.max_iterations);
    r.read("convergence_tol", c.icp.convergence_tol);
    r.read("trim_fraction", c.icp.trim_fraction);
    r.read("target_step_mm", c.icp_target_step_mm);
    r.finish();
  }

  if (const json* tracker = root.object("tracker")) {
    KeyReader r(*tracker, "tracker");
    r.read("estimator", c.estimator);
    r.read("reregister", c.reregister);
    r.finish();
  }

  root.finish();
  return c;
}

std::string config_json(const PipelineConfig& config) {
  return build_json(config, false).dump(2) + "\n";
}

std::string config_digest(const PipelineConfig& config) {
  return fnv1a_hex(build_json(config, true).dump());
}

}  // namespace coltrack::cli
