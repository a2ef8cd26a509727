#include "coltrack/sen/model.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "coltrack/errors.hpp"
#include "coltrack/rng.hpp"

namespace coltrack::sen {
namespace {

using nlohmann::json;

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

double xavier_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

json vector_to_json(const Eigen::VectorXd& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return json{{"shape", {v.size()}}, {"data", std::move(data)}};
}

const json& weight_entry(const json& weights, const std::string& name) {
  auto it = weights.find(name);
  if (it == weights.end())
    throw_io("checkpoint missing weight '" + name + "'");
  return *it;
}

void check_shape(const json& entry, const std::string& name,
                 std::vector<std::int64_t> expected) {
  const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
  if (shape != expected) {
    std::string want, got;
    for (auto d : expected) want += std::to_string(d) + " ";
    for (auto d : shape) got += std::to_string(d) + " ";
    throw_io("checkpoint weight '" + name + "' has shape [ " + got +
             "], expected [ " + want + "]");
  }
  const auto& data = entry.at("data");
  std::int64_t count = 1;
  for (auto d : expected) count *= d;
  if (static_cast<std::int64_t>(data.size()) != count)
    throw_io("checkpoint weight '" + name + "' data length mismatch");
}

Eigen::MatrixXd matrix_from_json(const json& entry, const std::string& name,
                                 int rows, int cols) {
  check_shape(entry, name, {rows, cols});
  const auto& data = entry.at("data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

Eigen::VectorXd vector_from_json(const json& entry, const std::string& name,
                                 int size) {
  check_shape(entry, name, {size});
  const auto& data = entry.at("data");
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = data[i].get<double>();
  return v;
}

void validate_meta(const SenMeta& meta) {
  if (meta.n < 2 || meta.m < 1 || meta.window < 1 || meta.hidden < 1 ||
      meta.conv_kernels < 1)
    throw_invalid_input("model meta has non-positive dimensions");
  if (!(meta.norm.scale > 0.0))
    throw_invalid_input("model meta normalization scale must be positive");
}

}  // namespace

SenModel init_model(const SenMeta& meta, std::uint64_t seed) {
  validate_meta(meta);
  SenModel model;
  model.meta = meta;
  Rng rng(seed);

  const int f = meta.lstm_input();
  const int h = meta.hidden;
  const int out = meta.output_dim();

  const double conv_bound = xavier_bound(3 * 25, 25);
  model.conv.resize(static_cast<std::size_t>(meta.conv_kernels));
  for (auto& kernel : model.conv) {
    kernel.w.resize(3);
    for (auto& plane : kernel.w)
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) plane(r, c) = rng.uniform(-conv_bound, conv_bound);
    kernel.bias = 0.0;
  }

  const double wb = xavier_bound(f, h);
  const double ub = xavier_bound(h, h);
  auto& l = model.lstm;
  l.wi = uniform_matrix(h, f, wb, rng);
  l.wf = uniform_matrix(h, f, wb, rng);
  l.wg = uniform_matrix(h, f, wb, rng);
  l.wo = uniform_matrix(h, f, wb, rng);
  l.ui = uniform_matrix(h, h, ub, rng);
  l.uf = uniform_matrix(h, h, ub, rng);
  l.ug = uniform_matrix(h, h, ub, rng);
  l.uo = uniform_matrix(h, h, ub, rng);
  l.bi = Eigen::VectorXd::Zero(h);
  l.bf = Eigen::VectorXd::Ones(h);  // open forget gates at the start
  l.bg = Eigen::VectorXd::Zero(h);
  l.bo = Eigen::VectorXd::Zero(h);

  model.dense.w = uniform_matrix(out, h, xavier_bound(h, out), rng);
  model.dense.b = Eigen::VectorXd::Zero(out);
  return model;
}

SenGradients zero_gradients(const SenMeta& meta) {
  validate_meta(meta);
  SenGradients g;
  const int f = meta.lstm_input();
  const int h = meta.hidden;
  const int out = meta.output_dim();

  g.conv.resize(static_cast<std::size_t>(meta.conv_kernels));
  for (auto& kernel : g.conv) {
    kernel.w.assign(3, Eigen::Matrix<double, 5, 5>::Zero());
    kernel.bias = 0.0;
  }
  g.lstm.wi = Eigen::MatrixXd::Zero(h, f);
  g.lstm.wf = Eigen::MatrixXd::Zero(h, f);
  g.lstm.wg = Eigen::MatrixXd::Zero(h, f);
  g.lstm.wo = Eigen::MatrixXd::Zero(h, f);
  g.lstm.ui = Eigen::MatrixXd::Zero(h, h);
  g.lstm.uf = Eigen::MatrixXd::Zero(h, h);
  g.lstm.ug = Eigen::MatrixXd::Zero(h, h);
  g.lstm.uo = Eigen::MatrixXd::Zero(h, h);
  g.lstm.bi = Eigen::VectorXd::Zero(h);
  g.lstm.bf = Eigen::VectorXd::Zero(h);
  g.lstm.bg = Eigen::VectorXd::Zero(h);
  g.lstm.bo = Eigen::VectorXd::Zero(h);
  g.dense.w = Eigen::MatrixXd::Zero(out, h);
  g.dense.b = Eigen::VectorXd::Zero(out);
  return g;
}

std::size_t parameter_count(const SenMeta& meta) {
  const std::size_t f = static_cast<std::size_t>(meta.lstm_input());
  const std::size_t h = static_cast<std::size_t>(meta.hidden);
  const std::size_t out = static_cast<std::size_t>(meta.output_dim());
  const std::size_t k = static_cast<std::size_t>(meta.conv_kernels);
  return k * (3 * 25 + 1) + 4 * (h * f + h * h + h) + out * h + out;
}

namespace {

// Parameter order contract; flatten/unflatten and Adam state all rely on it:
// conv kernels (channel, row, col, then bias), lstm W/U/b in gate order
// i,f,g,o, dense weight row-major, dense bias.
template <typename Emit>
void for_each_parameter(const SenModel& model, Emit&& emit) {
  for (const auto& kernel : model.conv) {
    for (const auto& plane : kernel.w)
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) emit(plane(r, c));
    emit(kernel.bias);
  }
  auto emit_matrix = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) emit(m(r, c));
  };
  auto emit_vector = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) emit(v(i));
  };
  const auto& l = model.lstm;
  emit_matrix(l.wi); emit_matrix(l.wf); emit_matrix(l.wg); emit_matrix(l.wo);
  emit_matrix(l.ui); emit_matrix(l.uf); emit_matrix(l.ug); emit_matrix(l.uo);
  emit_vector(l.bi); emit_vector(l.bf); emit_vector(l.bg); emit_vector(l.bo);
  emit_matrix(model.dense.w);
  emit_vector(model.dense.b);
}

template <typename Emit>
void for_each_parameter_mut(SenModel& model, Emit&& emit) {
  for (auto& kernel : model.conv) {
    for (auto& plane : kernel.w)
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) emit(plane(r, c));
    emit(kernel.bias);
  }
  auto emit_matrix = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) emit(m(r, c));
  };
  auto emit_vector = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) emit(v(i));
  };
  auto& l = model.lstm;
  emit_matrix(l.wi); emit_matrix(l.wf); emit_matrix(l.wg); emit_matrix(l.wo);
  emit_matrix(l.ui); emit_matrix(l.uf); emit_matrix(l.ug); emit_matrix(l.uo);
  emit_vector(l.bi); emit_vector(l.bf); emit_vector(l.bg); emit_vector(l.bo);
  emit_matrix(model.dense.w);
  emit_vector(model.dense.b);
}

}  // namespace

Eigen::VectorXd flatten_parameters(const SenModel& model) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count(model.meta)));
  Eigen::Index k = 0;
  for_each_parameter(model, [&](double v) { flat(k++) = v; });
  return flat;
}

void unflatten_parameters(const Eigen::VectorXd& flat, SenModel& model) {
  const auto expected = static_cast<Eigen::Index>(parameter_count(model.meta));
  if (flat.size() != expected)
    throw_invalid_input("flat parameter vector has size " +
                        std::to_string(flat.size()) + ", expected " +
                        std::to_string(expected));
  Eigen::Index k = 0;
  for_each_parameter_mut(model, [&](double& v) { v = flat(k++); });
}

Eigen::VectorXd flatten_gradients(const SenGradients& grads, const SenMeta& meta) {
  // Gradients share the model layout; reuse the same walk via a shim model.
  SenModel shim;
  shim.meta = meta;
  shim.conv = grads.conv;
  shim.lstm = grads.lstm;
  shim.dense = grads.dense;
  return flatten_parameters(shim);
}

void save_checkpoint(const SenModel& model, const std::string& path) {
  const auto& meta = model.meta;
  json j;
  j["meta"] = {
      {"n", meta.n},
      {"m", meta.m},
      {"window", meta.window},
      {"hidden", meta.hidden},
      {"conv_kernels", meta.conv_kernels},
      {"norm_center", {meta.norm.center.x, meta.norm.center.y, meta.norm.center.z}},
      {"norm_scale", meta.norm.scale},
      {"colon_digest", meta.colon_digest},
      {"config_digest", meta.config_digest},
  };

  json weights;
  json conv_w = json::array();
  json conv_b = json::array();
  for (const auto& kernel : model.conv) {
    json planes = json::array();
    for (const auto& plane : kernel.w) {
      json rows = json::array();
      for (int r = 0; r < 5; ++r) {
        json row = json::array();
        for (int c = 0; c < 5; ++c) row.push_back(plane(r, c));
        rows.push_back(std::move(row));
      }
      planes.push_back(std::move(rows));
    }
    conv_w.push_back(std::move(planes));
    conv_b.push_back(kernel.bias);
  }
  weights["conv_w"] = std::move(conv_w);
  weights["conv_b"] = std::move(conv_b);
  weights["lstm_wi"] = matrix_to_json(model.lstm.wi);
  weights["lstm_wf"] = matrix_to_json(model.lstm.wf);
  weights["lstm_wg"] = matrix_to_json(model.lstm.wg);
  weights["lstm_wo"] = matrix_to_json(model.lstm.wo);
  weights["lstm_ui"] = matrix_to_json(model.lstm.ui);
  weights["lstm_uf"] = matrix_to_json(model.lstm.uf);
  weights["lstm_ug"] = matrix_to_json(model.lstm.ug);
  weights["lstm_uo"] = matrix_to_json(model.lstm.uo);
  weights["lstm_bi"] = vector_to_json(model.lstm.bi);
  weights["lstm_bf"] = vector_to_json(model.lstm.bf);
  weights["lstm_bg"] = vector_to_json(model.lstm.bg);
  weights["lstm_bo"] = vector_to_json(model.lstm.bo);
  weights["dense_w"] = matrix_to_json(model.dense.w);
  weights["dense_b"] = vector_to_json(model.dense.b);
  j["weights"] = std::move(weights);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open checkpoint for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw_io("failed writing checkpoint: " + path);
}

SenModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_io("checkpoint is not valid JSON: " + path + " (" + e.what() + ")");
  }
  if (!j.contains("meta")) throw_io("checkpoint missing 'meta' block");
  if (!j.contains("weights")) throw_io("checkpoint missing 'weights' block");

  SenMeta meta;
  try {
    const auto& jm = j.at("meta");
    meta.n = jm.at("n").get<int>();
    meta.m = jm.at("m").get<int>();
    meta.window = jm.at("window").get<int>();
    meta.hidden = jm.at("hidden").get<int>();
    meta.conv_kernels = jm.at("conv_kernels").get<int>();
    const auto center = jm.at("norm_center").get<std::vector<double>>();
    if (center.size() != 3) throw_io("checkpoint norm_center must have 3 values");
    meta.norm.center = {center[0], center[1], center[2]};
    meta.norm.scale = jm.at("norm_scale").get<double>();
    meta.colon_digest = jm.value("colon_digest", std::string{});
    meta.config_digest = jm.value("config_digest", std::string{});
  } catch (const json::exception& e) {
    throw_io(std::string{"checkpoint meta block is malformed: "} + e.what());
  }
  validate_meta(meta);

  SenModel model;
  model.meta = meta;
  const auto& weights = j.at("weights");
  const int f = meta.lstm_input();
  const int h = meta.hidden;
  const int out = meta.output_dim();

  const auto& conv_w = weight_entry(weights, "conv_w");
  const auto& conv_b = weight_entry(weights, "conv_b");
  if (static_cast<int>(conv_w.size()) != meta.conv_kernels ||
      static_cast<int>(conv_b.size()) != meta.conv_kernels)
    throw_io("checkpoint conv weights do not match conv_kernels=" +
             std::to_string(meta.conv_kernels));
  model.conv.resize(static_cast<std::size_t>(meta.conv_kernels));
  for (int k = 0; k < meta.conv_kernels; ++k) {
    const auto& planes = conv_w[static_cast<std::size_t>(k)];
    if (planes.size() != 3)
      throw_io("checkpoint conv kernel " + std::to_string(k) +
               " must have 3 channel planes");
    auto& kernel = model.conv[static_cast<std::size_t>(k)];
    kernel.w.resize(3);
    for (int ch = 0; ch < 3; ++ch) {
      const auto& rows = planes[static_cast<std::size_t>(ch)];
      if (rows.size() != 5) throw_io("checkpoint conv plane must be 5x5");
      for (int r = 0; r < 5; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (row.size() != 5) throw_io("checkpoint conv plane must be 5x5");
        for (int c = 0; c < 5; ++c)
          kernel.w[static_cast<std::size_t>(ch)](r, c) =
              row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    kernel.bias = conv_b[static_cast<std::size_t>(k)].get<double>();
  }

  auto& l = model.lstm;
  l.wi = matrix_from_json(weight_entry(weights, "lstm_wi"), "lstm_wi", h, f);
  l.wf = matrix_from_json(weight_entry(weights, "lstm_wf"), "lstm_wf", h, f);
  l.wg = matrix_from_json(weight_entry(weights, "lstm_wg"), "lstm_wg", h, f);
  l.wo = matrix_from_json(weight_entry(weights, "lstm_wo"), "lstm_wo", h, f);
  l.ui = matrix_from_json(weight_entry(weights, "lstm_ui"), "lstm_ui", h, h);
  l.uf = matrix_from_json(weight_entry(weights, "lstm_uf"), "lstm_uf", h, h);
  l.ug = matrix_from_json(weight_entry(weights, "lstm_ug"), "lstm_ug", h, h);
  l.uo = matrix_from_json(weight_entry(weights, "lstm_uo"), "lstm_uo", h, h);
  l.bi = vector_from_json(weight_entry(weights, "lstm_bi"), "lstm_bi", h);
  l.bf = vector_from_json(weight_entry(weights, "lstm_bf"), "lstm_bf", h);
  l.bg = vector_from_json(weight_entry(weights, "lstm_bg"), "lstm_bg", h);
  l.bo = vector_from_json(weight_entry(weights, "lstm_bo"), "lstm_bo", h);
  model.dense.w = matrix_from_json(weight_entry(weights, "dense_w"), "dense_w", out, h);
  model.dense.b = vector_from_json(weight_entry(weights, "dense_b"), "dense_b", out);
  return model;
}

}  // namespace coltrack::sen
