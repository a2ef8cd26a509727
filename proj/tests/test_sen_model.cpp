#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "coltrack/sen/model.hpp"
#include "coltrack/sen/network.hpp"
#include "helpers.hpp"

using namespace coltrack;
using namespace coltrack::sen;
namespace th = coltrack::testing;
namespace fs = std::filesystem;

namespace {

SenMeta small_meta() {
  SenMeta meta;
  meta.n = 4;
  meta.m = 5;
  meta.window = 3;
  meta.hidden = 8;
  meta.conv_kernels = 2;
  meta.norm = {{10.0, -4.0, 2.0}, 320.0};
  meta.colon_digest = "feedc0de12345678";
  meta.config_digest = "0123456789abcdef";
  return meta;
}

std::vector<PlaneStack> random_window(Rng& rng, const SenMeta& meta) {
  std::vector<PlaneStack> window;
  for (int t = 0; t < meta.window; ++t) {
    PlaneStack planes;
    for (auto& p : planes) {
      p.resize(meta.plane_rows(), meta.plane_cols());
      for (Eigen::Index r = 0; r < p.rows(); ++r)
        for (Eigen::Index c = 0; c < p.cols(); ++c)
          p(r, c) = rng.uniform(-1.0, 1.0);
    }
    window.push_back(planes);
  }
  return window;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("coltrack_model_test_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("sen_model") {

TEST_CASE("flatten and unflatten are inverse bijections") {
  const auto model = init_model(small_meta(), 11);
  const Eigen::VectorXd flat = flatten_parameters(model);
  CHECK(static_cast<std::size_t>(flat.size()) == parameter_count(model.meta));

  SenModel other = init_model(small_meta(), 999);
  unflatten_parameters(flat, other);
  const Eigen::VectorXd again = flatten_parameters(other);
  CHECK((again - flat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unflatten rejects a wrong-sized vector") {
  auto model = init_model(small_meta(), 12);
  Eigen::VectorXd flat = flatten_parameters(model);
  flat.conservativeResize(flat.size() - 1);
  CHECK_COLTRACK_ERROR(unflatten_parameters(flat, model), InvalidInput);
}

TEST_CASE("init_model is deterministic per seed and varies across seeds") {
  const auto a = flatten_parameters(init_model(small_meta(), 7));
  const auto b = flatten_parameters(init_model(small_meta(), 7));
  const auto c = flatten_parameters(init_model(small_meta(), 8));
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("init_model validates its meta") {
  SenMeta bad = small_meta();
  bad.hidden = 0;
  CHECK_COLTRACK_ERROR(init_model(bad, 1), InvalidInput);
  bad = small_meta();
  bad.norm.scale = 0.0;
  CHECK_COLTRACK_ERROR(init_model(bad, 1), InvalidInput);
}

TEST_CASE("checkpoint round trip preserves the forward pass bitwise") {
  TempDir tmp;
  const std::string path = (tmp.path / "model.json").string();
  const auto model = init_model(small_meta(), 13);

  Rng rng(81);
  const auto window = random_window(rng, model.meta);
  const auto before = forward(model, window);

  save_checkpoint(model, path);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.meta.colon_digest == model.meta.colon_digest);
  CHECK(loaded.meta.config_digest == model.meta.config_digest);

  const auto after = forward(loaded, window);
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(after[i].x == before[i].x);
    CHECK(after[i].y == before[i].y);
    CHECK(after[i].z == before[i].z);
  }
}

TEST_CASE("loading a checkpoint with a missing weight names it") {
  TempDir tmp;
  const std::string path = (tmp.path / "model.json").string();
  save_checkpoint(init_model(small_meta(), 14), path);

  nlohmann::json j;
  {
    std::ifstream in(path);
    in >> j;
  }
  j["weights"].erase("lstm_uf");
  {
    std::ofstream out(path);
    out << j;
  }

  try {
    load_checkpoint(path);
    FAIL_CHECK("expected an io error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Io);
    CHECK(std::string(e.what()).find("lstm_uf") != std::string::npos);
  }
}

TEST_CASE("loading a checkpoint with a wrong-shaped weight names it") {
  TempDir tmp;
  const std::string path = (tmp.path / "model.json").string();
  save_checkpoint(init_model(small_meta(), 15), path);

  nlohmann::json j;
  {
    std::ifstream in(path);
    in >> j;
  }
  // Claim the dense matrix is one row shorter than the meta requires.
  j["weights"]["dense_w"]["shape"][0] = 14;
  {
    std::ofstream out(path);
    out << j;
  }

  try {
    load_checkpoint(path);
    FAIL_CHECK("expected an io error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Io);
    CHECK(std::string(e.what()).find("dense_w") != std::string::npos);
  }
}

TEST_CASE("loading rejects truncated files and missing paths") {
  TempDir tmp;
  const std::string path = (tmp.path / "broken.json").string();
  {
    std::ofstream out(path);
    out << "{\"meta\": {\"n\": 4,";
  }
  CHECK_COLTRACK_ERROR(load_checkpoint(path), Io);
  CHECK_COLTRACK_ERROR(load_checkpoint((tmp.path / "absent.json").string()), Io);
}

TEST_CASE("parameter_count matches the documented layout") {
  const SenMeta meta = small_meta();
  const std::size_t conv = static_cast<std::size_t>(meta.conv_kernels) * (3 * 25 + 1);
  const std::size_t input = static_cast<std::size_t>(meta.lstm_input());
  const std::size_t h = static_cast<std::size_t>(meta.hidden);
  const std::size_t lstm = 4 * (h * input + h * h + h);
  const std::size_t dense =
      static_cast<std::size_t>(meta.output_dim()) * h + meta.output_dim();
  CHECK(parameter_count(meta) == conv + lstm + dense);
}

}  // TEST_SUITE
