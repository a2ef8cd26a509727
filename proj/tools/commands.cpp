#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "coltrack/errors.hpp"
#include "coltrack/evaluation.hpp"
#include "coltrack/rng.hpp"
#include "coltrack/sen/model.hpp"
#include "coltrack/sequence_io.hpp"
#include "coltrack/tracking.hpp"

namespace coltrack::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream ids forked from the master seed, one block per consumer.
constexpr std::uint64_t kTrainRunStream = 100;
constexpr std::uint64_t kEvalRunStream = 200;
constexpr std::uint64_t kTrainDriftStream = 300;
constexpr std::uint64_t kEvalDriftStream = 400;
constexpr std::uint64_t kWeightStream = 500;

std::string path_in(const PipelineConfig& c, const std::string& name) {
  return (fs::path(c.out_dir) / name).string();
}

std::string run_name(const char* kind, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%02d.jsonl", kind, index);
  return buf;
}

std::string estimates_name(const std::string& estimator, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "estimates_%s_eval_%02d.jsonl",
                estimator.c_str(), index);
  return buf;
}

void check_digest(const std::string& artifact, const char* which,
                  const std::string& found, const std::string& expected) {
  if (found != expected)
    throw_configuration(artifact + " carries " + which + " " + found +
                        " but the current configuration expects " + expected);
}

ColonModel load_colon(const PipelineConfig& c, std::string* digest) {
  ColonModel model = read_colon_model(path_in(c, "colon.json"));
  if (digest) *digest = colon_model_digest(model);
  return model;
}

/// Kinect frame -> CT frame from the labeled landmark pairs.
RigidTransform recover_kinect(const std::vector<LandmarkPair>& landmarks) {
  if (landmarks.size() < 3)
    throw_invalid_input("need at least 3 landmark pairs, got " +
                        std::to_string(landmarks.size()));
  std::vector<Point3> sensor, ct;
  sensor.reserve(landmarks.size());
  ct.reserve(landmarks.size());
  for (const auto& lm : landmarks) {
    sensor.push_back(lm.sensor);
    ct.push_back(lm.ct);
  }
  return procrustes(sensor, ct);
}

void validate_estimator(const std::string& estimator) {
  if (estimator != "sen" && estimator != "rigid" && estimator != "oracle")
    throw_configuration("tracker.estimator must be sen, rigid or oracle, got '" +
                        estimator + "'");
}

StoredSequence load_eval_sequence(const PipelineConfig& c, int index,
                                  const std::string& cfg_digest,
                                  const std::string& colon_digest) {
  const std::string path = path_in(c, run_name("eval", index));
  StoredSequence stored = read_sequence(path);
  check_digest(path, "config digest", stored.header.config_digest, cfg_digest);
  check_digest(path, "colon digest", stored.header.colon_digest, colon_digest);
  return stored;
}

}  // namespace

void cmd_simulate(const PipelineConfig& config) {
  if (config.train_runs <= 0 || config.eval_runs <= 0)
    throw Error(ErrorCategory::EmptyDataset,
                "run counts must be positive, got train_runs=" +
                    std::to_string(config.train_runs) +
                    " eval_runs=" + std::to_string(config.eval_runs));

  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw_io("cannot create output directory " + config.out_dir + ": " +
                   ec.message());

  const ColonModel model = generate_colon(config.colon_seed);
  const std::string colon_digest = colon_model_digest(model);
  const std::string cfg_digest = config_digest(config);

  write_colon_model(path_in(config, "colon.json"), model);
  const MarkerSet markers = place_markers(model);
  write_markers(path_in(config, "markers.json"), markers, colon_digest);

  const RigidTransform em = config.em_offset.transform();
  const RigidTransform kinect = config.kinect_offset.transform();
  Rng master(config.seed);

  auto write_runs = [&](const char* kind, int count, std::uint64_t run_stream,
                        std::uint64_t drift_stream) {
    for (int i = 0; i < count; ++i) {
      DeformationParams params = config.deformation;
      params.noise_seed = master.fork(drift_stream + static_cast<std::uint64_t>(i));
      const InsertionSequence sequence = simulate_retraction(
          model, params, config.frame_count, config.noise_mm,
          master.fork(run_stream + static_cast<std::uint64_t>(i)));
      const std::string path = path_in(config, run_name(kind, i));
      write_sequence(path, sequence, model, em, kinect, cfg_digest,
                     colon_digest);
      std::cout << "wrote " << path << " (" << sequence.frames.size()
                << " frames)\n";
    }
  };

  std::cout << "colon total length " << model.total_length
            << " mm, digest " << colon_digest << "\n";
  write_runs("train", config.train_runs, kTrainRunStream, kTrainDriftStream);
  write_runs("eval", config.eval_runs, kEvalRunStream, kEvalDriftStream);
  std::cout << "config digest " << cfg_digest << "\n";
}

void cmd_train(const PipelineConfig& config) {
  std::string colon_digest;
  const ColonModel model = load_colon(config, &colon_digest);
  const std::string cfg_digest = config_digest(config);

  sen::TrainingDataset dataset;
  dataset.sequences.reserve(static_cast<std::size_t>(config.train_runs));
  for (int i = 0; i < config.train_runs; ++i) {
    const std::string path = path_in(config, run_name("train", i));
    const StoredSequence stored = read_sequence(path);
    check_digest(path, "config digest", stored.header.config_digest, cfg_digest);
    check_digest(path, "colon digest", stored.header.colon_digest, colon_digest);
    if (stored.frames.empty()) throw_invalid_input(path + " holds no frames");

    const RigidTransform kinect = recover_kinect(stored.header.landmarks);
    const RigidTransform em = register_first_frame(
        stored.frames.front().scope, model, config.icp,
        config.icp_target_step_mm);

    sen::TrainingSequence sequence;
    sequence.frames.reserve(stored.frames.size());
    sequence.truths.reserve(stored.frames.size());
    for (const auto& frame : stored.frames) {
      sequence.frames.push_back(apply_transform(em, frame.scope));
      sequence.truths.push_back(apply_transform(kinect, frame.colon).points);
    }
    dataset.sequences.push_back(std::move(sequence));
  }

  sen::TrainConfig train_config = config.train;
  train_config.seed = Rng(config.seed).fork(kWeightStream);
  train_config.colon_digest = colon_digest;
  train_config.config_digest = cfg_digest;

  const sen::TrainResult result = sen::train(dataset, config.arch, train_config);

  for (std::size_t e = 0; e < result.history.size(); ++e)
    std::cout << "epoch " << e << ": train " << result.history[e].train_loss
              << " val " << result.history[e].val_loss << "\n";
  std::cout << "best epoch " << result.best_epoch << "\n";

  const std::string checkpoint_path = path_in(config, "checkpoint.json");
  sen::save_checkpoint(result.model, checkpoint_path);
  std::cout << "wrote " << checkpoint_path << "\n";

  json history = json::array();
  for (const auto& stats : result.history)
    history.push_back(
        {{"train_loss", stats.train_loss}, {"val_loss", stats.val_loss}});
  const json history_doc{{"config_digest", cfg_digest},
                         {"best_epoch", result.best_epoch},
                         {"epochs", std::move(history)}};
  const std::string history_path = path_in(config, "history.json");
  std::ofstream out(history_path, std::ios::binary);
  if (!out) throw_io("cannot open for writing: " + history_path);
  out << history_doc.dump(2) << "\n";
  if (!out) throw_io("failed writing history: " + history_path);
  std::cout << "wrote " << history_path << "\n";
}

void cmd_track(const PipelineConfig& config) {
  validate_estimator(config.estimator);
  std::string colon_digest;
  const ColonModel model = load_colon(config, &colon_digest);
  const std::string cfg_digest = config_digest(config);

  sen::SenModel net;
  if (config.estimator == "sen") {
    const std::string checkpoint_path = path_in(config, "checkpoint.json");
    net = sen::load_checkpoint(checkpoint_path);
    check_digest(checkpoint_path, "config digest", net.meta.config_digest,
                 cfg_digest);
    check_digest(checkpoint_path, "colon digest", net.meta.colon_digest,
                 colon_digest);
  }

  const ColonShape rest = model.rest_shape;

  for (int j = 0; j < config.eval_runs; ++j) {
    const StoredSequence stored =
        load_eval_sequence(config, j, cfg_digest, colon_digest);
    if (stored.frames.empty())
      throw_invalid_input(path_in(config, run_name("eval", j)) +
                          " holds no frames");
    if (stored.header.m != static_cast<int>(rest.size()))
      throw_configuration("sequence estimates " +
                          std::to_string(stored.header.m) +
                          " colon points but the model rest shape has " +
                          std::to_string(rest.size()));

    const RigidTransform em = register_first_frame(
        stored.frames.front().scope, model, config.icp,
        config.icp_target_step_mm);

    std::unique_ptr<Tracker> tracker;
    if (config.estimator == "sen") {
      tracker = std::make_unique<Tracker>(net, rest, em);
    } else if (config.estimator == "rigid") {
      auto estimator = [points = rest.points](
                           const std::vector<ColonoscopeShape>&) {
        return points;
      };
      tracker = std::make_unique<Tracker>(estimator, stored.header.n,
                                          config.arch.window, rest, em);
    } else {
      // Ground-truth oracle: replays the stored per-frame colon truth
      // (mapped into CT via the landmark pairs). Tracker calls the
      // estimator exactly once per pushed frame, in order.
      const RigidTransform kinect = recover_kinect(stored.header.landmarks);
      std::vector<std::vector<Point3>> truths;
      truths.reserve(stored.frames.size());
      for (const auto& frame : stored.frames)
        truths.push_back(apply_transform(kinect, frame.colon).points);
      auto cursor = std::make_shared<std::size_t>(0);
      auto estimator = [truths = std::move(truths),
                        cursor](const std::vector<ColonoscopeShape>&) {
        const std::size_t t = std::min(*cursor, truths.size() - 1);
        ++*cursor;
        return truths[t];
      };
      tracker = std::make_unique<Tracker>(estimator, stored.header.n,
                                          config.arch.window, rest, em);
    }

    if (config.reregister) {
      const double length = arclength(model.centerline);
      const auto count = static_cast<std::size_t>(
          std::max(2.0, std::round(length / config.icp_target_step_mm) + 1.0));
      tracker->enable_reregistration(resample_uniform(model.centerline, count),
                                     config.icp);
    }

    std::vector<ColonoscopeShape> frames;
    frames.reserve(stored.frames.size());
    for (const auto& frame : stored.frames) frames.push_back(frame.scope);
    const std::vector<TipEstimate> estimates = tracker->run_sequence(frames);

    std::vector<TipRecord> records;
    records.reserve(estimates.size());
    for (std::size_t t = 0; t < estimates.size(); ++t)
      records.push_back({stored.frames[t].time_index,
                         estimates[t].colon_index, estimates[t].position,
                         estimates[t].distance_to_estimate});

    EstimatesHeader header;
    header.config_digest = cfg_digest;
    header.colon_digest = colon_digest;
    header.estimator = config.estimator;
    header.sequence_file = run_name("eval", j);
    header.frame_count = static_cast<int>(records.size());
    const std::string path = path_in(config, estimates_name(config.estimator, j));
    write_estimates(path, header, records);
    std::cout << "wrote " << path << "\n";
  }
}

void cmd_eval(const PipelineConfig& config) {
  validate_estimator(config.estimator);
  std::string colon_digest;
  (void)load_colon(config, &colon_digest);
  const std::string cfg_digest = config_digest(config);

  const std::string markers_path = path_in(config, "markers.json");
  const StoredMarkers stored_markers = read_markers(markers_path);
  check_digest(markers_path, "colon digest", stored_markers.colon_digest,
               colon_digest);

  std::vector<std::vector<MarkerError>> runs;
  runs.reserve(static_cast<std::size_t>(config.eval_runs));
  for (int j = 0; j < config.eval_runs; ++j) {
    const StoredSequence sequence =
        load_eval_sequence(config, j, cfg_digest, colon_digest);
    const std::string est_path =
        path_in(config, estimates_name(config.estimator, j));
    const StoredEstimates estimates = read_estimates(est_path);
    check_digest(est_path, "config digest", estimates.header.config_digest,
                 cfg_digest);
    check_digest(est_path, "colon digest", estimates.header.colon_digest,
                 colon_digest);
    if (estimates.header.estimator != config.estimator)
      throw_configuration(est_path + " was produced by estimator '" +
                          estimates.header.estimator +
                          "', current configuration expects '" +
                          config.estimator + "'");
    if (estimates.records.size() != sequence.frames.size())
      throw_configuration(est_path + " holds " +
                          std::to_string(estimates.records.size()) +
                          " records but the sequence has " +
                          std::to_string(sequence.frames.size()) + " frames");

    std::vector<TipEstimate> tips;
    tips.reserve(estimates.records.size());
    std::vector<double> truth_arcs;
    truth_arcs.reserve(sequence.frames.size());
    for (std::size_t t = 0; t < estimates.records.size(); ++t) {
      TipEstimate tip;
      tip.position = estimates.records[t].position;
      tip.colon_index = estimates.records[t].colon_index;
      tip.distance_to_estimate = estimates.records[t].distance_mm;
      tip.time_index = estimates.records[t].time_index;
      tips.push_back(std::move(tip));
      truth_arcs.push_back(sequence.frames[t].tip_arclength);
    }
    runs.push_back(marker_errors(tips, truth_arcs, stored_markers.markers));
  }

  const TrackingReport report = aggregate(runs);
  const std::string report_path =
      path_in(config, "report_" + config.estimator + ".json");
  write_report_json(report_path, report, cfg_digest);
  std::cout << format_report_table(report);
  std::cout << "wrote " << report_path << "\n";
}

void cmd_report(const PipelineConfig& config) {
  validate_estimator(config.estimator);
  const std::string report_path =
      path_in(config, "report_" + config.estimator + ".json");
  const StoredReport stored = read_report(report_path);
  check_digest(report_path, "config digest", stored.config_digest,
               config_digest(config));

  const std::string csv_path =
      path_in(config, "report_" + config.estimator + ".csv");
  write_report_csv(csv_path, stored.report);

  const std::string table = format_report_table(stored.report);
  const std::string table_path =
      path_in(config, "report_" + config.estimator + ".txt");
  std::ofstream out(table_path, std::ios::binary);
  if (!out) throw_io("cannot open for writing: " + table_path);
  out << table;
  if (!out) throw_io("failed writing table: " + table_path);

  std::cout << table;
  std::cout << "wrote " << csv_path << "\n";
  std::cout << "wrote " << table_path << "\n";
}

}  // namespace coltrack::cli
