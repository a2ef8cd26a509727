#include "coltrack/sequence_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "coltrack/errors.hpp"

namespace coltrack {
namespace {

using nlohmann::json;

json point_to_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

Point3 point_from_json(const json& j, const char* context) {
  if (!j.is_array() || j.size() != 3)
    throw_io(std::string{"expected [x,y,z] for "} + context);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json points_to_json(const std::vector<Point3>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(point_to_json(p));
  return arr;
}

std::vector<Point3> points_from_json(const json& j, const char* context) {
  if (!j.is_array()) throw_io(std::string{"expected point array for "} + context);
  std::vector<Point3> pts;
  pts.reserve(j.size());
  for (const auto& e : j) pts.push_back(point_from_json(e, context));
  return pts;
}

json model_to_json(const ColonModel& model) {
  json segments = json::array();
  for (const auto& seg : model.segments)
    segments.push_back(
        {{"label", seg.label}, {"s_begin", seg.s_begin}, {"s_end", seg.s_end}});
  json landmarks = json::array();
  for (const auto& lm : model.landmarks)
    landmarks.push_back({{"label", lm.label}, {"pos", point_to_json(lm.position)}});
  return json{
      {"total_length", model.total_length},
      {"centerline", points_to_json(model.centerline)},
      {"segments", std::move(segments)},
      {"landmarks", std::move(landmarks)},
      {"rest_shape", points_to_json(model.rest_shape.points)},
  };
}

json markers_to_json(const std::vector<Marker>& markers) {
  json arr = json::array();
  for (const auto& m : markers)
    arr.push_back({{"label", m.label},
                   {"segment", m.segment},
                   {"s", m.arclength},
                   {"pos", point_to_json(m.position)}});
  return arr;
}

std::vector<Marker> markers_from_json(const json& j) {
  if (!j.is_array()) throw_io("expected marker array");
  std::vector<Marker> markers;
  markers.reserve(j.size());
  for (const auto& e : j) {
    Marker m;
    m.label = e.at("label").get<std::string>();
    m.segment = e.at("segment").get<std::string>();
    m.arclength = e.at("s").get<double>();
    m.position = point_from_json(e.at("pos"), "marker pos");
    markers.push_back(std::move(m));
  }
  return markers;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open for writing: " + path);
  return out;
}

json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_io(path + " is not valid JSON (" + e.what() + ")");
  }
  return j;
}

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw_io(path + ":" + std::to_string(lineno) + " is not valid JSON (" +
             e.what() + ")");
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string hex(16, '0');
  for (int i = 15; i >= 0; --i) {
    hex[static_cast<std::size_t>(i)] = digits[hash & 0xF];
    hash >>= 4;
  }
  return hex;
}

std::string colon_model_digest(const ColonModel& model) {
  return fnv1a_hex(model_to_json(model).dump());
}

void write_colon_model(const std::string& path, const ColonModel& model) {
  auto out = open_out(path);
  out << model_to_json(model).dump(2) << "\n";
  if (!out) throw_io("failed writing colon model: " + path);
}

ColonModel read_colon_model(const std::string& path) {
  const json j = parse_file(path);
  ColonModel model;
  try {
    model.total_length = j.at("total_length").get<double>();
    model.centerline = points_from_json(j.at("centerline"), "centerline");
    for (const auto& e : j.at("segments"))
      model.segments.push_back({e.at("label").get<std::string>(),
                                e.at("s_begin").get<double>(),
                                e.at("s_end").get<double>()});
    for (const auto& e : j.at("landmarks"))
      model.landmarks.push_back({e.at("label").get<std::string>(),
                                 point_from_json(e.at("pos"), "landmark pos")});
    model.rest_shape.points = points_from_json(j.at("rest_shape"), "rest_shape");
  } catch (const json::exception& e) {
    throw_io("colon model " + path + " is malformed: " + e.what());
  }
  return model;
}

void write_markers(const std::string& path, const MarkerSet& markers,
                   const std::string& colon_digest) {
  auto out = open_out(path);
  const json j{{"colon_digest", colon_digest},
               {"markers", markers_to_json(markers.markers)}};
  out << j.dump(2) << "\n";
  if (!out) throw_io("failed writing markers: " + path);
}

StoredMarkers read_markers(const std::string& path) {
  const json j = parse_file(path);
  StoredMarkers stored;
  try {
    stored.colon_digest = j.at("colon_digest").get<std::string>();
    stored.markers.markers = markers_from_json(j.at("markers"));
  } catch (const json::exception& e) {
    throw_io("marker file " + path + " is malformed: " + e.what());
  }
  return stored;
}

void write_sequence(const std::string& path, const InsertionSequence& sequence,
                    const ColonModel& model, const RigidTransform& em_offset,
                    const RigidTransform& kinect_offset,
                    const std::string& config_digest,
                    const std::string& colon_digest) {
  auto out = open_out(path);

  json landmarks = json::array();
  for (const auto& lm : model.landmarks)
    landmarks.push_back({{"label", lm.label},
                         {"ct", point_to_json(lm.position)},
                         {"sensor", point_to_json(kinect_offset.apply(lm.position))}});

  const json header{
      {"type", "header"},
      {"version", 1},
      {"config_digest", config_digest},
      {"colon_digest", colon_digest},
      {"n", sequence.frames.empty() ? 0
                                    : static_cast<int>(sequence.frames[0].scope.size())},
      {"m", sequence.frames.empty()
                ? 0
                : static_cast<int>(sequence.frames[0].colon_truth.size())},
      {"frame_count", sequence.meta.frame_count},
      {"noise_mm", sequence.meta.noise_mm},
      {"seed", sequence.meta.seed},
      {"total_length", model.total_length},
      {"markers", markers_to_json(sequence.markers)},
      {"landmarks", std::move(landmarks)},
  };
  out << header.dump() << "\n";

  for (const auto& frame : sequence.frames) {
    const ColonoscopeShape scope = apply_transform(em_offset, frame.scope);
    const ColonShape colon = apply_transform(kinect_offset, frame.colon_truth);
    json dirs = json::array();
    for (const auto& d : scope.directions)
      dirs.push_back(json::array({d.x, d.y, d.z}));
    const json line{
        {"t", frame.time_index},
        {"scope", {{"points", points_to_json(scope.points)}, {"dirs", std::move(dirs)}}},
        {"colon", points_to_json(colon.points)},
        {"tip_s", frame.tip_arclength},
    };
    out << line.dump() << "\n";
  }
  if (!out) throw_io("failed writing sequence: " + path);
}

StoredSequence read_sequence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open: " + path);

  StoredSequence stored;
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw_io(path + " is empty");
  ++lineno;
  const json header = parse_line(line, path, lineno);
  if (header.value("type", std::string{}) != "header")
    throw_io(path + " does not start with a header line");
  try {
    auto& h = stored.header;
    h.version = header.at("version").get<int>();
    h.config_digest = header.at("config_digest").get<std::string>();
    h.colon_digest = header.at("colon_digest").get<std::string>();
    h.n = header.at("n").get<int>();
    h.m = header.at("m").get<int>();
    h.frame_count = header.at("frame_count").get<int>();
    h.noise_mm = header.at("noise_mm").get<double>();
    h.seed = header.at("seed").get<std::uint64_t>();
    h.total_length = header.at("total_length").get<double>();
    h.markers = markers_from_json(header.at("markers"));
    for (const auto& e : header.at("landmarks"))
      h.landmarks.push_back({e.at("label").get<std::string>(),
                             point_from_json(e.at("ct"), "landmark ct"),
                             point_from_json(e.at("sensor"), "landmark sensor")});
  } catch (const json::exception& e) {
    throw_io("sequence header in " + path + " is malformed: " + e.what());
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse_line(line, path, lineno);
    StoredFrame frame;
    try {
      frame.time_index = j.at("t").get<int>();
      frame.tip_arclength = j.at("tip_s").get<double>();
      const auto& scope = j.at("scope");
      frame.scope.points = points_from_json(scope.at("points"), "scope points");
      for (const auto& d : scope.at("dirs")) {
        const Point3 v = point_from_json(d, "scope dirs");
        frame.scope.directions.push_back(UnitVec3::from(v));
      }
      frame.colon.points = points_from_json(j.at("colon"), "colon");
    } catch (const json::exception& e) {
      throw_io(path + ":" + std::to_string(lineno) + " frame is malformed: " +
               e.what());
    }
    stored.frames.push_back(std::move(frame));
  }

  if (static_cast<int>(stored.frames.size()) != stored.header.frame_count)
    throw_io(path + " holds " + std::to_string(stored.frames.size()) +
             " frames, header declares " +
             std::to_string(stored.header.frame_count));
  return stored;
}

void write_estimates(const std::string& path, const EstimatesHeader& header,
                     const std::vector<TipRecord>& records) {
  auto out = open_out(path);
  const json h{
      {"type", "header"},
      {"config_digest", header.config_digest},
      {"colon_digest", header.colon_digest},
      {"estimator", header.estimator},
      {"sequence_file", header.sequence_file},
      {"frame_count", static_cast<int>(records.size())},
  };
  out << h.dump() << "\n";
  for (const auto& r : records) {
    const json line{
        {"t", r.time_index},
        {"index", r.colon_index},
        {"pos", point_to_json(r.position)},
        {"dist", r.distance_mm},
    };
    out << line.dump() << "\n";
  }
  if (!out) throw_io("failed writing estimates: " + path);
}

StoredEstimates read_estimates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open: " + path);

  StoredEstimates stored;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw_io(path + " is empty");
  ++lineno;
  const json header = parse_line(line, path, lineno);
  if (header.value("type", std::string{}) != "header")
    throw_io(path + " does not start with a header line");
  try {
    stored.header.config_digest = header.at("config_digest").get<std::string>();
    stored.header.colon_digest = header.at("colon_digest").get<std::string>();
    stored.header.estimator = header.at("estimator").get<std::string>();
    stored.header.sequence_file = header.at("sequence_file").get<std::string>();
    stored.header.frame_count = header.at("frame_count").get<int>();
  } catch (const json::exception& e) {
    throw_io("estimates header in " + path + " is malformed: " + e.what());
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse_line(line, path, lineno);
    TipRecord r;
    try {
      r.time_index = j.at("t").get<int>();
      r.colon_index = j.at("index").get<int>();
      r.position = point_from_json(j.at("pos"), "estimate pos");
      r.distance_mm = j.at("dist").get<double>();
    } catch (const json::exception& e) {
      throw_io(path + ":" + std::to_string(lineno) + " record is malformed: " +
               e.what());
    }
    stored.records.push_back(r);
  }
  if (static_cast<int>(stored.records.size()) != stored.header.frame_count)
    throw_io(path + " holds " + std::to_string(stored.records.size()) +
             " records, header declares " +
             std::to_string(stored.header.frame_count));
  return stored;
}

}  // namespace coltrack
