#include "nwsd/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nwsd/config.hpp"

namespace nwsd {

std::string task_name(Task t) {
  switch (t) {
    case Task::verb: return "verb";
    case Task::noun: return "noun";
    case Task::action: return "action";
  }
  throw StateError("unreachable task tag");
}

Task task_from_name(const std::string& s) {
  if (s == "verb") return Task::verb;
  if (s == "noun") return Task::noun;
  if (s == "action") return Task::action;
  throw FormatError("unknown task name '" + s + "'");
}

std::vector<double> ClipLabel::one_hot() const {
  if (hot < 0 || hot >= num_classes) throw ShapeError("one-hot index out of range");
  std::vector<double> y(static_cast<std::size_t>(num_classes), 0.0);
  y[static_cast<std::size_t>(hot)] = 1.0;
  return y;
}

double frames_to_seconds(long frame, double fps) {
  if (fps <= 0.0) throw ConfigError("fps must be positive");
  return static_cast<double>(frame) / fps;
}

long seconds_to_frame(double seconds, double fps) {
  if (fps <= 0.0) throw ConfigError("fps must be positive");
  // Epsilon guards frame-aligned times against f/fps*fps landing a ulp low.
  return static_cast<long>(std::floor(seconds * fps + 1e-9));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double_field(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": not a number: '" + s + "'");
  }
}

int parse_int_field(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": not an integer: '" + s + "'");
  }
}

std::ifstream open_csv(const std::string& path, const std::string& expect_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string header;
  if (!std::getline(in, header)) throw FormatError(path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != expect_header)
    throw FormatError(path + ": expected header '" + expect_header + "', got '" +
                      header + "'");
  return in;
}

}  // namespace

std::vector<NarrationAnnotation> read_annotations_csv(const std::string& path) {
  auto in = open_csv(path, "video_id,time_sec,verb,noun");
  std::vector<NarrationAnnotation> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 4) throw FormatError(where + ": expected 4 fields");
    out.push_back({f[0], parse_double_field(f[1], where), parse_int_field(f[2], where),
                   parse_int_field(f[3], where)});
  }
  return out;
}

void write_annotations_csv(const std::string& path,
                           const std::vector<NarrationAnnotation>& anns) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "video_id,time_sec,verb,noun\n";
  for (const auto& a : anns)
    out << a.video_id << ',' << format_double(a.time) << ',' << a.verb << ','
        << a.noun << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<GroundTruthInstance> read_ground_truth_csv(const std::string& path) {
  auto in = open_csv(path, "video_id,t_start,t_end,verb,noun");
  std::vector<GroundTruthInstance> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 5) throw FormatError(where + ": expected 5 fields");
    GroundTruthInstance g{f[0], parse_double_field(f[1], where),
                          parse_double_field(f[2], where),
                          parse_int_field(f[3], where), parse_int_field(f[4], where)};
    if (!(g.t_end > g.t_start))
      throw FormatError(where + ": t_end must be greater than t_start");
    out.push_back(g);
  }
  return out;
}

void write_ground_truth_csv(const std::string& path,
                            const std::vector<GroundTruthInstance>& gt) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "video_id,t_start,t_end,verb,noun\n";
  for (const auto& g : gt)
    out << g.video_id << ',' << format_double(g.t_start) << ','
        << format_double(g.t_end) << ',' << g.verb << ',' << g.noun << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Detection> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<Detection> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": bad JSON: " + e.what());
    }
    try {
      Detection d;
      d.video_id = j.at("video_id").get<std::string>();
      d.t_start = j.at("t_start").get<double>();
      d.t_end = j.at("t_end").get<double>();
      d.task = task_from_name(j.at("task").get<std::string>());
      d.intensity = j.at("intensity").get<double>();
      const auto& cls = j.at("class");
      if (d.task == Task::action) {
        if (!cls.is_array() || cls.size() != 2)
          throw FormatError(where + ": action class must be a [verb, noun] pair");
        d.class_a = cls.at(0).get<int>();
        d.class_b = cls.at(1).get<int>();
      } else {
        d.class_a = cls.get<int>();
        d.class_b = -1;
      }
      if (!(d.t_end > d.t_start))
        throw FormatError(where + ": t_end must be greater than t_start");
      if (!std::isfinite(d.intensity))
        throw FormatError(where + ": intensity must be finite");
      out.push_back(d);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return out;
}

void write_detections_jsonl(const std::string& path,
                            const std::vector<Detection>& dets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& d : dets) {
    nlohmann::ordered_json j;
    j["video_id"] = d.video_id;
    j["t_start"] = d.t_start;
    j["t_end"] = d.t_end;
    j["task"] = task_name(d.task);
    if (d.task == Task::action)
      j["class"] = nlohmann::ordered_json::array({d.class_a, d.class_b});
    else
      j["class"] = d.class_a;
    j["intensity"] = d.intensity;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<DatasetViolation> validate_dataset(
    const std::vector<NarrationAnnotation>& annotations,
    const std::vector<VideoInfo>& videos, int c_verb, int c_noun) {
  std::map<std::string, const VideoInfo*> by_id;
  for (const auto& v : videos) by_id[v.video_id] = &v;

  std::vector<DatasetViolation> out;
  std::map<std::string, double> last_time;
  std::map<std::string, bool> seen;
  for (const auto& a : annotations) {
    const auto vit = by_id.find(a.video_id);
    if (vit == by_id.end()) {
      out.push_back({a.video_id, "unknown_video", "no feature data for this id"});
      continue;
    }
    if (a.time < 0.0)
      out.push_back({a.video_id, "negative_time", "time " + format_double(a.time)});
    const double dur =
        frames_to_seconds(vit->second->len_frames, vit->second->fps);
    if (a.time >= dur)
      out.push_back({a.video_id, "past_video_end",
                     "time " + format_double(a.time) + " >= duration " +
                         format_double(dur)});
    if (seen[a.video_id] && !(a.time > last_time[a.video_id]))
      out.push_back({a.video_id, "unsorted_time",
                     "time " + format_double(a.time) + " does not strictly increase"});
    seen[a.video_id] = true;
    last_time[a.video_id] = a.time;
    if (a.verb < 0 || a.verb >= c_verb)
      out.push_back({a.video_id, "class_out_of_range",
                     "verb " + std::to_string(a.verb)});
    if (a.noun < 0 || a.noun >= c_noun)
      out.push_back({a.video_id, "class_out_of_range",
                     "noun " + std::to_string(a.noun)});
  }
  return out;
}

}  // namespace nwsd
