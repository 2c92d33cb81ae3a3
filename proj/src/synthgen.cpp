#include "nwsd/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "nwsd/ingest.hpp"

namespace nwsd {

namespace {

const std::array<Modality, 3> kAllModalities = {Modality::rgb, Modality::flow,
                                                Modality::audio};

std::vector<double> affinity_list(const KeyValueConfig& kv, const std::string& key,
                                  int classes) {
  std::vector<double> fallback(classes, 1.0);
  std::vector<double> v = kv.get_double_list(key, fallback);
  if (static_cast<int>(v.size()) != classes)
    throw ConfigError(key + " must list exactly " + std::to_string(classes) +
                      " values");
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ConfigError(key + " values must be finite and >= 0");
  return v;
}

}  // namespace

SynthConfig SynthConfig::from_config(const KeyValueConfig& kv) {
  kv.reject_unknown_keys({"n_videos", "video_len_frames", "fps", "c_verb", "c_noun",
                          "dim_rgb", "dim_flow", "dim_audio", "mean_action_len",
                          "gap_len", "timestamp_noise_sd", "emission_noise_sd",
                          "affinity_verb_rgb", "affinity_verb_flow",
                          "affinity_verb_audio", "affinity_noun_rgb",
                          "affinity_noun_flow", "affinity_noun_audio", "seed"});
  SynthConfig c;
  c.n_videos = static_cast<int>(kv.get_long("n_videos", c.n_videos));
  c.video_len_frames = kv.get_long("video_len_frames", c.video_len_frames);
  c.fps = kv.get_double("fps", c.fps);
  c.c_verb = static_cast<int>(kv.get_long("c_verb", c.c_verb));
  c.c_noun = static_cast<int>(kv.get_long("c_noun", c.c_noun));
  c.dim_rgb = static_cast<int>(kv.get_long("dim_rgb", c.dim_rgb));
  c.dim_flow = static_cast<int>(kv.get_long("dim_flow", c.dim_flow));
  c.dim_audio = static_cast<int>(kv.get_long("dim_audio", c.dim_audio));
  c.mean_action_len = kv.get_long("mean_action_len", c.mean_action_len);
  c.gap_len = kv.get_long("gap_len", c.gap_len);
  c.timestamp_noise_sd = kv.get_double("timestamp_noise_sd", c.timestamp_noise_sd);
  c.emission_noise_sd = kv.get_double("emission_noise_sd", c.emission_noise_sd);
  c.seed = kv.get_u64("seed", c.seed);
  c.affinity_verb = {affinity_list(kv, "affinity_verb_rgb", c.c_verb),
                     affinity_list(kv, "affinity_verb_flow", c.c_verb),
                     affinity_list(kv, "affinity_verb_audio", c.c_verb)};
  c.affinity_noun = {affinity_list(kv, "affinity_noun_rgb", c.c_noun),
                     affinity_list(kv, "affinity_noun_flow", c.c_noun),
                     affinity_list(kv, "affinity_noun_audio", c.c_noun)};
  c.validate();
  return c;
}

std::vector<std::pair<std::string, std::string>> SynthConfig::key_help() {
  return {
      {"n_videos", "12"},
      {"video_len_frames", "120"},
      {"fps", "5"},
      {"c_verb", "6"},
      {"c_noun", "6"},
      {"dim_rgb", "16"},
      {"dim_flow", "16"},
      {"dim_audio", "4"},
      {"mean_action_len", "15 (frames)"},
      {"gap_len", "5 (frames)"},
      {"timestamp_noise_sd", "0.6 (seconds)"},
      {"emission_noise_sd", "1"},
      {"affinity_verb_rgb", "1,1,... (c_verb values)"},
      {"affinity_verb_flow", "1,1,..."},
      {"affinity_verb_audio", "1,1,..."},
      {"affinity_noun_rgb", "1,1,... (c_noun values)"},
      {"affinity_noun_flow", "1,1,..."},
      {"affinity_noun_audio", "1,1,..."},
      {"seed", "7"},
  };
}

void SynthConfig::validate() const {
  if (n_videos < 1) throw ConfigError("n_videos must be >= 1");
  if (video_len_frames < 1) throw ConfigError("video_len_frames must be >= 1");
  if (!(fps > 0.0)) throw ConfigError("fps must be > 0");
  if (c_verb < 1 || c_noun < 1) throw ConfigError("class counts must be >= 1");
  if (dim_rgb < 1 || dim_flow < 1 || dim_audio < 1)
    throw ConfigError("feature dims must be >= 1");
  if (mean_action_len < 1) throw ConfigError("mean_action_len must be >= 1");
  if (gap_len < 0) throw ConfigError("gap_len must be >= 0");
  if (timestamp_noise_sd < 0.0 || emission_noise_sd < 0.0)
    throw ConfigError("noise standard deviations must be >= 0");
  // empty affinity lists mean "all ones"
  auto check = [](const std::vector<double>& v, int classes, const char* what) {
    if (v.empty()) return;
    if (static_cast<int>(v.size()) != classes)
      throw ConfigError(std::string(what) + " affinity lists must carry one value per class");
    for (double x : v)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw ConfigError(std::string(what) + " affinity values must be finite and >= 0");
  };
  for (std::size_t m = 0; m < 3; ++m) {
    check(affinity_verb[m], c_verb, "verb");
    check(affinity_noun[m], c_noun, "noun");
  }
}

namespace {

struct Prototypes {
  // [modality] -> classes x dim
  std::array<Matrix, 3> verb;
  std::array<Matrix, 3> noun;
};

Matrix draw_prototypes(int classes, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix m(classes, dim);
  for (double& v : m.data) v = unit(rng);
  return m;
}

struct Instance {
  long start = 0;
  long end = 0;
  int verb = 0;
  int noun = 0;
};

std::vector<Instance> place_instances(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> len_scale(0.5, 1.5);
  std::uniform_int_distribution<int> verb_pick(0, cfg.c_verb - 1);
  std::uniform_int_distribution<int> noun_pick(0, cfg.c_noun - 1);
  std::vector<Instance> out;
  long cursor = cfg.gap_len;
  while (true) {
    long len = std::lround(len_scale(rng) * static_cast<double>(cfg.mean_action_len));
    len = std::max<long>(1, len);
    if (cursor + len > cfg.video_len_frames) break;
    Instance inst;
    inst.start = cursor;
    inst.end = cursor + len;
    inst.verb = verb_pick(rng);
    inst.noun = noun_pick(rng);
    out.push_back(inst);
    cursor = inst.end + cfg.gap_len;
  }
  return out;
}

// Jittered starts, clamped into disjoint windows around each true start
// (half the spacing to each neighbor, minus a small margin) so the noisy
// times stay strictly increasing and inside [0, video_end).
std::vector<double> jitter_starts(const std::vector<Instance>& instances,
                                  const SynthConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, cfg.timestamp_noise_sd);
  const double margin = 0.1 / cfg.fps;
  const double video_end = static_cast<double>(cfg.video_len_frames) / cfg.fps;
  std::vector<double> out(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const double s = static_cast<double>(instances[i].start) / cfg.fps;
    double lo = i == 0 ? 0.0
                       : s - (s - static_cast<double>(instances[i - 1].start) / cfg.fps) / 2.0 +
                             margin;
    double hi = i + 1 == instances.size()
                    ? video_end - margin
                    : s + (static_cast<double>(instances[i + 1].start) / cfg.fps - s) / 2.0 -
                          margin;
    lo = std::max(lo, 0.0);
    double t = s + (cfg.timestamp_noise_sd > 0.0 ? noise(rng) : 0.0);
    out[i] = std::clamp(t, lo, std::max(lo, hi));
  }
  return out;
}

int modality_dim(const SynthConfig& cfg, Modality m) {
  switch (m) {
    case Modality::rgb: return cfg.dim_rgb;
    case Modality::flow: return cfg.dim_flow;
    case Modality::audio: return cfg.dim_audio;
  }
  throw StateError("unreachable modality tag");
}

}  // namespace

std::vector<Detection> gt_as_detections(const std::vector<GroundTruthInstance>& gt) {
  std::vector<Detection> dets;
  dets.reserve(gt.size() * 2);
  for (const GroundTruthInstance& g : gt) {
    Detection d;
    d.video_id = g.video_id;
    d.t_start = g.t_start;
    d.t_end = g.t_end;
    d.intensity = 1.0;
    d.task = Task::verb;
    d.class_a = g.verb;
    dets.push_back(d);
    d.task = Task::noun;
    d.class_a = g.noun;
    dets.push_back(d);
  }
  return dets;
}

EvalReport oracle_report(const std::vector<GroundTruthInstance>& gt) {
  return evaluate(gt_as_detections(gt), gt);
}

SynthDataset generate(const SynthConfig& config_in, const std::string& out_dir) {
  config_in.validate();
  SynthConfig config = config_in;
  for (std::size_t m = 0; m < 3; ++m) {
    if (config.affinity_verb[m].empty())
      config.affinity_verb[m].assign(static_cast<std::size_t>(config.c_verb), 1.0);
    if (config.affinity_noun[m].empty())
      config.affinity_noun[m].assign(static_cast<std::size_t>(config.c_noun), 1.0);
  }
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "features");

  std::mt19937_64 proto_rng(config.seed);
  Prototypes protos;
  for (std::size_t m = 0; m < 3; ++m) {
    const int dim = modality_dim(config, kAllModalities[m]);
    protos.verb[m] = draw_prototypes(config.c_verb, dim, proto_rng);
    protos.noun[m] = draw_prototypes(config.c_noun, dim, proto_rng);
  }

  SynthDataset ds;
  ds.features_dir = (fs::path(out_dir) / "features").string();
  ds.annotations_csv = (fs::path(out_dir) / "annotations.csv").string();
  ds.ground_truth_csv = (fs::path(out_dir) / "ground_truth.csv").string();
  ds.oracle_detections = (fs::path(out_dir) / "oracle_detections.jsonl").string();
  ds.manifest = (fs::path(out_dir) / "manifest.txt").string();

  std::vector<NarrationAnnotation> annotations;
  std::vector<GroundTruthInstance> ground_truth;

  for (int vi = 0; vi < config.n_videos; ++vi) {
    char name[16];
    std::snprintf(name, sizeof(name), "v%03d", vi);
    const std::string video_id = name;
    std::mt19937_64 rng(config.seed ^
                        (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(vi + 1)));

    const std::vector<Instance> instances = place_instances(config, rng);
    const std::vector<double> times = jitter_starts(instances, config, rng);

    // frame -> (verb, noun), -1 for background
    std::vector<std::pair<int, int>> frame_class(config.video_len_frames, {-1, -1});
    for (const Instance& inst : instances)
      for (long f = inst.start; f < inst.end; ++f)
        frame_class[f] = {inst.verb, inst.noun};

    VideoFeatures vf;
    vf.video_id = video_id;
    vf.fps = config.fps;
    std::normal_distribution<double> noise(0.0, config.emission_noise_sd);
    for (std::size_t m = 0; m < 3; ++m) {
      const Modality mod = kAllModalities[m];
      const int dim = modality_dim(config, mod);
      const long len =
          mod == Modality::audio
              ? std::max<long>(1, std::lround(config.video_len_frames / config.fps))
              : config.video_len_frames;
      Matrix data(static_cast<int>(len), dim);
      for (long t = 0; t < len; ++t) {
        // audio samples once per second; read the class at the window center
        const long frame =
            mod == Modality::audio
                ? std::min<long>(config.video_len_frames - 1,
                                 static_cast<long>((t + 0.5) * config.fps))
                : t;
        const auto [verb, noun] = frame_class[frame];
        for (int jd = 0; jd < dim; ++jd) {
          double v = config.emission_noise_sd > 0.0 ? noise(rng) : 0.0;
          if (verb >= 0) v += config.affinity_verb[m][verb] * protos.verb[m].at(verb, jd);
          if (noun >= 0) v += config.affinity_noun[m][noun] * protos.noun[m].at(noun, jd);
          data.at(static_cast<int>(t), jd) = v;
        }
      }
      vf.tracks.push_back({mod, std::move(data)});
    }
    write_features((fs::path(ds.features_dir) / (video_id + ".nwsd")).string(), vf);

    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Instance& inst = instances[i];
      GroundTruthInstance g;
      g.video_id = video_id;
      g.t_start = static_cast<double>(inst.start) / config.fps;
      g.t_end = static_cast<double>(inst.end) / config.fps;
      g.verb = inst.verb;
      g.noun = inst.noun;
      ground_truth.push_back(g);
      annotations.push_back({video_id, times[i], inst.verb, inst.noun});
    }
    ds.video_ids.push_back(video_id);
    ds.instances_per_video.push_back(static_cast<long>(instances.size()));
    ds.total_instances += static_cast<long>(instances.size());
  }

  write_annotations_csv(ds.annotations_csv, annotations);
  write_ground_truth_csv(ds.ground_truth_csv, ground_truth);
  write_detections_jsonl(ds.oracle_detections, gt_as_detections(ground_truth));

  std::ofstream manifest(ds.manifest, std::ios::binary);
  if (!manifest) throw IoError("cannot open " + ds.manifest + " for writing");
  auto kv = [&manifest](const std::string& k, const std::string& v) {
    manifest << k << " = " << v << "\n";
  };
  kv("n_videos", std::to_string(config.n_videos));
  kv("video_len_frames", std::to_string(config.video_len_frames));
  kv("fps", format_double(config.fps));
  kv("c_verb", std::to_string(config.c_verb));
  kv("c_noun", std::to_string(config.c_noun));
  kv("dim_rgb", std::to_string(config.dim_rgb));
  kv("dim_flow", std::to_string(config.dim_flow));
  kv("dim_audio", std::to_string(config.dim_audio));
  kv("mean_action_len", std::to_string(config.mean_action_len));
  kv("gap_len", std::to_string(config.gap_len));
  kv("timestamp_noise_sd", format_double(config.timestamp_noise_sd));
  kv("emission_noise_sd", format_double(config.emission_noise_sd));
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += format_double(v[i]);
    }
    return s;
  };
  kv("affinity_verb_rgb", join(config.affinity_verb[0]));
  kv("affinity_verb_flow", join(config.affinity_verb[1]));
  kv("affinity_verb_audio", join(config.affinity_verb[2]));
  kv("affinity_noun_rgb", join(config.affinity_noun[0]));
  kv("affinity_noun_flow", join(config.affinity_noun[1]));
  kv("affinity_noun_audio", join(config.affinity_noun[2]));
  kv("seed", std::to_string(config.seed));
  kv("total_instances", std::to_string(ds.total_instances));
  for (std::size_t i = 0; i < ds.video_ids.size(); ++i)
    kv("instances_" + ds.video_ids[i], std::to_string(ds.instances_per_video[i]));
  if (!manifest.good()) throw IoError("failed writing " + ds.manifest);
  return ds;
}

}  // namespace nwsd
