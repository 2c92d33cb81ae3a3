#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nwsd/config.hpp"
#include "nwsd/datamodel.hpp"
#include "nwsd/evaluate.hpp"

namespace nwsd {

// Synthetic benchmark: per video, disjoint action instances separated by
// background gaps; frame features are class prototypes (per modality that
// carries the class, see affinity) plus Gaussian noise; narrations are the
// instance starts jittered by Gaussian noise, clamped so they stay strictly
// increasing and inside the video.
struct SynthConfig {
  int n_videos = 12;
  long video_len_frames = 120;
  double fps = 5.0;
  int c_verb = 6;
  int c_noun = 6;
  int dim_rgb = 16;
  int dim_flow = 16;
  int dim_audio = 4;
  long mean_action_len = 15;  // frames; instance lengths ~ U[0.5, 1.5] * mean
  long gap_len = 5;           // background frames between instances
  double timestamp_noise_sd = 0.6;  // seconds
  double emission_noise_sd = 1.0;
  // affinity[modality][class] scales the class prototype in that modality;
  // 0 silences a class there. Defaults to all ones.
  std::array<std::vector<double>, 3> affinity_verb;
  std::array<std::vector<double>, 3> affinity_noun;
  std::uint64_t seed = 7;

  static SynthConfig from_config(const KeyValueConfig& kv);
  static std::vector<std::pair<std::string, std::string>> key_help();
  void validate() const;
};

struct SynthDataset {
  std::string features_dir;
  std::string annotations_csv;
  std::string ground_truth_csv;
  std::string oracle_detections;  // GT replayed as detections, intensity 1
  std::string manifest;
  std::vector<std::string> video_ids;
  std::vector<long> instances_per_video;
  long total_instances = 0;
};

// Writes features/<video>.nwsd, annotations.csv, ground_truth.csv,
// oracle_detections.jsonl and manifest.txt under out_dir. Deterministic in
// config.seed (per-video streams derive from it, so video order does not
// leak randomness across videos).
SynthDataset generate(const SynthConfig& config, const std::string& out_dir);

// GT instances replayed as verb+noun detections with intensity 1 and
// scored against themselves; every AP must be 1 on a sane pipeline.
EvalReport oracle_report(const std::vector<GroundTruthInstance>& gt);
std::vector<Detection> gt_as_detections(const std::vector<GroundTruthInstance>& gt);

}  // namespace nwsd
