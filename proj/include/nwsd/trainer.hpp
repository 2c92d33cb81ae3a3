#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nwsd/config.hpp"
#include "nwsd/datamodel.hpp"
#include "nwsd/ingest.hpp"
#include "nwsd/model.hpp"

namespace nwsd {

// Training scheme: the two weak heads, plus the two supervised baselines
// that share the supervised model and differ only in frame labeling
// (narr_bas paints each narration clip with its clip classes, ful paints
// ground-truth spans and background elsewhere).
enum class TrainScheme { ours, cls_agno, narr_bas, ful };

std::string scheme_name(TrainScheme s);
TrainScheme scheme_from_name(const std::string& s);
Variant scheme_variant(TrainScheme s);

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 8;
  long max_steps = 2000;  // desk scale; the full-scale reference is 300000
  double dropout_p = 0.5;
  std::uint64_t seed = 1;
  TrainScheme scheme = TrainScheme::ours;
  long eval_every = 500;
  bool shared_trunk = true;
  std::vector<Modality> modalities = {Modality::rgb, Modality::flow, Modality::audio};

  std::string features_dir;
  std::string annotations;
  std::string ground_truth;
  std::string out_dir;

  // Parses the flat key=value config file contents; unknown keys are
  // rejected and learning_rate must be > 0 here (train() itself tolerates
  // the lr=0 no-op case for direct calls).
  static TrainConfig from_config(const KeyValueConfig& kv);
  // key -> default shown by --help, in display order.
  static std::vector<std::pair<std::string, std::string>> key_help();
};

// Clips between consecutive narration timestamps; the last clip runs to the
// video end; zero-length clips are dropped; frames before the first
// narration are unused. Annotations must be sorted by time.
std::vector<ClipSpan> cut_clips(const std::vector<NarrationAnnotation>& annotations,
                                long video_len_frames, double fps);

// One label per frame over [clips.front().start, clips.back().end): each
// clip's frames carry its own class, no background.
std::vector<int> make_narr_bas_labels(const std::vector<ClipSpan>& clips, Head head);

// One label per frame over [0, len): ground-truth spans painted in file
// order, everything else labeled `background`.
std::vector<int> make_gt_frame_labels(const std::vector<GroundTruthInstance>& gt,
                                      long len_frames, double fps, Head head,
                                      int background);

struct OptimizerState {
  std::vector<Matrix> m, v;  // aligned with ModelParams::blocks()
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  static OptimizerState init(const ModelParams& params);
};

// One Adam update with bias correction. grads aligned with blocks().
// Throws NumericError (naming the block) on any non-finite gradient.
void adam_step(ModelParams& params, const std::vector<Matrix>& grads,
               OptimizerState& state, double lr);

struct TrainVideo {
  std::string video_id;
  double fps = 1.0;
  Matrix features;  // L x Din fused
  std::vector<NarrationAnnotation> annotations;  // sorted by time
  std::vector<GroundTruthInstance> gt;
};

struct TrainDataset {
  std::vector<TrainVideo> videos;
  int c_verb = 0;
  int c_noun = 0;
};

// Reads every *.nwsd file under features_dir (sorted by filename), fuses
// the selected modalities, and attaches annotations/ground truth by video
// id. Class counts are the max index seen plus one.
TrainDataset load_train_dataset(const std::string& features_dir,
                                const std::string& annotations_csv,
                                const std::string& ground_truth_csv,
                                const std::vector<Modality>& modalities);

struct TrainLogRow {
  long step = 0;
  double loss = 0.0;
  bool has_val = false;
  double val_action_map = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation checkpoint (final params if no eval ran)
  std::vector<TrainLogRow> log;
  double best_val_action_map = -1.0;  // -1 when no eval ran
  std::vector<std::string> val_videos;
};

// Deterministic split, batching, Adam training, periodic validation with
// the full postprocess+eval pipeline, best-checkpoint selection by val
// action mAP (average over IoU 0.1-0.5).
TrainResult train(const TrainDataset& dataset, const TrainConfig& config);

// CSV `step,loss,val_action_map` (last column empty on non-eval steps).
void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace nwsd
