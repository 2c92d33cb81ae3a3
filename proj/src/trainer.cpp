#include "nwsd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "nwsd/evaluate.hpp"
#include "nwsd/postprocess.hpp"

namespace nwsd {

namespace {
constexpr int kHiddenDim = 100;
}

std::string scheme_name(TrainScheme s) {
  switch (s) {
    case TrainScheme::ours: return "ours";
    case TrainScheme::cls_agno: return "cls_agno";
    case TrainScheme::narr_bas: return "narr_bas";
    case TrainScheme::ful: return "ful";
  }
  throw StateError("unreachable scheme tag");
}

TrainScheme scheme_from_name(const std::string& s) {
  if (s == "ours") return TrainScheme::ours;
  if (s == "cls_agno") return TrainScheme::cls_agno;
  if (s == "narr_bas") return TrainScheme::narr_bas;
  if (s == "ful") return TrainScheme::ful;
  throw ConfigError("unknown variant '" + s + "' (want ours|cls_agno|narr_bas|ful)");
}

Variant scheme_variant(TrainScheme s) {
  switch (s) {
    case TrainScheme::ours: return Variant::ours;
    case TrainScheme::cls_agno: return Variant::cls_agno;
    case TrainScheme::narr_bas:
    case TrainScheme::ful: return Variant::supervised;
  }
  throw StateError("unreachable scheme tag");
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  kv.reject_unknown_keys({"learning_rate", "batch_size", "max_steps", "dropout_p",
                          "seed", "variant", "eval_every", "shared_trunk",
                          "modalities", "features_dir", "annotations",
                          "ground_truth", "out_dir"});
  TrainConfig c;
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.batch_size = static_cast<int>(kv.get_long("batch_size", c.batch_size));
  c.max_steps = kv.get_long("max_steps", c.max_steps);
  c.dropout_p = kv.get_double("dropout_p", c.dropout_p);
  c.seed = kv.get_u64("seed", c.seed);
  c.scheme = scheme_from_name(kv.get_string("variant", scheme_name(c.scheme)));
  c.eval_every = kv.get_long("eval_every", c.eval_every);
  c.shared_trunk = kv.get_bool("shared_trunk", c.shared_trunk);
  c.modalities = parse_modalities(kv.get_string("modalities", "rgb,flow,audio"));
  c.features_dir = kv.require_string("features_dir");
  c.annotations = kv.require_string("annotations");
  c.ground_truth = kv.require_string("ground_truth");
  c.out_dir = kv.require_string("out_dir");

  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (!(c.dropout_p >= 0.0 && c.dropout_p < 1.0))
    throw ConfigError("dropout_p must lie in [0,1)");
  if (c.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  return c;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::key_help() {
  return {
      {"learning_rate", "1e-05"},
      {"batch_size", "8"},
      {"max_steps", "2000 (full scale: 300000)"},
      {"dropout_p", "0.5"},
      {"seed", "1"},
      {"variant", "ours (ours|cls_agno|narr_bas|ful)"},
      {"eval_every", "500"},
      {"shared_trunk", "true"},
      {"modalities", "rgb,flow,audio"},
      {"features_dir", "(required)"},
      {"annotations", "(required)"},
      {"ground_truth", "(required)"},
      {"out_dir", "(required)"},
  };
}

std::vector<ClipSpan> cut_clips(const std::vector<NarrationAnnotation>& annotations,
                                long video_len_frames, double fps) {
  for (std::size_t i = 1; i < annotations.size(); ++i)
    if (annotations[i].time < annotations[i - 1].time)
      throw FormatError("annotations must be sorted by time for clip cutting");
  std::vector<ClipSpan> out;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    ClipSpan clip;
    clip.video_id = annotations[i].video_id;
    clip.start_frame = seconds_to_frame(annotations[i].time, fps);
    clip.end_frame = i + 1 < annotations.size()
                         ? seconds_to_frame(annotations[i + 1].time, fps)
                         : video_len_frames;
    clip.end_frame = std::min(clip.end_frame, video_len_frames);
    clip.start_frame = std::max<long>(clip.start_frame, 0);
    clip.verb = annotations[i].verb;
    clip.noun = annotations[i].noun;
    if (clip.length() > 0) out.push_back(std::move(clip));
  }
  return out;
}

std::vector<int> make_narr_bas_labels(const std::vector<ClipSpan>& clips, Head head) {
  if (clips.empty()) return {};
  const long base = clips.front().start_frame;
  std::vector<int> labels(clips.back().end_frame - base, -1);
  for (const ClipSpan& c : clips) {
    const int cls = head == Head::verb ? c.verb : c.noun;
    for (long f = c.start_frame; f < c.end_frame; ++f) labels[f - base] = cls;
  }
  for (int l : labels)
    if (l < 0) throw StateError("narration clips do not tile the labeled range");
  return labels;
}

std::vector<int> make_gt_frame_labels(const std::vector<GroundTruthInstance>& gt,
                                      long len_frames, double fps, Head head,
                                      int background) {
  std::vector<int> labels(len_frames, background);
  for (const GroundTruthInstance& g : gt) {
    const long lo = std::max<long>(0, seconds_to_frame(g.t_start, fps));
    const long hi = std::min(len_frames, seconds_to_frame(g.t_end, fps));
    const int cls = head == Head::verb ? g.verb : g.noun;
    for (long f = lo; f < hi; ++f) labels[f] = cls;
  }
  return labels;
}

OptimizerState OptimizerState::init(const ModelParams& params) {
  OptimizerState st;
  for (const auto& [name, m] : params.blocks()) {
    st.m.emplace_back(m->rows, m->cols);
    st.v.emplace_back(m->rows, m->cols);
  }
  return st;
}

void adam_step(ModelParams& params, const std::vector<Matrix>& grads,
               OptimizerState& state, double lr) {
  auto blocks = params.blocks();
  if (grads.size() != blocks.size() || state.m.size() != blocks.size())
    throw ShapeError("optimizer state/gradients misaligned with parameter blocks");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!grads[b].same_shape(*blocks[b].second))
      throw ShapeError("gradient shape mismatch for block " + blocks[b].first);
    for (std::size_t i = 0; i < grads[b].data.size(); ++i)
      if (!std::isfinite(grads[b].data[i]))
        throw NumericError("non-finite gradient in block " + blocks[b].first +
                           " at flat index " + std::to_string(i) +
                           " (step " + std::to_string(state.step + 1) + ")");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Matrix& p = *blocks[b].second;
    Matrix& m = state.m[b];
    Matrix& v = state.v[b];
    const Matrix& g = grads[b];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g.data[i];
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

TrainDataset load_train_dataset(const std::string& features_dir,
                                const std::string& annotations_csv,
                                const std::string& ground_truth_csv,
                                const std::vector<Modality>& modalities) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(features_dir))
    throw IoError("features directory not found: " + features_dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(features_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".nwsd")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw IoError("no .nwsd feature files in " + features_dir);

  TrainDataset ds;
  std::map<std::string, std::size_t> index;
  for (const fs::path& p : paths) {
    VideoFeatures vf = load_features(p.string());
    FusedSequence fused = fuse(vf, modalities);
    TrainVideo tv;
    tv.video_id = fused.video_id;
    tv.fps = fused.fps;
    tv.features = std::move(fused.data);
    if (index.count(tv.video_id))
      throw FormatError("duplicate video id '" + tv.video_id + "' in " + features_dir);
    index[tv.video_id] = ds.videos.size();
    ds.videos.push_back(std::move(tv));
  }

  for (NarrationAnnotation& a : read_annotations_csv(annotations_csv)) {
    auto it = index.find(a.video_id);
    if (it == index.end())
      throw FormatError(annotations_csv + ": annotation references unknown video '" +
                        a.video_id + "'");
    ds.c_verb = std::max(ds.c_verb, a.verb + 1);
    ds.c_noun = std::max(ds.c_noun, a.noun + 1);
    ds.videos[it->second].annotations.push_back(std::move(a));
  }
  for (GroundTruthInstance& g : read_ground_truth_csv(ground_truth_csv)) {
    auto it = index.find(g.video_id);
    if (it == index.end())
      throw FormatError(ground_truth_csv + ": ground truth references unknown video '" +
                        g.video_id + "'");
    ds.c_verb = std::max(ds.c_verb, g.verb + 1);
    ds.c_noun = std::max(ds.c_noun, g.noun + 1);
    ds.videos[it->second].gt.push_back(std::move(g));
  }
  for (TrainVideo& v : ds.videos)
    std::stable_sort(v.annotations.begin(), v.annotations.end(),
                     [](const NarrationAnnotation& x, const NarrationAnnotation& y) {
                       return x.time < y.time;
                     });
  if (ds.c_verb == 0 || ds.c_noun == 0)
    throw FormatError("dataset carries no class labels at all");
  return ds;
}

namespace {

struct TrainClip {
  int video = 0;
  ClipSpan span;
};

Matrix slice_rows(const Matrix& m, long lo, long hi) {
  Matrix out(static_cast<int>(hi - lo), m.cols);
  for (long r = lo; r < hi; ++r)
    for (int c = 0; c < m.cols; ++c) out.at(static_cast<int>(r - lo), c) = m.at(static_cast<int>(r), c);
  return out;
}

double val_action_map(const ModelParams& params, const TrainDataset& ds,
                      const std::vector<int>& val_videos) {
  const PostprocessConfig pp = PostprocessConfig::defaults();
  std::vector<Detection> dets;
  std::vector<GroundTruthInstance> gt;
  for (int vi : val_videos) {
    const TrainVideo& v = ds.videos[vi];
    VideoScores scores = infer_scores(params, v.features);
    HeadScores hs{v.video_id, v.fps, std::move(scores.verb), std::move(scores.noun)};
    std::vector<Detection> d = postprocess_video(hs, pp);
    dets.insert(dets.end(), d.begin(), d.end());
    gt.insert(gt.end(), v.gt.begin(), v.gt.end());
  }
  if (gt.empty()) return -1.0;
  return evaluate(dets, gt).action.avg;
}

}  // namespace

TrainResult train(const TrainDataset& dataset, const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
    throw ConfigError("learning_rate must be finite and >= 0");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (config.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(config.dropout_p >= 0.0 && config.dropout_p < 1.0))
    throw ConfigError("dropout_p must lie in [0,1)");
  if (dataset.videos.empty()) throw ConfigError("dataset has no videos");
  if (dataset.c_verb < 1 || dataset.c_noun < 1)
    throw ConfigError("dataset class counts must be >= 1");

  const int input_dim = dataset.videos.front().features.cols;
  for (const TrainVideo& v : dataset.videos)
    if (v.features.cols != input_dim)
      throw ShapeError("inconsistent fused feature width across videos");

  std::mt19937_64 seeder(config.seed);
  const std::uint64_t init_seed = seeder();
  const std::uint64_t split_seed = seeder();
  const std::uint64_t loop_seed = seeder();

  // Deterministic by-video split: ids sorted, shuffled by the split seed,
  // first fifth (at least one video when there are two or more) held out.
  std::vector<int> order(dataset.videos.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return dataset.videos[a].video_id < dataset.videos[b].video_id;
  });
  {
    std::mt19937_64 rng(split_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  const std::size_t n_val =
      dataset.videos.size() >= 2 ? std::max<std::size_t>(1, dataset.videos.size() / 5) : 0;
  std::vector<int> val_videos(order.begin(), order.begin() + n_val);
  std::vector<int> train_videos(order.begin() + n_val, order.end());
  std::sort(val_videos.begin(), val_videos.end());
  std::sort(train_videos.begin(), train_videos.end());

  std::vector<TrainClip> clips;
  // Per-video frame labels for the supervised schemes, indexed by video.
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> frame_labels;
  const int bg_verb = dataset.c_verb;
  const int bg_noun = dataset.c_noun;
  for (int vi : train_videos) {
    const TrainVideo& v = dataset.videos[vi];
    std::vector<ClipSpan> spans = cut_clips(v.annotations, v.features.rows, v.fps);
    for (ClipSpan& s : spans) clips.push_back({vi, std::move(s)});
    if (config.scheme == TrainScheme::ful)
      frame_labels[vi] = {
          make_gt_frame_labels(v.gt, v.features.rows, v.fps, Head::verb, bg_verb),
          make_gt_frame_labels(v.gt, v.features.rows, v.fps, Head::noun, bg_noun)};
  }
  if (clips.empty()) throw ConfigError("train split contains no clips");

  ModelParams params = ModelParams::init(scheme_variant(config.scheme), input_dim,
                                         kHiddenDim, dataset.c_verb, dataset.c_noun,
                                         config.shared_trunk, init_seed);
  OptimizerState opt_state = OptimizerState::init(params);
  std::mt19937_64 rng(loop_seed);

  std::vector<std::size_t> epoch(clips.size());
  std::iota(epoch.begin(), epoch.end(), 0);
  std::size_t cursor = epoch.size();  // forces a shuffle before the first draw

  TrainResult result;
  for (int vi : val_videos) result.val_videos.push_back(dataset.videos[vi].video_id);

  ModelParams best = params;
  double best_val = -1.0;

  const auto n_blocks = params.blocks().size();
  for (long step = 1; step <= config.max_steps; ++step) {
    std::vector<Matrix> grads;
    for (const auto& [name, m] : params.blocks()) grads.emplace_back(m->rows, m->cols);
    double batch_loss = 0.0;

    for (int k = 0; k < config.batch_size; ++k) {
      if (cursor >= epoch.size()) {
        std::shuffle(epoch.begin(), epoch.end(), rng);
        cursor = 0;
      }
      const TrainClip& clip = clips[epoch[cursor++]];
      const TrainVideo& video = dataset.videos[clip.video];

      Tape tape;
      StagedModel sm = StagedModel::stage(tape, params);
      ClipTargets targets;
      if (config.scheme == TrainScheme::ours || config.scheme == TrainScheme::cls_agno) {
        targets.verb = clip.span.verb;
        targets.noun = clip.span.noun;
      } else if (config.scheme == TrainScheme::narr_bas) {
        targets.verb_frames.assign(clip.span.length(), clip.span.verb);
        targets.noun_frames.assign(clip.span.length(), clip.span.noun);
      } else {
        const auto& [verb_labels, noun_labels] = frame_labels.at(clip.video);
        targets.verb_frames.assign(verb_labels.begin() + clip.span.start_frame,
                                   verb_labels.begin() + clip.span.end_frame);
        targets.noun_frames.assign(noun_labels.begin() + clip.span.start_frame,
                                   noun_labels.begin() + clip.span.end_frame);
      }

      ForwardOptions fwd;
      fwd.training = true;
      fwd.dropout_p = config.dropout_p;
      fwd.rng = &rng;
      Matrix input = slice_rows(video.features, clip.span.start_frame, clip.span.end_frame);
      ClipForwardResult res = forward_clip(tape, sm, params, input, targets, fwd);
      batch_loss += tape.value(res.loss).at(0, 0);
      tape.backward(res.loss);
      for (std::size_t b = 0; b < n_blocks; ++b) {
        const Matrix& g = tape.grad(sm.leaves[b]);
        for (std::size_t i = 0; i < g.data.size(); ++i) grads[b].data[i] += g.data[i];
      }
    }

    adam_step(params, grads, opt_state, config.learning_rate);

    TrainLogRow row;
    row.step = step;
    row.loss = batch_loss;
    const bool eval_now = step % config.eval_every == 0 || step == config.max_steps;
    if (eval_now && !val_videos.empty()) {
      const double v = val_action_map(params, dataset, val_videos);
      if (v >= 0.0) {
        row.has_val = true;
        row.val_action_map = v;
        if (v > best_val) {
          best_val = v;
          best = params;
        }
      }
    }
    result.log.push_back(row);
  }

  result.params = best_val >= 0.0 ? std::move(best) : std::move(params);
  result.best_val_action_map = best_val;
  return result;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "step,loss,val_action_map\n";
  for (const TrainLogRow& r : log) {
    out << r.step << ',' << format_double(r.loss) << ',';
    if (r.has_val) out << format_double(r.val_action_map);
    out << '\n';
  }
  if (!out.good()) throw IoError("failed writing " + path);
}

}  // namespace nwsd
