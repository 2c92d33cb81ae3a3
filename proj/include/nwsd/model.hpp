#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nwsd/matrix.hpp"
#include "nwsd/tape.hpp"

namespace nwsd {

enum class Head { verb, noun };

// ours      — class-aware attention MIL head.
// cls_agno  — same pipeline with a single shared attention row.
// supervised— frame-level classifier with an appended background class;
//             drives both the fully supervised and the narration-boundary
//             baselines (they differ only in how frame labels are built).
enum class Variant : int { ours = 0, cls_agno = 1, supervised = 2 };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct ModelParams {
  Variant variant = Variant::ours;
  bool shared_trunk = true;
  int input_dim = 0;   // Din, fused feature width
  int hidden_dim = 0;  // d
  int c_verb = 0;
  int c_noun = 0;

  Matrix conv_kernel;  // (3*Din) x d
  Matrix conv_bias;    // 1 x d
  // Separate noun trunk, allocated only when shared_trunk is false.
  Matrix conv_kernel_noun;
  Matrix conv_bias_noun;
  Matrix w1_verb;  // C_verb x d (ours), 1 x d (cls_agno), empty (supervised)
  Matrix w1_noun;
  Matrix w2_verb;  // d x head_classes(verb)
  Matrix w2_noun;

  // Output classes of a head: C for the weak variants, C+1 for supervised
  // (the appended index C is background).
  int head_classes(Head h) const;
  int label_classes(Head h) const { return h == Head::verb ? c_verb : c_noun; }

  // Glorot-uniform init, deterministic in seed. Biases start at zero.
  static ModelParams init(Variant variant, int input_dim, int hidden_dim, int c_verb,
                          int c_noun, bool shared_trunk, std::uint64_t seed);

  // Parameter blocks in checkpoint/optimizer order; empty blocks skipped.
  std::vector<std::pair<std::string, Matrix*>> blocks();
  std::vector<std::pair<std::string, const Matrix*>> blocks() const;
};

void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

// Parameter leaves staged on a tape, aligned with ModelParams::blocks().
struct StagedModel {
  std::vector<Tape::Var> leaves;
  Tape::Var conv_kernel, conv_bias, conv_kernel_noun, conv_bias_noun;
  Tape::Var w1_verb, w1_noun, w2_verb, w2_noun;
  static StagedModel stage(Tape& tape, const ModelParams& params);
};

struct ForwardOptions {
  bool training = false;
  double dropout_p = 0.0;
  std::mt19937_64* rng = nullptr;  // mask source; required if training && p > 0
};

// The individual pipeline stages, exposed for direct testing. All shapes
// follow the convention F: L x d, W1: C x d, W2: d x C.
namespace model_ops {
Tape::Var attention(Tape& t, Tape::Var f, Tape::Var w1);          // sigmoid(W1 F^T)
Tape::Var select_row(Tape& t, Tape::Var a_full, int c);           // A'[c, :]
Tape::Var frame_scores(Tape& t, Tape::Var f, Tape::Var w2);       // softmax(F W2) rows
Tape::Var pool(Tape& t, Tape::Var a_sel, Tape::Var f);            // A F / (sum A + eps)
Tape::Var clip_predict(Tape& t, Tape::Var pooled, Tape::Var w2);  // softmax(pooled W2)
Tape::Var clip_loss(Tape& t, Tape::Var p, int label);             // -log P[c]
}  // namespace model_ops

// Per-head trace of one clip's forward pass. Weak-only fields are invalid
// for the supervised variant.
struct HeadForward {
  Tape::Var conv_out;      // L x d
  Tape::Var a_full;        // C x L (1 x L for cls_agno)
  Tape::Var a_sel;         // 1 x L
  Tape::Var frame_scores;  // L x head_classes
  Tape::Var pooled;        // 1 x d
  Tape::Var clip_probs;    // 1 x C
  Tape::Var loss;          // 1 x 1
};

// Weak (ours / cls_agno) forward for one head. `trunk` caches the conv
// output across heads when the trunk is shared; pass the same pointer for
// both heads of a clip.
HeadForward forward_weak(Tape& t, const StagedModel& sm, const ModelParams& p,
                         Head head, Tape::Var input, int label,
                         const ForwardOptions& opt, Tape::Var* trunk);

// Supervised forward: mean per-frame cross-entropy against one label per
// frame; label h.head_classes-1 == background for the fully supervised
// labeling scheme.
HeadForward forward_supervised(Tape& t, const StagedModel& sm, const ModelParams& p,
                               Head head, Tape::Var input,
                               const std::vector<int>& frame_labels,
                               const ForwardOptions& opt, Tape::Var* trunk);

struct ClipTargets {
  int verb = -1;
  int noun = -1;
  std::vector<int> verb_frames;  // supervised variants only
  std::vector<int> noun_frames;
};

struct ClipForwardResult {
  HeadForward verb;
  HeadForward noun;
  Tape::Var loss;  // verb loss + noun loss
};

// Full clip pass over both heads with the variant-appropriate losses.
ClipForwardResult forward_clip(Tape& t, const StagedModel& sm, const ModelParams& p,
                               const Matrix& features, const ClipTargets& targets,
                               const ForwardOptions& opt);

// Inference-time per-frame detection scores over an arbitrary-length
// sequence. For the supervised variant the background column is dropped,
// leaving the C action-class slice of the (C+1)-way softmax.
struct VideoScores {
  Matrix verb;  // L x C_verb
  Matrix noun;  // L x C_noun
};
VideoScores infer_scores(const ModelParams& params, const Matrix& features);

}  // namespace nwsd
