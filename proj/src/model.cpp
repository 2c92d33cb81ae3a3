#include "nwsd/model.hpp"

#include <cmath>

#include "nwsd/binio.hpp"

namespace nwsd {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kPoolEps = 1e-8;

Matrix glorot_uniform(int rows, int cols, int fan_in, int fan_out,
                      std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

std::vector<std::uint8_t> draw_mask(std::size_t n, double keep_prob,
                                    std::mt19937_64& rng) {
  std::bernoulli_distribution keep(keep_prob);
  std::vector<std::uint8_t> mask(n);
  for (auto& b : mask) b = keep(rng) ? 1 : 0;
  return mask;
}

Tape::Var maybe_dropout(Tape& t, Tape::Var x, const ForwardOptions& opt) {
  if (!opt.training || opt.dropout_p <= 0.0) return x;
  if (opt.dropout_p >= 1.0) throw ConfigError("dropout probability must be < 1");
  if (!opt.rng) throw StateError("training forward with dropout requires an rng");
  const double keep_prob = 1.0 - opt.dropout_p;
  return t.dropout(x, draw_mask(t.value(x).size(), keep_prob, *opt.rng), keep_prob);
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::ours: return "ours";
    case Variant::cls_agno: return "cls_agno";
    case Variant::supervised: return "supervised";
  }
  throw StateError("unreachable variant tag");
}

Variant variant_from_name(const std::string& s) {
  if (s == "ours") return Variant::ours;
  if (s == "cls_agno") return Variant::cls_agno;
  if (s == "supervised") return Variant::supervised;
  throw ConfigError("unknown model variant '" + s + "'");
}

int ModelParams::head_classes(Head h) const {
  const int c = label_classes(h);
  return variant == Variant::supervised ? c + 1 : c;
}

ModelParams ModelParams::init(Variant variant, int input_dim, int hidden_dim,
                              int c_verb, int c_noun, bool shared_trunk,
                              std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || c_verb < 1 || c_noun < 1)
    throw ConfigError("model dimensions must all be >= 1");
  ModelParams p;
  p.variant = variant;
  p.shared_trunk = shared_trunk;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.c_verb = c_verb;
  p.c_noun = c_noun;

  std::mt19937_64 rng(seed);
  const int kin = 3 * input_dim;
  p.conv_kernel = glorot_uniform(kin, hidden_dim, kin, hidden_dim, rng);
  p.conv_bias = Matrix(1, hidden_dim);
  if (!shared_trunk) {
    p.conv_kernel_noun = glorot_uniform(kin, hidden_dim, kin, hidden_dim, rng);
    p.conv_bias_noun = Matrix(1, hidden_dim);
  }
  if (variant != Variant::supervised) {
    const int rows_verb = variant == Variant::cls_agno ? 1 : c_verb;
    const int rows_noun = variant == Variant::cls_agno ? 1 : c_noun;
    p.w1_verb = glorot_uniform(rows_verb, hidden_dim, hidden_dim, rows_verb, rng);
    p.w1_noun = glorot_uniform(rows_noun, hidden_dim, hidden_dim, rows_noun, rng);
  }
  p.w2_verb = glorot_uniform(hidden_dim, p.head_classes(Head::verb), hidden_dim,
                             p.head_classes(Head::verb), rng);
  p.w2_noun = glorot_uniform(hidden_dim, p.head_classes(Head::noun), hidden_dim,
                             p.head_classes(Head::noun), rng);
  return p;
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::blocks() {
  std::vector<std::pair<std::string, Matrix*>> out;
  auto push = [&out](const char* name, Matrix* m) {
    if (m->size() > 0) out.emplace_back(name, m);
  };
  push("conv_kernel", &conv_kernel);
  push("conv_bias", &conv_bias);
  push("conv_kernel_noun", &conv_kernel_noun);
  push("conv_bias_noun", &conv_bias_noun);
  push("w1_verb", &w1_verb);
  push("w1_noun", &w1_noun);
  push("w2_verb", &w2_verb);
  push("w2_noun", &w2_noun);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::blocks() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<ModelParams*>(this)->blocks()) out.emplace_back(name, m);
  return out;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  BinWriter w(path);
  w.magic("NWSM");
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(params.variant));
  w.u8(params.shared_trunk ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(params.c_verb));
  w.u32(static_cast<std::uint32_t>(params.c_noun));
  w.u32(static_cast<std::uint32_t>(params.hidden_dim));
  w.u32(static_cast<std::uint32_t>(params.input_dim));
  const auto blocks = params.blocks();
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, m] : blocks) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(m->rows));
    w.u32(static_cast<std::uint32_t>(m->cols));
    w.f64_array(m->data.data(), m->size());
  }
  w.close();
}

ModelParams load_checkpoint(const std::string& path) {
  BinReader r(path);
  r.magic("NWSM");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    r.fail("unsupported checkpoint version " + std::to_string(version));
  const std::uint8_t variant_tag = r.u8();
  if (variant_tag > 2) r.fail("unknown variant tag " + std::to_string(variant_tag));
  ModelParams p;
  p.variant = static_cast<Variant>(variant_tag);
  p.shared_trunk = r.u8() != 0;
  p.c_verb = static_cast<int>(r.u32());
  p.c_noun = static_cast<int>(r.u32());
  p.hidden_dim = static_cast<int>(r.u32());
  p.input_dim = static_cast<int>(r.u32());
  const std::uint32_t n_blocks = r.u32();
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    const std::string name = r.str();
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    Matrix m(rows, cols);
    r.f64_array(m.data.data(), m.size());
    if (!m.all_finite()) r.fail("non-finite value in block '" + name + "'");
    Matrix* dst = nullptr;
    if (name == "conv_kernel") dst = &p.conv_kernel;
    else if (name == "conv_bias") dst = &p.conv_bias;
    else if (name == "conv_kernel_noun") dst = &p.conv_kernel_noun;
    else if (name == "conv_bias_noun") dst = &p.conv_bias_noun;
    else if (name == "w1_verb") dst = &p.w1_verb;
    else if (name == "w1_noun") dst = &p.w1_noun;
    else if (name == "w2_verb") dst = &p.w2_verb;
    else if (name == "w2_noun") dst = &p.w2_noun;
    if (!dst) r.fail("unknown parameter block '" + name + "'");
    *dst = std::move(m);
  }
  if (!r.at_eof()) r.fail("trailing bytes after parameter blocks");

  // Shape cross-checks against the declared metadata.
  const int kin = 3 * p.input_dim;
  auto expect = [&](const Matrix& m, int rows, int cols, const char* what) {
    if (m.rows != rows || m.cols != cols)
      throw FormatError(path + ": block " + what + " has shape " +
                        std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                        ", expected " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  };
  expect(p.conv_kernel, kin, p.hidden_dim, "conv_kernel");
  expect(p.conv_bias, 1, p.hidden_dim, "conv_bias");
  if (!p.shared_trunk) {
    expect(p.conv_kernel_noun, kin, p.hidden_dim, "conv_kernel_noun");
    expect(p.conv_bias_noun, 1, p.hidden_dim, "conv_bias_noun");
  }
  if (p.variant != Variant::supervised) {
    const int rv = p.variant == Variant::cls_agno ? 1 : p.c_verb;
    const int rn = p.variant == Variant::cls_agno ? 1 : p.c_noun;
    expect(p.w1_verb, rv, p.hidden_dim, "w1_verb");
    expect(p.w1_noun, rn, p.hidden_dim, "w1_noun");
  }
  expect(p.w2_verb, p.hidden_dim, p.head_classes(Head::verb), "w2_verb");
  expect(p.w2_noun, p.hidden_dim, p.head_classes(Head::noun), "w2_noun");
  return p;
}

StagedModel StagedModel::stage(Tape& tape, const ModelParams& params) {
  StagedModel sm;
  for (const auto& [name, m] : params.blocks()) {
    Tape::Var v = tape.leaf(*m);
    sm.leaves.push_back(v);
    if (name == std::string("conv_kernel")) sm.conv_kernel = v;
    else if (name == std::string("conv_bias")) sm.conv_bias = v;
    else if (name == std::string("conv_kernel_noun")) sm.conv_kernel_noun = v;
    else if (name == std::string("conv_bias_noun")) sm.conv_bias_noun = v;
    else if (name == std::string("w1_verb")) sm.w1_verb = v;
    else if (name == std::string("w1_noun")) sm.w1_noun = v;
    else if (name == std::string("w2_verb")) sm.w2_verb = v;
    else if (name == std::string("w2_noun")) sm.w2_noun = v;
  }
  return sm;
}

namespace model_ops {

Tape::Var attention(Tape& t, Tape::Var f, Tape::Var w1) {
  return t.sigmoid(t.matmul(w1, t.transpose(f)));
}

Tape::Var select_row(Tape& t, Tape::Var a_full, int c) { return t.select_row(a_full, c); }

Tape::Var frame_scores(Tape& t, Tape::Var f, Tape::Var w2) {
  return t.softmax_rows(t.matmul(f, w2));
}

Tape::Var pool(Tape& t, Tape::Var a_sel, Tape::Var f) {
  Tape::Var total = t.sum_all(a_sel);
  Tape::Var weighted = t.matmul(a_sel, f);
  return t.div_by_scalar(weighted, total, kPoolEps);
}

Tape::Var clip_predict(Tape& t, Tape::Var pooled, Tape::Var w2) {
  return t.softmax_rows(t.matmul(pooled, w2));
}

Tape::Var clip_loss(Tape& t, Tape::Var p, int label) {
  return t.neg_log_prob(p, label);
}

}  // namespace model_ops

namespace {

// Conv trunk with its dropout, shared across heads when configured.
Tape::Var trunk_features(Tape& t, const StagedModel& sm, const ModelParams& p,
                         Head head, Tape::Var input, const ForwardOptions& opt,
                         Tape::Var* cache) {
  const bool use_shared = p.shared_trunk || head == Head::verb;
  if (p.shared_trunk && cache && cache->valid()) return *cache;
  Tape::Var kernel = use_shared ? sm.conv_kernel : sm.conv_kernel_noun;
  Tape::Var bias = use_shared ? sm.conv_bias : sm.conv_bias_noun;
  Tape::Var h = t.conv1d(input, kernel, bias);
  h = maybe_dropout(t, h, opt);
  if (p.shared_trunk && cache) *cache = h;
  return h;
}

Tape::Var head_w1(const StagedModel& sm, Head h) {
  return h == Head::verb ? sm.w1_verb : sm.w1_noun;
}
Tape::Var head_w2(const StagedModel& sm, Head h) {
  return h == Head::verb ? sm.w2_verb : sm.w2_noun;
}

}  // namespace

HeadForward forward_weak(Tape& t, const StagedModel& sm, const ModelParams& p,
                         Head head, Tape::Var input, int label,
                         const ForwardOptions& opt, Tape::Var* trunk) {
  if (p.variant == Variant::supervised)
    throw StateError("forward_weak called on a supervised model");
  if (label < 0 || label >= p.label_classes(head))
    throw ShapeError("clip label outside the head's class space");

  HeadForward out;
  out.conv_out = trunk_features(t, sm, p, head, input, opt, trunk);
  out.a_full = model_ops::attention(t, out.conv_out, head_w1(sm, head));
  // cls_agno has a single attention row shared by all classes.
  const int row = p.variant == Variant::cls_agno ? 0 : label;
  out.a_sel = model_ops::select_row(t, out.a_full, row);
  out.a_sel = maybe_dropout(t, out.a_sel, opt);
  out.frame_scores = model_ops::frame_scores(t, out.conv_out, head_w2(sm, head));
  out.pooled = model_ops::pool(t, out.a_sel, out.conv_out);
  out.clip_probs = model_ops::clip_predict(t, out.pooled, head_w2(sm, head));
  out.loss = model_ops::clip_loss(t, out.clip_probs, label);
  return out;
}

HeadForward forward_supervised(Tape& t, const StagedModel& sm, const ModelParams& p,
                               Head head, Tape::Var input,
                               const std::vector<int>& frame_labels,
                               const ForwardOptions& opt, Tape::Var* trunk) {
  if (p.variant != Variant::supervised)
    throw StateError("forward_supervised called on a weak model");
  const int classes = p.head_classes(head);
  for (int c : frame_labels)
    if (c < 0 || c >= classes)
      throw ShapeError("frame label outside the head's class space");

  HeadForward out;
  out.conv_out = trunk_features(t, sm, p, head, input, opt, trunk);
  out.frame_scores = model_ops::frame_scores(t, out.conv_out, head_w2(sm, head));
  out.loss = t.mean_neg_log_rows(out.frame_scores, frame_labels);
  return out;
}

ClipForwardResult forward_clip(Tape& t, const StagedModel& sm, const ModelParams& p,
                               const Matrix& features, const ClipTargets& targets,
                               const ForwardOptions& opt) {
  if (features.cols != p.input_dim)
    throw ShapeError("clip feature width does not match the model input dim");
  Tape::Var input = t.leaf(features);
  Tape::Var trunk{};
  ClipForwardResult out;
  if (p.variant == Variant::supervised) {
    out.verb = forward_supervised(t, sm, p, Head::verb, input, targets.verb_frames,
                                  opt, &trunk);
    out.noun = forward_supervised(t, sm, p, Head::noun, input, targets.noun_frames,
                                  opt, &trunk);
  } else {
    out.verb = forward_weak(t, sm, p, Head::verb, input, targets.verb, opt, &trunk);
    out.noun = forward_weak(t, sm, p, Head::noun, input, targets.noun, opt, &trunk);
  }
  out.loss = t.add(out.verb.loss, out.noun.loss);
  return out;
}

VideoScores infer_scores(const ModelParams& params, const Matrix& features) {
  Tape t;
  StagedModel sm = StagedModel::stage(t, params);
  Tape::Var input = t.leaf(features);
  ForwardOptions opt;  // inference: no dropout
  Tape::Var trunk{};
  VideoScores out;
  for (Head head : {Head::verb, Head::noun}) {
    Tape::Var h = trunk_features(t, sm, params, head, input, opt, &trunk);
    Tape::Var d = model_ops::frame_scores(t, h, head == Head::verb ? sm.w2_verb : sm.w2_noun);
    const Matrix& full = t.value(d);
    const int c = params.label_classes(head);
    Matrix scores(full.rows, c);
    for (int r = 0; r < full.rows; ++r)
      for (int j = 0; j < c; ++j) scores.at(r, j) = full.at(r, j);
    (head == Head::verb ? out.verb : out.noun) = std::move(scores);
  }
  return out;
}

}  // namespace nwsd
