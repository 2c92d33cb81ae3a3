#include "nwsd/postprocess.hpp"

#include <algorithm>

#include "nwsd/binio.hpp"
#include "nwsd/errors.hpp"

namespace nwsd {

namespace {
constexpr std::uint32_t kScoresVersion = 1;
}

PostprocessConfig PostprocessConfig::defaults() {
  PostprocessConfig c;
  const int n = 40;
  const double lo = 0.01, hi = 0.4;
  c.thresholds.reserve(n);
  for (int i = 0; i < n; ++i)
    c.thresholds.push_back(lo + (hi - lo) * i / (n - 1));
  return c;
}

void PostprocessConfig::validate() const {
  if (smooth_size < 1 || smooth_size % 2 == 0)
    throw ConfigError("smooth_size must be an odd value >= 1");
  if (thresholds.empty()) throw ConfigError("thresholds must be non-empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
      throw ConfigError("thresholds must lie strictly inside (0,1)");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw ConfigError("thresholds must be strictly increasing");
  }
  if (!(nms_iou > 0.0 && nms_iou <= 1.0))
    throw ConfigError("nms_iou must lie in (0,1]");
}

std::vector<double> smooth(const std::vector<double>& scores, int size) {
  if (size < 1 || size % 2 == 0)
    throw ConfigError("smoothing size must be an odd value >= 1");
  if (size == 1) return scores;
  const long n = static_cast<long>(scores.size());
  const long half = size / 2;
  std::vector<double> out(scores.size());
  for (long i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, i - half);
    const long hi = std::min<long>(n, i + half + 1);
    double sum = 0.0;
    for (long j = lo; j < hi; ++j) sum += scores[j];
    out[i] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<Segment> retrieve_segments(const std::vector<double>& scores,
                                       double threshold) {
  std::vector<Segment> out;
  const long n = static_cast<long>(scores.size());
  long start = -1;
  for (long i = 0; i <= n; ++i) {
    const bool on = i < n && scores[i] >= threshold;
    if (on && start < 0) start = i;
    if (!on && start >= 0) {
      Segment seg;
      seg.start_frame = start;
      seg.end_frame = i;
      seg.source_threshold = threshold;
      out.push_back(seg);
      start = -1;
    }
  }
  return out;
}

double score_segment(const std::vector<double>& scores, const Segment& seg) {
  if (seg.start_frame < 0 || seg.end_frame > static_cast<long>(scores.size()) ||
      seg.end_frame <= seg.start_frame)
    throw ShapeError("segment out of bounds of the score vector");
  double sum = 0.0;
  for (long i = seg.start_frame; i < seg.end_frame; ++i) sum += scores[i];
  return sum / static_cast<double>(seg.length());
}

double segment_iou(const Segment& a, const Segment& b) {
  const long inter = std::min(a.end_frame, b.end_frame) -
                     std::max(a.start_frame, b.start_frame);
  if (inter <= 0) return 0.0;
  const long uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Segment> nms(std::vector<Segment> segments, double iou_threshold) {
  std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    if (a.intensity != b.intensity) return a.intensity > b.intensity;
    if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
    return a.length() > b.length();
  });
  std::vector<Segment> kept;
  for (const Segment& s : segments) {
    bool suppressed = false;
    for (const Segment& k : kept)
      if (segment_iou(s, k) >= iou_threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(s);
  }
  return kept;
}

std::vector<Detection> postprocess_scores(const std::string& video_id,
                                          const Matrix& scores, Task task,
                                          const PostprocessConfig& config,
                                          double fps) {
  config.validate();
  if (fps <= 0.0) throw ConfigError("fps must be positive");
  std::vector<Segment> all;
  std::vector<double> column(scores.rows);
  for (int c = 0; c < scores.cols; ++c) {
    for (int r = 0; r < scores.rows; ++r) {
      const double v = scores.at(r, c);
      if (!(v >= 0.0 && v <= 1.0))
        throw NumericError("detection score outside [0,1] in video " + video_id);
      column[r] = v;
    }
    const std::vector<double> sm = smooth(column, config.smooth_size);
    std::vector<Segment> per_class;
    for (double th : config.thresholds)
      for (Segment seg : retrieve_segments(sm, th)) {
        seg.class_index = c;
        seg.intensity = score_segment(sm, seg);
        per_class.push_back(seg);
      }
    std::vector<Segment> kept = nms(std::move(per_class), config.nms_iou);
    // back to (start, end) order so the later stable sort has a
    // deterministic (class, start) baseline
    std::sort(kept.begin(), kept.end(), [](const Segment& a, const Segment& b) {
      if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
      return a.end_frame < b.end_frame;
    });
    all.insert(all.end(), kept.begin(), kept.end());
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Segment& a, const Segment& b) { return a.intensity > b.intensity; });
  std::vector<Detection> out;
  out.reserve(all.size());
  for (const Segment& s : all) {
    Detection d;
    d.video_id = video_id;
    d.t_start = frames_to_seconds(s.start_frame, fps);
    d.t_end = frames_to_seconds(s.end_frame, fps);
    d.task = task;
    d.class_a = s.class_index;
    d.intensity = s.intensity;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> postprocess_video(const HeadScores& scores,
                                         const PostprocessConfig& config) {
  std::vector<Detection> out = postprocess_scores(scores.video_id, scores.verb,
                                                  Task::verb, config, scores.fps);
  std::vector<Detection> noun = postprocess_scores(scores.video_id, scores.noun,
                                                   Task::noun, config, scores.fps);
  out.insert(out.end(), noun.begin(), noun.end());
  return out;
}

void write_scores(const std::string& path, const std::vector<HeadScores>& videos) {
  BinWriter w(path);
  w.magic("NWSS");
  w.u32(kScoresVersion);
  w.u32(static_cast<std::uint32_t>(videos.size()));
  for (const HeadScores& v : videos) {
    w.str(v.video_id);
    w.f64(v.fps);
    for (const Matrix* m : {&v.verb, &v.noun}) {
      w.u32(static_cast<std::uint32_t>(m->rows));
      w.u32(static_cast<std::uint32_t>(m->cols));
      w.f64_array(m->data.data(), m->size());
    }
  }
  w.close();
}

std::vector<HeadScores> load_scores(const std::string& path) {
  BinReader r(path);
  r.magic("NWSS");
  const std::uint32_t version = r.u32();
  if (version != kScoresVersion)
    r.fail("unsupported score dump version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  std::vector<HeadScores> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    HeadScores v;
    v.video_id = r.str();
    v.fps = r.f64();
    if (!(v.fps > 0.0)) r.fail("non-positive fps for video " + v.video_id);
    for (Matrix* m : {&v.verb, &v.noun}) {
      const int rows = static_cast<int>(r.u32());
      const int cols = static_cast<int>(r.u32());
      *m = Matrix(rows, cols);
      r.f64_array(m->data.data(), m->size());
      if (!m->all_finite())
        r.fail("non-finite score value for video " + v.video_id);
    }
    out.push_back(std::move(v));
  }
  if (!r.at_eof()) r.fail("trailing bytes after score data");
  return out;
}

}  // namespace nwsd
