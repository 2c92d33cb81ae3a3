#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "nwsd/datamodel.hpp"

namespace nwsd {

// |a n b| / |a u b| over [start, end) intervals in seconds; 0 when disjoint.
double temporal_iou(double a_start, double a_end, double b_start, double b_end);

// Class-agnostic inputs for AP: the caller filters detections and ground
// truth down to a single (task, class) before calling.
struct ScoredSpan {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
  double intensity = 0.0;
};

struct GtSpan {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
};

// Non-interpolated AP. Detections are ranked by intensity descending (ties:
// earlier start, then earlier end, then video id); each one greedily matches
// the highest-IoU unmatched ground truth of the same video and counts as a
// true positive iff that IoU >= iou_threshold. AP = sum of precision at the
// true-positive ranks / |GT|. |GT| must be > 0.
double average_precision(std::vector<ScoredSpan> detections,
                         const std::vector<GtSpan>& ground_truth,
                         double iou_threshold);

// Combines verb and noun detections of the same video into rankable action
// detections: every (v, n) pair with temporal IoU >= 0.5 yields the
// intersection span, class pair (v.class, n.class), intensity
// v.intensity * n.intensity.
std::vector<Detection> pair_actions(const std::vector<Detection>& verb_dets,
                                    const std::vector<Detection>& noun_dets);

inline constexpr std::array<double, 5> kIouThresholds = {0.1, 0.2, 0.3, 0.4, 0.5};

// (verb, noun) for the action task; b = -1 for the single-class tasks.
struct ClassKey {
  int a = 0;
  int b = -1;
  bool operator<(const ClassKey& o) const {
    return a != o.a ? a < o.a : b < o.b;
  }
  bool operator==(const ClassKey& o) const { return a == o.a && b == o.b; }
};

struct TaskReport {
  // Only classes with at least one ground-truth instance appear.
  std::map<ClassKey, std::array<double, 5>> per_class;
  std::array<double, 5> map_at{};  // mean AP over per_class at each threshold
  double avg = 0.0;                // mean of map_at
};

struct EvalReport {
  TaskReport verb, noun, action;
  const TaskReport& task(Task t) const;
};

// Scores all three tasks at the five IoU thresholds. Action detections are
// taken verbatim when the input already contains task=action entries,
// otherwise derived with pair_actions per video. Throws FormatError when
// the ground truth is empty.
EvalReport evaluate(const std::vector<Detection>& detections,
                    const std::vector<GroundTruthInstance>& ground_truth);

// CSV rows (task, class|ALL) x columns @0.1..@0.5, Avg; action class keys
// are "verb:noun". The JSON carries the same numbers machine-readably.
void write_report_csv(const std::string& path, const EvalReport& report);
void write_report_json(const std::string& path, const EvalReport& report);

}  // namespace nwsd
