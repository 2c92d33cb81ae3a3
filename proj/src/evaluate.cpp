#include "nwsd/evaluate.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "nwsd/config.hpp"
#include "nwsd/errors.hpp"

namespace nwsd {

double temporal_iou(double a_start, double a_end, double b_start, double b_end) {
  if (!(a_end > a_start) || !(b_end > b_start))
    throw ShapeError("temporal_iou needs non-empty intervals");
  const double inter = std::min(a_end, b_end) - std::max(a_start, b_start);
  if (inter <= 0.0) return 0.0;
  const double uni = (a_end - a_start) + (b_end - b_start) - inter;
  return inter / uni;
}

double average_precision(std::vector<ScoredSpan> detections,
                         const std::vector<GtSpan>& ground_truth,
                         double iou_threshold) {
  if (ground_truth.empty())
    throw StateError("average_precision is undefined without ground truth");
  std::sort(detections.begin(), detections.end(),
            [](const ScoredSpan& x, const ScoredSpan& y) {
              if (x.intensity != y.intensity) return x.intensity > y.intensity;
              if (x.t_start != y.t_start) return x.t_start < y.t_start;
              if (x.t_end != y.t_end) return x.t_end < y.t_end;
              return x.video_id < y.video_id;
            });
  std::vector<bool> matched(ground_truth.size(), false);
  double ap = 0.0;
  int tp = 0;
  for (std::size_t rank = 0; rank < detections.size(); ++rank) {
    const ScoredSpan& d = detections[rank];
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (matched[g] || ground_truth[g].video_id != d.video_id) continue;
      const double iou = temporal_iou(d.t_start, d.t_end, ground_truth[g].t_start,
                                      ground_truth[g].t_end);
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      matched[best] = true;
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(ground_truth.size());
}

std::vector<Detection> pair_actions(const std::vector<Detection>& verb_dets,
                                    const std::vector<Detection>& noun_dets) {
  std::vector<Detection> out;
  for (const Detection& v : verb_dets) {
    if (v.task != Task::verb) throw ShapeError("pair_actions: non-verb detection in verb list");
    for (const Detection& n : noun_dets) {
      if (n.task != Task::noun) throw ShapeError("pair_actions: non-noun detection in noun list");
      if (n.video_id != v.video_id) continue;
      if (temporal_iou(v.t_start, v.t_end, n.t_start, n.t_end) < 0.5) continue;
      Detection a;
      a.video_id = v.video_id;
      a.t_start = std::max(v.t_start, n.t_start);
      a.t_end = std::min(v.t_end, n.t_end);
      a.task = Task::action;
      a.class_a = v.class_a;
      a.class_b = n.class_a;
      a.intensity = v.intensity * n.intensity;
      out.push_back(std::move(a));
    }
  }
  return out;
}

const TaskReport& EvalReport::task(Task t) const {
  switch (t) {
    case Task::verb: return verb;
    case Task::noun: return noun;
    case Task::action: return action;
  }
  throw StateError("unreachable task tag");
}

namespace {

ClassKey detection_key(const Detection& d) {
  return d.task == Task::action ? ClassKey{d.class_a, d.class_b}
                                : ClassKey{d.class_a, -1};
}

ClassKey gt_key(const GroundTruthInstance& g, Task task) {
  switch (task) {
    case Task::verb: return {g.verb, -1};
    case Task::noun: return {g.noun, -1};
    case Task::action: return {g.verb, g.noun};
  }
  throw StateError("unreachable task tag");
}

TaskReport score_task(const std::vector<Detection>& dets,
                      const std::vector<GroundTruthInstance>& gt, Task task) {
  std::map<ClassKey, std::vector<GtSpan>> gt_by_class;
  for (const GroundTruthInstance& g : gt)
    gt_by_class[gt_key(g, task)].push_back({g.video_id, g.t_start, g.t_end});

  std::map<ClassKey, std::vector<ScoredSpan>> det_by_class;
  for (const Detection& d : dets) {
    if (d.task != task) continue;
    det_by_class[detection_key(d)].push_back(
        {d.video_id, d.t_start, d.t_end, d.intensity});
  }

  TaskReport rep;
  for (const auto& [key, spans] : gt_by_class) {
    std::array<double, 5> aps{};
    const auto it = det_by_class.find(key);
    static const std::vector<ScoredSpan> kNone;
    const std::vector<ScoredSpan>& class_dets = it == det_by_class.end() ? kNone : it->second;
    for (std::size_t t = 0; t < kIouThresholds.size(); ++t)
      aps[t] = average_precision(class_dets, spans, kIouThresholds[t]);
    rep.per_class[key] = aps;
  }
  for (std::size_t t = 0; t < kIouThresholds.size(); ++t) {
    double sum = 0.0;
    for (const auto& [key, aps] : rep.per_class) sum += aps[t];
    rep.map_at[t] = sum / static_cast<double>(rep.per_class.size());
  }
  double sum = 0.0;
  for (double m : rep.map_at) sum += m;
  rep.avg = sum / static_cast<double>(rep.map_at.size());
  return rep;
}

std::string class_label(const ClassKey& key) {
  return key.b < 0 ? std::to_string(key.a)
                   : std::to_string(key.a) + ":" + std::to_string(key.b);
}

}  // namespace

EvalReport evaluate(const std::vector<Detection>& detections,
                    const std::vector<GroundTruthInstance>& ground_truth) {
  if (ground_truth.empty())
    throw FormatError("cannot evaluate against empty ground truth");

  std::vector<Detection> verb_dets, noun_dets, action_dets;
  for (const Detection& d : detections) {
    if (d.task == Task::verb) verb_dets.push_back(d);
    else if (d.task == Task::noun) noun_dets.push_back(d);
    else action_dets.push_back(d);
  }
  if (action_dets.empty()) action_dets = pair_actions(verb_dets, noun_dets);

  EvalReport rep;
  rep.verb = score_task(verb_dets, ground_truth, Task::verb);
  rep.noun = score_task(noun_dets, ground_truth, Task::noun);
  rep.action = score_task(action_dets, ground_truth, Task::action);
  return rep;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "task,class,@0.1,@0.2,@0.3,@0.4,@0.5,Avg\n";
  for (Task task : {Task::verb, Task::noun, Task::action}) {
    const TaskReport& rep = report.task(task);
    auto row = [&out, task](const std::string& cls, const std::array<double, 5>& aps,
                            double avg) {
      out << task_name(task) << ',' << cls;
      for (double a : aps) out << ',' << format_double(a);
      out << ',' << format_double(avg) << '\n';
    };
    for (const auto& [key, aps] : rep.per_class) {
      double avg = 0.0;
      for (double a : aps) avg += a;
      row(class_label(key), aps, avg / static_cast<double>(aps.size()));
    }
    row("ALL", rep.map_at, rep.avg);
  }
  if (!out.good()) throw IoError("failed writing " + path);
}

void write_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::ordered_json root;
  root["iou_thresholds"] = kIouThresholds;
  for (Task task : {Task::verb, Task::noun, Task::action}) {
    const TaskReport& rep = report.task(task);
    nlohmann::ordered_json node;
    nlohmann::ordered_json classes = nlohmann::ordered_json::object();
    for (const auto& [key, aps] : rep.per_class) classes[class_label(key)] = aps;
    node["classes"] = std::move(classes);
    node["map"] = rep.map_at;
    node["avg"] = rep.avg;
    root["tasks"][task_name(task)] = std::move(node);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << root.dump(2) << '\n';
  if (!out.good()) throw IoError("failed writing " + path);
}

}  // namespace nwsd
