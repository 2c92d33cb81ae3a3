#pragma once

#include <map>
#include <string>
#include <vector>

#include "nwsd/errors.hpp"

namespace nwsd {

enum class Task { verb, noun, action };

std::string task_name(Task t);
Task task_from_name(const std::string& s);

// Single-timestamp weak label: narration start time plus verb/noun classes.
struct NarrationAnnotation {
  std::string video_id;
  double time = 0.0;  // seconds
  int verb = 0;
  int noun = 0;
};

// Span between consecutive narration timestamps; the MIL bag.
struct ClipSpan {
  std::string video_id;
  long start_frame = 0;
  long end_frame = 0;  // exclusive
  int verb = 0;
  int noun = 0;
  long length() const { return end_frame - start_frame; }
};

struct GroundTruthInstance {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;  // seconds, exclusive
  int verb = 0;
  int noun = 0;
};

// Scored temporal detection. For task action, class_b carries the noun
// index; otherwise class_b is -1 and class_a is the verb or noun index.
struct Detection {
  std::string video_id;
  double t_start = 0.0;
  double t_end = 0.0;
  Task task = Task::verb;
  int class_a = 0;
  int class_b = -1;
  double intensity = 0.0;
};

// One-hot clip label over C classes.
struct ClipLabel {
  int hot = 0;
  int num_classes = 1;
  std::vector<double> one_hot() const;
};

double frames_to_seconds(long frame, double fps);
long seconds_to_frame(double seconds, double fps);

// --- file formats (UTF-8, '.' decimal separator) ---

// Annotation CSV: header `video_id,time_sec,verb,noun`.
std::vector<NarrationAnnotation> read_annotations_csv(const std::string& path);
void write_annotations_csv(const std::string& path,
                           const std::vector<NarrationAnnotation>& anns);

// Ground-truth CSV: header `video_id,t_start,t_end,verb,noun`.
std::vector<GroundTruthInstance> read_ground_truth_csv(const std::string& path);
void write_ground_truth_csv(const std::string& path,
                            const std::vector<GroundTruthInstance>& gt);

// Detections: JSON Lines with keys video_id,t_start,t_end,task,class,intensity.
std::vector<Detection> read_detections_jsonl(const std::string& path);
void write_detections_jsonl(const std::string& path,
                            const std::vector<Detection>& dets);

// --- validation ---

struct VideoInfo {
  std::string video_id;
  long len_frames = 0;
  double fps = 1.0;
};

struct DatasetViolation {
  std::string video_id;
  std::string kind;    // e.g. "unsorted_time", "class_out_of_range"
  std::string detail;
};

// Report-only scan: out-of-range classes, non-strictly-increasing
// timestamps, annotations past the video end, unknown video ids.
std::vector<DatasetViolation> validate_dataset(
    const std::vector<NarrationAnnotation>& annotations,
    const std::vector<VideoInfo>& videos, int c_verb, int c_noun);

}  // namespace nwsd
