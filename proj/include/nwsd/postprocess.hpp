#pragma once

#include <string>
#include <vector>

#include "nwsd/datamodel.hpp"
#include "nwsd/matrix.hpp"

namespace nwsd {

// One thresholded run of frames for a single class. end_frame exclusive.
struct Segment {
  long start_frame = 0;
  long end_frame = 0;
  int class_index = 0;
  double intensity = 0.0;         // mean smoothed score over the span
  double source_threshold = 0.0;  // threshold that retrieved it
  long length() const { return end_frame - start_frame; }
};

struct PostprocessConfig {
  int smooth_size = 3;
  std::vector<double> thresholds;  // default: 40 evenly spaced in [0.01, 0.4]
  double nms_iou = 0.4;

  static PostprocessConfig defaults();
  // Throws ConfigError: smooth_size must be odd >= 1, thresholds strictly
  // increasing within (0,1), nms_iou in (0,1].
  void validate() const;
};

// Mean over a centered window of `size`, clipped to the sequence bounds
// (shorter windows at the edges, no invented padding).
std::vector<double> smooth(const std::vector<double>& scores, int size);

// Maximal runs of consecutive frames with score >= threshold, in order.
std::vector<Segment> retrieve_segments(const std::vector<double>& scores,
                                       double threshold);

// Arithmetic mean of scores over [start_frame, end_frame).
double score_segment(const std::vector<double>& scores, const Segment& seg);

double segment_iou(const Segment& a, const Segment& b);

// Greedy NMS over same-class segments: sweep in descending intensity
// (ties: earlier start, then longer), keep a segment iff its IoU with every
// previously kept one is below iou_threshold.
std::vector<Segment> nms(std::vector<Segment> segments, double iou_threshold);

// Full chain for one head of one video: per class smooth -> retrieve at all
// thresholds -> score -> NMS; classes concatenated, sorted by descending
// intensity (stable, so ties stay in (class, start) order), frames converted
// to seconds.
std::vector<Detection> postprocess_scores(const std::string& video_id,
                                          const Matrix& scores, Task task,
                                          const PostprocessConfig& config,
                                          double fps);

// Both heads of one video.
struct HeadScores {
  std::string video_id;
  double fps = 1.0;
  Matrix verb;  // L x C_verb rows are probability distributions
  Matrix noun;  // L x C_noun
};

std::vector<Detection> postprocess_video(const HeadScores& scores,
                                         const PostprocessConfig& config);

// Score dump: magic NWSS, version, then per video the id, fps and both
// score matrices. Lets post-processing sweeps rerun without the model.
void write_scores(const std::string& path, const std::vector<HeadScores>& videos);
std::vector<HeadScores> load_scores(const std::string& path);

}  // namespace nwsd
