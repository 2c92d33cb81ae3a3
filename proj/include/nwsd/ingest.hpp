#pragma once

#include <string>
#include <vector>

#include "nwsd/matrix.hpp"

namespace nwsd {

enum class Modality : int { rgb = 0, flow = 1, audio = 2 };

std::string modality_name(Modality m);
Modality modality_from_name(const std::string& s);

// One modality's raw feature sequence for a video, at its own sample rate.
struct FeatureTrack {
  Modality modality = Modality::rgb;
  Matrix data;  // T x dim
  int dim() const { return data.cols; }
  int length() const { return data.rows; }
};

// Per-video container as stored in a feature file.
struct VideoFeatures {
  std::string video_id;
  double fps = 1.0;  // rate of the RGB/flow frame axis
  std::vector<FeatureTrack> tracks;
  const FeatureTrack* find(Modality m) const;
};

// Early-fused per-frame features: concatenation rgb || flow || audio over
// the enabled modalities, all resampled to the RGB/flow frame count.
struct FusedSequence {
  std::string video_id;
  double fps = 1.0;
  Matrix data;  // L x dim
  long length() const { return data.rows; }
  int dim() const { return data.cols; }
};

// Resamples a track to target_len rows, anchoring endpoints to endpoints:
// output row t reads source position t*(T-1)/(target_len-1). A single-row
// source (or target_len == 1) replicates the anchored row.
Matrix interpolate_track(const Matrix& track, long target_len);

// Fuses the selected modalities. The video must carry an RGB or flow track
// to define the frame count L even when neither is selected.
FusedSequence fuse(const VideoFeatures& video, const std::vector<Modality>& selected);

// Feature file: magic NWSD, version 1; see write_features for the layout.
VideoFeatures load_features(const std::string& path);
void write_features(const std::string& path, const VideoFeatures& video);

std::vector<Modality> parse_modalities(const std::string& comma_list);

}  // namespace nwsd
