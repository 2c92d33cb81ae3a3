#include "nwsd/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nwsd/binio.hpp"
#include "nwsd/config.hpp"

namespace nwsd {

namespace {
constexpr std::uint32_t kFeatureVersion = 1;
}

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::rgb: return "rgb";
    case Modality::flow: return "flow";
    case Modality::audio: return "audio";
  }
  throw StateError("unreachable modality tag");
}

Modality modality_from_name(const std::string& s) {
  if (s == "rgb") return Modality::rgb;
  if (s == "flow") return Modality::flow;
  if (s == "audio") return Modality::audio;
  throw ConfigError("unknown modality '" + s + "' (expected rgb, flow or audio)");
}

const FeatureTrack* VideoFeatures::find(Modality m) const {
  for (const auto& t : tracks)
    if (t.modality == m) return &t;
  return nullptr;
}

Matrix interpolate_track(const Matrix& track, long target_len) {
  if (track.rows < 1) throw ShapeError("interpolate_track: empty source track");
  if (target_len < 1) throw ShapeError("interpolate_track: target length must be >= 1");
  Matrix out(static_cast<int>(target_len), track.cols);
  if (track.rows == 1 || target_len == 1) {
    // Degenerate axes: replicate the anchored source row.
    for (long t = 0; t < target_len; ++t)
      for (int c = 0; c < track.cols; ++c) out.at(static_cast<int>(t), c) = track.at(0, c);
    return out;
  }
  const double scale =
      static_cast<double>(track.rows - 1) / static_cast<double>(target_len - 1);
  for (long t = 0; t < target_len; ++t) {
    const double pos = static_cast<double>(t) * scale;
    const int lo = std::min(static_cast<int>(pos), track.rows - 2);
    const double w = pos - lo;
    for (int c = 0; c < track.cols; ++c)
      out.at(static_cast<int>(t), c) =
          (1.0 - w) * track.at(lo, c) + w * track.at(lo + 1, c);
  }
  return out;
}

FusedSequence fuse(const VideoFeatures& video, const std::vector<Modality>& selected) {
  if (selected.empty()) throw ConfigError("fuse: modality selection is empty");
  const FeatureTrack* rgb = video.find(Modality::rgb);
  const FeatureTrack* flow = video.find(Modality::flow);
  if (!rgb && !flow)
    throw FormatError("fuse: video '" + video.video_id +
                      "' has neither RGB nor flow track to define the frame axis");
  if (rgb && flow && rgb->length() != flow->length())
    throw FormatError("fuse: RGB and flow lengths disagree for video '" +
                      video.video_id + "'");
  const long len = rgb ? rgb->length() : flow->length();

  // Fixed concatenation order regardless of selection order.
  const Modality order[] = {Modality::rgb, Modality::flow, Modality::audio};
  std::vector<Matrix> parts;
  int dim = 0;
  for (Modality m : order) {
    if (std::find(selected.begin(), selected.end(), m) == selected.end()) continue;
    const FeatureTrack* t = video.find(m);
    if (!t)
      throw ConfigError("fuse: modality '" + modality_name(m) +
                        "' selected but missing in video '" + video.video_id + "'");
    parts.push_back(t->length() == len ? t->data : interpolate_track(t->data, len));
    dim += t->dim();
  }

  FusedSequence fused;
  fused.video_id = video.video_id;
  fused.fps = video.fps;
  fused.data = Matrix(static_cast<int>(len), dim);
  int col0 = 0;
  for (const Matrix& p : parts) {
    for (int r = 0; r < p.rows; ++r)
      for (int c = 0; c < p.cols; ++c) fused.data.at(r, col0 + c) = p.at(r, c);
    col0 += p.cols;
  }
  return fused;
}

void write_features(const std::string& path, const VideoFeatures& video) {
  BinWriter w(path);
  w.magic("NWSD");
  w.u32(kFeatureVersion);
  w.str(video.video_id);
  w.f64(video.fps);
  w.u32(static_cast<std::uint32_t>(video.tracks.size()));
  for (const auto& t : video.tracks) {
    w.u8(static_cast<std::uint8_t>(t.modality));
    w.u32(static_cast<std::uint32_t>(t.dim()));
    w.u32(static_cast<std::uint32_t>(t.length()));
    w.f64_array(t.data.data.data(), t.data.size());
  }
  w.close();
}

VideoFeatures load_features(const std::string& path) {
  BinReader r(path);
  r.magic("NWSD");
  const std::uint32_t version = r.u32();
  if (version != kFeatureVersion)
    r.fail("unsupported feature file version " + std::to_string(version));
  VideoFeatures video;
  video.video_id = r.str();
  video.fps = r.f64();
  if (!(video.fps > 0.0) || !std::isfinite(video.fps)) r.fail("fps must be positive");
  const std::uint32_t n_tracks = r.u32();
  for (std::uint32_t i = 0; i < n_tracks; ++i) {
    const std::uint8_t tag = r.u8();
    if (tag > 2) r.fail("unknown modality tag " + std::to_string(tag));
    const std::uint32_t dim = r.u32();
    const std::uint32_t len = r.u32();
    if (dim == 0 || len == 0) r.fail("track with zero dimension or length");
    FeatureTrack track;
    track.modality = static_cast<Modality>(tag);
    track.data = Matrix(static_cast<int>(len), static_cast<int>(dim));
    r.f64_array(track.data.data.data(), track.data.size());
    video.tracks.push_back(std::move(track));
  }
  if (!r.at_eof()) r.fail("trailing bytes after declared tracks");
  for (std::size_t i = 0; i < video.tracks.size(); ++i)
    for (std::size_t j = i + 1; j < video.tracks.size(); ++j)
      if (video.tracks[i].modality == video.tracks[j].modality)
        throw FormatError(path + ": duplicate " +
                          modality_name(video.tracks[i].modality) + " track");
  return video;
}

std::vector<Modality> parse_modalities(const std::string& comma_list) {
  std::vector<Modality> out;
  std::istringstream ss(comma_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const Modality m = modality_from_name(item);
    if (std::find(out.begin(), out.end(), m) != out.end())
      throw ConfigError("modality '" + item + "' listed twice");
    out.push_back(m);
  }
  if (out.empty()) throw ConfigError("modality list is empty");
  return out;
}

}  // namespace nwsd
