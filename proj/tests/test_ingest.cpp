#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "nwsd/ingest.hpp"
#include "tmpdir.hpp"

using namespace nwsd;
using nwsd_test::TmpDir;

TEST_CASE("modality names") {
  CHECK(modality_name(Modality::rgb) == "rgb");
  CHECK(modality_name(Modality::flow) == "flow");
  CHECK(modality_name(Modality::audio) == "audio");
  CHECK(modality_from_name("audio") == Modality::audio);
  CHECK_THROWS_AS(modality_from_name("depth"), ConfigError);
}

TEST_CASE("parse_modalities") {
  const auto all = parse_modalities("rgb,flow,audio");
  REQUIRE(all.size() == 3);
  CHECK(all[0] == Modality::rgb);
  CHECK(all[2] == Modality::audio);
  CHECK(parse_modalities(" audio , rgb ").size() == 2);
  CHECK_THROWS_AS(parse_modalities("rgb,rgb"), ConfigError);
  CHECK_THROWS_AS(parse_modalities(""), ConfigError);
  CHECK_THROWS_AS(parse_modalities(" , "), ConfigError);
}

TEST_CASE("interpolate_track anchors endpoints") {
  // 3 samples stretched to 5: positions 0, 0.5, 1, 1.5, 2
  const Matrix src = Matrix::from_rows({{0.0, 10.0}, {2.0, 20.0}, {4.0, 40.0}});
  const Matrix out = interpolate_track(src, 5);
  REQUIRE(out.rows == 5);
  REQUIRE(out.cols == 2);
  CHECK(out.at(0, 0) == 0.0);
  CHECK(out.at(1, 0) == doctest::Approx(1.0));
  CHECK(out.at(2, 0) == 2.0);
  CHECK(out.at(3, 0) == doctest::Approx(3.0));
  CHECK(out.at(4, 0) == 4.0);
  CHECK(out.at(1, 1) == doctest::Approx(15.0));
  CHECK(out.at(3, 1) == doctest::Approx(30.0));
}

TEST_CASE("interpolate_track downsamples with endpoint anchoring") {
  const Matrix src = Matrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}, {6.0}});
  const Matrix out = interpolate_track(src, 3);
  REQUIRE(out.rows == 3);
  CHECK(out.at(0, 0) == 0.0);
  CHECK(out.at(1, 0) == doctest::Approx(3.0));
  CHECK(out.at(2, 0) == 6.0);  // last row is the last source row exactly
}

TEST_CASE("interpolate_track degenerate axes") {
  const Matrix one = Matrix::from_rows({{7.0, -1.0}});
  const Matrix rep = interpolate_track(one, 4);
  for (int t = 0; t < 4; ++t) {
    CHECK(rep.at(t, 0) == 7.0);
    CHECK(rep.at(t, 1) == -1.0);
  }
  const Matrix many = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
  const Matrix single = interpolate_track(many, 1);
  CHECK(single.rows == 1);
  CHECK(single.at(0, 0) == 1.0);  // anchored to the first row

  CHECK_THROWS_AS(interpolate_track(many, 0), ShapeError);
  CHECK_THROWS_AS(interpolate_track(Matrix(), 3), ShapeError);
}

TEST_CASE("interpolate_track same length is identity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix src(6, 3);
  for (double& v : src.data) v = u(rng);
  CHECK(interpolate_track(src, 6) == src);
}

namespace {

VideoFeatures make_video() {
  VideoFeatures v;
  v.video_id = "vid_a";
  v.fps = 5.0;
  FeatureTrack rgb;
  rgb.modality = Modality::rgb;
  rgb.data = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}, {7.0, 8.0}});
  FeatureTrack flow;
  flow.modality = Modality::flow;
  flow.data = Matrix::from_rows({{-1.0}, {-2.0}, {-3.0}, {-4.0}});
  FeatureTrack audio;
  audio.modality = Modality::audio;
  audio.data = Matrix::from_rows({{10.0, 0.0, 0.0}, {20.0, 0.0, 0.0}});
  v.tracks = {rgb, flow, audio};
  return v;
}

}  // namespace

TEST_CASE("fuse concatenates rgb||flow||audio at the frame rate") {
  const VideoFeatures v = make_video();
  const FusedSequence f = fuse(v, {Modality::audio, Modality::rgb, Modality::flow});
  CHECK(f.video_id == "vid_a");
  CHECK(f.fps == 5.0);
  REQUIRE(f.length() == 4);
  REQUIRE(f.dim() == 2 + 1 + 3);
  // column order is rgb || flow || audio even though audio was listed first
  CHECK(f.data.at(0, 0) == 1.0);
  CHECK(f.data.at(0, 1) == 2.0);
  CHECK(f.data.at(0, 2) == -1.0);
  CHECK(f.data.at(0, 3) == 10.0);
  CHECK(f.data.at(3, 0) == 7.0);
  CHECK(f.data.at(3, 2) == -4.0);
  // 2 audio samples stretched to 4 frames: 10, 13.33.., 16.66.., 20
  CHECK(f.data.at(1, 3) == doctest::Approx(10.0 + 10.0 / 3.0));
  CHECK(f.data.at(3, 3) == 20.0);
}

TEST_CASE("fuse subsets") {
  const VideoFeatures v = make_video();
  const FusedSequence rgb_only = fuse(v, {Modality::rgb});
  CHECK(rgb_only.dim() == 2);
  CHECK(rgb_only.length() == 4);
  const FusedSequence audio_only = fuse(v, {Modality::audio});
  CHECK(audio_only.dim() == 3);
  CHECK(audio_only.length() == 4);  // frame axis still comes from RGB/flow
}

TEST_CASE("fuse errors") {
  VideoFeatures v = make_video();
  CHECK_THROWS_AS(fuse(v, {}), ConfigError);

  VideoFeatures audio_only;
  audio_only.video_id = "vid_b";
  audio_only.tracks = {v.tracks[2]};
  CHECK_THROWS_WITH_AS(fuse(audio_only, {Modality::audio}),
                       doctest::Contains("neither RGB nor flow"), FormatError);

  VideoFeatures no_flow = v;
  no_flow.tracks.erase(no_flow.tracks.begin() + 1);
  CHECK_THROWS_WITH_AS(fuse(no_flow, {Modality::rgb, Modality::flow}),
                       doctest::Contains("'flow' selected but missing"), ConfigError);

  VideoFeatures mismatched = v;
  mismatched.tracks[1].data = Matrix::from_rows({{-1.0}, {-2.0}});
  CHECK_THROWS_WITH_AS(fuse(mismatched, {Modality::rgb}),
                       doctest::Contains("lengths disagree"), FormatError);
}

TEST_CASE("feature file round-trip") {
  TmpDir tmp("feat");
  const std::string path = tmp.file("vid_a.nwsd");
  const VideoFeatures v = make_video();
  write_features(path, v);
  const VideoFeatures back = load_features(path);
  CHECK(back.video_id == v.video_id);
  CHECK(back.fps == v.fps);
  REQUIRE(back.tracks.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.tracks[i].modality == v.tracks[i].modality);
    CHECK(back.tracks[i].data == v.tracks[i].data);
  }
}

TEST_CASE("feature file corruption reports the byte offset") {
  TmpDir tmp("feat_err");
  const std::string path = tmp.file("v.nwsd");
  write_features(path, make_video());

  // truncate mid-payload
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  REQUIRE(bytes.size() > 40);
  std::ofstream(tmp.file("trunc.nwsd"), std::ios::binary)
      << bytes.substr(0, bytes.size() - 7);
  try {
    load_features(tmp.file("trunc.nwsd"));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("truncated") != std::string::npos);
    CHECK(msg.find("at byte") != std::string::npos);
  }

  // wrong magic
  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream(tmp.file("magic.nwsd"), std::ios::binary) << bad;
  CHECK_THROWS_WITH_AS(load_features(tmp.file("magic.nwsd")),
                       doctest::Contains("bad magic"), FormatError);

  // bad version
  std::string badver = bytes;
  badver[4] = 9;
  std::ofstream(tmp.file("ver.nwsd"), std::ios::binary) << badver;
  CHECK_THROWS_WITH_AS(load_features(tmp.file("ver.nwsd")),
                       doctest::Contains("unsupported feature file version"), FormatError);

  // trailing garbage
  std::ofstream(tmp.file("trail.nwsd"), std::ios::binary) << bytes << "zz";
  CHECK_THROWS_WITH_AS(load_features(tmp.file("trail.nwsd")),
                       doctest::Contains("trailing bytes"), FormatError);
}

TEST_CASE("feature file rejects duplicate tracks") {
  TmpDir tmp("feat_dup");
  const std::string path = tmp.file("dup.nwsd");
  VideoFeatures v = make_video();
  v.tracks.push_back(v.tracks[0]);
  write_features(path, v);
  CHECK_THROWS_WITH_AS(load_features(path),
                       doctest::Contains("duplicate rgb track"), FormatError);
}
