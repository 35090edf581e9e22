#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>

#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"
#include "handsynth/mask/morphology.hpp"
#include "handsynth/pipeline/runner.hpp"
#include "handsynth/pipeline/toy_data.hpp"
#include "handsynth/pipeline/video.hpp"
#include "test_support.hpp"
#include "toy_scenes.hpp"

using namespace handsynth;
using namespace handsynth::pipeline;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

LabeledFrame flat_frame(int index, float value, int size = 8) {
  LabeledFrame f;
  f.image = ImageFrame(size, size, ColorSpace::RGB, value);
  f.mask = BinaryMask(size, size);
  f.mask.set(2, 3);
  f.bbox = {3, 2, 3, 2};
  f.fingertip = {3, 2};
  f.gesture_label = "circle";
  f.domain_label = "red";
  f.frame_index = index;
  return f;
}

compose::ComposerCheckpoint short_composer() {
  static const compose::ComposerCheckpoint ck = [] {
    const auto toy = testing::make_toy_scenes(4);
    compose::ComposerSchedule sched;
    sched.bg_epochs = 2;
    sched.fg_epochs = 2;
    return compose::train_composer(toy.samples, testing::toy_architecture(), sched, testing::scratch_dir("pipe_comp"));
  }();
  return ck;
}

gesture::MaskSequence circle_sequence(int n) {
  BinaryMask m(8, 8);
  for (int y = 3; y < 6; ++y) {
    for (int x = 3; x < 5; ++x) m.set(y, x);
  }
  gesture::GestureSpec spec;
  spec.kind = gesture::GestureKind::Circle;
  spec.n_frames = n;
  spec.center = {4, 4};
  spec.radius = 1;
  return gesture::synthesize_mask_sequence(mask::make_hand_mask(m), spec);
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("jitter of alternating black and white is one, of a still video zero") {
  LabeledVideo v;
  v.frames = {flat_frame(0, 0.0f), flat_frame(1, 1.0f), flat_frame(2, 0.0f)};
  auto r = background_jitter(v);
  REQUIRE(r.per_transition.size() == 2);
  CHECK(r.per_transition[0] == 1.0);
  CHECK(r.mean == 1.0);

  v.frames = {flat_frame(0, 0.4f), flat_frame(1, 0.4f)};
  CHECK(background_jitter(v).mean == 0.0);

  // pixels under either mask are ignored
  v.frames[1].image.at(2, 3, 0) = 1.0f;
  CHECK(background_jitter(v).mean == 0.0);
  v.frames[1].image.at(0, 0, 0) = 1.0f;
  CHECK(background_jitter(v).mean == doctest::Approx(0.6 / (3.0 * 63.0)));

  v.frames.resize(1);
  CHECK(code_of([&] { background_jitter(v); }) == ErrorCode::TooFewFrames);
}

TEST_CASE("export writes one image and one annotation line per frame and round-trips") {
  LabeledVideo v;
  for (int k = 0; k < 12; ++k) v.frames.push_back(flat_frame(k, static_cast<float>(k) / 11.0f));
  v.provenance["seed"] = 7;
  v.warnings.push_back("note");
  const auto dir = testing::scratch_dir("pipe_export");
  const auto manifest = export_video(v, dir);
  CHECK(fs::exists(manifest));

  int pngs = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind("frame_", 0) == 0) ++pngs;
  }
  CHECK(pngs == 12);
  std::ifstream lines(dir / kAnnotationsFile);
  int n = 0;
  for (std::string line; std::getline(lines, line);) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("frame_index") == n);
    ++n;
  }
  CHECK(n == 12);

  const auto back = import_video(dir);
  REQUIRE(back.frames.size() == 12);
  for (int k = 0; k < 12; ++k) {
    auto want = v.frames[k];
    want.image = quantize_8bit(want.image);
    CHECK(back.frames[k] == want);
  }
  CHECK(back.fps == v.fps);
  CHECK(back.provenance == v.provenance);
  CHECK(back.warnings == v.warnings);

  LabeledVideo empty;
  CHECK(code_of([&] { export_video(empty, testing::scratch_dir("pipe_export_empty")); }) == ErrorCode::EmptySequence);
}

TEST_CASE("assembled videos keep mask-derived labels; single background is still") {
  const compose::SceneComposer comp(short_composer());
  const auto seq = circle_sequence(8);
  const auto single = assemble_video(seq, comp, "red", 3, BackgroundMode::Single);
  const auto per_frame = assemble_video(seq, comp, "red", 3, BackgroundMode::PerFrame);
  REQUIRE(single.frames.size() == 8);
  for (const auto& f : single.frames) {
    CHECK(f.bbox == mask::bounding_box(f.mask));
    CHECK(f.bbox.contains(Pixel{static_cast<int>(f.fingertip.x), static_cast<int>(f.fingertip.y)}));
    CHECK(f.domain_label == "red");
  }
  CHECK(background_jitter(single).mean == 0.0);
  CHECK(background_jitter(per_frame).mean > 0.0);
  CHECK(assemble_video(seq, comp, "red", 3, BackgroundMode::PerFrame).frames == per_frame.frames);
  CHECK(code_of([&] { assemble_video(seq, comp, "green", 3); }) == ErrorCode::UnknownDomain);
  CHECK(code_of([&] { assemble_video({}, comp, "red", 3); }) == ErrorCode::EmptySequence);
}

TEST_CASE("translating with a passthrough generator leaves labels and maps pixels through tanh") {
  translate::GeneratorConfig cfg;
  cfg.input_size = 8;
  cfg.base_channels = 24;
  cfg.n_res_blocks = 2;
  cfg.norm = translate::Normalization::None;
  const auto gen = translate::make_passthrough_generator(cfg);
  const compose::SceneComposer comp(short_composer());
  const auto video = assemble_video(circle_sequence(4), comp, "red", 1);
  const auto out = translate_video(video, gen, "blue");
  REQUIRE(out.frames.size() == video.frames.size());
  CHECK_FALSE(out.warnings.empty());
  for (std::size_t k = 0; k < out.frames.size(); ++k) {
    const auto& a = video.frames[k];
    const auto& b = out.frames[k];
    CHECK(b.mask == a.mask);
    CHECK(b.bbox == a.bbox);
    CHECK(b.fingertip == a.fingertip);
    CHECK(b.domain_label == "blue");
    for (std::size_t i = 0; i < a.image.data().size(); ++i) {
      const double want = (std::tanh(2.0 * a.image.data()[i] - 1.0) + 1.0) / 2.0;
      CHECK(b.image.data()[i] == doctest::Approx(want).epsilon(1e-4));
    }
  }
  cfg.input_size = 16;
  cfg.n_downsamples = 4;
  cfg.base_channels = 96;
  CHECK(code_of([&] { translate_video(video, translate::make_passthrough_generator(cfg)); }) ==
        ErrorCode::ShapeIncompatible);
}

TEST_CASE("unknown config keys are rejected by name with exit code 2") {
  const auto dir = testing::scratch_dir("pipe_badcfg");
  write_file(dir / "bad.cfg", "pipeline.seed = 1\ncompose.lr = 0.1\n");
  try {
    PipelineRunner(KeyValueConfig::load(dir / "bad.cfg"));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("compose.lr") != std::string::npos);
  }
  CHECK(run_pipeline(dir / "bad.cfg") == 2);
  write_file(dir / "stage.cfg", "pipeline.stages = ingest, paint\n");
  CHECK(run_pipeline(dir / "stage.cfg") == 2);
  write_file(dir / "missing.cfg", "dataset.root = nowhere\npipeline.stages = ingest\n");
  CHECK(run_pipeline(dir / "missing.cfg") == 3);
}

TEST_CASE("small pipeline run: manifests, seeds and reproducible digests") {
  const auto dir = testing::scratch_dir("pipe_run");
  ToyDatasetOptions data;
  data.frames_per_environment = 3;
  data.size = 32;
  write_toy_dataset(dir / "data", data);
  write_file(dir / "run.cfg",
             "pipeline.out_dir = out\n"
             "pipeline.seed = 5\n"
             "dataset.root = data\n"
             "blob.min_area = 10\n"
             "gesture.kind = circle\n"
             "gesture.n_frames = 4\n"
             "gesture.center_x = 16\n"
             "gesture.center_y = 16\n"
             "gesture.radius = 3\n"
             "compose.image_size = 32\n"
             "compose.base_channels = 4\n"
             "compose.disc_layers = 1\n"
             "compose.disc_base_channels = 4\n"
             "compose.n_res_blocks = 1\n"
             "compose.bg_epochs = 1\n"
             "compose.fg_epochs = 1\n"
             "metrics.compare_modes = true\n");
  REQUIRE(run_pipeline(dir / "run.cfg") == 0);
  const auto out = dir / "out";
  auto read = [](const fs::path& p) { return nlohmann::json::parse(std::ifstream(p)); };

  for (const auto& stage : {"ingest", "extract", "synthesize", "train_compose", "assemble", "export", "metrics"}) {
    const auto m = read(out / stage / kStageManifest);
    CHECK(m.at("stage") == stage);
    CHECK(m.at("seed") == 5);
  }
  const auto video = import_video(out / "export" / "video");
  CHECK(video.frames.size() == 4);
  CHECK(video.provenance.at("seeds").at("pipeline") == 5);
  CHECK(video.provenance.at("seeds").at("compose") == 5);
  CHECK(video.provenance.at("source_stage") == "assemble");
  for (const auto& f : video.frames) CHECK(f.bbox == mask::bounding_box(f.mask));
  const auto jitter = read(out / "metrics" / "jitter.json");
  CHECK(jitter.at("exported").at("mean") == 0.0);

  const auto first = read(out / "export" / kStageManifest).at("outputs");
  REQUIRE(run_pipeline(dir / "run.cfg") == 0);
  CHECK(read(out / "export" / kStageManifest).at("outputs") == first);

  // a single stage can be rerun on its own
  REQUIRE(run_pipeline(dir / "run.cfg", std::nullopt, std::nullopt, "metrics") == 0);
  CHECK(read(out / "export" / kStageManifest).at("outputs") == first);
  CHECK(run_pipeline(dir / "run.cfg", std::nullopt, std::nullopt, "nonsense") == 2);
}
