#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "handsynth/compose/composer.hpp"
#include "handsynth/compose/scene.hpp"
#include "handsynth/core/error.hpp"
#include "test_support.hpp"
#include "toy_scenes.hpp"

using namespace handsynth;
using namespace handsynth::compose;

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

ImageFrame random_image(int h, int w, std::mt19937_64& rng) {
  ImageFrame img(h, w);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : img.data()) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("composite takes foreground on the mask and background elsewhere") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto fg = random_image(9, 13, rng), bg = random_image(9, 13, rng);
    const auto m = testing::random_mask(9, 13, 0.3, rng);
    const auto out = composite(fg, bg, m);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 13; ++x) {
        for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == (m.at(y, x) ? fg : bg).at(y, x, c));
      }
    }
  }
  CHECK(code_of([] { composite(ImageFrame(2, 2), ImageFrame(2, 3), BinaryMask(2, 2)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("fingertip heatmap peaks at the fingertip") {
  LayoutMap layout{BinaryMask(16, 20), {7, 5}, "x"};
  const auto t = fingertip_channel(layout);
  CHECK(t.shape() == nn::Shape{1, 1, 16, 20});
  CHECK(t.at(0, 0, 5, 7) == 1.0f);
  const double d2 = 3.0 * 3.0 + 4.0 * 4.0;
  CHECK(t.at(0, 0, 9, 10) == doctest::Approx(std::exp(-d2 / (2 * kFingertipSigma * kFingertipSigma))));
}

TEST_CASE("inpainting fills the mask from the nearest unmasked colour") {
  ImageFrame img(5, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) img.at(y, x, 0) = x < 2 ? 0.25f : 0.75f;
  }
  BinaryMask m(5, 5);
  m.set(2, 2);
  m.set(2, 1);
  const auto out = inpaint_nearest_border(img, m);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      if (!m.at(y, x)) CHECK(out.at(y, x, 0) == img.at(y, x, 0));
    }
  }
  CHECK(out.at(2, 1, 0) == 0.25f);
  CHECK(out.at(2, 2, 0) == 0.75f);
  BinaryMask all(5, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) all.set(y, x);
  }
  CHECK(inpaint_nearest_border(img, all) == img);
}

TEST_CASE("mean skin hue is circular") {
  ImageFrame hsv(1, 2, ColorSpace::RGB);
  // pure red (0°) and red-magenta (~350°) average near 355°, not 175°
  hsv.at(0, 0, 0) = 1.0f;
  hsv.at(0, 1, 0) = 1.0f;
  hsv.at(0, 1, 2) = 1.0f / 6.0f;
  BinaryMask m(1, 2);
  m.set(0, 0);
  m.set(0, 1);
  const double h = mean_skin_hue(hsv, m);
  CHECK((h > 350.0 || h < 1.0));
  CHECK(std::isnan(mean_skin_hue(hsv, BinaryMask(1, 2))));
}

TEST_CASE("sampling errors and determinism before training") {
  const SceneComposer comp(testing::toy_architecture(), {"red", "blue"}, 3);
  CHECK(comp.label_index("blue") == 1);
  CHECK(code_of([&] { comp.label_index("green"); }) == ErrorCode::UnknownDomain);
  CHECK(code_of([&] { comp.generate_background("green", 0, 8, 8); }) == ErrorCode::UnknownDomain);
  CHECK(code_of([&] { comp.generate_background("red", 0, 6, 8); }) == ErrorCode::ShapeIncompatible);
  CHECK(comp.generate_background("red", 5, 8, 8) == comp.generate_background("red", 5, 8, 8));
  CHECK(comp.generate_background("red", 5, 8, 8) != comp.generate_background("red", 6, 8, 8));
  const LayoutMap layout{BinaryMask(8, 8), {3, 3}, "red"};
  CHECK(code_of([&] { comp.generate_foreground(layout, ImageFrame(8, 8)); }) == ErrorCode::UntrainedModel);
  CHECK(code_of([] { SceneComposer(testing::toy_architecture(), {}, 0); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("short composer training: invariant, checkpoint and errors") {
  const auto toy = testing::make_toy_scenes(4);
  ComposerSchedule sched;
  sched.bg_epochs = 2;
  sched.fg_epochs = 2;
  sched.seed = 4;
  const auto dir = testing::scratch_dir("compose_short");
  const auto ck = train_composer(toy.samples, testing::toy_architecture(), sched, dir);
  CHECK(ck.bg_history.size() == 2);
  CHECK(ck.fg_history.size() == 2);
  CHECK(ComposerCheckpoint::load(dir / kComposerCheckpoint) == ck);
  CHECK(train_composer(toy.samples, testing::toy_architecture(), sched, testing::scratch_dir("compose_short2")) == ck);

  const SceneComposer comp(ck);
  for (const auto& s : toy.samples) {
    const auto bg = comp.generate_background(s.domain, 1, 8, 8);
    const auto out = comp.generate_foreground({s.hand.mask, Point2D(s.hand.fingertip.x, s.hand.fingertip.y), s.domain}, bg);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (s.hand.mask.at(y, x)) continue;
        for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == bg.at(y, x, c));
      }
    }
  }
  CHECK(code_of([&] { train_composer({}, testing::toy_architecture(), sched, dir); }) == ErrorCode::EmptyDomain);

  ingest::DatasetIndex index;
  index.records.push_back({"missing", "/nonexistent.png", {0, 0, 1, 1}, {0, 0}, "env"});
  index.environments = {"env"};
  CHECK(code_of([&] { train_composer(index, {}, testing::toy_architecture(), sched, dir); }) == ErrorCode::MissingMask);
}

TEST_CASE("composer config keys") {
  const auto cfg = KeyValueConfig::parse("compose.image_size = 32\ncompose.disc_layers = 1\ncompose.bg_epochs = 7\ncompose.instance_noise = 0\n");
  CHECK(ComposerArchitecture::from_config(cfg).image_size == 32);
  const auto s = ComposerSchedule::from_config(cfg);
  CHECK(s.bg_epochs == 7);
  CHECK(s.instance_noise == 0.0);
  CHECK_THROWS_AS(ComposerArchitecture::from_config(KeyValueConfig::parse("compose.image_size = 30")), Error);
}
