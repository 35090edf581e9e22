#include <doctest.h>

#include <random>

#include "handsynth/core/error.hpp"
#include "handsynth/mask/color.hpp"
#include "handsynth/mask/extraction.hpp"
#include "handsynth/mask/grabcut.hpp"
#include "handsynth/mask/graph_cut.hpp"
#include "handsynth/mask/morphology.hpp"
#include "handsynth/pipeline/toy_data.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace handsynth;
using namespace handsynth::mask;

namespace {

BinaryMask from_rows(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) m.set(y, x, rows[y][x] == '#');
  }
  return m;
}

ImageFrame hsv_pixel(float h, float s, float v) {
  ImageFrame f(1, 1, ColorSpace::HSV);
  f.at(0, 0, 0) = h;
  f.at(0, 0, 1) = s;
  f.at(0, 0, 2) = v;
  return f;
}

}  // namespace

TEST_CASE("rgb_to_hsv worked examples") {
  auto one = [](float r, float g, float b) {
    ImageFrame f(1, 1);
    f.at(0, 0, 0) = r;
    f.at(0, 0, 1) = g;
    f.at(0, 0, 2) = b;
    return rgb_to_hsv(f);
  };
  const auto red = one(1, 0, 0);
  CHECK(red.at(0, 0, 0) == 0.0f);
  CHECK(red.at(0, 0, 1) == 1.0f);
  CHECK(red.at(0, 0, 2) == 1.0f);
  const auto gray = one(0.5f, 0.5f, 0.5f);
  CHECK(gray.at(0, 0, 0) == 0.0f);
  CHECK(gray.at(0, 0, 1) == 0.0f);
  CHECK(gray.at(0, 0, 2) == 0.5f);
  const auto c = one(0.2f, 0.4f, 0.6f);
  CHECK(c.at(0, 0, 0) == doctest::Approx(210.0).epsilon(1e-5));
  CHECK(c.at(0, 0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
  CHECK(c.at(0, 0, 2) == doctest::Approx(0.6).epsilon(1e-6));
  CHECK_THROWS_AS(one(1.5f, 0, 0), Error);
}

TEST_CASE("hsv round trip on random colours") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageFrame f(16, 16);
  for (float& v : f.data()) v = u(rng);
  const auto back = hsv_to_rgb(rgb_to_hsv(f));
  for (std::size_t i = 0; i < f.data().size(); ++i) CHECK(back.data()[i] == doctest::Approx(f.data()[i]).epsilon(1e-5));
}

TEST_CASE("skin threshold matches a per-pixel membership loop and commutes with flips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> hue(0.0f, 360.0f), u(0.0f, 1.0f);
  ImageFrame hsv(12, 17, ColorSpace::HSV);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 17; ++x) {
      hsv.at(y, x, 0) = hue(rng);
      hsv.at(y, x, 1) = u(rng);
      hsv.at(y, x, 2) = u(rng);
    }
  }
  for (const HsvRange range : {HsvRange{}, HsvRange{340.0, 30.0, 0.1, 0.9, 0.2, 1.0}}) {
    const auto m = skin_threshold(hsv, range);
    ImageFrame flipped(12, 17, ColorSpace::HSV);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 17; ++x) {
        const double h = hsv.at(y, x, 0), s = hsv.at(y, x, 1), v = hsv.at(y, x, 2);
        const bool hue_ok = range.h_low <= range.h_high ? (h >= range.h_low && h <= range.h_high)
                                                        : (h >= range.h_low || h <= range.h_high);
        const bool want = hue_ok && s >= range.s_low && s <= range.s_high && v >= range.v_low && v <= range.v_high;
        CHECK(m.at(y, x) == want);
        for (int c = 0; c < 3; ++c) flipped.at(y, 16 - x, c) = hsv.at(y, x, c);
      }
    }
    const auto mf = skin_threshold(flipped, range);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 17; ++x) CHECK(mf.at(y, 16 - x) == m.at(y, x));
    }
  }
  CHECK(skin_threshold(hsv_pixel(20, 0.4f, 0.8f), {}).at(0, 0));
  CHECK_FALSE(skin_threshold(hsv_pixel(20, 0.4f, 0.0f), HsvRange{0, 50, 0.23, 0.68, 0.2, 1.0}).at(0, 0));
}

TEST_CASE("erode examples and oracle agreement") {
  const auto block = from_rows({".....", ".###.", ".###.", ".###.", "....."});
  CHECK(erode(block, 0) == block);
  CHECK(erode(block, 1) == from_rows({".....", ".....", "..#..", ".....", "....."}));
  CHECK_FALSE(erode(BinaryMask(6, 6), 2).any());

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = oracle::random_shape_mask(rng, 40);
    const int r = trial % 4;
    const auto e = erode(m, r);
    CHECK(e == oracle::erode(m, r));
    CHECK(e.subset_of(m));
  }
}

TEST_CASE("remove_small_blobs examples, oracle agreement and properties") {
  const auto three = from_rows({"......", ".##...", "..#...", "......"});
  CHECK_FALSE(remove_small_blobs(three, 5).any());
  CHECK(remove_small_blobs(three, 0) == three);
  const auto two = from_rows({"##.....", "##.....", ".......", "....###", "....###", "....###"});
  CHECK(remove_small_blobs(two, 5) == from_rows({".......", ".......", ".......", "....###", "....###", "....###"}));

  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = testing::random_mask(1 + trial, 30, 0.3 + 0.01 * trial, rng);
    const std::size_t a = trial % 7;
    const auto out = remove_small_blobs(m, a);
    CHECK(out == oracle::remove_small_blobs(m, a));
    CHECK(out.subset_of(m));
    CHECK(remove_small_blobs(out, a) == out);
  }
}

TEST_CASE("components, largest component and diagonal connectivity") {
  const auto diag = from_rows({"#..", ".#.", "..#"});
  CHECK(label_components(diag).count == 1);
  const auto pair = from_rows({"##..#", "##...", "....."});
  CHECK(keep_largest_component(pair) == from_rows({"##...", "##...", "....."}));
}

TEST_CASE("fingertip and bounding box conventions") {
  BinaryMask bar(64, 64);
  for (int y = 10; y <= 50; ++y) bar.set(y, 32);
  CHECK(locate_fingertip(bar) == Pixel{32, 10});
  BinaryMask one(12, 12);
  one.set(9, 7);
  CHECK(locate_fingertip(one) == Pixel{7, 9});
  BinaryMask tie(5, 12);
  tie.set(2, 9);
  tie.set(2, 5);
  CHECK(locate_fingertip(tie) == Pixel{5, 2});

  BinaryMask single(8, 8);
  single.set(4, 3);
  CHECK(bounding_box(single) == BoundingBox{3, 4, 3, 4});
  BinaryMask three(9, 9);
  three.set(1, 1);
  three.set(2, 5);
  three.set(7, 3);
  CHECK(bounding_box(three) == BoundingBox{1, 1, 5, 7});
  CHECK(bounding_box(BinaryMask(6, 9, true)) == BoundingBox{0, 0, 8, 5});
  CHECK_THROWS_AS(bounding_box(BinaryMask(3, 3)), Error);
  CHECK_THROWS_AS(locate_fingertip(BinaryMask(3, 3)), Error);
}

TEST_CASE("graph cut returns the exact minimizer found by enumeration") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> cost(0, 20), weight(0, 12);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 11;
    BinaryLabelingProblem p;
    for (int i = 0; i < n; ++i) {
      p.cost_fg.push_back(cost(rng));
      p.cost_bg.push_back(cost(rng));
    }
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (rng() % 3 == 0) p.pairs.push_back({a, b, weight(rng)});
      }
    }
    std::int64_t best = INT64_MAX;
    std::uint32_t meet = ~0u;  // intersection of every minimizer's foreground
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      std::int64_t e = 0;
      for (int i = 0; i < n; ++i) e += (bits >> i & 1) ? p.cost_fg[i] : p.cost_bg[i];
      for (const auto& pr : p.pairs) e += ((bits >> pr.a & 1) != (bits >> pr.b & 1)) ? pr.weight : 0;
      if (e < best) {
        best = e;
        meet = bits;
      } else if (e == best) {
        meet &= bits;
      }
    }
    const auto labels = solve_binary_labeling(p);
    CHECK(labeling_energy(p, labels) == best);
    std::uint32_t got = 0;
    for (int i = 0; i < n; ++i) got |= static_cast<std::uint32_t>(labels[i] != 0) << i;
    CHECK(got == meet);
  }
}

TEST_CASE("refine_foreground honours hard constraints and recovers a two-colour patch") {
  const int h = 40, w = 48;
  ImageFrame img(h, w);
  BinaryMask truth(h, w);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<float> n(-0.03f, 0.03f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool fg = (x - 24) * (x - 24) / 144.0 + (y - 20) * (y - 20) / 100.0 <= 1.0;
      truth.set(y, x, fg);
      const float base[3] = {fg ? 0.85f : 0.15f, fg ? 0.6f : 0.3f, fg ? 0.5f : 0.8f};
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(base[c] + n(rng), 0.0f, 1.0f);
    }
  }

  Trimap all_definite(h, w, TrimapLabel::DefiniteBackground);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (truth.at(y, x)) all_definite.set(y, x, TrimapLabel::DefiniteForeground);
    }
  }
  CHECK(refine_foreground(img, all_definite, {5, 1}) == truth);
  CHECK(refine_foreground(img, all_definite, {5, 4}) == truth);

  const auto inner = erode(truth, 3);
  const auto outer = dilate(truth, 3);
  Trimap tri(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (inner.at(y, x)) tri.set(y, x, TrimapLabel::DefiniteForeground);
      else if (!outer.at(y, x)) tri.set(y, x, TrimapLabel::DefiniteBackground);
      else tri.set(y, x, TrimapLabel::ProbableForeground);
    }
  }
  const auto out = refine_foreground(img, tri);
  CHECK(iou(out, truth) >= 0.95);
  CHECK(inner.subset_of(out));
  CHECK(out.subset_of(outer));
  CHECK(refine_foreground(img, tri) == out);

  CHECK_THROWS_AS(refine_foreground(img, Trimap(h, w, TrimapLabel::DefiniteBackground)), Error);
  CHECK_THROWS_AS(refine_foreground(img, tri, {5, 0}), Error);
}

TEST_CASE("spherical GMM falls back to one component on few samples") {
  const std::vector<std::array<double, 3>> few{{0.1, 0.2, 0.3}, {0.3, 0.2, 0.1}};
  const auto g = fit_spherical_gmm(few, 5);
  REQUIRE(g.components.size() == 1);
  CHECK(g.components[0].mean[0] == doctest::Approx(0.2));
  CHECK(g.components[0].weight == doctest::Approx(1.0));
}

TEST_CASE("extract_hand_mask on rendered silhouettes") {
  pipeline::HandShape shape;
  shape.palm_center = {128, 150};
  shape.palm_half_width = 50;
  shape.palm_half_height = 40;
  shape.finger_half_width = 10;
  shape.finger_length = 60;
  shape.finger_angle = 0.2;
  const auto scene = pipeline::render_hand_scene(256, 256, shape, 200.0, 7);
  const auto hand = extract_hand_mask(scene.image);
  CHECK(iou(hand.mask, scene.truth) >= 0.9);
  CHECK(hand.mask.at(hand.fingertip.y, hand.fingertip.x));
  CHECK(hand.bbox.contains(hand.fingertip));
  CHECK(label_components(hand.mask).count == 1);

  ImageFrame blue(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) blue.at(y, x, 2) = 0.8f;
  }
  try {
    extract_hand_mask(blue);
    FAIL("expected NoHandFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoHandFound);
  }
}
