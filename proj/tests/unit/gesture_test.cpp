#include <doctest.h>

#include <cmath>
#include <random>

#include "handsynth/core/error.hpp"
#include "handsynth/gesture/gesture.hpp"
#include "handsynth/mask/morphology.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace handsynth;
using namespace handsynth::gesture;

namespace {

HandMask blob(int h, int w, int cx, int cy, int rx, int ry) {
  BinaryMask m(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = double(x - cx) / rx, dy = double(y - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) m.set(y, x);
    }
  }
  return mask::make_hand_mask(m);
}

GestureSpec linear(GestureKind kind, int n, double step) {
  GestureSpec s;
  s.kind = kind;
  s.n_frames = n;
  s.step = step;
  return s;
}

}  // namespace

TEST_CASE("linear trajectories advance step pixels per frame") {
  const auto up = make_trajectory(linear(GestureKind::Up, 5, 4), {100, 100});
  REQUIRE(up.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(up[k].position.x == 100.0);
    CHECK(up[k].position.y == 100.0 - 4.0 * k);
    CHECK(up[k].orientation == 0.0);
  }
  const std::pair<GestureKind, Point2D> dirs[] = {
      {GestureKind::Down, {0, 1}}, {GestureKind::Left, {-1, 0}}, {GestureKind::Right, {1, 0}}};
  for (const auto& [kind, u] : dirs) {
    const auto t = make_trajectory(linear(kind, 6, 2.5), {10, 20});
    for (int k = 0; k < 6; ++k) {
      CHECK(t[k].position.x == 10 + 2.5 * k * u.x);
      CHECK(t[k].position.y == 20 + 2.5 * k * u.y);
    }
  }
  for (const auto kind : {GestureKind::Up, GestureKind::Circle}) {
    auto s = linear(kind, 1, 3);
    s.center = {50, 50};
    s.radius = 7;
    const auto one = make_trajectory(s, {50 + 7, 50});
    REQUIRE(one.size() == 1);
    CHECK(one[0].position == Point2D{57, 50});
  }
}

TEST_CASE("circle trajectory closed form and exact radius") {
  GestureSpec s;
  s.kind = GestureKind::Circle;
  s.n_frames = 4;
  s.center = {128, 128};
  s.radius = 40;
  const auto t = make_trajectory(s, {});
  const Point2D want[] = {{168, 128}, {128, 168}, {88, 128}, {128, 88}};
  for (int k = 0; k < 4; ++k) {
    CHECK(t[k].position.x == doctest::Approx(want[k].x).epsilon(1e-12));
    CHECK(t[k].position.y == doctest::Approx(want[k].y).epsilon(1e-12));
    CHECK(t[k].orientation == doctest::Approx(normalize_angle(M_PI / 2 * k + M_PI / 2)));
  }
  for (const int n : {4, 8, 16, 7}) {
    s.n_frames = n;
    s.start_angle = 0.3;
    for (const auto& p : make_trajectory(s, {})) {
      CHECK(std::hypot(p.position.x - 128, p.position.y - 128) == doctest::Approx(40.0).epsilon(1e-12));
      CHECK(p.orientation > -M_PI);
      CHECK(p.orientation <= M_PI);
    }
  }
}

TEST_CASE("pose_to_affine examples") {
  const Pose2D p{{3, 4}, 0.7};
  const auto id = pose_to_affine(p, p, true);
  CHECK(id.a == doctest::Approx(1.0));
  CHECK(id.b == doctest::Approx(0.0));
  CHECK(id.tx == doctest::Approx(0.0));
  CHECK(id.c == doctest::Approx(0.0));
  CHECK(id.d == doctest::Approx(1.0));
  CHECK(id.ty == doctest::Approx(0.0));

  const auto shift = pose_to_affine({{0, 0}, 0.0}, {{5, 0}, 1.0}, false);
  CHECK(shift == AffineTransform2D{1, 0, 5, 0, 1, 0});

  const auto rot = pose_to_affine({{0, 0}, 0.0}, {{0, 0}, M_PI / 2}, true);
  const auto q = transform_point({1, 0}, rot);
  CHECK(q.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.y == doctest::Approx(1.0));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 50; ++i) {
    const Pose2D a{{u(rng), u(rng)}, u(rng) / 10}, b{{u(rng), u(rng)}, u(rng) / 10};
    const auto m = transform_point(a.position, pose_to_affine(a, b, i % 2 == 0));
    CHECK(m.x == doctest::Approx(b.position.x).epsilon(1e-12));
    CHECK(m.y == doctest::Approx(b.position.y).epsilon(1e-12));
  }
}

TEST_CASE("transform_point against manual arithmetic") {
  CHECK(transform_point({10, 10}, AffineTransform2D::translation(5, 0)) == Point2D{15, 10});
  const auto r = AffineTransform2D::rotation(M_PI / 2, {0, 0});
  const auto t = AffineTransform2D::translation(3, -1).compose(r);
  // rotate (1,2) by 90° in y-down coordinates → (−2,1), then translate → (1,0)
  const auto p = transform_point({1, 2}, t);
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(AffineTransform2D({0, 0, 0, 0, 0, 0}).inverse(), Error);
}

TEST_CASE("warp_mask examples and oracle agreement") {
  const auto ref = blob(20, 24, 10, 10, 4, 3).mask;
  CHECK(warp_mask(ref, AffineTransform2D::identity()) == ref);
  const auto shifted = warp_mask(ref, AffineTransform2D::translation(1, 0));
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 24; ++x) CHECK(shifted.at(y, x) == (x >= 1 && ref.at(y, x - 1)));
  }
  CHECK_FALSE(warp_mask(ref, AffineTransform2D::translation(100, 0)).any());
  CHECK_THROWS_AS(warp_mask(ref, {1, 2, 0, 2, 4, 0}), Error);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = oracle::random_shape_mask(rng, 48);
    const auto t = AffineTransform2D::translation(10 * u(rng), 10 * u(rng))
                       .compose(AffineTransform2D::rotation(M_PI * u(rng), {m.width() / 2.0, m.height() / 2.0}));
    CHECK(warp_mask(m, t) == oracle::warp_mask(m, t));
  }
}

TEST_CASE("rigid warps roughly preserve area away from borders") {
  const auto ref = blob(96, 96, 48, 48, 16, 13);
  REQUIRE(ref.mask.area() >= 500);
  for (const double angle : {0.1, 0.7, 1.3, 2.9}) {
    const auto t = AffineTransform2D::rotation(angle, {48, 48});
    const double a = static_cast<double>(warp_mask(ref.mask, t).area());
    CHECK(std::abs(a - ref.mask.area()) / ref.mask.area() <= 0.02);
  }
}

TEST_CASE("synthesized sequences keep labels consistent") {
  const auto ref = blob(64, 64, 30, 36, 8, 6);

  const auto still = synthesize_mask_sequence(ref, linear(GestureKind::Up, 3, 0));
  for (const auto& f : still.frames) CHECK(f.mask == ref.mask);

  const auto right = synthesize_mask_sequence(ref, linear(GestureKind::Right, 4, 2));
  for (int k = 1; k < 4; ++k) CHECK(right.frames[k].fingertip.x - right.frames[k - 1].fingertip.x == 2);

  for (const int n : {4, 8, 16}) {
    GestureSpec s;
    s.kind = GestureKind::Circle;
    s.n_frames = n;
    s.center = {32, 32};
    s.radius = 10;
    const auto seq = synthesize_mask_sequence(ref, s);
    REQUIRE(seq.frames.size() == static_cast<std::size_t>(n));
    for (const auto& f : seq.frames) {
      CHECK(std::abs(std::hypot(f.fingertip.x - 32.0, f.fingertip.y - 32.0) - 10.0) <= 1.0);
      CHECK(f.consistent());
      CHECK(f.bbox == oracle::bounding_box(f.mask));
    }
  }
}

TEST_CASE("clipping warns and a vanished frame is an error") {
  const auto ref = blob(40, 40, 20, 20, 5, 5);
  const auto seq = synthesize_mask_sequence(ref, linear(GestureKind::Right, 3, 12));
  CHECK_FALSE(seq.warnings.empty());
  try {
    synthesize_mask_sequence(ref, linear(GestureKind::Right, 3, 30));
    FAIL("expected EmptyFrame");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyFrame);
  }
}

TEST_CASE("gesture config keys") {
  const auto cfg = KeyValueConfig::parse("gesture.kind = left\ngesture.n_frames = 12\ngesture.step = 1.5\n");
  const auto s = GestureSpec::from_config(cfg);
  CHECK(s.kind == GestureKind::Left);
  CHECK(s.n_frames == 12);
  CHECK(s.step == 1.5);
  CHECK_THROWS_AS(GestureSpec::from_config(KeyValueConfig::parse("gesture.kind = sideways")), Error);
  CHECK_THROWS_AS(GestureSpec::from_config(KeyValueConfig::parse("gesture.n_frames = 0")), Error);
}
