#include <doctest.h>

#include <cmath>
#include <random>

#include "handsynth/core/error.hpp"
#include "handsynth/translate/cycle_trainer.hpp"
#include "handsynth/translate/losses.hpp"
#include "handsynth/translate/networks.hpp"
#include "handsynth/translate/schedule.hpp"
#include "handsynth/translate/toy_domains.hpp"
#include "test_support.hpp"

using namespace handsynth;
using namespace handsynth::translate;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

// Central differences of f at every coordinate of x.
template <typename F>
std::vector<double> numeric_grad(std::vector<double> x, F f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

GeneratorConfig small_generator() {
  GeneratorConfig g;
  g.input_size = 16;
  g.base_channels = 4;
  g.n_res_blocks = 1;
  g.n_downsamples = 1;
  return g;
}

DiscriminatorConfig small_discriminator() {
  DiscriminatorConfig d;
  d.n_layers = 1;
  d.patch_receptive_field = patch_receptive_field(1);
  d.base_channels = 4;
  return d;
}

}  // namespace

TEST_CASE("least-squares adversarial loss matches finite differences") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto real = random_values(64, rng), fake = random_values(64, rng);
    AdversarialGrad<double> grad;
    const auto loss = adversarial_loss<double>(real, fake, &grad);
    CHECK(loss.d_loss >= 0.0);
    CHECK(loss.g_loss >= 0.0);

    const auto nd_real = numeric_grad(real, [&](const std::vector<double>& r) {
      return adversarial_loss<double>(r, fake).d_loss;
    });
    const auto nd_fake = numeric_grad(fake, [&](const std::vector<double>& f) {
      return adversarial_loss<double>(real, f).d_loss;
    });
    const auto ng_fake = numeric_grad(fake, [&](const std::vector<double>& f) {
      return adversarial_loss<double>(real, f).g_loss;
    });
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(rel(grad.d_real[i], nd_real[i]) < 1e-4);
      CHECK(rel(grad.d_fake[i], nd_fake[i]) < 1e-4);
      CHECK(rel(grad.g_fake[i], ng_fake[i]) < 1e-4);
    }
  }
  const std::vector<double> ones(10, 1.0), zeros(10, 0.0);
  CHECK(adversarial_loss<double>(ones, zeros).d_loss == 0.0);
  CHECK(adversarial_loss<double>(ones, ones).g_loss == 0.0);
}

TEST_CASE("cycle loss matches finite differences") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_values(64, rng), rec = random_values(64, rng);
    std::vector<double> grad;
    const double l = cycle_loss<double>(x, rec, 10.0, &grad);
    CHECK(l > 0.0);
    const auto num = numeric_grad(rec, [&](const std::vector<double>& r) { return cycle_loss<double>(x, r, 10.0); });
    for (std::size_t i = 0; i < 64; ++i) CHECK(rel(grad[i], num[i]) < 1e-4);
  }
  const std::vector<double> a{0.5, 0.25};
  CHECK(cycle_loss<double>(a, a, 10.0) == 0.0);
}

TEST_CASE("loss input validation") {
  const std::vector<double> ok{0.0, 1.0}, bad{0.0, std::nan("")};
  try {
    adversarial_loss<double>(ok, bad);
    FAIL("expected NonFiniteScores");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteScores);
  }
  try {
    cycle_loss<double>(ok, std::vector<double>{1.0}, 1.0);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("learning-rate schedule: constant then linear decay") {
  TrainSchedule s;
  s.lr0 = 2e-4;
  s.const_epochs = 400;
  s.decay_epochs = 100;
  CHECK(s.lr(0) == 2e-4);
  CHECK(s.lr(399) == 2e-4);
  CHECK(s.lr(450) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.lr(500) == 0.0);
  double prev = s.lr(0);
  for (int e = 1; e <= 500; ++e) {
    CHECK(s.lr(e) <= prev);
    prev = s.lr(e);
  }
  s.batch_size = 0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("generator preserves shape; discriminator score map and receptive field") {
  const Generator g(GeneratorConfig{});
  CHECK(g.residual_block_count() == 9);
  CHECK(g.output_shape({1, 3, 256, 256}) == nn::Shape{1, 3, 256, 256});
  CHECK(g.bottleneck_shape({1, 3, 256, 256}) == nn::Shape{1, 256, 64, 64});

  const Discriminator d(DiscriminatorConfig{});
  CHECK(patch_receptive_field(3) == 70);
  CHECK(d.receptive_field() == 70);
  CHECK(d.score_shape({1, 3, 256, 256}) == nn::Shape{1, 1, 30, 30});

  DiscriminatorConfig mismatched;
  mismatched.patch_receptive_field = 64;
  CHECK_THROWS_AS(mismatched.validate(), Error);
}

TEST_CASE("patch discriminator rejects inputs below its receptive field") {
  auto d = build_patch_discriminator(small_discriminator(), 3);
  std::mt19937_64 rng(3);
  CHECK_NOTHROW(d.forward(testing::random_tensor({1, 3, 16, 16}, rng)));
  try {
    d.forward(testing::random_tensor({1, 3, 15, 15}, rng));
    FAIL("expected InputTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InputTooSmall);
  }
}

TEST_CASE("patch discriminator has fewer parameters than a dense head") {
  auto d = build_patch_discriminator(DiscriminatorConfig{}, 0);
  CHECK(d.parameter_count() < d.dense_head_parameter_count(256));
}

TEST_CASE("passthrough generator returns tanh of its input") {
  GeneratorConfig cfg = small_generator();
  cfg.norm = Normalization::None;
  cfg.base_channels = 12;
  const auto g = make_passthrough_generator(cfg);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageFrame img(16, 24);
  for (float& v : img.data()) v = u(rng);
  const auto out = translate::translate(img, g);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    const double want = (std::tanh(2.0 * img.data()[i] - 1.0) + 1.0) / 2.0;
    CHECK(out.data()[i] == doctest::Approx(want).epsilon(1e-4));
  }
  CHECK_THROWS_AS(translate::translate(ImageFrame(15, 16), g), Error);
  cfg.base_channels = 8;
  CHECK_THROWS_AS(make_passthrough_generator(cfg), Error);
}

TEST_CASE("zeroed residual blocks are identities") {
  auto g = build_generator(small_generator(), 7);
  g.zero_residual_path();
  std::mt19937_64 rng(6);
  const auto x = testing::random_tensor({1, 8, 8, 8}, rng);
  const auto y = g.residual_blocks().front()->infer(x);
  CHECK(y.data() == x.data());
}

TEST_CASE("tiny cycle training is deterministic and checkpoints round-trip") {
  const auto a = make_toy_domain(ToyShape::Square, 6, 16, 1);
  const auto b = make_toy_domain(ToyShape::Disk, 6, 16, 2);
  CycleTrainOptions opts;
  opts.generator = small_generator();
  opts.discriminator = small_discriminator();
  opts.schedule.const_epochs = 1;
  opts.schedule.decay_epochs = 1;
  opts.schedule.batch_size = 2;
  opts.schedule.pool_size = 4;
  opts.schedule.seed = 9;
  int calls = 0;
  opts.on_epoch = [&](int, CycleModels&, const LossRecord& r) {
    ++calls;
    CHECK(r.finite());
  };
  const auto dir1 = testing::scratch_dir("cycle_1"), dir2 = testing::scratch_dir("cycle_2");
  const auto first = train_cyclegan(a, b, opts, dir1);
  const auto second = train_cyclegan(a, b, opts, dir2);
  CHECK(calls == 4);
  CHECK(first.history == second.history);
  CHECK(first == second);
  CHECK(first.history.size() == 2);
  CHECK(std::filesystem::exists(dir1 / kLossesCsv));

  const auto loaded = CycleCheckpoint::load(dir1 / kFinalCheckpoint);
  CHECK(loaded == first);
  const auto g = loaded.generator_ab();
  CHECK(translate::translate(a[0], g) == translate::translate(a[0], first.generator_ab()));
  CHECK(std::isfinite(reconstruction_l1(g, loaded.generator_ba(), a)));

  try {
    train_cyclegan({}, b, opts, dir1);
    FAIL("expected EmptyDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDomain);
  }
}
