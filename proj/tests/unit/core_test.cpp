#include <doctest.h>

#include <random>

#include "handsynth/core/checkpoint.hpp"
#include "handsynth/core/config.hpp"
#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"
#include "test_support.hpp"

using namespace handsynth;

TEST_CASE("config parses dotted keys, comments and typed values") {
  const auto cfg = KeyValueConfig::parse(
      "# header\n"
      "skin.h_low = 5   # trailing comment\n"
      "gesture.kind=circle\n"
      "\n"
      "train.lr0 = 2e-4\n"
      "metrics.compare_modes = yes\n"
      "pipeline.stages = ingest, extract ,export\n");
  CHECK(cfg.get_int("skin.h_low", 0) == 5);
  CHECK(cfg.get_string("gesture.kind", "") == "circle");
  CHECK(cfg.get_double("train.lr0", 0.0) == doctest::Approx(2e-4));
  CHECK(cfg.get_bool("metrics.compare_modes", false));
  CHECK(cfg.get_list("pipeline.stages", {}) == std::vector<std::string>{"ingest", "extract", "export"});
  CHECK(cfg.get_int("missing.key", 42) == 42);
}

TEST_CASE("config errors name the offending key") {
  const auto cfg = KeyValueConfig::parse("train.batch_size = four\nbogus.key = 1\n");
  try {
    cfg.get_int("train.batch_size", 1);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("train.batch_size") != std::string::npos);
  }
  try {
    cfg.require_known({"train.batch_size"});
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("bogus.key") != std::string::npos);
  }
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign here"), Error);
}

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  CHECK(sha256_hex({abc.begin(), abc.end()}) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("checkpoint container round-trips every section kind") {
  CheckpointFile f;
  f.put_text("meta", "{\"k\": 1}");
  f.put_tensors("weights", {{"0.weight", {1.5f, -2.0f, 3.25f}}, {"0.bias", {}}});
  f.put_doubles("history", {0.1, 1e-300, -7.0});
  const auto back = CheckpointFile::deserialize(f.serialize());
  CHECK(back.text("meta") == "{\"k\": 1}");
  CHECK(back.tensors("weights") == f.tensors("weights"));
  CHECK(back.doubles("history") == std::vector<double>{0.1, 1e-300, -7.0});
  CHECK(back.serialize() == f.serialize());

  auto blob = f.serialize();
  blob[0] = 'X';
  CHECK_THROWS_AS(CheckpointFile::deserialize(blob), Error);
  blob = f.serialize();
  blob.resize(blob.size() - 3);
  CHECK_THROWS_AS(CheckpointFile::deserialize(blob), Error);
}

TEST_CASE("PNG round trip is exact after 8-bit quantization") {
  const auto dir = testing::scratch_dir("core_png");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageFrame img(7, 9);
  for (float& v : img.data()) v = u(rng);
  write_image(dir / "a.png", img);
  CHECK(read_image(dir / "a.png") == quantize_8bit(img));

  const auto mask = testing::random_mask(11, 5, 0.4, rng);
  write_mask(dir / "m.png", mask);
  CHECK(read_mask(dir / "m.png") == mask);

  try {
    read_image(dir / "absent.png");
    FAIL("expected ImageNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ImageNotFound);
  }
}

TEST_CASE("mask resize is nearest neighbour") {
  BinaryMask m(2, 2);
  m.set(0, 1);
  const auto big = resize_mask(m, 4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) CHECK(big.at(y, x) == (y < 2 && x >= 2));
  }
}
