#include "handsynth/pipeline/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"
#include "handsynth/ingest/dataset.hpp"
#include "handsynth/mask/color.hpp"
#include "handsynth/mask/morphology.hpp"

namespace handsynth::pipeline {

namespace {

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - ax - t * dx, py - ay - t * dy);
}

BinaryMask rasterize(int height, int width, const HandShape& s) {
  BinaryMask mask(height, width);
  const double dx = std::sin(s.finger_angle);
  const double dy = -std::cos(s.finger_angle);
  const double reach = s.palm_half_height + s.finger_length - s.finger_half_width;
  const double tip_x = s.palm_center.x + dx * reach;
  const double tip_y = s.palm_center.y + dy * reach;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double ex = (x - s.palm_center.x) / s.palm_half_width;
      const double ey = (y - s.palm_center.y) / s.palm_half_height;
      const bool palm = ex * ex + ey * ey <= 1.0;
      const bool finger = segment_distance(x, y, s.palm_center.x, s.palm_center.y, tip_x, tip_y) <= s.finger_half_width;
      if (palm || finger) mask.set(y, x);
    }
  }
  return mask;
}

}  // namespace

RenderedScene render_hand_scene(int height, int width, const HandShape& shape, double background_hue,
                                std::uint64_t seed, double noise) {
  if (height <= 0 || width <= 0) throw Error(ErrorCode::ValueOutOfRange, "scene size must be positive");
  RenderedScene scene;
  scene.truth = rasterize(height, width, shape);
  if (!scene.truth.any()) throw Error(ErrorCode::EmptyMask, "hand shape lies outside the frame");
  scene.fingertip = mask::locate_fingertip(scene.truth);
  scene.bbox = mask::bounding_box(scene.truth);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-noise, noise);
  ImageFrame hsv(height, width, ColorSpace::HSV);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double h, s, v;
      if (scene.truth.at(y, x)) {
        h = 20.0 + 100.0 * jitter(rng);
        s = 0.42 + jitter(rng);
        v = 0.80 + jitter(rng);
      } else {
        // A gentle vertical shading keeps backgrounds from being flat.
        h = background_hue + 100.0 * jitter(rng);
        s = 0.50 + jitter(rng);
        v = 0.45 + 0.25 * y / std::max(1, height - 1) + jitter(rng);
      }
      h = std::fmod(h + 360.0, 360.0);
      hsv.at(y, x, 0) = static_cast<float>(h);
      hsv.at(y, x, 1) = static_cast<float>(std::clamp(s, 0.0, 1.0));
      hsv.at(y, x, 2) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  scene.image = mask::hsv_to_rgb(hsv);
  return scene;
}

void write_toy_dataset(const std::filesystem::path& root, const ToyDatasetOptions& options) {
  if (options.environments.size() != options.background_hues.size()) {
    throw Error(ErrorCode::ConfigInvalid, "one background hue per environment is required");
  }
  const int n = options.size;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t e = 0; e < options.environments.size(); ++e) {
    const auto& env = options.environments[e];
    const auto dir = root / env;
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / ingest::kAnnotationFile);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write " + (dir / ingest::kAnnotationFile).string());
    csv << ingest::kAnnotationHeader << '\n';
    for (int k = 0; k < options.frames_per_environment; ++k) {
      HandShape shape;
      shape.palm_center = {n * (0.5 + 0.12 * u(rng)), n * (0.62 + 0.08 * u(rng))};
      shape.palm_half_width = n * (0.16 + 0.02 * u(rng));
      shape.palm_half_height = n * (0.13 + 0.02 * u(rng));
      shape.finger_half_width = n * (0.045 + 0.005 * u(rng));
      shape.finger_length = n * (0.2 + 0.04 * u(rng));
      shape.finger_angle = 0.35 * u(rng);
      const auto scene = render_hand_scene(n, n, shape, options.background_hues[e], rng());

      char id[64];
      std::snprintf(id, sizeof id, "%s_%03d", env.c_str(), k);
      const std::string file = std::string(id) + ".png";
      write_image(dir / file, scene.image);
      const auto& b = scene.bbox;
      csv << id << ',' << file << ',' << b.x_min << ',' << b.y_min << ',' << b.x_max << ',' << b.y_max << ','
          << scene.fingertip.x << ',' << scene.fingertip.y << '\n';
    }
  }
}

}  // namespace handsynth::pipeline
