#include "handsynth/mask/grabcut.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "handsynth/core/error.hpp"
#include "handsynth/mask/graph_cut.hpp"

namespace handsynth::mask {

namespace {

using Color = std::array<double, 3>;

constexpr int kLloydIterations = 10;
constexpr double kVarianceFloor = 1e-4;
// Energies are quantized to integers before the cut.
constexpr double kCostScale = 1000.0;
constexpr std::int64_t kHardCost = std::int64_t{1} << 50;

double sq_dist(const Color& a, const Color& b) {
  const double d0 = a[0] - b[0];
  const double d1 = a[1] - b[1];
  const double d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

Color color_at(const ImageFrame& f, int y, int x) { return {f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2)}; }

bool foreground_side(TrimapLabel l) {
  return l == TrimapLabel::ProbableForeground || l == TrimapLabel::DefiniteForeground;
}

}  // namespace

BinaryMask Trimap::select(TrimapLabel label) const {
  BinaryMask out(height_, width_);
  for (std::size_t i = 0; i < labels_.size(); ++i) out.bits()[i] = labels_[i] == label ? 1 : 0;
  return out;
}

double SphericalGmm::neg_log_likelihood(const Color& color) const {
  // log-sum-exp over components
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(components.size());
  for (const auto& c : components) {
    if (c.weight <= 0.0) continue;
    const double log_term = std::log(c.weight) - 1.5 * std::log(2.0 * std::numbers::pi * c.variance) -
                            sq_dist(color, c.mean) / (2.0 * c.variance);
    terms.push_back(log_term);
    best = std::max(best, log_term);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return -(best + std::log(sum));
}

SphericalGmm fit_spherical_gmm(const std::vector<Color>& samples, int k) {
  if (samples.empty()) throw Error(ErrorCode::ValueOutOfRange, "cannot fit a colour model to zero samples");
  if (k < 1) throw Error(ErrorCode::ConfigInvalid, "component count must be positive");
  if (static_cast<int>(samples.size()) < k) k = 1;

  // Farthest-point seeding from the sample nearest the overall mean.
  Color mean{0, 0, 0};
  for (const auto& s : samples) {
    for (int c = 0; c < 3; ++c) mean[c] += s[c];
  }
  for (int c = 0; c < 3; ++c) mean[c] /= static_cast<double>(samples.size());

  std::vector<Color> centers;
  std::size_t first = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (sq_dist(samples[i], mean) < sq_dist(samples[first], mean)) first = i;
  }
  centers.push_back(samples[first]);
  std::vector<double> nearest(samples.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(samples[i], centers.back()));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    if (far_d <= 0.0) break;  // fewer distinct colours than k
    centers.push_back(samples[far]);
  }
  k = static_cast<int>(centers.size());

  std::vector<int> assign(samples.size(), 0);
  for (int iter = 0; iter < kLloydIterations; ++iter) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      int best = 0;
      double best_d = sq_dist(samples[i], centers[0]);
      for (int j = 1; j < k; ++j) {
        const double d = sq_dist(samples[i], centers[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      assign[i] = best;
    }
    std::vector<Color> sums(k, Color{0, 0, 0});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (int c = 0; c < 3; ++c) sums[assign[i]][c] += samples[i][c];
      ++counts[assign[i]];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      for (int c = 0; c < 3; ++c) centers[j][c] = sums[j][c] / static_cast<double>(counts[j]);
    }
  }

  SphericalGmm gmm;
  std::vector<double> sq_sums(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sq_sums[assign[i]] += sq_dist(samples[i], centers[assign[i]]);
    ++counts[assign[i]];
  }
  for (int j = 0; j < k; ++j) {
    if (counts[j] == 0) continue;
    SphericalGmm::Component comp;
    comp.weight = static_cast<double>(counts[j]) / static_cast<double>(samples.size());
    comp.mean = centers[j];
    comp.variance = std::max(kVarianceFloor, sq_sums[j] / (3.0 * static_cast<double>(counts[j])));
    gmm.components.push_back(comp);
  }
  return gmm;
}

BinaryMask refine_foreground(const ImageFrame& rgb, const Trimap& trimap, const GrabCutParams& params) {
  if (params.iterations < 1) throw Error(ErrorCode::ConfigInvalid, "grabcut iterations must be >= 1");
  if (params.components < 1) throw Error(ErrorCode::ConfigInvalid, "grabcut components must be >= 1");
  if (rgb.height() != trimap.height() || rgb.width() != trimap.width()) {
    throw Error(ErrorCode::ShapeMismatch, "trimap and frame dimensions differ");
  }
  const int h = rgb.height();
  const int w = rgb.width();
  const int n = h * w;

  std::vector<std::uint8_t> fg(n);
  bool any_fg = false;
  bool any_bg = false;
  for (int i = 0; i < n; ++i) {
    fg[i] = foreground_side(trimap.labels()[i]) ? 1 : 0;
    any_fg |= fg[i] != 0;
    any_bg |= fg[i] == 0;
  }
  if (!any_fg || !any_bg) throw Error(ErrorCode::InvalidTrimap, "trimap needs both foreground and background seeds");

  // Pairwise terms are fixed across iterations.
  struct Neighbor {
    int dy, dx;
    double inv_dist;
  };
  const Neighbor neighbors[] = {{0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0 / std::sqrt(2.0)}, {1, -1, 1.0 / std::sqrt(2.0)}};
  double diff_sum = 0.0;
  std::size_t diff_count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& nb : neighbors) {
        const int ny = y + nb.dy;
        const int nx = x + nb.dx;
        if (ny >= h || nx < 0 || nx >= w) continue;
        diff_sum += sq_dist(color_at(rgb, y, x), color_at(rgb, ny, nx));
        ++diff_count;
      }
    }
  }
  const double mean_diff = diff_count ? diff_sum / static_cast<double>(diff_count) : 0.0;
  const double beta = mean_diff > 0.0 ? 1.0 / (2.0 * mean_diff) : 0.0;

  BinaryLabelingProblem problem;
  problem.cost_fg.resize(n);
  problem.cost_bg.resize(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& nb : neighbors) {
        const int ny = y + nb.dy;
        const int nx = x + nb.dx;
        if (ny >= h || nx < 0 || nx >= w) continue;
        const double weight = params.smoothness * nb.inv_dist *
                              std::exp(-beta * sq_dist(color_at(rgb, y, x), color_at(rgb, ny, nx)));
        problem.pairs.push_back({y * w + x, ny * w + nx, std::llround(weight * kCostScale)});
      }
    }
  }

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::vector<Color> fg_samples;
    std::vector<Color> bg_samples;
    for (int i = 0; i < n; ++i) (fg[i] ? fg_samples : bg_samples).push_back(color_at(rgb, i / w, i % w));
    if (fg_samples.empty() || bg_samples.empty()) break;
    const SphericalGmm fg_model = fit_spherical_gmm(fg_samples, params.components);
    const SphericalGmm bg_model = fit_spherical_gmm(bg_samples, params.components);

    for (int i = 0; i < n; ++i) {
      const TrimapLabel label = trimap.labels()[i];
      if (label == TrimapLabel::DefiniteForeground) {
        problem.cost_fg[i] = 0;
        problem.cost_bg[i] = kHardCost;
        continue;
      }
      if (label == TrimapLabel::DefiniteBackground) {
        problem.cost_fg[i] = kHardCost;
        problem.cost_bg[i] = 0;
        continue;
      }
      const Color c = color_at(rgb, i / w, i % w);
      const double dfg = fg_model.neg_log_likelihood(c);
      const double dbg = bg_model.neg_log_likelihood(c);
      const double base = std::min(dfg, dbg);
      problem.cost_fg[i] = std::llround(std::min((dfg - base) * kCostScale, 1e15));
      problem.cost_bg[i] = std::llround(std::min((dbg - base) * kCostScale, 1e15));
    }
    const auto labels = solve_binary_labeling(problem);
    if (labels == fg) break;
    fg = labels;
  }

  BinaryMask out(h, w);
  out.bits() = fg;
  return out;
}

}  // namespace handsynth::mask
