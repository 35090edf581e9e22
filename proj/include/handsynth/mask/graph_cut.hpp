#pragma once

#include <cstdint>
#include <vector>

namespace handsynth::mask {

/// Binary labeling energy with integer costs:
///   E(L) = Σ_p (L_p ? cost_fg[p] : cost_bg[p]) + Σ_{(a,b)} weight·[L_a ≠ L_b]
/// Costs must be non-negative; pair weights must be non-negative.
struct BinaryLabelingProblem {
  struct Pair {
    int a = 0;
    int b = 0;
    std::int64_t weight = 0;
  };

  std::vector<std::int64_t> cost_fg;
  std::vector<std::int64_t> cost_bg;
  std::vector<Pair> pairs;

  int node_count() const { return static_cast<int>(cost_fg.size()); }
};

/// Exact minimizer via s-t max-flow (Dinic). Returns 1 for foreground.
/// Among minimizers, the one with the smallest foreground set is returned.
std::vector<std::uint8_t> solve_binary_labeling(const BinaryLabelingProblem& problem);

std::int64_t labeling_energy(const BinaryLabelingProblem& problem, const std::vector<std::uint8_t>& labels);

}  // namespace handsynth::mask
