#include "handsynth/mask/graph_cut.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "handsynth/core/error.hpp"

namespace handsynth::mask {

namespace {

class Dinic {
 public:
  explicit Dinic(int nodes) : head_(nodes, -1), level_(nodes), iter_(nodes) {}

  void add_arc_pair(int from, int to, std::int64_t cap, std::int64_t reverse_cap) {
    arcs_.push_back({to, head_[from], cap});
    head_[from] = static_cast<int>(arcs_.size()) - 1;
    arcs_.push_back({from, head_[to], reverse_cap});
    head_[to] = static_cast<int>(arcs_.size()) - 1;
  }

  void max_flow(int s, int t) {
    while (bfs(s, t)) {
      iter_ = head_;
      while (augment(s, t, std::numeric_limits<std::int64_t>::max()) > 0) {
      }
    }
  }

  /// Nodes reachable from s in the residual graph (valid after max_flow).
  std::vector<std::uint8_t> source_side(int s) {
    bfs(s, -1);
    std::vector<std::uint8_t> side(head_.size());
    for (std::size_t i = 0; i < head_.size(); ++i) side[i] = level_[i] >= 0 ? 1 : 0;
    return side;
  }

 private:
  struct Arc {
    int to;
    int next;
    std::int64_t cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int e = head_[u]; e != -1; e = arcs_[e].next) {
        if (arcs_[e].cap > 0 && level_[arcs_[e].to] < 0) {
          level_[arcs_[e].to] = level_[u] + 1;
          q.push(arcs_[e].to);
        }
      }
    }
    return t >= 0 && level_[t] >= 0;
  }

  // Iterative DFS along the level graph; returns pushed flow.
  std::int64_t augment(int s, int t, std::int64_t limit) {
    std::vector<int> path_arcs;
    int u = s;
    while (true) {
      if (u == t) {
        std::int64_t f = limit;
        for (int e : path_arcs) f = std::min(f, arcs_[e].cap);
        for (int e : path_arcs) {
          arcs_[e].cap -= f;
          arcs_[e ^ 1].cap += f;
        }
        return f;
      }
      int& e = iter_[u];
      while (e != -1 && !(arcs_[e].cap > 0 && level_[arcs_[e].to] == level_[u] + 1)) e = arcs_[e].next;
      if (e != -1) {
        path_arcs.push_back(e);
        u = arcs_[e].to;
        continue;
      }
      // dead end: retreat
      level_[u] = -1;
      if (path_arcs.empty()) return 0;
      const int back = path_arcs.back();
      path_arcs.pop_back();
      u = arcs_[back ^ 1].to;
      iter_[u] = arcs_[iter_[u]].next;
    }
  }

  std::vector<Arc> arcs_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace

std::vector<std::uint8_t> solve_binary_labeling(const BinaryLabelingProblem& problem) {
  const int n = problem.node_count();
  if (static_cast<int>(problem.cost_bg.size()) != n) {
    throw Error(ErrorCode::ShapeMismatch, "cost vectors differ in length");
  }
  const int source = n;
  const int sink = n + 1;
  Dinic graph(n + 2);
  for (int p = 0; p < n; ++p) {
    const std::int64_t fg = problem.cost_fg[p];
    const std::int64_t bg = problem.cost_bg[p];
    if (fg < 0 || bg < 0) throw Error(ErrorCode::ValueOutOfRange, "labeling costs must be non-negative");
    // Reparameterize so each node needs only one terminal arc.
    if (bg > fg) {
      graph.add_arc_pair(source, p, bg - fg, 0);
    } else if (fg > bg) {
      graph.add_arc_pair(p, sink, fg - bg, 0);
    }
  }
  for (const auto& pair : problem.pairs) {
    if (pair.weight < 0) throw Error(ErrorCode::ValueOutOfRange, "pair weights must be non-negative");
    if (pair.weight > 0) graph.add_arc_pair(pair.a, pair.b, pair.weight, pair.weight);
  }
  graph.max_flow(source, sink);
  auto side = graph.source_side(source);
  side.resize(n);
  return side;
}

std::int64_t labeling_energy(const BinaryLabelingProblem& problem, const std::vector<std::uint8_t>& labels) {
  std::int64_t e = 0;
  for (int p = 0; p < problem.node_count(); ++p) e += labels[p] ? problem.cost_fg[p] : problem.cost_bg[p];
  for (const auto& pair : problem.pairs) {
    if ((labels[pair.a] != 0) != (labels[pair.b] != 0)) e += pair.weight;
  }
  return e;
}

}  // namespace handsynth::mask
