#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "spindecay/errors.hpp"
#include "spindecay/graph.hpp"
#include "spindecay/instance.hpp"
#include "spindecay/rng.hpp"
#include "spindecay/tree.hpp"

namespace support {

using namespace spindecay;

// AHU encoding of the tree rooted at v
inline std::string rooted_code(const Graph& g, int v, int parent) {
  std::vector<std::string> kids;
  for (int x : g.neighbors(v))
    if (x != parent) kids.push_back(rooted_code(g, x, v));
  std::sort(kids.begin(), kids.end());
  std::string s = "(";
  for (auto& k : kids) s += k;
  return s + ")";
}

inline std::string tree_code(const Graph& g) {
  std::string best;
  for (int v = 0; v < g.vertex_count(); ++v) {
    auto c = rooted_code(g, v, -1);
    if (best.empty() || c < best) best = c;
  }
  return best;
}

// One representative of each unlabeled tree on n vertices.
inline std::vector<Graph> all_trees(int n) {
  std::vector<Graph> layer{Graph(1)};
  for (int m = 2; m <= n; ++m) {
    std::vector<Graph> next;
    std::set<std::string> seen;
    for (const Graph& t : layer)
      for (int v = 0; v < t.vertex_count(); ++v) {
        Graph g(m);
        for (auto [a, b] : t.edges()) g.add_edge(a, b);
        g.add_edge(v, m - 1);
        if (seen.insert(tree_code(g)).second) next.push_back(g);
      }
    layer = std::move(next);
  }
  return layer;
}

inline Pinning random_pinning(const SpinSystem& sys, Rng& rng, double density) {
  Pinning pin(sys.n());
  for (int v = 0; v < sys.n(); ++v)
    if (rng.uniform() < density) {
      const auto& lst = sys.list(v);
      pin.set(v, lst[rng.below(lst.size())]);
    }
  return pin;
}

// Retries until the pinning has a feasible extension; falls back to no pins.
inline Pinning random_feasible_pinning(const SpinSystem& sys, Rng& rng, double density,
                                       int attempts = 200) {
  for (int i = 0; i < attempts; ++i) {
    Pinning pin = random_pinning(sys, rng, density);
    if (check_pinning_feasible(sys, pin)) return pin;
  }
  return Pinning(sys.n());
}

inline std::vector<std::vector<int>> random_lists(int n, int q, int min_size, Rng& rng) {
  std::vector<std::vector<int>> lists(n);
  for (auto& l : lists) {
    while (static_cast<int>(l.size()) < min_size || l.empty()) {
      l.clear();
      for (int c = 0; c < q; ++c)
        if (rng.uniform() < 0.7) l.push_back(c);
    }
  }
  return lists;
}

// Subdistribution with entries at most cap and total at most 1.
inline Dist random_subdistribution(int q, double cap, Rng& rng, bool interior = true) {
  Dist p(q);
  double total = 0;
  for (int c = 0; c < q; ++c) {
    p[c] = rng.exponential();
    total += p[c];
  }
  const double mass = interior ? 0.05 + 0.9 * rng.uniform() : rng.uniform();
  for (double& x : p) x = std::min(cap, x / total * mass);
  if (interior)
    for (double& x : p) x = std::max(x, 1e-3 * cap);
  return p;
}

inline double max_abs_diff(const Dist& a, const Dist& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace support
