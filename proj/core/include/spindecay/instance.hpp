#pragma once

#include <map>
#include <string>
#include <vector>

#include "spindecay/graph.hpp"

namespace spindecay {

struct ColoringInstance {
  Graph graph;
  int q = 0;
  std::vector<std::vector<int>> lists;

  static ColoringInstance full(const Graph& g, int q);
};

struct PottsInstance {
  Graph graph;
  int q = 2;
  double beta = 0.0;
};

// Common view of both models: per-vertex allowed colors plus a pair weight
// that is `same` on monochromatic edges and 1 otherwise.
class SpinSystem {
 public:
  SpinSystem(const ColoringInstance& inst);  // NOLINT
  SpinSystem(const PottsInstance& inst);     // NOLINT

  const Graph& graph() const { return graph_; }
  int n() const { return graph_.vertex_count(); }
  int q() const { return q_; }
  bool is_potts() const { return potts_; }
  double beta() const { return same_; }
  double theta() const { return 1.0 - same_; }
  const std::vector<int>& list(int v) const { return lists_[v]; }
  bool allowed(int v, int c) const { return allowed_[v * q_ + c] != 0; }
  double pair_weight(int a, int b) const { return a == b ? same_ : 1.0; }

 private:
  Graph graph_;
  int q_;
  bool potts_;
  double same_;
  std::vector<std::vector<int>> lists_;
  std::vector<char> allowed_;
};

// Dense pinning: color per vertex, -1 when free.
class Pinning {
 public:
  Pinning() = default;
  explicit Pinning(int n) : colors_(n, -1) {}
  static Pinning from_map(int n, const std::map<int, int>& m);

  int size() const { return static_cast<int>(colors_.size()); }
  bool pinned(int v) const { return colors_[v] >= 0; }
  int color(int v) const { return colors_[v]; }
  void set(int v, int c) { colors_[v] = c; }
  void clear(int v) { colors_[v] = -1; }
  int count() const;
  std::map<int, int> assignments() const;
  const std::vector<int>& dense() const { return colors_; }

 private:
  std::vector<int> colors_;
};

// Throws DomainError if a pinned color is outside its list.
void validate_pinning(const SpinSystem& sys, const Pinning& pin);

// Exact on trees (tree recursion) and by brute force elsewhere.
bool check_pinning_feasible(const SpinSystem& sys, const Pinning& pin,
                            long long state_cap = 1000000);

// {"q": int, "lists": [[...]], "beta": optional}; a beta field selects Potts
SpinSystem read_instance(const Graph& g, const std::string& json_path);
Pinning read_pinning(int n, const std::string& json_path);

}  // namespace spindecay
