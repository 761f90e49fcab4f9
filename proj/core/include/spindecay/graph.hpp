#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spindecay/rng.hpp"

namespace spindecay {

using Edge = std::pair<int, int>;

class Graph {
 public:
  Graph() = default;
  explicit Graph(int n);
  Graph(int n, const std::vector<Edge>& edges);

  int vertex_count() const { return static_cast<int>(adj_.size()); }
  int edge_count() const { return edge_count_; }
  const std::vector<int>& neighbors(int v) const { return adj_[v]; }
  int degree(int v) const { return static_cast<int>(adj_[v].size()); }
  int max_degree() const;
  bool has_edge(int u, int v) const;
  // sorted (u < v) edge list
  std::vector<Edge> edges() const;

  void add_edge(int u, int v);

 private:
  std::vector<std::vector<int>> adj_;
  int edge_count_ = 0;
};

// BFS distances from u; -1 for unreachable vertices
std::vector<int> distances(const Graph& g, int u);
std::vector<int> sphere(const Graph& g, int u, int r);
std::vector<int> ball(const Graph& g, int u, int r);
// nullopt means infinite (forest)
std::optional<int> girth(const Graph& g);
bool is_tree(const Graph& g);
bool is_connected(const Graph& g);

struct RootedTree {
  Graph graph;
  int root = 0;
  std::vector<int> parent;  // -1 at the root
  std::vector<std::vector<int>> children;
  std::vector<int> depth;
  std::vector<int> order;  // BFS order from the root

  static RootedTree from_graph(const Graph& g, int root);
  int height() const;
  int size() const { return graph.vertex_count(); }
};

// Builders. The complete d-ary tree of height h has a root with d children and
// every internal vertex has d children.
Graph make_dary_tree(int d, int h);
Graph make_path(int n);
Graph make_cycle(int n);
// "bintree:h", "dary:d:h", "path:n", "cycle:n"
Graph parse_graph_spec(const std::string& spec);

// uniformly grown random tree on n vertices with degree at most max_degree
Graph random_tree(int n, int max_degree, Rng& rng);

Graph generate_girth_graph(int n, int max_degree, int min_girth, std::uint64_t seed,
                           int max_retries = 64);

Graph read_graph(const std::string& path);
void write_graph(const Graph& g, const std::string& path);
std::string graph_to_text(const Graph& g);

}  // namespace spindecay
