#include "spindecay/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "spindecay/errors.hpp"

namespace spindecay {

Graph::Graph(int n) : adj_(n) {
  if (n < 0) throw ParameterError("negative vertex count");
}

Graph::Graph(int n, const std::vector<Edge>& edges) : Graph(n) {
  for (auto [u, v] : edges) add_edge(u, v);
}

void Graph::add_edge(int u, int v) {
  const int n = vertex_count();
  if (u < 0 || v < 0 || u >= n || v >= n) throw ParameterError("edge endpoint out of range");
  if (u == v) throw ParameterError("self-loop");
  if (has_edge(u, v)) throw ParameterError("duplicate edge");
  adj_[u].insert(std::lower_bound(adj_[u].begin(), adj_[u].end(), v), v);
  adj_[v].insert(std::lower_bound(adj_[v].begin(), adj_[v].end(), u), u);
  ++edge_count_;
}

bool Graph::has_edge(int u, int v) const {
  return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
}

int Graph::max_degree() const {
  int d = 0;
  for (const auto& a : adj_) d = std::max(d, static_cast<int>(a.size()));
  return d;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (int u = 0; u < vertex_count(); ++u)
    for (int v : adj_[u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

std::vector<int> distances(const Graph& g, int u) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::deque<int> queue{u};
  dist[u] = 0;
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    for (int y : g.neighbors(x))
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
  }
  return dist;
}

std::vector<int> sphere(const Graph& g, int u, int r) {
  auto dist = distances(g, u);
  std::vector<int> out;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (dist[v] == r) out.push_back(v);
  return out;
}

std::vector<int> ball(const Graph& g, int u, int r) {
  auto dist = distances(g, u);
  std::vector<int> out;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (dist[v] >= 0 && dist[v] <= r) out.push_back(v);
  return out;
}

std::optional<int> girth(const Graph& g) {
  const int n = g.vertex_count();
  int best = -1;
  std::vector<int> dist(n), par(n);
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    par[s] = -1;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      int x = queue.front();
      queue.pop_front();
      if (best > 0 && 2 * dist[x] + 1 >= best) break;
      for (int y : g.neighbors(x)) {
        if (dist[y] < 0) {
          dist[y] = dist[x] + 1;
          par[y] = x;
          queue.push_back(y);
        } else if (y != par[x]) {
          int len = dist[x] + dist[y] + 1;
          if (best < 0 || len < best) best = len;
        }
      }
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

bool is_connected(const Graph& g) {
  if (g.vertex_count() == 0) return true;
  auto d = distances(g, 0);
  return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

bool is_tree(const Graph& g) {
  return g.vertex_count() > 0 && g.edge_count() == g.vertex_count() - 1 && is_connected(g);
}

RootedTree RootedTree::from_graph(const Graph& g, int root) {
  if (!is_tree(g)) throw ParameterError("graph is not a tree");
  if (root < 0 || root >= g.vertex_count()) throw ParameterError("root out of range");
  RootedTree t;
  t.graph = g;
  t.root = root;
  const int n = g.vertex_count();
  t.parent.assign(n, -1);
  t.children.assign(n, {});
  t.depth.assign(n, -1);
  t.depth[root] = 0;
  t.order.push_back(root);
  for (std::size_t i = 0; i < t.order.size(); ++i) {
    int x = t.order[i];
    for (int y : g.neighbors(x)) {
      if (t.depth[y] >= 0) continue;
      t.depth[y] = t.depth[x] + 1;
      t.parent[y] = x;
      t.children[x].push_back(y);
      t.order.push_back(y);
    }
  }
  return t;
}

int RootedTree::height() const { return *std::max_element(depth.begin(), depth.end()); }

Graph make_dary_tree(int d, int h) {
  if (d < 1 || h < 0) throw ParameterError("dary tree needs d >= 1, h >= 0");
  long long n = 1, level = 1;
  for (int i = 0; i < h; ++i) {
    level *= d;
    n += level;
    if (n > 50000000) throw ParameterError("tree too large");
  }
  Graph g(static_cast<int>(n));
  for (long long v = 1; v < n; ++v) g.add_edge(static_cast<int>((v - 1) / d), static_cast<int>(v));
  return g;
}

Graph make_path(int n) {
  if (n < 1) throw ParameterError("path needs n >= 1");
  Graph g(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

Graph make_cycle(int n) {
  if (n < 3) throw ParameterError("cycle needs n >= 3");
  Graph g = make_path(n);
  g.add_edge(0, n - 1);
  return g;
}

Graph parse_graph_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      int x = std::stoi(parts.at(i), &used);
      if (used != parts[i].size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw ParameterError("bad graph spec: " + spec);
    }
  };
  if (parts.size() == 2 && parts[0] == "bintree") return make_dary_tree(2, num(1));
  if (parts.size() == 3 && parts[0] == "dary") return make_dary_tree(num(1), num(2));
  if (parts.size() == 2 && parts[0] == "path") return make_path(num(1));
  if (parts.size() == 2 && parts[0] == "cycle") return make_cycle(num(1));
  throw ParameterError("bad graph spec: " + spec);
}

Graph random_tree(int n, int max_degree, Rng& rng) {
  if (n < 1) throw ParameterError("random tree needs n >= 1");
  if (n > 2 && max_degree < 2) throw ParameterError("max_degree too small for a tree");
  Graph g(n);
  for (int v = 1; v < n; ++v) {
    std::vector<int> open;
    for (int u = 0; u < v; ++u)
      if (g.degree(u) < max_degree) open.push_back(u);
    g.add_edge(open[rng.below(open.size())], v);
  }
  return g;
}

namespace {

// true if v is within `limit` hops of u
bool within(const Graph& g, int u, int v, int limit, std::vector<int>& dist) {
  std::fill(dist.begin(), dist.end(), -1);
  std::deque<int> queue{u};
  dist[u] = 0;
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    if (x == v) return true;
    if (dist[x] == limit) continue;
    for (int y : g.neighbors(x))
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
  }
  return false;
}

}  // namespace

Graph generate_girth_graph(int n, int max_degree, int min_girth, std::uint64_t seed,
                           int max_retries) {
  if (n < 1 || max_degree < 0) throw ParameterError("bad generator parameters");
  min_girth = std::max(min_girth, 3);
  const int want = std::max(0, std::min(max_degree, n - 1) - 1);
  std::vector<Edge> pairs;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  std::vector<int> dist(n);
  Graph best(n);
  int best_min = -1;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng(seed, static_cast<std::uint64_t>(attempt));
    auto order = pairs;
    rng.shuffle(order);
    Graph g(n);
    // a rejected pair never becomes acceptable later, so one pass is maximal
    for (auto [u, v] : order) {
      if (g.degree(u) >= max_degree || g.degree(v) >= max_degree) continue;
      if (within(g, u, v, min_girth - 2, dist)) continue;
      g.add_edge(u, v);
    }
    int lo = n;
    for (int v = 0; v < n; ++v) lo = std::min(lo, g.degree(v));
    if (lo > best_min) {
      best_min = lo;
      best = g;
    }
    if (lo >= want) return g;
  }
  throw GenerationFailure("could not reach minimum degree " + std::to_string(want) +
                          " with girth >= " + std::to_string(min_girth) + " after " +
                          std::to_string(max_retries) + " attempts");
}

Graph read_graph(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DomainError("cannot open graph file " + path);
  // lines starting with '#' are comments
  std::stringstream in;
  for (std::string line; std::getline(file, line);)
    if (line.empty() || line[0] != '#') in << line << '\n';
  int n = 0, m = 0;
  if (!(in >> n >> m)) throw DomainError("bad graph header in " + path);
  Graph g(n);
  for (int i = 0; i < m; ++i) {
    int u, v;
    if (!(in >> u >> v)) throw DomainError("truncated graph file " + path);
    g.add_edge(u, v);
  }
  return g;
}

std::string graph_to_text(const Graph& g) {
  std::ostringstream out;
  out << g.vertex_count() << ' ' << g.edge_count() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
  return out.str();
}

void write_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << graph_to_text(g);
}

}  // namespace spindecay
