#include "spindecay/instance.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "spindecay/errors.hpp"
#include "spindecay/tree.hpp"

namespace spindecay {

ColoringInstance ColoringInstance::full(const Graph& g, int q) {
  ColoringInstance inst{g, q, {}};
  std::vector<int> all(q);
  for (int c = 0; c < q; ++c) all[c] = c;
  inst.lists.assign(g.vertex_count(), all);
  return inst;
}

SpinSystem::SpinSystem(const ColoringInstance& inst)
    : graph_(inst.graph), q_(inst.q), potts_(false), same_(0.0), lists_(inst.lists) {
  if (q_ < 1) throw ParameterError("q must be positive");
  if (static_cast<int>(lists_.size()) != graph_.vertex_count())
    throw ParameterError("one list per vertex required");
  allowed_.assign(static_cast<std::size_t>(n()) * q_, 0);
  for (int v = 0; v < n(); ++v) {
    auto& l = lists_[v];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    if (l.empty()) throw ParameterError("empty color list at vertex " + std::to_string(v));
    for (int c : l) {
      if (c < 0 || c >= q_) throw ParameterError("list color outside [0,q)");
      allowed_[v * q_ + c] = 1;
    }
  }
}

SpinSystem::SpinSystem(const PottsInstance& inst)
    : graph_(inst.graph), q_(inst.q), potts_(true), same_(inst.beta) {
  if (q_ < 2) throw ParameterError("Potts needs q >= 2");
  if (!(inst.beta >= 0 && inst.beta <= 1)) throw ParameterError("beta outside [0,1]");
  std::vector<int> all(q_);
  for (int c = 0; c < q_; ++c) all[c] = c;
  lists_.assign(n(), all);
  allowed_.assign(static_cast<std::size_t>(n()) * q_, 1);
}

Pinning Pinning::from_map(int n, const std::map<int, int>& m) {
  Pinning p(n);
  for (auto [v, c] : m) {
    if (v < 0 || v >= n) throw DomainError("pinned vertex out of range");
    if (c < 0) throw DomainError("negative pinned color");
    p.set(v, c);
  }
  return p;
}

int Pinning::count() const {
  return static_cast<int>(std::count_if(colors_.begin(), colors_.end(), [](int c) { return c >= 0; }));
}

std::map<int, int> Pinning::assignments() const {
  std::map<int, int> m;
  for (int v = 0; v < size(); ++v)
    if (pinned(v)) m[v] = colors_[v];
  return m;
}

void validate_pinning(const SpinSystem& sys, const Pinning& pin) {
  if (pin.size() != sys.n()) throw DomainError("pinning size does not match the graph");
  for (int v = 0; v < sys.n(); ++v)
    if (pin.pinned(v) && (pin.color(v) >= sys.q() || !sys.allowed(v, pin.color(v))))
      throw DomainError("pinned color outside the list of vertex " + std::to_string(v));
}

namespace {

bool extend(const SpinSystem& sys, const std::vector<int>& order, std::size_t i,
            std::vector<int>& state, long long& budget) {
  if (i == order.size()) return true;
  if (--budget < 0) throw CapExceeded("feasibility search exceeded the state cap");
  const int v = order[i];
  for (int c : sys.list(v)) {
    bool clash = false;
    for (int w : sys.graph().neighbors(v))
      if (state[w] == c) clash = true;
    if (clash) continue;
    state[v] = c;
    if (extend(sys, order, i + 1, state, budget)) return true;
  }
  state[v] = -1;
  return false;
}

}  // namespace

bool check_pinning_feasible(const SpinSystem& sys, const Pinning& pin, long long state_cap) {
  validate_pinning(sys, pin);
  const Graph& g = sys.graph();
  if (sys.is_potts() && sys.beta() > 0) return true;
  for (auto [u, v] : g.edges())
    if (pin.pinned(u) && pin.pinned(v) && pin.color(u) == pin.color(v)) return false;
  if (is_tree(g)) {
    try {
      subtree_marginals(sys, RootedTree::from_graph(g, 0), pin);
      return true;
    } catch (const InfeasibleError&) {
      return false;
    }
  }
  std::vector<int> order;
  std::vector<char> seen(g.vertex_count(), 0);
  for (int s = 0; s < g.vertex_count(); ++s) {
    if (seen[s]) continue;
    auto d = distances(g, s);
    std::vector<int> comp;
    for (int v = 0; v < g.vertex_count(); ++v)
      if (d[v] >= 0) {
        seen[v] = 1;
        comp.push_back(v);
      }
    std::stable_sort(comp.begin(), comp.end(), [&](int a, int b) { return d[a] < d[b]; });
    for (int v : comp)
      if (!pin.pinned(v)) order.push_back(v);
  }
  std::vector<int> state = pin.dense();
  long long budget = state_cap;
  return extend(sys, order, 0, state, budget);
}

SpinSystem read_instance(const Graph& g, const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw DomainError("cannot open instance file " + json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("bad instance JSON: ") + e.what());
  }
  if (!j.contains("q")) throw DomainError("instance needs q");
  const int q = j.at("q").get<int>();
  if (j.contains("beta")) return PottsInstance{g, q, j.at("beta").get<double>()};
  if (!j.contains("lists")) return ColoringInstance::full(g, q);
  return ColoringInstance{g, q, j.at("lists").get<std::vector<std::vector<int>>>()};
}

Pinning read_pinning(int n, const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw DomainError("cannot open pinning file " + json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("bad pinning JSON: ") + e.what());
  }
  std::map<int, int> m;
  for (auto& [k, val] : j.items()) m[std::stoi(k)] = val.get<int>();
  return Pinning::from_map(n, m);
}

}  // namespace spindecay
