#include "spindecay/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spindecay/errors.hpp"

namespace spindecay {

namespace {

constexpr double kTiny = 1e-300;

Dist point_mass(int q, int c) {
  Dist d(q, 0.0);
  d[c] = 1.0;
  return d;
}

Dist normalize_or_throw(Dist w, const char* what) {
  double total = 0;
  for (double x : w) total += x;
  if (!(total >= kTiny)) throw InfeasibleError(what);
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

bool SubDistribution::valid(double tol) const {
  double total = 0;
  for (double x : values) {
    if (x < -tol || x > cap + tol) return false;
    total += x;
  }
  return total <= 1.0 + tol;
}

Dist recursion_step(const std::vector<int>& root_list, int q, double theta,
                    const std::vector<Dist>& children) {
  for (const auto& p : children)
    if (static_cast<int>(p.size()) != q) throw ParameterError("child vector has wrong length");
  Dist out(q, 0.0);
  for (int c : root_list) {
    double prod = 1.0;
    for (const auto& p : children) prod *= 1.0 - theta * p[c];
    out[c] = prod;
  }
  return normalize_or_throw(std::move(out), "all root colors blocked");
}

Dist recursion_step_coloring(const std::vector<int>& root_list, int q,
                             const std::vector<Dist>& children) {
  return recursion_step(root_list, q, 1.0, children);
}

Dist recursion_step_potts(int q, double beta, const std::vector<Dist>& children) {
  if (beta < 0 || beta > 1) throw ParameterError("beta outside [0,1]");
  std::vector<int> all(q);
  for (int c = 0; c < q; ++c) all[c] = c;
  return recursion_step(all, q, 1.0 - beta, children);
}

std::vector<Dist> subtree_marginals(const SpinSystem& sys, const RootedTree& tree,
                                    const Pinning& pin) {
  validate_pinning(sys, pin);
  const int q = sys.q();
  const double theta = sys.theta();
  std::vector<Dist> sub(tree.size());
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const int v = *it;
    Dist w(q, 0.0);
    for (int c : sys.list(v)) {
      double prod = 1.0;
      for (int ch : tree.children[v]) prod *= 1.0 - theta * sub[ch][c];
      w[c] = prod;
    }
    if (pin.pinned(v)) {
      if (!(w[pin.color(v)] >= kTiny)) throw InfeasibleError("pinning cannot be extended below a pinned vertex");
      sub[v] = point_mass(q, pin.color(v));
    } else {
      sub[v] = normalize_or_throw(std::move(w), "no feasible color in a subtree");
    }
  }
  return sub;
}

MarginalTable exact_tree_marginals(const SpinSystem& sys, const RootedTree& tree,
                                   const Pinning& pin) {
  const int n = tree.size();
  const int q = sys.q();
  const double theta = sys.theta();
  auto sub = subtree_marginals(sys, tree, pin);
  // outside[v]: marginal of parent(v) in the tree with T_v removed
  std::vector<Dist> outside(n);
  MarginalTable table;
  table.rows.resize(n);
  table.free.assign(n, 0);
  std::vector<double> prefix, suffix;
  for (int u : tree.order) {
    const auto& ch = tree.children[u];
    const int k = static_cast<int>(ch.size());
    Dist full(q, 0.0);
    std::vector<Dist> excl(k, Dist(q, 0.0));
    for (int c : sys.list(u)) {
      double base = u == tree.root ? 1.0 : 1.0 - theta * outside[u][c];
      prefix.assign(k + 1, 1.0);
      suffix.assign(k + 1, 1.0);
      for (int i = 0; i < k; ++i) prefix[i + 1] = prefix[i] * (1.0 - theta * sub[ch[i]][c]);
      for (int i = k - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * (1.0 - theta * sub[ch[i]][c]);
      full[c] = base * prefix[k];
      for (int i = 0; i < k; ++i) excl[i][c] = base * prefix[i] * suffix[i + 1];
    }
    if (pin.pinned(u)) {
      table.rows[u] = point_mass(q, pin.color(u));
      for (int i = 0; i < k; ++i) outside[ch[i]] = table.rows[u];
    } else {
      table.free[u] = 1;
      table.rows[u] = normalize_or_throw(std::move(full), "pinning is infeasible");
      for (int i = 0; i < k; ++i)
        outside[ch[i]] = normalize_or_throw(std::move(excl[i]), "pinning is infeasible");
    }
  }
  return table;
}

Dist child_given_parent(const SpinSystem& sys, const Dist& child_subtree, int parent_color) {
  Dist w(child_subtree.size());
  for (std::size_t y = 0; y < w.size(); ++y)
    w[y] = child_subtree[y] * sys.pair_weight(parent_color, static_cast<int>(y));
  return normalize_or_throw(std::move(w), "child has no compatible color");
}

std::vector<int> sample_tree(const SpinSystem& sys, const RootedTree& tree, const Pinning& pin,
                             Rng& rng) {
  auto sub = subtree_marginals(sys, tree, pin);
  std::vector<int> state(tree.size(), -1);
  for (int v : tree.order) {
    if (pin.pinned(v)) {
      state[v] = pin.color(v);
      continue;
    }
    const Dist& p = v == tree.root ? sub[v] : child_given_parent(sys, sub[v], state[tree.parent[v]]);
    state[v] = static_cast<int>(rng.discrete(p));
  }
  return state;
}

double bound_one_level(double gamma) {
  if (!(gamma > 0)) throw ParameterError("gamma must be positive");
  return 1.0 / gamma;
}

double bound_two_level_odds(int q_r, int d_r, double gamma) {
  if (q_r <= 1) return std::numeric_limits<double>::infinity();
  return std::pow(1.0 + 1.0 / (gamma - 1.0), gamma * d_r / (q_r - 1.0)) / (q_r - 1.0);
}

double bound_two_level_cap(int q_r, int d_r, double gamma) {
  if (q_r <= 1) return 1.0;
  const double x = xi(gamma, d_r, q_r);
  return x / (q_r - 1.0 + x);
}

double bound_lower(int q, double gamma, int d_v) {
  return std::pow(1.0 - 1.0 / gamma, d_v) / q;
}

double bound_potts_two_level(int q, double beta, int Delta_r, int d_r) {
  const double theta = 1.0 - beta;
  const double rest = (q - 1.0) - theta * (Delta_r - d_r);
  if (rest <= 0) return 1.0;
  return std::min(1.0, 1.0 / (1.0 + rest * std::pow(1.0 - theta / (q - 1.0), d_r)));
}

double xi(double gamma, int d_v, int q_v) {
  return std::pow(1.0 + 1.0 / (gamma - 1.0), gamma * d_v / (q_v - 1.0));
}

std::optional<int> first_cap_violation(const SpinSystem& sys, const RootedTree& tree,
                                       const Pinning& pin, double gamma, double tol) {
  auto sub = subtree_marginals(sys, tree, pin);
  std::vector<char> ok(tree.size(), 0);
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const int v = *it;
    if (pin.pinned(v)) continue;
    std::vector<char> blocked(sys.q(), 0);
    int d = 0;
    bool children_ok = true;
    for (int ch : tree.children[v]) {
      if (pin.pinned(ch)) {
        blocked[pin.color(ch)] = 1;
      } else {
        ++d;
        children_ok = children_ok && ok[ch];
      }
    }
    int qv = 0;
    for (int c : sys.list(v)) qv += !blocked[c];
    if (qv < d + gamma) continue;
    double cap = bound_one_level(gamma);
    if (children_ok && gamma >= 2) cap = std::min(cap, bound_two_level_cap(qv, d, gamma));
    ok[v] = children_ok;
    for (double x : sub[v])
      if (x > cap + tol) return v;
  }
  return std::nullopt;
}

}  // namespace spindecay
