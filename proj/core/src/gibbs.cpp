#include "spindecay/gibbs.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "spindecay/errors.hpp"

namespace spindecay {

Dist GibbsTable::marginal(int v) const {
  Dist m(q, 0.0);
  for (std::size_t s = 0; s < size(); ++s) m[color(s, v)] += prob[s];
  return m;
}

std::vector<Dist> GibbsTable::marginals() const {
  std::vector<Dist> m(n, Dist(q, 0.0));
  for (std::size_t s = 0; s < size(); ++s)
    for (int v = 0; v < n; ++v) m[v][color(s, v)] += prob[s];
  return m;
}

std::vector<std::pair<std::vector<int>, double>> GibbsTable::joint(
    const std::vector<int>& vertices) const {
  std::map<std::vector<int>, double> acc;
  std::vector<int> key(vertices.size());
  for (std::size_t s = 0; s < size(); ++s) {
    for (std::size_t k = 0; k < vertices.size(); ++k) key[k] = color(s, vertices[k]);
    acc[key] += prob[s];
  }
  return {acc.begin(), acc.end()};
}

std::size_t GibbsTable::sample(Rng& rng) const {
  double t = rng.uniform();
  for (std::size_t s = 0; s < size(); ++s) {
    if (t < prob[s]) return s;
    t -= prob[s];
  }
  return size() - 1;
}

nlohmann::json GibbsTable::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["q"] = q;
  j["free_vertices"] = free_vertices;
  auto rows = nlohmann::json::array();
  for (std::size_t s = 0; s < size(); ++s) {
    std::vector<int> st(row(s), row(s) + n);
    rows.push_back({{"state", st}, {"p", prob[s]}});
  }
  j["states"] = rows;
  return j;
}

namespace {

struct Enumerator {
  const SpinSystem& sys;
  std::vector<int> order;
  std::vector<int> state;
  long long cap;
  GibbsTable* out;

  void run(std::size_t i, double weight) {
    if (i == order.size()) {
      if (static_cast<long long>(out->prob.size()) >= cap)
        throw CapExceeded("Gibbs enumeration exceeded the state cap of " + std::to_string(cap));
      for (int c : state) out->states.push_back(static_cast<std::uint8_t>(c));
      out->prob.push_back(weight);
      return;
    }
    const int v = order[i];
    for (int c : sys.list(v)) {
      double w = weight;
      for (int x : sys.graph().neighbors(v))
        if (state[x] >= 0) w *= sys.pair_weight(c, state[x]);
      if (w <= 0) continue;
      state[v] = c;
      run(i + 1, w);
    }
    state[v] = -1;
  }
};

}  // namespace

GibbsTable enumerate_gibbs(const SpinSystem& sys, const Pinning& pin, long long state_cap) {
  validate_pinning(sys, pin);
  if (sys.q() > 255) throw ParameterError("enumeration supports q <= 255");
  const Graph& g = sys.graph();
  GibbsTable t;
  t.n = sys.n();
  t.q = sys.q();
  double base = 1.0;
  for (auto [u, v] : g.edges())
    if (pin.pinned(u) && pin.pinned(v)) base *= sys.pair_weight(pin.color(u), pin.color(v));
  if (base <= 0) throw InfeasibleError("pinning has a conflicting edge");
  std::vector<char> seen(t.n, 0);
  std::vector<int> order;
  for (int s = 0; s < t.n; ++s) {
    if (seen[s]) continue;
    auto d = distances(g, s);
    std::vector<int> comp;
    for (int v = 0; v < t.n; ++v)
      if (d[v] >= 0) {
        seen[v] = 1;
        comp.push_back(v);
      }
    std::stable_sort(comp.begin(), comp.end(), [&](int a, int b) { return d[a] < d[b]; });
    for (int v : comp)
      if (!pin.pinned(v)) order.push_back(v);
  }
  t.free_vertices = order;
  std::sort(t.free_vertices.begin(), t.free_vertices.end());
  Enumerator e{sys, order, pin.dense(), state_cap, &t};
  e.run(0, base);
  double total = std::accumulate(t.prob.begin(), t.prob.end(), 0.0);
  if (!(total > 0)) throw InfeasibleError("pinning has no feasible extension");
  for (double& p : t.prob) p /= total;
  return t;
}

GibbsTable condition(const GibbsTable& t, const std::vector<std::pair<int, int>>& pins) {
  GibbsTable out;
  out.n = t.n;
  out.q = t.q;
  for (int v : t.free_vertices) {
    bool dropped = std::any_of(pins.begin(), pins.end(), [&](auto& pc) { return pc.first == v; });
    if (!dropped) out.free_vertices.push_back(v);
  }
  double total = 0;
  for (std::size_t s = 0; s < t.size(); ++s) {
    bool match = true;
    for (auto [v, c] : pins)
      if (t.color(s, v) != c) {
        match = false;
        break;
      }
    if (!match) continue;
    out.states.insert(out.states.end(), t.row(s), t.row(s) + t.n);
    out.prob.push_back(t.prob[s]);
    total += t.prob[s];
  }
  if (!(total > 0)) throw InfeasibleError("conditioning event has probability zero");
  for (double& p : out.prob) p /= total;
  return out;
}

GibbsTable condition(const GibbsTable& t, int v, int c) { return condition(t, {{v, c}}); }

namespace {

std::vector<int> feasible_colors(const Dist& m) {
  std::vector<int> out;
  for (std::size_t c = 0; c < m.size(); ++c)
    if (m[c] > 0) out.push_back(static_cast<int>(c));
  return out;
}

}  // namespace

InfluenceMatrix influence_matrix(const GibbsTable& t) {
  if (t.free_vertices.size() < 2) throw DomainError("influence matrix needs at least two free vertices");
  const auto base = t.marginals();
  InfluenceMatrix m;
  std::map<std::pair<int, int>, int> pos;
  for (int v : t.free_vertices)
    for (int c : feasible_colors(base[v])) {
      pos[{v, c}] = static_cast<int>(m.index.size());
      m.index.emplace_back(v, c);
    }
  const int N = static_cast<int>(m.index.size());
  m.entries = Eigen::MatrixXd::Zero(N, N);
  for (int u : t.free_vertices) {
    // conditional marginals of every vertex given u = b, in one pass
    std::vector<std::vector<std::vector<long double>>> cond(t.q);
    std::vector<long double> mass(t.q, 0.0L);
    for (int b : feasible_colors(base[u])) cond[b].assign(t.n, std::vector<long double>(t.q, 0.0L));
    for (std::size_t s = 0; s < t.size(); ++s) {
      const int b = t.color(s, u);
      mass[b] += t.prob[s];
      for (int v : t.free_vertices) cond[b][v][t.color(s, v)] += t.prob[s];
    }
    long double total = 0;
    for (int b : feasible_colors(base[u])) total += mass[b];
    for (int b : feasible_colors(base[u])) {
      const int row = pos.at({u, b});
      for (int v : t.free_vertices) {
        if (v == u) continue;
        for (int c : feasible_colors(base[v])) {
          long double marg = 0;
          for (int a : feasible_colors(base[u])) marg += cond[a][v][c];
          m.entries(row, pos.at({v, c})) = static_cast<double>(cond[b][v][c] / mass[b] - marg / total);
        }
      }
    }
  }
  return m;
}

InfluenceMatrix influence_matrix(const SpinSystem& sys, const Pinning& pin, long long state_cap) {
  return influence_matrix(enumerate_gibbs(sys, pin, state_cap));
}

Eigen::MatrixXd influence_block(const InfluenceMatrix& m, int u, int v) {
  std::vector<int> rows, cols;
  for (int i = 0; i < static_cast<int>(m.index.size()); ++i) {
    if (m.index[i].first == u) rows.push_back(i);
    if (m.index[i].first == v) cols.push_back(i);
  }
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = m.entries(rows[a], cols[b]);
  return out;
}

nlohmann::json InfluenceMatrix::to_json() const {
  nlohmann::json j;
  auto idx = nlohmann::json::array();
  for (auto [v, c] : index) idx.push_back({v, c});
  j["index"] = idx;
  auto rows = nlohmann::json::array();
  for (int r = 0; r < entries.rows(); ++r) {
    std::vector<double> row(entries.cols());
    for (int c = 0; c < entries.cols(); ++c) row[c] = entries(r, c);
    rows.push_back(row);
  }
  j["entries"] = rows;
  return j;
}

double infinity_norm(const Eigen::MatrixXd& m) {
  double best = 0;
  for (int r = 0; r < m.rows(); ++r) best = std::max(best, m.row(r).cwiseAbs().sum());
  return best;
}

SpectralReport spectral_report(const InfluenceMatrix& m) {
  SpectralReport rep;
  const int N = static_cast<int>(m.entries.rows());
  rep.dimension = N;
  if (N == 0) return rep;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m.entries, false);
  const auto ev = es.eigenvalues();
  rep.lambda_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    rep.lambda_max = std::max(rep.lambda_max, ev(i).real());
    rep.max_imag = std::max(rep.max_imag, std::abs(ev(i).imag()));
  }
  rep.real_spectrum = rep.max_imag <= 1e-8;
  // shift so the top real eigenvalue dominates in magnitude
  const double shift = infinity_norm(m.entries) + 1.0;
  Eigen::MatrixXd a = m.entries + shift * Eigen::MatrixXd::Identity(N, N);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(N);
  for (int i = 0; i < N; ++i) x(i) += 0.013 * (i % 7);
  x.normalize();
  double lambda = 0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd y = a * x;
    const double norm = y.norm();
    const double next = x.dot(y);
    x = y / norm;
    if (std::abs(next - lambda) <= 1e-15 * shift) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  rep.lambda_power = lambda - shift;
  return rep;
}

double spectral_independence(const SpinSystem& sys, const Pinning& pin, long long state_cap) {
  return spectral_report(influence_matrix(sys, pin, state_cap)).lambda_max;
}

double tv_distance(const Dist& a, const Dist& b) {
  if (a.size() != b.size()) throw ParameterError("TV needs equal supports");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

double transport_cost(std::vector<double> supply, std::vector<double> demand,
                      const std::vector<std::vector<int>>& cost) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  if (m == 0 || n == 0) return 0;
  const double sa = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (std::abs(sa - sb) > 1e-9 * std::max(1.0, sa)) throw ParameterError("unbalanced transport");
  for (double& x : demand) x *= sa / sb;
  constexpr double kEps = 1e-15;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> flow(static_cast<std::size_t>(m) * n, 0.0);
  std::vector<double> pot(m + n, 0.0), dist(m + n);
  std::vector<int> prev(m + n);
  std::vector<char> done(m + n);
  double total = 0;
  for (int iter = 0; iter < 100 * (m + n) + 1000; ++iter) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    bool any = false;
    for (int i = 0; i < m; ++i)
      if (supply[i] > kEps) {
        dist[i] = 0;
        any = true;
      }
    if (!any) break;
    for (;;) {
      int x = -1;
      for (int k = 0; k < m + n; ++k)
        if (!done[k] && dist[k] < kInf && (x < 0 || dist[k] < dist[x])) x = k;
      if (x < 0) break;
      done[x] = 1;
      if (x < m) {
        for (int j = 0; j < n; ++j) {
          const double nd = dist[x] + cost[x][j] + pot[x] - pot[m + j];
          if (nd < dist[m + j]) {
            dist[m + j] = nd;
            prev[m + j] = x;
          }
        }
      } else {
        const int j = x - m;
        for (int i = 0; i < m; ++i) {
          if (flow[static_cast<std::size_t>(i) * n + j] <= kEps) continue;
          const double nd = dist[x] - cost[i][j] + pot[x] - pot[i];
          if (nd < dist[i]) {
            dist[i] = nd;
            prev[i] = x;
          }
        }
      }
    }
    int target = -1;
    for (int j = 0; j < n; ++j)
      if (demand[j] > kEps && dist[m + j] < kInf && (target < 0 || dist[m + j] < dist[m + target]))
        target = j;
    if (target < 0) break;
    const double cut = dist[m + target];
    for (int k = 0; k < m + n; ++k) pot[k] += std::min(dist[k], cut);
    // walk back to the source and find the bottleneck
    double amount = demand[target];
    int x = m + target;
    while (prev[x] >= 0) {
      const int p = prev[x];
      if (p >= m) amount = std::min(amount, flow[static_cast<std::size_t>(x) * n + (p - m)]);
      x = p;
    }
    amount = std::min(amount, supply[x]);
    supply[x] -= amount;
    demand[target] -= amount;
    x = m + target;
    while (prev[x] >= 0) {
      const int p = prev[x];
      if (p < m) {
        flow[static_cast<std::size_t>(p) * n + (x - m)] += amount;
        total += amount * cost[p][x - m];
      } else {
        flow[static_cast<std::size_t>(x) * n + (p - m)] -= amount;
        total -= amount * cost[x][p - m];
      }
      x = p;
    }
  }
  return total;
}

namespace {

using Key = std::vector<std::uint8_t>;

std::map<Key, double> project(const GibbsTable& t) {
  std::map<Key, double> out;
  Key k(t.free_vertices.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(t.color(s, t.free_vertices[i]));
    out[k] += t.prob[s];
  }
  return out;
}

int hamming(const Key& a, const Key& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

W1Result w1_hamming(const GibbsTable& a, const GibbsTable& b, std::size_t support_cap) {
  if (a.free_vertices != b.free_vertices) throw ParameterError("W1 needs a common free-vertex set");
  W1Result r;
  for (int v : a.free_vertices) r.lower += tv_distance(a.marginal(v), b.marginal(v));
  auto pa = project(a), pb = project(b);
  std::vector<Key> ka, kb;
  std::vector<double> ea, eb;
  for (auto& [k, p] : pa) {
    auto it = pb.find(k);
    const double shared = it == pb.end() ? 0.0 : std::min(p, it->second);
    if (p - shared > 1e-15) {
      ka.push_back(k);
      ea.push_back(p - shared);
    }
  }
  for (auto& [k, p] : pb) {
    auto it = pa.find(k);
    const double shared = it == pa.end() ? 0.0 : std::min(p, it->second);
    if (p - shared > 1e-15) {
      kb.push_back(k);
      eb.push_back(p - shared);
    }
  }
  std::vector<std::vector<int>> cost(ka.size(), std::vector<int>(kb.size()));
  for (std::size_t i = 0; i < ka.size(); ++i)
    for (std::size_t j = 0; j < kb.size(); ++j) cost[i][j] = hamming(ka[i], kb[j]);

  // greedy: cheapest remaining pair first
  {
    std::vector<std::pair<int, std::size_t>> pairs;
    pairs.reserve(ka.size() * kb.size());
    for (std::size_t i = 0; i < ka.size(); ++i)
      for (std::size_t j = 0; j < kb.size(); ++j) pairs.emplace_back(cost[i][j], i * kb.size() + j);
    std::sort(pairs.begin(), pairs.end());
    auto ra = ea, rb = eb;
    for (auto [c, idx] : pairs) {
      const std::size_t i = idx / kb.size(), j = idx % kb.size();
      const double m = std::min(ra[i], rb[j]);
      if (m <= 0) continue;
      ra[i] -= m;
      rb[j] -= m;
      r.upper += m * c;
    }
  }
  if (ka.size() <= support_cap && kb.size() <= support_cap) {
    r.exact = transport_cost(ea, eb, cost);
    r.exact_computed = true;
  }
  return r;
}

double influence_decay_at_R(const GibbsTable& t, int u, int R, const Graph& g) {
  std::vector<int> sph;
  for (int v : sphere(g, u, R))
    if (std::binary_search(t.free_vertices.begin(), t.free_vertices.end(), v) && v != u) sph.push_back(v);
  if (sph.empty()) return 0;
  const auto colors = feasible_colors(t.marginal(u));
  std::vector<std::vector<Dist>> cond(t.q);
  for (int b : colors) {
    auto tb = condition(t, u, b);
    for (int v : sph) cond[b].push_back(tb.marginal(v));
  }
  double best = 0;
  for (std::size_t i = 0; i < colors.size(); ++i)
    for (std::size_t j = i + 1; j < colors.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < sph.size(); ++k) s += tv_distance(cond[colors[i]][k], cond[colors[j]][k]);
      best = std::max(best, s);
    }
  return best;
}

double influence_decay_at_R(const SpinSystem& sys, const Pinning& pin, int u, int R,
                            long long state_cap) {
  if (pin.pinned(u)) throw DomainError("u must be free");
  return influence_decay_at_R(enumerate_gibbs(sys, pin, state_cap), u, R, sys.graph());
}

nlohmann::json SumInflReport::to_json() const {
  return {{"lhs", lhs},
          {"rhs", rhs},
          {"min_slack", min_slack},
          {"holds", holds},
          {"exact_max", exact_max},
          {"sphere_pinnings", sphere_pinnings},
          {"sphere_tv", sphere_tv},
          {"center_rhs", center_rhs},
          {"ratios_within_2", ratios_within_2},
          {"ball_is_tree", ball_is_tree},
          {"center_holds", center_holds}};
}

namespace {

std::vector<int> free_part(const GibbsTable& t, const std::vector<int>& vs, int skip) {
  std::vector<int> out;
  for (int v : vs)
    if (v != skip && std::binary_search(t.free_vertices.begin(), t.free_vertices.end(), v)) out.push_back(v);
  return out;
}

// per sphere pinning σ: conditional marginals of `targets`
std::map<std::vector<int>, std::vector<Dist>> marginals_by_key(const GibbsTable& t,
                                                              const std::vector<int>& key_vs,
                                                              const std::vector<int>& targets) {
  std::map<std::vector<int>, std::vector<Dist>> acc;
  std::map<std::vector<int>, double> mass;
  std::vector<int> key(key_vs.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    for (std::size_t k = 0; k < key_vs.size(); ++k) key[k] = t.color(s, key_vs[k]);
    auto& rows = acc[key];
    if (rows.empty()) rows.assign(targets.size(), Dist(t.q, 0.0));
    for (std::size_t k = 0; k < targets.size(); ++k) rows[k][t.color(s, targets[k])] += t.prob[s];
    mass[key] += t.prob[s];
  }
  for (auto& [k, rows] : acc)
    for (auto& r : rows)
      for (double& x : r) x /= mass[k];
  return acc;
}

bool induced_tree(const Graph& g, const std::vector<int>& vs) {
  std::vector<int> idx(g.vertex_count(), -1);
  for (std::size_t i = 0; i < vs.size(); ++i) idx[vs[i]] = static_cast<int>(i);
  Graph h(static_cast<int>(vs.size()));
  for (auto [a, b] : g.edges())
    if (idx[a] >= 0 && idx[b] >= 0) h.add_edge(idx[a], idx[b]);
  return is_tree(h);
}

}  // namespace

SumInflReport check_sum_infl_inequality(const SpinSystem& sys, const Pinning& pin, int u, int R,
                                        int K, long long state_cap, std::uint64_t seed) {
  if (!(K > R && R >= 1)) throw DomainError("need K > R >= 1");
  if (pin.pinned(u)) throw DomainError("u must be free");
  const Graph& g = sys.graph();
  const GibbsTable t = enumerate_gibbs(sys, pin, state_cap);
  const auto SR = free_part(t, sphere(g, u, R), u);
  const auto SK = free_part(t, sphere(g, u, K), u);
  const auto colors = feasible_colors(t.marginal(u));
  SumInflReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  rep.ball_is_tree = induced_tree(g, ball(g, u, K));
  constexpr std::size_t kMaxPinnings = 10000;
  Rng rng(seed, 0xC0DE);
  std::vector<GibbsTable> cond(t.q);
  for (int b : colors) cond[b] = condition(t, u, b);
  for (std::size_t i = 0; i < colors.size(); ++i)
    for (std::size_t j = i + 1; j < colors.size(); ++j) {
      const GibbsTable &tb = cond[colors[i]], &tc = cond[colors[j]];
      double lhs = 0;
      for (int v : SR) lhs += tv_distance(tb.marginal(v), tc.marginal(v));
      // TV of the joint laws on S_K
      std::map<std::vector<int>, double> diff;
      for (auto& [k, p] : tb.joint(SK)) diff[k] += p;
      for (auto& [k, p] : tc.joint(SK)) diff[k] -= p;
      double tv = 0;
      for (auto& [k, d] : diff) tv += std::abs(d);
      tv *= 0.5;
      auto mb = marginals_by_key(tb, SK, SR);
      auto mc = marginals_by_key(tc, SK, SR);
      std::vector<const std::vector<int>*> common;
      for (auto& [k, rows] : mb)
        if (mc.count(k)) common.push_back(&k);
      rep.sphere_pinnings = std::max(rep.sphere_pinnings, static_cast<int>(common.size()));
      if (common.size() > kMaxPinnings) {
        rep.exact_max = false;
        rng.shuffle(common);
        common.resize(kMaxPinnings);
      }
      double best = 0;
      for (const auto* k : common) {
        double s = 0;
        const auto &rb = mb.at(*k), &rc = mc.at(*k);
        for (std::size_t a = 0; a < SR.size(); ++a) s += tv_distance(rb[a], rc[a]);
        best = std::max(best, s);
      }
      const double rhs = tv * static_cast<double>(SR.size()) + best;
      rep.lhs = std::max(rep.lhs, lhs);
      rep.rhs = std::max(rep.rhs, rhs);
      rep.min_slack = std::min(rep.min_slack, rhs - lhs);
      rep.sphere_tv = std::max(rep.sphere_tv, tv);
    }
  if (colors.size() < 2) rep.min_slack = 0;
  rep.holds = rep.min_slack >= -1e-12;

  // center-to-sphere: ratios of u's law under different sphere pinnings
  auto by_sigma = marginals_by_key(t, SK, {u});
  double worst = 0;
  for (int a : colors) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (auto& [k, rows] : by_sigma) {
      lo = std::min(lo, rows[0][a]);
      hi = std::max(hi, rows[0][a]);
    }
    worst = std::max(worst, lo > 0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity());
  }
  rep.center_rhs = 2.0 * worst;
  rep.ratios_within_2 = worst <= 1.0;
  rep.center_holds = rep.sphere_tv <= rep.center_rhs + 1e-12;
  return rep;
}

}  // namespace spindecay
