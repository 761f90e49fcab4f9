#include "spindecay/coupling.hpp"

#include <cmath>
#include <limits>

#include "spindecay/errors.hpp"
#include "spindecay/parallel.hpp"
#include "spindecay/stats.hpp"

namespace spindecay {

nlohmann::json CouplingOutcome::to_json() const {
  auto tr = nlohmann::json::array();
  for (const auto& e : trace) tr.push_back({{"vertex", e.vertex}, {"depth", e.depth}, {"kind", e.kind}});
  return {{"x", x}, {"y", y}, {"hamming", hamming}, {"depth_exceeded", depth_exceeded}, {"trace", tr}};
}

int maximal_coupling_partner(const Dist& p, const Dist& q, int a, Rng& rng) {
  if (!(p[a] > 0)) throw DomainError("partner requested for a zero-probability color");
  if (rng.uniform() * p[a] < std::min(p[a], q[a])) return a;
  Dist excess(q.size());
  double total = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    excess[k] = std::max(0.0, q[k] - p[k]);
    total += excess[k];
  }
  if (!(total > 0)) return a;
  return static_cast<int>(rng.discrete(excess));
}

ConditionalOracle::ConditionalOracle(const SpinSystem& sys, const Pinning& base, long long state_cap)
    : sys_(&sys), base_(base) {
  validate_pinning(sys, base);
  if (is_tree(sys.graph()))
    tree_ = RootedTree::from_graph(sys.graph(), 0);
  else
    table_ = enumerate_gibbs(sys, base, state_cap);
}

GibbsTable ConditionalOracle::restrict(const Pinning& tau) const {
  std::vector<std::pair<int, int>> extra;
  for (int v = 0; v < tau.size(); ++v) {
    if (!tau.pinned(v)) continue;
    if (base_.pinned(v)) {
      if (base_.color(v) != tau.color(v)) throw InfeasibleError("conditioning contradicts the base pinning");
      continue;
    }
    extra.emplace_back(v, tau.color(v));
  }
  return condition(*table_, extra);
}

Dist ConditionalOracle::marginal(const Pinning& tau, int v) const {
  if (tree_) return exact_tree_marginals(*sys_, *tree_, tau).rows[v];
  return restrict(tau).marginal(v);
}

std::vector<int> ConditionalOracle::sample(const Pinning& tau, Rng& rng) const {
  if (tree_) return sample_tree(*sys_, *tree_, tau, rng);
  const GibbsTable t = restrict(tau);
  const auto s = t.sample(rng);
  return std::vector<int>(t.row(s), t.row(s) + t.n);
}

bool ConditionalOracle::feasible(const Pinning& tau) const {
  try {
    if (tree_)
      subtree_marginals(*sys_, *tree_, tau);
    else
      restrict(tau);
    return true;
  } catch (const InfeasibleError&) {
    return false;
  } catch (const DomainError&) {
    return false;
  }
}

namespace {

struct DepthExceeded {};

struct Coupler {
  const ConditionalOracle& oracle;
  const CouplingOptions& opt;
  Rng& rng;
  std::vector<CouplingEvent>& trace;

  std::vector<int> couple(const Pinning& tau, int u, int b, int c, const std::vector<int>& x,
                          int depth) {
    if (b == c) return x;
    if (depth > opt.depth_cap) throw DepthExceeded{};
    const Graph& g = oracle.system().graph();
    Pinning tau_c = tau;
    tau_c.set(u, c);
    std::vector<int> free_sphere;
    for (int v : sphere(g, u, opt.R))
      if (!tau.pinned(v)) free_sphere.push_back(v);
    if (free_sphere.empty()) {
      // the pinned sphere separates the ball from the rest
      const auto fresh = oracle.sample(tau_c, rng);
      auto y = x;
      for (int v : ball(g, u, opt.R)) y[v] = fresh[v];
      trace.push_back({u, depth, "ball"});
      return y;
    }
    const int v = free_sphere[rng.below(free_sphere.size())];
    const int b2 = x[v];
    Pinning tau_b = tau;
    tau_b.set(u, b);
    const Dist p = oracle.marginal(tau_b, v);
    const Dist q = oracle.marginal(tau_c, v);
    const int c2 = maximal_coupling_partner(p, q, b2, rng);
    Pinning tau_v = tau;
    tau_v.set(v, b2);
    if (c2 == b2) {
      trace.push_back({v, depth, "match"});
      return couple(tau_v, u, b, c, x, depth + 1);
    }
    Pinning middle = tau_c;
    middle.set(v, b2);
    if (!oracle.feasible(middle)) {
      Pinning target = tau_c;
      target.set(v, c2);
      trace.push_back({v, depth, "fresh"});
      return oracle.sample(target, rng);
    }
    trace.push_back({v, depth, "mismatch"});
    const auto z = couple(tau_v, u, b, c, x, depth + 1);
    return couple(tau_c, v, b2, c2, z, depth + 1);
  }
};

}  // namespace

CouplingOutcome local_couple(const ConditionalOracle& oracle, int u, int b, int c,
                                  const CouplingOptions& opt, std::uint64_t seed,
                                  std::uint64_t stream) {
  const Pinning& base = oracle.base();
  if (u < 0 || u >= base.size() || base.pinned(u)) throw DomainError("u must be a free vertex");
  if (opt.R < 1) throw ParameterError("R must be at least 1");
  Pinning tb = base, tc = base;
  tb.set(u, b);
  tc.set(u, c);
  if (!oracle.system().allowed(u, b) || !oracle.feasible(tb))
    throw InfeasibleError("color b is infeasible for u");
  if (!oracle.system().allowed(u, c) || !oracle.feasible(tc))
    throw InfeasibleError("color c is infeasible for u");
  Rng rng(seed, stream);
  CouplingOutcome out;
  out.x = oracle.sample(tb, rng);
  Coupler cp{oracle, opt, rng, out.trace};
  try {
    out.y = cp.couple(base, u, b, c, out.x, 0);
  } catch (const DepthExceeded&) {
    out.depth_exceeded = true;
    out.y = out.x;
    out.hamming = 0;
    return out;
  }
  for (int v = 0; v < base.size(); ++v)
    if (!base.pinned(v) && v != u) out.hamming += out.x[v] != out.y[v];
  return out;
}

CouplingOutcome local_couple(const SpinSystem& sys, const Pinning& pin, int u, int b, int c,
                                  int R, std::uint64_t seed, int depth_cap) {
  CouplingOptions opt;
  opt.R = R;
  opt.depth_cap = depth_cap;
  ConditionalOracle oracle(sys, pin, opt.state_cap);
  return local_couple(oracle, u, b, c, opt, seed, 0);
}

nlohmann::json CouplingSummary::to_json() const {
  return {{"trials", trials},
          {"completed", completed},
          {"discarded", discarded},
          {"mean_hamming", mean_hamming},
          {"stderr_hamming", stderr_hamming}};
}

CouplingSummary run_couplings(const ConditionalOracle& oracle, int u, int b, int c,
                              const CouplingOptions& opt, int trials, std::uint64_t seed,
                              int threads) {
  CouplingSummary s;
  s.trials = trials;
  s.outcomes.resize(trials);
  parallel_for(trials, threads, [&](long long t) {
    s.outcomes[t] = local_couple(oracle, u, b, c, opt, seed, static_cast<std::uint64_t>(t));
  });
  std::vector<double> h;
  for (const auto& o : s.outcomes) {
    if (o.depth_exceeded) {
      ++s.discarded;
      continue;
    }
    h.push_back(o.hamming);
  }
  s.completed = static_cast<int>(h.size());
  s.mean_hamming = mean(h);
  s.stderr_hamming = standard_error(h);
  return s;
}

std::vector<std::vector<double>> d_recursion_table(int k_max, int DeltaR, double eps) {
  if (k_max < 0 || DeltaR < 0) throw ParameterError("d_recursion needs nonnegative arguments");
  std::vector<std::vector<double>> D(k_max + 1, std::vector<double>(DeltaR + 1, DeltaR));
  for (int k = 1; k <= k_max; ++k) {
    double top = 0;
    for (double x : D[k - 1]) top = std::max(top, x);
    for (int l = 1; l <= DeltaR; ++l) D[k][l] = D[k - 1][l - 1] + eps / l * (top + 1.0);
  }
  return D;
}

double d_recursion(int k, int ell, int DeltaR, double eps) {
  if (ell > DeltaR) throw ParameterError("ell must not exceed DeltaR");
  return d_recursion_table(k, DeltaR, eps)[k][ell];
}

double harmonic(int n) {
  double h = 0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

double d_closed_bound(int ell, int DeltaR, double eps) {
  return (1.0 + 2.0 * eps * harmonic(ell)) * DeltaR;
}

nlohmann::json ParameterChoice::to_json() const {
  return {{"R", R},           {"K", K},
          {"girth", girth},   {"lhs", lhs},
          {"target", target}, {"verified", verified},
          {"verified_next_K", verified_next_K}};
}

namespace {

double condition_lhs(double C_sm, double C_infl, double delta, int Delta, int R, int K) {
  return 2.0 * C_sm * std::exp(K * std::log1p(-delta) + R * std::log(Delta)) +
         C_infl * std::pow(1.0 - delta, R);
}

}  // namespace

ParameterChoice parameter_search(double C_sm, double C_infl, double delta, int Delta, int search_cap) {
  if (!(C_sm > 0 && C_infl > 0)) throw ParameterError("constants must be positive");
  if (!(delta > 0 && delta < 1)) throw ParameterError("delta must lie in (0,1)");
  if (Delta < 2) throw ParameterError("Delta must be at least 2");
  const double lnD = std::log(static_cast<double>(Delta));
  const double lq = std::log1p(-delta);
  for (int R = 1; R <= search_cap; ++R) {
    const double target = 1.0 / (8.0 * R * lnD);
    const double room = target - C_infl * std::pow(1.0 - delta, R);
    if (room <= 0) continue;
    // 2 C_sm (1-delta)^K Delta^R <= room
    const double bound = (std::log(room) - std::log(2.0 * C_sm) - R * lnD) / lq;
    int K = std::max(R + 1, static_cast<int>(std::ceil(bound)) - 1);
    while (K <= search_cap && condition_lhs(C_sm, C_infl, delta, Delta, R, K) > target) ++K;
    if (K > search_cap) continue;
    ParameterChoice pc;
    pc.R = R;
    pc.K = K;
    pc.girth = 2 * K + 2;
    pc.target = target;
    pc.lhs = condition_lhs(C_sm, C_infl, delta, Delta, R, K);
    pc.verified = pc.lhs <= target;
    pc.verified_next_K = condition_lhs(C_sm, C_infl, delta, Delta, R, K + 1) <= target;
    return pc;
  }
  throw ParameterError("parameter search exceeded its cap");
}

}  // namespace spindecay
