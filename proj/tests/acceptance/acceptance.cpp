#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "spindecay/coupling.hpp"
#include "spindecay/decay.hpp"
#include "spindecay/gibbs.hpp"
#include "spindecay/glauber.hpp"
#include "spindecay/jacobian.hpp"
#include "spindecay/stats.hpp"
#include "spindecay/tree.hpp"
#include "support.hpp"

using namespace spindecay;
using support::max_abs_diff;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string sci(double x) { return fmt("%.3e", x); }

std::vector<int> iota_list(int q) {
  std::vector<int> v(q);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  Rng rng(101, 0);
  double worst = 0;
  long long runs = 0;
  auto compare = [&](const SpinSystem& sys, const Pinning& pin) {
    const auto tree = RootedTree::from_graph(sys.graph(), 0);
    const auto exact = exact_tree_marginals(sys, tree, pin);
    const auto table = enumerate_gibbs(sys, pin);
    const auto m = table.marginals();
    for (int v = 0; v < sys.n(); ++v) worst = std::max(worst, max_abs_diff(exact.rows[v], m[v]));
    ++runs;
  };
  for (int n = 1; n <= 9; ++n)
    for (const Graph& g : support::all_trees(n)) {
      for (int q = 2; q <= 4; ++q)
        for (int k = 0; k < 100; ++k) {
          ColoringInstance inst = ColoringInstance::full(g, q);
          if (k % 2) inst.lists = support::random_lists(n, q, 1, rng);
          const SpinSystem sys(inst);
          if (!check_pinning_feasible(sys, Pinning(n))) continue;
          compare(sys, k == 0 ? Pinning(n) : support::random_feasible_pinning(sys, rng, 0.4 * rng.uniform()));
        }
      for (int q = 2; q <= 3; ++q)
        for (double beta : {0.0, 0.3, 1.0}) {
          const SpinSystem sys(PottsInstance{g, q, beta});
          for (int k = 0; k < 100; ++k)
            compare(sys, k == 0 ? Pinning(n) : support::random_feasible_pinning(sys, rng, 0.4 * rng.uniform()));
        }
    }
  return {worst <= 1e-10, std::to_string(runs) + " tree/pinning pairs, max abs error " + sci(worst)};
}

// ---------------------------------------------------------------------------

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& fd) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-8);
  return (a - fd).cwiseAbs().maxCoeff() / scale;
}

Outcome jacobian_correctness() {
  const double h = 1e-6;
  double worst_plain = 0, worst_phi = 0;
  for (int family = 0; family < 2; ++family) {
    Rng rng(202, family);
    for (int t = 0; t < 100; ++t) {
      const int q = 3 + static_cast<int>(rng.below(4));
      const int d = 1 + static_cast<int>(rng.below(4));
      const bool potts = family == 1;
      const double beta = potts ? 0.9 * rng.uniform() : 0.0;
      const double theta = 1.0 - beta;
      const Potential pot = potts ? Potential::potts_model(beta) : Potential::coloring();
      std::vector<int> root_list = iota_list(q);
      if (!potts && rng.below(2)) {
        root_list = support::random_lists(1, q, 2, rng)[0];
      }
      std::vector<Dist> kids;
      for (int i = 0; i < d; ++i) kids.push_back(support::random_subdistribution(q, 0.45, rng));
      const auto plain = jacobian_plain(kids, root_list, theta);
      const auto phi = jacobian_phi(pot, kids, root_list);
      const auto& colors = plain.colors;
      const int k = static_cast<int>(colors.size());
      for (int i = 0; i < d; ++i) {
        Eigen::MatrixXd fd_plain(k, k), fd_phi(k, k);
        for (int cj = 0; cj < k; ++cj) {
          const int c = colors[cj];
          auto up = kids, down = kids;
          up[i][c] += h;
          down[i][c] -= h;
          const Dist gu = recursion_step(root_list, q, theta, up);
          const Dist gd = recursion_step(root_list, q, theta, down);
          auto mu = kids, md = kids;
          mu[i][c] = pot.inverse(pot.phi(kids[i][c]) + h);
          md[i][c] = pot.inverse(pot.phi(kids[i][c]) - h);
          const Dist hu = recursion_step(root_list, q, theta, mu);
          const Dist hd = recursion_step(root_list, q, theta, md);
          for (int bj = 0; bj < k; ++bj) {
            const int b = colors[bj];
            fd_plain(bj, cj) = (gu[b] - gd[b]) / (2 * h);
            fd_phi(bj, cj) = (pot.phi(hu[b]) - pot.phi(hd[b])) / (2 * h);
          }
        }
        worst_plain = std::max(worst_plain, relative_error(plain.blocks[i], fd_plain));
        worst_phi = std::max(worst_phi, relative_error(phi.blocks[i], fd_phi));
      }
    }
  }
  return {worst_plain <= 1e-5 && worst_phi <= 1e-5,
          "max relative error plain " + sci(worst_plain) + ", potential " + sci(worst_phi)};
}

// ---------------------------------------------------------------------------

Outcome contraction_delta_plus_3() {
  Outcome o;
  for (int Delta : {3, 4, 5}) {
    const auto rep = certify_contraction({Family::coloring, Delta + 3, Delta, 0.0}, Mode::strong, 10000, 303);
    const bool ok = rep.sampled_max_norm < 1.0 && rep.delta_hat > 0;
    o.pass = o.pass && ok;
    o.detail += "Delta=" + std::to_string(Delta) + " max " + fmt("%.5f", rep.sampled_max_norm) +
                " delta_hat " + fmt("%.5f", rep.delta_hat) + "; ";
  }
  return o;
}

Outcome contraction_unweighted() {
  const auto rep = certify_contraction({Family::coloring_unweighted, 18, 9, 0.0}, Mode::strong, 10000, 404);
  const double b = unweighted_bound_sq(18, 9.0);
  const bool value_ok = std::abs(b - std::exp(-0.625)) < 1e-15 && std::abs(b - 0.5353) < 5e-5;
  return {rep.bound_violations == 0 && value_ok,
          std::to_string(rep.bound_violations) + " violations over " + std::to_string(rep.samples) +
              " samples, max upper^2/bound " + fmt("%.5f", rep.max_bound_ratio) + ", bound(d=9) " +
              fmt("%.6f", b)};
}

// ---------------------------------------------------------------------------

Outcome inequality_suites() {
  const int N = 100000;
  std::map<std::string, long long> bad;
  Rng rng(505, 0);

  // capped children at q = d + gamma
  for (int t = 0; t < N; ++t) {
    const int q = 3 + static_cast<int>(rng.below(10));
    const int d = 1 + static_cast<int>(rng.below(q - 2));
    const double gamma = q - d;
    std::vector<Dist> kids;
    for (int i = 0; i < d; ++i) kids.push_back(support::random_subdistribution(q, 1.0 / gamma, rng, t % 2));
    const Dist g = recursion_step(iota_list(q), q, 1.0, kids);
    const double bound = capped_product_bound(q, gamma);
    for (int c = 0; c < q; ++c) {
      double s = 0;
      for (const auto& p : kids) s += p[c];
      if (g[c] * s > bound * (1 + 1e-12)) {
        ++bad["capped-product"];
        break;
      }
    }
  }

  // amortized marginal bound and the L2 bound share the setting
  for (int t = 0; t < N; ++t) {
    const double gamma = 2.0 + 3.0 * rng.uniform();
    const int d = 1 + static_cast<int>(rng.below(5));
    const int q = static_cast<int>(std::ceil(d + gamma)) + static_cast<int>(rng.below(4));
    std::vector<std::pair<int, int>> params;
    std::vector<double> zetas;
    std::vector<Dist> kids;
    for (int i = 0; i < d; ++i) {
      const int di = static_cast<int>(rng.below(5));
      const int qi = static_cast<int>(std::ceil(di + gamma)) + static_cast<int>(rng.below(4));
      params.emplace_back(qi, di);
      const auto we = weight_coloring(qi, di, gamma);
      zetas.push_back(we.zeta);
      kids.push_back(support::random_subdistribution(q, we.cap, rng, t % 2));
    }
    const auto list = iota_list(q);
    const Dist g = recursion_step(list, q, 1.0, kids);
    const double am = amortized_bound(params, q, gamma);
    for (int c = 0; c < q; ++c) {
      double s = 0;
      for (const auto& p : kids) s += p[c];
      if (g[c] * s > am * (1 + 1e-12)) {
        ++bad["amortized-marginal"];
        break;
      }
    }
    const auto jb = jacobian_phi(Potential::coloring(), kids, list);
    const double n2 = std::pow(spectral_norm_concat(jb.blocks), 2);
    if (n2 > l2_bound_formula(q, gamma, xi(gamma, d, q), zetas) * (1 + 1e-12)) ++bad["weighted-l2"];
  }

  // generic L2 bound on uncapped subdistributions
  for (int t = 0; t < N; ++t) {
    const int q = 2 + static_cast<int>(rng.below(6));
    const int d = 1 + static_cast<int>(rng.below(4));
    std::vector<Dist> kids;
    for (int i = 0; i < d; ++i) kids.push_back(support::random_subdistribution(q, 0.95, rng, t % 2));
    const auto list = iota_list(q);
    Dist g;
    try {
      g = recursion_step(list, q, 1.0, kids);
    } catch (const InfeasibleError&) {
      continue;
    }
    double inv = 0, prod = 0;
    for (int c = 0; c < q; ++c) {
      double s = 0;
      for (const auto& p : kids) s += p[c];
      inv = std::max(inv, 1.0 / ((1 - g[c]) * (1 - g[c])));
      prod = std::max(prod, g[c] * s);
    }
    const auto jb = jacobian_phi(Potential::coloring(), kids, list);
    if (jb.blocks.empty()) continue;
    const double n2 = std::pow(spectral_norm_concat(jb.blocks), 2);
    if (n2 > inv * prod * (1 + 1e-10)) ++bad["jacobian-l2"];
  }

  // product lower bound
  for (int t = 0; t < N; ++t) {
    const int k = 1 + static_cast<int>(rng.below(20));
    const double b = 1.0 / k + (1.0 - 1.0 / k) * rng.uniform();
    const Dist nu = support::random_subdistribution(k, b, rng, false);
    double s = 0, prod = 1;
    for (double x : nu) {
      s += x;
      prod *= 1 - x;
    }
    if (prod < std::pow(1 - b, s / b) * (1 - 1e-12) - 1e-15) ++bad["product-lower"];
  }

  // log-ratio inequalities
  for (int t = 0; t < N; ++t) {
    const double x = 1.5 * rng.uniform_pos() * (1 - 1e-12);
    const double f = entropy_f(x);
    if (!(f > 0) || f > 1 - std::exp(-x / 2) + 1e-14) ++bad["log-ratio-f"];
    const double y = 0.6 * rng.uniform_pos() * (1 - 1e-12);
    const double s = s_func(y);
    if (!(s > 0) || s > 1 - std::exp(-0.5 * y / (1 - y)) + 1e-14) ++bad["log-ratio-s"];
  }

  // 1/(1 - zeta) <= exp(xi / (2(q-1)))
  for (int t = 0; t < N; ++t) {
    const double gamma = 2.0 + 6.0 * rng.uniform();
    const int d = static_cast<int>(rng.below(20));
    const int q = std::max(3, static_cast<int>(std::ceil(d + gamma))) + static_cast<int>(rng.below(30));
    const auto we = weight_coloring(q, d, gamma);
    if (1.0 / (1.0 - we.zeta) > std::exp(we.xi / (2.0 * (q - 1))) * (1 + 1e-12)) ++bad["zeta-exponential"];
  }

  Outcome o;
  for (const char* name :
       {"capped-product", "amortized-marginal", "jacobian-l2", "weighted-l2", "product-lower", "log-ratio-f", "log-ratio-s", "zeta-exponential"}) {
    o.detail += std::string(name) + "=" + std::to_string(bad[name]) + " ";
    o.pass = o.pass && bad[name] == 0;
  }
  o.detail += "violations, 1e5 inputs each";
  return o;
}

// ---------------------------------------------------------------------------

struct LocalCounts {
  int q_v = 0;  // list colors not used by pinned neighbours
  int d_v = 0;  // free neighbours
  int deg = 0;
};

LocalCounts local_counts(const SpinSystem& sys, const Pinning& pin, int v) {
  LocalCounts lc;
  std::vector<char> blocked(sys.q(), 0);
  for (int x : sys.graph().neighbors(v)) {
    ++lc.deg;
    if (pin.pinned(x))
      blocked[pin.color(x)] = 1;
    else
      ++lc.d_v;
  }
  for (int c : sys.list(v)) lc.q_v += !blocked[c];
  return lc;
}

Outcome marginal_bounds() {
  Rng rng(606, 0);
  std::map<std::string, long long> bad;
  std::map<std::string, long long> checks;
  auto random_instance_tree = [&](int max_deg) {
    const int n = 2 + static_cast<int>(rng.below(11));
    return random_tree(n, max_deg, rng);
  };
  for (int t = 0; t < 500; ++t) {
    // one-level and lower bounds: colorings with q >= max degree + 2
    {
      const int Delta = 2 + static_cast<int>(rng.below(3));
      const Graph g = random_instance_tree(Delta);
      const int q = g.max_degree() + 2 + static_cast<int>(rng.below(3));
      const SpinSystem sys(ColoringInstance::full(g, q));
      const Pinning pin = support::random_feasible_pinning(sys, rng, 0.5 * rng.uniform());
      const auto m = exact_tree_marginals(sys, RootedTree::from_graph(g, 0), pin);
      double gamma = 1e9;
      for (int v = 0; v < sys.n(); ++v)
        if (!pin.pinned(v)) {
          const auto lc = local_counts(sys, pin, v);
          gamma = std::min(gamma, static_cast<double>(lc.q_v - lc.d_v));
        }
      for (int v = 0; v < sys.n(); ++v) {
        if (pin.pinned(v)) continue;
        const auto lc = local_counts(sys, pin, v);
        const double one = bound_one_level(lc.q_v - lc.d_v);
        const double two = bound_two_level_cap(lc.q_v, lc.d_v, gamma);
        const double low = bound_lower(lc.q_v, gamma, lc.d_v);
        std::vector<char> blocked(q, 0);
        for (int x : g.neighbors(v))
          if (pin.pinned(x)) blocked[pin.color(x)] = 1;
        for (int c = 0; c < q; ++c) {
          if (m.rows[v][c] > one + 1e-12) ++bad["one-level"];
          if (m.rows[v][c] > two + 1e-12) ++bad["two-level"];
          if (!blocked[c] && m.rows[v][c] < low - 1e-12) ++bad["lower"];
        }
        checks["one-level"] += 1;
      }
    }
    // Potts two-level bound with arbitrary pinnings
    {
      const int Delta = 2 + static_cast<int>(rng.below(3));
      const Graph g = random_instance_tree(Delta);
      const double beta = 0.05 + 0.9 * rng.uniform();
      const int D = g.max_degree();
      int q = 2 + static_cast<int>(rng.below(6));
      while (q <= (1 - beta) * D) ++q;
      const SpinSystem sys(PottsInstance{g, q, beta});
      const Pinning pin = support::random_pinning(sys, rng, 0.5 * rng.uniform());
      const auto m = exact_tree_marginals(sys, RootedTree::from_graph(g, 0), pin);
      for (int v = 0; v < sys.n(); ++v) {
        if (pin.pinned(v)) continue;
        const auto lc = local_counts(sys, pin, v);
        const double b = bound_potts_two_level(q, beta, lc.deg, lc.d_v);
        for (int c = 0; c < q; ++c)
          if (m.rows[v][c] > b + 1e-12) ++bad["potts-two-level"];
      }
    }
  }
  Outcome o;
  for (const char* name : {"one-level", "two-level", "lower", "potts-two-level"}) {
    o.detail += std::string(name) + "=" + std::to_string(bad[name]) + " ";
    o.pass = o.pass && bad[name] == 0;
  }
  o.detail += "violations over 500 pinned trees each";
  return o;
}

// ---------------------------------------------------------------------------

Outcome influence_identities() {
  Rng rng(707, 0);
  double row_sum = 0, factor = 0, corrected = 0, literal_unpinned = 0, literal_pinned = 0;
  int trees = 0, forced = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 3 + static_cast<int>(rng.below(6));
    const Graph g = random_tree(n, 3, rng);
    const int q = 3 + static_cast<int>(rng.below(2));
    const bool potts = t % 3 == 2;
    const SpinSystem sys = potts ? SpinSystem(PottsInstance{g, q, 0.4 * rng.uniform()})
                                 : SpinSystem(ColoringInstance::full(g, q));
    const Pinning pin = t % 2 ? support::random_feasible_pinning(sys, rng, 0.3) : Pinning(n);
    const GibbsTable table = enumerate_gibbs(sys, pin);
    if (table.free_vertices.size() < 2) continue;
    ++trees;
    const InfluenceMatrix m = influence_matrix(table);
    row_sum = std::max(row_sum, m.entries.rowwise().sum().cwiseAbs().maxCoeff());
    const auto& fr = table.free_vertices;
    for (int u : fr)
      for (int w : fr) {
        if (u == w) continue;
        const auto du = distances(g, u);
        const auto dw = distances(g, w);
        for (int v : fr) {
          if (v == u || v == w || du[v] + dw[v] != du[w]) continue;
          const Eigen::MatrixXd lhs = influence_block(m, u, w);
          const Eigen::MatrixXd rhs = influence_block(m, u, v) * influence_block(m, v, w);
          factor = std::max(factor, (lhs - rhs).cwiseAbs().maxCoeff());
        }
      }
    const auto exact = exact_tree_marginals(sys, RootedTree::from_graph(g, 0), pin);
    for (int r : fr)
      for (int u : g.neighbors(r)) {
        if (pin.pinned(u)) continue;
        if (*std::max_element(exact.rows[r].begin(), exact.rows[r].end()) > 1 - 1e-12) {
          ++forced;
          continue;
        }
        const auto chk = infl_jacobian_check(sys, pin, r, u);
        corrected = std::max(corrected, chk.corrected_residual);
        if (pin.count() == 0)
          literal_unpinned = std::max(literal_unpinned, chk.literal_residual);
        else
          literal_pinned = std::max(literal_pinned, chk.literal_residual);
      }
  }
  Graph edge(2);
  edge.add_edge(0, 1);
  const double si = spectral_independence(SpinSystem(ColoringInstance::full(edge, 3)), Pinning(2));
  const bool pass = row_sum <= 1e-12 && factor <= 1e-12 && corrected <= 1e-8 && literal_unpinned <= 1e-8 &&
                    std::abs(si - 0.5) <= 1e-10;
  return {pass, std::to_string(trees) + " trees: row sums " + sci(row_sum) + ", factorization " + sci(factor) +
                    ", influence-Jacobian " + sci(corrected) + " (projected form), " + sci(literal_unpinned) +
                    " (printed form, unpinned), printed form on pinned trees " + sci(literal_pinned) +
                    " (recorded), " + std::to_string(forced) +
                    " forced roots skipped, edge q=3 lambda_max " + fmt("%.12f", si)};
}

// ---------------------------------------------------------------------------

Outcome glauber() {
  Rng rng(808, 0);
  double worst = 0;
  int instances = 0, attempts = 0;
  while (instances < 20 && attempts < 500) {
    ++attempts;
    Graph g;
    switch (instances % 4) {
      case 0: g = random_tree(4 + static_cast<int>(rng.below(4)), 3, rng); break;
      case 1: g = make_cycle(4 + static_cast<int>(rng.below(3))); break;
      case 2: g = make_path(3 + static_cast<int>(rng.below(4))); break;
      default: g = generate_girth_graph(6, 3, 4, rng()); break;
    }
    const int q = 3 + static_cast<int>(rng.below(3));
    const bool potts = instances % 3 == 1;
    const SpinSystem sys = potts ? SpinSystem(PottsInstance{g, q, 0.1 + 0.8 * rng.uniform()})
                                 : SpinSystem(ColoringInstance::full(g, q));
    const Pinning pin = support::random_feasible_pinning(sys, rng, 0.2);
    try {
      const auto tm = transition_matrix(sys, pin, 5000);
      worst = std::max(worst, stationarity_error(tm));
      ++instances;
    } catch (const DomainError&) {
    }
  }
  // chain law on small instances
  struct Case {
    Graph g;
    SpinSystem sys;
  };
  std::vector<std::pair<Graph, int>> shapes{{make_path(3), 4}, {make_cycle(4), 4}, {make_cycle(5), 4},
                                            {make_dary_tree(3, 1), 5}};
  int passed = 0, total = 0;
  std::string stats;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& [g, q] = shapes[i];
    const SpinSystem col(ColoringInstance::full(g, q));
    const SpinSystem pot(PottsInstance{g, q - 1, 0.4});
    for (const SpinSystem* sys : {&col, &pot}) {
      const auto rep = chain_law_check(*sys, Pinning(g.vertex_count()), 20000, 0, 900 + i);
      ++total;
      passed += rep.chi.pass;
      stats += fmt("%.1f", rep.chi.statistic) + "/" + fmt("%.1f", rep.chi.critical) + " ";
    }
  }
  return {instances == 20 && worst <= 1e-12 && passed == total,
          std::to_string(instances) + " instances, max |piP - pi| " + sci(worst) + "; chi-square " +
              std::to_string(passed) + "/" + std::to_string(total) + " within 3 sigma (stat/crit " + stats + ")"};
}

// ---------------------------------------------------------------------------

std::vector<int> range(int a, int b) {
  std::vector<int> v;
  for (int i = a; i <= b; ++i) v.push_back(i);
  return v;
}

Outcome decay_dominance() {
  Outcome o;
  const auto cert = certify_contraction({Family::coloring, 6, 3, 0.0}, Mode::strong, 10000, 909);
  const double dh = cert.delta_hat;
  if (!(dh > 0)) return {false, "certifier returned delta_hat <= 0"};
  const auto cst = constants_for_family({Family::coloring, 6, 3, 0.0}, dh);
  const Graph tree = make_dary_tree(2, 12);
  const SpinSystem sys(ColoringInstance::full(tree, 6));
  const auto depths = range(1, 12);
  SearchOptions opt;
  opt.seed = 9;
  const auto ssm = ssm_profile(sys, 0, depths, opt);
  const auto tid = tid_profile(sys, Pinning(sys.n()), 0, depths);
  auto dominated = [&](const DecayProfile& p, double C, double delta) {
    for (std::size_t i = 0; i < p.values.size(); ++i)
      if (p.values[i] > C * std::pow(1 - delta, p.distances[i])) return false;
    return true;
  };
  const bool ssm_ok = ssm.strictly_decreasing() && dominated(ssm, cst.C_SM, dh) && ssm.fitted && ssm.fitted_rate < 1;
  const bool tid_ok = tid.strictly_decreasing() && dominated(tid, cst.C_INFL, dh) && tid.fitted && tid.fitted_rate < 1;

  const auto pcert = certify_contraction({Family::potts, 7, 3, 0.25}, Mode::strong, 10000, 910);
  const Graph ptree = make_dary_tree(2, 12);
  const auto wsm = wsm_profile_potts(ptree, 7, 0.25, 0, depths, opt);
  bool wsm_ok = wsm.strictly_decreasing() && wsm.fitted && wsm.fitted_rate < 1;
  std::string wsm_dom = "not checked (Potts delta_hat <= 0)";
  if (pcert.delta_hat > 0) {
    const auto pc = constants_for_family({Family::potts, 7, 3, 0.25}, pcert.delta_hat);
    const bool dom = dominated(wsm, pc.C_SM, pcert.delta_hat);
    wsm_ok = wsm_ok && dom;
    wsm_dom = dom ? "dominated" : "NOT dominated";
  }
  o.pass = ssm_ok && tid_ok && wsm_ok;
  o.detail = "delta_hat " + fmt("%.4f", dh) + ", C_SM " + fmt("%.3f", cst.C_SM) + ", C_INFL " +
             fmt("%.3f", cst.C_INFL) + "; SSM rate " + fmt("%.4f", ssm.fitted_rate) + " (l=12: " +
             sci(ssm.values.back()) + "), TID rate " + fmt("%.4f", tid.fitted_rate) + " (l=12: " +
             sci(tid.values.back()) + "); Potts WSM rate " + fmt("%.4f", wsm.fitted_rate) + ", " + wsm_dom +
             (ssm_ok ? "" : " [SSM fails]") + (tid_ok ? "" : " [TID fails]") + (wsm_ok ? "" : " [WSM fails]");
  return o;
}

// ---------------------------------------------------------------------------

Outcome one_step() {
  const auto cert = certify_contraction({Family::coloring, 6, 3, 0.0}, Mode::strong, 10000, 909);
  const auto rep = one_step_contraction(6, 3, 1000, cert.delta_hat, 1010);
  return {rep.violations == 0, std::to_string(rep.violations) + " violations over 1000 pinning pairs, max ratio " +
                                   fmt("%.4f", rep.max_ratio) + " vs 1 - delta_hat " +
                                   fmt("%.4f", 1 - cert.delta_hat)};
}

// ---------------------------------------------------------------------------

std::string key_of(const std::vector<int>& x) { return std::string(x.begin(), x.end()); }

Outcome coupling() {
  struct Case {
    Graph g;
    int q;
    std::map<int, int> pins;
    int u, b, c, R;
  };
  std::vector<Case> cases;
  cases.push_back({make_path(5), 3, {}, 0, 0, 1, 2});
  cases.push_back({make_cycle(6), 4, {}, 0, 0, 1, 1});
  cases.push_back({make_dary_tree(2, 2), 4, {{3, 0}}, 0, 1, 2, 1});
  cases.push_back({make_cycle(5), 4, {{2, 3}}, 0, 0, 2, 2});
  int law_pass = 0, law_total = 0, w1_pass = 0;
  std::string detail;
  const int trials = 20000;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& cs = cases[i];
    const SpinSystem sys(ColoringInstance::full(cs.g, cs.q));
    const Pinning pin = Pinning::from_map(cs.g.vertex_count(), cs.pins);
    ConditionalOracle oracle(sys, pin);
    CouplingOptions opt;
    opt.R = cs.R;
    const auto summary = run_couplings(oracle, cs.u, cs.b, cs.c, opt, trials, 1100 + i);
    const GibbsTable full = enumerate_gibbs(sys, pin);
    const GibbsTable tb = condition(full, cs.u, cs.b);
    const GibbsTable tc = condition(full, cs.u, cs.c);
    for (int side = 0; side < 2; ++side) {
      const GibbsTable& t = side == 0 ? tb : tc;
      std::unordered_map<std::string, int> index;
      for (std::size_t s = 0; s < t.size(); ++s)
        index.emplace(key_of(std::vector<int>(t.row(s), t.row(s) + t.n)), static_cast<int>(s));
      std::vector<long long> counts(t.size(), 0);
      for (const auto& out : summary.outcomes)
        if (!out.depth_exceeded) ++counts[index.at(key_of(side == 0 ? out.x : out.y))];
      const auto chi = chi_square_test(counts, t.prob);
      ++law_total;
      law_pass += chi.pass;
    }
    const auto w1 = w1_hamming(tb, tc);
    const bool ok = summary.mean_hamming >= w1.exact - 3 * summary.stderr_hamming;
    w1_pass += ok;
    detail += fmt("%.3f", summary.mean_hamming) + ">=" + fmt("%.3f", w1.exact) + " ";
  }
  double worst = -1e9;
  for (int Delta : {3, 4})
    for (int R : {2, 3}) {
      const int DR = static_cast<int>(std::lround(std::pow(Delta, R)));
      const double eps = 1.0 / (8.0 * R * std::log(Delta));
      const auto table = d_recursion_table(200, DR, eps);
      for (int k = 0; k <= 200; ++k)
        for (int l = 0; l <= DR; ++l) worst = std::max(worst, table[k][l] - d_closed_bound(l, DR, eps));
    }
  const bool pass = law_pass == law_total && w1_pass == static_cast<int>(cases.size()) && worst <= 1e-9;
  return {pass, "law chi-square " + std::to_string(law_pass) + "/" + std::to_string(law_total) +
                    "; mean Hamming vs exact W1 " + detail + "; max D - closed bound " + sci(worst)};
}

// ---------------------------------------------------------------------------

Outcome wasserstein_sandwich() {
  Rng rng(1212, 0);
  int done = 0, bad = 0, attempts = 0;
  while (done < 100 && attempts < 2000) {
    ++attempts;
    Graph g;
    switch (attempts % 3) {
      case 0: g = random_tree(3 + static_cast<int>(rng.below(4)), 3, rng); break;
      case 1: g = make_cycle(3 + static_cast<int>(rng.below(4))); break;
      default: g = generate_girth_graph(6, 3, 3, rng()); break;
    }
    const int q = 3 + static_cast<int>(rng.below(2));
    const SpinSystem sys = attempts % 2 ? SpinSystem(ColoringInstance::full(g, q))
                                        : SpinSystem(PottsInstance{g, q, 0.6 * rng.uniform()});
    const Pinning pin = support::random_feasible_pinning(sys, rng, 0.2);
    GibbsTable t;
    try {
      t = enumerate_gibbs(sys, pin);
    } catch (const DomainError&) {
      continue;
    }
    if (t.free_vertices.size() < 2) continue;
    const int u = t.free_vertices[rng.below(t.free_vertices.size())];
    const Dist mu = t.marginal(u);
    std::vector<int> colors;
    for (int c = 0; c < q; ++c)
      if (mu[c] > 0) colors.push_back(c);
    if (colors.size() < 2) continue;
    const int b = colors[rng.below(colors.size())];
    int c = b;
    while (c == b) c = colors[rng.below(colors.size())];
    const auto r = w1_hamming(condition(t, u, b), condition(t, u, c));
    if (!r.exact_computed || r.lower > r.exact + 1e-12 || r.exact > r.upper + 1e-12) ++bad;
    ++done;
  }
  Graph edge(2);
  edge.add_edge(0, 1);
  const auto e = enumerate_gibbs(SpinSystem(ColoringInstance::full(edge, 3)), Pinning(2));
  const auto r = w1_hamming(condition(e, 0, 0), condition(e, 0, 1));
  const bool edge_ok = std::abs(r.exact - 0.5) <= 1e-12;
  return {done == 100 && bad == 0 && edge_ok, std::to_string(bad) + " sandwich violations over " +
                                                   std::to_string(done) + " instances; edge q=3 exact W1 " +
                                                   fmt("%.12f", r.exact)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "Jacobian correctness", jacobian_correctness},
      {3, "contraction at q = Delta + 3", contraction_delta_plus_3},
      {4, "contraction at q = Delta + 3 sqrt(Delta)", contraction_unweighted},
      {5, "inequality suites", inequality_suites},
      {6, "marginal bounds", marginal_bounds},
      {7, "influence identities", influence_identities},
      {8, "Glauber stationarity and chain law", glauber},
      {9, "decay dominance", decay_dominance},
      {10, "one-step contraction", one_step},
      {11, "coupling", coupling},
      {12, "Wasserstein sandwich", wasserstein_sandwich},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
