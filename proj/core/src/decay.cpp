#include "spindecay/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spindecay/errors.hpp"
#include "spindecay/parallel.hpp"
#include "spindecay/stats.hpp"

namespace spindecay {

bool DecayProfile::strictly_decreasing() const {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] < values[i - 1])) return false;
  return true;
}

nlohmann::json DecayProfile::to_json() const {
  nlohmann::json j{{"kind", kind},
                   {"distances", distances},
                   {"values", values},
                   {"modes", modes},
                   {"fitted", fitted}};
  if (fitted) {
    j["fitted_rate"] = fitted_rate;
    j["fit_residual"] = fit_residual;
  }
  return j;
}

std::string DecayProfile::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "distance,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) os << distances[i] << ',' << values[i] << '\n';
  return os.str();
}

std::pair<double, double> fit_rate(const std::vector<int>& distances, const std::vector<double>& values) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < values.size() && i < distances.size(); ++i)
    if (values[i] > 0) {
      x.push_back(distances[i]);
      y.push_back(std::log(values[i]));
    }
  if (x.size() < 3) throw ParameterError("fit needs at least three positive values");
  const Fit f = least_squares(x, y);
  return {std::exp(f.slope), f.residual};
}

SearchStrategy parse_strategy(const std::string& s) {
  if (s == "auto") return SearchStrategy::automatic;
  if (s == "exact") return SearchStrategy::exact;
  if (s == "heuristic") return SearchStrategy::heuristic;
  throw ParameterError("unknown strategy: " + s);
}

namespace {

// Subtree marginals of the tree cut at a given depth, with the sphere pinned.
class SphereEvaluator {
 public:
  SphereEvaluator(const SpinSystem& sys, const RootedTree& tree, int depth)
      : sys_(sys), tree_(tree), sub_(tree.size()) {
    for (int v : tree.order) {
      if (tree.depth[v] == depth) leaves_.push_back(v);
      if (tree.depth[v] < depth) inner_.push_back(v);
    }
    std::reverse(inner_.begin(), inner_.end());
    colors_.assign(leaves_.size(), -1);
  }

  const std::vector<int>& leaves() const { return leaves_; }
  const std::vector<int>& colors() const { return colors_; }

  void assign(const std::vector<int>& colors) {
    colors_ = colors;
    for (std::size_t k = 0; k < leaves_.size(); ++k) sub_[leaves_[k]] = point(colors_[k]);
    for (int v : inner_) recompute(v);
  }

  void set(std::size_t k, int c) {
    colors_[k] = c;
    int v = leaves_[k];
    sub_[v] = point(c);
    while (tree_.parent[v] >= 0) {
      v = tree_.parent[v];
      recompute(v);
    }
  }

  const Dist& root() const { return sub_[tree_.root]; }

 private:
  Dist point(int c) const {
    Dist d(sys_.q(), 0.0);
    d[c] = 1.0;
    return d;
  }

  void recompute(int v) {
    kids_.clear();
    for (int c : tree_.children[v]) kids_.push_back(sub_[c]);
    sub_[v] = recursion_step(sys_.list(v), sys_.q(), sys_.theta(), kids_);
  }

  const SpinSystem& sys_;
  const RootedTree& tree_;
  std::vector<Dist> sub_;
  std::vector<int> leaves_;
  std::vector<int> inner_;
  std::vector<int> colors_;
  std::vector<Dist> kids_;
};

}  // namespace

double sphere_pair_max(const SpinSystem& sys, const RootedTree& tree, int depth,
                       const SearchOptions& opt, std::string* mode) {
  auto set_mode = [&](const char* m) {
    if (mode) *mode = m;
  };
  if (depth == 0) {
    set_mode("point");
    return sys.list(tree.root).size() >= 2 ? 1.0 : 0.0;
  }
  if (depth > tree.height()) {
    set_mode("empty");
    return 0.0;
  }
  SphereEvaluator a(sys, tree, depth), b(sys, tree, depth);
  const auto& leaves = a.leaves();
  double log_count = 0;
  for (int v : leaves) log_count += std::log(static_cast<double>(sys.list(v).size()));
  const bool small = 2.0 * log_count <= std::log(opt.exact_pair_cap) + 1e-9;
  if (opt.strategy == SearchStrategy::exact && !small)
    throw ParameterError("exact strategy infeasible: too many sphere pinning pairs");
  const bool exact = opt.strategy == SearchStrategy::exact ||
                     (opt.strategy == SearchStrategy::automatic && small);

  if (exact) {
    set_mode("exact");
    std::vector<std::size_t> digit(leaves.size(), 0);
    std::vector<int> colors(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) colors[k] = sys.list(leaves[k])[0];
    std::vector<Dist> roots;
    bool have = false;
    for (;;) {
      try {
        if (!have) {
          a.assign(colors);
          have = true;
        }
        roots.push_back(a.root());
      } catch (const InfeasibleError&) {
        have = false;
      }
      std::size_t k = 0;
      for (; k < leaves.size(); ++k) {
        const auto& lst = sys.list(leaves[k]);
        digit[k] = (digit[k] + 1) % lst.size();
        colors[k] = lst[digit[k]];
        if (have) {
          try {
            a.set(k, colors[k]);
          } catch (const InfeasibleError&) {
            have = false;
          }
        }
        if (digit[k] != 0) break;
      }
      if (k == leaves.size()) break;
    }
    double best = 0;
    for (std::size_t i = 0; i < roots.size(); ++i)
      for (std::size_t j = i + 1; j < roots.size(); ++j) best = std::max(best, tv_distance(roots[i], roots[j]));
    return best;
  }

  set_mode("heuristic");
  Rng rng(opt.seed, static_cast<std::uint64_t>(depth));
  double best = -1;
  std::vector<int> best_a, best_b;
  auto consider = [&](const std::vector<int>& ca, const std::vector<int>& cb) {
    try {
      a.assign(ca);
      b.assign(cb);
    } catch (const InfeasibleError&) {
      return;
    }
    const double tv = tv_distance(a.root(), b.root());
    if (tv > best) {
      best = tv;
      best_a = ca;
      best_b = cb;
    }
  };
  auto mono = [&](int c) {
    std::vector<int> out(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k)
      out[k] = sys.allowed(leaves[k], c) ? c : sys.list(leaves[k])[0];
    return out;
  };
  for (int c1 = 0; c1 < sys.q(); ++c1)
    for (int c2 = c1 + 1; c2 < sys.q(); ++c2) consider(mono(c1), mono(c2));
  auto random_pinning = [&]() {
    std::vector<int> out(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      const auto& lst = sys.list(leaves[k]);
      out[k] = lst[rng.below(lst.size())];
    }
    return out;
  };
  for (int i = 0; i < opt.random_pairs; ++i) {
    auto ca = random_pinning();
    auto cb = random_pinning();
    consider(ca, cb);
  }
  if (best < 0) return 0.0;
  a.assign(best_a);
  b.assign(best_b);
  const long long rounds =
      opt.flip_rounds > 0 ? opt.flip_rounds : std::min<long long>(20LL * leaves.size(), 20000);
  for (long long i = 0; i < rounds; ++i) {
    SphereEvaluator& side = rng.below(2) ? b : a;
    const std::size_t k = rng.below(leaves.size());
    const auto& lst = sys.list(leaves[k]);
    const int c = lst[rng.below(lst.size())];
    const int old = side.colors()[k];
    if (c == old) continue;
    try {
      side.set(k, c);
    } catch (const InfeasibleError&) {
      side.set(k, old);
      continue;
    }
    const double tv = tv_distance(a.root(), b.root());
    if (tv > best)
      best = tv;
    else
      side.set(k, old);
  }
  return best;
}

namespace {

void finish_fit(DecayProfile& p) {
  try {
    auto [rate, res] = fit_rate(p.distances, p.values);
    p.fitted_rate = rate;
    p.fit_residual = res;
    p.fitted = true;
  } catch (const ParameterError&) {
    p.fitted = false;
  }
}

DecayProfile sphere_profile(const SpinSystem& sys, int r, const std::vector<int>& depths,
                            const SearchOptions& opt, const char* kind) {
  if (!is_tree(sys.graph())) throw DomainError("sphere profiles need a tree");
  const RootedTree tree = RootedTree::from_graph(sys.graph(), r);
  DecayProfile p;
  p.kind = kind;
  p.distances = depths;
  p.values.assign(depths.size(), 0.0);
  p.modes.assign(depths.size(), "");
  SearchOptions inner = opt;
  inner.threads = 1;
  parallel_for(static_cast<long long>(depths.size()), opt.threads, [&](long long i) {
    p.values[i] = sphere_pair_max(sys, tree, depths[i], inner, &p.modes[i]);
  });
  finish_fit(p);
  return p;
}

}  // namespace

DecayProfile ssm_profile(const SpinSystem& sys, int r, const std::vector<int>& depths,
                         const SearchOptions& opt) {
  return sphere_profile(sys, r, depths, opt, "ssm");
}

DecayProfile wsm_profile_potts(const Graph& tree, int q, double beta, int r,
                               const std::vector<int>& depths, const SearchOptions& opt) {
  PottsInstance inst{tree, q, beta};
  return sphere_profile(SpinSystem(inst), r, depths, opt, "wsm");
}

DecayProfile tid_profile(const SpinSystem& sys, const Pinning& pin, int u,
                         const std::vector<int>& depths, long long state_cap) {
  if (pin.pinned(u)) throw DomainError("u must be free");
  DecayProfile p;
  p.kind = "tid";
  p.distances = depths;
  const Graph& g = sys.graph();
  if (is_tree(g)) {
    const RootedTree tree = RootedTree::from_graph(g, u);
    const auto base = exact_tree_marginals(sys, tree, pin);
    std::vector<int> colors;
    for (int c = 0; c < sys.q(); ++c)
      if (base.rows[u][c] > 0) colors.push_back(c);
    std::vector<std::vector<Dist>> cond(sys.q());
    for (int b : colors) {
      Pinning pb = pin;
      pb.set(u, b);
      cond[b] = exact_tree_marginals(sys, tree, pb).rows;
    }
    for (int l : depths) {
      double best = 0;
      const auto sph = sphere(g, u, l);
      for (std::size_t i = 0; i < colors.size(); ++i)
        for (std::size_t j = i + 1; j < colors.size(); ++j) {
          double s = 0;
          for (int v : sph)
            if (!pin.pinned(v) && v != u) s += tv_distance(cond[colors[i]][v], cond[colors[j]][v]);
          best = std::max(best, s);
        }
      p.values.push_back(best);
      p.modes.push_back("exact");
    }
  } else {
    const GibbsTable t = enumerate_gibbs(sys, pin, state_cap);
    for (int l : depths) {
      p.values.push_back(influence_decay_at_R(t, u, l, g));
      p.modes.push_back("exact");
    }
  }
  finish_fit(p);
  return p;
}

nlohmann::json ConstantsReport::to_json() const {
  return {{"C_SM", C_SM},
          {"C_SI", C_SI},
          {"C_INFL", C_INFL},
          {"C_SM_root", C_SM_root},
          {"delta_used", delta_used},
          {"w_max", w_max},
          {"w_min", w_min},
          {"lower_marginal", lower_marginal},
          {"upper_marginal", upper_marginal},
          {"regime", regime},
          {"meta", meta}};
}

ConstantsReport constants_report(double w_max, double w_min, double lower_marginal,
                                 double upper_marginal, double delta, double q,
                                 const Potential& pot) {
  if (!(delta > 0 && delta < 1)) throw ParameterError("delta must lie in (0,1)");
  if (!(lower_marginal > 0 && upper_marginal > 0 && upper_marginal < 1))
    throw ParameterError("marginal bounds must be positive");
  if (!(w_min > 0 && w_max >= w_min)) throw ParameterError("weights must be positive");
  ConstantsReport r;
  r.w_max = w_max;
  r.w_min = w_min;
  r.lower_marginal = lower_marginal;
  r.upper_marginal = upper_marginal;
  r.delta_used = delta;
  const double ratio = pot.deriv(lower_marginal) / pot.deriv(upper_marginal);
  r.C_SM = std::sqrt(q) / (1.0 - delta) * w_max * ratio / w_min;
  r.C_SI = w_max * upper_marginal * ratio / (w_min * lower_marginal);
  r.C_INFL = std::sqrt(q) * r.C_SI;
  r.C_SM_root = 17.0 / (w_min * (1.0 - delta)) * r.C_SM;
  return r;
}

ConstantsReport constants_for_family(const FamilySpec& spec, double delta) {
  const int q = spec.q, Delta = spec.Delta;
  double w_max = 1, w_min = 1, lower = 0, upper = 0;
  Potential pot = Potential::coloring();
  std::string regime;
  if (spec.family == Family::potts) {
    pot = Potential::potts_model(spec.beta);
    w_max = 0;
    w_min = std::numeric_limits<double>::infinity();
    for (int D = 0; D < Delta; ++D) {
      const auto e = weight_potts(q, spec.beta, D);
      w_max = std::max(w_max, e.w);
      w_min = std::min(w_min, e.w);
    }
    for (int D = 0; D <= Delta; ++D) upper = std::max(upper, bound_potts_two_level(q, spec.beta, D, D));
    const double bd = std::pow(spec.beta, Delta);
    lower = bd / (bd + q - 1.0);
    regime = "potts";
  } else {
    const double gamma_marg = q - Delta;
    if (gamma_marg < 2) throw ParameterError("constants need q - Delta >= 2");
    for (int j = 0; j <= Delta; ++j)
      for (int d = 0; d <= Delta - j; ++d)
        if (q - j >= 2) upper = std::max(upper, bound_two_level_cap(q - j, d, gamma_marg));
    lower = bound_lower(q, gamma_marg, Delta);
    if (spec.family == Family::coloring) {
      w_max = 0;
      w_min = std::numeric_limits<double>::infinity();
      for (int D = 0; D < Delta; ++D)
        for (int d = 0; d <= D; ++d)
          for (int qi = q - (D - d); qi <= q; ++qi) {
            const auto e = weight_coloring(qi, d, 4.0);
            w_max = std::max(w_max, e.w);
            w_min = std::min(w_min, e.w);
          }
      regime = "coloring_weighted";
    } else {
      upper = std::max(upper, 1.0 / (q - Delta));
      regime = "coloring_unweighted";
    }
  }
  auto r = constants_report(w_max, w_min, lower, upper, delta, q, pot);
  r.regime = regime;
  r.meta = {{"family", family_name(spec.family)}, {"q", q}, {"Delta", Delta}, {"beta", spec.beta}};
  return r;
}

nlohmann::json EpsDeltaConstants::to_json() const {
  return {{"eps", eps},
          {"Delta", Delta},
          {"q", q},
          {"rate", rate},
          {"delta", delta},
          {"upper_marginal", upper_marginal},
          {"lower_marginal", lower_marginal},
          {"C_SM", C_SM},
          {"C_SM_closed", C_SM_closed},
          {"C_INFL", C_INFL},
          {"C_INFL_closed", C_INFL_closed},
          {"in_regime", in_regime}};
}

EpsDeltaConstants eps_delta_constants(double eps, int Delta) {
  if (!(eps > 0 && eps < 1)) throw ParameterError("eps must lie in (0,1)");
  EpsDeltaConstants c;
  c.eps = eps;
  c.Delta = Delta;
  c.q = (1.0 + eps) * Delta;
  c.in_regime = Delta >= 7.0 / (eps * eps);
  c.rate = eps_delta_rate(eps);
  c.delta = 1.0 - c.rate;
  const double ed = eps * Delta;
  if (ed <= 1) throw ParameterError("eps * Delta must exceed 1");
  c.upper_marginal = 1.0 / ed;
  c.lower_marginal = std::pow(1.0 - 1.0 / ed, Delta) / c.q;
  const Potential pot = Potential::coloring();
  const double ratio = pot.deriv(c.lower_marginal) / pot.deriv(c.upper_marginal);
  c.C_SM = std::sqrt(c.q) / c.rate * ratio;
  c.C_INFL = std::sqrt(c.q) * c.upper_marginal * ratio / c.lower_marginal;
  c.C_SM_closed = 2.0 * c.q * std::sqrt(1.0 / ed) * std::exp(1.0 / eps + eps / 4.0);
  c.C_INFL_closed = std::pow(c.q, 3) / (std::pow(ed, 1.5) * (c.q - 1.0)) * std::exp(3.0 / eps);
  return c;
}

nlohmann::json OneStepReport::to_json() const {
  return {{"trials", trials}, {"violations", violations}, {"max_ratio", max_ratio}, {"delta_hat", delta_hat}};
}

OneStepReport one_step_contraction(int q, int Delta, int trials, double delta_hat, std::uint64_t seed,
                                   int threads) {
  OneStepReport rep;
  rep.trials = trials;
  rep.delta_hat = delta_hat;
  const Potential pot = Potential::coloring();
  std::vector<double> ratio(trials, 0.0);
  std::vector<char> bad(trials, 0);
  parallel_for(trials, threads, [&](long long t) {
    Rng rng(seed, static_cast<std::uint64_t>(t));
    Graph g;
    RootedTree tree;
    std::vector<int> far;
    for (;;) {
      const int n = 6 + static_cast<int>(rng.below(9));
      g = random_tree(n, Delta, rng);
      std::vector<int> roots;
      for (int v = 0; v < n; ++v)
        if (g.degree(v) <= Delta - 1) roots.push_back(v);
      tree = RootedTree::from_graph(g, roots[rng.below(roots.size())]);
      far.clear();
      for (int v = 0; v < n; ++v)
        if (tree.depth[v] >= 2) far.push_back(v);
      if (!far.empty()) break;
    }
    std::vector<int> chosen;
    for (int v : far)
      if (rng.below(2)) chosen.push_back(v);
    if (chosen.empty()) chosen.push_back(far[rng.below(far.size())]);
    Pinning s1(g.vertex_count()), s2(g.vertex_count());
    auto draw = [&](Pinning& s, int v) {
      for (;;) {
        const int c = static_cast<int>(rng.below(q));
        bool clash = false;
        for (int x : g.neighbors(v)) clash = clash || (s.pinned(x) && s.color(x) == c);
        if (!clash) return s.set(v, c);
      }
    };
    for (int v : chosen) {
      draw(s1, v);
      draw(s2, v);
    }
    const SpinSystem sys(ColoringInstance::full(g, q));
    const auto p1 = subtree_marginals(sys, tree, s1);
    const auto p2 = subtree_marginals(sys, tree, s2);
    auto weight = [&](int v) {
      int pinned = 0, free = 0;
      for (int c : tree.children[v]) (s1.pinned(c) ? pinned : free) += 1;
      return weight_coloring(q - pinned, free, 4.0).w;
    };
    auto dist = [&](int v) {
      double s = 0;
      for (int c = 0; c < q; ++c) {
        const double d = pot.phi(p1[v][c]) - pot.phi(p2[v][c]);
        s += d * d;
      }
      return std::sqrt(s);
    };
    const double lhs = weight(tree.root) * dist(tree.root);
    double rhs = 0;
    for (int c : tree.children[tree.root]) rhs = std::max(rhs, weight(c) * dist(c));
    if (rhs > 0) ratio[t] = lhs / rhs;
    bad[t] = lhs > (1.0 - delta_hat) * rhs + 1e-12;
  });
  for (int t = 0; t < trials; ++t) {
    rep.violations += bad[t];
    rep.max_ratio = std::max(rep.max_ratio, ratio[t]);
  }
  return rep;
}

InflJacobianCheck infl_jacobian_check(const SpinSystem& sys, const Pinning& pin, int r, int u) {
  const Graph& g = sys.graph();
  if (!is_tree(g)) throw DomainError("identity check needs a tree");
  if (!g.has_edge(r, u)) throw DomainError("u must be adjacent to r");
  if (pin.pinned(r) || pin.pinned(u)) throw DomainError("r and u must be free");
  const int q = sys.q();
  for (int v = 0; v < sys.n(); ++v)
    if (static_cast<int>(sys.list(v).size()) != q) throw ParameterError("identity check needs full lists");
  const RootedTree tree = RootedTree::from_graph(g, r);
  const auto sub = subtree_marginals(sys, tree, pin);
  const Dist& root = sub[r];
  const Dist& pu = sub[u];
  std::vector<Dist> kids;
  int u_index = -1;
  for (int c : tree.children[r]) {
    if (c == u) u_index = static_cast<int>(kids.size());
    kids.push_back(sub[c]);
  }
  std::vector<int> full(q);
  std::iota(full.begin(), full.end(), 0);
  const Potential pot = sys.is_potts() ? Potential::potts_model(sys.beta()) : Potential::coloring();
  const JacobianBlocks jb = jacobian_phi(pot, kids, full);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t k = 0; k < jb.kept.size(); ++k)
    if (jb.kept[k] == u_index) J = jb.blocks[k];
  auto scale = [&](double x) { return x > 0 ? std::sqrt(x) / (1.0 - pot.theta * x) : 0.0; };

  InflJacobianCheck out;
  out.literal = Eigen::MatrixXd::Zero(q, q);
  for (int b = 0; b < q; ++b) {
    if (!(root[b] > 0)) continue;
    for (int c = 0; c < q; ++c) out.literal(b, c) = J(b, c) * scale(pu[c]) / scale(root[b]);
  }
  Eigen::VectorXd p(q);
  for (int c = 0; c < q; ++c) p(c) = pu[c];
  out.corrected = out.literal - out.literal.rowwise().sum() * p.transpose();

  const InfluenceMatrix m = influence_matrix(sys, pin);
  out.oracle = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = 0; i < m.index.size(); ++i) {
    if (m.index[i].first != r) continue;
    for (std::size_t j = 0; j < m.index.size(); ++j)
      if (m.index[j].first == u) out.oracle(m.index[i].second, m.index[j].second) = m.entries(i, j);
  }
  for (int b = 0; b < q; ++b) {
    if (!(root[b] > 0)) continue;
    for (int c = 0; c < q; ++c) {
      out.literal_residual = std::max(out.literal_residual, std::abs(out.literal(b, c) - out.oracle(b, c)));
      out.corrected_residual =
          std::max(out.corrected_residual, std::abs(out.corrected(b, c) - out.oracle(b, c)));
    }
  }
  return out;
}

}  // namespace spindecay
