#include "spindecay/jacobian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "spindecay/errors.hpp"
#include "spindecay/parallel.hpp"

namespace spindecay {

double Potential::phi(double x) const {
  if (x < 0 || theta * x >= 1) throw DomainError("potential undefined at this point");
  if (theta == 0) return 2.0 * std::sqrt(x);
  return 2.0 / std::sqrt(theta) * std::atanh(std::sqrt(theta * x));
}

double Potential::inverse(double y) const {
  if (y < 0) throw DomainError("potential inverse needs y >= 0");
  if (theta == 0) return y * y / 4.0;
  const double t = std::tanh(y * std::sqrt(theta) / 2.0);
  return t * t / theta;
}

double Potential::deriv(double x) const {
  if (x < 0 || theta * x >= 1) throw DomainError("potential derivative undefined at this point");
  if (x == 0) return std::numeric_limits<double>::infinity();
  return 1.0 / (std::sqrt(x) * (1.0 - theta * x));
}

bool is_point_mass(const Dist& p, double tol) {
  return std::any_of(p.begin(), p.end(), [&](double x) { return x >= 1.0 - tol; });
}

namespace {

JacobianBlocks setup(const std::vector<Dist>& children, const std::vector<int>& root_list) {
  JacobianBlocks jb;
  jb.colors = root_list;
  std::sort(jb.colors.begin(), jb.colors.end());
  jb.Delta_r = static_cast<int>(children.size());
  jb.q_r = static_cast<int>(jb.colors.size());
  for (std::size_t i = 0; i < children.size(); ++i)
    if (!is_point_mass(children[i])) jb.kept.push_back(static_cast<int>(i));
  jb.d_r = static_cast<int>(jb.kept.size());
  return jb;
}

int palette_of(const std::vector<Dist>& children, const std::vector<int>& root_list) {
  int q = 0;
  for (int c : root_list) q = std::max(q, c + 1);
  for (const auto& p : children) q = std::max(q, static_cast<int>(p.size()));
  return q;
}

}  // namespace

JacobianBlocks jacobian_plain(const std::vector<Dist>& children, const std::vector<int>& root_list,
                              double theta) {
  JacobianBlocks jb = setup(children, root_list);
  const int q = palette_of(children, root_list);
  const Dist g = recursion_step(jb.colors, q, theta, children);
  const int k = jb.q_r;
  Eigen::MatrixXd base(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      base(a, b) = theta * (g[jb.colors[a]] * g[jb.colors[b]] - (a == b ? g[jb.colors[a]] : 0.0));
  for (int i : jb.kept) {
    Eigen::MatrixXd block = base;
    for (int b = 0; b < k; ++b) {
      const double den = 1.0 - theta * children[i][jb.colors[b]];
      if (den <= 0) throw DomainError("Jacobian singular: 1 - p_i(c) vanishes on an active color");
      block.col(b) /= den;
    }
    jb.blocks.push_back(std::move(block));
  }
  return jb;
}

JacobianBlocks jacobian_phi(const Potential& pot, const std::vector<Dist>& children,
                            const std::vector<int>& root_list) {
  JacobianBlocks jb = setup(children, root_list);
  const int q = palette_of(children, root_list);
  const double theta = pot.theta;
  const Dist g = recursion_step(jb.colors, q, theta, children);
  const int k = jb.q_r;
  Eigen::VectorXd sg(k);
  for (int a = 0; a < k; ++a) sg(a) = std::sqrt(g[jb.colors[a]]);
  Eigen::MatrixXd left = Eigen::MatrixXd::Identity(k, k) - sg * sg.transpose();
  for (int a = 0; a < k; ++a) {
    const double den = 1.0 - theta * g[jb.colors[a]];
    if (den <= 0) throw DomainError("Jacobian singular: 1 - theta g_c vanishes");
    left.row(a) *= -theta / den;
  }
  for (int i : jb.kept) {
    Eigen::MatrixXd block = left;
    for (int b = 0; b < k; ++b) {
      const double p = children[i][jb.colors[b]];
      if (p < 0) throw DomainError("negative child entry");
      block.col(b) *= std::sqrt(g[jb.colors[b]] * p);
    }
    jb.blocks.push_back(std::move(block));
  }
  return jb;
}

double lambda_max_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

double power_iteration_lambda_max(const Eigen::MatrixXd& m, double tol, int max_iter) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 0;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) x(i) += 0.01 * (i + 1);
  x.normalize();
  double lambda = 0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = m * x;
    const double next = x.dot(y);
    const double norm = y.norm();
    if (norm == 0) return 0;
    x = y / norm;
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

double spectral_norm_concat(const std::vector<Eigen::MatrixXd>& blocks) {
  if (blocks.empty()) return 0;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(blocks[0].rows(), blocks[0].rows());
  for (const auto& b : blocks) gram += b * b.transpose();
  return std::sqrt(lambda_max_symmetric(gram));
}

NormInterval norm_star_star(const std::vector<Eigen::MatrixXd>& blocks, std::uint64_t seed,
                            int restarts) {
  if (blocks.empty()) return {0, 0};
  const int q = static_cast<int>(blocks[0].rows());
  const double d = static_cast<double>(blocks.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
  for (const auto& b : blocks) gram += b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double upper = std::sqrt(d * std::max(0.0, es.eigenvalues().maxCoeff()));

  // maximize Σ_i ‖J_iᵀ y‖ over unit y by alternating between y and the x_i
  double best = 0;
  Rng rng(seed, 0x5a5a);
  for (int r = 0; r <= restarts; ++r) {
    Eigen::VectorXd y(q);
    if (r == 0) {
      y = es.eigenvectors().col(q - 1);
    } else {
      for (int a = 0; a < q; ++a) y(a) = 2.0 * rng.uniform() - 1.0;
    }
    if (y.norm() == 0) continue;
    y.normalize();
    double value = 0;
    for (int it = 0; it < 1000; ++it) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(q);
      for (const auto& b : blocks) {
        Eigen::VectorXd x = b.transpose() * y;
        const double nx = x.norm();
        if (nx > 0) z += b * (x / nx);
      }
      const double next = z.norm();
      if (next == 0) break;
      y = z / next;
      const bool done = next - value <= 1e-14 * std::max(1.0, next);
      value = std::max(value, next);
      if (done) break;
    }
    best = std::max(best, value);
  }
  return {std::min(best, upper), upper};
}

NormInterval norm_weighted(const std::vector<Eigen::MatrixXd>& blocks, double w_root,
                           const std::vector<double>& w_children, std::uint64_t seed,
                           int restarts) {
  if (w_children.size() != blocks.size()) throw ParameterError("one weight per block required");
  if (!(w_root > 0)) throw ParameterError("weights must be positive");
  std::vector<Eigen::MatrixXd> scaled;
  double inv_sq = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!(w_children[i] > 0)) throw ParameterError("weights must be positive");
    scaled.push_back(blocks[i] * (w_root / w_children[i]));
    inv_sq += 1.0 / (w_children[i] * w_children[i]);
  }
  NormInterval out = norm_star_star(scaled, seed, restarts);
  const double via_l2 = w_root * std::sqrt(inv_sq) * spectral_norm_concat(blocks);
  out.upper = std::min(out.upper, via_l2);
  out.lower = std::min(out.lower, out.upper);
  return out;
}

double entropy_f(double x) {
  if (!(x > 0)) throw ParameterError("f needs x > 0");
  return (1.0 / x + 1.0) * std::log1p(x) - 1.0;
}

double s_func(double x) {
  if (x == 0) return 0;
  if (!(x > 0 && x < 1)) throw ParameterError("s needs x in (0,1)");
  return -std::log1p(-x) / x - 1.0;
}

WeightEntry weight_coloring(int q_v, int d_v, double gamma) {
  if (gamma < 2) throw ParameterError("weights need gamma >= 2");
  if (q_v < 2 || q_v < d_v + gamma) throw ParameterError("weights need q_v >= d_v + gamma");
  WeightEntry e;
  e.q_v = q_v;
  e.d_v = d_v;
  e.xi = xi(gamma, d_v, q_v);
  e.zeta = entropy_f(e.xi / (q_v - 1.0));
  if (!(e.zeta > 0 && e.zeta < 1)) throw ParameterError("zeta outside (0,1)");
  e.w = 1.0 / std::sqrt(1.0 - e.zeta);
  e.cap = e.xi / (q_v - 1.0 + e.xi);
  return e;
}

WeightEntry weight_potts(int q, double beta, int Delta_v) {
  WeightEntry e;
  e.q_v = q;
  e.d_v = Delta_v;
  e.Delta_v = Delta_v;
  const double theta = 1.0 - beta;
  e.cap = bound_potts_two_level(q, beta, Delta_v, Delta_v);
  const double x = theta * e.cap;
  if (x >= 0.6) throw DomainError("theta * B >= 3/5: Potts weights undefined");
  e.zeta = theta == 0 ? 0.0 : s_func(x);
  e.w = 1.0 / std::sqrt(1.0 - e.zeta);
  e.xi = 0;
  return e;
}

WeightScheme weight_scheme_coloring(const std::vector<int>& q_map, const std::vector<int>& d_map,
                                    double gamma) {
  if (q_map.size() != d_map.size()) throw ParameterError("q_map and d_map differ in length");
  WeightScheme ws;
  for (std::size_t v = 0; v < q_map.size(); ++v) ws.entries.push_back(weight_coloring(q_map[v], d_map[v], gamma));
  return ws;
}

WeightScheme weight_scheme_potts(int q, double beta, const std::vector<int>& Delta_map) {
  WeightScheme ws;
  for (int D : Delta_map) ws.entries.push_back(weight_potts(q, beta, D));
  return ws;
}

double capped_product_bound(int q, double gamma) {
  return std::exp(-gamma / q + 1.0 / (gamma - 1.0)) / q;
}

double amortized_bound(const std::vector<std::pair<int, int>>& children_params, int q,
                       double gamma) {
  double sum = 0;
  for (auto [qi, di] : children_params) {
    const double x = xi(gamma, di, qi);
    sum += ((qi - 1.0) / x + 1.0) * std::log1p(x / (qi - 1.0));
  }
  return std::exp(sum / q) / (std::exp(1.0) * q);
}

double l2_bound_formula(int q_r, double gamma, double xi_root,
                        const std::vector<double>& children_zetas) {
  double sum = 0;
  for (double z : children_zetas) sum += z;
  return std::exp(2.0 * xi_root / (q_r - 1.0) - gamma / q_r) * std::exp(sum / q_r) / q_r;
}

double unweighted_bound_sq(int q_v, double gamma) {
  return std::exp(-2.0 * gamma / q_v + 3.0 / (gamma - 1.0));
}

double weighted_bound_sq(int q_v, int d_v, double gamma) {
  return std::exp(5.0 * xi(gamma, d_v, q_v) / (2.0 * (q_v - 1.0)) - 2.0 * gamma / q_v);
}

double potts_bound_sq(int q, double beta, int Delta_r) {
  const double theta = 1.0 - beta;
  const double b = theta * bound_potts_two_level(q, beta, Delta_r, Delta_r);
  return std::exp(5.0 * b / (2.0 * (1.0 - b)) + 2.0 * theta * Delta_r / q - 2.0);
}

double eps_delta_rate(double eps) { return std::exp(-eps / 4.0); }

std::string family_name(Family f) {
  switch (f) {
    case Family::coloring: return "coloring";
    case Family::coloring_unweighted: return "coloring_unweighted";
    case Family::potts: return "potts";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "coloring") return Family::coloring;
  if (s == "coloring_unweighted") return Family::coloring_unweighted;
  if (s == "potts") return Family::potts;
  throw ParameterError("unknown family " + s);
}

std::string mode_name(Mode m) { return m == Mode::strong ? "strong" : "weak"; }

Mode parse_mode(const std::string& s) {
  if (s == "strong") return Mode::strong;
  if (s == "weak") return Mode::weak;
  throw ParameterError("unknown mode " + s);
}

nlohmann::json ContractionReport::to_json() const {
  nlohmann::json j;
  j["regime"] = {{"family", family_name(spec.family)},
                 {"q", spec.q},
                 {"Delta", spec.Delta},
                 {"beta", spec.beta},
                 {"gamma", gamma}};
  j["mode"] = mode_name(mode);
  j["samples"] = samples;
  j["configurations"] = configurations;
  j["sampled_max_norm"] = sampled_max_norm;
  j["worst_lower"] = worst_lower;
  j["analytic_bound"] = analytic_bound;
  j["analytic_bound_sq"] = analytic_bound_sq;
  j["delta_hat"] = delta_hat;
  j["bound_violations"] = bound_violations;
  j["max_bound_ratio"] = max_bound_ratio;
  j["worst_input"] = worst_input;
  j["warnings"] = warnings;
  return j;
}

namespace {

struct RootConfig {
  int Delta_r;
  int d_r;
  int q_v;
};

struct ChildConfig {
  int Delta_i = 0;
  int d_i = 0;
  int q_i = 0;
  double cap = 1;
  double w = 1;
};

// vector of length k with entries in [0, cap] and sum <= 1
Dist sample_interior(int k, double cap, Rng& rng) {
  Dist e(k + 1);
  double total = 0;
  for (double& x : e) total += (x = rng.exponential());
  Dist p(k);
  for (int a = 0; a < k; ++a) p[a] = std::min(cap, e[a] / total);
  return p;
}

Dist sample_corner(int k, double cap, Rng& rng) {
  std::vector<int> idx(k);
  for (int a = 0; a < k; ++a) idx[a] = a;
  rng.shuffle(idx);
  int full = std::min(k, static_cast<int>(std::floor(1.0 / cap + 1e-12)));
  if (rng.uniform() < 0.5) full = static_cast<int>(rng.below(full + 1));
  Dist p(k, 0.0);
  for (int a = 0; a < full; ++a) p[idx[a]] = cap;
  if (full < k) p[idx[full]] = std::max(0.0, std::min(cap, 1.0 - full * cap)) * (rng.uniform() < 0.5 ? 1.0 : rng.uniform());
  return p;
}

// one shared color at 1/(d+1), the rest spread over `spread` other colors
Dist sample_bad(int k, int d, int i, int shared, double cap) {
  Dist p(k, 0.0);
  p[shared] = std::min(cap, 1.0 / (d + 1.0));
  const int spread = std::max(1, std::min(k - 1, k - d));
  for (int t = 0; t < spread && k > 1; ++t) {
    int c = (i * spread + t) % (k - 1);
    if (c >= shared) ++c;
    p[c] = std::min(cap, (1.0 - 1.0 / (d + 1.0)) / spread);
  }
  return p;
}

}  // namespace

ContractionReport certify_contraction(const FamilySpec& spec, Mode mode, long long samples,
                                      std::uint64_t seed, int threads) {
  const int q = spec.q, Delta = spec.Delta;
  if (q < 2 || Delta < 1) throw ParameterError("certifier needs q >= 2 and Delta >= 1");
  if (samples < 1) throw ParameterError("certifier needs samples >= 1");
  ContractionReport rep;
  rep.spec = spec;
  rep.mode = mode;
  rep.samples = samples;
  const bool potts = spec.family == Family::potts;
  const bool weighted = spec.family != Family::coloring_unweighted;
  const double theta = potts ? 1.0 - spec.beta : 1.0;
  const Potential pot = potts ? Potential::potts_model(spec.beta) : Potential::coloring();
  rep.gamma = spec.family == Family::coloring ? 4.0 : potts ? 4.0 : static_cast<double>(q - Delta);

  if (spec.family == Family::coloring_unweighted) {
    if (q - Delta < 2) throw ParameterError("unweighted family needs q - Delta >= 2");
    if (q < Delta + 3.0 * std::sqrt(Delta))
      rep.warnings.push_back("q below Delta + 3 sqrt(Delta): outside the unweighted regime");
  } else if (spec.family == Family::coloring) {
    if (q < Delta + 3) throw ParameterError("weighted family needs q >= Delta + 3");
  } else {
    if (q < theta * (Delta + 4.0) + 1.0)
      rep.warnings.push_back("q below (1-beta)(Delta+4)+1: outside the Potts regime");
  }

  const int root_max = spec.family == Family::coloring ? Delta - 1 : Delta;
  std::vector<RootConfig> configs;
  for (int D = 1; D <= root_max; ++D)
    for (int d = 1; d <= D; ++d) {
      if (mode == Mode::weak && d != D) continue;
      if (potts && d != D) continue;
      for (int qv = q - (D - d); qv <= q; ++qv) {
        if (mode == Mode::weak && qv != q) continue;
        configs.push_back({D, d, qv});
      }
    }
  if (configs.empty()) throw ParameterError("no root configurations for these parameters");
  rep.configurations = static_cast<int>(configs.size());

  auto config_bound_sq = [&](const RootConfig& c) {
    if (potts) return potts_bound_sq(q, spec.beta, c.Delta_r);
    if (weighted) return weighted_bound_sq(c.q_v, c.d_r, rep.gamma);
    return unweighted_bound_sq(c.q_v, rep.gamma);
  };
  for (const auto& c : configs) rep.analytic_bound_sq = std::max(rep.analytic_bound_sq, config_bound_sq(c));
  rep.analytic_bound = std::sqrt(rep.analytic_bound_sq);

  auto child_config = [&](Rng& rng) {
    ChildConfig cc;
    if (spec.family == Family::coloring_unweighted) {
      cc.cap = 1.0 / (q - Delta);
      return cc;
    }
    cc.Delta_i = static_cast<int>(rng.below(Delta));
    if (potts) {
      auto we = weight_potts(q, spec.beta, cc.Delta_i);
      cc.cap = we.cap;
      cc.w = we.w;
      return cc;
    }
    cc.d_i = mode == Mode::weak ? cc.Delta_i : static_cast<int>(rng.below(cc.Delta_i + 1));
    cc.q_i = mode == Mode::weak ? q : q - static_cast<int>(rng.below(cc.Delta_i - cc.d_i + 1));
    auto we = weight_coloring(cc.q_i, cc.d_i, rep.gamma);
    cc.cap = we.cap;
    cc.w = we.w;
    return cc;
  };
  auto root_weight = [&](const RootConfig& c) {
    if (potts) return weight_potts(q, spec.beta, c.Delta_r).w;
    if (weighted) return weight_coloring(c.q_v, c.d_r, rep.gamma).w;
    return 1.0;
  };

  double max_cap = 0;
  std::vector<double> norms(samples), ratios(samples);
  parallel_for(samples, threads, [&](long long s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    const RootConfig& c = configs[s % configs.size()];
    const int kind = static_cast<int>((s / configs.size()) % 4);
    std::vector<int> colors(c.q_v);
    for (int a = 0; a < c.q_v; ++a) colors[a] = a;
    std::vector<Dist> children;
    std::vector<double> w;
    const int shared = static_cast<int>(rng.below(c.q_v));
    for (int i = 0; i < c.d_r; ++i) {
      ChildConfig cc = child_config(rng);
      Dist p = kind == 3 ? sample_bad(c.q_v, c.d_r, i, shared, cc.cap)
               : kind == 2 ? sample_corner(c.q_v, cc.cap, rng)
                           : sample_interior(c.q_v, cc.cap, rng);
      // never a point mass: a point mass is a pinned child
      for (double& x : p) x = std::min(x, 1.0 - 1e-9);
      children.push_back(std::move(p));
      w.push_back(cc.w);
    }
    auto jb = jacobian_phi(pot, children, colors);
    const double upper = weighted ? norm_weighted(jb.blocks, root_weight(c), w, 0, 0).upper
                                  : norm_star_star(jb.blocks, 0, 0).upper;
    norms[s] = upper;
    ratios[s] = upper * upper / config_bound_sq(c);
  });

  long long worst = 0;
  for (long long s = 0; s < samples; ++s) {
    if (norms[s] > norms[worst]) worst = s;
    rep.max_bound_ratio = std::max(rep.max_bound_ratio, ratios[s]);
    if (ratios[s] > 1.0 + 1e-12) ++rep.bound_violations;
  }
  rep.sampled_max_norm = norms[worst];
  rep.delta_hat = 1.0 - rep.sampled_max_norm;

  // replay the worst sample to record its inputs and a lower estimate
  {
    Rng rng(seed, static_cast<std::uint64_t>(worst));
    const RootConfig& c = configs[worst % configs.size()];
    const int kind = static_cast<int>((worst / configs.size()) % 4);
    std::vector<int> colors(c.q_v);
    for (int a = 0; a < c.q_v; ++a) colors[a] = a;
    std::vector<Dist> children;
    std::vector<double> w;
    nlohmann::json child_json = nlohmann::json::array();
    const int shared = static_cast<int>(rng.below(c.q_v));
    for (int i = 0; i < c.d_r; ++i) {
      ChildConfig cc = child_config(rng);
      Dist p = kind == 3 ? sample_bad(c.q_v, c.d_r, i, shared, cc.cap)
               : kind == 2 ? sample_corner(c.q_v, cc.cap, rng)
                           : sample_interior(c.q_v, cc.cap, rng);
      for (double& x : p) x = std::min(x, 1.0 - 1e-9);
      child_json.push_back({{"p", p}, {"cap", cc.cap}, {"weight", cc.w}, {"Delta", cc.Delta_i},
                            {"d", cc.d_i}, {"q", cc.q_i}});
      children.push_back(std::move(p));
      w.push_back(cc.w);
    }
    auto jb = jacobian_phi(pot, children, colors);
    rep.worst_lower = weighted ? norm_weighted(jb.blocks, root_weight(c), w, seed).lower
                               : norm_star_star(jb.blocks, seed).lower;
    static const char* kinds[] = {"interior", "interior", "corner", "adversarial"};
    rep.worst_input = {{"sample", worst},
                       {"profile", kinds[kind]},
                       {"Delta_r", c.Delta_r},
                       {"d_r", c.d_r},
                       {"q_v", c.q_v},
                       {"root_weight", root_weight(c)},
                       {"children", child_json}};
  }

  if (!potts) {
    for (int D = 0; D < Delta; ++D)
      for (int d = 0; d <= D; ++d)
        for (int qi = q - (D - d); qi <= q; ++qi) {
          double cap = weighted ? weight_coloring(qi, d, rep.gamma).cap : 1.0 / (q - Delta);
          max_cap = std::max(max_cap, cap);
        }
    if (max_cap > 1.0 / 3.0 + 1e-12)
      rep.warnings.push_back("child cap exceeds 1/3: potential not known to be concave there");
  }
  return rep;
}

}  // namespace spindecay
