#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "spindecay/coupling.hpp"
#include "spindecay/decay.hpp"
#include "spindecay/errors.hpp"
#include "spindecay/gibbs.hpp"
#include "spindecay/glauber.hpp"
#include "spindecay/jacobian.hpp"
#include "spindecay/tree.hpp"

using namespace spindecay;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string graph = "path:3";
  std::string model = "coloring";
  int q = 3;
  double beta = 0.0;
  std::string instance;
  std::string pinning;
  std::uint64_t seed = 1;
  int threads = 1;
  long long state_cap = 1000000;
  std::string out;
  std::string format = "json";
};

// "a:b" ranges or comma lists of non-negative integers
std::vector<int> parse_depths(const std::string& s) {
  std::vector<int> out;
  auto num = [&](const std::string& t) {
    std::size_t used = 0;
    const int x = std::stoi(t, &used);
    if (used != t.size() || x < 0) throw std::invalid_argument(t);
    return x;
  };
  const auto colon = s.find(':');
  if (colon != std::string::npos) {
    const int a = num(s.substr(0, colon)), b = num(s.substr(colon + 1));
    if (a > b) throw std::invalid_argument(s);
    for (int i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(num(item));
  if (out.empty()) throw std::invalid_argument(s);
  return out;
}

const CLI::Validator depth_list(
    [](std::string& s) -> std::string {
      try {
        parse_depths(s);
        return {};
      } catch (const std::exception&) {
        return "expected a:b or a comma list of non-negative integers, got " + s;
      }
    },
    "DEPTHS");

Graph load_graph(const std::string& spec) {
  if (std::filesystem::exists(spec)) return read_graph(spec);
  return parse_graph_spec(spec);
}

SpinSystem load_system(const Common& c, const Graph& g) {
  if (!c.instance.empty()) return read_instance(g, c.instance);
  if (c.model == "potts") return SpinSystem(PottsInstance{g, c.q, c.beta});
  return SpinSystem(ColoringInstance::full(g, c.q));
}

Pinning load_pinning(const Common& c, const SpinSystem& sys) {
  Pinning pin = c.pinning.empty() ? Pinning(sys.n()) : read_pinning(sys.n(), c.pinning);
  validate_pinning(sys, pin);
  return pin;
}

void add_common(CLI::App* sub, Common& c, bool system, bool sampling, const std::string& graph_names = "--graph") {
  if (system) {
    sub->add_option(graph_names, c.graph, "graph file or builder spec (bintree:h, dary:d:h, path:n, cycle:n)");
    sub->add_option("--model", c.model, "spin model")->check(CLI::IsMember({"coloring", "potts"}));
    sub->add_option("--q", c.q, "number of colors")->check(CLI::Range(1, 64));
    sub->add_option("--beta", c.beta, "Potts same-color weight")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--instance", c.instance, "instance JSON {q, lists, beta?}; overrides --model/--q/--beta")
        ->check(CLI::ExistingFile);
    sub->add_option("--pin", c.pinning, "pinning JSON {vertex: color}")->check(CLI::ExistingFile);
    sub->add_option("--state-cap", c.state_cap, "enumeration state cap")->check(CLI::PositiveNumber);
  }
  if (sampling) {
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 256));
  }
  sub->add_option("--out", c.out, "output path (stdout when omitted)");
  if (c.format == "edges")
    sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"edges", "json"}));
  else
    sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
}

json config_of(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "out") continue;
    std::string value = opt->get_default_str();
    if (opt->count() > 0) {
      value.clear();
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    }
    cfg[name] = value;
  }
  cfg["command"] = sub->get_name();
  return cfg;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Top-level fields as key,value rows; nested values are emitted as compact JSON.
std::string flat_csv(const json& j) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : j.items()) {
    std::string text = scalar_text(v);
    if (text.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      text = quoted + "\"";
    }
    out += k + "," + text + "\n";
  }
  return out;
}

std::string render(const json& cfg, const json& result, const std::string& format,
                   const std::string& csv_body = {}) {
  if (format == "csv") return "# config " + cfg.dump() + "\n" + (csv_body.empty() ? flat_csv(result) : csv_body);
  json doc{{"config", cfg}, {"result", result}};
  return doc.dump(2) + "\n";
}

json spectral_json(const SpectralReport& s) {
  return {{"lambda_max", s.lambda_max},
          {"lambda_power", s.lambda_power},
          {"max_imag", s.max_imag},
          {"real_spectrum", s.real_spectrum},
          {"dimension", s.dimension}};
}

json chi_json(const ChiSquareResult& c) {
  return {{"statistic", c.statistic}, {"dof", c.dof}, {"critical", c.critical}, {"pass", c.pass}, {"bins", c.bins}};
}

// ---------------------------------------------------------------------------

std::string run_marginals(const Common& c, const json& cfg, const std::string& method, int root) {
  const Graph g = load_graph(c.graph);
  const SpinSystem sys = load_system(c, g);
  const Pinning pin = load_pinning(c, sys);
  const bool tree = is_tree(g);
  if (method == "tree" && !tree) throw DomainError("tree method needs an acyclic connected graph");
  if (root < 0 || root >= sys.n()) throw UsageError("root out of range");
  std::vector<Dist> rows;
  std::string used;
  if (method == "enumerate" || (method == "auto" && !tree)) {
    rows = enumerate_gibbs(sys, pin, c.state_cap).marginals();
    used = "enumerate";
  } else {
    rows = exact_tree_marginals(sys, RootedTree::from_graph(g, root), pin).rows;
    used = "tree";
  }
  std::string csv = "vertex,color,probability\n";
  char buf[64];
  for (int v = 0; v < sys.n(); ++v)
    for (int col = 0; col < sys.q(); ++col) {
      std::snprintf(buf, sizeof buf, "%.17g", rows[v][col]);
      csv += std::to_string(v) + "," + std::to_string(col) + "," + buf + "\n";
    }
  return render(cfg, {{"method", used}, {"marginals", rows}}, c.format, csv);
}

std::string run_certify(const Common& c, const json& cfg, const FamilySpec& spec, const std::string& mode,
                        long long samples) {
  const auto rep = certify_contraction(spec, parse_mode(mode), samples, c.seed, c.threads);
  return render(cfg, rep.to_json(), c.format);
}

std::string run_influence(const Common& c, const json& cfg, int u, int b, int col) {
  const Graph g = load_graph(c.graph);
  const SpinSystem sys = load_system(c, g);
  const Pinning pin = load_pinning(c, sys);
  const GibbsTable table = enumerate_gibbs(sys, pin, c.state_cap);
  const InfluenceMatrix m = influence_matrix(table);
  json result{{"matrix", m.to_json()},
              {"spectral", spectral_json(spectral_report(m))},
              {"infinity_norm", infinity_norm(m.entries)},
              {"free_vertices", table.free_vertices},
              {"states", table.size()}};
  if (u >= 0) {
    if (u >= sys.n()) throw UsageError("u out of range");
    const GibbsTable tb = condition(table, u, b);
    const GibbsTable tc = condition(table, u, col);
    const W1Result w = w1_hamming(tb, tc);
    json tv = json::array();
    for (int v = 0; v < sys.n(); ++v) {
      if (v == u) continue;
      tv.push_back({{"vertex", v}, {"tv", tv_distance(tb.marginal(v), tc.marginal(v))}});
    }
    result["pair"] = {{"u", u},
                      {"b", b},
                      {"c", col},
                      {"w1_lower", w.lower},
                      {"w1_upper", w.upper},
                      {"w1_exact", w.exact_computed ? json(w.exact) : json(nullptr)},
                      {"tv", tv}};
  }
  std::string csv;
  if (c.format == "csv") {
    const auto dist = distances(g, u >= 0 ? u : table.free_vertices.front());
    const int src = u >= 0 ? u : table.free_vertices.front();
    std::map<int, double> by_distance;
    for (std::size_t r = 0; r < m.index.size(); ++r) {
      if (m.index[r].first != src) continue;
      std::map<int, double> row_sum;
      for (std::size_t k = 0; k < m.index.size(); ++k) {
        const int v = m.index[k].first;
        if (v == src || dist[v] < 0) continue;
        row_sum[dist[v]] += std::abs(m.entries(static_cast<long>(r), static_cast<long>(k)));
      }
      for (auto [d, s] : row_sum) by_distance[d] = std::max(by_distance[d], s);
    }
    csv = "distance,influence_sum\n";
    char buf[64];
    for (auto [d, s] : by_distance) {
      std::snprintf(buf, sizeof buf, "%.17g", s);
      csv += std::to_string(d) + "," + buf + "\n";
    }
  }
  return render(cfg, result, c.format, csv);
}

std::string run_glauber(const Common& c, const json& cfg, const std::string& method, long long steps,
                        long long burnin, int trials, double eps) {
  const Graph g = load_graph(c.graph);
  const SpinSystem sys = load_system(c, g);
  const Pinning pin = load_pinning(c, sys);
  if (method == "law") {
    const auto rep = chain_law_check(sys, pin, trials, burnin, c.seed, c.threads, c.state_cap);
    return render(cfg,
                  {{"chi_square", chi_json(rep.chi)},
                   {"burnin", rep.burnin},
                   {"trials", rep.trials},
                   {"states", rep.states}},
                  c.format);
  }
  MixingReport rep;
  if (method == "exact") {
    const auto tm = transition_matrix(sys, pin, c.state_cap);
    rep.kind = "exact_tv";
    rep.values = exact_tv_series(tm, static_cast<int>(steps));
    rep.t_mix = exact_mixing_time(tm, eps);
    const auto gap = spectral_gap(tm);
    rep.meta = {{"states", tm.size()},
                {"eps", eps},
                {"stationarity_error", stationarity_error(tm)},
                {"spectral_gap", gap.gap},
                {"absolute_gap", gap.absolute_gap}};
  } else {
    rep = coalescence_estimate(sys, pin, trials, c.seed, steps, c.threads);
  }
  return c.format == "csv" ? "# config " + cfg.dump() + "\n" + rep.to_csv() : render(cfg, rep.to_json(), c.format);
}

std::string run_couple(const Common& c, const json& cfg, int u, int b, int col, int R, int trials, int depth_cap) {
  const Graph g = load_graph(c.graph);
  const SpinSystem sys = load_system(c, g);
  const Pinning pin = load_pinning(c, sys);
  if (u < 0 || u >= sys.n()) throw UsageError("u out of range");
  ConditionalOracle oracle(sys, pin, c.state_cap);
  CouplingOptions opt;
  opt.R = R;
  opt.depth_cap = depth_cap;
  opt.state_cap = c.state_cap;
  const auto summary = run_couplings(oracle, u, b, col, opt, trials, c.seed, c.threads);
  if (c.format == "csv") {
    std::string csv = "# config " + cfg.dump() + "\ntrial,hamming,depth_exceeded\n";
    for (std::size_t i = 0; i < summary.outcomes.size(); ++i)
      csv += std::to_string(i) + "," + std::to_string(summary.outcomes[i].hamming) + "," +
             (summary.outcomes[i].depth_exceeded ? "1" : "0") + "\n";
    return csv;
  }
  std::string lines = json{{"config", cfg}}.dump() + "\n";
  for (std::size_t i = 0; i < summary.outcomes.size(); ++i) {
    json o = summary.outcomes[i].to_json();
    o["trial"] = i;
    lines += o.dump() + "\n";
  }
  lines += json{{"summary", summary.to_json()}}.dump() + "\n";
  return lines;
}

std::string run_decay(const Common& c, const json& cfg, const std::string& kind, const std::string& depths_text,
                      int root, const std::string& strategy) {
  const Graph g = load_graph(c.graph);
  const auto depths = parse_depths(depths_text);
  SearchOptions opt;
  opt.strategy = parse_strategy(strategy);
  opt.seed = c.seed;
  opt.threads = c.threads;
  DecayProfile p;
  if (kind == "wsm") {
    p = wsm_profile_potts(g, c.q, c.beta, root, depths, opt);
  } else {
    const SpinSystem sys = load_system(c, g);
    if (kind == "ssm")
      p = ssm_profile(sys, root, depths, opt);
    else
      p = tid_profile(sys, load_pinning(c, sys), root, depths, c.state_cap);
  }
  return c.format == "csv" ? "# config " + cfg.dump() + "\n" + p.to_csv() : render(cfg, p.to_json(), c.format);
}

std::string run_constants(const Common& c, const json& cfg, const FamilySpec& spec, double delta, long long samples,
                          double eps) {
  json result;
  if (delta <= 0) {
    const auto rep = certify_contraction(spec, Mode::strong, samples, c.seed, c.threads);
    delta = rep.delta_hat;
    result["certified_max_norm"] = rep.sampled_max_norm;
  }
  result["delta"] = delta;
  if (delta > 0) {
    const auto cst = constants_for_family(spec, delta);
    result["constants"] = cst.to_json();
    result["parameters"] = parameter_search(cst.C_SM, cst.C_INFL, delta, spec.Delta).to_json();
  } else {
    result["constants"] = nullptr;
    result["note"] = "no contraction certified; constants undefined";
  }
  if (eps > 0) result["eps_delta"] = eps_delta_constants(eps, spec.Delta).to_json();
  return render(cfg, result, c.format);
}

std::string run_gen_graph(const Common& c, const json& cfg, const std::string& kind, int n, int max_degree,
                          int min_girth, const std::string& spec, int retries) {
  Graph g;
  if (kind == "girth") {
    g = generate_girth_graph(n, max_degree, min_girth, c.seed, retries);
  } else if (kind == "tree") {
    Rng rng(c.seed, 0);
    g = random_tree(n, max_degree, rng);
  } else {
    g = parse_graph_spec(spec);
  }
  if (c.format == "json") {
    json edges = json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    const auto gi = girth(g);
    return render(cfg,
                  {{"n", g.vertex_count()},
                   {"m", g.edge_count()},
                   {"max_degree", g.max_degree()},
                   {"girth", gi ? json(*gi) : json(nullptr)},
                   {"edges", edges}},
                  c.format);
  }
  return "# config " + cfg.dump() + "\n" + graph_to_text(g);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spindecay: correlation decay, Gibbs oracles and Glauber diagnostics for colorings and Potts"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::function<std::string()> action;
  std::string out_path;

  Common mc;
  auto* marg = app.add_subcommand("marginals", "exact marginals (tree recursion or enumeration)");
  add_common(marg, mc, true, false);
  std::string method = "auto";
  int root = 0;
  marg->add_option("--method", method, "auto | tree | enumerate")->check(CLI::IsMember({"auto", "tree", "enumerate"}));
  marg->add_option("--root", root, "root for the tree recursion");
  marg->callback([&] {
    out_path = mc.out; action = [&] { return run_marginals(mc, config_of(marg), method, root); }; });

  Common fc;
  fc.q = 6;
  auto* cert = app.add_subcommand("certify", "sampled certification of Jacobian contraction");
  add_common(cert, fc, false, true);
  std::string family = "coloring", mode = "strong";
  int delta_max = 3;
  long long samples = 10000;
  cert->add_option("--family", family, "coloring | coloring_unweighted | potts")
      ->check(CLI::IsMember({"coloring", "coloring_unweighted", "potts"}));
  cert->add_option("--q", fc.q, "number of colors")->check(CLI::Range(2, 1000));
  cert->add_option("--delta-max", delta_max, "maximum degree")->check(CLI::Range(2, 1000));
  cert->add_option("--beta", fc.beta, "Potts same-color weight")->check(CLI::Range(0.0, 1.0));
  cert->add_option("--mode", mode, "strong | weak")->check(CLI::IsMember({"strong", "weak"}));
  cert->add_option("--samples", samples, "sampled inputs")->check(CLI::PositiveNumber);
  cert->callback([&] {
    out_path = fc.out;
    action = [&] {
      return run_certify(fc, config_of(cert), {parse_family(family), fc.q, delta_max, fc.beta}, mode,
                         samples);
    };
  });

  Common ic_;
  auto* infl = app.add_subcommand("influence", "influence matrix, spectral report and conditional distances");
  add_common(infl, ic_, true, false);
  int iu = -1, ib = 0, ic = 1;
  infl->add_option("--u", iu, "vertex for the conditional pair (omit to skip)");
  infl->add_option("--b", ib, "first color at u")->check(CLI::NonNegativeNumber);
  infl->add_option("--c", ic, "second color at u")->check(CLI::NonNegativeNumber);
  infl->callback([&] {
    out_path = ic_.out; action = [&] { return run_influence(ic_, config_of(infl), iu, ib, ic); }; });

  Common gc;
  auto* glau = app.add_subcommand("glauber", "Glauber dynamics: exact TV series, coalescence or chain law");
  gc.state_cap = 5000;
  add_common(glau, gc, true, true);
  std::string gmethod = "exact";
  long long steps = 200, burnin = 0;
  int gtrials = 100;
  double geps = 0.25;
  glau->add_option("--method", gmethod, "exact | coalescence | law")
      ->check(CLI::IsMember({"exact", "coalescence", "law"}));
  glau->add_option("--steps", steps, "series length (exact) or step cap (coalescence)")->check(CLI::PositiveNumber);
  glau->add_option("--burnin", burnin, "burn-in for the law check; 0 uses the exact mixing time")
      ->check(CLI::NonNegativeNumber);
  glau->add_option("--trials", gtrials, "independent chains")->check(CLI::PositiveNumber);
  glau->add_option("--eps", geps, "TV threshold for the mixing time")->check(CLI::Range(0.0, 1.0));
  glau->callback([&] {
    out_path = gc.out;
    action = [&] { return run_glauber(gc, config_of(glau), gmethod, steps, burnin, gtrials, geps); };
  });

  Common uc;
  auto* coup = app.add_subcommand("couple", "local coupling from two root colors, streamed as JSON lines");
  add_common(coup, uc, true, true);
  int cu = 0, cb = 0, cc = 1, cR = 2, ctrials = 1000, depth_cap = 40;
  coup->add_option("--u", cu, "disagreement vertex")->check(CLI::NonNegativeNumber);
  coup->add_option("--b", cb, "color of u in the first copy")->check(CLI::NonNegativeNumber);
  coup->add_option("--c", cc, "color of u in the second copy")->check(CLI::NonNegativeNumber);
  coup->add_option("--R", cR, "radius of the local step")->check(CLI::Range(1, 64));
  coup->add_option("--trials", ctrials, "coupling runs")->check(CLI::PositiveNumber);
  coup->add_option("--depth-cap", depth_cap, "recursion depth cap")->check(CLI::PositiveNumber);
  coup->callback([&] {
    out_path = uc.out; action = [&] { return run_couple(uc, config_of(coup), cu, cb, cc, cR, ctrials, depth_cap); }; });

  Common dc;
  dc.format = "csv";
  auto* dec = app.add_subcommand("decay", "SSM, WSM and TID decay profiles");
  add_common(dec, dc, true, true, "--graph,--tree");
  std::string kind = "ssm", depths = "1:6", strategy = "auto";
  int droot = 0;
  dec->add_option("--kind", kind, "ssm | wsm | tid")->check(CLI::IsMember({"ssm", "wsm", "tid"}));
  dec->add_option("--depths", depths, "a:b or comma list")->check(depth_list);
  dec->add_option("--root", droot, "root vertex");
  dec->add_option("--strategy", strategy, "auto | exact | heuristic")
      ->check(CLI::IsMember({"auto", "exact", "heuristic"}));
  dec->callback([&] {
    out_path = dc.out;
    action = [&] { return run_decay(dc, config_of(dec), kind, depths, droot, strategy); };
  });

  Common kc;
  kc.q = 6;
  auto* cons = app.add_subcommand("constants", "decay constants, parameter search and eps-regime constants");
  add_common(cons, kc, false, true);
  std::string cfamily = "coloring";
  int cdelta_max = 3;
  double cdelta = 0, ceps = 0;
  long long csamples = 10000;
  cons->add_option("--family", cfamily, "coloring | coloring_unweighted | potts")
      ->check(CLI::IsMember({"coloring", "coloring_unweighted", "potts"}));
  cons->add_option("--q", kc.q, "number of colors")->check(CLI::Range(2, 1000));
  cons->add_option("--delta-max", cdelta_max, "maximum degree")->check(CLI::Range(2, 1000));
  cons->add_option("--beta", kc.beta, "Potts same-color weight")->check(CLI::Range(0.0, 1.0));
  cons->add_option("--delta", cdelta, "contraction margin; 0 certifies it first")->check(CLI::Range(0.0, 1.0));
  cons->add_option("--samples", csamples, "certifier samples when --delta is 0")->check(CLI::PositiveNumber);
  cons->add_option("--eps", ceps, "also report the q = (1+eps)Delta constants")->check(CLI::Range(0.0, 10.0));
  cons->callback([&] {
    out_path = kc.out;
    action = [&] {
      return run_constants(kc, config_of(cons), {parse_family(cfamily), kc.q, cdelta_max, kc.beta},
                           cdelta, csamples, ceps);
    };
  });

  Common nc;
  nc.format = "edges";
  auto* gen = app.add_subcommand("gen-graph", "generate a graph file");
  add_common(gen, nc, false, true);
  std::string gkind = "girth", gspec = "path:3";
  int gn = 20, gdeg = 3, ggirth = 5, gretries = 64;
  gen->add_option("--kind", gkind, "girth | tree | builder")->check(CLI::IsMember({"girth", "tree", "builder"}));
  gen->add_option("--n", gn, "vertices")->check(CLI::PositiveNumber);
  gen->add_option("--max-degree", gdeg, "maximum degree")->check(CLI::PositiveNumber);
  gen->add_option("--girth", ggirth, "minimum girth")->check(CLI::Range(3, 1000));
  gen->add_option("--spec", gspec, "builder spec for --kind builder");
  gen->add_option("--retries", gretries, "generator restarts")->check(CLI::PositiveNumber);
  gen->callback([&] {
    out_path = nc.out;
    action = [&] { return run_gen_graph(nc, config_of(gen), gkind, gn, gdeg, ggirth, gspec, gretries); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    emit(action(), out_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
