#include "spindecay/glauber.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "spindecay/errors.hpp"
#include "spindecay/parallel.hpp"

namespace spindecay {

namespace {

std::vector<int> free_list(const Pinning& pin) {
  std::vector<int> out;
  for (int v = 0; v < pin.size(); ++v)
    if (!pin.pinned(v)) out.push_back(v);
  return out;
}

std::string key_of(const std::uint8_t* row, int n) {
  return std::string(reinterpret_cast<const char*>(row), static_cast<std::size_t>(n));
}

std::string key_of(const std::vector<int>& coloring) {
  std::string k(coloring.size(), '\0');
  for (std::size_t i = 0; i < coloring.size(); ++i) k[i] = static_cast<char>(coloring[i]);
  return k;
}

}  // namespace

void check_ergodicity(const SpinSystem& sys, const Pinning& pin) {
  validate_pinning(sys, pin);
  if (sys.is_potts() && sys.beta() > 0) return;
  const Graph& g = sys.graph();
  for (int v = 0; v < sys.n(); ++v) {
    if (pin.pinned(v)) continue;
    std::set<int> blocked;
    int free_deg = 0;
    for (int x : g.neighbors(v)) {
      if (pin.pinned(x))
        blocked.insert(pin.color(x));
      else
        ++free_deg;
    }
    int left = 0;
    for (int c : sys.list(v)) left += blocked.count(c) == 0;
    const int need = free_deg == 0 ? 1 : free_deg + 2;
    if (left < need)
      throw DomainError("Glauber ergodicity condition fails at vertex " + std::to_string(v) + ": " +
                        std::to_string(left) + " colors left, need " + std::to_string(need));
  }
}

std::vector<int> greedy_coloring(const SpinSystem& sys, const Pinning& pin, bool reversed) {
  std::vector<int> col = pin.dense();
  const Graph& g = sys.graph();
  for (int v = 0; v < sys.n(); ++v) {
    if (pin.pinned(v)) continue;
    auto lst = sys.list(v);
    if (reversed) std::reverse(lst.begin(), lst.end());
    int best = -1;
    double best_w = 0;
    for (int c : lst) {
      double w = 1.0;
      for (int x : g.neighbors(v))
        if (col[x] >= 0) w *= sys.pair_weight(c, col[x]);
      if (w > best_w) {
        best_w = w;
        best = c;
      }
    }
    if (best < 0) throw DomainError("greedy start failed at vertex " + std::to_string(v));
    col[v] = best;
  }
  return col;
}

int heat_bath_color(const SpinSystem& sys, const std::vector<int>& coloring, int v, double u) {
  const auto& lst = sys.list(v);
  thread_local std::vector<double> w;
  w.assign(lst.size(), 1.0);
  double total = 0;
  for (std::size_t k = 0; k < lst.size(); ++k) {
    for (int x : sys.graph().neighbors(v)) w[k] *= sys.pair_weight(lst[k], coloring[x]);
    total += w[k];
  }
  if (!(total > 0)) return coloring[v];
  double t = u * total;
  int last = coloring[v];
  for (std::size_t k = 0; k < lst.size(); ++k) {
    if (w[k] <= 0) continue;
    last = lst[k];
    if (t < w[k]) return lst[k];
    t -= w[k];
  }
  return last;
}

GlauberChain::GlauberChain(const SpinSystem& sys, const Pinning& pin, std::uint64_t seed,
                           std::uint64_t stream, bool check)
    : GlauberChain(sys, pin, greedy_coloring(sys, pin), seed, stream, check) {}

GlauberChain::GlauberChain(const SpinSystem& sys, const Pinning& pin, std::vector<int> start,
                           std::uint64_t seed, std::uint64_t stream, bool check)
    : sys_(&sys), free_(free_list(pin)) {
  if (check) check_ergodicity(sys, pin);
  if (static_cast<int>(start.size()) != sys.n()) throw ParameterError("start state has wrong size");
  state_.coloring = std::move(start);
  state_.rng = Rng(seed, stream);
}

void GlauberChain::apply(int free_index, double u) {
  const int v = free_[free_index];
  state_.coloring[v] = heat_bath_color(*sys_, state_.coloring, v, u);
  ++state_.step;
}

void GlauberChain::step() {
  if (free_.empty()) {
    ++state_.step;
    return;
  }
  const int idx = static_cast<int>(state_.rng.below(free_.size()));
  apply(idx, state_.rng.uniform());
}

void GlauberChain::run(long long steps) {
  for (long long i = 0; i < steps; ++i) step();
}

ChainState glauber_step(const SpinSystem& sys, const Pinning& pin, ChainState state) {
  const auto fr = free_list(pin);
  if (!fr.empty()) {
    const int v = fr[state.rng.below(fr.size())];
    state.coloring[v] = heat_bath_color(sys, state.coloring, v, state.rng.uniform());
  }
  ++state.step;
  return state;
}

TransitionMatrix transition_matrix(const SpinSystem& sys, const Pinning& pin, long long state_cap) {
  TransitionMatrix tm;
  tm.stationary = enumerate_gibbs(sys, pin, state_cap);
  const GibbsTable& t = tm.stationary;
  const int N = static_cast<int>(t.size());
  std::unordered_map<std::string, int> index;
  index.reserve(N * 2);
  for (int s = 0; s < N; ++s) index.emplace(key_of(t.row(s), t.n), s);
  const auto& fr = t.free_vertices;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> col(t.n);
  for (int s = 0; s < N; ++s) {
    if (fr.empty()) {
      trip.emplace_back(s, s, 1.0);
      continue;
    }
    for (int v = 0; v < t.n; ++v) col[v] = t.color(s, v);
    for (int v : fr) {
      const auto& lst = sys.list(v);
      std::vector<double> w(lst.size(), 1.0);
      double total = 0;
      for (std::size_t k = 0; k < lst.size(); ++k) {
        for (int x : sys.graph().neighbors(v)) w[k] *= sys.pair_weight(lst[k], col[x]);
        total += w[k];
      }
      const int keep = col[v];
      for (std::size_t k = 0; k < lst.size(); ++k) {
        if (w[k] <= 0) continue;
        col[v] = lst[k];
        const int target = index.at(key_of(col));
        trip.emplace_back(s, target, w[k] / total / static_cast<double>(fr.size()));
      }
      col[v] = keep;
    }
  }
  tm.P.resize(N, N);
  tm.P.setFromTriplets(trip.begin(), trip.end());
  tm.P.makeCompressed();
  return tm;
}

double stationarity_error(const TransitionMatrix& tm) {
  const int N = tm.size();
  Eigen::VectorXd pi(N);
  for (int s = 0; s < N; ++s) pi(s) = tm.stationary.prob[s];
  Eigen::VectorXd next = tm.P.transpose() * pi;
  return (next - pi).cwiseAbs().maxCoeff();
}

SpectralGap spectral_gap(const TransitionMatrix& tm, int dense_cap) {
  const int N = tm.size();
  if (N > dense_cap) throw CapExceeded("spectral gap limited to " + std::to_string(dense_cap) + " states");
  Eigen::VectorXd root(N);
  for (int s = 0; s < N; ++s) root(s) = std::sqrt(tm.stationary.prob[s]);
  Eigen::MatrixXd S = Eigen::MatrixXd(tm.P);
  S = root.asDiagonal() * S * root.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  SpectralGap r;
  r.lambda2 = N >= 2 ? ev(N - 2) : 0.0;
  r.lambda_min = ev(0);
  r.gap = 1.0 - r.lambda2;
  r.absolute_gap = 1.0 - std::max(std::abs(r.lambda2), std::abs(N >= 2 ? r.lambda_min : 0.0));
  return r;
}

namespace {

double max_row_tv(const Eigen::MatrixXd& M, const Eigen::RowVectorXd& pi) {
  double worst = 0;
  for (int x = 0; x < M.rows(); ++x) worst = std::max(worst, 0.5 * (M.row(x) - pi).cwiseAbs().sum());
  return worst;
}

}  // namespace

std::vector<double> exact_tv_series(const TransitionMatrix& tm, int t_max) {
  const int N = tm.size();
  Eigen::RowVectorXd pi(N);
  for (int s = 0; s < N; ++s) pi(s) = tm.stationary.prob[s];
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N, N);
  std::vector<double> out{max_row_tv(M, pi)};
  for (int t = 1; t <= t_max; ++t) {
    M = M * tm.P;
    out.push_back(max_row_tv(M, pi));
  }
  return out;
}

int exact_mixing_time(const TransitionMatrix& tm, double eps, int t_cap) {
  if (eps >= 1.0) return 0;
  const int N = tm.size();
  Eigen::RowVectorXd pi(N);
  for (int s = 0; s < N; ++s) pi(s) = tm.stationary.prob[s];
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N, N);
  for (int t = 0; t <= t_cap; ++t) {
    if (t > 0) M = M * tm.P;
    if (max_row_tv(M, pi) <= eps) return t;
  }
  throw CapExceeded("mixing time exceeds " + std::to_string(t_cap) + " steps");
}

int exact_mixing_time(const SpinSystem& sys, const Pinning& pin, double eps, long long state_cap) {
  if (eps >= 1.0) return 0;
  return exact_mixing_time(transition_matrix(sys, pin, state_cap), eps);
}

nlohmann::json MixingReport::to_json() const {
  return {{"kind", kind}, {"values", values}, {"t_mix", t_mix}, {"timeouts", timeouts}, {"meta", meta}};
}

std::string MixingReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) os << i << ',' << values[i] << '\n';
  return os.str();
}

MixingReport coalescence_estimate(const SpinSystem& sys, const Pinning& pin, int trials,
                                  std::uint64_t seed, long long step_cap, int threads) {
  check_ergodicity(sys, pin);
  const auto lo = greedy_coloring(sys, pin, false);
  const auto hi = greedy_coloring(sys, pin, true);
  std::vector<long long> times(trials, -1);
  parallel_for(trials, threads, [&](long long trial) {
    GlauberChain x(sys, pin, lo, seed, trial, false);
    GlauberChain y(sys, pin, hi, seed, trial, false);
    Rng rng(seed, static_cast<std::uint64_t>(trial));
    const auto F = x.free_vertices().size();
    long long t = 0;
    while (x.coloring() != y.coloring()) {
      if (t >= step_cap) return;
      const int idx = static_cast<int>(rng.below(F));
      const double u = rng.uniform();
      x.apply(idx, u);
      y.apply(idx, u);
      ++t;
    }
    times[trial] = t;
  });
  MixingReport rep;
  rep.kind = "coalescence";
  for (long long t : times) {
    if (t < 0)
      ++rep.timeouts;
    else
      rep.values.push_back(static_cast<double>(t));
  }
  rep.t_mix = median(rep.values);
  rep.meta = {{"trials", trials},
              {"seed", seed},
              {"step_cap", step_cap},
              {"mean", mean(rep.values)},
              {"free_vertices", static_cast<int>(free_list(pin).size())}};
  return rep;
}

ChainLawReport chain_law_check(const SpinSystem& sys, const Pinning& pin, int trials,
                               long long burnin, std::uint64_t seed, int threads,
                               long long state_cap) {
  check_ergodicity(sys, pin);
  ChainLawReport rep;
  rep.trials = trials;
  TransitionMatrix tm = transition_matrix(sys, pin, state_cap);
  rep.burnin = burnin > 0 ? burnin : std::max(1, exact_mixing_time(tm, 1e-3));
  const GibbsTable& t = tm.stationary;
  rep.states = static_cast<int>(t.size());
  std::unordered_map<std::string, int> index;
  for (int s = 0; s < rep.states; ++s) index.emplace(key_of(t.row(s), t.n), s);
  std::vector<int> final_state(trials);
  parallel_for(trials, threads, [&](long long trial) {
    GlauberChain chain(sys, pin, seed, static_cast<std::uint64_t>(trial), false);
    chain.run(rep.burnin);
    final_state[trial] = index.at(key_of(chain.coloring()));
  });
  std::vector<long long> counts(rep.states, 0);
  for (int s : final_state) ++counts[s];
  rep.chi = chi_square_test(counts, t.prob);
  return rep;
}

}  // namespace spindecay
