#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "spindecay/gibbs.hpp"
#include "spindecay/instance.hpp"
#include "spindecay/rng.hpp"
#include "spindecay/stats.hpp"

namespace spindecay {

struct ChainState {
  std::vector<int> coloring;
  long long step = 0;
  Rng rng;
};

// Free vertex needs at least free-degree + 2 colors left after removing
// pinned neighbors' colors; an isolated free vertex needs one.
void check_ergodicity(const SpinSystem& sys, const Pinning& pin);

// Greedy start in vertex order; reversed prefers the largest allowed color.
std::vector<int> greedy_coloring(const SpinSystem& sys, const Pinning& pin, bool reversed = false);

// Heat-bath draw for v given the other colors, by inverse CDF of u in [0,1).
int heat_bath_color(const SpinSystem& sys, const std::vector<int>& coloring, int v, double u);

class GlauberChain {
 public:
  GlauberChain(const SpinSystem& sys, const Pinning& pin, std::uint64_t seed,
               std::uint64_t stream = 0, bool check = true);
  GlauberChain(const SpinSystem& sys, const Pinning& pin, std::vector<int> start,
               std::uint64_t seed, std::uint64_t stream = 0, bool check = true);

  void step();
  void run(long long steps);
  // one update at the given free-vertex index with the given uniform
  void apply(int free_index, double u);

  const std::vector<int>& coloring() const { return state_.coloring; }
  const ChainState& state() const { return state_; }
  const std::vector<int>& free_vertices() const { return free_; }
  long long steps() const { return state_.step; }

 private:
  const SpinSystem* sys_;
  std::vector<int> free_;
  ChainState state_;
};

ChainState glauber_step(const SpinSystem& sys, const Pinning& pin, ChainState state);

struct TransitionMatrix {
  GibbsTable stationary;
  Eigen::SparseMatrix<double, Eigen::RowMajor> P;

  int size() const { return static_cast<int>(P.rows()); }
};

TransitionMatrix transition_matrix(const SpinSystem& sys, const Pinning& pin,
                                   long long state_cap = 5000);

double stationarity_error(const TransitionMatrix& tm);

struct SpectralGap {
  double lambda2 = 0;
  double lambda_min = 0;
  double gap = 0;
  double absolute_gap = 0;
};

SpectralGap spectral_gap(const TransitionMatrix& tm, int dense_cap = 2000);

struct MixingReport {
  std::string kind;  // exact_tv, coalescence, autocorrelation
  std::vector<double> values;
  double t_mix = 0;
  int timeouts = 0;
  nlohmann::json meta;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// max over starts of TV(P^t(x,.), pi) for t = 0..t_max
std::vector<double> exact_tv_series(const TransitionMatrix& tm, int t_max);
int exact_mixing_time(const TransitionMatrix& tm, double eps, int t_cap = 100000);
int exact_mixing_time(const SpinSystem& sys, const Pinning& pin, double eps,
                      long long state_cap = 5000);

MixingReport coalescence_estimate(const SpinSystem& sys, const Pinning& pin, int trials,
                                  std::uint64_t seed, long long step_cap = 10000000,
                                  int threads = 1);

struct ChainLawReport {
  ChiSquareResult chi;
  long long burnin = 0;
  int trials = 0;
  int states = 0;
};

// Final states of independent chains against the exact law. burnin <= 0
// selects the exact mixing time at eps = 1e-3.
ChainLawReport chain_law_check(const SpinSystem& sys, const Pinning& pin, int trials,
                               long long burnin, std::uint64_t seed, int threads = 1,
                               long long state_cap = 5000);

}  // namespace spindecay
