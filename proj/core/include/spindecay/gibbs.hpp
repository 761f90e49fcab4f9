#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <utility>
#include <vector>

#include "spindecay/instance.hpp"
#include "spindecay/tree.hpp"

namespace spindecay {

// Exact distribution over all extensions of a pinning. States are stored as
// full colorings, one row of n bytes each.
struct GibbsTable {
  int n = 0;
  int q = 0;
  std::vector<int> free_vertices;
  std::vector<std::uint8_t> states;
  std::vector<double> prob;

  std::size_t size() const { return prob.size(); }
  int color(std::size_t s, int v) const { return states[s * n + v]; }
  const std::uint8_t* row(std::size_t s) const { return states.data() + s * n; }
  Dist marginal(int v) const;
  std::vector<Dist> marginals() const;
  // joint law of the given vertices, keyed by their colors
  std::vector<std::pair<std::vector<int>, double>> joint(const std::vector<int>& vertices) const;
  std::size_t sample(Rng& rng) const;

  nlohmann::json to_json() const;
};

GibbsTable enumerate_gibbs(const SpinSystem& sys, const Pinning& pin,
                           long long state_cap = 1000000);
// restrict to states with v = c and drop v from the free set
GibbsTable condition(const GibbsTable& t, int v, int c);
GibbsTable condition(const GibbsTable& t, const std::vector<std::pair<int, int>>& pins);

struct InfluenceMatrix {
  std::vector<std::pair<int, int>> index;  // (vertex, color)
  Eigen::MatrixXd entries;

  nlohmann::json to_json() const;
};

InfluenceMatrix influence_matrix(const GibbsTable& t);
InfluenceMatrix influence_matrix(const SpinSystem& sys, const Pinning& pin,
                                 long long state_cap = 1000000);
// square sub-block of rows owned by u and columns owned by v
Eigen::MatrixXd influence_block(const InfluenceMatrix& m, int u, int v);

struct SpectralReport {
  double lambda_max = 0;
  double lambda_power = 0;  // shifted power iteration cross-check
  double max_imag = 0;
  bool real_spectrum = true;
  int dimension = 0;
};

SpectralReport spectral_report(const InfluenceMatrix& m);
double spectral_independence(const SpinSystem& sys, const Pinning& pin,
                             long long state_cap = 1000000);
double infinity_norm(const Eigen::MatrixXd& m);

double tv_distance(const Dist& a, const Dist& b);

struct W1Result {
  double exact = 0;
  bool exact_computed = false;
  double lower = 0;
  double upper = 0;
};

// Minimum-cost transport between two mass vectors; returns the optimal cost.
double transport_cost(std::vector<double> supply, std::vector<double> demand,
                      const std::vector<std::vector<int>>& cost);

W1Result w1_hamming(const GibbsTable& a, const GibbsTable& b, std::size_t support_cap = 2000);

double influence_decay_at_R(const GibbsTable& t, int u, int R, const Graph& g);
double influence_decay_at_R(const SpinSystem& sys, const Pinning& pin, int u, int R,
                            long long state_cap = 1000000);

struct SumInflReport {
  double lhs = 0;  // max over color pairs
  double rhs = 0;
  double min_slack = 0;
  bool holds = true;
  bool exact_max = true;  // false when sphere pinnings were sampled
  int sphere_pinnings = 0;
  double sphere_tv = 0;  // max over pairs of TV on S(u,K)
  double center_rhs = 0;
  bool ratios_within_2 = true;
  bool ball_is_tree = false;
  bool center_holds = true;

  nlohmann::json to_json() const;
};

SumInflReport check_sum_infl_inequality(const SpinSystem& sys, const Pinning& pin, int u, int R,
                                        int K, long long state_cap = 1000000,
                                        std::uint64_t seed = 0);

}  // namespace spindecay
