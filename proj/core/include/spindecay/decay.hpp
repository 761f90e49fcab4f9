#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "spindecay/gibbs.hpp"
#include "spindecay/jacobian.hpp"

namespace spindecay {

struct DecayProfile {
  std::string kind;  // ssm, wsm, tid
  std::vector<int> distances;
  std::vector<double> values;
  std::vector<std::string> modes;  // per distance: exact, heuristic, empty, point
  double fitted_rate = 0;
  double fit_residual = 0;
  bool fitted = false;

  bool strictly_decreasing() const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Least squares on log values against distance over strictly positive values.
std::pair<double, double> fit_rate(const std::vector<int>& distances,
                                   const std::vector<double>& values);

enum class SearchStrategy { automatic, exact, heuristic };
SearchStrategy parse_strategy(const std::string& s);

struct SearchOptions {
  SearchStrategy strategy = SearchStrategy::automatic;
  double exact_pair_cap = 1e6;
  int random_pairs = 200;
  int flip_rounds = 0;  // 0 selects 20 flips per sphere vertex, at most 20000
  std::uint64_t seed = 0;
  int threads = 1;
};

// Max over pairs of full pinnings of S(r, l) of the TV between root marginals.
double sphere_pair_max(const SpinSystem& sys, const RootedTree& tree, int depth,
                       const SearchOptions& opt, std::string* mode = nullptr);

DecayProfile ssm_profile(const SpinSystem& sys, int r, const std::vector<int>& depths,
                         const SearchOptions& opt = {});
DecayProfile wsm_profile_potts(const Graph& tree, int q, double beta, int r,
                               const std::vector<int>& depths, const SearchOptions& opt = {});
DecayProfile tid_profile(const SpinSystem& sys, const Pinning& pin, int u,
                         const std::vector<int>& depths, long long state_cap = 1000000);

struct ConstantsReport {
  double C_SM = 0;
  double C_SI = 0;
  double C_INFL = 0;
  double C_SM_root = 0;  // with the root-level factor 17 / (w (1 - delta))
  double delta_used = 0;
  double w_max = 1;
  double w_min = 1;
  double lower_marginal = 0;  // L*
  double upper_marginal = 0;  // B*
  std::string regime;
  nlohmann::json meta;

  nlohmann::json to_json() const;
};

ConstantsReport constants_report(double w_max, double w_min, double lower_marginal,
                                 double upper_marginal, double delta, double q,
                                 const Potential& pot);
// weights and marginal bounds assembled for a family
ConstantsReport constants_for_family(const FamilySpec& spec, double delta);

struct EpsDeltaConstants {
  double eps = 0;
  int Delta = 0;
  double q = 0;
  double rate = 0;
  double delta = 0;
  double upper_marginal = 0;
  double lower_marginal = 0;
  double C_SM = 0;
  double C_SM_closed = 0;
  double C_INFL = 0;
  double C_INFL_closed = 0;
  bool in_regime = false;

  nlohmann::json to_json() const;
};

EpsDeltaConstants eps_delta_constants(double eps, int Delta);

struct OneStepReport {
  int trials = 0;
  int violations = 0;
  double max_ratio = 0;  // lhs / rhs over trials with rhs > 0
  double delta_hat = 0;

  nlohmann::json to_json() const;
};

// Random trees of max degree Delta, full q-colorings, pinning pairs on a common
// set at distance >= 2 from a root with at most Delta - 1 children.
OneStepReport one_step_contraction(int q, int Delta, int trials, double delta_hat,
                                   std::uint64_t seed, int threads = 1);

struct InflJacobianCheck {
  double literal_residual = 0;
  double corrected_residual = 0;
  Eigen::MatrixXd oracle;
  Eigen::MatrixXd literal;
  Eigen::MatrixXd corrected;
};

// Influence of root r on its child u against the scaled potential Jacobian,
// as printed and with the projection (I - 1 p_u^T). Needs full lists.
InflJacobianCheck infl_jacobian_check(const SpinSystem& sys, const Pinning& pin, int r, int u);

}  // namespace spindecay
