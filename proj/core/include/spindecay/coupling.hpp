#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spindecay/gibbs.hpp"
#include "spindecay/instance.hpp"
#include "spindecay/rng.hpp"

namespace spindecay {

struct CouplingEvent {
  int vertex = -1;
  int depth = 0;
  std::string kind;  // match, mismatch, ball, fresh
};

struct CouplingOutcome {
  std::vector<int> x;  // full colorings, pinned vertices included
  std::vector<int> y;
  int hamming = 0;  // disagreements on free vertices other than u
  bool depth_exceeded = false;
  std::vector<CouplingEvent> trace;

  nlohmann::json to_json() const;
};

// Maximal coupling: second coordinate given the first.
int maximal_coupling_partner(const Dist& p, const Dist& q, int a, Rng& rng);

struct CouplingOptions {
  int R = 2;
  int depth_cap = 40;
  long long state_cap = 1000000;
};

// Exact conditional laws for a fixed base pinning, by tree recursion when the
// graph is a tree and by filtering one enumeration otherwise.
class ConditionalOracle {
 public:
  ConditionalOracle(const SpinSystem& sys, const Pinning& base, long long state_cap = 1000000);

  const SpinSystem& system() const { return *sys_; }
  const Pinning& base() const { return base_; }
  bool uses_tree() const { return tree_.has_value(); }

  Dist marginal(const Pinning& tau, int v) const;
  std::vector<int> sample(const Pinning& tau, Rng& rng) const;
  bool feasible(const Pinning& tau) const;

 private:
  GibbsTable restrict(const Pinning& tau) const;

  const SpinSystem* sys_;
  Pinning base_;
  std::optional<RootedTree> tree_;
  std::optional<GibbsTable> table_;
};

CouplingOutcome local_couple(const ConditionalOracle& oracle, int u, int b, int c,
                                  const CouplingOptions& opt, std::uint64_t seed,
                                  std::uint64_t stream = 0);
CouplingOutcome local_couple(const SpinSystem& sys, const Pinning& pin, int u, int b, int c,
                                  int R, std::uint64_t seed, int depth_cap = 40);

struct CouplingSummary {
  int trials = 0;
  int completed = 0;
  int discarded = 0;
  double mean_hamming = 0;
  double stderr_hamming = 0;
  std::vector<CouplingOutcome> outcomes;

  nlohmann::json to_json() const;  // summary fields only
};

CouplingSummary run_couplings(const ConditionalOracle& oracle, int u, int b, int c,
                              const CouplingOptions& opt, int trials, std::uint64_t seed,
                              int threads = 1);

// D(k, l) <= D(k-1, l-1) + (eps/l)(max_m D(k-1, m) + 1), D(., 0) = D(0, .) = DeltaR
std::vector<std::vector<double>> d_recursion_table(int k_max, int DeltaR, double eps);
double d_recursion(int k, int ell, int DeltaR, double eps);
double d_closed_bound(int ell, int DeltaR, double eps);
double harmonic(int n);

struct ParameterChoice {
  int R = 0;
  int K = 0;
  int girth = 0;
  double lhs = 0;
  double target = 0;
  bool verified = false;
  bool verified_next_K = false;

  nlohmann::json to_json() const;
};

ParameterChoice parameter_search(double C_sm, double C_infl, double delta, int Delta,
                                 int search_cap = 100000);

}  // namespace spindecay
