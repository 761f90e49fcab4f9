#pragma once

#include <optional>
#include <vector>

#include "spindecay/graph.hpp"
#include "spindecay/instance.hpp"

namespace spindecay {

using Dist = std::vector<double>;

struct SubDistribution {
  Dist values;
  double cap = 1.0;

  bool valid(double tol = 1e-12) const;
};

// Row v holds μ_v; pinned vertices hold their point mass.
struct MarginalTable {
  std::vector<Dist> rows;
  std::vector<char> free;
};

// Children vectors are over the full palette [q]; output is zero off the root list.
Dist recursion_step_coloring(const std::vector<int>& root_list, int q,
                             const std::vector<Dist>& children);
Dist recursion_step_potts(int q, double beta, const std::vector<Dist>& children);

// Shared form: allowed colors, factors 1 - theta * p_i(c).
Dist recursion_step(const std::vector<int>& root_list, int q, double theta,
                    const std::vector<Dist>& children);

// Marginal of every vertex within its own subtree (point mass when pinned).
std::vector<Dist> subtree_marginals(const SpinSystem& sys, const RootedTree& tree,
                                    const Pinning& pin);
MarginalTable exact_tree_marginals(const SpinSystem& sys, const RootedTree& tree,
                                   const Pinning& pin);

// Conditional distribution of child given the parent's color, from subtree marginals.
Dist child_given_parent(const SpinSystem& sys, const Dist& child_subtree, int parent_color);

// One exact sample of a full configuration under the pinning.
std::vector<int> sample_tree(const SpinSystem& sys, const RootedTree& tree, const Pinning& pin,
                             Rng& rng);

double bound_one_level(double gamma);
double bound_two_level_odds(int q_r, int d_r, double gamma);
double bound_two_level_cap(int q_r, int d_r, double gamma);
double bound_lower(int q, double gamma, int d_v);
double bound_potts_two_level(int q, double beta, int Delta_r, int d_r);
double xi(double gamma, int d_v, int q_v);

// Free vertices whose subtree marginal exceeds a cap, leaves first. The cap at v
// is min(1/gamma, two-level cap) computed from v's own (q_v, d_v) in its subtree.
std::optional<int> first_cap_violation(const SpinSystem& sys, const RootedTree& tree,
                                       const Pinning& pin, double gamma, double tol = 1e-12);

}  // namespace spindecay
