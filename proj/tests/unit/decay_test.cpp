#include <doctest.h>

#include <cmath>

#include "spindecay/decay.hpp"
#include "spindecay/errors.hpp"

using namespace spindecay;
using doctest::Approx;

TEST_CASE("rate fit on an exact geometric sequence") {
  const auto [rate, residual] = fit_rate({1, 2, 3, 4}, {0.5, 0.25, 0.125, 0.0625});
  CHECK(rate == Approx(0.5));
  CHECK(residual < 1e-12);
  CHECK_THROWS(fit_rate({1, 2}, {0.5, 0.25}));
}

TEST_CASE("strategies") {
  CHECK(parse_strategy("auto") == SearchStrategy::automatic);
  CHECK(parse_strategy("heuristic") == SearchStrategy::heuristic);
  CHECK_THROWS(parse_strategy("greedy"));
}

TEST_CASE("influence decay on the binary tree with six colors") {
  // each edge transmits 1/(q-1) and the sphere at distance l has 2^l vertices
  const SpinSystem sys(ColoringInstance::full(make_dary_tree(2, 6), 6));
  const auto p = tid_profile(sys, Pinning(sys.n()), 0, {1, 2, 3, 4, 5, 6});
  for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(p.values[i] == Approx(std::pow(0.4, i + 1)).epsilon(1e-9));
  CHECK(p.fitted_rate == Approx(0.4));
}

TEST_CASE("SSM search: heuristic never exceeds exact") {
  const SpinSystem sys(ColoringInstance::full(make_dary_tree(2, 3), 4));
  const auto tree = RootedTree::from_graph(sys.graph(), 0);
  SearchOptions exact, heur;
  exact.strategy = SearchStrategy::exact;
  heur.strategy = SearchStrategy::heuristic;
  for (int depth = 1; depth <= 2; ++depth) {
    std::string mode;
    const double e = sphere_pair_max(sys, tree, depth, exact, &mode);
    CHECK(mode == "exact");
    CHECK(sphere_pair_max(sys, tree, depth, heur) <= e + 1e-12);
  }
  const auto p = ssm_profile(sys, 0, {0, 1, 2, 3, 4});
  CHECK(p.values.front() == 1.0);
  CHECK(p.values.back() == 0.0);
}

TEST_CASE("SSM on a path with three colors") {
  // each edge halves the disagreement
  const SpinSystem sys(ColoringInstance::full(make_path(5), 3));
  const auto p = ssm_profile(sys, 0, {1, 2, 3});
  CHECK(p.values[0] == Approx(0.5));
  CHECK(p.values[1] == Approx(0.25));
  CHECK(p.values[2] == Approx(0.125));
}

TEST_CASE("constants") {
  const auto c = constants_for_family({Family::coloring, 6, 3, 0.0}, 0.5);
  CHECK(c.upper_marginal == Approx(1.0 / 3.0));
  CHECK(c.lower_marginal == Approx((1.0 / 6.0) * std::pow(1 - 1.0 / 3.0, 3)));
  CHECK(c.C_SM > 0);
  CHECK(c.C_INFL >= c.C_SM);
  const auto p = constants_for_family({Family::potts, 7, 3, 0.25}, 0.5);
  CHECK(p.lower_marginal == Approx(std::pow(0.25, 3) / (std::pow(0.25, 3) + 6)));
  const auto e = eps_delta_constants(0.5, 3);
  CHECK(e.C_SM <= e.C_SM_closed);
  CHECK(e.C_INFL <= e.C_INFL_closed);
}

TEST_CASE("one-step contraction") {
  const auto r = one_step_contraction(6, 3, 200, 0.5, 3);
  CHECK(r.violations == 0);
  CHECK(r.max_ratio < 0.5);
}

TEST_CASE("influence against the scaled Jacobian on an unpinned star") {
  const SpinSystem sys(ColoringInstance::full(make_dary_tree(3, 1), 5));
  const auto chk = infl_jacobian_check(sys, Pinning(4), 0, 1);
  CHECK(chk.literal_residual < 1e-10);
  CHECK(chk.corrected_residual < 1e-10);
}
