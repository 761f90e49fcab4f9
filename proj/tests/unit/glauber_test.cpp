#include <doctest.h>

#include "spindecay/errors.hpp"
#include "spindecay/glauber.hpp"

using namespace spindecay;
using doctest::Approx;

TEST_CASE("ergodicity condition") {
  const SpinSystem tight(ColoringInstance::full(make_path(3), 3));
  CHECK_THROWS_AS(check_ergodicity(tight, Pinning(3)), DomainError);
  const SpinSystem ok(ColoringInstance::full(make_path(3), 4));
  CHECK_NOTHROW(check_ergodicity(ok, Pinning(3)));
  // an isolated free vertex only needs one color
  CHECK_NOTHROW(check_ergodicity(tight, Pinning::from_map(3, {{0, 0}, {2, 1}})));
}

TEST_CASE("heat bath draws by inverse CDF") {
  const SpinSystem sys(ColoringInstance::full(make_path(3), 4));
  const std::vector<int> x{0, 1, 2};
  // vertex 1 sees colors 0 and 2, so 1 and 3 remain
  CHECK(heat_bath_color(sys, x, 1, 0.1) == 1);
  CHECK(heat_bath_color(sys, x, 1, 0.9) == 3);
}

TEST_CASE("transition matrix is stochastic and reversible") {
  const SpinSystem sys(PottsInstance{make_cycle(4), 3, 0.3});
  const auto tm = transition_matrix(sys, Pinning(4));
  CHECK(stationarity_error(tm) < 1e-14);
  const Eigen::MatrixXd P(tm.P);
  for (int i = 0; i < P.rows(); ++i) CHECK(P.row(i).sum() == Approx(1.0));
  for (int i = 0; i < P.rows(); ++i)
    for (int j = 0; j < P.rows(); ++j)
      CHECK(tm.stationary.prob[i] * P(i, j) == Approx(tm.stationary.prob[j] * P(j, i)).epsilon(1e-12));
  const auto gap = spectral_gap(tm);
  CHECK(gap.gap > 0);
  CHECK(gap.lambda2 < 1);
}

TEST_CASE("exact TV series decreases to the threshold") {
  const SpinSystem sys(ColoringInstance::full(make_cycle(4), 5));
  const auto tm = transition_matrix(sys, Pinning(4));
  const auto tv = exact_tv_series(tm, 60);
  for (std::size_t t = 1; t < tv.size(); ++t) CHECK(tv[t] <= tv[t - 1] + 1e-15);
  const int t_mix = exact_mixing_time(tm, 0.25);
  CHECK(tv[t_mix] <= 0.25);
  CHECK(tv[t_mix - 1] > 0.25);
  CHECK(exact_mixing_time(tm, 1.0) == 0);
}

TEST_CASE("more colors mix faster on the 4-cycle") {
  const auto slow = exact_mixing_time(SpinSystem(ColoringInstance::full(make_cycle(4), 5)), Pinning(4), 0.25);
  const auto fast = exact_mixing_time(SpinSystem(ColoringInstance::full(make_cycle(4), 9)), Pinning(4), 0.25);
  CHECK(fast <= slow);
}

TEST_CASE("chains are reproducible") {
  const SpinSystem sys(ColoringInstance::full(make_dary_tree(2, 3), 5));
  GlauberChain a(sys, Pinning(sys.n()), 7), b(sys, Pinning(sys.n()), 7);
  a.run(500);
  b.run(500);
  CHECK(a.coloring() == b.coloring());
  CHECK(a.steps() == 500);
  ChainState s{greedy_coloring(sys, Pinning(sys.n())), 0, Rng(7, 0)};
  for (int i = 0; i < 500; ++i) s = glauber_step(sys, Pinning(sys.n()), s);
  for (int v = 0; v < sys.n(); ++v)
    for (int u : sys.graph().neighbors(v)) CHECK(s.coloring[u] != s.coloring[v]);
}

TEST_CASE("coalescence and law checks") {
  const SpinSystem sys(ColoringInstance::full(make_path(4), 4));
  const auto rep = coalescence_estimate(sys, Pinning(4), 40, 3);
  CHECK(rep.timeouts == 0);
  CHECK(rep.t_mix > 0);
  const auto law = chain_law_check(sys, Pinning(4), 10000, 0, 4);
  CHECK(law.chi.pass);
  CHECK(law.burnin > 0);
}
