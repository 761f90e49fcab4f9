#pragma once

#include <vector>

#include "spindecay/instance.hpp"

// Plain product-space enumeration, independent of the library's oracle.
inline std::vector<std::vector<double>> brute_marginals(const spindecay::SpinSystem& sys,
                                                        const spindecay::Pinning& pin) {
  const int n = sys.n(), q = sys.q();
  std::vector<std::vector<double>> m(n, std::vector<double>(q, 0.0));
  std::vector<int> x(n, 0);
  double total = 0;
  for (;;) {
    double w = 1;
    for (int v = 0; v < n && w > 0; ++v) {
      if (!sys.allowed(v, x[v]) || (pin.pinned(v) && pin.color(v) != x[v])) w = 0;
      for (int u : sys.graph().neighbors(v))
        if (u > v) w *= sys.pair_weight(x[u], x[v]);
    }
    if (w > 0) {
      total += w;
      for (int v = 0; v < n; ++v) m[v][x[v]] += w;
    }
    int i = 0;
    while (i < n && ++x[i] == q) x[i++] = 0;
    if (i == n) break;
  }
  for (auto& row : m)
    for (double& p : row) p /= total;
  return m;
}
