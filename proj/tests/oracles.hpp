#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <functional>
#include <vector>

#include "relstab/projection_system.hpp"
#include "relstab/rng.hpp"

namespace relstab::testing {

/// Exhaustive search over feasible rank vectors: enumerates family 0 freely,
/// then each following family class-by-class against the forced class sums.
/// Returns the optimal |.|_1 deviation, or -1 if no feasible vector exists.
inline double brute_force_best_deviation(
    const LinearProjectionSystem& sys,
    const std::vector<std::vector<double>>& targets, long long dim,
    bool tie_first_last = false) {
  const int m = sys.families();
  double best = -1.0;
  std::vector<std::vector<long long>> current(m);

  std::function<void(int)> descend_family = [&](int f) {
    if (f == m) {
      if (tie_first_last && current.front() != current.back()) return;
      double dev = 0.0;
      for (int ff = 0; ff < m; ++ff)
        for (std::size_t j = 0; j < current[ff].size(); ++j)
          dev += std::abs(static_cast<double>(current[ff][j]) -
                          static_cast<double>(dim) * targets[ff][j]);
      if (best < 0 || dev < best) best = dev;
      return;
    }
    const int slots = sys.family_sizes[f];
    current[f].assign(slots, 0);
    if (f == 0) {
      std::function<void(int, long long)> fill = [&](int j, long long left) {
        if (j == slots - 1) {
          current[f][j] = left;
          descend_family(f + 1);
          return;
        }
        for (long long r = 0; r <= left; ++r) {
          current[f][j] = r;
          fill(j + 1, left - r);
        }
      };
      fill(0, dim);
      return;
    }
    const auto& block = sys.blocks[f - 1];
    std::function<void(std::size_t)> fill_class = [&](std::size_t e) {
      if (e == block.equations.size()) {
        descend_family(f + 1);
        return;
      }
      const auto& eq = block.equations[e];
      long long needed = 0;
      for (int j : eq.left) needed += current[f - 1][j];
      const int cslots = static_cast<int>(eq.right.size());
      std::function<void(int, long long)> fill = [&](int idx, long long left) {
        if (idx == cslots - 1) {
          current[f][eq.right[idx]] = left;
          fill_class(e + 1);
          return;
        }
        for (long long r = 0; r <= left; ++r) {
          current[f][eq.right[idx]] = r;
          fill(idx + 1, left - r);
        }
      };
      fill(0, needed);
    };
    fill_class(0);
  };
  descend_family(0);
  return best;
}

inline std::vector<std::vector<double>> random_targets(
    const LinearProjectionSystem& sys, Rng& rng) {
  std::vector<std::vector<double>> t(sys.families());
  for (int f = 0; f < sys.families(); ++f) {
    t[f].resize(sys.family_sizes[f]);
    for (auto& v : t[f]) v = rng.uniform();
  }
  return t;
}

}  // namespace relstab::testing
