#pragma once

// Linear equation systems over orthogonal projection families, the
// finite-dimensional trace <-> rank analogue of the lifting lemmas: integer
// rank assignment closest to real targets, synthesis of exact families near
// approximate ones, and construction of conjugating unitaries.

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "relstab/matrix.hpp"
#include "relstab/spectral.hpp"

namespace relstab {

/// Orthogonal projections attached to one generator / root index each.
struct ProjectionFamily {
  Eigen::Index dim = 0;
  std::vector<cmat> projections;
  std::string label;

  double validate(double tol = 1e-8) const {
    double worst = 0.0;
    cmat sum = cmat::Zero(dim, dim);
    for (std::size_t j = 0; j < projections.size(); ++j) {
      const cmat& p = projections[j];
      worst = std::max(worst, (p * p - p).norm());
      worst = std::max(worst, (p - p.adjoint()).norm());
      for (std::size_t k = j + 1; k < projections.size(); ++k)
        worst = std::max(worst, (p * projections[k]).norm());
      sum += p;
    }
    worst = std::max(worst, (sum - identity(dim)).norm());
    if (worst > tol)
      throw error("ProjectionFamily", "family invariants violated, residual " +
                                          std::to_string(worst));
    return worst;
  }
};

/// Equations between consecutive families: block i holds equations whose left
/// index sets partition family i and whose right index sets partition family
/// i+1.
struct LinearProjectionSystem {
  struct Equation {
    std::vector<int> left, right;
  };
  struct Block {
    int left_family = 0;
    std::vector<Equation> equations;
  };
  std::vector<int> family_sizes;
  std::vector<Block> blocks;

  int families() const { return static_cast<int>(family_sizes.size()); }

  void validate() const {
    if (families() < 1) throw error("LinearProjectionSystem", "no families");
    if (static_cast<int>(blocks.size()) != families() - 1)
      throw error("LinearProjectionSystem",
                  "expected one equation block per consecutive family pair");
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
      if (blocks[b].left_family != b)
        throw error("LinearProjectionSystem", "blocks out of order");
      std::vector<int> seen_l(family_sizes[b], 0), seen_r(family_sizes[b + 1], 0);
      for (const auto& eq : blocks[b].equations) {
        if (eq.left.empty() || eq.right.empty())
          throw error("LinearProjectionSystem", "empty equation side");
        for (int j : eq.left) {
          if (j < 0 || j >= family_sizes[b] || seen_l[j]++)
            throw error("LinearProjectionSystem", "left side not a partition");
        }
        for (int j : eq.right) {
          if (j < 0 || j >= family_sizes[b + 1] || seen_r[j]++)
            throw error("LinearProjectionSystem", "right side not a partition");
        }
      }
      for (int v : seen_l)
        if (v != 1)
          throw error("LinearProjectionSystem", "left side not a partition");
      for (int v : seen_r)
        if (v != 1)
          throw error("LinearProjectionSystem", "right side not a partition");
    }
  }

  json to_json() const {
    json jb = json::array();
    for (const auto& b : blocks) {
      json je = json::array();
      for (const auto& e : b.equations)
        je.push_back(json{{"left", e.left}, {"right", e.right}});
      jb.push_back(json{{"left_family", b.left_family}, {"equations", je}});
    }
    return json{{"family_sizes", family_sizes}, {"blocks", jb}};
  }
};

/// One nonnegative integer rank per slot per family; per-family ranks sum to
/// the dimension and every equation balances.
struct RankVector {
  std::vector<std::vector<long long>> ranks;

  json to_json() const { return json{{"ranks", ranks}}; }

  void validate(const LinearProjectionSystem& sys, long long dim) const {
    if (static_cast<int>(ranks.size()) != sys.families())
      throw error("RankVector", "family count mismatch");
    for (int f = 0; f < sys.families(); ++f) {
      if (static_cast<int>(ranks[f].size()) != sys.family_sizes[f])
        throw error("RankVector", "slot count mismatch");
      long long sum = 0;
      for (long long r : ranks[f]) {
        if (r < 0) throw error("RankVector", "negative rank");
        sum += r;
      }
      if (sum != dim) throw error("RankVector", "family ranks do not sum to dim");
    }
    for (const auto& b : sys.blocks)
      for (const auto& e : b.equations) {
        long long l = 0, r = 0;
        for (int j : e.left) l += ranks[b.left_family][j];
        for (int j : e.right) r += ranks[b.left_family + 1][j];
        if (l != r) throw error("RankVector", "equation rank sums differ");
      }
  }

  long long deviation(const std::vector<std::vector<double>>& targets,
                      long long dim) const = delete;  // use l1_deviation

  double l1_deviation(const std::vector<std::vector<double>>& targets,
                      long long dim) const {
    double dev = 0.0;
    for (std::size_t f = 0; f < ranks.size(); ++f)
      for (std::size_t j = 0; j < ranks[f].size(); ++j)
        dev += std::abs(static_cast<double>(ranks[f][j]) -
                        static_cast<double>(dim) * targets[f][j]);
    return dev;
  }
};

/// The equation system of a chain presentation: for the pair (x_i, x_{i+1})
/// with orders (N_i, N_{i+1}) and exponents (a_i, b_i), the common-eigenvalue
/// classes of (x_i')^{a_i} are the residue classes mod M_i = N_i / a_i =
/// N_{i+1} / b_i, giving one equation per residue.
inline LinearProjectionSystem chain_system(const std::vector<long long>& a,
                                           const std::vector<long long>& b) {
  if (a.empty() || a.size() != b.size())
    throw error("chain_system", "need equally long nonempty exponent lists");
  const int m = static_cast<int>(a.size()) + 1;
  const __int128 cap = static_cast<__int128>(1) << 30;
  std::vector<long long> n(m);
  for (int i = 1; i <= m; ++i) {
    __int128 acc = 1;
    auto mul = [&](long long f) {
      acc *= f;
      if (acc > cap)
        throw error("chain_system", "orders too large for explicit slots");
    };
    for (int j = 1; j <= i - 1; ++j) mul(b[j - 1]);
    for (int j = i; j <= m - 1; ++j) mul(a[j - 1]);
    n[i - 1] = static_cast<long long>(acc);
  }
  LinearProjectionSystem sys;
  for (long long ni : n) sys.family_sizes.push_back(static_cast<int>(ni));
  for (int i = 0; i < m - 1; ++i) {
    if (a[i] < 2 || b[i] < 2) throw error("chain_system", "exponents must be >= 2");
    const long long mi = n[i] / a[i];
    if (mi * a[i] != n[i] || mi * b[i] != n[i + 1])
      throw error("chain_system", "inconsistent chain data");
    LinearProjectionSystem::Block block;
    block.left_family = i;
    for (long long c = 0; c < mi; ++c) {
      LinearProjectionSystem::Equation eq;
      for (long long j = c; j < n[i]; j += mi) eq.left.push_back(static_cast<int>(j));
      for (long long j = c; j < n[i + 1]; j += mi) eq.right.push_back(static_cast<int>(j));
      block.equations.push_back(std::move(eq));
    }
    sys.blocks.push_back(std::move(block));
  }
  sys.validate();
  return sys;
}

// --- integer rank assignment -------------------------------------------------

namespace detail {

/// Min-cost flow with convex per-arc cost |flow - target| on costed arcs,
/// solved by unit-step successive shortest paths (Bellman-Ford, fixed arc
/// order, hence deterministic).
struct ConvexFlow {
  struct Arc {
    int from, to;
    long long cap;
    double target;
    bool costed;
    long long flow = 0;
  };
  int nodes;
  std::vector<Arc> arcs;

  explicit ConvexFlow(int n) : nodes(n) {}

  int add(int from, int to, long long cap, bool costed = false,
          double target = 0.0) {
    arcs.push_back({from, to, cap, target, costed});
    return static_cast<int>(arcs.size()) - 1;
  }

  static double marginal(double target, long long f) {
    if (static_cast<double>(f) >= target) return 1.0;
    if (static_cast<double>(f) + 1.0 <= target) return -1.0;
    return 2.0 * (static_cast<double>(f) - target) + 1.0;
  }

  long long run(int s, int t, long long units) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nodes);
    std::vector<int> pre(nodes), dir(nodes);
    long long sent = 0;
    while (sent < units) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(pre.begin(), pre.end(), -1);
      dist[s] = 0.0;
      for (int round = 0; round < nodes; ++round) {
        bool changed = false;
        for (int ai = 0; ai < static_cast<int>(arcs.size()); ++ai) {
          const Arc& a = arcs[ai];
          if (a.flow < a.cap && dist[a.from] < inf) {
            const double c = a.costed ? marginal(a.target, a.flow) : 0.0;
            if (dist[a.from] + c < dist[a.to] - 1e-12) {
              dist[a.to] = dist[a.from] + c;
              pre[a.to] = ai;
              dir[a.to] = +1;
              changed = true;
            }
          }
          if (a.flow > 0 && dist[a.to] < inf) {
            const double c = a.costed ? -marginal(a.target, a.flow - 1) : 0.0;
            if (dist[a.to] + c < dist[a.from] - 1e-12) {
              dist[a.from] = dist[a.to] + c;
              pre[a.from] = ai;
              dir[a.from] = -1;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (!(dist[t] < inf)) break;
      for (int v = t; v != s;) {
        Arc& a = arcs[pre[v]];
        if (dir[v] > 0) {
          a.flow += 1;
          v = a.from;
        } else {
          a.flow -= 1;
          v = a.to;
        }
      }
      ++sent;
    }
    return sent;
  }
};

/// L1-closest nonnegative integer vector with a fixed sum (unit-step greedy on
/// the separable convex objective; ties resolved toward lower indices).
inline std::vector<long long> round_to_sum(const std::vector<double>& v,
                                           long long total) {
  std::vector<long long> x(v.size(), 0);
  for (long long u = 0; u < total; ++u) {
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double c = ConvexFlow::marginal(std::max(v[j], 0.0), x[j]);
      if (c < best_cost - 1e-12) {
        best_cost = c;
        best = static_cast<int>(j);
      }
    }
    x[best] += 1;
  }
  return x;
}

struct SlotEndpoints {
  // For slot (f, j): equation index within block f (as left) and within
  // block f-1 (as right); -1 when the family is at the boundary.
  std::vector<std::vector<int>> left_eq, right_eq;
};

inline SlotEndpoints slot_endpoints(const LinearProjectionSystem& sys) {
  SlotEndpoints ep;
  const int m = sys.families();
  ep.left_eq.resize(m);
  ep.right_eq.resize(m);
  for (int f = 0; f < m; ++f) {
    ep.left_eq[f].assign(sys.family_sizes[f], -1);
    ep.right_eq[f].assign(sys.family_sizes[f], -1);
  }
  for (int b = 0; b < m - 1; ++b)
    for (int e = 0; e < static_cast<int>(sys.blocks[b].equations.size()); ++e) {
      for (int j : sys.blocks[b].equations[e].left) ep.left_eq[b][j] = e;
      for (int j : sys.blocks[b].equations[e].right) ep.right_eq[b + 1][j] = e;
    }
  return ep;
}

}  // namespace detail

/// Integer ranks closest in l1 to dim*target among all vectors satisfying the
/// RankVector invariants. The system is a path of families coupled by
/// partition equations, so the problem is an exact min-cost flow; unit-step
/// successive shortest paths give the optimum deterministically.
///
/// With tie_first_last set (the hnn-chain constraint), slot j of the first
/// and last family must receive equal ranks. The tied slots are rounded
/// against the averaged targets, the interior families are then solved as a
/// pinned-boundary flow; if that pattern is infeasible the mass falls back to
/// slot 0, which every chain system can route.
inline RankVector nearest_feasible_ranks(
    const LinearProjectionSystem& sys,
    const std::vector<std::vector<double>>& targets, long long dim,
    bool tie_first_last = false) {
  sys.validate();
  if (dim < 1) throw error("nearest_feasible_ranks", "dim must be positive");
  const int m = sys.families();
  if (static_cast<int>(targets.size()) != m)
    throw error("nearest_feasible_ranks", "target family count mismatch");
  for (int f = 0; f < m; ++f) {
    if (static_cast<int>(targets[f].size()) != sys.family_sizes[f])
      throw error("nearest_feasible_ranks", "target slot count mismatch");
    for (double t : targets[f])
      if (!(t >= 0) || !std::isfinite(t))
        throw error("nearest_feasible_ranks", "targets must be >= 0");
  }
  const auto ep = detail::slot_endpoints(sys);

  RankVector out;
  out.ranks.assign(m, {});

  if (!tie_first_last) {
    // Nodes: 0 source, then per-block equation nodes, then sink.
    std::vector<int> block_base(m - 1 >= 0 ? m - 1 : 0);
    int next = 1;
    for (int b = 0; b < m - 1; ++b) {
      block_base[b] = next;
      next += static_cast<int>(sys.blocks[b].equations.size());
    }
    const int sink = next;
    detail::ConvexFlow net(sink + 1);
    std::vector<std::vector<int>> arc_of(m);
    for (int f = 0; f < m; ++f) {
      arc_of[f].resize(sys.family_sizes[f]);
      for (int j = 0; j < sys.family_sizes[f]; ++j) {
        const int from = (f == 0) ? 0 : block_base[f - 1] + ep.right_eq[f][j];
        const int to = (f == m - 1) ? sink : block_base[f] + ep.left_eq[f][j];
        arc_of[f][j] = net.add(from, to, dim, true,
                               static_cast<double>(dim) * targets[f][j]);
      }
    }
    if (m == 1) {
      // Single family: plain sum-constrained rounding.
      std::vector<double> v(targets[0].size());
      for (std::size_t j = 0; j < v.size(); ++j)
        v[j] = static_cast<double>(dim) * targets[0][j];
      out.ranks[0] = detail::round_to_sum(v, dim);
      out.validate(sys, dim);
      return out;
    }
    if (net.run(0, sink, dim) != dim)
      throw error("nearest_feasible_ranks", "system admits no rank vector");
    for (int f = 0; f < m; ++f) {
      out.ranks[f].resize(sys.family_sizes[f]);
      for (int j = 0; j < sys.family_sizes[f]; ++j)
        out.ranks[f][j] = net.arcs[arc_of[f][j]].flow;
    }
    out.validate(sys, dim);
    return out;
  }

  // Tied variant. Requires equal first/last family sizes.
  if (sys.family_sizes.front() != sys.family_sizes.back())
    throw error("nearest_feasible_ranks",
                "tie requires equal first and last family sizes");
  const int nslots = sys.family_sizes.front();
  std::vector<double> z(nslots);
  for (int j = 0; j < nslots; ++j)
    z[j] = 0.5 * static_cast<double>(dim) *
           (targets.front()[j] + targets.back()[j]);

  auto solve_middle = [&](const std::vector<long long>& y,
                          RankVector& result) -> bool {
    result.ranks.assign(m, {});
    result.ranks.front() = y;
    result.ranks.back() = y;
    if (m == 2) return true;  // block equations hold identically
    // Pinned flow: block-0 equation nodes are sources with the class sums of
    // y, block-(m-2) equation nodes are sinks with the corresponding sums.
    std::vector<int> block_base(m - 1);
    int next = 1;
    for (int b = 0; b < m - 1; ++b) {
      block_base[b] = next;
      next += static_cast<int>(sys.blocks[b].equations.size());
    }
    const int sink = next;
    detail::ConvexFlow net(sink + 1);
    for (int e = 0; e < static_cast<int>(sys.blocks[0].equations.size()); ++e) {
      long long t = 0;
      for (int j : sys.blocks[0].equations[e].left) t += y[j];
      net.add(0, block_base[0] + e, t);
    }
    for (int e = 0; e < static_cast<int>(sys.blocks[m - 2].equations.size());
         ++e) {
      long long s = 0;
      for (int j : sys.blocks[m - 2].equations[e].right) s += y[j];
      net.add(block_base[m - 2] + e, sink, s);
    }
    std::vector<std::vector<int>> arc_of(m);
    for (int f = 1; f < m - 1; ++f) {
      arc_of[f].resize(sys.family_sizes[f]);
      for (int j = 0; j < sys.family_sizes[f]; ++j)
        arc_of[f][j] = net.add(block_base[f - 1] + ep.right_eq[f][j],
                               block_base[f] + ep.left_eq[f][j], dim, true,
                               static_cast<double>(dim) * targets[f][j]);
    }
    if (net.run(0, sink, dim) != dim) return false;
    for (int f = 1; f < m - 1; ++f) {
      result.ranks[f].resize(sys.family_sizes[f]);
      for (int j = 0; j < sys.family_sizes[f]; ++j)
        result.ranks[f][j] = net.arcs[arc_of[f][j]].flow;
    }
    return true;
  };

  std::vector<long long> y = detail::round_to_sum(z, dim);
  if (!solve_middle(y, out)) {
    std::vector<long long> fallback(nslots, 0);
    fallback[0] = dim;
    if (!solve_middle(fallback, out))
      throw error("nearest_feasible_ranks",
                  "rank equalization infeasible for this system");
  }
  out.validate(sys, dim);
  return out;
}

// --- synthesis and alignment ---------------------------------------------------

/// Decomposes a valid rank vector into dim unit paths through the family
/// chain: path[c][f] is the slot of family f carried by coordinate c, with
/// consecutive slots always in the same equation class. Deterministic
/// (lowest-index slots first). This is the coordinate layout in which all
/// equations hold pointwise.
inline std::vector<std::vector<int>> decompose_rank_paths(
    const LinearProjectionSystem& sys, const RankVector& ranks,
    long long dim) {
  ranks.validate(sys, dim);
  const int m = sys.families();
  const auto ep = detail::slot_endpoints(sys);
  auto remaining = ranks.ranks;
  std::vector<std::vector<int>> paths(
      static_cast<std::size_t>(dim), std::vector<int>(m, -1));
  for (long long c = 0; c < dim; ++c) {
    auto& path = paths[static_cast<std::size_t>(c)];
    for (int cand = 0; cand < sys.family_sizes[0]; ++cand)
      if (remaining[0][cand] > 0) {
        path[0] = cand;
        break;
      }
    if (path[0] < 0)
      throw error("decompose_rank_paths", "flow decomposition failed");
    remaining[0][path[0]] -= 1;
    for (int b = 0; b < m - 1; ++b) {
      const auto& eq = sys.blocks[b].equations[ep.left_eq[b][path[b]]];
      for (int cand : eq.right)
        if (remaining[b + 1][cand] > 0) {
          path[b + 1] = cand;
          break;
        }
      if (path[b + 1] < 0)
        throw error("decompose_rank_paths", "flow decomposition failed");
      remaining[b + 1][path[b + 1]] -= 1;
    }
  }
  return paths;
}

/// Families of coordinate projections in a common frame, laid out along the
/// unit paths of the rank vector, so that every equation of the system holds
/// as an exact matrix identity.
inline std::vector<ProjectionFamily> synthesize_aligned_families(
    const LinearProjectionSystem& sys, const RankVector& ranks,
    const cmat& basis) {
  require_unitary(basis, 1e-10, "synthesize_aligned_families");
  const Eigen::Index n = basis.rows();
  const auto paths = decompose_rank_paths(sys, ranks, n);
  std::vector<ProjectionFamily> out;
  for (int f = 0; f < sys.families(); ++f) {
    ProjectionFamily fam;
    fam.dim = n;
    for (int j = 0; j < sys.family_sizes[f]; ++j) {
      cmat p = cmat::Zero(n, n);
      for (Eigen::Index c = 0; c < n; ++c)
        if (paths[static_cast<std::size_t>(c)][f] == j)
          p += basis.col(c) * basis.col(c).adjoint();
      fam.projections.push_back(std::move(p));
    }
    out.push_back(std::move(fam));
  }
  return out;
}

/// Coordinate projections in a chosen frame: basis * (0/1 diagonal blocks in
/// index order) * basis^*.
inline ProjectionFamily synthesize_family(const std::vector<long long>& ranks,
                                          const cmat& basis) {
  require_unitary(basis, 1e-10, "synthesize_family");
  const Eigen::Index n = basis.rows();
  long long total = 0;
  for (long long r : ranks) total += r;
  if (total != n)
    throw error("synthesize_family", "ranks do not sum to the dimension");
  ProjectionFamily fam;
  fam.dim = n;
  Eigen::Index off = 0;
  for (long long r : ranks) {
    const cmat cols = basis.middleCols(off, r);
    fam.projections.push_back(cols * cols.adjoint());
    off += r;
  }
  return fam;
}

namespace detail {

/// Top-`rank` eigenvectors of the Hermitian average (p + p*)/2, as columns.
inline cmat dominant_eigvecs(const cmat& p, Eigen::Index rank) {
  const Eigen::Index n = p.rows();
  if (rank == 0) return cmat(n, 0);
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (p + p.adjoint()));
  if (es.info() != Eigen::Success)
    throw error("dominant_eigvecs", "eigensolver failed");
  return es.eigenvectors().rightCols(rank);
}

/// Orthonormalizes candidate columns by modified Gram-Schmidt in slot order;
/// columns that become (numerically) dependent are replaced by standard-basis
/// completions, keeping the procedure deterministic.
inline std::vector<cmat> orthonormalize_slots(
    const std::vector<cmat>& candidates, Eigen::Index n) {
  std::vector<cmat> out;
  cmat accepted(n, 0);
  auto append = [&](cvec w) -> bool {
    w -= accepted * (accepted.adjoint() * w).eval();
    w -= accepted * (accepted.adjoint() * w).eval();  // re-orthogonalize once
    const double norm = w.norm();
    if (norm <= 1e-8) return false;
    accepted.conservativeResize(Eigen::NoChange, accepted.cols() + 1);
    accepted.col(accepted.cols() - 1) = w / norm;
    return true;
  };
  for (const cmat& cand : candidates) {
    const Eigen::Index r = cand.cols();
    const Eigen::Index start = accepted.cols();
    for (Eigen::Index c = 0; c < r; ++c) {
      if (append(cand.col(c))) continue;
      bool filled = false;
      for (Eigen::Index i = 0; i < n && !filled; ++i) {
        cvec e = cvec::Zero(n);
        e(i) = 1.0;
        filled = append(e);
      }
      if (!filled)
        throw error("orthonormalize_slots", "failed to complete a basis");
    }
    out.push_back(accepted.middleCols(start, r));
  }
  return out;
}

}  // namespace detail

/// Exact families (as orthonormal slot bases) satisfying every equation of
/// the system matrix-identically with the prescribed ranks, built by the
/// sequential corner procedure: family 1 is rounded slot-by-slot (dominant
/// eigenvectors, modified Gram-Schmidt in slot order), then inside each
/// equation's left-sum subspace the right-family slots are peeled off one at
/// a time, each taking the dominant directions of its approximate projection
/// compressed to the remaining corner.
inline std::vector<std::vector<cmat>> align_system_bases(
    const LinearProjectionSystem& sys,
    const std::vector<std::vector<cmat>>& approx, const RankVector& ranks,
    const std::vector<cmat>* first_family_candidates = nullptr) {
  sys.validate();
  const int m = sys.families();
  if (static_cast<int>(approx.size()) != m)
    throw error("align_system", "family count mismatch");
  const Eigen::Index n = approx[0].empty() ? 0 : approx[0][0].rows();
  long long total = 0;
  for (long long r : ranks.ranks[0]) total += r;
  if (total != n) throw error("align_system", "family-1 ranks must sum to dim");

  std::vector<std::vector<cmat>> bases(m);

  // Family 1: dominant eigenvectors per slot, orthonormalized in slot order.
  // Callers that already hold spanning columns per slot can pass them as
  // candidates; columns beyond the prescribed rank are dropped, missing ones
  // are completed inside the orthonormalization.
  {
    std::vector<cmat> cands;
    for (int j = 0; j < sys.family_sizes[0]; ++j) {
      const Eigen::Index rho = ranks.ranks[0][j];
      if (first_family_candidates) {
        const cmat& given = (*first_family_candidates)[j];
        cmat c(n, rho);
        const Eigen::Index have = std::min<Eigen::Index>(given.cols(), rho);
        c.leftCols(have) = given.leftCols(have);
        if (have < rho)
          c.rightCols(rho - have).setZero();  // completed during MGS
        cands.push_back(std::move(c));
      } else {
        cands.push_back(detail::dominant_eigvecs(approx[0][j], rho));
      }
    }
    bases[0] = detail::orthonormalize_slots(cands, n);
  }

  for (int b = 0; b < m - 1; ++b) {
    bases[b + 1].assign(sys.family_sizes[b + 1], cmat(n, 0));
    for (std::size_t e = 0; e < sys.blocks[b].equations.size(); ++e) {
      const auto& eq = sys.blocks[b].equations[e];
      Eigen::Index corner_rank = 0;
      for (int j : eq.left) corner_rank += bases[b][j].cols();
      cmat remaining(n, corner_rank);
      {
        Eigen::Index off = 0;
        for (int j : eq.left) {
          remaining.middleCols(off, bases[b][j].cols()) = bases[b][j];
          off += bases[b][j].cols();
        }
      }
      long long right_total = 0;
      for (int j : eq.right) right_total += ranks.ranks[b + 1][j];
      if (right_total != corner_rank)
        throw error("align_system",
                    "rank infeasible within corner of block " +
                        std::to_string(b) + ", equation " + std::to_string(e));
      for (std::size_t pos = 0; pos < eq.right.size(); ++pos) {
        const int j = eq.right[pos];
        const Eigen::Index rho = ranks.ranks[b + 1][j];
        if (pos + 1 == eq.right.size()) {
          if (remaining.cols() != rho)
            throw error("align_system", "corner accounting failed");
          bases[b + 1][j] = remaining;
          break;
        }
        if (rho == 0) {
          bases[b + 1][j] = cmat(n, 0);
          continue;
        }
        const cmat compressed =
            remaining.adjoint() *
            (0.5 * (approx[b + 1][j] + approx[b + 1][j].adjoint())) * remaining;
        Eigen::SelfAdjointEigenSolver<cmat> es(compressed);
        if (es.info() != Eigen::Success)
          throw error("align_system", "corner eigensolver failed");
        bases[b + 1][j] = remaining * es.eigenvectors().rightCols(rho);
        remaining =
            (remaining * es.eigenvectors().leftCols(remaining.cols() - rho))
                .eval();
      }
    }
  }
  return bases;
}

inline std::vector<ProjectionFamily> align_system(
    const LinearProjectionSystem& sys,
    const std::vector<ProjectionFamily>& approx, const RankVector& ranks) {
  std::vector<std::vector<cmat>> raw;
  for (const auto& fam : approx) raw.push_back(fam.projections);
  const auto bases = align_system_bases(sys, raw, ranks);
  std::vector<ProjectionFamily> out;
  for (std::size_t f = 0; f < bases.size(); ++f) {
    ProjectionFamily fam;
    fam.dim = approx[f].dim;
    fam.label = approx[f].label;
    for (const auto& c : bases[f]) fam.projections.push_back(c * c.adjoint());
    out.push_back(std::move(fam));
  }
  return out;
}

/// Unitary V with V P_k V* = Q_k for all k, built by compressing the hint X
/// to sum_k Q_k X P_k and taking the polar unitary inside each
/// (range P_k -> range Q_k) block, with the deterministic kernel completion
/// of polar_decompose. Requires rank(P_k) = rank(Q_k).
inline cmat conjugating_unitary_bases(const std::vector<cmat>& p_bases,
                                      const std::vector<cmat>& q_bases,
                                      const cmat& hint) {
  if (p_bases.size() != q_bases.size())
    throw error("conjugating_unitary", "families have different lengths");
  const Eigen::Index n = hint.rows();
  cmat v = cmat::Zero(n, n);
  for (std::size_t k = 0; k < p_bases.size(); ++k) {
    if (p_bases[k].cols() != q_bases[k].cols())
      throw error("conjugating_unitary",
                  "rank mismatch at slot " + std::to_string(k));
    if (p_bases[k].cols() == 0) continue;
    const cmat block = q_bases[k].adjoint() * hint * p_bases[k];
    v += q_bases[k] * polar_unitary(block) * p_bases[k].adjoint();
  }
  return v;
}

inline cmat basis_of_projection(const cmat& p) {
  const double t = std::real(p.trace());
  const auto rank = static_cast<Eigen::Index>(std::llround(t));
  return detail::dominant_eigvecs(p, rank);
}

inline cmat conjugating_unitary(const ProjectionFamily& p,
                                const ProjectionFamily& q, const cmat& hint) {
  std::vector<cmat> pb, qb;
  for (const auto& proj : p.projections) pb.push_back(basis_of_projection(proj));
  for (const auto& proj : q.projections) qb.push_back(basis_of_projection(proj));
  return conjugating_unitary_bases(pb, qb, hint);
}

}  // namespace relstab
