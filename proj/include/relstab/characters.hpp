#pragma once

// Finite-dimensional character machinery: Cayley-table groups built from
// permutation generators, centers and central characters, Frobenius-induced
// traces from central subgroups, clock-and-shift representations of the
// discrete Heisenberg group, tensor-power approximation of the delta_e
// character, exact convex mixing of traces, and root-of-unity nets.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "relstab/matrix.hpp"
#include "relstab/rng.hpp"
#include "relstab/spectral.hpp"

namespace relstab {

/// A finite group as a validated Cayley table. Groups are either constructed
/// from permutation generators (closure makes associativity automatic) or
/// from an explicit table, which is fully checked.
class FiniteGroup {
 public:
  int order() const { return n_; }
  int identity() const { return identity_; }
  int mul(int a, int b) const { return table_[a * n_ + b]; }
  int inv(int a) const { return inverse_[a]; }

  int power(int g, long long e) const {
    int base = (e < 0) ? inv(g) : g;
    long long k = (e < 0) ? -e : e;
    int acc = identity_;
    while (k > 0) {
      if (k & 1) acc = mul(acc, base);
      base = mul(base, base);
      k >>= 1;
    }
    return acc;
  }

  int element_order(int g) const {
    int acc = g, ord = 1;
    while (acc != identity_) {
      acc = mul(acc, g);
      ++ord;
    }
    return ord;
  }

  /// All z commuting with every element.
  std::vector<int> center() const {
    std::vector<int> z;
    for (int c = 0; c < n_; ++c) {
      bool central = true;
      for (int g = 0; g < n_ && central; ++g)
        central = mul(c, g) == mul(g, c);
      if (central) z.push_back(c);
    }
    return z;
  }

  std::vector<int> subgroup_generated(const std::vector<int>& gens) const {
    std::vector<char> seen(n_, 0);
    std::vector<int> frontier{identity_}, members{identity_};
    seen[identity_] = 1;
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int x : frontier)
        for (int g : gens)
          for (int y : {mul(x, g), mul(x, inv(g))})
            if (!seen[y]) {
              seen[y] = 1;
              members.push_back(y);
              next.push_back(y);
            }
      frontier = std::move(next);
    }
    std::sort(members.begin(), members.end());
    return members;
  }

  static FiniteGroup from_permutations(
      const std::vector<std::vector<int>>& gens, int max_order = 4096) {
    if (gens.empty()) throw error("FiniteGroup", "need at least one generator");
    const int degree = static_cast<int>(gens[0].size());
    for (const auto& g : gens) {
      if (static_cast<int>(g.size()) != degree)
        throw error("FiniteGroup", "generator degrees differ");
      std::vector<char> hit(degree, 0);
      for (int v : g) {
        if (v < 0 || v >= degree || hit[v]++)
          throw error("FiniteGroup", "generator is not a permutation");
      }
    }
    std::vector<int> id(degree);
    std::iota(id.begin(), id.end(), 0);
    std::map<std::vector<int>, int> index;
    std::vector<std::vector<int>> elems{id};
    index[id] = 0;
    for (std::size_t head = 0; head < elems.size(); ++head) {
      for (const auto& g : gens) {
        std::vector<int> prod(degree);
        for (int i = 0; i < degree; ++i) prod[i] = g[elems[head][i]];
        if (index.emplace(prod, static_cast<int>(elems.size())).second) {
          elems.push_back(prod);
          if (static_cast<int>(elems.size()) > max_order)
            throw error("FiniteGroup", "group order exceeds cap of " +
                                           std::to_string(max_order));
        }
      }
    }
    const int n = static_cast<int>(elems.size());
    FiniteGroup grp;
    grp.n_ = n;
    grp.table_.resize(static_cast<std::size_t>(n) * n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        std::vector<int> prod(degree);
        for (int i = 0; i < degree; ++i) prod[i] = elems[a][elems[b][i]];
        grp.table_[a * n + b] = index.at(prod);
      }
    grp.finish(false);
    return grp;
  }

  /// Builds from an explicit table; checks the Latin-square property,
  /// identity, inverses and full associativity (order capped at 512 since the
  /// check is cubic).
  static FiniteGroup from_table(std::vector<int> table, int n) {
    if (n < 1 || n > 512)
      throw error("FiniteGroup", "explicit tables supported up to order 512");
    if (static_cast<int>(table.size()) != n * n)
      throw error("FiniteGroup", "table size mismatch");
    for (int v : table)
      if (v < 0 || v >= n) throw error("FiniteGroup", "table entry out of range");
    FiniteGroup grp;
    grp.n_ = n;
    grp.table_ = std::move(table);
    grp.finish(true);
    return grp;
  }

  static FiniteGroup cyclic(int n) {
    std::vector<int> cyc(n);
    for (int i = 0; i < n; ++i) cyc[i] = (i + 1) % n;
    return from_permutations({cyc});
  }

  /// Dihedral group of order 2n acting on n points.
  static FiniteGroup dihedral(int n) {
    std::vector<int> rot(n), refl(n);
    for (int i = 0; i < n; ++i) {
      rot[i] = (i + 1) % n;
      refl[i] = (n - i) % n;
    }
    return from_permutations({rot, refl});
  }

  /// Quaternion group of order 8 via its regular permutation action.
  static FiniteGroup quaternion8() {
    // Elements 0..7 = 1, -1, i, -i, j, -j, k, -k.
    auto qmul = [](int a, int b) {
      auto split = [](int x) { return std::pair<int, int>{x / 2, x % 2}; };
      const auto [ua, sa] = split(a);
      const auto [ub, sb] = split(b);
      static const int unit[4][4] = {{0, 1, 2, 3},
                                     {1, 0, 3, 2},
                                     {2, 3, 0, 1},
                                     {3, 2, 1, 0}};
      static const int sign[4][4] = {{0, 0, 0, 0},
                                     {0, 1, 0, 1},
                                     {0, 1, 1, 0},
                                     {0, 0, 1, 1}};
      // unit axes: 1, i, j, k; sign[a][b] = 1 when the product flips sign.
      const int axis = unit[ua][ub];
      const int s = (sa + sb + sign[ua][ub]) % 2;
      return axis * 2 + s;
    };
    return from_permutations(regular_action(8, qmul));
  }

  /// Heisenberg group mod p (order p^3) via its regular permutation action.
  static FiniteGroup heisenberg_mod(int p) {
    auto encode = [p](int a, int b, int c) { return (a * p + b) * p + c; };
    auto hmul = [p, encode](int x, int y) {
      const int a1 = x / (p * p), b1 = (x / p) % p, c1 = x % p;
      const int a2 = y / (p * p), b2 = (y / p) % p, c2 = y % p;
      return encode((a1 + a2) % p, (b1 + b2) % p, (c1 + c2 + a1 * b2) % p);
    };
    return from_permutations(regular_action(p * p * p, hmul));
  }

  static FiniteGroup direct_product(const FiniteGroup& a,
                                    const FiniteGroup& b) {
    const int n = a.order() * b.order();
    FiniteGroup grp;
    grp.n_ = n;
    grp.table_.resize(static_cast<std::size_t>(n) * n);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        const int ax = x / b.order(), bx = x % b.order();
        const int ay = y / b.order(), by = y % b.order();
        grp.table_[x * n + y] =
            a.mul(ax, ay) * b.order() + b.mul(bx, by);
      }
    grp.finish(false);
    return grp;
  }

 private:
  template <typename Mul>
  static std::vector<std::vector<int>> regular_action(int n, Mul&& mul) {
    // Left-multiplication permutations by a generating set: every column of
    // the multiplication table generates, so use all left translations by
    // two arbitrary non-identity elements plus closure handles the rest.
    std::vector<std::vector<int>> gens;
    for (int g = 0; g < n; ++g) {
      std::vector<int> perm(n);
      for (int x = 0; x < n; ++x) perm[x] = mul(g, x);
      gens.push_back(std::move(perm));
    }
    return gens;
  }

  void finish(bool check_associativity) {
    identity_ = -1;
    for (int e = 0; e < n_; ++e) {
      bool ok = true;
      for (int x = 0; x < n_ && ok; ++x)
        ok = mul(e, x) == x && mul(x, e) == x;
      if (ok) {
        identity_ = e;
        break;
      }
    }
    if (identity_ < 0) throw error("FiniteGroup", "no identity element");
    for (int a = 0; a < n_; ++a) {
      std::vector<char> row(n_, 0), col(n_, 0);
      for (int b = 0; b < n_; ++b) {
        if (row[mul(a, b)]++) throw error("FiniteGroup", "table row repeats");
        if (col[mul(b, a)]++) throw error("FiniteGroup", "table column repeats");
      }
    }
    inverse_.assign(n_, -1);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        if (mul(a, b) == identity_ && mul(b, a) == identity_) {
          inverse_[a] = b;
          break;
        }
    for (int a = 0; a < n_; ++a)
      if (inverse_[a] < 0) throw error("FiniteGroup", "missing inverse");
    if (check_associativity) {
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
          for (int c = 0; c < n_; ++c)
            if (mul(mul(a, b), c) != mul(a, mul(b, c)))
              throw error("FiniteGroup", "table is not associative");
    }
  }

  int n_ = 0;
  int identity_ = 0;
  std::vector<int> table_;
  std::vector<int> inverse_;
};

inline FiniteGroup group_from_json(const json& j) {
  const auto gens = j.at("generators").get<std::vector<std::vector<int>>>();
  return FiniteGroup::from_permutations(gens,
                                        j.value("max_order", 4096));
}

// --- central characters -------------------------------------------------------

/// A central subgroup H_0 together with a multiplicative unit character on
/// it.
struct CentralCharacterSpec {
  std::vector<int> subgroup;  // sorted element indices, identity included
  std::vector<cplx> values;   // aligned with `subgroup`

  int position(int g) const {
    const auto it = std::lower_bound(subgroup.begin(), subgroup.end(), g);
    if (it == subgroup.end() || *it != g) return -1;
    return static_cast<int>(it - subgroup.begin());
  }

  void validate(const FiniteGroup& G) const {
    if (subgroup.empty() || subgroup.size() != values.size())
      throw error("CentralCharacterSpec", "empty or misaligned spec");
    const auto z = G.center();
    for (int h : subgroup)
      if (!std::binary_search(z.begin(), z.end(), h))
        throw error("CentralCharacterSpec", "subgroup is not central");
    if (position(G.identity()) < 0)
      throw error("CentralCharacterSpec", "identity missing from subgroup");
    for (std::size_t i = 0; i < subgroup.size(); ++i) {
      if (std::abs(std::abs(values[i]) - 1.0) > 1e-12)
        throw error("CentralCharacterSpec", "character value not unimodular");
      for (std::size_t j = 0; j < subgroup.size(); ++j) {
        const int prod = G.mul(subgroup[i], subgroup[j]);
        const int pos = position(prod);
        if (pos < 0)
          throw error("CentralCharacterSpec", "set is not closed");
        if (std::abs(values[i] * values[j] - values[pos]) > 1e-12)
          throw error("CentralCharacterSpec", "character not multiplicative");
      }
    }
  }
};

/// Character of the cyclic central subgroup <z> sending z to
/// e^{2 pi i l / ord(z)}.
inline CentralCharacterSpec cyclic_central_character(const FiniteGroup& G,
                                                     int z, long long l) {
  const int ord = G.element_order(z);
  std::vector<std::pair<int, cplx>> items;
  int acc = G.identity();
  for (int t = 0; t < ord; ++t) {
    items.emplace_back(acc, std::polar(1.0, 2.0 * M_PI *
                                                static_cast<double>(l * t) /
                                                static_cast<double>(ord)));
    acc = G.mul(acc, z);
  }
  std::sort(items.begin(), items.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  CentralCharacterSpec spec;
  for (auto& [g, v] : items) {
    spec.subgroup.push_back(g);
    spec.values.push_back(v);
  }
  spec.validate(G);
  return spec;
}

/// Random unit character on an abelian subgroup, built by iterated cyclic
/// extension: each new generator h with h^t landing in the part already
/// covered picks one of the t compatible roots uniformly.
inline CentralCharacterSpec random_character_on(const FiniteGroup& G,
                                                const std::vector<int>& H,
                                                Rng& rng) {
  std::vector<cplx> value(G.order(), cplx(0, 0));
  std::vector<char> known(G.order(), 0);
  value[G.identity()] = 1.0;
  known[G.identity()] = 1;
  std::vector<int> covered{G.identity()};
  for (int h : H) {
    if (known[h]) continue;
    int t = 1, acc = h;
    while (!known[acc]) {
      acc = G.mul(acc, h);
      ++t;
    }
    const cplx base = value[acc];  // chi(h^t) is already defined
    const auto r = static_cast<double>(rng.below(static_cast<std::uint64_t>(t)));
    const cplx chi_h = std::polar(
        1.0, principal_arg(base) / t + 2.0 * M_PI * r / static_cast<double>(t));
    std::vector<int> fresh;
    for (int k : covered) {
      int cur = k;
      cplx v = value[k];
      for (int j = 1; j < t; ++j) {
        cur = G.mul(cur, h);
        v *= chi_h;
        if (!known[cur]) {
          known[cur] = 1;
          value[cur] = v;
          fresh.push_back(cur);
        }
      }
    }
    covered.insert(covered.end(), fresh.begin(), fresh.end());
  }
  CentralCharacterSpec spec;
  std::vector<int> sorted = H;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int g : sorted) {
    spec.subgroup.push_back(g);
    spec.values.push_back(value[g]);
  }
  spec.validate(G);
  return spec;
}

// --- Frobenius induced trace ----------------------------------------------------

/// Normalized trace of the representation induced from a character on a
/// central subgroup: chi(g) on H_0 and 0 off it.
inline cplx induced_central_trace(const FiniteGroup& G,
                                  const CentralCharacterSpec& spec, int g) {
  spec.validate(G);
  const int pos = spec.position(g);
  return pos >= 0 ? spec.values[pos] : cplx(0, 0);
}

/// Canonical coset representatives of H_0, ascending by their minimal
/// element.
inline std::vector<int> coset_representatives(const FiniteGroup& G,
                                              const std::vector<int>& H) {
  std::vector<char> taken(G.order(), 0);
  std::vector<int> reps;
  for (int g = 0; g < G.order(); ++g) {
    if (taken[g]) continue;
    reps.push_back(g);
    for (int h : H) taken[G.mul(g, h)] = 1;
  }
  return reps;
}

/// The explicit monomial matrix of the induced representation at g, of
/// dimension [G : H_0].
inline cmat induced_rep_matrix(const FiniteGroup& G,
                               const CentralCharacterSpec& spec, int g) {
  if (G.order() > 4096)
    throw error("induced_rep_matrix", "group order above the 4096 cap");
  const auto reps = coset_representatives(G, spec.subgroup);
  const int d = static_cast<int>(reps.size());
  cmat pi = cmat::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const int target = G.mul(g, reps[j]);
    for (int i = 0; i < d; ++i) {
      const int h = G.mul(G.inv(reps[i]), target);
      const int pos = spec.position(h);
      if (pos >= 0) {
        pi(i, j) = spec.values[pos];
        break;
      }
    }
  }
  return pi;
}

/// Verification mode: the largest deviation, over all group elements,
/// between the closed-form induced trace and the normalized trace of the
/// explicit monomial matrices.
inline double induced_trace_verification_residual(
    const FiniteGroup& G, const CentralCharacterSpec& spec) {
  spec.validate(G);
  double worst = 0.0;
  for (int g = 0; g < G.order(); ++g) {
    const cmat pi = induced_rep_matrix(G, spec, g);
    const cplx explicit_trace = pi.trace() / static_cast<double>(pi.rows());
    const int pos = spec.position(g);
    const cplx closed = pos >= 0 ? spec.values[pos] : cplx(0, 0);
    worst = std::max(worst, std::abs(explicit_trace - closed));
  }
  return worst;
}

/// CSV table of the induced central trace: element index, real, imaginary.
inline std::string induced_character_csv(const FiniteGroup& G,
                                         const CentralCharacterSpec& spec) {
  spec.validate(G);
  std::string out = "element,re,im\n";
  for (int g = 0; g < G.order(); ++g) {
    const int pos = spec.position(g);
    const cplx v = pos >= 0 ? spec.values[pos] : cplx(0, 0);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", g, v.real(), v.imag());
    out += buf;
  }
  return out;
}

// --- clock and shift ---------------------------------------------------------------

struct ClockShift {
  cmat u, v;
  cplx omega;  // u v u^{-1} v^{-1} = omega * 1 exactly
};

/// The q-dimensional clock-and-shift pair with U V U^{-1} V^{-1} =
/// e^{2 pi i p / q}. Optional unit scalars alpha, beta twist the pair so that
/// U^q = alpha, V^q = beta (both default 1).
inline ClockShift clock_shift_rep(long long p, long long q, cplx alpha = 1.0,
                                  cplx beta = 1.0) {
  if (q < 1) throw error("clock_shift_rep", "q must be positive");
  if (std::abs(std::abs(alpha) - 1.0) > 1e-12 ||
      std::abs(std::abs(beta) - 1.0) > 1e-12)
    throw error("clock_shift_rep", "twists must be unimodular");
  ClockShift cs;
  cs.omega = std::polar(1.0, 2.0 * M_PI * static_cast<double>(((p % q) + q) % q) /
                                 static_cast<double>(q));
  const cplx atw = std::polar(1.0, principal_arg(alpha) / static_cast<double>(q));
  const cplx btw = std::polar(1.0, principal_arg(beta) / static_cast<double>(q));
  cs.u = cmat::Zero(q, q);
  cs.v = cmat::Zero(q, q);
  for (long long j = 0; j < q; ++j) {
    cs.u(j, j) = atw * std::polar(1.0, 2.0 * M_PI *
                                           static_cast<double>((p * j) % q) /
                                           static_cast<double>(q));
    cs.v((j + 1) % q, j) = btw;
  }
  return cs;
}

/// Normalized trace of U^a V^b Z^c in the (p, q) clock-shift representation,
/// where Z = U V U^{-1} V^{-1} = omega. Words are normalized to U^a V^b Z^c
/// using U^a V^b = omega^{ab} V^b U^a. The value is omega^c when V^b and U^a
/// are both scalar (q | b and q | a p; for gcd(p, q) = 1 the latter is the
/// familiar q | a), and exactly 0 otherwise.
inline cplx heisenberg_word_trace(long long a, long long b, long long c,
                                  long long p, long long q) {
  if (q < 1) throw error("heisenberg_word_trace", "q must be positive");
  const bool diag = (b % q == 0) && ((a % q) * (p % q)) % q == 0;
  if (!diag) return cplx(0, 0);
  const long long e = (((p % q) * (c % q)) % q + q) % q;
  return std::polar(1.0, 2.0 * M_PI * static_cast<double>(e) /
                             static_cast<double>(q));
}

// --- delta_e via tensor powers ----------------------------------------------------

struct DeltaApproximation {
  long long power = 1;        // minimal N with max_i |v_i|^N < eps
  std::vector<cplx> traces;   // v_i^N
};

/// Minimal tensor power N with max_i |value_i|^N < eps. Every |value| must be
/// strictly below 1 (the separated-point condition); otherwise the element is
/// reported as not separated.
inline DeltaApproximation tensor_power_delta(const std::vector<cplx>& values,
                                             double eps) {
  if (!(eps > 0)) throw error("tensor_power_delta", "eps must be positive");
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double m = std::abs(values[i]);
    if (m >= 1.0)
      throw error("tensor_power_delta",
                  "value " + std::to_string(i) + " not separated (|v| >= 1)");
    worst = std::max(worst, m);
  }
  DeltaApproximation out;
  if (worst == 0.0 || values.empty()) {
    out.power = 1;
  } else {
    long long n0 = static_cast<long long>(
        std::ceil(std::log(eps) / std::log(worst)));
    n0 = std::max<long long>(1, n0 - 4);
    long long n = n0;
    while (!(std::pow(worst, static_cast<double>(n)) < eps)) ++n;
    while (n > 1 && std::pow(worst, static_cast<double>(n - 1)) < eps) --n;
    out.power = n;
  }
  for (const cplx& v : values) {
    cplx acc = 1.0, base = v;
    long long e = out.power;
    while (e > 0) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    out.traces.push_back(acc);
  }
  return out;
}

// --- exact convex mixing of traces -------------------------------------------------

struct TraceMixture {
  long long total_dim = 0;                 // dimension of the mixed block rep
  std::vector<long long> multiplicities;   // copies of each input rep
  std::vector<cplx> mixed;                 // sum_i (s_i / m) tr_i
};

/// Mixes trace vectors of representations pi_i of dimensions n_i with
/// rational weights s_i / (sum s_i) by stacking (s_i / n_i) L copies of each,
/// L being the least common multiple making every multiplicity integral.
/// Weights enter as integer numerators, so irrational weights are
/// unrepresentable by construction.
inline TraceMixture mix_traces(const std::vector<long long>& dims,
                               const std::vector<long long>& weight_num,
                               const std::vector<std::vector<cplx>>& traces) {
  const std::size_t l = dims.size();
  if (l == 0 || weight_num.size() != l || traces.size() != l)
    throw error("mix_traces", "misaligned inputs");
  long long m = 0;
  for (std::size_t i = 0; i < l; ++i) {
    if (dims[i] < 1) throw error("mix_traces", "dimensions must be positive");
    if (weight_num[i] < 1) throw error("mix_traces", "weights must be positive");
    if (traces[i].size() != traces[0].size())
      throw error("mix_traces", "trace vectors have different lengths");
    m += weight_num[i];
  }
  long long lcm = 1;
  for (std::size_t i = 0; i < l; ++i) {
    const long long factor = dims[i] / std::gcd(weight_num[i], dims[i]);
    lcm = lcm / std::gcd(lcm, factor) * factor;
    if (lcm > (1LL << 40)) throw error("mix_traces", "L overflows");
  }
  TraceMixture out;
  for (std::size_t i = 0; i < l; ++i)
    out.multiplicities.push_back(weight_num[i] * lcm / dims[i]);
  out.total_dim = lcm * m;
  out.mixed.assign(traces[0].size(), cplx(0, 0));
  for (std::size_t i = 0; i < l; ++i) {
    const double w = static_cast<double>(weight_num[i]) / static_cast<double>(m);
    for (std::size_t k = 0; k < out.mixed.size(); ++k)
      out.mixed[k] += w * traces[i][k];
  }
  long long check = 0;
  for (std::size_t i = 0; i < l; ++i)
    check += out.multiplicities[i] * dims[i];
  if (check != out.total_dim)
    throw error("mix_traces", "multiplicity accounting failed");
  return out;
}

// --- root-of-unity net --------------------------------------------------------------

struct RootPhase {
  long long index = 0;  // l in {0, ..., k-1}
  double error = 0.0;   // |e^{2 pi i l / k} - e^{2 pi i theta}|
};

/// Nearest k-th root of unity to e^{2 pi i theta} (theta in turns). The error
/// is at most the chord of half the root spacing, 2 sin(pi / (2k)).
inline RootPhase nearest_root_phase(double theta, long long k) {
  if (k < 1) throw error("nearest_root_phase", "k must be positive");
  const double t = theta * static_cast<double>(k);
  const double fl = std::floor(t);
  const double d_lo = t - fl;
  auto norm = [k](long long v) { return ((v % k) + k) % k; };
  long long l = (d_lo <= 0.5) ? norm(static_cast<long long>(fl))
                              : norm(static_cast<long long>(fl) + 1);
  RootPhase out;
  out.index = l;
  out.error = std::abs(std::polar(1.0, 2.0 * M_PI * static_cast<double>(l) /
                                           static_cast<double>(k)) -
                       std::polar(1.0, 2.0 * M_PI * theta));
  return out;
}

}  // namespace relstab
