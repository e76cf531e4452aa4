#pragma once

// Group presentations, relator words and the Hilbert-Schmidt defect of a
// tuple of unitaries that almost satisfies the relations.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "relstab/matrix.hpp"

namespace relstab {

/// Word in the generators: a list of (generator index, nonzero exponent)
/// letters kept in normal form (adjacent letters have distinct generators).
/// The empty word is the identity.
struct Word {
  std::vector<std::pair<int, long long>> letters;

  static Word one() { return {}; }

  static Word gen(int g, long long e = 1) {
    Word w;
    if (e != 0) w.letters.push_back({g, e});
    return w;
  }

  Word& operator*=(const Word& rhs) {
    for (const auto& l : rhs.letters) push(l.first, l.second);
    return *this;
  }

  friend Word operator*(Word a, const Word& b) { return a *= b; }

  Word inverse() const {
    Word w;
    for (auto it = letters.rbegin(); it != letters.rend(); ++it)
      w.letters.push_back({it->first, -it->second});
    return w;
  }

  void push(int g, long long e) {
    if (e == 0) return;
    if (!letters.empty() && letters.back().first == g) {
      letters.back().second += e;
      if (letters.back().second == 0) letters.pop_back();
    } else {
      letters.push_back({g, e});
    }
  }

  bool empty() const { return letters.empty(); }
};

inline Word commutator(const Word& a, const Word& b) {
  return a * b * a.inverse() * b.inverse();
}

enum class PresentationKind { generic, chain, hnn_chain };

inline std::string to_string(PresentationKind k) {
  switch (k) {
    case PresentationKind::chain: return "chain";
    case PresentationKind::hnn_chain: return "hnn-chain";
    default: return "generic";
  }
}

/// Presentation data: generator count, relators, and for the one-relator
/// chain families the exponent lists a, b from which the finite orders
/// N_i = b_1...b_{i-1} a_i...a_{m-1} are derived.
struct GroupPresentation {
  int num_generators = 0;
  std::vector<Word> relators;
  PresentationKind kind = PresentationKind::generic;
  std::vector<long long> a, b;

  /// Index of chain generator x_i (1-based i) in the tuple. For hnn-chain
  /// presentations generator 0 is u and the x_i follow.
  int chain_generator(int i) const {
    return kind == PresentationKind::hnn_chain ? i : i - 1;
  }

  int chain_length() const { return static_cast<int>(a.size()) + 1; }

  /// The orders N_i of the finite-order parts, computed in 128-bit arithmetic
  /// with overflow detection.
  std::vector<long long> orders() const {
    if (kind == PresentationKind::generic)
      throw error("orders", "presentation has no chain exponent data");
    const int m = chain_length();
    const __int128 cap = static_cast<__int128>(1) << 62;
    std::vector<long long> n(m);
    for (int i = 1; i <= m; ++i) {
      __int128 acc = 1;
      auto mul = [&](long long f) {
        acc *= f;
        if (acc > cap) throw error("orders", "order N_i overflows 62 bits");
      };
      for (int j = 1; j <= i - 1; ++j) mul(b[j - 1]);
      for (int j = i; j <= m - 1; ++j) mul(a[j - 1]);
      n[i - 1] = static_cast<long long>(acc);
    }
    return n;
  }

  std::string describe() const {
    std::string s = to_string(kind);
    if (kind != PresentationKind::generic) {
      s += ":";
      for (std::size_t i = 0; i < a.size(); ++i)
        s += (i ? "," : "") + std::to_string(a[i]);
      s += ":";
      for (std::size_t i = 0; i < b.size(); ++i)
        s += (i ? "," : "") + std::to_string(b[i]);
    } else {
      s += "(" + std::to_string(num_generators) + " gens, " +
           std::to_string(relators.size()) + " relators)";
    }
    return s;
  }
};

/// Chain presentation <x_1,...,x_n | x_i^{a_i} = x_{i+1}^{b_i}>. All
/// exponents must be >= 2.
inline GroupPresentation preset_chain(std::vector<long long> a,
                                      std::vector<long long> b) {
  if (a.empty() || a.size() != b.size())
    throw error("preset_chain", "need equally long nonempty exponent lists");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] < 2 || b[i] < 2)
      throw error("preset_chain", "all exponents must be >= 2");
  GroupPresentation p;
  p.kind = PresentationKind::chain;
  p.num_generators = static_cast<int>(a.size()) + 1;
  for (std::size_t i = 0; i < a.size(); ++i)
    p.relators.push_back(Word::gen(static_cast<int>(i), a[i]) *
                         Word::gen(static_cast<int>(i) + 1, -b[i]));
  p.a = std::move(a);
  p.b = std::move(b);
  p.orders();  // validates against overflow
  return p;
}

/// hnn-chain presentation: the chain relators plus u x_1 u^{-1} = x_m, with
/// the product condition a_1...a_{m-1} = b_1...b_{m-1} (so N_1 = N_m).
/// Generator 0 is u; x_1..x_m follow.
inline GroupPresentation preset_case2(std::vector<long long> a,
                                      std::vector<long long> b) {
  if (a.size() != b.size())
    throw error("preset_case2", "need equally long exponent lists");
  __int128 pa = 1, pb = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 2 || b[i] < 2)
      throw error("preset_case2", "all exponents must be >= 2");
    pa *= a[i];
    pb *= b[i];
  }
  if (pa != pb)
    throw error("preset_case2",
                "product condition prod(a) = prod(b) violated");
  GroupPresentation p;
  p.kind = PresentationKind::hnn_chain;
  const int m = static_cast<int>(a.size()) + 1;
  p.num_generators = m + 1;
  p.relators.push_back(Word::gen(0) * Word::gen(1) * Word::gen(0, -1) *
                       Word::gen(m, -1));
  for (int i = 0; i < m - 1; ++i)
    p.relators.push_back(Word::gen(i + 1, a[i]) * Word::gen(i + 2, -b[i]));
  p.a = std::move(a);
  p.b = std::move(b);
  const auto n = p.orders();
  if (n.front() != n.back())
    throw error("preset_case2", "derived orders N_1 and N_m differ");
  return p;
}

/// Discrete Heisenberg group: u, v with [u,[u,v]] = [v,[u,v]] = 1.
inline GroupPresentation preset_heisenberg() {
  GroupPresentation p;
  p.num_generators = 2;
  const Word z = commutator(Word::gen(0), Word::gen(1));
  p.relators.push_back(commutator(Word::gen(0), z));
  p.relators.push_back(commutator(Word::gen(1), z));
  return p;
}

/// One unitary per generator, all of the same dimension.
struct UnitaryTuple {
  Eigen::Index dim = 0;
  std::vector<cmat> matrices;

  int size() const { return static_cast<int>(matrices.size()); }

  void check(double tol = kInputUnitarityTol) const {
    for (const auto& m : matrices) {
      if (m.rows() != dim || m.cols() != dim)
        throw error("UnitaryTuple", "dimension mismatch in tuple");
      require_unitary(m, tol, "UnitaryTuple");
    }
  }
};

/// Product of the tuple's matrices along a word; inverses are realized by
/// adjoints (no numerical inversion, inputs being unitary).
inline cmat evaluate_word(const Word& w, const UnitaryTuple& t) {
  cmat acc = identity(t.dim);
  for (const auto& [g, e] : w.letters) {
    if (g < 0 || g >= t.size())
      throw error("evaluate_word", "generator index out of range");
    acc = (acc * matpow(t.matrices[g], e)).eval();
  }
  return acc;
}

/// max_j || 1 - r_j(U_1,...,U_s) ||_2 over the presentation's relators.
inline double relation_defect(const GroupPresentation& p,
                              const UnitaryTuple& t) {
  if (t.size() != p.num_generators)
    throw error("relation_defect", "tuple size does not match presentation");
  double worst = 0.0;
  for (const auto& r : p.relators)
    worst = std::max(worst, hs_dist(evaluate_word(r, t), identity(t.dim)));
  return worst;
}

// --- JSON -------------------------------------------------------------------

inline json presentation_to_json(const GroupPresentation& p) {
  json relators = json::array();
  for (const auto& w : p.relators) {
    json letters = json::array();
    for (const auto& [g, e] : w.letters) letters.push_back({g, e});
    relators.push_back(std::move(letters));
  }
  return json{{"generators", p.num_generators},
              {"relators", std::move(relators)},
              {"case", to_string(p.kind)},
              {"a", p.a},
              {"b", p.b}};
}

inline GroupPresentation presentation_from_json(const json& j) {
  GroupPresentation p;
  p.num_generators = j.at("generators").get<int>();
  for (const auto& r : j.at("relators")) {
    Word w;
    for (const auto& l : r) w.push(l.at(0).get<int>(), l.at(1).get<long long>());
    p.relators.push_back(std::move(w));
  }
  const std::string kind = j.value("case", "generic");
  if (kind == "chain")
    p.kind = PresentationKind::chain;
  else if (kind == "hnn-chain")
    p.kind = PresentationKind::hnn_chain;
  if (j.contains("a")) p.a = j.at("a").get<std::vector<long long>>();
  if (j.contains("b")) p.b = j.at("b").get<std::vector<long long>>();
  return p;
}

inline json tuple_to_json(const UnitaryTuple& t,
                          const GroupPresentation* p = nullptr) {
  json matrices = json::array();
  for (const auto& m : t.matrices) matrices.push_back(matrix_to_json(m));
  json out{{"dim", t.dim}, {"matrices", std::move(matrices)}};
  if (p) out["presentation"] = presentation_to_json(*p);
  return out;
}

inline UnitaryTuple tuple_from_json(const json& j) {
  UnitaryTuple t;
  t.dim = j.at("dim").get<Eigen::Index>();
  for (const auto& m : j.at("matrices"))
    t.matrices.push_back(matrix_from_json(m));
  for (const auto& m : t.matrices)
    if (m.rows() != t.dim)
      throw error("tuple_from_json", "matrix dimension mismatch");
  return t;
}

}  // namespace relstab
