#include <catch2/catch_amalgamated.hpp>

#include "relstab/presentation.hpp"
#include "relstab/rng.hpp"

using namespace relstab;

namespace {
UnitaryTuple pair_tuple(const cmat& a, const cmat& b) {
  UnitaryTuple t;
  t.dim = a.rows();
  t.matrices = {a, b};
  return t;
}
}  // namespace

TEST_CASE("words normalize and cancel") {
  const Word w = Word::gen(0) * Word::gen(0, -1);
  CHECK(w.empty());
  const Word u = Word::gen(0, 2) * Word::gen(0, 3);
  REQUIRE(u.letters.size() == 1);
  CHECK(u.letters[0].second == 5);
  const Word c = commutator(Word::gen(0), Word::gen(1));
  CHECK(c.letters.size() == 4);
}

TEST_CASE("evaluate_word") {
  Rng rng(2);
  const cmat u = rng.haar_unitary(5), v = rng.haar_unitary(5);
  const auto t = pair_tuple(u, v);
  CHECK(hs_dist(evaluate_word(Word::one(), t), identity(5)) == 0.0);
  CHECK(hs_dist(evaluate_word(Word::gen(0) * Word::gen(0, -1), t),
                identity(5)) == 0.0);

  // [x, y] on diag(1,-1) and the swap: hand multiplication gives -1.
  cmat d = cmat::Zero(2, 2), s = cmat::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = -1;
  s(0, 1) = 1;
  s(1, 0) = 1;
  const cmat comm = evaluate_word(commutator(Word::gen(0), Word::gen(1)),
                                  pair_tuple(d, s));
  CHECK((comm + identity(2)).norm() < 1e-14);

  Word bad = Word::gen(7);
  CHECK_THROWS_AS(evaluate_word(bad, t), error);
}

TEST_CASE("relation_defect") {
  cmat d = cmat::Zero(2, 2), s = cmat::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = -1;
  s(0, 1) = 1;
  s(1, 0) = 1;
  GroupPresentation p;
  p.num_generators = 2;
  p.relators = {commutator(Word::gen(0), Word::gen(1))};
  // || -1 - 1 ||_2 = 2 in the scalar case.
  CHECK_THAT(relation_defect(p, pair_tuple(d, s)),
             Catch::Matchers::WithinAbs(2.0, 1e-13));
  CHECK(relation_defect(p, pair_tuple(identity(2), identity(2))) == 0.0);
}

TEST_CASE("preset_chain") {
  const auto p = preset_chain({2, 5}, {3, 7});
  CHECK(p.num_generators == 3);
  REQUIRE(p.relators.size() == 2);
  // x^2 y^-3 and y^5 z^-7
  CHECK(p.relators[0].letters ==
        std::vector<std::pair<int, long long>>{{0, 2}, {1, -3}});
  CHECK(p.relators[1].letters ==
        std::vector<std::pair<int, long long>>{{1, 5}, {2, -7}});
  CHECK(p.orders() == std::vector<long long>{10, 15, 21});

  CHECK(preset_chain({2}, {2}).orders() == std::vector<long long>{2, 2});
  CHECK(preset_chain({3, 2}, {2, 3}).orders() ==
        std::vector<long long>{6, 4, 6});
  CHECK_THROWS_AS(preset_chain({1}, {2}), error);
  // Orders are guarded against 128-bit overflow of the exponent products.
  const std::vector<long long> huge(8, 1LL << 20);
  CHECK_THROWS_AS(preset_chain(huge, huge), error);
}

TEST_CASE("preset_case2") {
  const auto p = preset_case2({2, 3}, {3, 2});
  CHECK(p.num_generators == 4);  // u, x1, x2, x3
  const auto orders = p.orders();
  CHECK(orders == std::vector<long long>{6, 9, 6});
  CHECK(orders.front() == orders.back());

  const auto small = preset_case2({2}, {2});
  REQUIRE(small.relators.size() == 2);
  // u x1 u^-1 x2^-1 then x1^2 x2^-2
  CHECK(small.relators[0].letters ==
        std::vector<std::pair<int, long long>>{
            {0, 1}, {1, 1}, {0, -1}, {2, -1}});
  CHECK(small.relators[1].letters ==
        std::vector<std::pair<int, long long>>{{1, 2}, {2, -2}});

  CHECK(preset_case2({4, 3}, {2, 6}).orders().front() == 12);  // 12 = 12
  CHECK_THROWS_AS(preset_case2({2, 3}, {2, 2}), error);
}

TEST_CASE("preset_heisenberg") {
  const auto p = preset_heisenberg();
  CHECK(p.num_generators == 2);
  REQUIRE(p.relators.size() == 2);
  CHECK(relation_defect(p, pair_tuple(identity(3), identity(3))) == 0.0);

  Rng rng(9);
  const auto t = pair_tuple(rng.haar_unitary(6), rng.haar_unitary(6));
  CHECK(relation_defect(p, t) > 1e-3);  // generic pairs do not satisfy it
}

TEST_CASE("defect is invariant under simultaneous conjugation") {
  Rng rng(13);
  const auto p = preset_chain({2, 5}, {3, 7});
  UnitaryTuple t;
  t.dim = 8;
  for (int i = 0; i < 3; ++i) t.matrices.push_back(rng.haar_unitary(8));
  const cmat q = rng.haar_unitary(8);
  UnitaryTuple conj;
  conj.dim = 8;
  for (const auto& m : t.matrices) conj.matrices.push_back(q * m * q.adjoint());
  CHECK_THAT(relation_defect(p, conj),
             Catch::Matchers::WithinAbs(relation_defect(p, t), 1e-10));
}

TEST_CASE("presentation and tuple json round trips") {
  const auto p = preset_case2({2, 3}, {3, 2});
  const auto q = presentation_from_json(presentation_to_json(p));
  CHECK(q.num_generators == p.num_generators);
  CHECK(q.kind == p.kind);
  CHECK(q.a == p.a);
  REQUIRE(q.relators.size() == p.relators.size());
  CHECK(q.relators[0].letters == p.relators[0].letters);

  Rng rng(21);
  UnitaryTuple t;
  t.dim = 3;
  t.matrices = {rng.haar_unitary(3), rng.haar_unitary(3)};
  const auto back = tuple_from_json(tuple_to_json(t));
  CHECK(back.dim == 3);
  CHECK((back.matrices[1] - t.matrices[1]).norm() == 0.0);
}
