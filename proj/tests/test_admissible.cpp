#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tori/admissible.hpp"

using namespace tori;

TEST_CASE("case B routes agree for every subtorus with 2e <= 12") {
  for (int e = 1; e <= 6; ++e)
    for (int v : {0, 1}) {
      auto T = build_max_torus(Case::B, 13, 13, e, v, 0, 8);
      for (const auto& S : all_subtori(T)) {
        if (S.is_trivial()) continue;
        INFO("2e=" << 2 * e << " v=" << v);
        Verdict a = parity_verdict_B(S);
        Verdict b = support_verdict_B(S);
        Verdict c = residue_verdict_B(S).verdict;
        CHECK(a == b);
        CHECK(a == c);
      }
    }
}

TEST_CASE("case B examples at 2e = 6") {
  auto T = build_max_torus(Case::B, 7, 7, 3, 0, 0, 20);
  auto D3 = is_admissible(subtorus_from_divisors(T, {3}));
  auto D6 = is_admissible(subtorus_from_divisors(T, {6}));
  CHECK(D3.verdict == Verdict::not_admissible);
  CHECK(D6.verdict == Verdict::admissible);
  CHECK(verify_witness(subtorus_from_divisors(T, {3}), D3));
  CHECK_FALSE(verify_witness(subtorus_from_divisors(T, {6}), D6));
  auto T1 = build_max_torus(Case::B, 7, 7, 3, 1, 0, 20);
  CHECK(is_admissible(subtorus_from_divisors(T1, {3})).verdict == Verdict::admissible);
  CHECK(is_admissible(subtorus_from_divisors(T1, {6})).verdict == Verdict::not_admissible);
}

TEST_CASE("full torus is admissible and the trivial one is decided trivially") {
  auto T = build_max_torus(Case::A, 5, 5, 1, 1, 0, 20);
  CHECK(is_admissible(subtorus_from_divisors(T, {})).verdict == Verdict::admissible);
  auto Z = is_admissible(subtorus_from_divisors(T, {1, 2}));
  CHECK(Z.verdict == Verdict::admissible);
  CHECK(Z.route == "trivial torus");
}

TEST_CASE("case A quadratic example depends on q mod 4") {
  for (long q : {3L, 5L, 7L, 13L}) {
    auto T = build_max_torus(Case::A, q, q, 1, 1, 0, 20);
    Verdict want = q % 4 == 1 ? Verdict::admissible : Verdict::not_admissible;
    auto S = subtorus_from_divisors(T, {2});
    auto D = is_admissible(S);
    CHECK(D.verdict == want);
    if (D.verdict == Verdict::not_admissible) CHECK(verify_witness(S, D));
  }
}

TEST_CASE("no proper admissible subtorus criteria") {
  CHECK_FALSE(no_proper_admissible(build_max_torus(Case::B, 7, 7, 3, 0, 0, 10)));
  CHECK_FALSE(no_proper_admissible(build_max_torus(Case::A, 5, 5, 3, 1, 0, 10)));
  TowerShape odd_ram;
  odd_ram.top = QuadraticExt::unramified;
  odd_ram.ramification = 3;
  CHECK(no_proper_admissible(odd_ram));
  TowerShape odd_res;
  odd_res.residue_degree = 3;
  CHECK(no_proper_admissible(odd_res));
  // a non-square twist forces every proper nontrivial subtorus to be not admissible
  for (long q : {3L, 5L, 7L})
    for (int f : {1, 2}) {
      auto plain = build_max_torus(Case::A, q, q, f, 1, 0, 16);
      const ResidueField& res = plain.tower->k1->residue();
      std::uint64_t g = 1;
      while (res.is_square(res.element(g))) ++g;
      auto T = build_max_torus(Case::A, q, q, f, 1, 0, 16, g);
      REQUIRE(T.twisted());
      CHECK(no_proper_admissible(T));
      for (const auto& S : all_subtori(T))
        if (!S.is_full() && !S.is_trivial()) {
          auto D = is_admissible(S);
          CHECK(D.verdict == Verdict::not_admissible);
          CHECK(verify_witness(S, D, 8));
        }
    }
}

TEST_CASE("not-admissible certificates verify for case A with f = 3") {
  auto T = build_max_torus(Case::A, 5, 5, 3, 1, 0, 24);
  for (const auto& S : all_subtori(T)) {
    if (S.is_full() || S.is_trivial()) continue;
    auto D = is_admissible(S);
    if (D.verdict == Verdict::not_admissible) CHECK(verify_witness(S, D, 12));
  }
}

TEST_CASE("witness search finds nothing for admissible subtori") {
  auto T = build_max_torus(Case::B, 7, 7, 3, 0, 0, 20);
  auto S = subtorus_from_divisors(T, {6});
  auto W = zero_fiber_witness_search(as_product(S), -1, 20000);
  CHECK_FALSE(W.w);
  auto N = subtorus_from_divisors(T, {3});
  auto WN = zero_fiber_witness_search(as_product(N), -1, 20000);
  CHECK(WN.w);
}

TEST_CASE("product subtori across factors") {
  auto T = build_max_torus(Case::B, 5, 5, 1, 0, 0, 20);
  ProductSubtorus P;
  P.factors = {T, T};
  // diagonal subtorus: Lie algebra spanned by (X, X)
  for (const auto& X : lie_generators(subtorus_from_divisors(T, {}))) P.lie.push_back({X, X});
  auto W = zero_fiber_witness_search(P, -1, 20000);
  CHECK(W.complement_dim == 2);
  CHECK(W.w);
  if (W.w) {
    std::vector<FieldElement> Xs = {P.lie[0][0], P.lie[0][1]};
    CHECK(momentum_pairing(P.factors, *W.w, Xs).is_zero());
  }
}
