#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "property_suite.hpp"
#include "tori/admissible.hpp"

using namespace tori;

TEST_CASE("mu and descriptor validation") {
  CHECK(build_max_torus(Case::B, 3, 3, 1, 0, 0, 20).mu() == -1);
  CHECK(build_max_torus(Case::A, 3, 3, 3, 1, 0, 20, std::nullopt, true).mu() == -1);
  CHECK(build_max_torus(Case::B, 5, 5, 2, 1, 1, 20).mu() == 4 - 3 - 1);
  CHECK_THROWS_AS(build_max_torus(Case::B, 3, 3, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_max_torus(Case::A, 3, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_max_torus(Case::A, 5, 5, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_max_torus(Case::B, 5, 6, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_max_torus(Case::B, 5, 5, 1, 2), std::invalid_argument);
  auto T = build_max_torus(Case::A, 3, 3, 3, 1, 0, 20, std::nullopt, true);
  CHECK_FALSE(T.multiplicity_supported);
}

TEST_CASE("case B index sets") {
  auto T = build_max_torus(Case::B, 5, 5, 2, 0, 0, 20);
  auto S = subtorus_from_divisors(T, {4});
  CHECK(S.I == std::vector<int>{0, 2});
  CHECK(S.Iprime == std::vector<int>{1, 3});
  CHECK(S.codim == 2);
  auto F = subtorus_from_divisors(T, {});
  CHECK(F.Iprime.empty());
  CHECK(F.is_full());
  auto Z = subtorus_from_divisors(T, {1, 2, 4});
  CHECK(Z.is_trivial());
  CHECK(Z.I.empty());
  CHECK_THROWS_AS(subtorus_from_divisors(T, {3}), std::invalid_argument);
}

TEST_CASE("|I'| equals the codimension and distinct divisor sets give distinct I'") {
  for (int e = 1; e <= 6; ++e) {
    auto T = build_max_torus(Case::B, 13, 13, e, 0, 0, 8);
    std::set<std::vector<int>> seen;
    auto subs = all_subtori(T);
    for (const auto& S : subs) {
      CHECK(static_cast<long>(S.Iprime.size()) == S.codim);
      CHECK(S.I.size() + S.Iprime.size() == static_cast<size_t>(T.order()));
      seen.insert(S.Iprime);
    }
    CHECK(seen.size() == subs.size());
  }
}

TEST_CASE("case A component sign") {
  auto T = build_max_torus(Case::A, 5, 5, 3, 1, 0, 20);
  // the saturation of M_1 + M_2 contains (1,0,1,0,1,0), which is -1 at -1
  CHECK(subtorus_from_divisors(T, {1, 2}).epsilon == 2);
  for (long d : divisors(6)) CHECK(subtorus_from_divisors(T, {d}).epsilon == 1);
}

TEST_CASE("congruence filtration orders") {
  auto B = build_max_torus(Case::B, 3, 3, 1, 0, 0, 20);
  auto FB = congruence_filtration(B, 3);
  CHECK(FB.steps == std::vector<std::uint64_t>{4, 3, 3});
  CHECK(FB.order() == 36);
  auto A = build_max_torus(Case::A, 5, 5, 1, 1, 0, 20);
  auto FA = congruence_filtration(A, 4);
  CHECK(FA.steps == std::vector<std::uint64_t>{2, 25, 1, 25});
  CHECK_THROWS_AS(congruence_filtration(A, 0), std::invalid_argument);
}

TEST_CASE("rho lands in the norm-one torus") {
  std::mt19937_64 rng(testing::suite_seed() + 11);
  for (auto T : {build_max_torus(Case::B, 5, 5, 2, 0, 0, 30), build_max_torus(Case::A, 5, 5, 1, 1, 0, 30),
                 build_max_torus(Case::A, 3, 3, 2, 1, 0, 30)}) {
    const Tower& tw = *T.tower;
    long prec = tw.k1->default_precision() * tw.k1->ramification();
    CHECK(rho(T, FieldElement::zero(tw.k1)).equals(FieldElement::one(tw.k2)));
    for (int i = 0; i < 10; ++i) {
      long vmin = T.kase == Case::A ? 0 : 1;
      auto y = random_element(tw.k1, rng, vmin, vmin + 2, prec);
      auto t = rho(T, y);
      auto one = FieldElement::one(tw.k2, prec);
      CHECK(norm(t, tw.k1).equals(FieldElement::one(tw.k1, prec)));
      CHECK((t * rho(T, -y)).equals(one));
      CHECK((t * apply(tw.tau, t)).equals(one));
    }
  }
  auto T = build_max_torus(Case::B, 5, 5, 2, 0, 0, 30);
  CHECK_THROWS_AS(rho(T, FieldElement::one(T.tower->k1)), std::invalid_argument);
}

TEST_CASE("momentum map properties") {
  std::mt19937_64 rng(testing::suite_seed() + 12);
  for (auto T : {build_max_torus(Case::B, 5, 5, 2, 0, 0, 30), build_max_torus(Case::B, 7, 7, 1, 1, 0, 30),
                 build_max_torus(Case::A, 5, 5, 1, 1, 0, 30)}) {
    const Tower& tw = *T.tower;
    long prec = 24;
    auto lie = [&](long vmin) { return embed(random_element(tw.k1, rng, vmin, vmin + 2, prec), tw.k2) * T.u(); };
    auto X = lie(0), Y = lie(0);
    auto w = random_element(tw.k2, rng, 0, 2, prec);
    CHECK(momentum_pairing(T, FieldElement::zero(tw.k2), X).is_zero());
    for (int i = 0; i < 5; ++i) {
      auto a = random_element(tw.k, rng, 0, 2, prec);
      CHECK(momentum_pairing(T, embed(a, tw.k2) * w, X).equals(a * a * momentum_pairing(T, w, X)));
      long vmin = T.kase == Case::A ? 0 : 1;
      auto t = rho(T, random_element(tw.k1, rng, vmin, vmin + 2, prec));
      CHECK(momentum_pairing(T, t * w, X).equals(momentum_pairing(T, w, X)));
      auto b = random_element(tw.k, rng, 0, 2, prec);
      CHECK(momentum_pairing(T, w, embed(b, tw.k2) * X + Y)
                .equals(b * momentum_pairing(T, w, X) + momentum_pairing(T, w, Y)));
      CHECK(momentum_pairing(T, w, X).equals(momentum_direct(T, w, X)));
      w = random_element(tw.k2, rng, 0, 2, prec);
      X = lie(0);
    }
  }
}

TEST_CASE("lie generators lie in the lie algebra") {
  auto T = build_max_torus(Case::B, 5, 5, 2, 0, 0, 30);
  for (const auto& S : all_subtori(T))
    for (const auto& X : lie_generators(S)) CHECK(in_lie_algebra(S, X));
  auto A = build_max_torus(Case::A, 5, 5, 3, 1, 0, 20);
  for (const auto& S : all_subtori(A))
    for (const auto& X : lie_generators(S)) CHECK(in_lie_algebra(S, X));
}

TEST_CASE("weil spectrum parity and parameter count") {
  for (int v : {0, 1}) {
    auto T = build_max_torus(Case::B, 5, 5, 2, v, 0, 20);
    for (const auto& ch : weil_spectrum(T, 8)) CHECK(((ch.conductor - T.mu()) % 2 + 2) % 2 == 0);
  }
  auto A = build_max_torus(Case::A, 5, 5, 1, 1, 0, 20);
  auto sp = weil_spectrum(A, 6);
  std::map<long, long> per;
  for (const auto& ch : sp) per[ch.conductor] += 1;
  CHECK(per[0] == 1);
  CHECK(per[2] == 12);
  CHECK(per[4] == 12);
  CHECK(per[6] == 12);
  CHECK(per.count(1) == 0);
  CHECK_THROWS_AS(weil_spectrum(A, -1), std::invalid_argument);
}

TEST_CASE("embeddability into a symplectic space") {
  ExtensionSpec cubic{5, 1, 3, 1, 1, 1};
  CHECK_FALSE(elliptic_embeddable(cubic).embeddable);
  for (long p : {3L, 5L, 7L, 11L}) {
    CHECK_FALSE(elliptic_embeddable({p, 1, 3, 1, 1, 1}).embeddable);
    CHECK_FALSE(elliptic_embeddable({p, 1, 5, 1, 1, 1}).embeddable);
    CHECK(elliptic_embeddable({p, 1, 2, 1, 1, 1}).embeddable);
    CHECK(elliptic_embeddable({p, 1, 1, 2, 1, 1}).embeddable);
  }
  auto r = elliptic_embeddable({5, 1, 4, 1, 2, 1});
  CHECK(r.embeddable);
  REQUIRE(r.tau);
  CHECK(r.tau->a == 2);
  CHECK_THROWS_AS(elliptic_embeddable({5, 1, 3, 1, 2, 1}), std::invalid_argument);
  CHECK_THROWS_AS(elliptic_embeddable({5, 1, 1, 5, 1, 1}), std::invalid_argument);
}
