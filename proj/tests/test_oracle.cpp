#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tori/multiplicity.hpp"
#include "tori/oracle.hpp"

using namespace tori;

TEST_CASE("quotient group orders match the congruence filtration") {
  auto B = build_max_torus(Case::B, 3, 3, 1, 0, 0, 20);
  CHECK(oracle::quotient_group(B, 1).order() == 4);
  for (long N = 1; N <= 4; ++N) CHECK(oracle::quotient_group(B, N).order() == congruence_filtration(B, N).order());
  auto B2 = build_max_torus(Case::B, 5, 5, 2, 1, 0, 20);
  for (long N = 1; N <= 3; ++N)
    CHECK(oracle::quotient_group(B2, N).order() == congruence_filtration(B2, N).order());
  auto A = build_max_torus(Case::A, 3, 3, 1, 1, 0, 20);
  for (long N = 1; N <= 4; ++N) CHECK(oracle::quotient_group(A, N).order() == congruence_filtration(A, N).order());
}

TEST_CASE("the character group has the order of the group") {
  auto B = build_max_torus(Case::B, 3, 3, 1, 1, 0, 20);
  auto G = oracle::quotient_group(B, 3);
  CHECK(oracle::all_characters(G).size() == G.order());
  auto A = build_max_torus(Case::A, 3, 3, 1, 1, 0, 20);
  auto GA = oracle::quotient_group(A, 3);
  CHECK(oracle::all_characters(GA).size() == GA.order());
}

TEST_CASE("case A spectrum selects half of the characters of each even conductor") {
  auto A = build_max_torus(Case::A, 3, 3, 1, 1, 0, 20);
  auto G = oracle::quotient_group(A, 4);
  std::map<long, long> all, sel;
  for (const auto& c : oracle::weil_characters_mod(G)) {
    all[c.conductor] += 1;
    if (c.in_spectrum) sel[c.conductor] += 1;
  }
  for (long c : {2L, 4L}) {
    CHECK(all[c] > 0);
    CHECK(2 * sel[c] == all[c]);
  }
}

TEST_CASE("case B spectrum matches the closed-form character counts") {
  for (int v : {0, 1}) {
    auto B = build_max_torus(Case::B, 3, 3, 1, v, 0, 20);
    auto G = oracle::quotient_group(B, 4);
    std::map<long, std::uint64_t> sel;
    for (const auto& c : oracle::weil_characters_mod(G))
      if (c.in_spectrum) sel[c.conductor] += 1;
    for (const auto& ch : weil_spectrum(B, 4)) CHECK(sel[ch.conductor] == ch.count);
  }
}

TEST_CASE("restriction counts are stable under raising the level") {
  auto B = build_max_torus(Case::B, 3, 3, 1, 1, 0, 20);
  for (const auto& S : all_subtori(B)) {
    if (S.is_trivial()) continue;
    auto t5 = oracle::restrict_counts(S, 5, 4);
    auto t6 = oracle::restrict_counts(S, 6, 4);
    CHECK(oracle::profile(t5) == oracle::profile(t6));
    CHECK(oracle::filtration_matches(S, t5));
    // non-admissible subtori pick up characters of other conductors
    if (is_admissible(S).verdict == Verdict::admissible) CHECK(t5.conductor_preserved());
    else CHECK_FALSE(t5.conductor_preserved());
  }
}

TEST_CASE("closed-form multiplicities match the oracle for q = 3, e = 1") {
  for (int v : {0, 1}) {
    auto B = build_max_torus(Case::B, 3, 3, 1, v, 0, 20);
    for (const auto& S : all_subtori(B)) {
      if (S.is_trivial() || is_admissible(S).verdict != Verdict::admissible) continue;
      auto tab = oracle::restrict_counts(S, 6, 5);
      for (const auto& e : tab.entries) {
        CharacterSpec ch;
        ch.kase = Case::B;
        ch.group = 'S';
        ch.conductor = e.conductor;
        CHECK(multiplicity(S, ch).value(3) == e.count);
      }
    }
  }
}

TEST_CASE("submodule enumeration") {
  CHECK(oracle::enumerate_submodules(1).minimal.size() == 1);
  CHECK(oracle::enumerate_submodules(2).minimal.size() == 2);
  CHECK(oracle::enumerate_submodules(6).minimal.size() == 4);
  CHECK(oracle::enumerate_submodules(4).all.size() == 7);
  CHECK_THROWS_AS(oracle::enumerate_submodules(17), std::invalid_argument);
}

TEST_CASE("oracle refusals") {
  auto T = build_max_torus(Case::B, 5, 25, 1, 0, 0, 10);
  CHECK_THROWS_AS(oracle::TorusModel(T, 3), std::invalid_argument);
}
