#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tori/cyclomod.hpp"
#include "tori/oracle.hpp"

using namespace tori;

namespace {

IntPoly poly(std::initializer_list<long> c) {
  IntPoly p;
  for (long x : c) p.push_back(x);
  return p;
}

}  // namespace

TEST_CASE("cyclotomic polynomials") {
  CHECK(cyclotomic_poly(1) == poly({-1, 1}));
  CHECK(cyclotomic_poly(2) == poly({1, 1}));
  CHECK(cyclotomic_poly(4) == poly({1, 0, 1}));
  CHECK(cyclotomic_poly(6) == poly({1, -1, 1}));
  CHECK(cyclotomic_poly(12) == poly({1, 0, -1, 0, 1}));
  CHECK(poly_mul(P_poly(6, 3), cyclotomic_poly(3)) == x_pow_minus_one(6));
  for (long f = 1; f <= 12; ++f)
    for (long d : divisors(f)) {
      CHECK(poly_mul(P_poly(f, d), cyclotomic_poly(d)) == x_pow_minus_one(f));
      CHECK(poly_mul(Q_poly(d), cyclotomic_poly(d)) == x_pow_minus_one(d));
      CHECK(poly_mul(H_poly(f, d), x_pow_minus_one(d)) == x_pow_minus_one(f));
    }
  CHECK_THROWS_AS(P_poly(6, 4), std::invalid_argument);
}

TEST_CASE("product of cyclotomic polynomials over divisors is X^n - 1") {
  for (long n = 1; n <= 16; ++n) {
    IntPoly acc = {1};
    for (long d : divisors(n)) acc = poly_mul(acc, cyclotomic_poly(d));
    CHECK(acc == x_pow_minus_one(n));
    CHECK(static_cast<long>(cyclotomic_poly(n).size()) - 1 == euler_phi(n));
  }
}

TEST_CASE("M_d is sigma-stable of rank phi(d) with torsion-free quotient") {
  CHECK(basis_Md(1, 1).rank() == 1);
  for (long f = 1; f <= 12; ++f)
    for (long d : divisors(f)) {
      Submodule M = basis_Md(f, d);
      INFO("f=" << f << " d=" << d);
      CHECK(M.rank() == euler_phi(d));
      CHECK(M.is_sigma_stable());
      CHECK(M.quotient_torsion_free());
    }
  CHECK_THROWS_AS(basis_Md(6, 4), std::invalid_argument);
}

TEST_CASE("minimal submodules for small f") {
  auto ranks = [](long f) {
    std::vector<long> r;
    for (const auto& m : classify_minimal(f, true)) r.push_back(m.rank());
    return r;
  };
  CHECK(ranks(2) == std::vector<long>{1, 1});
  CHECK(ranks(4) == std::vector<long>{1, 1, 2});
  CHECK(ranks(6) == std::vector<long>{1, 1, 2, 2});
  CHECK_THROWS_AS(classify_minimal(20, true, 12), BudgetError);
}

TEST_CASE("saturated divisor modules have rank sum of phi and torsion-free quotient") {
  for (long f : {4L, 6L, 8L, 12L}) {
    auto divs = divisors(f);
    for (unsigned mask = 1; mask < (1u << divs.size()); ++mask) {
      std::set<long> D;
      long rank = 0;
      for (size_t i = 0; i < divs.size(); ++i)
        if (mask & (1u << i)) {
          D.insert(divs[i]);
          rank += euler_phi(divs[i]);
        }
      Submodule S = saturated_module(f, D);
      CHECK(S.rank() == rank);
      CHECK(S.is_sigma_stable());
      CHECK(S.quotient_torsion_free());
      CHECK(S.contains(module_of_divisors(f, D)));
    }
  }
}

TEST_CASE("oracle enumeration agrees with the closed classification for f <= 6") {
  for (long f = 1; f <= 6; ++f) {
    auto closed = classify_minimal(f);
    auto enumerated = oracle::enumerate_submodules(f);
    std::set<IntMat> a, b;
    for (const auto& m : closed) a.insert(m.hnf());
    for (const auto& m : enumerated.minimal) b.insert(oracle::canonical(m, f));
    CHECK(a == b);
  }
  CHECK(oracle::enumerate_submodules(2).minimal.size() == 2);
  CHECK(oracle::enumerate_submodules(6).minimal.size() == 4);
}

TEST_CASE("smith invariants of a diagonal matrix") {
  IntMat A = {{2, 0}, {0, 3}};
  auto inv = detail::smith_invariants(A);
  std::vector<mpz_class> want = {1, 6};
  CHECK(inv == want);
}
