#pragma once

#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tori/padic.hpp"

namespace tori::testing {

/// Seed for randomized suites: TORI_SEED from the environment, else a fixed default.
inline std::uint64_t suite_seed() {
  if (const char* s = std::getenv("TORI_SEED")) return std::strtoull(s, nullptr, 10);
  return 20240611ULL;
}

/// An extension K / k used by the arithmetic property suite.
struct FieldPair {
  std::string name;
  FieldPtr K, k;
};

inline constexpr long kSuitePrecision = 20;

inline std::vector<FieldPair> property_fields() {
  std::vector<FieldPair> out;
  auto q3 = LocalField::make_base(3, 1, kSuitePrecision);
  out.push_back({"Q3(unr 2)/Q3", LocalField::make_unramified(q3, 2), q3});
  auto q5 = LocalField::make_base(5, 1, kSuitePrecision);
  out.push_back({"Q5(pi^2=5)/Q5", LocalField::make_eisenstein(q5, 2), q5});
  auto q7 = LocalField::make_base(7, 1, kSuitePrecision);
  out.push_back({"Q7(unr 3)/Q7", LocalField::make_unramified(q7, 3), q7});
  auto q5e = LocalField::make_eisenstein(q5, 2);
  out.push_back({"Q5(pi^2=5)(unr 2)/Q5(pi^2=5)", LocalField::make_unramified(q5e, 2), q5e});
  auto q5u = LocalField::make_unramified(q5, 2);
  out.push_back({"Q5(unr 2)(pi^2=pi)/Q5(unr 2)", LocalField::make_eisenstein(q5u, 2), q5u});
  return out;
}

inline const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = {"ultrametric",   "norm_multiplicative", "trace_linear",
                                                 "hensel_sqrt",   "exp_log_inverse",     "norm_group_closure"};
  return names;
}

struct PropertyOutcome {
  std::map<std::string, long> failures;
  std::map<std::string, long> instances;
  long total_failures() const {
    long t = 0;
    for (const auto& [k, v] : failures) t += v;
    return t;
  }
};

/// Runs `n` random instances of each property on K / k.
inline PropertyOutcome run_properties(const FieldPair& fp, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const FieldPtr& K = fp.K;
  const FieldPtr& k = fp.k;
  long N = K->default_precision() * K->ramification() / k->ramification();
  long Nk = k->default_precision();
  PropertyOutcome out;
  for (const auto& name : property_names()) {
    out.failures[name] = 0;
    out.instances[name] = n;
  }
  auto fail = [&](const char* name) { ++out.failures[name]; };
  long E = K->ramification(), p = K->p();
  long exp_vmin = E / (p - 1) + 1;  // strict: v(X) > E / (p - 1)
  for (long i = 0; i < n; ++i) {
    {
      FieldElement x = random_element(K, rng, -2, 4, N), y = random_element(K, rng, -2, 4, N);
      FieldElement s = x + y;
      long m = std::min(x.val(), y.val());
      bool ok = s.is_zero() ? s.precision() >= m : s.val() >= m;
      if (ok && x.val() != y.val()) ok = !s.is_zero() && s.val() == m;
      if (!ok) fail("ultrametric");
    }
    {
      FieldElement x = random_element(K, rng, -1, 2, N), y = random_element(K, rng, -1, 2, N);
      if (!norm(x * y, k).equals(norm(x, k) * norm(y, k))) fail("norm_multiplicative");
    }
    {
      FieldElement x = random_element(K, rng, 0, 3, N), y = random_element(K, rng, 0, 3, N);
      FieldElement a = random_element(k, rng, 0, 2, Nk), b = random_element(k, rng, 0, 2, Nk);
      FieldElement lhs = trace(embed(a, K) * x + embed(b, K) * y, k);
      FieldElement rhs = a * trace(x, k) + b * trace(y, k);
      if (!lhs.equals(rhs)) fail("trace_linear");
    }
    {
      FieldElement x = FieldElement::one(K, N) + random_element(K, rng, 1, 3, N);
      FieldElement y = hensel_sqrt(x);
      bool ok = (y * y).equals(x) && (y - FieldElement::one(K, N)).val_lower() >= 1;
      if (!ok) fail("hensel_sqrt");
    }
    {
      FieldElement X = random_element(K, rng, exp_vmin, exp_vmin + 3, N);
      FieldElement ex = exp(X);
      FieldElement d = ex - FieldElement::one(K, N);
      bool ok = !d.is_zero() && d.val() == X.val();
      ok = ok && log(ex).equals(X);
      FieldElement x1 = FieldElement::one(K, N) + X;
      ok = ok && exp(log(x1)).equals(x1);
      if (!ok) fail("exp_log_inverse");
    }
    {
      FieldElement x = random_element(K, rng, -3, 3, N), y = random_element(K, rng, -3, 3, N);
      bool ok = true;
      for (QuadraticExt ext : {QuadraticExt::unramified, QuadraticExt::ramified}) {
        bool a = in_norm_group(x, ext), b = in_norm_group(y, ext), c = in_norm_group(x * y, ext);
        if (c != (a == b)) ok = false;
      }
      if (!ok) fail("norm_group_closure");
    }
  }
  return out;
}

}  // namespace tori::testing
