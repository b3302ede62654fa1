#pragma once

#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tori/cyclomod.hpp"
#include "tori/padic.hpp"

namespace tori {

enum class Case { A, B };

inline const char* case_name(Case c) { return c == Case::A ? "A" : "B"; }

/// The tower k < k' < k'' carrying a maximal irreducible torus.
///   Case A: k'/k unramified of degree 2f, k''/k' ramified, pi''^2 = pi'.
///   Case B: k'/k totally ramified of degree 2e, pi'^{2e} = pi, k''/k' unramified.
struct Tower {
  Case kase = Case::A;
  long p = 0;
  int r = 1;
  int half = 1;
  FieldPtr k, k1, k2;
  FieldElement d;   // non-square unit of k (Teichmuller lift of the smallest non-residue)
  FieldElement nu;  // case B: sqrt(d) in k''; case A: pi''
  Automorphism tau;  // the non-trivial automorphism of k''/k'
  std::optional<Automorphism> gamma_gen;  // generator of the cyclic group of order 2*half acting on k''

  long order() const { return 2L * half; }
  std::uint64_t q() const { return k->q(); }
};

inline std::shared_ptr<const Tower> build_tower(Case kase, long p, int r, int half, long precision) {
  auto t = std::make_shared<Tower>();
  t->kase = kase;
  t->p = p;
  t->r = r;
  t->half = half;
  t->k = LocalField::make_base(p, r, precision);
  if (kase == Case::A) {
    t->k1 = LocalField::make_unramified(t->k, 2 * half);
    t->k2 = LocalField::make_eisenstein(t->k1, 2);
  } else {
    t->k1 = LocalField::make_eisenstein(t->k, 2 * half);
    t->k2 = LocalField::make_unramified(t->k1, 2);
  }
  long N2 = precision * t->k2->ramification();
  t->d = FieldElement::teichmuller(t->k, t->k->residue().smallest_nonsquare(), precision);
  const ResidueField& res2 = t->k2->residue();
  if (kase == Case::A) {
    t->nu = FieldElement::uniformizer(t->k2, N2);
    t->tau = Automorphism{0, res2.from_int(-1)};
    t->gamma_gen = Automorphism{r, std::nullopt};
  } else {
    t->nu = sqrt(embed(t->d, t->k2));
    t->tau = Automorphism{r, std::nullopt};
    std::uint64_t n = 2ULL * static_cast<std::uint64_t>(half);
    if ((res2.size() - 1) % n == 0) {
      for (std::uint64_t i = 1; i < res2.size(); ++i) {
        auto z = res2.element(i);
        if (res2.pow(z, n) != res2.one()) continue;
        bool primitive = true;
        for (std::uint64_t m = 1; m < n; ++m)
          if (n % m == 0 && res2.pow(z, m) == res2.one()) primitive = false;
        if (primitive) {
          t->gamma_gen = Automorphism{0, z};
          break;
        }
      }
    }
  }
  return t;
}

/// Parameters of a maximal irreducible torus and its derived quantities.
struct TorusDescriptor {
  Case kase = Case::A;
  long p = 0;
  std::uint64_t q = 0;
  int r = 1;
  int half = 1;          // f in case A, e in case B
  int vu = 1;            // v''(u); forced to 1 in case A
  long lambda_psi = 0;
  std::optional<std::uint64_t> gamma;  // index of the twist residue in F_{q'}; case A only
  long precision = 40;
  bool multiplicity_supported = true;
  std::shared_ptr<const Tower> tower;

  long order() const { return 2L * half; }
  /// mu = e(k'/k) lambda_psi - delta - v''(u).
  long mu() const {
    if (kase == Case::A) return lambda_psi - 1;
    return 2L * half * lambda_psi - (2L * half - 1) - vu;
  }
  /// Residue cardinality of k'.
  std::uint64_t q_prime() const { return kase == Case::A ? upow(q, static_cast<unsigned>(2 * half)) : q; }
  bool twisted() const { return gamma.has_value(); }
  /// u with v''(u) as configured: case A pi'', case B pi'^v nu.
  FieldElement u() const {
    if (kase == Case::A) return tower->nu;
    return tower->nu.shift(vu);
  }
};

/// Builds the descriptor; case A with p | f is refused unless allow_p_divides_f is set,
/// in which case only the admissibility decision is available.
inline TorusDescriptor build_max_torus(Case kase, long p, std::uint64_t q, int half, int vu = 1,
                                       long lambda_psi = 0, long precision = 40,
                                       std::optional<std::uint64_t> gamma = std::nullopt,
                                       bool allow_p_divides_f = false) {
  if (p == 2 || !is_prime(p)) throw std::invalid_argument("p must be an odd prime");
  int r = 0;
  std::uint64_t t = q;
  while (t > 1 && t % static_cast<std::uint64_t>(p) == 0) {
    t /= static_cast<std::uint64_t>(p);
    ++r;
  }
  if (t != 1 || r < 1) throw std::invalid_argument("q must be a power of p");
  if (half < 1) throw std::invalid_argument("half-degree must be positive");
  if (precision < 4) throw std::invalid_argument("precision must be at least 4");
  TorusDescriptor T;
  T.kase = kase;
  T.p = p;
  T.q = q;
  T.r = r;
  T.half = half;
  T.lambda_psi = lambda_psi;
  T.precision = precision;
  if (kase == Case::A) {
    if (vu != 1) throw std::invalid_argument("case A forces v''(u) = 1");
    T.vu = 1;
    if (half % p == 0) {
      if (!allow_p_divides_f) throw std::invalid_argument("case A requires gcd(f, p) = 1");
      T.multiplicity_supported = false;
    }
    if (gamma) {
      std::uint64_t qp = T.q_prime();
      if (*gamma == 0 || *gamma >= qp) throw std::invalid_argument("twist must be a nonzero residue of k'");
      T.gamma = gamma;
      T.multiplicity_supported = false;
    }
  } else {
    if ((2L * half) % p == 0) throw std::invalid_argument("case B requires gcd(2e, p) = 1");
    if (vu != 0 && vu != 1) throw std::invalid_argument("v''(u) must be 0 or 1");
    if (gamma) throw std::invalid_argument("the twist applies to case A only");
    T.vu = vu;
  }
  T.tower = build_tower(kase, p, r, half, precision);
  if (gamma) {
    const ResidueField& res1 = T.tower->k1->residue();
    if (res1.is_square(res1.element(*gamma))) T.gamma.reset();  // square twists are trivial
  }
  return T;
}

/// Subtorus S cut out by the saturated module of a divisor set of |Gamma'| = 2*half.
struct SubtorusSpec {
  TorusDescriptor parent;
  std::set<long> divs;
  std::vector<int> I, Iprime;          // case B index sets
  std::vector<long> support_divisors;  // case A: s/pi'' = sum of W_d over these d
  long codim = 0;
  long dim = 0;
  int epsilon = 1;                // case A: 2 iff -1 is not in S
  std::uint64_t mu_index = 1;     // case B: |mu_{q+1} / mu_{q+1} cap S|
  Submodule mbar;

  bool is_full() const { return divs.empty(); }
  bool is_trivial() const { return codim == parent.order(); }
};

/// I_d = {0..n-1} minus {(n/d) l : gcd(l, d) = 1}.
inline std::vector<int> index_set_Id(long n, long d) {
  require_divides(d, n);
  std::vector<int> out;
  for (long i = 0; i < n; ++i) {
    bool excluded = false;
    if (i % (n / d) == 0) {
      long l = i / (n / d);
      excluded = std::gcd(l, d) == 1;
    }
    if (!excluded) out.push_back(static_cast<int>(i));
  }
  return out;
}

inline SubtorusSpec subtorus_from_divisors(const TorusDescriptor& T, const std::set<long>& divs) {
  long n = T.order();
  for (long d : divs) require_divides(d, n);
  SubtorusSpec S;
  S.parent = T;
  S.divs = divs;
  for (long d : divs) S.codim += euler_phi(d);
  S.dim = n - S.codim;
  S.mbar = saturated_module(n, divs);
  mpz_class g = 0;
  bool all_even = true;
  for (const auto& row : S.mbar.hnf()) {
    mpz_class s = std::accumulate(row.begin(), row.end(), mpz_class(0));
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), s.get_mpz_t());
    if (s % 2 != 0) all_even = false;
  }
  if (T.kase == Case::A) {
    S.epsilon = all_even ? 1 : 2;
    for (long d : divisors(n))
      if (!divs.count(d)) S.support_divisors.push_back(d);
  } else {
    std::set<int> I;
    for (long i = 0; i < n; ++i) I.insert(static_cast<int>(i));
    for (long d : divs) {
      auto Id = index_set_Id(n, d);
      std::set<int> keep(Id.begin(), Id.end());
      std::set<int> nxt;
      for (int i : I)
        if (keep.count(i)) nxt.insert(i);
      I = nxt;
    }
    for (long i = 0; i < n; ++i) {
      if (I.count(static_cast<int>(i))) S.I.push_back(static_cast<int>(i));
      else S.Iprime.push_back(static_cast<int>(i));
    }
    mpz_class qp1 = mpz_class(static_cast<unsigned long>(T.q + 1));
    mpz_class gg;
    mpz_gcd(gg.get_mpz_t(), qp1.get_mpz_t(), g.get_mpz_t());
    S.mu_index = mpz_class(qp1 / gg).get_ui();
  }
  return S;
}

/// All subtori of T, one per divisor subset, in mask order.
inline std::vector<SubtorusSpec> all_subtori(const TorusDescriptor& T) {
  auto divs = divisors(T.order());
  std::vector<SubtorusSpec> out;
  for (unsigned mask = 0; mask < (1u << divs.size()); ++mask) {
    std::set<long> D;
    for (size_t i = 0; i < divs.size(); ++i)
      if (mask & (1u << i)) D.insert(divs[i]);
    out.push_back(subtorus_from_divisors(T, D));
  }
  return out;
}

/// Description of T/T_j through its successive quotients.
struct Filtration {
  std::vector<std::uint64_t> steps;  // |T_i / T_{i+1}| for i = 0..j-1
  std::uint64_t order() const {
    std::uint64_t r = 1;
    for (auto s : steps) r *= s;
    return r;
  }
};

inline Filtration congruence_filtration(const TorusDescriptor& T, long j) {
  if (j < 1) throw std::invalid_argument("congruence_filtration: j must be positive");
  Filtration F;
  for (long i = 0; i < j; ++i) {
    if (T.kase == Case::B) F.steps.push_back(i == 0 ? T.q + 1 : T.q);
    else F.steps.push_back(i == 0 ? 2 : (i % 2 == 1 ? T.q_prime() : 1));
  }
  return F;
}

/// The element of T_1 with given "imaginary" part: case A y*pi'' with y in O',
/// case B y*nu with v'(y) >= 1.
inline FieldElement rho(const TorusDescriptor& T, const FieldElement& y) {
  const Tower& tw = *T.tower;
  if (!y.field()->same_as(*tw.k1)) throw std::invalid_argument("rho: argument must lie in k'");
  if (y.is_nonzero() && y.val() < (T.kase == Case::A ? 0 : 1))
    throw std::invalid_argument("rho: argument outside the domain");
  FieldElement y2 = y * y;
  long prec = y.is_exact_zero() ? tw.k1->default_precision() * tw.k1->ramification() : y.precision();
  FieldElement one = FieldElement::one(tw.k1, prec + 2 * tw.k1->ramification());
  FieldElement inside = T.kase == Case::A ? one + y2.shift(1) : one + embed(tw.d, tw.k1) * y2;
  FieldElement xi = hensel_sqrt(inside);
  FieldElement yy = embed(y, tw.k2);
  return embed(xi, tw.k2) + yy * tw.nu;
}

/// Membership of X in the Lie algebra of S (X in k'' with X/u in k').
inline bool in_lie_algebra(const SubtorusSpec& S, const FieldElement& X) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  FieldElement y;
  try {
    y = descend(X / T.u(), tw.k1);
  } catch (const std::invalid_argument&) {
    return false;
  }
  if (T.kase == Case::B) {
    auto c = coordinates(y.shift(T.vu), tw.k);
    std::set<int> I(S.I.begin(), S.I.end());
    for (int b = 0; b < static_cast<int>(c.size()); ++b)
      if (!I.count(b) && !c[b].is_zero()) return false;
    return true;
  }
  // case A: y must be killed by Phi_d(theta) components outside the support, i.e. annihilated
  // by the product of Phi_d(theta) over the support divisors.
  IntPoly prod = {1};
  for (long d : S.support_divisors) prod = poly_mul(prod, cyclotomic_poly(d));
  FieldElement acc = FieldElement::zero(tw.k1);
  FieldElement pw = y;
  for (size_t i = 0; i < prod.size(); ++i) {
    if (prod[i] != 0) acc = acc + pw.times(prod[i]);
    pw = frobenius(pw, T.r);
  }
  return acc.is_zero();
}

/// <phi(w), X> = 1/2 tr_{k'/k}((X/u) N_{k''/k'}(u w)).
inline FieldElement momentum_pairing(const TorusDescriptor& T, const FieldElement& w, const FieldElement& X) {
  const Tower& tw = *T.tower;
  if (w.is_exact_zero() || X.is_exact_zero()) return FieldElement::zero(tw.k);
  FieldElement u = T.u();
  FieldElement y = descend(X / u, tw.k1);
  FieldElement n = norm(u * w, tw.k1);
  return trace(y * n, tw.k).div_int(2);
}

/// <phi(w), X> = -1/4 tr_{k''/k}(u X w tau(w)).
inline FieldElement momentum_direct(const TorusDescriptor& T, const FieldElement& w, const FieldElement& X) {
  const Tower& tw = *T.tower;
  if (w.is_exact_zero() || X.is_exact_zero()) return FieldElement::zero(tw.k);
  FieldElement z = T.u() * X * w * apply(tw.tau, w);
  return -trace(z, tw.k).div_int(4);
}

/// Sum of component pairings for a product of tori over a common base.
inline FieldElement momentum_pairing(const std::vector<TorusDescriptor>& Ts, const std::vector<FieldElement>& ws,
                                     const std::vector<FieldElement>& Xs) {
  if (Ts.empty() || Ts.size() != ws.size() || ws.size() != Xs.size())
    throw std::invalid_argument("momentum_pairing: component count mismatch");
  FieldElement s = FieldElement::zero(Ts[0].tower->k);
  for (size_t i = 0; i < Ts.size(); ++i) {
    if (!Ts[i].tower->k->same_as(*Ts[0].tower->k)) throw std::invalid_argument("momentum_pairing: base mismatch");
    s = s + momentum_pairing(Ts[i], ws[i], Xs[i]);
  }
  return s;
}

/// Character data: conductor plus, in case A, the square class of the parameter.
struct CharacterSpec {
  char group = 'T';
  Case kase = Case::A;
  long conductor = 0;
  std::optional<std::uint64_t> parameter;  // case A: index of the residue alpha in F_{q'}
  bool square = true;
  std::uint64_t count = 1;  // number of characters carrying these data

  friend bool operator==(const CharacterSpec& a, const CharacterSpec& b) {
    return a.group == b.group && a.kase == b.kase && a.conductor == b.conductor && a.parameter == b.parameter &&
           a.square == b.square;
  }
};

/// Characters of T of conductor <= C occurring in the Weil restriction.
inline std::vector<CharacterSpec> weil_spectrum(const TorusDescriptor& T, long C) {
  if (C < 0) throw std::invalid_argument("weil_spectrum: bound must be nonnegative");
  std::vector<CharacterSpec> out;
  long mu = T.mu();
  if (T.kase == Case::B) {
    for (long c = 0; c <= C; ++c) {
      if (((c - mu) % 2 + 2) % 2 != 0) continue;
      CharacterSpec s;
      s.kase = Case::B;
      s.conductor = c;
      if (c == 0) s.count = 1;
      else if (c == 1) s.count = T.q;
      else s.count = (T.q + 1) * upow(T.q, static_cast<unsigned>(c - 2)) * (T.q - 1);
      out.push_back(s);
    }
    return out;
  }
  CharacterSpec triv;
  triv.kase = Case::A;
  triv.conductor = 0;
  out.push_back(triv);
  const ResidueField& res1 = T.tower->k1->residue();
  std::uint64_t qp = res1.size();
  for (long c = 2; c <= C; c += 2) {
    for (std::uint64_t i = 1; i < qp; ++i) {
      if (!res1.is_square(res1.element(i))) continue;
      CharacterSpec s;
      s.kase = Case::A;
      s.conductor = c;
      s.parameter = i;
      s.count = 2 * upow(qp, static_cast<unsigned>(c / 2 - 1));
      out.push_back(s);
    }
  }
  return out;
}

/// Extension k' = K_{r m, e} of k = K_{r,1} with T = ker N_{k'/L}, L = K_{r m_L, e_L}.
struct ExtensionSpec {
  long p = 3;
  int r = 1;
  int m = 1;    // unramified degree of k'/k
  int e = 1;    // ramification of k'/k
  int m_L = 1;  // L: unramified degree over k
  int e_L = 1;  // L: ramification over k
};

/// Automorphism of k' over k: sigma^{r*a} on the Galois ring and pi' -> zeta pi'.
struct ExtAutomorphism {
  int a = 0;
  ResidueField::Elt zeta;
};

struct EmbeddabilityResult {
  bool embeddable = false;
  std::optional<ExtAutomorphism> tau;
  std::string reason;
};

inline std::vector<ExtAutomorphism> automorphisms_over_base(const ExtensionSpec& X) {
  ResidueField res(X.p, X.r * X.m);
  // the e-th roots of unity are the ((Q - 1) / g)-th powers, g = gcd(e, Q - 1)
  std::uint64_t Q1 = res.size() - 1;
  std::uint64_t g = std::gcd(static_cast<std::uint64_t>(X.e), Q1);
  std::map<std::uint64_t, ResidueField::Elt> found;
  for (std::uint64_t i = 1; i < res.size() && found.size() < g; ++i) {
    auto z = res.pow(res.element(i), Q1 / g);
    found.emplace(res.index(z), z);
  }
  std::vector<ResidueField::Elt> roots;
  for (const auto& [idx, z] : found) roots.push_back(z);
  std::vector<ExtAutomorphism> out;
  for (int a = 0; a < X.m; ++a)
    for (const auto& z : roots) out.push_back({a, z});
  return out;
}

/// Decides whether some order-two automorphism tau of k'/k satisfies x tau(x) = 1 on T.
/// This holds exactly when [k':L] <= 2 and tau generates Aut(k'/L).
inline EmbeddabilityResult elliptic_embeddable(const ExtensionSpec& X) {
  if (X.p == 2 || !is_prime(X.p)) throw std::invalid_argument("elliptic_embeddable: p must be an odd prime");
  if (X.m < 1 || X.e < 1 || X.r < 1 || X.m_L < 1 || X.e_L < 1 || X.m % X.m_L != 0 || X.e % X.e_L != 0)
    throw std::invalid_argument("elliptic_embeddable: inconsistent extension data");
  if (X.e % X.p == 0) throw std::invalid_argument("elliptic_embeddable: wild ramification is not supported");
  ResidueField res(X.p, X.r * X.m);
  auto one = res.one();
  auto compose_is_identity = [&](const ExtAutomorphism& s) {
    // s o s = (2a, sigma^{r a}(zeta) zeta)
    auto z2 = res.mul(res.frobenius(s.zeta, X.r * s.a), s.zeta);
    return (2 * s.a) % X.m == 0 && z2 == one;
  };
  auto fixes_L = [&](const ExtAutomorphism& s) {
    return s.a % X.m_L == 0 && res.pow(s.zeta, static_cast<std::uint64_t>(X.e / X.e_L)) == one;
  };
  long rel = static_cast<long>(X.m / X.m_L) * (X.e / X.e_L);
  EmbeddabilityResult out;
  for (const auto& s : automorphisms_over_base(X)) {
    bool identity = s.a == 0 && s.zeta == one;
    if (identity || !compose_is_identity(s)) continue;
    if (rel == 1 || (rel == 2 && fixes_L(s))) {
      out.embeddable = true;
      out.tau = s;
      out.reason = rel == 1 ? "trivial torus" : "tau generates Aut(k'/L)";
      return out;
    }
  }
  out.reason = rel > 2 ? "[k':L] > 2" : "no order-two automorphism over k";
  return out;
}

}  // namespace tori
