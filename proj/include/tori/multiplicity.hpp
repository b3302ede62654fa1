#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tori/admissible.hpp"

namespace tori {

/// coeff * q^(half_exp / 2), exact.
struct QPower {
  mpz_class coeff = 1;
  long half_exp = 0;

  static QPower of(const mpz_class& c, long exp = 0) { return {c, 2 * exp}; }
  bool integral_exponent() const { return half_exp % 2 == 0; }
  double exponent() const { return static_cast<double>(half_exp) / 2.0; }

  friend QPower operator*(const QPower& a, const QPower& b) { return {a.coeff * b.coeff, a.half_exp + b.half_exp}; }
  friend QPower operator+(const QPower& a, const QPower& b) {
    if (a.half_exp != b.half_exp) throw std::invalid_argument("QPower: sum needs equal exponents");
    return {a.coeff + b.coeff, a.half_exp};
  }
  /// Symbolic equality after moving full powers of q out of the coefficient.
  bool equals(const QPower& o, std::uint64_t q) const {
    QPower a = normalized(q), b = o.normalized(q);
    return a.coeff == b.coeff && a.half_exp == b.half_exp;
  }
  QPower normalized(std::uint64_t q) const {
    QPower r = *this;
    if (r.coeff == 0) return {0, 0};
    mpz_class qq = static_cast<unsigned long>(q);
    while (r.coeff % qq == 0) {
      r.coeff /= qq;
      r.half_exp += 2;
    }
    return r;
  }
  QPower pow(long n) const {
    if (n < 0) throw std::invalid_argument("QPower: negative power");
    QPower r;
    for (long i = 0; i < n; ++i) r = r * *this;
    return r;
  }
  /// Integer value; requires a non-negative integral exponent.
  mpz_class value(std::uint64_t q) const {
    if (!integral_exponent() || half_exp < 0) throw std::invalid_argument("QPower: value is not an integer");
    mpz_class r = coeff, qq = static_cast<unsigned long>(q);
    for (long i = 0; i < half_exp / 2; ++i) r *= qq;
    return r;
  }
  std::string str() const {
    std::string e = half_exp % 2 == 0 ? std::to_string(half_exp / 2) : std::to_string(half_exp) + "/2";
    return coeff.get_str() + "*q^" + e;
  }
};

/// Theta(alpha): residues s of O' cap (s/pi'')^perp with alpha + s a nonzero square.
struct ThetaSet {
  ResidueField::Elt alpha;
  std::vector<ResidueField::Elt> elements;
  std::uint64_t size() const { return elements.size(); }
};

struct MultiplicityReport {
  CharacterSpec character;
  QPower m;
  std::optional<QPower> vol;
  std::optional<std::uint64_t> oracle;
  bool agree_m_vol = false;
  std::optional<bool> agree_m_oracle;
};

namespace detail {

inline void require_multiplicity_setting(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  if (!T.multiplicity_supported)
    throw std::invalid_argument("multiplicities need an untwisted tower with gcd(f, p) = 1");
  if (S.is_trivial()) throw std::invalid_argument("the trivial subtorus carries no multiplicity data");
  if (is_admissible(S).verdict != Verdict::admissible) throw std::invalid_argument("subtorus is not admissible");
}

inline ResidueField::Elt square_parameter(const SubtorusSpec& S, const CharacterSpec& chi) {
  const ResidueField& res = S.parent.tower->k1->residue();
  if (!chi.parameter) throw std::invalid_argument("character parameter required");
  if (*chi.parameter == 0 || *chi.parameter >= res.size()) throw std::invalid_argument("parameter out of range");
  auto a = res.element(*chi.parameter);
  if (!res.is_square(a)) throw std::invalid_argument("parameter is not a square");
  return a;
}

/// F_q-span enumeration of residue vectors, collecting s with alpha + s a nonzero square.
inline ThetaSet theta_from_residues(const ResidueField& res, const ResidueField::Elt& alpha,
                                    const std::vector<ResidueField::Elt>& basis,
                                    const std::vector<ResidueField::Elt>& base) {
  ThetaSet out;
  out.alpha = alpha;
  std::uint64_t q = base.size();
  std::uint64_t total = 1;
  for (size_t i = 0; i < basis.size(); ++i) {
    if (total > 50000000 / q) throw BudgetError("theta set enumeration exceeds budget");
    total *= q;
  }
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t t = idx;
    auto s = res.zero();
    for (const auto& b : basis) {
      std::uint64_t c = t % q;
      t /= q;
      if (c) s = res.add(s, res.mul(base[c], b));
    }
    if (res.is_nonzero_square(res.add(alpha, s))) out.elements.push_back(s);
  }
  return out;
}

/// |{1, ..., j-2} cap (2e N + I')| restricted to integers of the given parity (-1: any).
inline long count_in_progression(const std::vector<int>& Iprime, long n, long lo, long hi, int parity) {
  long c = 0;
  for (long t = lo; t <= hi; ++t) {
    if (parity >= 0 && t % 2 != parity) continue;
    long r = t % n;
    for (int i : Iprime)
      if (i == r) {
        ++c;
        break;
      }
  }
  return c;
}

}  // namespace detail

inline ThetaSet theta_set(const ResidueField::Elt& alpha, const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  if (T.kase != Case::A) throw std::invalid_argument("theta_set: case A only");
  if (!T.multiplicity_supported) throw std::invalid_argument("theta_set: requires gcd(f, p) = 1 and no twist");
  const ResidueField& res = T.tower->k1->residue();
  if (!res.is_nonzero_square(alpha)) throw std::invalid_argument("theta_set: alpha must be a nonzero square");
  ResidueLattice L = complement_lattice_A(S);
  return detail::theta_from_residues(res, alpha, L.residues, L.base_residues);
}

/// m(chi) = eps_S |Theta(alpha)| q^{codim(s)(j-1)} for conductor 2j; 1 for trivial chi.
inline QPower multiplicity_case_A(const SubtorusSpec& S, const CharacterSpec& chi) {
  if (S.parent.kase != Case::A) throw std::invalid_argument("multiplicity_case_A: case B subtorus");
  detail::require_multiplicity_setting(S);
  if (chi.conductor == 0) return QPower::of(1);
  if (chi.conductor < 0) throw std::invalid_argument("multiplicity_case_A: negative conductor");
  if (chi.conductor % 2 != 0) return QPower::of(0);
  // parameters outside the norm class never occur
  if (!chi.square) return QPower::of(0);
  long j = chi.conductor / 2;
  auto alpha = detail::square_parameter(S, chi);
  ThetaSet th = theta_set(alpha, S);
  return QPower{mpz_class(S.epsilon) * static_cast<unsigned long>(th.size()), 2 * S.codim * (j - 1)};
}

/// Closed-form multiplicity in case B.
inline QPower multiplicity_case_B(const SubtorusSpec& S, const CharacterSpec& chi) {
  const TorusDescriptor& T = S.parent;
  if (T.kase != Case::B) throw std::invalid_argument("multiplicity_case_B: case A subtorus");
  detail::require_multiplicity_setting(S);
  long c = chi.conductor;
  if (c < 0) throw std::invalid_argument("multiplicity_case_B: negative conductor");
  mpz_class index = static_cast<unsigned long>(S.mu_index);
  if (S.is_full()) {
    // every character of T occurs once exactly when its conductor has the parity of mu
    return QPower::of(((c - T.mu()) % 2 == 0) ? 1 : 0);
  }
  if (c == 0) {
    if (T.vu == 1) return QPower::of(1);
    return QPower::of(index - 1);
  }
  int parity = T.vu == 0 ? 1 : 0;
  if (c % 2 != parity) return QPower::of(0);
  long e = detail::count_in_progression(S.Iprime, T.order(), 1, c - 2, parity);
  return QPower{index, 2 * e};
}

inline QPower multiplicity(const SubtorusSpec& S, const CharacterSpec& chi) {
  return S.parent.kase == Case::A ? multiplicity_case_A(S, chi) : multiplicity_case_B(S, chi);
}

/// Both sides of the case B exponent identity.
inline long exponent_progression_count(const std::vector<int>& Iprime, long n, long j) {
  return detail::count_in_progression(Iprime, n, 1, j - 2, -1);
}
inline long exponent_period_form(const std::vector<int>& Iprime, long n, long j) {
  long Q = detail::floor_div(j - 1, n);
  long l = j - 1 - n * Q;
  long c = 0;
  for (int i : Iprime)
    if (i >= 1 && i <= l - 1) ++c;
  return Q * static_cast<long>(Iprime.size()) + c;
}

/// Measure of O under the self-dual Haar measure: q^{lambda_psi / 2}.
inline QPower volume_of_O(const TorusDescriptor& T) { return QPower{1, T.lambda_psi}; }

/// Measure of pi^n O.
inline QPower volume_of_ideal(const TorusDescriptor& T, long n) { return QPower{1, T.lambda_psi - 2 * n}; }

namespace detail {

/// k-dimension of the span of elements of k'' (through coordinates over k).
inline long k_rank(const std::vector<FieldElement>& v, const FieldPtr& k) {
  if (v.empty()) return 0;
  std::vector<std::vector<FieldElement>> rows;
  for (const auto& x : v) rows.push_back(coordinates(x, k));
  int n = static_cast<int>(rows[0].size());
  // rank = n - dim ker(rows^T)
  std::vector<std::vector<FieldElement>> At(n, std::vector<FieldElement>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < n; ++c) At[c][r] = rows[r][c];
  long ker = static_cast<long>(kernel(At, static_cast<int>(rows.size()), k).size());
  return static_cast<long>(rows.size()) - ker;
}

/// |mu_{q+1} / mu_{q+1} cap S| by testing every (q+1)-th root of unity against M-bar.
inline std::uint64_t mu_index_by_enumeration(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  ResidueField res2(T.p, 2 * T.r);
  std::vector<mpz_class> sums;
  for (const auto& row : S.mbar.hnf()) sums.push_back(std::accumulate(row.begin(), row.end(), mpz_class(0)));
  std::uint64_t total = 0, in_s = 0;
  for (std::uint64_t i = 1; i < res2.size(); ++i) {
    auto z = res2.element(i);
    if (res2.pow(z, T.q + 1) != res2.one()) continue;
    ++total;
    bool killed = true;
    for (const auto& s : sums) {
      mpz_class e = s % static_cast<unsigned long>(T.q + 1);
      if (e < 0) e += static_cast<unsigned long>(T.q + 1);
      if (res2.pow(z, e.get_ui()) != res2.one()) killed = false;
    }
    if (killed) ++in_s;
  }
  return total / in_s;
}

/// |S / S_1| in case A, from evaluating the characters of M-bar at -1 in k''.
inline std::uint64_t component_order(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  if (T.kase != Case::A) throw std::invalid_argument("component_order: case A only");
  long prec = tw.k2->default_precision() * tw.k2->ramification();
  FieldElement minus_one = -FieldElement::one(tw.k2, prec);
  FieldElement one = FieldElement::one(tw.k2, prec);
  for (const auto& row : S.mbar.hnf()) {
    FieldElement acc = one, x = minus_one;
    for (size_t l = 0; l < row.size(); ++l) {
      long a = row[l].get_si();
      FieldElement xl = x;
      if (a != 0) acc = acc * (a > 0 ? xl.pow(a) : xl.inverse().pow(-a));
      x = apply(*tw.gamma_gen, x);
    }
    if (!(acc - one).is_zero()) return 1;
  }
  return 2;
}

}  // namespace detail

/// |S' / S'_1| for the complementary subtorus S' (case A). Differs from eps_S when -1 lies
/// in both S and S'.
inline std::uint64_t complement_component_order(const SubtorusSpec& S) {
  std::set<long> comp;
  for (long d : divisors(S.parent.order()))
    if (!S.divs.count(d)) comp.insert(d);
  return detail::component_order(subtorus_from_divisors(S.parent, comp));
}

/// Volume of the symplectic reduction of the momentum fiber at level j, computed from
/// the complementary subtorus, the trace-form complement and the self-dual measure.
inline QPower reduction_volume(const SubtorusSpec& S, const CharacterSpec& chi) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  detail::require_multiplicity_setting(S);
  if (S.is_full()) throw std::invalid_argument("reduction_volume: S must be proper");
  if (chi.conductor <= 0) throw std::invalid_argument("reduction_volume: character must be nontrivial");
  if (T.lambda_psi % 2 != 0) throw std::invalid_argument("reduction_volume: lambda_psi must be even");
  long mu = T.mu();
  if (T.kase == Case::A) {
    if (chi.conductor % 2 != 0) throw std::invalid_argument("reduction_volume: conductor must be even in case A");
    long j = chi.conductor / 2;
    // complementary subtorus S', used for the dimension of the reduced space
    std::set<long> comp;
    for (long d : divisors(T.order()))
      if (!S.divs.count(d)) comp.insert(d);
    SubtorusSpec Sp = subtorus_from_divisors(T, comp);
    long dim_sp = detail::k_rank(lie_generators(Sp), tw.k);
    // measure of S \ T relative to T_1: |T / T_1| / |S / S_1|
    int eps = static_cast<int>(2 / detail::component_order(S));
    // (s/pi'')^perp from the trace form against the Lie algebra of S
    auto gens = lie_generators(S);
    auto fb = detail::field_basis(tw.k1, tw.k);
    std::vector<std::vector<FieldElement>> A;
    for (const auto& X : gens) {
      FieldElement y = descend(X / T.u(), tw.k1);
      std::vector<FieldElement> row;
      for (const auto& b : fb) row.push_back(trace(y * b, tw.k));
      A.push_back(row);
    }
    auto ker = detail::kernel(A, static_cast<int>(fb.size()), tw.k);
    auto ech = detail::dvr_echelon(ker);
    std::vector<ResidueField::Elt> residues;
    for (const auto& r : ech) residues.push_back(detail::from_coordinates(r, tw.k1, tw.k).digit(0));
    auto base = detail::embedded_base_residues(tw.k, tw.k1);
    auto alpha = detail::square_parameter(S, chi);
    ThetaSet th = detail::theta_from_residues(tw.k1->residue(), alpha, residues, base);
    // density of the reduced symplectic measure against ds dx on the lattice pair
    QPower pair = volume_of_O(T) * volume_of_ideal(T, mu + 2 - j);
    QPower density = pair.pow(dim_sp);
    return QPower{mpz_class(eps) * static_cast<unsigned long>(th.size()), 0} * density;
  }
  long j = chi.conductor;
  if ((mu - j) % 2 != 0) throw std::invalid_argument("reduction_volume: mu - j must be even in case B");
  long n = T.order();
  long shift = j - mu - T.vu;
  long Qp = detail::floor_div(shift, n);
  long l = shift - n * Qp;
  QPower density;
  for (int i : S.Iprime) {
    long extra = (i >= 1 && i <= l - 1) ? 1 : 0;
    density = density * volume_of_ideal(T, 1) * volume_of_ideal(T, -Qp - extra);
  }
  mpz_class index = static_cast<unsigned long>(detail::mu_index_by_enumeration(S));
  return QPower{index, 0} * density;
}

/// Computes m(chi) and the reduction volume by their separate routes and compares them.
inline MultiplicityReport verify_identity(const SubtorusSpec& S, const CharacterSpec& chi) {
  MultiplicityReport R;
  R.character = chi;
  R.m = multiplicity(S, chi);
  R.vol = reduction_volume(S, chi);
  R.agree_m_vol = R.m.equals(*R.vol, S.parent.q);
  return R;
}

}  // namespace tori
