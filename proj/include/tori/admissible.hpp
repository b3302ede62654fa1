#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tori/torus.hpp"

namespace tori {

enum class Verdict { admissible, not_admissible };

inline const char* verdict_name(Verdict v) { return v == Verdict::admissible ? "admissible" : "not-admissible"; }

/// Admissibility verdict with its certificate.
struct Decision {
  Verdict verdict = Verdict::admissible;
  std::string route;
  // not-admissible: x in (s/u)^perp lying in the norm group, and w != 0 with N(u w) = x
  std::optional<FieldElement> x;
  std::optional<FieldElement> w;
  // admissible: residue evidence
  std::uint64_t residues_checked = 0;
  std::vector<long> basis_valuations;
  long complement_dim = 0;
};

namespace detail {

inline bool numerically_zero(const FieldElement& x, long digits) {
  if (x.is_exact_zero()) return true;
  if (x.is_zero()) return x.precision() >= digits;
  return x.val() >= digits;
}

/// Sum of c_i theta^i(x), theta = sigma^r.
inline FieldElement apply_poly_theta(const IntPoly& P, const FieldElement& x, int r) {
  FieldElement acc = FieldElement::zero(x.field());
  FieldElement pw = x;
  for (size_t i = 0; i < P.size(); ++i) {
    if (P[i] != 0) acc = acc + pw.times(P[i]);
    if (i + 1 < P.size()) pw = frobenius(pw, r);
  }
  return acc;
}

/// Kernel of A (rows x ncols over the field k) by elimination with minimal-valuation pivots.
inline std::vector<std::vector<FieldElement>> kernel(std::vector<std::vector<FieldElement>> A, int ncols,
                                                     const FieldPtr& k) {
  std::vector<int> pivot_col_of_row;
  size_t row = 0;
  std::vector<int> is_pivot(ncols, -1);
  for (int col = 0; col < ncols && row < A.size(); ++col) {
    size_t piv = A.size();
    long best = 0;
    for (size_t r = row; r < A.size(); ++r) {
      if (!A[r][col].is_nonzero()) continue;
      long v = A[r][col].val();
      if (piv == A.size() || v < best) {
        piv = r;
        best = v;
      }
    }
    if (piv == A.size()) continue;
    std::swap(A[piv], A[row]);
    FieldElement inv = A[row][col];
    for (int j = 0; j < ncols; ++j) A[row][j] = A[row][j] / inv;
    for (size_t r = 0; r < A.size(); ++r) {
      if (r == row || A[r][col].is_exact_zero()) continue;
      FieldElement f = A[r][col];
      for (int j = 0; j < ncols; ++j) A[r][j] = A[r][j] - f * A[row][j];
    }
    is_pivot[col] = static_cast<int>(row);
    ++row;
  }
  std::vector<std::vector<FieldElement>> basis;
  for (int free = 0; free < ncols; ++free) {
    if (is_pivot[free] >= 0) continue;
    std::vector<FieldElement> v(ncols, FieldElement::zero(k));
    v[free] = FieldElement::one(k);
    for (int col = 0; col < ncols; ++col)
      if (is_pivot[col] >= 0) v[col] = -A[is_pivot[col]][free];
    basis.push_back(v);
  }
  return basis;
}

/// Saturated O-basis of the lattice (span_k rows) cap O^n: unit pivots, pivot columns cleared.
inline std::vector<std::vector<FieldElement>> dvr_echelon(std::vector<std::vector<FieldElement>> rows) {
  std::vector<std::vector<FieldElement>> done;
  while (true) {
    long best = 0;
    int br = -1, bc = -1;
    for (size_t r = 0; r < rows.size(); ++r)
      for (size_t c = 0; c < rows[r].size(); ++c) {
        if (!rows[r][c].is_nonzero()) continue;
        long v = rows[r][c].val();
        if (br < 0 || v < best) {
          best = v;
          br = static_cast<int>(r);
          bc = static_cast<int>(c);
        }
      }
    if (br < 0) break;
    std::vector<FieldElement> pr = rows[br];
    FieldElement piv = pr[bc];
    for (auto& e : pr) e = e / piv;
    rows.erase(rows.begin() + br);
    for (auto& r : rows) {
      if (r[bc].is_exact_zero()) continue;
      FieldElement f = r[bc];
      for (size_t j = 0; j < r.size(); ++j) r[j] = r[j] - f * pr[j];
    }
    for (auto& r : done) {
      if (r[bc].is_exact_zero()) continue;
      FieldElement f = r[bc];
      for (size_t j = 0; j < r.size(); ++j) r[j] = r[j] - f * pr[j];
    }
    done.push_back(pr);
  }
  return done;
}

/// Element of k' from coordinates over k in the basis X^a pi'^b (index b*m + a).
inline FieldElement from_coordinates(const std::vector<FieldElement>& c, const FieldPtr& K, const FieldPtr& k) {
  int e = K->ramification() / k->ramification();
  int m = K->residue_degree() / k->residue_degree();
  long prec = K->default_precision() * K->ramification();
  FieldElement X = FieldElement::generator(K, prec + 8);
  FieldElement acc = FieldElement::zero(K);
  for (int b = 0; b < e; ++b) {
    FieldElement Xa = FieldElement::one(K, prec + 8);
    for (int a = 0; a < m; ++a) {
      const FieldElement& ci = c[b * m + a];
      if (!ci.is_exact_zero()) acc = acc + (embed(ci, K) * Xa).shift(b);
      if (a + 1 < m) Xa = Xa * X;
    }
  }
  return acc;
}

/// Basis of k' over k matching `coordinates`.
inline std::vector<FieldElement> field_basis(const FieldPtr& K, const FieldPtr& k) {
  int e = K->ramification() / k->ramification();
  int m = K->residue_degree() / k->residue_degree();
  long prec = K->default_precision() * K->ramification();
  std::vector<FieldElement> out(e * m);
  FieldElement X = FieldElement::generator(K, prec + 8);
  for (int b = 0; b < e; ++b) {
    FieldElement Xa = FieldElement::one(K, prec + 8);
    for (int a = 0; a < m; ++a) {
      out[b * m + a] = Xa.shift(b);
      if (a + 1 < m) Xa = Xa * X;
    }
  }
  return out;
}

/// Residues of F_q inside the residue field of K, indexed by their F_q index.
inline std::vector<ResidueField::Elt> embedded_base_residues(const FieldPtr& k, const FieldPtr& K) {
  std::vector<ResidueField::Elt> out;
  const ResidueField& rk = k->residue();
  for (std::uint64_t i = 0; i < rk.size(); ++i) {
    auto c = rk.element(i);
    if (rk.is_zero(c)) {
      out.push_back(K->residue().zero());
      continue;
    }
    out.push_back(embed(FieldElement::teichmuller(k, c, 2), K).digit(0));
  }
  return out;
}

/// Preimage z in k'' with N_{k''/k'}(z) = y for y in the norm group.
inline FieldElement norm_preimage(const TorusDescriptor& T, const FieldElement& y) {
  const Tower& tw = *T.tower;
  if (T.kase == Case::A) {
    if (T.twisted()) throw std::invalid_argument("norm_preimage: twisted towers are not realized");
    long m = y.val();
    FieldElement base = FieldElement::uniformizer(tw.k1, y.precision() + 4).times(-1);
    FieldElement s2 = y / base.pow(m);
    FieldElement s = sqrt(s2);
    return embed(s, tw.k2) * FieldElement::uniformizer(tw.k2, 2 * y.precision() + 8).pow(m);
  }
  long v = y.val();
  if (v % 2 != 0) throw std::invalid_argument("norm_preimage: odd valuation");
  FieldElement y0 = y.shift(-v);
  const ResidueField& res = tw.k1->residue();
  FieldElement dd = embed(tw.d, tw.k1);
  for (std::uint64_t i = 0; i < res.size(); ++i) {
    auto eta_r = res.element(i);
    FieldElement eta = FieldElement::from_residue(tw.k1, eta_r, y0.precision());
    FieldElement s = eta.is_exact_zero() ? y0 : y0 + dd * eta * eta;
    if (s.is_zero() || !is_square(s)) continue;
    FieldElement xi = sqrt(s);
    FieldElement z = embed(xi, tw.k2) + (eta.is_exact_zero() ? FieldElement::zero(tw.k2) : embed(eta, tw.k2) * tw.nu);
    return z.shift(v / 2);
  }
  throw std::logic_error("norm_preimage: no residue solution");
}

}  // namespace detail

/// k-spanning set of the Lie algebra s of S inside k''.
inline std::vector<FieldElement> lie_generators(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  std::vector<FieldElement> out;
  long prec = tw.k1->default_precision() * tw.k1->ramification();
  if (T.kase == Case::B) {
    for (int l : S.I) out.push_back(tw.nu.shift(l));
    return out;
  }
  auto basis = detail::field_basis(tw.k1, tw.k);
  FieldElement pi2 = FieldElement::uniformizer(tw.k2, 2 * prec + 8);
  for (long d : S.support_divisors) {
    IntPoly P = P_poly(T.order(), d);
    for (const auto& b : basis) {
      FieldElement g = detail::apply_poly_theta(P, b, T.r);
      if (!g.is_zero()) out.push_back(embed(g, tw.k2) * pi2);
    }
  }
  return out;
}

/// Case A: k-spanning set of (s/pi'')^perp = sum over d in the divisor set of Im P_{2f,d}(theta).
inline std::vector<FieldElement> orth_generators_A(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  std::vector<FieldElement> out;
  auto basis = detail::field_basis(tw.k1, tw.k);
  for (long d : S.divs) {
    IntPoly P = P_poly(T.order(), d);
    for (const auto& b : basis) {
      FieldElement g = detail::apply_poly_theta(P, b, T.r);
      if (!g.is_zero()) out.push_back(g);
    }
  }
  return out;
}

/// Saturated O-basis of (s/u)^perp cap O' together with its residues (case A).
struct ResidueLattice {
  std::vector<FieldElement> basis;              // elements of O'
  std::vector<ResidueField::Elt> residues;      // their residues in F_{q'}
  std::vector<ResidueField::Elt> base_residues;  // F_q embedded in F_{q'}
};

inline ResidueLattice complement_lattice_A(const SubtorusSpec& S) {
  const Tower& tw = *S.parent.tower;
  std::vector<std::vector<FieldElement>> rows;
  for (const auto& g : orth_generators_A(S)) rows.push_back(coordinates(g, tw.k));
  auto ech = detail::dvr_echelon(rows);
  ResidueLattice L;
  for (const auto& r : ech) {
    FieldElement x = detail::from_coordinates(r, tw.k1, tw.k);
    L.basis.push_back(x);
    L.residues.push_back(x.digit(0));
  }
  L.base_residues = detail::embedded_base_residues(tw.k, tw.k1);
  return L;
}

/// Calls fn on every nonzero F_q-combination of the residues; stops when fn returns true.
inline bool for_each_combination(const ResidueLattice& L, std::uint64_t budget,
                                 const std::function<bool(const std::vector<std::uint64_t>&,
                                                          const ResidueField::Elt&)>& fn,
                                 const ResidueField& res, std::uint64_t* visited = nullptr) {
  std::uint64_t q = L.base_residues.size();
  size_t n = L.residues.size();
  std::uint64_t total = 1;
  for (size_t i = 0; i < n; ++i) {
    if (total > budget / q + 1) throw BudgetError("residue enumeration exceeds budget");
    total *= q;
  }
  if (total > budget) throw BudgetError("residue enumeration exceeds budget");
  std::vector<std::uint64_t> c(n, 0);
  for (std::uint64_t idx = 1; idx < total; ++idx) {
    std::uint64_t t = idx;
    auto s = res.zero();
    for (size_t i = 0; i < n; ++i) {
      c[i] = t % q;
      t /= q;
      if (c[i]) s = res.add(s, res.mul(L.base_residues[c[i]], L.residues[i]));
    }
    if (visited) ++*visited;
    if (fn(c, s)) return true;
  }
  return false;
}

/// Case A residue-level kernel of prod_{d in D} Phi_d(Frobenius) on F_{q'} over F_p (q = p),
/// returned as an F_p-basis. Independent of the lattice route.
inline std::vector<ResidueField::Elt> residue_kernel_A(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  if (T.r != 1) throw std::invalid_argument("residue_kernel_A: requires q = p");
  const ResidueField& res = T.tower->k1->residue();
  long p = T.p;
  int n = res.degree();
  IntPoly P = {1};
  for (long d : S.divs) P = poly_mul(P, cyclotomic_poly(d));
  // matrix columns: images of the basis X^i
  std::vector<std::vector<long>> A(n, std::vector<long>(n, 0));
  for (int i = 0; i < n; ++i) {
    ResidueField::Elt e = res.zero();
    e[i] = 1;
    ResidueField::Elt acc = res.zero(), pw = e;
    for (size_t k = 0; k < P.size(); ++k) {
      long c = mpz_class(P[k] % p).get_si();
      if (c) acc = res.add(acc, res.scale(pw, c));
      pw = res.frobenius(pw, 1);
    }
    for (int row = 0; row < n; ++row) A[row][i] = acc[row];
  }
  // kernel mod p
  std::vector<int> pivcol(n, -1);
  int row = 0;
  for (int col = 0; col < n && row < n; ++col) {
    int piv = -1;
    for (int r = row; r < n; ++r)
      if (A[r][col] % p) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(A[piv], A[row]);
    long inv = inv_mod(A[row][col], p);
    for (auto& v : A[row]) v = v * inv % p;
    for (int r = 0; r < n; ++r) {
      if (r == row || A[r][col] == 0) continue;
      long f = A[r][col];
      for (int j = 0; j < n; ++j) A[r][j] = pmod(A[r][j] - f * A[row][j], p);
    }
    pivcol[col] = row++;
  }
  std::vector<ResidueField::Elt> out;
  for (int fcol = 0; fcol < n; ++fcol) {
    if (pivcol[fcol] >= 0) continue;
    ResidueField::Elt v(n, 0);
    v[fcol] = 1;
    for (int col = 0; col < n; ++col)
      if (pivcol[col] >= 0) v[col] = pmod(-A[pivcol[col]][fcol], p);
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------- case B

/// v''(u)=0: admissible iff every 2e/d is odd; v''(u)=1: iff every 2e/d is even.
inline Verdict parity_verdict_B(const SubtorusSpec& S) {
  long n = S.parent.order();
  for (long d : S.divs) {
    bool odd = (n / d) % 2 == 1;
    if (S.parent.vu == 0 && !odd) return Verdict::not_admissible;
    if (S.parent.vu == 1 && odd) return Verdict::not_admissible;
  }
  return Verdict::admissible;
}

/// v''(u)=0: admissible iff I' consists of odd indices; v''(u)=1: iff of even indices.
inline Verdict support_verdict_B(const SubtorusSpec& S) {
  for (int l : S.Iprime)
    if ((l + S.parent.vu) % 2 == 0) return Verdict::not_admissible;
  return Verdict::admissible;
}

/// Residue route: (s/u)^perp from the trace form, valuation echelon, even-valuation test.
inline Decision residue_verdict_B(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  int n = static_cast<int>(T.order());
  long prec = tw.k1->default_precision() * tw.k1->ramification();
  FieldElement one1 = FieldElement::one(tw.k1, prec);
  // constraints tr(pi'^{l-v} pi'^b) c_b summed over b, for l in I
  std::vector<std::vector<FieldElement>> A;
  for (int l : S.I) {
    std::vector<FieldElement> row;
    for (int b = 0; b < n; ++b) row.push_back(trace(one1.shift(l - T.vu + b), tw.k));
    A.push_back(row);
  }
  auto K = A.empty() ? std::vector<std::vector<FieldElement>>{} : detail::kernel(A, n, tw.k);
  if (A.empty())
    for (int b = 0; b < n; ++b) {
      std::vector<FieldElement> v(n, FieldElement::zero(tw.k));
      v[b] = FieldElement::one(tw.k);
      K.push_back(v);
    }
  std::vector<FieldElement> basis;
  for (const auto& v : K) basis.push_back(detail::from_coordinates(v, tw.k1, tw.k));
  // make valuations pairwise distinct modulo 2e
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < basis.size() && !changed; ++i)
      for (size_t j = 0; j < basis.size() && !changed; ++j) {
        if (i == j) continue;
        long vi = basis[i].val(), vj = basis[j].val();
        if (((vi - vj) % n + n) % n != 0 || vi < vj) continue;
        FieldElement bj = basis[j].shift(vi - vj);  // pi'^{vi-vj} is a power of pi
        const ResidueField& rk1 = tw.k1->residue();
        FieldElement lam = FieldElement::teichmuller(
            tw.k1, rk1.mul(basis[i].leading_digit(), rk1.inv(bj.leading_digit())), prec);
        FieldElement nb = basis[i] - lam * bj;
        if (nb.is_zero()) throw PrecisionError("residue_verdict_B: basis collapsed");
        if (nb.val() > prec / 2) throw PrecisionError("residue_verdict_B: valuation echelon ran out of precision");
        basis[i] = nb;
        changed = true;
      }
  }
  Decision D;
  D.route = "trace-form residue";
  D.complement_dim = static_cast<long>(basis.size());
  for (const auto& b : basis) D.basis_valuations.push_back(b.val());
  for (const auto& b : basis)
    if (b.val() % 2 == 0) {
      D.verdict = Verdict::not_admissible;
      D.x = b;
      D.w = detail::norm_preimage(T, b) / T.u();
      return D;
    }
  D.verdict = Verdict::admissible;
  D.residues_checked = basis.size();
  return D;
}

/// Monomial witness: l in I' with l + v even gives x = pi'^{l+v} in (s/u)^perp.
inline std::optional<FieldElement> monomial_witness_B(const SubtorusSpec& S) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  for (int l : S.Iprime)
    if ((l + T.vu) % 2 == 0) {
      long prec = tw.k2->default_precision() * tw.k2->ramification();
      FieldElement a = FieldElement::one(tw.k2, prec).shift((l + T.vu) / 2);
      return a / T.u();
    }
  return std::nullopt;
}

// ---------------------------------------------------------------- case A

inline Decision decide_A(const SubtorusSpec& S, std::uint64_t budget = 20000000) {
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  const ResidueField& res = tw.k1->residue();
  Decision D;
  D.route = "lattice residue";
  ResidueLattice L = complement_lattice_A(S);
  D.complement_dim = static_cast<long>(L.basis.size());
  for (const auto& b : L.basis) D.basis_valuations.push_back(b.val());
  std::optional<ResidueField::Elt> gamma;
  if (T.twisted()) gamma = res.element(*T.gamma);
  std::vector<std::uint64_t> hit;
  bool odd_class = false;  // hit in the class of gamma times a square: realized at odd valuation
  std::uint64_t visited = 0;
  bool found = for_each_combination(
      L, budget,
      [&](const std::vector<std::uint64_t>& c, const ResidueField::Elt& s) {
        if (res.is_zero(s)) return false;
        bool square = res.is_square(s);
        bool ok = square || (gamma && res.is_square(res.mul(s, res.inv(*gamma))));
        if (ok) {
          hit = c;
          odd_class = !square;
        }
        return ok;
      },
      res, &visited);
  D.residues_checked = visited;
  if (!found) {
    D.verdict = Verdict::admissible;
    return D;
  }
  D.verdict = Verdict::not_admissible;
  long prec = tw.k1->default_precision();
  FieldElement x0 = FieldElement::zero(tw.k1);
  for (size_t i = 0; i < hit.size(); ++i) {
    if (!hit[i]) continue;
    FieldElement c = embed(FieldElement::teichmuller(tw.k, tw.k->residue().element(hit[i]), prec), tw.k1);
    x0 = x0 + c * L.basis[i];
  }
  if (odd_class) x0 = x0.shift(1);
  D.x = x0;
  if (!T.twisted()) {
    FieldElement a0 = sqrt(x0);
    D.w = embed(a0, tw.k2) / T.u();
  }
  return D;
}

/// Decides admissibility of S inside its maximal torus.
inline Decision is_admissible(const SubtorusSpec& S) {
  if (S.is_trivial()) {
    Decision D;
    D.route = "trivial torus";
    D.verdict = Verdict::admissible;
    return D;
  }
  if (S.parent.kase == Case::B) {
    Decision D = residue_verdict_B(S);
    if (D.verdict != parity_verdict_B(S) || D.verdict != support_verdict_B(S))
      throw std::logic_error("case B routes disagree");
    return D;
  }
  return decide_A(S);
}

/// Independently re-checks a not-admissible certificate: x in the norm group and orthogonal
/// to s/u, N(u w) = x, and phi(w) vanishing on the Lie generators to `digits` digits by both
/// momentum formulas.
inline bool verify_witness(const SubtorusSpec& S, const Decision& D, long digits = 20) {
  if (D.verdict != Verdict::not_admissible) return false;
  const TorusDescriptor& T = S.parent;
  const Tower& tw = *T.tower;
  if (!D.x) return false;
  const FieldElement& x = *D.x;
  if (x.is_zero()) return false;
  std::optional<ResidueField::Elt> gamma;
  if (T.twisted()) gamma = tw.k1->residue().element(*T.gamma);
  bool in_group = in_norm_group(x, T.kase == Case::A ? QuadraticExt::ramified : QuadraticExt::unramified, gamma);
  if (!in_group) return false;
  auto gens = lie_generators(S);
  FieldElement u = T.u();
  for (const auto& X : gens) {
    FieldElement y = descend(X / u, tw.k1);
    if (!detail::numerically_zero(trace(y * x, tw.k), digits)) return false;
  }
  if (T.twisted()) return true;
  if (!D.w || D.w->is_zero()) return false;
  const FieldElement& w = *D.w;
  if (!detail::numerically_zero(norm(u * w, tw.k1) - x, digits)) return false;
  for (const auto& X : gens) {
    if (!detail::numerically_zero(momentum_pairing(T, w, X), digits)) return false;
    if (!detail::numerically_zero(momentum_direct(T, w, X), digits)) return false;
  }
  return true;
}

/// Shape data sufficient for the general non-existence criteria.
struct TowerShape {
  QuadraticExt top = QuadraticExt::ramified;  // k''/k'
  long ramification = 1;                      // e(k'/k)
  long residue_degree = 1;                    // f(k'/k)
  bool twist_nonsquare = false;               // k''= k'(sqrt(gamma pi')) with gamma a non-square
};

inline TowerShape shape_of(const TorusDescriptor& T) {
  TowerShape s;
  if (T.kase == Case::A) {
    s.top = QuadraticExt::ramified;
    s.ramification = 1;
    s.residue_degree = T.order();
    s.twist_nonsquare = T.twisted();
  } else {
    s.top = QuadraticExt::unramified;
    s.ramification = T.order();
    s.residue_degree = 1;
  }
  return s;
}

/// True when one of the criteria forcing every proper subtorus to be non-admissible holds.
inline bool no_proper_admissible(const TowerShape& s) {
  if (s.top == QuadraticExt::unramified) return s.ramification % 2 == 1;
  return s.residue_degree % 2 == 1 || s.twist_nonsquare;
}
inline bool no_proper_admissible(const TorusDescriptor& T) { return no_proper_admissible(shape_of(T)); }

// ---------------------------------------------------------------- products

/// A subtorus of T_1 x ... x T_n given by a k-spanning set of its Lie algebra.
struct ProductSubtorus {
  std::vector<TorusDescriptor> factors;
  std::vector<std::vector<FieldElement>> lie;  // each entry has one component per factor
};

inline ProductSubtorus as_product(const SubtorusSpec& S) {
  ProductSubtorus P;
  P.factors.push_back(S.parent);
  for (const auto& X : lie_generators(S)) P.lie.push_back({X});
  return P;
}

struct WitnessSearchResult {
  std::optional<std::vector<FieldElement>> w;  // one component per factor
  bool exhausted = false;  // the whole window was searched
  std::uint64_t candidates = 0;
  long complement_dim = 0;
};

/// Searches residue combinations of a saturated basis of (s/u)^perp, each basis vector scaled
/// by pi^m for m below the window (measured in pi'-digits), for a point of the norm groups.
inline WitnessSearchResult zero_fiber_witness_search(const ProductSubtorus& P, long window = -1,
                                                     std::uint64_t budget = 200000, long digits = 20) {
  if (P.factors.empty()) throw std::invalid_argument("zero_fiber_witness_search: no factors");
  const FieldPtr& k = P.factors[0].tower->k;
  for (const auto& T : P.factors) {
    if (!T.tower->k->same_as(*k)) throw std::invalid_argument("zero_fiber_witness_search: base mismatch");
    if (T.twisted()) throw std::invalid_argument("zero_fiber_witness_search: twisted factors are not realized");
  }
  if (window < 0) window = P.factors[0].order();
  size_t nf = P.factors.size();
  std::vector<std::vector<FieldElement>> bases(nf);
  std::vector<int> offs(nf + 1, 0);
  for (size_t i = 0; i < nf; ++i) {
    bases[i] = detail::field_basis(P.factors[i].tower->k1, k);
    offs[i + 1] = offs[i] + static_cast<int>(bases[i].size());
  }
  int ncols = offs[nf];
  std::vector<std::vector<FieldElement>> A;
  for (const auto& X : P.lie) {
    std::vector<FieldElement> row;
    for (size_t i = 0; i < nf; ++i) {
      const TorusDescriptor& T = P.factors[i];
      FieldElement y = X[i].is_exact_zero() ? FieldElement::zero(T.tower->k1) : descend(X[i] / T.u(), T.tower->k1);
      for (const auto& b : bases[i]) row.push_back(y.is_exact_zero() ? FieldElement::zero(k) : trace(y * b, k));
    }
    A.push_back(row);
  }
  std::vector<std::vector<FieldElement>> K;
  if (A.empty()) {
    for (int c = 0; c < ncols; ++c) {
      std::vector<FieldElement> v(ncols, FieldElement::zero(k));
      v[c] = FieldElement::one(k);
      K.push_back(v);
    }
  } else {
    K = detail::kernel(A, ncols, k);
  }
  auto ech = detail::dvr_echelon(K);
  WitnessSearchResult out;
  out.complement_dim = static_cast<long>(ech.size());
  if (ech.empty()) {
    out.exhausted = true;
    return out;
  }
  // components of each basis vector
  std::vector<std::vector<FieldElement>> comp(ech.size(), std::vector<FieldElement>(nf));
  for (size_t j = 0; j < ech.size(); ++j)
    for (size_t i = 0; i < nf; ++i) {
      std::vector<FieldElement> c(ech[j].begin() + offs[i], ech[j].begin() + offs[i + 1]);
      comp[j][i] = detail::from_coordinates(c, P.factors[i].tower->k1, k);
    }
  long ek = P.factors[0].tower->k1->ramification();
  long shifts = std::max<long>(1, detail::ceil_div(window, ek));
  const ResidueField& rk = k->residue();
  std::uint64_t per = rk.size() * static_cast<std::uint64_t>(shifts);
  std::uint64_t total = 1;
  bool capped = false;
  for (size_t j = 0; j < ech.size(); ++j) {
    if (total > budget / per + 1) {
      capped = true;
      break;
    }
    total *= per;
  }
  if (capped || total > budget) {
    capped = true;
    total = budget;
  }
  long prec = k->default_precision();
  std::vector<FieldElement> lifts;
  for (std::uint64_t c = 0; c < rk.size(); ++c) lifts.push_back(FieldElement::teichmuller(k, rk.element(c), prec));
  std::vector<std::uint64_t> digit(ech.size());
  for (std::uint64_t idx = 1; idx < total; ++idx) {
    ++out.candidates;
    std::uint64_t t = idx;
    bool any = false;
    for (size_t j = 0; j < ech.size(); ++j) {
      digit[j] = t % per;
      t /= per;
      if (digit[j] % rk.size()) any = true;
    }
    if (!any) continue;
    std::vector<FieldElement> y(nf);
    bool ok = true, nonzero = false;
    for (size_t i = 0; i < nf && ok; ++i) {
      const Tower& tw = *P.factors[i].tower;
      FieldElement acc = FieldElement::zero(tw.k1);
      for (size_t j = 0; j < ech.size(); ++j) {
        std::uint64_t c = digit[j] % rk.size();
        long m = static_cast<long>(digit[j] / rk.size());
        if (!c || comp[j][i].is_exact_zero()) continue;
        acc = acc + (embed(lifts[c], tw.k1) * comp[j][i]).shift(m * ek);
      }
      y[i] = acc;
      if (acc.is_exact_zero()) continue;
      if (acc.is_zero()) {
        ok = false;
        break;
      }
      nonzero = true;
      ok = in_norm_group(acc, P.factors[i].kase == Case::A ? QuadraticExt::ramified : QuadraticExt::unramified);
    }
    if (!ok || !nonzero) continue;
    std::vector<FieldElement> w(nf);
    for (size_t i = 0; i < nf; ++i) {
      const TorusDescriptor& T = P.factors[i];
      w[i] = y[i].is_exact_zero() ? FieldElement::zero(T.tower->k2) : detail::norm_preimage(T, y[i]) / T.u();
    }
    bool vanishes = true;
    for (const auto& X : P.lie)
      if (!detail::numerically_zero(momentum_pairing(P.factors, w, X), digits)) vanishes = false;
    if (!vanishes) throw std::logic_error("zero_fiber_witness_search: candidate failed re-verification");
    out.w = w;
    return out;
  }
  out.exhausted = !capped;
  return out;
}

}  // namespace tori
