#pragma once

#include <gmpxx.h>

#include "tori/errors.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tori {

/// Integer polynomial, little-endian coefficients.
using IntPoly = std::vector<mpz_class>;
using IntVec = std::vector<mpz_class>;
using IntMat = std::vector<IntVec>;

inline std::vector<long> divisors(long n) {
  if (n < 1) throw std::invalid_argument("divisors: n must be positive");
  std::vector<long> r;
  for (long d = 1; d <= n; ++d)
    if (n % d == 0) r.push_back(d);
  return r;
}

inline long euler_phi(long n) {
  long r = n;
  for (long p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      while (n % p == 0) n /= p;
      r -= r / p;
    }
  if (n > 1) r -= r / n;
  return r;
}

inline void poly_trim(IntPoly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

inline IntPoly poly_mul(const IntPoly& a, const IntPoly& b) {
  if (a.empty() || b.empty()) return {};
  IntPoly r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  poly_trim(r);
  return r;
}

/// Exact quotient by a monic divisor; throws if the division leaves a remainder.
inline IntPoly poly_divexact(IntPoly a, IntPoly b) {
  poly_trim(a);
  poly_trim(b);
  if (b.empty() || b.back() != 1) throw std::invalid_argument("poly_divexact: divisor must be monic");
  if (a.size() < b.size()) {
    if (a.empty()) return {};
    throw std::invalid_argument("poly_divexact: not divisible");
  }
  long da = static_cast<long>(a.size()) - 1, db = static_cast<long>(b.size()) - 1;
  IntPoly q(da - db + 1, 0);
  for (long k = da; k >= db; --k) {
    mpz_class c = a[k];
    q[k - db] = c;
    if (c != 0)
      for (long j = 0; j <= db; ++j) a[k - db + j] -= c * b[j];
  }
  poly_trim(a);
  if (!a.empty()) throw std::invalid_argument("poly_divexact: not divisible");
  poly_trim(q);
  return q;
}

/// X^n - 1.
inline IntPoly x_pow_minus_one(long n) {
  IntPoly r(n + 1, 0);
  r[0] = -1;
  r[n] = 1;
  return r;
}

/// The d-th cyclotomic polynomial.
inline IntPoly cyclotomic_poly(long d) {
  if (d < 1) throw std::invalid_argument("cyclotomic_poly: d must be positive");
  IntPoly r = x_pow_minus_one(d);
  for (long e : divisors(d))
    if (e < d) r = poly_divexact(r, cyclotomic_poly(e));
  return r;
}

inline void require_divides(long d, long f) {
  if (d < 1 || f < 1 || f % d != 0)
    throw std::invalid_argument(std::to_string(d) + " does not divide " + std::to_string(f));
}

/// (X^f - 1)/Phi_d.
inline IntPoly P_poly(long f, long d) {
  require_divides(d, f);
  return poly_divexact(x_pow_minus_one(f), cyclotomic_poly(d));
}
/// (X^d - 1)/Phi_d.
inline IntPoly Q_poly(long d) { return poly_divexact(x_pow_minus_one(d), cyclotomic_poly(d)); }
/// (X^f - 1)/(X^d - 1).
inline IntPoly H_poly(long f, long d) {
  require_divides(d, f);
  return poly_divexact(x_pow_minus_one(f), x_pow_minus_one(d));
}

/// Element of Z[Gamma], Gamma cyclic of order f generated by sigma.
class GroupRingElement {
 public:
  GroupRingElement() = default;
  explicit GroupRingElement(long f) : c_(f, 0) {
    if (f < 1) throw std::invalid_argument("GroupRingElement: f must be positive");
  }
  explicit GroupRingElement(IntVec c) : c_(std::move(c)) {
    if (c_.empty()) throw std::invalid_argument("GroupRingElement: empty");
  }
  /// sigma^l.
  static GroupRingElement basis(long f, long l) {
    GroupRingElement r(f);
    r.c_[((l % f) + f) % f] = 1;
    return r;
  }
  /// P(sigma) for an integer polynomial P.
  static GroupRingElement from_poly(long f, const IntPoly& P) {
    GroupRingElement r(f);
    for (size_t i = 0; i < P.size(); ++i) r.c_[i % f] += P[i];
    return r;
  }
  long order() const { return static_cast<long>(c_.size()); }
  const IntVec& coeffs() const { return c_; }
  const mpz_class& operator[](long i) const { return c_[i]; }

  friend GroupRingElement operator+(const GroupRingElement& a, const GroupRingElement& b) {
    GroupRingElement r = a;
    for (size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += b.c_[i];
    return r;
  }
  friend GroupRingElement operator-(const GroupRingElement& a, const GroupRingElement& b) {
    GroupRingElement r = a;
    for (size_t i = 0; i < r.c_.size(); ++i) r.c_[i] -= b.c_[i];
    return r;
  }
  friend GroupRingElement operator*(const GroupRingElement& a, const GroupRingElement& b) {
    long f = a.order();
    GroupRingElement r(f);
    for (long i = 0; i < f; ++i) {
      if (a.c_[i] == 0) continue;
      for (long j = 0; j < f; ++j) r.c_[(i + j) % f] += a.c_[i] * b.c_[j];
    }
    return r;
  }
  friend bool operator==(const GroupRingElement& a, const GroupRingElement& b) { return a.c_ == b.c_; }
  /// sigma^k * this.
  GroupRingElement shifted(long k) const { return basis(order(), k) * *this; }
  mpz_class coefficient_sum() const { return std::accumulate(c_.begin(), c_.end(), mpz_class(0)); }

 private:
  IntVec c_;
};

namespace detail {

inline bool is_zero_vec(const IntVec& v) {
  return std::all_of(v.begin(), v.end(), [](const mpz_class& x) { return x == 0; });
}

/// Row-style Hermite normal form; zero rows dropped. Pivots positive, entries above
/// each pivot reduced into [0, pivot).
inline IntMat hnf(IntMat A) {
  if (A.empty()) return A;
  size_t n = A[0].size();
  size_t row = 0;
  for (size_t col = 0; col < n && row < A.size(); ++col) {
    // gcd-combine the column into A[row]
    for (size_t r = row + 1; r < A.size(); ++r) {
      if (A[r][col] == 0) continue;
      mpz_class g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), A[row][col].get_mpz_t(), A[r][col].get_mpz_t());
      mpz_class a = A[row][col] / g, b = A[r][col] / g;
      for (size_t j = col; j < n; ++j) {
        mpz_class x = A[row][j], y = A[r][j];
        A[row][j] = s * x + t * y;
        A[r][j] = a * y - b * x;
      }
    }
    if (A[row][col] == 0) continue;
    if (A[row][col] < 0)
      for (size_t j = col; j < n; ++j) A[row][j] = -A[row][j];
    for (size_t r = 0; r < row; ++r) {
      mpz_class qq;
      mpz_fdiv_q(qq.get_mpz_t(), A[r][col].get_mpz_t(), A[row][col].get_mpz_t());
      if (qq != 0)
        for (size_t j = col; j < n; ++j) A[r][j] -= qq * A[row][j];
    }
    ++row;
  }
  A.resize(row);
  return A;
}

/// Reduces v by an HNF basis; the result is zero iff v lies in the row lattice.
inline IntVec hnf_reduce(const IntMat& H, IntVec v) {
  for (const auto& h : H) {
    size_t col = 0;
    while (h[col] == 0) ++col;
    mpz_class qq;
    mpz_fdiv_q(qq.get_mpz_t(), v[col].get_mpz_t(), h[col].get_mpz_t());
    if (qq != 0)
      for (size_t j = col; j < v.size(); ++j) v[j] -= qq * h[j];
  }
  return v;
}

/// Basis of {x in Z^n : x B = 0} for an n x m matrix B; the result is saturated.
inline IntMat left_kernel(const IntMat& B, size_t n) {
  size_t m = B.empty() ? 0 : B[0].size();
  IntMat aug(n, IntVec(m + n, 0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) aug[i][j] = B[i][j];
    aug[i][m + i] = 1;
  }
  // echelonize the first m columns with unimodular row operations
  size_t row = 0;
  for (size_t col = 0; col < m && row < n; ++col) {
    for (size_t r = row + 1; r < n; ++r) {
      if (aug[r][col] == 0) continue;
      mpz_class g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), aug[row][col].get_mpz_t(), aug[r][col].get_mpz_t());
      mpz_class a = aug[row][col] / g, b = aug[r][col] / g;
      for (size_t j = 0; j < m + n; ++j) {
        mpz_class x = aug[row][j], y = aug[r][j];
        aug[row][j] = s * x + t * y;
        aug[r][j] = a * y - b * x;
      }
    }
    if (aug[row][col] != 0) ++row;
  }
  IntMat K;
  for (size_t r = row; r < n; ++r) K.emplace_back(aug[r].begin() + static_cast<long>(m), aug[r].end());
  return hnf(K);
}

inline IntMat transpose(const IntMat& A, size_t cols) {
  IntMat T(cols, IntVec(A.size(), 0));
  for (size_t i = 0; i < A.size(); ++i)
    for (size_t j = 0; j < cols; ++j) T[j][i] = A[i][j];
  return T;
}

/// Nonzero Smith invariants d_1 | d_2 | ... of an integer matrix.
inline std::vector<mpz_class> smith_invariants(IntMat A) {
  std::vector<mpz_class> out;
  if (A.empty()) return out;
  size_t rows = A.size(), cols = A[0].size();
  size_t t = 0;
  while (t < rows && t < cols) {
    // choose the smallest nonzero entry as pivot
    size_t pr = rows, pc = cols;
    for (size_t i = t; i < rows; ++i)
      for (size_t j = t; j < cols; ++j)
        if (A[i][j] != 0 && (pr == rows || abs(A[i][j]) < abs(A[pr][pc]))) {
          pr = i;
          pc = j;
        }
    if (pr == rows) break;
    std::swap(A[t], A[pr]);
    for (auto& r : A) std::swap(r[t], r[pc]);
    bool done = false;
    while (!done) {
      done = true;
      for (size_t i = t + 1; i < rows; ++i) {
        if (A[i][t] == 0) continue;
        mpz_class qq;
        mpz_fdiv_q(qq.get_mpz_t(), A[i][t].get_mpz_t(), A[t][t].get_mpz_t());
        for (size_t j = t; j < cols; ++j) A[i][j] -= qq * A[t][j];
        if (A[i][t] != 0) {
          std::swap(A[t], A[i]);
          done = false;
        }
      }
      for (size_t j = t + 1; j < cols; ++j) {
        if (A[t][j] == 0) continue;
        mpz_class qq;
        mpz_fdiv_q(qq.get_mpz_t(), A[t][j].get_mpz_t(), A[t][t].get_mpz_t());
        for (size_t i = t; i < rows; ++i) A[i][j] -= qq * A[i][t];
        if (A[t][j] != 0) {
          for (auto& r : A) std::swap(r[t], r[j]);
          done = false;
        }
      }
      if (done) {
        // divisibility condition
        for (size_t i = t + 1; i < rows && done; ++i)
          for (size_t j = t + 1; j < cols && done; ++j)
            if (A[i][j] % A[t][t] != 0) {
              for (size_t k = t; k < cols; ++k) A[t][k] += A[i][k];
              done = false;
            }
      }
    }
    out.push_back(abs(A[t][t]));
    ++t;
  }
  return out;
}

}  // namespace detail

/// Z[Gamma]-submodule of Z^f given by generator rows, stored in Hermite normal form.
class Submodule {
 public:
  Submodule() = default;
  static Submodule from_generators(long f, const IntMat& gens) {
    for (const auto& g : gens)
      if (static_cast<long>(g.size()) != f) throw std::invalid_argument("Submodule: generator length mismatch");
    Submodule m;
    m.f_ = f;
    m.H_ = detail::hnf(gens);
    return m;
  }
  static Submodule from_elements(long f, const std::vector<GroupRingElement>& gens) {
    IntMat rows;
    for (const auto& g : gens) rows.push_back(g.coeffs());
    return from_generators(f, rows);
  }
  static Submodule whole(long f) {
    IntMat I(f, IntVec(f, 0));
    for (long i = 0; i < f; ++i) I[i][i] = 1;
    return from_generators(f, I);
  }
  static Submodule zero(long f) { return from_generators(f, {}); }

  long ambient() const { return f_; }
  long rank() const { return static_cast<long>(H_.size()); }
  const IntMat& hnf() const { return H_; }
  bool contains(const IntVec& v) const { return detail::is_zero_vec(detail::hnf_reduce(H_, v)); }
  bool contains(const GroupRingElement& g) const { return contains(g.coeffs()); }
  bool contains(const Submodule& o) const {
    return std::all_of(o.H_.begin(), o.H_.end(), [&](const IntVec& v) { return contains(v); });
  }
  friend bool operator==(const Submodule& a, const Submodule& b) { return a.f_ == b.f_ && a.H_ == b.H_; }

  bool is_sigma_stable() const {
    for (const auto& h : H_) {
      IntVec s(f_);
      for (long i = 0; i < f_; ++i) s[(i + 1) % f_] = h[i];
      if (!contains(s)) return false;
    }
    return true;
  }
  Submodule operator+(const Submodule& o) const {
    IntMat g = H_;
    g.insert(g.end(), o.H_.begin(), o.H_.end());
    return from_generators(f_, g);
  }
  Submodule scaled(const mpz_class& a) const {
    IntMat g = H_;
    for (auto& r : g)
      for (auto& x : r) x *= a;
    return from_generators(f_, g);
  }
  /// Smith invariants of Z^f / M, including zeros for the free part.
  std::vector<mpz_class> quotient_invariants() const {
    auto inv = detail::smith_invariants(H_);
    while (static_cast<long>(inv.size()) < f_) inv.push_back(0);
    return inv;
  }
  bool quotient_torsion_free() const {
    auto inv = detail::smith_invariants(H_);
    return std::all_of(inv.begin(), inv.end(), [](const mpz_class& d) { return d == 1; });
  }
  /// Smallest submodule with torsion-free quotient containing this one.
  Submodule saturate() const {
    if (H_.empty()) return *this;
    IntMat K = detail::left_kernel(detail::transpose(H_, f_), f_);  // {y : H y = 0}
    if (K.empty()) return whole(f_);
    IntMat sat = detail::left_kernel(detail::transpose(K, f_), f_);
    return from_generators(f_, sat);
  }
  /// Orthogonal complement under the standard inner product.
  Submodule orthogonal() const {
    if (H_.empty()) return whole(f_);
    return from_generators(f_, detail::left_kernel(detail::transpose(H_, f_), f_));
  }
  /// Matrix of sigma restricted to the module in its HNF basis (rows: images).
  IntMat sigma_matrix() const;

 private:
  long f_ = 0;
  IntMat H_;
};

/// Coordinates of v in the HNF basis (v must lie in the module).
inline IntVec hnf_coordinates(const IntMat& H, IntVec v) {
  IntVec c(H.size(), 0);
  for (size_t k = 0; k < H.size(); ++k) {
    const auto& h = H[k];
    size_t col = 0;
    while (h[col] == 0) ++col;
    if (v[col] % h[col] != 0) throw std::invalid_argument("hnf_coordinates: vector not in module");
    mpz_class qq = v[col] / h[col];
    c[k] = qq;
    for (size_t j = col; j < v.size(); ++j) v[j] -= qq * h[j];
  }
  if (!detail::is_zero_vec(v)) throw std::invalid_argument("hnf_coordinates: vector not in module");
  return c;
}

inline IntMat Submodule::sigma_matrix() const {
  IntMat S;
  for (const auto& h : H_) {
    IntVec s(f_);
    for (long i = 0; i < f_; ++i) s[(i + 1) % f_] = h[i];
    S.push_back(hnf_coordinates(H_, s));
  }
  return S;
}

/// M_d: spanned by P_{f,d}(sigma) sigma^l for 0 <= l < phi(d).
inline Submodule basis_Md(long f, long d) {
  IntPoly P = P_poly(f, d);
  GroupRingElement g = GroupRingElement::from_poly(f, P);
  std::vector<GroupRingElement> gens;
  for (long l = 0; l < euler_phi(d); ++l) gens.push_back(g.shifted(l));
  return Submodule::from_elements(f, gens);
}

/// M_{D} = sum of M_d over a divisor set.
inline Submodule module_of_divisors(long f, const std::set<long>& D) {
  Submodule m = Submodule::zero(f);
  for (long d : D) m = m + basis_Md(f, d);
  return m;
}

/// Saturation of M_{D}.
inline Submodule saturated_module(long f, const std::set<long>& D) { return module_of_divisors(f, D).saturate(); }

/// Integer matrix of Phi(sigma) acting on the HNF basis of a sigma-stable module.
inline IntMat poly_on_module(const Submodule& M, const IntPoly& P) {
  IntMat S = M.sigma_matrix();
  size_t r = S.size();
  IntMat acc(r, IntVec(r, 0)), pw(r, IntVec(r, 0));
  for (size_t i = 0; i < r; ++i) pw[i][i] = 1;
  auto mul = [&](const IntMat& A, const IntMat& B) {
    IntMat C(r, IntVec(r, 0));
    for (size_t i = 0; i < r; ++i)
      for (size_t k = 0; k < r; ++k)
        if (A[i][k] != 0)
          for (size_t j = 0; j < r; ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
  };
  for (size_t i = 0; i < P.size(); ++i) {
    for (size_t a = 0; a < r; ++a)
      for (size_t b = 0; b < r; ++b) acc[a][b] += P[i] * pw[a][b];
    pw = mul(pw, S);
  }
  return acc;
}

/// Minimal nonzero sigma-stable submodules with torsion-free quotient: {M_d : d | f}.
/// With verify, the saturated modules of all rational invariant subspaces are enumerated
/// through images of products of cyclotomic factors and the minimal ones compared.
inline std::vector<Submodule> classify_minimal(long f, bool verify = false, long budget = 12) {
  if (f < 1) throw std::invalid_argument("classify_minimal: f must be positive");
  std::vector<Submodule> out;
  for (long d : divisors(f)) out.push_back(basis_Md(f, d));
  if (!verify) return out;
  if (f > budget) throw BudgetError("classify_minimal: verification budget exceeded");
  auto divs = divisors(f);
  size_t nd = divs.size();
  std::vector<Submodule> all;
  for (unsigned mask = 1; mask < (1u << nd); ++mask) {
    IntPoly prod = {1};
    for (size_t i = 0; i < nd; ++i)
      if (!(mask & (1u << i))) prod = poly_mul(prod, cyclotomic_poly(divs[i]));
    GroupRingElement g = GroupRingElement::from_poly(f, prod);
    std::vector<GroupRingElement> gens;
    for (long l = 0; l < f; ++l) gens.push_back(g.shifted(l));
    Submodule m = Submodule::from_elements(f, gens).saturate();
    if (!m.is_sigma_stable() || !m.quotient_torsion_free()) throw std::logic_error("classify_minimal: bad module");
    all.push_back(m);
  }
  std::vector<Submodule> minimal;
  for (const auto& m : all) {
    bool is_min = true;
    for (const auto& o : all)
      if (!(o == m) && m.contains(o)) is_min = false;
    if (is_min) minimal.push_back(m);
  }
  if (minimal.size() != out.size()) throw std::logic_error("classify_minimal: count mismatch");
  for (const auto& m : minimal)
    if (std::find(out.begin(), out.end(), m) == out.end()) throw std::logic_error("classify_minimal: module mismatch");
  return out;
}

}  // namespace tori
