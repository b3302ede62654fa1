#pragma once

#include <gmpxx.h>

#include "tori/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tori {

inline long pmod(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

inline bool is_prime(long n) {
  if (n < 2) return false;
  for (long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// b^e as an unsigned 64-bit integer; throws on overflow.
inline std::uint64_t upow(std::uint64_t b, unsigned e) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (b != 0 && r > UINT64_MAX / b) throw std::overflow_error("upow overflow");
    r *= b;
  }
  return r;
}

inline long inv_mod(long a, long m) {
  long r0 = m, r1 = pmod(a, m);
  long s0 = 0, s1 = 1;
  while (r1 != 0) {
    long qq = r0 / r1;
    std::tie(r0, r1) = std::make_pair(r1, r0 - qq * r1);
    std::tie(s0, s1) = std::make_pair(s1, s0 - qq * s1);
  }
  if (r0 != 1) throw std::invalid_argument("inv_mod: not invertible");
  return pmod(s0, m);
}

namespace detail {

using Poly = std::vector<long>;  // little-endian coefficients mod p

inline void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

inline Poly poly_mod(Poly a, const Poly& g, long p) {
  trim(a);
  Poly gg = g;
  trim(gg);
  if (gg.empty()) throw std::invalid_argument("poly_mod: zero modulus");
  long lead_inv = inv_mod(gg.back(), p);
  int dg = static_cast<int>(gg.size()) - 1;
  while (static_cast<int>(a.size()) - 1 >= dg) {
    int da = static_cast<int>(a.size()) - 1;
    long c = a.back() * lead_inv % p;
    for (int j = 0; j <= dg; ++j) a[da - dg + j] = pmod(a[da - dg + j] - c * gg[j], p);
    trim(a);
  }
  return a;
}

inline Poly poly_mulmod(const Poly& a, const Poly& b, const Poly& g, long p) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p;
  return poly_mod(r, g, p);
}

inline Poly poly_powmod(Poly a, std::uint64_t e, const Poly& g, long p) {
  Poly r = poly_mod({1}, g, p);
  a = poly_mod(a, g, p);
  while (e) {
    if (e & 1) r = poly_mulmod(r, a, g, p);
    a = poly_mulmod(a, a, g, p);
    e >>= 1;
  }
  return r;
}

inline Poly poly_gcd(Poly a, Poly b, long p) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = poly_mod(a, b, p);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

/// Rabin irreducibility test for a monic polynomial of degree >= 1 over F_p.
inline bool is_irreducible(const Poly& g, long p) {
  int n = static_cast<int>(g.size()) - 1;
  if (n == 1) return true;
  auto frob_iter = [&](int k) {
    Poly h = {0, 1};
    for (int i = 0; i < k; ++i) h = poly_powmod(h, static_cast<std::uint64_t>(p), g, p);
    return h;
  };
  Poly full = frob_iter(n);
  Poly x = poly_mod({0, 1}, g, p);
  if (full != x) return false;
  for (int l = 2; l <= n; ++l) {
    if (n % l != 0 || !is_prime(l)) continue;
    Poly h = frob_iter(n / l);
    h.resize(std::max<size_t>(h.size(), 2), 0);
    h[1] = pmod(h[1] - 1, p);
    trim(h);
    Poly d = poly_gcd(h, g, p);
    if (d.size() != 1) return false;
  }
  return true;
}

/// Lexicographically smallest monic irreducible of degree n over F_p,
/// comparing coefficients from degree n-1 down to 0.
inline Poly smallest_irreducible(long p, int n) {
  std::uint64_t total = upow(static_cast<std::uint64_t>(p), static_cast<unsigned>(n));
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    Poly g(n + 1, 0);
    g[n] = 1;
    std::uint64_t t = idx;
    for (int i = 0; i < n; ++i) {
      g[i] = static_cast<long>(t % p);
      t /= p;
    }
    if (g[0] == 0 && n > 1) continue;
    if (is_irreducible(g, p)) return g;
  }
  throw std::runtime_error("no irreducible polynomial found");
}

/// Rank over F_p of residue vectors .
inline int residue_rank(std::vector<std::vector<long>> v, long p) {
  if (v.empty()) return 0;
  int n = static_cast<int>(v[0].size());
  int rank = 0;
  for (int col = 0; col < n && rank < static_cast<int>(v.size()); ++col) {
    int piv = -1;
    for (int r = rank; r < static_cast<int>(v.size()); ++r)
      if (v[r][col] % p) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(v[piv], v[rank]);
    long inv = inv_mod(v[rank][col], p);
    for (auto& x : v[rank]) x = x * inv % p;
    for (int r = 0; r < static_cast<int>(v.size()); ++r) {
      if (r == rank || v[r][col] == 0) continue;
      long f = v[r][col];
      for (int j = 0; j < n; ++j) v[r][j] = pmod(v[r][j] - f * v[rank][j], p);
    }
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// The finite field F_{p^R} = F_p[X]/(g).
class ResidueField {
 public:
  using Elt = std::vector<long>;

  ResidueField() = default;
  ResidueField(long p, int R) : p_(p), R_(R) {
    if (!is_prime(p)) throw std::invalid_argument("ResidueField: p must be prime");
    if (R < 1) throw std::invalid_argument("ResidueField: degree must be positive");
    g_ = detail::smallest_irreducible(p, R);
    q_ = upow(static_cast<std::uint64_t>(p), static_cast<unsigned>(R));
  }

  long p() const { return p_; }
  int degree() const { return R_; }
  std::uint64_t size() const { return q_; }
  const std::vector<long>& modulus() const { return g_; }

  Elt zero() const { return Elt(R_, 0); }
  Elt one() const { return from_int(1); }
  Elt from_int(long a) const {
    Elt r(R_, 0);
    r[0] = pmod(a, p_);
    return r;
  }
  Elt generator() const {
    Elt r(R_, 0);
    if (R_ == 1) r[0] = 0;
    else r[1] = 1;
    return r;
  }
  bool is_zero(const Elt& a) const {
    return std::all_of(a.begin(), a.end(), [](long c) { return c == 0; });
  }
  Elt add(const Elt& a, const Elt& b) const {
    Elt r(R_);
    for (int i = 0; i < R_; ++i) r[i] = (a[i] + b[i]) % p_;
    return r;
  }
  Elt sub(const Elt& a, const Elt& b) const {
    Elt r(R_);
    for (int i = 0; i < R_; ++i) r[i] = pmod(a[i] - b[i], p_);
    return r;
  }
  Elt neg(const Elt& a) const { return sub(zero(), a); }
  Elt scale(const Elt& a, long c) const {
    Elt r(R_);
    long cc = pmod(c, p_);
    for (int i = 0; i < R_; ++i) r[i] = a[i] * cc % p_;
    return r;
  }
  Elt mul(const Elt& a, const Elt& b) const {
    std::vector<long> t(2 * R_ - 1, 0);
    for (int i = 0; i < R_; ++i) {
      if (a[i] == 0) continue;
      for (int j = 0; j < R_; ++j) t[i + j] = (t[i + j] + a[i] * b[j]) % p_;
    }
    for (int k = 2 * R_ - 2; k >= R_; --k) {
      long c = t[k];
      if (c == 0) continue;
      t[k] = 0;
      for (int j = 0; j < R_; ++j) t[k - R_ + j] = pmod(t[k - R_ + j] - c * g_[j], p_);
    }
    t.resize(R_);
    return t;
  }
  Elt pow(Elt a, std::uint64_t e) const {
    Elt r = one();
    while (e) {
      if (e & 1) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }
  Elt inv(const Elt& a) const {
    if (is_zero(a)) throw std::invalid_argument("ResidueField::inv: zero");
    return pow(a, q_ - 2);
  }
  /// x -> x^{p^k}.
  Elt frobenius(const Elt& a, int k = 1) const {
    Elt r = a;
    int kk = ((k % R_) + R_) % R_;
    for (int i = 0; i < kk; ++i) r = pow(r, static_cast<std::uint64_t>(p_));
    return r;
  }
  bool is_square(const Elt& a) const {
    if (is_zero(a)) return true;
    return pow(a, (q_ - 1) / 2) == one();
  }
  bool is_nonzero_square(const Elt& a) const { return !is_zero(a) && is_square(a); }

  /// Square root by Tonelli-Shanks; nullopt for non-squares.
  std::optional<Elt> sqrt(const Elt& a) const {
    if (is_zero(a)) return zero();
    if (!is_square(a)) return std::nullopt;
    std::uint64_t t = q_ - 1;
    int s = 0;
    while (t % 2 == 0) {
      t /= 2;
      ++s;
    }
    Elt z = smallest_nonsquare();
    Elt c = pow(z, t);
    Elt x = pow(a, (t + 1) / 2);
    Elt b = pow(a, t);
    int m = s;
    while (b != one()) {
      int i = 0;
      Elt bb = b;
      while (bb != one()) {
        bb = mul(bb, bb);
        ++i;
      }
      Elt w = c;
      for (int k = 0; k < m - i - 1; ++k) w = mul(w, w);
      x = mul(x, w);
      c = mul(w, w);
      b = mul(b, c);
      m = i;
    }
    return x;
  }

  /// Non-square of smallest index.
  Elt smallest_nonsquare() const {
    for (std::uint64_t i = 1; i < q_; ++i) {
      Elt e = element(i);
      if (!is_square(e)) return e;
    }
    throw std::logic_error("no non-square");
  }

  /// Little-endian base-p index of an element.
  std::uint64_t index(const Elt& a) const {
    std::uint64_t r = 0;
    for (int i = R_ - 1; i >= 0; --i) r = r * p_ + static_cast<std::uint64_t>(a[i]);
    return r;
  }
  Elt element(std::uint64_t idx) const {
    Elt r(R_);
    for (int i = 0; i < R_; ++i) {
      r[i] = static_cast<long>(idx % p_);
      idx /= p_;
    }
    return r;
  }
  /// Evaluates an F_p-polynomial (little-endian) at a.
  Elt evaluate(const std::vector<long>& poly, const Elt& a) const {
    Elt r = zero();
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) r = add(mul(r, a), from_int(*it));
    return r;
  }

 private:
  long p_ = 0;
  int R_ = 0;
  std::vector<long> g_;
  std::uint64_t q_ = 0;
};

class LocalField;
class FieldElement;
using FieldPtr = std::shared_ptr<const LocalField>;

namespace detail {

using GElt = std::vector<mpz_class>;

/// Element of O = GR(p^M,R)[pi]/(pi^E - p); c[i] is the coefficient of pi^i.
struct Ring {
  int M = 0;
  std::vector<GElt> c;
};

inline long ceil_div(long a, long b) {
  if (b <= 0) throw std::invalid_argument("ceil_div");
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}
inline long floor_div(long a, long b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

}  // namespace detail

/// A member K_{R,E} = Q_{p^R}(pi), pi^E = p, of a tower over Q_p.
class LocalField {
 public:
  enum class Role { base, unramified_ext, eisenstein_ext };
  using Elt = ResidueField::Elt;
  using GElt = detail::GElt;
  using Ring = detail::Ring;

  static FieldPtr make_base(long p, int r = 1, long precision = 40) {
    if (p == 2 || !is_prime(p)) throw std::invalid_argument("LocalField: p must be an odd prime");
    if (precision < 2) throw std::invalid_argument("LocalField: precision must be at least 2");
    return FieldPtr(new LocalField(p, r, 1, Role::base, nullptr, r, precision));
  }
  static FieldPtr make_unramified(const FieldPtr& parent, int degree) {
    if (!parent || degree < 1) throw std::invalid_argument("make_unramified: bad arguments");
    return FieldPtr(new LocalField(parent->p_, parent->R_ * degree, parent->E_, Role::unramified_ext,
                                   parent, degree, parent->precision_));
  }
  static FieldPtr make_eisenstein(const FieldPtr& parent, int degree) {
    if (!parent || degree < 1) throw std::invalid_argument("make_eisenstein: bad arguments");
    if (degree % parent->p_ == 0) throw std::invalid_argument("make_eisenstein: wild ramification");
    return FieldPtr(new LocalField(parent->p_, parent->R_, parent->E_ * degree, Role::eisenstein_ext,
                                   parent, degree, parent->precision_));
  }

  long p() const { return p_; }
  int residue_degree() const { return R_; }
  int ramification() const { return E_; }
  std::uint64_t q() const { return res_.size(); }
  Role role() const { return role_; }
  const FieldPtr& parent() const { return parent_; }
  int relative_degree() const { return rel_deg_; }
  long default_precision() const { return precision_; }
  const ResidueField& residue() const { return res_; }

  /// Defining polynomial over the parent. Unramified levels report the absolute
  /// residue polynomial; Eisenstein levels report X^e - pi_parent as {-1, 0, ..., 1}.
  std::vector<long> defining_polynomial() const {
    if (role_ == Role::eisenstein_ext) {
      std::vector<long> d(rel_deg_ + 1, 0);
      d[0] = -1;
      d[rel_deg_] = 1;
      return d;
    }
    return res_.modulus();
  }

  bool same_as(const LocalField& o) const { return p_ == o.p_ && R_ == o.R_ && E_ == o.E_; }
  /// Structural containment K_{R',E'} in this field.
  bool contains(const LocalField& sub) const {
    return p_ == sub.p_ && R_ % sub.R_ == 0 && E_ % sub.E_ == 0;
  }
  /// True if sub equals this field or one of its parents.
  bool has_ancestor(const LocalField& sub) const {
    for (const LocalField* f = this; f; f = f->parent_.get())
      if (f->same_as(sub)) return true;
    return false;
  }
  std::string describe() const {
    return "K(p=" + std::to_string(p_) + ",R=" + std::to_string(R_) + ",E=" + std::to_string(E_) + ")";
  }

  // ---- Galois ring GR(p^M, R) ----
  mpz_class pM(int M) const {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(p_), static_cast<unsigned long>(M));
    return r;
  }
  GElt g_zero() const { return GElt(R_, 0); }
  GElt g_int(const mpz_class& n, int M) const {
    GElt r = g_zero();
    r[0] = n;
    g_reduce(r, pM(M));
    return r;
  }
  GElt g_lift(const Elt& d) const {
    GElt r(R_);
    for (int i = 0; i < R_; ++i) r[i] = d[i];
    return r;
  }
  Elt g_residue(const GElt& a) const {
    Elt r(R_);
    mpz_class t;
    for (int i = 0; i < R_; ++i) {
      t = a[i] % p_;
      if (t < 0) t += p_;
      r[i] = t.get_si();
    }
    return r;
  }
  static void g_reduce(GElt& a, const mpz_class& m) {
    for (auto& c : a) {
      c %= m;
      if (c < 0) c += m;
    }
  }
  GElt g_add(const GElt& a, const GElt& b, const mpz_class& m) const {
    GElt r(R_);
    for (int i = 0; i < R_; ++i) {
      r[i] = a[i] + b[i];
      if (r[i] >= m) r[i] -= m;
    }
    return r;
  }
  GElt g_sub(const GElt& a, const GElt& b, const mpz_class& m) const {
    GElt r(R_);
    for (int i = 0; i < R_; ++i) {
      r[i] = a[i] - b[i];
      if (r[i] < 0) r[i] += m;
    }
    return r;
  }
  GElt g_mul(const GElt& a, const GElt& b, const mpz_class& m) const {
    if (R_ == 1) {
      GElt r(1);
      r[0] = a[0] * b[0];
      r[0] %= m;
      return r;
    }
    std::vector<mpz_class> t(2 * R_ - 1, 0);
    for (int i = 0; i < R_; ++i) {
      if (a[i] == 0) continue;
      for (int j = 0; j < R_; ++j) t[i + j] += a[i] * b[j];
    }
    const auto& g = res_.modulus();
    for (int k = 2 * R_ - 2; k >= R_; --k) {
      if (t[k] == 0) continue;
      mpz_class c = t[k];
      t[k] = 0;
      for (int j = 0; j < R_; ++j)
        if (g[j] != 0) t[k - R_ + j] -= c * g[j];
    }
    t.resize(R_);
    g_reduce(t, m);
    return t;
  }
  GElt g_pow(GElt a, mpz_class e, const mpz_class& m) const {
    GElt r = g_zero();
    r[0] = 1;
    while (e > 0) {
      if (mpz_odd_p(e.get_mpz_t())) r = g_mul(r, a, m);
      a = g_mul(a, a, m);
      e >>= 1;
    }
    return r;
  }
  /// Inverse of a unit of GR(p^M, R) by Newton iteration.
  GElt g_inv(const GElt& a, int M) const {
    mpz_class m = pM(M);
    GElt y = g_lift(res_.inv(g_residue(a)));
    GElt two = g_int(2, M);
    for (int prec = 1; prec < M; prec *= 2) y = g_mul(y, g_sub(two, g_mul(a, y, m), m), m);
    return y;
  }
  /// Evaluates a(X) at the Galois-ring element x.
  GElt g_compose(const GElt& a, const GElt& x, const mpz_class& m) const {
    GElt r = g_zero();
    for (int i = R_ - 1; i >= 0; --i) {
      r = g_mul(r, x, m);
      r[0] += a[i];
      g_reduce(r, m);
    }
    return r;
  }
  /// Teichmuller lift of a residue to GR(p^M, R).
  GElt g_teichmuller(const Elt& d, int M) const {
    mpz_class m = pM(M);
    GElt t = g_lift(d);
    mpz_class qq = mpz_class(static_cast<unsigned long>(res_.size()));
    for (int i = 0; i < M; ++i) t = g_pow(t, qq, m);
    return t;
  }
  /// sigma^k(X) in GR(p^M, R), sigma the Frobenius.
  GElt frobenius_root(int k, int M) const {
    k = ((k % R_) + R_) % R_;
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(k, M);
    auto it = frob_cache_.find(key);
    if (it != frob_cache_.end()) return it->second;
    GElt x = g_zero();
    if (R_ > 1) x[1] = 1;
    mpz_class m = pM(M);
    GElt s1 = (R_ == 1) ? x : root_near(res_.modulus(), g_pow(x, p_, m), M);
    GElt r = x;
    for (int i = 0; i < k; ++i) r = g_compose(r, s1, m);
    frob_cache_[key] = r;
    return r;
  }
  /// Newton root in GR(p^M, R) of the lifted residue polynomial `poly` near x0.
  GElt root_near(const std::vector<long>& poly, GElt y, int M) const {
    mpz_class m = pM(M);
    auto eval = [&](const std::vector<long>& P, const GElt& z) {
      GElt r = g_zero();
      for (auto it = P.rbegin(); it != P.rend(); ++it) {
        r = g_mul(r, z, m);
        r[0] += *it;
        g_reduce(r, m);
      }
      return r;
    };
    std::vector<long> dp;
    for (size_t i = 1; i < poly.size(); ++i) dp.push_back(static_cast<long>(i) * poly[i]);
    for (int prec = 1; prec < 2 * M + 2; prec *= 2) {
      GElt fv = eval(poly, y);
      GElt dv = eval(dp, y);
      y = g_sub(y, g_mul(fv, g_inv(dv, M), m), m);
    }
    return y;
  }

  // ---- valuation ring O = GR[pi]/(pi^E - p) ----
  static int ring_modulus_exponent(long rel, int E) {
    return static_cast<int>(detail::ceil_div(std::max<long>(rel, 1), E)) + 1;
  }
  Ring r_zero(int M) const {
    Ring z;
    z.M = M;
    z.c.assign(E_, g_zero());
    return z;
  }
  void r_mul_pi(Ring& z, const mpz_class& m) const {
    GElt top = std::move(z.c[E_ - 1]);
    for (int i = E_ - 1; i > 0; --i) z.c[i] = std::move(z.c[i - 1]);
    for (auto& t : top) t *= p_;
    g_reduce(top, m);
    z.c[0] = std::move(top);
  }
  void r_mul_pi_pow(Ring& z, long k) const {
    mpz_class m = pM(z.M);
    long a = k / E_, b = k % E_;
    if (a > 0) {
      mpz_class s = pM(static_cast<int>(std::min<long>(a, z.M)));
      for (auto& g : z.c) {
        for (auto& t : g) t *= s;
        g_reduce(g, m);
      }
    }
    for (long i = 0; i < b; ++i) r_mul_pi(z, m);
  }
  Ring r_add(const Ring& a, const Ring& b) const {
    Ring r = r_zero(a.M);
    mpz_class m = pM(a.M);
    for (int i = 0; i < E_; ++i) r.c[i] = g_add(a.c[i], b.c[i], m);
    return r;
  }
  Ring r_sub(const Ring& a, const Ring& b) const {
    Ring r = r_zero(a.M);
    mpz_class m = pM(a.M);
    for (int i = 0; i < E_; ++i) r.c[i] = g_sub(a.c[i], b.c[i], m);
    return r;
  }
  Ring r_mul(const Ring& a, const Ring& b) const {
    Ring r = r_zero(a.M);
    mpz_class m = pM(a.M);
    std::vector<GElt> acc(E_, g_zero());
    for (int i = 0; i < E_; ++i) {
      bool az = std::all_of(a.c[i].begin(), a.c[i].end(), [](const mpz_class& t) { return t == 0; });
      if (az) continue;
      for (int j = 0; j < E_; ++j) {
        GElt prod = g_mul(a.c[i], b.c[j], m);
        if (i + j >= E_) {
          for (auto& t : prod) t *= p_;
          g_reduce(prod, m);
          acc[i + j - E_] = g_add(acc[i + j - E_], prod, m);
        } else {
          acc[i + j] = g_add(acc[i + j], prod, m);
        }
      }
    }
    r.c = std::move(acc);
    return r;
  }
  Ring r_scale(const Ring& a, const GElt& s) const {
    Ring r = r_zero(a.M);
    mpz_class m = pM(a.M);
    for (int i = 0; i < E_; ++i) r.c[i] = g_mul(a.c[i], s, m);
    return r;
  }
  /// Inverse of a unit of O modulo pi^rel.
  Ring r_inv_unit(const Ring& z, long rel) const {
    Ring y = r_zero(z.M);
    y.c[0] = g_lift(res_.inv(g_residue(z.c[0])));
    Ring two = r_zero(z.M);
    two.c[0][0] = 2;
    for (long prec = 1; prec < rel; prec *= 2) y = r_mul(y, r_sub(two, r_mul(z, y)));
    return y;
  }
  /// Applies the automorphism sigma^k on coefficients and pi -> zeta*pi.
  Ring r_automorphism(const Ring& z, int k, const GElt* zeta) const {
    Ring r = r_zero(z.M);
    mpz_class m = pM(z.M);
    GElt root = frobenius_root(k, z.M);
    GElt zp = g_zero();
    zp[0] = 1;
    for (int i = 0; i < E_; ++i) {
      r.c[i] = (R_ == 1 || k % R_ == 0) ? z.c[i] : g_compose(z.c[i], root, m);
      if (zeta) {
        r.c[i] = g_mul(r.c[i], zp, m);
        zp = g_mul(zp, *zeta, m);
      }
    }
    return r;
  }

  /// Root in GR(p^M, R) of the residue polynomial defining GR(p^M, R1), R1 | R.
  GElt embedding_root(int R1, int M) const {
    GElt x = g_zero();
    if (R1 == R_) {
      if (R_ > 1) x[1] = 1;
      return x;
    }
    if (R_ % R1 != 0) throw std::invalid_argument("embedding_root: degree does not divide");
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(R1, M);
    auto it = emb_cache_.find(key);
    if (it != emb_cache_.end()) return it->second;
    ResidueField sub(p_, R1);
    const auto& poly = sub.modulus();
    // the roots lie in F_{p^R1}, which is spanned over F_p by traces of the power basis
    const std::uint64_t cap = std::uint64_t(1) << 24;
    if (sub.size() > cap) throw BudgetError("embedding_root: subfield too large");
    std::vector<Elt> span;
    for (int j = 0; j < R_ && static_cast<int>(span.size()) < R1; ++j) {
      Elt xj = res_.zero();
      xj[j] = 1;
      Elt t = res_.zero();
      for (int i = 0; i < R_ / R1; ++i) t = res_.add(t, res_.frobenius(xj, R1 * i));
      std::vector<Elt> trial = span;
      trial.push_back(t);
      if (detail::residue_rank(trial, p_) == static_cast<int>(trial.size())) span = trial;
    }
    if (static_cast<int>(span.size()) != R1) throw std::logic_error("embedding_root: subfield basis");
    std::optional<Elt> root;
    std::uint64_t best = 0;
    for (std::uint64_t i = 0; i < sub.size(); ++i) {
      Elt e = res_.zero();
      std::uint64_t t = i;
      for (const auto& b : span) {
        e = res_.add(e, res_.scale(b, static_cast<long>(t % p_)));
        t /= p_;
      }
      if (!res_.is_zero(res_.evaluate(poly, e))) continue;
      std::uint64_t idx = res_.index(e);
      if (!root || idx < best) {
        root = e;
        best = idx;
      }
    }
    if (!root) throw std::logic_error("embedding_root: no residue root");
    GElt r = (R1 == 1) ? g_lift(*root) : root_near_unlocked(poly, g_lift(*root), M);
    emb_cache_[key] = r;
    return r;
  }

  /// Inverse of the Z_p-matrix whose columns are rho^i X^a (i < R1, a < R/R1).
  std::vector<std::vector<mpz_class>> coordinate_matrix(int R1, int M) const {
    GElt rho = embedding_root(R1, M);
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(R1, M);
    auto it = coord_cache_.find(key);
    if (it != coord_cache_.end()) return it->second;
    mpz_class m = pM(M);
    int mdeg = R_ / R1;
    std::vector<std::vector<mpz_class>> B(R_, std::vector<mpz_class>(R_, 0));
    for (int a = 0; a < mdeg; ++a) {
      GElt xa = g_zero();
      xa[0] = 1;
      for (int t = 0; t < a; ++t) xa = g_mul(xa, gen_elt(), m);
      GElt cur = xa;
      for (int i = 0; i < R1; ++i) {
        for (int row = 0; row < R_; ++row) B[row][a * R1 + i] = cur[row];
        cur = g_mul(cur, rho, m);
      }
    }
    auto inv = invert_mod(B, M);
    coord_cache_[key] = inv;
    return inv;
  }

  GElt gen_elt() const {
    GElt x = g_zero();
    if (R_ > 1) x[1] = 1;
    return x;
  }

  std::vector<std::vector<mpz_class>> invert_mod(std::vector<std::vector<mpz_class>> A, int M) const {
    mpz_class m = pM(M);
    int n = static_cast<int>(A.size());
    std::vector<std::vector<mpz_class>> I(n, std::vector<mpz_class>(n, 0));
    for (int i = 0; i < n; ++i) I[i][i] = 1;
    for (int col = 0; col < n; ++col) {
      int piv = -1;
      for (int r = col; r < n; ++r) {
        mpz_class t = A[r][col] % p_;
        if (t != 0) {
          piv = r;
          break;
        }
      }
      if (piv < 0) throw std::logic_error("invert_mod: singular modulo p");
      std::swap(A[piv], A[col]);
      std::swap(I[piv], I[col]);
      mpz_class inv;
      mpz_class a = A[col][col] % m;
      if (a < 0) a += m;
      mpz_invert(inv.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
      for (int j = 0; j < n; ++j) {
        A[col][j] = A[col][j] * inv % m;
        I[col][j] = I[col][j] * inv % m;
      }
      for (int r = 0; r < n; ++r) {
        if (r == col || A[r][col] == 0) continue;
        mpz_class f = A[r][col];
        for (int j = 0; j < n; ++j) {
          A[r][j] = (A[r][j] - f * A[col][j]) % m;
          I[r][j] = (I[r][j] - f * I[col][j]) % m;
        }
      }
    }
    for (auto& row : I)
      for (auto& v : row) {
        v %= m;
        if (v < 0) v += m;
      }
    return I;
  }

 private:
  LocalField(long p, int R, int E, Role role, FieldPtr parent, int rel, long precision)
      : p_(p), R_(R), E_(E), role_(role), parent_(std::move(parent)), rel_deg_(rel), precision_(precision),
        res_(p, R) {}

  GElt root_near_unlocked(const std::vector<long>& poly, GElt y, int M) const { return root_near(poly, y, M); }

  long p_;
  int R_, E_;
  Role role_;
  FieldPtr parent_;
  int rel_deg_;
  long precision_;
  ResidueField res_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, int>, GElt> frob_cache_;
  mutable std::map<std::pair<int, int>, GElt> emb_cache_;
  mutable std::map<std::pair<int, int>, std::vector<std::vector<mpz_class>>> coord_cache_;
};

/// Valuation with the three-way zero convention.
struct Valuation {
  enum class Kind { finite, infinite, at_least };
  Kind kind = Kind::finite;
  long value = 0;
  bool is_finite() const { return kind == Kind::finite; }
  bool is_infinite() const { return kind == Kind::infinite; }
};

/// Precision-tracked element of a LocalField stored as pi-adic digits.
class FieldElement {
 public:
  enum class State { exact_zero, zero_to_precision, nonzero };
  using Elt = ResidueField::Elt;
  using Ring = detail::Ring;

  FieldElement() = default;

  static FieldElement zero(const FieldPtr& F) {
    FieldElement x;
    x.F_ = F;
    x.state_ = State::exact_zero;
    x.v_ = 0;
    x.N_ = 0;
    return x;
  }
  static FieldElement zero_to_precision(const FieldPtr& F, long N) {
    FieldElement x;
    x.F_ = F;
    x.state_ = State::zero_to_precision;
    x.v_ = N;
    x.N_ = N;
    return x;
  }
  static FieldElement from_int(const FieldPtr& F, const mpz_class& n, long N = -1) {
    if (N < 0) N = F->default_precision();
    if (n == 0) return zero(F);
    int M = LocalField::ring_modulus_exponent(N, F->ramification());
    Ring z = F->r_zero(M);
    z.c[0] = F->g_int(n, M);
    return from_ring(F, z, 0, N);
  }
  static FieldElement from_rational(const FieldPtr& F, const mpz_class& a, const mpz_class& b, long N = -1) {
    if (b == 0) throw std::invalid_argument("from_rational: zero denominator");
    if (N < 0) N = F->default_precision();
    if (a == 0) return zero(F);
    long guard = N + 64 * F->ramification();
    FieldElement den = from_int(F, b, guard);
    FieldElement num = from_int(F, a, guard);
    return (num / den).truncate(N);
  }
  static FieldElement one(const FieldPtr& F, long N = -1) { return from_int(F, 1, N); }
  static FieldElement uniformizer(const FieldPtr& F, long N = -1) {
    if (N < 0) N = F->default_precision();
    return one(F, N - 1).shift(1);
  }
  /// Digit-representative lift [d] of a residue.
  static FieldElement from_residue(const FieldPtr& F, const Elt& d, long N = -1) {
    if (N < 0) N = F->default_precision();
    if (F->residue().is_zero(d)) return zero(F);
    FieldElement x;
    x.F_ = F;
    x.state_ = State::nonzero;
    x.v_ = 0;
    x.N_ = N;
    x.digits_.assign(N, F->residue().zero());
    x.digits_[0] = d;
    return x;
  }
  static FieldElement teichmuller(const FieldPtr& F, const Elt& d, long N = -1) {
    if (N < 0) N = F->default_precision();
    if (F->residue().is_zero(d)) return zero(F);
    int M = LocalField::ring_modulus_exponent(N, F->ramification());
    Ring z = F->r_zero(M);
    z.c[0] = F->g_teichmuller(d, M);
    return from_ring(F, z, 0, N);
  }
  /// The Galois-ring generator X.
  static FieldElement generator(const FieldPtr& F, long N = -1) {
    if (N < 0) N = F->default_precision();
    int M = LocalField::ring_modulus_exponent(N, F->ramification());
    Ring z = F->r_zero(M);
    z.c[0] = F->gen_elt();
    if (F->residue_degree() == 1) return zero(F);
    return from_ring(F, z, 0, N);
  }
  /// Element with explicit digits: sum digits[i] pi^(val+i), known modulo pi^N.
  static FieldElement from_digits(const FieldPtr& F, long val, const std::vector<Elt>& digits, long N) {
    std::vector<Elt> d = digits;
    long count = std::max<long>(0, std::min<long>(static_cast<long>(d.size()), N - val));
    d.resize(count);
    long lead = 0;
    while (lead < count && F->residue().is_zero(d[lead])) ++lead;
    if (lead == count) return zero_to_precision(F, N);
    FieldElement x;
    x.F_ = F;
    x.state_ = State::nonzero;
    x.v_ = val + lead;
    x.N_ = N;
    x.digits_.assign(d.begin() + lead, d.end());
    x.digits_.resize(N - x.v_, F->residue().zero());
    return x;
  }
  /// Reads back pi^shift * z, known modulo pi^N.
  static FieldElement from_ring(const FieldPtr& F, Ring z, long shift, long N) {
    long rel = N - shift;
    if (rel <= 0) return zero_to_precision(F, N);
    const ResidueField& res = F->residue();
    int E = F->ramification();
    std::vector<Elt> digs;
    digs.reserve(rel);
    long lead = -1;
    for (long i = 0; i < rel; ++i) {
      Elt d = F->g_residue(z.c[0]);
      if (lead < 0 && !res.is_zero(d)) lead = i;
      if (lead >= 0) digs.push_back(d);
      if (i + 1 == rel) break;
      auto& c0 = z.c[0];
      for (int k = 0; k < F->residue_degree(); ++k) {
        c0[k] -= d[k];
        mpz_divexact_ui(c0[k].get_mpz_t(), c0[k].get_mpz_t(), static_cast<unsigned long>(F->p()));
      }
      auto top = std::move(z.c[0]);
      for (int k = 0; k + 1 < E; ++k) z.c[k] = std::move(z.c[k + 1]);
      z.c[E - 1] = std::move(top);
    }
    if (lead < 0) return zero_to_precision(F, N);
    FieldElement x;
    x.F_ = F;
    x.state_ = State::nonzero;
    x.v_ = shift + lead;
    x.N_ = N;
    x.digits_ = std::move(digs);
    return x;
  }

  const FieldPtr& field() const { return F_; }
  State state() const { return state_; }
  bool is_exact_zero() const { return state_ == State::exact_zero; }
  bool is_zero() const { return state_ != State::nonzero; }
  bool is_nonzero() const { return state_ == State::nonzero; }
  /// Absolute precision; exact zero reports a huge value.
  long precision() const { return state_ == State::exact_zero ? kExact : N_; }
  long relative_precision() const { return state_ == State::nonzero ? N_ - v_ : 0; }
  Valuation valuation() const {
    if (state_ == State::exact_zero) return {Valuation::Kind::infinite, 0};
    if (state_ == State::zero_to_precision) return {Valuation::Kind::at_least, N_};
    return {Valuation::Kind::finite, v_};
  }
  /// The exact valuation; throws unless the element is known to be nonzero.
  long val() const {
    if (state_ == State::exact_zero) throw std::invalid_argument("val: exact zero");
    if (state_ == State::zero_to_precision) throw PrecisionError("val: zero to precision " + std::to_string(N_));
    return v_;
  }
  /// Lower bound for the valuation (precision for zeros).
  long val_lower() const { return state_ == State::nonzero ? v_ : precision(); }
  const std::vector<Elt>& digits() const { return digits_; }
  /// Coefficient of pi^i.
  Elt digit(long i) const {
    if (state_ == State::exact_zero) return F_->residue().zero();
    if (i >= N_) throw PrecisionError("digit beyond precision");
    if (state_ == State::zero_to_precision || i < v_) return F_->residue().zero();
    return digits_[i - v_];
  }
  Elt leading_digit() const {
    val();
    return digits_[0];
  }
  bool is_integral() const { return state_ != State::nonzero || v_ >= 0; }

  /// Multiplication by pi^k.
  FieldElement shift(long k) const {
    FieldElement r = *this;
    if (state_ == State::exact_zero) return r;
    r.v_ += k;
    r.N_ += k;
    return r;
  }
  /// Forgets digits at positions >= N.
  FieldElement truncate(long N) const {
    if (state_ == State::exact_zero) return *this;
    if (N >= N_) return *this;
    if (state_ == State::zero_to_precision || N <= v_) return zero_to_precision(F_, N);
    FieldElement r = *this;
    r.N_ = N;
    r.digits_.resize(N - v_);
    return r;
  }
  /// pi^{-shift} x as a ring element modulo pi^rel; requires val >= shift.
  Ring to_ring(long shift, long rel) const {
    int M = LocalField::ring_modulus_exponent(rel, F_->ramification());
    Ring z = F_->r_zero(M);
    if (state_ != State::nonzero) return z;
    if (v_ < shift) throw std::logic_error("to_ring: valuation below shift");
    long count = std::min<long>(static_cast<long>(digits_.size()), shift + rel - v_);
    if (count <= 0) return z;
    mpz_class m = F_->pM(M);
    for (long i = count - 1; i >= 0; --i) {
      F_->r_mul_pi(z, m);
      const Elt& d = digits_[i];
      for (int k = 0; k < F_->residue_degree(); ++k) {
        z.c[0][k] += d[k];
        if (z.c[0][k] >= m) z.c[0][k] -= m;
      }
    }
    F_->r_mul_pi_pow(z, v_ - shift);
    return z;
  }

  FieldElement operator-() const {
    if (state_ != State::nonzero) return *this;
    long rel = N_ - v_;
    Ring z = to_ring(v_, rel);
    Ring zero = F_->r_zero(z.M);
    return from_ring(F_, F_->r_sub(zero, z), v_, N_);
  }
  friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
    check_same(a, b);
    if (a.is_exact_zero()) return b;
    if (b.is_exact_zero()) return a;
    long N = std::min(a.N_, b.N_);
    long m = std::min(a.val_lower(), b.val_lower());
    if (m >= N) return zero_to_precision(a.F_, N);
    long rel = N - m;
    Ring za = a.to_ring(m, rel), zb = b.to_ring(m, rel);
    return from_ring(a.F_, a.F_->r_add(za, zb), m, N);
  }
  friend FieldElement operator-(const FieldElement& a, const FieldElement& b) { return a + (-b); }
  friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
    check_same(a, b);
    if (a.is_exact_zero() || b.is_exact_zero()) return zero(a.F_);
    if (a.is_zero() || b.is_zero()) {
      long N = std::min(a.precision() + b.val_lower(), b.precision() + a.val_lower());
      return zero_to_precision(a.F_, N);
    }
    long rel = std::min(a.N_ - a.v_, b.N_ - b.v_);
    Ring za = a.to_ring(a.v_, rel), zb = b.to_ring(b.v_, rel);
    long v = a.v_ + b.v_;
    return from_ring(a.F_, a.F_->r_mul(za, zb), v, v + rel);
  }
  friend FieldElement operator/(const FieldElement& a, const FieldElement& b) {
    check_same(a, b);
    if (b.is_exact_zero()) throw std::invalid_argument("division by exact zero");
    if (b.is_zero()) throw PrecisionError("division by zero-to-precision");
    if (a.is_exact_zero()) return a;
    if (a.is_zero()) return zero_to_precision(a.F_, a.N_ - b.v_);
    long rel = std::min(a.N_ - a.v_, b.N_ - b.v_);
    Ring zb = b.to_ring(b.v_, rel);
    Ring inv = a.F_->r_inv_unit(zb, rel);
    Ring za = a.to_ring(a.v_, rel);
    long v = a.v_ - b.v_;
    return from_ring(a.F_, a.F_->r_mul(za, inv), v, v + rel);
  }
  FieldElement& operator+=(const FieldElement& o) { return *this = *this + o; }
  FieldElement& operator-=(const FieldElement& o) { return *this = *this - o; }
  FieldElement& operator*=(const FieldElement& o) { return *this = *this * o; }

  FieldElement inverse() const { return one(F_, std::max<long>(relative_precision(), 1)) / *this; }
  FieldElement pow(long n) const {
    if (n < 0) return inverse().pow(-n);
    if (n == 0) return one(F_, std::max<long>(relative_precision(), 1));
    FieldElement base = *this;
    std::optional<FieldElement> r;
    while (n) {
      if (n & 1) r = r ? *r * base : base;
      n >>= 1;
      if (n) base = base * base;
    }
    return *r;
  }
  /// Multiplication by an integer.
  FieldElement times(const mpz_class& n) const {
    if (n == 0) return zero(F_);
    if (state_ == State::exact_zero) return *this;
    return *this * from_int(F_, n, relative_precision() + 64 * F_->ramification());
  }
  /// Division by a nonzero integer: the p-part is a shift (pi^E = p), the prime-to-p part
  /// is inverted modulo a power of p.
  FieldElement div_int(const mpz_class& n) const {
    if (n == 0) throw std::invalid_argument("div_int: division by zero");
    if (state_ == State::exact_zero) return *this;
    mpz_class m = abs(n), pp = F_->p();
    long a = 0;
    while (m % pp == 0) {
      m /= pp;
      ++a;
    }
    long E = F_->ramification();
    long rel = std::max<long>(relative_precision(), 1);
    mpz_class mod = F_->pM(static_cast<int>(detail::ceil_div(rel, E) + 1)), inv;
    mpz_invert(inv.get_mpz_t(), m.get_mpz_t(), mod.get_mpz_t());
    if (n < 0) inv = -inv;
    FieldElement c = from_int(F_, inv, rel + E);
    return (*this * c).shift(-a * E);
  }
  bool equals(const FieldElement& o) const { return (*this - o).is_zero(); }

 private:
  static constexpr long kExact = 1L << 40;
  static void check_same(const FieldElement& a, const FieldElement& b) {
    if (!a.F_ || !b.F_ || !a.F_->same_as(*b.F_)) throw std::invalid_argument("operands in different fields");
  }

  FieldPtr F_;
  State state_ = State::exact_zero;
  long v_ = 0;
  long N_ = 0;
  std::vector<Elt> digits_;
};

inline Valuation valuation(const FieldElement& x) { return x.valuation(); }

/// Field automorphism acting by sigma^frob on the Galois ring and pi -> zeta*pi.
struct Automorphism {
  int frob = 0;
  std::optional<ResidueField::Elt> zeta;  // residue of a root of unity; Teichmuller lifted
};

inline FieldElement apply(const Automorphism& s, const FieldElement& x) {
  if (x.is_zero()) return x;
  const FieldPtr& F = x.field();
  long rel = x.precision() - x.val();
  auto z = x.to_ring(x.val(), rel);
  std::optional<detail::GElt> zeta;
  if (s.zeta) zeta = F->g_teichmuller(*s.zeta, z.M);
  auto w = F->r_automorphism(z, s.frob, zeta ? &*zeta : nullptr);
  FieldElement r = FieldElement::from_ring(F, w, 0, rel);
  // pi^v picks up zeta^v.
  if (s.zeta && x.val() != 0) {
    long E = F->ramification();
    auto zz = F->residue().pow(*s.zeta, static_cast<std::uint64_t>(((x.val() % E) + E) % E));
    r = r * FieldElement::teichmuller(F, zz, rel + 1);
  }
  return r.shift(x.val());
}

/// Absolute Frobenius power sigma^k (fixes pi).
inline FieldElement frobenius(const FieldElement& x, int k = 1) { return apply(Automorphism{k, std::nullopt}, x); }

/// Embeds x from a subfield into K.
inline FieldElement embed(const FieldElement& x, const FieldPtr& K) {
  const FieldPtr& L = x.field();
  if (L->same_as(*K)) return x;
  if (!K->contains(*L)) throw std::invalid_argument("embed: target does not contain source");
  long e = K->ramification() / L->ramification();
  if (x.is_exact_zero()) return FieldElement::zero(K);
  if (x.is_zero()) return FieldElement::zero_to_precision(K, e * x.precision());
  long v = x.val(), rel = x.precision() - v;
  auto z = x.to_ring(v, rel);
  int M = z.M;
  mpz_class m = K->pM(M);
  auto rho = K->embedding_root(L->residue_degree(), M);
  auto out = K->r_zero(M);
  for (int t = 0; t < L->ramification(); ++t) {
    const auto& c = z.c[t];
    detail::GElt img = K->g_zero();
    detail::GElt pw = K->g_zero();
    pw[0] = 1;
    for (int i = 0; i < L->residue_degree(); ++i) {
      if (c[i] != 0) {
        detail::GElt term = pw;
        for (auto& u : term) u *= c[i];
        K->g_reduce(term, m);
        img = K->g_add(img, term, m);
      }
      pw = K->g_mul(pw, rho, m);
    }
    out.c[e * t] = img;
  }
  return FieldElement::from_ring(K, out, e * v, e * (v + rel));
}

/// Coordinates of x over a subfield L in the basis X^a pi^b (index b*m + a).
inline std::vector<FieldElement> coordinates(const FieldElement& x, const FieldPtr& L) {
  const FieldPtr& K = x.field();
  if (!K->contains(*L)) throw std::invalid_argument("coordinates: not a subfield");
  int e = K->ramification() / L->ramification();
  int mdeg = K->residue_degree() / L->residue_degree();
  int R1 = L->residue_degree();
  int n = e * mdeg;
  std::vector<FieldElement> out(n);
  if (x.is_exact_zero()) {
    for (auto& o : out) o = FieldElement::zero(L);
    return out;
  }
  if (x.is_zero()) {
    long N = x.precision();
    for (int b = 0; b < e; ++b)
      for (int a = 0; a < mdeg; ++a) out[b * mdeg + a] = FieldElement::zero_to_precision(L, detail::ceil_div(N - b, e));
    return out;
  }
  long t = detail::floor_div(x.val(), e);
  FieldElement xs = x.shift(-e * t);
  long Np = xs.precision();
  auto z = xs.to_ring(0, Np);
  int M = z.M;
  mpz_class m = K->pM(M);
  auto Binv = K->coordinate_matrix(R1, M);
  std::vector<detail::Ring> rings(n, L->r_zero(M));
  for (int b = 0; b < e; ++b)
    for (int s = 0; s < L->ramification(); ++s) {
      const auto& c = z.c[b + e * s];
      for (int a = 0; a < mdeg; ++a)
        for (int i = 0; i < R1; ++i) {
          mpz_class acc = 0;
          const auto& row = Binv[a * R1 + i];
          for (int k = 0; k < K->residue_degree(); ++k) acc += row[k] * c[k];
          acc %= m;
          if (acc < 0) acc += m;
          rings[b * mdeg + a].c[s][i] = acc;
        }
    }
  for (int b = 0; b < e; ++b)
    for (int a = 0; a < mdeg; ++a) {
      long NL = detail::ceil_div(Np - b, e);
      out[b * mdeg + a] = FieldElement::from_ring(L, rings[b * mdeg + a], 0, NL).shift(t);
    }
  return out;
}

/// Views x as an element of the subfield L; throws if it is not in L to precision.
inline FieldElement descend(const FieldElement& x, const FieldPtr& L) {
  if (x.field()->same_as(*L)) return x;
  auto c = coordinates(x, L);
  for (size_t i = 1; i < c.size(); ++i)
    if (!c[i].is_zero()) throw std::invalid_argument("descend: element not in subfield");
  return c[0];
}

namespace detail {
inline void check_ancestor(const FieldPtr& K, const FieldPtr& L) {
  if (!K->has_ancestor(*L) && !K->contains(*L)) throw std::invalid_argument("not an ancestor: " + L->describe());
}
}  // namespace detail

inline FieldElement trace(const FieldElement& x, const FieldPtr& L) {
  const FieldPtr& K = x.field();
  detail::check_ancestor(K, L);
  if (K->same_as(*L)) return x;
  int e = K->ramification() / L->ramification();
  int mdeg = K->residue_degree() / L->residue_degree();
  long extra = x.is_nonzero() ? x.precision() - x.val() + 2 : 2;
  FieldElement X = FieldElement::generator(K, extra + 2);
  FieldElement sum = FieldElement::zero(L);
  FieldElement xa = x;
  for (int a = 0; a < mdeg; ++a) {
    for (int b = 0; b < e; ++b) {
      auto c = coordinates(xa.shift(b), L);
      sum = sum + c[b * mdeg + a];
    }
    if (a + 1 < mdeg) xa = xa * X;
  }
  return sum;
}

/// Determinant by elimination with minimal-valuation pivots.
inline FieldElement determinant(std::vector<std::vector<FieldElement>> A, const FieldPtr& L) {
  int n = static_cast<int>(A.size());
  if (n == 0) return FieldElement::one(L);
  FieldElement det;
  bool det_set = false;
  int sign = 1;
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    long best = 0;
    for (int r = col; r < n; ++r) {
      if (!A[r][col].is_nonzero()) continue;
      long v = A[r][col].val();
      if (piv < 0 || v < best) {
        piv = r;
        best = v;
      }
    }
    if (piv < 0) {
      bool all_exact = true;
      for (int r = col; r < n; ++r) all_exact = all_exact && A[r][col].is_exact_zero();
      if (all_exact) return FieldElement::zero(L);
      throw PrecisionError("determinant: pivot column is zero to precision");
    }
    if (piv != col) {
      std::swap(A[piv], A[col]);
      sign = -sign;
    }
    det = det_set ? det * A[col][col] : A[col][col];
    det_set = true;
    for (int r = col + 1; r < n; ++r) {
      if (A[r][col].is_exact_zero()) continue;
      FieldElement f = A[r][col] / A[col][col];
      for (int j = col; j < n; ++j) A[r][j] = A[r][j] - f * A[col][j];
    }
  }
  return sign < 0 ? -det : det;
}

inline FieldElement norm(const FieldElement& x, const FieldPtr& L) {
  const FieldPtr& K = x.field();
  detail::check_ancestor(K, L);
  if (K->same_as(*L)) return x;
  if (x.is_exact_zero()) return FieldElement::zero(L);
  if (x.is_zero()) throw PrecisionError("norm of zero-to-precision element");
  int e = K->ramification() / L->ramification();
  int mdeg = K->residue_degree() / L->residue_degree();
  int n = e * mdeg;
  long t = detail::floor_div(x.val(), e);
  FieldElement xs = x.shift(-e * t);
  FieldElement X = FieldElement::generator(K, xs.precision() + 4);
  std::vector<std::vector<FieldElement>> A(n, std::vector<FieldElement>(n));
  FieldElement xa = xs;
  for (int a = 0; a < mdeg; ++a) {
    for (int b = 0; b < e; ++b) {
      auto c = coordinates(xa.shift(b), L);
      for (int i = 0; i < n; ++i) A[i][b * mdeg + a] = c[i];
    }
    if (a + 1 < mdeg) xa = xa * X;
  }
  return determinant(A, L).shift(t * n);
}

inline bool is_square(const FieldElement& x) {
  if (x.is_exact_zero()) throw std::invalid_argument("is_square: zero");
  long v = x.val();
  if (v % 2 != 0) return false;
  return x.field()->residue().is_square(x.leading_digit());
}

enum class QuadraticExt { unramified, ramified };

/// Membership in the norm group of the quadratic extension of x's field.
/// `twist` is the residue of gamma when the ramified extension is k'(sqrt(gamma*pi)).
inline bool in_norm_group(const FieldElement& x, QuadraticExt ext,
                          const std::optional<ResidueField::Elt>& twist = std::nullopt) {
  if (x.is_exact_zero()) throw std::invalid_argument("in_norm_group: zero");
  long v = x.val();
  if (ext == QuadraticExt::unramified) return v % 2 == 0;
  const ResidueField& res = x.field()->residue();
  ResidueField::Elt u = x.leading_digit();
  ResidueField::Elt g = twist ? *twist : res.one();
  ResidueField::Elt mg = res.neg(g);
  if (v % 2 != 0) u = res.mul(u, res.inv(mg));
  return res.is_square(u);
}

/// Square root of a square element by residue square root and Newton iteration.
inline FieldElement sqrt(const FieldElement& x) {
  if (x.is_exact_zero()) return x;
  if (!is_square(x)) throw std::invalid_argument("sqrt: not a square");
  const FieldPtr& F = x.field();
  long v = x.val(), rel = x.precision() - v;
  auto s = F->residue().sqrt(x.leading_digit());
  FieldElement u = x.shift(-v);
  FieldElement y = FieldElement::from_residue(F, *s, rel);
  for (long prec = 1; prec < 2 * rel + 2; prec *= 2) y = (y + u / y).div_int(2);
  return y.shift(v / 2);
}

/// The square root in 1 + pi*O of x in 1 + pi*O.
inline FieldElement hensel_sqrt(const FieldElement& x) {
  const FieldPtr& F = x.field();
  FieldElement one = FieldElement::one(F, x.precision());
  FieldElement d = x - one;
  if (!(d.is_zero() || d.val() >= 1)) throw std::invalid_argument("hensel_sqrt: argument not in 1 + pi*O");
  if (d.is_zero() && x.precision() < 1) throw PrecisionError("hensel_sqrt: no digits");
  long rel = x.precision();
  FieldElement y = FieldElement::one(F, rel);
  for (long prec = 1; prec < 2 * rel + 2; prec *= 2) y = (y + x / y).div_int(2);
  return y;
}

namespace detail {
inline long vp_int(long n, long p) {
  long v = 0;
  while (n % p == 0) {
    n /= p;
    ++v;
  }
  return v;
}
}  // namespace detail

namespace detail {

/// (sum_{n0 <= n <= M} c_n X^n) / D for integer coefficients c_n and v(X) >= 1, evaluated by
/// Horner's scheme in the valuation ring with enough extra digits to absorb the division.
/// n0 is 1 when skip_constant is set and 0 otherwise; coeff(n, M, c_{n+1}) returns c_n.
template <class Coeff>
FieldElement horner_series(const FieldElement& X, long M, Coeff coeff, const mpz_class& D, bool skip_constant) {
  const FieldPtr& F = X.field();
  long E = F->ramification(), p = F->p();
  long target = X.precision();
  mpz_class u = D;
  long a = 0;
  while (u % p == 0) {
    u /= p;
    ++a;
  }
  long W = target + E * a + E;
  int Mr = LocalField::ring_modulus_exponent(W, static_cast<int>(E));
  mpz_class m = F->pM(Mr);
  Ring x = X.to_ring(0, W);
  Ring acc = F->r_zero(Mr);
  long n0 = skip_constant ? 1 : 0;
  mpz_class c = 0;
  for (long n = M; n >= n0; --n) {
    c = coeff(n, M, c);
    if (n < M) acc = F->r_mul(acc, x);
    mpz_class t = acc.c[0][0] + c;
    mpz_mod(t.get_mpz_t(), t.get_mpz_t(), m.get_mpz_t());
    acc.c[0][0] = t;
  }
  if (skip_constant) acc = F->r_mul(acc, x);
  GElt s(F->residue_degree(), 0);
  mpz_invert(s[0].get_mpz_t(), u.get_mpz_t(), m.get_mpz_t());
  acc = F->r_scale(acc, s);
  return FieldElement::from_ring(F, acc, -E * a, W - E * a).truncate(target);
}

}  // namespace detail

/// exp on {v(X) > v(p)/(p-1)}.
inline FieldElement exp(const FieldElement& X) {
  const FieldPtr& F = X.field();
  long E = F->ramification(), p = F->p();
  if (X.is_exact_zero()) return FieldElement::one(F);
  long target = X.precision();
  if (X.is_zero()) return FieldElement::one(F, target);
  long v = X.val();
  if (v * (p - 1) <= E) throw std::invalid_argument("exp: argument outside the convergence domain");
  // last term needed; v(X^n/n!) can drop by less than E before growing again
  long M = 0;
  while ((M + 1) * v - E * (M / (p - 1)) - E < target) ++M;
  // sum_{n <= M} X^n M!/n! by Horner in the valuation ring, then one division by M!
  mpz_class fact = 1;
  for (long n = 2; n <= M; ++n) fact *= n;
  return detail::horner_series(X, M, [](long n, long M, const mpz_class& prev) {
    return n == M ? mpz_class(1) : mpz_class(prev * (n + 1));
  }, fact, false);
}

/// log on 1 + pi*O.
inline FieldElement log(const FieldElement& x) {
  const FieldPtr& F = x.field();
  long E = F->ramification(), p = F->p();
  FieldElement y = x - FieldElement::one(F, x.precision());
  if (y.is_exact_zero()) return FieldElement::zero(F);
  long target = y.precision();
  if (y.is_zero()) return FieldElement::zero_to_precision(F, target);
  long v = y.val();
  if (v <= 0) throw std::invalid_argument("log: argument outside 1 + pi*O");
  // later terms have valuation >= m*v - E*log_p(m), increasing once n*v >= 2E
  long M = 1, logpn = 0;
  for (;; ++M) {
    while (upow(p, static_cast<unsigned>(logpn + 1)) <= static_cast<std::uint64_t>(M)) ++logpn;
    if ((M + 1) * v - E * (logpn + 1) >= target && M * v >= E * 2) break;
    if (M > 100000) throw std::logic_error("log: series did not terminate");
  }
  // sum_{1 <= n <= M} (-1)^{n+1} y^n L/n with L = lcm(1..M), then one division by L
  mpz_class L = 1;
  for (long n = 2; n <= M; ++n) mpz_lcm_ui(L.get_mpz_t(), L.get_mpz_t(), static_cast<unsigned long>(n));
  return detail::horner_series(y, M, [L](long n, long, const mpz_class&) {
    mpz_class c = L / n;
    return n % 2 == 1 ? c : mpz_class(-c);
  }, L, true);
}

/// Random element with valuation in [vmin, vmax] and absolute precision N.
inline FieldElement random_element(const FieldPtr& F, std::mt19937_64& rng, long vmin, long vmax, long N) {
  std::uniform_int_distribution<long> vd(vmin, vmax);
  std::uniform_int_distribution<long> dd(0, F->p() - 1);
  long v = vd(rng);
  std::vector<ResidueField::Elt> digs(std::max<long>(N - v, 0), F->residue().zero());
  for (auto& d : digs)
    for (auto& c : d) c = dd(rng);
  if (!digs.empty())
    while (F->residue().is_zero(digs[0]))
      for (auto& c : digs[0]) c = dd(rng);
  return FieldElement::from_digits(F, v, digs, N);
}

inline FieldElement random_unit(const FieldPtr& F, std::mt19937_64& rng, long N) {
  return random_element(F, rng, 0, 0, N);
}

}  // namespace tori
