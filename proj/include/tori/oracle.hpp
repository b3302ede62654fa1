#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tori/cyclomod.hpp"
#include "tori/errors.hpp"
#include "tori/padic.hpp"
#include "tori/torus.hpp"

// Brute-force reference computations on finite quotients, kept independent of the
// FieldElement arithmetic: rings are handled with machine integers modulo p^M.

namespace tori::oracle {

using i64 = std::int64_t;

/// O / p^M for O = GR(p^M, m)[pi] / (pi^E - p). Coordinates indexed b*m + a for pi^b X^a.
class Ring {
 public:
  using Elt = std::vector<i64>;

  Ring(long p, int m, int E, int M, std::vector<i64> modulus) : p_(p), m_(m), E_(E), M_(M), g_(std::move(modulus)) {
    pM_ = 1;
    for (int i = 0; i < M; ++i) {
      if (pM_ > (i64(1) << 31) / p) throw BudgetError("oracle ring: p^M exceeds 2^31");
      pM_ *= p;
    }
    if (static_cast<int>(g_.size()) != m + 1 || g_[m] != 1) throw std::invalid_argument("oracle ring: bad modulus");
    frob_x_ = lift_frobenius();
  }

  long p() const { return p_; }
  int m() const { return m_; }
  int E() const { return E_; }
  int M() const { return M_; }
  i64 pM() const { return pM_; }
  int size() const { return m_ * E_; }

  i64 md(i64 a) const {
    a %= pM_;
    return a < 0 ? a + pM_ : a;
  }
  Elt zero() const { return Elt(size(), 0); }
  Elt from_int(i64 n) const {
    Elt r = zero();
    r[0] = md(n);
    return r;
  }
  Elt one() const { return from_int(1); }
  Elt pi() const {
    Elt r = zero();
    if (E_ == 1) r[0] = p_ % pM_;
    else r[m_] = 1;
    return r;
  }
  Elt add(const Elt& a, const Elt& b) const {
    Elt r(size());
    for (int i = 0; i < size(); ++i) r[i] = md(a[i] + b[i]);
    return r;
  }
  Elt sub(const Elt& a, const Elt& b) const {
    Elt r(size());
    for (int i = 0; i < size(); ++i) r[i] = md(a[i] - b[i]);
    return r;
  }
  Elt neg(const Elt& a) const { return sub(zero(), a); }
  Elt scale(const Elt& a, i64 c) const {
    Elt r(size());
    c = md(c);
    for (int i = 0; i < size(); ++i) r[i] = md(a[i] * c);
    return r;
  }

  // Galois ring part, vectors of length m.
  std::vector<i64> gr_mul(const std::vector<i64>& a, const std::vector<i64>& b) const {
    std::vector<i64> t(2 * m_ - 1, 0);
    for (int i = 0; i < m_; ++i) {
      if (!a[i]) continue;
      for (int j = 0; j < m_; ++j) t[i + j] = md(t[i + j] + a[i] * b[j]);
    }
    for (int k = 2 * m_ - 2; k >= m_; --k) {
      i64 c = t[k];
      if (!c) continue;
      t[k] = 0;
      for (int i = 0; i < m_; ++i) t[k - m_ + i] = md(t[k - m_ + i] - c * g_[i]);
    }
    t.resize(m_);
    return t;
  }
  std::vector<i64> gr_add(const std::vector<i64>& a, const std::vector<i64>& b) const {
    std::vector<i64> r(m_);
    for (int i = 0; i < m_; ++i) r[i] = md(a[i] + b[i]);
    return r;
  }
  std::vector<i64> coef(const Elt& x, int b) const { return std::vector<i64>(x.begin() + b * m_, x.begin() + (b + 1) * m_); }
  void set_coef(Elt& x, int b, const std::vector<i64>& c) const {
    for (int a = 0; a < m_; ++a) x[b * m_ + a] = c[a];
  }

  Elt mul(const Elt& x, const Elt& y) const {
    Elt r = zero();
    for (int b1 = 0; b1 < E_; ++b1) {
      auto c1 = coef(x, b1);
      if (all_zero(c1)) continue;
      for (int b2 = 0; b2 < E_; ++b2) {
        auto c2 = coef(y, b2);
        if (all_zero(c2)) continue;
        auto c = gr_mul(c1, c2);
        int b = b1 + b2;
        if (b >= E_) {
          b -= E_;
          for (auto& v : c) v = md(v * p_);
        }
        for (int a = 0; a < m_; ++a) r[b * m_ + a] = md(r[b * m_ + a] + c[a]);
      }
    }
    return r;
  }
  Elt pow(Elt x, std::uint64_t e) const {
    Elt r = one();
    while (e) {
      if (e & 1) r = mul(r, x);
      x = mul(x, x);
      e >>= 1;
    }
    return r;
  }

  /// Valuation in units of pi; E*M for zero.
  long val(const Elt& x) const {
    long best = static_cast<long>(E_) * M_;
    for (int b = 0; b < E_; ++b)
      for (int a = 0; a < m_; ++a) {
        i64 c = x[b * m_ + a];
        if (!c) continue;
        long v = 0;
        while (c % p_ == 0) {
          c /= p_;
          ++v;
        }
        best = std::min(best, v * E_ + b);
      }
    return best;
  }

  /// Inverse of a unit by Newton iteration from the residue inverse.
  Elt inv(const Elt& u) const {
    if (val(u) != 0) throw std::invalid_argument("oracle ring: inverse of a non-unit");
    auto u0 = coef(u, 0);
    std::uint64_t qm = 1;
    for (int i = 0; i < m_; ++i) qm *= static_cast<std::uint64_t>(p_);
    std::vector<i64> y0 = gr_pow(u0, qm - 2);
    Elt y = zero();
    set_coef(y, 0, y0);
    for (int it = 0; it < 64; ++it) {
      Elt e = sub(one(), mul(u, y));
      if (all_zero(e)) return y;
      y = add(y, mul(y, e));
    }
    throw std::logic_error("oracle ring: inverse did not converge");
  }

  /// Frobenius^k acting on the Galois ring coefficients.
  Elt frobenius(const Elt& x, int k) const {
    Elt r = x;
    for (int t = 0; t < ((k % m_) + m_) % m_; ++t) r = frob_once(r);
    return r;
  }
  /// pi -> z * pi with z in the Galois ring.
  Elt twist_pi(const Elt& x, const std::vector<i64>& z) const {
    Elt r = x;
    std::vector<i64> zb(m_, 0);
    zb[0] = 1;
    for (int b = 0; b < E_; ++b) {
      set_coef(r, b, gr_mul(coef(x, b), zb));
      zb = gr_mul(zb, z);
    }
    return r;
  }
  /// Teichmuller lift of a residue vector.
  std::vector<i64> teichmuller(const std::vector<i64>& residue) const {
    std::vector<i64> t(m_);
    for (int a = 0; a < m_; ++a) t[a] = md(residue[a]);
    std::uint64_t qm = 1;
    for (int i = 0; i < m_; ++i) qm *= static_cast<std::uint64_t>(p_);
    for (int i = 0; i < M_ + 1; ++i) t = gr_pow(t, qm);
    return t;
  }
  std::vector<i64> gr_pow(std::vector<i64> x, std::uint64_t e) const {
    std::vector<i64> r(m_, 0);
    r[0] = 1;
    while (e) {
      if (e & 1) r = gr_mul(r, x);
      x = gr_mul(x, x);
      e >>= 1;
    }
    return r;
  }

  /// Coordinates reduced to the class modulo pi^N.
  Elt truncate(const Elt& x, long N) const {
    Elt r = zero();
    for (int b = 0; b < E_; ++b) {
      long k = (N - b + E_ - 1) / E_;  // digits of p kept at pi^b
      if (k <= 0) continue;
      i64 mod = 1;
      for (long i = 0; i < k && i < M_; ++i) mod *= p_;
      for (int a = 0; a < m_; ++a) r[b * m_ + a] = x[b * m_ + a] % mod;
    }
    return r;
  }

  static bool all_zero(const std::vector<i64>& v) {
    for (auto c : v)
      if (c) return false;
    return true;
  }

 private:
  long p_;
  int m_, E_, M_;
  i64 pM_ = 1;
  std::vector<i64> g_;
  std::vector<i64> frob_x_;

  std::vector<i64> gr_eval(const std::vector<i64>& poly, const std::vector<i64>& y) const {
    std::vector<i64> acc(m_, 0);
    for (int i = static_cast<int>(poly.size()) - 1; i >= 0; --i) {
      acc = gr_mul(acc, y);
      acc[0] = md(acc[0] + poly[i]);
    }
    return acc;
  }
  /// Root of the modulus congruent to X^p, by Newton iteration.
  std::vector<i64> lift_frobenius() const {
    std::vector<i64> X(m_, 0);
    if (m_ == 1) return {0};
    X[1] = 1;
    std::vector<i64> y = gr_pow(X, static_cast<std::uint64_t>(p_));
    std::vector<i64> dg(m_, 0);
    for (int i = 1; i <= m_; ++i) dg[i - 1] = md(g_[i] * i);
    std::uint64_t qm = 1;
    for (int i = 0; i < m_; ++i) qm *= static_cast<std::uint64_t>(p_);
    for (int it = 0; it < 64; ++it) {
      auto gy = gr_eval(g_, y);
      if (all_zero(gy)) return y;
      auto d = gr_eval(dg, y);
      auto dinv = gr_pow(d, qm - 2);
      for (int k = 0; k < 64; ++k) {  // refine the inverse of g'(y)
        auto e = gr_mul(d, dinv);
        e[0] = md(e[0] - 1);
        if (all_zero(e)) break;
        auto corr = gr_mul(dinv, e);
        for (int a = 0; a < m_; ++a) dinv[a] = md(dinv[a] - corr[a]);
      }
      auto step = gr_mul(gy, dinv);
      for (int a = 0; a < m_; ++a) y[a] = md(y[a] - step[a]);
    }
    throw std::logic_error("oracle ring: Frobenius lift did not converge");
  }
  Elt frob_once(const Elt& x) const {
    if (m_ == 1) return x;
    Elt r = zero();
    for (int b = 0; b < E_; ++b) {
      auto c = coef(x, b);
      std::vector<i64> acc(m_, 0), pw(m_, 0);
      pw[0] = 1;
      for (int a = 0; a < m_; ++a) {
        if (c[a]) {
          for (int t = 0; t < m_; ++t) acc[t] = md(acc[t] + c[a] * pw[t]);
        }
        if (a + 1 < m_) pw = gr_mul(pw, frob_x_);
      }
      set_coef(r, b, acc);
    }
    return r;
  }
};

struct KeyHash {
  std::size_t operator()(const std::vector<i64>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
    return h;
  }
};

/// The torus T of a descriptor realized inside O'' / p^M (q = p only).
class TorusModel {
 public:
  TorusModel(const TorusDescriptor& T, long level) : T_(T) {
    if (T.r != 1) throw std::invalid_argument("oracle: only q = p is modelled");
    if (T.twisted()) throw std::invalid_argument("oracle: twisted tori are not modelled");
    long p = T.p;
    n_ = T.order();
    if (T.kase == Case::A) {
      auto g = detail::smallest_irreducible(p, static_cast<int>(n_));
      std::vector<i64> gm(g.begin(), g.end());
      int M = static_cast<int>((level + 1) / 2) + 1;
      ring_ = std::make_unique<Ring>(p, static_cast<int>(n_), 2, M, gm);
    } else {
      if ((static_cast<i64>(p) * p - 1) % n_ != 0) throw std::invalid_argument("oracle: 2e must divide q^2 - 1");
      long d = 2;
      for (;; ++d) {
        long t = 1;
        for (long i = 0; i < (p - 1) / 2; ++i) t = t * d % p;
        if (t == p - 1) break;
      }
      d_ = d;
      int M = static_cast<int>((level + n_ - 1) / n_) + 1;
      ring_ = std::make_unique<Ring>(p, 2, static_cast<int>(n_), M, std::vector<i64>{-d, 0, 1});
      // primitive 2e-th root of unity in F_{p^2} = F_p[nu]
      std::vector<i64> z;
      for (long a = 0; a < p && z.empty(); ++a)
        for (long b = 0; b < p && z.empty(); ++b) {
          std::vector<i64> c{a, b};
          if (!a && !b) continue;
          bool prim = true;
          auto pw = c;
          for (long k = 1; k <= n_; ++k) {
            bool is_one = (pw[0] % p == 1 && pw[1] % p == 0);
            if (k < n_ && is_one) prim = false;
            if (k == n_ && !is_one) prim = false;
            std::vector<i64> nx{(pw[0] * a + d * pw[1] % p * b) % p, (pw[0] * b + pw[1] * a) % p};
            pw = nx;
          }
          if (prim) z = c;
        }
      zeta_ = ring_->teichmuller(z);
    }
  }

  const Ring& ring() const { return *ring_; }
  const TorusDescriptor& descriptor() const { return T_; }
  long n() const { return n_; }

  Ring::Elt bar(const Ring::Elt& x) const {
    if (T_.kase == Case::A) {
      Ring::Elt r = x;
      for (int a = 0; a < ring_->m(); ++a) r[ring_->m() + a] = ring_->md(-x[ring_->m() + a]);
      return r;
    }
    return ring_->frobenius(x, 1);
  }
  /// The generator of the cyclic group acting on the characters.
  Ring::Elt sigma(const Ring::Elt& x, long l) const {
    l = ((l % n_) + n_) % n_;
    if (T_.kase == Case::A) return ring_->frobenius(x, static_cast<int>(l));
    Ring::Elt r = x;
    for (long i = 0; i < l; ++i) r = ring_->twist_pi(r, zeta_);
    return r;
  }
  /// v''(x - 1).
  long level_of(const Ring::Elt& x) const { return ring_->val(ring_->sub(x, ring_->one())); }
  bool in_torus(const Ring::Elt& x) const { return ring_->sub(ring_->mul(x, bar(x)), ring_->one()) == ring_->zero(); }

  /// |T / T_N|.
  std::uint64_t quotient_order(long N) const {
    std::uint64_t q = static_cast<std::uint64_t>(T_.p);
    if (T_.kase == Case::A) return 2 * tori::upow(tori::upow(q, static_cast<unsigned>(n_)), static_cast<unsigned>(N / 2));
    if (N == 0) return 1;
    return (q + 1) * tori::upow(q, static_cast<unsigned>(N - 1));
  }

  /// One representative of every class of T / T_N.
  std::vector<Ring::Elt> representatives(long N) const {
    const Ring& R = *ring_;
    std::vector<Ring::Elt> out;
    std::uint64_t expected = quotient_order(N);
    if (expected > 2000000) throw BudgetError("oracle: quotient too large");
    if (N == 0) return {R.one()};
    if (T_.kase == Case::A) {
      long h = N / 2;
      i64 mod = 1;
      for (long i = 0; i < h; ++i) mod *= T_.p;
      std::uint64_t count = tori::upow(static_cast<std::uint64_t>(mod), static_cast<unsigned>(n_));
      int m = R.m();
      for (std::uint64_t idx = 0; idx < count; ++idx) {
        std::vector<i64> eta(m);
        std::uint64_t t = idx;
        for (int a = 0; a < m; ++a) {
          eta[a] = static_cast<i64>(t % static_cast<std::uint64_t>(mod));
          t /= static_cast<std::uint64_t>(mod);
        }
        auto e2 = R.gr_mul(eta, eta);
        std::vector<i64> s(m);
        for (int a = 0; a < m; ++a) s[a] = R.md(e2[a] * T_.p);
        s[0] = R.md(s[0] + 1);
        auto xi = gr_sqrt_one_unit(s);
        for (int sign : {1, -1}) {
          Ring::Elt x = R.zero();
          for (int a = 0; a < m; ++a) {
            x[a] = R.md(sign * xi[a]);
            x[m + a] = eta[a];
          }
          out.push_back(x);
        }
      }
    } else {
      // z / bar(z) for z = a + nu (a in O'/P'^N) and z = 1 + c nu (c in P'/P'^N)
      std::vector<Ring::Elt> lat = kprime_classes(N);
      Ring::Elt nu = R.zero();
      nu[1] = 1;
      for (const auto& a : lat) {
        Ring::Elt z = R.add(a, nu);
        out.push_back(R.mul(z, R.inv(bar(z))));
      }
      for (const auto& c : lat) {
        if (R.val(c) < 1) continue;
        Ring::Elt z = R.add(R.one(), R.mul(c, nu));
        out.push_back(R.mul(z, R.inv(bar(z))));
      }
    }
    if (out.size() != expected) throw std::logic_error("oracle: representative count mismatch");
    return out;
  }

  Ring::Elt key(const Ring::Elt& x, long N) const { return ring_->truncate(x, N); }

  /// chi(x) for chi = sum_l a_l sigma^l.
  Ring::Elt character(const std::vector<mpz_class>& a, const Ring::Elt& x) const {
    const Ring& R = *ring_;
    Ring::Elt r = R.one();
    Ring::Elt xb = bar(x);
    for (long l = 0; l < n_; ++l) {
      long e = a[l].get_si();
      if (!e) continue;
      Ring::Elt base = sigma(e > 0 ? x : xb, l);
      r = R.mul(r, R.pow(base, static_cast<std::uint64_t>(e > 0 ? e : -e)));
    }
    return r;
  }

  /// k'-trace of the pi-free part (case A), as an integer mod p^M.
  i64 trace_gr(const std::vector<i64>& y) const {
    const Ring& R = *ring_;
    Ring::Elt x = R.zero();
    R.set_coef(x, 0, y);
    Ring::Elt acc = R.zero();
    for (long l = 0; l < n_; ++l) acc = R.add(acc, R.frobenius(x, static_cast<int>(l)));
    for (int a = 1; a < R.m(); ++a)
      if (acc[a]) throw std::logic_error("oracle: trace not in the base");
    return acc[0];
  }

 private:
  TorusDescriptor T_;
  long n_ = 2;
  long d_ = 0;
  std::unique_ptr<Ring> ring_;
  std::vector<i64> zeta_;

  std::vector<i64> gr_sqrt_one_unit(const std::vector<i64>& s) const {
    const Ring& R = *ring_;
    int m = R.m();
    std::vector<i64> y(m, 0);
    y[0] = 1;
    i64 inv2 = (R.pM() + 1) / 2;
    for (int it = 0; it < 64; ++it) {
      auto y2 = R.gr_mul(y, y);
      std::vector<i64> e(m);
      for (int a = 0; a < m; ++a) e[a] = R.md(y2[a] - s[a]);
      if (Ring::all_zero(e)) return y;
      // y <- y - (y^2 - s) / (2y)
      Ring::Elt ye = R.zero();
      R.set_coef(ye, 0, y);
      auto yi = R.coef(R.inv(ye), 0);
      auto step = R.gr_mul(e, yi);
      for (int a = 0; a < m; ++a) y[a] = R.md(y[a] - step[a] * inv2);
    }
    throw std::logic_error("oracle: square root did not converge");
  }

  /// Classes of O' / P'^N (case B: elements of Z_p[pi'] with nu-free coefficients).
  std::vector<Ring::Elt> kprime_classes(long N) const {
    const Ring& R = *ring_;
    std::vector<Ring::Elt> out{R.zero()};
    for (long pos = 0; pos < N; ++pos) {
      // pos = E*k + b contributes digit k at pi^b
      int b = static_cast<int>(pos % R.E());
      long k = pos / R.E();
      i64 w = 1;
      for (long i = 0; i < k; ++i) w *= R.p();
      std::vector<Ring::Elt> nxt;
      for (const auto& x : out)
        for (long c = 0; c < R.p(); ++c) {
          Ring::Elt y = x;
          y[b * R.m()] = R.md(y[b * R.m()] + c * w);
          nxt.push_back(y);
        }
      out.swap(nxt);
    }
    return out;
  }
};

/// Finite abelian group G = T / T_N with a triangular generating system.
class QuotientGroup {
 public:
  QuotientGroup(std::shared_ptr<const TorusModel> model, long N) : model_(std::move(model)), N_(N) {
    const TorusModel& mdl = *model_;
    elems_ = mdl.representatives(N);
    for (size_t i = 0; i < elems_.size(); ++i) {
      auto k = mdl.key(elems_[i], N);
      if (!index_.emplace(k, static_cast<int>(i)).second) throw std::logic_error("oracle: duplicate class");
    }
    identity_ = find(mdl.ring().one());
    levels_.resize(elems_.size());
    for (size_t i = 0; i < elems_.size(); ++i) levels_[i] = std::min(mdl.level_of(elems_[i]), N);
    build_basis();
  }

  const TorusModel& model() const { return *model_; }
  long N() const { return N_; }
  std::uint64_t order() const { return elems_.size(); }
  const Ring::Elt& element(int i) const { return elems_[i]; }
  int identity() const { return identity_; }
  long level(int i) const { return levels_[i]; }
  int find(const Ring::Elt& x) const {
    auto it = index_.find(model_->key(x, N_));
    if (it == index_.end()) throw std::logic_error("oracle: element outside T");
    return it->second;
  }
  int mul(int i, int j) const { return find(model_->ring().mul(elems_[i], elems_[j])); }

  const std::vector<int>& generators() const { return gens_; }
  const std::vector<int>& relative_orders() const { return rel_; }
  const std::vector<int>& coords(int i) const { return coords_[i]; }
  /// g_i^{r_i} expressed in the earlier generators.
  const std::vector<int>& relation(size_t i) const { return relations_[i]; }

  /// Elementary divisors from the Smith form of the relation matrix.
  std::vector<mpz_class> elementary_divisors() const {
    size_t k = gens_.size();
    IntMat R(k, IntVec(k, 0));
    for (size_t i = 0; i < k; ++i) {
      for (size_t t = 0; t < k; ++t) R[i][t] = -relations_[i][t];
      R[i][i] += rel_[i];
    }
    std::vector<mpz_class> out;
    for (const auto& d : tori::detail::smith_invariants(R))
      if (d != 1) out.push_back(d);
    return out;
  }

  /// Greedy generating set of the subgroup given by a membership mask.
  std::vector<int> subgroup_generators(const std::vector<char>& member) const {
    std::vector<char> closure(elems_.size(), 0);
    std::vector<int> span{identity_};
    closure[identity_] = 1;
    std::vector<int> out;
    for (size_t i = 0; i < elems_.size(); ++i) {
      if (!member[i] || closure[i]) continue;
      out.push_back(static_cast<int>(i));
      std::vector<int> added;
      int g = static_cast<int>(i);
      int gk = g;
      while (!closure[gk]) {
        for (int h : span) {
          int x = mul(gk, h);
          if (!closure[x]) {
            closure[x] = 1;
            added.push_back(x);
          }
        }
        gk = mul(gk, g);
      }
      span.insert(span.end(), added.begin(), added.end());
    }
    return out;
  }

 private:
  std::shared_ptr<const TorusModel> model_;
  long N_;
  std::vector<Ring::Elt> elems_;
  std::unordered_map<Ring::Elt, int, KeyHash> index_;
  int identity_ = 0;
  std::vector<long> levels_;
  std::vector<int> gens_, rel_;
  std::vector<std::vector<int>> coords_, relations_;

  void build_basis() {
    coords_.assign(elems_.size(), {});
    std::vector<char> in(elems_.size(), 0);
    std::vector<int> members{identity_};
    in[identity_] = 1;
    for (size_t cand = 0; cand < elems_.size(); ++cand) {
      if (in[cand]) continue;
      int g = static_cast<int>(cand);
      size_t k = gens_.size();
      for (int mbr : members) coords_[mbr].push_back(0);
      // relative order
      int r = 1;
      int gk = g;
      std::vector<int> powers{identity_};
      while (!in[gk]) {
        powers.push_back(gk);
        gk = mul(gk, g);
        ++r;
      }
      relations_.push_back(coords_[gk]);
      relations_.back().resize(k, 0);
      std::vector<int> added;
      for (int t = 1; t < r; ++t)
        for (int h : members) {
          int x = mul(powers[t], h);
          in[x] = 1;
          coords_[x] = coords_[h];
          coords_[x][k] = t;
          added.push_back(x);
        }
      members.insert(members.end(), added.begin(), added.end());
      gens_.push_back(g);
      rel_.push_back(r);
    }
    for (auto& c : coords_) c.resize(gens_.size(), 0);
    for (auto& rr : relations_) rr.resize(gens_.size(), 0);
  }
};

/// A character of G given by its values (in Z/|G|) on the generators.
using CharValues = std::vector<i64>;

/// All |G| characters.
inline std::vector<CharValues> all_characters(const QuotientGroup& G) {
  i64 n = static_cast<i64>(G.order());
  size_t k = G.generators().size();
  std::vector<CharValues> out;
  CharValues cur(k, 0);
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == k) {
      out.push_back(cur);
      return;
    }
    i64 r = G.relative_orders()[i];
    const auto& rel = G.relation(i);
    i64 rhs = 0;
    for (size_t t = 0; t < i; ++t) rhs = (rhs + static_cast<i64>(rel[t]) * cur[t]) % n;
    // r x = rhs (mod n); r divides n
    if (rhs % r != 0) throw std::logic_error("oracle: inconsistent relation");
    i64 x0 = rhs / r, step = n / r;
    for (i64 s = 0; s < r; ++s) {
      cur[i] = (x0 + s * step) % n;
      rec(i + 1);
    }
  };
  rec(0);
  if (static_cast<std::uint64_t>(out.size()) != G.order()) throw std::logic_error("oracle: dual has wrong size");
  return out;
}

/// chi(g) as an element of Z/|G| (the value in Q/Z times |G|).
inline i64 evaluate(const QuotientGroup& G, const CharValues& chi, int elem) {
  i64 n = static_cast<i64>(G.order());
  const auto& c = G.coords(elem);
  i64 v = 0;
  for (size_t i = 0; i < c.size(); ++i) v = (v + static_cast<i64>(c[i]) % n * chi[i]) % n;
  return v;
}

/// Generators of T_j / T_N (optionally intersected with a subgroup mask), j = 0..N.
inline std::vector<std::vector<int>> filtration_generators(const QuotientGroup& G,
                                                           const std::vector<char>* within = nullptr) {
  std::vector<std::vector<int>> out;
  for (long j = 0; j <= G.N(); ++j) {
    std::vector<char> mask(G.order(), 0);
    for (std::uint64_t i = 0; i < G.order(); ++i)
      mask[i] = G.level(static_cast<int>(i)) >= j && (!within || (*within)[i]);
    out.push_back(G.subgroup_generators(mask));
  }
  return out;
}

/// Smallest j with chi trivial on the j-th generator set.
inline long conductor(const QuotientGroup& G, const CharValues& chi, const std::vector<std::vector<int>>& fil) {
  for (size_t j = 0; j < fil.size(); ++j) {
    bool trivial = true;
    for (int h : fil[j])
      if (evaluate(G, chi, h) != 0) {
        trivial = false;
        break;
      }
    if (trivial) return static_cast<long>(j);
  }
  return static_cast<long>(fil.size());
}

/// Character of T / T_N with its conductor and Weil-spectrum membership; in case A the
/// residue index of the parameter is recorded for every character of even conductor.
struct UnitaryCharacter {
  CharValues values;
  long conductor = 0;
  bool in_spectrum = false;
  std::optional<std::uint64_t> alpha;
  bool square = true;
};

/// Builds T / T_N for the descriptor.
inline QuotientGroup quotient_group(const TorusDescriptor& T, long N, long margin = 2) {
  return QuotientGroup(std::make_shared<const TorusModel>(T, N + margin), N);
}

/// Values of chi_b(x) = psi(c p^{-j} tr(b eta)) on a list of elements, as elements of Z/|G|.
inline std::vector<i64> additive_character_values(const QuotientGroup& G, const std::vector<i64>& b, long j,
                                                  const std::vector<int>& elems) {
  const TorusModel& model = G.model();
  const Ring& R = model.ring();
  long p = R.p();
  int m = R.m();
  i64 n = static_cast<i64>(G.order());
  i64 pj = 1;
  for (long i = 0; i < j; ++i) pj *= p;
  if (n % pj != 0) throw std::invalid_argument("oracle: level too small for this conductor");
  i64 inv2 = (pj + 1) / 2;
  i64 sign = ((model.descriptor().mu() - j) % 2 == 0) ? 1 : -1;
  i64 cst = ((-sign * inv2) % pj + pj) % pj;
  std::vector<i64> out;
  for (int h : elems) {
    const auto& x = G.element(h);
    std::vector<i64> eta(x.begin() + m, x.begin() + 2 * m);
    i64 tr = model.trace_gr(R.gr_mul(b, eta)) % pj;
    out.push_back((tr * cst % pj) * (n / pj) % n);
  }
  return out;
}

/// All characters of T / T_N, marked by the Weil-spectrum selection: conductor parity in
/// case B; trivial or conductor 2j with restriction to T_j of the form chi_b, b a unit
/// square modulo p^j, in case A.
inline std::vector<UnitaryCharacter> weil_characters_mod(const QuotientGroup& G) {
  const TorusDescriptor& T = G.model().descriptor();
  auto chars = all_characters(G);
  auto fil = filtration_generators(G);
  std::vector<UnitaryCharacter> out(chars.size());
  long mu = T.mu();
  for (size_t c = 0; c < chars.size(); ++c) {
    out[c].values = chars[c];
    out[c].conductor = conductor(G, chars[c], fil);
  }
  if (T.kase == Case::B) {
    for (auto& e : out) e.in_spectrum = e.conductor <= G.N() && ((e.conductor - mu) % 2 + 2) % 2 == 0;
    return out;
  }
  if (T.lambda_psi != 0) throw std::invalid_argument("oracle: case A spectrum modelled for lambda_psi = 0");
  long p = T.p;
  int m = G.model().ring().m();
  ResidueField res(p, m);
  std::map<long, std::unordered_map<std::vector<i64>, std::uint64_t, KeyHash>> table;
  for (long j = 1; 2 * j <= G.N(); ++j) {
    i64 pj = 1;
    for (long i = 0; i < j; ++i) pj *= p;
    auto& tab = table[j];
    std::uint64_t count = tori::upow(static_cast<std::uint64_t>(pj), static_cast<unsigned>(m));
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      std::vector<i64> b(m);
      std::uint64_t t = idx;
      ResidueField::Elt br(m);
      for (int a = 0; a < m; ++a) {
        b[a] = static_cast<i64>(t % static_cast<std::uint64_t>(pj));
        t /= static_cast<std::uint64_t>(pj);
        br[a] = static_cast<long>(b[a] % p);
      }
      if (res.is_zero(br)) continue;
      tab.emplace(additive_character_values(G, b, j, fil[j]), res.index(br));
    }
  }
  for (auto& e : out) {
    if (e.conductor == 0) {
      e.in_spectrum = true;
      continue;
    }
    if (e.conductor % 2 != 0 || e.conductor > G.N()) continue;
    long j = e.conductor / 2;
    std::vector<i64> key;
    for (int h : fil[j]) key.push_back(evaluate(G, e.values, h));
    auto it = table[j].find(key);
    if (it != table[j].end()) {
      e.alpha = it->second;
      e.square = res.is_square(res.element(it->second));
      e.in_spectrum = e.square;
    }
  }
  return out;
}

/// Image of S in T / T_N: classes of T / T_{N+margin} on which every row of M-bar is 1 to that level.
inline std::vector<char> subtorus_image(const QuotientGroup& G, const SubtorusSpec& S, long margin = 2) {
  const TorusModel& model = G.model();
  long Np = G.N() + margin;
  std::vector<char> mask(G.order(), 0);
  const auto& rows = S.mbar.hnf();
  for (const auto& x : model.representatives(Np)) {
    bool ok = true;
    for (const auto& row : rows)
      if (model.level_of(model.character(row, x)) < Np) {
        ok = false;
        break;
      }
    if (ok) mask[G.find(x)] = 1;
  }
  return mask;
}

/// One character of S with the data gathered from T / T_N.
struct RestrictionEntry {
  long conductor = 0;                  // conductor of the S-character
  std::uint64_t count = 0;             // spectrum characters of the same conductor restricting to it
  std::uint64_t count_any = 0;         // spectrum characters restricting to it, any conductor
  std::optional<std::uint64_t> alpha;  // case A: square parameter of a contributing character
  // case A: parameter class of some character of T restricting to this one, spectrum or not
  std::optional<std::uint64_t> any_parameter;
  bool any_square = true;
};

struct RestrictionTable {
  long N = 0;
  std::uint64_t image_order = 0;
  std::vector<std::uint64_t> filtration_sizes;  // |S_j T_N / T_N|, j = 0..N
  std::vector<RestrictionEntry> entries;        // S-characters of conductor <= bound
  bool conductor_preserved() const {
    for (const auto& e : entries)
      if (e.count != e.count_any) return false;
    return true;
  }
};

/// For every character of S of conductor <= bound, counts the Weil-spectrum characters of
/// T / T_N restricting to it.
inline RestrictionTable restrict_counts(const SubtorusSpec& S, long N, long bound) {
  if (bound > N) throw std::invalid_argument("restrict_counts: bound exceeds level");
  QuotientGroup G = quotient_group(S.parent, N);
  auto chars = weil_characters_mod(G);
  auto H = subtorus_image(G, S);
  auto Hgens = G.subgroup_generators(H);
  auto Hfil = filtration_generators(G, &H);
  RestrictionTable out;
  out.N = N;
  for (auto c : H) out.image_order += c ? 1 : 0;
  for (long j = 0; j <= N; ++j) {
    std::uint64_t s = 0;
    for (std::uint64_t i = 0; i < G.order(); ++i)
      if (H[i] && G.level(static_cast<int>(i)) >= j) ++s;
    out.filtration_sizes.push_back(s);
  }
  std::map<std::vector<i64>, size_t> slot;
  for (const auto& chi : chars) {
    std::vector<i64> key;
    for (int h : Hgens) key.push_back(evaluate(G, chi.values, h));
    auto it = slot.find(key);
    if (it == slot.end()) {
      long cs = conductor(G, chi.values, Hfil);
      if (cs > bound) {
        slot.emplace(key, SIZE_MAX);
        continue;
      }
      RestrictionEntry e;
      e.conductor = cs;
      it = slot.emplace(key, out.entries.size()).first;
      out.entries.push_back(e);
    }
    if (it->second == SIZE_MAX) continue;
    RestrictionEntry& e = out.entries[it->second];
    if (!e.any_parameter && chi.alpha && chi.conductor == e.conductor) {
      e.any_parameter = chi.alpha;
      e.any_square = chi.square;
    }
    if (!chi.in_spectrum) continue;
    if (e.count_any == 0) e.alpha = chi.alpha;
    ++e.count_any;
    if (chi.conductor == e.conductor) ++e.count;
  }
  return out;
}

/// Count for a single S-character, given by its conductor and (case A) a parameter residue
/// of a contributing character; the first matching entry is returned.
inline std::optional<std::uint64_t> restrict_count(const RestrictionTable& t, long conductor,
                                                   std::optional<std::uint64_t> alpha = std::nullopt) {
  for (const auto& e : t.entries)
    if (e.conductor == conductor && (!alpha || e.alpha == alpha)) return e.count;
  return std::nullopt;
}

/// Predicted |S_j / S_{j+1}|.
inline std::uint64_t predicted_filtration_step(const SubtorusSpec& S, long j) {
  const TorusDescriptor& T = S.parent;
  if (T.kase == Case::B) {
    if (j == 0) return (T.q + 1) / S.mu_index;
    long r = j % T.order();
    for (int i : S.Iprime)
      if (i == r) return 1;
    return T.q;
  }
  if (j == 0) return 2 / S.epsilon;
  if (j % 2 == 0) return 1;
  return tori::upow(T.q, static_cast<unsigned>(S.dim));
}

/// Checks the empirical filtration of S against the prediction up to level N - 1.
inline bool filtration_matches(const SubtorusSpec& S, const RestrictionTable& tab) {
  for (long j = 0; j + 1 <= tab.N; ++j) {
    std::uint64_t a = tab.filtration_sizes[j], b = tab.filtration_sizes[j + 1];
    if (b == 0 || a % b != 0 || a / b != predicted_filtration_step(S, j)) return false;
  }
  return true;
}

/// Multiset of (conductor, count) pairs, used to compare tables computed at two levels.
inline std::multiset<std::pair<long, std::uint64_t>> profile(const RestrictionTable& t) {
  std::multiset<std::pair<long, std::uint64_t>> out;
  for (const auto& e : t.entries) out.emplace(e.conductor, e.count);
  return out;
}

// ---------------------------------------------------------------------------
// Invariant submodules of Z[Z/f] through kernels of cyclotomic factors.

namespace detail_mod {

inline IntPoly poly_mul(const IntPoly& a, const IntPoly& b) {
  IntPoly r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

/// Exact division of a by monic-or-unit-leading b.
inline IntPoly poly_div(IntPoly a, const IntPoly& b) {
  IntPoly q(a.size() - b.size() + 1, 0);
  for (long i = static_cast<long>(a.size()) - 1; i >= static_cast<long>(b.size()) - 1; --i) {
    mpz_class c = a[i] / b.back();
    q[i - b.size() + 1] = c;
    for (size_t j = 0; j < b.size(); ++j) a[i - b.size() + 1 + j] -= c * b[j];
  }
  for (auto& x : a)
    if (x != 0) throw std::logic_error("oracle: inexact polynomial division");
  return q;
}

inline int mobius(long n) {
  int r = 1;
  for (long p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      n /= p;
      if (n % p == 0) return 0;
      r = -r;
    }
  if (n > 1) r = -r;
  return r;
}

/// Phi_d = prod_{m | d} (x^m - 1)^{mu(d/m)}.
inline IntPoly cyclotomic_mobius(long d) {
  IntPoly num{1}, den{1};
  for (long m = 1; m <= d; ++m) {
    if (d % m) continue;
    IntPoly f(m + 1, 0);
    f[0] = -1;
    f[m] = 1;
    int mu = mobius(d / m);
    if (mu == 1) num = poly_mul(num, f);
    if (mu == -1) den = poly_mul(den, f);
  }
  return poly_div(num, den);
}

/// Row HNF with positive pivots and reduced entries above them.
inline IntMat row_hnf(IntMat A, size_t n) {
  size_t row = 0;
  for (size_t col = 0; col < n && row < A.size(); ++col) {
    while (true) {
      size_t piv = A.size();
      for (size_t r = row; r < A.size(); ++r)
        if (A[r][col] != 0 && (piv == A.size() || abs(A[r][col]) < abs(A[piv][col]))) piv = r;
      if (piv == A.size()) break;
      std::swap(A[row], A[piv]);
      bool done = true;
      for (size_t r = row + 1; r < A.size(); ++r) {
        if (A[r][col] == 0) continue;
        mpz_class qq;
        mpz_fdiv_q(qq.get_mpz_t(), A[r][col].get_mpz_t(), A[row][col].get_mpz_t());
        for (size_t j = 0; j < n; ++j) A[r][j] -= qq * A[row][j];
        if (A[r][col] != 0) done = false;
      }
      if (done) break;
    }
    if (row >= A.size() || A[row][col] == 0) continue;
    if (A[row][col] < 0)
      for (size_t j = 0; j < n; ++j) A[row][j] = -A[row][j];
    for (size_t r = 0; r < row; ++r) {
      mpz_class qq;
      mpz_fdiv_q(qq.get_mpz_t(), A[r][col].get_mpz_t(), A[row][col].get_mpz_t());
      for (size_t j = 0; j < n; ++j) A[r][j] -= qq * A[row][j];
    }
    ++row;
  }
  IntMat out;
  for (auto& r : A)
    if (std::any_of(r.begin(), r.end(), [](const mpz_class& x) { return x != 0; })) out.push_back(r);
  return out;
}

/// Integer kernel {v : v B = 0} of an n x n matrix, from the unimodular transform.
inline IntMat left_kernel(const IntMat& B, size_t n) {
  IntMat aug(n, IntVec(2 * n, 0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) aug[i][j] = B[i][j];
    aug[i][n + i] = 1;
  }
  IntMat H = row_hnf(aug, 2 * n);
  IntMat ker;
  for (auto& r : H) {
    bool zero_left = true;
    for (size_t j = 0; j < n; ++j)
      if (r[j] != 0) zero_left = false;
    if (zero_left) ker.push_back(IntVec(r.begin() + n, r.end()));
  }
  return row_hnf(ker, n);
}

}  // namespace detail_mod

/// Matrix of Phi(sigma) acting on row vectors of Z^f, sigma the cyclic shift.
inline IntMat poly_action(const IntPoly& P, long f) {
  IntMat B(f, IntVec(f, 0));
  for (long i = 0; i < f; ++i)
    for (size_t k = 0; k < P.size(); ++k) B[i][(i + k) % f] += P[k];
  return B;
}

/// Saturated sigma-stable submodules ker prod_{d in D} Phi_d(sigma), one per nonempty D, and
/// the minimal ones among them, all in row HNF.
struct SubmoduleEnumeration {
  std::vector<std::pair<std::set<long>, IntMat>> all;
  std::vector<IntMat> minimal;
};

inline SubmoduleEnumeration enumerate_submodules(long f) {
  if (f < 1 || f > 16) throw std::invalid_argument("enumerate_submodules: f out of range");
  SubmoduleEnumeration out;
  std::vector<long> divs;
  for (long d = 1; d <= f; ++d)
    if (f % d == 0) divs.push_back(d);
  for (unsigned mask = 1; mask < (1u << divs.size()); ++mask) {
    IntPoly P{1};
    std::set<long> D;
    for (size_t i = 0; i < divs.size(); ++i)
      if (mask & (1u << i)) {
        P = detail_mod::poly_mul(P, detail_mod::cyclotomic_mobius(divs[i]));
        D.insert(divs[i]);
      }
    out.all.emplace_back(D, detail_mod::left_kernel(poly_action(P, f), static_cast<size_t>(f)));
  }
  auto contains = [&](const IntMat& big, const IntMat& small) {
    for (const auto& v : small) {
      IntMat t = big;
      t.push_back(v);
      if (detail_mod::row_hnf(t, static_cast<size_t>(f)) != big) return false;
    }
    return true;
  };
  for (const auto& [D, K] : out.all) {
    bool minimal = true;
    for (const auto& [D2, K2] : out.all)
      if (K2 != K && contains(K, K2)) minimal = false;
    if (minimal) out.minimal.push_back(K);
  }
  return out;
}

/// Canonical row HNF of an arbitrary generating set, for comparisons.
inline IntMat canonical(const IntMat& gens, long f) { return detail_mod::row_hnf(gens, static_cast<size_t>(f)); }

}  // namespace tori::oracle
