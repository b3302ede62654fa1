// Acceptance run: one PASS/FAIL line per criterion, with the time limits pinned below.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "property_suite.hpp"
#include "tori/multiplicity.hpp"
#include "tori/oracle.hpp"

using namespace tori;

namespace {

constexpr double kLimitAppendix = 60.0;
constexpr double kLimitRoutes = 10.0;
constexpr double kLimitQuadratic = 10.0;
constexpr double kLimitOracleB = 300.0;
constexpr double kLimitOracleA = 300.0;
constexpr double kLimitVolume = 1.0;  // volumes are computed inside criteria 4 and 5
constexpr double kLimitProperties = 30.0;
constexpr double kLimitWitnesses = 60.0;
constexpr double kLimitEmbeddable = 1.0;

constexpr long kPropertyInstances = 1000;
constexpr long kWitnessDigits = 20;
constexpr long kWitnessPrecision = 40;
constexpr std::uint64_t kSearchBudget = 20000;

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Certificate {
  SubtorusSpec S;
  Decision D;
};

// not-admissible certificates and admissible subtori gathered for the witness criterion
std::vector<Certificate> g_not_admissible;
std::vector<SubtorusSpec> g_admissible;

// m/vol comparisons gathered from the oracle runs
long g_vol_compared = 0, g_vol_failed = 0;

std::string set_str(const std::set<long>& s) {
  std::ostringstream o;
  o << "{";
  bool first = true;
  for (long d : s) {
    o << (first ? "" : ",") << d;
    first = false;
  }
  o << "}";
  return o.str();
}

Outcome appendix_a() {
  Outcome out;
  long rows = 0;
  for (long f = 1; f <= 8; ++f) {
    auto closed = classify_minimal(f, true, 8);
    auto enumerated = oracle::enumerate_submodules(f);
    std::set<IntMat> a, b;
    for (const auto& m : closed) a.insert(m.hnf());
    for (const auto& m : enumerated.minimal) b.insert(oracle::canonical(m, f));
    bool ranks_ok = true;
    auto divs = divisors(f);
    for (size_t i = 0; i < closed.size(); ++i) ranks_ok = ranks_ok && closed[i].rank() == euler_phi(divs[i]);
    bool row_ok = a == b && closed.size() == divs.size() && enumerated.minimal.size() == divs.size() && ranks_ok;
    if (!row_ok) {
      out.ok = false;
      out.detail += " mismatch at f=" + std::to_string(f);
    }
    ++rows;
  }
  out.detail = std::to_string(rows) + " values of f compared" + out.detail;
  return out;
}

Outcome route_agreement() {
  Outcome out;
  struct Field {
    long q;
    std::vector<int> halves;
  };
  std::vector<Field> fields = {{3, {1, 2}}, {5, {1, 2, 3}}, {7, {1, 2, 3}}};
  long compared = 0, disagree = 0;
  for (const auto& F : fields)
    for (int e : F.halves)
      for (int v : {0, 1}) {
        auto T = build_max_torus(Case::B, F.q, F.q, e, v, 0, kWitnessPrecision);
        for (const auto& S : all_subtori(T)) {
          if (S.is_trivial()) continue;
          Verdict a = parity_verdict_B(S);
          Verdict b = support_verdict_B(S);
          Decision D = residue_verdict_B(S);
          ++compared;
          if (a != b || a != D.verdict) {
            ++disagree;
            out.detail += " [q=" + std::to_string(F.q) + " 2e=" + std::to_string(2 * e) + " v=" +
                          std::to_string(v) + " d=" + set_str(S.divs) + "]";
            continue;
          }
          if (D.verdict == Verdict::not_admissible) g_not_admissible.push_back({S, D});
          else if (!S.is_full()) g_admissible.push_back(S);
        }
      }
  out.ok = disagree == 0 && compared > 0;
  out.detail = std::to_string(compared) + " subtori, " + std::to_string(disagree) + " disagreements" + out.detail;
  return out;
}

Outcome quadratic_case_a() {
  Outcome out;
  long checked = 0;
  for (long q : {3L, 5L, 7L, 13L})
    for (int f : {3, 5}) {
      auto T = build_max_torus(Case::A, q, q, f, 1, 0, kWitnessPrecision, std::nullopt, true);
      bool want = q % 4 == 1;
      for (long d : {2L, 2L * f}) {
        auto S = subtorus_from_divisors(T, {d});
        Decision D = is_admissible(S);
        bool got = D.verdict == Verdict::admissible;
        ++checked;
        if (got != want) {
          out.ok = false;
          out.detail += " [q=" + std::to_string(q) + " f=" + std::to_string(f) + " d=" + std::to_string(d) + "]";
        }
        if (got) g_admissible.push_back(S);
        else g_not_admissible.push_back({S, D});
      }
    }
  out.detail = std::to_string(checked) + " decisions" + out.detail;
  return out;
}

// Compares closed-form multiplicities (and volumes) with oracle counts on one subtorus.
bool compare_with_oracle(const SubtorusSpec& S, long N, long bound, long& compared) {
  auto tab = oracle::restrict_counts(S, N, bound);
  bool ok = oracle::filtration_matches(S, tab) && tab.conductor_preserved();
  const TorusDescriptor& T = S.parent;
  for (const auto& e : tab.entries) {
    CharacterSpec ch;
    ch.group = 'S';
    ch.kase = T.kase;
    ch.conductor = e.conductor;
    if (T.kase == Case::A) {
      ch.parameter = e.alpha ? e.alpha : e.any_parameter;
      ch.square = e.alpha ? true : e.any_square;
    }
    QPower m = multiplicity(S, ch);
    ++compared;
    if (!m.integral_exponent() || m.half_exp < 0 || m.value(T.q) != e.count) ok = false;
    if (e.count > 0 && e.conductor > 0 && !S.is_full()) {
      ++g_vol_compared;
      if (!m.equals(reduction_volume(S, ch), T.q)) ++g_vol_failed;
    }
  }
  return ok;
}

Outcome oracle_case_b() {
  Outcome out;
  long subtori = 0, compared = 0;
  for (int e : {1, 2})
    for (int v : {0, 1}) {
      auto T = build_max_torus(Case::B, 3, 3, e, v, 0, 20);
      for (const auto& S : all_subtori(T)) {
        if (S.is_full() || S.is_trivial() || is_admissible(S).verdict != Verdict::admissible) continue;
        ++subtori;
        for (long N : {6L, 7L})
          if (!compare_with_oracle(S, N, 5, compared)) {
            out.ok = false;
            out.detail += " [e=" + std::to_string(e) + " v=" + std::to_string(v) + " d=" + set_str(S.divs) +
                          " N=" + std::to_string(N) + "]";
          }
      }
    }
  if (subtori == 0) out.ok = false;
  out.detail = std::to_string(subtori) + " subtori, " + std::to_string(compared) + " characters" + out.detail;
  return out;
}

Outcome oracle_case_a() {
  Outcome out;
  long vacuous = 0, compared = 0;
  for (int f : {1, 3}) {
    auto T = build_max_torus(Case::A, 3, 3, f, 1, 0, 20, std::nullopt, true);
    for (const auto& S : all_subtori(T)) {
      if (S.is_full() || S.is_trivial() || is_admissible(S).verdict != Verdict::admissible) continue;
      ++vacuous;
      // the q = 3, f = 3 quotients exceed the enumeration budget
      if (f != 1 || !compare_with_oracle(S, 5, 4, compared)) {
        out.ok = false;
        out.detail += " [q=3 f=" + std::to_string(f) + " d=" + set_str(S.divs) + "]";
      }
    }
  }
  auto T = build_max_torus(Case::A, 5, 5, 1, 1, 0, 20);
  auto S = subtorus_from_divisors(T, {2});
  bool admissible = is_admissible(S).verdict == Verdict::admissible;
  if (!admissible) out.ok = false;
  for (long N : {5L, 6L})
    if (admissible && !compare_with_oracle(S, N, 4, compared)) {
      out.ok = false;
      out.detail += " [N=" + std::to_string(N) + "]";
    }
  out.detail = "q=3 sweep: " + std::to_string(vacuous) + " admissible proper subtori; q=5 f=1 d={2}: " +
               std::to_string(compared) + " characters" + out.detail;
  return out;
}

Outcome volume_identity() {
  Outcome out;
  out.ok = g_vol_compared > 0 && g_vol_failed == 0;
  out.detail = std::to_string(g_vol_compared) + " nontrivial characters, " + std::to_string(g_vol_failed) +
               " mismatches";
  return out;
}

Outcome properties() {
  Outcome out;
  long total = 0, failed = 0;
  std::uint64_t seed = testing::suite_seed();
  for (const auto& fp : testing::property_fields()) {
    auto r = testing::run_properties(fp, kPropertyInstances, seed);
    for (const auto& [name, n] : r.instances) total += n;
    failed += r.total_failures();
    for (const auto& [name, n] : r.failures)
      if (n) out.detail += " [" + fp.name + " " + name + ": " + std::to_string(n) + "]";
  }
  out.ok = failed == 0;
  out.detail = std::to_string(total) + " instances over " + std::to_string(testing::property_fields().size()) +
               " fields, seed " + std::to_string(seed) + ", " + std::to_string(failed) + " failures" + out.detail;
  return out;
}

Outcome witnesses() {
  Outcome out;
  long verified = 0, searched = 0, exhausted = 0;
  for (const auto& c : g_not_admissible) {
    if (verify_witness(c.S, c.D, kWitnessDigits)) ++verified;
    else {
      out.ok = false;
      out.detail += " [unverified d=" + set_str(c.S.divs) + "]";
    }
  }
  for (const auto& S : g_admissible) {
    auto W = zero_fiber_witness_search(as_product(S), -1, kSearchBudget, kWitnessDigits);
    ++searched;
    if (W.exhausted) ++exhausted;
    if (W.w) {
      out.ok = false;
      out.detail += " [witness found for admissible d=" + set_str(S.divs) + "]";
    }
  }
  if (g_not_admissible.empty()) out.ok = false;
  out.detail = std::to_string(verified) + "/" + std::to_string(g_not_admissible.size()) + " witnesses verified to " +
               std::to_string(kWitnessDigits) + " digits; " + std::to_string(searched) +
               " admissible searches without a hit (" + std::to_string(exhausted) + " exhausted)" + out.detail;
  return out;
}

Outcome embeddable() {
  Outcome out;
  long checked = 0;
  for (long p : {3L, 5L, 7L, 11L}) {
    for (int m : {3, 5, 7}) {
      ++checked;
      if (elliptic_embeddable({p, 1, m, 1, 1, 1}).embeddable) {
        out.ok = false;
        out.detail += " [p=" + std::to_string(p) + " m=" + std::to_string(m) + " embeddable]";
      }
    }
    for (auto [m, e] : std::vector<std::pair<int, int>>{{2, 1}, {1, 2}}) {
      ++checked;
      if (!elliptic_embeddable({p, 1, m, e, 1, 1}).embeddable) {
        out.ok = false;
        out.detail += " [p=" + std::to_string(p) + " quadratic m=" + std::to_string(m) + " not embeddable]";
      }
    }
  }
  out.detail = std::to_string(checked) + " extensions" + out.detail;
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {1, "minimal submodules match enumeration for f = 1..8", kLimitAppendix, appendix_a},
      {2, "parity, support and residue verdicts agree", kLimitRoutes, route_agreement},
      {3, "case A S_2 and S_2f admissible iff q = 1 mod 4", kLimitQuadratic, quadratic_case_a},
      {4, "case B closed form equals oracle counts", kLimitOracleB, oracle_case_b},
      {5, "case A closed form equals oracle counts", kLimitOracleA, oracle_case_a},
      {6, "multiplicity equals reduction volume", kLimitVolume, volume_identity},
      {7, "randomized arithmetic properties", kLimitProperties, properties},
      {8, "witness verification and bounded search", kLimitWitnesses, witnesses},
      {9, "embeddability of unramified and quadratic tori", kLimitEmbeddable, embeddable},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs <= c.limit;
    bool pass = o.ok && in_time;
    if (!pass) ++failed;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs, limit %.0fs", secs, c.limit);
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << timing
              << (in_time ? "" : ", over limit") << "): " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
