#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "tori/json_io.hpp"
#include "tori/oracle.hpp"

namespace tori {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"classify",   "admissible", "multiplicity", "volume",
                                                 "verify",     "appendix-a", "embeddable"};
  return names;
}

/// Command-line overrides applied to the configuration before validation.
struct RunOptions {
  std::optional<long> precision;
  std::optional<long> oracle_level;
  std::optional<std::int64_t> seed;
  bool timing = false;
};

/// Machine-readable error codes and the matching process exit status.
struct ErrorCode {
  const char* code;
  int exit_status;
};

inline constexpr ErrorCode kConfigInvalid{"config_invalid", 2};
inline constexpr ErrorCode kBudgetExceeded{"budget_exceeded", 3};
inline constexpr ErrorCode kPrecisionExhausted{"precision_exhausted", 4};
inline constexpr ErrorCode kUnsupported{"unsupported_request", 5};
inline constexpr ErrorCode kInternal{"internal_error", 1};

inline json error_report(const ErrorCode& e, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", {{"code", e.code}, {"message", message}}}};
}

namespace detail {

inline std::vector<SubtorusSpec> selected_subtori(const JobConfig& c, const TorusDescriptor& T) {
  if (!c.divisor_sets) return all_subtori(T);
  std::vector<SubtorusSpec> out;
  for (const auto& D : *c.divisor_sets) out.push_back(subtorus_from_divisors(T, D));
  return out;
}

inline std::vector<CharacterSpec> selected_characters(const JobConfig& c, const TorusDescriptor& T) {
  long bound = c.conductor_bound;
  if (c.conductors)
    for (long x : *c.conductors) bound = std::max(bound, x);
  auto all = weil_spectrum(T, bound);
  std::vector<CharacterSpec> out;
  for (const auto& ch : all) {
    if (c.conductors && std::find(c.conductors->begin(), c.conductors->end(), ch.conductor) == c.conductors->end())
      continue;
    if (!c.conductors && ch.conductor > c.conductor_bound) continue;
    out.push_back(ch);
  }
  return out;
}

inline constexpr std::size_t kMaxReports = 20000;

inline json subtorus_key(const SubtorusSpec& S) { return json(S.divs); }

inline bool multiplicity_applicable(const SubtorusSpec& S, std::string& why) {
  if (!S.parent.multiplicity_supported) {
    why = "multiplicities need an untwisted tower with gcd(f, p) = 1";
    return false;
  }
  if (S.is_trivial()) {
    why = "trivial subtorus";
    return false;
  }
  if (is_admissible(S).verdict != Verdict::admissible) {
    why = "not admissible";
    return false;
  }
  return true;
}

inline json run_classify(const JobConfig& c) {
  TorusDescriptor T = descriptor_of(c);
  json subs = json::array();
  for (const auto& S : all_subtori(T)) subs.push_back(to_json(S));
  return {{"torus", to_json(T)}, {"divisors_of_order", divisors(T.order())}, {"count", subs.size()},
          {"subtori", subs}};
}

inline json run_admissible(const JobConfig& c) {
  TorusDescriptor T = descriptor_of(c);
  json decisions = json::array();
  for (const auto& S : selected_subtori(c, T)) {
    Decision D = is_admissible(S);
    json entry = {{"subtorus", subtorus_key(S)}, {"decision", to_json(D)}};
    entry["witness_verified"] =
        D.verdict == Verdict::not_admissible ? json(verify_witness(S, D, c.precision / 2)) : json(nullptr);
    decisions.push_back(entry);
  }
  return {{"torus", to_json(T)}, {"no_proper_admissible", no_proper_admissible(T)}, {"decisions", decisions}};
}

inline json run_multiplicity(const JobConfig& c, bool with_m, bool with_vol) {
  TorusDescriptor T = descriptor_of(c);
  auto chars = selected_characters(c, T);
  json groups = json::array();
  std::size_t produced = 0;
  bool all_agree = true;
  for (const auto& S : selected_subtori(c, T)) {
    json g = {{"subtorus", subtorus_key(S)}};
    std::string why;
    if (!multiplicity_applicable(S, why)) {
      g["skipped"] = why;
      groups.push_back(g);
      continue;
    }
    g["skipped"] = nullptr;
    json reports = json::array();
    for (const auto& ch : chars) {
      if (++produced > kMaxReports) throw BudgetError("too many characters requested");
      bool vol_defined = !S.is_full() && ch.conductor > 0 && T.lambda_psi % 2 == 0;
      if (with_m) {
        MultiplicityReport R;
        R.character = ch;
        R.m = multiplicity(S, ch);
        if (vol_defined) {
          R.vol = reduction_volume(S, ch);
          R.agree_m_vol = R.m.equals(*R.vol, T.q);
          all_agree = all_agree && R.agree_m_vol;
        }
        reports.push_back(to_json(R));
      } else if (vol_defined) {
        reports.push_back({{"character", to_json(ch)}, {"vol", to_json(reduction_volume(S, ch))}});
      }
    }
    g[with_m ? "reports" : "volumes"] = reports;
    groups.push_back(g);
  }
  json out = {{"torus", to_json(T)}, {"subtori", groups}};
  if (with_m) out["all_agree"] = all_agree;
  return out;
}

inline long oracle_level(const JobConfig& c) { return c.oracle.level > 0 ? c.oracle.level : c.conductor_bound + 1; }

inline json run_verify(const JobConfig& c) {
  TorusDescriptor T = descriptor_of(c);
  long N = oracle_level(c);
  long bound = c.conductor_bound;
  if (c.conductors)
    for (long x : *c.conductors) bound = std::max(bound, x);
  if (bound > N) throw ConfigError("oracle level must be at least the conductor bound");
  // the stability run at N + 1 enumerates T / T_{N + 3}
  std::uint64_t size = oracle::TorusModel(T, N + 3).quotient_order(N + 3);
  if (size > c.oracle.budget || size > 1000000) throw BudgetError("oracle enumeration exceeds budget");
  json groups = json::array();
  bool all_agree = true;
  std::uint64_t checked = 0;
  for (const auto& S : selected_subtori(c, T)) {
    json g = {{"subtorus", subtorus_key(S)}};
    std::string why;
    if (!multiplicity_applicable(S, why)) {
      g["skipped"] = why;
      groups.push_back(g);
      continue;
    }
    g["skipped"] = nullptr;
    auto tab = oracle::restrict_counts(S, N, bound);
    auto tab2 = oracle::restrict_counts(S, N + 1, bound);
    bool stable = oracle::profile(tab) == oracle::profile(tab2);
    bool filt = oracle::filtration_matches(S, tab);
    bool preserved = tab.conductor_preserved();
    json reports = json::array();
    bool ok = stable && filt && preserved;
    for (const auto& e : tab.entries) {
      if (c.conductors && std::find(c.conductors->begin(), c.conductors->end(), e.conductor) == c.conductors->end())
        continue;
      MultiplicityReport R;
      R.character.kase = T.kase;
      R.character.group = 'S';
      R.character.conductor = e.conductor;
      if (T.kase == Case::A) {
        R.character.parameter = e.alpha ? e.alpha : e.any_parameter;
        R.character.square = e.alpha ? true : e.any_square;
      }
      R.oracle = e.count;
      R.m = multiplicity(S, R.character);
      R.agree_m_oracle = R.m.integral_exponent() && R.m.half_exp >= 0 && R.m.value(T.q) == e.count;
      bool appears = e.count > 0;
      if (appears && !S.is_full() && e.conductor > 0 && T.lambda_psi % 2 == 0) {
        R.vol = reduction_volume(S, R.character);
        R.agree_m_vol = R.m.equals(*R.vol, T.q);
        ok = ok && R.agree_m_vol;
      }
      ok = ok && *R.agree_m_oracle;
      reports.push_back(to_json(R));
    }
    checked += 1;
    all_agree = all_agree && ok;
    g["level"] = N;
    g["image_order"] = tab.image_order;
    g["filtration_sizes"] = tab.filtration_sizes;
    g["stable_under_level_increase"] = stable;
    g["filtration_matches"] = filt;
    g["conductor_preserved"] = preserved;
    g["reports"] = reports;
    g["agree"] = ok;
    groups.push_back(g);
  }
  return {{"torus", to_json(T)},
          {"summary", {{"level", N}, {"subtori_checked", checked}, {"all_agree", all_agree}}},
          {"subtori", groups}};
}

inline json run_appendix_a(const JobConfig& c) {
  json rows = json::array();
  bool all_match = true;
  for (long f = 1; f <= c.appendix_f_max; ++f) {
    auto closed = classify_minimal(f, true, c.appendix_f_max);
    auto enumerated = oracle::enumerate_submodules(f);
    std::set<IntMat> a, b;
    for (const auto& m : closed) a.insert(m.hnf());
    for (const auto& m : enumerated.minimal) b.insert(oracle::canonical(m, f));
    std::vector<long> ranks;
    for (const auto& m : closed) ranks.push_back(m.rank());
    bool match = a == b && closed.size() == divisors(f).size();
    all_match = all_match && match;
    rows.push_back({{"f", f},
                    {"divisors", divisors(f)},
                    {"minimal_count", closed.size()},
                    {"enumerated_count", enumerated.minimal.size()},
                    {"ranks", ranks},
                    {"match", match}});
  }
  return {{"rows", rows}, {"all_match", all_match}};
}

inline json run_embeddable(const JobConfig& c) {
  if (!c.extension) throw ConfigError("embeddable needs an \"extension\" block");
  EmbeddabilityResult r;
  try {
    r = elliptic_embeddable(*c.extension);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json tau = nullptr;
  if (r.tau) {
    ResidueField res(c.extension->p, c.extension->r * c.extension->m);
    tau = {{"frobenius_power", r.tau->a}, {"zeta", res.index(r.tau->zeta)}};
  }
  return {{"embeddable", r.embeddable}, {"tau", tau}, {"reason", r.reason}};
}

}  // namespace detail

/// Executes one subcommand on a configuration document and returns the report. Library
/// exceptions propagate; the executable maps them to error codes.
inline json run(const std::string& subcommand, json config, const RunOptions& opt = {}) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    throw ConfigError("unknown subcommand: " + subcommand);
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (opt.precision) config["precision"] = *opt.precision;
  if (opt.oracle_level) {
    config["oracle"]["level"] = *opt.oracle_level;
    if (!config["oracle"].contains("enabled")) config["oracle"]["enabled"] = true;
  }
  JobConfig c = parse_config(config);
  auto t0 = std::chrono::steady_clock::now();
  json result;
  if (subcommand == "classify") result = detail::run_classify(c);
  else if (subcommand == "admissible") result = detail::run_admissible(c);
  else if (subcommand == "multiplicity") result = detail::run_multiplicity(c, true, true);
  else if (subcommand == "volume") result = detail::run_multiplicity(c, false, true);
  else if (subcommand == "verify") result = detail::run_verify(c);
  else if (subcommand == "appendix-a") result = detail::run_appendix_a(c);
  else result = detail::run_embeddable(c);
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  json report;
  report["schema_version"] = kSchemaVersion;
  report["subcommand"] = subcommand;
  report["config"] = to_json(c);
  report["seed"] = opt.seed ? json(*opt.seed) : json(nullptr);
  report["result"] = result;
  report["timing"] = opt.timing ? json({{"elapsed_ms", static_cast<std::int64_t>(ms)}}) : json(nullptr);
  return report;
}

}  // namespace tori
