#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tori/admissible.hpp"
#include "tori/errors.hpp"
#include "tori/multiplicity.hpp"

namespace tori {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

struct OracleConfig {
  bool enabled = false;
  long level = 0;  // 0: conductor bound + 1
  std::uint64_t budget = 1000000;
};

struct JobConfig {
  Case kase = Case::B;
  long p = 3;
  std::uint64_t q = 3;
  int half = 1;
  int vu = 0;
  long lambda_psi = 0;
  std::optional<std::uint64_t> gamma;
  bool allow_p_divides_f = false;
  std::optional<std::vector<std::set<long>>> divisor_sets;
  long conductor_bound = 4;
  std::optional<std::vector<long>> conductors;
  OracleConfig oracle;
  long precision = 40;
  std::uint64_t witness_budget = 200000;
  std::optional<ExtensionSpec> extension;
  long appendix_f_max = 8;
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

}  // namespace detail

/// Parses and validates a configuration document.
inline JobConfig parse_config(const json& j) {
  JobConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion)
      throw ConfigError("unsupported schema_version");
    if (j.contains("tower")) {
      const json& t = j["tower"];
      std::string kase = detail::get_or<std::string>(t, "case", "B");
      if (kase != "A" && kase != "B") throw ConfigError("tower.case must be \"A\" or \"B\"");
      c.kase = kase == "A" ? Case::A : Case::B;
      c.p = detail::get_or<long>(t, "p", 3);
      c.q = detail::get_or<std::uint64_t>(t, "q", static_cast<std::uint64_t>(c.p));
      c.half = detail::get_or<int>(t, "halfdeg", 1);
      c.vu = detail::get_or<int>(t, "v_u", c.kase == Case::A ? 1 : 0);
      c.lambda_psi = detail::get_or<long>(t, "lambda_psi", 0);
      if (t.contains("gamma") && !t["gamma"].is_null()) c.gamma = t["gamma"].get<std::uint64_t>();
      c.allow_p_divides_f = detail::get_or<bool>(t, "allow_p_divides_f", false);
    }
    if (j.contains("divisors") && !j["divisors"].is_null()) {
      std::vector<std::set<long>> sets;
      for (const auto& s : j["divisors"]) sets.push_back(s.get<std::set<long>>());
      c.divisor_sets = sets;
    }
    if (j.contains("characters")) {
      const json& ch = j["characters"];
      c.conductor_bound = detail::get_or<long>(ch, "conductor_bound", c.conductor_bound);
      if (ch.contains("conductors") && !ch["conductors"].is_null())
        c.conductors = ch["conductors"].get<std::vector<long>>();
    }
    if (j.contains("oracle")) {
      const json& o = j["oracle"];
      c.oracle.enabled = detail::get_or<bool>(o, "enabled", true);
      c.oracle.level = detail::get_or<long>(o, "level", 0);
      c.oracle.budget = detail::get_or<std::uint64_t>(o, "budget", c.oracle.budget);
    }
    c.precision = detail::get_or<long>(j, "precision", c.precision);
    c.witness_budget = detail::get_or<std::uint64_t>(j, "witness_budget", c.witness_budget);
    if (j.contains("extension") && !j["extension"].is_null()) {
      const json& x = j["extension"];
      ExtensionSpec X;
      X.p = detail::get_or<long>(x, "p", 3);
      X.r = detail::get_or<int>(x, "r", 1);
      X.m = detail::get_or<int>(x, "m", 1);
      X.e = detail::get_or<int>(x, "e", 1);
      X.m_L = detail::get_or<int>(x, "m_L", 1);
      X.e_L = detail::get_or<int>(x, "e_L", 1);
      c.extension = X;
    }
    if (j.contains("appendix_a")) c.appendix_f_max = detail::get_or<long>(j["appendix_a"], "f_max", 8);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.precision < 8 || c.precision > 400) throw ConfigError("precision must lie in [8, 400]");
  if (c.conductor_bound < 0 || c.conductor_bound > 12) throw ConfigError("conductor_bound must lie in [0, 12]");
  if (c.half < 1 || c.half > 8) throw ConfigError("halfdeg must lie in [1, 8]");
  if (c.vu != 0 && c.vu != 1) throw ConfigError("v_u must be 0 or 1");
  if (c.kase == Case::A && c.vu != 1) throw ConfigError("case A requires v_u = 1");
  if (c.oracle.level < 0) throw ConfigError("oracle.level must be nonnegative");
  if (c.appendix_f_max < 1 || c.appendix_f_max > 12) throw ConfigError("appendix_a.f_max must lie in [1, 12]");
  if (c.divisor_sets) {
    long n = 2L * c.half;
    for (const auto& D : *c.divisor_sets)
      for (long d : D)
        if (d < 1 || n % d != 0) throw ConfigError("divisor " + std::to_string(d) + " does not divide " + std::to_string(n));
  }
  return c;
}

/// Builds the descriptor, mapping invariant violations to ConfigError.
inline TorusDescriptor descriptor_of(const JobConfig& c) {
  try {
    return build_max_torus(c.kase, c.p, c.q, c.half, c.vu, c.lambda_psi, c.precision, c.gamma, c.allow_p_divides_f);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline json to_json(const QPower& x) {
  json j;
  j["coeff"] = x.coeff.get_str();
  if (x.half_exp % 2 == 0) j["qexp"] = x.half_exp / 2;
  else j["qexp"] = static_cast<double>(x.half_exp) / 2.0;
  return j;
}

inline json to_json(const FieldElement& x) {
  json j;
  const FieldPtr& F = x.field();
  j["field"] = {{"p", F->p()}, {"residue_degree", F->residue_degree()}, {"ramification", F->ramification()}};
  if (x.is_exact_zero()) {
    j["valuation"] = nullptr;
    j["digits"] = json::array();
    return j;
  }
  j["precision"] = x.precision();
  if (x.is_zero()) {
    j["valuation"] = nullptr;
    j["digits"] = json::array();
    return j;
  }
  j["valuation"] = x.val();
  json d = json::array();
  for (const auto& dig : x.digits()) d.push_back(F->residue().index(dig));
  j["digits"] = d;
  return j;
}

inline json to_json(const CharacterSpec& c) {
  json j;
  j["conductor"] = c.conductor;
  j["parameter"] = c.parameter ? json(*c.parameter) : json(nullptr);
  if (c.kase == Case::A && c.conductor > 0) j["square"] = c.square;
  return j;
}

inline json to_json(const MultiplicityReport& r) {
  json j;
  j["character"] = to_json(r.character);
  j["m"] = to_json(r.m);
  j["vol"] = r.vol ? to_json(*r.vol) : json(nullptr);
  j["oracle"] = r.oracle ? json(*r.oracle) : json(nullptr);
  j["agree"] = {{"m_vol", r.vol ? json(r.agree_m_vol) : json(nullptr)},
                {"m_oracle", r.agree_m_oracle ? json(*r.agree_m_oracle) : json(nullptr)}};
  return j;
}

inline json to_json(const SubtorusSpec& S) {
  json j;
  j["divisors"] = S.divs;
  j["codim"] = S.codim;
  j["dim"] = S.dim;
  if (S.parent.kase == Case::A) {
    j["epsilon"] = S.epsilon;
  } else {
    j["mu_index"] = S.mu_index;
    j["I"] = S.I;
    j["I_prime"] = S.Iprime;
  }
  json rows = json::array();
  for (const auto& row : S.mbar.hnf()) {
    json r = json::array();
    for (const auto& x : row) r.push_back(x.get_si());
    rows.push_back(r);
  }
  j["character_module_hnf"] = rows;
  return j;
}

inline json to_json(const Decision& D) {
  json j;
  j["verdict"] = verdict_name(D.verdict);
  j["route"] = D.route;
  j["x"] = D.x ? to_json(*D.x) : json(nullptr);
  j["w"] = D.w ? to_json(*D.w) : json(nullptr);
  j["residues_checked"] = D.residues_checked;
  j["complement_dim"] = D.complement_dim;
  j["basis_valuations"] = D.basis_valuations;
  return j;
}

inline json to_json(const TorusDescriptor& T) {
  json j;
  j["case"] = T.kase == Case::A ? "A" : "B";
  j["p"] = T.p;
  j["q"] = T.q;
  j["halfdeg"] = T.half;
  j["v_u"] = T.vu;
  j["lambda_psi"] = T.lambda_psi;
  j["gamma"] = T.gamma ? json(*T.gamma) : json(nullptr);
  j["mu"] = T.mu();
  return j;
}

/// Canonical echo of a configuration (defaults filled in).
inline json to_json(const JobConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tower"] = {{"case", c.kase == Case::A ? "A" : "B"},
                {"p", c.p},
                {"q", c.q},
                {"halfdeg", c.half},
                {"v_u", c.vu},
                {"lambda_psi", c.lambda_psi},
                {"gamma", c.gamma ? json(*c.gamma) : json(nullptr)},
                {"allow_p_divides_f", c.allow_p_divides_f}};
  if (c.divisor_sets) {
    json d = json::array();
    for (const auto& s : *c.divisor_sets) d.push_back(s);
    j["divisors"] = d;
  } else {
    j["divisors"] = nullptr;
  }
  j["characters"] = {{"conductor_bound", c.conductor_bound},
                     {"conductors", c.conductors ? json(*c.conductors) : json(nullptr)}};
  j["oracle"] = {{"enabled", c.oracle.enabled}, {"level", c.oracle.level}, {"budget", c.oracle.budget}};
  j["precision"] = c.precision;
  j["witness_budget"] = c.witness_budget;
  if (c.extension) {
    const auto& X = *c.extension;
    j["extension"] = {{"p", X.p}, {"r", X.r}, {"m", X.m}, {"e", X.e}, {"m_L", X.m_L}, {"e_L", X.e_L}};
  } else {
    j["extension"] = nullptr;
  }
  j["appendix_a"] = {{"f_max", c.appendix_f_max}};
  return j;
}

}  // namespace tori
