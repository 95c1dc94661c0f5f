#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpace/auctions.hpp"
#include "vpace/equilibrium.hpp"
#include "vpace/instance.hpp"

namespace vpace::io {

using json = nlohmann::json;

/// Raised for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- text emission --------------------------------------------------------

/// 17 significant digits, which round-trips every finite double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void emit(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int level) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); });
      out += '[';
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ',';
        if (!flat) newline(depth + 1);
        else if (k && indent >= 0) out += ' ';
        emit(out, j[k], indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      // Non-finite values have no JSON literal; they travel as strings.
      out += std::isfinite(x) ? format_double(x) : "\"" + format_double(x) + "\"";
      return;
    }
    default: out += j.dump(); return;
  }
}

}  // namespace detail

/// Serializes with 17 significant digits for every real. indent < 0 is compact.
inline std::string dump(const json& j, int indent = 2) {
  std::string out;
  detail::emit(out, j, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

inline double as_double(const json& j, const char* field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  }
  throw IoError(std::string("field '") + field + "' must be a number");
}

inline const json& require(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) throw IoError(std::string("missing field '") + field + "'");
  return j.at(field);
}

inline std::vector<double> as_doubles(const json& j, const char* field) {
  if (!j.is_array()) throw IoError(std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(as_double(e, field));
  return out;
}

// ---- files ----------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

inline json parse(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(origin + ": " + e.what());
  }
}

// ---- instances ------------------------------------------------------------

inline json to_json(const AuctionInstance& inst) {
  json items = json::array();
  for (const auto& it : inst.items())
    items.push_back({{"features", it.features}, {"probability", it.probability}, {"reserve", it.reserve}});
  json buyers = json::array();
  for (const auto& b : inst.buyers())
    buyers.push_back({{"weights", b.weights}, {"budget", b.budget}, {"probability", b.probability}});
  return {{"n", inst.bidders()}, {"d", inst.dimension()}, {"items", items}, {"buyers", buyers}};
}

inline RawInstance raw_instance_from_json(const json& j) {
  RawInstance raw;
  const auto& n = require(j, "n");
  const auto& d = require(j, "d");
  if (!n.is_number_integer() || !d.is_number_integer()) throw IoError("fields 'n' and 'd' must be integers");
  raw.n = n.get<int>();
  raw.d = d.get<int>();
  const auto& items = require(j, "items");
  const auto& buyers = require(j, "buyers");
  if (!items.is_array() || !buyers.is_array()) throw IoError("fields 'items' and 'buyers' must be arrays");
  for (const auto& it : items) {
    ItemAtom a;
    a.features = as_doubles(require(it, "features"), "features");
    a.probability = as_double(require(it, "probability"), "probability");
    a.reserve = it.contains("reserve") ? as_double(it.at("reserve"), "reserve") : 0.0;
    raw.items.push_back(std::move(a));
  }
  for (const auto& b : buyers) {
    BuyerAtom a;
    a.weights = as_doubles(require(b, "weights"), "weights");
    a.budget = as_double(require(b, "budget"), "budget");
    a.probability = as_double(require(b, "probability"), "probability");
    raw.buyers.push_back(std::move(a));
  }
  return raw;
}

inline AuctionInstance instance_from_json(const json& j) { return validate_instance(raw_instance_from_json(j)); }

inline AuctionInstance load_instance(const std::string& path) {
  return instance_from_json(parse(read_file(path), path));
}

/// Compact, key-sorted text of an instance; the input to content digests.
inline std::string canonical_instance_text(const AuctionInstance& inst) { return dump(to_json(inst), -1); }

// ---- profiles -------------------------------------------------------------

/// Accepts {"multipliers": [...]}, {"profile": [...]} or a full report
/// document carrying a "profile" array.
inline PacingProfile profile_from_json(const json& j) {
  if (j.is_object() && j.contains("multipliers")) return {as_doubles(j.at("multipliers"), "multipliers")};
  if (j.is_object() && j.contains("profile")) {
    const auto& p = j.at("profile");
    if (p.is_object()) return profile_from_json(p);
    return {as_doubles(p, "profile")};
  }
  if (j.is_object() && j.contains("report")) return profile_from_json(j.at("report"));
  throw IoError("no 'multipliers' or 'profile' array found");
}

inline PacingProfile load_profile(const std::string& path) {
  return profile_from_json(parse(read_file(path), path));
}

// ---- equilibrium reports --------------------------------------------------

inline json to_json(const MonotonicityReport& r) {
  json v = json::array();
  for (const auto& x : r.violations)
    v.push_back({{"lower", x.lower}, {"upper", x.upper}, {"axis", x.axis}, {"excess", x.excess}});
  return {{"comparable_pairs", r.comparable_pairs}, {"vacuous", r.vacuous}, {"violations", v}};
}

inline MonotonicityReport monotonicity_from_json(const json& j) {
  MonotonicityReport r;
  r.comparable_pairs = require(j, "comparable_pairs").get<std::size_t>();
  r.vacuous = require(j, "vacuous").get<bool>();
  for (const auto& x : require(j, "violations"))
    r.violations.push_back({require(x, "lower").get<std::size_t>(), require(x, "upper").get<std::size_t>(),
                            require(x, "axis").get<std::string>(), as_double(require(x, "excess"), "excess")});
  return r;
}

inline json to_json(const ColinearReport& r) {
  json groups = json::array();
  for (const auto& g : r.groups)
    groups.push_back({{"members", g.members},
                      {"paced", g.paced},
                      {"paced_spread", g.paced_spread},
                      {"collapse_gap", g.collapse_gap}});
  return {{"groups", groups},
          {"max_paced_spread", r.max_paced_spread},
          {"max_collapse_gap", r.max_collapse_gap},
          {"min_paced_norm", r.min_paced_norm},
          {"max_paced_norm", r.max_paced_norm},
          {"paced_types", r.paced_types},
          {"vacuous", r.vacuous}};
}

inline ColinearReport colinear_from_json(const json& j) {
  ColinearReport r;
  for (const auto& g : require(j, "groups")) {
    ColinearGroup c;
    c.members = require(g, "members").get<std::vector<std::size_t>>();
    c.paced = require(g, "paced").get<std::size_t>();
    c.paced_spread = as_double(require(g, "paced_spread"), "paced_spread");
    c.collapse_gap = as_double(require(g, "collapse_gap"), "collapse_gap");
    r.groups.push_back(std::move(c));
  }
  r.max_paced_spread = as_double(require(j, "max_paced_spread"), "max_paced_spread");
  r.max_collapse_gap = as_double(require(j, "max_collapse_gap"), "max_collapse_gap");
  r.min_paced_norm = as_double(require(j, "min_paced_norm"), "min_paced_norm");
  r.max_paced_norm = as_double(require(j, "max_paced_norm"), "max_paced_norm");
  r.paced_types = require(j, "paced_types").get<std::size_t>();
  r.vacuous = require(j, "vacuous").get<bool>();
  return r;
}

inline json to_json(const EquilibriumReport& r) {
  return {{"profile", r.profile.multipliers},
          {"rounds", r.rounds},
          {"converged", r.converged},
          {"linf_residual", r.linf_residual},
          {"max_budget_violation", r.max_budget_violation},
          {"max_budget_violation_above", r.max_budget_violation_above},
          {"oscillation_period", r.oscillation_period},
          {"residual_history", r.residual_history},
          {"diagnostics", {{"monotonicity", to_json(r.monotonicity)}, {"colinear", to_json(r.colinear)}}}};
}

inline EquilibriumReport equilibrium_from_json(const json& j) {
  EquilibriumReport r;
  r.profile.multipliers = as_doubles(require(j, "profile"), "profile");
  r.rounds = require(j, "rounds").get<int>();
  r.converged = require(j, "converged").get<bool>();
  r.linf_residual = as_double(require(j, "linf_residual"), "linf_residual");
  r.max_budget_violation = as_double(require(j, "max_budget_violation"), "max_budget_violation");
  r.max_budget_violation_above = as_double(require(j, "max_budget_violation_above"), "max_budget_violation_above");
  r.oscillation_period = require(j, "oscillation_period").get<int>();
  r.residual_history = as_doubles(require(j, "residual_history"), "residual_history");
  const auto& diag = require(j, "diagnostics");
  r.monotonicity = monotonicity_from_json(require(diag, "monotonicity"));
  r.colinear = colinear_from_json(require(diag, "colinear"));
  return r;
}

inline json to_json(const BudgetReport& r) {
  json types = json::array();
  for (const auto& t : r.types)
    types.push_back({{"multiplier", t.multiplier},
                     {"expenditure", t.expenditure},
                     {"expenditure_above", t.expenditure_above},
                     {"violation", t.violation},
                     {"slackness", t.slackness}});
  return {{"types", types},
          {"max_relative_violation", r.max_relative_violation},
          {"max_relative_violation_above", r.max_relative_violation_above},
          {"max_relative_gap_paced", r.max_relative_gap_paced},
          {"max_abs_slackness", r.max_abs_slackness}};
}

// ---- revenue reports ------------------------------------------------------

inline json to_json(const FormatRevenue& f) {
  return {{"format", std::string(format_tag(f.format))},
          {"analytic_per_type", f.analytic_per_type},
          {"analytic_total", f.analytic_total},
          {"mc_revenue", f.mc_revenue},
          {"mc_standard_error", f.mc_standard_error},
          {"samples", f.samples},
          {"tie_frequency", f.tie_frequency},
          {"mc_per_type", f.mc_per_type},
          {"mc_per_type_se", f.mc_per_type_se},
          {"mc_gap_in_se", f.mc_gap_in_se},
          {"mc_flag", f.mc_flag}};
}

inline FormatRevenue format_revenue_from_json(const json& j) {
  FormatRevenue f;
  f.format = parse_format(require(j, "format").get<std::string>());
  f.analytic_per_type = as_doubles(require(j, "analytic_per_type"), "analytic_per_type");
  f.analytic_total = as_double(require(j, "analytic_total"), "analytic_total");
  f.mc_revenue = as_double(require(j, "mc_revenue"), "mc_revenue");
  f.mc_standard_error = as_double(require(j, "mc_standard_error"), "mc_standard_error");
  f.samples = require(j, "samples").get<std::uint64_t>();
  f.tie_frequency = as_double(require(j, "tie_frequency"), "tie_frequency");
  f.mc_per_type = as_doubles(require(j, "mc_per_type"), "mc_per_type");
  f.mc_per_type_se = as_doubles(require(j, "mc_per_type_se"), "mc_per_type_se");
  f.mc_gap_in_se = as_double(require(j, "mc_gap_in_se"), "mc_gap_in_se");
  f.mc_flag = require(j, "mc_flag").get<bool>();
  return f;
}

inline json to_json(const RevenueReport& r) {
  json formats = json::array();
  for (const auto& f : r.formats) formats.push_back(to_json(f));
  json pairs = json::array();
  for (const auto& p : r.pairwise)
    pairs.push_back({{"a", std::string(format_tag(p.a))},
                     {"b", std::string(format_tag(p.b))},
                     {"gap_in_se", p.gap_in_se},
                     {"flag", p.flag}});
  return {{"seed", r.seed},
          {"formats", formats},
          {"max_analytic_cross_format_gap", r.max_analytic_cross_format_gap},
          {"analytic_flag", r.analytic_flag},
          {"mc_flag", r.mc_flag},
          {"pairwise", pairs}};
}

inline RevenueReport revenue_from_json(const json& j) {
  RevenueReport r;
  r.seed = require(j, "seed").get<std::uint64_t>();
  for (const auto& f : require(j, "formats")) r.formats.push_back(format_revenue_from_json(f));
  r.max_analytic_cross_format_gap =
      as_double(require(j, "max_analytic_cross_format_gap"), "max_analytic_cross_format_gap");
  r.analytic_flag = require(j, "analytic_flag").get<bool>();
  r.mc_flag = require(j, "mc_flag").get<bool>();
  for (const auto& p : require(j, "pairwise"))
    r.pairwise.push_back({parse_format(require(p, "a").get<std::string>()),
                          parse_format(require(p, "b").get<std::string>()),
                          as_double(require(p, "gap_in_se"), "gap_in_se"), require(p, "flag").get<bool>()});
  return r;
}

// ---- report documents -----------------------------------------------------

/// A solve result bundled with the instance it was computed on, so exports
/// need nothing else.
struct EquilibriumDocument {
  AuctionInstance instance;
  EquilibriumReport report;
};

inline json to_json(const EquilibriumDocument& doc) {
  return {{"kind", "equilibrium"}, {"instance", to_json(doc.instance)}, {"report", to_json(doc.report)}};
}

inline EquilibriumDocument equilibrium_document_from_json(const json& j) {
  if (require(j, "kind") != "equilibrium") throw IoError("not an equilibrium report");
  return {instance_from_json(require(j, "instance")), equilibrium_from_json(require(j, "report"))};
}

inline json revenue_document(const RevenueReport& r) { return {{"kind", "revenue"}, {"report", to_json(r)}}; }

inline std::string document_kind(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw IoError("report has no 'kind' field");
  return j.at("kind").get<std::string>();
}

// ---- CSV ------------------------------------------------------------------

enum class ExportKind { PacedVectors, ShadingSurface, Revenue };

inline ExportKind parse_export_kind(const std::string& s) {
  if (s == "paced-vectors") return ExportKind::PacedVectors;
  if (s == "shading-surface") return ExportKind::ShadingSurface;
  if (s == "revenue") return ExportKind::Revenue;
  throw IoError("unknown export kind '" + s + "' (expected paced-vectors, shading-surface or revenue)");
}

namespace detail {

inline std::string weight_header(int d, const char* prefix) {
  std::string h;
  for (int k = 1; k <= d; ++k) h += (k > 1 ? "," : "") + std::string(prefix) + std::to_string(k);
  return h;
}

}  // namespace detail

/// w1..wd,B,t,pw1..pwd per buyer atom.
inline std::string paced_vectors_csv(const AuctionInstance& inst, const PacingProfile& profile) {
  const int d = inst.dimension();
  std::string out = detail::weight_header(d, "w") + ",B,t," + detail::weight_header(d, "pw") + "\n";
  for (std::size_t j = 0; j < profile.size() && j < inst.buyer_count(); ++j) {
    const auto& b = inst.buyer(j);
    for (double w : b.weights) out += format_double(w) + ",";
    out += format_double(b.budget) + "," + format_double(profile[j]);
    for (double w : b.weights) out += "," + format_double(w / (1.0 + profile[j]));
    out += "\n";
  }
  return out;
}

/// w1..wd,factor with factor = 1/(1+t).
inline std::string shading_surface_csv(const AuctionInstance& inst, const PacingProfile& profile) {
  std::string out = detail::weight_header(inst.dimension(), "w") + ",factor\n";
  for (std::size_t j = 0; j < profile.size() && j < inst.buyer_count(); ++j) {
    for (double w : inst.buyer(j).weights) out += format_double(w) + ",";
    out += format_double(1.0 / (1.0 + profile[j])) + "\n";
  }
  return out;
}

/// format,type,analytic,mc,se; one row per buyer atom and a "total" row per format.
inline std::string revenue_csv(const RevenueReport& r) {
  std::string out = "format,type,analytic,mc,se\n";
  for (const auto& f : r.formats) {
    const std::string tag(format_tag(f.format));
    for (std::size_t j = 0; j < f.analytic_per_type.size(); ++j)
      out += tag + "," + std::to_string(j) + "," + format_double(f.analytic_per_type[j]) + "," +
             format_double(f.mc_per_type[j]) + "," + format_double(f.mc_per_type_se[j]) + "\n";
    out += tag + ",total," + format_double(f.analytic_total) + "," + format_double(f.mc_revenue) + "," +
           format_double(f.mc_standard_error) + "\n";
  }
  return out;
}

/// CSV for an exported report document of the matching kind.
inline std::string export_csv(const json& document, ExportKind kind) {
  const auto doc_kind = document_kind(document);
  if (kind == ExportKind::Revenue) {
    if (doc_kind != "revenue") throw IoError("revenue export needs a simulate report, got '" + doc_kind + "'");
    return revenue_csv(revenue_from_json(require(document, "report")));
  }
  if (doc_kind != "equilibrium") throw IoError("this export needs a solve report, got '" + doc_kind + "'");
  const auto doc = equilibrium_document_from_json(document);
  return kind == ExportKind::PacedVectors ? paced_vectors_csv(doc.instance, doc.report.profile)
                                          : shading_surface_csv(doc.instance, doc.report.profile);
}

}  // namespace vpace::io
