#pragma once

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vpace/io.hpp"
#include "vpace/manifest.hpp"
#include "vpace/vpace.hpp"

namespace vpace::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kInternal = 2 };

namespace detail {

struct Sink {
  std::ostream& out;
  std::ostream& err;
};

inline void emit_document(const Sink& sink, const io::json& doc, const std::string& path) {
  const auto text = io::dump(doc);
  if (path.empty()) {
    sink.out << text;
  } else {
    io::write_file(path, text);
  }
}

inline void write_manifest(const RunManifest& m, const std::string& explicit_path, const std::string& out_path) {
  std::string path = explicit_path;
  if (path.empty() && !out_path.empty()) path = out_path + ".manifest.json";
  if (!path.empty()) io::write_file(path, io::dump(m.to_json()));
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// `export` needs no instance, so it runs ahead of the shared loading path.
inline int run_export(const std::string& report_path, const std::string& kind, const std::string& out_path,
                      std::ostream& err) {
  try {
    const auto doc = io::parse(io::read_file(report_path), report_path);
    io::write_file(out_path, io::export_csv(doc, io::parse_export_kind(kind)));
    return kOk;
  } catch (const io::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns 0 on success, 1 on usage or validation errors, 2 otherwise.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  const detail::Sink sink{out, err};
  const auto start = std::chrono::steady_clock::now();

  CLI::App app{"Value-pacing equilibria for budgeted first-price auctions", "vpace"};
  app.require_subcommand(1);
  std::string manifest_path;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a reference instance");
  gen->require_subcommand(1);
  std::string gen_out;
  double arc_a = 2.0;
  double arc_b = 3.0;
  int arc_count = 320;
  auto* gen_arc = gen->add_subcommand("arc", "two-feature arc market");
  gen_arc->add_option("--a", arc_a, "inner radius (>= 1)")->capture_default_str();
  gen_arc->add_option("--b", arc_b, "outer radius (> a)")->capture_default_str();
  gen_arc->add_option("--count", arc_count, "number of buyer atoms")->capture_default_str();
  gen_arc->add_option("--out", gen_out, "instance file")->required();
  gen_arc->add_option("--manifest", manifest_path, "manifest file (default: <out>.manifest.json)");
  auto* gen_grid = gen->add_subcommand("grid", "three-bidder 10 x 10 grid market");
  gen_grid->add_option("--out", gen_out, "instance file")->required();
  gen_grid->add_option("--manifest", manifest_path, "manifest file (default: <out>.manifest.json)");

  // solve
  auto* solve = app.add_subcommand("solve", "run best-response dynamics from the zero profile");
  std::string instance_path;
  std::string out_path;
  SolveOptions solve_opt;
  solve->add_option("--instance", instance_path, "instance file")->required();
  solve->add_option("--damping", solve_opt.damping, "step size in (0, 1]")->capture_default_str();
  solve->add_option("--max-rounds", solve_opt.max_rounds, "round limit")->capture_default_str();
  solve->add_option("--tol", solve_opt.fixpoint_tol, "L-inf fixed-point tolerance")->capture_default_str();
  solve->add_option("--budget-tol", solve_opt.budget_tol, "relative budget tolerance")->capture_default_str();
  solve->add_option("--budget-probe", solve_opt.budget_probe, "relative multiplier step of the budget check")
      ->capture_default_str();
  solve->add_option("--threads", solve_opt.threads, "worker threads (0 = all cores)");
  solve->add_option("--out", out_path, "report file (default: stdout)");
  solve->add_option("--manifest", manifest_path, "manifest file (default: <out>.manifest.json)");

  // check
  auto* check = app.add_subcommand("check", "structural checks of a profile");
  check->require_subcommand(1);
  std::string profile_path;
  std::vector<CLI::App*> checks;
  for (const char* name : {"budgets", "monotone", "colinear"}) {
    auto* c = check->add_subcommand(name);
    c->add_option("--instance", instance_path, "instance file")->required();
    c->add_option("--profile", profile_path, "profile or solve report")->required();
    c->add_option("--out", out_path, "report file (default: stdout)");
    c->add_option("--manifest", manifest_path, "manifest file (default: <out>.manifest.json)");
    checks.push_back(c);
  }

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo revenue under a profile");
  std::vector<std::string> format_tags;
  SimulationOptions sim_opt;
  simulate->add_option("--instance", instance_path, "instance file")->required();
  simulate->add_option("--profile", profile_path, "profile or solve report")->required();
  simulate->add_option("--format", format_tags, "fp, sp or ap; repeat or comma-separate for several")
      ->required()
      ->delimiter(',');
  simulate->add_option("--samples", sim_opt.samples, "auctions per format")->capture_default_str();
  simulate->add_option("--seed", sim_opt.seed, "master seed")->capture_default_str();
  simulate->add_option("--threads", sim_opt.threads, "worker threads (0 = all cores)");
  simulate->add_option("--out", out_path, "report file (default: stdout)");
  simulate->add_option("--manifest", manifest_path, "manifest file (default: <out>.manifest.json)");

  // export
  auto* exp = app.add_subcommand("export", "CSV export of a report");
  std::string report_path;
  std::string kind;
  exp->add_option("--report", report_path, "solve or simulate report")->required();
  exp->add_option("--kind", kind, "paced-vectors, shading-surface or revenue")->required();
  exp->add_option("--out", out_path, "CSV file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kValidation;
  }

  try {
    RunManifest manifest;
    manifest.tool_version = kToolVersion;

    if (gen->parsed()) {
      const bool arc = gen_arc->parsed();
      const auto inst = arc ? gen_arc_instance(arc_a, arc_b, arc_count) : gen_grid_instance();
      io::write_file(gen_out, io::dump(io::to_json(inst)));
      manifest.command = arc ? "gen arc" : "gen grid";
      if (arc) manifest.options = {{"a", arc_a}, {"b", arc_b}, {"count", arc_count}};
      manifest.instance_digest = instance_digest(inst);
      manifest.outcome = {{"buyers", inst.buyer_count()}, {"items", inst.item_count()}};
      manifest.wall_seconds = detail::seconds_since(start);
      detail::write_manifest(manifest, manifest_path, gen_out);
      return kOk;
    }

    if (exp->parsed()) return run_export(report_path, kind, out_path, err);

    const auto inst = io::load_instance(instance_path);
    for (const auto& w : inst.warnings()) err << "warning: " << w << "\n";
    manifest.instance_digest = instance_digest(inst);

    if (solve->parsed()) {
      auto report = solve_equilibrium(inst, solve_opt);
      if (!report.converged) {
        err << "warning: solve did not converge after " << report.rounds
            << " rounds (residual " << io::format_double(report.linf_residual) << ", budget violation "
            << io::format_double(report.max_budget_violation_above) << ")\n";
      }
      detail::emit_document(sink, io::to_json(io::EquilibriumDocument{inst, report}), out_path);
      manifest.command = "solve";
      manifest.options = {{"damping", solve_opt.damping},
                          {"max_rounds", solve_opt.max_rounds},
                          {"fixpoint_tol", solve_opt.fixpoint_tol},
                          {"budget_tol", solve_opt.budget_tol},
                          {"budget_probe", solve_opt.budget_probe}};
      manifest.outcome = {{"converged", report.converged},
                          {"rounds", report.rounds},
                          {"linf_residual", report.linf_residual},
                          {"max_budget_violation", report.max_budget_violation}};
      manifest.wall_seconds = detail::seconds_since(start);
      detail::write_manifest(manifest, manifest_path, out_path);
      return kOk;
    }

    const auto profile = io::load_profile(profile_path);
    validate_profile(inst, profile);

    if (check->parsed()) {
      io::json doc;
      if (checks[0]->parsed()) {
        doc = {{"kind", "budgets"}, {"report", io::to_json(check_budgets(inst, profile))}};
        manifest.command = "check budgets";
      } else if (checks[1]->parsed()) {
        const auto r = check_monotonicity(inst, profile);
        doc = {{"kind", "monotonicity"}, {"report", io::to_json(r)}};
        manifest.command = "check monotone";
        if (r.vacuous) err << "warning: no comparable pairs, monotonicity check is vacuous\n";
      } else {
        doc = {{"kind", "colinear"}, {"report", io::to_json(check_colinear_pacing(inst, profile))}};
        manifest.command = "check colinear";
      }
      detail::emit_document(sink, doc, out_path);
      manifest.wall_seconds = detail::seconds_since(start);
      detail::write_manifest(manifest, manifest_path, out_path);
      return kOk;
    }

    if (simulate->parsed()) {
      std::vector<AuctionFormat> formats;
      for (const auto& t : format_tags) formats.push_back(parse_format(t));
      const auto report = revenue_equivalence_report(inst, profile, formats, sim_opt);
      detail::emit_document(sink, io::revenue_document(report), out_path);
      manifest.command = "simulate";
      manifest.seed = sim_opt.seed;
      manifest.options = {{"formats", format_tags}, {"samples", sim_opt.samples}};
      manifest.outcome = {{"analytic_flag", report.analytic_flag}, {"mc_flag", report.mc_flag}};
      manifest.wall_seconds = detail::seconds_since(start);
      detail::write_manifest(manifest, manifest_path, out_path);
      return kOk;
    }
  } catch (const InstanceError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const io::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace vpace::cli
