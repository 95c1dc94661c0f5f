#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "support.hpp"
#include "vpace/io.hpp"
#include "vpace/manifest.hpp"

using namespace vpace;

namespace {

std::vector<std::vector<double>> csv_rows(const std::string& text, std::string* header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

EquilibriumReport report_for(const PacingProfile& p) {
  EquilibriumReport r;
  r.profile = p;
  return r;
}

}  // namespace

TEST(FormatDouble, RoundTripsAndNamesNonFinite) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5}) EXPECT_EQ(std::stod(io::format_double(x)), x);
  EXPECT_EQ(io::format_double(INFINITY), "Infinity");
  EXPECT_EQ(io::format_double(NAN), "NaN");
}

TEST(InstanceJson, RoundTripIsBitExact) {
  for (const auto& inst : {gen_arc_instance(2.0, 3.0, 320), gen_grid_instance()}) {
    const auto text = io::dump(io::to_json(inst));
    const auto back = io::instance_from_json(io::parse(text, "memory"));
    EXPECT_EQ(back, inst);
    EXPECT_EQ(io::dump(io::to_json(back)), text);
  }
}

TEST(InstanceJson, MissingFieldsAreReported) {
  auto j = io::to_json(gen_grid_instance());
  j.erase("buyers");
  EXPECT_THROW(io::instance_from_json(j), io::IoError);
  EXPECT_THROW(io::parse("{not json", "memory"), io::IoError);
}

TEST(InstanceJson, ValidationStillApplies) {
  auto j = io::to_json(gen_grid_instance());
  j["buyers"][0]["budget"] = 0.0;
  EXPECT_THROW(io::instance_from_json(j), InstanceError);
}

TEST(Digest, StableUnderReserializationAndSensitiveToContent) {
  const auto inst = gen_arc_instance(2.0, 3.0, 50);
  const auto again = io::instance_from_json(io::parse(io::dump(io::to_json(inst)), "memory"));
  EXPECT_EQ(instance_digest(inst), instance_digest(again));
  EXPECT_EQ(instance_digest(inst).size(), 64u);
  EXPECT_NE(instance_digest(inst), instance_digest(gen_arc_instance(2.0, 3.0, 51)));
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ReportJson, EquilibriumRoundTrip) {
  const auto inst = gen_grid_instance();
  SolveOptions opt;
  opt.max_rounds = 5;
  const auto report = solve_equilibrium(inst, opt);
  const auto text = io::dump(io::to_json(io::EquilibriumDocument{inst, report}));
  const auto doc = io::equilibrium_document_from_json(io::parse(text, "memory"));
  EXPECT_EQ(doc.instance, inst);
  EXPECT_EQ(doc.report.profile, report.profile);
  EXPECT_EQ(doc.report.rounds, report.rounds);
  EXPECT_EQ(doc.report.converged, report.converged);
  EXPECT_EQ(doc.report.residual_history, report.residual_history);
  EXPECT_EQ(doc.report.monotonicity.comparable_pairs, report.monotonicity.comparable_pairs);
  EXPECT_EQ(doc.report.colinear.groups.size(), report.colinear.groups.size());
  EXPECT_EQ(io::dump(io::to_json(doc)), text);
}

TEST(ReportJson, RevenueRoundTrip) {
  const auto inst = gen_grid_instance();
  SimulationOptions o;
  o.samples = 500;
  const AuctionFormat two[] = {AuctionFormat::FirstPrice, AuctionFormat::AllPay};
  const auto report = revenue_equivalence_report(inst, PacingProfile::zeros(100), two, o);
  const auto text = io::dump(io::revenue_document(report));
  const auto back = io::revenue_from_json(io::parse(text, "memory").at("report"));
  EXPECT_EQ(io::dump(io::revenue_document(back)), text);
  EXPECT_EQ(back.formats[1].format, AuctionFormat::AllPay);
}

TEST(Profiles, AcceptSeveralShapes) {
  const PacingProfile expect{{0.5, 0.25}};
  EXPECT_EQ(io::profile_from_json(io::json{{"multipliers", {0.5, 0.25}}}), expect);
  EXPECT_EQ(io::profile_from_json(io::json{{"profile", {0.5, 0.25}}}), expect);
  EXPECT_EQ(io::profile_from_json(io::json{{"report", {{"profile", {0.5, 0.25}}}}}), expect);
  EXPECT_THROW(io::profile_from_json(io::json{{"other", 1}}), io::IoError);
  EXPECT_THROW(io::profile_from_json(io::json{{"multipliers", {"x"}}}), io::IoError);
}

TEST(Csv, PacedVectorsHaveUnitNormAtTheReferenceProfile) {
  const auto inst = gen_arc_instance(2.0, 3.0, 320);
  std::string header;
  const auto rows = csv_rows(io::paced_vectors_csv(inst, testkit::norm_minus_one_profile(inst)), &header);
  EXPECT_EQ(header, "w1,w2,B,t,pw1,pw2");
  ASSERT_EQ(rows.size(), 320u);
  for (const auto& r : rows) EXPECT_NEAR(std::hypot(r[4], r[5]), 1.0, 1e-12);
}

TEST(Csv, ShadingSurfaceCoversTheGrid) {
  const auto inst = gen_grid_instance();
  std::mt19937_64 rng(3);
  const auto p = testkit::random_profile(inst, rng);
  std::string header;
  const auto rows = csv_rows(io::shading_surface_csv(inst, p), &header);
  EXPECT_EQ(header, "w1,w2,factor");
  ASSERT_EQ(rows.size(), 100u);
  for (const auto& r : rows) {
    EXPECT_GT(r[2], 0.0);
    EXPECT_LE(r[2], 1.0);
  }
}

TEST(Csv, EmptyReportGivesHeaderOnly) {
  const auto inst = gen_grid_instance();
  const io::EquilibriumDocument doc{inst, report_for(PacingProfile{})};
  EXPECT_EQ(io::export_csv(io::to_json(doc), io::ExportKind::ShadingSurface), "w1,w2,factor\n");
  EXPECT_EQ(io::revenue_csv(RevenueReport{}), "format,type,analytic,mc,se\n");
}

TEST(Csv, KindMustMatchDocument) {
  const auto inst = gen_grid_instance();
  const auto doc = io::to_json(io::EquilibriumDocument{inst, report_for(PacingProfile::zeros(100))});
  EXPECT_THROW(io::export_csv(doc, io::ExportKind::Revenue), io::IoError);
  EXPECT_THROW(io::parse_export_kind("heatmap"), io::IoError);
  EXPECT_THROW(io::document_kind(io::json::object()), io::IoError);
}

TEST(Files, UnwritablePathIsAnIoError) {
  EXPECT_THROW(io::write_file("/nonexistent-dir/x/y.json", "{}"), io::IoError);
  EXPECT_THROW(io::read_file("/nonexistent-dir/x/y.json"), io::IoError);
  const auto path = (std::filesystem::temp_directory_path() / "vpace_io_roundtrip.json").string();
  io::write_file(path, "[1]");
  EXPECT_EQ(io::read_file(path), "[1]");
  std::filesystem::remove(path);
}

TEST(Dump, ScalarArraysStayOnOneLine) {
  const io::json j{{"a", {1, 2, 3}}, {"b", {{"c", 0.5}}}};
  EXPECT_EQ(io::dump(j), "{\n  \"a\": [1, 2, 3],\n  \"b\": {\n    \"c\": 0.5\n  }\n}\n");
}
