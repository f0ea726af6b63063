#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiment.hpp"
#include "sepvar/reference.hpp"

using namespace sepvar;
using namespace sepvar::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sepvar_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

/// CSV body below the config line: header plus rows, split on commas.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

// Small validator for the subset of JSON Schema used by the summary schema:
// type, const, enum, required, properties, items, $ref into $defs, allOf with
// if/then.
class SchemaCheck {
 public:
  explicit SchemaCheck(json root) : root_(std::move(root)) {}

  bool matches(const json& schema, const json& v) {
    std::vector<std::string> scratch;
    std::swap(scratch, errors);
    check(schema, v, "$");
    const bool ok = errors.empty();
    std::swap(scratch, errors);
    return ok;
  }

  void check(const json& schema, const json& v, const std::string& where) {
    if (schema.contains("$ref")) {
      const std::string ref = schema["$ref"];
      const std::string prefix = "#/$defs/";
      check(root_["$defs"][ref.substr(prefix.size())], v, where);
      return;
    }
    if (schema.contains("type")) {
      const json& t = schema["type"];
      bool ok = false;
      for (const auto& name : t.is_array() ? t : json::array({t})) ok = ok || has_type(v, name);
      if (!ok) errors.push_back(where + ": wrong type");
    }
    if (schema.contains("const") && v != schema["const"]) errors.push_back(where + ": const mismatch");
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& e : schema["enum"]) found = found || e == v;
      if (!found) errors.push_back(where + ": not in enum");
    }
    if (v.is_object()) {
      const json required = schema.value("required", json::array());
      const json properties = schema.value("properties", json::object());
      for (const auto& key : required)
        if (!v.contains(key.get<std::string>())) errors.push_back(where + ": missing " + key.get<std::string>());
      for (const auto& [key, sub] : properties.items())
        if (v.contains(key)) check(sub, v[key], where + "." + key);
    }
    if (v.is_array() && schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(schema["items"], v[i], where + "[" + std::to_string(i) + "]");
    const json all_of = schema.value("allOf", json::array());
    for (const auto& clause : all_of) {
      if (clause.contains("if")) {
        if (matches(clause["if"], v)) check(clause["then"], v, where);
      } else {
        check(clause, v, where);
      }
    }
  }

  std::vector<std::string> errors;

 private:
  static bool has_type(const json& v, const std::string& name) {
    if (name == "object") return v.is_object();
    if (name == "array") return v.is_array();
    if (name == "string") return v.is_string();
    if (name == "integer") return v.is_number_integer();
    if (name == "number") return v.is_number();
    if (name == "boolean") return v.is_boolean();
    if (name == "null") return v.is_null();
    return false;
  }

  json root_;
};

void expect_schema_valid(const json& summary) {
  const json schema = load_json(fs::path(SEPVAR_SOURCE_DIR) / "docs" / "summary.schema.json");
  SchemaCheck checker(schema);
  checker.check(schema, summary, "$");
  for (const auto& e : checker.errors) ADD_FAILURE() << e;
}

}  // namespace

TEST(CliRange, ParsesInclusiveGrid) {
  const auto g = parse_range("0:0.5:0.1");
  ASSERT_EQ(g.size(), 6u);
  EXPECT_DOUBLE_EQ(g.back(), 0.5);
  EXPECT_THROW(parse_range("0:0.5"), UsageError);
  EXPECT_THROW(parse_range("0.5:0:0.1"), UsageError);
  EXPECT_THROW(parse_range("a:b:c"), UsageError);
}

TEST(CliConfig, JsonRoundTripAndUnknownKeys) {
  ExperimentConfig cfg;
  cfg.command = "vsv run";
  cfg.state = "xmems";
  cfg.gamma = 0.3;
  cfg.seed = 42;
  ExperimentConfig copy;
  copy.merge_json(cfg.to_json());
  EXPECT_EQ(copy.to_json().dump(), [&] {
    json j = cfg.to_json();
    j["command"] = "";
    return j.dump();
  }());
  EXPECT_THROW(copy.merge_json(json{{"budgett", 3}}), UsageError);
  EXPECT_THROW(copy.merge_json(json{{"n", "two"}}), UsageError);
}

TEST(CliVsv, GhzTwoWritesAllOutputs) {
  const fs::path dir = fresh_dir("vsv");
  const CliRun r = invoke({"vsv", "run", "--state", "ghz", "--n", "2", "--budget", "5000", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"trace.csv", "sweep.csv", "summary.json", "ensemble.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const json summary = load_json(dir / "summary.json");
  expect_schema_valid(summary);
  EXPECT_EQ(summary["command"], "vsv run");
  EXPECT_LE(summary["results"][0]["gap"].get<double>(), 1e-3);
  EXPECT_NEAR(summary["results"][0]["reference"].get<double>(), 1.0 / 3.0, 1e-15);
  const std::string trace = slurp(dir / "trace.csv");
  EXPECT_EQ(trace.rfind("# config: ", 0), 0u);
  const auto rows = csv_rows(dir / "trace.csv");
  EXPECT_EQ(rows[0][0], "point");
  EXPECT_EQ(rows.size(), 5001u);
  // Every config key is reported with its source.
  EXPECT_NE(r.err.find("config budget=5000 (cli)"), std::string::npos);
  EXPECT_NE(r.err.find("config shots=8192 (default)"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CliVsv, XmemsSweepMatchesClosedForm) {
  const fs::path dir = fresh_dir("sweep");
  const CliRun r = invoke({"vsv", "run", "--state", "xmems", "--n", "2", "--gamma-range", "0:0.5:0.1", "--budget",
                     "4000", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(dir / "sweep.csv");
  ASSERT_EQ(rows.size(), 7u);
  const std::size_t g = column(rows[0], "gamma");
  const std::size_t gap = column(rows[0], "gap");
  const std::size_t hse = column(rows[0], "hse");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(std::stod(rows[i][gap]), 1e-3) << rows[i][g];
    EXPECT_NEAR(std::stod(rows[i][hse]), xmems_css_2q(std::stod(rows[i][g])).hse, 1e-3);
  }
  fs::remove_all(dir);
}

TEST(CliVsv, RerunFromEmbeddedConfigReproduces) {
  const fs::path dir = fresh_dir("rerun");
  ASSERT_EQ(invoke({"vsv", "run", "--state", "xmems", "--n", "3", "--gamma", "0.4", "--budget", "800", "--seed", "5",
                 "--out", dir.string()})
                .code,
            0);
  const json first = load_json(dir / "summary.json");
  const fs::path cfg = dir.string() + "_config.json";
  {
    std::ofstream os(cfg);
    os << first["config"].dump();
  }
  const fs::path dir2 = fresh_dir("rerun2");
  ASSERT_EQ(invoke({"vsv", "run", "--config", cfg.string(), "--out", dir2.string()}).code, 0);
  const json second = load_json(dir2 / "summary.json");
  EXPECT_EQ(first["results"][0]["hse"], second["results"][0]["hse"]);
  fs::remove_all(dir);
  fs::remove_all(dir2);
  fs::remove(cfg);
}

TEST(CliVsv, CommandLineOverridesConfigFile) {
  const fs::path dir = fresh_dir("prec");
  const fs::path cfg = dir.string() + "_config.json";
  {
    std::ofstream os(cfg);
    os << json{{"budget", 300}, {"seed", 1}, {"tag", "file"}}.dump();
  }
  const CliRun r = invoke({"vsv", "run", "--config", cfg.string(), "--seed", "7", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json c = load_json(dir / "summary.json")["config"];
  EXPECT_EQ(c["budget"], 300);
  EXPECT_EQ(c["seed"], 7);
  EXPECT_EQ(c["tag"], "file");
  EXPECT_EQ(c["shots"], 8192);
  EXPECT_NE(r.err.find("config seed=7 (cli)"), std::string::npos);
  EXPECT_NE(r.err.find("config budget=300 (config)"), std::string::npos);
  fs::remove_all(dir);
  fs::remove(cfg);
}

TEST(CliVsv, InvalidConfigLeavesNoFiles) {
  const fs::path dir = fresh_dir("bad");
  EXPECT_EQ(invoke({"vsv", "run", "--n", "9", "--out", dir.string()}).code, 1);
  EXPECT_EQ(invoke({"vsv", "run", "--state", "ghz", "--gamma", "0.2", "--out", dir.string()}).code, 1);
  EXPECT_EQ(invoke({"vsv", "run", "--state", "xmems", "--gamma", "0.7", "--out", dir.string()}).code, 1);
  EXPECT_EQ(invoke({"vsv", "run", "--mode", "noisy", "--out", dir.string()}).code, 1);
  EXPECT_EQ(invoke({"vsv", "run", "--s-components", "17", "--out", dir.string()}).code, 1);
  EXPECT_EQ(invoke({"vsv", "run", "--bogus", "--out", dir.string()}).code, 1);
  EXPECT_EQ(invoke({"vsv"}).code, 1);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(CliVsv, StateFileInputAndRejection) {
  const fs::path dir = fresh_dir("file");
  const fs::path good = dir.string() + "_bell.json";
  const fs::path bad = dir.string() + "_bad.json";
  const double h = 0.5;
  {
    std::ofstream os(good);
    os << json{{"n", 2}, {"re", {h, 0, 0, h, 0, 0, 0, 0, 0, 0, 0, 0, h, 0, 0, h}}, {"im", std::vector<double>(16, 0.0)}}
              .dump();
    std::ofstream ob(bad);
    ob << json{{"n", 1}, {"re", {0.5, 0.3, 0.0, 0.5}}, {"im", {0, 0, 0, 0}}}.dump();
  }
  const CliRun r = invoke({"vsv", "run", "--state", "file", "--state-file", good.string(), "--budget", "3000", "--out",
                     dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(load_json(dir / "summary.json")["results"][0]["hse"].get<double>(), 1.0 / 3.0, 1e-3);
  const fs::path dir2 = fresh_dir("file2");
  EXPECT_EQ(invoke({"vsv", "run", "--state", "file", "--state-file", bad.string(), "--out", dir2.string()}).code, 1);
  EXPECT_FALSE(fs::exists(dir2));
  fs::remove_all(dir);
  fs::remove(good);
  fs::remove(bad);
}

TEST(CliVsv, ShotModeImprovesLessOftenThanExact) {
  const fs::path de = fresh_dir("exact4");
  const fs::path ds = fresh_dir("shots4");
  ASSERT_EQ(invoke({"vsv", "run", "--n", "4", "--budget", "200", "--out", de.string()}).code, 0);
  ASSERT_EQ(invoke({"vsv", "run", "--n", "4", "--budget", "200", "--mode", "shots", "--shots", "8192", "--out",
                 ds.string()})
                .code,
            0);
  const json e = load_json(de / "summary.json");
  const json s = load_json(ds / "summary.json");
  expect_schema_valid(s);
  EXPECT_LT(s["results"][0]["improvements"].get<int>(), e["results"][0]["improvements"].get<int>());
  fs::remove_all(de);
  fs::remove_all(ds);
}

TEST(CliReference, TableProperties) {
  const fs::path dir = fresh_dir("ref");
  const CliRun r = invoke({"reference", "table", "--n-range", "2:9", "--gamma-range", "0:0.5:0.05", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  expect_schema_valid(load_json(dir / "summary.json"));
  const auto rows = csv_rows(dir / "reference.csv");
  const auto& head = rows[0];
  const std::vector<std::string> expected = {"n", "gamma", "hse", "a", "b", "abs_delta", "bound_2gamma_sq"};
  EXPECT_EQ(head, expected);
  std::map<std::string, std::vector<double>> by_gamma;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double g = std::stod(rows[i][1]);
    const double hse = std::stod(rows[i][2]);
    EXPECT_LE(hse, std::stod(rows[i][6]) + 1e-12);
    if (g == 0.0) EXPECT_EQ(hse, 0.0);
    if (rows[i][0] == "2" && std::abs(g - 0.5) < 1e-12) EXPECT_NEAR(hse, 1.0 / 3.0, 1e-12);
    by_gamma[rows[i][1]].push_back(hse);
  }
  EXPECT_EQ(rows.size(), 1u + 8u * 11u);
  for (const auto& [g, values] : by_gamma)
    for (std::size_t k = 1; k < values.size(); ++k) EXPECT_GE(values[k], values[k - 1] - 1e-12) << g;
  EXPECT_EQ(invoke({"reference", "table", "--n-range", "2:10", "--out", fresh_dir("ref2").string()}).code, 1);
  fs::remove_all(dir);
}

TEST(CliQga, BellTraceAndReproducibility) {
  const fs::path a = fresh_dir("qga_a");
  const fs::path b = fresh_dir("qga_b");
  for (const auto& d : {a, b})
    ASSERT_EQ(invoke({"qga", "run", "--state", "ghz", "--n", "2", "--trials", "10000", "--budget", "500", "--seed", "3",
                   "--out", d.string()})
                  .code,
              0);
  const auto rows = csv_rows(a / "qga_trace.csv");
  const std::size_t hsd = column(rows[0], "hsd");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(std::stod(rows[i][hsd]), 1.0 / 3.0);
    if (i > 1) EXPECT_LT(std::stod(rows[i][hsd]), std::stod(rows[i - 1][hsd]));
  }
  const json summary = load_json(a / "summary.json");
  expect_schema_valid(summary);
  EXPECT_NEAR(summary["modeled_calls_at_1e6_trials"].get<double>() / 3.3e10, 1.0, 0.1);
  // The config line embeds the output directory, so compare from line two on.
  auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
  EXPECT_EQ(body(slurp(a / "qga_trace.csv")), body(slurp(b / "qga_trace.csv")));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CliWitness, GhzTwoWitnessDetectsEntanglement) {
  const fs::path dir = fresh_dir("wit");
  ASSERT_EQ(invoke({"witness", "build", "--state", "ghz", "--n", "2", "--budget", "100", "--out", dir.string()}).code, 0);
  const json summary = load_json(dir / "summary.json");
  expect_schema_valid(summary);
  EXPECT_LT(summary["results"][0]["expectation_rho"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir / "witness.json"));
  fs::remove_all(dir);
}

TEST(CliAtomic, FailedCommitRemovesTemporaries) {
  const fs::path dir = fresh_dir("atomic");
  fs::create_directories(dir / "summary.json");  // a directory blocks the rename
  fs::create_directories(dir / "summary.json" / "x");
  AtomicOutputs outputs(dir);
  outputs.add("a.csv", "1\n");
  outputs.add("summary.json", "{}\n");
  EXPECT_ANY_THROW(outputs.commit());
  EXPECT_FALSE(fs::exists(dir / "a.csv"));
  for (const auto& entry : fs::directory_iterator(dir))
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos) << entry.path();
  fs::remove_all(dir);
}
