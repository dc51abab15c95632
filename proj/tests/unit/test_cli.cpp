#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "commands.hpp"
#include "model_io.hpp"
#include "output.hpp"
#include "weylscope/bloch.hpp"
#include "weylscope/errors.hpp"

using weylscope::cli::run;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// CSV data rows (after the header), split into cells.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  bool header = false;
  for (const auto& line : lines(text)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string without_manifest(const std::string& text) {
  std::string out;
  for (const auto& line : lines(text)) {
    if (line.rfind("# manifest ", 0) == 0 || line.find("\"wall_time_s\"") != std::string::npos) continue;
    out += line + '\n';
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("weylscope-cli-" + std::to_string(::getpid()) + "-" +
                                         std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = "") const {
    const fs::path p = path_ / name;
    if (!content.empty()) std::ofstream(p) << content;
    return p.string();
  }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

const char* kMinimalFile = R"({
  "bands": 2,
  "terms": [
    {"r": [0, 0, 0], "matrix": [[2, 0], [0, -2]]},
    {"r": [1, 0, 0], "matrix": [[-0.5, [0, -0.5]], [[0, -0.5], 0.5]]},
    {"r": [0, 1, 0], "matrix": [[-0.5, -0.5], [0.5, 0.5]]},
    {"r": [0, 0, 1], "matrix": [[-0.5, 0], [0, 0.5]]}
  ]
})";

}  // namespace

TEST_CASE("angle expressions") {
  using weylscope::cli::parse_angle;
  CHECK(parse_angle("pi") == doctest::Approx(weylscope::kPi));
  CHECK(parse_angle("-pi/2") == doctest::Approx(-weylscope::kPi / 2));
  CHECK(parse_angle("3pi/4") == doctest::Approx(3 * weylscope::kPi / 4));
  CHECK(parse_angle("0.25*pi+0.1") == doctest::Approx(weylscope::kPi / 4 + 0.1));
  CHECK(parse_angle("1e-3") == doctest::Approx(1e-3));
  CHECK_THROWS_AS(parse_angle("pie"), weylscope::UsageError);
  CHECK_THROWS_AS(parse_angle(""), weylscope::UsageError);
}

TEST_CASE("number formatting") {
  using weylscope::cli::format_number;
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("bands closes the gap at the node") {
  const auto r = cli({"bands", "--model", "minimal", "--t", "0", "--path", "0,0,0:0,0,pi", "--samples", "1001"});
  REQUIRE(r.code == 0);
  const auto first = lines(r.out).at(0);
  CHECK(first.rfind("# manifest {", 0) == 0);
  CHECK(json::parse(first.substr(11))["command"] == "bands");
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1001);
  double min_gap = 1e9, at = 0.0;
  for (const auto& row : rows) {
    const double gap = std::stod(row[5]) - std::stod(row[4]);
    if (gap < min_gap) {
      min_gap = gap;
      at = std::stod(row[3]);
    }
  }
  CHECK(min_gap < 1e-6);
  CHECK(at == doctest::Approx(weylscope::kPi / 2).epsilon(1e-9));

  const auto gapped = csv_rows(cli({"bands", "--model", "minimal:t=2", "--samples", "101"}).out);
  for (const auto& row : gapped) CHECK(std::stod(row[5]) - std::stod(row[4]) > 0.5);

  const auto flat = csv_rows(cli({"bands", "--model", "sigma3", "--samples", "11"}).out);
  for (const auto& row : flat) {
    CHECK(row[4] == "-1");
    CHECK(row[5] == "1");
  }
}

TEST_CASE("find-nodes output") {
  const auto r = cli({"find-nodes", "--model", "minimal", "--t", "0"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(nlohmann::ordered_json::parse(r.out).begin().key() == "manifest");
  REQUIRE(doc["nodes"].size() == 2);
  CHECK(doc["total_charge"] == 0);
  for (const auto& n : doc["nodes"]) {
    const double z = n["position"][2];
    CHECK(std::abs(std::abs(z) - weylscope::kPi / 2) < 1e-6);
    CHECK(n["chirality"] == (z > 0 ? 1 : -1));
  }
  const json none = json::parse(cli({"find-nodes", "--model", "minimal:t=2"}).out);
  CHECK(none["nodes"].empty());

  const auto csv = cli({"find-nodes", "--model", "minimal", "--csv"});
  CHECK(csv_rows(csv.out).size() == 2);
}

TEST_CASE("model files") {
  TempDir dir;
  const std::string path = dir.file("minimal.json", kMinimalFile);
  const auto from_file = cli({"find-nodes", "--model", path});
  const auto builtin = cli({"find-nodes", "--model", "minimal:t=0"});
  REQUIRE(from_file.code == 0);
  CHECK(json::parse(from_file.out)["nodes"] == json::parse(builtin.out)["nodes"]);

  // Round trip through validate-model.
  const auto validated = cli({"validate-model", "--model", path});
  REQUIRE(validated.code == 0);
  json doc = json::parse(validated.out);
  CHECK(doc["summary"]["valid"] == true);
  CHECK(doc["summary"]["stored_terms"] == 7);
  doc.erase("manifest");
  doc.erase("summary");
  const auto again = weylscope::cli::parse_model(doc.dump());
  CHECK(weylscope::cli::models_equal(again, weylscope::minimal_model(0.0), 1e-15));

  const std::string broken = dir.file("broken.json", "{\n  \"bands\": 2,\n  \"terms\": [ {\"r\": [0,0,0] \n}");
  const auto bad = cli({"find-nodes", "--model", broken});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("parse_error") != std::string::npos);
  CHECK(bad.err.find("line ") != std::string::npos);
  CHECK(lines(bad.err).size() == 1);
  CHECK(bad.out.empty());

  const std::string wrong = dir.file("wrong.json", R"({"bands": 2, "terms": [{"r": [0, 0], "matrix": [[1, 0], [0, 1]]}]})");
  const auto field = cli({"validate-model", "--model", wrong});
  CHECK(field.code == 3);
  CHECK(field.err.find("/terms/0/r") != std::string::npos);

  CHECK(cli({"find-nodes", "--model", path, "--t", "0.5"}).code == 2);
  CHECK(cli({"find-nodes", "--model", dir.file("missing.json")}).code == 2);
}

TEST_CASE("chern-profile output") {
  const auto r = cli({"chern-profile", "--model", "minimal", "--t", "0", "--json"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  REQUIRE(doc["profile"].size() == 16);
  for (const auto& p : doc["profile"]) {
    const double a = p["angle"];
    CHECK(p["chern"] == (std::abs(a) < weylscope::kPi / 2 ? -1 : 0));
  }
  CHECK(doc["dirac_string"]["segments"].size() == 1);

  TempDir dir;
  const std::string string_file = dir.file("string.json");
  const auto csv = cli({"chern-profile", "--model", "minimal", "--string-out", string_file});
  REQUIRE(csv.code == 0);
  CHECK(csv_rows(csv.out).size() == 16);
  std::ifstream in(string_file);
  const json string_doc = json::parse(in);
  CHECK(string_doc.contains("manifest"));
  CHECK(string_doc["dirac_string"]["segments"].size() == 1);

  const auto bad_axis = cli({"chern-profile", "--model", "minimal", "--axis", "5"});
  CHECK(bad_axis.code == 2);
  CHECK(bad_axis.err.rfind("error: ", 0) == 0);
}

TEST_CASE("fermi-arc output") {
  const auto r = cli({"fermi-arc", "--model", "minimal:t=0", "--grid", "32", "--depth", "30"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  int top = 0;
  for (const auto& row : rows) {
    if (row[0] == "top") ++top;
    CHECK(std::abs(std::stod(row[3])) < 0.05);
    CHECK(std::stod(row[4]) > 0.5);
  }
  CHECK(top > 0);
  int projected = 0;
  for (const auto& line : lines(r.out)) projected += line.rfind("# projected_node ", 0) == 0;
  CHECK(projected == 2);

  CHECK(csv_rows(cli({"fermi-arc", "--model", "sigma3", "--grid", "8", "--depth", "6"}).out).empty());
  CHECK(cli({"fermi-arc", "--model", "minimal", "--depth", "3"}).code == 2);
}

TEST_CASE("spectral-flow output") {
  const auto r = cli({"spectral-flow", "--model", "minimal", "--loop", "circle:0,pi/2,0.4"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(std::abs(doc["flow"].get<int>()) == 1);
  CHECK(doc["flow"] == doc["torus_chern"]);
  const json back =
      json::parse(cli({"spectral-flow", "--model", "minimal", "--loop", "circle:0,pi/2,0.4", "--reverse"}).out);
  CHECK(back["flow"] == -doc["flow"].get<int>());

  const json line = json::parse(cli({"spectral-flow", "--model", "minimal", "--loop", "line:1,0"}).out);
  CHECK(line["flow"] == -1);

  const auto through = cli({"spectral-flow", "--model", "minimal", "--loop", "circle:0,1.2,0.37"});
  CHECK(through.code == 4);
  CHECK(through.err.find("loop_near_node") != std::string::npos);
  CHECK(cli({"spectral-flow", "--model", "minimal", "--loop", "square:1"}).code == 2);
  CHECK(cli({"spectral-flow", "--model", "minimal", "--loop", "circle:0,pi/2,0.4", "--steps", "10"}).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"bands"}).code == 2);
  CHECK(cli({"bands", "--model", "minimal", "--json", "--csv"}).code == 2);
  CHECK(cli({"bands", "--model", "nonsense:t=1"}).code == 2);
  CHECK(cli({"validate-model", "--model", "minimal", "--csv"}).code == 2);
  CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("output is deterministic and independent of the thread count") {
  const std::vector<std::string> commands[] = {
      {"bands", "--model", "two-pair", "--samples", "50"},
      {"find-nodes", "--model", "two-pair:t=0.1"},
      {"fermi-arc", "--model", "minimal", "--grid", "16", "--depth", "20"},
  };
  for (const auto& args : commands) {
    CAPTURE(args[0]);
    ::setenv("WEYLSCOPE_THREADS", "1", 1);
    const auto one = cli(args);
    const auto repeat = cli(args);
    ::setenv("WEYLSCOPE_THREADS", "2", 1);
    const auto two = cli(args);
    ::unsetenv("WEYLSCOPE_THREADS");
    REQUIRE(one.code == 0);
    CHECK(without_manifest(one.out) == without_manifest(repeat.out));
    CHECK(without_manifest(one.out) == without_manifest(two.out));
  }
  ::setenv("WEYLSCOPE_THREADS", "lots", 1);
  CHECK(cli({"bands", "--model", "minimal"}).code == 2);
  ::unsetenv("WEYLSCOPE_THREADS");
}

TEST_CASE("--out writes a file only on success") {
  TempDir dir;
  const std::string target = dir.file("nodes.json");
  REQUIRE(cli({"find-nodes", "--model", "minimal", "--out", target}).code == 0);
  std::ifstream in(target);
  CHECK(json::parse(in)["nodes"].size() == 2);

  const std::string failed = dir.file("failed.json");
  CHECK(cli({"spectral-flow", "--model", "minimal", "--loop", "circle:0,1.2,0.37", "--out", failed}).code == 4);
  CHECK_FALSE(fs::exists(failed));
}
