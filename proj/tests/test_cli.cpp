#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "npot/potential.hpp"

using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("NPOT_CLI");
  REQUIRE_MESSAGE(p != nullptr, "NPOT_CLI must point at the CLI binary");
  return p;
}

std::string preset_dir() {
  const char* p = std::getenv("NPOT_PRESET_DIR");
  REQUIRE_MESSAGE(p != nullptr, "NPOT_PRESET_DIR must point at the presets");
  return p;
}

int run(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

const char* kTmp = "/tmp/npot_cli_test";

}  // namespace

TEST_CASE("exit codes") {
  std::filesystem::create_directories(kTmp);
  CHECK(run("--help") == 0);
  CHECK(run("bogus-subcommand") != 0);
  CHECK(run("dn --in /nonexistent.json") == 2);

  write_file(std::string(kTmp) + "/bad.json", "{not json");
  CHECK(run("dn --in " + std::string(kTmp) + "/bad.json") == 2);

  // hypothesis failure: the autonomous route needs a(0) = 0
  write_file(std::string(kTmp) + "/auto_bad.json", R"({
    "system": {"n":3, "m":1, "N":1, "alpha":0.5,
               "rhs":["u1 + 1"], "autonomous":true},
    "config": {"R":1.0, "gamma":1.0, "max_iters":5, "tol":1e-5, "level":4}
  })");
  CHECK(run("solve --preset " + std::string(kTmp) + "/auto_bad.json") == 2);

  // missing keys in the system block must also exit 2, not crash
  write_file(std::string(kTmp) + "/missing_key.json", R"({
    "system": {"n":3, "m":1, "alpha":0.5, "rhs":["u1"], "autonomous":false},
    "config": {"R":0.5, "gamma":0.5, "max_iters":5, "tol":1e-5, "level":4}
  })");
  CHECK(run("solve --preset " + std::string(kTmp) + "/missing_key.json") == 2);
}

TEST_CASE("verify suites succeed and report passing checks") {
  std::string out = std::string(kTmp) + "/annulus.json";
  CHECK(run("verify annulus --out " + out) == 0);
  json r = read_json(out);
  REQUIRE(r.contains("checks"));
  bool saw_negative_control = false;
  for (const auto& c : r["checks"]) {
    CHECK(c["pass"].get<bool>());
    std::string name = c["name"].get<std::string>();
    if (name.find("negative control") != std::string::npos)
      saw_negative_control = true;
  }
  CHECK(saw_negative_control);
}

TEST_CASE("dn matches the closed-form polynomial potential") {
  std::string in = std::string(kTmp) + "/dn_in.json";
  std::string out = std::string(kTmp) + "/dn_out.json";
  write_file(in, R"({"field": {"kind": "polynomial", "dim": 3,
    "terms": [{"idx": [2, 1, 0], "c": 1.0}]},
    "beta": [2, 1, 0], "x": [0.2, -0.1, 0.1], "level": 12})");
  REQUIRE(run("dn --in " + in + " --out " + out) == 0);
  json r = read_json(out);

  npot::Polynomial p =
      npot::Polynomial::monomial(npot::MultiIndex({2, 1, 0}), 1.0);
  double exact = npot::newtonian_polynomial(p, 1.0)
                     .derivative(npot::MultiIndex({2, 1, 0}))
                     .eval(npot::Vec{0.2, -0.1, 0.1});
  CHECK(r["value"].get<double>() == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("pv agrees with dn plus the jump correction on a bump") {
  std::string in = std::string(kTmp) + "/pv_in.json";
  std::string pv_out = std::string(kTmp) + "/pv_out.json";
  std::string dn_out = std::string(kTmp) + "/dn_bump_out.json";
  write_file(in, R"({"field": {"kind": "bump", "center": [0.1, 0.0, 0.0],
    "radius": 0.4}, "beta": [1, 1, 0], "x": [0.15, 0.05, 0.0], "level": 12})");
  REQUIRE(run("pv --in " + in + " --out " + pv_out) == 0);
  REQUIRE(run("dn --in " + in + " --out " + dn_out) == 0);
  double pv = read_json(pv_out)["value"].get<double>();
  double dn = read_json(dn_out)["value"].get<double>();
  // off-diagonal second derivative: the delta correction vanishes, pv = dn
  CHECK(pv == doctest::Approx(dn).epsilon(1e-3).scale(1e-3));
}

TEST_CASE("constants table carries the raw first moment") {
  std::string out = std::string(kTmp) + "/constants.json";
  REQUIRE(run("constants --n 3 --max-order 2 --out " + out) == 0);
  json r = read_json(out);
  REQUIRE(r.contains("constants"));
  bool found = false;
  for (const auto& row : r["constants"]) {
    if (row["convention"] == "RAW" && row["beta"] == json::array({0, 0, 0})) {
      CHECK(row["value"].get<double>() ==
            doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-8));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("solver preset runs and the report is deterministic") {
  std::string r1 = std::string(kTmp) + "/rep1.json";
  std::string r2 = std::string(kTmp) + "/rep2.json";
  std::string f1 = std::string(kTmp) + "/f1.csv";
  std::string f2 = std::string(kTmp) + "/f2.csv";
  std::string preset = preset_dir() + "/laplace_usq.json";
  REQUIRE(run("solve --preset " + preset + " --out " + r1 + " --field " + f1) == 0);
  REQUIRE(run("solve --preset " + preset + " --out " + r2 + " --field " + f2) == 0);
  CHECK(read_file(r1) == read_file(r2));
  CHECK(read_file(f1) == read_file(f2));

  json rep = read_json(r1);
  REQUIRE(rep.contains("report"));
  CHECK(rep["report"]["converged"].get<bool>());
  CHECK(rep["report"]["residual_rel"].get<double>() < 1e-2);
  REQUIRE(rep.contains("manifest"));
  CHECK(rep["manifest"]["version"].get<std::string>().rfind("npot", 0) == 0);
}
