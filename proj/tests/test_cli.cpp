#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dlab/experiments.hpp"
#include "dlab/io.hpp"

using namespace dlab;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dlab_test_cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code = -1;
  std::string log;
};

Run run_cli(const std::string& args) {
  const fs::path log = kWork / "log.txt";
  const std::string cmd = std::string(DLAB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.log = slurp(log);
  return r;
}

ojson read_json(const fs::path& p) { return ojson::parse(slurp(p)); }

const char* kGolden = R"({"irrational": {"tag": "golden", "approx": 0.6180339887498949}})";

}  // namespace

TEST_CASE("phase and matrix JSON round trips") {
  for (const auto& e : {PhaseEntry::rational(3, 8), PhaseEntry::floating(0.25),
                        PhaseEntry::irrational("g", 0.618, 2, Rational(1, 3))}) {
    auto back = phase_entry_from_json(to_json(e), "e");
    CHECK(back.kind == e.kind);
    CHECK(back.value == e.value);
    CHECK(back.offset == e.offset);
    CHECK(back.coeff == e.coeff);
  }
  CMatrix m(2, 2);
  m << cplx(1, 2), cplx(-0.1, 0), cplx(1e-300, 3), cplx(0, -1);
  CHECK(matrix_from_json(to_json(m), "m") == m);
  CHECK(number(NAN).is_null());
  CHECK(number(INFINITY).is_null());
  CHECK_THROWS_AS(phase_entry_from_json(ojson::parse(R"({"rational": [1, 0]})"), "theta.upper[0]"), ConfigError);
  CHECK_THROWS_AS(tuple_from_json(ojson::parse("[[[1, 0]], [[1, 0], [0, 1]]]"), "t"), ConfigError);
}

TEST_CASE("dilate: Weyl pair against a nearby phase") {
  // r = e^{2 pi i/8}; the float phase puts q at chordal distance 0.01 from r.
  const double turns = 1.0 / 8 + std::asin(0.005) / M_PI;
  std::ostringstream cfg;
  cfg.precision(17);
  cfg << R"({"theta": {"d": 2, "upper": [{"float": )" << turns
      << R"(}]}, "tuple": {"generator": "weyl", "base": {"d": 2, "upper": [{"rational": [1, 8]}]}}})";
  auto path = write_config("weyl8.json", cfg.str());
  auto out = kWork / "weyl8";
  fs::remove_all(out);
  auto r = run_cli("dilate --config " + path.string() + " --out " + out.string() + " --format both");
  REQUIRE(r.code == 0);
  auto j = read_json(out / "dilate.json");
  auto cert = j["runs"][0]["certificate"];
  CHECK(cert["delta"].get<double>() == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(cert["errorSum"].get<double>() < 0.1);
  const std::string summary = slurp(out / "dilate_summary.csv");
  CHECK(summary.rfind("seed,delta,N,L,stepErrors,errorSum,totalError,verdict\n", 0) == 0);
  CHECK(summary.find(",pass\n") != std::string::npos);
  CHECK(slurp(out / "dilate.csv").rfind("seed,step,claimName,claimed,measured,pass\n", 0) == 0);
}

TEST_CASE("dilate: exact input gives pure window terms") {
  auto path = write_config("exact.json", R"({"theta": {"d": 2, "upper": [{"rational": [1, 5]}]},
      "tuple": {"generator": "weyl"}, "truncation": {"N": 3}})");
  auto out = kWork / "exact";
  auto r = run_cli("dilate --config " + path.string() + " --out " + out.string());
  REQUIRE(r.code == 0);
  auto step = read_json(out / "dilate.json")["runs"][0]["certificate"]["steps"][0];
  CHECK(step["errors"][1].get<double>() == doctest::Approx(1.0 / 7).epsilon(1e-12));
  CHECK(step["errors"][0].get<double>() <= 1e-12);
}

TEST_CASE("configuration errors exit 1 and name the entry") {
  auto path = write_config("bad.json", R"({"theta": {"d": 3, "upper": [{"rational": [1, 2]}, {"float": "x"},
      {"rational": [1, 2]}]}, "tuple": {"generator": "weyl"}})");
  auto r = run_cli("dilate --config " + path.string() + " --out " + (kWork / "bad").string());
  CHECK(r.code == 1);
  CHECK(r.log.find("theta.upper[1].float") != std::string::npos);

  CHECK(run_cli("dilate --config " + (kWork / "missing.json").string()).code == 1);
  CHECK(run_cli("dilate").code == 1);
  auto wrong = write_config("wrong.json", R"({"command": "torus", "theta": {"d": 1, "upper": []}})");
  CHECK(run_cli("dilate --config " + wrong.string()).code == 1);
}

TEST_CASE("torus verdicts") {
  auto path = write_config("third.json", R"({"theta": {"d": 2, "upper": [{"rational": [1, 3]}]}})");
  auto out = kWork / "torus";
  REQUIRE(run_cli("torus --config " + path.string() + " --out " + out.string()).code == 0);
  auto j = read_json(out / "torus.json");
  CHECK(j["verdict"] == "non-ergodic");
  CHECK(j["witness"].size() == 2);
  CHECK(j.contains("etaQ"));
  CHECK(j.contains("Neta"));
  CHECK(j.contains("plan"));

  auto golden = write_config("golden.json", std::string(R"({"theta": {"d": 2, "upper": [)") + kGolden +
                                                R"(]}, "eta": 0.1, "epsilon": 1.5})");
  REQUIRE(run_cli("torus --config " + golden.string() + " --out " + out.string()).code == 0);
  j = read_json(out / "torus.json");
  CHECK(j["verdict"] == "ergodic");
  CHECK(j["plan"]["eta"].get<double>() < 1.5 * 1.5 / 200);
}

TEST_CASE("mrange reports and exit codes") {
  auto path = write_config("member.json", R"({"task": "membership", "seed": 5,
      "source": {"generator": "haar", "d": 2, "dim": 4}, "target": {"compression": {"dim": 2}}})");
  auto out = kWork / "mrange";
  REQUIRE(run_cli("mrange --config " + path.string() + " --out " + out.string()).code == 0);
  auto j = read_json(out / "mrange.json");
  CHECK(j["status"] == "member");
  CHECK(j["residual"].get<double>() <= 1e-7);
  for (const char* key : {"level", "status", "residual", "certificate", "samplingMeta"}) CHECK(j.contains(key));

  auto outside = write_config("outside.json", R"({"task": "membership", "seed": 5,
      "source": {"generator": "haar", "d": 2, "dim": 4},
      "target": {"compression": {"dim": 2, "scaleFirstTo": 1.2}}})");
  REQUIRE(run_cli("mrange --config " + outside.string() + " --out " + out.string()).code == 0);
  j = read_json(out / "mrange.json");
  CHECK(j["status"] == "non-member");
  CHECK(j["certificate"]["gap"].get<double>() > kCertificateGap);

  // A tolerance below rounding with a one-step budget cannot be decided.
  auto starved = write_config("starved.json", R"({"task": "membership", "seed": 5, "maxIter": 1,
      "source": {"generator": "haar", "d": 2, "dim": 4}, "target": {"compression": {"dim": 3}}})");
  auto r = run_cli("mrange --config " + starved.string() + " --out " + out.string() + " --tol 1e-30");
  CHECK(r.code == 2);
  CHECK(read_json(out / "mrange.json")["status"] == "undecided");
}

TEST_CASE("missing output directory is created and logged") {
  auto path = write_config("third.json", R"({"theta": {"d": 2, "upper": [{"rational": [1, 3]}]}})");
  auto out = kWork / "fresh" / "nested";
  fs::remove_all(kWork / "fresh");
  auto r = run_cli("torus --config " + path.string() + " --out " + out.string() + " --format csv");
  CHECK(r.code == 0);
  CHECK(r.log.find("created output directory") != std::string::npos);
  CHECK(fs::exists(out / "torus.csv"));
  CHECK(!fs::exists(out / "torus.json"));
}

TEST_CASE("demo-main2") {
  auto path = write_config("demo.json", std::string(R"({"n": 34, "epsilon": 2.0, "gamma": )") + kGolden + "}");
  auto a = kWork / "demo_a", b = kWork / "demo_b";
  REQUIRE(run_cli("demo-main2 --config " + path.string() + " --out " + a.string() + " --seed 9").code == 0);
  REQUIRE(run_cli("demo-main2 --config " + path.string() + " --out " + b.string() + " --seed 9").code == 0);
  CHECK(slurp(a / "demo-main2.json") == slurp(b / "demo-main2.json"));
  auto j = read_json(a / "demo-main2.json");
  CHECK(j["allPass"] == true);
  CHECK(j["r"]["rational"][0] == 21);
  CHECK(j["formulaValue"].get<double>() > 0.0);

  // epsilon above 2 still emits the ledger.
  auto big = write_config("demo_big.json", std::string(R"({"n": 13, "epsilon": 3.0, "gamma": )") + kGolden + "}");
  REQUIRE(run_cli("demo-main2 --config " + big.string() + " --out " + a.string()).code == 0);
  CHECK(read_json(a / "demo-main2.json")["plan"]["trivial"] == true);

  // Shift and diagonal pair on a ring.
  auto sd = write_config("demo_sd.json", std::string(R"({"n": 21, "pair": "shift_diagonal", "ring": 42,
      "gamma": )") + kGolden + "}");
  REQUIRE(run_cli("demo-main2 --config " + sd.string() + " --out " + a.string()).code == 0);
  CHECK(read_json(a / "demo-main2.json")["allPass"] == true);

  // A rational target is not ergodic.
  auto rat = write_config("demo_rat.json", R"({"n": 34, "gamma": {"rational": [1, 3]}})");
  auto r = run_cli("demo-main2 --config " + rat.string() + " --out " + a.string());
  CHECK(r.code == 1);
  CHECK(r.log.find("non-ergodic") != std::string::npos);
}

TEST_CASE("seed sweeps are ordered and reproducible") {
  const std::string theta = R"({"d": 3, "upper": [{"rational": [1, 2]}, {"rational": [0, 1]}, {"rational": [1, 2]}]})";
  auto path = write_config("sweep.json", R"({"seeds": [4, 2, 7], "theta": )" + theta +
                                             R"(, "tuple": {"generator": "random_almost", "base": )" + theta +
                                             R"(, "dim": 4, "delta": 0.01}})");
  auto a = kWork / "sweep_a", b = kWork / "sweep_b";
  REQUIRE(run_cli("dilate --config " + path.string() + " --out " + a.string() + " --format both").code == 0);
  REQUIRE(run_cli("dilate --config " + path.string() + " --out " + b.string() + " --format both").code == 0);
  CHECK(slurp(a / "dilate.json") == slurp(b / "dilate.json"));
  CHECK(slurp(a / "dilate.csv") == slurp(b / "dilate.csv"));
  auto runs = read_json(a / "dilate.json")["runs"];
  REQUIRE(runs.size() == 3);
  CHECK(runs[0]["seed"] == 4);
  CHECK(runs[2]["seed"] == 7);
  for (const auto& run : runs) CHECK(run["certificate"]["totalError"].get<double>() < 0.2);
}
