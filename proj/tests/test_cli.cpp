#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/cli.hpp"
#include "fluidq/spec_io.hpp"

namespace fs = std::filesystem;
using namespace fluidq;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("fluidq_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"fluidq"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

const char* kClassicScalar = R"({
  "kind": "classic",
  "Tpp": [[-2]], "Tpm": [[2]], "Tmp": [[1]], "Tmm": [[-1]],
  "T0mm": [[-1]], "T0mp": [[1]]
})";

const char* kMm1Jumps = R"({
  "kind": "jumps", "C": 1, "n_minus": 1,
  "Tmm": [[[-1]], [[-1]]],
  "ph": [{"color": 1, "type": 1, "alpha": [1], "U": [[-2]]}],
  "rules": [
    {"from": 0, "to": 1, "type": 1, "matrix": [[1]]},
    {"from": 1, "to": 1, "type": 1, "matrix": [[1]]}
  ]
})";

const char* kMm1Unstable = R"({
  "kind": "jumps", "C": 1, "n_minus": 1,
  "Tmm": [[[-3]], [[-3]]],
  "ph": [{"color": 1, "type": 1, "alpha": [1], "U": [[-2]]}],
  "rules": [
    {"from": 0, "to": 1, "type": 1, "matrix": [[3]]},
    {"from": 1, "to": 1, "type": 1, "matrix": [[3]]}
  ]
})";

const char* kLcfsMm13 = R"({
  "kind": "lcfs",
  "D0": [[-1]], "D": [[[1]]],
  "services": [{"alpha": [1], "U": [[-2]]}],
  "thresholds": [3]
})";

}  // namespace

TEST_CASE("spec parsing catches schema problems with field names") {
  CHECK_THROWS_WITH_AS(parse_model_spec_json(R"({"kind": "nope"})"),
                       doctest::Contains("kind"), SpecParseError);
  CHECK_THROWS_WITH_AS(parse_model_spec_json(R"({"kind": "classic", "Tpp": [[0, 1], [2]]})"),
                       doctest::Contains("Tpp"), SpecParseError);
  CHECK_THROWS_WITH_AS(
      parse_model_spec_json(
          R"({"kind": "lcfs", "D0": [[-1]], "D": [[[1]]],
              "services": [{"alpha": [1], "U": [[-2]]}], "thresholds": ["soon"]})"),
      doctest::Contains("thresholds"), SpecParseError);
  const ModelSpec spec = parse_model_spec_json(
      R"({"kind": "lcfs", "D0": [[-2]], "D": [[[1]], [[1]]],
          "services": [{"alpha": [1], "U": [[-2]]}, {"alpha": [1], "U": [[-3]]}],
          "thresholds": ["inf", 3]})");
  CHECK(spec.lcfs->thresholds[0] == std::numeric_limits<double>::infinity());
  CHECK(spec.lcfs->thresholds[1] == 3.0);
}

TEST_CASE("solve on the scalar classic model writes the cdf table") {
  const fs::path dir = temp_dir("classic");
  write_file(dir / "model.json", kClassicScalar);
  const int code = run_cli({"solve", (dir / "model.json").string(), "--out", dir.string(),
                            "--grid", "0:2:3"});
  CHECK(code == 0);
  const std::string csv = read_file(dir / "cdf.csv");
  CHECK(csv.find("x,cdf\n0,0.33333333333333") == 0);
  CHECK(csv.find("\r") == std::string::npos);
  CHECK(csv.find("# fluidq") != std::string::npos);
}

TEST_CASE("solve exit codes") {
  const fs::path dir = temp_dir("codes");
  write_file(dir / "bad.json", R"({"kind": "classic", "Tpp": [[-2]]})");
  CHECK(run_cli({"solve", (dir / "bad.json").string(), "--out", dir.string()}) == 1);

  write_file(dir / "unstable.json", kMm1Unstable);
  CHECK(run_cli({"solve", (dir / "unstable.json").string(), "--out", dir.string()}) == 2);
  // The drift table is still written.
  const std::string drifts = read_file(dir / "drifts.csv");
  CHECK(drifts.find("color,drift_up,drift_down,negative_drift") == 0);
  CHECK(drifts.find("1,0.6") != std::string::npos);

  write_file(dir / "dims.json", R"({
    "kind": "jumps", "C": 1, "n_minus": 2,
    "Tmm": [[[-1]], [[-1]]],
    "ph": [{"color": 1, "type": 1, "alpha": [1], "U": [[-2]]}],
    "rules": [{"from": 0, "to": 1, "type": 1, "matrix": [[1]]}]
  })");
  CHECK(run_cli({"solve", (dir / "dims.json").string(), "--out", dir.string()}) == 1);
}

TEST_CASE("solve on the M/M/1 jump model") {
  const fs::path dir = temp_dir("mm1");
  write_file(dir / "model.json", kMm1Jumps);
  CHECK(run_cli({"solve", (dir / "model.json").string(), "--out", dir.string(),
                 "--grid", "0:1:2"}) == 0);
  const std::string gamma = read_file(dir / "gamma.csv");
  CHECK(gamma.find("0,0.5\n") != std::string::npos);
  const std::string cdf = read_file(dir / "cdf.csv");
  CHECK(cdf.find("0,0.5\n") != std::string::npos);
  CHECK(read_file(dir / "marginals.csv").find("probability") != std::string::npos);
}

TEST_CASE("lcfs solve also writes loss") {
  const fs::path dir = temp_dir("lcfs");
  write_file(dir / "model.json", kLcfsMm13);
  CHECK(run_cli({"solve", (dir / "model.json").string(), "--out", dir.string()}) == 0);
  const std::string loss = read_file(dir / "loss.csv");
  CHECK(loss.find("type,threshold,loss") == 0);
  CHECK(loss.find("0.06666666666666") != std::string::npos);
}

TEST_CASE("sweep over N1 produces decreasing loss and a status column") {
  const fs::path dir = temp_dir("sweep");
  write_file(dir / "model.json", kLcfsMm13);
  CHECK(run_cli({"sweep", (dir / "model.json").string(), "--out", dir.string(), "--param", "N1",
                 "--values", "1,2,4"}) == 0);
  const std::string csv = read_file(dir / "sweep.csv");
  CHECK(csv.find("param,value,status,loss_1,p_empty,mean_top") == 0);
  CHECK(csv.find("N1,1,ok,") != std::string::npos);
  CHECK(csv.find("N1,4,ok,") != std::string::npos);

  // Unknown parameter for this kind.
  CHECK(run_cli({"sweep", (dir / "model.json").string(), "--out", dir.string(), "--param", "C",
                 "--values", "1,2"}) == 1);
}

TEST_CASE("cascade sweep over the level count with the QBD baseline") {
  const fs::path dir = temp_dir("cascade_sweep");
  write_file(dir / "model.json", R"({
    "kind": "cascade",
    "D0": [[-0.5]], "D1": [[0.5]],
    "levels": 2, "N": 3,
    "ph": [{"alpha": [1], "U": [[-2]]},
           {"alpha": [1], "U": [[-3]]},
           {"alpha": [1], "U": [[-4]]}],
    "gamma": [0.5, 0.4]
  })");
  CHECK(run_cli({"sweep", (dir / "model.json").string(), "--out", dir.string(), "--param", "C",
                 "--values", "1,2,3", "--qbd-baseline", "--timing"}) == 0);
  const std::string csv = read_file(dir / "sweep.csv");
  CHECK(csv.find("param,value,status,p_empty,mean_top,qbd_max_diff,time_s,qbd_time_s") == 0);
  // Every point solved and agreed with the exact chain.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    CHECK(line.find(",ok,") != std::string::npos);
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; i < 6; ++i) std::getline(cells, cell, ',');
    CHECK(std::stod(cell) < 1e-8);  // qbd_max_diff
  }
  CHECK(rows == 3);
}

TEST_CASE("simulate is reproducible byte for byte and matches the law") {
  const fs::path dir = temp_dir("sim");
  write_file(dir / "model.json", kLcfsMm13);
  auto run_once = [&](const std::string& out) {
    return run_cli({"simulate", (dir / "model.json").string(), "--out", (dir / out).string(),
                    "--horizon", "20000", "--warmup", "500", "--reps", "6", "--seed", "42",
                    "--grid", "0:3:4", "--compare"});
  };
  CHECK(run_once("a") == 0);
  CHECK(run_once("b") == 0);
  const std::string a = read_file(dir / "a" / "sim.csv");
  CHECK(a == read_file(dir / "b" / "sim.csv"));
  CHECK(a.find("stat,index,mean,se,analytic,z") == 0);

  // All z-scores within +-3.5 for this well-behaved model.
  std::istringstream lines(a);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.rfind(',');
    const double z = std::stod(line.substr(pos + 1));
    CHECK(std::abs(z) <= 3.5);
  }
}

TEST_CASE("the installed binary behaves like the embedded entry point") {
  const fs::path dir = temp_dir("bin");
  write_file(dir / "model.json", kMm1Jumps);
  const std::string cmd = std::string(FLUIDQ_BIN_PATH) + " solve " +
                          (dir / "model.json").string() + " --out " + dir.string() +
                          " --grid 0:1:2 >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(status == 0);
  CHECK(read_file(dir / "cdf.csv").find("0,0.5\n") != std::string::npos);
}
