// End-to-end checks of the qp-tongues binary: exit codes, file outputs,
// determinism of emitted CSVs.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qpt/io.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("qpt_cli_out_" +
                                                    std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(QPT_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  fs::remove(out);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "qpt_cli_work";
  fs::create_directories(dir);
  return dir;
}

const std::string kTinyConfig = R"({
  "grid": {"plane": "epsilon-omega", "model": "mean",
           "x": {"min": 0.0, "max": 0.0, "n": 2},
           "y": {"min": 2.0, "max": 4.0, "n": 2}},
  "fixed": {"mu": 0.5, "omega_drive": 6.283185307179586, "alpha": 0.5},
  "policy": {"horizon": 100.0, "step": 0.01},
  "output": {"basename": "tiny"}
})";

}  // namespace

TEST_CASE("timeseries: unforced oscillator is stable, exit 0") {
  const auto dir = work_dir();
  const auto csv = dir / "sho.csv";
  const auto r = run_cli(
      "timeseries --model mean --omega-drive 6.283185307179586 --epsilon 0 --mu 0 "
      "--delta-cap 0 --delta 0 --horizon 50 --h 0.01 --out " +
      csv.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("verdict=stable") != std::string::npos);
  const std::string content = slurp(csv);
  REQUIRE(content.find("t,x,v,envelope") != std::string::npos);
  REQUIRE(content.find("# verdict=stable") != std::string::npos);
}

TEST_CASE("timeseries: divergent slow flow prints the verdict") {
  const auto dir = work_dir();
  const auto r = run_cli(
      "timeseries --model slow-mean --omega-drive 6.283185307179586 --epsilon 0.1 --mu 1 "
      "--delta-cap 1.51 --delta 0.7 --horizon 2000 --h 0.01 --out " +
      (dir / "div.csv").string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("verdict=divergent") != std::string::npos);
  REQUIRE(r.output.find("growth_rate=") != std::string::npos);
}

TEST_CASE("timeseries: overflow without a bail-out exits 3 and still writes") {
  const auto dir = work_dir();
  const auto csv = dir / "blow.csv";
  const auto r = run_cli(
      "timeseries --model slow-mean --omega-drive 6.283185307179586 --epsilon 0.1 --mu 1 "
      "--delta-cap 1.51 --delta 0.7 --horizon 100000 --h 0.01 --bailout inf --out " +
      csv.string());
  REQUIRE(r.exit_code == 3);
  REQUIRE(r.output.find("verdict=divergent") != std::string::npos);
  REQUIRE(fs::exists(csv));
}

TEST_CASE("timeseries: config errors exit 2") {
  REQUIRE(run_cli("timeseries --model nope --out /tmp/x.csv").exit_code == 2);
  REQUIRE(run_cli("timeseries --model mean").exit_code == 2);  // missing --out
  // slow flow with Delta = 0 has no slow time scale
  REQUIRE(run_cli("timeseries --model slow-mean --epsilon 0.1 --mu 1 --delta-cap 0 "
                  "--delta 0.7 --out /tmp/x.csv")
              .exit_code == 2);
}

TEST_CASE("sweep: trivial grid is all stable and byte-identical across runs") {
  const auto dir = work_dir();
  std::ofstream(dir / "tiny.json") << kTinyConfig;
  const auto r1 = run_cli("sweep --config " + (dir / "tiny.json").string() +
                          " --workers 2 --out-dir " + (dir / "run1").string());
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r1.output.find("stable=4 divergent=0 ambiguous=0") != std::string::npos);
  const auto r2 = run_cli("sweep --config " + (dir / "tiny.json").string() +
                          " --workers 1 --out-dir " + (dir / "run2").string());
  REQUIRE(r2.exit_code == 0);
  REQUIRE(slurp(dir / "run1" / "tiny.csv") == slurp(dir / "run2" / "tiny.csv"));
  REQUIRE(fs::exists(dir / "run1" / "tiny.json"));
  REQUIRE(fs::exists(dir / "run1" / "tiny.gp"));
}

TEST_CASE("sweep: missing and invalid configs exit 2") {
  REQUIRE(run_cli("sweep --config /nonexistent.json --out-dir /tmp").exit_code == 2);
  const auto dir = work_dir();
  std::ofstream(dir / "bad.json") << "{\"grid\": {}}";
  REQUIRE(run_cli("sweep --config " + (dir / "bad.json").string() + " --out-dir /tmp")
              .exit_code == 2);
}

TEST_CASE("compare: self-agreement 1.0, mismatched axes exit 2, dummy exits 1") {
  const auto dir = work_dir();
  std::ofstream(dir / "tiny.json") << kTinyConfig;
  REQUIRE(run_cli("sweep --config " + (dir / "tiny.json").string() + " --out-dir " +
                  dir.string())
              .exit_code == 0);
  const std::string grid = (dir / "tiny.csv").string();

  const auto self = run_cli("compare " + grid + " " + grid + " --out " +
                            (dir / "dis.csv").string());
  REQUIRE(self.exit_code == 0);
  REQUIRE(self.output.find("agreement=1") != std::string::npos);

  // axis mismatch
  std::string other_cfg = kTinyConfig;
  other_cfg.replace(other_cfg.find("\"max\": 4.0"), 10, "\"max\": 5.0");
  std::ofstream(dir / "other.json") << other_cfg;
  REQUIRE(run_cli("sweep --config " + (dir / "other.json").string() + " --out-dir " +
                  (dir / "other").string())
              .exit_code == 0);
  REQUIRE(run_cli("compare " + grid + " " + (dir / "other" / "tiny.csv").string())
              .exit_code == 2);

  // all-divergent dummy: flip the verdicts in a copy
  auto g = qpt::read_grid(grid);
  for (auto& v : g.verdicts) {
    v.kind = qpt::VerdictKind::Divergent;
  }
  qpt::write_text_atomic(dir / "dummy.csv", qpt::grid_csv_string(g));
  const auto dis = run_cli("compare " + grid + " " + (dir / "dummy.csv").string() +
                           " --out " + (dir / "dis2.csv").string());
  REQUIRE(dis.exit_code == 1);
  REQUIRE(slurp(dir / "dis2.csv").find("stable,divergent") != std::string::npos);
}

TEST_CASE("boundary: writes the sampled branches") {
  const auto dir = work_dir();
  const auto out = dir / "bnd.csv";
  const auto r = run_cli("boundary --mu 0.1 --delta-cap-min -2 --delta-cap-max 2 "
                         "--samples 41 --out " +
                         out.string());
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(out);
  REQUIRE(csv.find("delta_cap,branch1,branch2,branch3,branch4") != std::string::npos);
  REQUIRE(run_cli("boundary --mu 0.1 --delta-cap-min 2 --delta-cap-max -2 --samples 5 "
                  "--out " +
                  out.string())
              .exit_code == 2);
}

TEST_CASE("approximants: golden ratio conjugate") {
  const auto r = run_cli("approximants --alpha 0.6180339887498949 --count 5");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("1/2  period=4*pi/Omega") != std::string::npos);
  REQUIRE(r.output.find("2/3  period=6*pi/Omega") != std::string::npos);
  REQUIRE(r.output.find("3/5  period=10*pi/Omega") != std::string::npos);
  REQUIRE(r.output.find("5/8  period=16*pi/Omega") != std::string::npos);
  REQUIRE(r.output.find("8/13  period=26*pi/Omega") != std::string::npos);

  const auto single = run_cli("approximants --alpha 0.6180339887498949 --count 1");
  REQUIRE(single.output == "1/2  period=4*pi/Omega\n");

  // near-rational input exhausts precision: exit 2
  REQUIRE(run_cli("approximants --alpha 0.3333333333333334 --count 6").exit_code == 2);
}

TEST_CASE("version flag") {
  const auto r = run_cli("--version");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("qp-tongues") != std::string::npos);
}
