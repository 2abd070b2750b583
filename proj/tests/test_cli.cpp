#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "infusion/cpxa.hpp"

using namespace infusion;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return INFUSION_CLI_PATH; }

fs::path work_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("infusion_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(cli_path()) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// arm -> nrmse cell as written, so byte comparisons stay exact.
std::map<std::string, std::string> metrics_nrmse(const fs::path& csv) {
  std::map<std::string, std::string> m;
  auto rows = read_csv(csv);
  for (std::size_t i = 1; i < rows.size(); ++i) m[rows[i][0]] = rows[i][1];
  return m;
}

void write_config(const fs::path& path,
                  const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream f(path);
  for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return slurp(a) == slurp(b) && fs::file_size(a) == fs::file_size(b);
}

}  // namespace

TEST_CASE("bad invocations exit with the configuration code") {
  fs::path dir = work_dir("badargs");

  REQUIRE(run_cli("bogus-subcommand", dir).exit_code == 2);
  REQUIRE(run_cli("recon", dir).exit_code == 2);
  REQUIRE(run_cli("recon --config /nonexistent/experiment.txt", dir).exit_code == 2);
  REQUIRE(run_cli("eval --image /nonexistent/a.cpxa --ref /nonexistent/b.cpxa",
                  dir)
              .exit_code == 2);
  REQUIRE(run_cli("figures", dir).exit_code == 2);
  REQUIRE(run_cli("--help", dir).exit_code == 0);

  fs::remove_all(dir);
}

TEST_CASE("phantom, mask, and eval round trip through files") {
  fs::path dir = work_dir("roundtrip");
  const fs::path ph = dir / "ph.cpxa";

  RunResult r = run_cli("phantom --ny 32 --nx 32 --seed 5 --out " + ph.string(), dir);
  REQUIRE(r.exit_code == 0);
  ComplexArray<float> img = load_array_as<float>(ph.string());
  REQUIRE(img.rank() == 2);
  REQUIRE(img.dim(0) == 32);
  REQUIRE(img.dim(1) == 32);
  REQUIRE(max_abs(img) > 0.0);

  RunResult ev = run_cli(
      "eval --image " + ph.string() + " --ref " + ph.string(), dir);
  REQUIRE(ev.exit_code == 0);
  REQUIRE(std::stod(ev.out) == 0.0);

  const fs::path mk = dir / "mask.cpxa";
  RunResult mr = run_cli("mask --rows 32 --cols 32 --kind full --out " +
                         mk.string(), dir);
  REQUIRE(mr.exit_code == 0);
  ComplexArray<float> mask = load_array_as<float>(mk.string());
  REQUIRE(mask.size() == 32 * 32);
  for (std::size_t i = 0; i < mask.size(); ++i)
    REQUIRE(mask[i] == std::complex<float>(1.0f, 0.0f));

  RunResult pr = run_cli(
      "mask --rows 32 --cols 32 --kind poisson --accel 3 --calib 6 --out " +
      (dir / "pm.cpxa").string(), dir);
  REQUIRE(pr.exit_code == 0);
  ComplexArray<float> pm = load_array_as<float>((dir / "pm.cpxa").string());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    REQUIRE((pm[i] == std::complex<float>(0) || pm[i] == std::complex<float>(1)));
    kept += (pm[i] == std::complex<float>(1));
  }
  const double realized = double(pm.size()) / double(kept);
  REQUIRE(realized > 2.0);
  REQUIRE(realized < 4.0);

  fs::remove_all(dir);
}

TEST_CASE("zero-filled reconstruction of a fully sampled acquisition is exact") {
  fs::path dir = work_dir("zf");
  const fs::path cfg = dir / "exp.txt";
  const fs::path out = dir / "run";
  write_config(cfg, {{"grid.ny", "32"},
                     {"grid.nx", "32"},
                     {"coils.count", "2"},
                     {"mask.kind", "full"},
                     {"arms", "zero-filled"},
                     {"out.dir", out.string()}});

  RunResult r = run_cli("recon --config " + cfg.string(), dir);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(out / "metrics.csv"));
  REQUIRE(fs::exists(out / "ground_truth.cpxa"));
  REQUIRE(fs::exists(out / "zero-filled" / "image.cpxa"));

  auto rows = read_csv(out / "metrics.csv");
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0] == std::vector<std::string>{"arm", "nrmse", "runtime_s",
                                              "peak_mem_bytes"});
  REQUIRE(rows[1][0] == "zero-filled");
  REQUIRE(std::stod(rows[1][1]) <= 1e-6);

  // The echoed configuration records the resolved experiment.
  const std::string echoed = slurp(out / "config.txt");
  REQUIRE(echoed.find("grid.ny = 32") != std::string::npos);
  REQUIRE(echoed.find("mask.kind = full") != std::string::npos);

  fs::remove_all(dir);
}

TEST_CASE("reconstruction runs are reproducible byte for byte") {
  fs::path dir = work_dir("repro");
  const fs::path cfg = dir / "exp.txt";
  write_config(cfg, {{"grid.ny", "32"},
                     {"grid.nx", "32"},
                     {"coils.count", "2"},
                     {"mask.kind", "poisson"},
                     {"mask.accel", "3"},
                     {"mask.calib", "6"},
                     {"arms", "zero-filled,inr-none"},
                     {"recon.iters", "40"},
                     {"recon.fourier_features", "32"},
                     {"recon.hidden", "32"},
                     {"out.dir", (dir / "a").string()}});

  REQUIRE(run_cli("recon --config " + cfg.string(), dir).exit_code == 0);
  REQUIRE(run_cli("recon --config " + cfg.string() + " --set out.dir=" +
                  (dir / "b").string(), dir)
              .exit_code == 0);

  for (const char* arm : {"zero-filled", "inr-none"}) {
    REQUIRE(same_bytes(dir / "a" / arm / "image.cpxa",
                       dir / "b" / arm / "image.cpxa"));
  }
  REQUIRE(same_bytes(dir / "a" / "inr-none" / "trace.csv",
                     dir / "b" / "inr-none" / "trace.csv"));

  auto na = metrics_nrmse(dir / "a" / "metrics.csv");
  auto nb = metrics_nrmse(dir / "b" / "metrics.csv");
  REQUIRE(na == nb);

  fs::remove_all(dir);
}

TEST_CASE("override flags reach the experiment and reject garbage") {
  fs::path dir = work_dir("overrides");
  const fs::path cfg = dir / "exp.txt";
  write_config(cfg, {{"grid.ny", "32"},
                     {"grid.nx", "32"},
                     {"coils.count", "1"},
                     {"mask.kind", "full"},
                     {"arms", "inr-none"},
                     {"recon.iters", "3"},
                     {"recon.fourier_features", "16"},
                     {"recon.hidden", "16"},
                     {"out.dir", (dir / "r").string()}});

  REQUIRE(run_cli("recon --config " + cfg.string() +
                  " --set recon.iters=7 --set out.dir=" + (dir / "o").string(),
                  dir)
              .exit_code == 0);
  // Header plus one row per iteration.
  REQUIRE(read_csv(dir / "o" / "inr-none" / "trace.csv").size() == 8);

  REQUIRE(run_cli("recon --config " + cfg.string() +
                  " --set recon.iters=notanumber", dir)
              .exit_code == 2);
  REQUIRE(run_cli("recon --config " + cfg.string() + " --set arms=warp-drive",
                  dir)
              .exit_code == 2);

  // An infusion arm without a prior checkpoint must fail fast.
  RunResult pr = run_cli("recon --config " + cfg.string() +
                         " --set arms=infusion --set prior.dir=" +
                         (dir / "noprior").string(), dir);
  REQUIRE(pr.exit_code == 2);
  REQUIRE(pr.err.find("prior") != std::string::npos);

  fs::remove_all(dir);
}

TEST_CASE("figure rendering matches the metrics table") {
  fs::path dir = work_dir("figures");
  const fs::path cfg = dir / "exp.txt";
  const fs::path out = dir / "run";
  write_config(cfg, {{"grid.ny", "32"},
                     {"grid.nx", "32"},
                     {"coils.count", "2"},
                     {"mask.kind", "poisson"},
                     {"mask.accel", "3"},
                     {"mask.calib", "6"},
                     {"arms", "zero-filled,cs-wavelet"},
                     {"cs.iters", "30"},
                     {"out.dir", out.string()}});
  REQUIRE(run_cli("recon --config " + cfg.string(), dir).exit_code == 0);

  RunResult fr = run_cli("figures --run " + out.string(), dir);
  REQUIRE(fr.exit_code == 0);

  const fs::path fig = out / "figures";
  REQUIRE(fs::exists(fig / "ground_truth.ppm"));
  for (const char* arm : {"zero-filled", "cs-wavelet"}) {
    REQUIRE(fs::exists(fig / (std::string(arm) + "_magnitude.ppm")));
    REQUIRE(fs::exists(fig / (std::string(arm) + "_error.ppm")));
  }
  REQUIRE(fs::exists(fig / "cs-wavelet_trace.ppm"));

  // Panel annotations quote the same NRMSE the metrics table reports.
  const std::string ann = slurp(fig / "annotations.txt");
  auto metrics = metrics_nrmse(out / "metrics.csv");
  for (const auto& [arm, cell] : metrics) {
    char expect[64];
    std::snprintf(expect, sizeof expect, "nrmse=%.4f", std::stod(cell));
    REQUIRE(ann.find(arm + std::string(" ") + expect) != std::string::npos);
  }

  SECTION("missing inputs are reported as a configuration error") {
    fs::path empty = dir / "empty";
    fs::create_directories(empty);
    RunResult bad = run_cli("figures --run " + empty.string(), dir);
    REQUIRE(bad.exit_code == 2);
    REQUIRE(bad.err.find("missing inputs") != std::string::npos);
    REQUIRE(bad.err.find("metrics.csv") != std::string::npos);
  }

  fs::remove_all(dir);
}

TEST_CASE("cohort requires at least two members") {
  fs::path dir = work_dir("cohort1");
  const fs::path cfg = dir / "exp.txt";
  write_config(cfg, {{"grid.ny", "32"},
                     {"grid.nx", "32"},
                     {"coils.count", "1"},
                     {"mask.kind", "full"},
                     {"arms", "zero-filled"},
                     {"out.dir", (dir / "c").string()}});
  REQUIRE(run_cli("cohort --count 1 --config " + cfg.string(), dir).exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("a wider coordinate encoding keeps the data fit") {
  fs::path dir = work_dir("features");
  const fs::path cfg = dir / "exp.txt";
  write_config(cfg, {{"grid.ny", "32"},
                     {"grid.nx", "32"},
                     {"coils.count", "1"},
                     {"mask.kind", "full"},
                     {"arms", "inr-none"},
                     {"recon.iters", "200"},
                     {"recon.hidden", "64"},
                     {"recon.fourier_features", "128"},
                     {"out.dir", (dir / "m128").string()}});

  REQUIRE(run_cli("recon --config " + cfg.string(), dir).exit_code == 0);
  REQUIRE(run_cli("recon --config " + cfg.string() +
                  " --set recon.fourier_features=256 --set out.dir=" +
                  (dir / "m256").string(), dir)
              .exit_code == 0);

  auto last_data_loss = [&](const fs::path& run) {
    auto rows = read_csv(run / "inr-none" / "trace.csv");
    REQUIRE(rows.size() > 1);
    return std::stod(rows.back()[1]);
  };
  const double l128 = last_data_loss(dir / "m128");
  const double l256 = last_data_loss(dir / "m256");
  REQUIRE(l256 <= 1.1 * l128);

  fs::remove_all(dir);
}
