#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kBin = DCM_BIN;

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args, const fs::path& log) {
  const std::string cmd = kBin + " " + args + " >" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dcm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long line_count(const std::string& text) {
  long n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

const char* kTerms = "b_cost:shipping_cost,b_time:delivery_time,b_track:tracking";
const char* kTruth = "b_cost=-0.15,b_time=-0.03,b_track=0.5,asc_2=0.3,asc_3=-0.2";

std::string common_sim(const fs::path& dir, int n, int seed) {
  return "simulate --out " + dir.string() + " --seed " + std::to_string(seed) +
         " --n " + std::to_string(n) + " --truth \"" + kTruth + "\" --terms \"" +
         kTerms + "\" --constants 2,3";
}

}  // namespace

TEST_CASE("simulate writes the dataset with the right row count") {
  const auto dir = fresh_dir("sim");
  const auto r = run(common_sim(dir, 1000, 7), dir / "log");
  CHECK(r.exit_code == 0);
  const auto body = slurp(dir / "sim.csv");
  // 1 comment + 1 header + 4000 data rows
  CHECK(line_count(body) == 4002);
  CHECK(body.rfind("# dcmkit", 0) == 0);
  CHECK(fs::exists(dir / "sim_truth.json"));
}

TEST_CASE("missing seed is a config error") {
  const auto dir = fresh_dir("noseed");
  const auto r = run("simulate --out " + dir.string() + " --n 10 --truth a=1",
                     dir / "log");
  CHECK(r.exit_code == 1);
}

TEST_CASE("estimate happy path and determinism") {
  const auto dir = fresh_dir("est");
  REQUIRE(run(common_sim(dir, 900, 11), dir / "log").exit_code == 0);

  const std::string est_args = "estimate --out " + dir.string() +
                               " --dataset " + (dir / "sim.csv").string() +
                               " --terms \"" + kTerms +
                               "\" --constants 2,3 --model rum --seed 11";
  const auto r1 = run(est_args, dir / "log1");
  CHECK(r1.exit_code == 0);
  const auto report = slurp(dir / "rum_estimate.txt");
  CHECK(report.find("converged: true") != std::string::npos);
  const auto json1 = slurp(dir / "rum_estimate.json");

  // byte-identical rerun
  fs::remove(dir / "rum_estimate.json");
  const auto r2 = run(est_args, dir / "log2");
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir / "rum_estimate.json") == json1);

  SUBCASE("draw sidecar on request") {
    const auto r3 = run("estimate --out " + dir.string() + " --dataset " +
                            (dir / "sim.csv").string() + " --terms \"" + kTerms +
                            "\" --random b_cost --draws 25 --model rum" +
                            " --seed 11 --name mixed --dump-draws",
                        dir / "log3");
    CHECK(r3.exit_code == 0);
    const auto dump = slurp(dir / "mixed_draws.bin");
    CHECK(dump.size() >= 16);
    CHECK(dump.substr(0, 4) == "DRAW");
  }
}

TEST_CASE("unknown attribute in terms names the attribute") {
  const auto dir = fresh_dir("badattr");
  REQUIRE(run(common_sim(dir, 100, 3), dir / "log").exit_code == 0);
  const auto r = run("estimate --out " + dir.string() + " --dataset " +
                         (dir / "sim.csv").string() +
                         " --terms b_w:weight --model rum",
                     dir / "log2");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("weight") != std::string::npos);
}

TEST_CASE("iteration cap forces the non-convergence exit code") {
  const auto dir = fresh_dir("noconv");
  REQUIRE(run(common_sim(dir, 600, 5), dir / "log").exit_code == 0);
  const auto r = run("estimate --out " + dir.string() + " --dataset " +
                         (dir / "sim.csv").string() + " --terms \"" + kTerms +
                         "\" --model rum --max-iters 1",
                     dir / "log2");
  CHECK(r.exit_code == 2);
  // results are still written
  CHECK(fs::exists(dir / "rum_estimate.json"));
  CHECK(slurp(dir / "rum_estimate.txt").find("converged: false") !=
        std::string::npos);
}

TEST_CASE("validate writes both model summaries") {
  const auto dir = fresh_dir("val");
  REQUIRE(run(common_sim(dir, 400, 21), dir / "log").exit_code == 0);
  const std::string args = "validate --out " + dir.string() + " --dataset " +
                           (dir / "sim.csv").string() + " --terms \"" + kTerms +
                           "\" --constants 2,3 --model both --folds 5 --seed 21";
  const auto r = run(args, dir / "log2");
  CHECK(r.exit_code == 0);
  for (const std::string m : {"rum", "rrm"}) {
    const auto csv = slurp(dir / ("validation_" + m + ".csv"));
    // comment + header + 5 folds
    CHECK(line_count(csv) == 7);
    CHECK(fs::exists(dir / ("validation_" + m + "_summary.txt")));
  }

  SUBCASE("seeded rerun is identical") {
    const auto before = slurp(dir / "validation_rum.csv");
    REQUIRE(run(args, dir / "log3").exit_code == 0);
    CHECK(slurp(dir / "validation_rum.csv") == before);
  }
}

TEST_CASE("validate rejects folds=1") {
  const auto dir = fresh_dir("fold1");
  REQUIRE(run(common_sim(dir, 100, 31), dir / "log").exit_code == 0);
  const auto r = run("validate --out " + dir.string() + " --dataset " +
                         (dir / "sim.csv").string() + " --terms \"" + kTerms +
                         "\" --folds 1 --seed 31 --model rum",
                     dir / "log2");
  CHECK(r.exit_code == 1);
}

TEST_CASE("analyze produces comparison tables and densities") {
  const auto dir = fresh_dir("ana");
  // random cost coefficient so a WTP density exists
  const std::string truth =
      "b_cost=-0.15,sd_b_cost=0.05,b_time=-0.03,b_track=0.5";
  REQUIRE(run("simulate --out " + dir.string() +
                  " --seed 41 --n 700 --truth \"" + truth + "\" --terms \"" +
                  kTerms + "\" --random b_cost",
              dir / "log")
              .exit_code == 0);
  for (const std::string m : {"rum", "rrm"}) {
    const auto r = run("estimate --out " + dir.string() + " --dataset " +
                           (dir / "sim.csv").string() + " --terms \"" + kTerms +
                           "\" --random b_cost --draws 60 --model " + m +
                           " --seed 41",
                       dir / ("log_" + m));
    REQUIRE(r.exit_code == 0);
  }

  const auto r = run("analyze --out " + dir.string() + " --seed 41" +
                         " --rum-result " + (dir / "rum_estimate.json").string() +
                         " --rrm-result " + (dir / "rrm_estimate.json").string() +
                         " --dataset " + (dir / "sim.csv").string() +
                         " --wtp-convention attribute-over-cost",
                     dir / "log_ana");
  CHECK(r.exit_code == 0);

  const auto wtp = slurp(dir / "wtp.csv");
  CHECK(wtp.find("attribute,rum,rrm,ratio") != std::string::npos);
  CHECK(fs::exists(dir / "elasticity_rum.csv"));
  CHECK(fs::exists(dir / "elasticity_rrm.csv"));
  CHECK(fs::exists(dir / "elasticity_comparison.csv"));
  const auto comparison = slurp(dir / "elasticity_comparison.csv");
  CHECK(comparison.find("pct_diff") != std::string::npos);

  SUBCASE("density masses sum to one") {
    // attribute-over-cost puts the random cost coefficient in every
    // denominator; check one density file.
    const auto density = slurp(dir / "wtp_density_rum_b_time.csv");
    std::istringstream lines(density);
    std::string line;
    double total = 0.0;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] == '#' || line.find("mass") != std::string::npos ||
          line.find(":") != std::string::npos)
        continue;
      const auto comma = line.find(',');
      REQUIRE(comma != std::string::npos);
      total += std::stod(line.substr(comma + 1));
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }

  SUBCASE("single-model analyze skips the comparison with a notice") {
    const auto dir2 = fresh_dir("ana_single");
    const auto r2 = run("analyze --out " + dir2.string() + " --seed 41" +
                            " --rum-result " +
                            (dir / "rum_estimate.json").string() + " --dataset " +
                            (dir / "sim.csv").string(),
                        dir2 / "log");
    CHECK(r2.exit_code == 0);
    CHECK(r2.output.find("comparison tables skipped") != std::string::npos);
    CHECK(fs::exists(dir2 / "wtp.csv"));
    CHECK_FALSE(fs::exists(dir2 / "elasticity_comparison.csv"));
  }

  SUBCASE("coefficient-name mismatch is named") {
    // an RUM fit without the track term against the full RRM fit
    const auto r3 = run("estimate --out " + dir.string() + " --dataset " +
                            (dir / "sim.csv").string() +
                            " --terms b_cost:shipping_cost,b_time:delivery_time" +
                            " --model rum --seed 41 --name rum_small",
                        dir / "log_small");
    REQUIRE(r3.exit_code == 0);
    const auto r4 = run("analyze --out " + dir.string() + " --seed 41" +
                            " --rum-result " + (dir / "rum_small.json").string() +
                            " --rrm-result " +
                            (dir / "rrm_estimate.json").string(),
                        dir / "log_mismatch");
    CHECK(r4.exit_code == 1);
    CHECK(r4.output.find("b_track") != std::string::npos);
  }
}

TEST_CASE("config file keys are overridden by flags") {
  const auto dir = fresh_dir("cfg");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "n=50\n"
        << "seed=77\n"
        << "truth=\"" << kTruth << "\"\n"
        << "terms=\"" << kTerms << "\"\n"
        << "constants=2,3\n"
        << "out=" << dir.string() << "\n";
  }
  const auto r = run("simulate --config " + (dir / "run.cfg").string(), dir / "log");
  CHECK(r.exit_code == 0);
  const auto base = slurp(dir / "sim.csv");
  CHECK(line_count(base) == 202);  // comment + header + 50*4

  // flag wins over the config key
  const auto r2 = run("simulate --config " + (dir / "run.cfg").string() +
                          " --n 10 --name sim_flag",
                      dir / "log2");
  CHECK(r2.exit_code == 0);
  CHECK(line_count(slurp(dir / "sim_flag.csv")) == 42);
}

TEST_CASE("environment variable provides the default output directory") {
  const auto dir = fresh_dir("envout");
  setenv("DCM_OUT_DIR", dir.string().c_str(), 1);
  const auto r = run("simulate --seed 3 --n 10 --truth \"" + std::string(kTruth) +
                         "\" --terms \"" + kTerms + "\" --constants 2,3",
                     dir / "log");
  unsetenv("DCM_OUT_DIR");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "sim.csv"));
}
