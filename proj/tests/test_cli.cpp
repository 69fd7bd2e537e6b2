#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssdg/drillsim.hpp"
#include "ssdg/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SSDG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome out;
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  out.output = ss.str();
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_specs(const fs::path& dir) {
  fs::create_directories(dir);
  const char* fields[] = {"a", "a", "b", "c"};
  for (int i = 0; i < 4; ++i) {
    ssdg::drillsim::WellSpec s;
    s.well_id = "w" + std::to_string(i);
    s.field_id = fields[i];
    s.duration_s = 900.0;
    s.seed = static_cast<std::uint64_t>(i);
    s.bit_torque_disturbance = 150.0;
    s.surface_speed_profile = {{0.0, 7.0 + i}, {450.0, 12.0}};
    s.noise_std = {40.0, 1.0, 0.3, 10.0, 0.03};
    ssdg::drillsim::write_spec(s, dir / ("well_" + s.well_id + ".json"));
  }
}

// Runs the whole pipeline into `root` and returns every CSV/JSON artifact.
std::map<std::string, std::string> pipeline(const fs::path& root) {
  fs::remove_all(root);
  write_specs(root / "specs");
  const fs::path log = root / "cli.log";
  ssdg::io::write_json(root / "assignment.json",
                       {{"w0", "train"}, {"w1", "train"}, {"w2", "train"}, {"w3", "test"}});
  ssdg::io::write_json(root / "config.json", {{"kind", "adg"},
                                              {"hidden_layer_count", 0},
                                              {"units", 3},
                                              {"ssi_head_widths", {4, 1}},
                                              {"classifier_widths", {4, 3}},
                                              {"epochs", 2},
                                              {"batch_size", 8},
                                              {"lambda", 1.0}});
  const std::string r = root.string();
  REQUIRE(run_cli("simulate --spec-dir " + r + "/specs --out " + r + "/wells", log).code == 0);
  REQUIRE(run_cli("prepare --wells " + r + "/wells --assignment " + r + "/assignment.json --out " + r +
                      "/data --validation-fraction 0.2",
                  log)
              .code == 0);
  const auto train = run_cli("train --data " + r + "/data --config " + r + "/config.json --run " + r + "/run", log);
  REQUIRE_MESSAGE(train.code == 0, train.output);
  REQUIRE(run_cli("evaluate --run " + r + "/run --data " + r + "/data", log).code == 0);
  REQUIRE(run_cli("transfer --run " + r + "/run --data " + r + "/data --epochs 2 --batch-size 1", log).code == 0);
  REQUIRE(run_cli("report --run " + r + "/run", log).code == 0);

  std::map<std::string, std::string> artifacts;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    const auto ext = entry.path().extension();
    if (ext == ".csv" || ext == ".json" || ext == ".svg" || ext == ".bin")
      artifacts[fs::relative(entry.path(), root).string()] = slurp(entry.path());
  }
  return artifacts;
}

}  // namespace

TEST_CASE("full pipeline reruns are byte-identical") {
  const auto base = fs::temp_directory_path() / "ssdg_cli_test";
  const auto a = pipeline(base / "a");
  const auto b = pipeline(base / "b");
  CHECK(a.size() == b.size());
  for (const auto& [name, bytes] : a) {
    INFO(name);
    REQUIRE(b.contains(name));
    CHECK(b.at(name) == bytes);
  }
  for (const auto* required : {"run/predictions.csv", "run/eval_report.json", "run/training_log.csv",
                               "run/transfer_report.csv", "run/report.json", "run/ssi_well_w3.svg", "data/split.json",
                               "wells/manifest.json"})
    CHECK(a.contains(required));
  CHECK(a.at("run/predictions.csv").rfind("well,t_start,true_ssi,pred_ssi,true_class,pred_class", 0) == 0);
  fs::remove_all(base);
}

TEST_CASE("exit codes") {
  const auto root = fs::temp_directory_path() / "ssdg_cli_codes";
  fs::remove_all(root);
  fs::create_directories(root / "empty");
  const auto log = root / "cli.log";
  CHECK(run_cli("--help", log).code == 0);
  CHECK(run_cli("", log).code == 2);
  CHECK(run_cli("simulate --out " + root.string(), log).code == 2);
  const auto empty = run_cli("simulate --spec-dir " + (root / "empty").string() + " --out " + root.string(), log);
  CHECK(empty.code == 2);
  CHECK(empty.output.find("no well spec") != std::string::npos);
  const auto report = run_cli("report --run " + (root / "empty").string(), log);
  CHECK(report.code == 2);
  CHECK(report.output.find("predictions.csv") != std::string::npos);
  CHECK(run_cli("gridsearch --wells x --config y --run z --stage middle", log).code == 2);
  fs::remove_all(root);
}
