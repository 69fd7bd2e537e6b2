#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssdg/benchmark.hpp"
#include "ssdg/dataset.hpp"
#include "ssdg/drillsim.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/io.hpp"
#include "ssdg/models.hpp"
#include "ssdg/svg.hpp"
#include "ssdg/training.hpp"
#include "ssdg/transfer.hpp"

namespace fs = std::filesystem;
using namespace ssdg;

namespace {

constexpr const char* kManifest = "manifest.json";

void require_exists(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("missing input: expected " + path.string());
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension) {
  require_exists(dir);
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == extension) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<drillsim::WellRecord> load_wells(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifest;
  require_exists(manifest_path);
  const auto manifest = io::read_json(manifest_path);
  std::vector<drillsim::WellRecord> wells;
  try {
    for (const auto& w : manifest.at("wells")) {
      wells.push_back(drillsim::read_record_csv(dir / w.at("file").get<std::string>(),
                                                w.at("well_id").get<std::string>(),
                                                w.at("field_id").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  return wells;
}

dataset::DatasetSplit load_split(const fs::path& dir) {
  require_exists(dir / "split.json");
  return dataset::read_split(dir);
}

training::TrainConfig load_config(const fs::path& path) {
  require_exists(path);
  try {
    return training::TrainConfig::from_json(io::read_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

models::ModelBundle load_run_bundle(const fs::path& run) {
  require_exists(run / "checkpoint.json");
  return models::load_bundle(run, "checkpoint");
}

// Minimal CSV reader for the artifacts this tool writes (no embedded commas
// outside the quoted status column of grid_results.csv).
std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

// Commands ---------------------------------------------------------------------

int cmd_specs(const fs::path& out, std::uint64_t seed) {
  for (const auto& spec : benchmark::standard_specs(seed))
    drillsim::write_spec(spec, out / ("well_" + spec.well_id + ".json"));
  std::cout << "wrote 9 well specs to " << out.string() << "\n";
  return 0;
}

int cmd_simulate(const fs::path& spec_dir, const fs::path& out) {
  const auto files = sorted_files(spec_dir, ".json");
  if (files.empty()) throw ConfigError("no well spec (*.json) found in " + spec_dir.string());
  std::vector<drillsim::WellSpec> specs;
  for (const auto& f : files) {
    try {
      specs.push_back(drillsim::read_spec(f));
    } catch (const ConfigError& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
  }
  nlohmann::json manifest;
  manifest["wells"] = nlohmann::json::array();
  for (const auto& spec : specs) {
    const auto record = drillsim::simulate_well(spec);
    const std::string file = spec.well_id + ".csv";
    drillsim::write_record_csv(record, out / file);
    manifest["wells"].push_back({{"well_id", spec.well_id},
                                 {"field_id", spec.field_id},
                                 {"file", file},
                                 {"samples", record.length()}});
    std::cout << "well " << spec.well_id << ": " << record.length() << " samples\n";
  }
  io::write_json(out / kManifest, manifest);
  return 0;
}

int cmd_prepare(const fs::path& wells_dir, const fs::path& assignment_path, const fs::path& out,
                double validation_fraction, bool domain_labels_for_validation) {
  const auto wells = load_wells(wells_dir);
  require_exists(assignment_path);
  const auto assignment = dataset::assignment_from_json(io::read_json(assignment_path));
  std::vector<drillsim::WellRecord> used;
  for (const auto& w : wells)
    if (assignment.contains(w.well_id)) used.push_back(w);
  dataset::SplitOptions options;
  options.holdout_fraction = validation_fraction;
  options.domain_labels_for_validation = domain_labels_for_validation;
  const auto split = dataset::assemble_split(used, assignment, options);
  dataset::write_split(split, out);

  const auto hist = split.class_histogram();
  std::size_t total = 0;
  std::cout << "class,count\n";
  for (std::size_t c = 0; c < 4; ++c) {
    std::cout << c + 1 << ',' << hist[c] << '\n';
    total += hist[c];
  }
  std::cout << "total," << total << "\n";
  std::cout << "train " << split.train.size() << ", validation " << split.validation.size() << ", test "
            << split.test.size() << ", domains " << split.domain_count << "\n";
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_train(const fs::path& data, const fs::path& config_path, const fs::path& run, std::optional<std::uint64_t> seed) {
  auto config = load_config(config_path);
  const auto split = load_split(data);
  if (seed) config.seeds = {*seed};
  const auto result = training::train(config, split, config.seeds.front());
  io::write_json(run / "config.json", config.to_json());
  models::save_bundle(result.bundle, run);
  io::write_text(run / "training_log.csv", training::log_csv(result.log));
  nlohmann::json summary{{"seed", config.seeds.front()},
                         {"best_epoch", result.best_epoch},
                         {"best_validation_mse", result.best_validation_mse},
                         {"warnings", result.warnings}};
  io::write_json(run / "train_summary.json", summary);
  std::cout << "best epoch " << result.best_epoch << ", validation MSE " << io::format_double(result.best_validation_mse)
            << "\n";
  return 0;
}

int cmd_gridsearch(const fs::path& wells_dir, const fs::path& config_path, const fs::path& run, const std::string& stage,
                   const std::string& grid_path, std::size_t workers) {
  const auto config = load_config(config_path);
  const auto wells = load_wells(wells_dir);
  training::GridSpec grid;
  if (!grid_path.empty()) {
    require_exists(grid_path);
    const auto doc = io::read_json(grid_path);
    try {
      if (doc.contains("regularization_values"))
        grid.regularization_values = doc["regularization_values"].get<std::vector<double>>();
      if (doc.contains("hidden_layer_values"))
        grid.hidden_layer_values = doc["hidden_layer_values"].get<std::vector<int>>();
      if (doc.contains("lambda_values")) grid.lambda_values = doc["lambda_values"].get<std::vector<double>>();
      if (doc.contains("alpha_values")) grid.alpha_values = doc["alpha_values"].get<std::vector<double>>();
      if (doc.contains("seeds_per_cell")) grid.seeds_per_cell = doc["seeds_per_cell"].get<std::size_t>();
      if (doc.contains("validation_cases")) {
        for (const auto& [name, assignment] : doc["validation_cases"].items())
          grid.validation_cases.push_back({name, dataset::assignment_from_json(assignment)});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(grid_path + ": " + e.what());
    }
  }
  if (grid.validation_cases.empty()) {
    for (int c = 1; c <= 3; ++c)
      grid.validation_cases.push_back({"case" + std::to_string(c), benchmark::validation_case(c)});
  }
  const auto result = training::grid_search(config, grid, training::parse_stage(stage), wells, workers);
  const std::string stem = "grid_results" + std::string(stage == "arch" || stage == "architecture" ? "_arch" : "_reg");
  io::write_text(run / (stem + ".csv"), training::grid_csv(result));
  io::write_text(run / "grid_results.csv", training::grid_csv(result));
  nlohmann::json best = nullptr;
  if (result.best) {
    best = {{"regularization", result.best->regularization},
            {"hidden_layers", result.best->hidden_layers},
            {"coefficient", result.best->coefficient},
            {"validation_mse", *result.best->validation_mse},
            {"validation_ndtw", *result.best->validation_ndtw}};
  }
  io::write_json(run / (stem + "_best.json"), {{"stage", stage}, {"best", best}, {"wells_touched", result.wells_touched}});
  std::cout << training::grid_csv(result);
  return 0;
}

int cmd_evaluate(const fs::path& run, const fs::path& data, const std::string& partition) {
  const auto bundle = load_run_bundle(run);
  const auto split = load_split(data);
  const auto part = dataset::parse_partition(partition);
  const auto& samples = part == dataset::Partition::test         ? split.test
                        : part == dataset::Partition::validation ? split.validation
                                                                 : split.train;
  if (samples.empty()) throw ConfigError("split in " + data.string() + " has no " + partition + " samples");
  const auto evals = training::evaluate_wells(bundle, samples);
  io::write_text(run / "predictions.csv", training::predictions_csv(evals));
  io::write_json(run / "eval_report.json", training::evaluation_json(evals));
  for (const auto& e : evals)
    std::cout << "well " << e.well_id << ": mse " << io::format_double(e.mse) << ", ndtw " << io::format_double(e.ndtw)
              << "\n";
  return 0;
}

int cmd_transfer(const fs::path& run, const fs::path& data, const transfer::FineTuneConfig& ft) {
  const auto bundle = load_run_bundle(run);
  const auto split = load_split(data);
  if (split.test.empty()) throw ConfigError("split in " + data.string() + " has no test wells");
  std::vector<transfer::TransferRow> rows;
  for (const auto& [well, samples] : dataset::group_by_well(split.test)) {
    const auto adapted = transfer::fine_tune(bundle, samples, ft);
    if (adapted.frozen_checksum_before != adapted.frozen_checksum_after)
      throw NumericalError("frozen parameters changed while fine-tuning on well " + well);
    models::save_bundle(adapted.bundle, run / "transfer" / well);
    rows.push_back(transfer::evaluate_transfer(bundle, adapted.bundle, samples, ft.fraction));
    std::cout << "well " << well << ": ndtw " << io::format_double(rows.back().dtw_pre) << " -> "
              << io::format_double(rows.back().dtw_post) << "\n";
  }
  io::write_text(run / "transfer_report.csv", transfer::transfer_csv(rows));
  return 0;
}

int cmd_report(const fs::path& run) {
  const fs::path predictions = run / "predictions.csv";
  const fs::path grid = run / "grid_results.csv";
  const fs::path log = run / "training_log.csv";
  const fs::path transfer_report = run / "transfer_report.csv";
  if (!fs::exists(predictions) && !fs::exists(grid) && !fs::exists(log))
    throw ConfigError("missing input: expected " + predictions.string() + " (run `evaluate` first)");

  nlohmann::json report;
  report["figures"] = nlohmann::json::array();
  auto emit = [&](const std::string& name, const std::string& svg) {
    io::write_text(run / name, svg);
    report["figures"].push_back(name);
  };

  if (fs::exists(predictions)) {
    std::map<std::string, svg::Series> truth, pred;
    for (const auto& r : read_csv_rows(predictions)) {
      if (r.size() < 6) throw ConfigError(predictions.string() + ": malformed row");
      const double t = io::parse_double(r[1], predictions.string());
      truth[r[0]].label = "true SSI";
      truth[r[0]].x.push_back(t / 3600.0);
      truth[r[0]].y.push_back(io::parse_double(r[2], predictions.string()));
      pred[r[0]].label = "predicted SSI";
      pred[r[0]].x.push_back(t / 3600.0);
      pred[r[0]].y.push_back(io::parse_double(r[3], predictions.string()));
    }
    for (const auto& [well, series] : truth)
      emit("ssi_well_" + well + ".svg",
           svg::line_chart("Well " + well + ": true vs predicted SSI", "time (h)", "SSI", {series, pred[well]}));
  }
  if (fs::exists(grid)) {
    std::vector<svg::Bar> mse_bars, dtw_bars;
    for (const auto& r : read_csv_rows(grid)) {
      if (r.size() < 9 || r[1] != "mean" || r[6].empty()) continue;
      const std::string label = "r" + r[2] + " h" + r[3] + " c" + r[4];
      mse_bars.push_back({label, io::parse_double(r[6], grid.string())});
      dtw_bars.push_back({label, io::parse_double(r[7], grid.string())});
    }
    emit("grid_mean_mse.svg", svg::bar_chart("Mean validation MSE over cases", "MSE", mse_bars));
    emit("grid_mean_ndtw.svg", svg::bar_chart("Mean validation normalized DTW over cases", "normalized DTW", dtw_bars));
  }
  if (fs::exists(log)) {
    svg::Series train{"train total", {}, {}}, val{"validation MSE", {}, {}};
    for (const auto& r : read_csv_rows(log)) {
      if (r.size() < 4) continue;
      auto& s = r[1] == "train" ? train : val;
      s.x.push_back(io::parse_double(r[0], log.string()));
      s.y.push_back(io::parse_double(r[2], log.string()));
    }
    emit("training_curve.svg", svg::line_chart("Training curve", "epoch", "loss", {train, val}));
  }
  if (fs::exists(transfer_report)) {
    std::vector<svg::Bar> bars;
    for (const auto& r : read_csv_rows(transfer_report)) {
      if (r.size() < 5) continue;
      bars.push_back({"well " + r[0] + " pre", io::parse_double(r[2], transfer_report.string())});
      bars.push_back({"well " + r[0] + " post", io::parse_double(r[3], transfer_report.string())});
    }
    emit("transfer.svg", svg::bar_chart("Normalized DTW before and after fine-tuning", "normalized DTW", bars));
  }
  if (fs::exists(run / "eval_report.json")) report["evaluation"] = io::read_json(run / "eval_report.json");
  if (fs::exists(run / "train_summary.json")) report["training"] = io::read_json(run / "train_summary.json");
  io::write_json(run / "report.json", report);
  std::cout << "wrote " << report["figures"].size() << " figures and report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stick-slip severity prediction with domain generalization"};
  app.require_subcommand(1);

  std::string out, spec_dir, wells, assignment, data, config, run, stage = "reg", grid, partition = "test";
  std::uint64_t seed = 2024;
  std::optional<std::uint64_t> train_seed;
  double validation_fraction = 0.1;
  bool labels_for_validation = false;
  std::size_t workers = 1;
  transfer::FineTuneConfig ft;

  auto* specs = app.add_subcommand("specs", "Write the standard nine-well benchmark specs");
  specs->add_option("--out", out, "Output directory")->required();
  specs->add_option("--seed", seed, "Benchmark seed");

  auto* simulate = app.add_subcommand("simulate", "Simulate wells from spec JSON files");
  simulate->add_option("--spec-dir", spec_dir, "Directory of WellSpec JSON files")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  auto* prepare = app.add_subcommand("prepare", "Window, label, normalise and split wells");
  prepare->add_option("--wells", wells, "Directory written by simulate")->required();
  prepare->add_option("--assignment", assignment, "JSON map well_id -> train|validation|test")->required();
  prepare->add_option("--out", out, "Output directory")->required();
  prepare->add_option("--validation-fraction", validation_fraction, "Chronological tail of each training well");
  prepare->add_flag("--domain-labels-for-validation", labels_for_validation);

  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--data", data, "Split directory")->required();
  train->add_option("--config", config, "Train config JSON")->required();
  train->add_option("--run", run, "Run directory")->required();
  train->add_option("--seed", train_seed, "Overrides the config's first seed");

  auto* gridsearch = app.add_subcommand("gridsearch", "Two-stage hyperparameter grid search");
  gridsearch->add_option("--wells", wells, "Directory written by simulate")->required();
  gridsearch->add_option("--config", config, "Base train config JSON")->required();
  gridsearch->add_option("--run", run, "Run directory")->required();
  gridsearch->add_option("--stage", stage, "reg or arch")->check(CLI::IsMember({"reg", "arch"}));
  gridsearch->add_option("--grid", grid, "Grid JSON (axes, seeds_per_cell, validation_cases)");
  gridsearch->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Score a trained run on a split partition");
  evaluate->add_option("--run", run, "Run directory with a checkpoint")->required();
  evaluate->add_option("--data", data, "Split directory")->required();
  evaluate->add_option("--partition", partition, "train, validation or test");

  auto* tl = app.add_subcommand("transfer", "Fine-tune on the first part of each test well");
  tl->add_option("--run", run, "Run directory with a checkpoint")->required();
  tl->add_option("--data", data, "Split directory")->required();
  tl->add_option("--fraction", ft.fraction, "Adaptation fraction");
  tl->add_option("--epochs", ft.epochs, "Fine-tuning epochs");
  tl->add_option("--batch-size", ft.batch_size, "Fine-tuning batch size");
  tl->add_option("--learning-rate", ft.learning_rate, "Fine-tuning learning rate");
  tl->add_option("--seed", ft.seed, "Shuffling seed");

  auto* report = app.add_subcommand("report", "Render SVG charts and report.json for a run");
  report->add_option("--run", run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*specs) return cmd_specs(out, seed);
    if (*simulate) return cmd_simulate(spec_dir, out);
    if (*prepare) return cmd_prepare(wells, assignment, out, validation_fraction, labels_for_validation);
    if (*train) return cmd_train(data, config, run, train_seed);
    if (*gridsearch) return cmd_gridsearch(wells, config, run, stage, grid, workers);
    if (*evaluate) return cmd_evaluate(run, data, partition);
    if (*tl) return cmd_transfer(run, data, ft);
    if (*report) return cmd_report(run);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
