#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssdg/dataset.hpp"
#include "ssdg/metrics.hpp"
#include "ssdg/models.hpp"
#include "ssdg/objectives.hpp"

namespace ssdg::training {

struct TrainConfig {
  models::ModelKind kind = models::ModelKind::baseline;
  models::GeneratorConfig generator;
  models::HeadConfig heads;  // classifier width is taken from the split's domain count
  std::size_t epochs = 150;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::optional<double> lambda;  // adg only
  std::optional<double> alpha;   // irm only
  std::vector<std::uint64_t> seeds{0};
  double validation_fraction = 0.1;  // chronological tail of each training well

  /// ConfigError unless epochs, batch size and learning rate are positive
  /// and exactly the coefficient matching `kind` is set.
  void validate() const;
  double coefficient() const;  // lambda, alpha or 0 for the baseline

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

struct LogRow {
  std::size_t epoch = 0;
  std::string split;  // "train" or "validation"
  double total = 0.0;
  double ssi_mse = 0.0;
  std::optional<double> domain_ce;
  std::optional<double> irm_penalty;
  std::optional<double> l2;
};

inline constexpr const char* kLogHeader = "epoch,split,total,ssi_mse,domain_ce,irm_penalty,l2";
std::string log_csv(const std::vector<LogRow>& rows);

struct TrainResult {
  models::ModelBundle bundle;  // best-validation checkpoint
  std::vector<LogRow> log;
  std::size_t best_epoch = 0;
  double best_validation_mse = 0.0;
  std::vector<std::string> warnings;
};

/// Trains one model with one seed. Batches are reshuffled every epoch;
/// ADG batches interleave domains, IRM steps draw one equal sub-batch per
/// domain. Returns the parameters of the epoch with the lowest validation
/// SSI MSE. Throws NumericalError naming epoch and batch when the loss is
/// not finite, ConfigError when the split cannot serve the kind.
TrainResult train(const TrainConfig& config, const dataset::DatasetSplit& split, std::uint64_t seed);

/// Split preparation as used for training runs: holdout fraction taken from
/// the config.
dataset::DatasetSplit prepare_split(std::span<const drillsim::WellRecord> wells, const dataset::Assignment& assignment,
                                    double validation_fraction);

/// Predictions and scores of one well.
struct WellEvaluation {
  std::string well_id;
  std::vector<double> t_start;
  std::vector<double> true_ssi;
  std::vector<double> pred_ssi;
  std::vector<int> true_class;
  std::vector<int> pred_class;
  double mse = 0.0;
  double ndtw = 0.0;
  metrics::Confusion confusion;
  std::optional<double> severe_recall;
};

/// Class of a predicted SSI; negative or non-finite predictions fall in class 1.
int predicted_class(double ssi);

/// Evaluates a model on each well of `samples` (chronological per well).
std::vector<WellEvaluation> evaluate_wells(const models::ModelBundle& bundle,
                                           std::span<const dataset::SequenceSample> samples);

inline constexpr const char* kPredictionsHeader = "well,t_start,true_ssi,pred_ssi,true_class,pred_class";
std::string predictions_csv(const std::vector<WellEvaluation>& wells);
nlohmann::json evaluation_json(const std::vector<WellEvaluation>& wells);

// Grid search -----------------------------------------------------------------

enum class GridStage { regularization, architecture };
GridStage parse_stage(const std::string& text);
std::string to_string(GridStage stage);

struct ValidationCase {
  std::string name;
  dataset::Assignment assignment;  // train / validation wells only
};

struct GridSpec {
  std::vector<double> regularization_values{1e-3, 1e-4, 1e-5};
  std::vector<int> hidden_layer_values{4, 6, 8};
  std::vector<double> lambda_values{1, 10, 100, 1000};
  std::vector<double> alpha_values{0.01, 0.1, 1, 10, 1000};
  std::vector<ValidationCase> validation_cases;
  std::size_t seeds_per_cell = 3;

  void validate() const;
};

struct GridRow {
  std::string stage;
  std::string case_name;  // "mean" for the across-case row
  double regularization = 0.0;
  int hidden_layers = 0;
  double coefficient = 0.0;
  std::size_t runs = 0;
  std::optional<double> validation_mse;
  std::optional<double> validation_ndtw;
  std::string status;  // "ok", "invalid: ...", "error: ..."
};

struct GridResult {
  std::vector<GridRow> rows;
  std::optional<GridRow> best;  // argmin of the across-case mean validation MSE
  std::vector<std::string> wells_touched;
};

/// Stage `regularization` crosses regularization_values with the kind's
/// coefficient axis at the base config's depth; stage `architecture` crosses
/// hidden_layer_values with it at the base config's regularization. Every
/// (case, cell, seed) is one independent run, executed on up to `workers`
/// threads. Only wells named in a case's assignment are windowed.
GridResult grid_search(const TrainConfig& base, const GridSpec& grid, GridStage stage,
                       std::span<const drillsim::WellRecord> wells, std::size_t workers = 1);

inline constexpr const char* kGridHeader =
    "stage,case,regularization,hidden_layers,coefficient,runs,validation_mse,validation_ndtw,status";
std::string grid_csv(const GridResult& result);

// Final comparison ------------------------------------------------------------

struct KindReport {
  models::ModelKind kind = models::ModelKind::baseline;
  std::map<std::string, double> well_ndtw;  // mean over seeds
  std::map<std::string, double> well_mse;
  std::map<std::string, std::optional<double>> well_severe_recall;
  double mean_ndtw = 0.0;                    // mean of per-well values
  std::optional<double> mean_severe_recall;  // over seeds, pooled over wells
  metrics::Confusion confusion;              // pooled over wells and seeds
  std::vector<models::ModelBundle> bundles;  // one per seed
};

struct EvalReport {
  std::vector<KindReport> kinds;
  /// improvement_pct[(reference, candidate)][well or "mean"]
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> improvement_pct;

  const KindReport& at(models::ModelKind kind) const;
  nlohmann::json to_json() const;
};

/// Trains every config once per seed on `split` (generator initialisation is
/// shared across kinds for a given seed) and scores each test well.
EvalReport compare_final(const std::vector<TrainConfig>& configs, const dataset::DatasetSplit& split,
                         const std::vector<std::uint64_t>& seeds, std::size_t workers = 1);

}  // namespace ssdg::training
