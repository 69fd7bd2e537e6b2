#include "ssdg/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "ssdg/autodiff/adam.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/io.hpp"
#include "ssdg/rng.hpp"

namespace ssdg::training {
namespace {

using dataset::SequenceSample;
using models::ModelKind;
using Ptrs = std::vector<const SequenceSample*>;

constexpr std::uint64_t kBatchStream = 0xba7c4;

void run_parallel(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, jobs));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<Ptrs> chunk(const Ptrs& order, std::size_t size) {
  std::vector<Ptrs> out;
  for (std::size_t start = 0; start < order.size(); start += size) {
    const std::size_t end = std::min(order.size(), start + size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

class Batcher {
 public:
  Batcher(const TrainConfig& config, std::span<const SequenceSample> train, std::uint64_t seed)
      : kind_(config.kind), batch_size_(config.batch_size), rng_(seed, kBatchStream) {
    for (const auto& s : train) {
      all_.push_back(&s);
      if (s.domain_id >= 0) by_domain_[s.domain_id].push_back(&s);
    }
    for (auto& [d, v] : by_domain_) cursor_[d] = v.size();  // forces a shuffle on first use
  }

  std::size_t domain_count() const { return by_domain_.size(); }

  /// Flat batches for baseline / ADG.
  std::vector<Ptrs> epoch_batches() {
    if (kind_ == ModelKind::adg) {
      std::vector<Ptrs> queues;
      for (auto& [d, v] : by_domain_) {
        Ptrs q = v;
        rng_.shuffle(std::span<const SequenceSample*>(q));
        queues.push_back(std::move(q));
      }
      Ptrs order;
      order.reserve(all_.size());
      for (std::size_t k = 0; order.size() < all_.size(); ++k)
        for (const auto& q : queues)
          if (k < q.size()) order.push_back(q[k]);
      return chunk(order, batch_size_);
    }
    Ptrs order = all_;
    rng_.shuffle(std::span<const SequenceSample*>(order));
    return chunk(order, batch_size_);
  }

  std::size_t irm_steps() const { return (all_.size() + batch_size_ - 1) / batch_size_; }

  /// One equal-size sub-batch per domain, cycling through reshuffled pools.
  std::vector<Ptrs> irm_step() {
    const std::size_t per = std::max<std::size_t>(1, batch_size_ / by_domain_.size());
    std::vector<Ptrs> out;
    for (auto& [d, pool] : by_domain_) {
      Ptrs sub;
      const std::size_t take = std::min(per, pool.size());
      while (sub.size() < take) {
        std::size_t& c = cursor_[d];
        if (c >= pool.size()) {
          rng_.shuffle(std::span<const SequenceSample*>(pool));
          c = 0;
        }
        sub.push_back(pool[c++]);
      }
      out.push_back(std::move(sub));
    }
    return out;
  }

 private:
  ModelKind kind_;
  std::size_t batch_size_;
  Rng rng_;
  Ptrs all_;
  std::map<int, Ptrs> by_domain_;
  std::map<int, std::size_t> cursor_;
};

std::string fmt_opt(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void TrainConfig::validate() const {
  generator.validate();
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  switch (kind) {
    case ModelKind::baseline:
      if (lambda || alpha) throw ConfigError("baseline takes neither lambda nor alpha");
      break;
    case ModelKind::adg:
      if (!lambda) throw ConfigError("adg requires lambda");
      if (alpha) throw ConfigError("adg does not take alpha");
      if (!(*lambda >= 0.0) || !std::isfinite(*lambda)) throw ConfigError("lambda must be finite and >= 0");
      break;
    case ModelKind::irm:
      if (!alpha) throw ConfigError("irm requires alpha");
      if (lambda) throw ConfigError("irm does not take lambda");
      if (!(*alpha >= 0.0) || !std::isfinite(*alpha)) throw ConfigError("alpha must be finite and >= 0");
      break;
  }
}

double TrainConfig::coefficient() const {
  if (kind == ModelKind::adg) return lambda.value_or(0.0);
  if (kind == ModelKind::irm) return alpha.value_or(0.0);
  return 0.0;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json doc;
  doc["kind"] = models::to_string(kind);
  doc["hidden_layer_count"] = generator.hidden_layer_count;
  doc["units"] = generator.units;
  doc["regularization_coefficient"] = generator.regularization_coefficient;
  doc["ssi_head_widths"] = heads.ssi_head_widths;
  doc["classifier_widths"] = heads.classifier_widths;
  doc["epochs"] = epochs;
  doc["batch_size"] = batch_size;
  doc["learning_rate"] = learning_rate;
  if (lambda) doc["lambda"] = *lambda;
  if (alpha) doc["alpha"] = *alpha;
  doc["seeds"] = seeds;
  doc["validation_fraction"] = validation_fraction;
  return doc;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "kind", "hidden_layer_count", "units", "regularization_coefficient", "ssi_head_widths",
      "classifier_widths", "epochs", "batch_size", "learning_rate", "lambda", "alpha", "seeds",
      "validation_fraction"};
  if (!doc.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) throw ConfigError("train config: unknown field '" + key + "'");
  TrainConfig c;
  try {
    c.kind = models::parse_kind(doc.at("kind").get<std::string>());
    if (doc.contains("hidden_layer_count")) c.generator.hidden_layer_count = doc["hidden_layer_count"].get<int>();
    if (doc.contains("units")) c.generator.units = doc["units"].get<std::size_t>();
    if (doc.contains("regularization_coefficient"))
      c.generator.regularization_coefficient = doc["regularization_coefficient"].get<double>();
    if (doc.contains("ssi_head_widths"))
      c.heads.ssi_head_widths = doc["ssi_head_widths"].get<std::vector<std::size_t>>();
    if (doc.contains("classifier_widths"))
      c.heads.classifier_widths = doc["classifier_widths"].get<std::vector<std::size_t>>();
    if (doc.contains("epochs")) c.epochs = doc["epochs"].get<std::size_t>();
    if (doc.contains("batch_size")) c.batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.contains("learning_rate")) c.learning_rate = doc["learning_rate"].get<double>();
    if (doc.contains("lambda")) c.lambda = doc["lambda"].get<double>();
    if (doc.contains("alpha")) c.alpha = doc["alpha"].get<double>();
    if (doc.contains("seeds")) c.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("validation_fraction")) c.validation_fraction = doc["validation_fraction"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (c.kind == ModelKind::adg) c.heads.grl_lambda = c.lambda.value_or(c.heads.grl_lambda);
  c.validate();
  return c;
}

std::string log_csv(const std::vector<LogRow>& rows) {
  std::ostringstream out;
  out << kLogHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.split << ',' << io::format_double(r.total) << ',' << io::format_double(r.ssi_mse)
        << ',' << fmt_opt(r.domain_ce) << ',' << fmt_opt(r.irm_penalty) << ',' << fmt_opt(r.l2) << '\n';
  }
  return out.str();
}

dataset::DatasetSplit prepare_split(std::span<const drillsim::WellRecord> wells, const dataset::Assignment& assignment,
                                    double validation_fraction) {
  dataset::SplitOptions options;
  options.holdout_fraction = validation_fraction;
  return dataset::assemble_split(wells, assignment, options);
}

TrainResult train(const TrainConfig& config, const dataset::DatasetSplit& split, std::uint64_t seed) {
  config.validate();
  if (split.train.empty()) throw ConfigError("split has no training samples");
  if (split.validation.empty()) throw ConfigError("split has no validation samples (checkpoint selection needs them)");

  Batcher batcher(config, split.train, seed);
  models::HeadConfig heads = config.heads;
  if (config.kind == ModelKind::adg) {
    if (batcher.domain_count() < 2)
      throw ConfigError("adg needs at least 2 labelled training domains, got " +
                        std::to_string(batcher.domain_count()));
    if (heads.classifier_widths.empty()) heads.classifier_widths = {1};
    heads.classifier_widths.back() = split.domain_count;
    heads.grl_lambda = *config.lambda;
  }
  if (config.kind == ModelKind::irm && batcher.domain_count() == 0)
    throw ConfigError("irm needs domain-labelled training samples");

  TrainResult result;
  result.bundle = models::build_model(config.kind, config.generator, heads, seed);
  models::ModelBundle& bundle = result.bundle;
  ad::Adam adam({config.learning_rate});
  std::set<std::string> warnings;

  Ptrs validation;
  std::vector<double> validation_targets;
  for (const auto& s : split.validation) {
    validation.push_back(&s);
    validation_targets.push_back(s.ssi);
  }

  ad::ParameterSet best = bundle.params;
  double best_mse = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    LogRow row;
    row.epoch = epoch;
    row.split = "train";
    double ce_sum = 0.0, pen_sum = 0.0, l2_sum = 0.0;
    std::size_t batches = 0;

    auto account = [&](const objectives::LossBreakdown& b, std::size_t index) {
      if (!std::isfinite(b.total)) {
        std::ostringstream msg;
        msg << "loss is not finite at epoch " << epoch << ", batch " << index << " (ssi_mse " << b.ssi_mse << ")";
        throw NumericalError(msg.str());
      }
      row.total += b.total;
      row.ssi_mse += b.ssi_mse;
      ce_sum += b.domain_ce.value_or(0.0);
      pen_sum += b.irm_penalty.value_or(0.0);
      l2_sum += b.l2;
      for (const auto& w : b.warnings) warnings.insert(w);
      ++batches;
      adam.step(bundle.params);
    };

    if (config.kind == ModelKind::irm) {
      for (std::size_t step = 0; step < batcher.irm_steps(); ++step) {
        std::vector<objectives::Batch> domain_batches;
        for (const auto& sub : batcher.irm_step()) domain_batches.push_back(objectives::make_batch(sub));
        account(objectives::irm_loss(bundle, domain_batches, *config.alpha), step);
      }
    } else {
      const auto batches_of_epoch = batcher.epoch_batches();
      for (std::size_t i = 0; i < batches_of_epoch.size(); ++i) {
        const auto batch = objectives::make_batch(batches_of_epoch[i]);
        account(config.kind == ModelKind::adg ? objectives::adg_loss(bundle, batch, *config.lambda)
                                              : objectives::erm_loss(bundle, batch),
                i);
      }
    }
    const double n = static_cast<double>(batches);
    row.total /= n;
    row.ssi_mse /= n;
    row.l2 = l2_sum / n;
    if (config.kind == ModelKind::adg) row.domain_ce = ce_sum / n;
    if (config.kind == ModelKind::irm) row.irm_penalty = pen_sum / n;
    result.log.push_back(row);

    const auto pred = models::predict(bundle, validation);
    const double val_mse = metrics::mse(validation_targets, pred);
    if (!std::isfinite(val_mse)) {
      throw NumericalError("validation MSE is not finite at epoch " + std::to_string(epoch));
    }
    LogRow vrow;
    vrow.epoch = epoch;
    vrow.split = "validation";
    vrow.total = val_mse;
    vrow.ssi_mse = val_mse;
    result.log.push_back(vrow);

    if (val_mse < best_mse) {
      best_mse = val_mse;
      best = bundle.params;
      result.best_epoch = epoch;
    }
  }

  bundle.params = std::move(best);
  for (auto& p : bundle.params) p.tensor.drop_gradient();
  result.best_validation_mse = best_mse;
  result.warnings.assign(warnings.begin(), warnings.end());
  return result;
}

int predicted_class(double ssi) {
  if (!std::isfinite(ssi) || ssi < 0.0) return 1;
  return dataset::bin_ssi(ssi);
}

std::vector<WellEvaluation> evaluate_wells(const models::ModelBundle& bundle,
                                           std::span<const dataset::SequenceSample> samples) {
  std::vector<WellEvaluation> out;
  for (const auto& [well, group] : dataset::group_by_well(samples)) {
    WellEvaluation e;
    e.well_id = well;
    e.pred_ssi = models::predict(bundle, group);
    for (std::size_t i = 0; i < group.size(); ++i) {
      e.t_start.push_back(group[i]->t_start);
      e.true_ssi.push_back(group[i]->ssi);
      e.true_class.push_back(group[i]->severity_class);
      e.pred_class.push_back(predicted_class(e.pred_ssi[i]));
    }
    e.mse = metrics::mse(e.true_ssi, e.pred_ssi);
    e.ndtw = metrics::normalized_dtw(e.true_ssi, e.pred_ssi);
    e.confusion = metrics::confusion_matrix(e.true_class, e.pred_class);
    e.severe_recall = metrics::severe_recall(e.true_class, e.pred_class);
    out.push_back(std::move(e));
  }
  return out;
}

std::string predictions_csv(const std::vector<WellEvaluation>& wells) {
  std::ostringstream out;
  out << kPredictionsHeader << '\n';
  for (const auto& w : wells) {
    for (std::size_t i = 0; i < w.true_ssi.size(); ++i) {
      out << w.well_id << ',' << io::format_double(w.t_start[i]) << ',' << io::format_double(w.true_ssi[i]) << ','
          << io::format_double(w.pred_ssi[i]) << ',' << w.true_class[i] << ',' << w.pred_class[i] << '\n';
    }
  }
  return out.str();
}

nlohmann::json evaluation_json(const std::vector<WellEvaluation>& wells) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& w : wells) {
    nlohmann::json e;
    e["sequences"] = w.true_ssi.size();
    e["mse"] = w.mse;
    e["ndtw"] = w.ndtw;
    e["confusion"] = w.confusion.to_json();
    e["severe_recall"] = w.severe_recall ? nlohmann::json(*w.severe_recall) : nlohmann::json(nullptr);
    doc[w.well_id] = std::move(e);
  }
  return doc;
}

// Grid search -----------------------------------------------------------------

GridStage parse_stage(const std::string& text) {
  if (text == "reg" || text == "regularization") return GridStage::regularization;
  if (text == "arch" || text == "architecture") return GridStage::architecture;
  throw ConfigError("unknown grid stage '" + text + "' (expected reg or arch)");
}

std::string to_string(GridStage stage) { return stage == GridStage::regularization ? "reg" : "arch"; }

void GridSpec::validate() const {
  if (regularization_values.empty() || hidden_layer_values.empty() || lambda_values.empty() || alpha_values.empty())
    throw ConfigError("grid axes must not be empty");
  if (validation_cases.empty()) throw ConfigError("grid needs at least one validation case");
  if (seeds_per_cell == 0) throw ConfigError("seeds_per_cell must be positive");
}

GridResult grid_search(const TrainConfig& base, const GridSpec& grid, GridStage stage,
                       std::span<const drillsim::WellRecord> wells, std::size_t workers) {
  base.validate();
  grid.validate();

  struct Cell {
    double reg;
    int hidden;
    double coef;
  };
  std::vector<double> coefs;
  if (base.kind == ModelKind::adg) coefs = grid.lambda_values;
  else if (base.kind == ModelKind::irm) coefs = grid.alpha_values;
  else coefs = {0.0};
  std::vector<Cell> cells;
  if (stage == GridStage::regularization) {
    for (double r : grid.regularization_values)
      for (double c : coefs) cells.push_back({r, base.generator.hidden_layer_count, c});
  } else {
    for (int h : grid.hidden_layer_values)
      for (double c : coefs) cells.push_back({base.generator.regularization_coefficient, h, c});
  }

  GridResult result;
  std::set<std::string> touched;
  struct CaseData {
    std::optional<dataset::DatasetSplit> split;
    std::string error;
  };
  std::vector<CaseData> cases(grid.validation_cases.size());
  for (std::size_t k = 0; k < grid.validation_cases.size(); ++k) {
    const auto& vc = grid.validation_cases[k];
    try {
      std::vector<drillsim::WellRecord> subset;
      for (const auto& w : wells) {
        if (vc.assignment.contains(w.well_id)) subset.push_back(w);
      }
      for (const auto& [well, part] : vc.assignment) {
        if (part == dataset::Partition::test)
          throw ConfigError("case '" + vc.name + "' assigns well '" + well + "' to test");
      }
      cases[k].split = dataset::assemble_split(subset, vc.assignment);
      if (cases[k].split->validation.empty()) throw ConfigError("case '" + vc.name + "' has no validation wells");
      for (const auto& w : subset) touched.insert(w.well_id);
    } catch (const std::exception& e) {
      cases[k].split.reset();
      cases[k].error = e.what();
    }
  }
  result.wells_touched.assign(touched.begin(), touched.end());

  struct RunOutcome {
    bool ok = false;
    double mse = 0.0;
    double ndtw = 0.0;
    std::string error;
  };
  const std::size_t S = grid.seeds_per_cell;
  const std::size_t C = cells.size();
  std::vector<RunOutcome> outcomes(cases.size() * C * S);
  const std::uint64_t seed0 = base.seeds.front();

  run_parallel(outcomes.size(), workers, [&](std::size_t job) {
    const std::size_t k = job / (C * S);
    const std::size_t c = (job / S) % C;
    const std::size_t s = job % S;
    RunOutcome& out = outcomes[job];
    if (!cases[k].split) {
      out.error = cases[k].error;
      return;
    }
    try {
      TrainConfig cfg = base;
      cfg.generator.regularization_coefficient = cells[c].reg;
      cfg.generator.hidden_layer_count = cells[c].hidden;
      if (cfg.kind == ModelKind::adg) cfg.lambda = cells[c].coef;
      if (cfg.kind == ModelKind::irm) cfg.alpha = cells[c].coef;
      const auto run = train(cfg, *cases[k].split, seed0 + s);
      const auto evals = evaluate_wells(run.bundle, cases[k].split->validation);
      std::vector<double> truth, pred, ndtws;
      for (const auto& e : evals) {
        truth.insert(truth.end(), e.true_ssi.begin(), e.true_ssi.end());
        pred.insert(pred.end(), e.pred_ssi.begin(), e.pred_ssi.end());
        ndtws.push_back(e.ndtw);
      }
      out.mse = metrics::mse(truth, pred);
      out.ndtw = mean_of(ndtws);
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  const std::string stage_name = to_string(stage);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> case_mse, case_ndtw;
    bool all_valid = true;
    for (std::size_t k = 0; k < cases.size(); ++k) {
      GridRow row{stage_name, grid.validation_cases[k].name, cells[c].reg, cells[c].hidden, cells[c].coef, 0, {}, {}, ""};
      if (!cases[k].split) {
        row.status = "error: " + cases[k].error;
        all_valid = false;
        result.rows.push_back(row);
        continue;
      }
      std::vector<double> mses, ndtws;
      std::string failure;
      for (std::size_t s = 0; s < S; ++s) {
        const auto& o = outcomes[(k * C + c) * S + s];
        if (o.ok) {
          mses.push_back(o.mse);
          ndtws.push_back(o.ndtw);
        } else if (failure.empty()) {
          failure = o.error;
        }
      }
      row.runs = mses.size();
      if (mses.size() == S) {
        row.validation_mse = mean_of(mses);
        row.validation_ndtw = mean_of(ndtws);
        row.status = "ok";
        case_mse.push_back(*row.validation_mse);
        case_ndtw.push_back(*row.validation_ndtw);
      } else {
        row.status = "invalid: " + failure;
        all_valid = false;
      }
      result.rows.push_back(row);
    }
    GridRow mean_row{stage_name, "mean", cells[c].reg, cells[c].hidden, cells[c].coef, S * cases.size(), {}, {}, ""};
    if (all_valid && !case_mse.empty()) {
      mean_row.validation_mse = mean_of(case_mse);
      mean_row.validation_ndtw = mean_of(case_ndtw);
      mean_row.status = "ok";
      if (!result.best || *mean_row.validation_mse < *result.best->validation_mse) result.best = mean_row;
    } else {
      mean_row.runs = 0;
      mean_row.status = "invalid: a case of this cell failed";
    }
    result.rows.push_back(mean_row);
  }
  return result;
}

std::string grid_csv(const GridResult& result) {
  auto quote = [](const std::string& text) {
    std::string q = "\"";
    for (char ch : text) {
      if (ch == '"') q += '"';
      if (ch == '\n' || ch == '\r') {
        q += ' ';
        continue;
      }
      q += ch;
    }
    return q + "\"";
  };
  std::ostringstream out;
  out << kGridHeader << '\n';
  for (const auto& r : result.rows) {
    out << r.stage << ',' << r.case_name << ',' << io::format_double(r.regularization) << ',' << r.hidden_layers << ','
        << io::format_double(r.coefficient) << ',' << r.runs << ',' << fmt_opt(r.validation_mse) << ','
        << fmt_opt(r.validation_ndtw) << ',' << (r.status == "ok" ? r.status : quote(r.status)) << '\n';
  }
  return out.str();
}

// Final comparison ------------------------------------------------------------

const KindReport& EvalReport::at(ModelKind kind) const {
  for (const auto& k : kinds)
    if (k.kind == kind) return k;
  throw ConfigError("report has no " + models::to_string(kind) + " entry");
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json doc;
  for (const auto& k : kinds) {
    nlohmann::json e;
    e["well_ndtw"] = k.well_ndtw;
    e["well_mse"] = k.well_mse;
    nlohmann::json recall = nlohmann::json::object();
    for (const auto& [w, r] : k.well_severe_recall) recall[w] = r ? nlohmann::json(*r) : nlohmann::json(nullptr);
    e["well_severe_recall"] = recall;
    e["mean_ndtw"] = k.mean_ndtw;
    e["mean_severe_recall"] = k.mean_severe_recall ? nlohmann::json(*k.mean_severe_recall) : nlohmann::json(nullptr);
    e["confusion"] = k.confusion.to_json();
    e["seeds"] = k.bundles.size();
    doc["models"][models::to_string(k.kind)] = e;
  }
  nlohmann::json imp = nlohmann::json::array();
  for (const auto& [pair, values] : improvement_pct) {
    imp.push_back({{"reference", pair.first}, {"candidate", pair.second}, {"improvement_pct", values}});
  }
  doc["improvements"] = imp;
  return doc;
}

EvalReport compare_final(const std::vector<TrainConfig>& configs, const dataset::DatasetSplit& split,
                         const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  if (configs.empty()) throw ConfigError("compare_final: no model configs");
  if (seeds.empty()) throw ConfigError("compare_final: no seeds");
  if (split.test.empty()) throw ConfigError("compare_final: split has no test samples");

  struct Run {
    std::optional<models::ModelBundle> bundle;
    std::vector<WellEvaluation> evals;
    std::exception_ptr error;
  };
  std::vector<Run> runs(configs.size() * seeds.size());
  run_parallel(runs.size(), workers, [&](std::size_t job) {
    const auto& cfg = configs[job / seeds.size()];
    const auto seed = seeds[job % seeds.size()];
    try {
      auto r = train(cfg, split, seed);
      runs[job].evals = evaluate_wells(r.bundle, split.test);
      runs[job].bundle = std::move(r.bundle);
    } catch (...) {
      runs[job].error = std::current_exception();
    }
  });
  for (const auto& r : runs)
    if (r.error) std::rethrow_exception(r.error);

  EvalReport report;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    KindReport k;
    k.kind = configs[c].kind;
    std::map<std::string, std::vector<double>> ndtw, mse, recall;
    std::vector<double> pooled_recall;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      auto& run = runs[c * seeds.size() + s];
      std::vector<int> all_true, all_pred;
      for (const auto& e : run.evals) {
        ndtw[e.well_id].push_back(e.ndtw);
        mse[e.well_id].push_back(e.mse);
        if (e.severe_recall) recall[e.well_id].push_back(*e.severe_recall);
        all_true.insert(all_true.end(), e.true_class.begin(), e.true_class.end());
        all_pred.insert(all_pred.end(), e.pred_class.begin(), e.pred_class.end());
        for (std::size_t i = 0; i < 4; ++i)
          for (std::size_t j = 0; j < 4; ++j) k.confusion.counts[i][j] += e.confusion.counts[i][j];
      }
      if (auto r = metrics::severe_recall(all_true, all_pred)) pooled_recall.push_back(*r);
      k.bundles.push_back(std::move(*run.bundle));
    }
    std::vector<double> well_means;
    for (const auto& [w, v] : ndtw) {
      k.well_ndtw[w] = mean_of(v);
      k.well_mse[w] = mean_of(mse[w]);
      k.well_severe_recall[w] = recall[w].empty() ? std::nullopt : std::optional<double>(mean_of(recall[w]));
      well_means.push_back(k.well_ndtw[w]);
    }
    k.mean_ndtw = mean_of(well_means);
    if (!pooled_recall.empty()) k.mean_severe_recall = mean_of(pooled_recall);
    for (std::size_t i = 0; i < 4; ++i) {
      std::size_t total = 0;
      for (auto n : k.confusion.counts[i]) total += n;
      for (std::size_t j = 0; j < 4; ++j)
        k.confusion.rates[i][j] =
            total == 0 ? 0.0 : static_cast<double>(k.confusion.counts[i][j]) / static_cast<double>(total);
    }
    report.kinds.push_back(std::move(k));
  }

  // Reference baseline first, then IRM as reference for ADG.
  auto add_pair = [&](ModelKind ref, ModelKind cand) {
    const KindReport *r = nullptr, *c = nullptr;
    for (const auto& k : report.kinds) {
      if (k.kind == ref) r = &k;
      if (k.kind == cand) c = &k;
    }
    if (!r || !c) return;
    std::map<std::string, double> values;
    std::vector<double> per_well;
    for (const auto& [w, v] : r->well_ndtw) {
      values[w] = metrics::improvement_pct(v, c->well_ndtw.at(w));
      per_well.push_back(values[w]);
    }
    values["mean"] = mean_of(per_well);
    report.improvement_pct[{models::to_string(ref), models::to_string(cand)}] = values;
  };
  add_pair(ModelKind::baseline, ModelKind::adg);
  add_pair(ModelKind::baseline, ModelKind::irm);
  add_pair(ModelKind::irm, ModelKind::adg);
  return report;
}

}  // namespace ssdg::training
