#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssdg/autodiff/ops.hpp"
#include "ssdg/autodiff/parameters.hpp"
#include "ssdg/dataset.hpp"

namespace ssdg::models {

/// Generator depth follows the layer counting used for the reported
/// architecture: every LSTM is followed by a layer normalisation and the two
/// count as two layers. A generator with `hidden_layer_count` h has
///   1 input pair + h/2 hidden pairs + 1 output pair
/// so h = 6 gives 5 LSTM + 5 LN layers.
struct GeneratorConfig {
  int hidden_layer_count = 6;
  std::size_t units = 64;
  double regularization_coefficient = 1e-4;
  std::size_t input_features = dataset::kChannels;

  std::size_t pair_count() const;
  void validate() const;  // ConfigError on odd / negative depth or zero width
};

struct HeadConfig {
  std::vector<std::size_t> ssi_head_widths{60, 40, 20, 10, 1};
  std::vector<std::size_t> classifier_widths{60, 40, 20, 10, 6};
  double grl_lambda = 10.0;
};

enum class ModelKind { baseline, adg, irm };
std::string to_string(ModelKind kind);
ModelKind parse_kind(const std::string& text);

/// Generator (theta_G), SSI head (theta_SSI) and, for ADG, the domain
/// classifier (theta_C), all in one parameter set keyed by group.
struct ModelBundle {
  ModelKind kind = ModelKind::baseline;
  GeneratorConfig generator;
  HeadConfig heads;
  ad::ParameterSet params;
  std::optional<double> irm_beta;  // present (and 1.0) only for IRM

  std::size_t domain_count() const;
  bool has_classifier() const { return kind == ModelKind::adg; }
};

inline constexpr const char* kGeneratorGroup = "generator";
inline constexpr const char* kSsiGroup = "ssi_head";
inline constexpr const char* kClassifierGroup = "classifier";

/// Builds and initialises a bundle. Parameter streams are derived per group
/// from `seed`, so generators of different kinds built with the same seed and
/// config are identical. Baseline bundles get a single-neuron output layer
/// as their SSI head; `heads.ssi_head_widths` is ignored for them.
ModelBundle build_model(ModelKind kind, const GeneratorConfig& generator, const HeadConfig& heads,
                        std::uint64_t seed);

/// Parameter count of a generator, by walking the layer shapes of a built stack.
std::size_t generator_parameter_count(const ModelBundle& bundle);
std::size_t lstm_layer_count(const ModelBundle& bundle);
std::size_t layer_norm_count(const ModelBundle& bundle);

/// Model graph recorded on a tape. The heads share the one embedding node.
class BoundModel {
 public:
  /// Parameters rejected by `trainable` are bound as constants.
  BoundModel(ad::Tape& tape, ModelBundle& bundle, const ad::BoundParameters::Selector& trainable = {});

  /// batch [B x 60 x F] -> embedding [B x units] (last time step).
  ad::Var embed(ad::Var batch);
  /// embedding -> [B x 1]
  ad::Var ssi(ad::Var embedding);
  /// embedding -> GRL(lambda) -> classifier logits [B x N_S].
  ad::Var domain_logits(ad::Var embedding, double lambda);

  ad::BoundParameters& params() { return params_; }
  ad::Tape& tape() { return *tape_; }
  const ModelBundle& bundle() const { return *bundle_; }

 private:
  ad::Var dense_stack(ad::Var input, const std::string& prefix, std::size_t layers);

  ad::Tape* tape_;
  ModelBundle* bundle_;
  ad::BoundParameters params_;
};

/// Packs samples into a [B x 60 x 5] tensor.
ad::Tensor stack_features(std::span<const dataset::SequenceSample* const> samples);

/// Inference: SSI prediction per sample, processed in chunks.
std::vector<double> predict(const ModelBundle& bundle, std::span<const dataset::SequenceSample* const> samples,
                            std::size_t chunk = 256);
std::vector<double> predict(const ModelBundle& bundle, std::span<const dataset::SequenceSample> samples,
                            std::size_t chunk = 256);

/// forward_ssi over a ready batch tensor [B x 60 x F] -> [B].
ad::Tensor forward_ssi(const ModelBundle& bundle, const ad::Tensor& batch);

/// Domain logits [B x N_S]; throws ConfigError for non-ADG bundles.
ad::Tensor forward_domain(const ModelBundle& bundle, const ad::Tensor& batch);

/// Generator embeddings [N x units].
ad::Tensor embed(const ModelBundle& bundle, std::span<const dataset::SequenceSample* const> samples,
                 std::size_t chunk = 256);

nlohmann::json architecture_json(const ModelBundle& bundle);

/// checkpoint.json (architecture header + manifest) + checkpoint.*.bin.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir,
                 const std::string& stem = "checkpoint");
ModelBundle load_bundle(const std::filesystem::path& dir, const std::string& stem = "checkpoint");

}  // namespace ssdg::models
