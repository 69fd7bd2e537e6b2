#include "ssdg/models.hpp"

#include <algorithm>
#include <cmath>

#include "ssdg/autodiff/checkpoint.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/rng.hpp"

namespace ssdg::models {
namespace {

constexpr std::uint64_t kGeneratorStream = 101;
constexpr std::uint64_t kSsiStream = 202;
constexpr std::uint64_t kClassifierStream = 303;

std::string lstm_name(std::size_t i, const char* slot) {
  return std::string(kGeneratorGroup) + "/lstm" + std::to_string(i) + "/" + slot;
}
std::string ln_name(std::size_t i, const char* slot) {
  return std::string(kGeneratorGroup) + "/ln" + std::to_string(i) + "/" + slot;
}
std::string dense_name(const std::string& group, std::size_t i, const char* slot) {
  return group + "/dense" + std::to_string(i) + "/" + slot;
}

ad::Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out, ad::Shape shape) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  ad::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

void add_dense_stack(ad::ParameterSet& params, const std::string& group, std::size_t in,
                     const std::vector<std::size_t>& widths, Rng& rng) {
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::size_t out = widths[i];
    params.add({dense_name(group, i, "kernel"), group, ad::ParamRole::kernel, false,
                glorot(rng, in, out, {in, out})});
    params.add({dense_name(group, i, "bias"), group, ad::ParamRole::bias, false, ad::Tensor({out})});
    in = out;
  }
}

void validate_heads(ModelKind kind, const HeadConfig& heads) {
  if (kind != ModelKind::baseline) {
    if (heads.ssi_head_widths.empty() || heads.ssi_head_widths.back() != 1)
      throw ConfigError("ssi_head_widths must end with 1");
  }
  if (kind == ModelKind::adg) {
    if (heads.classifier_widths.empty()) throw ConfigError("classifier_widths must not be empty");
    if (heads.classifier_widths.back() < 2) throw ConfigError("classifier needs at least 2 domains");
  }
  for (auto w : heads.ssi_head_widths)
    if (w == 0) throw ConfigError("ssi_head_widths: zero width");
  for (auto w : heads.classifier_widths)
    if (w == 0) throw ConfigError("classifier_widths: zero width");
}

std::size_t count_layers(const ModelBundle& bundle, const std::string& kind_prefix) {
  std::size_t n = 0;
  while (bundle.params.contains(std::string(kGeneratorGroup) + "/" + kind_prefix + std::to_string(n) +
                                (kind_prefix == "lstm" ? "/kernel" : "/gain")))
    ++n;
  return n;
}

}  // namespace

std::size_t GeneratorConfig::pair_count() const {
  return 2 + static_cast<std::size_t>(hidden_layer_count / 2);
}

void GeneratorConfig::validate() const {
  if (hidden_layer_count < 0) throw ConfigError("hidden_layer_count must be non-negative");
  if (hidden_layer_count % 2 != 0)
    throw ConfigError("hidden_layer_count must be even (LSTM+LN pairs), got " + std::to_string(hidden_layer_count));
  if (units == 0) throw ConfigError("units must be positive");
  if (input_features == 0) throw ConfigError("input_features must be positive");
  if (!(regularization_coefficient >= 0.0) || !std::isfinite(regularization_coefficient))
    throw ConfigError("regularization_coefficient must be finite and non-negative");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::baseline: return "baseline";
    case ModelKind::adg: return "adg";
    case ModelKind::irm: return "irm";
  }
  return "?";
}

ModelKind parse_kind(const std::string& text) {
  if (text == "baseline") return ModelKind::baseline;
  if (text == "adg") return ModelKind::adg;
  if (text == "irm") return ModelKind::irm;
  throw ConfigError("unknown model kind '" + text + "' (expected baseline, adg or irm)");
}

std::size_t ModelBundle::domain_count() const {
  return kind == ModelKind::adg ? heads.classifier_widths.back() : 0;
}

ModelBundle build_model(ModelKind kind, const GeneratorConfig& generator, const HeadConfig& heads,
                        std::uint64_t seed) {
  generator.validate();
  validate_heads(kind, heads);

  ModelBundle b;
  b.kind = kind;
  b.generator = generator;
  b.heads = heads;
  if (kind == ModelKind::baseline) b.heads.ssi_head_widths = {1};
  if (kind != ModelKind::adg) b.heads.classifier_widths.clear();
  if (kind == ModelKind::irm) b.irm_beta = 1.0;

  const std::size_t H = generator.units;
  Rng gen_rng(seed, kGeneratorStream);
  std::size_t in = generator.input_features;
  for (std::size_t i = 0; i < generator.pair_count(); ++i) {
    b.params.add({lstm_name(i, "kernel"), kGeneratorGroup, ad::ParamRole::kernel, true,
                  glorot(gen_rng, in, 4 * H, {in, 4 * H})});
    b.params.add({lstm_name(i, "recurrent"), kGeneratorGroup, ad::ParamRole::recurrent, true,
                  glorot(gen_rng, H, 4 * H, {H, 4 * H})});
    ad::Tensor bias({4 * H});
    for (std::size_t k = H; k < 2 * H; ++k) bias[k] = 1.0;  // forget gate
    b.params.add({lstm_name(i, "bias"), kGeneratorGroup, ad::ParamRole::bias, false, std::move(bias)});
    b.params.add({ln_name(i, "gain"), kGeneratorGroup, ad::ParamRole::kernel, false, ad::Tensor({H}, 1.0)});
    b.params.add({ln_name(i, "shift"), kGeneratorGroup, ad::ParamRole::bias, false, ad::Tensor({H})});
    in = H;
  }

  Rng ssi_rng(seed, kSsiStream);
  add_dense_stack(b.params, kSsiGroup, H, b.heads.ssi_head_widths, ssi_rng);
  if (kind == ModelKind::adg) {
    Rng cls_rng(seed, kClassifierStream);
    add_dense_stack(b.params, kClassifierGroup, H, b.heads.classifier_widths, cls_rng);
  }
  return b;
}

std::size_t generator_parameter_count(const ModelBundle& bundle) {
  return bundle.params.scalar_count(kGeneratorGroup);
}

std::size_t lstm_layer_count(const ModelBundle& bundle) { return count_layers(bundle, "lstm"); }
std::size_t layer_norm_count(const ModelBundle& bundle) { return count_layers(bundle, "ln"); }

BoundModel::BoundModel(ad::Tape& tape, ModelBundle& bundle, const ad::BoundParameters::Selector& trainable)
    : tape_(&tape), bundle_(&bundle), params_(tape, bundle.params, trainable) {}

ad::Var BoundModel::embed(ad::Var batch) {
  const auto& shape = tape_->value(batch).shape();
  if (shape.size() != 3 || shape[2] != bundle_->generator.input_features)
    throw ShapeError("model input must be [B x T x " + std::to_string(bundle_->generator.input_features) +
                     "], got " + ad::shape_string(shape));
  ad::Var x = batch;
  for (std::size_t i = 0; i < bundle_->generator.pair_count(); ++i) {
    x = ad::lstm(*tape_, x, params_[lstm_name(i, "kernel")], params_[lstm_name(i, "recurrent")],
                 params_[lstm_name(i, "bias")]);
    x = ad::layer_norm(*tape_, x, params_[ln_name(i, "gain")], params_[ln_name(i, "shift")]);
  }
  return ad::last_timestep(*tape_, x);
}

ad::Var BoundModel::dense_stack(ad::Var input, const std::string& prefix, std::size_t layers) {
  ad::Var x = input;
  for (std::size_t i = 0; i < layers; ++i) {
    const auto act = i + 1 == layers ? ad::Activation::linear : ad::Activation::relu;
    x = ad::dense(*tape_, x, params_[dense_name(prefix, i, "kernel")], params_[dense_name(prefix, i, "bias")], act);
  }
  return x;
}

ad::Var BoundModel::ssi(ad::Var embedding) {
  return dense_stack(embedding, kSsiGroup, bundle_->heads.ssi_head_widths.size());
}

ad::Var BoundModel::domain_logits(ad::Var embedding, double lambda) {
  if (!bundle_->has_classifier())
    throw ConfigError("domain classifier requested on a " + to_string(bundle_->kind) + " model");
  const ad::Var reversed = ad::gradient_reversal(*tape_, embedding, lambda);
  return dense_stack(reversed, kClassifierGroup, bundle_->heads.classifier_widths.size());
}

ad::Tensor stack_features(std::span<const dataset::SequenceSample* const> samples) {
  ad::Tensor t({samples.size(), dataset::kWindow, dataset::kChannels});
  auto out = t.values();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& f = samples[i]->features;
    if (f.size() != dataset::kFeatureCount)
      throw ShapeError("sample feature size " + std::to_string(f.size()) + ", expected " +
                       std::to_string(dataset::kFeatureCount));
    std::copy(f.begin(), f.end(), out.begin() + static_cast<std::ptrdiff_t>(i * dataset::kFeatureCount));
  }
  return t;
}

namespace {

// Inference binds every parameter without gradients; nothing is written back.
BoundModel inference_model(ad::Tape& tape, const ModelBundle& bundle) {
  return BoundModel(tape, const_cast<ModelBundle&>(bundle), [](const ad::Parameter&) { return false; });
}

}  // namespace

ad::Tensor forward_ssi(const ModelBundle& bundle, const ad::Tensor& batch) {
  ad::Tape tape;
  auto model = inference_model(tape, bundle);
  const ad::Var out = model.ssi(model.embed(tape.leaf(batch, false)));
  const auto& v = tape.value(out);
  return ad::Tensor({v.dim(0)}, std::vector<double>(v.values().begin(), v.values().end()));
}

ad::Tensor forward_domain(const ModelBundle& bundle, const ad::Tensor& batch) {
  if (!bundle.has_classifier())
    throw ConfigError("forward_domain requires an adg model, got " + to_string(bundle.kind));
  ad::Tape tape;
  auto model = inference_model(tape, bundle);
  const ad::Var out = model.domain_logits(model.embed(tape.leaf(batch, false)), bundle.heads.grl_lambda);
  return tape.value(out);
}

std::vector<double> predict(const ModelBundle& bundle, std::span<const dataset::SequenceSample* const> samples,
                            std::size_t chunk) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const std::size_t n = std::min(chunk, samples.size() - start);
    const ad::Tensor pred = forward_ssi(bundle, stack_features(samples.subspan(start, n)));
    out.insert(out.end(), pred.values().begin(), pred.values().end());
  }
  return out;
}

std::vector<double> predict(const ModelBundle& bundle, std::span<const dataset::SequenceSample> samples,
                            std::size_t chunk) {
  std::vector<const dataset::SequenceSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return predict(bundle, ptrs, chunk);
}

ad::Tensor embed(const ModelBundle& bundle, std::span<const dataset::SequenceSample* const> samples,
                 std::size_t chunk) {
  const std::size_t H = bundle.generator.units;
  ad::Tensor out({samples.size(), H});
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const std::size_t n = std::min(chunk, samples.size() - start);
    ad::Tape tape;
    auto model = inference_model(tape, bundle);
    const ad::Tensor batch = stack_features(samples.subspan(start, n));
    const auto& z = tape.value(model.embed(tape.leaf(batch, false)));
    std::copy(z.values().begin(), z.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(start * H));
  }
  return out;
}

nlohmann::json architecture_json(const ModelBundle& bundle) {
  nlohmann::json doc;
  doc["kind"] = to_string(bundle.kind);
  doc["hidden_layer_count"] = bundle.generator.hidden_layer_count;
  doc["units"] = bundle.generator.units;
  doc["regularization_coefficient"] = bundle.generator.regularization_coefficient;
  doc["input_features"] = bundle.generator.input_features;
  doc["ssi_head_widths"] = bundle.heads.ssi_head_widths;
  doc["classifier_widths"] = bundle.heads.classifier_widths;
  doc["grl_lambda"] = bundle.heads.grl_lambda;
  doc["lstm_layers"] = lstm_layer_count(bundle);
  doc["layer_norm_layers"] = layer_norm_count(bundle);
  if (bundle.irm_beta) doc["irm_beta"] = *bundle.irm_beta;
  return doc;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir, const std::string& stem) {
  ad::write_checkpoint(dir, stem, bundle.params, nlohmann::json{{"architecture", architecture_json(bundle)}});
}

ModelBundle load_bundle(const std::filesystem::path& dir, const std::string& stem) {
  auto ckpt = ad::read_checkpoint(dir, stem);
  if (!ckpt.header.contains("architecture"))
    throw ConfigError((dir / (stem + ".json")).string() + ": missing architecture header");
  const auto& a = ckpt.header["architecture"];
  try {
    GeneratorConfig gen;
    gen.hidden_layer_count = a.at("hidden_layer_count").get<int>();
    gen.units = a.at("units").get<std::size_t>();
    gen.regularization_coefficient = a.at("regularization_coefficient").get<double>();
    gen.input_features = a.at("input_features").get<std::size_t>();
    HeadConfig heads;
    heads.ssi_head_widths = a.at("ssi_head_widths").get<std::vector<std::size_t>>();
    heads.classifier_widths = a.at("classifier_widths").get<std::vector<std::size_t>>();
    heads.grl_lambda = a.at("grl_lambda").get<double>();
    const ModelKind kind = parse_kind(a.at("kind").get<std::string>());

    ModelBundle b = build_model(kind, gen, heads, 0);
    for (auto& p : b.params) {
      if (!ckpt.params.contains(p.name)) throw ConfigError("checkpoint lacks parameter " + p.name);
      const auto& src = ckpt.params.at(p.name).tensor;
      if (src.shape() != p.tensor.shape())
        throw ConfigError("checkpoint parameter " + p.name + " has shape " + ad::shape_string(src.shape()) +
                          ", expected " + ad::shape_string(p.tensor.shape()));
      p.tensor = src;
      p.tensor.drop_gradient();
    }
    if (ckpt.params.size() != b.params.size()) throw ConfigError("checkpoint has unexpected extra parameters");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((dir / (stem + ".json")).string() + ": " + e.what());
  }
}

}  // namespace ssdg::models
