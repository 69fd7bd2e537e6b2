#include "ssdg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ssdg/errors.hpp"
#include "ssdg/io.hpp"

namespace ssdg::dataset {
namespace {

std::array<const std::vector<double>*, kChannels> channels(const drillsim::WellRecord& r) {
  return {&r.surface_torque, &r.surface_wob, &r.rop, &r.flow_rate, &r.total_rotation_speed};
}

std::string feature_header() {
  std::string header = "t_start,partition";
  char name[16];
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    std::snprintf(name, sizeof name, ",f%03zu", i);
    header += name;
  }
  return header + ",ssi,class,domain_id";
}

}  // namespace

double compute_ssi(std::span<const double> window) {
  if (window.empty()) throw DomainError("compute_ssi: empty window");
  double lo = window[0], hi = window[0], sum = 0.0;
  for (const double v : window) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / static_cast<double>(window.size());
  if (!(mean > kSsiMeanTolerance)) {
    throw DomainError("compute_ssi: undefined for mean bit speed " + io::format_double(mean));
  }
  return (hi - lo) / mean;
}

int bin_ssi(double ssi) {
  if (!(ssi >= 0.0)) throw DomainError("bin_ssi: SSI must be a non-negative number");
  if (ssi < 0.3) return 1;
  if (ssi < 0.5) return 2;
  if (ssi < 0.7) return 3;
  return 4;
}

NormalizationStats NormalizationStats::fit(std::span<const drillsim::WellRecord* const> wells) {
  NormalizationStats stats;
  std::array<double, kChannels> sum{}, sum_sq{};
  std::size_t count = 0;
  for (const auto* well : wells) {
    stats.fitted_on.push_back(well->well_id);
    const auto ch = channels(*well);
    for (std::size_t c = 0; c < kChannels; ++c)
      for (const double v : *ch[c]) sum[c] += v;
    count += well->length();
  }
  for (std::size_t c = 0; c < kChannels; ++c) {
    stats.mean[c] = count ? sum[c] / static_cast<double>(count) : 0.0;
  }
  for (const auto* well : wells) {
    const auto ch = channels(*well);
    for (std::size_t c = 0; c < kChannels; ++c)
      for (const double v : *ch[c]) sum_sq[c] += (v - stats.mean[c]) * (v - stats.mean[c]);
  }
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double sd = count ? std::sqrt(sum_sq[c] / static_cast<double>(count)) : 0.0;
    stats.std[c] = sd > 0.0 ? sd : 1.0;
  }
  return stats;
}

nlohmann::json NormalizationStats::to_json() const {
  return {{"mean", mean}, {"std", std}, {"fitted_on", fitted_on}, {"channels", kChannelNames}};
}

NormalizationStats NormalizationStats::from_json(const nlohmann::json& doc) {
  NormalizationStats stats;
  stats.mean = doc.at("mean").get<std::array<double, kChannels>>();
  stats.std = doc.at("std").get<std::array<double, kChannels>>();
  stats.fitted_on = doc.at("fitted_on").get<std::vector<std::string>>();
  return stats;
}

std::vector<double> denormalize(const SequenceSample& sample, const NormalizationStats& stats) {
  std::vector<double> raw(sample.features.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t c = i % kChannels;
    raw[i] = sample.features[i] * stats.std[c] + stats.mean[c];
  }
  return raw;
}

WindowResult window_well(const drillsim::WellRecord& record, const NormalizationStats& stats) {
  WindowResult result;
  const std::size_t n = record.length();
  if (n < kWindow) {
    result.too_short = true;
    return result;
  }
  const auto ch = channels(record);
  for (std::size_t start = 0; start + kWindow <= n; start += kWindow) {
    const std::span<const double> bit(record.bit_speed.data() + start, kWindow);
    double ssi = 0.0;
    try {
      ssi = compute_ssi(bit);
    } catch (const DomainError&) {
      ++result.dropped;
      continue;
    }
    SequenceSample s;
    s.ssi = ssi;
    s.severity_class = bin_ssi(ssi);
    s.well_id = record.well_id;
    s.t_start = static_cast<double>(start);
    s.features.resize(kFeatureCount);
    for (std::size_t t = 0; t < kWindow; ++t)
      for (std::size_t c = 0; c < kChannels; ++c)
        s.features[t * kChannels + c] = ((*ch[c])[start + t] - stats.mean[c]) / stats.std[c];
    result.samples.push_back(std::move(s));
  }
  return result;
}

std::string to_string(Partition p) {
  switch (p) {
    case Partition::train: return "train";
    case Partition::validation: return "validation";
    case Partition::test: return "test";
  }
  return "train";
}

Partition parse_partition(const std::string& text) {
  if (text == "train") return Partition::train;
  if (text == "validation") return Partition::validation;
  if (text == "test") return Partition::test;
  throw ConfigError("unknown partition '" + text + "' (want train, validation or test)");
}

Assignment assignment_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("assignment must be a JSON object well_id -> partition");
  Assignment out;
  for (const auto& [well, part] : doc.items()) {
    if (!part.is_string()) throw ConfigError("assignment of well '" + well + "' must be a string");
    out[well] = parse_partition(part.get<std::string>());
  }
  return out;
}

nlohmann::json to_json(const Assignment& assignment) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [well, part] : assignment) doc[well] = to_string(part);
  return doc;
}

std::array<std::size_t, 4> DatasetSplit::class_histogram() const {
  std::array<std::size_t, 4> hist{};
  for (const auto* part : {&train, &validation, &test})
    for (const auto& s : *part) ++hist[static_cast<std::size_t>(s.severity_class - 1)];
  return hist;
}

DatasetSplit assemble_split(std::span<const drillsim::WellRecord> wells, const Assignment& assignment,
                            const SplitOptions& options) {
  if (options.holdout_fraction < 0.0 || options.holdout_fraction >= 1.0) {
    throw ConfigError("holdout_fraction must lie in [0, 1)");
  }
  DatasetSplit split;
  split.options = options;
  split.assignment = assignment;

  std::set<std::string> seen;
  for (const auto& w : wells) {
    if (!seen.insert(w.well_id).second) throw ConfigError("duplicate well '" + w.well_id + "'");
    if (!assignment.contains(w.well_id)) throw ConfigError("assignment does not cover well '" + w.well_id + "'");
    split.well_fields[w.well_id] = w.field_id;
    split.well_order.push_back(w.well_id);
  }
  for (const auto& [well, part] : assignment) {
    if (!seen.contains(well)) throw ConfigError("assignment names unknown well '" + well + "'");
  }

  std::set<std::string> fit_fields, test_fields;
  for (const auto& w : wells) {
    (assignment.at(w.well_id) == Partition::test ? test_fields : fit_fields).insert(w.field_id);
  }
  for (const auto& f : test_fields) {
    if (fit_fields.contains(f)) {
      throw ConfigError("field '" + f + "' has wells on both sides of the train/test boundary");
    }
  }

  std::vector<const drillsim::WellRecord*> train_wells;
  for (const auto& w : wells)
    if (assignment.at(w.well_id) == Partition::train) train_wells.push_back(&w);
  split.stats = NormalizationStats::fit(train_wells);

  int next_domain = 0;
  for (const auto& w : wells) {
    const Partition part = assignment.at(w.well_id);
    const bool labelled =
        part == Partition::train || (part == Partition::validation && options.domain_labels_for_validation);
    if (labelled) split.domain_map[w.well_id] = next_domain++;
  }
  split.domain_count = static_cast<std::size_t>(next_domain);

  for (const auto& w : wells) {
    WindowResult windows = window_well(w, split.stats);
    split.dropped[w.well_id] = windows.dropped;
    if (windows.too_short) split.warnings.push_back("well '" + w.well_id + "' is shorter than one window");
    const auto domain = split.domain_map.find(w.well_id);
    for (auto& s : windows.samples) s.domain_id = domain == split.domain_map.end() ? -1 : domain->second;

    const Partition part = assignment.at(w.well_id);
    auto& samples = windows.samples;
    if (part == Partition::train) {
      std::size_t held = 0;
      if (options.holdout_fraction > 0.0 && samples.size() > 1) {
        held = static_cast<std::size_t>(std::ceil(options.holdout_fraction * static_cast<double>(samples.size())));
        held = std::min(held, samples.size() - 1);
      }
      const std::size_t keep = samples.size() - held;
      std::move(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(keep), std::back_inserter(split.train));
      std::move(samples.begin() + static_cast<std::ptrdiff_t>(keep), samples.end(),
                std::back_inserter(split.validation));
    } else {
      auto& dst = part == Partition::validation ? split.validation : split.test;
      std::move(samples.begin(), samples.end(), std::back_inserter(dst));
    }
  }
  return split;
}

std::map<std::string, std::vector<const SequenceSample*>> group_by_well(std::span<const SequenceSample> samples) {
  std::map<std::string, std::vector<const SequenceSample*>> out;
  for (const auto& s : samples) out[s.well_id].push_back(&s);
  for (auto& [well, group] : out) {
    std::stable_sort(group.begin(), group.end(),
                     [](const SequenceSample* a, const SequenceSample* b) { return a->t_start < b->t_start; });
  }
  return out;
}

void write_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json doc;
  doc["assignment"] = to_json(split.assignment);
  doc["stats"] = split.stats.to_json();
  doc["well_order"] = split.well_order;
  doc["domain_map"] = split.domain_map;
  doc["domain_count"] = split.domain_count;
  doc["well_fields"] = split.well_fields;
  doc["dropped_windows"] = split.dropped;
  doc["warnings"] = split.warnings;
  doc["options"] = {{"domain_labels_for_validation", split.options.domain_labels_for_validation},
                    {"holdout_fraction", split.options.holdout_fraction}};
  io::write_json(dir / "split.json", doc);

  std::map<std::string, std::string> text;
  auto emit = [&text](const SequenceSample& s, Partition part) {
    auto& out = text[s.well_id];
    out += io::format_double(s.t_start);
    out += ',';
    out += to_string(part);
    for (const double v : s.features) {
      out += ',';
      out += io::format_double(v);
    }
    out += ',' + io::format_double(s.ssi) + ',' + std::to_string(s.severity_class) + ',' +
           std::to_string(s.domain_id) + '\n';
  };
  for (const auto& s : split.train) emit(s, Partition::train);
  for (const auto& s : split.validation) emit(s, Partition::validation);
  for (const auto& s : split.test) emit(s, Partition::test);
  const std::string header = feature_header() + "\n";
  for (const auto& well : split.well_order) {
    io::write_text(dir / well / "samples.csv", header + text[well]);
  }
}

DatasetSplit read_split(const std::filesystem::path& dir) {
  const auto doc = io::read_json(dir / "split.json");
  DatasetSplit split;
  try {
    split.assignment = assignment_from_json(doc.at("assignment"));
    split.stats = NormalizationStats::from_json(doc.at("stats"));
    split.well_order = doc.at("well_order").get<std::vector<std::string>>();
    split.domain_map = doc.at("domain_map").get<std::map<std::string, int>>();
    split.domain_count = doc.at("domain_count").get<std::size_t>();
    split.well_fields = doc.at("well_fields").get<std::map<std::string, std::string>>();
    split.dropped = doc.value("dropped_windows", std::map<std::string, std::size_t>{});
    split.warnings = doc.value("warnings", std::vector<std::string>{});
    const auto& opts = doc.at("options");
    split.options.domain_labels_for_validation = opts.at("domain_labels_for_validation").get<bool>();
    split.options.holdout_fraction = opts.at("holdout_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((dir / "split.json").string() + ": " + e.what());
  }

  const std::string header = feature_header();
  for (const auto& well : split.well_order) {
    const auto path = dir / well / "samples.csv";
    std::istringstream in(io::read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != header) throw ConfigError(path.string() + ": unexpected header");
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto cells = io::split_commas(line);
      if (cells.size() != kFeatureCount + 5) {
        throw ConfigError(path.string() + ": row " + std::to_string(row) + " has wrong column count");
      }
      const std::string where = path.string() + ":" + std::to_string(row);
      SequenceSample s;
      s.well_id = well;
      s.t_start = io::parse_double(cells[0], where);
      const Partition part = parse_partition(std::string(cells[1]));
      s.features.resize(kFeatureCount);
      for (std::size_t i = 0; i < kFeatureCount; ++i) s.features[i] = io::parse_double(cells[2 + i], where);
      s.ssi = io::parse_double(cells[2 + kFeatureCount], where);
      s.severity_class = static_cast<int>(io::parse_double(cells[3 + kFeatureCount], where));
      s.domain_id = static_cast<int>(io::parse_double(cells[4 + kFeatureCount], where));
      (part == Partition::train ? split.train : part == Partition::validation ? split.validation : split.test)
          .push_back(std::move(s));
    }
  }
  return split;
}

}  // namespace ssdg::dataset
