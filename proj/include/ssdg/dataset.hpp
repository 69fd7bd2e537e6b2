#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssdg/drillsim.hpp"

namespace ssdg::dataset {

inline constexpr std::size_t kWindow = 60;
inline constexpr std::size_t kChannels = 5;
inline constexpr std::size_t kFeatureCount = kWindow * kChannels;
inline constexpr double kSsiMeanTolerance = 1e-9;

/// Channel order of the feature matrix (time-major, 60 x 5).
inline constexpr std::array<const char*, kChannels> kChannelNames = {
    "surface_torque", "surface_wob", "rop", "flow_rate", "total_rotation_speed"};

/// Stick-slip index of a bit-speed window: (max - min) / mean.
/// Throws DomainError when the mean does not exceed kSsiMeanTolerance.
double compute_ssi(std::span<const double> bit_speed_window);

/// Severity class 1..4 over [0,0.3), [0.3,0.5), [0.5,0.7), [0.7,inf).
/// Throws DomainError for negative or non-finite input.
int bin_ssi(double ssi);

struct SequenceSample {
  std::vector<double> features;  // kWindow x kChannels, normalised
  double ssi = 0.0;
  int severity_class = 1;
  int domain_id = -1;  // -1: no domain label (test or unlabelled validation well)
  std::string well_id;
  double t_start = 0.0;
};

struct NormalizationStats {
  std::array<double, kChannels> mean{};
  std::array<double, kChannels> std{};
  std::vector<std::string> fitted_on;

  /// Per-channel z-score statistics over every sample of the given wells.
  /// Channels with zero spread get std = 1.
  static NormalizationStats fit(std::span<const drillsim::WellRecord* const> wells);

  nlohmann::json to_json() const;
  static NormalizationStats from_json(const nlohmann::json& doc);
};

/// Raw (denormalised) feature matrix of a sample.
std::vector<double> denormalize(const SequenceSample& sample, const NormalizationStats& stats);

struct WindowResult {
  std::vector<SequenceSample> samples;
  std::size_t dropped = 0;  // windows with undefined SSI
  bool too_short = false;   // record shorter than one window
};

/// Non-overlapping 60 s windows, stride 60, starting at t = 0.
WindowResult window_well(const drillsim::WellRecord& record, const NormalizationStats& stats);

enum class Partition { train, validation, test };
std::string to_string(Partition p);
Partition parse_partition(const std::string& text);

using Assignment = std::map<std::string, Partition>;
Assignment assignment_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Assignment& assignment);

struct SplitOptions {
  /// Give validation wells their own domain labels (N_S counts them too).
  bool domain_labels_for_validation = false;
  /// Chronological tail of every training well moved to validation.
  double holdout_fraction = 0.0;
};

struct DatasetSplit {
  std::vector<SequenceSample> train;
  std::vector<SequenceSample> validation;
  std::vector<SequenceSample> test;
  std::size_t domain_count = 0;
  NormalizationStats stats;
  Assignment assignment;
  std::vector<std::string> well_order;  // input order of the wells
  std::map<std::string, int> domain_map;  // well_id -> domain id
  std::map<std::string, std::string> well_fields;
  std::map<std::string, std::size_t> dropped;
  std::vector<std::string> warnings;
  SplitOptions options;

  /// Samples per severity class over all partitions, index 0 -> class 1.
  std::array<std::size_t, 4> class_histogram() const;
};

/// Fits normalisation on training wells, windows every well and assigns
/// dense domain ids in input order. Throws ConfigError when a field has
/// wells on both sides of the train/test boundary or the assignment does
/// not cover the wells.
DatasetSplit assemble_split(std::span<const drillsim::WellRecord> wells, const Assignment& assignment,
                            const SplitOptions& options = {});

/// Samples grouped by well, each group sorted by t_start.
std::map<std::string, std::vector<const SequenceSample*>> group_by_well(std::span<const SequenceSample> samples);

/// Directory layout: split.json plus <well_id>/samples.csv.
void write_split(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit read_split(const std::filesystem::path& dir);

}  // namespace ssdg::dataset
