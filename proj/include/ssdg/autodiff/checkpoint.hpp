#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ssdg/autodiff/parameters.hpp"

namespace ssdg::ad {

/// Writes `<dir>/<stem>.json` (header + tensor manifest: names, groups, roles,
/// shapes) and one raw little-endian float64 blob per tensor,
/// `<dir>/<stem>.<sanitized-name>.bin`.
void write_checkpoint(const std::filesystem::path& dir, const std::string& stem,
                      const ParameterSet& params, const nlohmann::json& header);

struct Checkpoint {
  ParameterSet params;
  nlohmann::json header;
};

Checkpoint read_checkpoint(const std::filesystem::path& dir, const std::string& stem);

}  // namespace ssdg::ad
