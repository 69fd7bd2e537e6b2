#include "ssdg/autodiff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ssdg/errors.hpp"

namespace ssdg::ad {
namespace {

std::string blob_name(const std::string& stem, const std::string& param) {
  std::string safe = param;
  for (char& c : safe)
    if (c == '/') c = '.';
  return stem + "." + safe + ".bin";
}

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return out;
  }
  return bits;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& dir, const std::string& stem,
                      const ParameterSet& params, const nlohmann::json& header) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["header"] = header;
  manifest["tensors"] = nlohmann::json::array();
  for (const auto& p : params) {
    const std::string file = blob_name(stem, p.name);
    manifest["tensors"].push_back({{"name", p.name},
                                   {"group", p.group},
                                   {"role", std::string(to_string(p.role))},
                                   {"regularized", p.regularized},
                                   {"shape", p.tensor.shape()},
                                   {"file", file}});
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / file).string());
    for (const double v : p.tensor.values()) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      bits = to_little_endian(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + (dir / (stem + ".json")).string());
  out << manifest.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& dir, const std::string& stem) {
  const auto manifest_path = dir / (stem + ".json");
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("missing checkpoint manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  Checkpoint ck;
  ck.header = manifest.value("header", nlohmann::json::object());
  for (const auto& entry : manifest.at("tensors")) {
    Parameter p;
    p.name = entry.at("name").get<std::string>();
    p.group = entry.at("group").get<std::string>();
    p.role = parse_role(entry.at("role").get<std::string>());
    p.regularized = entry.at("regularized").get<bool>();
    const auto shape = entry.at("shape").get<Shape>();
    const auto blob_path = dir / entry.at("file").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw ConfigError("missing checkpoint blob " + blob_path.string());
    std::vector<double> values(shape_size(shape));
    for (double& v : values) {
      std::uint64_t bits = 0;
      if (!blob.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
        throw ConfigError("truncated checkpoint blob " + blob_path.string());
      }
      bits = to_little_endian(bits);
      std::memcpy(&v, &bits, sizeof v);
    }
    p.tensor = Tensor(shape, std::move(values));
    ck.params.add(std::move(p));
  }
  return ck;
}

}  // namespace ssdg::ad
