#include "ssdg/drillsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssdg/errors.hpp"
#include "ssdg/io.hpp"
#include "ssdg/rng.hpp"

namespace ssdg::drillsim {
namespace {

void require(bool ok, const WellSpec& spec, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError("well '" + spec.well_id + "': field '" + field + "' " + why);
}

void validate_profile(const WellSpec& spec, const Profile& profile, const std::string& field,
                      bool allow_zero) {
  require(!profile.empty(), spec, field, "must have at least one step");
  for (std::size_t i = 0; i < profile.size(); ++i) {
    require(std::isfinite(profile[i].start_s) && std::isfinite(profile[i].value), spec, field,
            "has a non-finite entry");
    require(allow_zero ? profile[i].value >= 0.0 : profile[i].value > 0.0, spec, field,
            "has a value out of range");
    if (i > 0) {
      require(profile[i].start_s > profile[i - 1].start_s, spec, field,
              "step start times must increase");
    }
  }
}

double bit_torque(const WellSpec& spec, double speed, double wob_scale) {
  const double weakening = (spec.static_friction_torque - spec.kinetic_friction_torque) *
                           std::exp(-spec.velocity_weakening_rate * speed);
  return wob_scale * (spec.kinetic_friction_torque + weakening);
}

nlohmann::json profile_json(const Profile& profile) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& step : profile) out.push_back({{"start_s", step.start_s}, {"value", step.value}});
  return out;
}

Profile profile_from_json(const nlohmann::json& doc) {
  Profile out;
  for (const auto& step : doc) out.push_back({step.at("start_s").get<double>(), step.at("value").get<double>()});
  return out;
}

}  // namespace

double profile_at(const Profile& profile, double t) {
  double value = profile.front().value;
  for (const auto& step : profile) {
    if (step.start_s > t) break;
    value = step.value;
  }
  return value;
}

void WellSpec::validate() const {
  const auto& s = *this;
  require(!well_id.empty(), s, "well_id", "must not be empty");
  require(std::isfinite(duration_s) && duration_s > 0.0, s, "duration_s", "must be > 0");
  require(std::isfinite(string_stiffness) && string_stiffness > 0.0, s, "string_stiffness", "must be > 0");
  require(std::isfinite(string_damping) && string_damping >= 0.0, s, "string_damping", "must be >= 0");
  require(std::isfinite(bit_inertia) && bit_inertia > 0.0, s, "bit_inertia", "must be > 0");
  require(std::isfinite(kinetic_friction_torque) && kinetic_friction_torque > 0.0, s,
          "kinetic_friction_torque", "must be > 0");
  require(std::isfinite(static_friction_torque) && static_friction_torque >= kinetic_friction_torque, s,
          "static_friction_torque", "must be >= kinetic_friction_torque");
  require(std::isfinite(velocity_weakening_rate) && velocity_weakening_rate >= 0.0, s,
          "velocity_weakening_rate", "must be >= 0");
  require(std::isfinite(bit_torque_disturbance) && bit_torque_disturbance >= 0.0, s,
          "bit_torque_disturbance", "must be >= 0");
  require(std::isfinite(torque_gain) && torque_gain > 0.0, s, "torque_gain", "must be > 0");
  require(std::isfinite(torque_offset), s, "torque_offset", "must be finite");
  for (const double n : {noise_std.torque, noise_std.wob, noise_std.rop, noise_std.flow, noise_std.rotation}) {
    require(std::isfinite(n) && n >= 0.0, s, "noise_std", "entries must be finite and >= 0");
  }
  validate_profile(s, surface_speed_profile, "surface_speed_profile", true);
  validate_profile(s, wob_profile, "wob_profile", true);
  validate_profile(s, flow_profile, "flow_profile", true);
}

void WellRecord::validate() const {
  if (sample_rate != 1.0) throw ConfigError("well '" + well_id + "': sample_rate must be 1 Hz");
  const std::size_t n = bit_speed.size();
  for (const auto* series : {&surface_torque, &surface_wob, &rop, &flow_rate, &total_rotation_speed, &bit_speed}) {
    if (series->size() != n) throw ConfigError("well '" + well_id + "': channel lengths differ");
    for (const double v : *series)
      if (!std::isfinite(v)) throw ConfigError("well '" + well_id + "': non-finite sample");
  }
}

WellRecord simulate_well(const WellSpec& spec, SimulationTrace* trace) {
  spec.validate();
  const auto seconds = static_cast<std::size_t>(std::floor(spec.duration_s));
  const double dt = 1.0 / kInternalRate;
  const double k = spec.string_stiffness;
  const double c = spec.string_damping;
  const double J = spec.bit_inertia;

  Rng disturbance_rng(spec.seed, 1);
  Rng noise_rng(spec.seed, 2);
  const double decay = std::exp(-dt / kDisturbanceTime);
  const double kick = std::sqrt(1.0 - decay * decay);

  // Start in the sliding equilibrium of the initial operating point.
  const double speed0 = profile_at(spec.surface_speed_profile, 0.0);
  const double wob0 = profile_at(spec.wob_profile, 0.0) / kReferenceWob;
  double omega = speed0;
  double twist = bit_torque(spec, speed0, wob0) / k;
  bool stuck = speed0 <= 0.0;
  if (stuck) omega = 0.0;
  double ou = 0.0;

  WellRecord rec;
  rec.well_id = spec.well_id;
  rec.field_id = spec.field_id;
  for (auto* series : {&rec.surface_torque, &rec.surface_wob, &rec.rop, &rec.flow_rate,
                       &rec.total_rotation_speed, &rec.bit_speed}) {
    series->reserve(seconds);
  }
  if (trace) {
    trace->dt = dt;
    trace->bit_speed.clear();
    trace->surface_torque.clear();
    trace->stuck.clear();
  }

  std::size_t step = 0;
  for (std::size_t s = 0; s < seconds; ++s) {
    double sum_torque = 0.0, sum_omega = 0.0, sum_speed = 0.0, sum_wob = 0.0, sum_flow = 0.0;
    for (int i = 0; i < kInternalRate; ++i, ++step) {
      const double t = static_cast<double>(step) * dt;
      const double speed = profile_at(spec.surface_speed_profile, t);
      const double wob = profile_at(spec.wob_profile, t);
      const double flow = profile_at(spec.flow_profile, t);
      const double wob_scale = wob / kReferenceWob;
      ou = decay * ou + kick * disturbance_rng.normal();

      const double drive = k * twist + c * (speed - omega);
      if (stuck && drive > wob_scale * spec.static_friction_torque) stuck = false;
      if (stuck) {
        omega = 0.0;
      } else {
        const double resist = bit_torque(spec, omega, wob_scale) + spec.bit_torque_disturbance * wob_scale * ou;
        const double next = omega + dt * (drive - resist) / J;
        if (next <= 0.0) {
          omega = 0.0;
          stuck = true;
        } else {
          omega = next;
        }
      }
      twist += dt * (speed - omega);
      if (!std::isfinite(twist) || !std::isfinite(omega)) {
        std::ostringstream msg;
        msg << "simulation of well '" << spec.well_id << "' diverged at internal step " << step
            << " (t = " << t << " s)";
        throw NumericalError(msg.str());
      }
      const double torque = k * twist + c * (speed - omega);
      if (trace) {
        trace->bit_speed.push_back(omega);
        trace->surface_torque.push_back(torque);
        trace->stuck.push_back(stuck);
      }
      sum_torque += torque;
      sum_omega += omega;
      sum_speed += speed;
      sum_wob += wob;
      sum_flow += flow;
    }
    const double n = kInternalRate;
    const double torque = sum_torque / n, bit = sum_omega / n, speed = sum_speed / n;
    const double wob = sum_wob / n, flow = sum_flow / n;
    rec.surface_torque.push_back(spec.torque_gain * torque + spec.torque_offset +
                                 spec.noise_std.torque * noise_rng.normal());
    rec.surface_wob.push_back(wob + spec.noise_std.wob * noise_rng.normal());
    rec.rop.push_back(kRopCoefficient * wob * bit + spec.noise_std.rop * noise_rng.normal());
    rec.flow_rate.push_back(flow + spec.noise_std.flow * noise_rng.normal());
    rec.total_rotation_speed.push_back(speed + spec.noise_std.rotation * noise_rng.normal());
    rec.bit_speed.push_back(bit);
  }
  return rec;
}

WellRecord inject_jetlag(const WellRecord& record, int offset_s) {
  const std::size_t n = record.length();
  const std::size_t shift = static_cast<std::size_t>(std::abs(offset_s));
  if (shift >= n) {
    throw DomainError("jet-lag offset of " + std::to_string(offset_s) + " s leaves no overlap in a " +
                      std::to_string(n) + " s record");
  }
  const std::size_t m = n - shift;
  const std::size_t surface_from = offset_s < 0 ? shift : 0;
  const std::size_t bit_from = offset_s > 0 ? shift : 0;
  WellRecord out;
  out.well_id = record.well_id;
  out.field_id = record.field_id;
  auto take = [m](const std::vector<double>& src, std::size_t from) {
    return std::vector<double>(src.begin() + static_cast<std::ptrdiff_t>(from),
                               src.begin() + static_cast<std::ptrdiff_t>(from + m));
  };
  out.surface_torque = take(record.surface_torque, surface_from);
  out.surface_wob = take(record.surface_wob, surface_from);
  out.rop = take(record.rop, surface_from);
  out.flow_rate = take(record.flow_rate, surface_from);
  out.total_rotation_speed = take(record.total_rotation_speed, surface_from);
  out.bit_speed = take(record.bit_speed, bit_from);
  return out;
}

WellRecord inject_attenuation(const WellRecord& record, double horizontal_start_s, double gain,
                              std::size_t block_s) {
  if (!(gain >= 0.0 && gain <= 1.0)) throw DomainError("attenuation gain must lie in [0, 1]");
  if (block_s == 0) throw DomainError("attenuation block length must be positive");
  WellRecord out = record;
  if (gain == 1.0) return out;
  const std::size_t n = record.length();
  for (std::size_t start = 0; start < n; start += block_s) {
    const std::size_t stop = std::min(n, start + block_s);
    double mean = 0.0;
    for (std::size_t t = start; t < stop; ++t) mean += record.surface_torque[t];
    mean /= static_cast<double>(stop - start);
    for (std::size_t t = start; t < stop; ++t) {
      if (static_cast<double>(t) < horizontal_start_s) continue;
      out.surface_torque[t] = mean + gain * (record.surface_torque[t] - mean);
    }
  }
  return out;
}

WellRecord inject_label_spike(const WellRecord& record, std::size_t t_s, double magnitude) {
  if (t_s >= record.length()) throw DomainError("label spike time outside the record");
  WellRecord out = record;
  out.bit_speed[t_s] += magnitude;
  return out;
}

nlohmann::json to_json(const WellSpec& spec) {
  return {
      {"well_id", spec.well_id},
      {"field_id", spec.field_id},
      {"trajectory", spec.trajectory == Trajectory::vertical ? "vertical" : "lateral"},
      {"duration_s", spec.duration_s},
      {"string_stiffness", spec.string_stiffness},
      {"string_damping", spec.string_damping},
      {"bit_inertia", spec.bit_inertia},
      {"static_friction_torque", spec.static_friction_torque},
      {"kinetic_friction_torque", spec.kinetic_friction_torque},
      {"velocity_weakening_rate", spec.velocity_weakening_rate},
      {"bit_torque_disturbance", spec.bit_torque_disturbance},
      {"surface_speed_profile", profile_json(spec.surface_speed_profile)},
      {"wob_profile", profile_json(spec.wob_profile)},
      {"flow_profile", profile_json(spec.flow_profile)},
      {"torque_gain", spec.torque_gain},
      {"torque_offset", spec.torque_offset},
      {"noise_std",
       {{"torque", spec.noise_std.torque},
        {"wob", spec.noise_std.wob},
        {"rop", spec.noise_std.rop},
        {"flow", spec.noise_std.flow},
        {"rotation", spec.noise_std.rotation}}},
      {"seed", spec.seed},
  };
}

WellSpec spec_from_json(const nlohmann::json& doc) {
  WellSpec spec;
  auto field = [&doc](const char* name) -> const nlohmann::json& {
    if (!doc.contains(name)) throw ConfigError(std::string("missing field '") + name + "'");
    return doc.at(name);
  };
  try {
    spec.well_id = field("well_id").get<std::string>();
    spec.field_id = field("field_id").get<std::string>();
    const auto trajectory = field("trajectory").get<std::string>();
    if (trajectory == "vertical") {
      spec.trajectory = Trajectory::vertical;
    } else if (trajectory == "lateral") {
      spec.trajectory = Trajectory::lateral;
    } else {
      throw ConfigError("field 'trajectory' must be 'vertical' or 'lateral'");
    }
    spec.duration_s = field("duration_s").get<double>();
    spec.string_stiffness = field("string_stiffness").get<double>();
    spec.string_damping = field("string_damping").get<double>();
    spec.bit_inertia = field("bit_inertia").get<double>();
    spec.static_friction_torque = field("static_friction_torque").get<double>();
    spec.kinetic_friction_torque = field("kinetic_friction_torque").get<double>();
    spec.velocity_weakening_rate = field("velocity_weakening_rate").get<double>();
    spec.bit_torque_disturbance = doc.value("bit_torque_disturbance", 0.0);
    spec.surface_speed_profile = profile_from_json(field("surface_speed_profile"));
    spec.wob_profile = profile_from_json(field("wob_profile"));
    spec.flow_profile = profile_from_json(field("flow_profile"));
    spec.torque_gain = field("torque_gain").get<double>();
    spec.torque_offset = field("torque_offset").get<double>();
    const auto& noise = field("noise_std");
    spec.noise_std = {noise.value("torque", 0.0), noise.value("wob", 0.0), noise.value("rop", 0.0),
                      noise.value("flow", 0.0), noise.value("rotation", 0.0)};
    spec.seed = field("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed well spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

WellSpec read_spec(const std::filesystem::path& path) {
  try {
    return spec_from_json(io::read_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_spec(const WellSpec& spec, const std::filesystem::path& path) {
  io::write_json(path, to_json(spec));
}

void write_record_csv(const WellRecord& record, const std::filesystem::path& path) {
  std::string text = kRecordHeader;
  text += '\n';
  for (std::size_t t = 0; t < record.length(); ++t) {
    text += std::to_string(t);
    for (const auto* series : {&record.surface_torque, &record.surface_wob, &record.rop, &record.flow_rate,
                               &record.total_rotation_speed, &record.bit_speed}) {
      text += ',';
      text += io::format_double((*series)[t]);
    }
    text += '\n';
  }
  io::write_text(path, text);
}

WellRecord read_record_csv(const std::filesystem::path& path, std::string well_id, std::string field_id) {
  const std::string text = io::read_text(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) {
    throw ConfigError(path.string() + ": unexpected header, want '" + kRecordHeader + "'");
  }
  WellRecord rec;
  rec.well_id = std::move(well_id);
  rec.field_id = std::move(field_id);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = io::split_commas(line);
    if (cells.size() != 7) throw ConfigError(path.string() + ": row " + std::to_string(row) + " needs 7 columns");
    const std::string where = path.string() + ":" + std::to_string(row);
    rec.surface_torque.push_back(io::parse_double(cells[1], where));
    rec.surface_wob.push_back(io::parse_double(cells[2], where));
    rec.rop.push_back(io::parse_double(cells[3], where));
    rec.flow_rate.push_back(io::parse_double(cells[4], where));
    rec.total_rotation_speed.push_back(io::parse_double(cells[5], where));
    rec.bit_speed.push_back(io::parse_double(cells[6], where));
  }
  rec.validate();
  return rec;
}

}  // namespace ssdg::drillsim
