#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ssdg::drillsim {

enum class Trajectory { vertical, lateral };

/// One step of a piecewise-constant schedule, active from `start_s` until the
/// next step's start.
struct ProfileStep {
  double start_s = 0.0;
  double value = 0.0;
};

using Profile = std::vector<ProfileStep>;

/// Value of a schedule at time t; before the first step the first value holds.
double profile_at(const Profile& profile, double t);

struct ChannelNoise {
  double torque = 0.0;    // N*m
  double wob = 0.0;       // kN
  double rop = 0.0;       // m/h
  double flow = 0.0;      // L/min
  double rotation = 0.0;  // rad/s
};

/// Mechanical and operational description of one simulated well.
///
/// Friction torques are quoted at the reference weight on bit (100 kN) and
/// scale linearly with the WOB schedule. The bit torque law is velocity
/// weakening,
///   T_bit(w) = WOB/100 * (T_k + (T_s - T_k) * exp(-rate * w)) + disturbance,
/// where the disturbance is an Ornstein-Uhlenbeck torque (bit-rock
/// interaction) of stationary std `bit_torque_disturbance` * WOB/100.
struct WellSpec {
  std::string well_id;
  std::string field_id;
  Trajectory trajectory = Trajectory::lateral;
  double duration_s = 3600.0;
  double string_stiffness = 160.0;       // N*m/rad
  double string_damping = 40.0;          // N*m*s/rad
  double bit_inertia = 400.0;            // kg*m^2
  double static_friction_torque = 6000.0;
  double kinetic_friction_torque = 3000.0;
  double velocity_weakening_rate = 0.3;  // 1/(rad/s)
  double bit_torque_disturbance = 0.0;   // N*m
  Profile surface_speed_profile{{0.0, 8.0}};  // rad/s
  Profile wob_profile{{0.0, 100.0}};          // kN
  Profile flow_profile{{0.0, 2500.0}};        // L/min
  double torque_gain = 1.0;
  double torque_offset = 0.0;  // N*m
  ChannelNoise noise_std;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Synchronised 1 Hz channels of one well. `bit_speed` is the downhole
/// channel and only used for labelling.
struct WellRecord {
  std::string well_id;
  std::string field_id;
  double sample_rate = 1.0;
  std::vector<double> surface_torque;        // N*m
  std::vector<double> surface_wob;           // kN
  std::vector<double> rop;                   // m/h
  std::vector<double> flow_rate;             // L/min
  std::vector<double> total_rotation_speed;  // rad/s
  std::vector<double> bit_speed;             // rad/s

  std::size_t length() const noexcept { return bit_speed.size(); }
  /// Checks equal lengths, 1 Hz and finiteness; throws ConfigError.
  void validate() const;
};

/// Internal-rate state history, for inspecting the integrator.
struct SimulationTrace {
  double dt = 0.0;
  std::vector<double> bit_speed;
  std::vector<double> surface_torque;  // before gain/offset/noise
  std::vector<bool> stuck;
};

inline constexpr double kReferenceWob = 100.0;    // kN
inline constexpr int kInternalRate = 50;          // Hz
inline constexpr double kRopCoefficient = 0.03;   // (m/h) per (kN * rad/s)
inline constexpr double kDisturbanceTime = 2.0;   // s, OU correlation time

/// Integrates the two-degree-of-freedom torsional model at 50 Hz and
/// block-averages to 1 Hz. Deterministic in (spec, seed). Throws
/// NumericalError naming the step when the state becomes non-finite.
WellRecord simulate_well(const WellSpec& spec, SimulationTrace* trace = nullptr);

/// Pairs surface sample t with downhole sample t + offset_s (telemetry
/// lag); the surface series keep their values and the record is trimmed
/// to the common support. |offset_s| >= length throws DomainError.
WellRecord inject_jetlag(const WellRecord& record, int offset_s);

/// After `horizontal_start_s`, scales the deviation of surface torque from
/// its block mean (blocks of `block_s` seconds aligned at t = 0) by `gain`.
WellRecord inject_attenuation(const WellRecord& record, double horizontal_start_s, double gain,
                              std::size_t block_s = 60);

/// Adds a one-sample transient of `magnitude` rad/s to bit_speed at t_s.
WellRecord inject_label_spike(const WellRecord& record, std::size_t t_s, double magnitude);

// Interchange formats.
nlohmann::json to_json(const WellSpec& spec);
WellSpec spec_from_json(const nlohmann::json& doc);
WellSpec read_spec(const std::filesystem::path& path);
void write_spec(const WellSpec& spec, const std::filesystem::path& path);

inline constexpr const char* kRecordHeader =
    "t,surface_torque,surface_wob,rop,flow_rate,total_rotation_speed,bit_speed";

void write_record_csv(const WellRecord& record, const std::filesystem::path& path);
WellRecord read_record_csv(const std::filesystem::path& path, std::string well_id,
                           std::string field_id);

}  // namespace ssdg::drillsim
