#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "oracles/oracles.hpp"
#include "ssdg/dataset.hpp"
#include "ssdg/drillsim.hpp"
#include "ssdg/errors.hpp"

using namespace ssdg;
using namespace ssdg::drillsim;

namespace {

WellSpec quiet_spec(double duration = 600.0) {
  WellSpec s;
  s.well_id = "q";
  s.field_id = "f";
  s.duration_s = duration;
  s.seed = 3;
  return s;
}

WellSpec smooth_spec() {
  auto s = quiet_spec();
  s.velocity_weakening_rate = 0.0;
  s.static_friction_torque = 3000.0;
  s.kinetic_friction_torque = 3000.0;
  return s;
}

WellSpec stick_slip_spec() {
  auto s = quiet_spec();
  s.static_friction_torque = 8000.0;
  s.kinetic_friction_torque = 2000.0;
  s.velocity_weakening_rate = 0.5;
  s.surface_speed_profile = {{0.0, 6.0}};
  s.bit_torque_disturbance = 50.0;
  return s;
}

std::vector<double> tail(const std::vector<double>& v, std::size_t from) {
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.end()};
}

double stddev(std::span<const double> v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("without velocity weakening the bit settles at surface speed") {
  const auto rec = simulate_well(smooth_spec());
  CHECK(rec.length() == 600);
  const auto steady = tail(rec.bit_speed, 300);
  for (double w : steady) CHECK(w == doctest::Approx(8.0).epsilon(1e-3));
  for (std::size_t k = 5; k < 10; ++k) {
    const std::span<const double> win(rec.bit_speed.data() + k * 60, 60);
    CHECK(dataset::compute_ssi(win) < 1e-3);
  }
}

TEST_CASE("strong weakening sustains a stick-slip limit cycle") {
  SimulationTrace trace;
  const auto rec = simulate_well(stick_slip_spec(), &trace);
  const auto steady = tail(trace.bit_speed, trace.bit_speed.size() / 2);
  CHECK(*std::min_element(steady.begin(), steady.end()) == 0.0);
  CHECK(*std::max_element(steady.begin(), steady.end()) > 6.0);
  CHECK(std::count(trace.stuck.begin(), trace.stuck.end(), true) > 0);
  CHECK(trace.dt == doctest::Approx(1.0 / kInternalRate));
  const std::span<const double> last(rec.bit_speed.data() + 540, 60);
  CHECK(dataset::bin_ssi(dataset::compute_ssi(last)) == 4);
}

TEST_CASE("simulation is deterministic in spec and seed") {
  auto spec = stick_slip_spec();
  spec.bit_torque_disturbance = 200.0;
  spec.noise_std = {50.0, 1.0, 0.3, 10.0, 0.05};
  const auto a = simulate_well(spec);
  const auto b = simulate_well(spec);
  CHECK(a.surface_torque == b.surface_torque);
  CHECK(a.bit_speed == b.bit_speed);
  CHECK(a.rop == b.rop);
  spec.seed = 4;
  CHECK(simulate_well(spec).surface_torque != a.surface_torque);
}

TEST_CASE("spec validation names the field") {
  auto s = quiet_spec();
  s.bit_inertia = 0.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("bit_inertia"), ConfigError);
  s = quiet_spec();
  s.static_friction_torque = 100.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("static_friction_torque"), ConfigError);
  s = quiet_spec();
  s.surface_speed_profile = {{10.0, 5.0}, {5.0, 6.0}};
  CHECK_THROWS_AS(simulate_well(s), ConfigError);
}

TEST_CASE("profiles are piecewise constant") {
  const Profile p{{0.0, 1.0}, {10.0, 2.0}, {20.0, 3.0}};
  CHECK(profile_at(p, -1.0) == 1.0);
  CHECK(profile_at(p, 9.999) == 1.0);
  CHECK(profile_at(p, 10.0) == 2.0);
  CHECK(profile_at(p, 100.0) == 3.0);
}

TEST_CASE("jet lag pairs surface t with downhole t + offset") {
  const auto rec = simulate_well(stick_slip_spec());
  CHECK(inject_jetlag(rec, 0).bit_speed == rec.bit_speed);
  for (int offset : {30, -30, 1}) {
    const auto lagged = inject_jetlag(rec, offset);
    const std::size_t k = static_cast<std::size_t>(std::abs(offset));
    REQUIRE(lagged.length() == rec.length() - k);
    for (std::size_t t = 0; t < lagged.length(); ++t) {
      const std::size_t surface = offset >= 0 ? t : t + k;
      const std::size_t bit = offset >= 0 ? t + k : t;
      CHECK(lagged.surface_torque[t] == rec.surface_torque[surface]);
      CHECK(lagged.bit_speed[t] == rec.bit_speed[bit]);
    }
  }
  CHECK_THROWS_AS(inject_jetlag(rec, static_cast<int>(rec.length())), DomainError);
  CHECK_THROWS_AS(inject_jetlag(rec, -static_cast<int>(rec.length())), DomainError);
}

TEST_CASE("jet lag moves a burst boundary across window labels") {
  // Smooth drilling with a stick-slip burst between 100 s and 140 s.
  auto spec = smooth_spec();
  auto rec = simulate_well(spec);
  for (std::size_t t = 100; t < 140; ++t) rec.bit_speed[t] = 8.0 + 8.0 * std::sin(0.9 * static_cast<double>(t));
  auto labels = [](const WellRecord& r) {
    std::vector<int> out;
    for (std::size_t k = 0; (k + 1) * 60 <= r.length(); ++k)
      out.push_back(dataset::bin_ssi(oracles::ssi_direct(std::span<const double>(r.bit_speed.data() + k * 60, 60))));
    return out;
  };
  const auto before = labels(rec), after = labels(inject_jetlag(rec, 30));
  CHECK(before[0] == 1);
  CHECK(before[1] == 4);
  CHECK(before[2] == 4);
  CHECK(after[1] == 4);
  CHECK(after[2] == 1);
}

TEST_CASE("attenuation scales torque deviations from the block mean") {
  auto spec = stick_slip_spec();
  spec.noise_std.torque = 40.0;
  const auto rec = simulate_well(spec);
  const auto same = inject_attenuation(rec, 0.0, 1.0);
  CHECK(same.surface_torque == rec.surface_torque);

  const auto flat = inject_attenuation(rec, 0.0, 0.0);
  CHECK(flat.bit_speed == rec.bit_speed);
  for (std::size_t b = 0; b < rec.length() / 60; ++b) {
    const std::span<const double> orig(rec.surface_torque.data() + b * 60, 60);
    const double mean = std::accumulate(orig.begin(), orig.end(), 0.0) / 60.0;
    for (std::size_t t = b * 60; t < (b + 1) * 60; ++t) CHECK(flat.surface_torque[t] == doctest::Approx(mean).epsilon(1e-12));
  }

  const auto half = inject_attenuation(rec, 0.0, 0.5);
  for (std::size_t b = 0; b < rec.length() / 60; ++b) {
    const std::span<const double> a(rec.surface_torque.data() + b * 60, 60), h(half.surface_torque.data() + b * 60, 60);
    CHECK(std::abs(stddev(h) - 0.5 * stddev(a)) <= 1e-9 * std::max(1.0, stddev(a)));
  }

  const auto late = inject_attenuation(rec, 300.0, 0.0);
  for (std::size_t t = 0; t < 300; ++t) CHECK(late.surface_torque[t] == rec.surface_torque[t]);
  CHECK_THROWS_AS(inject_attenuation(rec, 0.0, 1.5), DomainError);
  CHECK_THROWS_AS(inject_attenuation(rec, 0.0, -0.1), DomainError);
}

TEST_CASE("label spike raises a single window to the severe class") {
  const auto rec = simulate_well(smooth_spec());
  CHECK(inject_label_spike(rec, 400, 0.0).bit_speed == rec.bit_speed);

  // Window with min 0.98 w at t = 0, the spike site at t = 1 and the rest
  // chosen so that the mean is w once the spike lands.
  WellRecord flat = rec;
  const double w = 8.0, rest = (60.0 - 0.98 - 1.7) * w / 58.0;
  for (std::size_t t = 0; t < 60; ++t) flat.bit_speed[t] = rest;
  flat.bit_speed[0] = 0.98 * w;
  flat.bit_speed[1] = w;
  const auto spiked = inject_label_spike(flat, 1, 0.7 * w);
  const std::span<const double> sw(spiked.bit_speed.data(), 60);
  CHECK(oracles::ssi_direct(sw) == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(dataset::compute_ssi(sw) == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(dataset::bin_ssi(dataset::compute_ssi(sw)) == 4);
  for (std::size_t t = 60; t < rec.length(); ++t) CHECK(spiked.bit_speed[t] == flat.bit_speed[t]);

  // A spike past the last full window leaves every label unchanged.
  auto short_rec = rec;
  for (auto* ch : {&short_rec.surface_torque, &short_rec.surface_wob, &short_rec.rop, &short_rec.flow_rate,
                   &short_rec.total_rotation_speed, &short_rec.bit_speed})
    ch->resize(630);
  const auto outside = inject_label_spike(short_rec, 620, 50.0);
  for (std::size_t k = 0; k < 10; ++k) {
    const std::span<const double> a(short_rec.bit_speed.data() + k * 60, 60), b(outside.bit_speed.data() + k * 60, 60);
    CHECK(dataset::compute_ssi(a) == dataset::compute_ssi(b));
  }
  CHECK_THROWS_AS(inject_label_spike(rec, rec.length(), 1.0), DomainError);
}

TEST_CASE("spec json and record csv round trips") {
  auto spec = stick_slip_spec();
  spec.trajectory = Trajectory::vertical;
  spec.wob_profile = {{0.0, 90.0}, {120.0, 110.0}};
  spec.noise_std = {10.0, 1.0, 0.5, 5.0, 0.01};
  const auto back = spec_from_json(to_json(spec));
  CHECK(to_json(back) == to_json(spec));

  auto doc = to_json(spec);
  doc.erase("bit_inertia");
  CHECK_THROWS_WITH_AS(spec_from_json(doc), doctest::Contains("bit_inertia"), ConfigError);
  doc = to_json(spec);
  doc["trajectory"] = "diagonal";
  CHECK_THROWS_AS(spec_from_json(doc), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "ssdg_drillsim_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_spec(spec, dir / "spec.json");
  CHECK(to_json(read_spec(dir / "spec.json")) == to_json(spec));

  const auto rec = simulate_well(spec);
  write_record_csv(rec, dir / "rec.csv");
  const auto rec2 = read_record_csv(dir / "rec.csv", rec.well_id, rec.field_id);
  CHECK(rec2.surface_torque == rec.surface_torque);
  CHECK(rec2.bit_speed == rec.bit_speed);
  CHECK(rec2.flow_rate == rec.flow_rate);
  std::filesystem::remove_all(dir);
}
