#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdg/dataset.hpp"
#include "ssdg/drillsim.hpp"

namespace ssdg::benchmark {

/// Nine synthetic wells: wells 1-3 in
/// field 1, wells 4, 5, 6 in fields 2, 3, 4, test well 7 in field 5 and test
/// wells 8-9 (vertical) in field 6. Fields differ in torque gain/offset,
/// sensor noise, friction, flow and WOB levels; operating segments of
/// 2-8 minutes vary surface speed and WOB so every well mixes severity classes.
std::vector<drillsim::WellSpec> standard_specs(std::uint64_t seed = 2024);

/// Simulates every spec in order.
std::vector<drillsim::WellRecord> simulate_all(const std::vector<drillsim::WellSpec>& specs);

/// Wells 1-6 train, 7-9 test.
dataset::Assignment final_assignment();

/// Wells 1-3 train, two of wells 4-6 validation (cases 1..3) and the
/// remaining one train. Test wells are left out.
dataset::Assignment validation_case(int case_number);

}  // namespace ssdg::benchmark
