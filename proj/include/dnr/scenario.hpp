#pragma once

#include "dnr/feeder.hpp"
#include "dnr/linear_sim.hpp"

#include <string>

namespace dnr {

struct SolverSettings {
    double dt = 1e-3;
    SimMode mode = SimMode::Sequential;
};

// A complete study: network, switching schedule, solver settings.
struct Scenario {
    std::string name;
    double v_base_kv = 1.0; // informational, quantities are per unit
    Feeder feeder;
    Schedule schedule;
    SolverSettings solver;
};

// JSON file round trip.  Parse and schema problems surface as ScenarioError
// with the offending field or byte offset in the message; the loaded feeder
// and schedule are validated before returning.
[[nodiscard]] Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

[[nodiscard]] Scenario parse_scenario(const std::string& text, const std::string& origin = "");
[[nodiscard]] std::string serialize_scenario(const Scenario& scenario);

} // namespace dnr
