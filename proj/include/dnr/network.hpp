#pragma once

#include "dnr/admittance.hpp"
#include "dnr/feeder.hpp"

#include <Eigen/Dense>
#include <vector>

namespace dnr {

// Step change in dq node injection currents caused by a discrete admittance
// change: delta_it = dY * V0.  Constant (non-decaying) input thereafter.
struct InjectionStep {
    Eigen::VectorXd delta_it; // length 2N
};

// Connected components of the closed-branch graph.  A component with no
// generator is de-energized.
struct Energization {
    std::vector<std::vector<int>> components; // node indices (matrix order)
    std::vector<bool> energized;              // per node index
    std::vector<int> component_of;            // node index -> component index
    std::vector<bool> component_energized;
};

// Builds the dq-frame bus-injection admittance matrix: off-diagonal block
// (i,j) = -(sum of closed branch admittances between i and j), diagonal block
// (i,i) = sum of incident branch blocks plus shunts.
[[nodiscard]] BlockAdmittanceMatrix assemble_admittance(const Feeder& feeder,
                                                        const SwitchStates& states);

[[nodiscard]] BlockAdmittanceMatrix delta_admittance(const BlockAdmittanceMatrix& y_before,
                                                     const BlockAdmittanceMatrix& y_after);

[[nodiscard]] InjectionStep injection_step(const BlockAdmittanceMatrix& delta_y,
                                           const Eigen::VectorXd& v0);

[[nodiscard]] Energization connectivity_check(const Feeder& feeder, const SwitchStates& states);

} // namespace dnr
