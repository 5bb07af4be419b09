#pragma once

#include "dnr/feeder.hpp"
#include "dnr/network.hpp"

#include <Eigen/Dense>
#include <map>

namespace dnr {

// Absolute steady state of one generator (machine-base pu, delta in rad).
struct SgSteadyState {
    double f = 1.0;
    double delta = 0.0;
    double p_m = 0.0;
    double p_v = 0.0;
    double f_e = 0.0;
    double e_qp = 0.0;
    double e_f = 0.0;
    double v_e = 0.0;
    double p_ref = 0.0; // governor load reference, machine base
    double v_ref = 1.0; // AVR setpoint captured at the anchor
    double p0_sys = 0.0; // net electrical injection at the terminal, system base
    double q0_sys = 0.0;
};

struct LoadPoint {
    double p = 0.0; // consumed at the operating voltage, system base
    double q = 0.0;
    double vmag = 0.0;
};

// Scheduled active power (system base) for the non-reference generators.  The
// reference unit is the slack and absorbs the mismatch.
struct Dispatch {
    std::map<int, double> p_sched; // node id -> P, system pu
};

struct OperatingPoint {
    Eigen::VectorXd v0; // 2N dq voltages, zero at de-energized nodes
    Eigen::VectorXd i0; // 2N injection currents, I0 = Y * V0
    std::vector<bool> energized;
    std::map<int, SgSteadyState> sg;      // keyed by node id
    std::map<int, LoadPoint> load_points; // keyed by node id
    Dispatch dispatch;

    [[nodiscard]] Eigen::Vector2d node_voltage(int node_index) const {
        return v0.segment<2>(2 * node_index);
    }
};

// Rating-proportional share of the total nominal energized load.
[[nodiscard]] Dispatch proportional_dispatch(const Feeder& feeder, const Energization& energ);

// Full Newton-Raphson on polar mismatch equations with voltage-dependent ZIP
// loads; one solve per energized component, slack = reference generator (or
// the largest-rating unit in components without it).  Flat start, max 50
// iterations, mismatch tolerance 1e-10 pu.
// y_override replaces the admittance assembled from `states` (used for
// partially scaled switching perturbations); connectivity still follows
// `states`, so overrides must not change which nodes are energized.
[[nodiscard]] OperatingPoint solve_power_flow(const Feeder& feeder, const SwitchStates& states,
                                              const Dispatch* dispatch = nullptr,
                                              const BlockAdmittanceMatrix* y_override = nullptr);

} // namespace dnr
