#pragma once

#include "dnr/feeder.hpp"
#include "dnr/statespace.hpp"
#include "dnr/trajectory.hpp"

#include <functional>

namespace dnr {

enum class SimMode {
    SingleAnchor, // one anchor, one LTI system; events only switch the input
    Sequential,   // re-anchor at every event on the settled operating point
};

struct LinearSimOptions {
    bool keep_state = false;
    double event_scale = 1.0; // scales the admittance perturbation of each event
    // Called after each event with the freshly assembled system and its input.
    std::function<void(int event_index, const SwitchEvent& event, const LinearSystem& sys,
                       const Eigen::VectorXd& u_active)>
        observer;
};

// Integrates the analytical model through the schedule with fixed-step RK4.
[[nodiscard]] Trajectory simulate_linear(const Feeder& feeder, const Schedule& schedule,
                                         double dt, SimMode mode,
                                         const LinearSimOptions& opts = {});

// Per-SG rotational frequency deviations (Ng x samples); requires delta_x.
[[nodiscard]] Eigen::MatrixXd extract_sg_frequencies(const Trajectory& traj);

} // namespace dnr
