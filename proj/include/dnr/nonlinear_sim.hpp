#pragma once

#include "dnr/feeder.hpp"
#include "dnr/trajectory.hpp"

#include <Eigen/Dense>
#include <functional>

namespace dnr {

struct NonlinearSimOptions {
    double event_scale = 1.0; // blends Y_before + scale * (Y_after - Y_before)
    double newton_tol = 1e-10;
    int newton_max_iter = 60;
    // Per-sample probe: absolute machine states, solved node voltages (full
    // 2N layout, zeros at dead nodes) and the active node indices.
    std::function<void(int sample, double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& v_full, const std::vector<int>& active)>
        observer;
};

// Time-domain reference: RK4 on the machine ODEs with the nonlinear network
// algebraic constraint re-solved (damped Newton) at every stage.
[[nodiscard]] Trajectory simulate_nonlinear(const Feeder& feeder, const Schedule& schedule,
                                            double dt, const NonlinearSimOptions& opts = {});

// RMSE of estimated vs actual trajectories on identical time grids, absolute
// voltage magnitudes per node over samples where both are valid.
[[nodiscard]] RmseReport compare_rmse(const Trajectory& estimated, const Trajectory& actual);

} // namespace dnr
