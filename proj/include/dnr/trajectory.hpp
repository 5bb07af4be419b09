#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dnr {

// Uniformly sampled run output.  Voltage magnitudes are stored as deviations
// from a per-node reference (vmag_ref); nodes that are de-energized at a
// sample carry valid == 0 there and a zero placeholder, never NaN.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> delta_f;            // COI frequency deviation, pu
    Eigen::MatrixXd delta_vmag;             // N x samples
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> valid; // N x samples
    Eigen::VectorXd vmag_ref;               // per node; 0 if never energized
    std::vector<int> node_ids;
    std::vector<int> sg_nodes;              // state layout when delta_x is kept
    Eigen::MatrixXd delta_x;                // (8*Ng) x samples, empty unless requested
    bool flagged_unstable = false;

    [[nodiscard]] int samples() const { return static_cast<int>(times.size()); }
    [[nodiscard]] double vmag_abs(int node_pos, int sample) const {
        return vmag_ref(node_pos) + delta_vmag(node_pos, sample);
    }
};

// Per-node RMSE of the voltage-magnitude deviation between an estimated and an
// actual trajectory, plus the frequency-trajectory RMSE.
struct RmseReport {
    struct NodeRmse {
        int node_id = 0;
        double rmse = 0.0;
        int samples = 0;
    };
    std::vector<NodeRmse> per_node;
    double average = 0.0;
    double maximum = 0.0;
    double freq_rmse = 0.0;
};

} // namespace dnr
