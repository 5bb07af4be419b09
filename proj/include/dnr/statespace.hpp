#pragma once

#include "dnr/feeder.hpp"
#include "dnr/network.hpp"
#include "dnr/power_flow.hpp"
#include "dnr/sg_model.hpp"

#include <Eigen/Dense>
#include <vector>

namespace dnr {

// Block-diagonal device aggregation over the active (energized) node set.
// y_l is the aggregated load sensitivity dI_inj/dV = -blockdiag(linearize_zip),
// so the network solve reads dV = Z (C_SG dX + dI_T), Z = (Y_L - Y_A - Y_SG)^-1.
struct AggregatedDevices {
    Eigen::MatrixXd a_sg; // 8Ng x 8Ng
    Eigen::MatrixXd b_sg; // 8Ng x 2M
    Eigen::MatrixXd c_sg; // 2M x 8Ng
    Eigen::MatrixXd y_sg; // 2M x 2M
    Eigen::MatrixXd y_l;  // 2M x 2M
    std::vector<int> sg_nodes;  // state layout, node ids in order
    std::vector<double> h_sys;  // inertia on the system base, per SG
};

struct CoiWeights {
    Eigen::RowVectorXd h; // normalized, sums to 1
};

struct MagnitudeMap {
    Eigen::MatrixXd m; // M x 2M, rows |V_i0|^-1 [V_di0, V_qi0]
};

// The complete analytical model: dXdot = a dX + b dI_T,
// [df; d|V|] = [c_f; c_v] dX + [0; d_v] dI_T.
struct LinearSystem {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::RowVectorXd c_f;
    Eigen::MatrixXd c_v;
    Eigen::MatrixXd d_v;
    Eigen::MatrixXd z;
    Eigen::MatrixXd c_sg; // kept for the algebraic voltage solve dV = Z (C_SG dX + u)
    std::vector<int> state_layout;  // SG node ids, 8 states each
    std::vector<int> active_nodes;  // node indices covered by the 2M network coords
    Eigen::VectorXcd eigenvalues;
    double max_re_eigenvalue = 0.0;          // over the full spectrum
    double max_re_eigenvalue_deflated = 0.0; // excluding the angle-reference mode
    bool reference_mode_found = false;       // the structural zero of the uniform
                                             // rotor-angle direction

    [[nodiscard]] int state_dim() const { return static_cast<int>(a.rows()); }

    // Uniform rotor-angle direction (normalized); A annihilates it exactly for
    // an islanded network, see build_system.
    [[nodiscard]] Eigen::VectorXd angle_reference_direction() const;
};

// Jacobian bundle for one SG as placed in the aggregate (kept for tests).
[[nodiscard]] AggregatedDevices
aggregate_devices(const Feeder& feeder, const OperatingPoint& op,
                  const std::vector<int>& active_nodes);

// Z = (Y_L - Y_A - Y_SG)^-1 by dense LU; throws SingularNetworkError when the
// matrix is singular or its condition estimate exceeds 1e12.
[[nodiscard]] Eigen::MatrixXd build_z(const Eigen::MatrixXd& y_l, const Eigen::MatrixXd& y_a,
                                      const Eigen::MatrixXd& y_sg);

[[nodiscard]] LinearSystem build_system(const AggregatedDevices& agg, const Eigen::MatrixXd& z,
                                        const MagnitudeMap& mag, const CoiWeights& coi,
                                        const std::vector<int>& active_nodes);

[[nodiscard]] CoiWeights coi_weights(const std::vector<double>& inertias);

// v0_active holds the 2M anchor voltages of the active nodes.
[[nodiscard]] MagnitudeMap magnitude_map(const Eigen::VectorXd& v0_active);

// Convenience: reduce a full 2N block matrix to the active node set.
[[nodiscard]] Eigen::MatrixXd reduce_to_active(const Eigen::MatrixXd& full,
                                               const std::vector<int>& active_nodes);
[[nodiscard]] Eigen::VectorXd reduce_vector_to_active(const Eigen::VectorXd& full,
                                                      const std::vector<int>& active_nodes);

// Assembles the whole chain for one topology anchored at op.  y_override
// replaces the admittance assembled from `states` (scaled perturbations).
[[nodiscard]] LinearSystem assemble_linear_system(const Feeder& feeder, const SwitchStates& states,
                                                  const OperatingPoint& op,
                                                  const BlockAdmittanceMatrix* y_override = nullptr);

// Settled response to a constant input: dX_inf solves a dX = -b u (minimum-norm
// solve; the angle-reference direction is unobservable), plus the outputs.
struct SteadyState {
    Eigen::VectorXd dx;
    double df = 0.0;
    Eigen::VectorXd dvmag; // per active node
};
[[nodiscard]] SteadyState steady_state_response(const LinearSystem& sys, const Eigen::VectorXd& u);

} // namespace dnr
