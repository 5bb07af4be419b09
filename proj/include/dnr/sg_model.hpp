#pragma once

#include "dnr/feeder.hpp"
#include "dnr/power_flow.hpp"

#include <Eigen/Dense>
#include <array>

namespace dnr {

using Vector8 = Eigen::Matrix<double, 8, 1>;

// State layout, fixed: index 0 must hold the speed deviation (the frequency
// selector reads it directly).
enum SgStateIndex : int {
    kSgFreq = 0,
    kSgDelta = 1,
    kSgPm = 2,
    kSgPv = 3,
    kSgFe = 4,
    kSgEqp = 5,
    kSgEf = 6,
    kSgVe = 7,
};

// Per-SG linearization.  Sign conventions are chosen so the closed-loop
// network solve reads dV = Z (C dX + dI_T) with Z = (Y_L - Y_A - Y_SG)^-1:
//   b =  d(xdot)/dV,   c = -d(I_inj)/dX,   y = -d(I_inj)/dV,
// currents on the system base, machine states on the machine base.
struct SgLinearization {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 2> b;
    Eigen::Matrix<double, 2, 8> c;
    Eigen::Matrix2d y;
};

// Third-order synchronous machine (swing pair + flux decay) with droop + PI
// governor through valve and turbine lags, and a PI AVR driving the field
// voltage through a first-order exciter lag.  One nonlinear equation set is
// shared by the linear model and the time-domain reference simulator.
class SgModel {
public:
    SgModel(const SgParams& params, double s_base_mva)
        : p_(params), scale_(params.rating_mva / s_base_mva) {}

    [[nodiscard]] const SgParams& params() const { return p_; }
    [[nodiscard]] double base_scale() const { return scale_; } // machine -> system

    // Absolute state derivatives; v is the terminal dq voltage (common frame).
    // p_ref/v_ref come from the steady state (machine base).
    [[nodiscard]] Vector8 derivatives(const Vector8& x, const Eigen::Vector2d& v, double p_ref,
                                      double v_ref, double f_nom_hz) const;

    // Terminal current injection in the common dq frame, system base.
    [[nodiscard]] Eigen::Vector2d current_injection(const Vector8& x,
                                                    const Eigen::Vector2d& v) const;

    // d(I_inj)/dV at (x, v), system base (used by the algebraic Newton solve).
    [[nodiscard]] Eigen::Matrix2d current_voltage_jacobian(const Vector8& x,
                                                           const Eigen::Vector2d& v) const;

    // Electrical air-gap power, machine base.
    [[nodiscard]] double electrical_power(const Vector8& x, const Eigen::Vector2d& v) const;

    // Steady state consistent with the terminal conditions: node voltage v and
    // net injection (p_sys, q_sys) on the system base.
    [[nodiscard]] SgSteadyState init_steady_state(const Eigen::Vector2d& v, double p_sys,
                                                  double q_sys) const;

    [[nodiscard]] static Vector8 state_vector(const SgSteadyState& ss);

    // Exact Jacobians at the anchor (x0, v0).  Throws if the anchor is not an
    // equilibrium of the machine equations (residual above tolerance).
    [[nodiscard]] SgLinearization linearize(const Vector8& x0, const Eigen::Vector2d& v0,
                                            double p_ref, double v_ref, double f_nom_hz) const;

private:
    SgParams p_;
    double scale_;
};

} // namespace dnr
