#include "dnr/sg_model.hpp"

#include "dnr/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace dnr {

namespace {

// Rotor-frame voltage components for rotor angle delta (angle of the q-axis
// in the common frame): V_d = |V| sin(delta - theta), V_q = |V| cos(delta - theta).
struct MachineFrame {
    double s, c;   // sin/cos delta
    double vd, vq; // rotor-frame voltage
    double id, iq; // rotor-frame stator current
};

MachineFrame resolve_frame(const SgParams& p, const Vector8& x, const Eigen::Vector2d& v) {
    MachineFrame m{};
    m.s = std::sin(x(kSgDelta));
    m.c = std::cos(x(kSgDelta));
    m.vd = v(0) * m.s - v(1) * m.c;
    m.vq = v(0) * m.c + v(1) * m.s;
    m.id = (x(kSgEqp) - m.vq) / p.x_dp;
    m.iq = m.vd / p.x_q;
    return m;
}

} // namespace

Vector8 SgModel::derivatives(const Vector8& x, const Eigen::Vector2d& v, double p_ref,
                             double v_ref, double f_nom_hz) const {
    const auto m = resolve_frame(p_, x, v);
    const double p_e = m.vd * m.id + m.vq * m.iq;
    const double v_t = v.norm();
    const double df = x(kSgFreq) - 1.0;
    const double omega_s = 2.0 * std::numbers::pi * f_nom_hz;

    Vector8 dx;
    dx(kSgFreq) = (x(kSgPm) - p_e - p_.d * df) / (2.0 * p_.h);
    dx(kSgDelta) = omega_s * df;
    dx(kSgPm) = (x(kSgPv) - x(kSgPm)) / p_.t_t;
    dx(kSgPv) = (p_ref + p_.k_if * x(kSgFe) - (1.0 / p_.droop + p_.k_pf) * df - x(kSgPv)) / p_.t_v;
    dx(kSgFe) = -df - p_.gov_leak * x(kSgFe);
    dx(kSgEqp) = (x(kSgEf) - x(kSgEqp) - (p_.x_d - p_.x_dp) * m.id) / p_.t_d0p;
    dx(kSgEf) = (p_.k_pv * (v_ref - v_t) + p_.k_iv * x(kSgVe) - x(kSgEf)) / p_.t_e;
    dx(kSgVe) = v_ref - v_t;
    return dx;
}

Eigen::Vector2d SgModel::current_injection(const Vector8& x, const Eigen::Vector2d& v) const {
    const auto m = resolve_frame(p_, x, v);
    return scale_ * Eigen::Vector2d{m.s * m.id + m.c * m.iq, -m.c * m.id + m.s * m.iq};
}

Eigen::Matrix2d SgModel::current_voltage_jacobian(const Vector8& x,
                                                  const Eigen::Vector2d& v) const {
    const auto m = resolve_frame(p_, x, v);
    const Eigen::RowVector2d dvd{m.s, -m.c};
    const Eigen::RowVector2d dvq{m.c, m.s};
    const Eigen::RowVector2d did = -dvq / p_.x_dp;
    const Eigen::RowVector2d diq = dvd / p_.x_q;
    Eigen::Matrix2d jac;
    jac.row(0) = m.s * did + m.c * diq;
    jac.row(1) = -m.c * did + m.s * diq;
    return scale_ * jac;
}

double SgModel::electrical_power(const Vector8& x, const Eigen::Vector2d& v) const {
    const auto m = resolve_frame(p_, x, v);
    return m.vd * m.id + m.vq * m.iq;
}

SgSteadyState SgModel::init_steady_state(const Eigen::Vector2d& v, double p_sys,
                                         double q_sys) const {
    using cd = std::complex<double>;
    const cd vbar{v(0), v(1)};
    if (std::abs(vbar) < 1e-6)
        throw PowerFlowError("generator terminal voltage is zero");
    const cd s_m = cd{p_sys, q_sys} / scale_; // machine base
    const cd ibar = std::conj(s_m / vbar);
    const cd eq_phasor = vbar + cd{0.0, p_.x_q} * ibar; // lies along the q-axis
    const double delta = std::arg(eq_phasor);

    const double s = std::sin(delta), c = std::cos(delta);
    const double vd = v(0) * s - v(1) * c;
    const double vq = v(0) * c + v(1) * s;
    const double id = ibar.real() * s - ibar.imag() * c;
    const double iq = ibar.real() * c + ibar.imag() * s;

    SgSteadyState ss;
    ss.f = 1.0;
    ss.delta = delta;
    ss.e_qp = vq + p_.x_dp * id;
    ss.e_f = ss.e_qp + (p_.x_d - p_.x_dp) * id;
    const double p_e = vd * id + vq * iq;
    ss.p_m = p_e;
    ss.p_v = p_e;
    ss.p_ref = p_e;
    ss.f_e = 0.0;
    ss.v_e = ss.e_f / p_.k_iv;
    ss.v_ref = v.norm();
    ss.p0_sys = p_sys;
    ss.q0_sys = q_sys;
    return ss;
}

Vector8 SgModel::state_vector(const SgSteadyState& ss) {
    Vector8 x;
    x << ss.f, ss.delta, ss.p_m, ss.p_v, ss.f_e, ss.e_qp, ss.e_f, ss.v_e;
    return x;
}

SgLinearization SgModel::linearize(const Vector8& x0, const Eigen::Vector2d& v0, double p_ref,
                                   double v_ref, double f_nom_hz) const {
    const Vector8 rate = derivatives(x0, v0, p_ref, v_ref, f_nom_hz);
    if (rate.cwiseAbs().maxCoeff() > 1e-6)
        throw PowerFlowError("linearize_sg: anchor is not an equilibrium, max |xdot| = " +
                             std::to_string(rate.cwiseAbs().maxCoeff()));

    const auto m = resolve_frame(p_, x0, v0);
    const double omega_s = 2.0 * std::numbers::pi * f_nom_hz;
    const double v_t = v0.norm();

    // Rotor-frame partials.
    const double dvd_ddelta = m.vq;
    const double dvq_ddelta = -m.vd;
    const Eigen::RowVector2d dvd_dv{m.s, -m.c};
    const Eigen::RowVector2d dvq_dv{m.c, m.s};
    const double did_ddelta = -dvq_ddelta / p_.x_dp;
    const double did_deqp = 1.0 / p_.x_dp;
    const Eigen::RowVector2d did_dv = -dvq_dv / p_.x_dp;
    const double diq_ddelta = dvd_ddelta / p_.x_q;
    const Eigen::RowVector2d diq_dv = dvd_dv / p_.x_q;

    const double dpe_ddelta = m.id * dvd_ddelta + m.vd * did_ddelta + m.iq * dvq_ddelta +
                              m.vq * diq_ddelta;
    const double dpe_deqp = m.vd * did_deqp;
    const Eigen::RowVector2d dpe_dv =
        m.id * dvd_dv + m.vd * did_dv + m.iq * dvq_dv + m.vq * diq_dv;
    const Eigen::RowVector2d dvt_dv = v0.transpose() / v_t;

    SgLinearization lin;
    lin.a.setZero();
    lin.b.setZero();
    lin.c.setZero();

    lin.a(kSgFreq, kSgFreq) = -p_.d / (2.0 * p_.h);
    lin.a(kSgFreq, kSgDelta) = -dpe_ddelta / (2.0 * p_.h);
    lin.a(kSgFreq, kSgPm) = 1.0 / (2.0 * p_.h);
    lin.a(kSgFreq, kSgEqp) = -dpe_deqp / (2.0 * p_.h);
    lin.b.row(kSgFreq) = -dpe_dv / (2.0 * p_.h);

    lin.a(kSgDelta, kSgFreq) = omega_s;

    lin.a(kSgPm, kSgPm) = -1.0 / p_.t_t;
    lin.a(kSgPm, kSgPv) = 1.0 / p_.t_t;

    lin.a(kSgPv, kSgFreq) = -(1.0 / p_.droop + p_.k_pf) / p_.t_v;
    lin.a(kSgPv, kSgPv) = -1.0 / p_.t_v;
    lin.a(kSgPv, kSgFe) = p_.k_if / p_.t_v;

    lin.a(kSgFe, kSgFreq) = -1.0;
    lin.a(kSgFe, kSgFe) = -p_.gov_leak;

    lin.a(kSgEqp, kSgDelta) = -(p_.x_d - p_.x_dp) * did_ddelta / p_.t_d0p;
    lin.a(kSgEqp, kSgEqp) = (-1.0 - (p_.x_d - p_.x_dp) * did_deqp) / p_.t_d0p;
    lin.a(kSgEqp, kSgEf) = 1.0 / p_.t_d0p;
    lin.b.row(kSgEqp) = -(p_.x_d - p_.x_dp) * did_dv / p_.t_d0p;

    lin.a(kSgEf, kSgEf) = -1.0 / p_.t_e;
    lin.a(kSgEf, kSgVe) = p_.k_iv / p_.t_e;
    lin.b.row(kSgEf) = -p_.k_pv * dvt_dv / p_.t_e;

    lin.b.row(kSgVe) = -dvt_dv;

    // Network-frame current partials (machine base, then system base).
    const double din_x_ddelta = (m.c * m.id - m.s * m.iq) + (m.s * did_ddelta + m.c * diq_ddelta);
    const double din_y_ddelta = (m.s * m.id + m.c * m.iq) + (-m.c * did_ddelta + m.s * diq_ddelta);
    lin.c(0, kSgDelta) = -scale_ * din_x_ddelta;
    lin.c(1, kSgDelta) = -scale_ * din_y_ddelta;
    lin.c(0, kSgEqp) = -scale_ * m.s * did_deqp;
    lin.c(1, kSgEqp) = -scale_ * (-m.c) * did_deqp;
    lin.y = -current_voltage_jacobian(x0, v0);
    return lin;
}

} // namespace dnr
