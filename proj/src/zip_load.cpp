#include "dnr/zip_load.hpp"

#include "dnr/errors.hpp"

#include <cmath>

namespace dnr {

Eigen::Vector2d zip_power(const ZipLoadParams& load, double vmag) {
    const double u = vmag / load.v_nom;
    const double p = load.p0 * (load.zip_p.z * u * u + load.zip_p.i * u + load.zip_p.p);
    const double q = load.q0 * (load.zip_q.z * u * u + load.zip_q.i * u + load.zip_q.p);
    return {p, q};
}

Eigen::Vector2d zip_current(const ZipLoadParams& load, const Eigen::Vector2d& v) {
    const double vm2 = v.squaredNorm();
    const double vm = std::sqrt(vm2);
    const auto s = zip_power(load, vm);
    // I = conj(S/V) = (P - jQ) * V / |V|^2
    return {(s(0) * v(0) + s(1) * v(1)) / vm2, (s(0) * v(1) - s(1) * v(0)) / vm2};
}

Eigen::Matrix2d linearize_zip(const ZipLoadParams& load, const Eigen::Vector2d& v0) {
    const double vm = v0.norm();
    if (vm <= 0.5)
        throw StructuralError("linearize_zip: anchor voltage magnitude " + std::to_string(vm) +
                              " pu below the 0.5 pu validity guard");
    const double vm2 = vm * vm;
    const auto s = zip_power(load, vm);
    const double vn = load.v_nom;
    // dP/d|V| and dQ/d|V|
    const double dp = load.p0 * (2.0 * load.zip_p.z * vm / (vn * vn) + load.zip_p.i / vn);
    const double dq = load.q0 * (2.0 * load.zip_q.z * vm / (vn * vn) + load.zip_q.i / vn);
    const Eigen::RowVector2d dvm = v0.transpose() / vm;

    // I_x = (P*Vx + Q*Vy)/|V|^2, I_y = (P*Vy - Q*Vx)/|V|^2
    const double ix = (s(0) * v0(0) + s(1) * v0(1)) / vm2;
    const double iy = (s(0) * v0(1) - s(1) * v0(0)) / vm2;

    Eigen::Matrix2d jac;
    jac.row(0) = (dp * dvm * v0(0) + dq * dvm * v0(1)) / vm2;
    jac(0, 0) += s(0) / vm2;
    jac(0, 1) += s(1) / vm2;
    jac.row(0) -= 2.0 * ix / vm * dvm;

    jac.row(1) = (dp * dvm * v0(1) - dq * dvm * v0(0)) / vm2;
    jac(1, 1) += s(0) / vm2;
    jac(1, 0) -= s(1) / vm2;
    jac.row(1) -= 2.0 * iy / vm * dvm;
    return jac;
}

} // namespace dnr
