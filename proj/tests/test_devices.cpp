#include "dnr/power_flow.hpp"
#include "dnr/scenario.hpp"
#include "dnr/sg_model.hpp"
#include "dnr/statespace.hpp"
#include "dnr/zip_load.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dnr;
using namespace dnr::test;

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kFdTol = 1e-5;

double rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

SgParams random_machine(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SgParams g = fast_sg();
    g.rating_mva = 0.5 + u(rng);
    g.h = 0.5 + 3.0 * u(rng);
    g.d = 0.5 + 2.5 * u(rng);
    g.x_d = 0.9 + 0.6 * u(rng);
    g.x_dp = 0.2 + 0.15 * u(rng);
    g.x_q = 0.5 + 0.6 * u(rng);
    g.k_pf = u(rng);
    g.k_if = 0.2 + u(rng);
    g.gov_leak = u(rng) < 0.5 ? 0.0 : 1.0;
    return g;
}

} // namespace

TEST_CASE("SG Jacobians match central finite differences at random operating points") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        SgParams params = random_machine(rng);
        SgModel m(params, 1.0);

        const double vm = 0.9 + 0.2 * u(rng);
        const double va = -0.3 + 0.6 * u(rng);
        Eigen::Vector2d v(vm * std::cos(va), vm * std::sin(va));
        const double p = (0.1 + 0.7 * u(rng)) * m.base_scale();
        const double q = (-0.2 + 0.5 * u(rng)) * m.base_scale();

        SgSteadyState ss = m.init_steady_state(v, p, q);
        Vector8 x0 = SgModel::state_vector(ss);
        SgLinearization lin = m.linearize(x0, v, ss.p_ref, ss.v_ref, 60.0);

        Eigen::Matrix<double, 8, 8> a_fd;
        Eigen::Matrix<double, 2, 8> c_fd;
        for (int k = 0; k < 8; ++k) {
            Vector8 xp = x0;
            Vector8 xm = x0;
            xp(k) += kFdStep;
            xm(k) -= kFdStep;
            a_fd.col(k) = (m.derivatives(xp, v, ss.p_ref, ss.v_ref, 60.0) -
                           m.derivatives(xm, v, ss.p_ref, ss.v_ref, 60.0)) /
                          (2.0 * kFdStep);
            c_fd.col(k) =
                -(m.current_injection(xp, v) - m.current_injection(xm, v)) / (2.0 * kFdStep);
        }
        Eigen::Matrix<double, 8, 2> b_fd;
        Eigen::Matrix2d y_fd;
        for (int k = 0; k < 2; ++k) {
            Eigen::Vector2d vp = v;
            Eigen::Vector2d vn = v;
            vp(k) += kFdStep;
            vn(k) -= kFdStep;
            b_fd.col(k) = (m.derivatives(x0, vp, ss.p_ref, ss.v_ref, 60.0) -
                           m.derivatives(x0, vn, ss.p_ref, ss.v_ref, 60.0)) /
                          (2.0 * kFdStep);
            y_fd.col(k) =
                -(m.current_injection(x0, vp) - m.current_injection(x0, vn)) / (2.0 * kFdStep);
        }

        CHECK(rel_err(lin.a, a_fd) < kFdTol);
        CHECK(rel_err(lin.b, b_fd) < kFdTol);
        CHECK(rel_err(lin.c, c_fd) < kFdTol);
        CHECK(rel_err(lin.y, y_fd) < kFdTol);

        // The initialized state is an equilibrium of the machine equations.
        CHECK(m.derivatives(x0, v, ss.p_ref, ss.v_ref, 60.0).cwiseAbs().maxCoeff() < 1e-8);

        // current_voltage_jacobian is the same quantity as -y.
        CHECK(rel_err(m.current_voltage_jacobian(x0, v), -lin.y) < 1e-12);
    }
}

TEST_CASE("bundled anchor is an equilibrium for every machine") {
    Scenario sc = load_scenario(data_path("ieee37-dnr.json"));
    const Feeder& f = sc.feeder;
    OperatingPoint op = solve_power_flow(f, initial_switch_states(f));
    for (const auto& [node, ss] : op.sg) {
        SgModel m(f.generators.at(node), f.s_base_mva);
        Vector8 x0 = SgModel::state_vector(ss);
        Eigen::Vector2d v = op.node_voltage(f.node_index(node));
        CHECK(m.derivatives(x0, v, ss.p_ref, ss.v_ref, f.f_nom_hz).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("pure droop machine settles at delta_f = -R/(1+D*R) * delta_P") {
    // Single-machine island, proportional governor only (k_pf = k_if = 0).  A
    // small constant current draw at the terminal raises electrical power by
    // |V|*dI; the swing and governor steady state then fix the frequency at
    // -R * dP_v with the damping term folded in: df = -R dP_e / (1 + D R).
    Feeder f;
    f.nodes = {1};
    SgParams g = fast_sg();
    g.k_pf = 0.0;
    g.k_if = 0.0;
    g.gov_leak = 1.0; // keeps the disconnected integrator state from idling at zero
    f.generators[1] = g;
    f.validate();

    OperatingPoint op = solve_power_flow(f, {});
    LinearSystem sys = assemble_linear_system(f, {}, op);

    const double di = 1e-3; // system-base current draw, aligned with V0 = [v_ref, 0]
    Eigen::VectorXd u(2);
    u << -di, 0.0;
    SteadyState ss = steady_state_response(sys, u);

    const double dp_mach = op.v0(0) * di / (g.rating_mva / f.s_base_mva);
    const double want = -g.droop * dp_mach / (1.0 + g.d * g.droop);
    CHECK(ss.df == doctest::Approx(want).epsilon(0.01));
}

TEST_CASE("ZIP Jacobian: pure impedance load has the closed-form block") {
    ZipLoadParams load;
    load.p0 = 0.3;
    load.q0 = 0.12;
    load.v_nom = 1.0;
    load.zip_p = {1.0, 0.0, 0.0};
    load.zip_q = {1.0, 0.0, 0.0};
    // dI/dV of a constant-impedance draw is constant: the expansion of
    // (p0 - j q0) / v_nom^2, independent of the evaluation point.
    Eigen::Matrix2d want = AdmittanceBlock(0.3, -0.12).expand();
    for (Eigen::Vector2d v : {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.9, 0.3)}) {
        CHECK((linearize_zip(load, v) - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("ZIP Jacobian matches finite differences for mixed coefficients") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ZipLoadParams load;
        load.p0 = 0.05 + 0.4 * u(rng);
        load.q0 = -0.1 + 0.3 * u(rng);
        load.v_nom = 0.95 + 0.1 * u(rng);
        const double az = u(rng);
        const double ai = (1.0 - az) * u(rng);
        load.zip_p = {az, ai, 1.0 - az - ai};
        const double bz = u(rng);
        const double bi = (1.0 - bz) * u(rng);
        load.zip_q = {bz, bi, 1.0 - bz - bi};

        const double vm = 0.85 + 0.3 * u(rng);
        const double va = -0.4 + 0.8 * u(rng);
        Eigen::Vector2d v(vm * std::cos(va), vm * std::sin(va));

        Eigen::Matrix2d fd;
        for (int k = 0; k < 2; ++k) {
            Eigen::Vector2d vp = v;
            Eigen::Vector2d vn = v;
            vp(k) += kFdStep;
            vn(k) -= kFdStep;
            fd.col(k) = (zip_current(load, vp) - zip_current(load, vn)) / (2.0 * kFdStep);
        }
        CHECK(rel_err(linearize_zip(load, v), fd) < kFdTol);

        // zip_power at |v| is consistent with the current: S = V * conj(I).
        Eigen::Vector2d i = zip_current(load, v);
        Eigen::Vector2d s = zip_power(load, v.norm());
        CHECK(v(0) * i(0) + v(1) * i(1) == doctest::Approx(s(0)).epsilon(1e-10));
        CHECK(v(1) * i(0) - v(0) * i(1) == doctest::Approx(s(1)).epsilon(1e-10));
    }
}

TEST_CASE("device aggregation has the documented shapes and placement") {
    Feeder f = fast_island();
    OperatingPoint op = solve_power_flow(f, initial_switch_states(f));
    std::vector<int> active = {0, 1};
    AggregatedDevices agg = aggregate_devices(f, op, active);

    CHECK(agg.a_sg.rows() == 8);
    CHECK(agg.a_sg.cols() == 8);
    CHECK(agg.b_sg.rows() == 8);
    CHECK(agg.b_sg.cols() == 4);
    CHECK(agg.c_sg.rows() == 4);
    CHECK(agg.c_sg.cols() == 8);
    CHECK(agg.sg_nodes == std::vector<int>{1});
    CHECK(agg.h_sys.size() == 1);
    CHECK(agg.h_sys[0] == doctest::Approx(f.generators.at(1).h * f.generators.at(1).rating_mva /
                                          f.s_base_mva));

    // No machine at node 2: its network rows of c_sg are zero, and the load
    // block of y_l is the negated ZIP Jacobian.
    CHECK(agg.c_sg.bottomRows(2).norm() == 0.0);
    CHECK(agg.y_sg.bottomRightCorner(2, 2).norm() == 0.0);
    Eigen::Matrix2d want = -linearize_zip(f.loads.at(2), op.node_voltage(1));
    CHECK((agg.y_l.bottomRightCorner(2, 2) - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(agg.y_l.topLeftCorner(2, 2).norm() == 0.0);

    Scenario sc = load_scenario(data_path("ieee37-dnr.json"));
    OperatingPoint op37 = solve_power_flow(sc.feeder, initial_switch_states(sc.feeder));
    std::vector<int> active37;
    for (int i = 0; i < sc.feeder.node_count(); ++i)
        if (op37.energized[static_cast<size_t>(i)]) active37.push_back(i);
    AggregatedDevices agg37 = aggregate_devices(sc.feeder, op37, active37);
    CHECK(agg37.a_sg.rows() == 40); // five machines, eight states each
    CHECK(agg37.b_sg.cols() == 2 * static_cast<int>(active37.size()));
}
