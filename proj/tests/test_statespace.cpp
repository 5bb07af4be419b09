#include "dnr/errors.hpp"
#include "dnr/power_flow.hpp"
#include "dnr/scenario.hpp"
#include "dnr/statespace.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace dnr;
using namespace dnr::test;

TEST_CASE("build_z inverts a diagonal sensitivity matrix") {
    Eigen::MatrixXd y_l = 2.0 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
    Eigen::MatrixXd z = build_z(y_l, zero, zero);
    CHECK((z - 0.5 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("build_z rejects a passive network with no device feedthrough") {
    // A bare line admittance matrix is structurally singular (zero block row
    // sums); without load or machine terms there is nothing to anchor V.
    Feeder f;
    f.nodes = {1, 2};
    Line ln;
    ln.from = 1;
    ln.to = 2;
    ln.y = AdmittanceBlock(5.0, -10.0);
    f.lines.push_back(ln);
    Eigen::MatrixXd y_a = assemble_admittance(f, {}).matrix();
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
    CHECK_THROWS_AS((void)build_z(zero, y_a, zero), SingularNetworkError);
}

TEST_CASE("coi weights are inertia proportions") {
    CoiWeights w1 = coi_weights({5.0, 5.0});
    CHECK(w1.h(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w1.h(1) == doctest::Approx(0.5).epsilon(1e-14));
    CoiWeights w2 = coi_weights({3.0, 1.0});
    CHECK(w2.h(0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(w2.h(1) == doctest::Approx(0.25).epsilon(1e-14));
    CoiWeights w3 = coi_weights({2.7});
    CHECK(w3.h(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)coi_weights({2.0, -1.0}), StructuralError);
    CHECK_THROWS_AS((void)coi_weights({}), StructuralError);
}

TEST_CASE("magnitude map is the first-order |V| sensitivity") {
    Eigen::VectorXd v0(2);
    v0 << 1.0, 0.0;
    MagnitudeMap m = magnitude_map(v0);
    Eigen::Vector2d dv(0.01, 0.05);
    // d|V| = Re(dV * conj(V0)) / |V0|: the q-axis part is second order here.
    CHECK((m.m * dv)(0) == doctest::Approx(0.01).epsilon(1e-14));

    Eigen::VectorXd v1(2);
    v1 << 0.6, 0.8;
    MagnitudeMap m1 = magnitude_map(v1);
    Eigen::Vector2d dv1(0.01, 0.01);
    const double lin = (m1.m * dv1)(0);
    CHECK(lin == doctest::Approx(0.014).epsilon(1e-12));
    const double exact = Eigen::Vector2d(0.61, 0.81).norm() - 1.0;
    CHECK(std::abs(lin - exact) <= dv1.squaredNorm() / v1.norm());

    CHECK((m.m * Eigen::Vector2d::Zero()).norm() == 0.0);
    CHECK_THROWS_AS((void)magnitude_map(Eigen::Vector2d::Zero()), StructuralError);
}

TEST_CASE("bundled system: Z solve residual, structural mode, COI row") {
    Scenario sc = load_scenario(data_path("ieee37-dnr.json"));
    const Feeder& f = sc.feeder;
    SwitchStates st = initial_switch_states(f);
    OperatingPoint op = solve_power_flow(f, st);
    LinearSystem sys = assemble_linear_system(f, st, op);

    CHECK(sys.state_dim() == 40);
    CHECK(sys.active_nodes.size() == 25);

    // Z really inverts Y_L - Y_A - Y_SG: check the residual through the
    // independently assembled pieces.
    std::vector<int> active = sys.active_nodes;
    AggregatedDevices agg = aggregate_devices(f, op, active);
    Eigen::MatrixXd y_a = reduce_to_active(assemble_admittance(f, st).matrix(), active);
    Eigen::MatrixXd lhs = agg.y_l - y_a - agg.y_sg;
    const int m = static_cast<int>(lhs.rows());
    CHECK((lhs * sys.z - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-10);

    // Structural angle-reference mode: A annihilates the uniform rotor-angle
    // direction and it is invisible in both outputs.
    CHECK(sys.reference_mode_found);
    Eigen::VectorXd dir = sys.angle_reference_direction();
    CHECK(dir.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((sys.a * dir).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs((sys.c_f * dir)(0)) < 1e-8);
    CHECK((sys.c_v * dir).cwiseAbs().maxCoeff() < 1e-8);

    // All remaining modes are damped.
    CHECK(sys.max_re_eigenvalue_deflated < 0.0);
    CHECK(std::abs(sys.max_re_eigenvalue) < 1e-6);
}

TEST_CASE("build_system reduces to the device dynamics when the coupling is cut") {
    Feeder f = fast_island();
    SwitchStates st = initial_switch_states(f);
    OperatingPoint op = solve_power_flow(f, st);
    std::vector<int> active = {0, 1};
    AggregatedDevices agg = aggregate_devices(f, op, active);
    Eigen::MatrixXd y_a = reduce_to_active(assemble_admittance(f, st).matrix(), active);
    Eigen::MatrixXd z = build_z(agg.y_l, y_a, agg.y_sg);
    MagnitudeMap mag = magnitude_map(reduce_vector_to_active(op.v0, active));
    CoiWeights coi = coi_weights(agg.h_sys);

    AggregatedDevices open_loop = agg;
    open_loop.c_sg.setZero();
    LinearSystem sys = build_system(open_loop, z, mag, coi, active);
    CHECK((sys.a - agg.a_sg).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((sys.b - agg.b_sg * z).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("steady_state_response solves a dx = -b u") {
    Feeder f = fast_island();
    SwitchStates st = initial_switch_states(f);
    OperatingPoint op = solve_power_flow(f, st);
    LinearSystem sys = assemble_linear_system(f, st, op);

    Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
    u << 1e-3, -2e-3, 5e-4, 0.0;
    SteadyState ss = steady_state_response(sys, u);
    CHECK((sys.a * ss.dx + sys.b * u).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ss.df == doctest::Approx((sys.c_f * ss.dx)(0)).epsilon(1e-12));
    Eigen::VectorXd dv = sys.c_v * ss.dx + sys.d_v * u;
    CHECK((ss.dvmag - dv).cwiseAbs().maxCoeff() < 1e-12);
}
