#include "dnr/linear_sim.hpp"
#include "dnr/network.hpp"
#include "dnr/scenario.hpp"
#include "dnr/statespace.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace dnr;
using namespace dnr::test;

namespace {

SwitchEvent close_event(double t, const std::string& id) {
    SwitchEvent ev;
    ev.time = t;
    ev.actions.push_back({id, SwitchOp::Close});
    return ev;
}

// Feeder of fast_island() with a second normally open tie.
Feeder fast_island_two_ties() {
    Feeder f = fast_island();
    Switch sw;
    sw.id = "S2";
    sw.from = 1;
    sw.to = 2;
    sw.y_closed = AdmittanceBlock(1.0 / std::complex<double>(0.06, 0.12));
    sw.closed = false;
    f.switches.push_back(sw);
    return f;
}

} // namespace

TEST_CASE("no events means no deviation at all") {
    Scenario sc = load_scenario(data_path("ieee37-dnr.json"));
    Schedule quiet;
    quiet.t_end = 2.0;
    Trajectory traj = simulate_linear(sc.feeder, quiet, 1e-3, SimMode::Sequential);
    CHECK(traj.samples() == 2001);
    CHECK(traj.delta_vmag.cwiseAbs().maxCoeff() == 0.0);
    for (double df : traj.delta_f) CHECK(df == 0.0);
    CHECK_FALSE(traj.flagged_unstable);
    // De-energized load areas are marked invalid, the backbone valid.
    CHECK(traj.valid(sc.feeder.node_index(25), 0) == 1);
    CHECK(traj.valid(sc.feeder.node_index(26), 0) == 0);
}

TEST_CASE("single-anchor run settles onto the closed-form steady state") {
    Feeder f = fast_island();
    SwitchStates st = initial_switch_states(f);
    OperatingPoint op = solve_power_flow(f, st);
    LinearSystem sys = assemble_linear_system(f, st, op);
    REQUIRE(sys.max_re_eigenvalue_deflated < -0.3); // settles well within 60 s

    SwitchStates closed = st;
    closed["S1"] = true;
    BlockAdmittanceMatrix dy =
        delta_admittance(assemble_admittance(f, st), assemble_admittance(f, closed));
    Eigen::VectorXd u =
        reduce_vector_to_active(injection_step(dy, op.v0).delta_it, sys.active_nodes);
    SteadyState want = steady_state_response(sys, u);

    Schedule sched;
    sched.t_end = 60.0;
    sched.events.push_back(close_event(0.5, "S1"));
    Trajectory traj = simulate_linear(f, sched, 1e-3, SimMode::SingleAnchor);

    const int last = traj.samples() - 1;
    CHECK(std::abs(traj.delta_f[static_cast<size_t>(last)] - want.df) < 1e-6);
    for (int i = 0; i < f.node_count(); ++i)
        CHECK(std::abs(traj.delta_vmag(i, last) - want.dvmag(i)) < 1e-6);
}

TEST_CASE("single-anchor responses superpose") {
    Feeder f = fast_island_two_ties();
    Schedule s1;
    s1.t_end = 4.0;
    s1.events.push_back(close_event(0.5, "S1"));
    Schedule s2;
    s2.t_end = 4.0;
    s2.events.push_back(close_event(1.5, "S2"));
    Schedule both;
    both.t_end = 4.0;
    both.events.push_back(close_event(0.5, "S1"));
    both.events.push_back(close_event(1.5, "S2"));

    Trajectory t1 = simulate_linear(f, s1, 1e-3, SimMode::SingleAnchor);
    Trajectory t2 = simulate_linear(f, s2, 1e-3, SimMode::SingleAnchor);
    Trajectory tb = simulate_linear(f, both, 1e-3, SimMode::SingleAnchor);

    CHECK((tb.delta_vmag - t1.delta_vmag - t2.delta_vmag).cwiseAbs().maxCoeff() < 1e-9);
    for (int k = 0; k < tb.samples(); ++k) {
        const auto ku = static_cast<size_t>(k);
        CHECK(std::abs(tb.delta_f[ku] - t1.delta_f[ku] - t2.delta_f[ku]) < 1e-9);
    }
}

TEST_CASE("fixed-step integration converges at fourth order") {
    Feeder f = fast_island();
    Schedule sched;
    sched.t_end = 1.0;
    sched.events.push_back(close_event(0.2, "S1"));

    auto run = [&](double dt) { return simulate_linear(f, sched, dt, SimMode::SingleAnchor); };
    Trajectory ref = run(1.25e-4);
    auto err = [&](const Trajectory& t) {
        const int stride_ref = static_cast<int>(std::lround(t.dt / 1.25e-4));
        double worst = 0.0;
        for (int k = 0; k < t.samples(); ++k)
            worst = std::max(worst, std::abs(t.delta_f[static_cast<size_t>(k)] -
                                             ref.delta_f[static_cast<size_t>(k * stride_ref)]));
        return worst;
    };
    const double e1 = err(run(4e-3));
    const double e2 = err(run(2e-3));
    REQUIRE(e2 > 1e-15); // stay above the rounding floor
    const double ratio = e1 / e2;
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
}

TEST_CASE("COI frequency equals the inertia-weighted mean of the machine traces") {
    Scenario sc = load_scenario(data_path("ieee37-dnr.json"));
    Schedule sched;
    sched.t_end = 3.0;
    sched.events.push_back(sc.schedule.events[0]);
    LinearSimOptions opts;
    opts.keep_state = true;
    Trajectory traj = simulate_linear(sc.feeder, sched, 1e-3, SimMode::Sequential, opts);

    Eigen::MatrixXd freqs = extract_sg_frequencies(traj);
    REQUIRE(static_cast<size_t>(freqs.rows()) == traj.sg_nodes.size());

    std::vector<double> h;
    for (int node : traj.sg_nodes) {
        const auto& g = sc.feeder.generators.at(node);
        h.push_back(g.h * g.rating_mva / sc.feeder.s_base_mva);
    }
    Eigen::RowVectorXd w = coi_weights(h).h;
    Eigen::RowVectorXd coi = w * freqs;
    for (int k = 0; k < traj.samples(); ++k)
        CHECK(std::abs(coi(k) - traj.delta_f[static_cast<size_t>(k)]) < 1e-12);
}
