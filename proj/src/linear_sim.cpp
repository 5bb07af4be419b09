#include "dnr/linear_sim.hpp"

#include "dnr/errors.hpp"

#include <cmath>
#include <optional>

namespace dnr {

namespace {

Eigen::VectorXd rk4_step(const LinearSystem& sys, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt) {
    const Eigen::VectorXd bu = sys.b * u;
    const Eigen::VectorXd k1 = sys.a * x + bu;
    const Eigen::VectorXd k2 = sys.a * (x + 0.5 * dt * k1) + bu;
    const Eigen::VectorXd k3 = sys.a * (x + 0.5 * dt * k2) + bu;
    const Eigen::VectorXd k4 = sys.a * (x + dt * k3) + bu;
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Anchor state of one machine expressed against the *original* governor
// reference.  A re-anchored power flow assigns the unit a new P_ref; the
// physical unit still runs the t = 0 reference, and for an isochronous unit
// (gov_leak == 0) the difference lives entirely in the frequency integrator:
// P_ref_new = P_ref_0 + k_if * f_e.  Leaky units are scheduled, so their
// reference never moves.
Vector8 effective_anchor_state(const SgSteadyState& ss, const SgParams& params, double p_ref0) {
    Vector8 x = SgModel::state_vector(ss);
    const double shift = ss.p_ref - p_ref0;
    if (std::abs(shift) > 1e-12) {
        if (params.gov_leak == 0.0 && params.k_if > 1e-9)
            x(kSgFe) += shift / params.k_if;
        // Otherwise the unit cannot absorb a reference change at equilibrium;
        // its schedule is expected to be preserved by the dispatch, so any
        // residual here is a (small) modeling approximation.
    }
    return x;
}

} // namespace

Trajectory simulate_linear(const Feeder& feeder, const Schedule& schedule, double dt,
                           SimMode mode, const LinearSimOptions& opts) {
    feeder.validate();
    schedule.validate(feeder);
    if (dt <= 0.0)
        throw SimulationError("dt must be positive");

    const int n = feeder.node_count();
    const int samples = static_cast<int>(std::floor(schedule.t_end / dt + 1e-9)) + 1;

    SwitchStates states = initial_switch_states(feeder);
    Energization energ = connectivity_check(feeder, states);
    OperatingPoint anchor = solve_power_flow(feeder, states);
    const Dispatch dispatch0 = anchor.dispatch;
    const int ng = static_cast<int>(anchor.sg.size());
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(8 * ng);

    std::map<int, double> p_ref0; // original governor references, machine base
    for (const auto& [node_id, ss] : anchor.sg)
        p_ref0[node_id] = ss.p_ref;

    const Eigen::MatrixXd y_initial = assemble_admittance(feeder, states).matrix();
    const int ref_idx = feeder.node_index(feeder.reference_gen_node());

    Trajectory traj;
    traj.dt = dt;
    traj.node_ids = feeder.nodes;
    traj.delta_vmag = Eigen::MatrixXd::Zero(n, samples);
    traj.valid.setZero(n, samples);
    traj.vmag_ref = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (energ.energized[i])
            traj.vmag_ref(i) = anchor.node_voltage(i).norm();
    for (const auto& [node_id, ss] : anchor.sg)
        traj.sg_nodes.push_back(node_id);
    if (opts.keep_state)
        traj.delta_x = Eigen::MatrixXd::Zero(8 * ng, samples);

    Eigen::VectorXd vmag_offset = Eigen::VectorXd::Zero(n); // anchor drift vs vmag_ref

    std::optional<LinearSystem> sys;
    Eigen::VectorXd u; // active coordinates; zero in sequential mode
    if (mode == SimMode::SingleAnchor) {
        sys = assemble_linear_system(feeder, states, anchor);
        u = Eigen::VectorXd::Zero(2 * static_cast<int>(sys->active_nodes.size()));
    }

    auto apply_event_ctx = [&](int event_index, const SwitchEvent& ev) {
        const SwitchStates new_states = apply_event(feeder, states, ev);
        const Energization new_energ = connectivity_check(feeder, new_states);
        const bool energization_changed = new_energ.energized != energ.energized;

        if (mode == SimMode::SingleAnchor) {
            if (energization_changed)
                throw SimulationError(
                    "single-anchor mode cannot handle events that change energization; "
                    "use sequential mode");
            const Eigen::MatrixXd y_now = assemble_admittance(feeder, new_states).matrix();
            const Eigen::VectorXd u_full = opts.event_scale * ((y_now - y_initial) * anchor.v0);
            u = reduce_vector_to_active(u_full, sys->active_nodes);
            states = new_states;
            energ = new_energ;
            if (opts.observer)
                opts.observer(event_index, ev, *sys, u);
            return;
        }

        // Sequential: settle the current model, then anchor the next one at
        // the post-event operating point.  The event becomes an initial state
        // displacement of an autonomous system; no input term remains.
        std::map<int, Vector8> x_abs; // physical state, current network frame
        if (sys) {
            const Eigen::VectorXd dv = sys->z * (sys->c_sg * dx + u);
            Eigen::VectorXd v_settled = anchor.v0;
            for (std::size_t a = 0; a < sys->active_nodes.size(); ++a)
                v_settled.segment<2>(2 * sys->active_nodes[a]) +=
                    dv.segment<2>(2 * static_cast<int>(a));
            const Eigen::Vector2d v_ref_node = v_settled.segment<2>(2 * ref_idx);
            const double alpha = std::atan2(v_ref_node(1), v_ref_node(0));
            int g = 0;
            for (const auto& [node_id, ss_old] : anchor.sg) {
                Vector8 x = effective_anchor_state(ss_old, feeder.generators.at(node_id),
                                                   p_ref0.at(node_id)) +
                            dx.segment<8>(8 * g);
                x(kSgDelta) -= alpha; // align the drifted frame with the new anchor
                x_abs[node_id] = x;
                ++g;
            }
        } else {
            for (const auto& [node_id, ss0] : anchor.sg)
                x_abs[node_id] = SgModel::state_vector(ss0);
        }

        const BlockAdmittanceMatrix* y_override = nullptr;
        BlockAdmittanceMatrix y_blend;
        if (opts.event_scale != 1.0) {
            if (energization_changed)
                throw SimulationError(
                    "a scaled event cannot change which nodes are energized");
            const auto yb = assemble_admittance(feeder, states);
            const auto ya = assemble_admittance(feeder, new_states);
            y_blend = yb;
            y_blend.matrix() += opts.event_scale * (ya.matrix() - yb.matrix());
            y_override = &y_blend;
        }

        OperatingPoint new_anchor = solve_power_flow(feeder, new_states, &dispatch0, y_override);
        int g = 0;
        for (const auto& [node_id, ss_new] : new_anchor.sg) {
            const Vector8 x_eff = effective_anchor_state(
                ss_new, feeder.generators.at(node_id), p_ref0.at(node_id));
            dx.segment<8>(8 * g) = x_abs.at(node_id) - x_eff;
            ++g;
        }
        for (int i = 0; i < n; ++i) {
            if (new_energ.energized[i]) {
                if (traj.vmag_ref(i) == 0.0)
                    traj.vmag_ref(i) = new_anchor.node_voltage(i).norm();
                vmag_offset(i) = new_anchor.node_voltage(i).norm() - traj.vmag_ref(i);
            }
        }

        anchor = new_anchor;
        states = new_states;
        energ = new_energ;
        sys = assemble_linear_system(feeder, states, anchor, y_override);
        u = Eigen::VectorXd::Zero(2 * static_cast<int>(sys->active_nodes.size()));
        if (sys->max_re_eigenvalue_deflated > 1e-9)
            traj.flagged_unstable = true;
        if (opts.observer)
            opts.observer(event_index, ev, *sys, u);
    };

    std::size_t next_event = 0;
    for (int k = 0; k < samples; ++k) {
        const double t = k * dt;
        while (next_event < schedule.events.size() &&
               schedule.events[next_event].time <= t + 1e-12) {
            apply_event_ctx(static_cast<int>(next_event), schedule.events[next_event]);
            ++next_event;
        }

        traj.times.push_back(t);
        double df = 0.0;
        if (sys) {
            df = sys->c_f * dx;
            const Eigen::VectorXd dvm = sys->c_v * dx + sys->d_v * u;
            for (std::size_t a = 0; a < sys->active_nodes.size(); ++a) {
                const int i = sys->active_nodes[a];
                traj.delta_vmag(i, k) = vmag_offset(i) + dvm(static_cast<int>(a));
                traj.valid(i, k) = 1;
            }
        } else {
            for (int i = 0; i < n; ++i)
                if (energ.energized[i])
                    traj.valid(i, k) = 1;
        }
        traj.delta_f.push_back(df);
        if (opts.keep_state)
            traj.delta_x.col(k) = dx;

        if (!std::isfinite(df))
            throw SimulationError("non-finite frequency output at t=" + std::to_string(t));

        if (k + 1 < samples && sys)
            dx = rk4_step(*sys, dx, u, dt);
    }
    return traj;
}

Eigen::MatrixXd extract_sg_frequencies(const Trajectory& traj) {
    if (traj.delta_x.size() == 0)
        throw SimulationError("extract_sg_frequencies: state history was not retained");
    const int ng = static_cast<int>(traj.sg_nodes.size());
    Eigen::MatrixXd out(ng, traj.samples());
    for (int g = 0; g < ng; ++g)
        out.row(g) = traj.delta_x.row(8 * g + kSgFreq);
    return out;
}

} // namespace dnr
