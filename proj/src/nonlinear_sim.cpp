#include "dnr/nonlinear_sim.hpp"

#include "dnr/errors.hpp"
#include "dnr/network.hpp"
#include "dnr/power_flow.hpp"
#include "dnr/statespace.hpp"
#include "dnr/sg_model.hpp"
#include "dnr/zip_load.hpp"

#include <cmath>
#include <deque>

namespace dnr {

namespace {

struct Machine {
    int node_id = 0;
    int node_index = 0;
    SgModel model;
    double p_ref = 0.0;
    double v_ref = 1.0;
    double w_coi = 0.0; // normalized system-base inertia share
};

// Components of the blended admittance graph; a node is live when its
// component contains a generator.  Blending with 0 < scale < 1 keeps partially
// opened branches connected, so connectivity comes from the matrix itself.
std::vector<int> live_nodes(const Eigen::MatrixXd& y, const std::vector<Machine>& machines,
                            int n) {
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (y.block<2, 2>(2 * i, 2 * j).cwiseAbs().maxCoeff() > 1e-13) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
    std::vector<bool> live(n, false);
    std::deque<int> queue;
    for (const auto& m : machines)
        if (!live[m.node_index]) {
            live[m.node_index] = true;
            queue.push_back(m.node_index);
        }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        for (int j : adj[i])
            if (!live[j]) {
                live[j] = true;
                queue.push_back(j);
            }
    }
    std::vector<int> active;
    for (int i = 0; i < n; ++i)
        if (live[i])
            active.push_back(i);
    return active;
}

class AlgebraicSolver {
public:
    AlgebraicSolver(const Feeder& feeder, const std::vector<Machine>& machines)
        : feeder_(feeder), machines_(machines) {}

    void set_topology(const Eigen::MatrixXd& y_full, const std::vector<int>& active) {
        active_ = active;
        pos_of_.assign(feeder_.node_count(), -1);
        for (std::size_t a = 0; a < active.size(); ++a)
            pos_of_[active[a]] = static_cast<int>(a);
        const int m = static_cast<int>(active.size());
        y_act_.resize(2 * m, 2 * m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                y_act_.block<2, 2>(2 * a, 2 * b) = y_full.block<2, 2>(2 * active[a], 2 * active[b]);
    }

    [[nodiscard]] const std::vector<int>& active() const { return active_; }
    [[nodiscard]] int position(int node_index) const { return pos_of_[node_index]; }

    // Device injections minus network currents; zero at the solution.
    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& v) const {
        Eigen::VectorXd r = -(y_act_ * v);
        for (std::size_t g = 0; g < machines_.size(); ++g) {
            const int pos = pos_of_[machines_[g].node_index];
            r.segment<2>(2 * pos) += machines_[g].model.current_injection(
                x.segment<8>(8 * static_cast<Eigen::Index>(g)), v.segment<2>(2 * pos));
        }
        for (const auto& [node_id, load] : feeder_.loads) {
            const int pos = pos_of_[feeder_.node_index(node_id)];
            if (pos >= 0)
                r.segment<2>(2 * pos) -= zip_current(load, v.segment<2>(2 * pos));
        }
        return r;
    }

    void solve(const Eigen::VectorXd& x, Eigen::VectorXd& v, double tol, int max_iter) const {
        Eigen::VectorXd r = residual(x, v);
        double rn = r.lpNorm<Eigen::Infinity>();
        for (int iter = 0; iter < max_iter; ++iter) {
            if (rn < tol)
                return;
            Eigen::MatrixXd jac = -y_act_; // d(residual)/dV
            for (std::size_t g = 0; g < machines_.size(); ++g) {
                const int pos = pos_of_[machines_[g].node_index];
                jac.block<2, 2>(2 * pos, 2 * pos) += machines_[g].model.current_voltage_jacobian(
                    x.segment<8>(8 * static_cast<Eigen::Index>(g)), v.segment<2>(2 * pos));
            }
            for (const auto& [node_id, load] : feeder_.loads) {
                const int pos = pos_of_[feeder_.node_index(node_id)];
                if (pos >= 0)
                    jac.block<2, 2>(2 * pos, 2 * pos) -=
                        linearize_zip(load, v.segment<2>(2 * pos));
            }
            const Eigen::VectorXd dv = jac.partialPivLu().solve(-r);
            if (!dv.allFinite())
                throw SimulationError("algebraic network solve produced a singular Jacobian");
            double lambda = 1.0;
            while (true) {
                const Eigen::VectorXd v_try = v + lambda * dv;
                const Eigen::VectorXd r_try = residual(x, v_try);
                const double rn_try = r_try.lpNorm<Eigen::Infinity>();
                if (rn_try < rn || lambda < 1e-6) {
                    v = v_try;
                    r = r_try;
                    rn = rn_try;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if (rn >= tol)
            throw SimulationError("algebraic network solve failed to converge (residual " +
                                  std::to_string(rn) + ")");
    }

private:
    const Feeder& feeder_;
    const std::vector<Machine>& machines_;
    std::vector<int> active_;
    std::vector<int> pos_of_;
    Eigen::MatrixXd y_act_;
};

} // namespace

Trajectory simulate_nonlinear(const Feeder& feeder, const Schedule& schedule, double dt,
                              const NonlinearSimOptions& opts) {
    feeder.validate();
    schedule.validate(feeder);
    if (dt <= 0.0)
        throw SimulationError("dt must be positive");

    const int n = feeder.node_count();
    const int samples = static_cast<int>(std::floor(schedule.t_end / dt + 1e-9)) + 1;

    SwitchStates states = initial_switch_states(feeder);
    OperatingPoint op = solve_power_flow(feeder, states);

    std::vector<Machine> machines;
    double h_total = 0.0;
    for (const auto& [node_id, ss] : op.sg) {
        const auto& params = feeder.generators.at(node_id);
        machines.push_back({node_id, feeder.node_index(node_id), SgModel(params, feeder.s_base_mva),
                            ss.p_ref, ss.v_ref, 0.0});
        h_total += params.h * params.rating_mva / feeder.s_base_mva;
    }
    for (auto& m : machines)
        m.w_coi = feeder.generators.at(m.node_id).h * feeder.generators.at(m.node_id).rating_mva /
                  (feeder.s_base_mva * h_total);
    const int ng = static_cast<int>(machines.size());

    Eigen::VectorXd x(8 * ng);
    for (int g = 0; g < ng; ++g)
        x.segment<8>(8 * g) = SgModel::state_vector(op.sg.at(machines[g].node_id));

    Eigen::MatrixXd y_full = assemble_admittance(feeder, states).matrix();
    AlgebraicSolver solver(feeder, machines);
    std::vector<int> active = live_nodes(y_full, machines, n);
    solver.set_topology(y_full, active);
    Eigen::VectorXd v = reduce_vector_to_active(op.v0, active);

    Trajectory traj;
    traj.dt = dt;
    traj.node_ids = feeder.nodes;
    traj.delta_vmag = Eigen::MatrixXd::Zero(n, samples);
    traj.valid.setZero(n, samples);
    traj.vmag_ref = Eigen::VectorXd::Zero(n);
    for (int i : active)
        traj.vmag_ref(i) = op.node_voltage(i).norm();
    for (const auto& m : machines)
        traj.sg_nodes.push_back(m.node_id);

    auto derivatives = [&](const Eigen::VectorXd& xs, Eigen::VectorXd& vs) {
        solver.solve(xs, vs, opts.newton_tol, opts.newton_max_iter);
        Eigen::VectorXd dx(8 * ng);
        for (int g = 0; g < ng; ++g) {
            const int pos = solver.position(machines[g].node_index);
            dx.segment<8>(8 * g) = machines[g].model.derivatives(
                xs.segment<8>(8 * g), vs.segment<2>(2 * pos), machines[g].p_ref,
                machines[g].v_ref, feeder.f_nom_hz);
        }
        return dx;
    };

    auto apply_event = [&](const SwitchEvent& ev) {
        const SwitchStates new_states = dnr::apply_event(feeder, states, ev);
        const Eigen::MatrixXd y_after = assemble_admittance(feeder, new_states).matrix();
        const Eigen::MatrixXd y_new = y_full + opts.event_scale * (y_after - y_full);

        // Keep the pre-event solution handy before the active set changes.
        Eigen::VectorXd v_full = Eigen::VectorXd::Zero(2 * n);
        for (std::size_t a = 0; a < solver.active().size(); ++a)
            v_full.segment<2>(2 * solver.active()[a]) = v.segment<2>(2 * static_cast<int>(a));

        const std::vector<int> new_active = live_nodes(y_new, machines, n);
        std::vector<bool> was_live(n, false);
        for (int i : solver.active())
            was_live[i] = true;

        // Newly energized nodes start at the voltage of the energized endpoint
        // of the switch that reached them (first guess for the Newton solve).
        for (const auto& act : ev.actions) {
            if (act.op != SwitchOp::Close)
                continue;
            const auto& sw = feeder.find_switch(act.switch_id);
            const int i = feeder.node_index(sw.from);
            const int j = feeder.node_index(sw.to);
            int live = -1;
            if (was_live[i] && !was_live[j]) live = i;
            if (was_live[j] && !was_live[i]) live = j;
            if (live < 0)
                continue;
            for (int k : new_active)
                if (!was_live[k] && v_full.segment<2>(2 * k).norm() < 1e-12)
                    v_full.segment<2>(2 * k) = v_full.segment<2>(2 * live);
        }
        for (int k : new_active) {
            if (!was_live[k]) {
                if (v_full.segment<2>(2 * k).norm() < 1e-12)
                    v_full.segment<2>(2 * k) = Eigen::Vector2d(1.0, 0.0);
                traj.vmag_ref(k) = v_full.segment<2>(2 * k).norm();
            }
        }

        y_full = y_new;
        states = new_states;
        solver.set_topology(y_full, new_active);
        v = reduce_vector_to_active(v_full, new_active);
    };

    std::size_t next_event = 0;
    for (int k = 0; k < samples; ++k) {
        const double t = k * dt;
        while (next_event < schedule.events.size() &&
               schedule.events[next_event].time <= t + 1e-12) {
            apply_event(schedule.events[next_event]);
            ++next_event;
        }

        solver.solve(x, v, opts.newton_tol, opts.newton_max_iter);
        if (!x.allFinite() || !v.allFinite())
            throw SimulationError("reference simulation diverged at t=" + std::to_string(t));

        traj.times.push_back(t);
        double df = 0.0;
        for (int g = 0; g < ng; ++g)
            df += machines[g].w_coi * (x(8 * g + kSgFreq) - 1.0);
        traj.delta_f.push_back(df);
        for (std::size_t a = 0; a < solver.active().size(); ++a) {
            const int i = solver.active()[a];
            traj.delta_vmag(i, k) =
                v.segment<2>(2 * static_cast<int>(a)).norm() - traj.vmag_ref(i);
            traj.valid(i, k) = 1;
        }
        if (opts.observer) {
            Eigen::VectorXd v_full = Eigen::VectorXd::Zero(2 * n);
            for (std::size_t a = 0; a < solver.active().size(); ++a)
                v_full.segment<2>(2 * solver.active()[a]) = v.segment<2>(2 * static_cast<int>(a));
            opts.observer(k, t, x, v_full, solver.active());
        }

        if (k + 1 == samples)
            break;

        // RK4 with the algebraic constraint enforced at every stage.
        Eigen::VectorXd vs = v;
        const Eigen::VectorXd k1 = derivatives(x, vs);
        const Eigen::VectorXd k2 = derivatives(x + 0.5 * dt * k1, vs);
        const Eigen::VectorXd k3 = derivatives(x + 0.5 * dt * k2, vs);
        const Eigen::VectorXd k4 = derivatives(x + dt * k3, vs);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        v = vs; // warm start for the next step
    }
    return traj;
}

RmseReport compare_rmse(const Trajectory& estimated, const Trajectory& actual) {
    if (estimated.node_ids != actual.node_ids)
        throw SimulationError("compare_rmse: node sets differ");
    if (estimated.samples() != actual.samples() ||
        std::abs(estimated.dt - actual.dt) > 1e-12)
        throw SimulationError("compare_rmse: time grids differ");

    RmseReport report;
    const int n = static_cast<int>(estimated.node_ids.size());
    const int samples = estimated.samples();
    double sum = 0.0;
    int counted = 0;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        int m = 0;
        for (int k = 0; k < samples; ++k) {
            if (!estimated.valid(i, k) || !actual.valid(i, k))
                continue;
            const double diff = estimated.vmag_abs(i, k) - actual.vmag_abs(i, k);
            acc += diff * diff;
            ++m;
        }
        if (m == 0)
            continue;
        const double rmse = std::sqrt(acc / m);
        report.per_node.push_back({estimated.node_ids[i], rmse, m});
        sum += rmse;
        report.maximum = std::max(report.maximum, rmse);
        ++counted;
    }
    if (counted > 0)
        report.average = sum / counted;

    double facc = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double diff = estimated.delta_f[k] - actual.delta_f[k];
        facc += diff * diff;
    }
    report.freq_rmse = samples > 0 ? std::sqrt(facc / samples) : 0.0;
    return report;
}

} // namespace dnr
