#include "dnr/power_flow.hpp"

#include "dnr/errors.hpp"
#include "dnr/sg_model.hpp"
#include "dnr/zip_load.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace dnr {

namespace {

enum class BusType { Slack, PV, PQ };

struct ComponentSolve {
    std::vector<int> buses; // node indices, matrix order
    std::vector<BusType> type;
    std::vector<double> vmag, theta;
};

double zip_p_at(const Feeder& f, int node_id, double vmag) {
    auto it = f.loads.find(node_id);
    return it == f.loads.end() ? 0.0 : zip_power(it->second, vmag)(0);
}

double zip_q_at(const Feeder& f, int node_id, double vmag) {
    auto it = f.loads.find(node_id);
    return it == f.loads.end() ? 0.0 : zip_power(it->second, vmag)(1);
}

double zip_dp_dv(const Feeder& f, int node_id, double vmag) {
    auto it = f.loads.find(node_id);
    if (it == f.loads.end())
        return 0.0;
    const auto& l = it->second;
    return l.p0 * (2.0 * l.zip_p.z * vmag / (l.v_nom * l.v_nom) + l.zip_p.i / l.v_nom);
}

double zip_dq_dv(const Feeder& f, int node_id, double vmag) {
    auto it = f.loads.find(node_id);
    if (it == f.loads.end())
        return 0.0;
    const auto& l = it->second;
    return l.q0 * (2.0 * l.zip_q.z * vmag / (l.v_nom * l.v_nom) + l.zip_q.i / l.v_nom);
}

} // namespace

Dispatch proportional_dispatch(const Feeder& feeder, const Energization& energ) {
    double total_p = 0.0;
    for (const auto& [node, load] : feeder.loads)
        if (energ.energized[feeder.node_index(node)])
            total_p += load.p0;
    double total_rating = 0.0;
    for (const auto& [node, sg] : feeder.generators)
        total_rating += sg.rating_mva;

    Dispatch d;
    for (const auto& [node, sg] : feeder.generators)
        if (!sg.reference)
            d.p_sched[node] = total_p * sg.rating_mva / total_rating;
    return d;
}

OperatingPoint solve_power_flow(const Feeder& feeder, const SwitchStates& states,
                                const Dispatch* dispatch,
                                const BlockAdmittanceMatrix* y_override) {
    feeder.validate();
    const int n = feeder.node_count();
    const auto energ = connectivity_check(feeder, states);
    const auto y_block = y_override ? *y_override : assemble_admittance(feeder, states);

    bool any_energized = false;
    for (bool e : energ.energized)
        any_energized |= e;
    if (!any_energized)
        throw PowerFlowError("no energized component: every island lacks a generator");

    Dispatch disp = dispatch ? *dispatch : proportional_dispatch(feeder, energ);

    OperatingPoint op;
    op.v0 = Eigen::VectorXd::Zero(2 * n);
    op.energized = energ.energized;
    op.dispatch = disp;

    const int ref_node = feeder.reference_gen_node();
    const int ref_idx = feeder.node_index(ref_node);

    for (std::size_t comp = 0; comp < energ.components.size(); ++comp) {
        if (!energ.component_energized[comp])
            continue;
        ComponentSolve cs;
        cs.buses = energ.components[comp];
        std::sort(cs.buses.begin(), cs.buses.end());
        const int m = static_cast<int>(cs.buses.size());

        // Slack: the designated reference if present, else largest rating here.
        int slack_pos = -1;
        double best_rating = -1.0;
        for (int k = 0; k < m; ++k) {
            const int node_id = feeder.nodes[cs.buses[k]];
            auto it = feeder.generators.find(node_id);
            if (it == feeder.generators.end())
                continue;
            if (cs.buses[k] == ref_idx) {
                slack_pos = k;
                break;
            }
            if (it->second.rating_mva > best_rating) {
                best_rating = it->second.rating_mva;
                slack_pos = k;
            }
        }
        if (slack_pos < 0)
            throw PowerFlowError("unsolvable island: energized component without a generator");

        cs.type.assign(m, BusType::PQ);
        cs.vmag.assign(m, 1.0);
        cs.theta.assign(m, 0.0);
        for (int k = 0; k < m; ++k) {
            const int node_id = feeder.nodes[cs.buses[k]];
            auto it = feeder.generators.find(node_id);
            if (it != feeder.generators.end()) {
                cs.type[k] = (k == slack_pos) ? BusType::Slack : BusType::PV;
                cs.vmag[k] = it->second.v_ref;
            }
        }

        // Component complex admittance from the block matrix.
        Eigen::MatrixXd gmat(m, m), bmat(m, m);
        for (int a = 0; a < m; ++a)
            for (int bidx = 0; bidx < m; ++bidx) {
                const auto blk = y_block.block(cs.buses[a], cs.buses[bidx]);
                gmat(a, bidx) = blk(0, 0);
                bmat(a, bidx) = blk(1, 0);
            }

        // Unknown layout: theta for all non-slack buses, then V for PQ buses.
        std::vector<int> th_of(m, -1), v_of(m, -1);
        int nth = 0;
        for (int k = 0; k < m; ++k)
            if (cs.type[k] != BusType::Slack)
                th_of[k] = nth++;
        int nv = 0;
        for (int k = 0; k < m; ++k)
            if (cs.type[k] == BusType::PQ)
                v_of[k] = nv++;
        const int nu = nth + nv;

        auto calc_pq = [&](std::vector<double>& pc, std::vector<double>& qc) {
            pc.assign(m, 0.0);
            qc.assign(m, 0.0);
            for (int a = 0; a < m; ++a)
                for (int bb = 0; bb < m; ++bb) {
                    const double th = cs.theta[a] - cs.theta[bb];
                    const double vv = cs.vmag[a] * cs.vmag[bb];
                    pc[a] += vv * (gmat(a, bb) * std::cos(th) + bmat(a, bb) * std::sin(th));
                    qc[a] += vv * (gmat(a, bb) * std::sin(th) - bmat(a, bb) * std::cos(th));
                }
        };

        auto spec_p = [&](int k) {
            const int node_id = feeder.nodes[cs.buses[k]];
            double p = -zip_p_at(feeder, node_id, cs.vmag[k]);
            auto it = disp.p_sched.find(node_id);
            if (it != disp.p_sched.end())
                p += it->second;
            return p;
        };
        auto spec_q = [&](int k) {
            const int node_id = feeder.nodes[cs.buses[k]];
            return -zip_q_at(feeder, node_id, cs.vmag[k]);
        };

        double max_mis = 0.0;
        bool converged = false;
        for (int iter = 0; iter < 50 && nu > 0; ++iter) {
            std::vector<double> pc, qc;
            calc_pq(pc, qc);
            Eigen::VectorXd mis(nu);
            for (int k = 0; k < m; ++k) {
                if (th_of[k] >= 0)
                    mis(th_of[k]) = spec_p(k) - pc[k];
                if (v_of[k] >= 0)
                    mis(nth + v_of[k]) = spec_q(k) - qc[k];
            }
            max_mis = mis.cwiseAbs().maxCoeff();
            if (max_mis < 1e-10) {
                converged = true;
                break;
            }

            Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nu, nu);
            for (int a = 0; a < m; ++a) {
                for (int bb = 0; bb < m; ++bb) {
                    const double th = cs.theta[a] - cs.theta[bb];
                    const double ct = std::cos(th), st = std::sin(th);
                    const double g = gmat(a, bb), b = bmat(a, bb);
                    if (a != bb) {
                        const double dp_dthb = cs.vmag[a] * cs.vmag[bb] * (g * st - b * ct);
                        const double dq_dthb = -cs.vmag[a] * cs.vmag[bb] * (g * ct + b * st);
                        const double dp_dvb = cs.vmag[a] * (g * ct + b * st);
                        const double dq_dvb = cs.vmag[a] * (g * st - b * ct);
                        if (th_of[a] >= 0 && th_of[bb] >= 0) {
                            jac(th_of[a], th_of[bb]) += dp_dthb;
                            if (v_of[a] >= 0)
                                jac(nth + v_of[a], th_of[bb]) += dq_dthb;
                        }
                        if (v_of[bb] >= 0) {
                            if (th_of[a] >= 0)
                                jac(th_of[a], nth + v_of[bb]) += dp_dvb;
                            if (v_of[a] >= 0)
                                jac(nth + v_of[a], nth + v_of[bb]) += dq_dvb;
                        }
                    }
                }
                // Diagonal terms.
                // dP_a/dth_a = -Q_a - B_aa V_a^2 ; dQ_a/dth_a = P_a - G_aa V_a^2
                // dP_a/dV_a = (P_a + G_aa V_a^2)/V_a ; dQ_a/dV_a = (Q_a - B_aa V_a^2)/V_a
                const double va = cs.vmag[a];
                const double pa = [&] {
                    double s = 0.0;
                    for (int bb = 0; bb < m; ++bb) {
                        const double th = cs.theta[a] - cs.theta[bb];
                        s += va * cs.vmag[bb] *
                             (gmat(a, bb) * std::cos(th) + bmat(a, bb) * std::sin(th));
                    }
                    return s;
                }();
                const double qa = [&] {
                    double s = 0.0;
                    for (int bb = 0; bb < m; ++bb) {
                        const double th = cs.theta[a] - cs.theta[bb];
                        s += va * cs.vmag[bb] *
                             (gmat(a, bb) * std::sin(th) - bmat(a, bb) * std::cos(th));
                    }
                    return s;
                }();
                if (th_of[a] >= 0) {
                    jac(th_of[a], th_of[a]) += -qa - bmat(a, a) * va * va;
                    if (v_of[a] >= 0)
                        jac(nth + v_of[a], th_of[a]) += pa - gmat(a, a) * va * va;
                }
                if (v_of[a] >= 0) {
                    if (th_of[a] >= 0)
                        jac(th_of[a], nth + v_of[a]) += (pa + gmat(a, a) * va * va) / va;
                    jac(nth + v_of[a], nth + v_of[a]) += (qa - bmat(a, a) * va * va) / va;
                }
            }

            // Mismatch is F = spec(V) - calc; Newton step solves dF/du * du = -F,
            // i.e. (J_calc - J_spec) du = F with the ZIP voltage sensitivities.
            for (int k = 0; k < m; ++k) {
                if (v_of[k] < 0)
                    continue;
                const int node_id = feeder.nodes[cs.buses[k]];
                if (th_of[k] >= 0)
                    jac(th_of[k], nth + v_of[k]) += zip_dp_dv(feeder, node_id, cs.vmag[k]);
                jac(nth + v_of[k], nth + v_of[k]) += zip_dq_dv(feeder, node_id, cs.vmag[k]);
            }

            Eigen::VectorXd du = jac.partialPivLu().solve(mis);
            if (!du.allFinite())
                throw PowerFlowError("power flow Newton step produced non-finite update");
            for (int k = 0; k < m; ++k) {
                if (th_of[k] >= 0)
                    cs.theta[k] += du(th_of[k]);
                if (v_of[k] >= 0)
                    cs.vmag[k] += du(nth + v_of[k]);
            }
        }
        if (nu == 0)
            converged = true;
        if (!converged)
            throw PowerFlowError("power flow did not converge in 50 iterations, final mismatch " +
                                 std::to_string(max_mis) + " pu");

        for (int k = 0; k < m; ++k) {
            op.v0(2 * cs.buses[k]) = cs.vmag[k] * std::cos(cs.theta[k]);
            op.v0(2 * cs.buses[k] + 1) = cs.vmag[k] * std::sin(cs.theta[k]);
        }
    }

    op.i0 = y_block.matrix() * op.v0;

    // Device anchors from the solved voltages.
    for (const auto& [node_id, load] : feeder.loads) {
        const int idx = feeder.node_index(node_id);
        if (!op.energized[idx])
            continue;
        const double vm = op.node_voltage(idx).norm();
        const auto s = zip_power(load, vm);
        op.load_points[node_id] = LoadPoint{s(0), s(1), vm};
    }
    for (const auto& [node_id, params] : feeder.generators) {
        const int idx = feeder.node_index(node_id);
        if (!op.energized[idx])
            throw PowerFlowError("generator at node " + std::to_string(node_id) +
                                 " sits on a de-energized node");
        const Eigen::Vector2d v = op.node_voltage(idx);
        const Eigen::Vector2d i = op.i0.segment<2>(2 * idx);
        // Injection at the bus plus the local load gives the machine output.
        double p = v(0) * i(0) + v(1) * i(1);
        double q = v(1) * i(0) - v(0) * i(1);
        auto lp = op.load_points.find(node_id);
        if (lp != op.load_points.end()) {
            p += lp->second.p;
            q += lp->second.q;
        }
        SgModel model(params, feeder.s_base_mva);
        op.sg[node_id] = model.init_steady_state(v, p, q);
    }
    return op;
}

} // namespace dnr
