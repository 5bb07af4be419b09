#include "dnr/network.hpp"

#include "dnr/errors.hpp"

#include <queue>

namespace dnr {

BlockAdmittanceMatrix assemble_admittance(const Feeder& feeder, const SwitchStates& states) {
    const int n = feeder.node_count();
    BlockAdmittanceMatrix y(n);

    auto stamp_branch = [&](int from, int to, const AdmittanceBlock& yb) {
        const int i = feeder.node_index(from);
        const int j = feeder.node_index(to);
        y.add_block(i, i, yb);
        y.add_block(j, j, yb);
        y.add_block(i, j, -yb);
        y.add_block(j, i, -yb);
    };

    for (const auto& ln : feeder.lines) {
        stamp_branch(ln.from, ln.to, ln.y);
        y.add_block(feeder.node_index(ln.from), feeder.node_index(ln.from), ln.shunt_from);
        y.add_block(feeder.node_index(ln.to), feeder.node_index(ln.to), ln.shunt_to);
    }
    for (const auto& sw : feeder.switches) {
        auto it = states.find(sw.id);
        const bool closed = (it != states.end()) ? it->second : sw.closed;
        if (closed)
            stamp_branch(sw.from, sw.to, sw.y_closed);
    }
    return y;
}

BlockAdmittanceMatrix delta_admittance(const BlockAdmittanceMatrix& y_before,
                                       const BlockAdmittanceMatrix& y_after) {
    return y_after - y_before;
}

InjectionStep injection_step(const BlockAdmittanceMatrix& delta_y, const Eigen::VectorXd& v0) {
    if (delta_y.matrix().cols() != v0.size())
        throw StructuralError("injection_step: dY is " + std::to_string(delta_y.matrix().cols()) +
                              " wide but v0 has " + std::to_string(v0.size()) + " entries");
    return InjectionStep{delta_y.matrix() * v0};
}

Energization connectivity_check(const Feeder& feeder, const SwitchStates& states) {
    const int n = feeder.node_count();
    std::vector<std::vector<int>> adj(n);
    auto connect = [&](int from, int to) {
        const int i = feeder.node_index(from);
        const int j = feeder.node_index(to);
        adj[i].push_back(j);
        adj[j].push_back(i);
    };
    for (const auto& ln : feeder.lines)
        connect(ln.from, ln.to);
    for (const auto& sw : feeder.switches) {
        auto it = states.find(sw.id);
        const bool closed = (it != states.end()) ? it->second : sw.closed;
        if (closed)
            connect(sw.from, sw.to);
    }

    Energization out;
    out.component_of.assign(n, -1);
    out.energized.assign(n, false);
    for (int start = 0; start < n; ++start) {
        if (out.component_of[start] >= 0)
            continue;
        const int comp = static_cast<int>(out.components.size());
        std::vector<int> members;
        std::queue<int> q;
        q.push(start);
        out.component_of[start] = comp;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            members.push_back(u);
            for (int v : adj[u]) {
                if (out.component_of[v] < 0) {
                    out.component_of[v] = comp;
                    q.push(v);
                }
            }
        }
        bool has_gen = false;
        for (int idx : members)
            if (feeder.generators.count(feeder.nodes[idx]))
                has_gen = true;
        out.component_energized.push_back(has_gen);
        for (int idx : members)
            out.energized[idx] = has_gen;
        out.components.push_back(std::move(members));
    }
    return out;
}

} // namespace dnr
