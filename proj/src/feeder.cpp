#include "dnr/feeder.hpp"

#include "dnr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace dnr {

namespace {

void check_zip(const ZipCoefficients& c, int node, const char* which) {
    if (c.z < 0.0 || c.i < 0.0 || c.p < 0.0)
        throw StructuralError("node " + std::to_string(node) + ": negative " + which +
                              " ZIP coefficient");
    if (std::abs(c.z + c.i + c.p - 1.0) > 1e-9)
        throw StructuralError("node " + std::to_string(node) + ": " + which +
                              " ZIP coefficients sum to " + std::to_string(c.z + c.i + c.p) +
                              ", expected 1");
}

} // namespace

int Feeder::node_index(int id) const {
    auto it = std::find(nodes.begin(), nodes.end(), id);
    if (it == nodes.end())
        throw StructuralError("unknown node id " + std::to_string(id));
    return static_cast<int>(it - nodes.begin());
}

bool Feeder::has_node(int id) const {
    return std::find(nodes.begin(), nodes.end(), id) != nodes.end();
}

const Switch& Feeder::find_switch(const std::string& id) const {
    for (const auto& sw : switches)
        if (sw.id == id)
            return sw;
    throw StructuralError("unknown switch id '" + id + "'");
}

int Feeder::reference_gen_node() const {
    for (const auto& [node, sg] : generators)
        if (sg.reference)
            return node;
    throw StructuralError("no reference generator designated");
}

void Feeder::validate() const {
    if (nodes.empty())
        throw StructuralError("feeder has no nodes");
    std::set<int> seen(nodes.begin(), nodes.end());
    if (seen.size() != nodes.size())
        throw StructuralError("duplicate node ids in feeder");

    auto require_node = [&](int id, const std::string& what) {
        if (!seen.count(id))
            throw StructuralError(what + " references missing node " + std::to_string(id));
    };

    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& ln = lines[k];
        require_node(ln.from, "line " + std::to_string(k));
        require_node(ln.to, "line " + std::to_string(k));
        if (ln.from == ln.to)
            throw StructuralError("line " + std::to_string(k) + " connects node " +
                                  std::to_string(ln.from) + " to itself");
    }
    std::set<std::string> sw_ids;
    for (const auto& sw : switches) {
        require_node(sw.from, "switch " + sw.id);
        require_node(sw.to, "switch " + sw.id);
        if (sw.from == sw.to)
            throw StructuralError("switch " + sw.id + " connects a node to itself");
        if (!sw_ids.insert(sw.id).second)
            throw StructuralError("duplicate switch id '" + sw.id + "'");
    }
    for (const auto& [node, load] : loads) {
        require_node(node, "load");
        check_zip(load.zip_p, node, "active-power");
        check_zip(load.zip_q, node, "reactive-power");
        if (load.v_nom <= 0.0)
            throw StructuralError("node " + std::to_string(node) + ": non-positive v_nom");
    }
    int n_ref = 0;
    for (const auto& [node, sg] : generators) {
        require_node(node, "generator");
        const std::string tag = "generator at node " + std::to_string(node);
        if (sg.h <= 0.0) throw StructuralError(tag + ": inertia must be positive");
        if (sg.t_d0p <= 0.0) throw StructuralError(tag + ": t_d0p must be positive");
        if (sg.x_dp <= 0.0 || sg.x_d < sg.x_dp)
            throw StructuralError(tag + ": require x_d >= x_dp > 0");
        if (sg.x_q <= 0.0) throw StructuralError(tag + ": x_q must be positive");
        if (sg.droop <= 0.0) throw StructuralError(tag + ": droop must be positive");
        if (sg.rating_mva <= 0.0) throw StructuralError(tag + ": rating must be positive");
        if (sg.t_t <= 0.0 || sg.t_v <= 0.0 || sg.t_e <= 0.0)
            throw StructuralError(tag + ": time constants must be positive");
        if (sg.k_iv <= 0.0)
            throw StructuralError(tag + ": AVR integral gain must be positive");
        if (sg.reference) ++n_ref;
    }
    if (!generators.empty() && n_ref != 1)
        throw StructuralError("exactly one reference generator required, found " +
                              std::to_string(n_ref));
}

SwitchStates initial_switch_states(const Feeder& feeder) {
    SwitchStates st;
    for (const auto& sw : feeder.switches)
        st[sw.id] = sw.closed;
    return st;
}

void Schedule::validate(const Feeder& feeder) const {
    double prev = -1.0;
    SwitchStates st = initial_switch_states(feeder);
    for (const auto& ev : events) {
        if (ev.time <= prev)
            throw StructuralError("event times must be strictly increasing");
        if (ev.time < 0.0 || ev.time >= t_end)
            throw StructuralError("event at t=" + std::to_string(ev.time) +
                                  " outside [0, t_end)");
        prev = ev.time;
        st = apply_event(feeder, st, ev); // validates actions
    }
}

SwitchStates apply_event(const Feeder& feeder, const SwitchStates& states,
                         const SwitchEvent& event) {
    SwitchStates out = states;
    std::set<std::string> touched;
    for (const auto& act : event.actions) {
        (void)feeder.find_switch(act.switch_id); // existence check
        if (!touched.insert(act.switch_id).second)
            throw StructuralError("switch '" + act.switch_id + "' appears twice in one event");
        bool closed = out.at(act.switch_id);
        if (act.op == SwitchOp::Close && closed)
            throw StructuralError("cannot close switch '" + act.switch_id + "': already closed");
        if (act.op == SwitchOp::Open && !closed)
            throw StructuralError("cannot open switch '" + act.switch_id + "': already open");
        out[act.switch_id] = (act.op == SwitchOp::Close);
    }
    return out;
}

} // namespace dnr
