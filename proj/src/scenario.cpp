#include "dnr/scenario.hpp"

#include "dnr/errors.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace dnr {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ScenarioError(where + ": missing field '" + key + "'");
    return *it;
}

double num(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number())
        throw ScenarioError(where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

double num_or(const json& obj, const char* key, double fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : it->get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_integer())
        throw ScenarioError(where + ": field '" + key + "' must be an integer");
    return v.get<int>();
}

ZipCoefficients zip_coeffs(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.size() != 3)
        throw ScenarioError(where + ": ZIP coefficients must be an array [z, i, p]");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

AdmittanceBlock shunt_or_zero(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        return {0.0, 0.0};
    return {num(*it, "g", where), num(*it, "b", where)};
}

Scenario from_json(const json& root) {
    Scenario sc;
    sc.name = root.value("name", "");

    const json& system = require(root, "system", "scenario");
    sc.feeder.s_base_mva = num(system, "s_base_mva", "system");
    sc.feeder.f_nom_hz = num(system, "f_nom_hz", "system");
    sc.v_base_kv = num_or(system, "v_base_kv", 1.0);

    for (const json& nd : require(root, "nodes", "scenario"))
        sc.feeder.nodes.push_back(nd.get<int>());

    for (const json& ln : require(root, "lines", "scenario")) {
        Line line;
        line.from = integer(ln, "from", "line");
        line.to = integer(ln, "to", "line");
        const std::string where =
            "line " + std::to_string(line.from) + "-" + std::to_string(line.to);
        line.y = {num(ln, "g", where), num(ln, "b", where)};
        line.shunt_from = shunt_or_zero(ln, "shunt_from", where);
        line.shunt_to = shunt_or_zero(ln, "shunt_to", where);
        sc.feeder.lines.push_back(line);
    }

    if (root.contains("switches"))
        for (const json& sw : root["switches"]) {
            Switch s;
            s.id = require(sw, "id", "switch").get<std::string>();
            const std::string where = "switch " + s.id;
            s.from = integer(sw, "from", where);
            s.to = integer(sw, "to", where);
            s.y_closed = {num(sw, "g", where), num(sw, "b", where)};
            s.closed = require(sw, "closed", where).get<bool>();
            sc.feeder.switches.push_back(s);
        }

    if (root.contains("loads"))
        for (const json& ld : root["loads"]) {
            const int node = integer(ld, "node", "load");
            const std::string where = "load at node " + std::to_string(node);
            ZipLoadParams load;
            load.p0 = num(ld, "p", where);
            load.q0 = num(ld, "q", where);
            load.v_nom = num_or(ld, "v_nom", 1.0);
            load.zip_p = zip_coeffs(require(ld, "zip_p", where), where);
            load.zip_q = zip_coeffs(require(ld, "zip_q", where), where);
            if (!sc.feeder.loads.emplace(node, load).second)
                throw ScenarioError(where + ": duplicate load");
        }

    for (const json& gn : require(root, "generators", "scenario")) {
        const int node = integer(gn, "node", "generator");
        const std::string where = "generator at node " + std::to_string(node);
        SgParams p;
        p.rating_mva = num(gn, "rating_mva", where);
        p.h = num(gn, "h", where);
        p.d = num(gn, "d", where);
        p.droop = num(gn, "droop", where);
        p.t_t = num(gn, "t_t", where);
        p.t_v = num(gn, "t_v", where);
        p.k_pf = num_or(gn, "k_pf", 0.0);
        p.k_if = num_or(gn, "k_if", 0.0);
        p.gov_leak = num_or(gn, "gov_leak", 0.0);
        p.k_pv = num(gn, "k_pv", where);
        p.k_iv = num(gn, "k_iv", where);
        p.t_e = num(gn, "t_e", where);
        p.x_d = num(gn, "x_d", where);
        p.x_dp = num(gn, "x_dp", where);
        p.x_q = num(gn, "x_q", where);
        p.t_d0p = num(gn, "t_d0p", where);
        p.v_ref = num_or(gn, "v_ref", 1.0);
        p.reference = gn.value("reference", false);
        if (!sc.feeder.generators.emplace(node, p).second)
            throw ScenarioError(where + ": duplicate generator");
    }

    const json& sched = require(root, "schedule", "scenario");
    sc.schedule.t_end = num(sched, "t_end", "schedule");
    if (sched.contains("events"))
        for (const json& ev : sched["events"]) {
            SwitchEvent event;
            event.time = num(ev, "time", "event");
            for (const json& act : require(ev, "actions", "event")) {
                SwitchAction a;
                a.switch_id = require(act, "switch", "action").get<std::string>();
                const std::string op = require(act, "op", "action").get<std::string>();
                if (op == "open")
                    a.op = SwitchOp::Open;
                else if (op == "close")
                    a.op = SwitchOp::Close;
                else
                    throw ScenarioError("action on switch " + a.switch_id +
                                        ": op must be 'open' or 'close', got '" + op + "'");
                event.actions.push_back(a);
            }
            sc.schedule.events.push_back(event);
        }

    if (root.contains("solver")) {
        const json& solver = root["solver"];
        sc.solver.dt = num_or(solver, "dt", 1e-3);
        const std::string mode = solver.value("mode", "sequential");
        if (mode == "sequential")
            sc.solver.mode = SimMode::Sequential;
        else if (mode == "single-anchor")
            sc.solver.mode = SimMode::SingleAnchor;
        else
            throw ScenarioError("solver.mode must be 'sequential' or 'single-anchor', got '" +
                                mode + "'");
    }

    try {
        sc.feeder.validate();
        sc.schedule.validate(sc.feeder);
    } catch (const std::exception& e) {
        throw ScenarioError(std::string("invalid scenario: ") + e.what());
    }
    return sc;
}

json shunt_json(const AdmittanceBlock& s) { return {{"g", s.g}, {"b", s.b}}; }

json to_json(const Scenario& sc) {
    json root;
    root["name"] = sc.name;
    root["system"] = {{"s_base_mva", sc.feeder.s_base_mva},
                      {"v_base_kv", sc.v_base_kv},
                      {"f_nom_hz", sc.feeder.f_nom_hz}};
    root["nodes"] = sc.feeder.nodes;

    json lines = json::array();
    for (const auto& ln : sc.feeder.lines) {
        json j = {{"from", ln.from}, {"to", ln.to}, {"g", ln.y.g}, {"b", ln.y.b}};
        if (ln.shunt_from.g != 0.0 || ln.shunt_from.b != 0.0)
            j["shunt_from"] = shunt_json(ln.shunt_from);
        if (ln.shunt_to.g != 0.0 || ln.shunt_to.b != 0.0)
            j["shunt_to"] = shunt_json(ln.shunt_to);
        lines.push_back(j);
    }
    root["lines"] = lines;

    json switches = json::array();
    for (const auto& sw : sc.feeder.switches)
        switches.push_back({{"id", sw.id},
                            {"from", sw.from},
                            {"to", sw.to},
                            {"g", sw.y_closed.g},
                            {"b", sw.y_closed.b},
                            {"closed", sw.closed}});
    root["switches"] = switches;

    json loads = json::array();
    for (const auto& [node, ld] : sc.feeder.loads)
        loads.push_back({{"node", node},
                         {"p", ld.p0},
                         {"q", ld.q0},
                         {"v_nom", ld.v_nom},
                         {"zip_p", {ld.zip_p.z, ld.zip_p.i, ld.zip_p.p}},
                         {"zip_q", {ld.zip_q.z, ld.zip_q.i, ld.zip_q.p}}});
    root["loads"] = loads;

    json gens = json::array();
    for (const auto& [node, p] : sc.feeder.generators)
        gens.push_back({{"node", node},       {"rating_mva", p.rating_mva},
                        {"h", p.h},           {"d", p.d},
                        {"droop", p.droop},   {"t_t", p.t_t},
                        {"t_v", p.t_v},       {"k_pf", p.k_pf},
                        {"k_if", p.k_if},     {"gov_leak", p.gov_leak},
                        {"k_pv", p.k_pv},     {"k_iv", p.k_iv},
                        {"t_e", p.t_e},       {"x_d", p.x_d},
                        {"x_dp", p.x_dp},     {"x_q", p.x_q},
                        {"t_d0p", p.t_d0p},   {"v_ref", p.v_ref},
                        {"reference", p.reference}});
    root["generators"] = gens;

    json events = json::array();
    for (const auto& ev : sc.schedule.events) {
        json actions = json::array();
        for (const auto& act : ev.actions)
            actions.push_back({{"switch", act.switch_id},
                               {"op", act.op == SwitchOp::Open ? "open" : "close"}});
        events.push_back({{"time", ev.time}, {"actions", actions}});
    }
    root["schedule"] = {{"t_end", sc.schedule.t_end}, {"events", events}};
    root["solver"] = {{"dt", sc.solver.dt},
                      {"mode", sc.solver.mode == SimMode::Sequential ? "sequential"
                                                                     : "single-anchor"}};
    return root;
}

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError((origin.empty() ? std::string("scenario") : origin) +
                            ": JSON parse error at byte " + std::to_string(e.byte) + ": " +
                            e.what());
    }
    try {
        return from_json(root);
    } catch (const ScenarioError&) {
        throw;
    } catch (const json::exception& e) {
        throw ScenarioError((origin.empty() ? std::string("scenario") : origin) +
                            ": malformed value: " + e.what());
    }
}

std::string serialize_scenario(const Scenario& scenario) {
    return to_json(scenario).dump(2) + "\n";
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ScenarioError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ScenarioError("cannot write scenario file: " + path);
    out << serialize_scenario(scenario);
}

} // namespace dnr
