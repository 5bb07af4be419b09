#pragma once

#include "dnr/admittance.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dnr {

// ZIP load at nominal voltage v_nom: P(|V|) = p0 * (az*(|V|/vn)^2 + ai*(|V|/vn) + ap),
// same structure for Q with its own coefficient set.
struct ZipCoefficients {
    double z = 1.0;
    double i = 0.0;
    double p = 0.0;
};

struct ZipLoadParams {
    double p0 = 0.0; // pu, system base, consumption positive
    double q0 = 0.0;
    double v_nom = 1.0;
    ZipCoefficients zip_p;
    ZipCoefficients zip_q;
};

// Synchronous generator parameters.  Machine quantities are per unit on the
// machine's own MVA rating; rating_mva converts to the system base.
struct SgParams {
    double rating_mva = 1.0;
    double h = 3.0;      // inertia constant, s
    double d = 1.0;      // damping, pu torque / pu speed
    double droop = 0.05; // speed droop R
    double t_t = 0.4;    // turbine time constant, s
    double t_v = 0.1;    // valve time constant, s
    double k_pf = 0.0;   // governor PI gains on frequency error
    double k_if = 0.0;
    double gov_leak = 0.0; // leak rate of the frequency integrator, 1/s (0 = pure PI)
    double k_pv = 25.0;  // AVR PI gains on terminal-voltage error
    double k_iv = 20.0;
    double t_e = 0.08;   // exciter lag, s
    double x_d = 1.9;    // synchronous / transient reactances, machine base
    double x_dp = 0.3;
    double x_q = 1.8;
    double t_d0p = 6.0;  // d-axis transient open-circuit time constant, s
    double v_ref = 1.0;  // AVR setpoint, pu
    bool reference = false; // angle reference / slack unit
};

struct Line {
    int from = 0;
    int to = 0;
    AdmittanceBlock y;          // series admittance, pu
    AdmittanceBlock shunt_from; // optional shunt at each end
    AdmittanceBlock shunt_to;
};

struct Switch {
    std::string id;
    int from = 0;
    int to = 0;
    AdmittanceBlock y_closed;
    bool closed = false; // initial state
};

// Immutable network description.  Node ids are arbitrary ints; matrix rows are
// ordered by position in `nodes`.
struct Feeder {
    std::vector<int> nodes;
    std::vector<Line> lines;
    std::vector<Switch> switches;
    std::map<int, ZipLoadParams> loads;
    std::map<int, SgParams> generators;

    double s_base_mva = 1.0;
    double f_nom_hz = 60.0;

    [[nodiscard]] int node_count() const { return static_cast<int>(nodes.size()); }
    [[nodiscard]] int node_index(int id) const; // throws StructuralError on unknown id
    [[nodiscard]] bool has_node(int id) const;
    [[nodiscard]] const Switch& find_switch(const std::string& id) const;
    [[nodiscard]] int reference_gen_node() const;

    // Structural validation: unique node ids, endpoints exist, ZIP coefficient
    // sums, generator parameter ranges.  Throws StructuralError.
    void validate() const;
};

// switch id -> closed?
using SwitchStates = std::map<std::string, bool>;

[[nodiscard]] SwitchStates initial_switch_states(const Feeder& feeder);

enum class SwitchOp { Open, Close };

struct SwitchAction {
    std::string switch_id;
    SwitchOp op = SwitchOp::Close;
};

struct SwitchEvent {
    double time = 0.0; // s
    std::vector<SwitchAction> actions;
};

struct Schedule {
    std::vector<SwitchEvent> events; // strictly increasing times
    double t_end = 10.0;

    void validate(const Feeder& feeder) const; // also checks open/close consistency
};

// Applies an event to a state map, enforcing that close requires open and
// vice versa.  Throws StructuralError on violations.
[[nodiscard]] SwitchStates apply_event(const Feeder& feeder, const SwitchStates& states,
                                       const SwitchEvent& event);

} // namespace dnr
