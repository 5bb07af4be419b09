#!/usr/bin/env python3
"""Generates the bundled scenario files in data/.

The 37-node feeder is a balanced positive-sequence reduction of the published
37-node test feeder: per-mile line constants below are the phase-averaged
series impedances of underground cable configurations 721-724, and each branch
gets one of those configurations plus a length.  Everything is expressed per
unit on S_base = 4.8 MVA, V_base = 4.8 kV (Z_base = 4.8 ohm).
"""

import json
import os

S_BASE_MVA = 4.8
V_BASE_KV = 4.8
Z_BASE_OHM = V_BASE_KV**2 / S_BASE_MVA
F_NOM = 60.0

# Phase-averaged positive-sequence series impedance, ohm per mile.
CONFIGS = {
    721: complex(0.2926, 0.1973),
    722: complex(0.4751, 0.2973),
    723: complex(1.2936, 0.6713),
    724: complex(2.0952, 0.7758),
}


def branch_y(config, length_miles):
    z_pu = CONFIGS[config] * length_miles / Z_BASE_OHM
    y = 1.0 / z_pu
    return {"g": round(y.real, 10), "b": round(y.imag, 10)}


def line(frm, to, config, length):
    return {"from": frm, "to": to, **branch_y(config, length)}


def switch(sid, frm, to, closed, config=723, length=0.20):
    return {"id": sid, "from": frm, "to": to, **branch_y(config, length),
            "closed": closed}


def generator(node, rating, h, reference=False, k_pf=0.5, k_if=0.2, gov_leak=1.0,
              v_ref=1.0):
    return {
        "node": node, "rating_mva": rating, "h": h, "d": 3.0, "droop": 0.05,
        "t_t": 0.4, "t_v": 0.1, "k_pf": k_pf, "k_if": k_if, "gov_leak": gov_leak,
        "k_pv": 30.0, "k_iv": 25.0, "t_e": 0.05,
        "x_d": 1.05, "x_dp": 0.25, "x_q": 0.62, "t_d0p": 5.5,
        "v_ref": v_ref, "reference": reference,
    }


# Per-unit AVR setpoints matched to the dispatched voltage profile (computed
# by balancing steady-state reactive sharing across the initial topology).
VREF = {1: 1.0, 10: 0.961187, 16: 0.957168, 19: 0.948138, 23: 0.959737}


def ieee37():
    nodes = list(range(1, 38))

    # Energized backbone 1..25; load areas LA1 = 26..31 and LA2 = 32..37 start dead.
    lines = [
        # main feeder, heavy cable
        line(1, 2, 721, 0.35), line(2, 3, 721, 0.30), line(3, 4, 721, 0.25),
        line(4, 5, 721, 0.25), line(5, 6, 722, 0.30), line(6, 7, 722, 0.25),
        line(7, 8, 722, 0.25), line(8, 9, 722, 0.30), line(9, 10, 722, 0.25),
        # first lateral (normally fed through SW2 at 4-11)
        line(11, 12, 722, 0.25), line(12, 13, 723, 0.20), line(13, 14, 723, 0.20),
        line(14, 15, 723, 0.20), line(15, 16, 722, 0.20),
        line(12, 17, 723, 0.25), line(17, 18, 723, 0.20), line(18, 19, 722, 0.20),
        # second lateral
        line(3, 20, 722, 0.30), line(20, 21, 722, 0.25), line(21, 22, 723, 0.25),
        line(22, 23, 722, 0.20), line(23, 24, 723, 0.25), line(24, 25, 723, 0.20),
        # load area 1 chain
        line(26, 27, 721, 0.15), line(27, 28, 721, 0.15), line(28, 29, 721, 0.15),
        line(29, 30, 721, 0.15), line(30, 31, 721, 0.15),
        # load area 2 chain
        line(32, 33, 721, 0.15), line(33, 34, 721, 0.15), line(34, 35, 721, 0.15),
        line(35, 36, 721, 0.15), line(36, 37, 721, 0.15),
    ]

    switches = [
        switch("SW1", 10, 16, False),
        switch("SW2", 4, 11, True),
        switch("SW3", 19, 25, False),
        switch("SW4", 7, 21, False),
        switch("SW5", 9, 26, False, 721, 0.10),
        switch("SW6", 24, 32, False, 721, 0.10),
    ]

    # 0.89 + j0.56 pu total demand spread equally over all non-slack nodes.
    p_each = 0.89 / 36
    q_each = 0.56 / 36
    loads = [{"node": n, "p": round(p_each, 10), "q": round(q_each, 10),
              "v_nom": 1.0, "zip_p": [0.5, 0.3, 0.2], "zip_q": [0.5, 0.3, 0.2]}
             for n in range(2, 38)]

    # AVR setpoints follow the scheduled voltage profile so the units do not
    # fight each other with circulating reactive power (see tools/tune note).
    generators = [
        generator(1, 2.60, 3.5, reference=True, k_pf=1.0, k_if=0.5, gov_leak=0.0,
                  v_ref=VREF[1]),
        generator(10, 0.65, 2.8, v_ref=VREF[10]),
        generator(16, 0.55, 2.6, v_ref=VREF[16]),
        generator(19, 0.50, 2.5, v_ref=VREF[19]),
        generator(23, 0.50, 2.5, v_ref=VREF[23]),
    ]

    schedule = {
        "t_end": 40.0,
        "events": [
            {"time": 1.0, "actions": [
                {"switch": "SW1", "op": "close"},
                {"switch": "SW3", "op": "close"},
                {"switch": "SW4", "op": "close"},
                {"switch": "SW2", "op": "open"},
            ]},
            {"time": 21.0, "actions": [
                {"switch": "SW5", "op": "close"},
                {"switch": "SW6", "op": "close"},
            ]},
        ],
    }

    return {
        "name": "ieee37-dnr",
        "system": {"s_base_mva": S_BASE_MVA, "v_base_kv": V_BASE_KV, "f_nom_hz": F_NOM},
        "nodes": nodes,
        "lines": lines,
        "switches": switches,
        "loads": loads,
        "generators": generators,
        "schedule": schedule,
        "solver": {"dt": 0.001, "mode": "sequential"},
    }


def smoke2():
    return {
        "name": "smoke2",
        "system": {"s_base_mva": 1.0, "v_base_kv": 4.8, "f_nom_hz": 60.0},
        "nodes": [1, 2],
        "lines": [line(1, 2, 722, 0.30)],
        "switches": [switch("S1", 1, 2, False, 722, 0.30)],
        "loads": [{"node": 2, "p": 0.4, "q": 0.15, "v_nom": 1.0,
                   "zip_p": [0.5, 0.3, 0.2], "zip_q": [0.5, 0.3, 0.2]}],
        "generators": [generator(1, 1.2, 2.0, reference=True,
                                 k_pf=1.0, k_if=0.5, gov_leak=0.0)],
        "schedule": {"t_end": 5.0, "events": [
            {"time": 0.5, "actions": [{"switch": "S1", "op": "close"}]}]},
        "solver": {"dt": 0.001, "mode": "sequential"},
    }


def degenerate_passive():
    # Node 3 hangs on a zero-admittance stub with no load: the network
    # sensitivity matrix loses rank there.  Exercises the singular-network
    # error path.
    return {
        "name": "degenerate-passive",
        "system": {"s_base_mva": 1.0, "v_base_kv": 4.8, "f_nom_hz": 60.0},
        "nodes": [1, 2, 3],
        "lines": [line(1, 2, 722, 0.30), {"from": 2, "to": 3, "g": 0.0, "b": 0.0}],
        "switches": [switch("S1", 1, 2, False, 722, 0.30)],
        "loads": [{"node": 2, "p": 0.3, "q": 0.1, "v_nom": 1.0,
                   "zip_p": [0.5, 0.3, 0.2], "zip_q": [0.5, 0.3, 0.2]}],
        "generators": [generator(1, 1.0, 2.0, reference=True,
                                 k_pf=1.0, k_if=0.5, gov_leak=0.0)],
        "schedule": {"t_end": 1.0, "events": [
            {"time": 0.5, "actions": [{"switch": "S1", "op": "close"}]}]},
        "solver": {"dt": 0.001, "mode": "sequential"},
    }


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    for builder in (ieee37, smoke2, degenerate_passive):
        sc = builder()
        path = os.path.join(out_dir, sc["name"] + ".json")
        with open(path, "w") as f:
            json.dump(sc, f, indent=2)
            f.write("\n")
        print("wrote", path)


if __name__ == "__main__":
    main()
