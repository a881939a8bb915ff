//! The two six-machine test grids built directly in Rust, so the core tests
//! do not depend on the JSON reader.

#![allow(dead_code)]

use gridseg_core::case::{Branch, BranchId, Bus, BusId, BusKind, Case, Exciter, Load, LoadModel, Machine, MachineId};

pub fn machine(k: u32) -> Machine {
    Machine {
        id: MachineId(format!("G{k}")),
        bus: BusId(k),
        rating_mva: 200.0,
        h: 6.5,
        d: 0.0,
        ra: 0.0025,
        xd: 1.8,
        xq: 1.7,
        xd_p: 0.3,
        xq_p: 0.55,
        xd_pp: 0.25,
        xq_pp: 0.25,
        xl: 0.2,
        td0_p: 8.0,
        td0_pp: 0.03,
        tq0_p: 0.4,
        tq0_pp: 0.05,
        exciter: Exciter { tr: 0.01, ka: 200.0 },
        units: vec![],
    }
}

pub fn branch(a: u32, b: u32, r: f64, x: f64, bsh: f64, rating: f64) -> Branch {
    Branch {
        id: BranchId(format!("{a}-{b}")),
        from_bus: BusId(a),
        to_bus: BusId(b),
        r,
        x,
        b_shunt: bsh,
        tap_ratio: 1.0,
        rating_mva: rating,
        circuits: vec![],
    }
}

/// Test system 1 with machine dispatch `p` (pu, machines 2..=6) and an
/// optional constant-impedance load at bus 35.
pub fn six_machine(p: [f64; 5], load35: f64) -> Case {
    let mut buses = Vec::new();
    for k in 1..=6u32 {
        buses.push(Bus {
            id: BusId(k),
            kind: if k == 1 { BusKind::Slack } else { BusKind::Pv },
            v_setpoint: 1.0,
            p_set: if k == 1 { 0.0 } else { p[k as usize - 2] },
            q_set: 0.0,
        });
    }
    for id in [10, 20, 30, 35, 40, 50, 60] {
        buses.push(Bus { id: BusId(id), kind: BusKind::Pq, v_setpoint: 1.0, p_set: 0.0, q_set: 0.0 });
    }
    let mut branches: Vec<Branch> = (1..=6).map(|k| branch(k, 10 * k, 0.0, 0.075, 0.0, 200.0)).collect();
    for (a, b, km) in [(10, 20, 25.0), (20, 30, 25.0), (30, 35, 50.0), (35, 40, 50.0), (40, 50, 25.0), (50, 60, 25.0)] {
        branches.push(branch(a, b, 1e-4 * km, 1e-3 * km, 1.75e-3 * km, 500.0));
    }
    let loads = if load35 > 0.0 {
        vec![Load { bus: BusId(35), p: load35, q: 0.0, model: LoadModel::ConstantImpedance }]
    } else {
        vec![]
    };
    Case {
        system_base_mva: 100.0,
        frequency_hz: 50.0,
        buses,
        branches,
        machines: (1..=6).map(machine).collect(),
        loads,
        injections: vec![],
    }
}

pub fn ts1() -> Case {
    six_machine([1.0, 1.0, -1.0, -1.0, -1.0], 0.0)
}

pub fn ts2() -> Case {
    six_machine([1.0; 5], 6.0)
}
