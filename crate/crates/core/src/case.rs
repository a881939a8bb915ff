//! Grid data model.
//!
//! Network quantities (branch impedances, bus and load powers) are per unit on
//! the system base. Machine parameters stay on each machine's own rating and
//! are rebased with [`Machine::system_params`] when the dynamic model needs
//! them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::machine::MachineParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchId(pub String);

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BranchId {
    fn from(s: &str) -> Self {
        BranchId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineId(pub String);

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MachineId {
    fn from(s: &str) -> Self {
        MachineId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (pu), meaningful for slack and PV buses.
    pub v_setpoint: f64,
    /// Scheduled active injection (pu, system base). For a PV bus this is the
    /// machine's dispatch.
    pub p_set: f64,
    pub q_set: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, split evenly between both ends.
    pub b_shunt: f64,
    /// Off-nominal ratio on the from side.
    pub tap_ratio: f64,
    pub rating_mva: f64,
    /// Original circuits folded into this branch by [`Case::normalize`].
    /// Empty for a branch that was never merged.
    pub circuits: Vec<BranchId>,
}

impl Branch {
    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(self.r, self.x).inv()
    }

    /// Identifiers of the physical circuits this branch stands for.
    pub fn original_circuits(&self) -> Vec<BranchId> {
        if self.circuits.is_empty() {
            alloc::vec![self.id.clone()]
        } else {
            self.circuits.clone()
        }
    }

    /// The π-model 2×2 admittance block `[[y_ff, y_ft], [y_tf, y_tt]]`.
    pub fn pi_admittances(&self) -> [Complex64; 4] {
        let y = self.series_admittance();
        let half_b = Complex64::new(0.0, self.b_shunt / 2.0);
        let t = self.tap_ratio;
        [(y + half_b) / (t * t), -y / t, -y / t, y + half_b]
    }

    pub fn other_end(&self, bus: BusId) -> BusId {
        if bus == self.from_bus {
            self.to_bus
        } else {
            self.from_bus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exciter {
    /// Voltage sensor time constant (s).
    pub tr: f64,
    /// Static exciter gain (pu).
    pub ka: f64,
}

/// Synchronous machine, parameters on its own rating.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub id: MachineId,
    pub bus: BusId,
    pub rating_mva: f64,
    pub h: f64,
    pub d: f64,
    pub ra: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd_p: f64,
    pub xq_p: f64,
    pub xd_pp: f64,
    pub xq_pp: f64,
    pub xl: f64,
    pub td0_p: f64,
    pub td0_pp: f64,
    pub tq0_p: f64,
    pub tq0_pp: f64,
    pub exciter: Exciter,
    /// Original units aggregated into this machine. Empty when not merged.
    pub units: Vec<MachineId>,
}

impl Machine {
    /// Parameters rebased onto the system MVA base.
    pub fn system_params(&self, system_base_mva: f64) -> MachineParams {
        let z = system_base_mva / self.rating_mva;
        let s = self.rating_mva / system_base_mva;
        MachineParams {
            h: self.h * s,
            d: self.d * s,
            ra: self.ra * z,
            xd: self.xd * z,
            xq: self.xq * z,
            xd_p: self.xd_p * z,
            xq_p: self.xq_p * z,
            xd_pp: self.xd_pp * z,
            xq_pp: self.xq_pp * z,
            xl: self.xl * z,
            td0_p: self.td0_p,
            td0_pp: self.td0_pp,
            tq0_p: self.tq0_p,
            tq0_pp: self.tq0_pp,
            tr: self.exciter.tr,
            ka: self.exciter.ka,
        }
    }

    /// Inverse of [`Machine::system_params`].
    pub fn from_system_params(
        id: MachineId,
        bus: BusId,
        rating_mva: f64,
        p: &MachineParams,
        system_base_mva: f64,
    ) -> Machine {
        let z = rating_mva / system_base_mva;
        let s = system_base_mva / rating_mva;
        Machine {
            id,
            bus,
            rating_mva,
            h: p.h * s,
            d: p.d * s,
            ra: p.ra * z,
            xd: p.xd * z,
            xq: p.xq * z,
            xd_p: p.xd_p * z,
            xq_p: p.xq_p * z,
            xd_pp: p.xd_pp * z,
            xq_pp: p.xq_pp * z,
            xl: p.xl * z,
            td0_p: p.td0_p,
            td0_pp: p.td0_pp,
            tq0_p: p.tq0_p,
            tq0_pp: p.tq0_pp,
            exciter: Exciter { tr: p.tr, ka: p.ka },
            units: Vec::new(),
        }
    }

    pub fn original_units(&self) -> Vec<MachineId> {
        if self.units.is_empty() {
            alloc::vec![self.id.clone()]
        } else {
            self.units.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadModel {
    ConstantImpedance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub bus: BusId,
    /// Demand at the solved voltage (pu, system base).
    pub p: f64,
    pub q: f64,
    pub model: LoadModel,
}

/// Static constant-power injection, e.g. an HVDC converter station held at a
/// fixed P/Q setpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub label: String,
    pub bus: BusId,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub system_base_mva: f64,
    pub frequency_hz: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub machines: Vec<Machine>,
    pub loads: Vec<Load>,
    pub injections: Vec<Injection>,
}

/// Series impedance and charging per kilometre (pu/km, system base).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerKm {
    pub r: f64,
    pub x: f64,
    pub b_shunt: f64,
}

/// Expands per-kilometre line parameters to `(r, x, b_shunt)` for a line of
/// the given length.
pub fn branch_km_expand(length_km: f64, per_km: PerKm) -> Result<(f64, f64, f64)> {
    if !(length_km > 0.0) {
        return Err(Error::NonPositiveLength(length_km));
    }
    Ok((per_km.r * length_km, per_km.x * length_km, per_km.b_shunt * length_km))
}

/// Converts an impedance from one MVA base to another (same voltage base).
pub fn rebase_impedance(z: f64, from_mva: f64, to_mva: f64) -> f64 {
    z * to_mva / from_mva
}

/// Converts an admittance from one MVA base to another (same voltage base).
pub fn rebase_admittance(y: f64, from_mva: f64, to_mva: f64) -> f64 {
    y * from_mva / to_mva
}

fn schema(path: String, message: &str) -> Error {
    Error::Schema { path, message: message.to_string() }
}

impl Case {
    pub fn bus_index(&self) -> BTreeMap<BusId, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch(&self, id: &BranchId) -> Option<&Branch> {
        self.branches.iter().find(|b| &b.id == id)
    }

    pub fn machine_at(&self, bus: BusId) -> Option<&Machine> {
        self.machines.iter().find(|m| m.bus == bus)
    }

    /// Net scheduled injection per bus (`p_set + injections − loads`), in bus
    /// order.
    pub fn scheduled_injections(&self) -> Vec<Complex64> {
        let index = self.bus_index();
        let mut s: Vec<Complex64> = self.buses.iter().map(|b| Complex64::new(b.p_set, b.q_set)).collect();
        for load in &self.loads {
            s[index[&load.bus]] -= Complex64::new(load.p, load.q);
        }
        for inj in &self.injections {
            s[index[&inj.bus]] += Complex64::new(inj.p, inj.q);
        }
        s
    }

    /// Checks every structural and parameter invariant of the model.
    pub fn validate(&self) -> Result<()> {
        if !(self.system_base_mva > 0.0) {
            return Err(Error::NonPositiveBase { path: "system.base_mva".into() });
        }
        if !(self.frequency_hz > 0.0) {
            return Err(Error::NonPositiveBase { path: "system.frequency_hz".into() });
        }
        if self.buses.is_empty() {
            return Err(schema("buses".into(), "at least one bus is required"));
        }
        let mut seen = BTreeMap::new();
        for (i, bus) in self.buses.iter().enumerate() {
            if seen.insert(bus.id, i).is_some() {
                return Err(Error::DuplicateId { path: format!("buses[{i}].id"), id: bus.id.to_string() });
            }
            if matches!(bus.kind, BusKind::Slack | BusKind::Pv) && !(bus.v_setpoint > 0.5 && bus.v_setpoint < 1.5) {
                return Err(schema(format!("buses[{i}].v_setpoint"), "must lie in (0.5, 1.5) for slack and PV buses"));
            }
            if !bus.p_set.is_finite() || !bus.q_set.is_finite() {
                return Err(schema(format!("buses[{i}]"), "non-finite scheduled injection"));
            }
        }
        let check_bus = |path: String, id: BusId| -> Result<()> {
            if seen.contains_key(&id) {
                Ok(())
            } else {
                Err(Error::DanglingReference { path, id: id.to_string() })
            }
        };

        let mut branch_ids = BTreeMap::new();
        for (i, br) in self.branches.iter().enumerate() {
            if branch_ids.insert(br.id.clone(), i).is_some() {
                return Err(Error::DuplicateId { path: format!("branches[{i}].id"), id: br.id.to_string() });
            }
            check_bus(format!("branches[{i}].from_bus"), br.from_bus)?;
            check_bus(format!("branches[{i}].to_bus"), br.to_bus)?;
            if br.from_bus == br.to_bus {
                return Err(schema(format!("branches[{i}].to_bus"), "branch must join two distinct buses"));
            }
            if br.x == 0.0 || !br.x.is_finite() || !br.r.is_finite() || !br.b_shunt.is_finite() {
                return Err(schema(format!("branches[{i}].x"), "series reactance must be finite and non-zero"));
            }
            if !(br.tap_ratio > 0.0) {
                return Err(schema(format!("branches[{i}].tap_ratio"), "must be positive"));
            }
            if !(br.rating_mva >= 0.0) {
                return Err(schema(format!("branches[{i}].rating_mva"), "must be non-negative"));
            }
        }

        let mut machine_ids = BTreeMap::new();
        for (i, m) in self.machines.iter().enumerate() {
            if machine_ids.insert(m.id.clone(), i).is_some() {
                return Err(Error::DuplicateId { path: format!("machines[{i}].id"), id: m.id.to_string() });
            }
            check_bus(format!("machines[{i}].bus"), m.bus)?;
            let bus = &self.buses[seen[&m.bus]];
            if bus.kind == BusKind::Pq {
                return Err(schema(format!("machines[{i}].bus"), "machine bus must be slack or PV"));
            }
            if !(m.rating_mva > 0.0) {
                return Err(Error::NonPositiveBase { path: format!("machines[{i}].rating_mva") });
            }
            validate_machine_params(m, i)?;
        }
        for (i, load) in self.loads.iter().enumerate() {
            check_bus(format!("loads[{i}].bus"), load.bus)?;
            if !load.p.is_finite() || !load.q.is_finite() {
                return Err(schema(format!("loads[{i}]"), "non-finite demand"));
            }
        }
        for (i, inj) in self.injections.iter().enumerate() {
            check_bus(format!("injections[{i}].bus"), inj.bus)?;
        }
        Ok(())
    }

    /// Merges parallel circuits between the same pair of buses and machines
    /// sharing a bus.
    ///
    /// Parallel branches combine their series admittances and add charging and
    /// ratings; they are merged only when their off-nominal ratios agree.
    /// Machines on one bus are combined on the system base: reactances in
    /// parallel, inertia and damping summed, time constants and exciter
    /// parameters rating-weighted. The original identifiers are kept in
    /// `circuits` / `units`.
    pub fn normalize(&self) -> Case {
        let mut out = self.clone();
        out.branches = merge_parallel_branches(&self.branches);
        out.machines = merge_machines(&self.machines, self.system_base_mva);
        out
    }
}

fn validate_machine_params(m: &Machine, i: usize) -> Result<()> {
    let path = |f: &str| format!("machines[{i}].{f}");
    let chain_d = m.xd > m.xd_p && m.xd_p > m.xd_pp && m.xd_pp > m.xl && m.xl > 0.0;
    if !chain_d {
        return Err(schema(path("Xd"), "requires Xd > Xd_p > Xd_pp > Xl > 0"));
    }
    let chain_q = m.xq > m.xq_p && m.xq_p > m.xq_pp && m.xq_pp > m.xl;
    if !chain_q {
        return Err(schema(path("Xq"), "requires Xq > Xq_p > Xq_pp > Xl"));
    }
    for (name, v) in [("Td0_p", m.td0_p), ("Td0_pp", m.td0_pp), ("Tq0_p", m.tq0_p), ("Tq0_pp", m.tq0_pp), ("H", m.h)] {
        if !(v > 0.0) {
            return Err(schema(path(name), "must be positive"));
        }
    }
    if !(m.ra >= 0.0) || !(m.d >= 0.0) {
        return Err(schema(path("Ra"), "Ra and D must be non-negative"));
    }
    if !(m.exciter.tr > 0.0) {
        return Err(schema(path("exciter.Tr"), "must be positive"));
    }
    if !(m.exciter.ka > 0.0) {
        return Err(schema(path("exciter.Ka"), "must be positive"));
    }
    Ok(())
}

fn unordered(a: BusId, b: BusId) -> (BusId, BusId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn merge_parallel_branches(branches: &[Branch]) -> Vec<Branch> {
    // Group by unordered bus pair and tap ratio, keeping first-appearance order.
    let mut groups: Vec<Vec<&Branch>> = Vec::new();
    let mut key_to_group: BTreeMap<(BusId, BusId), Vec<usize>> = BTreeMap::new();
    for br in branches {
        let key = unordered(br.from_bus, br.to_bus);
        let candidates = key_to_group.entry(key).or_default();
        let compatible = candidates.iter().copied().find(|&g| {
            let first = groups[g][0];
            // A non-unit tap is orientation dependent.
            first.tap_ratio == br.tap_ratio && (br.tap_ratio == 1.0 || first.from_bus == br.from_bus)
        });
        match compatible {
            Some(g) => groups[g].push(br),
            None => {
                candidates.push(groups.len());
                groups.push(alloc::vec![br]);
            }
        }
    }
    groups
        .into_iter()
        .map(|group| {
            if group.len() == 1 {
                return group[0].clone();
            }
            let first = group[0];
            let y: Complex64 = group.iter().map(|b| b.series_admittance()).sum();
            let z = y.inv();
            let circuits = group.iter().flat_map(|b| b.original_circuits()).collect();
            Branch {
                id: first.id.clone(),
                from_bus: first.from_bus,
                to_bus: first.to_bus,
                r: z.re,
                x: z.im,
                b_shunt: group.iter().map(|b| b.b_shunt).sum(),
                tap_ratio: first.tap_ratio,
                rating_mva: group.iter().map(|b| b.rating_mva).sum(),
                circuits,
            }
        })
        .collect()
}

fn merge_machines(machines: &[Machine], sbase: f64) -> Vec<Machine> {
    let mut order: Vec<BusId> = Vec::new();
    let mut by_bus: BTreeMap<BusId, Vec<&Machine>> = BTreeMap::new();
    for m in machines {
        let entry = by_bus.entry(m.bus).or_default();
        if entry.is_empty() {
            order.push(m.bus);
        }
        entry.push(m);
    }
    order
        .into_iter()
        .map(|bus| {
            let group = &by_bus[&bus];
            if group.len() == 1 {
                return group[0].clone();
            }
            let params: Vec<MachineParams> = group.iter().map(|m| m.system_params(sbase)).collect();
            let rating: f64 = group.iter().map(|m| m.rating_mva).sum();
            let weights: Vec<f64> = group.iter().map(|m| m.rating_mva / rating).collect();
            let parallel =
                |f: fn(&MachineParams) -> f64| -> f64 { 1.0 / params.iter().map(|p| 1.0 / f(p)).sum::<f64>() };
            let weighted =
                |f: fn(&MachineParams) -> f64| -> f64 { params.iter().zip(&weights).map(|(p, w)| f(p) * w).sum() };
            let ra = if params.iter().all(|p| p.ra > 0.0) { parallel(|p| p.ra) } else { 0.0 };
            let merged = MachineParams {
                h: params.iter().map(|p| p.h).sum(),
                d: params.iter().map(|p| p.d).sum(),
                ra,
                xd: parallel(|p| p.xd),
                xq: parallel(|p| p.xq),
                xd_p: parallel(|p| p.xd_p),
                xq_p: parallel(|p| p.xq_p),
                xd_pp: parallel(|p| p.xd_pp),
                xq_pp: parallel(|p| p.xq_pp),
                xl: parallel(|p| p.xl),
                td0_p: weighted(|p| p.td0_p),
                td0_pp: weighted(|p| p.td0_pp),
                tq0_p: weighted(|p| p.tq0_p),
                tq0_pp: weighted(|p| p.tq0_pp),
                tr: weighted(|p| p.tr),
                ka: weighted(|p| p.ka),
            };
            let mut m = Machine::from_system_params(group[0].id.clone(), bus, rating, &merged, sbase);
            m.units = group.iter().flat_map(|m| m.original_units()).collect();
            m
        })
        .collect()
}
