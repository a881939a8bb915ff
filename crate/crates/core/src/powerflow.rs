//! Newton–Raphson AC power flow in polar coordinates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::case::{BranchId, BusId, BusKind, Case, MachineId};
use crate::error::{Error, Result};
use crate::graph::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchFlow {
    pub id: BranchId,
    /// Complex power leaving the from bus into the branch.
    pub s_from: Complex64,
    /// Complex power leaving the to bus into the branch.
    pub s_to: Complex64,
    pub i_from: Complex64,
    pub i_to: Complex64,
}

impl BranchFlow {
    pub fn losses(&self) -> Complex64 {
        self.s_from + self.s_to
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub bus_ids: Vec<BusId>,
    pub voltage: Vec<Complex64>,
    /// Net complex injection computed from the network at each bus.
    pub injection: Vec<Complex64>,
    pub branch_flows: Vec<BranchFlow>,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// ‖mismatch‖∞ before each Newton step, ending with the converged value.
    pub mismatch_history: Vec<f64>,
}

impl PowerFlowSolution {
    pub fn voltage_at(&self, bus: BusId) -> Option<Complex64> {
        self.bus_ids.iter().position(|&b| b == bus).map(|i| self.voltage[i])
    }

    /// Complex output of every machine: network injection at its bus plus
    /// local demand, minus any static injections sharing the bus.
    pub fn machine_outputs(&self, case: &Case) -> Vec<(MachineId, BusId, Complex64)> {
        let local = local_static_injection(case);
        let index = case.bus_index();
        case.machines
            .iter()
            .map(|m| {
                let i = index[&m.bus];
                (m.id.clone(), m.bus, self.injection[i] - local[i])
            })
            .collect()
    }
}

/// Constant-power injections and loads per bus (bus order), excluding each
/// bus's own schedule.
fn local_static_injection(case: &Case) -> Vec<Complex64> {
    let index = case.bus_index();
    let mut s = vec![Complex64::new(0.0, 0.0); case.buses.len()];
    for load in &case.loads {
        s[index[&load.bus]] -= Complex64::new(load.p, load.q);
    }
    for inj in &case.injections {
        s[index[&inj.bus]] += Complex64::new(inj.p, inj.q);
    }
    s
}

/// Bus admittance matrix of the branch network (bus order).
pub fn build_ybus(case: &Case) -> DMatrix<Complex64> {
    let index = case.bus_index();
    let n = case.buses.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in &case.branches {
        let (f, t) = (index[&br.from_bus], index[&br.to_bus]);
        let [yff, yft, ytf, ytt] = br.pi_admittances();
        y[(f, f)] += yff;
        y[(f, t)] += yft;
        y[(t, f)] += ytf;
        y[(t, t)] += ytt;
    }
    y
}

/// Sending- and receiving-end power and current of every branch.
pub fn branch_flows(case: &Case, voltage: &[Complex64]) -> Vec<BranchFlow> {
    let index = case.bus_index();
    case.branches
        .iter()
        .map(|br| {
            let (vf, vt) = (voltage[index[&br.from_bus]], voltage[index[&br.to_bus]]);
            let [yff, yft, ytf, ytt] = br.pi_admittances();
            let i_from = yff * vf + yft * vt;
            let i_to = ytf * vf + ytt * vt;
            BranchFlow { id: br.id.clone(), s_from: vf * i_from.conj(), s_to: vt * i_to.conj(), i_from, i_to }
        })
        .collect()
}

/// Islands of the case's branch graph as sorted bus-id lists.
pub fn islands(case: &Case) -> Vec<Vec<BusId>> {
    let topo = Topology::from_case(case);
    topo.components(&BTreeSet::new())
        .into_iter()
        .map(|c| {
            let mut ids: Vec<BusId> = c.into_iter().map(|i| topo.bus_ids[i]).collect();
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Slack bus per island: the machine bus with the largest rating, lowest bus
/// id on ties.
pub fn assign_slacks(case: &Case, islands: &[Vec<BusId>]) -> Result<Vec<BusId>> {
    islands
        .iter()
        .map(|island| {
            let members: BTreeSet<BusId> = island.iter().copied().collect();
            case.machines
                .iter()
                .filter(|m| members.contains(&m.bus))
                .fold(None::<(f64, BusId)>, |best, m| match best {
                    Some((r, b)) if r > m.rating_mva || (r == m.rating_mva && b < m.bus) => Some((r, b)),
                    _ => Some((m.rating_mva, m.bus)),
                })
                .map(|(_, b)| b)
                .ok_or_else(|| Error::UnservableIsland { buses: island.clone() })
        })
        .collect()
}

/// Re-types buses so every island has exactly the slack chosen by
/// [`assign_slacks`]; former slack buses become PV with their `p_set` kept.
pub fn reassign_slacks(case: &Case) -> Result<Case> {
    let isl = islands(case);
    let slacks: BTreeSet<BusId> = assign_slacks(case, &isl)?.into_iter().collect();
    let mut out = case.clone();
    for bus in &mut out.buses {
        if slacks.contains(&bus.id) {
            bus.kind = BusKind::Slack;
        } else if bus.kind == BusKind::Slack {
            bus.kind = BusKind::Pv;
        }
    }
    Ok(out)
}

fn check_island_slacks(case: &Case) -> Result<()> {
    for island in islands(case) {
        let count = island.iter().filter(|&&b| case.bus(b).map(|x| x.kind) == Some(BusKind::Slack)).count();
        if count != 1 {
            return Err(Error::IslandSlack { bus: island[0], count });
        }
    }
    Ok(())
}

/// Solves the power flow from a flat start (V = setpoint or 1, θ = 0).
pub fn solve_power_flow(case: &Case, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
    solve_power_flow_from(case, tol, max_iter, None)
}

/// Solves the power flow from `start` (bus order) or a flat start. Slack and
/// PV magnitudes are always reset to their setpoints.
pub fn solve_power_flow_from(
    case: &Case,
    tol: f64,
    max_iter: usize,
    start: Option<&[Complex64]>,
) -> Result<PowerFlowSolution> {
    check_island_slacks(case)?;
    let n = case.buses.len();
    let ybus = build_ybus(case);
    let s_spec = case.scheduled_injections();

    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    if let Some(v0) = start {
        for i in 0..n {
            vm[i] = v0[i].norm();
            va[i] = v0[i].arg();
        }
    }
    for (i, bus) in case.buses.iter().enumerate() {
        match bus.kind {
            BusKind::Slack => {
                vm[i] = bus.v_setpoint;
                va[i] = 0.0;
            }
            BusKind::Pv => vm[i] = bus.v_setpoint,
            BusKind::Pq => {}
        }
    }
    let pvpq: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusKind::Pq).collect();
    let (npvpq, npq) = (pvpq.len(), pq.len());

    let mut history = Vec::new();
    let mut iteration = 0;
    loop {
        let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
        let vv = DVector::from_vec(v.clone());
        let ibus = &ybus * &vv;
        let s_calc: Vec<Complex64> = (0..n).map(|i| v[i] * ibus[i].conj()).collect();
        let mis: Vec<Complex64> = (0..n).map(|i| s_calc[i] - s_spec[i]).collect();
        let mut f = DVector::zeros(npvpq + npq);
        for (r, &i) in pvpq.iter().enumerate() {
            f[r] = mis[i].re;
        }
        for (r, &i) in pq.iter().enumerate() {
            f[npvpq + r] = mis[i].im;
        }
        let (norm, worst) = worst_mismatch(&f, &pvpq, &pq);
        let worst_bus = worst.map(|i| case.buses[i].id).unwrap_or(case.buses[0].id);
        history.push(norm);
        if norm <= tol {
            return Ok(PowerFlowSolution {
                bus_ids: case.buses.iter().map(|b| b.id).collect(),
                branch_flows: branch_flows(case, &v),
                voltage: v,
                injection: s_calc,
                iterations: iteration,
                max_mismatch: norm,
                mismatch_history: history,
            });
        }
        if iteration >= max_iter || !norm.is_finite() {
            return Err(Error::Divergence { iterations: iteration, mismatch: norm, worst_bus });
        }

        let (ds_dva, ds_dvm) = ds_bus_dv(&ybus, &vv, &ibus);
        let dim = npvpq + npq;
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for (r, &i) in pvpq.iter().enumerate() {
            for (c, &j) in pvpq.iter().enumerate() {
                jac[(r, c)] = ds_dva[(i, j)].re;
            }
            for (c, &j) in pq.iter().enumerate() {
                jac[(r, npvpq + c)] = ds_dvm[(i, j)].re;
            }
        }
        for (r, &i) in pq.iter().enumerate() {
            for (c, &j) in pvpq.iter().enumerate() {
                jac[(npvpq + r, c)] = ds_dva[(i, j)].im;
            }
            for (c, &j) in pq.iter().enumerate() {
                jac[(npvpq + r, npvpq + c)] = ds_dvm[(i, j)].im;
            }
        }
        iteration += 1;
        let dx = jac
            .lu()
            .solve(&(-f))
            .filter(|d| d.iter().all(|x| x.is_finite()))
            .ok_or(Error::SingularJacobian { iteration, worst_bus })?;
        for (r, &i) in pvpq.iter().enumerate() {
            va[i] += dx[r];
        }
        for (r, &i) in pq.iter().enumerate() {
            vm[i] += dx[npvpq + r];
        }
    }
}

fn worst_mismatch(f: &DVector<f64>, pvpq: &[usize], pq: &[usize]) -> (f64, Option<usize>) {
    let mut best = (0.0, None);
    for (r, x) in f.iter().enumerate() {
        let a = if x.is_nan() { f64::INFINITY } else { x.abs() };
        if best.1.is_none() || a > best.0 {
            let bus = if r < pvpq.len() { pvpq[r] } else { pq[r - pvpq.len()] };
            best = (a, Some(bus));
        }
    }
    best
}

/// Partial derivatives of the complex bus injections with respect to voltage
/// angle and magnitude.
fn ds_bus_dv(
    ybus: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
    ibus: &DVector<Complex64>,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = v.len();
    let j = Complex64::new(0.0, 1.0);
    let vnorm: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
    let mut dva = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut dvm = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for r in 0..n {
        for c in 0..n {
            let y = ybus[(r, c)];
            // dS/dVa = j·diag(V)·conj(diag(I) − Y·diag(V))
            let mut a = -y * v[c];
            if r == c {
                a += ibus[r];
            }
            dva[(r, c)] = j * v[r] * a.conj();
            // dS/dVm = diag(V)·conj(Y·diag(V/|V|)) + conj(diag(I))·diag(V/|V|)
            let mut m = v[r] * (y * vnorm[c]).conj();
            if r == c {
                m += ibus[r].conj() * vnorm[r];
            }
            dvm[(r, c)] = m;
        }
    }
    (dva, dvm)
}

/// Machine complex output keyed by bus.
pub fn machine_output_by_bus(case: &Case, sol: &PowerFlowSolution) -> BTreeMap<BusId, Complex64> {
    sol.machine_outputs(case).into_iter().map(|(_, b, s)| (b, s)).collect()
}
