//! Small-signal state-space model of the multi-machine system.
//!
//! The nonlinear model is a DAE `ẋ = f(x, y)`, `0 = g(x, y)` with
//!
//! * `x`: machine states, globally ordered `[all δ, all ω, then per machine
//!   (E'q, E'd, ψ1d, ψ2q, Vm)]`;
//! * `y`: `[Vr, Vi]` per bus followed by `[Id, Iq]` per machine;
//! * `g`: the real and imaginary network current balance at every bus,
//!   followed by the two stator equations of every machine.
//!
//! Loads are constant admittances fixed at the solved voltage. Static
//! injections (HVDC stations, scheduled PQ buses without a machine) keep
//! constant power. Eliminating `y` gives `A = f_x − f_y·g_y⁻¹·g_x`, and the
//! outputs follow from `Δy = −g_y⁻¹·g_x·Δx`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// Needed for float math without std; redundant when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::case::{BranchId, BusId, Case, MachineId};
use crate::error::{Error, Result};
use crate::linalg;
use crate::machine::{self, LocalState, MachineParams, Setpoints, STATES_PER_MACHINE};
use crate::powerflow::{build_ybus, PowerFlowSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Delta,
    Omega,
    Eqp,
    Edp,
    Psi1d,
    Psi2q,
    Vm,
}

impl StateKind {
    const LOCAL: [StateKind; 7] = [
        StateKind::Delta,
        StateKind::Omega,
        StateKind::Eqp,
        StateKind::Edp,
        StateKind::Psi1d,
        StateKind::Psi2q,
        StateKind::Vm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StateKind::Delta => "delta",
            StateKind::Omega => "omega",
            StateKind::Eqp => "eq_p",
            StateKind::Edp => "ed_p",
            StateKind::Psi1d => "psi1d",
            StateKind::Psi2q => "psi2q",
            StateKind::Vm => "vm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateLabel {
    pub kind: StateKind,
    pub machine: MachineId,
    pub bus: BusId,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.kind.name(), self.machine)
    }
}

/// Global state index of local state `local` of machine `k` among `ng`.
pub fn state_index(ng: usize, k: usize, local: usize) -> usize {
    match local {
        machine::DELTA => k,
        machine::OMEGA => ng + k,
        s => 2 * ng + (STATES_PER_MACHINE - 2) * k + (s - 2),
    }
}

/// Linearized model with output sensitivities.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub states: Vec<StateLabel>,
    /// `∂|V|/∂x`, one row per bus.
    pub c_v: DMatrix<f64>,
    /// `∂θ/∂x` (rad), one row per bus.
    pub c_theta: DMatrix<f64>,
    /// Bus frequency deviation in pu of nominal, `C_θ·A / (2π f0)`.
    pub c_f: DMatrix<f64>,
    /// `∂|I|/∂x` of the sending-end branch current, one row per branch.
    pub c_i: DMatrix<f64>,
    pub bus_ids: Vec<BusId>,
    pub branch_ids: Vec<BranchId>,
    /// Branches whose current row uses the zero-flow regularization.
    pub regularized_branches: Vec<BranchId>,
    pub machine_ids: Vec<MachineId>,
    pub machine_buses: Vec<BusId>,
    pub frequency_hz: f64,
    /// Operating point `x0`.
    pub x0: DVector<f64>,
}

impl StateSpaceModel {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_machines(&self) -> usize {
        self.machine_ids.len()
    }

    pub fn omega_index(&self, k: usize) -> usize {
        state_index(self.n_machines(), k, machine::OMEGA)
    }

    pub fn delta_index(&self, k: usize) -> usize {
        state_index(self.n_machines(), k, machine::DELTA)
    }
}

/// The nonlinear DAE about a power-flow solution.
#[derive(Debug, Clone)]
pub struct DaeModel {
    params: Vec<MachineParams>,
    setpoints: Vec<Setpoints>,
    machine_bus: Vec<usize>,
    /// Branch network plus constant-admittance loads.
    ybus: DMatrix<Complex64>,
    /// Constant-power injection per bus.
    s_const: Vec<Complex64>,
    omega_s: f64,
    branch_ends: Vec<(usize, usize)>,
    branch_pi: Vec<[Complex64; 4]>,
    pub x0: DVector<f64>,
    pub y0: DVector<f64>,
}

impl DaeModel {
    pub fn new(case: &Case, sol: &PowerFlowSolution) -> Result<DaeModel> {
        let index = case.bus_index();
        let n = case.buses.len();
        let ng = case.machines.len();
        let mut machine_bus = Vec::with_capacity(ng);
        let mut seen = vec![false; n];
        for m in &case.machines {
            let i = index[&m.bus];
            if seen[i] {
                return Err(Error::MultipleMachinesOnBus(m.bus));
            }
            seen[i] = true;
            machine_bus.push(i);
        }

        let mut ybus = build_ybus(case);
        for load in &case.loads {
            let i = index[&load.bus];
            let vm2 = sol.voltage[i].norm_sqr();
            ybus[(i, i)] += Complex64::new(load.p, -load.q) / vm2;
        }
        let mut s_const = vec![Complex64::new(0.0, 0.0); n];
        for inj in &case.injections {
            s_const[index[&inj.bus]] += Complex64::new(inj.p, inj.q);
        }
        // Non-machine buses keep whatever the power flow gave them, less
        // their loads (already in Y) and explicit injections (added above).
        for i in 0..n {
            if !seen[i] {
                let load: Complex64 =
                    case.loads.iter().filter(|l| index[&l.bus] == i).map(|l| Complex64::new(l.p, l.q)).sum();
                let explicit: Complex64 =
                    case.injections.iter().filter(|x| index[&x.bus] == i).map(|x| Complex64::new(x.p, x.q)).sum();
                s_const[i] += sol.injection[i] + load - explicit;
            }
        }

        let outputs = sol.machine_outputs(case);
        let params: Vec<MachineParams> = case.machines.iter().map(|m| m.system_params(case.system_base_mva)).collect();
        let mut setpoints = Vec::with_capacity(ng);
        let mut x0 = DVector::zeros(STATES_PER_MACHINE * ng);
        let mut y0 = DVector::zeros(2 * n + 2 * ng);
        for i in 0..n {
            y0[2 * i] = sol.voltage[i].re;
            y0[2 * i + 1] = sol.voltage[i].im;
        }
        for (k, p) in params.iter().enumerate() {
            let (x, id, iq, sp) = p.initialize(sol.voltage[machine_bus[k]], outputs[k].2);
            for (s, v) in x.iter().enumerate() {
                x0[state_index(ng, k, s)] = *v;
            }
            y0[2 * n + 2 * k] = id;
            y0[2 * n + 2 * k + 1] = iq;
            setpoints.push(sp);
        }
        Ok(DaeModel {
            params,
            setpoints,
            machine_bus,
            ybus,
            s_const,
            omega_s: 2.0 * PI * case.frequency_hz,
            branch_ends: case.branches.iter().map(|b| (index[&b.from_bus], index[&b.to_bus])).collect(),
            branch_pi: case.branches.iter().map(|b| b.pi_admittances()).collect(),
            x0,
            y0,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.ybus.nrows()
    }

    pub fn n_machines(&self) -> usize {
        self.params.len()
    }

    fn local(&self, x: &DVector<f64>, k: usize) -> LocalState {
        let ng = self.n_machines();
        core::array::from_fn(|s| x[state_index(ng, k, s)])
    }

    fn bus_voltage(&self, y: &DVector<f64>, i: usize) -> Complex64 {
        Complex64::new(y[2 * i], y[2 * i + 1])
    }

    fn currents(&self, y: &DVector<f64>, k: usize) -> (f64, f64) {
        let n = self.n_bus();
        (y[2 * n + 2 * k], y[2 * n + 2 * k + 1])
    }

    pub fn bus_voltages(&self, y: &DVector<f64>) -> Vec<Complex64> {
        (0..self.n_bus()).map(|i| self.bus_voltage(y, i)).collect()
    }

    /// Sending-end π-model current of every branch.
    pub fn branch_currents(&self, y: &DVector<f64>) -> Vec<Complex64> {
        self.branch_ends
            .iter()
            .zip(&self.branch_pi)
            .map(|(&(f, t), pi)| pi[0] * self.bus_voltage(y, f) + pi[1] * self.bus_voltage(y, t))
            .collect()
    }

    pub fn f(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let ng = self.n_machines();
        let mut out = DVector::zeros(x.len());
        for k in 0..ng {
            let xl = self.local(x, k);
            let (id, iq) = self.currents(y, k);
            let vmag = self.bus_voltage(y, self.machine_bus[k]).norm();
            let d = self.params[k].derivatives(&self.setpoints[k], &xl, id, iq, vmag, self.omega_s);
            for s in 0..STATES_PER_MACHINE {
                out[state_index(ng, k, s)] = d[s];
            }
        }
        out
    }

    pub fn g(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n_bus();
        let ng = self.n_machines();
        let v = DVector::from_vec(self.bus_voltages(y));
        let yv = &self.ybus * &v;
        let mut out = DVector::zeros(2 * n + 2 * ng);
        for i in 0..n {
            let inj = (self.s_const[i] / v[i]).conj();
            let bal = inj - yv[i];
            out[2 * i] = bal.re;
            out[2 * i + 1] = bal.im;
        }
        for k in 0..ng {
            let xl = self.local(x, k);
            let (id, iq) = self.currents(y, k);
            let b = self.machine_bus[k];
            let c = machine::injected_current(xl[machine::DELTA], id, iq);
            out[2 * b] += c.re;
            out[2 * b + 1] += c.im;
            let st = self.params[k].stator_residual(&xl, id, iq, v[b]);
            out[2 * n + 2 * k] = st[0];
            out[2 * n + 2 * k + 1] = st[1];
        }
        out
    }

    /// Analytic `(f_x, f_y, g_x, g_y)` at `(x, y)`.
    pub fn jacobians(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.n_bus();
        let ng = self.n_machines();
        let (nx, ny) = (x.len(), y.len());
        let mut fx = DMatrix::zeros(nx, nx);
        let mut fy = DMatrix::zeros(nx, ny);
        let mut gx = DMatrix::zeros(ny, nx);
        let mut gy = DMatrix::zeros(ny, ny);

        // Network: −Y·V plus constant-power injection currents.
        for i in 0..n {
            for j in 0..n {
                let yij = self.ybus[(i, j)];
                if yij == Complex64::new(0.0, 0.0) {
                    continue;
                }
                gy[(2 * i, 2 * j)] -= yij.re;
                gy[(2 * i, 2 * j + 1)] += yij.im;
                gy[(2 * i + 1, 2 * j)] -= yij.im;
                gy[(2 * i + 1, 2 * j + 1)] -= yij.re;
            }
            let s = self.s_const[i];
            if s != Complex64::new(0.0, 0.0) {
                let v = self.bus_voltage(y, i);
                let m2 = v.norm_sqr();
                let ir = (s.re * v.re + s.im * v.im) / m2;
                let ii = (s.re * v.im - s.im * v.re) / m2;
                gy[(2 * i, 2 * i)] += s.re / m2 - 2.0 * v.re * ir / m2;
                gy[(2 * i, 2 * i + 1)] += s.im / m2 - 2.0 * v.im * ir / m2;
                gy[(2 * i + 1, 2 * i)] += -s.im / m2 - 2.0 * v.re * ii / m2;
                gy[(2 * i + 1, 2 * i + 1)] += s.re / m2 - 2.0 * v.im * ii / m2;
            }
        }

        for k in 0..ng {
            let xl = self.local(x, k);
            let (id, iq) = self.currents(y, k);
            let b = self.machine_bus[k];
            let v = self.bus_voltage(y, b);
            let jm = self.params[k].jacobian(&xl, id, iq, v, self.omega_s);
            let gi = |s: usize| state_index(ng, k, s);
            let id_col = 2 * n + 2 * k;
            let v_col = 2 * b;
            for r in 0..STATES_PER_MACHINE {
                for c in 0..STATES_PER_MACHINE {
                    fx[(gi(r), gi(c))] = jm.f_x[r][c];
                }
                fy[(gi(r), id_col)] = jm.f_i[r][0];
                fy[(gi(r), id_col + 1)] = jm.f_i[r][1];
                fy[(gi(r), v_col)] = jm.f_v[r][0];
                fy[(gi(r), v_col + 1)] = jm.f_v[r][1];
            }
            for r in 0..2 {
                let row = 2 * n + 2 * k + r;
                for c in 0..STATES_PER_MACHINE {
                    gx[(row, gi(c))] = jm.g_x[r][c];
                    gx[(2 * b + r, gi(c))] += jm.kcl_x[r][c];
                }
                gy[(row, id_col)] = jm.g_i[r][0];
                gy[(row, id_col + 1)] = jm.g_i[r][1];
                gy[(row, v_col)] = jm.g_v[r][0];
                gy[(row, v_col + 1)] = jm.g_v[r][1];
                gy[(2 * b + r, id_col)] += jm.kcl_i[r][0];
                gy[(2 * b + r, id_col + 1)] += jm.kcl_i[r][1];
            }
        }
        (fx, fy, gx, gy)
    }

    /// Solves `g(x, y) = 0` for `y` by Newton's method from `y_guess`.
    pub fn solve_algebraic(&self, x: &DVector<f64>, y_guess: &DVector<f64>) -> Result<DVector<f64>> {
        let mut y = y_guess.clone();
        for _ in 0..50 {
            let r = self.g(x, &y);
            if r.amax() < 1e-13 {
                return Ok(y);
            }
            let (_, _, _, gy) = self.jacobians(x, &y);
            let dy = linalg::solve(gy, &DMatrix::from_column_slice(r.len(), 1, r.as_slice())).ok_or_else(|| {
                Error::SingularAlgebraic { element: String::from("network/stator block during algebraic solve") }
            })?;
            for i in 0..y.len() {
                y[i] -= dy[(i, 0)];
            }
        }
        let r = self.g(x, &y);
        if r.amax() < 1e-10 {
            Ok(y)
        } else {
            Err(Error::SingularAlgebraic { element: format!("algebraic solve stalled at residual {:.3e}", r.amax()) })
        }
    }

    /// `f(x, y(x))` with the algebraic variables eliminated.
    pub fn reduced_f(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let y = self.solve_algebraic(x, &self.y0)?;
        Ok(self.f(x, &y))
    }
}

fn identify_singular(case: &Case, gy: &DMatrix<f64>) -> String {
    let n = case.buses.len();
    for (k, m) in case.machines.iter().enumerate() {
        let r = 2 * n + 2 * k;
        let block = gy.view((r, r), (2, 2));
        if (block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)]).abs() < 1e-14 {
            return format!("machine {} stator block", m.id);
        }
    }
    for (i, bus) in case.buses.iter().enumerate() {
        if gy.row(2 * i).iter().all(|v| *v == 0.0) {
            return format!("bus {} has no network connection", bus.id);
        }
    }
    String::from("network admittance block")
}

/// Builds the state-space model about a converged power flow.
pub fn build_linear_model(case: &Case, sol: &PowerFlowSolution, zero_flow_eps: f64) -> Result<StateSpaceModel> {
    let dae = DaeModel::new(case, sol)?;
    let (fx, fy, gx, gy) = dae.jacobians(&dae.x0, &dae.y0);
    let s = linalg::solve(gy.clone(), &gx)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularAlgebraic { element: identify_singular(case, &gy) })?;
    let a = &fx - &fy * &s;

    let n = case.buses.len();
    let nx = a.nrows();
    let mut c_v = DMatrix::zeros(n, nx);
    let mut c_theta = DMatrix::zeros(n, nx);
    for i in 0..n {
        let (vr, vi) = (dae.y0[2 * i], dae.y0[2 * i + 1]);
        let m2 = vr * vr + vi * vi;
        let m = m2.sqrt();
        for c in 0..nx {
            let (dr, di) = (-s[(2 * i, c)], -s[(2 * i + 1, c)]);
            c_v[(i, c)] = (vr * dr + vi * di) / m;
            c_theta[(i, c)] = (vr * di - vi * dr) / m2;
        }
    }
    let c_f = &c_theta * &a / (2.0 * PI * case.frequency_hz);

    let currents = dae.branch_currents(&dae.y0);
    let nb = case.branches.len();
    let mut c_i = DMatrix::zeros(nb, nx);
    let mut regularized = Vec::new();
    for (b, br) in case.branches.iter().enumerate() {
        let (f, t) = dae.branch_ends[b];
        let pi = dae.branch_pi[b];
        let i0 = currents[b];
        let small = i0.norm() < zero_flow_eps;
        if small {
            regularized.push(br.id.clone());
        }
        for c in 0..nx {
            let dvf = Complex64::new(-s[(2 * f, c)], -s[(2 * f + 1, c)]);
            let dvt = Complex64::new(-s[(2 * t, c)], -s[(2 * t + 1, c)]);
            let di = pi[0] * dvf + pi[1] * dvt;
            c_i[(b, c)] = if small {
                let mag = di.norm();
                if di.re.abs() >= di.im.abs() {
                    mag.copysign(di.re)
                } else {
                    mag.copysign(di.im)
                }
            } else {
                (i0.re * di.re + i0.im * di.im) / i0.norm()
            };
        }
    }

    let ng = case.machines.len();
    let mut states = Vec::with_capacity(nx);
    for g in 0..nx {
        let (k, local) = if g < ng {
            (g, machine::DELTA)
        } else if g < 2 * ng {
            (g - ng, machine::OMEGA)
        } else {
            ((g - 2 * ng) / 5, 2 + (g - 2 * ng) % 5)
        };
        let m = &case.machines[k];
        states.push(StateLabel { kind: StateKind::LOCAL[local], machine: m.id.clone(), bus: m.bus });
    }

    Ok(StateSpaceModel {
        a,
        states,
        c_v,
        c_theta,
        c_f,
        c_i,
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        branch_ids: case.branches.iter().map(|b| b.id.clone()).collect(),
        regularized_branches: regularized,
        machine_ids: case.machines.iter().map(|m| m.id.clone()).collect(),
        machine_buses: case.machines.iter().map(|m| m.bus).collect(),
        frequency_hz: case.frequency_hz,
        x0: dae.x0,
    })
}

/// Sampled free response `Δx(t)` of the linear model.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One state vector per sample time.
    pub states: Vec<DVector<f64>>,
}

/// Free response from `x0` by modal superposition
/// `Δx(t) = Σ v_k (w_kᵀ x0) e^{λ_k t}` over `[0, horizon]` in steps of `dt`.
///
/// Eigenvalues closer together than the eigensolver can separate (the
/// defective zero pair left by the missing governors) have no usable modal
/// coordinates. Whatever of `x0` lies in their invariant subspace is
/// propagated by the series `Σ tⁿAⁿr₀/n!`, projected back onto that
/// subspace after every product so the stiff modes cannot leak in.
pub fn linear_free_response(model: &StateSpaceModel, x0: &DVector<f64>, horizon: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig { field: "dt", message: format!("must be positive, got {dt}") });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidConfig { field: "horizon", message: format!("must be positive, got {horizon}") });
    }
    let (values, right, left) = crate::modal::full_decomposition(&model.a)?;
    let n = values.len();
    let tau = 10.0 * f64::EPSILON.sqrt() * linalg::norm_inf(&model.a).max(1.0);
    let simple: Vec<usize> =
        (0..n).filter(|&k| (0..n).all(|j| j == k || (values[j] - values[k]).norm() >= tau)).collect();

    let one = Complex64::new(1.0, 0.0);
    let project = |s: &DVector<Complex64>| {
        let mut out = s.clone();
        for &k in &simple {
            let c = left.column(k).dot(s);
            out.axpy(-c, &right.column(k), one);
        }
        out
    };
    let x0c = x0.map(|v| Complex64::new(v, 0.0));
    let z0: Vec<Complex64> = simple.iter().map(|&k| left.column(k).dot(&x0c)).collect();

    // Powers Aⁿr₀ restricted to the clustered subspace.
    let a_c = model.a.map(|v| Complex64::new(v, 0.0));
    let scale = x0.amax().max(f64::MIN_POSITIVE);
    let mut powers = alloc::vec![project(&x0c)];
    let mut weight = 1.0;
    for p in 1..60 {
        weight *= horizon / p as f64;
        let next = project(&(&a_c * powers.last().expect("non-empty")));
        let size = next.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
        powers.push(next);
        if size * weight < 1e-17 * scale {
            break;
        }
    }

    let steps = (horizon / dt + 1e-9).floor() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let t = s as f64 * dt;
        let mut acc = DVector::<Complex64>::zeros(n);
        for (&k, &z) in simple.iter().zip(&z0) {
            let c = z * (values[k] * t).exp();
            if c != Complex64::new(0.0, 0.0) {
                acc.axpy(c, &right.column(k), one);
            }
        }
        let mut coef = 1.0;
        for (p, term) in powers.iter().enumerate() {
            if p > 0 {
                coef *= t / p as f64;
            }
            acc.axpy(Complex64::new(coef, 0.0), term, one);
        }
        times.push(t);
        states.push(acc.map(|z| z.re));
    }
    Ok(Trajectory { times, states })
}
