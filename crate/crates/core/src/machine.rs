//! Sixth-order subtransient synchronous machine with a static exciter.
//!
//! Two rotor circuits per axis (E'q, ψ1d on d; E'd, ψ2q on q), stator
//! transients neglected, speed voltages taken at synchronous speed. The
//! exciter is `Efd = Ka·(Vref − Vm)` with a first-order voltage sensor
//! `Tr·Vm' = |V| − Vm`.
//!
//! Local state order: `[δ, ω, E'q, E'd, ψ1d, ψ2q, Vm]`. The machine's dq
//! frame relates to the network frame by `Vd + jVq = V·e^{−j(δ−π/2)}`.

use num_complex::Complex64;
// Needed for float math without std; redundant when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

pub const DELTA: usize = 0;
pub const OMEGA: usize = 1;
pub const EQP: usize = 2;
pub const EDP: usize = 3;
pub const PSI1D: usize = 4;
pub const PSI2Q: usize = 5;
pub const VM: usize = 6;
pub const STATES_PER_MACHINE: usize = 7;

pub type LocalState = [f64; STATES_PER_MACHINE];

/// Machine parameters on the system MVA base.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineParams {
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
    pub tr: f64,
    pub ka: f64,
}

/// Constant inputs that make the power-flow point an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoints {
    pub tm: f64,
    pub vref: f64,
}

/// Partial derivatives of one machine's equations at a point.
///
/// `f` rows are the seven state equations, `g` rows the two stator
/// equations `[Ra·Id + ψq + Vd, Ra·Iq − ψd + Vq]` and `kcl` rows the real and
/// imaginary parts of the injected network current.
#[derive(Debug, Clone, Default)]
pub struct MachineJacobian {
    pub f_x: [[f64; 7]; 7],
    /// Columns `[Id, Iq]`.
    pub f_i: [[f64; 2]; 7],
    /// Columns `[Vr, Vi]` of the terminal bus.
    pub f_v: [[f64; 2]; 7],
    pub g_x: [[f64; 7]; 2],
    pub g_i: [[f64; 2]; 2],
    pub g_v: [[f64; 2]; 2],
    pub kcl_x: [[f64; 7]; 2],
    pub kcl_i: [[f64; 2]; 2],
}

impl MachineParams {
    fn a1(&self) -> f64 {
        (self.xd_pp - self.xl) / (self.xd_p - self.xl)
    }
    fn a2(&self) -> f64 {
        (self.xd_p - self.xd_pp) / (self.xd_p - self.xl)
    }
    fn b1(&self) -> f64 {
        (self.xq_pp - self.xl) / (self.xq_p - self.xl)
    }
    fn b2(&self) -> f64 {
        (self.xq_p - self.xq_pp) / (self.xq_p - self.xl)
    }
    fn kd(&self) -> f64 {
        (self.xd_p - self.xd_pp) / ((self.xd_p - self.xl) * (self.xd_p - self.xl))
    }
    fn kq(&self) -> f64 {
        (self.xq_p - self.xq_pp) / ((self.xq_p - self.xl) * (self.xq_p - self.xl))
    }

    /// Subtransient stator fluxes `(ψd, ψq)`.
    pub fn fluxes(&self, x: &LocalState, id: f64, iq: f64) -> (f64, f64) {
        let psid = -self.xd_pp * id + self.a1() * x[EQP] + self.a2() * x[PSI1D];
        let psiq = -self.xq_pp * iq - self.b1() * x[EDP] + self.b2() * x[PSI2Q];
        (psid, psiq)
    }

    pub fn electrical_torque(&self, x: &LocalState, id: f64, iq: f64) -> f64 {
        let (psid, psiq) = self.fluxes(x, id, iq);
        psid * iq - psiq * id
    }

    /// Equilibrium state, stator currents and setpoints for terminal voltage
    /// `v` and machine output `s` (both network frame, system base).
    pub fn initialize(&self, v: Complex64, s: Complex64) -> (LocalState, f64, f64, Setpoints) {
        let i = (s / v).conj();
        let delta = (v + Complex64::new(self.ra, self.xq) * i).arg();
        let (sin, cos) = delta.sin_cos();
        let (_, vq) = to_dq(v, sin, cos);
        let (id, iq) = to_dq(i, sin, cos);
        let edp = (self.xq - self.xq_p) * iq;
        let psi2q = -edp - (self.xq_p - self.xl) * iq;
        let eqp = vq + self.ra * iq + self.xd_p * id;
        let psi1d = eqp - (self.xd_p - self.xl) * id;
        let efd = eqp + (self.xd - self.xd_p) * id;
        let vm = v.norm();
        let x = [delta, 1.0, eqp, edp, psi1d, psi2q, vm];
        let tm = self.electrical_torque(&x, id, iq);
        (x, id, iq, Setpoints { tm, vref: vm + efd / self.ka })
    }

    /// State derivatives for terminal voltage magnitude `vmag`.
    pub fn derivatives(&self, sp: &Setpoints, x: &LocalState, id: f64, iq: f64, vmag: f64, omega_s: f64) -> LocalState {
        let te = self.electrical_torque(x, id, iq);
        let efd = self.ka * (sp.vref - x[VM]);
        let cd = self.xd - self.xd_p;
        let cq = self.xq - self.xq_p;
        [
            omega_s * (x[OMEGA] - 1.0),
            (sp.tm - te - self.d * (x[OMEGA] - 1.0)) / (2.0 * self.h),
            (-x[EQP] - cd * (id - self.kd() * (x[PSI1D] + (self.xd_p - self.xl) * id - x[EQP])) + efd) / self.td0_p,
            (-x[EDP] + cq * (iq - self.kq() * (x[PSI2Q] + (self.xq_p - self.xl) * iq + x[EDP]))) / self.tq0_p,
            (-x[PSI1D] + x[EQP] - (self.xd_p - self.xl) * id) / self.td0_pp,
            (-x[PSI2Q] - x[EDP] - (self.xq_p - self.xl) * iq) / self.tq0_pp,
            (vmag - x[VM]) / self.tr,
        ]
    }

    /// Stator algebraic residuals `[Ra·Id + ψq + Vd, Ra·Iq − ψd + Vq]`.
    pub fn stator_residual(&self, x: &LocalState, id: f64, iq: f64, v: Complex64) -> [f64; 2] {
        let (sin, cos) = x[DELTA].sin_cos();
        let (vd, vq) = to_dq(v, sin, cos);
        let (psid, psiq) = self.fluxes(x, id, iq);
        [self.ra * id + psiq + vd, self.ra * iq - psid + vq]
    }

    pub fn jacobian(&self, x: &LocalState, id: f64, iq: f64, v: Complex64, omega_s: f64) -> MachineJacobian {
        let mut j = MachineJacobian::default();
        let (a1, a2, b1, b2) = (self.a1(), self.a2(), self.b1(), self.b2());
        let (psid, psiq) = self.fluxes(x, id, iq);
        let (sin, cos) = x[DELTA].sin_cos();
        let (vd, vq) = to_dq(v, sin, cos);

        j.f_x[DELTA][OMEGA] = omega_s;
        let m = 2.0 * self.h;
        j.f_x[OMEGA][OMEGA] = -self.d / m;
        j.f_x[OMEGA][EQP] = -a1 * iq / m;
        j.f_x[OMEGA][PSI1D] = -a2 * iq / m;
        j.f_x[OMEGA][EDP] = -b1 * id / m;
        j.f_x[OMEGA][PSI2Q] = b2 * id / m;
        j.f_i[OMEGA] = [(self.xd_pp * iq + psiq) / m, -(psid + self.xq_pp * id) / m];

        let cd = self.xd - self.xd_p;
        let kd = self.kd();
        j.f_x[EQP][EQP] = (-1.0 - cd * kd) / self.td0_p;
        j.f_x[EQP][PSI1D] = cd * kd / self.td0_p;
        j.f_x[EQP][VM] = -self.ka / self.td0_p;
        j.f_i[EQP] = [(-cd + cd * kd * (self.xd_p - self.xl)) / self.td0_p, 0.0];

        let cq = self.xq - self.xq_p;
        let kq = self.kq();
        j.f_x[EDP][EDP] = (-1.0 - cq * kq) / self.tq0_p;
        j.f_x[EDP][PSI2Q] = -cq * kq / self.tq0_p;
        j.f_i[EDP] = [0.0, (cq - cq * kq * (self.xq_p - self.xl)) / self.tq0_p];

        j.f_x[PSI1D][PSI1D] = -1.0 / self.td0_pp;
        j.f_x[PSI1D][EQP] = 1.0 / self.td0_pp;
        j.f_i[PSI1D] = [-(self.xd_p - self.xl) / self.td0_pp, 0.0];

        j.f_x[PSI2Q][PSI2Q] = -1.0 / self.tq0_pp;
        j.f_x[PSI2Q][EDP] = -1.0 / self.tq0_pp;
        j.f_i[PSI2Q] = [0.0, -(self.xq_p - self.xl) / self.tq0_pp];

        j.f_x[VM][VM] = -1.0 / self.tr;
        let vmag = v.norm();
        j.f_v[VM] = [v.re / (vmag * self.tr), v.im / (vmag * self.tr)];

        // Stator.
        j.g_x[0][DELTA] = vq;
        j.g_x[0][EDP] = -b1;
        j.g_x[0][PSI2Q] = b2;
        j.g_i[0] = [self.ra, -self.xq_pp];
        j.g_v[0] = [sin, -cos];
        j.g_x[1][DELTA] = -vd;
        j.g_x[1][EQP] = -a1;
        j.g_x[1][PSI1D] = -a2;
        j.g_i[1] = [self.xd_pp, self.ra];
        j.g_v[1] = [cos, sin];

        // Injected current Id·sinδ + Iq·cosδ + j(Iq·sinδ − Id·cosδ).
        j.kcl_x[0][DELTA] = id * cos - iq * sin;
        j.kcl_x[1][DELTA] = iq * cos + id * sin;
        j.kcl_i[0] = [sin, cos];
        j.kcl_i[1] = [-cos, sin];
        j
    }
}

/// Network-frame phasor to `(d, q)` components for rotor angle δ.
pub fn to_dq(z: Complex64, sin: f64, cos: f64) -> (f64, f64) {
    (z.re * sin - z.im * cos, z.re * cos + z.im * sin)
}

/// Stator current in the network frame.
pub fn injected_current(delta: f64, id: f64, iq: f64) -> Complex64 {
    let (sin, cos) = delta.sin_cos();
    Complex64::new(id * sin + iq * cos, iq * sin - id * cos)
}
