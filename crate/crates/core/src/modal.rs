//! Eigenanalysis, participation factors, mode shapes and observability
//! factors.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::case::{BusId, MachineId};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::linearizer::StateSpaceModel;

/// One eigenvalue with its eigenvectors. Only the `Im(λ) ≥ 0` member of a
/// conjugate pair is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// Position in the full spectrum returned by the eigensolver.
    pub index: usize,
    pub lambda: Complex64,
    pub damping_ratio: f64,
    pub frequency_hz: f64,
    /// Right eigenvector, scaled so the largest speed entry is `1∠0`.
    pub right: DVector<Complex64>,
    /// Left eigenvector with `leftᵀ·right = 1`.
    pub left: DVector<Complex64>,
    pub participations: DVector<Complex64>,
    /// Share of `Σ|p|` carried by the speed states.
    pub speed_share: f64,
    pub is_electromechanical: bool,
    /// `‖A v − λ v‖∞ / ‖v‖∞`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ModalAnalysis {
    /// Full spectrum in solver order.
    pub eigenvalues: Vec<Complex64>,
    pub modes: Vec<Mode>,
    pub max_residual: f64,
}

impl ModalAnalysis {
    /// Electromechanical modes, least damped first.
    pub fn electromechanical(&self) -> Vec<Mode> {
        sort_by_damping(self.modes.iter().filter(|m| m.is_electromechanical).cloned().collect())
    }

    /// The least-damped electromechanical mode.
    pub fn critical(&self) -> Result<Mode> {
        self.electromechanical().into_iter().next().ok_or(Error::NoElectromechanicalMode)
    }
}

/// Speed-state entries of a mode, normalized to a unit, zero-phase maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeShape {
    pub machines: Vec<MachineId>,
    pub buses: Vec<BusId>,
    pub entries: Vec<Complex64>,
}

impl ModeShape {
    pub fn magnitude(&self, k: usize) -> f64 {
        self.entries[k].norm()
    }

    pub fn phase_deg(&self, k: usize) -> f64 {
        self.entries[k].arg().to_degrees()
    }
}

/// Observability factors of one mode, all tied to the mode-shape normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityFactors {
    pub phi_v: DVector<Complex64>,
    pub phi_f: DVector<Complex64>,
    pub phi_i: DVector<Complex64>,
}

pub fn damping_ratio(lambda: Complex64) -> f64 {
    let m = lambda.norm();
    if m == 0.0 {
        0.0
    } else {
        -lambda.re / m
    }
}

pub fn frequency_hz(lambda: Complex64) -> f64 {
    lambda.im / (2.0 * PI)
}

/// Eigenvalues, right eigenvectors and left eigenvectors, both as columns.
///
/// Left eigenvectors are the right eigenvectors of `Aᵀ`, matched by
/// eigenvalue and scaled so `w_kᵀ v_k = 1`. Inverting `V` instead would lose
/// every left vector to the near-defective zero pair of a system without
/// governors. Members of such a pair keep unit max-abs left vectors since
/// `w_kᵀ v_k` vanishes there.
pub fn full_decomposition(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>)> {
    let dec = linalg::eigen_decompose(a)?;
    let dec_t = linalg::eigen_decompose(&a.transpose())?;
    let n = a.nrows();
    let mut right = dec.vectors;
    let mut left = DMatrix::<Complex64>::zeros(n, n);
    let mut used = alloc::vec![false; n];
    for k in 0..n {
        let cmax = right.column(k).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if cmax > 0.0 {
            right.column_mut(k).unscale_mut(cmax);
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !used[j]) {
            let d = (dec_t.values[j] - dec.values[k]).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, _) = best.expect("as many left as right eigenvectors");
        used[j] = true;
        let mut w = dec_t.vectors.column(j).into_owned();
        let wmax = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if wmax > 0.0 {
            w.unscale_mut(wmax);
        }
        let d = w.dot(&right.column(k));
        if d.norm() > 1e-12 {
            w.iter_mut().for_each(|z| *z /= d);
        }
        left.set_column(k, &w);
    }
    Ok((dec.values, right, left))
}

fn speed_pivot(v: &DVector<Complex64>, model: &StateSpaceModel) -> Complex64 {
    let ng = model.n_machines();
    let pick = |range: &mut dyn Iterator<Item = usize>| {
        let mut best: Option<(f64, usize)> = None;
        for i in range {
            let m = v[i].norm();
            if best.is_none_or(|(b, _)| m > b) {
                best = Some((m, i));
            }
        }
        best
    };
    match pick(&mut (0..ng).map(|k| model.omega_index(k))) {
        Some((m, i)) if m > 0.0 => v[i],
        _ => match pick(&mut (0..v.len())) {
            Some((m, i)) if m > 0.0 => v[i],
            _ => Complex64::new(1.0, 0.0),
        },
    }
}

/// `p_ki = w_k(i)·v_k(i)`.
pub fn participation_factors(mode: &Mode) -> DVector<Complex64> {
    mode.left.component_mul(&mode.right)
}

fn speed_share(p: &DVector<Complex64>, model: &StateSpaceModel) -> f64 {
    let total: f64 = p.iter().map(|z| z.norm()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let speed: f64 = (0..model.n_machines()).map(|k| p[model.omega_index(k)].norm()).sum();
    speed / total
}

fn is_electromechanical(lambda: Complex64, share: f64, cfg: &AnalysisConfig) -> bool {
    let f = frequency_hz(lambda);
    f >= cfg.em_min_freq_hz
        && f <= cfg.em_max_freq_hz
        && lambda.norm() >= cfg.em_min_modulus
        && share >= cfg.em_participation
}

/// Complete spectrum with normalized, bi-orthonormal eigenvectors.
pub fn eigen_analysis(model: &StateSpaceModel, cfg: &AnalysisConfig) -> Result<ModalAnalysis> {
    let (values, right, left) = full_decomposition(&model.a)?;
    let a_c = model.a.map(|x| Complex64::new(x, 0.0));
    let mut modes = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (k, &lambda) in values.iter().enumerate() {
        let mut v = right.column(k).into_owned();
        let mut w = left.column(k).into_owned();
        let r = &a_c * &v - &v * lambda;
        let cmax = |m: &DVector<Complex64>| m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let residual = cmax(&r) / cmax(&v);
        max_residual = max_residual.max(residual);
        if lambda.im < 0.0 {
            continue;
        }
        let c = speed_pivot(&v, model);
        v.iter_mut().for_each(|z| *z /= c);
        w.iter_mut().for_each(|z| *z *= c);
        let mut mode = Mode {
            index: k,
            lambda,
            damping_ratio: damping_ratio(lambda),
            frequency_hz: frequency_hz(lambda),
            right: v,
            left: w,
            participations: DVector::zeros(0),
            speed_share: 0.0,
            is_electromechanical: false,
            residual,
        };
        mode.participations = participation_factors(&mode);
        mode.speed_share = speed_share(&mode.participations, model);
        mode.is_electromechanical = is_electromechanical(lambda, mode.speed_share, cfg);
        modes.push(mode);
    }
    Ok(ModalAnalysis { eigenvalues: values, modes, max_residual })
}

fn sort_by_damping(mut modes: Vec<Mode>) -> Vec<Mode> {
    modes.sort_by(|a, b| {
        a.damping_ratio
            .total_cmp(&b.damping_ratio)
            .then(a.frequency_hz.total_cmp(&b.frequency_hz))
            .then(a.index.cmp(&b.index))
    });
    modes
}

/// Electromechanical modes among `modes`, least damped first.
pub fn electromechanical_filter(modes: &[Mode], model: &StateSpaceModel, cfg: &AnalysisConfig) -> Vec<Mode> {
    let keep = modes
        .iter()
        .filter(|m| is_electromechanical(m.lambda, speed_share(&participation_factors(m), model), cfg))
        .cloned()
        .collect();
    sort_by_damping(keep)
}

/// Speed entries of `mode`, scaled so the largest is exactly `1∠0°`.
pub fn mode_shape(mode: &Mode, model: &StateSpaceModel) -> ModeShape {
    let c = speed_pivot(&mode.right, model);
    let entries = (0..model.n_machines()).map(|k| mode.right[model.omega_index(k)] / c).collect();
    ModeShape { machines: model.machine_ids.clone(), buses: model.machine_buses.clone(), entries }
}

/// `φ_V = C_V v`, `φ_f = C_f v`, `φ_I = C_I v` with `v` in mode-shape
/// normalization.
pub fn observability(mode: &Mode, model: &StateSpaceModel) -> ObservabilityFactors {
    let c = speed_pivot(&mode.right, model);
    let v = mode.right.map(|z| z / c);
    let apply = |m: &DMatrix<f64>| -> DVector<Complex64> {
        let re = m * v.map(|z| z.re);
        let im = m * v.map(|z| z.im);
        DVector::from_fn(m.nrows(), |i, _| Complex64::new(re[i], im[i]))
    };
    ObservabilityFactors { phi_v: apply(&model.c_v), phi_f: apply(&model.c_f), phi_i: apply(&model.c_i) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy_model(a: DMatrix<f64>, ng: usize) -> StateSpaceModel {
        let n = a.nrows();
        StateSpaceModel {
            states: Vec::new(),
            c_v: DMatrix::zeros(1, n),
            c_theta: DMatrix::zeros(1, n),
            c_f: DMatrix::zeros(1, n),
            c_i: DMatrix::zeros(1, n),
            bus_ids: vec![BusId(1)],
            branch_ids: Vec::new(),
            regularized_branches: Vec::new(),
            machine_ids: (0..ng).map(|k| MachineId(alloc::format!("G{k}"))).collect(),
            machine_buses: (0..ng).map(|k| BusId(k as u32 + 1)).collect(),
            frequency_hz: 50.0,
            x0: DVector::zeros(n),
            a,
        }
    }

    #[test]
    fn diagonal_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let m = eigen_analysis(&toy_model(a, 1), &AnalysisConfig::default()).unwrap();
        let mut l: Vec<f64> = m.modes.iter().map(|x| x.lambda.re).collect();
        l.sort_by(f64::total_cmp);
        assert_eq!(l, vec![-2.0, -1.0]);
        for mode in &m.modes {
            assert!((mode.right.norm() - 1.0).abs() < 1e-14);
            let s: Complex64 = mode.participations.iter().sum();
            assert!((s - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn undamped_oscillator() {
        let w = 2.0 * PI;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let m = eigen_analysis(&toy_model(a, 1), &AnalysisConfig::default()).unwrap();
        assert_eq!(m.modes.len(), 1);
        let mode = &m.modes[0];
        assert!((mode.lambda - Complex64::new(0.0, w)).norm() < 1e-12);
        assert_eq!(mode.damping_ratio, 0.0);
        assert!((mode.frequency_hz - 1.0).abs() < 1e-12);
        assert_eq!(m.eigenvalues.len(), 2);
    }

    #[test]
    fn decoupled_blocks_do_not_participate() {
        // Block 1: a damped oscillator on states (0, 1); block 2: a real pole.
        let a = DMatrix::from_row_slice(3, 3, &[-0.5, 6.0, 0.0, -6.0, -0.5, 0.0, 0.0, 0.0, -3.0]);
        let m = eigen_analysis(&toy_model(a, 1), &AnalysisConfig::default()).unwrap();
        let osc = m.modes.iter().find(|x| x.lambda.im > 0.0).unwrap();
        assert!(osc.participations[2].norm() < 1e-14);
        let real = m.modes.iter().find(|x| x.lambda.im == 0.0).unwrap();
        assert!(real.participations[0].norm() < 1e-14 && real.participations[1].norm() < 1e-14);
    }

    #[test]
    fn shape_is_scale_invariant() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 314.0, 0.0, //
                0.0, 0.0, 0.0, 314.0, //
                -0.05, 0.04, -0.1, 0.0, //
                0.03, -0.06, 0.0, -0.2,
            ],
        );
        let model = toy_model(a, 2);
        let m = eigen_analysis(&model, &AnalysisConfig::default()).unwrap();
        for mode in &m.modes {
            let s1 = mode_shape(mode, &model);
            let mut scaled = mode.clone();
            scaled.right *= Complex64::from_polar(3.7, 57f64.to_radians());
            let s2 = mode_shape(&scaled, &model);
            let max = s1.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-15);
            for (a, b) in s1.entries.iter().zip(&s2.entries) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
