//! Spectrum, eigenvectors and free response checked against independent
//! computations from nalgebra (Schur eigenvalues, matrix exponential).

mod common;

use gridseg_core::linearizer::{build_linear_model, linear_free_response, StateSpaceModel};
use gridseg_core::modal::{eigen_analysis, full_decomposition};
use gridseg_core::powerflow::solve_power_flow;
use gridseg_core::{AnalysisConfig, Case, Complex64, DMatrix, DVector};

fn model(case: &Case) -> StateSpaceModel {
    let sol = solve_power_flow(case, 1e-10, 30).unwrap();
    build_linear_model(case, &sol, 1e-6).unwrap()
}

fn cmax(v: &DVector<Complex64>) -> f64 {
    v.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn sorted(v: impl IntoIterator<Item = Complex64>) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = v.into_iter().collect();
    v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    v
}

#[test]
fn spectrum_agrees_with_schur() {
    for case in [common::ts1(), common::ts2()] {
        let m = model(&case);
        let (ours, _, _) = full_decomposition(&m.a).unwrap();
        let reference = m.a.complex_eigenvalues();
        assert_eq!(ours.len(), reference.len());
        // Match each reference eigenvalue to its nearest unused one of ours.
        let mut used = vec![false; ours.len()];
        for r in reference.iter() {
            let (k, d) = ours
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, z)| (k, (z - r).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            used[k] = true;
            // The defective double zero is only resolved to about sqrt(eps).
            let tol = if r.norm() < 1e-4 { 1e-5 } else { 1e-8 * m.a.amax() };
            assert!(d < tol, "{r} vs {}", ours[k]);
        }
    }
}

#[test]
fn conjugate_pairs_and_stability() {
    let m = model(&common::ts1());
    let (values, _, _) = full_decomposition(&m.a).unwrap();
    let all = sorted(values.iter().copied());
    let conj = sorted(values.iter().map(|z| z.conj()));
    for (a, b) in all.iter().zip(&conj) {
        assert!((a - b).norm() < 1e-9);
    }
    for z in &values {
        if z.norm() > 1e-3 {
            assert!(z.re < 0.0, "unstable eigenvalue {z}");
        }
    }
}

#[test]
fn eigen_residuals_and_biorthogonality() {
    let cfg = AnalysisConfig::default();
    for case in [common::ts1(), common::ts2()] {
        let m = model(&case);
        let modal = eigen_analysis(&m, &cfg).unwrap();
        assert!(modal.max_residual < 1e-8, "{}", modal.max_residual);
        let a = m.a.map(|x| Complex64::new(x, 0.0));
        for mode in &modal.modes {
            if mode.lambda.norm() < 1e-3 {
                continue;
            }
            let lw = a.transpose() * &mode.left - &mode.left * mode.lambda;
            assert!(cmax(&lw) / cmax(&mode.left) < 1e-8 * m.a.amax());
            let wv: Complex64 = mode.left.dot(&mode.right);
            assert!((wv - 1.0).norm() < 1e-9);
            let sum: Complex64 = mode.participations.iter().sum();
            assert!((sum - 1.0).norm() < 1e-9, "participation sum {sum}");
        }
    }
}

#[test]
fn critical_mode_of_test_system_1() {
    let modal = eigen_analysis(&model(&common::ts1()), &AnalysisConfig::default()).unwrap();
    let em = modal.electromechanical();
    assert_eq!(em.len(), 5);
    let c = &em[0];
    assert!((c.lambda.re + 0.29).abs() < 0.02 && (c.lambda.im - 5.23).abs() < 0.05, "{}", c.lambda);
    // No exciter or flux mode sneaks into the table.
    assert!(em.iter().all(|m| m.speed_share >= 0.3 && m.frequency_hz < 1.2));
}

fn expm_response(a: &DMatrix<f64>, x0: &DVector<f64>, t: f64) -> DVector<f64> {
    (a * t).exp() * x0
}

#[test]
fn free_response_matches_matrix_exponential() {
    let m = model(&common::ts1());
    let modal = eigen_analysis(&m, &AnalysisConfig::default()).unwrap();
    let critical = modal.critical().unwrap();
    let n = m.n_states();
    let starts =
        [critical.right.map(|z| z.re), DVector::from_fn(n, |i, _| ((i * 7919) % 13) as f64 / 13.0 - 0.5) * 1e-2];
    for x0 in &starts {
        let traj = linear_free_response(&m, x0, 2.0, 0.25).unwrap();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let reference = expm_response(&m.a, x0, *t);
            let err = (x - &reference).amax() / x0.amax();
            assert!(err < 1e-8, "t = {t}: relative error {err:e}");
        }
    }
}

#[test]
fn zero_start_stays_at_rest() {
    let m = model(&common::ts1());
    let traj = linear_free_response(&m, &DVector::zeros(m.n_states()), 1.0, 0.1).unwrap();
    assert_eq!(traj.states.len(), 11);
    assert!(traj.states.iter().all(|x| x.amax() == 0.0));
}

#[test]
fn pure_mode_decays_at_its_damping() {
    let m = model(&common::ts1());
    let modal = eigen_analysis(&m, &AnalysisConfig::default()).unwrap();
    let c = modal.critical().unwrap();
    let x0 = c.right.map(|z| z.re);
    let period = 1.0 / c.frequency_hz;
    let traj = linear_free_response(&m, &x0, 4.0 * period, period).unwrap();
    let w = m.omega_index(0);
    let zeta = c.damping_ratio;
    let expected = (2.0 * std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
    for k in 1..traj.states.len() {
        let ratio = traj.states[k - 1][w] / traj.states[k][w];
        assert!((ratio - expected).abs() < 1e-6 * expected, "{ratio} vs {expected}");
    }
}
