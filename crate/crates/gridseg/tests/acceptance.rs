//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Criterion 9 needs the external Nordic 44 case and
//! is reported as SKIP unless `GRIDSEG_N44_CASE` names a case file.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use gridseg::parse_case;
use gridseg_core::linearizer::{build_linear_model, DaeModel};
use gridseg_core::modal::participation_factors;
use gridseg_core::pathfinder::phase_gap_deg;
use gridseg_core::powerflow::solve_power_flow;
use gridseg_core::segmenter::{analyze, evaluate_cuts, plan_from_analysis, run_segmentation, Analysis, ModeSummary};
use gridseg_core::{AnalysisConfig, BranchId, BusId, Case, Complex64, DMatrix, DVector, MachineId};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

type Outcome = Result<String, String>;

fn load(name: &str) -> Case {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse_case(&std::fs::read_to_string(&path).unwrap()).unwrap().case
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Machine table rows: (P MW, Q Mvar, θ deg).
const TS1_PF: [(f64, f64, f64); 6] = [
    (112.9, 11.6, 0.0),
    (100.0, 15.2, -2.2),
    (100.0, 24.7, -5.2),
    (-100.0, 36.7, -32.7),
    (-100.0, 30.2, -35.8),
    (-100.0, 26.9, -37.3),
];
const TS2_PF: [(f64, f64, f64); 6] = [
    (112.8, 16.7, 0.0),
    (100.0, 22.0, -2.2),
    (100.0, 35.4, -5.3),
    (100.0, 34.4, -5.7),
    (100.0, 21.1, -2.8),
    (100.0, 15.0, -1.3),
];

fn power_flow_matches(case: &Case, table: &[(f64, f64, f64); 6]) -> Result<f64, String> {
    let case = case.normalize();
    let sol = solve_power_flow(&case, 1e-10, 30).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (k, (id, bus, s)) in sol.machine_outputs(&case).into_iter().enumerate() {
        let (p, q) = (s.re * case.system_base_mva, s.im * case.system_base_mva);
        let th = sol.voltage_at(bus).unwrap().arg().to_degrees();
        let (tp, tq, tt) = table[k];
        if (p - tp).abs() > 0.5 || (q - tq).abs() > 2.0 || (th - tt).abs() > 0.5 {
            return Err(format!("{}: {p:.1} MW {q:.1} Mvar {th:.2} deg", id.0));
        }
        worst = worst.max((q - tq).abs());
    }
    Ok(worst)
}

fn c1() -> Outcome {
    let w1 = power_flow_matches(&load("ts1.json"), &TS1_PF)?;
    let w2 = power_flow_matches(&load("ts2.json"), &TS2_PF)?;
    Ok(format!("worst Q deviation {w1:.2} / {w2:.2} Mvar"))
}

fn names(ids: &[MachineId]) -> BTreeSet<String> {
    ids.iter().map(|m| m.0.clone()).collect()
}

fn critical_mode(case: &Case, f: f64, df: f64, z: f64, dz: f64) -> Outcome {
    let cfg = AnalysisConfig::default();
    let an = analyze(case, &cfg).map_err(|e| e.to_string())?;
    let em: Vec<ModeSummary> = an.modal.electromechanical().iter().map(ModeSummary::from).collect();
    let hits =
        em.iter().filter(|m| (m.frequency_hz - f).abs() <= df && (100.0 * m.damping_ratio - z).abs() <= dz).count();
    let c = ModeSummary::from(&an.critical);
    let plan = plan_from_analysis(&an, &cfg).map_err(|e| e.to_string())?;
    let groups = BTreeSet::from([names(&plan.edges.group1), names(&plan.edges.group2)]);
    let expected = BTreeSet::from([
        BTreeSet::from(["G1".to_string(), "G2".into(), "G3".into()]),
        BTreeSet::from(["G4".to_string(), "G5".into(), "G6".into()]),
    ]);
    let shape = an.shape();
    let phase = |g: &MachineId| shape.entries[shape.machines.iter().position(|m| m == g).unwrap()];
    let mut gap: f64 = 180.0;
    for a in &plan.edges.group1 {
        for b in &plan.edges.group2 {
            gap = gap.min(phase_gap_deg(phase(a), phase(b)));
        }
    }
    let detail = format!(
        "{:.3} ± j{:.3}, {:.2} %, {:.3} Hz, groups {:?}, min gap {gap:.1} deg",
        c.lambda.re,
        c.lambda.im,
        100.0 * c.damping_ratio,
        c.frequency_hz,
        groups
    );
    check(hits == 1 && (c.frequency_hz - f).abs() <= df && groups == expected && gap > 150.0, detail)
}

fn c2() -> Outcome {
    critical_mode(&load("ts1.json"), 0.83, 0.05, 5.5, 1.5)
}

fn c3() -> Outcome {
    critical_mode(&load("ts2.json"), 0.80, 0.05, 11.8, 2.0)
}

fn c4() -> Outcome {
    let plan = run_segmentation(&load("ts1.json"), &AnalysisConfig::default()).map_err(|e| e.to_string())?;
    let cut = &plan.cuts[0];
    let buses: Vec<u32> = cut.path.buses.iter().map(|b| b.0).collect();
    let detail = format!(
        "path {buses:?}, PB {}, A {}, cut {}, {} iteration(s), {} backtracks",
        cut.pivot, cut.path.ascent_start, cut.branch, plan.iterations, cut.path.backtracks
    );
    check(
        buses == [1, 10, 20, 30, 35, 40, 50, 60, 6]
            && cut.pivot == BusId(35)
            && cut.path.ascent_start == BusId(40)
            && plan.cut_ids() == [BranchId("35-40".into())]
            && plan.iterations == 1
            && cut.path.backtracks == 0,
        detail,
    )
}

fn c5() -> Outcome {
    const TABLE: [(f64, f64); 4] = [(18.3, 1.02), (18.5, 1.04), (18.6, 1.07), (19.2, 1.06)];
    let rep = evaluate_cuts(&load("ts1.json"), &[BranchId("35-40".into())], &AnalysisConfig::default())
        .map_err(|e| e.to_string())?;
    let weak = rep.modes.iter().any(|m| (0.6..=1.0).contains(&m.frequency_hz) && m.damping_ratio < 0.15);
    let rows: Vec<String> =
        rep.modes.iter().map(|m| format!("{:.2}%/{:.3}Hz", 100.0 * m.damping_ratio, m.frequency_hz)).collect();
    let close = rep.modes.len() == 4
        && rep
            .modes
            .iter()
            .zip(TABLE)
            .all(|(m, (z, f))| (100.0 * m.damping_ratio - z).abs() <= 1.5 && (m.frequency_hz - f).abs() <= 0.05);
    check(!weak && close && rep.suppressed, format!("modes {}", rows.join(", ")))
}

fn c6() -> Outcome {
    let rep = evaluate_cuts(&load("ts1.json"), &[BranchId("40-50".into())], &AnalysisConfig::default())
        .map_err(|e| e.to_string())?;
    let m = rep.modes.first().ok_or("no modes")?;
    let z = 100.0 * m.damping_ratio;
    check(
        (z - 7.7).abs() <= 2.0 && (m.frequency_hz - 0.96).abs() <= 0.06 && !rep.suppressed,
        format!(
            "residual mode {z:.2} % at {:.3} Hz, verdict {}",
            m.frequency_hz,
            if rep.suppressed { "suppressed" } else { "not suppressed" }
        ),
    )
}

fn profile(case: &Case) -> Outcome {
    let cfg = AnalysisConfig::default();
    let an = analyze(case, &cfg).map_err(|e| e.to_string())?;
    let plan = plan_from_analysis(&an, &cfg).map_err(|e| e.to_string())?;
    let path = &plan.cuts[0].path;
    let obs = an.observability();
    let idx = |b: BusId| an.case.buses.iter().position(|x| x.id == b).unwrap();
    let phi: Vec<Complex64> = path.buses.iter().map(|&b| obs.phi_f[idx(b)]).collect();
    let pb = path.buses.iter().position(|&b| b == path.pivot).unwrap();
    let a = path.buses.iter().position(|&b| b == path.ascent_start).unwrap();
    let descending = phi[..=pb].windows(2).all(|w| w[1].norm() < w[0].norm());
    let ascending = phi[a..].windows(2).all(|w| w[1].norm() > w[0].norm());
    let mut gap: f64 = 180.0;
    for x in &phi[..pb] {
        for y in &phi[pb + 1..] {
            gap = gap.min(phase_gap_deg(*x, *y));
        }
    }
    let branch_k = |id: &BranchId| an.case.branches.iter().position(|b| &b.id == id).unwrap();
    let strongest = path
        .branches
        .iter()
        .max_by(|x, y| obs.phi_i[branch_k(x)].norm().total_cmp(&obs.phi_i[branch_k(y)].norm()))
        .unwrap();
    let br = &an.case.branches[branch_k(strongest)];
    let incident = br.from_bus == path.pivot || br.to_bus == path.pivot;
    check(
        descending && ascending && gap > 150.0 && incident,
        format!("PB {}, phase gap {gap:.1} deg, max |phi_I| on {strongest}", path.pivot),
    )
}

fn c7() -> Outcome {
    let a = profile(&load("ts1.json"))?;
    let b = profile(&load("ts2.json"))?;
    Ok(format!("system 1: {a}; system 2: {b}"))
}

const FD_STEP: f64 = 1e-6;

fn fd(dae: &DaeModel, rows: usize, f: impl Fn(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
    let n = dae.x0.len();
    let mut j = DMatrix::zeros(rows, n);
    for c in 0..n {
        let (mut xp, mut xm) = (dae.x0.clone(), dae.x0.clone());
        xp[c] += FD_STEP;
        xm[c] -= FD_STEP;
        j.set_column(c, &((f(&xp) - f(&xm)) / (2.0 * FD_STEP)));
    }
    j
}

/// Worst column error relative to the column scale.
fn rel_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    let floor = 1e-6 * analytic.amax();
    (0..analytic.ncols())
        .map(|c| (analytic.column(c) - numeric.column(c)).amax() / analytic.column(c).amax().max(floor))
        .fold(0.0, f64::max)
}

fn hygiene(case: &Case, cfg: &AnalysisConfig) -> Result<(f64, f64, f64), String> {
    let an = analyze(case, cfg).map_err(|e| e.to_string())?;
    let case = &an.case;
    let sol = &an.power_flow;
    let dae = DaeModel::new(case, sol).map_err(|e| e.to_string())?;
    let m = build_linear_model(case, sol, cfg.zero_flow_eps).map_err(|e| e.to_string())?;
    let y = |x: &DVector<f64>| dae.solve_algebraic(x, &dae.y0).unwrap();
    let nb = m.bus_ids.len();
    let nl = m.branch_ids.len();
    let a = fd(&dae, m.n_states(), |x| dae.reduced_f(x).unwrap());
    let cv = fd(&dae, nb, |x| DVector::from_iterator(nb, dae.bus_voltages(&y(x)).iter().map(|v| v.norm())));
    let cth = fd(&dae, nb, |x| DVector::from_iterator(nb, dae.bus_voltages(&y(x)).iter().map(|v| v.arg())));
    let ci = fd(&dae, nl, |x| DVector::from_iterator(nl, dae.branch_currents(&y(x)).iter().map(|i| i.norm())));
    let cf = &cth * &a / (2.0 * PI * m.frequency_hz);
    let c_err = [rel_error(&m.c_v, &cv), rel_error(&m.c_theta, &cth), rel_error(&m.c_f, &cf), rel_error(&m.c_i, &ci)]
        .into_iter()
        .fold(0.0, f64::max);
    let part_err = an
        .modal
        .modes
        .iter()
        .filter(|md| md.lambda.norm() >= 1e-3)
        .map(|md| (participation_factors(md).iter().sum::<Complex64>() - 1.0).norm())
        .fold(0.0, f64::max);
    Ok((an.modal.max_residual, c_err, part_err))
}

fn rescaling_invariant(case: &Case, cfg: &AnalysisConfig) -> Result<bool, String> {
    let an: Analysis = analyze(case, cfg).map_err(|e| e.to_string())?;
    let reference = plan_from_analysis(&an, cfg).map_err(|e| e.to_string())?;
    for c in [Complex64::new(-2.5, 0.7), Complex64::from_polar(1e-4, 1.1), Complex64::new(0.0, 30.0)] {
        let mut scaled = an.clone();
        scaled.critical.right *= c;
        scaled.critical.left /= c;
        if plan_from_analysis(&scaled, cfg).map_err(|e| e.to_string())? != reference {
            return Ok(false);
        }
    }
    Ok(true)
}

fn c8() -> Outcome {
    let cfg = AnalysisConfig::default();
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["ts1.json", "ts2.json", "ts1_dcseg1.json", "ts1_dcseg2.json"] {
        let (res, c_err, part) = hygiene(&load(name), &cfg)?;
        ok &= res < 1e-8 && c_err < 1e-5 && part < 1e-9;
        details.push(format!("{name}: residual {res:.1e}, C-block {c_err:.1e}, participation {part:.1e}"));
    }
    for name in ["ts1.json", "ts2.json"] {
        let inv = rescaling_invariant(&load(name), &cfg)?;
        ok &= inv;
        details.push(format!("{name}: plan {} under rescaling", if inv { "unchanged" } else { "CHANGED" }));
    }
    check(ok, details.join("; "))
}

/// `None` when the external case is not available.
fn c9() -> Option<Outcome> {
    let path = std::env::var_os("GRIDSEG_N44_CASE")?;
    Some((|| {
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let case = parse_case(&text).map_err(|e| e.to_string())?.case;
        let plan = run_segmentation(&case, &AnalysisConfig::default()).map_err(|e| e.to_string())?;
        let pairs: BTreeSet<(u32, u32)> =
            plan.cuts.iter().map(|c| (c.from_bus.0.min(c.to_bus.0), c.from_bus.0.max(c.to_bus.0))).collect();
        let pivots: Vec<u32> = plan.cuts.iter().map(|c| c.pivot.0).collect();
        check(
            pairs == BTreeSet::from([(5100, 6500), (3359, 5101)]) && plan.iterations == 2 && pivots == [6500, 3359],
            format!("cuts {pairs:?}, pivots {pivots:?}, {} iterations", plan.iterations),
        )
    })())
}

fn c10() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = oracle::instance();
    let cases = 2000;
    for n in 0..cases {
        let inst = strategy.new_tree(&mut runner).unwrap().current();
        oracle::check(&inst).map_err(|e| format!("instance {n}: {e}: {inst:?}"))?;
    }
    Ok(format!("{cases} random radial instances agree with enumeration"))
}

#[test]
fn acceptance() {
    let criteria: Vec<(u32, &str, Option<Outcome>)> = vec![
        (1, "power flow of both test systems", Some(c1())),
        (2, "critical mode of test system 1", Some(c2())),
        (3, "critical mode of test system 2", Some(c3())),
        (4, "oscillation path of test system 1", Some(c4())),
        (5, "segmentation at 35-40", Some(c5())),
        (6, "counterfactual cut at 40-50", Some(c6())),
        (7, "observability profiles", Some(c7())),
        (8, "numerical hygiene", Some(c8())),
        (9, "Nordic 44 plan", c9()),
        (10, "oracle equivalence on small grids", Some(c10())),
    ];
    // Written to the stdout handle directly so the verdicts show up without
    // `--nocapture`.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    writeln!(out).unwrap();
    for (n, name, outcome) in criteria {
        let line = match outcome {
            Some(Ok(d)) => format!("PASS {n:>2} {name}: {d}"),
            Some(Err(d)) => {
                failed.push(n);
                format!("FAIL {n:>2} {name}: {d}")
            }
            None => format!("SKIP {n:>2} {name}: set GRIDSEG_N44_CASE to run"),
        };
        writeln!(out, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
