//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a domain error (divergence, no AC path,
//! ...), 2 on a usage, file or parse error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gridseg_core::graph::Topology;
use gridseg_core::modal::{mode_shape, observability, Mode};
use gridseg_core::segmenter::{analyze, evaluate_cuts, identify_edges, plan_from_analysis, Analysis, ModeSummary};
use gridseg_core::{find_path, BranchId, Case, Complex64, DMatrix, Error};

use crate::casefile::{parse_case, serialize_case};
use crate::config::RunConfig;
use crate::output::{num, write_atomic, Table};
use crate::planfile::PlanFile;

#[derive(Debug, Parser)]
#[command(name = "gridseg", version, about = "Oscillation-path tracing and DC segmentation planning for AC grids")]
pub struct Cli {
    /// JSON configuration file (overrides GRIDSEG_CONFIG).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, short = 'o', global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// More diagnostics on stderr.
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModeArg {
    /// 1-based index into the electromechanical mode table (least damped first).
    #[arg(long, default_value_t = 1)]
    pub mode: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Power flow: machine table and pf.csv.
    Pf { case: PathBuf },
    /// State-space model: A.csv, C_v.csv, C_theta.csv, C_f.csv, C_i.csv.
    Linearize { case: PathBuf },
    /// Electromechanical mode table: modes.csv, eigenvalues.csv.
    Modes { case: PathBuf },
    /// Mode shape and observability factors of one mode.
    Shape {
        case: PathBuf,
        #[command(flatten)]
        mode: ModeArg,
    },
    /// Dominant oscillation path of one mode.
    Path {
        case: PathBuf,
        #[command(flatten)]
        mode: ModeArg,
    },
    /// Full segmentation plan: plan.json.
    Segment { case: PathBuf },
    /// Before/after mode comparison of a plan: eval.csv, segmented.json.
    Evaluate {
        case: PathBuf,
        /// Plan file written by `segment`.
        #[arg(long, required_unless_present = "cut")]
        plan: Option<PathBuf>,
        /// Branch to replace by an HVDC link (repeatable), instead of a plan.
        #[arg(long, conflicts_with = "plan")]
        cut: Vec<String>,
    },
}

/// Failure classes mapped to exit statuses.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 1,
        }
    }
}

fn domain(e: Error) -> Failure {
    match e {
        Error::Schema { .. }
        | Error::DuplicateId { .. }
        | Error::DanglingReference { .. }
        | Error::NonPositiveBase { .. }
        | Error::NonPositiveLength(_)
        | Error::InvalidConfig { .. }
        | Error::ModeIndex { .. }
        | Error::UnknownBranch(_)
        | Error::UnknownBus(_) => Failure::Usage(e.into()),
        _ => Failure::Domain(e.into()),
    }
}

type Out<'a> = &'a mut dyn Write;

struct Ctx {
    cfg: RunConfig,
    source: String,
    out_dir: PathBuf,
}

impl Ctx {
    fn table<S: Into<String>>(&self, header: impl IntoIterator<Item = S>) -> Table {
        Table::new(header).meta("source", self.source.clone()).meta("config", self.cfg.echo())
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let p = self.out_dir.join(name);
        write_atomic(&p, contents.as_bytes()).map_err(Failure::Usage)?;
        Ok(p)
    }
}

fn load_case(path: &Path) -> Result<(Case, Vec<String>), Failure> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Failure::Usage(anyhow!("file not found: {}", path.display())))
        }
        Err(e) => return Err(Failure::Usage(anyhow!(e).context(format!("reading {}", path.display())))),
    };
    let parsed =
        parse_case(&text).map_err(|e| Failure::Usage(anyhow!(e).context(format!("parsing {}", path.display()))))?;
    Ok((parsed.case, parsed.provenance))
}

/// Parses `args` and runs the command, writing reports to `out` and
/// diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let e = match &f {
                Failure::Usage(e) | Failure::Domain(e) => e,
            };
            let _ = writeln!(err, "error: {e:#}");
            f.code()
        }
    }
}

fn case_path(cmd: &Command) -> &Path {
    match cmd {
        Command::Pf { case }
        | Command::Linearize { case }
        | Command::Modes { case }
        | Command::Shape { case, .. }
        | Command::Path { case, .. }
        | Command::Segment { case }
        | Command::Evaluate { case, .. } => case,
    }
}

pub fn execute(cli: &Cli, out: Out, err: Out) -> Result<(), Failure> {
    let env_cfg = std::env::var_os("GRIDSEG_CONFIG").map(PathBuf::from);
    let cfg = RunConfig::resolve(env_cfg.as_deref(), cli.config.as_deref()).map_err(Failure::Usage)?;
    let verbosity = cfg.verbosity.max(cli.verbose);
    let path = case_path(&cli.command);
    let (case, provenance) = load_case(path)?;
    if verbosity > 0 {
        for note in &provenance {
            let _ = writeln!(err, "note: {note}");
        }
    }
    let ctx = Ctx {
        out_dir: cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone()),
        source: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        cfg,
    };
    let written = match &cli.command {
        Command::Pf { .. } => cmd_pf(&ctx, &case, out)?,
        Command::Linearize { .. } => cmd_linearize(&ctx, &case, out)?,
        Command::Modes { .. } => cmd_modes(&ctx, &case, out)?,
        Command::Shape { mode, .. } => cmd_shape(&ctx, &case, mode.mode, out)?,
        Command::Path { mode, .. } => cmd_path(&ctx, &case, mode.mode, out)?,
        Command::Segment { .. } => cmd_segment(&ctx, &case, out)?,
        Command::Evaluate { plan, cut, .. } => {
            let cuts = match plan {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .with_context(|| format!("file not found: {}", p.display()))
                        .map_err(Failure::Usage)?;
                    PlanFile::parse(&text).map_err(Failure::Usage)?.cut_ids()
                }
                None => cut.iter().map(|c| BranchId(c.clone())).collect(),
            };
            cmd_evaluate(&ctx, &case, &cuts, out)?
        }
    };
    if verbosity > 0 {
        for p in written {
            let _ = writeln!(err, "wrote {}", p.display());
        }
    }
    Ok(())
}

fn print(out: Out, s: &str) -> Result<(), Failure> {
    out.write_all(s.as_bytes()).context("writing report").map_err(Failure::Usage)
}

fn cmd_pf(ctx: &Ctx, case: &Case, out: Out) -> Result<Vec<PathBuf>, Failure> {
    let case = case.normalize();
    let a = &ctx.cfg.analysis;
    let sol = gridseg_core::solve_power_flow(&case, a.pf_tolerance, a.pf_max_iter).map_err(domain)?;
    let base = case.system_base_mva;
    let mut report = String::new();
    let _ = writeln!(
        report,
        "power flow converged in {} iterations (max mismatch {:.2e} pu)",
        sol.iterations, sol.max_mismatch
    );
    let _ = writeln!(
        report,
        "{:<8} {:>6} {:>10} {:>10} {:>8} {:>9}",
        "machine", "bus", "P [MW]", "Q [Mvar]", "V [pu]", "θ [deg]"
    );
    let mut t = ctx.table(["machine", "bus", "p_mw", "q_mvar", "v_pu", "theta_deg"]);
    for (id, bus, s) in sol.machine_outputs(&case) {
        let v = sol.voltage_at(bus).expect("machine bus is in the solution");
        let (p, q, vm, th) = (s.re * base, s.im * base, v.norm(), v.arg().to_degrees());
        let _ = writeln!(report, "{:<8} {:>6} {:>10.1} {:>10.1} {:>8.4} {:>9.2}", id.0, bus.0, p, q, vm, th);
        t.push(vec![id.0.clone(), bus.0.to_string(), num(p), num(q), num(vm), num(th)]);
    }
    let mut tb = ctx.table(["bus", "v_pu", "theta_deg", "p_mw", "q_mvar"]);
    for (k, id) in sol.bus_ids.iter().enumerate() {
        let (v, s) = (sol.voltage[k], sol.injection[k]);
        tb.push(vec![id.0.to_string(), num(v.norm()), num(v.arg().to_degrees()), num(s.re * base), num(s.im * base)]);
    }
    let mut tf = ctx.table([
        "branch",
        "from",
        "to",
        "p_from_mw",
        "q_from_mvar",
        "p_to_mw",
        "q_to_mvar",
        "i_from_pu",
        "rating_mva",
    ]);
    for (f, br) in sol.branch_flows.iter().zip(&case.branches) {
        tf.push(vec![
            f.id.0.clone(),
            br.from_bus.0.to_string(),
            br.to_bus.0.to_string(),
            num(f.s_from.re * base),
            num(f.s_from.im * base),
            num(f.s_to.re * base),
            num(f.s_to.im * base),
            num(f.i_from.norm()),
            num(br.rating_mva),
        ]);
    }
    print(out, &report)?;
    Ok(vec![
        ctx.write("pf.csv", &t.to_csv())?,
        ctx.write("pf_buses.csv", &tb.to_csv())?,
        ctx.write("pf_branches.csv", &tf.to_csv())?,
    ])
}

fn matrix_table(ctx: &Ctx, m: &DMatrix<f64>, rows: &[String], cols: &[String]) -> Table {
    let mut t = ctx.table(std::iter::once("row".to_string()).chain(cols.iter().cloned()));
    for (i, r) in rows.iter().enumerate() {
        t.push(std::iter::once(r.clone()).chain((0..m.ncols()).map(|j| num(m[(i, j)]))).collect());
    }
    t
}

fn cmd_linearize(ctx: &Ctx, case: &Case, out: Out) -> Result<Vec<PathBuf>, Failure> {
    let case = case.normalize();
    let a = &ctx.cfg.analysis;
    let sol = gridseg_core::solve_power_flow(&case, a.pf_tolerance, a.pf_max_iter).map_err(domain)?;
    let m = gridseg_core::build_linear_model(&case, &sol, a.zero_flow_eps).map_err(domain)?;
    let states: Vec<String> = m.states.iter().map(|s| s.to_string()).collect();
    let v_rows: Vec<String> = m.bus_ids.iter().map(|b| format!("V[{b}]")).collect();
    let th_rows: Vec<String> = m.bus_ids.iter().map(|b| format!("theta[{b}]")).collect();
    let f_rows: Vec<String> = m.bus_ids.iter().map(|b| format!("f[{b}]")).collect();
    let i_rows: Vec<String> = m.branch_ids.iter().map(|b| format!("I[{b}]")).collect();
    let mut c_i = matrix_table(ctx, &m.c_i, &i_rows, &states);
    if !m.regularized_branches.is_empty() {
        let ids: Vec<String> = m.regularized_branches.iter().map(|b| b.0.clone()).collect();
        c_i = c_i.meta("regularized", ids.join(" "));
    }
    print(
        out,
        &format!(
            "{} states, {} buses, {} branches; regularized current rows: {}\n",
            m.n_states(),
            m.bus_ids.len(),
            m.branch_ids.len(),
            m.regularized_branches.len()
        ),
    )?;
    Ok(vec![
        ctx.write("A.csv", &matrix_table(ctx, &m.a, &states, &states).to_csv())?,
        ctx.write("C_v.csv", &matrix_table(ctx, &m.c_v, &v_rows, &states).to_csv())?,
        ctx.write("C_theta.csv", &matrix_table(ctx, &m.c_theta, &th_rows, &states).to_csv())?,
        ctx.write("C_f.csv", &matrix_table(ctx, &m.c_f, &f_rows, &states).to_csv())?,
        ctx.write("C_i.csv", &c_i.to_csv())?,
    ])
}

/// `G1 G2 G3 | G4 G5 G6`, or `-` when the mode has no opposing group.
fn groups(ctx: &Ctx, mode: &Mode, an: &Analysis) -> (String, String) {
    match identify_edges(&mode_shape(mode, &an.model), &ctx.cfg.analysis) {
        Ok(e) => {
            let j = |g: &[gridseg_core::MachineId]| g.iter().map(|m| m.0.as_str()).collect::<Vec<_>>().join(" ");
            (j(&e.group1), j(&e.group2))
        }
        Err(_) => ("-".into(), "-".into()),
    }
}

fn analysis(ctx: &Ctx, case: &Case) -> Result<Analysis, Failure> {
    analyze(case, &ctx.cfg.analysis).map_err(domain)
}

fn nth_mode(an: &Analysis, k: usize) -> Result<Mode, Failure> {
    let em = an.modal.electromechanical();
    if k == 0 || k > em.len() {
        return Err(domain(Error::ModeIndex { index: k, available: em.len() }));
    }
    Ok(em[k - 1].clone())
}

fn cmd_modes(ctx: &Ctx, case: &Case, out: Out) -> Result<Vec<PathBuf>, Failure> {
    let an = analysis(ctx, case)?;
    let em = an.modal.electromechanical();
    let mut report = String::new();
    let _ = writeln!(report, "{:>3} {:>9} {:>9} {:>8} {:>9}  groups", "#", "real", "imag", "damp %", "freq Hz");
    let mut t = ctx.table(["mode", "real", "imag", "damping_pct", "frequency_hz", "speed_share", "group1", "group2"]);
    for (k, m) in em.iter().enumerate() {
        let (g1, g2) = groups(ctx, m, &an);
        let _ = writeln!(
            report,
            "{:>3} {:>9.3} {:>9.3} {:>8.2} {:>9.3}  {} | {}",
            k + 1,
            m.lambda.re,
            m.lambda.im,
            100.0 * m.damping_ratio,
            m.frequency_hz,
            g1,
            g2
        );
        t.push(vec![
            (k + 1).to_string(),
            num(m.lambda.re),
            num(m.lambda.im),
            num(100.0 * m.damping_ratio),
            num(m.frequency_hz),
            num(m.speed_share),
            g1,
            g2,
        ]);
    }
    let mut te = ctx.table(["index", "real", "imag", "damping_pct", "frequency_hz"]);
    for (k, l) in an.modal.eigenvalues.iter().enumerate() {
        te.push(vec![
            k.to_string(),
            num(l.re),
            num(l.im),
            num(100.0 * gridseg_core::modal::damping_ratio(*l)),
            num(gridseg_core::modal::frequency_hz(*l)),
        ]);
    }
    print(out, &report)?;
    Ok(vec![ctx.write("modes.csv", &t.to_csv())?, ctx.write("eigenvalues.csv", &te.to_csv())?])
}

fn polar_table<'a>(
    ctx: &Ctx,
    mode: &Mode,
    ids: impl Iterator<Item = String>,
    z: impl Iterator<Item = &'a Complex64>,
) -> Table {
    let mut t = ctx
        .table(["id", "magnitude", "phase_deg"])
        .meta("mode", format!("{} {}", num(mode.lambda.re), num(mode.lambda.im)));
    for (id, z) in ids.zip(z) {
        t.push(vec![id, num(z.norm()), num(z.arg().to_degrees())]);
    }
    t
}

fn cmd_shape(ctx: &Ctx, case: &Case, k: usize, out: Out) -> Result<Vec<PathBuf>, Failure> {
    let an = analysis(ctx, case)?;
    let mode = nth_mode(&an, k)?;
    let shape = mode_shape(&mode, &an.model);
    let obs = observability(&mode, &an.model);
    let mut report = format!(
        "mode {k}: {:.3} {:+.3}j ({:.2} %, {:.3} Hz)\n{:<8} {:>9} {:>9}\n",
        mode.lambda.re,
        mode.lambda.im,
        100.0 * mode.damping_ratio,
        mode.frequency_hz,
        "machine",
        "|v|",
        "∠v [deg]"
    );
    for i in 0..shape.entries.len() {
        let _ = writeln!(report, "{:<8} {:>9.3} {:>9.1}", shape.machines[i].0, shape.magnitude(i), shape.phase_deg(i));
    }
    let m = &an.model;
    let buses = || m.bus_ids.iter().map(|b| b.0.to_string());
    print(out, &report)?;
    Ok(vec![
        ctx.write(
            "shape.csv",
            &polar_table(ctx, &mode, shape.machines.iter().map(|x| x.0.clone()), shape.entries.iter()).to_csv(),
        )?,
        ctx.write("obs_v.csv", &polar_table(ctx, &mode, buses(), obs.phi_v.iter()).to_csv())?,
        ctx.write("obs_f.csv", &polar_table(ctx, &mode, buses(), obs.phi_f.iter()).to_csv())?,
        ctx.write(
            "obs_i.csv",
            &polar_table(ctx, &mode, m.branch_ids.iter().map(|b| b.0.clone()), obs.phi_i.iter()).to_csv(),
        )?,
    ])
}

fn join_buses(buses: &[gridseg_core::BusId]) -> String {
    buses.iter().map(|b| b.0.to_string()).collect::<Vec<_>>().join("-")
}

fn cmd_path(ctx: &Ctx, case: &Case, k: usize, out: Out) -> Result<Vec<PathBuf>, Failure> {
    let an = analysis(ctx, case)?;
    let mode = nth_mode(&an, k)?;
    let cfg = &ctx.cfg.analysis;
    let edges = identify_edges(&mode_shape(&mode, &an.model), cfg).map_err(domain)?;
    let obs = observability(&mode, &an.model);
    let phi_f: Vec<Complex64> = obs.phi_f.iter().copied().collect();
    let phi_i: Vec<Complex64> = obs.phi_i.iter().copied().collect();
    let topo = Topology::from_case(&an.case);
    let path = find_path(&topo, &phi_f, &phi_i, edges.e1, edges.e2, &Default::default(), cfg).map_err(domain)?;
    let mut report = String::new();
    let _ = writeln!(report, "edges: E1 = {} ({}), E2 = {} ({})", edges.e1, edges.ge1, edges.e2, edges.ge2);
    let _ = writeln!(report, "path: {}", join_buses(&path.buses));
    let _ = writeln!(report, "pivot: {}", path.pivot);
    let _ = writeln!(report, "ascent: {}", path.ascent_start);
    let _ = writeln!(report, "backtracks: {}", path.backtracks);
    for (b, reason) in path.backtrack_log() {
        let _ = writeln!(report, "  excluded {b}: {reason}");
    }
    let mut t = ctx.table(["position", "bus", "abs_phi_f", "phase_phi_f_deg", "role"]);
    for (p, &bus) in path.buses.iter().enumerate() {
        let z = phi_f[topo.index_of(bus).expect("path bus exists")];
        let mut roles = Vec::new();
        if bus == path.e1 {
            roles.push("e1");
        }
        if bus == path.pivot {
            roles.push("pivot");
        }
        if bus == path.ascent_start {
            roles.push("ascent");
        }
        if bus == path.e2 {
            roles.push("e2");
        }
        t.push(vec![p.to_string(), bus.0.to_string(), num(z.norm()), num(z.arg().to_degrees()), roles.join(" ")]);
    }
    let mut tb = ctx.table(["position", "branch", "abs_phi_i", "phase_phi_i_deg"]);
    for (p, id) in path.branches.iter().enumerate() {
        let z = phi_i[topo.branch_index(id).expect("path branch exists")];
        tb.push(vec![p.to_string(), id.0.clone(), num(z.norm()), num(z.arg().to_degrees())]);
    }
    print(out, &report)?;
    Ok(vec![ctx.write("path.csv", &t.to_csv())?, ctx.write("path_branches.csv", &tb.to_csv())?])
}

fn describe_mode(m: &ModeSummary) -> String {
    format!(
        "{:.3} ± j{:.3} ({:.2} %, {:.3} Hz)",
        m.lambda.re,
        m.lambda.im.abs(),
        100.0 * m.damping_ratio,
        m.frequency_hz
    )
}

fn cmd_segment(ctx: &Ctx, case: &Case, out: Out) -> Result<Vec<PathBuf>, Failure> {
    let an = analysis(ctx, case)?;
    let plan = plan_from_analysis(&an, &ctx.cfg.analysis).map_err(domain)?;
    let mut report = String::new();
    let _ = writeln!(report, "critical mode: {}", describe_mode(&plan.critical_mode));
    let e = &plan.edges;
    let _ = writeln!(report, "edges: E1 = {} ({}), E2 = {} ({})", e.e1, e.ge1, e.e2, e.ge2);
    if plan.cuts.is_empty() {
        let _ = writeln!(report, "edges already in different islands; nothing to cut");
    }
    for c in &plan.cuts {
        let _ = writeln!(
            report,
            "iteration {}: path {}, pivot {}, ascent {}, backtracks {}",
            c.iteration,
            join_buses(&c.path.buses),
            c.pivot,
            c.path.ascent_start,
            c.path.backtracks
        );
        let _ = writeln!(report, "cut: {}", c.branch);
        let _ = writeln!(
            report,
            "  rating {:.0} MVA, circuits {}",
            c.rating_mva,
            c.circuits.iter().map(|b| b.0.as_str()).collect::<Vec<_>>().join(" ")
        );
    }
    let islands: Vec<String> = plan
        .islands
        .iter()
        .map(|i| format!("{{{}}}", i.iter().map(|b| b.0.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    let _ = writeln!(report, "islands: {}", islands.join(" "));
    print(out, &report)?;
    let file = PlanFile::from_plan(&plan, &ctx.cfg.echo());
    Ok(vec![ctx.write("plan.json", &file.to_json())?])
}

fn cmd_evaluate(ctx: &Ctx, case: &Case, cuts: &[BranchId], out: Out) -> Result<Vec<PathBuf>, Failure> {
    let rep = evaluate_cuts(case, cuts, &ctx.cfg.analysis).map_err(domain)?;
    let mut report = String::new();
    let ids: Vec<&str> = cuts.iter().map(|c| c.0.as_str()).collect();
    let _ = writeln!(report, "cuts: {}", if ids.is_empty() { "none".into() } else { ids.join(" ") });
    let _ = writeln!(report, "target mode: {}", describe_mode(&rep.target));
    let _ = writeln!(
        report,
        "{:>3} | {:>8} {:>8} {:>7} {:>7} | {:>8} {:>8} {:>7} {:>7}",
        "#", "real", "imag", "damp %", "f Hz", "real", "imag", "damp %", "f Hz"
    );
    let cell = |m: Option<&ModeSummary>| match m {
        Some(m) => format!(
            "{:>8.3} {:>8.3} {:>7.2} {:>7.3}",
            m.lambda.re,
            m.lambda.im,
            100.0 * m.damping_ratio,
            m.frequency_hz
        ),
        None => format!("{:>8} {:>8} {:>7} {:>7}", "", "", "", ""),
    };
    for k in 0..rep.base_modes.len().max(rep.modes.len()) {
        let _ = writeln!(report, "{:>3} | {} | {}", k + 1, cell(rep.base_modes.get(k)), cell(rep.modes.get(k)));
    }
    let verdict = if rep.suppressed { "suppressed" } else { "not suppressed" };
    let _ = writeln!(report, "verdict: {verdict}");
    let mut t = ctx
        .table(["stage", "mode", "real", "imag", "damping_pct", "frequency_hz"])
        .meta("cuts", ids.join(" "))
        .meta("verdict", verdict);
    for (stage, modes) in [("before", &rep.base_modes), ("after", &rep.modes)] {
        for (k, m) in modes.iter().enumerate() {
            t.push(vec![
                stage.into(),
                (k + 1).to_string(),
                num(m.lambda.re),
                num(m.lambda.im),
                num(100.0 * m.damping_ratio),
                num(m.frequency_hz),
            ]);
        }
    }
    print(out, &report)?;
    Ok(vec![ctx.write("eval.csv", &t.to_csv())?, ctx.write("segmented.json", &serialize_case(&rep.segmented_case))?])
}
