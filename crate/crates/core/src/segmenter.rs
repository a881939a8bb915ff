//! Segmentation planning: edge identification from the critical mode shape,
//! the path → cut → connectivity loop, and evaluation of a segmented grid.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::case::{BranchId, BusId, Case, Injection, MachineId};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::linearizer::{build_linear_model, StateSpaceModel};
use crate::modal::{eigen_analysis, mode_shape, observability, ModalAnalysis, Mode, ModeShape, ObservabilityFactors};
use crate::pathfinder::{find_path, phase_gap_deg, OscillationPath};
use crate::powerflow::{machine_output_by_bus, reassign_slacks, solve_power_flow, PowerFlowSolution};

/// Edges of the inter-area path and the two coherent groups.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeReport {
    pub e1: BusId,
    pub e2: BusId,
    pub ge1: MachineId,
    pub ge2: MachineId,
    pub group1: Vec<MachineId>,
    pub group2: Vec<MachineId>,
}

/// Eigenvalue summary used in plans and reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSummary {
    pub lambda: Complex64,
    pub damping_ratio: f64,
    pub frequency_hz: f64,
}

impl From<&Mode> for ModeSummary {
    fn from(m: &Mode) -> Self {
        ModeSummary { lambda: m.lambda, damping_ratio: m.damping_ratio, frequency_hz: m.frequency_hz }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedCut {
    pub branch: BranchId,
    /// Original circuits replaced by this cut.
    pub circuits: Vec<BranchId>,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// 1-based outer-loop iteration that selected the cut.
    pub iteration: usize,
    pub path: OscillationPath,
    pub pivot: BusId,
    /// Rating of the replacement link: the summed rating of the circuits.
    pub rating_mva: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationPlan {
    pub cuts: Vec<PlannedCut>,
    /// Bus partition after the cuts, each sorted, ordered by smallest bus.
    pub islands: Vec<Vec<BusId>>,
    pub iterations: usize,
    pub critical_mode: ModeSummary,
    pub edges: EdgeReport,
}

impl SegmentationPlan {
    pub fn cut_ids(&self) -> Vec<BranchId> {
        self.cuts.iter().map(|c| c.branch.clone()).collect()
    }
}

/// Everything computed once per case before the segmentation loop.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// The normalized case all indices refer to.
    pub case: Case,
    pub power_flow: PowerFlowSolution,
    pub model: StateSpaceModel,
    pub modal: ModalAnalysis,
    pub critical: Mode,
}

impl Analysis {
    pub fn shape(&self) -> ModeShape {
        mode_shape(&self.critical, &self.model)
    }

    pub fn observability(&self) -> ObservabilityFactors {
        observability(&self.critical, &self.model)
    }
}

/// Power flow, linearization and modal analysis of the normalized case.
pub fn analyze(case: &Case, cfg: &AnalysisConfig) -> Result<Analysis> {
    cfg.validate()?;
    case.validate()?;
    let case = case.normalize();
    let power_flow = solve_power_flow(&case, cfg.pf_tolerance, cfg.pf_max_iter)?;
    let model = build_linear_model(&case, &power_flow, cfg.zero_flow_eps)?;
    let modal = eigen_analysis(&model, cfg)?;
    let critical = modal.critical()?;
    Ok(Analysis { case, power_flow, model, modal, critical })
}

/// Edges and coherent groups from a normalized mode shape.
pub fn identify_edges(shape: &ModeShape, cfg: &AnalysisConfig) -> Result<EdgeReport> {
    let n = shape.entries.len();
    let argmax = |filter: &dyn Fn(usize) -> bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for k in (0..n).filter(|&k| filter(k)) {
            if best.is_none_or(|b| shape.magnitude(k) > shape.magnitude(b)) {
                best = Some(k);
            }
        }
        best
    };
    let g1 = argmax(&|_| true).ok_or(Error::NoOpposingGroup)?;
    let ref1 = shape.entries[g1];
    let g2 =
        argmax(&|k| phase_gap_deg(shape.entries[k], ref1) > cfg.opposing_phase_deg).ok_or(Error::NoOpposingGroup)?;
    let group = |edge: usize| -> Vec<MachineId> {
        (0..n)
            .filter(|&k| {
                shape.magnitude(k) > cfg.shape_threshold
                    && phase_gap_deg(shape.entries[k], shape.entries[edge]) <= cfg.group_phase_deg
            })
            .map(|k| shape.machines[k].clone())
            .collect()
    };
    Ok(EdgeReport {
        e1: shape.buses[g1],
        e2: shape.buses[g2],
        ge1: shape.machines[g1].clone(),
        ge2: shape.machines[g2].clone(),
        group1: group(g1),
        group2: group(g2),
    })
}

/// The path branch incident to the pivot with the largest `|φ_I|`, lowest id
/// on ties.
pub fn select_cut(topo: &Topology, path: &OscillationPath, phi_i: &[Complex64]) -> Result<BranchId> {
    let p = path.position(path.pivot).ok_or(Error::UnknownBus(path.pivot))?;
    let mut cands: Vec<&BranchId> = Vec::new();
    if p > 0 {
        cands.push(&path.branches[p - 1]);
    }
    if p < path.branches.len() {
        cands.push(&path.branches[p]);
    }
    let mag = |id: &BranchId| -> Result<f64> {
        Ok(phi_i[topo.branch_index(id).ok_or_else(|| Error::UnknownBranch(id.clone()))?].norm())
    };
    let mut best: Option<(&BranchId, f64)> = None;
    for id in cands {
        let m = mag(id)?;
        best = match best {
            Some((b, bm)) if bm > m || (bm == m && b < id) => Some((b, bm)),
            _ => Some((id, m)),
        };
    }
    best.map(|(b, _)| b.clone()).ok_or(Error::UnknownBus(path.pivot))
}

/// True when `e1` and `e2` are in different components once `cuts` are
/// removed.
pub fn is_segmented(topo: &Topology, cuts: &BTreeSet<BranchId>, e1: BusId, e2: BusId) -> Result<bool> {
    let removed = cuts
        .iter()
        .map(|id| topo.branch_index(id).ok_or_else(|| Error::UnknownBranch(id.clone())))
        .collect::<Result<BTreeSet<usize>>>()?;
    let a = topo.index_of(e1).ok_or(Error::UnknownBus(e1))?;
    let b = topo.index_of(e2).ok_or(Error::UnknownBus(e2))?;
    Ok(!topo.connected(a, b, &removed))
}

fn islands_after(topo: &Topology, cuts: &BTreeSet<BranchId>) -> Vec<Vec<BusId>> {
    let removed: BTreeSet<usize> = cuts.iter().filter_map(|id| topo.branch_index(id)).collect();
    topo.components(&removed)
        .into_iter()
        .map(|c| {
            let mut ids: Vec<BusId> = c.into_iter().map(|i| topo.bus_ids[i]).collect();
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Runs the segmentation loop on an existing analysis.
pub fn plan_from_analysis(analysis: &Analysis, cfg: &AnalysisConfig) -> Result<SegmentationPlan> {
    let shape = analysis.shape();
    let edges = identify_edges(&shape, cfg)?;
    let obs = analysis.observability();
    let phi_f: Vec<Complex64> = obs.phi_f.iter().copied().collect();
    let phi_i: Vec<Complex64> = obs.phi_i.iter().copied().collect();
    let topo = Topology::from_case(&analysis.case);
    let cap = topo.branch_count();
    let mut cut_set = BTreeSet::new();
    let mut cuts: Vec<PlannedCut> = Vec::new();
    let mut iterations = 0;

    while !is_segmented(&topo, &cut_set, edges.e1, edges.e2)? {
        if iterations == cap {
            return Err(Error::IterationCap { cap });
        }
        iterations += 1;
        let path = find_path(&topo, &phi_f, &phi_i, edges.e1, edges.e2, &cut_set, cfg)?;
        let cut = select_cut(&topo, &path, &phi_i)?;
        let branch = analysis.case.branch(&cut).ok_or_else(|| Error::UnknownBranch(cut.clone()))?;
        if !(branch.from_bus == path.pivot || branch.to_bus == path.pivot) || !cut_set.insert(cut.clone()) {
            return Err(Error::IterationCap { cap });
        }
        cuts.push(PlannedCut {
            branch: cut,
            circuits: branch.original_circuits(),
            from_bus: branch.from_bus,
            to_bus: branch.to_bus,
            iteration: iterations,
            pivot: path.pivot,
            rating_mva: branch.rating_mva,
            path,
        });
    }
    Ok(SegmentationPlan {
        islands: islands_after(&topo, &cut_set),
        cuts,
        iterations,
        critical_mode: ModeSummary::from(&analysis.critical),
        edges,
    })
}

/// Analysis followed by the segmentation loop.
pub fn run_segmentation(case: &Case, cfg: &AnalysisConfig) -> Result<SegmentationPlan> {
    plan_from_analysis(&analyze(case, cfg)?, cfg)
}

/// Finds a branch of the normalized case by its id or by one of the
/// original circuits it aggregates.
fn resolve_branch<'a>(case: &'a Case, id: &BranchId) -> Result<&'a crate::case::Branch> {
    case.branch(id)
        .or_else(|| case.branches.iter().find(|b| b.circuits.contains(id)))
        .ok_or_else(|| Error::UnknownBranch(id.clone()))
}

/// Replaces each cut branch by constant-power injections carrying its base
/// active flow (Q = 0) and assigns one slack per resulting island. Former
/// slack machines become PV at their base dispatch.
pub fn apply_cuts(case: &Case, base: &PowerFlowSolution, cuts: &[BranchId]) -> Result<Case> {
    let mut out = case.clone();
    let mut removed = BTreeSet::new();
    for id in cuts {
        let br = resolve_branch(case, id)?;
        if !removed.insert(br.id.clone()) {
            continue;
        }
        let k = case.branches.iter().position(|b| b.id == br.id).expect("resolved branch exists");
        let flow = &base.branch_flows[k];
        out.injections.push(Injection {
            label: format!("{}:{}", br.id, br.from_bus),
            bus: br.from_bus,
            p: -flow.s_from.re,
            q: 0.0,
        });
        out.injections.push(Injection {
            label: format!("{}:{}", br.id, br.to_bus),
            bus: br.to_bus,
            p: -flow.s_to.re,
            q: 0.0,
        });
    }
    out.branches.retain(|b| !removed.contains(&b.id));
    let outputs = machine_output_by_bus(case, base);
    for bus in &mut out.buses {
        if let Some(s) = outputs.get(&bus.id) {
            if bus.kind == crate::case::BusKind::Slack {
                bus.p_set = s.re;
            }
        }
    }
    reassign_slacks(&out)
}

/// Post-segmentation mode table and suppression verdict.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    /// Electromechanical modes of the intact case, least damped first.
    pub base_modes: Vec<ModeSummary>,
    /// The base case's critical mode.
    pub target: ModeSummary,
    /// Electromechanical modes after segmentation, least damped first.
    pub modes: Vec<ModeSummary>,
    pub suppressed: bool,
    pub islands: Vec<Vec<BusId>>,
    pub slacks: Vec<BusId>,
    pub segmented_case: Case,
}

/// Evaluates the segmented grid obtained by replacing `cuts` with HVDC links.
pub fn evaluate_cuts(case: &Case, cuts: &[BranchId], cfg: &AnalysisConfig) -> Result<EvaluationReport> {
    let base = analyze(case, cfg)?;
    let base_modes: Vec<ModeSummary> = base.modal.electromechanical().iter().map(ModeSummary::from).collect();
    let target = ModeSummary::from(&base.critical);
    let (segmented, modes) = if cuts.is_empty() {
        (base.case.clone(), base_modes.clone())
    } else {
        let seg = apply_cuts(&base.case, &base.power_flow, cuts)?;
        let pf = solve_power_flow(&seg, cfg.pf_tolerance, cfg.pf_max_iter)?;
        let model = build_linear_model(&seg, &pf, cfg.zero_flow_eps)?;
        let modal = eigen_analysis(&model, cfg)?;
        let modes = modal.electromechanical().iter().map(ModeSummary::from).collect();
        (seg, modes)
    };
    let suppressed = !modes.iter().any(|m: &ModeSummary| {
        (m.frequency_hz - target.frequency_hz).abs() <= cfg.suppression_window_hz
            && m.damping_ratio < cfg.suppression_damping
    });
    let islands = crate::powerflow::islands(&segmented);
    let slacks = islands
        .iter()
        .map(|isl| {
            *isl.iter()
                .find(|&&b| segmented.bus(b).map(|x| x.kind) == Some(crate::case::BusKind::Slack))
                .expect("every island has a slack after assignment")
        })
        .collect();
    Ok(EvaluationReport { base_modes, target, modes, suppressed, islands, slacks, segmented_case: segmented })
}

/// Evaluates a plan produced by [`run_segmentation`].
pub fn evaluate_plan(case: &Case, plan: &SegmentationPlan, cfg: &AnalysisConfig) -> Result<EvaluationReport> {
    evaluate_cuts(case, &plan.cut_ids(), cfg)
}
