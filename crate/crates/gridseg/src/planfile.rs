//! `plan.json`: the segmentation plan with per-iteration provenance.

use anyhow::{Context, Result};
use gridseg_core::segmenter::{ModeSummary, SegmentationPlan};
use gridseg_core::BranchId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDto {
    pub real: f64,
    pub imag: f64,
    pub damping_pct: f64,
    pub frequency_hz: f64,
}

impl From<&ModeSummary> for ModeDto {
    fn from(m: &ModeSummary) -> Self {
        ModeDto {
            real: m.lambda.re,
            imag: m.lambda.im,
            damping_pct: 100.0 * m.damping_ratio,
            frequency_hz: m.frequency_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgesDto {
    pub e1: u32,
    pub e2: u32,
    pub ge1: String,
    pub ge2: String,
    pub group1: Vec<String>,
    pub group2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktrackDto {
    pub branch: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDto {
    pub branch: String,
    #[serde(default)]
    pub circuits: Vec<String>,
    #[serde(default)]
    pub iteration: usize,
    #[serde(default)]
    pub from_bus: u32,
    #[serde(default)]
    pub to_bus: u32,
    #[serde(default)]
    pub pivot: u32,
    #[serde(default)]
    pub ascent_start: u32,
    #[serde(default)]
    pub rating_mva: f64,
    #[serde(default)]
    pub path: Vec<u32>,
    #[serde(default)]
    pub path_branches: Vec<String>,
    #[serde(default)]
    pub backtracks: usize,
    #[serde(default)]
    pub backtrack_log: Vec<BacktrackDto>,
}

/// Only `cuts[].branch` is required when reading a plan back, so a plan can
/// also be written by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(default)]
    pub config: String,
    pub cuts: Vec<CutDto>,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub islands: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_mode: Option<ModeDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<EdgesDto>,
}

impl PlanFile {
    pub fn from_plan(plan: &SegmentationPlan, config_echo: &str) -> PlanFile {
        let ids = |v: &[gridseg_core::MachineId]| v.iter().map(|m| m.0.clone()).collect();
        PlanFile {
            config: config_echo.into(),
            cuts: plan
                .cuts
                .iter()
                .map(|c| CutDto {
                    branch: c.branch.0.clone(),
                    circuits: c.circuits.iter().map(|b| b.0.clone()).collect(),
                    iteration: c.iteration,
                    from_bus: c.from_bus.0,
                    to_bus: c.to_bus.0,
                    pivot: c.pivot.0,
                    ascent_start: c.path.ascent_start.0,
                    rating_mva: c.rating_mva,
                    path: c.path.buses.iter().map(|b| b.0).collect(),
                    path_branches: c.path.branches.iter().map(|b| b.0.clone()).collect(),
                    backtracks: c.path.backtracks,
                    backtrack_log: c
                        .path
                        .backtrack_log()
                        .into_iter()
                        .map(|(b, r)| BacktrackDto { branch: b.0, reason: r.into() })
                        .collect(),
                })
                .collect(),
            iterations: plan.iterations,
            islands: plan.islands.iter().map(|i| i.iter().map(|b| b.0).collect()).collect(),
            critical_mode: Some(ModeDto::from(&plan.critical_mode)),
            edges: Some(EdgesDto {
                e1: plan.edges.e1.0,
                e2: plan.edges.e2.0,
                ge1: plan.edges.ge1.0.clone(),
                ge2: plan.edges.ge2.0.clone(),
                group1: ids(&plan.edges.group1),
                group2: ids(&plan.edges.group2),
            }),
        }
    }

    pub fn cut_ids(&self) -> Vec<BranchId> {
        self.cuts.iter().map(|c| BranchId(c.branch.clone())).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<PlanFile> {
        serde_json::from_str(text).context("parsing plan")
    }
}
