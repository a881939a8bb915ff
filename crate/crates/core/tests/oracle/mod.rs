//! Exhaustive oracle for the greedy path search on small radial grids.
//!
//! Every simple e1→e2 path is enumerated and filtered by the acceptance rules
//! (descent while in phase with e1, the first opposed bus starts the ascent,
//! strict ascent afterwards). On a radial grid at most one path survives;
//! the search must return exactly it, or report exhaustion when none does.

#![allow(dead_code)]

use std::collections::BTreeSet;

use gridseg_core::graph::Topology;
use gridseg_core::pathfinder::{certify, check_invariants, find_path, phase_gap_deg, PathEvent};
use gridseg_core::{AnalysisConfig, BranchId, BusId, Complex64, Error};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct Instance {
    pub parents: Vec<usize>,
    pub labels: Vec<u32>,
    pub e1: usize,
    pub e2: usize,
    pub phi_f: Vec<Complex64>,
    pub phi_i: Vec<Complex64>,
}

impl Instance {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents.iter().enumerate().map(|(k, &p)| (p, k + 1)).collect()
    }

    pub fn topology(&self) -> Topology {
        let n = self.parents.len() + 1;
        Topology::build(
            (0..n as u32).map(|i| BusId(100 + i)).collect(),
            self.labels.iter().map(|l| BranchId(format!("L{l:02}"))).collect(),
            self.edges(),
        )
    }
}

/// All simple paths between two buses, as branch index sequences.
pub fn simple_paths(n: usize, edges: &[(usize, usize)], from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(
        at: usize,
        to: usize,
        edges: &[(usize, usize)],
        seen: &mut Vec<bool>,
        trail: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == to {
            out.push(trail.clone());
            return;
        }
        for (k, &(a, b)) in edges.iter().enumerate() {
            let next = if a == at {
                b
            } else if b == at {
                a
            } else {
                continue;
            };
            if seen[next] {
                continue;
            }
            seen[next] = true;
            trail.push(k);
            walk(next, to, edges, seen, trail, out);
            trail.pop();
            seen[next] = false;
        }
    }
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut out = Vec::new();
    walk(from, to, edges, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Buses along a branch sequence, or `None` if the rules reject it.
pub fn admissible(inst: &Instance, branches: &[usize]) -> Option<Vec<usize>> {
    let edges = inst.edges();
    let mut buses = vec![inst.e1];
    let mut ascending = false;
    for &k in branches {
        let i = *buses.last().unwrap();
        let j = if edges[k].0 == i { edges[k].1 } else { edges[k].0 };
        let opposed = phase_gap_deg(inst.phi_f[j], inst.phi_f[inst.e1]) > 90.0;
        let (mi, mj) = (inst.phi_f[i].norm(), inst.phi_f[j].norm());
        if ascending {
            if !(opposed && mj > mi) {
                return None;
            }
        } else if opposed {
            ascending = true;
        } else if mj >= mi {
            return None;
        }
        buses.push(j);
    }
    Some(buses)
}

fn polar(m: f64, deg: f64) -> Complex64 {
    Complex64::from_polar(m, deg.to_radians())
}

pub fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=8)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
            (
                parents,
                Just((0..(n as u32 - 1)).collect::<Vec<u32>>()).prop_shuffle(),
                (0..n, 0..n - 1),
                prop::collection::vec((0.01f64..1.2, -180.0f64..180.0), n),
                prop::collection::vec((0.01f64..1.0, -180.0f64..180.0), n - 1),
                prop::bool::weighted(0.75),
                (0.0f64..1.0, prop::bool::ANY),
                prop::collection::vec((0.0f64..1.0, -30.0f64..30.0), n),
            )
        })
        .prop_map(|(parents, labels, (e1, e2r), random_f, random_i, patterned, (pv, late), shape)| {
            let n = parents.len() + 1;
            let e2 = if e2r >= e1 { e2r + 1 } else { e2r };
            let mut inst = Instance {
                parents,
                labels,
                e1,
                e2,
                phi_f: random_f.iter().map(|&(m, d)| polar(m, d)).collect(),
                phi_i: random_i.iter().map(|&(m, d)| polar(m, d)).collect(),
            };
            if patterned {
                // Impose the descent/ascent pattern along the unique path.
                let path = simple_paths(n, &inst.edges(), e1, e2).pop().unwrap();
                let buses = admissible_buses(&inst, &path);
                let len = buses.len();
                let pivot = ((pv * (len - 1) as f64) as usize).clamp(1, len - 1);
                let ascent = if late && pivot + 1 < len { pivot + 1 } else { pivot };
                for (p, &b) in buses.iter().enumerate() {
                    let depth = (p as f64 - pivot as f64).abs() / len as f64;
                    let m = 0.02 + depth + 0.01 * shape[b].0;
                    let phase = if p < ascent { shape[b].1 } else { 180.0 + shape[b].1 };
                    inst.phi_f[b] = polar(m, phase);
                }
            }
            inst
        })
}

fn admissible_buses(inst: &Instance, branches: &[usize]) -> Vec<usize> {
    let edges = inst.edges();
    let mut buses = vec![inst.e1];
    for &k in branches {
        let i = *buses.last().unwrap();
        buses.push(if edges[k].0 == i { edges[k].1 } else { edges[k].0 });
    }
    buses
}

fn ensure(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

/// Runs the search on `inst` and compares it with the oracle.
pub fn check(inst: &Instance) -> Result<(), String> {
    let topo = inst.topology();
    let cfg = AnalysisConfig::default();
    let n = topo.bus_count();
    let candidates: Vec<Vec<usize>> =
        simple_paths(n, &inst.edges(), inst.e1, inst.e2).iter().filter_map(|p| admissible(inst, p)).collect();
    ensure(candidates.len() <= 1, "several admissible paths")?;
    let none = BTreeSet::new();
    let result = find_path(&topo, &inst.phi_f, &inst.phi_i, topo.bus_ids[inst.e1], topo.bus_ids[inst.e2], &none, &cfg);
    match (candidates.first(), result) {
        (Some(expected), Ok(path)) => {
            let got: Vec<usize> = path.buses.iter().map(|b| topo.index_of(*b).unwrap()).collect();
            ensure(&got == expected, "different path")?;
            certify(&topo, &inst.phi_f, &inst.phi_i, &path, &none, &cfg)?;
            check_invariants(&topo, &inst.phi_f, &path, &cfg).map_err(|e| format!("{e:?}"))?;
            let pops = path.log.iter().filter(|e| matches!(e, PathEvent::Pop { .. })).count();
            ensure(pops == path.backtracks, "backtrack count")?;
            // Pivot is the weakest bus on the path.
            let weakest = got
                .iter()
                .copied()
                .min_by(|&a, &b| inst.phi_f[a].norm().partial_cmp(&inst.phi_f[b].norm()).unwrap())
                .unwrap();
            ensure(path.pivot == topo.bus_ids[weakest], "pivot is not the weakest bus")?;
            // Greedy maximality: every stronger branch left at a path bus was tried and rejected.
            let rejected: BTreeSet<BranchId> = path
                .log
                .iter()
                .filter_map(|e| match e {
                    PathEvent::DeadEnd { branch, .. } | PathEvent::Pop { branch, .. } => Some(branch.clone()),
                    _ => None,
                })
                .collect();
            for (p, id) in path.branches.iter().enumerate() {
                let chosen = topo.branch_index(id).unwrap();
                for &k in &topo.incident[got[p]] {
                    let other = topo.other_end(k, got[p]);
                    if k != chosen && !got[..p].contains(&other) && inst.phi_i[k].norm() > inst.phi_i[chosen].norm() {
                        ensure(rejected.contains(&topo.branch_ids[k]), "stronger branch skipped")?;
                    }
                }
            }
        }
        (None, Err(Error::Exhausted { .. })) => {}
        (expected, got) => return Err(format!("oracle {expected:?}, search {got:?}")),
    }
    Ok(())
}
