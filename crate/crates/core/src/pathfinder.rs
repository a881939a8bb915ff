//! Greedy tracing of the dominant inter-area oscillation path.
//!
//! Starting at edge bus `e1`, the search repeatedly takes the feasible
//! incident branch with the largest branch-current observability `|φ_I|`.
//! While descending it accepts a bus whose `|φ_f|` is lower than the current
//! one; the first bus whose `φ_f` phase differs from `e1` by more than the
//! opposing angle starts the ascent, after which `|φ_f|` must increase until
//! `e2` is reached. A rejected branch is excluded as a dead end; a bus with no
//! feasible branch left is popped and the branch leading to it excluded.
//!
//! Every decision is recorded in a [`PathEvent`] log so the result can be
//! certified independently by [`certify`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::case::{BranchId, BusId};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::graph::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeadEndReason {
    NotDescending,
    NotAscending,
}

impl DeadEndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DeadEndReason::NotDescending => "not_descending",
            DeadEndReason::NotAscending => "not_ascending",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathEvent {
    /// Path extended by a bus with lower (descent) or higher (ascent) `|φ_f|`.
    Accept { from: BusId, to: BusId, branch: BranchId },
    /// Path extended by the first bus in phase opposition to `e1`.
    Ascent { from: BusId, to: BusId, branch: BranchId },
    /// Candidate rejected and excluded.
    DeadEnd { at: BusId, branch: BranchId, reason: DeadEndReason },
    /// Bus removed from the path; the branch that reached it is excluded.
    Pop { bus: BusId, branch: BranchId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationPath {
    pub e1: BusId,
    pub e2: BusId,
    pub buses: Vec<BusId>,
    pub branches: Vec<BranchId>,
    /// Bus with the minimum `|φ_f|` on the path.
    pub pivot: BusId,
    /// First bus of the ascending sub-path.
    pub ascent_start: BusId,
    /// Branches excluded during the search, including the pre-excluded set.
    pub excluded: BTreeSet<BranchId>,
    pub log: Vec<PathEvent>,
    /// Number of buses popped from the path.
    pub backtracks: usize,
}

impl OscillationPath {
    /// `(branch, reason)` for every dead end and pop, in order.
    pub fn backtrack_log(&self) -> Vec<(BranchId, &'static str)> {
        self.log
            .iter()
            .filter_map(|e| match e {
                PathEvent::DeadEnd { branch, reason, .. } => Some((branch.clone(), reason.as_str())),
                PathEvent::Pop { branch, .. } => Some((branch.clone(), "backtrack")),
                _ => None,
            })
            .collect()
    }

    pub fn position(&self, bus: BusId) -> Option<usize> {
        self.buses.iter().position(|&b| b == bus)
    }
}

/// Absolute phase difference in degrees, in `[0, 180]`.
pub fn phase_gap_deg(a: Complex64, b: Complex64) -> f64 {
    (a * b.conj()).arg().abs().to_degrees()
}

/// `a < b` by more than the relative tie tolerance.
fn strictly_less(a: f64, b: f64, tol: f64) -> bool {
    b - a > tol * a.abs().max(b.abs())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Descending,
    Ascending,
}

/// Feasible branches at `bus`: not excluded, not on the path, far end not on
/// the path.
fn feasible(topo: &Topology, bus: usize, excluded: &BTreeSet<usize>, on_path: &[bool]) -> Vec<usize> {
    topo.incident[bus].iter().copied().filter(|&k| !excluded.contains(&k) && !on_path[topo.other_end(k, bus)]).collect()
}

/// Largest `|φ_I|` among `candidates`, lowest branch id on ties.
fn greedy_pick(topo: &Topology, phi_i: &[Complex64], candidates: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &k in candidates {
        best = Some(match best {
            None => k,
            Some(b) => {
                let (mk, mb) = (phi_i[k].norm(), phi_i[b].norm());
                if strictly_less(mb, mk, tol) {
                    k
                } else if strictly_less(mk, mb, tol) {
                    b
                } else if topo.branch_ids[k] < topo.branch_ids[b] {
                    k
                } else {
                    b
                }
            }
        });
    }
    best
}

/// Traces the oscillation path from `e1` to `e2`.
///
/// `phi_f` is indexed like `topo.bus_ids`, `phi_i` like `topo.branch_ids`.
pub fn find_path(
    topo: &Topology,
    phi_f: &[Complex64],
    phi_i: &[Complex64],
    e1: BusId,
    e2: BusId,
    pre_excluded: &BTreeSet<BranchId>,
    cfg: &AnalysisConfig,
) -> Result<OscillationPath> {
    let start = topo.index_of(e1).ok_or(Error::UnknownBus(e1))?;
    let goal = topo.index_of(e2).ok_or(Error::UnknownBus(e2))?;
    let mut excluded = BTreeSet::new();
    for id in pre_excluded {
        excluded.insert(topo.branch_index(id).ok_or_else(|| Error::UnknownBranch(id.clone()))?);
    }
    if start == goal || !topo.connected(start, goal, &excluded) {
        return Err(Error::NoAcPath { e1, e2, log: Vec::new() });
    }

    let tol = cfg.tie_tol;
    let ref_phase = phi_f[start];
    let opposed = |j: usize| phase_gap_deg(phi_f[j], ref_phase) > cfg.opposing_phase_deg;
    let mut path = vec![start];
    let mut via: Vec<usize> = Vec::new();
    let mut on_path = vec![false; topo.bus_count()];
    on_path[start] = true;
    let mut phase = Phase::Descending;
    let mut ascent_at: Option<usize> = None;
    let mut log = Vec::new();
    let cap = 4 * topo.branch_count() + 4;

    for _ in 0..cap {
        let i = *path.last().expect("path never empty");
        if i == goal {
            let ascent = ascent_at.unwrap_or(path.len() - 1);
            return Ok(finish(topo, phi_f, path, via, ascent, excluded, log, e1, e2));
        }
        let cands = feasible(topo, i, &excluded, &on_path);
        let Some(k) = greedy_pick(topo, phi_i, &cands, tol) else {
            if i == start {
                return Err(Error::Exhausted { e1, log });
            }
            let k = via.pop().expect("non-root bus has an incoming branch");
            path.pop();
            on_path[i] = false;
            excluded.insert(k);
            if ascent_at == Some(path.len()) {
                ascent_at = None;
                phase = Phase::Descending;
            }
            log.push(PathEvent::Pop { bus: topo.bus_ids[i], branch: topo.branch_ids[k].clone() });
            continue;
        };
        let j = topo.other_end(k, i);
        let (fi, fj) = (phi_f[i].norm(), phi_f[j].norm());
        let (from, to, branch) = (topo.bus_ids[i], topo.bus_ids[j], topo.branch_ids[k].clone());
        let event = match phase {
            Phase::Descending if opposed(j) => {
                ascent_at = Some(path.len());
                phase = Phase::Ascending;
                PathEvent::Ascent { from, to, branch }
            }
            Phase::Descending if strictly_less(fj, fi, tol) => PathEvent::Accept { from, to, branch },
            Phase::Descending => PathEvent::DeadEnd { at: from, branch, reason: DeadEndReason::NotDescending },
            Phase::Ascending if opposed(j) && strictly_less(fi, fj, tol) => PathEvent::Accept { from, to, branch },
            Phase::Ascending => PathEvent::DeadEnd { at: from, branch, reason: DeadEndReason::NotAscending },
        };
        if matches!(event, PathEvent::DeadEnd { .. }) {
            excluded.insert(k);
        } else {
            path.push(j);
            via.push(k);
            on_path[j] = true;
        }
        log.push(event);
    }
    Err(Error::IterationCap { cap })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    topo: &Topology,
    phi_f: &[Complex64],
    path: Vec<usize>,
    via: Vec<usize>,
    ascent: usize,
    excluded: BTreeSet<usize>,
    log: Vec<PathEvent>,
    e1: BusId,
    e2: BusId,
) -> OscillationPath {
    let mut pivot = path[0];
    for &b in &path {
        if phi_f[b].norm() < phi_f[pivot].norm() {
            pivot = b;
        }
    }
    let backtracks = log.iter().filter(|e| matches!(e, PathEvent::Pop { .. })).count();
    OscillationPath {
        e1,
        e2,
        buses: path.iter().map(|&b| topo.bus_ids[b]).collect(),
        branches: via.iter().map(|&k| topo.branch_ids[k].clone()).collect(),
        pivot: topo.bus_ids[pivot],
        ascent_start: topo.bus_ids[path[ascent]],
        excluded: excluded.into_iter().map(|k| topo.branch_ids[k].clone()).collect(),
        log,
        backtracks,
    }
}

/// Replays `path.log` and checks every decision against the greedy rule:
/// each examined branch had the largest `|φ_I|` among the branches feasible at
/// that moment, each acceptance or rejection follows the `|φ_f|` and phase
/// tests, and the replay ends on `path.buses`.
pub fn certify(
    topo: &Topology,
    phi_f: &[Complex64],
    phi_i: &[Complex64],
    path: &OscillationPath,
    pre_excluded: &BTreeSet<BranchId>,
    cfg: &AnalysisConfig,
) -> core::result::Result<(), String> {
    let idx = |b: BusId| topo.index_of(b).ok_or_else(|| format!("unknown bus {b}"));
    let bidx = |id: &BranchId| topo.branch_index(id).ok_or_else(|| format!("unknown branch {id}"));
    let start = idx(path.e1)?;
    let ref_phase = phi_f[start];
    let opposed = |j: usize| phase_gap_deg(phi_f[j], ref_phase) > cfg.opposing_phase_deg;
    let tol = cfg.tie_tol;
    let mut excluded = BTreeSet::new();
    for id in pre_excluded {
        excluded.insert(bidx(id)?);
    }
    let mut stack = vec![start];
    let mut on_path = vec![false; topo.bus_count()];
    on_path[start] = true;
    let mut ascending_from: Option<usize> = None;

    for (n, event) in path.log.iter().enumerate() {
        let i = *stack.last().ok_or("empty replay stack")?;
        let check_choice = |at: BusId, branch: &BranchId| -> core::result::Result<usize, String> {
            if idx(at)? != i {
                return Err(format!("event {n}: decision at {at} but replay is at {}", topo.bus_ids[i]));
            }
            let k = bidx(branch)?;
            let cands = feasible(topo, i, &excluded, &on_path);
            if !cands.contains(&k) {
                return Err(format!("event {n}: branch {branch} was not feasible"));
            }
            if greedy_pick(topo, phi_i, &cands, tol) != Some(k) {
                return Err(format!("event {n}: branch {branch} is not the greedy maximum"));
            }
            Ok(k)
        };
        match event {
            PathEvent::Accept { from, to, branch } | PathEvent::Ascent { from, to, branch } => {
                let k = check_choice(*from, branch)?;
                let j = topo.other_end(k, i);
                if topo.bus_ids[j] != *to {
                    return Err(format!("event {n}: branch {branch} does not lead to {to}"));
                }
                let (fi, fj) = (phi_f[i].norm(), phi_f[j].norm());
                let ok = match (event, ascending_from.is_some()) {
                    (PathEvent::Ascent { .. }, false) => opposed(j),
                    (PathEvent::Accept { .. }, false) => !opposed(j) && strictly_less(fj, fi, tol),
                    (PathEvent::Accept { .. }, true) => opposed(j) && strictly_less(fi, fj, tol),
                    _ => false,
                };
                if !ok {
                    return Err(format!("event {n}: move to {to} violates the sub-path rule"));
                }
                if matches!(event, PathEvent::Ascent { .. }) {
                    ascending_from = Some(stack.len());
                }
                stack.push(j);
                on_path[j] = true;
            }
            PathEvent::DeadEnd { at, branch, .. } => {
                let k = check_choice(*at, branch)?;
                let j = topo.other_end(k, i);
                let (fi, fj) = (phi_f[i].norm(), phi_f[j].norm());
                let would_pass = match ascending_from {
                    None => opposed(j) || strictly_less(fj, fi, tol),
                    Some(_) => opposed(j) && strictly_less(fi, fj, tol),
                };
                if would_pass {
                    return Err(format!("event {n}: branch {branch} was rejected but passes the test"));
                }
                excluded.insert(k);
            }
            PathEvent::Pop { bus, branch } => {
                if idx(*bus)? != i || stack.len() < 2 {
                    return Err(format!("event {n}: cannot pop {bus}"));
                }
                if !feasible(topo, i, &excluded, &on_path).is_empty() {
                    return Err(format!("event {n}: popped {bus} with feasible branches left"));
                }
                stack.pop();
                on_path[i] = false;
                excluded.insert(bidx(branch)?);
                if ascending_from == Some(stack.len()) {
                    ascending_from = None;
                }
            }
        }
    }
    let replayed: Vec<BusId> = stack.iter().map(|&b| topo.bus_ids[b]).collect();
    if replayed != path.buses {
        return Err(format!("replay ends on {replayed:?}, path is {:?}", path.buses));
    }
    Ok(())
}

/// Structural invariants of a traced path.
pub fn check_invariants(
    topo: &Topology,
    phi_f: &[Complex64],
    path: &OscillationPath,
    cfg: &AnalysisConfig,
) -> core::result::Result<(), String> {
    let idx: Vec<usize> =
        path.buses.iter().map(|&b| topo.index_of(b).ok_or("unknown bus")).collect::<core::result::Result<_, _>>()?;
    if path.buses.first() != Some(&path.e1) || path.buses.last() != Some(&path.e2) {
        return Err("path must run from e1 to e2".into());
    }
    let unique: BTreeSet<_> = path.buses.iter().collect();
    if unique.len() != path.buses.len() {
        return Err("path repeats a bus".into());
    }
    if path.branches.len() + 1 != path.buses.len() {
        return Err("branch count does not match bus count".into());
    }
    for (n, id) in path.branches.iter().enumerate() {
        let k = topo.branch_index(id).ok_or("unknown branch")?;
        let (a, b) = topo.ends[k];
        let (x, y) = (idx[n], idx[n + 1]);
        if !((a == x && b == y) || (a == y && b == x)) {
            return Err(format!("branch {id} does not join consecutive path buses"));
        }
    }
    let mag: Vec<f64> = idx.iter().map(|&i| phi_f[i].norm()).collect();
    let gap: Vec<f64> = idx.iter().map(|&i| phase_gap_deg(phi_f[i], phi_f[idx[0]])).collect();
    let pb = path.position(path.pivot).ok_or("pivot not on path")?;
    if mag.iter().any(|&m| m < mag[pb]) {
        return Err("pivot is not the minimum-|φ_f| bus".into());
    }
    let a = path.position(path.ascent_start).ok_or("ascent start not on path")?;
    if gap.iter().position(|&g| g > cfg.opposing_phase_deg) != Some(a) && a != path.buses.len() - 1 {
        return Err("ascent start is not the first phase-opposed bus".into());
    }
    if pb > a {
        return Err("pivot lies after the ascent start".into());
    }
    if mag[..=pb].windows(2).any(|w| !(w[1] < w[0])) {
        return Err("|φ_f| not strictly decreasing from e1 to the pivot".into());
    }
    if mag[a..].windows(2).any(|w| !(w[1] > w[0])) {
        return Err("|φ_f| not strictly increasing from the ascent start to e2".into());
    }
    if gap[..a].iter().any(|&g| g > cfg.opposing_phase_deg) {
        return Err("a bus before the ascent start is phase-opposed to e1".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(n: u32, edges: &[(u32, u32)]) -> Topology {
        let buses: Vec<BusId> = (1..=n).map(BusId).collect();
        let ids = edges.iter().map(|(a, b)| BranchId(format!("{a}-{b}"))).collect();
        let ends = edges.iter().map(|&(a, b)| ((a - 1) as usize, (b - 1) as usize)).collect();
        Topology::build(buses, ids, ends)
    }

    fn pol(m: f64, deg: f64) -> Complex64 {
        Complex64::from_polar(m, deg.to_radians())
    }

    #[test]
    fn two_bus_antiphase() {
        let t = topo(2, &[(1, 2)]);
        let phi_f = [pol(1.0, 0.0), pol(0.8, 180.0)];
        let phi_i = [pol(1.0, 0.0)];
        let cfg = AnalysisConfig::default();
        let p = find_path(&t, &phi_f, &phi_i, BusId(1), BusId(2), &BTreeSet::new(), &cfg).unwrap();
        assert_eq!(p.buses, vec![BusId(1), BusId(2)]);
        assert_eq!(p.branches, vec![BranchId::from("1-2")]);
        assert_eq!(p.ascent_start, BusId(2));
        assert_eq!(p.backtracks, 0);
        certify(&t, &phi_f, &phi_i, &p, &BTreeSet::new(), &cfg).unwrap();
        check_invariants(&t, &phi_f, &p, &cfg).unwrap();
    }

    #[test]
    fn dead_end_then_pop() {
        // 1-2-3-4 chain with a spur 2-5 that looks attractive on |φ_I|.
        let t = topo(5, &[(1, 2), (2, 3), (3, 4), (2, 5)]);
        let phi_f = [pol(1.0, 0.0), pol(0.6, 5.0), pol(0.5, 170.0), pol(0.9, 178.0), pol(0.3, 10.0)];
        let phi_i = [pol(1.0, 0.0), pol(0.5, 0.0), pol(0.4, 0.0), pol(0.9, 0.0)];
        let cfg = AnalysisConfig::default();
        let p = find_path(&t, &phi_f, &phi_i, BusId(1), BusId(4), &BTreeSet::new(), &cfg).unwrap();
        assert_eq!(p.buses, vec![BusId(1), BusId(2), BusId(3), BusId(4)]);
        // Bus 5 was entered (descending) and popped.
        assert_eq!(p.backtracks, 1);
        assert!(p.excluded.contains(&BranchId::from("2-5")));
        assert_eq!(p.ascent_start, BusId(3));
        assert_eq!(p.pivot, BusId(3));
        certify(&t, &phi_f, &phi_i, &p, &BTreeSet::new(), &cfg).unwrap();
        check_invariants(&t, &phi_f, &p, &cfg).unwrap();
    }

    #[test]
    fn pre_excluded_branches_are_avoided() {
        let t = topo(4, &[(1, 2), (2, 4), (1, 3), (3, 4)]);
        let phi_f = [pol(1.0, 0.0), pol(0.4, 10.0), pol(0.5, 20.0), pol(1.0, 180.0)];
        let phi_i = [pol(1.0, 0.0), pol(1.0, 0.0), pol(0.5, 0.0), pol(0.5, 0.0)];
        let cfg = AnalysisConfig::default();
        let cut = BTreeSet::from([BranchId::from("1-2")]);
        let p = find_path(&t, &phi_f, &phi_i, BusId(1), BusId(4), &cut, &cfg).unwrap();
        assert_eq!(p.buses, vec![BusId(1), BusId(3), BusId(4)]);
        assert!(!p.branches.contains(&BranchId::from("1-2")));
        let both = BTreeSet::from([BranchId::from("1-2"), BranchId::from("1-3")]);
        assert!(matches!(find_path(&t, &phi_f, &phi_i, BusId(1), BusId(4), &both, &cfg), Err(Error::NoAcPath { .. })));
    }

    #[test]
    fn exhausted_at_e1() {
        // |φ_f| rises and phase stays aligned: nothing is acceptable.
        let t = topo(3, &[(1, 2), (2, 3)]);
        let phi_f = [pol(0.5, 0.0), pol(0.9, 0.0), pol(1.0, 180.0)];
        let phi_i = [pol(1.0, 0.0), pol(1.0, 0.0)];
        let err = find_path(&t, &phi_f, &phi_i, BusId(1), BusId(3), &BTreeSet::new(), &AnalysisConfig::default())
            .unwrap_err();
        match err {
            Error::Exhausted { e1, log } => {
                assert_eq!(e1, BusId(1));
                assert_eq!(log.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ties_go_to_lowest_branch_id() {
        let t = topo(4, &[(1, 3), (1, 2), (2, 4), (3, 4)]);
        let phi_f = [pol(1.0, 0.0), pol(0.5, 0.0), pol(0.5, 0.0), pol(1.0, 180.0)];
        let phi_i = [pol(1.0, 0.0); 4];
        let p =
            find_path(&t, &phi_f, &phi_i, BusId(1), BusId(4), &BTreeSet::new(), &AnalysisConfig::default()).unwrap();
        assert_eq!(p.branches[0], BranchId::from("1-2"));
    }
}
