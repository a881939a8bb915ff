//! Bus/branch adjacency and connectivity queries.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::case::{BranchId, BusId, Case};

/// Undirected multigraph of buses (nodes) and branches (edges), indexed in
/// case order.
#[derive(Debug, Clone)]
pub struct Topology {
    pub bus_ids: Vec<BusId>,
    pub branch_ids: Vec<BranchId>,
    /// `(from, to)` bus indices per branch.
    pub ends: Vec<(usize, usize)>,
    /// Incident branch indices per bus.
    pub incident: Vec<Vec<usize>>,
    index: BTreeMap<BusId, usize>,
}

impl Topology {
    pub fn from_case(case: &Case) -> Topology {
        let index = case.bus_index();
        let ends = case.branches.iter().map(|b| (index[&b.from_bus], index[&b.to_bus])).collect();
        Self::build(
            case.buses.iter().map(|b| b.id).collect(),
            case.branches.iter().map(|b| b.id.clone()).collect(),
            ends,
        )
    }

    pub fn build(bus_ids: Vec<BusId>, branch_ids: Vec<BranchId>, ends: Vec<(usize, usize)>) -> Topology {
        let mut incident = vec![Vec::new(); bus_ids.len()];
        for (k, &(a, b)) in ends.iter().enumerate() {
            incident[a].push(k);
            incident[b].push(k);
        }
        let index = bus_ids.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        Topology { bus_ids, branch_ids, ends, incident, index }
    }

    pub fn bus_count(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branch_ids.len()
    }

    pub fn index_of(&self, bus: BusId) -> Option<usize> {
        self.index.get(&bus).copied()
    }

    pub fn branch_index(&self, id: &BranchId) -> Option<usize> {
        self.branch_ids.iter().position(|b| b == id)
    }

    pub fn other_end(&self, branch: usize, bus: usize) -> usize {
        let (a, b) = self.ends[branch];
        if a == bus {
            b
        } else {
            a
        }
    }

    /// Breadth-first reachability from `from` to `to`, ignoring `removed`
    /// branches.
    pub fn connected(&self, from: usize, to: usize, removed: &BTreeSet<usize>) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.bus_count()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(i) = queue.pop_front() {
            for &k in &self.incident[i] {
                if removed.contains(&k) {
                    continue;
                }
                let j = self.other_end(k, i);
                if j == to {
                    return true;
                }
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        false
    }

    /// Connected components (bus indices, ascending) after removing branches.
    /// Components are ordered by their smallest bus id.
    pub fn components(&self, removed: &BTreeSet<usize>) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.bus_count()];
        let mut out: Vec<Vec<usize>> = Vec::new();
        // Visit buses by id so component order is stable under reordering.
        let mut order: Vec<usize> = (0..self.bus_count()).collect();
        order.sort_by_key(|&i| self.bus_ids[i]);
        for start in order {
            if label[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut members = vec![start];
            label[start] = c;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &k in &self.incident[i] {
                    if removed.contains(&k) {
                        continue;
                    }
                    let j = self.other_end(k, i);
                    if label[j] == usize::MAX {
                        label[j] = c;
                        members.push(j);
                        queue.push_back(j);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}
