use alloc::string::String;
use alloc::vec::Vec;

use crate::case::{BranchId, BusId};
use crate::pathfinder::PathEvent;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("duplicate identifier `{id}` at `{path}`")]
    DuplicateId { path: String, id: String },

    #[error("`{path}` refers to unknown element `{id}`")]
    DanglingReference { path: String, id: String },

    #[error("`{path}` must be strictly positive")]
    NonPositiveBase { path: String },

    #[error("line length must be positive, got {0} km")]
    NonPositiveLength(f64),

    #[error("power flow diverged after {iterations} iterations (max mismatch {mismatch:.3e} pu at bus {worst_bus})")]
    Divergence { iterations: usize, mismatch: f64, worst_bus: BusId },

    #[error("singular power-flow Jacobian at iteration {iteration} (worst mismatch at bus {worst_bus})")]
    SingularJacobian { iteration: usize, worst_bus: BusId },

    #[error("island containing bus {bus} has {count} slack buses, expected exactly one")]
    IslandSlack { bus: BusId, count: usize },

    #[error("unservable island: no machine among buses {buses:?}")]
    UnservableIsland { buses: Vec<BusId> },

    #[error("more than one machine on bus {0}; normalize the case first")]
    MultipleMachinesOnBus(BusId),

    #[error("singular stator/network algebraic block ({element})")]
    SingularAlgebraic { element: String },

    #[error("eigensolver did not converge after {iterations} iterations (matrix norm {norm:.3e})")]
    EigenNonConvergence { iterations: usize, norm: f64 },

    #[error("no electromechanical mode found")]
    NoElectromechanicalMode,

    #[error("mode index {index} out of range ({available} electromechanical modes)")]
    ModeIndex { index: usize, available: usize },

    #[error("no machine oscillates against the first edge: the mode is not inter-area")]
    NoOpposingGroup,

    #[error("path search exhausted every branch at edge bus {e1}")]
    Exhausted { e1: BusId, log: Vec<PathEvent> },

    #[error("no AC path left between buses {e1} and {e2}")]
    NoAcPath { e1: BusId, e2: BusId, log: Vec<PathEvent> },

    #[error("segmentation did not split the edges within {cap} iterations")]
    IterationCap { cap: usize },

    #[error("unknown branch `{0}`")]
    UnknownBranch(BranchId),

    #[error("unknown bus {0}")]
    UnknownBus(BusId),

    #[error("invalid configuration `{field}`: {message}")]
    InvalidConfig { field: &'static str, message: String },
}
