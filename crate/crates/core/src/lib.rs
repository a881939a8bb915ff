//! Small-signal analysis and DC segmentation planning for AC power systems.
//!
//! The pipeline is:
//!
//! 1. [`powerflow`] establishes the operating point of a [`case::Case`].
//! 2. [`linearizer`] builds the state-space model of the multi-machine system
//!    about that point, together with the bus-voltage, bus-frequency and
//!    branch-current output matrices.
//! 3. [`modal`] computes the spectrum, mode shapes, participation and
//!    observability factors, and picks the critical electromechanical mode.
//! 4. [`pathfinder`] traces the dominant inter-area oscillation path between
//!    the two edges of that mode.
//! 5. [`segmenter`] selects the AC branches to be replaced by HVDC links until
//!    the edges end up in different asynchronous islands, and evaluates the
//!    segmented system.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command-line front end live in the `gridseg` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(test)]
extern crate std;

extern crate alloc;

pub mod case;
pub mod config;
mod error;
pub mod graph;
pub mod linalg;
pub mod linearizer;
pub mod machine;
pub mod modal;
pub mod pathfinder;
pub mod powerflow;
pub mod segmenter;

pub use case::{Branch, BranchId, Bus, BusId, BusKind, Case, Exciter, Injection, Load, Machine, MachineId};
pub use config::AnalysisConfig;
pub use error::{Error, Result};
pub use linearizer::{build_linear_model, StateSpaceModel};
pub use modal::{eigen_analysis, Mode, ModeShape, ObservabilityFactors};
pub use pathfinder::{find_path, OscillationPath};
pub use powerflow::{solve_power_flow, PowerFlowSolution};
pub use segmenter::{evaluate_plan, run_segmentation, SegmentationPlan};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
