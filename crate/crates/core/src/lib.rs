//! Simulator for a privacy-preserving quantum two-party geometric
//! intersection protocol.
//!
//! Two parties rasterize private shapes into sets of grid serials, load them
//! into quantum registers through XOR oracles, and count the matching pairs
//! with quantum counting. Everything runs on an exact dense state vector.

pub mod cli;
pub mod counting;
pub mod geometry;
pub mod oracles;
pub mod protocol;
pub mod qstate;

pub use counting::{CountEstimate, CountingConfig, CountingMode, Intersection};
pub use geometry::{GridConfig, GridSet, Scene, Shape};
pub use oracles::{DataTable, PreparationSpec};
pub use protocol::{
    comm_cost, detection_probability, leakage_report, run_protocol, AdversaryStrategy,
    CostSummary, LeakageReport, ProtocolTranscript, RunOptions, Verdict,
};
pub use qstate::{DensityMatrix, QuantumState, RegisterLayout};
