//! Whitney-type extension of vector-valued functions with prescribed first
//! derivatives on closed subsets of R^n.

pub mod analysis;
pub mod catalog;
pub mod config;
pub mod error;
pub mod extend;
pub mod geomset;
pub mod jetfield;
pub mod linalg;
pub mod partition;
pub mod sampling;
pub mod smoothbump;
pub mod suites;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use extend::{sample_grid, tensor, Extension, FieldSample};
pub use geomset::{AxisBox, Ball, ClosedSetRep, NearestResult, Point, SetShape};
pub use jetfield::{check_contracts, AField, AFieldKind, ContractReport, Jet, JetField};
pub use partition::{
    build_capped, build_partition, combine_capped, verify_partition, ActiveEntry, ActiveSet, CombinedPartition,
    CombinerState, GateValue, Member, MemberId, Partition, PartitionConfig, PartitionOfUnity, PartitionReport,
    Weight,
};
pub use smoothbump::{CubeBump, TransitionProfile};
pub use suites::{run_suites, Case, Check, Expect, Suite, SuiteOptions, SuiteRun};
