//! Exact simulation of local protocols that try to identify one state out of
//! a known orthogonal ensemble: local projective measurements, shared
//! entanglement, several copies of the unknown state and one classical bit.

pub mod catalog;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod protocol;
pub mod search;
pub mod tensor;

pub use catalog::{Family, FamilySpec, ResourceKind, ResourceSpec};
pub use engine::{evaluate, evaluate_multicopy, evaluate_with, EvalOptions, SuccessReport, Transcript};
pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use protocol::{CommPlan, LocalMeasurement, MessageMap, MessagePartition, Protocol, Schedule};
pub use search::{
    construct_multicopy_schedule, copy_bound, find_ictp_protocol, grid_search_lp, lpse_optimality_probe,
    DimensionProfile, SearchConfig,
};
pub use tensor::{Party, Projector, PureState};
