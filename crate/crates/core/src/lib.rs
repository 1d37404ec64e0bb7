//! Dynamic direct elaboration mechanisms for allocation problems where agents
//! are asymmetrically aware of the relevant aspects of the world.
//!
//! The core is generic over the money type through [`Scalar`]; the aliases at
//! the crate root fix it to exact 64-bit rationals.

pub mod engine;
pub mod io;
pub mod lattice;
pub mod outcomes;
pub mod scalar;
pub mod scenario;
pub mod transfers;
pub mod types;
pub mod verify;

pub use engine::{
    admissible_reports, enumerate_information_sets, run, run_truthful, stage_bound, truth_telling,
    ElaborationState, EngineError, InformationSet, OwnPlay, Scripted, Strategy, Trace, Truthful,
};
pub use io::{example1, parse_scenario, serialize_scenario, ParseError};
pub use lattice::{AwarenessLattice, LatticeError, Level};
pub use outcomes::{
    Economy, MarginalMode, Outcome, OutcomeError, OutcomeId, OutcomeSpaces, ValueTable,
};
pub use scalar::Scalar;
pub use scenario::{DrawSpec, RunError, ValidationError};
pub use transfers::{
    awareness_adjustment, clarke_family, first_full_revealer, m_table, surplus, vcg_transfers,
    AwarenessBonusTable, GrovesFamily, MechanismTables, Opponents, TransferError, TransferResult,
    TransferScheme,
};
pub use types::{
    perceive, AgentId, AgentState, NatureDraw, PayoffType, ProjectionReport, TypeError, TypeSystem,
};

pub use num_rational::Rational64;

/// Exact money.
pub type Money = Rational64;
pub type Scenario = scenario::Scenario<Money>;
pub type Scheme = TransferScheme<Money>;
pub type Transfers = TransferResult<Money>;
pub type Tables = MechanismTables<Money>;
