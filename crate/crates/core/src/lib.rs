//! Virtual-organisation formation over an agent society.
//!
//! Agents holding requester and provider roles negotiate, through guarded
//! message-passing protocols, a concrete workflow of services and the
//! contracts binding its providers. Formation advances a partial VO tuple
//! through six checked transitions; every step can be re-validated
//! independently from a saved trace.

pub mod constraint;
pub mod contract;
pub mod fixtures;
pub mod formation;
pub mod formula;
pub mod ids;
pub mod protocol;
pub mod scenario;
pub mod service;
pub mod society;
pub mod syntax;
pub mod term;
pub mod workflow;

pub use constraint::{constraint_satisfiable, AtomicConstraint, ConstraintAnnotation};
pub use contract::{draft_contract, validate_contract, Contract, ContractConstraint, ContractReport};
pub use formation::{
    check_trace, run_formation, FormationConfig, FormationError, FormationStrategy, FormationTrace, PartialVO,
    Transition,
};
pub use formula::{Atom, Formula, Literal};
pub use ids::{AgentId, ContractId};
pub use scenario::{parse_scenario, parse_scenario_str, parse_trace, Scenario, ScenarioError, ScenarioFile, TraceFile};
pub use service::{instantiation_level, InstantiationLevel, ServiceTerm};
pub use society::{build_society, AgentSpec, Registry, Society};
pub use syntax::ParseError;
pub use term::{is_instance_of, match_term, unify, Substitution, Term, VarGen};
pub use workflow::{workflow_is_concrete, Workflow, WorkflowError};
