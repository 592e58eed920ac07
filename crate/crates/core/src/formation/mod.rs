//! VO formation: a partial tuple refined by six transitions, each choice
//! delegated to a strategy and each step re-checkable on its own.

pub mod check;
pub mod config;
pub mod mutation;
pub mod strategy;
pub mod trace;
pub mod transitions;
pub mod vo;

pub use check::{validate_transition, Check, TransitionReport};
pub use config::{FormationConfig, ProtocolChoice, ProviderChoice};
pub use mutation::Mutation;
pub use strategy::FormationStrategy;
pub use trace::{check_trace, run_formation, FormationFailure, FormationStep, FormationTrace, TraceCheck};
pub use transitions::{
    agree_contracts, agree_workflow, discover_partners, establish_roles, identify_goals, select_partners,
    FormationError, Negotiation,
};
pub use vo::{goal_service, Agreement, Member, PartialVO, Stage, Transition, SERVICE_GOAL};
