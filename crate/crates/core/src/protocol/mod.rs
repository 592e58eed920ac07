//! Protocol clauses and their interpreter.

pub mod coherence;
pub mod dialogue;
pub mod kb;
pub mod role;

pub use coherence::{check_role_goal_coherence, CoherenceReport, CoherenceRule};
pub use dialogue::{
    enabled_operations, run_dialogue, DialogueParty, DialogueTranscript, FiredOperation, Message, Outcome,
    TranscriptStep,
};
pub use kb::{apply_postcondition, evaluate, KnowledgeBase, PostconditionError, Solution};
pub use role::{
    Direction, Locution, ProtocolClause, ProtocolError, ProtocolOperation, Role, RoleInstance, RoleLabel, PROVIDER,
    REQUESTER,
};
