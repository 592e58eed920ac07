//! The partial VO tuple `<agents, goals, roles, workflow, contracts>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contract::Contract;
use crate::formula::Atom;
use crate::ids::AgentId;
use crate::protocol::role::Role;
use crate::service::ServiceTerm;
use crate::workflow::Workflow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Empty,
    GoalsIdentified,
    PartnersDiscovered,
    PartnersSelected,
    RolesEstablished,
    WorkflowAgreed,
    ContractsAgreed,
}

impl Stage {
    pub fn next(self) -> Option<Stage> {
        use Stage::*;
        match self {
            Empty => Some(GoalsIdentified),
            GoalsIdentified => Some(PartnersDiscovered),
            PartnersDiscovered => Some(PartnersSelected),
            PartnersSelected => Some(RolesEstablished),
            RolesEstablished => Some(WorkflowAgreed),
            WorkflowAgreed => Some(ContractsAgreed),
            ContractsAgreed => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    IdentifyGoals,
    DiscoverPartners,
    SelectPartners,
    EstablishRoles,
    AgreeWorkflow,
    AgreeContracts,
}

impl Transition {
    pub const ALL: [Transition; 6] = [
        Transition::IdentifyGoals,
        Transition::DiscoverPartners,
        Transition::SelectPartners,
        Transition::EstablishRoles,
        Transition::AgreeWorkflow,
        Transition::AgreeContracts,
    ];

    /// The stage a tuple must be in for this transition to apply.
    pub fn source(self) -> Stage {
        match self {
            Transition::IdentifyGoals => Stage::Empty,
            Transition::DiscoverPartners => Stage::GoalsIdentified,
            Transition::SelectPartners => Stage::PartnersDiscovered,
            Transition::EstablishRoles => Stage::PartnersSelected,
            Transition::AgreeWorkflow => Stage::RolesEstablished,
            Transition::AgreeContracts => Stage::WorkflowAgreed,
        }
    }

    pub fn target(self) -> Stage {
        self.source().next().expect("every source stage has a successor")
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transition::IdentifyGoals => "identify_goals",
            Transition::DiscoverPartners => "discover_partners",
            Transition::SelectPartners => "select_partners",
            Transition::EstablishRoles => "establish_roles",
            Transition::AgreeWorkflow => "agree_workflow",
            Transition::AgreeContracts => "agree_contracts",
        })
    }
}

/// A partial agent specification: the subset of its roles and goals the
/// agent brings into the VO.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub roles: BTreeSet<Role>,
    pub goals: Vec<Atom>,
}

/// Who agreed to provide which goal service, as fixed by a successful dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    pub goal: Atom,
    pub requester: AgentId,
    pub provider: AgentId,
    pub service: ServiceTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialVO {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initiator: Option<AgentId>,
    pub agents: BTreeMap<AgentId, Member>,
    pub goals: Vec<Atom>,
    pub roles: BTreeSet<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workflow: Option<Workflow>,
    #[serde(default)]
    pub contracts: Vec<Contract>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agreements: Vec<Agreement>,
}

impl Default for PartialVO {
    fn default() -> Self {
        PartialVO::empty()
    }
}

impl PartialVO {
    /// `<{}, {}, {}, {}, {}>`.
    pub fn empty() -> Self {
        PartialVO {
            stage: Stage::Empty,
            initiator: None,
            agents: BTreeMap::new(),
            goals: Vec::new(),
            roles: BTreeSet::new(),
            workflow: None,
            contracts: Vec::new(),
            agreements: Vec::new(),
        }
    }

    pub fn ids(&self) -> BTreeSet<&AgentId> {
        self.agents.keys().collect()
    }

    pub fn member(&self, id: &AgentId) -> Option<&Member> {
        self.agents.get(id)
    }
}

/// The service `s` of a goal `toBuy(s)`.
pub const SERVICE_GOAL: &str = "toBuy";

pub fn goal_service(goal: &Atom) -> Option<ServiceTerm> {
    match goal.args.as_slice() {
        [s] if goal.predicate == SERVICE_GOAL => ServiceTerm::from_term(s),
        _ => None,
    }
}
