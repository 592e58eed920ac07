//! The choices formation leaves open: which goals to pursue, whom to trust,
//! which protocol each role follows, which successful provider to keep, and
//! what the initiator adds to the agreed workflow.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formation::config::{FormationConfig, ProtocolChoice, ProviderChoice};
use crate::formation::vo::PartialVO;
use crate::formula::Atom;
use crate::ids::AgentId;
use crate::protocol::role::{ProtocolClause, RoleLabel};
use crate::service::ServiceTerm;
use crate::society::AgentSpec;

pub trait GoalSelector {
    /// A subset of `unfulfillable`, which is in declaration order.
    fn select(&self, agent: &AgentSpec, unfulfillable: &[Atom]) -> Vec<Atom>;
}

pub trait TrustFilter {
    fn trusts(&self, agent: &AgentId) -> bool;
}

pub trait RoleAssigner {
    /// Index into `candidates` (never empty) of the clause `label` follows,
    /// or `None` when the choice cannot be made.
    fn choose_clause(&self, label: &RoleLabel, candidates: &[&ProtocolClause]) -> Option<usize>;
}

pub trait ProviderChooser {
    /// Index into `successful` (never empty, identifier order) of the
    /// provider kept for the goal service at `position` in the goal list.
    fn choose(&self, service: &ServiceTerm, position: usize, successful: &[AgentId]) -> usize;
}

pub trait WorkflowHook {
    /// Concrete services the initiator adds to the agreed workflow.
    fn extra_services(&self, _vo: &PartialVO) -> Vec<ServiceTerm> {
        Vec::new()
    }
}

pub struct AllUnfulfillable;

impl GoalSelector for AllUnfulfillable {
    fn select(&self, _agent: &AgentSpec, unfulfillable: &[Atom]) -> Vec<Atom> {
        unfulfillable.to_vec()
    }
}

pub struct TrustEveryone;

impl TrustFilter for TrustEveryone {
    fn trusts(&self, _agent: &AgentId) -> bool {
        true
    }
}

pub struct AllowList(pub BTreeSet<AgentId>);

impl TrustFilter for AllowList {
    fn trusts(&self, agent: &AgentId) -> bool {
        self.0.contains(agent)
    }
}

/// The first declared clause, unless the configuration names one.
#[derive(Default)]
pub struct FirstDeclared {
    pub pinned: Vec<ProtocolChoice>,
}

impl RoleAssigner for FirstDeclared {
    fn choose_clause(&self, label: &RoleLabel, candidates: &[&ProtocolClause]) -> Option<usize> {
        let service = label.param.as_ref().and_then(ServiceTerm::from_term).map(|s| s.name);
        let pinned = self
            .pinned
            .iter()
            .find(|c| c.role == label.name && Some(&c.service) == service.as_ref());
        match pinned {
            Some(choice) => candidates.iter().position(|c| c.name == choice.clause),
            None => Some(0),
        }
    }
}

pub struct FirstSuccessful;

impl ProviderChooser for FirstSuccessful {
    fn choose(&self, _service: &ServiceTerm, _position: usize, _successful: &[AgentId]) -> usize {
        0
    }
}

/// Uniform choice from a generator seeded per goal position.
pub struct SeededChoice(pub u64);

impl ProviderChooser for SeededChoice {
    fn choose(&self, _service: &ServiceTerm, position: usize, successful: &[AgentId]) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0.wrapping_add(position as u64));
        rng.random_range(0..successful.len())
    }
}

pub struct NoExtraServices;

impl WorkflowHook for NoExtraServices {}

pub struct FormationStrategy {
    pub goal_selector: Box<dyn GoalSelector>,
    pub trust_filter: Box<dyn TrustFilter>,
    pub role_assigner: Box<dyn RoleAssigner>,
    pub provider_chooser: Box<dyn ProviderChooser>,
    pub workflow_hook: Box<dyn WorkflowHook>,
}

impl Default for FormationStrategy {
    fn default() -> Self {
        FormationStrategy {
            goal_selector: Box::new(AllUnfulfillable),
            trust_filter: Box::new(TrustEveryone),
            role_assigner: Box::new(FirstDeclared::default()),
            provider_chooser: Box::new(FirstSuccessful),
            workflow_hook: Box::new(NoExtraServices),
        }
    }
}

impl FormationStrategy {
    /// The default strategies, parameterised by the configuration.
    pub fn from_config(config: &FormationConfig) -> Self {
        let trust_filter: Box<dyn TrustFilter> = match &config.trusted {
            Some(ids) => Box::new(AllowList(ids.iter().cloned().collect())),
            None => Box::new(TrustEveryone),
        };
        let provider_chooser: Box<dyn ProviderChooser> = match config.provider_choice {
            ProviderChoice::First => Box::new(FirstSuccessful),
            ProviderChoice::Seeded => Box::new(SeededChoice(config.seed)),
        };
        FormationStrategy {
            trust_filter,
            role_assigner: Box::new(FirstDeclared {
                pinned: config.protocol_choice.clone(),
            }),
            provider_chooser,
            ..FormationStrategy::default()
        }
    }
}
