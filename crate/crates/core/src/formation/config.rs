//! Formation settings read from the scenario's `formation` section.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::ids::AgentId;
use crate::workflow::Workflow;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    /// The first successful provider in identifier order.
    #[default]
    First,
    /// A successful provider drawn from a generator seeded by the run seed.
    Seeded,
}

/// Pins the clause used for the role `role(s)` of every goal service `s`
/// named `service`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolChoice {
    pub role: String,
    pub service: String,
    pub clause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormationConfig {
    pub initiator: AgentId,
    /// Allow-list for partner selection; absent means everyone is trusted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted: Option<Vec<AgentId>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protocol_choice: Vec<ProtocolChoice>,
    pub max_dialogue_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub provider_choice: ProviderChoice,
    /// Shapes the goal services take in the workflow, with their annotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workflow: Option<Workflow>,
    /// Guarantee terms attached to the contract of each service, by service name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub guarantees: BTreeMap<String, Vec<Formula>>,
}

impl FormationConfig {
    pub fn new(initiator: impl Into<AgentId>) -> Self {
        FormationConfig {
            initiator: initiator.into(),
            trusted: None,
            protocol_choice: Vec::new(),
            max_dialogue_steps: 16,
            seed: 0,
            provider_choice: ProviderChoice::First,
            workflow: None,
            guarantees: BTreeMap::new(),
        }
    }
}
