//! The discovery registry of `provides(agent, service)` facts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::formula::Atom;
use crate::ids::AgentId;
use crate::service::ServiceTerm;
use crate::society::Society;
use crate::term::{unify, VarGen};

pub const PROVIDES: &str = "provides";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Registry {
    facts: BTreeSet<RegistryFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegistryFact {
    pub agent: AgentId,
    pub service: ServiceTerm,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("agent {0} is not a member of the society")]
    UnknownAgent(AgentId),
    #[error("agent {agent} holds no provider role for {service}")]
    AgentNotProvider { agent: AgentId, service: String },
    #[error("{0} is not a service of the society")]
    UnknownService(String),
}

impl RegistryFact {
    /// The fact as an atom `provides(agent,service)`.
    pub fn to_atom(&self) -> Atom {
        Atom::new(PROVIDES, vec![self.agent.to_term(), self.service.to_term()])
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn facts(&self) -> impl Iterator<Item = &RegistryFact> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Adds `provides(agent, service)`; registering a known fact changes nothing.
    pub fn register(
        &self,
        society: &Society,
        agent: &AgentId,
        service: ServiceTerm,
    ) -> Result<Registry, RegistryError> {
        let spec = society
            .agent(agent)
            .ok_or_else(|| RegistryError::UnknownAgent(agent.clone()))?;
        if !society.services().iter().any(|s| s.name == service.name) {
            return Err(RegistryError::UnknownService(service.name.clone()));
        }
        let provides_name = spec.roles.iter().any(|r| {
            r.label.is_provider()
                && r.label
                    .param
                    .as_ref()
                    .and_then(ServiceTerm::from_term)
                    .is_some_and(|p| p.name == service.name)
        });
        if !provides_name {
            return Err(RegistryError::AgentNotProvider {
                agent: agent.clone(),
                service: service.to_string(),
            });
        }
        let mut next = self.clone();
        next.facts.insert(RegistryFact {
            agent: agent.clone(),
            service,
        });
        Ok(next)
    }

    /// Agents with a registered service unifying with `goal_service`.
    pub fn query_providers(&self, goal_service: &ServiceTerm) -> BTreeSet<AgentId> {
        let goal = goal_service.to_term();
        let mut gen = VarGen::above_terms([&goal]);
        self.facts
            .iter()
            .filter(|f| {
                let offered = f.service.apply(&gen.renaming(&f.service.vars()));
                unify(&goal, &offered.to_term()).is_some()
            })
            .map(|f| f.agent.clone())
            .collect()
    }
}

/// Free-function form of [`Registry::register`].
pub fn register(
    reg: &Registry,
    society: &Society,
    agent: &AgentId,
    service: ServiceTerm,
) -> Result<Registry, RegistryError> {
    reg.register(society, agent, service)
}

/// Free-function form of [`Registry::query_providers`].
pub fn query_providers(reg: &Registry, goal_service: &ServiceTerm) -> BTreeSet<AgentId> {
    reg.query_providers(goal_service)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn s(src: &str) -> ServiceTerm {
        src.parse().unwrap()
    }

    #[test]
    fn registration_rules() {
        let soc = fixtures::earth_observation().society;
        let empty = Registry::new();
        let one = empty
            .register(&soc, &"satERS1Ag".into(), s("satImage(In,Out)"))
            .unwrap();
        assert_eq!(one.len(), 1);
        let again = one.register(&soc, &"satERS1Ag".into(), s("satImage(In,Out)")).unwrap();
        assert_eq!(again, one);
        assert!(matches!(
            empty.register(&soc, &"clientAg".into(), s("satImage(In,Out)")),
            Err(RegistryError::AgentNotProvider { .. })
        ));
        assert!(matches!(
            empty.register(&soc, &"nobody".into(), s("satImage(In,Out)")),
            Err(RegistryError::UnknownAgent(_))
        ));
        assert!(matches!(
            empty.register(&soc, &"satERS1Ag".into(), s("teleport(In,Out)")),
            Err(RegistryError::UnknownService(_))
        ));
    }

    #[test]
    fn discovery_queries() {
        let scenario = fixtures::earth_observation();
        let reg = &scenario.registry;
        let sat: Vec<String> = reg
            .query_providers(&s("satImage([38.0,-9.4,_,500,_,radar,_],_)"))
            .iter()
            .map(|a| a.to_string())
            .collect();
        assert_eq!(sat, ["radSatAg", "satERS1Ag"]);
        let spill: Vec<String> = reg
            .query_providers(&s("oilSpillDetect([_,_,5],_)"))
            .iter()
            .map(|a| a.to_string())
            .collect();
        assert_eq!(spill, ["procOSAg"]);
        assert!(Registry::new().query_providers(&s("satImage(In,Out)")).is_empty());
    }
}
