//! The agent society: agents, services, the roles they induce, and the
//! discovery registry.

pub mod agent;
pub mod registry;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::Atom;
use crate::ids::AgentId;
use crate::protocol::coherence::{check_role_goal_coherence, CoherenceRule};
use crate::protocol::kb::KnowledgeBase;
use crate::protocol::role::{Role, RoleLabel};
use crate::service::ServiceTerm;
use crate::term::{unify, VarGen};

pub use agent::{AgentSpec, FulfilmentPairing};
pub use registry::{query_providers, register, Registry, RegistryError, RegistryFact};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SocietyViolation {
    DuplicateAgentId(AgentId),
    MalformedAgentId(AgentId),
    FewerThanTwoAgents(usize),
    NoServices,
    DuplicateService(String),
    ServiceWithoutProvider(ServiceTerm),
    ServiceWithoutRequester(ServiceTerm),
    NoRoles(AgentId),
    NoGoals(AgentId),
    MalformedFulfilment(AgentId, FulfilmentPairing),
    IncoherentAgent {
        agent: AgentId,
        rule: CoherenceRule,
        detail: String,
    },
}

impl fmt::Display for SocietyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SocietyViolation::DuplicateAgentId(id) => write!(f, "agent id {id} is declared more than once"),
            SocietyViolation::MalformedAgentId(id) => {
                write!(f, "agent id `{id}` must be a lowercase identifier")
            }
            SocietyViolation::FewerThanTwoAgents(n) => write!(f, "a society needs at least two agents, found {n}"),
            SocietyViolation::NoServices => write!(f, "a society needs at least one service"),
            SocietyViolation::DuplicateService(name) => write!(f, "service {name} is declared more than once"),
            SocietyViolation::ServiceWithoutProvider(s) => write!(f, "no agent can play provider({s})"),
            SocietyViolation::ServiceWithoutRequester(s) => write!(f, "no agent can play requester({s})"),
            SocietyViolation::NoRoles(id) => write!(f, "agent {id} has no roles"),
            SocietyViolation::NoGoals(id) => write!(f, "agent {id} has no goals"),
            SocietyViolation::MalformedFulfilment(id, p) => write!(
                f,
                "agent {id}: fulfilment {} introduces variables absent from goal {}",
                p.fulfilled_by, p.goal
            ),
            SocietyViolation::IncoherentAgent { agent, rule, detail } => {
                write!(f, "agent {agent} violates coherence ({rule}): {detail}")
            }
        }
    }
}

/// Every rule a candidate society broke.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid society: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct SocietyReport {
    pub violations: Vec<SocietyViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Society {
    agents: Vec<AgentSpec>,
    index: BTreeMap<AgentId, usize>,
    services: Vec<ServiceTerm>,
    ontology: Vec<Atom>,
}

/// Whether some role label named `name` has a parameter unifying with `service`.
fn has_label_for(agents: &[AgentSpec], name: &str, service: &ServiceTerm) -> bool {
    let target = service.to_term();
    let mut gen = VarGen::above_terms([&target]);
    agents.iter().flat_map(|a| &a.roles).any(|r| {
        r.label.name == name
            && r.label.param.as_ref().is_some_and(|p| {
                let renamed = gen.renaming(&p.vars()).apply(p);
                unify(&renamed, &target).is_some()
            })
    })
}

/// Assembles a society, reporting every violated rule at once.
pub fn build_society(
    agents: Vec<AgentSpec>,
    services: Vec<ServiceTerm>,
    ontology: Vec<Atom>,
) -> Result<Society, SocietyReport> {
    let mut violations = Vec::new();
    if agents.len() < 2 {
        violations.push(SocietyViolation::FewerThanTwoAgents(agents.len()));
    }
    if services.is_empty() {
        violations.push(SocietyViolation::NoServices);
    }
    let mut index = BTreeMap::new();
    for (i, a) in agents.iter().enumerate() {
        if !a.id.is_well_formed() {
            violations.push(SocietyViolation::MalformedAgentId(a.id.clone()));
        }
        if index.insert(a.id.clone(), i).is_some() {
            violations.push(SocietyViolation::DuplicateAgentId(a.id.clone()));
        }
    }
    let mut names = BTreeSet::new();
    for s in &services {
        if !names.insert(s.name.clone()) {
            violations.push(SocietyViolation::DuplicateService(s.name.clone()));
        }
    }
    for s in &services {
        if !has_label_for(&agents, crate::protocol::role::PROVIDER, s) {
            violations.push(SocietyViolation::ServiceWithoutProvider(s.clone()));
        }
        if !has_label_for(&agents, crate::protocol::role::REQUESTER, s) {
            violations.push(SocietyViolation::ServiceWithoutRequester(s.clone()));
        }
    }
    for a in &agents {
        if a.roles.is_empty() {
            violations.push(SocietyViolation::NoRoles(a.id.clone()));
        }
        if a.goals.is_empty() {
            violations.push(SocietyViolation::NoGoals(a.id.clone()));
        }
        for p in &a.fulfilment {
            if !p.is_well_formed() {
                violations.push(SocietyViolation::MalformedFulfilment(a.id.clone(), p.clone()));
            }
        }
        let report = check_role_goal_coherence(a);
        for label in report.roles_without_goal {
            violations.push(SocietyViolation::IncoherentAgent {
                agent: a.id.clone(),
                rule: CoherenceRule::RoleEnabledByGoal,
                detail: format!("no goal enables role {label}"),
            });
        }
        for goal in report.goals_without_role {
            violations.push(SocietyViolation::IncoherentAgent {
                agent: a.id.clone(),
                rule: CoherenceRule::GoalFulfilledByRole,
                detail: format!("no role can fulfil goal {goal} (fulfilment {})", a.fulfilment_of(&goal)),
            });
        }
    }
    if violations.is_empty() {
        Ok(Society {
            agents,
            index,
            services,
            ontology,
        })
    } else {
        Err(SocietyReport { violations })
    }
}

impl Society {
    /// Agents in declaration order.
    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentSpec> {
        self.index.get(id).map(|&i| &self.agents[i])
    }

    pub fn services(&self) -> &[ServiceTerm] {
        &self.services
    }

    pub fn ontology(&self) -> &[Atom] {
        &self.ontology
    }

    /// All roles any agent can play.
    pub fn roles(&self) -> BTreeSet<&Role> {
        self.agents.iter().flat_map(|a| &a.roles).collect()
    }

    /// All role labels any agent can play.
    pub fn role_labels(&self) -> BTreeSet<&RoleLabel> {
        self.roles().into_iter().map(|r| &r.label).collect()
    }

    /// The agent's knowledge at the start of formation: its private facts,
    /// its goals, the ontology, and every registry advertisement.
    pub fn initial_kb(&self, id: &AgentId, registry: &Registry) -> Option<KnowledgeBase> {
        let agent = self.agent(id)?;
        Some(
            agent
                .knowledge
                .iter()
                .chain(&agent.goals)
                .chain(&self.ontology)
                .cloned()
                .chain(registry.facts().map(RegistryFact::to_atom))
                .collect(),
        )
    }

    /// Whether `agent` can play a role with label `label` (an instance of one
    /// of its own labels) under protocol clause `clause`.
    pub fn admits_role(&self, agent: &AgentId, role: &Role) -> bool {
        self.agent(agent).is_some_and(|a| {
            a.roles
                .iter()
                .any(|r| r.clause == role.clause && role.label.is_instance_of(&r.label))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn earth_observation_society_is_valid() {
        let soc = fixtures::earth_observation().society;
        assert_eq!(soc.agents().len(), 5);
        assert_eq!(soc.services().len(), 4);
        let labels: Vec<String> = soc.role_labels().iter().map(|l| l.to_string()).collect();
        assert!(labels.contains(&"provider(satImage(In,Out))".to_string()));
        assert!(labels.contains(&"provider(oilSpillDetect(In,Out))".to_string()));
    }

    #[test]
    fn single_agent_is_rejected() {
        let soc = fixtures::earth_observation().society;
        let err = build_society(vec![soc.agents()[0].clone()], soc.services().to_vec(), vec![]).unwrap_err();
        assert!(err.violations.contains(&SocietyViolation::FewerThanTwoAgents(1)));
    }

    #[test]
    fn removing_the_only_reprojection_provider() {
        let soc = fixtures::earth_observation().society;
        let agents: Vec<AgentSpec> = soc
            .agents()
            .iter()
            .filter(|a| a.id.as_str() != "procOSAg")
            .cloned()
            .collect();
        let err = build_society(agents, soc.services().to_vec(), vec![]).unwrap_err();
        let missing: Vec<String> = err
            .violations
            .iter()
            .filter_map(|v| match v {
                SocietyViolation::ServiceWithoutProvider(s) => Some(s.name.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(missing, ["formatConversion", "reprojection"]);
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let soc = fixtures::earth_observation().society;
        let mut agents = soc.agents().to_vec();
        agents.push(agents[1].clone());
        let err = build_society(agents, soc.services().to_vec(), vec![]).unwrap_err();
        assert!(err
            .violations
            .contains(&SocietyViolation::DuplicateAgentId("satERS1Ag".into())));
    }

    #[test]
    fn initial_kb_combines_sources() {
        let scenario = fixtures::earth_observation();
        let kb = scenario
            .society
            .initial_kb(&"clientAg".into(), &scenario.registry)
            .unwrap();
        assert!(kb.contains(&"toBuy(oilSpillDetect([_,_,5],_))".parse().unwrap()));
        assert!(kb.contains(
            &"provides(satERS1Ag,satImage([38.0,-9.4,1000,500,5,radar,3],results.data))"
                .parse()
                .unwrap()
        ));
    }
}
