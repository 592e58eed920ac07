//! Scenario and trace files: JSON documents whose terms, atoms, formulas and
//! protocol operations are strings in the canonical syntax.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::formation::{check_trace, run_formation, FormationConfig, FormationStrategy, FormationTrace, TraceCheck};
use crate::formula::Atom;
use crate::ids::AgentId;
use crate::protocol::role::{ProtocolClause, ProtocolOperation, Role, RoleLabel, PROVIDER, REQUESTER};
use crate::service::ServiceTerm;
use crate::society::{build_society, AgentSpec, FulfilmentPairing, Registry, RegistryFact, Society, SocietyViolation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseDecl {
    pub name: String,
    pub head: RoleLabel,
    pub operations: Vec<ProtocolOperation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDecl {
    pub label: RoleLabel,
    /// Name of a clause in the `clauses` section.
    pub clause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDecl {
    pub id: AgentId,
    pub roles: Vec<RoleDecl>,
    pub goals: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fulfilment: Vec<FulfilmentPairing>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub knowledge: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub services: Vec<ServiceTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ontology: Vec<Atom>,
    pub clauses: Vec<ClauseDecl>,
    pub agents: Vec<AgentDecl>,
    #[serde(default)]
    pub registry: Vec<RegistryFact>,
    pub formation: FormationConfig,
}

/// A scenario that passed every check, with its society built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub society: Society,
    pub registry: Registry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticIssue {
    /// Path to the offending field, e.g. `agents[0].roles[1].clause`.
    pub field: String,
    pub rule: String,
}

impl fmt::Display for SemanticIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} problem(s):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Semantic(Vec<SemanticIssue>),
}

impl ScenarioError {
    pub fn issues(&self) -> &[SemanticIssue] {
        match self {
            ScenarioError::Semantic(v) => v,
            _ => &[],
        }
    }
}

fn syntax(e: serde_json::Error) -> ScenarioError {
    ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    parse_scenario_str(&read(path.as_ref())?)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(syntax)?;
    file.validate()
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("values serialize to JSON");
    out.push('\n');
    out
}

struct Issues(Vec<SemanticIssue>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, rule: impl fmt::Display) {
        self.0.push(SemanticIssue {
            field: field.into(),
            rule: rule.to_string(),
        });
    }
}

impl ScenarioFile {
    /// The file's normalized text.
    pub fn to_json(&self) -> String {
        to_pretty_json(self)
    }

    fn agent_field(&self, id: &AgentId) -> String {
        match self.agents.iter().position(|a| a.id == *id) {
            Some(i) => format!("agents[{i}]"),
            None => format!("agents[{id}]"),
        }
    }

    fn service_field(&self, name: &str) -> String {
        match self.services.iter().position(|s| s.name == name) {
            Some(i) => format!("services[{i}]"),
            None => "services".into(),
        }
    }

    /// Checks the file against every society and formation rule and builds
    /// the society.
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let mut issues = Issues(Vec::new());

        let mut clauses: Vec<(&str, ProtocolClause)> = Vec::new();
        for (i, c) in self.clauses.iter().enumerate() {
            if clauses.iter().any(|(n, _)| *n == c.name) {
                issues.push(
                    format!("clauses[{i}].name"),
                    format!("clause {} is defined more than once", c.name),
                );
                continue;
            }
            match ProtocolClause::new(c.name.clone(), c.head.clone(), c.operations.clone()) {
                Ok(clause) => clauses.push((c.name.as_str(), clause)),
                Err(e) => issues.push(format!("clauses[{i}]"), e),
            }
        }

        let mut agents = Vec::new();
        for (i, a) in self.agents.iter().enumerate() {
            let mut roles = Vec::new();
            for (j, r) in a.roles.iter().enumerate() {
                let Some((_, clause)) = clauses.iter().find(|(n, _)| *n == r.clause) else {
                    issues.push(
                        format!("agents[{i}].roles[{j}].clause"),
                        format!("no clause named {}", r.clause),
                    );
                    continue;
                };
                match Role::new(r.label.clone(), clause.clone()) {
                    Ok(role) => roles.push(role),
                    Err(e) => issues.push(format!("agents[{i}].roles[{j}].label"), e),
                }
            }
            agents.push(
                AgentSpec::new(a.id.clone(), roles, a.goals.clone())
                    .with_fulfilment(a.fulfilment.clone())
                    .with_knowledge(a.knowledge.clone()),
            );
        }

        let society = match build_society(agents, self.services.clone(), self.ontology.clone()) {
            Ok(s) => Some(s),
            Err(report) => {
                for v in report.violations {
                    let field = match &v {
                        SocietyViolation::DuplicateAgentId(id) | SocietyViolation::MalformedAgentId(id) => {
                            format!("{}.id", self.agent_field(id))
                        }
                        SocietyViolation::FewerThanTwoAgents(_) => "agents".into(),
                        SocietyViolation::NoServices => "services".into(),
                        SocietyViolation::DuplicateService(name) => self.service_field(name),
                        SocietyViolation::ServiceWithoutProvider(s) | SocietyViolation::ServiceWithoutRequester(s) => {
                            self.service_field(&s.name)
                        }
                        SocietyViolation::NoRoles(id) => format!("{}.roles", self.agent_field(id)),
                        SocietyViolation::NoGoals(id) => format!("{}.goals", self.agent_field(id)),
                        SocietyViolation::MalformedFulfilment(id, _) => format!("{}.fulfilment", self.agent_field(id)),
                        SocietyViolation::IncoherentAgent { agent, .. } => self.agent_field(agent),
                    };
                    issues.push(field, v);
                }
                None
            }
        };

        let mut registry = Registry::new();
        if let Some(society) = &society {
            for (i, fact) in self.registry.iter().enumerate() {
                match registry.register(society, &fact.agent, fact.service.clone()) {
                    Ok(r) => registry = r,
                    Err(e) => issues.push(format!("registry[{i}]"), e),
                }
            }
        }

        self.validate_formation(&mut issues);

        match society {
            Some(society) if issues.0.is_empty() => Ok(Scenario {
                file: self.clone(),
                society,
                registry,
            }),
            _ => Err(ScenarioError::Semantic(issues.0)),
        }
    }

    fn validate_formation(&self, issues: &mut Issues) {
        let f = &self.formation;
        let ids: BTreeSet<&AgentId> = self.agents.iter().map(|a| &a.id).collect();
        let services: BTreeSet<&str> = self.services.iter().map(|s| s.name.as_str()).collect();
        if !ids.contains(&f.initiator) {
            issues.push("formation.initiator", format!("{} is not an agent", f.initiator));
        }
        for (k, id) in f.trusted.iter().flatten().enumerate() {
            if !ids.contains(id) {
                issues.push(format!("formation.trusted[{k}]"), format!("{id} is not an agent"));
            }
        }
        for (k, choice) in f.protocol_choice.iter().enumerate() {
            if choice.role != REQUESTER && choice.role != PROVIDER {
                issues.push(
                    format!("formation.protocol_choice[{k}].role"),
                    "must be requester or provider",
                );
            }
            if !services.contains(choice.service.as_str()) {
                issues.push(
                    format!("formation.protocol_choice[{k}].service"),
                    format!("{} is not a service", choice.service),
                );
            }
            if !self.clauses.iter().any(|c| c.name == choice.clause) {
                issues.push(
                    format!("formation.protocol_choice[{k}].clause"),
                    format!("no clause named {}", choice.clause),
                );
            }
        }
        if f.max_dialogue_steps == 0 {
            issues.push("formation.max_dialogue_steps", "must be at least 1");
        }
        if let Some(w) = &f.workflow {
            for (k, s) in w.services().iter().enumerate() {
                if !services.contains(s.name.as_str()) {
                    issues.push(
                        format!("formation.workflow.services[{k}]"),
                        format!("{} is not a service", s.name),
                    );
                }
            }
        }
        for name in f.guarantees.keys() {
            if !services.contains(name.as_str()) {
                issues.push(
                    format!("formation.guarantees.{name}"),
                    format!("{name} is not a service"),
                );
            }
        }
    }
}

impl Scenario {
    pub fn config(&self) -> &FormationConfig {
        &self.file.formation
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.file.formation.seed = seed;
        self
    }

    pub fn with_max_dialogue_steps(mut self, steps: usize) -> Self {
        self.file.formation.max_dialogue_steps = steps;
        self
    }

    /// Runs formation with the default strategies configured by the file.
    pub fn run(&self) -> FormationTrace {
        let config = self.config();
        let strategy = FormationStrategy::from_config(config);
        run_formation(&self.society, &self.registry, &config.initiator, &strategy, config)
    }

    /// The run packaged with the scenario that produced it.
    pub fn trace_file(&self, trace: FormationTrace) -> TraceFile {
        TraceFile {
            scenario: self.file.clone(),
            trace,
        }
    }
}

/// A recorded run, self-contained: the scenario travels with the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub scenario: ScenarioFile,
    pub trace: FormationTrace,
}

impl TraceFile {
    pub fn to_json(&self) -> String {
        to_pretty_json(self)
    }

    /// Re-validates every recorded step against the embedded scenario.
    pub fn check(&self) -> Result<TraceCheck, ScenarioError> {
        let scenario = self.scenario.validate()?;
        Ok(check_trace(&scenario.society, &self.trace))
    }
}

pub fn parse_trace(path: impl AsRef<Path>) -> Result<TraceFile, ScenarioError> {
    parse_trace_str(&read(path.as_ref())?)
}

pub fn parse_trace_str(text: &str) -> Result<TraceFile, ScenarioError> {
    serde_json::from_str(text).map_err(syntax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn bundled() -> ScenarioFile {
        fixtures::earth_observation().file
    }

    #[test]
    fn bundled_scenario_is_valid() {
        let s = fixtures::earth_observation();
        assert_eq!(s.society.agents().len(), 5);
        assert_eq!(s.society.services().len(), 4);
        assert_eq!(s.file.name, "earth_observation");
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let file = bundled();
        let text = file.to_json();
        let again = parse_scenario_str(&text).unwrap();
        assert_eq!(again.file, file);
        assert_eq!(again.file.to_json(), text);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let mut text = bundled().to_json();
        text.insert_str(text.find("\"agents\"").unwrap(), "oops ");
        match parse_scenario_str(&text) {
            Err(ScenarioError::Syntax { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        let bad_term = bundled()
            .to_json()
            .replace("toBuy(oilSpillDetect([_,_,5],_))", "toBuy(oilSpillDetect([_,_,5],_)");
        assert!(matches!(
            parse_scenario_str(&bad_term),
            Err(ScenarioError::Syntax { .. })
        ));
    }

    #[test]
    fn duplicate_agent_id_is_semantic() {
        let mut file = bundled();
        let copy = file.agents[1].clone();
        file.agents.push(copy);
        let err = file.validate().unwrap_err();
        assert!(err.issues().iter().any(|i| i.field == "agents[1].id"), "{err}");
    }

    #[test]
    fn missing_pairing_breaks_coherence() {
        let mut file = bundled();
        let client = file.agents.iter_mut().find(|a| a.id.as_str() == "clientAg").unwrap();
        client.fulfilment.clear();
        let err = file.validate().unwrap_err();
        assert!(
            err.issues()
                .iter()
                .any(|i| i.field == "agents[0]" && i.rule.contains("coherence (b)")),
            "{err}"
        );
    }

    #[test]
    fn unknown_references_are_located() {
        let mut file = bundled();
        file.agents[0].roles[0].clause = "nope".into();
        file.formation.initiator = "ghost".into();
        file.formation.max_dialogue_steps = 0;
        let fields: Vec<String> = file
            .validate()
            .unwrap_err()
            .issues()
            .iter()
            .map(|i| i.field.clone())
            .collect();
        assert!(fields.contains(&"agents[0].roles[0].clause".to_string()));
        assert!(fields.contains(&"formation.initiator".to_string()));
        assert!(fields.contains(&"formation.max_dialogue_steps".to_string()));
    }

    #[test]
    fn trace_round_trip() {
        let s = fixtures::earth_observation();
        let tf = s.trace_file(s.run());
        let text = tf.to_json();
        let back = parse_trace_str(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(back.check().unwrap().passed());
    }
}
