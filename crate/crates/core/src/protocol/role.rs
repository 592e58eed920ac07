//! Role labels, locutions, guarded operations and protocol clauses.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::term::{match_term, Substitution, Term, VarGen};

pub const REQUESTER: &str = "requester";
pub const PROVIDER: &str = "provider";

/// A role identifier such as `requester(S)` or `arbitrator`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoleLabel {
    pub name: String,
    pub param: Option<Term>,
}

impl RoleLabel {
    pub fn new(name: impl Into<String>, param: Option<Term>) -> Self {
        RoleLabel {
            name: name.into(),
            param,
        }
    }

    pub fn requester(service: Term) -> Self {
        RoleLabel::new(REQUESTER, Some(service))
    }

    pub fn provider(service: Term) -> Self {
        RoleLabel::new(PROVIDER, Some(service))
    }

    pub fn is_requester(&self) -> bool {
        self.name == REQUESTER
    }

    pub fn is_provider(&self) -> bool {
        self.name == PROVIDER
    }

    /// Requester and provider labels must name the service they are about.
    pub fn is_well_formed(&self) -> bool {
        !self.name.is_empty() && (self.param.is_some() || !(self.is_requester() || self.is_provider()))
    }

    pub fn to_term(&self) -> Term {
        match &self.param {
            Some(p) => Term::App(self.name.clone(), vec![p.clone()]),
            None => Term::Sym(self.name.clone()),
        }
    }

    pub fn from_term(t: &Term) -> Option<RoleLabel> {
        match t {
            Term::Sym(name) => Some(RoleLabel::new(name.clone(), None)),
            Term::App(name, args) if args.len() == 1 => Some(RoleLabel::new(name.clone(), Some(args[0].clone()))),
            _ => None,
        }
    }

    pub fn apply(&self, s: &Substitution) -> RoleLabel {
        RoleLabel::new(self.name.clone(), self.param.as_ref().map(|p| s.apply(p)))
    }

    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> RoleLabel {
        RoleLabel::new(self.name.clone(), self.param.as_ref().map(|p| p.rename_vars(f)))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Some(p) = &self.param {
            p.collect_vars(out);
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn is_instance_of(&self, general: &RoleLabel) -> bool {
        crate::term::is_instance_of(&self.to_term(), &general.to_term())
    }
}

/// Performative plus optional content, e.g. `request(S)` or `accept`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Locution {
    pub performative: String,
    pub content: Option<Term>,
}

impl Locution {
    pub fn new(performative: impl Into<String>, content: Option<Term>) -> Self {
        Locution {
            performative: performative.into(),
            content,
        }
    }

    pub fn to_term(&self) -> Term {
        match &self.content {
            Some(c) => Term::App(self.performative.clone(), vec![c.clone()]),
            None => Term::Sym(self.performative.clone()),
        }
    }

    pub fn from_term(t: &Term) -> Option<Locution> {
        match t {
            Term::Sym(p) => Some(Locution::new(p.clone(), None)),
            Term::App(p, args) if args.len() == 1 => Some(Locution::new(p.clone(), Some(args[0].clone()))),
            _ => None,
        }
    }

    pub fn apply(&self, s: &Substitution) -> Locution {
        Locution::new(self.performative.clone(), self.content.as_ref().map(|c| s.apply(c)))
    }

    fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> Locution {
        Locution::new(
            self.performative.clone(),
            self.content.as_ref().map(|c| c.rename_vars(f)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Send,
    Receive,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Send => "send",
            Direction::Receive => "receive",
        }
    }
}

/// `pre [send(m,partner,role)] post` or `pre [receive(m,partner,role)] post`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProtocolOperation {
    pub precondition: Formula,
    pub direction: Direction,
    pub locution: Locution,
    pub partner: Term,
    pub partner_role: RoleLabel,
    pub postcondition: Formula,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("postcondition variable {0} occurs neither in the precondition, the locution nor the partner")]
    UnboundPostconditionVariable(String),
    #[error("the partner must be a variable or an agent identifier")]
    InvalidPartner,
    #[error("the performative must not be empty")]
    EmptyPerformative,
    #[error("a protocol clause needs at least one operation")]
    EmptyClause,
    #[error("role label {label} is not an instance of clause head {head}")]
    LabelNotInstance { label: String, head: String },
    #[error("postcondition {0} must be a conjunction of possibly negated atoms")]
    InvalidPostcondition(String),
    #[error("role label {0} is missing its service parameter")]
    MalformedLabel(String),
}

impl ProtocolOperation {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.locution.performative.is_empty() {
            return Err(ProtocolError::EmptyPerformative);
        }
        if !matches!(self.partner, Term::Var(_) | Term::Sym(_)) {
            return Err(ProtocolError::InvalidPartner);
        }
        if !self.partner_role.is_well_formed() {
            return Err(ProtocolError::MalformedLabel(self.partner_role.to_string()));
        }
        if self.postcondition.literals().is_none() {
            return Err(ProtocolError::InvalidPostcondition(self.postcondition.to_string()));
        }
        let mut allowed = self.precondition.vars();
        if let Some(c) = &self.locution.content {
            c.collect_vars(&mut allowed);
        }
        self.partner.collect_vars(&mut allowed);
        if let Some(v) = self.postcondition.vars().into_iter().find(|v| !allowed.contains(v)) {
            return Err(ProtocolError::UnboundPostconditionVariable(v));
        }
        Ok(())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.precondition.collect_vars(out);
        if let Some(c) = &self.locution.content {
            c.collect_vars(out);
        }
        self.partner.collect_vars(out);
        self.partner_role.collect_vars(out);
        self.postcondition.collect_vars(out);
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, s: &Substitution) -> ProtocolOperation {
        ProtocolOperation {
            precondition: self.precondition.apply(s),
            direction: self.direction,
            locution: self.locution.apply(s),
            partner: s.apply(&self.partner),
            partner_role: self.partner_role.apply(s),
            postcondition: self.postcondition.apply(s),
        }
    }

    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> ProtocolOperation {
        ProtocolOperation {
            precondition: self.precondition.rename_vars(f),
            direction: self.direction,
            locution: self.locution.rename_vars(f),
            partner: self.partner.rename_vars(f),
            partner_role: self.partner_role.rename_vars(f),
            postcondition: self.postcondition.rename_vars(f),
        }
    }
}

/// A named, ordered set of operations defining the behaviour of roles whose
/// labels are instances of `head`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProtocolClause {
    pub name: String,
    pub head: RoleLabel,
    pub operations: Vec<ProtocolOperation>,
}

impl ProtocolClause {
    pub fn new(
        name: impl Into<String>,
        head: RoleLabel,
        operations: Vec<ProtocolOperation>,
    ) -> Result<Self, ProtocolError> {
        if operations.is_empty() {
            return Err(ProtocolError::EmptyClause);
        }
        if !head.is_well_formed() {
            return Err(ProtocolError::MalformedLabel(head.to_string()));
        }
        for op in &operations {
            op.validate()?;
        }
        Ok(ProtocolClause {
            name: name.into(),
            head,
            operations,
        })
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = self.head.vars();
        for op in &self.operations {
            op.collect_vars(&mut out);
        }
        out
    }
}

/// A role `<label, clause>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role {
    pub label: RoleLabel,
    pub clause: ProtocolClause,
}

/// A role's operations specialised to its label, with clause variables
/// renamed apart from everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleInstance {
    pub label: RoleLabel,
    pub operations: Vec<ProtocolOperation>,
    /// For each operation, the variables that belong to that operation alone
    /// and get fresh names every time it fires.
    pub local_vars: Vec<BTreeSet<String>>,
    /// Maps each renamed clause variable back to its name in the clause.
    pub origin: Vec<(String, String)>,
    /// Binds the renamed head to the label.
    pub head_binding: Substitution,
}

impl Role {
    pub fn new(label: RoleLabel, clause: ProtocolClause) -> Result<Self, ProtocolError> {
        if !label.is_well_formed() {
            return Err(ProtocolError::MalformedLabel(label.to_string()));
        }
        if !label.is_instance_of(&clause.head) {
            return Err(ProtocolError::LabelNotInstance {
                label: label.to_string(),
                head: clause.head.to_string(),
            });
        }
        Ok(Role { label, clause })
    }

    /// The same clause played under a more specific label.
    pub fn specialise(&self, label: RoleLabel) -> Result<Role, ProtocolError> {
        Role::new(label, self.clause.clone())
    }

    /// Renames the clause apart using `gen`, then binds its head to the label.
    pub fn instantiate(&self, gen: &mut VarGen) -> RoleInstance {
        let clause_vars = self.clause.vars();
        let renaming = gen.renaming(&clause_vars);
        let head = self.clause.head.apply(&renaming);
        let theta =
            match_term(&head.to_term(), &self.label.to_term()).expect("role label is an instance of its clause head");
        let head_vars = head.vars();
        let operations: Vec<ProtocolOperation> = self
            .clause
            .operations
            .iter()
            .map(|op| op.apply(&renaming).apply(&theta))
            .collect();
        let local_vars = self
            .clause
            .operations
            .iter()
            .map(|op| {
                op.apply(&renaming)
                    .vars()
                    .into_iter()
                    .filter(|v| !head_vars.contains(v))
                    .collect()
            })
            .collect();
        let origin = renaming
            .iter()
            .filter_map(|(orig, t)| match t {
                Term::Var(fresh) => Some((fresh.clone(), orig.clone())),
                _ => None,
            })
            .collect();
        RoleInstance {
            label: self.label.clone(),
            operations,
            local_vars,
            origin,
            head_binding: theta,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawClause {
    name: String,
    head: RoleLabel,
    operations: Vec<ProtocolOperation>,
}

impl Serialize for ProtocolClause {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawClause {
            name: self.name.clone(),
            head: self.head.clone(),
            operations: self.operations.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProtocolClause {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawClause::deserialize(deserializer)?;
        ProtocolClause::new(raw.name, raw.head, raw.operations).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RawRole {
    label: RoleLabel,
    clause: ProtocolClause,
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawRole {
            label: self.label.clone(),
            clause: self.clause.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawRole::deserialize(deserializer)?;
        Role::new(raw.label, raw.clause).map_err(serde::de::Error::custom)
    }
}
