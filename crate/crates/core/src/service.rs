//! Service descriptions `name(In,Out)` and their instantiation level.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::term::{Substitution, Term};

/// A service of type `name` with input and output arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceTerm {
    pub name: String,
    pub input: Term,
    pub output: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstantiationLevel {
    Abstract,
    PartiallyInstantiated,
    Concrete,
}

impl ServiceTerm {
    pub fn new(name: impl Into<String>, input: Term, output: Term) -> Self {
        ServiceTerm {
            name: name.into(),
            input,
            output,
        }
    }

    /// `name(In,Out)` with two fresh-looking variables.
    pub fn abstract_named(name: impl Into<String>) -> Self {
        ServiceTerm::new(name, Term::var("In"), Term::var("Out"))
    }

    pub fn level(&self) -> InstantiationLevel {
        if self.is_concrete() {
            InstantiationLevel::Concrete
        } else if is_open(&self.input) && is_open(&self.output) {
            InstantiationLevel::Abstract
        } else {
            InstantiationLevel::PartiallyInstantiated
        }
    }

    pub fn is_concrete(&self) -> bool {
        self.input.is_ground() && self.output.is_ground()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.input.collect_vars(&mut out);
        self.output.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, s: &Substitution) -> ServiceTerm {
        ServiceTerm {
            name: self.name.clone(),
            input: s.apply(&self.input),
            output: s.apply(&self.output),
        }
    }

    pub fn to_term(&self) -> Term {
        Term::App(self.name.clone(), vec![self.input.clone(), self.output.clone()])
    }

    pub fn from_term(term: &Term) -> Option<ServiceTerm> {
        match term {
            Term::App(name, args) if args.len() == 2 => {
                Some(ServiceTerm::new(name.clone(), args[0].clone(), args[1].clone()))
            }
            _ => None,
        }
    }
}

/// A variable, or a non-empty list made only of open terms.
fn is_open(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::List(items) => !items.is_empty() && items.iter().all(is_open),
        _ => false,
    }
}

/// Instantiation level of a service term given by its level alone.
pub fn instantiation_level(s: &ServiceTerm) -> InstantiationLevel {
    s.level()
}
