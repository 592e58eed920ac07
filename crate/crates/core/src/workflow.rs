//! Workflows: non-empty sets of services with an optional constraint annotation.

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintAnnotation;
use crate::service::ServiceTerm;
use crate::term::Substitution;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum WorkflowError {
    #[error("a workflow needs at least one service")]
    Empty,
    #[error("annotation {0} is unsatisfiable")]
    UnsatisfiableAnnotation(String),
    #[error("a concrete workflow cannot carry an annotation")]
    AnnotatedConcreteWorkflow,
    #[error("annotation variable {0} does not occur in any service")]
    UnknownAnnotationVariable(String),
    #[error("instantiation falsifies annotation {0}")]
    ConstraintViolated(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawWorkflow", into = "RawWorkflow")]
pub struct Workflow {
    services: Vec<ServiceTerm>,
    annotation: ConstraintAnnotation,
}

impl Workflow {
    /// Builds a workflow; duplicate services collapse, declaration order is kept.
    pub fn new(services: Vec<ServiceTerm>, annotation: ConstraintAnnotation) -> Result<Self, WorkflowError> {
        let mut unique: Vec<ServiceTerm> = Vec::with_capacity(services.len());
        for s in services {
            if !unique.contains(&s) {
                unique.push(s);
            }
        }
        if unique.is_empty() {
            return Err(WorkflowError::Empty);
        }
        let wf = Workflow {
            services: unique,
            annotation,
        };
        if !wf.annotation.is_satisfiable(&Substitution::new()) {
            return Err(WorkflowError::UnsatisfiableAnnotation(wf.annotation.to_string()));
        }
        if wf.is_concrete() && !wf.annotation.is_empty() {
            return Err(WorkflowError::AnnotatedConcreteWorkflow);
        }
        let mentioned: std::collections::BTreeSet<String> = wf.services.iter().flat_map(|s| s.vars()).collect();
        if let Some(v) = wf.annotation.vars().into_iter().find(|v| !mentioned.contains(v)) {
            return Err(WorkflowError::UnknownAnnotationVariable(v));
        }
        Ok(wf)
    }

    pub fn services(&self) -> &[ServiceTerm] {
        &self.services
    }

    pub fn annotation(&self) -> &ConstraintAnnotation {
        &self.annotation
    }

    pub fn is_concrete(&self) -> bool {
        self.services.iter().all(ServiceTerm::is_concrete)
    }

    /// Applies `s` to every service, checking the annotation against it and
    /// keeping only the constraints that remain open.
    pub fn instantiate(&self, s: &Substitution) -> Result<Workflow, WorkflowError> {
        let residual = self
            .annotation
            .residual(s)
            .ok_or_else(|| WorkflowError::ConstraintViolated(self.annotation.to_string()))?;
        Workflow::new(self.services.iter().map(|x| x.apply(s)).collect(), residual)
    }
}

/// Free-function form of [`Workflow::is_concrete`].
pub fn workflow_is_concrete(w: &Workflow) -> bool {
    w.is_concrete()
}

#[derive(Serialize, Deserialize)]
struct RawWorkflow {
    services: Vec<ServiceTerm>,
    #[serde(default, skip_serializing_if = "ConstraintAnnotation::is_empty")]
    annotation: ConstraintAnnotation,
}

impl TryFrom<RawWorkflow> for Workflow {
    type Error = WorkflowError;

    fn try_from(raw: RawWorkflow) -> Result<Self, Self::Error> {
        Workflow::new(raw.services, raw.annotation)
    }
}

impl From<Workflow> for RawWorkflow {
    fn from(w: Workflow) -> Self {
        RawWorkflow {
            services: w.services,
            annotation: w.annotation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(src: &str) -> ServiceTerm {
        src.parse().unwrap()
    }

    #[test]
    fn concrete_single_service() {
        let w = Workflow::new(
            vec![s("satImage([38.0,-9.4,1000,500,5,radar,3],results.data)")],
            ConstraintAnnotation::empty(),
        )
        .unwrap();
        assert!(workflow_is_concrete(&w));
    }

    #[test]
    fn annotated_example_is_abstract() {
        let w = Workflow::new(
            vec![s("satImage([38.0,-9.4,Res,500,5,ST],Out)")],
            "Res in [900,1100], ST in {radar,optical}".parse().unwrap(),
        )
        .unwrap();
        assert!(!w.is_concrete());
        let bound = Substitution::from_bindings([
            ("Res", "1000".parse().unwrap()),
            ("ST", "optical".parse().unwrap()),
            ("Out", "results.data".parse().unwrap()),
        ])
        .unwrap();
        let c = w.instantiate(&bound).unwrap();
        assert!(c.is_concrete());
        assert!(c.annotation().is_empty());
        let bad = Substitution::from_bindings([("Res", "2000".parse().unwrap())]).unwrap();
        assert!(matches!(w.instantiate(&bad), Err(WorkflowError::ConstraintViolated(_))));
    }

    #[test]
    fn invariant_violations() {
        assert_eq!(
            Workflow::new(vec![], ConstraintAnnotation::empty()),
            Err(WorkflowError::Empty)
        );
        assert_eq!(
            Workflow::new(vec![s("f(a,b)")], "X in [1,2]".parse().unwrap()),
            Err(WorkflowError::AnnotatedConcreteWorkflow)
        );
        assert_eq!(
            Workflow::new(vec![s("f(A,b)")], "X in [1,2]".parse().unwrap()),
            Err(WorkflowError::UnknownAnnotationVariable("X".into()))
        );
        assert!(matches!(
            Workflow::new(vec![s("f(X,b)")], "X in [3,2]".parse().unwrap()),
            Err(WorkflowError::UnsatisfiableAnnotation(_))
        ));
    }

    #[test]
    fn duplicates_collapse() {
        let w = Workflow::new(vec![s("f(a,b)"), s("f(a,b)")], ConstraintAnnotation::empty()).unwrap();
        assert_eq!(w.services().len(), 1);
    }
}
