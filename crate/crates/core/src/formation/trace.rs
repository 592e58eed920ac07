//! Running the six transitions end to end and re-checking recorded runs.

use serde::{Deserialize, Serialize};

use crate::formation::check::{validate_transition, TransitionReport};
use crate::formation::config::FormationConfig;
use crate::formation::strategy::FormationStrategy;
use crate::formation::transitions::{
    agree_contracts, agree_workflow, discover_partners, establish_roles, identify_goals, select_partners,
    FormationError,
};
use crate::formation::vo::{PartialVO, Stage, Transition};
use crate::ids::AgentId;
use crate::protocol::dialogue::DialogueTranscript;
use crate::society::{Registry, Society};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormationStep {
    pub transition: Transition,
    pub before: PartialVO,
    pub after: PartialVO,
    pub report: TransitionReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcripts: Vec<DialogueTranscript>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationFailure {
    pub transition: Transition,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcripts: Vec<DialogueTranscript>,
    /// The error itself; only present on traces produced in this process.
    #[serde(skip)]
    pub error: Option<FormationError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationTrace {
    pub steps: Vec<FormationStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FormationFailure>,
}

impl FormationTrace {
    pub fn final_vo(&self) -> Option<&PartialVO> {
        self.steps.last().map(|s| &s.after)
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none() && self.final_vo().is_some_and(|vo| vo.stage == Stage::ContractsAgreed)
    }

    pub fn step(&self, t: Transition) -> Option<&FormationStep> {
        self.steps.iter().find(|s| s.transition == t)
    }

    pub fn error(&self) -> Option<&FormationError> {
        self.failure.as_ref().and_then(|f| f.error.as_ref())
    }
}

/// Runs identify-goals through agree-contracts, stopping at the first error.
/// Every step is re-validated as it is recorded.
pub fn run_formation(
    society: &Society,
    registry: &Registry,
    ag0: &AgentId,
    strategy: &FormationStrategy,
    config: &FormationConfig,
) -> FormationTrace {
    let mut trace = FormationTrace {
        steps: Vec::new(),
        failure: None,
    };
    let mut current = PartialVO::empty();
    for transition in Transition::ALL {
        let (result, transcripts) = match transition {
            Transition::IdentifyGoals => (identify_goals(society, registry, ag0, strategy), Vec::new()),
            Transition::DiscoverPartners => (discover_partners(&current, society, registry), Vec::new()),
            Transition::SelectPartners => (select_partners(&current, society, strategy), Vec::new()),
            Transition::EstablishRoles => (establish_roles(&current, society, strategy), Vec::new()),
            Transition::AgreeWorkflow => {
                let n = agree_workflow(&current, society, registry, config, strategy);
                (n.result, n.transcripts)
            }
            Transition::AgreeContracts => (agree_contracts(&current, society, config), Vec::new()),
        };
        let after = match result {
            Ok(vo) => vo,
            Err(e) => {
                trace.failure = Some(FormationFailure {
                    transition,
                    message: e.to_string(),
                    transcripts,
                    error: Some(e),
                });
                return trace;
            }
        };
        let report = validate_transition(society, &current, &after, transition, &transcripts);
        let passed = report.passed();
        trace.steps.push(FormationStep {
            transition,
            before: current,
            after: after.clone(),
            report,
            transcripts,
        });
        if !passed {
            trace.failure = Some(FormationFailure {
                transition,
                message: "the step does not satisfy its constraints".into(),
                transcripts: Vec::new(),
                error: None,
            });
            return trace;
        }
        current = after;
    }
    trace
}

/// Verdict of re-checking a recorded trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceCheck {
    pub reports: Vec<TransitionReport>,
    /// Breaks in the chain of tuples: a step not starting where the previous
    /// one ended, or transitions out of order.
    pub chain: Vec<String>,
}

impl TraceCheck {
    pub fn passed(&self) -> bool {
        self.chain.is_empty() && self.reports.iter().all(TransitionReport::passed)
    }
}

/// Re-validates every recorded step from its serialized tuples alone.
pub fn check_trace(society: &Society, trace: &FormationTrace) -> TraceCheck {
    let mut chain = Vec::new();
    let mut reports = Vec::new();
    let mut previous = PartialVO::empty();
    for (k, step) in trace.steps.iter().enumerate() {
        if Transition::ALL.get(k) != Some(&step.transition) {
            chain.push(format!("step {k} is {}, out of order", step.transition));
        }
        if step.before != previous {
            chain.push(format!(
                "step {k} ({}) does not start from the previous tuple",
                step.transition
            ));
        }
        reports.push(validate_transition(
            society,
            &step.before,
            &step.after,
            step.transition,
            &step.transcripts,
        ));
        previous = step.after.clone();
    }
    if trace.failure.is_none() && trace.steps.len() != Transition::ALL.len() {
        chain.push(format!("{} steps recorded without a failure", trace.steps.len()));
    }
    TraceCheck { reports, chain }
}
