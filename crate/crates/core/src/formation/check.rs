//! Independent re-validation of formation transitions.
//!
//! Nothing here calls into the transitions; every rule is re-derived from the
//! before/after tuples, the society and the recorded dialogues.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contract::Contract;
use crate::formation::vo::{Member, PartialVO, Stage, Transition};
use crate::formula::Atom;
use crate::ids::AgentId;
use crate::protocol::dialogue::{DialogueTranscript, Outcome};
use crate::protocol::role::{Role, RoleLabel};
use crate::service::ServiceTerm;
use crate::society::Society;
use crate::term::{is_instance_of, unify, Substitution, Term, VarGen};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub transition: Transition,
    pub checks: Vec<Check>,
}

impl TransitionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for TransitionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:", self.transition)?;
        for c in &self.checks {
            write!(f, "  [{}] {}", if c.passed { "pass" } else { "FAIL" }, c.name)?;
            if let Some(d) = &c.detail {
                write!(f, ": {d}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, failure: Option<String>) {
        self.0.push(Check {
            name: name.to_string(),
            passed: failure.is_none(),
            detail: failure,
        });
    }

    fn require(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        self.add(name, (!ok).then(detail));
    }
}

fn service_of(goal: &Atom) -> Option<ServiceTerm> {
    if goal.predicate != "toBuy" || goal.args.len() != 1 {
        return None;
    }
    match &goal.args[0] {
        Term::App(name, args) if args.len() == 2 => {
            Some(ServiceTerm::new(name.clone(), args[0].clone(), args[1].clone()))
        }
        _ => None,
    }
}

fn goal_services(goals: &[Atom]) -> Vec<(Atom, ServiceTerm)> {
    goals
        .iter()
        .filter_map(|g| service_of(g).map(|s| (g.clone(), s)))
        .collect()
}

fn apart_unify(a: &Term, b: &Term) -> bool {
    let mut gen = VarGen::above_terms([a, b]);
    let b = gen.renaming(&b.vars()).apply(b);
    unify(a, &b).is_some()
}

fn can_provide(society: &Society, id: &AgentId, s: &ServiceTerm) -> bool {
    let t = s.to_term();
    society.agent(id).is_some_and(|a| {
        a.roles
            .iter()
            .any(|r| r.label.name == "provider" && r.label.param.as_ref().is_some_and(|p| apart_unify(&t, p)))
    })
}

fn as_set<T: Ord + Clone>(items: &[T]) -> BTreeSet<T> {
    items.iter().cloned().collect()
}

fn list<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Re-checks every constraint of `kind` on the pair `before -> after`.
/// `transcripts` are the dialogues recorded for the step.
pub fn validate_transition(
    society: &Society,
    before: &PartialVO,
    after: &PartialVO,
    kind: Transition,
    transcripts: &[DialogueTranscript],
) -> TransitionReport {
    let mut c = Checks(Vec::new());
    general_checks(&mut c, society, before, after, kind);
    match kind {
        Transition::IdentifyGoals => identify_checks(&mut c, society, before, after),
        Transition::DiscoverPartners => discover_checks(&mut c, society, before, after),
        Transition::SelectPartners => select_checks(&mut c, society, before, after),
        Transition::EstablishRoles => establish_checks(&mut c, before, after),
        Transition::AgreeWorkflow => workflow_checks(&mut c, before, after, transcripts),
        Transition::AgreeContracts => contract_checks(&mut c, society, before, after),
    }
    TransitionReport {
        transition: kind,
        checks: c.0,
    }
}

fn held_in_society(society: &Society, id: &AgentId, role: &Role) -> bool {
    society.agent(id).is_some_and(|a| {
        a.roles
            .iter()
            .any(|r| r.clause == role.clause && r.label.name == role.label.name && role.label.is_instance_of(&r.label))
    })
}

fn general_checks(c: &mut Checks, society: &Society, before: &PartialVO, after: &PartialVO, kind: Transition) {
    let expected_from = match kind {
        Transition::IdentifyGoals => Stage::Empty,
        Transition::DiscoverPartners => Stage::GoalsIdentified,
        Transition::SelectPartners => Stage::PartnersDiscovered,
        Transition::EstablishRoles => Stage::PartnersSelected,
        Transition::AgreeWorkflow => Stage::RolesEstablished,
        Transition::AgreeContracts => Stage::WorkflowAgreed,
    };
    let expected_to = match kind {
        Transition::IdentifyGoals => Stage::GoalsIdentified,
        Transition::DiscoverPartners => Stage::PartnersDiscovered,
        Transition::SelectPartners => Stage::PartnersSelected,
        Transition::EstablishRoles => Stage::RolesEstablished,
        Transition::AgreeWorkflow => Stage::WorkflowAgreed,
        Transition::AgreeContracts => Stage::ContractsAgreed,
    };
    c.require(
        "stage advances by one",
        before.stage == expected_from && after.stage == expected_to,
        || {
            format!(
                "{:?} -> {:?}, expected {expected_from:?} -> {expected_to:?}",
                before.stage, after.stage
            )
        },
    );

    let initiator_ok = match kind {
        Transition::IdentifyGoals => before.initiator.is_none() && after.initiator.is_some(),
        _ => after.initiator.is_some() && after.initiator == before.initiator,
    };
    c.require("initiator is fixed", initiator_ok, || {
        format!("{:?} -> {:?}", before.initiator, after.initiator)
    });

    let mut strays = Vec::new();
    for (id, m) in &after.agents {
        let Some(spec) = society.agent(id) else {
            strays.push(format!("{id} is not in the society"));
            continue;
        };
        for r in &m.roles {
            if !held_in_society(society, id, r) {
                strays.push(format!("{id} cannot play {} under {}", r.label, r.clause.name));
            }
        }
        for g in &m.goals {
            if !spec.goals.contains(g) {
                strays.push(format!("{g} is not a goal of {id}"));
            }
        }
    }
    c.add(
        "members are partial society agents",
        (!strays.is_empty()).then(|| strays.join("; ")),
    );

    let member_goals: BTreeSet<Atom> = after.agents.values().flat_map(|m| m.goals.iter().cloned()).collect();
    let vo_goals = as_set(&after.goals);
    c.require("goals are the union of member goals", member_goals == vo_goals, || {
        format!("members: {{{}}}; VO: {{{}}}", list(&member_goals), list(&vo_goals))
    });

    let member_roles: BTreeSet<&Role> = after.agents.values().flat_map(|m| m.roles.iter()).collect();
    let vo_roles: BTreeSet<&Role> = after.roles.iter().collect();
    c.require("roles are the union of member roles", member_roles == vo_roles, || {
        format!(
            "members: {{{}}}; VO: {{{}}}",
            list(member_roles.iter().map(|r| &r.label)),
            list(vo_roles.iter().map(|r| &r.label))
        )
    });

    let shared = after.initiator.as_ref().is_some_and(|ag0| {
        after.agents.contains_key(ag0)
            && society
                .agent(ag0)
                .is_some_and(|spec| spec.goals.iter().any(|g| vo_goals.contains(g)))
    });
    c.require("initiator is a member sharing a goal with the VO", shared, || {
        "the initiator is absent or none of its goals is a VO goal".into()
    });
}

fn nothing_beyond(c: &mut Checks, after: &PartialVO, roles: bool) {
    let ok = after.workflow.is_none()
        && after.contracts.is_empty()
        && after.agreements.is_empty()
        && (!roles || after.roles.is_empty());
    c.require(
        if roles {
            "no roles, workflow or contracts yet"
        } else {
            "no workflow or contracts yet"
        },
        ok,
        || "later components are already filled".into(),
    );
}

fn identify_checks(c: &mut Checks, society: &Society, before: &PartialVO, after: &PartialVO) {
    let empty = before.stage == Stage::Empty
        && before.initiator.is_none()
        && before.agents.is_empty()
        && before.goals.is_empty()
        && before.roles.is_empty()
        && before.workflow.is_none()
        && before.contracts.is_empty()
        && before.agreements.is_empty();
    c.require("starts from the empty tuple", empty, || {
        "the before tuple is not empty".into()
    });

    let Some(ag0) = &after.initiator else {
        c.add(
            "initiator alone, without roles, holding the goals",
            Some("no initiator".into()),
        );
        return;
    };
    let alone = after.agents.len() == 1
        && after
            .agents
            .get(ag0)
            .is_some_and(|m| m.roles.is_empty() && as_set(&m.goals) == as_set(&after.goals));
    c.require("initiator alone, without roles, holding the goals", alone, || {
        format!("members: {}", list(after.agents.keys()))
    });
    c.require("goals are non-empty", !after.goals.is_empty(), || "no goals".into());

    let fulfilled: Vec<String> = match society.agent(ag0) {
        None => vec![format!("{ag0} is not in the society")],
        Some(spec) => {
            let known: Vec<&Atom> = spec
                .knowledge
                .iter()
                .chain(&spec.goals)
                .chain(society.ontology())
                .collect();
            after
                .goals
                .iter()
                .filter(|g| {
                    let f = spec.fulfilment_of(g).to_term();
                    known.iter().any(|k| apart_unify(&f, &k.to_term()))
                })
                .map(|g| g.to_string())
                .collect()
        }
    };
    c.add(
        "every goal is unfulfillable in isolation",
        (!fulfilled.is_empty()).then(|| format!("already fulfilled: {}", fulfilled.join(", "))),
    );
    nothing_beyond(c, after, true);
}

fn unchanged_members<'a>(from: &'a PartialVO, to: &'a PartialVO) -> Vec<&'a AgentId> {
    from.agents
        .iter()
        .filter(|(id, m)| to.agents.get(*id) != Some(*m))
        .map(|(id, _)| id)
        .collect()
}

fn discover_checks(c: &mut Checks, society: &Society, before: &PartialVO, after: &PartialVO) {
    c.require("goals unchanged", before.goals == after.goals, || "goals differ".into());
    let lost = unchanged_members(before, after);
    c.require("initial members are kept", lost.is_empty(), || {
        format!("changed or dropped: {}", list(lost))
    });
    let ag0 = after.initiator.as_ref();
    let services = goal_services(&before.goals);
    let mut bad = Vec::new();
    for (id, m) in after.agents.iter().filter(|(id, _)| !before.agents.contains_key(*id)) {
        if Some(id) == ag0 {
            bad.push(format!("{id} is the initiator"));
        }
        if *m != Member::default() {
            bad.push(format!("{id} was added with roles or goals"));
        }
        if !services.iter().any(|(_, s)| can_provide(society, id, s)) {
            bad.push(format!("{id} provides none of the goal services"));
        }
    }
    c.add(
        "discovered agents are bare providers of a goal service",
        (!bad.is_empty()).then(|| bad.join("; ")),
    );
    nothing_beyond(c, after, true);
}

fn select_checks(c: &mut Checks, society: &Society, before: &PartialVO, after: &PartialVO) {
    c.require("goals unchanged", before.goals == after.goals, || "goals differ".into());
    let extra = unchanged_members(after, before);
    c.require("selected members were discovered", extra.is_empty(), || {
        format!("not in the discovered set: {}", list(extra))
    });
    let ag0 = after.initiator.as_ref();
    c.require(
        "initiator is selected",
        ag0.is_some_and(|a| after.agents.contains_key(a)),
        || "initiator was pruned".into(),
    );
    let uncovered: Vec<String> = goal_services(&before.goals)
        .into_iter()
        .filter(|(_, s)| {
            !after
                .agents
                .keys()
                .any(|id| Some(id) != ag0 && can_provide(society, id, s))
        })
        .map(|(_, s)| s.to_string())
        .collect();
    c.add(
        "every goal service keeps a provider",
        (!uncovered.is_empty()).then(|| format!("no provider left for {}", uncovered.join(", "))),
    );
    nothing_beyond(c, after, true);
}

fn establish_checks(c: &mut Checks, before: &PartialVO, after: &PartialVO) {
    c.require("goals unchanged", before.goals == after.goals, || "goals differ".into());
    let dropped: Vec<&AgentId> = before
        .agents
        .keys()
        .filter(|id| !after.agents.contains_key(*id))
        .collect();
    c.require("selected agents keep their place", dropped.is_empty(), || {
        format!("dropped: {}", list(dropped))
    });
    let mut bad = Vec::new();
    for (_, s) in goal_services(&before.goals) {
        for label in [RoleLabel::requester(s.to_term()), RoleLabel::provider(s.to_term())] {
            let n = after.roles.iter().filter(|r| r.label == label).count();
            if n != 1 {
                bad.push(format!("{n} roles for {label}"));
            }
        }
    }
    c.add(
        "exactly one requester and one provider role per goal service",
        (!bad.is_empty()).then(|| bad.join("; ")),
    );
    let mut clashes = Vec::new();
    for r1 in &after.roles {
        for r2 in &after.roles {
            if r1.label == r2.label && r1.clause != r2.clause && r1 < r2 {
                clashes.push(format!(
                    "{} follows {} and {}",
                    r1.label, r1.clause.name, r2.clause.name
                ));
            }
        }
    }
    c.add(
        "one protocol per role label",
        (!clashes.is_empty()).then(|| clashes.join("; ")),
    );
    nothing_beyond(c, after, false);
}

fn workflow_checks(c: &mut Checks, before: &PartialVO, after: &PartialVO, transcripts: &[DialogueTranscript]) {
    let vo_goals = as_set(&after.goals);
    let missing: Vec<&Atom> = before.goals.iter().filter(|g| !vo_goals.contains(*g)).collect();
    c.require("initial goals are kept", missing.is_empty(), || {
        format!("lost: {}", list(missing))
    });
    c.require("roles cannot change", before.roles == after.roles, || {
        "the role set differs".into()
    });

    let mut changed = Vec::new();
    for (id, m) in &after.agents {
        match before.agents.get(id) {
            None => changed.push(format!("{id} joined")),
            Some(old) => {
                if old.roles != m.roles {
                    changed.push(format!("{id} changed roles"));
                }
                if !old.goals.iter().all(|g| m.goals.contains(g)) {
                    changed.push(format!("{id} lost goals"));
                }
            }
        }
    }
    c.add(
        "members keep their roles and only gain goals",
        (!changed.is_empty()).then(|| changed.join("; ")),
    );

    let mut bad = Vec::new();
    for (goal, s) in goal_services(&before.goals) {
        let label = RoleLabel::provider(s.to_term());
        let holders: Vec<&AgentId> = after
            .agents
            .iter()
            .filter(|(_, m)| m.roles.iter().any(|r| r.label == label))
            .map(|(id, _)| id)
            .collect();
        let [holder] = holders.as_slice() else {
            bad.push(format!("{} members provide {s}", holders.len()));
            continue;
        };
        let Some(agreement) = after
            .agreements
            .iter()
            .find(|a| a.goal == goal && a.provider == **holder)
        else {
            bad.push(format!("no agreement with {holder} for {goal}"));
            continue;
        };
        if !is_instance_of(&agreement.service.to_term(), &s.to_term()) {
            bad.push(format!("{} does not instantiate {s}", agreement.service));
        }
        let witnessed = transcripts.iter().any(|t| {
            let Outcome::Success { bindings } = &t.outcome else {
                return false;
            };
            t.initiator == agreement.requester
                && t.responder == **holder
                && t.responder_role.name == "provider"
                && t.responder_role.param.as_ref().is_some_and(|p| {
                    let agreed: &Substitution = bindings;
                    is_instance_of(&agreement.service.to_term(), &agreed.apply(p))
                })
        });
        if !witnessed {
            bad.push(format!(
                "no successful dialogue between {} and {holder} for {s}",
                agreement.requester
            ));
        }
    }
    c.add(
        "one provider per goal service, agreed by a successful dialogue",
        (!bad.is_empty()).then(|| bad.join("; ")),
    );

    let wf_problem = match &after.workflow {
        None => Some("no workflow".to_string()),
        Some(wf) => {
            let services = wf.services();
            let unagreed: Vec<&ServiceTerm> = after
                .agreements
                .iter()
                .map(|a| &a.service)
                .filter(|s| !services.contains(s))
                .collect();
            let unprovided: Vec<&ServiceTerm> = services
                .iter()
                .filter(|s| {
                    !after.agreements.iter().any(|a| a.service == **s)
                        && !after.roles.iter().any(|r| {
                            r.label.name == "provider"
                                && r.label.param.as_ref().is_some_and(|p| apart_unify(&s.to_term(), p))
                        })
                })
                .collect();
            if !unagreed.is_empty() {
                Some(format!("agreed services missing from the workflow: {}", list(unagreed)))
            } else if !unprovided.is_empty() {
                Some(format!("workflow services without a provider: {}", list(unprovided)))
            } else if !wf.annotation().is_satisfiable(&Substitution::new()) {
                Some(format!("annotation {} is unsatisfiable", wf.annotation()))
            } else {
                None
            }
        }
    };
    c.add("workflow instantiates the agreements", wf_problem);
    c.require("no contracts yet", after.contracts.is_empty(), || {
        "contracts present".into()
    });
}

/// Contract well-formedness, stated directly over the context pairs.
fn contract_problems(k: &Contract, society: &Society) -> Vec<String> {
    let mut out = Vec::new();
    let cid = k.cid.as_str();
    let cid_ok = cid.chars().next().is_some_and(|ch| ch.is_ascii_lowercase())
        && cid
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.');
    if !cid_ok {
        out.push(format!("malformed cid {cid}"));
    }
    let pairs: Vec<(&AgentId, &RoleLabel)> = k
        .context
        .iter()
        .flat_map(|(id, ls)| ls.iter().map(move |l| (id, l)))
        .collect();
    let param = |l: &RoleLabel| l.param.clone().unwrap_or_else(Term::anonymous);
    let mut parties = false;
    for (i1, l1) in &pairs {
        for (i2, l2) in &pairs {
            if l1.name == "requester" && l2.name == "provider" && apart_unify(&param(l1), &param(l2)) {
                if i1 != i2 {
                    parties = true;
                } else {
                    out.push(format!("{i1} both requests and provides {}", param(l1)));
                }
            }
        }
    }
    if !parties {
        out.push("no distinct requester and provider".into());
    }
    for s in k.sdt.services() {
        if !pairs
            .iter()
            .any(|(_, l)| l.name == "provider" && is_instance_of(&s.to_term(), &param(l)))
        {
            out.push(format!("nobody provides {s}"));
        }
    }
    for (id, l) in &pairs {
        let ok = society.agent(id).is_some_and(|a| {
            a.roles
                .iter()
                .any(|r| r.label.name == l.name && l.is_instance_of(&r.label))
        });
        if !ok {
            out.push(format!("{id} cannot play {l}"));
        }
    }
    out
}

fn contract_checks(c: &mut Checks, society: &Society, before: &PartialVO, after: &PartialVO) {
    let same = before.initiator == after.initiator
        && before.agents == after.agents
        && before.goals == after.goals
        && before.roles == after.roles
        && before.workflow == after.workflow
        && before.agreements == after.agreements;
    c.require("only contracts change", same, || {
        "agents, goals, roles or workflow differ".into()
    });
    c.require("at least two agents", after.agents.len() >= 2, || {
        format!("{} member(s)", after.agents.len())
    });

    let mut problems = Vec::new();
    if let Some(wf) = &after.workflow {
        for s in wf.services() {
            let n = after.contracts.iter().filter(|k| k.sdt.services().contains(s)).count();
            if n != 1 {
                problems.push(format!("{s} is covered by {n} contracts"));
            }
        }
        for k in &after.contracts {
            if k.sdt.services().iter().any(|s| !wf.services().contains(s)) {
                problems.push(format!("{} covers services outside the workflow", k.cid));
            }
        }
    } else {
        problems.push("no workflow".into());
    }
    c.add(
        "one contract per workflow service",
        (!problems.is_empty()).then(|| problems.join("; ")),
    );

    let invalid: Vec<String> = after
        .contracts
        .iter()
        .flat_map(|k| {
            contract_problems(k, society)
                .into_iter()
                .map(move |p| format!("{}: {p}", k.cid))
        })
        .collect();
    c.add(
        "contracts are well-formed",
        (!invalid.is_empty()).then(|| invalid.join("; ")),
    );

    let outsiders: Vec<String> = after
        .contracts
        .iter()
        .flat_map(|k| k.context.keys())
        .filter(|id| !after.agents.contains_key(*id))
        .map(|id| id.to_string())
        .collect();
    c.add(
        "contract parties are members",
        (!outsiders.is_empty()).then(|| format!("outsiders: {}", outsiders.join(", "))),
    );
    let ids: BTreeSet<&str> = after.contracts.iter().map(|k| k.cid.as_str()).collect();
    c.require("contract ids are unique", ids.len() == after.contracts.len(), || {
        "repeated cid".into()
    });
}
