//! The six formation transitions.

use std::collections::{BTreeMap, BTreeSet};

use crate::contract::{draft_contract, validate_contract, ContractError, ContractReport};
use crate::formation::config::FormationConfig;
use crate::formation::strategy::FormationStrategy;
use crate::formation::vo::{goal_service, Agreement, Member, PartialVO, Stage};
use crate::formula::{Atom, Formula};
use crate::ids::AgentId;
use crate::protocol::dialogue::{run_dialogue, DialogueParty, DialogueTranscript, Outcome};
use crate::protocol::kb::KnowledgeBase;
use crate::protocol::role::{ProtocolClause, Role, RoleLabel};
use crate::service::ServiceTerm;
use crate::society::{Registry, Society};
use crate::term::{unify, unify_with, Substitution, Term, VarGen};
use crate::workflow::{Workflow, WorkflowError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("{0} is not a member of the society")]
    UnknownInitiator(AgentId),
    #[error("{0} has no goal it cannot fulfil in isolation")]
    NoUnfulfillableGoals(AgentId),
    #[error("expected a tuple at stage {expected:?}, found {found:?}")]
    WrongStage { expected: Stage, found: Stage },
    #[error("partner selection left no provider of {0}")]
    PruningBrokeCoverage(ServiceTerm),
    #[error("no selected agent offers a protocol for {0}")]
    NoProtocolForRole(RoleLabel),
    #[error("the strategy could not pick a protocol for {0}")]
    AmbiguousProtocol(RoleLabel),
    #[error("no provider of {0} completed a successful dialogue")]
    NegotiationFailed(ServiceTerm),
    #[error("every successful dialogue for {service} falsifies the annotation {annotation}")]
    ConstraintViolated {
        service: Box<ServiceTerm>,
        annotation: String,
    },
    #[error("added service {0} is not concrete or has no provider in the VO")]
    ExtraServiceRejected(ServiceTerm),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error("invalid contract: {0}")]
    ContractInvalid(Box<ContractReport>),
    #[error("a VO needs at least two agents, found {0}")]
    TooFewAgents(usize),
}

fn expect_stage(p: &PartialVO, expected: Stage) -> Result<(), FormationError> {
    if p.stage == expected {
        Ok(())
    } else {
        Err(FormationError::WrongStage {
            expected,
            found: p.stage,
        })
    }
}

fn initiator(p: &PartialVO) -> AgentId {
    p.initiator
        .clone()
        .expect("tuples past identify_goals have an initiator")
}

/// Goal services of the VO goals, in goal order.
fn service_goals(goals: &[Atom]) -> Vec<(Atom, ServiceTerm)> {
    goals
        .iter()
        .filter_map(|g| goal_service(g).map(|s| (g.clone(), s)))
        .collect()
}

/// Whether `a` and `b` unify once kept apart.
fn unifiable(a: &Term, b: &Term) -> bool {
    let mut gen = VarGen::above_terms([a, b]);
    let renamed = gen.renaming(&b.vars()).apply(b);
    unify(a, &renamed).is_some()
}

/// Whether the society lets `agent` play provider for something unifying with `s`.
fn society_provider(society: &Society, agent: &AgentId, s: &ServiceTerm) -> bool {
    let target = s.to_term();
    society.agent(agent).is_some_and(|a| {
        a.roles
            .iter()
            .any(|r| r.label.is_provider() && r.label.param.as_ref().is_some_and(|p| unifiable(&target, p)))
    })
}

pub fn identify_goals(
    society: &Society,
    registry: &Registry,
    ag0: &AgentId,
    strategy: &FormationStrategy,
) -> Result<PartialVO, FormationError> {
    let agent = society
        .agent(ag0)
        .ok_or_else(|| FormationError::UnknownInitiator(ag0.clone()))?;
    let kb = society.initial_kb(ag0, registry).expect("agent exists");
    let unfulfillable: Vec<Atom> = agent
        .goals
        .iter()
        .filter(|g| !kb.holds(&Formula::atom(agent.fulfilment_of(g)), &Substitution::new()))
        .cloned()
        .collect();
    let selected: Vec<Atom> = strategy
        .goal_selector
        .select(agent, &unfulfillable)
        .into_iter()
        .filter(|g| unfulfillable.contains(g))
        .collect();
    if selected.is_empty() {
        return Err(FormationError::NoUnfulfillableGoals(ag0.clone()));
    }
    let mut vo = PartialVO::empty();
    vo.stage = Stage::GoalsIdentified;
    vo.initiator = Some(ag0.clone());
    vo.agents.insert(
        ag0.clone(),
        Member {
            roles: BTreeSet::new(),
            goals: selected.clone(),
        },
    );
    vo.goals = selected;
    Ok(vo)
}

pub fn discover_partners(p: &PartialVO, society: &Society, registry: &Registry) -> Result<PartialVO, FormationError> {
    expect_stage(p, Stage::GoalsIdentified)?;
    let ag0 = initiator(p);
    let mut next = p.clone();
    for (_, s) in service_goals(&p.goals) {
        for id in registry.query_providers(&s) {
            if id != ag0 && society_provider(society, &id, &s) {
                next.agents.entry(id).or_default();
            }
        }
    }
    next.stage = Stage::PartnersDiscovered;
    Ok(next)
}

pub fn select_partners(
    p: &PartialVO,
    society: &Society,
    strategy: &FormationStrategy,
) -> Result<PartialVO, FormationError> {
    expect_stage(p, Stage::PartnersDiscovered)?;
    let ag0 = initiator(p);
    let mut next = p.clone();
    next.agents
        .retain(|id, _| *id == ag0 || strategy.trust_filter.trusts(id));
    for (_, s) in service_goals(&p.goals) {
        if !next
            .agents
            .keys()
            .any(|id| *id != ag0 && society_provider(society, id, &s))
        {
            return Err(FormationError::PruningBrokeCoverage(s));
        }
    }
    next.stage = Stage::PartnersSelected;
    Ok(next)
}

/// Distinct clauses of the members' society roles under
/// which `label` can be played, in member then declaration order.
fn candidate_clauses<'a>(
    society: &'a Society,
    members: impl Iterator<Item = &'a AgentId>,
    label: &RoleLabel,
) -> Vec<&'a ProtocolClause> {
    let mut out: Vec<&ProtocolClause> = Vec::new();
    for id in members {
        for r in society.agent(id).map(|a| a.roles.as_slice()).unwrap_or_default() {
            if label.is_instance_of(&r.label) && !out.contains(&&r.clause) {
                out.push(&r.clause);
            }
        }
    }
    out
}

fn holds_clause(society: &Society, id: &AgentId, label: &RoleLabel, clause: &ProtocolClause) -> bool {
    society.agent(id).is_some_and(|a| {
        a.roles
            .iter()
            .any(|r| r.clause == *clause && label.is_instance_of(&r.label))
    })
}

pub fn establish_roles(
    p: &PartialVO,
    society: &Society,
    strategy: &FormationStrategy,
) -> Result<PartialVO, FormationError> {
    expect_stage(p, Stage::PartnersSelected)?;
    let ag0 = initiator(p);
    let mut next = p.clone();
    let others: Vec<AgentId> = p.agents.keys().filter(|id| **id != ag0).cloned().collect();
    let choose = |label: &RoleLabel, candidates: Vec<&ProtocolClause>| -> Result<ProtocolClause, FormationError> {
        if candidates.is_empty() {
            return Err(FormationError::NoProtocolForRole(label.clone()));
        }
        strategy
            .role_assigner
            .choose_clause(label, &candidates)
            .and_then(|i| candidates.get(i))
            .map(|c| (*c).clone())
            .ok_or_else(|| FormationError::AmbiguousProtocol(label.clone()))
    };
    for (_, s) in service_goals(&p.goals) {
        let req_label = RoleLabel::requester(s.to_term());
        let req_clause = choose(
            &req_label,
            candidate_clauses(society, std::iter::once(&ag0), &req_label),
        )?;
        let prov_label = RoleLabel::provider(s.to_term());
        let prov_clause = choose(&prov_label, candidate_clauses(society, others.iter(), &prov_label))?;

        let req_role = Role::new(req_label.clone(), req_clause).expect("label is an instance of the clause head");
        next.agents
            .get_mut(&ag0)
            .expect("initiator is a member")
            .roles
            .insert(req_role);
        let prov_role =
            Role::new(prov_label.clone(), prov_clause.clone()).expect("label is an instance of the clause head");
        for id in &others {
            if holds_clause(society, id, &prov_label, &prov_clause) {
                next.agents.get_mut(id).expect("member").roles.insert(prov_role.clone());
            }
        }
    }
    next.roles = next.agents.values().flat_map(|m| m.roles.iter().cloned()).collect();
    next.stage = Stage::RolesEstablished;
    Ok(next)
}

/// The goal service in the shape the workflow template gives services of
/// its name, unified into `sigma`; without a template shape, the goal service
/// with its variables made fresh.
fn shaped_service(
    s: &ServiceTerm,
    template: Option<&Workflow>,
    sigma: &mut Substitution,
    gen: &mut VarGen,
) -> ServiceTerm {
    let renamed = s.apply(&gen.renaming(&s.vars()));
    let goal = ServiceTerm::new(
        renamed.name.clone(),
        name_anonymous(&renamed.input, gen),
        name_anonymous(&renamed.output, gen),
    );
    let Some(shape) = template.and_then(|w| w.services().iter().find(|t| t.name == s.name)) else {
        return goal;
    };
    let shape = ServiceTerm::new(
        shape.name.clone(),
        name_anonymous(&shape.input, gen),
        name_anonymous(&shape.output, gen),
    );
    match unify_with(&shape.to_term(), &goal.to_term(), sigma) {
        Some(ext) => {
            *sigma = ext;
            shape
        }
        None => goal,
    }
}

fn name_anonymous(t: &Term, gen: &mut VarGen) -> Term {
    match t {
        Term::Var(_) if t.is_anonymous() => Term::var(gen.fresh("W")),
        Term::List(items) => Term::List(items.iter().map(|i| name_anonymous(i, gen)).collect()),
        Term::App(f, items) => Term::App(f.clone(), items.iter().map(|i| name_anonymous(i, gen)).collect()),
        _ => t.clone(),
    }
}

/// The clause `id` follows for `label` in the VO.
fn vo_clause<'a>(p: &'a PartialVO, id: &AgentId, label: &RoleLabel) -> Option<&'a ProtocolClause> {
    p.agents
        .get(id)?
        .roles
        .iter()
        .find(|r| r.label == *label)
        .map(|r| &r.clause)
}

/// Result of [`agree_workflow`] with every dialogue held, successful or not.
pub struct Negotiation {
    pub result: Result<PartialVO, FormationError>,
    pub transcripts: Vec<DialogueTranscript>,
}

pub fn agree_workflow(
    p: &PartialVO,
    society: &Society,
    registry: &Registry,
    config: &FormationConfig,
    strategy: &FormationStrategy,
) -> Negotiation {
    let mut transcripts = Vec::new();
    let result = negotiate(p, society, registry, config, strategy, &mut transcripts);
    Negotiation { result, transcripts }
}

fn negotiate(
    p: &PartialVO,
    society: &Society,
    registry: &Registry,
    config: &FormationConfig,
    strategy: &FormationStrategy,
    transcripts: &mut Vec<DialogueTranscript>,
) -> Result<PartialVO, FormationError> {
    expect_stage(p, Stage::RolesEstablished)?;
    let ag0 = initiator(p);
    let ag0_spec = society.agent(&ag0).expect("initiator is in the society");
    let template = config.workflow.as_ref();
    let annotation = template.map(|w| w.annotation().clone()).unwrap_or_default();

    let mut names = BTreeSet::new();
    for g in &p.goals {
        g.collect_vars(&mut names);
    }
    if let Some(w) = template {
        names.extend(w.services().iter().flat_map(|s| s.vars()));
    }
    let mut gen = VarGen::above(names.iter().map(String::as_str));

    let mut kbs: BTreeMap<AgentId, KnowledgeBase> = BTreeMap::new();
    let kb_of = |id: &AgentId, kbs: &mut BTreeMap<AgentId, KnowledgeBase>| {
        kbs.entry(id.clone())
            .or_insert_with(|| society.initial_kb(id, registry).expect("member is in the society"))
            .clone()
    };

    let mut sigma = Substitution::new();
    let mut shaped: Vec<ServiceTerm> = Vec::new();
    let mut chosen: BTreeMap<AgentId, Vec<ServiceTerm>> = BTreeMap::new();
    let mut decided: Vec<(RoleLabel, AgentId)> = Vec::new();
    let mut agreements = Vec::new();
    let mut added_goals: BTreeMap<AgentId, Vec<Atom>> = BTreeMap::new();

    for (position, (goal, s)) in service_goals(&p.goals).into_iter().enumerate() {
        let req_label = RoleLabel::requester(s.to_term());
        let prov_label = RoleLabel::provider(s.to_term());
        let w0 = shaped_service(&s, template, &mut sigma, &mut gen);
        shaped.push(w0.clone());
        let w = w0.apply(&sigma);

        let holds = |id: &AgentId, label: &RoleLabel| p.agents[id].roles.iter().any(|r| r.label == *label);
        let pinned: Vec<&AgentId> = chosen.keys().filter(|id| holds(id, &prov_label)).collect();
        let candidates: Vec<AgentId> = if !pinned.is_empty() {
            pinned.into_iter().cloned().collect()
        } else {
            p.agents
                .keys()
                .filter(|id| **id != ag0 && holds(id, &prov_label))
                // Someone already chosen for another service must stay its only provider.
                .filter(|id| decided.iter().all(|(l, who)| !holds(id, l) || who == *id))
                .cloned()
                .collect()
        };
        let Some(req_clause) = vo_clause(p, &ag0, &req_label) else {
            return Err(FormationError::NoProtocolForRole(req_label));
        };
        let requester_role = Role::new(RoleLabel::requester(w.to_term()), req_clause.clone())
            .expect("a specialisation of an established role");
        let success_goal =
            Formula::atom(ag0_spec.fulfilment_of(&Atom::new(crate::formation::vo::SERVICE_GOAL, vec![w.to_term()])));

        let mut successes: Vec<(AgentId, DialogueTranscript, Substitution)> = Vec::new();
        let mut violated = false;
        for c in candidates {
            let prov_clause = vo_clause(p, &c, &prov_label)
                .expect("candidate holds the provider role")
                .clone();
            let provider_role = Role::new(RoleLabel::provider(w.to_term()), prov_clause)
                .expect("a specialisation of an established role");
            let requester = DialogueParty::new(ag0.clone(), requester_role.clone(), kb_of(&ag0, &mut kbs));
            let provider = DialogueParty::new(c.clone(), provider_role, kb_of(&c, &mut kbs));
            let t = run_dialogue(&requester, &provider, &success_goal, config.max_dialogue_steps);
            transcripts.push(t.clone());
            if let Outcome::Success { bindings } = &t.outcome {
                let mut extended = Some(sigma.clone());
                for (v, value) in bindings.iter() {
                    extended = extended.and_then(|acc| unify_with(&Term::var(v.clone()), value, &acc));
                }
                match extended {
                    Some(ext) if annotation.residual(&ext).is_some() => successes.push((c, t, ext)),
                    _ => violated = true,
                }
            }
        }
        if successes.is_empty() {
            return Err(if violated {
                FormationError::ConstraintViolated {
                    service: Box::new(w),
                    annotation: annotation.to_string(),
                }
            } else {
                FormationError::NegotiationFailed(s)
            });
        }
        let ids: Vec<AgentId> = successes.iter().map(|(id, _, _)| id.clone()).collect();
        let pick = strategy
            .provider_chooser
            .choose(&s, position, &ids)
            .min(successes.len() - 1);
        let (provider, transcript, ext) = successes.swap_remove(pick);
        sigma = ext;
        for (id, kb) in &transcript.final_kbs {
            kbs.insert(id.clone(), kb.clone());
        }
        let society_goals = &society.agent(&provider).expect("provider is in the society").goals;
        let entry = added_goals.entry(provider.clone()).or_default();
        for f in transcript.fired.iter().filter(|f| f.agent == provider) {
            for a in &f.support {
                if society_goals.contains(a) && !entry.contains(a) {
                    entry.push(a.clone());
                }
            }
        }
        chosen.entry(provider.clone()).or_default().push(s.clone());
        decided.push((prov_label, provider.clone()));
        agreements.push(Agreement {
            goal,
            requester: ag0.clone(),
            provider,
            service: w,
        });
    }

    let mut next = p.clone();
    next.agents.retain(|id, _| *id == ag0 || chosen.contains_key(id));
    for (id, goals) in added_goals {
        let member = next.agents.get_mut(&id).expect("chosen provider is kept");
        for g in goals {
            if !member.goals.contains(&g) {
                member.goals.push(g);
            }
        }
    }
    let mut goals: Vec<Atom> = Vec::new();
    for m in std::iter::once(&next.agents[&ag0]).chain(next.agents.iter().filter(|(id, _)| **id != ag0).map(|(_, m)| m))
    {
        for g in &m.goals {
            if !goals.contains(g) {
                goals.push(g.clone());
            }
        }
    }
    next.goals = goals;
    next.roles = next.agents.values().flat_map(|m| m.roles.iter().cloned()).collect();

    let constrained: BTreeSet<String> = shaped.iter().flat_map(|s| s.vars()).collect();
    let open = crate::constraint::ConstraintAnnotation::new(
        annotation
            .constraints()
            .iter()
            .filter(|c| constrained.contains(c.var()))
            .cloned()
            .collect(),
    );
    let workflow = Workflow::new(shaped, open)?.instantiate(&sigma)?;
    for a in &mut agreements {
        a.service = a.service.apply(&sigma);
    }
    next.agreements = agreements;
    next.workflow = Some(workflow);
    next.stage = Stage::WorkflowAgreed;

    let extra = strategy.workflow_hook.extra_services(&next);
    if !extra.is_empty() {
        let wf = next.workflow.as_ref().expect("just set");
        let mut services = wf.services().to_vec();
        for e in extra {
            let covered = next
                .roles
                .iter()
                .any(|r| r.label.is_provider() && r.label.param.as_ref().is_some_and(|p| unifiable(&e.to_term(), p)));
            if !e.is_concrete() || !covered {
                return Err(FormationError::ExtraServiceRejected(e));
            }
            services.push(e);
        }
        next.workflow = Some(Workflow::new(services, wf.annotation().clone())?);
    }
    Ok(next)
}

pub fn agree_contracts(
    p: &PartialVO,
    society: &Society,
    config: &FormationConfig,
) -> Result<PartialVO, FormationError> {
    expect_stage(p, Stage::WorkflowAgreed)?;
    let ag0 = initiator(p);
    if p.agents.len() < 2 {
        return Err(FormationError::TooFewAgents(p.agents.len()));
    }
    let wf = p.workflow.as_ref().expect("an agreed tuple has a workflow");
    let mut contracts = Vec::new();
    for (index, service) in wf.services().iter().enumerate() {
        let (requester, provider) = match p.agreements.iter().find(|a| a.service == *service) {
            Some(a) => (a.requester.clone(), a.provider.clone()),
            None => {
                let holder = p.agents.iter().find(|(_, m)| {
                    m.roles.iter().any(|r| {
                        r.label.is_provider()
                            && r.label.param.as_ref().is_some_and(|x| unifiable(&service.to_term(), x))
                    })
                });
                match holder {
                    Some((id, _)) => (ag0.clone(), id.clone()),
                    None => return Err(FormationError::ExtraServiceRejected(service.clone())),
                }
            }
        };
        let gt = config.guarantees.get(&service.name).cloned().unwrap_or_default();
        let contract = draft_contract(&requester, &provider, service.clone(), gt, index)?;
        let report = validate_contract(&contract, society);
        if !report.is_valid() {
            return Err(FormationError::ContractInvalid(Box::new(report)));
        }
        contracts.push(contract);
    }
    let mut next = p.clone();
    next.contracts = contracts;
    next.stage = Stage::ContractsAgreed;
    Ok(next)
}
