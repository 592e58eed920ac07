//! Two-party dialogues driven by protocol clauses.
//!
//! Both parties share one substitution: variables occurring in the role
//! labels (typically the service under negotiation) are bound by whichever
//! party first constrains them, and the bindings are visible to the other
//! side. Clause variables are renamed apart; variables local to a single
//! operation get fresh names every time it fires.
//!
//! Scheduling is deterministic. The initiator moves first and turns
//! alternate. On its turn a party repeatedly fires its earliest enabled
//! operation until it has sent a message or nothing is enabled. A receive is
//! enabled only by the head of the party's inbox. Each send instance (same
//! operation, same instantiated message and addressee) fires at most once,
//! and an operation whose instantiated postcondition is not ground is never
//! enabled. The dialogue succeeds as soon as the success goal holds in the
//! initiator's knowledge base, and fails when two consecutive turns fire
//! nothing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::formula::{Atom, Formula};
use crate::ids::AgentId;
use crate::protocol::kb::KnowledgeBase;
use crate::protocol::role::{Direction, Locution, ProtocolOperation, Role, RoleInstance, RoleLabel};
use crate::term::{unify_all, Substitution, Term, VarGen};

/// A message waiting in an inbox.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub locution: Locution,
    pub sender: AgentId,
    pub sender_role: RoleLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub from: AgentId,
    #[serde(rename = "fromRole")]
    pub from_role: RoleLabel,
    pub to: AgentId,
    #[serde(rename = "toRole")]
    pub to_role: RoleLabel,
    pub performative: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Success { bindings: Substitution },
    Failure { reason: String },
    StepLimitExceeded,
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success { .. })
    }
}

/// An operation that fired, with the stored atoms its precondition used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredOperation {
    pub agent: AgentId,
    pub operation: usize,
    pub direction: Direction,
    pub support: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTranscript {
    pub initiator: AgentId,
    pub initiator_role: RoleLabel,
    pub responder: AgentId,
    pub responder_role: RoleLabel,
    pub steps: Vec<TranscriptStep>,
    pub outcome: Outcome,
    pub fired: Vec<FiredOperation>,
    pub final_kbs: BTreeMap<AgentId, KnowledgeBase>,
}

/// One side of a dialogue.
#[derive(Debug, Clone)]
pub struct DialogueParty {
    pub id: AgentId,
    pub role: Role,
    pub kb: KnowledgeBase,
}

impl DialogueParty {
    pub fn new(id: AgentId, role: Role, kb: KnowledgeBase) -> Self {
        DialogueParty { id, role, kb }
    }
}

struct Live {
    id: AgentId,
    inst: RoleInstance,
    kb: KnowledgeBase,
    inbox: VecDeque<Message>,
    sent: BTreeSet<String>,
}

struct Firing {
    index: usize,
    op: ProtocolOperation,
    bindings: Substitution,
    support: Vec<Atom>,
    key: Option<String>,
}

/// Text identifying a send instance up to the names of unbound variables.
fn send_key(index: usize, op: &ProtocolOperation) -> String {
    fn in_order(t: &Term, out: &mut Vec<String>) {
        match t {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::List(items) | Term::App(_, items) => items.iter().for_each(|i| in_order(i, out)),
            _ => {}
        }
    }
    let terms = [op.locution.to_term(), op.partner.clone(), op.partner_role.to_term()];
    let mut order = Vec::new();
    terms.iter().for_each(|t| in_order(t, &mut order));
    let canon = |v: &str| order.iter().position(|o| o == v).map(|i| format!("V{i}"));
    let mut text = index.to_string();
    for t in &terms {
        text.push('|');
        text.push_str(&t.rename_vars(&canon).to_string());
    }
    text
}

fn message_bindings(op: &ProtocolOperation, msg: &Message, base: &Substitution) -> Option<Substitution> {
    let pairs = [
        (op.locution.to_term(), msg.locution.to_term()),
        (op.partner.clone(), msg.sender.to_term()),
        (op.partner_role.to_term(), msg.sender_role.to_term()),
    ];
    unify_all(pairs.iter().map(|(a, b)| (a, b)), base)
}

fn first_firing(party: &Live, counterpart: &AgentId, sigma: &Substitution, gen: &mut VarGen) -> Option<Firing> {
    for (index, schema) in party.inst.operations.iter().enumerate() {
        let op = schema.apply(&gen.renaming(&party.inst.local_vars[index]));
        let start = match op.direction {
            Direction::Send => match crate::term::unify_with(&op.partner, &counterpart.to_term(), sigma) {
                Some(s) => s,
                None => continue,
            },
            Direction::Receive => match party.inbox.front() {
                Some(msg) => match message_bindings(&op, msg, sigma) {
                    Some(s) => s,
                    None => continue,
                },
                None => continue,
            },
        };
        for sol in party.kb.solutions_with(&op.precondition, &start, gen) {
            if !op.postcondition.apply(&sol.bindings).is_ground() {
                continue;
            }
            let key = match op.direction {
                Direction::Send => {
                    let k = send_key(index, &op.apply(&sol.bindings));
                    if party.sent.contains(&k) {
                        continue;
                    }
                    Some(k)
                }
                Direction::Receive => None,
            };
            return Some(Firing {
                index,
                op: op.clone(),
                bindings: sol.bindings,
                support: sol.support,
                key,
            });
        }
    }
    None
}

/// Operations of `role` enabled in `kb`, each with the bindings of its first
/// solution expressed over the clause's own variable names.
pub fn enabled_operations(
    kb: &KnowledgeBase,
    role: &Role,
    inbox: &[Message],
) -> Vec<(ProtocolOperation, Substitution)> {
    let mut names = role.clause.vars();
    role.label.collect_vars(&mut names);
    for a in kb.iter() {
        a.collect_vars(&mut names);
    }
    for m in inbox {
        if let Some(c) = &m.locution.content {
            c.collect_vars(&mut names);
        }
        m.sender_role.collect_vars(&mut names);
    }
    let mut gen = VarGen::above(names.iter().map(String::as_str));
    let inst = role.instantiate(&mut gen);
    let mut out = Vec::new();
    for (index, op) in inst.operations.iter().enumerate() {
        let start = match op.direction {
            Direction::Send => Substitution::new(),
            Direction::Receive => match inbox
                .first()
                .and_then(|m| message_bindings(op, m, &Substitution::new()))
            {
                Some(s) => s,
                None => continue,
            },
        };
        if let Some(sol) = kb.solutions_with(&op.precondition, &start, &mut gen).into_iter().next() {
            let mut bindings = Vec::new();
            for (fresh, orig) in &inst.origin {
                let value = sol.bindings.apply(&inst.head_binding.apply(&Term::Var(fresh.clone())));
                let unchanged = matches!(&value, Term::Var(v) if v == fresh || v == orig);
                if !unchanged {
                    bindings.push((orig.clone(), value));
                }
            }
            let s = Substitution::from_bindings(bindings).expect("values are free of clause names");
            out.push((role.clause.operations[index].clone(), s));
        }
    }
    out
}

/// Runs a dialogue to completion. `max_steps` bounds the number of messages.
pub fn run_dialogue(
    initiator: &DialogueParty,
    responder: &DialogueParty,
    success_goal: &Formula,
    max_steps: usize,
) -> DialogueTranscript {
    let mut names = success_goal.vars();
    for p in [initiator, responder] {
        names.extend(p.role.clause.vars());
        p.role.label.collect_vars(&mut names);
        for a in p.kb.iter() {
            a.collect_vars(&mut names);
        }
    }
    let mut gen = VarGen::above(names.iter().map(String::as_str));
    let mut visible = initiator.role.label.vars();
    responder.role.label.collect_vars(&mut visible);
    success_goal.collect_vars(&mut visible);

    let mut parties = [initiator, responder].map(|p| Live {
        id: p.id.clone(),
        inst: p.role.instantiate(&mut gen),
        kb: p.kb.clone(),
        inbox: VecDeque::new(),
        sent: BTreeSet::new(),
    });
    let mut sigma = Substitution::new();
    let mut steps = Vec::new();
    let mut fired = Vec::new();

    let finish = |parties: &[Live; 2], steps, fired, outcome| DialogueTranscript {
        initiator: initiator.id.clone(),
        initiator_role: initiator.role.label.clone(),
        responder: responder.id.clone(),
        responder_role: responder.role.label.clone(),
        steps,
        outcome,
        fired,
        final_kbs: parties.iter().map(|p| (p.id.clone(), p.kb.clone())).collect(),
    };
    let succeeded = |parties: &[Live; 2], sigma: &Substitution| {
        parties[0]
            .kb
            .evaluate(success_goal, sigma)
            .map(|s| s.restrict(&visible))
    };

    if let Some(bindings) = succeeded(&parties, &sigma) {
        return finish(&parties, steps, fired, Outcome::Success { bindings });
    }

    let mut turn = 0usize;
    let mut idle_turns = 0;
    loop {
        let other_id = parties[1 - turn].id.clone();
        let mut fired_this_turn = false;
        while let Some(firing) = first_firing(&parties[turn], &other_id, &sigma, &mut gen) {
            let op = firing.op.apply(&firing.bindings);
            if op.direction == Direction::Send {
                if steps.len() >= max_steps {
                    return finish(&parties, steps, fired, Outcome::StepLimitExceeded);
                }
                let from_role = parties[turn].inst.label.apply(&firing.bindings);
                steps.push(TranscriptStep {
                    from: parties[turn].id.clone(),
                    from_role: from_role.clone(),
                    to: other_id.clone(),
                    to_role: op.partner_role.clone(),
                    performative: op.locution.performative.clone(),
                    content: op.locution.content.clone(),
                });
                parties[1 - turn].inbox.push_back(Message {
                    locution: op.locution.clone(),
                    sender: parties[turn].id.clone(),
                    sender_role: from_role,
                });
                parties[turn]
                    .sent
                    .insert(firing.key.clone().expect("sends carry a key"));
            } else {
                parties[turn].inbox.pop_front();
            }
            let party = &mut parties[turn];
            party.kb = party
                .kb
                .apply_postcondition(&op.postcondition, &Substitution::new())
                .expect("enabled operations have ground literal postconditions");
            sigma = firing.bindings;
            fired.push(FiredOperation {
                agent: party.id.clone(),
                operation: firing.index,
                direction: op.direction,
                support: firing.support,
            });
            fired_this_turn = true;
            if let Some(bindings) = succeeded(&parties, &sigma) {
                return finish(&parties, steps, fired, Outcome::Success { bindings });
            }
            if op.direction == Direction::Send {
                break;
            }
        }
        if fired_this_turn {
            idle_turns = 0;
        } else {
            idle_turns += 1;
            if idle_turns >= 2 {
                let pending: usize = parties.iter().map(|p| p.inbox.len()).sum();
                let reason = if pending == 0 {
                    "no operation is enabled for either party".to_string()
                } else {
                    format!("no operation is enabled for either party; {pending} message(s) left unprocessed")
                };
                return finish(&parties, steps, fired, Outcome::Failure { reason });
            }
        }
        turn = 1 - turn;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::role::ProtocolClause;

    fn clause(name: &str, head: &str, ops: &[&str]) -> ProtocolClause {
        ProtocolClause::new(
            name,
            head.parse().unwrap(),
            ops.iter().map(|o| o.parse().unwrap()).collect(),
        )
        .unwrap()
    }

    fn requester_clause() -> ProtocolClause {
        clause(
            "requester",
            "requester(S)",
            &[
                "toBuy(S) & provides(Ag,S) [send(request(S),Ag,provider(S))] requested(S,Ag)",
                "requested(S,Ag) [receive(accept,Ag,provider(S))] bought(S)",
                "requested(S,Ag) [receive(refuse,Ag,provider(S))] true",
            ],
        )
    }

    fn provider_clause() -> ProtocolClause {
        clause(
            "provider",
            "provider(S)",
            &[
                "true [receive(request(S),Ag,requester(S))] requestedBy(Ag,S)",
                "requestedBy(Ag,S) & toSell(S) [send(accept,Ag,requester(S))] sold(S)",
                "requestedBy(Ag,S) & ~toSell(S) [send(refuse,Ag,requester(S))] true",
            ],
        )
    }

    fn kb(atoms: &[&str]) -> KnowledgeBase {
        atoms.iter().map(|a| a.parse().unwrap()).collect()
    }

    fn parties(provider_kb: &[&str]) -> (DialogueParty, DialogueParty) {
        let client = DialogueParty::new(
            "clientAg".into(),
            Role::new("requester(S)".parse().unwrap(), requester_clause()).unwrap(),
            kb(&["toBuy(s)", "provides(satERS1ag,s)"]),
        );
        let sat = DialogueParty::new(
            "satERS1ag".into(),
            Role::new("provider(S)".parse().unwrap(), provider_clause()).unwrap(),
            kb(provider_kb),
        );
        (client, sat)
    }

    fn performatives(t: &DialogueTranscript) -> Vec<&str> {
        t.steps.iter().map(|s| s.performative.as_str()).collect()
    }

    #[test]
    fn accept_branch_succeeds_in_two_messages() {
        let (c, p) = parties(&["toSell(s)"]);
        let t = run_dialogue(&c, &p, &"bought(s)".parse().unwrap(), 10);
        assert!(t.outcome.is_success(), "{:?}", t.outcome);
        assert_eq!(performatives(&t), ["request", "accept"]);
        assert_eq!(t.steps[0].content, Some("s".parse().unwrap()));
        assert_eq!(t.steps[0].to_role, "provider(s)".parse().unwrap());
        assert!(t.final_kbs[&AgentId::new("satERS1ag")].contains(&"sold(s)".parse().unwrap()));
    }

    #[test]
    fn refuse_branch_fails_in_two_messages() {
        let (c, p) = parties(&[]);
        let t = run_dialogue(&c, &p, &"bought(s)".parse().unwrap(), 10);
        assert!(matches!(t.outcome, Outcome::Failure { .. }));
        assert_eq!(performatives(&t), ["request", "refuse"]);
    }

    #[test]
    fn step_limit() {
        let (c, p) = parties(&["toSell(s)"]);
        let t = run_dialogue(&c, &p, &"bought(s)".parse().unwrap(), 1);
        assert_eq!(t.outcome, Outcome::StepLimitExceeded);
        assert_eq!(t.steps.len(), 1);
    }

    #[test]
    fn deterministic() {
        let (c, p) = parties(&["toSell(s)"]);
        let goal = "bought(s)".parse().unwrap();
        assert_eq!(run_dialogue(&c, &p, &goal, 5), run_dialogue(&c, &p, &goal, 5));
    }

    #[test]
    fn shared_variables_flow_between_parties() {
        let client = DialogueParty::new(
            "clientAg".into(),
            Role::new("requester(sat([R,radar],Out))".parse().unwrap(), requester_clause()).unwrap(),
            kb(&["toBuy(sat([_,radar],_))", "provides(satAg,sat([1000,radar],img))"]),
        );
        let sat = DialogueParty::new(
            "satAg".into(),
            Role::new("provider(sat([R,radar],Out))".parse().unwrap(), provider_clause()).unwrap(),
            kb(&["toSell(sat(In,Out))"]),
        );
        let t = run_dialogue(&client, &sat, &"bought(sat([R,radar],Out))".parse().unwrap(), 10);
        match &t.outcome {
            Outcome::Success { bindings } => {
                assert_eq!(bindings.get("R"), Some(&"1000".parse().unwrap()));
                assert_eq!(bindings.get("Out"), Some(&"img".parse().unwrap()));
            }
            other => panic!("{other:?}"),
        }
        // The provider's goal supported its accept.
        assert!(t
            .fired
            .iter()
            .any(|f| f.agent.as_str() == "satAg" && f.support.contains(&"toSell(sat(In,Out))".parse().unwrap())));
    }

    #[test]
    fn enabled_operations_report_clause_names() {
        let role = Role::new("provider(S)".parse().unwrap(), provider_clause()).unwrap();
        let k = kb(&["requestedBy(clientAg,s)", "toSell(s)"]);
        let enabled = enabled_operations(&k, &role, &[]);
        assert_eq!(enabled.len(), 1);
        assert_eq!(enabled[0].0.locution.performative, "accept");
        assert_eq!(enabled[0].1.get("Ag"), Some(&"clientAg".parse().unwrap()));
        assert_eq!(enabled[0].1.get("S"), Some(&"s".parse().unwrap()));

        let req = Role::new("requester(S)".parse().unwrap(), requester_clause()).unwrap();
        assert!(enabled_operations(&kb(&[]), &req, &[]).is_empty());

        let inbox = [Message {
            locution: "request(s)".parse().unwrap(),
            sender: "clientAg".into(),
            sender_role: "requester(s)".parse().unwrap(),
        }];
        let enabled = enabled_operations(&kb(&[]), &role, &inbox);
        assert_eq!(enabled.len(), 1);
        assert_eq!(enabled[0].0.direction, Direction::Receive);
    }
}
