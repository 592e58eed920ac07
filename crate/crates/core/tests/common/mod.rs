//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voform::fixtures;
use voform::formation::{FormationConfig, ProtocolChoice, ProviderChoice};
use voform::protocol::role::ProtocolClause;
use voform::scenario::{AgentDecl, ClauseDecl, RoleDecl, ScenarioFile};
use voform::society::{FulfilmentPairing, RegistryFact};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn p<T: std::str::FromStr>(src: &str) -> T
where
    T::Err: std::fmt::Debug,
{
    src.parse().unwrap_or_else(|e| panic!("{src}: {e:?}"))
}

fn decl(name: &str, c: &ProtocolClause) -> ClauseDecl {
    ClauseDecl {
        name: name.into(),
        head: c.head.clone(),
        operations: c.operations.clone(),
    }
}

fn role(label: &str, clause: &str) -> RoleDecl {
    RoleDecl {
        label: p(label),
        clause: clause.into(),
    }
}

/// A valid scenario with at most five agents and three services. The
/// initiator `ag0` only requests; every other agent only provides.
pub fn random_scenario(r: &mut impl Rng, index: usize) -> ScenarioFile {
    let n_services = r.random_range(1..=3usize);
    let n_providers = r.random_range(1..=4usize);
    let services: Vec<String> = (0..n_services).map(|k| format!("svc{k}")).collect();
    let alt_clause = r.random_bool(0.3);

    let mut clauses = vec![
        decl("requester", &fixtures::requester_clause()),
        decl("provider", &fixtures::provider_clause()),
    ];
    if alt_clause {
        clauses.push(decl("provider_alt", &fixtures::provider_clause()));
    }

    let inputs = ["in0", "in1"];
    let mut goals = Vec::new();
    for s in &services {
        if r.random_bool(0.7) {
            goals.push(format!("toBuy({s}({},_))", inputs[r.random_range(0..2)]));
        }
    }
    if goals.is_empty() {
        goals.push(format!("toBuy({}({},_))", services[0], inputs[r.random_range(0..2)]));
    }
    let mut knowledge = Vec::new();
    if r.random_bool(0.15) {
        let g = &goals[r.random_range(0..goals.len())];
        let svc = &g["toBuy(".len()..g.len() - 1];
        knowledge.push(p(&format!("bought({})", svc.replace('_', "done"))));
    }
    let mut agents = vec![AgentDecl {
        id: "ag0".into(),
        roles: vec![role("requester(S)", "requester")],
        goals: goals.iter().map(|g| p(g)).collect(),
        fulfilment: vec![FulfilmentPairing::new(p("toBuy(S)"), p("bought(S)"))],
        knowledge,
    }];

    let mut provided: Vec<Vec<usize>> = vec![Vec::new(); n_providers];
    for k in 0..n_services {
        provided[k % n_providers].push(k);
    }
    for list in provided.iter_mut() {
        for k in 0..n_services {
            if !list.contains(&k) && r.random_bool(0.4) {
                list.push(k);
            }
        }
        if list.is_empty() {
            list.push(r.random_range(0..n_services));
        }
        list.sort();
    }

    let mut registry = Vec::new();
    for (i, list) in provided.iter().enumerate() {
        let id = format!("p{}", i + 1);
        let mut roles = Vec::new();
        let mut agent_goals = Vec::new();
        for &k in list {
            let s = &services[k];
            let clause = if alt_clause && r.random_bool(0.5) {
                "provider_alt"
            } else {
                "provider"
            };
            roles.push(role(&format!("provider({s}(In,Out))"), clause));
            // Some providers only sell a variant nobody asks for, and refuse.
            let sells = if r.random_bool(0.2) { "blocked" } else { "In" };
            agent_goals.push(p(&format!("toSell({s}({sells},Out))")));
            if r.random_bool(0.85) {
                let input = ["in0", "in1", "In"][r.random_range(0..3)];
                registry.push(RegistryFact {
                    agent: id.as_str().into(),
                    service: p(&format!("{s}({input},o{}x{k})", i + 1)),
                });
            }
        }
        agents.push(AgentDecl {
            id: id.as_str().into(),
            roles,
            goals: agent_goals,
            fulfilment: vec![FulfilmentPairing::new(p("toSell(S)"), p("sold(S)"))],
            knowledge: Vec::new(),
        });
    }

    let mut formation = FormationConfig::new("ag0");
    formation.seed = r.random();
    formation.max_dialogue_steps = if r.random_bool(0.1) { 1 } else { r.random_range(2..=8) };
    formation.provider_choice = if r.random_bool(0.5) {
        ProviderChoice::First
    } else {
        ProviderChoice::Seeded
    };
    if r.random_bool(0.4) {
        let mut ids: Vec<String> = (1..=n_providers).map(|i| format!("p{i}")).collect();
        ids.shuffle(r);
        ids.truncate(r.random_range(0..=n_providers));
        ids.sort();
        formation.trusted = Some(ids.iter().map(|s| s.as_str().into()).collect());
    }
    if alt_clause && r.random_bool(0.5) {
        formation.protocol_choice.push(ProtocolChoice {
            role: "provider".into(),
            service: services[0].clone(),
            clause: "provider".into(),
        });
    }
    if r.random_bool(0.3) {
        formation.guarantees = BTreeMap::from([(services[0].clone(), vec![p("dueBy(results,1400hrs)")])]);
    }
    let ontology = if r.random_bool(0.3) {
        vec![p("kind(svc0,basic)")]
    } else {
        Vec::new()
    };

    ScenarioFile {
        name: format!("random_{index}"),
        services: services.iter().map(|s| p(&format!("{s}(In,Out)"))).collect(),
        ontology,
        clauses,
        agents,
        registry,
        formation,
    }
}
