//! Role/goal coherence of an agent.
//!
//! (a) every role has an operation whose precondition mentions, positively and
//! up to unification, one of the agent's goals; (b) the fulfilment atom of
//! every goal is asserted by some postcondition of one of the agent's roles.

use serde::{Deserialize, Serialize};

use crate::formula::Atom;
use crate::protocol::role::{Role, RoleLabel};
use crate::society::agent::AgentSpec;
use crate::term::{unify, VarGen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CoherenceRule {
    /// A role with no enabling goal.
    #[serde(rename = "a")]
    RoleEnabledByGoal,
    /// A goal that no role can fulfil.
    #[serde(rename = "b")]
    GoalFulfilledByRole,
}

impl std::fmt::Display for CoherenceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoherenceRule::RoleEnabledByGoal => "a",
            CoherenceRule::GoalFulfilledByRole => "b",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoherenceReport {
    pub roles_without_goal: Vec<RoleLabel>,
    pub goals_without_role: Vec<Atom>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.roles_without_goal.is_empty() && self.goals_without_role.is_empty()
    }
}

fn gen_for(agent: &AgentSpec) -> VarGen {
    let mut names = std::collections::BTreeSet::new();
    for r in &agent.roles {
        names.extend(r.clause.vars());
        r.label.collect_vars(&mut names);
    }
    for g in agent.goals.iter().chain(&agent.knowledge) {
        g.collect_vars(&mut names);
    }
    for p in &agent.fulfilment {
        p.goal.collect_vars(&mut names);
        p.fulfilled_by.collect_vars(&mut names);
    }
    VarGen::above(names.iter().map(String::as_str))
}

fn unifies_apart(a: &Atom, b: &Atom, gen: &mut VarGen) -> bool {
    let renamed = b.apply(&gen.renaming(&b.vars()));
    unify(&a.to_term(), &renamed.to_term()).is_some()
}

fn role_enabled(role: &Role, goals: &[Atom], gen: &mut VarGen) -> bool {
    let inst = role.instantiate(gen);
    inst.operations.iter().any(|op| {
        op.precondition
            .positive_atoms()
            .into_iter()
            .any(|p| goals.iter().any(|g| unifies_apart(p, g, gen)))
    })
}

fn goal_fulfillable(fulfilment: &Atom, roles: &[Role], gen: &mut VarGen) -> bool {
    roles.iter().any(|role| {
        let inst = role.instantiate(gen);
        inst.operations.iter().any(|op| {
            op.postcondition
                .positive_atoms()
                .into_iter()
                .any(|p| unifies_apart(p, fulfilment, gen))
        })
    })
}

pub fn check_role_goal_coherence(agent: &AgentSpec) -> CoherenceReport {
    let mut gen = gen_for(agent);
    let mut report = CoherenceReport::default();
    for role in &agent.roles {
        if !role_enabled(role, &agent.goals, &mut gen) {
            report.roles_without_goal.push(role.label.clone());
        }
    }
    for goal in &agent.goals {
        let f = agent.fulfilment_of(goal);
        if !goal_fulfillable(&f, &agent.roles, &mut gen) {
            report.goals_without_role.push(goal.clone());
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::society::agent::FulfilmentPairing;

    fn a(src: &str) -> Atom {
        src.parse().unwrap()
    }

    fn client(goals: &[&str], pair: bool) -> AgentSpec {
        let role = Role::new("requester(S)".parse().unwrap(), fixtures::requester_clause()).unwrap();
        let mut agent = AgentSpec::new("clientAg", vec![role], goals.iter().map(|g| a(g)).collect());
        if pair {
            agent = agent.with_fulfilment(vec![FulfilmentPairing::new(a("toBuy(S)"), a("bought(S)"))]);
        }
        agent
    }

    #[test]
    fn client_with_buying_goals_is_coherent() {
        let agent = client(
            &["toBuy(satImage(in,Out))", "toBuy(oilSpillDetect([Out,t],Out2))"],
            true,
        );
        assert!(check_role_goal_coherence(&agent).is_coherent());
    }

    #[test]
    fn unfulfillable_goal_breaks_rule_b() {
        let agent = client(&["toBuy(satImage(in,Out))", "famous(clientAg)"], true);
        let r = check_role_goal_coherence(&agent);
        assert_eq!(r.goals_without_role, vec![a("famous(clientAg)")]);
        assert!(r.roles_without_goal.is_empty());
        // Without the pairing, toBuy itself would have to be asserted.
        let r = check_role_goal_coherence(&client(&["toBuy(x(a,b))"], false));
        assert_eq!(r.goals_without_role.len(), 1);
    }

    #[test]
    fn role_guarded_by_foreign_atom_breaks_rule_a() {
        // The provider clause with its toSell guards replaced by an atom no goal mentions.
        let clause = crate::protocol::role::ProtocolClause::new(
            "provider",
            "provider(S)".parse().unwrap(),
            [
                "true [receive(request(S),Ag,requester(S))] requestedBy(Ag,S)",
                "requestedBy(Ag,S) & inStock(S) [send(accept,Ag,requester(S))] sold(S)",
                "requestedBy(Ag,S) & ~inStock(S) [send(refuse,Ag,requester(S))] true",
            ]
            .iter()
            .map(|o| o.parse().unwrap())
            .collect(),
        )
        .unwrap();
        let role = Role::new("provider(satImage(In,Out))".parse().unwrap(), clause).unwrap();
        let agent = AgentSpec::new("satERS1Ag", vec![role], vec![a("toSell(satImage(In,Out))")])
            .with_fulfilment(vec![FulfilmentPairing::new(a("toSell(S)"), a("sold(S)"))]);
        let r = check_role_goal_coherence(&agent);
        assert_eq!(r.roles_without_goal.len(), 1);
        assert!(r.goals_without_role.is_empty());
    }
}
