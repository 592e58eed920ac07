//! Agent declarations: identifier, roles, goals and how each goal is fulfilled.

use serde::{Deserialize, Serialize};

use crate::formula::Atom;
use crate::ids::AgentId;
use crate::protocol::role::Role;
use crate::term::{match_term, VarGen};

/// Declares that a goal matching `goal` is fulfilled once `fulfilled_by`
/// (under the same bindings) holds, e.g. `toBuy(S)` / `bought(S)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FulfilmentPairing {
    pub goal: Atom,
    pub fulfilled_by: Atom,
}

impl FulfilmentPairing {
    pub fn new(goal: Atom, fulfilled_by: Atom) -> Self {
        FulfilmentPairing { goal, fulfilled_by }
    }

    /// Variables of the fulfilment atom must come from the goal pattern.
    pub fn is_well_formed(&self) -> bool {
        self.fulfilled_by.vars().is_subset(&self.goal.vars())
    }

    /// The fulfilment atom for `goal`, if this pairing applies to it.
    pub fn fulfilment_of(&self, goal: &Atom) -> Option<Atom> {
        let mut gen = VarGen::above_terms([&self.goal.to_term(), &self.fulfilled_by.to_term(), &goal.to_term()]);
        let renaming = gen.renaming(&self.goal.vars());
        let pattern = self.goal.apply(&renaming);
        let theta = match_term(&pattern.to_term(), &goal.to_term())?;
        Some(self.fulfilled_by.apply(&renaming).apply(&theta))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSpec {
    pub id: AgentId,
    pub roles: Vec<Role>,
    pub goals: Vec<Atom>,
    pub fulfilment: Vec<FulfilmentPairing>,
    /// Private facts the agent starts with, besides its goals.
    pub knowledge: Vec<Atom>,
}

impl AgentSpec {
    pub fn new(id: impl Into<AgentId>, roles: Vec<Role>, goals: Vec<Atom>) -> Self {
        AgentSpec {
            id: id.into(),
            roles,
            goals,
            fulfilment: Vec::new(),
            knowledge: Vec::new(),
        }
    }

    pub fn with_fulfilment(mut self, pairings: Vec<FulfilmentPairing>) -> Self {
        self.fulfilment = pairings;
        self
    }

    pub fn with_knowledge(mut self, knowledge: Vec<Atom>) -> Self {
        self.knowledge = knowledge;
        self
    }

    /// The atom whose presence fulfils `goal`: the first applicable pairing,
    /// or the goal itself when no pairing applies.
    pub fn fulfilment_of(&self, goal: &Atom) -> Atom {
        self.fulfilment
            .iter()
            .find_map(|p| p.fulfilment_of(goal))
            .unwrap_or_else(|| goal.clone())
    }

    pub fn holds_role(&self, role: &Role) -> bool {
        self.roles.contains(role)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(src: &str) -> Atom {
        src.parse().unwrap()
    }

    #[test]
    fn pairing_maps_goal_to_fulfilment() {
        let p = FulfilmentPairing::new(a("toBuy(S)"), a("bought(S)"));
        assert!(p.is_well_formed());
        assert_eq!(
            p.fulfilment_of(&a("toBuy(satImage([38.0,-9.4,_,500,_,radar,_],_))")),
            Some(a("bought(satImage([38.0,-9.4,_,500,_,radar,_],_))"))
        );
        assert_eq!(p.fulfilment_of(&a("toSell(x)")), None);
        // Goal variables sharing the pattern's names are not confused with it.
        assert_eq!(p.fulfilment_of(&a("toBuy(f(S,T))")), Some(a("bought(f(S,T))")));
        assert!(!FulfilmentPairing::new(a("toBuy(S)"), a("bought(X)")).is_well_formed());
    }

    #[test]
    fn default_fulfilment_is_the_goal() {
        let agent = AgentSpec::new("x", vec![], vec![a("rich")]);
        assert_eq!(agent.fulfilment_of(&a("rich")), a("rich"));
    }
}
