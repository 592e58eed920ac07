//! Deliberate corruptions of a tuple, for exercising the checker.

use crate::formation::vo::PartialVO;
use crate::protocol::role::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mutation {
    /// Drop a goal from the VO goals, leaving member goals alone.
    GoalRemoval,
    /// Exchange the role sets of two members whose role sets differ.
    RoleSwap,
    /// Give a member a second role with an existing label and a copied clause.
    DuplicateProtocolLabel,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::GoalRemoval,
        Mutation::RoleSwap,
        Mutation::DuplicateProtocolLabel,
    ];

    /// The mutated tuple, or `None` when the tuple offers nothing to corrupt.
    /// `pick` selects among the possible targets.
    pub fn apply(self, vo: &PartialVO, pick: usize) -> Option<PartialVO> {
        let mut out = vo.clone();
        match self {
            Mutation::GoalRemoval => {
                if out.goals.is_empty() {
                    return None;
                }
                let i = pick % out.goals.len();
                out.goals.remove(i);
            }
            Mutation::RoleSwap => {
                let ids: Vec<_> = out.agents.keys().cloned().collect();
                let mut pairs = Vec::new();
                for (i, a) in ids.iter().enumerate() {
                    for b in &ids[i + 1..] {
                        if out.agents[a].roles != out.agents[b].roles {
                            pairs.push((a.clone(), b.clone()));
                        }
                    }
                }
                if pairs.is_empty() {
                    return None;
                }
                let (a, b) = &pairs[pick % pairs.len()];
                let ra = std::mem::take(&mut out.agents.get_mut(a)?.roles);
                let rb = std::mem::replace(&mut out.agents.get_mut(b)?.roles, ra);
                out.agents.get_mut(a)?.roles = rb;
            }
            Mutation::DuplicateProtocolLabel => {
                let holders: Vec<(_, Role)> = out
                    .agents
                    .iter()
                    .flat_map(|(id, m)| m.roles.iter().map(move |r| (id.clone(), r.clone())))
                    .collect();
                if holders.is_empty() {
                    return None;
                }
                let (id, role) = &holders[pick % holders.len()];
                let mut clause = role.clause.clone();
                clause.name = format!("{}_dup", clause.name);
                let dup = Role {
                    label: role.label.clone(),
                    clause,
                };
                out.agents.get_mut(id)?.roles.insert(dup.clone());
                out.roles.insert(dup);
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::formation::check::validate_transition;

    #[test]
    fn every_mutation_of_every_step_is_caught() {
        let s = fixtures::earth_observation();
        let trace = s.run();
        assert!(trace.completed());
        for step in &trace.steps {
            for m in Mutation::ALL {
                for pick in 0..4 {
                    let Some(bad) = m.apply(&step.after, pick) else {
                        continue;
                    };
                    if bad == step.after {
                        continue;
                    }
                    let report =
                        validate_transition(&s.society, &step.before, &bad, step.transition, &step.transcripts);
                    assert!(!report.passed(), "{m:?} at {} went unnoticed", step.transition);
                }
            }
        }
    }

    #[test]
    fn nothing_to_corrupt_in_the_empty_tuple() {
        let empty = PartialVO::empty();
        for m in Mutation::ALL {
            assert_eq!(m.apply(&empty, 0), None);
        }
    }
}
