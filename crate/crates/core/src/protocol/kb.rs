//! An agent's private knowledge base and the evaluation of conditions over it.
//!
//! Stored atoms are usually ground. Non-ground atoms act as schemata (a goal
//! such as `toSell(satImage(In,Out))` holds for every instance) and are
//! renamed apart each time they are consulted. Negation is closed-world.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::formula::{Atom, Formula, Literal};
use crate::term::{unify_with, Substitution, VarGen};

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KnowledgeBase {
    atoms: BTreeSet<Atom>,
}

/// One way of satisfying a condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub bindings: Substitution,
    /// Stored atoms that matched the condition's positive atoms.
    pub support: Vec<Atom>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PostconditionError {
    #[error("postcondition {0} is not ground under the given substitution")]
    NonGroundPostcondition(String),
    #[error("postcondition {0} is not a conjunction of literals")]
    InvalidPostcondition(String),
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn insert(&mut self, a: Atom) -> bool {
        self.atoms.insert(a)
    }

    pub fn remove(&mut self, a: &Atom) -> bool {
        self.atoms.remove(a)
    }

    fn fresh_gen(&self, f: &Formula, s: &Substitution) -> VarGen {
        let mut names = f.vars();
        for (k, t) in s.iter() {
            names.insert(k.clone());
            t.collect_vars(&mut names);
        }
        for a in &self.atoms {
            a.collect_vars(&mut names);
        }
        VarGen::above(names.iter().map(String::as_str))
    }

    /// Every way `f` holds under `s`, in deterministic order.
    pub fn solutions(&self, f: &Formula, s: &Substitution) -> Vec<Solution> {
        let mut gen = self.fresh_gen(f, s);
        self.solutions_with(f, s, &mut gen)
    }

    /// As [`solutions`](Self::solutions), drawing renamings from `gen`, which
    /// must already avoid every variable in play.
    pub fn solutions_with(&self, f: &Formula, s: &Substitution, gen: &mut VarGen) -> Vec<Solution> {
        let mut out = Vec::new();
        self.solve(f, s.clone(), Vec::new(), gen, &mut out);
        // Bindings of renamed schema variables are internal; drop them once
        // they have been dereferenced into the visible ones.
        let mut visible = f.vars();
        for (k, t) in s.iter() {
            visible.insert(k.clone());
            t.collect_vars(&mut visible);
        }
        for sol in &mut out {
            sol.bindings = sol.bindings.restrict(&visible);
        }
        // Distinct support sets can yield the same bindings; keep the first.
        let mut seen = HashSet::new();
        out.retain(|sol| seen.insert(sol.bindings.clone()));
        out
    }

    fn solve(&self, f: &Formula, s: Substitution, support: Vec<Atom>, gen: &mut VarGen, out: &mut Vec<Solution>) {
        match f {
            Formula::True => out.push(Solution { bindings: s, support }),
            Formula::Atom(goal) => {
                let goal = goal.to_term();
                for stored in &self.atoms {
                    let renamed = if stored.is_ground() {
                        stored.clone()
                    } else {
                        stored.apply(&gen.renaming(&stored.vars()))
                    };
                    if let Some(ext) = unify_with(&goal, &renamed.to_term(), &s) {
                        let mut sup = support.clone();
                        sup.push(stored.clone());
                        out.push(Solution {
                            bindings: ext,
                            support: sup,
                        });
                    }
                }
            }
            Formula::Not(inner) => {
                let mut probe = Vec::new();
                self.solve(inner, s.clone(), Vec::new(), gen, &mut probe);
                if probe.is_empty() {
                    out.push(Solution { bindings: s, support });
                }
            }
            Formula::And(l, r) => {
                let mut left = Vec::new();
                self.solve(l, s, support, gen, &mut left);
                for sol in left {
                    self.solve(r, sol.bindings, sol.support, gen, out);
                }
            }
        }
    }

    /// The first solution of `f` under `s`, if any.
    pub fn evaluate(&self, f: &Formula, s: &Substitution) -> Option<Substitution> {
        self.solutions(f, s).into_iter().next().map(|sol| sol.bindings)
    }

    pub fn holds(&self, f: &Formula, s: &Substitution) -> bool {
        self.evaluate(f, s).is_some()
    }

    /// Asserts the positive literals of `f` and retracts every stored atom
    /// unifying with a negated one.
    pub fn apply_postcondition(&self, f: &Formula, s: &Substitution) -> Result<KnowledgeBase, PostconditionError> {
        let inst = f.apply(s);
        if !inst.is_ground() {
            return Err(PostconditionError::NonGroundPostcondition(inst.to_string()));
        }
        let literals = inst
            .literals()
            .ok_or_else(|| PostconditionError::InvalidPostcondition(inst.to_string()))?;
        let mut kb = self.clone();
        for lit in &literals {
            if let Literal::Neg(a) = lit {
                let t = a.to_term();
                // `t` is ground, so stored schemata need no renaming.
                kb.atoms
                    .retain(|stored| crate::term::unify(&t, &stored.to_term()).is_none());
            }
        }
        for lit in literals {
            if let Literal::Pos(a) = lit {
                kb.atoms.insert(a);
            }
        }
        Ok(kb)
    }
}

impl FromIterator<Atom> for KnowledgeBase {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        KnowledgeBase {
            atoms: iter.into_iter().collect(),
        }
    }
}

/// Free-function form of [`KnowledgeBase::evaluate`].
pub fn evaluate(kb: &KnowledgeBase, f: &Formula, s: &Substitution) -> Option<Substitution> {
    kb.evaluate(f, s)
}

/// Free-function form of [`KnowledgeBase::apply_postcondition`].
pub fn apply_postcondition(
    kb: &KnowledgeBase,
    f: &Formula,
    s: &Substitution,
) -> Result<KnowledgeBase, PostconditionError> {
    kb.apply_postcondition(f, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{is_instance_of, Term};

    fn kb(atoms: &[&str]) -> KnowledgeBase {
        atoms.iter().map(|a| a.parse().unwrap()).collect()
    }

    fn f(src: &str) -> Formula {
        src.parse().unwrap()
    }

    fn t(src: &str) -> Term {
        src.parse().unwrap()
    }

    #[test]
    fn requester_guard() {
        let k = kb(&["toBuy(satImage(a,B))", "provides(satERS1Ag,satImage(a,B))"]);
        let s = k
            .evaluate(&f("toBuy(S) & provides(Ag,S)"), &Substitution::new())
            .unwrap();
        // B is a stored schema variable, so S is bound to a variant of satImage(a,B).
        let bound = s.apply(&t("S"));
        assert!(is_instance_of(&bound, &t("satImage(a,B)")) && is_instance_of(&t("satImage(a,B)"), &bound));
        assert_eq!(s.len(), 2);
        assert_eq!(s.apply(&t("Ag")), t("satERS1Ag"));
    }

    #[test]
    fn truth_is_trivial() {
        assert_eq!(
            kb(&[]).evaluate(&Formula::True, &Substitution::new()),
            Some(Substitution::new())
        );
    }

    #[test]
    fn refuse_guard_uses_closed_world_negation() {
        let k = kb(&["requestedBy(clientAg,s)"]);
        let s = k
            .evaluate(&f("requestedBy(Ag,S) & ~toSell(S)"), &Substitution::new())
            .unwrap();
        assert_eq!(s.apply(&t("Ag")), t("clientAg"));
        assert_eq!(s.apply(&t("S")), t("s"));
        let k = kb(&["requestedBy(clientAg,s)", "toSell(s)"]);
        assert!(!k.holds(&f("requestedBy(Ag,S) & ~toSell(S)"), &Substitution::new()));
    }

    #[test]
    fn conjunction_backtracks() {
        let k = kb(&["p(a)", "p(b)", "q(b)"]);
        let s = k.evaluate(&f("p(X) & q(X)"), &Substitution::new()).unwrap();
        assert_eq!(s.apply(&t("X")), t("b"));
        assert_eq!(k.solutions(&f("p(X)"), &Substitution::new()).len(), 2);
    }

    #[test]
    fn schema_atoms_are_renamed_apart() {
        let k = kb(&["toSell(satImage(In,Out))"]);
        let s = k
            .evaluate(&f("toSell(satImage([1,2],Out))"), &Substitution::new())
            .unwrap();
        // The stored schema's Out is not the query's Out.
        assert!(s.apply(&t("Out")).is_var());
        assert!(k.holds(
            &f("toSell(satImage(a,b)) & toSell(satImage(c,d))"),
            &Substitution::new()
        ));
    }

    #[test]
    fn postconditions_assert_and_retract() {
        let k = kb(&[]);
        let s = Substitution::from_bindings([("S", t("s")), ("Ag", t("ag"))]).unwrap();
        assert_eq!(
            k.apply_postcondition(&f("requested(S,Ag)"), &s).unwrap(),
            kb(&["requested(s,ag)"])
        );
        let k = kb(&["toSell(s)"]);
        assert_eq!(k.apply_postcondition(&Formula::True, &Substitution::new()).unwrap(), k);
        assert_eq!(
            k.apply_postcondition(&f("~toSell(s) & sold(s)"), &Substitution::new())
                .unwrap(),
            kb(&["sold(s)"])
        );
        assert!(matches!(
            k.apply_postcondition(&f("sold(X)"), &Substitution::new()),
            Err(PostconditionError::NonGroundPostcondition(_))
        ));
        assert!(matches!(
            k.apply_postcondition(&f("~(a & b)"), &Substitution::new()),
            Err(PostconditionError::InvalidPostcondition(_))
        ));
    }

    #[test]
    fn postconditions_hold_afterwards() {
        let k = kb(&["p(a)", "q(a)"]);
        let post = f("~p(a) & r(a) & ~s(a)");
        let after = k.apply_postcondition(&post, &Substitution::new()).unwrap();
        assert!(after.holds(&post, &Substitution::new()));
    }
}
