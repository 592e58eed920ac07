//! Atoms and the conditions built from them with `true`, conjunction and negation.

use std::collections::BTreeSet;

use crate::term::{Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, s: &Substitution) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| s.apply(a)).collect(),
        }
    }

    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| a.rename_vars(f)).collect(),
        }
    }

    /// The atom viewed as a term, so it can be unified as a whole.
    pub fn to_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Sym(self.predicate.clone())
        } else {
            Term::App(self.predicate.clone(), self.args.clone())
        }
    }

    pub fn from_term(term: &Term) -> Option<Atom> {
        match term {
            Term::Sym(name) => Some(Atom::new(name.clone(), Vec::new())),
            Term::App(name, args) => Some(Atom::new(name.clone(), args.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
}

/// A signed atom, the building block of postconditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn and(left: Formula, right: Formula) -> Self {
        Formula::And(Box::new(left), Box::new(right))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Self {
        Formula::Not(Box::new(inner))
    }

    /// Left-nested conjunction of `parts`; `true` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    pub fn apply(&self, s: &Substitution) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => Formula::Atom(a.apply(s)),
            Formula::Not(f) => Formula::not(f.apply(s)),
            Formula::And(l, r) => Formula::and(l.apply(s), r.apply(s)),
        }
    }

    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => Formula::Atom(a.rename_vars(f)),
            Formula::Not(g) => Formula::not(g.rename_vars(f)),
            Formula::And(l, r) => Formula::and(l.rename_vars(f), r.rename_vars(f)),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True => {}
            Formula::Atom(a) => a.collect_vars(out),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Formula::True => true,
            Formula::Atom(a) => a.is_ground(),
            Formula::Not(f) => f.is_ground(),
            Formula::And(l, r) => l.is_ground() && r.is_ground(),
        }
    }

    /// Atoms occurring under an even number of negations.
    pub fn positive_atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.signed_atoms(true, &mut out);
        out
    }

    fn signed_atoms<'a>(&'a self, positive: bool, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::True => {}
            Formula::Atom(a) => {
                if positive {
                    out.push(a);
                }
            }
            Formula::Not(f) => f.signed_atoms(!positive, out),
            Formula::And(l, r) => {
                l.signed_atoms(positive, out);
                r.signed_atoms(positive, out);
            }
        }
    }

    /// Every atom, regardless of polarity.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.signed_atoms(true, &mut out);
        self.signed_atoms(false, &mut out);
        out
    }

    /// Decomposes a conjunction of (possibly negated) atoms; `None` if the
    /// formula negates anything other than an atom.
    pub fn literals(&self) -> Option<Vec<Literal>> {
        let mut out = Vec::new();
        self.collect_literals(&mut out).then_some(out)
    }

    fn collect_literals(&self, out: &mut Vec<Literal>) -> bool {
        match self {
            Formula::True => true,
            Formula::Atom(a) => {
                out.push(Literal::Pos(a.clone()));
                true
            }
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) => {
                    out.push(Literal::Neg(a.clone()));
                    true
                }
                _ => false,
            },
            Formula::And(l, r) => l.collect_literals(out) && r.collect_literals(out),
        }
    }
}

impl From<Atom> for Formula {
    fn from(a: Atom) -> Self {
        Formula::Atom(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(src: &str) -> Formula {
        src.parse().unwrap()
    }

    #[test]
    fn polarity_of_atoms() {
        let g = f("requestedBy(Ag,S) & ~toSell(S)");
        let pos: Vec<String> = g.positive_atoms().iter().map(|a| a.to_string()).collect();
        assert_eq!(pos, vec!["requestedBy(Ag,S)"]);
        assert_eq!(g.atoms().len(), 2);
        assert_eq!(f("~~a").positive_atoms().len(), 1);
    }

    #[test]
    fn literal_decomposition() {
        let lits = f("~toSell(s) & sold(s)").literals().unwrap();
        assert_eq!(lits.len(), 2);
        assert!(matches!(&lits[0], Literal::Neg(a) if a.predicate == "toSell"));
        assert!(f("~(a & b)").literals().is_none());
        assert_eq!(f("true").literals(), Some(vec![]));
    }

    #[test]
    fn conjunction_of_nothing_is_true() {
        assert_eq!(Formula::conjunction(Vec::new()), Formula::True);
    }
}
