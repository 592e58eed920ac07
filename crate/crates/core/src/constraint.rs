//! Membership constraints annotating abstract workflows.
//!
//! An annotation is a conjunction of `Var in [lo,hi]` (closed interval) and
//! `Var in {c1,...,cn}` (finite set) constraints.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;

use crate::term::{Substitution, Term, ANONYMOUS};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicConstraint {
    Interval {
        var: String,
        lower: Decimal,
        upper: Decimal,
    },
    Member {
        var: String,
        values: BTreeSet<Term>,
    },
}

impl AtomicConstraint {
    pub fn var(&self) -> &str {
        match self {
            AtomicConstraint::Interval { var, .. } | AtomicConstraint::Member { var, .. } => var,
        }
    }

    /// Whether the ground value `t` lies in this constraint's domain.
    pub fn admits(&self, t: &Term) -> bool {
        match self {
            AtomicConstraint::Interval { lower, upper, .. } => {
                matches!(t, Term::Num(n) if lower <= n && n <= upper)
            }
            AtomicConstraint::Member { values, .. } => values.contains(t),
        }
    }

    fn with_var(&self, new_var: &str) -> AtomicConstraint {
        match self {
            AtomicConstraint::Interval { lower, upper, .. } => AtomicConstraint::Interval {
                var: new_var.to_string(),
                lower: *lower,
                upper: *upper,
            },
            AtomicConstraint::Member { values, .. } => AtomicConstraint::Member {
                var: new_var.to_string(),
                values: values.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintAnnotation {
    constraints: Vec<AtomicConstraint>,
}

/// Intersection of every domain imposed on one variable.
#[derive(Default)]
struct Domain {
    lower: Option<Decimal>,
    upper: Option<Decimal>,
    set: Option<BTreeSet<Term>>,
}

impl Domain {
    fn restrict(&mut self, c: &AtomicConstraint) {
        match c {
            AtomicConstraint::Interval { lower, upper, .. } => {
                self.lower = Some(self.lower.map_or(*lower, |l| l.max(*lower)));
                self.upper = Some(self.upper.map_or(*upper, |u| u.min(*upper)));
            }
            AtomicConstraint::Member { values, .. } => {
                self.set = Some(match self.set.take() {
                    Some(current) => current.intersection(values).cloned().collect(),
                    None => values.clone(),
                });
            }
        }
    }

    fn in_bounds(&self, t: &Term) -> bool {
        if self.lower.is_none() && self.upper.is_none() {
            return true;
        }
        match t {
            Term::Num(n) => self.lower.is_none_or(|l| l <= *n) && self.upper.is_none_or(|u| *n <= u),
            _ => false,
        }
    }

    fn is_empty(&self) -> bool {
        match &self.set {
            Some(set) => !set.iter().any(|t| self.in_bounds(t)),
            None => match (self.lower, self.upper) {
                (Some(l), Some(u)) => l > u,
                _ => false,
            },
        }
    }
}

impl ConstraintAnnotation {
    pub fn new(constraints: Vec<AtomicConstraint>) -> Self {
        ConstraintAnnotation { constraints }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[AtomicConstraint] {
        &self.constraints
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.constraints.iter().map(|c| c.var().to_string()).collect()
    }

    /// Whether some instantiation extending `partial` meets every constraint.
    ///
    /// Variables bound to ground values must lie in all their domains; free
    /// variables (including ones aliased by `partial`) must keep a non-empty
    /// domain intersection.
    pub fn is_satisfiable(&self, partial: &Substitution) -> bool {
        self.residual(partial).is_some()
    }

    /// The constraints still open after applying `partial`, renamed to the
    /// variables they now refer to; `None` when `partial` violates one.
    pub fn residual(&self, partial: &Substitution) -> Option<ConstraintAnnotation> {
        let mut domains: BTreeMap<String, Domain> = BTreeMap::new();
        let mut open = Vec::new();
        for c in &self.constraints {
            match partial.apply(&Term::Var(c.var().to_string())) {
                Term::Var(v) if v == ANONYMOUS => {
                    // Unconstrained slot; only the constraint itself must be inhabited.
                    let mut d = Domain::default();
                    d.restrict(c);
                    if d.is_empty() {
                        return None;
                    }
                }
                Term::Var(v) => {
                    domains.entry(v.clone()).or_default().restrict(c);
                    open.push(c.with_var(&v));
                }
                t if t.is_ground() => {
                    if !c.admits(&t) {
                        return None;
                    }
                }
                // A structured, partially bound value is never a constant.
                _ => return None,
            }
        }
        if domains.values().any(Domain::is_empty) {
            return None;
        }
        Some(ConstraintAnnotation { constraints: open })
    }
}

/// Free-function form of [`ConstraintAnnotation::is_satisfiable`].
pub fn constraint_satisfiable(c: &ConstraintAnnotation, partial: &Substitution) -> bool {
    c.is_satisfiable(partial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(src: &str) -> ConstraintAnnotation {
        src.parse().unwrap()
    }

    fn sub(pairs: &[(&str, &str)]) -> Substitution {
        Substitution::from_bindings(pairs.iter().map(|(k, v)| (*k, v.parse().unwrap()))).unwrap()
    }

    #[test]
    fn workflow_annotation_examples() {
        let a = ann("Res in [900,1100], ST in {radar,optical}");
        assert!(a.is_satisfiable(&Substitution::new()));
        let res = ann("Res in [900,1100]");
        assert!(res.is_satisfiable(&sub(&[("Res", "1000")])));
        assert!(!res.is_satisfiable(&sub(&[("Res", "200")])));
        assert!(res.is_satisfiable(&sub(&[("Res", "900")])));
        assert!(res.is_satisfiable(&sub(&[("Res", "1100.0")])));
        assert!(!res.is_satisfiable(&sub(&[("Res", "high")])));
    }

    #[test]
    fn empty_domains() {
        assert!(!ann("X in [5,4]").is_satisfiable(&Substitution::new()));
        assert!(!ann("X in {}").is_satisfiable(&Substitution::new()));
        assert!(!ann("X in [1,2], X in [3,4]").is_satisfiable(&Substitution::new()));
        assert!(ann("X in [1,3], X in [3,4]").is_satisfiable(&Substitution::new()));
        assert!(!ann("X in {a,b}, X in {c}").is_satisfiable(&Substitution::new()));
        assert!(ann("X in {a,2}, X in [1,3]").is_satisfiable(&Substitution::new()));
        assert!(!ann("X in {a,7}, X in [1,3]").is_satisfiable(&Substitution::new()));
    }

    #[test]
    fn aliasing_merges_domains() {
        let a = ann("X in [1,2], Y in [3,4]");
        assert!(a.is_satisfiable(&Substitution::new()));
        assert!(!a.is_satisfiable(&sub(&[("X", "Y")])));
        let r = a.residual(&sub(&[("X", "Z")])).unwrap();
        assert_eq!(r.vars(), ["Y", "Z"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn structured_values_violate() {
        assert!(!ann("X in {a}").is_satisfiable(&sub(&[("X", "[a,Y]")])));
    }

    #[test]
    fn residual_drops_bound_constraints() {
        let a = ann("Res in [900,1100], ST in {radar,optical}");
        let r = a.residual(&sub(&[("ST", "radar")])).unwrap();
        assert_eq!(r.to_string(), "Res in [900,1100]");
    }
}
