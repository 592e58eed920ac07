//! First-order terms, substitutions and syntactic unification.
//!
//! Variables start with an uppercase letter or `_`; the bare `_` is the
//! anonymous variable, which unifies with anything and never receives a
//! binding. Numbers are exact decimals, so `1000` and `1000.0` are the same
//! constant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_decimal::Decimal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Name of the anonymous variable.
pub const ANONYMOUS: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// Symbolic constant such as `radar` or `results.data`.
    Sym(String),
    /// Numeric constant.
    Num(Decimal),
    Var(String),
    List(Vec<Term>),
    /// Compound term `f(t1,...,tn)` with at least one argument. Services,
    /// locution contents and role parameters are compounds.
    App(String, Vec<Term>),
}

impl Term {
    pub fn sym(name: impl Into<String>) -> Self {
        Term::Sym(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn num(value: impl Into<Decimal>) -> Self {
        Term::Num(value.into())
    }

    pub fn anonymous() -> Self {
        Term::Var(ANONYMOUS.to_string())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Self {
        debug_assert!(!args.is_empty(), "compound terms need arguments");
        Term::App(name.into(), args)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_anonymous(&self) -> bool {
        matches!(self, Term::Var(v) if v == ANONYMOUS)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Sym(_) | Term::Num(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Sym(_) | Term::Num(_) => true,
            Term::Var(_) => false,
            Term::List(items) | Term::App(_, items) => items.iter().all(Term::is_ground),
        }
    }

    /// Collects every named (non-anonymous) variable.
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) if v != ANONYMOUS => {
                out.insert(v.clone());
            }
            Term::List(items) | Term::App(_, items) => {
                items.iter().for_each(|t| t.collect_vars(out));
            }
            _ => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Renames variables through `f`; the anonymous variable is left alone.
    pub fn rename_vars(&self, f: &impl Fn(&str) -> Option<String>) -> Term {
        match self {
            Term::Var(v) if v != ANONYMOUS => match f(v) {
                Some(new) => Term::Var(new),
                None => self.clone(),
            },
            Term::List(items) => Term::List(items.iter().map(|t| t.rename_vars(f)).collect()),
            Term::App(name, items) => Term::App(name.clone(), items.iter().map(|t| t.rename_vars(f)).collect()),
            _ => self.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SubstitutionError {
    #[error("variable {0} is bound to a term containing itself")]
    Cyclic(String),
    #[error("the anonymous variable cannot be bound")]
    AnonymousBinding,
}

/// Finite map from variable names to terms, kept free of cycles.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a substitution from explicit bindings, rejecting cycles.
    pub fn from_bindings<I, K>(bindings: I) -> Result<Self, SubstitutionError>
    where
        I: IntoIterator<Item = (K, Term)>,
        K: Into<String>,
    {
        let mut s = Substitution::new();
        for (k, t) in bindings {
            let k = k.into();
            if k == ANONYMOUS {
                return Err(SubstitutionError::AnonymousBinding);
            }
            s.bindings.insert(k, t);
        }
        for v in s.bindings.keys() {
            let mut seen = BTreeSet::new();
            if s.reaches_cycle(v, &mut seen) {
                return Err(SubstitutionError::Cyclic(v.clone()));
            }
        }
        Ok(s)
    }

    fn reaches_cycle(&self, var: &str, path: &mut BTreeSet<String>) -> bool {
        if !path.insert(var.to_string()) {
            return true;
        }
        if let Some(t) = self.bindings.get(var) {
            for v in t.vars() {
                if self.reaches_cycle(&v, path) {
                    return true;
                }
            }
        }
        path.remove(var);
        false
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Applies the substitution, dereferencing binding chains completely.
    pub fn apply(&self, term: &Term) -> Term {
        if self.bindings.is_empty() {
            return term.clone();
        }
        match term {
            Term::Var(v) => match self.bindings.get(v) {
                Some(bound) => self.apply(bound),
                None => term.clone(),
            },
            Term::List(items) => Term::List(items.iter().map(|t| self.apply(t)).collect()),
            Term::App(name, items) => Term::App(name.clone(), items.iter().map(|t| self.apply(t)).collect()),
            _ => term.clone(),
        }
    }

    /// Follows variable-to-variable links without rebuilding structure.
    fn walk<'a>(&'a self, mut term: &'a Term) -> &'a Term {
        while let Term::Var(v) = term {
            match self.bindings.get(v) {
                Some(next) => term = next,
                None => break,
            }
        }
        term
    }

    fn occurs(&self, var: &str, term: &Term) -> bool {
        match self.walk(term) {
            Term::Var(v) => v == var,
            Term::List(items) | Term::App(_, items) => items.iter().any(|t| self.occurs(var, t)),
            _ => false,
        }
    }

    /// Every binding with its right-hand side fully dereferenced.
    pub fn normalized(&self) -> Substitution {
        Substitution {
            bindings: self.bindings.iter().map(|(k, t)| (k.clone(), self.apply(t))).collect(),
        }
    }

    /// Keeps only the bindings of `vars`, dereferenced.
    pub fn restrict(&self, vars: &BTreeSet<String>) -> Substitution {
        Substitution {
            bindings: vars
                .iter()
                .filter(|v| self.bindings.contains_key(*v))
                .map(|v| (v.clone(), self.apply(&Term::Var(v.clone()))))
                .collect(),
        }
    }

    fn unify_into(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            _ if a.is_anonymous() || b.is_anonymous() => true,
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if self.occurs(x, t) {
                    return false;
                }
                self.bindings.insert(x.clone(), t.clone());
                true
            }
            (Term::Sym(x), Term::Sym(y)) => x == y,
            (Term::Num(x), Term::Num(y)) => x == y,
            (Term::List(xs), Term::List(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify_into(x, y))
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify_into(x, y))
            }
            _ => false,
        }
    }
}

/// Most general unifier of two terms.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    unify_with(a, b, &Substitution::new())
}

/// Extends `base` to a most general unifier of `a` and `b`.
pub fn unify_with(a: &Term, b: &Term, base: &Substitution) -> Option<Substitution> {
    let mut s = base.clone();
    s.unify_into(a, b).then(|| s.normalized())
}

/// Pairwise unification of two equally long sequences.
pub fn unify_all<'a>(
    pairs: impl IntoIterator<Item = (&'a Term, &'a Term)>,
    base: &Substitution,
) -> Option<Substitution> {
    let mut s = base.clone();
    for (a, b) in pairs {
        if !s.unify_into(a, b) {
            return None;
        }
    }
    Some(s.normalized())
}

/// One-way matching: finds `s` with `s(pattern) == instance`, binding only
/// variables of `pattern`. Variables of `instance` are treated as constants.
///
/// Trivial bindings `X->X` are omitted. When the two sides share variable
/// names the result is only a witness of the match; rename apart first if
/// it is going to be applied.
pub fn match_term(pattern: &Term, instance: &Term) -> Option<Substitution> {
    // Pattern variables are renamed apart so that a name shared with the
    // instance cannot create a binding chain.
    let mut gen = VarGen::above_terms([pattern, instance]);
    let renaming = gen.renaming(&pattern.vars());
    let pattern = renaming.apply(pattern);
    let mut bindings = BTreeMap::new();
    if !match_into(&pattern, instance, &mut bindings) {
        return None;
    }
    // Map back to the caller's variable names.
    let back: BTreeMap<String, String> = renaming
        .iter()
        .filter_map(|(orig, t)| match t {
            Term::Var(fresh) => Some((fresh.clone(), orig.clone())),
            _ => None,
        })
        .collect();
    Some(Substitution {
        bindings: bindings
            .into_iter()
            .map(|(k, t)| (back.get(&k).cloned().unwrap_or(k), t))
            .filter(|(k, t)| !matches!(t, Term::Var(v) if v == k))
            .collect(),
    })
}

fn match_into(pattern: &Term, instance: &Term, bindings: &mut BTreeMap<String, Term>) -> bool {
    match pattern {
        Term::Var(v) if v == ANONYMOUS => true,
        Term::Var(v) => match bindings.get(v) {
            Some(bound) => bound == instance,
            None => {
                bindings.insert(v.clone(), instance.clone());
                true
            }
        },
        Term::Sym(_) | Term::Num(_) => pattern == instance,
        Term::List(ps) => match instance {
            Term::List(is) => ps.len() == is.len() && ps.iter().zip(is).all(|(p, i)| match_into(p, i, bindings)),
            _ => false,
        },
        Term::App(f, ps) => match instance {
            Term::App(g, is) => {
                f == g && ps.len() == is.len() && ps.iter().zip(is).all(|(p, i)| match_into(p, i, bindings))
            }
            _ => false,
        },
    }
}

/// True iff `instance` is `pattern` with some of its variables replaced.
pub fn is_instance_of(instance: &Term, pattern: &Term) -> bool {
    match_term(pattern, instance).is_some()
}

/// Deterministic supply of fresh variable names of the form `Base_N`.
///
/// The counter starts above every `_N` suffix seen in the names it was built
/// from, so fresh names never collide with those.
#[derive(Debug, Clone)]
pub struct VarGen {
    next: u64,
}

impl Default for VarGen {
    fn default() -> Self {
        VarGen { next: 1 }
    }
}

impl VarGen {
    pub fn above<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let max = names.into_iter().filter_map(numeric_suffix).max().unwrap_or(0);
        VarGen { next: max + 1 }
    }

    pub fn above_terms<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Self {
        let mut names = BTreeSet::new();
        for t in terms {
            t.collect_vars(&mut names);
        }
        Self::above(names.iter().map(String::as_str))
    }

    /// Makes sure later fresh names also avoid `names`.
    pub fn reserve<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) {
        if let Some(max) = names.into_iter().filter_map(numeric_suffix).max() {
            self.next = self.next.max(max + 1);
        }
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let stem = strip_suffix(base);
        let name = format!("{stem}_{}", self.next);
        self.next += 1;
        name
    }

    /// A renaming substitution sending each of `vars` to a fresh variable.
    pub fn renaming(&mut self, vars: &BTreeSet<String>) -> Substitution {
        Substitution {
            bindings: vars.iter().map(|v| (v.clone(), Term::Var(self.fresh(v)))).collect(),
        }
    }
}

fn numeric_suffix(name: &str) -> Option<u64> {
    let (_, digits) = name.rsplit_once('_')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn strip_suffix(name: &str) -> &str {
    match name.rsplit_once('_') {
        Some((stem, digits))
            if !stem.is_empty() && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) =>
        {
            stem
        }
        _ => name,
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{t}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Substitution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.bindings.iter().map(|(k, t)| (k, t.to_string())))
    }
}

impl<'de> Deserialize<'de> for Substitution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(deserializer)?;
        let mut bindings = Vec::with_capacity(raw.len());
        for (k, v) in raw {
            let t: Term = v.parse().map_err(D::Error::custom)?;
            bindings.push((k, t));
        }
        Substitution::from_bindings(bindings).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(src: &str) -> Term {
        src.parse().unwrap()
    }

    #[test]
    fn applies_workflow_bindings() {
        let s = Substitution::from_bindings([("Res", t("1000")), ("ST", t("optical"))]).unwrap();
        let service = t("satImage([38.0,-9.4,Res,500,5,ST],Out)");
        assert_eq!(s.apply(&service), t("satImage([38.0,-9.4,1000,500,5,optical],Out)"));
    }

    #[test]
    fn ground_terms_are_fixed_points() {
        let s = Substitution::from_bindings([("X", t("a"))]).unwrap();
        let g = t("f([1,2.5,b],c)");
        assert_eq!(s.apply(&g), g);
    }

    #[test]
    fn dereferences_chains() {
        let s = Substitution::from_bindings([("X", t("[a,Y]")), ("Y", t("b"))]).unwrap();
        assert_eq!(s.apply(&t("X")), t("[a,b]"));
    }

    #[test]
    fn rejects_cycles() {
        assert_eq!(
            Substitution::from_bindings([("X", t("f(Y)")), ("Y", t("X"))]),
            Err(SubstitutionError::Cyclic("X".into()))
        );
        assert!(Substitution::from_bindings([("_", t("a"))]).is_err());
    }

    #[test]
    fn unifies_goal_shape_with_offer() {
        let s = unify(&t("[38.0,-9.4,Res,500,5,ST,_]"), &t("[38.0,-9.4,1000,500,5,radar,3]")).unwrap();
        assert_eq!(s.get("Res"), Some(&t("1000")));
        assert_eq!(s.get("ST"), Some(&t("radar")));
        // The anonymous variable never shows up as a binding.
        assert_eq!(s.get("_"), None);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn identity_and_clash() {
        assert_eq!(unify(&t("X"), &t("X")), Some(Substitution::new()));
        assert_eq!(unify(&t("a"), &t("b")), None);
        assert_eq!(unify(&t("[a,b]"), &t("[a]")), None);
        assert_eq!(unify(&t("X"), &t("f(X)")), None);
        assert_eq!(unify(&t("f(a)"), &t("g(a)")), None);
    }

    #[test]
    fn numbers_compare_exactly() {
        assert!(unify(&t("1000"), &t("1000.0")).is_some());
        assert!(unify(&t("0.1"), &t("0.10")).is_some());
        assert!(unify(&t("0.1"), &t("0.11")).is_none());
    }

    #[test]
    fn anonymous_occurrences_are_independent() {
        assert!(unify(&t("[_,_]"), &t("[a,b]")).is_some());
        assert!(unify(&t("f(X,X)"), &t("f(a,b)")).is_none());
    }

    #[test]
    fn matching_is_one_way() {
        let m = match_term(&t("provider(S)"), &t("provider(satImage(In,Out))")).unwrap();
        assert_eq!(m.get("S"), Some(&t("satImage(In,Out)")));
        assert!(match_term(&t("f(a)"), &t("f(X)")).is_none());
        // Shared names between pattern and instance do not chain.
        assert!(is_instance_of(&t("f(Y,a)"), &t("f(X,Y)")));
        assert!(!is_instance_of(&t("f(Y,a)"), &t("f(X,X)")));
        assert_eq!(match_term(&t("p(S)"), &t("p(S)")), Some(Substitution::new()));
        assert!(is_instance_of(&t("satImage([1,_],_)"), &t("satImage(In,Out)")));
    }

    #[test]
    fn fresh_names_avoid_existing_suffixes() {
        let mut gen = VarGen::above(["S_4", "Ag", "X_2"]);
        assert_eq!(gen.fresh("Ag"), "Ag_5");
        assert_eq!(gen.fresh("S_4"), "S_6");
    }
}
