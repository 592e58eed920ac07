//! Canonical text syntax: parsing and printing of terms, atoms, formulas,
//! services, role labels, locutions, protocol operations and annotations.
//!
//! ```text
//! term       := number | symbol | Variable | [t1,...,tn] | name(t1,...,tn)
//! formula    := conj ; conj := unary ('&' unary)* ; unary := '~' unary | '(' formula ')' | 'true' | atom
//! operation  := formula '[' ('send'|'receive') '(' locution ',' partner ',' label ')' ']' formula
//! annotation := Var 'in' '[' num ',' num ']' | Var 'in' '{' c1,...,cn '}'   (comma separated)
//! ```
//!
//! Printing never inserts spaces inside terms, so `parse(print(x)) == x`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;

use crate::constraint::{AtomicConstraint, ConstraintAnnotation};
use crate::formula::{Atom, Formula};
use crate::protocol::role::{Direction, Locution, ProtocolOperation, RoleLabel};
use crate::service::ServiceTerm;
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at offset {offset} in `{input}`")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Amp,
    Tilde,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn is_number(w: &str) -> bool {
    let digits = w.strip_prefix('-').unwrap_or(w);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let int_ok = int == "0" || (!int.is_empty() && !int.starts_with('0') && int.bytes().all(|b| b.is_ascii_digit()));
    let frac_ok = frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()));
    int_ok && frac_ok
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = input.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '&' => Some(Tok::Amp),
            '~' => Some(Tok::Tilde),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if is_word_char(c) || (c == '-' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() && is_word_char(chars[i].1) {
                i += 1;
            }
            let end = chars.get(i).map_or(input.len(), |(p, _)| *p);
            out.push((Tok::Word(input[pos..end].to_string()), chars[start].0));
        } else {
            return Err(ParseError {
                message: format!("unexpected character `{c}`"),
                offset: pos,
                input: input.to_string(),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    input: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Result<Self, ParseError> {
        Ok(Parser {
            input,
            toks: lex(input)?,
            pos: 0,
        })
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.input.len(), |(_, o)| *o)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            message: message.into(),
            offset: self.offset(),
            input: self.input.to_string(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            self.error("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Some(Tok::LBrack) => {
                let items = self.sequence(Tok::RBrack, "`]`")?;
                Ok(Term::List(items))
            }
            Some(Tok::Word(w)) => {
                if is_number(&w) {
                    return match Decimal::from_str_exact(&w) {
                        Ok(d) => Ok(Term::Num(d)),
                        Err(_) => {
                            self.pos -= 1;
                            self.error(format!("number `{w}` out of range"))
                        }
                    };
                }
                let first = w.chars().next().expect("words are non-empty");
                if first.is_ascii_uppercase() || first == '_' {
                    if self.peek() == Some(&Tok::LParen) {
                        return self.error("variables cannot take arguments");
                    }
                    Ok(Term::Var(w))
                } else if first.is_ascii_lowercase() || first.is_ascii_digit() {
                    if self.peek() == Some(&Tok::LParen) {
                        if !first.is_ascii_lowercase() {
                            return self.error("a functor must start with a lowercase letter");
                        }
                        self.pos += 1;
                        let args = self.sequence(Tok::RParen, "`)`")?;
                        if args.is_empty() {
                            return self.error("a compound term needs at least one argument");
                        }
                        Ok(Term::App(w, args))
                    } else {
                        Ok(Term::Sym(w))
                    }
                } else {
                    self.pos -= 1;
                    self.error(format!("`{w}` is not a valid term"))
                }
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.error("expected a term")
            }
        }
    }

    /// Comma-separated terms up to `close` (already past the opener).
    fn sequence(&mut self, close: Tok, what: &str) -> Result<Vec<Term>, ParseError> {
        let mut items = Vec::new();
        if self.peek() == Some(&close) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.term()?);
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(t) if t == close => return Ok(items),
                _ => {
                    self.pos -= 1;
                    return self.error(format!("expected `,` or {what}"));
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let t = self.term()?;
        match Atom::from_term(&t) {
            Some(a) if matches!(t, Term::App(..)) || !is_number(&a.predicate) => Ok(a),
            _ => {
                self.pos = start;
                self.error("expected an atom")
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.unary()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Word(w)) if w == "true" && self.peek_at(1) != Some(&Tok::LParen) => {
                self.pos += 1;
                Ok(Formula::True)
            }
            _ => Ok(Formula::Atom(self.atom()?)),
        }
    }

    fn operation(&mut self) -> Result<ProtocolOperation, ParseError> {
        let precondition = self.formula()?;
        self.expect(Tok::LBrack, "`[` opening the communicative action")?;
        let direction = match self.bump() {
            Some(Tok::Word(w)) if w == "send" => Direction::Send,
            Some(Tok::Word(w)) if w == "receive" => Direction::Receive,
            _ => {
                self.pos -= 1;
                return self.error("expected `send` or `receive`");
            }
        };
        self.expect(Tok::LParen, "`(`")?;
        let loc_at = self.pos;
        let loc = self.term()?;
        let locution = match Locution::from_term(&loc) {
            Some(l) => l,
            None => {
                self.pos = loc_at;
                return self.error("a locution is a performative with at most one content argument");
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let partner_at = self.pos;
        let partner = self.term()?;
        if !matches!(partner, Term::Var(_) | Term::Sym(_)) {
            self.pos = partner_at;
            return self.error("the partner must be a variable or an agent identifier");
        }
        self.expect(Tok::Comma, "`,`")?;
        let role_at = self.pos;
        let role = self.term()?;
        let partner_role = match RoleLabel::from_term(&role) {
            Some(r) => r,
            None => {
                self.pos = role_at;
                return self.error("expected a role label");
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::RBrack, "`]`")?;
        let postcondition = self.formula()?;
        Ok(ProtocolOperation {
            precondition,
            direction,
            locution,
            partner,
            partner_role,
            postcondition,
        })
    }

    fn decimal(&mut self) -> Result<Decimal, ParseError> {
        match self.term()? {
            Term::Num(d) => Ok(d),
            _ => {
                self.pos -= 1;
                self.error("expected a number")
            }
        }
    }

    fn annotation(&mut self) -> Result<ConstraintAnnotation, ParseError> {
        let mut constraints = Vec::new();
        if self.peek().is_none() {
            return Ok(ConstraintAnnotation::empty());
        }
        loop {
            let var = match self.bump() {
                Some(Tok::Word(w)) if w.starts_with(|c: char| c.is_ascii_uppercase()) => w,
                _ => {
                    self.pos -= 1;
                    return self.error("expected a constrained variable");
                }
            };
            match self.bump() {
                Some(Tok::Word(w)) if w == "in" => {}
                _ => {
                    self.pos -= 1;
                    return self.error("expected `in`");
                }
            }
            match self.bump() {
                Some(Tok::LBrack) => {
                    let lower = self.decimal()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let upper = self.decimal()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    constraints.push(AtomicConstraint::Interval { var, lower, upper });
                }
                Some(Tok::LBrace) => {
                    let at = self.pos;
                    let items = self.sequence(Tok::RBrace, "`}`")?;
                    if !items.iter().all(Term::is_constant) {
                        self.pos = at;
                        return self.error("set members must be constants");
                    }
                    constraints.push(AtomicConstraint::Member {
                        var,
                        values: items.into_iter().collect::<BTreeSet<_>>(),
                    });
                }
                _ => {
                    self.pos -= 1;
                    return self.error("expected `[` or `{`");
                }
            }
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                None => return Ok(ConstraintAnnotation::new(constraints)),
                _ => return self.error("expected `,` between constraints"),
            }
        }
    }
}

fn parse_all<T>(s: &str, f: impl FnOnce(&mut Parser) -> Result<T, ParseError>) -> Result<T, ParseError> {
    let mut p = Parser::new(s)?;
    let out = f(&mut p)?;
    p.finish()?;
    Ok(out)
}

impl FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| p.term())
    }
}

impl FromStr for Atom {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| p.atom())
    }
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| p.formula())
    }
}

impl FromStr for ServiceTerm {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| {
            let t = p.term()?;
            match ServiceTerm::from_term(&t) {
                Some(svc) => Ok(svc),
                None => {
                    p.pos = 0;
                    p.error("a service has the form name(In,Out)")
                }
            }
        })
    }
}

impl FromStr for RoleLabel {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| {
            let t = p.term()?;
            match RoleLabel::from_term(&t) {
                Some(r) => Ok(r),
                None => {
                    p.pos = 0;
                    p.error("a role label is a name with at most one parameter")
                }
            }
        })
    }
}

impl FromStr for Locution {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| {
            let t = p.term()?;
            match Locution::from_term(&t) {
                Some(l) => Ok(l),
                None => {
                    p.pos = 0;
                    p.error("a locution is a performative with at most one content argument")
                }
            }
        })
    }
}

impl FromStr for ProtocolOperation {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| p.operation())
    }
}

impl FromStr for ConstraintAnnotation {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_all(s, |p| p.annotation())
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Term]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
            Term::Num(d) => write!(f, "{d}"),
            Term::List(items) => {
                f.write_str("[")?;
                write_list(f, items)?;
                f.write_str("]")
            }
            Term::App(name, items) => {
                write!(f, "{name}(")?;
                write_list(f, items)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::And(..) => write!(f, "~({inner})"),
                _ => write!(f, "~{inner}"),
            },
            Formula::And(l, r) => match r.as_ref() {
                Formula::And(..) => write!(f, "{l} & ({r})"),
                _ => write!(f, "{l} & {r}"),
            },
        }
    }
}

impl fmt::Display for ServiceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.name, self.input, self.output)
    }
}

impl fmt::Display for RoleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl fmt::Display for Locution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl fmt::Display for ProtocolOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}({},{},{})] {}",
            self.precondition,
            self.direction.keyword(),
            self.locution,
            self.partner,
            self.partner_role,
            self.postcondition
        )
    }
}

impl fmt::Display for AtomicConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicConstraint::Interval { var, lower, upper } => write!(f, "{var} in [{lower},{upper}]"),
            AtomicConstraint::Member { var, values } => {
                write!(f, "{var} in {{")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Display for ConstraintAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.constraints().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Serialises a type as its canonical text.
macro_rules! serde_via_str {
    ($($ty:ty),* $(,)?) => {
        $(
            impl serde::Serialize for $ty {
                fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                    serializer.collect_str(self)
                }
            }

            impl<'de> serde::Deserialize<'de> for $ty {
                fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                    let raw = String::deserialize(deserializer)?;
                    raw.parse().map_err(serde::de::Error::custom)
                }
            }
        )*
    };
}

serde_via_str!(
    Term,
    Atom,
    Formula,
    ServiceTerm,
    RoleLabel,
    Locution,
    ProtocolOperation,
    ConstraintAnnotation,
);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn numbers_and_symbols() {
        assert_eq!("-9.4".parse::<Term>().unwrap(), Term::Num(Decimal::new(-94, 1)));
        assert_eq!("1400hrs".parse::<Term>().unwrap(), Term::sym("1400hrs"));
        assert_eq!("12.4.09".parse::<Term>().unwrap(), Term::sym("12.4.09"));
        assert_eq!("results.data".parse::<Term>().unwrap(), Term::sym("results.data"));
        assert_eq!("007".parse::<Term>().unwrap(), Term::sym("007"));
        assert!("_".parse::<Term>().unwrap().is_anonymous());
        assert!("f()".parse::<Term>().is_err());
        assert!("X(a)".parse::<Term>().is_err());
        assert!("[a,".parse::<Term>().is_err());
        assert!("a b".parse::<Term>().is_err());
    }

    #[test]
    fn goal_text_round_trips() {
        let src = "toBuy(satImage([38.0,-9.4,_,500,_,radar,_],_))";
        let a: Atom = src.parse().unwrap();
        assert_eq!(a.to_string(), src);
    }

    #[test]
    fn formula_structure() {
        let f: Formula = "toBuy(S) & provides(Ag,S)".parse().unwrap();
        assert!(matches!(f, Formula::And(..)));
        let g: Formula = "a & (b & c)".parse().unwrap();
        assert_eq!(g.to_string(), "a & (b & c)");
        let h: Formula = "(a & b) & c".parse().unwrap();
        assert_eq!(h.to_string(), "a & b & c");
        let n: Formula = "~(a & b) & ~c".parse().unwrap();
        assert_eq!(n.to_string(), "~(a & b) & ~c");
        assert_eq!("true".parse::<Formula>().unwrap(), Formula::True);
        assert!("X".parse::<Formula>().is_err());
        assert!("3".parse::<Formula>().is_err());
    }

    #[test]
    fn operations() {
        let src = "requestedBy(Ag,S) & ~toSell(S) [send(refuse,Ag,requester(S))] true";
        let op: ProtocolOperation = src.parse().unwrap();
        assert_eq!(op.direction, Direction::Send);
        assert_eq!(op.locution.performative, "refuse");
        assert_eq!(op.to_string(), src);
        assert!("true [send(m(a,b),Ag,r)] true".parse::<ProtocolOperation>().is_err());
        assert!("true [send(m,[a],r)] true".parse::<ProtocolOperation>().is_err());
    }

    #[test]
    fn annotations() {
        let a: ConstraintAnnotation = "Res in [900,1100], ST in {radar,optical}".parse().unwrap();
        assert_eq!(a.constraints().len(), 2);
        assert_eq!(a.to_string(), "Res in [900,1100], ST in {optical,radar}");
        assert!("".parse::<ConstraintAnnotation>().unwrap().is_empty());
        assert!("res in [1,2]".parse::<ConstraintAnnotation>().is_err());
        assert!("X in {Y}".parse::<ConstraintAnnotation>().is_err());
        assert!("X in [a,2]".parse::<ConstraintAnnotation>().is_err());
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            "[a-z][a-zA-Z0-9_.]{0,5}".prop_map(Term::Sym),
            "[A-Z][a-zA-Z0-9_]{0,4}".prop_map(Term::Var),
            Just(Term::anonymous()),
            (any::<i32>(), 0u32..4).prop_map(|(m, s)| Term::Num(Decimal::new(m as i64, s))),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Term::List),
                ("[a-z][a-zA-Z]{0,4}", prop::collection::vec(inner, 1..4)).prop_map(|(f, args)| Term::App(f, args)),
            ]
        })
    }

    proptest! {
        #[test]
        fn terms_round_trip(t in arb_term()) {
            let text = t.to_string();
            let back: Term = text.parse().unwrap();
            prop_assert_eq!(back.to_string(), text);
            prop_assert_eq!(back, t);
        }
    }
}
