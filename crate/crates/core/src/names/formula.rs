//! Formulas over names and their parenthesized prefix syntax.
//!
//! ```text
//! (forall x (implies (mem x #2) (exists-in y #3 (eq x y))))
//! (mem (sup 0) (sup 1 (0<=1 (sup 0))))
//! ```

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// `#n`, an index into the universe listing
    Index(usize),
    /// `(sup c (f t…)…)`, a name written out; members are closed under restriction on
    /// resolution
    Sup {
        object: String,
        entries: Vec<(String, Vec<Term>)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Mem(Term, Term),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    All(String, Box<Formula>),
    Ex(String, Box<Formula>),
    AllIn(String, Term, Box<Formula>),
    ExIn(String, Term, Box<Formula>),
}

impl Formula {
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn all(x: &str, body: Formula) -> Formula {
        Formula::All(x.to_string(), Box::new(body))
    }

    pub fn ex(x: &str, body: Formula) -> Formula {
        Formula::Ex(x.to_string(), Box::new(body))
    }

    pub fn all_in(x: &str, t: Term, body: Formula) -> Formula {
        Formula::AllIn(x.to_string(), t, Box::new(body))
    }

    pub fn ex_in(x: &str, t: Term, body: Formula) -> Formula {
        Formula::ExIn(x.to_string(), t, Box::new(body))
    }

    pub fn mem(a: &str, b: &str) -> Formula {
        Formula::Mem(Term::var(a), Term::var(b))
    }

    pub fn eq(a: &str, b: &str) -> Formula {
        Formula::Eq(Term::var(a), Term::var(b))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| t.collect_free(bound, out);
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) | Formula::Mem(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::All(x, body) | Formula::Ex(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Formula::AllIn(x, t, body) | Formula::ExIn(x, t, body) => {
                term(t, bound, out);
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Eq(..) | Formula::Mem(..) => 1,
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => 1 + a.size() + b.size(),
            Formula::Not(a)
            | Formula::All(_, a)
            | Formula::Ex(_, a)
            | Formula::AllIn(_, _, a)
            | Formula::ExIn(_, _, a) => 1 + a.size(),
        }
    }
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    fn collect_free(&self, bound: &[String], out: &mut Vec<String>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Term::Index(_) => {}
            Term::Sup { entries, .. } => entries.iter().flat_map(|(_, ts)| ts).for_each(|t| t.collect_free(bound, out)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::Index(n) => write!(f, "#{n}"),
            Term::Sup { object, entries } => {
                write!(f, "(sup {object}")?;
                for (arrow, members) in entries {
                    write!(f, " ({arrow}")?;
                    for m in members {
                        write!(f, " {m}")?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, fs: &[Formula]| {
            write!(f, "({head}")?;
            for g in fs {
                write!(f, " {g}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Eq(a, b) => write!(f, "(eq {a} {b})"),
            Formula::Mem(a, b) => write!(f, "(mem {a} {b})"),
            Formula::And(fs) => list(f, "and", fs),
            Formula::Or(fs) => list(f, "or", fs),
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Iff(a, b) => write!(f, "(iff {a} {b})"),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::All(x, a) => write!(f, "(forall {x} {a})"),
            Formula::Ex(x, a) => write!(f, "(exists {x} {a})"),
            Formula::AllIn(x, t, a) => write!(f, "(forall-in {x} {t} {a})"),
            Formula::ExIn(x, t, a) => write!(f, "(exists-in {x} {t} {a})"),
        }
    }
}

#[derive(Debug, Clone)]
enum Sx {
    Atom(String, usize, usize),
    List(Vec<Sx>, usize, usize),
}

impl Sx {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sx::Atom(_, l, c) | Sx::List(_, l, c) => (*l, *c),
        }
    }
}

fn error_at(sx: &Sx, message: impl Into<String>) -> ParseError {
    let (line, column) = sx.pos();
    ParseError { line, column, message: message.into() }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sx, ParseError> {
        self.skip_blank();
        let (line, column) = (self.line, self.column);
        match self.chars.peek() {
            None => Err(ParseError { line, column, message: "unexpected end of input".into() }),
            Some(')') => Err(ParseError { line, column, message: "unexpected ')'".into() }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(ParseError { line, column, message: "unclosed '('".into() }),
                        Some(')') => {
                            self.bump();
                            return Ok(Sx::List(items, line, column));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Sx::Atom(s, line, column))
            }
        }
    }
}

const KEYWORDS: &[&str] = &[
    "true",
    "false",
    "eq",
    "mem",
    "and",
    "or",
    "implies",
    "iff",
    "not",
    "forall",
    "all",
    "exists",
    "ex",
    "forall-in",
    "allIn",
    "exists-in",
    "exIn",
    "sup",
];

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut reader = Reader { chars: text.chars().peekable(), line: 1, column: 1 };
    let sx = reader.read()?;
    reader.skip_blank();
    if reader.chars.peek().is_some() {
        return Err(ParseError { line: reader.line, column: reader.column, message: "trailing input".into() });
    }
    formula(&sx)
}

fn variable(sx: &Sx) -> Result<String, ParseError> {
    match sx {
        Sx::Atom(s, ..) if !s.starts_with('#') && !KEYWORDS.contains(&s.as_str()) => Ok(s.clone()),
        _ => Err(error_at(sx, "expected a variable")),
    }
}

fn term(sx: &Sx) -> Result<Term, ParseError> {
    match sx {
        Sx::Atom(s, ..) if s.starts_with('#') => {
            s[1..].parse().map(Term::Index).map_err(|_| error_at(sx, format!("bad literal {s}")))
        }
        Sx::Atom(..) => variable(sx).map(Term::Var),
        Sx::List(items, ..) => match items.first() {
            Some(Sx::Atom(head, ..)) if head == "sup" => {
                let object = match items.get(1) {
                    Some(Sx::Atom(o, ..)) => o.clone(),
                    _ => return Err(error_at(sx, "sup needs an object")),
                };
                let entries = items[2..]
                    .iter()
                    .map(|e| match e {
                        Sx::List(parts, ..) => match parts.first() {
                            Some(Sx::Atom(arrow, ..)) => {
                                Ok((arrow.clone(), parts[1..].iter().map(term).collect::<Result<Vec<_>, _>>()?))
                            }
                            _ => Err(error_at(e, "expected (arrow term...)")),
                        },
                        _ => Err(error_at(e, "expected (arrow term...)")),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Term::Sup { object, entries })
            }
            _ => Err(error_at(sx, "expected a term")),
        },
    }
}

fn formula(sx: &Sx) -> Result<Formula, ParseError> {
    let (items, head) = match sx {
        Sx::Atom(s, ..) if s == "true" => return Ok(Formula::True),
        Sx::Atom(s, ..) if s == "false" => return Ok(Formula::False),
        Sx::Atom(s, ..) => return Err(error_at(sx, format!("expected a formula, found {s}"))),
        Sx::List(items, ..) => match items.first() {
            Some(Sx::Atom(h, ..)) => (items, h.as_str()),
            _ => return Err(error_at(sx, "expected a connective")),
        },
    };
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(error_at(sx, format!("{head} takes {n} arguments, found {}", args.len())))
        }
    };
    let boxed = |s: &Sx| formula(s).map(Box::new);
    Ok(match head {
        "eq" | "mem" => {
            arity(2)?;
            let (a, b) = (term(&args[0])?, term(&args[1])?);
            if head == "eq" {
                Formula::Eq(a, b)
            } else {
                Formula::Mem(a, b)
            }
        }
        "and" => Formula::And(args.iter().map(formula).collect::<Result<_, _>>()?),
        "or" => Formula::Or(args.iter().map(formula).collect::<Result<_, _>>()?),
        "implies" => {
            arity(2)?;
            Formula::Implies(boxed(&args[0])?, boxed(&args[1])?)
        }
        "iff" => {
            arity(2)?;
            Formula::Iff(boxed(&args[0])?, boxed(&args[1])?)
        }
        "not" => {
            arity(1)?;
            Formula::Not(boxed(&args[0])?)
        }
        "forall" | "all" => {
            arity(2)?;
            Formula::All(variable(&args[0])?, boxed(&args[1])?)
        }
        "exists" | "ex" => {
            arity(2)?;
            Formula::Ex(variable(&args[0])?, boxed(&args[1])?)
        }
        "forall-in" | "allIn" => {
            arity(3)?;
            Formula::AllIn(variable(&args[0])?, term(&args[1])?, boxed(&args[2])?)
        }
        "exists-in" | "exIn" => {
            arity(3)?;
            Formula::ExIn(variable(&args[0])?, term(&args[1])?, boxed(&args[2])?)
        }
        other => return Err(error_at(&items[0], format!("unknown connective {other}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_the_surface_syntax() {
        let f = parse_formula("(forall x (implies (mem x a) (mem x b)))").unwrap();
        assert_eq!(f, Formula::all("x", Formula::implies(Formula::mem("x", "a"), Formula::mem("x", "b"))));
        assert_eq!(f.free_vars(), vec!["a".to_string(), "b".to_string()]);
        let g = parse_formula("; lem\n(or (mem (sup 0) (sup 1 (0<=1 (sup 0)))) (not (mem #0 #3)))").unwrap();
        assert!(g.free_vars().is_empty());
        assert_eq!(parse_formula(&g.to_string()).unwrap(), g);
        assert_eq!(
            parse_formula("(allIn y #1 (exIn z y true))").unwrap().to_string(),
            "(forall-in y #1 (exists-in z y true))"
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("(and true\n  (mem x))").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = parse_formula("(or true").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        assert!(parse_formula("(frobnicate)").is_err());
        assert!(parse_formula("(forall #1 true)").is_err());
        assert!(parse_formula("true false").is_err());
        assert!(parse_formula(")").is_err());
        assert!(parse_formula("(mem #x y)").is_err());
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![prop::sample::select(vec!["x", "y", "a"]).prop_map(Term::var), (0usize..20).prop_map(Term::Index)]
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            (arb_term(), arb_term()).prop_map(|(a, b)| Formula::Eq(a, b)),
            (arb_term(), arb_term()).prop_map(|(a, b)| Formula::Mem(a, b)),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
                inner.clone().prop_map(Formula::not),
                inner.clone().prop_map(|a| Formula::all("x", a)),
                inner.clone().prop_map(|a| Formula::ex("y", a)),
                (arb_term(), inner).prop_map(|(t, a)| Formula::all_in("x", t, a)),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(f in arb_formula()) {
            prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        }
    }
}
