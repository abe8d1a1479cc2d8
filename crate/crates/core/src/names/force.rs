//! Kripke–Joyal forcing over a universe of names.
//!
//! Formulas are compiled against an evaluation object `c`; literals are names at `c` and are
//! carried along the arrow from the current stage back to `c`. Quantifiers range over the
//! carrier of the universe.

use std::collections::HashMap;

use super::formula::{Formula, Term};
use super::{NamesError, Universe};
use crate::arrows::ArrowSet;
use crate::category::{Arr, Obj};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum T {
    Var(usize),
    Lit(usize),
}

#[derive(Debug, Clone)]
enum Node {
    True,
    False,
    Eq(T, T),
    Mem(T, T),
    And(Vec<usize>),
    Or(Vec<usize>),
    Implies(usize, usize),
    Not(usize),
    All(usize),
    Ex(usize),
    AllIn(T, usize),
    ExIn(T, usize),
}

/// A formula compiled for evaluation at a fixed object.
#[derive(Debug, Clone)]
pub struct Compiled {
    root: Obj,
    nodes: Vec<Node>,
    top: usize,
    params: usize,
}

/// Resolves a closed term to `(root, class)`.
pub fn resolve_term(u: &Universe, term: &Term) -> Result<(Obj, usize), NamesError> {
    let cat = u.category();
    match term {
        Term::Var(x) => Err(NamesError::OpenFormula { var: x.clone() }),
        Term::Index(n) => {
            u.listing().get(*n).copied().ok_or_else(|| NamesError::UnknownLiteral { literal: term.to_string() })
        }
        Term::Sup { object, entries } => {
            let c =
                cat.object_by_name(object).ok_or_else(|| NamesError::UnknownLiteral { literal: term.to_string() })?;
            let below = match u.rank.checked_sub(1) {
                Some(r) => u.level_sizes[r].clone(),
                None => return Err(NamesError::RankExceeded { literal: term.to_string(), rank: u.rank }),
            };
            let mut table = Vec::new();
            for (arrow, members) in entries {
                let f = cat
                    .arrow_by_name(arrow)
                    .filter(|&f| cat.cod(f) == c)
                    .ok_or_else(|| NamesError::UnknownLiteral { literal: format!("{arrow} in {term}") })?;
                let d = cat.dom(f);
                for m in members {
                    let (root, k) = resolve_term(u, m)?;
                    if root != d {
                        return Err(NamesError::LiteralRoot {
                            literal: m.to_string(),
                            expected: cat.object_name(d).to_string(),
                            found: cat.object_name(root).to_string(),
                        });
                    }
                    if k >= below[d] {
                        return Err(NamesError::RankExceeded { literal: term.to_string(), rank: u.rank });
                    }
                    for &g in cat.arrows_into(d) {
                        table.push((cat.compose(f, g), u.restrict(k, g)));
                    }
                }
            }
            let k = u
                .class_of_table(c, &table)
                .ok_or_else(|| NamesError::RankExceeded { literal: term.to_string(), rank: u.rank })?;
            Ok((c, k))
        }
    }
}

/// Roots of the literals in a formula, in order of first occurrence.
pub fn literal_roots(u: &Universe, phi: &Formula) -> Result<Vec<Obj>, NamesError> {
    fn walk(u: &Universe, phi: &Formula, out: &mut Vec<Obj>) -> Result<(), NamesError> {
        let term = |t: &Term, out: &mut Vec<Obj>| -> Result<(), NamesError> {
            if !matches!(t, Term::Var(_)) {
                let (c, _) = resolve_term(u, t)?;
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            Ok(())
        };
        match phi {
            Formula::True | Formula::False => Ok(()),
            Formula::Eq(a, b) | Formula::Mem(a, b) => {
                term(a, out)?;
                term(b, out)
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|f| walk(u, f, out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                walk(u, a, out)?;
                walk(u, b, out)
            }
            Formula::Not(a) | Formula::All(_, a) | Formula::Ex(_, a) => walk(u, a, out),
            Formula::AllIn(_, t, a) | Formula::ExIn(_, t, a) => {
                term(t, out)?;
                walk(u, a, out)
            }
        }
    }
    let mut out = Vec::new();
    walk(u, phi, &mut out)?;
    Ok(out)
}

struct Compiler<'a> {
    u: &'a Universe,
    root: Obj,
    nodes: Vec<Node>,
    scope: Vec<String>,
}

impl Compiler<'_> {
    fn term(&self, t: &Term) -> Result<T, NamesError> {
        match t {
            Term::Var(x) => self
                .scope
                .iter()
                .rposition(|y| y == x)
                .map(T::Var)
                .ok_or_else(|| NamesError::OpenFormula { var: x.clone() }),
            _ => {
                let (c, k) = resolve_term(self.u, t)?;
                if c != self.root {
                    let cat = self.u.category();
                    return Err(NamesError::LiteralRoot {
                        literal: t.to_string(),
                        expected: cat.object_name(self.root).to_string(),
                        found: cat.object_name(c).to_string(),
                    });
                }
                Ok(T::Lit(k))
            }
        }
    }

    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn bind(&mut self, x: &str, body: &Formula) -> Result<usize, NamesError> {
        self.scope.push(x.to_string());
        let b = self.compile(body);
        self.scope.pop();
        b
    }

    fn compile(&mut self, phi: &Formula) -> Result<usize, NamesError> {
        let node = match phi {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Eq(a, b) => Node::Eq(self.term(a)?, self.term(b)?),
            Formula::Mem(a, b) => Node::Mem(self.term(a)?, self.term(b)?),
            Formula::And(fs) => Node::And(fs.iter().map(|f| self.compile(f)).collect::<Result<_, _>>()?),
            Formula::Or(fs) => Node::Or(fs.iter().map(|f| self.compile(f)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => Node::Implies(self.compile(a)?, self.compile(b)?),
            Formula::Iff(a, b) => {
                let (x, y) = (self.compile(a)?, self.compile(b)?);
                let l = self.push(Node::Implies(x, y));
                let r = self.push(Node::Implies(y, x));
                Node::And(vec![l, r])
            }
            Formula::Not(a) => Node::Not(self.compile(a)?),
            Formula::All(x, body) => Node::All(self.bind(x, body)?),
            Formula::Ex(x, body) => Node::Ex(self.bind(x, body)?),
            Formula::AllIn(x, t, body) => {
                let t = self.term(t)?;
                Node::AllIn(t, self.bind(x, body)?)
            }
            Formula::ExIn(x, t, body) => {
                let t = self.term(t)?;
                Node::ExIn(t, self.bind(x, body)?)
            }
        };
        Ok(self.push(node))
    }
}

/// Compiles `phi` at `c`; `params` name the free variables, bound to names at `c` on evaluation.
pub fn compile(u: &Universe, c: Obj, phi: &Formula, params: &[&str]) -> Result<Compiled, NamesError> {
    let mut comp = Compiler { u, root: c, nodes: Vec::new(), scope: params.iter().map(|s| s.to_string()).collect() };
    let top = comp.compile(phi)?;
    Ok(Compiled { root: c, nodes: comp.nodes, top, params: params.len() })
}

/// Memoizing evaluator for one compiled formula.
pub struct Evaluator<'a> {
    u: &'a Universe,
    phi: &'a Compiled,
    memo: HashMap<(usize, Arr, Vec<usize>), bool>,
}

impl<'a> Evaluator<'a> {
    pub fn new(u: &'a Universe, phi: &'a Compiled) -> Evaluator<'a> {
        Evaluator { u, phi, memo: HashMap::new() }
    }

    /// `dom h ⊩ φ·h` with the parameters given at `dom h`, for `h` into the root.
    pub fn holds_at(&mut self, h: Arr, params: &[usize]) -> bool {
        assert_eq!(params.len(), self.phi.params, "parameter count");
        assert_eq!(self.u.category().cod(h), self.phi.root, "stage must map to the root");
        self.eval(self.phi.top, h, params)
    }

    pub fn holds(&mut self, params: &[usize]) -> bool {
        self.holds_at(self.u.category().id(self.phi.root), params)
    }

    fn value(&self, t: T, h: Arr, env: &[usize]) -> usize {
        match t {
            T::Var(i) => env[i],
            T::Lit(k) => self.u.restrict(k, h),
        }
    }

    fn stages(&self, h: Arr) -> Vec<Arr> {
        let cat = self.u.category();
        cat.arrows_into(cat.dom(h)).to_vec()
    }

    fn restrict_env(&self, env: &[usize], g: Arr) -> Vec<usize> {
        env.iter().map(|&v| self.u.restrict(v, g)).collect()
    }

    /// `{g : P(g)}` covers the current stage.
    fn covering(&mut self, h: Arr, mut p: impl FnMut(&mut Self, Arr) -> bool) -> bool {
        let d = self.u.category().dom(h);
        let mut s = ArrowSet::empty();
        for g in self.stages(h) {
            if p(self, g) {
                s.insert(g);
            }
        }
        self.u.topology.covers(d, s)
    }

    fn eval(&mut self, node: usize, h: Arr, env: &[usize]) -> bool {
        let key = (node, h, env.to_vec());
        if let Some(&r) = self.memo.get(&key) {
            return r;
        }
        let cat = self.u.category().clone();
        let d = cat.dom(h);
        let r = match self.phi.nodes[node].clone() {
            Node::True => true,
            Node::False => self.u.topology.covers(d, ArrowSet::empty()),
            Node::Eq(a, b) => self.u.eq(d, self.value(a, h, env), self.value(b, h, env)),
            Node::Mem(a, b) => self.u.mem(d, self.value(a, h, env), self.value(b, h, env)),
            Node::And(fs) => fs.iter().all(|&f| self.eval(f, h, env)),
            Node::Or(fs) => self.covering(h, |ev, g| {
                let e = ev.restrict_env(env, g);
                fs.iter().any(|&f| ev.eval(f, cat.compose(h, g), &e))
            }),
            Node::Implies(a, b) => self.stages(h).into_iter().all(|g| {
                let e = self.restrict_env(env, g);
                let hg = cat.compose(h, g);
                !self.eval(a, hg, &e) || self.eval(b, hg, &e)
            }),
            Node::Not(a) => self.stages(h).into_iter().all(|g| {
                let e = self.restrict_env(env, g);
                !self.eval(a, cat.compose(h, g), &e) || self.u.topology.covers(cat.dom(g), ArrowSet::empty())
            }),
            Node::All(body) => self.stages(h).into_iter().all(|g| {
                let mut e = self.restrict_env(env, g);
                let hg = cat.compose(h, g);
                (0..self.u.size(cat.dom(g))).all(|v| {
                    e.push(v);
                    let r = self.eval(body, hg, &e);
                    e.pop();
                    r
                })
            }),
            Node::Ex(body) => self.covering(h, |ev, g| {
                let mut e = ev.restrict_env(env, g);
                let hg = cat.compose(h, g);
                (0..ev.u.size(cat.dom(g))).any(|v| {
                    e.push(v);
                    let r = ev.eval(body, hg, &e);
                    e.pop();
                    r
                })
            }),
            Node::AllIn(t, body) => self.stages(h).into_iter().all(|g| {
                let mut e = self.restrict_env(env, g);
                let hg = cat.compose(h, g);
                let bound = self.value(t, hg, &e);
                self.u.members(cat.dom(g), bound).into_iter().all(|v| {
                    e.push(v);
                    let r = self.eval(body, hg, &e);
                    e.pop();
                    r
                })
            }),
            Node::ExIn(t, body) => self.covering(h, |ev, g| {
                let mut e = ev.restrict_env(env, g);
                let hg = cat.compose(h, g);
                let bound = ev.value(t, hg, &e);
                ev.u.members(cat.dom(g), bound).into_iter().any(|v| {
                    e.push(v);
                    let r = ev.eval(body, hg, &e);
                    e.pop();
                    r
                })
            }),
        };
        self.memo.insert(key, r);
        r
    }
}

/// `c ⊩ φ` for a closed formula.
pub fn force(u: &Universe, c: Obj, phi: &Formula) -> Result<bool, NamesError> {
    force_with(u, c, phi, &[])
}

/// `c ⊩ φ[params]` with the free variables of `φ` bound to names at `c`.
pub fn force_with(u: &Universe, c: Obj, phi: &Formula, params: &[(&str, usize)]) -> Result<bool, NamesError> {
    let names: Vec<&str> = params.iter().map(|&(x, _)| x).collect();
    let compiled = compile(u, c, phi, &names)?;
    let values: Vec<usize> = params.iter().map(|&(_, v)| v).collect();
    Ok(Evaluator::new(u, &compiled).holds(&values))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{build_universe, parse_formula, Name};
    use super::*;

    const LEM: &str = "(or (mem (sup 1) (sup 1 (0<=1 (sup 0)))) (not (mem (sup 1) (sup 1 (0<=1 (sup 0))))))";

    #[test]
    fn constants() {
        let u = build_universe(&point(), 2);
        assert!(force(&u, 0, &Formula::True).unwrap());
        assert!(!force(&u, 0, &Formula::False).unwrap());
        use crate::coverage::{generate_topology, maximal, Presentation};
        let cat = chain2();
        let p = Presentation { bcov: vec![vec![ArrowSet::empty()], vec![maximal(&cat, 1)]] };
        let u = build_universe(&generate_topology(cat, p).unwrap(), 2);
        assert!(force(&u, 0, &Formula::False).unwrap());
        assert!(!force(&u, 1, &Formula::False).unwrap());
    }

    #[test]
    fn excluded_middle_separates_the_topologies() {
        let phi = parse_formula(LEM).unwrap();
        assert!(!force(&build_universe(&chain2_trivial(), 3), 1, &phi).unwrap());
        assert!(force(&build_universe(&chain2_dense(), 3), 1, &phi).unwrap());
        // at the bottom stage both agree
        let at0 = parse_formula("(or (mem (sup 0) (sup 0)) (not (mem (sup 0) (sup 0))))").unwrap();
        assert!(force(&build_universe(&chain2_trivial(), 3), 0, &at0).unwrap());
    }

    #[test]
    fn extensionality_matches_the_oracle() {
        let u = build_universe(&point(), 3);
        let ext = parse_formula("(implies (forall x (iff (mem x a) (mem x b))) (eq a b))").unwrap();
        let same = parse_formula("(forall x (iff (mem x a) (mem x b)))").unwrap();
        for a in 0..u.size(0) {
            for b in 0..u.size(0) {
                assert!(force_with(&u, 0, &ext, &[("a", a), ("b", b)]).unwrap());
                assert_eq!(force_with(&u, 0, &same, &[("a", a), ("b", b)]).unwrap(), a == b);
            }
        }
    }

    #[test]
    fn forced_equality_is_bisimilarity() {
        for t in [chain2_trivial(), chain2_dense()] {
            let u = build_universe(&t, 3);
            let phi = Formula::eq("a", "b");
            for c in 0..2 {
                for a in 0..u.size(c) {
                    for b in 0..u.size(c) {
                        let forced = force_with(&u, c, &phi, &[("a", a), ("b", b)]).unwrap();
                        let bisim = super::super::names_equiv(&t, &u.name(c, a), &u.name(c, b)).unwrap();
                        assert_eq!(forced, bisim);
                    }
                }
            }
        }
    }

    #[test]
    fn pairing_witness() {
        let u = build_universe(&point(), 3);
        let empty = u.classify(&Name::empty(0)).unwrap();
        let single = u.classify(&Name::new(0, [(0, vec![Name::empty(0)])])).unwrap();
        let pair =
            u.classify(&Name::new(0, [(0, vec![Name::empty(0), Name::new(0, [(0, vec![Name::empty(0)])])])])).unwrap();
        let members = u.members(0, pair);
        assert_eq!(members, {
            let mut m = vec![empty, single];
            m.sort();
            m
        });
    }

    #[test]
    fn literal_errors() {
        let u = build_universe(&chain2_dense(), 2);
        assert!(matches!(force(&u, 0, &parse_formula("(mem x #0)").unwrap()), Err(NamesError::OpenFormula { .. })));
        assert!(matches!(
            force(&u, 0, &parse_formula("(mem #0 #99)").unwrap()),
            Err(NamesError::UnknownLiteral { .. })
        ));
        let last = u.listing().len() - 1;
        let phi = parse_formula(&format!("(mem #0 #{last})")).unwrap();
        assert!(matches!(force(&u, 0, &phi), Err(NamesError::LiteralRoot { .. })));
        assert_eq!(literal_roots(&u, &phi).unwrap(), vec![0, 1]);
        let deep = parse_formula("(mem (sup 0) (sup 0 (id_0 (sup 0 (id_0 (sup 0))))))").unwrap();
        assert!(matches!(force(&u, 0, &deep), Err(NamesError::RankExceeded { .. })));
    }
}
