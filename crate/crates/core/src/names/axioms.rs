//! Instances of the axioms of rudimentary set theory, forced at every object of a universe.
//!
//! Everything here is relative to the rank of the universe. Pairing and strong collection are
//! guarded by membership in the name of all lower-rank names, so that the sets they ask for
//! fit in the carrier. Set induction is checked as acyclicity of forced membership. Infinity
//! cannot hold at finite rank and is reported as such.

use petgraph::algo::is_cyclic_directed;
use serde::Serialize;

use super::force::{compile, Evaluator};
use super::formula::{parse_formula, Formula};
use super::Universe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    Forced,
    Failed,
    #[serde(rename = "not checkable")]
    NotCheckable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomFailure {
    pub object: String,
    pub instance: String,
    pub counterwitness: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub status: AxiomStatus,
    pub instances: usize,
    pub failures: Vec<AxiomFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub rank: usize,
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn passes(&self) -> bool {
        self.results.iter().all(|r| r.status != AxiomStatus::Failed)
    }

    pub fn get(&self, axiom: &str) -> Option<&AxiomResult> {
        self.results.iter().find(|r| r.axiom == axiom)
    }
}

/// Formulas in `x` and a parameter `p` used for bounded separation.
pub fn separation_pool() -> Vec<Formula> {
    [
        "(mem x p)",
        "(eq x p)",
        "(not (mem x p))",
        "(mem p x)",
        "(forall-in y x (mem y p))",
        "(exists-in y x true)",
        "(or (mem x p) (eq x p))",
        "(not (eq x p))",
    ]
    .iter()
    .map(|s| parse_formula(s).expect("pool formula"))
    .collect()
}

/// Relations `φ(x, y)` used for strong collection.
pub fn collection_pool() -> Vec<Formula> {
    ["(eq y x)", "(mem y x)", "(mem x y)", "(forall-in z y (mem z x))", "(forall-in z y false)"]
        .iter()
        .map(|s| parse_formula(s).expect("pool formula"))
        .collect()
}

struct Schema {
    axiom: &'static str,
    formula: Formula,
    /// parameter names; `lower` is bound to the name of all lower-rank names
    params: Vec<&'static str>,
}

fn schemas() -> Vec<Schema> {
    let p = |s: &str| parse_formula(s).expect("schema");
    let mut out = vec![
        Schema {
            axiom: "extensionality",
            formula: p("(implies (forall x (iff (mem x a) (mem x b))) (eq a b))"),
            params: vec!["a", "b"],
        },
        Schema { axiom: "empty_set", formula: p("(exists e (forall x (not (mem x e))))"), params: vec![] },
        Schema {
            axiom: "pairing",
            formula: p("(implies (and (mem a lower) (mem b lower)) (exists q (forall x (iff (mem x q) (or (eq x a) (eq x b))))))"),
            params: vec!["a", "b", "lower"],
        },
        Schema {
            axiom: "union",
            formula: p("(exists w (forall x (iff (mem x w) (exists-in y a (mem x y)))))"),
            params: vec!["a"],
        },
    ];
    for phi in separation_pool() {
        let s = Formula::ex(
            "s",
            Formula::all("x", Formula::iff(Formula::mem("x", "s"), Formula::And(vec![Formula::mem("x", "a"), phi]))),
        );
        out.push(Schema { axiom: "bounded_separation", formula: s, params: vec!["a", "p"] });
    }
    for phi in collection_pool() {
        let a = super::formula::Term::var("a");
        let b = super::formula::Term::var("b");
        let lower = super::formula::Term::var("lower");
        let premise = Formula::all_in("x", a.clone(), Formula::ex_in("y", lower, phi.clone()));
        let conclusion = Formula::ex(
            "b",
            Formula::And(vec![
                Formula::all_in("x", a.clone(), Formula::ex_in("y", b.clone(), phi.clone())),
                Formula::all_in("y", b, Formula::ex_in("x", a, phi)),
            ]),
        );
        out.push(Schema {
            axiom: "strong_collection",
            formula: Formula::implies(premise, conclusion),
            params: vec!["a", "lower"],
        });
    }
    out
}

fn assignments(u: &Universe, c: usize, params: &[&str]) -> Vec<Vec<usize>> {
    let lower = u.lower_universe(c);
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &p in params {
        let choices: Vec<usize> = if p == "lower" { lower.into_iter().collect() } else { (0..u.size(c)).collect() };
        out = out.iter().flat_map(|prefix| choices.iter().map(move |&v| [prefix.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Checks every schema instance at every object.
pub fn check_rst_axioms(u: &Universe) -> AxiomReport {
    let cat = u.category().clone();
    let mut results: Vec<AxiomResult> = Vec::new();
    let mut record = |axiom: &str, instances: usize, failures: Vec<AxiomFailure>| {
        if let Some(r) = results.iter_mut().find(|r| r.axiom == axiom) {
            r.instances += instances;
            r.failures.extend(failures);
            if !r.failures.is_empty() {
                r.status = AxiomStatus::Failed;
            }
        } else {
            let status = if failures.is_empty() { AxiomStatus::Forced } else { AxiomStatus::Failed };
            results.push(AxiomResult { axiom: axiom.to_string(), status, instances, failures });
        }
    };
    for schema in schemas() {
        let per_object: Vec<(usize, Vec<AxiomFailure>)> = crate::exec::map_range(cat.num_objects(), |c| {
            let compiled = compile(u, c, &schema.formula, &schema.params).expect("schema compiles");
            let mut ev = Evaluator::new(u, &compiled);
            let mut failures = Vec::new();
            let cases = assignments(u, c, &schema.params);
            for values in &cases {
                if !ev.holds(values) {
                    let witness: Vec<String> = schema
                        .params
                        .iter()
                        .zip(values)
                        .map(|(p, &v)| format!("{p} = #{}", u.global_index(c, v)))
                        .collect();
                    failures.push(AxiomFailure {
                        object: cat.object_name(c).to_string(),
                        instance: schema.formula.to_string(),
                        counterwitness: witness.join(", "),
                    });
                }
            }
            (cases.len(), failures)
        });
        for (n, failures) in per_object {
            record(schema.axiom, n, failures);
        }
    }
    let mut failures = Vec::new();
    for c in cat.objects() {
        if is_cyclic_directed(&u.membership_graph(c)) {
            failures.push(AxiomFailure {
                object: cat.object_name(c).to_string(),
                instance: "forced membership is well founded".into(),
                counterwitness: "membership digraph has a cycle".into(),
            });
        }
    }
    record("set_induction", cat.num_objects(), failures);
    results.push(AxiomResult {
        axiom: "infinity".into(),
        status: AxiomStatus::NotCheckable,
        instances: 0,
        failures: Vec::new(),
    });
    AxiomReport { rank: u.rank, results }
}
