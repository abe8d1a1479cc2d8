//! Sieves and Grothendieck topologies on a finite category.
//!
//! Topologies are stored extensionally: every covering sieve of every object is listed.
//! A presentation, when one was used, is kept alongside.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::arrows::{closed_subsets, principal_closures, ArrowSet};
use crate::category::{Arr, FiniteCategory, Obj};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sieve {
    pub at: Obj,
    pub arrows: ArrowSet,
}

impl Sieve {
    /// Checks that every arrow has codomain `at` and that the set is closed under precomposition.
    pub fn new(cat: &FiniteCategory, at: Obj, arrows: ArrowSet) -> Result<Sieve, CoverageError> {
        if at >= cat.num_objects() {
            return Err(CoverageError::UnknownObject(at));
        }
        if !is_sieve(cat, at, arrows) {
            return Err(CoverageError::NotASieve {
                object: cat.object_name(at).to_string(),
                arrows: arrow_names(cat, arrows),
            });
        }
        Ok(Sieve { at, arrows })
    }

    pub fn contains(&self, f: Arr) -> bool {
        self.arrows.contains(f)
    }
}

pub fn is_sieve(cat: &FiniteCategory, at: Obj, arrows: ArrowSet) -> bool {
    arrows.iter().all(|f| {
        f < cat.num_arrows()
            && cat.cod(f) == at
            && cat.arrows_into(cat.dom(f)).iter().all(|&g| arrows.contains(cat.compose(f, g)))
    })
}

pub fn arrow_names(cat: &FiniteCategory, arrows: ArrowSet) -> Vec<String> {
    arrows.iter().map(|f| cat.arrow_name(f).to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("unknown object index {0}")]
    UnknownObject(Obj),
    #[error("arrow {arrow} does not have codomain {object}")]
    CodomainMismatch { object: String, arrow: String },
    #[error("{arrows:?} is not a sieve on {object}")]
    NotASieve { object: String, arrows: Vec<String> },
    #[error("the category is not a poset")]
    NotAPoset,
    #[error("generated family is not a topology: {0}")]
    GeneratedFamilyNotATopology(TopologyReport),
    #[error(transparent)]
    Invalid(#[from] TopologyReport),
}

pub fn max_sieve(cat: &FiniteCategory, a: Obj) -> Result<Sieve, CoverageError> {
    if a >= cat.num_objects() {
        return Err(CoverageError::UnknownObject(a));
    }
    Ok(Sieve { at: a, arrows: maximal(cat, a) })
}

pub(crate) fn maximal(cat: &FiniteCategory, a: Obj) -> ArrowSet {
    cat.arrows_into(a).iter().copied().collect()
}

/// `f*S = {g : f∘g ∈ S}` on `dom f`.
pub fn pullback_sieve(cat: &FiniteCategory, s: &Sieve, f: Arr) -> Result<Sieve, CoverageError> {
    if cat.cod(f) != s.at {
        return Err(CoverageError::CodomainMismatch {
            object: cat.object_name(s.at).to_string(),
            arrow: cat.arrow_name(f).to_string(),
        });
    }
    Ok(Sieve { at: cat.dom(f), arrows: pullback(cat, s.arrows, f) })
}

pub(crate) fn pullback(cat: &FiniteCategory, s: ArrowSet, f: Arr) -> ArrowSet {
    cat.arrows_into(cat.dom(f)).iter().copied().filter(|&g| s.contains(cat.compose(f, g))).collect()
}

/// Largest sieve on `a` contained in `set`.
pub fn largest_sieve_within(cat: &FiniteCategory, a: Obj, set: ArrowSet) -> ArrowSet {
    cat.arrows_into(a)
        .iter()
        .copied()
        .filter(|&f| set.contains(f) && cat.arrows_into(cat.dom(f)).iter().all(|&g| set.contains(cat.compose(f, g))))
        .collect()
}

/// Every sieve on `a`, smallest first.
pub fn all_sieves(cat: &FiniteCategory, a: Obj) -> Vec<ArrowSet> {
    let into = cat.arrows_into(a);
    let local = |f: Arr| into.iter().position(|&h| h == f).expect("arrow into a");
    let succ: Vec<Vec<usize>> =
        into.iter().map(|&f| cat.arrows_into(cat.dom(f)).iter().map(|&g| local(cat.compose(f, g))).collect()).collect();
    closed_subsets(into.len(), &principal_closures(into.len(), &succ))
        .into_iter()
        .map(|bits| bits.ones().map(|i| into[i]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum TopologyViolation {
    NotASieve { object: String, sieve: Vec<String> },
    MaximalityViolation { object: String },
    StabilityViolation { object: String, sieve: Vec<String>, arrow: String },
    LocalCharacterViolation { object: String, sieve: Vec<String>, cover: Vec<String> },
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyViolation::NotASieve { object, sieve } => write!(out, "{sieve:?} is not a sieve on {object}"),
            TopologyViolation::MaximalityViolation { object } => {
                write!(out, "maximal sieve on {object} does not cover")
            }
            TopologyViolation::StabilityViolation { object, sieve, arrow } => {
                write!(out, "pullback of covering sieve {sieve:?} on {object} along {arrow} does not cover")
            }
            TopologyViolation::LocalCharacterViolation { object, sieve, cover } => {
                write!(out, "{sieve:?} on {object} is locally covering along {cover:?} but not covering")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct TopologyReport {
    pub violations: Vec<TopologyViolation>,
}

/// Basic covering sieves for each object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub bcov: Vec<Vec<ArrowSet>>,
}

#[derive(Debug, Clone)]
pub struct Topology {
    cat: Arc<FiniteCategory>,
    cov: Vec<Vec<ArrowSet>>,
    lookup: Vec<HashSet<ArrowSet>>,
    presentation: Option<Presentation>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.cat == other.cat && self.lookup == other.lookup
    }
}

impl Topology {
    pub fn category(&self) -> &Arc<FiniteCategory> {
        &self.cat
    }

    pub fn covers(&self, a: Obj, s: ArrowSet) -> bool {
        self.lookup[a].contains(&s)
    }

    /// Covering sieves on `a`, in the order of [`all_sieves`].
    pub fn covering(&self, a: Obj) -> &[ArrowSet] {
        &self.cov[a]
    }

    pub fn presentation(&self) -> Option<&Presentation> {
        self.presentation.as_ref()
    }

    /// Whether the largest sieve inside `set` covers `a`. Covering families are upward
    /// closed, so this decides "some covering sieve is contained in `set`".
    pub fn covered_within(&self, a: Obj, set: ArrowSet) -> bool {
        let s = largest_sieve_within(&self.cat, a, set);
        self.covers(a, s)
    }

    /// Objects covered by the empty sieve.
    pub fn degenerate_objects(&self) -> Vec<Obj> {
        self.cat.objects().filter(|&a| self.covers(a, ArrowSet::empty())).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.cat.objects().all(|a| self.cov[a].len() == 1)
    }
}

/// Checks the topology axioms exhaustively.
pub fn validate_topology(cat: Arc<FiniteCategory>, cov: Vec<Vec<ArrowSet>>) -> Result<Topology, TopologyReport> {
    use TopologyViolation as V;
    let names = |s: ArrowSet| arrow_names(&cat, s);
    let obj = |a: Obj| cat.object_name(a).to_string();
    let mut violations = Vec::new();
    let mut cov = cov;
    cov.resize(cat.num_objects(), Vec::new());
    for a in cat.objects() {
        for &s in &cov[a] {
            if !is_sieve(&cat, a, s) {
                violations.push(V::NotASieve { object: obj(a), sieve: names(s) });
            }
        }
    }
    if !violations.is_empty() {
        return Err(TopologyReport { violations });
    }
    let lookup: Vec<HashSet<ArrowSet>> = cov.iter().map(|c| c.iter().copied().collect()).collect();
    for a in cat.objects() {
        if !lookup[a].contains(&maximal(&cat, a)) {
            violations.push(V::MaximalityViolation { object: obj(a) });
        }
    }
    for a in cat.objects() {
        for &s in &cov[a] {
            for &f in cat.arrows_into(a) {
                if !lookup[cat.dom(f)].contains(&pullback(&cat, s, f)) {
                    violations.push(V::StabilityViolation {
                        object: obj(a),
                        sieve: names(s),
                        arrow: cat.arrow_name(f).into(),
                    });
                }
            }
        }
    }
    for a in cat.objects() {
        for s in all_sieves(&cat, a) {
            if lookup[a].contains(&s) {
                continue;
            }
            let witness = cov[a].iter().find(|r| r.iter().all(|f| lookup[cat.dom(f)].contains(&pullback(&cat, s, f))));
            if let Some(&r) = witness {
                violations.push(V::LocalCharacterViolation { object: obj(a), sieve: names(s), cover: names(r) });
            }
        }
    }
    if !violations.is_empty() {
        return Err(TopologyReport { violations });
    }
    // canonical order: the order of all_sieves
    let cov =
        cat.objects().map(|a| all_sieves(&cat, a).into_iter().filter(|s| lookup[a].contains(s)).collect()).collect();
    Ok(Topology { cat, cov, lookup, presentation: None })
}

/// `Cov(a) = {M_a}`.
pub fn trivial_topology(cat: Arc<FiniteCategory>) -> Topology {
    let cov = cat.objects().map(|a| vec![maximal(&cat, a)]).collect();
    validate_topology(cat, cov).expect("the trivial topology is a topology")
}

/// Dense topology on a poset: `S` covers `p` when every `q ≤ p` has some `r ≤ q` with `r → p ∈ S`.
pub fn dense_topology(cat: Arc<FiniteCategory>) -> Result<Topology, CoverageError> {
    if !cat.is_poset() {
        return Err(CoverageError::NotAPoset);
    }
    let arrow = |q: Obj, p: Obj| cat.hom(q, p).next();
    let cov = cat
        .objects()
        .map(|p| {
            all_sieves(&cat, p)
                .into_iter()
                .filter(|&s| {
                    cat.objects().filter(|&q| cat.leq(q, p)).all(|q| {
                        cat.objects().filter(|&r| cat.leq(r, q)).any(|r| s.contains(arrow(r, p).expect("r ≤ q ≤ p")))
                    })
                })
                .collect()
        })
        .collect();
    Ok(validate_topology(cat, cov)?)
}

/// Superset closure of a basis; fails when the closure is not a topology.
pub fn generate_topology(cat: Arc<FiniteCategory>, presentation: Presentation) -> Result<Topology, CoverageError> {
    for (a, basic) in presentation.bcov.iter().enumerate() {
        for &r in basic {
            Sieve::new(&cat, a, r)?;
        }
    }
    let cov = cat
        .objects()
        .map(|a| {
            let basic = presentation.bcov.get(a).map(Vec::as_slice).unwrap_or(&[]);
            all_sieves(&cat, a).into_iter().filter(|s| basic.iter().any(|r| r.is_subset(*s))).collect()
        })
        .collect();
    let mut top = validate_topology(cat, cov).map_err(CoverageError::GeneratedFamilyNotATopology)?;
    top.presentation = Some(presentation);
    Ok(top)
}
