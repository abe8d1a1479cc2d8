//! Finite categories with dense object/arrow indices and a full composition table.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrows::ArrowSet;

/// Dense object index (declaration order).
pub type Obj = usize;
/// Dense arrow index (declaration order).
pub type Arr = usize;

/// Upper bound on the number of arrows; sieves are stored as 128-bit masks.
pub const MAX_ARROWS: usize = ArrowSet::CAPACITY;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowDecl {
    pub name: String,
    pub dom: String,
    pub cod: String,
}

/// Unvalidated category description, as found in a site file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCategory {
    pub objects: Vec<String>,
    pub arrows: Vec<ArrowDecl>,
    /// object name -> identity arrow name
    #[serde(default)]
    pub identities: Vec<(String, String)>,
    /// entries `[g, f, g∘f]`
    #[serde(default)]
    pub compose: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum CategoryViolation {
    DuplicateObject { object: String },
    DuplicateArrow { arrow: String },
    DanglingEndpoint { arrow: String, endpoint: String },
    UnknownArrow { arrow: String },
    TooManyArrows { count: usize, limit: usize },
    MissingIdentity { object: String },
    BadIdentity { object: String, arrow: String },
    NotComposable { g: String, f: String },
    DuplicateComposite { g: String, f: String },
    MissingComposite { g: String, f: String },
    CompositeEndpoints { g: String, f: String, composite: String },
    IdentityLaw { arrow: String, identity: String },
    NonAssociative { h: String, g: String, f: String },
}

impl fmt::Display for CategoryViolation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CategoryViolation::*;
        match self {
            DuplicateObject { object } => write!(out, "duplicate object {object}"),
            DuplicateArrow { arrow } => write!(out, "duplicate arrow {arrow}"),
            DanglingEndpoint { arrow, endpoint } => {
                write!(out, "arrow {arrow} has unknown endpoint {endpoint}")
            }
            UnknownArrow { arrow } => write!(out, "unknown arrow {arrow}"),
            TooManyArrows { count, limit } => write!(out, "{count} arrows exceed the limit of {limit}"),
            MissingIdentity { object } => write!(out, "object {object} has no identity"),
            BadIdentity { object, arrow } => {
                write!(out, "identity {arrow} of {object} is not an endo-arrow on it")
            }
            NotComposable { g, f } => write!(out, "composite {g}∘{f} given but cod({f}) ≠ dom({g})"),
            DuplicateComposite { g, f } => write!(out, "composite {g}∘{f} given twice"),
            MissingComposite { g, f } => write!(out, "composite {g}∘{f} missing"),
            CompositeEndpoints { g, f, composite } => {
                write!(out, "{g}∘{f} = {composite} has the wrong domain or codomain")
            }
            IdentityLaw { arrow, identity } => {
                write!(out, "identity law fails for {arrow} with {identity}")
            }
            NonAssociative { h, g, f } => write!(out, "({h}∘{g})∘{f} ≠ {h}∘({g}∘{f})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("invalid category: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct CategoryReport {
    pub violations: Vec<CategoryViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosetError {
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("duplicate element {0}")]
    DuplicateElement(String),
    #[error("not a partial order: {kind} fails at ({left}, {right})")]
    NotAPartialOrder { kind: &'static str, left: String, right: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowInfo {
    pub name: String,
    pub dom: Obj,
    pub cod: Obj,
}

/// A validated, immutable finite category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCategory {
    objects: Vec<String>,
    arrows: Vec<ArrowInfo>,
    identity: Vec<Arr>,
    /// `compose[g * n + f]` is `g∘f` when `cod f = dom g`.
    compose: Vec<Option<Arr>>,
    into: Vec<Vec<Arr>>,
    out_of: Vec<Vec<Arr>>,
}

impl FiniteCategory {
    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn objects(&self) -> std::ops::Range<Obj> {
        0..self.objects.len()
    }

    pub fn arrows(&self) -> std::ops::Range<Arr> {
        0..self.arrows.len()
    }

    pub fn object_name(&self, a: Obj) -> &str {
        &self.objects[a]
    }

    pub fn arrow_name(&self, f: Arr) -> &str {
        &self.arrows[f].name
    }

    pub fn object_by_name(&self, name: &str) -> Option<Obj> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn arrow_by_name(&self, name: &str) -> Option<Arr> {
        self.arrows.iter().position(|a| a.name == name)
    }

    pub fn dom(&self, f: Arr) -> Obj {
        self.arrows[f].dom
    }

    pub fn cod(&self, f: Arr) -> Obj {
        self.arrows[f].cod
    }

    pub fn id(&self, a: Obj) -> Arr {
        self.identity[a]
    }

    pub fn is_identity(&self, f: Arr) -> bool {
        self.identity[self.dom(f)] == f
    }

    /// `g∘f`, or `None` when `cod f ≠ dom g`.
    pub fn try_compose(&self, g: Arr, f: Arr) -> Option<Arr> {
        self.compose[g * self.arrows.len() + f]
    }

    /// `g∘f`; panics when the pair is not composable.
    pub fn compose(&self, g: Arr, f: Arr) -> Arr {
        self.try_compose(g, f)
            .unwrap_or_else(|| panic!("{}∘{} is not composable", self.arrow_name(g), self.arrow_name(f)))
    }

    /// Arrows with codomain `a`, in index order.
    pub fn arrows_into(&self, a: Obj) -> &[Arr] {
        &self.into[a]
    }

    /// Arrows with domain `a`, in index order.
    pub fn arrows_out_of(&self, a: Obj) -> &[Arr] {
        &self.out_of[a]
    }

    pub fn hom(&self, from: Obj, to: Obj) -> impl Iterator<Item = Arr> + '_ {
        self.into[to].iter().copied().filter(move |&f| self.dom(f) == from)
    }

    /// Largest `|arrows into a|`; the fibre bound of the codomain map.
    pub fn max_cod_fiber(&self) -> usize {
        self.into.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// At most one arrow between any two objects and no non-trivial isomorphisms.
    pub fn is_poset(&self) -> bool {
        for a in self.objects() {
            for b in self.objects() {
                let n = self.hom(a, b).count();
                if n > 1 || (a != b && n == 1 && self.hom(b, a).count() > 0) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `q ≤ p` in a poset category (an arrow q → p exists).
    pub fn leq(&self, q: Obj, p: Obj) -> bool {
        self.hom(q, p).next().is_some()
    }

    pub fn to_raw(&self) -> RawCategory {
        let n = self.arrows.len();
        let mut compose = Vec::new();
        for g in 0..n {
            for f in 0..n {
                if let Some(h) = self.compose[g * n + f] {
                    compose.push((
                        self.arrows[g].name.clone(),
                        self.arrows[f].name.clone(),
                        self.arrows[h].name.clone(),
                    ));
                }
            }
        }
        RawCategory {
            objects: self.objects.clone(),
            arrows: self
                .arrows
                .iter()
                .map(|a| ArrowDecl {
                    name: a.name.clone(),
                    dom: self.objects[a.dom].clone(),
                    cod: self.objects[a.cod].clone(),
                })
                .collect(),
            identities: self
                .objects()
                .map(|a| (self.objects[a].clone(), self.arrows[self.identity[a]].name.clone()))
                .collect(),
            compose,
        }
    }
}

/// Validates a raw description, reporting every violated law.
pub fn validate_category(raw: &RawCategory) -> Result<FiniteCategory, CategoryReport> {
    use CategoryViolation as V;
    let mut violations = Vec::new();

    let mut obj_index = HashMap::new();
    for (i, o) in raw.objects.iter().enumerate() {
        if obj_index.insert(o.as_str(), i).is_some() {
            violations.push(V::DuplicateObject { object: o.clone() });
        }
    }
    let mut arrow_index = HashMap::new();
    let mut arrows = Vec::with_capacity(raw.arrows.len());
    for (i, a) in raw.arrows.iter().enumerate() {
        if arrow_index.insert(a.name.as_str(), i).is_some() {
            violations.push(V::DuplicateArrow { arrow: a.name.clone() });
        }
        let mut endpoint = |name: &String| match obj_index.get(name.as_str()) {
            Some(&o) => o,
            None => {
                violations.push(V::DanglingEndpoint { arrow: a.name.clone(), endpoint: name.clone() });
                usize::MAX
            }
        };
        let dom = endpoint(&a.dom);
        let cod = endpoint(&a.cod);
        arrows.push(ArrowInfo { name: a.name.clone(), dom, cod });
    }
    if arrows.len() > MAX_ARROWS {
        violations.push(V::TooManyArrows { count: arrows.len(), limit: MAX_ARROWS });
    }
    if !violations.is_empty() {
        return Err(CategoryReport { violations });
    }

    let n = arrows.len();
    let mut identity = vec![usize::MAX; raw.objects.len()];
    for (o, a) in &raw.identities {
        let Some(&oi) = obj_index.get(o.as_str()) else {
            violations.push(V::DanglingEndpoint { arrow: a.clone(), endpoint: o.clone() });
            continue;
        };
        let Some(&ai) = arrow_index.get(a.as_str()) else {
            violations.push(V::UnknownArrow { arrow: a.clone() });
            continue;
        };
        if arrows[ai].dom != oi || arrows[ai].cod != oi {
            violations.push(V::BadIdentity { object: o.clone(), arrow: a.clone() });
        } else {
            identity[oi] = ai;
        }
    }
    for (oi, &id) in identity.iter().enumerate() {
        if id == usize::MAX {
            violations.push(V::MissingIdentity { object: raw.objects[oi].clone() });
        }
    }

    let mut compose = vec![None; n * n];
    for (g, f, h) in &raw.compose {
        let lookup = |name: &String, violations: &mut Vec<V>| match arrow_index.get(name.as_str()) {
            Some(&i) => Some(i),
            None => {
                violations.push(V::UnknownArrow { arrow: name.clone() });
                None
            }
        };
        let (Some(gi), Some(fi), Some(hi)) =
            (lookup(g, &mut violations), lookup(f, &mut violations), lookup(h, &mut violations))
        else {
            continue;
        };
        if arrows[fi].cod != arrows[gi].dom {
            violations.push(V::NotComposable { g: g.clone(), f: f.clone() });
            continue;
        }
        if arrows[hi].dom != arrows[fi].dom || arrows[hi].cod != arrows[gi].cod {
            violations.push(V::CompositeEndpoints { g: g.clone(), f: f.clone(), composite: h.clone() });
            continue;
        }
        if compose[gi * n + fi].replace(hi).is_some() {
            violations.push(V::DuplicateComposite { g: g.clone(), f: f.clone() });
        }
    }
    for g in 0..n {
        for f in 0..n {
            if arrows[f].cod == arrows[g].dom && compose[g * n + f].is_none() {
                violations.push(V::MissingComposite { g: arrows[g].name.clone(), f: arrows[f].name.clone() });
            }
        }
    }
    if !violations.is_empty() {
        return Err(CategoryReport { violations });
    }

    for f in 0..n {
        for (id, composite) in [
            (identity[arrows[f].cod], compose[identity[arrows[f].cod] * n + f]),
            (identity[arrows[f].dom], compose[f * n + identity[arrows[f].dom]]),
        ] {
            if composite != Some(f) {
                violations.push(V::IdentityLaw { arrow: arrows[f].name.clone(), identity: arrows[id].name.clone() });
            }
        }
    }
    for f in 0..n {
        for g in 0..n {
            let Some(gf) = compose[g * n + f] else { continue };
            for h in 0..n {
                let Some(hg) = compose[h * n + g] else { continue };
                if compose[h * n + gf] != compose[hg * n + f] {
                    violations.push(V::NonAssociative {
                        h: arrows[h].name.clone(),
                        g: arrows[g].name.clone(),
                        f: arrows[f].name.clone(),
                    });
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(CategoryReport { violations });
    }

    let mut into = vec![Vec::new(); raw.objects.len()];
    let mut out_of = vec![Vec::new(); raw.objects.len()];
    for (i, a) in arrows.iter().enumerate() {
        into[a.cod].push(i);
        out_of[a.dom].push(i);
    }
    Ok(FiniteCategory { objects: raw.objects.clone(), arrows, identity, compose, into, out_of })
}

/// A finite partial order given by its elements and `q ≤ p` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosetDecl {
    pub elements: Vec<String>,
    /// pairs `[q, p]` meaning `q ≤ p`
    pub leq: Vec<(String, String)>,
}

impl PosetDecl {
    /// Adds reflexive and transitive pairs so the relation becomes a preorder.
    pub fn closed(&self) -> Result<PosetDecl, PosetError> {
        let n = self.elements.len();
        let rel = self.relation()?;
        let mut rel = rel;
        for i in 0..n {
            rel[i][i] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if rel[i][k] && rel[k][j] {
                        rel[i][j] = true;
                    }
                }
            }
        }
        let mut leq = Vec::new();
        for q in 0..n {
            for p in 0..n {
                if rel[q][p] {
                    leq.push((self.elements[q].clone(), self.elements[p].clone()));
                }
            }
        }
        Ok(PosetDecl { elements: self.elements.clone(), leq })
    }

    fn relation(&self) -> Result<Vec<Vec<bool>>, PosetError> {
        let n = self.elements.len();
        let mut index = HashMap::new();
        for (i, e) in self.elements.iter().enumerate() {
            if index.insert(e.as_str(), i).is_some() {
                return Err(PosetError::DuplicateElement(e.clone()));
            }
        }
        let mut rel = vec![vec![false; n]; n];
        for (q, p) in &self.leq {
            let qi = *index.get(q.as_str()).ok_or_else(|| PosetError::UnknownElement(q.clone()))?;
            let pi = *index.get(p.as_str()).ok_or_else(|| PosetError::UnknownElement(p.clone()))?;
            rel[qi][pi] = true;
        }
        Ok(rel)
    }
}

/// Poset category: one arrow `q → p` per `q ≤ p`. The relation must already be a partial order.
pub fn poset_as_category(poset: &PosetDecl) -> Result<FiniteCategory, PosetError> {
    let rel = poset.relation()?;
    let n = poset.elements.len();
    let name = |i: usize| poset.elements[i].clone();
    for i in 0..n {
        if !rel[i][i] {
            return Err(PosetError::NotAPartialOrder { kind: "reflexivity", left: name(i), right: name(i) });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rel[i][j] && rel[j][i] {
                return Err(PosetError::NotAPartialOrder { kind: "antisymmetry", left: name(i), right: name(j) });
            }
            for k in 0..n {
                if rel[i][j] && rel[j][k] && !rel[i][k] {
                    return Err(PosetError::NotAPartialOrder { kind: "transitivity", left: name(i), right: name(k) });
                }
            }
        }
    }
    let arrow_name = |q: usize, p: usize| {
        if q == p {
            format!("id_{}", poset.elements[q])
        } else {
            format!("{}<={}", poset.elements[q], poset.elements[p])
        }
    };
    let mut raw = RawCategory { objects: poset.elements.clone(), ..Default::default() };
    for p in 0..n {
        for q in 0..n {
            if rel[q][p] {
                raw.arrows.push(ArrowDecl { name: arrow_name(q, p), dom: name(q), cod: name(p) });
            }
        }
    }
    for p in 0..n {
        raw.identities.push((name(p), arrow_name(p, p)));
    }
    for r in 0..n {
        for q in 0..n {
            for p in 0..n {
                if rel[r][q] && rel[q][p] {
                    raw.compose.push((arrow_name(q, p), arrow_name(r, q), arrow_name(r, p)));
                }
            }
        }
    }
    Ok(validate_category(&raw).expect("poset categories satisfy the category laws"))
}

/// One-object category from a monoid table `mul[a][b] = a·b` with unit 0.
pub fn monoid_as_category(
    object: &str,
    elements: &[String],
    mul: &[Vec<usize>],
) -> Result<FiniteCategory, CategoryReport> {
    let mut raw = RawCategory { objects: vec![object.to_string()], ..Default::default() };
    for e in elements {
        raw.arrows.push(ArrowDecl { name: e.clone(), dom: object.into(), cod: object.into() });
    }
    raw.identities.push((object.to_string(), elements[0].clone()));
    for (g, row) in mul.iter().enumerate() {
        for (f, &h) in row.iter().enumerate() {
            raw.compose.push((elements[g].clone(), elements[f].clone(), elements[h].clone()));
        }
    }
    validate_category(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain2() -> PosetDecl {
        PosetDecl { elements: vec!["0".into(), "1".into()], leq: vec![("0".into(), "1".into())] }.closed().unwrap()
    }

    #[test]
    fn two_chain_has_three_arrows() {
        let c = poset_as_category(&chain2()).unwrap();
        assert_eq!(c.num_arrows(), 3);
        let u = c.arrow_by_name("0<=1").unwrap();
        assert_eq!((c.dom(u), c.cod(u)), (0, 1));
        assert_eq!(c.compose(c.id(1), u), u);
        assert!(c.is_poset());
    }

    #[test]
    fn omitted_composite_is_reported() {
        let c = poset_as_category(&chain2()).unwrap();
        let mut raw = c.to_raw();
        raw.compose.retain(|(g, f, _)| !(g == "id_1" && f == "0<=1"));
        let report = validate_category(&raw).unwrap_err();
        assert_eq!(report.violations, vec![CategoryViolation::MissingComposite { g: "id_1".into(), f: "0<=1".into() }]);
    }

    #[test]
    fn two_element_group_is_valid() {
        let els = vec!["id".to_string(), "s".to_string()];
        let c = monoid_as_category("*", &els, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(c.num_arrows(), 2);
        assert!(!c.is_poset());
    }

    #[test]
    fn non_associative_table_is_rejected() {
        // (a·a)·b = b·b = b but a·(a·b) = a·e = a
        let els: Vec<String> = ["e", "a", "b"].iter().map(|s| s.to_string()).collect();
        let mul = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 2, 2]];
        let report = monoid_as_category("*", &els, &mul).unwrap_err();
        assert!(report.violations.iter().any(|v| matches!(v, CategoryViolation::NonAssociative { .. })));
    }

    #[test]
    fn dangling_endpoint() {
        let raw = RawCategory {
            objects: vec!["a".into()],
            arrows: vec![ArrowDecl { name: "f".into(), dom: "a".into(), cod: "zz".into() }],
            ..Default::default()
        };
        let report = validate_category(&raw).unwrap_err();
        assert_eq!(
            report.violations,
            vec![CategoryViolation::DanglingEndpoint { arrow: "f".into(), endpoint: "zz".into() }]
        );
    }

    #[test]
    fn missing_identity() {
        let raw = RawCategory {
            objects: vec!["a".into()],
            arrows: vec![ArrowDecl { name: "f".into(), dom: "a".into(), cod: "a".into() }],
            compose: vec![("f".into(), "f".into(), "f".into())],
            ..Default::default()
        };
        let report = validate_category(&raw).unwrap_err();
        assert!(report.violations.contains(&CategoryViolation::MissingIdentity { object: "a".into() }));
    }

    #[test]
    fn poset_examples() {
        let anti = PosetDecl { elements: vec!["a".into(), "b".into()], leq: vec![] }.closed().unwrap();
        let c = poset_as_category(&anti).unwrap();
        assert_eq!(c.num_arrows(), 2);
        assert!(c.arrows().all(|f| c.is_identity(f)));

        let diamond = PosetDecl {
            elements: ["bot", "x", "y", "top"].iter().map(|s| s.to_string()).collect(),
            leq: vec![
                ("bot".into(), "x".into()),
                ("bot".into(), "y".into()),
                ("x".into(), "top".into()),
                ("y".into(), "top".into()),
            ],
        }
        .closed()
        .unwrap();
        let c = poset_as_category(&diamond).unwrap();
        assert_eq!(c.num_arrows(), 9);
        assert_eq!(validate_category(&c.to_raw()).unwrap(), c);
    }

    #[test]
    fn not_a_partial_order() {
        let bad = PosetDecl {
            elements: vec!["a".into(), "b".into()],
            leq: vec![("a".into(), "b".into()), ("b".into(), "a".into())],
        }
        .closed()
        .unwrap();
        assert!(matches!(poset_as_category(&bad), Err(PosetError::NotAPartialOrder { kind: "antisymmetry", .. })));
        let unclosed = PosetDecl { elements: vec!["a".into()], leq: vec![] };
        assert!(matches!(poset_as_category(&unclosed), Err(PosetError::NotAPartialOrder { kind: "reflexivity", .. })));
    }
}
