//! Presheaves of finite sets on a finite category, and their morphisms.
//!
//! An element of `X(a)` is an index `0..X.size(a)`. Restriction along `f: b → a` is stored
//! as a table indexed by the elements of `X(a)`.

mod heyting;
mod power;
mod search;
mod shriek;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::category::{Arr, FiniteCategory, Obj};

pub use heyting::{forall_along, image_factorization, ImageFactorization, Subpresheaf};
pub use power::{power_object, PowerObject};
pub use search::{all_morphisms, natural_maps, NaturalMaps};
pub(crate) use shriek::dependent_sections;
pub use shriek::{
    counit, cover_by_shriek, m_fiber, pi_functor, pi_shriek, pi_star, quasi_pullback, shriek_map, transpose,
    untranspose, CoveringSquare, Family, MFiber, PiFunctor, Shriek,
};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum PshError {
    #[error("expected {expected} entries for {what}, found {found}")]
    WrongShape { what: String, expected: usize, found: usize },
    #[error("restriction of {element} along {arrow} is out of range")]
    RestrictionOutOfRange { arrow: String, element: usize },
    #[error("functoriality fails for element {element} along {arrow}")]
    Functoriality { arrow: String, element: usize },
    #[error("naturality fails for element {element} along {arrow}")]
    Naturality { arrow: String, element: usize },
    #[error("element {element} is not in the fibre over {object}")]
    ElementNotInFiber { object: String, element: usize },
    #[error("map is not small: fibre of size {size} over element {element} at {object} exceeds bound {bound}")]
    NotSmall { object: String, element: usize, size: usize, bound: usize },
    #[error("shape mismatch at {at}: {detail}")]
    ShapeMismatch { at: usize, detail: String },
    #[error("subset is not closed under restriction: element {element} at {object} along {arrow}")]
    NotClosed { object: String, element: usize, arrow: String },
    #[error("presheaves live over different categories")]
    CategoryMismatch,
}

/// A presheaf of finite sets.
#[derive(Clone, PartialEq, Eq)]
pub struct Presheaf {
    cat: Arc<FiniteCategory>,
    sizes: Vec<usize>,
    /// `restrict[f][x]` is `x·f` for `x ∈ X(cod f)`.
    restrict: Vec<Vec<usize>>,
    labels: Vec<Vec<String>>,
}

impl fmt::Debug for Presheaf {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.debug_struct("Presheaf").field("sizes", &self.sizes).field("restrict", &self.restrict).finish()
    }
}

impl Presheaf {
    /// Validates table shapes and functoriality.
    pub fn new(cat: Arc<FiniteCategory>, sizes: Vec<usize>, restrict: Vec<Vec<usize>>) -> Result<Presheaf, PshError> {
        let labels = sizes.iter().map(|&n| (0..n).map(|i| i.to_string()).collect()).collect();
        Presheaf::with_labels(cat, sizes, restrict, labels)
    }

    pub fn with_labels(
        cat: Arc<FiniteCategory>,
        sizes: Vec<usize>,
        restrict: Vec<Vec<usize>>,
        labels: Vec<Vec<String>>,
    ) -> Result<Presheaf, PshError> {
        let shape = |what: String, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(PshError::WrongShape { what, expected, found })
            }
        };
        shape("objects".into(), cat.num_objects(), sizes.len())?;
        shape("arrows".into(), cat.num_arrows(), restrict.len())?;
        shape("label rows".into(), cat.num_objects(), labels.len())?;
        for a in cat.objects() {
            shape(format!("labels of {}", cat.object_name(a)), sizes[a], labels[a].len())?;
        }
        for f in cat.arrows() {
            shape(format!("restriction along {}", cat.arrow_name(f)), sizes[cat.cod(f)], restrict[f].len())?;
            for (x, &y) in restrict[f].iter().enumerate() {
                if y >= sizes[cat.dom(f)] {
                    return Err(PshError::RestrictionOutOfRange { arrow: cat.arrow_name(f).into(), element: x });
                }
            }
        }
        let p = Presheaf { cat, sizes, restrict, labels };
        p.check_functorial()?;
        Ok(p)
    }

    pub(crate) fn new_unchecked(cat: Arc<FiniteCategory>, sizes: Vec<usize>, restrict: Vec<Vec<usize>>) -> Presheaf {
        let labels = sizes.iter().map(|&n| (0..n).map(|i| i.to_string()).collect()).collect();
        let p = Presheaf { cat, sizes, restrict, labels };
        debug_assert_eq!(p.check_functorial(), Ok(()));
        p
    }

    fn check_functorial(&self) -> Result<(), PshError> {
        let cat = &self.cat;
        for a in cat.objects() {
            let id = cat.id(a);
            for x in 0..self.sizes[a] {
                if self.restrict[id][x] != x {
                    return Err(PshError::Functoriality { arrow: cat.arrow_name(id).into(), element: x });
                }
            }
        }
        for f in cat.arrows() {
            for &g in cat.arrows_into(cat.dom(f)) {
                let fg = cat.compose(f, g);
                for x in 0..self.sizes[cat.cod(f)] {
                    if self.restrict[g][self.restrict[f][x]] != self.restrict[fg][x] {
                        return Err(PshError::Functoriality { arrow: cat.arrow_name(fg).into(), element: x });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn relabel(mut self, labels: Vec<Vec<String>>) -> Result<Presheaf, PshError> {
        for a in self.cat.objects() {
            if labels.get(a).map(Vec::len) != Some(self.sizes[a]) {
                return Err(PshError::WrongShape {
                    what: format!("labels of {}", self.cat.object_name(a)),
                    expected: self.sizes[a],
                    found: labels.get(a).map_or(0, Vec::len),
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn category(&self) -> &Arc<FiniteCategory> {
        &self.cat
    }

    pub fn size(&self, a: Obj) -> usize {
        self.sizes[a]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn label(&self, a: Obj, x: usize) -> &str {
        &self.labels[a][x]
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    /// `x·f` for `x ∈ X(cod f)`.
    pub fn restrict(&self, x: usize, f: Arr) -> usize {
        self.restrict[f][x]
    }

    pub fn restriction_table(&self, f: Arr) -> &[usize] {
        &self.restrict[f]
    }

    /// Offsets of each fibre in a flat enumeration of all elements.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0;
        off.push(0);
        for &n in &self.sizes {
            acc += n;
            off.push(acc);
        }
        off
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn empty(cat: Arc<FiniteCategory>) -> Presheaf {
        let restrict = vec![Vec::new(); cat.num_arrows()];
        let sizes = vec![0; cat.num_objects()];
        Presheaf::new_unchecked(cat, sizes, restrict)
    }

    pub fn terminal(cat: Arc<FiniteCategory>) -> Presheaf {
        let restrict = vec![vec![0]; cat.num_arrows()];
        let sizes = vec![1; cat.num_objects()];
        Presheaf::new_unchecked(cat, sizes, restrict)
    }

    /// `y(c)`: elements at `d` are the arrows `d → c` in index order.
    pub fn representable(cat: Arc<FiniteCategory>, c: Obj) -> Presheaf {
        let homs: Vec<Vec<Arr>> = cat.objects().map(|d| cat.hom(d, c).collect()).collect();
        let sizes = homs.iter().map(Vec::len).collect();
        let restrict = cat
            .arrows()
            .map(|g| {
                let (e, d) = (cat.dom(g), cat.cod(g));
                homs[d]
                    .iter()
                    .map(|&f| homs[e].iter().position(|&h| h == cat.compose(f, g)).expect("hom closed"))
                    .collect()
            })
            .collect();
        let labels = homs.iter().map(|hs| hs.iter().map(|&f| cat.arrow_name(f).to_string()).collect()).collect();
        let mut p = Presheaf::new_unchecked(cat, sizes, restrict);
        p.labels = labels;
        p
    }

    /// Index of the arrow `f` in `y(cod f)(dom f)`.
    pub fn representable_index(cat: &FiniteCategory, f: Arr) -> usize {
        cat.hom(cat.dom(f), cat.cod(f)).position(|h| h == f).expect("f in its own hom-set")
    }

    /// Binary product; `(x, y)` at `a` has index `x * |Y(a)| + y`.
    pub fn product(x: &Presheaf, y: &Presheaf) -> Result<Presheaf, PshError> {
        if x.cat != y.cat {
            return Err(PshError::CategoryMismatch);
        }
        let cat = x.cat.clone();
        let sizes: Vec<usize> = cat.objects().map(|a| x.sizes[a] * y.sizes[a]).collect();
        let restrict = cat
            .arrows()
            .map(|f| {
                let (b, a) = (cat.dom(f), cat.cod(f));
                (0..sizes[a])
                    .map(|i| {
                        let (p, q) = (i / y.sizes[a], i % y.sizes[a]);
                        x.restrict(p, f) * y.sizes[b] + y.restrict(q, f)
                    })
                    .collect()
            })
            .collect();
        let labels = cat
            .objects()
            .map(|a| {
                (0..sizes[a])
                    .map(|i| format!("({},{})", x.label(a, i / y.sizes[a]), y.label(a, i % y.sizes[a])))
                    .collect()
            })
            .collect();
        let mut p = Presheaf::new_unchecked(cat, sizes, restrict);
        p.labels = labels;
        Ok(p)
    }

    /// Finds a natural isomorphism, if any, by exhaustive search.
    pub fn isomorphism_to(&self, other: &Presheaf) -> Option<Vec<Vec<usize>>> {
        if self.cat != other.cat || self.sizes != other.sizes {
            return None;
        }
        let mut maps = natural_maps(self, other, |_, _, _| true);
        maps.find(|comp| comp.iter().all(|c| is_bijection(c)))
    }

    pub fn is_isomorphic(&self, other: &Presheaf) -> bool {
        self.isomorphism_to(other).is_some()
    }
}

fn is_bijection(c: &[usize]) -> bool {
    let mut seen = vec![false; c.len()];
    c.iter().all(|&y| y < seen.len() && !std::mem::replace(&mut seen[y], true))
}

/// A natural transformation between presheaves.
#[derive(Clone, PartialEq, Eq)]
pub struct Morphism {
    src: Arc<Presheaf>,
    dst: Arc<Presheaf>,
    comp: Vec<Vec<usize>>,
}

impl fmt::Debug for Morphism {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.debug_struct("Morphism").field("comp", &self.comp).finish()
    }
}

impl Morphism {
    pub fn new(src: Arc<Presheaf>, dst: Arc<Presheaf>, comp: Vec<Vec<usize>>) -> Result<Morphism, PshError> {
        if src.cat != dst.cat {
            return Err(PshError::CategoryMismatch);
        }
        let cat = src.cat.clone();
        if comp.len() != cat.num_objects() {
            return Err(PshError::WrongShape {
                what: "components".into(),
                expected: cat.num_objects(),
                found: comp.len(),
            });
        }
        for a in cat.objects() {
            if comp[a].len() != src.size(a) {
                return Err(PshError::WrongShape {
                    what: format!("component at {}", cat.object_name(a)),
                    expected: src.size(a),
                    found: comp[a].len(),
                });
            }
            if let Some(x) = comp[a].iter().position(|&y| y >= dst.size(a)) {
                return Err(PshError::ElementNotInFiber { object: cat.object_name(a).into(), element: x });
            }
        }
        for f in cat.arrows() {
            let (b, a) = (cat.dom(f), cat.cod(f));
            for x in 0..src.size(a) {
                if comp[b][src.restrict(x, f)] != dst.restrict(comp[a][x], f) {
                    return Err(PshError::Naturality { arrow: cat.arrow_name(f).into(), element: x });
                }
            }
        }
        Ok(Morphism { src, dst, comp })
    }

    pub(crate) fn new_unchecked(src: Arc<Presheaf>, dst: Arc<Presheaf>, comp: Vec<Vec<usize>>) -> Morphism {
        let m = Morphism { src, dst, comp };
        debug_assert!(Morphism::new(m.src.clone(), m.dst.clone(), m.comp.clone()).is_ok());
        m
    }

    pub fn identity(x: Arc<Presheaf>) -> Morphism {
        let comp = x.sizes.iter().map(|&n| (0..n).collect()).collect();
        Morphism { src: x.clone(), dst: x, comp }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Morphism) -> Result<Morphism, PshError> {
        if *first.dst != *self.src {
            return Err(PshError::ShapeMismatch { at: 0, detail: "codomain and domain differ".into() });
        }
        let comp = first.comp.iter().enumerate().map(|(a, c)| c.iter().map(|&y| self.comp[a][y]).collect()).collect();
        Ok(Morphism { src: first.src.clone(), dst: self.dst.clone(), comp })
    }

    pub fn src(&self) -> &Arc<Presheaf> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<Presheaf> {
        &self.dst
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.comp
    }

    pub fn apply(&self, a: Obj, x: usize) -> usize {
        self.comp[a][x]
    }

    /// Elements of the source over `y ∈ Y(a)`.
    pub fn fiber(&self, a: Obj, y: usize) -> Vec<usize> {
        (0..self.src.size(a)).filter(|&x| self.comp[a][x] == y).collect()
    }

    pub fn max_fiber(&self) -> usize {
        let mut best = 0;
        for (a, c) in self.comp.iter().enumerate() {
            let mut count = vec![0usize; self.dst.size(a)];
            for &y in c {
                count[y] += 1;
                best = best.max(count[y]);
            }
        }
        best
    }

    pub fn is_componentwise_surjective(&self) -> bool {
        self.comp.iter().enumerate().all(|(a, c)| {
            let mut hit = vec![false; self.dst.size(a)];
            c.iter().for_each(|&y| hit[y] = true);
            hit.into_iter().all(|h| h)
        })
    }

    pub fn is_mono(&self) -> bool {
        self.max_fiber() <= 1
    }

    pub fn is_iso(&self) -> bool {
        self.comp.iter().all(|c| is_bijection(c)) && self.src.sizes == self.dst.sizes
    }
}

/// Which maps count as small: every fibre has at most `bound` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SmallnessClass {
    pub bound: Option<usize>,
}

impl SmallnessClass {
    pub const UNBOUNDED: SmallnessClass = SmallnessClass { bound: None };

    pub fn bounded(bound: usize) -> SmallnessClass {
        SmallnessClass { bound: Some(bound) }
    }

    pub fn admits(&self, n: usize) -> bool {
        self.bound.is_none_or(|b| n <= b)
    }

    /// First fibre that is too large, or `Ok` when the morphism is small.
    pub fn check(&self, f: &Morphism) -> Result<(), PshError> {
        let Some(bound) = self.bound else { return Ok(()) };
        let cat = f.src.category();
        for a in cat.objects() {
            let mut count = vec![0usize; f.dst.size(a)];
            for &y in &f.comp[a] {
                count[y] += 1;
            }
            if let Some((y, &size)) = count.iter().enumerate().find(|(_, &n)| n > bound) {
                return Err(PshError::NotSmall { object: cat.object_name(a).into(), element: y, size, bound });
            }
        }
        Ok(())
    }

    pub fn is_small(&self, f: &Morphism) -> bool {
        self.check(f).is_ok()
    }

    /// Smallness of a plain function into a finite set with `n` elements.
    pub fn is_small_function(&self, r: &[usize], n: usize) -> bool {
        let mut count = vec![0usize; n];
        r.iter().for_each(|&i| count[i] += 1);
        count.into_iter().all(|c| self.admits(c))
    }
}
