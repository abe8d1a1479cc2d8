//! The power object of small subobjects: `ℙs(X)(c)` is the set of small subpresheaves of
//! `y(c) × X`, restricted by `(A·f) = {(g, x) : (f∘g, x) ∈ A}`.

use std::collections::HashMap;
use std::sync::Arc;

use super::{natural_maps, Morphism, Presheaf, PshError, SmallnessClass, Subpresheaf};
use crate::arrows::{closed_subsets, principal_closures};
use crate::category::{Arr, Obj};

#[derive(Debug, Clone)]
pub struct PowerObject {
    pub of: Arc<Presheaf>,
    pub presheaf: Arc<Presheaf>,
    /// `subsets[c][i]`: the pairs `(f, x)` of the i-th element at `c`, sorted
    pub subsets: Vec<Vec<Vec<(Arr, usize)>>>,
    /// `X × ℙs(X)`
    pub product: Arc<Presheaf>,
    /// `(x, A)` at `c` with `(id_c, x) ∈ A`
    pub membership: Subpresheaf,
    pub class: SmallnessClass,
    index: Vec<HashMap<Vec<(Arr, usize)>, usize>>,
}

pub fn power_object(x: &Arc<Presheaf>, class: SmallnessClass) -> PowerObject {
    let cat = x.category().clone();
    let mut subsets: Vec<Vec<Vec<(Arr, usize)>>> = Vec::new();
    for c in cat.objects() {
        let mut pos: Vec<(Arr, usize)> = Vec::new();
        let mut at: HashMap<(Arr, usize), usize> = HashMap::new();
        for &f in cat.arrows_into(c) {
            for e in 0..x.size(cat.dom(f)) {
                at.insert((f, e), pos.len());
                pos.push((f, e));
            }
        }
        let succ: Vec<Vec<usize>> = pos
            .iter()
            .map(|&(f, e)| {
                cat.arrows_into(cat.dom(f)).iter().map(|&g| at[&(cat.compose(f, g), x.restrict(e, g))]).collect()
            })
            .collect();
        let mut here: Vec<Vec<(Arr, usize)>> = closed_subsets(pos.len(), &principal_closures(pos.len(), &succ))
            .into_iter()
            .map(|bits| bits.ones().map(|i| pos[i]).collect::<Vec<_>>())
            .filter(|a: &Vec<(Arr, usize)>| {
                let mut count: HashMap<Arr, usize> = HashMap::new();
                a.iter().for_each(|&(f, _)| *count.entry(f).or_default() += 1);
                count.values().all(|&n| class.admits(n))
            })
            .collect();
        here.iter_mut().for_each(|a| a.sort_unstable());
        subsets.push(here);
    }
    let index: Vec<HashMap<Vec<(Arr, usize)>, usize>> =
        subsets.iter().map(|row| row.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect()).collect();
    let restrict = cat
        .arrows()
        .map(|h| {
            let (d, c) = (cat.dom(h), cat.cod(h));
            subsets[c].iter().map(|a| index[d][&restrict_subset(&cat, a, h)]).collect()
        })
        .collect();
    let sizes = subsets.iter().map(Vec::len).collect();
    let labels = cat
        .objects()
        .map(|c| {
            subsets[c]
                .iter()
                .map(|a| {
                    let inner: Vec<String> =
                        a.iter().map(|&(f, e)| format!("({},{})", cat.arrow_name(f), x.label(cat.dom(f), e))).collect();
                    format!("{{{}}}", inner.join(","))
                })
                .collect()
        })
        .collect();
    let presheaf =
        Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict).relabel(labels).expect("label shape"));
    let product = Arc::new(Presheaf::product(x, &presheaf).expect("same category"));
    let membership = {
        let elems: Vec<Vec<usize>> = cat
            .objects()
            .map(|c| {
                let n = presheaf.size(c);
                (0..x.size(c))
                    .flat_map(|e| {
                        let id = cat.id(c);
                        subsets[c]
                            .iter()
                            .enumerate()
                            .filter(move |(_, a)| a.binary_search(&(id, e)).is_ok())
                            .map(move |(i, _)| e * n + i)
                    })
                    .collect()
            })
            .collect();
        Subpresheaf::from_elements(&product, &elems).expect("membership is closed under restriction")
    };
    PowerObject { of: x.clone(), presheaf, subsets, product, membership, class, index }
}

fn restrict_subset(cat: &crate::category::FiniteCategory, a: &[(Arr, usize)], h: Arr) -> Vec<(Arr, usize)> {
    let mut out: Vec<(Arr, usize)> = cat
        .arrows_into(cat.dom(h))
        .iter()
        .flat_map(|&g| {
            let hg = cat.compose(h, g);
            a.iter().filter(move |&&(f, _)| f == hg).map(move |&(_, e)| (g, e))
        })
        .collect();
    out.sort_unstable();
    out
}

impl PowerObject {
    pub fn index_of(&self, c: Obj, subset: &[(Arr, usize)]) -> Option<usize> {
        self.index[c].get(subset).copied()
    }

    /// `{(x, y) : (x, m(y)) ∈ ∈_X} ⊆ X × Y` for `m: Y → ℙs(X)`.
    pub fn pull_back_membership(&self, m: &Morphism, xy: &Presheaf) -> Subpresheaf {
        let cat = self.of.category();
        let elems: Vec<Vec<usize>> = cat
            .objects()
            .map(|c| {
                let ny = m.src().size(c);
                let np = self.presheaf.size(c);
                (0..self.of.size(c) * ny)
                    .filter(|&i| self.membership.contains(c, (i / ny) * np + m.apply(c, i % ny)))
                    .collect()
            })
            .collect();
        Subpresheaf::from_elements(xy, &elems).expect("pullback of a subpresheaf")
    }

    /// The map `Y → ℙs(X)` sending `y ∈ Y(c)` to `{(f, x) : (x, y·f) ∈ R}`, for a small relation
    /// `R ⊆ X × Y`.
    pub fn classify(&self, relation: &Subpresheaf, y: &Arc<Presheaf>) -> Result<Morphism, PshError> {
        let cat = self.of.category();
        let x = &self.of;
        let mut comp = Vec::new();
        for c in cat.objects() {
            let mut row = Vec::new();
            for e in 0..y.size(c) {
                let mut a: Vec<(Arr, usize)> = Vec::new();
                for &f in cat.arrows_into(c) {
                    let d = cat.dom(f);
                    let ye = y.restrict(e, f);
                    for xe in 0..x.size(d) {
                        if relation.contains(d, xe * y.size(d) + ye) {
                            a.push((f, xe));
                        }
                    }
                }
                a.sort_unstable();
                let i = self.index_of(c, &a).ok_or_else(|| PshError::NotSmall {
                    object: cat.object_name(c).into(),
                    element: e,
                    size: a.len(),
                    bound: self.class.bound.unwrap_or(usize::MAX),
                })?;
                row.push(i);
            }
            comp.push(row);
        }
        Morphism::new(y.clone(), self.presheaf.clone(), comp)
    }

    /// Number of maps `Y → ℙs(X)` pulling membership back to `relation`, by exhaustive search.
    pub fn count_classifying_maps(&self, relation: &Subpresheaf, y: &Arc<Presheaf>) -> usize {
        let xy = Presheaf::product(&self.of, y).expect("same category");
        natural_maps(y, &self.presheaf, |_, _, _| true)
            .filter(|comp| {
                let m = Morphism::new_unchecked(y.clone(), self.presheaf.clone(), comp.clone());
                self.pull_back_membership(&m, &xy) == *relation
            })
            .count()
    }
}
