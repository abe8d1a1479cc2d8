//! Subpresheaves with their Heyting structure and quantifiers along morphisms.

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::{Morphism, Presheaf, PshError};
use crate::arrows::{closed_subsets, principal_closures};
use crate::category::Obj;

/// A subset of each fibre, closed under restriction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subpresheaf {
    member: Vec<FixedBitSet>,
}

impl Subpresheaf {
    pub fn new(x: &Presheaf, member: Vec<FixedBitSet>) -> Result<Subpresheaf, PshError> {
        let cat = x.category();
        if member.len() != cat.num_objects() {
            return Err(PshError::WrongShape {
                what: "fibres".into(),
                expected: cat.num_objects(),
                found: member.len(),
            });
        }
        for a in cat.objects() {
            if member[a].len() != x.size(a) {
                return Err(PshError::WrongShape {
                    what: format!("fibre at {}", cat.object_name(a)),
                    expected: x.size(a),
                    found: member[a].len(),
                });
            }
            for e in member[a].ones() {
                for &f in cat.arrows_into(a) {
                    if !member[cat.dom(f)].contains(x.restrict(e, f)) {
                        return Err(PshError::NotClosed {
                            object: cat.object_name(a).into(),
                            element: e,
                            arrow: cat.arrow_name(f).into(),
                        });
                    }
                }
            }
        }
        Ok(Subpresheaf { member })
    }

    pub fn from_elements(x: &Presheaf, elements: &[Vec<usize>]) -> Result<Subpresheaf, PshError> {
        let member = x
            .category()
            .objects()
            .map(|a| {
                let mut s = FixedBitSet::with_capacity(x.size(a));
                for &e in elements.get(a).map(Vec::as_slice).unwrap_or(&[]) {
                    if e >= x.size(a) {
                        return Err(PshError::ElementNotInFiber {
                            object: x.category().object_name(a).into(),
                            element: e,
                        });
                    }
                    s.insert(e);
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Subpresheaf::new(x, member)
    }

    fn from_predicate(x: &Presheaf, pred: impl Fn(Obj, usize) -> bool) -> Subpresheaf {
        let member = x
            .category()
            .objects()
            .map(|a| {
                let mut s = FixedBitSet::with_capacity(x.size(a));
                (0..x.size(a)).filter(|&e| pred(a, e)).for_each(|e| s.insert(e));
                s
            })
            .collect();
        Subpresheaf { member }
    }

    pub fn top(x: &Presheaf) -> Subpresheaf {
        Subpresheaf::from_predicate(x, |_, _| true)
    }

    pub fn bottom(x: &Presheaf) -> Subpresheaf {
        Subpresheaf::from_predicate(x, |_, _| false)
    }

    /// Least subpresheaf containing the given elements.
    pub fn generated_by(x: &Presheaf, seeds: &[(Obj, usize)]) -> Subpresheaf {
        let cat = x.category();
        let mut member: Vec<FixedBitSet> = cat.objects().map(|a| FixedBitSet::with_capacity(x.size(a))).collect();
        let mut stack: Vec<(Obj, usize)> = seeds.to_vec();
        while let Some((a, e)) = stack.pop() {
            if member[a].put(e) {
                continue;
            }
            for &f in cat.arrows_into(a) {
                stack.push((cat.dom(f), x.restrict(e, f)));
            }
        }
        Subpresheaf { member }
    }

    pub fn contains(&self, a: Obj, e: usize) -> bool {
        self.member[a].contains(e)
    }

    pub fn fibre(&self, a: Obj) -> &FixedBitSet {
        &self.member[a]
    }

    pub fn elements(&self, a: Obj) -> Vec<usize> {
        self.member[a].ones().collect()
    }

    pub fn size(&self, a: Obj) -> usize {
        self.member[a].count_ones(..)
    }

    pub fn total(&self) -> usize {
        self.member.iter().map(|m| m.count_ones(..)).sum()
    }

    pub fn leq(&self, other: &Subpresheaf) -> bool {
        self.member.iter().zip(&other.member).all(|(a, b)| a.is_subset(b))
    }

    pub fn meet(&self, other: &Subpresheaf) -> Subpresheaf {
        let member =
            self.member.iter().zip(&other.member).map(|(a, b)| a.intersection(b).collect_set(a.len())).collect();
        Subpresheaf { member }
    }

    pub fn join(&self, other: &Subpresheaf) -> Subpresheaf {
        let member = self.member.iter().zip(&other.member).map(|(a, b)| a.union(b).collect_set(a.len())).collect();
        Subpresheaf { member }
    }

    /// `(A ⇒ B)(a) = {e : e·f ∈ A implies e·f ∈ B for every f into a}`.
    pub fn implies(&self, x: &Presheaf, other: &Subpresheaf) -> Subpresheaf {
        let cat = x.category();
        Subpresheaf::from_predicate(x, |a, e| {
            cat.arrows_into(a).iter().all(|&f| {
                let (b, r) = (cat.dom(f), x.restrict(e, f));
                !self.contains(b, r) || other.contains(b, r)
            })
        })
    }

    pub fn negation(&self, x: &Presheaf) -> Subpresheaf {
        self.implies(x, &Subpresheaf::bottom(x))
    }

    /// `F*C`: elements of the source mapped into `C`.
    pub fn pullback(f: &Morphism, c: &Subpresheaf) -> Subpresheaf {
        Subpresheaf::from_predicate(f.src(), |a, e| c.contains(a, f.apply(a, e)))
    }

    /// `∃_F A`: the image of `A` under `F`.
    pub fn image(f: &Morphism, a: &Subpresheaf) -> Subpresheaf {
        let mut member: Vec<FixedBitSet> =
            f.dst().category().objects().map(|o| FixedBitSet::with_capacity(f.dst().size(o))).collect();
        for (o, m) in a.member.iter().enumerate() {
            for e in m.ones() {
                member[o].insert(f.apply(o, e));
            }
        }
        Subpresheaf { member }
    }

    /// Every subpresheaf of `x`, smallest first.
    pub fn all(x: &Presheaf) -> Vec<Subpresheaf> {
        let cat = x.category();
        let off = x.offsets();
        let n = x.total();
        let mut succ = vec![Vec::new(); n];
        for a in cat.objects() {
            for e in 0..x.size(a) {
                succ[off[a] + e] = cat.arrows_into(a).iter().map(|&f| off[cat.dom(f)] + x.restrict(e, f)).collect();
            }
        }
        closed_subsets(n, &principal_closures(n, &succ))
            .into_iter()
            .map(|bits| Subpresheaf::from_predicate(x, |a, e| bits.contains(off[a] + e)))
            .collect()
    }

    /// The subpresheaf as a presheaf in its own right, with its inclusion.
    pub fn to_presheaf(&self, x: &Arc<Presheaf>) -> (Arc<Presheaf>, Morphism) {
        let cat = x.category().clone();
        let elems: Vec<Vec<usize>> = cat.objects().map(|a| self.elements(a)).collect();
        let sizes = elems.iter().map(Vec::len).collect();
        let restrict = cat
            .arrows()
            .map(|f| {
                elems[cat.cod(f)]
                    .iter()
                    .map(|&e| elems[cat.dom(f)].binary_search(&x.restrict(e, f)).expect("closed under restriction"))
                    .collect()
            })
            .collect();
        let labels = cat.objects().map(|a| elems[a].iter().map(|&e| x.label(a, e).to_string()).collect()).collect();
        let sub = Arc::new(Presheaf::new_unchecked(cat, sizes, restrict).relabel(labels).expect("label shape"));
        let incl = Morphism::new_unchecked(sub.clone(), x.clone(), elems);
        (sub, incl)
    }
}

trait CollectSet {
    fn collect_set(self, len: usize) -> FixedBitSet;
}

impl<I: Iterator<Item = usize>> CollectSet for I {
    fn collect_set(self, len: usize) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(len);
        self.for_each(|i| s.insert(i));
        s
    }
}

/// `∀_F A ⊆ X` for `F: Y → X` and `A ⊆ Y`: `x` belongs when every `(f, y)` with `F(y) = x·f`
/// has `y ∈ A`.
pub fn forall_along(f: &Morphism, a: &Subpresheaf) -> Subpresheaf {
    let (y, x) = (f.src(), f.dst());
    let cat = x.category();
    Subpresheaf::from_predicate(x, |o, e| {
        cat.arrows_into(o).iter().all(|&g| {
            let b = cat.dom(g);
            let target = x.restrict(e, g);
            (0..y.size(b)).all(|w| f.apply(b, w) != target || a.contains(b, w))
        })
    })
}

/// `F = inclusion ∘ cover` with `cover` componentwise surjective.
#[derive(Debug, Clone)]
pub struct ImageFactorization {
    pub image: Subpresheaf,
    pub image_presheaf: Arc<Presheaf>,
    pub cover: Morphism,
    pub inclusion: Morphism,
}

pub fn image_factorization(f: &Morphism) -> ImageFactorization {
    let image = Subpresheaf::image(f, &Subpresheaf::top(f.src()));
    let (image_presheaf, inclusion) = image.to_presheaf(f.dst());
    let comp = f
        .components()
        .iter()
        .enumerate()
        .map(|(a, c)| {
            let elems = image.elements(a);
            c.iter().map(|y| elems.binary_search(y).expect("in the image")).collect()
        })
        .collect();
    let cover = Morphism::new_unchecked(f.src().clone(), image_presheaf.clone(), comp);
    ImageFactorization { image, image_presheaf, cover, inclusion }
}
