//! The free presheaf `π_!` on a family of objects and its right adjoint `π*`, with the
//! covering squares and dependent products built from them.

use std::collections::HashMap;
use std::sync::Arc;

use super::{natural_maps, Morphism, Presheaf, PshError, SmallnessClass};
use crate::category::{Arr, FiniteCategory, Obj};

/// A finite set with a map to the objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub anchor: Vec<Obj>,
    pub labels: Vec<String>,
}

impl Family {
    pub fn new(anchor: Vec<Obj>) -> Family {
        let labels = (0..anchor.len()).map(|i| i.to_string()).collect();
        Family { anchor, labels }
    }

    pub fn len(&self) -> usize {
        self.anchor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchor.is_empty()
    }
}

/// `π_!B`: at `a`, pairs `(b, f: a → σ(b))`; `(b, f)·g = (b, f∘g)`.
#[derive(Debug, Clone)]
pub struct Shriek {
    pub family: Family,
    pub presheaf: Arc<Presheaf>,
    elems: Vec<Vec<(usize, Arr)>>,
    index: HashMap<(usize, Arr), usize>,
}

impl Shriek {
    /// `(b, f)` at `dom f`.
    pub fn element(&self, b: usize, f: Arr) -> usize {
        self.index[&(b, f)]
    }

    pub fn pair(&self, a: Obj, e: usize) -> (usize, Arr) {
        self.elems[a][e]
    }
}

pub fn pi_shriek(cat: &Arc<FiniteCategory>, family: &Family) -> Shriek {
    let mut elems: Vec<Vec<(usize, Arr)>> = vec![Vec::new(); cat.num_objects()];
    let mut index = HashMap::new();
    for (b, &anchor) in family.anchor.iter().enumerate() {
        for &f in cat.arrows_into(anchor) {
            let a = cat.dom(f);
            index.insert((b, f), elems[a].len());
            elems[a].push((b, f));
        }
    }
    let sizes = elems.iter().map(Vec::len).collect();
    let restrict = cat
        .arrows()
        .map(|g| elems[cat.cod(g)].iter().map(|&(b, f)| index[&(b, cat.compose(f, g))]).collect())
        .collect();
    let labels = elems
        .iter()
        .map(|row| row.iter().map(|&(b, f)| format!("({},{})", family.labels[b], cat.arrow_name(f))).collect())
        .collect();
    let presheaf =
        Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict).relabel(labels).expect("label shape"));
    Shriek { family: family.clone(), presheaf, elems, index }
}

/// `π*Y`: every element `(a, y)` anchored at `a`.
pub fn pi_star(y: &Presheaf) -> (Family, Vec<(Obj, usize)>) {
    let cat = y.category();
    let mut elems = Vec::new();
    let mut anchor = Vec::new();
    let mut labels = Vec::new();
    for a in cat.objects() {
        for e in 0..y.size(a) {
            elems.push((a, e));
            anchor.push(a);
            labels.push(format!("{}:{}", cat.object_name(a), y.label(a, e)));
        }
    }
    (Family { anchor, labels }, elems)
}

/// Counit `π_!π*Y → Y`, `((a, y), f) ↦ y·f`.
pub fn counit(y: &Arc<Presheaf>) -> (Shriek, Morphism) {
    let cat = y.category();
    let (family, elems) = pi_star(y);
    let sh = pi_shriek(cat, &family);
    let comp = cat.objects().map(|a| sh.elems[a].iter().map(|&(b, f)| y.restrict(elems[b].1, f)).collect()).collect();
    let m = Morphism::new_unchecked(sh.presheaf.clone(), y.clone(), comp);
    (sh, m)
}

/// `L ↦ (b ↦ L(b, id))`.
pub fn transpose(sh: &Shriek, l: &Morphism) -> Vec<usize> {
    let cat = sh.presheaf.category();
    sh.family.anchor.iter().enumerate().map(|(b, &a)| l.apply(a, sh.element(b, cat.id(a)))).collect()
}

/// `h ↦ ((b, f) ↦ h(b)·f)`, where `h(b) ∈ Y(σ b)`.
pub fn untranspose(sh: &Shriek, y: &Arc<Presheaf>, h: &[usize]) -> Result<Morphism, PshError> {
    let cat = y.category();
    if h.len() != sh.family.len() {
        return Err(PshError::WrongShape { what: "family map".into(), expected: sh.family.len(), found: h.len() });
    }
    for (b, &e) in h.iter().enumerate() {
        let a = sh.family.anchor[b];
        if e >= y.size(a) {
            return Err(PshError::ElementNotInFiber { object: cat.object_name(a).into(), element: e });
        }
    }
    let comp = cat.objects().map(|a| sh.elems[a].iter().map(|&(b, f)| y.restrict(h[b], f)).collect()).collect();
    Ok(Morphism::new_unchecked(sh.presheaf.clone(), y.clone(), comp))
}

/// `(r, s)_!: π_!B → π_!A`, `(b, f) ↦ (r b, s_b∘f)`.
pub fn shriek_map(src: &Shriek, dst: &Shriek, r: &[usize], s: &[Arr]) -> Result<Morphism, PshError> {
    let cat = src.presheaf.category();
    let n = src.family.len();
    if r.len() != n || s.len() != n {
        return Err(PshError::WrongShape { what: "(r, s)".into(), expected: n, found: r.len().min(s.len()) });
    }
    for b in 0..n {
        if r[b] >= dst.family.len() {
            return Err(PshError::ShapeMismatch { at: b, detail: format!("r({b}) is out of range") });
        }
        if s[b] >= cat.num_arrows() {
            return Err(PshError::ShapeMismatch { at: b, detail: format!("s({b}) is not an arrow") });
        }
        if cat.dom(s[b]) != src.family.anchor[b] {
            return Err(PshError::ShapeMismatch { at: b, detail: "dom s(b) differs from the anchor of b".into() });
        }
        if cat.cod(s[b]) != dst.family.anchor[r[b]] {
            return Err(PshError::ShapeMismatch { at: b, detail: "cod s(b) differs from the anchor of r(b)".into() });
        }
    }
    let comp = cat
        .objects()
        .map(|a| src.elems[a].iter().map(|&(b, f)| dst.element(r[b], cat.compose(s[b], f))).collect())
        .collect();
    Ok(Morphism::new_unchecked(src.presheaf.clone(), dst.presheaf.clone(), comp))
}

/// Whether the commuting square `right∘top = bottom∘left` has a componentwise surjective
/// comparison map into the pullback. Errors when the square does not commute.
pub fn quasi_pullback(top: &Morphism, left: &Morphism, right: &Morphism, bottom: &Morphism) -> Result<bool, PshError> {
    if right.after(top)? != bottom.after(left)? {
        return Err(PshError::ShapeMismatch { at: 0, detail: "square does not commute".into() });
    }
    let cat = top.src().category();
    Ok(cat.objects().all(|a| {
        let hit: std::collections::HashSet<(usize, usize)> =
            (0..top.src().size(a)).map(|d| (top.apply(a, d), left.apply(a, d))).collect();
        (0..right.src().size(a)).all(|b| {
            (0..bottom.src().size(a)).all(|c| right.apply(a, b) != bottom.apply(a, c) || hit.contains(&(b, c)))
        })
    }))
}

/// The square built from a small `F: Z → Y` and `L: π_!B → Y`:
///
/// ```text
/// π_!C --top--> Z
///   |(k,l)_!    | F
///   v           v
/// π_!B ---L---> Y
/// ```
#[derive(Debug, Clone)]
pub struct CoveringSquare {
    pub c: Shriek,
    /// `(b, f, z)` for each element of `C`, anchored at `dom f`
    pub entries: Vec<(usize, Arr, usize)>,
    pub k: Vec<usize>,
    pub l: Vec<Arr>,
    pub kl: Morphism,
    pub top: Morphism,
    pub quasi_pullback: bool,
    /// Bound on the fibres of `k`: the bound on `F` times the largest number of arrows into an object.
    pub k_class: SmallnessClass,
    pub k_small: bool,
}

pub fn cover_by_shriek(
    f: &Morphism,
    b: &Shriek,
    l: &Morphism,
    class: SmallnessClass,
) -> Result<CoveringSquare, PshError> {
    class.check(f)?;
    let (z, y) = (f.src(), f.dst());
    if **l.src() != *b.presheaf || **l.dst() != **y {
        return Err(PshError::ShapeMismatch { at: 0, detail: "L must map π_!B into the codomain of F".into() });
    }
    let cat = y.category();
    let mut entries = Vec::new();
    for (bi, &anchor) in b.family.anchor.iter().enumerate() {
        for &g in cat.arrows_into(anchor) {
            let d = cat.dom(g);
            let target = l.apply(d, b.element(bi, g));
            for e in 0..z.size(d) {
                if f.apply(d, e) == target {
                    entries.push((bi, g, e));
                }
            }
        }
    }
    let family = Family {
        anchor: entries.iter().map(|&(_, g, _)| cat.dom(g)).collect(),
        labels: entries
            .iter()
            .map(|&(bi, g, e)| format!("({},{},{})", b.family.labels[bi], cat.arrow_name(g), z.label(cat.dom(g), e)))
            .collect(),
    };
    let c = pi_shriek(cat, &family);
    let k: Vec<usize> = entries.iter().map(|e| e.0).collect();
    let ls: Vec<Arr> = entries.iter().map(|e| e.1).collect();
    let kl = shriek_map(&c, b, &k, &ls)?;
    let comp = cat.objects().map(|a| c.elems[a].iter().map(|&(i, h)| z.restrict(entries[i].2, h)).collect()).collect();
    let top = Morphism::new_unchecked(c.presheaf.clone(), z.clone(), comp);
    let quasi_pullback = quasi_pullback(&top, &kl, f, l)?;
    let k_class = SmallnessClass { bound: class.bound.map(|n| n * cat.max_cod_fiber()) };
    let k_small = k_class.is_small_function(&k, b.family.len());
    Ok(CoveringSquare { c, entries, k, l: ls, kl, top, quasi_pullback, k_class, k_small })
}

/// `Y^M_x = {(f, y) : cod f = a, F(y) = x·f}` as a presheaf: at `b` the pairs with
/// `dom f = b`, and `(f, y)·g = (f∘g, y·g)`.
#[derive(Debug, Clone)]
pub struct MFiber {
    pub at: Obj,
    pub x: usize,
    pub presheaf: Arc<Presheaf>,
    pub pairs: Vec<Vec<(Arr, usize)>>,
    index: HashMap<(Arr, usize), usize>,
}

impl MFiber {
    /// Position of `(f, y)` within the fibre at `dom f`.
    pub fn position(&self, f: Arr, y: usize) -> Option<usize> {
        self.index.get(&(f, y)).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn m_fiber(f: &Morphism, a: Obj, x: usize) -> Result<MFiber, PshError> {
    let (y, xs) = (f.src(), f.dst());
    let cat = y.category();
    if a >= cat.num_objects() || x >= xs.size(a) {
        return Err(PshError::ElementNotInFiber {
            object: if a < cat.num_objects() { cat.object_name(a).into() } else { a.to_string() },
            element: x,
        });
    }
    let mut pairs: Vec<Vec<(Arr, usize)>> = vec![Vec::new(); cat.num_objects()];
    let mut index = HashMap::new();
    for &g in cat.arrows_into(a) {
        let b = cat.dom(g);
        let target = xs.restrict(x, g);
        for e in 0..y.size(b) {
            if f.apply(b, e) == target {
                index.insert((g, e), pairs[b].len());
                pairs[b].push((g, e));
            }
        }
    }
    let sizes = pairs.iter().map(Vec::len).collect();
    let restrict = cat
        .arrows()
        .map(|h| pairs[cat.cod(h)].iter().map(|&(g, e)| index[&(cat.compose(g, h), y.restrict(e, h))]).collect())
        .collect();
    let labels = pairs
        .iter()
        .map(|row| row.iter().map(|&(g, e)| format!("({},{})", cat.arrow_name(g), y.label(cat.dom(g), e))).collect())
        .collect();
    let presheaf =
        Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict).relabel(labels).expect("label shape"));
    Ok(MFiber { at: a, x, presheaf, pairs, index })
}

/// `Π_F(G) → X`: over `x ∈ X(a)`, the natural `s` on `Y^M_x` with `G(s(f, y)) = y`.
#[derive(Debug, Clone)]
pub struct PiFunctor {
    pub presheaf: Arc<Presheaf>,
    pub projection: Morphism,
    /// `(x, s)` per element, with `s` given per object over the positions of `Y^M_x`
    pub entries: Vec<Vec<(usize, Vec<Vec<usize>>)>>,
}

pub fn pi_functor(f: &Morphism, g: &Morphism, class: SmallnessClass) -> Result<PiFunctor, PshError> {
    class.check(f)?;
    if **g.dst() != **f.src() {
        return Err(PshError::ShapeMismatch { at: 0, detail: "G must land in the domain of F".into() });
    }
    let (presheaf, projection, entries) =
        dependent_sections(f, g.src(), |mf, b, p, v| g.apply(b, v) == mf.pairs[b][p].1)?;
    Ok(PiFunctor { presheaf, projection, entries })
}

/// Over `x ∈ X(a)`, the natural maps `s: Y^M_x → target` allowed by the predicate, as a presheaf
/// over `X` with `(x, s)·h = (x·h, (g, y) ↦ s(h∘g, y))`.
#[allow(clippy::type_complexity)]
pub(crate) fn dependent_sections<P>(
    f: &Morphism,
    target: &Arc<Presheaf>,
    allowed: P,
) -> Result<(Arc<Presheaf>, Morphism, Vec<Vec<(usize, Vec<Vec<usize>>)>>), PshError>
where
    P: Fn(&MFiber, Obj, usize, usize) -> bool,
{
    let x = f.dst();
    let cat = x.category();
    let fibres: Vec<Vec<MFiber>> = cat
        .objects()
        .map(|a| (0..x.size(a)).map(|e| m_fiber(f, a, e)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut entries: Vec<Vec<(usize, Vec<Vec<usize>>)>> = vec![Vec::new(); cat.num_objects()];
    let mut index: Vec<HashMap<(usize, Vec<Vec<usize>>), usize>> = vec![HashMap::new(); cat.num_objects()];
    for a in cat.objects() {
        for (e, mf) in fibres[a].iter().enumerate() {
            for s in natural_maps(&mf.presheaf, target, |b, p, v| allowed(mf, b, p, v)) {
                index[a].insert((e, s.clone()), entries[a].len());
                entries[a].push((e, s));
            }
        }
    }
    let restrict: Vec<Vec<usize>> = cat
        .arrows()
        .map(|h| {
            let (c, a) = (cat.dom(h), cat.cod(h));
            entries[a]
                .iter()
                .map(|(e, s)| {
                    let e2 = x.restrict(*e, h);
                    let src = &fibres[a][*e];
                    let dst = &fibres[c][e2];
                    let s2: Vec<Vec<usize>> = dst
                        .pairs
                        .iter()
                        .enumerate()
                        .map(|(o, row)| {
                            row.iter()
                                .map(|&(k, w)| {
                                    let p = src.position(cat.compose(h, k), w).expect("restricted pair lies in Y^M_x");
                                    s[o][p]
                                })
                                .collect()
                        })
                        .collect();
                    index[c][&(e2, s2)]
                })
                .collect()
        })
        .collect();
    let sizes = entries.iter().map(Vec::len).collect();
    let presheaf = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
    let comp = entries.iter().map(|row| row.iter().map(|(e, _)| *e).collect()).collect();
    let projection = Morphism::new_unchecked(presheaf.clone(), x.clone(), comp);
    Ok((presheaf, projection, entries))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{all_morphisms, Subpresheaf};
    use super::*;

    #[test]
    fn shriek_of_a_point() {
        let c = chain2();
        let sh = pi_shriek(&c, &Family::new(vec![1]));
        assert!(sh.presheaf.is_isomorphic(&Presheaf::representable(c.clone(), 1)));
        let p = point();
        let sh = pi_shriek(&p, &Family::new(vec![0, 0, 0]));
        assert_eq!(sh.presheaf.sizes(), &[3]);
    }

    #[test]
    fn counit_is_a_small_cover() {
        let c = chain2();
        let y = Arc::new(on_chain(&c, 1, 2, vec![0, 0]));
        let (_, eps) = counit(&y);
        assert!(eps.is_componentwise_surjective());
        // over * ∈ Y(0): ((0,*), id_0), ((1,p), u), ((1,q), u)
        assert_eq!(eps.max_fiber(), 3);
        assert!(SmallnessClass::UNBOUNDED.is_small(&eps));
        assert!(!SmallnessClass::bounded(2).is_small(&eps));
    }

    #[test]
    fn adjunction_bijection() {
        let c = chain2();
        let y = Arc::new(on_chain(&c, 2, 2, vec![0, 1]));
        let fam = Family::new(vec![1, 0]);
        let sh = pi_shriek(&c, &fam);
        let homs = all_morphisms(&sh.presheaf, &y);
        assert_eq!(homs.len(), y.size(1) * y.size(0));
        for l in &homs {
            assert_eq!(&untranspose(&sh, &y, &transpose(&sh, l)).unwrap(), l);
        }
    }

    #[test]
    fn shriek_maps() {
        let c = point();
        let b = pi_shriek(&c, &Family::new(vec![0, 0]));
        let a = pi_shriek(&c, &Family::new(vec![0]));
        let m = shriek_map(&b, &a, &[0, 0], &[0, 0]).unwrap();
        assert!(!SmallnessClass::bounded(1).is_small(&m));
        assert!(m.is_componentwise_surjective());
        let id = shriek_map(&b, &b, &[0, 1], &[0, 0]).unwrap();
        assert_eq!(id, Morphism::identity(b.presheaf.clone()));

        let ch = chain2();
        let b = pi_shriek(&ch, &Family::new(vec![0]));
        let a = pi_shriek(&ch, &Family::new(vec![1]));
        assert!(matches!(shriek_map(&b, &a, &[0], &[0]), Err(PshError::ShapeMismatch { at: 0, .. })));
        assert!(shriek_map(&b, &a, &[0], &[1]).is_ok());
    }

    #[test]
    fn covering_square_from_counit() {
        let c = chain2();
        let y = Arc::new(on_chain(&c, 1, 2, vec![0, 0]));
        let z = Arc::new(on_chain(&c, 2, 3, vec![0, 1, 1]));
        let f = Morphism::new(z, y.clone(), vec![vec![0, 0], vec![0, 1, 1]]).unwrap();
        let (sh, eps) = counit(&y);
        let sq = cover_by_shriek(&f, &sh, &eps, SmallnessClass::bounded(2)).unwrap();
        assert!(sq.quasi_pullback && sq.k_small);
        assert!(matches!(cover_by_shriek(&f, &sh, &eps, SmallnessClass::bounded(1)), Err(PshError::NotSmall { .. })));
    }

    #[test]
    fn m_fiber_on_the_chain() {
        let c = chain2();
        let y = Arc::new(on_chain(&c, 1, 1, vec![0]));
        let x = Arc::new(on_chain(&c, 1, 1, vec![0]));
        let f = Morphism::identity(y.clone());
        let f = Morphism::new(y, x, f.components().to_vec()).unwrap();
        let mf = m_fiber(&f, 1, 0).unwrap();
        let u = c.arrow_by_name("0<=1").unwrap();
        assert_eq!(mf.pairs, vec![vec![(u, 0)], vec![(c.id(1), 0)]]);
        assert!(m_fiber(&f, 1, 5).is_err());
    }

    #[test]
    fn pi_counts() {
        let p = point();
        // F: Y → X with |F⁻¹(x)| = 2, G with fibres 2 and 3 over those points
        let y = Arc::new(discrete(&p, 2));
        let x = Arc::new(discrete(&p, 1));
        let b = Arc::new(discrete(&p, 5));
        let f = Morphism::new(y.clone(), x, vec![vec![0, 0]]).unwrap();
        let g = Morphism::new(b, y, vec![vec![0, 0, 1, 1, 1]]).unwrap();
        let pi = pi_functor(&f, &g, SmallnessClass::UNBOUNDED).unwrap();
        assert_eq!(pi.presheaf.sizes(), &[6]);
        let iso = Morphism::identity(g.src().clone());
        let pi = pi_functor(&g, &iso, SmallnessClass::UNBOUNDED).unwrap();
        assert!(pi.projection.is_iso());
        let _ = Subpresheaf::top(&pi.presheaf);
    }
}
