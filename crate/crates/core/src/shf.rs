//! Sheaf conditions, and sheafification by the plus construction.

use std::collections::HashMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::arrows::ArrowSet;
use crate::category::{Arr, FiniteCategory, Obj};
use crate::coverage::{arrow_names, maximal, pullback, Presentation, Topology};
use crate::psh::{
    all_morphisms, natural_maps, power_object, Morphism, PowerObject, Presheaf, SmallnessClass, Subpresheaf,
};

/// A covering sieve with a compatible choice `x_f ∈ P(dom f)` for each of its arrows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompatibleFamily {
    pub at: Obj,
    pub sieve: ArrowSet,
    /// `(f, x_f)` sorted by arrow
    pub choice: Vec<(Arr, usize)>,
}

impl CompatibleFamily {
    pub fn get(&self, f: Arr) -> Option<usize> {
        self.choice.binary_search_by_key(&f, |&(g, _)| g).ok().map(|i| self.choice[i].1)
    }

    /// `(R, x)·h = (h*R, g ↦ x_{h∘g})`.
    pub fn restrict(&self, cat: &FiniteCategory, h: Arr) -> CompatibleFamily {
        let sieve = pullback(cat, self.sieve, h);
        let choice = sieve.iter().map(|g| (g, self.get(cat.compose(h, g)).expect("h∘g in the sieve"))).collect();
        CompatibleFamily { at: cat.dom(h), sieve, choice }
    }
}

/// The sieve `R` on `a` as a subpresheaf of `y(a)`: at `b`, the arrows of `R` with domain `b`.
fn sieve_presheaf(cat: &Arc<FiniteCategory>, r: ArrowSet) -> (Presheaf, Vec<Vec<Arr>>) {
    let mut elems: Vec<Vec<Arr>> = vec![Vec::new(); cat.num_objects()];
    for f in r.iter() {
        elems[cat.dom(f)].push(f);
    }
    let restrict = cat
        .arrows()
        .map(|g| {
            elems[cat.cod(g)]
                .iter()
                .map(|&f| elems[cat.dom(g)].iter().position(|&h| h == cat.compose(f, g)).expect("sieve"))
                .collect()
        })
        .collect();
    let sizes = elems.iter().map(Vec::len).collect();
    (Presheaf::new_unchecked(cat.clone(), sizes, restrict), elems)
}

/// All compatible families on covering sieves of `a`, by sieve order then choice.
pub fn compatible_families(p: &Presheaf, t: &Topology, a: Obj) -> Vec<CompatibleFamily> {
    let cat = t.category();
    let mut out = Vec::new();
    for &r in t.covering(a) {
        let (rp, elems) = sieve_presheaf(cat, r);
        for comp in natural_maps(&rp, p, |_, _, _| true) {
            let mut choice: Vec<(Arr, usize)> = cat
                .objects()
                .flat_map(|b| elems[b].iter().copied().zip(comp[b].iter().copied()).collect::<Vec<_>>())
                .collect();
            choice.sort_unstable();
            out.push(CompatibleFamily { at: a, sieve: r, choice });
        }
    }
    out
}

fn agreement(left: &CompatibleFamily, right: &CompatibleFamily) -> ArrowSet {
    left.sieve.intersection(right.sieve).iter().filter(|&f| left.get(f) == right.get(f)).collect()
}

/// `P⁺` with its quotient map and unit.
#[derive(Debug, Clone)]
pub struct Plus {
    pub presheaf: Arc<Presheaf>,
    pub families: Vec<Vec<CompatibleFamily>>,
    /// class of each family
    pub class_of: Vec<Vec<usize>>,
    /// least family of each class
    pub representatives: Vec<Vec<usize>>,
    /// `p ↦ [(M_a, f ↦ p·f)]`
    pub unit: Morphism,
}

/// `P⁺`: compatible families identified when they agree on a covering sieve.
pub fn plus(p: &Arc<Presheaf>, t: &Topology) -> Plus {
    plus_with(p, t, |a, agree| t.covered_within(a, agree))
}

/// `P⁺` with the identification tested only against basic covers.
pub fn plus_by_basis(p: &Arc<Presheaf>, t: &Topology, basis: &Presentation) -> Plus {
    plus_with(p, t, |a, agree| basis.bcov[a].iter().any(|r| r.is_subset(agree)))
}

fn plus_with(p: &Arc<Presheaf>, t: &Topology, agree_covers: impl Fn(Obj, ArrowSet) -> bool + Sync) -> Plus {
    let cat = t.category().clone();
    let objects: Vec<Obj> = cat.objects().collect();
    let families: Vec<Vec<CompatibleFamily>> = crate::exec::map(&objects, |&a| compatible_families(p, t, a));
    let partitions: Vec<(Vec<usize>, Vec<usize>)> = crate::exec::map(&objects, |&a| {
        let fams = &families[a];
        let mut uf = UnionFind::<usize>::new(fams.len());
        for i in 0..fams.len() {
            for j in i + 1..fams.len() {
                if agree_covers(a, agreement(&fams[i], &fams[j])) {
                    uf.union(i, j);
                }
            }
        }
        let mut class_of = vec![usize::MAX; fams.len()];
        let mut reps = Vec::new();
        let mut by_root: HashMap<usize, usize> = HashMap::new();
        for (i, slot) in class_of.iter_mut().enumerate() {
            let root = uf.find(i);
            *slot = *by_root.entry(root).or_insert_with(|| {
                reps.push(i);
                reps.len() - 1
            });
        }
        (class_of, reps)
    });
    let (class_of, representatives): (Vec<_>, Vec<_>) = partitions.into_iter().unzip();
    let lookup: Vec<HashMap<&CompatibleFamily, usize>> =
        families.iter().map(|fs| fs.iter().enumerate().map(|(i, f)| (f, i)).collect()).collect();
    let class_of_family = |fam: &CompatibleFamily| class_of[fam.at][lookup[fam.at][fam]];
    let restrict = cat
        .arrows()
        .map(|h| {
            representatives[cat.cod(h)]
                .iter()
                .map(|&i| class_of_family(&families[cat.cod(h)][i].restrict(&cat, h)))
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = representatives.iter().map(Vec::len).collect();
    let presheaf = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
    let comp = cat
        .objects()
        .map(|a| {
            (0..p.size(a))
                .map(|e| {
                    let m = maximal(&cat, a);
                    let choice = m.iter().map(|f| (f, p.restrict(e, f))).collect();
                    class_of_family(&CompatibleFamily { at: a, sieve: m, choice })
                })
                .collect()
        })
        .collect();
    let unit = Morphism::new_unchecked(p.clone(), presheaf.clone(), comp);
    Plus { presheaf, families, class_of, representatives, unit }
}

#[derive(Debug, Clone)]
pub struct Sheafification {
    pub first: Plus,
    pub second: Plus,
    pub sheaf: Arc<Presheaf>,
    /// `P → P⁺⁺`
    pub unit: Morphism,
}

pub fn sheafify(p: &Arc<Presheaf>, t: &Topology) -> Sheafification {
    let first = plus(p, t);
    let second = plus(&first.presheaf, t);
    let unit = second.unit.after(&first.unit).expect("composable units");
    Sheafification { sheaf: second.presheaf.clone(), first, second, unit }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniversalityFailure {
    /// components of the map `P → G` that does not factor uniquely
    pub map: Vec<Vec<usize>>,
    pub factorizations: usize,
}

impl Sheafification {
    /// Every `h: P → G` factors through the unit in exactly one way. Returns the number of
    /// maps checked.
    pub fn check_universal(&self, g: &Arc<Presheaf>) -> Result<usize, UniversalityFailure> {
        let mut counts: HashMap<Vec<Vec<usize>>, usize> = HashMap::new();
        for hbar in all_morphisms(&self.sheaf, g) {
            let h = hbar.after(&self.unit).expect("composable");
            *counts.entry(h.components().to_vec()).or_default() += 1;
        }
        let maps = all_morphisms(self.unit.src(), g);
        for h in &maps {
            let n = counts.get(h.components()).copied().unwrap_or(0);
            if n != 1 {
                return Err(UniversalityFailure { map: h.components().to_vec(), factorizations: n });
            }
        }
        Ok(maps.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum SheafWitness {
    /// two distinct elements agreeing on a covering sieve
    NotSeparated { object: String, sieve: Vec<String>, left: usize, right: usize },
    /// a compatible family with no glueing
    NoGlueing { object: String, sieve: Vec<String>, family: Vec<(String, usize)> },
}

pub fn is_separated(p: &Presheaf, t: &Topology) -> Result<(), SheafWitness> {
    let cat = t.category();
    for a in cat.objects() {
        for x in 0..p.size(a) {
            for y in x + 1..p.size(a) {
                let agree: ArrowSet =
                    cat.arrows_into(a).iter().copied().filter(|&f| p.restrict(x, f) == p.restrict(y, f)).collect();
                if t.covers(a, agree) {
                    return Err(SheafWitness::NotSeparated {
                        object: cat.object_name(a).into(),
                        sieve: arrow_names(cat, agree),
                        left: x,
                        right: y,
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn is_sheaf(p: &Presheaf, t: &Topology) -> Result<(), SheafWitness> {
    is_separated(p, t)?;
    let cat = t.category();
    for a in cat.objects() {
        for fam in compatible_families(p, t, a) {
            let glues = (0..p.size(a)).any(|x| fam.choice.iter().all(|&(f, v)| p.restrict(x, f) == v));
            if !glues {
                return Err(SheafWitness::NoGlueing {
                    object: cat.object_name(a).into(),
                    sieve: arrow_names(cat, fam.sieve),
                    family: fam.choice.iter().map(|&(f, v)| (cat.arrow_name(f).to_string(), v)).collect(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotLocallySurjective {
    pub object: String,
    pub element: usize,
}

/// Every `x ∈ X(a)` is hit after restriction along the arrows of some covering sieve.
pub fn is_locally_surjective(f: &Morphism, t: &Topology) -> Result<(), NotLocallySurjective> {
    let cat = t.category();
    let x = f.dst();
    let image = Subpresheaf::image(f, &Subpresheaf::top(f.src()));
    for a in cat.objects() {
        for e in 0..x.size(a) {
            let hit: ArrowSet =
                cat.arrows_into(a).iter().copied().filter(|&g| image.contains(cat.dom(g), x.restrict(e, g))).collect();
            if !t.covers(a, hit) {
                return Err(NotLocallySurjective { object: cat.object_name(a).into(), element: e });
            }
        }
    }
    Ok(())
}

/// The power object in sheaves: small subpresheaves of `y(c) × X` up to local agreement.
#[derive(Debug, Clone)]
pub struct SheafPowerObject {
    pub power: PowerObject,
    pub presheaf: Arc<Presheaf>,
    /// class of each element of the presheaf power object
    pub class_of: Vec<Vec<usize>>,
    pub representatives: Vec<Vec<usize>>,
    /// `(x, [A])` in `X × quotient`, `x ∈ [A]` when `{f : (f, x·f) ∈ A}` covers
    pub product: Arc<Presheaf>,
    pub membership: Subpresheaf,
}

/// `A ~ A'` at `c`: for every `(f: b → c, x) ∈ A` the sieve `{g : (f∘g, x·g) ∈ A'}` covers `b`,
/// and symmetrically.
pub fn power_equiv(po: &PowerObject, t: &Topology, c: Obj, i: usize, j: usize) -> bool {
    let half = |i: usize, j: usize| {
        let (a, b) = (&po.subsets[c][i], &po.subsets[c][j]);
        local_inclusion(po, t, a, b)
    };
    half(i, j) && half(j, i)
}

fn local_inclusion(po: &PowerObject, t: &Topology, a: &[(Arr, usize)], b: &[(Arr, usize)]) -> bool {
    let cat = t.category();
    let x = &po.of;
    a.iter().all(|&(f, e)| {
        let d = cat.dom(f);
        let s: ArrowSet = cat
            .arrows_into(d)
            .iter()
            .copied()
            .filter(|&g| b.binary_search(&(cat.compose(f, g), x.restrict(e, g))).is_ok())
            .collect();
        t.covers(d, s)
    })
}

pub fn sheaf_power_object(x: &Arc<Presheaf>, t: &Topology, class: SmallnessClass) -> SheafPowerObject {
    let cat = t.category().clone();
    let power = power_object(x, class);
    let mut class_of = Vec::new();
    let mut representatives = Vec::new();
    for c in cat.objects() {
        let n = power.presheaf.size(c);
        let mut uf = UnionFind::<usize>::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if power_equiv(&power, t, c, i, j) {
                    uf.union(i, j);
                }
            }
        }
        let mut cls = vec![0; n];
        let mut reps = Vec::new();
        let mut by_root = HashMap::new();
        for (i, slot) in cls.iter_mut().enumerate() {
            *slot = *by_root.entry(uf.find(i)).or_insert_with(|| {
                reps.push(i);
                reps.len() - 1
            });
        }
        class_of.push(cls);
        representatives.push(reps);
    }
    let restrict = cat
        .arrows()
        .map(|h| {
            representatives[cat.cod(h)].iter().map(|&i| class_of[cat.dom(h)][power.presheaf.restrict(i, h)]).collect()
        })
        .collect();
    let sizes = representatives.iter().map(Vec::len).collect();
    let presheaf = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
    let product = Arc::new(Presheaf::product(x, &presheaf).expect("same category"));
    let elems: Vec<Vec<usize>> = cat
        .objects()
        .map(|c| {
            let n = presheaf.size(c);
            (0..x.size(c))
                .flat_map(|e| {
                    let power = &power;
                    let cat = &cat;
                    representatives[c].iter().enumerate().filter_map(move |(k, &i)| {
                        let a = &power.subsets[c][i];
                        let s: ArrowSet = cat
                            .arrows_into(c)
                            .iter()
                            .copied()
                            .filter(|&f| a.binary_search(&(f, x.restrict(e, f))).is_ok())
                            .collect();
                        t.covers(c, s).then_some(e * n + k)
                    })
                })
                .collect()
        })
        .collect();
    let membership = Subpresheaf::from_elements(&product, &elems).expect("membership is closed under restriction");
    SheafPowerObject { power, presheaf, class_of, representatives, product, membership }
}
