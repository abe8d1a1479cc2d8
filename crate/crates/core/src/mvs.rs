//! Multi-valued sections: subobjects `P ⊆ B` of the domain of `φ: B → A` whose composite to `A`
//! is a small cover, and the genericity condition on families of them.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::arrows::ArrowSet;
use crate::category::Obj;
use crate::coverage::Topology;
use crate::psh::{Morphism, Presheaf, PshError, SmallnessClass, Subpresheaf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    /// surjective in every component
    Pointwise,
    /// locally surjective for the topology
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum MvsError {
    #[error(transparent)]
    Psh(#[from] PshError),
    #[error("element {element} of the codomain at {object} is not covered")]
    NotACover { object: String, element: usize },
    #[error("fibre over element {element} at {object} has {size} elements")]
    NotSmall { object: String, element: usize, size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mvs {
    pub of: Morphism,
    pub carrier: Subpresheaf,
}

/// Checks that `P → A` covers in the given mode and has small fibres.
pub fn validate_mvs(
    of: &Morphism,
    carrier: &Subpresheaf,
    mode: CoverMode,
    t: &Topology,
    class: SmallnessClass,
) -> Result<(), MvsError> {
    let cat = of.dst().category();
    let a = of.dst();
    let mut hit: Vec<Vec<usize>> = cat.objects().map(|c| vec![0; a.size(c)]).collect();
    for c in cat.objects() {
        for p in carrier.elements(c) {
            hit[c][of.apply(c, p)] += 1;
        }
    }
    for c in cat.objects() {
        for x in 0..a.size(c) {
            if !class.admits(hit[c][x]) {
                return Err(MvsError::NotSmall { object: cat.object_name(c).to_string(), element: x, size: hit[c][x] });
            }
            let covered = match mode {
                CoverMode::Pointwise => hit[c][x] > 0,
                CoverMode::Local => {
                    let s: ArrowSet =
                        cat.arrows_into(c).iter().copied().filter(|&f| hit[cat.dom(f)][a.restrict(x, f)] > 0).collect();
                    t.covers(c, s)
                }
            };
            if !covered {
                return Err(MvsError::NotACover { object: cat.object_name(c).to_string(), element: x });
            }
        }
    }
    Ok(())
}

impl Mvs {
    pub fn new(
        of: &Morphism,
        carrier: Subpresheaf,
        mode: CoverMode,
        t: &Topology,
        class: SmallnessClass,
    ) -> Result<Mvs, MvsError> {
        validate_mvs(of, &carrier, mode, t, class)?;
        Ok(Mvs { of: of.clone(), carrier })
    }

    pub fn leq(&self, other: &Mvs) -> bool {
        self.carrier.leq(&other.carrier)
    }

    pub fn elements(&self) -> Vec<Vec<usize>> {
        self.of.src().category().objects().map(|c| self.carrier.elements(c)).collect()
    }
}

/// All mvss of `φ`, listed by size and then by carrier, a linear extension of inclusion.
pub fn enumerate_mvs(
    phi: &Morphism,
    mode: CoverMode,
    t: &Topology,
    class: SmallnessClass,
) -> Result<Vec<Mvs>, MvsError> {
    class.check(phi)?;
    let candidates = Subpresheaf::all(phi.src());
    let keep = crate::exec::map(&candidates, |p| validate_mvs(phi, p, mode, t, class).is_ok());
    let mut out: Vec<Mvs> = candidates
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(carrier, _)| Mvs { of: phi.clone(), carrier })
        .collect();
    out.sort_by(|p, q| p.carrier.total().cmp(&q.carrier.total()).then_with(|| p.carrier.cmp(&q.carrier)));
    Ok(out)
}

/// Members with no strictly smaller member.
pub fn minimal_mvs(all: &[Mvs]) -> Vec<Mvs> {
    all.iter().filter(|p| !all.iter().any(|q| q.leq(p) && q.carrier != p.carrier)).cloned().collect()
}

/// `Z × φ: Z × B → Z × A`, whose mvss are the mvss of `φ` over `Z`.
pub fn over(z: &Arc<Presheaf>, phi: &Morphism) -> Result<Morphism, PshError> {
    let cat = z.category();
    let src = Arc::new(Presheaf::product(z, phi.src())?);
    let dst = Arc::new(Presheaf::product(z, phi.dst())?);
    let comp = cat
        .objects()
        .map(|c| {
            let (nb, na) = (phi.src().size(c), phi.dst().size(c));
            (0..z.size(c) * nb).map(|i| (i / nb) * na + phi.apply(c, i % nb)).collect()
        })
        .collect();
    Morphism::new(src, dst, comp)
}

/// `m*Q` for `m: W → Z` and `Q` an mvs over `Z`: the pairs `(w, b)` with `(m(w), b) ∈ Q`.
pub fn pullback_mvs(m: &Morphism, q: &Mvs, phi: &Morphism) -> Result<Mvs, PshError> {
    let cat = m.src().category();
    let over_w = over(m.src(), phi)?;
    let elems: Vec<Vec<usize>> = cat
        .objects()
        .map(|c| {
            let nb = phi.src().size(c);
            (0..m.src().size(c) * nb).filter(|&i| q.carrier.contains(c, m.apply(c, i / nb) * nb + i % nb)).collect()
        })
        .collect();
    let carrier = Subpresheaf::from_elements(over_w.src(), &elems)?;
    Ok(Mvs { of: over_w, carrier })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestObject {
    pub name: String,
    #[serde(skip)]
    pub presheaf: Arc<Presheaf>,
}

/// The terminal presheaf and every representable.
pub fn index_objects(cat: &Arc<crate::category::FiniteCategory>) -> Vec<TestObject> {
    let mut out = vec![TestObject { name: "1".into(), presheaf: Arc::new(Presheaf::terminal(cat.clone())) }];
    for c in cat.objects() {
        out.push(TestObject {
            name: format!("y({})", cat.object_name(c)),
            presheaf: Arc::new(Presheaf::representable(cat.clone(), c)),
        });
    }
    out
}

/// The index objects plus every binary product of representables.
pub fn default_test_objects(cat: &Arc<crate::category::FiniteCategory>) -> Vec<TestObject> {
    let mut out = index_objects(cat);
    for c in cat.objects() {
        for d in c..cat.num_objects() {
            out.push(TestObject {
                name: format!("y({})×y({})", cat.object_name(c), cat.object_name(d)),
                presheaf: Arc::new(
                    Presheaf::product(&out[1 + c].presheaf, &out[1 + d].presheaf).expect("same category"),
                ),
            });
        }
    }
    out
}

/// One member of a family: an mvs of `φ` over an index presheaf `Y`, so `P ⊆ Y × B`.
/// Global mvss are the members indexed by the terminal presheaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub index: TestObject,
    pub mvs: Mvs,
}

impl Member {
    /// `P ⊆ B` as `1 × P ⊆ 1 × B`.
    pub fn global(m: &Mvs) -> Member {
        let cat = m.of.src().category();
        let one = Arc::new(Presheaf::terminal(cat.clone()));
        let of = over(&one, &m.of).expect("same category");
        let carrier = Subpresheaf::from_elements(of.src(), &m.elements()).expect("a copy of a subpresheaf");
        Member { index: TestObject { name: "1".into(), presheaf: one }, mvs: Mvs { of, carrier } }
    }
}

/// Every mvs of `φ` over each index object, or only the minimal ones.
pub fn indexed_family(
    phi: &Morphism,
    mode: CoverMode,
    t: &Topology,
    class: SmallnessClass,
    minimal: bool,
) -> Result<Vec<Member>, MvsError> {
    let mut out = Vec::new();
    for index in index_objects(phi.src().category()) {
        let all = enumerate_mvs(&over(&index.presheaf, phi)?, mode, t, class)?;
        let keep = if minimal { minimal_mvs(&all) } else { all };
        out.extend(keep.into_iter().map(|mvs| Member { index: index.clone(), mvs }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenericityFailure {
    pub test_object: String,
    /// the mvs over the test object that no member refines, per object
    pub counterwitness: Vec<Vec<usize>>,
    /// stage `(object, element of the test object)` where refinement fails
    pub object: String,
    pub element: usize,
}

/// Whether member `(Y, P)` refines `Q` at `z ∈ Z(d)`: some `y ∈ Y(d)` has
/// `(y·g, b) ∈ P ⇒ (z·g, b) ∈ Q` for every `g: e → d` and `b ∈ B(e)`.
fn refines_at(member: &Member, q: &Mvs, z: &Presheaf, phi: &Morphism, d: Obj, elem: usize) -> bool {
    let cat = z.category();
    let y = &member.index.presheaf;
    (0..y.size(d)).any(|yd| {
        cat.arrows_into(d).iter().all(|&g| {
            let e = cat.dom(g);
            let nb = phi.src().size(e);
            let (yg, zg) = (y.restrict(yd, g), z.restrict(elem, g));
            (0..nb).all(|b| !member.mvs.carrier.contains(e, yg * nb + b) || q.carrier.contains(e, zg * nb + b))
        })
    })
}

/// For every test object `Z`, every mvs `Q` of `φ` over `Z` and every element `z ∈ Z(d)`,
/// some member of the family refines `Q` along `z`, on a covering sieve of stages in local
/// mode and at `z` itself in pointwise mode.
pub fn check_generic(
    family: &[Member],
    phi: &Morphism,
    tests: &[TestObject],
    mode: CoverMode,
    t: &Topology,
    class: SmallnessClass,
) -> Result<(), GenericityFailure> {
    let cat = phi.dst().category();
    for test in tests {
        let z = &test.presheaf;
        let zphi = over(z, phi).expect("same category");
        let qs = enumerate_mvs(&zphi, mode, t, class).expect("products of small maps are small");
        for q in &qs {
            for d in cat.objects() {
                for elem in 0..z.size(d) {
                    let good = |e: Obj, g_elem: usize| family.iter().any(|p| refines_at(p, q, z, phi, e, g_elem));
                    let ok = match mode {
                        CoverMode::Pointwise => good(d, elem),
                        CoverMode::Local => {
                            let s: ArrowSet = cat
                                .arrows_into(d)
                                .iter()
                                .copied()
                                .filter(|&g| good(cat.dom(g), z.restrict(elem, g)))
                                .collect();
                            t.covers(d, s)
                        }
                    };
                    if !ok {
                        return Err(GenericityFailure {
                            test_object: test.name.clone(),
                            counterwitness: q.elements(),
                            object: cat.object_name(d).to_string(),
                            element: elem,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}
