use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topos_core::exec::{set_mode, Mode};
use topos_core::gen::{all_topologies, named_sites, presheaves, random_formula, small_categories};
use topos_core::io::{parse_presheaf, to_json, PresheafFile, UniverseDump};
use topos_core::names::{build_universe, force, parse_formula};
use topos_core::psh::{all_morphisms, Presheaf, Subpresheaf};
use topos_core::shf::{is_sheaf, sheafify};
use topos_core::{FiniteCategory, Topology};

struct Pool {
    sites: Vec<Topology>,
    presheaves: Vec<Vec<Arc<Presheaf>>>,
}

/// Every site on at most two objects and four arrows with its presheaves of fibre at most 2.
fn pool() -> &'static Pool {
    static POOL: OnceLock<Pool> = OnceLock::new();
    POOL.get_or_init(|| {
        let cats: Vec<Arc<FiniteCategory>> = small_categories(2, 4);
        let sites: Vec<Topology> = cats.iter().flat_map(all_topologies).collect();
        let presheaves = sites.iter().map(|t| presheaves(t.category(), 2)).collect();
        Pool { sites, presheaves }
    })
}

fn pick(site: usize, p: usize) -> (&'static Topology, &'static Arc<Presheaf>) {
    let pool = pool();
    let s = site % pool.sites.len();
    let ps = &pool.presheaves[s];
    (&pool.sites[s], &ps[p % ps.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subpresheaves_form_a_heyting_algebra(site in any::<usize>(), p in any::<usize>(), i in any::<usize>(), j in any::<usize>(), k in any::<usize>()) {
        let (_, x) = pick(site, p);
        let subs = Subpresheaf::all(x);
        let (a, b, c) = (&subs[i % subs.len()], &subs[j % subs.len()], &subs[k % subs.len()]);
        // c ∧ a ≤ b  iff  c ≤ (a ⇒ b)
        prop_assert_eq!(c.meet(a).leq(b), c.leq(&a.implies(x, b)));
        prop_assert!(a.meet(b).leq(a) && a.leq(&a.join(b)));
        prop_assert!(a.leq(&a.negation(x).negation(x)));
        prop_assert_eq!(a.meet(&b.join(c)), a.meet(b).join(&a.meet(c)));
    }

    #[test]
    fn sheafification_is_idempotent(site in any::<usize>(), p in any::<usize>()) {
        let (t, x) = pick(site, p);
        let once = sheafify(x, t);
        prop_assert!(is_sheaf(&once.sheaf, t).is_ok());
        let twice = sheafify(&once.sheaf, t);
        prop_assert!(twice.unit.is_iso());
        if is_sheaf(x, t).is_ok() {
            prop_assert!(once.unit.is_iso());
        }
    }

    #[test]
    fn pullback_is_right_adjoint_to_image(site in any::<usize>(), p in any::<usize>(), q in any::<usize>(), i in any::<usize>(), j in any::<usize>()) {
        let (_, x) = pick(site, p);
        let (_, y) = pick(site, q);
        let maps = all_morphisms(y, x);
        prop_assume!(!maps.is_empty());
        let f = &maps[i % maps.len()];
        let (sx, sy) = (Subpresheaf::all(x), Subpresheaf::all(y));
        let a = &sy[j % sy.len()];
        for c in &sx {
            prop_assert_eq!(Subpresheaf::image(f, a).leq(c), a.leq(&Subpresheaf::pullback(f, c)));
        }
    }

    #[test]
    fn presheaf_files_round_trip(site in any::<usize>(), p in any::<usize>()) {
        let (t, x) = pick(site, p);
        let file = PresheafFile::from_presheaf(x);
        let back = parse_presheaf(&to_json(&file), t.category()).unwrap();
        prop_assert_eq!(back.sizes(), x.sizes());
        prop_assert_eq!(PresheafFile::from_presheaf(&back), file);
    }

    #[test]
    fn printed_formulas_reparse(seed in any::<u64>(), depth in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_formula(&mut rng, depth, &mut Vec::new());
        prop_assert_eq!(parse_formula(&phi.to_string()).unwrap(), phi);
    }
}

#[test]
fn sequential_mode_gives_the_same_results() {
    let sites = named_sites();
    let run = || -> Vec<String> {
        let mut out = Vec::new();
        for (_, t) in &sites {
            let u = build_universe(t, 3);
            out.push(to_json(&UniverseDump::from_universe(&u)));
            let lem = parse_formula("(forall a (forall b (or (mem a b) (not (mem a b)))))").unwrap();
            out.push(format!("{:?}", t.category().objects().map(|c| force(&u, c, &lem).unwrap()).collect::<Vec<_>>()));
            for p in presheaves(t.category(), 1) {
                out.push(to_json(&PresheafFile::from_presheaf(&sheafify(&p, t).sheaf)));
            }
        }
        out
    };
    set_mode(Mode::Sequential);
    let sequential = run();
    set_mode(Mode::Parallel);
    assert_eq!(run(), sequential);
}

#[test]
fn classical_sites_force_excluded_middle() {
    let lem = parse_formula("(forall a (forall b (or (mem a b) (not (mem a b)))))").unwrap();
    for (name, t) in named_sites() {
        let u = build_universe(&t, 3);
        let boolean = name == "point" || name == "z2" || name.ends_with("-dense");
        let forced = t.category().objects().all(|c| force(&u, c, &lem).unwrap());
        if boolean {
            assert!(forced, "{name}");
        }
    }
    let (_, trivial) = named_sites().into_iter().find(|(n, _)| n == "chain2-trivial").unwrap();
    let u = build_universe(&trivial, 3);
    assert!(!force(&u, 1, &lem).unwrap());
}
