//! Exhaustive and seeded generators for test inputs.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::arrows::ArrowSet;
use crate::category::{poset_as_category, validate_category, ArrowDecl, FiniteCategory, PosetDecl, RawCategory};
use crate::coverage::{
    all_sieves, dense_topology, generate_topology, trivial_topology, validate_topology, Presentation, Topology,
};
use crate::names::{Formula, Term};
use crate::psh::{Presheaf, Subpresheaf};

/// Every partial order on the elements `0..n`, as closed relations.
pub fn posets(n: usize) -> Vec<PosetDecl> {
    let elements: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|q| (0..n).filter(move |&p| p != q).map(move |p| (q, p))).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let mut rel = vec![vec![false; n]; n];
        (0..n).for_each(|i| rel[i][i] = true);
        for (i, &(q, p)) in pairs.iter().enumerate() {
            rel[q][p] = mask >> i & 1 == 1;
        }
        let antisymmetric = (0..n).all(|q| (0..n).all(|p| q == p || !(rel[q][p] && rel[p][q])));
        let transitive = (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| !(rel[a][b] && rel[b][c]) || rel[a][c])));
        if antisymmetric && transitive {
            let leq = (0..n)
                .flat_map(|q| (0..n).map(move |p| (q, p)))
                .filter(|&(q, p)| rel[q][p])
                .map(|(q, p)| (elements[q].clone(), elements[p].clone()))
                .collect();
            out.push(PosetDecl { elements: elements.clone(), leq });
        }
    }
    out
}

/// Poset categories for every partial order with at most `max` elements.
pub fn poset_categories(max: usize) -> Vec<Arc<FiniteCategory>> {
    (1..=max).flat_map(posets).map(|p| Arc::new(poset_as_category(&p).expect("generated partial order"))).collect()
}

/// Categories with at most `max_objects` objects and `max_arrows` arrows, one per isomorphism
/// class of composition tables.
pub fn small_categories(max_objects: usize, max_arrows: usize) -> Vec<Arc<FiniteCategory>> {
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for n in 1..=max_objects {
        for k in 0..=max_arrows.saturating_sub(n) {
            let total = n + k;
            // arrows 0..n are identities, n.. are the others; endpoints are chosen in sorted order
            for ends in endpoint_choices(n, k) {
                let dom: Vec<usize> = (0..n).chain(ends.iter().map(|e| e.0)).collect();
                let cod: Vec<usize> = (0..n).chain(ends.iter().map(|e| e.1)).collect();
                let open: Vec<(usize, usize)> = (n..total)
                    .flat_map(|g| (n..total).map(move |f| (g, f)))
                    .filter(|&(g, f)| cod[f] == dom[g])
                    .collect();
                let options: Vec<Vec<usize>> = open
                    .iter()
                    .map(|&(g, f)| (0..total).filter(|&h| dom[h] == dom[f] && cod[h] == cod[g]).collect())
                    .collect();
                if options.iter().any(Vec::is_empty) {
                    continue;
                }
                let count: usize = options.iter().map(Vec::len).product();
                for mut code in 0..count {
                    let mut table = vec![usize::MAX; total * total];
                    for f in 0..total {
                        for g in 0..total {
                            if cod[f] == dom[g] {
                                if g < n {
                                    table[g * total + f] = f;
                                } else if f < n {
                                    table[g * total + f] = g;
                                }
                            }
                        }
                    }
                    for (i, &(g, f)) in open.iter().enumerate() {
                        table[g * total + f] = options[i][code % options[i].len()];
                        code /= options[i].len();
                    }
                    if !associative(&table, total, &dom, &cod) {
                        continue;
                    }
                    if !seen.insert(canonical(&table, n, total, &dom, &cod)) {
                        continue;
                    }
                    out.push(Arc::new(build(&table, n, total, &dom, &cod)));
                }
            }
        }
    }
    out
}

fn endpoint_choices(n: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    let ends: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<(usize, usize)>| {
                let last = prefix.last().copied();
                ends.iter()
                    .filter(move |&&e| last.is_none_or(|l| l <= e))
                    .map(move |&e| [prefix.clone(), vec![e]].concat())
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

fn associative(table: &[usize], total: usize, dom: &[usize], cod: &[usize]) -> bool {
    for f in 0..total {
        for g in (0..total).filter(|&g| dom[g] == cod[f]) {
            for h in (0..total).filter(|&h| dom[h] == cod[g]) {
                let hg = table[h * total + g];
                let gf = table[g * total + f];
                if table[hg * total + f] != table[h * total + gf] {
                    return false;
                }
            }
        }
    }
    true
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    permutations(n - 1)
        .into_iter()
        .flat_map(|p| {
            (0..n).map(move |i| {
                let mut q = p.clone();
                q.insert(i, n - 1);
                q
            })
        })
        .collect()
}

/// Least relabelling of the table over all permutations of objects and of non-identity arrows.
fn canonical(table: &[usize], n: usize, total: usize, dom: &[usize], cod: &[usize]) -> Vec<usize> {
    let k = total - n;
    let mut best: Option<Vec<usize>> = None;
    for po in permutations(n) {
        for pa in permutations(k) {
            // new index of each arrow
            let map = |a: usize| if a < n { po[a] } else { n + pa[a - n] };
            let mut key = vec![0; total * 2 + total * total];
            for a in 0..total {
                key[map(a) * 2] = po[dom[a]];
                key[map(a) * 2 + 1] = po[cod[a]];
            }
            for g in 0..total {
                for f in 0..total {
                    let v = table[g * total + f];
                    key[total * 2 + map(g) * total + map(f)] = if v == usize::MAX { usize::MAX } else { map(v) };
                }
            }
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
    }
    best.expect("at least one permutation")
}

fn build(table: &[usize], n: usize, total: usize, dom: &[usize], cod: &[usize]) -> FiniteCategory {
    let obj = |a: usize| ["a", "b", "c", "d"].get(a).map(|s| s.to_string()).unwrap_or_else(|| format!("o{a}"));
    let name = |f: usize| if f < n { format!("id_{}", obj(f)) } else { format!("f{}", f - n) };
    let mut raw = RawCategory { objects: (0..n).map(obj).collect(), ..Default::default() };
    for f in 0..total {
        raw.arrows.push(ArrowDecl { name: name(f), dom: obj(dom[f]), cod: obj(cod[f]) });
    }
    raw.identities = (0..n).map(|a| (obj(a), name(a))).collect();
    for g in 0..total {
        for f in 0..total {
            let h = table[g * total + f];
            if h != usize::MAX {
                raw.compose.push((name(g), name(f), name(h)));
            }
        }
    }
    validate_category(&raw).expect("associative tables are categories")
}

/// Every Grothendieck topology on `cat`.
pub fn all_topologies(cat: &Arc<FiniteCategory>) -> Vec<Topology> {
    let per_object: Vec<Vec<ArrowSet>> = cat.objects().map(|a| all_sieves(cat, a)).collect();
    let maximal: Vec<ArrowSet> = cat.objects().map(|a| cat.arrows_into(a).iter().copied().collect()).collect();
    let mut choices: Vec<Vec<Vec<ArrowSet>>> = vec![Vec::new()];
    for a in cat.objects() {
        let others: Vec<ArrowSet> = per_object[a].iter().copied().filter(|&s| s != maximal[a]).collect();
        let mut families = Vec::new();
        for mask in 0u64..(1 << others.len()) {
            let mut fam = vec![maximal[a]];
            fam.extend(others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &s)| s));
            families.push(fam);
        }
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                families.iter().map(move |f| [prefix.clone(), vec![f.clone()]].concat()).collect::<Vec<_>>()
            })
            .collect();
    }
    choices.into_iter().filter_map(|cov| validate_topology(cat.clone(), cov).ok()).collect()
}

/// Every presheaf with fibres of size at most `max_fibre`.
pub fn presheaves(cat: &Arc<FiniteCategory>, max_fibre: usize) -> Vec<Arc<Presheaf>> {
    let mut size_choices: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in cat.objects() {
        size_choices = size_choices
            .into_iter()
            .flat_map(|p| (0..=max_fibre).map(move |s| [p.clone(), vec![s]].concat()))
            .collect();
    }
    let mut out = Vec::new();
    for sizes in size_choices {
        let free: Vec<usize> = cat.arrows().filter(|&f| !cat.is_identity(f)).collect();
        let counts: Vec<usize> = free.iter().map(|&f| sizes[cat.dom(f)].pow(sizes[cat.cod(f)] as u32)).collect();
        let total: usize = counts.iter().product();
        for mut code in 0..total {
            let mut restrict: Vec<Vec<usize>> = cat.arrows().map(|f| (0..sizes[cat.cod(f)]).collect()).collect();
            for (i, &f) in free.iter().enumerate() {
                let mut c = code % counts[i];
                code /= counts[i];
                let (m, d) = (sizes[cat.cod(f)], sizes[cat.dom(f)]);
                restrict[f] = (0..m)
                    .map(|_| {
                        let v = c % d.max(1);
                        c /= d.max(1);
                        v
                    })
                    .collect();
            }
            if let Ok(p) = Presheaf::new(cat.clone(), sizes.clone(), restrict) {
                out.push(Arc::new(p));
            }
        }
    }
    out
}

/// Named sites used by the forcing checks.
pub fn named_sites() -> Vec<(String, Topology)> {
    let chain = |n: usize| {
        let elements: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let leq = (0..n).flat_map(|q| (q..n).map(move |p| (q.to_string(), p.to_string()))).collect();
        Arc::new(poset_as_category(&PosetDecl { elements, leq }).expect("chain"))
    };
    let point = Arc::new(crate::category::monoid_as_category("*", &["id".to_string()], &[vec![0]]).expect("point"));
    let z2 = Arc::new(
        crate::category::monoid_as_category("*", &["e".to_string(), "s".to_string()], &[vec![0, 1], vec![1, 0]])
            .expect("group"),
    );
    let vee = Arc::new(
        poset_as_category(&PosetDecl {
            elements: vec!["l".into(), "r".into(), "t".into()],
            leq: vec![
                ("l".into(), "l".into()),
                ("r".into(), "r".into()),
                ("t".into(), "t".into()),
                ("l".into(), "t".into()),
                ("r".into(), "t".into()),
            ],
        })
        .expect("vee"),
    );
    let c2 = chain(2);
    let bottom =
        Presentation { bcov: vec![vec![ArrowSet::empty()], vec![c2.arrows_into(1).iter().copied().collect()]] };
    vec![
        ("point".into(), trivial_topology(point)),
        ("z2".into(), trivial_topology(z2)),
        ("chain2-trivial".into(), trivial_topology(c2.clone())),
        ("chain2-dense".into(), dense_topology(c2.clone()).expect("poset")),
        ("chain2-bottom".into(), generate_topology(c2, bottom).expect("topology")),
        ("chain3-dense".into(), dense_topology(chain(3)).expect("poset")),
        ("vee-dense".into(), dense_topology(vee).expect("poset")),
    ]
}

/// A random formula over the variables in `scope`, binding fresh ones for quantifiers.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, scope: &mut Vec<String>) -> Formula {
    let leaf = |rng: &mut R, scope: &[String]| {
        if scope.is_empty() || rng.random_bool(0.15) {
            return if rng.random_bool(0.5) { Formula::True } else { Formula::False };
        }
        let a = Term::Var(scope.choose(rng).expect("nonempty").clone());
        let b = Term::Var(scope.choose(rng).expect("nonempty").clone());
        if rng.random_bool(0.6) {
            Formula::Mem(a, b)
        } else {
            Formula::Eq(a, b)
        }
    };
    if depth == 0 {
        return leaf(rng, scope);
    }
    let fresh = format!("v{}", scope.len());
    match rng.random_range(0..10) {
        0 => leaf(rng, scope),
        1 => Formula::And(vec![random_formula(rng, depth - 1, scope), random_formula(rng, depth - 1, scope)]),
        2 => Formula::Or(vec![random_formula(rng, depth - 1, scope), random_formula(rng, depth - 1, scope)]),
        3 => Formula::implies(random_formula(rng, depth - 1, scope), random_formula(rng, depth - 1, scope)),
        4 => Formula::not(random_formula(rng, depth - 1, scope)),
        5 | 6 => {
            let ex = rng.random_bool(0.5);
            scope.push(fresh.clone());
            let body = random_formula(rng, depth - 1, scope);
            scope.pop();
            if ex {
                Formula::ex(&fresh, body)
            } else {
                Formula::all(&fresh, body)
            }
        }
        _ if !scope.is_empty() => {
            let bound = Term::Var(scope.choose(rng).expect("nonempty").clone());
            let ex = rng.random_bool(0.5);
            scope.push(fresh.clone());
            let body = random_formula(rng, depth - 1, scope);
            scope.pop();
            if ex {
                Formula::ex_in(&fresh, bound, body)
            } else {
                Formula::all_in(&fresh, bound, body)
            }
        }
        _ => leaf(rng, scope),
    }
}

/// Every subpresheaf of every generated presheaf, paired with it.
pub fn subpresheaves(x: &Presheaf) -> Vec<Subpresheaf> {
    Subpresheaf::all(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn poset_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| posets(n).len()).collect();
        assert_eq!(counts, vec![1, 3, 19, 219]);
    }

    #[test]
    fn category_counts() {
        let one: Vec<usize> = (1..=4).map(|m| small_categories(1, m).len()).collect();
        // monoids of order at most 1, 2, 3, 4 up to isomorphism
        assert_eq!(one, vec![1, 3, 10, 45]);
        for c in small_categories(2, 4) {
            assert!(c.num_objects() <= 2 && c.num_arrows() <= 4);
        }
    }

    #[test]
    fn chain_topologies_and_presheaves() {
        let c = poset_categories(2).pop().unwrap();
        assert_eq!(c.num_arrows(), 3);
        let ts = all_topologies(&c);
        assert!(ts.iter().any(|t| t.is_trivial()));
        // X(0), X(1) in {0, 1} with a map X(1) → X(0)
        assert_eq!(presheaves(&c, 1).len(), 3);
        assert!(presheaves(&c, 2).len() > 3);
    }

    #[test]
    fn random_formulas_are_closed_over_their_scope() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut scope = vec!["p".to_string()];
            let f = random_formula(&mut rng, 3, &mut scope);
            assert!(f.free_vars().iter().all(|v| v == "p"));
        }
    }
}
