//! The forcing model of names: well-founded trees over a site, quotiented by cover-relative
//! bisimulation, with a Kripke–Joyal evaluator on top.
//!
//! A universe of rank `k` holds every composable, natural name of height below `k`. It is
//! built level by level: level `j` at `c` is the set of `~`-classes of subpresheaves of
//! `y(c) × V_{j-1}`, and every level is a prefix of the next one.

pub mod axioms;
pub mod force;
pub mod formula;
pub mod hf;

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::arrows::ArrowSet;
use crate::category::{Arr, FiniteCategory, Obj};
use crate::coverage::Topology;
use crate::psh::{power_object, PowerObject, Presheaf, SmallnessClass};
use crate::shf::power_equiv;

pub use axioms::{check_rst_axioms, AxiomFailure, AxiomReport, AxiomResult, AxiomStatus};
pub use force::{force, force_with};
pub use formula::{parse_formula, Formula, ParseError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum NamesError {
    #[error("names rooted at {left} and {right}")]
    RootMismatch { left: String, right: String },
    #[error("free variable {var}")]
    OpenFormula { var: String },
    #[error("unknown literal {literal}")]
    UnknownLiteral { literal: String },
    #[error("literal {literal} is rooted at {found}, evaluation is at {expected}")]
    LiteralRoot { literal: String, expected: String, found: String },
    #[error("literal {literal} does not fit in the universe of rank {rank}")]
    RankExceeded { literal: String, rank: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// `sup_c t`: members along each arrow into the root, as a sorted table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Name {
    pub root: Obj,
    /// `(f, t(f))` for arrows with a nonempty `t(f)`, sorted by arrow
    pub entries: Vec<(Arr, Vec<Name>)>,
}

impl Name {
    pub fn empty(root: Obj) -> Name {
        Name { root, entries: Vec::new() }
    }

    /// Sorts and deduplicates, dropping empty entries.
    pub fn new(root: Obj, entries: impl IntoIterator<Item = (Arr, Vec<Name>)>) -> Name {
        let mut table: std::collections::BTreeMap<Arr, Vec<Name>> = Default::default();
        for (f, members) in entries {
            table.entry(f).or_default().extend(members);
        }
        let entries = table
            .into_iter()
            .filter_map(|(f, mut m)| {
                m.sort();
                m.dedup();
                (!m.is_empty()).then_some((f, m))
            })
            .collect();
        Name { root, entries }
    }

    pub fn members(&self, f: Arr) -> &[Name] {
        match self.entries.binary_search_by_key(&f, |(g, _)| *g) {
            Ok(i) => &self.entries[i].1,
            Err(_) => &[],
        }
    }

    pub fn height(&self) -> usize {
        self.entries.iter().flat_map(|(_, m)| m).map(|v| v.height() + 1).max().unwrap_or(0)
    }

    /// `sup_c t · f = sup_d t(f∘-)`.
    pub fn restrict(&self, cat: &FiniteCategory, f: Arr) -> Name {
        let d = cat.dom(f);
        Name::new(d, cat.arrows_into(d).iter().map(|&g| (g, self.members(cat.compose(f, g)).to_vec())))
    }

    /// Every member along `f` is rooted at `dom f`, hereditarily.
    pub fn is_composable(&self, cat: &FiniteCategory) -> bool {
        self.entries
            .iter()
            .all(|(f, m)| cat.cod(*f) == self.root && m.iter().all(|v| v.root == cat.dom(*f) && v.is_composable(cat)))
    }

    /// `v ∈ t(f)` and `g` composable imply `v·g ∈ t(fg)`, hereditarily.
    pub fn is_natural(&self, cat: &FiniteCategory) -> bool {
        self.entries.iter().all(|(f, m)| {
            m.iter().all(|v| {
                v.is_natural(cat)
                    && cat
                        .arrows_into(v.root)
                        .iter()
                        .all(|&g| self.members(cat.compose(*f, g)).contains(&v.restrict(cat, g)))
            })
        })
    }
}

/// The bisimulation: for every `v ∈ t(f)` the sieve `{g : ∃v' ∈ t'(fg), v·g ~ v'}` covers, and
/// symmetrically.
pub fn names_equiv(t: &Topology, v: &Name, w: &Name) -> Result<bool, NamesError> {
    let cat = t.category();
    if v.root != w.root {
        return Err(NamesError::RootMismatch {
            left: cat.object_name(v.root).to_string(),
            right: cat.object_name(w.root).to_string(),
        });
    }
    Ok(half_equiv(t, v, w) && half_equiv(t, w, v))
}

fn half_equiv(t: &Topology, v: &Name, w: &Name) -> bool {
    let cat = t.category();
    v.entries.iter().all(|(f, members)| {
        members.iter().all(|m| {
            let d = m.root;
            let s: ArrowSet = cat
                .arrows_into(d)
                .iter()
                .copied()
                .filter(|&g| {
                    let mg = m.restrict(cat, g);
                    w.members(cat.compose(*f, g)).iter().any(|m2| names_equiv(t, &mg, m2).unwrap_or(false))
                })
                .collect();
            t.covers(d, s)
        })
    })
}

/// Names of height below `rank`, up to `~`.
#[derive(Debug, Clone)]
pub struct Universe {
    pub topology: Topology,
    pub rank: usize,
    /// `V_rank` with its restriction maps
    pub presheaf: Arc<Presheaf>,
    /// carrier sizes of `V_0, …, V_rank`
    pub level_sizes: Vec<Vec<usize>>,
    /// canonical member table of each class: pairs `(f, class at dom f)` in `V_{rank-1}`, sorted
    pub representatives: Vec<Vec<Vec<(Arr, usize)>>>,
    /// every subpresheaf of `y(c) × V_{rank-1}`
    power: Option<PowerObject>,
    /// class of each element of `power` at each object
    class_of: Vec<Vec<usize>>,
    /// `mem[c][w]` holds the `v` with `c ⊩ v ε w`
    mem: Vec<Vec<FixedBitSet>>,
}

pub fn build_universe(t: &Topology, rank: usize) -> Universe {
    let cat = t.category().clone();
    let n = cat.num_objects();
    let mut v = Arc::new(Presheaf::empty(cat.clone()));
    let mut reps: Vec<Vec<Vec<(Arr, usize)>>> = vec![Vec::new(); n];
    let mut level_sizes = vec![vec![0; n]];
    let mut power = None;
    let mut class_of = vec![Vec::new(); n];
    for _ in 0..rank {
        let po = power_object(&v, SmallnessClass::UNBOUNDED);
        let per_object: Vec<(Vec<usize>, Vec<Vec<(Arr, usize)>>)> = crate::exec::map_range(n, |c| {
            let m = po.presheaf.size(c);
            let mut uf = UnionFind::<usize>::new(m);
            for i in 0..m {
                for j in i + 1..m {
                    if uf.find(i) != uf.find(j) && power_equiv(&po, t, c, i, j) {
                        uf.union(i, j);
                    }
                }
            }
            let mut by_root: HashMap<usize, usize> = HashMap::new();
            let mut next = reps[c].clone();
            for (k, rep) in reps[c].iter().enumerate() {
                let i = po.index_of(c, rep).expect("lower classes reappear");
                let prev = by_root.insert(uf.find(i), k);
                assert!(prev.is_none(), "distinct lower classes were identified");
            }
            let cls = (0..m)
                .map(|i| {
                    *by_root.entry(uf.find(i)).or_insert_with(|| {
                        next.push(po.subsets[c][i].clone());
                        next.len() - 1
                    })
                })
                .collect();
            (cls, next)
        });
        let (cls, next): (Vec<_>, Vec<_>) = per_object.into_iter().unzip();
        let restrict = cat
            .arrows()
            .map(|h| {
                let d = cat.dom(h);
                next[cat.cod(h)]
                    .iter()
                    .map(|rep| cls[d][po.presheaf.restrict(po.index_of(cat.cod(h), rep).expect("rep"), h)])
                    .collect()
            })
            .collect();
        let sizes: Vec<usize> = next.iter().map(Vec::len).collect();
        level_sizes.push(sizes.clone());
        v = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
        reps = next;
        class_of = cls;
        power = Some(po);
    }
    let mut u = Universe {
        topology: t.clone(),
        rank,
        presheaf: v,
        level_sizes,
        representatives: reps,
        power,
        class_of,
        mem: Vec::new(),
    };
    u.mem = cat
        .objects()
        .map(|c| {
            (0..u.size(c))
                .map(|w| {
                    let mut bits = FixedBitSet::with_capacity(u.size(c));
                    for x in 0..u.size(c) {
                        if u.compute_mem(c, x, w) {
                            bits.insert(x);
                        }
                    }
                    bits
                })
                .collect()
        })
        .collect();
    u
}

impl Universe {
    pub fn category(&self) -> &Arc<FiniteCategory> {
        self.topology.category()
    }

    pub fn size(&self, c: Obj) -> usize {
        self.presheaf.size(c)
    }

    pub fn sizes(&self) -> &[usize] {
        self.presheaf.sizes()
    }

    /// Level of a class: the least `j` with the class in `V_j`.
    pub fn level(&self, c: Obj, v: usize) -> usize {
        self.level_sizes.iter().position(|s| v < s[c]).unwrap_or(self.rank)
    }

    pub fn restrict(&self, v: usize, f: Arr) -> usize {
        self.presheaf.restrict(v, f)
    }

    /// `{f : (f, v·f) ∈ t_w}` covers `c`.
    fn compute_mem(&self, c: Obj, v: usize, w: usize) -> bool {
        let cat = self.category();
        let rep = &self.representatives[c][w];
        let s: ArrowSet = cat
            .arrows_into(c)
            .iter()
            .copied()
            .filter(|&f| rep.binary_search(&(f, self.restrict(v, f))).is_ok())
            .collect();
        self.topology.covers(c, s)
    }

    /// `c ⊩ v ε w`.
    pub fn mem(&self, c: Obj, v: usize, w: usize) -> bool {
        self.mem[c][w].contains(v)
    }

    /// Classes `v` with `c ⊩ v ε w`.
    pub fn members(&self, c: Obj, w: usize) -> Vec<usize> {
        self.mem[c][w].ones().collect()
    }

    /// `c ⊩ v = w`: the sieve on which the restrictions agree covers.
    pub fn eq(&self, c: Obj, v: usize, w: usize) -> bool {
        let cat = self.category();
        let s: ArrowSet =
            cat.arrows_into(c).iter().copied().filter(|&f| self.restrict(v, f) == self.restrict(w, f)).collect();
        self.topology.covers(c, s)
    }

    /// Class of a member table over `V_{rank-1}`, if it is closed under restriction.
    pub fn class_of_table(&self, c: Obj, table: &[(Arr, usize)]) -> Option<usize> {
        let po = self.power.as_ref()?;
        let mut sorted = table.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        po.index_of(c, &sorted).map(|i| self.class_of[c][i])
    }

    /// The name collecting all of `V_{rank-1}`, whose members are exactly the lower classes.
    pub fn lower_universe(&self, c: Obj) -> Option<usize> {
        let cat = self.category();
        let below = self.level_sizes.get(self.rank.checked_sub(1)?)?;
        let table: Vec<(Arr, usize)> =
            cat.arrows_into(c).iter().flat_map(|&f| (0..below[cat.dom(f)]).map(move |v| (f, v))).collect();
        self.class_of_table(c, &table)
    }

    /// `(object, class)` in listing order; literals `#n` index into this.
    pub fn listing(&self) -> Vec<(Obj, usize)> {
        self.category().objects().flat_map(|c| (0..self.size(c)).map(move |v| (c, v))).collect()
    }

    pub fn global_index(&self, c: Obj, v: usize) -> usize {
        self.sizes()[..c].iter().sum::<usize>() + v
    }

    /// The canonical tree of a class; entries are closed under restriction.
    pub fn name(&self, c: Obj, v: usize) -> Name {
        let cat = self.category().clone();
        let mut entries: Vec<(Arr, Vec<Name>)> = Vec::new();
        for &(f, m) in &self.representatives[c][v] {
            let tree = self.name(cat.dom(f), m);
            for &g in cat.arrows_into(cat.dom(f)) {
                entries.push((cat.compose(f, g), vec![tree.restrict(&cat, g)]));
            }
        }
        Name::new(c, entries)
    }

    /// Class of a composable, natural name, if its height fits.
    pub fn classify(&self, name: &Name) -> Option<usize> {
        let cat = self.category();
        let below = self.level_sizes.get(self.rank.checked_sub(1)?)?;
        let mut table = Vec::new();
        for (f, members) in &name.entries {
            for m in members {
                let k = self.classify(m)?;
                if k >= below[cat.dom(*f)] {
                    return None;
                }
                table.push((*f, k));
            }
        }
        self.class_of_table(name.root, &table)
    }

    /// `c ⊩ v ε w` by the presheaf clause `v ∈ t(id_c)`; agrees with `mem` over the trivial
    /// topology.
    pub fn mem_at_identity(&self, c: Obj, v: usize, w: usize) -> bool {
        let id = self.category().id(c);
        self.representatives[c][w].binary_search(&(id, v)).is_ok()
    }

    /// The membership relation at `c` as a digraph `v → w` for `v ε w`.
    pub fn membership_graph(&self, c: Obj) -> petgraph::graph::DiGraph<usize, ()> {
        let mut g = petgraph::graph::DiGraph::new();
        let nodes: Vec<_> = (0..self.size(c)).map(|v| g.add_node(v)).collect();
        for w in 0..self.size(c) {
            for v in self.mem[c][w].ones() {
                g.add_edge(nodes[v], nodes[w], ());
            }
        }
        g
    }

    pub fn describe(&self, c: Obj, v: usize) -> String {
        let cat = self.category();
        let inner: Vec<String> = self.representatives[c][v]
            .iter()
            .map(|&(f, m)| format!("{}:#{}", cat.arrow_name(f), self.global_index(cat.dom(f), m)))
            .collect();
        format!("{}{{{}}}", cat.object_name(c), inner.join(","))
    }
}
