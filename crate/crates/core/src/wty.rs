//! Polynomial functors and their initial algebras, in presheaves and in sheaves, computed by
//! height-bounded iteration.
//!
//! Trees of height 0 are those with no children. `W_≤k` holds trees of height at most `k`;
//! the iteration has stabilized once `W_≤k` and `W_≤k-1` coincide.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::arrows::ArrowSet;
use crate::category::{Arr, Obj};
use crate::coverage::{maximal, pullback, Topology};
use crate::psh::{
    dependent_sections, m_fiber, natural_maps, Morphism, Presheaf, PshError, SmallnessClass, Subpresheaf,
};
use crate::shf::{is_sheaf, SheafWitness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WtyError {
    #[error(transparent)]
    Psh(#[from] PshError),
    #[error("{which} is not a sheaf: {witness:?}")]
    NotASheaf { which: &'static str, witness: SheafWitness },
    #[error("the iteration has not stabilized at depth {depth}")]
    NotStabilized { depth: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
}

/// `P_F(Z)(a) = {(x, t) : x ∈ X(a), t: Y^M_x → Z natural}`.
#[derive(Debug, Clone)]
pub struct PolyApply {
    pub presheaf: Arc<Presheaf>,
    pub projection: Morphism,
    /// `(x, t)` with `t` given per object over the positions of `Y^M_x`
    pub entries: Vec<Vec<(usize, Vec<Vec<usize>>)>>,
}

pub fn poly_apply(f: &Morphism, z: &Arc<Presheaf>, class: SmallnessClass) -> Result<PolyApply, PshError> {
    class.check(f)?;
    let (presheaf, projection, entries) = dependent_sections(f, z, |_, _, _, _| true)?;
    Ok(PolyApply { presheaf, projection, entries })
}

pub type TreeId = usize;

/// `sup_x t`; the children are listed for every `(f, y) ∈ Y^M_x` in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PshTree {
    pub root: Obj,
    pub x: usize,
    pub children: Vec<((Arr, usize), TreeId)>,
}

#[derive(Debug, Clone, Default)]
pub struct PshForest {
    nodes: Vec<PshTree>,
    heights: Vec<usize>,
    index: HashMap<PshTree, TreeId>,
}

impl PshForest {
    pub fn intern(&mut self, tree: PshTree) -> TreeId {
        if let Some(&id) = self.index.get(&tree) {
            return id;
        }
        let h = tree.children.iter().map(|&(_, c)| self.heights[c] + 1).max().unwrap_or(0);
        let id = self.nodes.len();
        self.nodes.push(tree.clone());
        self.heights.push(h);
        self.index.insert(tree, id);
        id
    }

    pub fn get(&self, id: TreeId) -> &PshTree {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn height(&self, id: TreeId) -> usize {
        self.heights[id]
    }

    pub fn child(&self, id: TreeId, f: Arr, y: usize) -> Option<TreeId> {
        let c = &self.nodes[id].children;
        c.binary_search_by_key(&(f, y), |&(k, _)| k).ok().map(|i| c[i].1)
    }

    /// `(sup_x t)·h = sup_{x·h} h*t` with `(h*t)(g, y) = t(h∘g, y)`.
    pub fn restrict(&mut self, f: &Morphism, id: TreeId, h: Arr) -> TreeId {
        let cat = f.dst().category().clone();
        let tree = self.nodes[id].clone();
        let x2 = f.dst().restrict(tree.x, h);
        let mf = m_fiber(f, cat.dom(h), x2).expect("restricted label is an element");
        let mut children = Vec::new();
        for row in &mf.pairs {
            for &(g, y) in row {
                let c = self.child(id, cat.compose(h, g), y).expect("complete tree");
                children.push(((g, y), c));
            }
        }
        children.sort_unstable();
        self.intern(PshTree { root: cat.dom(h), x: x2, children })
    }

    /// `t(f, y)·g = t(f∘g, y·g)` for every child and every `g`.
    pub fn is_natural(&mut self, f: &Morphism, id: TreeId) -> bool {
        let cat = f.dst().category().clone();
        let y = f.src().clone();
        let children = self.nodes[id].children.clone();
        for ((k, e), c) in children {
            for &g in cat.arrows_into(cat.dom(k)) {
                let left = self.restrict(f, c, g);
                let right = self.child(id, cat.compose(k, g), y.restrict(e, g));
                if right != Some(left) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_hereditarily_natural(&mut self, f: &Morphism, id: TreeId) -> bool {
        let children: Vec<TreeId> = self.nodes[id].children.iter().map(|&(_, c)| c).collect();
        self.is_natural(f, id) && children.into_iter().all(|c| self.is_hereditarily_natural(f, c))
    }
}

#[derive(Debug, Clone)]
pub struct PresheafWType {
    pub presheaf: Arc<Presheaf>,
    /// tree of each element
    pub trees: Vec<Vec<TreeId>>,
    pub forest: PshForest,
    pub stabilized: bool,
    pub depth: usize,
    /// carrier sizes of `W_≤h` for `h = 0..`
    pub sizes_by_height: Vec<Vec<usize>>,
}

/// Hereditarily natural trees of height at most `depth`.
pub fn presheaf_wtype(f: &Morphism, depth: usize, class: SmallnessClass) -> Result<PresheafWType, WtyError> {
    if depth == 0 {
        return Err(WtyError::ZeroDepth);
    }
    class.check(f)?;
    let cat = f.dst().category().clone();
    let mut forest = PshForest::default();
    let mut trees: Vec<Vec<TreeId>> = vec![Vec::new(); cat.num_objects()];
    let mut z = Arc::new(Presheaf::empty(cat.clone()));
    let mut sizes_by_height = Vec::new();
    let mut stabilized = false;
    for h in 0..=depth {
        let pa = poly_apply(f, &z, class)?;
        let mut next = trees.clone();
        let mut known: Vec<HashSet<TreeId>> = trees.iter().map(|t| t.iter().copied().collect()).collect();
        for a in cat.objects() {
            for (x, t) in &pa.entries[a] {
                let mf = m_fiber(f, a, *x)?;
                let mut children = Vec::new();
                for (o, row) in mf.pairs.iter().enumerate() {
                    for (p, &(g, y)) in row.iter().enumerate() {
                        children.push(((g, y), trees[o][t[o][p]]));
                    }
                }
                children.sort_unstable();
                let id = forest.intern(PshTree { root: a, x: *x, children });
                if known[a].insert(id) {
                    next[a].push(id);
                }
            }
        }
        let restrict = cat
            .arrows()
            .map(|g| {
                let pos: HashMap<TreeId, usize> = next[cat.dom(g)].iter().enumerate().map(|(i, &t)| (t, i)).collect();
                next[cat.cod(g)].iter().map(|&t| pos[&forest.restrict(f, t, g)]).collect()
            })
            .collect();
        let sizes: Vec<usize> = next.iter().map(Vec::len).collect();
        let grew = sizes != trees.iter().map(Vec::len).collect::<Vec<_>>();
        sizes_by_height.push(sizes.clone());
        trees = next;
        z = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
        if h >= 1 && !grew {
            stabilized = true;
            break;
        }
    }
    Ok(PresheafWType { presheaf: z, trees, forest, stabilized, depth, sizes_by_height })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InitialAlgebraReport {
    /// every `sup(x, t)` lies in the carrier
    pub well_defined: bool,
    /// `sup` is injective in every component
    pub monic: bool,
    /// the least subobject closed under `sup` is the whole carrier
    pub no_proper_subalgebra: bool,
}

impl InitialAlgebraReport {
    pub fn passes(&self) -> bool {
        self.well_defined && self.monic && self.no_proper_subalgebra
    }
}

impl PresheafWType {
    pub fn check_initial_algebra(
        &mut self,
        f: &Morphism,
        class: SmallnessClass,
    ) -> Result<InitialAlgebraReport, WtyError> {
        if !self.stabilized {
            return Err(WtyError::NotStabilized { depth: self.depth });
        }
        let cat = f.dst().category().clone();
        let pa = poly_apply(f, &self.presheaf, class)?;
        let pos: Vec<HashMap<TreeId, usize>> =
            self.trees.iter().map(|ts| ts.iter().enumerate().map(|(i, &t)| (t, i)).collect()).collect();
        let mut well_defined = true;
        let mut monic = true;
        // sup as a table, and the children classes each entry depends on
        let mut sup: Vec<Vec<Option<usize>>> = Vec::new();
        for a in cat.objects() {
            let mut row = Vec::new();
            let mut seen = HashSet::new();
            for (x, t) in &pa.entries[a] {
                let mf = m_fiber(f, a, *x)?;
                let mut children = Vec::new();
                for (o, r) in mf.pairs.iter().enumerate() {
                    for (p, &(g, y)) in r.iter().enumerate() {
                        children.push(((g, y), self.trees[o][t[o][p]]));
                    }
                }
                children.sort_unstable();
                let tree = PshTree { root: a, x: *x, children };
                let image = self.forest.index.get(&tree).and_then(|id| pos[a].get(id)).copied();
                well_defined &= image.is_some();
                if let Some(i) = image {
                    monic &= seen.insert(i);
                }
                row.push(image);
            }
            sup.push(row);
        }
        let mut inside: Vec<Vec<bool>> = self.trees.iter().map(|t| vec![false; t.len()]).collect();
        loop {
            let mut changed = false;
            for a in cat.objects() {
                for (k, (_, t)) in pa.entries[a].iter().enumerate() {
                    if let Some(i) = sup[a][k] {
                        if !inside[a][i] && t.iter().enumerate().all(|(o, vals)| vals.iter().all(|&v| inside[o][v])) {
                            inside[a][i] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let no_proper_subalgebra = inside.iter().all(|row| row.iter().all(|&b| b));
        Ok(InitialAlgebraReport { well_defined, monic, no_proper_subalgebra })
    }
}

/// `sup_{(a, x, S)} t`; each child slot `(f, y) ∈ Y^S_x` holds a nonempty set of trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShfTree {
    pub root: Obj,
    pub x: usize,
    pub sieve: ArrowSet,
    pub children: Vec<((Arr, usize), Vec<TreeId>)>,
}

/// Interned sheaf trees with the relation `~` computed on demand.
#[derive(Debug, Clone)]
pub struct ShfForest {
    f: Morphism,
    topology: Topology,
    nodes: Vec<ShfTree>,
    heights: Vec<usize>,
    index: HashMap<ShfTree, TreeId>,
    equiv: HashMap<(TreeId, TreeId), bool>,
}

impl ShfForest {
    pub fn new(f: &Morphism, topology: &Topology) -> ShfForest {
        ShfForest {
            f: f.clone(),
            topology: topology.clone(),
            nodes: Vec::new(),
            heights: Vec::new(),
            index: HashMap::new(),
            equiv: HashMap::new(),
        }
    }

    pub fn intern(&mut self, mut tree: ShfTree) -> TreeId {
        tree.children.iter_mut().for_each(|(_, set)| {
            set.sort_unstable();
            set.dedup();
        });
        tree.children.sort_unstable();
        if let Some(&id) = self.index.get(&tree) {
            return id;
        }
        let h = tree.children.iter().flat_map(|(_, s)| s.iter()).map(|&c| self.heights[c] + 1).max().unwrap_or(0);
        let id = self.nodes.len();
        self.nodes.push(tree.clone());
        self.heights.push(h);
        self.index.insert(tree, id);
        id
    }

    pub fn get(&self, id: TreeId) -> &ShfTree {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn height(&self, id: TreeId) -> usize {
        self.heights[id]
    }

    pub fn child(&self, id: TreeId, f: Arr, y: usize) -> Option<&[TreeId]> {
        let c = &self.nodes[id].children;
        c.binary_search_by(|(k, _)| k.cmp(&(f, y))).ok().map(|i| c[i].1.as_slice())
    }

    /// `v·h = sup_{(b, x·h, h*S)} h*t`.
    pub fn restrict(&mut self, id: TreeId, h: Arr) -> TreeId {
        let cat = self.topology.category().clone();
        let tree = self.nodes[id].clone();
        let sieve = pullback(&cat, tree.sieve, h);
        let x = self.f.dst().restrict(tree.x, h);
        let mut children: Vec<((Arr, usize), Vec<TreeId>)> = Vec::new();
        for g in sieve.iter() {
            for y in self.slot_elements(x, g) {
                let set = self.child(id, cat.compose(h, g), y).expect("complete tree").to_vec();
                children.push(((g, y), set));
            }
        }
        self.intern(ShfTree { root: cat.dom(h), x, sieve, children })
    }

    /// `y ∈ Y(dom g)` with `F(y) = x·g`.
    fn slot_elements(&self, x: usize, g: Arr) -> Vec<usize> {
        let cat = self.topology.category();
        let target = self.f.dst().restrict(x, g);
        let b = cat.dom(g);
        (0..self.f.src().size(b)).filter(|&y| self.f.apply(b, y) == target).collect()
    }

    pub fn restrict_set(&mut self, set: &[TreeId], h: Arr) -> Vec<TreeId> {
        let mut out: Vec<TreeId> = set.iter().map(|&t| self.restrict(t, h)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `M ~ N`: every element of `M` is related to every element of `N`.
    pub fn sets_equiv(&mut self, m: &[TreeId], n: &[TreeId]) -> bool {
        m.iter().all(|&a| n.iter().all(|&b| self.equiv(a, b)))
    }

    /// `v ~ v'`: same root and label, and the two agree on the slots of some covering
    /// `R ⊆ S ∩ S'`.
    pub fn equiv(&mut self, v: TreeId, w: TreeId) -> bool {
        if let Some(&r) = self.equiv.get(&(v, w)) {
            return r;
        }
        let (a, b) = (self.nodes[v].clone(), self.nodes[w].clone());
        let result = a.root == b.root && a.x == b.x && {
            let mut agree = ArrowSet::empty();
            for g in a.sieve.intersection(b.sieve).iter() {
                let ys = self.slot_elements(a.x, g);
                let mut ok = true;
                for y in ys {
                    let m = self.child(v, g, y).expect("slot").to_vec();
                    let n = self.child(w, g, y).expect("slot").to_vec();
                    if !self.sets_equiv(&m, &n) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    agree.insert(g);
                }
            }
            self.topology.covered_within(a.root, agree)
        };
        self.equiv.insert((v, w), result);
        result
    }

    /// `v(f, y)·g ~ v(f∘g, y·g)` for every slot and every `g`.
    pub fn is_natural(&mut self, id: TreeId) -> bool {
        let cat = self.topology.category().clone();
        let ys = self.f.src().clone();
        let tree = self.nodes[id].clone();
        for ((k, e), set) in &tree.children {
            if set.is_empty() || set.iter().any(|&c| self.nodes[c].root != cat.dom(*k)) {
                return false;
            }
            for &g in cat.arrows_into(cat.dom(*k)) {
                let left = self.restrict_set(set, g);
                let right = self.child(id, cat.compose(*k, g), ys.restrict(*e, g)).expect("sieve").to_vec();
                if !self.sets_equiv(&left, &right) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_hereditarily_natural(&mut self, id: TreeId) -> bool {
        let kids: Vec<TreeId> = self.nodes[id].children.iter().flat_map(|(_, s)| s.iter().copied()).collect();
        self.is_natural(id) && kids.into_iter().all(|c| self.is_hereditarily_natural(c))
    }
}

/// A node label `(x, S)` with a natural class assignment on `Y^S_x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassNode {
    pub x: usize,
    pub sieve: ArrowSet,
    /// `((f, y), class of the children)`, sorted
    pub assignment: Vec<((Arr, usize), usize)>,
}

/// The partition of the built trees into `~`-classes.
#[derive(Debug, Clone, Default)]
pub struct Bisim {
    /// `(root, class)` of each tree in the forest
    pub class_of: HashMap<TreeId, (Obj, usize)>,
}

#[derive(Debug, Clone)]
pub struct SheafWType {
    pub presheaf: Arc<Presheaf>,
    pub stabilized: bool,
    pub depth: usize,
    pub sizes_by_height: Vec<Vec<usize>>,
    /// canonical label of each class
    pub representatives: Vec<Vec<ClassNode>>,
    /// canonical tree of each class (singleton children)
    pub rep_trees: Vec<Vec<TreeId>>,
    pub forest: ShfForest,
    pub bisim: Bisim,
    /// class of every label met at the last level
    node_class: Vec<HashMap<ClassNode, usize>>,
}

/// `Y^S_x` as a presheaf, with its positions `(f, y)` per object.
fn slots(f: &Morphism, a: Obj, x: usize, s: ArrowSet) -> Result<(Arc<Presheaf>, Vec<Vec<(Arr, usize)>>), PshError> {
    let mf = m_fiber(f, a, x)?;
    let cat = f.dst().category();
    let elems: Vec<Vec<usize>> =
        cat.objects().map(|b| (0..mf.pairs[b].len()).filter(|&p| s.contains(mf.pairs[b][p].0)).collect()).collect();
    let sub = Subpresheaf::from_elements(&mf.presheaf, &elems)?;
    let (p, _) = sub.to_presheaf(&mf.presheaf);
    let pairs = elems.iter().enumerate().map(|(b, ps)| ps.iter().map(|&q| mf.pairs[b][q]).collect()).collect();
    Ok((p, pairs))
}

fn restrict_node(f: &Morphism, node: &ClassNode, h: Arr) -> ClassNode {
    let cat = f.dst().category();
    let sieve = pullback(cat, node.sieve, h);
    let x = f.dst().restrict(node.x, h);
    let mut assignment = Vec::new();
    for g in sieve.iter() {
        let b = cat.dom(g);
        let target = f.dst().restrict(x, g);
        for y in (0..f.src().size(b)).filter(|&y| f.apply(b, y) == target) {
            let hg = cat.compose(h, g);
            let i = node.assignment.binary_search_by(|(k, _)| k.cmp(&(hg, y))).expect("slot");
            assignment.push(((g, y), node.assignment[i].1));
        }
    }
    assignment.sort_unstable();
    ClassNode { x, sieve, assignment }
}

/// Agreement of two labels over the same `x`: the arrows of `S ∩ S'` on whose slots the
/// assignments coincide.
fn node_agreement(a: &ClassNode, b: &ClassNode) -> ArrowSet {
    let common = a.sieve.intersection(b.sieve);
    let mut bad = ArrowSet::empty();
    let lookup: HashMap<(Arr, usize), usize> = b.assignment.iter().copied().collect();
    for &((g, y), c) in &a.assignment {
        if common.contains(g) && lookup.get(&(g, y)) != Some(&c) {
            bad.insert(g);
        }
    }
    common.iter().filter(|&g| !bad.contains(g)).collect()
}

/// The sheaf W-type truncated at `depth`, computed on `~`-classes.
pub fn sheaf_wtype(f: &Morphism, t: &Topology, depth: usize, class: SmallnessClass) -> Result<SheafWType, WtyError> {
    if depth == 0 {
        return Err(WtyError::ZeroDepth);
    }
    class.check(f)?;
    is_sheaf(f.dst(), t).map_err(|witness| WtyError::NotASheaf { which: "X", witness })?;
    is_sheaf(f.src(), t).map_err(|witness| WtyError::NotASheaf { which: "Y", witness })?;
    let cat = t.category().clone();
    let mut z = Arc::new(Presheaf::empty(cat.clone()));
    let mut reps: Vec<Vec<ClassNode>> = vec![Vec::new(); cat.num_objects()];
    let mut node_class: Vec<HashMap<ClassNode, usize>> = vec![HashMap::new(); cat.num_objects()];
    let mut sizes_by_height = Vec::new();
    let mut stabilized = false;
    for h in 0..=depth {
        let objects: Vec<Obj> = cat.objects().collect();
        let zz = z.clone();
        let candidates: Vec<Result<Vec<ClassNode>, PshError>> = crate::exec::map(&objects, |&a| {
            let mut out = Vec::new();
            for x in 0..f.dst().size(a) {
                for &s in t.covering(a) {
                    let (sp, pairs) = slots(f, a, x, s)?;
                    for g in natural_maps(&sp, &zz, |_, _, _| true) {
                        let mut assignment: Vec<((Arr, usize), usize)> = pairs
                            .iter()
                            .enumerate()
                            .flat_map(|(b, row)| row.iter().enumerate().map(move |(p, &k)| (k, (b, p))))
                            .map(|(k, (b, p))| (k, g[b][p]))
                            .collect();
                        assignment.sort_unstable();
                        out.push(ClassNode { x, sieve: s, assignment });
                    }
                }
            }
            Ok(out)
        });
        let candidates: Vec<Vec<ClassNode>> = candidates.into_iter().collect::<Result<_, _>>()?;
        let mut next_reps = reps.clone();
        let mut next_class: Vec<HashMap<ClassNode, usize>> = Vec::new();
        for a in cat.objects() {
            let cands = &candidates[a];
            let mut uf = UnionFind::<usize>::new(cands.len());
            for i in 0..cands.len() {
                for j in i + 1..cands.len() {
                    if cands[i].x == cands[j].x && t.covered_within(a, node_agreement(&cands[i], &cands[j])) {
                        uf.union(i, j);
                    }
                }
            }
            let pos: HashMap<&ClassNode, usize> = cands.iter().enumerate().map(|(i, c)| (c, i)).collect();
            let mut root_class: HashMap<usize, usize> = HashMap::new();
            for (k, rep) in reps[a].iter().enumerate() {
                let root = uf.find(pos[rep]);
                let prev = root_class.insert(root, k);
                assert!(prev.is_none(), "distinct classes of a lower level were identified");
            }
            let mut map = HashMap::new();
            for (i, c) in cands.iter().enumerate() {
                let root = uf.find(i);
                let k = *root_class.entry(root).or_insert_with(|| {
                    next_reps[a].push(c.clone());
                    next_reps[a].len() - 1
                });
                map.insert(c.clone(), k);
            }
            next_class.push(map);
        }
        let restrict = cat
            .arrows()
            .map(|g| next_reps[cat.cod(g)].iter().map(|n| next_class[cat.dom(g)][&restrict_node(f, n, g)]).collect())
            .collect();
        let sizes: Vec<usize> = next_reps.iter().map(Vec::len).collect();
        let grew = sizes != reps.iter().map(Vec::len).collect::<Vec<_>>();
        sizes_by_height.push(sizes.clone());
        reps = next_reps;
        node_class = next_class;
        z = Arc::new(Presheaf::new_unchecked(cat.clone(), sizes, restrict));
        if h >= 1 && !grew {
            stabilized = true;
            break;
        }
    }
    let mut forest = ShfForest::new(f, t);
    let mut rep_trees: Vec<Vec<TreeId>> = vec![Vec::new(); cat.num_objects()];
    // representatives of lower classes come first in each fibre, so build in height order
    let mut pending: Vec<(Obj, usize)> = cat.objects().flat_map(|a| (0..reps[a].len()).map(move |k| (a, k))).collect();
    let mut built: HashMap<(Obj, usize), TreeId> = HashMap::new();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&(a, k)| {
            let node = &reps[a][k];
            let ready = node.assignment.iter().all(|&((g, _), c)| built.contains_key(&(cat.dom(g), c)));
            if ready {
                let children =
                    node.assignment.iter().map(|&((g, y), c)| ((g, y), vec![built[&(cat.dom(g), c)]])).collect();
                let id = forest.intern(ShfTree { root: a, x: node.x, sieve: node.sieve, children });
                built.insert((a, k), id);
            }
            !ready
        });
        assert!(pending.len() < before, "class representatives are well founded");
    }
    for a in cat.objects() {
        rep_trees[a] = (0..reps[a].len()).map(|k| built[&(a, k)]).collect();
    }
    let mut bisim = Bisim::default();
    for (&(a, k), &id) in &built {
        bisim.class_of.insert(id, (a, k));
    }
    Ok(SheafWType {
        presheaf: z,
        stabilized,
        depth,
        sizes_by_height,
        representatives: reps,
        rep_trees,
        forest,
        bisim,
        node_class,
    })
}

impl SheafWType {
    /// Class of a tree in the forest, found by comparing with the representatives.
    pub fn classify(&mut self, id: TreeId) -> Option<usize> {
        if let Some(&(_, k)) = self.bisim.class_of.get(&id) {
            return Some(k);
        }
        let a = self.forest.get(id).root;
        let reps = self.rep_trees[a].clone();
        let k = reps.iter().position(|&r| self.forest.equiv(id, r))?;
        self.bisim.class_of.insert(id, (a, k));
        Some(k)
    }

    pub fn check_initial_algebra(
        &mut self,
        f: &Morphism,
        t: &Topology,
        class: SmallnessClass,
    ) -> Result<InitialAlgebraReport, WtyError> {
        if !self.stabilized {
            return Err(WtyError::NotStabilized { depth: self.depth });
        }
        let cat = t.category().clone();
        let pa = poly_apply(f, &self.presheaf, class)?;
        let mut well_defined = true;
        let mut monic = true;
        let mut sup: Vec<Vec<Option<usize>>> = Vec::new();
        for a in cat.objects() {
            let m = maximal(&cat, a);
            let mut seen = HashSet::new();
            let mut row = Vec::new();
            for (x, g) in &pa.entries[a] {
                let mf = m_fiber(f, a, *x)?;
                let mut assignment: Vec<((Arr, usize), usize)> = Vec::new();
                for (o, r) in mf.pairs.iter().enumerate() {
                    for (p, &k) in r.iter().enumerate() {
                        assignment.push((k, g[o][p]));
                    }
                }
                assignment.sort_unstable();
                let image = self.node_class[a].get(&ClassNode { x: *x, sieve: m, assignment }).copied();
                well_defined &= image.is_some();
                if let Some(i) = image {
                    monic &= seen.insert(i);
                }
                row.push(image);
            }
            sup.push(row);
        }
        // least subsheaf closed under sup
        let w = &self.presheaf;
        let mut inside: Vec<Vec<bool>> = cat.objects().map(|a| vec![false; w.size(a)]).collect();
        loop {
            let mut changed = false;
            for a in cat.objects() {
                for (k, (_, g)) in pa.entries[a].iter().enumerate() {
                    if let Some(i) = sup[a][k] {
                        if !inside[a][i] && g.iter().enumerate().all(|(o, vals)| vals.iter().all(|&v| inside[o][v])) {
                            inside[a][i] = true;
                            changed = true;
                        }
                    }
                }
                for e in 0..w.size(a) {
                    if inside[a][e] {
                        continue;
                    }
                    let s: ArrowSet =
                        cat.arrows_into(a).iter().copied().filter(|&h| inside[cat.dom(h)][w.restrict(e, h)]).collect();
                    if t.covers(a, s) {
                        inside[a][e] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let no_proper_subalgebra = inside.iter().all(|row| row.iter().all(|&b| b));
        Ok(InitialAlgebraReport { well_defined, monic, no_proper_subalgebra })
    }
}

/// All hereditarily natural sheaf trees of height at most `depth` whose child sets are arbitrary
/// nonempty sets of lower trees. Only feasible for very small inputs; `limit` caps the forest.
pub fn exhaustive_sheaf_trees(
    f: &Morphism,
    t: &Topology,
    depth: usize,
    limit: usize,
) -> Option<(ShfForest, Vec<Vec<TreeId>>)> {
    let cat = t.category().clone();
    let mut forest = ShfForest::new(f, t);
    let mut level: Vec<Vec<TreeId>> = vec![Vec::new(); cat.num_objects()];
    for _ in 0..=depth {
        let mut next = level.clone();
        for a in cat.objects() {
            for x in 0..f.dst().size(a) {
                for &s in t.covering(a) {
                    let mut slots_list: Vec<(Arr, usize)> = Vec::new();
                    for g in s.iter() {
                        let target = f.dst().restrict(x, g);
                        let b = cat.dom(g);
                        for y in (0..f.src().size(b)).filter(|&y| f.apply(b, y) == target) {
                            slots_list.push((g, y));
                        }
                    }
                    let options: Vec<Vec<Vec<TreeId>>> =
                        slots_list.iter().map(|&(g, _)| nonempty_subsets(&level[cat.dom(g)])).collect();
                    let total: usize = options.iter().map(Vec::len).product();
                    if total > limit {
                        return None;
                    }
                    for mut code in 0..total {
                        let mut children = Vec::new();
                        for (i, opts) in options.iter().enumerate() {
                            children.push((slots_list[i], opts[code % opts.len()].clone()));
                            code /= opts.len();
                        }
                        let id = forest.intern(ShfTree { root: a, x, sieve: s, children });
                        if forest.is_hereditarily_natural(id) && !next[a].contains(&id) {
                            next[a].push(id);
                        }
                        if forest.len() > limit {
                            return None;
                        }
                    }
                }
            }
        }
        level = next;
    }
    Some((forest, level))
}

fn nonempty_subsets(items: &[TreeId]) -> Vec<Vec<TreeId>> {
    (1u64..(1u64 << items.len().min(16)))
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &t)| t).collect())
        .collect()
}
