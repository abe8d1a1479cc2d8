//! Backtracking search for natural transformations with forced propagation.
//!
//! Choosing a value for `x ∈ X(a)` fixes the value of every restriction `x·f`, so only
//! elements not yet reached by propagation are branched on.

use std::sync::Arc;

use super::{Morphism, Presheaf};
use crate::category::Obj;

/// Lazy enumeration of natural maps `src → dst` whose value at each element is allowed.
/// Components are yielded per object in element order.
pub struct NaturalMaps<'a> {
    src: &'a Presheaf,
    dst: &'a Presheaf,
    /// (object, element) per position, in branching order
    pos: Vec<(Obj, usize)>,
    /// position of each (object, element)
    index: Vec<Vec<usize>>,
    cands: Vec<Vec<usize>>,
    allowed: Vec<Vec<bool>>,
    val: Vec<Option<usize>>,
    trail: Vec<usize>,
    frames: Vec<Frame>,
    started: bool,
    done: bool,
}

struct Frame {
    pos: usize,
    next: usize,
    mark: usize,
}

/// All natural maps `src → dst` with `allowed(a, x, y)` for every component value `x ↦ y`.
pub fn natural_maps<'a, F>(src: &'a Presheaf, dst: &'a Presheaf, allowed: F) -> NaturalMaps<'a>
where
    F: Fn(Obj, usize, usize) -> bool,
{
    let cat = src.category();
    let mut objects: Vec<Obj> = cat.objects().collect();
    objects.sort_by_key(|&a| std::cmp::Reverse(cat.arrows_into(a).len()));
    let mut pos = Vec::new();
    let mut index: Vec<Vec<usize>> = cat.objects().map(|a| vec![0; src.size(a)]).collect();
    for &a in &objects {
        for x in 0..src.size(a) {
            index[a][x] = pos.len();
            pos.push((a, x));
        }
    }
    let allowed: Vec<Vec<bool>> =
        pos.iter().map(|&(a, x)| (0..dst.size(a)).map(|y| allowed(a, x, y)).collect()).collect();
    let cands = allowed.iter().map(|row| (0..row.len()).filter(|&y| row[y]).collect()).collect();
    let n = pos.len();
    NaturalMaps {
        src,
        dst,
        pos,
        index,
        cands,
        allowed,
        val: vec![None; n],
        trail: Vec::new(),
        frames: Vec::new(),
        started: false,
        done: false,
    }
}

impl NaturalMaps<'_> {
    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let p = self.trail.pop().expect("non-empty trail");
            self.val[p] = None;
        }
    }

    fn propagate(&mut self, p: usize, v: usize) -> bool {
        let cat = self.src.category().clone();
        let mut work = vec![(p, v)];
        while let Some((p, v)) = work.pop() {
            match self.val[p] {
                Some(w) if w == v => continue,
                Some(_) => return false,
                None => {}
            }
            if !self.allowed[p][v] {
                return false;
            }
            self.val[p] = Some(v);
            self.trail.push(p);
            let (a, x) = self.pos[p];
            for &f in cat.arrows_into(a) {
                let q = self.index[cat.dom(f)][self.src.restrict(x, f)];
                work.push((q, self.dst.restrict(v, f)));
            }
        }
        true
    }

    fn next_unassigned(&self, from: usize) -> Option<usize> {
        (from..self.pos.len()).find(|&p| self.val[p].is_none())
    }

    fn solution(&self) -> Vec<Vec<usize>> {
        let cat = self.src.category();
        cat.objects()
            .map(|a| (0..self.src.size(a)).map(|x| self.val[self.index[a][x]].expect("complete")).collect())
            .collect()
    }
}

impl Iterator for NaturalMaps<'_> {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            match self.next_unassigned(0) {
                Some(p) => self.frames.push(Frame { pos: p, next: 0, mark: 0 }),
                None => {
                    self.done = true;
                    return Some(self.solution());
                }
            }
        }
        loop {
            let Some(frame) = self.frames.last() else {
                self.done = true;
                return None;
            };
            let (p, k, mark) = (frame.pos, frame.next, frame.mark);
            self.undo(mark);
            if k >= self.cands[p].len() {
                self.frames.pop();
                continue;
            }
            self.frames.last_mut().expect("frame").next += 1;
            let v = self.cands[p][k];
            if self.propagate(p, v) {
                match self.next_unassigned(p + 1) {
                    Some(q) => {
                        let mark = self.trail.len();
                        self.frames.push(Frame { pos: q, next: 0, mark });
                    }
                    None => return Some(self.solution()),
                }
            }
        }
    }
}

/// Every morphism `x → y`.
pub fn all_morphisms(x: &Arc<Presheaf>, y: &Arc<Presheaf>) -> Vec<Morphism> {
    natural_maps(x, y, |_, _, _| true).map(|comp| Morphism::new_unchecked(x.clone(), y.clone(), comp)).collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    /// Brute force over all component tuples.
    fn brute(x: &Presheaf, y: &Presheaf) -> usize {
        let cat = x.category();
        let mut slots = Vec::new();
        for a in cat.objects() {
            for _ in 0..x.size(a) {
                slots.push(y.size(a));
            }
        }
        let total: usize = slots.iter().product();
        let mut count = 0;
        for mut code in 0..total {
            let mut comp: Vec<Vec<usize>> = Vec::new();
            for a in cat.objects() {
                let mut c = Vec::new();
                for _ in 0..x.size(a) {
                    c.push(code % y.size(a));
                    code /= y.size(a);
                }
                comp.push(c);
            }
            if Morphism::new(Arc::new(x.clone()), Arc::new(y.clone()), comp).is_ok() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn matches_brute_force_on_the_chain() {
        let c = chain2();
        let shapes = [
            on_chain(&c, 2, 2, vec![0, 1]),
            on_chain(&c, 2, 2, vec![0, 0]),
            on_chain(&c, 1, 2, vec![0, 0]),
            on_chain(&c, 2, 1, vec![1]),
            on_chain(&c, 0, 0, vec![]),
            on_chain(&c, 2, 0, vec![]),
        ];
        for x in &shapes {
            for y in &shapes {
                assert_eq!(natural_maps(x, y, |_, _, _| true).count(), brute(x, y), "{x:?} -> {y:?}");
            }
        }
    }

    #[test]
    fn empty_source_has_one_map() {
        let c = chain2();
        let e = Presheaf::empty(c.clone());
        assert_eq!(natural_maps(&e, &e, |_, _, _| true).count(), 1);
        let t = Presheaf::terminal(c);
        assert_eq!(natural_maps(&t, &e, |_, _, _| true).count(), 0);
    }

    #[test]
    fn isomorphism_search() {
        let c = chain2();
        let a = on_chain(&c, 2, 2, vec![0, 1]);
        let b = on_chain(&c, 2, 2, vec![1, 0]);
        assert!(a.is_isomorphic(&b));
        assert!(!a.is_isomorphic(&on_chain(&c, 2, 2, vec![0, 0])));
    }
}
