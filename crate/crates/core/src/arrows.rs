//! Sets of arrows as 128-bit masks, and closed-subset enumeration.

use std::collections::HashSet;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::category::Arr;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrowSet(u128);

impl ArrowSet {
    pub const CAPACITY: usize = 128;

    pub const fn empty() -> Self {
        ArrowSet(0)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn from_bits(bits: u128) -> Self {
        ArrowSet(bits)
    }

    pub fn singleton(f: Arr) -> Self {
        ArrowSet(1u128 << f)
    }

    pub fn contains(self, f: Arr) -> bool {
        self.0 >> f & 1 == 1
    }

    pub fn insert(&mut self, f: Arr) {
        self.0 |= 1u128 << f;
    }

    pub fn remove(&mut self, f: Arr) {
        self.0 &= !(1u128 << f);
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: Self) -> Self {
        ArrowSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ArrowSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Arr> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let f = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(f)
            }
        })
    }
}

impl FromIterator<Arr> for ArrowSet {
    fn from_iter<I: IntoIterator<Item = Arr>>(iter: I) -> Self {
        let mut s = ArrowSet::empty();
        for f in iter {
            s.insert(f);
        }
        s
    }
}

impl fmt::Debug for ArrowSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// All subsets of `0..n` closed under the given principal closures, where `principal[i]`
/// is the least closed set containing `i`. Output is sorted by size, then lexicographically
/// by element list.
pub fn closed_subsets(n: usize, principal: &[FixedBitSet]) -> Vec<FixedBitSet> {
    debug_assert_eq!(principal.len(), n);
    let empty = FixedBitSet::with_capacity(n);
    let mut seen: HashSet<FixedBitSet> = HashSet::new();
    seen.insert(empty.clone());
    let mut frontier = vec![empty];
    while let Some(set) = frontier.pop() {
        for i in 0..n {
            if set.contains(i) {
                continue;
            }
            let mut next = set.clone();
            next.union_with(&principal[i]);
            if seen.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    let mut all: Vec<FixedBitSet> = seen.into_iter().collect();
    all.sort_by(|a, b| a.count_ones(..).cmp(&b.count_ones(..)).then_with(|| a.ones().cmp(b.ones())));
    all
}

/// Least closed superset of `seed` given successor lists (closure under `i -> succ[i]`).
pub fn closure(n: usize, seed: impl IntoIterator<Item = usize>, succ: &[Vec<usize>]) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(n);
    let mut stack: Vec<usize> = Vec::new();
    for i in seed {
        if !set.put(i) {
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for &j in &succ[i] {
            if !set.put(j) {
                stack.push(j);
            }
        }
    }
    set
}

/// Principal closures for every element.
pub fn principal_closures(n: usize, succ: &[Vec<usize>]) -> Vec<FixedBitSet> {
    (0..n).map(|i| closure(n, [i], succ)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrow_set_basics() {
        let s: ArrowSet = [0, 3, 127].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 127]);
        assert!(s.contains(127) && !s.contains(1));
        assert!(ArrowSet::singleton(3).is_subset(s));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn closed_subsets_of_a_chain() {
        // 2 -> 1 -> 0: down-closed sets of a 3-chain are {}, {0}, {0,1}, {0,1,2}
        let succ = vec![vec![], vec![0], vec![1]];
        let all = closed_subsets(3, &principal_closures(3, &succ));
        let lists: Vec<Vec<usize>> = all.iter().map(|s| s.ones().collect()).collect();
        assert_eq!(lists, vec![vec![], vec![0], vec![0, 1], vec![0, 1, 2]]);
    }

    #[test]
    fn closed_subsets_unconstrained_is_powerset() {
        let succ = vec![vec![]; 4];
        assert_eq!(closed_subsets(4, &principal_closures(4, &succ)).len(), 16);
    }
}
