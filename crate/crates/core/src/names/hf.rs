//! Hereditarily finite sets in Ackermann coding: `x ∈ y` iff bit `x` of `y` is set.

/// Codes of the sets of rank below `k`, for `k ≤ 4`.
pub fn sets_of_rank_below(k: usize) -> Vec<u64> {
    assert!(k <= 4, "codes overflow beyond rank 4");
    let mut level: Vec<u64> = Vec::new();
    for _ in 0..k {
        let n = level.len();
        level =
            (0..1u64 << n).map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| 1u64 << level[i]).sum()).collect();
        level.sort_unstable();
    }
    level
}

pub fn member(x: u64, y: u64) -> bool {
    x < 64 && y >> x & 1 == 1
}

/// Code of the set whose members have the given codes.
pub fn from_members(members: &[u64]) -> Option<u64> {
    members.iter().try_fold(0u64, |acc, &m| (m < 64).then(|| acc | 1 << m))
}

/// Ackermann codes of the classes of a universe at `c`, read off forced membership.
/// `None` once a code no longer fits.
pub fn universe_codes(u: &super::Universe, c: crate::category::Obj) -> Option<Vec<u64>> {
    let mut codes: Vec<u64> = Vec::with_capacity(u.size(c));
    for w in 0..u.size(c) {
        // members come from lower levels, which are listed first
        let members: Vec<u64> = u.members(c, w).into_iter().map(|v| codes.get(v).copied()).collect::<Option<_>>()?;
        codes.push(from_members(&members)?);
    }
    Some(codes)
}
