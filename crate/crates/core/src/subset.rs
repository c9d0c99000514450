//! Bitmask sets of users.
//!
//! Users are stored 0-based in memory and printed 1-based. Fixed-size subsets
//! are always produced in colexicographic order, which for sets of equal size
//! coincides with increasing bitmask value.

use std::fmt;

/// Maximum number of users representable in a [`UserSet`].
pub const MAX_USERS: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UserSet(u32);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn from_bits(bits: u32) -> Self {
        UserSet(bits)
    }

    /// `{0, 1, .., k-1}`.
    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_USERS);
        if k == MAX_USERS {
            UserSet(u32::MAX)
        } else {
            UserSet((1u32 << k) - 1)
        }
    }

    pub fn singleton(user: usize) -> Self {
        UserSet(1 << user)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, user: usize) -> bool {
        user < MAX_USERS && self.0 & (1 << user) != 0
    }

    #[must_use]
    pub fn with(self, user: usize) -> Self {
        UserSet(self.0 | (1 << user))
    }

    #[must_use]
    pub fn without(self, user: usize) -> Self {
        UserSet(self.0 & !(1 << user))
    }

    #[must_use]
    pub fn union(self, other: Self) -> Self {
        UserSet(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: Self) -> Self {
        UserSet(self.0 & other.0)
    }

    #[must_use]
    pub fn difference(self, other: Self) -> Self {
        UserSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let low = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(low)
            }
        })
    }

    /// Rank of this set among all sets of the same size in colex order.
    pub fn colex_rank(self) -> u64 {
        self.iter()
            .enumerate()
            .map(|(pos, elem)| small_binom(elem as u64, pos as u64 + 1))
            .sum()
    }

    /// Every subset of `self` of size `size`, in colex order.
    pub fn subsets_of_size(self, size: usize) -> FixedSizeSubsets {
        FixedSizeSubsets::new(self, size)
    }

    /// Every subset of `self` (including the empty set and `self`), by increasing mask.
    pub fn all_subsets(self) -> impl Iterator<Item = UserSet> {
        let universe = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == universe {
                None
            } else {
                Some((current.wrapping_sub(universe)) & universe)
            };
            Some(UserSet(current))
        })
    }
}

impl FromIterator<usize> for UserSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(UserSet::EMPTY, UserSet::with)
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, user) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", user + 1)?;
        }
        f.write_str("}")
    }
}

/// Colex-ordered iterator over fixed-size subsets of a ground set.
pub struct FixedSizeSubsets {
    elems: Vec<usize>,
    positions: u64,
    done: bool,
}

impl FixedSizeSubsets {
    fn new(ground: UserSet, size: usize) -> Self {
        let elems: Vec<usize> = ground.iter().collect();
        let done = size > elems.len();
        let positions = if size == 0 { 0 } else { (1u64 << size) - 1 };
        FixedSizeSubsets { elems, positions, done }
    }
}

impl Iterator for FixedSizeSubsets {
    type Item = UserSet;

    fn next(&mut self) -> Option<UserSet> {
        if self.done {
            return None;
        }
        let mut set = UserSet::EMPTY;
        let mut rest = self.positions;
        while rest != 0 {
            let pos = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            set = set.with(self.elems[pos]);
        }
        // Gosper's hack over positions.
        let v = self.positions;
        if v == 0 {
            self.done = true;
        } else {
            let c = v & v.wrapping_neg();
            let r = v + c;
            let next = (((r ^ v) >> 2) / c) | r;
            if next >> self.elems.len() != 0 {
                self.done = true;
            } else {
                self.positions = next;
            }
        }
        Some(set)
    }
}

/// Machine-word binomial for ranks and counts; 0 when `k > n`.
pub fn small_binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * u128::from(n - j) / u128::from(j + 1);
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colex_order_and_rank() {
        let sets: Vec<UserSet> = UserSet::full(4).subsets_of_size(2).collect();
        let shown: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["{1,2}", "{1,3}", "{2,3}", "{1,4}", "{2,4}", "{3,4}"]);
        for (rank, s) in sets.iter().enumerate() {
            assert_eq!(s.colex_rank(), rank as u64);
        }
    }

    #[test]
    fn subsets_of_sparse_ground_set() {
        let ground: UserSet = [0, 2, 5].into_iter().collect();
        let subs: Vec<UserSet> = ground.subsets_of_size(2).collect();
        assert_eq!(subs.len(), 3);
        assert!(subs.iter().all(|s| s.is_subset_of(ground) && s.len() == 2));
        assert_eq!(ground.subsets_of_size(0).collect::<Vec<_>>(), [UserSet::EMPTY]);
        assert_eq!(ground.subsets_of_size(4).count(), 0);
    }

    #[test]
    fn all_subsets_counts() {
        let ground: UserSet = [1, 3, 4].into_iter().collect();
        let subs: Vec<UserSet> = ground.all_subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset_of(ground)));
        assert_eq!(UserSet::EMPTY.all_subsets().count(), 1);
    }

    #[test]
    fn counts_match_binomials() {
        for k in 0..=10usize {
            for r in 0..=k {
                assert_eq!(
                    UserSet::full(k).subsets_of_size(r).count() as u64,
                    small_binom(k as u64, r as u64)
                );
            }
        }
    }
}
