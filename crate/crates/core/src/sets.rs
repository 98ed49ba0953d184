//! Subsets of secondary users as bitmasks (bit `k` set means user `k`,
//! zero-based, is a member).

use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UserSet(pub u32);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    /// `{0, …, n-1}`.
    pub fn full(n: usize) -> UserSet {
        assert!(n <= 32, "user sets hold at most 32 users");
        if n == 32 {
            UserSet(u32::MAX)
        } else {
            UserSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(k: usize) -> UserSet {
        UserSet(1 << k)
    }

    pub fn from_indices(indices: &[usize]) -> UserSet {
        UserSet(indices.iter().fold(0, |acc, &k| acc | (1 << k)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, k: usize) -> bool {
        k < 32 && self.0 & (1 << k) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn insert(self, k: usize) -> UserSet {
        UserSet(self.0 | (1 << k))
    }

    pub fn remove(self, k: usize) -> UserSet {
        UserSet(self.0 & !(1 << k))
    }

    pub fn union(self, other: UserSet) -> UserSet {
        UserSet(self.0 | other.0)
    }

    pub fn intersection(self, other: UserSet) -> UserSet {
        UserSet(self.0 & other.0)
    }

    pub fn minus(self, other: UserSet) -> UserSet {
        UserSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: UserSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: UserSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(k)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All nonempty subsets of `self`, in ascending bitmask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = UserSet> {
        let full = self.0;
        // Enumerate submasks in increasing numeric order via the
        // "next submask" trick: (s - full) & full steps upward.
        let mut cur: u32 = 0;
        let mut done = full == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            cur = cur.wrapping_sub(full) & full;
            if cur == 0 {
                done = true;
                None
            } else {
                if cur == full {
                    done = true;
                }
                Some(UserSet(cur))
            }
        })
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for UserSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        UserSet(iter.into_iter().fold(0, |acc, k| acc | (1 << k)))
    }
}
