//! Spin configurations of an `L`-site spin-1/2 chain.
//!
//! A configuration is stored as the integer `index` whose bit `i` is set iff
//! spin `i` points up (`s_i = +1`). Site 0 is the least significant bit, so
//! enumerating `0..2^L` visits every configuration exactly once.

use serde::{Deserialize, Serialize};

/// Largest chain length for which full state vectors are materialized.
pub const MAX_SITES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig {
    pub index: usize,
    pub n_sites: usize,
}

impl SpinConfig {
    pub fn new(index: usize, n_sites: usize) -> Self {
        assert!(
            (1..=MAX_SITES).contains(&n_sites),
            "site count {n_sites} outside 1..={MAX_SITES}"
        );
        assert!(index < 1 << n_sites, "index {index} out of range for L={n_sites}");
        Self { index, n_sites }
    }

    /// `+1` if site `i` is up, `-1` otherwise.
    #[inline]
    pub fn spin_at(self, i: usize) -> i32 {
        assert!(i < self.n_sites, "site {i} out of range for L={}", self.n_sites);
        spin(self.index, i)
    }

    #[inline]
    pub fn flip(self, i: usize) -> Self {
        assert!(i < self.n_sites, "site {i} out of range for L={}", self.n_sites);
        Self {
            index: self.index ^ (1 << i),
            n_sites: self.n_sites,
        }
    }

    /// Number of down spins, `N_down = sum_j (1 - s_j) / 2`.
    #[inline]
    pub fn n_down(self) -> usize {
        self.n_sites - self.index.count_ones() as usize
    }

    pub fn spins(self) -> impl Iterator<Item = i32> {
        (0..self.n_sites).map(move |i| spin(self.index, i))
    }
}

/// `+1` if bit `i` of `index` is set, `-1` otherwise.
#[inline]
pub fn spin(index: usize, i: usize) -> i32 {
    if index >> i & 1 == 1 {
        1
    } else {
        -1
    }
}

#[inline]
pub fn dim(n_sites: usize) -> usize {
    1usize << n_sites
}

/// All `2^L` configurations in index order.
pub fn configs(n_sites: usize) -> impl Iterator<Item = SpinConfig> {
    (0..dim(n_sites)).map(move |index| SpinConfig::new(index, n_sites))
}
