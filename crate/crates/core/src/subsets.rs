//! Size-`M` index combinations of a multiset, exhaustive or budgeted.

use std::collections::HashSet;
use std::ops::Range;

use itertools::{Combinations, Itertools};
use rand::Rng;

use crate::error::{Error, Result};

/// `C(n, k)`, saturating at `u128::MAX` (callers only compare it against
/// 64-bit budgets, so early saturation is harmless).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul(u128::from(n - i)) {
            Some(v) => acc = v / u128::from(i + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Index combinations (each sorted ascending) over positions `0..len`.
pub enum Subsets {
    /// Every combination in lexicographic order.
    Exhaustive(Combinations<Range<usize>>),
    /// A uniform sample of distinct combinations, in draw order.
    Sampled(std::vec::IntoIter<Vec<usize>>),
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        match self {
            Subsets::Exhaustive(it) => it.next(),
            Subsets::Sampled(it) => it.next(),
        }
    }
}

/// All size-`size` combinations of `0..len` when `budget` is `None` or at
/// least `C(len, size)`; otherwise `budget` distinct combinations drawn
/// uniformly. `rng` is only consumed in the sampled case.
pub fn enumerate_subsets<R: Rng + ?Sized>(
    len: usize,
    size: usize,
    budget: Option<u64>,
    rng: &mut R,
) -> Result<Subsets> {
    if size == 0 {
        return Err(Error::InvalidParameter("subset size must be positive".into()));
    }
    if len < size {
        return Err(Error::InvalidParameter(format!(
            "cannot choose subsets of size {size} from {len} elements"
        )));
    }
    let total = binomial(len as u64, size as u64);
    match budget {
        Some(b) if u128::from(b) < total => {
            let b = usize::try_from(b).map_err(|_| {
                Error::InvalidParameter(format!("subset budget {b} too large"))
            })?;
            let mut seen = HashSet::with_capacity(b);
            let mut out = Vec::with_capacity(b);
            while out.len() < b {
                let mut pick = rand::seq::index::sample(rng, len, size).into_vec();
                pick.sort_unstable();
                if seen.insert(pick.clone()) {
                    out.push(pick);
                }
            }
            Ok(Subsets::Sampled(out.into_iter()))
        }
        _ => Ok(Subsets::Exhaustive((0..len).combinations(size))),
    }
}
