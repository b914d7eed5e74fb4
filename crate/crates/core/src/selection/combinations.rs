//! Lexicographic k-subsets of `0..n` with checked binomials and (un)ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A receive subarray: strictly increasing antenna indices and their lexicographic rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubarrayConfig {
    pub indices: Vec<usize>,
    pub id: u64,
}

impl SubarrayConfig {
    /// Builds a config from sorted, distinct indices drawn from `0..n`.
    pub fn from_indices(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) || indices.last().is_some_and(|&l| l >= n) {
            return Err(Error::InvalidParams(format!("{indices:?} is not a strictly increasing subset of 0..{n}")));
        }
        let id = rank(&indices, n)?;
        Ok(Self { indices, id })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices joined with `;`.
    pub fn joined(&self) -> String {
        self.indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
    }
}

/// `C(n, k)`; errors when it exceeds `i64::MAX`.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays exact: acc holds C(n, i) times nothing fractional.
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(Error::CombinatorialOverflow { n, k })?
            / (i as u128 + 1);
        if acc > i64::MAX as u128 {
            return Err(Error::CombinatorialOverflow { n, k });
        }
    }
    Ok(acc as u64)
}

/// Lexicographic rank of a sorted k-subset of `0..n`.
pub fn rank(indices: &[usize], n: usize) -> Result<u64> {
    let k = indices.len();
    let mut r = 0u64;
    let mut start = 0usize;
    for (i, &c) in indices.iter().enumerate() {
        for j in start..c {
            r += binomial(n - 1 - j, k - 1 - i)?;
        }
        start = c + 1;
    }
    Ok(r)
}

/// Inverse of [`rank`].
pub fn unrank(mut id: u64, n: usize, k: usize) -> Result<SubarrayConfig> {
    let total = binomial(n, k)?;
    if id >= total {
        return Err(Error::InvalidParams(format!("rank {id} out of range for C({n}, {k}) = {total}")));
    }
    let original = id;
    let mut indices = Vec::with_capacity(k);
    let mut j = 0usize;
    for i in 0..k {
        loop {
            let count = binomial(n - 1 - j, k - 1 - i)?;
            if id < count {
                break;
            }
            id -= count;
            j += 1;
        }
        indices.push(j);
        j += 1;
    }
    Ok(SubarrayConfig { indices, id: original })
}

/// Streams all `C(n, k)` subarrays in lexicographic order.
#[derive(Debug, Clone)]
pub struct Subarrays {
    n: usize,
    next: Option<Vec<usize>>,
    id: u64,
    total: u64,
}

impl Subarrays {
    pub fn total(&self) -> u64 {
        self.total
    }
}

impl Iterator for Subarrays {
    type Item = SubarrayConfig;

    fn next(&mut self) -> Option<SubarrayConfig> {
        let current = self.next.take()?;
        let k = current.len();
        let mut succ = current.clone();
        // Rightmost index that can still move right.
        if let Some(i) = (0..k).rev().find(|&i| succ[i] < self.n - k + i) {
            succ[i] += 1;
            for j in i + 1..k {
                succ[j] = succ[j - 1] + 1;
            }
            self.next = Some(succ);
        }
        let item = SubarrayConfig { indices: current, id: self.id };
        self.id += 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.id) as usize;
        (left, Some(left))
    }
}

pub fn enumerate_subarrays(n_r: usize, n_rs: usize) -> Result<Subarrays> {
    if n_rs == 0 || n_rs > n_r {
        return Err(Error::InvalidParams(format!("need 0 < n_rs <= n_r, got n_rs={n_rs}, n_r={n_r}")));
    }
    let total = binomial(n_r, n_rs)?;
    Ok(Subarrays { n: n_r, next: Some((0..n_rs).collect()), id: 0, total })
}
