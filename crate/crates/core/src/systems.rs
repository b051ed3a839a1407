//! Standard measures and hole families used by the scenarios and tests.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cylinder::{CylinderUnion, NeighborhoodSystem};
use crate::error::{precondition, Result};
use crate::markov::{MarkovMeasure, Word};

/// The golden-mean shift with the Parry-like chain `[[1/2, 1/2], [1, 0]]`.
pub fn golden_mean() -> MarkovMeasure {
    MarkovMeasure::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).expect("golden-mean chain is valid")
}

/// Uniform Bernoulli measure on two symbols (the doubling map).
pub fn doubling() -> MarkovMeasure {
    MarkovMeasure::uniform(2).expect("m = 2")
}

/// Uniform Bernoulli measure on three symbols (the tripling map).
pub fn tripling() -> MarkovMeasure {
    MarkovMeasure::uniform(3).expect("m = 3")
}

/// `U_n` for the middle-thirds Cantor set: all words over `{0, 2}` of length
/// `n`, for `n = 1..=n_max`.
pub fn cantor_holes(n_max: usize) -> Vec<CylinderUnion> {
    let mut out = Vec::with_capacity(n_max);
    let mut words: Vec<Vec<u8>> = vec![Vec::new()];
    for n in 1..=n_max {
        words = words
            .into_iter()
            .flat_map(|w| {
                [0u8, 2].into_iter().map(move |b| {
                    let mut x = w.clone();
                    x.push(b);
                    x
                })
            })
            .collect();
        out.push(CylinderUnion::from_canonical(n, words.iter().cloned().map(Word).collect()));
    }
    out
}

/// The Cantor family restricted to depths `n_min..=n_max`.
pub fn cantor_system(mu: &MarkovMeasure, n_min: usize, n_max: usize) -> Result<NeighborhoodSystem> {
    if mu.alphabet_size() != 3 || n_min == 0 || n_min > n_max {
        return Err(precondition("cantor family needs a 3-symbol measure and 1 <= n_min <= n_max"));
    }
    let holes = cantor_holes(n_max).split_off(n_min - 1);
    NeighborhoodSystem::new(mu, holes, format!("cantor n={}..{}", n_min, n_max))
}

/// Cylinders of the periodic point `w w w …` at the given depths.
pub fn point_family(mu: &MarkovMeasure, w: &[u8], depths: impl IntoIterator<Item = usize>) -> Result<NeighborhoodSystem> {
    if w.is_empty() {
        return Err(precondition("periodic word must be nonempty"));
    }
    let depths: Vec<usize> = depths.into_iter().collect();
    let longest = depths.iter().copied().max().unwrap_or(0);
    let seq = Word::periodic_prefix(w, longest);
    NeighborhoodSystem::prefix_family(mu, seq.symbols(), &depths, format!("periodic point {}", Word::from(w)))
}

/// The first `n` binary digits of `√2 − 1` (the fractional digits of `√2`),
/// exact for `n ≤ 62`.
pub fn sqrt2_minus_1_digits(n: usize) -> Result<Vec<u8>> {
    if n > 62 {
        return Err(precondition("at most 62 exact digits are available"));
    }
    // floor(√2 · 2^n) = isqrt(2 · 4^n)
    let target: u128 = 2u128 << (2 * n);
    let mut lo: u128 = 0;
    let mut hi: u128 = 1u128 << (n + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if mid * mid <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0..n).rev().map(|i| ((lo >> i) & 1) as u8).collect())
}

/// Cylinders of the binary expansion of `√2 − 1` at the given depths.
pub fn sqrt2_family(mu: &MarkovMeasure, depths: impl IntoIterator<Item = usize>) -> Result<NeighborhoodSystem> {
    let depths: Vec<usize> = depths.into_iter().collect();
    let longest = depths.iter().copied().max().unwrap_or(0);
    let seq = sqrt2_minus_1_digits(longest)?;
    NeighborhoodSystem::prefix_family(mu, &seq, &depths, "binary expansion of sqrt(2)-1")
}
