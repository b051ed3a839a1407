//! Finite-alphabet stationary Markov measures, admissible words, and seeded
//! path sampling.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! `seed_from_u64(seed)` and split by `set_stream(stream_index)`. ChaCha is a
//! counter-based generator, so a `(seed, stream_index)` pair yields the same
//! symbols on every platform.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{precondition, Error, Result};
use crate::math;

/// Dense eigen/linear solve is used up to this alphabet size.
const DENSE_LIMIT: usize = 64;

/// A finite word over `{0, .., m-1}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    /// `w` repeated until it has length `n` (prefix of the periodic sequence).
    pub fn periodic_prefix(w: &[u8], n: usize) -> Word {
        Word((0..n).map(|i| w[i % w.len()]).collect())
    }
}

impl From<&[u8]> for Word {
    fn from(s: &[u8]) -> Self {
        Word(s.to_vec())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{}\")", self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            let c = core::char::from_digit(s as u32, 36).unwrap_or('?');
            write!(f, "{}", c)?;
        }
        Ok(())
    }
}

/// A stationary Markov measure on a one-sided subshift of finite type.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    alphabet_size: usize,
    transitions: Vec<f64>,
    stationary: Vec<f64>,
    allowed: Vec<bool>,
    period: usize,
}

impl MarkovMeasure {
    /// Builds a measure from a row-stochastic matrix, computing its stationary
    /// vector. The chain must be irreducible and aperiodic.
    pub fn new(transitions: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::build(transitions, None)?;
        if m.period != 1 {
            return Err(Error::Periodic { period: m.period });
        }
        Ok(m)
    }

    /// Builds a measure with a caller-supplied stationary vector, rejected if
    /// `πP = π` fails beyond `1e-8`.
    pub fn with_stationary(transitions: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let m = Self::build(transitions, Some(stationary))?;
        if m.period != 1 {
            return Err(Error::Periodic { period: m.period });
        }
        Ok(m)
    }

    /// Bernoulli measure: every row equals `p`.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        Self::new(vec![p.to_vec(); p.len()])
    }

    /// Uniform measure on the full shift over `m` symbols.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::bernoulli(&vec![1.0 / m as f64; m])
    }

    /// Irreducible chains that may be periodic; used for suspensions with
    /// constant roofs, where periodicity is a property of the tower itself.
    pub(crate) fn new_irreducible(transitions: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(transitions, None)
    }

    fn build(rows: Vec<Vec<f64>>, supplied: Option<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 || m > 255 {
            return Err(Error::InvalidTransitions(format!("alphabet size {} outside 1..=255", m)));
        }
        let mut transitions = Vec::with_capacity(m * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidTransitions(format!("row {} has {} entries, expected {}", i, row.len(), m)));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidTransitions(format!("row {} has invalid entry {}", i, p)));
                }
                sum += p;
            }
            if math::abs(sum - 1.0) > 1e-12 {
                return Err(Error::InvalidTransitions(format!("row {} sums to {}", i, sum)));
            }
            transitions.extend_from_slice(row);
        }
        let allowed: Vec<bool> = transitions.iter().map(|&p| p > 0.0).collect();
        check_irreducible(m, &allowed)?;
        let period = chain_period(m, &allowed);
        let stationary = match supplied {
            None => solve_stationary(m, &transitions, period),
            Some(pi) => {
                validate_supplied(m, &transitions, &pi)?;
                pi
            }
        };
        let measure = MarkovMeasure { alphabet_size: m, transitions, stationary, allowed, period };
        let residual = measure.stationarity_residual();
        if residual > 1e-10 {
            return Err(Error::InvalidStationary(format!("computed stationary vector has residual {:e}", residual)));
        }
        Ok(measure)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn period(&self) -> usize {
        self.period
    }

    #[inline]
    pub fn p(&self, a: u8, b: u8) -> f64 {
        self.transitions[a as usize * self.alphabet_size + b as usize]
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.allowed[a as usize * self.alphabet_size + b as usize]
    }

    pub fn row(&self, a: u8) -> &[f64] {
        let m = self.alphabet_size;
        &self.transitions[a as usize * m..(a as usize + 1) * m]
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.alphabet_size as u8).map(|a| self.row(a).to_vec()).collect()
    }

    /// `max_j |(πP)_j - π_j|`.
    pub fn stationarity_residual(&self) -> f64 {
        let m = self.alphabet_size;
        (0..m)
            .map(|j| {
                let s: f64 = (0..m).map(|i| self.stationary[i] * self.transitions[i * m + j]).sum();
                math::abs(s - self.stationary[j])
            })
            .fold(0.0, f64::max)
    }

    /// Checks symbols and consecutive transitions.
    pub fn check_admissible(&self, w: &[u8]) -> Result<()> {
        for (i, &s) in w.iter().enumerate() {
            if s as usize >= self.alphabet_size {
                return Err(Error::SymbolOutOfRange { symbol: s as usize, alphabet_size: self.alphabet_size });
            }
            if i > 0 && !self.allowed(w[i - 1], s) {
                return Err(Error::Inadmissible { word: w.to_vec(), position: i });
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, w: &[u8]) -> bool {
        self.check_admissible(w).is_ok()
    }

    /// `μ([w]) = π_{w_0} ∏ P_{w_i w_{i+1}}`. Inadmissible words are an error.
    pub fn word_measure(&self, w: &[u8]) -> Result<f64> {
        if w.is_empty() {
            return Err(precondition("word_measure of the empty word"));
        }
        self.check_admissible(w)?;
        Ok(self.word_measure_unchecked(w))
    }

    pub(crate) fn word_measure_unchecked(&self, w: &[u8]) -> f64 {
        let mut v = self.stationary[w[0] as usize];
        for pair in w.windows(2) {
            v *= self.p(pair[0], pair[1]);
        }
        v
    }

    /// `k`-step transition matrix, row-major.
    pub fn matrix_power(&self, k: usize) -> Vec<f64> {
        let m = self.alphabet_size;
        let mut result = vec![0.0; m * m];
        for i in 0..m {
            result[i * m + i] = 1.0;
        }
        let mut base = self.transitions.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = mat_mul(m, &result, &base);
            }
            e >>= 1;
            if e > 0 {
                base = mat_mul(m, &base, &base);
            }
        }
        result
    }

    /// ψ-type coefficient at 1-cylinder resolution:
    /// `max_{a,b} |(P^k)_{ab} - π_b| / π_b`.
    pub fn mixing_proxy(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(precondition("mixing_proxy requires k >= 1"));
        }
        let m = self.alphabet_size;
        let pk = self.matrix_power(k);
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                let pb = self.stationary[b];
                worst = worst.max(math::abs(pk[a * m + b] - pb) / pb);
            }
        }
        Ok(worst)
    }

    /// All admissible words of length `n`, in lexicographic order.
    pub fn admissible_words(&self, n: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut stack: Vec<u8> = Vec::with_capacity(n);
        self.extend_words(&mut stack, n, &mut out);
        out
    }

    fn extend_words(&self, prefix: &mut Vec<u8>, n: usize, out: &mut Vec<Word>) {
        if prefix.len() == n {
            out.push(Word(prefix.clone()));
            return;
        }
        for b in 0..self.alphabet_size as u8 {
            if prefix.last().is_none_or(|&a| self.allowed(a, b)) {
                prefix.push(b);
                self.extend_words(prefix, n, out);
                prefix.pop();
            }
        }
    }

    /// Draws a symbol from π given a uniform `u` in `[0, 1)`.
    pub fn draw_initial(&self, u: f64) -> u8 {
        draw(&self.stationary, u)
    }

    /// Draws the successor of `a` given a uniform `u` in `[0, 1)`.
    pub fn draw_next(&self, a: u8, u: f64) -> u8 {
        draw(self.row(a), u)
    }
}

fn draw(weights: &[f64], u: f64) -> u8 {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i as u8;
            }
        }
    }
    last as u8
}

fn mat_mul(m: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// Computes the stationary vector of a row-stochastic matrix after checking
/// irreducibility and aperiodicity.
pub fn stationary_from_transitions(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    MarkovMeasure::new(rows.to_vec()).map(|m| m.stationary)
}

fn reach(m: usize, allowed: &[bool], start: usize, reverse: bool) -> Vec<bool> {
    let mut seen = vec![false; m];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..m {
            let edge = if reverse { allowed[v * m + u] } else { allowed[u * m + v] };
            if edge && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn check_irreducible(m: usize, allowed: &[bool]) -> Result<()> {
    let fwd = reach(m, allowed, 0, false);
    let bwd = reach(m, allowed, 0, true);
    if fwd.iter().all(|&x| x) && bwd.iter().all(|&x| x) {
        return Ok(());
    }
    // Report a closed class: an SCC whose forward closure is itself.
    let mut assigned = vec![false; m];
    for s in 0..m {
        if assigned[s] {
            continue;
        }
        let f = reach(m, allowed, s, false);
        let b = reach(m, allowed, s, true);
        let component: Vec<usize> = (0..m).filter(|&v| f[v] && b[v]).collect();
        for &v in &component {
            assigned[v] = true;
        }
        let closed = (0..m).filter(|&v| f[v]).count() == component.len();
        if closed && component.len() < m {
            return Err(Error::Reducible { component });
        }
    }
    let component: Vec<usize> = (0..m).filter(|&v| fwd[v] && bwd[v]).collect();
    Err(Error::Reducible { component })
}

fn chain_period(m: usize, allowed: &[bool]) -> usize {
    let mut level = vec![usize::MAX; m];
    level[0] = 0;
    let mut queue = alloc::collections::VecDeque::new();
    queue.push_back(0);
    let mut g = 0;
    while let Some(u) = queue.pop_front() {
        for v in 0..m {
            if !allowed[u * m + v] {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let d = (level[u] + 1).abs_diff(level[v]);
                g = math::gcd(g, d);
            }
        }
    }
    g.max(1)
}

fn validate_supplied(m: usize, p: &[f64], pi: &[f64]) -> Result<()> {
    if pi.len() != m {
        return Err(Error::InvalidStationary(format!("length {} does not match alphabet size {}", pi.len(), m)));
    }
    if pi.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidStationary("negative or non-finite entry".into()));
    }
    let sum: f64 = pi.iter().sum();
    if math::abs(sum - 1.0) > 1e-8 {
        return Err(Error::InvalidStationary(format!("entries sum to {}", sum)));
    }
    for j in 0..m {
        let s: f64 = (0..m).map(|i| pi[i] * p[i * m + j]).sum();
        if math::abs(s - pi[j]) > 1e-8 {
            return Err(Error::InvalidStationary(format!("pi P differs from pi by {:e} at {}", math::abs(s - pi[j]), j)));
        }
    }
    Ok(())
}

fn solve_stationary(m: usize, p: &[f64], period: usize) -> Vec<f64> {
    let mut pi = if m <= DENSE_LIMIT { dense_stationary(m, p) } else { power_stationary(m, p, period) };
    for x in pi.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    pi
}

/// Solves `(P^T - I) π = 0` with the last equation replaced by `Σ π = 1`.
fn dense_stationary(m: usize, p: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            a[i * m + j] = p[j * m + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m - 1) * m + j] = 1.0;
    }
    b[m - 1] = 1.0;
    for col in 0..m {
        let pivot = (col..m).max_by(|&r, &s| math::abs(a[r * m + col]).total_cmp(&math::abs(a[s * m + col]))).unwrap();
        if pivot != col {
            for j in 0..m {
                a.swap(col * m + j, pivot * m + j);
            }
            b.swap(col, pivot);
        }
        let d = a[col * m + col];
        for r in (col + 1)..m {
            let f = a[r * m + col] / d;
            if f != 0.0 {
                for j in col..m {
                    a[r * m + j] -= f * a[col * m + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = b[i];
        for j in (i + 1)..m {
            s -= a[i * m + j] * x[j];
        }
        x[i] = s / a[i * m + i];
    }
    x
}

/// Power iteration on the lazy chain `(P + I) / 2`, which shares π and is
/// aperiodic even when `P` is not.
fn power_stationary(m: usize, p: &[f64], _period: usize) -> Vec<f64> {
    let mut pi = vec![1.0 / m as f64; m];
    let mut next = vec![0.0; m];
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..m {
            let w = pi[i];
            if w == 0.0 {
                continue;
            }
            for j in 0..m {
                next[j] += 0.5 * w * p[i * m + j];
            }
            next[i] += 0.5 * w;
        }
        let diff = pi.iter().zip(&next).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max);
        core::mem::swap(&mut pi, &mut next);
        if diff < 1e-14 {
            break;
        }
    }
    pi
}

/// A seeded, shardable source of stationary Markov paths.
#[derive(Clone, Debug)]
pub struct PathSampler<'a> {
    pub measure: &'a MarkovMeasure,
    pub seed: u64,
    pub stream_index: u64,
}

impl<'a> PathSampler<'a> {
    pub fn new(measure: &'a MarkovMeasure, seed: u64, stream_index: u64) -> Self {
        PathSampler { measure, seed, stream_index }
    }

    /// Fresh generator positioned at the start of this sampler's stream.
    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, self.stream_index)
    }

    /// A stationary path of the given length; identical for identical
    /// `(seed, stream_index)`.
    pub fn sample_path(&self, length: usize) -> Result<Word> {
        if length == 0 {
            return Err(precondition("sample_path length must be >= 1"));
        }
        let mut rng = self.rng();
        Ok(Word(self.extend_path(&mut rng, length)))
    }

    pub fn extend_path<R: Rng>(&self, rng: &mut R, length: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(length);
        let mut s = self.measure.draw_initial(rng.random::<f64>());
        out.push(s);
        for _ in 1..length {
            s = self.measure.draw_next(s, rng.random::<f64>());
            out.push(s);
        }
        out
    }
}

/// The generator behind every seeded computation in this crate.
pub fn stream_rng(seed: u64, stream_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden() -> MarkovMeasure {
        MarkovMeasure::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_from_transitions(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-14);
        let pi = golden().stationary().to_vec();
        // π0 = π0/2 + π1, π1 = π0/2  =>  π = (2/3, 1/3).
        assert_abs_diff_eq!(pi[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pi[1], 1.0 / 3.0, epsilon = 1e-14);
        let u = MarkovMeasure::uniform(3).unwrap();
        for &x in u.stationary() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn reducible_chain_names_component() {
        let err = MarkovMeasure::new(vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.3, 0.3, 0.4]]).unwrap_err();
        assert_eq!(err, Error::Reducible { component: vec![1] });
    }

    #[test]
    fn periodic_chain_rejected() {
        let err = MarkovMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert_eq!(err, Error::Periodic { period: 2 });
    }

    #[test]
    fn bad_rows_rejected() {
        assert!(MarkovMeasure::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(MarkovMeasure::new(vec![vec![1.0]]).is_ok());
        assert!(MarkovMeasure::new(vec![vec![-0.5, 1.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn supplied_stationary_is_validated() {
        let rows = vec![vec![0.5, 0.5], vec![1.0, 0.0]];
        assert!(MarkovMeasure::with_stationary(rows.clone(), vec![2.0 / 3.0, 1.0 / 3.0]).is_ok());
        assert!(matches!(MarkovMeasure::with_stationary(rows, vec![0.5, 0.5]), Err(Error::InvalidStationary(_))));
    }

    #[test]
    fn power_iteration_path_for_large_alphabets() {
        let m = 70;
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut r = vec![0.0; m];
                r[i] = 0.5;
                r[(i + 1) % m] = 0.5;
                r
            })
            .collect();
        let mu = MarkovMeasure::new(rows).unwrap();
        for &x in mu.stationary() {
            assert_abs_diff_eq!(x, 1.0 / m as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn word_measure_examples() {
        let b = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(b.word_measure(&[0, 1, 1]).unwrap(), 0.125, epsilon = 1e-15);
        let u = MarkovMeasure::uniform(3).unwrap();
        assert_abs_diff_eq!(u.word_measure(&[2, 0, 1, 1]).unwrap(), 1.0 / 81.0, epsilon = 1e-15);
        let g = golden();
        assert_abs_diff_eq!(g.word_measure(&[0, 1]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(g.word_measure(&[0, 1, 1]).unwrap_err(), Error::Inadmissible { word: vec![0, 1, 1], position: 2 });
        assert!(g.word_measure(&[]).is_err());
        assert!(g.word_measure(&[2]).is_err());
    }

    #[test]
    fn mixing_proxy_examples() {
        let b = MarkovMeasure::bernoulli(&[0.3, 0.7]).unwrap();
        for k in 1..6 {
            assert!(b.mixing_proxy(k).unwrap() < 1e-12);
        }
        let g = golden();
        assert!(g.mixing_proxy(10).unwrap() < g.mixing_proxy(1).unwrap());
        assert!(g.mixing_proxy(0).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let g = golden();
        let a = PathSampler::new(&g, 7, 3).sample_path(200).unwrap();
        let b = PathSampler::new(&g, 7, 3).sample_path(200).unwrap();
        let c = PathSampler::new(&g, 7, 4).sample_path(200).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(g.is_admissible(a.symbols()));
        assert!(PathSampler::new(&g, 7, 3).sample_path(0).is_err());
    }

    #[test]
    fn empirical_frequencies_match_stationary() {
        let g = golden();
        let n = 1_000_000;
        let w = PathSampler::new(&g, 11, 0).sample_path(n).unwrap();
        let ones = w.symbols().iter().filter(|&&s| s == 1).count() as f64 / n as f64;
        let p = 1.0 / 3.0;
        // Second eigenvalue -1/2 makes the asymptotic variance a third of
        // the binomial one, so the binomial bound is conservative here.
        let se = math::sqrt(p * (1.0 - p) / n as f64);
        assert!(math::abs(ones - p) < 4.0 * se, "{} vs {}", ones, p);
    }
}
