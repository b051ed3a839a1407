//! Holes as canonical unions of cylinders, and nested neighborhood systems.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{precondition, Error, Result};
use crate::markov::{MarkovMeasure, Word};
use crate::math;

/// Largest number of words a materialized shifted intersection may hold.
pub(crate) const MATERIALIZE_LIMIT: usize = 4_000_000;

/// A union of depth-`n` cylinders. Words are sorted and unique, so equality
/// is structural.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderUnion {
    depth: usize,
    words: Vec<Word>,
}

impl CylinderUnion {
    /// Canonicalizes `words` and checks each against `mu`.
    pub fn new(mu: &MarkovMeasure, depth: usize, words: Vec<Word>) -> Result<Self> {
        if depth == 0 {
            return Err(precondition("cylinder depth must be positive"));
        }
        for w in &words {
            if w.len() != depth {
                return Err(precondition(format!("word {} has length {}, expected depth {}", w, w.len(), depth)));
            }
            mu.check_admissible(w.symbols())?;
        }
        Ok(Self::from_canonical(depth, words))
    }

    pub fn empty(depth: usize) -> Self {
        CylinderUnion { depth, words: Vec::new() }
    }

    /// The single cylinder `[w]`.
    pub fn cylinder(mu: &MarkovMeasure, w: &[u8]) -> Result<Self> {
        Self::new(mu, w.len(), vec![Word::from(w)])
    }

    /// All 1-cylinders for the listed symbols.
    pub fn symbols(mu: &MarkovMeasure, symbols: &[u8]) -> Result<Self> {
        Self::new(mu, 1, symbols.iter().map(|&s| Word(vec![s])).collect())
    }

    pub(crate) fn from_canonical(depth: usize, mut words: Vec<Word>) -> Self {
        words.sort_unstable();
        words.dedup();
        CylinderUnion { depth, words }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &[u8]) -> bool {
        w.len() == self.depth && self.words.binary_search_by(|x| x.symbols().cmp(w)).is_ok()
    }

    /// `μ(U)`: sum of the cylinder measures.
    pub fn measure_of(&self, mu: &MarkovMeasure) -> f64 {
        self.words.iter().map(|w| mu.word_measure_unchecked(w.symbols())).sum()
    }

    /// `μ(U^j)` for the outer approximation, without materializing it.
    pub fn outer_measure(&self, mu: &MarkovMeasure, j: usize) -> Result<f64> {
        if j == 0 || j > self.depth {
            return Err(precondition(format!("outer approximation depth {} outside 1..={}", j, self.depth)));
        }
        // Sorted words keep equal prefixes adjacent.
        let mut total = 0.0;
        let mut prev: Option<&[u8]> = None;
        for w in &self.words {
            let p = &w.0[..j];
            if prev != Some(p) {
                total += mu.word_measure_unchecked(p);
                prev = Some(p);
            }
        }
        Ok(total)
    }

    /// The same set written as a union of depth-`j` cylinders.
    pub fn refine(&self, mu: &MarkovMeasure, j: usize) -> Result<Self> {
        if j < self.depth {
            return Err(precondition(format!("refine to depth {} below current depth {}", j, self.depth)));
        }
        let mut out = Vec::new();
        for w in &self.words {
            let mut buf = w.0.clone();
            extend_all(mu, &mut buf, j, &mut out);
            if out.len() > MATERIALIZE_LIMIT {
                return Err(Error::BudgetExceeded { needed: out.len(), budget: MATERIALIZE_LIMIT });
            }
        }
        Ok(Self::from_canonical(j, out))
    }

    /// Outer approximation by `j`-cylinders: the distinct length-`j`
    /// prefixes.
    pub fn outer_approximation(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.depth {
            return Err(precondition(format!("outer approximation depth {} outside 1..={}", j, self.depth)));
        }
        let words = self.words.iter().map(|w| Word::from(&w.0[..j])).collect();
        Ok(Self::from_canonical(j, words))
    }

    /// `U ∩ T^{-k} U` as a union of depth-`(n + k)` cylinders.
    pub fn shifted_intersection(&self, mu: &MarkovMeasure, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(precondition("shift must be positive"));
        }
        let n = self.depth;
        let mut out = Vec::new();
        if k < n {
            let by_prefix = self.prefix_index(n - k);
            for u in &self.words {
                if let Some(vs) = by_prefix.get(&u.0[k..]) {
                    for v in vs {
                        let mut w = u.0.clone();
                        w.extend_from_slice(&v[n - k..]);
                        out.push(Word(w));
                    }
                }
            }
        } else {
            let gap = k - n;
            let gaps = if gap == 0 { vec![Vec::new()] } else { mu.admissible_words(gap).into_iter().map(|w| w.0).collect() };
            for u in &self.words {
                let ul = *u.0.last().unwrap();
                for g in &gaps {
                    if let Some(&g0) = g.first() {
                        if !mu.allowed(ul, g0) {
                            continue;
                        }
                    }
                    let bridge = g.last().copied().unwrap_or(ul);
                    for v in &self.words {
                        if !mu.allowed(bridge, v.0[0]) {
                            continue;
                        }
                        let mut w = u.0.clone();
                        w.extend_from_slice(g);
                        w.extend_from_slice(&v.0);
                        out.push(Word(w));
                        if out.len() > MATERIALIZE_LIMIT {
                            return Err(Error::BudgetExceeded { needed: out.len(), budget: MATERIALIZE_LIMIT });
                        }
                    }
                }
            }
        }
        Ok(Self::from_canonical(n + k, out))
    }

    fn prefix_index(&self, len: usize) -> BTreeMap<&[u8], Vec<&[u8]>> {
        let mut map: BTreeMap<&[u8], Vec<&[u8]>> = BTreeMap::new();
        for v in &self.words {
            map.entry(&v.0[..len]).or_default().push(&v.0);
        }
        map
    }

    /// `μ(U ∩ T^{-k} U)` without materializing the intersection.
    pub fn intersection_measure(&self, mu: &MarkovMeasure, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(precondition("shift must be positive"));
        }
        let n = self.depth;
        if k < n {
            let by_prefix = self.prefix_index(n - k);
            let mut total = 0.0;
            for u in &self.words {
                if let Some(vs) = by_prefix.get(&u.0[k..]) {
                    let mu_u = mu.word_measure_unchecked(&u.0);
                    for v in vs {
                        // Extending u by v's tail multiplies by the tail
                        // transition probabilities.
                        let mut f = mu_u;
                        let mut prev = *u.0.last().unwrap();
                        for &s in &v[n - k..] {
                            f *= mu.p(prev, s);
                            prev = s;
                        }
                        total += f;
                    }
                }
            }
            Ok(total)
        } else {
            let m = mu.alphabet_size();
            let pk = mu.matrix_power(k - n + 1);
            let pi = mu.stationary();
            let mut last_mass = vec![0.0; m];
            let mut first_mass = vec![0.0; m];
            for w in &self.words {
                let x = mu.word_measure_unchecked(&w.0);
                last_mass[*w.0.last().unwrap() as usize] += x;
                first_mass[w.0[0] as usize] += x;
            }
            let mut total = 0.0;
            for a in 0..m {
                for b in 0..m {
                    if last_mass[a] > 0.0 && first_mass[b] > 0.0 {
                        total += last_mass[a] * pk[a * m + b] * first_mass[b] / pi[b];
                    }
                }
            }
            Ok(total)
        }
    }

    fn intersects_after(&self, mu: &MarkovMeasure, k: usize, reach: &[bool]) -> bool {
        let n = self.depth;
        if k < n {
            let by_prefix = self.prefix_index(n - k);
            self.words.iter().any(|u| by_prefix.contains_key(&u.0[k..]))
        } else {
            let m = mu.alphabet_size();
            let mut lasts = vec![false; m];
            let mut firsts = vec![false; m];
            for w in &self.words {
                lasts[*w.0.last().unwrap() as usize] = true;
                firsts[w.0[0] as usize] = true;
            }
            (0..m).any(|a| lasts[a] && (0..m).any(|b| firsts[b] && reach[a * m + b]))
        }
    }

    /// Least `k ≤ k_max` with `U ∩ T^{-k} U ≠ ∅`.
    pub fn period(&self, mu: &MarkovMeasure, k_max: usize) -> Result<PeriodSearch> {
        if k_max == 0 {
            return Err(precondition("k_max must be >= 1"));
        }
        if self.is_empty() {
            return Err(precondition("period of an empty union"));
        }
        let m = mu.alphabet_size();
        // reach = boolean adjacency power A^{k-n+1}, advanced as k grows.
        let adj: Vec<bool> = (0..m * m).map(|i| mu.allowed((i / m) as u8, (i % m) as u8)).collect();
        let mut reach = adj.clone();
        for k in 1..=k_max {
            if k > self.depth {
                reach = bool_mul(m, &reach, &adj);
            }
            if self.intersects_after(mu, k, &reach) {
                return Ok(PeriodSearch::Found(k));
            }
        }
        Ok(PeriodSearch::ExceedsMax)
    }

    /// Least `k ≤ k_max` with `μ(U ∩ T^{-k} U) > 0`.
    pub fn essential_period(&self, mu: &MarkovMeasure, k_max: usize) -> Result<PeriodSearch> {
        if k_max == 0 {
            return Err(precondition("k_max must be >= 1"));
        }
        if self.is_empty() {
            return Err(precondition("period of an empty union"));
        }
        for k in 1..=k_max {
            if self.intersection_measure(mu, k)? > 0.0 {
                return Ok(PeriodSearch::Found(k));
            }
        }
        Ok(PeriodSearch::ExceedsMax)
    }

    /// Set inclusion after refining both sides to a common depth.
    pub fn is_subset_of(&self, mu: &MarkovMeasure, other: &CylinderUnion) -> Result<bool> {
        let d = self.depth.max(other.depth);
        let a = self.refine(mu, d)?;
        let b = other.refine(mu, d)?;
        Ok(a.words.iter().all(|w| b.contains(&w.0)))
    }
}

pub(crate) fn extend_all(mu: &MarkovMeasure, buf: &mut Vec<u8>, target: usize, out: &mut Vec<Word>) {
    if buf.len() == target {
        out.push(Word(buf.clone()));
        return;
    }
    let last = *buf.last().unwrap();
    for b in 0..mu.alphabet_size() as u8 {
        if mu.allowed(last, b) {
            buf.push(b);
            extend_all(mu, buf, target, out);
            buf.pop();
        }
    }
}

fn bool_mul(m: usize, a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut c = vec![false; m * m];
    for i in 0..m {
        for k in 0..m {
            if a[i * m + k] {
                for j in 0..m {
                    c[i * m + j] |= b[k * m + j];
                }
            }
        }
    }
    c
}

/// Result of a bounded period search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodSearch {
    Found(usize),
    ExceedsMax,
}

impl PeriodSearch {
    pub fn value(self) -> Option<usize> {
        match self {
            PeriodSearch::Found(k) => Some(k),
            PeriodSearch::ExceedsMax => None,
        }
    }
}

/// One level `U_n` of a neighborhood system, with its cylinder depth `κ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodEntry {
    pub kappa: usize,
    pub hole: CylinderUnion,
    pub measure: f64,
}

/// A nested family `U_1 ⊃ U_2 ⊃ …` of cylinder unions with nondecreasing
/// depths and strictly decreasing measures.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodSystem {
    entries: Vec<NeighborhoodEntry>,
    label: String,
}

impl NeighborhoodSystem {
    pub fn new(mu: &MarkovMeasure, holes: Vec<CylinderUnion>, label: impl Into<String>) -> Result<Self> {
        if holes.is_empty() {
            return Err(precondition("neighborhood system needs at least one hole"));
        }
        let mut entries: Vec<NeighborhoodEntry> = Vec::with_capacity(holes.len());
        for (i, hole) in holes.into_iter().enumerate() {
            if hole.is_empty() {
                return Err(precondition(format!("hole {} is empty", i)));
            }
            let measure = hole.measure_of(mu);
            if let Some(prev) = entries.last() {
                if hole.depth() < prev.kappa {
                    return Err(precondition(format!("depth decreases at entry {}", i)));
                }
                if !(measure < prev.measure) {
                    return Err(precondition(format!(
                        "measure does not decrease at entry {} ({} -> {})",
                        i, prev.measure, measure
                    )));
                }
                let prefixes = hole.outer_approximation(prev.kappa)?;
                if prefixes.words().iter().any(|w| !prev.hole.contains(w.symbols())) {
                    return Err(precondition(format!("entry {} is not nested in entry {}", i, i - 1)));
                }
            }
            entries.push(NeighborhoodEntry { kappa: hole.depth(), hole, measure });
        }
        Ok(NeighborhoodSystem { entries, label: label.into() })
    }

    /// Cylinders `[w_0 … w_{n-1}]` of one infinite sequence, for `n` in
    /// `depths`.
    pub fn prefix_family(mu: &MarkovMeasure, sequence: &[u8], depths: &[usize], label: impl Into<String>) -> Result<Self> {
        let holes = depths
            .iter()
            .map(|&n| {
                if n > sequence.len() {
                    return Err(precondition("sequence shorter than requested depth"));
                }
                CylinderUnion::cylinder(mu, &sequence[..n])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mu, holes, label)
    }

    pub fn entries(&self) -> &[NeighborhoodEntry] {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Finite-data diagnostics for the two goodness conditions.
///
/// Condition 1 passes when `κ_n μ(U_n)^ε` is strictly decreasing over the
/// second half of the entries and the last value is below half the first.
/// Condition 2 fits `C = max (μ(U_n^j) - μ(U_n)) j^{p'}` over all `j < κ_n`
/// and passes when the per-entry constant has stopped growing: the last
/// entry's constant is at most 1.1 times the largest constant among the first
/// three quarters of the entries.
#[derive(Clone, Debug, PartialEq)]
pub struct GoodnessReport {
    pub epsilon_used: f64,
    pub p_prime: f64,
    pub trend: Vec<f64>,
    pub per_entry_c: Vec<f64>,
    pub fitted_c: f64,
    /// `(entry index, j, μ(U_n^j) - μ(U_n))` for every tested pair.
    pub pairs: Vec<(usize, usize, f64)>,
    pub condition_1: Verdict,
    pub condition_2: Verdict,
}

impl GoodnessReport {
    pub fn passes_condition_1(&self) -> bool {
        self.condition_1 == Verdict::Pass
    }

    pub fn passes_condition_2(&self) -> bool {
        self.condition_2 == Verdict::Pass
    }
}

pub fn goodness_check(ns: &NeighborhoodSystem, mu: &MarkovMeasure, epsilon: f64, p_prime: f64) -> Result<GoodnessReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(precondition("epsilon must lie in (0, 1)"));
    }
    if !(p_prime > 1.0) {
        return Err(precondition("p' must exceed 1"));
    }
    let entries = ns.entries();
    let trend: Vec<f64> = entries.iter().map(|e| e.kappa as f64 * math::powf(e.measure, epsilon)).collect();
    let mut pairs = Vec::new();
    let mut per_entry_c = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let mut c: f64 = 0.0;
        for j in 1..e.kappa {
            let outer = e.hole.outer_measure(mu, j)?;
            let excess = (outer - e.measure).max(0.0);
            pairs.push((i, j, excess));
            c = c.max(excess * math::powf(j as f64, p_prime));
        }
        per_entry_c.push(c);
    }
    let fitted_c = per_entry_c.iter().copied().fold(0.0, f64::max);

    let n = entries.len();
    let (condition_1, condition_2) = if n < 4 {
        (Verdict::Inconclusive, Verdict::Inconclusive)
    } else {
        let tail = &trend[n / 2..];
        let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
        let halved = trend[n - 1] < trend[0] / 2.0;
        let c1 = if decreasing && halved { Verdict::Pass } else { Verdict::Fail };
        let cut = (3 * n) / 4;
        let early = per_entry_c[..cut.max(1)].iter().copied().fold(0.0, f64::max);
        let last = per_entry_c[n - 1];
        let c2 = if fitted_c.is_finite() && (last == 0.0 || last <= 1.1 * early) { Verdict::Pass } else { Verdict::Fail };
        (c1, c2)
    };
    Ok(GoodnessReport { epsilon_used: epsilon, p_prime, trend, per_entry_c, fitted_c, pairs, condition_1, condition_2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use approx::assert_abs_diff_eq;

    fn words(s: &[&str]) -> Vec<Word> {
        s.iter().map(|w| Word(w.bytes().map(|b| b - b'0').collect())).collect()
    }

    #[test]
    fn refine_examples() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let u = CylinderUnion::symbols(&full, &[0]).unwrap();
        assert_eq!(u.refine(&full, 1).unwrap(), u);
        assert_eq!(u.refine(&full, 2).unwrap().words(), &words(&["00", "01"])[..]);
        let g = systems::golden_mean();
        let one = CylinderUnion::symbols(&g, &[1]).unwrap();
        assert_eq!(one.refine(&g, 2).unwrap().words(), &words(&["10"])[..]);
        assert!(one.refine(&g, 0).is_err());
        let r = one.refine(&g, 6).unwrap();
        assert_abs_diff_eq!(r.measure_of(&g), one.measure_of(&g), epsilon = 1e-12);
    }

    #[test]
    fn outer_approximation_examples() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let u = CylinderUnion::new(&full, 3, words(&["000", "001", "110"])).unwrap();
        assert_eq!(u.outer_approximation(2).unwrap().words(), &words(&["00", "11"])[..]);
        assert_eq!(u.outer_approximation(3).unwrap(), u);
        assert!(u.outer_approximation(0).is_err());
        assert!(u.outer_approximation(4).is_err());

        let tri = MarkovMeasure::uniform(3).unwrap();
        let cantor = systems::cantor_holes(7);
        for n in 2..=7 {
            for j in 1..n {
                assert_eq!(cantor[n - 1].outer_approximation(j).unwrap(), cantor[j - 1]);
                let direct = cantor[n - 1].outer_measure(&tri, j).unwrap();
                assert_abs_diff_eq!(direct, cantor[j - 1].measure_of(&tri), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn shifted_intersection_examples() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let u = CylinderUnion::cylinder(&full, &[0, 1]).unwrap();
        assert!(u.shifted_intersection(&full, 1).unwrap().is_empty());
        let z = CylinderUnion::cylinder(&full, &[0, 0, 0]).unwrap();
        assert_eq!(z.shifted_intersection(&full, 1).unwrap().words(), &words(&["0000"])[..]);

        let tri = MarkovMeasure::uniform(3).unwrap();
        let cantor = systems::cantor_holes(9);
        for n in 2..=5 {
            for j in 1..n {
                assert_eq!(cantor[n - 1].shifted_intersection(&tri, j).unwrap(), cantor[n + j - 1]);
            }
        }
        assert!(z.shifted_intersection(&full, 0).is_err());
    }

    /// Brute force over all words of length n + k.
    fn brute_intersection(mu: &MarkovMeasure, u: &CylinderUnion, k: usize) -> Vec<Word> {
        let n = u.depth();
        mu.admissible_words(n + k).into_iter().filter(|w| u.contains(&w.0[..n]) && u.contains(&w.0[k..k + n])).collect()
    }

    #[test]
    fn shifted_intersection_matches_brute_force() {
        let g = systems::golden_mean();
        let u = CylinderUnion::new(&g, 3, words(&["000", "010", "100", "001"])).unwrap();
        for k in 1..=6 {
            let s = u.shifted_intersection(&g, k).unwrap();
            assert_eq!(s.words(), &brute_intersection(&g, &u, k)[..], "k = {}", k);
            assert_abs_diff_eq!(s.measure_of(&g), u.intersection_measure(&g, k).unwrap(), epsilon = 1e-14);
            assert!(s.measure_of(&g) <= u.measure_of(&g) + 1e-15);
        }
    }

    #[test]
    fn period_examples() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let u = CylinderUnion::cylinder(&full, &[0, 1]).unwrap();
        assert_eq!(u.period(&full, 10).unwrap(), PeriodSearch::Found(2));
        let z = CylinderUnion::cylinder(&full, &[0, 0, 0, 0]).unwrap();
        assert_eq!(z.period(&full, 10).unwrap(), PeriodSearch::Found(1));
        let p = CylinderUnion::cylinder(&full, &[0, 1, 0, 1]).unwrap();
        assert_eq!(p.period(&full, 10).unwrap(), PeriodSearch::Found(2));
        assert_eq!(p.essential_period(&full, 10).unwrap(), PeriodSearch::Found(2));
        assert!(p.period(&full, 0).is_err());
        let w = CylinderUnion::cylinder(&full, &[0, 1, 1]).unwrap();
        assert_eq!(w.period(&full, 2).unwrap(), PeriodSearch::ExceedsMax);
    }

    #[test]
    fn periods_agree_on_golden_mean_past_depth() {
        let g = systems::golden_mean();
        let u = CylinderUnion::cylinder(&g, &[1, 0, 0]).unwrap();
        let p = u.period(&g, 10).unwrap();
        assert_eq!(p, u.essential_period(&g, 10).unwrap());
        // 100 then 1 requires three steps to restart.
        assert_eq!(p, PeriodSearch::Found(3));
    }

    #[test]
    fn measure_examples() {
        let tri = MarkovMeasure::uniform(3).unwrap();
        let cantor = systems::cantor_holes(6);
        for (i, u) in cantor.iter().enumerate() {
            let n = (i + 1) as i32;
            assert_abs_diff_eq!(u.measure_of(&tri), math::powi(2.0 / 3.0, n), epsilon = 1e-14);
        }
        let all = CylinderUnion::symbols(&tri, &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(all.measure_of(&tri), 1.0, epsilon = 1e-15);
        let g = systems::golden_mean();
        assert_abs_diff_eq!(CylinderUnion::symbols(&g, &[1]).unwrap().measure_of(&g), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn neighborhood_system_rejects_constant_and_unnested() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let u = CylinderUnion::symbols(&full, &[0]).unwrap();
        assert!(NeighborhoodSystem::new(&full, vec![u.clone(), u.clone()], "const").is_err());
        let a = CylinderUnion::cylinder(&full, &[0, 0]).unwrap();
        let b = CylinderUnion::cylinder(&full, &[1, 0, 0]).unwrap();
        assert!(NeighborhoodSystem::new(&full, vec![a, b], "bad").is_err());
    }

    #[test]
    fn goodness_cantor_family() {
        let tri = MarkovMeasure::uniform(3).unwrap();
        // n·(2/3)^{n/2} peaks at n = 5 and only falls below half its first
        // value past n = 19.
        let ns = systems::cantor_system(&tri, 1, 20).unwrap();
        let r = goodness_check(&ns, &tri, 0.5, 2.0).unwrap();
        assert!(r.passes_condition_1());
        assert!(r.passes_condition_2());
        let short = systems::cantor_system(&tri, 1, 10).unwrap();
        assert!(!goodness_check(&short, &tri, 0.5, 2.0).unwrap().passes_condition_1());
        // Oracle: max over j < n ≤ 20 of ((2/3)^j - (2/3)^n) j^2.
        let mut c: f64 = 0.0;
        for n in 1..=20 {
            for j in 1..n {
                let excess = math::powi(2.0 / 3.0, j) - math::powi(2.0 / 3.0, n);
                c = c.max(excess * (j * j) as f64);
            }
        }
        assert_abs_diff_eq!(r.fitted_c, c, epsilon = 1e-12);
        // Bounded by the sup of (2/3)^j j^2, which sits at j = 5.
        assert!(r.fitted_c <= math::powi(2.0 / 3.0, 5) * 25.0);
    }

    #[test]
    fn goodness_point_cylinders() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let ns = systems::point_family(&full, &[0], 1..=12).unwrap();
        let r = goodness_check(&ns, &full, 0.5, 2.0).unwrap();
        assert!(r.passes_condition_1());
        for (i, t) in r.trend.iter().enumerate() {
            let n = (i + 1) as f64;
            assert_abs_diff_eq!(*t, n * math::powf(2.0, -n / 2.0), epsilon = 1e-14);
        }
        assert!(goodness_check(&ns, &full, 1.0, 2.0).is_err());
        assert!(goodness_check(&ns, &full, 0.5, 1.0).is_err());
    }

    #[test]
    fn goodness_short_family_inconclusive() {
        let full = MarkovMeasure::uniform(2).unwrap();
        let ns = systems::point_family(&full, &[0], 1..=3).unwrap();
        let r = goodness_check(&ns, &full, 0.5, 2.0).unwrap();
        assert_eq!(r.condition_1, Verdict::Inconclusive);
    }
}
