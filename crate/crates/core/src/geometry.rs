//! Coding between full-branch interval maps `x ↦ m·x mod 1` and their shift
//! spaces, metric holes and their cylinder sandwiches, and the exceedance
//! identity for distance observables.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::cylinder::{CylinderUnion, NeighborhoodSystem, MATERIALIZE_LIMIT};
use crate::error::{precondition, Error, Result};
use crate::markov::{stream_rng, MarkovMeasure, Word};
use crate::math;
use crate::montecarlo::Dynamics;
use crate::systems;

/// Slack used when comparing interval endpoints with cell boundaries.
const GRID_TOLERANCE: f64 = 1e-9;

/// The map `x ↦ m·x mod 1` on `[0, 1)` with Lebesgue measure, coded by the
/// base-`m` digits of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMarkovMap {
    branches: usize,
    scale: u64,
}

impl IntervalMarkovMap {
    pub fn new(branches: usize) -> Result<Self> {
        if !(2..=256).contains(&branches) {
            return Err(precondition("interval map needs 2..=256 branches"));
        }
        let m = branches as u64;
        let mut scale = 1u64;
        while let Some(next) = scale.checked_mul(m) {
            if next > 1u64 << 63 {
                break;
            }
            scale = next;
        }
        Ok(IntervalMarkovMap { branches, scale })
    }

    pub fn doubling() -> Self {
        Self::new(2).expect("two branches")
    }

    pub fn tripling() -> Self {
        Self::new(3).expect("three branches")
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    /// The shift-side measure: uniform Bernoulli on `branches` symbols.
    pub fn measure(&self) -> MarkovMeasure {
        MarkovMeasure::uniform(self.branches).expect("at least two branches")
    }

    /// Applies the map once.
    pub fn apply(&self, x: f64) -> f64 {
        let y = x * self.branches as f64;
        y - math::floor(y)
    }

    /// First `n` base-`m` digits of `x ∈ [0, 1)`.
    pub fn encode(&self, x: f64, n: usize) -> Result<Word> {
        if !(0.0..1.0).contains(&x) {
            return Err(precondition(format!("point {x} outside [0, 1)")));
        }
        let m = self.branches as f64;
        let mut r = x;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let y = r * m;
            let d = (math::floor(y) as usize).min(self.branches - 1);
            out.push(d as u8);
            r = y - d as f64;
        }
        Ok(Word(out))
    }

    /// The half-open interval `[a, b)` of points whose digits start with `w`.
    pub fn decode(&self, w: &[u8]) -> Result<(f64, f64)> {
        let m = self.branches as f64;
        let mut a = 0.0;
        let mut width = 1.0;
        for &d in w {
            if d as usize >= self.branches {
                return Err(Error::SymbolOutOfRange { symbol: d as usize, alphabet_size: self.branches });
            }
            width /= m;
            a += d as f64 * width;
        }
        Ok((a, a + width))
    }
}

/// A point of `[0, 1)` held as an exact base-`m` digit buffer, so iterating
/// the map never loses precision: each step drops the leading digit and
/// appends a fresh uniform one, which is the stationary law conditioned on
/// the past.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DigitPoint {
    value: u64,
}

impl IntervalMarkovMap {
    pub fn point(&self, p: &DigitPoint) -> f64 {
        p.value as f64 / self.scale as f64
    }
}

impl Dynamics for IntervalMarkovMap {
    type State = DigitPoint;

    fn draw_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> DigitPoint {
        DigitPoint { value: rng.random_range(0..self.scale) }
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut DigitPoint, rng: &mut R) {
        let m = self.branches as u64;
        let d = rng.random_range(0..m);
        state.value = (state.value % (self.scale / m)) * m + d;
    }
}

/// The Cantor family `U_n` for the tripling map, `n = 1..=n_max`.
pub fn cantor_neighborhoods(n_max: usize) -> Result<NeighborhoodSystem> {
    systems::cantor_system(&systems::tripling(), 1, n_max)
}

/// A finite union of open subintervals of `[0, 1]`, stored sorted and merged.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricHole {
    intervals: Vec<(f64, f64)>,
}

impl MetricHole {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(precondition("metric hole needs at least one interval"));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(precondition(format!("interval ({a}, {b}) is empty or not finite")));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            let (a, b) = (a.max(0.0), b.min(1.0));
            if a >= b {
                continue;
            }
            match merged.last_mut() {
                Some(last) if a < last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if merged.is_empty() {
            return Err(precondition("metric hole misses [0, 1]"));
        }
        Ok(MetricHole { intervals: merged })
    }

    /// The open `radius`-neighborhood of each closed interval in `cores`,
    /// clipped to `[0, 1]`.
    pub fn fattening(cores: &[(f64, f64)], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(precondition("fattening radius must be positive"));
        }
        Self::new(cores.iter().map(|&(a, b)| (a - radius, b + radius)).collect())
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.1 <= x);
        self.intervals.get(i).is_some_and(|&(a, b)| a < x && x < b)
    }
}

/// Inner and outer cylinder approximations `V ⊆ U ⊆ W` of a metric hole at
/// the depth set by the resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    pub depth: usize,
    pub inner: CylinderUnion,
    pub outer: CylinderUnion,
    pub inner_measure: f64,
    pub outer_measure: f64,
    pub gap: f64,
    /// `gap / μ(V)`; small values mean the sandwich is tight relative to the
    /// hole.
    pub relative_gap: f64,
}

/// Sandwiches `hole` between unions of cylinders of depth `κ`, the smallest
/// integer with `m^{-κ} ≤ resolution`. `V` holds the cells inside the closure
/// of the hole and `W` the cells meeting it in positive length.
pub fn metric_hole_sandwich(map: &IntervalMarkovMap, hole: &MetricHole, resolution: f64) -> Result<Sandwich> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(precondition("resolution must lie in (0, 1]"));
    }
    let m = map.branches();
    let mut depth = 0usize;
    let mut cells = 1.0f64;
    while 1.0 / cells > resolution {
        depth += 1;
        cells *= m as f64;
    }
    if cells > (1u64 << 62) as f64 {
        return Err(precondition("resolution too fine for cell indexing"));
    }
    let total = cells as u64;
    let mut inner_cells = Vec::new();
    let mut outer_cells = Vec::new();
    for &(a, b) in hole.intervals() {
        let (lo, hi) = (a * cells, b * cells);
        let inner_lo = math::ceil(lo - GRID_TOLERANCE).max(0.0) as u64;
        let inner_hi = (math::floor(hi + GRID_TOLERANCE) as u64).min(total);
        let outer_lo = math::floor(lo + GRID_TOLERANCE).max(0.0) as u64;
        let outer_hi = (math::ceil(hi - GRID_TOLERANCE) as u64).min(total);
        if outer_hi.saturating_sub(outer_lo) as usize + outer_cells.len() > MATERIALIZE_LIMIT {
            return Err(Error::BudgetExceeded { needed: (outer_hi - outer_lo) as usize, budget: MATERIALIZE_LIMIT });
        }
        inner_cells.extend(inner_lo..inner_hi);
        outer_cells.extend(outer_lo..outer_hi);
    }
    if inner_cells.is_empty() {
        return Err(Error::EmptyInnerApproximation { depth });
    }
    outer_cells.dedup();
    inner_cells.dedup();
    let to_words = |cells: &[u64]| -> Vec<Word> { cells.iter().map(|&i| cell_word(i, m, depth)).collect() };
    let mu = map.measure();
    let inner = CylinderUnion::from_canonical(depth, to_words(&inner_cells));
    let outer = CylinderUnion::from_canonical(depth, to_words(&outer_cells));
    let inner_measure = inner_cells.len() as f64 / cells;
    let outer_measure = outer_cells.len() as f64 / cells;
    debug_assert!((inner.measure_of(&mu) - inner_measure).abs() < 1e-9);
    let gap = outer_measure - inner_measure;
    Ok(Sandwich { depth, inner, outer, inner_measure, outer_measure, gap, relative_gap: gap / inner_measure })
}

fn cell_word(mut index: u64, m: usize, depth: usize) -> Word {
    let mut w = alloc::vec![0u8; depth];
    for slot in w.iter_mut().rev() {
        *slot = (index % m as u64) as u8;
        index /= m as u64;
    }
    Word(w)
}

/// Outcome of comparing `{max_{1≤k≤t} φ(T^k x) < u}` with `{τ > t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExceedanceReport {
    pub samples: usize,
    pub horizon: usize,
    pub threshold: f64,
    /// Samples whose maximum stayed below the threshold.
    pub below: usize,
}

/// Checks sample by sample that the running maximum of `observable` stays
/// below `threshold` exactly when the orbit avoids `hole` for `horizon`
/// steps. Any disagreement is an error naming the first offending sample.
pub fn exceedance_identity_check<D, O, H>(
    dynamics: &D,
    observable: O,
    threshold: f64,
    hole: H,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<ExceedanceReport>
where
    D: Dynamics,
    O: Fn(&D::State) -> f64,
    H: Fn(&D::State) -> bool,
{
    if horizon == 0 || samples == 0 {
        return Err(precondition("exceedance check needs positive horizon and sample count"));
    }
    let mut rng = stream_rng(seed, 0);
    let mut below = 0;
    for sample in 0..samples {
        let mut x = dynamics.draw_stationary(&mut rng);
        let mut running_max = f64::NEG_INFINITY;
        let mut survived = true;
        for _ in 0..horizon {
            dynamics.advance(&mut x, &mut rng);
            running_max = running_max.max(observable(&x));
            survived &= !hole(&x);
        }
        let max_below = running_max < threshold;
        if max_below != survived {
            return Err(Error::ExceedanceMismatch { sample });
        }
        below += usize::from(max_below);
    }
    Ok(ExceedanceReport { samples, horizon, threshold, below })
}
