//! Discrete suspensions over a finite Markov base with a roof that is
//! constant on 1-cylinders.
//!
//! The tower is flattened into a Markov chain on states `(a, k)`,
//! `0 ≤ k < R(a)`: climb one floor per step, and from the top floor jump to
//! `(b, 0)` with the base transition probability. Holes live on floor 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cylinder::{extend_all, CylinderUnion, NeighborhoodSystem};
use crate::error::{precondition, Result};
use crate::escape::{localized_escape_rate, LocalizedRateTable};
use crate::markov::{MarkovMeasure, PathSampler};
use crate::math;

/// Base and tower localized limits must agree this closely.
pub const INDUCING_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct Tower {
    base: MarkovMeasure,
    roof: Vec<usize>,
    flattened: MarkovMeasure,
    /// Flattened index of `(a, 0)`.
    floor_start: Vec<usize>,
    mean_roof: f64,
    lift_residual: f64,
}

/// Builds the flattened chain of the suspension with roof `roof[a]`.
pub fn build_tower(base: &MarkovMeasure, roof: &[usize]) -> Result<Tower> {
    let m = base.alphabet_size();
    if roof.len() != m {
        return Err(precondition(format!("roof needs {} values, got {}", m, roof.len())));
    }
    if roof.contains(&0) {
        return Err(precondition("roof values must be >= 1"));
    }
    let total: usize = roof.iter().sum();
    if total > 256 {
        return Err(precondition("flattened tower exceeds 256 states"));
    }
    let mut floor_start = Vec::with_capacity(m);
    let mut acc = 0;
    for &r in roof {
        floor_start.push(acc);
        acc += r;
    }
    let mut rows = vec![vec![0.0; total]; total];
    for a in 0..m {
        let s = floor_start[a];
        for k in 0..roof[a] - 1 {
            rows[s + k][s + k + 1] = 1.0;
        }
        let top = s + roof[a] - 1;
        for b in 0..m {
            rows[top][floor_start[b]] = base.p(a as u8, b as u8);
        }
    }
    let flattened = MarkovMeasure::new_irreducible(rows)?;
    let pi = base.stationary();
    let mean_roof: f64 = pi.iter().zip(roof).map(|(p, &r)| p * r as f64).sum();
    let mut lift_residual: f64 = 0.0;
    for a in 0..m {
        for k in 0..roof[a] {
            let lifted = pi[a] / mean_roof;
            lift_residual = lift_residual.max(math::abs(flattened.stationary()[floor_start[a] + k] - lifted));
        }
    }
    Ok(Tower { base: base.clone(), roof: roof.to_vec(), flattened, floor_start, mean_roof, lift_residual })
}

impl Tower {
    pub fn base(&self) -> &MarkovMeasure {
        &self.base
    }

    pub fn roof(&self) -> &[usize] {
        &self.roof
    }

    pub fn flattened(&self) -> &MarkovMeasure {
        &self.flattened
    }

    /// Flattened symbol of `(a, k)`.
    pub fn state(&self, a: u8, k: usize) -> u8 {
        (self.floor_start[a as usize] + k) as u8
    }

    /// `μ̃(R)`, the base mean of the roof.
    pub fn mean_roof(&self) -> f64 {
        self.mean_roof
    }

    /// `μ(Ω_0)`: stationary mass of floor 0.
    pub fn floor0_mass(&self) -> f64 {
        self.floor_start.iter().map(|&s| self.flattened.stationary()[s]).sum()
    }

    /// `|μ(Ω_0) μ̃(R) - 1|`.
    pub fn kac_residual(&self) -> f64 {
        math::abs(self.floor0_mass() * self.mean_roof - 1.0)
    }

    /// Largest gap between the flattened stationary vector and
    /// `π_a / μ̃(R)` on every floor.
    pub fn lift_residual(&self) -> f64 {
        self.lift_residual
    }

    /// Base stationary law recovered from floor 0 of the tower.
    pub fn floor0_law(&self) -> Vec<f64> {
        let z = self.floor0_mass();
        self.floor_start.iter().map(|&s| self.flattened.stationary()[s] / z).collect()
    }

    /// Depth of the lift of a depth-`n` base hole.
    pub fn lifted_depth(&self, n: usize) -> usize {
        self.roof.iter().copied().max().unwrap() * (n - 1) + 1
    }
}

/// `Π(U)` on floor 0: the base word `w` becomes the tower path that climbs
/// each column, ending at `(w_{n-1}, 0)`; every path is then refined to the
/// common depth `R_max (n - 1) + 1`.
pub fn lift_hole(tower: &Tower, base_hole: &CylinderUnion) -> Result<CylinderUnion> {
    let n = base_hole.depth();
    let depth = tower.lifted_depth(n);
    let mut words = Vec::new();
    for w in base_hole.words() {
        tower.base.check_admissible(w.symbols())?;
        let mut path = Vec::with_capacity(depth);
        for &a in &w.symbols()[..n - 1] {
            for k in 0..tower.roof[a as usize] {
                path.push(tower.state(a, k));
            }
        }
        path.push(tower.state(w.symbols()[n - 1], 0));
        extend_all(&tower.flattened, &mut path, depth, &mut words);
    }
    CylinderUnion::new(&tower.flattened, depth, words)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducingReport {
    pub base: LocalizedRateTable,
    pub tower: LocalizedRateTable,
    /// `|base limit - tower limit|`; `NaN` if either table has no limit.
    pub difference: f64,
    pub passed: bool,
}

/// Localized escape rates of a base family and of its lift to the tower.
pub fn inducing_invariance_check(tower: &Tower, base_ns: &NeighborhoodSystem) -> Result<InducingReport> {
    let base = localized_escape_rate(&tower.base, base_ns)?;
    let lifted = base_ns.entries().iter().map(|e| lift_hole(tower, &e.hole)).collect::<Result<Vec<_>>>()?;
    let tower_ns = NeighborhoodSystem::new(&tower.flattened, lifted, format!("lift of {}", base_ns.label()))?;
    let lifted_table = localized_escape_rate(&tower.flattened, &tower_ns)?;
    let difference = match (base.limit(), lifted_table.limit()) {
        (Some(a), Some(b)) => math::abs(a - b),
        _ => f64::NAN,
    };
    Ok(InducingReport { base, tower: lifted_table, difference, passed: difference < INDUCING_TOLERANCE })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationRow {
    pub k: usize,
    /// Fraction of base points whose roof averages leave the `ε`-band at
    /// some `n` in `k..=horizon`.
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationTable {
    pub epsilon: f64,
    /// Longest Birkhoff sum inspected; the event `for some n ≥ k` is
    /// truncated here.
    pub horizon: usize,
    pub samples: u64,
    pub rows: Vec<DeviationRow>,
    /// Slope of `ln estimate` against `k` over rows with positive estimates.
    pub slope: Option<f64>,
}

pub const DEVIATION_MIN_SAMPLES: u64 = 10_000;

/// Monte Carlo estimate of `μ̃(B_{ε,k})`, the base points whose roof
/// averages `(1/n) S_n R` leave `(μ̃(R) - ε, μ̃(R) + ε)` for some `n ≥ k`.
pub fn large_deviation_probe(tower: &Tower, epsilon: f64, k_list: &[usize], samples: u64, seed: u64) -> Result<DeviationTable> {
    if samples < DEVIATION_MIN_SAMPLES {
        return Err(precondition("need at least 10^4 samples"));
    }
    if !(epsilon > 0.0) || k_list.is_empty() || k_list.contains(&0) {
        return Err(precondition("need epsilon > 0 and positive k values"));
    }
    let k_max = *k_list.iter().max().unwrap();
    let horizon = 4 * k_max;
    let sampler = PathSampler::new(&tower.base, seed, 0);
    let mut rng = sampler.rng();
    // last_bad[j] counts samples whose last deviating n equals j.
    let mut last_bad = vec![0u64; horizon + 1];
    for _ in 0..samples {
        let path = sampler.extend_path(&mut rng, horizon);
        let mut sum = 0usize;
        let mut last = 0;
        for (i, &a) in path.iter().enumerate() {
            sum += tower.roof[a as usize];
            let n = i + 1;
            if math::abs(sum as f64 / n as f64 - tower.mean_roof) > epsilon {
                last = n;
            }
        }
        last_bad[last] += 1;
    }
    let n = samples as f64;
    let rows: Vec<DeviationRow> = k_list
        .iter()
        .map(|&k| {
            let hits: u64 = last_bad[k..].iter().sum();
            let p = hits as f64 / n;
            DeviationRow { k, estimate: p, std_error: math::sqrt(p * (1.0 - p) / n) }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.estimate > 0.0).map(|r| (r.k as f64, math::ln(r.estimate))).unzip();
    let slope = math::fit_line(&xs, &ys).map(|f| f.slope);
    Ok(DeviationTable { epsilon, horizon, samples, rows, slope })
}
