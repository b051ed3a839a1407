//! Seeded Monte Carlo survival estimates for arbitrary dynamics.
//!
//! Parallel runs split work across `stream_index` values and merge
//! [`HitCounts`] in shard order; the merge is plain integer addition, so the
//! result does not depend on scheduling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::escape::{CurveMethod, SurvivalCurve};
use crate::markov::{stream_rng, MarkovMeasure};
use crate::math;

/// Rejection sampling gives up once this many attempts have been made with
/// acceptance below [`MIN_ACCEPTANCE`].
pub const REJECTION_ATTEMPTS: u64 = 1_000_000;
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// A stationary stochastic or deterministic system that can be sampled.
pub trait Dynamics {
    type State;

    fn draw_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn advance<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R);
}

/// First-hit histogram: `first_hits[j]` counts samples with `τ = j` for
/// `1 ≤ j ≤ horizon`; samples surviving the horizon are not in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitCounts {
    pub horizon: usize,
    pub samples: u64,
    pub first_hits: Vec<u64>,
    pub attempts: u64,
    pub conditional: bool,
}

impl HitCounts {
    pub fn new(horizon: usize, conditional: bool) -> Self {
        HitCounts { horizon, samples: 0, first_hits: vec![0; horizon + 1], attempts: 0, conditional }
    }

    /// Adds another shard's counts. Both must share horizon and start law.
    pub fn merge(&mut self, other: &HitCounts) -> Result<()> {
        if self.horizon != other.horizon || self.conditional != other.conditional {
            return Err(crate::error::precondition("cannot merge counts with different horizon or start"));
        }
        self.samples += other.samples;
        self.attempts += other.attempts;
        for (a, b) in self.first_hits.iter_mut().zip(&other.first_hits) {
            *a += b;
        }
        Ok(())
    }

    pub fn to_curve(&self) -> SurvivalCurve {
        let n = self.samples as f64;
        let mut alive = self.samples;
        let mut values = Vec::with_capacity(self.horizon + 1);
        let mut errors = Vec::with_capacity(self.horizon + 1);
        for t in 0..=self.horizon {
            alive -= self.first_hits[t];
            let v = if self.samples == 0 { 0.0 } else { alive as f64 / n };
            values.push(v);
            errors.push(if self.samples == 0 { 0.0 } else { math::sqrt(v * (1.0 - v) / n) });
        }
        SurvivalCurve::from_parts(values, CurveMethod::MonteCarlo { samples: self.samples, std_errors: errors }, self.conditional)
    }
}

/// Simulates `samples` orbits for up to `horizon` steps and records first
/// hits of `hole` at times `1..=horizon`. Conditional starts are drawn from
/// the stationary law by rejection on `hole`.
pub fn hit_counts<D, F, R>(
    dynamics: &D,
    hole: F,
    horizon: usize,
    samples: u64,
    conditional: bool,
    rng: &mut R,
) -> Result<HitCounts>
where
    D: Dynamics,
    F: Fn(&D::State) -> bool,
    R: Rng + ?Sized,
{
    let mut counts = HitCounts::new(horizon, conditional);
    let mut accepted = 0u64;
    for _ in 0..samples {
        let mut x = loop {
            let x = dynamics.draw_stationary(rng);
            counts.attempts += 1;
            if !conditional || hole(&x) {
                accepted += 1;
                break x;
            }
            if counts.attempts >= REJECTION_ATTEMPTS {
                let acceptance = accepted as f64 / counts.attempts as f64;
                if acceptance < MIN_ACCEPTANCE {
                    return Err(Error::RejectionTooRare { acceptance });
                }
            }
        };
        for t in 1..=horizon {
            dynamics.advance(&mut x, rng);
            if hole(&x) {
                counts.first_hits[t] += 1;
                break;
            }
        }
        counts.samples += 1;
    }
    Ok(counts)
}

/// Single-stream Monte Carlo survival curve with binomial standard errors.
pub fn survival_mc<D, F>(
    dynamics: &D,
    hole: F,
    horizon: usize,
    samples: u64,
    conditional: bool,
    seed: u64,
    stream_index: u64,
) -> Result<SurvivalCurve>
where
    D: Dynamics,
    F: Fn(&D::State) -> bool,
{
    if samples == 0 {
        return Err(crate::error::precondition("Monte Carlo needs at least one sample"));
    }
    let mut rng = stream_rng(seed, stream_index);
    Ok(hit_counts(dynamics, hole, horizon, samples, conditional, &mut rng)?.to_curve())
}

/// The stationary Markov chain seen through a sliding window of the last
/// `depth` symbols, so a depth-`depth` cylinder hole is a window test.
#[derive(Clone, Debug)]
pub struct MarkovWindow<'a> {
    pub measure: &'a MarkovMeasure,
    pub depth: usize,
}

impl Dynamics for MarkovWindow<'_> {
    type State = Vec<u8>;

    fn draw_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let mut w = Vec::with_capacity(self.depth);
        let mut s = self.measure.draw_initial(rng.random::<f64>());
        w.push(s);
        for _ in 1..self.depth {
            s = self.measure.draw_next(s, rng.random::<f64>());
            w.push(s);
        }
        w
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut Vec<u8>, rng: &mut R) {
        let last = *state.last().expect("window is nonempty");
        let next = self.measure.draw_next(last, rng.random::<f64>());
        state.rotate_left(1);
        *state.last_mut().unwrap() = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::CylinderUnion;
    use crate::escape::survival_exact;
    use crate::systems;

    #[test]
    fn bernoulli_point_at_t5() {
        let full = systems::doubling();
        let w = MarkovWindow { measure: &full, depth: 1 };
        let c = survival_mc(&w, |s: &Vec<u8>| s[0] == 1, 5, 100_000, false, 7, 0).unwrap();
        let err = c.std_errors().unwrap()[5];
        assert!((c.values()[5] - 1.0 / 32.0).abs() < 4.0 * err);
    }

    #[test]
    fn golden_mean_agrees_with_exact() {
        let g = systems::golden_mean();
        let u = CylinderUnion::symbols(&g, &[1]).unwrap();
        let exact = survival_exact(&g, &u, 10, false).unwrap();
        let w = MarkovWindow { measure: &g, depth: 1 };
        let c = survival_mc(&w, |s: &Vec<u8>| u.contains(s), 10, 50_000, false, 11, 3).unwrap();
        for t in 0..=10 {
            let se = c.std_errors().unwrap()[t].max(1e-12);
            assert!((c.values()[t] - exact.values()[t]).abs() <= 4.0 * se + 1e-12, "t = {}", t);
        }
    }

    #[test]
    fn tiny_sample_is_monotone() {
        let full = systems::doubling();
        let w = MarkovWindow { measure: &full, depth: 1 };
        let c = survival_mc(&w, |s: &Vec<u8>| s[0] == 1, 8, 10, false, 1, 0).unwrap();
        assert!(c.values().windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn conditional_rejection_gives_up_on_tiny_holes() {
        let full = systems::doubling();
        let w = MarkovWindow { measure: &full, depth: 30 };
        let r = survival_mc(&w, |s: &Vec<u8>| s.iter().all(|&b| b == 0), 3, 10, true, 1, 0);
        assert!(matches!(r, Err(Error::RejectionTooRare { .. })));
    }

    #[test]
    fn shard_merge_is_order_independent_sum() {
        let full = systems::doubling();
        let w = MarkovWindow { measure: &full, depth: 2 };
        let hole = |s: &Vec<u8>| s == &[1, 1];
        let mut a = hit_counts(&w, hole, 6, 500, false, &mut stream_rng(5, 0)).unwrap();
        let b = hit_counts(&w, hole, 6, 500, false, &mut stream_rng(5, 1)).unwrap();
        let mut b2 = b.clone();
        b2.merge(&a).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a, b2);
        assert_eq!(a.samples, 1000);
    }
}
