//! The cat map `(x, y) ↦ (2x + y, x + y) mod 1` on the torus, segment
//! targets, and Monte Carlo exceedance rates into shrinking tubes.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{precondition, Error, Result};
use crate::markov::stream_rng;
use crate::math;
use crate::montecarlo::{hit_counts, Dynamics, HitCounts};

/// Samples per Monte Carlo shard; shard `j` of row `i` uses stream
/// `(i << 32) | j`, so any partition of shards across threads merges to the
/// same counts.
pub const SHARD_SIZE: u64 = 10_000;

/// Survivors required at the end of the rate window.
const MIN_SURVIVORS: u64 = 100;

/// Tolerance for matching a direction with an eigendirection.
const ALIGNMENT_TOLERANCE: f64 = 1e-9;

/// Expanding eigenvalue `(3 + √5) / 2`.
pub fn expanding_eigenvalue() -> f64 {
    (3.0 + math::sqrt(5.0)) / 2.0
}

/// Unit eigenvector for the expanding eigenvalue.
pub fn unstable_direction() -> [f64; 2] {
    normalize([1.0, expanding_eigenvalue() - 2.0])
}

/// Unit eigenvector for the contracting eigenvalue.
pub fn stable_direction() -> [f64; 2] {
    normalize([1.0, 1.0 / expanding_eigenvalue() - 2.0])
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = math::hypot(v[0], v[1]);
    [v[0] / n, v[1] / n]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alignment {
    Stable,
    Unstable,
    Generic,
}

/// A segment `p1 + t·direction`, `t ∈ [0, length]`, in the plane, read on
/// the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentTarget {
    p1: [f64; 2],
    direction: [f64; 2],
    length: f64,
    alignment: Alignment,
}

impl SegmentTarget {
    /// Endpoints must lie in `[-0.5, 1.5]²` so that nine translates cover
    /// every nearby lift.
    pub fn new(p1: [f64; 2], direction: [f64; 2], length: f64) -> Result<Self> {
        let norm = math::hypot(direction[0], direction[1]);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(precondition("segment direction must be a nonzero finite vector"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(precondition("segment length must be positive"));
        }
        let direction = [direction[0] / norm, direction[1] / norm];
        let p2 = [p1[0] + length * direction[0], p1[1] + length * direction[1]];
        for p in [p1, p2] {
            if !p.iter().all(|c| (-0.5..=1.5).contains(c)) {
                return Err(precondition(format!("segment endpoint {p:?} outside [-0.5, 1.5]^2")));
            }
        }
        let cross = |e: [f64; 2]| math::abs(direction[0] * e[1] - direction[1] * e[0]);
        let alignment = if cross(unstable_direction()) < ALIGNMENT_TOLERANCE {
            Alignment::Unstable
        } else if cross(stable_direction()) < ALIGNMENT_TOLERANCE {
            Alignment::Stable
        } else {
            Alignment::Generic
        };
        Ok(SegmentTarget { p1, direction, length, alignment })
    }

    pub fn from_angle(p1: [f64; 2], angle: f64, length: f64) -> Result<Self> {
        Self::new(p1, [math::cos(angle), math::sin(angle)], length)
    }

    pub fn from_slope(p1: [f64; 2], slope: f64, length: f64) -> Result<Self> {
        Self::new(p1, [1.0, slope], length)
    }

    pub fn unstable(p1: [f64; 2], length: f64) -> Result<Self> {
        Self::new(p1, unstable_direction(), length)
    }

    pub fn stable(p1: [f64; 2], length: f64) -> Result<Self> {
        Self::new(p1, stable_direction(), length)
    }

    pub fn p1(&self) -> [f64; 2] {
        self.p1
    }

    pub fn p2(&self) -> [f64; 2] {
        [self.p1[0] + self.length * self.direction[0], self.p1[1] + self.length * self.direction[1]]
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    /// Area of the `delta`-tube, valid while the tube does not overlap itself.
    pub fn tube_measure(&self, delta: f64) -> f64 {
        2.0 * delta * self.length + core::f64::consts::PI * delta * delta
    }

    fn planar_distance(&self, p: [f64; 2]) -> f64 {
        let rel = [p[0] - self.p1[0], p[1] - self.p1[1]];
        let t = (rel[0] * self.direction[0] + rel[1] * self.direction[1]).clamp(0.0, self.length);
        math::hypot(rel[0] - t * self.direction[0], rel[1] - t * self.direction[1])
    }

    /// Smallest distance between the segment and its nonzero integer
    /// translates. Translates are parallel, so the minimum is attained at an
    /// endpoint of one of the two.
    pub fn wrap_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                if i == 0 && j == 0 {
                    continue;
                }
                let (di, dj) = (i as f64, j as f64);
                let shifted = SegmentTarget { p1: [self.p1[0] + di, self.p1[1] + dj], ..self.clone() };
                let (q1, q2) = (shifted.p1(), shifted.p2());
                for d in [
                    self.planar_distance(q1),
                    self.planar_distance(q2),
                    shifted.planar_distance(self.p1),
                    shifted.planar_distance(self.p2()),
                ] {
                    best = best.min(d);
                }
            }
        }
        best
    }

    /// Errors when the `delta`-tube meets one of its translates.
    pub fn check_tube(&self, delta: f64) -> Result<()> {
        let separation = self.wrap_separation();
        if 2.0 * delta >= separation {
            return Err(Error::TubeOverlap { separation, width: 2.0 * delta });
        }
        Ok(())
    }
}

/// One step of the cat map.
pub fn catmap_step(p: [f64; 2]) -> [f64; 2] {
    [math::fract_positive(2.0 * p[0] + p[1]), math::fract_positive(p[0] + p[1])]
}

/// The orbit `p, T p, …, T^steps p`.
pub fn catmap_iterate(p: [f64; 2], steps: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = p;
    out.push(x);
    for _ in 0..steps {
        x = catmap_step(x);
        out.push(x);
    }
    out
}

/// Torus distance from `p` to the segment: the least planar distance over
/// the nine integer translates of `p`.
pub fn catmap_distance(p: [f64; 2], seg: &SegmentTarget) -> f64 {
    let mut best = f64::INFINITY;
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            best = best.min(seg.planar_distance([p[0] + i as f64, p[1] + j as f64]));
        }
    }
    best
}

/// The cat map under Lebesgue measure.
#[derive(Clone, Copy, Debug, Default)]
pub struct CatMap;

impl Dynamics for CatMap {
    type State = [f64; 2];

    fn draw_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        [rng.random::<f64>(), rng.random::<f64>()]
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut [f64; 2], _rng: &mut R) {
        *state = catmap_step(*state);
    }
}

/// Thresholds `u_n` with tube radii `δ_n = e^{-u_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdScheme {
    thresholds: Vec<f64>,
}

impl ThresholdScheme {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() || thresholds.iter().any(|u| !u.is_finite()) {
            return Err(precondition("threshold list must be nonempty and finite"));
        }
        if thresholds.windows(2).any(|w| w[1] < w[0]) {
            return Err(precondition("thresholds must be nondecreasing"));
        }
        Ok(ThresholdScheme { thresholds })
    }

    /// `u_n = ln n` for each `n`.
    pub fn logarithmic(ns: &[u64]) -> Result<Self> {
        if ns.contains(&0) {
            return Err(precondition("log scheme needs n >= 1"));
        }
        Self::new(ns.iter().map(|&n| math::ln(n as f64)).collect())
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn radii(&self) -> Vec<f64> {
        self.thresholds.iter().map(|&u| math::exp(-u)).collect()
    }
}

/// Shard `shard` of row `row`: up to [`SHARD_SIZE`] orbits of length
/// `horizon` against the `delta`-tube.
pub fn catmap_shard(
    seg: &SegmentTarget,
    delta: f64,
    horizon: usize,
    samples: u64,
    seed: u64,
    row: u32,
    shard: u32,
) -> Result<HitCounts> {
    let mut rng = stream_rng(seed, ((row as u64) << 32) | shard as u64);
    hit_counts(&CatMap, |p: &[f64; 2]| catmap_distance(*p, seg) < delta, horizon, samples, false, &mut rng)
}

/// Shard sizes covering `samples`.
pub fn shard_plan(samples: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = samples;
    while left > 0 {
        let k = left.min(SHARD_SIZE);
        out.push(k);
        left -= k;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaRow {
    pub threshold: f64,
    pub delta: f64,
    pub tube_measure: f64,
    pub rate: f64,
    pub std_error: f64,
    pub normalized: f64,
    pub normalized_error: f64,
    pub window: (usize, usize),
    pub survivors: u64,
}

impl ZetaRow {
    /// Rate from the survival ratio `S(t1)/S(t0)` with `t0 = horizon/10` and
    /// `t1` the last time with at least 100 survivors. Given survival to
    /// `t0`, survival to `t1` is binomial, which gives the standard error.
    pub fn from_counts(counts: &HitCounts, threshold: f64, delta: f64, tube_measure: f64) -> Result<Self> {
        let horizon = counts.horizon;
        let t0 = (horizon / 10).max(1);
        let mut alive = Vec::with_capacity(horizon + 1);
        let mut a = counts.samples;
        for t in 0..=horizon {
            a -= counts.first_hits[t];
            alive.push(a);
        }
        let t1 = (0..=horizon)
            .rev()
            .find(|&t| alive[t] >= MIN_SURVIVORS)
            .ok_or_else(|| precondition("no time with enough survivors"))?;
        if t1 < 2 * t0 {
            return Err(precondition(format!(
                "survival falls below {MIN_SURVIVORS} orbits by t = {t1}; use a smaller tube or shorter horizon"
            )));
        }
        let p = alive[t1] as f64 / alive[t0] as f64;
        let span = (t1 - t0) as f64;
        let rate = -math::ln(p) / span;
        let std_error = math::sqrt((1.0 - p) / (alive[t0] as f64 * p)) / span;
        Ok(ZetaRow {
            threshold,
            delta,
            tube_measure,
            rate,
            std_error,
            normalized: rate / tube_measure,
            normalized_error: std_error / tube_measure,
            window: (t0, t1),
            survivors: alive[t1],
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaEstimate {
    pub alignment: Alignment,
    pub rows: Vec<ZetaRow>,
}

impl ZetaEstimate {
    pub fn last(&self) -> &ZetaRow {
        self.rows.last().expect("at least one row")
    }

    /// Last normalized value exceeds the first by more than their combined
    /// standard error.
    pub fn trends_upward(&self) -> bool {
        let (a, b) = (&self.rows[0], self.last());
        b.normalized - a.normalized > math::hypot(a.normalized_error, b.normalized_error)
    }
}

/// Normalized exceedance rates `ζ(u_n)/μ(U_n)` for the tubes of the
/// scheme, each from `samples` Lebesgue-distributed orbits of length
/// `horizon`.
pub fn catmap_zeta_estimate(
    seg: &SegmentTarget,
    scheme: &ThresholdScheme,
    horizon: usize,
    samples: u64,
    seed: u64,
) -> Result<ZetaEstimate> {
    catmap_zeta_estimate_with(seg, scheme, horizon, samples, &|row, delta, plan| {
        let mut total = HitCounts::new(horizon, false);
        for (j, &k) in plan.iter().enumerate() {
            total.merge(&catmap_shard(seg, delta, horizon, k, seed, row, j as u32)?)?;
        }
        Ok(total)
    })
}

/// Shard runner: `(row, delta, shard sizes) -> merged counts`.
pub type ShardRunner<'a> = dyn Fn(u32, f64, &[u64]) -> Result<HitCounts> + 'a;

/// As [`catmap_zeta_estimate`], with the shards of each row run by `runner`,
/// which must merge them in shard order.
pub fn catmap_zeta_estimate_with(
    seg: &SegmentTarget,
    scheme: &ThresholdScheme,
    horizon: usize,
    samples: u64,
    runner: &ShardRunner<'_>,
) -> Result<ZetaEstimate> {
    if samples < 10_000 {
        return Err(precondition("cat map estimates need at least 10^4 samples"));
    }
    if horizon < 20 {
        return Err(precondition("horizon must be at least 20"));
    }
    let plan = shard_plan(samples);
    let mut rows = Vec::new();
    for (i, (&u, delta)) in scheme.thresholds().iter().zip(scheme.radii()).enumerate() {
        seg.check_tube(delta)?;
        let counts = runner(i as u32, delta, &plan)?;
        rows.push(ZetaRow::from_counts(&counts, u, delta, seg.tube_measure(delta))?);
    }
    Ok(ZetaEstimate { alignment: seg.alignment(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::exceedance_identity_check;

    #[test]
    fn fixed_point_orbit() {
        assert!(catmap_iterate([0.0, 0.0], 10).iter().all(|&p| p == [0.0, 0.0]));
    }

    #[test]
    fn eigenvalue_solves_characteristic_polynomial() {
        let l = expanding_eigenvalue();
        assert!((l * l - 3.0 * l + 1.0).abs() < 1e-12);
        for (v, e) in [(unstable_direction(), l), (stable_direction(), 1.0 / l)] {
            let w = [2.0 * v[0] + v[1], v[0] + v[1]];
            assert!((w[0] - e * v[0]).abs() < 1e-12 && (w[1] - e * v[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_example() {
        let seg = SegmentTarget::new([0.0, 0.0], [1.0, 0.0], 0.5).unwrap();
        assert!((catmap_distance([0.5, 0.5], &seg) - 0.5).abs() < 1e-15);
        // wraps through the translate at x = 1
        assert!((catmap_distance([0.95, 0.0], &seg) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn alignment_tags() {
        assert_eq!(SegmentTarget::unstable([0.0, 0.0], 0.3).unwrap().alignment(), Alignment::Unstable);
        assert_eq!(SegmentTarget::stable([0.0, 0.0], 0.3).unwrap().alignment(), Alignment::Stable);
        assert_eq!(SegmentTarget::from_slope([0.13, 0.29], 0.5, 0.3).unwrap().alignment(), Alignment::Generic);
        assert!(SegmentTarget::new([0.0, 0.0], [0.0, 0.0], 1.0).is_err());
        assert!(SegmentTarget::new([1.4, 0.0], [1.0, 0.0], 0.3).is_err());
    }

    #[test]
    fn tube_overlap_detected() {
        let seg = SegmentTarget::new([0.1, 0.5], [1.0, 0.0], 0.5).unwrap();
        assert!((seg.wrap_separation() - 0.5).abs() < 1e-12);
        assert!(seg.check_tube(0.2).is_ok());
        assert!(matches!(seg.check_tube(0.3), Err(Error::TubeOverlap { .. })));
        let long = SegmentTarget::new([0.0, 0.5], [1.0, 0.0], 1.2).unwrap();
        assert_eq!(long.wrap_separation(), 0.0);
    }

    #[test]
    fn tube_formula_matches_hit_frequency() {
        let seg = SegmentTarget::from_slope([0.13, 0.29], 0.5, 0.3).unwrap();
        let delta = 0.02;
        let mut rng = stream_rng(9, 0);
        let n = 200_000;
        let hits = (0..n).filter(|_| catmap_distance([rng.random::<f64>(), rng.random::<f64>()], &seg) < delta).count() as f64;
        let p = seg.tube_measure(delta);
        let sigma = math::sqrt(p * (1.0 - p) / n as f64);
        assert!((hits / n as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn exceedance_identity_on_torus() {
        let seg = SegmentTarget::from_slope([0.13, 0.29], 0.5, 0.3).unwrap();
        let u = math::ln(50.0);
        let delta = math::exp(-u);
        let phi = |p: &[f64; 2]| -math::ln(catmap_distance(*p, &seg));
        let r = exceedance_identity_check(&CatMap, phi, u, |p| catmap_distance(*p, &seg) < delta, 100, 5_000, 2).unwrap();
        assert!(r.below > 0 && r.below < r.samples);
        let wrong = |p: &[f64; 2]| catmap_distance(*p, &seg) < 0.8 * delta;
        assert!(exceedance_identity_check(&CatMap, phi, u, wrong, 100, 5_000, 2).is_err());
    }

    #[test]
    fn scheme_validation() {
        let s = ThresholdScheme::logarithmic(&[10, 100]).unwrap();
        assert!((s.radii()[1] - 0.01).abs() < 1e-15);
        assert!(ThresholdScheme::new(alloc::vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn sharding_is_partition_independent() {
        let seg = SegmentTarget::from_slope([0.13, 0.29], 0.5, 0.3).unwrap();
        let scheme = ThresholdScheme::logarithmic(&[50]).unwrap();
        let a = catmap_zeta_estimate(&seg, &scheme, 200, 20_000, 4).unwrap();
        let b = catmap_zeta_estimate_with(&seg, &scheme, 200, 20_000, &|row, delta, plan| {
            let parts: Vec<HitCounts> = plan
                .iter()
                .enumerate()
                .rev()
                .map(|(j, &k)| catmap_shard(&seg, delta, 200, k, 4, row, j as u32).unwrap())
                .collect();
            let mut total = HitCounts::new(200, false);
            for p in parts.iter().rev() {
                total.merge(p)?;
            }
            Ok(total)
        })
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unstable_segment_through_fixed_point() {
        let seg = SegmentTarget::unstable([0.0, 0.0], 0.3).unwrap();
        let scheme = ThresholdScheme::logarithmic(&[200]).unwrap();
        let z = catmap_zeta_estimate(&seg, &scheme, 1000, 20_000, 1).unwrap();
        let target = 1.0 - 1.0 / expanding_eigenvalue();
        assert!((z.last().normalized - target).abs() < 0.1, "{:?}", z.last());
    }
}
