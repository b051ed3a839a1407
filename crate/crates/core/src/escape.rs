//! Survival curves, escape rates and the audits built on them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::automaton::{HoleAutomaton, DEFAULT_STATE_BUDGET};
use crate::cylinder::{CylinderUnion, NeighborhoodSystem};
use crate::error::{precondition, Error, Result};
use crate::markov::MarkovMeasure;
use crate::math;
use crate::montecarlo::{survival_mc, MarkovWindow};

/// Spectral and slope rates must agree this closely or the estimate is
/// flagged.
pub const SLOPE_AGREEMENT: f64 = 1e-8;
/// Pass threshold of the entry/return identity audit.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

const POWER_MAX_ITERATIONS: usize = 400_000;
const POWER_RELATIVE_TOLERANCE: f64 = 1e-13;
const POWER_STABLE_STEPS: usize = 5;
const SLOPE_MIN_HORIZON: usize = 64;
const SLOPE_MAX_HORIZON: usize = 200_000;
/// The slope cross-check spans a multiple of `lcm(1..=10)` steps, so
/// oscillations of any period up to 10 drop out of the two-point slope.
const SLOPE_BLOCK: usize = 2520;

#[derive(Clone, Debug, PartialEq)]
pub enum CurveMethod {
    Exact,
    MonteCarlo { samples: u64, std_errors: Vec<f64> },
}

/// `t ↦ P(τ_U > t)` for `t = 0..=horizon`, under the stationary law or the
/// law conditioned on the hole.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalCurve {
    values: Vec<f64>,
    log_values: Vec<f64>,
    method: CurveMethod,
    conditional: bool,
}

impl SurvivalCurve {
    pub(crate) fn from_parts(values: Vec<f64>, method: CurveMethod, conditional: bool) -> Self {
        let log_values = values.iter().map(|&v| math::ln(v)).collect();
        SurvivalCurve { values, log_values, method, conditional }
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ln P(τ > t)`, accumulated stepwise for exact curves so it stays
    /// accurate after the values underflow.
    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn method(&self) -> &CurveMethod {
        &self.method
    }

    pub fn is_exact(&self) -> bool {
        self.method == CurveMethod::Exact
    }

    pub fn is_conditional(&self) -> bool {
        self.conditional
    }

    pub fn std_errors(&self) -> Option<&[f64]> {
        match &self.method {
            CurveMethod::Exact => None,
            CurveMethod::MonteCarlo { std_errors, .. } => Some(std_errors),
        }
    }

    pub fn sample_count(&self) -> Option<u64> {
        match &self.method {
            CurveMethod::Exact => None,
            CurveMethod::MonteCarlo { samples, .. } => Some(*samples),
        }
    }

    /// Least-squares decay rate of `ln P(τ > t)` over `t0..=t1`, skipping
    /// zero values.
    pub fn slope_rate(&self, t0: usize, t1: usize) -> Option<RateEstimate> {
        let t1 = t1.min(self.horizon());
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            (t0..=t1).filter(|&t| self.values[t] > 0.0).map(|t| (t as f64, self.log_values[t])).unzip();
        let fit = math::fit_line(&xs, &ys)?;
        let rate = (-fit.slope).max(0.0);
        Some(RateEstimate {
            rate,
            slope_rate: rate,
            fit_window: (t0, t1),
            max_residual: fit.max_residual,
            flagged: false,
            method: RateMethod::SlopeFit,
            conditional: self.conditional,
            iterations: 0,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateMethod {
    /// Spectral radius of the killed chain, cross-checked by a slope fit.
    Spectral,
    /// Slope of a (Monte Carlo) survival curve.
    SlopeFit,
    /// The killed chain is nilpotent: everything escapes in finite time.
    Nilpotent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    /// Exponential escape rate; `+∞` for [`RateMethod::Nilpotent`].
    pub rate: f64,
    /// Rate from the tail slope of the exact survival curve.
    pub slope_rate: f64,
    pub fit_window: (usize, usize),
    /// For spectral estimates, `|rate - slope_rate|`; for slope fits, the
    /// largest fit residual.
    pub max_residual: f64,
    /// Spectral and slope rates disagree beyond [`SLOPE_AGREEMENT`].
    pub flagged: bool,
    pub method: RateMethod,
    pub conditional: bool,
    pub iterations: usize,
}

impl RateEstimate {
    pub fn is_infinite(&self) -> bool {
        self.method == RateMethod::Nilpotent
    }
}

fn automaton(mu: &MarkovMeasure, u: &CylinderUnion, budget: usize) -> Result<HoleAutomaton> {
    if u.is_empty() {
        return Err(precondition("hole is empty"));
    }
    HoleAutomaton::new(mu, u, budget)
}

fn start_vector(aut: &HoleAutomaton, conditional: bool) -> Vec<f64> {
    if conditional {
        aut.conditional_start()
    } else {
        aut.unconditional_start()
    }
}

/// Exact survival from a given start vector. Returns values and logs.
pub(crate) fn run_survival(aut: &HoleAutomaton, start: Vec<f64>, horizon: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = start;
    let mut w = vec![0.0; v.len()];
    let mut values = Vec::with_capacity(horizon + 1);
    let mut logs = Vec::with_capacity(horizon + 1);
    let mut log_s = 0.0;
    values.push(1.0);
    logs.push(0.0);
    for _ in 0..horizon {
        let norm: f64 = v.iter().sum();
        if norm == 0.0 || log_s == f64::NEG_INFINITY {
            logs.push(f64::NEG_INFINITY);
            values.push(0.0);
            continue;
        }
        let escaped = aut.step_survive(&v, &mut w);
        let e = escaped / norm;
        if e < 0.5 {
            log_s += math::ln_1p(-e);
        } else {
            let kept: f64 = w.iter().sum();
            log_s += if kept > 0.0 { math::ln(kept / norm) } else { f64::NEG_INFINITY };
        }
        let kept: f64 = w.iter().sum();
        if kept > 0.0 {
            w.iter_mut().for_each(|x| *x /= kept);
        }
        core::mem::swap(&mut v, &mut w);
        logs.push(log_s);
        values.push(math::exp(log_s));
    }
    (values, logs)
}

/// Exact `P(τ_U > t)` for `t = 0..=horizon` from the pattern-avoidance
/// automaton. The conditional curve starts from `μ_U`.
pub fn survival_exact(mu: &MarkovMeasure, u: &CylinderUnion, horizon: usize, conditional: bool) -> Result<SurvivalCurve> {
    survival_exact_with_budget(mu, u, horizon, conditional, DEFAULT_STATE_BUDGET)
}

pub fn survival_exact_with_budget(
    mu: &MarkovMeasure,
    u: &CylinderUnion,
    horizon: usize,
    conditional: bool,
    budget: usize,
) -> Result<SurvivalCurve> {
    let aut = automaton(mu, u, budget)?;
    let (values, log_values) = run_survival(&aut, start_vector(&aut, conditional), horizon);
    Ok(SurvivalCurve { values, log_values, method: CurveMethod::Exact, conditional })
}

/// Spectral escape rate of the killed chain seen from `start`.
fn spectral_rate(aut: &HoleAutomaton, start: Vec<f64>, conditional: bool) -> RateEstimate {
    if aut.is_nilpotent_from(&start) {
        return RateEstimate {
            rate: f64::INFINITY,
            slope_rate: f64::INFINITY,
            fit_window: (0, 0),
            max_residual: 0.0,
            flagged: false,
            method: RateMethod::Nilpotent,
            conditional,
            iterations: 0,
        };
    }
    // Power iteration on (A + I)/2, which has the same Perron vector as A
    // but no peripheral eigenvalues other than the dominant one.
    let mut v = start.clone();
    let mut w = vec![0.0; v.len()];
    let mut prev = f64::NAN;
    let mut stable = 0;
    let mut e = 0.0;
    let mut iterations = 0;
    while iterations < POWER_MAX_ITERATIONS {
        iterations += 1;
        let norm: f64 = v.iter().sum();
        e = aut.step_survive(&v, &mut w) / norm;
        let mut next = 0.0;
        for (a, b) in v.iter_mut().zip(&w) {
            *a = 0.5 * (*a + b);
            next += *a;
        }
        v.iter_mut().for_each(|x| *x /= next);
        if math::abs(e - prev) <= POWER_RELATIVE_TOLERANCE * e {
            stable += 1;
            if stable >= POWER_STABLE_STEPS {
                break;
            }
        } else {
            stable = 0;
        }
        prev = e;
    }
    let rate = -math::ln_1p(-e);

    let horizon = (2 * iterations).clamp(SLOPE_MIN_HORIZON, SLOPE_MAX_HORIZON);
    let t0 = horizon / 2;
    let t1 = t0 + SLOPE_BLOCK * (horizon - t0).div_ceil(SLOPE_BLOCK);
    let (_, logs) = run_survival(aut, start, t1);
    let slope_rate = (logs[t0] - logs[t1]) / (t1 - t0) as f64;
    let residual = math::abs(rate - slope_rate);
    RateEstimate {
        rate,
        slope_rate,
        fit_window: (t0, t1),
        max_residual: residual,
        flagged: !(residual <= SLOPE_AGREEMENT),
        method: RateMethod::Spectral,
        conditional,
        iterations,
    }
}

/// `ρ(U)`: minus the log spectral radius of the killed chain, with a
/// tail-slope cross-check.
pub fn escape_rate_exact(mu: &MarkovMeasure, u: &CylinderUnion) -> Result<RateEstimate> {
    escape_rate_with_budget(mu, u, false, DEFAULT_STATE_BUDGET)
}

/// `ρ_U(U)`: the same rate for the chain started from `μ_U`.
pub fn conditional_escape_rate(mu: &MarkovMeasure, u: &CylinderUnion) -> Result<RateEstimate> {
    escape_rate_with_budget(mu, u, true, DEFAULT_STATE_BUDGET)
}

pub fn escape_rate_with_budget(mu: &MarkovMeasure, u: &CylinderUnion, conditional: bool, budget: usize) -> Result<RateEstimate> {
    let aut = automaton(mu, u, budget)?;
    Ok(spectral_rate(&aut, start_vector(&aut, conditional), conditional))
}

/// One row of the entry/return identity audit for `A_k = {τ_U ≥ k}` and
/// `B_k = A_k ∩ U`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityRow {
    pub k: usize,
    /// `μ_U(A_k) μ(U)`
    pub conditional_side: f64,
    /// `μ(B_k)`
    pub restricted_side: f64,
    /// `μ(A_k) - μ(A_{k+1})`
    pub difference_side: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityAudit {
    pub rows: Vec<IdentityRow>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Checks `μ_U(A_k) μ(U) = μ(B_k) = μ(A_k) - μ(A_{k+1})` for `k = 1..=k_max`.
///
/// The three sides come from three computations: the normalized conditional
/// curve times the cylinder sum `μ(U)`, unnormalized killed mass started on
/// the hole's leaves, and differences of the unconditional curve.
pub fn entry_return_identity_audit(mu: &MarkovMeasure, u: &CylinderUnion, k_max: usize) -> Result<IdentityAudit> {
    if k_max == 0 {
        return Err(precondition("k_max must be >= 1"));
    }
    let aut = automaton(mu, u, DEFAULT_STATE_BUDGET)?;
    let mu_u = u.measure_of(mu);
    let (cond, _) = run_survival(&aut, aut.conditional_start(), k_max);
    let (uncond, _) = run_survival(&aut, aut.unconditional_start(), k_max + 1);

    // Raw killed mass started from μ restricted to U.
    let start = aut.unconditional_start();
    let cond_start = aut.conditional_start();
    let mut v: Vec<f64> = start.iter().zip(&cond_start).map(|(&x, &c)| if c > 0.0 { x } else { 0.0 }).collect();
    let mut w = vec![0.0; v.len()];
    let mut restricted = vec![v.iter().sum::<f64>()];
    for _ in 0..k_max {
        aut.step_survive(&v, &mut w);
        core::mem::swap(&mut v, &mut w);
        restricted.push(v.iter().sum());
    }

    let mut rows = Vec::with_capacity(k_max);
    let mut max_deviation: f64 = 0.0;
    for k in 1..=k_max {
        // τ ≥ k is τ > k - 1.
        let row = IdentityRow {
            k,
            conditional_side: cond[k - 1] * mu_u,
            restricted_side: restricted[k - 1],
            difference_side: uncond[k - 1] - uncond[k],
        };
        max_deviation = max_deviation
            .max(math::abs(row.conditional_side - row.restricted_side))
            .max(math::abs(row.restricted_side - row.difference_side));
        rows.push(row);
    }
    Ok(IdentityAudit { rows, max_deviation, passed: max_deviation < IDENTITY_TOLERANCE })
}

/// Limit obtained by fitting a model to the tail of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    pub slope: f64,
    pub max_residual: f64,
    pub rows_used: usize,
    pub method: &'static str,
}

/// Rows used for extrapolation: the last half, but at least three.
fn tail_start(len: usize) -> Option<usize> {
    if len < 3 {
        return None;
    }
    let used = len.div_ceil(2).max(3);
    Some(len - used)
}

/// Affine fit `y ≈ limit + slope·x` over the tail; the limit is the value at
/// `x = 0`.
pub fn affine_limit(xs: &[f64], ys: &[f64], method: &'static str) -> Option<Extrapolation> {
    let start = tail_start(xs.len())?;
    let fit = math::fit_line(&xs[start..], &ys[start..])?;
    Some(Extrapolation {
        limit: fit.intercept,
        slope: fit.slope,
        max_residual: fit.max_residual,
        rows_used: xs.len() - start,
        method,
    })
}

/// Fit `ln y ≈ ln(limit) + slope·x` over the tail. Needs positive `y`.
pub fn log_affine_limit(xs: &[f64], ys: &[f64], method: &'static str) -> Option<Extrapolation> {
    let start = tail_start(xs.len())?;
    if ys[start..].iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let logs: Vec<f64> = ys[start..].iter().map(|&y| math::ln(y)).collect();
    let fit = math::fit_line(&xs[start..], &logs)?;
    Some(Extrapolation {
        limit: math::exp(fit.intercept),
        slope: fit.slope,
        max_residual: fit.max_residual,
        rows_used: xs.len() - start,
        method,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowMethod {
    Exact,
    /// Automaton over budget; Monte Carlo slope fit instead.
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedRow {
    pub kappa: usize,
    pub measure: f64,
    pub rate: f64,
    pub ratio: f64,
    pub method: RowMethod,
    pub flagged: bool,
}

/// `ρ(U_n)/μ(U_n)` along a neighborhood system, with its extrapolated limit.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedRateTable {
    pub label: String,
    pub rows: Vec<LocalizedRow>,
    pub extrapolation: Option<Extrapolation>,
}

impl LocalizedRateTable {
    pub fn limit(&self) -> Option<f64> {
        self.extrapolation.as_ref().map(|e| e.limit)
    }

    /// Every ratio lies in `[0, 1 + slack]`.
    pub fn ratios_within(&self, slack: f64) -> bool {
        self.rows.iter().all(|r| r.ratio >= 0.0 && r.ratio <= 1.0 + slack)
    }
}

/// Settings for [`localized_escape_rate_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedOptions {
    pub budget: usize,
    pub fallback_samples: u64,
    pub fallback_max_horizon: usize,
    pub seed: u64,
}

impl Default for LocalizedOptions {
    fn default() -> Self {
        LocalizedOptions { budget: DEFAULT_STATE_BUDGET, fallback_samples: 20_000, fallback_max_horizon: 20_000, seed: 0 }
    }
}

pub fn localized_escape_rate(mu: &MarkovMeasure, ns: &NeighborhoodSystem) -> Result<LocalizedRateTable> {
    localized_escape_rate_with(mu, ns, &LocalizedOptions::default())
}

/// Localized rate table. Holes over the automaton budget fall back to a
/// Monte Carlo slope fit and are flagged.
pub fn localized_escape_rate_with(
    mu: &MarkovMeasure,
    ns: &NeighborhoodSystem,
    opts: &LocalizedOptions,
) -> Result<LocalizedRateTable> {
    let mut rows = Vec::with_capacity(ns.len());
    for (i, e) in ns.entries().iter().enumerate() {
        let row = match escape_rate_with_budget(mu, &e.hole, false, opts.budget) {
            Ok(r) => LocalizedRow {
                kappa: e.kappa,
                measure: e.measure,
                rate: r.rate,
                ratio: r.rate / e.measure,
                method: RowMethod::Exact,
                flagged: r.flagged,
            },
            Err(Error::BudgetExceeded { .. }) => {
                let horizon = (math::ceil(4.0 / e.measure) as usize).clamp(8, opts.fallback_max_horizon);
                let dynamics = MarkovWindow { measure: mu, depth: e.kappa };
                let curve = survival_mc(
                    &dynamics,
                    |w: &Vec<u8>| e.hole.contains(w),
                    horizon,
                    opts.fallback_samples,
                    false,
                    opts.seed,
                    i as u64,
                )?;
                let rate = curve.slope_rate(horizon / 2, horizon).map(|r| r.rate).unwrap_or(f64::NAN);
                LocalizedRow {
                    kappa: e.kappa,
                    measure: e.measure,
                    rate,
                    ratio: rate / e.measure,
                    method: RowMethod::MonteCarlo,
                    flagged: true,
                }
            }
            Err(err) => return Err(err),
        };
        rows.push(row);
    }
    let usable: Vec<&LocalizedRow> = rows.iter().filter(|r| r.ratio.is_finite()).collect();
    let xs: Vec<f64> = usable.iter().map(|r| r.measure).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.ratio).collect();
    let extrapolation = affine_limit(&xs, &ys, "affine fit of ratio against mu(U_n), value at mu = 0");
    Ok(LocalizedRateTable { label: ns.label().into(), rows, extrapolation })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortEntryRow {
    pub kappa: usize,
    pub measure: f64,
    /// `s_n = ⌊μ(U_n)^{-(1-a)}⌋`
    pub window: usize,
    /// `P(τ ≤ s_n)`
    pub probability: f64,
    /// `P(τ ≤ s_n) / (s_n μ(U_n))`
    pub ratio: f64,
    /// `-ln P(τ > s_n) / (s_n μ(U_n))`, same limit as `ratio` with the
    /// exponential curvature in `s_n μ(U_n)` removed.
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortEntrySequence {
    pub a: f64,
    pub rows: Vec<ShortEntryRow>,
    /// Depths skipped because `s_n` exceeded the horizon budget.
    pub truncated: Vec<usize>,
    pub extrapolation: Option<Extrapolation>,
    /// `s_n = 1` on every row: the ratio is `μ(U ∩ T^{-1}…)`-type and says
    /// nothing about short entries.
    pub degenerate_window: bool,
}

pub const SHORT_ENTRY_MAX_WINDOW: usize = 2_000_000;

/// Probability of entering the hole within the short window `s_n`,
/// normalized by `s_n μ(U_n)`.
pub fn short_entry_ratio(mu: &MarkovMeasure, ns: &NeighborhoodSystem, a: f64) -> Result<ShortEntrySequence> {
    if !(a > 0.0 && a < 1.0) {
        return Err(precondition("a must lie in (0, 1)"));
    }
    let mut rows = Vec::new();
    let mut truncated = Vec::new();
    for e in ns.entries() {
        let s = math::floor(math::powf(e.measure, -(1.0 - a)));
        if !(s >= 1.0) {
            return Err(precondition("window s_n < 1; choose a smaller a"));
        }
        if s > SHORT_ENTRY_MAX_WINDOW as f64 {
            truncated.push(e.kappa);
            continue;
        }
        let s = s as usize;
        let curve = survival_exact(mu, &e.hole, s, false)?;
        let p = 1.0 - curve.values()[s];
        rows.push(ShortEntryRow {
            kappa: e.kappa,
            measure: e.measure,
            window: s,
            probability: p,
            ratio: p / (s as f64 * e.measure),
            log_ratio: -math::ln_1p(-p) / (s as f64 * e.measure),
        });
    }
    // The log ratio carries a boundary term of order 1/s_n from the
    // cluster at time 0.
    let xs: Vec<f64> = rows.iter().map(|r| 1.0 / r.window as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_ratio).collect();
    let degenerate_window = !rows.is_empty() && rows.iter().all(|r| r.window == 1);
    Ok(ShortEntrySequence {
        a,
        extrapolation: affine_limit(&xs, &ys, "affine fit of log ratio against 1/s_n, value at 0"),
        rows,
        truncated,
        degenerate_window,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockAuditRow {
    pub k: f64,
    /// `⌊k s⌋`
    pub time: usize,
    /// `P(τ_U > ⌊k s⌋)`
    pub left: f64,
    /// `(P(τ_U > s) + δ^η)^{k-2}`
    pub right: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockAudit {
    pub s: usize,
    pub gap: usize,
    pub q: usize,
    pub eta: f64,
    pub delta: f64,
    pub phi_provenance: String,
    pub rows: Vec<BlockAuditRow>,
    pub violations: usize,
}

/// Compares exact long-window survival with the block bound
/// `(P(τ_U > s) + δ^η)^{k-2}`, `δ = 2(Δ μ(U) + φ(Δ - κ))`, `q = ⌊s/Δ⌋`,
/// `η = q/(q+1)`. Each `k` must satisfy `k ≥ 3` and `k q ∈ ℕ`.
pub fn block_bound_audit(
    mu: &MarkovMeasure,
    u: &CylinderUnion,
    s: usize,
    gap: usize,
    k_list: &[f64],
    phi: &dyn Fn(usize) -> f64,
    phi_provenance: &str,
) -> Result<BlockAudit> {
    if gap == 0 || 2 * gap >= s {
        return Err(precondition("gap must satisfy 0 < gap < s/2"));
    }
    let kappa = u.depth();
    if gap < kappa {
        return Err(precondition("gap must be at least the hole depth"));
    }
    let q = s / gap;
    let eta = q as f64 / (q as f64 + 1.0);
    let mut times = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let kq = k * q as f64;
        if !(k >= 3.0) || math::abs(kq - math::floor(kq + 0.5)) > 1e-9 {
            return Err(precondition("each k must satisfy k >= 3 and k q integer"));
        }
        times.push(math::floor(k * s as f64 + 1e-9) as usize);
    }
    let horizon = times.iter().copied().max().unwrap_or(0).max(s);
    let curve = survival_exact(mu, u, horizon, false)?;
    let delta = 2.0 * (gap as f64 * u.measure_of(mu) + phi(gap - kappa));
    let base = curve.values()[s] + math::powf(delta, eta);
    let mut rows = Vec::with_capacity(k_list.len());
    let mut violations = 0;
    for (&k, &t) in k_list.iter().zip(&times) {
        let left = curve.values()[t];
        let right = math::powf(base, k - 2.0);
        let holds = left <= right;
        if !holds {
            violations += 1;
        }
        rows.push(BlockAuditRow { k, time: t, left, right, holds });
    }
    Ok(BlockAudit { s, gap, q, eta, delta, phi_provenance: phi_provenance.into(), rows, violations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceRates {
    pub rate_a: f64,
    pub rate_b: f64,
    pub b_monotone: bool,
    /// `None` when `b` is not monotone: the comparison is not meaningful.
    pub agree: Option<bool>,
    pub note: Option<&'static str>,
}

/// Decay rates of `a_n` and of `b_n = a_n - a_{n+1}`, each the slope of
/// `-ln` over the second half of the sequence.
pub fn rate_of_difference_sequence(a: &[f64]) -> Result<DifferenceRates> {
    if a.len() < 20 {
        return Err(precondition("need at least 20 terms"));
    }
    if a.iter().any(|&x| !(x > 0.0)) || a.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(precondition("sequence must be positive and strictly decreasing"));
    }
    let b: Vec<f64> = a.windows(2).map(|w| w[0] - w[1]).collect();
    let b_monotone = b.windows(2).all(|w| w[1] <= w[0]);
    let rate = |seq: &[f64]| -> f64 {
        let start = seq.len() / 2;
        let xs: Vec<f64> = (start..seq.len()).map(|i| i as f64).collect();
        let ys: Vec<f64> = seq[start..].iter().map(|&x| -math::ln(x)).collect();
        math::fit_line(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN)
    };
    let rate_a = rate(a);
    let rate_b = rate(&b);
    let (agree, note) = if b_monotone {
        (Some(math::abs(rate_a - rate_b) < 0.01 * rate_a.max(1e-9)), None)
    } else {
        (None, Some("hypothesis violated: differences are not monotone"))
    };
    Ok(DifferenceRates { rate_a, rate_b, b_monotone, agree, note })
}
