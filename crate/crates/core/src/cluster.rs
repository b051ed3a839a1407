//! Cluster statistics of returns to a hole: `α̂_ℓ`, `α_ℓ`, `λ_ℓ` and the
//! extremal index.
//!
//! Every quantity comes from one visit-counting recursion over the hole
//! automaton: the state is (automaton state, hits so far), hits beyond the
//! cap are collected in a single overflow cell.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::automaton::{HoleAutomaton, DEFAULT_STATE_BUDGET};
use crate::cylinder::{CylinderUnion, NeighborhoodSystem};
use crate::error::{precondition, Error, Result};
use crate::escape::{affine_limit, log_affine_limit, survival_exact, Extrapolation};
use crate::markov::{stream_rng, MarkovMeasure, Word};
use crate::math;
use crate::montecarlo::{Dynamics, MarkovWindow};

/// Default number of cluster sizes kept in a profile.
pub const DEFAULT_ELL_MAX: usize = 8;
/// Slack allowed when checking that `α̂_ℓ(K)` is nondecreasing in `K`.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;
/// Agreement required between `β̂_ℓ` and the `α̂_ℓ` route.
pub const BETA_AGREEMENT: f64 = 0.02;

/// Law of the number of hits in steps `1..=steps`.
#[derive(Clone, Debug, PartialEq)]
struct CountLaw {
    /// `mass[c] = P(count = c)` for `c ≤ cap`.
    mass: Vec<f64>,
    /// `P(count > cap)`.
    overflow: f64,
}

fn count_hits(aut: &HoleAutomaton, start: &[f64], cap: usize, steps: usize, budget: usize) -> Result<CountLaw> {
    let states = aut.state_count();
    let cells = states * (cap + 1);
    if cells > budget {
        return Err(Error::BudgetExceeded { needed: cells, budget });
    }
    let mut v = vec![0.0; cells];
    v[..states].copy_from_slice(start);
    let mut w = vec![0.0; cells];
    let mut overflow = 0.0;
    for _ in 0..steps {
        w.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..=cap {
            let layer = c * states;
            for s in 0..states {
                let x = v[layer + s];
                if x == 0.0 {
                    continue;
                }
                for (t, p, hit) in aut.edges(s) {
                    let y = x * p;
                    if !hit {
                        w[layer + t] += y;
                    } else if c < cap {
                        w[layer + states + t] += y;
                    } else {
                        overflow += y;
                    }
                }
            }
        }
        core::mem::swap(&mut v, &mut w);
    }
    let mass = (0..=cap).map(|c| v[c * states..(c + 1) * states].iter().sum()).collect();
    Ok(CountLaw { mass, overflow })
}

fn build(mu: &MarkovMeasure, u: &CylinderUnion) -> Result<HoleAutomaton> {
    if u.is_empty() {
        return Err(precondition("hole is empty"));
    }
    HoleAutomaton::new(mu, u, DEFAULT_STATE_BUDGET)
}

fn check_ell_k(ell: usize, k: usize) -> Result<()> {
    if ell == 0 || k == 0 {
        return Err(precondition("ell and K must be >= 1"));
    }
    Ok(())
}

/// `α̂_ℓ(K, U) = μ_U(τ^{ℓ-1} ≤ K)`: probability of at least `ℓ - 1` returns
/// within `K` steps from a point of the hole.
pub fn hat_alpha(mu: &MarkovMeasure, u: &CylinderUnion, ell: usize, k: usize) -> Result<f64> {
    check_ell_k(ell, k)?;
    if ell == 1 {
        return Ok(1.0);
    }
    let aut = build(mu, u)?;
    let law = count_hits(&aut, &aut.conditional_start(), ell - 2, k, DEFAULT_STATE_BUDGET)?;
    Ok(law.overflow)
}

/// `α_ℓ(K, U) = μ_U(τ^{ℓ-1} ≤ K < τ^ℓ)`: exactly `ℓ - 1` returns within `K`.
pub fn alpha_levels(mu: &MarkovMeasure, u: &CylinderUnion, ell: usize, k: usize) -> Result<f64> {
    check_ell_k(ell, k)?;
    let aut = build(mu, u)?;
    let law = count_hits(&aut, &aut.conditional_start(), ell - 1, k, DEFAULT_STATE_BUDGET)?;
    Ok(law.mass[ell - 1])
}

/// `λ_ℓ(K, U) = P(Σ_{i=1}^K 1_U∘T^i = ℓ) / P(Σ_{i=1}^K 1_U∘T^i ≥ 1)`.
pub fn lambda_direct(mu: &MarkovMeasure, u: &CylinderUnion, ell: usize, k: usize) -> Result<f64> {
    check_ell_k(ell, k)?;
    let aut = build(mu, u)?;
    let law = count_hits(&aut, &aut.unconditional_start(), ell, k, DEFAULT_STATE_BUDGET)?;
    let any = 1.0 - law.mass[0];
    if !(any > 0.0) {
        return Err(precondition("the hole is never visited within K steps"));
    }
    Ok(law.mass[ell] / any)
}

/// A cluster probability with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterEstimate {
    pub value: f64,
    /// Binomial standard error; `None` for exact values.
    pub std_error: Option<f64>,
    pub monte_carlo: bool,
}

/// [`hat_alpha`] with a Monte Carlo fallback when the counting recursion is
/// over budget.
pub fn hat_alpha_estimate(
    mu: &MarkovMeasure,
    u: &CylinderUnion,
    ell: usize,
    k: usize,
    budget: usize,
    samples: u64,
    seed: u64,
) -> Result<ClusterEstimate> {
    check_ell_k(ell, k)?;
    if ell == 1 {
        return Ok(ClusterEstimate { value: 1.0, std_error: None, monte_carlo: false });
    }
    let exact = HoleAutomaton::new(mu, u, budget).and_then(|aut| count_hits(&aut, &aut.conditional_start(), ell - 2, k, budget));
    match exact {
        Ok(law) => Ok(ClusterEstimate { value: law.overflow, std_error: None, monte_carlo: false }),
        Err(Error::BudgetExceeded { .. }) => {
            if samples == 0 {
                return Err(precondition("Monte Carlo fallback needs samples"));
            }
            let dynamics = MarkovWindow { measure: mu, depth: u.depth() };
            let mut rng = stream_rng(seed, 0);
            let mut attempts = 0u64;
            let mut accepted = 0u64;
            let mut successes = 0u64;
            for _ in 0..samples {
                let mut x = loop {
                    let x = dynamics.draw_stationary(&mut rng);
                    attempts += 1;
                    if u.contains(&x) {
                        accepted += 1;
                        break x;
                    }
                    if attempts >= crate::montecarlo::REJECTION_ATTEMPTS {
                        let acceptance = accepted as f64 / attempts as f64;
                        if acceptance < crate::montecarlo::MIN_ACCEPTANCE {
                            return Err(Error::RejectionTooRare { acceptance });
                        }
                    }
                };
                let mut hits = 0;
                for _ in 0..k {
                    dynamics.advance(&mut x, &mut rng);
                    if u.contains(&x) {
                        hits += 1;
                        if hits + 1 >= ell {
                            break;
                        }
                    }
                }
                if hits + 1 >= ell {
                    successes += 1;
                }
            }
            let p = successes as f64 / samples as f64;
            Ok(ClusterEstimate { value: p, std_error: Some(math::sqrt(p * (1.0 - p) / samples as f64)), monte_carlo: true })
        }
        Err(e) => Err(e),
    }
}

/// Cluster spectrum of one hole at one window `K`.
///
/// Vectors are indexed from `ℓ = 1`: `hat_alpha[0]` is `α̂_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EiProfile {
    pub k: usize,
    pub ell_max: usize,
    /// `α̂_ℓ` for `ℓ = 1..=L+2`.
    pub hat_alpha: Vec<f64>,
    /// `α_ℓ = α̂_ℓ - α̂_{ℓ+1}` for `ℓ = 1..=L+1`.
    pub alpha: Vec<f64>,
    /// Direct `λ_ℓ` for `ℓ = 1..=L`; empty for synthetic profiles.
    pub lambda: Vec<f64>,
    /// `P(count > L) / P(count ≥ 1)`, the mass not covered by `lambda`.
    pub lambda_tail: f64,
    /// `α_1 = 1 - α̂_2`.
    pub alpha_1: f64,
    /// `θ` with a description of the window rule, when one was computed.
    pub theta: Option<(f64, String)>,
}

impl EiProfile {
    /// Profile from given `α̂_ℓ`, `ℓ = 1..=L+2`, without direct `λ`.
    pub fn from_hat_alpha(k: usize, hat_alpha: Vec<f64>) -> Result<Self> {
        if hat_alpha.len() < 3 {
            return Err(precondition("need hat_alpha for at least l = 1..=3"));
        }
        let alpha: Vec<f64> = hat_alpha.windows(2).map(|w| w[0] - w[1]).collect();
        Ok(EiProfile {
            k,
            ell_max: hat_alpha.len() - 2,
            alpha_1: alpha[0],
            alpha,
            hat_alpha,
            lambda: Vec::new(),
            lambda_tail: 0.0,
            theta: None,
        })
    }

    /// `Σ_ℓ ℓ λ_ℓ` over the direct values.
    pub fn mean_cluster_direct(&self) -> f64 {
        self.lambda.iter().enumerate().map(|(i, l)| (i + 1) as f64 * l).sum()
    }
}

/// Builds the profile of `u` at window `k`, for `ℓ ≤ ell_max`.
pub fn ei_profile(mu: &MarkovMeasure, u: &CylinderUnion, k: usize, ell_max: usize) -> Result<EiProfile> {
    check_ell_k(ell_max, k)?;
    let aut = build(mu, u)?;
    let cond = count_hits(&aut, &aut.conditional_start(), ell_max + 1, k, DEFAULT_STATE_BUDGET)?;
    let mut hat_alpha = Vec::with_capacity(ell_max + 2);
    let mut below = 0.0;
    for ell in 1..=ell_max + 2 {
        if ell >= 2 {
            below += cond.mass[ell - 2];
        }
        hat_alpha.push((1.0 - below).max(0.0));
    }
    let alpha: Vec<f64> = hat_alpha.windows(2).map(|w| w[0] - w[1]).collect();
    let unc = count_hits(&aut, &aut.unconditional_start(), ell_max, k, DEFAULT_STATE_BUDGET)?;
    let any = 1.0 - unc.mass[0];
    if !(any > 0.0) {
        return Err(precondition("the hole is never visited within K steps"));
    }
    let lambda = unc.mass[1..].iter().map(|m| m / any).collect();
    Ok(EiProfile { k, ell_max, alpha_1: alpha[0], alpha, hat_alpha, lambda, lambda_tail: unc.overflow / any, theta: None })
}

/// Cluster-size law obtained from the `α` levels.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremRoute {
    /// `λ_ℓ = (α_ℓ - α_{ℓ+1}) / α_1` for `ℓ = 1..=L`.
    pub lambda: Vec<f64>,
    /// `max_ℓ |theorem λ_ℓ - direct λ_ℓ|`, when direct values exist.
    pub residual: Option<f64>,
    /// `Σ ℓ λ_ℓ` over the theorem-route values.
    pub mean_cluster: f64,
    /// `|Σ ℓ λ_ℓ α_1 - 1|` using direct `λ` when present, else the theorem
    /// route.
    pub mean_identity_residual: f64,
    /// `α̂_{L+2}`: weight beyond the truncation.
    pub tail: f64,
}

pub fn lambda_via_theorem(profile: &EiProfile) -> Result<TheoremRoute> {
    if !(profile.alpha_1 > 1e-12) {
        return Err(Error::DegenerateExtremalIndex(profile.alpha_1));
    }
    let l = profile.ell_max;
    let a = &profile.alpha;
    let lambda: Vec<f64> = (0..l).map(|i| (a[i] - a[i + 1]) / profile.alpha_1).collect();
    let residual = if profile.lambda.is_empty() {
        None
    } else {
        Some(lambda.iter().zip(&profile.lambda).map(|(x, y)| math::abs(x - y)).fold(0.0, f64::max))
    };
    let mean_cluster: f64 = lambda.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
    let mean = if profile.lambda.is_empty() { mean_cluster } else { profile.mean_cluster_direct() };
    Ok(TheoremRoute {
        lambda,
        residual,
        mean_cluster,
        mean_identity_residual: math::abs(mean * profile.alpha_1 - 1.0),
        tail: profile.hat_alpha[l + 1],
    })
}

/// `1 - α̂_2(K, U_n)` along the family for one `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alpha1Row {
    pub k: usize,
    pub values: Vec<f64>,
    pub extrapolation: Option<Extrapolation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Alpha1Estimate {
    pub rows: Vec<Alpha1Row>,
    /// The `n`-limit at the largest `K`.
    pub limit: f64,
    /// `α̂_2(K, U_n)` nondecreasing in `K` for every `n`, within
    /// [`MONOTONE_TOLERANCE`].
    pub monotone_in_k: bool,
    pub max_monotonicity_violation: f64,
}

/// `α_1 = lim_K lim_n μ_{U_n}(τ > K)`: the `n`-limit first (affine in
/// `μ(U_n)`), then the largest `K` of the schedule.
pub fn extremal_index_alpha1(mu: &MarkovMeasure, ns: &NeighborhoodSystem, k_schedule: &[usize]) -> Result<Alpha1Estimate> {
    if ns.len() < 4 {
        return Err(precondition("need at least 4 neighborhoods"));
    }
    if k_schedule.is_empty() || k_schedule.contains(&0) {
        return Err(precondition("K schedule must be nonempty and positive"));
    }
    let mut ks = k_schedule.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let k_max = *ks.last().unwrap();
    let xs: Vec<f64> = ns.entries().iter().map(|e| e.measure).collect();
    // One survival run per hole gives P_U(τ > K) for every K.
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(ns.len());
    for e in ns.entries() {
        let curve = survival_exact(mu, &e.hole, k_max, true)?;
        table.push(ks.iter().map(|&k| curve.values()[k]).collect());
    }
    let mut worst: f64 = 0.0;
    for per_k in &table {
        for w in per_k.windows(2) {
            // survival must not increase, i.e. α̂_2 must not decrease
            worst = worst.max(w[1] - w[0]);
        }
    }
    let rows: Vec<Alpha1Row> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let values: Vec<f64> = table.iter().map(|r| r[i]).collect();
            let extrapolation = affine_limit(&xs, &values, "affine fit of 1 - hat_alpha_2 against mu(U_n), value at 0");
            Alpha1Row { k, values, extrapolation }
        })
        .collect();
    let last = rows.last().unwrap();
    let limit = last.extrapolation.as_ref().map(|e| e.limit).unwrap_or(*last.values.last().unwrap());
    Ok(Alpha1Estimate { rows, limit, monotone_in_k: worst <= MONOTONE_TOLERANCE, max_monotonicity_violation: worst })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaRow {
    pub kappa: usize,
    pub window: usize,
    pub measure: f64,
    /// `μ_{U_n}(τ > K_n)`
    pub value: f64,
    /// Solution of `value = θ e^{-θ K_n μ(U_n)}` on the branch through
    /// `θ = value`; `None` when the equation has no root.
    pub corrected: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaEstimate {
    pub rows: Vec<ThetaRow>,
    pub extrapolation: Option<Extrapolation>,
}

impl ThetaEstimate {
    pub fn limit(&self) -> Option<f64> {
        self.extrapolation.as_ref().map(|e| e.limit)
    }
}

/// Smallest root of `θ = v e^{θ x}`, by fixed-point iteration from `v`.
fn invert_exponential_law(v: f64, x: f64) -> Option<f64> {
    if !(v > 0.0) {
        return None;
    }
    if x * v * core::f64::consts::E > 1.0 {
        return None;
    }
    let mut theta = v;
    for _ in 0..10_000 {
        let next = v * math::exp(theta * x);
        if math::abs(next - theta) <= 1e-15 * next {
            return Some(next);
        }
        theta = next;
    }
    Some(theta)
}

/// `θ = lim μ_{U_n}(τ > K_n)` with `K_n > κ_n²`.
///
/// Past the cluster scale the conditional survival is close to
/// `θ e^{-θ K_n μ(U_n)}`. Each row inverts that law; the corrected values
/// are extrapolated affinely in `μ(U_n)`.
pub fn extremal_index_theta(mu: &MarkovMeasure, ns: &NeighborhoodSystem, rule: &dyn Fn(usize) -> usize) -> Result<ThetaEstimate> {
    let mut rows = Vec::with_capacity(ns.len());
    for e in ns.entries() {
        let k = rule(e.kappa);
        if k <= e.kappa * e.kappa {
            return Err(precondition("window rule must satisfy K_n > kappa_n^2"));
        }
        let curve = survival_exact(mu, &e.hole, k, true)?;
        let value = curve.values()[k];
        rows.push(ThetaRow {
            kappa: e.kappa,
            window: k,
            measure: e.measure,
            value,
            corrected: invert_exponential_law(value, k as f64 * e.measure),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| r.corrected.map(|c| (r.measure, c))).unzip();
    Ok(ThetaEstimate {
        extrapolation: affine_limit(&xs, &ys, "exponential-law correction per n, then affine fit against mu(U_n), value at 0"),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicTheta {
    pub period: usize,
    /// `(n, μ(U_n ∩ T^{-p} U_n) / μ(U_n))`
    pub rows: Vec<(usize, f64)>,
    pub limit: f64,
}

/// `μ(U_n ∩ T^{-p} U_n) / μ(U_n)` for the cylinders `U_n` of the periodic
/// point `w w w …` with primitive period `p = |w|`.
pub fn periodic_theta(mu: &MarkovMeasure, w: &[u8], n_list: &[usize]) -> Result<PeriodicTheta> {
    if w.is_empty() || n_list.is_empty() || n_list.contains(&0) {
        return Err(precondition("need a nonempty word and positive depths"));
    }
    let p = w.len();
    if (1..p).any(|d| p.is_multiple_of(d) && (0..p).all(|i| w[i] == w[i % d])) {
        return Err(precondition("word is not primitive"));
    }
    let mut cyc = w.to_vec();
    cyc.push(w[0]);
    mu.check_admissible(&cyc)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let u = CylinderUnion::new(mu, n, vec![Word::periodic_prefix(w, n)])?;
        let ratio = u.shifted_intersection(mu, p)?.measure_of(mu) / u.measure_of(mu);
        rows.push((n, ratio));
    }
    let limit = rows.last().unwrap().1;
    Ok(PeriodicTheta { period: p, rows, limit })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaRow {
    pub kappa: usize,
    pub window: usize,
    pub measure: f64,
    /// `μ_{U_n}(τ^{ℓ-1} ≤ s_n)`
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaHatEstimate {
    pub ell: usize,
    pub rows: Vec<BetaRow>,
    pub limit: Option<f64>,
    pub extrapolation: Option<Extrapolation>,
    /// `α̂_ℓ(K, U_n)` at `K = min κ_n`, extrapolated in `n`.
    pub reference: Option<f64>,
    /// `|limit - reference| < BETA_AGREEMENT`.
    pub agrees: Option<bool>,
}

/// `β̂_ℓ = lim μ_{U_n}(τ^{ℓ-1} ≤ s_n)` for a schedule with `s_n μ(U_n)`
/// strictly decreasing.
pub fn beta_hat(mu: &MarkovMeasure, ns: &NeighborhoodSystem, s_schedule: &[usize], ell: usize) -> Result<BetaHatEstimate> {
    if ell == 0 {
        return Err(precondition("ell must be >= 1"));
    }
    if s_schedule.len() != ns.len() || s_schedule.contains(&0) {
        return Err(precondition("one positive window per neighborhood"));
    }
    let xs: Vec<f64> = ns.entries().iter().zip(s_schedule).map(|(e, &s)| s as f64 * e.measure).collect();
    if xs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(precondition("s_n mu(U_n) must be strictly decreasing"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (e, &s) in ns.entries().iter().zip(s_schedule) {
        rows.push(BetaRow { kappa: e.kappa, window: s, measure: e.measure, value: hat_alpha(mu, &e.hole, ell, s)? });
    }
    if ell == 1 {
        return Ok(BetaHatEstimate {
            ell,
            rows,
            limit: Some(1.0),
            extrapolation: None,
            reference: Some(1.0),
            agrees: Some(true),
        });
    }
    // 1 - β is a conditional survival probability, ≈ θ e^{-θ s_n μ(U_n)}.
    let ys: Vec<f64> = rows.iter().map(|r| 1.0 - r.value).collect();
    let extrapolation = log_affine_limit(&xs, &ys, "fit of ln(1 - value) against s_n mu(U_n), one minus exp of intercept");
    let limit = extrapolation.as_ref().map(|e| 1.0 - e.limit);
    let k_ref = ns.entries().iter().map(|e| e.kappa).min().unwrap();
    let measures: Vec<f64> = ns.entries().iter().map(|e| e.measure).collect();
    let refs = ns.entries().iter().map(|e| hat_alpha(mu, &e.hole, ell, k_ref)).collect::<Result<Vec<_>>>()?;
    let reference = affine_limit(&measures, &refs, "").map(|e| e.limit);
    let agrees = match (limit, reference) {
        (Some(a), Some(b)) => Some(math::abs(a - b) < BETA_AGREEMENT),
        _ => None,
    };
    Ok(BetaHatEstimate { ell, rows, limit, extrapolation, reference, agrees })
}

#[cfg(test)]
mod tests;
