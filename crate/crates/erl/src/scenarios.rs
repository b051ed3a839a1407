//! The named scenarios. Each builds its objects from a resolved config, runs
//! the computation and returns a table, summary values and checks.

use erl_core::catmap::{catmap_distance, catmap_shard, catmap_zeta_estimate_with, expanding_eigenvalue, Alignment, CatMap};
use erl_core::cluster::{ei_profile, extremal_index_alpha1, extremal_index_theta, hat_alpha, lambda_via_theorem, periodic_theta};
use erl_core::escape::{
    block_bound_audit, conditional_escape_rate, entry_return_identity_audit, escape_rate_exact, localized_escape_rate_with,
    short_entry_ratio, LocalizedOptions, RowMethod,
};
use erl_core::geometry::exceedance_identity_check;
use erl_core::montecarlo::HitCounts;
use erl_core::tower::{build_tower, inducing_invariance_check, large_deviation_probe};
use erl_core::{LocalizedRateTable, MarkovMeasure, NeighborhoodSystem};
use rayon::prelude::*;

use crate::config::{Resolved, Scenario};
use crate::output::{Cell, Check, Report, Table};
use crate::RunError;

/// Short-entry exponent: windows `s_n = ⌊μ(U_n)^{-(1-a)}⌋`.
const SHORT_ENTRY_EXPONENT: f64 = 0.2;

/// Identity audits run over `k = 1..=IDENTITY_K_MAX`.
const IDENTITY_K_MAX: usize = 30;

pub fn run(cfg: &Resolved) -> Result<Report, RunError> {
    match cfg.scenario {
        Scenario::Cantor => cantor(cfg),
        Scenario::Dichotomy => dichotomy(cfg),
        Scenario::Cluster => cluster(cfg),
        Scenario::Tower => tower(cfg),
        Scenario::Catmap => catmap(cfg),
        Scenario::Audit => audit(cfg),
        Scenario::Custom => custom(cfg),
    }
}

fn family(cfg: &Resolved, mu: &MarkovMeasure) -> Result<NeighborhoodSystem, RunError> {
    cfg.family.build(mu, cfg.n_min, cfg.n_max)
}

fn localized(cfg: &Resolved, mu: &MarkovMeasure, ns: &NeighborhoodSystem) -> Result<LocalizedRateTable, RunError> {
    let opts = LocalizedOptions { seed: cfg.seed, ..LocalizedOptions::default() };
    Ok(localized_escape_rate_with(mu, ns, &opts)?)
}

fn method_name(m: &RowMethod) -> &'static str {
    match m {
        RowMethod::Exact => "exact",
        RowMethod::MonteCarlo => "monte_carlo",
    }
}

fn limit_or_nan(t: &LocalizedRateTable) -> f64 {
    t.limit().unwrap_or(f64::NAN)
}

fn record_localized(report: &mut Report, key: &str, t: &LocalizedRateTable) {
    report.value(&format!("{key}_limit"), t.limit());
    report.value(&format!("{key}_method"), t.extrapolation.as_ref().map(|e| e.method));
    report.value(&format!("{key}_fit_residual"), t.extrapolation.as_ref().map(|e| e.max_residual));
}

fn coarse_bound(cfg: &Resolved, tables: &[&LocalizedRateTable]) -> Check {
    let upper = cfg.tolerances.coarse_upper;
    let ratios: Vec<f64> = tables.iter().flat_map(|t| t.rows.iter().map(|r| r.ratio)).collect();
    let outside = ratios.iter().filter(|r| !(0.0..=upper).contains(*r)).count();
    let worst = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Check::holds(
        "coarse_bound",
        outside == 0,
        worst,
        &format!("every ratio in [0, {upper}]"),
        format!("{} ratios, {outside} outside, largest {worst:.6}", ratios.len()),
    )
}

fn cantor(cfg: &Resolved) -> Result<Report, RunError> {
    let mu = cfg.system.build()?;
    let ns = family(cfg, &mu)?;
    let table = localized(cfg, &mu, &ns)?;
    let short = short_entry_ratio(&mu, &ns, SHORT_ENTRY_EXPONENT)?;
    let mut out = Table::new(&["n", "measure", "rate", "ratio", "method", "hat_alpha_2", "short_entry_ratio"]);
    for (e, row) in ns.entries().iter().zip(&table.rows) {
        let short_row = short.rows.iter().find(|r| r.kappa == row.kappa);
        out.push(vec![
            row.kappa.into(),
            row.measure.into(),
            row.rate.into(),
            row.ratio.into(),
            method_name(&row.method).into(),
            hat_alpha(&mu, &e.hole, 2, cfg.k)?.into(),
            short_row.map_or(f64::NAN, |r| r.log_ratio).into(),
        ]);
    }
    let mut report = Report { table: out, ..Report::default() };
    record_localized(&mut report, "localized", &table);
    report.value("short_entry_limit", short.extrapolation.as_ref().map(|e| e.limit));
    report.value("short_entry_truncated", &short.truncated);
    report.value("hat_alpha_window", cfg.k);
    report.checks.push(Check::within("localized_limit", limit_or_nan(&table), 1.0 / 3.0, cfg.tolerances.localized));
    report.checks.push(coarse_bound(cfg, &[&table]));
    Ok(report)
}

fn dichotomy(cfg: &Resolved) -> Result<Report, RunError> {
    let mu = cfg.system.build()?;
    let ns = family(cfg, &mu)?;
    let table = localized(cfg, &mu, &ns)?;
    let alpha1 = extremal_index_alpha1(&mu, &ns, &cfg.k_schedule)?;
    let theta = extremal_index_theta(&mu, &ns, &|k| k * k + 1)?;
    let mut out = Table::new(&["n", "measure", "rate", "ratio", "method", "theta_window", "theta_raw", "theta_corrected"]);
    for (row, t) in table.rows.iter().zip(&theta.rows) {
        out.push(vec![
            row.kappa.into(),
            row.measure.into(),
            row.rate.into(),
            row.ratio.into(),
            method_name(&row.method).into(),
            t.window.into(),
            t.value.into(),
            t.corrected.unwrap_or(f64::NAN).into(),
        ]);
    }
    let mut report = Report { table: out, ..Report::default() };
    record_localized(&mut report, "localized", &table);
    report.value("alpha_1", alpha1.limit);
    report.value("alpha_1_monotone_in_k", alpha1.monotone_in_k);
    report.value("theta", theta.limit());
    report.value("theta_rule", "K_n = n^2 + 1");
    let tol = &cfg.tolerances;
    match cfg.family.periodic_word() {
        Some(word) => {
            let p = periodic_theta(&mu, &word, &[cfg.n_max])?;
            let target = 1.0 - p.limit;
            report.value("period", p.period);
            report.value("target", target);
            report.checks.push(Check::within("alpha_1", alpha1.limit, target, tol.extremal_index));
            report.checks.push(Check::within("theta", theta.limit().unwrap_or(f64::NAN), target, tol.extremal_index));
            report.checks.push(Check::within("localized_limit", limit_or_nan(&table), target, tol.periodic));
        }
        None => {
            report.value("target", 1.0);
            report.checks.push(Check::within("localized_limit", limit_or_nan(&table), 1.0, tol.generic));
        }
    }
    report.checks.push(coarse_bound(cfg, &[&table]));
    Ok(report)
}

fn cluster(cfg: &Resolved) -> Result<Report, RunError> {
    let mu = cfg.system.build()?;
    let ns = family(cfg, &mu)?;
    let entry = ns.entries().last().expect("nonempty family");
    let profile = ei_profile(&mu, &entry.hole, cfg.k, cfg.ell_max)?;
    let route = lambda_via_theorem(&profile)?;
    let mut out = Table::new(&["ell", "hat_alpha", "alpha", "lambda_direct", "lambda_from_levels"]);
    for ell in 1..=profile.ell_max {
        let i = ell - 1;
        out.push(vec![
            ell.into(),
            profile.hat_alpha[i].into(),
            profile.alpha[i].into(),
            profile.lambda.get(i).copied().unwrap_or(f64::NAN).into(),
            route.lambda[i].into(),
        ]);
    }
    let compared = profile.ell_max.min(5);
    let gap = route.lambda[..compared].iter().zip(&profile.lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut report = Report { table: out, ..Report::default() };
    report.value("n", entry.kappa);
    report.value("measure", entry.measure);
    report.value("window", cfg.k);
    report.value("alpha_1", profile.alpha_1);
    report.value("mean_cluster_direct", profile.mean_cluster_direct());
    report.value("mean_cluster_from_levels", route.mean_cluster);
    report.value("lambda_tail", profile.lambda_tail);
    let tol = &cfg.tolerances;
    report.checks.push(Check::below("hat_alpha_1_is_one", (profile.hat_alpha[0] - 1.0).abs(), tol.exact));
    report.checks.push(Check::holds(
        "lambda_agreement",
        gap < tol.cluster,
        gap,
        &format!("< {}", tol.cluster),
        format!("max |direct - from levels| over ell <= {compared} is {gap:.4e}"),
    ));
    report.checks.push(Check::below("mean_cluster_identity", route.mean_identity_residual, tol.cluster));
    Ok(report)
}

fn tower(cfg: &Resolved) -> Result<Report, RunError> {
    let base = cfg.system.build()?;
    let t = build_tower(&base, &cfg.roof)?;
    let ns = family(cfg, &base)?;
    let r = inducing_invariance_check(&t, &ns)?;
    let deviation = large_deviation_probe(&t, 0.25, &[5, 10, 20, 40], cfg.samples, cfg.seed)?;
    let mut out = Table::new(&["n", "base_measure", "base_ratio", "tower_depth", "tower_measure", "tower_ratio"]);
    for (b, l) in r.base.rows.iter().zip(&r.tower.rows) {
        out.push(vec![b.kappa.into(), b.measure.into(), b.ratio.into(), l.kappa.into(), l.measure.into(), l.ratio.into()]);
    }
    let mut report = Report { table: out, ..Report::default() };
    record_localized(&mut report, "base", &r.base);
    record_localized(&mut report, "tower", &r.tower);
    report.value("mean_roof", t.mean_roof());
    report.value("kac_residual", t.kac_residual());
    report.value(
        "roof_deviation",
        serde_json::json!({
            "epsilon": deviation.epsilon,
            "horizon": deviation.horizon,
            "samples": deviation.samples,
            "k": deviation.rows.iter().map(|d| d.k).collect::<Vec<_>>(),
            "estimate": deviation.rows.iter().map(|d| d.estimate).collect::<Vec<_>>(),
            "std_error": deviation.rows.iter().map(|d| d.std_error).collect::<Vec<_>>(),
            "log_slope": deviation.slope,
        }),
    );
    report.checks.push(Check::holds(
        "inducing_invariance",
        r.difference < cfg.tolerances.inducing,
        r.difference,
        &format!("< {}", cfg.tolerances.inducing),
        format!("|base limit - tower limit| = {:.6}", r.difference),
    ));
    report.checks.push(coarse_bound(cfg, &[&r.base, &r.tower]));
    Ok(report)
}

fn catmap(cfg: &Resolved) -> Result<Report, RunError> {
    let seg = cfg.segment.build()?;
    let scheme = cfg.scheme.build()?;
    let (horizon, seed) = (cfg.t_max, cfg.seed);
    let runner = |row: u32, delta: f64, plan: &[u64]| -> erl_core::Result<HitCounts> {
        let parts = plan
            .par_iter()
            .enumerate()
            .map(|(j, &k)| catmap_shard(&seg, delta, horizon, k, seed, row, j as u32))
            .collect::<erl_core::Result<Vec<_>>>()?;
        let mut total = HitCounts::new(horizon, false);
        for p in &parts {
            total.merge(p)?;
        }
        Ok(total)
    };
    let z = catmap_zeta_estimate_with(&seg, &scheme, horizon, cfg.samples, &runner)?;

    let u = scheme.thresholds()[0];
    let delta = (-u).exp();
    let phi = |p: &[f64; 2]| -catmap_distance(*p, &seg).ln();
    let identity_samples = cfg.samples.min(100_000) as usize;
    let identity = exceedance_identity_check(
        &CatMap,
        phi,
        u,
        |p| catmap_distance(*p, &seg) < delta,
        horizon.min(200),
        identity_samples,
        seed,
    );

    let mut out = Table::new(&[
        "threshold",
        "delta",
        "tube_measure",
        "rate",
        "std_error",
        "normalized",
        "normalized_error",
        "t0",
        "t1",
        "survivors",
    ]);
    for r in &z.rows {
        out.push(vec![
            r.threshold.into(),
            r.delta.into(),
            r.tube_measure.into(),
            r.rate.into(),
            r.std_error.into(),
            r.normalized.into(),
            r.normalized_error.into(),
            r.window.0.into(),
            r.window.1.into(),
            r.survivors.into(),
        ]);
    }
    let alignment = match z.alignment {
        Alignment::Stable => "stable",
        Alignment::Unstable => "unstable",
        Alignment::Generic => "generic",
    };
    let last = z.last().normalized;
    let mut report = Report { table: out, ..Report::default() };
    report.value("alignment", alignment);
    report.value("final_normalized", last);
    report.value("final_normalized_error", z.last().normalized_error);
    report.value("wrap_separation", seg.wrap_separation());
    report.checks.push(match &identity {
        Ok(r) => Check::holds(
            "exceedance_identity",
            true,
            0.0,
            "0 mismatches",
            format!("{} orbits of length {}, {} stayed below the threshold", r.samples, r.horizon, r.below),
        ),
        Err(e) => Check::holds("exceedance_identity", false, 1.0, "0 mismatches", e.to_string()),
    });
    let tol = &cfg.tolerances;
    let through_fixed_point = catmap_distance([0.0, 0.0], &seg) < 1e-12;
    if z.alignment != Alignment::Generic && through_fixed_point {
        let target = 1.0 - 1.0 / expanding_eigenvalue();
        report.value("target", target);
        report.checks.push(Check::within("aligned_rate", last, target, tol.catmap_periodic));
    } else if z.alignment == Alignment::Generic {
        let [lo, hi] = tol.catmap_generic;
        report.checks.push(Check::holds(
            "generic_final_range",
            (lo..=hi).contains(&last),
            last,
            &format!("in [{lo}, {hi}]"),
            format!("{last:.6} +- {:.6}", z.last().normalized_error),
        ));
        if z.rows.len() >= 2 {
            let first = &z.rows[0];
            report.checks.push(Check::holds(
                "generic_upward_trend",
                z.trends_upward(),
                last - first.normalized,
                "last - first > combined standard error",
                format!(
                    "{:.6} -> {last:.6}, combined error {:.6}",
                    first.normalized,
                    first.normalized_error.hypot(z.last().normalized_error)
                ),
            ));
        }
    }
    Ok(report)
}

fn audit(cfg: &Resolved) -> Result<Report, RunError> {
    let mu = cfg.system.build()?;
    let ns = family(cfg, &mu)?;
    let bernoulli = cfg.system.is_bernoulli();
    let (phi, provenance): (Box<dyn Fn(usize) -> f64>, &str) = if bernoulli {
        (Box::new(|_| 0.0), "exact: independent symbols")
    } else {
        let mu = mu.clone();
        (
            Box::new(move |g| mu.mixing_proxy(g + 1).unwrap_or(f64::INFINITY)),
            "proxy: one-symbol psi coefficient of the transition matrix",
        )
    };
    let mut out = Table::new(&[
        "n",
        "measure",
        "rate",
        "conditional_rate",
        "rate_gap",
        "flagged",
        "identity_deviation",
        "block_s",
        "block_gap",
        "block_violations",
    ]);
    let (mut worst_gap, mut worst_identity, mut violations, mut flagged) = (0.0f64, 0.0f64, 0, 0);
    for e in ns.entries() {
        let r = escape_rate_exact(&mu, &e.hole)?;
        let rc = conditional_escape_rate(&mu, &e.hole)?;
        let gap = if r.is_infinite() && rc.is_infinite() { 0.0 } else { (r.rate - rc.rate).abs() };
        let identity = entry_return_identity_audit(&mu, &e.hole, IDENTITY_K_MAX)?;
        let depth = e.hole.depth().max(1);
        let s = (4 * depth).max(16);
        let block = block_bound_audit(&mu, &e.hole, s, depth, &[3.0, 4.0, 5.0], &*phi, provenance)?;
        worst_gap = worst_gap.max(if gap.is_nan() { f64::INFINITY } else { gap });
        worst_identity = worst_identity.max(identity.max_deviation);
        violations += block.violations;
        flagged += usize::from(r.flagged || rc.flagged);
        out.push(vec![
            e.kappa.into(),
            e.measure.into(),
            r.rate.into(),
            rc.rate.into(),
            gap.into(),
            (r.flagged || rc.flagged).into(),
            identity.max_deviation.into(),
            s.into(),
            depth.into(),
            block.violations.into(),
        ]);
    }
    let mut report = Report { table: out, ..Report::default() };
    report.value("phi_provenance", provenance);
    report.value("identity_k_max", IDENTITY_K_MAX);
    let tol = &cfg.tolerances;
    report.checks.push(Check::below("rate_gap", worst_gap, tol.rate_gap));
    report.checks.push(Check::below("entry_return_identity", worst_identity, tol.exact));
    report.checks.push(Check::holds(
        "rate_cross_check",
        flagged == 0,
        flagged as f64,
        "no flagged rates",
        format!("{flagged} holes with spectral and slope rates disagreeing"),
    ));
    report.checks.push(Check::holds(
        "block_bound",
        violations == 0,
        violations as f64,
        "0 violations",
        format!("{violations} violations over {} holes", ns.len()),
    ));
    Ok(report)
}

fn custom(cfg: &Resolved) -> Result<Report, RunError> {
    let mu = cfg.system.build()?;
    let ns = family(cfg, &mu)?;
    let table = localized(cfg, &mu, &ns)?;
    let mut out = Table::new(&["n", "measure", "rate", "ratio", "method", "flagged"]);
    for row in &table.rows {
        out.push(vec![
            row.kappa.into(),
            row.measure.into(),
            row.rate.into(),
            row.ratio.into(),
            method_name(&row.method).into(),
            Cell::from(row.flagged),
        ]);
    }
    let mut report = Report { table: out, ..Report::default() };
    record_localized(&mut report, "localized", &table);
    if ns.len() >= 4 {
        let a = extremal_index_alpha1(&mu, &ns, &cfg.k_schedule)?;
        report.value("alpha_1", a.limit);
    }
    report.checks.push(coarse_bound(cfg, &[&table]));
    Ok(report)
}
