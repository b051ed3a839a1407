use super::*;
use crate::systems;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

/// Law of the hit count over steps `1..=k`, by enumerating every admissible
/// word of length `n + k`. Conditional runs keep only `x ∈ U` and
/// renormalize.
fn brute_counts(mu: &MarkovMeasure, u: &CylinderUnion, k: usize, conditional: bool) -> Vec<f64> {
    let n = u.depth();
    let mut law = vec![0.0; k + 1];
    let mut total = 0.0;
    for w in mu.admissible_words(n + k) {
        let s = w.symbols();
        if conditional && !u.contains(&s[..n]) {
            continue;
        }
        let hits = (1..=k).filter(|&j| u.contains(&s[j..j + n])).count();
        let m = mu.word_measure(s).unwrap();
        law[hits] += m;
        total += m;
    }
    law.iter().map(|x| x / total).collect()
}

fn brute_hat_alpha(mu: &MarkovMeasure, u: &CylinderUnion, ell: usize, k: usize) -> f64 {
    brute_counts(mu, u, k, true)[ell - 1..].iter().sum()
}

fn zeros(mu: &MarkovMeasure, n: usize) -> CylinderUnion {
    CylinderUnion::new(mu, n, vec![Word(vec![0; n])]).unwrap()
}

#[test]
fn hat_alpha_examples() {
    let full = systems::doubling();
    let u = zeros(&full, 5);
    assert_eq!(hat_alpha(&full, &u, 1, 7).unwrap(), 1.0);
    let v = hat_alpha(&full, &u, 2, 3).unwrap();
    assert_abs_diff_eq!(v, brute_hat_alpha(&full, &u, 2, 3), epsilon = 1e-14);
    // Returns within 3 steps of 0^5 need x_5 = 0.
    assert_abs_diff_eq!(v, 0.5, epsilon = 1e-14);
    assert!(hat_alpha(&full, &u, 0, 3).is_err());
    assert!(hat_alpha(&full, &u, 2, 0).is_err());
}

#[test]
fn cantor_hat_alpha_two_thirds_for_short_windows() {
    let tri = systems::tripling();
    let holes = systems::cantor_holes(10);
    for (i, u) in holes.iter().enumerate() {
        let n = i + 1;
        for k in [1usize, 5, 20] {
            let v = hat_alpha(&tri, u, 2, k).unwrap();
            if k <= n {
                assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-12);
            } else {
                // Past the cluster a fresh entry into U_n adds mass.
                assert!(v > 2.0 / 3.0 + 1e-6, "n = {}, K = {}: {}", n, k, v);
            }
        }
    }
}

#[test]
fn cantor_hat_alpha_past_depth_matches_enumeration() {
    let tri = systems::tripling();
    let u = systems::cantor_holes(2).pop().unwrap();
    for k in 1..=5 {
        assert_abs_diff_eq!(hat_alpha(&tri, &u, 2, k).unwrap(), brute_hat_alpha(&tri, &u, 2, k), epsilon = 1e-12);
    }
    // K = 3 on U_2: returns at j ≤ 2 need x_2 ∈ {0,2} (2/3); otherwise
    // x_2 = 1 and a return at j = 3 needs x_3 x_4 ∈ U_2 (4/9).
    assert_abs_diff_eq!(hat_alpha(&tri, &u, 2, 3).unwrap(), 2.0 / 3.0 + 1.0 / 3.0 * 4.0 / 9.0, epsilon = 1e-14);
}

#[test]
fn alpha_levels_is_difference_of_hat_alpha() {
    let tri = systems::tripling();
    let u = systems::cantor_holes(4).pop().unwrap();
    for ell in 1..=4 {
        let lhs = alpha_levels(&tri, &u, ell, 6).unwrap();
        let rhs = hat_alpha(&tri, &u, ell, 6).unwrap() - hat_alpha(&tri, &u, ell + 1, 6).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn no_returns_below_essential_period() {
    let full = systems::doubling();
    let u = CylinderUnion::cylinder(&full, &[0, 1, 1, 1]).unwrap();
    assert_eq!(u.essential_period(&full, 10).unwrap().value(), Some(4));
    assert_eq!(alpha_levels(&full, &u, 1, 3).unwrap(), 1.0);
    for ell in 2..=5 {
        assert_eq!(hat_alpha(&full, &u, ell, 3).unwrap(), 0.0);
    }
    assert_abs_diff_eq!(lambda_direct(&full, &u, 1, 3).unwrap(), 1.0, epsilon = 1e-15);
    assert_eq!(lambda_direct(&full, &u, 2, 3).unwrap(), 0.0);
}

#[test]
fn geometric_law_at_fixed_point() {
    let full = systems::doubling();
    let u = zeros(&full, 12);
    for ell in 1..=5 {
        let v = hat_alpha(&full, &u, ell, 40).unwrap();
        assert!((v - math::powi(0.5, ell as i32 - 1)).abs() < 0.01);
        let a = alpha_levels(&full, &u, ell, 40).unwrap();
        assert!((a - math::powi(0.5, ell as i32)).abs() < 0.01);
    }
}

#[test]
fn lambda_direct_examples() {
    let full = systems::doubling();
    let u = CylinderUnion::symbols(&full, &[1]).unwrap();
    assert_abs_diff_eq!(lambda_direct(&full, &u, 1, 2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(lambda_direct(&full, &u, 2, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
}

#[test]
fn theorem_route_examples() {
    let geo: Vec<f64> = (0..10).map(|i| math::powi(0.5, i)).collect();
    let p = EiProfile::from_hat_alpha(1, geo).unwrap();
    let t = lambda_via_theorem(&p).unwrap();
    for (i, l) in t.lambda.iter().enumerate() {
        assert_abs_diff_eq!(*l, math::powi(0.5, i as i32 + 1), epsilon = 1e-15);
    }
    // Truncated at L = 8: Σ ℓ 2^{-ℓ} over ℓ ≤ 8.
    assert!((t.mean_cluster - 2.0).abs() < 0.05);

    let single = EiProfile::from_hat_alpha(1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let t = lambda_via_theorem(&single).unwrap();
    assert_eq!(t.lambda, vec![1.0, 0.0]);
    assert_eq!(t.mean_identity_residual, 0.0);

    let degenerate = EiProfile::from_hat_alpha(1, vec![1.0, 1.0, 1.0]).unwrap();
    assert!(matches!(lambda_via_theorem(&degenerate), Err(Error::DegenerateExtremalIndex(_))));
}

#[test]
fn profile_is_consistent_with_single_queries() {
    let tri = systems::tripling();
    let u = systems::cantor_holes(4).pop().unwrap();
    let p = ei_profile(&tri, &u, 6, DEFAULT_ELL_MAX).unwrap();
    assert_eq!(p.hat_alpha[0], 1.0);
    for ell in 1..=DEFAULT_ELL_MAX {
        assert!((p.hat_alpha[ell - 1] - hat_alpha(&tri, &u, ell, 6).unwrap()).abs() < 1e-12);
        assert!((p.lambda[ell - 1] - lambda_direct(&tri, &u, ell, 6).unwrap()).abs() < 1e-12);
        assert!(p.alpha[ell - 1] >= -1e-12);
    }
    let total: f64 = p.lambda.iter().sum::<f64>() + p.lambda_tail;
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn alpha1_examples() {
    let tri = systems::tripling();
    let ns = systems::cantor_system(&tri, 2, 10).unwrap();
    let e = extremal_index_alpha1(&tri, &ns, &[5, 10, 20]).unwrap();
    assert!((e.limit - 1.0 / 3.0).abs() < 0.02, "{}", e.limit);
    assert!(e.monotone_in_k);

    let full = systems::doubling();
    let ns = systems::point_family(&full, &[0], 2..=14).unwrap();
    let e = extremal_index_alpha1(&full, &ns, &[5, 10, 20]).unwrap();
    assert!((e.limit - 0.5).abs() < 0.02, "{}", e.limit);

    let ns = systems::sqrt2_family(&full, 4..=22).unwrap();
    let e = extremal_index_alpha1(&full, &ns, &[5, 10, 20]).unwrap();
    assert!((e.limit - 1.0).abs() < 0.02, "{}", e.limit);

    let short = systems::point_family(&full, &[0], 2..=4).unwrap();
    assert!(extremal_index_alpha1(&full, &short, &[5]).is_err());
}

#[test]
fn theta_examples() {
    let rule = |n: usize| n * n + 1;
    let tri = systems::tripling();
    // K_n μ(U_n) only drops below 1 past n = 13 on this family.
    let ns = systems::cantor_system(&tri, 2, 14).unwrap();
    let t = extremal_index_theta(&tri, &ns, &rule).unwrap();
    assert!((t.limit().unwrap() - 1.0 / 3.0).abs() < 0.02, "{:?}", t.limit());

    let full = systems::doubling();
    let ns = systems::point_family(&full, &[0], 2..=14).unwrap();
    let t = extremal_index_theta(&full, &ns, &rule).unwrap();
    assert!((t.limit().unwrap() - 0.5).abs() < 0.02, "{:?}", t.limit());

    let ns = systems::sqrt2_family(&full, 4..=22).unwrap();
    let t = extremal_index_theta(&full, &ns, &rule).unwrap();
    assert!((t.limit().unwrap() - 1.0).abs() < 0.02, "{:?}", t.limit());

    assert!(extremal_index_theta(&full, &ns, &|n| n * n).is_err());
}

#[test]
fn exponential_law_inversion() {
    let theta = 0.3;
    let x = 1.7;
    let v = theta * math::exp(-theta * x);
    assert_abs_diff_eq!(invert_exponential_law(v, x).unwrap(), theta, epsilon = 1e-12);
    assert_eq!(invert_exponential_law(0.5, 2.0), None);
}

#[test]
fn periodic_theta_examples() {
    let full = systems::doubling();
    let n_list = [4, 6, 8, 10];
    let t = periodic_theta(&full, &[0], &n_list).unwrap();
    assert!(t.rows.iter().all(|&(_, r)| (r - 0.5).abs() < 1e-14));
    let t = periodic_theta(&full, &[0, 1], &n_list).unwrap();
    assert!(t.rows.iter().all(|&(_, r)| (r - 0.25).abs() < 1e-14));
    let t = periodic_theta(&systems::tripling(), &[0], &n_list).unwrap();
    assert_abs_diff_eq!(t.limit, 1.0 / 3.0, epsilon = 1e-14);
    assert!(periodic_theta(&full, &[0, 0], &n_list).is_err());
    assert!(periodic_theta(&systems::golden_mean(), &[1], &n_list).is_err());
}

#[test]
fn beta_hat_examples() {
    let tri = systems::tripling();
    let ns = systems::cantor_system(&tri, 5, 13).unwrap();
    let s: Vec<usize> = (5..=13).map(|n| n * n).collect();
    let b = beta_hat(&tri, &ns, &s, 2).unwrap();
    assert!((b.limit.unwrap() - 2.0 / 3.0).abs() < 0.02, "{:?}", b.limit);
    assert_eq!(b.agrees, Some(true));
    assert_eq!(beta_hat(&tri, &ns, &s, 1).unwrap().limit, Some(1.0));

    let full = systems::doubling();
    let ns = systems::point_family(&full, &[0], 4..=16).unwrap();
    let s: Vec<usize> = (4..=16).map(|n| n * n).collect();
    let b = beta_hat(&full, &ns, &s, 2).unwrap();
    assert!((b.limit.unwrap() - 0.5).abs() < 0.02, "{:?}", b.limit);

    let early = systems::cantor_system(&tri, 2, 8).unwrap();
    let s: Vec<usize> = (2..=8).map(|n| n * n).collect();
    assert!(beta_hat(&tri, &early, &s, 2).is_err());
}

#[test]
fn monte_carlo_fallback_for_hat_alpha() {
    let full = systems::doubling();
    let u = zeros(&full, 4);
    let exact = hat_alpha(&full, &u, 2, 6).unwrap();
    let mc = hat_alpha_estimate(&full, &u, 2, 6, 3, 40_000, 9).unwrap();
    assert!(mc.monte_carlo);
    assert!((mc.value - exact).abs() < 4.0 * mc.std_error.unwrap());
    let ex = hat_alpha_estimate(&full, &u, 2, 6, DEFAULT_STATE_BUDGET, 0, 9).unwrap();
    assert!(!ex.monte_carlo);
    assert_eq!(ex.value, exact);
}

fn arb_case() -> impl Strategy<Value = (MarkovMeasure, CylinderUnion)> {
    (2usize..=3, 1usize..=3, proptest::collection::vec(any::<u32>(), 1..5), any::<bool>()).prop_filter_map(
        "proper hole",
        |(m, n, picks, golden)| {
            let mu = if golden && m == 2 { systems::golden_mean() } else { MarkovMeasure::uniform(m).ok()? };
            let words = mu.admissible_words(n);
            let chosen: Vec<Word> = picks.iter().map(|&p| words[p as usize % words.len()].clone()).collect();
            let u = CylinderUnion::new(&mu, n, chosen).ok()?;
            (u.len() < words.len()).then_some((mu, u))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_match_enumeration((mu, u) in arb_case(), k in 1usize..=6) {
        let k = if mu.alphabet_size() == 3 { k.min(5) } else { k };
        let cond = brute_counts(&mu, &u, k, true);
        let unc = brute_counts(&mu, &u, k, false);
        for ell in 1..=k + 1 {
            let a = alpha_levels(&mu, &u, ell, k).unwrap();
            prop_assert!((a - cond[ell - 1]).abs() < 1e-12);
        }
        for ell in 1..=k {
            let l = lambda_direct(&mu, &u, ell, k).unwrap();
            prop_assert!((l - unc[ell] / (1.0 - unc[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn hat_alpha_monotone((mu, u) in arb_case(), k in 1usize..=8) {
        for ell in 1..=4 {
            let a = hat_alpha(&mu, &u, ell, k).unwrap();
            let b = hat_alpha(&mu, &u, ell + 1, k).unwrap();
            let c = hat_alpha(&mu, &u, ell, k + 1).unwrap();
            prop_assert!(b <= a + 1e-10);
            prop_assert!(a <= c + 1e-10);
        }
    }

    #[test]
    fn no_returns_below_period((mu, u) in arb_case()) {
        let k = 4;
        if u.period(&mu, k).unwrap() == crate::cylinder::PeriodSearch::ExceedsMax {
            for ell in 2..=4 {
                prop_assert_eq!(hat_alpha(&mu, &u, ell, k).unwrap(), 0.0);
            }
        }
    }
}
