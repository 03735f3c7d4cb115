//! Distributional and structural properties of the subspace samplers.

use abstain_nn::geometry::{
    rotate, sample_haar_rotation, sample_kappa_bounded_subspace, sample_uniform_subspace,
    sphere_cap_fraction, CapMode, KappaBoundedSubspaceConfig, Subspace, ORTHONORMALITY_TOL,
};
use abstain_nn::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn gram_defect(s: &Subspace) -> f64 {
    let b = s.basis();
    let mut worst = 0.0f64;
    for i in 0..b.len() {
        for j in 0..b.len() {
            let g: f64 = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

proptest! {
    #[test]
    fn sampled_bases_are_orthonormal(n2 in 2usize..12, seed in 0u64..u64::MAX) {
        let n3 = 1 + seed as usize % (n2 - 1);
        let s = sample_uniform_subspace(n2, n3, seed).unwrap();
        prop_assert!(gram_defect(&s) <= ORTHONORMALITY_TOL);
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_two_sample(a: &mut Vec<f64>, b: &mut Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

#[test]
fn haar_sampling_is_rotation_invariant() {
    // Distribution of a fixed linear functional of the sampled direction is
    // unchanged by applying a fixed rotation to the samples.
    let n2 = 5;
    let trials = 10_000;
    let rotation = sample_haar_rotation(n2, 99);
    let functional = {
        let mut rng = stream_rng(7, 0);
        let mut u: Vec<f64> = (0..n2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= nm);
        u
    };
    let mut plain = Vec::with_capacity(trials);
    let mut rotated = Vec::with_capacity(trials);
    for t in 0..trials {
        let a = sample_uniform_subspace(n2, 1, 1_000 + t as u64).unwrap();
        let b = sample_uniform_subspace(n2, 1, 5_000_000 + t as u64).unwrap();
        let dot = |v: &[f64]| -> f64 { v.iter().zip(&functional).map(|(x, y)| x * y).sum() };
        plain.push(dot(&a.basis()[0]));
        rotated.push(dot(&rotate(&rotation, &b.basis()[0])));
    }
    let d = ks_two_sample(&mut plain, &mut rotated);
    // Two-sample KS critical value at p = 0.01: 1.63 √(2/n).
    let critical = 1.63 * (2.0 / trials as f64).sqrt();
    assert!(d < critical, "KS statistic {d} exceeds {critical}");
}

#[test]
fn kappa_sampler_importance_ratio_is_bounded() {
    // Empirical probability of the construction cone event under the mixture
    // sampler is at most kappa times the Haar probability.
    let n2 = 4;
    let axis = {
        let mut a = vec![0.0; n2];
        a[0] = 1.0;
        a
    };
    let cfg = KappaBoundedSubspaceConfig::new(n2, 2, 0.6, &axis, 0.7, 200_000, 3).unwrap();
    let trials = 40_000u64;
    let mut mixture_hits = 0u64;
    let mut haar_hits = 0u64;
    for t in 0..trials {
        let sk = sample_kappa_bounded_subspace(&cfg, 900_000 + t).unwrap();
        let su = sample_uniform_subspace(n2, 2, 2_900_000 + t).unwrap();
        let in_cone = |s: &Subspace| {
            s.basis()
                .iter()
                .any(|b| b.iter().zip(&axis).map(|(x, y)| x * y).sum::<f64>().abs() >= 0.7)
        };
        if in_cone(&sk) {
            mixture_hits += 1;
        }
        if in_cone(&su) {
            haar_hits += 1;
        }
    }
    let p_mix = mixture_hits as f64 / trials as f64;
    let p_haar = haar_hits as f64 / trials as f64;
    assert!(
        p_mix <= cfg.kappa * p_haar * 1.1,
        "ratio {} exceeds kappa {}",
        p_mix / p_haar,
        cfg.kappa
    );
}

#[test]
fn cap_fraction_matches_mc_at_spec_point() {
    // (n=10, k=1, eps=0.3) against a million-point Monte Carlo.
    let est = abstain_nn::bounds::mc::mc_sphere_cap_fraction(10, 1, 0.3, 1_000_000, 12).unwrap();
    let exact = sphere_cap_fraction(10, 1, 0.3, CapMode::Exact).unwrap();
    assert!(
        (est.mean - exact).abs() <= 0.002,
        "mc {} vs exact {exact}",
        est.mean
    );
}
