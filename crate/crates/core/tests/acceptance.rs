//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them).

mod common;

use abstain_nn::attack::{
    approx_attack, attack_linear_exact, brute_force_attack_oracle, critical_threshold,
    exact_attack, line_attack, AttackResult, MagnitudeGrid, QpSettings,
};
use abstain_nn::bounds::mc::{
    mc_coverage_abstention, mc_single_opposite_success, mc_sphere_cap_fraction,
    mc_toy_abstention_grid, mc_toy_objective_grid, mc_toy_robust_accuracy,
};
use abstain_nn::bounds::{
    coverage_sample_bound, improved_bound, toy_abstention, toy_optimal_tau, toy_robust_accuracy,
    RayConvention,
};
use abstain_nn::classifier::{
    predict_linear, predict_with_tau, train_linear_baseline, ClassifierConfig, Outcome,
    RobustModel,
};
use abstain_nn::data::{gen_gaussian_clusters, LabeledDataset, ToyGeometry};
use abstain_nn::geometry::{
    sample_uniform_subspace, sphere_cap_fraction, CapMode, KappaBoundedSubspaceConfig,
    SubspaceDistribution,
};
use abstain_nn::rng::derive_seed;
use abstain_nn::tuner::{online_to_batch, run_online, tune_tau_sigma_grid, OnlineRunConfig};
use common::{random_attack_instance, separated_clusters};

fn pass(criterion: usize, detail: String) {
    println!("ACCEPTANCE {criterion:02} PASS: {detail}");
}

#[test]
fn acceptance_01_exact_attack_oracle_equivalence() {
    let qp = QpSettings::default();
    let total = 200;
    let mut boundary = 0;
    for seed in 0..total as u64 {
        let inst = random_attack_instance(seed);
        let exact = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, &qp)
            .unwrap()
            .is_success();
        let oracle =
            brute_force_attack_oracle(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, None)
                .unwrap();
        if exact != oracle.success {
            let crit = critical_threshold(&inst.model, &inst.x, inst.y, &inst.s, &qp).unwrap();
            assert!(
                (inst.tau - crit).abs() <= 1e-6
                    || (inst.tau - oracle.best_wrong_distance).abs() <= 1e-6,
                "seed {seed}: exact={exact}, oracle={}, tau={}, tau_crit={crit}, oracle_best={}",
                oracle.success,
                inst.tau,
                oracle.best_wrong_distance
            );
            boundary += 1;
        }
    }
    pass(
        1,
        format!(
            "exact attack matched the brute-force oracle on {total}/{total} instances \
             ({boundary} within the 1e-6 boundary tolerance)"
        ),
    );
}

#[test]
fn acceptance_02_linear_protocol_doom() {
    let (train, test) = separated_clusters(8, 50, 25, 2);
    let lm = train_linear_baseline(&train, 1e-3).unwrap();
    let subspaces_per_point = 1000;
    let mut successes = 0usize;
    let mut total = 0usize;
    for i in 0..test.len() {
        for t in 0..subspaces_per_point {
            let s = sample_uniform_subspace(8, 1, derive_seed(2_002, (i * subspaces_per_point + t) as u64))
                .unwrap();
            total += 1;
            if attack_linear_exact(&lm, test.feature(i), test.label(i), &s) {
                successes += 1;
            }
        }
    }
    assert_eq!(successes, total, "linear attack must succeed on every subspace");
    pass(
        2,
        format!("linear baseline robust error {successes}/{total} = 100.0% exactly"),
    );
}

#[test]
fn acceptance_03_line_attack_defeats_non_abstaining_classifiers() {
    let (train, test) = separated_clusters(3, 50, 10, 3);
    let lm = train_linear_baseline(&train, 1e-3).unwrap();
    let nn = RobustModel::fit(&train, ClassifierConfig::new(f64::INFINITY, 0.0).unwrap()).unwrap();
    let grid = MagnitudeGrid::default();
    let classifiers: Vec<(&str, Box<dyn Fn(&[f64]) -> Outcome>)> = vec![
        ("linear", Box::new(|p: &[f64]| Outcome::Label(predict_linear(&lm, p)))),
        ("1-nn-no-abstain", Box::new(|p: &[f64]| predict_with_tau(&nn, p, f64::INFINITY))),
    ];
    let mut detail = Vec::new();
    for (name, classify) in &classifiers {
        let mut per_class = [(0usize, 0usize); 2];
        for i in 0..test.len() {
            let class = test.label(i) as usize;
            for d in 0..1000u64 {
                let dir = sample_uniform_subspace(3, 1, derive_seed(3_003, i as u64 * 1000 + d))
                    .unwrap();
                let r = line_attack(
                    classify.as_ref(),
                    test.feature(i),
                    test.label(i),
                    &dir.basis()[0],
                    &grid,
                )
                .unwrap();
                per_class[class].1 += 1;
                if r.success {
                    per_class[class].0 += 1;
                }
            }
        }
        let rates: Vec<f64> = per_class
            .iter()
            .map(|(s, n)| *s as f64 / *n as f64)
            .collect();
        let best = rates.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            best >= 0.45,
            "{name}: no class reached 0.45 (rates {rates:?})"
        );
        detail.push(format!("{name} per-class success rates {rates:?}"));
    }
    pass(3, detail.join("; "));
}

#[test]
fn acceptance_04_sphere_cap_exactness() {
    let trials = 1_000_000u64;
    let mut worst = 0.0f64;
    for (cell, (n, k)) in [(5usize, 1usize), (10, 1), (10, 3), (30, 5)].iter().enumerate() {
        for (j, eps) in [0.05, 0.1, 0.3].iter().enumerate() {
            let exact = sphere_cap_fraction(*n, *k, *eps, CapMode::Exact).unwrap();
            let upper = sphere_cap_fraction(*n, *k, *eps, CapMode::UpperBound).unwrap();
            assert!(exact <= upper + 1e-12, "(n,k,eps)=({n},{k},{eps})");
            let est = mc_sphere_cap_fraction(*n, *k, *eps, trials, 434 + (cell * 3 + j) as u64)
                .unwrap();
            assert!(
                est.covers(exact),
                "(n,k,eps)=({n},{k},{eps}): mc {} ± {} vs exact {exact}",
                est.mean,
                est.ci95
            );
            if est.ci95 > 0.0 {
                worst = worst.max((est.mean - exact).abs() / est.ci95);
            }
        }
    }
    pass(
        4,
        format!("12 (n,k,eps) cells within the 95% binomial CI of the exact cap integral (worst |z| = {worst:.2}σ/1.96σ); exact <= upper bound everywhere"),
    );
}

#[test]
fn acceptance_05_robust_error_bound_dominance() {
    let trials = 1_000_000u64;
    let mut lines = Vec::new();
    for (i, n2) in [8usize, 32].iter().enumerate() {
        for (j, tau_over_r) in [0.02f64, 0.05].iter().enumerate() {
            let est = mc_single_opposite_success(
                *n2,
                1,
                *tau_over_r,
                &SubspaceDistribution::Uniform,
                trials,
                550 + (i * 2 + j) as u64,
            )
            .unwrap();
            let bound = improved_bound(1, *tau_over_r, 1.0, *n2, 1).unwrap();
            assert!(
                est.mean <= bound.value * 1.05,
                "n2={n2}, tau/r={tau_over_r}: mc {} above improved bound {}",
                est.mean,
                bound.value
            );
            let exact = sphere_cap_fraction(*n2, *n2 - 1, *tau_over_r, CapMode::Exact).unwrap();
            assert!(
                est.covers(exact),
                "n2={n2}, tau/r={tau_over_r}: mc {} outside CI of exact {exact}",
                est.mean
            );
            lines.push(format!(
                "n2={n2}, tau/r={tau_over_r}: mc {} <= bound {:.3e}, exact {:.3e}",
                est.mean, bound.value, exact
            ));
        }
    }
    pass(5, lines.join("; "));
}

#[test]
fn acceptance_06_kappa_bounded_scaling() {
    let trials = 1_000_000u64;
    let mut lines = Vec::new();
    for (i, n2) in [8usize, 32].iter().enumerate() {
        let mut axis = vec![0.0; *n2];
        axis[0] = 1.0;
        // One-sided cone mass 0.1 with mixture weight 0.5: kappa = 5.5.
        let cosine = KappaBoundedSubspaceConfig::cone_cosine_for_mass(*n2, 0.1).unwrap();
        let cfg =
            KappaBoundedSubspaceConfig::from_cone_mass(*n2, 1, 0.5, &axis, cosine, 0.1).unwrap();
        assert!((cfg.kappa - 5.5).abs() < 1e-9);
        let adversary = SubspaceDistribution::KappaBounded(cfg);
        for (j, tau_over_r) in [0.02f64, 0.05].iter().enumerate() {
            let stream = (i * 2 + j) as u64;
            let kappa_est =
                mc_single_opposite_success(*n2, 1, *tau_over_r, &adversary, trials, 660 + stream)
                    .unwrap();
            let unif_est = mc_single_opposite_success(
                *n2,
                1,
                *tau_over_r,
                &SubspaceDistribution::Uniform,
                trials,
                770 + stream,
            )
            .unwrap();
            // CI slack enters through the conservative upper limit of the
            // uniform estimate (rule-of-three when it observed no successes).
            let allowance = 5.5 * unif_est.upper95() * 1.05;
            assert!(
                kappa_est.mean <= allowance,
                "n2={n2}, tau/r={tau_over_r}: kappa-sampler error {} above κ-scaled allowance {allowance}",
                kappa_est.mean
            );
            lines.push(format!(
                "n2={n2}, tau/r={tau_over_r}: kappa {} vs 5.5 x uniform {} (allowance {:.2e})",
                kappa_est.mean, unif_est.mean, allowance
            ));
        }
    }
    pass(6, lines.join("; "));
}

#[test]
fn acceptance_07_toy_closed_forms() {
    let geom = ToyGeometry::new(1.0, 50.0, 200, 0.5).unwrap();
    // With m = 200 per unit segment the abstention curve falls from 1 to ~0
    // by τ ≈ 0.05; the grid covers that transition.
    let taus: Vec<f64> = (0..20).map(|j| j as f64 * 0.0025).collect();
    let ests = mc_toy_abstention_grid(&geom, &taus, 100_000, 777);
    let mut worst_abst = 0.0f64;
    for (est, &tau) in ests.iter().zip(&taus) {
        let formula = toy_abstention(tau, 1.0, 200);
        let err = (est.mean - formula).abs();
        worst_abst = worst_abst.max(err);
        assert!(err <= 0.01, "tau={tau}: |{} - {formula}| > 0.01", est.mean);
    }
    let mut acc_lines = Vec::new();
    for conv in [RayConvention::DirectedRay, RayConvention::FullLine] {
        let est = mc_toy_robust_accuracy(&geom, 0.5, conv, 100_000, 778).unwrap();
        let formula = toy_robust_accuracy(0.5, 1.0, 50.0, 200, conv).unwrap();
        let err = (est.mean - formula).abs();
        assert!(err <= 0.005, "{conv:?}: |{} - {formula}| > 0.005", est.mean);
        acc_lines.push(format!("{conv:?} |mc-formula| = {err:.2e}"));
    }
    pass(
        7,
        format!(
            "abstention worst |mc-formula| = {worst_abst:.4} over 20-point grid; accuracy at tau=0.5: {}",
            acc_lines.join(", ")
        ),
    );
}

#[test]
fn acceptance_08_toy_optimal_threshold() {
    let (d, r, c) = (1.0, 100.0, 0.5);
    // Zero case exactly at the boundary π c r / D = 1/m.
    let m0 = 50;
    let c0 = d / (std::f64::consts::PI * r * m0 as f64);
    let zero = toy_optimal_tau(d, r, m0, c0).unwrap();
    assert_eq!(zero.tau_star, 0.0);

    let grid: Vec<f64> = (0..25).map(|j| j as f64 * 0.02).collect();
    let mut lines = Vec::new();
    for (m, trials) in [(10usize, 8_000_000u64), (100, 3_000_000), (1000, 500_000)] {
        let out = toy_optimal_tau(d, r, m, c).unwrap();
        let ratio = out.theta_ratio.unwrap();
        assert!(
            (1.0 / 3.0..=3.0).contains(&ratio),
            "m={m}: theta ratio {ratio} outside [1/3, 3]"
        );
        let geom = ToyGeometry::new(d, r, m, c).unwrap();
        let g_hat =
            mc_toy_objective_grid(&geom, &grid, RayConvention::DirectedRay, trials, 880 + m as u64)
                .unwrap();
        let argmin = g_hat
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let gap = (grid[argmin] - out.tau_star).abs();
        assert!(
            gap <= 2.0 * 0.02 + 1e-12,
            "m={m}: MC argmin {} vs tau* {} (gap {gap})",
            grid[argmin],
            out.tau_star
        );
        lines.push(format!(
            "m={m}: tau*={:.4}, theta-ratio {ratio:.2}, MC argmin {:.2}",
            out.tau_star, grid[argmin]
        ));
    }
    pass(8, format!("boundary case tau*=0; {}", lines.join("; ")));
}

#[test]
fn acceptance_09_forecaster_regret() {
    let seeds = 10u64;
    let rounds = 200usize;
    let mut per_round_50 = Vec::new();
    let mut per_round_200 = Vec::new();
    let mut identity_checked = false;
    for seed in 0..seeds {
        let (train, _) = separated_clusters(2, 20, 5, 900 + seed);
        let batches: Vec<LabeledDataset> = (0..rounds)
            .map(|t| {
                let centers = vec![vec![-5.0, 0.0], vec![5.0, 0.0]];
                gen_gaussian_clusters(&centers, 10, 0.5, derive_seed(9_000 + seed, t as u64))
                    .unwrap()
            })
            .collect();
        let cfg = OnlineRunConfig {
            n3: 1,
            subspaces_per_batch: 2,
            lambda: None,
            tradeoff: 0.5,
            seed: 9_500 + seed,
            domain: None,
            qp: QpSettings::default(),
        };
        let run = run_online(&train, 0.0, &batches, &cfg).unwrap();
        per_round_50.push(run.regret_curve[49] / 50.0);
        per_round_200.push(run.regret_curve[199] / 200.0);

        if seed == 0 {
            // Exact piecewise regret equals brute-force breakpoint
            // recomputation.
            for t in [49usize, 199] {
                let mut probes = vec![run.domain.0];
                for u in &run.utilities[..=t] {
                    probes.extend_from_slice(u.breakpoints());
                }
                let best = probes
                    .iter()
                    .map(|&p| run.utilities[..=t].iter().map(|u| u.eval(p)).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                let played: f64 = (0..=t)
                    .map(|s| run.utilities[s].eval(run.tau_history[s]))
                    .sum();
                let brute = best - played;
                assert!(
                    (run.regret_curve[t] - brute).abs() <= 1e-12,
                    "round {t}: piecewise {} vs brute {brute}",
                    run.regret_curve[t]
                );
            }
            // Online-to-batch conversion: the reported gap equals the
            // average-regret identity on the run's own average-utility curve.
            let c = 0.5;
            let t_total = rounds as f64;
            let cum = run.state.cumulative_utility();
            let g_curve = cum.affine(-(1.0 + c) / t_total, 1.0 + c);
            let otb = online_to_batch(&run.tau_history, &g_curve).unwrap();
            let pseudo_regret = cum.max_value()
                - run.tau_history.iter().map(|&tau| cum.eval(tau)).sum::<f64>() / t_total;
            let identity = (1.0 + c) * pseudo_regret / t_total;
            assert!(
                (otb.gap - identity).abs() <= 1e-12,
                "gap {} vs identity {identity}",
                otb.gap
            );
            identity_checked = true;
        }
    }
    assert!(identity_checked);
    let median = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let m50 = median(&mut per_round_50);
    let m200 = median(&mut per_round_200);
    assert!(
        m200 <= 0.7 * m50,
        "median per-round regret at T=200 ({m200}) above 0.7 x T=50 ({m50})"
    );
    pass(
        9,
        format!(
            "median per-round regret {m200:.4} at T=200 vs {m50:.4} at T=50 (ratio {:.2}); \
             piecewise regret and online-to-batch gap match brute force to 1e-12",
            m200 / m50
        ),
    );
}

#[test]
fn acceptance_10_abstention_rate_control() {
    let tau = 0.5;
    let m = coverage_sample_bound(2, 10, 0.5).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let rate = mc_coverage_abstention(2, 10, tau, m, 2_000, 1_000 + seed).unwrap();
        worst = worst.max(rate);
        assert!(rate <= 0.02, "seed {seed}: abstention {rate} above delta + 0.02");
    }
    pass(
        10,
        format!("m = {m} samples kept abstention <= {worst:.4} over 20 seeds (allowed 0.02)"),
    );
}

#[test]
fn acceptance_11_outlier_removal_helps() {
    let centers = vec![vec![0.0, 0.0], vec![6.0, 0.0]];
    let base = gen_gaussian_clusters(&centers, 25, 0.25, 8).unwrap();
    let mut feats: Vec<Vec<f64>> = base.features().to_vec();
    let mut labels = base.labels().to_vec();
    // 4 mislabeled outliers on 50 clean points (~2% per planted point).
    for (p, l) in [
        (vec![6.05, 0.05], 0u32),
        (vec![5.9, -0.1], 0),
        (vec![0.05, 0.02], 1),
        (vec![-0.1, 0.1], 1),
    ] {
        feats.push(p);
        labels.push(l);
    }
    let train = LabeledDataset::new(feats, labels).unwrap();
    let test = gen_gaussian_clusters(&centers, 12, 0.25, 9).unwrap();
    let subspaces: Vec<_> = (0..8)
        .map(|i| sample_uniform_subspace(2, 1, 1_100 + i).unwrap())
        .collect();
    let tau_grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.2).collect();
    let sigma_grid = vec![0.0, 0.3, 0.5];
    let res = tune_tau_sigma_grid(
        &train,
        &test,
        &subspaces,
        0.5,
        &tau_grid,
        &sigma_grid,
        &QpSettings::default(),
    )
    .unwrap();
    let tau_star0 = res
        .table
        .iter()
        .filter(|cell| cell.sigma == 0.0)
        .min_by(|a, b| a.g.unwrap().total_cmp(&b.g.unwrap()))
        .unwrap()
        .clone();
    let best_pos = res
        .table
        .iter()
        .filter(|cell| cell.sigma > 0.0 && cell.tau == tau_star0.tau && cell.g.is_some())
        .min_by(|a, b| a.g.unwrap().total_cmp(&b.g.unwrap()))
        .unwrap()
        .clone();
    assert!(
        best_pos.g.unwrap() < tau_star0.g.unwrap(),
        "no positive sigma beat g(tau*, 0): {tau_star0:?} vs {best_pos:?}"
    );
    pass(
        11,
        format!(
            "g(tau*={}, sigma={}) = {:.4} < g(tau*, 0) = {:.4}",
            tau_star0.tau,
            best_pos.sigma,
            best_pos.g.unwrap(),
            tau_star0.g.unwrap()
        ),
    );
}

#[test]
fn acceptance_12_approx_attack_soundness() {
    let qp = QpSettings::default();
    let mut approx_successes = 0usize;
    for seed in 0..200u64 {
        let inst = random_attack_instance(seed);
        match approx_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau).unwrap() {
            AttackResult::Success { adv_point, .. } => {
                approx_successes += 1;
                assert!(
                    predict_with_tau(&inst.model, &adv_point, inst.tau).is_wrong_label(inst.y),
                    "seed {seed}: unsound approximate success"
                );
                let exact = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, &qp)
                    .unwrap()
                    .is_success();
                assert!(exact, "seed {seed}: approximate success the exact attack missed");
            }
            AttackResult::NoAdversarialExample => {}
        }
    }
    pass(
        12,
        format!(
            "all {approx_successes} approximate successes re-verified and were confirmed by the exact attack; zero unsound reports"
        ),
    );
}
