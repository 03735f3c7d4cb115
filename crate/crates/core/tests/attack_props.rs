//! Soundness, completeness and τ-characterization of the attacks on random
//! small instances (the full-size oracle-equivalence run lives in the
//! acceptance suite).

mod common;

use abstain_nn::attack::{
    approx_attack, brute_force_attack_oracle, critical_threshold, exact_attack, AttackResult,
    QpSettings,
};
use abstain_nn::classifier::predict_with_tau;
use common::random_attack_instance;

#[test]
fn exact_attack_successes_are_sound() {
    let qp = QpSettings::default();
    for seed in 0..60u64 {
        let inst = random_attack_instance(seed);
        match exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, &qp).unwrap() {
            AttackResult::Success {
                adv_point,
                distance_to_target,
                ..
            } => {
                // Wrong, non-abstaining label at the model's threshold.
                assert!(
                    predict_with_tau(&inst.model, &adv_point, inst.tau).is_wrong_label(inst.y),
                    "seed {seed}: success failed re-verification"
                );
                assert!(distance_to_target < inst.tau);
                // Membership in the affine subspace x + S.
                let offset: Vec<f64> =
                    adv_point.iter().zip(&inst.x).map(|(a, b)| a - b).collect();
                assert!(
                    inst.s.residual_norm(&offset) <= 1e-8,
                    "seed {seed}: adversarial point left the subspace"
                );
            }
            AttackResult::NoAdversarialExample => {}
        }
    }
}

#[test]
fn exact_attack_matches_bruteforce_oracle_small() {
    let qp = QpSettings::default();
    let mut checked = 0;
    for seed in 1_000..1_050u64 {
        let inst = random_attack_instance(seed);
        let exact = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, &qp)
            .unwrap()
            .is_success();
        let oracle = brute_force_attack_oracle(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, None)
            .unwrap();
        if exact != oracle.success {
            let crit = critical_threshold(&inst.model, &inst.x, inst.y, &inst.s, &qp).unwrap();
            assert!(
                (inst.tau - crit).abs() <= 1e-6
                    || (inst.tau - oracle.best_wrong_distance).abs() <= 1e-6,
                "seed {seed}: exact={exact} oracle={} tau={} crit={crit} oracle_best={}",
                oracle.success,
                inst.tau,
                oracle.best_wrong_distance
            );
        } else {
            checked += 1;
        }
    }
    assert!(checked >= 45, "only {checked} clean agreements");
}

#[test]
fn critical_threshold_characterizes_success() {
    let qp = QpSettings::default();
    for seed in 2_000..2_040u64 {
        let inst = random_attack_instance(seed);
        let crit = critical_threshold(&inst.model, &inst.x, inst.y, &inst.s, &qp).unwrap();
        if crit.is_finite() {
            let above = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, crit + 1e-6, &qp)
                .unwrap()
                .is_success();
            assert!(above, "seed {seed}: no success just above tau_crit {crit}");
        }
        let below_tau = if crit.is_finite() { crit - 1e-6 } else { 1e12 };
        if below_tau > 0.0 {
            let below = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, below_tau, &qp)
                .unwrap()
                .is_success();
            assert!(!below, "seed {seed}: success just below tau_crit {crit}");
        }
    }
}

#[test]
fn attack_success_is_monotone_in_tau() {
    let qp = QpSettings::default();
    for seed in 3_000..3_030u64 {
        let inst = random_attack_instance(seed);
        let small = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, &qp)
            .unwrap()
            .is_success();
        let large = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau * 2.0 + 0.1, &qp)
            .unwrap()
            .is_success();
        if small {
            assert!(large, "seed {seed}: success lost when tau grew");
        }
    }
}

#[test]
fn approx_success_implies_exact_success() {
    let qp = QpSettings::default();
    let mut approx_hits = 0;
    for seed in 4_000..4_060u64 {
        let inst = random_attack_instance(seed);
        let approx = approx_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau).unwrap();
        if let AttackResult::Success { adv_point, .. } = &approx {
            approx_hits += 1;
            assert!(
                predict_with_tau(&inst.model, adv_point, inst.tau).is_wrong_label(inst.y),
                "seed {seed}: unsound approx success"
            );
            let exact = exact_attack(&inst.model, &inst.x, inst.y, &inst.s, inst.tau, &qp)
                .unwrap()
                .is_success();
            assert!(exact, "seed {seed}: approx succeeded where exact failed");
        }
    }
    assert!(approx_hits >= 5, "approx attack never fired ({approx_hits})");
}
