//! Behavioral contracts of the abstaining classifier.

use abstain_nn::classifier::{
    predict, predict_point_specific, predict_with_tau, ClassifierConfig, Outcome, RobustModel,
};
use abstain_nn::data::{nearest_neighbor, LabeledDataset};
use abstain_nn::rng::stream_rng;
use rand::Rng;

fn random_fixture(seed: u64) -> (RobustModel, Vec<Vec<f64>>) {
    let mut rng = stream_rng(seed, 0);
    let m = rng.gen_range(3..25);
    let feats: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let labels: Vec<u32> = (0..m).map(|_| rng.gen_range(0..3)).collect();
    let ds = LabeledDataset::new(feats, labels).unwrap();
    let model = RobustModel::fit(&ds, ClassifierConfig::new(1.0, 0.0).unwrap()).unwrap();
    let queries: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..3).map(|_| rng.gen_range(-6.0..6.0)).collect())
        .collect();
    (model, queries)
}

#[test]
fn abstention_is_monotone_in_tau() {
    for seed in 0..40u64 {
        let (model, queries) = random_fixture(seed);
        let mut rng = stream_rng(seed, 1);
        for q in &queries {
            let t1 = rng.gen_range(0.0..4.0);
            let t2 = t1 + rng.gen_range(0.0..4.0);
            if let Outcome::Label(k) = predict_with_tau(&model, q, t1) {
                match predict_with_tau(&model, q, t2) {
                    Outcome::Label(k2) => assert_eq!(k, k2),
                    Outcome::Abstain => panic!("larger tau abstained where smaller labeled"),
                }
            }
        }
    }
}

#[test]
fn infinite_tau_is_plain_nearest_neighbor() {
    for seed in 0..20u64 {
        let (model, queries) = random_fixture(seed);
        let inf = model.with_tau(f64::INFINITY);
        for q in &queries {
            let (idx, _) = nearest_neighbor(inf.train(), q);
            assert_eq!(predict(&inf, q), Outcome::Label(inf.train().label(idx)));
        }
    }
}

#[test]
fn label_contract_against_bruteforce() {
    // A returned Label(k) means some training point of class k lies strictly
    // within tau and nothing is strictly closer.
    for seed in 0..40u64 {
        let (model, queries) = random_fixture(seed);
        for q in &queries {
            match predict(&model, q) {
                Outcome::Abstain => {
                    for i in 0..model.train().len() {
                        let d: f64 = model
                            .train()
                            .feature(i)
                            .iter()
                            .zip(q)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        assert!(d >= model.tau());
                    }
                }
                Outcome::Label(k) => {
                    let dists: Vec<f64> = (0..model.train().len())
                        .map(|i| {
                            model
                                .train()
                                .feature(i)
                                .iter()
                                .zip(q)
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum::<f64>()
                                .sqrt()
                        })
                        .collect();
                    let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                    assert!(best < model.tau());
                    let witness = dists.iter().position(|d| *d == best).unwrap();
                    assert_eq!(model.train().label(witness), k);
                }
            }
        }
    }
}

#[test]
fn point_specific_matches_bruteforce_threshold_table() {
    for seed in 100..130u64 {
        let mut rng = stream_rng(seed, 0);
        let make = |rng: &mut rand_chacha::ChaCha8Rng, m: usize| -> LabeledDataset {
            let feats: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..2).map(|_| rng.gen_range(-4.0..4.0)).collect())
                .collect();
            let labels: Vec<u32> = (0..m).map(|_| rng.gen_range(0..2)).collect();
            LabeledDataset::new(feats, labels).unwrap()
        };
        let size_a = rng.gen_range(3..10);
        let a = make(&mut rng, size_a);
        let size_b = rng.gen_range(3..10);
        let b = make(&mut rng, size_b);
        for _ in 0..10 {
            let q: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let got = predict_point_specific(&a, &b, &q).unwrap();
            // Independent recomputation.
            let mut best = (0usize, f64::INFINITY);
            for i in 0..a.len() {
                let d: f64 = a
                    .feature(i)
                    .iter()
                    .zip(&q)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                if d < best.1 {
                    best = (i, d);
                }
            }
            let mut tau_i = f64::INFINITY;
            for j in 0..b.len() {
                if b.label(j) != a.label(best.0) {
                    let d: f64 = a
                        .feature(best.0)
                        .iter()
                        .zip(b.feature(j))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    tau_i = tau_i.min(d);
                }
            }
            let expected = if best.1 < tau_i {
                Outcome::Label(a.label(best.0))
            } else {
                Outcome::Abstain
            };
            assert_eq!(got, expected, "seed {seed}");
        }
    }
}
