//! Shared fixtures for the integration and acceptance suites.

use abstain_nn::classifier::{ClassifierConfig, RobustModel};
use abstain_nn::data::{gen_gaussian_clusters, min_interclass_distance, LabeledDataset};
use abstain_nn::geometry::{sample_uniform_subspace, Subspace};
use abstain_nn::rng::{derive_seed, stream_rng};
use rand::Rng;

pub struct AttackInstance {
    pub model: RobustModel,
    pub x: Vec<f64>,
    pub y: u32,
    pub s: Subspace,
    pub tau: f64,
}

/// Random small instance for oracle-equivalence runs: Gaussian clusters with
/// n2 ∈ {2,3,4}, n3 ∈ {1,2}, at most 12 training points, a test point near
/// the first cluster, and τ drawn at the scale of the cross-label distance
/// so that both attack outcomes occur.
pub fn random_attack_instance(seed: u64) -> AttackInstance {
    let mut rng = stream_rng(seed, 0);
    let n2 = *[2usize, 3, 4].get(rng.gen_range(0..3)).unwrap();
    let n3 = if n2 == 2 { 1 } else { rng.gen_range(1..=2usize) };
    let num_classes = rng.gen_range(2..=3usize);
    let per_class = rng.gen_range(2..=(12 / num_classes));
    let centers: Vec<Vec<f64>> = loop {
        let cand: Vec<Vec<f64>> = (0..num_classes)
            .map(|_| (0..n2).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let mut ok = true;
        for i in 0..num_classes {
            for j in i + 1..num_classes {
                let d: f64 = cand[i]
                    .iter()
                    .zip(&cand[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if d < 1.5 {
                    ok = false;
                }
            }
        }
        if ok {
            break cand;
        }
    };
    let stddev = rng.gen_range(0.1..0.8);
    let train = gen_gaussian_clusters(&centers, per_class, stddev, derive_seed(seed, 1)).unwrap();
    let model = RobustModel::fit(&train, ClassifierConfig::new(f64::INFINITY, 0.0).unwrap()).unwrap();
    let x: Vec<f64> = centers[0]
        .iter()
        .map(|c| c + stddev * rng.gen_range(-1.5..1.5))
        .collect();
    let y = 0u32;
    let scale = {
        let mut near_wrong = f64::INFINITY;
        for i in 0..train.len() {
            if train.label(i) != y {
                let d: f64 = train
                    .feature(i)
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                near_wrong = near_wrong.min(d);
            }
        }
        near_wrong.max(min_interclass_distance(&train).unwrap())
    };
    let tau = rng.gen_range(0.0..2.0) * scale;
    let s = sample_uniform_subspace(n2, n3, derive_seed(seed, 2)).unwrap();
    AttackInstance { model, x, y, s, tau }
}

/// Two well-separated Gaussian clusters with fresh test points.
pub fn separated_clusters(
    n2: usize,
    per_class_train: usize,
    per_class_test: usize,
    seed: u64,
) -> (LabeledDataset, LabeledDataset) {
    let mut c0 = vec![0.0; n2];
    let mut c1 = vec![0.0; n2];
    c0[0] = -5.0;
    c1[0] = 5.0;
    let centers = vec![c0, c1];
    let train = gen_gaussian_clusters(&centers, per_class_train, 0.5, derive_seed(seed, 0)).unwrap();
    let test = gen_gaussian_clusters(&centers, per_class_test, 0.5, derive_seed(seed, 1)).unwrap();
    (train, test)
}
