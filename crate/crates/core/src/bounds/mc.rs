//! Monte Carlo verification harness for the closed-form bounds.
//!
//! The simulators here are independent geometric oracles: they never call the
//! closed-form calculators they are used to verify, and the toy-geometry
//! routines reduce the attack decision to elementary trigonometry that is
//! exact in the well-separated regime they enforce.

use crate::data::ToyGeometry;
use crate::geometry::{sample_unit_vector, SubspaceDistribution};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Binomial Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Normal-approximation half-width 1.96·√(p(1−p)/n).
    pub ci95: f64,
    pub successes: u64,
    pub trials: u64,
}

impl McEstimate {
    fn from_counts(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Self {
            mean: p,
            ci95: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
            successes,
            trials,
        }
    }

    /// Conservative 95% upper confidence limit; falls back to the exact
    /// zero-count limit −ln(0.025)/n when no successes were observed.
    pub fn upper95(&self) -> f64 {
        if self.successes == 0 {
            3.688_879_454_113_936 / self.trials as f64
        } else {
            self.mean + self.ci95
        }
    }

    /// |mean − reference| within the 95% CI (never tighter than the
    /// zero-count limit).
    pub fn covers(&self, reference: f64) -> bool {
        (self.mean - reference).abs() <= self.ci95.max(3.688_879_454_113_936 / self.trials as f64)
    }
}

const CHUNK: u64 = 4096;

/// Runs `trials` Bernoulli trials in seed-derived chunks (parallel, but the
/// count is independent of scheduling) and returns the success estimate.
fn mc_binomial(trials: u64, seed: u64, trial_fn: impl Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync) -> McEstimate {
    let chunks = trials.div_ceil(CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(trials);
            let mut hits = 0u64;
            for _ in lo..hi {
                if trial_fn(&mut rng) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    McEstimate::from_counts(successes, trials)
}

/// Fraction of uniform points on the unit (n−1)-sphere whose first k
/// coordinates have norm at most `eps` (the MC mirror of the exact cap
/// integral).
pub fn mc_sphere_cap_fraction(n: usize, k: usize, eps: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    if k == 0 || k >= n {
        return Err(Error::Dimension(format!("need 1 <= k < n, got k={k}, n={n}")));
    }
    let eps_sq = eps * eps;
    Ok(mc_binomial(trials, seed, move |rng| {
        let v = sample_unit_vector(n, rng);
        v[..k].iter().map(|x| x * x).sum::<f64>() <= eps_sq
    }))
}

/// Success probability of the single-opposite-point attack: the chance that
/// a sampled n3-dimensional subspace passes within distance `tau_over_r` of
/// a fixed unit target (the first coordinate axis, which is also where a
/// κ-bounded adversary's cone should point to stress the bound).
pub fn mc_single_opposite_success(
    n2: usize,
    n3: usize,
    tau_over_r: f64,
    adversary: &SubspaceDistribution,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n3 == 0 || n3 >= n2 {
        return Err(Error::Dimension(format!("need 1 <= n3 < n2, got n3={n3}, n2={n2}")));
    }
    let mut target = vec![0.0; n2];
    target[0] = 1.0;
    let chunks = trials.div_ceil(CHUNK);
    let successes: Result<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(trials);
            let mut hits = 0u64;
            for t in lo..hi {
                let s = adversary.sample(n2, n3, derive_seed(seed, t))?;
                if s.residual_norm(&target) < tau_over_r {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    Ok(McEstimate::from_counts(successes?.iter().sum(), trials))
}

/// Per-trial scalars of the toy geometry: the nearest same-class training
/// distance of a fresh test point (abstention flips at τ = that distance)
/// and the critical threshold of the sampled adversary direction (success
/// flips at τ = that value, +inf when a directed ray points away).
///
/// Exactness of the reduction to the nearest opposite point requires the
/// well-separated regime r > 2(D + τ_max); the callers enforce it.
struct ToyTrial {
    nn_dist: f64,
    tau_crit: f64,
}

fn toy_trial(geom: &ToyGeometry, directed: bool, rng: &mut impl Rng) -> ToyTrial {
    let d = geom.segment_length;
    let r = geom.gap;
    let m = geom.per_class_count;
    let x = rng.gen::<f64>() * d;
    let mut nn = f64::INFINITY;
    for _ in 0..m {
        let a = rng.gen::<f64>() * d;
        nn = nn.min((a - x).abs());
    }
    // Nearest opposite-class point: the smallest of m uniforms on the far
    // segment, as an offset from the test point.
    let mut y_min = f64::INFINITY;
    for _ in 0..m {
        let y = d + r + rng.gen::<f64>() * d;
        y_min = y_min.min(y);
    }
    let d_opp = y_min - x;
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    let tau_crit = if directed && theta.cos() <= 0.0 {
        f64::INFINITY
    } else {
        d_opp * theta.sin().abs()
    };
    ToyTrial { nn_dist: nn, tau_crit }
}

fn check_toy_regime(geom: &ToyGeometry, tau_max: f64) -> Result<()> {
    if geom.gap <= 2.0 * (geom.segment_length + tau_max) {
        return Err(Error::Refused(format!(
            "toy MC reduction needs r > 2(D + tau); got r={}, D={}, tau={tau_max}",
            geom.gap, geom.segment_length
        )));
    }
    Ok(())
}

/// MC abstention rate of the toy geometry on a τ grid, with common random
/// numbers across the grid (each trial contributes its abstention scalar to
/// every τ).
pub fn mc_toy_abstention_grid(
    geom: &ToyGeometry,
    taus: &[f64],
    trials: u64,
    seed: u64,
) -> Vec<McEstimate> {
    let chunks = trials.div_ceil(CHUNK);
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(trials);
            let mut local = vec![0u64; taus.len()];
            for _ in lo..hi {
                let t = toy_trial(geom, false, &mut rng);
                for (slot, &tau) in local.iter_mut().zip(taus) {
                    // Abstain iff the nearest-neighbor distance is >= τ.
                    if t.nn_dist >= tau {
                        *slot += 1;
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; taus.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    counts
        .into_iter()
        .map(|c| McEstimate::from_counts(c, trials))
        .collect()
}

/// MC robust accuracy of the toy geometry at a single τ under the given ray
/// convention.
pub fn mc_toy_robust_accuracy(
    geom: &ToyGeometry,
    tau: f64,
    convention: crate::bounds::RayConvention,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_toy_regime(geom, tau)?;
    let directed = matches!(convention, crate::bounds::RayConvention::DirectedRay);
    let est = mc_binomial(trials, seed, move |rng| {
        let t = toy_trial(geom, directed, rng);
        t.tau_crit >= tau // adversary fails; accuracy counts failures
    });
    Ok(est)
}

/// MC estimate of the minimization objective g(τ) = E_adv(τ) + c·D_nat(τ)
/// on a τ grid with common random numbers (the full-line/directed choice
/// follows `convention`).
pub fn mc_toy_objective_grid(
    geom: &ToyGeometry,
    taus: &[f64],
    convention: crate::bounds::RayConvention,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let tau_max = taus.iter().copied().fold(0.0f64, f64::max);
    check_toy_regime(geom, tau_max)?;
    let directed = matches!(convention, crate::bounds::RayConvention::DirectedRay);
    let chunks = trials.div_ceil(CHUNK);
    let counts: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(trials);
            let mut local = vec![(0u64, 0u64); taus.len()];
            for _ in lo..hi {
                let t = toy_trial(geom, directed, &mut rng);
                for (slot, &tau) in local.iter_mut().zip(taus) {
                    if tau > t.tau_crit {
                        slot.0 += 1; // adversary success
                    }
                    if t.nn_dist >= tau {
                        slot.1 += 1; // abstention
                    }
                }
            }
            local
        })
        .reduce(
            || vec![(0u64, 0u64); taus.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
                a
            },
        );
    let n = trials as f64;
    Ok(counts
        .into_iter()
        .map(|(e, d)| e as f64 / n + geom.tradeoff * d as f64 / n)
        .collect())
}

/// Builds an equal-weight mixture of `num_balls` uniform balls of radius
/// tau/2, draws `m_train` training points and `fresh` test points from it,
/// and returns the fraction of fresh points whose nearest training point is
/// at distance >= tau (the abstention rate of the coverage experiment).
pub fn mc_coverage_abstention(
    n2: usize,
    num_balls: usize,
    tau: f64,
    m_train: usize,
    fresh: usize,
    seed: u64,
) -> Result<f64> {
    if n2 == 0 || num_balls == 0 || m_train == 0 || fresh == 0 || !(tau > 0.0) {
        return Err(Error::Config("coverage experiment needs positive sizes and tau".into()));
    }
    // Ball centers spaced 10·tau apart along a diagonal lattice direction.
    let centers: Vec<Vec<f64>> = (0..num_balls)
        .map(|k| {
            let mut c = vec![0.0; n2];
            c[0] = 10.0 * tau * k as f64;
            c[k % n2] += 2.0 * tau * (k as f64).sqrt();
            c
        })
        .collect();
    let radius = tau / 2.0;
    let mut rng = stream_rng(seed, 0);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let k = rng.gen_range(0..num_balls);
        let dir = sample_unit_vector(n2, rng);
        let rad = radius * rng.gen::<f64>().powf(1.0 / n2 as f64);
        centers[k].iter().zip(&dir).map(|(c, d)| c + rad * d).collect()
    };
    let train: Vec<Vec<f64>> = (0..m_train).map(|_| draw(&mut rng)).collect();
    let mut abstained = 0usize;
    for _ in 0..fresh {
        let x = draw(&mut rng);
        let nn = train
            .iter()
            .map(|t| crate::linalg::dist(t, &x))
            .fold(f64::INFINITY, f64::min);
        if nn >= tau {
            abstained += 1;
        }
    }
    Ok(abstained as f64 / fresh as f64)
}
