//! Natural error, abstention rate, Monte Carlo robust error, and exact
//! piecewise-constant curves of all three as functions of τ.

pub use crate::piecewise::PiecewiseConstantFn;

use crate::attack::{critical_threshold, exact_attack, QpSettings};
use crate::classifier::{predict, RobustModel};
use crate::data::{nearest_neighbor, LabeledDataset};
use crate::geometry::{Subspace, SubspaceDistribution};
use crate::rng::derive_seed;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fraction of test points that receive a non-abstaining wrong label.
/// Abstentions are not errors.
pub fn natural_error(model: &RobustModel, test: &LabeledDataset) -> Result<f64> {
    check_test(model, test)?;
    let wrong = (0..test.len())
        .filter(|&i| predict(model, test.feature(i)).is_wrong_label(test.label(i)))
        .count();
    Ok(wrong as f64 * (1.0 / test.len() as f64))
}

/// Fraction of test points on which the classifier abstains.
pub fn abstention_rate(model: &RobustModel, test: &LabeledDataset) -> Result<f64> {
    check_test(model, test)?;
    let abstained = (0..test.len())
        .filter(|&i| predict(model, test.feature(i)).is_abstain())
        .count();
    Ok(abstained as f64 * (1.0 / test.len() as f64))
}

fn check_test(model: &RobustModel, test: &LabeledDataset) -> Result<()> {
    if test.dim() != model.train().dim() {
        return Err(Error::Dimension(format!(
            "test dimension {} does not match training dimension {}",
            test.dim(),
            model.train().dim()
        )));
    }
    Ok(())
}

/// Robust-error evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub e_nat: f64,
    pub d_nat: f64,
    pub e_adv_mean: f64,
    pub e_adv_ci95: f64,
    pub subspace_trials: usize,
    pub seed: u64,
    /// Exact-attack solver failures; excluded from the mean when below 0.1%
    /// of all (point, subspace) pairs, otherwise the run fails.
    pub nonconverged: usize,
    /// Raw counts behind `e_adv_mean`, for exact interval computations.
    pub successes: usize,
    pub evaluated_pairs: usize,
}

/// Monte Carlo robust error: for every test point and each of `trials`
/// independently sampled subspaces, runs the exact attack at the model's τ.
/// Each (point, trial) pair draws its subspace from a seed derived from
/// `(seed, pair index)`, so the report is identical for any worker count.
pub fn robust_error_mc(
    model: &RobustModel,
    test: &LabeledDataset,
    n3: usize,
    trials: usize,
    seed: u64,
    adversary: &SubspaceDistribution,
    settings: &QpSettings,
) -> Result<MetricsReport> {
    check_test(model, test)?;
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let tau = model.tau();
    let total = test.len() * trials;
    let outcomes: Vec<Result<bool>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let point = k / trials;
            let s = adversary.sample(test.dim(), n3, derive_seed(seed, k as u64))?;
            match exact_attack(model, test.feature(point), test.label(point), &s, tau, settings) {
                Ok(r) => Ok(r.is_success()),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut successes = 0usize;
    let mut nonconverged = 0usize;
    for o in outcomes {
        match o {
            Ok(true) => successes += 1,
            Ok(false) => {}
            Err(Error::NonConverged { .. }) => nonconverged += 1,
            Err(e) => return Err(e),
        }
    }
    if (nonconverged as f64) >= 0.001 * total as f64 && nonconverged > 0 {
        return Err(Error::NonConverged {
            iterations: nonconverged,
            violation: f64::NAN,
            gap: f64::NAN,
            best_point: Vec::new(),
        });
    }
    let n = total - nonconverged;
    let p = successes as f64 / n as f64;
    Ok(MetricsReport {
        e_nat: natural_error(model, test)?,
        d_nat: abstention_rate(model, test)?,
        e_adv_mean: p,
        e_adv_ci95: 1.96 * (p * (1.0 - p) / n as f64).sqrt(),
        subspace_trials: trials,
        seed,
        nonconverged,
        successes,
        evaluated_pairs: n,
    })
}

/// Regularized incomplete beta I_x(a, b), by quadrature of the log-space
/// density (exact enough for confidence limits; a, b >= 1).
fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_b = crate::geometry::beta_function(a, b).map(f64::ln).unwrap_or(0.0);
    let f = move |t: f64| -> f64 {
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - ln_b).exp()
        }
    };
    crate::geometry::quadrature(&f, 0.0, x, 1e-12).min(1.0)
}

fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_cdf(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact Clopper–Pearson interval for a binomial proportion at confidence
/// 1 − alpha (the spec's exact-CI option for tiny sample counts).
pub fn clopper_pearson_ci(successes: u64, trials: u64, alpha: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::Config(format!(
            "invalid counts: {successes} successes out of {trials}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0,1), got {alpha}")));
    }
    let (s, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, s, n - s + 1.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, s + 1.0, n - s)
    };
    Ok((lo, hi))
}

/// Robust error on a FIXED list of subspaces at the model's τ (the direct
/// evaluator that curve evaluation must reproduce).
pub fn fixed_subspace_robust_error(
    model: &RobustModel,
    test: &LabeledDataset,
    subspaces: &[Subspace],
    settings: &QpSettings,
) -> Result<f64> {
    check_test(model, test)?;
    if subspaces.is_empty() {
        return Ok(0.0);
    }
    let tau = model.tau();
    let mut successes = 0usize;
    for i in 0..test.len() {
        for s in subspaces {
            if exact_attack(model, test.feature(i), test.label(i), s, tau, settings)?.is_success()
            {
                successes += 1;
            }
        }
    }
    Ok(successes as f64 * (1.0 / (test.len() * subspaces.len()) as f64))
}

/// The three trade-off curves over τ on a common domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub e_adv: PiecewiseConstantFn,
    pub d_nat: PiecewiseConstantFn,
    /// g(τ) = E_adv(τ) + c · D_nat(τ).
    pub g: PiecewiseConstantFn,
    pub tradeoff: f64,
}

impl CurveSet {
    /// The maximization form A_adv − c·D_nat = 1 − g of the same trial set.
    pub fn objective_max_form(&self) -> PiecewiseConstantFn {
        self.g.affine(-1.0, 1.0)
    }
}

/// Exact curves of E_adv, D_nat and g over τ ∈ [0, hi] for a fixed subspace
/// list: D_nat steps down at the nearest-neighbor distance of each test
/// point, E_adv steps up at the critical threshold of each (point, subspace)
/// pair.
///
/// `hi` defaults to 1.05 × the largest finite breakpoint (at least 1).
pub fn curves_vs_tau(
    train: &LabeledDataset,
    sigma: f64,
    test: &LabeledDataset,
    subspaces: &[Subspace],
    tradeoff: f64,
    settings: &QpSettings,
    hi: Option<f64>,
) -> Result<CurveSet> {
    let model = RobustModel::fit(
        train,
        crate::classifier::ClassifierConfig::new(f64::INFINITY, sigma)?,
    )?;
    curves_for_model(&model, test, subspaces, tradeoff, settings, hi)
}

/// [`curves_vs_tau`] for an already-preprocessed model.
pub fn curves_for_model(
    model: &RobustModel,
    test: &LabeledDataset,
    subspaces: &[Subspace],
    tradeoff: f64,
    settings: &QpSettings,
    hi: Option<f64>,
) -> Result<CurveSet> {
    check_test(model, test)?;
    if !(tradeoff >= 0.0) {
        return Err(Error::Config(format!("tradeoff c must be >= 0, got {tradeoff}")));
    }
    let nn_dists: Vec<f64> = (0..test.len())
        .map(|i| nearest_neighbor(model.train(), test.feature(i)).1)
        .collect();
    let mut crits: Vec<f64> = Vec::with_capacity(test.len() * subspaces.len());
    for i in 0..test.len() {
        for s in subspaces {
            crits.push(critical_threshold(
                model,
                test.feature(i),
                test.label(i),
                s,
                settings,
            )?);
        }
    }
    let hi = match hi {
        Some(h) => {
            if !(h > 0.0) {
                return Err(Error::Config(format!("curve domain end must be > 0, got {h}")));
            }
            h
        }
        None => {
            let largest = nn_dists
                .iter()
                .chain(crits.iter())
                .copied()
                .filter(|v| v.is_finite())
                .fold(0.0f64, f64::max);
            (1.05 * largest).max(1.0)
        }
    };
    // Counts first, normalization by affine scaling afterwards, so piece
    // values are exact integer multiples of 1/N.
    let d_deltas: Vec<(f64, f64)> = nn_dists.iter().map(|&d| (d, -1.0)).collect();
    let d_nat = PiecewiseConstantFn::from_deltas(0.0, hi, test.len() as f64, &d_deltas)?
        .affine(1.0 / test.len() as f64, 0.0);
    let e_adv = if subspaces.is_empty() {
        PiecewiseConstantFn::constant(0.0, hi, 0.0)?
    } else {
        let e_deltas: Vec<(f64, f64)> = crits.iter().map(|&t| (t, 1.0)).collect();
        PiecewiseConstantFn::from_deltas(0.0, hi, 0.0, &e_deltas)?
            .affine(1.0 / (test.len() * subspaces.len()) as f64, 0.0)
    };
    for w in e_adv.values().windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "E_adv must be nondecreasing");
    }
    for w in d_nat.values().windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "D_nat must be nonincreasing");
    }
    for v in e_adv.values().iter().chain(d_nat.values()) {
        assert!((-1e-12..=1.0 + 1e-12).contains(v), "curve value {v} outside [0, 1]");
    }
    let g = e_adv.add(&d_nat.affine(tradeoff, 0.0))?;
    Ok(CurveSet {
        e_adv,
        d_nat,
        g,
        tradeoff,
    })
}
