//! Data-driven threshold selection.
//!
//! A continuous exponential forecaster maintains a density over candidate
//! thresholds proportional to exp(λ × cumulative utility). Because every
//! per-round utility is genuinely piecewise constant in τ (metrics module),
//! the weight function is represented exactly — no discretization of the
//! candidate interval exists to tune or to leak error.

use crate::classifier::{ClassifierConfig, RobustModel};
use crate::data::LabeledDataset;
use crate::geometry::sample_uniform_subspace;
use crate::linalg::dist;
use crate::metrics::{curves_for_model, curves_vs_tau, PiecewiseConstantFn};
use crate::attack::QpSettings;
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Exponential-forecaster state: step size λ and the exact cumulative
/// utility Σ_{s<t} u_s as a piecewise-constant function on the candidate
/// interval. The sampling density at τ is proportional to
/// exp(λ · cumulative_utility(τ)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterState {
    lambda: f64,
    cumulative_utility: PiecewiseConstantFn,
    round: usize,
}

impl ForecasterState {
    /// Round 1 state: weights identically 1, i.e. a uniform sampling
    /// distribution on [lo, hi].
    pub fn new(lo: f64, hi: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            cumulative_utility: PiecewiseConstantFn::constant(lo, hi, 0.0)?,
            round: 1,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn domain(&self) -> (f64, f64) {
        self.cumulative_utility.domain()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn cumulative_utility(&self) -> &PiecewiseConstantFn {
        &self.cumulative_utility
    }

    /// Exact sampling: piece masses are `length × exp(λ·(value − max))`
    /// (shared max-shift, so the heaviest piece always has positive mass),
    /// a categorical draw picks the piece, a uniform draw lands inside it.
    pub fn sample(&self, seed: u64) -> f64 {
        let masses = self.cumulative_utility.exp_piece_masses(self.lambda);
        let total: f64 = masses.iter().sum();
        assert!(
            total > 0.0 && total.is_finite(),
            "piece masses degenerate despite max-shift"
        );
        let mut rng = stream_rng(seed, 0);
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = masses.len() - 1;
        for (i, m) in masses.iter().enumerate() {
            if target < *m {
                chosen = i;
                break;
            }
            target -= m;
        }
        let (start, end, _) = self
            .cumulative_utility
            .pieces()
            .nth(chosen)
            .expect("piece index in range");
        start + rng.gen::<f64>() * (end - start)
    }

    /// Multiplies the weights by exp(λ·u_t), i.e. adds u_t to the cumulative
    /// utility with exact breakpoint merging. Utilities must live on the
    /// same candidate interval and take values in [0, 1].
    pub fn update(&mut self, utility: &PiecewiseConstantFn) -> Result<()> {
        if utility.domain() != self.cumulative_utility.domain() {
            return Err(Error::Contract(format!(
                "utility domain {:?} differs from forecaster domain {:?}",
                utility.domain(),
                self.cumulative_utility.domain()
            )));
        }
        const SLACK: f64 = 1e-9;
        for v in utility.values() {
            if !(-SLACK..=1.0 + SLACK).contains(v) {
                return Err(Error::Contract(format!("utility value {v} outside [0, 1]")));
            }
        }
        self.cumulative_utility = self.cumulative_utility.add(utility)?;
        self.round += 1;
        Ok(())
    }
}

/// Theorem-style default step size √(ln((hi−lo)/w₀)/T) with
/// w₀ = (hi−lo)/1000, i.e. √(ln 1000 / T).
pub fn default_lambda(rounds: usize) -> f64 {
    (1000.0f64.ln() / rounds.max(1) as f64).sqrt()
}

/// Candidate-interval default [0, 2·max over training points of the
/// distance to their nearest training neighbor].
pub fn default_tau_domain(train: &LabeledDataset) -> (f64, f64) {
    let mut largest = 0.0f64;
    for i in 0..train.len() {
        let mut nn = f64::INFINITY;
        for j in 0..train.len() {
            if i != j {
                nn = nn.min(dist(train.feature(i), train.feature(j)));
            }
        }
        if nn.is_finite() {
            largest = largest.max(nn);
        }
    }
    (0.0, (2.0 * largest).max(1e-6))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRunConfig {
    pub n3: usize,
    pub subspaces_per_batch: usize,
    /// Defaults to [`default_lambda`] for the stream length.
    pub lambda: Option<f64>,
    /// Trade-off constant c of g = E_adv + c·D_nat.
    pub tradeoff: f64,
    pub seed: u64,
    /// Candidate interval for τ; defaults to [`default_tau_domain`].
    pub domain: Option<(f64, f64)>,
    pub qp: QpSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRunResult {
    pub tau_history: Vec<f64>,
    /// Per-round utilities u_t (already normalized into [0, 1]).
    pub utilities: Vec<PiecewiseConstantFn>,
    /// regret[t] = max_τ Σ_{s≤t} u_s(τ) − Σ_{s≤t} u_s(τ_s).
    pub regret_curve: Vec<f64>,
    pub domain: (f64, f64),
    pub lambda: f64,
    pub state: ForecasterState,
}

/// Runs the forecaster over a stream of test batches. Each round samples
/// τ_t BEFORE observing the round's utility, builds
/// u_t = 1 − (E_adv,t + c·D_nat,t)/(1+c) from exact curves on the batch with
/// freshly sampled subspaces, and tracks the exact regret against the best
/// fixed τ in hindsight.
pub fn run_online(
    train: &LabeledDataset,
    sigma: f64,
    batches: &[LabeledDataset],
    cfg: &OnlineRunConfig,
) -> Result<OnlineRunResult> {
    if batches.is_empty() {
        return Err(Error::Empty("online stream has no batches".into()));
    }
    let model = RobustModel::fit(train, ClassifierConfig::new(f64::INFINITY, sigma)?)?;
    let (lo, hi) = cfg.domain.unwrap_or_else(|| default_tau_domain(train));
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(batches.len()));
    let mut state = ForecasterState::new(lo, hi, lambda)?;
    let n2 = train.dim();
    let scale = 1.0 / (1.0 + cfg.tradeoff);
    let mut tau_history = Vec::with_capacity(batches.len());
    let mut utilities = Vec::with_capacity(batches.len());
    let mut regret_curve = Vec::with_capacity(batches.len());
    let mut played = 0.0f64;
    for (t, batch) in batches.iter().enumerate() {
        let tau_t = state.sample(derive_seed(cfg.seed, t as u64));
        let subspaces: Vec<_> = (0..cfg.subspaces_per_batch)
            .map(|j| {
                // High bit separates the subspace streams from the sampler's.
                let stream = (1u64 << 63) | (t as u64 * cfg.subspaces_per_batch as u64 + j as u64);
                sample_uniform_subspace(n2, cfg.n3, derive_seed(cfg.seed, stream))
            })
            .collect::<Result<_>>()?;
        let curves = curves_for_model(&model, batch, &subspaces, cfg.tradeoff, &cfg.qp, Some(hi))?;
        let utility = curves.g.affine(-scale, 1.0).clamp01();
        played += utility.eval(tau_t);
        state.update(&utility)?;
        regret_curve.push(state.cumulative_utility().max_value() - played);
        tau_history.push(tau_t);
        utilities.push(utility);
    }
    Ok(OnlineRunResult {
        tau_history,
        utilities,
        regret_curve,
        domain: (lo, hi),
        lambda,
        state,
    })
}

/// Online-to-batch conversion: τ̂ drawn uniformly from the played thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineToBatch {
    /// Support of the randomized threshold (the played τ's).
    pub tau_hat_support: Vec<f64>,
    /// E[g(τ̂)] = mean of g(τ_t) over the support.
    pub expected_g: f64,
    /// min over τ of g(τ) on the provided curve.
    pub optimal_g: f64,
    /// expected_g − optimal_g.
    pub gap: f64,
}

pub fn online_to_batch(tau_history: &[f64], g_curve: &PiecewiseConstantFn) -> Result<OnlineToBatch> {
    if tau_history.is_empty() {
        return Err(Error::Empty("threshold history is empty".into()));
    }
    let expected_g = tau_history.iter().map(|&t| g_curve.eval(t)).sum::<f64>()
        / tau_history.len() as f64;
    let optimal_g = g_curve.min_value();
    Ok(OnlineToBatch {
        tau_hat_support: tau_history.to_vec(),
        expected_g,
        optimal_g,
        gap: expected_g - optimal_g,
    })
}

/// One grid cell of the joint (τ, σ) search; `g` is None when σ removed the
/// whole training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub sigma: f64,
    pub tau: f64,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub tau_star: f64,
    pub sigma_star: f64,
    pub g_star: f64,
    pub table: Vec<GridCell>,
}

/// Exact g(τ, σ) on the grid, rebuilding the curves per σ (preprocessing
/// changes the training set). Ties break to the smallest σ, then smallest τ.
pub fn tune_tau_sigma_grid(
    train: &LabeledDataset,
    test: &LabeledDataset,
    subspaces: &[crate::geometry::Subspace],
    tradeoff: f64,
    tau_grid: &[f64],
    sigma_grid: &[f64],
    qp: &QpSettings,
) -> Result<GridSearchResult> {
    if tau_grid.is_empty() || sigma_grid.is_empty() {
        return Err(Error::Empty("tau/sigma grids must be nonempty".into()));
    }
    if sigma_grid.iter().any(|s| *s < 0.0) {
        return Err(Error::Config("sigma grid values must be >= 0".into()));
    }
    let hi = tau_grid.iter().copied().fold(0.0f64, f64::max) * 1.05 + 1e-9;
    let mut table = Vec::with_capacity(tau_grid.len() * sigma_grid.len());
    let mut best: Option<(f64, f64, f64)> = None; // (g, sigma, tau)
    for &sigma in sigma_grid {
        let curves = match curves_vs_tau(train, sigma, test, subspaces, tradeoff, qp, Some(hi)) {
            Ok(c) => Some(c),
            Err(Error::Empty(_)) => None,
            Err(e) => return Err(e),
        };
        for &tau in tau_grid {
            let g = curves.as_ref().map(|c| c.g.eval(tau));
            if let Some(g) = g {
                let better = match best {
                    None => true,
                    Some((bg, bs, bt)) => {
                        g < bg || (g == bg && (sigma < bs || (sigma == bs && tau < bt)))
                    }
                };
                if better {
                    best = Some((g, sigma, tau));
                }
            }
            table.push(GridCell { sigma, tau, g });
        }
    }
    let (g_star, sigma_star, tau_star) =
        best.ok_or_else(|| Error::Empty("every grid cell was invalid".into()))?;
    Ok(GridSearchResult {
        tau_star,
        sigma_star,
        g_star,
        table,
    })
}
