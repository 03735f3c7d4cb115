//! Closed-form bound and toy-geometry calculators, plus their Monte Carlo
//! verification harness ([`mc`]).
//!
//! Every "absolute constant" left unspecified by the bound statements is an
//! explicit parameter defaulting to 1; values that depend on such constants
//! are order-of-magnitude quantities and the outputs flag the regime
//! assumptions instead of pretending to more precision.

pub mod mc;

use crate::geometry::beta_function;
use crate::piecewise::PiecewiseConstantFn;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Arguments of the robust-error bound: training size m, threshold τ,
/// separation r, dimensions, and the bound's absolute constants c > 0 and
/// c₀ ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m: usize,
    pub tau: f64,
    pub r: f64,
    pub n2: usize,
    pub n3: usize,
    pub c_const: f64,
    pub c0_const: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if !(self.tau >= 0.0) || !(self.r > 0.0) {
            return Err(Error::Config(format!(
                "need tau >= 0 and r > 0, got tau={}, r={}",
                self.tau, self.r
            )));
        }
        if self.n3 == 0 || self.n3 >= self.n2 {
            return Err(Error::Dimension(format!(
                "need 1 <= n3 < n2, got n3={}, n2={}",
                self.n3, self.n2
            )));
        }
        if !(self.c_const > 0.0) || !(self.c0_const > 0.0 && self.c0_const < 1.0) {
            return Err(Error::Config(format!(
                "need c > 0 and c0 in (0,1), got c={}, c0={}",
                self.c_const, self.c0_const
            )));
        }
        Ok(())
    }
}

/// A computed bound together with whether the statement's small-τ regime
/// assumption held for the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOutput {
    pub value: f64,
    pub regime_ok: bool,
}

/// Robust-error bound `m (cτ / (r √(1−n3/n2)))^{n2−n3} + m c₀^{n2−n3}`,
/// computed in log space. The regime flag reports τ < r √(1−n3/n2) (the
/// statement assumes τ is small relative to that scale).
pub fn thm2_bound(b: &BoundInputs) -> Result<BoundOutput> {
    b.validate()?;
    let exp = (b.n2 - b.n3) as f64;
    let scale = b.r * (1.0 - b.n3 as f64 / b.n2 as f64).sqrt();
    let ln_m = (b.m as f64).ln();
    let first = if b.tau == 0.0 {
        0.0
    } else {
        (ln_m + exp * (b.c_const * b.tau / scale).ln()).exp()
    };
    let second = (ln_m + exp * b.c0_const.ln()).exp();
    Ok(BoundOutput {
        value: first + second,
        regime_ok: b.tau < scale,
    })
}

/// Sphere-cap-based bound `(m/(n2−n3)) (τ/r)^{n2−n3} / B(n3/2, (n2−n3)/2)`
/// with the suppressed constants set to 1. Flags τ >= r as out of regime.
pub fn improved_bound(m: usize, tau: f64, r: f64, n2: usize, n3: usize) -> Result<BoundOutput> {
    if n3 == 0 || n3 >= n2 {
        return Err(Error::Dimension(format!("need 1 <= n3 < n2, got n3={n3}, n2={n2}")));
    }
    if !(tau >= 0.0) || !(r > 0.0) {
        return Err(Error::Config(format!("need tau >= 0 and r > 0, got {tau}, {r}")));
    }
    let k = (n2 - n3) as f64;
    let beta = beta_function(n3 as f64 / 2.0, k / 2.0)?;
    let value = if tau == 0.0 {
        0.0
    } else {
        ((m as f64 / k).ln() + k * (tau / r).ln() - beta.ln()).exp()
    };
    Ok(BoundOutput {
        value,
        regime_ok: tau < r,
    })
}

/// Exact abstention rate of the toy two-segment geometry:
/// `(1/(m+1)) [2(1−τ/D)^{m+1} + (m−1)·1{τ≤D/2}·(1−2τ/D)^{m+1}]` for τ ≤ D,
/// zero beyond D.
pub fn toy_abstention(tau: f64, segment_length: f64, m: usize) -> f64 {
    let d = segment_length;
    if tau > d {
        return 0.0;
    }
    let mf = m as f64;
    let mut v = 2.0 * (1.0 - tau / d).powi(m as i32 + 1);
    if tau <= d / 2.0 {
        v += (mf - 1.0) * (1.0 - 2.0 * tau / d).powi(m as i32 + 1);
    }
    v / (mf + 1.0)
}

/// Sign convention of the one-dimensional adversary in the toy geometry: the
/// closed form 1/π · arcsin corresponds to a directed ray, while a full line
/// (both signs of the perturbation) doubles the success odds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayConvention {
    DirectedRay,
    FullLine,
}

/// Leading-order robust accuracy of the toy geometry for τ ≤ D:
/// `1 − k·(τ/(πr))·(1 − d̄/r)` with `d̄ = D(m+3)/(2(m+1))` the mean excess
/// distance to the nearest opposite-class point, and k = 1 (directed ray)
/// or 2 (full line). The cubic (τ/r)³ term is omitted.
pub fn toy_robust_accuracy(
    tau: f64,
    segment_length: f64,
    gap: f64,
    m: usize,
    convention: RayConvention,
) -> Result<f64> {
    if tau > segment_length {
        return Err(Error::Config(format!(
            "toy accuracy closed form needs tau <= D, got tau={tau}, D={segment_length}"
        )));
    }
    if !(gap > 0.0 && segment_length > 0.0 && tau >= 0.0) {
        return Err(Error::Config("need D, r > 0 and tau >= 0".into()));
    }
    let mf = m as f64;
    let dbar = segment_length * (mf + 3.0) / (2.0 * (mf + 1.0));
    let k = match convention {
        RayConvention::DirectedRay => 1.0,
        RayConvention::FullLine => 2.0,
    };
    Ok(1.0 - k * tau / (std::f64::consts::PI * gap) * (1.0 - dbar / gap))
}

/// Optimal toy threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyOptimalTau {
    pub tau_star: f64,
    /// τ* / (D·log(πcrm/D)/m), reported against the Θ-rate (None when the
    /// optimum is at zero).
    pub theta_ratio: Option<f64>,
}

/// Unique maximizer of the leading-order toy objective
/// g(τ) = A_adv(τ) − c·D_nat(τ) on [0, D/2): zero when πcr/D ≤ 1/m,
/// otherwise the root of g′ found by bisection to 1e-10·D.
///
/// A bracket failure means the parameters violate the statement's
/// asymptotic regime (m must exceed log(2πcr/D)).
pub fn toy_optimal_tau(segment_length: f64, gap: f64, m: usize, tradeoff: f64) -> Result<ToyOptimalTau> {
    let d = segment_length;
    let r = gap;
    let c = tradeoff;
    if !(d > 0.0 && r > 0.0 && c > 0.0) || m == 0 {
        return Err(Error::Config(format!(
            "need D, r, c > 0 and m >= 1, got D={d}, r={r}, c={c}, m={m}"
        )));
    }
    let mf = m as f64;
    let pi = std::f64::consts::PI;
    if pi * c * r / d <= 1.0 / mf {
        return Ok(ToyOptimalTau {
            tau_star: 0.0,
            theta_ratio: None,
        });
    }
    // Derivative of the implemented leading-order objective: accuracy slope
    // −(1/(πr))(1 − d̄/r) against the abstention slope (2c/D)[(1−τ/D)^m +
    // (m−1)(1−2τ/D)^m].
    let dbar = d * (mf + 3.0) / (2.0 * (mf + 1.0));
    let acc_slope = (1.0 - dbar / r) / (pi * r);
    let gprime = |tau: f64| -> f64 {
        let mut s = (1.0 - tau / d).powi(m as i32);
        if tau <= d / 2.0 {
            s += (mf - 1.0) * (1.0 - 2.0 * tau / d).powi(m as i32);
        }
        -acc_slope + 2.0 * c / d * s
    };
    let (mut lo, mut hi) = (0.0, d / 2.0);
    if !(gprime(lo) > 0.0 && gprime(hi) < 0.0) {
        return Err(Error::Bracket(format!(
            "g'(0)={:.3e}, g'(D/2)={:.3e}: parameters outside the theorem's regime (need m > log(2πcr/D) ≈ {:.2})",
            gprime(lo),
            gprime(hi),
            (2.0 * pi * c * r / d).ln()
        )));
    }
    while hi - lo > 1e-10 * d {
        let mid = 0.5 * (lo + hi);
        if gprime(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_star = 0.5 * (lo + hi);
    let theta_scale = d * (pi * c * r * mf / d).ln() / mf;
    Ok(ToyOptimalTau {
        tau_star,
        theta_ratio: Some(tau_star / theta_scale),
    })
}

/// Lipschitz-constant bound `m^{(n3+1)/n2} / r^{n2−n3}` on the robust-error
/// curve in its small-τ regime (constants set to 1).
pub fn lipschitz_bound_eadv(m: usize, r: f64, n2: usize, n3: usize) -> Result<f64> {
    if n3 == 0 || n3 >= n2 {
        return Err(Error::Dimension(format!("need 1 <= n3 < n2, got n3={n3}, n2={n2}")));
    }
    if !(r > 0.0) {
        return Err(Error::Config(format!("need r > 0, got {r}")));
    }
    Ok((m as f64).powf((n3 as f64 + 1.0) / n2 as f64) / r.powi((n2 - n3) as i32))
}

/// Expected abstention-curve discontinuities in a τ-window of width w:
/// `κ · m^{1/n2} · |T| · w` (constants set to 1).
pub fn discontinuity_rate_bound(kappa: f64, m: usize, n2: usize, test_size: usize, w: f64) -> Result<f64> {
    if !(w >= 0.0) || !(kappa >= 1.0) {
        return Err(Error::Config(format!("need w >= 0 and kappa >= 1, got w={w}, kappa={kappa}")));
    }
    Ok(kappa * (m as f64).powf(1.0 / n2 as f64) * test_size as f64 * w)
}

/// Sample-size bound `ceil((n2·N/β) · log(n2·N/β))` for covering N balls
/// with probability mass β/N each (Ω-constant set to 1).
pub fn coverage_sample_bound(n2: usize, num_balls: usize, beta: f64) -> Result<usize> {
    if num_balls < 1 {
        return Err(Error::Config("need N >= 1".into()));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!("need beta in (0,1), got {beta}")));
    }
    let x = n2 as f64 * num_balls as f64 / beta;
    Ok((x * x.ln()).ceil() as usize)
}

/// Largest finite-difference slope |f(t+w) − f(t)| / w of a curve over a
/// uniform grid of window starts (the empirical side of the Lipschitz
/// check).
pub fn max_finite_difference_slope(curve: &PiecewiseConstantFn, window: f64, grid: usize) -> f64 {
    let (lo, hi) = curve.domain();
    let mut worst = 0.0f64;
    for i in 0..grid {
        let t = lo + (hi - lo - window) * i as f64 / grid.max(2) as f64;
        let slope = (curve.eval(t + window) - curve.eval(t)).abs() / window;
        worst = worst.max(slope);
    }
    worst
}

/// Largest number of curve breakpoints falling in any of `windows` random
/// width-w windows (the empirical side of the dispersion check).
pub fn max_breakpoints_in_windows(
    curve: &PiecewiseConstantFn,
    w: f64,
    windows: usize,
    seed: u64,
) -> usize {
    use rand::Rng;
    let (lo, hi) = curve.domain();
    let mut rng = crate::rng::root_rng(seed);
    let mut worst = 0usize;
    for _ in 0..windows {
        let start = lo + rng.gen::<f64>() * (hi - lo - w).max(0.0);
        let count = curve
            .breakpoints()
            .iter()
            .filter(|b| **b >= start && **b < start + w)
            .count();
        worst = worst.max(count);
    }
    worst
}
