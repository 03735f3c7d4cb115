//! Adversaries under the random-subspace threat model.
//!
//! The exact attack decides, for a fixed test point and subspace, whether any
//! point of the affine subspace is misclassified without abstention at
//! threshold τ: for every differing-label training point it considers its
//! projection onto the subspace and, when that projection is blocked by a
//! same-label point, the constrained projection onto the polytope of points
//! closer to the target than to every same-label point. The approximate
//! attack only probes training-feature projections (sound, not complete).
//! `critical_threshold` extracts the smallest τ at which the exact attack
//! succeeds, which is also the breakpoint of the per-pair robust-error step.

mod oracle;
mod qp;

pub use oracle::{brute_force_attack_oracle, OracleReport};
pub use qp::{solve_constrained_projection, Halfspace, Projection, QpSettings};

use crate::classifier::{predict_linear, predict_with_tau, LinearModel, Outcome, RobustModel};
use crate::linalg::{dist, norm, sub};
use crate::geometry::Subspace;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Either an adversarial feature point with witness data, or a certificate
/// that no adversarial example exists for this (point, subspace, τ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackResult {
    Success {
        adv_point: Vec<f64>,
        /// Index into the model's training set of the feature the adversary
        /// moved toward.
        target_index: usize,
        distance_to_target: f64,
    },
    NoAdversarialExample,
}

impl AttackResult {
    pub fn is_success(&self) -> bool {
        matches!(self, AttackResult::Success { .. })
    }
}

fn check_dims(model: &RobustModel, x: &[f64], s: &Subspace) -> Result<()> {
    if x.len() != model.train().dim() || s.ambient_dim() != x.len() {
        return Err(Error::Dimension(format!(
            "test point of length {}, training dimension {}, subspace ambient {}",
            x.len(),
            model.train().dim(),
            s.ambient_dim()
        )));
    }
    Ok(())
}

/// Candidate adversarial perturbation for differing-label training index `i`
/// (in centered coordinates), or `None` when the constrained region misses
/// the subspace.
fn candidate_for(
    centered: &[Vec<f64>],
    same_label: &[usize],
    i: usize,
    s: &Subspace,
    settings: &QpSettings,
) -> Result<Option<(Vec<f64>, f64)>> {
    let target = &centered[i];
    let u = s.project(target);
    let d_u = dist(&u, target);
    let blocked = same_label
        .iter()
        .any(|&j| dist(&u, &centered[j]) < d_u);
    if !blocked {
        return Ok(Some((u, d_u)));
    }
    let mut constraints = Vec::with_capacity(same_label.len());
    for &j in same_label {
        if centered[j] == *target {
            continue; // coincident pair constrains nothing
        }
        constraints.push(Halfspace::closer_to_first(target, &centered[j])?);
    }
    let origin = vec![0.0; s.ambient_dim()];
    match solve_constrained_projection(target, &constraints, &origin, s, settings)? {
        Projection::Infeasible => Ok(None),
        Projection::Feasible(z) => {
            let d = dist(&z, target);
            Ok(Some((z, d)))
        }
    }
}

/// The constrained minimizer often lies exactly on a bisector between the
/// target and a same-label blocker, where the classifier's lowest-index tie
/// rule can favor the blocker. Interior points of the feasible region within
/// any τ > distance exist by continuity; this steps off the active
/// boundaries (inward along the mean active normal, projected back into the
/// subspace) to produce one.
fn nudge_into_interior(
    z: &[f64],
    target: &[f64],
    constraints: &[Halfspace],
    s: &Subspace,
    tau: f64,
    d: f64,
) -> Vec<(Vec<f64>, f64)> {
    let mut inward = vec![0.0; z.len()];
    let mut active = 0usize;
    for h in constraints {
        let nn = norm(&h.normal);
        if nn == 0.0 {
            continue;
        }
        let slack = h.offset - crate::linalg::dot(&h.normal, z);
        if slack.abs() <= 1e-6 * (nn * (1.0 + norm(z)) + h.offset.abs()) {
            for (iv, c) in inward.iter_mut().zip(&h.normal) {
                *iv -= c / nn;
            }
            active += 1;
        }
    }
    if active == 0 {
        return Vec::new();
    }
    let dir = s.project(&inward);
    let dn = norm(&dir);
    if dn <= 1e-12 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for frac in [1e-9, 1e-7, 1e-5, 1e-3] {
        let step = (frac * (1.0 + d)).min(0.5 * (tau - d));
        if !(step > 0.0) {
            continue;
        }
        let z2: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + step * b / dn).collect();
        let d2 = dist(&z2, target);
        if d2 < tau {
            out.push((z2, d2));
        }
    }
    out
}

/// Exact attack: returns the first candidate (in training-index order) that
/// is strictly within τ of its target and re-verifies through the classifier
/// as a wrong, non-abstaining label. Complete up to solver tolerance: a
/// `NoAdversarialExample` certifies that no point of the affine subspace is
/// misclassified at threshold τ.
pub fn exact_attack(
    model: &RobustModel,
    x: &[f64],
    y_true: u32,
    s: &Subspace,
    tau: f64,
    settings: &QpSettings,
) -> Result<AttackResult> {
    check_dims(model, x, s)?;
    let train = model.train();
    let centered: Vec<Vec<f64>> = train.features().iter().map(|f| sub(f, x)).collect();
    let same_label: Vec<usize> = (0..train.len())
        .filter(|&j| train.label(j) == y_true)
        .collect();
    for i in 0..train.len() {
        if train.label(i) == y_true {
            continue;
        }
        let Some((z, d)) = candidate_for(&centered, &same_label, i, s, settings)? else {
            continue;
        };
        if d < tau {
            let verify = |zc: &[f64]| -> Option<Vec<f64>> {
                let adv: Vec<f64> = x.iter().zip(zc).map(|(a, b)| a + b).collect();
                predict_with_tau(model, &adv, tau)
                    .is_wrong_label(y_true)
                    .then_some(adv)
            };
            // Re-verification guards against solver-tolerance leaks at the
            // decision boundary.
            if let Some(adv) = verify(&z) {
                return Ok(AttackResult::Success {
                    adv_point: adv,
                    target_index: i,
                    distance_to_target: d,
                });
            }
            // A tie with a lower-index same-label point: step strictly
            // inside the feasible region and try again before demoting.
            let mut constraints = Vec::with_capacity(same_label.len());
            for &j in &same_label {
                if centered[j] != centered[i] {
                    constraints.push(Halfspace::closer_to_first(&centered[i], &centered[j])?);
                }
            }
            for (z2, d2) in nudge_into_interior(&z, &centered[i], &constraints, s, tau, d) {
                if let Some(adv) = verify(&z2) {
                    return Ok(AttackResult::Success {
                        adv_point: adv,
                        target_index: i,
                        distance_to_target: d2,
                    });
                }
            }
        }
    }
    Ok(AttackResult::NoAdversarialExample)
}

/// The minimal distance over all candidates, i.e. the threshold τ_crit such
/// that the exact attack succeeds at τ iff τ > τ_crit. Returns +inf when
/// every candidate region misses the subspace.
pub fn critical_threshold(
    model: &RobustModel,
    x: &[f64],
    y_true: u32,
    s: &Subspace,
    settings: &QpSettings,
) -> Result<f64> {
    check_dims(model, x, s)?;
    let train = model.train();
    let centered: Vec<Vec<f64>> = train.features().iter().map(|f| sub(f, x)).collect();
    let same_label: Vec<usize> = (0..train.len())
        .filter(|&j| train.label(j) == y_true)
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..train.len() {
        if train.label(i) == y_true {
            continue;
        }
        if let Some((_, d)) = candidate_for(&centered, &same_label, i, s, settings)? {
            best = best.min(d);
        }
    }
    Ok(best)
}

/// Approximate attack: probes the projections of all training features onto
/// the subspace in index order and returns the first that the thresholded-NN
/// rule misclassifies. Sound (every success re-verifies) but not complete.
pub fn approx_attack(
    model: &RobustModel,
    x: &[f64],
    y_true: u32,
    s: &Subspace,
    tau: f64,
) -> Result<AttackResult> {
    check_dims(model, x, s)?;
    let train = model.train();
    let centered: Vec<Vec<f64>> = train.features().iter().map(|f| sub(f, x)).collect();
    for c in &centered {
        let p = s.project(c);
        let mut nn = (0usize, f64::INFINITY);
        for (j, cj) in centered.iter().enumerate() {
            let d = dist(&p, cj);
            if d < nn.1 {
                nn = (j, d);
            }
        }
        if train.label(nn.0) != y_true && nn.1 < tau {
            let adv: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
            if predict_with_tau(model, &adv, tau).is_wrong_label(y_true) {
                return Ok(AttackResult::Success {
                    adv_point: adv,
                    target_index: nn.0,
                    distance_to_target: nn.1,
                });
            }
        }
    }
    Ok(AttackResult::NoAdversarialExample)
}

/// Geometric magnitude grid ±{base · growth^j, j = 0..=steps} for the line
/// attack; spans 1e-3 up to ~3.7e7 by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeGrid {
    pub base: f64,
    pub growth: f64,
    pub steps: usize,
}

impl Default for MagnitudeGrid {
    fn default() -> Self {
        Self {
            base: 1e-3,
            growth: 1.5,
            steps: 60,
        }
    }
}

/// Witnessed outcome of a line scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineAttackResult {
    pub success: bool,
    pub witness: Option<Vec<f64>>,
}

/// Scans signed magnitudes along a fixed unit direction against an opaque
/// classifier; succeeds if any scanned point receives a non-abstaining label
/// different from `y_true`.
pub fn line_attack(
    classify: &dyn Fn(&[f64]) -> Outcome,
    x: &[f64],
    y_true: u32,
    direction: &[f64],
    grid: &MagnitudeGrid,
) -> Result<LineAttackResult> {
    if (norm(direction) - 1.0).abs() > 1e-8 {
        return Err(Error::Config("line attack direction must be unit-norm".into()));
    }
    if direction.len() != x.len() {
        return Err(Error::Dimension("direction/point length mismatch".into()));
    }
    let mut magnitude = grid.base;
    for _ in 0..=grid.steps {
        for sign in [1.0, -1.0] {
            let p: Vec<f64> = x
                .iter()
                .zip(direction)
                .map(|(xi, di)| xi + sign * magnitude * di)
                .collect();
            if classify(&p).is_wrong_label(y_true) {
                return Ok(LineAttackResult {
                    success: true,
                    witness: Some(p),
                });
            }
        }
        magnitude *= grid.growth;
    }
    Ok(LineAttackResult {
        success: false,
        witness: None,
    })
}

/// Exact attack decision against a linear model: an unbounded move along any
/// subspace direction with a nonzero projection of (w_k − w_y) flips the
/// argmax, so success is a pure geometry test with no search.
pub fn attack_linear_exact(model: &LinearModel, x: &[f64], y_true: u32, s: &Subspace) -> bool {
    if predict_linear(model, x) != y_true {
        return true;
    }
    let Some(yi) = model.classes.iter().position(|&k| k == y_true) else {
        return true;
    };
    for (k, w) in model.weights.iter().enumerate() {
        if k == yi {
            continue;
        }
        let dw: Vec<f64> = w.iter().zip(&model.weights[yi]).map(|(a, b)| a - b).collect();
        let dw_norm = norm(&dw);
        if dw_norm == 0.0 {
            continue; // identical weights can never overtake
        }
        let proj = s.coords(&dw);
        if norm(&proj) > 1e-12 * dw_norm {
            return true;
        }
    }
    false
}
