//! Constrained projection onto a halfspace intersection within an affine
//! subspace.
//!
//! The problem `min ‖z − target‖ over {origin + S} ∩ ⋂ {normal·z ≤ offset}`
//! reduces, in subspace coordinates `z = origin + B t`, to the least-distance
//! program `min ‖t − t₀‖² s.t. a_i·t ≤ b_i` with `t₀ = Bᵀ(target − origin)`,
//! `a_i = Bᵀ normal_i`, `b_i = offset_i − normal_i·origin`. It is solved by
//! dual coordinate ascent (Hildreth) after a phase-1 feasibility pass that
//! minimizes the squared constraint violations with an accelerated gradient
//! method; a phase-1 objective bounded away from zero certifies emptiness.

use crate::geometry::Subspace;
use crate::linalg::{dot, norm};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// The halfspace {z : normal·z <= offset}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if norm(&normal) == 0.0 {
            return Err(Error::Config("halfspace normal must be nonzero".into()));
        }
        Ok(Self { normal, offset })
    }

    /// The set of points at least as close to `x` as to `w`, linearized:
    /// ‖z − x‖ <= ‖z − w‖  ⇔  2(w − x)·z <= ‖w‖² − ‖x‖².
    pub fn closer_to_first(x: &[f64], w: &[f64]) -> Result<Self> {
        let normal: Vec<f64> = w.iter().zip(x).map(|(wi, xi)| 2.0 * (wi - xi)).collect();
        let offset = dot(w, w) - dot(x, x);
        Self::new(normal, offset)
    }
}

/// Solver tolerances and iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpSettings {
    /// Primal feasibility violation and duality-gap tolerance.
    pub tol: f64,
    /// Cap on Hildreth sweeps.
    pub max_iters: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100_000,
        }
    }
}

/// Outcome of the constrained projection.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    /// The minimizer, in ambient coordinates.
    Feasible(Vec<f64>),
    /// The halfspace intersection does not meet the affine subspace.
    Infeasible,
}

/// Reduced-coordinate constraint system.
struct Reduced {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    norms_sq: Vec<f64>,
}

enum Reduction {
    Ok(Reduced),
    /// A constraint with no subspace component excludes the whole subspace.
    Infeasible,
}

fn reduce(constraints: &[Halfspace], origin: &[f64], s: &Subspace, tol: f64) -> Reduction {
    let mut a = Vec::with_capacity(constraints.len());
    let mut b = Vec::with_capacity(constraints.len());
    let mut norms_sq = Vec::with_capacity(constraints.len());
    for h in constraints {
        let ai = s.coords(&h.normal);
        let bi = h.offset - dot(&h.normal, origin);
        let nsq = dot(&ai, &ai);
        // A normal orthogonal to the subspace constrains nothing inside it:
        // the constraint is either vacuous or excludes the subspace entirely.
        if nsq <= 1e-28 * dot(&h.normal, &h.normal).max(1.0) {
            if bi < -tol {
                return Reduction::Infeasible;
            }
            continue;
        }
        a.push(ai);
        b.push(bi);
        norms_sq.push(nsq);
    }
    Reduction::Ok(Reduced { a, b, norms_sq })
}

/// Phase 1: minimize F(t) = ½ Σ ((a_i·t − b_i)⁺)² with FISTA. Returns the
/// iterate with the smallest maximum violation.
fn phase1(red: &Reduced, t0: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = t0.len();
    let lipschitz: f64 = red.norms_sq.iter().sum::<f64>().max(1e-300);
    let max_violation = |t: &[f64]| -> f64 {
        red.a
            .iter()
            .zip(&red.b)
            .map(|(ai, bi)| dot(ai, t) - bi)
            .fold(0.0f64, f64::max)
    };
    let mut t = t0.to_vec();
    let mut y = t.clone();
    let mut theta = 1.0f64;
    let mut best = t.clone();
    let mut best_v = max_violation(&t);
    if best_v <= 0.0 {
        return (best, best_v);
    }
    for _ in 0..iters {
        let mut grad = vec![0.0; n];
        for (ai, bi) in red.a.iter().zip(&red.b) {
            let r = dot(ai, &y) - bi;
            if r > 0.0 {
                for (g, aij) in grad.iter_mut().zip(ai) {
                    *g += r * aij;
                }
            }
        }
        let t_prev = t.clone();
        for i in 0..n {
            t[i] = y[i] - grad[i] / lipschitz;
        }
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_new;
        for i in 0..n {
            y[i] = t[i] + momentum * (t[i] - t_prev[i]);
        }
        theta = theta_new;
        let v = max_violation(&t);
        if v < best_v {
            best_v = v;
            best.copy_from_slice(&t);
            if best_v <= 0.0 {
                break;
            }
        }
    }
    (best, best_v)
}

/// Hildreth dual coordinate ascent for `min ‖t − t₀‖² s.t. a·t <= b`.
/// Returns Ok(t) on convergence; Err carries the best iterate.
fn hildreth(red: &Reduced, t0: &[f64], settings: &QpSettings) -> std::result::Result<Vec<f64>, (Vec<f64>, usize, f64, f64)> {
    let p = red.a.len();
    let mut lambda = vec![0.0; p];
    let mut t = t0.to_vec();
    for sweep in 0..settings.max_iters {
        for i in 0..p {
            let r = dot(&red.a[i], &t) - red.b[i];
            let delta = (lambda[i] + r / red.norms_sq[i]).max(0.0) - lambda[i];
            if delta != 0.0 {
                lambda[i] += delta;
                for (tj, aij) in t.iter_mut().zip(&red.a[i]) {
                    *tj -= delta * aij;
                }
            }
        }
        let mut violation = 0.0f64;
        let mut gap = 0.0f64;
        for i in 0..p {
            let slack = red.b[i] - dot(&red.a[i], &t);
            violation = violation.max(-slack);
            gap += lambda[i] * slack;
        }
        if violation <= settings.tol && gap.abs() <= settings.tol {
            return Ok(t);
        }
        if sweep + 1 == settings.max_iters {
            return Err((t, sweep + 1, violation, gap));
        }
    }
    unreachable!("loop returns before exhausting");
}

/// Minimizes the distance from `target` to `{origin + S} ∩ ⋂ constraints`.
///
/// On success the returned point satisfies every constraint within
/// `settings.tol` and its objective is within `settings.tol` of optimal
/// (duality gap). `Infeasible` is returned when the phase-1 violation
/// minimum stays above `settings.tol`.
pub fn solve_constrained_projection(
    target: &[f64],
    constraints: &[Halfspace],
    origin: &[f64],
    s: &Subspace,
    settings: &QpSettings,
) -> Result<Projection> {
    let n2 = s.ambient_dim();
    if target.len() != n2 || origin.len() != n2 {
        return Err(Error::Dimension(format!(
            "target/origin dimensions {}/{} do not match ambient {n2}",
            target.len(),
            origin.len()
        )));
    }
    for h in constraints {
        if h.normal.len() != n2 {
            return Err(Error::Dimension(format!(
                "constraint normal of length {} in ambient {n2}",
                h.normal.len()
            )));
        }
    }
    if !(settings.tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let centered: Vec<f64> = target.iter().zip(origin).map(|(t, o)| t - o).collect();
    let t0 = s.coords(&centered);
    let red = match reduce(constraints, origin, s, settings.tol) {
        Reduction::Infeasible => return Ok(Projection::Infeasible),
        Reduction::Ok(r) => r,
    };
    let to_ambient = |t: &[f64]| -> Vec<f64> {
        let mut z = s.point_at(t);
        for (zi, oi) in z.iter_mut().zip(origin) {
            *zi += oi;
        }
        z
    };
    if red.a.is_empty() {
        return Ok(Projection::Feasible(to_ambient(&t0)));
    }
    if s.subspace_dim() == 1 {
        // Closed form on a line: the constraints cut an interval.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (ai, bi) in red.a.iter().zip(&red.b) {
            let bound = bi / ai[0];
            if ai[0] > 0.0 {
                hi = hi.min(bound);
            } else {
                lo = lo.max(bound);
            }
        }
        if lo > hi {
            return Ok(Projection::Infeasible);
        }
        return Ok(Projection::Feasible(to_ambient(&[t0[0].clamp(lo, hi)])));
    }
    let (feas_point, min_violation) = phase1(&red, &t0, 20_000);
    if min_violation > settings.tol {
        return Ok(Projection::Infeasible);
    }
    let _ = feas_point;
    match hildreth(&red, &t0, settings) {
        Ok(t) => Ok(Projection::Feasible(to_ambient(&t))),
        Err((t, iterations, violation, gap)) => Err(Error::NonConverged {
            iterations,
            violation,
            gap,
            best_point: to_ambient(&t),
        }),
    }
}
