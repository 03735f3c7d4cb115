//! Brute-force attack oracle for testing the exact attack at small scale.
//!
//! Probes a dense grid over the subspace coordinates (plus the projections of
//! all training features and the unperturbed point), then runs two
//! golden-ratio shrinking local refinements: one polishing the best
//! misclassified probe's distance, one chasing the smallest wrong-minus-right
//! distance margin to uncover thin misclassified regions the grid straddled.
//! The probe set does not depend on τ, so the decision
//! `best wrong distance < τ` is monotone in τ by construction.

use crate::classifier::RobustModel;
use crate::geometry::Subspace;
use crate::linalg::dist;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub success: bool,
    /// Smallest nearest-neighbor distance over probed points whose predicted
    /// label differs from the true one (+inf when none was found).
    pub best_wrong_distance: f64,
    pub probes: usize,
}

struct Probe {
    /// min distance to a wrong-label training point
    wrong: f64,
    /// min distance to a same-label training point
    right: f64,
}

impl Probe {
    /// Misclassified without abstention at threshold tau, under the
    /// lowest-index tie rule approximated by strict comparison (ties are
    /// measure-zero and resolved by the caller's boundary tolerance).
    fn is_wrong(&self) -> bool {
        self.wrong < self.right
    }
}

/// Exhaustive-search attack decision; refuses n3 > 2 or m > 32.
pub fn brute_force_attack_oracle(
    model: &RobustModel,
    x: &[f64],
    y_true: u32,
    s: &Subspace,
    tau: f64,
    grid_density: Option<usize>,
) -> Result<OracleReport> {
    let n3 = s.subspace_dim();
    let m = model.train().len();
    if n3 > 2 || m > 32 {
        return Err(Error::Refused(format!(
            "brute-force oracle supports n3 <= 2 and m <= 32, got n3={n3}, m={m}"
        )));
    }
    if x.len() != model.train().dim() || s.ambient_dim() != x.len() {
        return Err(Error::Dimension("oracle dimension mismatch".into()));
    }
    let train = model.train();
    let wrong_feats: Vec<&[f64]> = (0..m)
        .filter(|&i| train.label(i) != y_true)
        .map(|i| train.feature(i))
        .collect();
    let right_feats: Vec<&[f64]> = (0..m)
        .filter(|&i| train.label(i) == y_true)
        .map(|i| train.feature(i))
        .collect();
    if wrong_feats.is_empty() {
        return Ok(OracleReport {
            success: false,
            best_wrong_distance: f64::INFINITY,
            probes: 0,
        });
    }

    let mut scale = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            scale = scale.max(dist(train.feature(i), train.feature(j)));
        }
        scale = scale.max(dist(train.feature(i), x));
    }
    let width = 4.0 * scale.max(1e-6);

    let probes = std::cell::RefCell::new(0usize);
    let eval = |t: &[f64]| -> Probe {
        *probes.borrow_mut() += 1;
        let p: Vec<f64> = {
            let offset = s.point_at(t);
            x.iter().zip(&offset).map(|(a, b)| a + b).collect()
        };
        let wrong = wrong_feats
            .iter()
            .map(|f| dist(f, &p))
            .fold(f64::INFINITY, f64::min);
        let right = right_feats
            .iter()
            .map(|f| dist(f, &p))
            .fold(f64::INFINITY, f64::min);
        Probe { wrong, right }
    };

    let density = grid_density.unwrap_or(if n3 == 1 { 2000 } else { 600 });
    let mut best_wrong = f64::INFINITY;
    let mut best_wrong_at: Option<Vec<f64>> = None;

    // Fixed probes: the origin and every training-feature projection.
    let mut seeds: Vec<Vec<f64>> = vec![vec![0.0; n3]];
    for f in train.features() {
        let centered: Vec<f64> = f.iter().zip(x).map(|(a, b)| a - b).collect();
        seeds.push(s.coords(&centered));
    }
    for t in &seeds {
        let pr = eval(t);
        if pr.is_wrong() && pr.wrong < best_wrong {
            best_wrong = pr.wrong;
            best_wrong_at = Some(t.clone());
        }
    }

    // Grid sweep, keeping the margin landscape so that every local margin
    // minimum can seed a refinement (thin misclassified regions can fall
    // strictly between grid lines).
    let grid_step = 2.0 * width / (density.max(2) - 1) as f64;
    let coord = |i: usize| -> f64 { -width + grid_step * i as f64 };
    let mut margins = vec![0.0f64; if n3 == 1 { density } else { density * density }];
    match n3 {
        1 => {
            for i in 0..density {
                let t = vec![coord(i)];
                let pr = eval(&t);
                margins[i] = pr.wrong - pr.right;
                if pr.is_wrong() && pr.wrong < best_wrong {
                    best_wrong = pr.wrong;
                    best_wrong_at = Some(t);
                }
            }
        }
        2 => {
            for i in 0..density {
                for j in 0..density {
                    let t = vec![coord(i), coord(j)];
                    let pr = eval(&t);
                    margins[i * density + j] = pr.wrong - pr.right;
                    if pr.is_wrong() && pr.wrong < best_wrong {
                        best_wrong = pr.wrong;
                        best_wrong_at = Some(t);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    let mut minima: Vec<(f64, Vec<f64>)> = Vec::new();
    match n3 {
        1 => {
            for i in 0..density {
                let m = margins[i];
                let left = if i > 0 { margins[i - 1] } else { f64::INFINITY };
                let right = if i + 1 < density { margins[i + 1] } else { f64::INFINITY };
                if m <= left && m <= right {
                    minima.push((m, vec![coord(i)]));
                }
            }
        }
        2 => {
            for i in 0..density {
                for j in 0..density {
                    let m = margins[i * density + j];
                    let neighbor = |ii: isize, jj: isize| -> f64 {
                        if ii < 0 || jj < 0 || ii as usize >= density || jj as usize >= density {
                            f64::INFINITY
                        } else {
                            margins[ii as usize * density + jj as usize]
                        }
                    };
                    let (ii, jj) = (i as isize, j as isize);
                    if m <= neighbor(ii - 1, jj)
                        && m <= neighbor(ii + 1, jj)
                        && m <= neighbor(ii, jj - 1)
                        && m <= neighbor(ii, jj + 1)
                    {
                        minima.push((m, vec![coord(i), coord(j)]));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    minima.truncate(24);

    // Local refinement: coordinate pattern search with golden-ratio
    // shrinking, tracking wrong-probe distances globally.
    let refine = |start: Vec<f64>, objective: &dyn Fn(&Probe) -> f64, best_wrong: &mut f64| {
        let mut at = start;
        let mut val = objective(&eval(&at));
        let mut step = grid_step;
        for _ in 0..90 {
            let mut moved = false;
            for k in 0..n3 {
                for sign in [1.0, -1.0] {
                    let mut cand = at.clone();
                    cand[k] += sign * step;
                    let pr = eval(&cand);
                    let v = objective(&pr);
                    if pr.is_wrong() && pr.wrong < *best_wrong {
                        *best_wrong = pr.wrong;
                    }
                    if v < val {
                        val = v;
                        at = cand;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.618_033_988_749_894_9;
                if step < 1e-12 * width.max(1.0) {
                    break;
                }
            }
        }
    };

    // Chase each margin minimum to uncover thin regions, then polish the
    // wrong-distance minimum (objective +inf outside the wrong region keeps
    // that search inside it).
    for (_, start) in &minima {
        refine(start.clone(), &|pr| pr.wrong - pr.right, &mut best_wrong);
    }
    for (_, start) in &minima {
        refine(
            start.clone(),
            &|pr| if pr.is_wrong() { pr.wrong } else { f64::INFINITY },
            &mut best_wrong,
        );
    }
    if let Some(start) = best_wrong_at {
        refine(
            start,
            &|pr| if pr.is_wrong() { pr.wrong } else { f64::INFINITY },
            &mut best_wrong,
        );
    }

    Ok(OracleReport {
        success: best_wrong < tau,
        best_wrong_distance: best_wrong,
        probes: probes.into_inner(),
    })
}
