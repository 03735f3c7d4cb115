//! Subspace primitives: Haar and κ-bounded sampling, projections, and the
//! special functions behind the sphere-cap bounds.
//!
//! The adversary's perturbation space is an n3-dimensional linear subspace of
//! the n2-dimensional feature space. Haar (rotation-invariant) subspaces are
//! sampled by orthonormalizing i.i.d. standard Gaussian vectors; the
//! κ-bounded family is a mixture of a cone-conditioned first direction with
//! the uniform distribution, whose density never exceeds κ times Haar.

mod special;

pub use special::{beta_function, sphere_cap_fraction, unit_sphere_area, CapMode};
pub(crate) use special::adaptive_gauss_kronrod as quadrature;

use crate::linalg::{dot, norm};
use crate::rng::{derive_seed, root_rng};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Orthonormal basis of an n3-dimensional linear subspace of ℝ^{n2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient_dim: usize,
    /// Basis columns, each of length `ambient_dim`, pairwise orthonormal.
    basis: Vec<Vec<f64>>,
}

/// Column orthonormality tolerance enforced on construction.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

impl Subspace {
    pub fn new(ambient_dim: usize, basis: Vec<Vec<f64>>) -> Result<Self> {
        let n3 = basis.len();
        if n3 == 0 || n3 >= ambient_dim {
            return Err(Error::Dimension(format!(
                "subspace dimension must satisfy 1 <= n3 < n2, got n3={n3}, n2={ambient_dim}"
            )));
        }
        for col in &basis {
            if col.len() != ambient_dim {
                return Err(Error::Dimension(format!(
                    "basis column of length {} in ambient dimension {ambient_dim}",
                    col.len()
                )));
            }
        }
        for i in 0..n3 {
            for j in i..n3 {
                let g = dot(&basis[i], &basis[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > ORTHONORMALITY_TOL {
                    return Err(Error::Config(format!(
                        "basis not orthonormal: <b{i}, b{j}> = {g}"
                    )));
                }
            }
        }
        Ok(Self { ambient_dim, basis })
    }

    /// One-dimensional subspace spanned by `direction`.
    pub fn from_direction(direction: &[f64]) -> Result<Self> {
        let n = norm(direction);
        if n == 0.0 {
            return Err(Error::Config("zero direction vector".into()));
        }
        let col = direction.iter().map(|x| x / n).collect();
        Self::new(direction.len(), vec![col])
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn subspace_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Coordinates of `v` in the basis: Bᵀ v.
    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|col| dot(col, v)).collect()
    }

    /// Point with the given basis coordinates: B t.
    pub fn point_at(&self, t: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        for (col, ti) in self.basis.iter().zip(t) {
            for (o, c) in out.iter_mut().zip(col) {
                *o += ti * c;
            }
        }
        out
    }

    /// Orthogonal projection B Bᵀ v onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.point_at(&self.coords(v))
    }

    /// ‖(I − BBᵀ) v‖, the distance of `v` from the subspace.
    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn gaussian_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform point on the unit sphere of ℝ^n.
pub fn sample_unit_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut v = gaussian_vector(n, rng);
        let nm = norm(&v);
        if nm > 1e-8 {
            for x in &mut v {
                *x /= nm;
            }
            return v;
        }
    }
}

/// Removes the components of `v` along each (orthonormal) vector in `basis`,
/// with one re-orthogonalization pass to control drift, then normalizes.
/// Returns `None` if the residual is numerically degenerate.
fn orthonormalize_against(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
    let nm = norm(&v);
    if nm < 1e-8 {
        return None;
    }
    for x in &mut v {
        *x /= nm;
    }
    Some(v)
}

/// Haar-random n3-dimensional linear subspace of ℝ^{n2}: Gram–Schmidt
/// orthonormalization of n3 i.i.d. standard Gaussian vectors. A degenerate
/// draw (rank deficiency) is resampled.
pub fn sample_uniform_subspace(n2: usize, n3: usize, seed: u64) -> Result<Subspace> {
    if n3 == 0 || n3 >= n2 {
        return Err(Error::Dimension(format!(
            "need 1 <= n3 < n2, got n3={n3}, n2={n2}"
        )));
    }
    let mut rng = root_rng(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n3);
    while basis.len() < n3 {
        let v = gaussian_vector(n2, &mut rng);
        if let Some(q) = orthonormalize_against(v, &basis) {
            basis.push(q);
        }
    }
    Subspace::new(n2, basis)
}

/// Haar-random n x n orthogonal matrix (rows orthonormal), for rotation
/// invariance checks.
pub fn sample_haar_rotation(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = root_rng(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let v = gaussian_vector(n, &mut rng);
        if let Some(q) = orthonormalize_against(v, &rows) {
            rows.push(q);
        }
    }
    rows
}

/// Applies a rotation given as rows: (R v)_i = <row_i, v>.
pub fn rotate(rows: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, v)).collect()
}

/// Cone/uniform mixture over subspaces with density at most `kappa` times
/// the Haar density.
///
/// With probability `mixture_weight` the first basis direction is a Haar
/// direction conditioned on cosine similarity at least `cone_cosine` to
/// `cone_axis` (remaining directions Haar in the orthogonal complement);
/// otherwise the subspace is fully Haar. Writing q for the Haar mass of the
/// cone event, the density ratio to uniform is at most
/// `kappa = mixture_weight / q + (1 - mixture_weight)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaBoundedSubspaceConfig {
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub mixture_weight: f64,
    pub cone_axis: Vec<f64>,
    pub cone_cosine: f64,
    /// Haar mass q of the cone event {v : <v, axis> >= cone_cosine}.
    pub cone_mass: f64,
    /// Derived density bound p/q + (1-p).
    pub kappa: f64,
    /// How `cone_mass` was obtained.
    pub mass_estimate: ConeMassEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConeMassEstimate {
    /// Monte Carlo over Haar directions with the recorded seed.
    MonteCarlo { trials: u64, seed: u64 },
    /// Supplied by the caller (e.g. from the exact cap integral).
    Exact,
}

fn validate_cone(
    n2: usize,
    n3: usize,
    p: f64,
    axis: &[f64],
    cone_cosine: f64,
) -> Result<Vec<f64>> {
    if n3 == 0 || n3 >= n2 {
        return Err(Error::Dimension(format!(
            "need 1 <= n3 < n2, got n3={n3}, n2={n2}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("mixture weight {p} outside [0, 1]")));
    }
    if cone_cosine >= 1.0 {
        return Err(Error::Config(format!(
            "cone_cosine {cone_cosine} >= 1 describes an empty cone"
        )));
    }
    if !(cone_cosine > 0.0) {
        return Err(Error::Config(format!(
            "cone_cosine must be in (0, 1), got {cone_cosine}"
        )));
    }
    if axis.len() != n2 {
        return Err(Error::Dimension(format!(
            "cone axis has length {}, ambient dimension is {n2}",
            axis.len()
        )));
    }
    let nm = norm(axis);
    if nm == 0.0 {
        return Err(Error::Config("cone axis must be nonzero".into()));
    }
    Ok(axis.iter().map(|x| x / nm).collect())
}

impl KappaBoundedSubspaceConfig {
    /// Builds the config, estimating the cone mass by Monte Carlo over
    /// `mass_trials` Haar directions drawn from `mass_seed`.
    pub fn new(
        n2: usize,
        n3: usize,
        mixture_weight: f64,
        cone_axis: &[f64],
        cone_cosine: f64,
        mass_trials: u64,
        mass_seed: u64,
    ) -> Result<Self> {
        let axis = validate_cone(n2, n3, mixture_weight, cone_axis, cone_cosine)?;
        let mut rng = root_rng(mass_seed);
        let mut hits = 0u64;
        for _ in 0..mass_trials {
            let v = sample_unit_vector(n2, &mut rng);
            if dot(&v, &axis) >= cone_cosine {
                hits += 1;
            }
        }
        let q = hits as f64 / mass_trials as f64;
        if mixture_weight > 0.0 && q == 0.0 {
            return Err(Error::Config(
                "cone mass estimated as zero; widen the cone or increase mass_trials".into(),
            ));
        }
        Self::finish(n2, n3, mixture_weight, axis, cone_cosine, q, ConeMassEstimate::MonteCarlo {
            trials: mass_trials,
            seed: mass_seed,
        })
    }

    /// Builds the config with a caller-supplied (e.g. analytically exact)
    /// cone mass.
    pub fn from_cone_mass(
        n2: usize,
        n3: usize,
        mixture_weight: f64,
        cone_axis: &[f64],
        cone_cosine: f64,
        cone_mass: f64,
    ) -> Result<Self> {
        let axis = validate_cone(n2, n3, mixture_weight, cone_axis, cone_cosine)?;
        if !(cone_mass > 0.0 && cone_mass <= 1.0) && mixture_weight > 0.0 {
            return Err(Error::Config(format!("cone mass {cone_mass} outside (0, 1]")));
        }
        Self::finish(n2, n3, mixture_weight, axis, cone_cosine, cone_mass, ConeMassEstimate::Exact)
    }

    fn finish(
        n2: usize,
        n3: usize,
        p: f64,
        axis: Vec<f64>,
        cone_cosine: f64,
        q: f64,
        mass_estimate: ConeMassEstimate,
    ) -> Result<Self> {
        let kappa = if p > 0.0 { p / q + (1.0 - p) } else { 1.0 };
        Ok(Self {
            ambient_dim: n2,
            subspace_dim: n3,
            mixture_weight: p,
            cone_axis: axis,
            cone_cosine,
            cone_mass: q,
            kappa,
            mass_estimate,
        })
    }

    /// Cone cosine c such that the Haar mass of {v : <v, axis> >= c} in ℝ^{n2}
    /// equals `q`, found by bisection on the exact cap integral.
    pub fn cone_cosine_for_mass(n2: usize, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::Config(format!(
                "one-sided cone mass must be in (0, 0.5), got {q}"
            )));
        }
        // P(v·axis >= c) = (1 - P(|v1| <= c)) / 2 = (1 - cap(n2, 1, c)) / 2.
        let mass = |c: f64| -> Result<f64> {
            Ok((1.0 - sphere_cap_fraction(n2, 1, c, CapMode::Exact)?) / 2.0)
        };
        let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid)? > q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Samples from the cone/uniform mixture described by `cfg`.
pub fn sample_kappa_bounded_subspace(
    cfg: &KappaBoundedSubspaceConfig,
    seed: u64,
) -> Result<Subspace> {
    let n2 = cfg.ambient_dim;
    let n3 = cfg.subspace_dim;
    let mut rng = root_rng(seed);
    let in_cone: bool = rng.gen::<f64>() < cfg.mixture_weight;
    if !in_cone {
        return sample_uniform_subspace(n2, n3, derive_seed(seed, 1));
    }
    // Rejection-sample the conditioned first direction; expected 1/q draws.
    let mut first = None;
    for _ in 0..2_000_000u64 {
        let v = sample_unit_vector(n2, &mut rng);
        if dot(&v, &cfg.cone_axis) >= cfg.cone_cosine {
            first = Some(v);
            break;
        }
    }
    let first = first.ok_or_else(|| {
        Error::Config("cone rejection sampling exhausted its draw budget".into())
    })?;
    let mut basis = vec![first];
    while basis.len() < n3 {
        let v = gaussian_vector(n2, &mut rng);
        if let Some(q) = orthonormalize_against(v, &basis) {
            basis.push(q);
        }
    }
    Subspace::new(n2, basis)
}

/// Distribution over adversarial subspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SubspaceDistribution {
    Uniform,
    KappaBounded(KappaBoundedSubspaceConfig),
}

impl SubspaceDistribution {
    pub fn sample(&self, n2: usize, n3: usize, seed: u64) -> Result<Subspace> {
        match self {
            SubspaceDistribution::Uniform => sample_uniform_subspace(n2, n3, seed),
            SubspaceDistribution::KappaBounded(cfg) => {
                if cfg.ambient_dim != n2 || cfg.subspace_dim != n3 {
                    return Err(Error::Dimension(format!(
                        "kappa config is ({}, {}), requested ({n2}, {n3})",
                        cfg.ambient_dim, cfg.subspace_dim
                    )));
                }
                sample_kappa_bounded_subspace(cfg, seed)
            }
        }
    }

    /// Density bound relative to Haar (1 for the uniform distribution).
    pub fn kappa(&self) -> f64 {
        match self {
            SubspaceDistribution::Uniform => 1.0,
            SubspaceDistribution::KappaBounded(cfg) => cfg.kappa,
        }
    }
}

/// Projects `v` onto the affine subspace `origin + S`.
///
/// Returns the projected point `origin + B Bᵀ (v - origin)` together with its
/// subspace coordinates `Bᵀ (v - origin)`; the point minimizes the distance
/// to `v` over the affine subspace.
pub fn project_point_onto_affine_subspace(
    v: &[f64],
    origin: &[f64],
    s: &Subspace,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if v.len() != s.ambient_dim() || origin.len() != s.ambient_dim() {
        return Err(Error::Dimension(format!(
            "point of length {} / origin of length {} in ambient dimension {}",
            v.len(),
            origin.len(),
            s.ambient_dim()
        )));
    }
    let centered: Vec<f64> = v.iter().zip(origin).map(|(a, b)| a - b).collect();
    let coords = s.coords(&centered);
    let mut point = s.point_at(&coords);
    for (p, o) in point.iter_mut().zip(origin) {
        *p += o;
    }
    Ok((point, coords))
}
