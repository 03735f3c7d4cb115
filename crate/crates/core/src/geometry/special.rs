//! Log-gamma, Beta, unit-sphere areas and sphere-cap fractions.

use crate::{Error, Result};

/// ln Γ(x) for x > 0 via the Stirling–Bernoulli series, shifting small
/// arguments up with the recurrence Γ(x) = Γ(x + 1) / x.
///
/// Relative accuracy is ~1e-15 over the range used here, which keeps the
/// Beta function within its 1e-12 contract.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    const SHIFT_TO: f64 = 12.0;
    let mut shift = 0.0;
    let mut z = x;
    while z < SHIFT_TO {
        shift -= z.ln();
        z += 1.0;
    }
    // Bernoulli coefficients B_{2k} / (2k (2k-1)).
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut term = inv;
    for c in C {
        series += c * term;
        term *= inv2;
    }
    let half_ln_2pi = 0.918_938_533_204_672_74; // ln(2π)/2
    shift + (z - 0.5) * z.ln() - z + half_ln_2pi + series
}

/// B(a, b) = Γ(a)Γ(b)/Γ(a+b), computed in log space.
pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Config(format!(
            "beta function needs positive arguments, got ({a}, {b})"
        )));
    }
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

/// ln A(m) where A(m) = 2 π^{(m+1)/2} / Γ((m+1)/2) is the surface area of
/// the unit m-sphere embedded in m+1 dimensions.
fn ln_unit_sphere_area(m: usize) -> f64 {
    let h = (m as f64 + 1.0) / 2.0;
    std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - ln_gamma(h)
}

/// Surface area of the unit m-sphere: A(0) = 2, A(1) = 2π, A(2) = 4π, ...
pub fn unit_sphere_area(m: usize) -> f64 {
    ln_unit_sphere_area(m).exp()
}

/// Evaluation mode for [`sphere_cap_fraction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    /// The true normalized measure, by adaptive quadrature.
    Exact,
    /// The closed-form upper bound `(2 eps^k / k) * A(k-1) A(n-k-1) / A(n-1)`.
    UpperBound,
}

/// Fraction of the unit (n-1)-sphere within distance `eps` of a fixed
/// (n-k)-dimensional hyperplane through the center, i.e. the measure of
/// points whose first k coordinates have norm at most `eps`.
///
/// `Exact` integrates the belt density
/// `A(k-1) A(n-k-1) / A(n-1) * ρ^{k-1} (1-ρ²)^{(n-k-2)/2}` over `ρ ∈ [0, eps]`
/// after the substitution `ρ = sin θ`, which removes the endpoint singularity
/// that appears when `n - k < 2`. It equals 0 at eps = 0 and 1 at eps = 1.
/// `UpperBound` replaces the integral with `2 eps^k / k`, which dominates the
/// exact value.
pub fn sphere_cap_fraction(n: usize, k: usize, eps: f64, mode: CapMode) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::Dimension(format!(
            "sphere cap needs 1 <= k < n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config(format!("eps must be in [0, 1], got {eps}")));
    }
    let ln_coeff =
        ln_unit_sphere_area(k - 1) + ln_unit_sphere_area(n - k - 1) - ln_unit_sphere_area(n - 1);
    let coeff = ln_coeff.exp();
    match mode {
        CapMode::UpperBound => Ok(coeff * 2.0 * eps.powi(k as i32) / k as f64),
        CapMode::Exact => {
            if eps == 0.0 {
                return Ok(0.0);
            }
            // ∫_0^eps ρ^{k-1}(1-ρ²)^{(n-k-2)/2} dρ
            //   = ∫_0^{asin(eps)} sin^{k-1}θ cos^{n-k-1}θ dθ
            let ke = (k - 1) as i32;
            let ce = (n - k - 1) as i32;
            let integrand =
                move |theta: f64| theta.sin().powi(ke) * theta.cos().powi(ce);
            let integral = adaptive_gauss_kronrod(&integrand, 0.0, eps.asin(), 1e-10);
            Ok((coeff * integral).min(1.0))
        }
    }
}

// Gauss–Kronrod 7-15 nodes and weights on [-1, 1]. The Gauss-7 rule reuses
// the odd-index Kronrod abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod quadrature with interval halving, absolute
/// tolerance `tol`.
pub(crate) fn adaptive_gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return val;
        }
        let mid = 0.5 * (a + b);
        rec(f, a, mid, 0.5 * tol, depth + 1) + rec(f, mid, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}
