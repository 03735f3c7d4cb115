//! Piecewise-constant functions of a scalar parameter.
//!
//! Breakpoint/value representation of step functions of the threshold τ.
//! The curves produced by the metrics module (robust error, abstention rate,
//! the trade-off objective) and the forecaster's cumulative-utility state are
//! all exactly piecewise constant, so curve arithmetic and regret accounting
//! can be done without discretization error.
//!
//! Convention: the function is right-continuous and the value changes AT a
//! breakpoint, i.e. `f(t) = values[#{b in breakpoints : b <= t}]`. The
//! classifier's strict `< τ` comparisons make the underlying indicator
//! functions left-continuous at their flip points; the two conventions differ
//! only on the (measure-zero) breakpoint set itself, which is documented here
//! once instead of special-cased everywhere.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantFn {
    lo: f64,
    hi: f64,
    /// Strictly increasing, all in the open interval (lo, hi).
    breakpoints: Vec<f64>,
    /// One value per piece; `values.len() == breakpoints.len() + 1`.
    values: Vec<f64>,
}

impl PiecewiseConstantFn {
    /// The constant function `v` on `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, v: f64) -> Result<Self> {
        Self::new(lo, hi, Vec::new(), vec![v])
    }

    pub fn new(lo: f64, hi: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("invalid domain [{lo}, {hi}]")));
        }
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Contract(format!(
                "need {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Contract("non-finite piece value".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Contract(format!(
                    "breakpoints not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let (Some(first), Some(last)) = (breakpoints.first(), breakpoints.last()) {
            if !(*first > lo && *last < hi) {
                return Err(Error::Contract(format!(
                    "breakpoints must lie in ({lo}, {hi})"
                )));
            }
        }
        Ok(Self {
            lo,
            hi,
            breakpoints,
            values,
        })
    }

    /// Builds a step function from jump deltas: starting at `base`, the value
    /// increases by `delta` at position `at` (taking effect at `at` itself).
    ///
    /// Deltas at or below `lo` are folded into the base value; deltas at or
    /// above `hi` cannot affect the function on `[lo, hi]` and are dropped.
    /// Coincident positions are combined.
    pub fn from_deltas(lo: f64, hi: f64, base: f64, deltas: &[(f64, f64)]) -> Result<Self> {
        let mut base = base;
        let mut inside: Vec<(f64, f64)> = Vec::new();
        for &(at, delta) in deltas {
            if !at.is_finite() {
                if at == f64::NEG_INFINITY {
                    base += delta;
                }
                continue; // +inf never fires
            }
            if at <= lo {
                base += delta;
            } else if at < hi {
                inside.push((at, delta));
            }
        }
        inside.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breakpoints = Vec::with_capacity(inside.len());
        let mut values = Vec::with_capacity(inside.len() + 1);
        values.push(base);
        let mut acc = base;
        for (at, delta) in inside {
            acc += delta;
            if breakpoints.last() == Some(&at) {
                *values.last_mut().unwrap() = acc;
            } else {
                breakpoints.push(at);
                values.push(acc);
            }
        }
        let mut f = Self::new(lo, hi, breakpoints, values)?;
        f.coalesce();
        Ok(f)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `values[#{b <= t}]`; `t` is clamped to the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.lo, self.hi);
        let idx = self.breakpoints.partition_point(|b| *b <= t);
        self.values[idx]
    }

    /// Piece intervals `[start, end)` (the last one is `[start, hi]`) paired
    /// with their values.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let starts = std::iter::once(self.lo).chain(self.breakpoints.iter().copied());
        let ends = self
            .breakpoints
            .iter()
            .copied()
            .chain(std::iter::once(self.hi));
        starts
            .zip(ends)
            .zip(self.values.iter().copied())
            .map(|((s, e), v)| (s, e, v))
    }

    /// Merges adjacent pieces whose values are exactly equal.
    pub fn coalesce(&mut self) {
        if self.breakpoints.is_empty() {
            return;
        }
        let mut bp = Vec::with_capacity(self.breakpoints.len());
        let mut vals = Vec::with_capacity(self.values.len());
        vals.push(self.values[0]);
        for (b, v) in self.breakpoints.iter().zip(self.values.iter().skip(1)) {
            if *v != *vals.last().unwrap() {
                bp.push(*b);
                vals.push(*v);
            }
        }
        self.breakpoints = bp;
        self.values = vals;
    }

    /// Pointwise sum; both functions must share the same domain.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.lo != other.lo || self.hi != other.hi {
            return Err(Error::Contract(format!(
                "domain mismatch: [{}, {}] vs [{}, {}]",
                self.lo, self.hi, other.lo, other.hi
            )));
        }
        let mut bp = Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len());
        let (mut i, mut j) = (0, 0);
        let mut values = Vec::with_capacity(bp.capacity() + 1);
        values.push(self.values[0] + other.values[0]);
        while i < self.breakpoints.len() || j < other.breakpoints.len() {
            let a = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            let b = other.breakpoints.get(j).copied().unwrap_or(f64::INFINITY);
            let at = a.min(b);
            if a <= at {
                i += 1;
            }
            if b <= at {
                j += 1;
            }
            bp.push(at);
            values.push(self.values[i] + other.values[j]);
        }
        let mut f = Self::new(self.lo, self.hi, bp, values)?;
        f.coalesce();
        Ok(f)
    }

    /// `a * f + b` applied pointwise.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = a * *v + b;
        }
        out.coalesce();
        out
    }

    /// Clamps every piece value into `[0, 1]`.
    pub fn clamp01(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = v.clamp(0.0, 1.0);
        }
        out.coalesce();
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The piece attaining the maximum value, as `(start, end, value)`.
    /// Ties go to the leftmost piece.
    pub fn argmax_piece(&self) -> (f64, f64, f64) {
        let mut best: Option<(f64, f64, f64)> = None;
        for (s, e, v) in self.pieces() {
            if best.map_or(true, |(_, _, bv)| v > bv) {
                best = Some((s, e, v));
            }
        }
        best.expect("at least one piece")
    }

    /// ∫ f over the domain.
    pub fn integral(&self) -> f64 {
        self.pieces().map(|(s, e, v)| (e - s) * v).sum()
    }

    /// Piece probability masses proportional to `len_i * exp(lambda * v_i)`,
    /// computed with a shared max-shift so the weights cannot all underflow.
    pub(crate) fn exp_piece_masses(&self, lambda: f64) -> Vec<f64> {
        let vmax = self.max_value();
        self.pieces()
            .map(|(s, e, v)| (e - s) * (lambda * (v - vmax)).exp())
            .collect()
    }
}
