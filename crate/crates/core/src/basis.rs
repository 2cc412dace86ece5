//! Chebyshev temporal basis on a time window.
//!
//! A window `[t_start, t_end]` is mapped affinely onto `r ∈ [−1, 1]`; basis
//! function `q` (0-based) is `T_q(r(t))`. Times outside the window are
//! allowed and evaluate the polynomial extension.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub t_start: f64,
    pub t_end: f64,
    /// Basis size `Q`.
    pub basis_size: usize,
}

impl WindowSpec {
    pub fn new(t_start: f64, t_end: f64, basis_size: usize) -> Result<Self> {
        let w = Self { t_start, t_end, basis_size };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::Config(format!("degenerate window [{}, {}]", self.t_start, self.t_end)));
        }
        if self.basis_size == 0 {
            return Err(Error::Config("basis size Q must be at least 1".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// `dr/dt`.
    pub fn slope(&self) -> f64 {
        2.0 / self.width()
    }

    pub fn rescale(&self, t: f64) -> f64 {
        2.0 * (t - self.t_start) / self.width() - 1.0
    }

    pub fn unscale(&self, r: f64) -> f64 {
        self.t_start + 0.5 * (r + 1.0) * self.width()
    }

    /// The window of equal width that starts where this one ends.
    pub fn next(&self) -> Self {
        Self { t_start: self.t_end, t_end: self.t_end + self.width(), basis_size: self.basis_size }
    }

    /// Basis values `T_q(r(t))`, `q = 0..Q`.
    pub fn values_at(&self, t: f64) -> Vec<f64> {
        cheb_values(self.basis_size, self.rescale(t))
    }
}

/// `r(t)` for a window, failing on zero width.
pub fn rescale(t: f64, w: &WindowSpec) -> Result<f64> {
    w.validate()?;
    Ok(w.rescale(t))
}

/// `(T_0(r), …, T_{Q−1}(r))` by the three-term recurrence.
pub fn cheb_values(q: usize, r: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(q);
    if q == 0 {
        return out;
    }
    out.push(1.0);
    if q > 1 {
        out.push(r);
    }
    for k in 2..q {
        let next = 2.0 * r * out[k - 1] - out[k - 2];
        out.push(next);
    }
    out
}

/// `dⁿ/dtⁿ T_q(r(t))` for `q = 0..Q`, where `r` is the rescaled time and
/// `dr_dt` the slope of the map.
///
/// Differentiating the recurrence n times gives
/// `T⁽ⁿ⁾_{q+1} = 2r T⁽ⁿ⁾_q + 2n T⁽ⁿ⁻¹⁾_q − T⁽ⁿ⁾_{q−1}`.
pub fn cheb_derivatives(q: usize, n: usize, r: f64, dr_dt: f64) -> Vec<f64> {
    let mut level = cheb_values(q, r);
    for order in 1..=n {
        let prev = level;
        let mut cur = vec![0.0; q];
        if q > 1 {
            cur[1] = if order == 1 { 1.0 } else { 0.0 };
        }
        for k in 1..q.saturating_sub(1) {
            cur[k + 1] = 2.0 * r * cur[k] + 2.0 * order as f64 * prev[k] - cur[k - 1];
        }
        level = cur;
    }
    let scale = dr_dt.powi(n as i32);
    level.iter_mut().for_each(|v| *v *= scale);
    level
}

/// Carry one parameter's coefficients across a window boundary.
///
/// Solves `dⁿϑ_prev/dtⁿ (t_end) = dⁿϑ_next/dtⁿ (t_start_next)` for `n = Q−1`
/// down to 0. The system is triangular since `T⁽ⁿ⁾_q ≡ 0` for `q < n`.
pub fn handoff_row(prev: &[C64], w_prev: &WindowSpec, w_next: &WindowSpec) -> Result<Vec<C64>> {
    let q = w_prev.basis_size;
    if w_next.basis_size != q || prev.len() != q {
        return Err(Error::Config(format!(
            "basis size mismatch in window handoff: {} vs {} ({} coefficients)",
            w_prev.basis_size,
            w_next.basis_size,
            prev.len()
        )));
    }
    let table = HandoffTable::new(w_prev, w_next);
    let mut out = vec![C64::default(); q];
    table.apply(prev, &mut out);
    Ok(out)
}

/// Precomputed derivative tables at both sides of a seam.
pub(crate) struct HandoffTable {
    q: usize,
    /// `left[n][k]` = dⁿT_k/dtⁿ at the end of the previous window.
    left: Vec<Vec<f64>>,
    /// `right[n][k]` = dⁿT_k/dtⁿ at the start of the next window.
    right: Vec<Vec<f64>>,
}

impl HandoffTable {
    pub(crate) fn new(w_prev: &WindowSpec, w_next: &WindowSpec) -> Self {
        let q = w_prev.basis_size;
        let r_end = w_prev.rescale(w_prev.t_end);
        let r_start = w_next.rescale(w_next.t_start);
        let left = (0..q).map(|n| cheb_derivatives(q, n, r_end, w_prev.slope())).collect();
        let right = (0..q).map(|n| cheb_derivatives(q, n, r_start, w_next.slope())).collect();
        Self { q, left, right }
    }

    pub(crate) fn apply(&self, prev: &[C64], out: &mut [C64]) {
        for n in (0..self.q).rev() {
            let target: C64 = (n..self.q).map(|k| prev[k] * self.left[n][k]).sum();
            let known: C64 = (n + 1..self.q).map(|k| out[k] * self.right[n][k]).sum();
            out[n] = (target - known) / self.right[n][n];
        }
    }
}
