//! Complex restricted Boltzmann machine amplitudes
//!
//! ```text
//! ψ(x) = exp(Σ_i a_i x_i) · Π_j 2 cosh(b_j + Σ_i W_ij x_i)
//! ```
//!
//! Parameters flatten as `a` (L entries), then `b` (M entries), then `W`
//! column-major by hidden unit (entry `(i, j)` at `L + M + j·L + i`). Every
//! other module indexes parameters through this order.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spin::SpinConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams {
    sites: usize,
    alpha: usize,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    /// Column-major by hidden unit: `w[j * sites + i]`.
    pub w: Vec<C64>,
}

/// Parameter count for a given shape: `L + M + L·M` with `M = αL`.
pub fn param_count(sites: usize, alpha: usize) -> usize {
    let m = alpha * sites;
    sites + m + sites * m
}

/// `(ln 2cosh z, tanh z)` without overflow for large `|Re z|`.
#[inline]
pub fn ln2cosh_tanh(z: C64) -> (C64, C64) {
    if z.re >= 0.0 {
        let e = (-2.0 * z).exp();
        let one_e = 1.0 + e;
        (z + one_e.ln(), (1.0 - e) / one_e)
    } else {
        let e = (2.0 * z).exp();
        let one_e = 1.0 + e;
        (-z + one_e.ln(), (e - 1.0) / one_e)
    }
}

#[inline]
pub fn ln2cosh(z: C64) -> C64 {
    if z.re >= 0.0 {
        z + (1.0 + (-2.0 * z).exp()).ln()
    } else {
        -z + (1.0 + (2.0 * z).exp()).ln()
    }
}

impl RbmParams {
    pub fn zeros(sites: usize, alpha: usize) -> Self {
        let m = alpha * sites;
        Self {
            sites,
            alpha,
            a: vec![C64::default(); sites],
            b: vec![C64::default(); m],
            w: vec![C64::default(); sites * m],
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn hidden(&self) -> usize {
        self.b.len()
    }

    pub fn n_params(&self) -> usize {
        param_count(self.sites, self.alpha)
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> C64 {
        self.w[j * self.sites + i]
    }

    pub fn flatten(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.w);
        out
    }

    pub fn from_flat(sites: usize, alpha: usize, flat: &[C64]) -> Result<Self> {
        let n = param_count(sites, alpha);
        if flat.len() != n {
            return Err(Error::Dimension { expected: n, got: flat.len() });
        }
        let m = alpha * sites;
        Ok(Self {
            sites,
            alpha,
            a: flat[..sites].to_vec(),
            b: flat[sites..sites + m].to_vec(),
            w: flat[sites + m..].to_vec(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.a.iter().chain(&self.b).chain(&self.w).all(|z| z.re.is_finite() && z.im.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Numeric("non-finite RBM parameter".into()))
        }
    }

    fn check(&self, x: &SpinConfig) -> Result<()> {
        if x.len() != self.sites {
            return Err(Error::Dimension { expected: self.sites, got: x.len() });
        }
        Ok(())
    }

    /// Hidden-unit arguments `θ_j(x) = b_j + Σ_i W_ij x_i`.
    pub fn theta(&self, x: &SpinConfig) -> Vec<C64> {
        let mut out = vec![C64::default(); self.hidden()];
        self.theta_into(x, &mut out);
        out
    }

    pub fn theta_into(&self, x: &SpinConfig, out: &mut [C64]) {
        let l = self.sites;
        let spins: Vec<f64> = (0..l).map(|i| x.spin(i)).collect();
        for (j, (o, col)) in out.iter_mut().zip(self.w.chunks_exact(l)).enumerate() {
            let mut acc = self.b[j];
            for (wij, s) in col.iter().zip(&spins) {
                acc += wij * s;
            }
            *o = acc;
        }
    }

    #[inline]
    pub(crate) fn visible_term(&self, x: &SpinConfig) -> C64 {
        let mut acc = C64::default();
        for (i, ai) in self.a.iter().enumerate() {
            acc += ai * x.spin(i);
        }
        acc
    }

    pub(crate) fn log_amplitude_from_theta(&self, x: &SpinConfig, theta: &[C64]) -> C64 {
        self.visible_term(x) + theta.iter().map(|&t| ln2cosh(t)).sum::<C64>()
    }

    pub(crate) fn log_amplitude_unchecked(&self, x: &SpinConfig) -> C64 {
        let theta = self.theta(x);
        self.log_amplitude_from_theta(x, &theta)
    }

    /// `ln ψ(x)`, defined modulo `2πi`.
    pub fn log_amplitude(&self, x: &SpinConfig) -> Result<C64> {
        self.check(x)?;
        let v = self.log_amplitude_unchecked(x);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Numeric(format!("log-amplitude not finite at configuration {}", x.bits())));
        }
        Ok(v)
    }

    /// `O_k(x) = ∂ ln ψ(x) / ∂ϑ_k` in flattening order.
    pub fn log_derivatives(&self, x: &SpinConfig) -> Result<Vec<C64>> {
        self.check(x)?;
        let l = self.sites;
        let theta = self.theta(x);
        let mut out = Vec::with_capacity(self.n_params());
        out.extend((0..l).map(|i| C64::new(x.spin(i), 0.0)));
        let tanh: Vec<C64> = theta.iter().map(|&t| ln2cosh_tanh(t).1).collect();
        out.extend_from_slice(&tanh);
        for t in &tanh {
            for i in 0..l {
                out.push(t * x.spin(i));
            }
        }
        Ok(out)
    }

    /// `out += weight · conj(O(x))`, given `tanh θ(x)`.
    #[inline]
    pub(crate) fn accumulate_conj_log_derivatives(&self, x: &SpinConfig, tanh: &[C64], weight: C64, out: &mut [C64]) {
        let l = self.sites;
        let m = self.hidden();
        let signs: Vec<f64> = (0..l).map(|i| x.spin(i)).collect();
        for (o, s) in out[..l].iter_mut().zip(&signs) {
            *o += weight * s;
        }
        let (bo, wo) = out[l..].split_at_mut(m);
        for ((bj, col), t) in bo.iter_mut().zip(wo.chunks_exact_mut(l)).zip(tanh) {
            let c = weight * t.conj();
            *bj += c;
            for (wij, s) in col.iter_mut().zip(&signs) {
                *wij += c * s;
            }
        }
    }

    /// `ψ(x_new) / ψ(x_old)` by full recomputation.
    pub fn amplitude_ratio(&self, x_new: &SpinConfig, x_old: &SpinConfig) -> Result<C64> {
        self.check(x_new)?;
        self.check(x_old)?;
        Ok((self.log_amplitude_unchecked(x_new) - self.log_amplitude_unchecked(x_old)).exp())
    }

    /// `ln ψ(x_new) − ln ψ(x_old)` from the cached hidden arguments of `x_old`,
    /// touching only the sites where the two configurations differ.
    pub fn log_ratio_incremental(&self, x_new: &SpinConfig, x_old: &SpinConfig, theta_old: &[C64]) -> C64 {
        let l = self.sites;
        let mut dv = C64::default();
        let mut flips: [usize; 64] = [0; 64];
        let mut nf = 0;
        for i in x_old.diff_sites(x_new) {
            dv -= 2.0 * self.a[i] * x_old.spin(i);
            flips[nf] = i;
            nf += 1;
        }
        if nf == 0 {
            return C64::default();
        }
        let flips = &flips[..nf];
        let mut acc = dv;
        for (t, col) in theta_old.iter().zip(self.w.chunks_exact(l)) {
            let mut shifted = *t;
            for &i in flips {
                shifted -= 2.0 * col[i] * x_old.spin(i);
            }
            acc += ln2cosh(shifted) - ln2cosh(*t);
        }
        acc
    }

    /// Incremental variant of [`amplitude_ratio`](Self::amplitude_ratio).
    pub fn amplitude_ratio_incremental(&self, x_new: &SpinConfig, x_old: &SpinConfig, theta_old: &[C64]) -> C64 {
        self.log_ratio_incremental(x_new, x_old, theta_old).exp()
    }

    /// Update cached hidden arguments after flipping 0-based site `i` of `x`
    /// (the configuration *before* the flip).
    #[inline]
    pub(crate) fn apply_flip(&self, x: &SpinConfig, i: usize, theta: &mut [C64]) {
        let l = self.sites;
        let s = x.spin(i);
        for (t, col) in theta.iter_mut().zip(self.w.chunks_exact(l)) {
            *t -= 2.0 * col[i] * s;
        }
    }

    /// Entrywise `self + other`.
    pub fn add(&self, other: &RbmParams) -> Result<RbmParams> {
        let a = self.flatten();
        let b = other.flatten();
        if a.len() != b.len() || self.sites != other.sites {
            return Err(Error::Dimension { expected: a.len(), got: b.len() });
        }
        let sum: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        RbmParams::from_flat(self.sites, self.alpha, &sum)
    }
}
