//! Time-dependent RBM parameters as Chebyshev expansions.
//!
//! Each instantaneous parameter is `ϑ_j(t) = Σ_q T_q(r(t)) θ_{j,q}` with the
//! coefficients `θ` fixed in time. Gradients are carried in a packed complex
//! form: for a real objective `f`, the entry for a complex parameter `z` is
//! `∂f/∂Re z + i ∂f/∂Im z`. Since the basis functions are real, the chain
//! rule acts on both parts identically.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{HandoffTable, WindowSpec};
use crate::error::{Error, Result};
use crate::rbm::{param_count, RbmParams};

/// Coefficients `θ_{j,q}`, shape `N_p × Q`, rows in RBM flattening order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTensor {
    sites: usize,
    alpha: usize,
    window: WindowSpec,
    /// Row-major: `coeffs[j * Q + q]`.
    coeffs: Vec<C64>,
}

impl CoeffTensor {
    pub fn zeros(sites: usize, alpha: usize, window: WindowSpec) -> Result<Self> {
        window.validate()?;
        let n = param_count(sites, alpha);
        Ok(Self { sites, alpha, window, coeffs: vec![C64::default(); n * window.basis_size] })
    }

    pub fn from_raw(sites: usize, alpha: usize, window: WindowSpec, coeffs: Vec<C64>) -> Result<Self> {
        window.validate()?;
        let n = param_count(sites, alpha) * window.basis_size;
        if coeffs.len() != n {
            return Err(Error::Dimension { expected: n, got: coeffs.len() });
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite coefficient".into()));
        }
        Ok(Self { sites, alpha, window, coeffs })
    }

    /// Starting coefficients for a window: columns `q ≥ 1` get uniform noise in
    /// `[−noise, noise]` on both parts, and column 0 absorbs them so that the
    /// tensor reproduces `initial` exactly at `t_start`.
    pub fn initialized(initial: &RbmParams, window: WindowSpec, noise: f64, seed: u64) -> Result<Self> {
        let mut c = Self::zeros(initial.sites(), initial.alpha(), window)?;
        let q = window.basis_size;
        let g = window.values_at(window.t_start);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = initial.flatten();
        for (j, row) in c.coeffs.chunks_exact_mut(q).enumerate() {
            let mut acc = C64::default();
            for k in 1..q {
                let z = if noise > 0.0 {
                    C64::new(rng.random_range(-noise..=noise), rng.random_range(-noise..=noise))
                } else {
                    C64::default()
                };
                row[k] = z;
                acc += z * g[k];
            }
            row[0] = (flat[j] - acc) / g[0];
        }
        Ok(c)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    pub fn basis_size(&self) -> usize {
        self.window.basis_size
    }

    pub fn n_params(&self) -> usize {
        param_count(self.sites, self.alpha)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn get(&self, j: usize, q: usize) -> C64 {
        self.coeffs[j * self.basis_size() + q]
    }

    pub fn set(&mut self, j: usize, q: usize, v: C64) {
        let qn = self.basis_size();
        self.coeffs[j * qn + q] = v;
    }

    /// Flat instantaneous parameters `ϑ(t)`.
    pub fn materialize_flat(&self, t: f64) -> Vec<C64> {
        let g = self.window.values_at(t);
        self.coeffs.chunks_exact(self.basis_size()).map(|row| row.iter().zip(&g).map(|(c, gq)| c * gq).sum()).collect()
    }

    pub fn materialize(&self, t: f64) -> RbmParams {
        RbmParams::from_flat(self.sites, self.alpha, &self.materialize_flat(t))
            .expect("coefficient rows match the RBM shape")
    }

    /// Coefficients of the next window whose parameters continue this
    /// window's with all `Q − 1` time derivatives matched at the seam.
    pub fn handoff(&self, next: WindowSpec) -> Result<CoeffTensor> {
        next.validate()?;
        if next.basis_size != self.basis_size() {
            return Err(Error::Config(format!(
                "basis size mismatch in window handoff: {} vs {}",
                self.basis_size(),
                next.basis_size
            )));
        }
        let table = HandoffTable::new(&self.window, &next);
        let q = self.basis_size();
        let mut coeffs = vec![C64::default(); self.coeffs.len()];
        for (src, dst) in self.coeffs.chunks_exact(q).zip(coeffs.chunks_exact_mut(q)) {
            table.apply(src, dst);
        }
        Ok(CoeffTensor { sites: self.sites, alpha: self.alpha, window: next, coeffs })
    }

    pub fn add(&self, other: &CoeffTensor) -> Result<CoeffTensor> {
        if self.coeffs.len() != other.coeffs.len() || self.window != other.window {
            return Err(Error::Dimension { expected: self.coeffs.len(), got: other.coeffs.len() });
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(CoeffTensor { coeffs, ..self.clone() })
    }
}

/// Which objective [`assemble_gradient`] differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientForm {
    /// `−Σ_k ln C_k`, minimized.
    #[default]
    NegLog,
    /// The raw product `Π_k C_k`, maximized.
    Product,
}

/// One fidelity term of the interval loss: its value and the packed
/// gradients `∂C_k/∂ϑ` at each time the term depends on.
#[derive(Clone, Debug)]
pub struct TermGradient<'a> {
    pub value: f64,
    pub contributions: Vec<(f64, &'a [C64])>,
}

/// Coefficient-space gradient, laid out like [`CoeffTensor::as_slice`].
///
/// `Product`: `Σ_k (Π_{k'≠k} C_{k'}) Σ_t T_q(r(t)) ∂C_k/∂ϑ_j(t)`.
/// `NegLog`: `−Σ_k (1/C_k) Σ_t T_q(r(t)) ∂C_k/∂ϑ_j(t)`.
pub fn assemble_gradient(terms: &[TermGradient<'_>], window: &WindowSpec, form: GradientForm) -> Result<Vec<C64>> {
    for (k, term) in terms.iter().enumerate() {
        if !(term.value > 0.0) || !term.value.is_finite() {
            return Err(Error::Collapsed { term: k, value: term.value });
        }
    }
    let n_params = terms.iter().flat_map(|t| t.contributions.iter().map(|(_, g)| g.len())).next().unwrap_or(0);
    let q = window.basis_size;
    let mut out = vec![C64::default(); n_params * q];
    for (k, term) in terms.iter().enumerate() {
        let weight = match form {
            GradientForm::NegLog => -1.0 / term.value,
            GradientForm::Product => terms.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, t)| t.value).product(),
        };
        for (t, grad) in &term.contributions {
            if grad.len() != n_params {
                return Err(Error::Dimension { expected: n_params, got: grad.len() });
            }
            let g = window.values_at(*t);
            for (row, gj) in out.chunks_exact_mut(q).zip(grad.iter()) {
                let scaled = gj * weight;
                for (o, gq) in row.iter_mut().zip(&g) {
                    *o += scaled * gq;
                }
            }
        }
    }
    Ok(out)
}
