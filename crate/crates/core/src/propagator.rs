//! Truncated Taylor expansions of `U(Δt) = exp(−iHΔt)`.
//!
//! A row `⟨x|U|·⟩` is built from repeated applications of the Hamiltonian
//! row; the `H²` part is the sum over intermediate configurations
//! `Σ_y H_xy H_yx'`. Duplicates are merged by adding amplitudes.

use indexmap::IndexMap;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{HamiltonianSpec, SpinConfig};

pub const MAX_ORDER: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSpec {
    pub dt: f64,
    pub order: usize,
    pub hamiltonian: HamiltonianSpec,
    /// Build rows of `U†` instead of `U`.
    pub dagger: bool,
}

impl PropagatorSpec {
    pub fn new(hamiltonian: HamiltonianSpec, dt: f64, order: usize) -> Result<Self> {
        let p = Self { dt, order, hamiltonian, dagger: false };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if !(self.dt >= 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("time step {} must be finite and non-negative", self.dt)));
        }
        self.hamiltonian.validate()
    }

    pub fn adjoint(&self) -> Self {
        Self { dagger: !self.dagger, ..self.clone() }
    }

    /// `(−iΔt)^m / m!` for `m = 0..=order`, conjugated for `U†`.
    pub fn coefficients(&self) -> Vec<C64> {
        let step = C64::new(0.0, if self.dagger { self.dt } else { -self.dt });
        let mut out = Vec::with_capacity(self.order + 1);
        let mut c = C64::new(1.0, 0.0);
        out.push(c);
        for m in 1..=self.order {
            c = c * step / m as f64;
            out.push(c);
        }
        out
    }
}

/// Nonzero entries of `⟨x|U_taylor|·⟩`, in first-reached order starting with `x`.
pub fn taylor_row(x: &SpinConfig, p: &PropagatorSpec) -> Result<Vec<(SpinConfig, C64)>> {
    p.validate()?;
    if x.len() != p.hamiltonian.sites {
        return Err(Error::Dimension { expected: p.hamiltonian.sites, got: x.len() });
    }
    let coeffs = p.coefficients();
    let mut row: IndexMap<u64, C64> = IndexMap::with_capacity(row_support_bound(p));
    row.insert(x.bits(), coeffs[0]);
    let mut power: IndexMap<u64, f64> = IndexMap::new();
    power.insert(x.bits(), 1.0);
    let l = x.len();
    for c in &coeffs[1..] {
        let mut next: IndexMap<u64, f64> = IndexMap::with_capacity(power.len() * (l + 1));
        for (&y, &a) in &power {
            let cy = SpinConfig::from_bits_unchecked(y, l);
            p.hamiltonian.for_each_connected(&cy, |z, h| {
                *next.entry(z.bits()).or_insert(0.0) += a * h;
            });
        }
        for (&z, &v) in &next {
            *row.entry(z).or_default() += c * v;
        }
        power = next;
    }
    Ok(row
        .into_iter()
        .filter(|(_, v)| *v != C64::default())
        .map(|(b, v)| (SpinConfig::from_bits_unchecked(b, l), v))
        .collect())
}

/// Upper bound on the length of a Taylor row: every configuration within
/// `order` spin flips of `x`.
pub fn row_support_bound(p: &PropagatorSpec) -> usize {
    if p.hamiltonian.h_x == 0.0 {
        return 1;
    }
    let l = p.hamiltonian.sites;
    let mut total = 0usize;
    let mut binom = 1usize;
    for d in 0..=p.order.min(l) {
        total += binom;
        binom = binom * (l - d) / (d + 1);
    }
    total
}

/// A sparse operator on the full `2^L` basis in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Assemble all Taylor rows.
    pub fn from_taylor(p: &PropagatorSpec) -> Result<Self> {
        let l = p.hamiltonian.sites;
        if l > crate::exact::DENSE_LIMIT {
            return Err(Error::Capacity { sites: l, limit: crate::exact::DENSE_LIMIT });
        }
        let dim = 1usize << l;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for x in SpinConfig::enumerate(l) {
            for (y, v) in taylor_row(&x, p)? {
                cols.push(y.bits() as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { dim, row_ptr, cols, vals })
    }

    /// Keep entries of a dense row-major matrix above `tol` in modulus.
    pub fn from_dense(dim: usize, entries: &[C64], tol: f64) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension { expected: dim * dim, got: entries.len() });
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = entries[r * dim + c];
                if v.norm() > tol {
                    cols.push(c as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { dim, row_ptr, cols, vals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|r| self.row(r).map(|(c, a)| a * v[c]).sum()).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut counts = vec![0usize; self.dim + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut fill = counts;
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![C64::default(); self.nnz()];
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                let pos = fill[c];
                cols[pos] = r as u32;
                vals[pos] = v.conj();
                fill[c] += 1;
            }
        }
        Self { dim: self.dim, row_ptr, cols, vals }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dim * self.dim];
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                out[r * self.dim + c] += v;
            }
        }
        out
    }
}
