//! Spin configurations and the tilted Ising chain
//!
//! ```text
//! H = J Σ_{i<L} σᶻ_i σᶻ_{i+1} − Σ_i (h_x σˣ_i + h_z σᶻ_i)
//! ```
//!
//! with open boundaries. Configurations are bit-encoded: bit `i` set means
//! spin `i` (0-based) points up (+1).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain the bit encoding supports.
pub const MAX_SITES: usize = 63;

/// A computational-basis label `x = (x_1, …, x_L)` with `x_i ∈ {−1, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    bits: u64,
    len: usize,
}

impl SpinConfig {
    /// Decode from the integer encoding. Bits above `len` are rejected.
    pub fn from_bits(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_SITES {
            return Err(Error::Config(format!("chain length {len} outside 1..={MAX_SITES}")));
        }
        if bits >> len != 0 {
            return Err(Error::Config(format!("code {bits} has bits beyond site {len}")));
        }
        Ok(Self { bits, len })
    }

    pub(crate) fn from_bits_unchecked(bits: u64, len: usize) -> Self {
        debug_assert!(bits >> len == 0);
        Self { bits, len }
    }

    /// Build from explicit ±1 spins.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                other => return Err(Error::Config(format!("spin value {other} at site {} is not ±1", i + 1))),
            }
        }
        Self::from_bits(bits, spins.len())
    }

    pub fn all_up(len: usize) -> Self {
        Self::from_bits_unchecked(if len == 64 { u64::MAX } else { (1u64 << len) - 1 }, len)
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Spin at 0-based position `i` as ±1.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.bits >> i & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.spin(i) as i8).collect()
    }

    /// Flip the 0-based site `i`.
    #[inline]
    pub fn flipped(&self, i: usize) -> Self {
        Self { bits: self.bits ^ (1 << i), len: self.len }
    }

    /// 0-based positions where `self` and `other` differ.
    pub fn diff_sites(&self, other: &SpinConfig) -> impl Iterator<Item = usize> {
        let mut d = self.bits ^ other.bits;
        std::iter::from_fn(move || {
            if d == 0 {
                None
            } else {
                let i = d.trailing_zeros() as usize;
                d &= d - 1;
                Some(i)
            }
        })
    }

    /// All `2^len` configurations in code order.
    pub fn enumerate(len: usize) -> impl Iterator<Item = SpinConfig> {
        (0..1u64 << len).map(move |bits| SpinConfig { bits, len })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
}

/// Parameters of the tilted Ising chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub sites: usize,
    pub coupling: f64,
    pub h_x: f64,
    pub h_z: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl HamiltonianSpec {
    pub fn new(sites: usize, coupling: f64, h_x: f64, h_z: f64) -> Result<Self> {
        let spec = Self { sites, coupling, h_x, h_z, boundary: Boundary::Open };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites > MAX_SITES {
            return Err(Error::Config(format!("L = {} outside 2..={MAX_SITES}", self.sites)));
        }
        if ![self.coupling, self.h_x, self.h_z].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("non-finite Hamiltonian parameter".into()));
        }
        Ok(())
    }

    /// Number of σᶻσᶻ bonds.
    pub fn bonds(&self) -> usize {
        match self.boundary {
            Boundary::Open => self.sites - 1,
        }
    }

    fn check(&self, x: &SpinConfig) -> Result<()> {
        if x.len() != self.sites {
            return Err(Error::Dimension { expected: self.sites, got: x.len() });
        }
        Ok(())
    }

    /// `J Σ x_i x_{i+1} − h_z Σ x_i`.
    pub fn diagonal_element(&self, x: &SpinConfig) -> Result<f64> {
        self.check(x)?;
        Ok(self.diagonal_unchecked(x))
    }

    #[inline]
    pub(crate) fn diagonal_unchecked(&self, x: &SpinConfig) -> f64 {
        let l = self.sites;
        let bits = x.bits();
        // aligned neighbours: bit i == bit i+1
        let mask = (1u64 << (l - 1)) - 1;
        let anti = ((bits ^ (bits >> 1)) & mask).count_ones() as f64;
        let zz = (l - 1) as f64 - 2.0 * anti;
        let up = bits.count_ones() as f64;
        let z = 2.0 * up - l as f64;
        self.coupling * zz - self.h_z * z
    }

    /// The nonzero entries of row `x`: diagonal first, then one entry per
    /// flipped site in ascending order (omitted when `h_x == 0`).
    pub fn connected_elements(&self, x: &SpinConfig) -> Result<Vec<(SpinConfig, f64)>> {
        self.check(x)?;
        let mut row = Vec::with_capacity(self.sites + 1);
        self.for_each_connected(x, |y, h| row.push((y, h)));
        Ok(row)
    }

    #[inline]
    pub(crate) fn for_each_connected(&self, x: &SpinConfig, mut f: impl FnMut(SpinConfig, f64)) {
        f(*x, self.diagonal_unchecked(x));
        if self.h_x != 0.0 {
            for i in 0..self.sites {
                f(x.flipped(i), -self.h_x);
            }
        }
    }

    /// 1-based middle site `⌈L/2⌉`.
    pub fn middle_site(&self) -> usize {
        self.sites.div_ceil(2)
    }
}

/// Local estimator of `σˣ_site` (1-based site): `ψ(x with site flipped) / ψ(x)`.
pub fn sigma_x_local<F>(x: &SpinConfig, site: usize, psi_ratio: F) -> Result<C64>
where
    F: FnOnce(&SpinConfig, &SpinConfig) -> C64,
{
    if site == 0 || site > x.len() {
        return Err(Error::Index { index: site, len: x.len() });
    }
    let flipped = x.flipped(site - 1);
    Ok(psi_ratio(&flipped, x))
}
