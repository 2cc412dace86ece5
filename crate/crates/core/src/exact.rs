//! Dense state vectors and exact time evolution for small chains.

use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::rbm::RbmParams;
use crate::spin::{HamiltonianSpec, SpinConfig};

/// Largest chain handled with dense `2^L` vectors.
pub const DENSE_LIMIT: usize = 14;

/// Amplitudes over the full basis, indexed by configuration code.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    sites: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(sites: usize, amps: Vec<C64>) -> Result<Self> {
        if sites == 0 || sites > DENSE_LIMIT {
            return Err(Error::Capacity { sites, limit: DENSE_LIMIT });
        }
        if amps.len() != 1 << sites {
            return Err(Error::Dimension { expected: 1 << sites, got: amps.len() });
        }
        Ok(Self { sites, amps })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateState(format!("norm² = {n}")));
        }
        let s = 1.0 / n.sqrt();
        Ok(Self { sites: self.sites, amps: self.amps.iter().map(|z| z * s).collect() })
    }

    /// `⟨σˣ_site⟩` for a 1-based site.
    pub fn sigma_x(&self, site: usize) -> Result<f64> {
        if site == 0 || site > self.sites {
            return Err(Error::Index { index: site, len: self.sites });
        }
        let mask = 1usize << (site - 1);
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::DegenerateState("zero vector".into()));
        }
        let s: C64 = self.amps.iter().enumerate().map(|(x, a)| a.conj() * self.amps[x ^ mask]).sum();
        Ok(s.re / n)
    }
}

/// The product state with every spin along +x: equal real amplitudes, unit norm.
pub fn build_initial_state(sites: usize) -> Result<StateVector> {
    if sites == 0 || sites > DENSE_LIMIT {
        return Err(Error::Capacity { sites, limit: DENSE_LIMIT });
    }
    let dim = 1usize << sites;
    let a = 1.0 / (dim as f64).sqrt();
    StateVector::new(sites, vec![C64::new(a, 0.0); dim])
}

/// `1 − |⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn infidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.sites != b.sites {
        return Err(Error::Dimension { expected: a.amps.len(), got: b.amps.len() });
    }
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if !(na > 0.0) || !(nb > 0.0) {
        return Err(Error::DegenerateState("zero vector in infidelity".into()));
    }
    let f = a.inner(b).norm_sqr() / (na * nb);
    Ok((1.0 - f).max(0.0))
}

/// Unnormalized RBM amplitudes on every configuration, shifted by the largest
/// log-modulus so that the biggest entry has modulus 1.
pub fn densify_rbm(params: &RbmParams) -> Result<StateVector> {
    let l = params.sites();
    if l > DENSE_LIMIT {
        return Err(Error::Capacity { sites: l, limit: DENSE_LIMIT });
    }
    params.validate()?;
    let logs: Vec<C64> = SpinConfig::enumerate(l).map(|x| params.log_amplitude_unchecked(&x)).collect();
    let shift = logs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Numeric("log-amplitudes not finite".into()));
    }
    StateVector::new(l, logs.iter().map(|z| (z - shift).exp()).collect())
}

/// Dense real Hamiltonian matrix.
pub fn dense_hamiltonian(h: &HamiltonianSpec) -> Result<DMatrix<f64>> {
    h.validate()?;
    if h.sites > DENSE_LIMIT {
        return Err(Error::Capacity { sites: h.sites, limit: DENSE_LIMIT });
    }
    let dim = 1usize << h.sites;
    let mut m = DMatrix::zeros(dim, dim);
    for x in SpinConfig::enumerate(h.sites) {
        h.for_each_connected(&x, |y, v| m[(x.bits() as usize, y.bits() as usize)] += v);
    }
    Ok(m)
}

/// Spectral decomposition `H = V diag(E) Vᵀ`.
#[derive(Clone, Debug)]
pub struct ExactEvolver {
    spec: HamiltonianSpec,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl ExactEvolver {
    pub fn new(h: &HamiltonianSpec) -> Result<Self> {
        let m = dense_hamiltonian(h)?;
        let eig = SymmetricEigen::new(m);
        Ok(Self { spec: h.clone(), energies: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    /// Shared decomposition for `h`, computed on first use.
    pub fn cached(h: &HamiltonianSpec) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<Vec<Arc<ExactEvolver>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        if let Some(e) = cache.lock().unwrap().iter().find(|e| &e.spec == h) {
            return Ok(e.clone());
        }
        let e = Arc::new(Self::new(h)?);
        cache.lock().unwrap().push(e.clone());
        Ok(e)
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn energies(&self) -> &[f64] {
        self.energies.as_slice()
    }

    /// `exp(−iH dt) v`.
    pub fn propagate(&self, v: &StateVector, dt: f64) -> Result<StateVector> {
        if v.sites != self.spec.sites {
            return Err(Error::Dimension { expected: 1 << self.spec.sites, got: v.amps.len() });
        }
        let re = DVector::from_iterator(v.amps.len(), v.amps.iter().map(|z| z.re));
        let im = DVector::from_iterator(v.amps.len(), v.amps.iter().map(|z| z.im));
        let cr = self.vectors.tr_mul(&re);
        let ci = self.vectors.tr_mul(&im);
        let mut pr = DVector::zeros(cr.len());
        let mut pi = DVector::zeros(cr.len());
        for k in 0..cr.len() {
            let phase = C64::from_polar(1.0, -self.energies[k] * dt);
            let z = C64::new(cr[k], ci[k]) * phase;
            pr[k] = z.re;
            pi[k] = z.im;
        }
        let out_r = &self.vectors * pr;
        let out_i = &self.vectors * pi;
        let amps: Vec<C64> = out_r.iter().zip(out_i.iter()).map(|(&a, &b)| C64::new(a, b)).collect();
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite amplitude after propagation".into()));
        }
        StateVector::new(v.sites, amps)
    }

    /// Dense row-major `exp(−iH dt)`.
    pub fn propagator_matrix(&self, dt: f64) -> Vec<C64> {
        let dim = self.energies.len();
        let mut vc = self.vectors.clone();
        let mut vs = self.vectors.clone();
        for k in 0..dim {
            let (s, c) = (-self.energies[k] * dt).sin_cos();
            vc.column_mut(k).scale_mut(c);
            vs.column_mut(k).scale_mut(s);
        }
        let re = vc * self.vectors.transpose();
        let im = vs * self.vectors.transpose();
        let mut out = vec![C64::default(); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] = C64::new(re[(r, c)], im[(r, c)]);
            }
        }
        out
    }
}

/// `exp(−iH dt) v` using the cached decomposition of `h`.
pub fn exact_propagate(v: &StateVector, h: &HamiltonianSpec, dt: f64) -> Result<StateVector> {
    ExactEvolver::cached(h)?.propagate(v, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_is_normalized_product() {
        let v = build_initial_state(3).unwrap();
        assert_eq!(v.amplitudes().len(), 8);
        for a in v.amplitudes() {
            assert!((a.re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        }
        assert!((v.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((v.sigma_x(2).unwrap() - 1.0).abs() < 1e-14);
        assert!(build_initial_state(15).is_err());
        assert!(build_initial_state(0).is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let h = HamiltonianSpec::new(4, 1.0, 0.3, 0.3).unwrap();
        let v = build_initial_state(4).unwrap();
        let w = exact_propagate(&v, &h, 0.0).unwrap();
        for (a, b) in v.amplitudes().iter().zip(w.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn product_state_without_coupling() {
        // J = h_z = 0: each spin precesses independently and stays along x
        let h = HamiltonianSpec::new(3, 0.0, 0.7, 0.0).unwrap();
        let v = build_initial_state(3).unwrap();
        let w = exact_propagate(&v, &h, 0.9).unwrap();
        assert!(infidelity(&v, &w).unwrap() < 1e-13);
    }

    #[test]
    fn infidelity_scale_invariant() {
        let v = build_initial_state(3).unwrap();
        let w = StateVector::new(3, v.amplitudes().iter().map(|z| z * C64::new(0.0, 3.0)).collect()).unwrap();
        assert!(infidelity(&v, &w).unwrap() < 1e-15);
    }

    #[test]
    fn densify_zero_rbm_is_uniform() {
        let p = RbmParams::zeros(4, 1);
        let s = densify_rbm(&p).unwrap();
        let v = build_initial_state(4).unwrap();
        assert!(infidelity(&s, &v).unwrap() < 1e-15);
    }
}
