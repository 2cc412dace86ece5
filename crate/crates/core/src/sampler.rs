//! Metropolis sampling of `|ψ(x)|²`.
//!
//! Chains are independent: chain `c` draws from a ChaCha8 generator seeded
//! with the run seed on stream `c`, so results do not depend on how chains
//! are scheduled across threads.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbm::{ln2cosh, RbmParams};
use crate::spin::SpinConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub n_chains: usize,
    /// Samples kept per chain.
    pub n_samples: usize,
    /// Sweeps discarded before recording.
    pub burn_in: usize,
    /// Sweeps between recorded samples.
    pub thinning: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { n_chains: 16, n_samples: 256, burn_in: 100, thinning: 2, seed: 0 }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.n_chains == 0 {
            errs.push("sampler.n_chains must be positive".to_string());
        }
        if self.n_samples == 0 {
            errs.push("sampler.n_samples must be positive".to_string());
        }
        if self.thinning == 0 {
            errs.push("sampler.thinning must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errs))
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn total_samples(&self) -> usize {
        self.n_chains * self.n_samples
    }
}

/// Deterministic seed for a sub-task, mixed from a base seed and indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut s = base;
    for &p in path {
        s = splitmix64(s ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    s
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Configurations with optional probability weights.
///
/// Without weights every sample counts equally and samples are stored chain
/// by chain. With weights the set is an exact quadrature (for instance the
/// full basis weighted by `|ψ|²/⟨ψ|ψ⟩`).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub sites: usize,
    pub configs: Vec<SpinConfig>,
    pub weights: Option<Vec<f64>>,
    pub n_chains: usize,
    pub seed: u64,
    pub acceptance: f64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Weight of sample `k`; uniform weights sum to 1.
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        match &self.weights {
            Some(w) => w[k],
            None => 1.0 / self.configs.len() as f64,
        }
    }

    /// The whole basis weighted by the normalized Born distribution of `params`.
    pub fn exact(params: &RbmParams) -> Result<Self> {
        let dense = crate::exact::densify_rbm(params)?;
        let n = dense.norm_sqr();
        let weights = dense.amplitudes().iter().map(|z| z.norm_sqr() / n).collect();
        Ok(Self {
            sites: params.sites(),
            configs: SpinConfig::enumerate(params.sites()).collect(),
            weights: Some(weights),
            n_chains: 1,
            seed: 0,
            acceptance: 1.0,
        })
    }

    /// Weighted mean of per-sample values and its standard error. Chains are
    /// treated as batches; exact quadratures have zero error.
    pub fn mean_and_error(&self, values: &[C64]) -> (C64, f64) {
        assert_eq!(values.len(), self.configs.len());
        let mean: C64 = values.iter().enumerate().map(|(k, v)| v * self.weight(k)).sum();
        if self.weights.is_some() {
            return (mean, 0.0);
        }
        let n = values.len();
        let err = if self.n_chains >= 2 && n.is_multiple_of(self.n_chains) {
            let per = n / self.n_chains;
            let c = self.n_chains as f64;
            let var: f64 =
                values.chunks_exact(per).map(|ch| (ch.iter().sum::<C64>() / per as f64 - mean).norm_sqr()).sum::<f64>()
                    / (c - 1.0);
            (var / c).sqrt()
        } else if n >= 2 {
            let var: f64 = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        (mean, err)
    }
}

/// Draw samples from `|ψ|²` with single-spin-flip Metropolis.
pub fn sample(params: &RbmParams, cfg: &ChainConfig) -> Result<SampleSet> {
    cfg.validate()?;
    params.validate()?;
    let chains: Vec<Result<(Vec<SpinConfig>, usize, usize)>> =
        (0..cfg.n_chains).into_par_iter().map(|c| run_chain(params, cfg, c as u64)).collect();
    let mut configs = Vec::with_capacity(cfg.total_samples());
    let (mut acc, mut tried) = (0usize, 0usize);
    for ch in chains {
        let (xs, a, t) = ch?;
        configs.extend(xs);
        acc += a;
        tried += t;
    }
    Ok(SampleSet {
        sites: params.sites(),
        configs,
        weights: None,
        n_chains: cfg.n_chains,
        seed: cfg.seed,
        acceptance: if tried == 0 { 0.0 } else { acc as f64 / tried as f64 },
    })
}

fn run_chain(params: &RbmParams, cfg: &ChainConfig, chain: u64) -> Result<(Vec<SpinConfig>, usize, usize)> {
    let l = params.sites();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain);
    let bits = if l == 64 { rng.random::<u64>() } else { rng.random::<u64>() & ((1u64 << l) - 1) };
    let mut x = SpinConfig::from_bits(bits, l)?;
    let mut theta = params.theta(&x);
    let mut out = Vec::with_capacity(cfg.n_samples);
    let (mut accepted, mut tried) = (0usize, 0usize);
    let sweeps = cfg.burn_in + cfg.n_samples * cfg.thinning;
    for sweep in 0..sweeps {
        for _ in 0..l {
            let i = rng.random_range(0..l);
            let s = x.spin(i);
            let mut logr = -2.0 * params.a[i] * s;
            for (t, col) in theta.iter().zip(params.w.chunks_exact(l)) {
                logr += ln2cosh(t - 2.0 * col[i] * s) - ln2cosh(*t);
            }
            let p = (2.0 * logr.re).exp();
            if p.is_nan() {
                return Err(Error::Numeric(format!("acceptance ratio is NaN at configuration {}", x.bits())));
            }
            tried += 1;
            if p >= 1.0 || rng.random::<f64>() < p {
                params.apply_flip(&x, i, &mut theta);
                x = x.flipped(i);
                accepted += 1;
            }
        }
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in + 1).is_multiple_of(cfg.thinning) {
            out.push(x);
        }
    }
    Ok((out, accepted, tried))
}

/// Mean of a local estimator over the samples, with its standard error.
pub fn estimate_observable<F>(samples: &SampleSet, params: &RbmParams, estimator: F) -> Result<(C64, f64)>
where
    F: Fn(&SpinConfig, &RbmParams) -> Result<C64> + Sync,
{
    if samples.is_empty() {
        return Err(Error::Config("empty sample set".into()));
    }
    let values: Vec<C64> = samples.configs.par_iter().map(|x| estimator(x, params)).collect::<Result<_>>()?;
    Ok(samples.mean_and_error(&values))
}

/// Estimate `⟨σˣ_site⟩` (1-based site) from samples of `|ψ|²`.
pub fn sigma_x_estimate(samples: &SampleSet, params: &RbmParams, site: usize) -> Result<(f64, f64)> {
    let (m, e) = estimate_observable(samples, params, |x, p| {
        crate::spin::sigma_x_local(x, site, |n, o| p.amplitude_ratio_incremental(n, o, &p.theta(o)))
    })?;
    Ok((m.re, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = RbmParams::zeros(5, 1);
        let cfg = ChainConfig { n_chains: 4, n_samples: 20, burn_in: 5, thinning: 1, seed: 17 };
        let a = sample(&p, &cfg).unwrap();
        let b = sample(&p, &cfg).unwrap();
        assert_eq!(a.configs, b.configs);
        assert_eq!(a.len(), 80);
        let c = sample(&p, &cfg.with_seed(18)).unwrap();
        assert_ne!(a.configs, c.configs);
    }

    #[test]
    fn uniform_state_accepts_everything() {
        let p = RbmParams::zeros(6, 1);
        let s = sample(&p, &ChainConfig { n_chains: 2, n_samples: 10, burn_in: 2, thinning: 1, seed: 1 }).unwrap();
        assert_eq!(s.acceptance, 1.0);
    }

    #[test]
    fn concentrated_state_stays_put() {
        // strong visible bias on every site: nearly all weight on all-up
        let mut p = RbmParams::zeros(4, 1);
        for a in p.a.iter_mut() {
            *a = C64::new(20.0, 0.0);
        }
        let s = sample(&p, &ChainConfig { n_chains: 3, n_samples: 50, burn_in: 20, thinning: 1, seed: 5 }).unwrap();
        assert!(s.configs.iter().all(|x| *x == SpinConfig::all_up(4)));
        let (sx, err) = sigma_x_estimate(&s, &p, 2).unwrap();
        assert!(sx.abs() < 1e-15 && err < 1e-15);
    }

    #[test]
    fn exact_quadrature_has_zero_error() {
        let p = RbmParams::zeros(3, 1);
        let s = SampleSet::exact(&p).unwrap();
        let w: f64 = (0..s.len()).map(|k| s.weight(k)).sum();
        assert!((w - 1.0).abs() < 1e-14);
        let (m, e) = sigma_x_estimate(&s, &p, 1).unwrap();
        assert!((m - 1.0).abs() < 1e-14);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[3]), derive_seed(9, &[3]));
    }
}
