//! Step fidelities and the interval objective.
//!
//! For consecutive times `t′ < t″` with `ψ′ = ψ(t′)`, `ψ″ = ψ(t″)`:
//!
//! ```text
//! A = E_{|ψ″|²}[ Σ_x′ U_xx′ ψ′(x′) / ψ″(x) ]
//! B = E_{|ψ′|²}[ Σ_y′ U†_yy′ ψ″(y′) / ψ′(y) ]
//! C = Re(A · B)
//! ```
//!
//! which equals `|⟨ψ″|U|ψ′⟩|² / (⟨ψ″|ψ″⟩⟨ψ′|ψ′⟩)` when the expectations are
//! exact. Each factor also yields the gradient of `ln C` with respect to the
//! parameters of the state it is sampled from:
//! `2 (E[C_loc conj O] / E[C_loc] − E[conj O])`, in packed form.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{assemble_gradient, CoeffTensor, GradientForm, TermGradient};
use crate::error::{Error, Result};
use crate::exact::{densify_rbm, ExactEvolver, StateVector, DENSE_LIMIT};
use crate::propagator::{taylor_row, PropagatorSpec, SparseOperator};
use crate::rbm::{ln2cosh_tanh, RbmParams};
use crate::sampler::{derive_seed, sample, ChainConfig, SampleSet};
use crate::spin::SpinConfig;

/// Chunk length for deterministic parallel reductions over configurations.
const CHUNK: usize = 128;

/// One fidelity term with gradients in packed form.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFidelityReport {
    pub value: f64,
    /// `∂C/∂ϑ(t′)`. Empty for the initial-overlap term, which has no earlier time.
    pub grad_t_prime: Vec<C64>,
    /// `∂C/∂ϑ(t″)`; for the initial overlap, the gradient at the window start.
    pub grad_t_double_prime: Vec<C64>,
    pub statistical_error: f64,
}

/// The state the network must reproduce at the start of an interval.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialTarget {
    Dense(StateVector),
    Rbm(RbmParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    /// Expectations over the full basis.
    Exact,
    /// Metropolis estimates.
    Mc(ChainConfig),
}

/// Value and gradient of the interval objective.
#[derive(Clone, Debug)]
pub struct IntervalLoss {
    /// `−Σ ln C_k` (or `1 − Π C_k` for the product form).
    pub loss: f64,
    /// Gradient of `loss` in coefficient space, packed.
    pub gradient: Vec<C64>,
    /// `C_0, C_1, …, C_K`.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Propagated statistical error of `loss`.
    pub loss_error: f64,
}

/// Full-basis propagator and its adjoint.
#[derive(Clone, Debug)]
pub struct ExactOperators {
    u: SparseOperator,
    ud: SparseOperator,
}

impl ExactOperators {
    pub fn taylor(p: &PropagatorSpec) -> Result<Self> {
        p.validate()?;
        let u = SparseOperator::from_taylor(p)?;
        let ud = u.conj_transpose();
        Ok(Self { u, ud })
    }

    /// The unitary `exp(−iHΔt)` itself, kept dense.
    pub fn exact(evolver: &ExactEvolver, dt: f64) -> Result<Self> {
        let dim = 1usize << evolver.hamiltonian().sites;
        let u = SparseOperator::from_dense(dim, &evolver.propagator_matrix(dt), 0.0)?;
        let ud = u.conj_transpose();
        Ok(Self { u, ud })
    }

    pub fn forward(&self) -> &SparseOperator {
        &self.u
    }

    pub fn adjoint(&self) -> &SparseOperator {
        &self.ud
    }
}

/// Amplitudes and hidden-unit `tanh` values over the full basis.
struct DenseRbm {
    psi: Vec<C64>,
    tanh: Vec<C64>,
    norm: f64,
}

fn dense_rbm(params: &RbmParams) -> Result<DenseRbm> {
    let l = params.sites();
    if l > DENSE_LIMIT {
        return Err(Error::Capacity { sites: l, limit: DENSE_LIMIT });
    }
    params.validate()?;
    let m = params.hidden();
    let dim = 1usize << l;
    let mut logs = vec![C64::default(); dim];
    let mut tanh = vec![C64::default(); dim * m];
    logs.par_chunks_mut(CHUNK).zip(tanh.par_chunks_mut(CHUNK * m)).enumerate().for_each(|(c, (lg, th))| {
        let mut theta = vec![C64::default(); m];
        for (k, (lv, tv)) in lg.iter_mut().zip(th.chunks_exact_mut(m)).enumerate() {
            let x = SpinConfig::from_bits_unchecked((c * CHUNK + k) as u64, l);
            params.theta_into(&x, &mut theta);
            let mut acc = params.visible_term(&x);
            for (t, o) in theta.iter().zip(tv.iter_mut()) {
                let (lc, tn) = ln2cosh_tanh(*t);
                acc += lc;
                *o = tn;
            }
            *lv = acc;
        }
    });
    let shift = logs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Numeric("log-amplitudes not finite".into()));
    }
    let psi: Vec<C64> = logs.iter().map(|z| (z - shift).exp()).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum();
    Ok(DenseRbm { psi, tanh, norm })
}

/// `Σ_k weight_k conj O(x_k)` over the full basis, reduced in fixed order.
fn contract_dense(params: &RbmParams, d: &DenseRbm, weights: &[C64]) -> Vec<C64> {
    let l = params.sites();
    let m = params.hidden();
    let n = params.n_params();
    let partial: Vec<Vec<C64>> = weights
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, ws)| {
            let mut g = vec![C64::default(); n];
            for (k, w) in ws.iter().enumerate() {
                let idx = c * CHUNK + k;
                if *w == C64::default() {
                    continue;
                }
                let x = SpinConfig::from_bits_unchecked(idx as u64, l);
                params.accumulate_conj_log_derivatives(&x, &d.tanh[idx * m..(idx + 1) * m], *w, &mut g);
            }
            g
        })
        .collect();
    sum_vectors(partial, n)
}

fn sum_vectors(parts: Vec<Vec<C64>>, n: usize) -> Vec<C64> {
    let mut out = vec![C64::default(); n];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// One factor of a fidelity term evaluated against the sampled side.
struct Factor {
    value: C64,
    error: f64,
    /// Packed `∂ ln C / ∂ϑ` of the sampled side.
    grad_log: Vec<C64>,
}

/// `A = ⟨ψ|u⟩/⟨ψ|ψ⟩` and the sampled-side gradient, over the full basis.
fn factor_dense(params: &RbmParams, d: &DenseRbm, u: &[C64]) -> Result<Factor> {
    let s: C64 = d.psi.iter().zip(u).map(|(p, v)| p.conj() * v).sum();
    let a = s / d.norm;
    if a == C64::default() || !a.re.is_finite() || !a.im.is_finite() {
        return Err(Error::DegenerateState(format!("overlap factor {a}")));
    }
    let inv = 1.0 / (d.norm * a);
    let weights: Vec<C64> =
        d.psi.iter().zip(u).map(|(p, v)| 2.0 * (p.conj() * v * inv - p.norm_sqr() / d.norm)).collect();
    Ok(Factor { value: a, error: 0.0, grad_log: contract_dense(params, d, &weights) })
}

/// Monte Carlo version of [`factor_dense`]: `C_loc(x) = Σ_x′ R_xx′ φ(x′)/ψ(x)`
/// where `R` is the identity (`rows = None`) or a Taylor propagator.
fn factor_mc(
    params: &RbmParams,
    samples: &SampleSet,
    other: &RbmParams,
    rows: Option<&PropagatorSpec>,
) -> Result<Factor> {
    if samples.is_empty() {
        return Err(Error::Config("empty sample set".into()));
    }
    let m = params.hidden();
    let n = params.n_params();
    let locals: Vec<(C64, Vec<C64>)> = samples
        .configs
        .par_iter()
        .map(|x| -> Result<(C64, Vec<C64>)> {
            let theta = params.theta(x);
            let mut log_psi = params.visible_term(x);
            let mut tanh = Vec::with_capacity(m);
            for t in &theta {
                let (lc, tn) = ln2cosh_tanh(*t);
                log_psi += lc;
                tanh.push(tn);
            }
            let theta_o = other.theta(x);
            let log_phi = other.log_amplitude_from_theta(x, &theta_o);
            let base = log_phi - log_psi;
            let cloc = match rows {
                None => base.exp(),
                Some(p) => taylor_row(x, p)?
                    .iter()
                    .map(|(y, u)| u * (base + other.log_ratio_incremental(y, x, &theta_o)).exp())
                    .sum(),
            };
            if !cloc.re.is_finite() || !cloc.im.is_finite() {
                return Err(Error::Numeric(format!("local estimator not finite at configuration {}", x.bits())));
            }
            Ok((cloc, tanh))
        })
        .collect::<Result<_>>()?;
    let values: Vec<C64> = locals.iter().map(|(c, _)| *c).collect();
    let (a, err) = samples.mean_and_error(&values);
    if a == C64::default() {
        return Err(Error::DegenerateState("overlap factor estimated as zero".into()));
    }
    let partial: Vec<Vec<C64>> = locals
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut g = vec![C64::default(); n];
            for (k, (cloc, tanh)) in chunk.iter().enumerate() {
                let idx = c * CHUNK + k;
                let w = 2.0 * samples.weight(idx) * (cloc / a - 1.0);
                params.accumulate_conj_log_derivatives(&samples.configs[idx], tanh, w, &mut g);
            }
            g
        })
        .collect();
    Ok(Factor { value: a, error: err, grad_log: sum_vectors(partial, n) })
}

fn combine(prev: Option<Factor>, next: Factor, other: C64, other_err: f64) -> Result<StepFidelityReport> {
    let (b, b_err, grad_prev) = match prev {
        Some(f) => (f.value, f.error, Some(f.grad_log)),
        None => (other, other_err, None),
    };
    let c = (next.value * b).re;
    if !c.is_finite() {
        return Err(Error::Numeric("fidelity is not finite".into()));
    }
    let err = (b.norm_sqr() * next.error * next.error + next.value.norm_sqr() * b_err * b_err).sqrt();
    Ok(StepFidelityReport {
        value: c,
        grad_t_prime: grad_prev.map(|g| g.iter().map(|v| v * c).collect()).unwrap_or_default(),
        grad_t_double_prime: next.grad_log.iter().map(|v| v * c).collect(),
        statistical_error: err,
    })
}

fn step_dense(
    prev: &RbmParams,
    dp: &DenseRbm,
    next: &RbmParams,
    dn: &DenseRbm,
    ops: &ExactOperators,
) -> Result<StepFidelityReport> {
    let u = ops.forward().matvec(&dp.psi);
    let fa = factor_dense(next, dn, &u)?;
    let w = ops.adjoint().matvec(&dn.psi);
    let fb = factor_dense(prev, dp, &w)?;
    combine(Some(fb), fa, C64::default(), 0.0)
}

/// `C` between two parameter sets over the full basis.
pub fn step_fidelity_params(prev: &RbmParams, next: &RbmParams, ops: &ExactOperators) -> Result<StepFidelityReport> {
    step_dense(prev, &dense_rbm(prev)?, next, &dense_rbm(next)?, ops)
}

/// `C` between two parameter sets estimated from samples of each.
pub fn step_fidelity_params_mc(
    prev: &RbmParams,
    next: &RbmParams,
    p: &PropagatorSpec,
    samples_prev: &SampleSet,
    samples_next: &SampleSet,
) -> Result<StepFidelityReport> {
    let fwd = PropagatorSpec { dagger: false, ..p.clone() };
    let fa = factor_mc(next, samples_next, prev, Some(&fwd))?;
    let fb = factor_mc(prev, samples_prev, next, Some(&fwd.adjoint()))?;
    combine(Some(fb), fa, C64::default(), 0.0)
}

/// `C_k` between `t′` and `t″` over the full basis.
pub fn step_fidelity_exact(
    c: &CoeffTensor,
    t_prime: f64,
    t_double_prime: f64,
    p: &PropagatorSpec,
) -> Result<StepFidelityReport> {
    let ops = ExactOperators::taylor(p)?;
    step_fidelity_params(&c.materialize(t_prime), &c.materialize(t_double_prime), &ops)
}

/// `C_k` between `t′` and `t″` from samples of `|ψ(t′)|²` and `|ψ(t″)|²`.
pub fn step_fidelity_mc(
    c: &CoeffTensor,
    t_prime: f64,
    t_double_prime: f64,
    p: &PropagatorSpec,
    samples_prime: &SampleSet,
    samples_double_prime: &SampleSet,
) -> Result<StepFidelityReport> {
    step_fidelity_params_mc(
        &c.materialize(t_prime),
        &c.materialize(t_double_prime),
        p,
        samples_prime,
        samples_double_prime,
    )
}

fn overlap_dense(params: &RbmParams, d: &DenseRbm, target: &[C64]) -> Result<StepFidelityReport> {
    let fa = factor_dense(params, d, target)?;
    let nt: f64 = target.iter().map(|z| z.norm_sqr()).sum();
    if !(nt > 0.0) {
        return Err(Error::DegenerateState("zero target state".into()));
    }
    let b: C64 = target.iter().zip(&d.psi).map(|(t, p)| t.conj() * p).sum::<C64>() / nt;
    combine(None, fa, b, 0.0)
}

/// `C_0` between `ψ(t_0)` and the target. Exact unless `samples` is given
/// together with an RBM target, in which case the pair holds samples of
/// `|ψ(t_0)|²` and of the target distribution.
pub fn initial_overlap_params(
    params: &RbmParams,
    target: &InitialTarget,
    samples: Option<(&SampleSet, &SampleSet)>,
) -> Result<StepFidelityReport> {
    match (target, samples) {
        (InitialTarget::Rbm(phi), Some((s_psi, s_phi))) => {
            let fa = factor_mc(params, s_psi, phi, None)?;
            let fb = factor_mc(phi, s_phi, params, None)?;
            combine(None, fa, fb.value, fb.error)
        }
        (InitialTarget::Rbm(phi), None) => overlap_dense(params, &dense_rbm(params)?, densify_rbm(phi)?.amplitudes()),
        (InitialTarget::Dense(v), _) => {
            if v.sites() != params.sites() {
                return Err(Error::Dimension { expected: 1 << params.sites(), got: v.amplitudes().len() });
            }
            overlap_dense(params, &dense_rbm(params)?, v.amplitudes())
        }
    }
}

/// `C_0` for a coefficient tensor at `t_0`.
pub fn initial_overlap(
    c: &CoeffTensor,
    t0: f64,
    target: &InitialTarget,
    samples: Option<(&SampleSet, &SampleSet)>,
) -> Result<StepFidelityReport> {
    initial_overlap_params(&c.materialize(t0), target, samples)
}

/// Evaluates interval objectives for a fixed propagator and mode.
#[derive(Clone, Debug)]
pub struct LossEvaluator {
    pub propagator: PropagatorSpec,
    pub mode: LossMode,
    pub form: GradientForm,
    ops: Option<ExactOperators>,
}

impl LossEvaluator {
    pub fn new(propagator: PropagatorSpec, mode: LossMode, form: GradientForm) -> Result<Self> {
        propagator.validate()?;
        let ops = match mode {
            LossMode::Exact => Some(ExactOperators::taylor(&propagator)?),
            LossMode::Mc(cfg) => {
                cfg.validate()?;
                None
            }
        };
        Ok(Self { propagator, mode, form, ops })
    }

    /// Exact mode with caller-supplied operators (for example the exact unitary).
    pub fn with_operators(propagator: PropagatorSpec, ops: ExactOperators, form: GradientForm) -> Result<Self> {
        propagator.validate()?;
        Ok(Self { propagator, mode: LossMode::Exact, form, ops: Some(ops) })
    }

    pub fn dt(&self) -> f64 {
        self.propagator.dt
    }

    /// Fidelity terms for the `steps` steps starting at `t0`, plus `C_0`.
    pub fn terms(
        &self,
        c: &CoeffTensor,
        t0: f64,
        steps: usize,
        target: &InitialTarget,
        seed: u64,
    ) -> Result<Vec<StepFidelityReport>> {
        let dt = self.dt();
        let params: Vec<RbmParams> = (0..=steps).map(|m| c.materialize(t0 + m as f64 * dt)).collect();
        match (&self.mode, &self.ops) {
            (LossMode::Exact, Some(ops)) => {
                let dense: Vec<DenseRbm> = params.par_iter().map(dense_rbm).collect::<Result<_>>()?;
                let target_amps = match target {
                    InitialTarget::Dense(v) => v.amplitudes().to_vec(),
                    InitialTarget::Rbm(phi) => densify_rbm(phi)?.into_amplitudes(),
                };
                if target_amps.len() != dense[0].psi.len() {
                    return Err(Error::Dimension { expected: dense[0].psi.len(), got: target_amps.len() });
                }
                let mut out = vec![overlap_dense(&params[0], &dense[0], &target_amps)?];
                let steps: Vec<StepFidelityReport> = (1..=steps)
                    .into_par_iter()
                    .map(|k| step_dense(&params[k - 1], &dense[k - 1], &params[k], &dense[k], ops))
                    .collect::<Result<_>>()?;
                out.extend(steps);
                Ok(out)
            }
            (LossMode::Mc(cfg), _) => {
                let samples: Vec<SampleSet> = params
                    .iter()
                    .enumerate()
                    .map(|(m, p)| sample(p, &cfg.with_seed(derive_seed(seed, &[m as u64]))))
                    .collect::<Result<_>>()?;
                let first = match target {
                    InitialTarget::Rbm(phi) => {
                        let s_phi = sample(phi, &cfg.with_seed(derive_seed(seed, &[u64::MAX])))?;
                        initial_overlap_params(&params[0], target, Some((&samples[0], &s_phi)))?
                    }
                    InitialTarget::Dense(_) => initial_overlap_params(&params[0], target, None)?,
                };
                let mut out = vec![first];
                for k in 1..=steps {
                    out.push(step_fidelity_params_mc(
                        &params[k - 1],
                        &params[k],
                        &self.propagator,
                        &samples[k - 1],
                        &samples[k],
                    )?);
                }
                Ok(out)
            }
            (LossMode::Exact, None) => unreachable!("exact evaluator always holds operators"),
        }
    }

    /// Objective and coefficient gradient over one interval.
    pub fn interval_loss(
        &self,
        c: &CoeffTensor,
        t0: f64,
        steps: usize,
        target: &InitialTarget,
        seed: u64,
    ) -> Result<IntervalLoss> {
        let reports = self.terms(c, t0, steps, target, seed)?;
        let dt = self.dt();
        let terms: Vec<TermGradient<'_>> = reports
            .iter()
            .enumerate()
            .map(|(k, r)| {
                if k == 0 {
                    TermGradient { value: r.value, contributions: vec![(t0, &r.grad_t_double_prime[..])] }
                } else {
                    let t1 = t0 + (k - 1) as f64 * dt;
                    let t2 = t0 + k as f64 * dt;
                    TermGradient {
                        value: r.value,
                        contributions: vec![(t1, &r.grad_t_prime[..]), (t2, &r.grad_t_double_prime[..])],
                    }
                }
            })
            .collect();
        let mut gradient = assemble_gradient(&terms, c.window(), self.form)?;
        let values: Vec<f64> = reports.iter().map(|r| r.value).collect();
        let errors: Vec<f64> = reports.iter().map(|r| r.statistical_error).collect();
        let loss = match self.form {
            GradientForm::NegLog => -values.iter().map(|v| v.ln()).sum::<f64>(),
            GradientForm::Product => {
                gradient.iter_mut().for_each(|g| *g = -*g);
                1.0 - values.iter().product::<f64>()
            }
        };
        let loss_error = values.iter().zip(&errors).map(|(v, e)| (e / v).powi(2)).sum::<f64>().sqrt();
        Ok(IntervalLoss { loss, gradient, values, errors, loss_error })
    }

    /// `−ln C` between fixed `prev` and trainable `next`, with its packed
    /// gradient in `next`'s parameters.
    pub fn step_loss(
        &self,
        prev: &RbmParams,
        next: &RbmParams,
        seed: u64,
    ) -> Result<(f64, Vec<C64>, StepFidelityReport)> {
        let r = match (&self.mode, &self.ops) {
            (LossMode::Exact, Some(ops)) => step_fidelity_params(prev, next, ops)?,
            (LossMode::Mc(cfg), _) => {
                let sp = sample(prev, &cfg.with_seed(derive_seed(seed, &[0])))?;
                let sn = sample(next, &cfg.with_seed(derive_seed(seed, &[1])))?;
                step_fidelity_params_mc(prev, next, &self.propagator, &sp, &sn)?
            }
            (LossMode::Exact, None) => unreachable!("exact evaluator always holds operators"),
        };
        if !(r.value > 0.0) {
            return Err(Error::Collapsed { term: 1, value: r.value });
        }
        let g = r.grad_t_double_prime.iter().map(|v| -v / r.value).collect();
        Ok((-r.value.ln(), g, r))
    }
}

/// Convenience wrapper building a one-off [`LossEvaluator`].
pub fn interval_loss(
    c: &CoeffTensor,
    t0: f64,
    steps: usize,
    p: &PropagatorSpec,
    mode: LossMode,
    target: &InitialTarget,
    seed: u64,
) -> Result<IntervalLoss> {
    LossEvaluator::new(p.clone(), mode, GradientForm::NegLog)?.interval_loss(c, t0, steps, target, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::WindowSpec;
    use crate::exact::build_initial_state;
    use crate::spin::HamiltonianSpec;

    fn prop(l: usize, dt: f64) -> PropagatorSpec {
        PropagatorSpec::new(HamiltonianSpec::new(l, 1.0, 0.3, 0.3).unwrap(), dt, 2).unwrap()
    }

    #[test]
    fn zero_step_identical_states_give_unit_fidelity() {
        let p = prop(4, 0.0);
        let c =
            CoeffTensor::initialized(&RbmParams::zeros(4, 1), WindowSpec::new(0.0, 1.0, 3).unwrap(), 0.05, 3).unwrap();
        let r = step_fidelity_exact(&c, 0.3, 0.3, &p).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.grad_t_prime.iter().chain(&r.grad_t_double_prime).all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn initial_overlap_with_matching_target_is_one() {
        let params = RbmParams::zeros(5, 1);
        let r = initial_overlap_params(&params, &InitialTarget::Dense(build_initial_state(5).unwrap()), None).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert!(r.grad_t_prime.is_empty());
        let r2 = initial_overlap_params(&params, &InitialTarget::Rbm(RbmParams::zeros(5, 1)), None).unwrap();
        assert!((r2.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mc_identity_overlap_of_equal_states() {
        let params = RbmParams::zeros(4, 1);
        let cfg = ChainConfig { n_chains: 2, n_samples: 16, burn_in: 4, thinning: 1, seed: 2 };
        let s = sample(&params, &cfg).unwrap();
        let r = initial_overlap_params(&params, &InitialTarget::Rbm(params.clone()), Some((&s, &s))).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interval_loss_is_nonnegative_for_taylor_steps() {
        let l = 4;
        let p = prop(l, 0.05);
        let w = WindowSpec::new(0.0, 0.2, 2).unwrap();
        let c = CoeffTensor::initialized(&RbmParams::zeros(l, 1), w, 0.02, 7).unwrap();
        let target = InitialTarget::Dense(build_initial_state(l).unwrap());
        let out = interval_loss(&c, 0.0, 4, &p, LossMode::Exact, &target, 0).unwrap();
        assert_eq!(out.values.len(), 5);
        assert!(out.loss.is_finite());
        assert_eq!(out.gradient.len(), c.as_slice().len());
    }
}
