//! AdamW on complex parameters viewed as interleaved real pairs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            errs.push(format!("optimizer.lr = {} must be positive", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                errs.push(format!("optimizer.{name} = {b} must lie in [0, 1)"));
            }
        }
        if !(self.eps > 0.0) {
            errs.push(format!("optimizer.eps = {} must be positive", self.eps));
        }
        if !(self.weight_decay >= 0.0) {
            errs.push(format!("optimizer.weight_decay = {} must be non-negative", self.weight_decay));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errs))
        }
    }
}

/// Moment estimates; one pair per real degree of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamWState {
    /// State for `n` complex parameters.
    pub fn new(n: usize, config: AdamWConfig) -> Self {
        Self { config, m: vec![0.0; 2 * n], v: vec![0.0; 2 * n], step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// One update with learning rate `lr`. The gradient is packed
/// (`∂f/∂Re + i ∂f/∂Im`); weight decay is applied to the parameters directly.
pub fn adamw_step(state: &mut AdamWState, params: &mut [C64], grad: &[C64], lr: f64) -> Result<()> {
    if params.len() != grad.len() || 2 * params.len() != state.m.len() {
        return Err(Error::Dimension { expected: state.m.len() / 2, got: grad.len() });
    }
    if grad.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    let c = state.config;
    state.step += 1;
    let bc1 = 1.0 - c.beta1.powf(state.step as f64);
    let bc2 = 1.0 - c.beta2.powf(state.step as f64);
    let decay = 1.0 - lr * c.weight_decay;
    for (k, (p, g)) in params.iter_mut().zip(grad).enumerate() {
        let mut upd = [0.0; 2];
        for (part, gv) in [g.re, g.im].into_iter().enumerate() {
            let i = 2 * k + part;
            state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * gv;
            state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * gv * gv;
            let mh = state.m[i] / bc1;
            let vh = state.v[i] / bc2;
            upd[part] = lr * mh / (vh.sqrt() + c.eps);
        }
        *p = C64::new(p.re * decay - upd[0], p.im * decay - upd[1]);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SchedulePolicy {
    Constant,
    /// Cosine decay to 1 % of the base rate at `total_epochs`.
    #[default]
    Cosine,
}

pub fn lr_schedule(epoch: usize, base: f64, policy: SchedulePolicy, total_epochs: usize) -> f64 {
    match policy {
        SchedulePolicy::Constant => base,
        SchedulePolicy::Cosine => {
            let floor = base / 100.0;
            let frac = if total_epochs == 0 { 1.0 } else { (epoch as f64 / total_epochs as f64).min(1.0) };
            floor + 0.5 * (base - floor) * (1.0 + (std::f64::consts::PI * frac).cos())
        }
    }
}
