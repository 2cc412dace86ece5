//! Run configuration: a TOML document with flat sections.
//!
//! ```toml
//! [model]      # L, J, h_x, h_z
//! [ansatz]     # alpha, Q, init_noise
//! [grid]       # dt, tau, T, t_max, taylor_order, coarse_dt
//! [run]        # mode, seed, out, eval_times
//! [sampler]    # n_chains, n_samples, burn_in, thinning
//! [optimizer]  # lr, beta1, beta2, eps, weight_decay, epochs, schedule,
//!              # loss_tol, patience, rel_tol, gradient
//! ```
//!
//! Physics keys have no defaults. All problems in a document are reported
//! together.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::ansatz::GradientForm;
use crate::driver::{TimeGrid, TrainConfig};
use crate::error::{Error, Result};
use crate::exact::DENSE_LIMIT;
use crate::optim::SchedulePolicy;
use crate::propagator::MAX_ORDER;
use crate::sampler::ChainConfig;
use crate::spin::{HamiltonianSpec, MAX_SITES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Mode::Exact),
            "mc" => Some(Mode::Mc),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub sites: usize,
    pub coupling: f64,
    pub h_x: f64,
    pub h_z: f64,
}

impl ModelConfig {
    pub fn hamiltonian(&self) -> Result<HamiltonianSpec> {
        HamiltonianSpec::new(self.sites, self.coupling, self.h_x, self.h_z)
    }

    pub fn middle_site(&self) -> usize {
        self.sites.div_ceil(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub alpha: usize,
    /// Basis size `Q`.
    pub basis_size: usize,
    pub init_noise: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub ansatz: AnsatzConfig,
    pub grid: TimeGrid,
    pub grid_order: usize,
    /// Train each interval at this step first, then refine at `grid.dt`.
    pub coarse_dt: Option<f64>,
    pub mode: Mode,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub eval_times: Vec<f64>,
    /// Chain settings; the seed is taken from `seed`.
    pub sampler: ChainConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    /// Defaults for everything except the physics parameters given here.
    pub fn new(model: ModelConfig, ansatz: AnsatzConfig, grid: TimeGrid) -> Self {
        Self {
            model,
            ansatz,
            grid,
            grid_order: 2,
            coarse_dt: None,
            mode: Mode::Exact,
            seed: 0,
            out: None,
            eval_times: Vec::new(),
            sampler: ChainConfig::default(),
            train: TrainConfig::default(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let l = self.model.sites;
        if !(2..=MAX_SITES).contains(&l) {
            errs.push(format!("model.L = {l} outside 2..={MAX_SITES}"));
        }
        if self.mode == Mode::Exact && l > DENSE_LIMIT {
            errs.push(format!(
                "model.L = {l} exceeds {DENSE_LIMIT}, the largest chain supported in exact mode; use mode = \"mc\""
            ));
        }
        for (name, v) in [("J", self.model.coupling), ("h_x", self.model.h_x), ("h_z", self.model.h_z)] {
            if !v.is_finite() {
                errs.push(format!("model.{name} = {v} is not finite"));
            }
        }
        if self.ansatz.alpha == 0 {
            errs.push("ansatz.alpha must be at least 1".into());
        }
        if self.ansatz.basis_size == 0 {
            errs.push("ansatz.Q must be at least 1".into());
        }
        if !(self.ansatz.init_noise >= 0.0) || !self.ansatz.init_noise.is_finite() {
            errs.push(format!("ansatz.init_noise = {} must be non-negative", self.ansatz.init_noise));
        }
        errs.extend(self.grid.violations());
        if self.grid_order == 0 || self.grid_order > MAX_ORDER {
            errs.push(format!("grid.taylor_order = {} outside 1..={MAX_ORDER}", self.grid_order));
        }
        if let Some(c) = self.coarse_dt {
            let r = c / self.grid.dt;
            if !(c > 0.0) || (r - r.round()).abs() > 1e-9 * r.max(1.0) || r.round() < 1.0 {
                errs.push(format!("grid.coarse_dt = {c} is not an integer multiple of grid.dt = {}", self.grid.dt));
            } else {
                let rt = self.grid.tau / c;
                if (rt - rt.round()).abs() > 1e-9 * rt.max(1.0) || rt.round() < 1.0 {
                    errs.push(format!(
                        "grid.tau = {} is not an integer multiple of grid.coarse_dt = {c}",
                        self.grid.tau
                    ));
                }
            }
        }
        for t in &self.eval_times {
            if !(t >= &0.0) || !t.is_finite() {
                errs.push(format!("run.eval_times entry {t} must be finite and non-negative"));
            }
        }
        if let Err(Error::Invalid(e)) = self.sampler.validate() {
            errs.extend(e);
        }
        if let Err(Error::Invalid(e)) = self.train.adam.validate() {
            errs.extend(e);
        }
        if !(self.train.loss_tol.is_finite()) || !(self.train.rel_tol.is_finite()) {
            errs.push("optimizer.loss_tol and optimizer.rel_tol must be finite".into());
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errs))
        }
    }

    /// Canonical TOML text; [`parse_config`] maps it back to an equal value.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let f = |v: f64| format!("{v:?}");
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "L = {}", self.model.sites);
        let _ = writeln!(s, "J = {}", f(self.model.coupling));
        let _ = writeln!(s, "h_x = {}", f(self.model.h_x));
        let _ = writeln!(s, "h_z = {}", f(self.model.h_z));
        let _ = writeln!(s, "\n[ansatz]");
        let _ = writeln!(s, "alpha = {}", self.ansatz.alpha);
        let _ = writeln!(s, "Q = {}", self.ansatz.basis_size);
        let _ = writeln!(s, "init_noise = {}", f(self.ansatz.init_noise));
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "dt = {}", f(self.grid.dt));
        let _ = writeln!(s, "tau = {}", f(self.grid.tau));
        let _ = writeln!(s, "T = {}", f(self.grid.window));
        let _ = writeln!(s, "t_max = {}", f(self.grid.t_max));
        let _ = writeln!(s, "taylor_order = {}", self.grid_order);
        if let Some(c) = self.coarse_dt {
            let _ = writeln!(s, "coarse_dt = {}", f(c));
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "mode = \"{}\"", self.mode.as_str());
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(o) = &self.out {
            let _ = writeln!(s, "out = {}", Value::String(o.display().to_string()));
        }
        let times: Vec<String> = self.eval_times.iter().map(|&t| f(t)).collect();
        let _ = writeln!(s, "eval_times = [{}]", times.join(", "));
        let _ = writeln!(s, "\n[sampler]");
        let _ = writeln!(s, "n_chains = {}", self.sampler.n_chains);
        let _ = writeln!(s, "n_samples = {}", self.sampler.n_samples);
        let _ = writeln!(s, "burn_in = {}", self.sampler.burn_in);
        let _ = writeln!(s, "thinning = {}", self.sampler.thinning);
        let t = &self.train;
        let _ = writeln!(s, "\n[optimizer]");
        let _ = writeln!(s, "lr = {}", f(t.adam.lr));
        let _ = writeln!(s, "beta1 = {}", f(t.adam.beta1));
        let _ = writeln!(s, "beta2 = {}", f(t.adam.beta2));
        let _ = writeln!(s, "eps = {}", f(t.adam.eps));
        let _ = writeln!(s, "weight_decay = {}", f(t.adam.weight_decay));
        let _ = writeln!(s, "epochs = {}", t.epochs);
        let sched = match t.schedule {
            SchedulePolicy::Constant => "constant",
            SchedulePolicy::Cosine => "cosine",
        };
        let _ = writeln!(s, "schedule = \"{sched}\"");
        let _ = writeln!(s, "loss_tol = {}", f(t.loss_tol));
        let _ = writeln!(s, "patience = {}", t.patience);
        let _ = writeln!(s, "rel_tol = {}", f(t.rel_tol));
        let form = match t.form {
            GradientForm::NegLog => "neglog",
            GradientForm::Product => "product",
        };
        let _ = writeln!(s, "gradient = \"{form}\"");
        s
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["L", "J", "h_x", "h_z"]),
    ("ansatz", &["alpha", "Q", "init_noise"]),
    ("grid", &["dt", "tau", "T", "t_max", "taylor_order", "coarse_dt"]),
    ("run", &["mode", "seed", "out", "eval_times"]),
    ("sampler", &["n_chains", "n_samples", "burn_in", "thinning"]),
    (
        "optimizer",
        &[
            "lr",
            "beta1",
            "beta2",
            "eps",
            "weight_decay",
            "epochs",
            "schedule",
            "loss_tol",
            "patience",
            "rel_tol",
            "gradient",
        ],
    ),
];

const REQUIRED: &[(&str, &str)] = &[
    ("model", "L"),
    ("model", "h_x"),
    ("model", "h_z"),
    ("ansatz", "alpha"),
    ("ansatz", "Q"),
    ("grid", "dt"),
    ("grid", "tau"),
    ("grid", "T"),
    ("grid", "t_max"),
];

struct Reader<'a> {
    doc: &'a Table,
    errs: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&self, sec: &str, key: &str) -> Option<&'a Value> {
        self.doc.get(sec).and_then(|s| s.as_table()).and_then(|t| t.get(key))
    }

    fn float(&mut self, sec: &str, key: &str, default: Option<f64>) -> f64 {
        match self.get(sec, key) {
            Some(Value::Float(v)) => *v,
            Some(Value::Integer(v)) => *v as f64,
            Some(other) => {
                self.errs.push(format!("{sec}.{key} must be a number, found {}", other.type_str()));
                f64::NAN
            }
            None => default.unwrap_or_else(|| {
                self.errs.push(format!("missing required key {sec}.{key}"));
                f64::NAN
            }),
        }
    }

    fn opt_float(&mut self, sec: &str, key: &str) -> Option<f64> {
        self.get(sec, key)?;
        Some(self.float(sec, key, None))
    }

    fn uint(&mut self, sec: &str, key: &str, default: Option<u64>) -> u64 {
        match self.get(sec, key) {
            Some(Value::Integer(v)) if *v >= 0 => *v as u64,
            Some(Value::Integer(v)) => {
                self.errs.push(format!("{sec}.{key} = {v} must be non-negative"));
                0
            }
            Some(other) => {
                self.errs.push(format!("{sec}.{key} must be an integer, found {}", other.type_str()));
                0
            }
            None => default.unwrap_or_else(|| {
                self.errs.push(format!("missing required key {sec}.{key}"));
                0
            }),
        }
    }

    fn string(&mut self, sec: &str, key: &str) -> Option<String> {
        match self.get(sec, key) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.errs.push(format!("{sec}.{key} must be a string, found {}", other.type_str()));
                None
            }
            None => None,
        }
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut r = Reader { doc: &doc, errs: Vec::new() };

    for (name, value) in &doc {
        match SECTIONS.iter().find(|(s, _)| s == name) {
            None => r.errs.push(format!("unknown section [{name}]")),
            Some((_, keys)) => match value.as_table() {
                None => r.errs.push(format!("{name} must be a section")),
                Some(t) => {
                    for k in t.keys() {
                        if !keys.contains(&k.as_str()) {
                            r.errs.push(format!("unknown key {name}.{k}"));
                        }
                    }
                }
            },
        }
    }
    let missing: Vec<String> =
        REQUIRED.iter().filter(|(s, k)| r.get(s, k).is_none()).map(|(s, k)| format!("{s}.{k}")).collect();
    if !missing.is_empty() {
        r.errs.push(format!("missing required keys (no defaults for physics parameters): {}", missing.join(", ")));
        if missing.len() == REQUIRED.len() {
            return Err(Error::Invalid(r.errs));
        }
    }
    let present = |r: &Reader, s: &str, k: &str| r.get(s, k).is_some();

    let sites = if present(&r, "model", "L") { r.uint("model", "L", None) as usize } else { 0 };
    let fl = |r: &mut Reader, s: &str, k: &str| if present(r, s, k) { r.float(s, k, None) } else { f64::NAN };
    let model = ModelConfig {
        sites,
        coupling: r.float("model", "J", Some(1.0)),
        h_x: fl(&mut r, "model", "h_x"),
        h_z: fl(&mut r, "model", "h_z"),
    };
    let ansatz = AnsatzConfig {
        alpha: if present(&r, "ansatz", "alpha") { r.uint("ansatz", "alpha", None) as usize } else { 0 },
        basis_size: if present(&r, "ansatz", "Q") { r.uint("ansatz", "Q", None) as usize } else { 0 },
        init_noise: r.float("ansatz", "init_noise", Some(1e-2)),
    };
    let grid = TimeGrid {
        dt: fl(&mut r, "grid", "dt"),
        tau: fl(&mut r, "grid", "tau"),
        window: fl(&mut r, "grid", "T"),
        t_max: fl(&mut r, "grid", "t_max"),
    };
    let mut cfg = RunConfig::new(model, ansatz, grid);
    cfg.grid_order = r.uint("grid", "taylor_order", Some(2)) as usize;
    cfg.coarse_dt = r.opt_float("grid", "coarse_dt");
    if let Some(m) = r.string("run", "mode") {
        match Mode::parse(&m) {
            Some(v) => cfg.mode = v,
            None => r.errs.push(format!("run.mode = \"{m}\" must be \"exact\" or \"mc\"")),
        }
    }
    cfg.seed = r.uint("run", "seed", Some(0));
    cfg.out = r.string("run", "out").map(PathBuf::from);
    match r.get("run", "eval_times") {
        None => {}
        Some(Value::Array(items)) => {
            for it in items {
                match it {
                    Value::Float(v) => cfg.eval_times.push(*v),
                    Value::Integer(v) => cfg.eval_times.push(*v as f64),
                    other => r.errs.push(format!("run.eval_times entries must be numbers, found {}", other.type_str())),
                }
            }
        }
        Some(other) => r.errs.push(format!("run.eval_times must be an array, found {}", other.type_str())),
    }
    let d = ChainConfig::default();
    cfg.sampler = ChainConfig {
        n_chains: r.uint("sampler", "n_chains", Some(d.n_chains as u64)) as usize,
        n_samples: r.uint("sampler", "n_samples", Some(d.n_samples as u64)) as usize,
        burn_in: r.uint("sampler", "burn_in", Some(d.burn_in as u64)) as usize,
        thinning: r.uint("sampler", "thinning", Some(d.thinning as u64)) as usize,
        seed: 0,
    };
    let t = TrainConfig::default();
    cfg.train.adam.lr = r.float("optimizer", "lr", Some(t.adam.lr));
    cfg.train.adam.beta1 = r.float("optimizer", "beta1", Some(t.adam.beta1));
    cfg.train.adam.beta2 = r.float("optimizer", "beta2", Some(t.adam.beta2));
    cfg.train.adam.eps = r.float("optimizer", "eps", Some(t.adam.eps));
    cfg.train.adam.weight_decay = r.float("optimizer", "weight_decay", Some(t.adam.weight_decay));
    cfg.train.epochs = r.uint("optimizer", "epochs", Some(t.epochs as u64)) as usize;
    if let Some(s) = r.string("optimizer", "schedule") {
        match s.as_str() {
            "constant" => cfg.train.schedule = SchedulePolicy::Constant,
            "cosine" => cfg.train.schedule = SchedulePolicy::Cosine,
            other => r.errs.push(format!("optimizer.schedule = \"{other}\" must be \"constant\" or \"cosine\"")),
        }
    }
    cfg.train.loss_tol = r.float("optimizer", "loss_tol", Some(t.loss_tol));
    cfg.train.patience = r.uint("optimizer", "patience", Some(t.patience as u64)) as usize;
    cfg.train.rel_tol = r.float("optimizer", "rel_tol", Some(t.rel_tol));
    if let Some(s) = r.string("optimizer", "gradient") {
        match s.as_str() {
            "neglog" => cfg.train.form = GradientForm::NegLog,
            "product" => cfg.train.form = GradientForm::Product,
            other => r.errs.push(format!("optimizer.gradient = \"{other}\" must be \"neglog\" or \"product\"")),
        }
    }

    let mut errs = r.errs;
    if missing.is_empty() {
        errs.extend(cfg.violations());
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Invalid(errs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = "[model]\nL = 6\nh_x = 0.3\nh_z = 0.3\n[ansatz]\nalpha = 2\nQ = 3\n[grid]\ndt = 0.01\ntau = 0.1\nT = 1.0\nt_max = 0.5\n";

    fn violations(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Invalid(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MIN).unwrap();
        assert_eq!(c.model.coupling, 1.0);
        assert_eq!(c.mode, Mode::Exact);
        assert_eq!(c.grid_order, 2);
        assert_eq!(c.train.epochs, 500);
        assert_eq!(c.sampler.n_chains, 16);
    }

    #[test]
    fn empty_document_lists_every_physics_key() {
        let v = violations("");
        assert_eq!(v.len(), 1);
        for key in ["model.L", "model.h_x", "ansatz.Q", "grid.dt", "grid.t_max"] {
            assert!(v[0].contains(key), "{}", v[0]);
        }
    }

    #[test]
    fn divisibility_violation_is_single_and_named() {
        let v = violations(&MIN.replace("dt = 0.01", "dt = 0.03"));
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("0.1") && v[0].contains("0.03"));
    }

    #[test]
    fn unknown_key_and_exact_limit() {
        let v = violations(&MIN.replace("Q = 3", "Q = 3\nbeta = 1"));
        assert!(v.iter().any(|e| e.contains("ansatz.beta")));
        let v = violations(&MIN.replace("L = 6", "L = 16"));
        assert!(v.iter().any(|e| e.contains("exact mode")));
        assert!(parse_config(&format!("{}[run]\nmode = \"mc\"\n", MIN.replace("L = 6", "L = 16"))).is_ok());
    }

    #[test]
    fn toml_echo_round_trips() {
        let mut c = parse_config(MIN).unwrap();
        c.eval_times = vec![0.015, 0.33];
        c.out = Some(PathBuf::from("out/run \"a\""));
        c.coarse_dt = Some(0.02);
        c.train.adam.eps = 1e-8;
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}
