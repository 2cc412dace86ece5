//! Smooth neural quantum states for quench dynamics.
//!
//! A complex RBM whose parameters are Chebyshev polynomials in time is
//! trained against a product of step fidelities over each interval, so the
//! whole trajectory inside a window is stored in one coefficient tensor.
//! Exact diagonalization serves as a reference for small chains, and a
//! step-by-step variational baseline is provided for comparison.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod basis;
pub mod config;
pub mod driver;
pub mod error;
pub mod exact;
pub mod loss;
pub mod optim;
pub mod output;
pub mod propagator;
pub mod rbm;
pub mod sampler;

pub mod spin;

pub use ansatz::{assemble_gradient, CoeffTensor, GradientForm, TermGradient};
pub use basis::{cheb_derivatives, cheb_values, handoff_row, rescale, WindowSpec};
pub use config::{parse_config, AnsatzConfig, Mode, ModelConfig, RunConfig};
pub use driver::{
    exact_trajectory, predict_untrained, ptvmc_baseline, refine_timestep, resume_evolution, run_evolution,
    train_interval, ExactReference, IntervalSummary, IntervalTrace, Observer, ParamCounts, RunRecord, TimeGrid,
    TrainConfig, TrajectoryRow, WindowCheckpoint,
};
pub use error::{Error, Result};
pub use exact::{
    build_initial_state, densify_rbm, exact_propagate, infidelity, ExactEvolver, StateVector, DENSE_LIMIT,
};
pub use loss::{
    initial_overlap, interval_loss, step_fidelity_exact, step_fidelity_mc, ExactOperators, InitialTarget, IntervalLoss,
    LossEvaluator, LossMode, StepFidelityReport,
};
pub use num_complex::Complex64 as C64;
pub use optim::{adamw_step, lr_schedule, AdamWConfig, AdamWState, SchedulePolicy};
pub use output::{emit_outputs, latest_checkpoint, read_checkpoint, write_checkpoint};
pub use propagator::{row_support_bound, taylor_row, PropagatorSpec, SparseOperator};
pub use rbm::{param_count, RbmParams};
pub use sampler::{derive_seed, estimate_observable, sample, ChainConfig, SampleSet};
pub use spin::{HamiltonianSpec, SpinConfig};
