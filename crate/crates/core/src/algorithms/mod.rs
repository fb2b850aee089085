//! The three methods as step functions over an explicit state.
//!
//! All three share [`AlgoState`]. Push-Pull leaves the momentum pair at zero.

mod bcpp;
mod cpp;
mod pushpull;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compression::CompressorSpec;
use crate::error::{Error, Result};
use crate::metrics::{self, IterationRecord};
use crate::objectives::{ObjectiveModel, ReferenceSolution};
use crate::rng::{self, CompressionStreams, StreamRng};
use crate::topology::MixingMatrices;

pub use bcpp::{bcpp_step, bcpp_step_with_activation};
pub use cpp::cpp_step;
pub use pushpull::pushpull_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    PushPull,
    Cpp,
    Bcpp,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PushPull => "pushpull",
            Self::Cpp => "cpp",
            Self::Bcpp => "bcpp",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pushpull" => Ok(Self::PushPull),
            "cpp" => Ok(Self::Cpp),
            "bcpp" => Ok(Self::Bcpp),
            other => Err(Error::param(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Step sizes and averaging parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    /// Per-agent step sizes.
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl AlgoParams {
    /// `α_i = α'γ³`, `β = β'γ²`.
    pub fn from_tuning(n: usize, alpha_prime: f64, beta_prime: f64, gamma: f64, eta: f64) -> Self {
        Self {
            alpha: vec![alpha_prime * gamma.powi(3); n],
            beta: beta_prime * gamma * gamma,
            gamma,
            eta,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.alpha.len() != n {
            return Err(Error::param(format!("{} step sizes for {n} agents", self.alpha.len())));
        }
        if self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::param("step sizes must be finite and nonnegative"));
        }
        if !self.alpha.iter().any(|&a| a > 0.0) {
            return Err(Error::param("at least one step size must be positive"));
        }
        for (name, v) in [("beta", self.beta), ("gamma", self.gamma), ("eta", self.eta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(format!("{name} = {v} is outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Iterates of all agents, one agent per row.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoState {
    pub x: DMatrix<f64>,
    /// Gradient trackers.
    pub y: DMatrix<f64>,
    /// Momentum tracking `X`.
    pub u: DMatrix<f64>,
    /// Mixed momentum, equal to `R·U`.
    pub u_r: DMatrix<f64>,
    /// `∇F(X)`, kept in sync with `x`.
    pub grads: DMatrix<f64>,
    pub iter: usize,
    pub bits: u64,
}

/// `Y = ∇F(X0)`, `U = U_R = 0`.
pub fn init_state(objective: &ObjectiveModel, x0: DMatrix<f64>) -> Result<AlgoState> {
    let (n, p) = (objective.n(), objective.dim());
    if x0.shape() != (n, p) {
        return Err(Error::param(format!(
            "initial point is {}x{}, model expects {n}x{p}",
            x0.nrows(),
            x0.ncols()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("initial point has non-finite entries".into()));
    }
    let grads = objective.stacked_gradient(&x0);
    Ok(AlgoState {
        y: grads.clone(),
        u: DMatrix::zeros(n, p),
        u_r: DMatrix::zeros(n, p),
        grads,
        x: x0,
        iter: 0,
        bits: 0,
    })
}

fn check_shapes(state: &AlgoState, mixing: &MixingMatrices, objective: &ObjectiveModel) -> Result<()> {
    let n = mixing.n();
    if objective.n() != n || state.x.nrows() != n || state.x.ncols() != objective.dim() {
        return Err(Error::param(format!(
            "state {}x{}, network n = {n}, model {}x{}",
            state.x.nrows(),
            state.x.ncols(),
            objective.n(),
            objective.dim()
        )));
    }
    Ok(())
}

/// Drives one algorithm on one problem and records metrics.
pub struct Runner<'a> {
    algo: Algorithm,
    mixing: &'a MixingMatrices,
    objective: &'a ObjectiveModel,
    reference: &'a ReferenceSolution,
    params: AlgoParams,
    spec: CompressorSpec,
    streams: CompressionStreams,
    activation: StreamRng,
    state: AlgoState,
}

impl<'a> Runner<'a> {
    /// Starts from `x0`. `seed` keys the compression and activation streams.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        algo: Algorithm,
        mixing: &'a MixingMatrices,
        objective: &'a ObjectiveModel,
        reference: &'a ReferenceSolution,
        params: AlgoParams,
        spec: CompressorSpec,
        x0: DMatrix<f64>,
        seed: u64,
    ) -> Result<Self> {
        params.validate(mixing.n())?;
        spec.validate_for(objective.dim())?;
        let state = init_state(objective, x0)?;
        check_shapes(&state, mixing, objective)?;
        Ok(Self {
            algo,
            mixing,
            objective,
            reference,
            params,
            spec,
            streams: CompressionStreams::new(seed),
            activation: rng::stream(seed, rng::ACTIVATION),
            state,
        })
    }

    pub fn state(&self) -> &AlgoState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut AlgoState {
        &mut self.state
    }

    pub fn step(&mut self) -> Result<()> {
        match self.algo {
            Algorithm::PushPull => pushpull_step(&mut self.state, self.mixing, self.objective, &self.params),
            Algorithm::Cpp => cpp_step(
                &mut self.state,
                self.mixing,
                self.objective,
                &self.params,
                &self.spec,
                &self.streams,
            ),
            Algorithm::Bcpp => bcpp_step(
                &mut self.state,
                self.mixing,
                self.objective,
                &self.params,
                &self.spec,
                &self.streams,
                &mut self.activation,
            ),
        }
    }

    /// Metrics of the current state; a non-finite loss is reported as divergence.
    pub fn record(&self) -> Result<IterationRecord> {
        let rec = metrics::record(&self.state, self.objective, self.reference, self.mixing)?;
        if !rec.loss_gap.is_finite() || !rec.consensus_err.is_finite() {
            return Err(Error::Diverged {
                iter: rec.iter,
                detail: format!("loss gap {}, consensus error {}", rec.loss_gap, rec.consensus_err),
            });
        }
        Ok(rec)
    }

    /// Records the initial state and then every one of `iters` steps.
    pub fn run(&mut self, iters: usize) -> Result<Vec<IterationRecord>> {
        let mut out = Vec::with_capacity(iters + 1);
        out.push(self.record()?);
        for _ in 0..iters {
            self.step()?;
            out.push(self.record()?);
        }
        Ok(out)
    }

    /// Steps until the loss gap first drops to `target` or `max_iters` is hit.
    /// Returns the record at which the target was reached.
    pub fn run_until(&mut self, target: f64, max_iters: usize) -> Result<Option<IterationRecord>> {
        loop {
            let rec = self.record()?;
            if rec.loss_gap <= target {
                return Ok(Some(rec));
            }
            if self.state.iter >= max_iters {
                return Ok(None);
            }
            self.step()?;
        }
    }
}

/// Convenience wrapper over [`Runner::run`].
#[allow(clippy::too_many_arguments)]
pub fn run(
    algo: Algorithm,
    iters: usize,
    mixing: &MixingMatrices,
    objective: &ObjectiveModel,
    reference: &ReferenceSolution,
    params: AlgoParams,
    spec: CompressorSpec,
    x0: DMatrix<f64>,
    seed: u64,
) -> Result<Vec<IterationRecord>> {
    Runner::new(algo, mixing, objective, reference, params, spec, x0, seed)?.run(iters)
}

/// Draws agent `i_k` uniformly.
pub(crate) fn sample_agent<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n)
}
