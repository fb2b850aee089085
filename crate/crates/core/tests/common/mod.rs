//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use pushpull_sim::algorithms::{AlgoParams, Algorithm, Runner};
use pushpull_sim::compression::{c2_of, CompressorSpec};
use pushpull_sim::harness::{parse_config, ExperimentConfig, Problem};

pub const N: usize = 20;
pub const P: usize = 41;

/// Synthetic logistic regression on a ring plus 20 random links per graph.
pub fn logistic_config() -> ExperimentConfig {
    parse_config(
        r#"{
            "n": 20, "p": 41, "d": 20, "seed": 1,
            "algo": "cpp", "iters": 0,
            "objective": {"kind": "logistic", "mu": 0.001, "data": {"source": "synth", "per_agent": 1, "seed": 1}}
        }"#,
    )
    .expect("fixture config parses")
}

pub fn logistic_problem() -> Problem {
    Problem::build(&logistic_config()).expect("fixture problem builds")
}

pub fn smoothness(problem: &Problem) -> f64 {
    problem.objective.constants_mu_l().1
}

pub fn default_eta(spec: &CompressorSpec) -> f64 {
    let c2 = c2_of(spec, P);
    if c2 == 0.0 {
        1.0
    } else {
        (1.0 / (2.0 * c2)).min(1.0)
    }
}

/// Step `α = scale/L` with `β = β'γ²`, written through the `α'γ³` form.
pub fn tuned(gamma: f64, alpha_scale: f64, beta: f64, eta: f64, l: f64) -> AlgoParams {
    AlgoParams::from_tuning(N, alpha_scale / (l * gamma.powi(3)), beta / (gamma * gamma), gamma, eta)
}

/// Hand-tuned settings for the synthetic problem. CPP uses one setting for
/// every compressor; B-CPP scales everything by roughly `1/n` because its
/// updates are amplified by `n`.
pub fn hand_tuned(algo: Algorithm, spec: &CompressorSpec, l: f64) -> AlgoParams {
    let eta = default_eta(spec);
    match algo {
        Algorithm::PushPull => tuned(1.0, 2.0, 1.0, 1.0, l),
        Algorithm::Cpp => tuned(0.25, 2.0, 0.0625, eta, l),
        Algorithm::Bcpp => {
            let cap = 1.0 / N as f64;
            match spec {
                CompressorSpec::RandK { .. } => tuned(0.01, 1.0, 0.01, (0.05 * eta).min(cap), l),
                _ => tuned(0.025, 2.0, 0.01, (0.2 * eta).min(cap), l),
            }
        }
    }
}

pub fn runner<'a>(
    problem: &'a Problem,
    algo: Algorithm,
    spec: CompressorSpec,
    params: AlgoParams,
    seed: u64,
) -> Runner<'a> {
    Runner::new(
        algo,
        &problem.mixing,
        &problem.objective,
        &problem.reference,
        params,
        spec,
        DMatrix::zeros(problem.mixing.n(), problem.objective.dim()),
        seed,
    )
    .expect("runner builds")
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn quantizers() -> Vec<CompressorSpec> {
    [2, 4, 6].map(|b| CompressorSpec::quantize(b).unwrap()).to_vec()
}

pub fn sparsifiers() -> Vec<CompressorSpec> {
    [5, 10, 20].map(|k| CompressorSpec::rand_k(k).unwrap()).to_vec()
}

pub fn all_lossy() -> Vec<CompressorSpec> {
    let mut v = quantizers();
    v.extend(sparsifiers());
    v
}
