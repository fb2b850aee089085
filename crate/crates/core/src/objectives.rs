//! Local objectives `f_i`, their gradients, and a centralized reference solver.
//!
//! The global objective is `f(x) = (1/n) Σ f_i(x)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingestion::RawDataset;
use crate::rng;

const REF_TOL: f64 = 1e-13;
const REF_MAX_ITERS: usize = 10_000_000;

/// One agent's share of a logistic-regression dataset.
#[derive(Debug, Clone)]
pub struct Shard {
    /// One sample per row.
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum ObjectiveModel {
    /// `f_i(x) = ½ xᵀ A_i x − b_iᵀ x` with `A_i` symmetric positive definite.
    Quadratic { a: Vec<DMatrix<f64>>, b: Vec<DVector<f64>> },
    /// `f_i(x) = mean over shard of log(1 + exp(−λ zᵀx)) + μ/2 ‖x‖²`.
    Logistic { shards: Vec<Shard>, mu: f64 },
}

/// `log(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl ObjectiveModel {
    pub fn quadratic(a: Vec<DMatrix<f64>>, b: Vec<DVector<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::param(format!(
                "quadratic model needs one (A_i, b_i) per agent, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let p = b[0].len();
        for (i, (ai, bi)) in a.iter().zip(&b).enumerate() {
            if ai.shape() != (p, p) || bi.len() != p {
                return Err(Error::param(format!("agent {i}: inconsistent dimensions")));
            }
            if (ai - ai.transpose()).amax() > 1e-12 * ai.amax().max(1.0) {
                return Err(Error::param(format!("agent {i}: A_i is not symmetric")));
            }
            if ai.clone().cholesky().is_none() {
                return Err(Error::param(format!("agent {i}: A_i is not positive definite")));
            }
        }
        Ok(Self::Quadratic { a, b })
    }

    /// Logistic model with one shard per agent.
    pub fn logistic(shards: Vec<RawDataset>, mu: f64) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::param("logistic model needs at least one shard"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param(format!("regularization must be positive, got {mu}")));
        }
        let p = shards[0].dim();
        let shards = shards
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if d.is_empty() {
                    return Err(Error::param(format!("shard {i} is empty")));
                }
                if d.dim() != p {
                    return Err(Error::param(format!(
                        "shard {i} has dimension {}, expected {p}",
                        d.dim()
                    )));
                }
                d.validate()?;
                Ok(Shard {
                    features: d.features,
                    labels: DVector::from_vec(d.labels),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Logistic { shards, mu })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Quadratic { b, .. } => b.len(),
            Self::Logistic { shards, .. } => shards.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { b, .. } => b[0].len(),
            Self::Logistic { shards, .. } => shards[0].features.ncols(),
        }
    }

    fn check(&self, i: usize, x: &DVector<f64>) {
        assert!(i < self.n(), "agent {i} out of range for n = {}", self.n());
        assert_eq!(x.len(), self.dim(), "point has wrong dimension");
    }

    pub fn local_value(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.check(i, x);
        match self {
            Self::Quadratic { a, b } => 0.5 * x.dot(&(&a[i] * x)) - b[i].dot(x),
            Self::Logistic { shards, mu } => {
                let s = &shards[i];
                let margins = &s.features * x;
                let loss: f64 = margins.iter().zip(s.labels.iter()).map(|(t, l)| softplus(-l * t)).sum();
                loss / s.len() as f64 + 0.5 * mu * x.norm_squared()
            }
        }
    }

    pub fn local_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        self.check(i, x);
        match self {
            Self::Quadratic { a, b } => &a[i] * x - &b[i],
            Self::Logistic { shards, mu } => {
                let s = &shards[i];
                let m = s.len() as f64;
                let mut coef = &s.features * x;
                coef.iter_mut()
                    .zip(s.labels.iter())
                    .for_each(|(t, &l)| *t = -l * sigmoid(-l * *t) / m);
                s.features.tr_mul(&coef) + x * *mu
            }
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (0..self.n()).map(|i| self.local_value(i, x)).sum::<f64>() / self.n() as f64
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for i in 0..self.n() {
            g += self.local_gradient(i, x);
        }
        g / self.n() as f64
    }

    /// Stacked local gradients `∇F(X)`, one agent per row.
    pub fn stacked_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(x.nrows(), x.ncols());
        for i in 0..x.nrows() {
            g.set_row(i, &self.local_gradient(i, &x.row(i).transpose()).transpose());
        }
        g
    }

    /// Strong-convexity and smoothness constants `(μ, L)` valid for every `f_i`.
    pub fn constants_mu_l(&self) -> (f64, f64) {
        match self {
            Self::Quadratic { a, .. } => a.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), ai| {
                let eig = ai.clone().symmetric_eigenvalues();
                (lo.min(eig.min()), hi.max(eig.max()))
            }),
            Self::Logistic { shards, mu } => {
                let l = shards
                    .iter()
                    .map(|s| s.features.row_iter().map(|z| z.norm_squared()).sum::<f64>() / (4.0 * s.len() as f64))
                    .fold(0.0f64, f64::max);
                (*mu, l + mu)
            }
        }
    }

    /// Minimizer of the global objective.
    ///
    /// Quadratics are solved directly; logistic models run gradient descent
    /// with step `2/(μ+L)` until `‖∇f‖ <= 1e-13 · max(1, L‖x‖)`.
    pub fn solve_centralized(&self) -> Result<ReferenceSolution> {
        let (mu, l) = self.constants_mu_l();
        let x_star = match self {
            Self::Quadratic { a, b } => {
                let n = a.len() as f64;
                let a_bar = a
                    .iter()
                    .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, ai| acc + ai)
                    / n;
                let b_bar = b.iter().fold(DVector::zeros(self.dim()), |acc, bi| acc + bi) / n;
                let chol = a_bar
                    .cholesky()
                    .ok_or_else(|| Error::Numerical("averaged Hessian is not positive definite".into()))?;
                let mut x = chol.solve(&b_bar);
                // one refinement step against round-off
                let r = self.gradient(&x);
                x -= chol.solve(&r);
                x
            }
            Self::Logistic { .. } => {
                let step = 2.0 / (mu + l);
                let mut x = DVector::zeros(self.dim());
                let mut converged = false;
                let mut g_norm = f64::INFINITY;
                for _ in 0..REF_MAX_ITERS {
                    let g = self.gradient(&x);
                    g_norm = g.norm();
                    if g_norm <= REF_TOL * (l * x.norm()).max(1.0) {
                        converged = true;
                        break;
                    }
                    x.axpy(-step, &g, 1.0);
                }
                if !converged {
                    return Err(Error::Numerical(format!(
                        "reference solver hit {REF_MAX_ITERS} iterations with gradient norm {g_norm:e}"
                    )));
                }
                x
            }
        };
        let grad_norm = self.gradient(&x_star).norm();
        Ok(ReferenceSolution {
            f_star: self.value(&x_star),
            grad_norm,
            x_star,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x_star: DVector<f64>,
    pub grad_norm: f64,
    pub f_star: f64,
}

/// Random quadratic model: `A_i = Q_i diag(λ) Q_iᵀ` with eigenvalues drawn
/// from `[eig_lo, eig_hi]`, and Gaussian `b_i`.
pub fn synth_quadratic(n: usize, p: usize, eig_lo: f64, eig_hi: f64, seed: u64) -> Result<ObjectiveModel> {
    if n == 0 || p == 0 {
        return Err(Error::param("quadratic model needs n, p >= 1"));
    }
    if !(0.0 < eig_lo && eig_lo <= eig_hi) {
        return Err(Error::param(format!("bad eigenvalue range [{eig_lo}, {eig_hi}]")));
    }
    let mut rng = rng::stream(seed, rng::DATA);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let eig = DVector::from_fn(p, |_, _| rng.gen_range(eig_lo..=eig_hi));
        let ai = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        a.push((&ai + ai.transpose()) * 0.5);
        b.push(DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)));
    }
    ObjectiveModel::quadratic(a, b)
}
