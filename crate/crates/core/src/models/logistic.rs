//! Weighted one-vs-rest logistic regression.
//!
//! Each binary problem minimizes
//! `(1 / sum w) * sum_i w_i * CE_i + (l2 / 2) * |beta|^2` (bias unpenalized)
//! with damped Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticConfig {
    /// Scale applied to each Newton step (1.0 is a full step).
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
}

fn default_lr() -> f64 {
    1.0
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}
fn default_l2() -> f64 {
    1e-4
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lr: default_lr(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            l2: default_l2(),
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr <= 1.0) {
            return Err(Error::config("model.lr", "must be in (0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("model.max_iter", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("model.tol", "must be positive"));
        }
        if !(self.l2 > 0.0 && self.l2.is_finite()) {
            return Err(Error::config("model.l2", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    /// One row of weights per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Classes whose binary problem had no positive or no negative weight
    /// and fell back to the clipped prior.
    pub degenerate: Vec<usize>,
    pub iterations: Vec<usize>,
    pub converged: bool,
}

const PRIOR_CLIP: f64 = 1e-6;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Logistic {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| sigmoid(w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>() + b))
            .collect()
    }

    /// Per-class sigmoid scores normalized to sum to one.
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let s = self.scores(row);
        let total: f64 = s.iter().sum();
        if total > 0.0 {
            s.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / s.len() as f64; s.len()]
        }
    }
}

struct Binary<'a> {
    x: &'a DMatrix<f64>,
    t: Vec<f64>,
    w: Vec<f64>,
    l2: f64,
}

impl Binary<'_> {
    fn margins(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.x * beta
    }

    fn loss(&self, beta: &DVector<f64>) -> f64 {
        let z = self.margins(beta);
        let d = beta.len() - 1;
        let ce: f64 = (0..z.len()).map(|i| self.w[i] * (softplus(z[i]) - self.t[i] * z[i])).sum();
        ce + 0.5 * self.l2 * beta.rows(0, d).norm_squared()
    }

    fn solve(&self, cfg: &LogisticConfig, init_bias: f64) -> Result<(DVector<f64>, usize, bool)> {
        let p1 = self.x.ncols();
        let d = p1 - 1;
        let mut beta = DVector::zeros(p1);
        beta[d] = init_bias;
        let mut loss = self.loss(&beta);
        for it in 1..=cfg.max_iter {
            let z = self.margins(&beta);
            let n = z.len();
            let mut resid = DVector::zeros(n);
            let mut curv = DVector::zeros(n);
            for i in 0..n {
                let p = sigmoid(z[i]);
                resid[i] = self.w[i] * (p - self.t[i]);
                curv[i] = self.w[i] * p * (1.0 - p);
            }
            let mut grad = self.x.tr_mul(&resid);
            let mut scaled = self.x.clone();
            for (i, mut row) in scaled.row_iter_mut().enumerate() {
                row *= curv[i];
            }
            let mut hess = self.x.tr_mul(&scaled);
            for j in 0..d {
                grad[j] += self.l2 * beta[j];
                hess[(j, j)] += self.l2;
            }
            hess[(d, d)] += 1e-12;
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&grad),
                None => {
                    for j in 0..p1 {
                        hess[(j, j)] += 1e-8;
                    }
                    hess.cholesky()
                        .ok_or_else(|| Error::Training("Hessian is not positive definite".into()))?
                        .solve(&grad)
                }
            };
            let mut scale = cfg.lr;
            let mut next = &beta - &step * scale;
            let mut next_loss = self.loss(&next);
            let mut halvings = 0;
            while !(next_loss <= loss) && halvings < 40 {
                scale *= 0.5;
                next = &beta - &step * scale;
                next_loss = self.loss(&next);
                halvings += 1;
            }
            if !next_loss.is_finite() {
                return Err(Error::Training("logistic loss became non-finite".into()));
            }
            let moved = (&next - &beta).amax();
            beta = next;
            loss = next_loss.min(loss);
            if moved < cfg.tol {
                return Ok((beta, it, true));
            }
        }
        Ok((beta, cfg.max_iter, false))
    }
}

pub fn fit_logistic(
    x: &[Vec<f64>],
    y: &[usize],
    sample_weight: Option<&[f64]>,
    n_classes: usize,
    cfg: &LogisticConfig,
) -> Result<Logistic> {
    cfg.validate()?;
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::domain("logistic regression needs a nonempty matrix with one label per row"));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::domain("ragged feature rows"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("feature matrix contains non-finite values"));
    }
    if y.iter().any(|&c| c >= n_classes) {
        return Err(Error::domain("label index outside class list"));
    }
    let w: Vec<f64> = match sample_weight {
        Some(w) if w.len() != x.len() => return Err(Error::domain("one weight per row required")),
        Some(w) if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            return Err(Error::domain("weights must be finite and non-negative"))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; x.len()],
    };
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("total sample weight is zero"));
    }
    let w: Vec<f64> = w.iter().map(|v| v / total).collect();

    let design = DMatrix::from_fn(x.len(), d + 1, |i, j| if j < d { x[i][j] } else { 1.0 });
    let mut out = Logistic {
        weights: Vec::with_capacity(n_classes),
        bias: Vec::with_capacity(n_classes),
        degenerate: Vec::new(),
        iterations: Vec::with_capacity(n_classes),
        converged: true,
    };
    for c in 0..n_classes {
        let t: Vec<f64> = y.iter().map(|&k| f64::from(u8::from(k == c))).collect();
        let pos: f64 = w.iter().zip(&t).map(|(a, b)| a * b).sum();
        let prior = pos.clamp(PRIOR_CLIP, 1.0 - PRIOR_CLIP);
        let logit = (prior / (1.0 - prior)).ln();
        if pos <= 0.0 || pos >= 1.0 - 1e-15 {
            out.weights.push(vec![0.0; d]);
            out.bias.push(logit);
            out.degenerate.push(c);
            out.iterations.push(0);
            continue;
        }
        let prob = Binary {
            x: &design,
            t,
            w: w.clone(),
            l2: cfg.l2,
        };
        let (beta, iters, conv) = prob.solve(cfg, logit)?;
        if !conv {
            log::warn!("logistic class {c} stopped after {iters} iterations without converging");
        }
        out.converged &= conv;
        out.weights.push(beta.rows(0, d).iter().copied().collect());
        out.bias.push(beta[d]);
        out.iterations.push(iters);
    }
    Ok(out)
}
