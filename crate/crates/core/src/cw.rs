//! Confidence-weighted linear classifier with a diagonal covariance.
//!
//! The model keeps a Gaussian over weights: mean `mu` and per-coordinate
//! variance `sigma`. An update makes the example's margin satisfy
//! `y·(mu·x) ≥ φ·Σ sigma_i x_i²` with `φ = Φ⁻¹(η)`, moving the mean along
//! `y·sigma∘x` and shrinking the variance of the touched coordinates.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::Label;

/// Sparse vector with strictly increasing indices and no explicit zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts by index, sums duplicates and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> SparseVector {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, x) in pairs {
            match entries.last_mut() {
                Some((j, y)) if *j == i => *y += x,
                _ => entries.push((i, x)),
            }
        }
        entries.retain(|&(_, x)| x != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.entries.iter().map(|&(i, x)| (i, x * factor)).collect())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, x)| dense.get(i).copied().unwrap_or(0.0) * x)
            .sum()
    }

    fn weighted_norm(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, x)| dense.get(i).copied().unwrap_or(0.0) * x * x)
            .sum()
    }
}

/// Standard normal quantile function (Acklam's rational approximation,
/// relative error below 1.2e-9).
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CWTrainConfig {
    pub epochs: usize,
    pub eta: f64,
    pub initial_variance: f64,
    pub shuffle_seed: u64,
}

impl Default for CWTrainConfig {
    fn default() -> Self {
        CWTrainConfig {
            epochs: 5,
            eta: 0.9,
            initial_variance: 1.0,
            shuffle_seed: 0,
        }
    }
}

impl CWTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.eta > 0.5 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta must be in (0.5, 1), got {}", self.eta)));
        }
        if !(self.initial_variance > 0.0 && self.initial_variance.is_finite()) {
            return Err(Error::Config("initial variance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CWModel {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eta: f64,
    pub phi: f64,
    pub tau: f64,
    pub initial_variance: f64,
}

impl CWModel {
    pub fn new(dim: usize, eta: f64, initial_variance: f64) -> CWModel {
        CWModel {
            mu: vec![0.0; dim],
            sigma: vec![initial_variance; dim],
            eta,
            phi: inverse_normal_cdf(eta),
            tau: 0.0,
            initial_variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn ensure_dim(&mut self, x: &SparseVector) {
        if let Some(max) = x.max_index() {
            if max >= self.mu.len() {
                self.mu.resize(max + 1, 0.0);
                self.sigma.resize(max + 1, self.initial_variance);
            }
        }
    }

    /// One confidence-weighted update; returns the step size α (0 when the
    /// example already satisfies the confidence constraint).
    pub fn update(&mut self, x: &SparseVector, y: f64) -> f64 {
        self.ensure_dim(x);
        let phi = self.phi;
        let m = y * x.dot(&self.mu);
        let v = x.weighted_norm(&self.sigma);
        if v <= 0.0 || m >= phi * v {
            return 0.0;
        }
        let alpha = self.step_size(x, m, v);
        if alpha <= 0.0 {
            return 0.0;
        }
        for &(i, xi) in x.entries() {
            let s = self.sigma[i];
            self.mu[i] += alpha * y * s * xi;
            self.sigma[i] = 1.0 / (1.0 / s + 2.0 * alpha * phi * xi * xi);
        }
        alpha
    }

    /// Step size that makes the post-update constraint hold with equality for
    /// the diagonal variance update. For a single active coordinate this is
    /// exactly the closed form
    /// `(−(1+2φm) + sqrt((1+2φm)² − 8φ(m − φv))) / (4φv)`; otherwise the closed
    /// form seeds a safeguarded Newton solve.
    fn step_size(&self, x: &SparseVector, m: f64, v: f64) -> f64 {
        let phi = self.phi;
        let b = 1.0 + 2.0 * phi * m;
        let closed = ((-b + (b * b - 8.0 * phi * (m - phi * v)).sqrt()) / (4.0 * phi * v)).max(0.0);
        if x.entries().len() <= 1 {
            return closed;
        }
        let terms: Vec<f64> = x
            .entries()
            .iter()
            .map(|&(i, xi)| self.sigma[i] * xi * xi)
            .collect();
        let g = |a: f64| -> (f64, f64) {
            let mut rhs = 0.0;
            let mut drhs = 0.0;
            for &t in &terms {
                let d = 1.0 + 2.0 * a * phi * t;
                rhs += t / d;
                drhs += 2.0 * phi * t * t / (d * d);
            }
            (m + a * v - phi * rhs, v + phi * drhs)
        };
        let (mut lo, mut hi) = (0.0, (phi * v - m) / v);
        let mut a = closed.clamp(lo, hi);
        for _ in 0..200 {
            let (val, deriv) = g(a);
            if val.abs() <= 1e-14 * (1.0 + m.abs() + phi * v) {
                break;
            }
            if val < 0.0 {
                lo = a;
            } else {
                hi = a;
            }
            let next = a - val / deriv;
            a = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * hi.abs() {
                break;
            }
        }
        a
    }

    /// Signed margin `mu·x`.
    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot(&self.mu)
    }

    pub fn classify(&self, x: &SparseVector) -> Label {
        classify_at(self.score(x), self.tau)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "cw eta {} phi {} tau {} dim {}",
            self.eta,
            self.phi,
            self.tau,
            self.dim()
        );
        if self.initial_variance != 1.0 {
            let _ = write!(out, " init {}", self.initial_variance);
        }
        out.push('\n');
        for (i, (&mu, &sigma)) in self.mu.iter().zip(&self.sigma).enumerate() {
            if mu != 0.0 || sigma != self.initial_variance {
                let _ = writeln!(out, "{i} {mu} {sigma}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<CWModel> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::EmptyInput("classifier model file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let valid_shape = (h.len() == 9 || h.len() == 11)
            && h[0] == "cw"
            && h[1] == "eta"
            && h[3] == "phi"
            && h[5] == "tau"
            && h[7] == "dim"
            && (h.len() == 9 || h[9] == "init");
        if !valid_shape {
            return Err(Error::parse(1, format!("bad classifier header {header:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(1, format!("bad number {s:?}")));
        let eta = num(h[2])?;
        let phi = num(h[4])?;
        let tau = num(h[6])?;
        let dim: usize = h[8].parse().map_err(|_| Error::parse(1, "bad dim"))?;
        let init = if h.len() == 11 { num(h[10])? } else { 1.0 };
        let mut model = CWModel {
            mu: vec![0.0; dim],
            sigma: vec![init; dim],
            eta,
            phi,
            tau,
            initial_variance: init,
        };
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(line_no, "expected <id> <mu> <sigma>"));
            }
            let id: usize = f[0].parse().map_err(|_| Error::parse(line_no, "bad id"))?;
            if id >= dim {
                return Err(Error::parse(line_no, format!("id {id} outside dim {dim}")));
            }
            let sigma = f[2].parse::<f64>().map_err(|_| Error::parse(line_no, "bad sigma"))?;
            if sigma <= 0.0 {
                return Err(Error::parse(line_no, "sigma must be positive"));
            }
            model.mu[id] = f[1].parse().map_err(|_| Error::parse(line_no, "bad mu"))?;
            model.sigma[id] = sigma;
        }
        Ok(model)
    }
}

/// Valid iff `score ≥ tau`.
pub fn classify_at(score: f64, tau: f64) -> Label {
    if score >= tau {
        Label::Valid
    } else {
        Label::Invalid
    }
}

/// Online training for `cfg.epochs` passes, each over a seeded shuffle
/// (seed + epoch index).
pub fn cw_train(examples: &[(SparseVector, Label)], dim: usize, cfg: &CWTrainConfig) -> Result<CWModel> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("training examples"));
    }
    let mut model = CWModel::new(dim, cfg.eta, cfg.initial_variance);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed.wrapping_add(epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = &examples[i];
            model.update(x, label.sign());
        }
    }
    Ok(model)
}

/// Fraction of examples classified correctly at threshold 0.
pub fn accuracy(model: &CWModel, examples: &[(SparseVector, Label)]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("evaluation examples"));
    }
    let correct = examples
        .iter()
        .filter(|(x, label)| classify_at(model.score(x), 0.0) == *label)
        .count();
    Ok(correct as f64 / examples.len() as f64)
}

/// The 101 thresholds −0.50, −0.49, …, 0.50.
pub fn threshold_grid() -> Vec<f64> {
    (0..=100).map(|k| (k as f64 - 50.0) / 100.0).collect()
}

/// Grid search over [`threshold_grid`]: returns the threshold with the highest
/// objective (ties go to the smallest threshold) and every evaluated point.
pub fn tune_threshold<F>(objective: F) -> (f64, Vec<(f64, f64)>)
where
    F: Fn(f64) -> f64 + Sync,
{
    let evaluated: Vec<(f64, f64)> = threshold_grid()
        .into_par_iter()
        .map(|tau| (tau, objective(tau)))
        .collect();
    let mut best = evaluated[0];
    for &(tau, value) in &evaluated[1..] {
        if value > best.1 {
            best = (tau, value);
        }
    }
    (best.0, evaluated)
}
