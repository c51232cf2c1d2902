//! L2-regularized logistic regression over constituent-model probabilities.
//!
//! The objective is the mean logistic loss plus `|w|^2 / (2 C n)`; the
//! intercept is not penalized. Fitting starts at zero and runs damped Newton
//! steps, falling back to gradient descent when the Newton direction is not
//! usable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_C: f64 = 1.0;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub final_loss: f64,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the value at zero.
    #[serde(default, skip_serializing)]
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub diagnostics: FitDiagnostics,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_rows(features: &[Vec<f64>]) -> Result<usize> {
    let arity = features.first().map(Vec::len).ok_or_else(|| Error::EmptyInput("no feature rows".into()))?;
    if arity == 0 {
        return Err(invalid("feature rows are empty"));
    }
    for row in features {
        if row.len() != arity {
            return Err(Error::DimensionMismatch { expected: arity, found: row.len() });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite feature value"));
        }
    }
    Ok(arity)
}

/// Objective and gradient at `params = [intercept, w_1, .., w_m]`.
pub fn objective(features: &[Vec<f64>], y: &[bool], c: f64, params: &[f64]) -> (f64, Vec<f64>) {
    let n = features.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (row, &label) in features.iter().zip(y) {
        let z = params[0] + row.iter().zip(&params[1..]).map(|(x, w)| x * w).sum::<f64>();
        loss += if label { softplus(-z) } else { softplus(z) };
        let r = sigmoid(z) - if label { 1.0 } else { 0.0 };
        grad[0] += r;
        for (g, x) in grad[1..].iter_mut().zip(row) {
            *g += r * x;
        }
    }
    let penalty = 1.0 / (c * n);
    let w_sq: f64 = params[1..].iter().map(|w| w * w).sum();
    loss = loss / n + 0.5 * penalty * w_sq;
    for g in grad.iter_mut() {
        *g /= n;
    }
    for (g, w) in grad[1..].iter_mut().zip(&params[1..]) {
        *g += penalty * w;
    }
    (loss, grad)
}

fn hessian(features: &[Vec<f64>], c: f64, params: &[f64]) -> DMatrix<f64> {
    let p = params.len();
    let n = features.len() as f64;
    let mut h = DMatrix::zeros(p, p);
    let mut x = vec![1.0; p];
    for row in features {
        x[1..].copy_from_slice(row);
        let z: f64 = x.iter().zip(params).map(|(a, b)| a * b).sum();
        let s = sigmoid(z);
        let wgt = s * (1.0 - s);
        for i in 0..p {
            for j in 0..=i {
                h[(i, j)] += wgt * x[i] * x[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    h /= n;
    for i in 1..p {
        h[(i, i)] += 1.0 / (c * n);
    }
    h
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits the ensemble. Features must lie in `[0, 1]`, both classes must be
/// present and `c` must be positive.
pub fn fit_ensemble(features: &[Vec<f64>], y: &[bool], c: f64) -> Result<EnsembleModel> {
    let arity = check_rows(features)?;
    if features.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), found: y.len() });
    }
    if features.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(invalid("ensemble features must be probabilities in [0, 1]"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid(format!("regularization C must be positive, got {c}")));
    }
    if y.iter().all(|&b| b) || y.iter().all(|&b| !b) {
        return Err(Error::SingleClass("ensemble labels".into()));
    }

    let mut params = vec![0.0; arity + 1];
    let (mut loss, mut grad) = objective(features, y, c, &params);
    let mut history = vec![loss];
    let mut iterations = 0;

    while l2(&grad) > GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let g = DVector::from_column_slice(&grad);
        let newton = hessian(features, c, &params).cholesky().map(|ch| -ch.solve(&g));
        let steepest = -g.clone();
        let mut directions = Vec::with_capacity(2);
        if let Some(d) = newton {
            if d.iter().all(|x| x.is_finite()) && d.dot(&g) < 0.0 {
                directions.push(d);
            }
        }
        directions.push(steepest);

        let mut accepted = None;
        'dirs: for d in &directions {
            let slope = d.dot(&g);
            let mut t = 1.0;
            for _ in 0..60 {
                let cand: Vec<f64> = params.iter().zip(d.iter()).map(|(p, di)| p + t * di).collect();
                let (l, gr) = objective(features, y, c, &cand);
                if l <= loss + 1e-4 * t * slope || (l <= loss && l2(&gr) < l2(&grad)) {
                    accepted = Some((cand, l, gr));
                    break 'dirs;
                }
                t *= 0.5;
            }
        }
        match accepted {
            Some((p, l, g)) => {
                params = p;
                loss = l;
                grad = g;
                history.push(loss);
            }
            None => break,
        }
    }

    let gradient_norm = l2(&grad);
    if gradient_norm > GRADIENT_TOLERANCE {
        return Err(Error::NotConverged { iterations, gradient_norm });
    }
    Ok(EnsembleModel {
        intercept: params[0],
        weights: params[1..].to_vec(),
        c,
        feature_names: Vec::new(),
        diagnostics: FitDiagnostics { iterations, gradient_norm, final_loss: loss, converged: true, loss_history: history },
    })
}

impl EnsembleModel {
    /// Model with the given coefficients and no fit history.
    pub fn from_coefficients(weights: Vec<f64>, intercept: f64) -> Self {
        EnsembleModel {
            weights,
            intercept,
            c: DEFAULT_C,
            feature_names: Vec::new(),
            diagnostics: FitDiagnostics {
                iterations: 0,
                gradient_norm: 0.0,
                final_loss: f64::NAN,
                converged: false,
                loss_history: Vec::new(),
            },
        }
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    /// `sigmoid(intercept + <w, x>)` per row, clamped into the open unit interval.
    pub fn predict_proba(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        if features.is_empty() {
            return Ok(Vec::new());
        }
        let arity = check_rows(features)?;
        if arity != self.arity() {
            return Err(Error::DimensionMismatch { expected: self.arity(), found: arity });
        }
        let lo = f64::EPSILON / 2.0;
        Ok(features
            .iter()
            .map(|row| {
                let z = self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>();
                sigmoid(z).clamp(lo, 1.0 - lo)
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_data() -> (Vec<Vec<f64>>, Vec<bool>) {
        let xs = [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9];
        (xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|&x| x > 0.5).collect())
    }

    #[test]
    fn symmetric_separable_data_centers_at_half() {
        let (x, y) = symmetric_data();
        let m = fit_ensemble(&x, &y, DEFAULT_C).unwrap();
        assert!(m.weights[0].is_finite() && m.weights[0] > 0.0);
        assert!((m.intercept + 0.5 * m.weights[0]).abs() < 1e-8);
        assert!(m.diagnostics.gradient_norm <= GRADIENT_TOLERANCE);
    }

    #[test]
    fn loss_history_never_increases() {
        let (x, y) = symmetric_data();
        let m = fit_ensemble(&x, &y, 0.5).unwrap();
        assert!(m.diagnostics.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn predict_examples() {
        let zero = EnsembleModel::from_coefficients(vec![0.0, 0.0], 0.0);
        assert_eq!(zero.predict_proba(&[vec![0.3, 0.9], vec![1.0, 0.0]]).unwrap(), vec![0.5, 0.5]);
        let m = EnsembleModel::from_coefficients(vec![1.0, 0.0], 0.0);
        assert_eq!(m.predict_proba(&[vec![0.0, 0.77]]).unwrap(), vec![0.5]);
        assert!(matches!(m.predict_proba(&[vec![0.1]]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let x = vec![vec![0.2], vec![0.4]];
        assert!(matches!(fit_ensemble(&x, &[true, true], 1.0), Err(Error::SingleClass(_))));
        assert!(fit_ensemble(&x, &[true, false], 0.0).is_err());
        assert!(fit_ensemble(&[vec![f64::NAN], vec![0.1]], &[true, false], 1.0).is_err());
        assert!(fit_ensemble(&[vec![1.2], vec![0.1]], &[true, false], 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = symmetric_data();
        let m = fit_ensemble(&x, &y, 1.0).unwrap().with_feature_names(vec!["score_a".into()]);
        let back = EnsembleModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.weights, m.weights);
        assert_eq!(back.intercept, m.intercept);
        assert_eq!(back.feature_names, m.feature_names);
    }
}
