use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_LOGISTIC_TOL: f64 = 1e-10;
pub const DEFAULT_LOGISTIC_MAX_ITER: usize = 100;
const RIDGE: f64 = 1e-8;
const DIVERGENCE_NORM: f64 = 1e6;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFitReport<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub iterations: usize,
    /// ∞-norm of the gradient of the mean log-likelihood at the returned parameters.
    pub gradient_norm: T,
    pub converged: bool,
}

/// Maximum-likelihood logistic regression by damped Newton iterations.
///
/// Works on the weight-averaged log-likelihood, so `tol` bounds the ∞-norm of the
/// mean score. Each Newton step uses the Hessian plus a `1e-8` ridge and is halved
/// until the log-likelihood does not decrease.
pub fn fit_logistic_mle<T: Scalar>(data: &Dataset<T>, tol: T, max_iter: usize) -> Result<(Scorer<T>, LogisticFitReport<T>)> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = data.dim();
    if data.len() <= d {
        return Err(Error::DegenerateDesign);
    }
    if !data.has_both_labels() {
        return Err(Error::SeparableData(f64::INFINITY));
    }
    let p = d + 1;
    let mut theta = vec![T::zero(); p];
    let mut ll = log_likelihood(data, &theta);
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm;
    loop {
        let (grad, hess) = score_and_information(data, &theta);
        grad_norm = grad.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if grad_norm <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let step = match solve_spd(hess, &grad) {
            Ok(s) => s,
            // a vanishing Hessian along a separating direction
            Err(Error::DegenerateDesign) if iterations > 0 && separates(data, &theta) => {
                let norm = theta.iter().map(|&t| t * t).sum::<T>().sqrt();
                return Err(Error::SeparableData(norm.as_f64()));
            }
            Err(e) => return Err(e),
        };
        let mut scale = T::one();
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<T> = theta.iter().zip(&step).map(|(&t, &s)| t + scale * s).collect();
            let cand_ll = log_likelihood(data, &candidate);
            if cand_ll >= ll {
                theta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale = scale / T::lit(2.0);
        }
        iterations += 1;
        let norm = theta.iter().map(|&t| t * t).sum::<T>().sqrt();
        if norm.as_f64() > DIVERGENCE_NORM {
            return Err(Error::SeparableData(norm.as_f64()));
        }
        if !accepted {
            // no ascent direction left at working precision
            break;
        }
    }
    if !converged && separates(data, &theta) {
        let norm = theta.iter().map(|&t| t * t).sum::<T>().sqrt();
        return Err(Error::SeparableData(norm.as_f64()));
    }
    let b = theta[d];
    let w = theta[..d].to_vec();
    let report = LogisticFitReport { weights: w.clone(), intercept: b, iterations, gradient_norm: grad_norm, converged };
    Ok((Scorer::Logistic { w, b }, report))
}

fn linear<T: Scalar>(theta: &[T], x: &[T]) -> T {
    let d = x.len();
    theta[..d].iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + theta[d]
}

/// `log(1 + e^z)` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn log_likelihood<T: Scalar>(data: &Dataset<T>, theta: &[T]) -> T {
    data.rows()
        .enumerate()
        .map(|(i, x)| {
            let z = linear(theta, x);
            let y = if data.labels()[i].is_pos() { z } else { T::zero() };
            data.weight(i) * (y - softplus(z))
        })
        .sum()
}

fn score_and_information<T: Scalar>(data: &Dataset<T>, theta: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
    let p = theta.len();
    let mut grad = vec![T::zero(); p];
    let mut hess = vec![vec![T::zero(); p]; p];
    let mut xt = vec![T::one(); p];
    for (i, x) in data.rows().enumerate() {
        xt[..p - 1].copy_from_slice(x);
        let z = linear(theta, x);
        let prob = crate::scalar::sigmoid(z);
        let y = if data.labels()[i].is_pos() { T::one() } else { T::zero() };
        let w = data.weight(i);
        let r = w * (y - prob);
        let c = w * prob * (T::one() - prob);
        for a in 0..p {
            grad[a] = grad[a] + r * xt[a];
            for b in 0..=a {
                hess[a][b] = hess[a][b] + c * xt[a] * xt[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            hess[b][a] = hess[a][b];
        }
    }
    (grad, hess)
}

/// Solves `(H + ridge·I) s = g` by Cholesky. A pivot that only the ridge keeps
/// positive means the design is rank deficient.
fn solve_spd<T: Scalar>(mut h: Vec<Vec<T>>, g: &[T]) -> Result<Vec<T>> {
    let p = g.len();
    let ridge = T::lit(RIDGE);
    let scale = (0..p).fold(T::zero(), |m, i| m.max(h[i][i]));
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = row[i] + ridge;
    }
    let mut l = vec![vec![T::zero(); p]; p];
    for j in 0..p {
        let mut s = h[j][j];
        for k in 0..j {
            s = s - l[j][k] * l[j][k];
        }
        if !(s > ridge * T::lit(10.0) + scale * T::lit(1e-13)) {
            return Err(Error::DegenerateDesign);
        }
        let diag = s.sqrt();
        l[j][j] = diag;
        for i in j + 1..p {
            let mut s = h[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            l[i][j] = s / diag;
        }
    }
    let mut y = vec![T::zero(); p];
    for i in 0..p {
        let mut s = g[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Ok(x)
}

fn separates<T: Scalar>(data: &Dataset<T>, theta: &[T]) -> bool {
    data.rows().enumerate().all(|(i, x)| {
        let z = linear(theta, x);
        if data.labels()[i].is_pos() {
            z > T::zero()
        } else {
            z < T::zero()
        }
    })
}
