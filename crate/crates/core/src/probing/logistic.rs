use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ProbeConfig, ProbeError};

/// Binary logistic regression `P(y = 1 | x) = σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticProbe {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-m))` without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

impl LogisticProbe {
    pub fn decision(&self, x: &[f32]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>()
    }

    pub fn predict(&self, x: &[f32]) -> bool {
        self.decision(x) > 0.0
    }

    pub fn accuracy<'a>(&self, xs: impl IntoIterator<Item = (&'a [f32], bool)>) -> Option<f64> {
        let (mut hit, mut n) = (0usize, 0usize);
        for (x, y) in xs {
            hit += (self.predict(x) == y) as usize;
            n += 1;
        }
        (n > 0).then(|| hit as f64 / n as f64)
    }
}

/// Fits by Newton's method on
/// `½‖w‖² + C Σ sᵢ log(1 + exp(-ỹᵢ (w·xᵢ + b)))`, with `sᵢ` the inverse
/// class-frequency weight when balancing and the intercept unpenalized.
pub fn fit_logistic(xs: &[&[f32]], ys: &[bool], cfg: &ProbeConfig) -> Result<LogisticProbe, ProbeError> {
    let n = xs.len();
    let n_pos = ys.iter().filter(|&&y| y).count();
    if n == 0 || n_pos == 0 || n_pos == n {
        return Err(ProbeError::SingleClassInput);
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d) {
        return Err(ProbeError::WidthMismatch);
    }
    let p = d + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j < d { xs[i][j] as f64 } else { 1.0 });
    let t = DVector::from_iterator(n, ys.iter().map(|&y| y as u8 as f64));
    let (w_pos, w_neg) = if cfg.balanced {
        (n as f64 / (2.0 * n_pos as f64), n as f64 / (2.0 * (n - n_pos) as f64))
    } else {
        (1.0, 1.0)
    };
    let s = DVector::from_iterator(n, ys.iter().map(|&y| cfg.c * if y { w_pos } else { w_neg }));
    let mut reg = DVector::from_element(p, 1.0);
    reg[d] = 0.0;

    let objective = |theta: &DVector<f64>| {
        let z = &x * theta;
        let data: f64 = (0..n).map(|i| s[i] * log1p_exp_neg(if t[i] > 0.5 { z[i] } else { -z[i] })).sum();
        0.5 * theta.rows(0, d).norm_squared() + data
    };

    let scale = s.sum().max(1.0);
    let mut theta = DVector::zeros(p);
    let mut f = objective(&theta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let z = &x * &theta;
        let prob = z.map(sigmoid);
        let resid = (&prob - &t).component_mul(&s);
        let grad = x.tr_mul(&resid) + reg.component_mul(&theta);
        if grad.amax() <= cfg.tol * scale {
            converged = true;
            break;
        }
        let curv = prob.zip_map(&s, |q, si| (q * (1.0 - q) * si).sqrt());
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= curv[i];
        }
        let mut hess = xw.tr_mul(&xw);
        for j in 0..p {
            hess[(j, j)] += reg[j] + 1e-10;
        }
        let Some(chol) = hess.cholesky() else { break };
        let step = chol.solve(&grad);
        let slope = grad.dot(&step);
        let mut alpha = 1.0;
        loop {
            let cand = &theta - &step * alpha;
            let fc = objective(&cand);
            if fc <= f - 1e-4 * alpha * slope || alpha < 1e-10 {
                theta = cand;
                f = fc;
                break;
            }
            alpha *= 0.5;
        }
        if alpha < 1e-10 {
            break;
        }
    }
    Ok(LogisticProbe { weights: theta.rows(0, d).iter().copied().collect(), bias: theta[d], iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_points() {
        let a = [1.0f32, 0.0];
        let b = [-1.0f32, 0.0];
        let xs: Vec<&[f32]> = vec![&a, &b];
        let probe = fit_logistic(&xs, &[true, false], &ProbeConfig::default()).unwrap();
        assert!(probe.converged);
        assert_eq!(probe.accuracy(xs.iter().copied().zip([true, false])), Some(1.0));
    }

    #[test]
    fn single_class_is_rejected() {
        let a = [1.0f32];
        let xs: Vec<&[f32]> = vec![&a, &a];
        assert_eq!(fit_logistic(&xs, &[true, true], &ProbeConfig::default()), Err(ProbeError::SingleClassInput));
    }

    #[test]
    fn one_dimensional_optimum_has_zero_gradient() {
        // Gradient of the objective recomputed by hand at the fitted point.
        let pts: Vec<[f32; 1]> = vec![[0.5], [1.5], [-0.3], [2.0], [-1.0], [0.1]];
        let ys = [true, true, false, true, false, false];
        let xs: Vec<&[f32]> = pts.iter().map(|p| p.as_slice()).collect();
        let cfg = ProbeConfig { balanced: false, ..ProbeConfig::default() };
        let probe = fit_logistic(&xs, &ys, &cfg).unwrap();
        let (w, b) = (probe.weights[0], probe.bias);
        let gw: f64 = w + pts.iter().zip(ys).map(|(p, y)| (sigmoid(w * p[0] as f64 + b) - y as u8 as f64) * p[0] as f64).sum::<f64>();
        let gb: f64 = pts.iter().zip(ys).map(|(p, y)| sigmoid(w * p[0] as f64 + b) - y as u8 as f64).sum();
        assert!(gw.abs() < 1e-6 && gb.abs() < 1e-6, "{gw} {gb}");
    }
}
