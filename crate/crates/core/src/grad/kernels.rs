//! Plain forward kernels shared by the tape and by value-only callers.

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ELU with α = 1.
pub fn elu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn elu_derivative(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Max-shifted softmax. Panics on an empty slice.
pub fn softmax(w: &[f64]) -> Vec<f64> {
    assert!(!w.is_empty(), "softmax of an empty vector");
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Non-affine layer normalization with population variance.
pub fn layer_norm(x: &[f64], eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    x.iter().map(|v| (v - mean) * inv).collect()
}

pub(crate) fn layer_norm_inv_std(x: &[f64], eps: f64) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    1.0 / (var + eps).sqrt()
}

/// Mean pinball loss.
pub fn pinball(y: &[f64], yhat: &[f64], q: f64) -> f64 {
    let total: f64 = y
        .iter()
        .zip(yhat)
        .map(|(t, p)| {
            let e = t - p;
            ((q - 1.0) * e).max(q * e)
        })
        .sum();
    total / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_cases() {
        let s = softmax(&[0.0, 0.0, 0.0]);
        assert!(s.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let s = softmax(&[1000.0, 0.0]);
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12);
        let a = softmax(&[0.3, -1.2, 2.0]);
        let b = softmax(&[5.3, 3.8, 7.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn layer_norm_moments() {
        let y = layer_norm(&[3.0, -1.0, 0.5, 2.0], 0.0);
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
