use alloc::vec::Vec;

use super::AutodiffError;

/// Smallest probability fed to the logarithm in [`cross_entropy`].
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Logistic function, written so neither branch overflows.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Gradient through `y = sigmoid(x)` from the output `y`.
pub fn sigmoid_backward(y: f64, dy: f64) -> f64 {
    dy * y * (1.0 - y)
}

pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// Gradient through `y = tanh(x)` from the output `y`.
pub fn tanh_backward(y: f64, dy: f64) -> f64 {
    dy * (1.0 - y * y)
}

/// Softmax with max subtraction.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Vector-Jacobian product of softmax: `dx = p ⊙ (dp − ⟨p, dp⟩)`.
pub fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let inner: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(pi, di)| pi * (di - inner)).collect()
}

/// `−ln p[target]`, with `p[target]` floored at [`PROBABILITY_FLOOR`].
pub fn cross_entropy(predicted: &[f64], target: usize) -> Result<f64, AutodiffError> {
    let p = *predicted.get(target).ok_or(AutodiffError::TargetOutOfRange {
        target,
        len: predicted.len(),
    })?;
    Ok(-libm::log(p.max(PROBABILITY_FLOOR)))
}

/// Gradient of `cross_entropy(softmax(z), target)` with respect to `z`.
pub fn cross_entropy_softmax_backward(predicted: &[f64], target: usize) -> Result<Vec<f64>, AutodiffError> {
    if target >= predicted.len() {
        return Err(AutodiffError::TargetOutOfRange {
            target,
            len: predicted.len(),
        });
    }
    let mut g = predicted.to_vec();
    g[target] -= 1.0;
    Ok(g)
}
