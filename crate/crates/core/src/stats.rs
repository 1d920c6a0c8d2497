//! Small sample-statistics helpers.

/// Sample mean and its standard error (unbiased variance).
/// A single sample has zero standard error; an empty slice gives NaN.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var / n as f64))
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
}

/// Mean of a correlated series with its standard error
/// `sqrt(2 τ_int var / n)`.
///
/// `τ_int = ½ + Σ_{t=1}^{W} ρ(t)` uses the self-consistent window: the
/// smallest `W` with `W ≥ 5 τ_int(W)`. Returns `(mean, se, τ_int)`;
/// `τ_int = ½` for uncorrelated data.
pub fn correlated_mean_se(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len();
    if n < 2 {
        let (m, se) = mean_se(xs);
        return (m, se, 0.5);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c0 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return (mean, 0.0, 0.5);
    }
    let mut tau = 0.5;
    for w in 1..n {
        let ct = (0..n - w)
            .map(|i| (xs[i] - mean) * (xs[i + w] - mean))
            .sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if w as f64 >= 5.0 * tau {
            break;
        }
    }
    let tau = tau.max(0.5);
    let var = c0 * n as f64 / (n - 1) as f64;
    (mean, libm::sqrt(2.0 * tau * var / n as f64), tau)
}

/// Standard error of the mean of a correlated series from `batches`
/// contiguous batch means (trailing samples that do not fill a batch are
/// dropped). Needs at least two batches of one sample each.
pub fn batch_means_se(xs: &[f64], batches: usize) -> Option<f64> {
    if batches < 2 || xs.len() < batches {
        return None;
    }
    let len = xs.len() / batches;
    let means: alloc::vec::Vec<f64> = xs
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    Some(mean_se(&means).1)
}

/// Standard error of `a - b` for independent estimates.
pub fn combined_se(se_a: f64, se_b: f64) -> f64 {
    libm::sqrt(se_a * se_a + se_b * se_b)
}

/// Standard normal upper tail `P(Z > x)`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}
