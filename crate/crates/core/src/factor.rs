//! Log-domain kernels for a single chip factor.
//!
//! A chip with signal `y` and entries `s_j` contributes the weight
//! `exp{-Q (y - Σ_j s_j τ_j)^2}`. Messages are half log-likelihood ratios:
//! a message `m` on a spin stands for the distribution `∝ exp(m τ)`.
//! Belief propagation and population dynamics share these kernels; the
//! population dynamics kernels feed them the gauged chip signal
//! `ω + Σ_l x_l`, which turns `y - Σ x_l τ_l` into `ω + Σ x_l (1 - τ_l)`.

use core::f64::consts::LN_2;

/// Largest number of other users on a chip for which factor messages are
/// enumerated (`2^15` configurations).
pub const MAX_ENUMERATED_NEIGHBOURS: usize = 15;

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            self.sum += libm::exp(x - self.max);
        } else {
            self.sum = self.sum * libm::exp(self.max - x) + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + libm::log(self.sum)
        }
    }
}

/// `log(2 cosh x)` without overflow.
#[inline]
pub fn log_2cosh(x: f64) -> f64 {
    let a = libm::fabs(x);
    a + libm::log1p(libm::exp(-2.0 * a))
}

/// `log cosh x` without overflow.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    log_2cosh(x) - LN_2
}

/// `log(1 + tanh a tanh b)`, accurate when the product approaches -1.
#[inline]
pub fn log1p_tanh_product(a: f64, b: f64) -> f64 {
    log_2cosh(a + b) - log_2cosh(a) - log_2cosh(b) + LN_2
}

#[inline]
pub fn clamp(x: f64, cap: f64) -> f64 {
    x.clamp(-cap, cap)
}

/// Message from a chip to one of its users (the root).
///
/// `root` is the root's code entry, `coefs[j]`/`fields[j]` are the entries
/// and incoming messages of the other users. Returns
/// `½ log Z(+1) - ½ log Z(-1)` with
/// `Z(t) = Σ_τ exp{-Q (y - root t - Σ_j coefs_j τ_j)^2 + Σ_j fields_j τ_j}`.
pub fn cavity_bias(q: f64, y: f64, root: f64, coefs: &[f64], fields: &[f64]) -> f64 {
    debug_assert_eq!(coefs.len(), fields.len());
    debug_assert!(coefs.len() <= MAX_ENUMERATED_NEIGHBOURS);
    let m = coefs.len();
    let mut plus = LogSumExp::new();
    let mut minus = LogSumExp::new();
    for mask in 0u32..(1u32 << m) {
        let mut signal = 0.0;
        let mut bias = 0.0;
        for j in 0..m {
            if mask & (1 << j) == 0 {
                signal += coefs[j];
                bias += fields[j];
            } else {
                signal -= coefs[j];
                bias -= fields[j];
            }
        }
        let rp = y - root - signal;
        let rm = y + root - signal;
        plus.push(bias - q * rp * rp);
        minus.push(bias - q * rm * rm);
    }
    0.5 * (plus.value() - minus.value())
}

/// Normalised chip partition function
/// `log Σ_τ Π_j [exp(fields_j τ_j) / (2 cosh fields_j)] exp{-Q (y - Σ_j coefs_j τ_j)^2}`
/// over all users of the chip.
pub fn log_chip_partition(q: f64, y: f64, coefs: &[f64], fields: &[f64]) -> f64 {
    debug_assert_eq!(coefs.len(), fields.len());
    debug_assert!(coefs.len() <= MAX_ENUMERATED_NEIGHBOURS + 1);
    let m = coefs.len();
    let mut acc = LogSumExp::new();
    for mask in 0u32..(1u32 << m) {
        let mut signal = 0.0;
        let mut bias = 0.0;
        for j in 0..m {
            if mask & (1 << j) == 0 {
                signal += coefs[j];
                bias += fields[j];
            } else {
                signal -= coefs[j];
                bias -= fields[j];
            }
        }
        let r = y - signal;
        acc.push(bias - q * r * r);
    }
    acc.value() - fields.iter().map(|&h| log_2cosh(h)).sum::<f64>()
}
