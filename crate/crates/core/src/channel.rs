//! Synchronous AWGN channel with BPSK bits.
//!
//! Noise samples are `sigma0 * Z` with `Z` drawn by the ziggurat
//! `StandardNormal` sampler of `rand_distr` from the caller's RNG.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::SparseCode;
use crate::{Error, Result};

/// Power spectral density `Q = 1/(2 sigma0^2)`.
pub fn psd_q(sigma0: f64) -> Result<f64> {
    if !(sigma0 > 0.0) || !sigma0.is_finite() {
        return Err(Error::Domain(format!(
            "sigma0 must be positive and finite, got {sigma0}"
        )));
    }
    Ok(1.0 / (2.0 * sigma0 * sigma0))
}

/// Inverse of [`psd_q`].
pub fn sigma0_from_q(q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!(
            "Q must be positive and finite, got {q}"
        )));
    }
    Ok(libm::sqrt(0.5 / q))
}

/// `count` independent uniform bits in {-1, +1}.
pub fn sample_bits<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Vec<i8>> {
    if count == 0 {
        return Err(Error::Domain("at least one bit is required".into()));
    }
    Ok((0..count)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect())
}

/// Noise-free chip signal `sum_k b_k s_{μk}`.
pub fn noiseless_signal(code: &SparseCode, bits: &[i8]) -> Result<Vec<f64>> {
    if bits.len() != code.users() {
        return Err(Error::Domain(format!(
            "{} bits for a code with {} users",
            bits.len(),
            code.users()
        )));
    }
    Ok((0..code.chips())
        .map(|chip| {
            code.chip_entries(chip)
                .iter()
                .map(|e| f64::from(bits[e.user]) * e.value)
                .sum()
        })
        .collect())
}

/// Bits, noise and received signal of one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionRecord {
    bits: Vec<i8>,
    noise: Vec<f64>,
    received: Vec<f64>,
    sigma0: f64,
}

impl TransmissionRecord {
    /// Reassembles a record, e.g. after deserialization. Lengths, bit values
    /// and `sigma0` are checked; use [`verify`](Self::verify) to check the
    /// received signal against a code.
    pub fn from_parts(
        bits: Vec<i8>,
        noise: Vec<f64>,
        received: Vec<f64>,
        sigma0: f64,
    ) -> Result<Self> {
        psd_q(sigma0)?;
        if noise.len() != received.len() {
            return Err(Error::Domain(format!(
                "noise has {} chips, received has {}",
                noise.len(),
                received.len()
            )));
        }
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::Domain("bits must be +1 or -1".into()));
        }
        Ok(TransmissionRecord {
            bits,
            noise,
            received,
            sigma0,
        })
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn received(&self) -> &[f64] {
        &self.received
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// `Q`, always derived from `sigma0`.
    pub fn q(&self) -> f64 {
        1.0 / (2.0 * self.sigma0 * self.sigma0)
    }

    /// Largest relative deviation of `received` from `noise + signal`.
    pub fn verify(&self, code: &SparseCode) -> Result<f64> {
        if self.received.len() != code.chips() {
            return Err(Error::Domain(format!(
                "record has {} chips, code has {}",
                self.received.len(),
                code.chips()
            )));
        }
        let signal = noiseless_signal(code, &self.bits)?;
        Ok(signal
            .iter()
            .zip(&self.noise)
            .zip(&self.received)
            .map(|((s, n), y)| libm::fabs(y - (s + n)) / libm::fmax(1.0, libm::fabs(*y)))
            .fold(0.0, f64::max))
    }
}

/// Sends `bits` through the channel with fresh Gaussian noise.
pub fn transmit<R: Rng + ?Sized>(
    code: &SparseCode,
    bits: &[i8],
    sigma0: f64,
    rng: &mut R,
) -> Result<TransmissionRecord> {
    psd_q(sigma0)?;
    let noise: Vec<f64> = (0..code.chips())
        .map(|_| sigma0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    transmit_with_noise(code, bits, noise, sigma0)
}

/// Sends `bits` with a caller-chosen noise realisation (zero noise gives the
/// noiseless limit while keeping `sigma0` as the detector's noise model).
pub fn transmit_with_noise(
    code: &SparseCode,
    bits: &[i8],
    noise: Vec<f64>,
    sigma0: f64,
) -> Result<TransmissionRecord> {
    if noise.len() != code.chips() {
        return Err(Error::Domain(format!(
            "{} noise samples for {} chips",
            noise.len(),
            code.chips()
        )));
    }
    let signal = noiseless_signal(code, bits)?;
    let received = signal.iter().zip(&noise).map(|(s, n)| s + n).collect();
    TransmissionRecord::from_parts(bits.to_vec(), noise, received, sigma0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_code, EnsembleSpec, Modulation};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psd_values() {
        assert_eq!(psd_q(1.0).unwrap(), 0.5);
        assert_eq!(psd_q(0.5).unwrap(), 2.0);
        assert!((psd_q(libm::sqrt(0.5)).unwrap() - 1.0).abs() < 1e-15);
        assert!(psd_q(0.0).is_err());
        assert!(psd_q(-1.0).is_err());
        assert!((sigma0_from_q(2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bits_deterministic_and_balanced() {
        let a = sample_bits(1, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_bits(1, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert!(a[0] == 1 || a[0] == -1);
        assert!(sample_bits(0, &mut ChaCha8Rng::seed_from_u64(4)).is_err());

        let n = 100_000;
        let bits = sample_bits(n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let mean = bits.iter().map(|&b| f64::from(b)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / libm::sqrt(n as f64));
    }

    #[test]
    fn noiseless_single_user() {
        let spec = EnsembleSpec::fully_regular(1, 1, 1, 1, Modulation::Unmodulated).unwrap();
        let code = sample_code(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let rec = transmit_with_noise(&code, &[1], vec![0.0], 1.0).unwrap();
        assert_eq!(rec.received(), &[1.0]);
    }

    #[test]
    fn six_three_all_plus() {
        let spec = EnsembleSpec::fully_regular(6, 3, 3, 6, Modulation::Unmodulated).unwrap();
        let code = sample_code(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let rec = transmit_with_noise(&code, &[1; 6], vec![0.0; 3], 1.0).unwrap();
        for y in rec.received() {
            assert!((y - libm::sqrt(6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_is_domain_error() {
        let spec = EnsembleSpec::fully_regular(6, 3, 3, 6, Modulation::Bpsk).unwrap();
        let code = sample_code(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            transmit(&code, &[1; 5], 1.0, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn received_matches_definition() {
        let spec = EnsembleSpec::fully_regular(40, 30, 3, 4, Modulation::Bpsk).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let code = sample_code(&spec, &mut rng).unwrap();
        let bits = sample_bits(40, &mut rng).unwrap();
        let rec = transmit(&code, &bits, 0.7, &mut rng).unwrap();
        assert!(rec.verify(&code).unwrap() <= 1e-12);
        assert!((rec.q() * 2.0 * rec.sigma0() * rec.sigma0() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noise_variance() {
        let n = 100_000;
        let spec = EnsembleSpec {
            users: 1,
            chips: n,
            user_degree: 1,
            chip_degree: 1,
            modulation: Modulation::Unmodulated,
            regularity: crate::Regularity::UserRegular,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let code = sample_code(&spec, &mut rng).unwrap();
        let sigma0 = 0.8;
        let rec = transmit(&code, &[1], sigma0, &mut rng).unwrap();
        let xs: Vec<f64> = rec.noise().iter().map(|v| v * v).collect();
        let (m, se) = crate::stats::mean_se(&xs);
        assert!(
            (m - sigma0 * sigma0).abs() < 3.0 * se,
            "{m} vs {}",
            sigma0 * sigma0
        );
    }
}
