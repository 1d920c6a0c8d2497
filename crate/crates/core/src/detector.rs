//! Matched posterior-marginal detection.
//!
//! The posterior over candidate bits is `P(τ | y) ∝ exp{-H(τ)}` with
//! `H(τ) = Q Σ_μ (y_μ - Σ_k s_{μk} τ_k)^2`. [`exact_marginals`] sums it
//! over all `2^K` configurations; [`bp_detect`] runs flooding sum-product
//! belief propagation on the Tanner graph with the chip messages
//! enumerated exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::TransmissionRecord;
use crate::ensemble::SparseCode;
use crate::factor::{self, cavity_bias, log1p_tanh_product, log_2cosh, log_chip_partition};
use crate::{Error, Result};

/// Largest user count accepted by exhaustive enumeration.
pub const MAX_EXACT_USERS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Bp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMarginals {
    /// `P(τ_k = +1 | y)` per user.
    pub prob_plus: Vec<f64>,
    pub method: Method,
    /// BP sweeps performed (0 for exact).
    pub iterations: usize,
    /// Always true for exact enumeration.
    pub converged: bool,
    /// Final largest message change (0 for exact).
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageInit {
    /// All chip-to-user messages start at zero.
    Uninformed,
    /// Chip-to-user messages start at `b_k * informed_llr`, using the true
    /// bits (a probe of the low-error basin, not a decoder).
    Informed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpParams {
    pub max_iterations: usize,
    /// Convergence threshold on the largest chip-to-user message change.
    pub tolerance: f64,
    /// Weight kept from the previous message, in `[0, 1)`.
    pub damping: f64,
    pub init: MessageInit,
    pub informed_llr: f64,
}

impl Default for BpParams {
    fn default() -> Self {
        BpParams {
            max_iterations: 1000,
            tolerance: 1e-8,
            damping: 0.0,
            init: MessageInit::Uninformed,
            informed_llr: 20.0,
        }
    }
}

impl BpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Domain(format!(
                "damping {} outside [0, 1)",
                self.damping
            )));
        }
        Ok(())
    }
}

fn check_record(code: &SparseCode, record: &TransmissionRecord) -> Result<()> {
    if record.bits().len() != code.users() || record.received().len() != code.chips() {
        return Err(Error::Domain(format!(
            "record ({} bits, {} chips) does not fit a {}x{} code",
            record.bits().len(),
            record.received().len(),
            code.users(),
            code.chips()
        )));
    }
    Ok(())
}

/// Exact posterior marginals by Gray-code enumeration of all `2^K`
/// configurations.
pub fn exact_marginals(
    code: &SparseCode,
    record: &TransmissionRecord,
) -> Result<PosteriorMarginals> {
    check_record(code, record)?;
    let k = code.users();
    if k > MAX_EXACT_USERS {
        return Err(Error::Capacity {
            what: "users for exact enumeration",
            value: k,
            limit: MAX_EXACT_USERS,
        });
    }
    // first pass finds the ground energy, second accumulates exp(-(E - E0))
    let mut ground = f64::INFINITY;
    enumerate_energies(code, record, |_, e| ground = ground.min(e));
    let mut total = 0.0;
    let mut plus = vec![0.0; k];
    enumerate_energies(code, record, |tau, e| {
        let w = libm::exp(-(e - ground));
        total += w;
        for (user, p) in plus.iter_mut().enumerate() {
            if tau & (1 << user) == 0 {
                *p += w;
            }
        }
    });
    Ok(PosteriorMarginals {
        prob_plus: plus.iter().map(|p| p / total).collect(),
        method: Method::Exact,
        iterations: 0,
        converged: true,
        residual: 0.0,
    })
}

/// Visits every configuration (bit `k` of the mask set means `τ_k = -1`)
/// with its energy.
fn enumerate_energies<F: FnMut(u32, f64)>(
    code: &SparseCode,
    record: &TransmissionRecord,
    mut visit: F,
) {
    let q = record.q();
    let k = code.users();
    let mut residual: Vec<f64> = (0..code.chips())
        .map(|chip| {
            record.received()[chip] - code.chip_entries(chip).iter().map(|e| e.value).sum::<f64>()
        })
        .collect();
    let energy = |r: &[f64]| q * r.iter().map(|x| x * x).sum::<f64>();
    let mut tau = 0u32;
    visit(tau, energy(&residual));
    for step in 1u64..(1u64 << k) {
        let user = step.trailing_zeros() as usize;
        let was_plus = tau & (1 << user) == 0;
        tau ^= 1 << user;
        for e in code.user_entries(user) {
            // τ flips from ±1 to ∓1, the residual moves by ±2 s
            residual[e.chip] += if was_plus {
                2.0 * e.value
            } else {
                -2.0 * e.value
            };
        }
        visit(tau, energy(&residual));
    }
}

/// Chip-to-user (`u`) and user-to-chip (`h`) messages, indexed like
/// [`SparseCode::entries`].
#[derive(Debug, Clone, PartialEq)]
pub struct BpMessages {
    pub chip_to_user: Vec<f64>,
    pub user_to_chip: Vec<f64>,
}

/// A finished belief-propagation run.
#[derive(Debug, Clone, PartialEq)]
pub struct BpRun {
    pub marginals: PosteriorMarginals,
    pub messages: BpMessages,
    /// Full log-likelihood ratio (half convention) per user.
    pub total_fields: Vec<f64>,
}

/// Sum-product belief propagation with a flooding schedule.
pub fn bp_detect(
    code: &SparseCode,
    record: &TransmissionRecord,
    params: &BpParams,
) -> Result<PosteriorMarginals> {
    bp_run(code, record, params).map(|run| run.marginals)
}

/// [`bp_detect`] keeping the final messages.
pub fn bp_run(code: &SparseCode, record: &TransmissionRecord, params: &BpParams) -> Result<BpRun> {
    check_record(code, record)?;
    params.validate()?;
    let degree = code.max_chip_degree();
    if degree > factor::MAX_ENUMERATED_NEIGHBOURS + 1 {
        return Err(Error::Capacity {
            what: "chip degree for BP",
            value: degree,
            limit: factor::MAX_ENUMERATED_NEIGHBOURS + 1,
        });
    }
    let q = record.q();
    let entries = code.entries();
    let mut u: Vec<f64> = match params.init {
        MessageInit::Uninformed => vec![0.0; entries.len()],
        MessageInit::Informed => entries
            .iter()
            .map(|e| f64::from(record.bits()[e.user]) * params.informed_llr)
            .collect(),
    };
    let mut h = vec![0.0; entries.len()];
    let mut next = vec![0.0; entries.len()];
    let mut coefs = Vec::with_capacity(degree);
    let mut fields = Vec::with_capacity(degree);

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < params.max_iterations {
        iterations += 1;
        user_to_chip(code, &u, &mut h);
        residual = 0.0;
        for chip in 0..code.chips() {
            let base = code.chip_offset(chip);
            let row = code.chip_entries(chip);
            let y = record.received()[chip];
            for (i, root) in row.iter().enumerate() {
                coefs.clear();
                fields.clear();
                for (j, other) in row.iter().enumerate() {
                    if j != i {
                        coefs.push(other.value);
                        fields.push(h[base + j]);
                    }
                }
                let fresh = cavity_bias(q, y, root.value, &coefs, &fields);
                let old = u[base + i];
                let new = (1.0 - params.damping) * fresh + params.damping * old;
                residual = f64::max(residual, libm::fabs(new - old));
                next[base + i] = new;
            }
        }
        core::mem::swap(&mut u, &mut next);
        if residual < params.tolerance {
            converged = true;
            break;
        }
    }
    user_to_chip(code, &u, &mut h);

    let total_fields: Vec<f64> = (0..code.users())
        .map(|k| code.user_entry_ids(k).iter().map(|&e| u[e]).sum())
        .collect();
    let prob_plus = total_fields
        .iter()
        .map(|&f| posterior_from_field(f))
        .collect();
    Ok(BpRun {
        marginals: PosteriorMarginals {
            prob_plus,
            method: Method::Bp,
            iterations,
            converged,
            residual,
        },
        messages: BpMessages {
            chip_to_user: u,
            user_to_chip: h,
        },
        total_fields,
    })
}

fn user_to_chip(code: &SparseCode, u: &[f64], h: &mut [f64]) {
    for k in 0..code.users() {
        let ids = code.user_entry_ids(k);
        let total: f64 = ids.iter().map(|&e| u[e]).sum();
        for &e in ids {
            // exclude the receiving chip; re-summing avoids cancellation
            h[e] = if ids.len() <= 8 {
                ids.iter().filter(|&&o| o != e).map(|&o| u[o]).sum()
            } else {
                total - u[e]
            };
        }
    }
}

/// `P(τ = +1)` for a half log-likelihood ratio `field`.
pub fn posterior_from_field(field: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-2.0 * field))
}

/// Bethe estimate of `-log Σ_τ exp{-H(τ)}` from a set of messages. Exact
/// on cycle-free codes when the messages are the BP fixed point.
pub fn bethe_free_energy(
    code: &SparseCode,
    record: &TransmissionRecord,
    messages: &BpMessages,
) -> Result<f64> {
    check_record(code, record)?;
    let q = record.q();
    let u = &messages.chip_to_user;
    let h = &messages.user_to_chip;
    let mut log_z = 0.0;
    let mut coefs = Vec::new();
    let mut fields = Vec::new();
    for chip in 0..code.chips() {
        let base = code.chip_offset(chip);
        let row = code.chip_entries(chip);
        coefs.clear();
        fields.clear();
        for (j, e) in row.iter().enumerate() {
            coefs.push(e.value);
            fields.push(h[base + j]);
        }
        log_z += log_chip_partition(q, record.received()[chip], &coefs, &fields);
        for (j, _) in row.iter().enumerate() {
            log_z -= log1p_tanh_product(h[base + j], u[base + j]) - core::f64::consts::LN_2;
        }
    }
    for k in 0..code.users() {
        let ids = code.user_entry_ids(k);
        let total: f64 = ids.iter().map(|&e| u[e]).sum();
        log_z += log_2cosh(total) - ids.iter().map(|&e| log_2cosh(u[e])).sum::<f64>();
    }
    Ok(-log_z)
}

/// Hard decisions with the tie convention of [`overlap_ber`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decisions {
    pub bits: Vec<i8>,
    /// Sites whose posterior was exactly one half (decided as +1).
    pub ties: Vec<bool>,
}

/// `sign(P(+) - ½)`, ties decided +1 and flagged.
pub fn hard_decisions(marginals: &PosteriorMarginals) -> Decisions {
    let mut bits = Vec::with_capacity(marginals.prob_plus.len());
    let mut ties = Vec::with_capacity(marginals.prob_plus.len());
    for &p in &marginals.prob_plus {
        bits.push(if p < 0.5 { -1 } else { 1 });
        ties.push(p == 0.5);
    }
    Decisions { bits, ties }
}

/// Overlap `m = (1/K) Σ b_k τ_k` (tied sites contribute 0) and
/// `BER = (1 - m)/2`.
pub fn overlap_ber(decoded: &[i8], sent: &[i8], ties: &[bool]) -> Result<(f64, f64)> {
    if decoded.len() != sent.len() || ties.len() != sent.len() {
        return Err(Error::Domain(format!(
            "lengths differ: decoded {}, sent {}, ties {}",
            decoded.len(),
            sent.len(),
            ties.len()
        )));
    }
    if sent.is_empty() {
        return Err(Error::Domain("no bits to compare".into()));
    }
    let sum: i64 = decoded
        .iter()
        .zip(sent)
        .zip(ties)
        .filter(|(_, &tie)| !tie)
        .map(|((&d, &s), _)| i64::from(d) * i64::from(s))
        .sum();
    let m = sum as f64 / sent.len() as f64;
    Ok((m, 0.5 * (1.0 - m)))
}

/// Bit error rate of the hard decisions of `marginals` against `sent`.
pub fn bit_error_rate(marginals: &PosteriorMarginals, sent: &[i8]) -> Result<f64> {
    let d = hard_decisions(marginals);
    overlap_ber(&d.bits, sent, &d.ties).map(|(_, ber)| ber)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit, transmit_with_noise};
    use crate::ensemble::{sample_code, EnsembleSpec, Entry, Modulation, Regularity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_user() -> SparseCode {
        let spec = EnsembleSpec::fully_regular(1, 1, 1, 1, Modulation::Unmodulated).unwrap();
        sample_code(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn single_user_posterior() {
        let code = single_user();
        let rec = transmit_with_noise(&code, &[1], vec![0.0], 1.0).unwrap();
        let m = exact_marginals(&code, &rec).unwrap();
        let expected = 1.0 / (1.0 + libm::exp(-2.0));
        assert!((m.prob_plus[0] - expected).abs() < 1e-12);
        assert!((m.prob_plus[0] - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn symmetric_observation_gives_half() {
        let code = single_user();
        // y = 0: noise -1 on top of b = +1
        let rec = transmit_with_noise(&code, &[1], vec![-1.0], 1.0).unwrap();
        assert_eq!(rec.received(), &[0.0]);
        let m = exact_marginals(&code, &rec).unwrap();
        assert_eq!(m.prob_plus[0], 0.5);
        let d = hard_decisions(&m);
        assert_eq!(d.bits, vec![1]);
        assert_eq!(d.ties, vec![true]);
        assert_eq!(overlap_ber(&d.bits, &[1], &d.ties).unwrap(), (0.0, 0.5));
    }

    #[test]
    fn single_user_bp_one_iteration() {
        let code = single_user();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rec = transmit(&code, &[-1], 0.8, &mut rng).unwrap();
        let exact = exact_marginals(&code, &rec).unwrap();
        let params = BpParams {
            max_iterations: 1,
            ..Default::default()
        };
        let bp = bp_detect(&code, &rec, &params).unwrap();
        assert_eq!(bp.iterations, 1);
        assert!((bp.prob_plus[0] - exact.prob_plus[0]).abs() < 1e-12);
    }

    #[test]
    fn capacity_errors() {
        let spec = EnsembleSpec {
            users: 25,
            chips: 25,
            user_degree: 1,
            chip_degree: 1,
            modulation: Modulation::Bpsk,
            regularity: Regularity::FullyRegular,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let code = sample_code(&spec, &mut rng).unwrap();
        let rec = transmit(&code, &[1; 25], 1.0, &mut rng).unwrap();
        assert!(matches!(
            exact_marginals(&code, &rec),
            Err(Error::Capacity { .. })
        ));

        let spec = EnsembleSpec::fully_regular(17, 1, 1, 17, Modulation::Bpsk).unwrap();
        let code = sample_code(&spec, &mut rng).unwrap();
        let rec = transmit(&code, &[1; 17], 1.0, &mut rng).unwrap();
        assert!(matches!(
            bp_detect(&code, &rec, &BpParams::default()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn hard_decision_examples() {
        let m = PosteriorMarginals {
            prob_plus: vec![0.9, 0.1],
            method: Method::Exact,
            iterations: 0,
            converged: true,
            residual: 0.0,
        };
        let d = hard_decisions(&m);
        assert_eq!(d.bits, vec![1, -1]);
        assert_eq!(d.ties, vec![false, false]);
    }

    #[test]
    fn overlap_examples() {
        let sent = [1i8, -1, 1, 1];
        let no_ties = [false; 4];
        assert_eq!(overlap_ber(&sent, &sent, &no_ties).unwrap(), (1.0, 0.0));
        let flipped: Vec<i8> = sent.iter().map(|b| -b).collect();
        assert_eq!(overlap_ber(&flipped, &sent, &no_ties).unwrap(), (-1.0, 1.0));
        let half = [1i8, 1, -1, 1];
        assert_eq!(overlap_ber(&half, &sent, &no_ties).unwrap(), (0.0, 0.5));
        assert!(overlap_ber(&half[..3], &sent, &no_ties).is_err());
    }

    #[test]
    fn noiseless_high_q_recovers_bits() {
        let spec = EnsembleSpec::fully_regular(12, 9, 3, 4, Modulation::Bpsk).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for _ in 0..20 {
            let code = sample_code(&spec, &mut rng).unwrap();
            let bits = crate::channel::sample_bits(12, &mut rng).unwrap();
            let rec = transmit_with_noise(&code, &bits, vec![0.0; 9], 0.1).unwrap();
            // oracle: the sent word decodes whenever it is the only
            // configuration reproducing the noiseless signal
            let mut zero_energy = 0;
            enumerate_energies(&code, &rec, |_, e| {
                if e < 1e-9 {
                    zero_energy += 1;
                }
            });
            if zero_energy != 1 {
                continue;
            }
            checked += 1;
            let d = hard_decisions(&exact_marginals(&code, &rec).unwrap());
            assert_eq!(d.bits, bits);
        }
        assert!(checked > 0);
    }

    #[test]
    fn bp_exact_on_chain() {
        // users 0-1-2-3-4 along chips 0..4: a path, hence a tree
        let spec = EnsembleSpec {
            users: 5,
            chips: 4,
            user_degree: 2,
            chip_degree: 2,
            modulation: Modulation::Bpsk,
            regularity: Regularity::PureRandom,
        };
        let a = 1.0 / libm::sqrt(2.0);
        let entries = (0..4).flat_map(|c| {
            [
                Entry {
                    user: c,
                    chip: c,
                    value: a,
                },
                Entry {
                    user: c + 1,
                    chip: c,
                    value: if c % 2 == 0 { -a } else { a },
                },
            ]
        });
        let code = SparseCode::from_entries(spec, a, entries.collect::<Vec<_>>()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rec = transmit(&code, &[1, -1, -1, 1, 1], 0.6, &mut rng).unwrap();
        let exact = exact_marginals(&code, &rec).unwrap();
        let run = bp_run(&code, &rec, &BpParams::default()).unwrap();
        assert!(run.marginals.converged);
        for (a, b) in run.marginals.prob_plus.iter().zip(&exact.prob_plus) {
            assert!((a - b).abs() < 1e-8);
        }
        let f = bethe_free_energy(&code, &rec, &run.messages).unwrap();
        let mut acc = factor::LogSumExp::new();
        enumerate_energies(&code, &rec, |_, e| acc.push(-e));
        assert!((f + acc.value()).abs() < 1e-8, "{f} vs {}", -acc.value());
    }
}
