//! Energy landscape of a detection instance.
//!
//! The quadratic energy `H(τ) = Q Σ_μ (ν_μ + Σ_k s_{μk}(b_k - τ_k))^2` can be
//! written as `-(Σ_{k≠k'} J_{kk'} τ_k τ_{k'} + Σ_k h_k τ_k) + const` with
//! `J_{kk'} = -Q Σ_μ s_{μk} s_{μk'}` and `h_k = 2Q Σ_μ y_μ s_{μk}`. This
//! module builds that decomposition, predicts and measures the marginal
//! statistics of the fields, and enumerates the not-all-equal structure of
//! the coupling-only energy for unmodulated codes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{sample_bits, transmit, TransmissionRecord};
use crate::ensemble::{sample_code, EnsembleSpec, Modulation, Regularity, SparseCode};
use crate::{Error, Result};

/// Largest user count for the exhaustive clique census.
pub const MAX_CENSUS_USERS: usize = 24;

/// `H(τ)` evaluated from the noise and sent bits of `record`.
pub fn hamiltonian(code: &SparseCode, record: &TransmissionRecord, tau: &[i8]) -> Result<f64> {
    check_tau(code, tau)?;
    let bits = record.bits();
    if bits.len() != code.users() || record.noise().len() != code.chips() {
        return Err(Error::Domain("record does not fit the code".into()));
    }
    let q = record.q();
    Ok((0..code.chips())
        .map(|chip| {
            let r = record.noise()[chip]
                + code
                    .chip_entries(chip)
                    .iter()
                    .map(|e| e.value * f64::from(bits[e.user] - tau[e.user]))
                    .sum::<f64>();
            q * r * r
        })
        .sum())
}

fn check_tau(code: &SparseCode, tau: &[i8]) -> Result<()> {
    if tau.len() != code.users() {
        return Err(Error::Domain(format!(
            "{} spins for {} users",
            tau.len(),
            code.users()
        )));
    }
    if tau.iter().any(|&t| t != 1 && t != -1) {
        return Err(Error::Domain("spins must be +1 or -1".into()));
    }
    Ok(())
}

/// Couplings and fields of one instance.
///
/// Each unordered pair `k < k'` is stored once with
/// `J_{kk'} = -Q Σ_μ s_{μk} s_{μk'}`; the energy counts ordered pairs, i.e.
/// `E(τ) = -(2 Σ_{k<k'} J_{kk'} τ_k τ_{k'} + Σ_k h_k τ_k) + constant_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingField {
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub fields: Vec<f64>,
    pub q: f64,
    pub constant_offset: f64,
}

impl CouplingField {
    /// Energy in coupling/field form.
    pub fn energy(&self, tau: &[i8]) -> f64 {
        self.offset_free_energy(tau) + self.constant_offset
    }

    fn offset_free_energy(&self, tau: &[i8]) -> f64 {
        -(2.0 * self.coupling_sum(tau)
            + self
                .fields
                .iter()
                .zip(tau)
                .map(|(h, &t)| h * f64::from(t))
                .sum::<f64>())
    }

    fn coupling_sum(&self, tau: &[i8]) -> f64 {
        self.couplings
            .iter()
            .map(|(&(a, b), j)| j * f64::from(tau[a] * tau[b]))
            .sum()
    }

    /// Coupling-only energy `-2 Σ_{k<k'} J τ τ'` (fields and offset dropped).
    pub fn coupling_energy(&self, tau: &[i8]) -> f64 {
        -2.0 * self.coupling_sum(tau)
    }

    /// Field projection `Σ_k h_k τ_k`.
    pub fn field_alignment(&self, tau: &[i8]) -> f64 {
        self.fields
            .iter()
            .zip(tau)
            .map(|(h, &t)| h * f64::from(t))
            .sum()
    }
}

/// Builds `J` and `h` for an instance; the offset makes both energy forms
/// agree at `τ = (+1, ..., +1)`.
pub fn coupling_field_decomposition(
    code: &SparseCode,
    record: &TransmissionRecord,
) -> Result<CouplingField> {
    if record.received().len() != code.chips() || record.bits().len() != code.users() {
        return Err(Error::Domain("record does not fit the code".into()));
    }
    let q = record.q();
    let mut couplings = BTreeMap::new();
    let mut fields = vec![0.0; code.users()];
    for chip in 0..code.chips() {
        let row = code.chip_entries(chip);
        let y = record.received()[chip];
        for (i, a) in row.iter().enumerate() {
            fields[a.user] += 2.0 * q * y * a.value;
            for b in &row[i + 1..] {
                *couplings.entry((a.user, b.user)).or_insert(0.0) -= q * a.value * b.value;
            }
        }
    }
    let mut cf = CouplingField {
        couplings,
        fields,
        q,
        constant_offset: 0.0,
    };
    let reference = vec![1i8; code.users()];
    cf.constant_offset = hamiltonian(code, record, &reference)? - cf.offset_free_energy(&reference);
    Ok(cf)
}

/// Energy differences `H(τ1) - H(τ2)` computed both ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDifference {
    pub direct: f64,
    pub coupling_form: f64,
}

impl EnergyDifference {
    /// `|direct - coupling_form| <= rel * max(1, |direct|)`.
    pub fn agrees(&self, rel: f64) -> bool {
        libm::fabs(self.direct - self.coupling_form)
            <= rel * libm::fmax(1.0, libm::fabs(self.direct))
    }
}

pub fn energy_difference_check(
    code: &SparseCode,
    record: &TransmissionRecord,
    cf: &CouplingField,
    tau1: &[i8],
    tau2: &[i8],
) -> Result<EnergyDifference> {
    check_tau(code, tau1)?;
    check_tau(code, tau2)?;
    Ok(EnergyDifference {
        direct: hamiltonian(code, record, tau1)? - hamiltonian(code, record, tau2)?,
        coupling_form: cf.offset_free_energy(tau1) - cf.offset_free_energy(tau2),
    })
}

/// Ensemble behind a field-moment prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentEnsemble {
    /// Dense spreading, Gaussian marginals.
    Dense,
    SparseBpsk,
    SparseUnmodulated,
}

/// Predicted mean and variance of the gauged field `b_k h_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPrediction {
    pub ensemble: MomentEnsemble,
    pub mean: f64,
    pub variance: f64,
    /// Variance without the interference term (the dense large-system
    /// reading); equal to the noise term `2Q/α`.
    pub noise_variance: f64,
}

/// Mean `2Q/α` and variance `d (2Q)^2 / (αL) + 2Q/α` of the gauged field,
/// where `d` is the mean number of other users on a chip: `L - 1` for chip
/// regular codes, `L` otherwise. The dense prediction uses `d/L = 1`.
pub fn predicted_field_moments(
    spec: &EnsembleSpec,
    q: f64,
    ensemble: MomentEnsemble,
) -> Result<MomentPrediction> {
    spec.validate()?;
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!(
            "Q must be finite and non-negative, got {q}"
        )));
    }
    let alpha = spec.load();
    let l = spec.chip_degree as f64;
    let two_q = 2.0 * q;
    let excess = match ensemble {
        MomentEnsemble::Dense => l,
        MomentEnsemble::SparseBpsk | MomentEnsemble::SparseUnmodulated => {
            let wanted = if ensemble == MomentEnsemble::SparseBpsk {
                Modulation::Bpsk
            } else {
                Modulation::Unmodulated
            };
            if spec.modulation != wanted {
                return Err(Error::Domain(format!(
                    "{ensemble:?} prediction requested for a {} spec",
                    spec.modulation.as_str()
                )));
            }
            match spec.regularity {
                Regularity::FullyRegular => l - 1.0,
                Regularity::UserRegular | Regularity::PureRandom => l,
            }
        }
    };
    let noise_variance = two_q / alpha;
    Ok(MomentPrediction {
        ensemble,
        mean: two_q / alpha,
        variance: excess * two_q * two_q / (alpha * l) + noise_variance,
        noise_variance,
    })
}

/// Monte Carlo moments of the gauged field `b_k h_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub samples: usize,
}

/// Samples `realisations` independent (code, bits, noise) triples from
/// `spec` and pools the gauged fields of all users. Standard errors are
/// computed across realisations.
pub fn empirical_field_moments<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    sigma0: f64,
    realisations: usize,
    rng: &mut R,
) -> Result<(EmpiricalMoments, Vec<f64>)> {
    if realisations < 2 {
        return Err(Error::Domain(
            "at least two realisations are required".into(),
        ));
    }
    let mut all = Vec::with_capacity(realisations * spec.users);
    let mut per_mean = Vec::with_capacity(realisations);
    for _ in 0..realisations {
        let code = sample_code(spec, rng)?;
        let bits = sample_bits(spec.users, rng)?;
        let record = transmit(&code, &bits, sigma0, rng)?;
        let gauged = gauged_fields(&code, &record);
        per_mean.push(gauged.iter().sum::<f64>() / gauged.len() as f64);
        all.extend(gauged);
    }
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let variance = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    // per-realisation second central moments about the pooled mean
    let per_var: Vec<f64> = all
        .chunks(spec.users)
        .map(|c| c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / c.len() as f64)
        .collect();
    let (_, mean_se) = crate::stats::mean_se(&per_mean);
    let (_, variance_se) = crate::stats::mean_se(&per_var);
    Ok((
        EmpiricalMoments {
            mean,
            mean_se,
            variance,
            variance_se,
            samples: all.len(),
        },
        all,
    ))
}

/// `b_k h_k` for every user of an instance.
pub fn gauged_fields(code: &SparseCode, record: &TransmissionRecord) -> Vec<f64> {
    let q = record.q();
    (0..code.users())
        .map(|k| {
            let h: f64 = code
                .user_entries(k)
                .map(|e| 2.0 * q * record.received()[e.chip] * e.value)
                .sum();
            f64::from(record.bits()[k]) * h
        })
        .collect()
}

/// `Σ_{k<k'} τ_k τ_{k'}` over one chip clique.
pub fn chip_clique_spin_energy(tau: &[i8]) -> i64 {
    let m: i64 = tau.iter().map(|&t| i64::from(t)).sum();
    (m * m - tau.len() as i64) / 2
}

/// Exhaustive not-all-equal census of an unmodulated code.
#[derive(Debug, Clone, PartialEq)]
pub struct NaeSatCensus {
    /// Fewest chips whose users all share a spin, over all assignments.
    pub min_all_equal: usize,
    /// Assignments attaining `min_all_equal`.
    pub min_all_equal_count: u64,
    /// Minimum of the coupling-only energy in clique units,
    /// `Σ_μ Σ_{k<k' ∈ μ} τ_k τ_{k'}`.
    pub ground_energy: i64,
    /// Assignments attaining `ground_energy`.
    pub ground_state_count: u64,
    /// All-equal chips of the first ground state.
    pub ground_all_equal: usize,
    /// Ground states as bitmasks (bit `k` set means `τ_k = -1`), ascending,
    /// at most [`NaeSatCensus::LISTED`] of them.
    pub ground_states: Vec<u32>,
}

impl NaeSatCensus {
    pub const LISTED: usize = 4096;
}

/// Enumerates all `2^K` assignments against the coupling-only energy of an
/// unmodulated code. For unmodulated codes the coupling energy equals
/// `(2Q/L) Σ_μ clique energy`, so it is reported in clique units.
pub fn naesat_ground_states(code: &SparseCode) -> Result<NaeSatCensus> {
    let k = code.users();
    if k > MAX_CENSUS_USERS {
        return Err(Error::Capacity {
            what: "users for the clique census",
            value: k,
            limit: MAX_CENSUS_USERS,
        });
    }
    if code.entries().iter().any(|e| e.value < 0.0) {
        return Err(Error::Domain(
            "clique census needs an unmodulated code".into(),
        ));
    }
    let cliques: Vec<(u32, i64)> = (0..code.chips())
        .filter(|&c| code.chip_degree(c) > 0)
        .map(|c| {
            let mask = code
                .chip_entries(c)
                .iter()
                .fold(0u32, |m, e| m | (1 << e.user));
            (mask, code.chip_degree(c) as i64)
        })
        .collect();

    let mut census = NaeSatCensus {
        min_all_equal: usize::MAX,
        min_all_equal_count: 0,
        ground_energy: i64::MAX,
        ground_state_count: 0,
        ground_all_equal: 0,
        ground_states: Vec::new(),
    };
    for tau in 0u32..(1u32 << k) {
        let mut all_equal = 0;
        let mut energy = 0;
        for &(mask, size) in &cliques {
            let minus = i64::from((tau & mask).count_ones());
            if minus == 0 || minus == size {
                all_equal += 1;
            }
            let m = size - 2 * minus;
            energy += (m * m - size) / 2;
        }
        if all_equal < census.min_all_equal {
            census.min_all_equal = all_equal;
            census.min_all_equal_count = 0;
        }
        if all_equal == census.min_all_equal {
            census.min_all_equal_count += 1;
        }
        if energy < census.ground_energy {
            census.ground_energy = energy;
            census.ground_state_count = 0;
            census.ground_all_equal = all_equal;
            census.ground_states.clear();
        }
        if energy == census.ground_energy {
            census.ground_state_count += 1;
            if census.ground_states.len() < NaeSatCensus::LISTED {
                census.ground_states.push(tau);
            }
        }
    }
    Ok(census)
}

/// Spins of a census bitmask.
pub fn spins_from_mask(mask: u32, users: usize) -> Vec<i8> {
    (0..users)
        .map(|k| if mask & (1 << k) == 0 { 1 } else { -1 })
        .collect()
}

/// Orders ground states by their alignment with the fields, strongest
/// first. Returns `(mask, Σ h τ)` pairs.
pub fn rank_by_field(states: &[u32], cf: &CouplingField) -> Vec<(u32, f64)> {
    let users = cf.fields.len();
    let mut ranked: Vec<(u32, f64)> = states
        .iter()
        .map(|&s| (s, cf.field_alignment(&spins_from_mask(s, users))))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

/// Fraction of user pairs sharing at least one chip.
pub fn sharing_probability(code: &SparseCode) -> f64 {
    let k = code.users();
    if k < 2 {
        return 0.0;
    }
    let mut pairs = alloc::collections::BTreeSet::new();
    for chip in 0..code.chips() {
        let row = code.chip_entries(chip);
        for (i, a) in row.iter().enumerate() {
            for b in &row[i + 1..] {
                pairs.insert((a.user, b.user));
            }
        }
    }
    pairs.len() as f64 / (k * (k - 1) / 2) as f64
}
