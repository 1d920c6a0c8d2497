//! Signature-code ensembles and the sparse code representation.
//!
//! A code assigns each (user, chip) pair either nothing or a value of
//! magnitude `A = 1/sqrt(L)`. Entries are held in chip-major order with a
//! user-major index on top, so both directions of the Tanner graph can be
//! walked without searching.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

/// Distribution of the non-zero code entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    /// `±A` with equal probability.
    Bpsk,
    /// Always `+A`.
    Unmodulated,
}

/// Degree constraints imposed on the sparse connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regularity {
    /// Every (user, chip) pair is connected independently with
    /// probability `L/K`.
    PureRandom,
    /// Every user accesses exactly `C` chips.
    UserRegular,
    /// Every user accesses exactly `C` chips and every chip carries exactly
    /// `L` users.
    FullyRegular,
}

impl Modulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Unmodulated => "unmodulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bpsk" => Some(Modulation::Bpsk),
            "unmodulated" | "unmod" => Some(Modulation::Unmodulated),
            _ => None,
        }
    }
}

impl Regularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Regularity::PureRandom => "pure-random",
            Regularity::UserRegular => "user-regular",
            Regularity::FullyRegular => "fully-regular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pure-random" => Some(Regularity::PureRandom),
            "user-regular" => Some(Regularity::UserRegular),
            "fully-regular" => Some(Regularity::FullyRegular),
            _ => None,
        }
    }
}

/// Sampling law for codes: sizes, degrees, modulation and regularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleSpec {
    /// Number of users `K`.
    pub users: usize,
    /// Number of chips `N`.
    pub chips: usize,
    /// Chips accessed per user, `C`.
    pub user_degree: usize,
    /// Users per chip, `L`.
    pub chip_degree: usize,
    pub modulation: Modulation,
    pub regularity: Regularity,
}

impl EnsembleSpec {
    /// Fully regular spec, validated.
    pub fn fully_regular(
        users: usize,
        chips: usize,
        user_degree: usize,
        chip_degree: usize,
        modulation: Modulation,
    ) -> Result<Self> {
        let spec = EnsembleSpec {
            users,
            chips,
            user_degree,
            chip_degree,
            modulation,
            regularity: Regularity::FullyRegular,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The smallest fully regular system with the given degrees
    /// (`K = L`, `N = C`). Population dynamics only looks at the degrees.
    pub fn degrees(user_degree: usize, chip_degree: usize, modulation: Modulation) -> Result<Self> {
        Self::fully_regular(
            chip_degree,
            user_degree,
            user_degree,
            chip_degree,
            modulation,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        if self.users == 0 {
            problems.push("K must be positive".into());
        }
        if self.chips == 0 {
            problems.push("N must be positive".into());
        }
        if self.user_degree == 0 {
            problems.push("C must be at least 1".into());
        }
        if self.chip_degree == 0 {
            problems.push("L must be at least 1".into());
        }
        if self.chip_degree > self.users {
            problems.push(format!(
                "L = {} exceeds K = {}",
                self.chip_degree, self.users
            ));
        }
        if self.user_degree > self.chips {
            problems.push(format!(
                "C = {} exceeds N = {}",
                self.user_degree, self.chips
            ));
        }
        if self.regularity == Regularity::FullyRegular
            && self.users * self.user_degree != self.chips * self.chip_degree
        {
            problems.push(format!(
                "K*C = {} differs from N*L = {}",
                self.users * self.user_degree,
                self.chips * self.chip_degree
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    /// Load `α = K/N`.
    pub fn load(&self) -> f64 {
        self.users as f64 / self.chips as f64
    }

    pub fn amplitude(&self) -> f64 {
        amplitude(self.chip_degree)
    }
}

/// Transmission amplitude `1/sqrt(L)`.
pub fn amplitude(chip_degree: usize) -> f64 {
    1.0 / libm::sqrt(chip_degree as f64)
}

/// One non-zero code element `s_{μk}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub user: usize,
    pub chip: usize,
    pub value: f64,
}

/// A sparse `K x N` signature code with both adjacency directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    spec: EnsembleSpec,
    amplitude: f64,
    // chip-major, users ascending within a chip
    entries: Vec<Entry>,
    chip_start: Vec<usize>,
    // indices into `entries`, grouped by user, chips ascending
    user_index: Vec<usize>,
    user_start: Vec<usize>,
}

impl SparseCode {
    /// Builds a code from an arbitrary entry list.
    ///
    /// Only structural properties are checked here (bounds, duplicates,
    /// finiteness). Entries equal to zero are dropped. Ensemble invariants
    /// are the business of [`validate_code`].
    pub fn from_entries<I>(spec: EnsembleSpec, amplitude: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = Entry>,
    {
        if spec.users == 0 || spec.chips == 0 {
            return Err(Error::InvalidConfig("K and N must be positive".into()));
        }
        let mut entries: Vec<Entry> = entries.into_iter().filter(|e| e.value != 0.0).collect();
        for e in &entries {
            if e.user >= spec.users || e.chip >= spec.chips {
                return Err(Error::Domain(format!(
                    "entry ({}, {}) outside a {}x{} code",
                    e.user, e.chip, spec.users, spec.chips
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::Domain(format!(
                    "entry ({}, {}) is not finite",
                    e.user, e.chip
                )));
            }
        }
        entries.sort_by_key(|e| (e.chip, e.user));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].chip, w[0].user) == (w[1].chip, w[1].user))
        {
            return Err(Error::Domain(format!(
                "duplicate entry ({}, {})",
                w[0].user, w[0].chip
            )));
        }

        let mut chip_start = vec![0usize; spec.chips + 1];
        let mut user_start = vec![0usize; spec.users + 1];
        for e in &entries {
            chip_start[e.chip + 1] += 1;
            user_start[e.user + 1] += 1;
        }
        for i in 0..spec.chips {
            chip_start[i + 1] += chip_start[i];
        }
        for i in 0..spec.users {
            user_start[i + 1] += user_start[i];
        }
        let mut fill = user_start.clone();
        let mut user_index = vec![0usize; entries.len()];
        // chip-major traversal keeps each user's list sorted by chip
        for (idx, e) in entries.iter().enumerate() {
            user_index[fill[e.user]] = idx;
            fill[e.user] += 1;
        }

        Ok(SparseCode {
            spec,
            amplitude,
            entries,
            chip_start,
            user_index,
            user_start,
        })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn users(&self) -> usize {
        self.spec.users
    }

    pub fn chips(&self) -> usize {
        self.spec.chips
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// All entries in chip-major order.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Entries on chip `chip`, users ascending.
    pub fn chip_entries(&self, chip: usize) -> &[Entry] {
        &self.entries[self.chip_start[chip]..self.chip_start[chip + 1]]
    }

    /// Offset of chip `chip`'s first entry in [`entries`](Self::entries).
    pub fn chip_offset(&self, chip: usize) -> usize {
        self.chip_start[chip]
    }

    /// Indices into [`entries`](Self::entries) of user `user`'s entries.
    pub fn user_entry_ids(&self, user: usize) -> &[usize] {
        &self.user_index[self.user_start[user]..self.user_start[user + 1]]
    }

    pub fn user_entries(&self, user: usize) -> impl Iterator<Item = &Entry> + '_ {
        self.user_entry_ids(user)
            .iter()
            .map(move |&i| &self.entries[i])
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_start[user + 1] - self.user_start[user]
    }

    pub fn chip_degree(&self, chip: usize) -> usize {
        self.chip_start[chip + 1] - self.chip_start[chip]
    }

    pub fn max_chip_degree(&self) -> usize {
        (0..self.chips())
            .map(|c| self.chip_degree(c))
            .max()
            .unwrap_or(0)
    }

    /// `s_{μk}`, zero when absent.
    pub fn value(&self, user: usize, chip: usize) -> f64 {
        let row = self.chip_entries(chip);
        match row.binary_search_by_key(&user, |e| e.user) {
            Ok(i) => row[i].value,
            Err(_) => 0.0,
        }
    }

    /// Flips the sign of every entry of `user` (the gauge transform used in
    /// tests of BPSK codes).
    pub fn with_user_negated(&self, user: usize) -> Self {
        let mut out = self.clone();
        for &i in &self.user_index[self.user_start[user]..self.user_start[user + 1]] {
            out.entries[i].value = -out.entries[i].value;
        }
        out
    }
}

/// Samples a code from `spec`.
///
/// Fully regular graphs come from the configuration model: user stubs are
/// paired with a shuffled list of chip stubs, parallel edges are removed by
/// random stub swaps, and if that local repair stalls the whole pairing is
/// redrawn.
pub fn sample_code<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<SparseCode> {
    spec.validate()?;
    let amp = spec.amplitude();
    let mut links: Vec<(usize, usize)> = Vec::new();
    match spec.regularity {
        Regularity::PureRandom => {
            let p = spec.chip_degree as f64 / spec.users as f64;
            for chip in 0..spec.chips {
                for user in 0..spec.users {
                    if rng.random_bool(p) {
                        links.push((user, chip));
                    }
                }
            }
        }
        Regularity::UserRegular => {
            for user in 0..spec.users {
                for chip in rand::seq::index::sample(rng, spec.chips, spec.user_degree) {
                    links.push((user, chip));
                }
            }
        }
        Regularity::FullyRegular => {
            let chips = pair_stubs(spec, rng)?;
            for (stub, &chip) in chips.iter().enumerate() {
                links.push((stub / spec.user_degree, chip));
            }
        }
    }
    let entries = links.into_iter().map(|(user, chip)| {
        let value = match spec.modulation {
            Modulation::Unmodulated => amp,
            Modulation::Bpsk => {
                if rng.random_bool(0.5) {
                    amp
                } else {
                    -amp
                }
            }
        };
        Entry { user, chip, value }
    });
    SparseCode::from_entries(*spec, amp, entries.collect::<Vec<_>>())
}

const MAX_REPAIRINGS: usize = 1000;

/// Configuration-model pairing. Returns the chip of every user stub, user
/// `k` owning stubs `k*C .. (k+1)*C`.
fn pair_stubs<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Vec<usize>> {
    let c = spec.user_degree;
    let edges = spec.users * c;
    let mut chips: Vec<usize> = (0..spec.chips)
        .flat_map(|chip| core::iter::repeat_n(chip, spec.chip_degree))
        .collect();
    let swap_budget = 50 * edges + 100;

    let is_dup = |chips: &[usize], stub: usize| {
        let owner = stub / c;
        (owner * c..owner * c + c).any(|s| s != stub && chips[s] == chips[stub])
    };

    for _ in 0..MAX_REPAIRINGS {
        chips.shuffle(rng);
        let mut bad: Vec<usize> = (0..edges).filter(|&s| is_dup(&chips, s)).collect();
        let mut swaps = 0;
        while let Some(&stub) = bad.last() {
            if !is_dup(&chips, stub) {
                bad.pop();
                continue;
            }
            if swaps == swap_budget {
                break;
            }
            swaps += 1;
            let other = rng.random_range(0..edges);
            let (ua, ub) = (stub / c, other / c);
            if ua == ub {
                continue;
            }
            let (ca, cb) = (chips[stub], chips[other]);
            let a_ok = (ua * c..ua * c + c).all(|s| s == stub || chips[s] != cb);
            let b_ok = (ub * c..ub * c + c).all(|s| s == other || chips[s] != ca);
            if a_ok && b_ok {
                chips.swap(stub, other);
                bad.pop();
            }
        }
        if bad.is_empty() {
            return Ok(chips);
        }
    }
    Err(Error::SamplingFailed {
        attempts: MAX_REPAIRINGS,
    })
}

/// Outcome of [`validate_code`]; each list names the offenders.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub shape_ok: bool,
    pub amplitude_ok: bool,
    /// Entries whose magnitude differs from `A`, as (user, chip).
    pub bad_amplitudes: Vec<(usize, usize)>,
    /// Unmodulated codes with a negative entry, as (user, chip).
    pub bad_modulation: Vec<(usize, usize)>,
    /// Users whose degree differs from `C` (regular ensembles only).
    pub bad_user_degrees: Vec<usize>,
    /// Chips whose degree differs from `L` (fully regular only).
    pub bad_chip_degrees: Vec<usize>,
}

impl ValidationReport {
    pub fn amplitude_passed(&self) -> bool {
        self.amplitude_ok && self.bad_amplitudes.is_empty()
    }

    pub fn modulation_passed(&self) -> bool {
        self.bad_modulation.is_empty()
    }

    pub fn user_degrees_passed(&self) -> bool {
        self.bad_user_degrees.is_empty()
    }

    pub fn chip_degrees_passed(&self) -> bool {
        self.bad_chip_degrees.is_empty()
    }

    pub fn all_passed(&self) -> bool {
        self.shape_ok
            && self.amplitude_passed()
            && self.modulation_passed()
            && self.user_degrees_passed()
            && self.chip_degrees_passed()
    }
}

/// Checks a code against the invariants of `spec`.
pub fn validate_code(code: &SparseCode, spec: &EnsembleSpec) -> ValidationReport {
    let shape_ok = code.users() == spec.users && code.chips() == spec.chips;
    let amp = spec.amplitude();
    let mut report = ValidationReport {
        shape_ok,
        amplitude_ok: code.amplitude() == amp,
        ..Default::default()
    };
    for e in code.entries() {
        if libm::fabs(e.value) != amp {
            report.bad_amplitudes.push((e.user, e.chip));
        }
        if spec.modulation == Modulation::Unmodulated && e.value < 0.0 {
            report.bad_modulation.push((e.user, e.chip));
        }
    }
    if !shape_ok {
        return report;
    }
    if spec.regularity != Regularity::PureRandom {
        report.bad_user_degrees = (0..spec.users)
            .filter(|&k| code.user_degree(k) != spec.user_degree)
            .collect();
    }
    if spec.regularity == Regularity::FullyRegular {
        report.bad_chip_degrees = (0..spec.chips)
            .filter(|&m| code.chip_degree(m) != spec.chip_degree)
            .collect();
    }
    report
}
