//! Population dynamics for the cavity fixed-point equations of fully
//! regular sparse codes.
//!
//! Messages are half log-likelihood ratios held in the gauge where every
//! sent bit is `+1`: a positive value favours correct decoding. A chip sees
//! the gauged signal `ω + Σ_l e_l (1 - τ_l)` where `e_l` is the effective
//! code entry of its `l`-th user:
//!
//! * modulated (BPSK) codes: `e_l = x_l`, an independent `±A` draw;
//! * unmodulated codes: `e_l = A a_l`, with `a_l` the sent bit of user `l`.
//!   Populations then carry that bit as a label, because the message
//!   statistics may depend on it; biases feeding a user are drawn from the
//!   part of the population sharing the user's label.
//!
//! The noise `ω` is drawn from `N(0, σ0²)` with `Q = 1/(2σ0²)`.
//!
//! Updates use online random replacement: each new message overwrites a
//! uniformly chosen slot, and a sweep performs `population_size` field
//! replacements interleaved with as many bias replacements.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{psd_q, sigma0_from_q};
use crate::ensemble::{EnsembleSpec, Modulation, Regularity};
use crate::factor::{self, cavity_bias, clamp, log1p_tanh_product, log_chip_partition, log_cosh};
use crate::seeds::{child_seed, rng_from_seed};
use crate::stats::{batch_means_se, combined_se, correlated_mean_se, mean_se};
use crate::{Error, Result};

/// Initial condition of the bias population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMode {
    /// Independent standard normal members.
    Random,
    /// Every member at `+field_cap / 2`: strongly aligned with the sent bits.
    Informed,
    /// Every member zero.
    Zero,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Random => "random",
            InitMode::Informed => "informed",
            InitMode::Zero => "zero",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(InitMode::Random),
            "informed" => Some(InitMode::Informed),
            "zero" => Some(InitMode::Zero),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationKind {
    ModulatedBias,
    ModulatedField,
    JointBias,
    JointField,
}

impl PopulationKind {
    pub fn is_joint(self) -> bool {
        matches!(self, PopulationKind::JointBias | PopulationKind::JointField)
    }
}

/// A population of gauged messages, optionally labelled by the sent bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    kind: PopulationKind,
    values: Vec<f64>,
    labels: Option<Vec<i8>>,
}

impl Population {
    /// Builds a population; joint kinds need one `±1` label per member.
    pub fn new(kind: PopulationKind, values: Vec<f64>, labels: Option<Vec<i8>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain(
                "a population needs at least one member".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("population members must be finite".into()));
        }
        match (&labels, kind.is_joint()) {
            (Some(l), true) if l.len() == values.len() && l.iter().all(|&a| a == 1 || a == -1) => {}
            (None, false) => {}
            _ => {
                return Err(Error::Domain(format!(
                    "{kind:?} population with mismatched labels"
                )))
            }
        }
        Ok(Population {
            kind,
            values,
            labels,
        })
    }

    pub fn kind(&self) -> PopulationKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i8]> {
        self.labels.as_deref()
    }

    /// Fraction of members labelled `+1` (1 for unlabelled populations).
    pub fn plus_fraction(&self) -> f64 {
        match &self.labels {
            Some(l) => l.iter().filter(|&&a| a == 1).count() as f64 / l.len() as f64,
            None => 1.0,
        }
    }

    /// Mean of `tanh` over the members.
    pub fn mean_tanh(&self) -> f64 {
        self.values.iter().map(|&v| libm::tanh(v)).sum::<f64>() / self.len() as f64
    }

    /// Mean of `tanh^2` over the members.
    pub fn mean_tanh_sq(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| {
                let t = libm::tanh(v);
                t * t
            })
            .sum::<f64>()
            / self.len() as f64
    }

    /// Uniform member index, restricted to `label` for joint populations.
    fn draw<R: Rng + ?Sized>(&self, label: i8, rng: &mut R) -> usize {
        let n = self.values.len();
        let Some(labels) = &self.labels else {
            return rng.random_range(0..n);
        };
        for _ in 0..64 {
            let i = rng.random_range(0..n);
            if labels[i] == label {
                return i;
            }
        }
        // label nearly absent: scan from a random start
        let start = rng.random_range(0..n);
        (0..n)
            .map(|o| (start + o) % n)
            .find(|&i| labels[i] == label)
            .unwrap_or(start)
    }

    fn set(&mut self, i: usize, label: i8, value: f64) {
        self.values[i] = value;
        if let Some(l) = &mut self.labels {
            l[i] = label;
        }
    }
}

/// Field (variable-to-chip) and bias (chip-to-variable) populations.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationPair {
    pub field: Population,
    pub bias: Population,
}

/// Parameters of the cavity equations for one (C, L, modulation, Q).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityModel {
    pub user_degree: usize,
    pub chip_degree: usize,
    pub modulation: Modulation,
    pub q: f64,
    pub sigma0: f64,
    pub amplitude: f64,
    pub field_cap: f64,
}

impl CavityModel {
    pub fn new(spec: &EnsembleSpec, q: f64, field_cap: f64) -> Result<Self> {
        spec.validate()?;
        if spec.regularity != Regularity::FullyRegular {
            return Err(Error::Domain(
                "population dynamics is implemented for fully regular ensembles only".into(),
            ));
        }
        if spec.chip_degree > factor::MAX_ENUMERATED_NEIGHBOURS {
            return Err(Error::Capacity {
                what: "chip degree for population dynamics",
                value: spec.chip_degree,
                limit: factor::MAX_ENUMERATED_NEIGHBOURS,
            });
        }
        if !(field_cap > 0.0) {
            return Err(Error::Domain("field cap must be positive".into()));
        }
        Ok(CavityModel {
            user_degree: spec.user_degree,
            chip_degree: spec.chip_degree,
            modulation: spec.modulation,
            q,
            sigma0: sigma0_from_q(q)?,
            amplitude: spec.amplitude(),
            field_cap,
        })
    }

    /// Load `α = L/C`.
    pub fn load(&self) -> f64 {
        self.chip_degree as f64 / self.user_degree as f64
    }

    fn joint(&self) -> bool {
        self.modulation == Modulation::Unmodulated
    }

    fn random_label<R: Rng + ?Sized>(&self, rng: &mut R) -> i8 {
        if self.joint() {
            random_sign(rng)
        } else {
            1
        }
    }

    /// Effective code entry of a user with label `label`.
    fn entry<R: Rng + ?Sized>(&self, label: i8, rng: &mut R) -> f64 {
        match self.modulation {
            Modulation::Bpsk => f64::from(random_sign(rng)) * self.amplitude,
            Modulation::Unmodulated => f64::from(label) * self.amplitude,
        }
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sigma0 * rng.sample::<f64, _>(StandardNormal)
    }
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

/// Initial bias population.
pub fn init_population<R: Rng + ?Sized>(
    model: &CavityModel,
    mode: InitMode,
    size: usize,
    rng: &mut R,
) -> Result<Population> {
    if size == 0 {
        return Err(Error::Domain("population size must be positive".into()));
    }
    let mut values = Vec::with_capacity(size);
    let mut labels = if model.joint() {
        Some(Vec::with_capacity(size))
    } else {
        None
    };
    for _ in 0..size {
        let v = match mode {
            InitMode::Random => rng.sample::<f64, _>(StandardNormal),
            InitMode::Informed => model.field_cap / 2.0,
            InitMode::Zero => 0.0,
        };
        values.push(v);
        if let Some(l) = &mut labels {
            l.push(random_sign(rng));
        }
    }
    let kind = if model.joint() {
        PopulationKind::JointBias
    } else {
        PopulationKind::ModulatedBias
    };
    Population::new(kind, values, labels)
}

/// Field population built from a bias population by one pass of field
/// updates.
pub fn fields_from_biases<R: Rng + ?Sized>(
    model: &CavityModel,
    bias: &Population,
    rng: &mut R,
) -> Population {
    let n = bias.len();
    let mut values = Vec::with_capacity(n);
    let mut labels = if model.joint() {
        Some(Vec::with_capacity(n))
    } else {
        None
    };
    for _ in 0..n {
        let a = model.random_label(rng);
        values.push(cavity_field(model, bias, a, model.user_degree - 1, rng));
        if let Some(l) = &mut labels {
            l.push(a);
        }
    }
    let kind = if model.joint() {
        PopulationKind::JointField
    } else {
        PopulationKind::ModulatedField
    };
    Population {
        kind,
        values,
        labels,
    }
}

/// Sum of `count` biases drawn for a user labelled `label`, capped.
fn cavity_field<R: Rng + ?Sized>(
    model: &CavityModel,
    bias: &Population,
    label: i8,
    count: usize,
    rng: &mut R,
) -> f64 {
    let mut h = 0.0;
    for _ in 0..count {
        h += bias.values[bias.draw(label, rng)];
    }
    clamp(h, model.field_cap)
}

/// One chip-to-root message: draws the other `L - 1` users, their
/// effective entries and the chip noise. Returns `(root label, bias)`.
fn new_bias<R: Rng + ?Sized>(
    model: &CavityModel,
    field: &Population,
    coefs: &mut Vec<f64>,
    fields: &mut Vec<f64>,
    rng: &mut R,
) -> (i8, f64) {
    let root_label = model.random_label(rng);
    let root = model.entry(root_label, rng);
    coefs.clear();
    fields.clear();
    let mut y = model.noise(rng) + root;
    for _ in 1..model.chip_degree {
        let a = model.random_label(rng);
        let e = model.entry(a, rng);
        coefs.push(e);
        fields.push(field.values[field.draw(a, rng)]);
        y += e;
    }
    (
        root_label,
        clamp(
            cavity_bias(model.q, y, root, coefs, fields),
            model.field_cap,
        ),
    )
}

fn sweep_generic<R: Rng + ?Sized>(model: &CavityModel, pops: &mut PopulationPair, rng: &mut R) {
    let n = pops.bias.len();
    let mut coefs = Vec::with_capacity(model.chip_degree);
    let mut fields = Vec::with_capacity(model.chip_degree);
    for _ in 0..n {
        let slot = rng.random_range(0..pops.field.len());
        let a = model.random_label(rng);
        let h = cavity_field(model, &pops.bias, a, model.user_degree - 1, rng);
        pops.field.set(slot, a, h);

        let slot = rng.random_range(0..n);
        let (a, u) = new_bias(model, &pops.field, &mut coefs, &mut fields, rng);
        pops.bias.set(slot, a, u);
    }
}

/// One sweep of the modulated (BPSK) equations.
pub fn pd_sweep_modulated<R: Rng + ?Sized>(
    model: &CavityModel,
    pops: &mut PopulationPair,
    rng: &mut R,
) -> Result<()> {
    if model.modulation != Modulation::Bpsk || pops.bias.kind != PopulationKind::ModulatedBias {
        return Err(Error::Domain(
            "modulated sweep needs a BPSK model and unlabelled populations".into(),
        ));
    }
    sweep_generic(model, pops, rng);
    Ok(())
}

/// One sweep of the unmodulated equations on labelled populations.
pub fn pd_sweep_unmodulated<R: Rng + ?Sized>(
    model: &CavityModel,
    pops: &mut PopulationPair,
    rng: &mut R,
) -> Result<()> {
    if model.modulation != Modulation::Unmodulated || pops.bias.kind != PopulationKind::JointBias {
        return Err(Error::Domain(
            "unmodulated sweep needs an unmodulated model and joint populations".into(),
        ));
    }
    sweep_generic(model, pops, rng);
    Ok(())
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// `P(H < 0) + ½ P(H = 0)` over `samples` full fields `H = Σ_{c=1}^{C} u_c`.
pub fn ber_from_population<R: Rng + ?Sized>(
    model: &CavityModel,
    bias: &Population,
    samples: usize,
    rng: &mut R,
) -> Estimate {
    let mut errors = 0.0;
    let mut sq = 0.0;
    for _ in 0..samples {
        let a = model.random_label(rng);
        let mut h = 0.0;
        for _ in 0..model.user_degree {
            h += bias.values[bias.draw(a, rng)];
        }
        let e = if h < 0.0 {
            1.0
        } else if h == 0.0 {
            0.5
        } else {
            0.0
        };
        errors += e;
        sq += e * e;
    }
    let n = samples as f64;
    let p = errors / n;
    let var = if samples > 1 {
        (sq / n - p * p) * n / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: p,
        se: libm::sqrt(var.max(0.0) / n),
    }
}

/// Monte Carlo terms of the Bethe free energy per chip:
/// `f = -[α ln 2 + E log Z_I + α E log cosh(Σ_C u) - L E log cosh u
///        - L E log(1 + tanh h tanh u)]`.
///
/// The user terms are sampled jointly: `C` biases `u_c` give the full field
/// `H = Σ u_c`, and the edge term of bias `c` uses the cavity field
/// `H - u_c`. This leaves every expectation unchanged while the large,
/// nearly cancelling contributions of strongly polarised messages cancel
/// sample by sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyTerms {
    /// `E log Z_I`, the normalised chip partition function.
    pub interaction: Estimate,
    /// `E log cosh(Σ_{c=1}^{C} u_c)`.
    pub site: Estimate,
    /// `E log cosh u`.
    pub bias: Estimate,
    /// `E log(1 + tanh h tanh u)`.
    pub edge: Estimate,
    /// Per-user combination `log cosh H - Σ_c [log cosh u_c + log(1 + tanh h_c tanh u_c)]`.
    pub user: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    /// Free energy per chip, `-(1/N) log Σ_τ exp{-H(τ)}`.
    pub per_chip: Estimate,
    /// Free energy per user (`per_chip / α`).
    pub per_user: Estimate,
    pub terms: FreeEnergyTerms,
}

fn estimate(xs: &[f64]) -> Estimate {
    let (value, se) = mean_se(xs);
    Estimate { value, se }
}

/// Estimates the free energy functional from the populations.
pub fn free_energy<R: Rng + ?Sized>(
    model: &CavityModel,
    pops: &PopulationPair,
    samples: usize,
    rng: &mut R,
) -> FreeEnergy {
    let alpha = model.load();
    let c = model.user_degree;
    let mut interaction = Vec::with_capacity(samples);
    let mut site = Vec::with_capacity(samples);
    let mut bias_term = Vec::with_capacity(samples);
    let mut edge = Vec::with_capacity(samples);
    let mut user = Vec::with_capacity(samples);
    let mut coefs = Vec::with_capacity(model.chip_degree);
    let mut fields = Vec::with_capacity(model.chip_degree);
    let mut biases = Vec::with_capacity(c);
    for _ in 0..samples {
        coefs.clear();
        fields.clear();
        let mut y = model.noise(rng);
        for _ in 0..model.chip_degree {
            let a = model.random_label(rng);
            let e = model.entry(a, rng);
            coefs.push(e);
            fields.push(pops.field.values[pops.field.draw(a, rng)]);
            y += e;
        }
        interaction.push(log_chip_partition(model.q, y, &coefs, &fields));

        let a = model.random_label(rng);
        biases.clear();
        biases.extend((0..c).map(|_| pops.bias.values[pops.bias.draw(a, rng)]));
        let total: f64 = biases.iter().sum();
        let s = log_cosh(total);
        let (mut b, mut e) = (0.0, 0.0);
        for &u in &biases {
            b += log_cosh(u);
            e += log1p_tanh_product(clamp(total - u, model.field_cap), u);
        }
        site.push(s);
        bias_term.push(b / c as f64);
        edge.push(e / c as f64);
        user.push(s - b - e);
    }
    let terms = FreeEnergyTerms {
        interaction: estimate(&interaction),
        site: estimate(&site),
        bias: estimate(&bias_term),
        edge: estimate(&edge),
        user: estimate(&user),
    };
    let value = -(alpha * LN_2 + terms.interaction.value + alpha * terms.user.value);
    let se = libm::sqrt(
        terms.interaction.se * terms.interaction.se + alpha * alpha * terms.user.se * terms.user.se,
    );
    FreeEnergy {
        per_chip: Estimate { value, se },
        per_user: Estimate {
            value: value / alpha,
            se: se / alpha,
        },
        terms,
    }
}

/// Population dynamics settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdParams {
    pub population_size: usize,
    pub max_sweeps: usize,
    /// Sweeps per convergence window.
    pub window: usize,
    /// Largest drift of the per-sweep BER and mean `tanh h` across the
    /// trailing window (second-half mean minus first-half mean) accepted as
    /// converged.
    pub tolerance: f64,
    pub field_cap: f64,
    pub seed: u64,
    /// Sweeps after convergence over which BER and free energy are averaged.
    /// Standard errors are corrected for autocorrelation between sweeps.
    pub measure_sweeps: usize,
    /// Monte Carlo draws per measurement (BER and free energy each).
    pub samples: usize,
}

impl Default for PdParams {
    fn default() -> Self {
        PdParams {
            population_size: 10_000,
            max_sweeps: 2_000,
            window: 50,
            tolerance: 1e-3,
            field_cap: 300.0,
            seed: 0,
            measure_sweeps: 200,
            samples: 10_000,
        }
    }
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Domain("population_size must be at least 2".into()));
        }
        if self.window == 0 || self.max_sweeps == 0 {
            return Err(Error::Domain(
                "window and max_sweeps must be positive".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        if !(self.field_cap > 0.0) {
            return Err(Error::Domain("field_cap must be positive".into()));
        }
        if self.measure_sweeps < 2 || self.samples < 2 {
            return Err(Error::Domain(
                "measure_sweeps and samples must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Per-sweep summary statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub ber: f64,
    pub mean_tanh: f64,
}

/// Result of [`run_to_convergence`].
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub model: CavityModel,
    pub populations: PopulationPair,
    pub init_mode: InitMode,
    /// Free energy per chip, averaged over the measurement sweeps.
    pub free_energy: Estimate,
    pub free_energy_per_user: Estimate,
    pub ber: Estimate,
    /// Sweeps before measurement started.
    pub sweeps: usize,
    pub converged: bool,
    /// Integrated autocorrelation times (in sweeps) of the per-sweep BER
    /// and free energy over the measurement phase; the standard errors
    /// account for them.
    pub ber_autocorrelation: f64,
    pub free_energy_autocorrelation: f64,
    pub history: Vec<SweepRecord>,
    /// Mean `tanh h` and `tanh^2 h` over the final field population.
    pub mean_tanh: f64,
    pub mean_tanh_sq: f64,
}

fn check_spec_for_popdyn(spec: &EnsembleSpec) -> Result<()> {
    if spec.regularity != Regularity::FullyRegular {
        return Err(Error::Domain(
            "population dynamics needs a fully regular spec".into(),
        ));
    }
    Ok(())
}

/// Iterates the cavity equations from `init` until the windowed BER and
/// mean `tanh h` settle, then averages BER and free energy over
/// `measure_sweeps` further sweeps.
///
/// Three RNG streams derive from `params.seed`: one for the initial
/// population, one for the relaxation sweeps and one for the measurement
/// phase. Runs from different initial conditions therefore share their
/// dynamics noise.
pub fn run_to_convergence(
    spec: &EnsembleSpec,
    q: f64,
    params: &PdParams,
    init: InitMode,
) -> Result<SaddleSolution> {
    check_spec_for_popdyn(spec)?;
    params.validate()?;
    let model = CavityModel::new(spec, q, params.field_cap)?;
    let mut init_rng = rng_from_seed(child_seed(params.seed, 0));
    let mut rng = rng_from_seed(child_seed(params.seed, 1));

    let bias = init_population(&model, init, params.population_size, &mut init_rng)?;
    let field = fields_from_biases(&model, &bias, &mut init_rng);
    let mut pops = PopulationPair { field, bias };

    let mut history = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < params.max_sweeps {
        sweep_generic(&model, &mut pops, &mut rng);
        sweeps += 1;
        let ber = ber_from_population(&model, &pops.bias, params.population_size, &mut rng).value;
        history.push(SweepRecord {
            sweep: sweeps,
            ber,
            mean_tanh: pops.field.mean_tanh(),
        });
        if window_drift(&history, params.window)
            .is_some_and(|(db, dt)| db < params.tolerance && dt < params.tolerance)
        {
            converged = true;
            break;
        }
    }

    let mut rng = rng_from_seed(child_seed(params.seed, 2));
    let mut bers = Vec::with_capacity(params.measure_sweeps);
    let mut per_chip = Vec::with_capacity(params.measure_sweeps);
    for _ in 0..params.measure_sweeps {
        sweep_generic(&model, &mut pops, &mut rng);
        bers.push(ber_from_population(&model, &pops.bias, params.samples, &mut rng).value);
        per_chip.push(
            free_energy(&model, &pops, params.samples, &mut rng)
                .per_chip
                .value,
        );
    }
    let (ber, ber_tau) = series_estimate(&bers);
    let (free_energy, free_energy_tau) = series_estimate(&per_chip);
    let alpha = model.load();
    Ok(SaddleSolution {
        model,
        init_mode: init,
        free_energy,
        free_energy_per_user: Estimate {
            value: free_energy.value / alpha,
            se: free_energy.se / alpha,
        },
        ber,
        sweeps,
        converged,
        ber_autocorrelation: ber_tau,
        free_energy_autocorrelation: free_energy_tau,
        history,
        mean_tanh: pops.field.mean_tanh(),
        mean_tanh_sq: pops.field.mean_tanh_sq(),
        populations: pops,
    })
}

/// Batches used for the batch-means standard error of measurement series.
pub const MEASUREMENT_BATCHES: usize = 10;

/// Mean of a per-sweep series; the standard error is the larger of the
/// autocorrelation-time estimate and the batch-means estimate.
fn series_estimate(xs: &[f64]) -> (Estimate, f64) {
    let (value, se, tau) = correlated_mean_se(xs);
    let se = batch_means_se(xs, MEASUREMENT_BATCHES).map_or(se, |b| se.max(b));
    (Estimate { value, se }, tau)
}

/// Drift of (BER, mean tanh) across the trailing window: the difference
/// between the means of its second and first halves.
fn window_drift(history: &[SweepRecord], window: usize) -> Option<(f64, f64)> {
    if history.len() < window.max(2) {
        return None;
    }
    let trailing = &history[history.len() - window.max(2)..];
    let (first, second) = trailing.split_at(trailing.len() / 2);
    let mean = |s: &[SweepRecord], f: fn(&SweepRecord) -> f64| {
        s.iter().map(f).sum::<f64>() / s.len() as f64
    };
    Some((
        libm::fabs(mean(second, |r| r.ber) - mean(first, |r| r.ber)),
        libm::fabs(mean(second, |r| r.mean_tanh) - mean(first, |r| r.mean_tanh)),
    ))
}

/// Binned L1 distance between the label-conditioned distributions of a
/// joint population, on `tanh(value)` over `[-1, 1]`.
pub fn symmetry_check(pop: &Population, bins: usize) -> Result<f64> {
    let labels = pop
        .labels()
        .ok_or_else(|| Error::Domain("symmetry check needs a labelled population".into()))?;
    if bins == 0 {
        return Err(Error::Domain("at least one bin is required".into()));
    }
    Ok(label_l1(pop.values(), labels, bins))
}

fn label_l1(values: &[f64], labels: &[i8], bins: usize) -> f64 {
    let mut plus = vec![0.0; bins];
    let mut minus = vec![0.0; bins];
    let (mut np, mut nm) = (0.0, 0.0);
    for (&v, &a) in values.iter().zip(labels) {
        let t = libm::tanh(v);
        let b = (((t + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
        if a == 1 {
            plus[b] += 1.0;
            np += 1.0;
        } else {
            minus[b] += 1.0;
            nm += 1.0;
        }
    }
    if np == 0.0 || nm == 0.0 {
        return 2.0;
    }
    plus.iter()
        .zip(&minus)
        .map(|(p, m)| libm::fabs(p / np - m / nm))
        .sum()
}

/// Resampling noise floor of [`symmetry_check`]: the distances obtained
/// after randomly permuting the labels, which destroys any dependence on
/// them. Returns the distances sorted ascending.
pub fn symmetry_noise_floor<R: Rng + ?Sized>(
    pop: &Population,
    bins: usize,
    resamples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    use rand::seq::SliceRandom;
    let labels = pop
        .labels()
        .ok_or_else(|| Error::Domain("symmetry check needs a labelled population".into()))?;
    let mut shuffled = labels.to_vec();
    let mut out: Vec<f64> = (0..resamples)
        .map(|_| {
            shuffled.shuffle(rng);
            label_l1(pop.values(), &shuffled, bins)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// One row of a metastability scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub sigma0: f64,
    pub q: f64,
    pub random: SaddleSolution,
    pub informed: SaddleSolution,
    /// The two branches differ in BER by more than 5 combined standard
    /// errors.
    pub multivalued: bool,
}

impl BranchPoint {
    /// Branch with the lower free energy.
    pub fn thermodynamic(&self) -> &SaddleSolution {
        if self.informed.free_energy.value < self.random.free_energy.value {
            &self.informed
        } else {
            &self.random
        }
    }
}

/// Branch separation threshold of [`metastability_scan`] in combined
/// standard errors.
pub const MULTIVALUED_SE: f64 = 5.0;

pub fn branches_differ(a: &SaddleSolution, b: &SaddleSolution) -> bool {
    libm::fabs(a.ber.value - b.ber.value) > MULTIVALUED_SE * combined_se(a.ber.se, b.ber.se)
}

/// Random- and informed-init solutions at every noise level of the grid.
pub fn metastability_scan(
    spec: &EnsembleSpec,
    sigma0_grid: &[f64],
    params: &PdParams,
) -> Result<Vec<BranchPoint>> {
    sigma0_grid
        .iter()
        .map(|&sigma0| branch_point(spec, sigma0, params))
        .collect()
}

/// Both branches at a single noise level.
pub fn branch_point(spec: &EnsembleSpec, sigma0: f64, params: &PdParams) -> Result<BranchPoint> {
    let q = psd_q(sigma0)?;
    let random = run_to_convergence(spec, q, params, InitMode::Random)?;
    let informed = run_to_convergence(spec, q, params, InitMode::Informed)?;
    let multivalued = branches_differ(&random, &informed);
    Ok(BranchPoint {
        sigma0,
        q,
        random,
        informed,
        multivalued,
    })
}

/// Smallest `Q` flagged multivalued, if any.
pub fn metastability_onset(points: &[BranchPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.multivalued)
        .map(|p| p.q)
        .min_by(f64::total_cmp)
}
