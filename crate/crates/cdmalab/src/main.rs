use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdmalab::config::{
    BpInitConfig, ExperimentConfig, ExperimentKind, PopdynConfig, SpecConfig, SCHEMA_VERSION,
};
use cdmalab::formats::{read_code, read_record, write_code, write_json, write_record, CodeRef};
use cdmalab::harness::{resolve_out_dir, run_experiment};
use cdmalab::{Error, Result};
use cdmalab_core::channel::{psd_q, sample_bits, transmit};
use cdmalab_core::detector::{
    bethe_free_energy, bit_error_rate, bp_run, exact_marginals, hard_decisions,
};
use cdmalab_core::ensemble::sample_code;
use cdmalab_core::landscape::{
    coupling_field_decomposition, empirical_field_moments, naesat_ground_states,
    predicted_field_moments, rank_by_field, MomentEnsemble,
};
use cdmalab_core::popdyn::run_to_convergence;
use cdmalab_core::seeds::{child_seed, rng_from_seed};
use cdmalab_core::{EnsembleSpec, InitMode, Modulation, SparseCode, TransmissionRecord};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cdmalab",
    version,
    about = "Sparse CDMA detection, cavity population dynamics and landscape tools"
)]
struct Cli {
    /// Experiment config; for other subcommands it supplies defaults for
    /// the spec, detector and popdyn settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 is the reproducibility reference, 0 uses all cores.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output directory [default: config output_dir, then $CDMALAB_OUT, then ./cdmalab-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the bits of one instance, read from files or generated.
    Detect(DetectArgs),
    /// Iterate the cavity equations from one initial condition.
    Popdyn(PopdynArgs),
    /// Random- and informed-init branches over a noise grid.
    Scan(ScanArgs),
    /// Energy-landscape tools.
    Landscape(LandscapeArgs),
    /// Run an experiment config.
    Experiment,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Bpsk,
    Unmod,
}

impl From<EnsembleArg> for Modulation {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Bpsk => Modulation::Bpsk,
            EnsembleArg::Unmod => Modulation::Unmodulated,
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    /// Users.
    #[arg(long = "K")]
    users: Option<usize>,
    /// Chips.
    #[arg(long = "N")]
    chips: Option<usize>,
    /// Chips per user.
    #[arg(long = "C")]
    user_degree: Option<usize>,
    /// Users per chip.
    #[arg(long = "L")]
    chip_degree: Option<usize>,
    /// Spreading-sign modulation.
    #[arg(long, value_enum)]
    ensemble: Option<EnsembleArg>,
    /// pure-random, user-regular or fully-regular.
    #[arg(long)]
    regularity: Option<String>,
}

impl SpecArgs {
    /// Flags over config over `fallback`.
    fn resolve(
        &self,
        config: Option<&ExperimentConfig>,
        fallback: SpecConfig,
    ) -> Result<EnsembleSpec> {
        self.merged(config, fallback).to_spec()
    }

    fn merged(&self, config: Option<&ExperimentConfig>, fallback: SpecConfig) -> SpecConfig {
        let mut s = config.map_or(fallback, |c| c.spec.clone());
        if let Some(v) = self.users {
            s.users = v;
        }
        if let Some(v) = self.chips {
            s.chips = v;
        }
        if let Some(v) = self.user_degree {
            s.user_degree = v;
        }
        if let Some(v) = self.chip_degree {
            s.chip_degree = v;
        }
        if let Some(e) = self.ensemble {
            s.modulation = Modulation::from(e).as_str().to_owned();
        }
        if let Some(r) = &self.regularity {
            s.regularity = r.clone();
        }
        s
    }
}

#[derive(Args)]
struct InstanceArgs {
    /// Code file in the text format.
    #[arg(long)]
    code: Option<PathBuf>,
    /// Transmission record (JSON); requires --code.
    #[arg(long, requires = "code")]
    record: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    sigma0: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Bp,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum BpInitArg {
    Uninformed,
    Informed,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<BpInitArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Informed,
    Zero,
}

impl From<InitArg> for InitMode {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Random => InitMode::Random,
            InitArg::Informed => InitMode::Informed,
            InitArg::Zero => InitMode::Zero,
        }
    }
}

#[derive(Args)]
struct PdArgs {
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    measure_sweeps: Option<usize>,
}

impl PdArgs {
    fn resolve(&self, config: Option<&ExperimentConfig>) -> PopdynConfig {
        let mut p = config.map_or_else(PopdynConfig::default, |c| c.popdyn.clone());
        if let Some(v) = self.pop_size {
            p.population_size = v;
        }
        if let Some(v) = self.max_sweeps {
            p.max_sweeps = v;
        }
        if let Some(v) = self.window {
            p.window = v;
        }
        if let Some(v) = self.tolerance {
            p.tolerance = v;
        }
        if let Some(v) = self.measure_sweeps {
            p.measure_sweeps = v;
        }
        p
    }
}

#[derive(Args)]
struct PopdynArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    sigma0: f64,
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    #[command(flatten)]
    pd: PdArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// `start:stop:points` (inclusive, evenly spaced) or a comma list.
    #[arg(long)]
    sigma0_grid: String,
    /// Comma list of chip degrees to scan.
    #[arg(long)]
    l_values: Option<String>,
    #[command(flatten)]
    pd: PdArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LandscapeMode {
    Decompose,
    Moments,
    Naesat,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(value_enum)]
    mode: LandscapeMode,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Code realisations for `moments`.
    #[arg(long, default_value_t = 20)]
    realisations: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => {
            let mut c = ExperimentConfig::load(path)?;
            if let Some(seed) = cli.seed {
                c.seed = seed;
            }
            Some(c)
        }
        None => None,
    };
    let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let out = resolve_out_dir(cli.out.as_deref(), config.as_ref());
    let ctx = Ctx {
        config: config.as_ref(),
        seed,
        out,
        threads: cli.threads,
    };
    match cli.command {
        Command::Detect(a) => detect(&ctx, &a),
        Command::Popdyn(a) => popdyn(&ctx, &a),
        Command::Scan(a) => scan(&ctx, &a),
        Command::Landscape(a) => landscape(&ctx, &a),
        Command::Experiment => {
            let config = ctx
                .config
                .ok_or_else(|| Error::Config(vec!["experiment: --config is required".into()]))?;
            let summary = run_experiment(config, &ctx.out, ctx.threads)?;
            report(&summary);
            summary.check()
        }
    }
}

struct Ctx<'a> {
    config: Option<&'a ExperimentConfig>,
    seed: u64,
    out: PathBuf,
    threads: usize,
}

impl Ctx<'_> {
    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }
}

fn report(summary: &cdmalab::RunSummary) {
    eprintln!(
        "{}: {} of {} points ok in {:.1} s, output in {}",
        summary.experiment.as_str(),
        summary.points.len() - summary.failed(),
        summary.points.len(),
        summary.wall_time_s,
        summary.out_dir.display()
    );
}

fn default_instance_spec() -> SpecConfig {
    SpecConfig::from_spec(
        &EnsembleSpec::fully_regular(12, 6, 3, 6, Modulation::Bpsk).expect("valid default"),
    )
}

/// Loads the instance from files, or samples one (code, bits, noise) from
/// the seed and writes it to the output directory.
fn instance(
    ctx: &Ctx,
    args: &InstanceArgs,
    out: &Path,
) -> Result<(SparseCode, TransmissionRecord)> {
    if let Some(code_path) = &args.code {
        let code = read_code(code_path)?;
        let record = match &args.record {
            Some(p) => read_record(p)?.0,
            None => {
                let sigma0 = sigma0_arg(ctx, args.sigma0)?;
                let mut rng = rng_from_seed(child_seed(ctx.seed, 1));
                let bits = sample_bits(code.users(), &mut rng)?;
                let record = transmit(&code, &bits, sigma0, &mut rng)?;
                write_record(&out.join("record.json"), &record, code_ref(code_path, None))?;
                record
            }
        };
        record.verify(&code)?;
        return Ok((code, record));
    }
    let spec = args.spec.resolve(ctx.config, default_instance_spec())?;
    let sigma0 = sigma0_arg(ctx, args.sigma0)?;
    let mut rng = rng_from_seed(child_seed(ctx.seed, 0));
    let code = sample_code(&spec, &mut rng)?;
    let mut rng = rng_from_seed(child_seed(ctx.seed, 1));
    let bits = sample_bits(code.users(), &mut rng)?;
    let record = transmit(&code, &bits, sigma0, &mut rng)?;
    write_code(&out.join("code.txt"), &code)?;
    write_record(
        &out.join("record.json"),
        &record,
        code_ref(Path::new("code.txt"), Some(ctx.seed)),
    )?;
    Ok((code, record))
}

fn code_ref(path: &Path, seed: Option<u64>) -> CodeRef {
    CodeRef {
        path: Some(path.display().to_string()),
        seed,
    }
}

fn sigma0_arg(ctx: &Ctx, sigma0: Option<f64>) -> Result<f64> {
    sigma0
        .or_else(|| ctx.config.and_then(|c| c.sigma0_grid.first().copied()))
        .ok_or_else(|| {
            Error::Config(vec![
                "sigma0: required when generating a transmission".into()
            ])
        })
}

#[derive(Serialize)]
struct DetectorOutput {
    method: &'static str,
    prob_plus: Vec<f64>,
    decisions: Vec<i8>,
    ties: usize,
    ber: f64,
    converged: bool,
    iterations: usize,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bethe_free_energy: Option<f64>,
}

#[derive(Serialize)]
struct DetectOutput {
    users: usize,
    chips: usize,
    sigma0: f64,
    #[serde(rename = "Q")]
    q: f64,
    results: Vec<DetectorOutput>,
}

fn detect(ctx: &Ctx, a: &DetectArgs) -> Result<()> {
    let out = ctx.out_dir()?;
    let (code, record) = instance(ctx, &a.instance, out)?;
    let mut bp = ctx.config.map(|c| c.detector.clone()).unwrap_or_default();
    if let Some(v) = a.max_iter {
        bp.max_iterations = v;
    }
    if let Some(v) = a.tol {
        bp.tolerance = v;
    }
    if let Some(v) = a.damping {
        bp.damping = v;
    }
    if let Some(i) = a.init {
        bp.init = match i {
            BpInitArg::Uninformed => BpInitConfig::Uninformed,
            BpInitArg::Informed => BpInitConfig::Informed,
        };
    }
    let mut results = Vec::new();
    if matches!(a.method, MethodArg::Exact | MethodArg::Both) {
        let m = exact_marginals(&code, &record)?;
        let d = hard_decisions(&m);
        results.push(DetectorOutput {
            method: "exact",
            ber: bit_error_rate(&m, record.bits())?,
            ties: d.ties.iter().filter(|&&t| t).count(),
            decisions: d.bits,
            converged: true,
            iterations: 0,
            residual: 0.0,
            prob_plus: m.prob_plus,
            bethe_free_energy: None,
        });
    }
    if matches!(a.method, MethodArg::Bp | MethodArg::Both) {
        let run = bp_run(&code, &record, &bp.bp_params())?;
        let m = run.marginals;
        let d = hard_decisions(&m);
        results.push(DetectorOutput {
            method: "bp",
            ber: bit_error_rate(&m, record.bits())?,
            ties: d.ties.iter().filter(|&&t| t).count(),
            decisions: d.bits,
            converged: m.converged,
            iterations: m.iterations,
            residual: m.residual,
            bethe_free_energy: Some(bethe_free_energy(&code, &record, &run.messages)?),
            prob_plus: m.prob_plus,
        });
    }
    for r in &results {
        eprintln!(
            "{}: BER {:.6} (converged {}, {} iterations)",
            r.method, r.ber, r.converged, r.iterations
        );
    }
    write_json(
        &out.join("detect.json"),
        &DetectOutput {
            users: code.users(),
            chips: code.chips(),
            sigma0: record.sigma0(),
            q: record.q(),
            results,
        },
    )
}

#[derive(Serialize)]
struct EstimateOut {
    value: f64,
    se: f64,
}

impl From<cdmalab_core::popdyn::Estimate> for EstimateOut {
    fn from(e: cdmalab_core::popdyn::Estimate) -> Self {
        EstimateOut {
            value: e.value,
            se: e.se,
        }
    }
}

#[derive(Serialize)]
struct PopdynOutput {
    #[serde(rename = "C")]
    user_degree: usize,
    #[serde(rename = "L")]
    chip_degree: usize,
    modulation: &'static str,
    sigma0: f64,
    #[serde(rename = "Q")]
    q: f64,
    init: &'static str,
    seed: u64,
    population_size: usize,
    ber: EstimateOut,
    free_energy_per_chip: EstimateOut,
    free_energy_per_user: EstimateOut,
    spectral_efficiency: Option<f64>,
    converged: bool,
    sweeps: usize,
    ber_autocorrelation: f64,
    free_energy_autocorrelation: f64,
    mean_tanh: f64,
    mean_tanh_sq: f64,
}

/// Only the degrees and modulation matter to population dynamics.
fn pd_spec(ctx: &Ctx, spec: &SpecArgs) -> Result<EnsembleSpec> {
    let mut s = spec.merged(ctx.config, default_instance_spec());
    s.users = s.chip_degree;
    s.chips = s.user_degree;
    s.regularity = cdmalab_core::Regularity::FullyRegular.as_str().to_owned();
    s.to_spec()
}

fn popdyn(ctx: &Ctx, a: &PopdynArgs) -> Result<()> {
    let spec = pd_spec(ctx, &a.spec)?;
    let pd = a.pd.resolve(ctx.config);
    let params = pd.params(ctx.seed);
    let q = psd_q(a.sigma0)?;
    let sol = run_to_convergence(&spec, q, &params, a.init.into())?;
    let out = ctx.out_dir()?;
    eprintln!(
        "BER {:.6} ± {:.6}, f {:.6} ± {:.6}, {} sweeps{}",
        sol.ber.value,
        sol.ber.se,
        sol.free_energy.value,
        sol.free_energy.se,
        sol.sweeps,
        if sol.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    let hook = ctx.config.and_then(|c| c.spectral_efficiency);
    write_json(
        &out.join("popdyn.json"),
        &PopdynOutput {
            user_degree: spec.user_degree,
            chip_degree: spec.chip_degree,
            modulation: spec.modulation.as_str(),
            sigma0: a.sigma0,
            q,
            init: sol.init_mode.as_str(),
            seed: ctx.seed,
            population_size: params.population_size,
            ber: sol.ber.into(),
            free_energy_per_chip: sol.free_energy.into(),
            free_energy_per_user: sol.free_energy_per_user.into(),
            spectral_efficiency: hook.map(|h| h.apply(sol.free_energy.value, spec.load())),
            converged: sol.converged,
            sweeps: sol.sweeps,
            ber_autocorrelation: sol.ber_autocorrelation,
            free_energy_autocorrelation: sol.free_energy_autocorrelation,
            mean_tanh: sol.mean_tanh,
            mean_tanh_sq: sol.mean_tanh_sq,
        },
    )?;
    let path = out.join("popdyn_history.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["sweep", "ber", "mean_tanh"])
        .map_err(|e| csv_error(&path, e))?;
    for r in &sol.history {
        w.write_record([
            r.sweep.to_string(),
            r.ber.to_string(),
            r.mean_tanh.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::Io { path, source: e })
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// `start:stop:points` or `a,b,c`.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(vec![format!("sigma0-grid: cannot parse `{text}`")]);
    let parts: Vec<&str> = text.split(':').collect();
    match parts[..] {
        [start, stop, points] => {
            let start: f64 = start.trim().parse().map_err(|_| bad())?;
            let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
            let points: usize = points.trim().parse().map_err(|_| bad())?;
            match points {
                0 => Err(bad()),
                1 => Ok(vec![start]),
                n => Ok((0..n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect()),
            }
        }
        [_] => text
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

fn scan(ctx: &Ctx, a: &ScanArgs) -> Result<()> {
    let spec = pd_spec(ctx, &a.spec)?;
    let l_values = a
        .l_values
        .as_deref()
        .map(|t| {
            t.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config(vec![format!("l-values: cannot parse `{t}`")]))
                })
                .collect::<Result<Vec<usize>>>()
        })
        .transpose()?;
    let config = ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        experiment: ExperimentKind::PopdynScan,
        spec: SpecConfig::from_spec(&spec),
        sigma0_grid: parse_grid(&a.sigma0_grid)?,
        trials: 1,
        detector: Default::default(),
        popdyn: a.pd.resolve(ctx.config),
        seed: ctx.seed,
        output_dir: None,
        l_values,
        spectral_efficiency: ctx.config.and_then(|c| c.spectral_efficiency),
    };
    let summary = run_experiment(&config, &ctx.out, ctx.threads)?;
    report(&summary);
    summary.check()
}

/// Fixed-width histogram over the data range as CSV (`lo,hi,count`).
fn write_histogram(path: &Path, data: &[f64], bins: usize) -> Result<()> {
    let bins = bins.max(1);
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["lo", "hi", "count"])
        .map_err(|e| csv_error(path, e))?;
    if data.is_empty() {
        return w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        });
    }
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0u64; bins];
    for &x in data {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    for (i, c) in counts.iter().enumerate() {
        let a = lo + width * i as f64;
        w.write_record([a.to_string(), (a + width).to_string(), c.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Serialize)]
struct CouplingOut {
    k: usize,
    k2: usize,
    j: f64,
}

#[derive(Serialize)]
struct DecomposeOutput {
    #[serde(rename = "Q")]
    q: f64,
    constant_offset: f64,
    fields: Vec<f64>,
    couplings: Vec<CouplingOut>,
}

#[derive(Serialize)]
struct MomentsOutput {
    sigma0: f64,
    #[serde(rename = "Q")]
    q: f64,
    samples: usize,
    mean: f64,
    mean_se: f64,
    variance: f64,
    variance_se: f64,
    predicted_mean: f64,
    predicted_variance: f64,
    dense_variance: f64,
}

#[derive(Serialize)]
struct CensusOutput {
    users: usize,
    min_all_equal: usize,
    min_all_equal_count: u64,
    ground_energy: i64,
    ground_state_count: u64,
    ground_all_equal: usize,
    /// Listed ground states with their field alignment, best first.
    ranked_ground_states: Vec<(Vec<i8>, f64)>,
}

fn landscape(ctx: &Ctx, a: &LandscapeArgs) -> Result<()> {
    let out = ctx.out_dir()?;
    match a.mode {
        LandscapeMode::Decompose => {
            let (code, record) = instance(ctx, &a.instance, out)?;
            let cf = coupling_field_decomposition(&code, &record)?;
            let js: Vec<f64> = cf.couplings.values().copied().collect();
            write_histogram(&out.join("couplings_hist.csv"), &js, a.bins)?;
            write_histogram(&out.join("fields_hist.csv"), &cf.fields, a.bins)?;
            write_json(
                &out.join("landscape.json"),
                &DecomposeOutput {
                    q: cf.q,
                    constant_offset: cf.constant_offset,
                    fields: cf.fields.clone(),
                    couplings: cf
                        .couplings
                        .iter()
                        .map(|(&(k, k2), &j)| CouplingOut { k, k2, j })
                        .collect(),
                },
            )
        }
        LandscapeMode::Moments => {
            let spec = a
                .instance
                .spec
                .resolve(ctx.config, default_instance_spec())?;
            let sigma0 = sigma0_arg(ctx, a.instance.sigma0)?;
            let q = psd_q(sigma0)?;
            let (emp, fields) = empirical_field_moments(
                &spec,
                sigma0,
                a.realisations,
                &mut rng_from_seed(ctx.seed),
            )?;
            let ensemble = match spec.modulation {
                Modulation::Bpsk => MomentEnsemble::SparseBpsk,
                Modulation::Unmodulated => MomentEnsemble::SparseUnmodulated,
            };
            let pred = predicted_field_moments(&spec, q, ensemble)?;
            let dense = predicted_field_moments(&spec, q, MomentEnsemble::Dense)?;
            write_histogram(&out.join("fields_hist.csv"), &fields, a.bins)?;
            write_json(
                &out.join("moments.json"),
                &MomentsOutput {
                    sigma0,
                    q,
                    samples: emp.samples,
                    mean: emp.mean,
                    mean_se: emp.mean_se,
                    variance: emp.variance,
                    variance_se: emp.variance_se,
                    predicted_mean: pred.mean,
                    predicted_variance: pred.variance,
                    dense_variance: dense.variance,
                },
            )
        }
        LandscapeMode::Naesat => {
            let (code, record) = instance(ctx, &a.instance, out)?;
            let census = naesat_ground_states(&code)?;
            let cf = coupling_field_decomposition(&code, &record)?;
            let ranked = rank_by_field(&census.ground_states, &cf)
                .into_iter()
                .map(|(mask, h)| {
                    (
                        cdmalab_core::landscape::spins_from_mask(mask, code.users()),
                        h,
                    )
                })
                .collect();
            write_json(
                &out.join("naesat.json"),
                &CensusOutput {
                    users: code.users(),
                    min_all_equal: census.min_all_equal,
                    min_all_equal_count: census.min_all_equal_count,
                    ground_energy: census.ground_energy,
                    ground_state_count: census.ground_state_count,
                    ground_all_equal: census.ground_all_equal,
                    ranked_ground_states: ranked,
                },
            )
        }
    }
}
