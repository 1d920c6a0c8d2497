//! Experiment orchestration.
//!
//! Seeds: grid point `i` of an experiment runs with
//! `child_seed(config.seed, i)`, and trial `t` of that point with
//! `child_seed(point_seed, t)`. Points and trials run on a rayon pool but
//! results are gathered in grid order, so the output files do not depend on
//! the thread count. Every run writes `config.json`, its data files and a
//! plain-text `manifest.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cdmalab_core::channel::{psd_q, sample_bits, transmit};
use cdmalab_core::detector::{bit_error_rate, bp_detect, exact_marginals, MAX_EXACT_USERS};
use cdmalab_core::ensemble::sample_code;
use cdmalab_core::landscape::{
    coupling_field_decomposition, empirical_field_moments, naesat_ground_states,
    predicted_field_moments, rank_by_field, sharing_probability, spins_from_mask, MomentEnsemble,
};
use cdmalab_core::popdyn::{branch_point, symmetry_check, symmetry_noise_floor, BranchPoint};
use cdmalab_core::seeds::{child_seed, rng_from_seed};
use cdmalab_core::stats::{combined_se, mean_se};
use cdmalab_core::{EnsembleSpec, Modulation, SaddleSolution};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AffineHook, ExperimentConfig, ExperimentKind, PopdynConfig};
use crate::error::{Error, Result};
use crate::formats::write_json;

/// Combined-SE multiple under which two estimates are reported as agreeing.
pub const AGREEMENT_SE: f64 = 2.0;

/// Status of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStatus {
    pub index: usize,
    pub label: String,
    pub seed: u64,
    pub error: Option<String>,
}

/// What [`run_experiment`] did.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: ExperimentKind,
    pub out_dir: PathBuf,
    pub points: Vec<PointStatus>,
    /// Files written, relative to `out_dir`, manifest last.
    pub files: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub threads: usize,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// `Err(Partial)` if any point failed.
    pub fn check(&self) -> Result<()> {
        match self.failed() {
            0 => Ok(()),
            failed => Err(Error::Partial {
                failed,
                total: self.points.len(),
            }),
        }
    }
}

/// One row of a detection sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectRow {
    pub sigma0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub ber_exact: Option<f64>,
    pub ber_bp: f64,
    /// Standard error of `ber_exact` (of `ber_bp` when exact is skipped).
    pub se: f64,
    pub se_bp: f64,
    pub bp_convergence_rate: f64,
    pub mean_bp_iterations: f64,
    pub trials: usize,
}

/// One branch at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    #[serde(rename = "C")]
    pub user_degree: usize,
    #[serde(rename = "L")]
    pub chip_degree: usize,
    pub modulation: &'static str,
    pub sigma0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub init: &'static str,
    pub ber: f64,
    pub ber_se: f64,
    pub free_energy: f64,
    pub fe_se: f64,
    pub free_energy_per_user: f64,
    pub converged: bool,
    pub sweeps: usize,
    pub multivalued: bool,
    pub thermodynamic: bool,
    pub mean_tanh: f64,
    pub mean_tanh_sq: f64,
    pub spectral_efficiency: Option<f64>,
}

impl BranchRow {
    pub fn new(point: &BranchPoint, sol: &SaddleSolution, hook: Option<&AffineHook>) -> Self {
        BranchRow {
            user_degree: sol.model.user_degree,
            chip_degree: sol.model.chip_degree,
            modulation: sol.model.modulation.as_str(),
            sigma0: point.sigma0,
            q: point.q,
            init: sol.init_mode.as_str(),
            ber: sol.ber.value,
            ber_se: sol.ber.se,
            free_energy: sol.free_energy.value,
            fe_se: sol.free_energy.se,
            free_energy_per_user: sol.free_energy_per_user.value,
            converged: sol.converged,
            sweeps: sol.sweeps,
            multivalued: point.multivalued,
            thermodynamic: std::ptr::eq(point.thermodynamic(), sol),
            mean_tanh: sol.mean_tanh,
            mean_tanh_sq: sol.mean_tanh_sq,
            spectral_efficiency: hook.map(|h| h.apply(sol.free_energy.value, sol.model.load())),
        }
    }

    fn pair(point: &BranchPoint, hook: Option<&AffineHook>) -> [BranchRow; 2] {
        [
            BranchRow::new(point, &point.random, hook),
            BranchRow::new(point, &point.informed, hook),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub sigma0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub samples: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub predicted_mean: f64,
    pub mean_z: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub predicted_variance: f64,
    pub variance_z: f64,
    pub dense_variance: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub sigma0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub trial: usize,
    pub seed: u64,
    pub sharing_probability: f64,
    pub min_all_equal: usize,
    pub min_all_equal_count: u64,
    pub ground_energy: i64,
    pub ground_state_count: u64,
    pub ground_all_equal: usize,
    /// All-equal chips of the transmitted bits.
    pub sent_all_equal: usize,
    /// BER of the listed ground state best aligned with the fields.
    pub best_ground_ber: f64,
    pub exact_ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub sigma0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub init: &'static str,
    pub ber_bpsk: f64,
    pub ber_bpsk_se: f64,
    pub ber_unmod: f64,
    pub ber_unmod_se: f64,
    pub ber_z: f64,
    pub ber_relative: f64,
    pub fe_bpsk: f64,
    pub fe_bpsk_se: f64,
    pub fe_unmod: f64,
    pub fe_unmod_se: f64,
    pub fe_z: f64,
    pub agree: bool,
    /// Label-conditioned L1 distance of the unmodulated field population.
    pub symmetry_l1: f64,
    /// 99th percentile of the label-permutation distances.
    pub symmetry_floor: f64,
}

/// `z` score of the difference of two independent estimates.
pub fn z_score(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let se = combined_se(se_a, se_b);
    if se == 0.0 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b) / se
    }
}

/// Symmetry distance of a joint field population and the 99th percentile
/// of its label-permutation floor.
pub fn symmetry_summary(
    sol: &SaddleSolution,
    bins: usize,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let d = symmetry_check(&sol.populations.field, bins)?;
    let floor = symmetry_noise_floor(
        &sol.populations.field,
        bins,
        resamples.max(1),
        &mut rng_from_seed(seed),
    )?;
    let idx = ((0.99 * floor.len() as f64).ceil() as usize).clamp(1, floor.len()) - 1;
    Ok((d, floor[idx]))
}

/// Equivalence rows for one noise level from BPSK and unmodulated branch
/// points.
pub fn equivalence_rows(
    bpsk: &BranchPoint,
    unmod: &BranchPoint,
    popdyn: &PopdynConfig,
    seed: u64,
) -> Result<Vec<EquivalenceRow>> {
    let mut rows = Vec::with_capacity(2);
    for (i, (b, u)) in [
        (&bpsk.random, &unmod.random),
        (&bpsk.informed, &unmod.informed),
    ]
    .into_iter()
    .enumerate()
    {
        let (symmetry_l1, symmetry_floor) = symmetry_summary(
            u,
            popdyn.symmetry_bins,
            popdyn.symmetry_resamples,
            child_seed(seed, i as u64),
        )?;
        let ber_z = z_score(b.ber.value, b.ber.se, u.ber.value, u.ber.se);
        let fe_z = z_score(
            b.free_energy.value,
            b.free_energy.se,
            u.free_energy.value,
            u.free_energy.se,
        );
        rows.push(EquivalenceRow {
            sigma0: bpsk.sigma0,
            q: bpsk.q,
            init: b.init_mode.as_str(),
            ber_bpsk: b.ber.value,
            ber_bpsk_se: b.ber.se,
            ber_unmod: u.ber.value,
            ber_unmod_se: u.ber.se,
            ber_z,
            ber_relative: (b.ber.value - u.ber.value).abs()
                / b.ber.value.abs().max(f64::MIN_POSITIVE),
            fe_bpsk: b.free_energy.value,
            fe_bpsk_se: b.free_energy.se,
            fe_unmod: u.free_energy.value,
            fe_unmod_se: u.free_energy.se,
            fe_z,
            agree: ber_z.abs() <= AGREEMENT_SE && fe_z.abs() <= AGREEMENT_SE,
            symmetry_l1,
            symmetry_floor,
        });
    }
    Ok(rows)
}

/// Detection sweep at one noise level: `trials` fresh instances, each with
/// seed `child_seed(point_seed, t)`.
pub fn detect_point(
    config: &ExperimentConfig,
    spec: &EnsembleSpec,
    sigma0: f64,
    point_seed: u64,
) -> Result<DetectRow> {
    let bp = config.detector.bp_params();
    let run_exact = config.detector.exact && spec.users <= MAX_EXACT_USERS;
    let per_trial: Vec<(Option<f64>, f64, bool, usize)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(child_seed(point_seed, t as u64));
            let code = sample_code(spec, &mut rng)?;
            let bits = sample_bits(spec.users, &mut rng)?;
            let record = transmit(&code, &bits, sigma0, &mut rng)?;
            let exact = if run_exact {
                Some(bit_error_rate(&exact_marginals(&code, &record)?, &bits)?)
            } else {
                None
            };
            let m = bp_detect(&code, &record, &bp)?;
            Ok((exact, bit_error_rate(&m, &bits)?, m.converged, m.iterations))
        })
        .collect::<Result<_>>()?;
    let bp_bers: Vec<f64> = per_trial.iter().map(|r| r.1).collect();
    let (ber_bp, se_bp) = mean_se(&bp_bers);
    let (ber_exact, se) = if run_exact {
        let exact: Vec<f64> = per_trial.iter().filter_map(|r| r.0).collect();
        let (m, s) = mean_se(&exact);
        (Some(m), s)
    } else {
        (None, se_bp)
    };
    let n = per_trial.len() as f64;
    Ok(DetectRow {
        sigma0,
        q: psd_q(sigma0)?,
        ber_exact,
        ber_bp,
        se,
        se_bp,
        bp_convergence_rate: per_trial.iter().filter(|r| r.2).count() as f64 / n,
        mean_bp_iterations: per_trial.iter().map(|r| r.3 as f64).sum::<f64>() / n,
        trials: config.trials,
    })
}

pub fn moment_point(
    spec: &EnsembleSpec,
    sigma0: f64,
    realisations: usize,
    seed: u64,
) -> Result<MomentRow> {
    let q = psd_q(sigma0)?;
    let (emp, _) = empirical_field_moments(spec, sigma0, realisations, &mut rng_from_seed(seed))?;
    let ensemble = match spec.modulation {
        Modulation::Bpsk => MomentEnsemble::SparseBpsk,
        Modulation::Unmodulated => MomentEnsemble::SparseUnmodulated,
    };
    let pred = predicted_field_moments(spec, q, ensemble)?;
    let dense = predicted_field_moments(spec, q, MomentEnsemble::Dense)?;
    Ok(MomentRow {
        sigma0,
        q,
        samples: emp.samples,
        mean: emp.mean,
        mean_se: emp.mean_se,
        predicted_mean: pred.mean,
        mean_z: z_score(emp.mean, emp.mean_se, pred.mean, 0.0),
        variance: emp.variance,
        variance_se: emp.variance_se,
        predicted_variance: pred.variance,
        variance_z: z_score(emp.variance, emp.variance_se, pred.variance, 0.0),
        dense_variance: dense.variance,
        noise_variance: pred.noise_variance,
    })
}

pub fn census_instance(
    spec: &EnsembleSpec,
    sigma0: f64,
    trial: usize,
    seed: u64,
) -> Result<CensusRow> {
    let mut rng = rng_from_seed(seed);
    let code = sample_code(spec, &mut rng)?;
    let bits = sample_bits(spec.users, &mut rng)?;
    let record = transmit(&code, &bits, sigma0, &mut rng)?;
    let census = naesat_ground_states(&code)?;
    let cf = coupling_field_decomposition(&code, &record)?;
    let ranked = rank_by_field(&census.ground_states, &cf);
    let ber_of = |tau: &[i8]| {
        tau.iter().zip(&bits).filter(|(a, b)| a != b).count() as f64 / bits.len() as f64
    };
    let best_ground_ber = ranked.first().map_or(f64::NAN, |&(mask, _)| {
        ber_of(&spins_from_mask(mask, spec.users))
    });
    let sent_all_equal = (0..code.chips())
        .filter(|&mu| {
            let row = code.chip_entries(mu);
            row.iter().all(|e| bits[e.user] == bits[row[0].user])
        })
        .count();
    Ok(CensusRow {
        sigma0,
        q: record.q(),
        trial,
        seed,
        sharing_probability: sharing_probability(&code),
        min_all_equal: census.min_all_equal,
        min_all_equal_count: census.min_all_equal_count,
        ground_energy: census.ground_energy,
        ground_state_count: census.ground_state_count,
        ground_all_equal: census.ground_all_equal,
        sent_all_equal,
        best_ground_ber,
        exact_ber: bit_error_rate(&exact_marginals(&code, &record)?, &bits)?,
    })
}

/// Output directory precedence: explicit argument, then the config's
/// `output_dir`, then `$CDMALAB_OUT`, then `cdmalab-out`.
pub fn resolve_out_dir(explicit: Option<&Path>, config: Option<&ExperimentConfig>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cdmalab-out"))
}

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "CDMALAB_OUT";

type PointResult<T> = (PointStatus, Option<T>);

fn run_points<T, F>(labels: Vec<String>, master: u64, work: F) -> Vec<PointResult<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    labels
        .into_par_iter()
        .enumerate()
        .map(|(index, label)| {
            let seed = child_seed(master, index as u64);
            let (value, error) = match work(index, seed) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            (
                PointStatus {
                    index,
                    label,
                    seed,
                    error,
                },
                value,
            )
        })
        .collect()
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        let csv_err = |e| Error::Csv {
            path: path.clone(),
            source: e,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.into());
        Ok(())
    }
}

#[derive(Serialize)]
struct ScanSummary {
    #[serde(rename = "C")]
    user_degree: usize,
    #[serde(rename = "L")]
    chip_degree: usize,
    load: f64,
    /// Smallest flagged Q and the flagged noise levels.
    onset_q: Option<f64>,
    multivalued_sigma0: Vec<f64>,
    /// Noise levels where the informed branch has the lower free energy.
    informed_thermodynamic_sigma0: Vec<f64>,
}

/// Runs `config` on a pool of `threads` workers (0 = rayon default) and
/// writes everything under `out_dir`. Point failures are recorded in the
/// manifest rather than aborting the run; use [`RunSummary::check`] to turn
/// them into an error.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<RunSummary> {
    config.validate()?;
    let spec = config.ensemble()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(vec![format!("threads: {e}")]))?;
    let threads = pool.current_num_threads();
    let start = Instant::now();
    let mut out = Output {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    fs::write(out_dir.join("config.json"), config.to_json() + "\n")
        .map_err(|e| Error::io(out_dir, e))?;
    out.files.push("config.json".into());

    let grid = &config.sigma0_grid;
    let sigma_labels = || {
        grid.iter()
            .map(|s| format!("sigma0={s}"))
            .collect::<Vec<_>>()
    };
    let hook = config.spectral_efficiency.as_ref();

    let statuses = pool.install(|| -> Result<Vec<PointStatus>> {
        Ok(match config.experiment {
            ExperimentKind::DetectSweep => {
                let results = run_points(sigma_labels(), config.seed, |i, seed| {
                    detect_point(config, &spec, grid[i], seed)
                });
                let rows: Vec<DetectRow> = results.iter().filter_map(|r| r.1.clone()).collect();
                out.csv("detect_sweep.csv", &rows)?;
                results.into_iter().map(|r| r.0).collect()
            }
            ExperimentKind::PopdynScan => {
                let ls = config
                    .l_values
                    .clone()
                    .unwrap_or_else(|| vec![spec.chip_degree]);
                let mut labels = Vec::new();
                for l in &ls {
                    labels.extend(grid.iter().map(|s| format!("L={l} sigma0={s}")));
                }
                let results = run_points(labels, config.seed, |i, seed| {
                    let l = ls[i / grid.len()];
                    let spec_l = EnsembleSpec::degrees(spec.user_degree, l, spec.modulation)?;
                    Ok(branch_point(
                        &spec_l,
                        grid[i % grid.len()],
                        &config.popdyn.params(seed),
                    )?)
                });
                let mut summaries = Vec::new();
                for (li, &l) in ls.iter().enumerate() {
                    let points: Vec<&BranchPoint> = results[li * grid.len()..(li + 1) * grid.len()]
                        .iter()
                        .filter_map(|r| r.1.as_ref())
                        .collect();
                    let rows: Vec<BranchRow> = points
                        .iter()
                        .flat_map(|p| BranchRow::pair(p, hook))
                        .collect();
                    out.csv(&format!("branches_L{l}.csv"), &rows)?;
                    summaries.push(ScanSummary {
                        user_degree: spec.user_degree,
                        chip_degree: l,
                        load: l as f64 / spec.user_degree as f64,
                        onset_q: points
                            .iter()
                            .filter(|p| p.multivalued)
                            .map(|p| p.q)
                            .min_by(f64::total_cmp),
                        multivalued_sigma0: points
                            .iter()
                            .filter(|p| p.multivalued)
                            .map(|p| p.sigma0)
                            .collect(),
                        informed_thermodynamic_sigma0: points
                            .iter()
                            .filter(|p| std::ptr::eq(p.thermodynamic(), &p.informed))
                            .map(|p| p.sigma0)
                            .collect(),
                    });
                }
                out.json("popdyn_scan.json", &summaries)?;
                results.into_iter().map(|r| r.0).collect()
            }
            ExperimentKind::MomentCheck => {
                let results = run_points(sigma_labels(), config.seed, |i, seed| {
                    moment_point(&spec, grid[i], config.trials, seed)
                });
                let rows: Vec<MomentRow> = results.iter().filter_map(|r| r.1.clone()).collect();
                out.csv("moment_check.csv", &rows)?;
                results.into_iter().map(|r| r.0).collect()
            }
            ExperimentKind::NaesatCensus => {
                let results = run_points(sigma_labels(), config.seed, |i, seed| {
                    (0..config.trials)
                        .into_par_iter()
                        .map(|t| census_instance(&spec, grid[i], t, child_seed(seed, t as u64)))
                        .collect::<Result<Vec<_>>>()
                });
                let rows: Vec<CensusRow> = results
                    .iter()
                    .filter_map(|r| r.1.clone())
                    .flatten()
                    .collect();
                out.csv("naesat_census.csv", &rows)?;
                results.into_iter().map(|r| r.0).collect()
            }
            ExperimentKind::EquivalenceCheck => {
                let results = run_points(sigma_labels(), config.seed, |i, seed| {
                    let bpsk_spec = EnsembleSpec::degrees(
                        spec.user_degree,
                        spec.chip_degree,
                        Modulation::Bpsk,
                    )?;
                    let unmod_spec = EnsembleSpec::degrees(
                        spec.user_degree,
                        spec.chip_degree,
                        Modulation::Unmodulated,
                    )?;
                    let bpsk = branch_point(
                        &bpsk_spec,
                        grid[i],
                        &config.popdyn.params(child_seed(seed, 0)),
                    )?;
                    let unmod = branch_point(
                        &unmod_spec,
                        grid[i],
                        &config.popdyn.params(child_seed(seed, 1)),
                    )?;
                    let rows =
                        equivalence_rows(&bpsk, &unmod, &config.popdyn, child_seed(seed, 2))?;
                    let mut branches = BranchRow::pair(&bpsk, hook).to_vec();
                    branches.extend(BranchRow::pair(&unmod, hook));
                    Ok((rows, branches))
                });
                let rows: Vec<EquivalenceRow> = results
                    .iter()
                    .filter_map(|r| r.1.as_ref())
                    .flat_map(|r| r.0.clone())
                    .collect();
                let branches: Vec<BranchRow> = results
                    .iter()
                    .filter_map(|r| r.1.as_ref())
                    .flat_map(|r| r.1.clone())
                    .collect();
                out.csv("equivalence.csv", &rows)?;
                out.csv("equivalence_branches.csv", &branches)?;
                results.into_iter().map(|r| r.0).collect()
            }
        })
    })?;

    let wall_time_s = start.elapsed().as_secs_f64();
    out.files.push("manifest.txt".into());
    let summary = RunSummary {
        experiment: config.experiment,
        out_dir: out_dir.to_path_buf(),
        points: statuses,
        files: out.files,
        wall_time_s,
        threads,
    };
    fs::write(
        out_dir.join("manifest.txt"),
        manifest_text(config, &summary),
    )
    .map_err(|e| Error::io(out_dir, e))?;
    Ok(summary)
}

/// Plain-text manifest: version, config echo, seeds, per-point status and
/// the list of files written.
pub fn manifest_text(config: &ExperimentConfig, summary: &RunSummary) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "cdmalab {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "experiment: {}", config.experiment.as_str());
    let _ = writeln!(m, "master_seed: {}", config.seed);
    let _ = writeln!(m, "seed_rule: point i uses child_seed(master_seed, i); trial t uses child_seed(point_seed, t)");
    let _ = writeln!(m, "threads: {}", summary.threads);
    let _ = writeln!(m, "wall_time_s: {:.3}", summary.wall_time_s);
    let _ = writeln!(
        m,
        "status: {} of {} points ok",
        summary.points.len() - summary.failed(),
        summary.points.len()
    );
    let _ = writeln!(m, "\n[config]");
    m.push_str(&config.to_json());
    let _ = writeln!(m, "\n\n[points]");
    for p in &summary.points {
        match &p.error {
            None => {
                let _ = writeln!(m, "{} {} seed={} ok", p.index, p.label, p.seed);
            }
            Some(e) => {
                let _ = writeln!(m, "{} {} seed={} FAILED: {e}", p.index, p.label, p.seed);
            }
        }
    }
    let _ = writeln!(m, "\n[files]");
    for f in &summary.files {
        let _ = writeln!(m, "{}", f.display());
    }
    m
}
