//! Experiment drivers: sigma sensitivity sweep and the social-component
//! ablations, each reporting per-cell metrics and summary statistics as CSV.
//!
//! Cells are independent seeded jobs executed on a work queue with
//! configurable parallelism; results come back in deterministic order
//! regardless of scheduling.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::a2c::{rollout_greedy, train, TrainConfig};
use crate::env::{EnvConfig, Status};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricReport};
use crate::scenario::{derive_seed, gen_hisc_cac_suite, gen_hrsc_suite, Scenario};
use crate::slm::SlmParams;

/// One trained-and-evaluated cell of an experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario_id: String,
    /// Grid coordinate: `sigma=0.5` for sweeps, the model variant for
    /// ablations.
    pub variant: String,
    pub seed: u64,
    pub outcome: std::result::Result<MetricReport, String>,
}

impl Cell {
    pub fn metrics(&self) -> Option<&MetricReport> {
        self.outcome.as_ref().ok()
    }
}

fn run_cells<F>(specs: Vec<(Scenario, String, u64, EnvConfig<f64>)>, parallelism: usize, post: F) -> Vec<Cell>
where
    F: Fn(&Scenario, &EnvConfig<f64>, u64) -> Result<MetricReport> + Sync,
{
    let job = |(scenario, variant, seed, env_cfg): &(Scenario, String, u64, EnvConfig<f64>)| -> Cell {
        let outcome = post(scenario, env_cfg, *seed).map_err(|e| e.to_string());
        Cell { scenario_id: scenario.id.clone(), variant: variant.clone(), seed: *seed, outcome }
    };
    match parallelism {
        0 => specs.par_iter().map(job).collect(),
        1 => specs.iter().map(job).collect(),
        n => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool construction");
            pool.install(|| specs.par_iter().map(job).collect())
        }
    }
}

/// Trains one policy and evaluates one greedy episode, returning its
/// metrics.
pub fn train_and_evaluate(
    scenario: &Scenario,
    env_cfg: &EnvConfig<f64>,
    train_cfg: &TrainConfig,
) -> Result<MetricReport> {
    let out = train(scenario, env_cfg, train_cfg)?;
    let record = rollout_greedy(&out.actor, scenario, env_cfg)?;
    Ok(compute_metrics(&record, scenario, env_cfg))
}

/// Mean over the cells of one variant that trained successfully and reached
/// the goal; `None` when no such cell exists.
fn mean_by<F: Fn(&MetricReport) -> f64>(cells: &[Cell], variant: &str, f: F) -> Option<f64> {
    let values: Vec<f64> = cells
        .iter()
        .filter(|c| c.variant == variant)
        .filter_map(|c| c.metrics())
        .filter(|m| m.status == Status::Success)
        .map(|m| f(m))
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn count_by<F: Fn(&MetricReport) -> bool>(cells: &[Cell], variant: &str, f: F) -> usize {
    cells
        .iter()
        .filter(|c| c.variant == variant)
        .filter_map(|c| c.metrics())
        .filter(|m| f(m))
        .count()
}

fn completed_fraction(cells: &[Cell]) -> f64 {
    if cells.is_empty() {
        return 1.0;
    }
    cells.iter().filter(|c| c.outcome.is_ok()).count() as f64 / cells.len() as f64
}

fn write_cells_csv<W: Write>(cells: &[Cell], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "scenario_id,variant,seed,status,mld_raw,mld_smoothed,path_length,straight_length,detour_ratio,front_pass,field_integral,error"
    )?;
    for c in cells {
        match &c.outcome {
            Ok(m) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},",
                c.scenario_id,
                c.variant,
                c.seed,
                m.status,
                m.mld,
                m.mld_smoothed,
                m.path_length,
                m.straight_length,
                m.detour_ratio,
                m.front_pass.map(|b| b.to_string()).unwrap_or_default(),
                m.field_integral
            )?,
            Err(e) => writeln!(
                w,
                "{},{},{},error,,,,,,,,{}",
                c.scenario_id,
                c.variant,
                c.seed,
                e.replace(',', ";").replace('\n', " ")
            )?,
        }
    }
    Ok(())
}

fn save_csv(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut buf = std::io::BufWriter::new(file);
    write(&mut buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

// ---------------------------------------------------------------------------
// sigma sweep
// ---------------------------------------------------------------------------

/// The published sensitivity set for the social weight.
pub const DEFAULT_SIGMAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaStat {
    pub sigma: f64,
    pub n_cells: usize,
    pub n_trained: usize,
    pub n_success: usize,
    pub mean_mld: Option<f64>,
    pub mean_mld_raw: Option<f64>,
    pub min_mld: Option<f64>,
    pub max_mld: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSweepReport {
    pub cells: Vec<Cell>,
    pub stats: Vec<SigmaStat>,
}

fn variant_of_sigma(sigma: f64) -> String {
    format!("sigma={sigma}")
}

/// Trains one policy per (scenario, sigma, seed), rolls it out greedily,
/// and aggregates the smoothed-trajectory MLD per sigma. Per-cell failures
/// are recorded in the report instead of aborting the sweep.
pub fn run_sigma_sweep(
    suite: &[Scenario],
    sigmas: &[f64],
    env_cfg: &EnvConfig<f64>,
    train_cfg: &TrainConfig,
    seeds: &[u64],
    parallelism: usize,
) -> SigmaSweepReport {
    let mut specs = Vec::new();
    for &sigma in sigmas {
        for scenario in suite {
            for &seed in seeds {
                let cell_seed = derive_seed(seed, &format!("sweep/{}/sigma={sigma}", scenario.id));
                specs.push((scenario.clone(), variant_of_sigma(sigma), cell_seed, env_cfg.clone().with_sigma(sigma)));
            }
        }
    }
    let train_cfg_base = train_cfg.clone();
    let cells = run_cells(specs, parallelism, |scenario, cfg, seed| {
        train_and_evaluate(scenario, cfg, &train_cfg_base.clone().with_seed(seed))
    });

    let stats = sigmas
        .iter()
        .map(|&sigma| {
            let variant = variant_of_sigma(sigma);
            let in_variant: Vec<&Cell> = cells.iter().filter(|c| c.variant == variant).collect();
            let mlds: Vec<f64> = in_variant
                .iter()
                .filter_map(|c| c.metrics())
                .filter(|m| m.status == Status::Success)
                .map(|m| m.mld_smoothed)
                .collect();
            SigmaStat {
                sigma,
                n_cells: in_variant.len(),
                n_trained: in_variant.iter().filter(|c| c.outcome.is_ok()).count(),
                n_success: mlds.len(),
                mean_mld: mean_by(&cells, &variant, |m| m.mld_smoothed),
                mean_mld_raw: mean_by(&cells, &variant, |m| m.mld),
                min_mld: mlds.iter().copied().reduce(f64::min),
                max_mld: mlds.iter().copied().reduce(f64::max),
            }
        })
        .collect();
    SigmaSweepReport { cells, stats }
}

impl SigmaSweepReport {
    pub fn completed_fraction(&self) -> f64 {
        completed_fraction(&self.cells)
    }

    pub fn mean_mld(&self, sigma: f64) -> Option<f64> {
        self.stats.iter().find(|s| s.sigma == sigma).and_then(|s| s.mean_mld)
    }

    pub fn save_cells_csv(&self, path: &Path) -> Result<()> {
        save_csv(path, |w| write_cells_csv(&self.cells, w))
    }

    pub fn save_summary_csv(&self, path: &Path) -> Result<()> {
        save_csv(path, |w| {
            writeln!(w, "sigma,n_cells,n_trained,n_success,mean_mld,mean_mld_raw,min_mld,max_mld")?;
            for s in &self.stats {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    s.sigma,
                    s.n_cells,
                    s.n_trained,
                    s.n_success,
                    opt(s.mean_mld),
                    opt(s.mean_mld_raw),
                    opt(s.min_mld),
                    opt(s.max_mld)
                )?;
            }
            Ok(())
        })
    }

    pub fn format_table(&self) -> String {
        let mut t = format!("{:>8} {:>8} {:>9} {:>12} {:>12}\n", "sigma", "cells", "success", "mean MLD", "raw MLD");
        for s in &self.stats {
            t.push_str(&format!(
                "{:>8} {:>8} {:>9} {:>12} {:>12}\n",
                s.sigma,
                s.n_cells,
                s.n_success,
                opt_fmt(s.mean_mld),
                opt_fmt(s.mean_mld_raw)
            ));
        }
        t
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

// ---------------------------------------------------------------------------
// heading-relevant component ablation
// ---------------------------------------------------------------------------

pub const VARIANT_FULL: &str = "full";
pub const VARIANT_NO_HRSC: &str = "no-hrsc";
pub const VARIANT_NO_HISC: &str = "no-hisc";
pub const VARIANT_NO_CAC: &str = "no-cac";

#[derive(Debug, Clone, PartialEq)]
pub struct FrontPassStat {
    pub variant: String,
    pub n_cells: usize,
    pub n_trained: usize,
    pub n_success: usize,
    pub front_pass_count: usize,
    pub front_pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrscAblationReport {
    pub cells: Vec<Cell>,
    pub stats: Vec<FrontPassStat>,
}

/// Generates the 42-scenario orientation suite and trains the full model and
/// the heading-blind variant on every scenario, counting front passes.
pub fn run_hrsc_ablation(
    seed: u64,
    env_cfg: &EnvConfig<f64>,
    train_cfg: &TrainConfig,
    parallelism: usize,
) -> HrscAblationReport {
    let suite = gen_hrsc_suite(seed);
    run_hrsc_ablation_on(&suite, seed, env_cfg, train_cfg, parallelism)
}

/// Same driver over a caller-provided suite.
pub fn run_hrsc_ablation_on(
    suite: &[Scenario],
    seed: u64,
    env_cfg: &EnvConfig<f64>,
    train_cfg: &TrainConfig,
    parallelism: usize,
) -> HrscAblationReport {
    let variants: [(&str, SlmParams<f64>); 2] =
        [(VARIANT_FULL, env_cfg.slm), (VARIANT_NO_HRSC, env_cfg.slm.without_hrsc())];
    let mut specs = Vec::new();
    for (name, slm) in &variants {
        for scenario in suite {
            let cell_seed = derive_seed(seed, &format!("hrsc/{}/{}", scenario.id, name));
            specs.push((scenario.clone(), name.to_string(), cell_seed, env_cfg.clone().with_slm(*slm)));
        }
    }
    let train_cfg_base = train_cfg.clone();
    let cells = run_cells(specs, parallelism, |scenario, cfg, cell_seed| {
        train_and_evaluate(scenario, cfg, &train_cfg_base.clone().with_seed(cell_seed))
    });
    let stats = variants
        .iter()
        .map(|(name, _)| {
            let n_cells = cells.iter().filter(|c| c.variant == *name).count();
            let n_trained = cells.iter().filter(|c| c.variant == *name && c.outcome.is_ok()).count();
            let n_success = count_by(&cells, name, |m| m.status == Status::Success);
            let front = count_by(&cells, name, |m| m.front_pass == Some(true));
            FrontPassStat {
                variant: name.to_string(),
                n_cells,
                n_trained,
                n_success,
                front_pass_count: front,
                front_pass_rate: if n_trained > 0 { front as f64 / n_trained as f64 } else { f64::NAN },
            }
        })
        .collect();
    HrscAblationReport { cells, stats }
}

impl HrscAblationReport {
    pub fn completed_fraction(&self) -> f64 {
        completed_fraction(&self.cells)
    }

    pub fn front_pass_count(&self, variant: &str) -> usize {
        self.stats.iter().find(|s| s.variant == variant).map(|s| s.front_pass_count).unwrap_or(0)
    }

    pub fn front_pass_rate(&self, variant: &str) -> f64 {
        self.stats.iter().find(|s| s.variant == variant).map(|s| s.front_pass_rate).unwrap_or(f64::NAN)
    }

    pub fn save_cells_csv(&self, path: &Path) -> Result<()> {
        save_csv(path, |w| write_cells_csv(&self.cells, w))
    }

    pub fn save_summary_csv(&self, path: &Path) -> Result<()> {
        save_csv(path, |w| {
            writeln!(w, "variant,n_cells,n_trained,n_success,front_pass_count,front_pass_rate")?;
            for s in &self.stats {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    s.variant, s.n_cells, s.n_trained, s.n_success, s.front_pass_count, s.front_pass_rate
                )?;
            }
            Ok(())
        })
    }

    pub fn format_table(&self) -> String {
        let mut t = format!("{:>10} {:>8} {:>9} {:>12} {:>12}\n", "variant", "cells", "success", "front-pass", "rate");
        for s in &self.stats {
            t.push_str(&format!(
                "{:>10} {:>8} {:>9} {:>12} {:>11.1}%\n",
                s.variant,
                s.n_cells,
                s.n_success,
                s.front_pass_count,
                100.0 * s.front_pass_rate
            ));
        }
        t
    }
}

// ---------------------------------------------------------------------------
// heading-irrelevant component ablation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct MldStat {
    pub variant: String,
    pub n_cells: usize,
    pub n_trained: usize,
    pub n_success: usize,
    pub mean_mld: Option<f64>,
    pub mean_mld_raw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiscCacAblationReport {
    pub cells: Vec<Cell>,
    pub stats: Vec<MldStat>,
}

/// Generates the 21-scenario suite and trains the full model plus the two
/// single-component removals on every scenario, comparing mean MLD.
pub fn run_hisc_cac_ablation(
    seed: u64,
    env_cfg: &EnvConfig<f64>,
    train_cfg: &TrainConfig,
    parallelism: usize,
) -> HiscCacAblationReport {
    let suite = gen_hisc_cac_suite(seed);
    run_hisc_cac_ablation_on(&suite, seed, env_cfg, train_cfg, parallelism)
}

pub fn run_hisc_cac_ablation_on(
    suite: &[Scenario],
    seed: u64,
    env_cfg: &EnvConfig<f64>,
    train_cfg: &TrainConfig,
    parallelism: usize,
) -> HiscCacAblationReport {
    let variants: [(&str, SlmParams<f64>); 3] = [
        (VARIANT_FULL, env_cfg.slm),
        (VARIANT_NO_HISC, env_cfg.slm.without_hisc()),
        (VARIANT_NO_CAC, env_cfg.slm.without_cac()),
    ];
    let mut specs = Vec::new();
    for (name, slm) in &variants {
        for scenario in suite {
            let cell_seed = derive_seed(seed, &format!("hisccac/{}/{}", scenario.id, name));
            specs.push((scenario.clone(), name.to_string(), cell_seed, env_cfg.clone().with_slm(*slm)));
        }
    }
    let train_cfg_base = train_cfg.clone();
    let cells = run_cells(specs, parallelism, |scenario, cfg, cell_seed| {
        train_and_evaluate(scenario, cfg, &train_cfg_base.clone().with_seed(cell_seed))
    });
    let stats = variants
        .iter()
        .map(|(name, _)| MldStat {
            variant: name.to_string(),
            n_cells: cells.iter().filter(|c| c.variant == *name).count(),
            n_trained: cells.iter().filter(|c| c.variant == *name && c.outcome.is_ok()).count(),
            n_success: count_by(&cells, name, |m| m.status == Status::Success),
            mean_mld: mean_by(&cells, name, |m| m.mld_smoothed),
            mean_mld_raw: mean_by(&cells, name, |m| m.mld),
        })
        .collect();
    HiscCacAblationReport { cells, stats }
}

impl HiscCacAblationReport {
    pub fn completed_fraction(&self) -> f64 {
        completed_fraction(&self.cells)
    }

    pub fn mean_mld(&self, variant: &str) -> Option<f64> {
        self.stats.iter().find(|s| s.variant == variant).and_then(|s| s.mean_mld)
    }

    pub fn save_cells_csv(&self, path: &Path) -> Result<()> {
        save_csv(path, |w| write_cells_csv(&self.cells, w))
    }

    pub fn save_summary_csv(&self, path: &Path) -> Result<()> {
        save_csv(path, |w| {
            writeln!(w, "variant,n_cells,n_trained,n_success,mean_mld,mean_mld_raw")?;
            for s in &self.stats {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    s.variant,
                    s.n_cells,
                    s.n_trained,
                    s.n_success,
                    opt(s.mean_mld),
                    opt(s.mean_mld_raw)
                )?;
            }
            Ok(())
        })
    }

    pub fn format_table(&self) -> String {
        let mut t = format!("{:>10} {:>8} {:>9} {:>12} {:>12}\n", "variant", "cells", "success", "mean MLD", "raw MLD");
        for s in &self.stats {
            t.push_str(&format!(
                "{:>10} {:>8} {:>9} {:>12} {:>12}\n",
                s.variant,
                s.n_cells,
                s.n_success,
                opt_fmt(s.mean_mld),
                opt_fmt(s.mean_mld_raw)
            ));
        }
        t
    }
}
