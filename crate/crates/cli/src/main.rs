//! `socnav` — command-line front end wiring scenario generation, training,
//! evaluation rollouts, sweeps, ablations, and field-grid export.
//!
//! Exit codes: 0 success, 2 usage error, 3 training divergence,
//! 4 checkpoint error, 5 too many failed sweep cells.

mod manifest;
mod overrides;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use socnav::a2c::{self, TrainConfig};
use socnav::env::{EnvConfig, NavEnv};
use socnav::error::Error;
use socnav::experiments::{
    run_hisc_cac_ablation_on, run_hrsc_ablation_on, run_sigma_sweep, DEFAULT_SIGMAS,
};
use socnav::metrics::{compute_metrics, smooth_trajectory, MetricReport, SMOOTH_SIGMA, SMOOTH_TRUNCATE};
use socnav::scenario::{
    gen_hisc_cac_suite, gen_hrsc_suite, gen_multi_human, gen_single_human, Scenario, Suite,
};
use socnav::slm::{rasterize_field, ProbeHeading, Rect};

use manifest::ManifestBuilder;
use overrides::Overrides;

#[derive(Parser)]
#[command(name = "socnav", version, about = "Socially-aware navigation lab")]
struct Cli {
    /// Master seed; all randomness in one invocation flows from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory. Defaults to `$SOCNAV_OUT_ROOT/socnav-out/<subcommand>`
    /// (falling back to the working directory when the variable is unset).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON overrides file applied between built-in defaults and flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario suite file.
    Gen(GenArgs),
    /// Train one policy on one scenario.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a scenario and export trajectory + metrics.
    Rollout(RolloutArgs),
    /// Sigma sensitivity sweep over a suite.
    Sweep(SweepArgs),
    /// Social-component ablation studies.
    Ablate(AblateArgs),
    /// Rasterize the social field of a scenario to a CSV grid.
    FieldDump(FieldDumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteKind {
    /// Single human near the start-goal segment.
    Single,
    /// Three humans in a conversational formation.
    Multi,
    /// 42 on-line humans with oblique headings.
    Hrsc,
    /// 21 single-human scenarios on independent seed streams.
    HiscCac,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    suite: SuiteKind,
    /// Number of scenarios (single/multi suites only; hrsc and hisc-cac are
    /// fixed-size).
    #[arg(long)]
    count: Option<usize>,
    /// Output file; defaults to `<out-dir>/<suite>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Environment overrides; flags mirror the configuration fields.
#[derive(Args, Clone, Default)]
struct EnvFlags {
    #[arg(long)]
    arena: Option<f64>,
    #[arg(long)]
    step_length: Option<f64>,
    #[arg(long)]
    success_threshold: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    n_headings: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    terminal_c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Add the social term to the reward instead of subtracting it.
    #[arg(long)]
    social_term_positive: Option<bool>,
    #[arg(long)]
    slm_m_agent: Option<f64>,
    #[arg(long)]
    slm_n_agent: Option<f64>,
    #[arg(long)]
    slm_m_person: Option<f64>,
    #[arg(long)]
    slm_n_person: Option<f64>,
    #[arg(long)]
    slm_a: Option<f64>,
    #[arg(long)]
    slm_b: Option<f64>,
    #[arg(long)]
    slm_c: Option<f64>,
    #[arg(long)]
    slm_k_cap: Option<f64>,
    /// Disable the heading-relevant social component.
    #[arg(long)]
    disable_hrsc: bool,
    /// Disable the heading-irrelevant social component.
    #[arg(long)]
    disable_hisc: bool,
    /// Disable the collision-avoidance component.
    #[arg(long)]
    disable_cac: bool,
}

impl EnvFlags {
    fn apply(&self, cfg: &mut EnvConfig<f64>) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(arena, step_length, success_threshold, max_steps, n_headings, gamma, sigma, terminal_c, alpha);
        if let Some(v) = self.social_term_positive {
            cfg.social_term_positive = v;
        }
        if let Some(v) = self.slm_m_agent {
            cfg.slm.m_agent = v;
        }
        if let Some(v) = self.slm_n_agent {
            cfg.slm.n_agent = v;
        }
        if let Some(v) = self.slm_m_person {
            cfg.slm.m_person = v;
        }
        if let Some(v) = self.slm_n_person {
            cfg.slm.n_person = v;
        }
        if let Some(v) = self.slm_a {
            cfg.slm.a = v;
        }
        if let Some(v) = self.slm_b {
            cfg.slm.b = v;
        }
        if let Some(v) = self.slm_c {
            cfg.slm.c = v;
        }
        if let Some(v) = self.slm_k_cap {
            cfg.slm.k_cap = v;
        }
        if self.disable_hrsc {
            cfg.slm.enable_hrsc = false;
        }
        if self.disable_hisc {
            cfg.slm.enable_hisc = false;
        }
        if self.disable_cac {
            cfg.slm.enable_cac = false;
        }
    }
}

/// Trainer overrides; flags mirror the configuration fields.
#[derive(Args, Clone, Default)]
struct TrainFlags {
    #[arg(long)]
    total_env_steps: Option<usize>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    value_loss_coef: Option<f64>,
    #[arg(long)]
    entropy_coef: Option<f64>,
    #[arg(long)]
    grad_clip_norm: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    decay_rho: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    log_interval: Option<usize>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            total_env_steps,
            n_steps,
            value_loss_coef,
            entropy_coef,
            grad_clip_norm,
            learning_rate,
            decay_rho,
            epsilon,
            log_interval
        );
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Scenario suite file.
    #[arg(long)]
    scenarios: PathBuf,
    /// Scenario to train on; may be omitted when the file holds exactly one.
    #[arg(long)]
    scenario_id: Option<String>,
    #[command(flatten)]
    env: EnvFlags,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct RolloutArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    scenario_id: Option<String>,
    /// Additionally export a Gaussian-smoothed polyline.
    #[arg(long)]
    smooth: bool,
    #[command(flatten)]
    env: EnvFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenarios: PathBuf,
    /// Social-weight values to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIGMAS)]
    sigmas: Vec<f64>,
    /// Training seeds per cell; defaults to the global --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Worker threads for the cell queue (0 = one per core).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    #[command(flatten)]
    env: EnvFlags,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AblationKind {
    /// Front-pass counts with and without the heading-relevant component.
    Hrsc,
    /// Mean lateral deviation for full / no-HISC / no-CAC variants.
    HiscCac,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(value_enum)]
    kind: AblationKind,
    /// Optional pre-generated suite; generated from the seed when omitted.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    #[command(flatten)]
    env: EnvFlags,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct FieldDumpArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    scenario_id: Option<String>,
    /// Cell size in meters.
    #[arg(long, default_value_t = 0.15)]
    resolution: f64,
    /// Fixed probe heading in radians; the default probe faces the nearest
    /// person from every cell.
    #[arg(long)]
    probe_heading_fixed: Option<f64>,
    /// Output file; defaults to `<out-dir>/field.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    env: EnvFlags,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::TrainingDivergence { .. } => 3,
            Error::CheckpointFormat { .. } | Error::Dimension(_) => 4,
            Error::InvalidScenario { .. } | Error::ScenarioParse(_) | Error::InvalidBounds(_) => 2,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: 1, message: e.to_string() }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn resolve_out_dir(explicit: &Option<PathBuf>, subcommand: &str) -> PathBuf {
    match explicit {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var("SOCNAV_OUT_ROOT").map(PathBuf::from).unwrap_or_else(|_| PathBuf::from("."));
            root.join("socnav-out").join(subcommand)
        }
    }
}

fn resolve_configs(
    cli_config: &Option<PathBuf>,
    env_flags: &EnvFlags,
    train_flags: &TrainFlags,
    seed: u64,
) -> Result<(EnvConfig<f64>, TrainConfig), CliError> {
    let mut env_cfg = EnvConfig::<f64>::default();
    let mut train_cfg = TrainConfig { seed, ..TrainConfig::default() };
    if let Some(path) = cli_config {
        let overrides = Overrides::load(path).map_err(CliError::usage)?;
        overrides.apply_env(&mut env_cfg);
        overrides.apply_train(&mut train_cfg);
    }
    env_flags.apply(&mut env_cfg);
    train_flags.apply(&mut train_cfg);
    env_cfg.validate()?;
    train_cfg.validate()?;
    Ok((env_cfg, train_cfg))
}

fn load_scenario(path: &Path, id: &Option<String>) -> Result<(Suite, Scenario), CliError> {
    let suite = Suite::load(path)?;
    let scenario = match id {
        Some(id) => suite
            .by_id(id)
            .ok_or_else(|| CliError::usage(format!("scenario id `{id}` not found in {}", path.display())))?
            .clone(),
        None => {
            if suite.len() == 1 {
                suite.scenarios[0].clone()
            } else {
                return Err(CliError::usage(format!(
                    "--scenario-id required: {} holds {} scenarios",
                    path.display(),
                    suite.len()
                )));
            }
        }
    };
    Ok((suite, scenario))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError { code: 1, message: format!("creating {}: {e}", dir.display()) })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(&cli, args),
        Command::Train(args) => cmd_train(&cli, args),
        Command::Rollout(args) => cmd_rollout(&cli, args),
        Command::Sweep(args) => cmd_sweep(&cli, args),
        Command::Ablate(args) => cmd_ablate(&cli, args),
        Command::FieldDump(args) => cmd_field_dump(&cli, args),
    }
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> Result<(), CliError> {
    let out_dir = resolve_out_dir(&cli.out_dir, "gen");
    ensure_dir(&out_dir)?;
    let (name, scenarios) = match args.suite {
        SuiteKind::Single => ("single", gen_single_human(args.count.unwrap_or(25), cli.seed)),
        SuiteKind::Multi => ("multi", gen_multi_human(args.count.unwrap_or(24), cli.seed)),
        SuiteKind::Hrsc => {
            if args.count.is_some() {
                return Err(CliError::usage("the hrsc suite has a fixed size; drop --count"));
            }
            ("hrsc", gen_hrsc_suite(cli.seed))
        }
        SuiteKind::HiscCac => {
            if args.count.is_some() {
                return Err(CliError::usage("the hisc-cac suite has a fixed size; drop --count"));
            }
            ("hisc-cac", gen_hisc_cac_suite(cli.seed))
        }
    };
    let suite = Suite::new(name, scenarios);
    let out = args.out.clone().unwrap_or_else(|| out_dir.join(format!("{name}.json")));
    suite.save(&out)?;
    println!("wrote {} scenarios ({name}) to {}", suite.len(), out.display());

    let mut m = ManifestBuilder::new("gen", cli.seed, &out_dir, EnvConfig::default())
        .args(serde_json::json!({ "suite": name, "count": suite.len(), "out": out }));
    m.output(&out);
    m.write()?;
    Ok(())
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<(), CliError> {
    let out_dir = resolve_out_dir(&cli.out_dir, "train");
    ensure_dir(&out_dir)?;
    let (env_cfg, train_cfg) = resolve_configs(&cli.config, &args.env, &args.train, cli.seed)?;
    let (_, scenario) = load_scenario(&args.scenarios, &args.scenario_id)?;

    let mut m = ManifestBuilder::new("train", cli.seed, &out_dir, env_cfg.clone())
        .input(&args.scenarios)
        .scenario_id(&scenario.id)
        .train_config(&train_cfg)
        .args(serde_json::json!({}));

    let output = match a2c::train(&scenario, &env_cfg, &train_cfg) {
        Ok(out) => out,
        Err(Error::TrainingDivergence { detail }) => {
            let dump = out_dir.join("divergence_dump.txt");
            std::fs::write(&dump, &detail)?;
            eprintln!("training diverged; batch dump at {}", dump.display());
            return Err(Error::TrainingDivergence { detail }.into());
        }
        Err(e) => return Err(e.into()),
    };

    let ckpt = out_dir.join("checkpoint.txt");
    a2c::save_checkpoint(&output.actor, &output.critic, &env_cfg, &ckpt)?;
    let episodes = out_dir.join("episodes.csv");
    let updates = out_dir.join("updates.csv");
    output.log.save(&episodes, &updates)?;
    for p in [&ckpt, &episodes, &updates] {
        m.output(p);
    }
    m.write()?;

    let n = output.log.episodes.len();
    let successes = output.log.episodes.iter().filter(|e| e.status.is_success()).count();
    println!(
        "trained on `{}`: {} env steps, {} episodes ({} successful); checkpoint at {}",
        scenario.id,
        output.env_steps,
        n,
        successes,
        ckpt.display()
    );
    if let Some(last) = output.log.episodes.iter().rev().take(train_cfg.log_interval).last() {
        let window: Vec<_> = output.log.episodes.iter().rev().take(train_cfg.log_interval).collect();
        let mean_r = window.iter().map(|e| e.reward).sum::<f64>() / window.len() as f64;
        let mean_l = window.iter().map(|e| e.length as f64).sum::<f64>() / window.len() as f64;
        println!(
            "last {} episodes: mean reward {:.1}, mean length {:.1} (first of window: episode {})",
            window.len(),
            mean_r,
            mean_l,
            last.index
        );
    }
    Ok(())
}

fn write_polyline(path: &Path, positions: &[[f64; 2]]) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = String::from("x,y\n");
    for p in positions {
        out.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn write_metrics_csv(path: &Path, report: &MetricReport) -> Result<(), CliError> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "scenario_id,status,mld_raw,mld_smoothed,path_length,straight_length,detour_ratio,front_pass,field_integral"
    )?;
    writeln!(
        f,
        "{},{},{},{},{},{},{},{},{}",
        report.scenario_id,
        report.status,
        report.mld,
        report.mld_smoothed,
        report.path_length,
        report.straight_length,
        report.detour_ratio,
        report.front_pass.map(|b| b.to_string()).unwrap_or_default(),
        report.field_integral
    )?;
    Ok(())
}

fn cmd_rollout(cli: &Cli, args: &RolloutArgs) -> Result<(), CliError> {
    let out_dir = resolve_out_dir(&cli.out_dir, "rollout");
    ensure_dir(&out_dir)?;
    let (env_cfg, _) = resolve_configs(&cli.config, &args.env, &TrainFlags::default(), cli.seed)?;
    let (_, scenario) = load_scenario(&args.scenarios, &args.scenario_id)?;

    let (actor, _critic, stored_fp) = a2c::load_checkpoint::<f64>(&args.checkpoint)?;
    if stored_fp != env_cfg.fingerprint() {
        eprintln!(
            "warning: checkpoint was trained under a different environment configuration (fingerprint {} vs {})",
            stored_fp,
            env_cfg.fingerprint()
        );
    }
    let record = a2c::rollout_greedy(&actor, &scenario, &env_cfg)?;
    let report = compute_metrics(&record, &scenario, &env_cfg);

    let mut m = ManifestBuilder::new("rollout", cli.seed, &out_dir, env_cfg.clone())
        .input(&args.checkpoint)
        .input(&args.scenarios)
        .scenario_id(&scenario.id)
        .args(serde_json::json!({ "smooth": args.smooth }));

    let raw = out_dir.join("trajectory_raw.csv");
    write_polyline(&raw, &record.positions)?;
    m.output(&raw);
    if args.smooth {
        let smoothed = smooth_trajectory(&record.positions, SMOOTH_SIGMA, SMOOTH_TRUNCATE);
        let path = out_dir.join("trajectory_smoothed.csv");
        write_polyline(&path, &smoothed)?;
        m.output(&path);
    }
    let steps = out_dir.join("episode.csv");
    record.save_csv(&steps)?;
    m.output(&steps);
    let metrics_path = out_dir.join("metrics.csv");
    write_metrics_csv(&metrics_path, &report)?;
    m.output(&metrics_path);
    m.write()?;

    println!(
        "rollout on `{}`: {} after {} steps; MLD {:.3} m (smoothed {:.3}), path {:.2} m vs straight {:.2} m",
        scenario.id,
        record.status,
        record.n_steps(),
        report.mld,
        report.mld_smoothed,
        report.path_length,
        report.straight_length
    );
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    let out_dir = resolve_out_dir(&cli.out_dir, "sweep");
    ensure_dir(&out_dir)?;
    let (env_cfg, train_cfg) = resolve_configs(&cli.config, &args.env, &args.train, cli.seed)?;
    let suite = Suite::load(&args.scenarios)?;
    if suite.is_empty() {
        return Err(CliError::usage("the sweep needs a non-empty suite"));
    }
    let seeds = if args.seeds.is_empty() { vec![cli.seed] } else { args.seeds.clone() };

    let report =
        run_sigma_sweep(&suite.scenarios, &args.sigmas, &env_cfg, &train_cfg, &seeds, args.parallelism);

    let cells = out_dir.join("sweep_cells.csv");
    let summary = out_dir.join("sweep_summary.csv");
    report.save_cells_csv(&cells)?;
    report.save_summary_csv(&summary)?;
    print!("{}", report.format_table());

    let mut m = ManifestBuilder::new("sweep", cli.seed, &out_dir, env_cfg)
        .input(&args.scenarios)
        .train_config(&train_cfg)
        .args(serde_json::json!({
            "sigmas": args.sigmas,
            "seeds": seeds,
            "parallelism": args.parallelism,
            "suite": suite.name,
            "n_scenarios": suite.len(),
        }));
    m.output(&cells);
    m.output(&summary);
    m.write()?;

    let done = report.completed_fraction();
    if done < 0.9 {
        return Err(CliError {
            code: 5,
            message: format!("only {:.0}% of sweep cells completed", done * 100.0),
        });
    }
    Ok(())
}

fn cmd_ablate(cli: &Cli, args: &AblateArgs) -> Result<(), CliError> {
    let kind_name = match args.kind {
        AblationKind::Hrsc => "hrsc",
        AblationKind::HiscCac => "hisc-cac",
    };
    let out_dir = resolve_out_dir(&cli.out_dir, &format!("ablate-{kind_name}"));
    ensure_dir(&out_dir)?;
    let (env_cfg, train_cfg) = resolve_configs(&cli.config, &args.env, &args.train, cli.seed)?;

    let suite = match &args.scenarios {
        Some(path) => Suite::load(path)?,
        None => match args.kind {
            AblationKind::Hrsc => Suite::new("hrsc", gen_hrsc_suite(cli.seed)),
            AblationKind::HiscCac => Suite::new("hisc-cac", gen_hisc_cac_suite(cli.seed)),
        },
    };
    let suite_path = out_dir.join("suite.json");
    suite.save(&suite_path)?;

    let cells = out_dir.join("ablate_cells.csv");
    let summary = out_dir.join("ablate_summary.csv");
    let completed;
    match args.kind {
        AblationKind::Hrsc => {
            let report =
                run_hrsc_ablation_on(&suite.scenarios, cli.seed, &env_cfg, &train_cfg, args.parallelism);
            report.save_cells_csv(&cells)?;
            report.save_summary_csv(&summary)?;
            print!("{}", report.format_table());
            completed = report.completed_fraction();
        }
        AblationKind::HiscCac => {
            let report =
                run_hisc_cac_ablation_on(&suite.scenarios, cli.seed, &env_cfg, &train_cfg, args.parallelism);
            report.save_cells_csv(&cells)?;
            report.save_summary_csv(&summary)?;
            print!("{}", report.format_table());
            completed = report.completed_fraction();
        }
    }

    let mut m = ManifestBuilder::new(&format!("ablate-{kind_name}"), cli.seed, &out_dir, env_cfg)
        .train_config(&train_cfg)
        .args(serde_json::json!({
            "kind": kind_name,
            "suite": suite.name,
            "n_scenarios": suite.len(),
            "parallelism": args.parallelism,
            "scenarios_file": args.scenarios,
        }));
    m.output(&suite_path);
    m.output(&cells);
    m.output(&summary);
    m.write()?;

    if completed < 0.9 {
        return Err(CliError {
            code: 5,
            message: format!("only {:.0}% of ablation cells completed", completed * 100.0),
        });
    }
    Ok(())
}

fn cmd_field_dump(cli: &Cli, args: &FieldDumpArgs) -> Result<(), CliError> {
    let out_dir = resolve_out_dir(&cli.out_dir, "field-dump");
    ensure_dir(&out_dir)?;
    let (env_cfg, _) = resolve_configs(&cli.config, &args.env, &TrainFlags::default(), cli.seed)?;
    let (_, scenario) = load_scenario(&args.scenarios, &args.scenario_id)?;
    // one environment construction validates scenario/config consistency
    let env = NavEnv::new(&scenario, env_cfg.clone())?;

    let probe = match args.probe_heading_fixed {
        Some(h) => ProbeHeading::Fixed(h),
        None => ProbeHeading::TowardNearest,
    };
    let grid = rasterize_field(
        env.humans(),
        probe,
        Rect::centered_square(env_cfg.arena),
        args.resolution,
        &env_cfg.slm,
    )?;
    let out = args.out.clone().unwrap_or_else(|| out_dir.join("field.csv"));
    grid.save_csv(&out)?;
    println!(
        "wrote {}x{} field grid for `{}` to {} (max {:.4})",
        grid.ncols,
        grid.nrows,
        scenario.id,
        out.display(),
        grid.max_value()
    );

    let mut m = ManifestBuilder::new("field-dump", cli.seed, &out_dir, env_cfg)
        .input(&args.scenarios)
        .scenario_id(&scenario.id)
        .args(serde_json::json!({
            "resolution": args.resolution,
            "probe_heading_fixed": args.probe_heading_fixed,
        }));
    m.output(&out);
    m.write()?;
    Ok(())
}
