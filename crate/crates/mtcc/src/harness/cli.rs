//! Command-line entry points: train, eval, verify, gen-data, report.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::RunConfig;
use super::metrics::{build_metrics_report, convergence_episode, MetricsReport};
use super::profiles::{
    load_profiles, synthetic_profiles, velocity_vectors, write_profile_file, LeaderProfile,
};
use super::rng::substream;
use crate::ddpg::{
    evaluate, load_checkpoint, save_checkpoint, train, EvalPoint, TrainConfig, Variant,
};
use crate::env::LogRow;
use crate::{Error, Result};

#[derive(Parser)]
#[command(name = "mtcc", about = "Communication-aware platoon control trainer and verifier")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one variant and write curves plus checkpoints.
    Train(TrainArgs),
    /// Evaluate a checkpoint over test episodes and write a metrics report.
    Eval(EvalArgs),
    /// Run the tabular theory checks and report PASS/FAIL.
    Verify(VerifyArgs),
    /// Generate synthetic leader profiles.
    GenData(GenDataArgs),
    /// Summarize one or more finished runs.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Variant override: mtcc-pc, rd-pc, or pc-wo-as.
    #[arg(long)]
    variant: Option<String>,
    /// Root seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonConfig {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.variant {
            cfg.variant.0 = v.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed.0 = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Training episode count override.
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory for curves, checkpoints, and the resolved config.
    #[arg(long, default_value = "runs/train")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Checkpoint file produced by train.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Test episode count override.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, default_value = "runs/eval")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Where to write the JSON report.
    #[arg(long, default_value = "runs/verify.json")]
    out: PathBuf,
}

#[derive(Args)]
struct GenDataArgs {
    /// Number of events to generate.
    #[arg(long, default_value_t = 900)]
    n: usize,
    /// Samples per event.
    #[arg(long, default_value_t = 120)]
    len: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "data/profiles")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories produced by train/eval; repeatable.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Combined summary output file.
    #[arg(long, default_value = "runs/summary.json")]
    out: PathBuf,
}

/// Parses argv and runs the selected command, returning a process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap renders its own usage text; --help exits zero.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Verify(args) => cmd_verify(args),
        Command::GenData(args) => cmd_gen_data(args),
        Command::Report(args) => cmd_report(args),
    }
}

/// Loads profiles per config: from disk when a directory is set, synthetic
/// otherwise.
fn resolve_profiles(cfg: &RunConfig) -> Result<(Vec<LeaderProfile>, Vec<LeaderProfile>)> {
    match &cfg.data.profile_dir {
        Some(dir) => load_profiles(
            Path::new(dir),
            cfg.data.split_ratio,
            cfg.data.split_seed,
            &cfg.env.platoon,
        ),
        None => {
            let mut rng = substream(cfg.data.split_seed, "profile.synthetic", 0);
            let all = synthetic_profiles(
                cfg.data.synthetic_events,
                cfg.data.synthetic_len,
                &cfg.env.platoon,
                &mut rng,
            );
            super::profiles::split_profiles(all, cfg.data.split_ratio, cfg.data.split_seed)
        }
    }
}

fn write_curve_csv(path: &Path, curve: &[EvalPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "follower", "test_return"])?;
    for point in curve {
        for (i, r) in point.per_follower.iter().enumerate() {
            w.write_record([point.episode.to_string(), (i + 1).to_string(), r.to_string()])?;
        }
        w.write_record([point.episode.to_string(), "sum".to_string(), point.sum_return.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_episode_log_csv(path: &Path, log: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "i", "e_p", "e_v", "acc", "a_cl", "tau", "reward"])?;
    for r in log {
        w.write_record([
            r.k.to_string(),
            r.i.to_string(),
            r.e_p.to_string(),
            r.e_v.to_string(),
            r.acc.to_string(),
            r.a_cl.to_string(),
            r.tau.to_string(),
            r.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let mut cfg = args.common.load()?;
    if let Some(e) = args.episodes {
        cfg.train_episodes.0 = e;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&args.out)?;
    cfg.write_resolved(&args.out)?;

    let variant = Variant::parse(&cfg.variant.0)?;
    let (train_set, test_set) = resolve_profiles(&cfg)?;
    println!(
        "training {variant} for {} episodes on {} train / {} test profiles (seed {})",
        cfg.train_episodes.0,
        train_set.len(),
        test_set.len(),
        cfg.seed.0
    );
    let train_cfg = TrainConfig {
        variant,
        episodes: cfg.train_episodes.0,
        seed: cfg.seed.0,
        env: cfg.env.clone(),
        hyper: cfg.hyper,
        eval_every: cfg.eval.every,
        eval_episodes: cfg.eval.episodes,
        eval_gamma: cfg.eval.gamma,
    };
    let result = train(
        &train_cfg,
        &velocity_vectors(&train_set),
        &velocity_vectors(&test_set),
        |point| {
            println!(
                "episode {:>5}: mean sum test return {:+.4}",
                point.episode, point.sum_return
            );
        },
    )?;
    write_curve_csv(&args.out.join("curve.csv"), &result.curve)?;
    save_checkpoint(&args.out.join("checkpoint_final.txt"), variant, &cfg.hyper, &result.agents)?;
    serde_json::to_writer_pretty(
        std::fs::File::create(args.out.join("curve.json"))?,
        &result.curve,
    )
    .map_err(|e| Error::Data(e.to_string()))?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let mut cfg = args.common.load()?;
    if let Some(e) = args.episodes {
        cfg.test_episodes.0 = e;
    }
    std::fs::create_dir_all(&args.out)?;
    cfg.write_resolved(&args.out)?;
    let checkpoint = load_checkpoint(&args.checkpoint, &cfg.hyper)?;
    let mut agents = checkpoint.agents;
    let (_, test_set) = resolve_profiles(&cfg)?;
    let report = evaluate(
        &mut agents,
        checkpoint.variant,
        &cfg.env,
        &velocity_vectors(&test_set),
        cfg.test_episodes.0,
        cfg.seed.0,
        500_000,
        cfg.eval.gamma,
        true,
    )?;
    let logs_dir = args.out.join("logs");
    std::fs::create_dir_all(&logs_dir)?;
    for (idx, log) in report.logs.iter().enumerate() {
        write_episode_log_csv(&logs_dir.join(format!("episode_{idx:03}.csv")), log)?;
    }
    let metrics = build_metrics_report(
        checkpoint.variant.as_str(),
        report.per_follower.clone(),
        &report.logs,
        cfg.env.platoon.n - 1,
        report.delay_hist.clone(),
        None,
    );
    metrics.validate()?;
    serde_json::to_writer_pretty(
        std::fs::File::create(args.out.join("metrics.json"))?,
        &metrics,
    )
    .map_err(|e| Error::Data(e.to_string()))?;
    print_metrics(&metrics);
    Ok(0)
}

fn print_metrics(m: &MetricsReport) {
    println!("variant {} over {} test episodes", m.variant, m.test_episodes);
    for (i, r) in m.per_follower_return.iter().enumerate() {
        println!("  follower {}: {r:+.4}", i + 1);
    }
    println!("  sum: {:+.4}", m.sum_return);
    println!("  string-stable episodes: {:.1}%", 100.0 * m.string_stable_rate);
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let report = crate::verify::run_all(crate::verify::VerifyOptions::default())?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    serde_json::to_writer_pretty(std::fs::File::create(&args.out)?, &report)
        .map_err(|e| Error::Data(e.to_string()))?;
    println!("{}", report.render_text());
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_gen_data(args: GenDataArgs) -> Result<i32> {
    std::fs::create_dir_all(&args.out)?;
    let params = crate::dynamics::PlatoonParams::default();
    let mut rng = substream(args.seed.unwrap_or(9), "profile.synthetic", 0);
    let profiles = synthetic_profiles(args.n, args.len, &params, &mut rng);
    for p in &profiles {
        write_profile_file(&args.out, p)?;
    }
    println!("wrote {} profiles to {}", profiles.len(), args.out.display());
    Ok(0)
}

#[derive(serde::Serialize)]
struct RunSummary {
    run: String,
    metrics: Option<MetricsReport>,
    convergence_episode: Option<usize>,
    final_sum_return: Option<f64>,
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let mut summaries = Vec::new();
    for run in &args.runs {
        let metrics: Option<MetricsReport> = match std::fs::read_to_string(run.join("metrics.json"))
        {
            Ok(text) => Some(
                serde_json::from_str::<serde_json::Value>(&text)
                    .ok()
                    .and_then(|v| serde_json::from_value(v).ok())
                    .ok_or_else(|| Error::Data(format!("bad metrics.json in {}", run.display())))?,
            ),
            Err(_) => None,
        };
        let curve: Option<Vec<EvalPoint>> = std::fs::read_to_string(run.join("curve.json"))
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok());
        let convergence = curve.as_deref().and_then(|c| convergence_episode(c, 5, 0.10));
        let final_sum = curve.as_deref().and_then(|c| c.last().map(|p| p.sum_return));
        summaries.push(RunSummary {
            run: run.display().to_string(),
            metrics,
            convergence_episode: convergence,
            final_sum_return: final_sum,
        });
    }
    for s in &summaries {
        println!(
            "{}: final sum return {:?}, converged at {:?}",
            s.run, s.final_sum_return, s.convergence_episode
        );
        if let Some(m) = &s.metrics {
            print_metrics(m);
        }
    }
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    serde_json::to_writer_pretty(std::fs::File::create(&args.out)?, &summaries)
        .map_err(|e| Error::Data(e.to_string()))?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

// MetricsReport must deserialize for `report`; derive support lives here to
// keep the metrics module output-only.
impl<'de> serde::Deserialize<'de> for MetricsReport {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(serde::Deserialize)]
        struct Raw {
            variant: String,
            test_episodes: usize,
            per_follower_return: Vec<f64>,
            sum_return: f64,
            string_stable_rate: f64,
            #[serde(default)]
            mean_ratios: Vec<RawRatios>,
            delay_histogram: Vec<usize>,
        }
        #[derive(serde::Deserialize)]
        struct RawRatios {
            follower: usize,
            e_p: f64,
            e_v: f64,
            acc: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(MetricsReport {
            variant: raw.variant,
            test_episodes: raw.test_episodes,
            per_follower_return: raw.per_follower_return,
            sum_return: raw.sum_return,
            string_stable_rate: raw.string_stable_rate,
            mean_ratios: raw
                .mean_ratios
                .into_iter()
                .map(|r| super::metrics::SignalRatios {
                    follower: r.follower,
                    e_p: r.e_p,
                    e_v: r.e_v,
                    acc: r.acc,
                })
                .collect(),
            delay_histogram: raw.delay_histogram,
            convergence_curve: None,
        })
    }
}
