//! `abrlab` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error,
//! 3 verification failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use abrlab_core::baselines::AbrController;
use abrlab_core::env::{LinkConfig, PlayerConfig};
use abrlab_core::eval::{
    baseline_by_name, check_policy_dims, evaluate_traces, mean_report, EpisodeReport, EvalError,
    PolicyController,
};
use abrlab_core::nn::{Checkpoint, CheckpointMeta, Mlp, PolicyValueNet};
use abrlab_core::qoe::QoeVariant;
use abrlab_core::rl::{curve_csv, train_with, Algorithm, RlError, TrainOutcome, TrainSetup};
use abrlab_core::traces::{format_trace, load_trace_dir, synth_trace, ThroughputTrace, TraceKind};
use abrlab_core::verify::{self, CheckResult};
use abrlab_core::video::{
    default_manifest, load_manifest, synth_manifest, VideoManifest, DEFAULT_BITRATES_KBPS,
    DEFAULT_CHUNK_COUNT, DEFAULT_CHUNK_DURATION_S,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{config_hash, load_run_config, RunConfig};
use crate::output::{aligned, eval_csv, write_atomic};

pub const SEED_ENV: &str = "ABRLAB_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::VerifyFailed(_) => 3,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UnknownAlgo(_) | EvalError::Incompatible { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "abrlab",
    version,
    about = "Trace-driven adaptive-bitrate streaming lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic throughput traces.
    GenTraces(GenTracesArgs),
    /// Generate a video manifest (bitrate ladder and chunk sizes).
    GenManifest(GenManifestArgs),
    /// Train a PPO or A3C agent.
    Train(TrainArgs),
    /// Evaluate one controller over a trace directory.
    Eval(EvalArgs),
    /// Mean QoE of several controllers under one or more QoE variants.
    Compare(CompareArgs),
    /// Run the oracle suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Constant,
    Step,
    Markov,
}

#[derive(Debug, Args)]
pub struct GenTracesArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Rates in Mbps: one for constant, low,high for step, the states for markov.
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<f64>,
    /// Dwell time per level of a step trace.
    #[arg(long, default_value_t = 10.0)]
    pub period_s: f64,
    #[arg(long, default_value_t = 0.9)]
    pub p_stay: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 400.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt_s: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// File name prefix; defaults to the kind.
    #[arg(long)]
    pub prefix: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenManifestArgs {
    #[arg(long, value_delimiter = ',')]
    pub bitrates: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_CHUNK_COUNT)]
    pub chunks: usize,
    #[arg(long, default_value_t = DEFAULT_CHUNK_DURATION_S)]
    pub chunk_duration_s: f64,
    /// Relative size jitter in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "ppo")]
    pub algo: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress per-update progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EnvArgs {
    #[arg(long)]
    pub traces: PathBuf,
    /// Defaults to the built-in 48-chunk manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = LinkConfig::default().capacity_mbps)]
    pub capacity_mbps: f64,
    #[arg(long, default_value_t = LinkConfig::default().rtt_s)]
    pub rtt_s: f64,
    #[arg(long, default_value_t = PlayerConfig::default().buffer_cap_s)]
    pub buffer_cap_s: f64,
    /// Defaults to 8, or to the value implied by a checkpoint's input width.
    #[arg(long)]
    pub history_len: Option<usize>,
    /// Zero the link capacity/rtt observation channels.
    #[arg(long)]
    pub hide_link: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub algo: String,
    /// Actor checkpoint file, or a directory holding `actor.json` or `best/actor.json`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "lin")]
    pub qoe: String,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub algos: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "lin")]
    pub qoe: Vec<String>,
    /// `PATH` for every learned controller, or `algo=PATH`; repeatable.
    #[arg(long)]
    pub checkpoint: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gradcheck,
    Envoracle,
    Mpcoracle,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenTraces(a) => cmd_gen_traces(a),
        Command::GenManifest(a) => cmd_gen_manifest(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Flag, then `ABRLAB_SEED`, then `fallback`.
pub fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(fallback),
    }
}

fn cmd_gen_traces(a: GenTracesArgs) -> Result<(), CliError> {
    let seed = resolve_seed(a.seed, DEFAULT_SEED)?;
    let need = |n: usize, what: &str| {
        if a.levels.len() == n {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "--levels needs {what}, got {} values",
                a.levels.len()
            )))
        }
    };
    let kind = match a.kind {
        KindArg::Constant => {
            need(1, "one rate")?;
            TraceKind::Constant {
                level_mbps: a.levels[0],
            }
        }
        KindArg::Step => {
            need(2, "low,high")?;
            TraceKind::Step {
                low_mbps: a.levels[0],
                high_mbps: a.levels[1],
                period_s: a.period_s,
            }
        }
        KindArg::Markov => TraceKind::Markov {
            states_mbps: a.levels.clone(),
            p_stay: a.p_stay,
        },
    };
    let prefix = a.prefix.clone().unwrap_or_else(|| {
        a.kind
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    });
    // one sub-seed per trace, so trace i does not depend on `count`
    for i in 0..a.count {
        let id = format!("{prefix}_{i:03}");
        let trace = synth_trace(
            &id,
            &kind,
            a.duration_s,
            a.dt_s,
            seed.wrapping_add(i as u64),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        write_atomic(
            &a.out.join(format!("{id}.txt")),
            format_trace(&trace).as_bytes(),
        )?;
    }
    println!("wrote {} {prefix} trace(s) to {}", a.count, a.out.display());
    Ok(())
}

fn cmd_gen_manifest(a: GenManifestArgs) -> Result<(), CliError> {
    let seed = resolve_seed(a.seed, DEFAULT_SEED)?;
    let ladder = a
        .bitrates
        .clone()
        .unwrap_or_else(|| DEFAULT_BITRATES_KBPS.to_vec());
    let manifest = synth_manifest(&ladder, a.chunks, a.chunk_duration_s, a.jitter, seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(&a.out, manifest.to_json().as_bytes())?;
    println!(
        "wrote manifest with {} levels x {} chunks to {}",
        manifest.level_count(),
        manifest.chunk_count(),
        a.out.display()
    );
    Ok(())
}

fn load_traces(dir: &Path) -> Result<Vec<Arc<ThroughputTrace>>, CliError> {
    let traces = load_trace_dir(dir)
        .map_err(|e| CliError::Config(format!("trace set {}: {e}", dir.display())))?;
    Ok(traces.into_iter().map(Arc::new).collect())
}

fn load_video(path: Option<&Path>) -> Result<Arc<VideoManifest>, CliError> {
    match path {
        Some(p) => load_manifest(p)
            .map(Arc::new)
            .map_err(|e| CliError::Config(e.to_string())),
        None => Ok(Arc::new(default_manifest())),
    }
}

fn qoe_variant(name: &str, video: &VideoManifest) -> Result<QoeVariant, CliError> {
    QoeVariant::from_name(name, video.bitrates_kbps()).map_err(|e| CliError::Config(e.to_string()))
}

fn write_checkpoint(
    dir: &Path,
    net: &PolicyValueNet,
    meta: &CheckpointMeta,
) -> Result<(), CliError> {
    for (name, mlp) in [("actor.json", &net.actor), ("critic.json", &net.critic)] {
        let json = serde_json::to_string_pretty(&mlp.to_checkpoint(meta.clone()))
            .expect("checkpoint serializes");
        write_atomic(&dir.join(name), json.as_bytes())?;
    }
    Ok(())
}

fn write_outcome(
    out: &Path,
    outcome: &TrainOutcome,
    seed: u64,
    hash: &str,
) -> Result<(), CliError> {
    let meta = |epoch: usize| CheckpointMeta {
        epoch: epoch as u64,
        seed,
        config_hash: hash.to_string(),
    };
    let best_epoch = if outcome.curve.is_empty() {
        0
    } else {
        outcome.best_update + 1
    };
    write_checkpoint(&out.join("best"), &outcome.best, &meta(best_epoch))?;
    write_checkpoint(&out.join("last"), &outcome.last, &meta(outcome.curve.len()))?;
    write_atomic(&out.join("curve.csv"), curve_csv(&outcome.curve).as_bytes())
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let algo: Algorithm = a
        .algo
        .parse()
        .map_err(|e: RlError| CliError::Usage(e.to_string()))?;
    let loaded = load_run_config(&a.config)?;
    let mut config: RunConfig = loaded.config;
    config.ppo.seed = match a.seed {
        Some(s) => s,
        None if loaded.seed_in_file => config.ppo.seed,
        None => resolve_seed(None, DEFAULT_SEED)?,
    };
    let out = a
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set out_dir".into()))?;
    config
        .ppo
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let traces = load_traces(&config.trace_dir)?;
    let video = load_video(config.manifest.as_deref())?;
    let qoe = qoe_variant(&config.qoe, &video)?;
    let setup = TrainSetup {
        traces,
        video: video.clone(),
        link: config.link,
        player: config.player.to_player(),
        qoe,
    };
    let ids: Vec<String> = setup.traces.iter().map(|t| t.id().to_string()).collect();
    let hash = config_hash(algo.name(), &config, &video.to_json(), &ids);

    let total = config.ppo.total_epochs;
    let every = (total / 20).max(1);
    let quiet = a.quiet;
    let result = train_with(algo, &config.ppo, &setup, |s| {
        if !quiet && (s.update % every == 0 || s.update + 1 == total) {
            eprintln!(
                "update {:>6}/{total}  mean QoE {:>9.3}  entropy {:.3}  KL {:.5}  eta {:.3}  {:.1}s",
                s.update + 1,
                s.mean_qoe,
                s.entropy,
                s.kl,
                s.entropy_weight,
                s.seconds
            );
        }
    });
    match result {
        Ok(outcome) => {
            write_outcome(&out, &outcome, config.ppo.seed, &hash)?;
            let resolved = serde_json::to_string_pretty(&config).expect("config serializes");
            write_atomic(&out.join("run_config.json"), resolved.as_bytes())?;
            let last = outcome.curve.last();
            println!(
                "{}: {} updates, best rolling mean QoE {:.3} at update {}, final mean QoE {:.3}, KL > {} on {} updates, {:.1}s, wrote {}",
                algo.name(),
                outcome.curve.len(),
                outcome.best_rolling_qoe,
                outcome.best_update,
                last.map_or(f64::NAN, |s| s.mean_qoe),
                config.ppo.kl_limit,
                outcome.kl_violations,
                last.map_or(0.0, |s| s.seconds),
                out.display()
            );
            Ok(())
        }
        Err(RlError::Diverged {
            update,
            source,
            last_good,
        }) => {
            write_outcome(&out, &last_good, config.ppo.seed, &hash)?;
            Err(CliError::Runtime(format!(
                "training diverged at update {update}: {source}; last good checkpoints written to {}",
                out.display()
            )))
        }
        Err(RlError::Config(msg)) => Err(CliError::Config(msg)),
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn is_learned(algo: &str) -> bool {
    matches!(algo, "ppo" | "a3c")
}

/// Accept an actor file, a directory with `actor.json`, or a training output
/// directory with `best/actor.json`.
fn actor_path(path: &Path) -> Result<PathBuf, CliError> {
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    for candidate in [
        path.join("actor.json"),
        path.join("best").join("actor.json"),
    ] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(CliError::Config(format!(
        "no actor checkpoint at {}",
        path.display()
    )))
}

fn load_actor(path: &Path) -> Result<Mlp, CliError> {
    let file = actor_path(path)?;
    let text = std::fs::read_to_string(&file)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
    Mlp::from_checkpoint(&ck).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))
}

struct EvalContext {
    traces: Vec<Arc<ThroughputTrace>>,
    video: Arc<VideoManifest>,
    link: LinkConfig,
}

impl EvalContext {
    fn load(env: &EnvArgs) -> Result<Self, CliError> {
        Ok(Self {
            traces: load_traces(&env.traces)?,
            video: load_video(env.manifest.as_deref())?,
            link: LinkConfig {
                capacity_mbps: env.capacity_mbps,
                rtt_s: env.rtt_s,
            },
        })
    }

    fn player(&self, env: &EnvArgs, actor: Option<&Mlp>) -> Result<PlayerConfig, CliError> {
        let levels = self.video.level_count();
        let history_len = match (env.history_len, actor) {
            (Some(k), _) => k,
            (None, Some(net)) => {
                // invert feature_dim = 2k + L + 5
                let rest = net
                    .input_dim()
                    .checked_sub(levels + 5)
                    .filter(|r| r % 2 == 0);
                rest.map(|r| r / 2).ok_or_else(|| {
                    CliError::Config(format!(
                        "checkpoint input width {} does not fit a {levels}-level manifest",
                        net.input_dim()
                    ))
                })?
            }
            (None, None) => PlayerConfig::default().history_len,
        };
        Ok(PlayerConfig {
            buffer_cap_s: env.buffer_cap_s,
            history_len,
            observe_link: !env.hide_link,
            ..PlayerConfig::default()
        })
    }

    fn evaluate(
        &self,
        algo: &str,
        actor: Option<&Mlp>,
        player: PlayerConfig,
        qoe: &QoeVariant,
    ) -> Result<Vec<EpisodeReport>, CliError> {
        let reports = match actor {
            Some(net) => {
                check_policy_dims(net, &player, &self.video)?;
                evaluate_traces(
                    || {
                        Ok(Box::new(PolicyController::new(algo, net.clone()))
                            as Box<dyn AbrController>)
                    },
                    &self.traces,
                    &self.video,
                    self.link,
                    player,
                    qoe,
                )?
            }
            None => {
                baseline_by_name(algo, qoe, &player)?;
                evaluate_traces(
                    || baseline_by_name(algo, qoe, &player),
                    &self.traces,
                    &self.video,
                    self.link,
                    player,
                    qoe,
                )?
            }
        };
        Ok(reports)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let actor = if is_learned(&a.algo) {
        let path = a
            .checkpoint
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("--algo {} needs --checkpoint", a.algo)))?;
        Some(load_actor(path)?)
    } else {
        None
    };
    let ctx = EvalContext::load(&a.env)?;
    let qoe = qoe_variant(&a.qoe, &ctx.video)?;
    let player = ctx.player(&a.env, actor.as_ref())?;
    let reports = ctx.evaluate(&a.algo, actor.as_ref(), player, &qoe)?;
    let csv = eval_csv(&a.algo, &reports);
    emit(a.out.as_deref(), &csv)?;
    if let Some(p) = &a.out {
        let (q, bitrate, rebuf) = mean_report(&reports);
        println!(
            "{} on {} traces ({}): mean QoE {:.3}, mean bitrate {:.1} kbps, mean rebuffer {:.3}s, wrote {}",
            a.algo,
            reports.len(),
            qoe.name(),
            q.total,
            bitrate,
            rebuf,
            p.display()
        );
    }
    Ok(())
}

fn checkpoint_for(specs: &[String], algo: &str) -> Option<PathBuf> {
    let mut fallback = None;
    for s in specs {
        match s.split_once('=') {
            Some((name, path)) if name == algo => return Some(PathBuf::from(path)),
            Some(_) => {}
            None => fallback = Some(PathBuf::from(s)),
        }
    }
    fallback
}

fn cmd_compare(a: CompareArgs) -> Result<(), CliError> {
    let ctx = EvalContext::load(&a.env)?;
    let variants = a
        .qoe
        .iter()
        .map(|n| qoe_variant(n, &ctx.video))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(a.algos.len());
    for algo in &a.algos {
        let actor = if is_learned(algo) {
            let path = checkpoint_for(&a.checkpoint, algo)
                .ok_or_else(|| CliError::Usage(format!("{algo} needs --checkpoint")))?;
            Some(load_actor(&path)?)
        } else {
            None
        };
        let player = ctx.player(&a.env, actor.as_ref())?;
        let means = variants
            .iter()
            .map(|q| {
                Ok(mean_report(&ctx.evaluate(algo, actor.as_ref(), player, q)?)
                    .0
                    .total)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        rows.push((algo.clone(), means));
    }
    // descending by the first variant, stable for ties
    rows.sort_by(|x, y| y.1[0].total_cmp(&x.1[0]));

    let header: Vec<String> = std::iter::once("algo".to_string())
        .chain(variants.iter().map(|v| format!("mean_qoe_{}", v.name())))
        .collect();
    let mut csv = header.join(",") + "\n";
    let mut display = csv.clone();
    for (algo, means) in &rows {
        csv.push_str(&format!("{algo},{}\n", join(means, |m| m.to_string())));
        display.push_str(&format!("{algo},{}\n", join(means, |m| format!("{m:.3}"))));
    }
    if let Some(p) = &a.out {
        write_atomic(p, csv.as_bytes())?;
    }
    print!("{}", aligned(&display));
    Ok(())
}

fn join(xs: &[f64], f: impl Fn(f64) -> String) -> String {
    xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",")
}

/// Oracle checks run by `verify`, at acceptance sizes.
pub fn verify_checks(suite: Suite, seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Envoracle | Suite::All) {
        out.push(verify::check_env_oracle(50, seed));
    }
    if matches!(suite, Suite::Mpcoracle | Suite::All) {
        out.push(verify::check_mpc_oracle(100, 2..=3, 1..=4, seed));
        out.push(verify::check_mpc_oracle(
            50,
            3..=3,
            3..=3,
            seed.wrapping_add(1),
        ));
    }
    if matches!(suite, Suite::Gradcheck | Suite::All) {
        out.extend(verify::gradcheck_suite(100, seed));
    }
    out
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let seed = resolve_seed(a.seed, DEFAULT_SEED)?;
    let results = verify_checks(a.suite, seed);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        Err(CliError::VerifyFailed(format!(
            "{failed} of {} checks failed",
            results.len()
        )))
    } else {
        println!("all {} checks passed", results.len());
        Ok(())
    }
}
