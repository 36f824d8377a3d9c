//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without the libtest harness so the report always prints.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use abrlab_core::baselines::AbrController;
use abrlab_core::env::{LinkConfig, PlayerConfig};
use abrlab_core::eval::{
    baseline_by_name, evaluate_traces, mean_report, run_episode, PolicyController,
};
use abrlab_core::nn::Mlp;
use abrlab_core::qoe::{episode_qoe, QoeVariant};
use abrlab_core::rl::{
    clipped_objective, kl_estimate, train_with, Algorithm, PpoConfig, TrainSetup,
};
use abrlab_core::traces::{synth_trace, ThroughputTrace, TraceKind};
use abrlab_core::verify;
use abrlab_core::video::{default_manifest, VideoManifest, DEFAULT_BITRATES_KBPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Update budget of the constant-trace smoke test.
const SMOKE_UPDATES: usize = 1200;
const SMOKE_THRESHOLD: f64 = 0.9 * 48.0 * 2.85;
/// Update budget and trace suites of the ordering test.
const ORDER_UPDATES: usize = 1600;
const ORDER_TRAIN_TRACES: u64 = 40;
const ORDER_TEST_TRACES: u64 = 30;
const MARKOV_STATES_MBPS: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 4.5];
const MARKOV_P_STAY: f64 = 0.9;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.1}s of {limit_s:.0}s"))
}

fn env_oracle() -> Verdict {
    let t = Instant::now();
    let r = verify::check_env_oracle(50, 2024);
    let (fast, time) = within(t.elapsed(), 10.0);
    verdict(r.passed && fast, format!("{r}; {time}"))
}

fn qoe_exactness() -> Verdict {
    let lin = QoeVariant::lin();
    let a = episode_qoe(&lin, &[750.0, 1850.0, 750.0], &[0.0, 0.5, 0.0])
        .unwrap()
        .total;
    let b = episode_qoe(&QoeVariant::log(300.0), &[300.0], &[2.0])
        .unwrap()
        .total;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let q = if i % 2 == 0 {
            lin
        } else {
            QoeVariant::log(DEFAULT_BITRATES_KBPS[0])
        };
        let n = rng.gen_range(1..=48);
        let bitrates: Vec<f64> = (0..n)
            .map(|_| DEFAULT_BITRATES_KBPS[rng.gen_range(0..6)])
            .collect();
        let rebufs: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    0.0
                } else {
                    rng.gen_range(0.0..8.0)
                }
            })
            .collect();
        let e = episode_qoe(&q, &bitrates, &rebufs).unwrap();
        worst = worst.max((e.total - (e.bitrate_sum - e.rebuf_penalty - e.smooth_penalty)).abs());
    }
    verdict(
        a == -1.0 && b == -5.32 && worst <= 1e-12,
        format!("lin example {a}, log example {b}, decomposition max error {worst:.2e} over 1000 episodes"),
    )
}

fn gradcheck() -> Verdict {
    let t = Instant::now();
    let results = [
        verify::check_logpolicy_grad(100, 11),
        verify::check_value_grad(100, 12),
        verify::check_ppo_loss_grad(100, 13),
    ];
    let (fast, time) = within(t.elapsed(), 60.0);
    let detail = results
        .iter()
        .map(|r| format!("{} {:.2e}", r.name, r.max_error))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        results.iter().all(|r| r.passed) && fast,
        format!("{detail}; tolerance 1e-4; {time}"),
    )
}

fn clip_semantics() -> Verdict {
    let pos = clipped_objective(2.0, 1.0, 0.2);
    let neg = clipped_objective(0.5, -1.0, 0.2);
    let zero = verify::check_clip_saturation();
    verdict(
        (pos - 1.2).abs() < 1e-12 && (neg + 0.8).abs() < 1e-12 && zero.passed,
        format!("(A=+1, r=2) -> {pos}, (A=-1, r=0.5) -> {neg}; {zero}"),
    )
}

fn mpc_oracle() -> Verdict {
    let t = Instant::now();
    let r = verify::check_mpc_oracle(100, 2..=3, 1..=4, 5);
    let (fast, time) = within(t.elapsed(), 30.0);
    verdict(r.passed && fast, format!("{r}; {time}"))
}

fn constant_trace(mbps: f64) -> Arc<ThroughputTrace> {
    Arc::new(
        synth_trace(
            format!("const{mbps}"),
            &TraceKind::Constant { level_mbps: mbps },
            400.0,
            1.0,
            0,
        )
        .unwrap(),
    )
}

/// Criteria 6 and 9 share one training run.
fn learning_smoke() -> (Verdict, Verdict) {
    let t = Instant::now();
    let trace = constant_trace(3.0);
    let video = Arc::new(default_manifest());
    let setup = TrainSetup {
        traces: vec![trace.clone()],
        video: video.clone(),
        link: LinkConfig::default(),
        player: PlayerConfig::default(),
        qoe: QoeVariant::lin(),
    };
    let config = PpoConfig {
        total_epochs: SMOKE_UPDATES,
        ..PpoConfig::default()
    };
    let mut worst_gap = 0.0f64;
    let mut checked = 0;
    let outcome = train_with(Algorithm::Ppo, &config, &setup, |s| {
        worst_gap = worst_gap.max(s.sync_gap.unwrap_or(f64::INFINITY));
        checked += 1;
    });
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let v = verdict(false, format!("training failed: {e}"));
            return (v, verdict(false, "no training run"));
        }
    };
    let mut greedy = PolicyController::new("ppo", outcome.best.actor.clone());
    let report = run_episode(
        &mut greedy,
        trace,
        video,
        setup.link,
        setup.player,
        &setup.qoe,
    )
    .unwrap();
    let (fast, time) = within(t.elapsed(), 600.0);
    let stall = report.playback_rebuffer_s();
    let smoke = verdict(
        report.qoe.total >= SMOKE_THRESHOLD && stall == 0.0 && fast,
        format!(
            "greedy QoE_lin {:.3} (threshold {SMOKE_THRESHOLD:.1}), stall after startup {stall}s, startup {:.3}s, best update {} of {SMOKE_UPDATES}; {time}",
            report.qoe.total,
            report.rebuffers_s[0],
            outcome.best_update
        ),
    );
    let sync = verdict(
        checked == SMOKE_UPDATES && worst_gap <= 1e-9,
        format!("max |clipped surrogate - mean advantage| at first minibatch {worst_gap:.2e} over {checked} updates"),
    );
    (smoke, sync)
}

fn markov_set(prefix: &str, first_seed: u64, n: u64) -> Vec<Arc<ThroughputTrace>> {
    let kind = TraceKind::Markov {
        states_mbps: MARKOV_STATES_MBPS.to_vec(),
        p_stay: MARKOV_P_STAY,
    };
    (0..n)
        .map(|i| {
            Arc::new(
                synth_trace(format!("{prefix}{i:02}"), &kind, 400.0, 1.0, first_seed + i).unwrap(),
            )
        })
        .collect()
}

fn mean_qoe(
    make: impl Fn() -> Box<dyn AbrController> + Sync,
    traces: &[Arc<ThroughputTrace>],
    video: &Arc<VideoManifest>,
    qoe: &QoeVariant,
) -> f64 {
    let reports = evaluate_traces(
        || Ok(make()),
        traces,
        video,
        LinkConfig::default(),
        PlayerConfig::default(),
        qoe,
    )
    .unwrap();
    mean_report(&reports).0.total
}

fn directional_ordering() -> Verdict {
    let t = Instant::now();
    let video = Arc::new(default_manifest());
    let qoe = QoeVariant::lin();
    let player = PlayerConfig::default();
    let held_out = markov_set("test", 0, ORDER_TEST_TRACES);
    let setup = TrainSetup {
        traces: markov_set("train", 1000, ORDER_TRAIN_TRACES),
        video: video.clone(),
        link: LinkConfig::default(),
        player,
        qoe,
    };
    let config = PpoConfig {
        total_epochs: ORDER_UPDATES,
        ..PpoConfig::default()
    };
    let outcome = match train_with(Algorithm::Ppo, &config, &setup, |_| {}) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("training failed: {e}")),
    };
    let actor: Mlp = outcome.best.actor;
    let ppo = mean_qoe(
        || Box::new(PolicyController::new("ppo", actor.clone())),
        &held_out,
        &video,
        &qoe,
    );
    let base = |name: &str| {
        mean_qoe(
            || baseline_by_name(name, &qoe, &player).unwrap(),
            &held_out,
            &video,
            &qoe,
        )
    };
    let (bb, rb, mpc) = (base("bb"), base("rb"), base("mpc"));
    let (fast, time) = within(t.elapsed(), 900.0);
    verdict(
        ppo > bb && ppo >= rb && fast,
        format!(
            "mean QoE_lin on {ORDER_TEST_TRACES} held-out traces: PPO {ppo:.3}, BB {bb:.3}, RB {rb:.3}, MPC {mpc:.3} (reported only, PPO {} MPC); {time}",
            if ppo > mpc { ">" } else { "<=" }
        ),
    )
}

fn determinism() -> Verdict {
    let tmp = tempfile::TempDir::new().unwrap();
    let traces = tmp.path().join("traces");
    let gen = Command::new(env!("CARGO_BIN_EXE_abrlab"))
        .args([
            "gen-traces",
            "--kind",
            "markov",
            "--levels",
            "0.5,1,2,3,4.5",
            "--count",
            "4",
            "--seed",
            "3",
        ])
        .arg("--out")
        .arg(&traces)
        .stdout(Stdio::null())
        .status()
        .unwrap();
    if !gen.success() {
        return verdict(false, "gen-traces failed");
    }
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"trace_dir": "{}", "qoe": "lin", "total_epochs": 20, "n_actors": 4, "hidden": [32, 32]}}"#,
            traces.display()
        ),
    )
    .unwrap();
    let train = |name: &str| {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_abrlab"))
            .args([
                "train", "--algo", "ppo", "--seed", "42", "--quiet", "--config",
            ])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .stdout(Stdio::null())
            .status()
            .unwrap();
        (status.success(), out)
    };
    let ((ok_a, a), (ok_b, b)) = (train("a"), train("b"));
    if !(ok_a && ok_b) {
        return verdict(false, "train exited non-zero");
    }
    let files = [
        "best/actor.json",
        "best/critic.json",
        "last/actor.json",
        "last/critic.json",
    ];
    let same_ck = files
        .iter()
        .all(|f| fs::read(a.join(f)).ok() == fs::read(b.join(f)).ok());
    let without_clock = |d: &Path| -> Option<Vec<String>> {
        let text = fs::read_to_string(d.join("curve.csv")).ok()?;
        Some(
            text.lines()
                .map(|l| l.rsplit_once(',').map_or(l, |x| x.0).to_string())
                .collect(),
        )
    };
    let (ca, cb) = (without_clock(&a), without_clock(&b));
    let same_curve = ca.is_some() && ca == cb;
    verdict(
        same_ck && same_curve,
        format!(
            "checkpoints {}, learning curves {} (seconds column excluded), 20 updates with seed 42",
            if same_ck { "byte-identical" } else { "differ" },
            if same_curve { "identical" } else { "differ" }
        ),
    )
}

fn kl_diagnostics() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut min_kl = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(2..8);
        let dist = |rng: &mut ChaCha8Rng| {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let (old, new) = (dist(&mut rng), dist(&mut rng));
        min_kl = min_kl.min(kl_estimate(&[old], &[new]).unwrap());
    }
    let worked = kl_estimate(&[vec![0.5, 0.5]], &[vec![0.25, 0.75]]).unwrap();
    verdict(
        min_kl >= 0.0 && (worked - 0.1308).abs() <= 1e-4,
        format!("min KL over 1000 random pairs {min_kl:.3e}, worked example {worked:.6}"),
    )
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn guarded<T>(f: impl FnOnce() -> T, on_panic: impl FnOnce(String) -> T) -> T {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|p| on_panic(format!("panicked: {}", panic_message(p))))
}

fn run(n: u32, name: &'static str, f: fn() -> Verdict) -> (u32, &'static str, Verdict) {
    eprintln!("criterion {n}: {name} ...");
    (n, name, guarded(f, |msg| verdict(false, msg)))
}

fn main() {
    // `cargo test -- <filter>` style arguments are accepted and ignored
    let started = Instant::now();
    let mut results = vec![
        run(1, "environment oracle", env_oracle),
        run(2, "QoE exactness", qoe_exactness),
        run(3, "gradient checks", gradcheck),
        run(4, "clip semantics", clip_semantics),
        run(5, "MPC oracle", mpc_oracle),
    ];
    eprintln!("criteria 6 and 9: learning smoke test ...");
    let (smoke, sync) = guarded(learning_smoke, |msg| {
        (verdict(false, msg.clone()), verdict(false, msg))
    });
    results.push((6, "learning smoke test", smoke));
    results.push(run(7, "directional ordering", directional_ordering));
    results.push(run(8, "determinism", determinism));
    results.push((9, "synchronization invariant", sync));
    results.push(run(10, "KL diagnostics", kl_diagnostics));

    println!();
    for (n, name, v) in &results {
        println!(
            "criterion {n:>2} [{}] {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    let failed = results.iter().filter(|r| !r.2.passed).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
