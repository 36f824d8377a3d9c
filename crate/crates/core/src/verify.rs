//! Independent oracles for the simulator, the MPC search and the network
//! gradients. Each check reimplements the quantity it verifies by a
//! different route (fixed-step integration, exhaustive enumeration, central
//! finite differences) and reports the worst disagreement.

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{mpc_next, ControllerState, MpcParams};
use crate::env::{LinkConfig, PlayerConfig, StartOffset, StreamObservation, StreamingEnv};
use crate::nn::{log_softmax, Head, Mlp};
use crate::qoe::QoeVariant;
use crate::rl::{actor_loss, critic_loss, ActorObjective, Transition};
use crate::traces::{ThroughputTrace, TraceSample};
use crate::video::{synth_manifest, VideoManifest};

/// Step of the integration oracle.
pub const ORACLE_DT_S: f64 = 1e-3;
pub const ENV_TOLERANCE_S: f64 = 1e-6;
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Gradient magnitudes below this are compared absolutely rather than relatively.
pub const GRADCHECK_FLOOR: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} cases, max error {:.3e} (tolerance {:.0e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_error,
            self.tolerance,
            if self.detail.is_empty() {
                String::new()
            } else {
                format!(" - {}", self.detail)
            }
        )
    }
}

// ---------------------------------------------------------------------------
// Simulator oracle
// ---------------------------------------------------------------------------

fn oracle_bandwidth(trace: &ThroughputTrace, clock_s: f64) -> f64 {
    let s = trace.samples();
    let pos = s[0].time_s + clock_s.rem_euclid(trace.span_s());
    let mut bw = s[0].bandwidth_mbps;
    for w in s.windows(2) {
        if pos >= w[0].time_s && pos < w[1].time_s {
            bw = w[0].bandwidth_mbps;
            break;
        }
    }
    bw
}

/// Per-step `(delay, rebuffer)` from a fixed 1 ms grid integration of the
/// download with playback draining the buffer cell by cell.
pub fn integrate_episode(
    trace: &ThroughputTrace,
    video: &VideoManifest,
    link: LinkConfig,
    buffer_cap_s: f64,
    start_clock_s: f64,
    actions: &[usize],
) -> Vec<(f64, f64)> {
    let dt = ORACLE_DT_S;
    let mut clock = start_clock_s;
    let mut buffer = 0.0f64;
    let mut out = Vec::with_capacity(actions.len());
    for (chunk, &level) in actions.iter().enumerate() {
        let t0 = clock;
        let mut stall = 0.0;
        let drain = |h: f64, buffer: &mut f64, stall: &mut f64| {
            let d = h.min(*buffer);
            *buffer -= d;
            *stall += h - d;
        };
        let mut remaining = video.chunk_size(chunk, level) * 8.0 / 1e6;
        loop {
            let cell = (clock / dt).floor();
            let mut cell_end = (cell + 1.0) * dt;
            if cell_end <= clock {
                cell_end = (cell + 2.0) * dt;
            }
            let h = cell_end - clock;
            let mid = ((cell_end / dt).round() - 0.5) * dt;
            let rate = oracle_bandwidth(trace, mid).min(link.capacity_mbps);
            if rate * h >= remaining {
                let used = remaining / rate;
                drain(used, &mut buffer, &mut stall);
                clock += used;
                break;
            }
            remaining -= rate * h;
            drain(h, &mut buffer, &mut stall);
            clock = cell_end;
        }
        drain(link.rtt_s, &mut buffer, &mut stall);
        clock += link.rtt_s;
        let delay = clock - t0;
        buffer += video.chunk_duration_s();
        if buffer > buffer_cap_s {
            clock += buffer - buffer_cap_s;
            buffer = buffer_cap_s;
        }
        out.push((delay, stall));
    }
    out
}

/// Random trace whose breakpoints sit on the millisecond grid.
pub fn random_grid_trace<R: Rng + ?Sized>(rng: &mut R, id: &str) -> ThroughputTrace {
    let n = rng.gen_range(2..12);
    let mut t_ms: u64 = rng.gen_range(0..3000);
    let mut samples = Vec::with_capacity(n + 1);
    for _ in 0..n {
        samples.push(TraceSample::new(
            t_ms as f64 / 1000.0,
            rng.gen_range(0.2..6.0),
        ));
        t_ms += rng.gen_range(100..6000);
    }
    samples.push(TraceSample::new(
        t_ms as f64 / 1000.0,
        rng.gen_range(0.2..6.0),
    ));
    ThroughputTrace::new(id, samples).expect("generated trace is valid")
}

pub fn check_env_oracle(cases: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err = 0.0f64;
    let mut steps = 0;
    let mut failures = Vec::new();
    for case in 0..cases {
        let trace = Arc::new(random_grid_trace(&mut rng, &format!("case{case}")));
        let n_chunks = rng.gen_range(4..16);
        let ladder = [300.0, 750.0, 1200.0, 1850.0, 2850.0, 4300.0];
        let video = Arc::new(
            synth_manifest(&ladder, n_chunks, 4.0, rng.gen_range(0.0..0.5), rng.gen())
                .expect("valid manifest"),
        );
        let link = LinkConfig {
            capacity_mbps: rng.gen_range(1.0..12.0),
            rtt_s: rng.gen_range(0.0..0.2),
        };
        let player = PlayerConfig {
            buffer_cap_s: rng.gen_range(10.0..40.0),
            start_offset: if rng.gen_bool(0.5) {
                StartOffset::Zero
            } else {
                StartOffset::Random { seed: rng.gen() }
            },
            ..PlayerConfig::default()
        };
        let actions: Vec<usize> = (0..n_chunks)
            .map(|_| rng.gen_range(0..ladder.len()))
            .collect();
        let (mut env, _) = match StreamingEnv::new(trace.clone(), video.clone(), link, player) {
            Ok(e) => e,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let expected = integrate_episode(
            &trace,
            &video,
            link,
            player.buffer_cap_s,
            env.start_clock_s(),
            &actions,
        );
        for (&a, &(delay, rebuf)) in actions.iter().zip(&expected) {
            let (_, out) = env.step(a).expect("valid action");
            let err = (out.delay_s - delay)
                .abs()
                .max((out.rebuffer_s - rebuf).abs());
            max_err = max_err.max(err);
            steps += 1;
            if !(err <= ENV_TOLERANCE_S) {
                failures.push(format!(
                    "case {case}: delay {} vs {delay}, rebuffer {} vs {rebuf}",
                    out.delay_s, out.rebuffer_s
                ));
            }
        }
    }
    CheckResult {
        name: "env vs 1 ms integrator".into(),
        cases,
        max_error: max_err,
        tolerance: ENV_TOLERANCE_S,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{steps} steps")
        } else {
            failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
        },
    }
}

// ---------------------------------------------------------------------------
// MPC oracle
// ---------------------------------------------------------------------------

/// Exhaustive MPC: score every level sequence from scratch and keep the first
/// best in lexicographic order.
pub fn mpc_bruteforce(
    obs: &StreamObservation,
    throughputs: &[f64],
    errors: &[f64],
    video: &VideoManifest,
    qoe: &QoeVariant,
    horizon: usize,
    buffer_cap_s: f64,
) -> usize {
    let rate = if throughputs.is_empty() {
        video.bitrate_kbps(0) / 1000.0
    } else {
        let hm = throughputs.len() as f64 / throughputs.iter().map(|x| 1.0 / x).sum::<f64>();
        hm / (1.0 + errors.iter().copied().fold(0.0, f64::max))
    };
    let h = horizon.min(obs.chunks_remaining);
    if h == 0 {
        return 0;
    }
    let levels = video.level_count();
    let first_chunk = obs.total_chunks - obs.chunks_remaining;
    let total = levels.pow(h as u32);
    let mut best_score = f64::NEG_INFINITY;
    let mut best_first = 0;
    for code in 0..total {
        // most significant digit is the first chunk's level
        let seq: Vec<usize> = (0..h)
            .map(|j| (code / levels.pow((h - 1 - j) as u32)) % levels)
            .collect();
        let mut buffer = obs.buffer_s;
        let mut prev_q = qoe.utility(video.bitrate_kbps(obs.last_level));
        let mut score = 0.0;
        for (j, &l) in seq.iter().enumerate() {
            let delay = video.chunk_size(first_chunk + j, l) * 8.0 / (rate * 1e6) + obs.link_rtt_s;
            let rebuf = (delay - buffer).max(0.0);
            buffer = ((buffer - delay).max(0.0) + video.chunk_duration_s()).min(buffer_cap_s);
            let q = qoe.utility(video.bitrate_kbps(l));
            score += q - qoe.mu * rebuf - (q - prev_q).abs();
            prev_q = q;
        }
        if score > best_score {
            best_score = score;
            best_first = seq[0];
        }
    }
    best_first
}

/// `level_range` and `horizons` are inclusive ranges sampled per case.
pub fn check_mpc_oracle(
    cases: usize,
    level_range: RangeInclusive<usize>,
    horizons: RangeInclusive<usize>,
    seed: u64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    let name = format!(
        "mpc vs brute force (L in {}..={}, h in {}..={})",
        level_range.start(),
        level_range.end(),
        horizons.start(),
        horizons.end()
    );
    for case in 0..cases {
        let horizon = rng.gen_range(horizons.clone());
        let levels = rng.gen_range(level_range.clone());
        let mut ladder = Vec::with_capacity(levels);
        let mut b = rng.gen_range(200.0..800.0);
        for _ in 0..levels {
            ladder.push(b);
            b += rng.gen_range(100.0..2000.0);
        }
        let n_chunks = rng.gen_range(1..10);
        let video = synth_manifest(&ladder, n_chunks, 4.0, rng.gen_range(0.0..0.4), rng.gen())
            .expect("valid manifest");
        let chunk = rng.gen_range(0..n_chunks);
        let buffer_cap = 30.0;
        let last_level = rng.gen_range(0..levels);
        let obs = StreamObservation {
            throughput_hist_mbps: vec![0.0; 8],
            download_time_hist_s: vec![0.0; 8],
            next_chunk_sizes_bytes: video.chunk_sizes(chunk).to_vec(),
            buffer_s: rng.gen_range(0.0..buffer_cap),
            chunks_remaining: n_chunks - chunk,
            total_chunks: n_chunks,
            last_level,
            last_bitrate_kbps: ladder[last_level],
            top_bitrate_kbps: ladder[levels - 1],
            link_capacity_mbps: 12.0,
            link_rtt_s: rng.gen_range(0.0..0.1),
        };
        let mut state = ControllerState::new();
        let tputs: Vec<f64> = (0..rng.gen_range(0..=5))
            .map(|_| rng.gen_range(0.2..6.0))
            .collect();
        let errs: Vec<f64> = (0..rng.gen_range(0..=5))
            .map(|_| rng.gen_range(0.0..0.8))
            .collect();
        tputs.iter().for_each(|&t| state.push_throughput(t));
        errs.iter().for_each(|&e| state.push_prediction_error(e));
        let qoe = if rng.gen_bool(0.5) {
            QoeVariant::lin()
        } else {
            QoeVariant::log(ladder[0])
        };
        let params = MpcParams {
            horizon,
            buffer_cap_s: buffer_cap,
        };
        let (got, _) = mpc_next(&obs, &state, &video, &qoe, params);
        let want = mpc_bruteforce(&obs, &tputs, &errs, &video, &qoe, horizon, buffer_cap);
        if got != want {
            mismatches.push(format!(
                "case {case}: L={levels} h={horizon} got {got} want {want}"
            ));
        }
    }
    CheckResult {
        name,
        cases,
        max_error: mismatches.len() as f64,
        tolerance: 0.0,
        passed: mismatches.is_empty(),
        detail: mismatches
            .into_iter()
            .take(3)
            .collect::<Vec<_>>()
            .join("; "),
    }
}

// ---------------------------------------------------------------------------
// Gradient checks
// ---------------------------------------------------------------------------

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADCHECK_FLOOR)
}

/// Largest relative error between `analytic` and central differences of `f`
/// over every parameter of `net`.
pub fn max_gradcheck_error(net: &mut Mlp, analytic: &[f64], mut f: impl FnMut(&Mlp) -> f64) -> f64 {
    let h = GRADCHECK_STEP;
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *net.param_mut(i);
        *net.param_mut(i) = orig + h;
        let up = f(net);
        *net.param_mut(i) = orig - h;
        let down = f(net);
        *net.param_mut(i) = orig;
        worst = worst.max(rel_error(a, (up - down) / (2.0 * h)));
    }
    worst
}

fn random_net<R: Rng + ?Sized>(rng: &mut R, out: usize, head: Head) -> Mlp {
    let mut dims = vec![rng.gen_range(2..6)];
    for _ in 0..rng.gen_range(1..3) {
        dims.push(rng.gen_range(2..8));
    }
    dims.push(out);
    let mut net = Mlp::new(&dims, head, false, rng).expect("valid dims");
    // spread parameters beyond Xavier so the output layer is not degenerate
    for i in 0..net.param_count() {
        *net.param_mut(i) = rng.gen_range(-1.0..1.0);
    }
    net
}

fn random_input<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// Gradient of `log π(a|x)` through the softmax head.
pub fn check_logpolicy_grad(nets: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..nets {
        let actions = rng.gen_range(2..6);
        let mut net = random_net(&mut rng, actions, Head::Softmax);
        let x = random_input(&mut rng, net.input_dim());
        let a = rng.gen_range(0..actions);
        let cache = net.forward(&x).expect("dims match");
        let mut g_out = vec![0.0; actions];
        g_out[a] = 1.0 / cache.output[a];
        let mut grads = net.zero_grads();
        net.backward(&cache, &g_out, &mut grads)
            .expect("dims match");
        let analytic: Vec<f64> = grads.iter().collect();
        let err = max_gradcheck_error(&mut net, &analytic, |n| {
            log_softmax(n.forward(&x).expect("dims match").logits())[a]
        });
        worst = worst.max(err);
    }
    grad_result("log-policy gradient", nets, worst)
}

fn random_transitions<R: Rng + ?Sized>(
    rng: &mut R,
    actor: Option<&Mlp>,
    dim: usize,
    n: usize,
    eps: f64,
) -> Vec<Transition> {
    (0..n)
        .map(|_| {
            let x = random_input(rng, dim);
            let (action, probs, old_logprob) = match actor {
                Some(net) => {
                    let logp = log_softmax(net.forward(&x).expect("dims match").logits());
                    let a = rng.gen_range(0..logp.len());
                    // keep the ratio away from the clip kinks where the
                    // finite difference straddles two branches
                    let ratio = loop {
                        let r: f64 = rng.gen_range(0.5..1.6);
                        if (r - (1.0 - eps)).abs() > 0.02 && (r - (1.0 + eps)).abs() > 0.02 {
                            break r;
                        }
                    };
                    let probs = logp.iter().map(|l| l.exp()).collect();
                    (a, probs, logp[a] - ratio.ln())
                }
                None => (0, vec![1.0], 0.0),
            };
            let mut t = Transition::new(x, action, 0.0, false, probs, 0.0);
            t.old_logprob = old_logprob;
            t.advantage = rng.gen_range(-2.0..2.0);
            t.ret = rng.gen_range(-3.0..3.0);
            t
        })
        .collect()
}

/// Gradient of the critic's mean squared error.
pub fn check_value_grad(nets: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..nets {
        let mut net = random_net(&mut rng, 1, Head::Linear);
        let trs = random_transitions(&mut rng, None, net.input_dim(), 4, 0.2);
        let refs: Vec<&Transition> = trs.iter().collect();
        let mut grads = net.zero_grads();
        critic_loss(&net, &refs, Some(&mut grads)).expect("dims match");
        let analytic: Vec<f64> = grads.iter().collect();
        let err = max_gradcheck_error(&mut net, &analytic, |n| {
            critic_loss(n, &refs, None).expect("dims match")
        });
        worst = worst.max(err);
    }
    grad_result("value MSE gradient", nets, worst)
}

/// Gradient of the full clipped-surrogate-plus-entropy actor loss.
pub fn check_ppo_loss_grad(nets: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let eps = 0.2;
    for _ in 0..nets {
        let actions = rng.gen_range(2..6);
        let mut net = random_net(&mut rng, actions, Head::Softmax);
        let trs = random_transitions(&mut rng, Some(&net), net.input_dim(), 6, eps);
        let refs: Vec<&Transition> = trs.iter().collect();
        let eta = rng.gen_range(0.0..2.0);
        let objective = ActorObjective::Clipped { eps };
        let mut grads = net.zero_grads();
        actor_loss(&net, &refs, objective, eta, Some(&mut grads)).expect("dims match");
        let analytic: Vec<f64> = grads.iter().collect();
        let err = max_gradcheck_error(&mut net, &analytic, |n| {
            actor_loss(n, &refs, objective, eta, None)
                .expect("dims match")
                .loss
        });
        worst = worst.max(err);
    }
    grad_result("PPO clipped surrogate + entropy gradient", nets, worst)
}

/// A transition whose ratio is past `1 + ε` with positive advantage must add
/// nothing to the actor gradient, analytically and by finite differences.
pub fn check_clip_saturation() -> CheckResult {
    let mut actor = Mlp::zeros(&[1, 2], Head::Softmax).expect("valid dims");
    *actor.param_mut(0) = 0.3;
    let x = vec![1.0];
    let logp = log_softmax(actor.forward(&x).expect("dims match").logits());
    let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    let objective = ActorObjective::Clipped { eps: 0.2 };

    let mut saturated = Transition::new(x.clone(), 0, 0.0, false, probs.clone(), 0.0);
    saturated.old_logprob = logp[0] - 2f64.ln(); // ratio 2
    saturated.advantage = 1.0;
    let refs = [&saturated];
    let mut grads = actor.zero_grads();
    actor_loss(&actor, &refs, objective, 0.0, Some(&mut grads)).expect("dims match");
    let analytic_max = grads.max_abs();
    let h = GRADCHECK_STEP;
    let mut numeric_max = 0.0f64;
    for i in 0..actor.param_count() {
        let orig = *actor.param_mut(i);
        *actor.param_mut(i) = orig + h;
        let up = actor_loss(&actor, &refs, objective, 0.0, None)
            .expect("dims match")
            .loss;
        *actor.param_mut(i) = orig - h;
        let down = actor_loss(&actor, &refs, objective, 0.0, None)
            .expect("dims match")
            .loss;
        *actor.param_mut(i) = orig;
        numeric_max = numeric_max.max(((up - down) / (2.0 * h)).abs());
    }

    // control: inside the clip range the same transition does move the policy
    let mut inside = saturated.clone();
    inside.old_logprob = logp[0];
    let mut control = actor.zero_grads();
    actor_loss(&actor, &[&inside], objective, 0.0, Some(&mut control)).expect("dims match");

    let worst = analytic_max.max(numeric_max);
    CheckResult {
        name: "clip-saturated transition has zero gradient".into(),
        cases: 1,
        max_error: worst,
        tolerance: 1e-12,
        passed: worst <= 1e-12 && control.max_abs() > 1e-3,
        detail: format!("unclipped control gradient {:.3e}", control.max_abs()),
    }
}

fn grad_result(name: &str, nets: usize, worst: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        cases: nets,
        max_error: worst,
        tolerance: GRADCHECK_TOLERANCE,
        passed: worst <= GRADCHECK_TOLERANCE,
        detail: format!("central differences, h = {GRADCHECK_STEP:.0e}"),
    }
}

pub fn gradcheck_suite(nets: usize, seed: u64) -> Vec<CheckResult> {
    vec![
        check_logpolicy_grad(nets, seed),
        check_value_grad(nets, seed.wrapping_add(1)),
        check_ppo_loss_grad(nets, seed.wrapping_add(2)),
        check_clip_saturation(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::{synth_trace, TraceKind};
    use crate::video::default_manifest;

    #[test]
    fn integrator_reproduces_worked_example() {
        let trace = ThroughputTrace::new(
            "step",
            vec![
                TraceSample::new(0.0, 1.0),
                TraceSample::new(2.0, 4.0),
                TraceSample::new(100.0, 4.0),
            ],
        )
        .unwrap();
        let video = synth_manifest(&[1000.0, 2000.0], 1, 4.0, 0.0, 0).unwrap();
        let link = LinkConfig {
            capacity_mbps: 12.0,
            rtt_s: 0.03,
        };
        let out = integrate_episode(&trace, &video, link, 60.0, 0.0, &[1]);
        assert!((out[0].0 - 3.53).abs() < 1e-6, "{:?}", out);
        assert!((out[0].1 - 3.53).abs() < 1e-6);
    }

    #[test]
    fn integrator_wraps_trace() {
        let trace = synth_trace(
            "s",
            &TraceKind::Step {
                low_mbps: 1.0,
                high_mbps: 2.0,
                period_s: 1.0,
            },
            2.0,
            1.0,
            0,
        )
        .unwrap();
        let video = default_manifest();
        let link = LinkConfig {
            capacity_mbps: 12.0,
            rtt_s: 0.0,
        };
        // 1.2 Mbit over alternating 1/2 Mbps seconds: 1 s at 1 Mbps then 0.1 s at 2 Mbps
        let out = integrate_episode(&trace, &video, link, 60.0, 0.0, &[0]);
        assert!((out[0].0 - 1.1).abs() < 1e-9);
    }

    #[test]
    fn small_suites_pass() {
        assert!(check_env_oracle(5, 1).passed);
        assert!(check_mpc_oracle(20, 2..=3, 1..=3, 2).passed);
        for r in gradcheck_suite(10, 3) {
            assert!(r.passed, "{r}");
        }
    }
}
