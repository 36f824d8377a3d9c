//! Rule-based ABR controllers: buffer-based (BB), rate-based (RB), BOLA and
//! robust MPC.

use std::collections::VecDeque;

use crate::env::StreamObservation;
use crate::qoe::QoeVariant;
use crate::video::VideoManifest;

/// Window of throughput samples and prediction errors kept by controllers.
pub const HISTORY_WINDOW: usize = 5;

/// Anything that picks the next chunk's level from an observation.
pub trait AbrController: Send {
    fn name(&self) -> &str;

    /// Forget per-episode state.
    fn reset(&mut self);

    fn select_level(&mut self, obs: &StreamObservation, video: &VideoManifest) -> usize;
}

/// Per-episode controller memory.
#[derive(Clone, Debug, Default)]
pub struct ControllerState {
    pub throughput_history_mbps: VecDeque<f64>,
    /// Relative errors `|predicted − actual| / actual` of past predictions.
    pub prediction_errors: VecDeque<f64>,
    last_prediction_mbps: Option<f64>,
    seen_chunks: usize,
}

impl ControllerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pull the newest measured throughput out of `obs` if a chunk finished
    /// since the last call, and score the previous prediction against it.
    pub fn observe(&mut self, obs: &StreamObservation) {
        let downloaded = obs.chunk_index();
        if downloaded > self.seen_chunks {
            if let Some(&actual) = obs.throughput_hist_mbps.last() {
                if actual > 0.0 {
                    push_bounded(&mut self.throughput_history_mbps, actual);
                    if let Some(pred) = self.last_prediction_mbps.take() {
                        push_bounded(&mut self.prediction_errors, (pred - actual).abs() / actual);
                    }
                }
            }
        }
        self.seen_chunks = downloaded;
    }

    pub fn record_prediction(&mut self, predicted_mbps: f64) {
        self.last_prediction_mbps = Some(predicted_mbps);
    }

    pub fn push_throughput(&mut self, mbps: f64) {
        push_bounded(&mut self.throughput_history_mbps, mbps);
    }

    pub fn push_prediction_error(&mut self, err: f64) {
        push_bounded(&mut self.prediction_errors, err);
    }
}

fn push_bounded(q: &mut VecDeque<f64>, x: f64) {
    if q.len() == HISTORY_WINDOW {
        q.pop_front();
    }
    q.push_back(x);
}

pub fn harmonic_mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (n, inv) = xs
        .into_iter()
        .fold((0usize, 0.0), |(n, s), x| (n + 1, s + 1.0 / x));
    (n > 0).then(|| n as f64 / inv)
}

/// Highest level whose bitrate (in Mbps) does not exceed `rate_mbps`, or 0.
pub fn highest_sustainable_level(bitrates_kbps: &[f64], rate_mbps: f64) -> usize {
    bitrates_kbps
        .iter()
        .rposition(|&b| b / 1000.0 <= rate_mbps)
        .unwrap_or(0)
}

/// Buffer-based: lowest level inside the reservoir, top level above
/// reservoir + cushion, linear in between.
pub fn bb_next(obs: &StreamObservation, reservoir_s: f64, cushion_s: f64) -> usize {
    let levels = obs.level_count();
    let top = levels - 1;
    let b = obs.buffer_s;
    if b <= reservoir_s {
        0
    } else if b >= reservoir_s + cushion_s {
        top
    } else {
        let frac = (b - reservoir_s) / cushion_s;
        ((frac * top as f64).floor() as usize).min(top)
    }
}

/// Rate-based: harmonic mean of the last few throughputs matched against the ladder.
pub fn rb_next(state: &ControllerState, bitrates_kbps: &[f64]) -> usize {
    match harmonic_mean(state.throughput_history_mbps.iter().copied()) {
        Some(pred) => highest_sustainable_level(bitrates_kbps, pred),
        None => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BolaParams {
    pub gamma_p: f64,
    /// `None` derives V from the buffer cap and the chunk's top utility.
    pub v: Option<f64>,
}

impl Default for BolaParams {
    fn default() -> Self {
        Self {
            gamma_p: 5.0,
            v: None,
        }
    }
}

/// BOLA objective for every level of the next chunk.
pub fn bola_scores(
    obs: &StreamObservation,
    chunk_duration_s: f64,
    buffer_cap_s: f64,
    params: BolaParams,
) -> Vec<f64> {
    let sizes = &obs.next_chunk_sizes_bytes;
    let base = sizes[0];
    let utils: Vec<f64> = sizes.iter().map(|s| (s / base).ln()).collect();
    let top_util = utils[utils.len() - 1];
    let v = params
        .v
        .unwrap_or((buffer_cap_s / chunk_duration_s - 1.0) / (top_util + params.gamma_p));
    let q = obs.buffer_s / chunk_duration_s;
    sizes
        .iter()
        .zip(&utils)
        .map(|(s, u)| (v * (u + params.gamma_p) - q) / (s / base))
        .collect()
}

pub fn bola_next(
    obs: &StreamObservation,
    chunk_duration_s: f64,
    buffer_cap_s: f64,
    params: BolaParams,
) -> usize {
    argmax_first(&bola_scores(obs, chunk_duration_s, buffer_cap_s, params))
}

/// Index of the largest value; earliest index wins ties.
pub fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpcParams {
    pub horizon: usize,
    pub buffer_cap_s: f64,
}

impl Default for MpcParams {
    fn default() -> Self {
        Self {
            horizon: 5,
            buffer_cap_s: 60.0,
        }
    }
}

/// Robust throughput prediction: harmonic mean discounted by the worst recent
/// relative error. Falls back to the lowest ladder rate with no history.
pub fn mpc_prediction(state: &ControllerState, bitrates_kbps: &[f64]) -> f64 {
    match harmonic_mean(state.throughput_history_mbps.iter().copied()) {
        Some(hm) => {
            let max_err = state.prediction_errors.iter().copied().fold(0.0, f64::max);
            hm / (1.0 + max_err)
        }
        None => bitrates_kbps[0] / 1000.0,
    }
}

struct Plan<'a> {
    video: &'a VideoManifest,
    qoe: &'a QoeVariant,
    first_chunk: usize,
    horizon: usize,
    rate_mbps: f64,
    rtt_s: f64,
    buffer_cap_s: f64,
    utilities: Vec<f64>,
    best_score: f64,
    best_first: usize,
}

impl Plan<'_> {
    // Depth-first over level sequences in lexicographic order; only a strictly
    // better score replaces the incumbent, so ties go to the lower sequence.
    fn search(&mut self, depth: usize, first: usize, prev_q: f64, buffer: f64, score: f64) {
        if depth == self.horizon {
            if score > self.best_score {
                self.best_score = score;
                self.best_first = first;
            }
            return;
        }
        let chunk = self.first_chunk + depth;
        for level in 0..self.video.level_count() {
            let size = self.video.chunk_size(chunk, level);
            let delay = size * 8.0 / (self.rate_mbps * 1e6) + self.rtt_s;
            let rebuf = (delay - buffer).max(0.0);
            let next_buffer =
                ((buffer - delay).max(0.0) + self.video.chunk_duration_s()).min(self.buffer_cap_s);
            let q = self.utilities[level];
            let reward = q - self.qoe.mu * rebuf - (q - prev_q).abs();
            let first = if depth == 0 { level } else { first };
            self.search(depth + 1, first, q, next_buffer, score + reward);
        }
    }
}

/// Level chosen by exhaustive search over `L^h` plans at a fixed predicted
/// rate. Returns the level and the prediction used.
pub fn mpc_next(
    obs: &StreamObservation,
    state: &ControllerState,
    video: &VideoManifest,
    qoe: &QoeVariant,
    params: MpcParams,
) -> (usize, f64) {
    let rate = mpc_prediction(state, video.bitrates_kbps());
    let horizon = params.horizon.min(obs.chunks_remaining);
    if horizon == 0 {
        return (0, rate);
    }
    let utilities: Vec<f64> = video
        .bitrates_kbps()
        .iter()
        .map(|&b| qoe.utility(b))
        .collect();
    let mut plan = Plan {
        video,
        qoe,
        first_chunk: obs.chunk_index(),
        horizon,
        rate_mbps: rate,
        rtt_s: obs.link_rtt_s,
        buffer_cap_s: params.buffer_cap_s,
        utilities,
        best_score: f64::NEG_INFINITY,
        best_first: 0,
    };
    let prev_q = plan.utilities[obs.last_level];
    plan.search(0, 0, prev_q, obs.buffer_s, 0.0);
    (plan.best_first, rate)
}

#[derive(Clone, Debug)]
pub struct BufferBased {
    pub reservoir_s: f64,
    pub cushion_s: f64,
}

impl Default for BufferBased {
    fn default() -> Self {
        Self {
            reservoir_s: 5.0,
            cushion_s: 10.0,
        }
    }
}

impl AbrController for BufferBased {
    fn name(&self) -> &str {
        "bb"
    }

    fn reset(&mut self) {}

    fn select_level(&mut self, obs: &StreamObservation, _video: &VideoManifest) -> usize {
        bb_next(obs, self.reservoir_s, self.cushion_s)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RateBased {
    state: ControllerState,
}

impl AbrController for RateBased {
    fn name(&self) -> &str {
        "rb"
    }

    fn reset(&mut self) {
        self.state = ControllerState::new();
    }

    fn select_level(&mut self, obs: &StreamObservation, video: &VideoManifest) -> usize {
        self.state.observe(obs);
        rb_next(&self.state, video.bitrates_kbps())
    }
}

#[derive(Clone, Debug)]
pub struct Bola {
    pub params: BolaParams,
    pub buffer_cap_s: f64,
}

impl Bola {
    pub fn new(buffer_cap_s: f64) -> Self {
        Self {
            params: BolaParams::default(),
            buffer_cap_s,
        }
    }
}

impl AbrController for Bola {
    fn name(&self) -> &str {
        "bola"
    }

    fn reset(&mut self) {}

    fn select_level(&mut self, obs: &StreamObservation, video: &VideoManifest) -> usize {
        bola_next(
            obs,
            video.chunk_duration_s(),
            self.buffer_cap_s,
            self.params,
        )
    }
}

#[derive(Clone, Debug)]
pub struct RobustMpc {
    pub params: MpcParams,
    pub qoe: QoeVariant,
    state: ControllerState,
}

impl RobustMpc {
    pub fn new(qoe: QoeVariant, params: MpcParams) -> Self {
        Self {
            params,
            qoe,
            state: ControllerState::new(),
        }
    }
}

impl AbrController for RobustMpc {
    fn name(&self) -> &str {
        "mpc"
    }

    fn reset(&mut self) {
        self.state = ControllerState::new();
    }

    fn select_level(&mut self, obs: &StreamObservation, video: &VideoManifest) -> usize {
        self.state.observe(obs);
        let (level, pred) = mpc_next(obs, &self.state, video, &self.qoe, self.params);
        self.state.record_prediction(pred);
        level
    }
}
