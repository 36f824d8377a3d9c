//! Chunk-level streaming simulator.
//!
//! Each step downloads one chunk over the trace-driven link, then applies the
//! buffer model:
//!
//! * `delay = transfer_time + rtt`, where the transfer integrates
//!   `min(trace bandwidth, capacity)` over the piecewise-constant trace
//!   starting at the current trace clock (the trace wraps cyclically);
//! * `rebuffer = max(delay - buffer, 0)`;
//! * `buffer = max(buffer - delay, 0) + chunk_duration`, and anything above
//!   `buffer_cap_s` is slept off (the trace clock advances by the sleep too).
//!
//! Before the first chunk the buffer is empty, so the first download always
//! counts as a stall.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traces::ThroughputTrace;
use crate::video::VideoManifest;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("step called after the episode finished")]
    EpisodeDone,
    #[error("level {level} out of range for a {levels}-level ladder")]
    InvalidLevel { level: usize, levels: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub capacity_mbps: f64,
    pub rtt_s: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            capacity_mbps: 12.0,
            rtt_s: 0.03,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StartOffset {
    Zero,
    /// Uniform over the trace span, drawn from this seed.
    Random {
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerConfig {
    pub buffer_cap_s: f64,
    pub history_len: usize,
    pub start_offset: StartOffset,
    /// When false the link capacity/rtt channels of the observation are zeroed.
    pub observe_link: bool,
}

impl Default for PlayerConfig {
    fn default() -> Self {
        Self {
            buffer_cap_s: 60.0,
            history_len: 8,
            start_offset: StartOffset::Zero,
            observe_link: true,
        }
    }
}

/// Agent-visible state before choosing the next chunk's level.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamObservation {
    /// Measured chunk throughputs, oldest first, zero-padded on the left.
    pub throughput_hist_mbps: Vec<f64>,
    /// Chunk download delays, same layout as the throughput history.
    pub download_time_hist_s: Vec<f64>,
    /// Sizes of the next chunk at every level; zeros once the episode is done.
    pub next_chunk_sizes_bytes: Vec<f64>,
    pub buffer_s: f64,
    pub chunks_remaining: usize,
    pub total_chunks: usize,
    pub last_level: usize,
    pub last_bitrate_kbps: f64,
    pub top_bitrate_kbps: f64,
    pub link_capacity_mbps: f64,
    pub link_rtt_s: f64,
}

impl StreamObservation {
    /// Index of the next chunk to download.
    pub fn chunk_index(&self) -> usize {
        self.total_chunks - self.chunks_remaining
    }

    pub fn level_count(&self) -> usize {
        self.next_chunk_sizes_bytes.len()
    }

    /// Measured throughputs of downloaded chunks, oldest first.
    pub fn measured_throughputs(&self) -> impl Iterator<Item = f64> + '_ {
        let downloaded = self.chunk_index().min(self.throughput_hist_mbps.len());
        let skip = self.throughput_hist_mbps.len() - downloaded;
        self.throughput_hist_mbps.iter().skip(skip).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub delay_s: f64,
    pub rebuffer_s: f64,
    pub sleep_s: f64,
    pub chunk_size_bytes: f64,
    pub level: usize,
    pub done: bool,
}

/// Feature scaling constants used by [`encode_observation`].
///
/// | feature                  | divisor              |
/// |--------------------------|----------------------|
/// | throughput history       | 10 Mbps              |
/// | download time history    | 10 s                 |
/// | next chunk sizes         | 1e6 bytes            |
/// | buffer                   | 10 s                 |
/// | chunks remaining         | total chunks         |
/// | last level bitrate       | top ladder bitrate   |
/// | link capacity            | 10 Mbps              |
/// | link rtt                 | 1 s (unscaled)       |
pub mod scale {
    pub const THROUGHPUT_MBPS: f64 = 10.0;
    pub const DOWNLOAD_TIME_S: f64 = 10.0;
    pub const CHUNK_SIZE_BYTES: f64 = 1e6;
    pub const BUFFER_S: f64 = 10.0;
    pub const CAPACITY_MBPS: f64 = 10.0;
    pub const RTT_S: f64 = 1.0;
}

/// Length of the vector produced by [`encode_observation`].
pub fn feature_dim(history_len: usize, levels: usize) -> usize {
    2 * history_len + levels + 5
}

/// Flatten an observation into the network input vector. Layout: throughput
/// history, download time history, next chunk sizes, then buffer, chunks
/// remaining, last bitrate, link capacity, link rtt.
pub fn encode_observation(obs: &StreamObservation) -> Vec<f64> {
    let mut v = Vec::with_capacity(feature_dim(
        obs.throughput_hist_mbps.len(),
        obs.next_chunk_sizes_bytes.len(),
    ));
    v.extend(
        obs.throughput_hist_mbps
            .iter()
            .map(|x| x / scale::THROUGHPUT_MBPS),
    );
    v.extend(
        obs.download_time_hist_s
            .iter()
            .map(|x| x / scale::DOWNLOAD_TIME_S),
    );
    v.extend(
        obs.next_chunk_sizes_bytes
            .iter()
            .map(|x| x / scale::CHUNK_SIZE_BYTES),
    );
    v.push(obs.buffer_s / scale::BUFFER_S);
    v.push(if obs.total_chunks == 0 {
        0.0
    } else {
        obs.chunks_remaining as f64 / obs.total_chunks as f64
    });
    v.push(if obs.top_bitrate_kbps > 0.0 {
        obs.last_bitrate_kbps / obs.top_bitrate_kbps
    } else {
        0.0
    });
    v.push(obs.link_capacity_mbps / scale::CAPACITY_MBPS);
    v.push(obs.link_rtt_s / scale::RTT_S);
    v
}

/// Time to move `megabits` through the link starting at trace-clock `clock_s`.
/// Walks whole trace segments so the result does not depend on float drift of
/// the clock across many wraps.
pub fn transfer_time_s(
    trace: &ThroughputTrace,
    capacity_mbps: f64,
    clock_s: f64,
    megabits: f64,
) -> f64 {
    let (mut seg, elapsed) = trace.locate(clock_s);
    let (dur, bw) = trace.segment(seg);
    let mut seg_left = (dur - elapsed).max(0.0);
    let mut rate = bw.min(capacity_mbps);
    let mut remaining = megabits;
    let mut t = 0.0;
    loop {
        let can = rate * seg_left;
        if can >= remaining {
            return t + remaining / rate;
        }
        remaining -= can;
        t += seg_left;
        seg = (seg + 1) % trace.segment_count();
        let (dur, bw) = trace.segment(seg);
        seg_left = dur;
        rate = bw.min(capacity_mbps);
    }
}

/// One streaming session over a trace. Single-owner; cheap to construct
/// because the trace and manifest are shared.
#[derive(Clone, Debug)]
pub struct StreamingEnv {
    trace: Arc<ThroughputTrace>,
    video: Arc<VideoManifest>,
    link: LinkConfig,
    player: PlayerConfig,
    start_clock_s: f64,
    clock_s: f64,
    buffer_s: f64,
    next_chunk: usize,
    last_level: usize,
    throughput_hist: VecDeque<f64>,
    delay_hist: VecDeque<f64>,
}

impl StreamingEnv {
    /// Validate inputs and return an environment already reset, with its
    /// initial observation.
    pub fn new(
        trace: Arc<ThroughputTrace>,
        video: Arc<VideoManifest>,
        link: LinkConfig,
        player: PlayerConfig,
    ) -> Result<(Self, StreamObservation), EnvError> {
        if !(link.capacity_mbps.is_finite() && link.capacity_mbps > 0.0) {
            return Err(EnvError::Config(format!(
                "link capacity must be > 0, got {}",
                link.capacity_mbps
            )));
        }
        if !(link.rtt_s.is_finite() && link.rtt_s >= 0.0) {
            return Err(EnvError::Config(format!(
                "link rtt must be >= 0, got {}",
                link.rtt_s
            )));
        }
        if player.history_len == 0 {
            return Err(EnvError::Config("history_len must be >= 1".into()));
        }
        if !(player.buffer_cap_s > video.chunk_duration_s()) {
            return Err(EnvError::Config(format!(
                "buffer cap {} must exceed the chunk duration {}",
                player.buffer_cap_s,
                video.chunk_duration_s()
            )));
        }
        let start_clock_s = match player.start_offset {
            StartOffset::Zero => 0.0,
            StartOffset::Random { seed } => {
                ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..trace.span_s())
            }
        };
        let mut env = Self {
            trace,
            video,
            link,
            player,
            start_clock_s,
            clock_s: start_clock_s,
            buffer_s: 0.0,
            next_chunk: 0,
            last_level: 0,
            throughput_hist: VecDeque::new(),
            delay_hist: VecDeque::new(),
        };
        let obs = env.reset();
        Ok((env, obs))
    }

    /// Restart the episode from the same initial trace clock.
    pub fn reset(&mut self) -> StreamObservation {
        let k = self.player.history_len;
        self.clock_s = self.start_clock_s;
        self.buffer_s = 0.0;
        self.next_chunk = 0;
        self.last_level = 0;
        self.throughput_hist = std::iter::repeat_n(0.0, k).collect();
        self.delay_hist = std::iter::repeat_n(0.0, k).collect();
        self.observation()
    }

    pub fn trace(&self) -> &ThroughputTrace {
        &self.trace
    }

    pub fn video(&self) -> &VideoManifest {
        &self.video
    }

    pub fn link(&self) -> LinkConfig {
        self.link
    }

    pub fn player(&self) -> PlayerConfig {
        self.player
    }

    pub fn start_clock_s(&self) -> f64 {
        self.start_clock_s
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }

    pub fn buffer_s(&self) -> f64 {
        self.buffer_s
    }

    pub fn is_done(&self) -> bool {
        self.next_chunk >= self.video.chunk_count()
    }

    /// Override the buffer level; used to set up scenarios in tests and oracles.
    pub fn set_buffer_s(&mut self, buffer_s: f64) {
        self.buffer_s = buffer_s.clamp(0.0, self.player.buffer_cap_s);
    }

    pub fn observation(&self) -> StreamObservation {
        let total = self.video.chunk_count();
        let next_sizes = if self.is_done() {
            vec![0.0; self.video.level_count()]
        } else {
            self.video.chunk_sizes(self.next_chunk).to_vec()
        };
        let (cap, rtt) = if self.player.observe_link {
            (self.link.capacity_mbps, self.link.rtt_s)
        } else {
            (0.0, 0.0)
        };
        StreamObservation {
            throughput_hist_mbps: self.throughput_hist.iter().copied().collect(),
            download_time_hist_s: self.delay_hist.iter().copied().collect(),
            next_chunk_sizes_bytes: next_sizes,
            buffer_s: self.buffer_s,
            chunks_remaining: total - self.next_chunk.min(total),
            total_chunks: total,
            last_level: self.last_level,
            last_bitrate_kbps: self.video.bitrate_kbps(self.last_level),
            top_bitrate_kbps: self.video.top_bitrate_kbps(),
            link_capacity_mbps: cap,
            link_rtt_s: rtt,
        }
    }

    pub fn step(&mut self, level: usize) -> Result<(StreamObservation, StepOutcome), EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeDone);
        }
        let levels = self.video.level_count();
        if level >= levels {
            return Err(EnvError::InvalidLevel { level, levels });
        }
        let size = self.video.chunk_size(self.next_chunk, level);
        let megabits = size * 8.0 / 1e6;
        let transfer =
            transfer_time_s(&self.trace, self.link.capacity_mbps, self.clock_s, megabits);
        let delay = transfer + self.link.rtt_s;
        self.clock_s += delay;

        let rebuffer = (delay - self.buffer_s).max(0.0);
        self.buffer_s = (self.buffer_s - delay).max(0.0) + self.video.chunk_duration_s();
        let mut sleep = 0.0;
        if self.buffer_s > self.player.buffer_cap_s {
            sleep = self.buffer_s - self.player.buffer_cap_s;
            self.buffer_s = self.player.buffer_cap_s;
            self.clock_s += sleep;
        }

        self.throughput_hist.pop_front();
        self.throughput_hist.push_back(megabits / transfer);
        self.delay_hist.pop_front();
        self.delay_hist.push_back(delay);
        self.next_chunk += 1;
        self.last_level = level;

        let outcome = StepOutcome {
            delay_s: delay,
            rebuffer_s: rebuffer,
            sleep_s: sleep,
            chunk_size_bytes: size,
            level,
            done: self.is_done(),
        };
        Ok((self.observation(), outcome))
    }
}
