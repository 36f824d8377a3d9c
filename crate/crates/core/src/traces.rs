//! Throughput traces: loading the two-column cooked format and generating
//! synthetic traces.
//!
//! A trace is read as a piecewise-constant bandwidth signal: sample `i` holds
//! from `time[i]` until `time[i + 1]`. The final sample only marks the end of
//! the cycle, so the trace repeats with period `time[last] - time[first]`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("invalid trace {id}: {msg}")]
    Invalid { id: String, msg: String },
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("no trace files found in {0}")]
    EmptyDir(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time_s: f64,
    pub bandwidth_mbps: f64,
}

impl TraceSample {
    pub fn new(time_s: f64, bandwidth_mbps: f64) -> Self {
        Self {
            time_s,
            bandwidth_mbps,
        }
    }
}

/// Validated, immutable bandwidth trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputTrace {
    id: String,
    samples: Vec<TraceSample>,
}

impl ThroughputTrace {
    pub fn new(id: impl Into<String>, samples: Vec<TraceSample>) -> Result<Self, TraceError> {
        let id = id.into();
        let invalid = |msg: String| TraceError::Invalid {
            id: id.clone(),
            msg,
        };
        if samples.len() < 2 {
            return Err(invalid(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(samples[0].time_s.is_finite() && samples[0].time_s >= 0.0) {
            return Err(invalid(format!(
                "first time must be finite and >= 0, got {}",
                samples[0].time_s
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.bandwidth_mbps.is_finite() && s.bandwidth_mbps > 0.0) {
                return Err(invalid(format!(
                    "sample {i}: bandwidth must be finite and > 0, got {}",
                    s.bandwidth_mbps
                )));
            }
            if i > 0 {
                let prev = samples[i - 1].time_s;
                if !(s.time_s.is_finite() && s.time_s > prev) {
                    return Err(invalid(format!(
                        "sample {i}: non-monotone time {} after {prev}",
                        s.time_s
                    )));
                }
            }
        }
        Ok(Self { id, samples })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn start_s(&self) -> f64 {
        self.samples[0].time_s
    }

    /// Length of one cycle of the trace.
    pub fn span_s(&self) -> f64 {
        self.samples[self.samples.len() - 1].time_s - self.samples[0].time_s
    }

    /// Number of constant-bandwidth segments in one cycle.
    pub fn segment_count(&self) -> usize {
        self.samples.len() - 1
    }

    /// Duration and bandwidth of segment `i`.
    pub fn segment(&self, i: usize) -> (f64, f64) {
        let a = self.samples[i];
        let b = self.samples[i + 1];
        (b.time_s - a.time_s, a.bandwidth_mbps)
    }

    /// Segment index containing trace-clock time `clock_s` (measured from the
    /// first sample, wrapping cyclically) and the time already elapsed inside it.
    pub fn locate(&self, clock_s: f64) -> (usize, f64) {
        let pos = self.start_s() + clock_s.rem_euclid(self.span_s());
        // last index with time <= pos
        let idx = self.samples.partition_point(|s| s.time_s <= pos);
        let seg = idx.saturating_sub(1).min(self.segment_count() - 1);
        let elapsed = (pos - self.samples[seg].time_s).max(0.0);
        (seg, elapsed)
    }

    /// Bandwidth in effect at trace-clock time `clock_s`.
    pub fn bandwidth_at(&self, clock_s: f64) -> f64 {
        self.segment(self.locate(clock_s).0).1
    }

    pub fn min_bandwidth(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.bandwidth_mbps)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_bandwidth(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.bandwidth_mbps)
            .fold(0.0, f64::max)
    }
}

/// Parse the two-column text format. `id` names the resulting trace and
/// `path` is only used in error messages.
pub fn parse_trace(id: &str, path: &Path, text: &str) -> Result<ThroughputTrace, TraceError> {
    let mut samples = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| TraceError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let mut fields = line.split_whitespace();
        let (Some(t), Some(bw), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!(
                "expected `time_s bandwidth_mbps`, got {line:?}"
            )));
        };
        let t: f64 = t
            .parse()
            .map_err(|e| parse_err(format!("bad time {t:?}: {e}")))?;
        let bw: f64 = bw
            .parse()
            .map_err(|e| parse_err(format!("bad bandwidth {bw:?}: {e}")))?;
        samples.push(TraceSample::new(t, bw));
    }
    ThroughputTrace::new(id, samples)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<ThroughputTrace, TraceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_trace(&id, path, &text)
}

/// Render a trace in the same two-column format `load_trace` reads. Float
/// formatting is shortest-round-trip, so loading the output reproduces the
/// trace exactly.
pub fn format_trace(trace: &ThroughputTrace) -> String {
    let mut out = String::with_capacity(trace.samples.len() * 16);
    for s in &trace.samples {
        out.push_str(&format!("{} {}\n", s.time_s, s.bandwidth_mbps));
    }
    out
}

pub fn write_trace(trace: &ThroughputTrace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let path = path.as_ref();
    fs::write(path, format_trace(trace)).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load every regular file in `dir` as a trace, sorted by trace id.
pub fn load_trace_dir(dir: impl AsRef<Path>) -> Result<Vec<ThroughputTrace>, TraceError> {
    let dir = dir.as_ref();
    let io_err = |source| TraceError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        let hidden = path
            .file_name()
            .map(|n| n.to_string_lossy().starts_with('.'))
            .unwrap_or(true);
        if path.is_file() && !hidden {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(TraceError::EmptyDir(dir.to_path_buf()));
    }
    let mut traces = paths
        .iter()
        .map(load_trace)
        .collect::<Result<Vec<_>, _>>()?;
    traces.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(traces)
}

/// Synthetic trace generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceKind {
    Constant {
        level_mbps: f64,
    },
    /// Alternates `low_mbps` and `high_mbps`, holding each for `period_s`.
    Step {
        low_mbps: f64,
        high_mbps: f64,
        period_s: f64,
    },
    /// Each sample keeps the previous rate with probability `p_stay`,
    /// otherwise jumps to a uniformly chosen different state.
    Markov {
        states_mbps: Vec<f64>,
        p_stay: f64,
    },
}

impl TraceKind {
    fn validate(&self) -> Result<(), TraceError> {
        let positive = |x: f64, what: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(TraceError::Params(format!("{what} must be > 0, got {x}")))
            }
        };
        match self {
            TraceKind::Constant { level_mbps } => positive(*level_mbps, "level_mbps"),
            TraceKind::Step {
                low_mbps,
                high_mbps,
                period_s,
            } => {
                positive(*low_mbps, "low_mbps")?;
                positive(*high_mbps, "high_mbps")?;
                positive(*period_s, "period_s")
            }
            TraceKind::Markov {
                states_mbps,
                p_stay,
            } => {
                if states_mbps.is_empty() {
                    return Err(TraceError::Params("markov needs at least one state".into()));
                }
                for &s in states_mbps {
                    positive(s, "markov state")?;
                }
                if !(0.0..=1.0).contains(p_stay) {
                    return Err(TraceError::Params(format!(
                        "p_stay must lie in [0, 1], got {p_stay}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Declared bandwidth envelope `[min, max]` of the generator.
    pub fn envelope(&self) -> (f64, f64) {
        match self {
            TraceKind::Constant { level_mbps } => (*level_mbps, *level_mbps),
            TraceKind::Step {
                low_mbps,
                high_mbps,
                ..
            } => (low_mbps.min(*high_mbps), low_mbps.max(*high_mbps)),
            TraceKind::Markov { states_mbps, .. } => (
                states_mbps.iter().copied().fold(f64::INFINITY, f64::min),
                states_mbps.iter().copied().fold(0.0, f64::max),
            ),
        }
    }
}

/// Generate a trace sampled at `0, dt, 2dt, ...` up to `duration_s`.
pub fn synth_trace(
    id: impl Into<String>,
    kind: &TraceKind,
    duration_s: f64,
    dt_s: f64,
    seed: u64,
) -> Result<ThroughputTrace, TraceError> {
    kind.validate()?;
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(TraceError::Params(format!(
            "duration_s must be > 0, got {duration_s}"
        )));
    }
    if !(dt_s.is_finite() && dt_s > 0.0 && dt_s <= duration_s) {
        return Err(TraceError::Params(format!(
            "dt_s must lie in (0, duration_s], got {dt_s}"
        )));
    }
    let n = (duration_s / dt_s + 1e-9).floor() as usize + 1;
    let times = (0..n).map(|i| i as f64 * dt_s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let samples = match kind {
        TraceKind::Constant { level_mbps } => {
            times.map(|t| TraceSample::new(t, *level_mbps)).collect()
        }
        TraceKind::Step {
            low_mbps,
            high_mbps,
            period_s,
        } => times
            .map(|t| {
                let phase = ((t + 1e-9) / period_s).floor() as u64;
                let bw = if phase.is_multiple_of(2) {
                    *low_mbps
                } else {
                    *high_mbps
                };
                TraceSample::new(t, bw)
            })
            .collect(),
        TraceKind::Markov {
            states_mbps,
            p_stay,
        } => {
            let k = states_mbps.len();
            let mut state = rng.gen_range(0..k);
            let mut out = Vec::with_capacity(n);
            for (i, t) in times.enumerate() {
                if i > 0 && k > 1 && rng.gen::<f64>() >= *p_stay {
                    let jump = rng.gen_range(1..k);
                    state = (state + jump) % k;
                }
                out.push(TraceSample::new(t, states_mbps[state]));
            }
            out
        }
    };
    ThroughputTrace::new(id, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<ThroughputTrace, TraceError> {
        parse_trace("t", Path::new("t"), text)
    }

    #[test]
    fn parses_two_columns() {
        let t = parse("0.0 1.5\n4.0 2.5").unwrap();
        assert_eq!(
            t.samples(),
            &[TraceSample::new(0.0, 1.5), TraceSample::new(4.0, 2.5)]
        );
    }

    #[test]
    fn rejects_repeated_time() {
        let err = parse("0.0 1.5\n0.0 2.5").unwrap_err();
        assert!(matches!(err, TraceError::Invalid { .. }), "{err}");
        assert!(err.to_string().contains("non-monotone"));
    }

    #[test]
    fn keeps_nonzero_start() {
        let t = parse("5.0 1.0\n9.0 1.0\n13.0 2.0").unwrap();
        assert_eq!(t.samples().len(), 3);
        assert_eq!(t.start_s(), 5.0);
        assert_eq!(t.span_s(), 8.0);
    }

    #[test]
    fn tolerates_crlf_and_blank_lines() {
        let t = parse("0 1\r\n\r\n2 3\r\n").unwrap();
        assert_eq!(t.samples().len(), 2);
    }

    #[test]
    fn parse_error_names_line() {
        match parse("0 1\n1 x\n").unwrap_err() {
            TraceError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            parse("0 1 2\n").unwrap_err(),
            TraceError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn rejects_nonpositive_bandwidth_and_short_traces() {
        assert!(parse("0 1\n1 0\n").is_err());
        assert!(parse("0 1\n1 -2\n").is_err());
        assert!(parse("0 1\n").is_err());
    }

    #[test]
    fn locate_wraps() {
        let t = parse("0 1\n2 4\n6 4").unwrap();
        assert_eq!(t.bandwidth_at(0.0), 1.0);
        assert_eq!(t.bandwidth_at(1.999), 1.0);
        assert_eq!(t.bandwidth_at(2.0), 4.0);
        assert_eq!(t.bandwidth_at(6.5), 1.0);
        let (seg, el) = t.locate(9.0);
        assert_eq!(seg, 1);
        assert!((el - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_generator() {
        let t = synth_trace("c", &TraceKind::Constant { level_mbps: 3.0 }, 40.0, 4.0, 0).unwrap();
        assert_eq!(t.samples().len(), 11);
        assert!(t.samples().iter().all(|s| s.bandwidth_mbps == 3.0));
    }

    #[test]
    fn step_generator() {
        let kind = TraceKind::Step {
            low_mbps: 1.0,
            high_mbps: 4.0,
            period_s: 8.0,
        };
        let t = synth_trace("s", &kind, 16.0, 4.0, 0).unwrap();
        let bws: Vec<f64> = t.samples().iter().map(|s| s.bandwidth_mbps).collect();
        assert_eq!(bws, vec![1.0, 1.0, 4.0, 4.0, 1.0]);
    }

    #[test]
    fn markov_generator_is_reproducible() {
        let kind = TraceKind::Markov {
            states_mbps: vec![0.5, 1.5, 3.0],
            p_stay: 0.8,
        };
        let a = synth_trace("m", &kind, 200.0, 1.0, 42).unwrap();
        let b = synth_trace("m", &kind, 200.0, 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples().len(), 201);
        assert!(a
            .samples()
            .iter()
            .all(|s| [0.5, 1.5, 3.0].contains(&s.bandwidth_mbps)));
        let c = synth_trace("m", &kind, 200.0, 1.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_generator_params() {
        let bad = [
            TraceKind::Constant { level_mbps: 0.0 },
            TraceKind::Markov {
                states_mbps: vec![1.0],
                p_stay: 1.5,
            },
            TraceKind::Markov {
                states_mbps: vec![],
                p_stay: 0.5,
            },
        ];
        for kind in &bad {
            assert!(matches!(
                synth_trace("x", kind, 10.0, 1.0, 0),
                Err(TraceError::Params(_))
            ));
        }
        let ok = TraceKind::Constant { level_mbps: 1.0 };
        assert!(synth_trace("x", &ok, 0.0, 1.0, 0).is_err());
        assert!(synth_trace("x", &ok, 10.0, 0.0, 0).is_err());
    }

    #[test]
    fn dir_loading_sorts_by_id() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "0 1\n1 2\n").unwrap();
        fs::write(dir.path().join("a.txt"), "0 3\n1 2\n").unwrap();
        let traces = load_trace_dir(dir.path()).unwrap();
        let ids: Vec<_> = traces.iter().map(|t| t.id()).collect();
        assert_eq!(ids, ["a", "b"]);
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_trace_dir(empty.path()),
            Err(TraceError::EmptyDir(_))
        ));
    }

    fn markov_kind() -> impl Strategy<Value = TraceKind> {
        (prop::collection::vec(0.05f64..6.0, 1..6), 0.0f64..=1.0).prop_map(
            |(states_mbps, p_stay)| TraceKind::Markov {
                states_mbps,
                p_stay,
            },
        )
    }

    proptest! {
        #[test]
        fn generated_traces_are_valid_and_round_trip(
            kind in markov_kind(),
            seed in any::<u64>(),
            dt in 0.1f64..5.0,
        ) {
            let t = synth_trace("p", &kind, 60.0, dt, seed).unwrap();
            let (lo, hi) = kind.envelope();
            for s in t.samples() {
                prop_assert!(s.bandwidth_mbps >= lo && s.bandwidth_mbps <= hi);
            }
            prop_assert_eq!(t.samples().last().unwrap().time_s <= 60.0 + 1e-9, true);
            let back = parse_trace("p", Path::new("p"), &format_trace(&t)).unwrap();
            prop_assert_eq!(back, t.clone());
            let again = synth_trace("p", &kind, 60.0, dt, seed).unwrap();
            prop_assert_eq!(again, t);
        }
    }
}
