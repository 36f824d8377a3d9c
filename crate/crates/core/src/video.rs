//! Video description: bitrate ladder and per-chunk encoded sizes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bitrate ladder used when none is given, in kbps.
pub const DEFAULT_BITRATES_KBPS: [f64; 6] = [300.0, 750.0, 1200.0, 1850.0, 2850.0, 4300.0];
pub const DEFAULT_CHUNK_COUNT: usize = 48;
pub const DEFAULT_CHUNK_DURATION_S: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: malformed manifest: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    chunk_duration_s: f64,
    bitrates_kbps: Vec<f64>,
    /// `sizes_bytes[chunk][level]`
    sizes_bytes: Vec<Vec<f64>>,
}

impl VideoManifest {
    pub fn new(
        chunk_duration_s: f64,
        bitrates_kbps: Vec<f64>,
        sizes_bytes: Vec<Vec<f64>>,
    ) -> Result<Self, ManifestError> {
        let m = Self {
            chunk_duration_s,
            bitrates_kbps,
            sizes_bytes,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), ManifestError> {
        let bad = |msg: String| Err(ManifestError::Invalid(msg));
        if !(self.chunk_duration_s.is_finite() && self.chunk_duration_s > 0.0) {
            return bad(format!(
                "chunk_duration_s must be > 0, got {}",
                self.chunk_duration_s
            ));
        }
        validate_ladder(&self.bitrates_kbps)?;
        let levels = self.bitrates_kbps.len();
        if self.sizes_bytes.is_empty() {
            return bad("need at least one chunk".into());
        }
        for (n, row) in self.sizes_bytes.iter().enumerate() {
            if row.len() != levels {
                return bad(format!(
                    "chunk {n}: expected {levels} sizes, got {}",
                    row.len()
                ));
            }
            for (l, &size) in row.iter().enumerate() {
                if !(size.is_finite() && size > 0.0) {
                    return bad(format!("chunk {n} level {l}: size must be > 0, got {size}"));
                }
                if l > 0 && size < row[l - 1] {
                    return bad(format!(
                        "chunk {n} level {l}: size {size} smaller than level {} size {}",
                        l - 1,
                        row[l - 1]
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn chunk_duration_s(&self) -> f64 {
        self.chunk_duration_s
    }

    pub fn bitrates_kbps(&self) -> &[f64] {
        &self.bitrates_kbps
    }

    pub fn bitrate_kbps(&self, level: usize) -> f64 {
        self.bitrates_kbps[level]
    }

    pub fn top_bitrate_kbps(&self) -> f64 {
        self.bitrates_kbps[self.bitrates_kbps.len() - 1]
    }

    pub fn sizes_bytes(&self) -> &[Vec<f64>] {
        &self.sizes_bytes
    }

    pub fn chunk_sizes(&self, chunk: usize) -> &[f64] {
        &self.sizes_bytes[chunk]
    }

    pub fn chunk_size(&self, chunk: usize, level: usize) -> f64 {
        self.sizes_bytes[chunk][level]
    }

    pub fn chunk_count(&self) -> usize {
        self.sizes_bytes.len()
    }

    pub fn level_count(&self) -> usize {
        self.bitrates_kbps.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

fn validate_ladder(bitrates_kbps: &[f64]) -> Result<(), ManifestError> {
    if bitrates_kbps.len() < 2 {
        return Err(ManifestError::Invalid(format!(
            "need at least 2 bitrate levels, got {}",
            bitrates_kbps.len()
        )));
    }
    for (l, &b) in bitrates_kbps.iter().enumerate() {
        if !(b.is_finite() && b > 0.0) {
            return Err(ManifestError::Invalid(format!(
                "level {l}: bitrate must be > 0, got {b}"
            )));
        }
        if l > 0 && b <= bitrates_kbps[l - 1] {
            return Err(ManifestError::Invalid(format!(
                "bitrates must be strictly ascending: level {l} ({b}) <= level {} ({})",
                l - 1,
                bitrates_kbps[l - 1]
            )));
        }
    }
    Ok(())
}

/// Build a manifest whose chunk sizes are the nominal `bitrate * duration / 8`
/// bytes scaled by a uniform factor in `[1 - jitter, 1 + jitter]`. A running
/// max keeps each chunk's sizes non-decreasing in level.
pub fn synth_manifest(
    bitrates_kbps: &[f64],
    n_chunks: usize,
    chunk_duration_s: f64,
    jitter: f64,
    seed: u64,
) -> Result<VideoManifest, ManifestError> {
    validate_ladder(bitrates_kbps)?;
    if n_chunks == 0 {
        return Err(ManifestError::Invalid("n_chunks must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(ManifestError::Invalid(format!(
            "jitter must lie in [0, 1), got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = (0..n_chunks)
        .map(|_| {
            let mut running = 0.0f64;
            bitrates_kbps
                .iter()
                .map(|&kbps| {
                    let nominal = kbps * 1000.0 * chunk_duration_s / 8.0;
                    let u = if jitter > 0.0 {
                        rng.gen_range(-jitter..=jitter)
                    } else {
                        0.0
                    };
                    running = running.max(nominal * (1.0 + u));
                    running
                })
                .collect()
        })
        .collect();
    VideoManifest::new(chunk_duration_s, bitrates_kbps.to_vec(), sizes)
}

/// The 48-chunk, 4 s, six-level manifest with exact nominal sizes.
pub fn default_manifest() -> VideoManifest {
    synth_manifest(
        &DEFAULT_BITRATES_KBPS,
        DEFAULT_CHUNK_COUNT,
        DEFAULT_CHUNK_DURATION_S,
        0.0,
        0,
    )
    .expect("default ladder is valid")
}

pub fn parse_manifest(path: &Path, text: &str) -> Result<VideoManifest, ManifestError> {
    #[derive(Deserialize)]
    struct Raw {
        chunk_duration_s: f64,
        bitrates_kbps: Vec<f64>,
        sizes_bytes: Vec<Vec<f64>>,
    }
    let raw: Raw = serde_json::from_str(text).map_err(|source| ManifestError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    VideoManifest::new(raw.chunk_duration_s, raw.bitrates_kbps, raw.sizes_bytes)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<VideoManifest, ManifestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(path, &text)
}

pub fn save_manifest(
    manifest: &VideoManifest,
    path: impl AsRef<Path>,
) -> Result<(), ManifestError> {
    let path = path.as_ref();
    fs::write(path, manifest.to_json()).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
