//! Per-chunk reward and episode QoE:
//! `QoE = Σ q(b_n) − μ Σ T_n − Σ |q(b_{n+1}) − q(b_n)|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rebuffer penalty of the linear variant.
pub const MU_LIN: f64 = 4.3;
/// Rebuffer penalty of the logarithmic variant.
pub const MU_LOG: f64 = 2.66;

#[derive(Debug, Error, PartialEq)]
pub enum QoeError {
    #[error("bitrate must be > 0 kbps, got {0}")]
    NonPositiveBitrate(f64),
    #[error("rebuffer must be >= 0 s, got {0}")]
    NegativeRebuffer(f64),
    #[error("{levels} bitrates but {rebuffers} rebuffer values")]
    LengthMismatch { levels: usize, rebuffers: usize },
    #[error("episode must contain at least one chunk")]
    Empty,
    #[error("invalid QoE variant: {0}")]
    Variant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QoeKind {
    Lin,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QoeVariant {
    pub kind: QoeKind,
    pub mu: f64,
    /// Reference bitrate of the log utility; unused by the linear variant.
    pub b_min_kbps: f64,
}

impl QoeVariant {
    /// Linear utility in Mbps with `μ = 4.3`.
    pub fn lin() -> Self {
        Self {
            kind: QoeKind::Lin,
            mu: MU_LIN,
            b_min_kbps: 0.0,
        }
    }

    /// Log utility `ln(b / b_min)` with `μ = 2.66`.
    pub fn log(b_min_kbps: f64) -> Self {
        Self {
            kind: QoeKind::Log,
            mu: MU_LOG,
            b_min_kbps,
        }
    }

    /// Variant by name; the log variant takes `b_min` from the lowest rung of `ladder_kbps`.
    pub fn from_name(name: &str, ladder_kbps: &[f64]) -> Result<Self, QoeError> {
        let v = match name {
            "lin" => Self::lin(),
            "log" => Self::log(ladder_kbps.first().copied().unwrap_or(0.0)),
            other => return Err(QoeError::Variant(format!("unknown variant {other:?}"))),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            QoeKind::Lin => "lin",
            QoeKind::Log => "log",
        }
    }

    pub fn validate(&self) -> Result<(), QoeError> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(QoeError::Variant(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        if self.kind == QoeKind::Log && !(self.b_min_kbps.is_finite() && self.b_min_kbps > 0.0) {
            return Err(QoeError::Variant(format!(
                "b_min must be > 0, got {}",
                self.b_min_kbps
            )));
        }
        Ok(())
    }

    /// `q(b)`; no validation, callers guarantee `bitrate_kbps > 0`.
    #[inline]
    pub fn utility(&self, bitrate_kbps: f64) -> f64 {
        match self.kind {
            QoeKind::Lin => bitrate_kbps / 1000.0,
            QoeKind::Log => (bitrate_kbps / self.b_min_kbps).ln(),
        }
    }
}

pub fn quality(variant: &QoeVariant, bitrate_kbps: f64) -> Result<f64, QoeError> {
    check_bitrate(bitrate_kbps)?;
    Ok(variant.utility(bitrate_kbps))
}

fn check_bitrate(b: f64) -> Result<(), QoeError> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(QoeError::NonPositiveBitrate(b))
    }
}

/// Reward for one chunk. For the first chunk pass its own bitrate as
/// `prev_bitrate_kbps` so the smoothness term vanishes.
pub fn chunk_reward(
    variant: &QoeVariant,
    bitrate_kbps: f64,
    prev_bitrate_kbps: f64,
    rebuffer_s: f64,
) -> Result<f64, QoeError> {
    check_bitrate(bitrate_kbps)?;
    check_bitrate(prev_bitrate_kbps)?;
    if !(rebuffer_s >= 0.0) {
        return Err(QoeError::NegativeRebuffer(rebuffer_s));
    }
    let q = variant.utility(bitrate_kbps);
    let q_prev = variant.utility(prev_bitrate_kbps);
    Ok(q - variant.mu * rebuffer_s - (q - q_prev).abs())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QoeBreakdown {
    pub total: f64,
    pub bitrate_sum: f64,
    pub rebuf_penalty: f64,
    pub smooth_penalty: f64,
}

/// Episode QoE with its three components. `total` is the sum of the
/// per-chunk rewards; the components are accumulated alongside it.
pub fn episode_qoe(
    variant: &QoeVariant,
    bitrates_kbps: &[f64],
    rebuffers_s: &[f64],
) -> Result<QoeBreakdown, QoeError> {
    if bitrates_kbps.len() != rebuffers_s.len() {
        return Err(QoeError::LengthMismatch {
            levels: bitrates_kbps.len(),
            rebuffers: rebuffers_s.len(),
        });
    }
    if bitrates_kbps.is_empty() {
        return Err(QoeError::Empty);
    }
    let mut out = QoeBreakdown::default();
    let mut prev = bitrates_kbps[0];
    for (&b, &t) in bitrates_kbps.iter().zip(rebuffers_s) {
        out.total += chunk_reward(variant, b, prev, t)?;
        let q = variant.utility(b);
        out.bitrate_sum += q;
        out.rebuf_penalty += variant.mu * t;
        out.smooth_penalty += (q - variant.utility(prev)).abs();
        prev = b;
    }
    Ok(out)
}
