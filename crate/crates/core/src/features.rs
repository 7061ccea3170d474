//! Feature extraction: centroid centering, derivative estimation and
//! per-column z-score.
//!
//! A signature of `L` samples becomes an `L x 8` matrix with columns
//! `[x, y, p, dx, dy, dp, ddx, ddy]`. The pen angles are not used.
//!
//! Derivatives are estimated with a window of `P` points (`P = 2M + 1`):
//!
//! * `P = 1`: one-sample difference, `d[l] = s[l] - s[l-1]`, with `d[0] = 0`.
//! * `P >= 3`: least-squares slope over `l-M ..= l+M`,
//!   `d[l] = sum_k k * s[l+k] / sum_k k^2`, where samples beyond either end
//!   are replicated from the boundary sample.
//!
//! Second derivatives apply the same estimator twice.

use crate::corpus::{Signature, SignatureKind};

pub const FEATURE_DIM: usize = 8;
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = ["x", "y", "p", "dx", "dy", "dp", "ddx", "ddy"];
pub const MAX_POINTS: u32 = 31;

/// Sample standard deviations below this are treated as zero variance.
pub const ZERO_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("window must be an odd number of points between 1 and {MAX_POINTS}, got {0}")]
    InvalidWindow(u32),
    #[error("empty input")]
    Empty,
    #[error("need at least 2 samples, got {0}")]
    TooShort(usize),
}

/// Window length `P` of the derivative estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeltaConfig {
    points: u32,
}

impl DeltaConfig {
    pub fn new(points: u32) -> Result<Self, FeatureError> {
        if points.is_multiple_of(2) || points > MAX_POINTS {
            return Err(FeatureError::InvalidWindow(points));
        }
        Ok(DeltaConfig { points })
    }

    pub fn points(self) -> u32 {
        self.points
    }

    /// `M = (P - 1) / 2`; zero selects the one-sample difference.
    pub fn half_width(self) -> usize {
        ((self.points - 1) / 2) as usize
    }
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig { points: 11 }
    }
}

/// Subtracts the mean point from every point.
pub fn centroid_center(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, FeatureError> {
    if points.is_empty() {
        return Err(FeatureError::Empty);
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
    let (cx, cy) = (sx / n, sy / n);
    Ok(points.iter().map(|&(x, y)| (x - cx, y - cy)).collect())
}

/// Regression slope over a `2m + 1` window with replicate padding.
pub fn delta_regression(signal: &[f64], m: usize) -> Vec<f64> {
    assert!(m >= 1, "regression half-width must be positive");
    let len = signal.len();
    if len == 0 {
        return Vec::new();
    }
    let denom = (m * (m + 1) * (2 * m + 1)) as f64 / 3.0;
    let at = |i: isize| signal[i.clamp(0, len as isize - 1) as usize];
    (0..len as isize)
        .map(|l| {
            let num: f64 = (1..=m as isize)
                .map(|k| k as f64 * (at(l + k) - at(l - k)))
                .sum();
            num / denom
        })
        .collect()
}

/// One-sample difference with a leading zero, preserving length.
pub fn simple_diff(signal: &[f64]) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    std::iter::once(0.0)
        .chain(signal.windows(2).map(|w| w[1] - w[0]))
        .collect()
}

pub fn delta(signal: &[f64], cfg: DeltaConfig) -> Vec<f64> {
    match cfg.half_width() {
        0 => simple_diff(signal),
        m => delta_regression(signal, m),
    }
}

pub fn delta_delta(signal: &[f64], cfg: DeltaConfig) -> Vec<f64> {
    delta(&delta(signal, cfg), cfg)
}

/// Standardizes with the sample standard deviation (divisor `L - 1`).
/// Zero-variance input maps to zeros and reports `true`.
pub fn zscore(signal: &[f64]) -> Result<(Vec<f64>, bool), FeatureError> {
    if signal.len() < 2 {
        return Err(FeatureError::TooShort(signal.len()));
    }
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    let var = signal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if std < ZERO_VARIANCE {
        return Ok((vec![0.0; signal.len()], true));
    }
    Ok((signal.iter().map(|v| (v - mean) / std).collect(), false))
}

/// Normalized feature sequence of one signature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub user_id: u32,
    pub sample_index: u32,
    pub kind: SignatureKind,
    pub forger_id: Option<u32>,
    pub rows: Vec<[f64; FEATURE_DIM]>,
    pub delta_config: DeltaConfig,
    /// Columns whose z-score found zero variance; those are all zeros.
    pub degenerate_columns: Vec<usize>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

pub fn extract_features(sig: &Signature, cfg: DeltaConfig) -> Result<FeatureMatrix, FeatureError> {
    let len = sig.samples.len();
    if len < 2 {
        return Err(FeatureError::TooShort(len));
    }
    let xy: Vec<(f64, f64)> = sig
        .samples
        .iter()
        .map(|s| (f64::from(s.x), f64::from(s.y)))
        .collect();
    let centered = centroid_center(&xy)?;
    let x: Vec<f64> = centered.iter().map(|c| c.0).collect();
    let y: Vec<f64> = centered.iter().map(|c| c.1).collect();
    let p: Vec<f64> = sig.samples.iter().map(|s| f64::from(s.p)).collect();

    let dx = delta(&x, cfg);
    let dy = delta(&y, cfg);
    let dp = delta(&p, cfg);
    let ddx = delta(&dx, cfg);
    let ddy = delta(&dy, cfg);

    let mut rows = vec![[0.0; FEATURE_DIM]; len];
    let mut degenerate_columns = Vec::new();
    for (c, raw) in [x, y, p, dx, dy, dp, ddx, ddy].iter().enumerate() {
        let (normalized, degenerate) = zscore(raw)?;
        if degenerate {
            degenerate_columns.push(c);
        }
        for (row, v) in rows.iter_mut().zip(normalized) {
            row[c] = v;
        }
    }

    Ok(FeatureMatrix {
        user_id: sig.user_id,
        sample_index: sig.sample_index,
        kind: sig.kind,
        forger_id: sig.forger_id,
        rows,
        delta_config: cfg,
        degenerate_columns,
    })
}
