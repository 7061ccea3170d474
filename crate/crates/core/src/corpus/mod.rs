//! Signature data model, on-disk format and corpus handling.

mod demo;
mod format;
mod layout;
mod synth;

use std::fmt;

pub use demo::{demo_signal, demo_signal_with_amplitude, DEMO_LEN};
pub use format::{parse_signature, write_signature, FormatError};
pub use layout::{load_corpus, signature_path, write_corpus, CorpusError};
pub use synth::{generate_corpus, generate_corpus_with, SynthError, SynthParams};

/// Inclusive tablet range of each channel, in raw tablet units.
pub const X_RANGE: (i32, i32) = (0, 12_700);
pub const Y_RANGE: (i32, i32) = (0, 9_700);
pub const P_RANGE: (i32, i32) = (0, 1_024);
pub const AZ_RANGE: (i32, i32) = (0, 3_600);
pub const AL_RANGE: (i32, i32) = (300, 900);

/// One tablet reading. `t` is a sample index; positions are in 0.01 mm and
/// angles in 0.1 degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sample {
    pub t: u32,
    pub x: i32,
    pub y: i32,
    pub p: i32,
    pub az: i32,
    pub al: i32,
}

impl Sample {
    /// Name of the first channel that falls outside its tablet range.
    pub fn out_of_range_channel(&self) -> Option<&'static str> {
        let checks = [
            ("x", self.x, X_RANGE),
            ("y", self.y, Y_RANGE),
            ("p", self.p, P_RANGE),
            ("az", self.az, AZ_RANGE),
            ("al", self.al, AL_RANGE),
        ];
        checks
            .into_iter()
            .find(|(_, v, (lo, hi))| v < lo || v > hi)
            .map(|(name, _, _)| name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignatureKind {
    Genuine,
    SkilledForgery,
}

impl SignatureKind {
    /// Token used in file headers and file names.
    pub fn as_str(self) -> &'static str {
        match self {
            SignatureKind::Genuine => "genuine",
            SignatureKind::SkilledForgery => "skilled",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "genuine" => Some(SignatureKind::Genuine),
            "skilled" => Some(SignatureKind::SkilledForgery),
            _ => None,
        }
    }
}

impl fmt::Display for SignatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reasons a [`Signature`] fails validation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("signature needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("sample times must be strictly increasing (row {row})")]
    NonMonotonicTime { row: usize },
    #[error("channel {channel} out of range at row {row}")]
    OutOfRange { channel: &'static str, row: usize },
    #[error("user and sample ids must be positive")]
    ZeroId,
    #[error("sample rate must be positive")]
    ZeroRate,
    #[error("skilled forgery requires a forger id different from the user id")]
    BadForger,
    #[error("genuine signature must not carry a forger id")]
    UnexpectedForger,
}

/// A timestamped pen trajectory with its metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub user_id: u32,
    pub sample_index: u32,
    pub kind: SignatureKind,
    pub forger_id: Option<u32>,
    pub sample_rate_hz: u32,
    pub samples: Vec<Sample>,
}

impl Signature {
    /// Builds a signature, checking every invariant of the data model.
    pub fn new(
        user_id: u32,
        sample_index: u32,
        kind: SignatureKind,
        forger_id: Option<u32>,
        sample_rate_hz: u32,
        samples: Vec<Sample>,
    ) -> Result<Self, SignatureError> {
        let sig = Signature {
            user_id,
            sample_index,
            kind,
            forger_id,
            sample_rate_hz,
            samples,
        };
        sig.validate()?;
        Ok(sig)
    }

    pub fn validate(&self) -> Result<(), SignatureError> {
        if self.user_id == 0 || self.sample_index == 0 {
            return Err(SignatureError::ZeroId);
        }
        if self.sample_rate_hz == 0 {
            return Err(SignatureError::ZeroRate);
        }
        match (self.kind, self.forger_id) {
            (SignatureKind::Genuine, Some(_)) => return Err(SignatureError::UnexpectedForger),
            (SignatureKind::SkilledForgery, None) => return Err(SignatureError::BadForger),
            (SignatureKind::SkilledForgery, Some(f)) if f == 0 || f == self.user_id => {
                return Err(SignatureError::BadForger)
            }
            _ => {}
        }
        if self.samples.len() < 2 {
            return Err(SignatureError::TooShort(self.samples.len()));
        }
        for (row, pair) in self.samples.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(SignatureError::NonMonotonicTime { row: row + 1 });
            }
        }
        for (row, s) in self.samples.iter().enumerate() {
            if let Some(channel) = s.out_of_range_channel() {
                return Err(SignatureError::OutOfRange { channel, row });
            }
        }
        Ok(())
    }

    /// Number of samples, `L`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// All signatures of one user, each list ordered by sample index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserEntry {
    pub user_id: u32,
    pub genuine: Vec<Signature>,
    pub skilled: Vec<Signature>,
}

impl UserEntry {
    /// Genuine signature with the given 1-based sample index.
    pub fn genuine_sample(&self, sample_index: u32) -> Option<&Signature> {
        self.genuine.iter().find(|s| s.sample_index == sample_index)
    }
}

/// A loaded or synthesized corpus: users in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub users: Vec<UserEntry>,
    pub seed: Option<u64>,
}

impl CorpusManifest {
    pub fn user(&self, user_id: u32) -> Option<&UserEntry> {
        self.users.iter().find(|u| u.user_id == user_id)
    }

    pub fn user_ids(&self) -> Vec<u32> {
        self.users.iter().map(|u| u.user_id).collect()
    }
}
