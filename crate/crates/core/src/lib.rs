//! Online signature recognition built around windowed derivative features
//! and dynamic time warping.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`corpus`] reads, writes and synthesizes pen trajectories.
//! 2. [`features`] turns a trajectory into the 8-column normalized matrix
//!    `[x, y, p, dx, dy, dp, ddx, ddy]`, with derivatives estimated either by a
//!    one-sample difference or by a least-squares regression over a window
//!    of `P` points.
//! 3. [`matcher`] computes the DTW distance between two feature matrices.
//! 4. [`protocol`] enrolls users and produces identification trials and
//!    verification score sets (random and skilled forgeries).
//! 5. [`evaluation`] reduces those to identification rate, DET points,
//!    minimum detection cost and EER, and sweeps the window length.

pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod matcher;
pub mod output;
pub mod protocol;

pub use corpus::{
    demo_signal, generate_corpus, generate_corpus_with, load_corpus, parse_signature, write_corpus,
    write_signature, CorpusManifest, Sample, Signature, SignatureKind, SynthParams, UserEntry,
};
pub use evaluation::{
    det_points, eer, evaluate_window, identification_rate, min_dcf, sweep, DcfParams, DetCurve,
    DetPoint, EvalReport, WindowEvaluation,
};
pub use features::{
    centroid_center, delta, delta_delta, delta_regression, extract_features, simple_diff, zscore,
    DeltaConfig, FeatureMatrix, FEATURE_DIM,
};
pub use matcher::{dtw, dtw_oracle, model_distance, DtwResult};
pub use protocol::{
    enroll, identify, run_identification, run_verification_random, run_verification_skilled,
    Condition, ScoreSet, Split, Trial, UserModel,
};
