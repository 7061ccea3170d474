//! Enrollment, closed-set identification and verification scoring.
//!
//! Each user is enrolled with genuine samples `1..=train_count`; genuine
//! samples `train_count+1..=train_count+test_count` are the tests. One
//! table of model-to-test distances feeds identification, the genuine
//! scores of both verification conditions, and the random-forgery impostor
//! scores. Skilled-forgery impostor scores match each user's forgeries
//! against that user's model. Scores are negated distances.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::corpus::{CorpusManifest, Signature, UserEntry};
use crate::features::{extract_features, DeltaConfig, FeatureError, FeatureMatrix};
use crate::matcher::{templates_distance, MatchError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("user {user} has {found} genuine signatures with indices 1..={needed} required")]
    InsufficientGenuine {
        user: u32,
        needed: usize,
        found: usize,
    },
    #[error("user {0} not in corpus")]
    UnknownUser(u32),
    #[error("no user models")]
    NoModels,
    #[error("window mismatch: model uses {model} points, test uses {test}")]
    WindowMismatch { model: u32, test: u32 },
    #[error("train_count and test_count must be positive")]
    EmptySplit,
    #[error("no skilled forgeries in corpus")]
    NoForgeries,
    #[error("user {user} sample {sample}: {source}")]
    Feature {
        user: u32,
        sample: u32,
        #[source]
        source: FeatureError,
    },
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// How many genuine signatures are used for enrollment and for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub train_count: usize,
    pub test_count: usize,
}

impl Default for Split {
    fn default() -> Self {
        Split {
            train_count: 5,
            test_count: 5,
        }
    }
}

/// Enrolled templates of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserModel {
    pub user_id: u32,
    pub templates: Vec<FeatureMatrix>,
    pub delta_config: DeltaConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub true_user: u32,
    pub sample_index: u32,
    pub predicted_user: u32,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    RandomForgery,
    SkilledForgery,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::RandomForgery => "random",
            Condition::SkilledForgery => "skilled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenuineScore {
    pub user_id: u32,
    pub sample_index: u32,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpostorScore {
    pub claimed_user_id: u32,
    pub source_user_id: u32,
    pub sample_index: u32,
    pub score: f64,
}

/// Genuine and impostor scores for one condition and window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub condition: Condition,
    pub delta_points: u32,
    pub genuine: Vec<GenuineScore>,
    pub impostor: Vec<ImpostorScore>,
    /// Users skipped because they have no skilled forgeries.
    pub skipped_users: Vec<u32>,
}

impl ScoreSet {
    pub fn genuine_scores(&self) -> Vec<f64> {
        self.genuine.iter().map(|s| s.score).collect()
    }

    pub fn impostor_scores(&self) -> Vec<f64> {
        self.impostor.iter().map(|s| s.score).collect()
    }
}

fn features(sig: &Signature, cfg: DeltaConfig) -> Result<FeatureMatrix, ProtocolError> {
    extract_features(sig, cfg).map_err(|source| ProtocolError::Feature {
        user: sig.user_id,
        sample: sig.sample_index,
        source,
    })
}

/// Genuine signatures with indices `first..first+count`, in order.
fn genuine_range(
    user: &UserEntry,
    first: usize,
    count: usize,
) -> Result<Vec<&Signature>, ProtocolError> {
    (first..first + count)
        .map(|i| {
            user.genuine_sample(i as u32)
                .ok_or(ProtocolError::InsufficientGenuine {
                    user: user.user_id,
                    needed: first + count - 1,
                    found: user.genuine.len(),
                })
        })
        .collect()
}

fn build_model(
    user: &UserEntry,
    cfg: DeltaConfig,
    train_count: usize,
) -> Result<UserModel, ProtocolError> {
    let templates = genuine_range(user, 1, train_count)?
        .into_iter()
        .map(|s| features(s, cfg))
        .collect::<Result<_, _>>()?;
    Ok(UserModel {
        user_id: user.user_id,
        templates,
        delta_config: cfg,
    })
}

/// Enrolls `user_id` on genuine samples `1..=train_count`.
pub fn enroll(
    corpus: &CorpusManifest,
    user_id: u32,
    cfg: DeltaConfig,
    train_count: usize,
) -> Result<UserModel, ProtocolError> {
    if train_count == 0 {
        return Err(ProtocolError::EmptySplit);
    }
    let user = corpus
        .user(user_id)
        .ok_or(ProtocolError::UnknownUser(user_id))?;
    build_model(user, cfg, train_count)
}

/// Picks the smallest distance, breaking ties toward the smaller user id.
fn argmin(candidates: impl Iterator<Item = (u32, f64)>) -> Option<(u32, f64)> {
    candidates.fold(None, |best, (user, d)| match best {
        Some((bu, bd)) if bd < d || (bd == d && bu < user) => Some((bu, bd)),
        _ => Some((user, d)),
    })
}

/// Returns the user whose model is closest to `test`, with that distance.
pub fn identify(models: &[UserModel], test: &FeatureMatrix) -> Result<(u32, f64), ProtocolError> {
    if models.is_empty() {
        return Err(ProtocolError::NoModels);
    }
    let mut distances = Vec::with_capacity(models.len());
    for m in models {
        if m.delta_config != test.delta_config {
            return Err(ProtocolError::WindowMismatch {
                model: m.delta_config.points(),
                test: test.delta_config.points(),
            });
        }
        distances.push((m.user_id, templates_distance(&m.templates, test)?));
    }
    Ok(argmin(distances.into_iter()).expect("at least one model"))
}

/// Extracted features and cached distances for one corpus and window.
///
/// The model-by-test distance table is computed once, in parallel, and
/// shared by identification and both verification conditions. Cells are
/// addressed by index, so results do not depend on scheduling.
pub struct Experiment {
    cfg: DeltaConfig,
    models: Vec<UserModel>,
    /// Test signatures, grouped by user in model order.
    tests: Vec<FeatureMatrix>,
    /// Model index owning each test.
    test_owner: Vec<usize>,
    /// `(model index, forgery)` for every skilled forgery.
    forgeries: Vec<(usize, FeatureMatrix)>,
    skipped_users: Vec<u32>,
    table: OnceLock<Result<Vec<f64>, MatchError>>,
}

impl Experiment {
    pub fn prepare(
        corpus: &CorpusManifest,
        cfg: DeltaConfig,
        split: Split,
    ) -> Result<Self, ProtocolError> {
        if split.train_count == 0 || split.test_count == 0 {
            return Err(ProtocolError::EmptySplit);
        }
        if corpus.users.is_empty() {
            return Err(ProtocolError::NoModels);
        }
        for user in &corpus.users {
            genuine_range(user, 1, split.train_count + split.test_count)?;
        }

        type Prepared = (UserModel, Vec<FeatureMatrix>, Vec<FeatureMatrix>);
        let per_user: Vec<Prepared> = corpus
            .users
            .par_iter()
            .map(|user| {
                let model = build_model(user, cfg, split.train_count)?;
                let tests = genuine_range(user, split.train_count + 1, split.test_count)?
                    .into_par_iter()
                    .map(|s| features(s, cfg))
                    .collect::<Result<Vec<_>, _>>()?;
                let forgeries = user
                    .skilled
                    .par_iter()
                    .map(|s| features(s, cfg))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((model, tests, forgeries))
            })
            .collect::<Result<_, ProtocolError>>()?;

        let mut models = Vec::with_capacity(per_user.len());
        let mut tests = Vec::new();
        let mut test_owner = Vec::new();
        let mut forgeries = Vec::new();
        let mut skipped_users = Vec::new();
        for (idx, (model, user_tests, user_forgeries)) in per_user.into_iter().enumerate() {
            if user_forgeries.is_empty() {
                skipped_users.push(model.user_id);
            }
            test_owner.extend(std::iter::repeat_n(idx, user_tests.len()));
            tests.extend(user_tests);
            forgeries.extend(user_forgeries.into_iter().map(|f| (idx, f)));
            models.push(model);
        }
        Ok(Experiment {
            cfg,
            models,
            tests,
            test_owner,
            forgeries,
            skipped_users,
            table: OnceLock::new(),
        })
    }

    pub fn delta_config(&self) -> DeltaConfig {
        self.cfg
    }

    pub fn models(&self) -> &[UserModel] {
        &self.models
    }

    pub fn tests(&self) -> &[FeatureMatrix] {
        &self.tests
    }

    /// Row-major `tests x models` distances.
    pub fn distance_table(&self) -> Result<&[f64], ProtocolError> {
        let table = self.table.get_or_init(|| {
            let rows: Vec<Vec<f64>> = self
                .tests
                .par_iter()
                .map(|test| {
                    self.models
                        .iter()
                        .map(|m| templates_distance(&m.templates, test))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?;
            Ok(rows.concat())
        });
        table
            .as_deref()
            .map_err(|e| ProtocolError::Match(e.clone()))
    }

    fn row<'a>(&self, table: &'a [f64], test: usize) -> &'a [f64] {
        let n = self.models.len();
        &table[test * n..(test + 1) * n]
    }

    pub fn trials(&self) -> Result<Vec<Trial>, ProtocolError> {
        let table = self.distance_table()?;
        Ok(self
            .tests
            .iter()
            .enumerate()
            .map(|(t, test)| {
                let row = self.row(table, t);
                let (predicted_user, distance) =
                    argmin(self.models.iter().zip(row).map(|(m, d)| (m.user_id, *d)))
                        .expect("at least one model");
                Trial {
                    true_user: self.models[self.test_owner[t]].user_id,
                    sample_index: test.sample_index,
                    predicted_user,
                    distance,
                }
            })
            .collect())
    }

    fn genuine_scores(&self, table: &[f64]) -> Vec<GenuineScore> {
        self.tests
            .iter()
            .enumerate()
            .map(|(t, test)| {
                let owner = self.test_owner[t];
                GenuineScore {
                    user_id: self.models[owner].user_id,
                    sample_index: test.sample_index,
                    score: -self.row(table, t)[owner],
                }
            })
            .collect()
    }

    pub fn random_scores(&self) -> Result<ScoreSet, ProtocolError> {
        let table = self.distance_table()?;
        let mut impostor =
            Vec::with_capacity(self.tests.len() * self.models.len().saturating_sub(1));
        for (t, test) in self.tests.iter().enumerate() {
            let owner = self.test_owner[t];
            for (m, d) in self.row(table, t).iter().enumerate() {
                if m != owner {
                    impostor.push(ImpostorScore {
                        claimed_user_id: self.models[m].user_id,
                        source_user_id: self.models[owner].user_id,
                        sample_index: test.sample_index,
                        score: -d,
                    });
                }
            }
        }
        Ok(ScoreSet {
            condition: Condition::RandomForgery,
            delta_points: self.cfg.points(),
            genuine: self.genuine_scores(table),
            impostor,
            skipped_users: Vec::new(),
        })
    }

    pub fn skilled_scores(&self) -> Result<ScoreSet, ProtocolError> {
        if self.forgeries.is_empty() {
            return Err(ProtocolError::NoForgeries);
        }
        let table = self.distance_table()?;
        let distances = self
            .forgeries
            .par_iter()
            .map(|(m, f)| templates_distance(&self.models[*m].templates, f))
            .collect::<Result<Vec<_>, _>>()?;
        let impostor = self
            .forgeries
            .iter()
            .zip(distances)
            .map(|((m, f), d)| ImpostorScore {
                claimed_user_id: self.models[*m].user_id,
                source_user_id: f.forger_id.unwrap_or(0),
                sample_index: f.sample_index,
                score: -d,
            })
            .collect();
        Ok(ScoreSet {
            condition: Condition::SkilledForgery,
            delta_points: self.cfg.points(),
            genuine: self.genuine_scores(table),
            impostor,
            skipped_users: self.skipped_users.clone(),
        })
    }
}

pub fn run_identification(
    corpus: &CorpusManifest,
    cfg: DeltaConfig,
    split: Split,
) -> Result<Vec<Trial>, ProtocolError> {
    Experiment::prepare(corpus, cfg, split)?.trials()
}

pub fn run_verification_random(
    corpus: &CorpusManifest,
    cfg: DeltaConfig,
    split: Split,
) -> Result<ScoreSet, ProtocolError> {
    Experiment::prepare(corpus, cfg, split)?.random_scores()
}

pub fn run_verification_skilled(
    corpus: &CorpusManifest,
    cfg: DeltaConfig,
    split: Split,
) -> Result<ScoreSet, ProtocolError> {
    Experiment::prepare(corpus, cfg, split)?.skilled_scores()
}
