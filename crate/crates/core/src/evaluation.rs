//! Metrics over identification trials and verification scores, and the
//! sweep over derivative window lengths.
//!
//! A claim is accepted when `score >= threshold`. The DET sweep visits
//! `-inf`, every distinct observed score, and `+inf`; every error rate is
//! piecewise constant between observed scores, so these thresholds reach
//! every attainable `(p_fa, p_miss)` pair.

use crate::corpus::CorpusManifest;
use crate::features::{DeltaConfig, FeatureError};
use crate::protocol::{Experiment, ProtocolError, ScoreSet, Split, Trial};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no identification trials")]
    NoTrials,
    #[error("{0} score population is empty")]
    EmptyPopulation(&'static str),
    #[error("score set contains a non-finite score")]
    NonFinite,
    #[error("invalid DCF parameters: {0}")]
    InvalidParams(String),
    #[error("no window lengths given")]
    NoWindows,
    #[error(transparent)]
    Window(#[from] FeatureError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Costs and target prior of the detection cost function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfParams {
    pub c_miss: f64,
    pub c_fa: f64,
    pub p_target: f64,
}

impl DcfParams {
    pub fn new(c_miss: f64, c_fa: f64, p_target: f64) -> Result<Self, EvalError> {
        if !(c_miss > 0.0 && c_miss.is_finite()) || !(c_fa > 0.0 && c_fa.is_finite()) {
            return Err(EvalError::InvalidParams("costs must be positive".into()));
        }
        if !(p_target > 0.0 && p_target < 1.0) {
            return Err(EvalError::InvalidParams(
                "p_target must lie in (0, 1)".into(),
            ));
        }
        Ok(DcfParams {
            c_miss,
            c_fa,
            p_target,
        })
    }

    pub fn cost(&self, p_miss: f64, p_fa: f64) -> f64 {
        self.c_miss * p_miss * self.p_target + self.c_fa * p_fa * (1.0 - self.p_target)
    }
}

impl Default for DcfParams {
    fn default() -> Self {
        DcfParams {
            c_miss: 10.0,
            c_fa: 1.0,
            p_target: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_miss: f64,
}

/// Operating points ordered by strictly increasing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

pub fn identification_rate(trials: &[Trial]) -> Result<f64, EvalError> {
    if trials.is_empty() {
        return Err(EvalError::NoTrials);
    }
    let correct = trials
        .iter()
        .filter(|t| t.predicted_user == t.true_user)
        .count();
    Ok(correct as f64 / trials.len() as f64)
}

fn sorted_finite(scores: &[f64], name: &'static str) -> Result<Vec<f64>, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyPopulation(name));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// DET sweep over raw genuine and impostor scores.
pub fn det_curve(genuine: &[f64], impostor: &[f64]) -> Result<DetCurve, EvalError> {
    let genuine = sorted_finite(genuine, "genuine")?;
    let impostor = sorted_finite(impostor, "impostor")?;
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);

    let mut thresholds: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push(DetPoint {
        threshold: f64::NEG_INFINITY,
        p_fa: 1.0,
        p_miss: 0.0,
    });
    // Counts of scores strictly below the current threshold.
    let (mut g_below, mut i_below) = (0usize, 0usize);
    for &theta in &thresholds {
        while g_below < genuine.len() && genuine[g_below] < theta {
            g_below += 1;
        }
        while i_below < impostor.len() && impostor[i_below] < theta {
            i_below += 1;
        }
        points.push(DetPoint {
            threshold: theta,
            p_fa: (impostor.len() - i_below) as f64 / ni,
            p_miss: g_below as f64 / ng,
        });
    }
    points.push(DetPoint {
        threshold: f64::INFINITY,
        p_fa: 0.0,
        p_miss: 1.0,
    });
    Ok(DetCurve { points })
}

pub fn det_points(scores: &ScoreSet) -> Result<DetCurve, EvalError> {
    det_curve(&scores.genuine_scores(), &scores.impostor_scores())
}

/// Minimum of the detection cost over a DET curve and the smallest
/// threshold attaining it.
pub fn min_dcf_on_curve(curve: &DetCurve, params: &DcfParams) -> (f64, f64) {
    curve
        .points
        .iter()
        .fold((f64::INFINITY, f64::NAN), |(best, at), p| {
            let c = params.cost(p.p_miss, p.p_fa);
            if c < best {
                (c, p.threshold)
            } else {
                (best, at)
            }
        })
}

pub fn min_dcf(scores: &ScoreSet, params: &DcfParams) -> Result<(f64, f64), EvalError> {
    Ok(min_dcf_on_curve(&det_points(scores)?, params))
}

/// Mean of `p_fa` and `p_miss` at the first sweep point where they are
/// closest.
pub fn eer_on_curve(curve: &DetCurve) -> f64 {
    let mut best_gap = f64::INFINITY;
    let mut value = f64::NAN;
    for p in &curve.points {
        let gap = (p.p_fa - p.p_miss).abs();
        if gap < best_gap {
            best_gap = gap;
            value = 0.5 * (p.p_fa + p.p_miss);
        }
    }
    value
}

pub fn eer(scores: &ScoreSet) -> Result<f64, EvalError> {
    Ok(eer_on_curve(&det_points(scores)?))
}

/// Scalar results for one window length.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub delta_points: u32,
    pub identification_rate: f64,
    pub min_dcf_random: f64,
    pub threshold_random: f64,
    pub min_dcf_skilled: f64,
    pub threshold_skilled: f64,
    pub eer_random: f64,
    pub eer_skilled: f64,
    pub n_trials: usize,
    pub n_genuine: usize,
    pub n_random_impostor: usize,
    pub n_skilled_impostor: usize,
    pub dcf: DcfParams,
    pub skipped_users: Vec<u32>,
}

/// Everything computed for one window length.
#[derive(Debug, Clone)]
pub struct WindowEvaluation {
    pub report: EvalReport,
    pub trials: Vec<Trial>,
    pub random: ScoreSet,
    pub skilled: ScoreSet,
    pub det_random: DetCurve,
    pub det_skilled: DetCurve,
}

/// Runs identification and both verification conditions for one window,
/// extracting each signature's features once.
pub fn evaluate_window(
    corpus: &CorpusManifest,
    cfg: DeltaConfig,
    split: Split,
    params: &DcfParams,
) -> Result<WindowEvaluation, EvalError> {
    let experiment = Experiment::prepare(corpus, cfg, split)?;
    let trials = experiment.trials()?;
    let random = experiment.random_scores()?;
    let skilled = experiment.skilled_scores()?;
    let det_random = det_points(&random)?;
    let det_skilled = det_points(&skilled)?;
    let (min_dcf_random, threshold_random) = min_dcf_on_curve(&det_random, params);
    let (min_dcf_skilled, threshold_skilled) = min_dcf_on_curve(&det_skilled, params);
    let report = EvalReport {
        delta_points: cfg.points(),
        identification_rate: identification_rate(&trials)?,
        min_dcf_random,
        threshold_random,
        min_dcf_skilled,
        threshold_skilled,
        eer_random: eer_on_curve(&det_random),
        eer_skilled: eer_on_curve(&det_skilled),
        n_trials: trials.len(),
        n_genuine: random.genuine.len(),
        n_random_impostor: random.impostor.len(),
        n_skilled_impostor: skilled.impostor.len(),
        dcf: *params,
        skipped_users: skilled.skipped_users.clone(),
    };
    Ok(WindowEvaluation {
        report,
        trials,
        random,
        skilled,
        det_random,
        det_skilled,
    })
}

/// [`evaluate_window`] for each window length, in the order given.
pub fn sweep_detailed(
    corpus: &CorpusManifest,
    windows: &[u32],
    params: &DcfParams,
    split: Split,
) -> Result<Vec<WindowEvaluation>, EvalError> {
    if windows.is_empty() {
        return Err(EvalError::NoWindows);
    }
    let configs = windows
        .iter()
        .map(|&p| DeltaConfig::new(p))
        .collect::<Result<Vec<_>, _>>()?;
    configs
        .into_iter()
        .map(|cfg| evaluate_window(corpus, cfg, split, params))
        .collect()
}

pub fn sweep(
    corpus: &CorpusManifest,
    windows: &[u32],
    params: &DcfParams,
    split: Split,
) -> Result<Vec<EvalReport>, EvalError> {
    Ok(sweep_detailed(corpus, windows, params, split)?
        .into_iter()
        .map(|w| w.report)
        .collect())
}
