//! Output helpers shared by the CLI: atomic file writes, number formatting
//! with a fixed number of significant digits, and the CSV layouts.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::evaluation::{DetCurve, EvalReport};
use crate::features::{FeatureMatrix, FEATURE_NAMES};
use crate::protocol::{ScoreSet, Trial};

/// Significant digits used for every real number written to CSV or stdout.
pub const SIG_DIGITS: usize = 9;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Formats like C's `%.{digits}g`: shortest of fixed or scientific
/// notation, trailing zeros removed.
pub fn format_g(value: f64, digits: usize) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if value == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// [`format_g`] at [`SIG_DIGITS`].
pub fn fmt_real(value: f64) -> String {
    format_g(value, SIG_DIGITS)
}

/// Feature dump: header `x,y,p,dx,dy,dp,ddx,ddy`, one row per sample.
pub fn features_csv(features: &FeatureMatrix) -> String {
    let mut out = FEATURE_NAMES.join(",");
    out.push('\n');
    for row in &features.rows {
        push_row(&mut out, row.iter().map(|v| fmt_real(*v)));
    }
    out
}

/// Verification scores: `label,claimed_user,source_user,sample,score`.
pub fn scores_csv(scores: &ScoreSet) -> String {
    let mut out = String::from("label,claimed_user,source_user,sample,score\n");
    for g in &scores.genuine {
        push_row(
            &mut out,
            [
                "genuine".to_string(),
                g.user_id.to_string(),
                g.user_id.to_string(),
                g.sample_index.to_string(),
                fmt_real(g.score),
            ],
        );
    }
    for i in &scores.impostor {
        push_row(
            &mut out,
            [
                "impostor".to_string(),
                i.claimed_user_id.to_string(),
                i.source_user_id.to_string(),
                i.sample_index.to_string(),
                fmt_real(i.score),
            ],
        );
    }
    out
}

pub fn det_csv(curve: &DetCurve) -> String {
    let mut out = String::from("threshold,p_fa,p_miss\n");
    for p in &curve.points {
        push_row(&mut out, [p.threshold, p.p_fa, p.p_miss].map(fmt_real));
    }
    out
}

pub fn trials_csv(trials: &[Trial]) -> String {
    let mut out = String::from("true_user,sample,predicted_user,distance\n");
    for t in trials {
        push_row(
            &mut out,
            [
                t.true_user.to_string(),
                t.sample_index.to_string(),
                t.predicted_user.to_string(),
                fmt_real(t.distance),
            ],
        );
    }
    out
}

pub const REPORT_HEADER: &str = "delta_points,identification_rate,min_dcf_random,threshold_random,\
min_dcf_skilled,threshold_skilled,eer_random,eer_skilled,n_trials,n_genuine,n_random_impostor,\
n_skilled_impostor,c_miss,c_fa,p_target";

/// One row per report under [`REPORT_HEADER`].
pub fn reports_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        push_row(
            &mut out,
            [
                r.delta_points.to_string(),
                fmt_real(r.identification_rate),
                fmt_real(r.min_dcf_random),
                fmt_real(r.threshold_random),
                fmt_real(r.min_dcf_skilled),
                fmt_real(r.threshold_skilled),
                fmt_real(r.eer_random),
                fmt_real(r.eer_skilled),
                r.n_trials.to_string(),
                r.n_genuine.to_string(),
                r.n_random_impostor.to_string(),
                r.n_skilled_impostor.to_string(),
                fmt_real(r.dcf.c_miss),
                fmt_real(r.dcf.c_fa),
                fmt_real(r.dcf.p_target),
            ],
        );
    }
    out
}

fn push_row<S: AsRef<str>>(out: &mut String, fields: impl IntoIterator<Item = S>) {
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
}
