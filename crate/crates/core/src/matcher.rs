//! Unconstrained dynamic time warping with Euclidean local cost.

use crate::features::FeatureMatrix;
use crate::protocol::UserModel;

/// Largest row count accepted by [`dtw_oracle`]; path count grows as the
/// Delannoy numbers.
pub const ORACLE_MAX_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("empty input sequence")]
    Empty,
    #[error("column count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("oracle limited to {ORACLE_MAX_ROWS} rows per input, got {0}x{1}")]
    TooLarge(usize, usize),
    #[error("user model has no templates")]
    EmptyModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwResult {
    /// Bottom-right cell of the accumulated cost matrix.
    pub accumulated: f64,
    /// `accumulated` divided by the row count of the first input.
    pub normalized: f64,
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_dims<R: AsRef<[f64]>>(a: &[R], b: &[R]) -> Result<usize, MatchError> {
    if a.is_empty() || b.is_empty() {
        return Err(MatchError::Empty);
    }
    let dim = a[0].as_ref().len();
    for row in a.iter().chain(b) {
        let d = row.as_ref().len();
        if d != dim {
            return Err(MatchError::DimensionMismatch(dim, d));
        }
    }
    Ok(dim)
}

/// DTW distance between two row sequences of equal width.
///
/// `D(i, j) = |a_i - b_j| + min(D(i-1, j), D(i, j-1), D(i-1, j-1))` with an
/// infinite border and `D(0, 0) = 0`, evaluated two rows at a time.
pub fn dtw<R: AsRef<[f64]>>(a: &[R], b: &[R]) -> Result<DtwResult, MatchError> {
    check_dims(a, b)?;
    Ok(accumulate(a, b, |x, y| euclidean(x.as_ref(), y.as_ref())))
}

/// [`dtw`] for fixed-width rows, letting the local cost unroll.
pub fn dtw_fixed<const D: usize>(a: &[[f64; D]], b: &[[f64; D]]) -> Result<DtwResult, MatchError> {
    if a.is_empty() || b.is_empty() {
        return Err(MatchError::Empty);
    }
    Ok(accumulate(a, b, |x, y| {
        let mut sum = 0.0;
        for k in 0..D {
            let d = x[k] - y[k];
            sum += d * d;
        }
        sum.sqrt()
    }))
}

#[inline(always)]
fn accumulate<R>(a: &[R], b: &[R], local: impl Fn(&R, &R) -> f64) -> DtwResult {
    let cols = b.len();
    let mut prev = vec![f64::INFINITY; cols + 1];
    let mut curr = vec![f64::INFINITY; cols + 1];
    let mut cost = vec![0.0; cols];
    prev[0] = 0.0;
    for row in a {
        for (c, other) in cost.iter_mut().zip(b) {
            *c = local(row, other);
        }
        let mut left = f64::INFINITY;
        curr[0] = left;
        for ((out, c), diag_up) in curr[1..].iter_mut().zip(&cost).zip(prev.windows(2)) {
            left = c + left.min(diag_up[0].min(diag_up[1]));
            *out = left;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let accumulated = prev[cols];
    DtwResult {
        accumulated,
        normalized: accumulated / a.len() as f64,
    }
}

/// Minimum summed cost over every monotone path from the first to the last
/// cell, by exhaustive enumeration. Test oracle for [`dtw`].
pub fn dtw_oracle<R: AsRef<[f64]>>(a: &[R], b: &[R]) -> Result<f64, MatchError> {
    check_dims(a, b)?;
    if a.len() > ORACLE_MAX_ROWS || b.len() > ORACLE_MAX_ROWS {
        return Err(MatchError::TooLarge(a.len(), b.len()));
    }
    fn walk<R: AsRef<[f64]>>(a: &[R], b: &[R], i: usize, j: usize, cost: f64, best: &mut f64) {
        let cost = cost + euclidean(a[i].as_ref(), b[j].as_ref());
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(cost);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, cost, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, cost, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, cost, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    Ok(best)
}

/// Smallest length-normalized DTW distance from any enrolled template to
/// `test`. Templates are the first argument, so each distance is divided by
/// the template's length.
pub fn model_distance(model: &UserModel, test: &FeatureMatrix) -> Result<f64, MatchError> {
    templates_distance(&model.templates, test)
}

pub(crate) fn templates_distance(
    templates: &[FeatureMatrix],
    test: &FeatureMatrix,
) -> Result<f64, MatchError> {
    if templates.is_empty() {
        return Err(MatchError::EmptyModel);
    }
    let mut best = f64::INFINITY;
    for t in templates {
        best = best.min(dtw_fixed(&t.rows, &test.rows)?.normalized);
    }
    Ok(best)
}
