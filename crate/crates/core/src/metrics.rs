//! Detection and reconstruction scores for one trial.

use serde::{Deserialize, Serialize};

use crate::beam::{wrap_angle_diff, BeamParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of an estimated index set.
///
/// Conventions: precision is 1 when both sets are empty and 0 when only the
/// estimate is empty; recall is 1 when the truth is empty; F1 is 0 when
/// `P + R = 0`.
pub fn detection_metrics(truth: &[usize], estimate: &[usize]) -> Detection {
    let mut t = truth.to_vec();
    t.sort_unstable();
    t.dedup();
    let mut e = estimate.to_vec();
    e.sort_unstable();
    e.dedup();
    let hits = e.iter().filter(|i| t.binary_search(i).is_ok()).count() as f64;
    let precision = match (e.is_empty(), t.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => hits / e.len() as f64,
    };
    let recall = if t.is_empty() {
        1.0
    } else {
        hits / t.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Detection {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldScores {
    pub rmse: f64,
    /// `None` when either field is constant.
    pub corr: Option<f64>,
}

pub fn rss_metrics(truth_field: &[f64], est_field: &[f64]) -> Result<FieldScores> {
    if truth_field.len() != est_field.len() || truth_field.len() < 2 {
        return Err(Error::Config(format!(
            "field lengths must match and be at least 2, got {} and {}",
            truth_field.len(),
            est_field.len()
        )));
    }
    let m = truth_field.len() as f64;
    let sq: f64 = truth_field
        .iter()
        .zip(est_field)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    let rmse = (sq / m).sqrt();

    let mean = |v: &[f64]| v.iter().sum::<f64>() / m;
    let (mt, me) = (mean(truth_field), mean(est_field));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in truth_field.iter().zip(est_field) {
        let (da, db) = (a - mt, b - me);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let corr = if sxx > 0.0 && syy > 0.0 {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    } else {
        None
    };
    Ok(FieldScores { rmse, corr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub az_err_deg: f64,
    pub el_err_deg: f64,
    pub beta_err_deg: f64,
    pub matched: usize,
}

fn center_distance(a: &BeamParams, b: &BeamParams) -> f64 {
    wrap_angle_diff(a.az0, b.az0).hypot(a.el0 - b.el0)
}

/// Minimum-cost assignment of rows to distinct columns (`rows <= cols`),
/// exact by dynamic programming over column subsets.
pub(crate) fn optimal_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    assert!(
        rows <= cols && cols <= 20,
        "assignment limited to 20 columns"
    );
    let states = 1usize << cols;
    let mut best = vec![f64::INFINITY; states];
    let mut choice = vec![usize::MAX; states];
    best[0] = 0.0;
    for mask in 0..states {
        let r = mask.count_ones() as usize;
        if r >= rows || !best[mask].is_finite() {
            continue;
        }
        for c in 0..cols {
            if mask & (1 << c) != 0 {
                continue;
            }
            let next = mask | (1 << c);
            let v = best[mask] + cost[r][c];
            if v < best[next] {
                best[next] = v;
                choice[next] = c;
            }
        }
    }
    let end = (0..states)
        .filter(|m| m.count_ones() as usize == rows)
        .min_by(|&a, &b| best[a].total_cmp(&best[b]))
        .expect("at least one full assignment");
    let mut out = vec![0; rows];
    let mut mask = end;
    for r in (0..rows).rev() {
        let c = choice[mask];
        out[r] = c;
        mask &= !(1 << c);
    }
    out
}

/// Mean absolute beam parameter errors in degrees over true-positive
/// satellites, paired by minimal total beam-center distance.
pub fn param_errors(
    truth_idx: &[usize],
    truth_params: &[BeamParams],
    est_idx: &[usize],
    est_params: &[BeamParams],
) -> Result<ParamErrors> {
    let tp_truth: Vec<&BeamParams> = truth_idx
        .iter()
        .zip(truth_params)
        .filter(|(i, _)| est_idx.contains(i))
        .map(|(_, p)| p)
        .collect();
    let tp_est: Vec<&BeamParams> = est_idx
        .iter()
        .zip(est_params)
        .filter(|(i, _)| truth_idx.contains(i))
        .map(|(_, p)| p)
        .collect();
    if tp_truth.is_empty() || tp_est.is_empty() {
        return Err(Error::NoMatches);
    }
    let (rows, cols, swap) = if tp_est.len() <= tp_truth.len() {
        (&tp_est, &tp_truth, false)
    } else {
        (&tp_truth, &tp_est, true)
    };
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| cols.iter().map(|c| center_distance(r, c)).collect())
        .collect();
    let assign = optimal_assignment(&cost);

    let (mut az, mut el, mut beta) = (0.0, 0.0, 0.0);
    for (r, &c) in assign.iter().enumerate() {
        let (e, t) = if swap {
            (cols[c], rows[r])
        } else {
            (rows[r], cols[c])
        };
        az += wrap_angle_diff(e.az0, t.az0).abs();
        el += (e.el0 - t.el0).abs();
        beta += (e.beta - t.beta).abs();
    }
    let n = assign.len() as f64;
    Ok(ParamErrors {
        az_err_deg: (az / n).to_degrees(),
        el_err_deg: (el / n).to_degrees(),
        beta_err_deg: (beta / n).to_degrees(),
        matched: assign.len(),
    })
}

/// Scores of one method on one trial. Undefined quantities are NaN and
/// named in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub k_true: usize,
    pub k_hat: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub rmse_rss: f64,
    pub pearson_corr: f64,
    pub az_err_deg: f64,
    pub el_err_deg: f64,
    pub beta_err_deg: f64,
    pub runtime_s: f64,
    pub flags: Vec<String>,
}

impl TrialReport {
    /// Report for a trial that could not be scored.
    pub fn failed(k_true: usize, flag: impl Into<String>) -> Self {
        Self {
            k_true,
            k_hat: 0,
            precision: f64::NAN,
            recall: f64::NAN,
            f1: f64::NAN,
            rmse_rss: f64::NAN,
            pearson_corr: f64::NAN,
            az_err_deg: f64::NAN,
            el_err_deg: f64::NAN,
            beta_err_deg: f64::NAN,
            runtime_s: 0.0,
            flags: vec![flag.into()],
        }
    }
}

/// Scores an estimate against the truth.
pub fn score_trial(
    truth_idx: &[usize],
    truth_params: &[BeamParams],
    truth_field: &[f64],
    est_idx: &[usize],
    est_params: &[BeamParams],
    est_field: &[f64],
    runtime_s: f64,
) -> Result<TrialReport> {
    let det = detection_metrics(truth_idx, est_idx);
    let field = rss_metrics(truth_field, est_field)?;
    let mut flags = Vec::new();
    let pearson_corr = field.corr.unwrap_or_else(|| {
        flags.push("constant_vector".to_string());
        f64::NAN
    });
    let pe = match param_errors(truth_idx, truth_params, est_idx, est_params) {
        Ok(p) => p,
        Err(Error::NoMatches) => {
            flags.push("no_matches".to_string());
            ParamErrors {
                az_err_deg: f64::NAN,
                el_err_deg: f64::NAN,
                beta_err_deg: f64::NAN,
                matched: 0,
            }
        }
        Err(e) => return Err(e),
    };
    Ok(TrialReport {
        k_true: truth_idx.len(),
        k_hat: est_idx.len(),
        precision: det.precision,
        recall: det.recall,
        f1: det.f1,
        rmse_rss: field.rmse,
        pearson_corr,
        az_err_deg: pe.az_err_deg,
        el_err_deg: pe.el_err_deg,
        beta_err_deg: pe.beta_err_deg,
        runtime_s,
        flags,
    })
}
