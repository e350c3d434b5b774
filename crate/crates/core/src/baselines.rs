//! Reference estimators on the screened candidate set: Lasso, matching
//! pursuit, orthogonal matching pursuit and peak detection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{gain_vector, signature, BeamParams};
use crate::error::{Error, Result};
use crate::fit::{argmax, fit_single, FitBounds, LossPolicy, FREE_PARAMS};
use crate::inference::CandidateLooks;
use crate::select::{information_criterion, InfoCriterion, DEGENERATE_RSS_FLOOR};

/// Coefficients at or below this are treated as zero.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Unit-norm beam signatures, one per screened candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub columns: Vec<Vec<f64>>,
    /// Beam parameters behind each column, at unit amplitude.
    pub column_params: Vec<BeamParams>,
    /// Norm of each raw gain vector; a zero norm leaves an all-zero column.
    pub norms: Vec<f64>,
    /// Candidate index of each column.
    pub candidates: Vec<usize>,
}

impl Dictionary {
    /// Dictionary over explicit columns, normalized on entry.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        let n = columns.len();
        let mut out = Dictionary {
            columns: Vec::with_capacity(n),
            column_params: vec![BeamParams::new(0.0, 0.0, 1.0, 1.0); n],
            norms: Vec::with_capacity(n),
            candidates: (0..n).collect(),
        };
        for c in columns {
            let (unit, norm) = normalize(c);
            out.columns.push(unit);
            out.norms.push(norm);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// `Σ w_j c_j` over the given atoms.
    pub fn combine(&self, atoms: &[usize], coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        for (&j, &w) in atoms.iter().zip(coefficients) {
            for (o, c) in out.iter_mut().zip(&self.columns[j]) {
                *o += w * c;
            }
        }
        out
    }
}

fn normalize(mut v: Vec<f64>) -> (Vec<f64>, f64) {
    let norm = dot(&v, &v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    (v, norm)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits every candidate once against the raw measurements and keeps the
/// normalized gain shape of each fit.
pub fn build_dictionary(
    y: &[f64],
    candidates: &[CandidateLooks],
    bounds: &FitBounds,
    loss: &LossPolicy,
) -> Result<Dictionary> {
    if candidates.is_empty() {
        return Err(Error::Config(
            "dictionary needs at least one candidate".into(),
        ));
    }
    let cfg = loss.resolve(y);
    let fits: Vec<BeamParams> = candidates
        .par_iter()
        .map(|c| fit_single(y, &c.looks, bounds, &cfg).map(|f| f.params.with_amplitude(1.0)))
        .collect::<Result<_>>()?;
    let mut dict = Dictionary {
        columns: Vec::with_capacity(fits.len()),
        column_params: fits,
        norms: Vec::with_capacity(candidates.len()),
        candidates: candidates.iter().map(|c| c.index).collect(),
    };
    for (p, c) in dict.column_params.iter().zip(candidates) {
        let (unit, norm) = normalize(gain_vector(p, &c.looks));
        dict.columns.push(unit);
        dict.norms.push(norm);
    }
    Ok(dict)
}

/// Output of a baseline estimator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseEstimate {
    /// Candidate indices in order of selection.
    pub selected: Vec<usize>,
    /// Beam parameters with physical amplitudes, aligned with `selected`.
    pub params: Vec<BeamParams>,
    /// Dictionary column of each selection (empty for peak detection).
    pub atoms: Vec<usize>,
    /// Coefficients on the unit-norm columns.
    pub coefficients: Vec<f64>,
}

impl SparseEstimate {
    fn from_atoms(dict: &Dictionary, atoms: Vec<usize>, coefficients: Vec<f64>) -> Self {
        let (atoms, coefficients): (Vec<usize>, Vec<f64>) = atoms
            .into_iter()
            .zip(coefficients)
            .filter(|(_, w)| *w > SUPPORT_TOL)
            .unzip();
        let selected = atoms.iter().map(|&j| dict.candidates[j]).collect();
        let params = atoms
            .iter()
            .zip(&coefficients)
            .map(|(&j, &w)| {
                let amp = if dict.norms[j] > 0.0 {
                    w / dict.norms[j]
                } else {
                    0.0
                };
                dict.column_params[j].with_amplitude(amp)
            })
            .collect();
        Self {
            selected,
            params,
            atoms,
            coefficients,
        }
    }

    pub fn k_hat(&self) -> usize {
        self.selected.len()
    }
}

/// Nonnegative least squares `min ‖y - A w‖², w ≥ 0` (Lawson–Hanson) over
/// the given columns.
pub fn nnls(columns: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let k = columns.len();
    let mut w = vec![0.0; k];
    if k == 0 {
        return w;
    }
    let gram = DMatrix::from_fn(k, k, |i, j| dot(columns[i], columns[j]));
    let aty = DVector::from_fn(k, |i, _| dot(columns[i], y));
    let tol = 1e-12 * (1.0 + aty.amax());
    let mut passive = vec![false; k];

    let solve_passive = |passive: &[bool]| -> Vec<f64> {
        let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
        let g = DMatrix::from_fn(idx.len(), idx.len(), |a, b| gram[(idx[a], idx[b])]);
        let b = DVector::from_fn(idx.len(), |a, _| aty[idx[a]]);
        let sol = g
            .clone()
            .cholesky()
            .map(|c| c.solve(&b))
            .or_else(|| g.svd(true, true).solve(&b, 1e-14).ok())
            .unwrap_or_else(|| DVector::zeros(idx.len()));
        let mut z = vec![0.0; k];
        for (a, &i) in idx.iter().enumerate() {
            z[i] = sol[a];
        }
        z
    };

    for _ in 0..(3 * k + 10) {
        let grad: Vec<f64> = (0..k)
            .map(|i| aty[i] - (0..k).map(|j| gram[(i, j)] * w[j]).sum::<f64>())
            .collect();
        let Some(t) = (0..k)
            .filter(|&i| !passive[i] && grad[i] > tol)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]))
        else {
            break;
        };
        passive[t] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..k).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                w = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in (0..k).filter(|&i| passive[i] && z[i] <= 0.0) {
                alpha = alpha.min(w[i] / (w[i] - z[i]));
            }
            for i in 0..k {
                w[i] += alpha * (z[i] - w[i]);
                if passive[i] && w[i] <= tol {
                    passive[i] = false;
                    w[i] = 0.0;
                }
            }
        }
    }
    w
}

fn residual_of(y: &[f64], dict: &Dictionary, atoms: &[usize], w: &[f64]) -> Vec<f64> {
    let fit = dict.combine(atoms, w);
    y.iter().zip(fit).map(|(a, b)| a - b).collect()
}

fn best_atom(r: &[f64], dict: &Dictionary, exclude: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in dict.columns.iter().enumerate() {
        if exclude.contains(&j) {
            continue;
        }
        let ip = dot(r, c);
        if best.is_none_or(|(_, b)| ip.abs() > b.abs()) {
            best = Some((j, ip));
        }
    }
    best
}

/// Orthogonal matching pursuit with nonnegative least squares on the
/// accumulated support.
pub fn omp_select(y: &[f64], dict: &Dictionary, k_max: usize, stop_tol: f64) -> SparseEstimate {
    let y_norm = dot(y, y).sqrt();
    let mut atoms: Vec<usize> = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    let mut r = y.to_vec();
    let mut r_norm = y_norm;
    while atoms.len() < k_max && r_norm > stop_tol * y_norm {
        let Some((j, ip)) = best_atom(&r, dict, &atoms) else {
            break;
        };
        if ip.abs() <= f64::EPSILON * y_norm {
            break;
        }
        let mut trial = atoms.clone();
        trial.push(j);
        let cols: Vec<&[f64]> = trial.iter().map(|&i| dict.columns[i].as_slice()).collect();
        let trial_w = nnls(&cols, y);
        let trial_r = residual_of(y, dict, &trial, &trial_w);
        let trial_norm = dot(&trial_r, &trial_r).sqrt();
        if trial_norm >= r_norm - 1e-12 * y_norm.max(1.0) {
            break;
        }
        atoms = trial;
        w = trial_w;
        r = trial_r;
        r_norm = trial_norm;
    }
    SparseEstimate::from_atoms(dict, atoms, w)
}

/// Matching pursuit: one projection per step, coefficients accumulate and
/// stay nonnegative. Runs at most `k_max` steps.
pub fn mp_select(y: &[f64], dict: &Dictionary, k_max: usize, stop_tol: f64) -> SparseEstimate {
    let y_norm = dot(y, y).sqrt();
    let mut coef = vec![0.0; dict.len()];
    let mut order: Vec<usize> = Vec::new();
    let mut r = y.to_vec();
    for _ in 0..k_max {
        if dot(&r, &r).sqrt() <= stop_tol * y_norm {
            break;
        }
        let Some((j, ip)) = best_atom(&r, dict, &[]) else {
            break;
        };
        let new = (coef[j] + ip).max(0.0);
        let step = new - coef[j];
        if step.abs() <= f64::EPSILON * y_norm {
            break;
        }
        coef[j] = new;
        for (ri, c) in r.iter_mut().zip(&dict.columns[j]) {
            *ri -= step * c;
        }
        if !order.contains(&j) {
            order.push(j);
        }
    }
    let w = order.iter().map(|&j| coef[j]).collect();
    SparseEstimate::from_atoms(dict, order, w)
}

const LASSO_MAX_SWEEPS: usize = 20_000;
const LASSO_TOL: f64 = 1e-13;

/// Nonnegative Lasso `½‖y - D w‖² + λ Σ w`, `w ≥ 0`, by cyclic coordinate
/// descent.
pub fn nn_lasso(y: &[f64], dict: &Dictionary, lambda: f64) -> Vec<f64> {
    let k = dict.len();
    let mut w = vec![0.0; k];
    let mut r = y.to_vec();
    let sq: Vec<f64> = dict.columns.iter().map(|c| dot(c, c)).collect();
    let scale = dot(y, y).sqrt().max(1.0);
    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            if sq[j] == 0.0 {
                continue;
            }
            let c = &dict.columns[j];
            let rho = dot(&r, c) + sq[j] * w[j];
            let new = ((rho - lambda) / sq[j]).max(0.0);
            let step = new - w[j];
            if step != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri -= step * ci;
                }
                w[j] = new;
                max_change = max_change.max(step.abs());
            }
        }
        if max_change <= LASSO_TOL * scale {
            break;
        }
    }
    w
}

/// `points` log-spaced penalties over `[1e-3, 1] · max|⟨y, c⟩|`, largest
/// first.
pub fn default_lambda_grid(y: &[f64], dict: &Dictionary, points: usize) -> Vec<f64> {
    let top = dict
        .columns
        .iter()
        .map(|c| dot(y, c).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = (1e-3f64.ln(), 0f64);
    (0..points)
        .map(|i| {
            let t = if points == 1 {
                1.0
            } else {
                i as f64 / (points - 1) as f64
            };
            top * (hi + (lo - hi) * t).exp()
        })
        .collect()
}

/// Lasso path over `lambda_grid`; the penalty whose support, refit by
/// nonnegative least squares, has the smallest BIC is kept. Ties keep the
/// earlier grid point.
pub fn lasso_select(
    y: &[f64],
    dict: &Dictionary,
    lambda_grid: &[f64],
    q: usize,
) -> Result<SparseEstimate> {
    if dict.is_empty() || lambda_grid.is_empty() {
        return Err(Error::Config(
            "lasso needs a nonempty dictionary and lambda grid".into(),
        ));
    }
    let n = y.len();
    let floor = n as f64 * DEGENERATE_RSS_FLOOR;
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for &lambda in lambda_grid {
        let w = nn_lasso(y, dict, lambda);
        let support: Vec<usize> = (0..dict.len()).filter(|&j| w[j] > SUPPORT_TOL).collect();
        let cols: Vec<&[f64]> = support
            .iter()
            .map(|&j| dict.columns[j].as_slice())
            .collect();
        let refit = nnls(&cols, y);
        let r = residual_of(y, dict, &support, &refit);
        let rss = dot(&r, &r).max(floor);
        let bic = information_criterion(InfoCriterion::Bic, rss, n, support.len() * q)?;
        if best.as_ref().is_none_or(|(b, _, _)| bic < *b) {
            let coef = support.iter().map(|&j| w[j]).collect();
            best = Some((bic, support, coef));
        }
    }
    let (_, support, coef) = best.expect("grid is nonempty");
    Ok(SparseEstimate::from_atoms(dict, support, coef))
}

/// Half-width of the boresight search window of the peak detector.
pub const PEAK_WINDOW: f64 = 2.0 * std::f64::consts::PI / 180.0;

/// Peak detection: attribute the strongest remaining measurement to the
/// unused candidate whose tightly windowed fit most reduces the residual,
/// subtract, repeat until the peak falls below `threshold_frac · max(y)`.
pub fn peak_select(
    y: &[f64],
    candidates: &[CandidateLooks],
    bounds: &FitBounds,
    loss: &LossPolicy,
    threshold_frac: f64,
    k_max: usize,
) -> Result<SparseEstimate> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::Config(format!(
            "threshold_frac must lie in (0, 1), got {threshold_frac}"
        )));
    }
    let mut out = SparseEstimate::default();
    if y.is_empty() {
        return Ok(out);
    }
    let threshold = threshold_frac * argmax(y).1;
    if !(threshold > 0.0) {
        return Ok(out);
    }
    let tight = bounds.with_search_window(PEAK_WINDOW, PEAK_WINDOW);
    let mut r = y.to_vec();
    while out.selected.len() < k_max {
        if argmax(&r).1 < threshold {
            break;
        }
        let rss0 = dot(&r, &r);
        let cfg = loss.resolve(&r);
        let fits: Vec<Option<(usize, BeamParams, f64)>> = candidates
            .par_iter()
            .filter(|c| !out.selected.contains(&c.index))
            .map(|c| {
                let f = fit_single(&r, &c.looks, &tight, &cfg).ok()?;
                Some((c.index, f.params, rss0 - f.rss_value))
            })
            .collect();
        let mut best: Option<(usize, BeamParams, f64)> = None;
        for f in fits.into_iter().flatten() {
            if best.is_none_or(|b| f.2 > b.2) {
                best = Some(f);
            }
        }
        let Some((index, params, gain)) = best else {
            break;
        };
        if !(gain > 0.0) {
            break;
        }
        let looks = &candidates
            .iter()
            .find(|c| c.index == index)
            .expect("fitted candidate")
            .looks;
        for (ri, x) in r.iter_mut().zip(signature(&params, looks)) {
            *ri -= x;
        }
        out.selected.push(index);
        out.params.push(params);
        out.coefficients.push(params.amplitude);
    }
    Ok(out)
}

/// Parameter count per selected satellite used by the Lasso BIC.
pub const LASSO_Q: usize = FREE_PARAMS;
