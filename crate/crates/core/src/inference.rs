//! Multi-satellite inference: greedy active-set construction gated by a
//! model-selection rule, block-coordinate joint refinement, and continuous
//! radio-map synthesis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{beam_gain, signature, wrap_angle_diff, BeamParams};
use crate::error::{Error, Result};
use crate::fit::{
    beta_penalty, fill_gains, fit_single, median, FitBounds, LossPolicy, RobustLossConfig,
};
use crate::geometry::{look_angles, EcefVector, GeoPosition, LookAngles};
use crate::optim::{minimize_box, QuasiNewtonOptions};
use crate::select::{acceptance_test, SelectionConfig, SelectionScore};

/// A screened candidate satellite and its look angles to every measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLooks {
    /// Index in the full candidate list.
    pub index: usize,
    pub looks: Vec<LookAngles>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Trust-region weight per rad². `None` means `0.1 · median(y)²`.
    pub eta: Option<f64>,
    pub max_outer_iters: usize,
    pub tol: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            eta: None,
            max_outer_iters: 20,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub bounds: FitBounds,
    pub loss: LossPolicy,
    pub selection: SelectionConfig,
    pub k_max: usize,
    pub refine: RefineConfig,
    /// Run joint refinement after every accepted round instead of once at
    /// the end.
    pub refine_each_round: bool,
    /// Subtract a constant background estimated as `min(y)`.
    pub estimate_background: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            bounds: FitBounds::default(),
            loss: LossPolicy::default(),
            selection: SelectionConfig::default(),
            k_max: 10,
            refine: RefineConfig::default(),
            refine_each_round: false,
            estimate_background: false,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.selection.validate()?;
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(self.refine.tol > 0.0) || self.refine.eta.is_some_and(|e| e < 0.0) {
            return Err(Error::Config(
                "refinement needs tol > 0 and eta >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ActiveSetEstimate {
    /// Selected candidate indices in order of admission.
    pub selected: Vec<usize>,
    pub params: Vec<BeamParams>,
    pub k_hat: usize,
    /// Best score of every round, including the final rejected one.
    pub round_scores: Vec<SelectionScore>,
    pub final_residual: Vec<f64>,
    /// `‖r‖²` before the first round and after every accepted round.
    pub residual_energy: Vec<f64>,
    /// One trace per refinement call: the joint objective at entry, then
    /// after each outer iteration.
    pub refine_objective: Vec<Vec<f64>>,
    pub background: f64,
}

impl ActiveSetEstimate {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn looks_for<'a>(candidates: &'a [CandidateLooks], index: usize) -> Result<&'a [LookAngles]> {
    candidates
        .iter()
        .find(|c| c.index == index)
        .map(|c| c.looks.as_slice())
        .ok_or_else(|| Error::Config(format!("candidate {index} is not in the screened set")))
}

struct RoundFit {
    params: BeamParams,
    contribution: Vec<f64>,
    score: SelectionScore,
}

/// Greedy active-set construction.
///
/// Each round fits every unselected candidate to the current residual,
/// scores the fit with the configured acceptance rule, admits the best
/// accepted candidate and subtracts its contribution. Stops when no
/// candidate is accepted or `k_max` satellites are selected.
pub fn greedy_select(
    y: &[f64],
    candidates: &[CandidateLooks],
    cfg: &InferenceConfig,
) -> Result<ActiveSetEstimate> {
    cfg.validate()?;
    let n = y.len();
    let background = if cfg.estimate_background {
        y.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let mut residual: Vec<f64> = y.iter().map(|v| v - background).collect();
    let mut est = ActiveSetEstimate {
        background,
        ..Default::default()
    };
    est.residual_energy.push(energy(&residual));
    let q = cfg.selection.q;

    while est.selected.len() < cfg.k_max {
        let remaining: Vec<&CandidateLooks> = candidates
            .iter()
            .filter(|c| !est.selected.contains(&c.index))
            .collect();
        if remaining.is_empty() {
            break;
        }
        let n_c = remaining.len();
        let p_t = est.selected.len() * q;
        if n <= p_t + q {
            break;
        }
        let rss0 = energy(&residual);
        let loss: RobustLossConfig = cfg.loss.resolve(&residual);

        let fits: Vec<Option<RoundFit>> = remaining
            .par_iter()
            .map(|c| {
                let fit = fit_single(&residual, &c.looks, &cfg.bounds, &loss).ok()?;
                let contribution = signature(&fit.params, &c.looks);
                let rss1 = residual
                    .iter()
                    .zip(&contribution)
                    .map(|(r, x)| (r - x).powi(2))
                    .sum();
                let score =
                    acceptance_test(c.index, rss0, rss1, &cfg.selection, n_c, n, p_t).ok()?;
                Some(RoundFit {
                    params: fit.params,
                    contribution,
                    score,
                })
            })
            .collect();

        // highest score wins; ties keep the earliest candidate
        let mut best: Option<RoundFit> = None;
        for fit in fits.into_iter().flatten() {
            if best
                .as_ref()
                .is_none_or(|b| fit.score.score > b.score.score)
            {
                best = Some(fit);
            }
        }
        let Some(best) = best else { break };
        est.round_scores.push(best.score);
        if !best.score.accepted {
            break;
        }

        est.selected.push(best.score.candidate);
        est.params.push(best.params);
        for (r, x) in residual.iter_mut().zip(&best.contribution) {
            *r -= x;
        }
        est.k_hat = est.selected.len();

        if cfg.refine_each_round && est.selected.len() > 1 {
            est = joint_refine(y, &est, candidates, &cfg.bounds, &cfg.refine)?;
            residual = est.final_residual.clone();
        }
        est.residual_energy.push(energy(&residual));
    }

    est.k_hat = est.selected.len();
    est.final_residual = residual;
    Ok(est)
}

fn anchor_distance_sq(p: &BeamParams, anchor: &BeamParams) -> f64 {
    wrap_angle_diff(p.az0, anchor.az0).powi(2)
        + (p.el0 - anchor.el0).powi(2)
        + (p.beta - anchor.beta).powi(2)
}

/// Least-squares amplitude (unit weights) projected onto the bounds.
fn ls_amplitude(target: &[f64], gains: &[f64], bounds: &FitBounds) -> f64 {
    let num: f64 = target.iter().zip(gains).map(|(p, g)| p * g).sum();
    let den: f64 = gains.iter().map(|g| g * g).sum();
    (num / (den + 1e-12)).clamp(bounds.a_min, bounds.a_max)
}

struct RefineProblem<'a> {
    y: &'a [f64],
    background: f64,
    looks: Vec<&'a [LookAngles]>,
    anchors: Vec<BeamParams>,
    bounds: &'a FitBounds,
    eta: f64,
    lambda_beta: f64,
}

impl RefineProblem<'_> {
    fn objective(&self, params: &[BeamParams], contributions: &[Vec<f64>]) -> f64 {
        let mut data = 0.0;
        for m in 0..self.y.len() {
            let fitted: f64 = contributions.iter().map(|c| c[m]).sum();
            data += (self.y[m] - self.background - fitted).powi(2);
        }
        let penalties: f64 = params
            .iter()
            .zip(&self.anchors)
            .map(|(p, a)| {
                self.lambda_beta * beta_penalty(p.beta, self.bounds)
                    + self.eta * anchor_distance_sq(p, a)
            })
            .sum();
        data + penalties
    }
}

/// Block-coordinate joint refinement of all selected satellites against
/// the original measurements.
///
/// Each block refits one satellite against `y` minus the others'
/// predictions with the least-squares amplitude, a beamwidth penalty and an
/// anchor term pulling toward the entry estimate. Block updates are kept
/// only when they lower the joint objective, so the objective never
/// increases.
pub fn joint_refine(
    y: &[f64],
    est: &ActiveSetEstimate,
    candidates: &[CandidateLooks],
    bounds: &FitBounds,
    cfg: &RefineConfig,
) -> Result<ActiveSetEstimate> {
    if est.selected.is_empty() {
        return Ok(est.clone());
    }
    let looks: Vec<&[LookAngles]> = est
        .selected
        .iter()
        .map(|&i| looks_for(candidates, i))
        .collect::<Result<_>>()?;
    let eta = cfg.eta.unwrap_or_else(|| {
        let mut v = y.to_vec();
        0.1 * median(&mut v).powi(2)
    });
    let lambda_beta = RobustLossConfig::adaptive(y, Default::default()).lambda_beta;
    let problem = RefineProblem {
        y,
        background: est.background,
        looks,
        anchors: est.params.clone(),
        bounds,
        eta,
        lambda_beta,
    };

    let mut params = est.params.clone();
    let mut contributions: Vec<Vec<f64>> = params
        .iter()
        .zip(&problem.looks)
        .map(|(p, l)| signature(p, l))
        .collect();
    let mut current = problem.objective(&params, &contributions);
    let mut history = vec![current];

    let opts = QuasiNewtonOptions::default();
    let m = y.len();
    for _outer in 0..cfg.max_outer_iters {
        let start = current;
        for s in 0..params.len() {
            let target: Vec<f64> = (0..m)
                .map(|i| {
                    let others: f64 = contributions
                        .iter()
                        .enumerate()
                        .filter(|(o, _)| *o != s)
                        .map(|(_, c)| c[i])
                        .sum();
                    y[i] - problem.background - others
                })
                .collect();
            let anchor = problem.anchors[s];
            let looks_s = problem.looks[s];
            let block = |phi: &[f64]| -> f64 {
                let mut g = vec![0.0; m];
                fill_gains(&mut g, looks_s, phi[0], phi[1], phi[2]);
                let a = ls_amplitude(&target, &g, bounds);
                let data: f64 = target
                    .iter()
                    .zip(&g)
                    .map(|(t, g)| (t - a * g).powi(2))
                    .sum();
                let p = BeamParams::new(phi[0], phi[1], phi[2], a);
                data + lambda_beta * beta_penalty(phi[2], bounds)
                    + eta * anchor_distance_sq(&p, &anchor)
            };
            let cur = params[s];
            let x0 = [cur.az0, cur.el0, cur.beta];
            let lo = [
                cur.az0 - bounds.delta_az,
                (cur.el0 - bounds.delta_el).max(0.0),
                bounds.beta_min,
            ];
            let hi = [
                cur.az0 + bounds.delta_az,
                (cur.el0 + bounds.delta_el).min(bounds.el_max).max(cur.el0),
                bounds.beta_max,
            ];
            let min = minimize_box(block, &x0, &lo, &hi, &opts);

            let mut g = vec![0.0; m];
            fill_gains(&mut g, looks_s, min.x[0], min.x[1], min.x[2]);
            let a = ls_amplitude(&target, &g, bounds);
            let candidate = BeamParams::new(
                min.x[0].rem_euclid(std::f64::consts::TAU),
                min.x[1],
                min.x[2],
                a,
            );
            let contribution = signature(&candidate, looks_s);

            let old_params = std::mem::replace(&mut params[s], candidate);
            let old_contribution = std::mem::replace(&mut contributions[s], contribution);
            let value = problem.objective(&params, &contributions);
            if value < current {
                current = value;
            } else {
                params[s] = old_params;
                contributions[s] = old_contribution;
            }
        }
        history.push(current);
        if params.len() == 1 || start - current <= cfg.tol * start.abs() {
            break;
        }
    }

    let final_residual: Vec<f64> = (0..m)
        .map(|i| y[i] - problem.background - contributions.iter().map(|c| c[i]).sum::<f64>())
        .collect();
    let mut traces = est.refine_objective.clone();
    traces.push(history);
    Ok(ActiveSetEstimate {
        params,
        final_residual,
        refine_objective: traces,
        ..est.clone()
    })
}

/// Full pipeline: greedy selection followed by joint refinement when more
/// than one satellite was admitted (unless refinement already ran inside
/// the loop). The residual is recomputed from scratch after refinement.
pub fn estimate_active_set(
    y: &[f64],
    candidates: &[CandidateLooks],
    cfg: &InferenceConfig,
) -> Result<ActiveSetEstimate> {
    let est = greedy_select(y, candidates, cfg)?;
    if !cfg.refine_each_round && est.k_hat > 1 {
        joint_refine(y, &est, candidates, &cfg.bounds, &cfg.refine)
    } else {
        Ok(est)
    }
}

/// Predicted field at the measurement locations (background excluded).
pub fn fitted_field(
    est: &ActiveSetEstimate,
    candidates: &[CandidateLooks],
    m: usize,
) -> Result<Vec<f64>> {
    let mut field = vec![0.0; m];
    for (idx, p) in est.selected.iter().zip(&est.params) {
        let looks = looks_for(candidates, *idx)?;
        for (f, l) in field.iter_mut().zip(looks) {
            *f += p.amplitude * beam_gain(l, p);
        }
    }
    Ok(field)
}

/// Evaluates the estimated radio map at arbitrary ground points.
/// `sat_positions` is indexed by candidate index.
pub fn synthesize_rm(
    est: &ActiveSetEstimate,
    sat_positions: &[EcefVector],
    query_points: &[GeoPosition],
) -> Result<Vec<f64>> {
    synthesize_with(&est.selected, &est.params, sat_positions, query_points)
}

/// Radio map of beams whose satellite positions are given in the same order.
pub fn synthesize_field(
    params: &[BeamParams],
    sat_positions: &[EcefVector],
    query_points: &[GeoPosition],
) -> Result<Vec<f64>> {
    if params.len() != sat_positions.len() {
        return Err(Error::Config(format!(
            "{} beams but {} satellite positions",
            params.len(),
            sat_positions.len()
        )));
    }
    let selected: Vec<usize> = (0..params.len()).collect();
    synthesize_with(&selected, params, sat_positions, query_points)
}

pub(crate) fn synthesize_with(
    selected: &[usize],
    params: &[BeamParams],
    sat_positions: &[EcefVector],
    query_points: &[GeoPosition],
) -> Result<Vec<f64>> {
    let sats: Vec<&EcefVector> = selected
        .iter()
        .map(|&i| {
            sat_positions
                .get(i)
                .ok_or_else(|| Error::Config(format!("no position for satellite {i}")))
        })
        .collect::<Result<_>>()?;
    query_points
        .iter()
        .map(|q| {
            let g = q.to_ecef();
            let mut value = 0.0;
            for (sat, p) in sats.iter().zip(params) {
                value += p.amplitude * beam_gain(&look_angles(sat, &g)?, p);
            }
            Ok(value)
        })
        .collect()
}
