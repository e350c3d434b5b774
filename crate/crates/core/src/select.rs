//! Model-order acceptance rules: BIC / AIC improvement thresholds and the
//! GLRT F-test with a per-round Bonferroni correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Substitute for a non-positive RSS, per sample.
pub const DEGENERATE_RSS_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Aic,
    #[default]
    Glrt,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Bic => "bic",
            Criterion::Aic => "aic",
            Criterion::Glrt => "glrt",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(Criterion::Bic),
            "aic" => Ok(Criterion::Aic),
            "glrt" => Ok(Criterion::Glrt),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfoCriterion {
    Bic,
    Aic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub criterion: Criterion,
    pub alpha: f64,
    /// Free parameters added per satellite.
    pub q: usize,
    /// Scale of the BIC/AIC threshold `tau_scale · ln(n_c + 1)`.
    pub tau_scale: f64,
    /// Constant BIC/AIC threshold replacing the log rule when set.
    pub tau_override: Option<f64>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::Glrt,
            alpha: 0.05,
            q: 3,
            tau_scale: 2.0,
            tau_override: None,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.q == 3 || self.q == 4) {
            return Err(Error::Config(format!("q must be 3 or 4, got {}", self.q)));
        }
        Ok(())
    }

    /// BIC/AIC threshold for `n_c` simultaneous candidates.
    pub fn tau(&self, n_c: usize) -> f64 {
        self.tau_override
            .unwrap_or_else(|| self.tau_scale * ((n_c + 1) as f64).ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub candidate: usize,
    pub score: f64,
    pub threshold: f64,
    pub accepted: bool,
    pub rss_before: f64,
    pub rss_after: f64,
    /// Set when an RSS was non-positive and had to be floored.
    pub degenerate: bool,
}

pub fn information_criterion(kind: InfoCriterion, rss: f64, n: usize, p: usize) -> Result<f64> {
    if !(rss > 0.0) {
        return Err(Error::DegenerateRss(rss));
    }
    let n_f = n as f64;
    let penalty = match kind {
        InfoCriterion::Bic => p as f64 * n_f.ln(),
        InfoCriterion::Aic => 2.0 * p as f64,
    };
    Ok(penalty + n_f * (rss / n_f).ln())
}

/// `IC(rss0, n, p_t) - IC(rss1, n, p_t + q)`: positive when adding a
/// satellite pays for its extra parameters.
pub fn delta_criterion(
    kind: InfoCriterion,
    rss0: f64,
    rss1: f64,
    n: usize,
    p_t: usize,
    q: usize,
) -> Result<f64> {
    Ok(information_criterion(kind, rss0, n, p_t)? - information_criterion(kind, rss1, n, p_t + q)?)
}

pub fn f_statistic(rss0: f64, rss1: f64, d: usize, n: usize, p_t: usize) -> Result<f64> {
    if n <= p_t + d {
        return Err(Error::InvalidDof { n, p: p_t + d });
    }
    if !(rss1 > 0.0) {
        return Err(Error::DegenerateRss(rss1));
    }
    Ok(((rss0 - rss1) / d as f64) / (rss1 / (n - p_t - d) as f64))
}

/// Quantile of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_quantile(d1: usize, d2: usize, prob: f64) -> f64 {
    stats::f_quantile(d1 as f64, d2 as f64, prob)
}

/// Scores one candidate's fit and applies the configured acceptance rule.
///
/// `n_c` is the number of candidates tested in the round, `n` the sample
/// count and `p_t` the parameter count of the current model.
pub fn acceptance_test(
    candidate: usize,
    rss0: f64,
    rss1: f64,
    cfg: &SelectionConfig,
    n_c: usize,
    n: usize,
    p_t: usize,
) -> Result<SelectionScore> {
    if n_c == 0 {
        return Err(Error::Config(
            "acceptance test needs at least one candidate".into(),
        ));
    }
    let floor = n as f64 * DEGENERATE_RSS_FLOOR;
    let degenerate = !(rss0 > 0.0) || !(rss1 > 0.0);
    let r0 = if rss0 > 0.0 { rss0 } else { floor };
    let r1 = if rss1 > 0.0 { rss1 } else { floor };
    let q = cfg.q;

    let (score, threshold, accepted) = match cfg.criterion {
        Criterion::Glrt => {
            let f = f_statistic(r0, r1, q, n, p_t)?;
            let level = cfg.alpha / n_c as f64;
            let threshold = f_quantile(q, n - (p_t + q), 1.0 - level);
            (f, threshold, f >= threshold)
        }
        Criterion::Bic | Criterion::Aic => {
            let kind = if cfg.criterion == Criterion::Bic {
                InfoCriterion::Bic
            } else {
                InfoCriterion::Aic
            };
            let delta = delta_criterion(kind, r0, r1, n, p_t, q)?;
            let threshold = cfg.tau(n_c);
            (delta, threshold, delta > threshold)
        }
    };
    Ok(SelectionScore {
        candidate,
        score,
        threshold,
        accepted,
        rss_before: rss0,
        rss_after: rss1,
        degenerate,
    })
}
