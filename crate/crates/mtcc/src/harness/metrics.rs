//! Performance metrics: per-follower returns, string-stability amplitude
//! ratios, delay histograms, and convergence-point extraction from learning
//! curves.

use serde::Serialize;

use crate::ddpg::EvalPoint;
use crate::env::LogRow;
use crate::{Error, Result};

/// Floating-point dust allowance when comparing amplitude ratios to 1.
pub const RATIO_EPS: f64 = 1.0e-9;

/// Amplitude ratios of one follower against its predecessor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignalRatios {
    /// Follower index (1-based); ratios compare against follower - 1.
    pub follower: usize,
    pub e_p: f64,
    pub e_v: f64,
    pub acc: f64,
}

impl SignalRatios {
    pub fn all_attenuating(&self) -> bool {
        self.e_p <= 1.0 + RATIO_EPS && self.e_v <= 1.0 + RATIO_EPS && self.acc <= 1.0 + RATIO_EPS
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StringStabilityReport {
    /// One entry per follower from 2 upward.
    pub ratios: Vec<SignalRatios>,
    /// True when every ratio of every signal attenuates.
    pub stable: bool,
}

fn amplitude(values: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// Oscillation-amplitude ratio with the degenerate 0/0 case read as neutral
/// propagation (ratio 1).
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Per-follower amplitude ratios over one episode log.
///
/// For each signal in {gap error, velocity error, acceleration} and each
/// follower from 2 on, the ratio of that follower's peak-to-peak amplitude to
/// its predecessor's. A platoon is flagged string stable for the episode when
/// every ratio is at most 1.
pub fn string_stability_report(log: &[LogRow], n_followers: usize) -> StringStabilityReport {
    let mut e_p = vec![Vec::new(); n_followers + 1];
    let mut e_v = vec![Vec::new(); n_followers + 1];
    let mut acc = vec![Vec::new(); n_followers + 1];
    for row in log {
        e_p[row.i].push(row.e_p);
        e_v[row.i].push(row.e_v);
        acc[row.i].push(row.acc);
    }
    let ratios: Vec<SignalRatios> = (2..=n_followers)
        .map(|i| SignalRatios {
            follower: i,
            e_p: ratio(amplitude(&e_p[i]), amplitude(&e_p[i - 1])),
            e_v: ratio(amplitude(&e_v[i]), amplitude(&e_v[i - 1])),
            acc: ratio(amplitude(&acc[i]), amplitude(&acc[i - 1])),
        })
        .collect();
    let stable = ratios.iter().all(SignalRatios::all_attenuating);
    StringStabilityReport { ratios, stable }
}

/// Evaluation summary in the shape of the performance table: one entry per
/// follower plus the sum, with stability and delay diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub variant: String,
    pub test_episodes: usize,
    pub per_follower_return: Vec<f64>,
    pub sum_return: f64,
    /// Fraction of test episodes flagged string stable.
    pub string_stable_rate: f64,
    /// Mean amplitude ratios across episodes, one entry per follower >= 2.
    pub mean_ratios: Vec<SignalRatios>,
    /// Observation-delay histogram over all followers and intervals.
    pub delay_histogram: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_curve: Option<Vec<EvalPoint>>,
}

impl MetricsReport {
    /// Validates the summation invariant before the report leaves the crate.
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.per_follower_return.iter().sum();
        if (sum - self.sum_return).abs() > 1.0e-9 {
            return Err(Error::InvalidConfig(format!(
                "sum return {} disagrees with follower sum {}",
                self.sum_return, sum
            )));
        }
        Ok(())
    }
}

/// Builds the report from per-episode evaluation output.
pub fn build_metrics_report(
    variant: &str,
    per_follower: Vec<f64>,
    episode_logs: &[Vec<LogRow>],
    n_followers: usize,
    delay_histogram: Vec<usize>,
    convergence_curve: Option<Vec<EvalPoint>>,
) -> MetricsReport {
    let reports: Vec<StringStabilityReport> = episode_logs
        .iter()
        .map(|log| string_stability_report(log, n_followers))
        .collect();
    let stable_rate = if reports.is_empty() {
        0.0
    } else {
        reports.iter().filter(|r| r.stable).count() as f64 / reports.len() as f64
    };
    let mean_ratios: Vec<SignalRatios> = (0..n_followers.saturating_sub(1))
        .map(|idx| {
            let n = reports.len().max(1) as f64;
            let mut mean = SignalRatios { follower: idx + 2, e_p: 0.0, e_v: 0.0, acc: 0.0 };
            for r in &reports {
                mean.e_p += r.ratios[idx].e_p / n;
                mean.e_v += r.ratios[idx].e_v / n;
                mean.acc += r.ratios[idx].acc / n;
            }
            mean
        })
        .collect();
    let sum_return = per_follower.iter().sum();
    MetricsReport {
        variant: variant.to_string(),
        test_episodes: episode_logs.len(),
        per_follower_return: per_follower,
        sum_return,
        string_stable_rate: stable_rate,
        mean_ratios,
        delay_histogram,
        convergence_curve,
    }
}

/// First episode at which the smoothed curve enters the band within
/// `frac` of its final plateau (mean of the last tenth of points).
/// Returns `None` for curves that never reach the band, which cannot happen
/// for the plateau points themselves.
pub fn convergence_episode(curve: &[EvalPoint], smooth_window: usize, frac: f64) -> Option<usize> {
    if curve.is_empty() {
        return None;
    }
    let smoothed: Vec<f64> = (0..curve.len())
        .map(|i| {
            let lo = i.saturating_sub(smooth_window - 1);
            let w = &curve[lo..=i];
            w.iter().map(|p| p.sum_return).sum::<f64>() / w.len() as f64
        })
        .collect();
    let tail = (curve.len() / 10).max(1);
    let plateau: f64 =
        smoothed[curve.len() - tail..].iter().sum::<f64>() / tail as f64;
    let threshold = plateau - frac * plateau.abs();
    smoothed
        .iter()
        .position(|v| *v >= threshold)
        .map(|i| curve[i].episode)
}
