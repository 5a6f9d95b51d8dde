//! Scoring: activity-detection errors, channel NMSE, and AoA NMSE with
//! optimal truth-to-estimate matching.

use std::collections::BTreeSet;

use itertools::Itertools;
use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest per-device path count the exhaustive assignment accepts.
pub const MAX_ASSIGNMENT_PATHS: usize = 6;

/// Per-trial scores. NMSE values are absent (not zero) when no device was
/// correctly detected.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScore {
    pub missed_detections: usize,
    pub false_alarms: usize,
    pub channel_nmse: Option<f64>,
    pub channel_nmse_refined: Option<f64>,
    pub aoa_nmse: Option<f64>,
    pub ka_estimate: usize,
}

/// Missed detections and false alarms between two supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdErrors {
    pub missed: usize,
    pub false_alarms: usize,
    pub ka_known: bool,
}

impl AdErrors {
    /// The reported AD error: misses only when the receiver knows K_a,
    /// otherwise misses plus false alarms.
    pub fn reported(&self) -> usize {
        if self.ka_known {
            self.missed
        } else {
            self.missed + self.false_alarms
        }
    }
}

pub fn ad_errors(true_support: &[usize], detected_support: &[usize], ka_known: bool) -> AdErrors {
    let truth: BTreeSet<usize> = true_support.iter().copied().collect();
    let detected: BTreeSet<usize> = detected_support.iter().copied().collect();
    AdErrors {
        missed: truth.difference(&detected).count(),
        false_alarms: detected.difference(&truth).count(),
        ka_known,
    }
}

/// Ratio-of-sums channel NMSE over matched (true, estimate) pairs:
/// sum_k ||g_k - g~_k||^2 / sum_k ||g_k||^2. `None` when no pair is given.
pub fn channel_nmse(
    true_channels: &[DVector<Complex64>],
    estimated_channels: &[DVector<Complex64>],
) -> Result<Option<f64>> {
    if true_channels.len() != estimated_channels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} true channels vs {} estimates",
            true_channels.len(),
            estimated_channels.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (truth, est) in true_channels.iter().zip(estimated_channels) {
        if truth.len() != est.len() {
            return Err(Error::LengthMismatch(format!(
                "channel vector lengths differ ({} vs {})",
                truth.len(),
                est.len()
            )));
        }
        num += (truth - est).iter().map(|z| z.norm_sqr()).sum::<f64>();
        den += truth.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    if true_channels.is_empty() || den == 0.0 {
        return Ok(None);
    }
    Ok(Some(num / den))
}

/// Ratio-of-sums AoA NMSE: per device the estimated angles are matched to the
/// true angles by the assignment minimizing total absolute error (exhaustive
/// over permutations), then sum |theta - theta~| / sum |theta| over all
/// matched pairs. `None` when no device is given.
pub fn aoa_nmse(true_aoas: &[Vec<f64>], estimated_aoas: &[Vec<f64>]) -> Result<Option<f64>> {
    if true_aoas.len() != estimated_aoas.len() {
        return Err(Error::LengthMismatch(format!(
            "{} true AoA lists vs {} estimated",
            true_aoas.len(),
            estimated_aoas.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (truth, est) in true_aoas.iter().zip(estimated_aoas) {
        if truth.len() != est.len() {
            return Err(Error::LengthMismatch(format!(
                "AoA list lengths differ ({} vs {})",
                truth.len(),
                est.len()
            )));
        }
        if truth.len() > MAX_ASSIGNMENT_PATHS {
            return Err(Error::TooManyPaths {
                got: truth.len(),
                max: MAX_ASSIGNMENT_PATHS,
            });
        }
        num += best_assignment_error(truth, est);
        den += truth.iter().map(|t| t.abs()).sum::<f64>();
    }
    if true_aoas.is_empty() || den == 0.0 {
        return Ok(None);
    }
    Ok(Some(num / den))
}

fn best_assignment_error(truth: &[f64], est: &[f64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    (0..est.len())
        .permutations(est.len())
        .map(|perm| {
            truth
                .iter()
                .zip(perm)
                .map(|(t, j)| (t - est[j]).abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}
