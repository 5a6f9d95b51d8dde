//! Joint activity detection and channel estimation: simultaneous orthogonal
//! matching pursuit plus the power-based active-count estimator.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::codebook::ReceivedFrame;
use crate::config::SystemConfig;
use crate::linalg::{lstsq, norm_sq};

/// Output of one pursuit run.
#[derive(Debug, Clone)]
pub struct SompResult {
    /// Detected 1-based codebook column indices, in selection order.
    pub support: Vec<usize>,
    /// Least-squares channel estimates, one row per support entry.
    pub channel_estimates: DMatrix<Complex64>,
    /// Frobenius residual norm before any selection and after each one;
    /// non-increasing.
    pub residual_norm_history: Vec<f64>,
}

/// Power-based estimate of the active device count:
/// round((1/(E_s L_p)) * (||Y||_F^2 / (N' Omega) - sigma^2 L_p)) clamped to
/// [0, 2^B_p], with N' the column count of Y and L_p its row count.
pub fn estimate_active_count(frame: &ReceivedFrame, cfg: &SystemConfig) -> usize {
    let pilot_length = frame.samples.nrows() as f64;
    let num_cols = frame.samples.ncols() as f64;
    let energy = norm_sq(&frame.samples);
    let raw = (energy / (num_cols * cfg.avg_energy) - frame.noise_variance * pilot_length)
        / (cfg.per_symbol_energy * pilot_length);
    // f64::round is round-half-away-from-zero.
    let rounded = raw.round();
    rounded.clamp(0.0, cfg.codebook_size() as f64) as usize
}

/// Greedy pursuit: per iteration, pick the codebook column maximizing
/// ||R^H a_i||_2 / ||a_i||_2 among unselected columns (lowest index on ties),
/// then re-project the observation onto the selected span.
///
/// Runs min(k_max, rows, columns) iterations; the final estimates solve the
/// least-squares system over the selected columns with a rank-revealing
/// factorization.
pub fn somp(
    observations: &DMatrix<Complex64>,
    codebook: &DMatrix<Complex64>,
    k_max: usize,
) -> SompResult {
    let iterations = k_max.min(observations.nrows()).min(codebook.ncols());
    let num_cols = codebook.ncols();
    let col_norms: Vec<f64> = (0..num_cols).map(|j| codebook.column(j).norm()).collect();

    let mut residual = observations.clone();
    let mut history = vec![residual.norm()];
    let mut selected = vec![false; num_cols];
    let mut support0: Vec<usize> = Vec::with_capacity(iterations);

    for _ in 0..iterations {
        let correlations = residual.adjoint() * codebook;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..num_cols {
            if selected[j] {
                continue;
            }
            let metric = if col_norms[j] > 0.0 {
                correlations.column(j).norm() / col_norms[j]
            } else {
                0.0
            };
            // Strict > keeps the lowest index on ties.
            if best.map_or(true, |(_, m)| metric > m) {
                best = Some((j, metric));
            }
        }
        let Some((pick, _)) = best else { break };
        selected[pick] = true;
        support0.push(pick);

        let span = codebook.select_columns(support0.iter());
        let projected = lstsq(&span, observations);
        residual = observations - span * projected;
        history.push(residual.norm());
    }

    let channel_estimates = if support0.is_empty() {
        DMatrix::zeros(0, observations.ncols())
    } else {
        let span = codebook.select_columns(support0.iter());
        lstsq(&span, observations)
    };

    SompResult {
        support: support0.iter().map(|i| i + 1).collect(),
        channel_estimates,
        residual_norm_history: history,
    }
}
