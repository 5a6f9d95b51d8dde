//! Partial-ports estimation internals: Vandermonde response assembly, the
//! closed-form regularized path-coefficient estimator, and the SVD-trace
//! gap-selection objective with exhaustive search.
//!
//! For ports observed from the first port with index gap Delta, the observed
//! channel factors as g = W sigma with W a Vandermonde matrix in the path
//! angles. The regularized estimator sigma = (W^H W + gamma I)^{-1} W^H g
//! trades noise amplification against shrinkage; the gap objective
//! sum_i (s_i / (s_i^2 + gamma))^2 is exactly the isotropic-noise deviation
//! power of that estimator, so scanning it over the candidate gaps ranks the
//! port layouts.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::svd_cutoff;

/// Port response of the observed gapped ports at a fixed set of path angles.
#[derive(Debug, Clone)]
pub struct VandermondeResponse {
    /// N_obs x (L_s + 1) matrix; row r, column j holds
    /// exp(-j 2 pi (r - 1) Delta W cos(theta_j) / (N - 1)).
    pub matrix: DMatrix<Complex64>,
    /// Index gap Delta between observed ports.
    pub gap: usize,
    /// Path angles generating the columns.
    pub aoas: Vec<f64>,
}

pub fn vandermonde(
    aoas: &[f64],
    gap: usize,
    num_observed: usize,
    num_ports_total: usize,
    aperture_wavelengths: f64,
) -> Result<VandermondeResponse> {
    if gap == 0 {
        return Err(Error::InvalidConfig("gap must be >= 1".into()));
    }
    if num_observed < aoas.len() {
        return Err(Error::TooFewPorts {
            rows: num_observed,
            paths: aoas.len(),
        });
    }
    let last = 1 + (num_observed - 1) * gap;
    if last > num_ports_total {
        return Err(Error::PortOverflow {
            last,
            num_ports: num_ports_total,
        });
    }
    let denom = if num_ports_total > 1 {
        (num_ports_total - 1) as f64
    } else {
        1.0
    };
    let matrix = DMatrix::from_fn(num_observed, aoas.len(), |r, j| {
        Complex64::cis(-TAU * (r * gap) as f64 * aperture_wavelengths / denom * aoas[j].cos())
    });
    Ok(VandermondeResponse {
        matrix,
        gap,
        aoas: aoas.to_vec(),
    })
}

/// Minimizer of ||g - W sigma||^2 + gamma ||sigma||^2, evaluated through the
/// SVD of `response`: sigma = V diag(s_i / (s_i^2 + gamma)) U^H g.
///
/// At gamma = 0 this is the least-squares solution; singular values below the
/// rank cutoff are then dropped, which yields the minimum-norm solution for
/// rank-deficient responses.
pub fn regularized_solve(
    response: &DMatrix<Complex64>,
    observed: &DVector<Complex64>,
    gamma: f64,
) -> Result<DVector<Complex64>> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidRegularizer(gamma));
    }
    if observed.len() != response.nrows() {
        return Err(Error::LengthMismatch(format!(
            "observation has {} entries but the response has {} rows",
            observed.len(),
            response.nrows()
        )));
    }
    let svd = response.clone().svd(true, true);
    let cutoff = svd_cutoff(response.nrows(), response.ncols(), svd.singular_values.as_slice());
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let mut projected = u.adjoint() * observed;
    for (k, s) in svd.singular_values.iter().enumerate() {
        let factor = if gamma == 0.0 {
            if *s > cutoff {
                1.0 / s
            } else {
                0.0
            }
        } else {
            s / (s * s + gamma)
        };
        projected[k] *= Complex64::new(factor, 0.0);
    }
    Ok(v_t.adjoint() * projected)
}

/// Deviation-power objective sum_i (s_i / (s_i^2 + gamma))^2 over the
/// singular values of `response`.
pub fn gap_objective(response: &DMatrix<Complex64>, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidRegularizer(gamma));
    }
    let svd = response.clone().svd(false, false);
    let cutoff = svd_cutoff(response.nrows(), response.ncols(), svd.singular_values.as_slice());
    if gamma == 0.0 && svd.singular_values.iter().any(|s| *s <= cutoff) {
        return Err(Error::RankDeficient);
    }
    Ok(svd
        .singular_values
        .iter()
        .map(|s| {
            let f = s / (s * s + gamma);
            f * f
        })
        .sum())
}

/// Result of the exhaustive gap search.
#[derive(Debug, Clone)]
pub struct GapSelection {
    pub candidates: Vec<usize>,
    /// Objective averaged over the AoA draws, aligned with `candidates`.
    pub mean_objectives: Vec<f64>,
    /// Candidate with the minimum average, lowest gap on ties.
    pub selected: usize,
}

/// Candidate gaps for the configured array: {1, ..., N/M} when N is a
/// multiple of M, otherwise the geometric feasibility bound
/// {1, ..., floor((N-1)/(M-1))}.
pub fn gap_candidates(cfg: &SystemConfig) -> Vec<usize> {
    let n = cfg.num_ports;
    let m = cfg.rf_chains;
    let max = if n % m == 0 {
        n / m
    } else if m > 1 {
        (n - 1) / (m - 1)
    } else {
        n
    };
    (1..=max).collect()
}

/// Exhaustive search over the candidate gaps: averages `gap_objective` over
/// `aoa_draws` random path tuples (shared across gaps) and returns the full
/// curve plus the minimizer.
pub fn select_gap<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    gamma: f64,
    aoa_draws: usize,
    rng: &mut R,
) -> Result<GapSelection> {
    let candidates = gap_candidates(cfg);
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if aoa_draws == 0 {
        return Err(Error::InvalidConfig("aoa_draws must be >= 1".into()));
    }
    let paths = cfg.num_paths_or_default();
    let tuples: Vec<Vec<f64>> = (0..aoa_draws)
        .map(|_| (0..paths).map(|_| rng.random_range(0.0..PI)).collect())
        .collect();

    let mut mean_objectives = Vec::with_capacity(candidates.len());
    for &gap in &candidates {
        let mut acc = 0.0;
        for tuple in &tuples {
            let response = vandermonde(
                tuple,
                gap,
                cfg.rf_chains,
                cfg.num_ports,
                cfg.aperture_wavelengths,
            )?;
            acc += gap_objective(&response.matrix, gamma)?;
        }
        mean_objectives.push(acc / aoa_draws as f64);
    }

    let mut selected = candidates[0];
    let mut best = mean_objectives[0];
    for (&gap, &value) in candidates.iter().zip(&mean_objectives).skip(1) {
        if value < best {
            best = value;
            selected = gap;
        }
    }
    Ok(GapSelection {
        candidates,
        mean_objectives,
        selected,
    })
}
