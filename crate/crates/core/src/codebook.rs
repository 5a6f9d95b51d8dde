//! Common pilot codebook, pilot assignment, and received-frame synthesis.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_vector, select_ports, ChannelRealization};
use crate::config::{ActivationPattern, CollisionPolicy, Mode, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::complex_gaussian;
use crate::sim::ebn0_to_noise_variance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    Gaussian,
    SubsampledDft,
}

/// Common pilot matrix A with 2^B_p columns; every column carries energy
/// E_s * L_p exactly.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub matrix: DMatrix<Complex64>,
    pub per_symbol_energy: f64,
    pub kind: CodebookKind,
}

impl Codebook {
    pub fn pilot_length(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_pilots(&self) -> usize {
        self.matrix.ncols()
    }

    /// Per-column energy E_s * L_p.
    pub fn column_energy(&self) -> f64 {
        self.per_symbol_energy * self.pilot_length() as f64
    }
}

pub fn build_codebook<R: Rng + ?Sized>(
    kind: CodebookKind,
    pilot_length: usize,
    pilot_bits: u32,
    per_symbol_energy: f64,
    rng: &mut R,
) -> Result<Codebook> {
    if pilot_length == 0 {
        return Err(Error::InvalidConfig("pilot_length must be >= 1".into()));
    }
    if pilot_bits == 0 {
        return Err(Error::InvalidConfig("pilot_bits must be >= 1".into()));
    }
    let size = 1usize << pilot_bits;
    let mut matrix = match kind {
        CodebookKind::Gaussian => {
            DMatrix::from_fn(pilot_length, size, |_, _| complex_gaussian(rng, 1.0))
        }
        CodebookKind::SubsampledDft => {
            if pilot_length > size {
                return Err(Error::PilotTooLong {
                    pilot_length,
                    codebook_size: size,
                });
            }
            let rows = rand::seq::index::sample(rng, size, pilot_length).into_vec();
            let scale = 1.0 / (size as f64).sqrt();
            DMatrix::from_fn(pilot_length, size, |r, c| {
                scale * Complex64::cis(-TAU * (rows[r] * c) as f64 / size as f64)
            })
        }
    };
    let target = (per_symbol_energy * pilot_length as f64).sqrt();
    for mut col in matrix.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col *= Complex64::new(target / norm, 0.0);
        }
    }
    Ok(Codebook {
        matrix,
        per_symbol_energy,
        kind,
    })
}

/// Draws the 1-based codebook column index of each device.
pub fn assign_pilots<R: Rng + ?Sized>(
    num_devices: usize,
    pilot_bits: u32,
    policy: CollisionPolicy,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let size = 1usize << pilot_bits;
    match policy {
        CollisionPolicy::Distinct => {
            if num_devices > size {
                return Err(Error::TooManyDevices {
                    num_devices,
                    codebook_size: size,
                });
            }
            Ok(rand::seq::index::sample(rng, size, num_devices)
                .into_iter()
                .map(|i| i + 1)
                .collect())
        }
        CollisionPolicy::Iid => Ok((0..num_devices)
            .map(|_| rng.random_range(0..size) + 1)
            .collect()),
    }
}

/// Observed 1-based port indices per chunk for the active mode.
///
/// Alternate-ports mode partitions [1..N] into S = N/M chunks (consecutive
/// blocks or interleaved sets); partial-ports mode observes one gapped set
/// for the whole frame; the ULA baseline observes all M elements.
pub fn port_layout(cfg: &SystemConfig) -> Result<Vec<Vec<usize>>> {
    match cfg.mode {
        Mode::Apce => {
            let chunks = cfg.apce_chunk_count()?;
            let per_chunk = cfg.rf_chains;
            let layout = (1..=chunks)
                .map(|s| match cfg.activation_pattern {
                    ActivationPattern::Vicinity => {
                        ((s - 1) * per_chunk + 1..=s * per_chunk).collect()
                    }
                    ActivationPattern::Interval => {
                        (0..per_chunk).map(|j| s + j * chunks).collect()
                    }
                })
                .collect();
            Ok(layout)
        }
        Mode::Ppce => {
            let last = 1 + (cfg.rf_chains - 1) * cfg.gap;
            if last > cfg.num_ports {
                return Err(Error::PortOverflow {
                    last,
                    num_ports: cfg.num_ports,
                });
            }
            Ok(vec![(0..cfg.rf_chains).map(|j| 1 + j * cfg.gap).collect()])
        }
        Mode::Ula => Ok(vec![(1..=cfg.rf_chains).collect()]),
    }
}

/// Noisy pilot-phase observation with its chunk/port layout.
#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    /// L_p x N' sample matrix; alternate-ports chunks are stacked
    /// horizontally in chunk order.
    pub samples: DMatrix<Complex64>,
    pub mode: Mode,
    /// Rows per chunk (= pilot length L_p).
    pub chunk_length: usize,
    pub num_chunks: usize,
    /// Observed 1-based port indices, one list per chunk.
    pub observed_port_indices: Vec<Vec<usize>>,
    pub noise_variance: f64,
}

impl ReceivedFrame {
    /// Port index behind each sample column, in column order.
    pub fn column_ports(&self) -> Vec<usize> {
        self.observed_port_indices.iter().flatten().copied().collect()
    }
}

/// Synthesizes the received pilot frame for the configured mode:
/// each chunk is sum_k x_k * g_{k,s}^T plus complex Gaussian noise of variance
/// sigma^2 per sample.
pub fn synthesize_frame<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    codebook: &Codebook,
    pilot_indices: &[usize],
    realizations: &[ChannelRealization],
    rng: &mut R,
) -> Result<ReceivedFrame> {
    if pilot_indices.len() != realizations.len() {
        return Err(Error::LengthMismatch(format!(
            "{} pilot indices for {} channel realizations",
            pilot_indices.len(),
            realizations.len()
        )));
    }
    let layout = port_layout(cfg)?;
    let pilot_length = codebook.pilot_length();
    let noise_variance = ebn0_to_noise_variance(cfg);
    let geom = cfg.geometry();
    let full_channels: Vec<_> = realizations
        .iter()
        .map(|r| channel_vector(r, &geom))
        .collect();

    let total_cols: usize = layout.iter().map(Vec::len).sum();
    let mut samples = DMatrix::<Complex64>::zeros(pilot_length, total_cols);
    let mut col_offset = 0;
    for ports in &layout {
        for (&pilot, g_full) in pilot_indices.iter().zip(&full_channels) {
            if pilot == 0 || pilot > codebook.num_pilots() {
                return Err(Error::PilotIndex {
                    index: pilot,
                    codebook_size: codebook.num_pilots(),
                });
            }
            let x = codebook.matrix.column(pilot - 1);
            let g = select_ports(g_full, ports)?;
            for (j, gj) in g.iter().enumerate() {
                for (r, xr) in x.iter().enumerate() {
                    samples[(r, col_offset + j)] += xr * gj;
                }
            }
        }
        for r in 0..pilot_length {
            for j in 0..ports.len() {
                samples[(r, col_offset + j)] += complex_gaussian(rng, noise_variance);
            }
        }
        col_offset += ports.len();
    }

    Ok(ReceivedFrame {
        samples,
        mode: cfg.mode,
        chunk_length: pilot_length,
        num_chunks: layout.len(),
        observed_port_indices: layout,
        noise_variance,
    })
}
