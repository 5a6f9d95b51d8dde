//! AoA grid dictionary, sparse angle estimation, and channel refinement
//! through dictionary reconstruction.
//!
//! The dictionary samples the azimuth half-plane on a uniform midpoint grid
//! theta_i = pi * (i - 1/2) / I_a and holds one normalized port-response atom
//! per grid angle. A channel estimate is refined by re-synthesizing it from
//! the few atoms a pursuit selected, which also extrapolates a partial-ports
//! estimate to the full array.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::recovery::somp;

/// Prescribed channel-response dictionary over a set of observed ports.
#[derive(Debug, Clone)]
pub struct AoaDictionary {
    /// num_observed_ports x I_a atom matrix; every column has unit norm.
    pub atoms: DMatrix<Complex64>,
    /// Grid angles theta_i, strictly increasing within (0, pi).
    pub grid: Vec<f64>,
    /// 1-based port positions behind the rows.
    pub port_indices: Vec<usize>,
    /// Total port count N of the underlying array.
    pub num_ports_total: usize,
    pub aperture_wavelengths: f64,
}

impl AoaDictionary {
    pub fn num_observed_ports(&self) -> usize {
        self.port_indices.len()
    }
}

/// Sparse AoA estimate for one device.
#[derive(Debug, Clone)]
pub struct AoaEstimate {
    /// Selected 1-based grid indices, in selection order.
    pub aoa_indices: Vec<usize>,
    /// Grid angles behind `aoa_indices`.
    pub aoas: Vec<f64>,
    /// Least-squares path coefficients in the dictionary normalization.
    pub coefficients: Vec<Complex64>,
    /// Grid size of the dictionary that produced the estimate.
    pub grid_size: usize,
    /// Observed-port count of the dictionary that produced the estimate.
    pub num_observed_ports: usize,
}

/// Builds the dictionary: column i holds
/// (1 / sqrt(N_obs)) * exp(-j * 2 pi (p - 1) W cos(theta_i) / (N - 1))
/// over the given 1-based ports p.
pub fn build_dictionary(
    port_indices: &[usize],
    num_ports_total: usize,
    aperture_wavelengths: f64,
    grid_size: usize,
) -> Result<AoaDictionary> {
    if grid_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "aoa_grid_size must be >= 2 (got {grid_size})"
        )));
    }
    if port_indices.is_empty() {
        return Err(Error::InvalidConfig("dictionary needs at least one port".into()));
    }
    for &p in port_indices {
        if p == 0 || p > num_ports_total {
            return Err(Error::PortIndex {
                index: p,
                num_ports: num_ports_total,
            });
        }
    }
    let grid: Vec<f64> = (1..=grid_size)
        .map(|i| PI * (i as f64 - 0.5) / grid_size as f64)
        .collect();
    let scale = 1.0 / (port_indices.len() as f64).sqrt();
    let atoms = DMatrix::from_fn(port_indices.len(), grid_size, |r, c| {
        let p = port_indices[r];
        let phase = if p == 1 {
            0.0
        } else {
            TAU * (p - 1) as f64 * aperture_wavelengths / (num_ports_total - 1) as f64
                * grid[c].cos()
        };
        scale * Complex64::cis(-phase)
    });
    Ok(AoaDictionary {
        atoms,
        grid,
        port_indices: port_indices.to_vec(),
        num_ports_total,
        aperture_wavelengths,
    })
}

/// Estimates `num_paths` angles by running the pursuit on the single
/// measurement vector `g_hat` against the dictionary atoms.
pub fn estimate_aoa(
    g_hat: &DVector<Complex64>,
    dict: &AoaDictionary,
    num_paths: usize,
) -> Result<AoaEstimate> {
    let rows = dict.atoms.nrows();
    if g_hat.len() != rows {
        return Err(Error::LengthMismatch(format!(
            "channel estimate has {} entries but the dictionary spans {} ports",
            g_hat.len(),
            rows
        )));
    }
    if num_paths > rows || num_paths > dict.atoms.ncols() {
        return Err(Error::TooFewPorts {
            rows: rows.min(dict.atoms.ncols()),
            paths: num_paths,
        });
    }
    let observations = DMatrix::from_column_slice(rows, 1, g_hat.as_slice());
    let result = somp(&observations, &dict.atoms, num_paths);
    Ok(AoaEstimate {
        aoas: result.support.iter().map(|&i| dict.grid[i - 1]).collect(),
        coefficients: result.channel_estimates.column(0).iter().copied().collect(),
        aoa_indices: result.support,
        grid_size: dict.grid.len(),
        num_observed_ports: rows,
    })
}

/// Reconstructs the channel over `full_dict`'s ports from a sparse estimate.
///
/// Coefficients carry the estimation dictionary's 1/sqrt(N_obs) normalization,
/// so they are rescaled by sqrt(N_full / N_obs) to preserve the physical path
/// gains when moving to the full-port dictionary.
pub fn refine_channel(
    full_dict: &AoaDictionary,
    estimate: &AoaEstimate,
) -> Result<DVector<Complex64>> {
    if full_dict.grid.len() != estimate.grid_size {
        return Err(Error::GridMismatch {
            got: estimate.grid_size,
            expected: full_dict.grid.len(),
        });
    }
    if estimate.num_observed_ports == 0 {
        return Err(Error::LengthMismatch("estimate spans zero ports".into()));
    }
    let rows = full_dict.atoms.nrows();
    let scale = (rows as f64 / estimate.num_observed_ports as f64).sqrt();
    let mut out = DVector::<Complex64>::zeros(rows);
    for (&idx, &coeff) in estimate.aoa_indices.iter().zip(&estimate.coefficients) {
        if idx == 0 || idx > full_dict.grid.len() {
            return Err(Error::GridMismatch {
                got: idx,
                expected: full_dict.grid.len(),
            });
        }
        let atom = full_dict.atoms.column(idx - 1);
        for r in 0..rows {
            out[r] += coeff * scale * atom[r];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_vector, select_ports, ChannelRealization, PortGeometry};
    use rand::Rng as _;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid_realization(dict: &AoaDictionary, indices: &[usize], coeffs: &[Complex64]) -> ChannelRealization {
        // Grid-aligned multipath channel: first index plays the LOS role.
        ChannelRealization {
            los_coefficient: coeffs[0],
            los_aoa: dict.grid[indices[0] - 1],
            scatter_coefficients: coeffs[1..].to_vec(),
            scatter_aoas: indices[1..].iter().map(|&i| dict.grid[i - 1]).collect(),
            los_phase: 0.0,
        }
    }

    #[test]
    fn broadside_atom_is_flat() {
        // I_a odd puts a grid point exactly at pi/2.
        let ports: Vec<usize> = (1..=10).collect();
        let dict = build_dictionary(&ports, 100, 10.0, 101).unwrap();
        let atom = dict.atoms.column(50); // theta = pi * 50.5 / 101 = pi / 2
        assert!((dict.grid[50] - PI / 2.0).abs() < 1e-15);
        let expected = Complex64::new(1.0 / 10f64.sqrt(), 0.0);
        for z in atom.iter() {
            assert!((z - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn single_port_atoms_are_unity() {
        let dict = build_dictionary(&[1], 100, 10.0, 16).unwrap();
        for z in dict.atoms.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn gram_matrix_shape() {
        let ports: Vec<usize> = (1..=100).collect();
        let dict = build_dictionary(&ports, 100, 10.0, 100).unwrap();
        let gram = dict.atoms.adjoint() * &dict.atoms;
        for i in 0..100 {
            assert!((gram[(i, i)].re - 1.0).abs() < 1e-12);
            assert!(gram[(i, i)].im.abs() < 1e-12);
        }
        let mut off_max: f64 = 0.0;
        for i in 0..100 {
            for j in 0..100 {
                if i != j {
                    off_max = off_max.max(gram[(i, j)].norm());
                }
            }
        }
        assert!(off_max < 1.0, "off-diagonal max {off_max}");
    }

    #[test]
    fn column_norms_are_exactly_one() {
        let dict = build_dictionary(&[1, 4, 9, 20], 64, 7.0, 33).unwrap();
        for col in dict.atoms.column_iter() {
            let n: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_grid_atom_recovered_exactly() {
        let ports: Vec<usize> = (1..=20).collect();
        let dict = build_dictionary(&ports, 100, 10.0, 100).unwrap();
        let coeff = Complex64::new(0.8, -1.3);
        let g = DVector::from_fn(20, |r, _| coeff * dict.atoms[(r, 41)]);
        let est = estimate_aoa(&g, &dict, 1).unwrap();
        assert_eq!(est.aoa_indices, vec![42]);
        assert!((est.coefficients[0] - coeff).norm() < 1e-10);
    }

    #[test]
    fn two_separated_atoms_recovered() {
        let ports: Vec<usize> = (1..=100).collect();
        let dict = build_dictionary(&ports, 100, 10.0, 100).unwrap();
        // |cos t1 - cos t2| > 4 / I_a keeps the atoms well separated.
        let (i, j) = (30usize, 70usize);
        assert!((dict.grid[i - 1].cos() - dict.grid[j - 1].cos()).abs() > 0.04);
        let (ci, cj) = (Complex64::new(1.0, 0.4), Complex64::new(-0.6, 0.9));
        let g = DVector::from_fn(100, |r, _| ci * dict.atoms[(r, i - 1)] + cj * dict.atoms[(r, j - 1)]);
        let est = estimate_aoa(&g, &dict, 2).unwrap();
        let mut got = est.aoa_indices.clone();
        got.sort_unstable();
        assert_eq!(got, vec![i, j]);
    }

    #[test]
    fn zero_estimate_gives_zero_coefficients() {
        let ports: Vec<usize> = (1..=10).collect();
        let dict = build_dictionary(&ports, 100, 10.0, 50).unwrap();
        let est = estimate_aoa(&DVector::zeros(10), &dict, 3).unwrap();
        assert!(est.coefficients.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn full_port_refinement_reconstructs_exactly() {
        // W = 30 over 100 ports: the beamwidth shrinks to about one grid
        // step, so the grid atoms decorrelate and the greedy pursuit finds
        // the exact support of a grid-aligned mixture.
        let ports: Vec<usize> = (1..=100).collect();
        let dict = build_dictionary(&ports, 100, 30.0, 100).unwrap();
        let indices = [15usize, 40, 62, 88];
        let coeffs = [
            Complex64::new(0.9, 0.1),
            Complex64::new(-0.3, 0.6),
            Complex64::new(0.2, -0.8),
            Complex64::new(0.5, 0.5),
        ];
        let real = grid_realization(&dict, &indices, &coeffs);
        let g = channel_vector(&real, &PortGeometry::fas(100, 30.0));
        let est = estimate_aoa(&g, &dict, 4).unwrap();
        let refined = refine_channel(&dict, &est).unwrap();
        assert!((refined - g).norm() < 1e-9);
    }

    #[test]
    fn zero_coefficients_refine_to_zero() {
        let ports: Vec<usize> = (1..=10).collect();
        let dict = build_dictionary(&ports, 100, 4.5, 50).unwrap();
        let est = AoaEstimate {
            aoa_indices: vec![3, 7],
            aoas: vec![dict.grid[2], dict.grid[6]],
            coefficients: vec![Complex64::new(0.0, 0.0); 2],
            grid_size: 50,
            num_observed_ports: 10,
        };
        let refined = refine_channel(&dict, &est).unwrap();
        assert!(refined.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let dict_a = build_dictionary(&[1, 2, 3], 100, 4.5, 50).unwrap();
        let dict_b = build_dictionary(&(1..=100).collect::<Vec<_>>(), 100, 4.5, 64).unwrap();
        let est = estimate_aoa(&DVector::zeros(3), &dict_a, 2).unwrap();
        assert!(matches!(
            refine_channel(&dict_b, &est),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn partial_ports_estimate_extrapolates_to_full_array() {
        // 10 gapped ports at gap 3, W = 16: the widest alias-free effective
        // aperture for ten observations. Ten samples cannot decorrelate
        // neighboring grid atoms, so a decaying path-gain profile keeps every
        // greedy pick unambiguous; the refined 100-port channel then matches
        // the grid-aligned truth.
        let (n, w, ia) = (100usize, 16.0, 100usize);
        let gapped: Vec<usize> = (0..10).map(|j| 1 + 3 * j).collect();
        let est_dict = build_dictionary(&gapped, n, w, ia).unwrap();
        let full_ports: Vec<usize> = (1..=n).collect();
        let full_dict = build_dictionary(&full_ports, n, w, ia).unwrap();

        let indices = [20usize, 45, 70, 90];
        let coeffs = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.012, -0.016),
            Complex64::new(-0.0003, 0.00026),
            Complex64::new(0.000005, 0.000006),
        ];
        let real = grid_realization(&est_dict, &indices, &coeffs);
        let g_full = channel_vector(&real, &PortGeometry::fas(n, 16.0));
        let g_obs = select_ports(&g_full, &gapped).unwrap();

        let est = estimate_aoa(&g_obs, &est_dict, 4).unwrap();
        let mut got = est.aoa_indices.clone();
        got.sort_unstable();
        assert_eq!(got, indices.to_vec(), "pursuit must find the true atoms");

        let refined = refine_channel(&full_dict, &est).unwrap();
        let rel = (&refined - &g_full).norm() / g_full.norm();
        assert!(rel < 1e-6, "relative reconstruction error {rel}");
    }

    #[test]
    fn reconstruction_residual_non_increasing_in_path_count() {
        let ports: Vec<usize> = (1..=20).collect();
        let dict = build_dictionary(&ports, 100, 4.5, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = DVector::from_fn(20, |_, _| crate::linalg::complex_gaussian(&mut rng, 1.0));
        let mut prev = f64::INFINITY;
        for paths in 1..=6 {
            let est = estimate_aoa(&g, &dict, paths).unwrap();
            let rec = refine_channel(&dict, &est).unwrap();
            let res = (&g - rec).norm();
            assert!(res <= prev + 1e-9, "paths {paths}: {res} > {prev}");
            prev = res;
        }
    }

    #[test]
    fn single_path_grid_bias_stays_within_band() {
        // For an on-axis single path the selected grid point must sit within
        // half the local cos-domain spacing plus one grid step of the truth.
        let ports: Vec<usize> = (1..=100).collect();
        let ia = 100;
        let dict = build_dictionary(&ports, 100, 4.5, ia).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut violations = 0;
        let draws = 1000;
        for _ in 0..draws {
            let theta: f64 = rng.random_range(0.0..PI);
            let real = ChannelRealization {
                los_coefficient: Complex64::new(1.0, 0.0),
                los_aoa: theta,
                scatter_coefficients: vec![],
                scatter_aoas: vec![],
                los_phase: 0.0,
            };
            let g = channel_vector(&real, &PortGeometry::fas(100, 4.5));
            let est = estimate_aoa(&g, &dict, 1).unwrap();
            let picked = est.aoa_indices[0];
            let lo = picked.saturating_sub(2).max(1);
            let hi = (picked + 1).min(ia);
            let local_spacing = (dict.grid[lo - 1].cos() - dict.grid[hi - 1].cos()).abs()
                / (hi - lo) as f64;
            let err = (dict.grid[picked - 1].cos() - theta.cos()).abs();
            if err > 1.5 * local_spacing {
                violations += 1;
            }
        }
        assert!(violations <= 3, "{violations} of {draws} outside the bias band");
    }
}
