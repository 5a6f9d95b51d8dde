//! Geometric multipath channel synthesis for fluid-antenna ports and ULA
//! elements.
//!
//! Every device sees one line-of-sight path plus `L_s` scattered paths. The
//! LOS coefficient carries power K*Omega/(K+1) and the scattered coefficients
//! are rescaled after sampling so their aggregate power equals Omega/(K+1)
//! exactly, not just in expectation.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::complex_gaussian;

/// Per-device path parameters: one LOS path plus `L_s` scattered paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// LOS coefficient sigma_0 = sqrt(K*Omega/(K+1)) * exp(j*alpha).
    pub los_coefficient: Complex64,
    /// LOS azimuth angle of arrival, radians in [0, pi).
    pub los_aoa: f64,
    /// Scattered-path coefficients, aggregate power Omega/(K+1).
    pub scatter_coefficients: Vec<Complex64>,
    /// Scattered-path azimuth angles, radians in [0, pi).
    pub scatter_aoas: Vec<f64>,
    /// Arbitrary LOS phase alpha.
    pub los_phase: f64,
}

impl ChannelRealization {
    /// All path angles, LOS first.
    pub fn aoas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scatter_aoas.len() + 1);
        out.push(self.los_aoa);
        out.extend_from_slice(&self.scatter_aoas);
        out
    }

    /// Number of paths including the LOS component.
    pub fn num_paths(&self) -> usize {
        self.scatter_aoas.len() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    Fas,
    Ula,
}

/// Linear array description: a fluid antenna with `N` ports spread over a
/// `W`-wavelength aperture, or a half-wavelength ULA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortGeometry {
    pub num_ports: usize,
    pub aperture_wavelengths: f64,
    pub kind: ArrayKind,
}

impl PortGeometry {
    pub fn fas(num_ports: usize, aperture_wavelengths: f64) -> Self {
        Self {
            num_ports,
            aperture_wavelengths,
            kind: ArrayKind::Fas,
        }
    }

    /// Half-wavelength array; the aperture follows as (M - 1) / 2 wavelengths.
    pub fn ula(num_elements: usize) -> Self {
        Self {
            num_ports: num_elements,
            aperture_wavelengths: (num_elements.saturating_sub(1)) as f64 / 2.0,
            kind: ArrayKind::Ula,
        }
    }

    /// Spatial phase of the 1-based `port` at angle `aoa`.
    ///
    /// FAS ports sit W*lambda/(N-1) apart, ULA elements lambda/2 apart; the
    /// first port is the phase reference in both cases.
    pub fn phase(&self, port: usize, aoa: f64) -> f64 {
        let n = (port - 1) as f64;
        if port == 1 {
            return 0.0;
        }
        match self.kind {
            ArrayKind::Ula => PI * n * aoa.cos(),
            ArrayKind::Fas => {
                TAU * n * self.aperture_wavelengths / (self.num_ports - 1) as f64 * aoa.cos()
            }
        }
    }
}

/// Draws one channel realization: AoAs i.i.d. uniform on [0, pi), LOS phase
/// uniform on [0, 2*pi), scattered coefficients complex Gaussian rescaled to
/// exact aggregate power.
pub fn draw_channel_realization<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if cfg.num_scatterers == 0 && cfg.rice_factor == 0.0 {
        return Err(Error::ZeroPowerChannel);
    }
    let k = cfg.rice_factor;
    let omega = cfg.avg_energy;

    let los_phase = rng.random_range(0.0..TAU);
    let los_aoa = rng.random_range(0.0..PI);
    let los_coefficient = Complex64::from_polar((k * omega / (k + 1.0)).sqrt(), los_phase);

    let scatter_aoas: Vec<f64> = (0..cfg.num_scatterers)
        .map(|_| rng.random_range(0.0..PI))
        .collect();

    let mut scatter_coefficients = Vec::with_capacity(cfg.num_scatterers);
    if cfg.num_scatterers > 0 {
        let target = omega / (k + 1.0);
        loop {
            scatter_coefficients.clear();
            scatter_coefficients
                .extend((0..cfg.num_scatterers).map(|_| complex_gaussian(rng, 1.0)));
            let power: f64 = scatter_coefficients.iter().map(|z| z.norm_sqr()).sum();
            if power > 0.0 {
                let scale = (target / power).sqrt();
                for z in &mut scatter_coefficients {
                    *z *= scale;
                }
                break;
            }
        }
    }

    Ok(ChannelRealization {
        los_coefficient,
        los_aoa,
        scatter_coefficients,
        scatter_aoas,
        los_phase,
    })
}

/// Channel vector over all ports of `geom`: element n is
/// sigma_0 * exp(-j*phi_n(theta_0)) + sum_l sigma_l * exp(-j*phi_n(theta_l)).
pub fn channel_vector(realization: &ChannelRealization, geom: &PortGeometry) -> DVector<Complex64> {
    DVector::from_fn(geom.num_ports, |i, _| {
        let port = i + 1;
        let mut g = realization.los_coefficient
            * Complex64::cis(-geom.phase(port, realization.los_aoa));
        for (sigma, theta) in realization
            .scatter_coefficients
            .iter()
            .zip(&realization.scatter_aoas)
        {
            g += sigma * Complex64::cis(-geom.phase(port, *theta));
        }
        g
    })
}

/// Subvector of `full_channel` at the given strictly increasing 1-based port
/// indices.
pub fn select_ports(
    full_channel: &DVector<Complex64>,
    indices: &[usize],
) -> Result<DVector<Complex64>> {
    let n = full_channel.len();
    let mut prev = 0usize;
    for &idx in indices {
        if idx == 0 || idx > n {
            return Err(Error::PortIndex {
                index: idx,
                num_ports: n,
            });
        }
        if idx <= prev {
            return Err(Error::PortOrder);
        }
        prev = idx;
    }
    Ok(DVector::from_iterator(
        indices.len(),
        indices.iter().map(|&idx| full_channel[idx - 1]),
    ))
}
