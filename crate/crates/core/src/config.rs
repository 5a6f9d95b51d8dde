//! Scenario configuration shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::channel::PortGeometry;
use crate::codebook::CodebookKind;
use crate::error::{Error, Result};

/// Receiver operating strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Alternate-ports estimation: cycle through port subsets over S chunks
    /// until all N ports have been observed.
    Apce,
    /// Partial-ports estimation: observe a fixed gapped subset of ports for
    /// the whole pilot duration.
    Ppce,
    /// Half-wavelength uniform linear array baseline.
    Ula,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Apce => "apce",
            Mode::Ppce => "ppce",
            Mode::Ula => "ula",
        })
    }
}

/// Which ports each alternate-ports chunk activates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationPattern {
    /// Chunk s observes the s-th block of consecutive ports.
    Vicinity,
    /// Chunk s observes every S-th port starting from port s.
    Interval,
}

/// How devices pick pilot codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionPolicy {
    /// Sampling without replacement; estimation metrics are not confounded
    /// by pilot collisions.
    Distinct,
    /// Independent uniform draws; collisions possible.
    Iid,
}

/// All scenario parameters for one simulation run.
///
/// Field names double as the JSON configuration schema; unknown keys are
/// rejected when parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of active devices K_a.
    pub num_devices: usize,
    /// Number of scattered paths L_s per device (LOS excluded).
    pub num_scatterers: usize,
    /// Total pilot duration T_p in channel uses.
    pub total_pilot_duration: usize,
    /// Rice factor K (LOS-to-scatter power ratio).
    pub rice_factor: f64,
    /// Average channel energy Omega.
    pub avg_energy: f64,
    /// Number of AoA grid samples I_a.
    pub aoa_grid_size: usize,
    /// Number of RF chains M (simultaneously observable ports).
    pub rf_chains: usize,
    /// Number of fluid-antenna ports N.
    pub num_ports: usize,
    /// Fluid-antenna aperture W in wavelengths.
    pub aperture_wavelengths: f64,
    /// Pilot selection bits B_p; the codebook has 2^B_p columns.
    pub pilot_bits: u32,
    /// Per-symbol pilot energy E_s.
    pub per_symbol_energy: f64,
    /// Operating energy-per-bit over noise density in dB.
    pub ebn0_db: f64,
    pub mode: Mode,
    /// Port index gap Delta (partial-ports mode).
    pub gap: usize,
    /// Regularizer gamma for the path-coefficient estimator.
    pub gamma: f64,
    /// Whether the receiver knows K_a (otherwise it is estimated from power).
    pub ka_known: bool,
    pub activation_pattern: ActivationPattern,
    pub collision_policy: CollisionPolicy,
    pub codebook_kind: CodebookKind,
    /// Paths estimated per device; defaults to L_s + 1 when absent.
    pub num_paths: Option<usize>,
    /// Diagnostic mode: feed true AoAs to the path-coefficient estimator.
    pub oracle_aoa: bool,
    /// Master seed for all random streams.
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_devices: 5,
            num_scatterers: 3,
            total_pilot_duration: 200,
            rice_factor: 2.0,
            avg_energy: 1.0,
            aoa_grid_size: 100,
            rf_chains: 10,
            num_ports: 100,
            // Same physical antenna size as the M-element half-wavelength
            // baseline: W = (M - 1) / 2.
            aperture_wavelengths: 4.5,
            pilot_bits: 8,
            per_symbol_energy: 1.0,
            ebn0_db: 0.0,
            mode: Mode::Apce,
            gap: 10,
            gamma: 1.0,
            ka_known: false,
            activation_pattern: ActivationPattern::Vicinity,
            collision_policy: CollisionPolicy::Distinct,
            codebook_kind: CodebookKind::Gaussian,
            num_paths: None,
            oracle_aoa: false,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Codebook column count 2^B_p.
    pub fn codebook_size(&self) -> usize {
        1usize << self.pilot_bits
    }

    /// Paths estimated per device (L_s + 1 unless overridden).
    pub fn num_paths_or_default(&self) -> usize {
        self.num_paths.unwrap_or(self.num_scatterers + 1)
    }

    /// Number of alternate-ports chunks S = N / M.
    pub fn apce_chunk_count(&self) -> Result<usize> {
        if self.num_ports % self.rf_chains != 0 {
            return Err(Error::InvalidConfig(format!(
                "num_ports must be divisible by rf_chains for alternate-ports mode \
                 (got num_ports = {}, rf_chains = {})",
                self.num_ports, self.rf_chains
            )));
        }
        Ok(self.num_ports / self.rf_chains)
    }

    /// Pilot length L_p for the active mode.
    pub fn pilot_length(&self) -> Result<usize> {
        match self.mode {
            Mode::Apce => {
                let chunks = self.apce_chunk_count()?;
                if self.total_pilot_duration % chunks != 0 {
                    return Err(Error::InvalidConfig(format!(
                        "total_pilot_duration must be divisible by the chunk count \
                         (got total_pilot_duration = {}, chunks = {})",
                        self.total_pilot_duration, chunks
                    )));
                }
                Ok(self.total_pilot_duration / chunks)
            }
            Mode::Ppce | Mode::Ula => Ok(self.total_pilot_duration),
        }
    }

    /// Array geometry of the active mode.
    pub fn geometry(&self) -> PortGeometry {
        match self.mode {
            Mode::Apce | Mode::Ppce => {
                PortGeometry::fas(self.num_ports, self.aperture_wavelengths)
            }
            Mode::Ula => PortGeometry::ula(self.rf_chains),
        }
    }

    /// Total port count the AoA dictionary spans for the active mode.
    pub fn dictionary_total_ports(&self) -> usize {
        match self.mode {
            Mode::Apce | Mode::Ppce => self.num_ports,
            Mode::Ula => self.rf_chains,
        }
    }

    /// Aperture used for the dictionary phase of the active mode.
    pub fn dictionary_aperture(&self) -> f64 {
        match self.mode {
            Mode::Apce | Mode::Ppce => self.aperture_wavelengths,
            Mode::Ula => (self.rf_chains as f64 - 1.0) / 2.0,
        }
    }

    /// Normalized copy: forces the ULA aperture to (M - 1) / 2 wavelengths
    /// (identical physical antenna size) and validates.
    pub fn resolved(&self) -> Result<SystemConfig> {
        let mut cfg = self.clone();
        if cfg.mode == Mode::Ula {
            cfg.aperture_wavelengths = (cfg.rf_chains as f64 - 1.0) / 2.0;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_ports < 2 {
            return bad(format!("num_ports must be >= 2 (got {})", self.num_ports));
        }
        if self.rf_chains == 0 {
            return bad("rf_chains must be >= 1".into());
        }
        if self.rf_chains > self.num_ports {
            return bad(format!(
                "rf_chains must not exceed num_ports (got {} > {})",
                self.rf_chains, self.num_ports
            ));
        }
        if self.total_pilot_duration == 0 {
            return bad("total_pilot_duration must be >= 1".into());
        }
        if !(self.rice_factor.is_finite() && self.rice_factor >= 0.0) {
            return bad(format!("rice_factor must be finite and >= 0 (got {})", self.rice_factor));
        }
        if !(self.avg_energy.is_finite() && self.avg_energy > 0.0) {
            return bad(format!("avg_energy must be finite and > 0 (got {})", self.avg_energy));
        }
        if !(self.per_symbol_energy.is_finite() && self.per_symbol_energy > 0.0) {
            return bad(format!(
                "per_symbol_energy must be finite and > 0 (got {})",
                self.per_symbol_energy
            ));
        }
        if !(self.aperture_wavelengths.is_finite() && self.aperture_wavelengths > 0.0) {
            return bad(format!(
                "aperture_wavelengths must be finite and > 0 (got {})",
                self.aperture_wavelengths
            ));
        }
        if self.ebn0_db.is_nan() {
            return bad("ebn0_db must not be NaN".into());
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be finite and >= 0 (got {})", self.gamma));
        }
        if self.pilot_bits == 0 || self.pilot_bits > 24 {
            return bad(format!("pilot_bits must lie in [1, 24] (got {})", self.pilot_bits));
        }
        if self.aoa_grid_size < 2 {
            return bad(format!("aoa_grid_size must be >= 2 (got {})", self.aoa_grid_size));
        }
        if self.num_scatterers == 0 && self.rice_factor == 0.0 {
            return bad(
                "num_scatterers = 0 together with rice_factor = 0 leaves a zero-power channel"
                    .into(),
            );
        }
        if self.collision_policy == CollisionPolicy::Distinct
            && self.num_devices > self.codebook_size()
        {
            return bad(format!(
                "num_devices must not exceed 2^pilot_bits under the distinct collision policy \
                 (got {} > {})",
                self.num_devices,
                self.codebook_size()
            ));
        }
        let paths = self.num_paths_or_default();
        if paths == 0 {
            return bad("num_paths must be >= 1".into());
        }
        if paths > self.aoa_grid_size {
            return bad(format!(
                "num_paths must not exceed aoa_grid_size (got {} > {})",
                paths, self.aoa_grid_size
            ));
        }
        match self.mode {
            Mode::Apce => {
                self.pilot_length()?;
            }
            Mode::Ppce => {
                if self.gap == 0 {
                    return bad("gap must be >= 1 for partial-ports mode".into());
                }
                let last = 1 + (self.rf_chains - 1) * self.gap;
                if last > self.num_ports {
                    return Err(Error::PortOverflow {
                        last,
                        num_ports: self.num_ports,
                    });
                }
                if paths > self.rf_chains {
                    return bad(format!(
                        "num_paths must not exceed rf_chains in partial-ports mode \
                         (got {} > {})",
                        paths, self.rf_chains
                    ));
                }
            }
            Mode::Ula => {
                if paths > self.rf_chains {
                    return bad(format!(
                        "num_paths must not exceed rf_chains for the ULA baseline \
                         (got {} > {})",
                        paths, self.rf_chains
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SystemConfig::default().validate().unwrap();
    }

    #[test]
    fn apce_rejects_indivisible_ports() {
        let cfg = SystemConfig {
            num_ports: 100,
            rf_chains: 7,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn ppce_rejects_port_overflow() {
        let cfg = SystemConfig {
            mode: Mode::Ppce,
            gap: 12,
            ..Default::default()
        };
        // last port = 1 + 9 * 12 = 109 > 100
        assert!(matches!(cfg.validate(), Err(Error::PortOverflow { .. })));
    }

    #[test]
    fn resolved_forces_ula_aperture() {
        let cfg = SystemConfig {
            mode: Mode::Ula,
            aperture_wavelengths: 10.0,
            ..Default::default()
        };
        let resolved = cfg.resolved().unwrap();
        assert_eq!(resolved.aperture_wavelengths, 4.5);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SystemConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<SystemConfig>(r#"{"num_devices": 5, "typo_key": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("typo_key"));
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: SystemConfig = serde_json::from_str(r#"{"mode": "ppce"}"#).unwrap();
        assert_eq!(cfg.mode, Mode::Ppce);
        assert_eq!(cfg.num_devices, 5);
    }

    #[test]
    fn pilot_length_per_mode() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.pilot_length().unwrap(), 20); // T_p / (N / M) = 200 / 10
        let cfg = SystemConfig {
            mode: Mode::Ppce,
            ..Default::default()
        };
        assert_eq!(cfg.pilot_length().unwrap(), 200);
    }
}
