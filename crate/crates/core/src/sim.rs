//! End-to-end trial pipelines, E_b/N_0 conversion, and the deterministic
//! Monte Carlo runner.
//!
//! Every trial draws its randomness from a stream derived by hashing
//! (master seed, sweep index, trial index), so results are bit-identical for
//! any parallelism degree and the same devices are drawn when only the mode
//! differs between runs.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::aoa::{build_dictionary, estimate_aoa};
use crate::channel::{channel_vector, draw_channel_realization, select_ports, ChannelRealization};
use crate::codebook::{assign_pilots, build_codebook, synthesize_frame, Codebook};
use crate::config::{Mode, SystemConfig};
use crate::error::{Error, Result};
use crate::metrics::{ad_errors, aoa_nmse, channel_nmse, TrialScore};
use crate::ppce::{regularized_solve, vandermonde};
use crate::recovery::{estimate_active_count, somp};

/// Noise variance from the energy-per-bit constraint:
/// sigma^2 = E_s * T_p / (B_p * 10^(ebn0_db / 10)).
pub fn ebn0_to_noise_variance(cfg: &SystemConfig) -> f64 {
    cfg.per_symbol_energy * cfg.total_pilot_duration as f64
        / (cfg.pilot_bits as f64 * 10f64.powf(cfg.ebn0_db / 10.0))
}

/// Deterministic per-trial random stream.
pub fn trial_rng(master_seed: u64, sweep_index: usize, trial_index: usize) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"fasura.trial.v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((sweep_index as u64).to_le_bytes());
    hasher.update((trial_index as u64).to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Deterministic stream for auxiliary procedures (gap scans and the like),
/// keyed away from the trial streams by a domain label.
pub fn domain_rng(master_seed: u64, domain: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"fasura.domain.v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(domain.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Randomly drawn inputs of one trial. Drawing them separately from the
/// estimation pass lets tests inject hand-built channels and codebooks.
#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub realizations: Vec<ChannelRealization>,
    /// 1-based codebook column per device.
    pub pilot_indices: Vec<usize>,
    pub codebook: Codebook,
}

impl TrialInputs {
    /// Draw order: channel realizations, then the codebook, then pilots, so
    /// runs that differ only in receiver mode see the same devices.
    pub fn draw<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Self> {
        let realizations = (0..cfg.num_devices)
            .map(|_| draw_channel_realization(cfg, rng))
            .collect::<Result<Vec<_>>>()?;
        let codebook = build_codebook(
            cfg.codebook_kind,
            cfg.pilot_length()?,
            cfg.pilot_bits,
            cfg.per_symbol_energy,
            rng,
        )?;
        let pilot_indices = assign_pilots(
            cfg.num_devices,
            cfg.pilot_bits,
            cfg.collision_policy,
            rng,
        )?;
        Ok(Self {
            realizations,
            pilot_indices,
            codebook,
        })
    }
}

/// Outcome of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    /// Assigned by the Monte Carlo runner; 0 for standalone trials.
    pub trial_index: usize,
    pub score: TrialScore,
    /// The operating index gap (partial-ports mode only).
    pub selected_gap: Option<usize>,
    pub num_chunks: usize,
    pub chunk_length: usize,
}

/// Draws fresh inputs and runs the estimation pass.
pub fn run_trial<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<EstimationReport> {
    let inputs = TrialInputs::draw(cfg, rng)?;
    run_trial_with(cfg, &inputs, rng)
}

/// Full estimation pass over the given inputs: frame synthesis, activity
/// detection, channel estimation, AoA estimation, refinement, and scoring.
///
/// The two channel NMSE scores per mode:
/// - alternate ports / ULA: raw least-squares estimate, then the dictionary
///   reconstruction over the same ports;
/// - partial ports: the regularized path-coefficient estimate over the
///   observed ports, then its reconstruction over all N ports.
pub fn run_trial_with<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    inputs: &TrialInputs,
    rng: &mut R,
) -> Result<EstimationReport> {
    cfg.validate()?;
    let frame = synthesize_frame(
        cfg,
        &inputs.codebook,
        &inputs.pilot_indices,
        &inputs.realizations,
        rng,
    )?;
    let ka_estimate = if cfg.ka_known {
        cfg.num_devices
    } else {
        estimate_active_count(&frame, cfg)
    };
    let pursuit = somp(&frame.samples, &inputs.codebook.matrix, ka_estimate);

    let mut devices_by_pilot: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (device, &pilot) in inputs.pilot_indices.iter().enumerate() {
        devices_by_pilot.entry(pilot).or_default().push(device);
    }
    let true_support: Vec<usize> = devices_by_pilot.keys().copied().collect();
    let ad = ad_errors(&true_support, &pursuit.support, cfg.ka_known);

    // Sample columns sorted into ascending port order; identical to the frame
    // layout except under interval activation.
    let column_ports = frame.column_ports();
    let mut order: Vec<usize> = (0..column_ports.len()).collect();
    order.sort_by_key(|&c| column_ports[c]);
    let sorted_ports: Vec<usize> = order.iter().map(|&c| column_ports[c]).collect();

    let dict = build_dictionary(
        &sorted_ports,
        cfg.dictionary_total_ports(),
        cfg.dictionary_aperture(),
        cfg.aoa_grid_size,
    )?;
    let num_paths = cfg.num_paths_or_default();
    let score_aoa = num_paths == cfg.num_scatterers + 1;
    let geom = cfg.geometry();
    let full_truth: Vec<DVector<Complex64>> = inputs
        .realizations
        .iter()
        .map(|r| channel_vector(r, &geom))
        .collect();
    let obs_truth: Vec<DVector<Complex64>> = full_truth
        .iter()
        .map(|g| select_ports(g, &sorted_ports))
        .collect::<Result<Vec<_>>>()?;

    let mut ch_truth = Vec::new();
    let mut ch_est = Vec::new();
    let mut ref_truth = Vec::new();
    let mut ref_est = Vec::new();
    let mut aoa_truth = Vec::new();
    let mut aoa_est = Vec::new();

    for (row, &pilot) in pursuit.support.iter().enumerate() {
        let Some(devices) = devices_by_pilot.get(&pilot) else {
            continue; // false alarm
        };
        // The estimand behind a codebook column is the sum of the channels of
        // the devices that picked it (a single device's channel without pilot
        // collisions).
        let mut truth_obs = DVector::<Complex64>::zeros(sorted_ports.len());
        for &device in devices {
            truth_obs += &obs_truth[device];
        }
        let estimate_row = pursuit.channel_estimates.row(row);
        let g_hat = DVector::from_iterator(
            order.len(),
            order.iter().map(|&c| estimate_row[c]),
        );

        let aoa = estimate_aoa(&g_hat, &dict, num_paths)?;
        if score_aoa && devices.len() == 1 {
            aoa_truth.push(inputs.realizations[devices[0]].aoas());
            aoa_est.push(aoa.aoas.clone());
        }

        match cfg.mode {
            Mode::Apce | Mode::Ula => {
                ch_truth.push(truth_obs.clone());
                ch_est.push(g_hat);
                let refined = crate::aoa::refine_channel(&dict, &aoa)?;
                ref_truth.push(truth_obs);
                ref_est.push(refined);
            }
            Mode::Ppce => {
                let estimator_aoas = if cfg.oracle_aoa && devices.len() == 1 {
                    inputs.realizations[devices[0]].aoas()
                } else {
                    aoa.aoas.clone()
                };
                let response = vandermonde(
                    &estimator_aoas,
                    cfg.gap,
                    cfg.rf_chains,
                    cfg.num_ports,
                    cfg.aperture_wavelengths,
                )?;
                let sigma = regularized_solve(&response.matrix, &g_hat, cfg.gamma)?;
                ch_truth.push(truth_obs);
                ch_est.push(&response.matrix * &sigma);

                let full_response = vandermonde(
                    &estimator_aoas,
                    1,
                    cfg.num_ports,
                    cfg.num_ports,
                    cfg.aperture_wavelengths,
                )?;
                let mut truth_full = DVector::<Complex64>::zeros(cfg.num_ports);
                for &device in devices {
                    truth_full += &full_truth[device];
                }
                ref_truth.push(truth_full);
                ref_est.push(&full_response.matrix * &sigma);
            }
        }
    }

    let score = TrialScore {
        missed_detections: ad.missed,
        false_alarms: ad.false_alarms,
        channel_nmse: channel_nmse(&ch_truth, &ch_est)?,
        channel_nmse_refined: channel_nmse(&ref_truth, &ref_est)?,
        aoa_nmse: aoa_nmse(&aoa_truth, &aoa_est)?,
        ka_estimate,
    };
    Ok(EstimationReport {
        trial_index: 0,
        score,
        selected_gap: (cfg.mode == Mode::Ppce).then_some(cfg.gap),
        num_chunks: frame.num_chunks,
        chunk_length: frame.chunk_length,
    })
}

/// Runs `trials` independent trials of one sweep point, in trial order.
///
/// With the `parallel` feature and `parallelism > 1` the trials run on a
/// dedicated worker pool; the output is bit-identical either way.
pub fn run_point(
    cfg: &SystemConfig,
    sweep_index: usize,
    trials: usize,
    parallelism: usize,
) -> Result<Vec<EstimationReport>> {
    let cfg = cfg.resolved()?;
    let run_one = |trial: usize| -> Result<EstimationReport> {
        let mut rng = trial_rng(cfg.seed, sweep_index, trial);
        let mut report = run_trial(&cfg, &mut rng)?;
        report.trial_index = trial;
        Ok(report)
    };

    #[cfg(feature = "parallel")]
    if parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
        return pool.install(|| (0..trials).into_par_iter().map(run_one).collect());
    }

    let _ = parallelism;
    (0..trials).map(run_one).collect()
}

/// One aggregated row of the result table; mirrors the CSV schema.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPointSummary {
    pub mode: Mode,
    pub ebn0_db: f64,
    pub trials: usize,
    /// Trials with no correctly detected device, excluded from NMSE means.
    pub excluded_trials: usize,
    pub sigma2: f64,
    /// Missed detections per active device, averaged over trials.
    pub ad_md_rate: f64,
    /// False alarms per active device, averaged over trials.
    pub ad_fa_rate: f64,
    pub ka_est_mean: f64,
    pub ch_nmse: f64,
    pub ch_nmse_refined: f64,
    pub aoa_nmse: f64,
    pub gap: usize,
    pub gamma: f64,
    pub seed: u64,
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Aggregates per-trial reports; means run in ascending trial order.
pub fn summarize_point(cfg: &SystemConfig, reports: &[EstimationReport]) -> SweepPointSummary {
    let trials = reports.len();
    let ka = cfg.num_devices as f64;
    let per_device = |count: usize| if ka > 0.0 { count as f64 / ka } else { 0.0 };
    SweepPointSummary {
        mode: cfg.mode,
        ebn0_db: cfg.ebn0_db,
        trials,
        excluded_trials: reports
            .iter()
            .filter(|r| r.score.channel_nmse.is_none())
            .count(),
        sigma2: ebn0_to_noise_variance(cfg),
        ad_md_rate: mean_of(reports.iter().map(|r| per_device(r.score.missed_detections))),
        ad_fa_rate: mean_of(reports.iter().map(|r| per_device(r.score.false_alarms))),
        ka_est_mean: mean_of(reports.iter().map(|r| r.score.ka_estimate as f64)),
        ch_nmse: mean_of(reports.iter().filter_map(|r| r.score.channel_nmse)),
        ch_nmse_refined: mean_of(reports.iter().filter_map(|r| r.score.channel_nmse_refined)),
        aoa_nmse: mean_of(reports.iter().filter_map(|r| r.score.aoa_nmse)),
        gap: if cfg.mode == Mode::Ppce { cfg.gap } else { 0 },
        gamma: cfg.gamma,
        seed: cfg.seed,
    }
}

/// Monte Carlo sweep: `trials` trials per E_b/N_0 point, each trial seeded
/// from (seed, sweep index, trial index).
pub fn run_monte_carlo(
    cfg: &SystemConfig,
    sweep_ebn0_db: &[f64],
    trials: usize,
    parallelism: usize,
) -> Result<Vec<SweepPointSummary>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if parallelism == 0 {
        return Err(Error::InvalidConfig("parallelism must be >= 1".into()));
    }
    let base = cfg.resolved()?;
    sweep_ebn0_db
        .iter()
        .enumerate()
        .map(|(index, &ebn0_db)| {
            let point = SystemConfig {
                ebn0_db,
                ..base.clone()
            };
            let reports = run_point(&point, index, trials, parallelism)?;
            Ok(summarize_point(&point, &reports))
        })
        .collect()
}
