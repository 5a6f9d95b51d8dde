//! Command-line front end: configuration loading, experiment orchestration,
//! and CSV emission for plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fasura::ppce::select_gap;
use fasura::sim::{domain_rng, ebn0_to_noise_variance, run_monte_carlo, SweepPointSummary};
use fasura::SystemConfig;

/// Environment variable that overrides the default master seed when the
/// configuration does not set one.
const SEED_ENV: &str = "FASURA_SEED";

#[derive(Parser)]
#[command(name = "fasura", version, about = "Fluid-antenna unsourced random access channel-estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo E_b/N_0 sweep and write a CSV results table.
    Simulate {
        /// JSON configuration file (SystemConfig field names; unknown keys rejected).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Sweep specification `start:stop:step` (inclusive) or a single value;
        /// defaults to the configured ebn0_db.
        #[arg(long = "sweep-ebn0", value_name = "SPEC", allow_hyphen_values = true)]
        sweep_ebn0: Option<String>,
        /// Trials per sweep point.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Worker threads for the Monte Carlo runner (results do not depend on it).
        #[arg(long)]
        jobs: Option<usize>,
        /// Configuration override `key=value`, repeatable; shadows file values.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Shorthand for `--set mode=...`.
        #[arg(long)]
        mode: Option<String>,
        /// Shorthand for `--set gap=...`.
        #[arg(long)]
        gap: Option<usize>,
        /// Shorthand for `--set gamma=...`.
        #[arg(long)]
        gamma: Option<f64>,
        /// Shorthand for `--set seed=...`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Scan the port-gap candidates and write the averaged objective curve.
    GapSelect {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Regularizer for the objective; defaults to the deviation-matched
        /// value (K+1) * sigma^2 / (Omega * E_s * T_p) at the configured E_b/N_0.
        #[arg(long)]
        gamma: Option<f64>,
        /// Random AoA tuples averaged per candidate gap.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the resolved configuration as JSON.
    DumpConfig {
        /// JSON configuration file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            sweep_ebn0,
            trials,
            jobs,
            set,
            mode,
            gap,
            gamma,
            seed,
        } => {
            let mut overrides = parse_overrides(&set)?;
            if let Some(mode) = mode {
                overrides.push(("mode".into(), serde_json::Value::String(mode)));
            }
            if let Some(gap) = gap {
                overrides.push(("gap".into(), serde_json::json!(gap)));
            }
            if let Some(gamma) = gamma {
                overrides.push(("gamma".into(), serde_json::json!(gamma)));
            }
            if let Some(seed) = seed {
                overrides.push(("seed".into(), serde_json::json!(seed)));
            }
            let cfg = load_config(Some(&config), &overrides)?;
            let sweep = match sweep_ebn0 {
                Some(spec) => parse_sweep(&spec)?,
                None => vec![cfg.ebn0_db],
            };
            if trials == 0 {
                return Err(CliError::Config("trials must be >= 1".into()));
            }
            let jobs = jobs.unwrap_or_else(default_jobs);
            if jobs == 0 {
                return Err(CliError::Config("jobs must be >= 1".into()));
            }
            let rows = run_monte_carlo(&cfg, &sweep, trials, jobs)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let csv = render_results_csv(&cfg, &out, &rows)?;
            fs::write(&out, csv).map_err(|e| {
                CliError::Runtime(format!("cannot write {}: {e}", out.display()))
            })?;
            for row in &rows {
                println!(
                    "ebn0 {:>6.2} dB: md_rate {:.4}  fa_rate {:.4}  ka_mean {:.2}  \
                     ch_nmse {:.4e}  ch_refined {:.4e}  aoa_nmse {:.4e}  (excluded {}/{})",
                    row.ebn0_db,
                    row.ad_md_rate,
                    row.ad_fa_rate,
                    row.ka_est_mean,
                    row.ch_nmse,
                    row.ch_nmse_refined,
                    row.aoa_nmse,
                    row.excluded_trials,
                    row.trials
                );
            }
            Ok(())
        }
        Command::GapSelect {
            config,
            out,
            gamma,
            draws,
            set,
        } => {
            let overrides = parse_overrides(&set)?;
            let cfg = load_config(Some(&config), &overrides)?;
            let gamma = gamma.unwrap_or_else(|| deviation_matched_gamma(&cfg));
            let mut rng = domain_rng(cfg.seed, "gap-select");
            let selection = select_gap(&cfg, gamma, draws, &mut rng)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let csv = render_gap_csv(&cfg, &out, gamma, &selection)?;
            fs::write(&out, csv).map_err(|e| {
                CliError::Runtime(format!("cannot write {}: {e}", out.display()))
            })?;
            println!("selected gap = {} (gamma = {gamma})", selection.selected);
            Ok(())
        }
        Command::DumpConfig { config, set, out } => {
            let overrides = parse_overrides(&set)?;
            let cfg = load_config(config.as_deref(), &overrides)?;
            let text = serde_json::to_string_pretty(&cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            match out {
                Some(path) => fs::write(&path, text + "\n").map_err(|e| {
                    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
                })?,
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// The regularizer matched to the least-squares deviation variance of the
/// channel estimate: gamma = (K+1) * sigma_d^2 / Omega with
/// sigma_d^2 = sigma^2 / (E_s * T_p).
fn deviation_matched_gamma(cfg: &SystemConfig) -> f64 {
    let sigma2 = ebn0_to_noise_variance(cfg);
    (cfg.rice_factor + 1.0) * sigma2
        / (cfg.avg_energy * cfg.per_symbol_energy * cfg.total_pilot_duration as f64)
}

fn parse_overrides(entries: &[String]) -> Result<Vec<(String, serde_json::Value)>, CliError> {
    entries
        .iter()
        .map(|entry| {
            let (key, raw) = entry.split_once('=').ok_or_else(|| {
                CliError::Config(format!("override `{entry}` is not of the form key=value"))
            })?;
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "override `{entry}` has an empty key"
                )));
            }
            // Bare words (enum values) double as strings.
            let value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            Ok((key.to_string(), value))
        })
        .collect()
}

fn load_config(
    path: Option<&Path>,
    overrides: &[(String, serde_json::Value)],
) -> Result<SystemConfig, CliError> {
    let mut value: serde_json::Value = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config file {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("config file {} is not valid JSON: {e}", p.display()))
            })?
        }
        None => serde_json::json!({}),
    };
    let object = value
        .as_object_mut()
        .ok_or_else(|| CliError::Config("config root must be a JSON object".into()))?;
    if !object.contains_key("seed") {
        if let Ok(env_seed) = std::env::var(SEED_ENV) {
            let seed: u64 = env_seed.parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{env_seed}`"))
            })?;
            object.insert("seed".into(), serde_json::json!(seed));
        }
    }
    for (key, val) in overrides {
        object.insert(key.clone(), val.clone());
    }
    let cfg: SystemConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))?;
    cfg.resolved().map_err(|e| CliError::Config(e.to_string()))
}

/// Inclusive `start:stop:step` sweep, endpoints within 1e-9; a bare number is
/// a single-point sweep.
fn parse_sweep(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Config(msg);
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` in sweep `{spec}` is not a number")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [start, stop, step] => {
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if step == 0.0 {
                if (start - stop).abs() <= 1e-9 {
                    return Ok(vec![start]);
                }
                return Err(bad(format!("sweep `{spec}` has zero step")));
            }
            if (stop - start) * step.signum() < -1e-9 {
                return Err(bad(format!("sweep `{spec}` never reaches its endpoint")));
            }
            let mut values = Vec::new();
            let mut k = 0usize;
            loop {
                let v = start + k as f64 * step;
                if (v - stop) * step.signum() > 1e-9 {
                    break;
                }
                values.push(v);
                k += 1;
                if k > 1_000_000 {
                    return Err(bad(format!("sweep `{spec}` has too many points")));
                }
            }
            Ok(values)
        }
        _ => Err(bad(format!(
            "sweep `{spec}` must be a single value or start:stop:step"
        ))),
    }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.9e}")
    }
}

/// RFC 3339 timestamp; honors SOURCE_DATE_EPOCH for reproducible output.
fn manifest_timestamp() -> String {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(secs) = epoch.parse::<i64>() {
            if let Some(t) = chrono::DateTime::from_timestamp(secs, 0) {
                return t.to_rfc3339();
            }
        }
    }
    chrono::Utc::now().to_rfc3339()
}

fn manifest_header(cfg: &SystemConfig, out: &Path) -> Result<String, CliError> {
    let config_json =
        serde_json::to_string(cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut header = String::new();
    let _ = writeln!(header, "# fasura {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(header, "# timestamp = {}", manifest_timestamp());
    let _ = writeln!(header, "# seed = {}", cfg.seed);
    let _ = writeln!(header, "# config = {config_json}");
    let _ = writeln!(header, "# output = {}", out.display());
    Ok(header)
}

fn render_results_csv(
    cfg: &SystemConfig,
    out: &Path,
    rows: &[SweepPointSummary],
) -> Result<String, CliError> {
    let mut csv = manifest_header(cfg, out)?;
    csv.push_str(
        "mode,ebn0_db,trials,excluded_trials,sigma2,ad_md_rate,ad_fa_rate,ka_est_mean,\
         ch_nmse,ch_nmse_refined,aoa_nmse,gap,gamma,seed\n",
    );
    for row in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.mode,
            format_value(row.ebn0_db),
            row.trials,
            row.excluded_trials,
            format_value(row.sigma2),
            format_value(row.ad_md_rate),
            format_value(row.ad_fa_rate),
            format_value(row.ka_est_mean),
            format_value(row.ch_nmse),
            format_value(row.ch_nmse_refined),
            format_value(row.aoa_nmse),
            row.gap,
            format_value(row.gamma),
            row.seed
        );
    }
    Ok(csv)
}

fn render_gap_csv(
    cfg: &SystemConfig,
    out: &Path,
    gamma: f64,
    selection: &fasura::ppce::GapSelection,
) -> Result<String, CliError> {
    let mut csv = manifest_header(cfg, out)?;
    let _ = writeln!(csv, "# gamma = {}", format_value(gamma));
    let _ = writeln!(csv, "# selected_gap = {}", selection.selected);
    csv.push_str("gap,mean_objective\n");
    for (gap, value) in selection.candidates.iter().zip(&selection.mean_objectives) {
        let _ = writeln!(csv, "{gap},{}", format_value(*value));
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_sweep("0").unwrap(), vec![0.0]);
        let sweep = parse_sweep("-5:20:2.5").unwrap();
        assert_eq!(sweep.len(), 11);
        assert_eq!(sweep[0], -5.0);
        assert_eq!(*sweep.last().unwrap(), 20.0);
        // endpoint reached within tolerance despite accumulation
        let sweep = parse_sweep("0:1:0.1").unwrap();
        assert_eq!(sweep.len(), 11);
        assert!(parse_sweep("5:0:1").is_err());
        assert!(parse_sweep("0:5:0").is_err());
        assert!(parse_sweep("a:b:c").is_err());
    }

    #[test]
    fn overrides_parse_json_and_bare_words() {
        let parsed = parse_overrides(&[
            "gamma=0.5".to_string(),
            "mode=ppce".to_string(),
            "ka_known=true".to_string(),
        ])
        .unwrap();
        assert_eq!(parsed[0].1, serde_json::json!(0.5));
        assert_eq!(parsed[1].1, serde_json::json!("ppce"));
        assert_eq!(parsed[2].1, serde_json::json!(true));
        assert!(parse_overrides(&["nonsense".to_string()]).is_err());
    }

    #[test]
    fn deviation_matched_gamma_at_zero_db() {
        let cfg = SystemConfig {
            ebn0_db: 0.0,
            ..Default::default()
        };
        // (K+1) * sigma^2 / (Omega E_s T_p) = 3 * 25 / 200
        assert!((deviation_matched_gamma(&cfg) - 0.375).abs() < 1e-12);
    }
}
