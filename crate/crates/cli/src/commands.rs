//! Command implementations. Each returns the JSON result and the manifest parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use wiretap_core::channels::{bsc_to_modadd, BscWiretapSpec, Correlation, HalfDuplexParams};
use wiretap_core::feedback_sim::{self, SimConfig, SimReport};
use wiretap_core::files::{parse_lattice, ChannelFile};
use wiretap_core::info_theory::channel_capacity_ba;
use wiretap_core::lattice::{wrapped_gaussian_quadrature, WrappedGaussian};
use wiretap_core::secrecy_rates::{
    full_duplex_secrecy_capacity, halfduplex_optimize, halfduplex_rate, no_feedback_secrecy_lower,
    public_discussion_bounds,
};

use crate::output::{sim_csv, to_pretty_json, write_atomic, Envelope, RunManifest};
use crate::CliError;

pub type Params = BTreeMap<String, Value>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_channel(path: &Path) -> Result<ChannelFile, CliError> {
    Ok(ChannelFile::from_json(&read(path)?)?)
}

pub fn capacity(path: &Path, tol: f64, max_iter: usize) -> Result<(Value, Params), CliError> {
    let file = load_channel(path)?;
    let spec = file.to_spec()?;
    let cap = channel_capacity_ba(&spec.main_channel(), tol, max_iter)?;
    let params = Params::from([
        ("channel".into(), serde_json::to_value(&file)?),
        ("tol".into(), json!(tol)),
        ("max_iter".into(), json!(max_iter)),
    ]);
    Ok((serde_json::to_value(&cap)?, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecrecyMode {
    NoFeedback,
    Public,
    FullDuplex,
}

pub fn secrecy(path: &Path, mode: SecrecyMode, grid: usize) -> Result<(Value, Params), CliError> {
    let file = load_channel(path)?;
    let spec = file.to_spec()?;
    let result = match mode {
        SecrecyMode::NoFeedback => serde_json::to_value(no_feedback_secrecy_lower(&spec, grid)?)?,
        SecrecyMode::Public => serde_json::to_value(public_discussion_bounds(&spec, grid)?)?,
        SecrecyMode::FullDuplex => serde_json::to_value(full_duplex_secrecy_capacity(&spec)?)?,
    };
    let params = Params::from([
        ("channel".into(), serde_json::to_value(&file)?),
        ("mode".into(), serde_json::to_value(mode)?),
        ("grid".into(), json!(grid)),
    ]);
    Ok((result, params))
}

pub enum HalfDuplexQuery {
    Point { mu: f64, t: f64 },
    Optimize { grid: usize, refine_tol: f64 },
}

pub fn halfduplex(eps: f64, delta: f64, q: HalfDuplexQuery) -> Result<(Value, Params), CliError> {
    let mut params = Params::from([("eps".into(), json!(eps)), ("delta".into(), json!(delta))]);
    let result = match q {
        HalfDuplexQuery::Point { mu, t } => {
            params.insert("mu".into(), json!(mu));
            params.insert("t".into(), json!(t));
            let p = HalfDuplexParams::new(mu, t, delta)?;
            json!({
                "rate_bits": halfduplex_rate(eps, delta, mu, t)?,
                "mu": p.mu,
                "t": p.t,
                "delta_hat": p.delta_hat,
            })
        }
        HalfDuplexQuery::Optimize { grid, refine_tol } => {
            params.insert("grid".into(), json!(grid));
            params.insert("refine_tol".into(), json!(refine_tol));
            serde_json::to_value(halfduplex_optimize(eps, delta, grid, refine_tol)?)?
        }
    };
    Ok((result, params))
}

pub fn lattice(path: &Path) -> Result<(Value, Params), CliError> {
    let spec = parse_lattice(&read(path)?)?;
    let q = wrapped_gaussian_quadrature(&spec, spec.sigma1_sq)?;
    let log2_volume = spec.volume().log2();
    let method = WrappedGaussian::new(&spec, spec.sigma1_sq)?.method();
    let result = json!({
        "entropy_bits": q.entropy_bits,
        "log2_volume": log2_volume,
        "capacity_bits": (log2_volume - q.entropy_bits).max(0.0),
        "density_mass": q.mass,
        "quadrature_points_per_dim": q.points_per_dim,
        "theta_series": method,
    });
    Ok((result, Params::from([("lattice".into(), serde_json::to_value(&spec)?)])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseArg {
    Noiseless,
    Independent,
    DegradedMain,
    DegradedWiretap,
}

impl CaseArg {
    fn correlation(self) -> Correlation {
        match self {
            CaseArg::Noiseless => Correlation::Noiseless,
            CaseArg::Independent => Correlation::Independent,
            CaseArg::DegradedMain => Correlation::DegradedMain,
            CaseArg::DegradedWiretap => Correlation::DegradedWiretap,
        }
    }
}

/// One row of the scheme comparison for a BSC wiretap channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub case: CaseArg,
    pub eps: f64,
    pub delta: f64,
    /// Secrecy capacity without feedback (auxiliary restricted to the input).
    pub c_s: f64,
    pub c_s_p_lower: f64,
    pub c_s_p_upper: f64,
    /// Public-discussion key capacity where the noise structure determines it.
    pub c_s_p: Option<f64>,
    pub c_s_f: f64,
    pub half_duplex_rate: f64,
    pub half_duplex_mu: f64,
    pub half_duplex_t: f64,
    /// Half-duplex rate at `mu = t = 1/2`.
    pub half_duplex_centre: f64,
}

pub const COMPARE_CSV_HEADER: &str =
    "case,eps,delta,c_s,c_s_p_lower,c_s_p_upper,c_s_p,c_s_f,half_duplex_rate,half_duplex_mu,half_duplex_t,half_duplex_centre";

pub fn compare_row(eps: f64, delta: f64, case: CaseArg, grid: usize, hd_grid: usize) -> Result<CompareRow, CliError> {
    let bsc = BscWiretapSpec::new(eps, delta, case.correlation())?;
    let spec = bsc_to_modadd(&bsc)?;
    let c_s = no_feedback_secrecy_lower(&spec, grid)?.rate_bits;
    let public = public_discussion_bounds(&spec, grid)?;
    let c_s_f = full_duplex_secrecy_capacity(&spec)?.rate_bits;
    let hd = halfduplex_optimize(eps, delta, hd_grid, 1e-12)?;
    let hp = hd.achieving_params.clone().unwrap_or_default();
    Ok(CompareRow {
        case,
        eps,
        delta,
        c_s,
        c_s_p_lower: public.lower.rate_bits,
        c_s_p_upper: public.upper.rate_bits,
        c_s_p: public.closed_form.map(|r| r.rate_bits),
        c_s_f,
        half_duplex_rate: hd.rate_bits,
        half_duplex_mu: hp.mu.unwrap_or(f64::NAN),
        half_duplex_t: hp.t.unwrap_or(f64::NAN),
        half_duplex_centre: halfduplex_rate(eps, delta, 0.5, 0.5)?,
    })
}

pub fn compare_csv(row: &CompareRow) -> Result<String, CliError> {
    let v = serde_json::to_value(row)?;
    let case = v["case"].as_str().unwrap_or_default().to_string();
    let fields: Vec<String> = COMPARE_CSV_HEADER
        .split(',')
        .skip(1)
        .map(|k| match v[k].as_f64() {
            Some(x) => crate::output::round_sig(x).to_string(),
            None => String::new(),
        })
        .collect();
    Ok(format!("{COMPARE_CSV_HEADER}\n{case},{}\n", fields.join(",")))
}

pub fn compare(eps: f64, delta: f64, case: CaseArg, grid: usize, hd_grid: usize) -> Result<(Value, Params), CliError> {
    let row = compare_row(eps, delta, case, grid, hd_grid)?;
    let params = Params::from([
        ("eps".into(), json!(eps)),
        ("delta".into(), json!(delta)),
        ("case".into(), serde_json::to_value(case)?),
        ("grid".into(), json!(grid)),
        ("hd_grid".into(), json!(hd_grid)),
    ]);
    Ok((serde_json::to_value(row)?, params))
}

/// A simulation input: a configuration or a report whose manifest holds one.
pub fn load_sim_config(path: &Path) -> Result<SimConfig, CliError> {
    let v: Value = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let cfg_value = match v.get("manifest") {
        Some(m) => {
            let env: Envelope = serde_json::from_value(json!({"manifest": m, "result": null}))
                .map_err(|e| CliError::Input(format!("manifest in {}: {e}", path.display())))?;
            if env.manifest.command != "simulate" {
                return Err(CliError::Input(format!(
                    "manifest in {} is for '{}', not 'simulate'",
                    path.display(),
                    env.manifest.command
                )));
            }
            env.manifest
                .params
                .get("config")
                .cloned()
                .ok_or_else(|| CliError::Input("manifest has no config".into()))?
        }
        None => v,
    };
    let cfg: SimConfig =
        serde_json::from_value(cfg_value).map_err(|e| CliError::Input(format!("simulation config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub struct SimOutput {
    pub report: SimReport,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Runs a simulation and writes `<out>.json` and `<out>.csv`.
pub fn simulate(
    mut cfg: SimConfig,
    seed_override: Option<u64>,
    threads: Option<usize>,
    out: &Path,
) -> Result<(SimOutput, String), CliError> {
    if let Some(s) = seed_override {
        cfg.seed = s;
    }
    let report = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(|| feedback_sim::run(&cfg))?,
        None => feedback_sim::run(&cfg)?,
    };
    let manifest = RunManifest::new(
        "simulate",
        Params::from([("config".into(), serde_json::to_value(&cfg)?)]),
        cfg.seed,
    );
    let envelope = Envelope {
        manifest,
        result: serde_json::to_value(&report)?,
    };
    let json_text = to_pretty_json(&envelope)?;
    let json_path = out.with_extension("json");
    let csv_path = out.with_extension("csv");
    write_atomic(&json_path, &json_text)?;
    write_atomic(&csv_path, &sim_csv(&report))?;
    Ok((
        SimOutput {
            report,
            json_path,
            csv_path,
        },
        json_text,
    ))
}
