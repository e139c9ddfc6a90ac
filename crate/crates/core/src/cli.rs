//! Configuration-driven experiment runner: one config file (TOML or JSON by
//! extension) in, machine-readable artifacts out, with a manifest sufficient
//! to re-run the experiment exactly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adaptivity::{joint_cm_check, DiscreteCoupling};
use crate::io::{fmt_float, read_coupling_csv, write_csv, write_pr1_csv, IoError};
use crate::linear_model::{
    lm_concentration_experiment, solve_fixed_point, FixedPointSolution, LinearConfig, LmError,
};
use crate::measures::{EmpiricalMeasure1D, MeasureError};
use crate::penalties::{PenaltyError, PenaltySpec, ScalarPenalty, DEFAULT_PROX_TOL};
use crate::risk::{optimal_separable_risk, tau_sep, RiskError};
use crate::scalar_rep::{effective_scalar_rep, ScalarRepError};
use crate::sequence_model::{
    figure_profile, l1_power_panels, l2_power_panels, separability_experiment,
    simulate_y_stream, sowl_signal_panels, three_point_prior, PanelOutput, PriorSource,
    SequenceConfig, SequenceError, ThetaSpec,
};

/// Process exit codes: 2 validation, 3 numeric failure, 4 i/o.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Validation(m)
            | CliError::Numeric(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { .. } => CliError::Io(e.to_string()),
            IoError::Parse { .. } | IoError::Measure(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PenaltyError> for CliError {
    fn from(e: PenaltyError) -> Self {
        match e {
            PenaltyError::NoConvergence { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ScalarRepError> for CliError {
    fn from(e: ScalarRepError) -> Self {
        match e {
            ScalarRepError::NoConvergence { .. } => CliError::Numeric(e.to_string()),
            ScalarRepError::Prox(p) => p.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::Trial { .. } => CliError::Numeric(e.to_string()),
            SequenceError::Penalty(p) => p.into(),
            SequenceError::ScalarRep(s) => s.into(),
            SequenceError::Measure(m) => m.into(),
            SequenceError::PopulationPriorUnavailable => CliError::Validation(e.to_string()),
        }
    }
}

impl From<LmError> for CliError {
    fn from(e: LmError) -> Self {
        match e {
            LmError::NoSolution { .. } | LmError::NoConvergence { .. } | LmError::Trial { .. } => {
                CliError::Numeric(e.to_string())
            }
            LmError::Penalty(p) => p.into(),
            LmError::ScalarRep(s) => s.into(),
            LmError::Measure(m) => m.into(),
            LmError::PopulationPriorUnavailable => CliError::Validation(e.to_string()),
        }
    }
}

impl From<RiskError> for CliError {
    fn from(e: RiskError) -> Self {
        match e {
            RiskError::BracketFailure { .. } => CliError::Numeric(e.to_string()),
            RiskError::Projection(p) => p.into(),
            RiskError::Measure(m) => m.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<crate::adaptivity::AdaptError> for CliError {
    fn from(e: crate::adaptivity::AdaptError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn default_scatter() -> usize {
    100
}

fn default_tol() -> f64 {
    DEFAULT_PROX_TOL
}

fn default_grid() -> usize {
    4096
}

fn default_fp_grid() -> usize {
    2048
}

fn default_max_cycle() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqSimConfig {
    pub theta: ThetaSpec,
    pub taus: Vec<f64>,
    pub penalty: PenaltySpec,
    pub grid_size: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub prox_tol: f64,
    #[serde(default)]
    pub prior_source: PriorSource,
    #[serde(default = "default_scatter")]
    pub scatter_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub prior: EmpiricalMeasure1D,
    pub delta: f64,
    pub sigma_star: f64,
    pub penalty: PenaltySpec,
    #[serde(default = "default_fp_grid")]
    pub grid_size: usize,
    #[serde(default = "default_tol")]
    pub prox_tol: f64,
}

impl FixedPointConfig {
    pub fn to_linear(&self, trials: usize, seed: u64) -> LinearConfig {
        LinearConfig {
            theta: ThetaSpec::Quantiles {
                prior: self.prior.clone(),
                p: 1000,
            },
            delta: self.delta,
            sigma_star: self.sigma_star,
            penalty: self.penalty.clone(),
            grid_size: self.grid_size,
            trials,
            seed,
            prox_tol: self.prox_tol,
            fit_tol: 1e-7,
            subsample: 512,
            prior_source: PriorSource::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmSimConfig {
    #[serde(flatten)]
    pub linear: LinearConfig,
    /// rerun with the separable penalty whose scalar prox is the symmetric
    /// run's effective map (same fixed point by construction)
    #[serde(default)]
    pub separable_equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub prior: EmpiricalMeasure1D,
    pub tau: f64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSepConfig {
    pub prior: EmpiricalMeasure1D,
    pub sigma: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptCheckConfig {
    /// directory of coupling CSVs (header x,g), audited as one family
    #[serde(default)]
    pub family_dir: Option<PathBuf>,
    /// inline couplings, each a list of (x, g) pairs
    #[serde(default)]
    pub couplings: Option<Vec<Vec<(f64, f64)>>>,
    #[serde(default = "default_max_cycle")]
    pub max_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxConfig {
    pub penalty: PenaltySpec,
    pub y: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarRepConfig {
    pub penalty: PenaltySpec,
    pub prior: EmpiricalMeasure1D,
    pub tau: f64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_tol")]
    pub prox_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixConfig {
    pub seed: u64,
    #[serde(default = "default_appendix_p")]
    pub p: usize,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    /// any of "l2_power", "l1_power", "sowl_m"; empty means all
    #[serde(default)]
    pub panels: Vec<String>,
}

fn default_appendix_p() -> usize {
    1000
}

/// Tagged experiment configuration; the tag doubles as the subcommand name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    SeqSim(SeqSimConfig),
    FixedPoint(FixedPointConfig),
    LmSim(LmSimConfig),
    Risk(RiskConfig),
    TauSep(TauSepConfig),
    AdaptCheck(AdaptCheckConfig),
    Prox(ProxConfig),
    ScalarRep(ScalarRepConfig),
    AppendixFigures(AppendixConfig),
}

impl ExperimentConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::SeqSim(_) => "seq-sim",
            ExperimentConfig::FixedPoint(_) => "fixed-point",
            ExperimentConfig::LmSim(_) => "lm-sim",
            ExperimentConfig::Risk(_) => "risk",
            ExperimentConfig::TauSep(_) => "tau-sep",
            ExperimentConfig::AdaptCheck(_) => "adapt-check",
            ExperimentConfig::Prox(_) => "prox",
            ExperimentConfig::ScalarRep(_) => "scalar-rep",
            ExperimentConfig::AppendixFigures(_) => "appendix-figures",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::SeqSim(c) => Some(c.seed),
            ExperimentConfig::LmSim(c) => Some(c.linear.seed),
            ExperimentConfig::AppendixFigures(c) => Some(c.seed),
            _ => None,
        }
    }
}

/// Parse a config file as TOML or JSON by extension.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_toml = matches!(path.extension().and_then(|e| e.to_str()), Some("toml"));
    let value: serde_json::Value = if is_toml {
        let tv: toml::Value = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::to_value(tv).map_err(|e| CliError::Validation(e.to_string()))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    };
    serde_json::from_value(value)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Parse a config file for a known subcommand: accepts either the bare
/// payload or the tagged form with a matching "kind".
pub fn load_config_for(path: &Path, kind: &str) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_toml = matches!(path.extension().and_then(|e| e.to_str()), Some("toml"));
    let mut value: serde_json::Value = if is_toml {
        let tv: toml::Value = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::to_value(tv).map_err(|e| CliError::Validation(e.to_string()))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    };
    if let Some(obj) = value.as_object_mut() {
        match obj.get("kind").and_then(|k| k.as_str()) {
            Some(k) if k != kind => {
                return Err(CliError::Validation(format!(
                    "config kind {k:?} does not match subcommand {kind:?}"
                )));
            }
            Some(_) => {}
            None => {
                obj.insert("kind".into(), serde_json::Value::String(kind.into()));
            }
        }
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'a str,
    version: &'a str,
    seed: Option<u64>,
    wall_time_seconds: f64,
    config: &'a ExperimentConfig,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn trim_tau(tau: f64) -> String {
    let s = format!("{tau}");
    s.replace('-', "m")
}

/// Run one experiment, writing artifacts under `out_dir`; returns the JSON
/// value that subcommands print to stdout.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<serde_json::Value, CliError> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let summary = dispatch(config, out_dir)?;
    let manifest = Manifest {
        kind: config.kind_name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(summary)
}

fn dispatch(config: &ExperimentConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    match config {
        ExperimentConfig::SeqSim(c) => run_seq_sim(c, out),
        ExperimentConfig::FixedPoint(c) => run_fixed_point(c, out),
        ExperimentConfig::LmSim(c) => run_lm_sim(c, out),
        ExperimentConfig::Risk(c) => run_risk(c, out),
        ExperimentConfig::TauSep(c) => run_tau_sep(c, out),
        ExperimentConfig::AdaptCheck(c) => run_adapt_check(c, out),
        ExperimentConfig::Prox(c) => run_prox(c, out),
        ExperimentConfig::ScalarRep(c) => run_scalar_rep(c, out),
        ExperimentConfig::AppendixFigures(c) => run_appendix(c, out),
    }
}

fn run_seq_sim(cfg: &SeqSimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    if cfg.taus.is_empty() {
        return Err(CliError::Validation("taus must be nonempty".into()));
    }
    let mut reports = Vec::new();
    let mut gap_rows: Vec<Vec<String>> = Vec::new();
    for (ti, &tau) in cfg.taus.iter().enumerate() {
        let seq = SequenceConfig {
            theta: cfg.theta.clone(),
            tau,
            penalty: cfg.penalty.clone(),
            grid_size: cfg.grid_size,
            trials: cfg.trials,
            seed: cfg.seed.wrapping_add(ti as u64 * 0x9e37_79b9),
            prox_tol: cfg.prox_tol,
            prior_source: cfg.prior_source,
        };
        let report = separability_experiment(&seq)?;
        for t in &report.trials {
            gap_rows.push(vec![
                t.trial.to_string(),
                fmt_float(tau),
                fmt_float(t.gap_mean_sq),
                fmt_float(t.gap_max_sq),
                fmt_float(t.w2_obs),
            ]);
        }
        // theory curve and one scatter sample per noise level
        let theta = cfg.theta.materialize();
        let grid = crate::sequence_model::measurement_grid(&seq, &theta)?;
        let map = effective_scalar_rep(&cfg.penalty, &grid, cfg.prox_tol)?;
        write_pr1_csv(&out.join(format!("theory_tau{}.csv", trim_tau(tau))), &map)?;
        let y = simulate_y_stream(&theta, tau, seq.seed, 0);
        let prox = cfg.penalty.prox(&y, cfg.prox_tol)?;
        let mut rng = crate::rng::stream_rng(seq.seed, 0x5ca7);
        let idx =
            crate::rng::sample_indices(&mut rng, theta.len(), cfg.scatter_points.min(theta.len()));
        write_csv(
            &out.join(format!("scatter_tau{}.csv", trim_tau(tau))),
            &["y", "theta_hat"],
            idx.iter().map(|&j| vec![fmt_float(y[j]), fmt_float(prox[j])]),
        )?;
        reports.push(report);
    }
    write_csv(
        &out.join("gaps.csv"),
        &["trial", "tau", "gap_mean_sq", "gap_max_sq", "w2_obs"],
        gap_rows,
    )?;
    let report_json = serde_json::to_value(&reports).map_err(|e| CliError::Io(e.to_string()))?;
    write_json(&out.join("report.json"), &report_json)?;
    Ok(report_json)
}

fn run_fixed_point(cfg: &FixedPointConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let linear = cfg.to_linear(1, 0);
    let sol = solve_fixed_point(&linear)?;
    write_pr1_csv(&out.join("effective_map.csv"), &sol.effective_map)?;
    let value = serde_json::to_value(&sol).map_err(|e| CliError::Io(e.to_string()))?;
    write_json(&out.join("solution.json"), &value)?;
    Ok(value)
}

/// The separable penalty that reproduces a solved fixed point: the scalar
/// prox is the effective map, scaled down so the lambda* multiplier lands
/// back on it.
pub fn separable_equivalent_penalty(sol: &FixedPointSolution) -> Result<PenaltySpec, CliError> {
    Ok(PenaltySpec::separable(ScalarPenalty::TabulatedProx {
        map: sol.effective_map.clone(),
    })?
    .scaled(1.0 / sol.lambda_star))
}

fn run_lm_sim(cfg: &LmSimConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let sol = solve_fixed_point(&cfg.linear)?;
    let run_cfg = if cfg.separable_equivalent {
        let mut c = cfg.linear.clone();
        c.penalty = separable_equivalent_penalty(&sol)?;
        c
    } else {
        cfg.linear.clone()
    };
    let report = lm_concentration_experiment(&run_cfg, &sol)?;

    // per-trial observed joints and the predicted joint, for plotting
    let theta = cfg.linear.theta.materialize();
    let mut rng = crate::rng::stream_rng(cfg.linear.seed, 2);
    let g = crate::rng::normal_vec(&mut rng, theta.len());
    write_csv(
        &out.join("predicted_joint.csv"),
        &["theta_hat", "theta"],
        theta.iter().zip(&g).map(|(&t, &gi)| {
            vec![
                fmt_float(sol.effective_map.apply(t + sol.tau_star * gi)),
                fmt_float(t),
            ]
        }),
    )?;
    for t in &report.trials {
        write_csv(
            &out.join(format!("joint_trial{}.csv", t.trial)),
            &["theta_hat", "theta"],
            t.observed_sub
                .iter()
                .map(|&(h, th)| vec![fmt_float(h), fmt_float(th)]),
        )?;
    }
    let value = serde_json::json!({
        "solution": sol,
        "report": report,
        "separable_equivalent": cfg.separable_equivalent,
    });
    write_json(&out.join("report.json"), &value)?;
    Ok(value)
}

fn run_risk(cfg: &RiskConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let result = optimal_separable_risk(&cfg.prior, cfg.tau, cfg.grid_size)?;
    write_pr1_csv(&out.join("optimal_map.csv"), &result.optimal_map)?;
    // the symmetric optimum equals the separable optimum, which is the
    // computational route for both
    let value = serde_json::json!({
        "r_sep": result.r_sep,
        "r_symm": result.r_sep,
        "bayes_risk": result.bayes_risk,
        "bayes_in_pr1": result.bayes_in_pr1,
        "optimal_map": result.optimal_map,
    });
    write_json(&out.join("risk.json"), &value)?;
    Ok(value)
}

fn run_tau_sep(cfg: &TauSepConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let t = tau_sep(&cfg.prior, cfg.sigma, cfg.delta)?;
    let value = serde_json::json!({
        "tau_sep": t,
        "tau_sep_sq": t * t,
        "risk_lower_bound": cfg.delta * (t * t - cfg.sigma * cfg.sigma),
    });
    write_json(&out.join("tau_sep.json"), &value)?;
    Ok(value)
}

fn run_adapt_check(cfg: &AdaptCheckConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let mut family: Vec<DiscreteCoupling> = Vec::new();
    match (&cfg.family_dir, &cfg.couplings) {
        (Some(dir), None) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("csv"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(CliError::Validation(format!(
                    "no coupling CSVs in {}",
                    dir.display()
                )));
            }
            for p in paths {
                family.push(DiscreteCoupling::new(read_coupling_csv(&p)?)?);
            }
        }
        (None, Some(inline)) => {
            for pairs in inline {
                family.push(DiscreteCoupling::new(pairs.clone())?);
            }
        }
        _ => {
            return Err(CliError::Validation(
                "provide exactly one of family_dir or couplings".into(),
            ));
        }
    }
    let report = joint_cm_check(&family, cfg.max_cycle)?;
    let value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write_json(&out.join("adapt_report.json"), &value)?;
    Ok(value)
}

fn run_prox(cfg: &ProxConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let x = cfg.penalty.prox(&cfg.y, cfg.tol)?;
    write_csv(
        &out.join("prox.csv"),
        &["y", "x"],
        cfg.y
            .iter()
            .zip(&x)
            .map(|(a, b)| vec![fmt_float(*a), fmt_float(*b)]),
    )?;
    Ok(serde_json::json!({ "x": x }))
}

fn run_scalar_rep(cfg: &ScalarRepConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let grid = crate::measures::gaussian_convolve(&cfg.prior, cfg.tau, cfg.grid_size)?;
    let map = effective_scalar_rep(&cfg.penalty, &grid, cfg.prox_tol)?;
    write_pr1_csv(&out.join("theory.csv"), &map)?;
    let value = serde_json::to_value(&map).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(value)
}

fn write_panels(panels: &[PanelOutput], out: &Path) -> Result<(), CliError> {
    for p in panels {
        write_pr1_csv(&out.join(format!("theory_{}.csv", p.label)), &p.theory)?;
        write_csv(
            &out.join(format!("scatter_{}.csv", p.label)),
            &["y", "theta_hat"],
            p.scatter
                .iter()
                .map(|&(y, v)| vec![fmt_float(y), fmt_float(v)]),
        )?;
    }
    Ok(())
}

fn run_appendix(cfg: &AppendixConfig, out: &Path) -> Result<serde_json::Value, CliError> {
    let all = ["l2_power", "l1_power", "sowl_m"];
    let chosen: Vec<&str> = if cfg.panels.is_empty() {
        all.to_vec()
    } else {
        for p in &cfg.panels {
            if !all.contains(&p.as_str()) {
                return Err(CliError::Validation(format!("unknown panel {p:?}")));
            }
        }
        cfg.panels.iter().map(|s| s.as_str()).collect()
    };
    let taus = [0.25, 1.0, 5.0];
    let mut emitted: Vec<String> = Vec::new();
    for panel in chosen {
        match panel {
            "l2_power" => {
                for &alpha in &[1.0, 2.0, 4.0] {
                    let panels =
                        l2_power_panels(alpha, &taus, cfg.p, cfg.grid_size, cfg.seed)?;
                    write_panels(&panels, out)?;
                    emitted.extend(panels.iter().map(|p| p.label.clone()));
                }
            }
            "l1_power" => {
                for &alpha in &[1.0, 2.0] {
                    let panels =
                        l1_power_panels(alpha, &taus, cfg.p, cfg.grid_size, cfg.seed)?;
                    write_panels(&panels, out)?;
                    emitted.extend(panels.iter().map(|p| p.label.clone()));
                }
            }
            "sowl_m" => {
                let panels =
                    sowl_signal_panels(&[0.0, 1.0, 10.0], 1.0, cfg.p, cfg.grid_size, cfg.seed)?;
                write_panels(&panels, out)?;
                emitted.extend(panels.iter().map(|p| p.label.clone()));
            }
            _ => unreachable!(),
        }
    }
    Ok(serde_json::json!({ "panels": emitted }))
}

/// Ready-to-run configurations for the headline experiments.
pub fn bundled_configs() -> Vec<(&'static str, ExperimentConfig)> {
    let sowl = PenaltySpec::smoothed_owl(figure_profile().expect("profile"))
        .expect("smoothed OWL penalty");
    let lasso = PenaltySpec::abs_weight(0.3).expect("abs weight penalty");
    let sparse = three_point_prior(1.0, 0.05);
    vec![
        (
            "fig1_sowl",
            ExperimentConfig::SeqSim(SeqSimConfig {
                theta: ThetaSpec::Quantiles {
                    prior: sparse.clone(),
                    p: 1000,
                },
                taus: vec![0.5, 1.0, 2.5],
                penalty: sowl.clone(),
                grid_size: 4096,
                trials: 20,
                seed: 20_240_501,
                prox_tol: DEFAULT_PROX_TOL,
                prior_source: PriorSource::Empirical,
                scatter_points: 100,
            }),
        ),
        (
            "fig3_l2power",
            ExperimentConfig::AppendixFigures(AppendixConfig {
                seed: 31,
                p: 1000,
                grid_size: 4096,
                panels: vec!["l2_power".into()],
            }),
        ),
        (
            "fig3_l1power",
            ExperimentConfig::AppendixFigures(AppendixConfig {
                seed: 32,
                p: 1000,
                grid_size: 4096,
                panels: vec!["l1_power".into()],
            }),
        ),
        (
            "fig3_sowl_M",
            ExperimentConfig::AppendixFigures(AppendixConfig {
                seed: 33,
                p: 1000,
                grid_size: 4096,
                panels: vec!["sowl_m".into()],
            }),
        ),
        (
            "lasso_fixed_point",
            ExperimentConfig::FixedPoint(FixedPointConfig {
                prior: sparse.clone(),
                delta: 0.64,
                sigma_star: 0.25,
                penalty: lasso.clone(),
                grid_size: 2048,
                prox_tol: DEFAULT_PROX_TOL,
            }),
        ),
        (
            "concentration_sweep",
            ExperimentConfig::LmSim(LmSimConfig {
                linear: LinearConfig {
                    theta: ThetaSpec::Quantiles {
                        prior: sparse,
                        p: 2000,
                    },
                    delta: 0.64,
                    sigma_star: 0.25,
                    penalty: lasso,
                    grid_size: 2048,
                    trials: 10,
                    seed: 20_240_502,
                    prox_tol: DEFAULT_PROX_TOL,
                    fit_tol: 1e-7,
                    subsample: 512,
                    prior_source: PriorSource::Empirical,
                },
                separable_equivalent: false,
            }),
        ),
    ]
}
