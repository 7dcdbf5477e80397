//! Experiment drivers, configuration files, result tables and run manifests.

mod experiments;
mod heatmap;
pub mod validate;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use experiments::{
    asymptotic_contour_snr_t, design_scheme, estimate_pd, extract_contour, run_beampattern, run_beampattern_experiment,
    run_calibrate, run_contour, run_roc, run_sweep, run_tradeoff, trial_statistic, PdEstimate, SchemeSetup,
};
pub use heatmap::{heatmap_trial, run_heatmap, HeatmapFrame, HeatmapSetup};
pub use validate::{run_validate, CheckOutcome, ValidateOptions};

use crate::beamform::OptimizerOptions;
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Calibrate,
    #[default]
    Roc,
    Tradeoff,
    Contour,
    Sweep,
    Beampattern,
    Heatmap,
    Validate,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::Roc => "roc",
            ExperimentKind::Tradeoff => "tradeoff",
            ExperimentKind::Contour => "contour",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Beampattern => "beampattern",
            ExperimentKind::Heatmap => "heatmap",
            ExperimentKind::Validate => "validate",
        }
    }

    fn needs_calibration(&self) -> bool {
        matches!(
            self,
            ExperimentKind::Calibrate
                | ExperimentKind::Roc
                | ExperimentKind::Tradeoff
                | ExperimentKind::Contour
                | ExperimentKind::Sweep
                | ExperimentKind::Heatmap
        )
    }
}

/// Monte Carlo budget presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn pfa(&self) -> f64 {
        match self {
            Scale::Desk => 1e-2,
            Scale::Paper => 1e-3,
        }
    }

    pub fn calibration_trials(&self) -> usize {
        match self {
            Scale::Desk => 10_000,
            Scale::Paper => 100_000,
        }
    }

    pub fn detection_trials(&self) -> usize {
        match self {
            Scale::Desk => 2_000,
            Scale::Paper => 10_000,
        }
    }
}

/// Beamforming scheme compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Target-gain beamformer with the known-signal detector.
    Active,
    /// Alternating kappa maximization with the passive GLRT.
    MaxPd,
    /// Same without communication constraints.
    SensingOnly,
    /// Target gain with a floor on SNR_d (fixed threshold or best of a sweep).
    SnrdThreshold,
    /// Target-gain beamformer with the passive GLRT.
    MaxSnrT,
    /// Minimum-power communication beamformer with the passive GLRT.
    CommOnly,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Active => "active",
            Scheme::MaxPd => "max_pd",
            Scheme::SensingOnly => "sensing_only",
            Scheme::SnrdThreshold => "snrd_threshold",
            Scheme::MaxSnrT => "max_snr_t",
            Scheme::CommOnly => "comm_only",
        }
    }

    pub fn uses_active_detector(&self) -> bool {
        matches!(self, Scheme::Active)
    }

    fn salt(&self) -> u64 {
        match self {
            Scheme::Active => 1,
            Scheme::MaxPd => 2,
            Scheme::SensingOnly => 3,
            Scheme::SnrdThreshold => 4,
            Scheme::MaxSnrT => 5,
            Scheme::CommOnly => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignConfig {
    pub schemes: Vec<Scheme>,
    pub gamma_c_db: f64,
    /// Fixed SNR_d threshold (linear). Without it the threshold design sweeps.
    pub gamma_d: Option<f64>,
    pub eps: f64,
    pub k_max: usize,
    pub n_candidates: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        Self {
            schemes: vec![Scheme::Active, Scheme::MaxPd, Scheme::SnrdThreshold, Scheme::CommOnly],
            gamma_c_db: 12.0,
            gamma_d: None,
            eps: o.eps,
            k_max: o.k_max,
            n_candidates: o.n_candidates,
        }
    }
}

impl DesignConfig {
    pub fn options(&self, seed: u64) -> OptimizerOptions {
        OptimizerOptions {
            eps: self.eps,
            k_max: self.k_max,
            n_candidates: self.n_candidates,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    #[default]
    Rcs,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub points: usize,
}

impl AngleGrid {
    pub fn angles_deg(&self) -> Vec<f64> {
        linspace(self.start_deg, self.stop_deg, self.points)
    }
}

/// Uniform grid of cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub dx: f64,
    pub nx: usize,
    pub y_min: f64,
    pub dy: f64,
    pub ny: usize,
}

impl SpatialGrid {
    /// Cells in row-major order (x outer, y inner).
    pub fn cells(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.push([self.x_min + i as f64 * self.dx, self.y_min + j as f64 * self.dy]);
            }
        }
        out
    }

    /// Index of the cell nearest to `p`.
    pub fn nearest(&self, p: [f64; 2]) -> usize {
        let i = ((p[0] - self.x_min) / self.dx).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p[1] - self.y_min) / self.dy).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        i * self.ny + j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub n_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Axes {
    pub pfa_grid: Vec<f64>,
    pub gamma_c_db: Vec<f64>,
    pub sweep: SweepAxis,
    pub rcs_dbsm: Vec<f64>,
    pub power_dbw: Vec<f64>,
    pub snr_t_db: Vec<f64>,
    pub snr_d_db: Vec<f64>,
    pub contour_users: usize,
    pub contour_shapes: usize,
    pub contour_level: f64,
    pub angles: AngleGrid,
    pub grid: SpatialGrid,
    pub ofdm: OfdmConfig,
}

impl Default for Axes {
    fn default() -> Self {
        Self {
            pfa_grid: logspace(-3.0, -0.5, 11),
            gamma_c_db: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            sweep: SweepAxis::Rcs,
            rcs_dbsm: vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0],
            power_dbw: vec![-25.0, -20.0, -15.0, -10.0, -5.0],
            snr_t_db: linspace(-35.0, -10.0, 11),
            snr_d_db: linspace(-20.0, 30.0, 6),
            contour_users: 1,
            contour_shapes: 100,
            contour_level: 0.9,
            angles: AngleGrid {
                start_deg: -90.0,
                stop_deg: 90.0,
                points: 721,
            },
            grid: SpatialGrid {
                x_min: 70.0,
                dx: 4.0,
                nx: 40,
                y_min: -80.0,
                dy: 4.0,
                ny: 40,
            },
            ofdm: OfdmConfig {
                n_subcarriers: 1024,
                subcarrier_spacing: 30e3,
                n_frames: 1,
            },
        }
    }
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub scale: Scale,
    /// Detection (H1) trials per point; preset value when absent.
    pub n_trials: Option<usize>,
    /// Null-hypothesis trials for threshold calibration; preset value when absent.
    pub calibration_trials: Option<usize>,
    pub pfa: Option<f64>,
    pub output: Option<PathBuf>,
    /// Geometry; the experiment's preset layout when absent.
    pub scenario: Option<ScenarioConfig>,
    pub design: DesignConfig,
    pub axes: Axes,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind,
            seed: 2024,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn scenario(&self) -> ScenarioConfig {
        match &self.scenario {
            Some(s) => s.clone(),
            None if self.experiment == ExperimentKind::Heatmap => {
                let ofdm = self.ofdm_params();
                ScenarioConfig {
                    block_length: ofdm.block_len(),
                    sample_rate: ofdm.sample_rate(),
                    ..ScenarioConfig::ofdm_preset()
                }
            }
            None => ScenarioConfig::default(),
        }
    }

    pub fn ofdm_params(&self) -> crate::waveform::OfdmParams {
        let o = &self.axes.ofdm;
        crate::waveform::OfdmParams::new(o.n_subcarriers, o.subcarrier_spacing, o.n_frames)
    }

    pub fn pfa(&self) -> f64 {
        self.pfa.unwrap_or(self.scale.pfa())
    }

    /// Detection trials; the heatmap defaults to 100 frames since each frame scans the whole grid.
    pub fn detection_trials(&self) -> usize {
        match (self.n_trials, self.experiment) {
            (Some(n), _) => n,
            (None, ExperimentKind::Heatmap) => 100,
            (None, _) => self.scale.detection_trials(),
        }
    }

    pub fn calibration_trials(&self) -> usize {
        self.calibration_trials.unwrap_or(self.scale.calibration_trials())
    }

    pub fn gamma_c(&self) -> f64 {
        crate::linalg::db_to_linear(self.design.gamma_c_db)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        let pfa = self.pfa();
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::Config(format!("pfa must lie in (0, 1), got {pfa}")));
        }
        if self.detection_trials() == 0 {
            return Err(Error::Config("n_trials must be positive".into()));
        }
        if self.experiment.needs_calibration() {
            crate::detector::check_trial_budget(self.calibration_trials(), pfa)?;
        }
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{what} must be non-empty for {}",
                    self.experiment.name()
                )))
            }
        };
        let a = &self.axes;
        match self.experiment {
            ExperimentKind::Roc => {
                need(!a.pfa_grid.is_empty(), "axes.pfa_grid")?;
                need(!self.design.schemes.is_empty(), "design.schemes")?;
                for &p in &a.pfa_grid {
                    crate::detector::check_trial_budget(self.calibration_trials(), p)?;
                }
            }
            ExperimentKind::Tradeoff => {
                need(!a.gamma_c_db.is_empty(), "axes.gamma_c_db")?;
                need(!self.design.schemes.is_empty(), "design.schemes")?;
            }
            ExperimentKind::Sweep => {
                let axis = match a.sweep {
                    SweepAxis::Rcs => &a.rcs_dbsm,
                    SweepAxis::Power => &a.power_dbw,
                };
                need(!axis.is_empty(), "sweep axis")?;
                need(!self.design.schemes.is_empty(), "design.schemes")?;
            }
            ExperimentKind::Contour => {
                need(
                    !a.snr_t_db.is_empty() && !a.snr_d_db.is_empty(),
                    "axes.snr_t_db / axes.snr_d_db",
                )?;
                if a.contour_users == 0 || a.contour_shapes == 0 {
                    return Err(Error::Config(
                        "contour_users and contour_shapes must be positive".into(),
                    ));
                }
            }
            ExperimentKind::Beampattern => {
                need(a.angles.points > 0, "axes.angles")?;
                need(!self.design.schemes.is_empty(), "design.schemes")?;
            }
            ExperimentKind::Heatmap => {
                need(a.grid.nx > 0 && a.grid.ny > 0, "axes.grid")?;
                let params = self.ofdm_params();
                params.validate()?;
                let sc = self.scenario();
                if sc.block_length != params.block_len() {
                    return Err(Error::Config(format!(
                        "heatmap block length {} differs from the OFDM block length {}",
                        sc.block_length,
                        params.block_len()
                    )));
                }
            }
            ExperimentKind::Calibrate | ExperimentKind::Validate => {}
        }
        Ok(())
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points from `10^a` to `10^b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a, b, n).into_iter().map(|e| 10f64.powf(e)).collect()
}

/// Numeric result table with optional per-row labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Per-row notes (e.g. which schemes were infeasible); written as a trailing column.
    pub labels: Option<Vec<String>>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl CurveTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            labels: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
        if let Some(l) = &mut self.labels {
            l.push(String::new());
        }
    }

    pub fn push_labeled(&mut self, row: Vec<f64>, label: impl Into<String>) {
        let n = self.rows.len();
        self.labels.get_or_insert_with(|| vec![String::new(); n]);
        self.push(row);
        if let Some(l) = &mut self.labels {
            *l.last_mut().expect("label just pushed") = label.into();
        }
    }

    pub fn set_meta(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metadata.insert(key.to_string(), v);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// First column non-decreasing; non-finite cells only on labeled rows.
    pub fn check_invariants(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if w[1][0] < w[0][0] {
                return Err(Error::NumericalFailure(format!(
                    "x axis '{}' is not monotone",
                    self.columns[0]
                )));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            let flagged = self.labels.as_ref().is_some_and(|l| !l[i].is_empty());
            if !flagged && r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure(format!("row {i} has non-finite values")));
            }
        }
        Ok(())
    }

    /// CSV text: `# key: json` metadata lines, a header row, then data.
    /// Non-finite cells are written empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut header = self.columns.clone();
        if self.labels.is_some() {
            header.push("note".into());
        }
        let _ = writeln!(out, "{}", header.join(","));
        for (i, r) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> = r
                .iter()
                .map(|v| {
                    if v.is_finite() {
                        format!("{v:.10e}")
                    } else {
                        String::new()
                    }
                })
                .collect();
            if let Some(l) = &self.labels {
                cells.push(l[i].clone());
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub scale: Scale,
    pub crate_version: &'static str,
    pub config: ExperimentConfig,
    pub tables: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

/// Short deterministic identifier of a configuration (FNV-1a of its TOML form).
pub fn run_id(config: &ExperimentConfig) -> String {
    let text = config.to_toml_string().unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")[..12].to_string()
}

/// Runs the configured experiment and returns its tables by file stem.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<(String, CurveTable)>> {
    run_experiment_with(config, &ValidateOptions::default())
}

/// As [`run_experiment`], with explicit options for the `validate` experiment.
pub fn run_experiment_with(config: &ExperimentConfig, validate: &ValidateOptions) -> Result<Vec<(String, CurveTable)>> {
    config.validate()?;
    let mut tables = match config.experiment {
        ExperimentKind::Calibrate => vec![("calibrate".to_string(), run_calibrate(config)?)],
        ExperimentKind::Roc => vec![("roc".to_string(), run_roc(config)?)],
        ExperimentKind::Tradeoff => vec![("tradeoff".to_string(), run_tradeoff(config)?)],
        ExperimentKind::Sweep => vec![("sweep".to_string(), run_sweep(config)?)],
        ExperimentKind::Contour => {
            let surface = run_contour(config)?;
            let contour = extract_contour(&surface, config.axes.contour_level)?;
            vec![
                ("contour_surface".to_string(), surface),
                ("contour".to_string(), contour),
            ]
        }
        ExperimentKind::Beampattern => vec![("beampattern".to_string(), run_beampattern_experiment(config)?)],
        ExperimentKind::Heatmap => vec![("heatmap".to_string(), run_heatmap(config)?)],
        ExperimentKind::Validate => vec![("validate".to_string(), run_validate(config, validate)?)],
    };
    let id = run_id(config);
    let echo = serde_json::to_value(config).unwrap_or(serde_json::Value::Null);
    for (_, t) in tables.iter_mut() {
        t.set_meta("run_id", &id);
        t.set_meta("seed", config.seed);
        t.set_meta("config", &echo);
        t.check_invariants()?;
    }
    Ok(tables)
}

/// Writes every table as `<stem>.csv` plus `manifest.json` into `dir`.
pub fn write_outputs(config: &ExperimentConfig, tables: &[(String, CurveTable)], dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    let mut summary = BTreeMap::new();
    for (stem, t) in tables {
        let name = format!("{stem}.csv");
        t.write_csv(&dir.join(&name))?;
        names.push(name);
        for (k, v) in &t.metadata {
            if k != "config" && k != "run_id" && k != "seed" {
                summary.insert(format!("{stem}.{k}"), v.clone());
            }
        }
    }
    let manifest = RunManifest {
        run_id: run_id(config),
        experiment: config.experiment,
        seed: config.seed,
        scale: config.scale,
        crate_version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        tables: names,
        summary,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let mut c = ExperimentConfig::new(ExperimentKind::Tradeoff);
        c.scenario = Some(ScenarioConfig::default());
        c.design.gamma_d = Some(3.0);
        let text = c.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sparse_config_uses_defaults() {
        let c = ExperimentConfig::from_toml_str("experiment = \"heatmap\"\nseed = 5\n").unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.scenario().n_sr(), 2);
        assert_eq!(c.scenario().block_length, 1152);
        c.validate().unwrap();
    }

    #[test]
    fn trial_floor_enforced() {
        let mut c = ExperimentConfig::new(ExperimentKind::Roc);
        c.calibration_trials = Some(500);
        assert!(matches!(c.validate(), Err(Error::InsufficientTrials(_))));
    }

    #[test]
    fn unknown_experiment_is_parse_error() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("experiment = \"nope\""),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn table_csv_and_invariants() {
        let mut t = CurveTable::new(["x", "y"]);
        t.push(vec![1.0, 2.0]);
        t.push_labeled(vec![2.0, f64::NAN], "infeasible");
        t.set_meta("seed", 3);
        t.check_invariants().unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("# seed: 3\nx,y,note\n"));
        assert!(csv.contains(",infeasible"));
        let mut bad = CurveTable::new(["x"]);
        bad.push(vec![2.0]);
        bad.push(vec![1.0]);
        assert!(bad.check_invariants().is_err());
    }

    #[test]
    fn grid_nearest_cell() {
        let g = Axes::default().grid;
        let cells = g.cells();
        let k = g.nearest([150.0, 0.0]);
        assert_eq!(cells[k], [150.0, 0.0]);
    }
}
