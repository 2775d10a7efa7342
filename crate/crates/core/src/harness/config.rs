//! Experiment configuration: a flat TOML document layered over a preset.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::band::BandPlan;
use crate::error::{Error, Result};
use crate::signal::{ActiveBand, SignalSpec};
use crate::solver::{EvlbsOptions, SectionPower, SolverOptions, StopRule};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 20120323;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_OUT_DIR: &str = "results";
/// Overrides the default output directory.
pub const OUT_DIR_ENV: &str = "CWSS_OUT_DIR";

const MHZ: f64 = 1e6;
const SPAN_HZ: f64 = 500.0 * MHZ;
const PLAN_MHZ: [f64; 8] = [30.0, 60.0, 120.0, 170.0, 300.0, 350.0, 420.0, 450.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bpdn,
    Vlbs,
    Evlbs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bpdn, Method::Vlbs, Method::Evlbs];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Bpdn => "bpdn",
            Method::Vlbs => "vlbs",
            Method::Evlbs => "evlbs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpdn" => Ok(Method::Bpdn),
            "vlbs" => Ok(Method::Vlbs),
            "evlbs" => Ok(Method::Evlbs),
            other => Err(Error::config("methods", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(&self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(&self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::config("format", format!("expected csv|json|both, got `{other}`"))),
        }
    }
}

/// The four scenarios of the reference evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Table4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Table1, Preset::Table2, Preset::Table3, Preset::Table4];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Table4 => "table4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name.trim().to_ascii_lowercase())
    }

    pub fn ratio(&self) -> f64 {
        match self {
            Preset::Table1 | Preset::Table2 => 0.40,
            Preset::Table3 => 0.35,
            Preset::Table4 => 0.30,
        }
    }

    pub fn bands(&self) -> Vec<ActiveBand> {
        let all = [
            ActiveBand::new(30.0 * MHZ, 60.0 * MHZ, 0.0023, 0.0066),
            ActiveBand::new(120.0 * MHZ, 170.0 * MHZ, 0.0016, 0.0063),
            ActiveBand::new(300.0 * MHZ, 350.0 * MHZ, 0.0017, 0.0063),
            ActiveBand::new(420.0 * MHZ, 450.0 * MHZ, 0.0032, 0.0064),
        ];
        match self {
            Preset::Table1 => all.to_vec(),
            Preset::Table2 | Preset::Table3 => all[1..].to_vec(),
            Preset::Table4 => vec![all[1], all[3]],
        }
    }

    pub fn describe(&self) -> String {
        let bands: Vec<String> = self
            .bands()
            .iter()
            .map(|b| format!("{:.0}-{:.0} MHz", b.low_hz / MHZ, b.high_hz / MHZ))
            .collect();
        format!(
            "{} active bands ({}), sub-sampling ratio {:.2}",
            bands.len(),
            bands.join(", "),
            self.ratio()
        )
    }

    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            preset: Some(*self),
            signal: SignalSpec {
                n_bins: 1024,
                nyquist_hz: SPAN_HZ,
                active_bands: self.bands(),
                snr_db: 11.5,
                random_phase: true,
            },
            boundaries_hz: PLAN_MHZ.iter().map(|f| f * MHZ).collect(),
            ratios: vec![self.ratio()],
            methods: Method::ALL.to_vec(),
            eta_bpdn: 0.1,
            eta_vlbs: 0.2,
            eta_evlbs: 0.2,
            delta: 1e-3,
            epsilon: 0.05,
            max_outer: 8,
            reweight_power: SectionPower::L2,
            threshold: DEFAULT_THRESHOLD,
            solver: SolverOptions::default(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            out_dir: default_out_dir(),
            format: OutputFormat::Both,
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub signal: SignalSpec,
    pub boundaries_hz: Vec<f64>,
    pub ratios: Vec<f64>,
    pub methods: Vec<Method>,
    /// Noise bounds as fractions of `‖y‖₂`.
    pub eta_bpdn: f64,
    pub eta_vlbs: f64,
    pub eta_evlbs: f64,
    pub delta: f64,
    /// Outer stopping threshold as a fraction of the first iterate's norm.
    pub epsilon: f64,
    pub max_outer: usize,
    pub reweight_power: SectionPower,
    pub threshold: f64,
    pub solver: SolverOptions,
    pub trials: usize,
    pub seed: u64,
    /// Not echoed into reports, so identical experiments written to
    /// different directories produce identical payloads.
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Preset::Table1.config()
    }
}

impl ExperimentConfig {
    pub fn plan(&self) -> Result<BandPlan> {
        BandPlan::from_hz(self.signal.n_bins, self.signal.nyquist_hz, &self.boundaries_hz)
    }

    pub fn evlbs_options(&self) -> EvlbsOptions {
        EvlbsOptions {
            delta: self.delta,
            epsilon: StopRule::RelativeToFirst(self.epsilon),
            max_outer: self.max_outer,
            power: self.reweight_power,
            warm_start: true,
        }
    }

    pub fn eta_fraction(&self, method: Method) -> f64 {
        match method {
            Method::Bpdn => self.eta_bpdn,
            Method::Vlbs => self.eta_vlbs,
            Method::Evlbs => self.eta_evlbs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.ratios.is_empty() {
            return Err(Error::config("ratios", "at least one ratio is required"));
        }
        for &r in &self.ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::config("ratio", format!("{r} is outside (0, 1]")));
            }
            if (r * self.signal.n_bins as f64).floor() < 1.0 {
                return Err(Error::config("ratio", format!("{r} keeps no samples")));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        for (key, v) in [
            ("eta_bpdn", self.eta_bpdn),
            ("eta_vlbs", self.eta_vlbs),
            ("eta_evlbs", self.eta_evlbs),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be a finite value >= 0, got {v}")));
            }
        }
        for (key, v) in [
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("threshold", self.threshold),
            ("inner_tol", self.solver.inner_tol),
            ("admm_rho", self.solver.admm_rho),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.max_outer < 1 {
            return Err(Error::config("max_outer", "must be at least 1"));
        }
        if self.solver.max_inner_iters < 1 {
            return Err(Error::config("max_inner_iters", "must be at least 1"));
        }
        if self.signal.snr_db.is_nan() {
            return Err(Error::config("snr_db", "must be a number"));
        }
        self.signal
            .band_bins()
            .map_err(|e| Error::config("bands", e.to_string()))?;
        self.plan()
            .map_err(|e| Error::config("boundaries_hz", e.to_string()))?;
        Ok(())
    }
}

/// Every key a config document may contain. All are optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    n_bins: Option<usize>,
    nyquist_hz: Option<f64>,
    /// `[low_hz, high_hz, level_low, level_high]` per band.
    bands: Option<Vec<[f64; 4]>>,
    random_phase: Option<bool>,
    snr_db: Option<f64>,
    boundaries_hz: Option<Vec<f64>>,
    ratio: Option<f64>,
    ratios: Option<Vec<f64>>,
    methods: Option<Vec<String>>,
    eta_bpdn: Option<f64>,
    eta_vlbs: Option<f64>,
    eta_evlbs: Option<f64>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    max_outer: Option<usize>,
    reweight_power: Option<SectionPower>,
    threshold: Option<f64>,
    max_inner_iters: Option<usize>,
    inner_tol: Option<f64>,
    admm_rho: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    format: Option<String>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = unknown_key(&message).unwrap_or_else(|| "<document>".to_string());
        Error::config(key, e.to_string().trim_end())
    })?;

    let preset = match &raw.preset {
        Some(name) => Some(
            Preset::from_name(name)
                .ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?,
        ),
        None => None,
    };
    let mut cfg = preset.unwrap_or(Preset::Table1).config();
    cfg.preset = preset.or(Some(Preset::Table1));

    if let Some(v) = raw.n_bins {
        cfg.signal.n_bins = v;
    }
    if let Some(v) = raw.nyquist_hz {
        cfg.signal.nyquist_hz = v;
    }
    if let Some(bands) = raw.bands {
        cfg.signal.active_bands = bands
            .iter()
            .map(|b| ActiveBand::new(b[0], b[1], b[2], b[3]))
            .collect();
    }
    if let Some(v) = raw.random_phase {
        cfg.signal.random_phase = v;
    }
    if let Some(v) = raw.snr_db {
        cfg.signal.snr_db = v;
    }
    if let Some(v) = raw.boundaries_hz {
        cfg.boundaries_hz = v;
    }
    match (raw.ratio, raw.ratios) {
        (Some(_), Some(_)) => {
            return Err(Error::config("ratio", "give either `ratio` or `ratios`, not both"))
        }
        (Some(r), None) => cfg.ratios = vec![r],
        (None, Some(rs)) => cfg.ratios = rs,
        (None, None) => {}
    }
    if let Some(ms) = raw.methods {
        cfg.methods = parse_methods(ms.iter().map(String::as_str))?;
    }
    macro_rules! set {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = raw.$field { $target = v; })*
        };
    }
    set! {
        eta_bpdn => cfg.eta_bpdn,
        eta_vlbs => cfg.eta_vlbs,
        eta_evlbs => cfg.eta_evlbs,
        delta => cfg.delta,
        epsilon => cfg.epsilon,
        max_outer => cfg.max_outer,
        reweight_power => cfg.reweight_power,
        threshold => cfg.threshold,
        max_inner_iters => cfg.solver.max_inner_iters,
        inner_tol => cfg.solver.inner_tol,
        admm_rho => cfg.solver.admm_rho,
        trials => cfg.trials,
        seed => cfg.seed,
        out_dir => cfg.out_dir,
    }
    if let Some(f) = raw.format {
        cfg.format = f.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Parses a list of method names, dropping duplicates but keeping order.
pub fn parse_methods<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in names {
        if name.trim().is_empty() {
            continue;
        }
        let m: Method = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

fn unknown_key(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}
