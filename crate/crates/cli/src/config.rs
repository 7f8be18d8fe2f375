//! Run configuration: scenario, output options and per-scenario parameters.
//!
//! A config file is TOML:
//!
//! ```toml
//! scenario = "fig3"
//! out = "results/fig3"
//! formats = ["csv", "json"]
//! seed = 7
//!
//! [parameters]
//! coupling = 0.01
//! photon = { kind = "fock", n = 100 }
//! ```
//!
//! Every parameter has a default taken from the corresponding figure, so
//! `[parameters]` only lists overrides. Command-line flags take precedence
//! over the file.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quadopt_core::closed::revival_times;
use quadopt_core::driven::{DriveParams, PhononDistribution};
use quadopt_core::fock::{make_state, recommended_cutoff};
use quadopt_core::phase_space::{GridSpec, PeriodReference};
use quadopt_core::zpe::{ModeCoupling, MultimodeConfig, Parity};
use quadopt_core::{Complex64, StateSpec, SystemParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    ZpeReport,
    Thermometry,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Fig1,
        Scenario::Fig2,
        Scenario::Fig3,
        Scenario::Fig4,
        Scenario::Fig5,
        Scenario::Fig6,
        Scenario::ZpeReport,
        Scenario::Thermometry,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Fig6 => "fig6",
            Scenario::ZpeReport => "zpe-report",
            Scenario::Thermometry => "thermometry",
            Scenario::Custom => "custom",
        }
    }

    /// Unit convention printed in every file header.
    pub fn units(self) -> &'static str {
        match self {
            Scenario::Fig5 | Scenario::Fig6 | Scenario::Thermometry => {
                "frequencies and detunings in units of the cavity linewidth kappa"
            }
            Scenario::ZpeReport => "frequencies in the unit of mech_freq",
            _ => "frequencies in units of the bare mechanical frequency Omega, times in 1/Omega",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|x| x.name()).collect();
                format!("unknown scenario `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} issue", self.issues.len())?;
        if self.issues.len() != 1 {
            f.write_str("s")?;
        }
        f.write_str(")")?;
        for i in &self.issues {
            write!(f, "\n  - {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Phonon distribution of the driven-cavity scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Fock { n: usize },
    Coherent { mean: f64 },
    Thermal { mean: f64 },
    Custom { probs: Vec<f64> },
}

impl DistributionSpec {
    pub fn build(&self) -> quadopt_core::Result<PhononDistribution> {
        match self {
            DistributionSpec::Fock { n } => Ok(PhononDistribution::fock(*n)),
            DistributionSpec::Coherent { mean } => PhononDistribution::coherent(*mean),
            DistributionSpec::Thermal { mean } => PhononDistribution::thermal(*mean),
            DistributionSpec::Custom { probs } => PhononDistribution::custom(probs.clone()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Fock { n } => *n as f64,
            DistributionSpec::Coherent { mean } | DistributionSpec::Thermal { mean } => *mean,
            DistributionSpec::Custom { probs } => {
                let total: f64 = probs.iter().sum();
                probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total
            }
        }
    }
}

/// `fig1` and `custom`: mean displacement for `|α⟩|β⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementParams {
    pub coupling: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    /// `fig1`: length of the trace in revival times. Ignored by `custom`.
    pub revivals: f64,
    /// `custom`: length of the trace in bare periods. Ignored by fig1.
    pub periods: f64,
    pub samples_per_period: usize,
    /// `custom`: thermal occupancy for the variance trace.
    pub n_th: f64,
    pub photon_cutoff: usize,
}

/// `fig2`: displacement variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceParams {
    pub coupling: f64,
    pub cavity: StateSpec,
    pub n_th: f64,
    /// Trace length in bare periods.
    pub periods: f64,
    pub samples_per_period: usize,
    pub photon_cutoff: usize,
}

/// `fig3` and `fig4`: Q snapshots of the mechanical state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceParams {
    pub coupling: f64,
    pub photon: StateSpec,
    pub phonon: StateSpec,
    pub photon_cutoff: usize,
    pub phonon_cutoff: usize,
    /// Snapshot times in effective periods.
    pub snapshots: Vec<f64>,
    pub period: PeriodReference,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub auto_widen: bool,
    /// Dense quadrature-variance series over `[0, series_end]` periods.
    pub series_end: f64,
    pub series_points: usize,
}

impl PhaseSpaceParams {
    pub fn grid(&self) -> GridSpec {
        let mut g = GridSpec::square(self.grid_half_width, self.grid_points);
        g.auto_widen = self.auto_widen;
        g
    }
}

/// `fig5`: resolved transmission peaks and statistics extraction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeaksParams {
    pub coupling: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub drive: f64,
    pub distribution: DistributionSpec,
    pub grid_step: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

/// `fig6`: thermal vs coherent lineshape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineshapeParams {
    pub coupling: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub drive: f64,
    pub mean: f64,
    pub points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZpeParams {
    pub mech_freq: f64,
    pub linewidth: f64,
    pub modes: Vec<ModeCoupling>,
    pub residual: Vec<f64>,
    /// Numbers of equal even modes for the scaling table.
    pub mode_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermometryParams {
    pub coupling: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub drive: f64,
    /// Occupancy of the synthetic trace.
    pub n_th: f64,
    /// Relative standard deviation of the multiplicative noise.
    pub noise: f64,
    pub draws: usize,
    pub points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub max_mean: f64,
    /// Measured trace (`detuning_over_kappa,transmission`) to fit instead
    /// of synthetic data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Displacement(DisplacementParams),
    Variance(VarianceParams),
    PhaseSpace(PhaseSpaceParams),
    Peaks(PeaksParams),
    Lineshape(LineshapeParams),
    Zpe(ZpeParams),
    Thermometry(ThermometryParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub params: Params,
}

impl RunConfig {
    /// Defaults of `scenario` with everything resolved.
    pub fn defaults(scenario: Scenario, out: impl Into<PathBuf>) -> RunConfig {
        let mut issues = Vec::new();
        let params = read_params(scenario, None, &mut issues);
        debug_assert!(issues.is_empty(), "{issues:?}");
        RunConfig {
            scenario,
            out: out.into(),
            formats: vec![Format::Csv],
            seed: 0,
            threads: None,
            params,
        }
    }

    /// Normalised TOML with every default filled in.
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("scenario".into(), Value::String(self.scenario.name().into()));
        t.insert("out".into(), Value::String(self.out.display().to_string()));
        t.insert(
            "formats".into(),
            Value::Array(
                self.formats
                    .iter()
                    .map(|f| Value::String(format_name(*f).into()))
                    .collect(),
            ),
        );
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        if let Some(n) = self.threads {
            t.insert("threads".into(), Value::Integer(n as i64));
        }
        if let Ok(p) = Value::try_from(&self.params) {
            t.insert("parameters".into(), p);
        }
        toml::to_string(&t).unwrap_or_default()
    }

    pub fn params_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.params).unwrap_or(serde_json::Value::Null)
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

/// Settings given on the command line; they override the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Reads and validates a config file on its own: `scenario` and `out` must
/// be present in the file.
pub fn validate_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = read(path)?;
    parse_config(&text, &Overrides::default()).map_err(|e| prefix(path, e))
}

/// Builds a run configuration from an optional file plus command-line
/// overrides.
pub fn load_config(path: Option<&Path>, cli: &Overrides) -> Result<RunConfig, ConfigError> {
    match path {
        Some(p) => {
            let text = read(p)?;
            parse_config(&text, cli).map_err(|e| prefix(p, e))
        }
        None => parse_config("", cli),
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError {
        issues: vec![format!("{}: {e}", path.display())],
    })
}

fn prefix(path: &Path, e: ConfigError) -> ConfigError {
    ConfigError {
        issues: e
            .issues
            .into_iter()
            .map(|i| format!("{}: {i}", path.display()))
            .collect(),
    }
}

pub fn parse_config(text: &str, cli: &Overrides) -> Result<RunConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        issues: vec![format!("parse error: {}", e.to_string().trim_end())],
    })?;
    let mut issues = Vec::new();
    let mut top = Reader::new(Some(&table), "", &mut issues);

    let mut scenario_name: Option<String> = None;
    top.take("scenario", &mut scenario_name);
    let mut out: Option<PathBuf> = None;
    top.take("out", &mut out);
    let mut formats: Vec<Format> = vec![Format::Csv];
    top.take("formats", &mut formats);
    let mut seed: u64 = 0;
    top.take("seed", &mut seed);
    let mut threads: Option<usize> = None;
    top.take("threads", &mut threads);
    let parameters = top.table("parameters");
    top.finish(&["scenario", "out", "formats", "seed", "threads", "parameters"]);

    let from_file = match scenario_name.as_deref().map(Scenario::from_str) {
        Some(Ok(s)) => Some(s),
        Some(Err(e)) => {
            issues.push(format!("scenario: {e}"));
            None
        }
        None => None,
    };
    let scenario = match (cli.scenario, from_file) {
        (Some(a), Some(b)) if a != b => {
            issues.push(format!("scenario: file says `{b}` but `{a}` was requested"));
            Some(a)
        }
        (Some(a), _) => Some(a),
        (None, b) => b,
    };
    if scenario.is_none() && scenario_name.is_none() {
        issues.push("missing required field `scenario`".into());
    }
    let out = cli.out.clone().or(out);
    if out.is_none() {
        issues.push("missing required field `out` (output directory; or pass --out)".into());
    }
    if !cli.formats.is_empty() {
        formats = cli.formats.clone();
    }
    if formats.is_empty() {
        issues.push("formats: at least one output format is required".into());
    }
    formats.sort();
    formats.dedup();
    let seed = cli.seed.unwrap_or(seed);
    let threads = cli.threads.or(threads);
    if threads == Some(0) {
        issues.push("threads: must be >= 1".into());
    }

    let params = scenario.map(|s| read_params(s, parameters.as_ref(), &mut issues));
    match (scenario, out, params) {
        (Some(scenario), Some(out), Some(params)) if issues.is_empty() => Ok(RunConfig {
            scenario,
            out,
            formats,
            seed,
            threads,
            params,
        }),
        _ => Err(ConfigError { issues }),
    }
}

/// Pulls typed values out of a TOML table, recording every problem.
struct Reader<'a> {
    table: Option<&'a Table>,
    path: &'static str,
    seen: BTreeSet<String>,
    issues: &'a mut Vec<String>,
}

impl<'a> Reader<'a> {
    fn new(table: Option<&'a Table>, path: &'static str, issues: &'a mut Vec<String>) -> Self {
        Reader {
            table,
            path,
            seen: BTreeSet::new(),
            issues,
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.table?.get(key)?;
        self.seen.insert(key.to_string());
        Some(v)
    }

    fn take<T: DeserializeOwned>(&mut self, key: &str, slot: &mut T) {
        if let Some(v) = self.get(key) {
            match v.clone().try_into::<T>() {
                Ok(x) => *slot = x,
                Err(e) => {
                    let msg = format!("{}: {}", self.field(key), e.to_string().trim_end());
                    self.issues.push(msg);
                }
            }
        }
    }

    /// A number or `[re, im]`.
    fn complex(&mut self, key: &str, slot: &mut Complex64) {
        let Some(v) = self.get(key) else { return };
        let num = |v: &Value| match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        };
        let parsed = match v {
            Value::Array(a) if a.len() == 2 => num(&a[0]).zip(num(&a[1])).map(|(re, im)| Complex64::new(re, im)),
            other => num(other).map(|re| Complex64::new(re, 0.0)),
        };
        match parsed {
            Some(z) => *slot = z,
            None => {
                let msg = format!("{}: expected a number or [re, im]", self.field(key));
                self.issues.push(msg);
            }
        }
    }

    fn table(&mut self, key: &str) -> Option<Table> {
        match self.get(key)? {
            Value::Table(t) => Some(t.clone()),
            _ => {
                let msg = format!("{}: expected a table", self.field(key));
                self.issues.push(msg);
                None
            }
        }
    }

    fn finish(self, known: &[&str]) {
        let Some(t) = self.table else { return };
        for k in t.keys() {
            if !self.seen.contains(k) && !known.contains(&k.as_str()) {
                self.issues.push(format!(
                    "unknown field `{}`; expected one of {}",
                    self.field(k),
                    known.join(", ")
                ));
            }
        }
    }
}

fn read_params(scenario: Scenario, table: Option<&Table>, issues: &mut Vec<String>) -> Params {
    let mut r = Reader::new(table, "parameters", issues);
    let params = match scenario {
        Scenario::Fig1 => displacement(&mut r, true),
        Scenario::Custom => displacement(&mut r, false),
        Scenario::Fig2 => variance(&mut r),
        Scenario::Fig3 => phase_space(&mut r, fig3_defaults()),
        Scenario::Fig4 => phase_space(&mut r, fig4_defaults()),
        Scenario::Fig5 => peaks(&mut r),
        Scenario::Fig6 => lineshape(&mut r),
        Scenario::ZpeReport => zpe(&mut r),
        Scenario::Thermometry => thermometry(&mut r),
    };
    let known: Vec<&str> = params_keys(&params);
    r.finish(&known);
    check(scenario, &params, issues);
    params
}

fn params_keys(p: &Params) -> Vec<&'static str> {
    match p {
        Params::Displacement(_) => vec![
            "coupling", "alpha", "beta", "revivals", "periods", "samples_per_period", "n_th", "photon_cutoff",
        ],
        Params::Variance(_) => vec!["coupling", "cavity", "n_th", "periods", "samples_per_period", "photon_cutoff"],
        Params::PhaseSpace(_) => vec![
            "coupling", "photon", "phonon", "photon_cutoff", "phonon_cutoff", "snapshots", "period",
            "grid_half_width", "grid_points", "auto_widen", "series_end", "series_points",
        ],
        Params::Peaks(_) => vec![
            "coupling", "kappa", "kappa_e", "drive", "distribution", "grid_step", "delta_min", "delta_max",
        ],
        Params::Lineshape(_) => vec![
            "coupling", "kappa", "kappa_e", "drive", "mean", "points", "delta_min", "delta_max",
        ],
        Params::Zpe(_) => vec!["mech_freq", "linewidth", "modes", "residual", "mode_counts"],
        Params::Thermometry(_) => vec![
            "coupling", "kappa", "kappa_e", "drive", "n_th", "noise", "draws", "points", "delta_min",
            "delta_max", "max_mean", "trace",
        ],
    }
}

fn displacement(r: &mut Reader, fig1: bool) -> Params {
    let mut p = DisplacementParams {
        coupling: 0.01,
        alpha: Complex64::new(if fig1 { 6.0 } else { 2.0 }, 0.0),
        beta: Complex64::new(if fig1 { 2.0 } else { 1.0 }, 0.0),
        revivals: 2.5,
        periods: 20.0,
        samples_per_period: 40,
        n_th: 0.0,
        photon_cutoff: 0,
    };
    r.take("coupling", &mut p.coupling);
    r.complex("alpha", &mut p.alpha);
    r.complex("beta", &mut p.beta);
    r.take("revivals", &mut p.revivals);
    r.take("periods", &mut p.periods);
    r.take("samples_per_period", &mut p.samples_per_period);
    r.take("n_th", &mut p.n_th);
    let mut cutoff: Option<usize> = None;
    r.take("photon_cutoff", &mut cutoff);
    p.photon_cutoff = cutoff.unwrap_or_else(|| recommended_cutoff(p.alpha.norm_sqr()));
    Params::Displacement(p)
}

fn variance(r: &mut Reader) -> Params {
    let mut p = VarianceParams {
        coupling: 0.01,
        cavity: StateSpec::coherent(2.0, 0.0),
        n_th: 1.0,
        periods: 120.0,
        samples_per_period: 40,
        photon_cutoff: 0,
    };
    r.take("coupling", &mut p.coupling);
    r.take("cavity", &mut p.cavity);
    r.take("n_th", &mut p.n_th);
    r.take("periods", &mut p.periods);
    r.take("samples_per_period", &mut p.samples_per_period);
    let mut cutoff: Option<usize> = None;
    r.take("photon_cutoff", &mut cutoff);
    p.photon_cutoff = cutoff.unwrap_or_else(|| recommended_cutoff(p.cavity.mean_occupancy()));
    Params::Variance(p)
}

fn fig3_defaults() -> PhaseSpaceParams {
    PhaseSpaceParams {
        coupling: 0.01,
        photon: StateSpec::Fock { n: 100 },
        phonon: StateSpec::Fock { n: 0 },
        photon_cutoff: 130,
        phonon_cutoff: 60,
        snapshots: vec![0.25, 0.5, 0.75, 1.0],
        period: PeriodReference::MeanPhotonNumber,
        grid_half_width: 6.0,
        grid_points: 201,
        auto_widen: true,
        series_end: 1.25,
        series_points: 501,
    }
}

fn fig4_defaults() -> PhaseSpaceParams {
    PhaseSpaceParams {
        photon: StateSpec::coherent(40f64.sqrt(), 0.0),
        phonon: StateSpec::Fock { n: 2 },
        photon_cutoff: 80,
        phonon_cutoff: 40,
        snapshots: vec![0.0, 1.5, 130.0, 260.0, 260.25, 261.0],
        series_end: 2.0,
        series_points: 201,
        ..fig3_defaults()
    }
}

fn phase_space(r: &mut Reader, mut p: PhaseSpaceParams) -> Params {
    r.take("coupling", &mut p.coupling);
    r.take("photon", &mut p.photon);
    r.take("phonon", &mut p.phonon);
    r.take("photon_cutoff", &mut p.photon_cutoff);
    r.take("phonon_cutoff", &mut p.phonon_cutoff);
    r.take("snapshots", &mut p.snapshots);
    r.take("period", &mut p.period);
    r.take("grid_half_width", &mut p.grid_half_width);
    r.take("grid_points", &mut p.grid_points);
    r.take("auto_widen", &mut p.auto_widen);
    r.take("series_end", &mut p.series_end);
    r.take("series_points", &mut p.series_points);
    Params::PhaseSpace(p)
}

fn upper_detuning(kappa: f64, g: f64, mean: f64) -> f64 {
    2.0 * kappa + 2.0 * g * (mean + 5.0 * mean.max(0.0).sqrt())
}

fn peaks(r: &mut Reader) -> Params {
    let mut p = PeaksParams {
        coupling: 4.0,
        kappa: 1.0,
        kappa_e: 1.0,
        drive: 1e-3,
        distribution: DistributionSpec::Coherent { mean: 10.0 },
        grid_step: 0.01,
        delta_min: -2.0,
        delta_max: 0.0,
    };
    r.take("coupling", &mut p.coupling);
    r.take("kappa", &mut p.kappa);
    r.take("kappa_e", &mut p.kappa_e);
    r.take("drive", &mut p.drive);
    r.take("distribution", &mut p.distribution);
    r.take("grid_step", &mut p.grid_step);
    p.delta_min = -2.0 * p.kappa;
    r.take("delta_min", &mut p.delta_min);
    let mut hi: Option<f64> = None;
    r.take("delta_max", &mut hi);
    p.delta_max = hi.unwrap_or_else(|| upper_detuning(p.kappa, p.coupling, p.distribution.mean()));
    Params::Peaks(p)
}

fn lineshape(r: &mut Reader) -> Params {
    let mut p = LineshapeParams {
        coupling: 0.01,
        kappa: 1.0,
        kappa_e: 1.0,
        drive: 1e-3,
        mean: 50.0,
        points: 2001,
        delta_min: 0.0,
        delta_max: 0.0,
    };
    r.take("coupling", &mut p.coupling);
    r.take("kappa", &mut p.kappa);
    r.take("kappa_e", &mut p.kappa_e);
    r.take("drive", &mut p.drive);
    r.take("mean", &mut p.mean);
    r.take("points", &mut p.points);
    p.delta_min = -2.0 * p.kappa;
    r.take("delta_min", &mut p.delta_min);
    let mut hi: Option<f64> = None;
    r.take("delta_max", &mut hi);
    p.delta_max = hi.unwrap_or_else(|| upper_detuning(p.kappa, p.coupling, p.mean));
    Params::Lineshape(p)
}

fn zpe(r: &mut Reader) -> Params {
    let mut p = ZpeParams {
        mech_freq: 1.0,
        linewidth: 1e-6,
        modes: vec![ModeCoupling {
            index: 0,
            coupling: 5e-6,
            parity: Parity::Even,
            occupancy: 0,
        }],
        residual: Vec::new(),
        mode_counts: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
    };
    r.take("mech_freq", &mut p.mech_freq);
    r.take("linewidth", &mut p.linewidth);
    r.take("modes", &mut p.modes);
    r.take("residual", &mut p.residual);
    r.take("mode_counts", &mut p.mode_counts);
    Params::Zpe(p)
}

fn thermometry(r: &mut Reader) -> Params {
    let mut p = ThermometryParams {
        coupling: 0.01,
        kappa: 1.0,
        kappa_e: 1.0,
        drive: 1e-3,
        n_th: 50.0,
        noise: 0.01,
        draws: 100,
        points: 241,
        delta_min: 0.0,
        delta_max: 0.0,
        max_mean: 1e4,
        trace: None,
    };
    r.take("coupling", &mut p.coupling);
    r.take("kappa", &mut p.kappa);
    r.take("kappa_e", &mut p.kappa_e);
    r.take("drive", &mut p.drive);
    r.take("n_th", &mut p.n_th);
    r.take("noise", &mut p.noise);
    r.take("draws", &mut p.draws);
    r.take("points", &mut p.points);
    p.delta_min = -2.0 * p.kappa;
    r.take("delta_min", &mut p.delta_min);
    let mut hi: Option<f64> = None;
    r.take("delta_max", &mut hi);
    p.delta_max = hi.unwrap_or_else(|| upper_detuning(p.kappa, p.coupling, p.n_th));
    r.take("max_mean", &mut p.max_mean);
    r.take("trace", &mut p.trace);
    Params::Thermometry(p)
}

/// Physical preconditions, checked through the library constructors so the
/// messages match what a run would report.
fn check(scenario: Scenario, params: &Params, issues: &mut Vec<String>) {
    let mut err = |field: &str, r: quadopt_core::Result<()>| {
        if let Err(e) = r {
            issues.push(format!("parameters.{field}: {e}"));
        }
    };
    let positive = |name: &'static str, x: f64| -> quadopt_core::Result<()> {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(quadopt_core::Error::InvalidParameter {
                name,
                reason: format!("must be finite and > 0 (got {x})"),
            })
        }
    };
    let non_negative = |name: &'static str, x: f64| -> quadopt_core::Result<()> {
        if x.is_finite() && x >= 0.0 {
            Ok(())
        } else {
            Err(quadopt_core::Error::InvalidParameter {
                name,
                reason: format!("must be finite and >= 0 (got {x})"),
            })
        }
    };
    let at_least = |name: &'static str, x: usize, min: usize| -> quadopt_core::Result<()> {
        if x >= min {
            Ok(())
        } else {
            Err(quadopt_core::Error::InvalidParameter {
                name,
                reason: format!("must be >= {min} (got {x})"),
            })
        }
    };
    let drive = |d: f64, kappa: f64, kappa_e: f64| DriveParams::new(0.0, d, kappa, kappa_e).map(|_| ());
    let range = |lo: f64, hi: f64| -> quadopt_core::Result<()> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(())
        } else {
            Err(quadopt_core::Error::InvalidParameter {
                name: "delta_min",
                reason: format!("need finite delta_min < delta_max (got {lo}, {hi})"),
            })
        }
    };

    match params {
        Params::Displacement(p) => {
            let sys = SystemParams::with_coupling(p.coupling, p.photon_cutoff, 1);
            err("coupling", sys.clone().map(|_| ()));
            err("alpha", make_state(&StateSpec::Coherent { alpha: p.alpha }, p.photon_cutoff.max(1)).map(|_| ()));
            err("samples_per_period", at_least("samples_per_period", p.samples_per_period, 4));
            err("n_th", non_negative("n_th", p.n_th));
            if scenario == Scenario::Fig1 {
                err("revivals", positive("revivals", p.revivals));
                if let Ok(s) = SystemParams::with_coupling(p.coupling, p.photon_cutoff.max(1), 1) {
                    err("alpha", revival_times(&s, p.alpha).map(|_| ()));
                }
            } else {
                err("periods", positive("periods", p.periods));
            }
        }
        Params::Variance(p) => {
            err("coupling", SystemParams::with_coupling(p.coupling, p.photon_cutoff, 1).map(|_| ()));
            err("cavity", make_state(&p.cavity, p.photon_cutoff.max(1)).map(|_| ()));
            err("n_th", non_negative("n_th", p.n_th));
            err("periods", positive("periods", p.periods));
            err("samples_per_period", at_least("samples_per_period", p.samples_per_period, 4));
        }
        Params::PhaseSpace(p) => {
            let sys = SystemParams::with_coupling(p.coupling, p.photon_cutoff, p.phonon_cutoff);
            err("coupling", sys.clone().map(|_| ()));
            err("photon", make_state(&p.photon, p.photon_cutoff.max(1)).map(|_| ()));
            err("phonon", make_state(&p.phonon, p.phonon_cutoff.max(1)).map(|_| ()));
            if let Ok(s) = sys {
                err("period", p.period.period(&s, &p.photon).map(|_| ()));
            }
            if p.snapshots.is_empty() || p.snapshots.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                issues_push(&mut err, "snapshots", "need at least one finite time >= 0");
            }
            err("grid_half_width", positive("grid_half_width", p.grid_half_width));
            err("grid_points", p.grid().validate());
            err("series_end", positive("series_end", p.series_end));
            err("series_points", at_least("series_points", p.series_points, 2));
        }
        Params::Peaks(p) => {
            err("kappa_e", drive(p.drive, p.kappa, p.kappa_e));
            err("coupling", positive("coupling", p.coupling));
            err("distribution", p.distribution.build().map(|_| ()));
            err("grid_step", positive("grid_step", p.grid_step));
            err("delta_max", range(p.delta_min, p.delta_max));
            if p.grid_step > 0.0 && (p.delta_max - p.delta_min) / p.grid_step > 5e6 {
                issues_push(&mut err, "grid_step", "grid would exceed 5e6 points");
            }
        }
        Params::Lineshape(p) => {
            err("kappa_e", drive(p.drive, p.kappa, p.kappa_e));
            err("coupling", positive("coupling", p.coupling));
            err("mean", non_negative("mean", p.mean));
            err("points", at_least("points", p.points, 20));
            err("delta_max", range(p.delta_min, p.delta_max));
        }
        Params::Zpe(p) => {
            err("mech_freq", positive("mech_freq", p.mech_freq));
            let c = MultimodeConfig {
                modes: p.modes.clone(),
                mech_linewidth: p.linewidth,
                residual: p.residual.clone(),
            };
            err("modes", c.validate());
            if p.mode_counts.contains(&0) {
                issues_push(&mut err, "mode_counts", "counts must be >= 1");
            }
        }
        Params::Thermometry(p) => {
            err("kappa_e", drive(p.drive, p.kappa, p.kappa_e));
            err("coupling", positive("coupling", p.coupling));
            err("n_th", non_negative("n_th", p.n_th));
            err("noise", non_negative("noise", p.noise));
            err("draws", at_least("draws", p.draws, 1));
            err("points", at_least("points", p.points, 20));
            err("delta_max", range(p.delta_min, p.delta_max));
            err("max_mean", positive("max_mean", p.max_mean - 1e-3));
            if let Some(path) = &p.trace {
                if !path.is_file() {
                    issues_push(&mut err, "trace", &format!("{} is not a readable file", path.display()));
                }
            }
        }
    }
}

fn issues_push(err: &mut impl FnMut(&str, quadopt_core::Result<()>), field: &'static str, reason: &str) {
    err(
        field,
        Err(quadopt_core::Error::InvalidParameter {
            name: field,
            reason: reason.to_string(),
        }),
    );
}

/// Bare-period time grid `t_k = 2πk/samples` up to `end` periods.
pub fn bare_time_grid(end_periods: f64, samples_per_period: usize) -> Vec<f64> {
    let n = (end_periods * samples_per_period as f64).ceil() as usize;
    let dt = 2.0 * PI / samples_per_period as f64;
    (0..=n).map(|k| k as f64 * dt).collect()
}
