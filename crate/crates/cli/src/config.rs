//! Run configuration: built-in defaults, an optional TOML config file, and
//! command-line flags, merged in that order of increasing precedence into one
//! resolved description of the point to evaluate.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::Deserialize;

use hybrid_fock::schemes::SchemeKind;
use hybrid_fock::states::TmssOrder;

use crate::CliError;

/// Either "auto" (derive the value from the rest of the configuration) or an
/// explicit number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        s.parse::<f64>()
            .map(AutoOr::Value)
            .map_err(|_| format!("expected \"auto\" or a number, got {s:?}"))
    }
}

impl fmt::Display for AutoOr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutoOr::Auto => write!(f, "auto"),
            AutoOr::Value(v) => write!(f, "{v}"),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AutoOr::Value(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Entanglement scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Qubit,
    Enhanced,
    Qutrit,
}

impl Scheme {
    pub fn kind(self) -> SchemeKind {
        match self {
            Scheme::Qubit => SchemeKind::Qubit,
            Scheme::Enhanced => SchemeKind::Enhanced,
            Scheme::Qutrit => SchemeKind::Qutrit,
        }
    }

    /// Number of DV levels the heralded state occupies.
    pub fn dv_dim(self) -> usize {
        match self {
            Scheme::Qubit | Scheme::Enhanced => 2,
            Scheme::Qutrit => 3,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Scheme::Qubit => "qubit",
            Scheme::Enhanced => "enhanced",
            Scheme::Qutrit => "qutrit",
        }
    }
}

/// Which state model a point is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Closed-form heralded states propagated through block-resolved
    /// channels; fast, and independent of the tap/source gains.
    ClosedForm,
    /// Full interferometer pipeline: photon taps, a two-mode squeezed
    /// source, central-station interference and heralding.
    Exact,
}

impl Model {
    pub fn id(self) -> &'static str {
        match self {
            Model::ClosedForm => "closed-form",
            Model::Exact => "exact",
        }
    }
}

/// Row output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Source expansion order for the exact model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TmssOrderArg {
    First,
    Second,
    Exact,
}

impl TmssOrderArg {
    pub fn to_core(self) -> TmssOrder {
        match self {
            TmssOrderArg::First => TmssOrder::First,
            TmssOrderArg::Second => TmssOrder::Second,
            TmssOrderArg::Exact => TmssOrder::Exact,
        }
    }
}

/// Scalar quantity reported per evaluated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum Metric {
    /// Entanglement negativity of the two-mode state.
    #[value(name = "negativity")]
    #[serde(rename = "negativity")]
    Negativity,
    /// Origin Wigner value (parity) of the <0|rho|0> DV block.
    #[value(name = "wigner-0")]
    #[serde(rename = "wigner-0")]
    Wigner0,
    /// Origin Wigner value of the <1|rho|1> DV block.
    #[value(name = "wigner-1")]
    #[serde(rename = "wigner-1")]
    Wigner1,
    /// Origin Wigner value of the <2|rho|2> DV block (qutrit only).
    #[value(name = "wigner-2")]
    #[serde(rename = "wigner-2")]
    Wigner2,
    /// Overlap with the lossless closed-form state at the same parameters.
    #[value(name = "fidelity")]
    #[serde(rename = "fidelity")]
    Fidelity,
    /// DV population beyond the scheme's declared levels.
    #[value(name = "leakage")]
    #[serde(rename = "leakage")]
    Leakage,
    /// Weight parameter: measured for exact runs, resolved input otherwise.
    #[value(name = "mu")]
    #[serde(rename = "mu")]
    Mu,
}

impl Metric {
    pub fn id(self) -> &'static str {
        match self {
            Metric::Negativity => "negativity",
            Metric::Wigner0 => "wigner-0",
            Metric::Wigner1 => "wigner-1",
            Metric::Wigner2 => "wigner-2",
            Metric::Fidelity => "fidelity",
            Metric::Leakage => "leakage",
            Metric::Mu => "mu",
        }
    }
}

/// Command-line overrides shared by `run`, `sweep` and `blocks`. Every field
/// falls back to the config file, then to the built-in default.
#[derive(Debug, Clone, clap::Args)]
pub struct Overrides {
    /// TOML config file; flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Entanglement scheme.
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// State model.
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// CV-side local squeezing, in dB.
    #[arg(long)]
    pub squeezing_db: Option<f64>,
    /// Weight parameter mu, or "auto" for the balanced value.
    #[arg(long)]
    pub mu: Option<AutoOr>,
    /// DV-side channel transmission.
    #[arg(long)]
    pub eta_a: Option<f64>,
    /// CV-side channel transmission.
    #[arg(long)]
    pub eta_b: Option<f64>,
    /// DV-side Gaussian phase-noise standard deviation, in degrees.
    #[arg(long)]
    pub sigma_deg: Option<f64>,
    /// Fock-space dimension per mode.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated metrics to report.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub metrics: Option<Vec<Metric>>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path: a file for run/sweep, a directory for blocks.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tap reflectivity angle (exact model).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Local subtraction tap angle, enhanced scheme (exact model).
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Source gain lambda (exact model).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Central beam-splitter reflectivity, or "auto" to realize mu.
    #[arg(long)]
    pub central_r: Option<AutoOr>,
    /// Central-station phase difference, in radians (exact model).
    #[arg(long)]
    pub delta_phi: Option<f64>,
    /// Source expansion order (exact model).
    #[arg(long, value_enum)]
    pub tmss_order: Option<TmssOrderArg>,
}

/// The config file's top level. Field names match the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<Scheme>,
    pub model: Option<Model>,
    pub squeezing_db: Option<f64>,
    pub mu: Option<AutoOr>,
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub sigma_deg: Option<f64>,
    pub dim: Option<usize>,
    pub metrics: Option<Vec<Metric>>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub sweep: Option<SweepSection>,
    pub exact: Option<ExactSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepSection {
    pub param: Option<String>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExactSection {
    pub theta: Option<f64>,
    pub theta0: Option<f64>,
    pub lambda: Option<f64>,
    pub central_r: Option<AutoOr>,
    pub delta_phi: Option<f64>,
    pub tmss_order: Option<TmssOrderArg>,
}

/// One fully resolved evaluation point.
#[derive(Debug, Clone)]
pub struct PointSpec {
    pub scheme: Scheme,
    pub model: Model,
    pub squeezing_db: f64,
    pub mu: AutoOr,
    pub eta_a: f64,
    pub eta_b: f64,
    pub sigma_deg: f64,
    pub dim: usize,
    pub exact: ExactParams,
}

/// Exact-model interferometer parameters.
#[derive(Debug, Clone, Copy)]
pub struct ExactParams {
    pub theta: f64,
    pub theta0: f64,
    pub lambda: f64,
    pub central_r: AutoOr,
    pub delta_phi: f64,
    pub tmss_order: TmssOrderArg,
}

/// Everything `run`/`sweep`/`blocks` need after merging the three layers.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub point: PointSpec,
    pub metrics: Vec<Metric>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub sweep: SweepSection,
}

pub fn load_file(path: &std::path::Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Merges defaults, the config file (if any) and the flags.
pub fn resolve(ov: &Overrides) -> Result<Resolved, CliError> {
    let file = match &ov.config {
        Some(path) => load_file(path)?,
        None => ConfigFile::default(),
    };
    let exact_file = file.exact.unwrap_or_default();
    let point = PointSpec {
        scheme: ov.scheme.or(file.scheme).unwrap_or(Scheme::Qubit),
        model: ov.model.or(file.model).unwrap_or(Model::ClosedForm),
        squeezing_db: ov.squeezing_db.or(file.squeezing_db).unwrap_or(3.0),
        mu: ov.mu.or(file.mu).unwrap_or(AutoOr::Auto),
        eta_a: ov.eta_a.or(file.eta_a).unwrap_or(1.0),
        eta_b: ov.eta_b.or(file.eta_b).unwrap_or(1.0),
        sigma_deg: ov.sigma_deg.or(file.sigma_deg).unwrap_or(0.0),
        dim: ov.dim.or(file.dim).unwrap_or(16),
        exact: ExactParams {
            theta: ov.theta.or(exact_file.theta).unwrap_or(0.05),
            theta0: ov.theta0.or(exact_file.theta0).unwrap_or(0.05),
            lambda: ov.lambda.or(exact_file.lambda).unwrap_or(0.05),
            central_r: ov.central_r.or(exact_file.central_r).unwrap_or(AutoOr::Auto),
            delta_phi: ov
                .delta_phi
                .or(exact_file.delta_phi)
                .unwrap_or(std::f64::consts::PI),
            tmss_order: ov
                .tmss_order
                .or(exact_file.tmss_order)
                .unwrap_or(TmssOrderArg::Exact),
        },
    };
    let metrics = ov
        .metrics
        .clone()
        .or(file.metrics)
        .unwrap_or_else(|| vec![Metric::Negativity]);
    if metrics.is_empty() {
        return Err(CliError::Usage("metric list is empty".into()));
    }
    validate_metrics(&point, &metrics)?;
    Ok(Resolved {
        point,
        metrics,
        format: ov.format.or(file.format).unwrap_or(Format::Csv),
        out: ov.out.clone().or(file.out),
        sweep: file.sweep.unwrap_or_default(),
    })
}

/// Rejects metric/scheme combinations the engine cannot honor.
pub fn validate_metrics(point: &PointSpec, metrics: &[Metric]) -> Result<(), CliError> {
    for m in metrics {
        let block = match m {
            Metric::Wigner0 => 0,
            Metric::Wigner1 => 1,
            Metric::Wigner2 => 2,
            _ => continue,
        };
        if block >= point.scheme.dv_dim() {
            return Err(CliError::Usage(format!(
                "metric {} needs DV level {block}, but the {} scheme has {} levels",
                m.id(),
                point.scheme.id(),
                point.scheme.dv_dim()
            )));
        }
    }
    Ok(())
}

/// Default output directory: `$HYBRID_FOCK_OUT_DIR`, else the working
/// directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("HYBRID_FOCK_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}
