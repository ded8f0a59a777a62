//! Parameter sweeps: sweep-axis resolution, concurrent row evaluation in
//! deterministic parameter order, and the CSV/JSON row serializers.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{AutoOr, Metric, Model, PointSpec, SweepSection};
use crate::point;
use crate::CliError;

/// Parameter a sweep can vary. `Eta` moves both transmissions together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    EtaA,
    EtaB,
    Mu,
    SqueezingDb,
    SigmaDeg,
    Theta,
    Theta0,
    Lambda,
    CentralR,
    DeltaPhi,
}

const PARAM_NAMES: [(SweepParam, &str); 11] = [
    (SweepParam::Eta, "eta"),
    (SweepParam::EtaA, "eta-a"),
    (SweepParam::EtaB, "eta-b"),
    (SweepParam::Mu, "mu"),
    (SweepParam::SqueezingDb, "squeezing-db"),
    (SweepParam::SigmaDeg, "sigma-deg"),
    (SweepParam::Theta, "theta"),
    (SweepParam::Theta0, "theta0"),
    (SweepParam::Lambda, "lambda"),
    (SweepParam::CentralR, "central-r"),
    (SweepParam::DeltaPhi, "delta-phi"),
];

impl SweepParam {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        PARAM_NAMES
            .iter()
            .find(|(_, n)| *n == name)
            .map(|(p, _)| *p)
            .ok_or_else(|| {
                let names: Vec<&str> = PARAM_NAMES.iter().map(|(_, n)| *n).collect();
                CliError::Usage(format!(
                    "unknown sweep parameter {name:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }

    pub fn id(self) -> &'static str {
        PARAM_NAMES
            .iter()
            .find(|(p, _)| *p == self)
            .map(|(_, n)| *n)
            .expect("every parameter is named")
    }

    /// Interferometer parameters only exist in the exact pipeline.
    pub fn needs_exact_model(self) -> bool {
        matches!(
            self,
            SweepParam::Theta
                | SweepParam::Theta0
                | SweepParam::Lambda
                | SweepParam::CentralR
                | SweepParam::DeltaPhi
        )
    }

    pub fn apply(self, spec: &mut PointSpec, value: f64) {
        match self {
            SweepParam::Eta => {
                spec.eta_a = value;
                spec.eta_b = value;
            }
            SweepParam::EtaA => spec.eta_a = value,
            SweepParam::EtaB => spec.eta_b = value,
            SweepParam::Mu => spec.mu = AutoOr::Value(value),
            SweepParam::SqueezingDb => spec.squeezing_db = value,
            SweepParam::SigmaDeg => spec.sigma_deg = value,
            SweepParam::Theta => spec.exact.theta = value,
            SweepParam::Theta0 => spec.exact.theta0 = value,
            SweepParam::Lambda => spec.exact.lambda = value,
            SweepParam::CentralR => spec.exact.central_r = AutoOr::Value(value),
            SweepParam::DeltaPhi => spec.exact.delta_phi = value,
        }
    }
}

/// A validated sweep axis.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// Evenly spaced parameter values, endpoints included. A degenerate
    /// start = stop axis collapses to one row.
    pub fn values(&self) -> Vec<f64> {
        if self.start == self.stop {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|i| self.start + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Builds the sweep axis from the config file's `[sweep]` section and the
/// `--sweep name[=start:stop]` / `--steps` flags (flags win).
pub fn resolve_sweep(
    section: &SweepSection,
    sweep_flag: Option<&str>,
    steps_flag: Option<usize>,
) -> Result<SweepSpec, CliError> {
    let mut name = section.param.clone();
    let mut start = section.start;
    let mut stop = section.stop;
    if let Some(flag) = sweep_flag {
        match flag.split_once('=') {
            Some((n, range)) => {
                let (a, b) = range.split_once(':').ok_or_else(|| {
                    CliError::Usage(format!(
                        "sweep range must look like start:stop, got {range:?}"
                    ))
                })?;
                let parse = |s: &str| {
                    s.trim().parse::<f64>().map_err(|_| {
                        CliError::Usage(format!("invalid sweep bound {s:?}"))
                    })
                };
                name = Some(n.to_string());
                start = Some(parse(a)?);
                stop = Some(parse(b)?);
            }
            None => name = Some(flag.to_string()),
        }
    }
    let steps = steps_flag.or(section.steps).unwrap_or(2);
    let name = name.ok_or_else(|| {
        CliError::Usage("no sweep parameter: pass --sweep name=start:stop or a [sweep] config section".into())
    })?;
    let param = SweepParam::parse(&name)?;
    let (start, stop) = match (start, stop) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(CliError::Usage(format!(
                "sweep over {} has no range: pass --sweep {}=start:stop or set start/stop in [sweep]",
                param.id(),
                param.id()
            )))
        }
    };
    if !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Usage("sweep bounds must be finite".into()));
    }
    if steps < 2 {
        return Err(CliError::Usage(format!("steps must be at least 2, got {steps}")));
    }
    if start == stop && steps != 2 {
        return Err(CliError::Usage(
            "a degenerate sweep (start = stop) must use steps = 2".into(),
        ));
    }
    Ok(SweepSpec { param, start, stop, steps })
}

/// One output row.
#[derive(Debug, Clone)]
pub struct Row {
    /// Swept parameter value; absent for single-point runs.
    pub param: Option<f64>,
    pub metrics: Vec<f64>,
    pub prob: Option<f64>,
    pub converged: bool,
}

/// Evaluated sweep (or single point, when `param_id` is absent).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub param_id: Option<&'static str>,
    pub metric_ids: Vec<&'static str>,
    pub rows: Vec<Row>,
}

/// Evaluates every row concurrently; rows come back in parameter order
/// regardless of completion order, so repeated runs serialize identically.
pub fn run_sweep(
    base: &PointSpec,
    metrics: &[Metric],
    spec: &SweepSpec,
) -> Result<SweepResult, CliError> {
    if spec.param.needs_exact_model() && base.model != Model::Exact {
        return Err(CliError::Usage(format!(
            "sweep parameter {} needs the exact model (pass --model exact)",
            spec.param.id()
        )));
    }
    let values = spec.values();
    let rows = values
        .par_iter()
        .map(|&v| {
            let mut point_spec = base.clone();
            spec.param.apply(&mut point_spec, v);
            let (values, converged) = point::evaluate_row(&point_spec, metrics)?;
            Ok(Row {
                param: Some(v),
                metrics: values.metrics,
                prob: values.prob,
                converged,
            })
        })
        .collect::<Result<Vec<Row>, hybrid_fock::FockError>>()?;
    Ok(SweepResult {
        param_id: Some(spec.param.id()),
        metric_ids: metrics.iter().map(|m| m.id()).collect(),
        rows,
    })
}

/// Evaluates a single point as a one-row result without a parameter column.
pub fn run_point(base: &PointSpec, metrics: &[Metric]) -> Result<SweepResult, CliError> {
    let (values, converged) = point::evaluate_row(base, metrics)?;
    Ok(SweepResult {
        param_id: None,
        metric_ids: metrics.iter().map(|m| m.id()).collect(),
        rows: vec![Row {
            param: None,
            metrics: values.metrics,
            prob: values.prob,
            converged,
        }],
    })
}

/// CSV with one header row; columns are the swept parameter (if any), the
/// metrics in request order, the herald probability and the convergence flag.
pub fn write_csv(result: &SweepResult, w: &mut impl Write) -> std::io::Result<()> {
    let mut header: Vec<&str> = Vec::new();
    if let Some(p) = result.param_id {
        header.push(p);
    }
    header.extend(result.metric_ids.iter());
    header.push("prob");
    header.push("converged");
    writeln!(w, "{}", header.join(","))?;
    for row in &result.rows {
        let mut fields: Vec<String> = Vec::new();
        if let Some(p) = row.param {
            fields.push(p.to_string());
        }
        fields.extend(row.metrics.iter().map(|v| v.to_string()));
        fields.push(row.prob.map_or_else(|| "nan".into(), |p| p.to_string()));
        fields.push(row.converged.to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// JSON array of row objects with the same field order as the CSV columns.
pub fn to_json(result: &SweepResult) -> Value {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            if let (Some(id), Some(v)) = (result.param_id, row.param) {
                obj.insert(id.to_string(), json!(v));
            }
            for (id, v) in result.metric_ids.iter().zip(&row.metrics) {
                obj.insert(id.to_string(), json!(v));
            }
            obj.insert("prob".into(), row.prob.map_or(Value::Null, |p| json!(p)));
            obj.insert("converged".into(), json!(row.converged));
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}
