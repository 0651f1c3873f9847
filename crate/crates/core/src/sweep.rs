//! One-dimensional β sweeps over crystal length, sample path and mirror gap.
//!
//! Every point rebuilds the geometry from the base spec, recomputes the
//! sample τ (an absorbance sample depends on L_m) and runs the full
//! map → fringes → visibility → β chain. Points run on a rayon pool and are
//! assembled in value order, so the result does not depend on scheduling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{GeometrySpec, SampleSpec};
use crate::dispersion::DispersionRegistry;
use crate::interferometer::{SimulationGrid, VisibilityOptions, Windows};
use crate::pipeline;
use crate::Error;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep needs at least {min} values, got {got}")]
    TooFewValues { min: usize, got: usize },
    #[error("sweep values must be finite and strictly monotone (index {index})")]
    NotMonotone { index: usize },
    #[error("every sweep point failed; first failure at {parameter}={value}: {source}")]
    AllFailed {
        parameter: SweepParameter,
        value: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("sweep point {parameter}={value} failed: {source}")]
    Point {
        parameter: SweepParameter,
        value: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("sweep CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "crystal_L")]
    CrystalL,
    #[serde(rename = "sample_L_m")]
    SampleLm,
    #[serde(rename = "gap_L_a")]
    GapLa,
}

impl SweepParameter {
    pub fn unit(self) -> &'static str {
        match self {
            SweepParameter::SampleLm => "um",
            _ => "mm",
        }
    }

    pub fn default_values(self) -> SweepValues {
        let (start, stop, count) = match self {
            SweepParameter::CrystalL => (1.0, 10.0, 19),
            SweepParameter::SampleLm => (1.0, 20.0, 20),
            SweepParameter::GapLa => (-12.0, -4.0, 33),
        };
        SweepValues::Range { start, stop, count }
    }

    pub fn apply(self, spec: &mut GeometrySpec, value: f64) {
        match self {
            SweepParameter::CrystalL => spec.crystal.length_mm = value,
            SweepParameter::SampleLm => spec.sample_l_m_um = value,
            SweepParameter::GapLa => spec.gap_l_a_mm = value,
        }
    }

    pub fn read(self, spec: &GeometrySpec) -> f64 {
        match self {
            SweepParameter::CrystalL => spec.crystal.length_mm,
            SweepParameter::SampleLm => spec.sample_l_m_um,
            SweepParameter::GapLa => spec.gap_l_a_mm,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::CrystalL => "crystal_L",
            SweepParameter::SampleLm => "sample_L_m",
            SweepParameter::GapLa => "gap_L_a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl SweepValues {
    /// Values in ascending order; a descending list is reversed.
    pub fn resolve(&self) -> Result<Vec<f64>, SweepError> {
        let mut v = match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { start, stop, count } => {
                if *count < 2 {
                    return Err(SweepError::TooFewValues {
                        min: 2,
                        got: *count,
                    });
                }
                let step = (stop - start) / (*count - 1) as f64;
                (0..*count)
                    .map(|i| {
                        if i == count - 1 {
                            *stop
                        } else {
                            start + step * i as f64
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(SweepError::TooFewValues { min: 1, got: 0 });
        }
        if v.len() >= 2 && v[0] > v[1] {
            v.reverse();
        }
        for (i, x) in v.iter().enumerate() {
            if !x.is_finite() || (i > 0 && *x <= v[i - 1]) {
                return Err(SweepError::NotMonotone { index: i });
            }
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Option<SweepValues>,
    #[serde(default)]
    pub base: GeometrySpec,
    pub sample: SampleSpec,
    #[serde(default)]
    pub grid: SimulationGrid,
    #[serde(default)]
    pub windows: Windows,
    #[serde(default)]
    pub visibility: VisibilityOptions,
}

impl SweepSpec {
    pub fn new(parameter: SweepParameter, sample: SampleSpec) -> Self {
        Self {
            parameter,
            values: None,
            base: GeometrySpec::default(),
            sample,
            grid: SimulationGrid::default(),
            windows: Windows::default(),
            visibility: VisibilityOptions::default(),
        }
    }

    pub fn resolved_values(&self) -> Result<Vec<f64>, SweepError> {
        self.values
            .clone()
            .unwrap_or_else(|| self.parameter.default_values())
            .resolve()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    NoFringes,
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointStatus::Ok => "ok",
            PointStatus::NoFringes => "no_fringes",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub beta: Option<f64>,
    pub v_a: Option<f64>,
    pub v_b: Option<f64>,
    pub mean_visibility: Option<f64>,
    pub status: PointStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub unit: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Value of the ok point with the largest β; the first one on ties.
    pub fn argmax(&self) -> Option<f64> {
        self.best().map(|p| p.value)
    }

    fn best(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .filter_map(|p| p.beta.map(|b| (p, b)))
            .fold(None, |acc: Option<(&SweepPoint, f64)>, (p, b)| match acc {
                Some((_, bb)) if bb >= b => acc,
                _ => Some((p, b)),
            })
            .map(|(p, _)| p)
    }

    pub fn null_points(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.status == PointStatus::NoFringes)
            .map(|p| p.value)
            .collect()
    }

    /// β rises to a single maximum and then falls. Only points with fringes
    /// count, and the maximum must have at least one such point on each side.
    pub fn is_unimodal(&self) -> bool {
        let betas: Vec<f64> = self.points.iter().filter_map(|p| p.beta).collect();
        if betas.len() < 3 {
            return false;
        }
        let k = betas
            .iter()
            .enumerate()
            .fold(0, |best, (i, &b)| if b > betas[best] { i } else { best });
        if k == 0 || k == betas.len() - 1 {
            return false;
        }
        betas[..=k].windows(2).all(|w| w[1] >= w[0]) && betas[k..].windows(2).all(|w| w[1] <= w[0])
    }

    /// The fringe collapse nearest `predicted` within `halfwidth`: the
    /// no-fringe side of the closest boundary between fringing and
    /// non-fringing points, or failing that the point with the smallest
    /// mean visibility.
    pub fn locate_null(&self, predicted: f64, halfwidth: f64) -> Option<f64> {
        let near = |v: f64| (v - predicted).abs() <= halfwidth;
        let boundary = self
            .points
            .windows(2)
            .filter(|w| w[0].status != w[1].status)
            .map(|w| {
                if w[0].status == PointStatus::NoFringes {
                    w[0].value
                } else {
                    w[1].value
                }
            })
            .filter(|&v| near(v))
            .min_by(|a, b| (a - predicted).abs().total_cmp(&(b - predicted).abs()));
        if boundary.is_some() {
            return boundary;
        }
        self.points
            .iter()
            .filter(|p| near(p.value))
            .filter_map(|p| p.mean_visibility.map(|v| (p.value, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(v, _)| v)
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        w.write_record(["value", "beta", "V_A", "V_B", "mean_V", "status"])
            .expect("in-memory write");
        for p in &self.points {
            w.write_record([
                format!("{:?}", p.value),
                fmt(p.beta),
                fmt(p.v_a),
                fmt(p.v_b),
                fmt(p.mean_visibility),
                p.status.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn from_csv_str(parameter: SweepParameter, text: &str) -> Result<SweepResult, SweepError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let parse = |s: &str| -> Result<Option<f64>, SweepError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|e| SweepError::Csv(format!("{s:?}: {e}")))
            }
        };
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| SweepError::Csv(e.to_string()))?;
            if rec.len() != 6 {
                return Err(SweepError::Csv(format!(
                    "expected 6 fields, got {}",
                    rec.len()
                )));
            }
            let status = match &rec[5] {
                "ok" => PointStatus::Ok,
                "no_fringes" => PointStatus::NoFringes,
                other => return Err(SweepError::Csv(format!("unknown status {other:?}"))),
            };
            points.push(SweepPoint {
                value: parse(&rec[0])?.ok_or_else(|| SweepError::Csv("missing value".into()))?,
                beta: parse(&rec[1])?,
                v_a: parse(&rec[2])?,
                v_b: parse(&rec[3])?,
                mean_visibility: parse(&rec[4])?,
                status,
                detail: None,
            });
        }
        Ok(SweepResult {
            parameter,
            unit: parameter.unit().to_string(),
            points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub unit: String,
    pub argmax: Option<f64>,
    pub beta_at_argmax: Option<f64>,
    pub null_points: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

pub fn summarize(result: &SweepResult) -> SweepSummary {
    let best = result.best();
    SweepSummary {
        parameter: result.parameter,
        unit: result.unit.clone(),
        argmax: best.map(|p| p.value),
        beta_at_argmax: best.and_then(|p| p.beta),
        null_points: result.null_points(),
        points: result.points.clone(),
    }
}

fn evaluate_point(
    spec: &SweepSpec,
    registry: &DispersionRegistry,
    value: f64,
) -> Result<SweepPoint, Error> {
    let mut geometry_spec = spec.base.clone();
    spec.parameter.apply(&mut geometry_spec, value);
    let geometry = geometry_spec.resolve(registry)?;
    let sample = spec.sample.resolve(&geometry)?;
    let eval = pipeline::evaluate(
        &geometry,
        &sample,
        &spec.grid,
        &spec.visibility,
        &spec.windows,
    )?;
    Ok(match eval.beta {
        Some(b) => SweepPoint {
            value,
            beta: Some(b.beta),
            v_a: Some(b.v_a),
            v_b: Some(b.v_b),
            mean_visibility: eval.mean_visibility,
            status: PointStatus::Ok,
            detail: None,
        },
        None => SweepPoint {
            value,
            beta: None,
            v_a: None,
            v_b: None,
            mean_visibility: eval.mean_visibility,
            status: PointStatus::NoFringes,
            detail: eval.failure,
        },
    })
}

fn assemble(
    spec: &SweepSpec,
    values: &[f64],
    outcomes: Vec<Result<SweepPoint, Error>>,
) -> Result<SweepResult, SweepError> {
    let mut points = Vec::with_capacity(outcomes.len());
    let mut first_failure = None;
    let mut failures = 0;
    for (value, outcome) in values.iter().zip(outcomes) {
        match outcome {
            Ok(p) => points.push(p),
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert((*value, e));
            }
        }
    }
    if let Some((value, source)) = first_failure {
        let source = Box::new(source);
        return Err(if failures == values.len() {
            SweepError::AllFailed {
                parameter: spec.parameter,
                value,
                source,
            }
        } else {
            SweepError::Point {
                parameter: spec.parameter,
                value,
                source,
            }
        });
    }
    Ok(SweepResult {
        parameter: spec.parameter,
        unit: spec.parameter.unit().to_string(),
        points,
    })
}

/// Runs the sweep on a pool of `threads` workers (0 picks the rayon default).
pub fn run_sweep(
    spec: &SweepSpec,
    registry: &DispersionRegistry,
    threads: usize,
) -> Result<SweepResult, SweepError> {
    use rayon::prelude::*;
    let values = spec.resolved_values()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
    let outcomes = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                log::debug!("sweep {}={v}", spec.parameter);
                evaluate_point(spec, registry, v)
            })
            .collect()
    });
    assemble(spec, &values, outcomes)
}

/// Same as [`run_sweep`] with points evaluated one after another.
pub fn run_sweep_sequential(
    spec: &SweepSpec,
    registry: &DispersionRegistry,
) -> Result<SweepResult, SweepError> {
    let values = spec.resolved_values()?;
    let outcomes = values
        .iter()
        .map(|&v| evaluate_point(spec, registry, v))
        .collect();
    assemble(spec, &values, outcomes)
}
