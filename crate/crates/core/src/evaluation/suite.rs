use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    aggregate, deformation_iou_curve, detect_phases, directional_consistency_curve, magnitude, normalized_magnitude,
    rmse_curve, MetricSeries, PhaseReport, PHASE_DWELL, PHASE_EPS, TOP_FRACTION,
};
use crate::data::TimeGrid;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Rmse,
    DirectionalConsistency,
    Iou,
    /// Normalized deformation magnitude with its phase report.
    Magnitude,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Rmse, MetricKind::DirectionalConsistency, MetricKind::Iou, MetricKind::Magnitude];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Rmse => "rmse",
            MetricKind::DirectionalConsistency => "directional_consistency",
            MetricKind::Iou => "iou",
            MetricKind::Magnitude => "magnitude",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

/// Time-major fields of one scenario. Decomposed fields are optional and
/// only needed by the metrics that use them.
#[derive(Debug, Clone, Default)]
pub struct ScenarioFields {
    pub id: usize,
    pub x_init: Vec<Vec3>,
    pub target: Vec<Vec3>,
    pub total: Vec<Vec3>,
    pub rigid: Option<Vec<Vec3>>,
    pub deformation: Option<Vec<Vec3>>,
    pub truth_deformation: Option<Vec<Vec3>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub id: usize,
    pub series: Vec<MetricSeries>,
    pub phases: Option<PhaseReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub metrics: Vec<MetricKind>,
    pub scenarios: Vec<ScenarioMetrics>,
    /// Cross-scenario mean per metric with a standard-deviation band.
    pub mean: Vec<MetricSeries>,
}

fn require<'a>(fields: &'a [ScenarioFields], metric: MetricKind, get: impl Fn(&ScenarioFields) -> bool) -> Result<()> {
    let absent: Vec<usize> = fields.iter().filter(|f| !get(f)).map(|f| f.id).collect();
    if absent.is_empty() {
        Ok(())
    } else {
        Err(Error::Missing(format!("{} needs decomposed fields absent for scenarios {absent:?}", metric.name())))
    }
}

pub fn evaluate_suite(fields: &[ScenarioFields], grid: &TimeGrid, metrics: &[MetricKind]) -> Result<MetricsBundle> {
    for &m in metrics {
        match m {
            MetricKind::Rmse => {}
            MetricKind::DirectionalConsistency => require(fields, m, |f| f.rigid.is_some() && f.deformation.is_some())?,
            MetricKind::Iou => require(fields, m, |f| f.deformation.is_some() && f.truth_deformation.is_some())?,
            MetricKind::Magnitude => require(fields, m, |f| f.deformation.is_some())?,
        }
    }
    let mut scenarios = Vec::with_capacity(fields.len());
    for f in fields {
        let n = f.x_init.len();
        let mut series = Vec::with_capacity(metrics.len());
        let mut phases = None;
        for &m in metrics {
            series.push(match m {
                MetricKind::Rmse => rmse_curve(&f.total, &f.target, grid)?,
                MetricKind::DirectionalConsistency => {
                    directional_consistency_curve(&f.x_init, f.rigid.as_deref().unwrap_or_default(), f.deformation.as_deref().unwrap_or_default(), grid)?
                }
                MetricKind::Iou => deformation_iou_curve(
                    f.deformation.as_deref().unwrap_or_default(),
                    f.truth_deformation.as_deref().unwrap_or_default(),
                    n,
                    grid,
                    TOP_FRACTION,
                )?,
                MetricKind::Magnitude => {
                    let d = f.deformation.as_deref().unwrap_or_default();
                    let peak = match &f.truth_deformation {
                        Some(t) => Some(magnitude(t, n)?.into_iter().fold(0.0, f64::max)),
                        None => None,
                    };
                    let m = normalized_magnitude(d, n, peak)?;
                    phases = Some(detect_phases(&m, grid, PHASE_EPS, PHASE_DWELL)?);
                    MetricSeries::new("magnitude", grid.times(), m.into_iter().map(Some).collect())
                }
            });
        }
        scenarios.push(ScenarioMetrics { id: f.id, series, phases });
    }
    let mean = (0..metrics.len())
        .map(|j| aggregate(metrics[j].name(), &scenarios.iter().map(|s| &s.series[j]).collect::<Vec<_>>()))
        .collect();
    Ok(MetricsBundle { metrics: metrics.to_vec(), scenarios, mean })
}

impl MetricsBundle {
    /// Long-format rows `scenario_id,t,metric,value`; undefined steps are `NA`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario_id,t,metric,value\n");
        for sc in &self.scenarios {
            for ser in &sc.series {
                for (t, v) in ser.times.iter().zip(&ser.values) {
                    match v {
                        Some(v) => writeln!(s, "{},{t},{},{v:e}", sc.id, ser.name),
                        None => writeln!(s, "{},{t},{},NA", sc.id, ser.name),
                    }
                    .expect("write to string");
                }
            }
        }
        s
    }

    /// Mean, standard deviation, minimum and maximum over every defined value.
    pub fn summary(&self) -> BTreeMap<String, MetricSummary> {
        let mut out = BTreeMap::new();
        for (j, m) in self.metrics.iter().enumerate() {
            let vals: Vec<f64> = self.scenarios.iter().flat_map(|s| s.series[j].defined().map(|(_, v)| v)).collect();
            if vals.is_empty() {
                continue;
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            out.insert(
                m.name().to_string(),
                MetricSummary {
                    mean,
                    std: var.sqrt(),
                    min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                    max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                },
            );
        }
        out
    }

    /// `metrics.csv`, `summary.json` and `phases.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::blob::create_dir(dir)?;
        let p = dir.join("metrics.csv");
        std::fs::write(&p, self.to_csv()).map_err(|e| Error::io(&p, e))?;
        crate::blob::write_json(&dir.join("summary.json"), &self.summary())?;
        let phases: BTreeMap<usize, &PhaseReport> = self.scenarios.iter().filter_map(|s| Some((s.id, s.phases.as_ref()?))).collect();
        crate::blob::write_json(&dir.join("phases.json"), &phases)
    }
}
