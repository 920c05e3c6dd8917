use serde::{Deserialize, Serialize};

/// One scalar per time step; `None` marks steps where the metric is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<Vec<Option<f64>>>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<Option<f64>>) -> Self {
        assert_eq!(times.len(), values.len(), "metric series length mismatch");
        Self { name: name.into(), times, values, std: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().zip(&self.values).filter_map(|(t, v)| v.map(|v| (*t, v)))
    }

    pub fn max(&self) -> Option<f64> {
        self.defined().map(|(_, v)| v).reduce(f64::max)
    }

    pub fn min(&self) -> Option<f64> {
        self.defined().map(|(_, v)| v).reduce(f64::min)
    }

    /// Minimum over steps with `lo <= t <= hi`.
    pub fn min_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.defined().filter(|(t, _)| *t >= lo && *t <= hi).map(|(_, v)| v).reduce(f64::min)
    }

    pub fn max_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.defined().filter(|(t, _)| *t >= lo && *t <= hi).map(|(_, v)| v).reduce(f64::max)
    }

    pub fn mean(&self) -> Option<f64> {
        let (n, s) = self.defined().fold((0usize, 0.0), |(n, s), (_, v)| (n + 1, s + v));
        (n > 0).then(|| s / n as f64)
    }
}

/// Pointwise mean and population standard deviation over series on the same
/// grid, using only the series defined at each step.
pub fn aggregate(name: &str, series: &[&MetricSeries]) -> MetricSeries {
    let Some(first) = series.first() else {
        return MetricSeries::new(name, Vec::new(), Vec::new());
    };
    let len = first.len();
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for k in 0..len {
        let vals: Vec<f64> = series.iter().filter_map(|s| s.values.get(k).copied().flatten()).collect();
        if vals.is_empty() {
            mean.push(None);
            std.push(None);
            continue;
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
        mean.push(Some(m));
        std.push(Some(v.sqrt()));
    }
    let mut out = MetricSeries::new(name, first.times.clone(), mean);
    out.std = Some(std);
    out
}
