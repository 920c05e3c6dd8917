use super::MetricSeries;
use crate::data::TimeGrid;
use crate::{Error, Result, Vec3};

/// Norms below this are treated as zero by directional consistency and IoU.
pub const DIRECTION_EPS: f64 = 1e-6;

fn norm(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: {a} vs {b} vectors")));
    }
    Ok(())
}

/// Euclidean error of each node for one frame.
pub fn rmse_field(pred: &[Vec3], target: &[Vec3]) -> Result<Vec<f64>> {
    check_len(pred.len(), target.len(), "rmse field")?;
    Ok(pred.iter().zip(target).map(|(a, b)| norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])).collect())
}

/// Root of the node-mean squared error at every step of time-major fields.
pub fn rmse_curve(pred: &[Vec3], target: &[Vec3], grid: &TimeGrid) -> Result<MetricSeries> {
    check_len(pred.len(), target.len(), "rmse curve")?;
    if grid.n_steps == 0 || pred.len() % grid.n_steps != 0 {
        return Err(Error::Shape(format!("{} vectors do not divide into {} steps", pred.len(), grid.n_steps)));
    }
    let n = pred.len() / grid.n_steps;
    let values = (0..grid.n_steps)
        .map(|k| {
            let e = rmse_field(&pred[k * n..(k + 1) * n], &target[k * n..(k + 1) * n]).expect("equal lengths");
            Some((e.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt())
        })
        .collect();
    Ok(MetricSeries::new("rmse", grid.times(), values))
}

/// Mean cosine between each node's rigid displacement (rigid position minus
/// initial position) and its deformation, over nodes where both exceed
/// [`DIRECTION_EPS`]. `None` when every node is excluded.
pub fn directional_consistency(x_init: &[Vec3], rigid: &[Vec3], deformation: &[Vec3]) -> Result<Option<f64>> {
    check_len(x_init.len(), rigid.len(), "directional consistency")?;
    check_len(x_init.len(), deformation.len(), "directional consistency")?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((x, p), d) in x_init.iter().zip(rigid).zip(deformation) {
        let r = [p[0] - x[0], p[1] - x[1], p[2] - x[2]];
        let (nr, nd) = (norm(&r), norm(d));
        if nr < DIRECTION_EPS || nd < DIRECTION_EPS {
            continue;
        }
        let c = (r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / (nr * nd);
        sum += c.clamp(-1.0, 1.0);
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

pub fn directional_consistency_curve(x_init: &[Vec3], rigid: &[Vec3], deformation: &[Vec3], grid: &TimeGrid) -> Result<MetricSeries> {
    let n = x_init.len();
    check_len(rigid.len(), n * grid.n_steps, "rigid field")?;
    check_len(deformation.len(), n * grid.n_steps, "deformation field")?;
    let values = (0..grid.n_steps)
        .map(|k| directional_consistency(x_init, &rigid[k * n..(k + 1) * n], &deformation[k * n..(k + 1) * n]))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricSeries::new("directional_consistency", grid.times(), values))
}

/// Indices of the `ceil(fraction * N)` largest-norm vectors, ties broken by
/// ascending index, sorted.
pub fn top_set(field: &[Vec3], fraction: f64) -> Vec<usize> {
    let k = ((fraction * field.len() as f64).ceil() as usize).min(field.len());
    let norms: Vec<f64> = field.iter().map(norm).collect();
    let mut idx: Vec<usize> = (0..field.len()).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

pub const TOP_FRACTION: f64 = 0.15;

/// Intersection over union of the top-`fraction` deformation regions.
pub fn deformation_iou(pred: &[Vec3], truth: &[Vec3], fraction: f64) -> Result<f64> {
    check_len(pred.len(), truth.len(), "deformation iou")?;
    let a = top_set(pred, fraction);
    let b = top_set(truth, fraction);
    if a.is_empty() && b.is_empty() {
        return Ok(1.0);
    }
    let inter = a.iter().filter(|i| b.binary_search(i).is_ok()).count();
    Ok(inter as f64 / (a.len() + b.len() - inter) as f64)
}

/// IoU at every step; steps whose true field is below [`DIRECTION_EPS`]
/// everywhere have no crush region and are marked missing.
pub fn deformation_iou_curve(pred: &[Vec3], truth: &[Vec3], n_nodes: usize, grid: &TimeGrid, fraction: f64) -> Result<MetricSeries> {
    check_len(pred.len(), n_nodes * grid.n_steps, "predicted deformation")?;
    check_len(truth.len(), n_nodes * grid.n_steps, "true deformation")?;
    let values = (0..grid.n_steps)
        .map(|k| {
            let t = &truth[k * n_nodes..(k + 1) * n_nodes];
            if t.iter().all(|d| norm(d) < DIRECTION_EPS) {
                return Ok(None);
            }
            deformation_iou(&pred[k * n_nodes..(k + 1) * n_nodes], t, fraction).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricSeries::new("iou", grid.times(), values))
}

/// `(1/N) sum |D_i(t)|^2` per step.
pub fn magnitude(field: &[Vec3], n_nodes: usize) -> Result<Vec<f64>> {
    if n_nodes == 0 || field.len() % n_nodes != 0 {
        return Err(Error::Shape(format!("{} vectors do not divide into {n_nodes} nodes", field.len())));
    }
    Ok(field.chunks(n_nodes).map(|f| f.iter().map(|d| d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sum::<f64>() / n_nodes as f64).collect())
}

/// Node-averaged squared deformation divided by `peak`, or by its own
/// maximum when `peak` is `None`.
pub fn normalized_magnitude(field: &[Vec3], n_nodes: usize, peak: Option<f64>) -> Result<Vec<f64>> {
    let m = magnitude(field, n_nodes)?;
    let p = peak.unwrap_or_else(|| m.iter().copied().fold(0.0, f64::max));
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Degenerate(format!("cannot normalize deformation magnitude by peak {p}")));
    }
    Ok(m.into_iter().map(|v| v / p).collect())
}
