use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub label: String,
    pub param_count: usize,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub label: String,
    pub param_count: usize,
    pub epochs: usize,
    pub best_val_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Best validation loss minus the training loss of the same epoch.
    pub generalization_gap: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub total_seconds: f64,
}

impl TrainReport {
    pub fn new(label: impl Into<String>, param_count: usize) -> Self {
        Self { label: label.into(), param_count, epochs: Vec::new() }
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().filter(|e| e.val_loss.is_finite()).min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.best().map(|e| e.val_loss)
    }

    pub fn val_curve(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_loss).collect()
    }

    pub fn summary(&self) -> ReportSummary {
        let best = self.best();
        ReportSummary {
            label: self.label.clone(),
            param_count: self.param_count,
            epochs: self.epochs.len(),
            best_val_loss: best.map(|e| e.val_loss),
            best_epoch: best.map(|e| e.epoch),
            generalization_gap: best.map(|e| e.val_loss - e.train_loss),
            final_train_loss: self.epochs.last().map(|e| e.train_loss),
            total_seconds: self.epochs.iter().map(|e| e.seconds).sum(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,seconds\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:e},{:e},{:.4}", e.epoch, e.train_loss, e.val_loss, e.seconds);
        }
        s
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        crate::blob::create_dir(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        crate::blob::write_json(&dir.join(format!("{stem}.json")), &self.summary())
    }
}
