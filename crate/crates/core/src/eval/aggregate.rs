use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::evaluate::KMetrics;
use super::metrics::BinaryMetrics;
use crate::error::{Error, Result};
use crate::topology::{EdgeMode, TopologyKind};

/// Mean and 95% half-width of one metric across groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub ci95: f64,
}

/// Two-sided 95% Student-t quantile on `df` degrees of freedom.
pub fn t_quantile_95(df: usize) -> Result<f64> {
    let t = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::param(format!("t distribution: {e}")))?;
    Ok(t.inverse_cdf(0.975))
}

/// `(mean, t * s / sqrt(g))` with the unbiased sample deviation.
pub fn mean_ci95(values: &[f64]) -> Result<Interval> {
    let g = values.len();
    if g < 2 {
        return Err(Error::input(format!("confidence intervals need at least 2 groups, got {g}")));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok(Interval {
            mean: values[0],
            ci95: 0.0,
        });
    }
    let mean = values.iter().sum::<f64>() / g as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (g - 1) as f64;
    let ci95 = t_quantile_95(g - 1)? * var.sqrt() / (g as f64).sqrt();
    Ok(Interval { mean, ci95 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatedK {
    pub k: f64,
    /// Indexed like [`BinaryMetrics::NAMES`].
    pub metrics: [Interval; 4],
}

/// Across-group summary for one configuration; every group must report the same k values.
pub fn aggregate_groups(per_group: &[Vec<KMetrics>]) -> Result<Vec<AggregatedK>> {
    if per_group.len() < 2 {
        return Err(Error::input(format!(
            "aggregation needs at least 2 groups, got {}",
            per_group.len()
        )));
    }
    let ks: Vec<f64> = per_group[0].iter().map(|m| m.k).collect();
    for (g, group) in per_group.iter().enumerate() {
        if group.iter().map(|m| m.k).ne(ks.iter().copied()) {
            return Err(Error::input(format!("group {g} reports a different k grid")));
        }
    }
    let mut out = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut metrics = [Interval { mean: 0.0, ci95: 0.0 }; 4];
        for (j, slot) in metrics.iter_mut().enumerate() {
            let values: Vec<f64> = per_group.iter().map(|g| g[i].metrics.values()[j]).collect();
            *slot = mean_ci95(&values)?;
        }
        out.push(AggregatedK { k, metrics });
    }
    Ok(out)
}

/// Identifies one configuration of the experiment grid, across groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigKey {
    pub topology: TopologyKind,
    pub edge_mode: EdgeMode,
    pub n: usize,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub key: ConfigKey,
    pub by_k: Vec<AggregatedK>,
}

/// Across-group metrics for every configuration, in grid order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub entries: Vec<ReportEntry>,
}

impl MetricsReport {
    pub fn push(&mut self, key: ConfigKey, per_group: &[Vec<KMetrics>]) -> Result<()> {
        let by_k = aggregate_groups(per_group)?;
        self.entries.push(ReportEntry { key, by_k });
        Ok(())
    }

    pub fn get(&self, key: &ConfigKey) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.key == *key)
    }

    /// One row per (configuration, k, metric). `with_n` adds an `n` column
    /// after `edge_mode` for edge-density sweeps.
    pub fn write_csv<W: Write>(&self, w: W, with_n: bool) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["topology", "edge_mode"];
        if with_n {
            header.push("n");
        }
        header.extend(["l", "k", "metric", "mean", "ci95"]);
        wr.write_record(&header)?;
        for e in &self.entries {
            for agg in &e.by_k {
                for (name, iv) in BinaryMetrics::NAMES.iter().zip(&agg.metrics) {
                    let mut rec = vec![e.key.topology.as_str().to_string(), e.key.edge_mode.as_str().to_string()];
                    if with_n {
                        rec.push(e.key.n.to_string());
                    }
                    rec.extend([
                        e.key.l.to_string(),
                        agg.k.to_string(),
                        name.to_string(),
                        iv.mean.to_string(),
                        iv.ci95.to_string(),
                    ]);
                    wr.write_record(&rec)?;
                }
            }
        }
        wr.flush().map_err(|e| Error::io("metrics", e))?;
        Ok(())
    }
}
