use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use ccrm::analysis::estimate::quantile_sorted;
use ccrm::io::atomic_write;
use ccrm::io::trace_io::fmt_f64;
use ccrm::Trace;
use serde::Serialize;

/// Rows of string cells written as one CSV file, atomically.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        atomic_write(path, &bytes)?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    fmt_f64(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

impl Summary {
    pub fn of(values: &[f64], level: f64) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        Some(Summary {
            mean,
            sd,
            lower: quantile_sorted(&s, tail),
            median: quantile_sorted(&s, 0.5),
            upper: quantile_sorted(&s, 1.0 - tail),
        })
    }
}

/// Posterior summaries of the scalar trace columns over post-burn-in
/// records of every chain.
pub fn hyper_summaries(traces: &[Trace], level: f64) -> BTreeMap<String, Summary> {
    let records: Vec<_> = traces.iter().flat_map(|t| t.post_burnin()).collect();
    let p = traces.first().map_or(0, |t| t.p);
    let mut cols: Vec<(String, Vec<f64>)> = vec![
        ("alpha".into(), records.iter().map(|r| r.alpha()).collect()),
        ("sigma".into(), records.iter().map(|r| r.sigma).collect()),
        ("tau".into(), records.iter().map(|r| r.tau).collect()),
        ("mean_w".into(), records.iter().map(|r| r.mean_w).collect()),
    ];
    for k in 0..p {
        cols.push((format!("a_{}", k + 1), records.iter().map(|r| r.a[k]).collect()));
        cols.push((format!("b_{}", k + 1), records.iter().map(|r| r.b[k]).collect()));
        cols.push((
            format!("wstar_{}", k + 1),
            records.iter().map(|r| r.w_star[k]).collect(),
        ));
    }
    cols.into_iter()
        .filter_map(|(name, v)| Summary::of(&v, level).map(|s| (name, s)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainAcceptance {
    pub chain: usize,
    pub records: usize,
    pub hmc: f64,
    pub mh: f64,
}

pub fn acceptance(traces: &[Trace]) -> Vec<ChainAcceptance> {
    traces
        .iter()
        .map(|t| {
            let r: Vec<_> = t.post_burnin().collect();
            let n = r.len().max(1) as f64;
            ChainAcceptance {
                chain: t.chain,
                records: r.len(),
                hmc: r.iter().filter(|x| x.acc_hmc).count() as f64 / n,
                mh: r.iter().filter(|x| x.acc_mh).count() as f64 / n,
            }
        })
        .collect()
}
