use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::estimate::{even_subsample, quantile_sorted};
use crate::analysis::scan::{scan_epsilon, SCAN_EPSILON_SCALE};
use crate::analysis::stats::{clustering_coefficient, degree_summary};
use crate::error::{Error, Result};
use crate::graph::{generate_graph_with, SparseGraph};
use crate::inference::{Trace, TraceRecord};
use crate::params::{CcrmParams, GgpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictiveStat {
    DegreeHistogram,
    DegreeStd,
    Clustering,
}

pub const ALL_STATS: [PredictiveStat; 3] = [
    PredictiveStat::DegreeHistogram,
    PredictiveStat::DegreeStd,
    PredictiveStat::Clustering,
];

/// Bin `j` holds degrees in `[2^j, 2^{j+1})`.
pub fn log2_bin(degree: usize) -> usize {
    debug_assert!(degree > 0);
    (usize::BITS - 1 - degree.leading_zeros()) as usize
}

/// Fraction of nodes with at least one edge falling in each log2 degree bin.
pub fn degree_distribution(graph: &SparseGraph) -> Vec<f64> {
    let deg: Vec<usize> = graph.degrees().into_iter().filter(|&d| d > 0).collect();
    if deg.is_empty() {
        return Vec::new();
    }
    let mut h = vec![0.0; log2_bin(*deg.iter().max().unwrap()) + 1];
    for d in &deg {
        h[log2_bin(*d)] += 1.0;
    }
    let n = deg.len() as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// Statistics of one graph, restricted to its nodes with at least one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub degree_distribution: Option<Vec<f64>>,
    pub degree_std: Option<f64>,
    pub clustering: Option<f64>,
}

pub fn graph_stats(graph: &SparseGraph, stats: &[PredictiveStat]) -> GraphStats {
    let (g, _) = graph.connected_subgraph();
    let has = |s| stats.contains(&s);
    GraphStats {
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        degree_distribution: has(PredictiveStat::DegreeHistogram).then(|| degree_distribution(&g)),
        degree_std: has(PredictiveStat::DegreeStd).then(|| degree_summary(&g).std),
        clustering: has(PredictiveStat::Clustering).then(|| clustering_coefficient(&g)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

impl Band {
    pub fn from_values(values: &[f64], level: f64) -> Option<Band> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        Some(Band {
            lower: quantile_sorted(&v, tail),
            median: quantile_sorted(&v, 0.5),
            upper: quantile_sorted(&v, 1.0 - tail),
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveResult {
    pub samples: Vec<GraphStats>,
    /// Per log2 degree bin, over samples (missing bins count as 0).
    pub degree_bands: Vec<Band>,
    pub degree_std_band: Option<Band>,
    pub clustering_band: Option<Band>,
}

impl PredictiveResult {
    /// Fraction of degree bins where the observed distribution lies in the
    /// band, over bins where either the observation or the band's upper end
    /// is positive.
    pub fn degree_coverage(&self, observed: &[f64]) -> f64 {
        let n_bins = self.degree_bands.len().max(observed.len());
        let (mut inside, mut total) = (0usize, 0usize);
        for j in 0..n_bins {
            let obs = observed.get(j).copied().unwrap_or(0.0);
            let band = self.degree_bands.get(j).copied().unwrap_or(Band {
                lower: 0.0,
                median: 0.0,
                upper: 0.0,
            });
            if obs > 0.0 || band.upper > 0.0 {
                total += 1;
                inside += band.contains(obs) as usize;
            }
        }
        if total == 0 {
            1.0
        } else {
            inside as f64 / total as f64
        }
    }
}

/// Parameters of a trace record under `template`'s `p`, tilts and score
/// convention.
pub fn record_params(template: &CcrmParams, r: &TraceRecord) -> Result<CcrmParams> {
    let base = GgpParams::new(r.sigma, r.tau)?;
    let c = template.with_base(base);
    if c.degenerate_scores() {
        Ok(c)
    } else {
        c.with_scores(r.a.clone(), r.b.clone())
    }
}

/// Regenerate a graph with fresh nodes from each of up to `n_samples`
/// post-burn-in draws of `(alpha, phi)` and summarize the selected
/// statistics with central `level` bands.
pub fn posterior_predictive<R: Rng + ?Sized>(
    traces: &[Trace],
    template: &CcrmParams,
    n_samples: usize,
    stats: &[PredictiveStat],
    level: f64,
    rng: &mut R,
) -> Result<PredictiveResult> {
    let records: Vec<&TraceRecord> = traces.iter().flat_map(|t| t.post_burnin()).collect();
    if records.is_empty() {
        return Err(Error::Domain("no post-burn-in records".into()));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be >= 1"));
    }
    let picked: Vec<(&TraceRecord, u64)> = even_subsample(records.len(), n_samples)
        .into_iter()
        .map(|i| (records[i], rng.random::<u64>()))
        .collect();
    let samples: Vec<GraphStats> = picked
        .par_iter()
        .map(|&(r, seed)| {
            let params = record_params(template, r)?;
            let alpha = r.alpha();
            let eps = scan_epsilon(&params, alpha, SCAN_EPSILON_SCALE);
            let mut g_rng = ChaCha8Rng::seed_from_u64(seed);
            let g = generate_graph_with(&params, alpha, eps, &mut g_rng)?;
            Ok(graph_stats(&g.graph, stats))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(samples, level))
}

pub fn summarize(samples: Vec<GraphStats>, level: f64) -> PredictiveResult {
    let n_bins = samples
        .iter()
        .filter_map(|s| s.degree_distribution.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0);
    let degree_bands = (0..n_bins)
        .filter_map(|j| {
            let v: Vec<f64> = samples
                .iter()
                .filter_map(|s| s.degree_distribution.as_ref().map(|d| d.get(j).copied().unwrap_or(0.0)))
                .collect();
            Band::from_values(&v, level)
        })
        .collect();
    let std: Vec<f64> = samples.iter().filter_map(|s| s.degree_std).collect();
    let cl: Vec<f64> = samples.iter().filter_map(|s| s.clustering).collect();
    PredictiveResult {
        degree_std_band: Band::from_values(&std, level),
        clustering_band: Band::from_values(&cl, level),
        degree_bands,
        samples,
    }
}
