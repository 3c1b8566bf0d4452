use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::assignment::assignment_cost;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::inference::Trace;

pub const DEFAULT_SUBSAMPLE: usize = 500;

/// A retained posterior draw of the weights and total masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub chain: usize,
    pub iter: usize,
    /// Row-major `n x p`.
    pub weights: Vec<f64>,
    pub w_star: Vec<f64>,
}

/// Post-burn-in weight snapshots of every chain, in chain then iteration
/// order, paired with the total masses recorded at the same iteration.
pub fn posterior_samples(traces: &[Trace]) -> Vec<PosteriorSample> {
    let mut out = Vec::new();
    for t in traces {
        for s in t.post_burnin_snapshots() {
            if let Some(r) = t.record_at(s.iter) {
                out.push(PosteriorSample {
                    chain: t.chain,
                    iter: s.iter,
                    weights: s.weights.clone(),
                    w_star: r.w_star.clone(),
                });
            }
        }
    }
    out
}

/// `n` indices spread evenly over `0..len` (all of them when `len <= n`).
pub fn even_subsample(len: usize, n: usize) -> Vec<usize> {
    if len <= n {
        (0..len).collect()
    } else {
        (0..n).map(|j| j * len / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub p: usize,
    pub w_hat: Vec<f64>,
    pub w_star_hat: Vec<f64>,
    pub chain: usize,
    pub iter: usize,
    /// Average loss of the estimate against the evaluated samples.
    pub risk: f64,
}

/// The sample minimizing the average permutation-invariant loss against the
/// other samples; ties go to the lower index.
pub fn point_estimate_from_samples(samples: &[PosteriorSample], p: usize) -> Result<PointEstimate> {
    if samples.is_empty() {
        return Err(Error::Domain("no posterior samples".into()));
    }
    let m = samples.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let costs: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (sa, sb) = (&samples[a], &samples[b]);
            assignment_cost(&sa.weights, &sb.weights, p, &sa.w_star, &sb.w_star).map(|c| c.0)
        })
        .collect::<Result<_>>()?;
    let mut risk = vec![0.0; m];
    for (&(a, b), c) in pairs.iter().zip(&costs) {
        risk[a] += c;
        risk[b] += c;
    }
    let mut best = 0;
    for j in 1..m {
        if risk[j] < risk[best] {
            best = j;
        }
    }
    let s = &samples[best];
    Ok(PointEstimate {
        p,
        w_hat: s.weights.clone(),
        w_star_hat: s.w_star.clone(),
        chain: s.chain,
        iter: s.iter,
        risk: risk[best] / m as f64,
    })
}

/// Bayes point estimate over an even subsample of at most `subsample`
/// retained draws.
pub fn bayes_point_estimate(traces: &[Trace], subsample: usize) -> Result<PointEstimate> {
    let p = traces.first().ok_or_else(|| Error::Domain("no traces".into()))?.p;
    let all = posterior_samples(traces);
    if all.len() < 2 {
        return Err(Error::Domain(format!(
            "{} retained samples, need at least 2",
            all.len()
        )));
    }
    let picked: Vec<PosteriorSample> = even_subsample(all.len(), subsample.max(2))
        .into_iter()
        .map(|i| all[i].clone())
        .collect();
    point_estimate_from_samples(&picked, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityOrdering {
    /// Node ids grouped by community, heaviest first within a community.
    pub order: Vec<usize>,
    /// `argmax_k w_ik` per node, ties to the lowest `k`.
    pub community: Vec<usize>,
}

pub fn community_reorder(estimate: &PointEstimate) -> CommunityOrdering {
    let p = estimate.p;
    let n = estimate.w_hat.len() / p;
    let row = |i: usize| &estimate.w_hat[i * p..(i + 1) * p];
    let community: Vec<usize> = (0..n)
        .map(|i| {
            let r = row(i);
            (1..p).fold(0, |best, k| if r[k] > r[best] { k } else { best })
        })
        .collect();
    let total: Vec<f64> = (0..n).map(|i| row(i).iter().sum()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        community[a]
            .cmp(&community[b])
            .then(total[b].total_cmp(&total[a]))
            .then(a.cmp(&b))
    });
    CommunityOrdering { order, community }
}

/// Fraction of nodes whose community matches `truth` under the best
/// relabelling of the estimated communities (exhaustive over `p!`, small `p`).
pub fn label_agreement(community: &[usize], truth: &[usize], p: usize) -> Result<f64> {
    if community.len() != truth.len() || community.is_empty() {
        return Err(Error::Shape("label vectors differ in length or are empty".into()));
    }
    let mut table = vec![0usize; p * p];
    for (&c, &t) in community.iter().zip(truth) {
        if c >= p || t >= p {
            return Err(Error::Shape(format!("label out of range for p = {p}")));
        }
        table[c * p + t] += 1;
    }
    // Maximize matches = minimize negated counts.
    let cost: Vec<f64> = table.iter().map(|&c| -(c as f64)).collect();
    let (best, _) = crate::analysis::assignment::hungarian(&cost, p)?;
    Ok(-best / community.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeSelector {
    All,
    HighestDegree(usize),
    LowestDegree(usize),
    Nodes(Vec<usize>),
}

impl NodeSelector {
    /// Node ids; degree ties keep increasing id order.
    pub fn select(&self, graph: &SparseGraph) -> Vec<usize> {
        let deg = graph.degrees();
        let mut by_degree: Vec<usize> = (0..graph.n_nodes()).collect();
        match self {
            NodeSelector::All => by_degree,
            NodeSelector::HighestDegree(k) => {
                by_degree.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
                by_degree.truncate(*k);
                by_degree
            }
            NodeSelector::LowestDegree(k) => {
                by_degree.sort_by(|&a, &b| deg[a].cmp(&deg[b]).then(a.cmp(&b)));
                by_degree.truncate(*k);
                by_degree
            }
            NodeSelector::Nodes(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInterval {
    pub node: usize,
    pub degree: usize,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Central credible intervals at `level` for the mean weights
/// `(1/p) sum_k w_ik` of the selected nodes.
pub fn credible_intervals(
    traces: &[Trace],
    graph: &SparseGraph,
    selector: &NodeSelector,
    level: f64,
) -> Result<Vec<NodeInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", "must lie in (0, 1)"));
    }
    let samples = posterior_samples(traces);
    if samples.is_empty() {
        return Err(Error::Domain("no retained weight samples".into()));
    }
    let p = traces[0].p;
    let n = samples[0].weights.len() / p;
    if n != graph.n_nodes() {
        return Err(Error::Shape(format!(
            "trace has {n} nodes, graph has {}",
            graph.n_nodes()
        )));
    }
    let deg = graph.degrees();
    let nodes = selector.select(graph);
    let mut out = Vec::with_capacity(nodes.len());
    for i in nodes {
        if i >= n {
            return Err(Error::Shape(format!("node {i} out of range")));
        }
        let mut v: Vec<f64> = samples
            .iter()
            .map(|s| s.weights[i * p..(i + 1) * p].iter().sum::<f64>() / p as f64)
            .collect();
        v.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        out.push(NodeInterval {
            node: i,
            degree: deg[i],
            lower: quantile_sorted(&v, tail),
            median: quantile_sorted(&v, 0.5),
            upper: quantile_sorted(&v, 1.0 - tail),
        });
    }
    Ok(out)
}
