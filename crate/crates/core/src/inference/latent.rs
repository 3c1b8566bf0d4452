//! Zero-truncated Poisson augmentation of the observed edges.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, SparseGraph};

/// One draw from a Poisson(`lambda`) conditioned on being positive.
pub fn sample_truncated_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    debug_assert!(lambda > 0.0);
    if lambda >= 1.0 {
        let d = Poisson::new(lambda).expect("positive finite mean");
        loop {
            let x: f64 = d.sample(rng);
            if x > 0.0 {
                return x as u64;
            }
        }
    }
    // inversion from k = 1
    let u: f64 = rng.random();
    let mut k = 1u64;
    let mut pk = lambda / lambda.exp_m1();
    let mut cdf = pk;
    while u > cdf && pk > 0.0 {
        k += 1;
        pk *= lambda / k as f64;
        cdf += pk;
    }
    k
}

/// A vector of independent Poisson counts with the given rates, conditioned
/// on a positive total: the total is zero-truncated Poisson and is split
/// multinomially in proportion to the rates.
pub fn sample_truncated_multipoisson<R: Rng + ?Sized>(rates: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut out = vec![0; rates.len()];
    fill_truncated_multipoisson(rates, &mut out, rng)?;
    Ok(out)
}

fn fill_truncated_multipoisson<R: Rng + ?Sized>(rates: &[f64], out: &mut [u64], rng: &mut R) -> Result<()> {
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Domain(format!("invalid Poisson rates {rates:?}")));
    }
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("all rates are zero on an observed edge".into()));
    }
    let mut n = sample_truncated_poisson(total, rng);
    let mut rest = total;
    let last = rates.len() - 1;
    for (k, &r) in rates.iter().enumerate() {
        if k == last || n == 0 {
            out[k] = if k == last { n } else { 0 };
            n -= out[k];
            continue;
        }
        let prob = if rest > 0.0 { (r / rest).min(1.0) } else { 1.0 };
        let x = Binomial::new(n, prob).expect("valid binomial").sample(rng);
        out[k] = x;
        n -= x;
        rest -= r;
    }
    Ok(())
}

/// Latent counts on the observed edges of a graph.
///
/// For `i < j` the stored value is `n_ijk + n_jik`; for a self-loop it is
/// `2 n_iik`, always even. `m_ik` sums the stored values over the edges at
/// node `i`, counting a self-loop once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentCounts {
    p: usize,
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    counts: Vec<u64>,
    m: Vec<u64>,
    m_row: Vec<u64>,
    #[serde(default)]
    bipartite: bool,
}

impl LatentCounts {
    /// All-zero counts on the edges of `graph`.
    pub fn zeros(graph: &SparseGraph, p: usize) -> Self {
        LatentCounts {
            p,
            n_nodes: graph.n_nodes(),
            edges: graph.edges().to_vec(),
            counts: vec![0; graph.n_edges() * p],
            m: vec![0; graph.n_nodes() * p],
            m_row: vec![0; graph.n_nodes()],
            bipartite: false,
        }
    }

    /// Counts on bipartite edges; `m` holds row statistics, see
    /// [`LatentCounts::col_stats`] for columns.
    pub fn zeros_bipartite(graph: &BipartiteGraph, p: usize) -> Self {
        LatentCounts {
            p,
            n_nodes: graph.n_rows(),
            edges: graph.edges().to_vec(),
            counts: vec![0; graph.n_edges() * p],
            m: vec![0; graph.n_rows() * p],
            m_row: vec![0; graph.n_rows()],
            bipartite: true,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn edge_counts(&self, e: usize) -> &[u64] {
        &self.counts[e * self.p..(e + 1) * self.p]
    }
    #[inline]
    pub fn m(&self, i: usize, k: usize) -> u64 {
        self.m[i * self.p + k]
    }
    #[inline]
    pub fn m_row(&self, i: usize) -> u64 {
        self.m_row[i]
    }

    /// Overwrite the counts of edge `e` and refresh the node statistics.
    pub fn set_edge_counts(&mut self, e: usize, values: &[u64]) -> Result<()> {
        if values.len() != self.p {
            return Err(Error::Shape(format!("{} counts for p = {}", values.len(), self.p)));
        }
        let (i, j) = self.edges[e];
        if i == j && !self.bipartite && values.iter().any(|v| v % 2 == 1) {
            return Err(Error::State(format!("self-loop counts at node {i} must be even")));
        }
        self.counts[e * self.p..(e + 1) * self.p].copy_from_slice(values);
        self.recompute_stats();
        Ok(())
    }

    fn recompute_stats(&mut self) {
        let p = self.p;
        self.m.iter_mut().for_each(|x| *x = 0);
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            for k in 0..p {
                let c = self.counts[e * p + k];
                self.m[i * p + k] += c;
                if i != j && !self.bipartite {
                    self.m[j * p + k] += c;
                }
            }
        }
        for i in 0..self.n_nodes {
            self.m_row[i] = self.m[i * p..(i + 1) * p].iter().sum();
        }
    }

    /// Column statistics `m'_jk` for bipartite counts (rows in `m`).
    pub fn col_stats(&self, n_cols: usize) -> Vec<u64> {
        let p = self.p;
        let mut m = vec![0; n_cols * p];
        for (e, &(_, j)) in self.edges.iter().enumerate() {
            for k in 0..p {
                m[j * p + k] += self.counts[e * p + k];
            }
        }
        m
    }

    /// Bipartite counts seen from the column side: edges `(j, i)`, same
    /// counts, statistics over the `n_cols` columns.
    pub fn transposed(&self, n_cols: usize) -> LatentCounts {
        let mut t = LatentCounts {
            p: self.p,
            n_nodes: n_cols,
            edges: self.edges.iter().map(|&(i, j)| (j, i)).collect(),
            counts: self.counts.clone(),
            m: vec![0; n_cols * self.p],
            m_row: vec![0; n_cols],
            bipartite: true,
        };
        t.recompute_stats();
        t
    }

    /// Redraw every edge's counts from its zero-truncated conditional given
    /// row-major weights `w` (`n_nodes x p`).
    pub fn resample<R: Rng + ?Sized>(&mut self, w: &[f64], rng: &mut R) -> Result<()> {
        let p = self.p;
        if w.len() != self.n_nodes * p {
            return Err(Error::Shape("weights do not match the latent count table".into()));
        }
        let mut rates = vec![0.0; p];
        let mut buf = vec![0; p];
        for e in 0..self.edges.len() {
            let (i, j) = self.edges[e];
            for k in 0..p {
                let prod = w[i * p + k] * w[j * p + k];
                rates[k] = if i == j { prod } else { 2.0 * prod };
            }
            fill_truncated_multipoisson(&rates, &mut buf, rng)
                .map_err(|err| Error::State(format!("edge ({i}, {j}): {err}")))?;
            let dst = &mut self.counts[e * p..(e + 1) * p];
            for k in 0..p {
                dst[k] = if i == j { 2 * buf[k] } else { buf[k] };
            }
        }
        self.recompute_stats();
        Ok(())
    }

    /// Bipartite version: rates `w_ik w'_jk`, no doubling.
    pub fn resample_bipartite<R: Rng + ?Sized>(&mut self, w: &[f64], w_cols: &[f64], rng: &mut R) -> Result<()> {
        let p = self.p;
        let mut rates = vec![0.0; p];
        let mut buf = vec![0; p];
        for e in 0..self.edges.len() {
            let (i, j) = self.edges[e];
            for k in 0..p {
                rates[k] = w[i * p + k] * w_cols[j * p + k];
            }
            fill_truncated_multipoisson(&rates, &mut buf, rng)
                .map_err(|err| Error::State(format!("edge ({i}, {j}): {err}")))?;
            self.counts[e * p..(e + 1) * p].copy_from_slice(&buf);
        }
        self.recompute_stats();
        Ok(())
    }
}

/// Fresh latent counts for `graph` given weights `w` (`n_nodes x p`).
pub fn resample_latent_counts<R: Rng + ?Sized>(
    graph: &SparseGraph,
    w: &[f64],
    p: usize,
    rng: &mut R,
) -> Result<LatentCounts> {
    let mut l = LatentCounts::zeros(graph, p);
    l.resample(w, rng)?;
    Ok(l)
}
