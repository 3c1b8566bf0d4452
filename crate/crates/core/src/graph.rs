//! Graphs generated from CCRM atoms through the hierarchical Poisson
//! construction: directed multigraph counts collapsed to a simple graph.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::CcrmParams;
use crate::sim::{sample_ccrm_atoms, sample_poisson, NodeAtoms};

/// Undirected simple graph on nodes `0..n_nodes`. Edges are stored once as
/// `(i, j)` with `i <= j`, sorted; self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<String>>,
}

impl SparseGraph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
            .collect();
        if let Some(&(i, j)) = e.iter().find(|&&(_, j)| j >= n_nodes) {
            return Err(Error::Shape(format!(
                "edge ({i}, {j}) out of range for {n_nodes} nodes"
            )));
        }
        e.sort_unstable();
        e.dedup();
        Ok(SparseGraph {
            n_nodes,
            edges: e,
            labels: None,
        })
    }

    pub fn empty(n_nodes: usize) -> Self {
        SparseGraph {
            n_nodes,
            edges: Vec::new(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_nodes {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let e = if i <= j { (i, j) } else { (j, i) };
        self.edges.binary_search(&e).is_ok()
    }

    pub fn n_self_loops(&self) -> usize {
        self.edges.iter().filter(|(i, j)| i == j).count()
    }

    /// Degrees with self-loops counted twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_nodes];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    /// Sorted neighbor lists; a self-loop lists the node once among its own neighbors.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            if i != j {
                adj[j].push(i);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }

    /// Number of nodes with at least one edge.
    pub fn n_connected(&self) -> usize {
        self.degrees().iter().filter(|&&d| d > 0).count()
    }

    /// The subgraph induced by nodes with at least one edge, relabelled
    /// densely in increasing original id, and the original ids.
    pub fn connected_subgraph(&self) -> (SparseGraph, Vec<usize>) {
        let deg = self.degrees();
        let keep: Vec<usize> = (0..self.n_nodes).filter(|&i| deg[i] > 0).collect();
        let mut new_id = vec![usize::MAX; self.n_nodes];
        for (n, &i) in keep.iter().enumerate() {
            new_id[i] = n;
        }
        let edges = self.edges.iter().map(|&(i, j)| (new_id[i], new_id[j])).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| keep.iter().map(|&i| l[i].clone()).collect());
        let g = SparseGraph {
            n_nodes: keep.len(),
            edges,
            labels,
        };
        (g, keep)
    }
}

/// Directed multigraph counts `n_ijk >= 1`, keyed by ordered pair and
/// community, sorted by key.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MultiCounts {
    p: usize,
    counts: Vec<((usize, usize, usize), u64)>,
}

impl MultiCounts {
    pub fn new(p: usize, entries: impl IntoIterator<Item = ((usize, usize, usize), u64)>) -> Result<Self> {
        let mut map: HashMap<(usize, usize, usize), u64> = HashMap::new();
        for (key, n) in entries {
            if key.2 >= p {
                return Err(Error::Shape(format!("community {} >= p = {p}", key.2)));
            }
            if n > 0 {
                *map.entry(key).or_default() += n;
            }
        }
        let mut counts: Vec<_> = map.into_iter().collect();
        counts.sort_unstable();
        Ok(MultiCounts { p, counts })
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn entries(&self) -> &[((usize, usize, usize), u64)] {
        &self.counts
    }
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u64 {
        self.counts
            .binary_search_by(|(key, _)| key.cmp(&(i, j, k)))
            .map(|ix| self.counts[ix].1)
            .unwrap_or(0)
    }

    /// `D*_k`, the total count per community.
    pub fn community_totals(&self) -> Vec<u64> {
        let mut t = vec![0; self.p];
        for &((_, _, k), n) in &self.counts {
            t[k] += n;
        }
        t
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|(_, n)| n).sum()
    }
}

/// `P(z_ij = 1)` given weight vectors: `1 - exp(-2 w_i . w_j)` off the
/// diagonal and `1 - exp(-w_i . w_i)` for a self-loop.
pub fn link_probability(wi: &[f64], wj: &[f64], self_loop: bool) -> f64 {
    let dot: f64 = wi.iter().zip(wj).map(|(a, b)| a * b).sum();
    let rate = if self_loop { dot } else { 2.0 * dot };
    -(-rate).exp_m1()
}

/// Directed multigraph: per community `D*_k ~ Poisson((sum_i w_ik)^2)` with
/// both endpoints drawn independently proportional to `w_ik`.
pub fn generate_multigraph<R: Rng + ?Sized>(atoms: &NodeAtoms, rng: &mut R) -> Result<MultiCounts> {
    let p = atoms.p();
    let n = atoms.len();
    let mut map: HashMap<(usize, usize, usize), u64> = HashMap::new();
    for k in 0..p {
        let w: Vec<f64> = (0..n).map(|i| atoms.weight(i, k)).collect();
        let total: f64 = w.iter().sum();
        let d = sample_poisson(rng, total * total)?;
        if d == 0 {
            continue;
        }
        let pick = WeightedIndex::new(&w).map_err(|e| Error::Domain(format!("endpoint weights: {e}")))?;
        for _ in 0..d {
            let i = pick.sample(rng);
            let j = pick.sample(rng);
            *map.entry((i, j, k)).or_default() += 1;
        }
    }
    let mut counts: Vec<_> = map.into_iter().collect();
    counts.sort_unstable();
    Ok(MultiCounts { p, counts })
}

/// `z_ij = min(1, sum_k n_ijk + n_jik)`.
pub fn collapse_to_simple(counts: &MultiCounts, n_nodes: usize) -> Result<SparseGraph> {
    SparseGraph::new(n_nodes, counts.entries().iter().map(|&((i, j, _), _)| (i, j)))
}

/// Draw a simple graph directly from the link probabilities. `O(n^2)`; meant
/// for small node sets.
pub fn sample_graph_from_weights<R: Rng + ?Sized>(p: usize, weights: &[f64], rng: &mut R) -> Result<SparseGraph> {
    if p == 0 || weights.len() % p != 0 {
        return Err(Error::Shape("weights length is not a multiple of p".into()));
    }
    let n = weights.len() / p;
    let mut edges = Vec::new();
    for i in 0..n {
        let wi = &weights[i * p..(i + 1) * p];
        for j in i..n {
            let wj = &weights[j * p..(j + 1) * p];
            if rng.random::<f64>() < link_probability(wi, wj, i == j) {
                edges.push((i, j));
            }
        }
    }
    SparseGraph::new(n, edges)
}

/// Output of [`generate_graph`]. `graph` has one node per atom; isolated atoms
/// are kept so `graph.n_connected()` gives the observed node count.
#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: SparseGraph,
    pub atoms: NodeAtoms,
    pub counts: MultiCounts,
}

impl GeneratedGraph {
    pub fn n_connected(&self) -> usize {
        self.graph.n_connected()
    }
}

/// Atoms, multigraph and simple graph from a seed.
pub fn generate_graph(params: &CcrmParams, alpha: f64, epsilon: f64, seed: u64) -> Result<GeneratedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_graph_with(params, alpha, epsilon, &mut rng)
}

pub fn generate_graph_with<R: Rng + ?Sized>(
    params: &CcrmParams,
    alpha: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<GeneratedGraph> {
    let atoms = sample_ccrm_atoms(params, alpha, epsilon, &vec![0.0; params.p()], rng)?;
    let counts = generate_multigraph(&atoms, rng)?;
    let graph = collapse_to_simple(&counts, atoms.len())?;
    Ok(GeneratedGraph { graph, atoms, counts })
}

/// Bipartite graph between row nodes `0..n_rows` and column nodes `0..n_cols`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    n_rows: usize,
    n_cols: usize,
    edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(n_rows: usize, n_cols: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e: Vec<(usize, usize)> = edges.into_iter().collect();
        if let Some(&(i, j)) = e.iter().find(|&&(i, j)| i >= n_rows || j >= n_cols) {
            return Err(Error::Shape(format!(
                "edge ({i}, {j}) out of range for {n_rows} x {n_cols}"
            )));
        }
        e.sort_unstable();
        e.dedup();
        Ok(BipartiteGraph {
            n_rows,
            n_cols,
            edges: e,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_rows];
        self.edges.iter().for_each(|&(i, _)| d[i] += 1);
        d
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_cols];
        self.edges.iter().for_each(|&(_, j)| d[j] += 1);
        d
    }

    /// Drop rows and columns without edges; returns the kept original ids.
    pub fn connected_subgraph(&self) -> (BipartiteGraph, Vec<usize>, Vec<usize>) {
        let (rd, cd) = (self.row_degrees(), self.col_degrees());
        let rows: Vec<usize> = (0..self.n_rows).filter(|&i| rd[i] > 0).collect();
        let cols: Vec<usize> = (0..self.n_cols).filter(|&j| cd[j] > 0).collect();
        let mut rid = vec![0; self.n_rows];
        let mut cid = vec![0; self.n_cols];
        rows.iter().enumerate().for_each(|(n, &i)| rid[i] = n);
        cols.iter().enumerate().for_each(|(n, &j)| cid[j] = n);
        let g = BipartiteGraph {
            n_rows: rows.len(),
            n_cols: cols.len(),
            edges: self.edges.iter().map(|&(i, j)| (rid[i], cid[j])).collect(),
        };
        (g, rows, cols)
    }
}

/// Bipartite edges from two atom sets: `D_k ~ Poisson(W_k W'_k)`, endpoints
/// drawn proportional to `w_ik` and `w'_jk`.
pub fn bipartite_from_atoms<R: Rng + ?Sized>(
    rows: &NodeAtoms,
    cols: &NodeAtoms,
    rng: &mut R,
) -> Result<BipartiteGraph> {
    if rows.p() != cols.p() {
        return Err(Error::Shape(format!(
            "row side has p = {}, column side p = {}",
            rows.p(),
            cols.p()
        )));
    }
    let mut edges = Vec::new();
    for k in 0..rows.p() {
        let w: Vec<f64> = (0..rows.len()).map(|i| rows.weight(i, k)).collect();
        let v: Vec<f64> = (0..cols.len()).map(|j| cols.weight(j, k)).collect();
        let d = sample_poisson(rng, w.iter().sum::<f64>() * v.iter().sum::<f64>())?;
        if d == 0 {
            continue;
        }
        let pi = WeightedIndex::new(&w).map_err(|e| Error::Domain(format!("row weights: {e}")))?;
        let pj = WeightedIndex::new(&v).map_err(|e| Error::Domain(format!("column weights: {e}")))?;
        for _ in 0..d {
            edges.push((pi.sample(rng), pj.sample(rng)));
        }
    }
    BipartiteGraph::new(rows.len(), cols.len(), edges)
}

/// Bipartite graph with rows from `(params_a, alpha)` and columns from
/// `(params_b, alpha_prime)`.
pub fn generate_bipartite(
    params_a: &CcrmParams,
    params_b: &CcrmParams,
    alpha: f64,
    alpha_prime: f64,
    epsilon: f64,
    seed: u64,
) -> Result<(BipartiteGraph, NodeAtoms, NodeAtoms)> {
    if params_a.p() != params_b.p() {
        return Err(Error::invalid("p", "both sides need the same number of communities"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = vec![0.0; params_a.p()];
    let rows = sample_ccrm_atoms(params_a, alpha, epsilon, &zero, &mut rng)?;
    let cols = sample_ccrm_atoms(params_b, alpha_prime, epsilon, &zero, &mut rng)?;
    let g = bipartite_from_atoms(&rows, &cols, &mut rng)?;
    Ok((g, rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_probability_values() {
        assert_eq!(link_probability(&[0.0, 0.0], &[1.0, 2.0], false), 0.0);
        let v = link_probability(&[1.0], &[1.0], false);
        assert!((v - 0.864_664_716_763_387_3).abs() < 1e-15);
        let s = link_probability(&[1.0, 0.0], &[1.0, 0.0], true);
        assert!((s - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn collapse_examples() {
        let empty = MultiCounts::new(1, []).unwrap();
        assert_eq!(collapse_to_simple(&empty, 3).unwrap().n_edges(), 0);
        let c = MultiCounts::new(1, [((1, 2, 0), 3)]).unwrap();
        let g = collapse_to_simple(&c, 3).unwrap();
        assert_eq!(g.edges(), &[(1, 2)]);
        let c = MultiCounts::new(2, [((1, 2, 0), 1), ((2, 1, 1), 2)]).unwrap();
        let g = collapse_to_simple(&c, 3).unwrap();
        assert_eq!(g.edges(), &[(1, 2)]);
        assert_eq!(collapse_to_simple(&c, 3).unwrap(), g);
        assert!(collapse_to_simple(&c, 2).is_err());
    }

    #[test]
    fn graph_basics() {
        let g = SparseGraph::new(5, [(1, 0), (0, 1), (2, 2), (3, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 3), (2, 2)]);
        assert_eq!(g.degrees(), vec![1, 2, 2, 1, 0]);
        assert_eq!(g.n_connected(), 4);
        let (sub, keep) = g.connected_subgraph();
        assert_eq!(keep, vec![0, 1, 2, 3]);
        assert_eq!(sub.n_nodes(), 4);
        assert!(sub.has_edge(3, 1));
        assert!(SparseGraph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn empty_atoms_give_empty_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = generate_multigraph(&NodeAtoms::empty(2), &mut rng).unwrap();
        assert!(c.is_empty());
        let g = generate_graph(&CcrmParams::symmetric(2, 0.2, 1.0, 0.2, 0.5).unwrap(), 0.0, 1e-3, 1).unwrap();
        assert_eq!(g.graph.n_nodes(), 0);
        assert!(g.counts.is_empty());
    }

    #[test]
    fn multigraph_total_mean() {
        let atoms = NodeAtoms::from_weights(1, vec![0.3, 0.5, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| generate_multigraph(&atoms, &mut rng).unwrap().total() as f64)
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let want = 1.7f64 * 1.7;
        assert!((m - want).abs() < 3.0 * (v / n as f64).sqrt(), "{m}");
    }

    #[test]
    fn edge_frequency_matches_link_probability() {
        let w = vec![0.3, 0.1, 0.7, 0.4, 0.2, 0.9];
        let atoms = NodeAtoms::from_weights(2, w.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let runs = 10_000;
        let mut hits = [[0usize; 3]; 3];
        for _ in 0..runs {
            let c = generate_multigraph(&atoms, &mut rng).unwrap();
            let g = collapse_to_simple(&c, 3).unwrap();
            for &(i, j) in g.edges() {
                hits[i][j] += 1;
            }
        }
        for i in 0..3 {
            for j in i..3 {
                let pr = link_probability(&w[2 * i..2 * i + 2], &w[2 * j..2 * j + 2], i == j);
                let f = hits[i][j] as f64 / runs as f64;
                let se = (pr * (1.0 - pr) / runs as f64).sqrt();
                assert!((f - pr).abs() < 3.0 * se, "({i},{j}) {f} vs {pr}");
            }
        }
    }

    #[test]
    fn bipartite_single_atoms() {
        let a = NodeAtoms::from_weights(1, vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let runs = 10_000;
        let hits = (0..runs)
            .filter(|_| bipartite_from_atoms(&a, &a, &mut rng).unwrap().n_edges() == 1)
            .count();
        let pr = 1.0 - (-1.0f64).exp();
        let f = hits as f64 / runs as f64;
        assert!((f - pr).abs() < 3.0 * (pr * (1.0 - pr) / runs as f64).sqrt());
        let empty = NodeAtoms::empty(1);
        assert_eq!(bipartite_from_atoms(&empty, &a, &mut rng).unwrap().n_edges(), 0);
    }

    #[test]
    fn generation_is_deterministic() {
        let c = CcrmParams::symmetric(2, 0.2, 1.0, 0.2, 0.5).unwrap();
        let a = generate_graph(&c, 20.0, 1e-3, 9).unwrap();
        let b = generate_graph(&c, 20.0, 1e-3, 9).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.counts, b.counts);
        assert!(a.n_connected() <= a.atoms.len());
    }
}
