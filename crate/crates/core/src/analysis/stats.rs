use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::SparseGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub degrees: Vec<usize>,
    /// degree -> number of nodes
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub std: f64,
    pub clustering: f64,
}

/// Degrees (self-loops count twice), their histogram and moments, and the
/// global clustering coefficient.
pub fn degree_summary(graph: &SparseGraph) -> DegreeSummary {
    let degrees = graph.degrees();
    let mut histogram = BTreeMap::new();
    for &d in &degrees {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let n = degrees.len() as f64;
    let (mean, std) = if degrees.is_empty() {
        (0.0, 0.0)
    } else {
        let m = degrees.iter().sum::<usize>() as f64 / n;
        let v = degrees.iter().map(|&d| (d as f64 - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    };
    DegreeSummary {
        degrees,
        histogram,
        mean,
        std,
        clustering: clustering_coefficient(graph),
    }
}

/// `3 * triangles / connected triples`, ignoring self-loops; 0 when there
/// are no triples.
pub fn clustering_coefficient(graph: &SparseGraph) -> f64 {
    let adj: Vec<Vec<usize>> = graph
        .adjacency()
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.into_iter().filter(|&j| j != i).collect())
        .collect();
    let triples: u64 = adj
        .iter()
        .map(|a| {
            let d = a.len() as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triples == 0 {
        return 0.0;
    }
    // Each triangle i < j < l is found once from its smallest vertex.
    let mut triangles = 0u64;
    for (i, a) in adj.iter().enumerate() {
        let higher: Vec<usize> = a.iter().copied().filter(|&j| j > i).collect();
        for (x, &j) in higher.iter().enumerate() {
            triangles += count_common_above(&adj[j], &higher[x + 1..]) as u64;
        }
    }
    3.0 * triangles as f64 / triples as f64
}

fn count_common_above(a: &[usize], b: &[usize]) -> usize {
    let (mut x, mut y, mut c) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                x += 1;
                y += 1;
            }
        }
    }
    c
}
