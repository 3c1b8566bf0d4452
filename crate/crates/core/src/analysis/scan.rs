use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::generate_graph;
use crate::params::CcrmParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub alpha: f64,
    /// Nodes with at least one edge, averaged over repetitions.
    pub n_nodes: f64,
    pub n_edges: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} x values, {} y values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Domain("need at least two points to fit a line".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Truncation used by [`sparsity_scan`] at a given `alpha`: exact sampling
/// for finite activity, otherwise `scale / alpha` so the expected number of
/// dropped nodes stays small as the graphs grow.
pub fn scan_epsilon(params: &CcrmParams, alpha: f64, scale: f64) -> f64 {
    if params.sigma() < 0.0 {
        0.0
    } else {
        scale / alpha
    }
}

pub const SCAN_EPSILON_SCALE: f64 = 1e-4;

/// Generate `reps` graphs at each `alpha`, average node and edge counts, and
/// fit the log-log slope of edges against nodes. Repetition `r` at grid
/// point `g` uses seed `seed + 1000 g + r`.
pub fn sparsity_scan(params: &CcrmParams, alpha_grid: &[f64], reps: usize, seed: u64) -> Result<ScalingRun> {
    sparsity_scan_with(params, alpha_grid, reps, seed, SCAN_EPSILON_SCALE)
}

pub fn sparsity_scan_with(
    params: &CcrmParams,
    alpha_grid: &[f64],
    reps: usize,
    seed: u64,
    epsilon_scale: f64,
) -> Result<ScalingRun> {
    if alpha_grid.len() < 4 {
        return Err(Error::invalid("alpha_grid", "needs at least 4 values"));
    }
    if reps == 0 {
        return Err(Error::invalid("reps", "must be >= 1"));
    }
    if alpha_grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::invalid("alpha_grid", "values must be > 0"));
    }
    if !(epsilon_scale > 0.0) {
        return Err(Error::invalid("epsilon_scale", "must be > 0"));
    }
    let jobs: Vec<(usize, usize)> = (0..alpha_grid.len())
        .flat_map(|g| (0..reps).map(move |r| (g, r)))
        .collect();
    let counts: Vec<(usize, usize)> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let alpha = alpha_grid[g];
            let eps = scan_epsilon(params, alpha, epsilon_scale);
            let out = generate_graph(params, alpha, eps, seed.wrapping_add(1000 * g as u64 + r as u64))?;
            Ok((out.n_connected(), out.graph.n_edges()))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    for (g, &alpha) in alpha_grid.iter().enumerate() {
        let runs: Vec<(usize, usize)> = counts[g * reps..(g + 1) * reps]
            .iter()
            .copied()
            .filter(|&(_, e)| e > 0)
            .collect();
        if runs.len() < reps {
            warn!("alpha = {alpha}: dropped {} zero-edge runs", reps - runs.len());
        }
        if runs.is_empty() {
            continue;
        }
        let k = runs.len() as f64;
        points.push(ScalingPoint {
            alpha,
            n_nodes: runs.iter().map(|r| r.0 as f64).sum::<f64>() / k,
            n_edges: runs.iter().map(|r| r.1 as f64).sum::<f64>() / k,
        });
    }
    if points.len() < 2 {
        return Err(Error::Domain("fewer than two grid points produced edges".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.n_nodes).collect();
    let y: Vec<f64> = points.iter().map(|p| p.n_edges).collect();
    let fit = fit_loglog(&x, &y)?;
    Ok(ScalingRun {
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_se: fit.slope_se,
    })
}
