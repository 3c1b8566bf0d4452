use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::inference::latent::LatentCounts;
use crate::params::{CcrmParams, GgpParams};

/// Starting values for a chain. Also the values held by parameters that
/// are not sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialValues {
    pub sigma: f64,
    pub tau: f64,
    pub a: f64,
    /// Score rate; `1/p` when absent.
    pub b: Option<f64>,
    /// Defaults to the number of nodes.
    pub alpha: Option<f64>,
    /// Tilting parameters, all zero when absent.
    pub gamma: Option<Vec<f64>>,
}

impl Default for InitialValues {
    fn default() -> Self {
        InitialValues {
            sigma: 0.1,
            tau: 1.0,
            a: 0.5,
            b: None,
            alpha: None,
            gamma: None,
        }
    }
}

impl InitialValues {
    pub fn validate(&self, p: usize) -> Result<()> {
        GgpParams::new(self.sigma, self.tau).map_err(|e| Error::invalid("init.sigma/init.tau", e.to_string()))?;
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::invalid("init.a", "must be > 0"));
        }
        if let Some(b) = self.b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid("init.b", "must be > 0"));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::invalid("init.alpha", "must be > 0"));
            }
        }
        if let Some(g) = &self.gamma {
            if g.len() != p {
                return Err(Error::invalid(
                    "init.gamma",
                    format!("expected {p} entries, got {}", g.len()),
                ));
            }
            if g.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::invalid("init.gamma", "entries must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Full sampler state for a graph with `n` observed nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcState {
    pub p: usize,
    /// Scores fixed at one; only `w0` moves.
    pub degenerate: bool,
    pub w0: Vec<f64>,
    /// Row-major `n x p`.
    pub beta: Vec<f64>,
    pub w_star: Vec<f64>,
    pub sigma: f64,
    pub tau: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: f64,
    pub latent: LatentCounts,
    pub hmc_step: f64,
    pub rw_scale: f64,
}

impl McmcState {
    /// `w0 = 1`, `beta = 1`, `w_* = 1/p` and the given hyperparameters.
    pub fn initial(graph: &SparseGraph, p: usize, degenerate: bool, init: &InitialValues) -> Result<Self> {
        init.validate(p)?;
        let n = graph.n_nodes();
        Ok(McmcState {
            p,
            degenerate,
            w0: vec![1.0; n],
            beta: vec![1.0; n * p],
            w_star: vec![1.0 / p as f64; p],
            sigma: init.sigma,
            tau: init.tau,
            a: vec![init.a; p],
            b: vec![init.b.unwrap_or(1.0 / p as f64); p],
            gamma: init.gamma.clone().unwrap_or_else(|| vec![0.0; p]),
            alpha: init.alpha.unwrap_or(n.max(1) as f64),
            latent: LatentCounts::zeros(graph, p),
            hmc_step: 0.01,
            rw_scale: 0.02,
        })
    }

    /// Move from a single-community degenerate state to `p` communities,
    /// keeping the link rates: `w0 / sqrt(p)`, `beta = 1`, `w_* / sqrt(p)`.
    pub fn expand(&self, graph: &SparseGraph, p: usize, degenerate: bool, init: &InitialValues) -> Result<Self> {
        if self.p != 1 {
            return Err(Error::State("only a single-community state can be expanded".into()));
        }
        let scale = (p as f64).sqrt().recip();
        let mut s = McmcState::initial(graph, p, degenerate, init)?;
        s.w0 = self.w0.iter().map(|w| w * scale).collect();
        s.w_star = vec![self.w_star[0] * scale; p];
        s.sigma = self.sigma;
        s.tau = self.tau;
        s.alpha = self.alpha;
        s.hmc_step = self.hmc_step;
        s.rw_scale = self.rw_scale;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.w0.len()
    }

    #[inline]
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.w0[i] * self.beta[i * self.p + k]
    }

    /// Row-major `n x p` weights `w_ik`.
    pub fn weights(&self) -> Vec<f64> {
        let p = self.p;
        (0..self.n() * p).map(|ix| self.w0[ix / p] * self.beta[ix]).collect()
    }

    /// `S_k = sum_i w_ik`.
    pub fn totals(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.p];
        for i in 0..self.n() {
            for (k, sk) in s.iter_mut().enumerate() {
                *sk += self.weight(i, k);
            }
        }
        s
    }

    /// Mean over nodes of `(1/p) sum_k w_ik`.
    pub fn mean_weight(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        self.totals().iter().sum::<f64>() / (self.n() * self.p) as f64
    }

    pub fn params(&self) -> Result<CcrmParams> {
        let base = GgpParams::new(self.sigma, self.tau)?;
        CcrmParams::new(self.p, base, self.a.clone(), self.b.clone(), self.gamma.clone())
            .map(|c| c.with_degenerate_scores(self.degenerate))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.beta.len() != n * self.p || self.w_star.len() != self.p {
            return Err(Error::State("state arrays have inconsistent lengths".into()));
        }
        if self.latent.n_nodes() != n || self.latent.p() != self.p {
            return Err(Error::State("latent counts do not match the state".into()));
        }
        if self.w0.iter().chain(&self.beta).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::State("weights must be finite and positive".into()));
        }
        if self.w_star.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::State("total masses must be finite and >= 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::State("alpha must be positive".into()));
        }
        self.params().map(|_| ())
    }
}
