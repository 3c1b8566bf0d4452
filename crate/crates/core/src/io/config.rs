use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{InitialValues, McmcConfig};
use crate::params::{CcrmParams, GgpParams, Hyperpriors};

/// A value shared by all communities or given per community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerCommunity {
    Shared(f64),
    Each(Vec<f64>),
}

impl PerCommunity {
    pub fn expand(&self, p: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerCommunity::Shared(x) => Ok(vec![*x; p]),
            PerCommunity::Each(v) if v.len() == p => Ok(v.clone()),
            PerCommunity::Each(v) => Err(Error::invalid(field, format!("expected {p} entries, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub p: usize,
    pub sigma: f64,
    pub tau: f64,
    pub a: PerCommunity,
    /// `1/p` when absent.
    pub b: Option<PerCommunity>,
    pub gamma: Option<PerCommunity>,
    pub degenerate_scores: bool,
    pub hyperpriors: Hyperpriors,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            p: 2,
            sigma: 0.2,
            tau: 1.0,
            a: PerCommunity::Shared(0.2),
            b: None,
            gamma: None,
            degenerate_scores: false,
            hyperpriors: Hyperpriors::default(),
        }
    }
}

impl ModelBlock {
    pub fn params(&self) -> Result<CcrmParams> {
        if self.p == 0 {
            return Err(Error::invalid("model.p", "must be >= 1"));
        }
        let base =
            GgpParams::new(self.sigma, self.tau).map_err(|e| Error::invalid("model.sigma/model.tau", e.to_string()))?;
        let a = self.a.expand(self.p, "model.a")?;
        let b = match &self.b {
            Some(b) => b.expand(self.p, "model.b")?,
            None => vec![1.0 / self.p as f64; self.p],
        };
        let gamma = match &self.gamma {
            Some(g) => g.expand(self.p, "model.gamma")?,
            None => vec![0.0; self.p],
        };
        CcrmParams::new(self.p, base, a, b, gamma)
            .map(|c| c.with_degenerate_scores(self.degenerate_scores))
            .map_err(|e| Error::invalid("model", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcBlock {
    pub iters: usize,
    pub burnin: Option<usize>,
    pub chains: usize,
    pub thin: usize,
    pub leapfrog_steps: usize,
    pub epsilon: f64,
    pub init_iters: usize,
    pub adapt_fraction: f64,
    pub hmc_step: f64,
    pub rw_scale: f64,
    pub weight_stride: usize,
    pub update_weights: bool,
    pub init: InitialValues,
    pub seed: Option<u64>,
}

impl Default for McmcBlock {
    fn default() -> Self {
        let d = McmcConfig::default();
        McmcBlock {
            iters: d.iters,
            burnin: None,
            chains: d.chains,
            thin: d.thin,
            leapfrog_steps: d.leapfrog_steps,
            epsilon: d.epsilon,
            init_iters: d.init_iters,
            adapt_fraction: d.adapt_fraction,
            hmc_step: d.hmc_step,
            rw_scale: d.rw_scale,
            weight_stride: d.weight_stride,
            update_weights: d.update_weights,
            init: d.init,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateBlock {
    pub alpha: f64,
    /// Truncation level; `None` picks exact sampling for finite activity and
    /// `1e-4 / alpha` otherwise.
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub alpha_grid: Vec<f64>,
    pub reps: usize,
}

impl Default for GenerateBlock {
    fn default() -> Self {
        GenerateBlock {
            alpha: 50.0,
            epsilon: None,
            seed: None,
            alpha_grid: vec![50.0, 100.0, 200.0, 400.0, 800.0],
            reps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoBlock {
    pub graph: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub mcmc: McmcBlock,
    pub generate: GenerateBlock,
    pub io: IoBlock,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.params()?;
        let g = &self.generate;
        if !(g.alpha > 0.0 && g.alpha.is_finite()) {
            return Err(Error::invalid("generate.alpha", "must be > 0"));
        }
        if let Some(e) = g.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::invalid("generate.epsilon", "must be >= 0"));
            }
            if e == 0.0 && self.model.sigma >= 0.0 {
                return Err(Error::invalid("generate.epsilon", "must be > 0 when sigma >= 0"));
            }
        }
        if g.alpha_grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("generate.alpha_grid", "values must be > 0"));
        }
        if g.reps == 0 {
            return Err(Error::invalid("generate.reps", "must be >= 1"));
        }
        self.mcmc_config(0)?.validate()
    }

    /// Sampler settings with the given seed; burn-in defaults to half the
    /// iterations.
    pub fn mcmc_config(&self, seed: u64) -> Result<McmcConfig> {
        let m = &self.mcmc;
        let mut init = m.init.clone();
        if init.gamma.is_none() {
            init.gamma = self
                .model
                .gamma
                .as_ref()
                .map(|g| g.expand(self.model.p, "model.gamma"))
                .transpose()?;
        }
        Ok(McmcConfig {
            p: self.model.p,
            iters: m.iters,
            burnin: m.burnin.unwrap_or(m.iters / 2),
            chains: m.chains,
            thin: m.thin,
            leapfrog_steps: m.leapfrog_steps,
            epsilon: m.epsilon,
            init_iters: m.init_iters,
            adapt_fraction: m.adapt_fraction,
            hmc_step: m.hmc_step,
            rw_scale: m.rw_scale,
            weight_stride: m.weight_stride,
            hyperpriors: self.model.hyperpriors,
            init,
            degenerate_scores: self.model.degenerate_scores,
            update_weights: m.update_weights,
            seed,
        })
    }

    /// Truncation level for generation at `alpha`.
    pub fn generate_epsilon(&self, alpha: f64) -> f64 {
        match self.generate.epsilon {
            Some(e) => e,
            None if self.model.sigma < 0.0 => 0.0,
            None => crate::analysis::scan::SCAN_EPSILON_SCALE / alpha,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.mcmc_config(3).unwrap().burnin, c.mcmc.iters / 2);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::from_json(r#"{"mcmc": {"iterations": 5}}"#).unwrap_err();
        assert!(e.to_string().contains("iterations"), "{e}");
        assert!(e.is_config_error());
    }

    #[test]
    fn invalid_values_name_their_field() {
        for (json, field) in [
            (r#"{"model": {"sigma": 1.5}}"#, "model.sigma"),
            (r#"{"model": {"a": [1.0]}}"#, "model.a"),
            (r#"{"generate": {"alpha": -1}}"#, "generate.alpha"),
            (r#"{"mcmc": {"iters": 10, "burnin": 20}}"#, "mcmc.burnin"),
            (r#"{"mcmc": {"thin": 0}}"#, "mcmc.thin"),
            (
                r#"{"model": {"hyperpriors": {"tau": {"shape": -1, "rate": 1}}}}"#,
                "hyperpriors.tau",
            ),
        ] {
            let e = RunConfig::from_json(json).unwrap_err();
            assert!(e.to_string().contains(field), "{json}: {e}");
        }
    }

    #[test]
    fn per_community_values() {
        let c = RunConfig::from_json(r#"{"model": {"p": 3, "a": [0.1, 0.2, 0.3], "b": 2.0}}"#).unwrap();
        let p = c.model.params().unwrap();
        assert_eq!(p.a(), [0.1, 0.2, 0.3]);
        assert_eq!(p.b(), [2.0, 2.0, 2.0]);
    }
}
