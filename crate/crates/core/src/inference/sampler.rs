//! Chain driver: warm start on the single-community model, then HMC for the
//! weights, MH for hyperparameters and total masses, and latent count
//! refreshes, with step sizes adapted early and frozen afterwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::inference::hmc::hmc_update;
use crate::inference::hyper::mh_hyper_and_mass_update;
use crate::inference::state::{InitialValues, McmcState};
use crate::inference::target::log_target;
use crate::params::Hyperpriors;

pub const HMC_TARGET: f64 = 0.65;
pub const RW_TARGET: f64 = 0.23;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub p: usize,
    pub iters: usize,
    pub burnin: usize,
    pub chains: usize,
    pub thin: usize,
    pub leapfrog_steps: usize,
    /// Truncation level for total-mass draws (infinite activity).
    pub epsilon: f64,
    /// Iterations of the single-community warm start, not recorded.
    pub init_iters: usize,
    /// Fraction of `iters` during which step sizes adapt.
    pub adapt_fraction: f64,
    pub hmc_step: f64,
    pub rw_scale: f64,
    /// Keep a weight snapshot every this many records; 0 keeps none.
    pub weight_stride: usize,
    pub hyperpriors: Hyperpriors,
    pub init: InitialValues,
    /// Fit the model with scores fixed at one.
    pub degenerate_scores: bool,
    /// Sample the node weights; when false they stay at their initial values.
    pub update_weights: bool,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            p: 2,
            iters: 20_000,
            burnin: 10_000,
            chains: 3,
            thin: 10,
            leapfrog_steps: 10,
            epsilon: 1e-3,
            init_iters: 2_000,
            adapt_fraction: 0.25,
            hmc_step: 0.01,
            rw_scale: 0.02,
            weight_stride: 1,
            hyperpriors: Hyperpriors::default(),
            init: InitialValues::default(),
            degenerate_scores: false,
            update_weights: true,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mcmc.p", self.p),
            ("mcmc.iters", self.iters),
            ("mcmc.chains", self.chains),
            ("mcmc.thin", self.thin),
            ("mcmc.leapfrog_steps", self.leapfrog_steps),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::invalid(field, "must be >= 1"));
            }
        }
        if self.burnin >= self.iters {
            return Err(Error::invalid("mcmc.burnin", "must be smaller than iters"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("mcmc.epsilon", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.adapt_fraction) {
            return Err(Error::invalid("mcmc.adapt_fraction", "must lie in [0, 1]"));
        }
        if !(self.hmc_step > 0.0 && self.hmc_step.is_finite()) {
            return Err(Error::invalid("mcmc.hmc_step", "must be > 0"));
        }
        if !(self.rw_scale > 0.0 && self.rw_scale.is_finite()) {
            return Err(Error::invalid("mcmc.rw_scale", "must be > 0"));
        }
        self.hyperpriors.validate()?;
        self.init.validate(self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub log_alpha: f64,
    pub sigma: f64,
    pub tau: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w_star: Vec<f64>,
    pub mean_w: f64,
    pub log_target: f64,
    pub acc_hmc: bool,
    pub acc_mh: bool,
}

impl TraceRecord {
    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }
}

/// Node weights `w_ik` (row-major `n x p`) at a recorded iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSnapshot {
    pub iter: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub chain: usize,
    pub p: usize,
    pub n_nodes: usize,
    pub thin: usize,
    pub burnin: usize,
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<WeightSnapshot>,
}

impl Trace {
    pub fn new(chain: usize, p: usize, n_nodes: usize, thin: usize, burnin: usize) -> Self {
        Trace {
            chain,
            p,
            n_nodes,
            thin,
            burnin,
            records: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn post_burnin(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.iter >= self.burnin)
    }

    pub fn post_burnin_snapshots(&self) -> impl Iterator<Item = &WeightSnapshot> {
        self.snapshots.iter().filter(move |s| s.iter >= self.burnin)
    }

    /// The record logged at the same iteration as a snapshot.
    pub fn record_at(&self, iter: usize) -> Option<&TraceRecord> {
        self.records
            .binary_search_by_key(&iter, |r| r.iter)
            .ok()
            .map(|ix| &self.records[ix])
    }

    pub(crate) fn push(&mut self, iter: usize, state: &McmcState, log_target: f64, acc: (bool, bool), stride: usize) {
        let n_records = self.records.len();
        self.records.push(TraceRecord {
            iter,
            log_alpha: state.alpha.ln(),
            sigma: state.sigma,
            tau: state.tau,
            a: state.a.clone(),
            b: state.b.clone(),
            w_star: state.w_star.clone(),
            mean_w: state.mean_weight(),
            log_target,
            acc_hmc: acc.0,
            acc_mh: acc.1,
        });
        if stride > 0 && n_records % stride == 0 {
            self.snapshots.push(WeightSnapshot {
                iter,
                weights: state.weights(),
            });
        }
    }
}

/// Step sizes and whether to adapt them during a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepControl {
    pub leapfrog_steps: usize,
    pub epsilon: f64,
    pub update_weights: bool,
    /// `Some(t)` adapts with gain `(t + 1)^{-0.6}`.
    pub adapt: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOutcome {
    pub acc_hmc: bool,
    pub acc_mh: bool,
}

/// One iteration: HMC on the weights, MH on `(phi, alpha, w_*)`, then fresh
/// latent counts.
pub fn mcmc_sweep<R: Rng + ?Sized>(
    state: &mut McmcState,
    priors: &Hyperpriors,
    ctl: &SweepControl,
    rng: &mut R,
) -> Result<SweepOutcome> {
    let gain = ctl.adapt.map(|t| ((t + 1) as f64).powf(-0.6));
    let mut out = SweepOutcome::default();
    if ctl.update_weights {
        let h = hmc_update(state, ctl.leapfrog_steps, state.hmc_step, rng)?;
        out.acc_hmc = h.accepted;
        if let Some(g) = gain {
            state.hmc_step = (state.hmc_step.ln() + g * (h.accept_prob - HMC_TARGET))
                .exp()
                .clamp(1e-6, 2.0);
        }
    }
    let m = mh_hyper_and_mass_update(state, priors, ctl.epsilon, rng)?;
    out.acc_mh = m.accepted;
    if let Some(g) = gain {
        state.rw_scale = (state.rw_scale.ln() + g * (m.accept_prob - RW_TARGET))
            .exp()
            .clamp(1e-5, 5.0);
    }
    let w = state.weights();
    state.latent.resample(&w, rng)?;
    Ok(out)
}

/// The random stream of chain `chain` for a given seed.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

pub(crate) fn check_graph(graph: &SparseGraph) -> Result<()> {
    if graph.n_edges() == 0 {
        return Err(Error::invalid("graph", "needs at least one edge"));
    }
    if graph.n_connected() != graph.n_nodes() {
        return Err(Error::invalid(
            "graph",
            "has isolated nodes; fit its connected subgraph",
        ));
    }
    Ok(())
}

/// Run one chain.
pub fn run_chain(graph: &SparseGraph, config: &McmcConfig, chain: usize) -> Result<Trace> {
    config.validate()?;
    check_graph(graph)?;
    let mut rng = chain_rng(config.seed, chain);
    let priors = &config.hyperpriors;
    let warm = config.init_iters > 0 && !(config.p == 1 && config.degenerate_scores);
    let mut state = if warm {
        let mut init1 = config.init.clone();
        init1.gamma = None;
        init1.b = Some(1.0);
        let mut s1 = McmcState::initial(graph, 1, true, &init1)?;
        s1.hmc_step = config.hmc_step;
        s1.rw_scale = config.rw_scale;
        s1.latent.resample(&s1.weights(), &mut rng)?;
        let ctl = |t| SweepControl {
            leapfrog_steps: config.leapfrog_steps,
            epsilon: config.epsilon,
            update_weights: config.update_weights,
            adapt: Some(t),
        };
        for t in 0..config.init_iters {
            mcmc_sweep(&mut s1, priors, &ctl(t), &mut rng)?;
        }
        s1.expand(graph, config.p, config.degenerate_scores, &config.init)?
    } else {
        let mut s = McmcState::initial(graph, config.p, config.degenerate_scores, &config.init)?;
        s.hmc_step = config.hmc_step;
        s.rw_scale = config.rw_scale;
        s
    };
    state.latent.resample(&state.weights(), &mut rng)?;

    let adapt_until = (config.adapt_fraction * config.iters as f64) as usize;
    let mut trace = Trace::new(chain, config.p, graph.n_nodes(), config.thin, config.burnin);
    for it in 0..config.iters {
        let ctl = SweepControl {
            leapfrog_steps: config.leapfrog_steps,
            epsilon: config.epsilon,
            update_weights: config.update_weights,
            adapt: (it < adapt_until).then_some(it),
        };
        let o = mcmc_sweep(&mut state, priors, &ctl, &mut rng)?;
        if (it + 1) % config.thin == 0 {
            trace.push(
                it,
                &state,
                log_target(&state, priors),
                (o.acc_hmc, o.acc_mh),
                config.weight_stride,
            );
        }
    }
    Ok(trace)
}

/// Run `config.chains` chains in parallel; traces come back in chain order.
pub fn run_mcmc(graph: &SparseGraph, config: &McmcConfig) -> Result<Vec<Trace>> {
    config.validate()?;
    check_graph(graph)?;
    (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(graph, config, c))
        .collect()
}
