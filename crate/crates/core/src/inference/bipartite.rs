//! Gibbs sampler for the bipartite model. Each side keeps its own weights,
//! hyperparameters and total masses; given the other side's totals `W'_k`
//! every weight has a gamma full conditional.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::inference::hyper::{ln_node_density, mass_epsilon, Hyper, MhOutcome};
use crate::inference::latent::LatentCounts;
use crate::inference::sampler::{chain_rng, McmcConfig, Trace, RW_TARGET};
use crate::inference::state::McmcState;
use crate::levy::laplace_exponent;
use crate::params::Hyperpriors;
use crate::sim::sample_remainder_mass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteTrace {
    pub chain: usize,
    pub rows: Trace,
    pub cols: Trace,
}

/// Sampler state: one [`McmcState`] per side, each holding the latent
/// counts seen from that side.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    pub rows: McmcState,
    pub cols: McmcState,
}

fn side_state(n: usize, latent: LatentCounts, config: &McmcConfig) -> McmcState {
    let p = config.p;
    let init = &config.init;
    McmcState {
        p,
        degenerate: config.degenerate_scores,
        w0: vec![1.0; n],
        beta: vec![1.0; n * p],
        w_star: vec![1.0 / p as f64; p],
        sigma: init.sigma,
        tau: init.tau,
        a: vec![init.a; p],
        b: vec![init.b.unwrap_or(1.0 / p as f64); p],
        gamma: init.gamma.clone().unwrap_or_else(|| vec![0.0; p]),
        alpha: init.alpha.unwrap_or(n as f64),
        latent,
        hmc_step: config.hmc_step,
        rw_scale: config.rw_scale,
    }
}

impl BipartiteState {
    pub fn initial(graph: &BipartiteGraph, config: &McmcConfig) -> Self {
        let latent = LatentCounts::zeros_bipartite(graph, config.p);
        let cols = side_state(graph.n_cols(), latent.transposed(graph.n_cols()), config);
        BipartiteState {
            rows: side_state(graph.n_rows(), latent, config),
            cols,
        }
    }

    /// Redraw the latent counts and refresh both views.
    pub fn resample_latent<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (w, wc) = (self.rows.weights(), self.cols.weights());
        self.rows.latent.resample_bipartite(&w, &wc, rng)?;
        self.cols.latent = self.rows.latent.transposed(self.cols.n());
        Ok(())
    }
}

/// `W_k = w_*k + sum_i w_ik`.
fn side_totals(s: &McmcState) -> Vec<f64> {
    s.totals().iter().zip(&s.w_star).map(|(t, w)| t + w).collect()
}

fn side_log_density(s: &McmcState, priors: &Hyperpriors) -> f64 {
    let p = s.p;
    let hyper = Hyper::of(s);
    let mut lp = ln_node_density(&hyper, &s.w0, &s.beta, p, s.degenerate);
    for i in 0..s.n() {
        lp += s.latent.m_row(i) as f64 * s.w0[i].ln();
        for k in 0..p {
            let beta = s.beta[i * p + k];
            lp -= s.gamma[k] * s.w0[i] * beta;
            if !s.degenerate {
                lp += s.latent.m(i, k) as f64 * beta.ln();
            }
        }
    }
    lp += s.n() as f64 * s.alpha.ln();
    lp += priors.alpha.ln_density_unnorm(s.alpha);
    lp += priors.one_minus_sigma.ln_density_unnorm(1.0 - s.sigma);
    lp += priors.tau.ln_density_unnorm(s.tau);
    if !s.degenerate {
        for k in 0..p {
            lp += priors.a.ln_density_unnorm(s.a[k]) + priors.b.ln_density_unnorm(s.b[k]);
        }
    }
    lp
}

/// Joint log density of both sides given the latent counts, up to a
/// constant and without the total-mass densities.
pub fn bipartite_log_target(state: &BipartiteState, priors: &Hyperpriors) -> f64 {
    let (w, wc) = (side_totals(&state.rows), side_totals(&state.cols));
    side_log_density(&state.rows, priors) + side_log_density(&state.cols, priors)
        - w.iter().zip(&wc).map(|(a, b)| a * b).sum::<f64>()
}

/// Gibbs update of every `w_i0` and then every `beta_ik` on one side given
/// the other side's totals.
pub fn gibbs_weights<R: Rng + ?Sized>(side: &mut McmcState, other_totals: &[f64], rng: &mut R) -> Result<()> {
    let p = side.p;
    let sigma = side.sigma;
    for i in 0..side.n() {
        let mut rate = side.tau;
        for k in 0..p {
            rate += side.beta[i * p + k] * (side.gamma[k] + other_totals[k]);
        }
        let shape = side.latent.m_row(i) as f64 - sigma;
        side.w0[i] = draw_gamma(shape, rate, rng)?;
        if !side.degenerate {
            for k in 0..p {
                let shape = side.a[k] + side.latent.m(i, k) as f64;
                let rate = side.b[k] + side.w0[i] * (side.gamma[k] + other_totals[k]);
                side.beta[i * p + k] = draw_gamma(shape, rate, rng)?;
            }
        }
    }
    Ok(())
}

fn draw_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|_| Error::State(format!("invalid gamma conditional: shape {shape}, rate {rate}")))?;
    // Underflow to zero would leave the state invalid.
    Ok(g.sample(rng).max(f64::MIN_POSITIVE))
}

/// MH update of `(phi, alpha, w_*)` on one side. The total masses are drawn
/// tilted by the other side's totals, which matches their conditional
/// factor exactly, so only the hyperparameter and `alpha` terms remain.
pub fn mh_side_update<R: Rng + ?Sized>(
    side: &mut McmcState,
    other_totals: &[f64],
    priors: &Hyperpriors,
    epsilon: f64,
    rng: &mut R,
) -> Result<MhOutcome> {
    let reject = MhOutcome {
        accepted: false,
        accept_prob: 0.0,
        log_ratio: f64::NEG_INFINITY,
    };
    let n = side.n() as f64;
    let old = Hyper::of(side);
    let (new, mut log_r) = old.propose(priors, side.degenerate, side.rw_scale, rng);
    let Ok(new_params) = new.params(side) else {
        return Ok(reject);
    };
    let old_params = old.params(side)?;
    let psi = |params| match laplace_exponent(other_totals, params) {
        Ok(v) => Some(v),
        Err(e) => {
            warn!("Laplace exponent failed, rejecting proposal: {e}");
            None
        }
    };
    let Some(psi_new) = psi(&new_params) else {
        return Ok(reject);
    };
    let Some(psi_old) = psi(&old_params) else {
        return Ok(reject);
    };
    let a_post = priors.alpha.shape + n;
    let new_alpha = if priors.free.alpha {
        draw_gamma(a_post, priors.alpha.rate + psi_new, rng)?
    } else {
        side.alpha
    };
    let eps = mass_epsilon(new.sigma, epsilon);
    let new_w_star = match sample_remainder_mass(&new_params, new_alpha, other_totals, eps, rng) {
        Ok(m) => m.w_star,
        Err(e) => {
            warn!("total-mass proposal failed, rejecting: {e}");
            return Ok(reject);
        }
    };
    log_r += ln_node_density(&new, &side.w0, &side.beta, side.p, side.degenerate)
        - ln_node_density(&old, &side.w0, &side.beta, side.p, side.degenerate);
    if priors.free.alpha {
        log_r += a_post * ((priors.alpha.rate + psi_old).ln() - (priors.alpha.rate + psi_new).ln());
    } else {
        log_r += side.alpha * (psi_old - psi_new);
    }
    let accept_prob = if log_r.is_nan() { 0.0 } else { log_r.exp().min(1.0) };
    let accepted = rng.random::<f64>() < accept_prob;
    if accepted {
        side.sigma = new.sigma;
        side.tau = new.tau;
        side.a = new.a;
        side.b = new.b;
        side.alpha = new_alpha;
        side.w_star = new_w_star;
    }
    Ok(MhOutcome {
        accepted,
        accept_prob,
        log_ratio: log_r,
    })
}

/// One sweep: rows then columns (weights, then hyperparameters and masses),
/// then latent counts. Returns the MH acceptance of each side.
pub fn bipartite_sweep<R: Rng + ?Sized>(
    state: &mut BipartiteState,
    priors: &Hyperpriors,
    epsilon: f64,
    update_weights: bool,
    adapt: Option<usize>,
    rng: &mut R,
) -> Result<(MhOutcome, MhOutcome)> {
    let gain = adapt.map(|t| ((t + 1) as f64).powf(-0.6));
    let step = |side: &mut McmcState, other: &McmcState, rng: &mut R| -> Result<MhOutcome> {
        let tot = side_totals(other);
        if update_weights {
            gibbs_weights(side, &tot, rng)?;
        }
        let o = mh_side_update(side, &tot, priors, epsilon, rng)?;
        if let Some(g) = gain {
            side.rw_scale = (side.rw_scale.ln() + g * (o.accept_prob - RW_TARGET))
                .exp()
                .clamp(1e-5, 5.0);
        }
        Ok(o)
    };
    let BipartiteState { rows, cols } = state;
    let o_rows = step(rows, cols, rng)?;
    let o_cols = step(cols, rows, rng)?;
    state.resample_latent(rng)?;
    Ok((o_rows, o_cols))
}

pub fn run_bipartite_chain(graph: &BipartiteGraph, config: &McmcConfig, chain: usize) -> Result<BipartiteTrace> {
    config.validate()?;
    if graph.n_edges() == 0 {
        return Err(Error::invalid("graph", "needs at least one edge"));
    }
    if graph.row_degrees().contains(&0) || graph.col_degrees().contains(&0) {
        return Err(Error::invalid(
            "graph",
            "has isolated nodes; fit its connected subgraph",
        ));
    }
    let priors = &config.hyperpriors;
    let mut rng = chain_rng(config.seed, chain);
    let mut state = BipartiteState::initial(graph, config);
    state.resample_latent(&mut rng)?;
    let adapt_until = (config.adapt_fraction * config.iters as f64) as usize;
    let mut rows = Trace::new(chain, config.p, graph.n_rows(), config.thin, config.burnin);
    let mut cols = Trace::new(chain, config.p, graph.n_cols(), config.thin, config.burnin);
    for it in 0..config.iters {
        let (or, oc) = bipartite_sweep(
            &mut state,
            priors,
            config.epsilon,
            config.update_weights,
            (it < adapt_until).then_some(it),
            &mut rng,
        )?;
        if (it + 1) % config.thin == 0 {
            let lt = bipartite_log_target(&state, priors);
            rows.push(
                it,
                &state.rows,
                lt,
                (config.update_weights, or.accepted),
                config.weight_stride,
            );
            cols.push(
                it,
                &state.cols,
                lt,
                (config.update_weights, oc.accepted),
                config.weight_stride,
            );
        }
    }
    Ok(BipartiteTrace { chain, rows, cols })
}

/// Run `config.chains` bipartite chains in parallel. Both sides share the
/// hyperpriors and initial values of `config`.
pub fn run_bipartite_gibbs(graph: &BipartiteGraph, config: &McmcConfig) -> Result<Vec<BipartiteTrace>> {
    (0..config.chains)
        .into_par_iter()
        .map(|c| run_bipartite_chain(graph, config, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph() -> BipartiteGraph {
        BipartiteGraph::new(4, 3, [(0, 0), (0, 1), (1, 1), (2, 2), (3, 0), (3, 2)]).unwrap()
    }

    fn config() -> McmcConfig {
        McmcConfig {
            iters: 200,
            burnin: 100,
            chains: 2,
            thin: 4,
            seed: 5,
            ..McmcConfig::default()
        }
    }

    #[test]
    fn w0_conditional_has_printed_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = config();
        let mut st = BipartiteState::initial(&graph(), &c);
        st.resample_latent(&mut rng).unwrap();
        st.rows.sigma = 0.3;
        st.rows.beta = vec![0.7, 1.4, 0.9, 1.1, 0.5, 2.0, 1.3, 0.8];
        let other = side_totals(&st.cols);
        let m0 = st.rows.latent.m_row(0) as f64;
        let rate = st.rows.tau + 0.7 * other[0] + 1.4 * other[1];
        let mean = (m0 - 0.3) / rate;
        let sd = (m0 - 0.3).sqrt() / rate;
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut s = st.rows.clone();
            s.degenerate = true;
            gibbs_weights(&mut s, &other, &mut rng).unwrap();
            acc += s.w0[0];
        }
        let emp = acc / n as f64;
        assert!((emp - mean).abs() < 3.0 * sd / (n as f64).sqrt(), "{emp} vs {mean}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run_bipartite_gibbs(&graph(), &config()).unwrap();
        let b = run_bipartite_gibbs(&graph(), &config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].rows.records.len(), 50);
        assert!(a[0].rows.records.iter().all(|r| r.log_target.is_finite()));
    }

    #[test]
    fn column_view_mirrors_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut st = BipartiteState::initial(&graph(), &config());
        st.resample_latent(&mut rng).unwrap();
        let cols = st.rows.latent.col_stats(3);
        for j in 0..3 {
            for k in 0..2 {
                assert_eq!(st.cols.latent.m(j, k), cols[j * 2 + k]);
            }
        }
    }
}
