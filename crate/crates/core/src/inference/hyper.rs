//! Joint Metropolis–Hastings move for `(phi, alpha, w_*)`: random walk on the
//! log hyperparameters, a gamma proposal for `alpha`, and an exponentially
//! tilted draw of the total masses.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::Result;
use crate::inference::state::McmcState;
use crate::levy::laplace_exponent;
use crate::params::{CcrmParams, GgpParams, Hyperpriors};
use crate::sim::sample_remainder_mass;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome {
    pub accepted: bool,
    pub accept_prob: f64,
    pub log_ratio: f64,
}

impl MhOutcome {
    fn rejected() -> Self {
        MhOutcome {
            accepted: false,
            accept_prob: 0.0,
            log_ratio: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Hyper {
    pub sigma: f64,
    pub tau: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Hyper {
    pub fn of(state: &McmcState) -> Self {
        Hyper {
            sigma: state.sigma,
            tau: state.tau,
            a: state.a.clone(),
            b: state.b.clone(),
        }
    }

    pub fn params(&self, state: &McmcState) -> Result<CcrmParams> {
        let base = GgpParams::new(self.sigma, self.tau)?;
        CcrmParams::new(state.p, base, self.a.clone(), self.b.clone(), state.gamma.clone())
            .map(|c| c.with_degenerate_scores(state.degenerate))
    }

    /// Gaussian random walk on the free coordinates of
    /// `(ln(1 - sigma), ln tau, ln a_k, ln b_k)`; returns the proposal and
    /// `ln [p(new) q(old | new) / (p(old) q(new | old))]`.
    pub fn propose<R: Rng + ?Sized>(
        &self,
        priors: &Hyperpriors,
        degenerate: bool,
        scale: f64,
        rng: &mut R,
    ) -> (Hyper, f64) {
        let mut step = |x: f64| x * (scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).exp();
        let mut new = self.clone();
        let mut lr = 0.0;
        let free = priors.free;
        if free.sigma {
            let oms = step(1.0 - self.sigma);
            new.sigma = 1.0 - oms;
            lr += priors.one_minus_sigma.ln_density_of_log(oms)
                - priors.one_minus_sigma.ln_density_of_log(1.0 - self.sigma);
        }
        if free.tau {
            new.tau = step(self.tau);
            lr += priors.tau.ln_density_of_log(new.tau) - priors.tau.ln_density_of_log(self.tau);
        }
        if !degenerate {
            for k in 0..self.a.len() {
                if free.a {
                    new.a[k] = step(self.a[k]);
                    lr += priors.a.ln_density_of_log(new.a[k]) - priors.a.ln_density_of_log(self.a[k]);
                }
                if free.b {
                    new.b[k] = step(self.b[k]);
                    lr += priors.b.ln_density_of_log(new.b[k]) - priors.b.ln_density_of_log(self.b[k]);
                }
            }
        }
        (new, lr)
    }
}

/// `sum_i ln [f(beta_i) rho0(w_i0)]` under the given hyperparameters.
pub(crate) fn ln_node_density(hyper: &Hyper, w0: &[f64], beta: &[f64], p: usize, degenerate: bool) -> f64 {
    let (sigma, tau) = (hyper.sigma, hyper.tau);
    let lg = ln_gamma(1.0 - sigma);
    let mut v: f64 = w0.iter().map(|&w| (-1.0 - sigma) * w.ln() - tau * w - lg).sum();
    if !degenerate {
        let norm: Vec<f64> = (0..p)
            .map(|k| hyper.a[k] * hyper.b[k].ln() - ln_gamma(hyper.a[k]))
            .collect();
        for (ix, &b) in beta.iter().enumerate() {
            let k = ix % p;
            v += norm[k] + (hyper.a[k] - 1.0) * b.ln() - hyper.b[k] * b;
        }
    }
    v
}

fn psi_or_warn(t: &[f64], params: &CcrmParams) -> Option<f64> {
    match laplace_exponent(t, params) {
        Ok(v) => Some(v),
        Err(e) => {
            warn!("Laplace exponent failed, rejecting proposal: {e}");
            None
        }
    }
}

/// The truncation used for total-mass draws: exact for finite activity.
pub(crate) fn mass_epsilon(sigma: f64, epsilon: f64) -> f64 {
    if sigma < 0.0 {
        0.0
    } else {
        epsilon
    }
}

/// One MH update of `(phi, alpha, w_*)` with tilts `lambda = w_* + 2 S`.
pub fn mh_hyper_and_mass_update<R: Rng + ?Sized>(
    state: &mut McmcState,
    priors: &Hyperpriors,
    epsilon: f64,
    rng: &mut R,
) -> Result<MhOutcome> {
    let p = state.p;
    let n = state.n() as f64;
    let s = state.totals();
    let lambda: Vec<f64> = (0..p).map(|k| state.w_star[k] + 2.0 * s[k]).collect();

    let old = Hyper::of(state);
    let (new, mut log_r) = old.propose(priors, state.degenerate, state.rw_scale, rng);
    let new_params = match new.params(state) {
        Ok(c) => c,
        Err(_) => return Ok(MhOutcome::rejected()),
    };
    let old_params = old.params(state)?;

    let Some(psi_fwd) = psi_or_warn(&lambda, &new_params) else {
        return Ok(MhOutcome::rejected());
    };
    let a_post = priors.alpha.shape + n;
    let new_alpha = if priors.free.alpha {
        let rate = priors.alpha.rate + psi_fwd;
        Gamma::new(a_post, 1.0 / rate)
            .expect("positive shape and rate")
            .sample(rng)
    } else {
        state.alpha
    };
    let eps = mass_epsilon(new.sigma, epsilon);
    let new_w_star = match sample_remainder_mass(&new_params, new_alpha, &lambda, eps, rng) {
        Ok(m) => m.w_star,
        Err(e) => {
            warn!("total-mass proposal failed, rejecting: {e}");
            return Ok(MhOutcome::rejected());
        }
    };
    let lambda_back: Vec<f64> = (0..p).map(|k| new_w_star[k] + 2.0 * s[k]).collect();
    let Some(psi_back) = psi_or_warn(&lambda_back, &old_params) else {
        return Ok(MhOutcome::rejected());
    };

    log_r += ln_node_density(&new, &state.w0, &state.beta, p, state.degenerate)
        - ln_node_density(&old, &state.w0, &state.beta, p, state.degenerate);
    if priors.free.alpha {
        log_r += a_post * ((priors.alpha.rate + psi_back).ln() - (priors.alpha.rate + psi_fwd).ln());
    } else {
        log_r += state.alpha * (psi_back - psi_fwd);
    }
    log_r += (0..p)
        .map(|k| state.w_star[k].powi(2) - new_w_star[k].powi(2))
        .sum::<f64>();

    let accept_prob = if log_r.is_nan() { 0.0 } else { log_r.exp().min(1.0) };
    let accepted = rng.random::<f64>() < accept_prob;
    if accepted {
        state.sigma = new.sigma;
        state.tau = new.tau;
        state.a = new.a;
        state.b = new.b;
        state.alpha = new_alpha;
        state.w_star = new_w_star;
    }
    Ok(MhOutcome {
        accepted,
        accept_prob,
        log_ratio: log_r,
    })
}
