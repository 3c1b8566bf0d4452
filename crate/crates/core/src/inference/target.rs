//! Log posterior of the weights and hyperparameters given the latent counts,
//! with its gradient in log coordinates.

use statrs::function::gamma::ln_gamma;

use crate::inference::state::McmcState;
use crate::params::Hyperpriors;

/// Log of the joint conditional density of weights, scores, total masses,
/// hyperparameters and `alpha` given the latent counts, plus the hyperprior
/// log densities, up to an additive constant. The density of the total
/// masses `g_*` has no closed form and is left out.
pub fn log_target(state: &McmcState, priors: &Hyperpriors) -> f64 {
    let p = state.p;
    let (sigma, tau) = (state.sigma, state.tau);
    let ln_gamma_base = ln_gamma(1.0 - sigma);
    let score_norm: Vec<f64> = (0..p)
        .map(|k| state.a[k] * state.b[k].ln() - ln_gamma(state.a[k]))
        .collect();
    let mut lp = 0.0;
    let mut totals = vec![0.0; p];
    for i in 0..state.n() {
        let w0 = state.w0[i];
        let lw0 = w0.ln();
        lp += state.latent.m_row(i) as f64 * lw0;
        lp += (-1.0 - sigma) * lw0 - tau * w0 - ln_gamma_base;
        let mut tilt = 0.0;
        for k in 0..p {
            let beta = state.beta[i * p + k];
            totals[k] += w0 * beta;
            tilt += state.gamma[k] * beta;
            if !state.degenerate {
                let lb = beta.ln();
                lp += state.latent.m(i, k) as f64 * lb;
                lp += score_norm[k] + (state.a[k] - 1.0) * lb - state.b[k] * beta;
            }
        }
        lp -= w0 * tilt;
    }
    for k in 0..p {
        lp -= (state.w_star[k] + totals[k]).powi(2);
    }
    lp += state.n() as f64 * state.alpha.ln();
    lp += priors.alpha.ln_density_unnorm(state.alpha);
    lp += priors.one_minus_sigma.ln_density_unnorm(1.0 - sigma);
    lp += priors.tau.ln_density_unnorm(tau);
    if !state.degenerate {
        for k in 0..p {
            lp += priors.a.ln_density_unnorm(state.a[k]) + priors.b.ln_density_unnorm(state.b[k]);
        }
    }
    lp
}

/// [`log_target`] as a density of `(ln w0, ln beta)`: adds the Jacobian.
pub fn log_target_log_space(state: &McmcState, priors: &Hyperpriors) -> f64 {
    let mut lp = log_target(state, priors) + state.w0.iter().map(|w| w.ln()).sum::<f64>();
    if !state.degenerate {
        lp += state.beta.iter().map(|b| b.ln()).sum::<f64>();
    }
    lp
}

/// Position layout used by HMC: `ln w0` for every node, then `ln beta`
/// row-major (omitted for degenerate scores).
pub(crate) fn pack(state: &McmcState) -> Vec<f64> {
    let mut q: Vec<f64> = state.w0.iter().map(|w| w.ln()).collect();
    if !state.degenerate {
        q.extend(state.beta.iter().map(|b| b.ln()));
    }
    q
}

pub(crate) fn unpack(q: &[f64], state: &mut McmcState) {
    let n = state.n();
    for i in 0..n {
        state.w0[i] = q[i].exp();
    }
    if !state.degenerate {
        for (b, x) in state.beta.iter_mut().zip(&q[n..]) {
            *b = x.exp();
        }
    }
}

/// The part of [`log_target_log_space`] that depends on the weights, and its
/// gradient, at position `q`:
///
/// `d/d ln w_i0 = m_i - sigma - w_i0 [tau + sum_k gamma_k beta_ik + 2 sum_k beta_ik (w_*k + S_k)]`
/// `d/d ln beta_ik = m_ik + a_k - beta_ik [b_k + w_i0 gamma_k + 2 w_i0 (w_*k + S_k)]`
pub(crate) fn weight_log_density_and_grad(state: &McmcState, q: &[f64], grad: &mut [f64]) -> f64 {
    let n = state.n();
    let p = state.p;
    let (sigma, tau) = (state.sigma, state.tau);
    let beta_at = |i: usize, k: usize| {
        if state.degenerate {
            1.0
        } else {
            q[n + i * p + k].exp()
        }
    };
    let mut load = vec![0.0; p];
    for i in 0..n {
        let w0 = q[i].exp();
        for (k, l) in load.iter_mut().enumerate() {
            *l += w0 * beta_at(i, k);
        }
    }
    for k in 0..p {
        load[k] += state.w_star[k];
    }
    let mut value = -load.iter().map(|l| l * l).sum::<f64>();
    for i in 0..n {
        let u = q[i];
        let w0 = u.exp();
        let mi = state.latent.m_row(i) as f64;
        let mut tilt = 0.0;
        let mut pull = 0.0;
        for k in 0..p {
            let beta = beta_at(i, k);
            tilt += state.gamma[k] * beta;
            pull += beta * load[k];
        }
        value += (mi - sigma) * u - tau * w0 - w0 * tilt;
        grad[i] = mi - sigma - w0 * (tau + tilt + 2.0 * pull);
        if !state.degenerate {
            for k in 0..p {
                let v = q[n + i * p + k];
                let beta = v.exp();
                let mik = state.latent.m(i, k) as f64;
                value += (mik + state.a[k]) * v - state.b[k] * beta;
                grad[n + i * p + k] = mik + state.a[k] - beta * (state.b[k] + w0 * state.gamma[k] + 2.0 * w0 * load[k]);
            }
        }
    }
    value
}

/// Gradient of [`log_target_log_space`] with respect to `(ln w0, ln beta)`.
pub fn log_target_gradient(state: &McmcState) -> Vec<f64> {
    let q = pack(state);
    let mut g = vec![0.0; q.len()];
    weight_log_density_and_grad(state, &q, &mut g);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseGraph;
    use crate::inference::latent::resample_latent_counts;
    use crate::inference::state::{InitialValues, McmcState};
    use crate::params::GammaPrior;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn three_node_state(rng: &mut ChaCha8Rng) -> (McmcState, Hyperpriors) {
        let g = SparseGraph::new(3, [(0, 1), (1, 2), (2, 2)]).unwrap();
        let mut s = McmcState::initial(&g, 2, false, &InitialValues::default()).unwrap();
        for x in s.w0.iter_mut().chain(s.beta.iter_mut()) {
            *x = rng.random_range(0.2..2.0);
        }
        s.w_star = vec![0.7, 1.3];
        s.sigma = 0.3;
        s.tau = 1.7;
        s.a = vec![0.4, 0.9];
        s.b = vec![0.5, 2.0];
        s.gamma = vec![0.25, 0.0];
        s.alpha = 4.5;
        s.latent = resample_latent_counts(&g, &s.weights(), 2, rng).unwrap();
        let pri = Hyperpriors {
            alpha: GammaPrior::new(2.0, 0.5).unwrap(),
            one_minus_sigma: GammaPrior::new(3.0, 2.0).unwrap(),
            tau: GammaPrior::new(1.5, 1.0).unwrap(),
            a: GammaPrior::new(1.0, 1.0).unwrap(),
            b: GammaPrior::new(2.0, 3.0).unwrap(),
            ..Hyperpriors::default()
        };
        (s, pri)
    }

    // Direct product-form evaluation of the joint conditional density.
    fn direct(s: &McmcState, pri: &Hyperpriors) -> f64 {
        let gam = |x: f64| statrs::function::gamma::gamma(x);
        let gpdf = |x: f64, g: &GammaPrior| x.powf(g.shape - 1.0) * (-g.rate * x).exp();
        let mut dens = 1.0;
        let mut s_tot = [0.0, 0.0];
        for i in 0..3 {
            let w0 = s.w0[i];
            let mut wpow = w0.powf(s.latent.m_row(i) as f64);
            let mut f = 1.0;
            let mut tilt = 0.0;
            for k in 0..2 {
                let b = s.beta[i * 2 + k];
                wpow *= b.powf(s.latent.m(i, k) as f64);
                f *= s.b[k].powf(s.a[k]) / gam(s.a[k]) * b.powf(s.a[k] - 1.0) * (-s.b[k] * b).exp();
                tilt += s.gamma[k] * b;
                s_tot[k] += w0 * b;
            }
            let rho0 = w0.powf(-1.0 - s.sigma) * (-s.tau * w0).exp() / gam(1.0 - s.sigma);
            dens *= wpow * (-w0 * tilt).exp() * f * rho0;
        }
        let quad: f64 = (0..2).map(|k| (s.w_star[k] + s_tot[k]).powi(2)).sum();
        dens *= (-quad).exp() * s.alpha.powi(3);
        dens *= gpdf(s.alpha, &pri.alpha) * gpdf(1.0 - s.sigma, &pri.one_minus_sigma) * gpdf(s.tau, &pri.tau);
        for k in 0..2 {
            dens *= gpdf(s.a[k], &pri.a) * gpdf(s.b[k], &pri.b);
        }
        dens.ln()
    }

    #[test]
    fn matches_direct_product_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let (s, pri) = three_node_state(&mut rng);
            let a = log_target(&s, &pri);
            let b = direct(&s, &pri);
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let (s, pri) = three_node_state(&mut rng);
            let g = log_target_gradient(&s);
            let q = pack(&s);
            for d in 0..q.len() {
                let h = 1e-5;
                let mut sp = s.clone();
                let mut sm = s.clone();
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[d] += h;
                qm[d] -= h;
                unpack(&qp, &mut sp);
                unpack(&qm, &mut sm);
                let fd = (log_target_log_space(&sp, &pri) - log_target_log_space(&sm, &pri)) / (2.0 * h);
                assert!(
                    (fd - g[d]).abs() < 1e-6 * g[d].abs().max(1.0),
                    "d={d}: {fd} vs {}",
                    g[d]
                );
            }
        }
    }

    #[test]
    fn depends_on_counts_only_through_node_statistics() {
        // Moving counts between two parallel paths keeps every m_ik fixed.
        let g = SparseGraph::new(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let mut s = McmcState::initial(&g, 1, false, &InitialValues::default()).unwrap();
        s.w0 = vec![0.5, 1.5, 0.8, 1.1];
        for (e, c) in [3, 2, 2, 3].into_iter().enumerate() {
            s.latent.set_edge_counts(e, &[c]).unwrap();
        }
        let pri = Hyperpriors::default();
        let before = log_target(&s, &pri);
        for (e, c) in [4, 1, 1, 4].into_iter().enumerate() {
            s.latent.set_edge_counts(e, &[c]).unwrap();
        }
        assert_eq!(log_target(&s, &pri), before);
    }

    #[test]
    fn larger_total_mass_lowers_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut s, pri) = three_node_state(&mut rng);
        let before = log_target(&s, &pri);
        s.w_star[0] += 0.5;
        assert!(log_target(&s, &pri) < before);
    }
}
