//! Hamiltonian Monte Carlo move on `(ln w0, ln beta)` with identity mass.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::inference::state::McmcState;
use crate::inference::target::{pack, unpack, weight_log_density_and_grad};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcOutcome {
    pub accepted: bool,
    pub accept_prob: f64,
    /// `H(end) - H(start)`.
    pub energy_error: f64,
}

/// Leapfrog from `(q, momentum)`; returns the energy error and leaves the
/// end point in `q`.
pub(crate) fn leapfrog(state: &McmcState, q: &mut [f64], momentum: &mut [f64], steps: usize, step: f64) -> f64 {
    let d = q.len();
    let mut g = vec![0.0; d];
    let l0 = weight_log_density_and_grad(state, q, &mut g);
    let h0 = -l0 + 0.5 * momentum.iter().map(|x| x * x).sum::<f64>();
    for (m, gi) in momentum.iter_mut().zip(&g) {
        *m += 0.5 * step * gi;
    }
    let mut l1 = l0;
    for s in 0..steps {
        for (x, m) in q.iter_mut().zip(momentum.iter()) {
            *x += step * m;
        }
        l1 = weight_log_density_and_grad(state, q, &mut g);
        let scale = if s + 1 == steps { 0.5 } else { 1.0 };
        for (m, gi) in momentum.iter_mut().zip(&g) {
            *m += scale * step * gi;
        }
    }
    let h1 = -l1 + 0.5 * momentum.iter().map(|x| x * x).sum::<f64>();
    h1 - h0
}

/// One HMC transition for the weights; everything else is held fixed.
/// A non-finite end point is rejected.
pub fn hmc_update<R: Rng + ?Sized>(state: &mut McmcState, steps: usize, step: f64, rng: &mut R) -> Result<HmcOutcome> {
    if steps == 0 {
        return Err(Error::invalid("leapfrog_steps", "must be >= 1"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("hmc_step", "must be > 0"));
    }
    let mut q = pack(state);
    let mut momentum: Vec<f64> = (0..q.len()).map(|_| StandardNormal.sample(rng)).collect();
    let de = leapfrog(state, &mut q, &mut momentum, steps, step);
    let finite = de.is_finite() && q.iter().all(|x| x.is_finite() && x.abs() < 700.0);
    let accept_prob = if finite { (-de).exp().min(1.0) } else { 0.0 };
    let accepted = rng.random::<f64>() < accept_prob;
    if accepted {
        unpack(&q, state);
    }
    Ok(HmcOutcome {
        accepted,
        accept_prob,
        energy_error: de,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseGraph;
    use crate::inference::latent::resample_latent_counts;
    use crate::inference::state::InitialValues;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(rng: &mut ChaCha8Rng) -> McmcState {
        let g = SparseGraph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 1)]).unwrap();
        let mut s = McmcState::initial(&g, 2, false, &InitialValues::default()).unwrap();
        s.w0 = vec![0.6, 1.2, 0.4, 0.9, 0.7];
        s.latent = resample_latent_counts(&g, &s.weights(), 2, rng).unwrap();
        s
    }

    #[test]
    fn energy_error_is_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = state(&mut rng);
        let q0 = pack(&s);
        let m0: Vec<f64> = (0..q0.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let err = |step: f64| {
            let steps = (0.4 / step).round() as usize;
            let mut q = q0.clone();
            let mut m = m0.clone();
            leapfrog(&s, &mut q, &mut m, steps, step).abs()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        let order = (e1 / e2).log2();
        assert!((1.6..2.4).contains(&order), "order {order}: {e1} {e2}");
    }

    #[test]
    fn tiny_step_is_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = state(&mut rng);
        for _ in 0..20 {
            let o = hmc_update(&mut s, 1, 1e-9, &mut rng).unwrap();
            assert!(o.accept_prob > 1.0 - 1e-6);
        }
    }

    #[test]
    fn leaves_other_fields_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = state(&mut rng);
        let before = s.clone();
        for _ in 0..10 {
            hmc_update(&mut s, 10, 0.05, &mut rng).unwrap();
        }
        assert_eq!(s.w_star, before.w_star);
        assert_eq!(s.latent, before.latent);
        assert_eq!((s.sigma, s.tau, s.alpha), (before.sigma, before.tau, before.alpha));
        assert_ne!(s.w0, before.w0);
    }
}
