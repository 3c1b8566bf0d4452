//! Simulation of generalized gamma jumps by adaptive thinning, CCRM atoms,
//! and the total mass of the small (unsimulated) jumps.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::levy::{tilted_moments, ScoreMgf};
use crate::params::{CcrmParams, GgpParams};

/// Truncation level used for simulating total masses when none is given.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Exact-thinning truncation used in place of the Gaussian approximation for
/// the gamma process (`sigma = 0`).
pub const GAMMA_PROCESS_EPSILON: f64 = 1e-6;

const TRUNC_GAUSS_TRIES: usize = 100;

/// A bounded, monotone decreasing multiplier `h` of the Lévy density.
pub trait Tilt {
    fn eval(&self, w0: f64) -> f64;
    /// Certified upper bound `h_max >= sup h`.
    fn bound(&self) -> f64;
}

/// `h == 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTilt;

impl Tilt for NoTilt {
    fn eval(&self, _: f64) -> f64 {
        1.0
    }
    fn bound(&self) -> f64 {
        1.0
    }
}

/// An arbitrary tilt given as a closure and its bound.
pub struct FnTilt<F> {
    pub f: F,
    pub bound: f64,
}

impl<F: Fn(f64) -> f64> Tilt for FnTilt<F> {
    fn eval(&self, w0: f64) -> f64 {
        (self.f)(w0)
    }
    fn bound(&self) -> f64 {
        self.bound
    }
}

/// `h(w0) = M(-w0 c)`, the score MGF along a nonnegative direction `c`.
pub struct MgfTilt<'a> {
    mgf: ScoreMgf<'a>,
    c: Vec<f64>,
}

impl<'a> MgfTilt<'a> {
    pub fn new(params: &'a CcrmParams, c: Vec<f64>) -> Self {
        MgfTilt {
            mgf: ScoreMgf::new(params),
            c,
        }
    }
}

impl Tilt for MgfTilt<'_> {
    fn eval(&self, w0: f64) -> f64 {
        self.mgf.ln_at_neg(w0, &self.c).exp()
    }
    fn bound(&self) -> f64 {
        1.0
    }
}

/// Proposal/acceptance counts from one thinning run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinningStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl ThinningStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Jumps of a Poisson process with intensity `rate_scale * h(w) * rho0(w)` on `(epsilon, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSet {
    pub jumps: Vec<f64>,
    pub rate_scale: f64,
    pub epsilon: f64,
    pub stats: ThinningStats,
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Domain(format!("Poisson mean {mean:e}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Sample the jumps of a tilted, truncated GGP.
///
/// Adaptive thinning is used for `epsilon > 0` with `sigma >= -1`. When
/// `epsilon = 0` (finite activity only) or `sigma < -1` the jumps are drawn
/// directly: a Poisson number of `Gamma(-sigma, tau)` variates thinned by
/// `h / h_max`.
pub fn sample_tilted_ggp<T: Tilt + ?Sized, R: Rng + ?Sized>(
    params: &GgpParams,
    tilt: &T,
    rate_scale: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<JumpSet> {
    if !(rate_scale >= 0.0) || !rate_scale.is_finite() {
        return Err(Error::invalid(
            "rate_scale",
            format!("{rate_scale} must be finite and >= 0"),
        ));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be finite and >= 0")));
    }
    if params.is_infinite_activity() && epsilon == 0.0 {
        return Err(Error::invalid(
            "epsilon",
            "must be > 0 for an infinite-activity measure (sigma >= 0)",
        ));
    }
    let mut out = JumpSet {
        jumps: Vec::new(),
        rate_scale,
        epsilon,
        stats: ThinningStats::default(),
    };
    if rate_scale == 0.0 {
        return Ok(out);
    }
    if epsilon == 0.0 || params.sigma() < -1.0 {
        direct_finite_activity(params, tilt, rate_scale, epsilon, rng, &mut out)?;
    } else {
        adaptive_thinning(params, tilt, rate_scale, epsilon, rng, &mut out)?;
    }
    Ok(out)
}

fn direct_finite_activity<T: Tilt + ?Sized, R: Rng + ?Sized>(
    params: &GgpParams,
    tilt: &T,
    rate_scale: f64,
    epsilon: f64,
    rng: &mut R,
    out: &mut JumpSet,
) -> Result<()> {
    let (sigma, tau) = (params.sigma(), params.tau());
    let h_max = tilt.bound();
    let mass = rate_scale * h_max * tau.powf(sigma) / (-sigma);
    let n = sample_poisson(rng, mass)?;
    let size = Gamma::new(-sigma, 1.0 / tau).expect("shape and scale are positive");
    for _ in 0..n {
        let w: f64 = size.sample(rng);
        if w <= epsilon {
            continue;
        }
        out.stats.proposals += 1;
        let h = tilt.eval(w);
        if h > h_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "tilt h({w:e}) = {h:e} exceeds its declared bound {h_max:e}"
            )));
        }
        if rng.random::<f64>() * h_max < h {
            out.jumps.push(w);
            out.stats.accepted += 1;
        }
    }
    Ok(())
}

fn adaptive_thinning<T: Tilt + ?Sized, R: Rng + ?Sized>(
    params: &GgpParams,
    tilt: &T,
    rate_scale: f64,
    epsilon: f64,
    rng: &mut R,
    out: &mut JumpSet,
) -> Result<()> {
    let (sigma, tau) = (params.sigma(), params.tau());
    let c = rate_scale * (-ln_gamma(1.0 - sigma)).exp();
    let mut t = epsilon;
    let mut ht = tilt.eval(t);
    if ht > tilt.bound() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "tilt h({t:e}) = {ht:e} exceeds its declared bound {:e}",
            tilt.bound()
        )));
    }
    loop {
        if !(ht > 0.0) {
            return Ok(());
        }
        let r: f64 = Exp1.sample(rng);
        let t_new = if tau > 0.0 {
            let mass = c * ht * t.powf(-1.0 - sigma) * (-tau * t).exp() / tau;
            if r > mass {
                return Ok(());
            }
            t - (-r / mass).ln_1p() / tau
        } else {
            let level = c * ht / sigma;
            let mass = level * t.powf(-sigma);
            if r > mass {
                return Ok(());
            }
            (t.powf(-sigma) - r / level).powf(-1.0 / sigma)
        };
        if !t_new.is_finite() || t_new <= t {
            return Err(Error::Domain(format!("thinning made no progress from t = {t:e}")));
        }
        let h_new = tilt.eval(t_new);
        if h_new > ht * (1.0 + 1e-12) {
            return Err(Error::NonMonotoneTilt {
                earlier: t,
                later: t_new,
                h_earlier: ht,
                h_later: h_new,
            });
        }
        // rho^eps(t') / g_t(t'), at most one by the check above
        let accept = if tau > 0.0 {
            h_new / ht * (t_new / t).powf(-1.0 - sigma)
        } else {
            h_new / ht
        };
        out.stats.proposals += 1;
        if rng.random::<f64>() < accept {
            out.jumps.push(t_new);
            out.stats.accepted += 1;
        }
        t = t_new;
        ht = h_new;
    }
}

/// Atoms `(w0_i, beta_i, theta_i)` of a CCRM restricted to `[0, alpha]`.
/// `beta` is stored row-major, `p` entries per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAtoms {
    p: usize,
    w0: Vec<f64>,
    beta: Vec<f64>,
    theta: Option<Vec<f64>>,
}

impl NodeAtoms {
    pub fn new(p: usize, w0: Vec<f64>, beta: Vec<f64>, theta: Option<Vec<f64>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "must be positive"));
        }
        if beta.len() != w0.len() * p {
            return Err(Error::Shape(format!(
                "beta has {} entries, expected {} x {p}",
                beta.len(),
                w0.len()
            )));
        }
        if let Some(t) = &theta {
            if t.len() != w0.len() {
                return Err(Error::Shape("theta and w0 differ in length".into()));
            }
        }
        if w0.iter().chain(&beta).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("atom weights must be finite and nonnegative".into()));
        }
        Ok(NodeAtoms { p, w0, beta, theta })
    }

    /// Atoms with fixed weights `w_ik` (taken as `w0 = 1`, `beta = w`).
    pub fn from_weights(p: usize, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len() / p.max(1);
        NodeAtoms::new(p, vec![1.0; n], weights, None)
    }

    pub fn empty(p: usize) -> Self {
        NodeAtoms {
            p,
            w0: Vec::new(),
            beta: Vec::new(),
            theta: None,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn len(&self) -> usize {
        self.w0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.w0.is_empty()
    }
    pub fn w0(&self) -> &[f64] {
        &self.w0
    }
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
    pub fn beta_row(&self, i: usize) -> &[f64] {
        &self.beta[i * self.p..(i + 1) * self.p]
    }
    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    #[inline]
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.w0[i] * self.beta[i * self.p + k]
    }

    pub fn weight_row(&self, i: usize) -> Vec<f64> {
        self.beta_row(i).iter().map(|b| b * self.w0[i]).collect()
    }

    /// Row-major `len x p` matrix of `w_ik`.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).flat_map(|i| self.weight_row(i)).collect()
    }

    /// `sum_i w_ik` for each community.
    pub fn community_totals(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.p];
        for i in 0..self.len() {
            for (k, sk) in s.iter_mut().enumerate() {
                *sk += self.weight(i, k);
            }
        }
        s
    }

    /// Keep the atoms at the given indices, in order.
    pub fn select(&self, idx: &[usize]) -> NodeAtoms {
        NodeAtoms {
            p: self.p,
            w0: idx.iter().map(|&i| self.w0[i]).collect(),
            beta: idx.iter().flat_map(|&i| self.beta_row(i).to_vec()).collect(),
            theta: self.theta.as_ref().map(|t| idx.iter().map(|&i| t[i]).collect()),
        }
    }
}

fn check_tilt(params: &CcrmParams, tilt_lambda: &[f64]) -> Result<()> {
    if tilt_lambda.len() != params.p() {
        return Err(Error::Shape(format!(
            "tilt_lambda has {} entries, expected {}",
            tilt_lambda.len(),
            params.p()
        )));
    }
    if tilt_lambda.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid("tilt_lambda", "entries must be finite and >= 0"));
    }
    Ok(())
}

/// Sample the atoms of a CCRM on `[0, alpha]` with base jumps above `epsilon`,
/// optionally exponentially tilted by `e^{-lambda . w}`.
pub fn sample_ccrm_atoms<R: Rng + ?Sized>(
    params: &CcrmParams,
    alpha: f64,
    epsilon: f64,
    tilt_lambda: &[f64],
    rng: &mut R,
) -> Result<NodeAtoms> {
    let (atoms, _) = sample_ccrm_atoms_with_stats(params, alpha, epsilon, tilt_lambda, rng)?;
    Ok(atoms)
}

pub fn sample_ccrm_atoms_with_stats<R: Rng + ?Sized>(
    params: &CcrmParams,
    alpha: f64,
    epsilon: f64,
    tilt_lambda: &[f64],
    rng: &mut R,
) -> Result<(NodeAtoms, ThinningStats)> {
    check_tilt(params, tilt_lambda)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("{alpha} must be finite and >= 0")));
    }
    let p = params.p();
    let c: Vec<f64> = (0..p).map(|k| params.gamma_tilt()[k] + tilt_lambda[k]).collect();
    let tilt = if params.degenerate_scores() {
        let s: f64 = c.iter().sum();
        MgfTiltOrExp::Exp(s)
    } else {
        MgfTiltOrExp::Mgf(MgfTilt::new(params, c.clone()))
    };
    let jumps = sample_tilted_ggp(&params.base(), &tilt, alpha, epsilon, rng)?;
    let n = jumps.jumps.len();
    let mut beta = Vec::with_capacity(n * p);
    for &w0 in &jumps.jumps {
        for k in 0..p {
            if params.degenerate_scores() {
                beta.push(1.0);
            } else {
                let rate = params.b()[k] + w0 * c[k];
                let g = Gamma::new(params.a()[k], 1.0 / rate).expect("validated shape");
                beta.push(g.sample(rng));
            }
        }
    }
    let theta = (0..n).map(|_| rng.random::<f64>() * alpha).collect();
    let atoms = NodeAtoms {
        p,
        w0: jumps.jumps,
        beta,
        theta: Some(theta),
    };
    Ok((atoms, jumps.stats))
}

enum MgfTiltOrExp<'a> {
    Mgf(MgfTilt<'a>),
    Exp(f64),
}

impl Tilt for MgfTiltOrExp<'_> {
    fn eval(&self, w0: f64) -> f64 {
        match self {
            MgfTiltOrExp::Mgf(m) => m.eval(w0),
            MgfTiltOrExp::Exp(s) => (-w0 * s).exp(),
        }
    }
    fn bound(&self) -> f64 {
        1.0
    }
}

/// Mean vector and row-major covariance of the total mass of the jumps with
/// `w0 < epsilon` of the tilted CCRM on `[0, alpha]`.
pub fn small_jump_moments(
    params: &CcrmParams,
    tilt_lambda: &[f64],
    epsilon: f64,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_tilt(params, tilt_lambda)?;
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon", "must be >= 0"));
    }
    let p = params.p();
    if epsilon == 0.0 || alpha == 0.0 {
        return Ok((vec![0.0; p], vec![0.0; p * p]));
    }
    let (mut mu, mut sig) = tilted_moments(params, tilt_lambda, 0.0, epsilon)?;
    mu.iter_mut().for_each(|m| *m *= alpha);
    sig.iter_mut().for_each(|s| *s *= alpha);
    Ok((mu, sig))
}

/// Total masses `w_*k` of the jumps not represented as nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderMass {
    pub w_star: Vec<f64>,
    pub exact_part: Vec<f64>,
    pub gaussian_part: Vec<f64>,
    pub epsilon_used: f64,
}

/// Lower-triangular Cholesky factor of a row-major SPD matrix, if it exists.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn sample_truncated_gaussian<R: Rng + ?Sized>(mu: &[f64], sig: &[f64], rng: &mut R) -> Vec<f64> {
    let p = mu.len();
    let l = match cholesky(sig, p) {
        Some(l) => l,
        None => {
            warn!("small-jump covariance is not positive definite; using its diagonal");
            let mut d = vec![0.0; p * p];
            for k in 0..p {
                d[k * p + k] = sig[k * p + k].max(0.0).sqrt();
            }
            d
        }
    };
    let mut z = vec![0.0; p];
    let mut x = vec![0.0; p];
    for _ in 0..TRUNC_GAUSS_TRIES {
        for zk in z.iter_mut() {
            *zk = StandardNormal.sample(rng);
        }
        for i in 0..p {
            x[i] = mu[i] + (0..=i).map(|j| l[i * p + j] * z[j]).sum::<f64>();
        }
        if x.iter().all(|&v| v >= 0.0) {
            return x;
        }
    }
    warn!("truncated Gaussian rejection failed after {TRUNC_GAUSS_TRIES} tries; clamping at 0");
    x.iter().map(|v| v.max(0.0)).collect()
}

/// Sample `w_*` given tilts `lambda`: the exact sum over jumps with
/// `w0 > epsilon` plus a Gaussian approximation of the small jumps truncated
/// to the nonnegative orthant. For `sigma = 0` the truncation is lowered to
/// [`GAMMA_PROCESS_EPSILON`] and the small jumps are dropped; for finite
/// activity with `epsilon = 0` the draw is exact.
pub fn sample_remainder_mass<R: Rng + ?Sized>(
    params: &CcrmParams,
    alpha: f64,
    tilt_lambda: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<RemainderMass> {
    check_tilt(params, tilt_lambda)?;
    let p = params.p();
    let eps = if params.sigma() == 0.0 {
        epsilon.min(GAMMA_PROCESS_EPSILON)
    } else {
        epsilon
    };
    let atoms = sample_ccrm_atoms(params, alpha, eps, tilt_lambda, rng)?;
    let exact_part = atoms.community_totals();
    let gaussian_part = if eps == 0.0 || params.sigma() == 0.0 || alpha == 0.0 {
        vec![0.0; p]
    } else {
        let (mu, sig) = small_jump_moments(params, tilt_lambda, eps, alpha)?;
        sample_truncated_gaussian(&mu, &sig, rng)
    };
    let w_star = exact_part.iter().zip(&gaussian_part).map(|(a, b)| a + b).collect();
    Ok(RemainderMass {
        w_star,
        exact_part,
        gaussian_part,
        epsilon_used: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::tail_levy_intensity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::gamma;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn jumps_respect_truncation_and_determinism() {
        let g = GgpParams::new(0.5, 1.0).unwrap();
        let a = sample_tilted_ggp(&g, &NoTilt, 100.0, 0.01, &mut rng(1)).unwrap();
        let b = sample_tilted_ggp(&g, &NoTilt, 100.0, 0.01, &mut rng(1)).unwrap();
        assert_eq!(a, b);
        assert!(!a.jumps.is_empty());
        assert!(a.jumps.iter().all(|&w| w >= 0.01));
        assert!(a.jumps.windows(2).all(|w| w[0] < w[1]));
        assert!(a.stats.accepted as usize == a.jumps.len());
    }

    #[test]
    fn rejects_zero_epsilon_for_infinite_activity() {
        let g = GgpParams::new(0.0, 1.0).unwrap();
        let e = sample_tilted_ggp(&g, &NoTilt, 1.0, 0.0, &mut rng(0));
        assert!(matches!(e, Err(Error::Invalid { .. })));
    }

    #[test]
    fn detects_increasing_tilt() {
        let g = GgpParams::new(0.5, 0.0).unwrap();
        let tilt = FnTilt {
            f: |w: f64| w.min(1.0),
            bound: 1.0,
        };
        let mut found = false;
        for s in 0..20 {
            if let Err(Error::NonMonotoneTilt { .. }) = sample_tilted_ggp(&g, &tilt, 50.0, 1e-3, &mut rng(s)) {
                found = true;
                break;
            }
        }
        assert!(found);
    }

    fn mean_and_se(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn jump_counts_match_tail_intensity() {
        let g = GgpParams::new(0.5, 1.0).unwrap();
        let xs = [0.01, 0.1, 1.0];
        let mut counts = vec![Vec::new(); 3];
        let mut r = rng(7);
        for _ in 0..3000 {
            let j = sample_tilted_ggp(&g, &NoTilt, 100.0, 0.01, &mut r).unwrap();
            for (c, &x) in counts.iter_mut().zip(&xs) {
                c.push(j.jumps.iter().filter(|&&w| w > x).count() as f64);
            }
        }
        for (c, &x) in counts.iter().zip(&xs) {
            let (m, se) = mean_and_se(c);
            let want = 100.0 * tail_levy_intensity(x, &g).unwrap();
            assert!((m - want).abs() < 3.0 * se.max(1e-9), "x={x}: {m} vs {want}");
        }
    }

    #[test]
    fn stable_branch_counts_match_tail() {
        let g = GgpParams::new(0.5, 0.0).unwrap();
        let tilt = FnTilt {
            f: |w: f64| (-w).exp(),
            bound: 1.0,
        };
        let mut c = Vec::new();
        let mut r = rng(8);
        for _ in 0..3000 {
            c.push(sample_tilted_ggp(&g, &tilt, 20.0, 0.05, &mut r).unwrap().jumps.len() as f64);
        }
        let (m, se) = mean_and_se(&c);
        // tau = 0 with an exp tilt is the tau = 1 measure
        let want = 20.0 * tail_levy_intensity(0.05, &GgpParams::new(0.5, 1.0).unwrap()).unwrap();
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
    }

    #[test]
    fn finite_activity_direct_branch() {
        let g = GgpParams::new(-0.5, 1.0).unwrap();
        let total = 2.0; // tau^sigma / (-sigma)
        let mut c = Vec::new();
        let mut r = rng(9);
        for _ in 0..4000 {
            c.push(sample_tilted_ggp(&g, &NoTilt, 10.0, 0.0, &mut r).unwrap().jumps.len() as f64);
        }
        let (m, se) = mean_and_se(&c);
        assert!((m - 10.0 * total).abs() < 3.0 * se);
    }

    #[test]
    fn degenerate_scores_are_one() {
        let c = CcrmParams::degenerate(2, 0.3, 1.0).unwrap();
        let a = sample_ccrm_atoms(&c, 30.0, 1e-3, &[0.0, 0.0], &mut rng(2)).unwrap();
        assert!(a.len() > 0);
        assert!(a.beta().iter().all(|&b| b == 1.0));
        assert!(a.theta().unwrap().iter().all(|&t| (0.0..=30.0).contains(&t)));
    }

    #[test]
    fn untilted_scores_have_gamma_mean() {
        let c = CcrmParams::symmetric(2, 0.2, 1.0, 0.7, 2.0).unwrap();
        let mut r = rng(3);
        let mut betas = Vec::new();
        while betas.len() < 40_000 {
            let a = sample_ccrm_atoms(&c, 200.0, 1e-3, &[0.0, 0.0], &mut r).unwrap();
            betas.extend(a.beta().iter().step_by(2));
        }
        let (m, se) = mean_and_se(&betas);
        assert!((m - 0.35).abs() < 3.0 * se, "{m}");
    }

    #[test]
    fn small_jump_moments_behave() {
        let c = CcrmParams::symmetric(2, 0.5, 1.0, 1.0, 1.0).unwrap();
        let (mu, sig) = small_jump_moments(&c, &[0.3, 0.0], 1e-3, 2.0).unwrap();
        assert_eq!(sig[1], sig[2]);
        assert!(cholesky(&sig, 2).is_some());
        assert!(mu[0] < mu[1]);
        let (mu0, sig0) = small_jump_moments(&c, &[0.0, 0.0], 0.0, 2.0).unwrap();
        assert!(mu0.iter().chain(&sig0).all(|&v| v == 0.0));
        let (tiny, _) = small_jump_moments(&c, &[0.0, 0.0], 1e-12, 2.0).unwrap();
        assert!(tiny[0] < 1e-5);
    }

    #[test]
    fn small_jump_mean_regular_variation() {
        // mu_eps ~ alpha E[beta] eps^{1-sigma} / ((1 - sigma) Gamma(1 - sigma)),
        // i.e. sigma/(1-sigma) eps^{1-sigma} l with l = 1 / (sigma Gamma(1 - sigma)).
        let sigma = 0.5;
        let c = CcrmParams::symmetric(1, sigma, 1.0, 1.0, 1.0).unwrap();
        let eps: f64 = 1e-4;
        let (mu, _) = small_jump_moments(&c, &[0.0], eps, 1.0).unwrap();
        let ell = 1.0 / (sigma * gamma(1.0 - sigma));
        let ratio = mu[0] / (sigma / (1.0 - sigma) * eps.powf(1.0 - sigma) * ell);
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn remainder_mass_nonnegative_and_exact_branch() {
        let c = CcrmParams::symmetric(2, -0.5, 1.0, 0.2, 0.5).unwrap();
        let mut r = rng(4);
        let m = sample_remainder_mass(&c, 10.0, &[1.0, 0.5], 0.0, &mut r).unwrap();
        assert_eq!(m.gaussian_part, vec![0.0, 0.0]);
        assert_eq!(m.w_star, m.exact_part);
        let c = CcrmParams::symmetric(2, 0.5, 1.0, 0.2, 0.5).unwrap();
        for _ in 0..50 {
            let m = sample_remainder_mass(&c, 10.0, &[1.0, 0.5], 1e-3, &mut r).unwrap();
            assert!(m.w_star.iter().all(|&v| v >= 0.0));
            for k in 0..2 {
                assert_eq!(m.w_star[k], m.exact_part[k] + m.gaussian_part[k]);
            }
        }
        let g = CcrmParams::symmetric(1, 0.0, 1.0, 0.2, 0.5).unwrap();
        let m = sample_remainder_mass(&g, 5.0, &[0.0], 1e-3, &mut r).unwrap();
        assert_eq!(m.epsilon_used, GAMMA_PROCESS_EPSILON);
        assert_eq!(m.gaussian_part, vec![0.0]);
    }

    #[test]
    fn remainder_mean_matches_moment_quadrature() {
        let c = CcrmParams::symmetric(2, 0.5, 1.0, 0.5, 1.0).unwrap();
        let lambda = [2.0, 0.5];
        let alpha = 5.0;
        let mut r = rng(5);
        let draws: Vec<Vec<f64>> = (0..4000)
            .map(|_| sample_remainder_mass(&c, alpha, &lambda, 1e-3, &mut r).unwrap().w_star)
            .collect();
        let (mu, _) = tilted_moments(&c, &lambda, 0.0, f64::INFINITY).unwrap();
        for k in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let (m, se) = mean_and_se(&xs);
            assert!((m - alpha * mu[k]).abs() < 3.0 * se, "k={k}: {m} vs {}", alpha * mu[k]);
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - a[i * 3 + j]).abs() < 1e-12);
            }
        }
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}
