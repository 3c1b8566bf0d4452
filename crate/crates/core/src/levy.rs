//! Lévy intensities, Laplace exponents and moment integrals of the compound
//! CRM with gamma scores and a generalized gamma base measure.
//!
//! Everything that would be a `p`-dimensional integral over `(w_1..w_p)` is
//! reduced to a one-dimensional integral over the base jump `w0` using the
//! score moment generating function `M(t) = prod_k (1 - t_k / b_k)^{-a_k}`
//! and its derivatives.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::params::{CcrmParams, GgpParams};
use crate::quadrature::{integrate_log_space, QuadOptions};

/// `ln rho0(w0)` for the generalized gamma Lévy density.
#[inline]
pub(crate) fn ln_ggp_density(w0: f64, sigma: f64, tau: f64) -> f64 {
    (-1.0 - sigma) * w0.ln() - tau * w0 - ln_gamma(1.0 - sigma)
}

/// `ln(w0 rho0(w0))`: the density per unit of `ln w0`.
#[inline]
pub(crate) fn ln_ggp_log_density(w0: f64, sigma: f64, tau: f64) -> f64 {
    -sigma * w0.ln() - tau * w0 - ln_gamma(1.0 - sigma)
}

/// Generalized gamma Lévy density `w0^{-1-sigma} e^{-tau w0} / Gamma(1 - sigma)`.
pub fn ggp_levy_density(w0: f64, params: &GgpParams) -> Result<f64> {
    if !(w0 > 0.0) || !w0.is_finite() {
        return Err(Error::Domain(format!("Lévy density needs w0 > 0, got {w0}")));
    }
    Ok(ln_ggp_density(w0, params.sigma(), params.tau()).exp())
}

/// Total mass `int_0^inf rho0` of a finite-activity (`sigma < 0`) base measure.
pub fn ggp_total_mass(params: &GgpParams) -> f64 {
    if params.sigma() >= 0.0 {
        f64::INFINITY
    } else {
        params.tau().powf(params.sigma()) / (-params.sigma())
    }
}

/// Tail Lévy intensity `int_x^inf rho0(dw)`, by quadrature.
pub fn tail_levy_intensity(x: f64, params: &GgpParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("tail intensity needs x > 0, got {x}")));
    }
    let (sigma, tau) = (params.sigma(), params.tau());
    let scale = if tau > 0.0 { x.max(1.0 / tau) } else { x };
    let r = integrate_log_space(
        |w| ln_ggp_log_density(w, sigma, tau).exp(),
        x,
        f64::INFINITY,
        scale,
        QuadOptions::default(),
    )?;
    Ok(r.value)
}

/// Moment generating function of the product-of-gammas score distribution,
/// with gradient and Hessian. Degenerate scores (`beta == 1`) give
/// `M(t) = exp(sum t)`.
#[derive(Debug, Clone, Copy)]
pub struct ScoreMgf<'a> {
    params: &'a CcrmParams,
}

impl<'a> ScoreMgf<'a> {
    pub fn new(params: &'a CcrmParams) -> Self {
        ScoreMgf { params }
    }

    fn check(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.params.p() {
            return Err(Error::Shape(format!(
                "mgf argument has {} entries, expected {}",
                t.len(),
                self.params.p()
            )));
        }
        if !self.params.degenerate_scores() {
            if let Some(k) = (0..t.len()).find(|&k| t[k] >= self.params.b()[k]) {
                return Err(Error::Domain(format!("mgf undefined at t_{k} = {} >= b_{k}", t[k])));
            }
        }
        Ok(())
    }

    pub fn ln_value(&self, t: &[f64]) -> Result<f64> {
        self.check(t)?;
        Ok(self.ln_value_unchecked(t))
    }

    fn ln_value_unchecked(&self, t: &[f64]) -> f64 {
        if self.params.degenerate_scores() {
            return t.iter().sum();
        }
        let (a, b) = (self.params.a(), self.params.b());
        t.iter().enumerate().map(|(k, &tk)| -a[k] * (-tk / b[k]).ln_1p()).sum()
    }

    pub fn value(&self, t: &[f64]) -> Result<f64> {
        self.ln_value(t).map(f64::exp)
    }

    /// `dM/dt_k = M(t) a_k / (b_k - t_k)`.
    pub fn gradient(&self, t: &[f64]) -> Result<Vec<f64>> {
        self.check(t)?;
        let m = self.ln_value_unchecked(t).exp();
        Ok((0..t.len()).map(|k| m * self.log_grad(k, t[k])).collect())
    }

    /// Row-major `p x p` Hessian.
    pub fn hessian(&self, t: &[f64]) -> Result<Vec<f64>> {
        self.check(t)?;
        let p = t.len();
        let m = self.ln_value_unchecked(t).exp();
        let g: Vec<f64> = (0..p).map(|k| self.log_grad(k, t[k])).collect();
        let mut h = vec![0.0; p * p];
        for k in 0..p {
            for l in 0..p {
                let mut v = g[k] * g[l];
                if k == l && !self.params.degenerate_scores() {
                    v += g[k] * g[k] / self.params.a()[k];
                }
                h[k * p + l] = m * v;
            }
        }
        Ok(h)
    }

    /// `d ln M / dt_k`.
    #[inline]
    fn log_grad(&self, k: usize, tk: f64) -> f64 {
        if self.params.degenerate_scores() {
            1.0
        } else {
            self.params.a()[k] / (self.params.b()[k] - tk)
        }
    }

    /// `ln M(-w0 c)` for a nonnegative tilt vector `c`.
    #[inline]
    pub(crate) fn ln_at_neg(&self, w0: f64, c: &[f64]) -> f64 {
        if self.params.degenerate_scores() {
            return -w0 * c.iter().sum::<f64>();
        }
        let (a, b) = (self.params.a(), self.params.b());
        c.iter()
            .enumerate()
            .map(|(k, &ck)| -a[k] * (w0 * ck / b[k]).ln_1p())
            .sum()
    }
}

fn typical_scale(params: &CcrmParams, extra_rate: f64) -> f64 {
    let r = params.tau() + extra_rate;
    if r > 0.0 {
        1.0 / r
    } else {
        1.0
    }
}

/// Laplace exponent `psi(t_1..t_p)` of the CCRM (per unit of `alpha`).
pub fn laplace_exponent(t: &[f64], params: &CcrmParams) -> Result<f64> {
    laplace_exponent_with(t, params, QuadOptions::default())
}

pub(crate) fn laplace_exponent_with(t: &[f64], params: &CcrmParams, opts: QuadOptions) -> Result<f64> {
    let p = params.p();
    if t.len() != p {
        return Err(Error::Shape(format!(
            "psi argument has {} entries, expected {p}",
            t.len()
        )));
    }
    if let Some(x) = t.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("psi needs t >= 0, got {x}")));
    }
    if t.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let (sigma, tau) = (params.sigma(), params.tau());
    let gamma = params.gamma_tilt();
    let mgf = ScoreMgf::new(params);
    let degenerate = params.degenerate_scores();
    let (a, b) = (params.a(), params.b());
    let load: f64 = (0..p).map(|k| t[k] * params.score_mean(k)).sum();
    let integrand = |w0: f64| {
        let ln_base = ln_ggp_log_density(w0, sigma, tau) + mgf.ln_at_neg(w0, gamma);
        // 1 - M(-w0 (t + gamma)) / M(-w0 gamma)
        let ln_ratio = if degenerate {
            -w0 * t.iter().sum::<f64>()
        } else {
            (0..p)
                .map(|k| -a[k] * (w0 * t[k] / (b[k] + w0 * gamma[k])).ln_1p())
                .sum()
        };
        -ln_ratio.exp_m1() * ln_base.exp()
    };
    let r = integrate_log_space(integrand, 0.0, f64::INFINITY, typical_scale(params, load), opts)?;
    Ok(r.value)
}

/// First and second moment integrals of the tilted CCRM Lévy measure with the
/// base jump restricted to `(lower, upper)`:
///
/// `mu_k = int w0 dM/dt_k(-w0 c) rho0(dw0)`,
/// `Sigma_kl = int w0^2 d2M/dt_k dt_l(-w0 c) rho0(dw0)`,
///
/// with `c = gamma + lambda`. Per unit `alpha`. `Sigma` is row-major `p x p`.
pub fn tilted_moments(params: &CcrmParams, lambda: &[f64], lower: f64, upper: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    tilted_moments_with(params, lambda, lower, upper, QuadOptions::default())
}

pub(crate) fn tilted_moments_with(
    params: &CcrmParams,
    lambda: &[f64],
    lower: f64,
    upper: f64,
    opts: QuadOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = params.p();
    if lambda.len() != p {
        return Err(Error::Shape(format!("tilt has {} entries, expected {p}", lambda.len())));
    }
    if params.tau() == 0.0 && upper.is_infinite() {
        return Err(Error::InfiniteMoment(
            "moments of the GGP Lévy measure diverge when tau = 0".into(),
        ));
    }
    let c: Vec<f64> = (0..p).map(|k| params.gamma_tilt()[k] + lambda[k]).collect();
    let (sigma, tau) = (params.sigma(), params.tau());
    let mgf = ScoreMgf::new(params);
    let degenerate = params.degenerate_scores();
    let (a, b) = (params.a(), params.b());
    let load: f64 = (0..p).map(|k| c[k] * params.score_mean(k)).sum();
    let scale = typical_scale(params, load).min(upper);
    // d ln M / dt_k at -w0 c
    let lg = |k: usize, w0: f64| {
        if degenerate {
            1.0
        } else {
            a[k] / (b[k] + w0 * c[k])
        }
    };
    // w0^power rho0(w0) M(-w0 c) per unit ln w0
    let base =
        |w0: f64, power: f64| (ln_ggp_log_density(w0, sigma, tau) + mgf.ln_at_neg(w0, &c) + power * w0.ln()).exp();

    let mut mu = vec![0.0; p];
    for (k, m) in mu.iter_mut().enumerate() {
        *m = integrate_log_space(|w0| lg(k, w0) * base(w0, 1.0), lower, upper, scale, opts)?.value;
    }
    let mut sig = vec![0.0; p * p];
    for k in 0..p {
        for l in k..p {
            let v = integrate_log_space(
                |w0| {
                    let mut h = lg(k, w0) * lg(l, w0);
                    if k == l && !degenerate {
                        h += lg(k, w0) * lg(k, w0) / a[k];
                    }
                    h * base(w0, 2.0)
                },
                lower,
                upper,
                scale,
                opts,
            )?
            .value;
            sig[k * p + l] = v;
            sig[l * p + k] = v;
        }
    }
    Ok((mu, sig))
}

/// Expected number of directed multigraph edges `E[D*] = alpha^2 mu'mu + alpha tr(Sigma)`.
pub fn expected_multigraph_edges(alpha: f64, params: &CcrmParams) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha", "must be >= 0"));
    }
    if params.tau() == 0.0 {
        return Err(Error::InfiniteMoment(
            "expected edge count is infinite when tau = 0".into(),
        ));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let p = params.p();
    let (mu, trace) = if params.gamma_tilt().iter().all(|&g| g == 0.0) {
        let (sigma, tau) = (params.sigma(), params.tau());
        let first = tau.powf(sigma - 1.0);
        let second = (1.0 - sigma) * tau.powf(sigma - 2.0);
        let mu: Vec<f64> = (0..p).map(|k| params.score_mean(k) * first).collect();
        let tr: f64 = (0..p).map(|k| params.score_second_moment(k, k) * second).sum();
        (mu, tr)
    } else {
        let (mu, sig) = tilted_moments(params, &vec![0.0; p], 0.0, f64::INFINITY)?;
        let tr = (0..p).map(|k| sig[k * p + k]).sum();
        (mu, tr)
    };
    let mm: f64 = mu.iter().map(|m| m * m).sum();
    Ok(alpha * alpha * mm + alpha * trace)
}

/// Monte Carlo estimates (with standard errors) of the expected number of
/// edges and of non-isolated nodes in the simple graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    pub edges: f64,
    pub edges_se: f64,
    pub nodes: f64,
    pub nodes_se: f64,
}

/// Expected simple-graph edges and nodes, combining Monte Carlo over the
/// scores `beta ~ F` with quadrature over `w0`.
pub fn expected_simple_edges_and_nodes<R: Rng + ?Sized>(
    alpha: f64,
    params: &CcrmParams,
    mc_samples: usize,
    rng: &mut R,
) -> Result<ExpectedCounts> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha", "must be >= 0"));
    }
    if mc_samples < 1000 {
        return Err(Error::invalid("mc_samples", "need at least 1000 samples"));
    }
    if alpha == 0.0 {
        return Ok(ExpectedCounts {
            edges: 0.0,
            edges_se: 0.0,
            nodes: 0.0,
            nodes_se: 0.0,
        });
    }
    let p = params.p();
    let (sigma, tau) = (params.sigma(), params.tau());
    let gamma = params.gamma_tilt();
    let inner = QuadOptions {
        rel_tol: 1e-7,
        abs_tol: 1e-13,
        ..QuadOptions::default()
    };
    let outer = QuadOptions {
        rel_tol: 1e-6,
        abs_tol: 1e-12,
        ..QuadOptions::default()
    };
    let score_dists: Vec<Gamma<f64>> = if params.degenerate_scores() {
        Vec::new()
    } else {
        (0..p)
            .map(|k| Gamma::new(params.a()[k], 1.0 / params.b()[k]).expect("validated shape"))
            .collect()
    };
    // Degenerate scores make the integrand deterministic.
    let n = if params.degenerate_scores() { 1 } else { mc_samples };
    let mut e_vals = Vec::with_capacity(n);
    let mut n_vals = Vec::with_capacity(n);
    let mut beta = vec![1.0; p];
    let mut t = vec![0.0; p];
    for _ in 0..n {
        if !params.degenerate_scores() {
            for k in 0..p {
                beta[k] = score_dists[k].sample(rng);
            }
        }
        let b2: f64 = beta.iter().map(|x| x * x).sum();
        let gb: f64 = beta.iter().zip(gamma).map(|(x, g)| x * g).sum();
        let bsum: f64 = beta.iter().sum();
        let scale = 1.0 / (tau + alpha * bsum + 1e-12);
        let mut failure = None;
        let mut psi2 = |w0: f64, t: &mut [f64]| {
            for k in 0..p {
                t[k] = 2.0 * w0 * beta[k];
            }
            match laplace_exponent_with(t, params, inner) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let weight = |w0: f64| (ln_ggp_log_density(w0, sigma, tau) - w0 * gb).exp();
        let self_loop = integrate_log_space(
            |w0| -(-w0 * w0 * b2).exp_m1() * weight(w0),
            0.0,
            f64::INFINITY,
            scale,
            outer,
        )?
        .value;
        let pairs = integrate_log_space(|w0| psi2(w0, &mut t) * weight(w0), 0.0, f64::INFINITY, scale, outer);
        let nodes = integrate_log_space(
            |w0| {
                let s = w0 * w0 * b2 + alpha * psi2(w0, &mut t);
                -(-s).exp_m1() * weight(w0)
            },
            0.0,
            f64::INFINITY,
            scale,
            outer,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        e_vals.push(alpha * self_loop + 0.5 * alpha * alpha * pairs?.value);
        n_vals.push(alpha * nodes?.value);
    }
    let (edges, edges_se) = mean_se(&e_vals);
    let (nodes, nodes_se) = mean_se(&n_vals);
    Ok(ExpectedCounts {
        edges,
        edges_se,
        nodes,
        nodes_se,
    })
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::gamma;

    fn ggp(s: f64, t: f64) -> GgpParams {
        GgpParams::new(s, t).unwrap()
    }

    #[test]
    fn density_values() {
        let v = ggp_levy_density(1.0, &ggp(0.0, 1.0)).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        let v = ggp_levy_density(1.0, &ggp(0.5, 0.0)).unwrap();
        assert!((v - 0.564_189_583_547_756_3).abs() < 1e-14);
        assert!(ggp_levy_density(0.0, &ggp(0.5, 1.0)).is_err());
        assert!(ggp_levy_density(-1.0, &ggp(0.5, 1.0)).is_err());
    }

    #[test]
    fn density_decays_beyond_mode() {
        let g = ggp(0.3, 1.0);
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let v = ggp_levy_density(i as f64 * 0.5, &g).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn tail_finite_activity_total_mass() {
        let g = ggp(-0.5, 1.0);
        let closed = gamma(0.5) / gamma(1.5); // tau^sigma Gamma(-sigma) / Gamma(1 - sigma)
        assert!((ggp_total_mass(&g) - closed).abs() < 1e-12);
        let near0 = tail_levy_intensity(1e-12, &g).unwrap();
        assert!((near0 / closed - 1.0).abs() < 1e-5, "{near0} vs {closed}");
    }

    #[test]
    fn tail_bounded_and_monotone() {
        let g = ggp(0.4, 1.0);
        let t10 = tail_levy_intensity(10.0, &g).unwrap();
        // envelope int_10^inf w^{-1-sigma} e^{-w} dw <= 10^{-1-sigma} e^{-10}
        assert!(t10 < 10f64.powf(-1.4) * (-10.0f64).exp());
        let xs = [1e-4, 1e-3, 0.01, 0.1, 1.0, 3.0];
        for w in xs.windows(2) {
            assert!(tail_levy_intensity(w[0], &g).unwrap() >= tail_levy_intensity(w[1], &g).unwrap());
        }
        // tau = 0: closed form x^{-sigma} / (sigma Gamma(1 - sigma))
        let s = ggp(0.5, 0.0);
        let v = tail_levy_intensity(0.01, &s).unwrap();
        assert!((v / (10.0 / (0.5 * gamma(0.5))) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn psi_zero_and_degenerate_closed_form() {
        let c = CcrmParams::degenerate(1, 0.5, 1.0).unwrap();
        assert_eq!(laplace_exponent(&[0.0], &c).unwrap(), 0.0);
        let v = laplace_exponent(&[1.0], &c).unwrap();
        assert!((v - 0.828_427_124_746_190_1).abs() < 1e-8);
        // sigma = 0: log(1 + t / tau)
        let g = CcrmParams::degenerate(1, 0.0, 2.0).unwrap();
        let v = laplace_exponent(&[3.0], &g).unwrap();
        assert!((v - (2.5f64).ln()).abs() < 1e-8);
        assert!(laplace_exponent(&[-1.0], &c).is_err());
    }

    #[test]
    fn psi_gamma_scores_matches_direct_two_dim_integral() {
        // p = 1 gamma scores, sigma = 0: psi(t) = int int (1 - e^{-t w0 beta}) f(beta) rho0(w0)
        // = int [1 - (1 + w0 t / b)^{-a}] rho0(w0) dw0, checked against nested quadrature.
        let c = CcrmParams::symmetric(1, 0.0, 1.0, 2.0, 3.0).unwrap();
        let v = laplace_exponent(&[1.5], &c).unwrap();
        let inner = |w0: f64| {
            crate::quadrature::integrate_log_space(
                |beta| {
                    let f = beta.powf(1.0) * (-3.0 * beta).exp() * 9.0; // b^a/Gamma(a) = 9
                    -(-1.5 * w0 * beta).exp_m1() * f * beta
                },
                0.0,
                f64::INFINITY,
                1.0,
                QuadOptions::default(),
            )
            .unwrap()
            .value
        };
        let direct = crate::quadrature::integrate_log_space(
            |w0| inner(w0) * (-w0).exp(),
            0.0,
            f64::INFINITY,
            1.0,
            QuadOptions {
                rel_tol: 1e-9,
                ..Default::default()
            },
        )
        .unwrap()
        .value;
        assert!((v / direct - 1.0).abs() < 1e-7, "{v} vs {direct}");
    }

    #[test]
    fn mgf_derivatives_match_finite_differences() {
        let c = CcrmParams::new(2, ggp(0.2, 1.0), vec![0.7, 1.3], vec![0.5, 2.0], vec![0.0, 0.0]).unwrap();
        let m = ScoreMgf::new(&c);
        let t = [-0.3, 0.4];
        let g = m.gradient(&t).unwrap();
        let h = m.hessian(&t).unwrap();
        let eps = 1e-5;
        for k in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[k] += eps;
            tm[k] -= eps;
            let fd = (m.value(&tp).unwrap() - m.value(&tm).unwrap()) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-7);
            let gp = m.gradient(&tp).unwrap();
            let gm = m.gradient(&tm).unwrap();
            for l in 0..2 {
                let fd = (gp[l] - gm[l]) / (2.0 * eps);
                assert!((fd - h[l * 2 + k]).abs() < 1e-6);
            }
        }
        assert_eq!(h[1], h[2]);
        assert!(m.value(&[0.6, 0.0]).is_err());
    }

    #[test]
    fn expected_edges_closed_form() {
        let c = CcrmParams::symmetric(2, 0.2, 1.0, 0.2, 0.5).unwrap();
        let v = expected_multigraph_edges(200.0, &c).unwrap();
        assert!((v - 13107.2).abs() < 1e-8);
        assert_eq!(expected_multigraph_edges(0.0, &c).unwrap(), 0.0);
        let stable = CcrmParams::symmetric(2, 0.2, 0.0, 0.2, 0.5).unwrap();
        assert!(matches!(
            expected_multigraph_edges(1.0, &stable),
            Err(Error::InfiniteMoment(_))
        ));
    }

    #[test]
    fn moment_quadrature_matches_closed_form() {
        for &(sigma, tau) in &[(0.2, 1.0), (-0.5, 2.0), (0.0, 0.7), (0.8, 1.5)] {
            let c = CcrmParams::new(
                3,
                ggp(sigma, tau),
                vec![0.2, 1.0, 3.0],
                vec![0.5, 2.0, 1.0],
                vec![0.0; 3],
            )
            .unwrap();
            let (mu, sig) = tilted_moments(&c, &[0.0; 3], 0.0, f64::INFINITY).unwrap();
            let first = tau.powf(sigma - 1.0);
            let second = (1.0 - sigma) * tau.powf(sigma - 2.0);
            for k in 0..3 {
                assert!((mu[k] / (c.score_mean(k) * first) - 1.0).abs() < 1e-8);
                for l in 0..3 {
                    let want = c.score_second_moment(k, l) * second;
                    assert!((sig[k * 3 + l] / want - 1.0).abs() < 1e-8, "{sigma} {k}{l}");
                }
            }
        }
    }

    #[test]
    fn tilted_edges_use_quadrature() {
        let c = CcrmParams::new(2, ggp(0.2, 1.0), vec![0.2, 0.2], vec![0.5, 0.5], vec![0.5, 0.0]).unwrap();
        let untilted = CcrmParams::symmetric(2, 0.2, 1.0, 0.2, 0.5).unwrap();
        let t = expected_multigraph_edges(50.0, &c).unwrap();
        let u = expected_multigraph_edges(50.0, &untilted).unwrap();
        assert!(t < u);
    }

    #[test]
    fn simple_counts_bounded_by_multigraph() {
        let c = CcrmParams::symmetric(2, 0.2, 1.0, 0.2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zero = expected_simple_edges_and_nodes(0.0, &c, 1000, &mut rng).unwrap();
        assert_eq!((zero.edges, zero.nodes), (0.0, 0.0));
        let e = expected_simple_edges_and_nodes(20.0, &c, 1000, &mut rng).unwrap();
        assert!(e.edges > 0.0 && e.nodes > 0.0);
        assert!(e.edges <= expected_multigraph_edges(20.0, &c).unwrap());
    }

    #[test]
    fn psi_monotone_and_concave_on_rays() {
        let c = CcrmParams::symmetric(2, 0.3, 1.0, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let dir = [rng.random::<f64>(), rng.random::<f64>()];
            let vals: Vec<f64> = (0..6)
                .map(|i| {
                    let s = i as f64 * 0.8;
                    laplace_exponent(&[s * dir[0], s * dir[1]], &c).unwrap()
                })
                .collect();
            for w in vals.windows(3) {
                assert!(w[1] >= w[0] - 1e-12);
                assert!(w[1] - w[0] >= w[2] - w[1] - 1e-9);
            }
        }
    }
}
