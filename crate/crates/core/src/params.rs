//! Hyperparameters of the generalized gamma base measure, the gamma score
//! distribution, and the priors placed on them during inference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(sigma, tau)` of a generalized gamma process Lévy measure
/// `w^{-1-sigma} e^{-tau w} / Gamma(1 - sigma)`.
///
/// Admissible pairs are `sigma in (0, 1)` with `tau >= 0`, or `sigma <= 0`
/// with `tau > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGgp", into = "RawGgp")]
pub struct GgpParams {
    sigma: f64,
    tau: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGgp {
    sigma: f64,
    tau: f64,
}

impl TryFrom<RawGgp> for GgpParams {
    type Error = Error;
    fn try_from(raw: RawGgp) -> Result<Self> {
        GgpParams::new(raw.sigma, raw.tau)
    }
}

impl From<GgpParams> for RawGgp {
    fn from(p: GgpParams) -> Self {
        RawGgp {
            sigma: p.sigma,
            tau: p.tau,
        }
    }
}

impl GgpParams {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        if !sigma.is_finite() || !tau.is_finite() {
            return Err(Error::invalid("sigma/tau", "must be finite"));
        }
        if sigma >= 1.0 {
            return Err(Error::invalid("sigma", format!("{sigma} must be < 1")));
        }
        if sigma > 0.0 {
            if tau < 0.0 {
                return Err(Error::invalid("tau", format!("{tau} must be >= 0 when sigma > 0")));
            }
        } else if tau <= 0.0 {
            return Err(Error::invalid("tau", format!("{tau} must be > 0 when sigma <= 0")));
        }
        Ok(GgpParams { sigma, tau })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `true` when the Lévy measure has infinite total mass (`sigma >= 0`).
    pub fn is_infinite_activity(&self) -> bool {
        self.sigma >= 0.0
    }
}

/// Parameters of the compound CRM with independent gamma scores and a
/// generalized gamma base measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCcrm", into = "RawCcrm")]
pub struct CcrmParams {
    p: usize,
    base: GgpParams,
    a: Vec<f64>,
    b: Vec<f64>,
    gamma_tilt: Vec<f64>,
    degenerate_scores: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCcrm {
    p: usize,
    sigma: f64,
    tau: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default)]
    gamma: Option<Vec<f64>>,
    #[serde(default)]
    degenerate_scores: bool,
}

impl TryFrom<RawCcrm> for CcrmParams {
    type Error = Error;
    fn try_from(raw: RawCcrm) -> Result<Self> {
        let base = GgpParams::new(raw.sigma, raw.tau)?;
        let gamma = raw.gamma.unwrap_or_else(|| vec![0.0; raw.p]);
        CcrmParams::new(raw.p, base, raw.a, raw.b, gamma).map(|c| c.with_degenerate_scores(raw.degenerate_scores))
    }
}

impl From<CcrmParams> for RawCcrm {
    fn from(c: CcrmParams) -> Self {
        RawCcrm {
            p: c.p,
            sigma: c.base.sigma,
            tau: c.base.tau,
            a: c.a,
            b: c.b,
            gamma: Some(c.gamma_tilt),
            degenerate_scores: c.degenerate_scores,
        }
    }
}

impl CcrmParams {
    pub fn new(p: usize, base: GgpParams, a: Vec<f64>, b: Vec<f64>, gamma_tilt: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "number of communities must be positive"));
        }
        for (name, v) in [("a", &a), ("b", &b), ("gamma", &gamma_tilt)] {
            if v.len() != p {
                return Err(Error::invalid(name, format!("expected {p} entries, got {}", v.len())));
            }
        }
        if let Some(x) = a.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::invalid("a", format!("shape {x} must be > 0")));
        }
        if let Some(x) = b.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::invalid("b", format!("rate {x} must be > 0")));
        }
        if let Some(x) = gamma_tilt.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::invalid("gamma", format!("tilt {x} must be >= 0")));
        }
        Ok(CcrmParams {
            p,
            base,
            a,
            b,
            gamma_tilt,
            degenerate_scores: false,
        })
    }

    /// Same `a_k`, `b_k` for every community and no tilting.
    pub fn symmetric(p: usize, sigma: f64, tau: f64, a: f64, b: f64) -> Result<Self> {
        CcrmParams::new(p, GgpParams::new(sigma, tau)?, vec![a; p], vec![b; p], vec![0.0; p])
    }

    /// Scores fixed at one: every `w_ik` equals `w_i0`. With `p = 1` this is the
    /// single-sociability GGP graph model.
    pub fn degenerate(p: usize, sigma: f64, tau: f64) -> Result<Self> {
        Ok(CcrmParams::symmetric(p, sigma, tau, 1.0, 1.0)?.with_degenerate_scores(true))
    }

    pub fn with_degenerate_scores(mut self, on: bool) -> Self {
        self.degenerate_scores = on;
        self
    }

    pub fn with_base(&self, base: GgpParams) -> Self {
        CcrmParams { base, ..self.clone() }
    }

    /// Replace the score hyperparameters, keeping `p`, base and tilts.
    pub fn with_scores(&self, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        CcrmParams::new(self.p, self.base, a, b, self.gamma_tilt.clone())
            .map(|c| c.with_degenerate_scores(self.degenerate_scores))
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }
    #[inline]
    pub fn base(&self) -> GgpParams {
        self.base
    }
    #[inline]
    pub fn sigma(&self) -> f64 {
        self.base.sigma
    }
    #[inline]
    pub fn tau(&self) -> f64 {
        self.base.tau
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn gamma_tilt(&self) -> &[f64] {
        &self.gamma_tilt
    }
    pub fn degenerate_scores(&self) -> bool {
        self.degenerate_scores
    }

    /// `E[beta_k]` under the score distribution.
    pub fn score_mean(&self, k: usize) -> f64 {
        if self.degenerate_scores {
            1.0
        } else {
            self.a[k] / self.b[k]
        }
    }

    /// `E[beta_k beta_l]` under the score distribution.
    pub fn score_second_moment(&self, k: usize, l: usize) -> f64 {
        if self.degenerate_scores {
            return 1.0;
        }
        let mut m = self.score_mean(k) * self.score_mean(l);
        if k == l {
            m += self.a[k] / (self.b[k] * self.b[k]);
        }
        m
    }
}

/// A `Gamma(shape, rate)` prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub const VAGUE: GammaPrior = GammaPrior {
        shape: 0.01,
        rate: 0.01,
    };

    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        let g = GammaPrior { shape, rate };
        g.validate("prior")?;
        Ok(g)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(Error::invalid(format!("{field}.shape"), "must be > 0"));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::invalid(format!("{field}.rate"), "must be > 0"));
        }
        Ok(())
    }

    /// Log density at `x > 0`, up to the normalizing constant.
    pub fn ln_density_unnorm(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }

    /// Log density of `log x` when `x` has this prior, up to a constant.
    pub fn ln_density_of_log(&self, x: f64) -> f64 {
        self.shape * x.ln() - self.rate * x
    }
}

/// Which hyperparameters are sampled; the rest are held at their values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreeFlags {
    pub alpha: bool,
    pub sigma: bool,
    pub tau: bool,
    pub a: bool,
    pub b: bool,
}

impl Default for FreeFlags {
    fn default() -> Self {
        FreeFlags {
            alpha: true,
            sigma: true,
            tau: true,
            a: true,
            b: false,
        }
    }
}

/// Priors on `alpha`, `1 - sigma`, `tau`, `a_k`, `b_k` (shared across
/// communities) and the free/fixed flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperpriors {
    pub alpha: GammaPrior,
    pub one_minus_sigma: GammaPrior,
    pub tau: GammaPrior,
    pub a: GammaPrior,
    pub b: GammaPrior,
    pub free: FreeFlags,
}

impl Default for Hyperpriors {
    fn default() -> Self {
        Hyperpriors {
            alpha: GammaPrior::VAGUE,
            one_minus_sigma: GammaPrior::VAGUE,
            tau: GammaPrior::VAGUE,
            a: GammaPrior::VAGUE,
            b: GammaPrior::VAGUE,
            free: FreeFlags::default(),
        }
    }
}

impl Hyperpriors {
    pub fn validate(&self) -> Result<()> {
        self.alpha.validate("hyperpriors.alpha")?;
        self.one_minus_sigma.validate("hyperpriors.one_minus_sigma")?;
        self.tau.validate("hyperpriors.tau")?;
        self.a.validate("hyperpriors.a")?;
        self.b.validate("hyperpriors.b")?;
        Ok(())
    }

    /// Everything clamped.
    pub fn all_fixed(self) -> Self {
        Hyperpriors {
            free: FreeFlags {
                alpha: false,
                sigma: false,
                tau: false,
                a: false,
                b: false,
            },
            ..self
        }
    }
}
