//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! Integrals over `w0 in (0, inf)` are taken in `x = ln w0`, where the
//! `w0^{-1-sigma}` endpoint singularity becomes an exponential tail.
//! Infinite ranges are mapped onto `(0, 1]` by `x = c ± (1 - t) / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

// Below this the integrands of interest are negligible and `w^{-sigma}` may overflow.
const TINY: f64 = 1e-280;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * half;
    if !value.is_finite() {
        return Err(Error::Domain(format!("non-finite integrand on [{a:e}, {b:e}]")));
    }
    let error = ((resk - resg) * half).abs();
    Ok((value, error))
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate_finite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let (value, error) = kronrod(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evals = 21;
    loop {
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval can no longer be split in floating point
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
                intervals: heap.len() + 1,
            });
        }
        let (v1, e1) = kronrod(&mut f, seg.a, mid)?;
        let (v2, e2) = kronrod(&mut f, mid, seg.b)?;
        evals += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Recompute the sums to shed accumulated rounding from the updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error, evals })
}

fn upper_half_line<F: FnMut(f64) -> f64>(mut f: F, a: f64, opts: QuadOptions) -> Result<QuadResult> {
    let g = move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let v = f(a + (1.0 - t) / t);
        if v == 0.0 {
            0.0
        } else {
            v / (t * t)
        }
    };
    integrate_finite(g, 0.0, 1.0, opts)
}

/// Integrate `f` over `[a, b]` where either endpoint may be infinite.
/// `center` is a finite point inside the range where the integrand has mass;
/// a doubly infinite range is split there.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, center: f64, opts: QuadOptions) -> Result<QuadResult> {
    assert!(a <= b, "integration bounds out of order");
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, opts),
        (true, false) => upper_half_line(f, a, opts),
        (false, true) => upper_half_line(move |x| f(-x), -b, opts),
        (false, false) => {
            let c = if center.is_finite() { center } else { 0.0 };
            // Split the tolerance budget between the two halves.
            let half_opts = QuadOptions {
                abs_tol: 0.5 * opts.abs_tol,
                ..opts
            };
            let left = upper_half_line(|x| f(-x), -c, half_opts)?;
            let right = upper_half_line(&mut f, c, half_opts)?;
            let value = left.value + right.value;
            let error = left.error + right.error;
            if error > opts.abs_tol.max(opts.rel_tol * value.abs()) {
                return Err(Error::Quadrature {
                    estimate: value,
                    error,
                    intervals: 0,
                });
            }
            Ok(QuadResult {
                value,
                error,
                evals: left.evals + right.evals,
            })
        }
    }
}

/// Integrate over `w0 in (lower, upper)`, `0 <= lower < upper <= inf`, in the
/// variable `x = ln w0`. `g` receives `w0` and must return the integrand
/// already multiplied by the Jacobian `w0`, so that factors like
/// `w0^{-1-sigma}` can be combined in log space before exponentiating.
/// `scale` is a typical magnitude of `w0`.
pub fn integrate_log_space<F: FnMut(f64) -> f64>(
    mut g: F,
    lower: f64,
    upper: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let xa = if lower > 0.0 { lower.ln() } else { f64::NEG_INFINITY };
    let xb = upper.ln();
    if xa >= xb {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let mut c = if scale > 0.0 && scale.is_finite() {
        scale.ln()
    } else {
        0.0
    };
    if xb.is_finite() {
        c = c.min(xb - 1.0);
    }
    if xa.is_finite() {
        c = c.max(xa + 1.0);
    }
    let h = move |x: f64| {
        let w = x.exp();
        if w < TINY || !w.is_finite() {
            return 0.0;
        }
        g(w)
    };
    integrate(h, xa, xb, c, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        // K21 integrates degree 31 exactly on a single panel.
        let r = integrate_finite(|x| x.powi(30) + 3.0 * x.powi(7), -1.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 2.0 / 31.0).abs() < 1e-14, "{}", r.value);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let sk: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let sg: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((sk - 2.0).abs() < 1e-14);
        assert!((sg - 2.0).abs() < 1e-14);
    }

    #[test]
    fn infinite_ranges() {
        let opts = QuadOptions::default();
        let r = integrate(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 0.0, opts).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, 0.0, opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_space_gamma_integral() {
        // int_0^inf w^{-0.5} e^{-w} dw = Gamma(0.5) = sqrt(pi)
        let r = integrate_log_space(
            |w| w.powf(0.5) * (-w).exp(),
            0.0,
            f64::INFINITY,
            1.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value / std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reports_nonconvergence() {
        let opts = QuadOptions {
            max_intervals: 3,
            ..Default::default()
        };
        let r = integrate_finite(|x| (1.0 / x).sin(), 1e-6, 1.0, opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
