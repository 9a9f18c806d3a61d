//! Adaptive Gauss–Kronrod quadrature on the half-line.
//!
//! Every integral over a subinterval of `(0, ∞)` is computed in the variable
//! `x = ln t`, where the power-log integrands of this crate are smooth. Panels
//! are bisected worst-first using the difference between the 15-point Kronrod
//! and the embedded 7-point Gauss rule as the panel error. Integrals that reach
//! the origin or infinity are truncated only where an explicit bound
//! ([`OriginBound`], [`TailEnvelope`]) certifies the discarded mass, and that
//! mass is added to the reported error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_panels: 20_000,
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadSpec {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_panels == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature tolerances must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// A computed integral together with its error estimate.
///
/// A divergent integral is represented by `value = +∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
    };

    pub fn exact(value: f64) -> Self {
        Integral { value, error: 0.0 }
    }

    pub fn divergent() -> Self {
        Integral {
            value: f64::INFINITY,
            error: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn scale(self, c: f64) -> Self {
        Integral {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::iter::Sum for Integral {
    fn sum<I: Iterator<Item = Integral>>(iter: I) -> Integral {
        iter.fold(Integral::ZERO, |a, b| a + b)
    }
}

/// `|f(t)| <= coeff * t^power` for `0 < t <= upto`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginBound {
    pub coeff: f64,
    pub power: f64,
    pub upto: f64,
}

impl OriginBound {
    pub fn new(coeff: f64, power: f64, upto: f64) -> Self {
        OriginBound { coeff, power, upto }
    }

    /// Bound for `t^gamma f(t)`.
    pub fn shift(self, gamma: f64) -> Self {
        OriginBound {
            power: self.power + gamma,
            ..self
        }
    }

    pub fn times(self, other: OriginBound) -> Self {
        OriginBound {
            coeff: self.coeff * other.coeff,
            power: self.power + other.power,
            upto: self.upto.min(other.upto),
        }
    }

    pub fn scale(self, c: f64) -> Self {
        OriginBound {
            coeff: self.coeff * c.abs(),
            ..self
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * t.powf(self.power)
    }
}

/// `|f(t)| <= coeff * t^(-decay)` for `t >= from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEnvelope {
    pub coeff: f64,
    pub decay: f64,
    pub from: f64,
}

impl TailEnvelope {
    pub fn new(coeff: f64, decay: f64, from: f64) -> Self {
        TailEnvelope { coeff, decay, from }
    }

    /// Envelope for `t^gamma f(t)`.
    pub fn shift(self, gamma: f64) -> Self {
        TailEnvelope {
            decay: self.decay - gamma,
            ..self
        }
    }

    pub fn times(self, other: TailEnvelope) -> Self {
        TailEnvelope {
            coeff: self.coeff * other.coeff,
            decay: self.decay + other.decay,
            from: self.from.max(other.from),
        }
    }

    pub fn scale(self, c: f64) -> Self {
        TailEnvelope {
            coeff: self.coeff * c.abs(),
            ..self
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * t.powf(-self.decay)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 7/15-point Gauss–Kronrod panel. Returns `(kronrod, |kronrod - gauss|)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive quadrature of `f` over the union of the given finite panels.
///
/// `extra_error` is an already-committed error (e.g. truncation) that counts
/// against the tolerance.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    initial: &[(f64, f64)],
    extra_error: f64,
    q: &QuadSpec,
) -> Result<Integral> {
    let mut heap = BinaryHeap::with_capacity(initial.len() * 4);
    let mut value = 0.0;
    let mut error = 0.0;
    for &(a, b) in initial {
        if !(b > a) {
            continue;
        }
        let (v, e) = gk15(f, a, b);
        if !v.is_finite() {
            return Err(Error::Divergent(format!(
                "integrand not finite on panel [{a:e}, {b:e}]"
            )));
        }
        value += v;
        error += e;
        heap.push(Panel { a, b, value: v, error: e });
    }
    let mut panels = heap.len();
    while error + extra_error > q.target(value) {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || panels >= q.max_panels {
            return Err(Error::NonConvergent {
                panels,
                error: error + extra_error,
            });
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Divergent(format!(
                "integrand not finite near {mid:e}"
            )));
        }
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
        // Recompute from scratch now and then to shed accumulated round-off.
        if panels % 512 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(Integral {
        value,
        error: error + extra_error,
    })
}

/// Splits `[a, b]` at `cuts` and into panels no wider than `max_width`.
pub(crate) fn panels_between(a: f64, b: f64, cuts: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    let mut nodes: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    nodes.push(b);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut out = Vec::new();
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let n = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        for i in 0..n {
            let s = lo + step * i as f64;
            let e = if i + 1 == n { hi } else { s + step };
            out.push((s, e));
        }
    }
    out
}

/// `∫_a^b f(t) dt` over `0 <= a < b <= ∞`, computed in `x = ln t`.
///
/// `breaks` are known kinks of `f` used to seed panels. An origin bound is
/// required when `a == 0`, a tail envelope when `b == ∞`.
pub fn quad_log<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    origin: Option<OriginBound>,
    tail: Option<TailEnvelope>,
    q: &QuadSpec,
) -> Result<Integral> {
    if !(a >= 0.0) || !(b > a) {
        if a == b {
            return Ok(Integral::ZERO);
        }
        return Err(Error::InvalidArgument(format!(
            "integration bounds must satisfy 0 <= a < b, got [{a}, {b}]"
        )));
    }
    let mut trunc = 0.0;
    let budget = q.abs_tol / 4.0;

    let lo = if a > 0.0 {
        a
    } else {
        let bound = origin.ok_or(Error::MissingOriginBound)?;
        if !(bound.power > -1.0) {
            return Err(Error::MissingOriginBound);
        }
        let e1 = bound.power + 1.0;
        let mut t_lo = bound.upto.min(b);
        if bound.coeff > 0.0 {
            let cut = (budget * e1 / bound.coeff).powf(1.0 / e1);
            if cut < t_lo {
                t_lo = cut;
            }
        }
        // Keep the lower limit representable after the log substitution.
        t_lo = t_lo.max(f64::MIN_POSITIVE * 1e10);
        trunc += bound.coeff * t_lo.powf(e1) / e1;
        t_lo
    };

    let hi = if b.is_finite() {
        b
    } else {
        let env = tail.ok_or(Error::MissingEnvelope)?;
        if !(env.decay > 1.0) {
            return Err(Error::MissingEnvelope);
        }
        let d1 = env.decay - 1.0;
        let mut t_hi = env.from.max(lo);
        if env.coeff > 0.0 {
            let cut = (env.coeff / (d1 * budget)).powf(1.0 / d1);
            if cut > t_hi {
                t_hi = cut;
            }
        }
        t_hi = t_hi.min(f64::MAX / 1e10);
        trunc += env.coeff * t_hi.powf(-d1) / d1;
        t_hi
    };

    if !(hi > lo) {
        return Ok(Integral {
            value: 0.0,
            error: trunc,
        });
    }

    let (xa, xb) = (lo.ln(), hi.ln());
    let cuts: Vec<f64> = breaks
        .iter()
        .filter(|&&t| t > lo && t < hi)
        .map(|t| t.ln())
        .collect();
    let panels = panels_between(xa, xb, &cuts, 2.0);
    let g = |x: f64| {
        let t = x.exp();
        let v = f(t);
        if v == 0.0 {
            0.0
        } else {
            v * t
        }
    };
    adaptive(&g, &panels, trunc, q)
}

/// `∫_a^b f` over a finite interval in the original variable.
pub fn quad_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], q: &QuadSpec) -> Result<Integral> {
    if a == b {
        return Ok(Integral::ZERO);
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidArgument(format!(
            "finite quadrature needs a < b, got [{a}, {b}]"
        )));
    }
    let panels = panels_between(a, b, breaks, f64::INFINITY);
    adaptive(&f, &panels, 0.0, q)
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn polynomial_is_exact() {
        let q = QuadSpec::default();
        let r = quad_finite(|x| x * x * x - 2.0 * x, 0.0, 3.0, &[], &q).unwrap();
        assert!((r.value - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_tail() {
        let q = QuadSpec::default();
        let env = TailEnvelope::new(1.0, 2.0, 1.0);
        let r = quad_log(|t| t.powi(-2), 1.0, f64::INFINITY, &[], None, Some(env), &q).unwrap();
        assert!(rel(r.value, 1.0) < 1e-9, "{r:?}");
        assert!(r.error < 1e-8);
    }

    #[test]
    fn missing_envelope_is_an_error() {
        let q = QuadSpec::default();
        let err = quad_log(|t| t.powi(-2), 1.0, f64::INFINITY, &[], None, None, &q).unwrap_err();
        assert_eq!(err, Error::MissingEnvelope);
        let err = quad_log(|t| t, 0.0, 1.0, &[], None, None, &q).unwrap_err();
        assert_eq!(err, Error::MissingOriginBound);
    }

    #[test]
    fn origin_singularity_with_bound() {
        // ∫_0^1 t^{-1/2} = 2
        let q = QuadSpec::default();
        let b = OriginBound::new(1.0, -0.5, 1.0);
        let r = quad_log(|t| t.powf(-0.5), 0.0, 1.0, &[], Some(b), None, &q).unwrap();
        assert!(rel(r.value, 2.0) < 1e-9, "{r:?}");
    }

    #[test]
    fn panel_cap_reports_non_convergence() {
        let q = QuadSpec {
            max_panels: 3,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let r = quad_finite(|x: f64| (1.0 / (x + 1e-6)).sin(), 0.0, 1.0, &[], &q);
        assert!(matches!(r, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}
