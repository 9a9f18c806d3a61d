//! Radial step functions on ℝⁿ (n = 1 or 3), their closed-form Fourier
//! transforms and empirical checks of Fourier norm inequalities.
//!
//! The transform is normalized as `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`, so the
//! ball indicator has `χ̂_{B_r}(ξ) = r^n J_{n/2}(2πr|ξ|) / (r|ξ|)^{n/2}`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalfn::{EvalFn, Monotone};
use crate::norms::Norm;
use crate::quad::{golden_max, QuadSpec, TailEnvelope};
use crate::step::StepFn;

/// Volume of the unit ball.
pub fn unit_ball_volume(n: u32) -> Result<f64> {
    match n {
        1 => Ok(2.0),
        3 => Ok(4.0 * PI / 3.0),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// `Σ c_j χ_{B_{r_j}}` with suffix sums of `c` nonnegative, so the function
/// is nonnegative and radially nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadialRaw", into = "RadialRaw")]
pub struct RadialStep {
    n: u32,
    radii: Vec<f64>,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadialRaw {
    n: u32,
    radii: Vec<f64>,
    coeffs: Vec<f64>,
}

impl TryFrom<RadialRaw> for RadialStep {
    type Error = Error;
    fn try_from(r: RadialRaw) -> Result<Self> {
        RadialStep::new(r.n, r.radii, r.coeffs)
    }
}

impl From<RadialStep> for RadialRaw {
    fn from(r: RadialStep) -> Self {
        RadialRaw {
            n: r.n,
            radii: r.radii,
            coeffs: r.coeffs,
        }
    }
}

impl RadialStep {
    pub fn new(n: u32, radii: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        unit_ball_volume(n)?;
        if radii.is_empty() || radii.len() != coeffs.len() {
            return Err(Error::InvalidArgument(format!(
                "need equally many radii and coefficients, got {} and {}",
                radii.len(),
                coeffs.len()
            )));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        let mut s = 0.0;
        for c in coeffs.iter().rev() {
            s += c;
            if s < 0.0 {
                return Err(Error::InvalidArgument(
                    "suffix sums of the coefficients must be nonnegative".into(),
                ));
            }
        }
        Ok(RadialStep { n, radii, coeffs })
    }

    /// The indicator of the ball of radius `r`.
    pub fn ball(n: u32, r: f64) -> Result<Self> {
        Self::new(n, vec![r], vec![1.0])
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `f(λx)`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n, self.radii.iter().map(|r| r / lambda).collect(), self.coeffs.clone())
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(self.n, self.radii.clone(), self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Radial profile `g(|x|)`.
    pub fn profile(&self, r: f64) -> f64 {
        self.radii
            .iter()
            .zip(&self.coeffs)
            .filter(|(rj, _)| r < **rj)
            .map(|(_, c)| c)
            .sum()
    }

    /// `∫ f`.
    pub fn integral(&self) -> f64 {
        let nu = unit_ball_volume(self.n).expect("validated");
        self.radii
            .iter()
            .zip(&self.coeffs)
            .map(|(r, c)| c * nu * r.powi(self.n as i32))
            .sum()
    }

    fn max_radius(&self) -> f64 {
        *self.radii.last().expect("nonempty")
    }
}

/// `f*(t) = g((t/ν_n)^{1/n})`: a step function with breaks at the ball
/// volumes `ν_n r_j^n`.
pub fn radial_rearrange(f: &RadialStep) -> Result<StepFn> {
    let nu = unit_ball_volume(f.n)?;
    let breaks: Vec<f64> = f.radii.iter().map(|r| nu * r.powi(f.n as i32)).collect();
    let mut values = Vec::with_capacity(breaks.len() + 1);
    let mut s: f64 = f.coeffs.iter().sum();
    for c in &f.coeffs {
        values.push(s.max(0.0));
        s -= c;
    }
    values.push(0.0);
    StepFn::new(breaks, values)
}

/// `(2π)^{n/2} J_{n/2}(s) / s^{n/2}`, so that `χ̂_{B_r}(ξ) = r^n K(2πrξ)`.
fn kernel(n: u32, s: f64) -> f64 {
    match n {
        1 => {
            if s < 1e-4 {
                2.0 * (1.0 - s * s / 6.0)
            } else {
                2.0 * s.sin() / s
            }
        }
        _ => {
            // (sin s - s cos s)/s³ loses ~1/s² digits to cancellation; the
            // series is exact to rounding below 0.5.
            if s < 0.5 {
                let s2 = s * s;
                let mut term = 1.0;
                let mut sum = 0.0;
                // Σ (-1)^k (2k+2) s^{2k} / (2k+3)!
                let mut fact = 6.0;
                for k in 0..12 {
                    sum += term * (2 * k + 2) as f64 / fact;
                    term *= -s2;
                    fact *= ((2 * k + 4) * (2 * k + 5)) as f64;
                }
                4.0 * PI * sum
            } else {
                4.0 * PI * (s.sin() - s * s.cos()) / (s * s * s)
            }
        }
    }
}

/// `J_{n/2}(s) / s^{n/2}`.
pub fn bessel_ratio(n: u32, s: f64) -> Result<f64> {
    unit_ball_volume(n)?;
    Ok(kernel(n, s) / (2.0 * PI).powf(n as f64 / 2.0))
}

/// `f̂` along rays together with its decay envelope `|f̂(ξ)| <= A ξ^{-(n+1)/2}`.
#[derive(Debug, Clone)]
pub struct TransformProfile {
    f: RadialStep,
    /// Envelope coefficient (with a 2× safety factor) and the frequency from
    /// which it is valid.
    pub envelope: TailEnvelope,
}

impl TransformProfile {
    pub fn eval(&self, xi: f64) -> f64 {
        let n = self.f.n;
        self.f
            .radii
            .iter()
            .zip(&self.f.coeffs)
            .map(|(r, c)| c * r.powi(n as i32) * kernel(n, 2.0 * PI * r * xi.abs()))
            .sum()
    }

    pub fn to_evalfn(&self) -> EvalFn {
        let me = self.clone();
        EvalFn::new(move |x| me.eval(x).abs(), Monotone::None).with_envelope(self.envelope)
    }

    fn decay(&self) -> f64 {
        self.envelope.decay
    }

    /// Measure of `{|ξ| > Ξ}` weighted by the envelope squared.
    fn l2_tail(&self, window: f64) -> f64 {
        let a = self.envelope.coeff;
        match self.f.n {
            1 => 2.0 * a * a / window,
            _ => 4.0 * PI * a * a / window,
        }
    }

    /// `∫_0^t e*` for the envelope restricted to `|ξ| > Ξ`.
    fn l1_tail(&self, window: f64, t: f64) -> f64 {
        let a = self.envelope.coeff;
        match self.f.n {
            1 => 2.0 * a * (1.0 + t / (2.0 * window)).ln(),
            _ => {
                let xi_t = (window.powi(3) + 3.0 * t / (4.0 * PI)).cbrt();
                4.0 * PI * a * (xi_t - window)
            }
        }
    }
}

/// `f̂` in closed form.
pub fn transform(f: &RadialStep) -> Result<TransformProfile> {
    let n = f.n;
    unit_ball_volume(n)?;
    // |sin s / s| <= 1/s and |sin s - s cos s| / s³ <= 2/s² for s >= 1.
    let (coeff, decay, from) = match n {
        1 => (f.coeffs.iter().map(|c| c.abs()).sum::<f64>() / PI, 1.0, 0.0),
        _ => (
            f.radii.iter().zip(&f.coeffs).map(|(r, c)| c.abs() * r).sum::<f64>() * 2.0 / PI,
            2.0,
            1.0 / (2.0 * PI * f.radii[0]),
        ),
    };
    Ok(TransformProfile {
        f: f.clone(),
        envelope: TailEnvelope::new(2.0 * coeff, decay, from),
    })
}

/// Sampling settings for rearranging `|f̂|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RearrangeSpec {
    /// Frequency cap; defaults to `1000 m / max r_j`.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "RearrangeSpec::default_samples")]
    pub samples: usize,
    /// Largest tolerated ratio of the `L_2` tail bound to `∫ f²`.
    #[serde(default = "RearrangeSpec::default_tail_tol")]
    pub tail_tol: f64,
}

impl RearrangeSpec {
    fn default_samples() -> usize {
        1 << 16
    }
    fn default_tail_tol() -> f64 {
        1e-2
    }
}

impl Default for RearrangeSpec {
    fn default() -> Self {
        RearrangeSpec {
            window: None,
            samples: Self::default_samples(),
            tail_tol: Self::default_tail_tol(),
        }
    }
}

/// Approximate `(f̂)*` with lower and upper companions from the cell-wise
/// extremes of the samples. The upper side additionally carries the
/// contribution of `|ξ| > Ξ` through the envelope.
#[derive(Debug, Clone)]
pub struct RearrangedTransform {
    pub mid: StepFn,
    pub lower: StepFn,
    pub upper: StepFn,
    pub window: f64,
    profile: TransformProfile,
    mid_sq: StepFn,
    lower_sq: StepFn,
    upper_sq: StepFn,
}

impl RearrangedTransform {
    /// `∫_0^t ((f̂)*)²` as `(estimate, lower, upper)`.
    pub fn sq_integral(&self, t: f64) -> (f64, f64, f64) {
        (
            self.mid_sq.integral_to(t),
            self.lower_sq.integral_to(t),
            self.upper_sq.integral_to(t) + self.profile.l2_tail(self.window).min(t * self.tail_level().powi(2)),
        )
    }

    /// `∫_0^t (f̂)*` as `(estimate, lower, upper)`.
    pub fn integral(&self, t: f64) -> (f64, f64, f64) {
        (
            self.mid.integral_to(t),
            self.lower.integral_to(t),
            self.upper.integral_to(t) + self.profile.l1_tail(self.window, t).min(t * self.tail_level()),
        )
    }

    /// The level below which the window no longer determines `(f̂)*`.
    pub fn tail_level(&self) -> f64 {
        self.profile.envelope.coeff * self.window.powf(-self.profile.decay())
    }

    /// Averages `mid` over geometric bins in `t` (`per_decade` per decade).
    /// Integrals over bin-aligned intervals are preserved.
    pub fn coarse(&self, per_decade: usize) -> Result<StepFn> {
        let (b, v) = (self.mid.breakpoints(), self.mid.values());
        let Some(&last) = b.last() else {
            return Ok(self.mid.clone());
        };
        let first = b[0];
        let ratio = 10f64.powf(1.0 / per_decade as f64);
        let mut edges = vec![first];
        while *edges.last().unwrap() < last {
            edges.push(edges.last().unwrap() * ratio);
        }
        *edges.last_mut().unwrap() = last;
        let mut values = vec![v[0]];
        for w in edges.windows(2) {
            values.push(self.mid.integral_between(w[0], w[1]) / (w[1] - w[0]));
        }
        values.push(0.0);
        StepFn::new(edges, values)
    }
}

fn shell_measure(n: u32, a: f64, b: f64) -> f64 {
    match n {
        1 => 2.0 * (b - a),
        _ => 4.0 * PI / 3.0 * (b.powi(3) - a.powi(3)),
    }
}

/// Node of a cell that cancels the first-order error of the shell weight.
fn shell_centroid(n: u32, a: f64, b: f64) -> f64 {
    match n {
        1 => 0.5 * (a + b),
        _ => 0.75 * (b.powi(4) - a.powi(4)) / (b.powi(3) - a.powi(3)),
    }
}

/// Rearranges `(values, measures)` cells into a nonincreasing step function.
fn rearrange_cells(mut cells: Vec<(f64, f64)>) -> Result<StepFn> {
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut breaks = Vec::with_capacity(cells.len());
    let mut values = Vec::with_capacity(cells.len() + 1);
    let mut acc = 0.0;
    for (v, m) in cells {
        if m <= 0.0 {
            continue;
        }
        values.push(v);
        acc += m;
        breaks.push(acc);
    }
    values.push(0.0);
    StepFn::new(breaks, values)
}

/// Samples `|f̂|` on `N` cells of `[0, Ξ]` and rearranges using shell
/// measures.
pub fn rearrange_transform(f: &RadialStep, spec: &RearrangeSpec) -> Result<RearrangedTransform> {
    let profile = transform(f)?;
    let n = f.n;
    let window = spec
        .window
        .unwrap_or(1000.0 * f.radii.len() as f64 / f.max_radius());
    let cells_n = spec.samples.max(2);
    if window < profile.envelope.from {
        return Err(Error::WeakEnvelope {
            bound: f64::INFINITY,
            requested: spec.tail_tol,
            suggested_window: profile.envelope.from * 10.0,
        });
    }
    let energy: f64 = radial_rearrange(f)?.powf(2.0).integral();
    let tail = profile.l2_tail(window);
    if tail > spec.tail_tol * energy {
        return Err(Error::WeakEnvelope {
            bound: tail / energy,
            requested: spec.tail_tol,
            suggested_window: window * tail / (spec.tail_tol * energy),
        });
    }
    let h = window / cells_n as f64;
    let edge: Vec<f64> = (0..=cells_n)
        .into_par_iter()
        .map(|i| profile.eval(i as f64 * h).abs())
        .collect();
    let cells: Vec<(f64, f64, f64, f64)> = (0..cells_n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let m = profile.eval(shell_centroid(n, a, b)).abs();
            let lo = m.min(edge[i]).min(edge[i + 1]);
            let hi = m.max(edge[i]).max(edge[i + 1]);
            (m, lo, hi, shell_measure(n, a, b))
        })
        .collect();
    let mid = rearrange_cells(cells.iter().map(|c| (c.0, c.3)).collect())?;
    let lower = rearrange_cells(cells.iter().map(|c| (c.1, c.3)).collect())?;
    let upper = rearrange_cells(cells.iter().map(|c| (c.2, c.3)).collect())?;
    Ok(RearrangedTransform {
        mid_sq: mid.powf(2.0),
        lower_sq: lower.powf(2.0),
        upper_sq: upper.powf(2.0),
        mid,
        lower,
        upper,
        window,
        profile,
    })
}

/// `∫_0^t (U f*)(s)² ds` in closed form, with `(Uf*)(s) = ∫_0^{1/s} f*`.
pub fn u_square_integral(fstar: &StepFn, t: f64) -> f64 {
    // On s ∈ [1/hi, 1/lo], (Uf*)(s) = a + b/s with b the value on (lo, hi).
    let mut acc = 0.0;
    let mut prim = 0.0;
    for (lo, hi, v) in fstar.pieces() {
        let (a, b) = (prim - v * lo, v);
        let s0 = if hi.is_finite() { 1.0 / hi } else { 0.0 };
        let s1 = if lo > 0.0 { (1.0 / lo).min(t) } else { t };
        if s1 > s0 {
            let mut part = a * a * (s1 - s0);
            if b != 0.0 {
                part += 2.0 * a * b * (s1 / s0).ln() + b * b * (1.0 / s0 - 1.0 / s1);
            }
            acc += part;
        }
        if hi.is_finite() {
            prim += v * (hi - lo);
        }
    }
    acc
}

/// Ratio of one sample: best estimate and band, and the maximizing `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRatio {
    pub index: usize,
    #[serde(with = "crate::serde_ext")]
    pub c: f64,
    #[serde(with = "crate::serde_ext")]
    pub c_lower: f64,
    #[serde(with = "crate::serde_ext")]
    pub c_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub witness: f64,
}

/// Default `t` grid: `τ / V` for `τ ∈ [1e-3, 1e3]`, 10 points per decade,
/// with `V` the volume of the largest ball.
pub fn default_t_grid(f: &RadialStep) -> Vec<f64> {
    let v = unit_ball_volume(f.n).expect("validated") * f.max_radius().powi(f.n as i32);
    (0..=60).map(|i| 10f64.powf(-3.0 + i as f64 / 10.0) / v).collect()
}

/// `∫_0^t ((f̂)*)² <= C ∫_0^t (Uf*)²`: ratios on `t_grid`.
pub fn jt_ratios(f: &RadialStep, t_grid: &[f64], spec: &RearrangeSpec) -> Result<Vec<(f64, f64, f64, f64)>> {
    let r = rearrange_transform(f, spec)?;
    let fstar = radial_rearrange(f)?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let rhs = u_square_integral(&fstar, t);
            let (m, lo, hi) = r.sq_integral(t);
            (t, m / rhs, lo / rhs, hi / rhs)
        })
        .collect())
}

fn sup_ratio(index: usize, rows: &[(f64, f64, f64, f64)]) -> SampleRatio {
    let mut best = SampleRatio {
        index,
        c: f64::NEG_INFINITY,
        c_lower: f64::NEG_INFINITY,
        c_upper: f64::NEG_INFINITY,
        witness: f64::NAN,
    };
    for &(t, m, lo, hi) in rows {
        if m > best.c {
            best.c = m;
            best.witness = t;
        }
        best.c_lower = best.c_lower.max(lo);
        best.c_upper = best.c_upper.max(hi);
    }
    best
}

pub fn verify_jt(f: &RadialStep, t_grid: &[f64], spec: &RearrangeSpec) -> Result<SampleRatio> {
    Ok(sup_ratio(0, &jt_ratios(f, t_grid, spec)?))
}

/// `∫_0^{1/t} f* <= C' t^{-1} ∫_0^t (f̂)*`: ratios on `t_grid`. A larger
/// right side lowers the ratio, so the upper envelope bounds `c_lower`.
pub fn reverse_ratios(f: &RadialStep, t_grid: &[f64], spec: &RearrangeSpec) -> Result<Vec<(f64, f64, f64, f64)>> {
    let r = rearrange_transform(f, spec)?;
    let fstar = radial_rearrange(f)?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let lhs = fstar.integral_to(1.0 / t);
            let (m, lo, hi) = r.integral(t);
            (t, lhs * t / m, lhs * t / hi, lhs * t / lo)
        })
        .collect())
}

pub fn verify_reverse(f: &RadialStep, t_grid: &[f64], spec: &RearrangeSpec) -> Result<SampleRatio> {
    Ok(sup_ratio(0, &reverse_ratios(f, t_grid, spec)?))
}

/// `1 / min_{0 <= s <= π/2} (J_{n/2}(s)/s^{n/2})²`: the lower-bound constant
/// for the Bessel ratio on the ball of radius 1/4.
pub fn bessel_lower_constant(n: u32) -> Result<f64> {
    unit_ball_volume(n)?;
    let (_, neg_min) = golden_max(|s| -bessel_ratio(n, s).expect("validated").powi(2), 0.0, PI / 2.0, 100);
    // The ratio decreases on [0, π/2]; the endpoint is a candidate too.
    let end = bessel_ratio(n, PI / 2.0)?.powi(2);
    Ok(1.0 / (-neg_min).min(end))
}

/// `(8/π)^n (C_n/ν_n) max(1, 2^{-n} ν_n²)`.
pub fn reverse_constant(n: u32) -> Result<f64> {
    let nu = unit_ball_volume(n)?;
    let cn = bessel_lower_constant(n)?;
    Ok((8.0 / PI).powi(n as i32) * cn / nu * (nu * nu / 2f64.powi(n as i32)).max(1.0))
}

/// `ρ(|f̂|) / σ(f)` for one sample. Returns `None` (with a reason) when
/// `σ(f)` is zero or infinite.
pub fn norm_pair_ratio(
    rho: &Norm,
    sigma: &Norm,
    f: &RadialStep,
    spec: &RearrangeSpec,
    coarse: Option<usize>,
    q: &QuadSpec,
) -> Result<std::result::Result<(f64, f64, f64), String>> {
    let fstar = radial_rearrange(f)?;
    let den = sigma.eval(&fstar, q)?;
    if !(den.is_finite() && den.value > 0.0) {
        return Ok(Err(format!("σ(f) = {}", den.value)));
    }
    let r = rearrange_transform(f, spec)?;
    let (m, lo, hi) = match coarse {
        Some(k) => {
            let c = r.coarse(k)?;
            let v = rho.eval(&c, q)?.value;
            (v, v, rho.eval(&r.upper, q)?.value)
        }
        None => (
            rho.eval(&r.mid, q)?.value,
            rho.eval(&r.lower, q)?.value,
            rho.eval(&r.upper, q)?.value,
        ),
    };
    Ok(Ok((m / den.value, lo / den.value, hi / den.value)))
}

/// Summary of a verification over a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub criterion: String,
    pub dimension: u32,
    pub samples: Vec<SampleRatio>,
    #[serde(with = "crate::serde_ext")]
    pub empirical_c: f64,
    #[serde(with = "crate::serde_ext")]
    pub c_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub median: f64,
    /// Relative increase of the running maximum over the last ten samples.
    #[serde(with = "crate::serde_ext")]
    pub running_max_drift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::serde_ext::option")]
    pub reference_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BatteryReport {
    fn from_samples(criterion: &str, n: u32, samples: Vec<SampleRatio>, notes: Vec<String>) -> Self {
        let mut cs: Vec<f64> = samples.iter().map(|s| s.c).collect();
        let empirical_c = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c_upper = samples.iter().map(|s| s.c_upper).fold(f64::NEG_INFINITY, f64::max);
        let mut running = Vec::with_capacity(cs.len());
        let mut m = f64::NEG_INFINITY;
        for c in &cs {
            m = m.max(*c);
            running.push(m);
        }
        let running_max_drift = if running.len() > 10 {
            running[running.len() - 1] / running[running.len() - 11] - 1.0
        } else {
            f64::NAN
        };
        cs.sort_by(f64::total_cmp);
        let median = if cs.is_empty() {
            f64::NAN
        } else if cs.len() % 2 == 1 {
            cs[cs.len() / 2]
        } else {
            0.5 * (cs[cs.len() / 2 - 1] + cs[cs.len() / 2])
        };
        BatteryReport {
            criterion: criterion.into(),
            dimension: n,
            samples,
            empirical_c,
            c_upper,
            median,
            running_max_drift,
            reference_constant: None,
            notes,
        }
    }

    pub fn spread(&self) -> f64 {
        self.empirical_c / self.median
    }
}

fn check_family(family: &[RadialStep]) -> Result<u32> {
    let n = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?
        .n;
    if family.iter().any(|f| f.n != n) {
        return Err(Error::InvalidArgument("family mixes dimensions".into()));
    }
    Ok(n)
}

pub fn jt_battery(family: &[RadialStep], spec: &RearrangeSpec) -> Result<BatteryReport> {
    let n = check_family(family)?;
    let samples: Vec<SampleRatio> = family
        .par_iter()
        .enumerate()
        .map(|(i, f)| Ok(SampleRatio { index: i, ..verify_jt(f, &default_t_grid(f), spec)? }))
        .collect::<Result<_>>()?;
    Ok(BatteryReport::from_samples("transform_square_integral_bound", n, samples, Vec::new()))
}

pub fn reverse_battery(family: &[RadialStep], spec: &RearrangeSpec) -> Result<BatteryReport> {
    let n = check_family(family)?;
    let samples: Vec<SampleRatio> = family
        .par_iter()
        .enumerate()
        .map(|(i, f)| Ok(SampleRatio { index: i, ..verify_reverse(f, &default_t_grid(f), spec)? }))
        .collect::<Result<_>>()?;
    let mut r = BatteryReport::from_samples("reverse_average_bound", n, samples, Vec::new());
    r.reference_constant = Some(reverse_constant(n)?);
    Ok(r)
}

/// `ρ(|f̂|) <= C σ(f)` over a family. With `coarse = Some(k)` the estimate
/// uses `(f̂)*` averaged over `k` bins per decade.
pub fn verify_norm_pair(
    rho: &Norm,
    sigma: &Norm,
    family: &[RadialStep],
    spec: &RearrangeSpec,
    coarse: Option<usize>,
    q: &QuadSpec,
) -> Result<BatteryReport> {
    let n = check_family(family)?;
    let rows: Vec<std::result::Result<(f64, f64, f64), String>> = family
        .par_iter()
        .map(|f| norm_pair_ratio(rho, sigma, f, spec, coarse, q))
        .collect::<Result<_>>()?;
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok((c, lo, hi)) => samples.push(SampleRatio {
                index: i,
                c,
                c_lower: lo,
                c_upper: hi,
                witness: f64::NAN,
            }),
            Err(why) => notes.push(format!("sample {i} skipped: {why}")),
        }
    }
    Ok(BatteryReport::from_samples("fourier_norm_pair", n, samples, notes))
}

/// Settings for seeded random families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub dimension: u32,
    pub size: usize,
    pub seed: u64,
    #[serde(default = "FamilySpec::default_max_balls")]
    pub max_balls: usize,
}

impl FamilySpec {
    fn default_max_balls() -> usize {
        4
    }
}

/// `size` random radial step functions: 1 to `max_balls` balls with radii
/// log-uniform in `[0.1, 10]` and positive coefficients in `[0.1, 1]`.
pub fn random_family(spec: &FamilySpec) -> Result<Vec<RadialStep>> {
    unit_ball_volume(spec.dimension)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.size)
        .map(|_| {
            let m = rng.gen_range(1..=spec.max_balls.max(1));
            let mut radii: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
            radii.sort_by(f64::total_cmp);
            radii.dedup();
            let coeffs = radii.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            RadialStep::new(spec.dimension, radii, coeffs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_rearrangements() {
        let f = radial_rearrange(&RadialStep::ball(1, 1.0).unwrap()).unwrap();
        assert_eq!(f, StepFn::indicator(0.0, 2.0).unwrap());
        let f = radial_rearrange(&RadialStep::ball(3, 1.0).unwrap()).unwrap();
        assert_eq!(f, StepFn::indicator(0.0, 4.0 * PI / 3.0).unwrap());
    }

    #[test]
    fn sinc_and_origin() {
        let t = transform(&RadialStep::ball(1, 1.0).unwrap()).unwrap();
        assert!((t.eval(0.0) - 2.0).abs() < 1e-15);
        for xi in [0.1, 0.37, 2.5] {
            let exact = (2.0 * PI * xi).sin() / (PI * xi);
            assert!((t.eval(xi) - exact).abs() < 1e-14);
        }
        let f = RadialStep::new(3, vec![0.5, 1.0, 2.0], vec![0.3, -0.1, 0.7]).unwrap();
        let v = transform(&f).unwrap().eval(0.0);
        assert!((v - f.integral()).abs() < 1e-12 * f.integral());
    }

    #[test]
    fn cubic_kernel_branches_agree() {
        for s in [0.49f64, 0.5, 0.51] {
            let direct = 4.0 * PI * (s.sin() - s * s.cos()) / (s * s * s);
            assert!((kernel(3, s) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn suffix_sums_checked() {
        assert!(RadialStep::new(1, vec![1.0, 2.0], vec![1.0, -0.5]).is_err());
        assert!(RadialStep::new(1, vec![1.0, 2.0], vec![-0.5, 1.0]).is_ok());
        assert!(RadialStep::new(2, vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn u_square_integral_small_t() {
        // f* = χ_(0,2): (Uf*)(s) = min(1/s, 2)
        let f = StepFn::indicator(0.0, 2.0).unwrap();
        assert!((u_square_integral(&f, 0.25) - 1.0).abs() < 1e-15);
        // 4·0.5 + ∫_{1/2}^{1} s^{-2} = 2 + 1
        assert!((u_square_integral(&f, 1.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sinc_rearrangement_peak() {
        let r = rearrange_transform(&RadialStep::ball(1, 1.0).unwrap(), &RearrangeSpec::default()).unwrap();
        assert!((r.mid.sup() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn reverse_constant_is_finite() {
        for n in [1, 3] {
            let c = reverse_constant(n).unwrap();
            assert!(c.is_finite() && c > 1.0);
        }
    }
}
