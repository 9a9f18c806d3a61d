//! N-functions `Φ(x) = ∫_0^x φ` for Orlicz gauges.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::log_grid;

/// Default sampling range and size for derived N-functions.
pub const SAMPLE_LO: f64 = 1e-12;
pub const SAMPLE_HI: f64 = 1e12;
pub const SAMPLE_N: usize = 512;

/// An N-function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NFunction {
    /// `x^p`.
    Power { p: f64 },
    /// `x^p / p`.
    PowerScaled { p: f64 },
    /// Tabulated values, interpolated linearly in log-log coordinates.
    Sampled(Sampled),
    /// `Φ(x^r)`.
    Substituted { base: Box<NFunction>, r: f64 },
}

/// Samples of `Φ` on an increasing grid, with power-law extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledRepr", into = "SampledRepr")]
pub struct Sampled {
    lx: Arc<[f64]>,
    ly: Arc<[f64]>,
}

/// Serialized form: either the density `φ` or the values `Φ` at `x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledRepr {
    x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

impl TryFrom<SampledRepr> for Sampled {
    type Error = Error;
    fn try_from(r: SampledRepr) -> Result<Self> {
        match (r.phi, r.values) {
            (Some(phi), None) => Sampled::from_density(&r.x, &phi),
            (None, Some(v)) => Sampled::from_values(&r.x, &v),
            _ => Err(Error::InvalidArgument(
                "sampled N-function needs exactly one of `phi` or `values`".into(),
            )),
        }
    }
}

impl From<Sampled> for SampledRepr {
    fn from(s: Sampled) -> Self {
        SampledRepr {
            x: s.lx.iter().map(|v| v.exp()).collect(),
            phi: None,
            values: Some(s.ly.iter().map(|v| v.exp()).collect()),
        }
    }
}

impl Sampled {
    /// From values `Φ(x_i)`; both sequences must be strictly increasing and positive.
    pub fn from_values(x: &[f64], values: &[f64]) -> Result<Self> {
        if x.len() != values.len() || x.len() < 2 {
            return Err(Error::InvalidArgument(
                "sampled N-function needs at least two (x, value) pairs of equal length".into(),
            ));
        }
        for i in 0..x.len() {
            if !(x[i] > 0.0 && values[i] > 0.0 && x[i].is_finite() && values[i].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "samples must be positive and finite at index {i}"
                )));
            }
            if i > 0 && !(x[i] > x[i - 1]) {
                return Err(Error::InvalidArgument("sample abscissae must increase".into()));
            }
            if i > 0 && !(values[i] > values[i - 1]) {
                return Err(Error::NonInvertible(format!(
                    "values must be strictly increasing (index {i})"
                )));
            }
        }
        let s = Sampled {
            lx: x.iter().map(|v| v.ln()).collect(),
            ly: values.iter().map(|v| v.ln()).collect(),
        };
        // Power-law extrapolation must stay convex and vanish at 0.
        if s.slope(0) < 1.0 - 1e-9 {
            return Err(Error::InvalidArgument(
                "sampled N-function must grow at least linearly at the origin".into(),
            ));
        }
        Ok(s)
    }

    /// From a nondecreasing density `φ(x_i)`, interpolated as a power law
    /// between nodes and integrated exactly.
    pub fn from_density(x: &[f64], phi: &[f64]) -> Result<Self> {
        if x.len() != phi.len() || x.len() < 2 {
            return Err(Error::InvalidArgument(
                "density needs at least two (x, phi) pairs of equal length".into(),
            ));
        }
        for i in 0..x.len() {
            if !(x[i] > 0.0 && phi[i] > 0.0) {
                return Err(Error::InvalidArgument("density samples must be positive".into()));
            }
            if i > 0 && (!(x[i] > x[i - 1]) || phi[i] < phi[i - 1]) {
                return Err(Error::InvalidArgument(
                    "density must be nondecreasing on an increasing grid".into(),
                ));
            }
        }
        let slope = |i: usize| (phi[i + 1] / phi[i]).ln() / (x[i + 1] / x[i]).ln();
        let s0 = slope(0);
        let mut acc = phi[0] * x[0] / (s0 + 1.0);
        let mut values = vec![acc];
        for i in 0..x.len() - 1 {
            let s = slope(i);
            // ∫_{x_i}^{x_{i+1}} φ_i (y/x_i)^s dy
            let seg = if (s + 1.0).abs() < 1e-12 {
                phi[i] * x[i] * (x[i + 1] / x[i]).ln()
            } else {
                phi[i] * x[i] * ((x[i + 1] / x[i]).powf(s + 1.0) - 1.0) / (s + 1.0)
            };
            acc += seg;
            values.push(acc);
        }
        Sampled::from_values(x, &values)
    }

    fn slope(&self, i: usize) -> f64 {
        let n = self.lx.len();
        let i = i.min(n - 2);
        (self.ly[i + 1] - self.ly[i]) / (self.lx[i + 1] - self.lx[i])
    }

    fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let n = xs.len();
        let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        ys[i] + s * (x - xs[i])
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        Sampled::interp(&self.lx, &self.ly, x.ln()).exp()
    }

    fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        Sampled::interp(&self.ly, &self.lx, y.ln()).exp()
    }
}

impl NFunction {
    pub fn power(p: f64) -> Self {
        NFunction::Power { p }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NFunction::Power { p } | NFunction::PowerScaled { p } => {
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "power N-function needs p >= 1, got {p}"
                    )));
                }
            }
            NFunction::Sampled(_) => {}
            NFunction::Substituted { base, r } => {
                if !(*r > 0.0 && r.is_finite()) {
                    return Err(Error::InvalidArgument(format!("substitution power must be > 0, got {r}")));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// `Φ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            NFunction::Power { p } => x.powf(*p),
            NFunction::PowerScaled { p } => x.powf(*p) / p,
            NFunction::Sampled(s) => s.eval(x),
            NFunction::Substituted { base, r } => base.eval(x.powf(*r)),
        }
    }

    /// `Φ^{-1}(y)`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            NFunction::Power { p } => y.powf(1.0 / p),
            NFunction::PowerScaled { p } => (p * y).powf(1.0 / p),
            NFunction::Sampled(s) => s.inverse(y),
            NFunction::Substituted { base, r } => base.inverse(y).powf(1.0 / r),
        }
    }

    /// The complementary function `Ã`, defined by `Ã^{-1}(t) = t / A^{-1}(t)`,
    /// sampled on a log grid.
    pub fn complementary(&self) -> Result<NFunction> {
        let ts = log_grid(SAMPLE_LO, SAMPLE_HI, SAMPLE_N);
        let mut xs = Vec::with_capacity(ts.len());
        for &t in &ts {
            let inv = self.inverse(t);
            if !(inv > 0.0 && inv.is_finite()) {
                return Err(Error::NonInvertible(format!("A^-1({t}) = {inv}")));
            }
            xs.push(t / inv);
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonInvertible(
                "t / A^-1(t) is not strictly increasing".into(),
            ));
        }
        Ok(NFunction::Sampled(Sampled::from_values(&xs, &ts)?))
    }

    /// `B₁(t) = 1 / Ã₁(1/t)`, sampled on a log grid.
    pub fn b1_from_a1(&self) -> Result<NFunction> {
        let comp = self.complementary()?;
        let xs = log_grid(SAMPLE_LO, SAMPLE_HI, SAMPLE_N);
        let vals: Vec<f64> = xs.iter().map(|&x| 1.0 / comp.eval(1.0 / x)).collect();
        Ok(NFunction::Sampled(Sampled::from_values(&xs, &vals)?))
    }

    /// Fundamental function `1 / Φ^{-1}(1/t)` of the Orlicz gauge.
    pub fn fundamental(&self, t: f64) -> f64 {
        1.0 / self.inverse(1.0 / t)
    }

    /// Whether `Φ(t)/t^k` is nonincreasing on `grid` (relative slack `1e-9`).
    pub fn ratio_nonincreasing(&self, k: f64, grid: &[f64]) -> bool {
        let r: Vec<f64> = grid.iter().map(|&t| self.eval(t) / t.powf(k)).collect();
        r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    }

    /// Whether `Φ(t)/t^k` is nondecreasing on `grid` (relative slack `1e-9`).
    pub fn ratio_nondecreasing(&self, k: f64, grid: &[f64]) -> bool {
        let r: Vec<f64> = grid.iter().map(|&t| self.eval(t) / t.powf(k)).collect();
        r.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn complementary_of_square_is_square() {
        let c = NFunction::power(2.0).complementary().unwrap();
        for x in log_grid(1e-5, 1e5, 37) {
            assert!(rel(c.eval(x), x * x) < 1e-9);
        }
    }

    #[test]
    fn complementary_is_an_involution_on_powers() {
        let a = NFunction::power(3.0);
        let cc = a.complementary().unwrap().complementary().unwrap();
        for x in log_grid(1e-3, 1e3, 50) {
            assert!(rel(cc.eval(x), x.powi(3)) < 1e-8);
        }
    }

    #[test]
    fn b1_of_power_below_two() {
        let p: f64 = 1.5;
        let b1 = NFunction::power(p).b1_from_a1().unwrap();
        let pp = p / (p - 1.0);
        let grid = log_grid(1e-4, 1e4, 60);
        for &x in &grid {
            assert!(rel(b1.eval(x), x.powf(pp)) < 1e-8);
        }
        assert!(NFunction::power(p).ratio_nonincreasing(2.0, &grid));
        assert!(b1.ratio_nondecreasing(2.0, &grid));
        // φ_B1(t) / t^{1/2} nonincreasing
        let r: Vec<f64> = grid.iter().map(|&t| b1.fundamental(t) / t.sqrt()).collect();
        assert!(r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    }

    #[test]
    fn density_integrates_to_power() {
        // φ(x) = 2x gives Φ(x) = x²
        let xs = log_grid(1e-3, 1e3, 40);
        let phi: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let s = NFunction::Sampled(Sampled::from_density(&xs, &phi).unwrap());
        for x in [1e-4, 0.5, 3.0, 1e4] {
            assert!(rel(s.eval(x), x * x) < 1e-12);
            assert!(rel(s.inverse(x * x), x) < 1e-12);
        }
    }

    #[test]
    fn non_invertible_is_rejected() {
        assert!(matches!(
            Sampled::from_values(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]),
            Err(Error::NonInvertible(_))
        ));
    }
}
