//! Rearrangement-invariant norms on the half-line.
//!
//! Every norm is evaluated on `f*`: step functions are rearranged exactly,
//! and evaluable arguments must already be nonincreasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalfn::{EvalFn, Monotone};
use crate::nfunction::NFunction;
use crate::ops::{hardy_p_eval, op_u, op_u_average};
use crate::quad::{quad_log, Integral, OriginBound, QuadSpec, TailEnvelope};
use crate::step::{rearrange, StepFn};
use crate::weights::{WeightFn, WeightSpec};

/// Serializable description of a norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormSpec {
    Lebesgue { p: f64 },
    Lambda { p: f64, u: WeightSpec },
    Gamma { p: f64, u: WeightSpec },
    Orlicz { phi: NFunction },
    /// `ρ^{(p)}(f) = ρ(f^p)^{1/p}`.
    BoydPower { base: Box<NormSpec>, p: f64 },
    /// `μ(t^{-1} [∫_0^{t^p} f*^p]^{1/p})`.
    MuInterp { mu: Box<NormSpec>, p: f64 },
    /// `ρ(Uf*)`.
    LargestDomain { base: Box<NormSpec> },
}

/// A norm ready for evaluation.
#[derive(Debug, Clone)]
pub enum Norm {
    Lebesgue { p: f64 },
    Lambda { p: f64, u: WeightFn },
    Gamma { p: f64, u: WeightFn },
    Orlicz { phi: NFunction },
    BoydPower { base: Box<Norm>, p: f64 },
    MuInterp { mu: Box<Norm>, p: f64 },
    LargestDomain { base: Box<Norm> },
}

/// A nonincreasing evaluable function, optionally with its exact running
/// average.
#[derive(Debug, Clone)]
pub struct Decreasing {
    pub f: EvalFn,
    pub avg: Option<EvalFn>,
}

impl Decreasing {
    pub fn new(f: EvalFn) -> Result<Self> {
        if f.monotone() != Monotone::Decreasing {
            return Err(Error::InvalidArgument(
                "norms of evaluable functions need a nonincreasing argument".into(),
            ));
        }
        Ok(Decreasing { f, avg: None })
    }

    /// `Uf*` together with its exact running average.
    pub fn op_u(f: &StepFn) -> Result<Self> {
        Ok(Decreasing {
            f: op_u(f)?,
            avg: Some(op_u_average(f)?),
        })
    }

    /// `1/(1+t)` with running average `ln(1+t)/t`.
    pub fn reciprocal() -> Self {
        let f = EvalFn::new(|t: f64| 1.0 / (1.0 + t), Monotone::Decreasing)
            .with_origin(OriginBound::new(1.0, 0.0, f64::INFINITY))
            .with_envelope(TailEnvelope::new(1.0, 1.0, 0.0));
        let avg = EvalFn::new(|t: f64| t.ln_1p() / t, Monotone::Decreasing)
            .with_origin(OriginBound::new(1.0, 0.0, f64::INFINITY))
            .with_envelope(TailEnvelope::new(20.0, 0.95, 1.0));
        Decreasing { f, avg: Some(avg) }
    }

    fn average(&self, q: &QuadSpec) -> Result<EvalFn> {
        match &self.avg {
            Some(a) => Ok(a.clone()),
            None => hardy_p_eval(&self.f, q),
        }
    }
}

/// Argument of a norm evaluation.
#[derive(Debug, Clone, Copy)]
pub enum NormArg<'a> {
    Step(&'a StepFn),
    Decreasing(&'a Decreasing),
}

impl<'a> From<&'a StepFn> for NormArg<'a> {
    fn from(f: &'a StepFn) -> Self {
        NormArg::Step(f)
    }
}

impl<'a> From<&'a Decreasing> for NormArg<'a> {
    fn from(f: &'a Decreasing) -> Self {
        NormArg::Decreasing(f)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("norm exponent must be >= 1, got {p}")));
    }
    Ok(())
}

/// `(I)^{1/p}` with the error propagated to first order.
fn root(i: Integral, p: f64) -> Integral {
    if !i.is_finite() {
        return Integral::divergent();
    }
    let v = i.value.max(0.0).powf(1.0 / p);
    let e = if i.value > 0.0 { v * i.error / (p * i.value) } else { i.error.powf(1.0 / p) };
    Integral { value: v, error: e }
}

impl NormSpec {
    pub fn resolve(&self, q: &QuadSpec) -> Result<Norm> {
        Ok(match self {
            NormSpec::Lebesgue { p } => {
                check_p(*p)?;
                Norm::Lebesgue { p: *p }
            }
            NormSpec::Lambda { p, u } => Norm::lambda(*p, u.resolve(q)?)?,
            NormSpec::Gamma { p, u } => Norm::gamma(*p, u.resolve(q)?)?,
            NormSpec::Orlicz { phi } => {
                phi.validate()?;
                Norm::Orlicz { phi: phi.clone() }
            }
            NormSpec::BoydPower { base, p } => {
                check_p(*p)?;
                Norm::BoydPower {
                    base: Box::new(base.resolve(q)?),
                    p: *p,
                }
            }
            NormSpec::MuInterp { mu, p } => Norm::mu_interp(mu.resolve(q)?, *p, q)?,
            NormSpec::LargestDomain { base } => Norm::largest_domain(base.resolve(q)?, q)?,
        })
    }
}

impl Norm {
    pub fn lebesgue(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Norm::Lebesgue { p })
    }

    pub fn lambda(p: f64, u: impl Into<WeightFn>) -> Result<Self> {
        check_p(p)?;
        let u = u.into();
        if !u.admissible(p).is_admissible() {
            return Err(Error::Inadmissible);
        }
        Ok(Norm::Lambda { p, u })
    }

    pub fn gamma(p: f64, u: impl Into<WeightFn>) -> Result<Self> {
        check_p(p)?;
        let u = u.into();
        if !u.admissible(p).is_admissible() {
            return Err(Error::Inadmissible);
        }
        Ok(Norm::Gamma { p, u })
    }

    pub fn orlicz(phi: NFunction) -> Result<Self> {
        phi.validate()?;
        Ok(Norm::Orlicz { phi })
    }

    pub fn boyd_power(base: Norm, p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Norm::BoydPower {
            base: Box::new(base),
            p,
        })
    }

    /// Requires `μ(1/(1+t)) < ∞`.
    pub fn mu_interp(mu: Norm, p: f64, q: &QuadSpec) -> Result<Self> {
        check_p(p)?;
        let h = mu.eval(&Decreasing::reciprocal(), q)?;
        if !h.is_finite() {
            return Err(Error::Hypothesis("mu(1/(1+t)) is infinite".into()));
        }
        Ok(Norm::MuInterp { mu: Box::new(mu), p })
    }

    /// Requires `ρ(1/(1+t)) < ∞`.
    pub fn largest_domain(base: Norm, q: &QuadSpec) -> Result<Self> {
        let h = base.eval(&Decreasing::reciprocal(), q)?;
        if !h.is_finite() {
            return Err(Error::Hypothesis("rho(1/(1+t)) is infinite".into()));
        }
        Ok(Norm::LargestDomain { base: Box::new(base) })
    }

    /// The norm of `f`, with an error bound. Divergence gives `+∞`.
    pub fn eval<'a>(&self, f: impl Into<NormArg<'a>>, q: &QuadSpec) -> Result<Integral> {
        match f.into() {
            NormArg::Step(s) => self.eval_step(s, q),
            NormArg::Decreasing(d) => self.eval_decreasing(d, q),
        }
    }

    fn eval_step(&self, f: &StepFn, q: &QuadSpec) -> Result<Integral> {
        if !f.vanishes_at_infinity() {
            return Ok(Integral::divergent());
        }
        if f.is_zero() {
            return Ok(Integral::ZERO);
        }
        match self {
            Norm::Lebesgue { p } => Ok(Integral::exact(lebesgue_step(f, *p))),
            Norm::Lambda { p, u } => lambda_step(*p, u, f, q),
            Norm::Gamma { p, u } => gamma_step(*p, u, f, q),
            Norm::Orlicz { phi } => Ok(Integral::exact(luxemburg_norm(phi, f)?)),
            Norm::BoydPower { base, p } => Ok(root(base.eval_step(&f.powf(*p), q)?, *p)),
            Norm::MuInterp { mu, p } => {
                let inner = Decreasing::new(k_average(f, *p)?)?;
                mu.eval_decreasing(&inner, q)
            }
            Norm::LargestDomain { base } => base.eval_decreasing(&Decreasing::op_u(f)?, q),
        }
    }

    fn eval_decreasing(&self, d: &Decreasing, q: &QuadSpec) -> Result<Integral> {
        match self {
            Norm::Lebesgue { p } => Ok(root(d.f.powf(*p).integrate(0.0, f64::INFINITY, q)?, *p)),
            Norm::Lambda { p, u } => {
                let g = d.f.powf(*p).product(&u.to_evalfn());
                Ok(root(integrate_or_diverge(&g, q)?, *p))
            }
            Norm::Gamma { p, u } => {
                let avg = d.average(q)?;
                let g = avg.powf(*p).product(&u.to_evalfn());
                Ok(root(integrate_or_diverge(&g, q)?, *p))
            }
            Norm::Orlicz { phi } => match phi {
                NFunction::Power { p } => Norm::Lebesgue { p: *p }.eval_decreasing(d, q),
                NFunction::PowerScaled { p } => {
                    let r = Norm::Lebesgue { p: *p }.eval_decreasing(d, q)?;
                    Ok(r.scale(p.powf(-1.0 / p)))
                }
                _ => Err(Error::Unsupported(
                    "sampled Orlicz gauges are only evaluated on step functions".into(),
                )),
            },
            Norm::BoydPower { base, p } => {
                let inner = Decreasing::new(d.f.powf(*p))?;
                Ok(root(base.eval_decreasing(&inner, q)?, *p))
            }
            Norm::MuInterp { .. } | Norm::LargestDomain { .. } => Err(Error::Unsupported(
                "derived norms are only evaluated on step functions".into(),
            )),
        }
    }

    /// `φ(t)`, the norm of `χ_(0,t)`.
    pub fn fundamental_function(&self, t: f64, q: &QuadSpec) -> Result<f64> {
        match self {
            Norm::Lebesgue { p } => Ok(t.powf(1.0 / p)),
            Norm::Gamma { p, u } => {
                let a = u.primitive(t, q)?;
                let b = u.tail_p(t, *p, q)?;
                Ok((a.value + t.powf(*p) * b.value).powf(1.0 / p))
            }
            Norm::Lambda { p, u } => Ok(u.primitive(t, q)?.value.powf(1.0 / p)),
            Norm::Orlicz { phi } => Ok(phi.fundamental(t)),
            Norm::BoydPower { base, p } => Ok(base.fundamental_function(t, q)?.powf(1.0 / p)),
            _ => Ok(self.eval(&StepFn::indicator(0.0, t)?, q)?.value),
        }
    }
}

fn integrate_or_diverge(g: &EvalFn, q: &QuadSpec) -> Result<Integral> {
    match g.integrate(0.0, f64::INFINITY, q) {
        Err(Error::MissingEnvelope) => {
            if g.envelope().is_some() {
                Ok(Integral::divergent())
            } else {
                Err(Error::MissingEnvelope)
            }
        }
        Err(Error::MissingOriginBound) => {
            if g.origin().is_some() {
                Ok(Integral::divergent())
            } else {
                Err(Error::MissingOriginBound)
            }
        }
        r => r,
    }
}

/// `(∫ f^p)^{1/p}`, exact.
pub fn lebesgue_step(f: &StepFn, p: f64) -> f64 {
    if !f.vanishes_at_infinity() {
        return f64::INFINITY;
    }
    let s: f64 = f
        .pieces()
        .filter(|(_, hi, v)| hi.is_finite() && *v > 0.0)
        .map(|(lo, hi, v)| v.powf(p) * (hi - lo))
        .sum();
    s.powf(1.0 / p)
}

fn lambda_step(p: f64, u: &WeightFn, f: &StepFn, q: &QuadSpec) -> Result<Integral> {
    let star = rearrange(f)?;
    let mut total = Integral::ZERO;
    for (lo, hi, v) in star.pieces() {
        if v == 0.0 {
            continue;
        }
        let m = u.moment(0.0, lo, hi, q)?;
        if !m.is_finite() {
            return Ok(Integral::divergent());
        }
        total = total + m.scale(v.powf(p));
    }
    Ok(root(total, p))
}

fn gamma_step(p: f64, u: &WeightFn, f: &StepFn, q: &QuadSpec) -> Result<Integral> {
    let star = rearrange(f)?;
    let breaks = star.breakpoints();
    let values = star.values();
    let k = breaks.len();
    let head = u.primitive(breaks[0], q)?.scale(values[0].powf(p));
    let mut total = head;
    let wb = u.breakpoints();
    let w = u.clone();
    let mut cum = values[0] * breaks[0];
    for j in 1..k {
        let (lo, hi, v) = (breaks[j - 1], breaks[j], values[j]);
        let c0 = cum;
        let g = |t: f64| ((c0 + v * (t - lo)) / t).powf(p) * w.value(t);
        total = total + quad_log(g, lo, hi, &wb, None, None, q)?;
        cum += v * (hi - lo);
    }
    let tail = u.tail_p(breaks[k - 1], p, q)?;
    total = total + tail.scale(cum.powf(p));
    Ok(root(total, p))
}

/// `t ↦ t^{-1} [∫_0^{t^p} f*^p]^{1/p}`, the running `p`-average of `f*`.
fn k_average(f: &StepFn, p: f64) -> Result<EvalFn> {
    let g = rearrange(&f.powf(p))?;
    let sup = g.sup().powf(1.0 / p);
    let total = g.integral().powf(1.0 / p);
    Ok(EvalFn::new(move |t| g.integral_to(t.powf(p)).powf(1.0 / p) / t, Monotone::Decreasing)
        .with_origin(OriginBound::new(sup, 0.0, f64::INFINITY))
        .with_envelope(TailEnvelope::new(total, 1.0, 0.0)))
}

/// `(∫_0^{t^p} f*^p)^{1/p}`, the `(L_p, L_∞)` K-functional up to equivalence.
pub fn k_functional_p(f: &StepFn, t: f64, p: f64) -> Result<f64> {
    let g = rearrange(&f.powf(p))?;
    Ok(g.integral_to(t.powf(p)).powf(1.0 / p))
}

/// `∫ Φ(f)`, exact on step functions.
pub fn modular(phi: &NFunction, f: &StepFn) -> f64 {
    f.pieces()
        .filter(|(_, hi, v)| hi.is_finite() && *v > 0.0)
        .map(|(lo, hi, v)| phi.eval(v) * (hi - lo))
        .sum()
}

/// Luxemburg gauge `inf{λ > 0 : ∫ Φ(f/λ) <= 1}` by bracketing and bisection.
pub fn luxemburg_norm(phi: &NFunction, f: &StepFn) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    if !f.vanishes_at_infinity() {
        return Err(Error::InfiniteLevelSets);
    }
    let blocks: Vec<(f64, f64)> = f
        .pieces()
        .filter(|(_, hi, v)| hi.is_finite() && *v > 0.0)
        .map(|(lo, hi, v)| (v, hi - lo))
        .collect();
    let m = |lam: f64| blocks.iter().map(|&(v, len)| phi.eval(v / lam) * len).sum::<f64>();
    let mut hi = f.sup();
    let mut n = 0;
    while m(hi) > 1.0 {
        hi *= 2.0;
        n += 1;
        if n > 2000 || !hi.is_finite() {
            return Err(Error::BracketFailure);
        }
    }
    let mut lo = hi;
    n = 0;
    while m(lo) <= 1.0 {
        lo *= 0.5;
        n += 1;
        if n > 2000 || lo == 0.0 {
            return Ok(0.0);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        if m(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;

    fn q() -> QuadSpec {
        QuadSpec::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn chi(a: f64, b: f64) -> StepFn {
        StepFn::indicator(a, b).unwrap()
    }

    #[test]
    fn gamma_of_indicator_with_truncated_weight() {
        let u = Weight::from_step(&chi(0.0, 1.0));
        let n = Norm::gamma(2.0, u).unwrap();
        let r = n.eval(&chi(0.0, 1.0), &q()).unwrap();
        assert!(rel(r.value, 1.0) < 1e-12);
    }

    #[test]
    fn lambda_power_weight() {
        let n = Norm::lambda(2.0, Weight::power(0.5)).unwrap();
        let r = n.eval(&chi(0.0, 1.0), &q()).unwrap();
        assert!(rel(r.value * r.value, 1.0 / 1.5) < 1e-14);
    }

    #[test]
    fn luxemburg_square() {
        let r = luxemburg_norm(&NFunction::power(2.0), &chi(0.0, 4.0)).unwrap();
        assert!(rel(r, 2.0) < 1e-12);
    }

    #[test]
    fn largest_domain_of_indicator() {
        let n = Norm::largest_domain(Norm::lebesgue(2.0).unwrap(), &q()).unwrap();
        let r = n.eval(&chi(0.0, 1.0), &q()).unwrap();
        assert!(rel(r.value, 2f64.sqrt()) < 1e-9, "{r:?}");
    }

    #[test]
    fn mu_interp_of_indicator() {
        let n = Norm::mu_interp(Norm::lebesgue(2.0).unwrap(), 2.0, &q()).unwrap();
        let r = n.eval(&chi(0.0, 1.0), &q()).unwrap();
        // inner function min(1, 1/t)
        assert!(rel(r.value, 2f64.sqrt()) < 1e-9, "{r:?}");
    }

    #[test]
    fn gamma_fundamental_closed_form() {
        let (p, a) = (3.0f64, 0.5f64);
        let n = Norm::gamma(p, Weight::power(a)).unwrap();
        let k = (p / ((a + 1.0) * (p - a - 1.0))).powf(1.0 / p);
        for t in [1e-3, 0.7, 5.0, 1e4] {
            let phi = n.fundamental_function(t, &q()).unwrap();
            assert!(rel(phi, k * t.powf((a + 1.0) / p)) < 1e-12);
            let direct = n.eval(&chi(0.0, t), &q()).unwrap().value;
            assert!(rel(direct, phi) < 1e-8, "t={t}: {direct} vs {phi}");
        }
    }

    #[test]
    fn inadmissible_gamma_is_rejected() {
        assert!(matches!(Norm::gamma(2.0, Weight::power(1.0)), Err(Error::Inadmissible)));
    }

    #[test]
    fn boyd_power_of_l1_is_l2() {
        let f = StepFn::new(vec![1.0, 2.5, 4.0], vec![3.0, 1.0, 2.0, 0.0]).unwrap();
        let n = Norm::boyd_power(Norm::lebesgue(1.0).unwrap(), 2.0).unwrap();
        let r = n.eval(&f, &q()).unwrap().value;
        assert!(rel(r, lebesgue_step(&f, 2.0)) < 1e-14);
    }

    #[test]
    fn k_functional_of_indicator() {
        assert_eq!(k_functional_p(&chi(0.0, 1.0), 1.0, 2.0).unwrap(), 1.0);
    }
}
