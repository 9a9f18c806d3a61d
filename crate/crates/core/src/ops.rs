//! The averaging operators `P`, `Q`, `U` and the maximal average `f**`.
//!
//! On step-function inputs every operator is evaluated exactly from linear and
//! logarithmic antiderivatives; quadrature is used only when the input is an
//! [`EvalFn`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evalfn::{EvalFn, Monotone};
use crate::quad::{Integral, OriginBound, QuadSpec, TailEnvelope};
use crate::step::{rearrange, StepFn};

/// Exponent used to dominate `ln(1/t)` by a power near the origin.
const LOG_POWER: f64 = 0.25;

/// Cumulative integrals of a step function at its breakpoints.
#[derive(Debug)]
struct Antiderivative {
    breaks: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl Antiderivative {
    fn new(f: &StepFn) -> Self {
        let breaks = f.breakpoints().to_vec();
        let values = f.values().to_vec();
        let mut cum = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (i, &b) in breaks.iter().enumerate() {
            acc += values[i] * (b - prev);
            cum.push(acc);
            prev = b;
        }
        Antiderivative { breaks, values, cum }
    }

    /// `∫_0^t f`.
    fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let idx = self.breaks.partition_point(|&b| b <= t);
        if idx == 0 {
            self.values[0] * t
        } else {
            self.cum[idx - 1] + self.values[idx] * (t - self.breaks[idx - 1])
        }
    }
}

/// Logarithmic antiderivative `t ↦ ∫_t^∞ f(s) ds/s` of a vanishing step function.
#[derive(Debug)]
struct LogTail {
    breaks: Vec<f64>,
    values: Vec<f64>,
    /// `tails[i] = ∫_{b_i}^∞ f(s) ds/s`.
    tails: Vec<f64>,
}

impl LogTail {
    fn new(f: &StepFn) -> Self {
        let breaks = f.breakpoints().to_vec();
        let values = f.values().to_vec();
        let k = breaks.len();
        let mut tails = vec![0.0; k];
        let mut acc = 0.0;
        for i in (0..k).rev() {
            if i + 1 < k {
                acc += values[i + 1] * (breaks[i + 1] / breaks[i]).ln();
            }
            tails[i] = acc;
        }
        LogTail { breaks, values, tails }
    }

    fn at(&self, t: f64) -> f64 {
        let idx = self.breaks.partition_point(|&b| b <= t);
        if idx == self.breaks.len() {
            return 0.0;
        }
        let hi = self.breaks[idx];
        self.values[idx] * (hi / t).ln() + self.tails[idx]
    }
}

/// `(Pf)(t) = t^{-1} ∫_0^t f`, exact.
pub fn hardy_p(f: &StepFn) -> EvalFn {
    let anti = Arc::new(Antiderivative::new(f));
    let sup = f.sup();
    let total = f.integral();
    let mono = if f.is_nonincreasing() {
        Monotone::Decreasing
    } else {
        Monotone::None
    };
    let a = anti.clone();
    let mut out = EvalFn::new(move |t| a.at(t) / t, mono)
        .with_origin(OriginBound::new(sup, 0.0, f64::INFINITY))
        .with_breaks(f.breakpoints().to_vec());
    if total.is_finite() {
        out = out.with_envelope(TailEnvelope::new(total, 1.0, 0.0));
    } else {
        out = out.with_envelope(TailEnvelope::new(sup, 0.0, 0.0));
    }
    out
}

/// `f**(t) = t^{-1} ∫_0^t f*`, exact.
pub fn double_star(f: &StepFn) -> Result<EvalFn> {
    let star = rearrange(f)?;
    Ok(hardy_p(&star))
}

/// `(Qf)(t) = ∫_t^∞ f(s) ds/s`, exact.
pub fn hardy_q(f: &StepFn) -> Result<EvalFn> {
    if !f.vanishes_at_infinity() {
        return Err(Error::HardyQUndefined);
    }
    let tail = Arc::new(LogTail::new(f));
    let breaks = f.breakpoints().to_vec();
    let Some(&b1) = breaks.first() else {
        return Ok(EvalFn::new(|_| 0.0, Monotone::Decreasing)
            .with_origin(OriginBound::new(0.0, 0.0, f64::INFINITY))
            .with_envelope(TailEnvelope::new(0.0, 2.0, 0.0)));
    };
    let last = *breaks.last().unwrap();
    let v0 = f.values()[0];
    let q_b1 = tail.at(b1);
    // ln(b1/t) <= (b1/t)^δ / (e δ) for t <= b1.
    let coeff = (q_b1 + v0 / (std::f64::consts::E * LOG_POWER)) * b1.powf(LOG_POWER);
    let t2 = tail.clone();
    Ok(EvalFn::new(move |t| t2.at(t), Monotone::Decreasing)
        .with_origin(OriginBound::new(coeff, -LOG_POWER, b1))
        .with_envelope(TailEnvelope::new(0.0, 2.0, last))
        .with_breaks(breaks))
}

/// `(U f*)(t) = ∫_0^{1/t} f*`, exact and nonincreasing.
pub fn op_u(f: &StepFn) -> Result<EvalFn> {
    let star = rearrange(f)?;
    Ok(op_u_unrearranged(&star))
}

/// `(U g)(t) = ∫_0^{1/t} g` without rearranging `g` first.
pub fn op_u_unrearranged(g: &StepFn) -> EvalFn {
    let anti = Arc::new(Antiderivative::new(g));
    let total = g.integral();
    let sup = g.sup();
    let breaks: Vec<f64> = g.breakpoints().iter().rev().map(|b| 1.0 / b).collect();
    EvalFn::new(move |t| anti.at(1.0 / t), Monotone::Decreasing)
        .with_origin(OriginBound::new(total, 0.0, f64::INFINITY))
        .with_envelope(TailEnvelope::new(sup, 1.0, 0.0))
        .with_breaks(breaks)
}

/// `(Uf*)**(t) = t^{-1} [(P+Q)f*](1/t)`, exact.
pub fn op_u_average(f: &StepFn) -> Result<EvalFn> {
    const DELTA: f64 = 0.05;
    let star = rearrange(f)?;
    let p = hardy_p(&star);
    let q = hardy_q(&star)?;
    let total = star.integral();
    let mut out = EvalFn::new(
        {
            let (p, q) = (p.clone(), q.clone());
            move |t| {
                let s = 1.0 / t;
                (p.eval(s) + q.eval(s)) / t
            }
        },
        Monotone::Decreasing,
    )
    .with_origin(OriginBound::new(total, 0.0, f64::INFINITY))
    .with_breaks(star.breakpoints().iter().rev().map(|b| 1.0 / b).collect());
    if let Some(&b1) = star.breakpoints().first() {
        // For t >= 1/b1 the average is (v0 + Q(b1) + v0 ln(b1 t)) / t.
        let v0 = star.values()[0];
        let qb1 = q.eval(b1);
        let c = (v0 + qb1) * b1.powf(DELTA) + v0 * b1.powf(DELTA) / (std::f64::consts::E * DELTA);
        out = out.with_envelope(TailEnvelope::new(c, 1.0 - DELTA, 1.0 / b1));
    } else {
        out = out.with_envelope(TailEnvelope::new(0.0, 2.0, 0.0));
    }
    Ok(out)
}

/// `(Ph)(t)` for an evaluable `h`, by quadrature.
pub fn hardy_p_eval(h: &EvalFn, q: &QuadSpec) -> Result<EvalFn> {
    let origin = match h.origin() {
        Some(o) if o.power > -1.0 => o,
        Some(_) => return Err(Error::HardyPUndefined),
        None => return Err(Error::MissingOriginBound),
    };
    let check = h.integrate(0.0, 1.0, q).map_err(|_| Error::HardyPUndefined)?;
    if !check.is_finite() {
        return Err(Error::HardyPUndefined);
    }
    let envelope = match h.envelope() {
        Some(env) => Some(average_envelope(h, env, q)?),
        None => None,
    };
    let mono = match h.monotone() {
        Monotone::Decreasing => Monotone::Decreasing,
        _ => Monotone::None,
    };
    let inner = h.clone();
    let q = *q;
    let mut out = EvalFn::new(
        move |t| match inner.integrate(0.0, t, &q) {
            Ok(r) => r.value / t,
            Err(_) => f64::NAN,
        },
        mono,
    )
    .with_origin(OriginBound::new(
        origin.coeff / (origin.power + 1.0),
        origin.power,
        origin.upto,
    ))
    .with_breaks(h.breaks().to_vec());
    if let Some(env) = envelope {
        out = out.with_envelope(env);
    }
    Ok(out)
}

/// Envelope of `t^{-1}∫_0^t h` from an envelope of `h`.
fn average_envelope(h: &EvalFn, env: TailEnvelope, q: &QuadSpec) -> Result<TailEnvelope> {
    let t0 = env.from.max(1e-300);
    if env.decay > 1.0 {
        let total = h.integrate(0.0, f64::INFINITY, q)?;
        return Ok(TailEnvelope::new(total.value + total.error, 1.0, 0.0));
    }
    let (coeff, decay) = if env.decay == 1.0 {
        (env.coeff * t0.powf(-0.01), 0.99)
    } else {
        (env.coeff, env.decay)
    };
    let head = h.integrate(0.0, t0, q)?;
    let c = (head.value + head.error) * t0.powf(decay - 1.0) + coeff / (1.0 - decay);
    Ok(TailEnvelope::new(c, decay, t0))
}

/// `(Qh)(t)` for an evaluable `h`, by quadrature.
pub fn hardy_q_eval(h: &EvalFn, q: &QuadSpec) -> Result<EvalFn> {
    let env = match h.envelope() {
        Some(e) if e.decay > 0.0 => e,
        _ => return Err(Error::HardyQUndefined),
    };
    let inner = h.mul_power(-1.0);
    let origin = match h.origin() {
        Some(o) => {
            let t1 = o.upto.min(1e300);
            let q1 = inner.integrate(t1, f64::INFINITY, q)?;
            let q1 = q1.value + q1.error;
            Some(if o.power > 0.0 {
                OriginBound::new(q1 + o.coeff * t1.powf(o.power) / o.power, 0.0, t1)
            } else if o.power < 0.0 {
                OriginBound::new(q1 * t1.powf(-o.power) + o.coeff / -o.power, o.power, t1)
            } else {
                OriginBound::new(
                    (q1 + o.coeff / (std::f64::consts::E * LOG_POWER)) * t1.powf(LOG_POWER),
                    -LOG_POWER,
                    t1,
                )
            })
        }
        None => None,
    };
    let q = *q;
    let f = inner.clone();
    let mut out = EvalFn::new(
        move |t| match f.integrate(t, f64::INFINITY, &q) {
            Ok(r) => r.value,
            Err(_) => f64::NAN,
        },
        Monotone::Decreasing,
    )
    .with_envelope(TailEnvelope::new(env.coeff / env.decay, env.decay, env.from))
    .with_breaks(h.breaks().to_vec());
    if let Some(o) = origin {
        out = out.with_origin(o);
    }
    Ok(out)
}

/// Integrand accepted by [`integrate`].
#[derive(Debug, Clone, Copy)]
pub enum Integrand<'a> {
    Step(&'a StepFn),
    Eval(&'a EvalFn),
}

impl<'a> From<&'a StepFn> for Integrand<'a> {
    fn from(f: &'a StepFn) -> Self {
        Integrand::Step(f)
    }
}

impl<'a> From<&'a EvalFn> for Integrand<'a> {
    fn from(f: &'a EvalFn) -> Self {
        Integrand::Eval(f)
    }
}

/// `∫_a^b f`: exact for step functions, certified quadrature otherwise.
pub fn integrate<'a>(f: impl Into<Integrand<'a>>, a: f64, b: f64, q: &QuadSpec) -> Result<Integral> {
    if !(a >= 0.0 && b > a) {
        return Err(Error::InvalidArgument(format!(
            "integration bounds must satisfy 0 <= a < b, got [{a}, {b}]"
        )));
    }
    match f.into() {
        Integrand::Step(s) => Ok(Integral::exact(s.integral_between(a, b))),
        Integrand::Eval(e) => e.integrate(a, b, q),
    }
}

/// `∫_0^∞ g · h` for a vanishing step function `g` and an evaluable `h`,
/// integrating `h` over each piece of `g`.
pub fn integrate_step_product(g: &StepFn, h: &EvalFn, q: &QuadSpec) -> Result<Integral> {
    if !g.vanishes_at_infinity() {
        return Err(Error::InfiniteLevelSets);
    }
    let mut total = Integral::ZERO;
    for (lo, hi, v) in g.pieces() {
        if v == 0.0 || hi.is_infinite() {
            continue;
        }
        total = total + h.integrate(lo, hi, q)?.scale(v);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(a: f64, b: f64) -> StepFn {
        StepFn::indicator(a, b).unwrap()
    }

    #[test]
    fn double_star_of_indicator() {
        let f = double_star(&chi(0.0, 1.0)).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert!((f.eval(4.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hardy_p_of_indicator() {
        let p = hardy_p(&chi(0.0, 1.0));
        assert_eq!(p.eval(2.0), 0.5);
        assert_eq!(p.eval(0.3), 1.0);
    }

    #[test]
    fn hardy_q_of_indicators() {
        let q = hardy_q(&chi(0.0, 1.0)).unwrap();
        assert!((q.eval(0.25) - 4f64.ln()).abs() < 1e-15);
        assert_eq!(q.eval(1.0), 0.0);
        assert_eq!(q.eval(3.0), 0.0);
        let q = hardy_q(&chi(1.0, std::f64::consts::E)).unwrap();
        assert!((q.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((q.eval(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hardy_q_rejects_non_vanishing_tail() {
        let f = StepFn::new(vec![1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(hardy_q(&f).unwrap_err(), Error::HardyQUndefined);
    }

    #[test]
    fn u_of_indicator() {
        let u = op_u(&chi(0.0, 2.0)).unwrap();
        for t in [0.1, 0.5, 1.0, 3.0, 100.0] {
            assert!((u.eval(t) - (1.0 / t).min(2.0)).abs() < 1e-15);
        }
        assert!(u.eval(1e12) < 1e-11);
    }

    #[test]
    fn hardy_p_eval_rejects_origin_singularity() {
        let h = EvalFn::power(1.0, -1.0);
        assert_eq!(hardy_p_eval(&h, &QuadSpec::default()).unwrap_err(), Error::HardyPUndefined);
    }

    #[test]
    fn hardy_q_eval_rejects_flat_tail() {
        let h = EvalFn::power(1.0, 0.0);
        assert_eq!(hardy_q_eval(&h, &QuadSpec::default()).unwrap_err(), Error::HardyQUndefined);
    }

    #[test]
    fn integrate_step_exact() {
        let r = integrate(&chi(0.0, 5.0), 0.0, f64::INFINITY, &QuadSpec::default()).unwrap();
        assert_eq!(r, Integral::exact(5.0));
    }

    #[test]
    fn exact_operator_bounds_hold() {
        let f = StepFn::new(vec![0.5, 1.0, 3.0], vec![1.0, 4.0, 2.0, 0.0]).unwrap();
        let grid = crate::quad::log_grid(1e-6, 1e6, 200);
        for g in [
            hardy_p(&f),
            hardy_q(&f).unwrap(),
            op_u(&f).unwrap(),
            double_star(&f).unwrap(),
            op_u_average(&f).unwrap(),
        ] {
            g.spot_check(&grid).unwrap();
        }
    }
}
