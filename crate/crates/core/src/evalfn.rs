use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{quad_log, Integral, OriginBound, QuadSpec, TailEnvelope};

/// Monotonicity flag carried by an [`EvalFn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Decreasing,
    Increasing,
    None,
}

/// A pointwise-evaluable nonnegative function on `(0, ∞)` with the metadata
/// needed to integrate it to the origin and to infinity.
#[derive(Clone)]
pub struct EvalFn {
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    monotone: Monotone,
    envelope: Option<TailEnvelope>,
    origin: Option<OriginBound>,
    breaks: Arc<[f64]>,
}

impl fmt::Debug for EvalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvalFn")
            .field("monotone", &self.monotone)
            .field("envelope", &self.envelope)
            .field("origin", &self.origin)
            .field("breaks", &self.breaks.len())
            .finish()
    }
}

impl EvalFn {
    pub fn new(func: impl Fn(f64) -> f64 + Send + Sync + 'static, monotone: Monotone) -> Self {
        EvalFn {
            func: Arc::new(func),
            monotone,
            envelope: None,
            origin: None,
            breaks: Arc::from(Vec::new()),
        }
    }

    pub fn with_envelope(mut self, env: TailEnvelope) -> Self {
        self.envelope = Some(env);
        self
    }

    pub fn with_origin(mut self, bound: OriginBound) -> Self {
        self.origin = Some(bound);
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = Arc::from(breaks);
        self
    }

    /// `c · t^power` on `(0, ∞)`, with exact bounds.
    pub fn power(c: f64, power: f64) -> Self {
        let mono = if power < 0.0 {
            Monotone::Decreasing
        } else if power > 0.0 {
            Monotone::Increasing
        } else {
            Monotone::None
        };
        EvalFn::new(move |t| c * t.powf(power), mono)
            .with_envelope(TailEnvelope::new(c, -power, 0.0))
            .with_origin(OriginBound::new(c, power, f64::INFINITY))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }

    pub fn monotone(&self) -> Monotone {
        self.monotone
    }

    pub fn envelope(&self) -> Option<TailEnvelope> {
        self.envelope
    }

    pub fn origin(&self) -> Option<OriginBound> {
        self.origin
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// `∫_a^b f` for `0 <= a < b <= ∞`.
    pub fn integrate(&self, a: f64, b: f64, q: &QuadSpec) -> Result<Integral> {
        quad_log(
            |t| self.eval(t),
            a,
            b,
            &self.breaks,
            self.origin,
            self.envelope,
            q,
        )
    }

    /// `∫_a^b f(t) t^gamma dt`.
    pub fn moment(&self, gamma: f64, a: f64, b: f64, q: &QuadSpec) -> Result<Integral> {
        self.mul_power(gamma).integrate(a, b, q)
    }

    /// `t ↦ t^gamma f(t)`.
    pub fn mul_power(&self, gamma: f64) -> EvalFn {
        if gamma == 0.0 {
            return self.clone();
        }
        let f = self.func.clone();
        let mono = match (self.monotone, gamma > 0.0) {
            (Monotone::Increasing, true) => Monotone::Increasing,
            (Monotone::Decreasing, false) => Monotone::Decreasing,
            _ => Monotone::None,
        };
        EvalFn {
            func: Arc::new(move |t| t.powf(gamma) * f(t)),
            monotone: mono,
            envelope: self.envelope.map(|e| e.shift(gamma)),
            origin: self.origin.map(|o| o.shift(gamma)),
            breaks: self.breaks.clone(),
        }
    }

    /// `t ↦ c · f(t)`.
    pub fn scale(&self, c: f64) -> EvalFn {
        let f = self.func.clone();
        EvalFn {
            func: Arc::new(move |t| c * f(t)),
            monotone: self.monotone,
            envelope: self.envelope.map(|e| e.scale(c)),
            origin: self.origin.map(|o| o.scale(c)),
            breaks: self.breaks.clone(),
        }
    }

    /// `t ↦ f(t)^p`, `p > 0`.
    pub fn powf(&self, p: f64) -> EvalFn {
        let f = self.func.clone();
        EvalFn {
            func: Arc::new(move |t| f(t).powf(p)),
            monotone: self.monotone,
            envelope: self
                .envelope
                .map(|e| TailEnvelope::new(e.coeff.powf(p), e.decay * p, e.from)),
            origin: self
                .origin
                .map(|o| OriginBound::new(o.coeff.powf(p), o.power * p, o.upto)),
            breaks: self.breaks.clone(),
        }
    }

    /// Pointwise product.
    pub fn product(&self, other: &EvalFn) -> EvalFn {
        let (f, g) = (self.func.clone(), other.func.clone());
        let mono = if self.monotone == other.monotone {
            self.monotone
        } else {
            Monotone::None
        };
        let mut breaks: Vec<f64> = self.breaks.iter().chain(other.breaks.iter()).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        EvalFn {
            func: Arc::new(move |t| {
                let a = f(t);
                if a == 0.0 {
                    0.0
                } else {
                    a * g(t)
                }
            }),
            monotone: mono,
            envelope: self.envelope.zip(other.envelope).map(|(a, b)| a.times(b)),
            origin: self.origin.zip(other.origin).map(|(a, b)| a.times(b)),
            breaks: Arc::from(breaks),
        }
    }

    /// Spot-checks the monotonicity flag and the bounds on the given grid.
    /// Returns the first violation found.
    pub fn spot_check(&self, grid: &[f64]) -> std::result::Result<(), String> {
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        for (i, w) in vals.windows(2).enumerate() {
            let slack = 1e-12 * w[0].abs().max(w[1].abs());
            let bad = match self.monotone {
                Monotone::Decreasing => w[1] > w[0] + slack,
                Monotone::Increasing => w[1] + slack < w[0],
                Monotone::None => false,
            };
            if bad {
                return Err(format!(
                    "monotonicity violated between t={} and t={}",
                    grid[i],
                    grid[i + 1]
                ));
            }
        }
        for (&t, &v) in grid.iter().zip(&vals) {
            if let Some(env) = self.envelope {
                if t >= env.from && v > env.eval(t) * (1.0 + 1e-9) {
                    return Err(format!("tail envelope violated at t={t}: {v} > {}", env.eval(t)));
                }
            }
            if let Some(o) = self.origin {
                if t <= o.upto && v > o.eval(t) * (1.0 + 1e-9) {
                    return Err(format!("origin bound violated at t={t}: {v} > {}", o.eval(t)));
                }
            }
        }
        Ok(())
    }

    /// Attaches power-law bounds fitted from the local behaviour at `lo` and
    /// `hi`, widened by a safety factor and checked on two further decades.
    ///
    /// Used for derived weights whose asymptotics are power-log but not
    /// available in closed form.
    pub fn with_fitted_bounds(self, lo: f64, hi: f64) -> Result<Self> {
        const SAFETY: f64 = 2.0;
        const NUDGE: f64 = 0.02;
        let f = |t: f64| self.eval(t);

        let (a0, a1) = (f(lo), f(lo * 10.0));
        let origin = if a0 > 0.0 && a1 > 0.0 {
            let power = (a1 / a0).log10() - NUDGE;
            let mut coeff = SAFETY * a0 * lo.powf(-power);
            for t in [lo / 10.0, lo / 100.0, lo * 0.3] {
                coeff = coeff.max(SAFETY * f(t) * t.powf(-power));
            }
            OriginBound::new(coeff, power, lo)
        } else if a0 == 0.0 && a1 == 0.0 {
            OriginBound::new(0.0, 0.0, lo)
        } else {
            return Err(Error::InvalidArgument(format!(
                "cannot fit origin bound: f({lo}) = {a0}, f({}) = {a1}",
                lo * 10.0
            )));
        };

        let (b0, b1) = (f(hi / 10.0), f(hi));
        let envelope = if b0 > 0.0 && b1 > 0.0 {
            let decay = -(b1 / b0).log10() - NUDGE;
            let mut coeff = SAFETY * b1 * hi.powf(decay);
            for t in [hi * 10.0, hi * 100.0, hi * 3.0] {
                coeff = coeff.max(SAFETY * f(t) * t.powf(decay));
            }
            TailEnvelope::new(coeff, decay, hi)
        } else if b0 == 0.0 && b1 == 0.0 {
            TailEnvelope::new(0.0, 2.0, hi)
        } else {
            return Err(Error::InvalidArgument(format!(
                "cannot fit tail envelope: f({}) = {b0}, f({hi}) = {b1}",
                hi / 10.0
            )));
        };
        if !(origin.coeff.is_finite() && envelope.coeff.is_finite()) {
            return Err(Error::InvalidArgument("fitted bounds are not finite".into()));
        }
        Ok(self.with_origin(origin).with_envelope(envelope))
    }
}
