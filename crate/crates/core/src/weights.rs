//! Piecewise power-log weights `c · t^a · |ln t|^b` and their transforms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalfn::{EvalFn, Monotone};
use crate::quad::{adaptive, panels_between, quad_finite, Integral, OriginBound, QuadSpec, TailEnvelope};
use crate::step::StepFn;

/// Points where derived weights are probed to fit their asymptotic bounds.
const FIT_LO: f64 = 1e-30;
const FIT_HI: f64 = 1e30;

/// Slack used to dominate a positive log power by a power of `t`.
const LOG_SLACK: f64 = 0.01;

/// One piece `c · t^a · |ln t|^b` on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    #[serde(with = "crate::serde_ext")]
    pub lo: f64,
    #[serde(with = "crate::serde_ext")]
    pub hi: f64,
    pub c: f64,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

impl Piece {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        let base = self.c * t.powf(self.a);
        if self.b == 0.0 {
            base
        } else {
            base * t.ln().abs().powf(self.b)
        }
    }
}

/// A weight on `(0, ∞)` given by power-log pieces on a finite partition.
///
/// Pieces with a log factor never straddle `t = 1`; they are split there on
/// construction. Pieces with `c = 0` are allowed so that step weights fit the
/// same representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Piece>", into = "Vec<Piece>")]
pub struct Weight {
    pieces: Arc<[Piece]>,
}

impl TryFrom<Vec<Piece>> for Weight {
    type Error = Error;
    fn try_from(p: Vec<Piece>) -> Result<Self> {
        Weight::from_pieces(p)
    }
}

impl From<Weight> for Vec<Piece> {
    fn from(w: Weight) -> Self {
        w.pieces.to_vec()
    }
}

/// Convergence of an integral at one end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Convergent,
    Divergent,
}

impl Convergence {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Convergence::Convergent
        } else {
            Convergence::Divergent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedBy {
    ExponentRule,
    Quadrature,
}

/// Convergence of `∫ u(t) (1+t)^{-p} dt` at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub at_zero: Convergence,
    pub at_infinity: Convergence,
    pub decided_by: DecidedBy,
}

impl ConvergenceVerdict {
    pub fn is_admissible(&self) -> bool {
        self.at_zero == Convergence::Convergent && self.at_infinity == Convergence::Convergent
    }
}

/// `∫_0 t^a |ln t|^b dt < ∞`.
pub fn converges_at_zero(a: f64, b: f64) -> bool {
    a > -1.0 || (a == -1.0 && b < -1.0)
}

/// `∫^∞ t^a |ln t|^b dt < ∞`.
pub fn converges_at_infinity(a: f64, b: f64) -> bool {
    a < -1.0 || (a == -1.0 && b < -1.0)
}

impl Weight {
    /// Validates and normalizes a list of pieces covering `(0, ∞)`.
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidWeight("no pieces".into()));
        }
        if pieces[0].lo != 0.0 {
            return Err(Error::InvalidWeight("first piece must start at 0".into()));
        }
        if pieces.last().unwrap().hi != f64::INFINITY {
            return Err(Error::InvalidWeight("last piece must end at infinity".into()));
        }
        let mut out: Vec<Piece> = Vec::with_capacity(pieces.len() + 1);
        for (i, p) in pieces.iter().enumerate() {
            if !(p.lo < p.hi) {
                return Err(Error::InvalidWeight(format!("empty piece [{}, {}]", p.lo, p.hi)));
            }
            if i > 0 && pieces[i - 1].hi != p.lo {
                return Err(Error::InvalidWeight(format!(
                    "pieces must be contiguous: {} != {}",
                    pieces[i - 1].hi, p.lo
                )));
            }
            if !(p.c >= 0.0 && p.c.is_finite() && p.a.is_finite() && p.b.is_finite()) {
                return Err(Error::InvalidWeight(format!(
                    "coefficients must be finite with c >= 0: {p:?}"
                )));
            }
            if p.b != 0.0 && p.c > 0.0 && p.lo < 1.0 && p.hi > 1.0 {
                out.push(Piece { hi: 1.0, ..*p });
                out.push(Piece { lo: 1.0, ..*p });
            } else {
                out.push(*p);
            }
        }
        for p in &out {
            if p.c > 0.0 && p.b <= -1.0 && (p.lo == 1.0 || p.hi == 1.0) {
                return Err(Error::InvalidWeight(format!(
                    "log power {} is not integrable at t = 1",
                    p.b
                )));
            }
        }
        Ok(Weight {
            pieces: Arc::from(out),
        })
    }

    /// `c · t^a · |ln t|^b` on all of `(0, ∞)`.
    pub fn power_log(c: f64, a: f64, b: f64) -> Result<Self> {
        Weight::from_pieces(vec![Piece {
            lo: 0.0,
            hi: f64::INFINITY,
            c,
            a,
            b,
        }])
    }

    /// `t^a`.
    pub fn power(a: f64) -> Self {
        Weight::power_log(1.0, a, 0.0).expect("pure powers are valid weights")
    }

    /// A step weight.
    pub fn from_step(s: &StepFn) -> Self {
        let pieces = s
            .pieces()
            .map(|(lo, hi, v)| Piece {
                lo,
                hi,
                c: v,
                a: 0.0,
                b: 0.0,
            })
            .collect();
        Weight::from_pieces(pieces).expect("step pieces are contiguous")
    }

    /// `t^{2p-1} (ln 1/t)^{-α}` on `(0,1)` and `t^{p-1-α}` on `(1,∞)`.
    ///
    /// With exponent `2p` its Gamma and Lambda norms are not equivalent.
    pub fn log_critical(p: f64, alpha: f64) -> Result<Self> {
        if !(p > 1.0 && alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidWeight(format!(
                "need p > 1 and 0 < alpha < 1, got p = {p}, alpha = {alpha}"
            )));
        }
        Weight::from_pieces(vec![
            Piece {
                lo: 0.0,
                hi: 1.0,
                c: 1.0,
                a: 2.0 * p - 1.0,
                b: -alpha,
            },
            Piece {
                lo: 1.0,
                hi: f64::INFINITY,
                c: 1.0,
                a: p - 1.0 - alpha,
                b: 0.0,
            },
        ])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `Some((c, a))` when the weight is `c · t^a` on all of `(0, ∞)`.
    pub fn as_pure_power(&self) -> Option<(f64, f64)> {
        match &*self.pieces {
            [p] if p.b == 0.0 && p.c > 0.0 => Some((p.c, p.a)),
            _ => None,
        }
    }

    pub fn has_log_factors(&self) -> bool {
        self.pieces.iter().any(|p| p.b != 0.0 && p.c > 0.0)
    }

    fn piece_at(&self, t: f64) -> &Piece {
        let idx = self.pieces.partition_point(|p| p.hi <= t);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    pub fn value(&self, t: f64) -> f64 {
        self.piece_at(t).eval(t)
    }

    /// Interior breakpoints of the partition.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    /// `∫_a^b u(t) t^γ dt`, `+∞` when divergent.
    pub fn moment(&self, gamma: f64, a: f64, b: f64, q: &QuadSpec) -> Result<Integral> {
        if !(a >= 0.0 && b >= a) {
            return Err(Error::InvalidArgument(format!(
                "moment bounds must satisfy 0 <= a <= b, got [{a}, {b}]"
            )));
        }
        let mut total = Integral::ZERO;
        for p in self.pieces.iter() {
            let (s1, s2) = (a.max(p.lo), b.min(p.hi));
            if s2 <= s1 {
                continue;
            }
            let r = piece_moment(p, gamma, s1, s2, q)?;
            if !r.is_finite() {
                return Ok(Integral::divergent());
            }
            total = total + r;
        }
        Ok(total)
    }

    /// `∫_0^t u`.
    pub fn primitive(&self, t: f64, q: &QuadSpec) -> Result<Integral> {
        self.moment(0.0, 0.0, t, q)
    }

    /// `∫_t^∞ u(s) s^{-p} ds`.
    pub fn tail_p(&self, t: f64, p: f64, q: &QuadSpec) -> Result<Integral> {
        self.moment(-p, t, f64::INFINITY, q)
    }

    /// `t ↦ u(1/t)`.
    pub fn reflect(&self) -> Weight {
        let pieces: Vec<Piece> = self
            .pieces
            .iter()
            .rev()
            .map(|p| Piece {
                lo: if p.hi.is_infinite() { 0.0 } else { 1.0 / p.hi },
                hi: if p.lo == 0.0 { f64::INFINITY } else { 1.0 / p.lo },
                c: p.c,
                a: -p.a,
                b: p.b,
            })
            .collect();
        Weight {
            pieces: Arc::from(pieces),
        }
    }

    /// `t ↦ t^γ u(t)`.
    pub fn mul_power(&self, gamma: f64) -> Weight {
        let pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| Piece { a: p.a + gamma, ..*p })
            .collect();
        Weight {
            pieces: Arc::from(pieces),
        }
    }

    /// `u_p(t) = u(1/t) t^{p-2}`.
    pub fn reflect_p(&self, p: f64) -> Weight {
        self.reflect().mul_power(p - 2.0)
    }

    /// Pointwise product.
    pub fn product(&self, other: &Weight) -> Weight {
        let mut cuts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .chain(other.breakpoints())
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut nodes = vec![0.0];
        nodes.extend(cuts);
        nodes.push(f64::INFINITY);
        let pieces: Vec<Piece> = nodes
            .windows(2)
            .map(|w| {
                let mid = if w[1].is_infinite() { w[0] * 2.0 + 1.0 } else { 0.5 * (w[0] + w[1]) };
                let (x, y) = (self.piece_at(mid), other.piece_at(mid));
                Piece {
                    lo: w[0],
                    hi: w[1],
                    c: x.c * y.c,
                    a: x.a + y.a,
                    b: x.b + y.b,
                }
            })
            .collect();
        Weight::from_pieces(pieces).expect("product of valid weights is valid")
    }

    /// Convergence of `∫_0 u(t) t^γ dt`.
    pub fn converges_at_zero(&self, gamma: f64) -> bool {
        let p = &self.pieces[0];
        p.c == 0.0 || converges_at_zero(p.a + gamma, p.b)
    }

    /// Convergence of `∫^∞ u(t) t^γ dt`.
    pub fn converges_at_infinity(&self, gamma: f64) -> bool {
        let p = self.pieces.last().unwrap();
        p.c == 0.0 || converges_at_infinity(p.a + gamma, p.b)
    }

    /// Whether `∫ u(t) (1+t)^{-p} dt < ∞`.
    pub fn admissible(&self, p: f64) -> ConvergenceVerdict {
        ConvergenceVerdict {
            at_zero: Convergence::from_bool(self.converges_at_zero(0.0)),
            at_infinity: Convergence::from_bool(self.converges_at_infinity(-p)),
            decided_by: DecidedBy::ExponentRule,
        }
    }

    /// `|u(t)| <= C t^e` near the origin.
    pub fn origin_bound(&self) -> OriginBound {
        let p = &self.pieces[0];
        if p.c == 0.0 {
            return OriginBound::new(0.0, 0.0, p.hi);
        }
        if p.b == 0.0 {
            return OriginBound::new(p.c, p.a, p.hi);
        }
        // Here p.hi <= 1.
        if p.b < 0.0 {
            let upto = p.hi.min(std::f64::consts::E.recip());
            OriginBound::new(p.c, p.a, upto)
        } else {
            let eps = log_slack(p.a + 1.0);
            OriginBound::new(p.c * log_dominance(p.b, eps), p.a - eps, p.hi)
        }
    }

    /// `|u(t)| <= C t^{-d}` near infinity.
    pub fn tail_bound(&self) -> TailEnvelope {
        let p = self.pieces.last().unwrap();
        if p.c == 0.0 {
            return TailEnvelope::new(0.0, 2.0, p.lo);
        }
        if p.b == 0.0 {
            return TailEnvelope::new(p.c, -p.a, p.lo);
        }
        if p.b < 0.0 {
            TailEnvelope::new(p.c, -p.a, p.lo.max(std::f64::consts::E))
        } else {
            let eps = log_slack(-p.a - 1.0);
            TailEnvelope::new(p.c * log_dominance(p.b, eps), -p.a - eps, p.lo)
        }
    }

    /// The weight as an evaluable handle with bounds attached.
    pub fn to_evalfn(&self) -> EvalFn {
        let w = self.clone();
        EvalFn::new(move |t| w.value(t), Monotone::None)
            .with_origin(self.origin_bound())
            .with_envelope(self.tail_bound())
            .with_breaks(self.breakpoints())
    }
}

/// Slack for dominating a positive log power, kept below half the margin of
/// integrability when that margin is positive.
fn log_slack(margin: f64) -> f64 {
    if margin > 0.0 {
        LOG_SLACK.min(0.5 * margin)
    } else {
        LOG_SLACK
    }
}

/// `max_{y>0} y^b e^{-εy}`.
fn log_dominance(b: f64, eps: f64) -> f64 {
    (b / eps).powf(b) * (-b).exp()
}

/// `∫_{s1}^{s2} t^k dt`.
fn power_integral(k: f64, s1: f64, s2: f64) -> f64 {
    let e = k + 1.0;
    if e == 0.0 {
        if s1 == 0.0 || s2.is_infinite() {
            return f64::INFINITY;
        }
        return (s2 / s1).ln();
    }
    if s1 == 0.0 {
        if e < 0.0 {
            return f64::INFINITY;
        }
        return if s2.is_infinite() { f64::INFINITY } else { s2.powf(e) / e };
    }
    if s2.is_infinite() {
        if e > 0.0 {
            return f64::INFINITY;
        }
        return -s1.powf(e) / e;
    }
    s1.powf(e) * (e * (s2 / s1).ln()).exp_m1() / e
}

fn piece_moment(p: &Piece, gamma: f64, s1: f64, s2: f64, q: &QuadSpec) -> Result<Integral> {
    if p.c == 0.0 {
        return Ok(Integral::ZERO);
    }
    let k = p.a + gamma;
    if p.b == 0.0 {
        return Ok(Integral::exact(p.c * power_integral(k, s1, s2)));
    }
    let (lambda, y1, y2) = if p.hi <= 1.0 {
        let y2 = if s1 == 0.0 { f64::INFINITY } else { -s1.ln() };
        (k + 1.0, (-s2.ln()).max(0.0), y2)
    } else {
        let y2 = if s2.is_infinite() { f64::INFINITY } else { s2.ln() };
        (-(k + 1.0), s1.ln().max(0.0), y2)
    };
    Ok(exp_log_integral(lambda, p.b, y1, y2, q)?.scale(p.c))
}

/// `∫_{y1}^{y2} e^{-λy} y^b dy` for `0 <= y1 < y2 <= ∞`.
pub(crate) fn exp_log_integral(lambda: f64, b: f64, y1: f64, y2: f64, q: &QuadSpec) -> Result<Integral> {
    if !(y2 > y1) {
        return Ok(Integral::ZERO);
    }
    if y1 == 0.0 && b <= -1.0 {
        return Ok(Integral::divergent());
    }
    if y2.is_infinite() && (lambda < 0.0 || (lambda == 0.0 && b >= -1.0)) {
        return Ok(Integral::divergent());
    }
    if lambda == 0.0 {
        return Ok(Integral::exact(power_integral(b, y1, y2)));
    }
    let phi = |y: f64| -lambda * y + b * y.ln();
    // Scale out the largest exponent so the quadrature sees O(1) values.
    let mut m = f64::NEG_INFINITY;
    let mut cand = vec![y2.min(1.0).max(y1)];
    if y1 > 0.0 {
        cand.push(y1);
    }
    if y2.is_finite() {
        cand.push(y2);
    }
    let ystar = b / lambda;
    if ystar > y1 && ystar < y2 {
        cand.push(ystar);
    }
    for y in cand {
        if y > 0.0 {
            m = m.max(phi(y));
        }
    }
    if !m.is_finite() {
        m = 0.0;
    }
    let qq = QuadSpec {
        abs_tol: 1e-300,
        ..*q
    };
    let mut total = Integral::ZERO;
    let mut start = y1;
    if y1 == 0.0 {
        let ys = y2.min(1.0);
        let head = if b < 0.0 {
            let e1 = b + 1.0;
            let wmax = ys.powf(e1) / e1;
            quad_finite(
                |w: f64| (-lambda * (e1 * w).powf(1.0 / e1) - m).exp(),
                0.0,
                wmax,
                &[],
                &qq,
            )?
        } else {
            quad_finite(
                |y: f64| if y == 0.0 { 0.0 } else { (phi(y) - m).exp() },
                0.0,
                ys,
                &[],
                &qq,
            )?
        };
        total = total + head;
        start = ys;
    }
    let in_log = |xa: f64, xb: f64| {
        let g = |x: f64| (phi(x.exp()) - m + x).exp();
        adaptive(&g, &panels_between(xa, xb, &[], 0.5), 0.0, &qq)
    };
    if start < y2 {
        if y2.is_finite() {
            total = total + in_log(start.ln(), y2.ln())?;
        } else {
            // Extend until the analytic tail bound is negligible.
            let bpos = b.max(0.0);
            let mut lo = start;
            let mut hi = (2.0 * start).max(start + 40.0 / lambda).max(2.0 * bpos / lambda);
            let bound = |y: f64| (phi(y) - m).exp() / (lambda - bpos / y);
            loop {
                total = total + in_log(lo.ln(), hi.ln())?;
                let tb = bound(hi);
                if tb <= 0.01 * qq.rel_tol * total.value.abs() || hi > 1e300 {
                    total.error += tb;
                    break;
                }
                lo = hi;
                hi *= 2.0;
            }
        }
    }
    Ok(total.scale(m.exp()))
}

/// A weight in closed form or given pointwise.
#[derive(Debug, Clone)]
pub enum WeightFn {
    PowerLog(Weight),
    Derived(EvalFn),
}

impl From<Weight> for WeightFn {
    fn from(w: Weight) -> Self {
        WeightFn::PowerLog(w)
    }
}

impl WeightFn {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            WeightFn::PowerLog(w) => w.value(t),
            WeightFn::Derived(e) => e.eval(t),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            WeightFn::PowerLog(w) => w.breakpoints(),
            WeightFn::Derived(e) => e.breaks().to_vec(),
        }
    }

    pub fn as_power_log(&self) -> Option<&Weight> {
        match self {
            WeightFn::PowerLog(w) => Some(w),
            WeightFn::Derived(_) => None,
        }
    }

    pub fn to_evalfn(&self) -> EvalFn {
        match self {
            WeightFn::PowerLog(w) => w.to_evalfn(),
            WeightFn::Derived(e) => e.clone(),
        }
    }

    fn converges_at_zero(&self, gamma: f64) -> bool {
        match self {
            WeightFn::PowerLog(w) => w.converges_at_zero(gamma),
            WeightFn::Derived(e) => e.origin().is_some_and(|o| o.coeff == 0.0 || o.power + gamma > -1.0),
        }
    }

    fn converges_at_infinity(&self, gamma: f64) -> bool {
        match self {
            WeightFn::PowerLog(w) => w.converges_at_infinity(gamma),
            WeightFn::Derived(e) => e.envelope().is_some_and(|v| v.coeff == 0.0 || v.decay - gamma > 1.0),
        }
    }

    /// `∫_a^b u(t) t^γ dt`, `+∞` when divergent.
    pub fn moment(&self, gamma: f64, a: f64, b: f64, q: &QuadSpec) -> Result<Integral> {
        match self {
            WeightFn::PowerLog(w) => w.moment(gamma, a, b, q),
            WeightFn::Derived(e) => {
                if a == b {
                    return Ok(Integral::ZERO);
                }
                if (a == 0.0 && !self.converges_at_zero(gamma))
                    || (b.is_infinite() && !self.converges_at_infinity(gamma))
                {
                    return Ok(Integral::divergent());
                }
                e.moment(gamma, a, b, q)
            }
        }
    }

    pub fn primitive(&self, t: f64, q: &QuadSpec) -> Result<Integral> {
        self.moment(0.0, 0.0, t, q)
    }

    pub fn tail_p(&self, t: f64, p: f64, q: &QuadSpec) -> Result<Integral> {
        self.moment(-p, t, f64::INFINITY, q)
    }

    pub fn admissible(&self, p: f64) -> ConvergenceVerdict {
        match self {
            WeightFn::PowerLog(w) => w.admissible(p),
            WeightFn::Derived(_) => ConvergenceVerdict {
                at_zero: Convergence::from_bool(self.converges_at_zero(0.0)),
                at_infinity: Convergence::from_bool(self.converges_at_infinity(-p)),
                decided_by: DecidedBy::Quadrature,
            },
        }
    }
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} must be a real > 1, got {p}")));
    }
    Ok(())
}

/// The down-dual weight
/// `v'(t) = t^{q'+q-1} V(t) W(t) / [V(t) + t^q W(t)]^{q'+1}` with
/// `V(t) = ∫_0^t v`, `W(t) = ∫_t^∞ v(s) s^{-q} ds`; closed form for powers.
pub fn down_dual(v: &Weight, q_exp: f64, q: &QuadSpec) -> Result<WeightFn> {
    check_exponent("q", q_exp)?;
    if let Some((c, beta)) = v.as_pure_power() {
        if beta <= -1.0 || beta >= q_exp - 1.0 {
            return Err(Error::Divergent(format!(
                "v = t^{beta} has a divergent primitive or tail for q = {q_exp}"
            )));
        }
        let qp = q_exp / (q_exp - 1.0);
        let k = q_exp / ((beta + 1.0) * (q_exp - beta - 1.0));
        let d = 1.0 / ((beta + 1.0) * (q_exp - beta - 1.0)) / k.powf(qp + 1.0);
        // V and W both scale with c, so v' scales with c^{1 - q'}.
        let d = d * c.powf(1.0 - qp);
        return Ok(WeightFn::PowerLog(
            Weight::power_log(d, -beta / (q_exp - 1.0), 0.0).expect("valid power"),
        ));
    }
    down_dual_eval(v, q_exp, q).map(WeightFn::Derived)
}

/// [`down_dual`] evaluated pointwise, without the closed-form shortcut.
pub fn down_dual_eval(v: &Weight, q_exp: f64, q: &QuadSpec) -> Result<EvalFn> {
    check_exponent("q", q_exp)?;
    let total = v.moment(0.0, 0.0, f64::INFINITY, q)?;
    if total.is_finite() {
        return Err(Error::FiniteMass);
    }
    if !v.converges_at_zero(0.0) {
        return Err(Error::Divergent("v is not integrable at the origin".into()));
    }
    if !v.converges_at_infinity(-q_exp) {
        return Err(Error::Divergent(format!(
            "∫ v(s) s^-{q_exp} ds diverges at infinity"
        )));
    }
    let qp = q_exp / (q_exp - 1.0);
    let w = v.clone();
    let qs = *q;
    let f = EvalFn::new(
        move |t| {
            let (Ok(a), Ok(b)) = (w.primitive(t, &qs), w.tail_p(t, q_exp, &qs)) else {
                return f64::NAN;
            };
            let (la, lb, lt) = (a.value.ln(), b.value.ln(), t.ln());
            let lx = log_add(la, q_exp * lt + lb);
            ((qp + q_exp - 1.0) * lt + la + lb - (qp + 1.0) * lx).exp()
        },
        Monotone::None,
    )
    .with_breaks(v.breakpoints());
    f.with_fitted_bounds(FIT_LO, FIT_HI)
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn check_tail(u: &Weight, p: f64) -> Result<()> {
    if !u.converges_at_infinity(-p) {
        return Err(Error::Divergent(format!(
            "∫_t^∞ u(s) s^-{p} ds diverges"
        )));
    }
    Ok(())
}

/// `u^{(p)}(t) = p t^{p-1} ∫_t^∞ u(s) s^{-p} ds`; closed form for powers.
pub fn level_smallest(u: &Weight, p: f64, q: &QuadSpec) -> Result<WeightFn> {
    check_exponent("p", p)?;
    check_tail(u, p)?;
    if let Some((c, a)) = u.as_pure_power() {
        return Ok(WeightFn::PowerLog(
            Weight::power_log(c * p / (p - a - 1.0), a, 0.0).expect("valid power"),
        ));
    }
    level_smallest_eval(u, p, q).map(WeightFn::Derived)
}

/// [`level_smallest`] evaluated pointwise, without the closed-form shortcut.
pub fn level_smallest_eval(u: &Weight, p: f64, q: &QuadSpec) -> Result<EvalFn> {
    check_exponent("p", p)?;
    check_tail(u, p)?;
    let w = u.clone();
    let qs = *q;
    EvalFn::new(
        move |t| match w.tail_p(t, p, &qs) {
            Ok(r) => p * t.powf(p - 1.0) * r.value,
            Err(_) => f64::NAN,
        },
        Monotone::None,
    )
    .with_breaks(u.breakpoints())
    .with_fitted_bounds(FIT_LO, FIT_HI)
}

/// `u^{(p)}_{2p}(t) = p t^{p-1} ∫_{1/t}^∞ u(s) s^{-p} ds`; closed form for powers.
pub fn fourier_target(u: &Weight, p: f64, q: &QuadSpec) -> Result<WeightFn> {
    check_exponent("p", p)?;
    check_tail(u, p)?;
    if let Some((c, a)) = u.as_pure_power() {
        return Ok(WeightFn::PowerLog(
            Weight::power_log(c * p / (p - a - 1.0), 2.0 * p - 2.0 - a, 0.0).expect("valid power"),
        ));
    }
    fourier_target_eval(u, p, q).map(WeightFn::Derived)
}

/// [`fourier_target`] evaluated pointwise, without the closed-form shortcut.
pub fn fourier_target_eval(u: &Weight, p: f64, q: &QuadSpec) -> Result<EvalFn> {
    check_exponent("p", p)?;
    check_tail(u, p)?;
    let w = u.clone();
    let qs = *q;
    let breaks: Vec<f64> = u.breakpoints().iter().rev().map(|b| 1.0 / b).collect();
    EvalFn::new(
        move |t| match w.tail_p(1.0 / t, p, &qs) {
            Ok(r) => p * t.powf(p - 1.0) * r.value,
            Err(_) => f64::NAN,
        },
        Monotone::Increasing,
    )
    .with_breaks(breaks)
    .with_fitted_bounds(FIT_LO, FIT_HI)
}

/// A weight transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightOp {
    ReflectP,
    DownDual,
    LevelSmallest,
    FourierTarget,
}

impl WeightOp {
    pub fn apply(self, u: &Weight, p: f64, q: &QuadSpec) -> Result<WeightFn> {
        match self {
            WeightOp::ReflectP => {
                check_exponent("p", p)?;
                Ok(WeightFn::PowerLog(u.reflect_p(p)))
            }
            WeightOp::DownDual => down_dual(u, p, q),
            WeightOp::LevelSmallest => level_smallest(u, p, q),
            WeightOp::FourierTarget => fourier_target(u, p, q),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Serializable description of a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// Explicit `(interval, c, a, b)` pieces.
    Pieces { pieces: Weight },
    /// `c · t^a · |ln t|^b` on all of `(0, ∞)`.
    PowerLog {
        #[serde(default = "one")]
        c: f64,
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// A step weight given as `(breakpoint, value)` pairs.
    Step { step: StepFn },
    /// See [`Weight::log_critical`].
    LogCritical { p: f64, alpha: f64 },
    /// A transform of another (closed-form) weight.
    Transform {
        op: WeightOp,
        p: f64,
        of: Box<WeightSpec>,
    },
}

impl WeightSpec {
    pub fn power(a: f64) -> Self {
        WeightSpec::PowerLog { c: 1.0, a, b: 0.0 }
    }

    /// Resolves to a closed-form weight, failing for transforms that are
    /// only available pointwise.
    pub fn resolve_power_log(&self, q: &QuadSpec) -> Result<Weight> {
        match self.resolve(q)? {
            WeightFn::PowerLog(w) => Ok(w),
            WeightFn::Derived(_) => Err(Error::Unsupported(
                "this weight has no closed power-log form".into(),
            )),
        }
    }

    pub fn resolve(&self, q: &QuadSpec) -> Result<WeightFn> {
        match self {
            WeightSpec::Pieces { pieces } => Ok(WeightFn::PowerLog(pieces.clone())),
            WeightSpec::PowerLog { c, a, b } => Ok(WeightFn::PowerLog(Weight::power_log(*c, *a, *b)?)),
            WeightSpec::Step { step } => Ok(WeightFn::PowerLog(Weight::from_step(step))),
            WeightSpec::LogCritical { p, alpha } => Ok(WeightFn::PowerLog(Weight::log_critical(*p, *alpha)?)),
            WeightSpec::Transform { op, p, of } => {
                let base = of.resolve_power_log(q)?;
                op.apply(&base, *p, q)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadSpec {
        QuadSpec::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn power_primitive_and_tail() {
        let u = Weight::power(0.5);
        let r = u.primitive(4.0, &q()).unwrap();
        assert!(rel(r.value, 16.0 / 3.0) < 1e-15);
        assert_eq!(Weight::power(0.0).primitive(3.0, &q()).unwrap().value, 3.0);
        let t = Weight::power(0.0).tail_p(1.0, 2.0, &q()).unwrap();
        assert!(rel(t.value, 1.0) < 1e-15);
        let t = Weight::power(1.0).tail_p(1.0, 2.0, &q()).unwrap();
        assert_eq!(t.value, f64::INFINITY);
        let t = Weight::power(0.3).tail_p(2.0, 3.0, &q()).unwrap();
        assert!(rel(t.value, 2f64.powf(-1.7) / 1.7) < 1e-14);
    }

    #[test]
    fn log_moments_match_incomplete_gamma() {
        // ∫_0^1 t^k (ln 1/t)^b dt = Γ(b+1)/(k+1)^{b+1}
        let cases = [(1.0, -0.5), (3.0, -0.5), (0.0, 2.0), (2.5, 0.7)];
        for (a, b) in cases {
            let w = Weight::from_pieces(vec![
                Piece { lo: 0.0, hi: 1.0, c: 1.0, a, b },
                Piece { lo: 1.0, hi: f64::INFINITY, c: 0.0, a: 0.0, b: 0.0 },
            ])
            .unwrap();
            let r = w.primitive(1.0, &q()).unwrap();
            let exact = statrs::function::gamma::gamma(b + 1.0) / (a + 1.0f64).powf(b + 1.0);
            assert!(rel(r.value, exact) < 1e-9, "a={a} b={b}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn tail_with_log_factor() {
        // ∫_e^∞ t^{-2} (ln t)^{1} dt = 2/e
        let w = Weight::power_log(1.0, 0.0, 1.0).unwrap();
        let r = w.tail_p(std::f64::consts::E, 2.0, &q()).unwrap();
        assert!(rel(r.value, 2.0 / std::f64::consts::E) < 1e-9, "{r:?}");
    }

    #[test]
    fn log_pieces_split_at_one() {
        let w = Weight::power_log(1.0, 0.0, 0.5).unwrap();
        assert_eq!(w.pieces().len(), 2);
        assert!(Weight::power_log(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn reflect_p_on_powers() {
        let u = Weight::power(0.7);
        let up = u.reflect_p(3.0);
        let (c, a) = up.as_pure_power().unwrap();
        assert_eq!(c, 1.0);
        assert!((a - (3.0 - 2.0 - 0.7)).abs() < 1e-15);
        let back = up.reflect_p(3.0);
        assert!((back.as_pure_power().unwrap().1 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn reflect_p_on_log_critical() {
        let p = 2.0;
        let u = Weight::log_critical(p, 0.5).unwrap();
        let up = u.reflect_p(p);
        let last = up.pieces().last().unwrap();
        assert_eq!(last.lo, 1.0);
        assert!((last.a - (-p - 1.0)).abs() < 1e-15);
        assert_eq!(last.b, -0.5);
        for t in [0.1, 0.5, 2.0, 10.0] {
            assert!(rel(up.value(t), u.value(1.0 / t) * t.powf(p - 2.0)) < 1e-14);
        }
    }

    #[test]
    fn down_dual_of_constant() {
        let v = Weight::power(0.0);
        let d = down_dual(&v, 2.0, &q()).unwrap();
        assert!(rel(d.value(3.0), 0.125) < 1e-15);
        let e = down_dual_eval(&v, 2.0, &q()).unwrap();
        for t in [1e-5, 0.3, 1.0, 7.0, 1e6] {
            assert!(rel(e.eval(t), 0.125) < 1e-12, "t={t}: {}", e.eval(t));
        }
    }

    #[test]
    fn down_dual_requires_infinite_mass() {
        let v = Weight::from_step(&StepFn::indicator(0.0, 1.0).unwrap());
        assert_eq!(down_dual(&v, 2.0, &q()).unwrap_err(), Error::FiniteMass);
    }

    #[test]
    fn level_smallest_of_constant() {
        let u = Weight::power(0.0);
        assert!(rel(level_smallest(&u, 2.0, &q()).unwrap().value(5.0), 2.0) < 1e-15);
        let e = level_smallest_eval(&u, 2.0, &q()).unwrap();
        assert!(rel(e.eval(5.0), 2.0) < 1e-14);
    }

    #[test]
    fn fourier_target_composition() {
        let u = Weight::log_critical(2.0, 0.5).unwrap();
        let ft = fourier_target_eval(&u, 2.0, &q()).unwrap();
        let ls = level_smallest_eval(&u, 2.0, &q()).unwrap();
        for t in crate::quad::log_grid(1e-3, 1e3, 13) {
            assert!(rel(ft.eval(t), ls.eval(1.0 / t) * t.powf(2.0)) < 1e-9);
        }
    }

    #[test]
    fn admissibility() {
        assert!(Weight::power(0.5).admissible(2.0).is_admissible());
        assert!(!Weight::power(1.0).admissible(2.0).is_admissible());
        assert!(!Weight::power(-1.0).admissible(2.0).is_admissible());
        for alpha in [0.1, 0.5, 0.9] {
            assert!(Weight::log_critical(2.0, alpha).unwrap().admissible(2.0).is_admissible());
        }
    }

    #[test]
    fn bounds_dominate() {
        let w = Weight::log_critical(2.0, 0.5).unwrap();
        let e = w.to_evalfn();
        e.spot_check(&crate::quad::log_grid(1e-12, 1e12, 100)).unwrap();
        let w = Weight::power_log(1.0, -0.5, 0.8).unwrap();
        w.to_evalfn().spot_check(&crate::quad::log_grid(1e-12, 1e12, 100)).unwrap();
    }
}
