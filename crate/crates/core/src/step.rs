//! Nonnegative step functions on `(0, ∞)` and their exact rearrangement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative piecewise-constant function on `(0, ∞)`.
///
/// With breakpoints `b_1 < … < b_k` the function takes `values[0]` on
/// `(0, b_1)`, `values[i]` on `[b_i, b_{i+1})` and `values[k]` on `[b_k, ∞)`.
/// Evaluation is right-continuous at breakpoints. Adjacent equal values are
/// merged on construction, so two step functions are equal as functions iff
/// they compare equal.
///
/// Serializes as a list of `(breakpoint, value)` pairs, the first of which
/// has breakpoint `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct StepFn {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFn {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidStep(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        if let Some(b) = breaks.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidStep(format!("breakpoint {b} is not a positive real")));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidStep("breakpoints must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidStep(format!("value {v} is not a nonnegative real")));
        }
        Ok(Self::canonical(breaks, values))
    }

    fn canonical(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        let mut b_out = Vec::with_capacity(breaks.len());
        let mut v_out = Vec::with_capacity(values.len());
        v_out.push(values[0]);
        for (b, v) in breaks.into_iter().zip(values.into_iter().skip(1)) {
            if v != *v_out.last().unwrap() {
                b_out.push(b);
                v_out.push(v);
            }
        }
        StepFn {
            breaks: b_out,
            values: v_out,
        }
    }

    pub fn zero() -> Self {
        StepFn {
            breaks: Vec::new(),
            values: vec![0.0],
        }
    }

    /// `height · χ_(a,b)`, with `0 <= a < b < ∞`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::block(a, b, 1.0)
    }

    pub fn block(a: f64, b: f64, height: f64) -> Result<Self> {
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidStep(format!("bad interval ({a}, {b})")));
        }
        if a == 0.0 {
            Self::new(vec![b], vec![height, 0.0])
        } else {
            Self::new(vec![a, b], vec![0.0, height, 0.0])
        }
    }

    /// Builds a function from consecutive `(length, value)` blocks starting at 0,
    /// vanishing after the last block.
    pub fn from_blocks(blocks: &[(f64, f64)]) -> Result<Self> {
        let mut breaks = Vec::with_capacity(blocks.len());
        let mut values = Vec::with_capacity(blocks.len() + 1);
        let mut pos = 0.0;
        for &(len, v) in blocks {
            if !(len > 0.0) {
                return Err(Error::InvalidStep(format!("block length {len} must be positive")));
            }
            values.push(v);
            pos += len;
            breaks.push(pos);
        }
        values.push(0.0);
        Self::new(breaks, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the unbounded last piece.
    pub fn tail_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn vanishes_at_infinity(&self) -> bool {
        self.tail_value() == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.values.len() == 1 && self.values[0] == 0.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breaks.partition_point(|&b| b <= t);
        self.values[idx]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Iterates `(lo, hi, value)` over all pieces; the last has `hi = ∞`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| {
            let lo = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            let hi = self.breaks.get(i).copied().unwrap_or(f64::INFINITY);
            (lo, hi, v)
        })
    }

    /// Pieces of finite length with a positive value.
    fn blocks(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pieces()
            .filter(|&(_, hi, v)| v > 0.0 && hi.is_finite())
            .map(|(lo, hi, v)| (v, hi - lo))
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// `∫_0^∞ f`, infinite if the tail value is positive.
    pub fn integral(&self) -> f64 {
        if !self.vanishes_at_infinity() {
            return f64::INFINITY;
        }
        self.pieces()
            .filter(|p| p.1.is_finite())
            .map(|(lo, hi, v)| v * (hi - lo))
            .sum()
    }

    /// `∫_0^t f`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (lo, hi, v) in self.pieces() {
            if lo >= t {
                break;
            }
            acc += v * (hi.min(t) - lo);
        }
        acc
    }

    /// `∫_a^b f` for `0 <= a <= b <= ∞`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        if b.is_infinite() {
            let total = self.integral();
            if total.is_infinite() {
                return total;
            }
            return total - self.integral_to(a);
        }
        let mut acc = 0.0;
        for (lo, hi, v) in self.pieces() {
            if lo >= b {
                break;
            }
            let (s, e) = (lo.max(a), hi.min(b));
            if e > s {
                acc += v * (e - s);
            }
        }
        acc
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be nonnegative")));
        }
        Ok(Self::canonical(
            self.breaks.clone(),
            self.values.iter().map(|v| v * c).collect(),
        ))
    }

    pub fn powf(&self, p: f64) -> Self {
        Self::canonical(
            self.breaks.clone(),
            self.values.iter().map(|v| v.powf(p)).collect(),
        )
    }

    /// Applies `op` pointwise on the common refinement of both partitions.
    pub fn zip_with(&self, other: &StepFn, op: impl Fn(f64, f64) -> f64) -> Self {
        let mut breaks: Vec<f64> = self
            .breaks
            .iter()
            .chain(other.breaks.iter())
            .copied()
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut values = Vec::with_capacity(breaks.len() + 1);
        values.push(op(self.values[0], other.values[0]));
        for &b in &breaks {
            values.push(op(self.eval(b), other.eval(b)));
        }
        Self::canonical(breaks, values)
    }

    pub fn add(&self, other: &StepFn) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &StepFn) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &StepFn) -> bool {
        self.zip_with(other, |a, b| if a <= b { 0.0 } else { 1.0 })
            .values
            .iter()
            .all(|&v| v == 0.0)
    }

    /// `x ↦ f(c·x)`.
    pub fn dilate(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("dilation factor {c} must be positive")));
        }
        Self::new(
            self.breaks.iter().map(|b| b / c).collect(),
            self.values.clone(),
        )
    }
}

impl TryFrom<Vec<(f64, f64)>> for StepFn {
    type Error = Error;

    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let Some((first, rest)) = pairs.split_first() else {
            return Err(Error::InvalidStep("empty step function".into()));
        };
        if first.0 != 0.0 {
            return Err(Error::InvalidStep("first pair must start at breakpoint 0".into()));
        }
        let breaks = rest.iter().map(|p| p.0).collect();
        let values = pairs.iter().map(|p| p.1).collect();
        StepFn::new(breaks, values)
    }
}

impl From<StepFn> for Vec<(f64, f64)> {
    fn from(f: StepFn) -> Self {
        std::iter::once(0.0)
            .chain(f.breaks.iter().copied())
            .zip(f.values.iter().copied())
            .collect()
    }
}

/// Level blocks `(value, cumulative measure)` sorted by decreasing value, equal
/// values merged. The cumulative measures are the jump points of `μ_f` and the
/// breakpoints of `f*`, so both are produced by this one routine.
fn level_table(f: &StepFn) -> Result<Vec<(f64, f64)>> {
    if !f.vanishes_at_infinity() {
        return Err(Error::InfiniteLevelSets);
    }
    if f.is_nonincreasing() {
        // Already rearranged: the cumulative measures are the breakpoints.
        return Ok(f
            .values
            .iter()
            .zip(f.breaks.iter())
            .filter(|(v, _)| **v > 0.0)
            .map(|(&v, &b)| (v, b))
            .collect());
    }
    let mut blocks: Vec<(f64, f64)> = f.blocks().collect();
    // Stable sort keeps ties in original interval order.
    blocks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut table: Vec<(f64, f64)> = Vec::with_capacity(blocks.len());
    let mut cum = 0.0;
    for (v, len) in blocks {
        cum += len;
        match table.last_mut() {
            Some(last) if last.0 == v => last.1 = cum,
            _ => table.push((v, cum)),
        }
    }
    Ok(table)
}

/// Distribution function `λ ↦ |{t : f(t) > λ}|` as a step function in `λ`.
pub fn distribution(f: &StepFn) -> Result<StepFn> {
    let table = level_table(f)?;
    // Levels ascending: μ is constant on [w_j, w_{j+1}).
    let breaks: Vec<f64> = table.iter().rev().map(|&(v, _)| v).collect();
    let mut values: Vec<f64> = table.iter().rev().map(|&(_, m)| m).collect();
    values.push(0.0);
    Ok(StepFn::canonical(breaks, values))
}

/// Nonincreasing rearrangement `f*`, computed exactly by sorting level blocks.
pub fn rearrange(f: &StepFn) -> Result<StepFn> {
    let table = level_table(f)?;
    if f.is_nonincreasing() {
        return Ok(f.clone());
    }
    let breaks = table.iter().map(|&(_, m)| m).collect();
    let mut values: Vec<f64> = table.iter().map(|&(v, _)| v).collect();
    values.push(0.0);
    Ok(StepFn::canonical(breaks, values))
}

impl StepFn {
    pub fn rearrange(&self) -> Result<StepFn> {
        rearrange(self)
    }

    pub fn distribution(&self) -> Result<StepFn> {
        distribution(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(breaks: &[f64], values: &[f64]) -> StepFn {
        StepFn::new(breaks.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn canonical_form_merges_equal_neighbours() {
        let f = sf(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0, 0.0]);
        assert_eq!(f.breakpoints(), &[2.0, 3.0]);
        assert_eq!(f.values(), &[1.0, 2.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StepFn::new(vec![2.0, 1.0], vec![1.0, 1.0, 0.0]).is_err());
        assert!(StepFn::new(vec![0.0], vec![1.0, 0.0]).is_err());
        assert!(StepFn::new(vec![1.0], vec![-1.0, 0.0]).is_err());
        assert!(StepFn::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn right_continuous_evaluation() {
        let f = sf(&[1.0], &[3.0, 0.0]);
        assert_eq!(f.eval(0.5), 3.0);
        assert_eq!(f.eval(1.0), 0.0);
    }

    #[test]
    fn distribution_of_indicator() {
        let f = StepFn::indicator(0.0, 3.0).unwrap();
        let mu = distribution(&f).unwrap();
        assert_eq!(mu.eval(0.0), 3.0);
        assert_eq!(mu.eval(0.999), 3.0);
        assert_eq!(mu.eval(1.0), 0.0);
    }

    #[test]
    fn distribution_two_levels() {
        let f = sf(&[1.0, 4.0], &[2.0, 1.0, 0.0]);
        let mu = distribution(&f).unwrap();
        assert_eq!(mu.eval(0.5), 4.0);
        assert_eq!(mu.eval(1.0), 1.0);
        assert_eq!(mu.eval(1.5), 1.0);
        assert_eq!(mu.eval(2.0), 0.0);
    }

    #[test]
    fn rearrange_swaps_blocks() {
        let f = sf(&[1.0, 2.0], &[1.0, 3.0, 0.0]);
        let r = rearrange(&f).unwrap();
        assert_eq!(r, sf(&[1.0, 2.0], &[3.0, 1.0, 0.0]));
    }

    #[test]
    fn rearrange_fixes_nonincreasing() {
        let f = sf(&[1.0, 2.5], &[5.0, 1.0, 0.0]);
        assert_eq!(rearrange(&f).unwrap(), f);
    }

    #[test]
    fn non_vanishing_tail_is_rejected() {
        let f = sf(&[1.0], &[0.0, 1.0]);
        assert_eq!(rearrange(&f).unwrap_err(), Error::InfiniteLevelSets);
        assert_eq!(distribution(&f).unwrap_err(), Error::InfiniteLevelSets);
    }

    #[test]
    fn interior_zeros_are_squeezed_out() {
        let f = sf(&[1.0, 2.0, 3.0], &[0.0, 2.0, 0.0, 0.0]);
        let r = rearrange(&f).unwrap();
        assert_eq!(r, StepFn::indicator(0.0, 1.0).unwrap().scale(2.0).unwrap());
    }

    #[test]
    fn serde_pairs_roundtrip() {
        let f = sf(&[1.0, 4.0], &[2.0, 1.0, 0.0]);
        let pairs: Vec<(f64, f64)> = f.clone().into();
        assert_eq!(pairs, vec![(0.0, 2.0), (1.0, 1.0), (4.0, 0.0)]);
        assert_eq!(StepFn::try_from(pairs).unwrap(), f);
    }

    #[test]
    fn integrals() {
        let f = sf(&[1.0, 4.0], &[2.0, 1.0, 0.0]);
        assert_eq!(f.integral(), 5.0);
        assert_eq!(f.integral_to(2.0), 3.0);
        assert_eq!(f.integral_between(0.5, 2.0), 2.0);
        assert_eq!(f.integral_between(2.0, f64::INFINITY), 2.0);
        assert!(sf(&[1.0], &[0.0, 1.0]).integral().is_infinite());
    }
}
