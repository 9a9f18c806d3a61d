//! TOML configuration. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use rinorm::conditions::Grid;
use rinorm::fourier::{FamilySpec, RadialStep, RearrangeSpec};
use rinorm::nfunction::NFunction;
use rinorm::weights::{WeightOp, WeightSpec};
use rinorm::{NormSpec, QuadSpec, StepFn};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for random families that do not carry their own.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub quad: Option<QuadSpec>,
    #[serde(default)]
    pub norm: Vec<NormItem>,
    #[serde(default)]
    pub transform: Vec<TransformItem>,
    #[serde(default)]
    pub check: Vec<CheckItem>,
    #[serde(default)]
    pub fourier: Vec<FourierItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormItem {
    #[serde(default)]
    pub name: Option<String>,
    pub spec: NormSpec,
    pub input: Input,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Input {
    /// `(breakpoint, value)` pairs starting at 0.
    Step(StepFn),
    /// Evaluated on its rearrangement.
    Radial(RadialStep),
    /// `Uf*` of a step function.
    OpU(StepFn),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformItem {
    #[serde(default)]
    pub name: Option<String>,
    pub op: WeightOp,
    pub p: f64,
    pub weight: WeightSpec,
    #[serde(default = "default_table_grid")]
    pub grid: Grid,
}

pub fn default_table_grid() -> Grid {
    Grid {
        lo: 1e-4,
        hi: 1e4,
        per_decade: 4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Admissibility,
    GammaLambdaEquivalence,
    InterpolationL2Linf,
    GammaBoundednessProducts,
    DilationNormIntegral,
    FundamentalSuffixSupremum,
    NfunctionMonotonicity,
    FundamentalIndices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nonincreasing,
    Nondecreasing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckItem {
    #[serde(default)]
    pub name: Option<String>,
    pub criterion: Criterion,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub u: Option<WeightSpec>,
    #[serde(default)]
    pub v: Option<WeightSpec>,
    #[serde(default)]
    pub norm: Option<NormSpec>,
    #[serde(default)]
    pub phi: Option<NFunction>,
    /// Exponent `k` for monotonicity of `Φ(t)/t^k`.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierKind {
    SquareIntegral,
    Reverse,
    NormPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierItem {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: FourierKind,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub functions: Vec<RadialStep>,
    #[serde(default)]
    pub rho: Option<NormSpec>,
    #[serde(default)]
    pub sigma: Option<NormSpec>,
    /// Bins per decade for averaging `(f̂)*` before evaluating `rho`.
    #[serde(default)]
    pub coarse: Option<usize>,
    #[serde(default)]
    pub rearrange: RearrangeSpec,
}

/// A random family; the seed falls back to the top-level one.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub dimension: u32,
    pub size: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_balls: Option<usize>,
}

impl FamilyConfig {
    pub fn resolve(&self, seed: Option<u64>) -> Option<FamilySpec> {
        Some(FamilySpec {
            dimension: self.dimension,
            size: self.size,
            seed: self.seed.or(seed)?,
            max_balls: self.max_balls.unwrap_or(4),
        })
    }
}
