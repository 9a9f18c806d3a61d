use rayon::prelude::*;

use rinorm::conditions::{
    check_gamma_eq_lambda, check_interp_l2, check_thm64, check_thm66, check_thm69, estimate_indices, Grid, Verdict,
};
use rinorm::fourier::{jt_battery, radial_rearrange, random_family, reverse_battery, verify_norm_pair, RadialStep};
use rinorm::norms::Decreasing;
use rinorm::weights::{down_dual_eval, fourier_target_eval, level_smallest_eval, WeightOp, WeightSpec};
use rinorm::{Error, QuadSpec};

use crate::config::{CheckItem, Config, Criterion, Direction, FourierItem, FourierKind, Input, NormItem, TransformItem};
use crate::report::{Item, Outcome};
use crate::CliError;

type Res<T> = std::result::Result<T, CliError>;

fn name_or(name: &Option<String>, kind: &str, i: usize) -> String {
    name.clone().unwrap_or_else(|| format!("{kind}_{i}"))
}

/// Runs items in parallel and keeps them in config order.
pub fn run_all<T: Sync>(items: &[T], f: impl Fn(usize, &T) -> Res<Item> + Sync) -> Res<Vec<(Item, f64)>> {
    items
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let start = std::time::Instant::now();
            let item = f(i, it)?;
            Ok((item, start.elapsed().as_secs_f64()))
        })
        .collect()
}

pub fn norm(cfg: &Config, q: &QuadSpec) -> Res<Vec<(Item, f64)>> {
    run_all(&cfg.norm, |i, it: &NormItem| {
        let norm = it.spec.resolve(q)?;
        let value = match &it.input {
            Input::Step(f) => norm.eval(f, q)?,
            Input::Radial(f) => norm.eval(&radial_rearrange(f)?, q)?,
            Input::OpU(f) => norm.eval(&Decreasing::op_u(f)?, q)?,
        };
        Ok(Item {
            name: name_or(&it.name, "norm", i),
            criterion: "norm_value".into(),
            outcome: Outcome::Norm {
                value: value.value,
                error: value.error,
            },
        })
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn transform(cfg: &Config, q: &QuadSpec) -> Res<Vec<(Item, f64)>> {
    run_all(&cfg.transform, |i, it: &TransformItem| {
        let base = it.weight.resolve_power_log(q)?;
        let w = it.op.apply(&base, it.p, q)?;
        // Independent pointwise path for comparison with the closed form.
        let numeric = match it.op {
            WeightOp::ReflectP => None,
            WeightOp::DownDual => Some(down_dual_eval(&base, it.p, q)?),
            WeightOp::LevelSmallest => Some(level_smallest_eval(&base, it.p, q)?),
            WeightOp::FourierTarget => Some(fourier_target_eval(&base, it.p, q)?),
        };
        let mut columns = vec!["t".to_string(), "value".to_string()];
        if numeric.is_some() {
            columns.push("pointwise".into());
        }
        let identity = it.op == WeightOp::LevelSmallest;
        if identity {
            columns.extend(["primitive".to_string(), "primitive_identity".to_string()]);
        }
        let rows: Vec<Vec<f64>> = it
            .grid
            .points()
            .into_iter()
            .map(|t| -> Res<Vec<f64>> {
                let mut row = vec![t, w.value(t)];
                if let Some(e) = &numeric {
                    row.push(e.eval(t));
                }
                if identity {
                    // ∫_0^t u^{(p)} = ∫_0^t u + t^p ∫_t^∞ u s^{-p}
                    let lhs = w.primitive(t, q)?.value;
                    let rhs = base.primitive(t, q)?.value + t.powf(it.p) * base.tail_p(t, it.p, q)?.value;
                    row.extend([lhs, rhs]);
                }
                Ok(row)
            })
            .collect::<Res<_>>()?;
        let mut max_rel_diff: f64 = 0.0;
        for r in &rows {
            if numeric.is_some() {
                max_rel_diff = max_rel_diff.max(rel_diff(r[1], r[2]));
            }
            if identity {
                let k = r.len();
                max_rel_diff = max_rel_diff.max(rel_diff(r[k - 2], r[k - 1]));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Divergent("transformed weight is not finite on the grid".into()).into());
        }
        Ok(Item {
            name: name_or(&it.name, "transform", i),
            criterion: format!("{:?}", it.op).to_lowercase(),
            outcome: Outcome::Table {
                columns,
                max_rel_diff,
                rows,
            },
        })
    })
}

fn need<'a, T>(v: &'a Option<T>, what: &str, c: Criterion) -> Res<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::Config(format!("criterion {c:?} needs `{what}`")))
}

fn closed(w: &WeightSpec, q: &QuadSpec) -> Res<rinorm::Weight> {
    Ok(w.resolve_power_log(q)?)
}

fn criterion_name(c: Criterion) -> String {
    serde_json::to_value(c)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn check(cfg: &Config, q: &QuadSpec) -> Res<Vec<(Item, f64)>> {
    run_all(&cfg.check, |i, it: &CheckItem| {
        let c = it.criterion;
        let outcome = match c {
            Criterion::Admissibility => {
                let p = *need(&it.p, "p", c)?;
                let detail = need(&it.u, "u", c)?.resolve(q)?.admissible(p);
                let verdict = if detail.is_admissible() { Verdict::Holds } else { Verdict::Fails };
                Outcome::Admissibility { verdict, detail }
            }
            Criterion::GammaLambdaEquivalence => {
                Outcome::Check(check_gamma_eq_lambda(*need(&it.p, "p", c)?, &need(&it.u, "u", c)?.resolve(q)?, q)?)
            }
            Criterion::InterpolationL2Linf => {
                Outcome::Check(check_interp_l2(*need(&it.p, "p", c)?, &need(&it.u, "u", c)?.resolve(q)?, q)?)
            }
            Criterion::GammaBoundednessProducts => Outcome::Check(check_thm64(
                *need(&it.p, "p", c)?,
                *need(&it.q, "q", c)?,
                &closed(need(&it.u, "u", c)?, q)?,
                &closed(need(&it.v, "v", c)?, q)?,
                q,
            )?),
            Criterion::DilationNormIntegral => Outcome::Check(check_thm66(
                *need(&it.q, "q", c)?,
                &closed(need(&it.v, "v", c)?, q)?,
                *need(&it.p, "p", c)?,
                &closed(need(&it.u, "u", c)?, q)?,
                q,
            )?),
            Criterion::FundamentalSuffixSupremum => {
                Outcome::Check(check_thm69(*need(&it.p, "p", c)?, &need(&it.u, "u", c)?.resolve(q)?, q)?)
            }
            Criterion::NfunctionMonotonicity => {
                let phi = need(&it.phi, "phi", c)?;
                phi.validate()?;
                let k = *need(&it.k, "k", c)?;
                let grid = Grid::STANDARD.points();
                let ok = match need(&it.direction, "direction", c)? {
                    Direction::Nonincreasing => phi.ratio_nonincreasing(k, &grid),
                    Direction::Nondecreasing => phi.ratio_nondecreasing(k, &grid),
                };
                Outcome::Monotonicity {
                    verdict: if ok { Verdict::Holds } else { Verdict::Fails },
                }
            }
            Criterion::FundamentalIndices => {
                let norm = need(&it.norm, "norm", c)?.resolve(q)?;
                Outcome::Indices {
                    estimate: estimate_indices(&norm, q)?,
                }
            }
        };
        Ok(Item {
            name: name_or(&it.name, "check", i),
            criterion: criterion_name(c),
            outcome,
        })
    })
}

fn family(it: &FourierItem, seed: Option<u64>) -> Res<Vec<RadialStep>> {
    let mut fs = it.functions.clone();
    if let Some(fam) = &it.family {
        let spec = fam
            .resolve(seed)
            .ok_or_else(|| CliError::Config("random families need a seed".into()))?;
        fs.extend(random_family(&spec)?);
    }
    if fs.is_empty() {
        return Err(CliError::Config("fourier item has no functions".into()));
    }
    Ok(fs)
}

pub fn fourier(cfg: &Config, q: &QuadSpec) -> Res<Vec<(Item, f64)>> {
    run_all(&cfg.fourier, |i, it: &FourierItem| {
        let fam = family(it, cfg.seed)?;
        let report = match it.kind {
            FourierKind::SquareIntegral => jt_battery(&fam, &it.rearrange)?,
            FourierKind::Reverse => reverse_battery(&fam, &it.rearrange)?,
            FourierKind::NormPair => {
                let rho = it
                    .rho
                    .as_ref()
                    .ok_or_else(|| CliError::Config("norm_pair needs `rho`".into()))?
                    .resolve(q)?;
                let sigma = it
                    .sigma
                    .as_ref()
                    .ok_or_else(|| CliError::Config("norm_pair needs `sigma`".into()))?
                    .resolve(q)?;
                verify_norm_pair(&rho, &sigma, &fam, &it.rearrange, it.coarse, q)?
            }
        };
        Ok(Item {
            name: name_or(&it.name, "fourier", i),
            criterion: report.criterion.clone(),
            outcome: Outcome::Battery(report),
        })
    })
}
