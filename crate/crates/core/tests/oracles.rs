use std::f64::consts::PI;

use rinorm::conditions::{check_gamma_eq_lambda, check_thm64, check_thm66, check_thm69, dilation_norm_h, Verdict};
use rinorm::fourier::{
    bessel_lower_constant, rearrange_transform, reverse_ratios, transform, verify_jt, RadialStep, RearrangeSpec,
};
use rinorm::quad::{log_grid, quad_finite};
use rinorm::weights::{down_dual, fourier_target, level_smallest};
use rinorm::{Norm, QuadSpec, StepFn, Weight, WeightFn};

fn q() -> QuadSpec {
    QuadSpec::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn product_conditions_follow_exponent_arithmetic() {
    // u = t^a, v = t^b: the products scale like x^E with
    // E = (q-1-b)/q - (a+1)/p, and hold exactly when E = 0.
    let cases = [
        (2.0, 2.0, 0.5, -0.5),
        (2.0, 2.0, 0.5, -0.3),
        (3.0, 2.0, 0.5, 0.0),
        (3.0, 2.0, 0.2, 0.0),
        (3.0, 1.5, 0.8, -0.2),
    ];
    for (p, qe, a, b) in cases {
        let e = (qe - 1.0 - b) / qe - (a + 1.0) / p;
        let r = check_thm64(p, qe, &Weight::power(a), &Weight::power(b), &q()).unwrap();
        let expect = if e.abs() < 1e-12 { Verdict::Holds } else { Verdict::Fails };
        assert_eq!(r.verdict, expect, "p={p} q={qe} a={a} b={b} E={e}");
        assert_eq!(r.parts.len(), 5);
    }
}

#[test]
fn first_product_condition_closed_form() {
    // u = t^{1/2}, p = 3 gives u_p = t^{1/2}; with v = 1, q = 2 the first
    // product is constant in x, so its value at x = 1 is the supremum.
    let (p, qe) = (3.0, 2.0);
    let r = check_thm64(p, qe, &Weight::power(0.5), &Weight::power(0.0), &q()).unwrap();
    let vd = down_dual(&Weight::power(0.0), qe, &q()).unwrap();
    let x: f64 = 1.0;
    let a = (x.powf(1.5) / 1.5f64).powf(1.0 / p);
    let b = vd.tail_p(x, 2.0, &q()).unwrap().value.sqrt();
    assert!(rel(r.parts[0].sup_ratio, a * b) < 1e-9);
}

#[test]
fn truncated_weight_equivalence_holds() {
    // u = χ_(0,1): the tail vanishes beyond 1 so the ratio is bounded.
    let u = WeightFn::PowerLog(Weight::from_step(&StepFn::indicator(0.0, 1.0).unwrap()));
    let r = check_gamma_eq_lambda(2.0, &u, &q()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn dilation_norm_of_matched_powers() {
    // u = v = 1, p = q = 2: h(t) = t^{-1/2} and ∫_1^∞ h dt/t = 2.
    let w = WeightFn::PowerLog(Weight::power(0.0));
    for t in [1.0, 10.0, 1e4] {
        let h = dilation_norm_h(2.0, &w, 2.0, &w, t, &q()).unwrap();
        assert!(rel(h.value, t.powf(-0.5)) < 1e-9, "t={t}: {h:?}");
    }
    let r = check_thm66(2.0, &Weight::power(0.0), 2.0, &Weight::power(0.0), &q()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(rel(r.sup_ratio, 2.0) < 0.05);
}

#[test]
fn dilation_norm_of_mismatched_powers_fails() {
    let r = check_thm66(2.0, &Weight::power(0.0), 2.0, &Weight::power(0.5), &q()).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
}

#[test]
fn suffix_supremum_tracks_weight_exponent() {
    // φ(t)^p / t ∝ t^a is essentially decreasing iff a <= 0.
    let hold = check_thm69(2.0, &Weight::power(-0.5).into(), &q()).unwrap();
    assert_eq!(hold.verdict, Verdict::Holds);
    assert_eq!(hold.parts[0].verdict, Verdict::Holds);
    let fail = check_thm69(2.0, &Weight::power(0.5).into(), &q()).unwrap();
    assert_eq!(fail.verdict, Verdict::Fails);
}

#[test]
fn level_and_fourier_closed_forms() {
    let (p, a) = (3.0, 0.4);
    let l = level_smallest(&Weight::power(a), p, &q()).unwrap();
    let f = fourier_target(&Weight::power(a), p, &q()).unwrap();
    let c = p / (p - a - 1.0);
    for t in log_grid(1e-3, 1e3, 9) {
        assert!(rel(l.value(t), c * t.powf(a)) < 1e-13);
        assert!(rel(f.value(t), c * t.powf(2.0 * p - 2.0 - a)) < 1e-13);
    }
}

#[test]
fn gamma_fundamental_function_matches_indicator_norm() {
    let norm = Norm::gamma(2.0, Weight::power(0.3)).unwrap();
    for t in [0.1, 1.0, 7.0] {
        let direct = norm.eval(&StepFn::indicator(0.0, t).unwrap(), &q()).unwrap().value;
        assert!(rel(norm.fundamental_function(t, &q()).unwrap(), direct) < 1e-9);
    }
}

#[test]
fn parseval_for_small_radial_functions() {
    for n in [1u32, 3] {
        let f = RadialStep::new(n, vec![0.5, 1.0], vec![0.7, 0.4]).unwrap();
        let tf = transform(&f).unwrap();
        // ∫|f̂|² by shell quadrature on [0, 2000]; the tail beyond is < 1e-4.
        let shell = |x: f64| if n == 1 { 2.0 } else { 4.0 * PI * x * x };
        let xi = 2000.0;
        let mut total = 0.0;
        for k in 0..2000 {
            let (a, b) = (k as f64 * xi / 2000.0, (k + 1) as f64 * xi / 2000.0);
            total += quad_finite(|x| tf.eval(x).powi(2) * shell(x), a, b, &[], &QuadSpec::with_rel_tol(1e-11))
                .unwrap()
                .value;
        }
        let energy: f64 = rinorm::fourier::radial_rearrange(&f).unwrap().powf(2.0).integral();
        assert!(rel(total, energy) < 1e-3, "n={n}: {total} vs {energy}");
    }
}

#[test]
fn single_ball_small_t_ratio() {
    let r = verify_jt(&RadialStep::ball(1, 1.0).unwrap(), &[1e-3], &RearrangeSpec::default()).unwrap();
    assert!((r.c - 1.0).abs() < 0.05);
}

#[test]
fn square_integral_ratio_is_dilation_invariant() {
    let f = RadialStep::new(3, vec![0.4, 1.2], vec![0.5, 0.8]).unwrap();
    let spec = RearrangeSpec::default();
    let base = verify_jt(&f, &rinorm::fourier::default_t_grid(&f), &spec).unwrap().c;
    for lambda in [0.25, 4.0] {
        let g = f.dilate(lambda).unwrap();
        let c = verify_jt(&g, &rinorm::fourier::default_t_grid(&g), &spec).unwrap().c;
        assert!(rel(c, base) < 0.05, "λ={lambda}: {c} vs {base}");
    }
}

#[test]
fn reverse_ratio_is_homogeneous() {
    let f = RadialStep::new(1, vec![0.3, 2.0], vec![1.0, 0.5]).unwrap();
    let spec = RearrangeSpec::default();
    let ts = [0.01, 0.5, 3.0];
    let a = reverse_ratios(&f, &ts, &spec).unwrap();
    let b = reverse_ratios(&f.scale(7.0).unwrap(), &ts, &spec).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(rel(x.1, y.1) < 1e-12);
    }
    // f = χ_{B_1}, t = 1: ∫_0^1 χ_(0,2) = 1.
    let ball = reverse_ratios(&RadialStep::ball(1, 1.0).unwrap(), &[1.0], &spec).unwrap();
    assert!(ball[0].1.is_finite() && ball[0].1 > 0.0);
}

#[test]
fn enlarging_the_window_stays_inside_the_band() {
    let f = RadialStep::new(1, vec![0.5, 1.0], vec![0.4, 0.6]).unwrap();
    let small = rearrange_transform(&f, &RearrangeSpec { window: Some(500.0), ..Default::default() }).unwrap();
    let large = rearrange_transform(&f, &RearrangeSpec { window: Some(4000.0), samples: 1 << 18, ..Default::default() }).unwrap();
    for t in [0.1, 1.0, 10.0, 100.0] {
        let (_, _, hi) = small.sq_integral(t);
        let (m, _, _) = large.sq_integral(t);
        assert!(m <= hi * (1.0 + 1e-9), "t={t}: {m} > {hi}");
    }
}

#[test]
fn bessel_constant_is_attained_at_the_edge() {
    // J_{n/2}(s)/s^{n/2} decreases on [0, π/2].
    for n in [1u32, 3] {
        let edge = rinorm::fourier::bessel_ratio(n, PI / 2.0).unwrap();
        assert!(rel(bessel_lower_constant(n).unwrap(), 1.0 / (edge * edge)) < 1e-9);
    }
}
