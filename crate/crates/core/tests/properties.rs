use proptest::prelude::*;

use rinorm::fourier::{radial_rearrange, transform, RadialStep};
use rinorm::norms::{lebesgue_step, luxemburg_norm};
use rinorm::ops::double_star;
use rinorm::{distribution, rearrange, NFunction, Norm, QuadSpec, StepFn, Weight};

fn step() -> impl Strategy<Value = StepFn> {
    prop::collection::vec((0.01f64..5.0, 0.0f64..4.0), 1..25).prop_map(|pieces| {
        let mut b = 0.0;
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (len, v) in pieces {
            b += len;
            breaks.push(b);
            values.push(v);
        }
        values.push(0.0);
        StepFn::new(breaks, values).unwrap()
    })
}

fn radial() -> impl Strategy<Value = RadialStep> {
    (prop::sample::select(vec![1u32, 3]), prop::collection::vec((0.05f64..3.0, 0.05f64..2.0), 1..5)).prop_map(
        |(n, mut balls)| {
            balls.sort_by(|a, b| a.0.total_cmp(&b.0));
            balls.dedup_by(|a, b| a.0 == b.0);
            let (radii, coeffs) = balls.into_iter().unzip();
            RadialStep::new(n, radii, coeffs).unwrap()
        },
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rearrangement_is_nonincreasing_and_idempotent(f in step()) {
        let s = rearrange(&f).unwrap();
        prop_assert!(s.is_nonincreasing());
        prop_assert_eq!(rearrange(&s).unwrap(), s.clone());
        prop_assert_eq!(distribution(&s).unwrap(), distribution(&f).unwrap());
        prop_assert!(close(s.integral(), f.integral(), 1e-12));
    }

    #[test]
    fn rearrangement_commutes_with_scaling(f in step(), c in 0.1f64..10.0) {
        let lhs = rearrange(&f.scale(c).unwrap()).unwrap();
        let rhs = rearrange(&f).unwrap().scale(c).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn average_dominates_rearrangement(f in step(), t in 0.01f64..100.0) {
        let s = rearrange(&f).unwrap();
        prop_assert!(double_star(&f).unwrap().eval(t) >= s.eval(t) * (1.0 - 1e-12));
    }

    #[test]
    fn luxemburg_is_homogeneous(f in step(), c in 0.1f64..10.0, p in 1.1f64..4.0) {
        prop_assume!(!f.is_zero());
        let phi = NFunction::power(p);
        let a = luxemburg_norm(&phi, &f.scale(c).unwrap()).unwrap();
        let b = c * luxemburg_norm(&phi, &f).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn lebesgue_triangle_inequality(f in step(), g in step(), p in 1.0f64..4.0) {
        prop_assert!(lebesgue_step(&f.add(&g), p) <= (lebesgue_step(&f, p) + lebesgue_step(&g, p)) * (1.0 + 1e-12));
    }

    #[test]
    fn gamma_norm_is_monotone(f in step(), g in step(), a in -0.5f64..0.8) {
        let norm = Norm::gamma(2.0, Weight::power(a)).unwrap();
        let q = QuadSpec::default();
        let big = f.zip_with(&g, f64::max);
        prop_assert!(norm.eval(&f, &q).unwrap().value <= norm.eval(&big, &q).unwrap().value * (1.0 + 1e-9));
    }

    #[test]
    fn reflect_p_is_an_involution(a in -3.0f64..3.0, b in -0.9f64..2.0, p in 1.1f64..5.0) {
        let w = Weight::power_log(1.0, a, b).unwrap();
        let back = w.reflect_p(p).reflect_p(p);
        // p - 2 - (p - 2 - a) equals a up to rounding.
        for (x, y) in back.pieces().iter().zip(w.pieces()) {
            prop_assert_eq!((x.lo, x.hi, x.c, x.b), (y.lo, y.hi, y.c, y.b));
            prop_assert!((x.a - y.a).abs() <= 1e-14 * (1.0 + p));
        }
    }

    #[test]
    fn transform_at_zero_is_the_integral(f in radial()) {
        prop_assert!(close(transform(&f).unwrap().eval(0.0), f.integral(), 1e-12));
    }

    #[test]
    fn radial_rearrangement_commutes_with_scaling(f in radial(), c in 0.1f64..10.0) {
        let lhs = radial_rearrange(&f.scale(c).unwrap()).unwrap();
        let rhs = radial_rearrange(&f).unwrap().scale(c).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!(close(*x, *y, 1e-12));
        }
        prop_assert_eq!(lhs.breakpoints(), rhs.breakpoints());
    }

    #[test]
    fn radial_rearrangement_preserves_mass(f in radial()) {
        prop_assert!(close(radial_rearrange(&f).unwrap().integral(), f.integral(), 1e-12));
    }
}
