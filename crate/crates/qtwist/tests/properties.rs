use proptest::prelude::*;
use qtwist::fourier::smoothstep;
use qtwist::numerics::{self, cplx, rel_diff, PrecisionContext};
use qtwist::qjones::{bracket, RootSpec};
use rug::Complex;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_round_trip(re in -50.0f64..50.0, im in -50.0f64..50.0) {
        prop_assume!(re.hypot(im) > 1e-6);
        let c = PrecisionContext::default();
        let z = cplx(c.bits, re, im);
        let w = numerics::principal_log(&z, &c).unwrap();
        let pi = numerics::pi(c.bits).to_f64();
        prop_assert!(w.imag().to_f64() > -pi && w.imag().to_f64() <= pi);
        prop_assert!(rel_diff(&Complex::with_val(c.working(), w.exp_ref()), &z) < 1e-70);
    }

    #[test]
    fn bracket_is_odd_and_vanishes_at_multiples(n in 1i64..400, big_n in 1u32..60, m in proptest::option::of(2u32..9)) {
        let c = PrecisionContext::default();
        let root = RootSpec::new(big_n, m).unwrap();
        let a = bracket(n, &root, &c);
        let b = bracket(-n, &root, &c);
        prop_assert!(numerics::abs(&Complex::with_val(c.bits, &a + &b)).to_f64() < 1e-70);
        prop_assert!(a.real().is_zero());
        // {n} = 2i sin(πn/denom) vanishes exactly when denom divides n.
        let (num, den) = root.denom_ratio();
        if (n as i128 * den) % num == 0 {
            prop_assert!(numerics::abs(&a).to_f64() < 1e-70);
        }
    }

    #[test]
    fn smoothstep_is_a_partition_of_unity(x in 0.0f64..=1.0) {
        let s = smoothstep(x);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s + smoothstep(1.0 - x) - 1.0).abs() < 1e-15);
    }
}
