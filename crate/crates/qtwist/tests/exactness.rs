mod oracle;

use qtwist::numerics::rel_diff_log2;
use qtwist::qjones::{jones, RootSpec};
use qtwist::{PrecisionContext, TwistParam};

#[test]
fn oracle_reproduces_known_polynomials() {
    assert_eq!(oracle::jones_polynomial(4, 1), oracle::Laurent::one());
    // K_{-1} is the figure-eight knot: J_2 = q^2 - q + 1 - q^{-1} + q^{-2}, a = q^{1/4}.
    let mut fig8 = oracle::Laurent::monomial(1, 8);
    for (c, e) in [(-1, 4), (1, 0), (-1, -4), (1, -8)] {
        fig8.add_assign(&oracle::Laurent::monomial(c, e));
    }
    assert_eq!(oracle::jones_polynomial(-1, 2), fig8);
}

#[test]
fn jones_matches_exact_sum_small_colors() {
    let ctx = PrecisionContext::default();
    let bound = -(ctx.bits as f64) + 24.0;
    for p in -2..=8i64 {
        for n in 1..=6u32 {
            let poly = oracle::jones_polynomial(p, n as i64);
            for m in [Some(2u32), Some(3), Some(7), None] {
                let root = RootSpec::new(n, m).unwrap();
                let got = jones(TwistParam::new(p), &root, &ctx).unwrap();
                let want = oracle::jones_value(&poly, n as i64, m.map(|x| x as i64), 512);
                let d = rel_diff_log2(&got, &want);
                assert!(d <= bound, "p={p} {root}: log2 rel diff {d}");
            }
        }
    }
}
