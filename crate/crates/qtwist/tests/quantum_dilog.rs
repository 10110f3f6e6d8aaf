use proptest::prelude::*;
use qtwist::numerics::{self, cplx, rel_diff_log2, PrecisionContext};
use qtwist::qjones::{pochhammer_table, RootSpec};
use qtwist::special::{li2, li2_kernel, phi, phi_prime, ContourSpec};
use rug::{Complex, Float};

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

fn two_pi_i(prec: u32) -> Complex {
    Complex::with_val(prec, (0, numerics::pi(prec) * 2u32))
}

fn at(prec: u32, t: &Float) -> Complex {
    Complex::with_val(prec, t)
}

#[test]
fn value_at_half_step() {
    let c = ctx();
    let prec = c.bits;
    let root = RootSpec::finite(10, 2).unwrap();
    let d = root.denom(prec);
    let t = Float::with_val(prec, 1) / Float::with_val(prec, &d * 2u32);
    let spec = ContourSpec::new(&root, t.to_f64(), t.to_f64(), 0.0, &c).unwrap();
    let got = phi(&at(prec, &t), &root, &spec, &c).unwrap();
    let pi = numerics::pi(prec);
    let pi2_6 = Float::with_val(prec, &pi * &pi) / 6u32;
    let mut want = Complex::with_val(prec, Float::with_val(prec, &d * &pi2_6)) / two_pi_i(prec);
    want += Float::with_val(prec, d.ln_ref()) / 2u32;
    want += Complex::with_val(prec, (0, Float::with_val(prec, &pi / 4u32)));
    want -= Complex::with_val(prec, (0, Float::with_val(prec, &pi / Float::with_val(prec, &d * 12u32))));
    assert!(rel_diff_log2(&got.value, &want) < -200.0, "{}", rel_diff_log2(&got.value, &want));
    assert!(got.error < 1e-60);
}

#[test]
fn pochhammer_from_phi_both_branches() {
    let c = ctx();
    let prec = c.working();
    let n = 30u32;
    for m in [2u32, 5] {
        let root = RootSpec::finite(n, m).unwrap();
        let d = root.denom(prec);
        let step = Float::with_val(prec, 1) / Float::with_val(prec, &d * 2u32);
        let lo = step.to_f64();
        let hi = Float::with_val(prec, &step * (2 * n + 1)).to_f64();
        let spec = ContourSpec::new(&root, lo, hi, 0.0, &c).unwrap();
        let table = pochhammer_table(&root, 2 * n as usize, &c).unwrap();
        let base = phi(&at(c.bits, &step), &root, &spec, &c).unwrap().value;
        let shift = numerics::ln_kernel(&(Complex::with_val(prec, 1) - numerics::pi_phase(-2, m as i128, prec)), prec).unwrap();
        for k in 0..=2 * n {
            let mut t = Float::with_val(prec, &step * (2 * k + 1));
            if k > n {
                t -= 1u32;
            }
            let v = phi(&at(c.bits, &t), &root, &spec, &c).unwrap().value;
            let mut e = Complex::with_val(prec, &base - &v);
            if k > n {
                e += &shift;
            }
            let got = e.exp();
            let want = &table.entries[k as usize];
            let err = rel_diff_log2(&got, want);
            assert!(err < -(c.bits as f64) / 2.0, "M = {m}, n = {k}: 2^{err}");
        }
    }
}

#[test]
fn reflection_identity() {
    let c = ctx();
    let prec = c.bits;
    let root = RootSpec::finite(12, 3).unwrap();
    let d = root.denom(prec);
    let spec = ContourSpec::new(&root, 0.01, 0.99, 0.0, &c).unwrap();
    let mut rng = 0x2545_f491_4f6c_dd1du64;
    for _ in 0..20 {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        let t = 0.02 + 0.96 * (rng >> 11) as f64 / (1u64 << 53) as f64;
        let tf = Float::with_val(prec, t);
        let a = phi(&at(prec, &tf), &root, &spec, &c).unwrap();
        let b = phi(&at(prec, &(1u32 - tf.clone())), &root, &spec, &c).unwrap();
        let quad = Float::with_val(prec, &tf * &tf) - &tf + Float::with_val(prec, 1) / 6u32;
        let inner = -(Float::with_val(prec, &d * &quad) / 2u32) + Float::with_val(prec, 1) / Float::with_val(prec, &d * 24u32);
        let want = two_pi_i(prec) * inner;
        let got = Complex::with_val(prec, &a.value + &b.value);
        let tol = 4.0 * (a.error + b.error) + 1e-70;
        let diff = Float::with_val(prec, Complex::with_val(prec, &got - &want).abs_ref()).to_f64();
        assert!(diff < tol, "t = {t}: {diff} vs {tol}");
    }
}

/// φ(t) - denom Li2(e^{2πit})/(2πi) + (πi/12) e^{2πit}/((1 - e^{2πit}) denom)
fn remainder(n: u32, t: f64) -> f64 {
    let c = ctx();
    let prec = c.working();
    let root = RootSpec::finite(n, 2).unwrap();
    let d = root.denom(prec);
    let spec = ContourSpec::new(&root, t, t, 0.0, &c).unwrap();
    let tc = cplx(prec, t, 0.0);
    let v = phi(&tc, &root, &spec, &c).unwrap().value;
    let x = numerics::exp2pii_kernel(&tc, prec);
    let l = li2_kernel(&x, None, prec).unwrap();
    let lead = Complex::with_val(prec, &l * &d) / two_pi_i(prec);
    let pi = numerics::pi(prec);
    let corr = Complex::with_val(prec, (0, pi / 12u32)) * &x / (Complex::with_val(prec, 1) - &x) / &d;
    let r = Complex::with_val(prec, &v - &lead) + corr;
    Float::with_val(prec, r.abs_ref()).to_f64()
}

#[test]
fn remainder_decays_like_cube() {
    for t in [0.3, 0.65, 0.8] {
        let ns = [25u32, 50, 100];
        let rs: Vec<f64> = ns.iter().map(|&n| remainder(n, t)).collect();
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64 + 0.5).ln()).collect();
        let ys: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 3.0;
        let my = ys.iter().sum::<f64>() / 3.0;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = num / den;
        assert!((slope + 3.0).abs() < 0.4, "t = {t}: slope {slope}, remainders {rs:?}");
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let c = ctx();
    let prec = c.bits;
    let root = RootSpec::finite(20, 2).unwrap();
    let spec = ContourSpec::new(&root, 0.5, 0.7, 0.0, &c).unwrap();
    let h = 1e-8;
    let f = |t: f64| phi(&cplx(prec, t, 0.0), &root, &spec, &c).unwrap().value;
    let fd = Complex::with_val(prec, &f(0.6 + h) - &f(0.6 - h)) / (2.0 * h);
    let d = phi_prime(&cplx(prec, 0.6, 0.0), &root, &spec, &c).unwrap().value;
    assert!(numerics::rel_diff(&fd, &d) < 1e-6);
}

fn derivative_defect(n: u32, m: u32, t: f64) -> Complex {
    let c = ctx();
    let prec = c.bits;
    let root = RootSpec::finite(n, m).unwrap();
    let d = root.denom(prec);
    let spec = ContourSpec::new(&root, t, t, 0.0, &c).unwrap();
    let tc = cplx(prec, t, 0.0);
    let v = phi_prime(&tc, &root, &spec, &c).unwrap().value;
    let x = numerics::exp2pii_kernel(&tc, prec);
    let lead = numerics::ln_kernel(&(Complex::with_val(prec, 1) - x), prec).unwrap() * &d;
    (v + lead) * d
}

#[test]
fn derivative_leading_order() {
    // φ'(1/2) = -denom log 2 + O(1/denom)
    let defect = derivative_defect(200, 2, 0.5);
    let scaled = numerics::abs(&defect).to_f64();
    assert!(scaled < 5.0, "denom * remainder = {scaled}");
    // The 1/denom coefficient is stable when N doubles.
    let c1 = numerics::to_c64(&derivative_defect(100, 3, 0.75));
    let c2 = numerics::to_c64(&derivative_defect(200, 3, 0.75));
    assert!((c1 - c2).norm() < 0.05 * c2.norm().max(1e-3), "{c1} vs {c2}");
}

#[test]
fn value_at_half_matches_semiclassical_limit() {
    // At t = 1/2 every power-law correction vanishes, leaving only exponentially small terms.
    let r = remainder(50, 0.5);
    assert!(r < 1e-4, "{r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn li2_inversion(re in -6.0f64..6.0, im in -6.0f64..6.0) {
        prop_assume!(im.abs() > 1e-3 || re < 1.0);
        prop_assume!(re.hypot(im) > 1e-3);
        let c = ctx();
        let prec = c.bits;
        let z = cplx(prec, re, im);
        let inv = Complex::with_val(prec, z.clone().recip());
        let a = li2(&z, None, &c).unwrap();
        let b = li2(&inv, None, &c).unwrap();
        let lg = numerics::principal_log(&Complex::with_val(prec, -&z), &c).unwrap();
        let pi = numerics::pi(prec);
        let total = a + b + Float::with_val(prec, &pi * &pi) / 6u32 + Complex::with_val(prec, &lg * &lg) / 2u32;
        prop_assert!(numerics::abs(&total).to_f64() < 1e-70);
    }
}
