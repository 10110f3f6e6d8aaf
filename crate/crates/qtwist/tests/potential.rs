use qtwist::numerics::{self, cplx, rel_diff, PrecisionContext};
use qtwist::potential::{
    envelope, envelope_threshold, grad_v, hessian_and_h, v_finite, v_finite_lattice, v_limit, LatticeIndex,
    RegionSpec,
};
use qtwist::qjones::{closed_form_term, grid_term, GridPoint, RootSpec, TwistParam};
use rug::Complex;

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

fn c(re: f64, im: f64) -> Complex {
    cplx(256, re, im)
}

/// Deterministic points of D with t+s > 1 and t−s > 0 (xorshift stream).
fn interior_points(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut state = seed;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut out = Vec::new();
    while out.len() < count {
        let t = 0.55 + 0.35 * next();
        let s = 0.2 + 0.6 * next();
        if t - s > 0.05 && t + s > 1.05 && t + s < 1.9 {
            out.push((t, s));
        }
    }
    out
}

/// 1 − s formed in high precision so the pair (s, 1 − s) is exact.
fn reflect(s: f64) -> Complex {
    Complex::with_val(256, 1) - c(s, 0.0)
}

fn close(a: &Complex, re: f64, im: f64, tol: f64) -> bool {
    (a.real().to_f64() - re).abs() < tol && (a.imag().to_f64() - im).abs() < tol
}

#[test]
fn v_limit_matches_independent_evaluation() {
    // Frozen from an mpmath evaluation with its own polylog (tools/potential_oracle.py).
    let cx = ctx();
    let v = v_limit(6, &c(0.7, 0.0), &c(0.5, 0.0), LatticeIndex::default(), &cx).unwrap();
    assert!(close(&v.value, 0.692_189_790_808_882_5, -18.236_945_354_088_75, 1e-13));
    let shifted = v_limit(6, &c(0.7, 0.0), &c(0.5, 0.0), LatticeIndex::new(1, -2), &cx).unwrap();
    assert!(close(&shifted.value, 0.692_189_790_808_882_5, -16.351_989_761_934_874, 1e-13));
    assert!(v.cut_distance.iter().all(|d| *d > 0.1));
    let (vt, vs) = grad_v(6, &c(0.7, 0.0), &c(0.5, 0.0), &cx).unwrap();
    assert!(close(&vt, 1.120_128_344_021_363_6, -2.513_274_122_871_834_6, 1e-13));
    assert!(close(&vs, 0.0, -6.283_185_307_179_586, 1e-13));
}

#[test]
fn lattice_reflection_at_the_limit() {
    let cx = ctx();
    let prec = cx.working();
    for (t, s) in interior_points(8, 7) {
        let (m, n) = (1, 3);
        let a = v_limit(6, &c(t, 0.0), &reflect(s), LatticeIndex::new(m, n), &cx);
        let Ok(a) = a else { continue };
        let b = v_limit(6, &c(t, 0.0), &c(s, 0.0), LatticeIndex::new(m, -n - 2), &cx).unwrap();
        let diff = Complex::with_val(prec, &a.value - &b.value);
        let want = Complex::with_val(prec, (0, -(numerics::pi(prec) * 2u32) * (n + 1)));
        assert!(numerics::abs(&Complex::with_val(prec, &diff - &want)).to_f64() < 1e-60);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let cx = ctx();
    let h = 1e-8;
    for (t, s) in interior_points(25, 11) {
        let v = |dt: f64, ds: f64| v_limit(6, &c(t + dt, 0.0), &c(s + ds, 0.0), LatticeIndex::default(), &cx).unwrap().value;
        let fd_t = Complex::with_val(256, &v(h, 0.0) - &v(-h, 0.0)) / (2.0 * h);
        let fd_s = Complex::with_val(256, &v(0.0, h) - &v(0.0, -h)) / (2.0 * h);
        let (vt, vs) = grad_v(6, &c(t, 0.0), &c(s, 0.0), &cx).unwrap();
        assert!(rel_diff(&fd_t, &vt) < 1e-6, "({t}, {s})");
        assert!(rel_diff(&fd_s, &vs) < 1e-6, "({t}, {s})");

        let g = |dt: f64, ds: f64| grad_v(6, &c(t + dt, 0.0), &c(s + ds, 0.0), &cx).unwrap();
        let hd = hessian_and_h(6, &c(t, 0.0), &c(s, 0.0), &cx).unwrap();
        let (gtp, gtm) = (g(h, 0.0), g(-h, 0.0));
        let (gsp, gsm) = (g(0.0, h), g(0.0, -h));
        let fd_tt = Complex::with_val(256, &gtp.0 - &gtm.0) / (2.0 * h);
        let fd_ts = Complex::with_val(256, &gsp.0 - &gsm.0) / (2.0 * h);
        let fd_st = Complex::with_val(256, &gtp.1 - &gtm.1) / (2.0 * h);
        let fd_ss = Complex::with_val(256, &gsp.1 - &gsm.1) / (2.0 * h);
        assert!(rel_diff(&fd_tt, &hd.hess[0][0]) < 1e-6);
        assert!(rel_diff(&fd_ts, &hd.hess[0][1]) < 1e-6);
        assert!(rel_diff(&fd_st, &hd.hess[1][0]) < 1e-6);
        assert!(rel_diff(&fd_ss, &hd.hess[1][1]) < 1e-6);
        assert_eq!(hd.hess[0][1], hd.hess[1][0]);
    }
}

#[test]
fn lattice_reflection_at_finite_color() {
    let cx = ctx();
    let prec = cx.working();
    let root = RootSpec::finite(15, 3).unwrap();
    for (t, s) in interior_points(4, 23) {
        let (m, n) = (2, 1);
        let a = v_finite_lattice(6, &c(t, 0.0), &reflect(s), &root, LatticeIndex::new(m, n), &cx);
        let Ok(a) = a else { continue };
        let b = v_finite_lattice(6, &c(t, 0.0), &c(s, 0.0), &root, LatticeIndex::new(m, -n - 2), &cx).unwrap();
        let diff = Complex::with_val(prec, &a - &b);
        let want = Complex::with_val(prec, (0, -(numerics::pi(prec) * 2u32) * (n + 1)));
        assert!(numerics::abs(&Complex::with_val(prec, &diff - &want)).to_f64() < 1e-50, "({t}, {s})");
    }
}

#[test]
fn grid_terms_from_the_potential() {
    let cx = ctx();
    for (n, m) in [(8u32, 2u32), (9, 3)] {
        let root = RootSpec::finite(n, m).unwrap();
        for p in [6i64, -2] {
            for k in 0..n {
                for l in 0..=k {
                    if k + l < n {
                        continue;
                    }
                    let pt = GridPoint::new(k, l, &root).unwrap();
                    let g = grid_term(TwistParam::new(p), &root, pt, &cx).unwrap();
                    let want = closed_form_term(TwistParam::new(p), &root, pt, cx.working()).unwrap();
                    assert!(rel_diff(&g, &want) < 1e-60, "N={n} M={m} p={p} k={k} l={l}");
                }
            }
        }
    }
}

/// V_{N,1/M} − V + (log(1−e^{2πi(t+s)}) + log(1−e^{2πi(t−s)}) − 4πit)/(2d)
fn second_order_defect(n: u32, t: f64, s: f64) -> f64 {
    let cx = ctx();
    let prec = cx.working();
    let root = RootSpec::finite(n, 2).unwrap();
    let (tc, sc) = (c(t, 0.0), c(s, 0.0));
    let vf = v_finite(6, &tc, &sc, &root, &cx).unwrap();
    let vl = v_limit(6, &tc, &sc, LatticeIndex::default(), &cx).unwrap().value;
    let log1m = |u: f64| {
        let z = Complex::with_val(prec, 1) - numerics::exp2pii_kernel(&cplx(prec, u, 0.0), prec);
        numerics::ln_kernel(&z, prec).unwrap()
    };
    let mut corr = log1m(t + s) + log1m(t - s);
    corr -= Complex::with_val(prec, (0, numerics::pi(prec) * 4u32 * t));
    let d = root.denom(prec);
    let total = Complex::with_val(prec, &vf - &vl) + corr / (d * 2u32);
    numerics::abs(&total).to_f64()
}

#[test]
fn finite_potential_converges_at_second_order() {
    for (t, s) in [(0.75, 0.45), (0.6, 0.52)] {
        let ns = [20u32, 40, 80];
        let r: Vec<f64> = ns.iter().map(|&n| second_order_defect(n, t, s)).collect();
        let slope = ((r[2] / r[0]).ln()) / ((80.5f64 / 20.5).ln());
        assert!((slope + 2.0).abs() < 0.3, "({t},{s}): slope {slope}, {r:?}");
    }
}

#[test]
fn large_m_approaches_the_m_infinity_potential() {
    let cx = ctx();
    let (t, s) = (c(0.72, 0.0), c(0.46, 0.0));
    let lim = v_finite(6, &t, &s, &RootSpec::infinite(20).unwrap(), &cx).unwrap();
    let gaps: Vec<f64> = [250u32, 500, 1000]
        .iter()
        .map(|&m| {
            let v = v_finite(6, &t, &s, &RootSpec::finite(20, m).unwrap(), &cx).unwrap();
            numerics::abs(&Complex::with_val(256, &v - &lim)).to_f64()
        })
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.1, "{gaps:?}");
    }
}

#[test]
fn envelope_peak_lies_in_the_inner_region() {
    let steps = 400;
    let d = RegionSpec::d();
    let inner = RegionSpec::d0_prime();
    let thr = envelope_threshold();
    let mut violations = 0;
    for i in 1..steps {
        for j in 1..steps {
            let t = i as f64 / steps as f64;
            let s = j as f64 / steps as f64;
            if d.contains(t, s) && envelope(t, s, None) > thr && !inner.contains(t, s) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn finite_envelope_approaches_the_limit() {
    let root = RootSpec::finite(400, 2).unwrap();
    for (t, s) in interior_points(10, 5) {
        assert!((envelope(t, s, Some(&root)) - envelope(t, s, None)).abs() < 0.02);
    }
}

#[test]
fn grid_terms_outside_the_inner_region_stay_below_the_critical_growth() {
    // Every Habiro grid term whose node lies outside D′₀ is bounded by
    // e^{denom(ζ_ℝ − 0.01)}; ζ_ℝ(6) from the saddle module.
    let zeta_r = 0.571_193_390_347_881;
    let root = RootSpec::finite(20, 2).unwrap();
    let bound = (root.denom_f64() * (zeta_r - 0.01)).exp();
    let inner = RegionSpec::d0_prime();
    let mut worst = 0.0f64;
    for k in 0..root.n() {
        for l in 0..=k {
            let pt = GridPoint::new(k, l, &root).unwrap();
            let (t, s) = pt.coordinates(&root, 64);
            if inner.contains(t.to_f64(), s.to_f64()) {
                continue;
            }
            let g = closed_form_term(TwistParam::new(6), &root, pt, 256).unwrap();
            worst = worst.max(numerics::abs(&g).to_f64());
        }
    }
    assert!(worst > 0.0 && worst <= bound, "{worst:e} vs {bound:e}");
}
