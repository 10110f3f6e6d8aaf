//! Critical point of V(p,·,·), the constants ζ(p) and ω(p), the leading-order
//! predictor for J_N, and the first correction κ₁ from a Laplace expansion.

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{self, exp2pii_kernel, pi_phase, sqrt_kernel, PrecisionContext};
use crate::potential::{self, LatticeIndex, RegionSpec};
use crate::qjones::RootSpec;

/// Critical data of V(p,t,s).
#[derive(Clone, Debug)]
pub struct CriticalData {
    pub p: i64,
    pub t0: Complex,
    pub s0: Complex,
    pub x0: Complex,
    pub y0: Complex,
    pub zeta: Complex,
    pub zeta_r: f64,
    /// ω from the Hessian form.
    pub omega: Complex,
    /// ω from the H-form.
    pub omega_h: Complex,
    pub omega_discrepancy: f64,
    pub hess_det: Complex,
    pub h_val: Complex,
    pub newton_residual: f64,
    /// Multiplies the principal √det Hess V (and the principal √H).
    pub sign_branch: i8,
    /// Sheet of √H relative to the principal root that makes the H-form equal the Hessian form.
    pub h_root_sign: i8,
    pub iterations: u32,
    /// |grad V| after each accepted Newton step.
    pub newton_trace: Vec<f64>,
    /// Distinct critical points other than (t0, s0) met by the seed sweep.
    pub other_basins: Vec<(f64, f64)>,
    pub experimental: bool,
}

impl CriticalData {
    /// Same data with ω taken on the other square-root sheet when `sign` = -1.
    pub fn with_sign_branch(&self, sign: i8) -> Self {
        let mut out = self.clone();
        if sign != self.sign_branch {
            out.omega = -out.omega;
            out.omega_h = -out.omega_h;
        }
        out.sign_branch = sign;
        out
    }

    /// (vol, cs) with vol = Re(2πζ) and cs = Im(2πζ) reduced into [−π²/2, π²/2).
    pub fn volume_cs(&self) -> (f64, f64) {
        let prec = self.zeta.prec().0;
        let two_pi = numerics::pi(prec) * 2u32;
        let z = Complex::with_val(prec, &self.zeta * &two_pi);
        let pi2 = Float::with_val(prec, numerics::pi(prec).square());
        let half = Float::with_val(prec, &pi2 / 2u32);
        let shifted = Float::with_val(prec, z.imag() + &half);
        let k = Float::with_val(prec, &shifted / &pi2).floor();
        let cs = shifted - k * &pi2 - half;
        (z.real().to_f64(), cs.to_f64())
    }
}

const GRID: usize = 40;
const MAX_ITER: u32 = 200;

fn grad_norm(p: i64, t: &Complex, s: &Complex, prec: u32) -> Result<Float> {
    if !RegionSpec::d().contains_complex(t, s) {
        return Err(Error::Domain("Newton iterate left D".into()));
    }
    let (a, b) = potential::grad_kernel(p, t, s, prec)?;
    Ok(Float::with_val(prec, numerics::abs(&a).square() + numerics::abs(&b).square()).sqrt())
}

struct NewtonOutcome {
    t: Complex,
    s: Complex,
    residual: Float,
    iterations: u32,
    trace: Vec<f64>,
}

fn newton(p: i64, t: &Complex, s: &Complex, prec: u32, tol: &Float) -> Result<NewtonOutcome> {
    let mut t = t.clone();
    let mut s = s.clone();
    let mut res = grad_norm(p, &t, &s, prec)?;
    let mut trace = vec![res.to_f64()];
    for it in 0..MAX_ITER {
        if res < *tol {
            return Ok(NewtonOutcome { t, s, residual: res, iterations: it, trace });
        }
        let (gt, gs) = potential::grad_kernel(p, &t, &s, prec)?;
        let h = potential::hessian_kernel(p, &t, &s, prec);
        if numerics::abs(&h.det).is_zero() {
            return Err(Error::Degenerate("singular Hessian during Newton".into()));
        }
        // Solve H δ = −g.
        let dt = (Complex::with_val(prec, &h.hess[1][1] * &gt) - Complex::with_val(prec, &h.hess[0][1] * &gs)) / &h.det;
        let ds = (Complex::with_val(prec, &h.hess[0][0] * &gs) - Complex::with_val(prec, &h.hess[1][0] * &gt)) / &h.det;
        let mut lambda = Float::with_val(prec, 1);
        let mut accepted = false;
        for _ in 0..40 {
            let tn = Complex::with_val(prec, &t - Complex::with_val(prec, &dt * &lambda));
            let sn = Complex::with_val(prec, &s - Complex::with_val(prec, &ds * &lambda));
            if let Ok(r) = grad_norm(p, &tn, &sn, prec) {
                if r < res {
                    t = tn;
                    s = sn;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda /= 2u32;
        }
        trace.push(res.to_f64());
        if !accepted {
            break;
        }
    }
    if res < *tol {
        let iterations = trace.len() as u32 - 1;
        return Ok(NewtonOutcome { t, s, residual: res, iterations, trace });
    }
    Err(Error::Solver(format!("damped Newton stalled; |grad| trace {trace:?}")))
}

/// Damped Newton on grad V = 0 from a caller-chosen seed.
pub fn refine_from(p: i64, t: &Complex, s: &Complex, ctx: &PrecisionContext) -> Result<(Complex, Complex)> {
    let prec = ctx.working();
    let tol = Float::with_val(prec, 1e-30_f64).min(&(Float::with_val(prec, 1) >> (ctx.bits as i32 / 2 + 8)));
    let o = newton(p, &Complex::with_val(prec, t), &Complex::with_val(prec, s), prec, &tol)?;
    Ok((o.t, o.s))
}

/// Solve grad V = 0 by damped Newton from the best seed of a 40×40 grid on D′₀.
pub fn find_critical(p: i64, ctx: &PrecisionContext) -> Result<CriticalData> {
    if p < 2 {
        return Err(Error::Domain(format!("p = {p} is below the supported range p ≥ 2")));
    }
    let prec = ctx.working();
    let region = RegionSpec::d0_prime();
    let mut seeds: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let t = 0.5 + (0.909 - 0.5) * (i as f64 + 0.5) / GRID as f64;
            let s = 0.2 + 0.6 * (j as f64 + 0.5) / GRID as f64;
            if !region.contains(t, s) {
                continue;
            }
            let r = grad_norm(p, &numerics::cplx(64, t, 0.0), &numerics::cplx(64, s, 0.0), 64)?;
            seeds.push((r.to_f64(), t, s));
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol = Float::with_val(prec, 1e-30_f64).min(&(Float::with_val(prec, 1) >> (ctx.bits as i32 / 2 + 8)));
    let mut best: Option<NewtonOutcome> = None;
    let mut failures = Vec::new();
    for &(_, t, s) in seeds.iter().take(5) {
        match newton(p, &numerics::cplx(prec, t, 0.0), &numerics::cplx(prec, s, 0.0), prec, &tol) {
            Ok(o) => {
                best = Some(o);
                break;
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let out = best.ok_or_else(|| Error::Solver(format!("no seed converged: {failures:?}")))?;
    if !region.contains_complex(&out.t, &out.s) {
        return Err(Error::Domain(format!(
            "critical point ({}, {}) has real parts outside D′₀",
            out.t.real().to_f64(),
            out.s.real().to_f64()
        )));
    }

    // Uniqueness sweep: Newton from seeds spread over the box.
    let mut other = Vec::new();
    let sweep_tol = Float::with_val(prec, 1e-20_f64);
    let stride = (seeds.len() / 12).max(1);
    for &(_, t, s) in seeds.iter().step_by(stride) {
        let Ok(o) = newton(p, &numerics::cplx(prec, t, 0.0), &numerics::cplx(prec, s, 0.0), prec, &sweep_tol) else {
            continue;
        };
        let dt = numerics::abs(&Complex::with_val(prec, &o.t - &out.t)).to_f64();
        let ds = numerics::abs(&Complex::with_val(prec, &o.s - &out.s)).to_f64();
        if dt.max(ds) > 1e-10 && region.contains_complex(&o.t, &o.s) {
            let key = (o.t.real().to_f64(), o.s.real().to_f64());
            if !other.iter().any(|&(a, b): &(f64, f64)| (a - key.0).abs() < 1e-8 && (b - key.1).abs() < 1e-8) {
                other.push(key);
            }
        }
    }

    let data = CriticalData {
        p,
        x0: exp2pii_kernel(&out.t, prec),
        y0: exp2pii_kernel(&out.s, prec),
        t0: out.t,
        s0: out.s,
        zeta: Complex::new(prec),
        zeta_r: 0.0,
        omega: Complex::new(prec),
        omega_h: Complex::new(prec),
        omega_discrepancy: 0.0,
        hess_det: Complex::new(prec),
        h_val: Complex::new(prec),
        newton_residual: out.residual.to_f64(),
        sign_branch: 1,
        h_root_sign: 1,
        iterations: out.iterations,
        newton_trace: out.trace,
        other_basins: other,
        experimental: p < 6,
    };
    zeta_omega(data, p, ctx)
}

/// Fill ζ, ζ_ℝ and both ω forms.
pub fn zeta_omega(mut data: CriticalData, p: i64, ctx: &PrecisionContext) -> Result<CriticalData> {
    let prec = ctx.working();
    let v = potential::v_limit(p, &data.t0, &data.s0, LatticeIndex::default(), ctx)?;
    data.zeta = Complex::with_val(prec, &v.value);
    data.zeta_r = v.value.real().to_f64();
    let hd = potential::hessian_and_h(p, &data.t0, &data.s0, ctx)?;
    data.hess_det = Complex::with_val(prec, &hd.det);
    data.h_val = Complex::with_val(prec, &hd.h);

    let x = &data.x0;
    let y = &data.y0;
    let one_minus_x = Complex::with_val(prec, 1) - x;
    let pow32 = Complex::with_val(prec, &one_minus_x * sqrt_kernel(&one_minus_x, prec)?);
    let sin_s = Complex::with_val(prec, &data.s0 * (numerics::pi(prec) * 2u32)).sin();
    let root_det = sqrt_kernel(&data.hess_det, prec)?;
    let omega = sin_s * x / (Complex::with_val(prec, &pow32 * &root_det));
    let y_diff = Complex::with_val(prec, y - Complex::with_val(prec, y.recip_ref()));
    let root_h = sqrt_kernel(&data.h_val, prec)?;
    let denom = pow32 * root_h * (numerics::pi(prec) * (-4i32));
    let mut omega_h = y_diff * x / denom;
    // √det Hess V = ±2πi√H; the two displayed forms agree when √H is taken
    // on the sheet matching the principal √det.
    let same = numerics::abs(&Complex::with_val(prec, &omega - &omega_h));
    let flipped = numerics::abs(&Complex::with_val(prec, &omega + &omega_h));
    data.h_root_sign = 1;
    if flipped < same {
        omega_h = -omega_h;
        data.h_root_sign = -1;
    }
    let discrepancy = numerics::abs(&Complex::with_val(prec, &omega - &omega_h)).to_f64();
    data.omega_discrepancy = discrepancy;
    if !(discrepancy <= 1e-20) {
        return Err(Error::Inconsistency(format!(
            "the Hessian and H forms of ω differ by {discrepancy:e}"
        )));
    }
    let sign = if data.sign_branch < 0 { -1i32 } else { 1 };
    data.omega = omega * sign;
    data.omega_h = omega_h * sign;
    Ok(data)
}

/// Leading asymptotic term; κᵢ stay free until fitted.
#[derive(Clone, Debug)]
pub struct AsymptoticPrediction {
    pub p: i64,
    pub root: RootSpec,
    pub order: usize,
    pub leading: Complex,
    /// Expansion variable 2πi/denom.
    pub x: Complex,
}

impl AsymptoticPrediction {
    /// leading · (1 + Σ κᵢ xⁱ), using at most `order` coefficients.
    pub fn evaluate(&self, kappas: &[Complex]) -> Complex {
        let prec = self.leading.prec().0;
        let mut series = Complex::with_val(prec, 1);
        let mut pw = Complex::with_val(prec, 1);
        for k in kappas.iter().take(self.order) {
            pw *= &self.x;
            series += Complex::with_val(prec, k * &pw);
        }
        Complex::with_val(prec, &self.leading * &series)
    }
}

/// (−1)^p 4π e^{πi(1/4+2/M)} d^{1/2} sin(π/M)/sin(π/(Md)) ω e^{dζ} at finite M,
/// (−1)^p 4π e^{πi/4} N^{3/2} ω e^{Nζ} at M = ∞.
pub fn predict(p: i64, root: &RootSpec, data: &CriticalData, order: usize, ctx: &PrecisionContext) -> Result<AsymptoticPrediction> {
    let prec = ctx.working();
    let d = root.denom(prec);
    let pi = numerics::pi(prec);
    let mut pref = match root.m() {
        Some(m) => {
            let phase = pi_phase(m as i128 + 8, 4 * m as i128, prec);
            // π/(M d) = π/(NM + 1)
            let (big_d, _) = root.denom_ratio();
            let ratio = numerics::sin_pi_ratio(1, m as i128, prec) / numerics::sin_pi_ratio(1, big_d, prec);
            phase * ratio * Float::with_val(prec, d.sqrt_ref())
        }
        None => {
            let phase = pi_phase(1, 4, prec);
            let n = Float::with_val(prec, root.n());
            phase * Float::with_val(prec, &n * Float::with_val(prec, n.sqrt_ref()))
        }
    };
    pref *= Float::with_val(prec, &pi * 4u32);
    if p.rem_euclid(2) == 1 {
        pref = -pref;
    }
    let expo = Complex::with_val(prec, &data.zeta * &d).exp();
    let leading = numerics::ensure_finite(pref * &data.omega * expo, "prediction")?;
    let x = Complex::with_val(prec, (0, Float::with_val(prec, &pi * 2u32) / &d));
    Ok(AsymptoticPrediction { p, root: *root, order, leading, x })
}

/// Derivatives of a 2-variable exponent and amplitude at a critical point.
#[derive(Clone, Debug)]
pub struct LaplaceJet {
    /// Hessian of the exponent.
    pub hess: [[Complex; 2]; 2],
    /// ∂³ with k derivatives in the second variable at index k (k = 0..=3).
    pub third: [Complex; 4],
    /// ∂⁴ with k derivatives in the second variable at index k (k = 0..=4).
    pub fourth: [Complex; 5],
    pub amp_grad: [Complex; 2],
    pub amp_hess: [[Complex; 2]; 2],
}

/// c₁ in ∫ e^{dS + g} = e^{dS₀+g₀} (2π/d)/√det(−Hess S) (1 + c₁/d + …).
///
/// With G = (−Hess S)^{-1}, a = ∂³S, b = ∂⁴S:
/// c₁ = b_{ijkl}G_{ij}G_{kl}/8 + v_k G_{kl} v_l/8 + a_{ijk}a_{lmn}G_{il}G_{jm}G_{kn}/12
///    + g_{ij}G_{ij}/2 + g_i g_j G_{ij}/2 + g_i G_{ij} v_j/2, v_k = a_{ijk}G_{ij}.
pub fn laplace_first_correction(jet: &LaplaceJet, prec: u32) -> Result<Complex> {
    let h = &jet.hess;
    let det = Complex::with_val(prec, &h[0][0] * &h[1][1]) - Complex::with_val(prec, &h[0][1] * &h[1][0]);
    if numerics::abs(&det).is_zero() {
        return Err(Error::Degenerate("singular Hessian in the Laplace expansion".into()));
    }
    // G = (−H)^{-1} = −adj(H)/det(H)
    let g = [
        [Complex::with_val(prec, -&h[1][1]) / &det, Complex::with_val(prec, &h[0][1]) / &det],
        [Complex::with_val(prec, &h[1][0]) / &det, Complex::with_val(prec, -&h[0][0]) / &det],
    ];
    let a = |i: usize, j: usize, k: usize| &jet.third[i + j + k];
    let b = |i: usize, j: usize, k: usize, l: usize| &jet.fourth[i + j + k + l];
    let zero = || Complex::with_val(prec, (0, 0));
    let mut q = zero();
    let mut v = [zero(), zero()];
    let mut theta = zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                v[k] += Complex::with_val(prec, a(i, j, k) * &g[i][j]);
                for l in 0..2 {
                    q += Complex::with_val(prec, b(i, j, k, l) * &g[i][j]) * &g[k][l];
                    for m in 0..2 {
                        for n in 0..2 {
                            let w = Complex::with_val(prec, a(i, j, k) * a(l, m, n));
                            theta += w * &g[i][l] * &g[j][m] * &g[k][n];
                        }
                    }
                }
            }
        }
    }
    let mut dumbbell = zero();
    let mut amp = zero();
    for k in 0..2 {
        for l in 0..2 {
            dumbbell += Complex::with_val(prec, &v[k] * &g[k][l]) * &v[l];
            amp += Complex::with_val(prec, &jet.amp_hess[k][l] * &g[k][l]);
            amp += Complex::with_val(prec, &jet.amp_grad[k] * &jet.amp_grad[l]) * &g[k][l];
            amp += Complex::with_val(prec, &jet.amp_grad[k] * &g[k][l]) * &v[l];
        }
    }
    Ok(q / 8u32 + dumbbell / 8u32 + theta / 12u32 + amp / 2u32)
}

/// u ↦ 2πi e/(1 − e) and its first two derivatives, e = e^{2πiu}.
fn g_derivatives(u: &Complex, prec: u32) -> [Complex; 3] {
    let tpi = Complex::with_val(prec, (0, numerics::pi(prec) * 2u32));
    let e = exp2pii_kernel(u, prec);
    let om = Complex::with_val(prec, 1) - &e;
    let g0 = Complex::with_val(prec, &tpi * &e) / &om;
    let tpi2 = Complex::with_val(prec, &tpi * &tpi);
    let om2 = Complex::with_val(prec, &om * &om);
    let g1 = Complex::with_val(prec, &tpi2 * &e) / &om2;
    let onep = Complex::with_val(prec, 1) + &e;
    let g2 = tpi2 * &tpi * e * onep / (om2 * om);
    [g0, g1, g2]
}

/// Jet of V and of the amplitude sin(2πs)·exp(−½log(1−e^{2πi(t+s)}) − ½log(1−e^{2πi(t−s)}) + 2πit).
pub(crate) fn saddle_jet(p: i64, t: &Complex, s: &Complex, prec: u32) -> LaplaceJet {
    let gp = g_derivatives(&Complex::with_val(prec, t + s), prec);
    let gm = g_derivatives(&Complex::with_val(prec, t - s), prec);
    let gt = g_derivatives(t, prec);
    let hd = potential::hessian_kernel(p, t, s, prec);
    // ∂_t^a ∂_s^b V = g₊^{(n−2)} + (−1)^b g₋^{(n−2)} − 3[b = 0] g_t^{(n−2)}, n = a + b ≥ 3
    let mixed = |order: usize, b: usize| {
        let mut out = Complex::with_val(prec, &gp[order - 2]);
        if b % 2 == 0 {
            out += &gm[order - 2];
        } else {
            out -= &gm[order - 2];
        }
        if b == 0 {
            out -= Complex::with_val(prec, &gt[order - 2] * 3u32);
        }
        out
    };
    let third = [mixed(3, 0), mixed(3, 1), mixed(3, 2), mixed(3, 3)];
    let fourth = [mixed(4, 0), mixed(4, 1), mixed(4, 2), mixed(4, 3), mixed(4, 4)];
    let two_pi = numerics::pi(prec) * 2u32;
    let tpi = Complex::with_val(prec, (0, two_pi.clone()));
    let arg = Complex::with_val(prec, s * &two_pi);
    let cot = Complex::with_val(prec, arg.cos_ref()) / Complex::with_val(prec, arg.sin_ref());
    let sum0 = Complex::with_val(prec, &gp[0] + &gm[0]);
    let dif0 = Complex::with_val(prec, &gp[0] - &gm[0]);
    let sum1 = Complex::with_val(prec, &gp[1] + &gm[1]);
    let dif1 = Complex::with_val(prec, &gp[1] - &gm[1]);
    let amp_t = Complex::with_val(prec, &sum0 / 2u32) + &tpi;
    let amp_s = cot.clone() * &two_pi + Complex::with_val(prec, &dif0 / 2u32);
    // d/ds (2π cot 2πs) = −4π²/sin² 2πs = −4π²(1 + cot²)
    let csc2 = Complex::with_val(prec, &cot * &cot) + 1u32;
    let amp_ss = Complex::with_val(prec, &sum1 / 2u32) - csc2 * Float::with_val(prec, two_pi.square_ref());
    let amp_ts = Complex::with_val(prec, &dif1 / 2u32);
    let amp_tt = Complex::with_val(prec, &sum1 / 2u32);
    LaplaceJet {
        hess: hd.hess,
        third,
        fourth,
        amp_grad: [amp_t, amp_s],
        amp_hess: [[amp_tt, amp_ts.clone()], [amp_ts, amp_ss]],
    }
}

/// Limit of d²(V_{N,1/M} − V + (log(1−e^{2πi(t+s)}) + log(1−e^{2πi(t−s)}) − 4πit)/(2d)):
/// πi(−(3p+2)/6 − 1/M² + (E(t+s) + E(t−s))/6 + (1/4 − 2/M²)E(t)), E(u) = e/(1 − e).
pub fn second_order_potential(p: i64, t: &Complex, s: &Complex, m: Option<u32>, prec: u32) -> Complex {
    let e = |u: &Complex| {
        let x = exp2pii_kernel(u, prec);
        let om = Complex::with_val(prec, 1) - &x;
        x / om
    };
    let ep = e(&Complex::with_val(prec, t + s));
    let em = e(&Complex::with_val(prec, t - s));
    let et = e(t);
    let inv_m2 = match m {
        Some(m) => Float::with_val(prec, 1) / Float::with_val(prec, m as u64 * m as u64),
        None => Float::new(prec),
    };
    let mut inner = Complex::with_val(prec, -Float::with_val(prec, 3 * p + 2) / 6u32) - &inv_m2;
    inner += (ep + em) / 6u32;
    let coeff = Float::with_val(prec, 0.25) - Float::with_val(prec, &inv_m2 * 2u32);
    inner += et * coeff;
    inner * Complex::with_val(prec, (0, numerics::pi(prec)))
}

/// κ₁(p, 1/M) (or κ₁(p) with `m` = None) from the Laplace expansion at the critical point.
///
/// The integrand of the dominant Fourier coefficient is
/// sin(2πs)·e^{d V_{N,1/M}}, and V_{N,1/M} = V + V₁/d + w/d² + O(d⁻³), so
/// J/leading = 1 + (c₁ + w(t₀,s₀))/d + …, and κ₁ = (c₁ + w)/(2πi).
/// The analytic third and fourth derivatives are cross-checked against
/// central differences of the Hessian at 512 bits.
pub fn kappa1_via_saddle(p: i64, data: &CriticalData, m: Option<u32>, ctx: &PrecisionContext) -> Result<Complex> {
    let prec = ctx.working().max(512);
    let t = Complex::with_val(prec, &data.t0);
    let s = Complex::with_val(prec, &data.s0);
    let jet = saddle_jet(p, &t, &s, prec);

    // Central-difference check of the third derivatives, step 1e-8.
    let h = Float::with_val(prec, 1e-8_f64);
    let hess_at = |dt: &Float, ds: &Float| {
        let tt = Complex::with_val(prec, &t + dt);
        let ss = Complex::with_val(prec, &s + ds);
        potential::hessian_kernel(p, &tt, &ss, prec).hess
    };
    let zero = Float::new(prec);
    let neg = Float::with_val(prec, -&h);
    let (tp, tm) = (hess_at(&h, &zero), hess_at(&neg, &zero));
    let (sp, sm) = (hess_at(&zero, &h), hess_at(&zero, &neg));
    let fd = |a: &Complex, b: &Complex| Complex::with_val(prec, a - b) / Float::with_val(prec, &h * 2u32);
    let estimates = [
        (fd(&tp[0][0], &tm[0][0]), &jet.third[0]),
        (fd(&sp[0][0], &sm[0][0]), &jet.third[1]),
        (fd(&tp[1][1], &tm[1][1]), &jet.third[2]),
        (fd(&sp[1][1], &sm[1][1]), &jet.third[3]),
    ];
    let worst = estimates.iter().map(|(e, a)| numerics::rel_diff(e, a)).fold(0.0, f64::max);
    if !(worst < 1e-10) {
        return Err(Error::Accuracy { message: "third derivatives disagree with finite differences".into(), achieved: worst });
    }

    let c1 = laplace_first_correction(&jet, prec)?;
    let w = second_order_potential(p, &t, &s, m, prec);
    let two_pi_i = Complex::with_val(prec, (0, numerics::pi(prec) * 2u32));
    let k = (c1 + w) / two_pi_i;
    Ok(Complex::with_val(ctx.bits, &k))
}
