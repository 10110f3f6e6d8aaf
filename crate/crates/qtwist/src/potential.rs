//! Potential functions of the twist knots and the regions they are studied on.
//!
//! The limiting potential is
//! V(p,t,s;m,n) = πi((2p+1)s² − (2p+3+2n)s − (2+2m)t)
//!              + (Li2(e^{2πi(t+s)}) + Li2(e^{2πi(t−s)}) − 3Li2(e^{2πit}) + π²/6)/(2πi),
//! and its finite-N counterpart replaces each dilogarithm by a quantum dilogarithm.

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{self, exp2pii_kernel, ln_kernel, PrecisionContext};
use crate::qjones::RootSpec;
use crate::special::{self, ContourSpec};

/// Lemma-level threshold 3.509 as an exact decimal: numerator and denominator.
pub const ENVELOPE_THRESHOLD: (u32, u32) = (3509, 1000);

/// 3.509/(2π): envelope values above this lie in D′₀.
pub fn envelope_threshold() -> f64 {
    ENVELOPE_THRESHOLD.0 as f64 / ENVELOPE_THRESHOLD.1 as f64 / (2.0 * std::f64::consts::PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionName {
    D,
    D0Prime,
    DEpsPrime,
}

/// D = {0<t<1, 0<s<1, 0<t−s<1}; D′_ε = {0.02+ε ≤ t−s ≤ 0.7−ε, 1.02+ε ≤ t+s ≤ 1.7−ε,
/// 0.2+ε ≤ s ≤ 0.8−ε, 0.5+ε ≤ t ≤ 0.909−ε}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSpec {
    pub name: RegionName,
    pub eps: f64,
}

impl RegionSpec {
    pub fn d() -> Self {
        Self { name: RegionName::D, eps: 0.0 }
    }

    pub fn d0_prime() -> Self {
        Self { name: RegionName::D0Prime, eps: 0.0 }
    }

    pub fn d_eps_prime(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps < 0.1) {
            return Err(Error::Domain(format!("eps = {eps} must lie in [0, 0.1)")));
        }
        Ok(Self { name: RegionName::DEpsPrime, eps })
    }

    fn shrink(&self) -> f64 {
        match self.name {
            RegionName::D => 0.0,
            RegionName::D0Prime => 0.0,
            RegionName::DEpsPrime => self.eps,
        }
    }

    pub fn contains(&self, t: f64, s: f64) -> bool {
        let inside = |x: f64, lo: f64, hi: f64| x >= lo && x <= hi;
        match self.name {
            RegionName::D => t > 0.0 && t < 1.0 && s > 0.0 && s < 1.0 && t - s > 0.0 && t - s < 1.0,
            _ => {
                let e = self.shrink();
                inside(t - s, 0.02 + e, 0.7 - e)
                    && inside(t + s, 1.02 + e, 1.7 - e)
                    && inside(s, 0.2 + e, 0.8 - e)
                    && inside(t, 0.5 + e, 0.909 - e)
            }
        }
    }

    /// Complex points are tested through their real parts, inside the strip |Im| ≤ 1.
    pub fn contains_complex(&self, t: &Complex, s: &Complex) -> bool {
        t.imag().to_f64().abs() <= 1.0
            && s.imag().to_f64().abs() <= 1.0
            && self.contains(t.real().to_f64(), s.real().to_f64())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct LatticeIndex {
    pub m: i64,
    pub n: i64,
}

impl LatticeIndex {
    pub fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }
}

/// V(p,t,s;m,n) with the data that produced it.
#[derive(Clone, Debug)]
pub struct PotentialValue {
    pub value: Complex,
    pub t: Complex,
    pub s: Complex,
    pub p: i64,
    pub lattice: LatticeIndex,
    /// Distance of each dilogarithm argument e^{2πi(t+s)}, e^{2πi(t−s)}, e^{2πit}
    /// from the cut [1, ∞).
    pub cut_distance: [f64; 3],
}

fn cut_distance(z: &Complex) -> f64 {
    let re = z.real().to_f64();
    let im = z.imag().to_f64();
    if re >= 1.0 {
        im.abs()
    } else {
        (re - 1.0).hypot(im)
    }
}

fn check_d(t: &Complex, s: &Complex) -> Result<()> {
    if !RegionSpec::d().contains_complex(t, s) {
        return Err(Error::Domain(format!(
            "(Re t, Re s) = ({}, {}) is outside D or the imaginary strip",
            t.real().to_f64(),
            s.real().to_f64()
        )));
    }
    Ok(())
}

fn li2_or_branch(z: &Complex, prec: u32) -> Result<Complex> {
    special::li2_kernel(z, None, prec).map_err(|e| match e {
        Error::Domain(msg) => Error::Branch(msg),
        other => other,
    })
}

fn pi_i(prec: u32) -> Complex {
    Complex::with_val(prec, (0, numerics::pi(prec)))
}

/// V(p,t,s;m,n); `idx = (0,0)` gives V(p,t,s).
pub fn v_limit(p: i64, t: &Complex, s: &Complex, idx: LatticeIndex, ctx: &PrecisionContext) -> Result<PotentialValue> {
    check_d(t, s)?;
    let prec = ctx.working();
    let t = Complex::with_val(prec, t);
    let s = Complex::with_val(prec, s);
    let args = [
        Complex::with_val(prec, &t + &s),
        Complex::with_val(prec, &t - &s),
        t.clone(),
    ];
    let zs: Vec<Complex> = args.iter().map(|a| exp2pii_kernel(a, prec)).collect();
    let mut dil = Complex::with_val(prec, (0, 0));
    for (j, z) in zs.iter().enumerate() {
        let l = li2_or_branch(z, prec)?;
        if j == 2 {
            dil -= l * 3u32;
        } else {
            dil += l;
        }
    }
    let pi = numerics::pi(prec);
    dil += Float::with_val(prec, &pi * &pi) / 6u32;
    let two_pi_i = pi_i(prec) * 2u32;
    let s2 = Complex::with_val(prec, &s * &s);
    let mut quad = s2 * (2 * p + 1);
    quad -= Complex::with_val(prec, &s * (2 * p + 3 + 2 * idx.n));
    quad -= Complex::with_val(prec, &t * (2 + 2 * idx.m));
    let value = quad * pi_i(prec) + dil / two_pi_i;
    let value = numerics::ensure_finite(value, "v_limit")?;
    let cd = [cut_distance(&zs[0]), cut_distance(&zs[1]), cut_distance(&zs[2])];
    Ok(PotentialValue {
        value: Complex::with_val(ctx.bits, &value),
        t: Complex::with_val(ctx.bits, &t),
        s: Complex::with_val(ctx.bits, &s),
        p,
        lattice: idx,
        cut_distance: cd,
    })
}

/// Finite-N potential V_{N,1/M}(p,t,s) built from φ_{N,1/M}.
///
/// Finite M:
/// πi((2p+1)s² − (2p+3)s + (2/d − 2)t − (6p+4+12/M²)/(12d²)) − πi/12
/// + (φ(t+s+1/(2d)−1) + φ(t−s+1/(2d)) − φ(t) − φ(t−1/(Md)) − φ(t+1/(Md)))/d.
/// At M = ∞ the three φ(t) terms merge and 12/M² drops out.
pub fn v_finite(p: i64, t: &Complex, s: &Complex, root: &RootSpec, ctx: &PrecisionContext) -> Result<Complex> {
    let (rt, rs) = (t.real().to_f64(), s.real().to_f64());
    // Lower edges t−s = 0 and t+s = 1 are kept: the grid diagonal k = l and the
    // row k+l+1 = N+1 land there and the φ arguments stay inside their strip.
    if !(rt > 0.0 && rt < 1.0 && rt - rs >= 0.0 && rt - rs < 1.0 && rt + rs >= 1.0 && rt + rs < 2.0) {
        return Err(Error::Branch(format!(
            "(Re t, Re s) = ({rt}, {rs}) is outside 0<t<1, 0≤t−s<1, 1≤t+s<2"
        )));
    }
    let prec = ctx.working();
    let t = Complex::with_val(prec, t);
    let s = Complex::with_val(prec, s);
    let d = root.denom(prec);
    let half_step = Float::with_val(prec, 1) / Float::with_val(prec, &d * 2u32);
    let mut args = vec![
        Complex::with_val(prec, &t + &s) + &half_step - 1u32,
        Complex::with_val(prec, &t - &s) + &half_step,
        t.clone(),
    ];
    let shift = root.m().map(|m| Float::with_val(prec, 1) / Float::with_val(prec, &d * m));
    if let Some(sh) = &shift {
        args.push(Complex::with_val(prec, &t - sh));
        args.push(Complex::with_val(prec, &t + sh));
    }
    let re: Vec<f64> = args.iter().map(|a| a.real().to_f64()).collect();
    let im = args.iter().map(|a| a.imag().to_f64().abs()).fold(0.0, f64::max);
    let lo = re.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let contour = ContourSpec::covering(root, lo, hi, im, ctx)?;
    let rule = special::phi_rule(root, &contour);
    let phis: Vec<Complex> = args.iter().map(|a| rule.eval(a)).collect::<Result<_>>()?;
    let mut comb = Complex::with_val(prec, &phis[0] + &phis[1]);
    if shift.is_some() {
        comb -= &phis[2];
        comb -= &phis[3];
        comb -= &phis[4];
    } else {
        comb -= Complex::with_val(prec, &phis[2] * 3u32);
    }
    comb /= &d;

    let d2 = Float::with_val(prec, &d * &d);
    let constant = match root.m() {
        Some(m) => {
            let inv_m2 = Float::with_val(prec, 12u32) / Float::with_val(prec, m as u64 * m as u64);
            (inv_m2 + (6 * p + 4)) / (d2 * 12u32)
        }
        None => Float::with_val(prec, 6 * p + 4) / (d2 * 12u32),
    };
    let t_coeff = Float::with_val(prec, 2u32) / &d - 2u32;
    let s2 = Complex::with_val(prec, &s * &s);
    let mut quad = s2 * (2 * p + 1);
    quad -= Complex::with_val(prec, &s * (2 * p + 3));
    quad += Complex::with_val(prec, &t * &t_coeff);
    quad -= constant;
    quad -= Float::with_val(prec, 1) / 12u32;
    let value = quad * pi_i(prec) + comb;
    let value = numerics::ensure_finite(value, "v_finite")?;
    Ok(Complex::with_val(ctx.bits, &value))
}

/// V_{N,1/M}(p,t,s;m,n) = V_{N,1/M}(p,t,s) − 2πimt − 2πins.
pub fn v_finite_lattice(
    p: i64,
    t: &Complex,
    s: &Complex,
    root: &RootSpec,
    idx: LatticeIndex,
    ctx: &PrecisionContext,
) -> Result<Complex> {
    let prec = ctx.working();
    let v = v_finite(p, t, s, root, ctx)?;
    let lin = Complex::with_val(prec, t * idx.m) + Complex::with_val(prec, s * idx.n);
    let out = Complex::with_val(prec, &v) - lin * pi_i(prec) * 2u32;
    Ok(Complex::with_val(ctx.bits, &out))
}

/// log(1 − e^{2πiu}), principal branch.
fn log_one_minus(u: &Complex, prec: u32) -> Result<Complex> {
    let z = Complex::with_val(prec, 1) - exp2pii_kernel(u, prec);
    ln_kernel(&z, prec).map_err(|e| match e {
        Error::Domain(msg) => Error::Branch(msg),
        other => other,
    })
}

/// (∂V/∂t, ∂V/∂s) at lattice index (0,0).
pub fn grad_v(p: i64, t: &Complex, s: &Complex, ctx: &PrecisionContext) -> Result<(Complex, Complex)> {
    check_d(t, s)?;
    let prec = ctx.working();
    let (vt, vs) = grad_kernel(p, t, s, prec)?;
    Ok((Complex::with_val(ctx.bits, &vt), Complex::with_val(ctx.bits, &vs)))
}

pub(crate) fn grad_kernel(p: i64, t: &Complex, s: &Complex, prec: u32) -> Result<(Complex, Complex)> {
    let lp = log_one_minus(&Complex::with_val(prec, t + s), prec)?;
    let lm = log_one_minus(&Complex::with_val(prec, t - s), prec)?;
    let lt = log_one_minus(t, prec)?;
    let pii = pi_i(prec);
    let vt = Complex::with_val(prec, &lt * 3u32) - &lp - &lm - Complex::with_val(prec, &pii * 2u32);
    let vs = Complex::with_val(prec, s * &pii) * (4 * p + 2) - Complex::with_val(prec, &pii * (2 * p + 3)) - &lp + &lm;
    Ok((vt, vs))
}

/// Second derivatives of V together with H(p,x,y).
#[derive(Clone, Debug)]
pub struct HessianData {
    /// [[V_tt, V_ts], [V_st, V_ss]]
    pub hess: [[Complex; 2]; 2],
    pub det: Complex,
    pub h: Complex,
}

/// d/du (−log(1 − e^{2πiu})) = 2πi e^{2πiu}/(1 − e^{2πiu}).
fn g_kernel(u: &Complex, prec: u32) -> Complex {
    let e = exp2pii_kernel(u, prec);
    let den = Complex::with_val(prec, 1) - &e;
    pi_i(prec) * 2u32 * e / den
}

pub(crate) fn hessian_kernel(p: i64, t: &Complex, s: &Complex, prec: u32) -> HessianData {
    let gp = g_kernel(&Complex::with_val(prec, t + s), prec);
    let gm = g_kernel(&Complex::with_val(prec, t - s), prec);
    let gt = g_kernel(t, prec);
    let vtt = Complex::with_val(prec, &gp + &gm) - Complex::with_val(prec, &gt * 3u32);
    let vts = Complex::with_val(prec, &gp - &gm);
    let vss = Complex::with_val(prec, &gp + &gm) + pi_i(prec) * (4 * p + 2);
    let det = Complex::with_val(prec, &vtt * &vss) - Complex::with_val(prec, &vts * &vts);

    let x = exp2pii_kernel(t, prec);
    let xy = exp2pii_kernel(&Complex::with_val(prec, t + s), prec);
    let x_over_y = exp2pii_kernel(&Complex::with_val(prec, t - s), prec);
    let a = Complex::with_val(prec, x.recip_ref()) - 1u32;
    let b = Complex::with_val(prec, xy.recip_ref()) - 1u32;
    let c = Complex::with_val(prec, x_over_y.recip_ref()) - 1u32;
    let q = Float::with_val(prec, 2 * p + 1);
    let mut h = Complex::with_val(prec, -(q.clone() * 3u32)) / &a;
    h += Complex::with_val(prec, &q / &b);
    h += Complex::with_val(prec, &q / &c);
    h -= Complex::with_val(prec, 3u32) / Complex::with_val(prec, &a * &b);
    h -= Complex::with_val(prec, 3u32) / Complex::with_val(prec, &a * &c);
    h += Complex::with_val(prec, 4u32) / Complex::with_val(prec, &b * &c);
    HessianData { hess: [[vtt, vts.clone()], [vts, vss]], det, h }
}

/// Hess V and H(p, e^{2πit}, e^{2πis}); at a critical point det Hess V = −4π² H.
pub fn hessian_and_h(p: i64, t: &Complex, s: &Complex, ctx: &PrecisionContext) -> Result<HessianData> {
    check_d(t, s)?;
    let prec = ctx.working();
    let hd = hessian_kernel(p, t, s, prec);
    let floor = Float::with_val(prec, 1) >> (ctx.bits as i32 / 2);
    if numerics::abs(&hd.det) < floor {
        return Err(Error::Degenerate(format!(
            "|det Hess V| = {:e} at t = {}, s = {}",
            numerics::abs(&hd.det).to_f64(),
            t.real().to_f64(),
            s.real().to_f64()
        )));
    }
    let out = |z: &Complex| Complex::with_val(ctx.bits, z);
    Ok(HessianData {
        hess: [[out(&hd.hess[0][0]), out(&hd.hess[0][1])], [out(&hd.hess[1][0]), out(&hd.hess[1][1])]],
        det: out(&hd.det),
        h: out(&hd.h),
    })
}

/// Real growth envelope: v(t,s) = Λ(t+s) + Λ(t−s) − 3Λ(t), or with a root
/// v_{N,1/M} = Λ(t+s−1+1/(2d)) + Λ(t−s+1/(2d)) − Λ(t−1/(Md)) − Λ(t) − Λ(t+1/(Md)).
pub fn envelope(t: f64, s: f64, root: Option<&RootSpec>) -> f64 {
    use special::lobachevsky_f64 as lam;
    match root {
        None => lam(t + s) + lam(t - s) - 3.0 * lam(t),
        Some(r) => {
            let d = r.denom_f64();
            let h = 0.5 / d;
            let sh = r.m().map(|m| 1.0 / (m as f64 * d)).unwrap_or(0.0);
            lam(t + s - 1.0 + h) + lam(t - s + h) - lam(t - sh) - lam(t) - lam(t + sh)
        }
    }
}
