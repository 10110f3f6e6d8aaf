//! Dilogarithm, Lobachevsky function and the quantum dilogarithm
//! φ(t) = ∫_γ e^{(2t-1)x} / (4x sinh x sinh(x/denom)) dx.
//!
//! γ runs along (-∞,-1], the upper unit semicircle from -1 to 1, and [1,∞).
//! The integrand decays like e^{-(2 - 2Re t + 1/denom)x} on the right and
//! e^{-(2Re t + 1/denom)|x|} on the left, so the integral converges on the
//! strip -1/(2 denom) < Re t < 1 + 1/(2 denom).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{self, exp2pii_kernel, ln_kernel, PrecisionContext};
use crate::qjones::RootSpec;

/// Side from which a point on the cut (1, ∞) is approached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CutSide {
    Above,
    Below,
}

/// Extra bits used inside li2 on top of the caller's precision.
const LI2_GUARD: u32 = 16;

fn bernoulli_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<Float>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Float>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// c_k = B_{2k}/(2k+1)! = (-1)^{k+1} 2ζ(2k) / ((2π)^{2k} (2k+1)), k ≥ 1.
fn bernoulli_coefficients(prec: u32) -> Arc<Vec<Float>> {
    if let Some(c) = bernoulli_cache().lock().unwrap().get(&prec) {
        return c.clone();
    }
    // |u| ≤ 3.4 on the region where the series is used, so each term gains
    // at least log2((2π/3.4)^2) ≈ 1.77 bits.
    let kmax = (prec as f64 / 1.77).ceil() as u32 + 8;
    let two_pi_sq = Float::with_val(prec, Constant::Pi) * 2u32;
    let two_pi_sq = Float::with_val(prec, &two_pi_sq * &two_pi_sq);
    let mut pow = Float::with_val(prec, 1);
    let mut out = Vec::with_capacity(kmax as usize);
    for k in 1..=kmax {
        pow *= &two_pi_sq;
        let z = Float::with_val(prec, Float::zeta_u(2 * k));
        let mut c = z * 2u32 / &pow / (2 * k + 1);
        if k % 2 == 0 {
            c = -c;
        }
        out.push(c);
    }
    let out = Arc::new(out);
    bernoulli_cache().lock().unwrap().insert(prec, out.clone());
    out
}

fn li2_series(z: &Complex, prec: u32) -> Complex {
    let mut zn = z.clone();
    let mut sum = z.clone();
    let eps = Float::with_val(prec, 1) >> (prec as i32 + 4);
    let mut n: u64 = 1;
    loop {
        n += 1;
        zn *= z;
        let term = Complex::with_val(prec, &zn / (n * n));
        sum += &term;
        if Float::with_val(prec, zn.abs_ref()) < eps {
            break;
        }
    }
    sum
}

fn li2_bernoulli(z: &Complex, prec: u32) -> Result<Complex> {
    let one_minus = Complex::with_val(prec, 1 - z);
    let u = -ln_kernel(&one_minus, prec)?;
    let u2 = Complex::with_val(prec, &u * &u);
    let mut sum = Complex::with_val(prec, &u - Complex::with_val(prec, &u2 / 4u32));
    let mut upow = u.clone();
    let eps = Float::with_val(prec, 1) >> (prec as i32 + 4);
    for c in bernoulli_coefficients(prec).iter() {
        upow *= &u2;
        let term = Complex::with_val(prec, &upow * c);
        let small = Float::with_val(prec, term.abs_ref()) < eps;
        sum += term;
        if small {
            break;
        }
    }
    Ok(sum)
}

fn pi_sq_over_6(prec: u32) -> Float {
    let pi = numerics::pi(prec);
    Float::with_val(prec, &pi * &pi) / 6u32
}

/// Li2 at working precision `prec`.
pub fn li2_kernel(z: &Complex, side: Option<CutSide>, prec: u32) -> Result<Complex> {
    if !(z.real().is_finite() && z.imag().is_finite()) {
        return Err(Error::NonFinite("li2 argument"));
    }
    let wp = prec + LI2_GUARD;
    let z = Complex::with_val(wp, z);
    if z.imag().is_zero() && z.real().is_zero() {
        return Ok(Complex::with_val(prec, (0, 0)));
    }
    if z.imag().is_zero() && *z.real() == 1 {
        return Ok(Complex::with_val(prec, pi_sq_over_6(prec)));
    }
    let near_cut_width = Float::with_val(64, 1) >> (prec as i32 / 2);
    let on_cut = *z.real() > 1 && Float::with_val(wp, z.imag().abs_ref()) < near_cut_width;
    let r = Float::with_val(wp, z.abs_ref());
    let value = if on_cut {
        let side = side.ok_or_else(|| {
            Error::Domain("li2 argument lies on the cut (1, inf); a side flag is required".into())
        })?;
        // Li2(z) = -Li2(1/z) - π²/6 - ½ log²(-z), with arg(-z) continued from the chosen side.
        let inv = Complex::with_val(wp, z.clone().recip());
        let li_inv = li2_kernel(&inv, None, wp)?;
        let pi = numerics::pi(wp);
        let ratio = Float::with_val(wp, z.imag() / z.real()).atan();
        let arg = match side {
            CutSide::Above => ratio - &pi,
            CutSide::Below => ratio + &pi,
        };
        let log_neg = Complex::with_val(wp, (r.ln(), arg));
        let sq = Complex::with_val(wp, &log_neg * &log_neg) / 2u32;
        -li_inv - pi_sq_over_6(wp) - sq
    } else if r <= 0.5 {
        li2_series(&z, wp)
    } else if r >= 2 {
        let inv = Complex::with_val(wp, z.clone().recip());
        let log_neg = ln_kernel(&Complex::with_val(wp, -&z), wp)?;
        let sq = Complex::with_val(wp, &log_neg * &log_neg) / 2u32;
        -li2_series(&inv, wp) - pi_sq_over_6(wp) - sq
    } else {
        let w = Complex::with_val(wp, 1 - &z);
        if Float::with_val(wp, w.abs_ref()) <= 0.5 {
            // Li2(z) = π²/6 - log z log(1-z) - Li2(1-z)
            let prod = ln_kernel(&z, wp)? * ln_kernel(&w, wp)?;
            Complex::with_val(wp, pi_sq_over_6(wp)) - prod - li2_series(&w, wp)
        } else {
            li2_bernoulli(&z, wp)?
        }
    };
    numerics::ensure_finite(Complex::with_val(prec, &value), "li2")
}

/// Dilogarithm Li2(z) = -∫_0^z log(1-x)/x dx, holomorphic on ℂ∖[1,∞).
///
/// Points within 2^{-bits/2} of the cut (1, ∞) need `side`.
pub fn li2(z: &Complex, side: Option<CutSide>, ctx: &PrecisionContext) -> Result<Complex> {
    let v = li2_kernel(z, side, ctx.working())?;
    Ok(Complex::with_val(ctx.bits, &v))
}

/// Λ(t) = Re(Li2(e^{2πit}) / 2πi) = -∫_0^t log|2 sin πu| du.
pub fn lobachevsky(t: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let prec = ctx.working();
    let frac = Float::with_val(prec, t - Float::with_val(prec, t.floor_ref()));
    if frac.is_zero() || frac == 0.5 {
        return Ok(Float::new(ctx.bits));
    }
    let z = exp2pii_kernel(&Complex::with_val(prec, &frac), prec);
    let l = li2_kernel(&z, None, prec)?;
    let two_pi = numerics::pi(prec) * 2u32;
    let v = Float::with_val(prec, l.imag() / two_pi);
    Ok(Float::with_val(ctx.bits, &v))
}

fn zeta_even_f64() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let pi = std::f64::consts::PI;
        let mut v = vec![pi * pi / 6.0, pi.powi(4) / 90.0];
        for k in 3..=30 {
            let s: f64 = (1..2000).rev().map(|n| (n as f64).powi(-2 * k)).sum();
            v.push(s);
        }
        v
    })
}

/// Clausen function Cl2(θ) = -∫_0^θ log|2 sin(x/2)| dx in double precision.
pub fn clausen_f64(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut x = theta.rem_euclid(two_pi);
    if x > PI {
        x -= two_pi;
    }
    if x == 0.0 {
        return 0.0;
    }
    let a = x.abs();
    // Cl2(θ) = θ - θ log θ + Σ_k 2ζ(2k) θ^{2k+1} / ((2π)^{2k} 2k (2k+1)), |θ| < 2π
    let r = (a / two_pi) * (a / two_pi);
    let mut pw = a;
    let mut sum = a - a * a.ln();
    for (i, z) in zeta_even_f64().iter().enumerate() {
        let k = (i + 1) as f64;
        pw *= r;
        let term = 2.0 * z * pw / (2.0 * k * (2.0 * k + 1.0));
        sum += term;
        if term < 1e-18 * sum.abs() {
            break;
        }
    }
    sum.copysign(x)
}

/// Double-precision Λ(t) = Cl2(2πt)/(2π), used for grid scans.
pub fn lobachevsky_f64(t: f64) -> f64 {
    clausen_f64(2.0 * std::f64::consts::PI * t) / (2.0 * std::f64::consts::PI)
}

type GlRule = Arc<(Vec<Float>, Vec<Float>)>;

fn gauss_legendre_cache() -> &'static Mutex<HashMap<(u32, u32), GlRule>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), GlRule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: u32, prec: u32) -> GlRule {
    if let Some(r) = gauss_legendre_cache().lock().unwrap().get(&(n, prec)) {
        return r.clone();
    }
    let wp = prec + 16;
    let eval = |x: &Float| -> (Float, Float) {
        let mut p0 = Float::with_val(wp, 1);
        let mut p1 = x.clone();
        for j in 2..=n {
            let p2 = (Float::with_val(wp, x * &p1) * (2 * j - 1) - Float::with_val(wp, &p0 * (j - 1))) / j;
            p0 = p1;
            p1 = p2;
        }
        let x2m1 = Float::with_val(wp, x * x) - 1u32;
        let dp = (Float::with_val(wp, x * &p1) - &p0) * n / x2m1;
        (p1, dp)
    };
    let mut nodes = Vec::with_capacity(n as usize);
    let mut weights = Vec::with_capacity(n as usize);
    let tol = Float::with_val(wp, 1) >> (wp as i32 - 4);
    for i in 1..=n {
        let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(wp, guess);
        for _ in 0..100 {
            let (p, dp) = eval(&x);
            let dx = p / dp;
            let done = Float::with_val(wp, dx.abs_ref()) < tol;
            x -= dx;
            if done {
                break;
            }
        }
        let (_, dp) = eval(&x);
        let one_minus = 1u32 - Float::with_val(wp, &x * &x);
        let w = Float::with_val(wp, 2u32) / (one_minus * Float::with_val(wp, &dp * &dp));
        nodes.push(Float::with_val(prec, x));
        weights.push(Float::with_val(prec, w));
    }
    let rule = Arc::new((nodes, weights));
    gauss_legendre_cache().lock().unwrap().insert((n, prec), rule.clone());
    rule
}

fn ln_gamma_f64(x: f64) -> f64 {
    // Stirling series, accurate for x ≥ 8 which is all that is needed here.
    let x2 = x * x;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2)
}

/// Integration window for φ: truncation, panel count and the design strip of Re t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    /// Largest |x| kept on either ray.
    pub x_max: f64,
    /// Total number of Gauss–Legendre panels along γ.
    pub panels: u32,
    /// Nodes per panel.
    pub order: u32,
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_max: f64,
    x_pos: f64,
    x_neg: f64,
    bits: u32,
}

const SEMICIRCLE_PANELS: u32 = 16;
const MIN_PANELS: u32 = 64;

fn tail_log(alpha: f64, x: f64, d: f64) -> f64 {
    -alpha * x - (alpha * x).ln() - (1.0 - (-2.0 * x / d).exp()).ln() - (1.0 - (-2.0 * x).exp()).ln()
}

fn truncation(alpha: f64, d: f64, target: f64) -> f64 {
    let mut hi = 2.0;
    while tail_log(alpha, hi, d) > target {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail_log(alpha, mid, d) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(1.0)
}

impl ContourSpec {
    /// Contour valid for re_lo ≤ Re t ≤ re_hi and |Im t| ≤ im_max, with the
    /// ray tails below 2^{-bits-10}.
    pub fn new(root: &RootSpec, re_lo: f64, re_hi: f64, im_max: f64, ctx: &PrecisionContext) -> Result<Self> {
        let d = root.denom_f64();
        let alpha_pos = 2.0 - 2.0 * re_hi + 1.0 / d;
        let alpha_neg = 2.0 * re_lo + 1.0 / d;
        if !(re_lo <= re_hi) || alpha_pos <= 1e-9 || alpha_neg <= 1e-9 {
            return Err(Error::Domain(format!(
                "Re t window [{re_lo}, {re_hi}] leaves the convergence strip (-1/(2d), 1 + 1/(2d)) with d = {d}"
            )));
        }
        let bits = ctx.working();
        let target = -((ctx.bits + 10) as f64) * std::f64::consts::LN_2;
        let x_pos = truncation(alpha_pos, d, target);
        let x_neg = truncation(alpha_neg, d, target);
        let order = ((0.216 * bits as f64).ceil() as u32 + 2).max(20);
        let mut spec = Self {
            x_max: x_pos.max(x_neg),
            panels: 0,
            order,
            re_lo,
            re_hi,
            im_max: im_max.abs(),
            x_pos,
            x_neg,
            bits,
        };
        let (pos, neg) = spec.ray_panels(root);
        spec.panels = (pos.len() + neg.len()) as u32 + SEMICIRCLE_PANELS;
        Ok(spec)
    }

    /// Window 0 < Re t < 1 shrunk by 1/(4 denom), real arguments.
    pub fn interior(root: &RootSpec, ctx: &PrecisionContext) -> Result<Self> {
        let d = root.denom_f64();
        Self::new(root, 0.25 / d, 1.0 - 0.25 / d, 0.0, ctx)
    }

    /// Smallest window from a fixed ladder containing [re_min, re_max] x |Im| ≤ im_abs.
    ///
    /// The ladder approaches each edge of the convergence strip geometrically
    /// and is uniform with step 1/16 in between, so nearby arguments share one
    /// cached rule.
    pub fn covering(root: &RootSpec, re_min: f64, re_max: f64, im_abs: f64, ctx: &PrecisionContext) -> Result<Self> {
        let d = root.denom_f64();
        let edge = 0.5 / d;
        let mut lows: Vec<f64> = (0..=40).map(|k| -edge + edge * (-(k as f64)).exp2()).collect();
        let mut highs: Vec<f64> = lows.iter().map(|v| 1.0 - v).collect();
        let grid: Vec<f64> = (0..=16).map(|j| j as f64 / 16.0).collect();
        lows.extend(&grid);
        highs.extend(&grid);
        let lo = lows.into_iter().filter(|v| *v <= re_min).fold(f64::NEG_INFINITY, f64::max);
        let hi = highs.into_iter().filter(|v| *v >= re_max).fold(f64::INFINITY, f64::min);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "Re t range [{re_min}, {re_max}] reaches the edge of the convergence strip for d = {d}"
            )));
        }
        let im = if im_abs == 0.0 { 0.0 } else { im_abs.log2().ceil().exp2().max(1.0 / 256.0) };
        Self::new(root, lo, hi, im, ctx)
    }

    pub fn contains(&self, t: &Complex) -> bool {
        let re = t.real().to_f64();
        let im = t.imag().to_f64().abs();
        re >= self.re_lo - 1e-12 && re <= self.re_hi + 1e-12 && im <= self.im_max + 1e-12
    }

    fn panel_length(&self, alpha: f64) -> f64 {
        let kappa = (alpha * alpha + 4.0 * self.im_max * self.im_max).sqrt();
        let n2 = 2.0 * self.order as f64;
        let budget = (ln_gamma_f64(n2 + 1.0) - (self.bits as f64 + 8.0) * std::f64::consts::LN_2) / n2;
        2.0 / kappa * budget.exp()
    }

    /// Panels [a, b] on [1, X] for both rays (as positive intervals).
    fn ray_panels(&self, root: &RootSpec) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let d = root.denom_f64();
        let alpha_pos = 2.0 - 2.0 * self.re_hi + 1.0 / d;
        let alpha_neg = 2.0 * self.re_lo + 1.0 / d;
        let layout = |x_end: f64, alpha: f64| -> Vec<(f64, f64)> {
            let len = self.panel_length(alpha);
            let mut out = Vec::new();
            let mut a = 1.0;
            while a < x_end {
                let step = a.min(len);
                let b = (a + step).min(x_end);
                out.push((a, b));
                a = b;
            }
            out
        };
        let mut pos = layout(self.x_pos, alpha_pos);
        let mut neg = layout(self.x_neg, alpha_neg);
        while (pos.len() + neg.len()) as u32 + SEMICIRCLE_PANELS < MIN_PANELS {
            for v in [&mut pos, &mut neg] {
                let (i, _) = v
                    .iter()
                    .enumerate()
                    .max_by(|a, b| (a.1 .1 - a.1 .0).total_cmp(&(b.1 .1 - b.1 .0)))
                    .expect("non-empty panel list");
                let (a, b) = v[i];
                let m = 0.5 * (a + b);
                v[i] = (a, m);
                v.insert(i + 1, (m, b));
            }
        }
        (pos, neg)
    }
}

/// Nodes x_j and weights W_j with φ(t) ≈ Σ W_j e^{(2t-1)x_j}.
#[derive(Clone, Debug)]
struct NodeSet {
    x: Vec<Complex>,
    w: Vec<Complex>,
    re_x: Vec<f64>,
    log_w: Vec<f64>,
}

impl NodeSet {
    fn new(root: &RootSpec, spec: &ContourSpec, order: u32, prec: u32) -> Self {
        let d = root.denom(prec);
        let gl = gauss_legendre(order, prec);
        let (gx, gw) = (&gl.0, &gl.1);
        let mut set = NodeSet { x: Vec::new(), w: Vec::new(), re_x: Vec::new(), log_w: Vec::new() };
        let integrand_factor = |x: &Complex| -> Complex {
            let sh = Complex::with_val(prec, x.sinh_ref());
            let shd = Complex::with_val(prec, x / &d).sinh();
            Complex::with_val(prec, x * 4u32) * sh * shd
        };
        let mut push = |x: Complex, w: Complex| {
            let lw = Float::with_val(64, Float::with_val(prec, w.abs_ref()).ln()).to_f64();
            set.re_x.push(x.real().to_f64());
            set.log_w.push(lw);
            set.x.push(x);
            set.w.push(w);
        };
        let (pos, neg) = spec.ray_panels(root);
        for (sign, panels) in [(1i32, &pos), (-1i32, &neg)] {
            for &(a, b) in panels.iter() {
                // Endpoints are exact f64 values shared by adjacent panels; form
                // the midpoint in high precision so no gap opens between them.
                let (a, b) = (Float::with_val(prec, a), Float::with_val(prec, b));
                let half = Float::with_val(prec, &b - &a) / 2u32;
                let mid = Float::with_val(prec, &b + &a) / 2u32;
                for (u, wu) in gx.iter().zip(gw.iter()) {
                    let xr = Float::with_val(prec, &mid + Float::with_val(prec, &half * u)) * sign;
                    let x = Complex::with_val(prec, (xr, 0));
                    let w = Complex::with_val(prec, Float::with_val(prec, wu * &half)) / integrand_factor(&x);
                    push(x, w);
                }
            }
        }
        // Upper semicircle from -1 to 1: x = e^{iθ}, θ from π to 0, dx = i x dθ.
        let pi = numerics::pi(prec);
        let width = Float::with_val(prec, &pi / SEMICIRCLE_PANELS);
        for j in 0..SEMICIRCLE_PANELS {
            let mid = Float::with_val(prec, &width * j) + Float::with_val(prec, &width / 2u32);
            let half = Float::with_val(prec, &width / 2u32);
            for (u, wu) in gx.iter().zip(gw.iter()) {
                let theta = Float::with_val(prec, &mid + Float::with_val(prec, &half * u));
                let (s, c) = theta.sin_cos(Float::new(prec));
                let x = Complex::with_val(prec, (c, s));
                let jac = Complex::with_val(prec, (0, -Float::with_val(prec, wu * &half))) * &x;
                let w = jac / integrand_factor(&x);
                push(x, w);
            }
        }
        set
    }

    fn sum(&self, t: &Complex, derivative: bool, prec: u32) -> Complex {
        let c = Complex::with_val(prec, t * 2u32) - 1u32;
        let c_re = c.real().to_f64();
        let c_im = c.imag().to_f64();
        let logs: Vec<f64> = (0..self.x.len())
            .map(|j| {
                let xi = self.x[j].imag().to_f64();
                let mut v = self.log_w[j] + c_re * self.re_x[j] - c_im * xi;
                if derivative {
                    v += (2.0 * (self.re_x[j].hypot(xi))).ln();
                }
                v
            })
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let cut = top - (prec as f64 + 8.0) * std::f64::consts::LN_2;
        let mut acc = Complex::with_val(prec, (0, 0));
        for j in 0..self.x.len() {
            if logs[j] < cut {
                continue;
            }
            let e = Complex::with_val(prec, &c * &self.x[j]).exp();
            let mut term = e * &self.w[j];
            if derivative {
                term *= Complex::with_val(prec, &self.x[j] * 2u32);
            }
            acc += term;
        }
        acc
    }
}

/// Quadrature rule for φ at one root and one contour window.
#[derive(Clone, Debug)]
pub struct PhiRule {
    root: RootSpec,
    spec: ContourSpec,
    prec: u32,
    fine: NodeSet,
    coarse: NodeSet,
    tail: f64,
}

/// φ or φ' with its estimated absolute quadrature error.
#[derive(Clone, Debug)]
pub struct PhiValue {
    pub value: Complex,
    pub error: f64,
}

impl PhiRule {
    pub fn new(root: &RootSpec, spec: &ContourSpec) -> Self {
        let prec = spec.bits;
        let coarse_order = (3 * spec.order / 4).max(8);
        let d = root.denom_f64();
        let alpha_pos = 2.0 - 2.0 * spec.re_hi + 1.0 / d;
        let alpha_neg = 2.0 * spec.re_lo + 1.0 / d;
        let tail = tail_log(alpha_pos, spec.x_pos, d).exp() + tail_log(alpha_neg, spec.x_neg, d).exp();
        Self {
            root: *root,
            spec: *spec,
            prec,
            fine: NodeSet::new(root, spec, spec.order, prec),
            coarse: NodeSet::new(root, spec, coarse_order, prec),
            tail,
        }
    }

    pub fn root(&self) -> &RootSpec {
        &self.root
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.spec
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    fn check(&self, t: &Complex) -> Result<()> {
        if !(t.real().is_finite() && t.imag().is_finite()) {
            return Err(Error::NonFinite("phi argument"));
        }
        let d = self.root.denom_f64();
        let re = t.real().to_f64();
        if re <= -0.5 / d || re >= 1.0 + 0.5 / d {
            return Err(Error::Domain(format!("Re t = {re} outside the strip where the integral for phi converges")));
        }
        if !self.spec.contains(t) {
            return Err(Error::Domain(format!(
                "t = {} + {}i outside the contour window [{}, {}] x |Im| <= {}",
                re,
                t.imag().to_f64(),
                self.spec.re_lo,
                self.spec.re_hi,
                self.spec.im_max
            )));
        }
        Ok(())
    }

    /// φ(t) without the error estimate.
    pub fn eval(&self, t: &Complex) -> Result<Complex> {
        self.check(t)?;
        numerics::ensure_finite(self.fine.sum(t, false, self.prec), "phi")
    }

    /// φ'(t) without the error estimate.
    pub fn eval_prime(&self, t: &Complex) -> Result<Complex> {
        self.check(t)?;
        numerics::ensure_finite(self.fine.sum(t, true, self.prec), "phi_prime")
    }

    fn with_error(&self, t: &Complex, derivative: bool) -> Result<PhiValue> {
        self.check(t)?;
        let value = numerics::ensure_finite(self.fine.sum(t, derivative, self.prec), "phi")?;
        let coarse = self.coarse.sum(t, derivative, self.prec);
        let diff = Float::with_val(64, Complex::with_val(self.prec, &value - &coarse).abs_ref()).to_f64();
        Ok(PhiValue { value, error: diff + self.tail })
    }

    pub fn eval_with_error(&self, t: &Complex) -> Result<PhiValue> {
        self.with_error(t, false)
    }

    pub fn eval_prime_with_error(&self, t: &Complex) -> Result<PhiValue> {
        self.with_error(t, true)
    }

    /// φ(t0 + j h) for j = 0..count on a real grid, via geometric recurrences
    /// of e^{2hx} per node instead of one exponential per (node, point).
    pub fn table(&self, t0: &Float, h: &Float, count: usize) -> Result<Vec<Complex>> {
        let prec = self.prec;
        if count == 0 {
            return Ok(Vec::new());
        }
        let t_end = Float::with_val(prec, h * (count - 1) as u64) + t0;
        for t in [t0, &t_end] {
            self.check(&Complex::with_val(prec, t))?;
        }
        let set = &self.fine;
        let (a, b) = (t0.to_f64(), t_end.to_f64());
        let logs = |t: f64, j: usize| set.log_w[j] + (2.0 * t - 1.0) * set.re_x[j];
        let top = (0..set.x.len()).map(|j| logs(a, j).max(logs(b, j))).fold(f64::NEG_INFINITY, f64::max);
        let cut = top - (prec as f64 + 8.0) * std::f64::consts::LN_2;
        let mut out = vec![Complex::with_val(prec, (0, 0)); count];
        let c0 = Float::with_val(prec, t0 * 2u32) - 1u32;
        let h2 = Float::with_val(prec, h * 2u32);
        for j in 0..set.x.len() {
            if logs(a, j).max(logs(b, j)) < cut {
                continue;
            }
            let x = &set.x[j];
            let mut cur = Complex::with_val(prec, x * &c0).exp() * &set.w[j];
            let step = Complex::with_val(prec, x * &h2).exp();
            for (i, slot) in out.iter_mut().enumerate() {
                if i > 0 {
                    cur *= &step;
                }
                *slot += &cur;
            }
        }
        Ok(out)
    }
}

type RuleKey = (u32, Option<u32>, u32, [u64; 3]);

fn rule_cache() -> &'static Mutex<HashMap<RuleKey, Arc<PhiRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<PhiRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared rule for (root, contour), built once per process.
pub fn phi_rule(root: &RootSpec, contour: &ContourSpec) -> Arc<PhiRule> {
    let key = (
        root.n(),
        root.m(),
        contour.bits,
        [contour.re_lo.to_bits(), contour.re_hi.to_bits(), contour.im_max.to_bits()],
    );
    if let Some(r) = rule_cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let rule = Arc::new(PhiRule::new(root, contour));
    rule_cache().lock().unwrap().insert(key, rule.clone());
    rule
}

fn check_contour_precision(contour: &ContourSpec, ctx: &PrecisionContext) -> Result<()> {
    if contour.bits != ctx.working() {
        return Err(Error::Domain(format!(
            "contour was designed for {} working bits, context has {}",
            contour.bits,
            ctx.working()
        )));
    }
    Ok(())
}

fn accept(v: PhiValue, ctx: &PrecisionContext, what: &str) -> Result<PhiValue> {
    let scale = Float::with_val(64, v.value.abs_ref()).to_f64().max(1.0);
    if !(v.error <= scale * (-(ctx.bits as f64) / 2.0).exp2()) {
        return Err(Error::Accuracy { message: format!("{what} quadrature did not converge"), achieved: v.error });
    }
    Ok(PhiValue { value: Complex::with_val(ctx.bits, &v.value), error: v.error })
}

/// φ_{N,1/M}(t) along γ, with a quadrature error estimate.
pub fn phi(t: &Complex, root: &RootSpec, contour: &ContourSpec, ctx: &PrecisionContext) -> Result<PhiValue> {
    check_contour_precision(contour, ctx)?;
    accept(phi_rule(root, contour).eval_with_error(t)?, ctx, "phi")
}

/// φ'_{N,1/M}(t), integrating 2x times the integrand.
pub fn phi_prime(t: &Complex, root: &RootSpec, contour: &ContourSpec, ctx: &PrecisionContext) -> Result<PhiValue> {
    check_contour_precision(contour, ctx)?;
    accept(phi_rule(root, contour).eval_prime_with_error(t)?, ctx, "phi_prime")
}
