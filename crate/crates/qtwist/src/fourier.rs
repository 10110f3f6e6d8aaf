//! Poisson-summation side: the bump ψ on D′₀ and the Fourier coefficients
//! of ψ·g over the lattice.
//!
//! The integrals are trapezoid sums in (u, v) = (t − s, t + s) on the box
//! [0.02, 0.7] × [1.02, 1.7], which is the bounding box of D′₀ in these
//! coordinates. With u_i = 0.02 + ih and v_j = 1.02 + jh every factor of the
//! integrand is a one-dimensional table in i, j, j − i or i + j:
//! t = 0.52 + (i+j)h/2, s = 1/2 + (j−i)h/2, t − s + 1/(2d) = u_i + 1/(2d),
//! t + s + 1/(2d) − 1 = u_j + 1/(2d). The reflection s → 1 − s is the swap
//! i ↔ j. ψ·g is smooth and vanishes to all orders on the box boundary, so
//! the trapezoid sums converge faster than any power of h and successive
//! dyadic levels give the error estimate directly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{self, PrecisionContext};
use crate::potential::LatticeIndex;
use crate::qjones::{jones, RootSpec, TwistParam};
use crate::special::{self, ContourSpec};

const U_HI: f64 = 0.7;
/// Box width 0.68 = 17/25.
const WIDTH: (i128, i128) = (17, 25);
const MIN_INTERVALS: usize = 256;
pub const MAX_INTERVALS: usize = 8192;
/// Smallest relative tolerance the f64 quadrature tables can meet.
pub const TOL_FLOOR: f64 = 1e-14;

/// Transition width of the bump; ψ = 1 on D′_eps and 0 off D′₀.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpSpec {
    pub eps: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self { eps: 0.01 }
    }
}

impl BumpSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.1) {
            return Err(Error::Domain(format!("bump width eps = {eps} must lie in (0, 0.1]")));
        }
        Ok(Self { eps })
    }
}

/// C^∞ step from 0 (x ≤ 0) to 1 (x ≥ 1): f(x)/(f(x) + f(1−x)) with f(x) = e^{−1/x}.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Product of two steps for margins above the lower and below the upper edge.
fn band(below: f64, above: f64, eps: f64) -> f64 {
    smoothstep(below / eps) * smoothstep(above / eps)
}

/// ψ(t, s): product of one band per defining inequality of D′₀.
pub fn bump(t: f64, s: f64, spec: BumpSpec) -> f64 {
    let e = spec.eps;
    let (u, v) = (t - s, t + s);
    band(u - 0.02, 0.7 - u, e) * band(v - 1.02, 1.7 - v, e) * band(s - 0.2, 0.8 - s, e) * band(t - 0.5, 0.909 - t, e)
}

/// One Fourier coefficient with its quadrature data.
///
/// `scale` is the L1 norm of the integrand times the prefactor, the natural
/// size against which the oscillatory sum and `quad_error` are measured.
#[derive(Clone, Debug)]
pub struct FourierCoeff {
    pub m: i64,
    pub n: i64,
    pub value: Complex,
    pub quad_error: f64,
    pub scale: f64,
    /// Trapezoid nodes per direction of the accepted level.
    pub grid: (usize, usize),
}

impl FourierCoeff {
    pub fn value_c64(&self) -> Complex64 {
        numerics::to_c64(&self.value)
    }
}

/// e^{iπ num/den} in double precision after exact reduction mod 2.
fn phase(num: i128, den: i128) -> Complex64 {
    let r = num.rem_euclid(2 * den);
    let x = r as f64 / den as f64;
    let (s, c) = (PI * x).sin_cos();
    Complex64::new(c, s)
}

fn quadrature_context() -> PrecisionContext {
    PrecisionContext::new(64, 32).expect("static precision")
}

/// φ(t0 + jh), j < count, split across threads.
fn phi_table(rule: &special::PhiRule, t0: &Float, h: &Float, count: usize) -> Result<Vec<Complex64>> {
    let prec = rule.prec();
    let chunk = 256;
    let starts: Vec<usize> = (0..count).step_by(chunk).collect();
    let parts: Vec<Result<Vec<Complex64>>> = starts
        .par_iter()
        .map(|&k| {
            let len = chunk.min(count - k);
            let start = Float::with_val(prec, h * k as u64) + t0;
            let vals = rule.table(&start, h, len)?;
            Ok(vals.iter().map(numerics::to_c64).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Tables for one trapezoid level: `intervals` steps per direction.
#[derive(Clone, Debug)]
pub struct QuadratureLevel {
    pub intervals: usize,
    pub h: f64,
    p: i64,
    root: RootSpec,
    /// φ(u_i + 1/(2d)).
    phi_u: Vec<Complex64>,
    /// πi d((2p+1)s² − (2p+3)s) at j − i = k − n.
    poly_s: Vec<Complex64>,
    /// πi((2 − 2d)t − dC − d/12) − Φ(t) at i + j = k.
    poly_t: Vec<Complex64>,
    row: Vec<Complex64>,
    diff: Vec<Complex64>,
    sum: Vec<Complex64>,
}

impl QuadratureLevel {
    pub fn new(p: i64, root: &RootSpec, bump: BumpSpec, intervals: usize) -> Result<Self> {
        if intervals < 4 {
            return Err(Error::Domain(format!("{intervals} intervals is too coarse")));
        }
        let n = intervals;
        let ctx = quadrature_context();
        let prec = ctx.working();
        let d_hp = root.denom(prec);
        let d = root.denom_f64();
        let h_hp = Float::with_val(prec, WIDTH.0) / Float::with_val(prec, WIDTH.1 * n as i128);
        let h = h_hp.to_f64();
        let a_hp = Float::with_val(prec, 1) / 50u32;
        let half_step = Float::with_val(prec, 1) / Float::with_val(prec, &d_hp * 2u32);
        let shift = root.m().map(|m| Float::with_val(prec, 1) / Float::with_val(prec, &d_hp * m));

        let u0 = Float::with_val(prec, &a_hp + &half_step);
        let t0 = Float::with_val(prec, &a_hp + 0.5f64);
        let half_h = Float::with_val(prec, &h_hp / 2u32);
        let sh = shift.as_ref().map(|s| s.to_f64()).unwrap_or(0.0);
        // t runs up to 1.2 on the box, but ψ vanishes beyond t = 0.909, so φ(t)
        // is only tabulated up to there.
        let t_count = (((0.909 - 0.52) / (h / 2.0)).floor() as usize + 2).min(2 * n + 1);
        let lo = (u0.to_f64()).min(t0.to_f64() - sh);
        let hi = (U_HI + 0.5 / d).max(0.52 + t_count as f64 * h / 2.0 + sh);
        let contour = ContourSpec::covering(root, lo, hi, 0.0, &ctx)?;
        let rule = special::phi_rule(root, &contour);

        let phi_u = phi_table(&rule, &u0, &h_hp, n + 1)?;
        let mut phi_t = phi_table(&rule, &t0, &half_h, t_count)?;
        match &shift {
            Some(sh) => {
                let minus = phi_table(&rule, &Float::with_val(prec, &t0 - sh), &half_h, t_count)?;
                let plus = phi_table(&rule, &Float::with_val(prec, &t0 + sh), &half_h, t_count)?;
                for ((a, b), c) in phi_t.iter_mut().zip(&minus).zip(&plus) {
                    *a += b + c;
                }
            }
            None => phi_t.iter_mut().for_each(|a| *a *= 3.0),
        }

        let pf = p as f64;
        let inv_m2 = root.m().map(|m| 1.0 / (m as f64 * m as f64)).unwrap_or(0.0);
        let d_const = (6.0 * pf + 4.0 + 12.0 * inv_m2) / (12.0 * d) + d / 12.0;
        let i_pi = Complex64::new(0.0, PI);
        let poly_s: Vec<Complex64> = (0..=2 * n)
            .map(|k| {
                let s = 0.5 + (k as f64 - n as f64) * h / 2.0;
                i_pi * d * ((2.0 * pf + 1.0) * s * s - (2.0 * pf + 3.0) * s)
            })
            .collect();
        let poly_t: Vec<Complex64> = (0..=2 * n)
            .map(|k| {
                let t = 0.52 + k as f64 * h / 2.0;
                match phi_t.get(k) {
                    Some(f) => i_pi * ((2.0 - 2.0 * d) * t - d_const) - f,
                    None => Complex64::new(f64::NAN, f64::NAN),
                }
            })
            .collect();

        let e = bump.eps;
        let row: Vec<Complex64> =
            (0..=n).map(|i| phi_u[i].exp() * band(i as f64 * h, (n - i) as f64 * h, e)).collect();
        let diff: Vec<Complex64> = (0..=2 * n)
            .map(|k| {
                let off = (k as f64 - n as f64) * h / 2.0;
                // sin(2πs) = −sin(π(j−i)h) with s − 1/2 = off.
                let sin = -(2.0 * PI * off).sin();
                poly_s[k].exp() * sin * band(0.3 + off, 0.3 - off, e)
            })
            .collect();
        let sum: Vec<Complex64> = (0..=2 * n)
            .map(|k| {
                let dt = k as f64 * h / 2.0;
                let b = band(0.02 + dt, 0.389 - dt, e);
                if b == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    poly_t[k].exp() * b
                }
            })
            .collect();
        Ok(Self { intervals: n, h, p, root: *root, phi_u, poly_s, poly_t, row, diff, sum })
    }

    /// (t, s) of node (i, j).
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (0.52 + (i + j) as f64 * self.h / 2.0, 0.5 + (j as f64 - i as f64) * self.h / 2.0)
    }

    /// denom·V_{N,1/M}(p, t, s) at node (i, j), rebuilt from the tables;
    /// NaN where t > 0.909 and ψ vanishes.
    pub fn exponent(&self, i: usize, j: usize) -> Complex64 {
        let n = self.intervals;
        self.phi_u[i] + self.phi_u[j] + self.poly_s[j + n - i] + self.poly_t[i + j]
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    /// Σ_ij ψ sin(2πs) e^{d V(m,n)} (h²/2) for each index, and the matching
    /// L1 sum Σ|·| (h²/2) shared by all of them.
    pub fn integrals(&self, indices: &[LatticeIndex]) -> (Vec<Complex64>, f64) {
        let n = self.intervals;
        let (big_a, big_b) = self.root.denom_ratio();
        // πd h = π A·17/(B·25 n)
        let step_den = big_b * WIDTH.1 * n as i128;
        let step_num = big_a * WIDTH.0;
        let mut betas: Vec<i64> = indices.iter().map(|ix| ix.m + ix.n).collect();
        betas.sort_unstable();
        betas.dedup();
        let col: Vec<Vec<Complex64>> = betas
            .iter()
            .map(|&b| (0..=n).map(|j| phase(-step_num * b as i128 * j as i128, step_den)).collect())
            .collect();
        let rows: Vec<(Vec<Complex64>, f64)> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![Complex64::new(0.0, 0.0); betas.len()];
                let mut l1 = 0.0;
                let ri = self.row[i];
                if ri == Complex64::new(0.0, 0.0) {
                    return (acc, l1);
                }
                for j in 0..=n {
                    let w = ri * self.row[j] * self.diff[j + n - i] * self.sum[i + j];
                    if w.re == 0.0 && w.im == 0.0 {
                        continue;
                    }
                    l1 += w.norm();
                    for (a, c) in acc.iter_mut().zip(&col) {
                        *a += w * c[j];
                    }
                }
                (acc, l1)
            })
            .collect();
        let weight = self.h * self.h / 2.0;
        let l1 = rows.iter().map(|r| r.1).sum::<f64>() * weight;
        let values = indices
            .iter()
            .map(|ix| {
                let bi = betas.binary_search(&(ix.m + ix.n)).unwrap();
                let alpha = (ix.m - ix.n) as i128;
                let mut total = Complex64::new(0.0, 0.0);
                for (i, r) in rows.iter().enumerate() {
                    total += phase(-step_num * alpha * i as i128, step_den) * r.0[bi];
                }
                // e^{−2πi d(m(1/2 + 1/50) + n/2)} = e^{−2πi d(26m + 25n)/50}
                let c = phase(-2 * big_a * (26 * ix.m as i128 + 25 * ix.n as i128), 50 * big_b);
                total * c * weight
            })
            .collect();
        (values, l1)
    }
}

type LevelKey = (i64, u32, Option<u32>, u64, usize);

fn level_cache() -> &'static Mutex<HashMap<LevelKey, Arc<QuadratureLevel>>> {
    static CACHE: OnceLock<Mutex<HashMap<LevelKey, Arc<QuadratureLevel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared tables for (p, root, bump, intervals).
pub fn quadrature_level(p: i64, root: &RootSpec, bump: BumpSpec, intervals: usize) -> Result<Arc<QuadratureLevel>> {
    let key = (p, root.n(), root.m(), bump.eps.to_bits(), intervals);
    if let Some(l) = level_cache().lock().unwrap().get(&key) {
        return Ok(l.clone());
    }
    let level = Arc::new(QuadratureLevel::new(p, root, bump, intervals)?);
    level_cache().lock().unwrap().insert(key, level.clone());
    Ok(level)
}

/// Which normalisation a batch is computed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Hat,
    Tilde,
}

/// Prefactor in front of the integral.
///
/// ĥ: (−1)^{m+n+p} e^{πi(1/M − 1/4)} d^{3/2}/sin(π/(Md)).
/// h̃ at finite M: (1 − e^{2πi(n+1)/M}) times that.
/// h̃ at M = ∞: (−1)^{m+n+p+1} 2 e^{πi/4} (n+1) N^{5/2}.
fn prefactor(kind: Kind, p: i64, root: &RootSpec, ix: LatticeIndex) -> Complex64 {
    let sign = if (ix.m + ix.n + p).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let d = root.denom_f64();
    match root.m() {
        Some(m) => {
            let (a, b) = root.denom_ratio();
            let sin = (PI * b as f64 / (a as f64 * m as f64)).sin();
            let mut f = phase(4 - m as i128, 4 * m as i128) * (sign * d.powf(1.5) / sin);
            if kind == Kind::Tilde {
                f *= Complex64::new(1.0, 0.0) - phase(2 * (ix.n as i128 + 1), m as i128);
            }
            f
        }
        None => phase(1, 4) * (-sign * 2.0 * (ix.n + 1) as f64 * d.powf(2.5)),
    }
}

fn initial_intervals(root: &RootSpec, indices: &[LatticeIndex], bump: BumpSpec) -> usize {
    let spread = indices.iter().map(|ix| ix.m.abs() + ix.n.abs()).max().unwrap_or(0) as f64;
    // Oscillation: about N(2 + |m| + |n|) nodes per unit length; the bump
    // transition needs a few dozen nodes across eps.
    let per_unit = (4.0 * root.n() as f64 * (2.0 + spread)).max(8.0 / bump.eps);
    let want = (per_unit * 0.68).ceil() as usize;
    want.next_power_of_two().clamp(MIN_INTERVALS, MAX_INTERVALS)
}

fn batch(
    kind: Kind,
    indices: &[LatticeIndex],
    p: i64,
    root: &RootSpec,
    bump: BumpSpec,
    tol: f64,
) -> Result<Vec<FourierCoeff>> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol = {tol} must be positive")));
    }
    if tol < TOL_FLOOR {
        return Err(Error::Accuracy {
            message: format!("tol = {tol:e} is below what double-precision tables can resolve"),
            achieved: TOL_FLOOR,
        });
    }
    let pref: Vec<Complex64> = indices.iter().map(|ix| prefactor(kind, p, root, *ix)).collect();
    let mut intervals = initial_intervals(root, indices, bump);
    let mut previous: Option<Vec<Complex64>> = None;
    loop {
        let level = quadrature_level(p, root, bump, intervals)?;
        let (raw, l1) = level.integrals(indices);
        let values: Vec<Complex64> = raw.iter().zip(&pref).map(|(r, f)| r * f).collect();
        let scales: Vec<f64> = pref.iter().map(|f| f.norm() * l1).collect();
        if let Some(prev) = &previous {
            let errors: Vec<f64> = values.iter().zip(prev).map(|(a, b)| (a - b).norm()).collect();
            let worst = errors
                .iter()
                .zip(&scales)
                .enumerate()
                .map(|(k, (e, s))| (k, if *s > 0.0 { e / s } else { 0.0 }))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if worst.1 <= tol {
                return Ok(indices
                    .iter()
                    .zip(values.iter().zip(errors.iter().zip(&scales)))
                    .map(|(ix, (v, (e, s)))| FourierCoeff {
                        m: ix.m,
                        n: ix.n,
                        value: Complex::with_val(64, (v.re, v.im)),
                        quad_error: *e,
                        scale: *s,
                        grid: (intervals + 1, intervals + 1),
                    })
                    .collect());
            }
            if intervals >= MAX_INTERVALS {
                let k = worst.0;
                return Err(Error::Accuracy {
                    message: format!(
                        "Fourier coefficient ({}, {}) not converged at {} intervals: last levels {} and {}",
                        indices[k].m,
                        indices[k].n,
                        intervals,
                        prev[k],
                        values[k]
                    ),
                    achieved: worst.1,
                });
            }
        }
        previous = Some(values);
        intervals *= 2;
    }
}

fn finite_m(root: &RootSpec) -> Result<()> {
    if root.is_infinite() {
        return Err(Error::Domain("ĥ_{N,1/M} needs a finite M; use h_tilde at M = ∞".into()));
    }
    Ok(())
}

/// ĥ_{N,1/M}(m, n) for several indices sharing one set of trapezoid levels.
///
/// Levels double until successive values differ by at most `tol` times the
/// coefficient's L1 scale.
pub fn h_hat_batch(indices: &[LatticeIndex], p: i64, root: &RootSpec, bump: BumpSpec, tol: f64) -> Result<Vec<FourierCoeff>> {
    finite_m(root)?;
    batch(Kind::Hat, indices, p, root, bump, tol)
}

pub fn h_hat(m: i64, n: i64, p: i64, root: &RootSpec, bump: BumpSpec, tol: f64) -> Result<FourierCoeff> {
    Ok(h_hat_batch(&[LatticeIndex::new(m, n)], p, root, bump, tol)?.remove(0))
}

fn s_lattice(indices: &[LatticeIndex]) -> Result<()> {
    if let Some(ix) = indices.iter().find(|ix| ix.n < 0) {
        return Err(Error::Domain(format!("h̃ is defined on n ≥ 0, got n = {}", ix.n)));
    }
    Ok(())
}

/// h̃(m, n) on S = {n ≥ 0}: (1 − e^{2πi(n+1)/M}) ĥ at finite M, h̃_{N,0} at M = ∞.
pub fn h_tilde_batch(indices: &[LatticeIndex], p: i64, root: &RootSpec, bump: BumpSpec, tol: f64) -> Result<Vec<FourierCoeff>> {
    s_lattice(indices)?;
    batch(Kind::Tilde, indices, p, root, bump, tol)
}

pub fn h_tilde(m: i64, n: i64, p: i64, root: &RootSpec, bump: BumpSpec, tol: f64) -> Result<FourierCoeff> {
    Ok(h_tilde_batch(&[LatticeIndex::new(m, n)], p, root, bump, tol)?.remove(0))
}

/// Lattice sum Σ_{|m| ≤ K, 0 ≤ n ≤ K} h̃(m, n) and its relative deviation from J_N.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub sum: Complex,
    pub jones: Complex,
    pub deviation: f64,
    pub terms: Vec<FourierCoeff>,
}

/// Reconstruct J_N from the truncated S-lattice sum.
///
/// The reflection ĥ(m, −n−2) = −e^{2πi(n+1)/M} ĥ(m, n) folds ℤ² onto S, and
/// ĥ(m, −1) = 0, so at finite M this is the ℤ² sum over |m| ≤ K, −K−2 ≤ n ≤ K.
pub fn poisson_reconstruct(
    p: i64,
    root: &RootSpec,
    k: u32,
    bump: BumpSpec,
    tol: f64,
    ctx: &PrecisionContext,
) -> Result<Reconstruction> {
    let k = k as i64;
    let indices: Vec<LatticeIndex> =
        (-k..=k).flat_map(|m| (0..=k).map(move |n| LatticeIndex::new(m, n))).collect();
    let terms = h_tilde_batch(&indices, p, root, bump, tol)?;
    let total: Complex64 = terms.iter().map(|c| c.value_c64()).sum();
    let j = jones(TwistParam::new(p), root, ctx)?;
    let jc = numerics::to_c64(&j);
    let deviation = (total - jc).norm() / jc.norm();
    Ok(Reconstruction { sum: Complex::with_val(64, (total.re, total.im)), jones: j, deviation, terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_one_inside_and_zero_outside() {
        let b = BumpSpec::default();
        assert_eq!(bump(0.7, 0.5, b), 1.0);
        assert_eq!(bump(0.49, 0.5, b), 0.0);
        assert_eq!(bump(0.95, 0.5, b), 0.0);
        let mid = bump(0.85, 0.205, b);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn phase_reduces_exactly() {
        assert!((phase(1, 2) - Complex64::new(0.0, 1.0)).norm() < 1e-16);
        assert!((phase(-7, 2) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((phase(4001, 1) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn finite_m_required_for_h_hat() {
        let r = RootSpec::infinite(10).unwrap();
        assert!(matches!(h_hat(0, 0, 6, &r, BumpSpec::default(), 1e-8), Err(Error::Domain(_))));
        let f = RootSpec::finite(10, 2).unwrap();
        assert!(matches!(h_tilde(0, -1, 6, &f, BumpSpec::default(), 1e-8), Err(Error::Domain(_))));
    }
}
