//! Colored Jones polynomials of twist knots at the roots of unity
//! e^{2πi/(N+1/M)} through the Habiro–Masbaum double sum.
//!
//! With d = N + 1/M = D/m for coprime integers (D, m) = (NM+1, M), every
//! phase is e^{iπ r} for a rational r with denominator dividing 2D, so all
//! root-of-unity powers are reduced exactly before any transcendental call.
//!
//! At M = ∞ the summand {k}!{2l+1}/({k+l+1}!{k-l}!) contains {N} = 0 in the
//! denominator whenever k + l + 1 ≥ N; the polynomial is still finite there.
//! Those terms are evaluated as the d → N limit of the whole sum (l'Hôpital
//! in the continuous parameter d), which needs only first log-derivatives.

use std::fmt;

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{
    self, cos_pi_ratio, pi_phase, rel_diff_log2, sin_pi_ratio, CompensatedSum, PrecisionContext,
};

/// Evaluation point ξ = e^{2πi/denom}, denom = N + 1/M (or N when M = ∞).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootSpec {
    n: u32,
    m: Option<u32>,
}

impl RootSpec {
    pub fn new(n: u32, m: Option<u32>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("color N must be at least 1".into()));
        }
        if let Some(m) = m {
            if m < 2 {
                return Err(Error::Domain(format!("M = {m} is not allowed; use M >= 2 or infinity")));
            }
        }
        Ok(Self { n, m })
    }

    pub fn finite(n: u32, m: u32) -> Result<Self> {
        Self::new(n, Some(m))
    }

    /// ξ = e^{2πi/N}.
    pub fn infinite(n: u32) -> Result<Self> {
        Self::new(n, None)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> Option<u32> {
        self.m
    }

    pub fn is_infinite(&self) -> bool {
        self.m.is_none()
    }

    /// denom as the reduced fraction (numerator, denominator).
    pub fn denom_ratio(&self) -> (i128, i128) {
        match self.m {
            Some(m) => (self.n as i128 * m as i128 + 1, m as i128),
            None => (self.n as i128, 1),
        }
    }

    pub fn denom(&self, prec: u32) -> Float {
        let (a, b) = self.denom_ratio();
        Float::with_val(prec, a) / Float::with_val(prec, b)
    }

    pub fn denom_f64(&self) -> f64 {
        let (a, b) = self.denom_ratio();
        a as f64 / b as f64
    }

    /// 1/M as a float, zero at M = ∞.
    pub fn inv_m(&self, prec: u32) -> Float {
        match self.m {
            Some(m) => Float::with_val(prec, 1) / m,
            None => Float::new(prec),
        }
    }

    /// e^{iπ j/denom}.
    pub fn pi_power(&self, j: i128, prec: u32) -> Complex {
        let (a, b) = self.denom_ratio();
        pi_phase(j * b, a, prec)
    }

    pub fn xi(&self, prec: u32) -> Complex {
        self.pi_power(2, prec)
    }

    /// q^{1/2} = e^{πi/denom}.
    pub fn half_root(&self, prec: u32) -> Complex {
        self.pi_power(1, prec)
    }

    /// w^e for the quarter root w = q^{1/4} = e^{πi/(2 denom)}.
    pub fn quarter_power(&self, e: i128, prec: u32) -> Complex {
        let (a, b) = self.denom_ratio();
        pi_phase(e * b, 2 * a, prec)
    }

    /// sin(π j/denom), exactly zero when j/denom is an integer.
    pub fn sin_pi_over(&self, j: i128, prec: u32) -> Float {
        let (a, b) = self.denom_ratio();
        sin_pi_ratio(j * b, a, prec)
    }
}

impl fmt::Display for RootSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            Some(m) => write!(f, "N={},M={}", self.n, m),
            None => write!(f, "N={},M=inf", self.n),
        }
    }
}

/// Twist knot K_p; p counts pairs of half-twists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TwistParam {
    pub p: i64,
}

impl TwistParam {
    pub fn new(p: i64) -> Self {
        Self { p }
    }

    /// The asymptotic theorems are only claimed for p ≥ 6.
    pub fn experimental(&self) -> bool {
        self.p < 6
    }
}

/// Summation index of the double sum, 0 ≤ l ≤ k ≤ N-1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub k: u32,
    pub l: u32,
}

impl GridPoint {
    pub fn new(k: u32, l: u32, root: &RootSpec) -> Result<Self> {
        if l > k || k >= root.n() {
            return Err(Error::Domain(format!("grid point (k={k}, l={l}) outside 0 <= l <= k <= {}", root.n() - 1)));
        }
        Ok(Self { k, l })
    }

    /// (t, s) = ((k+½)/denom, (l+½)/denom).
    pub fn coordinates(&self, root: &RootSpec, prec: u32) -> (Float, Float) {
        let d = root.denom(prec);
        let t = (Float::with_val(prec, self.k) + 0.5f64) / &d;
        let s = (Float::with_val(prec, self.l) + 0.5f64) / &d;
        (t, s)
    }
}

pub(crate) fn bracket_kernel(n: i64, root: &RootSpec, prec: u32) -> Complex {
    let s = root.sin_pi_over(n as i128, prec) * 2u32;
    Complex::with_val(prec, (0, s))
}

/// {n} = q^{n/2} - q^{-n/2} = 2i sin(πn/denom).
pub fn bracket(n: i64, root: &RootSpec, ctx: &PrecisionContext) -> Complex {
    Complex::with_val(ctx.bits, bracket_kernel(n, root, ctx.working()))
}

/// Table of (ξ)_n = ∏_{i=1}^n (1 - ξ^i).
#[derive(Clone, Debug)]
pub struct PochhammerTable {
    pub entries: Vec<Complex>,
    /// First index whose entry vanishes exactly (ξ^N = 1 at M = ∞).
    pub zero_at: Option<usize>,
}

pub fn pochhammer_table(root: &RootSpec, nmax: usize, ctx: &PrecisionContext) -> Result<PochhammerTable> {
    if nmax > 2 * root.n() as usize {
        return Err(Error::Domain(format!("nmax = {nmax} exceeds 2N = {}", 2 * root.n())));
    }
    let prec = ctx.working();
    let mut acc = Complex::with_val(prec, (1, 0));
    let mut entries = vec![Complex::with_val(ctx.bits, &acc)];
    let mut zero_at = None;
    for i in 1..=nmax {
        let factor = Complex::with_val(prec, 1) - root.pi_power(2 * i as i128, prec);
        acc *= factor;
        if zero_at.is_none() && acc.real().is_zero() && acc.imag().is_zero() {
            zero_at = Some(i);
        }
        entries.push(Complex::with_val(ctx.bits, &acc));
    }
    Ok(PochhammerTable { entries, zero_at })
}

/// The (k, l) summand of the Habiro–Masbaum sum at a finite root,
/// (-1)^l q^{k(k+3)/4 + p l(l+1)} {k}! {2l+1} / ({k+l+1}! {k-l}!) ∏_{i=1}^k {N+i}{N-i}.
pub fn habiro_term(p: TwistParam, root: &RootSpec, pt: GridPoint, prec: u32) -> Result<Complex> {
    if root.is_infinite() && pt.k + pt.l + 1 >= root.n() {
        return Err(Error::Branch("the single summand has a {N} = 0 pole at M = infinity".into()));
    }
    let (k, l) = (pt.k as i64, pt.l as i64);
    let n = root.n() as i64;
    let br = |j: i64| bracket_kernel(j, root, prec);
    let e = (k * (k + 3) + 4 * p.p * l * (l + 1)) as i128;
    let mut v = root.quarter_power(e, prec);
    if l % 2 == 1 {
        v = -v;
    }
    for i in 1..=k {
        v *= br(i);
        v *= br(n + i) * br(n - i);
    }
    v *= br(2 * l + 1);
    for i in 1..=(k + l + 1) {
        v /= br(i);
    }
    for i in 1..=(k - l) {
        v /= br(i);
    }
    numerics::ensure_finite(v, "habiro_term")
}

/// The same summand written with {N} in the denominator,
/// (-1)^l q^{…} {2l+1}/{N} · {k}!{N+k}!/({k+l+1}!{k-l}!{N-k-1}!).
pub fn closed_form_term(p: TwistParam, root: &RootSpec, pt: GridPoint, prec: u32) -> Result<Complex> {
    if root.is_infinite() {
        return Err(Error::Domain("closed form divides by {N} = 0 at M = infinity".into()));
    }
    let (k, l) = (pt.k as i64, pt.l as i64);
    let n = root.n() as i64;
    let br = |j: i64| bracket_kernel(j, root, prec);
    let fact = |j: i64| {
        let mut f = Complex::with_val(prec, (1, 0));
        for i in 1..=j {
            f *= br(i);
        }
        f
    };
    let e = (k * (k + 3) + 4 * p.p * l * (l + 1)) as i128;
    let mut v = root.quarter_power(e, prec);
    if l % 2 == 1 {
        v = -v;
    }
    v *= br(2 * l + 1) / br(n);
    v *= fact(k) * fact(n + k);
    v /= fact(k + l + 1) * fact(k - l) * fact(n - k - 1);
    numerics::ensure_finite(v, "closed_form_term")
}

/// Real parts of the bracket table: brackets {j} = i·b_j with b_j = 2 sin(πj/d).
struct BracketTable {
    b: Vec<Float>,
}

impl BracketTable {
    fn new(root: &RootSpec, jmax: usize, prec: u32) -> Self {
        let b = (0..=jmax).map(|j| root.sin_pi_over(j as i128, prec) * 2u32).collect();
        Self { b }
    }
}

/// Single evaluation of J_N(K_p; ξ) at working precision `prec`.
///
/// Summation order is fixed (k ascending, then l ascending) so results are
/// reproducible bit for bit at equal precision.
pub fn jones_at(p: TwistParam, root: &RootSpec, prec: u32) -> Result<Complex> {
    let n = root.n() as usize;
    let (big_d, m) = root.denom_ratio();
    let br = BracketTable::new(root, 2 * n + 1, prec);

    // Real factorials F[j] = ∏_{i≤j, i≠N} b_i (at finite M no b_i vanishes).
    let mut fact = Vec::with_capacity(2 * n + 1);
    let mut acc = Float::with_val(prec, 1);
    fact.push(acc.clone());
    for j in 1..=2 * n {
        if !(root.is_infinite() && j == n) {
            acc *= &br.b[j];
        }
        fact.push(acc.clone());
    }
    let inv_fact: Vec<Float> = fact.iter().map(|f| Float::with_val(prec, 1) / f).collect();

    // Phase of the summand: (-1)^l i^k w^e = e^{iπ(kD + 2lD + eM)/(2D)} split into k and l parts.
    let p_i = p.p as i128;
    let alpha = |k: i128| pi_phase(k * big_d + k * (k + 3) * m, 2 * big_d, prec);
    let beta = |l: i128| pi_phase(2 * l * big_d + 4 * p_i * l * (l + 1) * m, 2 * big_d, prec);

    let lhopital = root.is_infinite();
    let pi = numerics::pi(prec);
    let log_deriv = if lhopital { Some(LogDerivatives::new(root, &br, prec)) } else { None };

    let mut sum = CompensatedSum::new(prec);
    let mut residue = CompensatedSum::new(prec);
    let mut residue_scale = Float::new(prec);
    let mut pk = Float::with_val(prec, 1);
    let betas: Vec<Complex> = (0..n).map(|l| beta(l as i128) * &br.b[2 * l + 1]).collect();
    for k in 0..n {
        if k > 0 {
            pk *= &br.b[n + k];
            pk *= &br.b[n - k];
        }
        let ck = alpha(k as i128) * Float::with_val(prec, &fact[k] * &pk);
        for l in 0..=k {
            let top = k + l + 1;
            let a = Float::with_val(prec, &inv_fact[top] * &inv_fact[k - l]);
            if !lhopital || top < n {
                sum.add(&(Complex::with_val(prec, &ck * &betas[l]) * &a));
                continue;
            }
            if 2 * l + 1 == n {
                // {2l+1}/{N} = 1 identically in d: drop both factors.
                sum.add(&(Complex::with_val(prec, &ck * beta(l as i128)) * &a));
                continue;
            }
            // Q = term·2sin(πN/d); its d-derivative at d = N over σ'(N) = 2π/N is the limit.
            let q = Complex::with_val(prec, &ck * &betas[l]) * &a;
            let ld = log_deriv.as_ref().expect("log-derivatives at M = infinity");
            let e = (k * (k + 3)) as i128 + 4 * p_i * (l * (l + 1)) as i128;
            let mut real_part = Float::with_val(prec, &ld.prefix[k] + &ld.single[2 * l + 1]);
            real_part += &ld.pair_prefix[k];
            real_part -= &ld.prefix[top];
            real_part -= &ld.prefix[k - l];
            // e^{iπe/(2d)} contributes -iπe/(2N²).
            let imag_part = -Float::with_val(prec, &pi * Float::with_val(prec, e)) / (2 * n * n) as u64;
            residue_scale.max_mut(&numerics::abs(&q));
            residue.add(&q);
            let dlog = Complex::with_val(prec, (real_part, imag_part));
            sum.add(&(q * dlog * Float::with_val(prec, n as u64) / &pi / 2u32));
        }
    }
    if lhopital && !residue_scale.is_zero() {
        let r = numerics::abs(&residue.total());
        let tol = Float::with_val(prec, &residue_scale) >> (prec / 2) as i32;
        if r > tol {
            return Err(Error::Inconsistency(format!(
                "pole residues at M = infinity do not cancel ({} relative)",
                Float::with_val(64, r / residue_scale).to_f64()
            )));
        }
    }
    numerics::ensure_finite(sum.total(), "jones")
}

/// Logarithmic d-derivatives of sin(πj/d) at d = N, L(j) = -(πj/N²) cot(πj/N).
struct LogDerivatives {
    single: Vec<Float>,
    /// Σ_{i ≤ j, i ≠ N} L(i)
    prefix: Vec<Float>,
    /// Σ_{i ≤ k} L(N+i) + L(N-i)
    pair_prefix: Vec<Float>,
}

impl LogDerivatives {
    fn new(root: &RootSpec, br: &BracketTable, prec: u32) -> Self {
        let n = root.n() as usize;
        let pi = numerics::pi(prec);
        let n2 = (n * n) as u64;
        let single: Vec<Float> = (0..=2 * n)
            .map(|j| {
                if j % n == 0 {
                    return Float::new(prec);
                }
                let c = cos_pi_ratio(j as i128, n as i128, prec) * 2u32;
                let cot = c / &br.b[j];
                -(Float::with_val(prec, &pi * j as u64) / n2) * cot
            })
            .collect();
        let mut prefix = Vec::with_capacity(2 * n + 1);
        let mut acc = Float::new(prec);
        prefix.push(acc.clone());
        for (j, lj) in single.iter().enumerate().skip(1) {
            if j != n {
                acc += lj;
            }
            prefix.push(acc.clone());
        }
        let mut pair_prefix = Vec::with_capacity(n);
        let mut acc = Float::new(prec);
        pair_prefix.push(acc.clone());
        for i in 1..n {
            acc += &single[n + i];
            acc += &single[n - i];
            pair_prefix.push(acc.clone());
        }
        Self { single, prefix, pair_prefix }
    }
}

/// J_N(K_p; ξ) validated by the doubling protocol and rounded to `ctx.bits`.
pub fn jones(p: TwistParam, root: &RootSpec, ctx: &PrecisionContext) -> Result<Complex> {
    let lo = jones_at(p, root, ctx.working())?;
    let hi = jones_at(p, root, ctx.doubled().working())?;
    let agreement = rel_diff_log2(&lo, &hi);
    if agreement > ctx.agreement_log2() {
        // Cancellation costs the same number of bits at both precisions, so
        // it has to fit inside the guard bits.
        let lost = (agreement + ctx.working() as f64).ceil().max(0.0) as u32;
        let guard = lost + 16;
        return Err(Error::Precision {
            message: format!(
                "jones at {root}, p={} agrees only to 2^{agreement:.1} under doubling; cancellation costs {lost} bits, which needs {guard} guard bits",
                p.p
            ),
            suggested_bits: ctx.bits + guard,
        });
    }
    Ok(Complex::with_val(ctx.bits, &lo))
}

/// g_{N,1/M}(k,l) through the φ-based potential,
/// (-1)^p e^{πi(1/M-1/4)} denom^{-1/2} sin(π(2l+1)/denom)/sin(π/(M denom)) e^{denom·V_{N,1/M}(t,s)}.
pub fn grid_term(p: TwistParam, root: &RootSpec, pt: GridPoint, ctx: &PrecisionContext) -> Result<Complex> {
    let m = root.m().ok_or_else(|| Error::Domain("grid_term needs a finite M".into()))?;
    GridPoint::new(pt.k, pt.l, root)?;
    if pt.k + pt.l < root.n() {
        return Err(Error::Branch(format!(
            "grid_term is implemented on k+l+1 > N only (got k={}, l={}, N={})",
            pt.k,
            pt.l,
            root.n()
        )));
    }
    let prec = ctx.working();
    let (t, s) = pt.coordinates(root, prec);
    let t = Complex::with_val(prec, t);
    let s = Complex::with_val(prec, s);
    let v = crate::potential::v_finite(p.p, &t, &s, root, ctx)?;
    let d = root.denom(prec);
    let (big_d, mm) = root.denom_ratio();
    // e^{πi(1/M - 1/4)} = e^{iπ(4-M)/(4M)}
    let mut g = pi_phase(4 - m as i128, 4 * m as i128, prec);
    if p.p.rem_euclid(2) == 1 {
        g = -g;
    }
    let ratio = sin_pi_ratio((2 * pt.l as i128 + 1) * mm, big_d, prec) / sin_pi_ratio(1, big_d, prec);
    g *= ratio / d.clone().sqrt();
    g *= Complex::with_val(prec, v * &d).exp();
    let g = numerics::ensure_finite(g, "grid_term")?;
    Ok(Complex::with_val(ctx.bits, &g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn root_spec_validation() {
        assert!(RootSpec::new(3, Some(1)).is_err());
        assert!(RootSpec::new(0, Some(2)).is_err());
        let r = RootSpec::finite(3, 2).unwrap();
        assert_eq!(r.denom_ratio(), (7, 2));
        assert_eq!(r.to_string(), "N=3,M=2");
        assert_eq!(RootSpec::infinite(5).unwrap().to_string(), "N=5,M=inf");
    }

    #[test]
    fn half_root_squares_to_xi() {
        for root in [RootSpec::finite(5, 3).unwrap(), RootSpec::infinite(7).unwrap()] {
            let h = root.half_root(300);
            let sq = Complex::with_val(300, &h * &h);
            assert!(rel_diff_log2(&sq, &root.xi(300)) < -280.0);
        }
        let root = RootSpec::infinite(6).unwrap();
        let x = root.pi_power(2 * 6 * 3, 200);
        assert_eq!(*x.real(), 1);
        assert!(x.imag().is_zero());
    }

    #[test]
    fn bracket_examples() {
        let c = ctx();
        let r = RootSpec::finite(5, 2).unwrap();
        assert!(bracket(0, &r, &c).imag().is_zero());
        let b = bracket(11, &r, &c);
        assert!(b.real().is_zero() && b.imag().is_zero());
        let r = RootSpec::finite(3, 2).unwrap();
        let b = bracket(1, &r, &c);
        assert!(b.real().is_zero());
        assert!((b.imag().to_f64() - 1.563662964936059).abs() < 1e-14);
        for n in -9..9 {
            let a = bracket(n, &r, &c);
            let mb = -bracket(-n, &r, &c);
            assert_eq!(a, mb);
        }
    }

    #[test]
    fn pochhammer_examples() {
        let c = ctx();
        let r = RootSpec::finite(3, 2).unwrap();
        assert_eq!(pochhammer_table(&r, 0, &c).unwrap().entries.len(), 1);
        let t = pochhammer_table(&r, 3, &c).unwrap();
        let mut direct = Complex::with_val(300, (1, 0));
        for i in 1..=3 {
            let xi = r.xi(300);
            direct *= Complex::with_val(300, 1) - xi.pow(i as u32);
        }
        assert!(rel_diff_log2(&t.entries[3], &direct) < -240.0);
        assert!(t.zero_at.is_none());
        let r = RootSpec::infinite(4).unwrap();
        let t = pochhammer_table(&r, 4, &c).unwrap();
        assert_eq!(t.zero_at, Some(4));
        assert!(pochhammer_table(&r, 9, &c).is_err());
    }

    #[test]
    fn jones_of_color_one_is_one() {
        for root in [RootSpec::finite(1, 2).unwrap(), RootSpec::infinite(1).unwrap()] {
            for p in [-2, 0, 3, 6] {
                let j = jones(TwistParam::new(p), &root, &ctx()).unwrap();
                assert_eq!(*j.real(), 1);
                assert!(j.imag().is_zero());
            }
        }
    }

    #[test]
    fn infinite_root_matches_large_m() {
        let p = TwistParam::new(6);
        for n in [7u32, 8] {
            let inf = jones(p, &RootSpec::infinite(n).unwrap(), &ctx()).unwrap();
            let big = jones_at(p, &RootSpec::finite(n, 1 << 30).unwrap(), 300).unwrap();
            let diff = rel_diff_log2(&inf, &big);
            assert!(diff < -20.0, "N={n}: {diff}");
        }
    }

    #[test]
    fn closed_form_matches_habiro_term() {
        let root = RootSpec::finite(8, 2).unwrap();
        let p = TwistParam::new(6);
        for (k, l) in [(7, 7), (6, 3), (2, 1)] {
            let pt = GridPoint::new(k, l, &root).unwrap();
            let a = habiro_term(p, &root, pt, 300).unwrap();
            let b = closed_form_term(p, &root, pt, 300).unwrap();
            assert!(rel_diff_log2(&a, &b) < -250.0);
        }
    }
}
