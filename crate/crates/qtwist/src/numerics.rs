//! Arbitrary-precision scalars, principal branches and the precision policy.
//!
//! Every kernel takes an explicit working precision in bits. The public
//! wrappers take a [`PrecisionContext`], evaluate at `bits + guard_bits` and
//! round once to `bits`.

use std::cmp::Ordering;

use num_complex::Complex64;
use rug::float::Constant;
use rug::{Assign, Complex, Float};

use crate::error::{Error, Result};

pub type HpReal = Float;
pub type HpComplex = Complex;

/// Mantissa precision shared by one pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    pub bits: u32,
    pub guard_bits: u32,
}

impl PrecisionContext {
    pub const MIN_BITS: u32 = 64;
    pub const MIN_GUARD: u32 = 32;
    pub const DEFAULT_BITS: u32 = 256;

    pub fn new(bits: u32, guard_bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::Domain(format!("bits = {bits} is below {}", Self::MIN_BITS)));
        }
        if guard_bits < Self::MIN_GUARD {
            return Err(Error::Domain(format!(
                "guard_bits = {guard_bits} is below {}",
                Self::MIN_GUARD
            )));
        }
        Ok(Self { bits, guard_bits })
    }

    /// Default policy for color `n`: 256 bits up to n = 100, then 256 + ceil(1.5 n),
    /// with max(32, n/2) guard bits.
    ///
    /// Habiro terms grow like e^{cN} while the alternating sum cancels them,
    /// so the mantissa has to grow linearly with N. The cancellation also
    /// eats into the guard bits (about 65 of them at N = 300), and the
    /// doubling check only passes while that loss stays below guard − 16.
    pub fn for_color(n: u32) -> Self {
        let bits = if n <= 100 { Self::DEFAULT_BITS } else { Self::DEFAULT_BITS + (3 * n).div_ceil(2) };
        Self { bits, guard_bits: Self::MIN_GUARD.max(n / 2) }
    }

    pub fn working(&self) -> u32 {
        self.bits + self.guard_bits
    }

    pub fn doubled(&self) -> Self {
        Self { bits: 2 * self.bits, guard_bits: self.guard_bits }
    }

    /// log2 of the relative agreement demanded by the doubling protocol.
    pub fn agreement_log2(&self) -> f64 {
        -(self.bits as f64) + 16.0
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self { bits: Self::DEFAULT_BITS, guard_bits: Self::MIN_GUARD }
    }
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn real(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

pub fn cplx(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

/// Exact rational as a float: `num / den`.
pub fn ratio(prec: u32, num: i64, den: i64) -> Float {
    Float::with_val(prec, num) / den
}

pub fn ensure_finite(z: Complex, what: &'static str) -> Result<Complex> {
    if z.real().is_finite() && z.imag().is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_real(x: Float, what: &'static str) -> Result<Float> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn positive_zero_imag(z: &Complex, prec: u32) -> Complex {
    let mut w = Complex::with_val(prec, z);
    if w.imag().is_zero() {
        w.mut_imag().assign(0);
    }
    w
}

/// Principal logarithm with imaginary part in (-π, π].
pub fn ln_kernel(z: &Complex, prec: u32) -> Result<Complex> {
    if z.real().is_zero() && z.imag().is_zero() {
        return Err(Error::Domain("logarithm of zero".into()));
    }
    ensure_finite(positive_zero_imag(z, prec).ln(), "principal_log")
}

pub fn principal_log(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let w = ln_kernel(z, ctx.working())?;
    Ok(Complex::with_val(ctx.bits, &w))
}

/// e^{2πi t}; the phase uses sin(πx)/cos(πx) so rational t stays exact.
pub fn exp2pii_kernel(t: &Complex, prec: u32) -> Complex {
    let two_re = Float::with_val(prec, t.real() * 2u32);
    let c = two_re.clone().cos_pi();
    let s = two_re.sin_pi();
    let mag = (Float::with_val(prec, t.imag() * pi(prec)) * -2i32).exp();
    Complex::with_val(prec, (c * &mag, s * &mag))
}

pub fn unit_exponential(t: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let w = ensure_finite(exp2pii_kernel(t, ctx.working()), "unit_exponential")?;
    Ok(Complex::with_val(ctx.bits, &w))
}

/// Principal square root: Re ≥ 0, and Im > 0 when Re = 0.
pub fn sqrt_kernel(z: &Complex, prec: u32) -> Result<Complex> {
    if z.real().is_zero() && z.imag().is_zero() {
        return Err(Error::Domain("square root of zero".into()));
    }
    ensure_finite(positive_zero_imag(z, prec).sqrt(), "principal_sqrt")
}

pub fn principal_sqrt(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let w = sqrt_kernel(z, ctx.working())?;
    Ok(Complex::with_val(ctx.bits, &w))
}

/// e^{iπ num/den} with the rational phase reduced exactly modulo 2.
pub fn pi_phase(num: i128, den: i128, prec: u32) -> Complex {
    assert!(den > 0, "pi_phase needs a positive denominator");
    let r = num.rem_euclid(2 * den);
    if r == 0 {
        return Complex::with_val(prec, (1, 0));
    }
    if r == den {
        return Complex::with_val(prec, (-1, 0));
    }
    let x = Float::with_val(prec, r) / Float::with_val(prec, den);
    let c = x.clone().cos_pi();
    let s = x.sin_pi();
    Complex::with_val(prec, (c, s))
}

/// sin(π num/den) with exact reduction.
pub fn sin_pi_ratio(num: i128, den: i128, prec: u32) -> Float {
    let r = num.rem_euclid(2 * den);
    if r % den == 0 {
        return Float::with_val(prec, 0);
    }
    (Float::with_val(prec, r) / Float::with_val(prec, den)).sin_pi()
}

/// cos(π num/den) with exact reduction.
pub fn cos_pi_ratio(num: i128, den: i128, prec: u32) -> Float {
    let r = num.rem_euclid(2 * den);
    (Float::with_val(prec, r) / Float::with_val(prec, den)).cos_pi()
}

/// Neumaier compensated accumulator for complex terms.
#[derive(Clone, Debug)]
pub struct CompensatedSum {
    sum: [Float; 2],
    comp: [Float; 2],
}

impl CompensatedSum {
    pub fn new(prec: u32) -> Self {
        let z = Float::new(prec);
        Self { sum: [z.clone(), z.clone()], comp: [z.clone(), z] }
    }

    fn add_part(sum: &mut Float, comp: &mut Float, x: &Float) {
        let t = Float::with_val(sum.prec(), &*sum + x);
        let lost = if sum.cmp_abs(x) != Some(Ordering::Less) {
            Float::with_val(sum.prec(), &*sum - &t) + x
        } else {
            Float::with_val(sum.prec(), x - &t) + &*sum
        };
        *comp += lost;
        *sum = t;
    }

    pub fn add(&mut self, z: &Complex) {
        let (s, c) = (&mut self.sum, &mut self.comp);
        let [s0, s1] = s;
        let [c0, c1] = c;
        Self::add_part(s0, c0, z.real());
        Self::add_part(s1, c1, z.imag());
    }

    pub fn total(&self) -> Complex {
        let prec = self.sum[0].prec();
        Complex::with_val(
            prec,
            (Float::with_val(prec, &self.sum[0] + &self.comp[0]), Float::with_val(prec, &self.sum[1] + &self.comp[1])),
        )
    }
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// log2 of |a - b| / max(|a|, |b|); -inf when the values coincide.
pub fn rel_diff_log2(a: &Complex, b: &Complex) -> f64 {
    let prec = a.prec().0.max(b.prec().0);
    let diff = abs(&Complex::with_val(prec, a - b));
    if diff.is_zero() {
        return f64::NEG_INFINITY;
    }
    let scale = abs(a).max(&abs(b));
    if scale.is_zero() {
        return f64::INFINITY;
    }
    Float::with_val(64, diff / scale).log2().to_f64()
}

pub fn rel_diff(a: &Complex, b: &Complex) -> f64 {
    rel_diff_log2(a, b).exp2()
}

pub fn to_c64(z: &Complex) -> Complex64 {
    Complex64::new(z.real().to_f64(), z.imag().to_f64())
}

pub fn from_c64(prec: u32, z: Complex64) -> Complex {
    Complex::with_val(prec, (z.re, z.im))
}
