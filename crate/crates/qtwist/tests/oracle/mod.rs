//! Exact reference for the Habiro–Masbaum sum.
//!
//! Works in Z[a, a^{-1}] with a = q^{1/4}. Every summand is multiplied by the
//! common denominator {2N-1}!{N-1}!, the products are summed exactly, and
//! the result is divided back exactly; J_N is then a Laurent polynomial with
//! integer coefficients, evaluated numerically only at the very end.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rug::float::Constant;
use rug::{Complex, Float};

#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    lo: i64,
    c: Vec<BigInt>,
}

impl Laurent {
    pub fn monomial(coef: i64, exp: i64) -> Self {
        Self { lo: exp, c: vec![BigInt::from(coef)] }
    }

    pub fn one() -> Self {
        Self::monomial(1, 0)
    }

    /// {n} = a^{2n} - a^{-2n}
    pub fn bracket(n: i64) -> Self {
        let mut p = Self::monomial(1, 2 * n);
        p.add_assign(&Self::monomial(-1, -2 * n));
        p
    }

    fn hi(&self) -> i64 {
        self.lo + self.c.len() as i64 - 1
    }

    fn trim(&mut self) {
        while self.c.len() > 1 && self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        let lead = self.c.iter().take_while(|x| x.is_zero()).count();
        if lead == self.c.len() {
            self.c = vec![BigInt::zero()];
            self.lo = 0;
        } else if lead > 0 {
            self.c.drain(..lead);
            self.lo += lead as i64;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn add_assign(&mut self, other: &Self) {
        if other.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = other.clone();
            return;
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let mut c = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for (i, x) in self.c.iter().enumerate() {
            c[(self.lo - lo) as usize + i] += x;
        }
        for (i, x) in other.c.iter().enumerate() {
            c[(other.lo - lo) as usize + i] += x;
        }
        *self = Self { lo, c };
        self.trim();
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut c = vec![BigInt::zero(); self.c.len() + other.c.len() - 1];
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in other.c.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        let mut r = Self { lo: self.lo + other.lo, c };
        r.trim();
        r
    }

    pub fn neg(&self) -> Self {
        Self { lo: self.lo, c: self.c.iter().map(|x| -x).collect() }
    }

    /// Exact division; panics if the divisor does not divide.
    pub fn div_exact(&self, d: &Self) -> Self {
        let lead = d.c.last().unwrap().clone();
        assert!(lead.abs().is_one(), "divisor must have a unit leading coefficient");
        let mut rem = self.c.clone();
        let qlen = self.c.len() as i64 - d.c.len() as i64 + 1;
        assert!(qlen >= 1, "degree of the divisor exceeds the dividend");
        let mut q = vec![BigInt::zero(); qlen as usize];
        for i in (0..qlen as usize).rev() {
            let top = i + d.c.len() - 1;
            let coef = &rem[top] / &lead;
            if coef.is_zero() {
                continue;
            }
            for (j, y) in d.c.iter().enumerate() {
                rem[i + j] -= &coef * y;
            }
            q[i] = coef;
        }
        assert!(rem.iter().all(|x| x.is_zero()), "inexact division");
        let mut r = Self { lo: self.lo - d.lo, c: q };
        r.trim();
        r
    }

    /// Value at a = e^{iπ num/den}.
    pub fn eval_pi_phase(&self, num: i64, den: i64, prec: u32) -> Complex {
        let pi = Float::with_val(prec, Constant::Pi);
        let mut acc = Complex::with_val(prec, (0, 0));
        for (i, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let j = self.lo + i as i64;
            let r = (j as i128 * num as i128).rem_euclid(2 * den as i128);
            let angle = Float::with_val(prec, &pi * Float::with_val(prec, r)) / Float::with_val(prec, den);
            let (s, co) = angle.sin_cos(Float::new(prec));
            let cf = Float::with_val(prec, Float::parse(c.to_string()).unwrap());
            acc += Complex::with_val(prec, (co * &cf, s * &cf));
        }
        acc
    }
}

fn bracket_range(from: i64, to: i64) -> Laurent {
    let mut p = Laurent::one();
    for j in from..=to {
        p = p.mul(&Laurent::bracket(j));
    }
    p
}

/// J_N(K_p) as an exact Laurent polynomial in a = q^{1/4}.
pub fn jones_polynomial(p: i64, n: i64) -> Laurent {
    let denom = bracket_range(1, 2 * n - 1).mul(&bracket_range(1, n - 1));
    let mut total = Laurent { lo: 0, c: vec![BigInt::zero()] };
    let mut pair = Laurent::one();
    for k in 0..n {
        if k > 0 {
            pair = pair.mul(&Laurent::bracket(n + k)).mul(&Laurent::bracket(n - k));
        }
        for l in 0..=k {
            let e = k * (k + 3) + 4 * p * l * (l + 1);
            let mut t = Laurent::monomial(if l % 2 == 0 { 1 } else { -1 }, e);
            t = t.mul(&bracket_range(1, k)).mul(&Laurent::bracket(2 * l + 1)).mul(&pair);
            t = t.mul(&bracket_range(k + l + 2, 2 * n - 1)).mul(&bracket_range(k - l + 1, n - 1));
            total.add_assign(&t);
        }
    }
    total.div_exact(&denom)
}

/// Value at the root q = e^{2πi/denom}; `m = None` means denom = N.
pub fn jones_value(poly: &Laurent, n: i64, m: Option<i64>, prec: u32) -> Complex {
    // a = e^{iπ/(2 denom)} = e^{iπ m/(2(NM+1))}
    let (num, den) = match m {
        Some(m) => (m, 2 * (n * m + 1)),
        None => (1, 2 * n),
    };
    poly.eval_pi_phase(num, den, prec)
}
