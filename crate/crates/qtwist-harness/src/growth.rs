//! Growth rate (2π/denom)·log J_N and its N → ∞ limit.
//!
//! The real part carries a known (3/2)·log(denom) term from the amplitude;
//! it is subtracted, and the remaining c/denom correction is removed by
//! two-point Richardson extrapolation between consecutive colors. The
//! imaginary part is only defined modulo 2π per color, so it is read off
//! the steps J_{N+1}/J_N, whose arguments tend to Im ζ mod 2π. At M = ∞ the
//! steps oscillate with a period of about three colors, so the steps are
//! averaged over a window above the largest color.

use std::f64::consts::PI;

use num_complex::Complex64;
use qtwist::numerics::{self, to_c64};
use qtwist::qjones::jones;
use qtwist::saddle::find_critical;
use qtwist::{PrecisionContext, RootSpec, TwistParam};
use rayon::prelude::*;
use rug::{Complex, Float};

use crate::error::Result;
use crate::fit::context_for;

/// Power of denom in the leading amplitude, for finite and infinite M alike.
pub const AMPLITUDE_POWER: f64 = 1.5;

/// Number of consecutive steps J_{N+1}/J_N averaged for the imaginary part.
pub const STEP_WINDOW: u32 = 8;

#[derive(Clone, Debug)]
pub struct GrowthRate {
    pub p: i64,
    pub m: Option<u32>,
    pub nlist: Vec<u32>,
    /// (2π/denom)·log J_N with the principal logarithm.
    pub sequence: Vec<Complex64>,
    /// |Re sequence − 2πζ_ℝ| per N.
    pub deviations: Vec<f64>,
    /// Richardson values after each consecutive pair.
    pub richardson: Vec<f64>,
    /// Extrapolated real part plus 2π times the mean step argument.
    pub limit: Complex64,
    /// 2πζ(p) from the critical point.
    pub target: Complex64,
    pub re_error: f64,
    /// Distance of the imaginary parts on the circle of circumference π².
    pub im_error: f64,
}

fn log_jones(p: i64, n: u32, m: Option<u32>, bits: Option<u32>) -> Result<(f64, Complex)> {
    let root = RootSpec::new(n, m)?;
    let ctx = context_for(n, bits)?;
    let j = jones(TwistParam::new(p), &root, &ctx)?;
    let l = numerics::ln_kernel(&j, j.prec().0)?;
    Ok((root.denom_f64(), l))
}

/// Signed distance of `a` from `b` reduced into [−period/2, period/2).
pub fn circular_gap(a: f64, b: f64, period: f64) -> f64 {
    (a - b + period / 2.0).rem_euclid(period) - period / 2.0
}

pub fn growth_rate(p: i64, m: Option<u32>, nlist: &[u32], bits: Option<u32>) -> Result<GrowthRate> {
    if nlist.len() < 2 || !nlist.windows(2).all(|w| w[0] < w[1]) {
        return Err(qtwist::Error::Domain(format!("need at least two ascending colors, got {nlist:?}")).into());
    }
    let data = find_critical(p, &PrecisionContext::default())?;
    let two_pi_zeta = to_c64(&data.zeta) * (2.0 * PI);
    let last = *nlist.last().unwrap();
    let mut colors = nlist.to_vec();
    colors.extend((1..=STEP_WINDOW).map(|k| last + k));
    let logs: Vec<(f64, Complex)> = colors.par_iter().map(|&n| log_jones(p, n, m, bits)).collect::<Result<_>>()?;

    let sequence: Vec<Complex64> = logs[..nlist.len()].iter().map(|(d, l)| to_c64(l) * (2.0 * PI / d)).collect();
    let deviations = sequence.iter().map(|a| (a.re - two_pi_zeta.re).abs()).collect();
    // a_N = (2π/d)(log|J| − (3/2) log d) = A + c/d + O(1/d²)
    let reduced: Vec<(f64, f64)> = logs[..nlist.len()]
        .iter()
        .map(|(d, l)| (*d, 2.0 * PI / d * (l.real().to_f64() - AMPLITUDE_POWER * d.ln())))
        .collect();
    let richardson: Vec<f64> =
        reduced.windows(2).map(|w| (w[1].0 * w[1].1 - w[0].0 * w[0].1) / (w[1].0 - w[0].0)).collect();
    let re_limit = *richardson.last().unwrap();

    let tail = &logs[nlist.len() - 1..];
    let steps: Vec<f64> = tail
        .windows(2)
        .map(|w| {
            let prec = w[0].1.prec().0.min(w[1].1.prec().0);
            circular_gap(Float::with_val(prec, w[1].1.imag() - w[0].1.imag()).to_f64(), 0.0, 2.0 * PI)
        })
        .collect();
    let im_limit = 2.0 * PI * steps.iter().sum::<f64>() / steps.len() as f64;

    let limit = Complex64::new(re_limit, im_limit);
    Ok(GrowthRate {
        p,
        m,
        nlist: nlist.to_vec(),
        sequence,
        deviations,
        richardson,
        limit,
        target: two_pi_zeta,
        re_error: (re_limit - two_pi_zeta.re).abs(),
        im_error: circular_gap(im_limit, two_pi_zeta.im, PI * PI).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::circular_gap;

    #[test]
    fn circular_gap_wraps() {
        let p2 = std::f64::consts::PI.powi(2);
        assert!((circular_gap(0.1 + 3.0 * p2, -0.1, p2) - 0.2).abs() < 1e-12);
        assert!((circular_gap(-0.1, 0.1 + 5.0 * p2, p2) + 0.2).abs() < 1e-12);
    }
}
