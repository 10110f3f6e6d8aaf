//! Least-squares fits of J_N/leading against 1 + Σ κᵢ xⁱ with x = 2πi/denom.
//!
//! Row N is weighted by |x_N|^{−(d+1)}, so that the unmodelled O(x^{d+1})
//! remainder has comparable size in every row. Unweighted fits let the
//! smallest color, where that remainder is largest, set the coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qtwist::numerics::{from_c64, to_c64};
use qtwist::qjones::jones;
use qtwist::saddle::{find_critical, predict, CriticalData};
use qtwist::{PrecisionContext, RootSpec, TwistParam};
use rayon::prelude::*;
use rug::Complex;

use crate::error::{HarnessError, Result};

/// Largest tolerated condition number of the design matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// One color of a ladder: J_N, the leading term and their ratio.
#[derive(Clone, Debug)]
pub struct Sample {
    pub n: u32,
    pub denom: f64,
    pub jones: Complex,
    pub leading: Complex,
    pub ratio: Complex,
    pub x: Complex64,
}

/// Context for color `n`: the per-color default, or `bits` with the default's guard.
pub fn context_for(n: u32, bits: Option<u32>) -> Result<PrecisionContext> {
    let auto = PrecisionContext::for_color(n);
    Ok(match bits {
        Some(b) => PrecisionContext::new(b, auto.guard_bits)?,
        None => auto,
    })
}

pub fn sample(p: i64, n: u32, m: Option<u32>, data: &CriticalData, bits: Option<u32>) -> Result<Sample> {
    let root = RootSpec::new(n, m)?;
    let ctx = context_for(n, bits)?;
    let j = jones(TwistParam::new(p), &root, &ctx)?;
    let pred = predict(p, &root, data, 0, &PrecisionContext::default())?;
    let prec = j.prec().0.min(pred.leading.prec().0);
    let ratio = Complex::with_val(prec, &j / &pred.leading);
    Ok(Sample { n, denom: root.denom_f64(), jones: j, leading: pred.leading, ratio, x: to_c64(&pred.x) })
}

/// Samples for every N, evaluated in parallel and returned in input order.
pub fn samples(p: i64, m: Option<u32>, nlist: &[u32], data: &CriticalData, bits: Option<u32>) -> Result<Vec<Sample>> {
    nlist.par_iter().map(|&n| sample(p, n, m, data, bits)).collect()
}

#[derive(Clone, Debug)]
pub struct AsymptoticFit {
    pub p: i64,
    pub m: Option<u32>,
    pub nlist: Vec<u32>,
    pub d: usize,
    pub kappas: Vec<Complex64>,
    /// |r_N − 1 − Σ κᵢ x_Nⁱ| per N.
    pub residuals: Vec<f64>,
    /// Log-log slope of the residuals against denom.
    pub slope_d: f64,
    pub slope_stderr: f64,
    pub condition: f64,
    pub samples: Vec<Sample>,
}

impl AsymptoticFit {
    /// leading·(1 + Σ κᵢ xⁱ) for sample `i`.
    pub fn model(&self, i: usize) -> Complex {
        let s = &self.samples[i];
        let series = Complex64::new(1.0, 0.0) + series(&self.kappas, s.x);
        let prec = s.leading.prec().0;
        Complex::with_val(prec, &s.leading * from_c64(prec, series))
    }
}

fn series(kappas: &[Complex64], x: Complex64) -> Complex64 {
    kappas.iter().enumerate().map(|(i, k)| k * x.powu(i as u32 + 1)).sum()
}

/// Full fit: critical data, the jones ladder, then [`fit_samples`].
pub fn fit_expansion(p: i64, m: Option<u32>, nlist: &[u32], d: usize, bits: Option<u32>) -> Result<AsymptoticFit> {
    check_ladder(nlist, d)?;
    let data = find_critical(p, &PrecisionContext::default())?;
    let s = samples(p, m, nlist, &data, bits)?;
    fit_samples(p, m, s, d)
}

fn check_ladder(nlist: &[u32], d: usize) -> Result<()> {
    if nlist.len() < d + 3 {
        return Err(qtwist::Error::Domain(format!("a fit of order {d} needs at least {} colors, got {}", d + 3, nlist.len())).into());
    }
    if !nlist.windows(2).all(|w| w[0] < w[1]) {
        return Err(qtwist::Error::Domain(format!("colors must be strictly ascending: {nlist:?}")).into());
    }
    Ok(())
}

pub fn fit_samples(p: i64, m: Option<u32>, samples: Vec<Sample>, d: usize) -> Result<AsymptoticFit> {
    let nlist: Vec<u32> = samples.iter().map(|s| s.n).collect();
    check_ladder(&nlist, d)?;
    let rows = samples.len();
    let y = DVector::from_iterator(rows, samples.iter().map(|s| to_c64(&s.ratio) - 1.0));
    let (kappas, condition) = if d == 0 {
        (Vec::new(), 1.0)
    } else {
        let weight = |i: usize| samples[i].x.norm().powi(-(d as i32 + 1));
        let a = DMatrix::from_fn(rows, d, |i, k| samples[i].x.powu(k as u32 + 1));
        let svd = a.clone().svd(false, false);
        let sv = &svd.singular_values;
        let condition = sv.max() / sv.min();
        if !(condition <= MAX_CONDITION) {
            return Err(HarnessError::Fit(format!(
                "design matrix condition {condition:e} exceeds {MAX_CONDITION:e}; widen the color ladder {nlist:?}"
            )));
        }
        let aw = DMatrix::from_fn(rows, d, |i, k| a[(i, k)] * weight(i));
        let yw = DVector::from_fn(rows, |i, _| y[i] * weight(i));
        let k = aw.svd(true, true).solve(&yw, 0.0).map_err(|e| HarnessError::Fit(e.to_string()))?;
        (k.iter().copied().collect(), condition)
    };
    let residuals: Vec<f64> = samples.iter().zip(y.iter()).map(|(s, yi)| (yi - series(&kappas, s.x)).norm()).collect();
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(qtwist::Error::NonFinite("fit residual").into());
    }
    let logs: Vec<(f64, f64)> = samples.iter().zip(&residuals).map(|(s, r)| (s.denom.ln(), r.ln())).collect();
    let (slope_d, slope_stderr) = loglog_slope(&logs);
    Ok(AsymptoticFit { p, m, nlist, d, kappas, residuals, slope_d, slope_stderr, condition, samples })
}

/// Ordinary least-squares slope and its standard error.
pub fn loglog_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = points.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = if points.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, stderr)
}
