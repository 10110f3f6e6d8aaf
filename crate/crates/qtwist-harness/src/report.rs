//! Reproducible records of single computations, with an on-disk cache.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_complex::Complex64;
use qtwist::fourier::{h_hat, h_tilde, BumpSpec};
use qtwist::qjones::jones;
use qtwist::saddle::{find_critical, kappa1_via_saddle, predict};
use qtwist::{PrecisionContext, RootSpec, TwistParam};
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::fit::{context_for, fit_expansion};
use crate::growth::growth_rate;

/// Significant digits written for arbitrary-precision values.
pub const DIGITS: usize = 40;
/// Digits written for values that only exist in double precision.
pub const F64_DIGITS: usize = 17;

pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A computation the harness can run and record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    Jones { p: i64, n: u32, m: Option<u32> },
    Critical { p: i64 },
    Predict { p: i64, n: u32, m: Option<u32>, d: usize },
    Fit { p: i64, m: Option<u32>, nlist: Vec<u32>, d: usize },
    Growth { p: i64, m: Option<u32>, nlist: Vec<u32> },
    Fourier { p: i64, n: u32, m: Option<u32>, lattice_m: i64, lattice_n: i64, tol: f64 },
    Volume { p: i64 },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Jones { .. } => "jones",
            Self::Critical { .. } => "critical",
            Self::Predict { .. } => "predict",
            Self::Fit { .. } => "fit",
            Self::Growth { .. } => "growth",
            Self::Fourier { .. } => "fourier",
            Self::Volume { .. } => "volume",
        }
    }

    fn p(&self) -> i64 {
        match *self {
            Self::Jones { p, .. }
            | Self::Critical { p }
            | Self::Predict { p, .. }
            | Self::Fit { p, .. }
            | Self::Growth { p, .. }
            | Self::Fourier { p, .. }
            | Self::Volume { p } => p,
        }
    }

    fn colors(&self) -> Vec<u32> {
        match self {
            Self::Jones { n, .. } | Self::Predict { n, .. } | Self::Fourier { n, .. } => vec![*n],
            Self::Fit { nlist, .. } | Self::Growth { nlist, .. } => nlist.clone(),
            Self::Critical { .. } | Self::Volume { .. } => Vec::new(),
        }
    }

    fn root_m(&self) -> Option<Option<u32>> {
        match *self {
            Self::Jones { m, .. } | Self::Predict { m, .. } | Self::Fit { m, .. } | Self::Growth { m, .. } | Self::Fourier { m, .. } => {
                Some(m)
            }
            Self::Critical { .. } | Self::Volume { .. } => None,
        }
    }
}

/// `"inf"` for M = ∞.
pub fn format_m(m: Option<u32>) -> String {
    m.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

pub fn parse_m(text: &str) -> std::result::Result<Option<u32>, String> {
    match text.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(None),
        other => other.parse().map(Some).map_err(|_| format!("M must be a positive integer or `inf`, got {text:?}")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub p: i64,
    pub n: Vec<u32>,
    pub m: Option<String>,
    pub bits: String,
    pub command: Command,
}

/// A value as decimal strings with its declared number of significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decimal {
    pub re: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<String>,
    pub digits: usize,
}

impl Decimal {
    pub fn real(x: &Float) -> Self {
        Self { re: fmt_float(x), im: None, digits: DIGITS }
    }

    pub fn complex(z: &Complex) -> Self {
        Self { re: fmt_float(z.real()), im: Some(fmt_float(z.imag())), digits: DIGITS }
    }

    pub fn f64(x: f64) -> Self {
        Self { re: fmt_f64(x), im: None, digits: F64_DIGITS }
    }

    pub fn c64(z: Complex64) -> Self {
        Self { re: fmt_f64(z.re), im: Some(fmt_f64(z.im)), digits: F64_DIGITS }
    }

    pub fn re_f64(&self) -> f64 {
        self.re.parse().unwrap_or(f64::NAN)
    }

    pub fn im_f64(&self) -> f64 {
        self.im.as_deref().map_or(0.0, |s| s.parse().unwrap_or(f64::NAN))
    }
}

fn fmt_float(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    format!("{:.*e}", DIGITS, x)
}

fn fmt_f64(x: f64) -> String {
    format!("{:.*e}", F64_DIGITS - 1, x)
}

/// One line of plot data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub denom: String,
    pub re_jones: String,
    pub im_jones: String,
    pub re_prediction: String,
    pub im_prediction: String,
    pub re_ratio: String,
    pub im_ratio: String,
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub qtwist_version: String,
    pub harness_version: String,
    pub tolerances: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub key: String,
    pub inputs: Inputs,
    pub outputs: BTreeMap<String, Decimal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<CsvRow>,
    pub provenance: Provenance,
    pub timestamp: String,
    /// Set on records served from the cache; always false on disk.
    #[serde(default)]
    pub cache_hit: bool,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn bits_label(bits: Option<u32>) -> String {
    bits.map_or_else(|| "auto".to_string(), |b| b.to_string())
}

fn command_json(cmd: &Command) -> String {
    serde_json::to_string(cmd).expect("commands always serialize")
}

/// Hash of (p, N, M, bits, command, version): equal keys mean reusable results.
pub fn cache_key(cmd: &Command, bits: Option<u32>) -> String {
    let text = format!(
        "p={}|N={:?}|M={:?}|bits={}|command={}|version={}+{}",
        cmd.p(),
        cmd.colors(),
        cmd.root_m().map(format_m),
        bits_label(bits),
        command_json(cmd),
        qtwist::VERSION,
        HARNESS_VERSION
    );
    sha256_hex(&text)
}

/// Hash of the command alone; names the cache slot that competing keys share.
fn slot_name(cmd: &Command) -> String {
    format!("{}-{}", cmd.name(), &sha256_hex(&command_json(cmd))[..16])
}

pub fn inputs_for(cmd: &Command, bits: Option<u32>) -> Inputs {
    Inputs { p: cmd.p(), n: cmd.colors(), m: cmd.root_m().map(format_m), bits: bits_label(bits), command: cmd.clone() }
}

/// Outcome of [`run_report`].
#[derive(Clone, Debug)]
pub struct ReportOutcome {
    pub record: ReportRecord,
    pub cache_hit: bool,
    /// Set when a cached record existed but no longer matched.
    pub notice: Option<String>,
}

/// Serializes cache writes within the process.
static WRITER: Mutex<()> = Mutex::new(());

pub struct Cache {
    dir: PathBuf,
}

enum Lookup {
    Hit(ReportRecord),
    Miss,
    Stale(String),
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn slot(&self, cmd: &Command) -> PathBuf {
        self.dir.join(format!("{}.json", slot_name(cmd)))
    }

    fn lookup(&self, cmd: &Command, key: &str) -> Lookup {
        let path = self.slot(cmd);
        let Ok(text) = std::fs::read_to_string(&path) else {
            return Lookup::Miss;
        };
        let Ok(record) = serde_json::from_str::<ReportRecord>(&text) else {
            return Lookup::Stale(format!("unreadable cache entry {} invalidated", path.display()));
        };
        let bits = record.inputs.bits.parse().ok();
        let recomputed = cache_key(&record.inputs.command, bits);
        if record.key != recomputed {
            return Lookup::Stale(format!(
                "cache entry {} has key {} but its inputs hash to {recomputed} under this version; invalidated",
                path.display(),
                record.key
            ));
        }
        if record.key != key {
            return Lookup::Stale(format!(
                "cache entry {} was computed at bits={}; invalidated for the current settings",
                path.display(),
                record.inputs.bits
            ));
        }
        Lookup::Hit(record)
    }

    fn store(&self, record: &ReportRecord) -> Result<()> {
        let _guard = WRITER.lock().unwrap_or_else(|e| e.into_inner());
        std::fs::create_dir_all(&self.dir).map_err(|e| HarnessError::io(&self.dir, e))?;
        let path = self.slot(&record.inputs.command);
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(record).map_err(|e| HarnessError::Serde(e.to_string()))?;
        std::fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| HarnessError::io(&path, e))
    }
}

/// Run `cmd`, or return the cached record for identical inputs.
pub fn run_report(cmd: &Command, cfg: &Config) -> Result<ReportOutcome> {
    let cache = Cache::new(&cfg.cache_dir);
    let key = cache_key(cmd, cfg.bits);
    let notice = match cache.lookup(cmd, &key) {
        Lookup::Hit(mut record) => {
            record.cache_hit = true;
            return Ok(ReportOutcome { record, cache_hit: true, notice: None });
        }
        Lookup::Miss => None,
        Lookup::Stale(msg) => Some(msg),
    };
    let (outputs, rows, tolerances) = cfg.install(|| execute(cmd, cfg.bits))?;
    let record = ReportRecord {
        key,
        inputs: inputs_for(cmd, cfg.bits),
        outputs,
        rows,
        provenance: Provenance {
            qtwist_version: qtwist::VERSION.to_string(),
            harness_version: HARNESS_VERSION.to_string(),
            tolerances,
        },
        timestamp: chrono::Utc::now().to_rfc3339(),
        cache_hit: false,
    };
    cache.store(&record)?;
    Ok(ReportOutcome { record, cache_hit: false, notice })
}

type Executed = (BTreeMap<String, Decimal>, Vec<CsvRow>, BTreeMap<String, String>);

fn base_context(bits: Option<u32>) -> Result<PrecisionContext> {
    Ok(match bits {
        Some(b) => PrecisionContext::new(b, PrecisionContext::MIN_GUARD)?,
        None => PrecisionContext::default(),
    })
}

fn execute(cmd: &Command, bits: Option<u32>) -> Result<Executed> {
    let mut out = BTreeMap::new();
    let mut rows = Vec::new();
    let mut tol = BTreeMap::new();
    match cmd {
        &Command::Jones { p, n, m } => {
            let ctx = context_for(n, bits)?;
            let root = RootSpec::new(n, m)?;
            out.insert("jones".into(), Decimal::complex(&jones(TwistParam::new(p), &root, &ctx)?));
            tol.insert("doubling_agreement_log2".into(), ctx.agreement_log2().to_string());
        }
        &Command::Critical { p } => {
            let ctx = base_context(bits)?;
            let data = find_critical(p, &ctx)?;
            out.insert("t0".into(), Decimal::complex(&data.t0));
            out.insert("s0".into(), Decimal::complex(&data.s0));
            out.insert("zeta".into(), Decimal::complex(&data.zeta));
            out.insert("omega".into(), Decimal::complex(&data.omega));
            out.insert("omega_h".into(), Decimal::complex(&data.omega_h));
            out.insert("omega_discrepancy".into(), Decimal::f64(data.omega_discrepancy));
            out.insert("newton_residual".into(), Decimal::f64(data.newton_residual));
            tol.insert("omega_forms".into(), "1e-20".into());
        }
        &Command::Predict { p, n, m, d } => {
            if d > 1 {
                return Err(qtwist::Error::Domain(format!("only κ₁ is known analytically; d = {d} needs `fit`")).into());
            }
            let ctx = base_context(bits)?;
            let data = find_critical(p, &ctx)?;
            let root = RootSpec::new(n, m)?;
            let pred = predict(p, &root, &data, d, &ctx)?;
            let mut kappas = Vec::new();
            if d == 1 {
                let k = kappa1_via_saddle(p, &data, m, &ctx)?;
                out.insert("kappa1".into(), Decimal::complex(&k));
                kappas.push(k);
            }
            out.insert("leading".into(), Decimal::complex(&pred.leading));
            out.insert("x".into(), Decimal::complex(&pred.x));
            out.insert("prediction".into(), Decimal::complex(&pred.evaluate(&kappas)));
        }
        Command::Fit { p, m, nlist, d } => {
            let fit = fit_expansion(*p, *m, nlist, *d, bits)?;
            for (i, k) in fit.kappas.iter().enumerate() {
                out.insert(format!("kappa{}", i + 1), Decimal::c64(*k));
            }
            out.insert("slope_d".into(), Decimal::f64(fit.slope_d));
            out.insert("slope_stderr".into(), Decimal::f64(fit.slope_stderr));
            out.insert("condition".into(), Decimal::f64(fit.condition));
            for (i, s) in fit.samples.iter().enumerate() {
                let model = fit.model(i);
                rows.push(CsvRow {
                    n: s.n,
                    denom: fmt_f64(s.denom),
                    re_jones: fmt_float(s.jones.real()),
                    im_jones: fmt_float(s.jones.imag()),
                    re_prediction: fmt_float(model.real()),
                    im_prediction: fmt_float(model.imag()),
                    re_ratio: fmt_float(s.ratio.real()),
                    im_ratio: fmt_float(s.ratio.imag()),
                    residual: fmt_f64(fit.residuals[i]),
                });
            }
            tol.insert("max_condition".into(), crate::fit::MAX_CONDITION.to_string());
        }
        Command::Growth { p, m, nlist } => {
            let g = growth_rate(*p, *m, nlist, bits)?;
            out.insert("limit".into(), Decimal::c64(g.limit));
            out.insert("target".into(), Decimal::c64(g.target));
            out.insert("re_error".into(), Decimal::f64(g.re_error));
            out.insert("im_error_mod_pi2".into(), Decimal::f64(g.im_error));
            for (n, a) in g.nlist.iter().zip(&g.sequence) {
                out.insert(format!("sequence.{n}"), Decimal::c64(*a));
            }
        }
        &Command::Fourier { p, n, m, lattice_m, lattice_n, tol: t } => {
            let root = RootSpec::new(n, m)?;
            let bump = BumpSpec::default();
            if m.is_some() {
                let h = h_hat(lattice_m, lattice_n, p, &root, bump, t)?;
                out.insert("h_hat".into(), Decimal::complex(&h.value));
                out.insert("h_hat_quad_error".into(), Decimal::f64(h.quad_error));
            }
            let h = h_tilde(lattice_m, lattice_n, p, &root, bump, t)?;
            out.insert("h_tilde".into(), Decimal::complex(&h.value));
            out.insert("h_tilde_quad_error".into(), Decimal::f64(h.quad_error));
            out.insert("scale".into(), Decimal::f64(h.scale));
            tol.insert("quadrature".into(), t.to_string());
            tol.insert("bump_eps".into(), bump.eps.to_string());
        }
        &Command::Volume { p } => {
            let data = find_critical(p, &base_context(bits)?)?;
            let (vol, cs) = data.volume_cs();
            out.insert("volume".into(), Decimal::f64(vol));
            out.insert("chern_simons_mod_pi2".into(), Decimal::f64(cs));
            let two_pi = Float::with_val(data.zeta.prec().0, qtwist::numerics::pi(data.zeta.prec().0) * 2u32);
            out.insert("two_pi_zeta".into(), Decimal::complex(&Complex::with_val(data.zeta.prec().0, &data.zeta * &two_pi)));
        }
    }
    Ok((out, rows, tol))
}

/// Write the record as JSON to `path` and, when it has rows, the CSV next to it.
pub fn write_report(record: &ReportRecord, path: &Path) -> Result<Option<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(record).map_err(|e| HarnessError::Serde(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))?;
    if record.rows.is_empty() {
        return Ok(None);
    }
    let csv_path = path.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| HarnessError::Serde(e.to_string()))?;
    for row in &record.rows {
        w.serialize(row).map_err(|e| HarnessError::Serde(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(&csv_path, e))?;
    Ok(Some(csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_depend_on_bits_but_slots_do_not() {
        let cmd = Command::Jones { p: 6, n: 10, m: Some(2) };
        assert_ne!(cache_key(&cmd, Some(256)), cache_key(&cmd, Some(320)));
        assert_eq!(cache_key(&cmd, None), cache_key(&cmd, None));
        let other = Command::Jones { p: 6, n: 10, m: None };
        assert_ne!(slot_name(&cmd), slot_name(&other));
    }

    #[test]
    fn decimals_carry_forty_digits() {
        let x = Float::with_val(256, 2).sqrt();
        let d = Decimal::real(&x);
        assert!(d.re.starts_with("1.414213562373095048801688724209698078570e0"), "{}", d.re);
        assert_eq!(parse_m("INF"), Ok(None));
        assert_eq!(parse_m("7"), Ok(Some(7)));
    }
}
