//! Experiment configuration and dispatch for the `trace-lab` binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use tracelab::correlation::{self, CatalogCase, PglElement, VerifyStatus};
use tracelab::fp::{self, dft, PrimeContext};
use tracelab::weights::{PolyFp, WeightDescriptor};
use tracelab::{json as tjson, modular, orbits, resonance, Complex64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "trace-lab", version, about = "Trace weights, correlation sums and twisted Hecke orbits modulo p")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    /// Run a saved configuration instead of a subcommand.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Print the configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TRACE_LAB_THREADS")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// Write the main artifact here instead of stdout; the run manifest goes next to it.
    #[arg(long, short, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub common: Common,
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Tabulate a weight.
    #[command(subcommand)]
    Weight(WeightCmd),
    /// Unitary Fourier transform of a weight.
    Dft(WeightArgs),
    /// Correlation sums.
    #[command(subcommand)]
    Corr(CorrCmd),
    /// Classify the exceptional set of a weight.
    Goodness(GoodnessArgs),
    /// Check the closed-form exceptional sets of the elementary weights.
    #[command(name = "verify-sec16")]
    VerifySec16(VerifyArgs),
    /// `S_V(Delta, K; p)` for one prime.
    TwistedSum(TwistedSumArgs),
    /// Growth exponent of `|S_V(Delta, K; p)|` over a list of primes.
    ExponentScan(ScanArgs),
    /// Check `E(c, d, e, n1, n2) = p C(K; gamma)` on sampled instances.
    ResonanceCheck(ResonanceArgs),
    /// Twisted Hecke orbit of a point.
    Orbit(OrbitArgs),
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum WeightCmd {
    Eval(WeightEvalArgs),
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum CorrCmd {
    One(CorrOneArgs),
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct WeightArgs {
    #[arg(long)]
    pub p: u64,
    /// `kind[:key=value,...]` or a JSON descriptor.
    #[arg(long)]
    pub weight: WeightArg,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct WeightEvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub w: WeightArgs,
    /// Only this argument (reduced mod p).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct CorrOneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub w: WeightArgs,
    /// Matrix entries `a,b,c,d`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub w: WeightArgs,
    #[arg(long = "M", default_value_t = 1.0)]
    #[serde(rename = "M")]
    pub m: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct GoodnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub w: WeightArgs,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Dirac,
    Additive,
    Kloosterman,
    Quadratic,
    Character,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub case: CaseKind,
    /// Primes: `17`, `17,19,23` or a range `17..101`.
    #[arg(long)]
    pub p: PrimeList,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: f64,
    /// Shift for the Dirac and additive cases.
    #[arg(long, default_value_t = 1)]
    pub u: u64,
    /// Character index for the character case; every non-trivial index if omitted.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct TwistedSumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub w: WeightArgs,
    #[arg(long = "P", default_value_t = 0.5)]
    #[serde(rename = "P")]
    pub p_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Primes: list or range; with `--count`, a geometric subsample of the range.
    #[arg(long)]
    pub primes: PrimeList,
    /// Keep this many primes, geometrically spaced.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[arg(long)]
    pub weight: WeightArg,
    #[arg(long = "P", default_value_t = 0.5)]
    #[serde(rename = "P")]
    pub p_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ResonanceArgs {
    #[arg(long)]
    pub p: PrimeList,
    /// Instances per prime.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "N", default_value_t = resonance::DEFAULT_LEVEL)]
    #[serde(rename = "N")]
    pub level: u64,
    /// Weights to check (repeatable); defaults to Kloosterman, Legendre, Kl_3 and a Dirac mass.
    #[arg(long)]
    #[serde(default)]
    pub weight: Vec<WeightArg>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct OrbitArgs {
    #[arg(long)]
    pub p: u64,
    /// Twisting weight; the full untwisted orbit if omitted.
    #[arg(long, conflicts_with = "phi")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightArg>,
    /// Polynomial coefficients (constant first) for a polynomially twisted orbit.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi: Vec<i64>,
    /// Base point `x,y`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0], allow_hyphen_values = true)]
    pub tau: Vec<f64>,
    /// Interval `lo..hi` inside `[1, p]`; the whole range by default.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    /// Also write an SVG scatter plot.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    /// Add the Fourier-side check with this many terms of Delta.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier_terms: Option<usize>,
}

/// A weight descriptor given as `kind[:key=value,...]` or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightArg(pub WeightDescriptor);

impl FromStr for WeightArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map(WeightArg).map_err(|e| e.to_string());
        }
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind.into()));
        for kv in split_top_level(rest) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.into()));
            obj.insert(k.trim().into(), v);
        }
        serde_json::from_value(Value::Object(obj))
            .map(WeightArg)
            .map_err(|e| format!("weight `{s}`: {e}"))
    }
}

/// Split on commas that are not inside brackets or braces.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' | '{' => depth += 1,
            ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < s.len() {
        out.push(&s[start..]);
    }
    out.into_iter().filter(|x| !x.trim().is_empty()).collect()
}

/// Primes given as a comma list, a range `a..b` (inclusive), or a mix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrimeList(pub Vec<u64>);

impl FromStr for PrimeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a: u64 = a.trim().parse().map_err(|e| format!("range start `{a}`: {e}"))?;
                let b: u64 = b.trim().parse().map_err(|e| format!("range end `{b}`: {e}"))?;
                out.extend((a..=b).filter(|&n| fp::is_prime(n) && n > 2));
            } else {
                let n: u64 = part.parse().map_err(|e| format!("prime `{part}`: {e}"))?;
                if !fp::is_prime(n) || n == 2 {
                    return Err(format!("{n} is not an odd prime"));
                }
                out.push(n);
            }
        }
        if out.is_empty() {
            return Err("the prime list is empty".into());
        }
        out.sort_unstable();
        out.dedup();
        Ok(PrimeList(out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got `{s}`"))?;
        let lo = a.trim().parse().map_err(|e| format!("interval start `{a}`: {e}"))?;
        let hi = b.trim().parse().map_err(|e| format!("interval end `{b}`: {e}"))?;
        Ok(Interval { lo, hi })
    }
}

/// Problems with the request itself; mapped to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Library input errors are reported as usage errors.
fn lib<T>(r: tracelab::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| match e {
        tracelab::Error::InvalidInput(_)
        | tracelab::Error::LengthMismatch { .. }
        | tracelab::Error::InsufficientCoefficients { .. } => UsageError(e.to_string()).into(),
        other => anyhow::Error::new(other),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

/// Rendered outputs of one run.
#[derive(Debug)]
pub struct Artifacts {
    pub json: String,
    pub csv: Option<String>,
    pub svg: Option<(PathBuf, String)>,
    pub outcome: Outcome,
    /// One-line summary for the log.
    pub summary: String,
}

fn ctx_for(p: u64) -> anyhow::Result<PrimeContext> {
    lib(PrimeContext::new(p)).with_context(|| format!("field `p` = {p}"))
}

fn doc<T: Serialize>(kind: &str, body: &T) -> anyhow::Result<String> {
    Ok(tjson::document(kind, body)?)
}

fn csv_rows(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn complex_csv(values: &[Complex64]) -> String {
    csv_rows(
        "n,re,im",
        values.iter().enumerate().map(|(i, v)| format!("{i},{:.16e},{:.16e}", v.re, v.im)),
    )
}

/// Compute everything for `cmd` without touching the filesystem.
pub fn execute(cmd: &Command) -> anyhow::Result<Artifacts> {
    let pass = |json: String, summary: String| Artifacts {
        json,
        csv: None,
        svg: None,
        outcome: Outcome::Pass,
        summary,
    };
    Ok(match cmd {
        Command::Weight(WeightCmd::Eval(a)) => {
            let ctx = ctx_for(a.w.p)?;
            let k = lib(a.w.weight.0.build(&ctx)).context("field `weight`")?;
            match a.n {
                Some(n) => {
                    let v = k.at(n);
                    pass(
                        doc("weight-value", &json!({"p": a.w.p, "weight": a.w.weight, "n": n, "value": v}))?,
                        format!("{}({n}) = {v}", k.label()),
                    )
                }
                None => Artifacts {
                    csv: Some(complex_csv(k.values())),
                    ..pass(
                        doc(
                            "weight-table",
                            &json!({
                                "p": a.w.p, "weight": a.w.weight, "label": k.label(),
                                "sup_norm": k.sup_norm(), "l2_norm": k.l2_norm(), "values": k.values(),
                            }),
                        )?,
                        format!("{} modulo {}: sup {:.6}, l2 {:.6}", k.label(), a.w.p, k.sup_norm(), k.l2_norm()),
                    )
                },
            }
        }
        Command::Dft(a) => {
            let ctx = ctx_for(a.p)?;
            let k = lib(a.weight.0.build(&ctx)).context("field `weight`")?;
            let kh = dft(&k);
            let back = dft(&kh);
            let p = a.p as i64;
            let involution_error = (0..p)
                .map(|x| (back.at(x) - k.at(-x)).norm())
                .fold(0.0, f64::max);
            let unitarity_error = (kh.l2_norm() - k.l2_norm()).abs();
            Artifacts {
                csv: Some(complex_csv(kh.values())),
                ..pass(
                    doc(
                        "dft",
                        &json!({
                            "p": a.p, "weight": a.weight, "label": kh.label(),
                            "l2_norm": k.l2_norm(), "l2_norm_transform": kh.l2_norm(),
                            "unitarity_error": unitarity_error, "involution_error": involution_error,
                            "values": kh.values(),
                        }),
                    )?,
                    format!("{}: unitarity error {unitarity_error:.2e}, involution error {involution_error:.2e}", kh.label()),
                )
            }
        }
        Command::Corr(CorrCmd::One(a)) => {
            let ctx = ctx_for(a.w.p)?;
            let k = lib(a.w.weight.0.build(&ctx)).context("field `weight`")?;
            let [ga, gb, gc, gd] = a.gamma[..] else {
                return usage("field `gamma` needs exactly four entries a,b,c,d");
            };
            let g = lib(PglElement::new(a.w.p, ga, gb, gc, gd)).context("field `gamma`")?;
            let v = correlation::corr_sum(&dft(&k), &g);
            pass(
                doc(
                    "correlation",
                    &json!({
                        "p": a.w.p, "weight": a.w.weight, "gamma": g, "value": v,
                        "abs": v.norm(), "ratio_to_sqrt_p": v.norm() / (a.w.p as f64).sqrt(),
                    }),
                )?,
                format!("C({}; {g:?}) = {v}", k.label()),
            )
        }
        Command::Corr(CorrCmd::Spectrum(a)) => {
            check_m(a.m)?;
            let ctx = ctx_for(a.w.p)?;
            let k = lib(a.w.weight.0.build(&ctx)).context("field `weight`")?;
            let s = correlation::spectrum(&k, a.m);
            let csv = s.entries.as_ref().map(|e| {
                csv_rows(
                    "index,a,b,c,d,re,im,abs",
                    e.iter().enumerate().map(|(i, v)| {
                        let g = PglElement::from_index(a.w.p, i as u64);
                        format!("{i},{},{},{},{},{:.16e},{:.16e},{:.16e}", g.a, g.b, g.c, g.d, v.re, v.im, v.norm())
                    }),
                )
            });
            Artifacts {
                csv,
                ..pass(
                    doc("spectrum", &s)?,
                    format!("{} modulo {}: {} exceptional of {}", s.weight, s.p, s.exceptional.len(), s.group_order),
                )
            }
        }
        Command::Goodness(a) => {
            check_m(a.m)?;
            let ctx = ctx_for(a.w.p)?;
            let k = lib(a.w.weight.0.build(&ctx)).context("field `weight`")?;
            let s = correlation::spectrum(&k, a.m);
            let r = correlation::classify_exceptional(&ctx, &s, a.m);
            Artifacts {
                outcome: if r.is_good { Outcome::Pass } else { Outcome::Fail },
                ..pass(
                    doc("goodness", &json!({"weight": a.w.weight, "label": k.label(), "report": r}))?,
                    format!(
                        "{} modulo {}, M = {}: {} ({} exceptional, pairs used: {})",
                        k.label(),
                        a.w.p,
                        a.m,
                        if r.is_good { "good" } else { "not good" },
                        r.exceptional_count,
                        r.pairs.len()
                    ),
                )
            }
        }
        Command::VerifySec16(a) => verify(a)?,
        Command::TwistedSum(a) => {
            let ctx = ctx_for(a.w.p)?;
            let k = lib(a.w.weight.0.build(&ctx)).context("field `weight`")?;
            let v = lib(modular::build_v(a.p_scale)).context("field `P`")?;
            let need = (2.0 * a.p_scale * a.w.p as f64).floor() as usize;
            let f = lib(modular::delta_coefficients(need.max(1)))?;
            let s = lib(modular::twisted_sum(&f, &k, &v))?;
            pass(
                doc(
                    "twisted-sum",
                    &json!({
                        "p": a.w.p, "weight": a.w.weight, "form": f.label, "P": a.p_scale, "Q": v.q,
                        "value": s, "abs": s.norm(),
                    }),
                )?,
                format!("S_V(Delta, {}; {}) = {s}", k.label(), a.w.p),
            )
        }
        Command::ExponentScan(a) => {
            let primes = match a.count {
                Some(c) => modular::geometric_subset(&a.primes.0, c),
                None => a.primes.0.clone(),
            };
            if primes.len() < 3 {
                return usage(format!("field `primes`: need at least 3 primes, got {}", primes.len()));
            }
            let need = (2.0 * a.p_scale * *primes.last().unwrap() as f64).floor() as usize;
            let f = lib(modular::delta_coefficients(need.max(1)))?;
            let r = lib(modular::exponent_scan(&f, &a.weight.0, &primes, a.p_scale))?;
            Artifacts {
                csv: Some(r.to_csv()),
                ..pass(
                    doc("exponent-scan", &r)?,
                    format!("{} over {} primes: slope {:.4}", a.weight.0.label(), primes.len(), r.slope),
                )
            }
        }
        Command::ResonanceCheck(a) => resonance_check(a)?,
        Command::Orbit(a) => orbit(a)?,
    })
}

fn check_m(m: f64) -> anyhow::Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return usage(format!("field `M` must be positive, got {m}"));
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> anyhow::Result<Artifacts> {
    check_m(a.m)?;
    let mut reports = Vec::new();
    for &p in &a.p.0 {
        let cases: Vec<CatalogCase> = match a.case {
            CaseKind::Dirac => vec![CatalogCase::Dirac { u: a.u }],
            CaseKind::Additive => vec![CatalogCase::Additive { u: a.u }],
            CaseKind::Kloosterman => vec![CatalogCase::Kloosterman],
            CaseKind::Quadratic => vec![CatalogCase::Quadratic],
            CaseKind::Character => match a.k {
                Some(k) => vec![CatalogCase::Character { k }],
                None => (1..p - 1).map(|k| CatalogCase::Character { k }).collect(),
            },
        };
        for c in cases {
            reports.push(lib(correlation::verify_sec16(&c, p, a.m)).with_context(|| format!("case {}", c.name()))?);
        }
    }
    let count = |s: fn(&VerifyStatus) -> bool| reports.iter().filter(|r| s(&r.status)).count();
    let passed = count(|s| matches!(s, VerifyStatus::Pass));
    let failed = count(|s| matches!(s, VerifyStatus::Fail));
    let skipped = count(|s| matches!(s, VerifyStatus::OutOfStatedRange));
    let summary = reports
        .iter()
        .map(|r| {
            let status = match r.status {
                VerifyStatus::Pass => "pass",
                VerifyStatus::Fail => "FAIL",
                VerifyStatus::OutOfStatedRange => "out-of-stated-range",
            };
            format!("{} p={} M={}: {status}", r.case.name(), r.p, r.m)
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Artifacts {
        json: doc(
            "verify-sec16",
            &json!({"passed": passed, "failed": failed, "out_of_stated_range": skipped, "reports": reports}),
        )?,
        csv: None,
        svg: None,
        outcome: if failed == 0 { Outcome::Pass } else { Outcome::Fail },
        summary,
    })
}

fn default_resonance_weights() -> Vec<WeightDescriptor> {
    vec![
        WeightDescriptor::Kloosterman { a: 1 },
        WeightDescriptor::Legendre,
        WeightDescriptor::HyperKloosterman { m: 3 },
        WeightDescriptor::Dirac { u: 1 },
    ]
}

fn resonance_check(a: &ResonanceArgs) -> anyhow::Result<Artifacts> {
    let weights: Vec<WeightDescriptor> = if a.weight.is_empty() {
        default_resonance_weights()
    } else {
        a.weight.iter().map(|w| w.0.clone()).collect()
    };
    let mut checks = Vec::new();
    for &p in &a.p.0 {
        let ctx = ctx_for(p)?;
        let instances = lib(resonance::sample_instances(p, a.level, a.count, a.seed ^ p)).context("field `N`")?;
        for w in &weights {
            let k = lib(w.build(&ctx)).context("field `weight`")?;
            checks.extend(lib(resonance::check_batch(&instances, &k))?);
        }
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let worst = checks
        .iter()
        .map(|c| c.max_discrepancy / (c.instance.p * c.instance.p) as f64)
        .fold(0.0, f64::max);
    Ok(Artifacts {
        json: doc(
            "resonance-check",
            &json!({
                "seed": a.seed, "N": a.level, "weights": weights, "checked": checks.len(),
                "failed": failed, "max_discrepancy_over_p2": worst, "checks": checks,
            }),
        )?,
        csv: None,
        svg: None,
        outcome: if failed == 0 { Outcome::Pass } else { Outcome::Fail },
        summary: format!("{} checks, {failed} failed, max |discrepancy|/p^2 = {worst:.2e}", checks.len()),
    })
}

fn orbit(a: &OrbitArgs) -> anyhow::Result<Artifacts> {
    let ctx = ctx_for(a.p)?;
    if a.tau.len() != 2 {
        return usage(format!("field `tau` needs two entries x,y, got {}", a.tau.len()));
    }
    let tau = lib(orbits::UpperHalfPoint::new(a.tau[0], a.tau[1])).context("field `tau`")?;
    let interval = a.interval.map_or((1, a.p), |i| (i.lo, i.hi));
    let mu = if let Some(w) = &a.weight {
        let k = lib(w.0.build(&ctx)).context("field `weight`")?;
        lib(orbits::twisted_measure(tau, &k, interval)).context("field `interval`")?
    } else if !a.phi.is_empty() {
        let phi = PolyFp::new(&ctx, &a.phi);
        lib(orbits::poly_twisted_measure(&ctx, tau, &phi, interval)).context("field `phi`")?
    } else {
        if a.interval.is_some() {
            return usage("field `interval` needs a `weight` or `phi`");
        }
        lib(orbits::untwisted_measure(a.p, tau))?
    };
    let report = orbits::orbit_report(&mu);
    let fourier = match a.fourier_terms {
        Some(n) => {
            let k = match &a.weight {
                Some(w) => lib(w.0.build(&ctx))?,
                None => tracelab::weights::WeightTable::from_fn(&ctx, "one", |_| Complex64::new(1.0, 0.0)),
            };
            let f = lib(modular::delta_coefficients(n.max(1)))?;
            Some(lib(orbits::fourier_side_check(tau, &k, interval, &f, n))?)
        }
        None => None,
    };
    Ok(Artifacts {
        json: doc("orbit", &json!({"report": report, "fourier_side": fourier}))?,
        csv: Some(mu.to_csv()),
        svg: a.svg.as_ref().map(|p| (p.clone(), mu.to_svg())),
        outcome: Outcome::Pass,
        summary: format!(
            "{} orbit modulo {}: {} atoms, max box discrepancy {:.4}",
            report.weight, a.p, report.atom_count, report.max_discrepancy
        ),
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    threads: usize,
    wall_time_s: f64,
    outcome: &'static str,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Execute a configuration, write its artifacts and return the outcome.
pub fn run(config: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    if config.common.threads == Some(0) {
        return usage("field `threads` must be at least 1");
    }
    let threads = config.common.threads.unwrap_or_else(rayon_threads);
    let artifacts = lib(tracelab::with_threads(threads, || execute(&config.command)))??;
    let body = match config.common.format {
        Format::Json => &artifacts.json,
        Format::Csv => match &artifacts.csv {
            Some(c) => c,
            None => return usage("field `format`: this command has no CSV output"),
        },
    };
    match &config.common.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{body}"),
    }
    if let Some((path, svg)) = &artifacts.svg {
        std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    let manifest = Manifest {
        tool: "trace-lab",
        version: VERSION,
        config,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outcome: match artifacts.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
        },
    };
    let manifest = tjson::document("manifest", &manifest)?;
    match &config.common.out {
        Some(path) => {
            let mp = manifest_path(path);
            std::fs::write(&mp, manifest).with_context(|| format!("writing {}", mp.display()))?;
        }
        None => eprint!("{manifest}"),
    }
    for line in artifacts.summary.lines() {
        eprintln!("{line}");
    }
    Ok(artifacts.outcome)
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Resolve the parsed command line into a configuration.
pub fn config_from_cli(cli: Cli) -> anyhow::Result<ExperimentConfig> {
    match (cli.config, cli.command) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
            if cli.common.threads.is_some() {
                cfg.common.threads = cli.common.threads;
            }
            if cli.common.out.is_some() {
                cfg.common.out = cli.common.out;
            }
            Ok(cfg)
        }
        (None, Some(command)) => Ok(ExperimentConfig {
            common: cli.common,
            command,
        }),
        (None, None) => usage("a subcommand or --config is required"),
    }
}
