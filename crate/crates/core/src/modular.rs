//! Fourier coefficients of a holomorphic cusp form, smooth dyadic test
//! functions and the twisted sums `S_V(f, K; p)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fp::{e, PrimeContext};
use crate::weights::{WeightDescriptor, WeightTable};

/// Normalized coefficients `rho_f(n) = a_f(n) / n^{(k-1)/2}`, `n = 1..=n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct CuspFormCoeffs {
    pub label: String,
    pub weight: u32,
    pub level: u64,
    /// `rho[n - 1]`.
    rho: Vec<f64>,
    /// Unnormalized integer coefficients when the form has them.
    #[serde(skip)]
    integral: Option<Vec<i128>>,
}

impl CuspFormCoeffs {
    /// Wrap coefficients produced elsewhere; `rho[0]` is `rho_f(1)`.
    pub fn from_normalized(label: impl Into<String>, weight: u32, level: u64, rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return invalid("need at least one coefficient");
        }
        if weight % 2 != 0 || level == 0 {
            return invalid(format!("weight {weight} must be even and level {level} positive"));
        }
        Ok(Self {
            label: label.into(),
            weight,
            level,
            rho,
            integral: None,
        })
    }

    pub fn n_max(&self) -> usize {
        self.rho.len()
    }

    /// `rho_f(n)` for `1 <= n <= n_max`.
    pub fn rho(&self, n: usize) -> f64 {
        self.rho[n - 1]
    }

    pub fn rho_slice(&self) -> &[f64] {
        &self.rho
    }

    /// Exact `a_f(n)`, if known.
    pub fn integral(&self, n: usize) -> Option<i128> {
        self.integral.as_ref().map(|a| a[n - 1])
    }

    fn require(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            return Err(Error::InsufficientCoefficients {
                required: n,
                available: self.n_max(),
            });
        }
        Ok(())
    }
}

/// Coefficients `1 - q - q^2 + q^5 + q^7 - ...` of `prod (1 - q^m)` up to
/// `q^len`, as sparse `(exponent, sign)` pairs.
fn pentagonal(len: usize) -> Vec<(usize, i128)> {
    let mut out = vec![(0, 1)];
    for k in 1usize.. {
        let g1 = k * (3 * k - 1) / 2;
        if g1 > len {
            break;
        }
        let sign = if k % 2 == 1 { -1 } else { 1 };
        out.push((g1, sign));
        let g2 = k * (3 * k + 1) / 2;
        if g2 <= len {
            out.push((g2, sign));
        }
    }
    out.sort_unstable();
    out
}

/// Ramanujan's `tau(n)` for `n <= n_max` from `q prod (1 - q^m)^24`.
pub fn ramanujan_tau(n_max: usize) -> Result<Vec<i128>> {
    if n_max == 0 {
        return invalid("n_max must be at least 1");
    }
    let len = n_max - 1;
    let eta = pentagonal(len);
    let mut acc = vec![0i128; len + 1];
    acc[0] = 1;
    for _ in 0..24 {
        let mut next = vec![0i128; len + 1];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for &(j, s) in &eta {
                if i + j > len {
                    break;
                }
                let t = a.checked_mul(s).ok_or(Error::Overflow("tau series"))?;
                next[i + j] = next[i + j].checked_add(t).ok_or(Error::Overflow("tau series"))?;
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// The discriminant `Delta` (weight 12, level 1) with `rho(n) = tau(n) / n^{11/2}`.
pub fn delta_coefficients(n_max: usize) -> Result<CuspFormCoeffs> {
    let tau = ramanujan_tau(n_max)?;
    let rho = tau
        .iter()
        .enumerate()
        .map(|(i, &t)| t as f64 / ((i + 1) as f64).powf(5.5))
        .collect();
    Ok(CuspFormCoeffs {
        label: "Delta".into(),
        weight: 12,
        level: 1,
        rho,
        integral: Some(tau),
    })
}

/// Smooth bump `exp(1 - 1/(1 - t^2))`, `t = (2x - 3P)/P`, supported on `[P, 2P]`.
#[derive(Clone, Debug, Serialize)]
pub struct TestFunctionV {
    pub p_scale: f64,
    /// Smallest `Q >= 1` with `|x^nu V^(nu)(x)| <= Q^nu` for `nu <= 4` on the sample grid.
    pub q: f64,
}

const Q_GRID: usize = 4000;
const Q_MAX_ORDER: u32 = 4;

impl TestFunctionV {
    pub fn eval(&self, x: f64) -> f64 {
        bump(x, self.p_scale)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.p_scale, 2.0 * self.p_scale)
    }
}

fn bump(x: f64, p: f64) -> f64 {
    let t = (2.0 * x - 3.0 * p) / p;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// `nu`-th central difference quotient of `f` at `x` with step `h`.
fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64, nu: u32) -> f64 {
    // sum_k (-1)^k C(nu, k) f(x + (nu/2 - k) h) / h^nu
    let mut binom = 1.0;
    let mut sum = 0.0;
    for k in 0..=nu {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * f(x + (nu as f64 / 2.0 - k as f64) * h);
        binom = binom * (nu - k) as f64 / (k + 1) as f64;
    }
    sum / h.powi(nu as i32)
}

pub fn build_v(p_scale: f64) -> Result<TestFunctionV> {
    if !(p_scale.is_finite() && p_scale > 0.0) {
        return invalid(format!("P must be positive, got {p_scale}"));
    }
    let h = p_scale * 1e-3;
    let f = |x: f64| bump(x, p_scale);
    let q = (1..Q_GRID)
        .flat_map(|i| {
            let x = p_scale * (1.0 + i as f64 / Q_GRID as f64);
            (1..=Q_MAX_ORDER).map(move |nu| (x, nu))
        })
        .map(|(x, nu)| (x.powi(nu as i32) * central_difference(f, x, h, nu)).abs().powf(1.0 / nu as f64))
        .fold(1.0f64, f64::max);
    Ok(TestFunctionV { p_scale, q })
}

fn dyadic_range(v: &TestFunctionV, p: u64) -> (usize, usize) {
    let lo = (v.p_scale * p as f64).ceil().max(1.0) as usize;
    let hi = (2.0 * v.p_scale * p as f64).floor() as usize;
    (lo, hi)
}

/// `S_V(f, K; p) = sum_n rho_f(n) K(n) V(n/p)` with `K` extended periodically.
pub fn twisted_sum(f: &CuspFormCoeffs, k: &WeightTable, v: &TestFunctionV) -> Result<Complex64> {
    let p = k.p();
    let (lo, hi) = dyadic_range(v, p);
    f.require(hi)?;
    let pf = p as f64;
    Ok((lo..=hi)
        .map(|n| k.values()[n % p as usize] * (f.rho(n) * v.eval(n as f64 / pf)))
        .sum())
}

/// `sum_{n <= x} rho_f(n) e(alpha n)`.
pub fn linear_phase_sum(f: &CuspFormCoeffs, alpha: f64, x: usize) -> Result<Complex64> {
    f.require(x)?;
    Ok((1..=x).map(|n| f.rho(n) * e(alpha * n as f64)).sum())
}

/// `(1/x) sum_{n <= x} rho_f(n)^2`.
pub fn rankin_partial(f: &CuspFormCoeffs, x: usize) -> Result<f64> {
    if x == 0 {
        return invalid("x must be at least 1");
    }
    f.require(x)?;
    Ok(f.rho[..x].iter().map(|r| r * r).sum::<f64>() / x as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub p: u64,
    pub weight: String,
    pub p_scale: f64,
    pub q: f64,
    pub value: Complex64,
    pub abs: f64,
    /// `log|S| / log p`; `null` when `|S|` is negligible.
    pub local_exponent: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub form: String,
    pub family: WeightDescriptor,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `log|S|` against `log p`.
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// Primes dropped from the fit because `|S| < 1e-8`.
    pub discarded: Vec<u64>,
}

impl ScanReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,weight_label,P,Q,re,im,abs,local_exponent\n");
        for r in &self.rows {
            let loc = r.local_exponent.map_or(String::new(), |v| format!("{v:.16e}"));
            s.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.p, r.weight, r.p_scale, r.q, r.value.re, r.value.im, r.abs, loc
            ));
        }
        s
    }
}

const NEGLIGIBLE: f64 = 1e-8;

/// Ordinary least squares `y = slope x + intercept`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// The first of `primes` at or above each `lo * (hi/lo)^(i/(count-1))`; `lo`, `hi` are the end primes. `lo * (hi/lo)^(i/(count-1))`.
pub fn geometric_subset(primes: &[u64], count: usize) -> Vec<u64> {
    if count == 0 || primes.len() <= count {
        return primes.to_vec();
    }
    let (lo, hi) = (primes[0] as f64, *primes.last().unwrap() as f64);
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = if count == 1 { lo } else { lo * (hi / lo).powf(i as f64 / (count - 1) as f64) };
            *primes.iter().find(|&&p| p as f64 >= t - 1e-9).unwrap_or(primes.last().unwrap())
        })
        .collect();
    out.dedup();
    out
}

/// Compute `|S_V(f, K_p; p)|` for each prime and fit the growth exponent.
pub fn exponent_scan(
    f: &CuspFormCoeffs,
    family: &WeightDescriptor,
    primes: &[u64],
    p_scale: f64,
) -> Result<ScanReport> {
    if primes.len() < 3 {
        return invalid(format!("need at least 3 primes, got {}", primes.len()));
    }
    if primes.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("primes must be strictly increasing");
    }
    let v = build_v(p_scale)?;
    f.require(dyadic_range(&v, *primes.last().unwrap()).1)?;
    let rows = primes
        .par_iter()
        .map(|&p| {
            let ctx = PrimeContext::new(p)?;
            let k = family.build(&ctx)?;
            let value = twisted_sum(f, &k, &v)?;
            let abs = value.norm();
            Ok(ScanRow {
                p,
                weight: family.label(),
                p_scale,
                q: v.q,
                value,
                abs,
                local_exponent: (abs >= NEGLIGIBLE).then(|| abs.ln() / (p as f64).ln()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<&ScanRow> = rows.iter().filter(|r| r.abs >= NEGLIGIBLE).collect();
    let discarded = rows.iter().filter(|r| r.abs < NEGLIGIBLE).map(|r| r.p).collect();
    if kept.len() < 2 {
        return invalid("fewer than 2 primes with a non-negligible sum");
    }
    let xs: Vec<f64> = kept.iter().map(|r| (r.p as f64).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|r| r.abs.ln()).collect();
    let (slope, intercept) = ols(&xs, &ys);
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    Ok(ScanReport {
        form: f.label.clone(),
        family: family.clone(),
        rows,
        slope,
        intercept,
        residuals,
        discarded,
    })
}
