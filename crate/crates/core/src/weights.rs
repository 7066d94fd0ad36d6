//! The catalog of trace weights, materialized as length-`p` complex tables.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fp::{self, DirichletCharacter, PrimeContext};

/// Values `K(0), ..., K(p-1)` of a `p`-periodic weight with cached norms.
#[derive(Clone, Debug)]
pub struct WeightTable {
    ctx: PrimeContext,
    values: Vec<Complex64>,
    label: String,
    sup_norm: f64,
    l2_norm: f64,
}

impl WeightTable {
    pub fn new(ctx: &PrimeContext, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() as u64 != ctx.p() {
            return Err(Error::LengthMismatch {
                expected: ctx.p() as usize,
                got: values.len(),
            });
        }
        Ok(Self::from_parts(ctx.clone(), values, label.into()))
    }

    pub(crate) fn from_parts(ctx: PrimeContext, values: Vec<Complex64>, label: String) -> Self {
        debug_assert_eq!(values.len() as u64, ctx.p());
        let sup_norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let l2_norm = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() / ctx.p() as f64).sqrt();
        Self {
            ctx,
            values,
            label,
            sup_norm,
            l2_norm,
        }
    }

    pub fn from_fn(ctx: &PrimeContext, label: impl Into<String>, f: impl Fn(u64) -> Complex64) -> Self {
        let values = (0..ctx.p()).map(f).collect();
        Self::from_parts(ctx.clone(), values, label.into())
    }

    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn p(&self) -> u64 {
        self.ctx.p()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `max |K(x)|`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `(p^{-1} sum |K(x)|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    /// Value at an arbitrary integer, extended by periodicity.
    #[inline]
    pub fn at(&self, n: i64) -> Complex64 {
        self.values[self.ctx.reduce(n) as usize]
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `a K + b L` pointwise.
    pub fn combine(&self, a: Complex64, other: &WeightTable, b: Complex64) -> Result<Self> {
        if other.p() != self.p() {
            return Err(Error::LengthMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_parts(
            self.ctx.clone(),
            values,
            format!("{a}*{} + {b}*{}", self.label, other.label),
        ))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let values = self.values.iter().map(|x| a * x).collect();
        Self::from_parts(self.ctx.clone(), values, format!("{a}*{}", self.label))
    }
}

/// Polynomial over `F_p`, coefficients low degree first, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyFp {
    p: u64,
    coeffs: Vec<u64>,
}

impl PolyFp {
    pub fn new(ctx: &PrimeContext, coeffs: &[i64]) -> Self {
        Self::from_residues(ctx.p(), coeffs.iter().map(|&c| ctx.reduce(c)).collect())
    }

    fn from_residues(p: u64, mut coeffs: Vec<u64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self { p, coeffs }
    }

    /// The polynomial `X`.
    pub fn x(ctx: &PrimeContext) -> Self {
        Self::new(ctx, &[0, 1])
    }

    pub fn constant(ctx: &PrimeContext, c: i64) -> Self {
        Self::new(ctx, &[c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn eval(&self, x: u64) -> u64 {
        let p = self.p;
        let x = x % p;
        self.coeffs.iter().rev().fold(0, |acc, &c| (acc * x + c) % p)
    }

    fn lead(&self) -> u64 {
        *self.coeffs.last().unwrap_or(&0)
    }

    fn scaled(&self, s: u64) -> Self {
        let p = self.p;
        Self::from_residues(p, self.coeffs.iter().map(|c| c * s % p).collect())
    }

    fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scaled(fp::mod_pow(self.lead(), self.p - 2, self.p))
    }

    fn div_rem(&self, d: &Self) -> (Self, Self) {
        let p = self.p;
        let dd = d.degree().expect("division by the zero polynomial");
        let inv_lead = fp::mod_pow(d.lead(), p - 2, p);
        let mut rem = self.coeffs.clone();
        let mut quo = vec![0u64; rem.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = rem[rem.len() - 1] * inv_lead % p;
            quo[k] = c;
            for (i, &dc) in d.coeffs.iter().enumerate() {
                rem[k + i] = (rem[k + i] + p - c * dc % p) % p;
            }
            while rem.last() == Some(&0) {
                rem.pop();
            }
        }
        (Self::from_residues(p, quo), Self::from_residues(p, rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }
}

/// `phi = num / den` over `F_p` with `gcd(num, den) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMapFp {
    num: PolyFp,
    den: PolyFp,
}

impl RationalMapFp {
    pub fn new(num: PolyFp, den: PolyFp) -> Result<Self> {
        if den.is_zero() {
            return invalid("rational map with zero denominator");
        }
        let g = num.gcd(&den);
        if g.degree() == Some(0) || num.is_zero() {
            let den = if num.is_zero() { PolyFp::from_residues(den.p, vec![1]) } else { den };
            return Ok(Self { num, den });
        }
        let num = num.div_rem(&g).0;
        let den = den.div_rem(&g).0;
        Ok(Self { num, den })
    }

    pub fn from_coeffs(ctx: &PrimeContext, num: &[i64], den: &[i64]) -> Result<Self> {
        Self::new(PolyFp::new(ctx, num), PolyFp::new(ctx, den))
    }

    pub fn polynomial(poly: PolyFp) -> Self {
        let p = poly.p;
        Self {
            num: poly,
            den: PolyFp::from_residues(p, vec![1]),
        }
    }

    pub fn identity(ctx: &PrimeContext) -> Self {
        Self::polynomial(PolyFp::x(ctx))
    }

    pub fn constant(ctx: &PrimeContext, c: i64) -> Self {
        Self::polynomial(PolyFp::constant(ctx, c))
    }

    pub fn numerator(&self) -> &PolyFp {
        &self.num
    }

    pub fn denominator(&self) -> &PolyFp {
        &self.den
    }

    pub fn is_constant(&self) -> bool {
        self.num.degree().unwrap_or(0) == 0 && self.den.degree() == Some(0)
    }

    /// `num(x) / den(x)`, `None` at poles.
    pub fn eval(&self, x: u64) -> Option<u64> {
        let p = self.num.p;
        let d = self.den.eval(x);
        if d == 0 {
            return None;
        }
        Some(self.num.eval(x) * fp::mod_pow(d, p - 2, p) % p)
    }
}

pub fn eval_rational(phi: &RationalMapFp, x: u64) -> Option<u64> {
    phi.eval(x)
}

/// Polynomial `sum c_{ij} U^i V^j` with complex coefficients; `coeffs[i][j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoly {
    pub coeffs: Vec<Vec<Complex64>>,
}

impl BivariatePoly {
    pub fn monomial(i: usize, j: usize) -> Self {
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); j + 1]; i + 1];
        coeffs[i][j] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut ui = Complex64::new(1.0, 0.0);
        for row in &self.coeffs {
            let mut vj = Complex64::new(1.0, 0.0);
            for c in row {
                acc += c * ui * vj;
                vj *= v;
            }
            ui *= u;
        }
        acc
    }
}

/// `K(n) = e(phi1(n)/p) chi(phi2(n))`, zero at poles of either map.
pub fn mixed_char_weight(
    chi: &DirichletCharacter,
    phi1: &RationalMapFp,
    phi2: &RationalMapFp,
) -> WeightTable {
    let ctx = chi.context();
    WeightTable::from_fn(
        ctx,
        format!("mixed-char[chi={}]", chi.index()),
        |n| match (phi1.eval(n), phi2.eval(n)) {
            (Some(a), Some(b)) => ctx.root(a) * chi.eval(b),
            _ => Complex64::new(0.0, 0.0),
        },
    )
}

/// `chi(n)` as a weight.
pub fn character_weight(chi: &DirichletCharacter) -> WeightTable {
    let label = if chi.is_real() {
        "legendre".to_string()
    } else {
        format!("character[k={}]", chi.index())
    };
    WeightTable::from_fn(chi.context(), label, |n| chi.eval(n))
}

pub fn legendre_weight(ctx: &PrimeContext) -> WeightTable {
    character_weight(&DirichletCharacter::legendre(ctx))
}

/// `e(n^2 / p)`.
pub fn quadratic_phase_weight(ctx: &PrimeContext) -> WeightTable {
    WeightTable::from_fn(ctx, "quadratic-phase", |n| ctx.root(ctx.mul(n, n)))
}

/// Classical Kloosterman sum `S(a, b; c)` for any modulus `c >= 1`.
///
/// # Panics
/// If `c == 0`.
pub fn kloosterman_sum(a: i64, b: i64, c: u64) -> f64 {
    assert!(c >= 1, "Kloosterman modulus must be positive");
    let a = fp::reduce(a, c);
    let b = fp::reduce(b, c);
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..c {
        let Some(xi) = fp::mod_inv(x as i64, c) else { continue };
        let k = ((a as u128 * x as u128 + b as u128 * xi as u128) % c as u128) as u64;
        acc += fp::e(k as f64 / c as f64);
    }
    debug_assert!(acc.im.abs() < 1e-9 * c as f64, "S({a},{b};{c}) has imaginary part {}", acc.im);
    acc.re
}

/// `S(a, n; p)` for every `n` in `0..p`.
pub fn kloosterman_row(ctx: &PrimeContext, a: u64) -> Vec<f64> {
    let p = ctx.p();
    let a = a % p;
    let roots = ctx.roots();
    (0..p)
        .into_par_iter()
        .map(|n| {
            (1..p)
                .map(|x| {
                    let k = (a * x + n * ctx.inv(x).unwrap_or(0)) % p;
                    roots[k as usize].re
                })
                .sum()
        })
        .collect()
}

/// `K(n) = S(a, n; p) / sqrt(p)`.
pub fn kloosterman_weight(ctx: &PrimeContext, a: u64) -> Result<WeightTable> {
    if a % ctx.p() == 0 {
        return invalid("Kloosterman weight needs a != 0 mod p");
    }
    let sp = ctx.sqrt_p();
    let values = kloosterman_row(ctx, a)
        .into_iter()
        .map(|s| Complex64::new(s / sp, 0.0))
        .collect();
    Ok(WeightTable::from_parts(ctx.clone(), values, format!("kloosterman[a={}]", a % ctx.p())))
}

/// Normalized hyper-Kloosterman sums `Kl_m(a; p)`; index 0 holds 0.
///
/// Built from the convolution `S_m(a) = sum_{t != 0} S_{m-1}(a / t) e(t/p)`
/// starting at `S_1(a) = e(a/p)`.
pub fn hyper_kloosterman_table(ctx: &PrimeContext, m: u32) -> Result<WeightTable> {
    if m < 2 {
        return invalid(format!("hyper-Kloosterman needs m >= 2, got {m}"));
    }
    let p = ctx.p();
    let mut level: Vec<Complex64> = (0..p)
        .map(|a| if a == 0 { Complex64::new(0.0, 0.0) } else { ctx.root(a) })
        .collect();
    for _ in 1..m {
        let prev = &level;
        level = (0..p)
            .into_par_iter()
            .map(|a| {
                if a == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                (1..p)
                    .map(|t| prev[ctx.mul(a, ctx.inv(t).unwrap()) as usize] * ctx.root(t))
                    .sum()
            })
            .collect();
    }
    let norm = (p as f64).powf(-((m - 1) as f64) / 2.0);
    let values = level.into_iter().map(|v| v * norm).collect();
    Ok(WeightTable::from_parts(ctx.clone(), values, format!("hyper-kloosterman[m={m}]")))
}

/// `K(n) = Phi(Kl_m(phi(n)), conj Kl_m(phi(n)))` where `phi(n)` is defined and
/// nonzero, and 0 elsewhere.
pub fn hk_composite_weight(
    ctx: &PrimeContext,
    m: u32,
    phi: &RationalMapFp,
    big_phi: &BivariatePoly,
) -> Result<WeightTable> {
    if phi.is_constant() {
        return invalid("hk-composite weight needs a non-constant phi");
    }
    let kl = hyper_kloosterman_table(ctx, m)?;
    Ok(WeightTable::from_fn(ctx, format!("hk-composite[m={m}]"), |n| {
        match phi.eval(n) {
            Some(y) if y != 0 => {
                let u = kl.values()[y as usize];
                big_phi.eval(u, u.conj())
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }))
}

/// Fiber counts `#{y : phi(y) = x}` for every `x`.
pub fn fiber_counts(ctx: &PrimeContext, phi: &PolyFp) -> Vec<i64> {
    let mut counts = vec![0i64; ctx.p() as usize];
    for y in 0..ctx.p() {
        counts[phi.eval(y) as usize] += 1;
    }
    counts
}

/// `K(x) = #{y : phi(y) = x} - 1`.
pub fn fiber_count_weight(ctx: &PrimeContext, phi: &PolyFp) -> WeightTable {
    let values = fiber_counts(ctx, phi)
        .into_iter()
        .map(|c| Complex64::new((c - 1) as f64, 0.0))
        .collect();
    WeightTable::from_parts(ctx.clone(), values, "fiber-count".into())
}

/// `K'(n) = -p^{-1/2} sum_x e(n phi(x) / p)` for `n != 0`, and `K'(0) = 0`.
pub fn dual_fiber_weight(ctx: &PrimeContext, phi: &PolyFp) -> WeightTable {
    let p = ctx.p();
    let images: Vec<u64> = (0..p).map(|x| phi.eval(x)).collect();
    let sp = ctx.sqrt_p();
    let values = (0..p)
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let s: Complex64 = images.iter().map(|&y| ctx.root(ctx.mul(n, y))).sum();
            -s / sp
        })
        .collect();
    WeightTable::from_parts(ctx.clone(), values, "dual-fiber".into())
}

/// `p^{1/2} delta_{n = u}`.
pub fn delta_weight(ctx: &PrimeContext, u: u64) -> WeightTable {
    let u = u % ctx.p();
    let sp = ctx.sqrt_p();
    WeightTable::from_fn(ctx, format!("dirac[u={u}]"), |n| {
        Complex64::new(if n == u { sp } else { 0.0 }, 0.0)
    })
}

/// `e(a n / p)`.
pub fn additive_weight(ctx: &PrimeContext, a: u64) -> WeightTable {
    let a = a % ctx.p();
    WeightTable::from_fn(ctx, format!("additive[a={a}]"), |n| ctx.root(ctx.mul(a, n)))
}

/// Integer-coefficient rational function, as carried by weight descriptors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSpec {
    pub num: Vec<i64>,
    #[serde(default = "one")]
    pub den: Vec<i64>,
}

fn one() -> Vec<i64> {
    vec![1]
}

impl RationalSpec {
    pub fn poly(num: Vec<i64>) -> Self {
        Self { num, den: one() }
    }

    pub fn build(&self, ctx: &PrimeContext) -> Result<RationalMapFp> {
        RationalMapFp::from_coeffs(ctx, &self.num, &self.den)
    }
}

/// Prime-independent description of a weight; serialized as `{kind, ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightDescriptor {
    Dirac {
        u: i64,
    },
    Additive {
        a: i64,
    },
    MixedChar {
        /// Character index relative to the smallest primitive root.
        chi: u64,
        phi1: RationalSpec,
        phi2: RationalSpec,
    },
    Kloosterman {
        #[serde(default = "one_i64")]
        a: i64,
    },
    HyperKloosterman {
        m: u32,
    },
    HkComposite {
        m: u32,
        phi: RationalSpec,
        big_phi: BivariatePoly,
    },
    FiberCount {
        phi: Vec<i64>,
    },
    DualFiber {
        phi: Vec<i64>,
    },
    Legendre,
}

fn one_i64() -> i64 {
    1
}

impl WeightDescriptor {
    pub fn build(&self, ctx: &PrimeContext) -> Result<WeightTable> {
        let p = ctx.p();
        Ok(match self {
            Self::Dirac { u } => delta_weight(ctx, ctx.reduce(*u)),
            Self::Additive { a } => additive_weight(ctx, ctx.reduce(*a)),
            Self::MixedChar { chi, phi1, phi2 } => {
                let chi = DirichletCharacter::new(ctx, chi % (p - 1))?;
                mixed_char_weight(&chi, &phi1.build(ctx)?, &phi2.build(ctx)?)
            }
            Self::Kloosterman { a } => kloosterman_weight(ctx, ctx.reduce(*a))?,
            Self::HyperKloosterman { m } => hyper_kloosterman_table(ctx, *m)?,
            Self::HkComposite { m, phi, big_phi } => {
                hk_composite_weight(ctx, *m, &phi.build(ctx)?, big_phi)?
            }
            Self::FiberCount { phi } => fiber_count_weight(ctx, &nonconstant(ctx, phi)?),
            Self::DualFiber { phi } => dual_fiber_weight(ctx, &nonconstant(ctx, phi)?),
            Self::Legendre => legendre_weight(ctx),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Dirac { u } => format!("dirac[u={u}]"),
            Self::Additive { a } => format!("additive[a={a}]"),
            Self::MixedChar { chi, .. } => format!("mixed-char[chi={chi}]"),
            Self::Kloosterman { a } => format!("kloosterman[a={a}]"),
            Self::HyperKloosterman { m } => format!("hyper-kloosterman[m={m}]"),
            Self::HkComposite { m, .. } => format!("hk-composite[m={m}]"),
            Self::FiberCount { phi } => format!("fiber-count{phi:?}"),
            Self::DualFiber { phi } => format!("dual-fiber{phi:?}"),
            Self::Legendre => "legendre".into(),
        }
    }
}

fn nonconstant(ctx: &PrimeContext, coeffs: &[i64]) -> Result<PolyFp> {
    let phi = PolyFp::new(ctx, coeffs);
    match phi.degree() {
        Some(d) if d >= 1 => Ok(phi),
        _ => invalid(format!("polynomial {coeffs:?} is constant modulo {}", ctx.p())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::dft;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn table_norms() {
        let ctx = PrimeContext::new(7).unwrap();
        assert!(WeightTable::new(&ctx, vec![c(1.0); 6], "short").is_err());
        let d = delta_weight(&ctx, 3);
        assert!((d.l2_norm() - 1.0).abs() < 1e-12);
        assert!((d.sup_norm() - 7f64.sqrt()).abs() < 1e-12);
        assert!(d.l2_norm() <= d.sup_norm());
        let a = additive_weight(&ctx, 0);
        assert!(a.values().iter().all(|v| (v - c(1.0)).norm() < 1e-15));
    }

    #[test]
    fn rational_maps() {
        let ctx = PrimeContext::new(7).unwrap();
        let id = RationalMapFp::identity(&ctx);
        for x in 0..7 {
            assert_eq!(id.eval(x), Some(x));
        }
        let recip = RationalMapFp::from_coeffs(&ctx, &[1], &[0, 1]).unwrap();
        assert_eq!(recip.eval(0), None);
        let phi = RationalMapFp::from_coeffs(&ctx, &[1, 1], &[-2, 1]).unwrap();
        assert_eq!(phi.eval(2), None);
        assert_eq!(phi.eval(3), Some(4));
        assert!(RationalMapFp::from_coeffs(&ctx, &[1], &[0]).is_err());
    }

    #[test]
    fn rational_maps_cancel_common_factors() {
        let ctx = PrimeContext::new(11).unwrap();
        // (X^2 - 1) / (X - 1) = X + 1, no pole at 1 after reduction
        let phi = RationalMapFp::from_coeffs(&ctx, &[-1, 0, 1], &[-1, 1]).unwrap();
        assert_eq!(phi.denominator().degree(), Some(0));
        assert_eq!(phi.eval(1), Some(2));
        // common factor that only appears mod p: X + 12 == X + 1 (mod 11)
        let psi = RationalMapFp::from_coeffs(&ctx, &[12, 1], &[1, 1]).unwrap();
        assert!(psi.is_constant());
    }

    #[test]
    fn mixed_character_special_cases() {
        let ctx = PrimeContext::new(13).unwrap();
        let triv = DirichletCharacter::new(&ctx, 0).unwrap();
        let add = mixed_char_weight(
            &triv,
            &RationalMapFp::from_coeffs(&ctx, &[0, 5], &[1]).unwrap(),
            &RationalMapFp::constant(&ctx, 1),
        );
        let expect = additive_weight(&ctx, 5);
        let quad = mixed_char_weight(
            &triv,
            &RationalMapFp::from_coeffs(&ctx, &[0, 0, 1], &[1]).unwrap(),
            &RationalMapFp::constant(&ctx, 1),
        );
        let leg = mixed_char_weight(
            &DirichletCharacter::legendre(&ctx),
            &RationalMapFp::constant(&ctx, 0),
            &RationalMapFp::identity(&ctx),
        );
        for n in 0..13u64 {
            assert!((add.values()[n as usize] - expect.values()[n as usize]).norm() < 1e-12);
            assert!((quad.values()[n as usize] - ctx.root(n * n)).norm() < 1e-12);
            assert!((leg.values()[n as usize] - c(ctx.legendre(n) as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn kloosterman_values() {
        let s = kloosterman_sum(1, 1, 5);
        let direct = 2.0 + 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
        assert!((s - direct).abs() < 1e-12);
        assert!((s - 0.381_966_011_250_105).abs() < 1e-9);
        for p in [5u64, 7, 11, 13] {
            for a in 1..p as i64 {
                assert!((kloosterman_sum(a, 0, p) + 1.0).abs() < 1e-9);
            }
        }
        let ctx = PrimeContext::new(5).unwrap();
        let k = kloosterman_weight(&ctx, 1).unwrap();
        assert!((k.values()[1].re - 0.170_820_393_249_936_9).abs() < 1e-9);
        assert!(kloosterman_weight(&ctx, 0).is_err());
        assert!(k.values().iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn kloosterman_fourier_transform() {
        let ctx = PrimeContext::new(17).unwrap();
        let kh = dft(&kloosterman_weight(&ctx, 1).unwrap());
        assert!(kh.values()[0].norm() < 1e-10);
        for v in 1..17 {
            let vb = ctx.inv(v).unwrap();
            assert!((kh.values()[v as usize] - ctx.root(ctx.neg(vb))).norm() < 1e-10);
        }
    }

    #[test]
    fn hyper_kloosterman_matches_brute_force() {
        let ctx = PrimeContext::new(7).unwrap();
        let kl3 = hyper_kloosterman_table(&ctx, 3).unwrap();
        // x1 x2 x3 = 1 over 36 pairs (x1, x2)
        let mut s = Complex64::new(0.0, 0.0);
        for x1 in 1..7u64 {
            for x2 in 1..7u64 {
                let x3 = ctx.inv(x1 * x2 % 7).unwrap();
                s += ctx.root(x1 + x2 + x3);
            }
        }
        assert!((kl3.values()[1] - s / 7.0).norm() < 1e-12);
        assert_eq!(kl3.values()[0], Complex64::new(0.0, 0.0));

        let kl2 = hyper_kloosterman_table(&ctx, 2).unwrap();
        let k = kloosterman_weight(&ctx, 1).unwrap();
        for a in 1..7 {
            assert!((kl2.values()[a] - k.values()[a]).norm() < 1e-12);
        }
        assert!(hyper_kloosterman_table(&ctx, 1).is_err());
    }

    #[test]
    fn hk_composites() {
        let ctx = PrimeContext::new(5).unwrap();
        let id = RationalMapFp::identity(&ctx);
        let u2 = hk_composite_weight(&ctx, 2, &id, &BivariatePoly::monomial(2, 0)).unwrap();
        assert!((u2.values()[1].re - 0.029_179_606_750_063_1).abs() < 1e-9);
        let uv = hk_composite_weight(&ctx, 2, &id, &BivariatePoly::monomial(1, 1)).unwrap();
        for n in 1..5i64 {
            let s = kloosterman_sum(1, n, 5);
            assert!((uv.values()[n as usize] - c(s * s / 5.0)).norm() < 1e-12);
        }
        let u = hk_composite_weight(&ctx, 3, &id, &BivariatePoly::monomial(1, 0)).unwrap();
        let kl = hyper_kloosterman_table(&ctx, 3).unwrap();
        assert_eq!(u.values(), kl.values());
        assert!(hk_composite_weight(&ctx, 2, &RationalMapFp::constant(&ctx, 3), &BivariatePoly::monomial(1, 0)).is_err());
    }

    #[test]
    fn fiber_counting() {
        let ctx = PrimeContext::new(7).unwrap();
        let zero = fiber_count_weight(&ctx, &PolyFp::x(&ctx));
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
        let sq = fiber_count_weight(&ctx, &PolyFp::new(&ctx, &[0, 0, 1]));
        let expect = [0.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0];
        for (v, e) in sq.values().iter().zip(expect) {
            assert_eq!(v.re, e);
        }
    }

    #[test]
    fn dual_fiber_is_negated_fourier_transform() {
        let ctx = PrimeContext::new(7).unwrap();
        let phi = PolyFp::new(&ctx, &[0, 0, 1]);
        let dual = dual_fiber_weight(&ctx, &phi);
        let g: Complex64 = (0..7u64).map(|x| ctx.root(x * x)).sum();
        assert!((dual.values()[1] + g / 7f64.sqrt()).norm() < 1e-12);
        assert!((dual.values()[1].norm() - 1.0).abs() < 1e-12);
        let f = dft(&fiber_count_weight(&ctx, &phi));
        for n in 1..7 {
            assert!((dual.values()[n] + f.values()[n]).norm() < 1e-12);
        }
        let lin = dual_fiber_weight(&ctx, &PolyFp::x(&ctx));
        assert!(lin.values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn descriptors_round_trip() {
        let ctx = PrimeContext::new(11).unwrap();
        let descs = vec![
            WeightDescriptor::Dirac { u: 2 },
            WeightDescriptor::Additive { a: 3 },
            WeightDescriptor::MixedChar {
                chi: 5,
                phi1: RationalSpec::poly(vec![0, 0, 1]),
                phi2: RationalSpec { num: vec![1, 1], den: vec![-2, 1] },
            },
            WeightDescriptor::Kloosterman { a: 1 },
            WeightDescriptor::HyperKloosterman { m: 3 },
            WeightDescriptor::HkComposite {
                m: 2,
                phi: RationalSpec::poly(vec![0, 1]),
                big_phi: BivariatePoly::monomial(1, 1),
            },
            WeightDescriptor::FiberCount { phi: vec![0, 0, 1] },
            WeightDescriptor::DualFiber { phi: vec![1, 0, 0, 1] },
            WeightDescriptor::Legendre,
        ];
        for d in descs {
            let s = serde_json::to_string(&d).unwrap();
            let back: WeightDescriptor = serde_json::from_str(&s).unwrap();
            assert_eq!(back, d);
            assert_eq!(d.build(&ctx).unwrap().p(), 11);
        }
        let parsed: WeightDescriptor = serde_json::from_str(r#"{"kind":"kloosterman"}"#).unwrap();
        assert_eq!(parsed, WeightDescriptor::Kloosterman { a: 1 });
        assert!(WeightDescriptor::FiberCount { phi: vec![3] }.build(&ctx).is_err());
    }
}
