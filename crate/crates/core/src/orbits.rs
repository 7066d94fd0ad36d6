//! Hecke orbits `(tau + t)/p` on the modular surface, weighted by a trace
//! function, and their comparison with the hyperbolic measure.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::P1Point;
use crate::error::{invalid, Result};
use crate::fp::{self, dft, PrimeContext};
use crate::modular::CuspFormCoeffs;
use crate::weights::{fiber_counts, PolyFp, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    pub x: f64,
    pub y: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0 && x.is_finite() && y.is_finite()) {
            return invalid(format!("({x}, {y}) is not in the upper half plane"));
        }
        Ok(Self { x, y })
    }

    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// `gamma_t tau`: `(tau + t)/p` for finite `t`, `p tau` for `t = infinity`.
pub fn hecke_point(p: u64, t: P1Point, tau: UpperHalfPoint) -> UpperHalfPoint {
    let pf = p as f64;
    match t {
        P1Point::Finite(t) => UpperHalfPoint {
            x: (tau.x + t as f64) / pf,
            y: tau.y / pf,
        },
        P1Point::Infinity => UpperHalfPoint {
            x: tau.x * pf,
            y: tau.y * pf,
        },
    }
}

/// Element of `SL_2(Z)` acting by `z -> (a z + b)/(c z + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sl2z {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2z {
    pub const IDENTITY: Self = Self { a: 1, b: 0, c: 0, d: 1 };

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    /// `a x + b` and `c x + d` are formed with a single rounding each.
    pub fn act(&self, z: Complex64) -> Complex64 {
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        let num = Complex64::new(a.mul_add(z.re, b), a * z.im);
        let den = Complex64::new(c.mul_add(z.re, d), c * z.im);
        num / den
    }

    fn translate(self, n: i64) -> Self {
        Self {
            a: self.a + n * self.c,
            b: self.b + n * self.d,
            ..self
        }
    }

    fn invert(self) -> Self {
        Self {
            a: -self.c,
            b: -self.d,
            c: self.a,
            d: self.b,
        }
    }
}

/// Reduce into `{|x| <= 1/2, |z| >= 1}`, returning the point and the matrix
/// `g` with `g z_in = z_out`. Boundary points are sent to `x <= 0`.
pub fn reduce_with_matrix(z: UpperHalfPoint) -> (UpperHalfPoint, Sl2z) {
    let (mut x, mut y) = (z.x, z.y);
    let mut g = Sl2z::IDENTITY;
    loop {
        let n = (x + 0.5).floor();
        if n != 0.0 {
            x -= n;
            g = g.translate(-(n as i64));
        }
        let r2 = x * x + y * y;
        if r2 < 1.0 {
            x = -x / r2;
            y /= r2;
            g = g.invert();
        } else {
            if r2 == 1.0 && x > 0.0 {
                x = -x;
                g = g.invert();
            }
            break;
        }
    }
    (UpperHalfPoint { x: x + 0.0, y }, g)
}

pub fn reduce_fundamental(z: UpperHalfPoint) -> UpperHalfPoint {
    reduce_with_matrix(z).0
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Atom {
    pub point: UpperHalfPoint,
    pub weight: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistedMeasure {
    pub p: u64,
    pub tau: UpperHalfPoint,
    pub weight: String,
    /// Inclusive integer interval `I`; `None` for the full orbit with `t = infinity`.
    pub interval: Option<(u64, u64)>,
    pub atoms: Vec<Atom>,
}

impl TwistedMeasure {
    pub fn total_mass(&self) -> Complex64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,re,im\n");
        for a in &self.atoms {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                a.point.x, a.point.y, a.weight.re, a.weight.im
            );
        }
        s
    }

    /// Scatter plot over the fundamental domain, blue for positive real part,
    /// red for negative, opacity by `|w|`.
    pub fn to_svg(&self) -> String {
        const W: f64 = 480.0;
        const H: f64 = 720.0;
        const Y_TOP: f64 = 4.5;
        const Y_BOT: f64 = 0.8;
        let sx = |x: f64| (x + 0.6) / 1.2 * W;
        let sy = |y: f64| (Y_TOP - y.min(Y_TOP)) / (Y_TOP - Y_BOT) * H;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let mut path = format!("M {:.2} {:.2}", sx(-0.5), sy(Y_TOP));
        for i in 0..=60 {
            let x = -0.5 + i as f64 / 60.0;
            let _ = write!(path, " L {:.2} {:.2}", sx(x), sy((1.0 - x * x).sqrt()));
        }
        let _ = write!(path, " L {:.2} {:.2}", sx(0.5), sy(Y_TOP));
        let _ = writeln!(s, r#"<path d="{path}" fill="none" stroke="black" stroke-width="1.5"/>"#);
        let wmax = self.atoms.iter().map(|a| a.weight.norm()).fold(0.0, f64::max);
        for a in &self.atoms {
            let op = if wmax > 0.0 { 0.15 + 0.85 * a.weight.norm() / wmax } else { 0.0 };
            let color = if a.weight.re >= 0.0 { "#1f4fd1" } else { "#d12f1f" };
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{color}" fill-opacity="{op:.3}"/>"#,
                sx(a.point.x),
                sy(a.point.y)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn check_interval(p: u64, interval: (u64, u64)) -> Result<usize> {
    let (lo, hi) = interval;
    if lo < 1 || hi > p || lo > hi {
        return invalid(format!("interval [{lo}, {hi}] must be a non-empty subset of [1, {p}]"));
    }
    Ok((hi - lo + 1) as usize)
}

/// `(1/|I|) sum_{t in I} K(t) delta_{(tau + t)/p}`, reduced to the fundamental domain.
pub fn twisted_measure(tau: UpperHalfPoint, k: &WeightTable, interval: (u64, u64)) -> Result<TwistedMeasure> {
    let p = k.p();
    let len = check_interval(p, interval)?;
    let scale = 1.0 / len as f64;
    let atoms = (interval.0..=interval.1)
        .into_par_iter()
        .map(|t| Atom {
            point: reduce_fundamental(hecke_point(p, P1Point::Finite(t), tau)),
            weight: k.at(t as i64) * scale,
        })
        .collect();
    Ok(TwistedMeasure {
        p,
        tau,
        weight: k.label().to_string(),
        interval: Some(interval),
        atoms,
    })
}

/// The full Hecke orbit, `p + 1` atoms of weight `1/(p + 1)` including `t = infinity`.
pub fn untwisted_measure(p: u64, tau: UpperHalfPoint) -> Result<TwistedMeasure> {
    if !fp::is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    let w = Complex64::new(1.0 / (p + 1) as f64, 0.0);
    let atoms = (0..=p)
        .into_par_iter()
        .map(|t| {
            let t = if t == p { P1Point::Infinity } else { P1Point::Finite(t) };
            Atom {
                point: reduce_fundamental(hecke_point(p, t, tau)),
                weight: w,
            }
        })
        .collect();
    Ok(TwistedMeasure {
        p,
        tau,
        weight: "untwisted".into(),
        interval: None,
        atoms,
    })
}

/// `(1/|I|) sum_{x : phi(x) in I} delta_{(tau + phi(x))/p}`, one atom per value
/// with multiplicity the fiber size.
pub fn poly_twisted_measure(
    ctx: &PrimeContext,
    tau: UpperHalfPoint,
    phi: &PolyFp,
    interval: (u64, u64),
) -> Result<TwistedMeasure> {
    let p = ctx.p();
    if phi.degree().unwrap_or(0) < 1 {
        return invalid("polynomial must be non-constant");
    }
    let len = check_interval(p, interval)?;
    let counts = fiber_counts(ctx, phi);
    let scale = 1.0 / len as f64;
    let atoms = (interval.0..=interval.1)
        .filter(|&t| counts[(t % p) as usize] > 0)
        .map(|t| Atom {
            point: reduce_fundamental(hecke_point(p, P1Point::Finite(t), tau)),
            weight: Complex64::new(counts[(t % p) as usize] as f64 * scale, 0.0),
        })
        .collect();
    Ok(TwistedMeasure {
        p,
        tau,
        weight: format!("poly{:?}", phi.coeffs()),
        interval: Some(interval),
        atoms,
    })
}

/// `{x0 <= x < x1, y0 <= y < y1}` intersected with the fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    /// `f64::INFINITY` for a cusp neighbourhood.
    #[serde(with = "infinite_as_null")]
    pub y1: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || x0 < -0.5 || x1 > 0.5 || y0 < 0.0 || x0.is_nan() || y1.is_nan() {
            return invalid(format!("degenerate region x in [{x0}, {x1}), y in [{y0}, {y1})"));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn whole() -> Self {
        Self {
            x0: -0.5,
            x1: 0.5,
            y0: 0.0,
            y1: f64::INFINITY,
        }
    }

    /// Points with `x = 1/2` are included when the region reaches the right edge.
    pub fn contains(&self, z: &UpperHalfPoint) -> bool {
        let right = if self.x1 >= 0.5 { z.x <= self.x1 } else { z.x < self.x1 };
        z.x >= self.x0 && right && z.y >= self.y0 && z.y < self.y1
    }

    /// `(3/pi) int dx dy / y^2` over the region, by composite Simpson in `x`.
    pub fn hyperbolic_mass(&self) -> f64 {
        const N: usize = 4096;
        let inv_top = if self.y1.is_finite() { 1.0 / self.y1 } else { 0.0 };
        let f = |x: f64| {
            let lower = self.y0.max((1.0 - x * x).max(0.0).sqrt());
            (1.0 / lower - inv_top).max(0.0)
        };
        let h = (self.x1 - self.x0) / N as f64;
        let mut s = f(self.x0) + f(self.x1);
        for i in 1..N {
            s += f(self.x0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        3.0 / std::f64::consts::PI * s * h / 3.0
    }
}

/// The nine reporting regions: `x` halves times `y` bands
/// `[arc, 1.25), [1.25, 1.6), [1.6, 2.2), [2.2, 4)`, then the cusp `y >= 4`.
pub fn standard_partition() -> Vec<(String, Region)> {
    let cuts = [0.0, 1.25, 1.6, 2.2, 4.0];
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        for (side, x0, x1) in [("L", -0.5, 0.0), ("R", 0.0, 0.5)] {
            out.push((format!("{side}[{},{})", w[0], w[1]), Region { x0, x1, y0: w[0], y1: w[1] }));
        }
    }
    out.push((
        "cusp[4,inf)".into(),
        Region {
            x0: -0.5,
            x1: 0.5,
            y0: 4.0,
            y1: f64::INFINITY,
        },
    ));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxPairing {
    pub label: String,
    pub region: Region,
    /// `mu(box)`.
    pub mass: Complex64,
    /// Hyperbolic probability of the box.
    pub hyperbolic: f64,
    /// `|mu(box) - mu(total) * hyperbolic|`.
    pub discrepancy: f64,
}

pub fn pair_with_box(mu: &TwistedMeasure, label: impl Into<String>, region: &Region) -> BoxPairing {
    let mass: Complex64 = mu.atoms.iter().filter(|a| region.contains(&a.point)).map(|a| a.weight).sum();
    let hyperbolic = region.hyperbolic_mass();
    BoxPairing {
        label: label.into(),
        region: *region,
        mass,
        hyperbolic,
        discrepancy: (mass - mu.total_mass() * hyperbolic).norm(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub p: u64,
    pub tau: UpperHalfPoint,
    pub weight: String,
    pub atom_count: usize,
    pub total_mass: Complex64,
    pub boxes: Vec<BoxPairing>,
    pub max_discrepancy: f64,
    /// `max |mu(box)|` over the partition.
    pub max_pairing: f64,
}

pub fn orbit_report(mu: &TwistedMeasure) -> OrbitReport {
    let boxes: Vec<BoxPairing> = standard_partition()
        .iter()
        .map(|(l, r)| pair_with_box(mu, l.clone(), r))
        .collect();
    OrbitReport {
        p: mu.p,
        tau: mu.tau,
        weight: mu.weight.clone(),
        atom_count: mu.atoms.len(),
        total_mass: mu.total_mass(),
        max_discrepancy: boxes.iter().map(|b| b.discrepancy).fold(0.0, f64::max),
        max_pairing: boxes.iter().map(|b| b.mass.norm()).fold(0.0, f64::max),
        boxes,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierSideReport {
    pub p: u64,
    pub terms: usize,
    /// `sum_{t in I} K(t) g((tau + t)/p)` with `g(z) = sum_{n <= L} rho(n) e(n z)`.
    pub orbit_side: Complex64,
    /// `sum_n rho(n) e(n tau / p) sqrt(p) (K 1_I)^(n)`.
    pub transform_side: Complex64,
    /// The same with `(K 1_I)^` expanded as `Khat` convolved with the interval's geometric series.
    pub convolution_side: Complex64,
    pub relative_discrepancy: f64,
}

/// `sum_{t=lo}^{hi} e(m t / p)` in closed form.
fn interval_series(ctx: &PrimeContext, m: u64, lo: u64, hi: u64) -> Complex64 {
    let m = m % ctx.p();
    let len = hi - lo + 1;
    if m == 0 {
        return Complex64::new(len as f64, 0.0);
    }
    let start = ctx.root(ctx.mul(m, lo % ctx.p()));
    let num = Complex64::new(1.0, 0.0) - ctx.root(ctx.mul(m, len % ctx.p()));
    let den = Complex64::new(1.0, 0.0) - ctx.root(m);
    start * num / den
}

/// Evaluate the orbit sum of the truncated series `g` three ways.
pub fn fourier_side_check(
    tau: UpperHalfPoint,
    k: &WeightTable,
    interval: (u64, u64),
    f: &CuspFormCoeffs,
    terms: usize,
) -> Result<FourierSideReport> {
    let ctx = k.context();
    let p = ctx.p();
    check_interval(p, interval)?;
    if terms == 0 {
        return invalid("need at least one term");
    }
    if terms > f.n_max() {
        return Err(crate::Error::InsufficientCoefficients {
            required: terms,
            available: f.n_max(),
        });
    }
    let (lo, hi) = interval;
    let pf = p as f64;
    let tau_c = tau.as_complex();
    let ez = |n: usize, z: Complex64| (Complex64::new(0.0, 2.0 * std::f64::consts::PI * n as f64) * z).exp();

    let orbit_side: Complex64 = (lo..=hi)
        .map(|t| {
            let z = (tau_c + t as f64) / pf;
            let g: Complex64 = (1..=terms).map(|n| ez(n, z) * f.rho(n)).sum();
            k.at(t as i64) * g
        })
        .sum();

    let ki = WeightTable::from_fn(ctx, "restricted", |t| {
        let rep = if t == 0 { p } else { t };
        if (lo..=hi).contains(&rep) {
            k.values()[t as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let ki_hat = dft(&ki);
    let sp = ctx.sqrt_p();
    let transform_side: Complex64 = (1..=terms)
        .map(|n| ez(n, tau_c / pf) * f.rho(n) * ki_hat.values()[n % p as usize] * sp)
        .sum();

    let khat = dft(k);
    let convolution_side: Complex64 = (1..=terms)
        .map(|n| {
            let nn = (n as u64) % p;
            let conv: Complex64 = (0..p)
                .map(|h| khat.values()[h as usize] * interval_series(ctx, ctx.sub(nn, h), lo, hi))
                .sum::<Complex64>()
                / sp;
            ez(n, tau_c / pf) * f.rho(n) * conv
        })
        .sum();

    let scale = orbit_side.norm().max(transform_side.norm()).max(1e-300);
    let relative_discrepancy = [
        (orbit_side - transform_side).norm(),
        (orbit_side - convolution_side).norm(),
        (transform_side - convolution_side).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
        / scale;
    Ok(FourierSideReport {
        p,
        terms,
        orbit_side,
        transform_side,
        convolution_side,
        relative_discrepancy: if orbit_side.norm() == 0.0 && transform_side.norm() == 0.0 {
            0.0
        } else {
            relative_discrepancy
        },
    })
}
