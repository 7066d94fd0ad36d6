use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fp::{self, Fp2Element, PrimeContext};

/// A point of `P^1(F_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum P1Point {
    Finite(u64),
    Infinity,
}

/// Canonical representative of a class in `PGL_2(F_p)`: the first nonzero of
/// `(a, b, c, d)` is 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PglElement {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl fmt::Debug for PglElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for PglElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.a, self.b, self.c, self.d].serialize(s)
    }
}

impl PglElement {
    /// Normalize an invertible integer matrix modulo `p`.
    pub fn new(p: u64, a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let [a, b, c, d] = [a, b, c, d].map(|x| fp::reduce(x, p));
        let det = (a * d % p + p - b * c % p) % p;
        if det == 0 {
            return invalid(format!("matrix ({a},{b};{c},{d}) is singular mod {p}"));
        }
        let lead = if a != 0 { a } else { b };
        let s = fp::mod_pow(lead, p - 2, p);
        Ok(Self {
            a: a * s % p,
            b: b * s % p,
            c: c * s % p,
            d: d * s % p,
        })
    }

    pub fn identity() -> Self {
        Self { a: 1, b: 0, c: 0, d: 1 }
    }

    /// The Weyl element `w = (0 1; 1 0)`.
    pub fn weyl() -> Self {
        Self { a: 0, b: 1, c: 1, d: 0 }
    }

    pub fn det(&self, p: u64) -> u64 {
        (self.a * self.d % p + p - self.b * self.c % p) % p
    }

    pub fn trace(&self, p: u64) -> u64 {
        (self.a + self.d) % p
    }

    pub fn is_scalar(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d
    }

    /// `(a - d)^2 + 4 b c`, the discriminant of the fixed-point equation.
    pub fn discriminant(&self, p: u64) -> u64 {
        let amd = (self.a + p - self.d) % p;
        (amd * amd + 4 * (self.b * self.c % p)) % p
    }

    /// In `B u Bw u wB`: fixes infinity, sends 0 to infinity, or infinity to 0.
    pub fn is_triangular(&self) -> bool {
        self.c == 0 || self.a == 0 || self.d == 0
    }

    pub fn mul(&self, other: &Self, p: u64) -> Self {
        let m = |x: u64, y: u64, z: u64, w: u64| ((x * y + z * w) % p) as i64;
        Self::new(
            p,
            m(self.a, other.a, self.b, other.c),
            m(self.a, other.b, self.b, other.d),
            m(self.c, other.a, self.d, other.c),
            m(self.c, other.b, self.d, other.d),
        )
        .expect("product of invertible matrices")
    }

    pub fn inverse(&self, p: u64) -> Self {
        let neg = |x: u64| ((p - x) % p) as i64;
        Self::new(p, self.d as i64, neg(self.b), neg(self.c), self.a as i64)
            .expect("inverse of invertible matrix")
    }

    /// Homography `z -> (a z + b) / (c z + d)`; `None` when the image is infinity.
    pub fn act(&self, p: u64, z: u64) -> Option<u64> {
        let num = (self.a * z + self.b) % p;
        let den = (self.c * z + self.d) % p;
        if den == 0 {
            return None;
        }
        Some(num * fp::mod_pow(den, p - 2, p) % p)
    }

    pub fn act_p1(&self, p: u64, z: P1Point) -> P1Point {
        match z {
            P1Point::Finite(z) => self.act(p, z).map_or(P1Point::Infinity, P1Point::Finite),
            P1Point::Infinity if self.c == 0 => P1Point::Infinity,
            P1Point::Infinity => P1Point::Finite(self.a * fp::mod_pow(self.c, p - 2, p) % p),
        }
    }

    /// Action on `P^1(F_{p^2})`, points given as `Some(x)` or `None` for infinity.
    pub fn act_fp2(&self, ctx: &PrimeContext, z: Option<Fp2Element>) -> Option<Fp2Element> {
        let base = |x: u64| Fp2Element::from_base(ctx, x);
        match z {
            None if self.c == 0 => None,
            None => Some(base(self.a) * base(self.c).inv().expect("c != 0")),
            Some(z) => {
                let den = base(self.c) * z + base(self.d);
                den.inv().map(|di| (base(self.a) * z + base(self.b)) * di)
            }
        }
    }

    /// Number of classes, `p^3 - p`.
    pub fn group_order(p: u64) -> u64 {
        p * p * p - p
    }

    /// Position in the enumeration order of [`pgl_enumerate`].
    pub fn index(&self, p: u64) -> u64 {
        if self.a == 1 {
            // d ranges over the p - 1 values != bc, skip the forbidden one
            let bc = self.b * self.c % p;
            let dpos = if self.d > bc { self.d - 1 } else { self.d };
            (self.b * p + self.c) * (p - 1) + dpos
        } else {
            p * p * (p - 1) + (self.c - 1) * p + self.d
        }
    }

    pub fn from_index(p: u64, idx: u64) -> Self {
        let upper = p * p * (p - 1);
        if idx < upper {
            let dpos = idx % (p - 1);
            let bc_idx = idx / (p - 1);
            let (b, c) = (bc_idx / p, bc_idx % p);
            let bc = b * c % p;
            let d = if dpos >= bc { dpos + 1 } else { dpos };
            Self { a: 1, b, c, d }
        } else {
            let r = idx - upper;
            Self {
                a: 0,
                b: 1,
                c: r / p + 1,
                d: r % p,
            }
        }
    }
}

/// Every class of `PGL_2(F_p)` exactly once, in a fixed order.
///
/// Works for any prime including 2.
pub fn pgl_enumerate(p: u64) -> impl Iterator<Item = PglElement> + Clone {
    (0..PglElement::group_order(p)).map(move |i| PglElement::from_index(p, i))
}

pub fn mobius_action(ctx: &PrimeContext, g: &PglElement, z: u64) -> Option<u64> {
    g.act(ctx.p(), z)
}

/// Fixed-point structure of a non-identity class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixedPointData {
    Scalar,
    Parabolic { point: P1Point },
    SplitPair { points: [P1Point; 2] },
    /// Conjugate pair in `P^1(F_{p^2}) \ P^1(F_p)`.
    NonsplitPair { points: [Fp2Element; 2] },
}

/// Binary quadratic form `A X^2 + B XY + C Y^2` up to scaling, with distinct
/// roots in `P^1(F_p-bar)`; identifies an unordered Frobenius-stable pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PairForm(pub [u64; 3]);

impl PairForm {
    pub fn new(p: u64, f: [u64; 3]) -> Option<Self> {
        let f = f.map(|x| x % p);
        let lead = *f.iter().find(|&&x| x != 0)?;
        let s = fp::mod_pow(lead, p - 2, p);
        let f = f.map(|x| x * s % p);
        let disc = (f[1] * f[1] % p + p - 4 * (f[0] * f[2] % p) % p) % p;
        (disc != 0).then_some(Self(f))
    }

    /// Pair of fixed points of a non-scalar, non-parabolic element:
    /// `c X^2 + (d - a) XY - b Y^2`.
    pub fn of_element(p: u64, g: &PglElement) -> Option<Self> {
        Self::new(p, [g.c, (g.d + p - g.a) % p, (p - g.b) % p])
    }

    /// The pair through infinity and `x`.
    pub fn with_infinity(p: u64, x: u64) -> Self {
        // Y (X - x Y)
        Self::new(p, [0, 1, (p - x % p) % p]).expect("distinct points")
    }

    /// Whether `g` maps the root set of the form to itself.
    pub fn stabilized_by(&self, p: u64, g: &PglElement) -> bool {
        let [fa, fb, fc] = self.0;
        let (a, b, c, d) = (g.a, g.b, g.c, g.d);
        let na = (fa * (a * a % p) + fb * (a * c % p) + fc * (c * c % p)) % p;
        let nb = (2 * fa % p * (a * b % p) + fb * ((a * d + b * c) % p) + 2 * fc % p * (c * d % p)) % p;
        let nc = (fa * (b * b % p) + fb * (b * d % p) + fc * (d * d % p)) % p;
        let cross = |x: u64, y: u64, u: u64, v: u64| (x * y % p + p - u * v % p) % p == 0;
        cross(na, fb, fa, nb) && cross(na, fc, fa, nc) && cross(nb, fc, fb, nc)
    }

    pub fn is_split(&self, ctx: &PrimeContext) -> bool {
        let p = ctx.p();
        let [a, b, c] = self.0;
        let disc = (b * b % p + p - 4 * (a * c % p) % p) % p;
        ctx.legendre(disc) == 1
    }

    /// Roots as points of `P^1(F_{p^2})` (`None` is infinity), sorted.
    pub fn roots(&self, ctx: &PrimeContext) -> [Option<Fp2Element>; 2] {
        let p = ctx.p();
        let [a, b, c] = self.0;
        if a == 0 {
            // Y (b X + c Y): infinity and -c/b
            let x = (p - c) % p * ctx.inv(b).expect("b != 0 when a == 0") % p;
            return [Some(Fp2Element::from_base(ctx, x)), None];
        }
        let disc = (b * b % p + p - 4 * (a * c % p) % p) % p;
        let inv2a = ctx.inv(2 * a % p).expect("a != 0");
        let nb = Fp2Element::from_base(ctx, (p - b) % p);
        let root = match fp::fp_sqrt(ctx, disc) {
            Some(r) => Fp2Element::from_base(ctx, r),
            None => {
                let k = fp::fp_sqrt(ctx, ctx.mul(disc, ctx.inv(ctx.qnr()).unwrap()))
                    .expect("disc / qnr is a square");
                Fp2Element::new(ctx, 0, k)
            }
        };
        let s = Fp2Element::from_base(ctx, inv2a);
        let mut r = [(nb + root) * s, (nb - root) * s];
        r.sort();
        [Some(r[0]), Some(r[1])]
    }
}

/// Fixed points of `g` acting on `P^1`, extended to `F_{p^2}` when needed.
pub fn fixed_points(ctx: &PrimeContext, g: &PglElement) -> FixedPointData {
    let p = ctx.p();
    if g.is_scalar() {
        return FixedPointData::Scalar;
    }
    let disc = g.discriminant(p);
    if disc == 0 {
        // double root of c z^2 + (d - a) z - b
        let point = if g.c == 0 {
            P1Point::Infinity
        } else {
            let z = ctx.mul((g.a + p - g.d) % p, ctx.inv(2 * g.c % p).unwrap());
            P1Point::Finite(z)
        };
        return FixedPointData::Parabolic { point };
    }
    let form = PairForm::of_element(p, g).expect("nonzero discriminant");
    let roots = form.roots(ctx);
    if ctx.legendre(disc) == 1 {
        let to_p1 = |r: Option<Fp2Element>| r.map_or(P1Point::Infinity, |x| P1Point::Finite(x.a));
        let mut points = [to_p1(roots[0]), to_p1(roots[1])];
        points.sort();
        FixedPointData::SplitPair { points }
    } else {
        FixedPointData::NonsplitPair {
            points: [roots[0].unwrap(), roots[1].unwrap()],
        }
    }
}

/// Pairs swapped by a trace-zero (order 2) element, other than its own fixed pair.
pub(crate) fn swapped_pairs(p: u64, g: &PglElement) -> Vec<PairForm> {
    debug_assert_eq!(g.trace(p), 0);
    let mut out = Vec::new();
    let inv = |x: u64| fp::mod_pow(x, p - 2, p);
    if g.c == 0 {
        // (1, b; 0, -1): z -> -z - b swaps the roots of X^2 + b X + n
        for n in 0..p {
            if let Some(f) = PairForm::new(p, [1, g.b, n]) {
                out.push(f);
            }
        }
    } else {
        let ci = inv(g.c);
        for s in 0..p {
            // b + a s - c n = 0
            let n = (g.b + g.a * s) % p * ci % p;
            if let Some(f) = PairForm::new(p, [1, (p - s) % p, n]) {
                out.push(f);
            }
        }
        out.push(PairForm::with_infinity(p, g.a * ci % p));
    }
    out
}
