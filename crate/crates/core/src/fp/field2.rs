use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use super::{mod_pow, PrimeContext};

/// `a + b s` in `F_{p^2} = F_p[s] / (s^2 - qnr)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fp2Element {
    pub a: u64,
    pub b: u64,
    #[serde(skip)]
    p: u64,
    #[serde(skip)]
    qnr: u64,
}

impl fmt::Debug for Fp2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b == 0 {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{}+{}s", self.a, self.b)
        }
    }
}

impl Fp2Element {
    pub fn new(ctx: &PrimeContext, a: u64, b: u64) -> Self {
        let p = ctx.p();
        Self {
            a: a % p,
            b: b % p,
            p,
            qnr: ctx.qnr(),
        }
    }

    pub fn from_base(ctx: &PrimeContext, a: u64) -> Self {
        Self::new(ctx, a, 0)
    }

    /// The adjoined square root `s` of the context's non-residue.
    pub fn sqrt_qnr(ctx: &PrimeContext) -> Self {
        Self::new(ctx, 0, 1)
    }

    fn with(&self, a: u64, b: u64) -> Self {
        Self {
            a,
            b,
            p: self.p,
            qnr: self.qnr,
        }
    }

    fn mulp(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.p as u128) as u64
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn in_base_field(&self) -> bool {
        self.b == 0
    }

    /// Frobenius `x -> x^p`, i.e. `a - b s`.
    pub fn conj(&self) -> Self {
        self.with(self.a, (self.p - self.b) % self.p)
    }

    pub fn norm(&self) -> u64 {
        let aa = self.mulp(self.a, self.a);
        let bb = self.mulp(self.mulp(self.b, self.b), self.qnr);
        (aa + self.p - bb) % self.p
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm();
        if n == 0 {
            return None;
        }
        let ninv = mod_pow(n, self.p - 2, self.p);
        let c = self.conj();
        Some(self.with(self.mulp(c.a, ninv), self.mulp(c.b, ninv)))
    }

    pub fn pow(&self, mut n: u64) -> Self {
        let mut acc = self.with(1 % self.p, 0);
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl Add for Fp2Element {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        self.with((self.a + o.a) % self.p, (self.b + o.b) % self.p)
    }
}

impl Sub for Fp2Element {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        self.with(
            (self.a + self.p - o.a) % self.p,
            (self.b + self.p - o.b) % self.p,
        )
    }
}

impl Neg for Fp2Element {
    type Output = Self;
    fn neg(self) -> Self {
        self.with((self.p - self.a) % self.p, (self.p - self.b) % self.p)
    }
}

impl Mul for Fp2Element {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        debug_assert_eq!(self.p, o.p);
        let ac = self.mulp(self.a, o.a);
        let bd = self.mulp(self.mulp(self.b, o.b), self.qnr);
        let ad = self.mulp(self.a, o.b);
        let bc = self.mulp(self.b, o.a);
        self.with((ac + bd) % self.p, (ad + bc) % self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small() {
        let ctx = PrimeContext::new(7).unwrap();
        let s = Fp2Element::sqrt_qnr(&ctx);
        assert_eq!(s * s, Fp2Element::from_base(&ctx, ctx.qnr()));
        let mut nonzero = 0;
        for a in 0..7 {
            for b in 0..7 {
                let x = Fp2Element::new(&ctx, a, b);
                assert_eq!(x.norm(), (x * x.conj()).a);
                assert!((x * x.conj()).in_base_field());
                // Frobenius agrees with x^p
                assert_eq!(x.pow(7), x.conj());
                if let Some(y) = x.inv() {
                    assert_eq!(x * y, Fp2Element::from_base(&ctx, 1));
                    nonzero += 1;
                }
                assert_eq!(x - x, Fp2Element::from_base(&ctx, 0));
                assert_eq!(x + (-x), Fp2Element::from_base(&ctx, 0));
            }
        }
        assert_eq!(nonzero, 48);
    }
}
