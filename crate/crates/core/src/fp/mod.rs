//! Arithmetic modulo a prime `p`: the shared context, `F_{p^2}`, Dirichlet
//! and additive characters, square roots and the unitary DFT.

mod dft;
mod field2;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};

pub use dft::dft;
pub use field2::Fp2Element;

/// Largest prime accepted by [`PrimeContext::new`]; tables are length `p`.
pub const MAX_PRIME: u64 = 1 << 24;

/// `e(x) = exp(2 pi i x)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (TAU * x).sin_cos();
    Complex64::new(c, s)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m` (any modulus), if `gcd(a, m) = 1`.
pub fn mod_inv(a: i64, m: u64) -> Option<u64> {
    let m_i = m as i128;
    let (mut r0, mut r1) = (a as i128 % m_i, m_i);
    if r0 < 0 {
        r0 += m_i;
    }
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(s0.rem_euclid(m_i) as u64)
}

/// Reduce a signed integer into `0..m`.
#[inline]
pub fn reduce(n: i64, m: u64) -> u64 {
    n.rem_euclid(m as i64) as u64
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest generator of `(Z/pZ)^x` for an odd prime `p`.
pub fn primitive_root(p: u64) -> Result<u64> {
    if p < 3 || !is_prime(p) {
        return invalid(format!("{p} is not an odd prime"));
    }
    let factors = distinct_prime_factors(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&q| mod_pow(g, (p - 1) / q, p) != 1))
        .ok_or_else(|| crate::Error::InvalidInput(format!("no primitive root mod {p}")))
}

/// Square root modulo a prime by Tonelli-Shanks. `None` for non-residues.
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 || p == 2 {
        return Some(a);
    }
    if mod_pow(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| mod_pow(z, (p - 1) / 2, p) == p - 1)?;
    let mul = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    let mut m = s;
    let mut c = mod_pow(z, q, p);
    let mut t = mod_pow(a, q, p);
    let mut r = mod_pow(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul(t2, t2);
            i += 1;
        }
        let b = mod_pow(c, 1 << (m - i - 1), p);
        m = i;
        c = mul(b, b);
        t = mul(t, c);
        r = mul(r, b);
    }
    Some(r)
}

struct Tables {
    p: u64,
    g: u64,
    qnr: u64,
    /// `dlog[g^j mod p] = j`; entry 0 unused.
    dlog: Vec<u32>,
    inv: Vec<u32>,
    /// `roots[k] = e(k / p)`.
    roots: Vec<Complex64>,
}

/// Immutable tables for one odd prime; cheap to clone and share across threads.
#[derive(Clone)]
pub struct PrimeContext {
    t: Arc<Tables>,
}

impl fmt::Debug for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimeContext")
            .field("p", &self.t.p)
            .field("g", &self.t.g)
            .field("qnr", &self.t.qnr)
            .finish()
    }
}

impl PartialEq for PrimeContext {
    fn eq(&self, other: &Self) -> bool {
        self.t.p == other.t.p
    }
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self> {
        if p > MAX_PRIME {
            return invalid(format!("p = {p} exceeds the supported maximum {MAX_PRIME}"));
        }
        let g = primitive_root(p)?;
        let n = p as usize;
        let mut dlog = vec![0u32; n];
        let mut x = 1u64;
        for j in 0..p - 1 {
            dlog[x as usize] = j as u32;
            x = x * g % p;
        }
        let mut inv = vec![0u32; n];
        for x in 1..p {
            // x^{-1} = g^{(p-1) - dlog x}
            inv[x as usize] = mod_pow(g, (p - 1 - dlog[x as usize] as u64) % (p - 1), p) as u32;
        }
        // g is a non-residue since it generates.
        let qnr = g;
        let roots = (0..p).map(|k| e(k as f64 / p as f64)).collect();
        Ok(Self {
            t: Arc::new(Tables {
                p,
                g,
                qnr,
                dlog,
                inv,
                roots,
            }),
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.t.p
    }

    pub fn primitive_root(&self) -> u64 {
        self.t.g
    }

    /// A fixed quadratic non-residue (the primitive root).
    pub fn qnr(&self) -> u64 {
        self.t.qnr
    }

    #[inline]
    pub fn reduce(&self, n: i64) -> u64 {
        reduce(n, self.t.p)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.t.p
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.t.p - b) % self.t.p
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.t.p - a % self.t.p) % self.t.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.t.p
    }

    #[inline]
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.t.p;
        (a != 0).then(|| self.t.inv[a as usize] as u64)
    }

    /// Discrete logarithm to the base of the primitive root, `None` at 0.
    #[inline]
    pub fn dlog(&self, a: u64) -> Option<u64> {
        let a = a % self.t.p;
        (a != 0).then(|| self.t.dlog[a as usize] as u64)
    }

    pub fn pow(&self, a: u64, n: u64) -> u64 {
        mod_pow(a, n, self.t.p)
    }

    /// Legendre symbol `(a/p)` in `{-1, 0, 1}`.
    pub fn legendre(&self, a: u64) -> i32 {
        match self.dlog(a) {
            None => 0,
            Some(j) if j % 2 == 0 => 1,
            Some(_) => -1,
        }
    }

    /// `e(k/p)` for a residue (or any integer, reduced first).
    #[inline]
    pub fn root(&self, k: u64) -> Complex64 {
        self.t.roots[(k % self.t.p) as usize]
    }

    pub(crate) fn roots(&self) -> &[Complex64] {
        &self.t.roots
    }

    pub fn sqrt_p(&self) -> f64 {
        (self.t.p as f64).sqrt()
    }
}

/// `x -> e(a x / p)`.
pub fn additive_char(ctx: &PrimeContext, a: u64) -> impl Fn(u64) -> Complex64 + '_ {
    let a = a % ctx.p();
    move |x| ctx.root(ctx.mul(a, x % ctx.p()))
}

pub fn fp_sqrt(ctx: &PrimeContext, a: u64) -> Option<u64> {
    sqrt_mod_prime(a, ctx.p())
}

/// `chi(g^j) = e(k j / (p - 1))` relative to the smallest primitive root `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletCharacter {
    ctx: PrimeContext,
    index: u64,
}

impl DirichletCharacter {
    pub fn new(ctx: &PrimeContext, index: u64) -> Result<Self> {
        if index >= ctx.p() - 1 {
            return invalid(format!("character index {index} not in [0, {}]", ctx.p() - 2));
        }
        Ok(Self {
            ctx: ctx.clone(),
            index,
        })
    }

    pub fn legendre(ctx: &PrimeContext) -> Self {
        Self {
            ctx: ctx.clone(),
            index: (ctx.p() - 1) / 2,
        }
    }

    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn order(&self) -> u64 {
        let n = self.ctx.p() - 1;
        n / gcd(self.index, n)
    }

    pub fn is_trivial(&self) -> bool {
        self.index == 0
    }

    /// Real and non-trivial, i.e. the Legendre symbol.
    pub fn is_real(&self) -> bool {
        self.order() == 2
    }

    pub fn conj(&self) -> Self {
        let n = self.ctx.p() - 1;
        Self {
            ctx: self.ctx.clone(),
            index: (n - self.index) % n,
        }
    }

    /// `chi(x)`, with `chi(0) = 0` for every character including the trivial one.
    pub fn eval(&self, x: u64) -> Complex64 {
        match self.ctx.dlog(x) {
            None => Complex64::new(0.0, 0.0),
            Some(j) => {
                let n = self.ctx.p() - 1;
                let k = (self.index as u128 * j as u128 % n as u128) as u64;
                e(k as f64 / n as f64)
            }
        }
    }
}

pub fn char_eval(chi: &DirichletCharacter, x: u64) -> Complex64 {
    chi.eval(x)
}

/// `tau(chi) = sum_x chi(x) e(x/p)`; undefined (error) for the trivial character.
pub fn gauss_sum(chi: &DirichletCharacter) -> Result<Complex64> {
    if chi.is_trivial() {
        return invalid("Gauss sum of the trivial character");
    }
    let ctx = chi.context();
    Ok((1..ctx.p()).map(|x| chi.eval(x) * ctx.root(x)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_roots_small() {
        assert_eq!(primitive_root(7).unwrap(), 3);
        assert_eq!(primitive_root(5).unwrap(), 2);
        assert_eq!(primitive_root(3).unwrap(), 2);
        assert!(primitive_root(4).is_err());
        assert!(primitive_root(2).is_err());
        assert!(primitive_root(9).is_err());
    }

    #[test]
    fn primitive_root_by_enumeration() {
        for p in [7u64, 5, 11, 13, 101] {
            let g = primitive_root(p).unwrap();
            let mut seen: Vec<u64> = (0..p - 1).map(|k| mod_pow(g, k, p)).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len() as u64, p - 1);
            for h in 2..g {
                let mut s: Vec<u64> = (0..p - 1).map(|k| mod_pow(h, k, p)).collect();
                s.sort();
                s.dedup();
                assert!(s.len() < (p - 1) as usize, "{h} would be a smaller root mod {p}");
            }
        }
    }

    #[test]
    fn context_rejects_composites() {
        assert!(PrimeContext::new(4).is_err());
        assert!(PrimeContext::new(1).is_err());
        assert!(PrimeContext::new(15).is_err());
    }

    #[test]
    fn context_tables() {
        for p in [3u64, 5, 7, 31, 97] {
            let ctx = PrimeContext::new(p).unwrap();
            let mut logs: Vec<u64> = (1..p).map(|x| ctx.dlog(x).unwrap()).collect();
            logs.sort();
            assert_eq!(logs, (0..p - 1).collect::<Vec<_>>());
            assert_eq!(ctx.legendre(ctx.qnr()), -1);
            for x in 1..p {
                assert_eq!(ctx.mul(x, ctx.inv(x).unwrap()), 1);
            }
            assert_eq!(ctx.inv(0), None);
        }
    }

    #[test]
    fn additive_character_values() {
        let ctx = PrimeContext::new(5).unwrap();
        let psi0 = additive_char(&ctx, 0);
        for x in 0..5 {
            assert!((psi0(x) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let psi = additive_char(&ctx, 1);
        let v = psi(1);
        assert!((v.re - 0.309_016_994_374_947_4).abs() < 1e-12);
        assert!((v.im - 0.951_056_516_295_153_5).abs() < 1e-12);
    }

    #[test]
    fn character_values() {
        let ctx = PrimeContext::new(7).unwrap();
        let chi = DirichletCharacter::new(&ctx, 3).unwrap();
        assert!(chi.is_real());
        // squares mod 7 are {1, 2, 4}
        let squares: Vec<u64> = (1..7).map(|x| x * x % 7).collect();
        assert!(!squares.contains(&3));
        assert!((chi.eval(3) + 1.0).norm() < 1e-12);
        assert_eq!(chi.eval(0), Complex64::new(0.0, 0.0));
        for k in 0..6 {
            let c = DirichletCharacter::new(&ctx, k).unwrap();
            assert!((c.eval(1) - 1.0).norm() < 1e-12);
            assert_eq!(c.eval(0).norm(), 0.0);
        }
        assert!(DirichletCharacter::new(&ctx, 6).is_err());
        assert_eq!(DirichletCharacter::new(&ctx, 2).unwrap().order(), 3);
        assert_eq!(DirichletCharacter::new(&ctx, 1).unwrap().order(), 6);
    }

    #[test]
    fn character_orthogonality() {
        let ctx = PrimeContext::new(13).unwrap();
        for k in 1..12 {
            for l in 1..12 {
                let a = DirichletCharacter::new(&ctx, k).unwrap();
                let b = DirichletCharacter::new(&ctx, l).unwrap();
                let s: Complex64 = (0..13).map(|x| a.eval(x) * b.eval(x).conj()).sum();
                let expect = if k == l { 12.0 } else { 0.0 };
                assert!((s - expect).norm() < 1e-9, "k={k} l={l} s={s}");
            }
        }
    }

    #[test]
    fn gauss_sums() {
        let ctx = PrimeContext::new(5).unwrap();
        let g = gauss_sum(&DirichletCharacter::legendre(&ctx)).unwrap();
        // direct 5-term sum: 2 cos(2pi/5) - 2 cos(4pi/5) = sqrt 5
        let direct = 2.0 * (TAU / 5.0).cos() - 2.0 * (2.0 * TAU / 5.0).cos();
        assert!((g.re - direct).abs() < 1e-12 && (direct - 5f64.sqrt()).abs() < 1e-12);
        assert!(g.im.abs() < 1e-12);

        let ctx3 = PrimeContext::new(3).unwrap();
        let g3 = gauss_sum(&DirichletCharacter::new(&ctx3, 1).unwrap()).unwrap();
        assert!((g3 - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12);

        assert!(gauss_sum(&DirichletCharacter::new(&ctx, 0).unwrap()).is_err());
    }

    #[test]
    fn square_roots() {
        let ctx = PrimeContext::new(7).unwrap();
        assert_eq!(fp_sqrt(&ctx, 0), Some(0));
        let r = fp_sqrt(&ctx, 2).unwrap();
        assert!(r == 3 || r == 4);
        assert_eq!(fp_sqrt(&ctx, 3), None);
        for p in [3u64, 5, 13, 17, 41, 97, 101, 257] {
            let ctx = PrimeContext::new(p).unwrap();
            let mut count = 0;
            for a in 1..p {
                if let Some(r) = fp_sqrt(&ctx, a) {
                    assert_eq!(r * r % p, a);
                    count += 1;
                }
            }
            assert_eq!(count, (p - 1) / 2);
        }
    }

    #[test]
    fn modular_inverse_general() {
        assert_eq!(mod_inv(3, 10), Some(7));
        assert_eq!(mod_inv(-3, 10), Some(3));
        assert_eq!(mod_inv(4, 10), None);
        assert_eq!(mod_inv(5, 1), Some(0));
    }
}
