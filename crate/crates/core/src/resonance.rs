//! The complete sums `E(c, d, e, n1, n2)` and their identification with
//! `p C(K; gamma)` at the resonating matrix.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{corr_sum, PglElement};
use crate::error::{invalid, Result};
use crate::fp::{self, dft};
use crate::weights::{kloosterman_row, kloosterman_sum, WeightTable};

pub const DEFAULT_LEVEL: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceInstance {
    pub p: u64,
    #[serde(rename = "N")]
    pub level: u64,
    pub c: u64,
    pub d: u64,
    pub e: u64,
    pub n1: i64,
    pub n2: i64,
}

impl ResonanceInstance {
    /// Check what the resonating matrix and the three evaluation routes need:
    /// `c, d, e` prime to `p`, `n1 n2 != 0` and `n1 n2 = e (mod cN)`.
    pub fn validate(&self) -> Result<()> {
        let Self { p, level, c, d, e, n1, n2 } = *self;
        if !fp::is_prime(p) || p < 3 {
            return invalid(format!("p = {p} is not an odd prime"));
        }
        if level < 2 || level % p == 0 {
            return invalid(format!("level N = {level} must be >= 2 and prime to p"));
        }
        for (name, v) in [("c", c), ("d", d), ("e", e)] {
            if v == 0 || v % p == 0 {
                return invalid(format!("{name} = {v} must be positive and prime to p"));
            }
        }
        if n1 == 0 || n2 == 0 {
            return invalid("n1 and n2 must be nonzero");
        }
        let cn = c * level;
        if (n1 as i128 * n2 as i128 - e as i128).rem_euclid(cn as i128) != 0 {
            return invalid(format!("n1 n2 = {} is not e = {e} mod cN = {cn}", n1 as i128 * n2 as i128));
        }
        Ok(())
    }

    /// The further conditions of the amplified sum: `(n2, cN) = 1` and `d, e` prime to `N`.
    pub fn is_admissible(&self) -> bool {
        let cn = self.c * self.level;
        self.validate().is_ok()
            && fp::gcd(fp::reduce(self.n2, cn), cn) == 1
            && fp::gcd(self.d * self.e, self.level) == 1
    }

    /// `(cN)^{-1}` and `(c d N)^{-1}` modulo `p`.
    fn inverses(&self) -> (u64, u64) {
        let p = self.p;
        let cn = fp::mod_inv((self.c * self.level % p) as i64, p).expect("cN prime to p");
        let cdn = fp::mod_inv((self.c * self.level % p * (self.d % p) % p) as i64, p).expect("cdN prime to p");
        (cn, cdn)
    }
}

/// `(n1, (n1 n2 - e)/(cN); c d N, d n2)` and its image in `PGL_2(F_p)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResonatingMatrix {
    pub entries: [[i128; 2]; 2],
    pub reduced: PglElement,
}

impl ResonatingMatrix {
    pub fn det(&self) -> i128 {
        let [[a, b], [c, d]] = self.entries;
        a * d - b * c
    }
}

pub fn gamma_of(inst: &ResonanceInstance) -> Result<ResonatingMatrix> {
    inst.validate()?;
    let cn = (inst.c * inst.level) as i128;
    let (n1, n2) = (inst.n1 as i128, inst.n2 as i128);
    let b = (n1 * n2 - inst.e as i128) / cn;
    let c = (inst.c * inst.d * inst.level) as i128;
    let d = inst.d as i128 * n2;
    let p = inst.p as i128;
    let r = |x: i128| x.rem_euclid(p) as i64;
    let reduced = PglElement::new(inst.p, r(n1), r(b), r(c), r(d))?;
    Ok(ResonatingMatrix {
        entries: [[n1, b], [c, d]],
        reduced,
    })
}

/// `S(a, b; p)` from the row `S(1, t; p)`.
fn kl_from_row(row: &[f64], p: u64, a: u64, b: u64) -> f64 {
    match (a, b) {
        (0, 0) => (p - 1) as f64,
        (0, _) | (_, 0) => -1.0,
        _ => row[(a * b % p) as usize],
    }
}

fn check_weight(inst: &ResonanceInstance, k: &WeightTable) -> Result<()> {
    if k.p() != inst.p {
        return invalid(format!("weight is modulo {} but the instance is modulo {}", k.p(), inst.p));
    }
    Ok(())
}

/// `sum_{u1, u2} K(u1) conj K(u2) S(e cdN^-1 u1, cN^-1 u2; p) e((cdN^-1 u1 n1 + cN^-1 u2 n2) / p)`.
pub fn e_direct(inst: &ResonanceInstance, k: &WeightTable) -> Result<Complex64> {
    inst.validate()?;
    check_weight(inst, k)?;
    let ctx = k.context();
    let p = inst.p;
    let (icn, icdn) = inst.inverses();
    let row = kloosterman_row(ctx, 1);
    let alpha = ctx.mul(inst.e % p, icdn);
    let n1 = ctx.reduce(inst.n1);
    let n2 = ctx.reduce(inst.n2);
    let kv = k.values();
    let outer: Vec<Complex64> = (0..p)
        .into_par_iter()
        .map(|u1| {
            let a = ctx.mul(alpha, u1);
            let ph1 = ctx.mul(ctx.mul(icdn, u1), n1);
            let mut acc = Complex64::new(0.0, 0.0);
            for u2 in 0..p {
                let b = ctx.mul(icn, u2);
                let ph = ctx.add(ph1, ctx.mul(b, n2));
                acc += kv[u2 as usize].conj() * ctx.root(ph) * kl_from_row(&row, p, a, b);
            }
            kv[u1 as usize] * acc
        })
        .collect();
    Ok(outer.into_iter().sum())
}

/// `p sum_{z != 0} Khat(cN^-1 d^-1 (e z + n1)) conj Khat(-cN^-1 (z^-1 + n2))`.
pub fn e_via_fourier(inst: &ResonanceInstance, khat: &WeightTable) -> Result<Complex64> {
    inst.validate()?;
    check_weight(inst, khat)?;
    let ctx = khat.context();
    let p = inst.p;
    let (icn, _) = inst.inverses();
    let dinv = ctx.inv(inst.d % p).expect("d prime to p");
    let s = ctx.mul(icn, dinv);
    let (e, n1, n2) = (inst.e % p, ctx.reduce(inst.n1), ctx.reduce(inst.n2));
    let kh = khat.values();
    let sum: Complex64 = (1..p)
        .map(|z| {
            let x = ctx.mul(s, ctx.add(ctx.mul(e, z), n1));
            let y = ctx.neg(ctx.mul(icn, ctx.add(ctx.inv(z).unwrap(), n2)));
            kh[x as usize] * kh[y as usize].conj()
        })
        .sum();
    Ok(sum * p as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceCheck {
    pub instance: ResonanceInstance,
    pub weight: String,
    pub gamma: ResonatingMatrix,
    pub e_direct: Complex64,
    pub e_fourier: Complex64,
    /// `p C(K; gamma mod p)`.
    pub p_corr: Complex64,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative tolerance on the three routes, scaled by `p^2`.
pub const RESONANCE_TOLERANCE: f64 = 1e-6;

/// Evaluate all three routes; `khat` must be `dft(k)`.
pub fn check_instance(inst: &ResonanceInstance, k: &WeightTable, khat: &WeightTable) -> Result<ResonanceCheck> {
    let gamma = gamma_of(inst)?;
    let e_direct = e_direct(inst, k)?;
    let e_fourier = e_via_fourier(inst, khat)?;
    let p_corr = corr_sum(khat, &gamma.reduced) * inst.p as f64;
    let max_discrepancy = [(e_direct - p_corr).norm(), (e_direct - e_fourier).norm(), (e_fourier - p_corr).norm()]
        .into_iter()
        .fold(0.0, f64::max);
    let tolerance = RESONANCE_TOLERANCE * (inst.p * inst.p) as f64;
    Ok(ResonanceCheck {
        instance: *inst,
        weight: k.label().to_string(),
        gamma,
        e_direct,
        e_fourier,
        p_corr,
        max_discrepancy,
        tolerance,
        pass: max_discrepancy < tolerance,
    })
}

/// Check every instance against one weight, in parallel, keeping input order.
pub fn check_batch(instances: &[ResonanceInstance], k: &WeightTable) -> Result<Vec<ResonanceCheck>> {
    let khat = dft(k);
    instances.par_iter().map(|i| check_instance(i, k, &khat)).collect()
}

const SMALL_PRIMES: [u64; 10] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

/// Draw `count` valid instances modulo `p` at level `level`, reproducibly from `seed`.
///
/// `c` is uniform in `1..=10`, `d` and `e` are `1`, a small prime or a product
/// of two, `n2` is uniform in `[-2cN, 2cN]` prime to `cN`, and `n1` is the
/// solution of `n1 n2 = e (cN)` of least absolute value.
pub fn sample_instances(p: u64, level: u64, count: usize, seed: u64) -> Result<Vec<ResonanceInstance>> {
    if !fp::is_prime(p) || p < 3 {
        return invalid(format!("p = {p} is not an odd prime"));
    }
    if level < 2 || level % p == 0 {
        return invalid(format!("level N = {level} must be >= 2 and prime to p"));
    }
    let ells: Vec<u64> = SMALL_PRIMES.iter().copied().filter(|&l| l != p && level % l != 0).collect();
    if ells.len() < 2 {
        return invalid("not enough small primes prime to pN");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick_de = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => 1,
        1 => ells[rng.gen_range(0..ells.len())],
        _ => ells[rng.gen_range(0..ells.len())] * ells[rng.gen_range(0..ells.len())],
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = rng.gen_range(1..=10u64);
        if c % p == 0 {
            continue;
        }
        let d = pick_de(&mut rng);
        let e = pick_de(&mut rng);
        let cn = c * level;
        let span = 2 * cn as i64;
        let n2 = loop {
            let n = rng.gen_range(-span..=span);
            if n != 0 && fp::gcd(fp::reduce(n, cn), cn) == 1 {
                break n;
            }
        };
        let r = fp::mul_mod(e % cn, fp::mod_inv(n2, cn).expect("n2 prime to cN"), cn) as i64;
        let n1 = if 2 * r > cn as i64 { r - cn as i64 } else { r };
        let inst = ResonanceInstance { p, level, c, d, e, n1, n2 };
        debug_assert!(inst.is_admissible());
        out.push(inst);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistedMultCheck {
    pub m: i64,
    pub n: i64,
    pub c1: u64,
    pub c2: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `S(m, n; c1 c2) = S(m c2^-2, n; c1) S(m c1^-2, n; c2)` for coprime `c1, c2`.
pub fn kloosterman_twisted_mult_check(m: i64, n: i64, c1: u64, c2: u64) -> Result<TwistedMultCheck> {
    if c1 == 0 || c2 == 0 || fp::gcd(c1, c2) != 1 {
        return invalid(format!("moduli {c1}, {c2} must be positive and coprime"));
    }
    let lhs = kloosterman_sum(m, n, c1 * c2);
    let inv_sq = |x: u64, modulus: u64| -> i64 {
        if modulus == 1 {
            return 0;
        }
        let i = fp::mod_inv((x % modulus) as i64, modulus).expect("coprime");
        fp::mul_mod(i, i, modulus) as i64
    };
    let a1 = fp::mul_mod(fp::reduce(m, c1), inv_sq(c2, c1) as u64, c1) as i64;
    let a2 = fp::mul_mod(fp::reduce(m, c2), inv_sq(c1, c2) as u64, c2) as i64;
    let rhs = kloosterman_sum(a1, n, c1) * kloosterman_sum(a2, n, c2);
    Ok(TwistedMultCheck {
        m,
        n,
        c1,
        c2,
        lhs,
        rhs,
        pass: (lhs - rhs).abs() < 1e-9 * (c1 * c2).max(1) as f64,
    })
}
