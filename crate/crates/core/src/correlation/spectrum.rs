use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::pgl::{PglElement, pgl_enumerate};
use crate::fp::{dft, PrimeContext};
use crate::weights::WeightTable;

/// Full spectra are kept in memory up to this prime; above it only the
/// exceptional entries and summary statistics survive.
pub const FULL_SPECTRUM_MAX_P: u64 = 101;

/// Relative guard band on the `M sqrt(p)` threshold.
pub const THRESHOLD_GUARD: f64 = 1e-6;

/// `sum_{z != -d/c} Khat(g z) conj(Khat(z))`, the sum running over `F_p`
/// minus the preimage of infinity.
pub fn corr_sum(khat: &WeightTable, g: &PglElement) -> Complex64 {
    let conj: Vec<Complex64> = khat.values().iter().map(|v| v.conj()).collect();
    corr_sum_with(khat.context(), khat.values(), &conj, g)
}

pub(crate) fn corr_sum_with(
    ctx: &PrimeContext,
    kh: &[Complex64],
    kh_conj: &[Complex64],
    g: &PglElement,
) -> Complex64 {
    let p = ctx.p();
    let pu = p as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    if g.c == 0 {
        // g z = (a z + b) / d, an affine bijection
        let dinv = ctx.inv(g.d).expect("d != 0 when c == 0");
        let step = ctx.mul(g.a, dinv) as usize;
        let mut w = ctx.mul(g.b, dinv) as usize;
        for zc in kh_conj {
            acc += kh[w] * zc;
            w += step;
            if w >= pu {
                w -= pu;
            }
        }
    } else {
        let (a, c) = (g.a as usize, g.c as usize);
        let mut num = g.b as usize;
        let mut den = g.d as usize;
        for zc in kh_conj {
            if den != 0 {
                let w = (num as u64 * ctx.inv(den as u64).unwrap()) % p;
                acc += kh[w as usize] * zc;
            }
            num += a;
            if num >= pu {
                num -= pu;
            }
            den += c;
            if den >= pu {
                den -= pu;
            }
        }
    }
    acc
}

/// `C(K; g)` minus the `z = -b/a` term, i.e. the sum with both the pole and the
/// zero of `g` removed.
pub(crate) fn alternate_exclusion(
    ctx: &PrimeContext,
    kh: &[Complex64],
    g: &PglElement,
    value: Complex64,
) -> Complex64 {
    if g.a == 0 {
        return value;
    }
    let zero = ctx.mul(ctx.neg(g.b), ctx.inv(g.a).unwrap());
    let pole = (g.c != 0).then(|| ctx.mul(ctx.neg(g.d), ctx.inv(g.c).unwrap()));
    if pole == Some(zero) {
        return value;
    }
    value - kh[0] * kh[zero as usize].conj()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub gamma: PglElement,
    pub value: Complex64,
}

/// `C(K; g)` over all of `PGL_2(F_p)` with the `M`-correlation matrices split out.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSpectrum {
    pub p: u64,
    pub weight: String,
    pub m: f64,
    pub threshold: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub group_order: u64,
    /// Every value in enumeration order; only for `p <= FULL_SPECTRUM_MAX_P`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Complex64>>,
    /// Entries with `|C| > M sqrt(p) (1 + guard)`, in enumeration order.
    pub exceptional: Vec<SpectrumEntry>,
    pub max_abs: f64,
    /// Largest `|C|` outside the exceptional set.
    pub max_abs_regular: f64,
    /// Largest `|C| / (p ||K||_2^2)`; at most 1 by Cauchy-Schwarz.
    pub max_parseval_ratio: f64,
}

impl CorrelationSpectrum {
    pub fn exceptional_set(&self) -> Vec<PglElement> {
        self.exceptional.iter().map(|e| e.gamma).collect()
    }

    pub fn value(&self, g: &PglElement) -> Option<Complex64> {
        self.entries.as_ref().map(|v| v[g.index(self.p) as usize])
    }
}

pub fn threshold(p: u64, m: f64) -> f64 {
    m * (p as f64).sqrt() * (1.0 + THRESHOLD_GUARD)
}

/// Compute every correlation sum of `k` and extract `G_{K,M}`.
pub fn spectrum(k: &WeightTable, m: f64) -> CorrelationSpectrum {
    spectrum_of_transform(&dft(k), k, m)
}

pub(crate) fn spectrum_of_transform(khat: &WeightTable, k: &WeightTable, m: f64) -> CorrelationSpectrum {
    let ctx = khat.context();
    let p = ctx.p();
    let kh = khat.values();
    let kh_conj: Vec<Complex64> = kh.iter().map(|v| v.conj()).collect();
    let thr = threshold(p, m);
    let order = PglElement::group_order(p);
    let full_norm = p as f64 * k.l2_norm() * k.l2_norm();
    let eval = |i: u64| corr_sum_with(ctx, kh, &kh_conj, &PglElement::from_index(p, i));

    let (entries, exceptional) = if p <= FULL_SPECTRUM_MAX_P {
        let all: Vec<Complex64> = (0..order).into_par_iter().map(eval).collect();
        let exc = all
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > thr)
            .map(|(i, v)| SpectrumEntry {
                gamma: PglElement::from_index(p, i as u64),
                value: *v,
            })
            .collect();
        (Some(all), exc)
    } else {
        let exc = (0..order)
            .into_par_iter()
            .filter_map(|i| {
                let v = eval(i);
                (v.norm() > thr).then(|| SpectrumEntry {
                    gamma: PglElement::from_index(p, i),
                    value: v,
                })
            })
            .collect();
        (None, exc)
    };

    let (max_abs, max_abs_regular) = match &entries {
        Some(all) => all.iter().fold((0.0f64, 0.0f64), |(mx, mr), v| {
            let n = v.norm();
            (mx.max(n), if n > thr { mr } else { mr.max(n) })
        }),
        None => {
            // second pass for the statistics; max is order independent
            let (mx, mr) = (0..order)
                .into_par_iter()
                .map(|i| {
                    let n = eval(i).norm();
                    (n, if n > thr { 0.0 } else { n })
                })
                .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
            (mx, mr)
        }
    };
    let max_parseval_ratio = if full_norm > 0.0 { max_abs / full_norm } else { 0.0 };

    CorrelationSpectrum {
        p,
        weight: k.label().to_string(),
        m,
        threshold: thr,
        l2_norm: k.l2_norm(),
        sup_norm: k.sup_norm(),
        group_order: order,
        entries,
        exceptional,
        max_abs,
        max_abs_regular,
        max_parseval_ratio,
    }
}

/// Deterministic iteration helper for callers that want `(g, C(K; g))` lazily.
pub fn correlation_values<'a>(khat: &'a WeightTable) -> impl Iterator<Item = (PglElement, Complex64)> + 'a {
    let ctx = khat.context();
    let kh = khat.values();
    let kh_conj: Vec<Complex64> = kh.iter().map(|v| v.conj()).collect();
    pgl_enumerate(ctx.p()).map(move |g| (g, corr_sum_with(ctx, kh, &kh_conj, &g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights;

    /// Independent evaluation straight from the definition.
    fn naive(ctx: &PrimeContext, kh: &[Complex64], g: &PglElement) -> Complex64 {
        let p = ctx.p();
        (0..p)
            .filter_map(|z| g.act(p, z).map(|w| kh[w as usize] * kh[z as usize].conj()))
            .sum()
    }

    #[test]
    fn fast_path_matches_definition() {
        let ctx = PrimeContext::new(11).unwrap();
        let k = weights::kloosterman_weight(&ctx, 3).unwrap();
        let kh = dft(&k);
        for g in pgl_enumerate(11) {
            let fast = corr_sum(&kh, &g);
            assert!((fast - naive(&ctx, kh.values(), &g)).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_is_parseval() {
        let ctx = PrimeContext::new(13).unwrap();
        let k = weights::quadratic_phase_weight(&ctx);
        let c = corr_sum(&dft(&k), &PglElement::identity());
        assert!((c.re - 13.0 * k.l2_norm().powi(2)).abs() < 1e-9);
        assert!(c.im.abs() < 1e-9);
    }

    #[test]
    fn additive_weight_correlations() {
        let ctx = PrimeContext::new(13).unwrap();
        let u = 4u64;
        let kh = dft(&weights::additive_weight(&ctx, u));
        let mu = ctx.neg(u);
        for g in pgl_enumerate(13) {
            let c = corr_sum(&kh, &g);
            let expect = if g.act(13, mu) == Some(mu) { 13.0 } else { 0.0 };
            assert!((c - expect).norm() < 1e-9, "{g:?}");
        }
    }

    #[test]
    fn quadratic_phase_reflection() {
        for p in [7u64, 11, 13] {
            let ctx = PrimeContext::new(p).unwrap();
            let kh = dft(&weights::quadratic_phase_weight(&ctx));
            let g = PglElement::new(p, -1, 0, 0, 1).unwrap();
            assert!(corr_sum(&kh, &g).norm() >= (p - 1) as f64 - 1e-9);
        }
    }

    #[test]
    fn zero_weight_has_no_exceptions() {
        let ctx = PrimeContext::new(11).unwrap();
        let z = WeightTable::new(&ctx, vec![Complex64::new(0.0, 0.0); 11], "zero").unwrap();
        let s = spectrum(&z, 1.0);
        assert!(s.exceptional.is_empty());
        assert_eq!(s.entries.as_ref().unwrap().len(), 1320);
    }

    #[test]
    fn streaming_agrees_with_full() {
        let ctx = PrimeContext::new(103).unwrap();
        let k = weights::delta_weight(&ctx, 5);
        let s = spectrum(&k, 3.0);
        assert!(s.entries.is_none());
        let expect: Vec<PglElement> = (0..103).map(|t| PglElement::new(103, 1, t, 0, 1).unwrap()).collect();
        let mut got = s.exceptional_set();
        got.sort();
        let mut e = expect;
        e.sort();
        assert_eq!(got, e);
        assert!(s.max_abs_regular <= s.threshold);
    }
}
