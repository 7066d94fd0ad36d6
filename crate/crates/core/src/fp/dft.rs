use num_complex::Complex64;
use rayon::prelude::*;

use crate::weights::WeightTable;

/// Unitary Fourier transform modulo `p`:
/// `K^(z) = p^{-1/2} sum_x K(x) e(z x / p)`.
///
/// Direct `O(p^2)` summation against the cached root table. Applying it
/// twice gives `x -> K(-x)`.
pub fn dft(k: &WeightTable) -> WeightTable {
    let ctx = k.context();
    let p = ctx.p() as usize;
    let roots = ctx.roots();
    let values = k.values();
    let scale = 1.0 / ctx.sqrt_p();
    let out: Vec<Complex64> = (0..p)
        .into_par_iter()
        .map(|z| {
            let mut idx = 0usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for v in values {
                acc += v * roots[idx];
                idx += z;
                if idx >= p {
                    idx -= p;
                }
            }
            acc * scale
        })
        .collect();
    WeightTable::from_parts(ctx.clone(), out, format!("dft[{}]", k.label()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::PrimeContext;
    use crate::weights;

    #[test]
    fn dirac_and_additive_are_dual() {
        let ctx = PrimeContext::new(11).unwrap();
        let sp = ctx.sqrt_p();
        for u in 0..11 {
            let kh = dft(&weights::delta_weight(&ctx, u));
            for v in 0..11 {
                assert!((kh.values()[v as usize] - ctx.root(u * v)).norm() < 1e-12);
            }
            let ah = dft(&weights::additive_weight(&ctx, u));
            for v in 0..11u64 {
                let expect = if (v + u) % 11 == 0 { sp } else { 0.0 };
                assert!((ah.values()[v as usize] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let ctx = PrimeContext::new(13).unwrap();
        let z = WeightTable::new(&ctx, vec![Complex64::new(0.0, 0.0); 13], "zero").unwrap();
        assert!(dft(&z).values().iter().all(|v| v.norm() == 0.0));
    }
}
