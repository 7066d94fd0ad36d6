use proptest::prelude::*;
use tracelab::correlation::{self, pgl_enumerate, CatalogCase, PglElement};
use tracelab::fp::{self, dft, PrimeContext};
use tracelab::weights::{self, WeightTable};
use tracelab::Complex64;

fn odd_primes(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| n > 2 && fp::is_prime(n)).collect()
}

/// Straight from the definition, with its own transform and Mobius action.
fn oracle_corr(values: &[Complex64], g: [i64; 4]) -> Complex64 {
    let p = values.len() as i64;
    let kh: Vec<Complex64> = (0..p)
        .map(|z| {
            values
                .iter()
                .enumerate()
                .map(|(x, v)| v * fp::e(((z * x as i64) % p) as f64 / p as f64))
                .sum::<Complex64>()
                / (p as f64).sqrt()
        })
        .collect();
    let [a, b, c, d] = g;
    (0..p)
        .filter_map(|z| {
            let den = (c * z + d).rem_euclid(p);
            if den == 0 {
                return None;
            }
            let inv = fp::mod_inv(den, p as u64).unwrap() as i64;
            let w = ((a * z + b).rem_euclid(p) * inv) % p;
            Some(kh[w as usize] * kh[z as usize].conj())
        })
        .sum()
}

fn random_weight(p: u64) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), p as usize)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn setup() -> impl Strategy<Value = (u64, Vec<Complex64>, [i64; 4])> {
    prop::sample::select(odd_primes(3, 61)).prop_flat_map(|p| {
        let e = 0..p as i64;
        (Just(p), random_weight(p), [e.clone(), e.clone(), e.clone(), e])
            .prop_filter("invertible", |(p, _, [a, b, c, d])| (a * d - b * c).rem_euclid(*p as i64) != 0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_definition((p, vals, g) in setup()) {
        let ctx = PrimeContext::new(p).unwrap();
        let k = WeightTable::new(&ctx, vals.clone(), "random").unwrap();
        let el = PglElement::new(p, g[0], g[1], g[2], g[3]).unwrap();
        let got = correlation::corr_sum(&dft(&k), &el);
        let want = oracle_corr(&vals, g);
        prop_assert!((got - want).norm() < 1e-9 * p as f64, "{got} vs {want}");
    }

    #[test]
    fn inverse_gives_conjugate((p, vals, g) in setup()) {
        let ctx = PrimeContext::new(p).unwrap();
        let kh = dft(&WeightTable::new(&ctx, vals, "random").unwrap());
        let el = PglElement::new(p, g[0], g[1], g[2], g[3]).unwrap();
        let a = correlation::corr_sum(&kh, &el);
        let b = correlation::corr_sum(&kh, &el.inverse(p));
        prop_assert!((a - b.conj()).norm() < 1e-9 * p as f64);
    }

    #[test]
    fn identity_and_parseval((p, vals, _g) in setup()) {
        let ctx = PrimeContext::new(p).unwrap();
        let k = WeightTable::new(&ctx, vals, "random").unwrap();
        let ceiling = p as f64 * k.l2_norm().powi(2);
        let s = correlation::spectrum(&k, 1.0);
        let id = s.value(&PglElement::identity()).unwrap();
        prop_assert!((id - ceiling).norm() < 1e-6 * p as f64);
        for v in s.entries.as_ref().unwrap() {
            prop_assert!(v.norm() <= ceiling * (1.0 + 1e-6) + 1e-6 * p as f64);
        }
        prop_assert!(s.max_parseval_ratio <= 1.0 + 1e-6);
    }
}

#[test]
fn enumeration_is_a_bijection_onto_indices() {
    for p in [3u64, 5, 7, 13] {
        let all: Vec<_> = pgl_enumerate(p).collect();
        assert_eq!(all.len() as u64, p * p * p - p);
        assert_eq!(PglElement::group_order(p), p * p * p - p);
        for (i, g) in all.iter().enumerate() {
            assert_eq!(g.index(p), i as u64);
            assert_eq!(PglElement::from_index(p, i as u64), *g);
            assert_ne!(g.det(p), 0);
        }
        let set: std::collections::BTreeSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
    }
}

#[test]
fn spectra_are_reproducible() {
    let ctx = PrimeContext::new(23).unwrap();
    let k = weights::hyper_kloosterman_table(&ctx, 3).unwrap();
    let a = serde_json::to_string(&correlation::spectrum(&k, 2.0)).unwrap();
    let b = serde_json::to_string(&correlation::spectrum(&k, 2.0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn legendre_mod_three_has_every_entry() {
    let ctx = PrimeContext::new(3).unwrap();
    let s = correlation::spectrum(&weights::legendre_weight(&ctx), 1.0);
    assert_eq!(s.entries.unwrap().len(), 24);
}

#[test]
fn exceptional_sets_are_sparse_for_catalog_weights() {
    for p in [17u64, 29, 53] {
        let ctx = PrimeContext::new(p).unwrap();
        let cases = [
            (CatalogCase::Kloosterman, 3.0),
            (CatalogCase::Dirac { u: 1 }, 3.0),
            (CatalogCase::Character { k: 1 }, 2.0),
            (CatalogCase::Character { k: (p - 1) / 2 }, 2.0),
        ];
        for (case, m) in cases {
            let s = correlation::spectrum(&case.weight(&ctx).unwrap(), m);
            assert!(s.exceptional.len() as u64 <= 2 * (p + 1), "{} p={p}: {}", case.name(), s.exceptional.len());
        }
    }
}

#[test]
fn additive_weight_is_not_good_for_small_m() {
    let ctx = PrimeContext::new(13).unwrap();
    let s = correlation::spectrum(&weights::additive_weight(&ctx, 1), 1.0);
    let r = correlation::classify_exceptional(&ctx, &s, 1.0);
    assert!(!r.is_good);
    let mu = ctx.neg(1);
    assert!(s.exceptional.iter().all(|e| e.gamma.act(13, mu) == Some(mu)));
    assert_eq!(s.exceptional.len(), 13 * 12);
}
