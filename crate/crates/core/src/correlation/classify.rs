use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::pgl::{swapped_pairs, PairForm, PglElement};
use super::spectrum::CorrelationSpectrum;
use crate::fp::{Fp2Element, PrimeContext};

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub form: PairForm,
    /// Roots in `P^1(F_{p^2})`; `null` is infinity.
    pub points: [Option<Fp2Element>; 2],
    pub split: bool,
}

/// Structural split of `G_{K,M}` following the definition of `(p, M)`-good weights.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Partition {
    /// `B u Bw u wB` and not accounted for otherwise.
    pub triangular: Vec<PglElement>,
    pub parabolic: Vec<PglElement>,
    /// `torus[i]` lies in the pointwise stabilizer of `pairs[i]`.
    pub torus: Vec<Vec<PglElement>>,
    /// `normalizer[i]` swaps the two points of `pairs[i]`.
    pub normalizer: Vec<Vec<PglElement>>,
    pub unclassified: Vec<PglElement>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.triangular.len()
            + self.parabolic.len()
            + self.torus.iter().map(Vec::len).sum::<usize>()
            + self.normalizer.iter().map(Vec::len).sum::<usize>()
            + self.unclassified.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodnessReport {
    pub p: u64,
    pub m: f64,
    pub is_good: bool,
    pub exceptional_count: usize,
    pub pairs: Vec<PairReport>,
    pub partition: Partition,
}

/// Split the exceptional set into triangular, parabolic and torus/normalizer
/// cells for at most `floor(M)` pairs.
///
/// Parabolic classes need no pair. The pairs are chosen greedily: first by the
/// number of not-yet-covered non-triangular elements they absorb (those are
/// the ones that force a pair), then by total coverage, then by torus
/// coverage, then by the smallest form. Pairs are still spent on purely
/// triangular families while budget remains, so a diagonal torus is reported
/// as a torus. Non-triangular leftovers are `unclassified`. The identity
/// joins the torus of the first pair, if any.
pub fn classify_exceptional(ctx: &PrimeContext, spec: &CorrelationSpectrum, m: f64) -> GoodnessReport {
    let p = ctx.p();
    let budget = if m.is_finite() && m > 0.0 { m.floor() as usize } else { 0 };
    let elements = spec.exceptional_set();
    let mut part = Partition::default();

    let mut has_scalar = false;
    // index -> essential?
    let mut pending: BTreeMap<usize, bool> = BTreeMap::new();
    let mut torus_of: BTreeMap<PairForm, Vec<usize>> = BTreeMap::new();
    let mut norm_of: BTreeMap<PairForm, Vec<usize>> = BTreeMap::new();

    for (i, g) in elements.iter().enumerate() {
        if g.is_scalar() {
            has_scalar = true;
            continue;
        }
        if g.discriminant(p) == 0 {
            part.parabolic.push(*g);
            continue;
        }
        pending.insert(i, !g.is_triangular());
        let own = PairForm::of_element(p, g).expect("semisimple");
        torus_of.entry(own).or_default().push(i);
        if g.trace(p) == 0 {
            for f in swapped_pairs(p, g) {
                norm_of.entry(f).or_default().push(i);
            }
        }
    }

    let candidates: BTreeSet<PairForm> = torus_of.keys().chain(norm_of.keys()).copied().collect();
    let mut chosen: Vec<PairForm> = Vec::new();
    while chosen.len() < budget {
        let score = |f: &PairForm| {
            let t = torus_of.get(f).map_or(&[][..], Vec::as_slice);
            let n = norm_of.get(f).map_or(&[][..], Vec::as_slice);
            let live = |v: &[usize]| v.iter().filter(|i| pending.contains_key(i)).count();
            let essential = t
                .iter()
                .chain(n)
                .filter(|i| pending.get(i).copied().unwrap_or(false))
                .count();
            (essential, live(t) + live(n), live(t), Reverse(*f))
        };
        let Some(best) = candidates
            .iter()
            .filter(|f| !chosen.contains(f))
            .max_by_key(|f| score(f))
            .copied()
        else {
            break;
        };
        if score(&best).1 == 0 {
            break;
        }
        let mut torus = Vec::new();
        let mut normal = Vec::new();
        for &i in torus_of.get(&best).into_iter().flatten() {
            if pending.remove(&i).is_some() {
                torus.push(elements[i]);
            }
        }
        for &i in norm_of.get(&best).into_iter().flatten() {
            if pending.remove(&i).is_some() {
                normal.push(elements[i]);
            }
        }
        torus.sort();
        normal.sort();
        part.torus.push(torus);
        part.normalizer.push(normal);
        chosen.push(best);
    }

    for (&i, &essential) in &pending {
        if essential {
            part.unclassified.push(elements[i]);
        } else {
            part.triangular.push(elements[i]);
        }
    }
    if has_scalar {
        match part.torus.first_mut() {
            Some(t) => t.insert(0, PglElement::identity()),
            None => part.triangular.insert(0, PglElement::identity()),
        }
    }
    part.triangular.sort();
    part.parabolic.sort();

    let pairs = chosen
        .iter()
        .map(|f| PairReport {
            form: *f,
            points: f.roots(ctx),
            split: f.is_split(ctx),
        })
        .collect::<Vec<_>>();
    GoodnessReport {
        p,
        m,
        is_good: part.unclassified.is_empty() && pairs.len() <= budget,
        exceptional_count: elements.len(),
        pairs,
        partition: part,
    }
}
