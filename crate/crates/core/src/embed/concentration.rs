use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::{KGraph, Vertex, VertexSet};
use crate::util::{binomial_big, derive_seed, subsets};

/// Every ℓ-set of a host with the (k−ℓ)-sets completing it to an edge, laid
/// out for repeated degree checks against many vertex subsets.
pub struct DegreeIndex {
    k: usize,
    level: usize,
    sets: Vec<Vec<Vertex>>,
    /// Neighbour sets when k − ℓ = 1.
    neighbours: Vec<FixedBitSet>,
    /// Flattened completions (k − ℓ vertices each) when k − ℓ > 1.
    rests: Vec<Vertex>,
    offsets: Vec<usize>,
}

impl DegreeIndex {
    pub fn new(host: &KGraph, level: usize) -> Result<Self> {
        let (k, n) = (host.k(), host.n());
        if level == 0 || level >= k {
            return Err(Error::InvalidArgument(format!("degree level {level} outside [1, {}]", k - 1)));
        }
        let all: Vec<Vertex> = (0..n as Vertex).collect();
        let sets: Vec<Vec<Vertex>> = subsets(&all, level).collect();
        let slot = |s: &[Vertex]| sets.binary_search_by(|x| x.as_slice().cmp(s)).expect("every ℓ-set is listed");
        let width = k - level;
        let mut neighbours = Vec::new();
        let mut rests = Vec::new();
        let mut offsets = vec![0];
        if width == 1 {
            neighbours = vec![FixedBitSet::with_capacity(n); sets.len()];
            for e in host.edges() {
                for s in subsets(e, level) {
                    let w = *e.iter().find(|w| !s.contains(w)).expect("k > ℓ");
                    neighbours[slot(&s)].insert(w as usize);
                }
            }
        } else {
            let mut per: Vec<Vec<Vertex>> = vec![Vec::new(); sets.len()];
            for e in host.edges() {
                for s in subsets(e, level) {
                    per[slot(&s)].extend(e.iter().filter(|w| !s.contains(w)));
                }
            }
            for p in per {
                rests.extend(p);
                offsets.push(rests.len());
            }
        }
        Ok(DegreeIndex { k, level, sets, neighbours, rests, offsets })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// d_X(S): edges S ∪ T with T ⊆ X ∖ S.
    pub fn degree_into(&self, i: usize, x: &VertexSet) -> u64 {
        if !self.neighbours.is_empty() {
            return self.neighbours[i].intersection_count(x) as u64;
        }
        let width = self.k - self.level;
        self.rests[self.offsets[i]..self.offsets[i + 1]]
            .chunks_exact(width)
            .filter(|t| t.iter().all(|&w| x.contains(w as usize)))
            .count() as u64
    }

    /// The first ℓ-set S with d_X(S) < t·C(|X∖S|, k−ℓ), and its degree.
    pub fn first_violation(&self, x: &VertexSet, t: &BigRational) -> Option<(Vec<Vertex>, u64)> {
        let size = x.count_ones(..);
        let width = self.k - self.level;
        self.sets.iter().enumerate().find_map(|(i, s)| {
            let inside = s.iter().filter(|&&v| x.contains(v as usize)).count();
            let d = self.degree_into(i, x);
            let need = t * BigRational::from_integer(BigInt::from(binomial_big(size - inside, width)));
            (BigRational::from_integer(BigInt::from(d)) < need).then(|| (s.clone(), d))
        })
    }
}

/// Each vertex independently with probability p.
pub fn random_subset(n: usize, p: f64, seed: u64) -> VertexSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = FixedBitSet::with_capacity(n);
    for v in 0..n {
        if rng.gen_bool(p) {
            x.insert(v);
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub level: usize,
    pub p: f64,
    /// The threshold checked: min normalised ℓ-degree − γ/2.
    #[serde(serialize_with = "crate::util_serde::ratio_string")]
    pub threshold: BigRational,
    pub trials: usize,
    pub passed: usize,
    /// Trial index, ℓ-set and its degree for the first failing trial.
    pub first_failure: Option<(usize, Vec<Vertex>, u64)>,
}

impl ConcentrationReport {
    pub fn pass_rate(&self) -> f64 {
        self.passed as f64 / self.trials.max(1) as f64
    }
}

/// The threshold δ + γ/2 where δ + γ is the host's minimum normalised
/// ℓ-degree.
pub fn concentration_threshold(host: &KGraph, level: usize, gamma: Rational64) -> Result<BigRational> {
    let report = host.min_degree(level)?;
    let half = BigRational::new(BigInt::from(*gamma.numer()), BigInt::from(2 * *gamma.denom()));
    Ok(report.normalized - half)
}

/// One Monte Carlo trial: draws a p-random subset with seed
/// `derive_seed(seed, trial)` and checks every ℓ-set's degree into it.
pub fn concentration_trial(index: &DegreeIndex, n: usize, p: f64, threshold: &BigRational, seed: u64, trial: usize) -> Option<(Vec<Vertex>, u64)> {
    let x = random_subset(n, p, derive_seed(seed, trial as u64));
    index.first_violation(&x, threshold)
}

/// Sequential run of `trials` concentration trials.
pub fn concentration_experiment(host: &KGraph, level: usize, p: f64, gamma: Rational64, trials: usize, seed: u64) -> Result<ConcentrationReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} is not a probability")));
    }
    let index = DegreeIndex::new(host, level)?;
    let threshold = concentration_threshold(host, level, gamma)?;
    let mut passed = 0;
    let mut first_failure = None;
    for t in 0..trials {
        match concentration_trial(&index, host.n(), p, &threshold, seed, t) {
            None => passed += 1,
            Some((s, d)) => {
                first_failure.get_or_insert((t, s, d));
            }
        }
    }
    Ok(ConcentrationReport { n: host.n(), level, p, threshold, trials, passed, first_failure })
}
