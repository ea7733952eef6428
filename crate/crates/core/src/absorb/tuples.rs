use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{Edge, KGraph, Vertex};
use crate::util::permutations;

/// Two host edges meeting exactly in `centre`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoStar {
    pub centre: Vertex,
    /// The two edges minus the centre, each sorted.
    pub leaves: [Vec<Vertex>; 2],
}

impl TwoStar {
    pub fn new(centre: Vertex, mut a: Vec<Vertex>, mut b: Vec<Vertex>) -> Self {
        a.sort_unstable();
        b.sort_unstable();
        TwoStar { centre, leaves: [a, b] }
    }

    /// The star's edge through the given leaf set.
    pub fn edge(&self, j: usize) -> Edge {
        let mut e = self.leaves[j].clone();
        e.push(self.centre);
        e.sort_unstable();
        e
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        std::iter::once(self.centre).chain(self.leaves.iter().flatten().copied())
    }

    /// Whether both edges are in `host` and the shape is right for its k.
    pub fn is_valid(&self, host: &KGraph) -> bool {
        let k = host.k();
        let [a, b] = &self.leaves;
        a.len() == k - 1
            && b.len() == k - 1
            && !a.contains(&self.centre)
            && !b.contains(&self.centre)
            && a.iter().all(|w| !b.contains(w))
            && host.has_edge(&self.edge(0))
            && host.has_edge(&self.edge(1))
    }
}

/// k−1 vertex-disjoint 2-stars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarTuple {
    pub stars: Vec<TwoStar>,
}

impl StarTuple {
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.stars.iter().flat_map(|s| s.vertices())
    }

    /// An ordering of the stars that absorbs `targets`, if one exists.
    pub fn absorbing_order(&self, host: &KGraph, targets: &[Vertex]) -> Option<Vec<TwoStar>> {
        let idx: Vec<usize> = (0..self.stars.len()).collect();
        permutations(&idx).into_iter().find_map(|p| {
            let stars: Vec<TwoStar> = p.iter().map(|&i| self.stars[i].clone()).collect();
            is_absorbing_tuple(host, targets, &stars).then_some(stars)
        })
    }
}

/// A star tuple paired with the targets it absorbs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbingTuple {
    pub targets: Vec<Vertex>,
    pub stars: Vec<TwoStar>,
    /// `{w1} ∪ {centres}`, sorted.
    pub anchor_edge: Edge,
}

impl AbsorbingTuple {
    pub fn new(host: &KGraph, targets: Vec<Vertex>, stars: Vec<TwoStar>) -> Option<Self> {
        if !is_absorbing_tuple(host, &targets, &stars) {
            return None;
        }
        let anchor_edge = anchor(&targets, &stars);
        Some(AbsorbingTuple { targets, stars, anchor_edge })
    }
}

fn anchor(targets: &[Vertex], stars: &[TwoStar]) -> Edge {
    let mut e: Edge = std::iter::once(targets[0]).chain(stars.iter().map(|s| s.centre)).collect();
    e.sort_unstable();
    e
}

/// Whether `stars[i]` (centre v_{i+2}) can swap in the target `targets[i+1]`
/// while `targets[0]` anchors the new edge through the centres.
pub fn is_absorbing_tuple(host: &KGraph, targets: &[Vertex], stars: &[TwoStar]) -> bool {
    let k = host.k();
    if targets.len() != k || stars.len() != k - 1 {
        return false;
    }
    let mut seen = vec![false; host.n()];
    for &w in targets {
        if w as usize >= host.n() || std::mem::replace(&mut seen[w as usize], true) {
            return false;
        }
    }
    let mut star_seen = vec![false; host.n()];
    for s in stars {
        if s.vertices().any(|w| w as usize >= host.n()) || !s.is_valid(host) {
            return false;
        }
        if s.vertices().any(|w| std::mem::replace(&mut star_seen[w as usize], true)) {
            return false;
        }
    }
    if !host.has_edge(&anchor(targets, stars)) {
        return false;
    }
    stars.iter().zip(&targets[1..]).all(|(s, &w)| {
        s.leaves.iter().all(|l| {
            let mut e = l.clone();
            e.push(w);
            host.contains(&e)
        })
    })
}

/// How many family tuples absorb one sampled target tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub targets: Vec<Vertex>,
    pub absorbing: usize,
}

/// Vertex-disjoint star tuples avoiding the excluded vertices, with a
/// sampled report of how well they absorb random targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberFamily {
    pub tuples: Vec<StarTuple>,
    /// ⌈α_target · n⌉: the count each target would ideally reach.
    pub required_per_target: usize,
    pub report: Vec<TargetCheck>,
}

impl AbsorberFamily {
    pub fn vertices(&self) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.tuples.iter().flat_map(|t| t.vertices()).collect();
        v.sort_unstable();
        v
    }

    pub fn stars(&self) -> Vec<TwoStar> {
        self.tuples.iter().flat_map(|t| t.stars.iter().cloned()).collect()
    }

    /// Smallest sampled absorbing count.
    pub fn min_absorbing(&self) -> Option<usize> {
        self.report.iter().map(|c| c.absorbing).min()
    }
}

const TARGET_SAMPLES: usize = 32;
const TUPLE_TRIES: usize = 64;

/// Greedily samples ⌊βn⌋ vertex-disjoint star tuples avoiding `excluded`.
pub fn find_absorber_family(
    host: &KGraph,
    beta: Rational64,
    alpha_target: Rational64,
    excluded: &[Vertex],
    seed: u64,
) -> Result<AbsorberFamily> {
    let size = floor_times(beta, host.n());
    family_of_size(host, size, alpha_target, excluded, seed)
}

pub(crate) fn floor_times(x: Rational64, n: usize) -> usize {
    (*x.numer() as i128 * n as i128 / *x.denom() as i128) as usize
}

pub(crate) fn family_of_size(
    host: &KGraph,
    size: usize,
    alpha_target: Rational64,
    excluded: &[Vertex],
    seed: u64,
) -> Result<AbsorberFamily> {
    let (k, n) = (host.k(), host.n());
    for &x in excluded {
        if x as usize >= n {
            return Err(Error::UnknownVertex(x));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = vec![false; n];
    for &x in excluded {
        used[x as usize] = true;
    }
    let mut tuples = Vec::with_capacity(size);
    let mut misses = 0;
    while tuples.len() < size && misses < TUPLE_TRIES {
        match sample_tuple(host, &used, &mut rng) {
            Some(t) => {
                for w in t.vertices() {
                    used[w as usize] = true;
                }
                tuples.push(t);
                misses = 0;
            }
            None => misses += 1,
        }
    }
    if tuples.len() < size {
        return Err(Error::FamilyTooSmall { achieved: tuples.len(), required: size });
    }
    let free: Vec<Vertex> = (0..n as Vertex).filter(|&w| !used[w as usize]).collect();
    let mut report = Vec::new();
    if free.len() >= k {
        for _ in 0..TARGET_SAMPLES {
            let targets: Vec<Vertex> = free.choose_multiple(&mut rng, k).copied().collect();
            let absorbing = tuples.iter().filter(|t| t.absorbing_order(host, &targets).is_some()).count();
            report.push(TargetCheck { targets, absorbing });
        }
    }
    let (num, den) = (*alpha_target.numer() as i128 * n as i128, *alpha_target.denom() as i128);
    let required_per_target = ((num + den - 1) / den) as usize;
    Ok(AbsorberFamily { tuples, required_per_target, report })
}

/// One tuple of k−1 disjoint 2-stars on unused vertices, or None after a
/// failed random attempt.
fn sample_tuple(host: &KGraph, used: &[bool], rng: &mut ChaCha8Rng) -> Option<StarTuple> {
    let k = host.k();
    let mut taken = used.to_vec();
    let free: Vec<Vertex> = (0..host.n() as Vertex).filter(|&w| !taken[w as usize]).collect();
    if free.len() < (k - 1) * (2 * k - 1) {
        return None;
    }
    let mut stars = Vec::with_capacity(k - 1);
    for _ in 0..k - 1 {
        let c = loop {
            let c = free[rng.gen_range(0..free.len())];
            if !taken[c as usize] {
                break c;
            }
        };
        let ok = |e: &Edge, taken: &[bool]| e.iter().all(|&w| w == c || !taken[w as usize]);
        let at_c: Vec<&Edge> = host.incident(c).filter(|e| ok(e, &taken)).collect();
        let first = (*at_c.choose(rng)?).clone();
        let second: Vec<&Edge> = at_c
            .into_iter()
            .filter(|e| e.iter().all(|&w| w == c || first.binary_search(&w).is_err()))
            .collect();
        let second = (*second.choose(rng)?).clone();
        let star = TwoStar::new(
            c,
            first.into_iter().filter(|&w| w != c).collect(),
            second.into_iter().filter(|&w| w != c).collect(),
        );
        for w in star.vertices() {
            taken[w as usize] = true;
        }
        stars.push(star);
    }
    Some(StarTuple { stars })
}
