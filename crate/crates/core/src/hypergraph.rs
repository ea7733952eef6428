//! k-uniform hypergraphs on dense integer vertex ids.
//!
//! A [`KGraph`] stores its edges twice: as a canonical sorted list (for
//! deterministic iteration) and in a hash set (for membership). Every edge is
//! kept sorted ascending. Vertex sets passed to queries are [`VertexSet`]
//! bitsets over `0..n`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{binomial_big, subsets};

pub type Vertex = u32;
pub type Edge = Vec<Vertex>;
pub type VertexSet = FixedBitSet;

/// Builds a vertex set over `0..n` from an iterator of ids.
pub fn vertex_set(n: usize, vertices: impl IntoIterator<Item = Vertex>) -> VertexSet {
    let mut set = FixedBitSet::with_capacity(n);
    for v in vertices {
        set.insert(v as usize);
    }
    set
}

/// The full vertex set `0..n`.
pub fn full_set(n: usize) -> VertexSet {
    let mut set = FixedBitSet::with_capacity(n);
    set.insert_range(..);
    set
}

pub(crate) fn set_members(set: &VertexSet) -> Vec<Vertex> {
    set.ones().map(|v| v as Vertex).collect()
}

#[derive(Clone)]
pub struct KGraph {
    k: usize,
    n: usize,
    edges: Vec<Edge>,
    index: HashSet<Edge>,
    incident: Vec<Vec<u32>>,
}

impl PartialEq for KGraph {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.n == other.n && self.edges == other.edges
    }
}

impl Eq for KGraph {}

impl fmt::Debug for KGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KGraph")
            .field("k", &self.k)
            .field("n", &self.n)
            .field("edges", &self.edges.len())
            .finish()
    }
}

impl KGraph {
    /// Builds a k-graph, sorting each edge and dropping duplicates.
    pub fn new(k: usize, n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument("uniformity must be at least 1".into()));
        }
        let mut list = Vec::new();
        for mut e in edges {
            e.sort_unstable();
            if e.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "edge {e:?} has {} vertices, expected {k}",
                    e.len()
                )));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("edge {e:?} repeats a vertex")));
            }
            if let Some(&v) = e.iter().find(|&&v| v as usize >= n) {
                return Err(Error::UnknownVertex(v));
            }
            list.push(e);
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted(k, n, list))
    }

    fn from_sorted(k: usize, n: usize, edges: Vec<Edge>) -> Self {
        let mut incident = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            for &v in e {
                incident[v as usize].push(i as u32);
            }
        }
        let index = edges.iter().cloned().collect();
        KGraph {
            k,
            n,
            edges,
            index,
            incident,
        }
    }

    pub fn empty(k: usize, n: usize) -> Self {
        Self::from_sorted(k, n, Vec::new())
    }

    /// The complete k-graph on `n` vertices.
    pub fn complete(k: usize, n: usize) -> Self {
        let vs: Vec<Vertex> = (0..n as Vertex).collect();
        Self::from_sorted(k, n, subsets(&vs, k).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Membership for a sorted edge.
    pub fn has_edge(&self, sorted: &[Vertex]) -> bool {
        self.index.contains(sorted)
    }

    /// Membership for a vertex list in any order.
    pub fn contains(&self, vertices: &[Vertex]) -> bool {
        let mut e = vertices.to_vec();
        e.sort_unstable();
        self.has_edge(&e)
    }

    /// Edges containing `v`, in canonical order.
    pub fn incident(&self, v: Vertex) -> impl Iterator<Item = &Edge> + '_ {
        self.incident[v as usize]
            .iter()
            .map(move |&i| &self.edges[i as usize])
    }

    pub fn vertex_degree(&self, v: Vertex) -> usize {
        self.incident[v as usize].len()
    }

    fn check_set(&self, set: &[Vertex]) -> Result<()> {
        if set.is_empty() || set.len() >= self.k {
            return Err(Error::InvalidArgument(format!(
                "set size {} outside [1, {}]",
                set.len(),
                self.k - 1
            )));
        }
        if let Some(&v) = set.iter().find(|&&v| v as usize >= self.n) {
            return Err(Error::UnknownVertex(v));
        }
        Ok(())
    }

    /// Number of edges `e` with `set ⊆ e` and `e \ set ⊆ within`.
    pub fn degree(&self, set: &[Vertex], within: &VertexSet) -> Result<u64> {
        self.check_set(set)?;
        if set.iter().any(|&v| within.contains(v as usize)) {
            return Err(Error::InvalidArgument("set and host set intersect".into()));
        }
        Ok(self.degree_unchecked(set, within))
    }

    pub(crate) fn degree_unchecked(&self, set: &[Vertex], within: &VertexSet) -> u64 {
        let pivot = set[0];
        self.incident(pivot)
            .filter(|e| {
                set.iter().all(|s| e.binary_search(s).is_ok())
                    && e.iter()
                        .all(|&x| set.contains(&x) || within.contains(x as usize))
            })
            .count() as u64
    }

    /// Edge counts for every `level`-set that lies in at least one edge.
    pub fn set_degrees(&self, level: usize) -> HashMap<Vec<Vertex>, u64> {
        let mut counts = HashMap::new();
        for e in &self.edges {
            for s in subsets(e, level) {
                *counts.entry(s).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Minimum `level`-degree with its exact normalisation by C(n−ℓ, k−ℓ).
    pub fn min_degree(&self, level: usize) -> Result<DegreeReport> {
        if level == 0 || level >= self.k {
            return Err(Error::InvalidArgument(format!(
                "degree level {level} outside [1, {}]",
                self.k - 1
            )));
        }
        if self.n < self.k {
            return Err(Error::InvalidArgument(format!(
                "need at least k = {} vertices, have {}",
                self.k, self.n
            )));
        }
        let counts = self.set_degrees(level);
        let vs: Vec<Vertex> = (0..self.n as Vertex).collect();
        let mut best: Option<(u64, Vec<Vertex>)> = None;
        for s in subsets(&vs, level) {
            let d = counts.get(&s).copied().unwrap_or(0);
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                let zero = d == 0;
                best = Some((d, s));
                if zero {
                    break;
                }
            }
        }
        let (min_degree, witness_set) = best.expect("n >= k > level so some set exists");
        let denom = binomial_big(self.n - level, self.k - level);
        Ok(DegreeReport {
            level,
            min_degree,
            normalized: BigRational::new(BigInt::from(min_degree), BigInt::from(denom)),
            witness_set,
        })
    }

    /// The (k−|S|)-graph on `within` of sets completing `set` to an edge,
    /// relabelled to `0..within.len()`. The second value maps new ids back.
    pub fn link_graph(&self, set: &[Vertex], within: &[Vertex]) -> Result<(KGraph, Vec<Vertex>)> {
        self.check_set(set)?;
        let mut sorted_within = within.to_vec();
        sorted_within.sort_unstable();
        sorted_within.dedup();
        if sorted_within.iter().any(|v| set.contains(v)) {
            return Err(Error::InvalidArgument("set and host set intersect".into()));
        }
        if let Some(&v) = sorted_within.iter().find(|&&v| v as usize >= self.n) {
            return Err(Error::UnknownVertex(v));
        }
        let mut relabel = HashMap::new();
        for (i, &v) in sorted_within.iter().enumerate() {
            relabel.insert(v, i as Vertex);
        }
        let mut edges = Vec::new();
        for e in self.incident(set[0]) {
            if !set.iter().all(|s| e.binary_search(s).is_ok()) {
                continue;
            }
            let rest: Option<Edge> = e
                .iter()
                .filter(|v| !set.contains(v))
                .map(|v| relabel.get(v).copied())
                .collect();
            if let Some(rest) = rest {
                edges.push(rest);
            }
        }
        edges.sort_unstable();
        let link = KGraph::from_sorted(self.k - set.len(), sorted_within.len(), edges);
        Ok((link, sorted_within))
    }

    /// The sub-hypergraph induced on `within`, relabelled to `0..within.len()`
    /// in sorted order. The second value maps new ids back.
    pub fn relabelled(&self, within: &[Vertex]) -> Result<(KGraph, Vec<Vertex>)> {
        let mut sorted = within.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&v) = sorted.iter().find(|&&v| v as usize >= self.n) {
            return Err(Error::UnknownVertex(v));
        }
        let mut relabel = vec![None; self.n];
        for (i, &v) in sorted.iter().enumerate() {
            relabel[v as usize] = Some(i as Vertex);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| e.iter().map(|&v| relabel[v as usize]).collect::<Option<Edge>>())
            .collect();
        Ok((Self::from_sorted(self.k, sorted.len(), edges), sorted))
    }

    /// Drops every edge touching `removed`. Vertex ids are kept.
    pub fn remove_vertices(&self, removed: &VertexSet) -> KGraph {
        let edges = self
            .edges
            .iter()
            .filter(|e| e.iter().all(|&v| !removed.contains(v as usize)))
            .cloned()
            .collect();
        Self::from_sorted(self.k, self.n, edges)
    }

    /// Keeps exactly the edges inside `kept`. Vertex ids are kept.
    pub fn induced(&self, kept: &VertexSet) -> KGraph {
        let edges = self
            .edges
            .iter()
            .filter(|e| e.iter().all(|&v| kept.contains(v as usize)))
            .cloned()
            .collect();
        Self::from_sorted(self.k, self.n, edges)
    }

    /// Whether the normalised minimum 1-degree dominates the normalised
    /// minimum `level`-degree. Always true; kept as a test predicate.
    pub fn check_degree_monotonicity(&self, level: usize) -> Result<bool> {
        let one = self.min_degree(1)?;
        let other = self.min_degree(level)?;
        Ok(one.normalized >= other.normalized)
    }

    pub fn to_file(&self) -> KGraphFile {
        KGraphFile {
            schema: Some(crate::instances::SCHEMA.to_string()),
            k: self.k,
            n: self.n,
            edges: self.edges.clone(),
        }
    }
}

/// Result of a minimum ℓ-degree computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    pub level: usize,
    pub min_degree: u64,
    #[serde(serialize_with = "crate::util_serde::ratio_string")]
    pub normalized: BigRational,
    pub witness_set: Vec<Vertex>,
}

impl DegreeReport {
    /// Exact check `normalized >= bound`.
    pub fn meets(&self, bound: &BigRational) -> bool {
        &self.normalized >= bound
    }

    pub fn is_complete(&self) -> bool {
        self.normalized.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.normalized.is_zero()
    }
}

/// On-disk form of a k-graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KGraphFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub k: usize,
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl TryFrom<KGraphFile> for KGraph {
    type Error = Error;

    fn try_from(file: KGraphFile) -> Result<Self> {
        crate::instances::check_schema(file.schema.as_deref())?;
        KGraph::new(file.k, file.n, file.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(k: usize, n: usize, p: f64, seed: u64) -> KGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vs: Vec<Vertex> = (0..n as Vertex).collect();
        let edges: Vec<Edge> = subsets(&vs, k).filter(|_| rng.gen_bool(p)).collect();
        KGraph::new(k, n, edges).unwrap()
    }

    #[test]
    fn relabelled_keeps_inner_edges_in_sorted_order() {
        let g = random_graph(3, 9, 0.6, 5);
        let (sub, back) = g.relabelled(&[7, 2, 5, 2, 0, 8]).unwrap();
        assert_eq!(back, vec![0, 2, 5, 7, 8]);
        assert_eq!(sub.n(), 5);
        let inside: Vec<Edge> = g.edges().iter().filter(|e| e.iter().all(|v| back.contains(v))).cloned().collect();
        let mapped: Vec<Edge> = sub.edges().iter().map(|e| e.iter().map(|&i| back[i as usize]).collect()).collect();
        assert_eq!(mapped, inside);
        assert!(matches!(g.relabelled(&[1, 9]), Err(Error::UnknownVertex(9))));
    }

    fn others(n: usize, set: &[Vertex]) -> VertexSet {
        vertex_set(n, (0..n as Vertex).filter(|v| !set.contains(v)))
    }

    #[test]
    fn degree_in_complete_graph() {
        let g = KGraph::complete(3, 5);
        assert_eq!(g.degree(&[0, 1], &others(5, &[0, 1])).unwrap(), 3);
        assert_eq!(g.degree(&[0, 1], &vertex_set(5, [])).unwrap(), 0);
        let single = KGraph::new(3, 3, vec![vec![2, 0, 1]]).unwrap();
        assert_eq!(single.degree(&[0], &vertex_set(3, [1, 2])).unwrap(), 1);
    }

    #[test]
    fn degree_errors() {
        let g = KGraph::complete(3, 5);
        assert!(matches!(
            g.degree(&[0, 1, 2], &vertex_set(5, [])),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            g.degree(&[9], &vertex_set(5, [])),
            Err(Error::UnknownVertex(9))
        ));
        assert!(matches!(
            g.degree(&[0], &vertex_set(5, [0, 1])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(KGraph::new(3, 4, vec![vec![0, 1]]).is_err());
        assert!(KGraph::new(3, 4, vec![vec![0, 1, 1]]).is_err());
        assert!(matches!(
            KGraph::new(3, 4, vec![vec![0, 1, 4]]),
            Err(Error::UnknownVertex(4))
        ));
        let g = KGraph::new(3, 4, vec![vec![2, 1, 0], vec![0, 1, 2]]).unwrap();
        assert_eq!(g.edges(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn min_degree_complete_and_empty() {
        let g = KGraph::complete(3, 6);
        let r = g.min_degree(2).unwrap();
        assert_eq!(r.min_degree, 4);
        assert!(r.is_complete());
        let e = KGraph::empty(3, 6);
        for l in 1..3 {
            assert!(e.min_degree(l).unwrap().is_zero());
        }
        assert!(g.min_degree(3).is_err());
        assert!(g.min_degree(0).is_err());
    }

    #[test]
    fn min_degree_matches_exhaustive_scan() {
        let g = random_graph(3, 8, 0.6, 11);
        let report = g.min_degree(2).unwrap();
        let vs: Vec<Vertex> = (0..8).collect();
        let brute = subsets(&vs, 2)
            .map(|s| {
                g.edges()
                    .iter()
                    .filter(|e| s.iter().all(|x| e.contains(x)))
                    .count() as u64
            })
            .min()
            .unwrap();
        assert_eq!(report.min_degree, brute);
        let witness_degree = g
            .degree(&report.witness_set, &others(8, &report.witness_set))
            .unwrap();
        assert_eq!(witness_degree, brute);
    }

    #[test]
    fn link_graph_examples() {
        let g = KGraph::new(3, 5, vec![vec![0, 1, 2], vec![0, 3, 4]]).unwrap();
        let (link, map) = g.link_graph(&[0], &[1, 2, 3, 4]).unwrap();
        assert_eq!(link.k(), 2);
        let back: Vec<Edge> = link
            .edges()
            .iter()
            .map(|e| e.iter().map(|&i| map[i as usize]).collect())
            .collect();
        assert_eq!(back, vec![vec![1, 2], vec![3, 4]]);

        let c = KGraph::complete(3, 6);
        let (link, _) = c.link_graph(&[0, 1], &[2, 3, 4, 5]).unwrap();
        assert_eq!(link.k(), 1);
        assert_eq!(link.num_edges(), 4);
    }

    #[test]
    fn removal_and_induction() {
        let g = KGraph::new(3, 5, vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(g.remove_vertices(&vertex_set(5, [])), g);
        assert_eq!(g.remove_vertices(&vertex_set(5, [1])).num_edges(), 0);
        assert_eq!(g.induced(&full_set(5)), g);
    }

    #[test]
    fn monotonicity_on_extremes() {
        assert!(KGraph::complete(4, 7).check_degree_monotonicity(3).unwrap());
        assert!(KGraph::empty(3, 6).check_degree_monotonicity(2).unwrap());
    }

    #[test]
    fn monotonicity_random_sweep() {
        for seed in 0..200u64 {
            let k = 3 + (seed % 2) as usize;
            let n = 6 + (seed % 4) as usize;
            let g = random_graph(k, n, 0.3 + (seed % 7) as f64 / 10.0, seed);
            for l in 1..k {
                assert!(g.check_degree_monotonicity(l).unwrap(), "seed {seed}");
            }
        }
    }

    proptest! {
        #[test]
        fn link_edge_count_equals_degree(seed in 0u64..500, split in 0usize..8) {
            let g = random_graph(3, 8, 0.5, seed);
            let s = vec![(seed % 8) as Vertex];
            let rest: Vec<Vertex> = (0..8).filter(|v| !s.contains(v)).collect();
            let (link, _) = g.link_graph(&s, &rest).unwrap();
            let full = vertex_set(8, rest.iter().copied());
            prop_assert_eq!(link.num_edges() as u64, g.degree(&s, &full).unwrap());

            // additivity over a split of U when |S| = k − 1
            let pair = vec![0 as Vertex, 1];
            let u: Vec<Vertex> = (2..8).collect();
            let (u1, u2) = u.split_at(split.min(u.len()));
            let d1 = g.degree(&pair, &vertex_set(8, u1.iter().copied())).unwrap();
            let d2 = g.degree(&pair, &vertex_set(8, u2.iter().copied())).unwrap();
            let d = g.degree(&pair, &vertex_set(8, u.iter().copied())).unwrap();
            prop_assert_eq!(d1 + d2, d);
        }

        #[test]
        fn removal_matches_filter(seed in 0u64..500, mask in 0u32..256) {
            let g = random_graph(3, 8, 0.5, seed);
            let x = vertex_set(8, (0..8).filter(|v| mask & (1 << v) != 0));
            let expect: Vec<Edge> = g.edges().iter()
                .filter(|e| e.iter().all(|&v| mask & (1 << v) == 0))
                .cloned().collect();
            let removed = g.remove_vertices(&x);
            prop_assert_eq!(removed.edges(), expect.as_slice());
        }
    }
}
