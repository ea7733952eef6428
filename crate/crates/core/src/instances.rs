//! Instance generators, the extremal constructions, and JSON persistence.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{Edge, KGraph, KGraphFile, Vertex};
use crate::hypertree::{Hypertree, HypertreeFile};
use crate::matching::GraphSystem;
use crate::util::{binomial, derive_seed, subsets};

pub const SCHEMA: &str = "loosetree-v1";

/// Files without a schema tag are accepted; any other tag is rejected.
pub fn check_schema(tag: Option<&str>) -> Result<()> {
    match tag {
        None => Ok(()),
        Some(SCHEMA) => Ok(()),
        Some(other) => Err(Error::SchemaVersion(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    UniformAttachment,
    PathHeavy,
    StarHeavy,
    Density,
    MinDegree,
    Complete,
}

impl GenKind {
    pub fn is_tree(self) -> bool {
        matches!(self, GenKind::UniformAttachment | GenKind::PathHeavy | GenKind::StarHeavy)
    }
}

/// Generator parameters. `param` is the attachment bias for the biased tree
/// kinds, the edge probability for `Density` and the normalised target
/// (k−1)-degree for `MinDegree`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub k: usize,
    pub param: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn tree(kind: GenKind, n: usize, k: usize, seed: u64) -> Self {
        GenSpec {
            kind,
            n,
            k,
            param: 0.5,
            seed,
        }
    }

    pub fn graph(kind: GenKind, n: usize, k: usize, param: f64, seed: u64) -> Self {
        GenSpec {
            kind,
            n,
            k,
            param,
            seed,
        }
    }
}

/// Random rooted hypertree grown edge by edge; the root is vertex 0 and new
/// vertices are numbered in order of creation.
pub fn random_hypertree(spec: &GenSpec) -> Result<Hypertree> {
    let GenSpec { kind, n, k, param, seed } = *spec;
    if !kind.is_tree() {
        return Err(Error::InvalidArgument(format!("{kind:?} does not generate trees")));
    }
    if k < 2 || n == 0 || (n - 1) % (k - 1) != 0 {
        return Err(Error::InvalidArgument(format!("n = {n} is not 1 mod k − 1 for k = {k}")));
    }
    if !(0.0..=1.0).contains(&param) {
        return Err(Error::InvalidArgument("bias must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (n - 1) / (k - 1);
    let mut edges: Vec<Edge> = Vec::with_capacity(m);
    let mut next: Vertex = 1;
    for i in 0..m {
        let anchor = if i == 0 {
            0
        } else {
            let biased = rng.gen_bool(param);
            match kind {
                // the k−1 vertices created with the previous edge
                GenKind::PathHeavy if biased => rng.gen_range(next - (k - 1) as Vertex..next),
                GenKind::StarHeavy if biased => 0,
                _ => rng.gen_range(0..next),
            }
        };
        let mut e = vec![anchor];
        e.extend(next..next + (k - 1) as Vertex);
        e.sort_unstable();
        next += (k - 1) as Vertex;
        edges.push(e);
    }
    Ok(Hypertree::raw(k, n, 0, None, edges))
}

/// Random host graphs.
pub fn random_kgraph(spec: &GenSpec) -> Result<KGraph> {
    let GenSpec { kind, n, k, param, seed } = *spec;
    if k < 2 || n < k {
        return Err(Error::InvalidArgument(format!("need 2 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vs: Vec<Vertex> = (0..n as Vertex).collect();
    match kind {
        GenKind::Complete => Ok(KGraph::complete(k, n)),
        GenKind::Density => {
            if !(0.0..=1.0).contains(&param) {
                return Err(Error::InvalidArgument("density must lie in [0, 1]".into()));
            }
            KGraph::new(k, n, subsets(&vs, k).filter(|_| rng.gen_bool(param)))
        }
        GenKind::MinDegree => {
            if !(0.0..=1.0).contains(&param) {
                return Err(Error::InvalidArgument("target degree must lie in [0, 1]".into()));
            }
            let target = (param * (n - k + 1) as f64).ceil() as usize;
            let mut edges: std::collections::HashSet<Edge> =
                subsets(&vs, k).filter(|_| rng.gen_bool(param * 0.8)).collect();
            for s in subsets(&vs, k - 1) {
                let mut missing = Vec::new();
                let mut have = 0;
                for &x in &vs {
                    if s.contains(&x) {
                        continue;
                    }
                    let mut e = s.clone();
                    e.push(x);
                    e.sort_unstable();
                    if edges.contains(&e) {
                        have += 1;
                    } else {
                        missing.push(e);
                    }
                }
                missing.shuffle(&mut rng);
                for e in missing.into_iter().take(target.saturating_sub(have)) {
                    edges.insert(e);
                }
            }
            KGraph::new(k, n, edges)
        }
        _ => Err(Error::InvalidArgument(format!("{kind:?} does not generate host graphs"))),
    }
}

/// All k-subsets of `0..n−1` together with `e ∪ {n−1}` for every edge `e`
/// of the (k−1)-graph `h`. Returns the graph and the apex `n−1`.
pub fn tightness_construction(k: usize, level: usize, n: usize, h: &KGraph) -> Result<(KGraph, Vertex)> {
    if level == 0 || level >= k {
        return Err(Error::InvalidArgument(format!("level {level} outside [1, {}]", k - 1)));
    }
    if h.k() + 1 != k || h.n() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "expected a {}-graph on {} vertices, got a {}-graph on {}",
            k - 1,
            n - 1,
            h.k(),
            h.n()
        )));
    }
    let apex = (n - 1) as Vertex;
    let base: Vec<Vertex> = (0..apex).collect();
    let edges = subsets(&base, k).chain(h.edges().iter().map(|e| {
        let mut e = e.clone();
        e.push(apex);
        e
    }));
    Ok((KGraph::new(k, n, edges)?, apex))
}

/// Space barrier: all k-sets meeting `W = {0, …, n/k − 2}`. Every edge uses
/// a vertex of W and |W| < n/k, so there is no perfect matching.
pub fn pm_barrier(k: usize, n: usize) -> Result<KGraph> {
    if k == 0 || n == 0 || !n.is_multiple_of(k) {
        return Err(Error::InvalidArgument(format!("{k} does not divide {n}")));
    }
    let w = (n / k - 1) as Vertex;
    let vs: Vec<Vertex> = (0..n as Vertex).collect();
    KGraph::new(k, n, subsets(&vs, k).filter(|e| e[0] < w))
}

/// Number of k-sets meeting a fixed w-set out of n vertices.
pub fn pm_barrier_edge_count(k: usize, n: usize) -> u64 {
    let w = n / k - 1;
    binomial(n, k) - binomial(n - w, k)
}

/// JSON persistence with a schema tag and canonical output.
pub trait Persist: Sized {
    type File: Serialize + DeserializeOwned;

    fn to_file(&self) -> Self::File;
    fn from_file(file: Self::File) -> Result<Self>;

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("serialisable");
        s.push('\n');
        s
    }

    fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Persist for KGraph {
    type File = KGraphFile;

    fn to_file(&self) -> KGraphFile {
        KGraph::to_file(self)
    }

    fn from_file(file: KGraphFile) -> Result<Self> {
        file.try_into()
    }
}

impl Persist for Hypertree {
    type File = HypertreeFile;

    fn to_file(&self) -> HypertreeFile {
        Hypertree::to_file(self)
    }

    fn from_file(file: HypertreeFile) -> Result<Self> {
        file.try_into()
    }
}

/// `m` independent random k-graphs on n vertices, graph j with edge
/// probability `density` and seed `derive_seed(seed, j)`.
pub fn random_graph_system(k: usize, n: usize, m: usize, density: f64, seed: u64) -> Result<GraphSystem> {
    let graphs = (0..m)
        .map(|j| random_kgraph(&GenSpec::graph(GenKind::Density, n, k, density, derive_seed(seed, j as u64))))
        .collect::<Result<Vec<_>>>()?;
    GraphSystem::new(k, n, graphs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{perfect_matching, SolveOutcome};

    #[test]
    fn single_edge_for_every_kind() {
        for kind in [GenKind::UniformAttachment, GenKind::PathHeavy, GenKind::StarHeavy] {
            let t = random_hypertree(&GenSpec::tree(kind, 4, 4, 9)).unwrap();
            assert_eq!(t.edges(), &[vec![0, 1, 2, 3]]);
        }
    }

    #[test]
    fn generated_trees_validate() {
        let kinds = [GenKind::UniformAttachment, GenKind::PathHeavy, GenKind::StarHeavy];
        for seed in 0..1000u64 {
            let k = 3 + (seed % 3) as usize;
            let n = 1 + (k - 1) * (1 + (seed % 40) as usize);
            let mut spec = GenSpec::tree(kinds[(seed % 3) as usize], n, k, seed);
            spec.param = (seed % 11) as f64 / 10.0;
            let t = random_hypertree(&spec).unwrap();
            assert_eq!(t.validate(), Ok(()), "seed {seed}");
        }
        assert!(random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 10, 3, 0)).is_err());
    }

    #[test]
    fn full_bias_star() {
        let mut spec = GenSpec::tree(GenKind::StarHeavy, 21, 3, 5);
        spec.param = 1.0;
        assert_eq!(random_hypertree(&spec).unwrap(), Hypertree::star(3, 10));
    }

    #[test]
    fn full_bias_path_is_path() {
        let mut spec = GenSpec::tree(GenKind::PathHeavy, 21, 3, 5);
        spec.param = 1.0;
        let t = random_hypertree(&spec).unwrap();
        assert_eq!(t.leaf_edges().len(), 2);
    }

    #[test]
    fn host_generators() {
        let g = random_kgraph(&GenSpec::graph(GenKind::Density, 10, 3, 1.0, 0)).unwrap();
        assert_eq!(g, KGraph::complete(3, 10));
        let g = random_kgraph(&GenSpec::graph(GenKind::MinDegree, 14, 3, 0.7, 3)).unwrap();
        let rep = g.min_degree(2).unwrap();
        assert!(rep.min_degree as f64 >= 0.7 * 12.0);
        assert!(random_kgraph(&GenSpec::graph(GenKind::PathHeavy, 10, 3, 0.5, 0)).is_err());
    }

    #[test]
    fn barrier_has_no_perfect_matching() {
        assert_eq!(pm_barrier(3, 3).unwrap().num_edges(), 0);
        for (k, n) in [(2, 6), (2, 10), (2, 12), (3, 9), (3, 12), (3, 15), (4, 12)] {
            let g = pm_barrier(k, n).unwrap();
            assert_eq!(g.num_edges() as u64, pm_barrier_edge_count(k, n));
            assert_eq!(perfect_matching(&g, None).unwrap(), SolveOutcome::NoSolution, "k={k} n={n}");
            let rep = g.min_degree(1).unwrap();
            assert!(rep.min_degree > 0 || n == k);
        }
        assert!(pm_barrier(3, 10).is_err());
    }

    #[test]
    fn tightness_degrees() {
        let h = pm_barrier(2, 8).unwrap();
        let (g, v) = tightness_construction(3, 2, 9, &h).unwrap();
        assert_eq!(v, 8);
        let all = crate::hypergraph::full_set(9);
        let vs: Vec<Vertex> = (0..9).collect();
        let hall = crate::hypergraph::full_set(8);
        for s in subsets(&vs, 2) {
            let mut rest = all.clone();
            for &x in &s {
                rest.set(x as usize, false);
            }
            let d = g.degree(&s, &rest).unwrap();
            if s.contains(&v) {
                let u = s[0];
                let mut hrest = hall.clone();
                hrest.set(u as usize, false);
                assert_eq!(d, h.degree(&[u], &hrest).unwrap());
            } else {
                let extra = h.has_edge(&s) as u64;
                assert_eq!(d, binomial(8 - 2, 1) + extra);
            }
        }
        let (g, _) = tightness_construction(3, 2, 9, &KGraph::complete(2, 8)).unwrap();
        assert_eq!(g, KGraph::complete(3, 9));
        assert!(tightness_construction(3, 2, 9, &KGraph::complete(3, 8)).is_err());
    }

    #[test]
    fn round_trips_and_schema() {
        for seed in 0..200u64 {
            let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 21, 3, seed)).unwrap();
            assert_eq!(Hypertree::from_json(&t.to_json()).unwrap(), t);
            let g = random_kgraph(&GenSpec::graph(GenKind::Density, 8, 3, 0.5, seed)).unwrap();
            let text = g.to_json();
            assert_eq!(KGraph::from_json(&text).unwrap(), g);
            assert_eq!(KGraph::from_json(&text).unwrap().to_json(), text);
        }
        let bad = r#"{"schema":"loosetree-v9","k":3,"n":3,"edges":[[0,1,2]]}"#;
        assert!(matches!(KGraph::from_json(bad), Err(Error::SchemaVersion(_))));
        let bare = r#"{"k":3,"n":3,"edges":[[2,1,0]]}"#;
        assert_eq!(KGraph::from_json(bare).unwrap().edges(), &[vec![0, 1, 2]]);
        match KGraph::from_json("{\"k\":3,\n\"n\":}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = Hypertree::loose_path(3, 4);
        t.save(&path).unwrap();
        assert_eq!(Hypertree::load(&path).unwrap(), t);
        assert!(matches!(Hypertree::load(dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
