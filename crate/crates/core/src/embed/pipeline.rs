use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::config::HierarchyConfig;
use super::embedding::{verify_embedding, Embedding, Requirements};
use super::partition::{random_partition, Partition, PartitionOptions};
use super::paths::{connect_bare_paths, Path3};
use super::phases::{embed_edges_greedily, embed_stars};
use crate::decompose::{tree_split, LevelKind, TreeDecomposition};
use crate::error::{Error, Phase, Result};
use crate::hypergraph::{KGraph, Vertex};
use crate::hypertree::Hypertree;
use crate::util::derive_seed;

/// Star size bound used when splitting the tree.
pub const SPLIT_D: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Full pipeline attempts, each with seed `derive_seed(seed, attempt)`.
    pub attempts: usize,
    pub partition: PartitionOptions,
    /// Node budget for each rainbow matching call.
    pub matching_budget: Option<u64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            attempts: 4,
            partition: PartitionOptions::default(),
            matching_budget: None,
        }
    }
}

/// What a successful almost-spanning run produced.
#[derive(Debug, Clone)]
pub struct AlmostSpanning {
    pub embedding: Embedding,
    pub decomposition: TreeDecomposition,
    pub partition: Partition,
    pub attempts: usize,
}

/// Embeds `tree` (at most (1 − μ)n vertices) into `host` with `r1 ↦ v1` and
/// `r2 ↦ v2`.
pub fn almost_spanning_embed(
    host: &KGraph,
    tree: &Hypertree,
    roots: [(Vertex, Vertex); 2],
    config: &HierarchyConfig,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<AlmostSpanning> {
    let [(r1, v1), (r2, v2)] = roots;
    if host.k() != tree.k() {
        return Err(Error::InvalidArgument("tree and host uniformity differ".into()));
    }
    for v in [v1, v2] {
        if v as usize >= host.n() {
            return Err(Error::UnknownVertex(v));
        }
    }
    if r1 == r2 || v1 == v2 {
        return Err(Error::InvalidArgument("roots and their images must be distinct".into()));
    }
    let dec = tree_split(tree, r1, r2, SPLIT_D, config.eta()).map_err(|e| e.in_phase(Phase::Decompose, 1))?;
    let sizes = part_sizes(tree, &dec, host.n(), config.mu())?;
    let mut last = None;
    for attempt in 0..opts.attempts.max(1) {
        match attempt_once(host, tree, &dec, roots, &sizes, config, derive_seed(seed, attempt as u64), opts) {
            Ok((embedding, partition)) => {
                return Ok(AlmostSpanning {
                    embedding,
                    decomposition: dec,
                    partition,
                    attempts: attempt + 1,
                })
            }
            Err((phase, e)) => last = Some((phase, e)),
        }
    }
    let (phase, e) = last.expect("at least one attempt");
    Err(e.in_phase(phase, opts.attempts.max(1)))
}

/// Tree vertices first placed at each level; the roots belong to no level.
fn new_vertices(tree: &Hypertree, dec: &TreeDecomposition) -> Vec<Vec<Vertex>> {
    let mut placed = vec![false; tree.n()];
    placed[dec.r1 as usize] = true;
    placed[dec.r2 as usize] = true;
    dec.levels
        .iter()
        .map(|level| {
            let mut fresh = Vec::new();
            let listed = level.edges.iter().flat_map(|&e| tree.edge(e).iter()).chain(&level.vertices);
            for &x in listed {
                if !std::mem::replace(&mut placed[x as usize], true) {
                    fresh.push(x);
                }
            }
            fresh
        })
        .collect()
}

/// Part targets: each level's new vertices plus its share of μn/3 slack.
/// The path level's interiors are placed in R, so its part only keeps the slack.
fn part_sizes(tree: &Hypertree, dec: &TreeDecomposition, n: usize, mu: Rational64) -> Result<Vec<usize>> {
    let fresh = new_vertices(tree, dec);
    let levels = dec.levels.len() - 1;
    let third = (mu * Rational64::from_integer(n as i64) / 3).floor().to_integer() as usize;
    let need: Vec<usize> = dec
        .levels
        .iter()
        .zip(&fresh)
        .map(|(l, f)| if l.kind == LevelKind::Paths3 { 0 } else { f.len() })
        .collect();
    let path_need: usize = dec
        .levels
        .iter()
        .zip(&fresh)
        .filter(|(l, _)| l.kind == LevelKind::Paths3)
        .map(|(_, f)| f.len())
        .sum();
    let total_need: usize = need.iter().sum::<usize>() + path_need;
    if total_need + 2 > n {
        return Err(Error::InvalidArgument(format!(
            "tree needs {} vertices, host has {n}",
            total_need + 2
        )));
    }
    let mut slack = vec![third / levels.max(1); levels + 1];
    slack[0] = third;
    // Keep at least the path interiors free for R.
    let spare = n - 2 - total_need;
    while slack.iter().sum::<usize>() > spare.saturating_sub(third.min(spare / 3)) {
        let i = (0..slack.len()).max_by_key(|&i| slack[i]).expect("non-empty");
        if slack[i] == 0 {
            break;
        }
        slack[i] -= 1;
    }
    Ok(need.iter().zip(&slack).map(|(a, b)| a + b).collect())
}

type Failure = (Phase, Error);

#[allow(clippy::too_many_arguments)]
fn attempt_once(
    host: &KGraph,
    tree: &Hypertree,
    dec: &TreeDecomposition,
    roots: [(Vertex, Vertex); 2],
    sizes: &[usize],
    config: &HierarchyConfig,
    seed: u64,
    opts: &PipelineOptions,
) -> std::result::Result<(Embedding, Partition), Failure> {
    let [(r1, v1), (r2, v2)] = roots;
    let tag = |phase: Phase| move |e: Error| (phase, e);
    let partition = random_partition(host, v1, v2, sizes, config, seed, &opts.partition).map_err(tag(Phase::Partition))?;
    let mut emb = Embedding::new(tree.n());
    emb.set(r1, v1).map_err(tag(Phase::Base))?;
    emb.set(r2, v2).map_err(tag(Phase::Base))?;
    let base = &dec.levels[0];
    embed_edges_greedily(tree, &base.edges, &base.vertices, r1, host, &partition.part_set(0), &mut emb)
        .map_err(tag(Phase::Base))?;
    let mut r_free = partition.r_set();
    for (i, level) in dec.levels.iter().enumerate().skip(1) {
        match level.kind {
            LevelKind::Paths3 => {
                let pairs: Vec<(Vertex, Vertex)> = level
                    .paths
                    .iter()
                    .map(|p| (emb.get(p.u).expect("ends embedded"), emb.get(p.v).expect("ends embedded")))
                    .collect();
                let found = connect_bare_paths(host, &pairs, &r_free).map_err(tag(Phase::Paths))?;
                for (p, hp) in level.paths.iter().zip(&found) {
                    place_path(tree, p.edges, p.u, hp, &mut emb).map_err(tag(Phase::Paths))?;
                }
                for &y in emb.image().iter() {
                    r_free.set(y as usize, false);
                }
            }
            _ => {
                place_stars(host, tree, &level.edges, &partition.part_set(i), &mut emb, opts.matching_budget)
                    .map_err(tag(Phase::Stars))?;
            }
        }
    }
    verify_embedding(tree, host, &emb, &Requirements::complete().with_roots(&[(r1, v1), (r2, v2)]))
        .map_err(tag(Phase::Complete))?;
    Ok((emb, partition))
}

/// Each edge in `edges` has exactly one embedded vertex; the edges are grouped
/// into stars at those vertices and embedded with leaves inside `x`.
pub(crate) fn place_stars(
    host: &KGraph,
    tree: &Hypertree,
    edges: &[usize],
    x: &crate::VertexSet,
    emb: &mut Embedding,
    budget: Option<u64>,
) -> Result<()> {
    let mut centres: Vec<Vertex> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &e in edges {
        let mut mapped = tree.edge(e).iter().copied().filter(|&x| emb.get(x).is_some());
        let c = mapped.next().ok_or_else(|| Error::EmbeddingStuck { edge: tree.edge(e).clone() })?;
        if mapped.next().is_some() {
            return Err(Error::EmbeddingStuck { edge: tree.edge(e).clone() });
        }
        match centres.iter().position(|&d| d == c) {
            Some(i) => groups[i].push(e),
            None => {
                centres.push(c);
                groups.push(vec![e]);
            }
        }
    }
    let images: Vec<Vertex> = centres.iter().map(|&c| emb.get(c).expect("mapped")).collect();
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let stars = embed_stars(host, x, &images, &sizes, budget)?;
    for ((c, group), star) in centres.iter().zip(&groups).zip(stars) {
        for (&e, leaf) in group.iter().zip(star.leaves) {
            let others = tree.edge(e).iter().copied().filter(|x| x != c);
            for (x, y) in others.zip(leaf) {
                emb.set(x, y)?;
            }
        }
    }
    Ok(())
}

/// Maps the tree path `edges` (starting at `u`) onto the host path.
fn place_path(tree: &Hypertree, edges: [usize; 3], u: Vertex, hp: &Path3, emb: &mut Embedding) -> Result<()> {
    let mut t = edges.map(|e| tree.edge(e).clone());
    if !t[0].contains(&u) {
        t.reverse();
    }
    let meet = |a: &[Vertex], b: &[Vertex]| a.iter().copied().find(|x| b.contains(x)).expect("consecutive edges meet");
    let (x, y) = (meet(&t[0], &t[1]), meet(&t[1], &t[2]));
    let (p, q) = (meet(&hp[0], &hp[1]), meet(&hp[1], &hp[2]));
    emb.set(x, p)?;
    emb.set(y, q)?;
    for (te, he) in t.iter().zip(hp) {
        let free_t = te.iter().copied().filter(|&z| emb.get(z).is_none());
        let free_h = he.iter().copied().filter(|&w| !emb.is_used(w));
        for (z, w) in free_t.zip(free_h).collect::<Vec<_>>() {
            emb.set(z, w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_hypertree, GenKind, GenSpec};

    #[test]
    fn loose_path_into_complete_graph() {
        let t = Hypertree::loose_path(3, 12);
        let g = KGraph::complete(3, 40);
        let out = almost_spanning_embed(&g, &t, [(0, 5), (24, 7)], &HierarchyConfig::default(), 1, &Default::default()).unwrap();
        verify_embedding(&t, &g, &out.embedding, &Requirements::complete().with_roots(&[(0, 5), (24, 7)])).unwrap();
    }

    #[test]
    fn random_trees_into_complete_graph() {
        let g = KGraph::complete(3, 40);
        for seed in 0..20 {
            let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 31, 3, seed)).unwrap();
            let r2 = t.n() as Vertex - 1;
            let out = almost_spanning_embed(&g, &t, [(0, 0), (r2, 1)], &HierarchyConfig::default(), seed, &Default::default())
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            verify_embedding(&t, &g, &out.embedding, &Requirements::complete().with_roots(&[(0, 0), (r2, 1)])).unwrap();
        }
    }

    #[test]
    fn missing_root_edges_fail_at_base() {
        let t = Hypertree::loose_path(3, 5);
        let full = KGraph::complete(3, 30);
        let g = full.remove_vertices(&crate::hypergraph::vertex_set(30, [0]));
        let opts = PipelineOptions {
            attempts: 2,
            ..Default::default()
        };
        match almost_spanning_embed(&g, &t, [(0, 0), (10, 1)], &HierarchyConfig::default(), 3, &opts) {
            Err(Error::Pipeline { phase, attempts, source }) => {
                assert_eq!(phase, Phase::Base);
                assert_eq!(attempts, 2);
                assert!(matches!(*source, Error::EmbeddingStuck { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let g = KGraph::complete(3, 40);
        let t = random_hypertree(&GenSpec::tree(GenKind::PathHeavy, 29, 3, 4)).unwrap();
        let run = || almost_spanning_embed(&g, &t, [(0, 0), (3, 1)], &HierarchyConfig::default(), 9, &Default::default()).unwrap();
        assert_eq!(run().embedding, run().embedding);
    }
}
