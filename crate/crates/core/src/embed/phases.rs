use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::embedding::Embedding;
use crate::error::{Error, Result};
use crate::hypergraph::{set_members, Edge, KGraph, Vertex, VertexSet};
use crate::hypertree::Hypertree;
use crate::matching::{rainbow_perfect_matching, GraphSystem, SolveOutcome};

/// Embeds the base tree greedily into `target`, with each root pinned to its
/// image. The roots' images may lie outside `target`.
pub fn greedy_embed_base(t0: &Hypertree, host: &KGraph, target: &VertexSet, roots: &[(Vertex, Vertex)]) -> Result<Embedding> {
    let mut emb = Embedding::new(t0.n());
    for &(r, v) in roots {
        if r as usize >= t0.n() {
            return Err(Error::UnknownVertex(r));
        }
        if v as usize >= host.n() {
            return Err(Error::UnknownVertex(v));
        }
        emb.set(r, v)?;
    }
    let edges: Vec<usize> = (0..t0.num_edges()).collect();
    let first = roots.first().map_or(t0.root(), |r| r.0);
    let extra: Vec<Vertex> = (0..t0.n() as Vertex).collect();
    embed_edges_greedily(t0, &edges, &extra, first, host, target, &mut emb)?;
    Ok(emb)
}

/// Greedy core shared with the pipeline: embeds `edges` of `tree` in BFS
/// order from `start` (then from the next mapped vertex, then arbitrarily),
/// each new edge taking the lexicographically least host edge through the
/// images already fixed and otherwise inside `target`. Vertices listed in
/// `vertices` but on no edge are then placed on the least free target vertex.
pub(crate) fn embed_edges_greedily(
    tree: &Hypertree,
    edges: &[usize],
    vertices: &[Vertex],
    start: Vertex,
    host: &KGraph,
    target: &VertexSet,
    emb: &mut Embedding,
) -> Result<()> {
    for e in edges_in_bfs_order(tree, edges, start, emb) {
        let tree_edge = tree.edge(e);
        let fixed: Vec<Vertex> = tree_edge.iter().filter_map(|&x| emb.get(x)).collect();
        if fixed.len() > 2 {
            return Err(Error::EmbeddingStuck { edge: tree_edge.clone() });
        }
        let fresh = |w: Vertex| target.contains(w as usize) && !emb.is_used(w);
        let fits = |h: &Edge| fixed.iter().all(|f| h.binary_search(f).is_ok()) && h.iter().all(|&w| fixed.contains(&w) || fresh(w));
        let found = match fixed.first() {
            Some(&w) => host.incident(w).find(|h| fits(h)),
            None => host.edges().iter().find(|h| fits(h)),
        };
        let Some(h) = found.cloned() else {
            return Err(Error::EmbeddingStuck { edge: tree_edge.clone() });
        };
        let new_tree: Vec<Vertex> = tree_edge.iter().copied().filter(|&x| emb.get(x).is_none()).collect();
        let new_host: Vec<Vertex> = h.into_iter().filter(|w| !fixed.contains(w)).collect();
        for (x, y) in new_tree.into_iter().zip(new_host) {
            emb.set(x, y)?;
        }
    }
    for &x in vertices {
        if emb.get(x).is_none() {
            let y = target
                .ones()
                .map(|w| w as Vertex)
                .find(|&w| !emb.is_used(w))
                .ok_or_else(|| Error::EmbeddingStuck { edge: vec![x] })?;
            emb.set(x, y)?;
        }
    }
    Ok(())
}

/// BFS over the given edges, seeded first at `start`, then at mapped
/// vertices in tree order, then at the least vertex of any untouched edge.
fn edges_in_bfs_order(tree: &Hypertree, edges: &[usize], start: Vertex, emb: &Embedding) -> Vec<usize> {
    let mut member = vec![false; tree.num_edges()];
    for &e in edges {
        member[e] = true;
    }
    let mut seen_v = vec![false; tree.n()];
    let mut order = Vec::with_capacity(edges.len());
    let mut queue = VecDeque::new();
    let mut seeds: Vec<Vertex> = vec![start];
    seeds.extend((0..tree.n() as Vertex).filter(|&x| emb.get(x).is_some()));
    seeds.extend(edges.iter().map(|&e| tree.edge(e)[0]));
    for s in seeds {
        if seen_v[s as usize] || !tree.incident(s).iter().any(|&e| member[e]) {
            continue;
        }
        seen_v[s as usize] = true;
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            for &e in tree.incident(x) {
                if !std::mem::replace(&mut member[e], false) {
                    continue;
                }
                order.push(e);
                for &y in tree.edge(e) {
                    if !std::mem::replace(&mut seen_v[y as usize], true) {
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    order
}

/// A star in the host: `leaves[j] ∪ {centre}` is a host edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostStar {
    pub centre: Vertex,
    pub leaves: Vec<Vec<Vertex>>,
}

/// Vertex-disjoint stars at the given centres with the given numbers of
/// edges, all leaves inside `x`, found as a rainbow matching of copies of
/// the centres' link graphs. The first centre's star is enlarged to cover
/// the slack before solving; the extra edges are dropped afterwards.
pub fn embed_stars(host: &KGraph, x: &VertexSet, centres: &[Vertex], sizes: &[usize], budget: Option<u64>) -> Result<Vec<HostStar>> {
    let k = host.k();
    if centres.len() != sizes.len() {
        return Err(Error::InvalidArgument("one size per centre".into()));
    }
    let xs = set_members(x);
    for (i, &c) in centres.iter().enumerate() {
        if c as usize >= host.n() {
            return Err(Error::UnknownVertex(c));
        }
        if x.contains(c as usize) || centres[..i].contains(&c) {
            return Err(Error::InvalidArgument(format!("centre {c} repeated or inside the leaf set")));
        }
    }
    let capacity = xs.len() / (k - 1);
    let wanted: usize = sizes.iter().sum();
    if wanted > capacity {
        return Err(Error::InvalidArgument(format!("{wanted} star edges need more than {} vertices", xs.len())));
    }
    if wanted == 0 {
        return Ok(centres.iter().map(|&c| HostStar { centre: c, leaves: Vec::new() }).collect());
    }
    let mut padded = sizes.to_vec();
    padded[0] += capacity - wanted;
    let mut groups = Vec::with_capacity(centres.len());
    let mut relabel = Vec::new();
    for (&c, &m) in centres.iter().zip(&padded) {
        let (link, map) = host.link_graph(&[c], &xs)?;
        relabel = map;
        groups.push((link, m));
    }
    let sys = GraphSystem::with_copies(k - 1, xs.len(), groups)?;
    let solve = rainbow_perfect_matching(&sys, budget);
    let matching = match solve.outcome {
        SolveOutcome::Found(m) => m,
        SolveOutcome::NoSolution => {
            return Err(Error::StarEmbeddingFailure(format!(
                "no rainbow matching for {} star edges on {} vertices",
                capacity,
                xs.len()
            )))
        }
        SolveOutcome::BudgetExhausted => {
            return Err(Error::StarEmbeddingFailure(format!("matching search stopped after {} nodes", solve.nodes)))
        }
    };
    let mut stars = Vec::with_capacity(centres.len());
    let mut next = matching.into_iter();
    for (i, &c) in centres.iter().enumerate() {
        let mut leaves: Vec<Vec<Vertex>> = next
            .by_ref()
            .take(padded[i])
            .map(|e| e.into_iter().map(|w| relabel[w as usize]).collect())
            .collect();
        leaves.truncate(sizes[i]);
        stars.push(HostStar { centre: c, leaves });
    }
    Ok(stars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{verify_embedding, Requirements};
    use crate::hypergraph::{full_set, vertex_set};
    use crate::instances::{random_hypertree, GenKind, GenSpec};

    fn check_stars(host: &KGraph, x: &VertexSet, stars: &[HostStar], sizes: &[usize]) {
        let mut seen = std::collections::HashSet::new();
        for (s, &m) in stars.iter().zip(sizes) {
            assert_eq!(s.leaves.len(), m);
            assert!(seen.insert(s.centre));
            for leaf in &s.leaves {
                let mut e = leaf.clone();
                e.push(s.centre);
                assert!(host.contains(&e));
                for &w in leaf {
                    assert!(x.contains(w as usize));
                    assert!(seen.insert(w));
                }
            }
        }
    }

    #[test]
    fn single_centre_covers_x() {
        let g = KGraph::complete(3, 9);
        let x = vertex_set(9, 1..9);
        let stars = embed_stars(&g, &x, &[0], &[4], None).unwrap();
        check_stars(&g, &x, &stars, &[4]);
    }

    #[test]
    fn two_centres_with_padding() {
        let g = KGraph::complete(3, 11);
        let x = vertex_set(11, 2..11);
        let stars = embed_stars(&g, &x, &[0, 1], &[2, 1], None).unwrap();
        check_stars(&g, &x, &stars, &[2, 1]);
        assert!(embed_stars(&g, &x, &[0, 1], &[3, 2], None).is_err());
    }

    #[test]
    fn missing_links_fail() {
        let g = KGraph::new(3, 7, vec![vec![1, 2, 3]]).unwrap();
        let x = vertex_set(7, 1..7);
        assert!(matches!(embed_stars(&g, &x, &[0], &[1], None), Err(Error::StarEmbeddingFailure(_))));
    }

    #[test]
    fn base_single_edge() {
        let t = Hypertree::loose_path(3, 1);
        let g = KGraph::complete(3, 6);
        let target = vertex_set(6, 1..6);
        let e = greedy_embed_base(&t, &g, &target, &[(0, 0)]).unwrap();
        assert_eq!(e.get(0), Some(0));
        verify_embedding(&t, &g, &e, &Requirements::complete()).unwrap();
    }

    #[test]
    fn base_places_second_root() {
        // Path 0-1-2 / 2-3-4; r2 = 4 lives in the second edge.
        let t = Hypertree::loose_path(3, 2);
        let g = KGraph::complete(3, 10);
        let target = vertex_set(10, 2..10);
        let e = greedy_embed_base(&t, &g, &target, &[(0, 0), (4, 1)]).unwrap();
        assert_eq!((e.get(0), e.get(4)), (Some(0), Some(1)));
        verify_embedding(&t, &g, &e, &Requirements::complete()).unwrap();
    }

    #[test]
    fn base_passes_verifier_on_many_seeds() {
        for seed in 0..500 {
            let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 9, 3, seed)).unwrap();
            let g = KGraph::complete(3, 14);
            let target = full_set(14);
            let e = greedy_embed_base(&t, &g, &target, &[(0, 13)]).unwrap();
            verify_embedding(&t, &g, &e, &Requirements::complete().with_roots(&[(0, 13)])).unwrap();
        }
    }

    #[test]
    fn base_stuck_without_edges_at_root() {
        let t = Hypertree::loose_path(3, 1);
        let g = KGraph::new(3, 6, vec![vec![1, 2, 3]]).unwrap();
        let err = greedy_embed_base(&t, &g, &full_set(6), &[(0, 0)]).unwrap_err();
        assert!(matches!(err, Error::EmbeddingStuck { .. }));
    }
}
