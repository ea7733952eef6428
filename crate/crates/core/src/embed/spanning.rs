use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::HierarchyConfig;
use super::embedding::{verify_embedding, Embedding, Requirements};
use super::pipeline::{almost_spanning_embed, PipelineOptions};
use crate::absorb::{absorb_capacity, absorbing_set_with};
use crate::decompose::{subtree_split_relaxed, SubtreeSplit};
use crate::error::{Error, Phase, Result};
use crate::hypergraph::{Edge, KGraph, Vertex};
use crate::hypertree::Hypertree;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningOptions {
    pub pipeline: PipelineOptions,
    /// Hosts with fewer vertices are solved by exact search; None means 6k².
    pub small_limit: Option<usize>,
    /// Node budget of the exact search.
    pub search_budget: u64,
    /// Full split/absorb/embed rounds, each with a derived seed.
    pub attempts: usize,
}

impl Default for SpanningOptions {
    fn default() -> Self {
        SpanningOptions {
            pipeline: PipelineOptions::default(),
            small_limit: None,
            search_budget: 2_000_000,
            attempts: 3,
        }
    }
}

/// Embeds a spanning tree with its root `r` on `v`.
pub fn spanning_embed(host: &KGraph, tree: &Hypertree, r: Vertex, v: Vertex, config: &HierarchyConfig, seed: u64) -> Result<Embedding> {
    spanning_embed_with(host, tree, r, v, config, seed, &SpanningOptions::default())
}

pub fn spanning_embed_with(
    host: &KGraph,
    tree: &Hypertree,
    r: Vertex,
    v: Vertex,
    config: &HierarchyConfig,
    seed: u64,
    opts: &SpanningOptions,
) -> Result<Embedding> {
    let (k, n) = (host.k(), host.n());
    if tree.k() != k || tree.n() != n {
        return Err(Error::InvalidArgument(format!(
            "tree is a {}-tree on {} vertices, host a {k}-graph on {n}",
            tree.k(),
            tree.n()
        )));
    }
    if r as usize >= n {
        return Err(Error::UnknownVertex(r));
    }
    if v as usize >= n {
        return Err(Error::UnknownVertex(v));
    }
    let emb = if tree.num_edges() == 1 {
        single_edge(host, tree, r, v)?
    } else if n < opts.small_limit.unwrap_or(6 * k * k) {
        exact_search(host, tree, r, v, seed, opts.search_budget)?
    } else {
        let rounds = opts.attempts.max(1);
        let mut last = None;
        let mut found = None;
        for attempt in 0..rounds {
            match absorb_route(host, tree, r, v, config, derive_seed(seed, attempt as u64), opts) {
                Ok(e) => {
                    found = Some(e);
                    break;
                }
                Err(e) => last = Some(e),
            }
        }
        match found {
            Some(e) => e,
            None => return Err(last.expect("at least one round")),
        }
    };
    verify_embedding(tree, host, &emb, &Requirements::spanning().with_roots(&[(r, v)])).map_err(|e| e.in_phase(Phase::Complete, 1))?;
    Ok(emb)
}

fn single_edge(host: &KGraph, tree: &Hypertree, r: Vertex, v: Vertex) -> Result<Embedding> {
    let h = host
        .incident(v)
        .next()
        .ok_or_else(|| Error::EmbeddingStuck { edge: tree.edge(0).clone() }.in_phase(Phase::Complete, 1))?;
    let mut emb = Embedding::new(tree.n());
    emb.set(r, v)?;
    let rest = h.iter().copied().filter(|&w| w != v);
    for (x, y) in tree.edge(0).iter().copied().filter(|&x| x != r).zip(rest) {
        emb.set(x, y)?;
    }
    Ok(emb)
}

/// Leftover size aimed for: about μn/2, rounded up to a multiple of k−1.
fn leftover_target(config: &HierarchyConfig, n: usize, k: usize) -> usize {
    let mu = config.mu();
    let want = (*mu.numer() as usize * n).div_ceil(2 * *mu.denom() as usize);
    want.div_ceil(k - 1).max(1)
}

fn absorb_route(
    host: &KGraph,
    tree: &Hypertree,
    r: Vertex,
    v: Vertex,
    config: &HierarchyConfig,
    seed: u64,
    opts: &SpanningOptions,
) -> Result<Embedding> {
    let (k, n) = (host.k(), host.n());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (n / 4).max(2 * k);
    let split = subtree_split_relaxed(tree, r, m).map_err(|e| e.in_phase(Phase::Split, 1))?;
    let SubtreeSplit { t1_edges, t2_edges, cut } = split;
    let (t1, map1) = tree.restrict(&t1_edges, cut).map_err(|e| e.in_phase(Phase::Split, 1))?;
    let (leaf_cap, bare_cap) = absorb_capacity(&t1, n);
    let p = leftover_target(config, n, k).min(leaf_cap.max(bare_cap));

    // The cut vertex is T1's root; it shares its image with T2 unless it is r.
    let v_cut = if cut == r || t2_edges.is_empty() {
        v
    } else {
        loop {
            let w = rng.gen_range(0..n as Vertex);
            if w != v {
                break w;
            }
        }
    };
    let avoid: Vec<Vertex> = if v_cut == v { Vec::new() } else { vec![v] };
    let absorbing = absorbing_set_with(host, v_cut, &t1, p, &avoid, config, seed).map_err(|e| e.in_phase(Phase::Absorb, 1))?;

    let mut psi = Embedding::new(n);
    let b: Vec<Vertex> = if t2_edges.is_empty() {
        (0..n as Vertex).filter(|w| absorbing.vertices.binary_search(w).is_err()).collect()
    } else {
        let avail: Vec<Vertex> = (0..n as Vertex)
            .filter(|&w| w == v_cut || absorbing.vertices.binary_search(&w).is_err())
            .collect();
        let (h2, amap) = host.relabelled(&avail)?;
        let (t2, map2) = tree.restrict(&t2_edges, r).map_err(|e| e.in_phase(Phase::Split, 1))?;
        let local = |old: Vertex, map: &[Vertex]| map.binary_search(&old).expect("present") as Vertex;
        let r_new = local(r, &map2);
        let v_new = local(v, &amap);
        let second = if cut != r {
            (local(cut, &map2), local(v_cut, &amap))
        } else {
            // No shared vertex to pin: tie some other T2 vertex to a random free image.
            let x = (0..t2.n() as Vertex).find(|&x| x != r_new).expect("T2 has an edge");
            let y = loop {
                let y = rng.gen_range(0..h2.n() as Vertex);
                if y != v_new {
                    break y;
                }
            };
            (x, y)
        };
        let out = almost_spanning_embed(&h2, &t2, [(r_new, v_new), second], config, seed, &opts.pipeline)?;
        for x in 0..t2.n() as Vertex {
            let y = out.embedding.get(x).expect("complete embedding");
            psi.set(map2[x as usize], amap[y as usize])?;
        }
        avail.into_iter().filter(|&w| !psi.is_used(w)).collect()
    };
    let psi1 = absorbing.complete(host, &t1, &b).map_err(|e| e.in_phase(Phase::Complete, 1))?;
    for x in 0..t1.n() as Vertex {
        let y = psi1.get(x).expect("completion covers T1");
        psi.set(map1[x as usize], y).map_err(|e| e.in_phase(Phase::Complete, 1))?;
    }
    Ok(psi)
}

/// Seeded backtracking over BFS-ordered tree edges. Each step places the
/// next edge through the image of its one placed vertex; new vertices of
/// tree degree one are interchangeable, so only the others are permuted.
fn exact_search(host: &KGraph, tree: &Hypertree, r: Vertex, v: Vertex, seed: u64, budget: u64) -> Result<Embedding> {
    let order = tree.bfs_edge_order(r)?;
    let mut s = Search {
        host,
        tree,
        order,
        emb: Embedding::new(tree.n()),
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: 0,
        budget,
        deepest: 0,
    };
    s.emb.set(r, v)?;
    match s.go(0) {
        Some(true) => Ok(s.emb),
        Some(false) => {
            let edge = tree.edge(s.order[s.deepest]).clone();
            Err(Error::EmbeddingStuck { edge }.in_phase(Phase::Complete, 1))
        }
        None => Err(Error::BudgetExhausted(budget).in_phase(Phase::Complete, 1)),
    }
}

struct Search<'a> {
    host: &'a KGraph,
    tree: &'a Hypertree,
    order: Vec<usize>,
    emb: Embedding,
    rng: ChaCha8Rng,
    nodes: u64,
    budget: u64,
    deepest: usize,
}

impl Search<'_> {
    /// Some(true) found, Some(false) refuted, None out of budget.
    fn go(&mut self, i: usize) -> Option<bool> {
        if i == self.order.len() {
            return Some(true);
        }
        self.deepest = self.deepest.max(i);
        let edge = self.tree.edge(self.order[i]).clone();
        let a = *edge.iter().find(|&&x| self.emb.get(x).is_some()).expect("BFS order keeps edges attached");
        let at = self.emb.get(a).expect("mapped");
        let fresh: Vec<Vertex> = edge.iter().copied().filter(|&x| x != a).collect();
        let (leaves, inner): (Vec<Vertex>, Vec<Vertex>) = fresh.iter().partition(|&&x| self.tree.degree(x) == 1);
        let mut cands: Vec<Edge> = self
            .host
            .incident(at)
            .filter(|h| h.iter().all(|&w| w == at || !self.emb.is_used(w)))
            .cloned()
            .collect();
        cands.shuffle(&mut self.rng);
        for h in cands {
            let others: Vec<Vertex> = h.into_iter().filter(|&w| w != at).collect();
            for inner_imgs in arrangements(&others, inner.len()) {
                self.nodes += 1;
                if self.nodes > self.budget {
                    return None;
                }
                let rest = others.iter().copied().filter(|w| !inner_imgs.contains(w));
                let pairs: Vec<(Vertex, Vertex)> = inner.iter().copied().zip(inner_imgs.iter().copied()).chain(leaves.iter().copied().zip(rest)).collect();
                for &(x, y) in &pairs {
                    self.emb.set(x, y).expect("fresh host vertex");
                }
                match self.go(i + 1) {
                    Some(false) => {}
                    done => return done,
                }
                for &(x, _) in &pairs {
                    self.emb.unset(x);
                }
            }
        }
        Some(false)
    }
}

/// Ordered selections of `r` items.
fn arrangements(items: &[Vertex], r: usize) -> Vec<Vec<Vertex>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in arrangements(&rest, r - 1) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{pm_barrier, random_hypertree, tightness_construction, GenKind, GenSpec};

    fn check(host: &KGraph, tree: &Hypertree, r: Vertex, v: Vertex, emb: &Embedding) {
        verify_embedding(tree, host, emb, &Requirements::spanning().with_roots(&[(r, v)])).unwrap();
    }

    #[test]
    fn single_edge_tree() {
        let t = Hypertree::loose_path(3, 1);
        let g = KGraph::complete(3, 3);
        let e = spanning_embed(&g, &t, 1, 2, &HierarchyConfig::default(), 0).unwrap();
        check(&g, &t, 1, 2, &e);
    }

    #[test]
    fn complete_host_on_25_vertices() {
        let g = KGraph::complete(3, 25);
        for seed in 0..20 {
            let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 25, 3, seed)).unwrap();
            let (r, v) = ((seed % 25) as Vertex, ((seed * 7) % 25) as Vertex);
            let e = spanning_embed(&g, &t, r, v, &HierarchyConfig::default(), seed).unwrap();
            check(&g, &t, r, v, &e);
        }
    }

    #[test]
    fn absorption_route_on_complete_hosts() {
        for (seed, kind) in [(1, GenKind::StarHeavy), (2, GenKind::UniformAttachment), (3, GenKind::StarHeavy)] {
            let n = 81;
            let g = KGraph::complete(3, n);
            let t = random_hypertree(&GenSpec::tree(kind, n, 3, seed)).unwrap();
            let e = spanning_embed(&g, &t, 0, 5, &HierarchyConfig::default(), seed).unwrap();
            check(&g, &t, 0, 5, &e);
        }
    }

    #[test]
    fn star_at_tightness_apex_fails() {
        let (g, apex) = tightness_construction(3, 1, 13, &pm_barrier(2, 12).unwrap()).unwrap();
        let t = Hypertree::star(3, 6);
        let err = spanning_embed(&g, &t, 0, apex, &HierarchyConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::Pipeline { phase: Phase::Complete, .. }), "{err:?}");
    }

    #[test]
    fn deterministic() {
        let g = KGraph::complete(3, 31);
        let t = random_hypertree(&GenSpec::tree(GenKind::PathHeavy, 31, 3, 4)).unwrap();
        let a = spanning_embed(&g, &t, 3, 9, &HierarchyConfig::default(), 11).unwrap();
        let b = spanning_embed(&g, &t, 3, 9, &HierarchyConfig::default(), 11).unwrap();
        assert_eq!(a, b);
    }
}
