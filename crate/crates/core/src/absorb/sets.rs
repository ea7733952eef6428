use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::extend::extend_with_absorbers;
use super::immerse::{immerse_in, immersion_paths};
use super::tuples::{family_of_size, floor_times, AbsorberFamily};
use crate::decompose::{dichotomy, dichotomy_gamma, Dichotomy};
use crate::embed::phases::embed_edges_greedily;
use crate::embed::{embed_stars, Embedding, HierarchyConfig};
use crate::error::{Error, Result};
use crate::hypergraph::{vertex_set, KGraph, Vertex};
use crate::hypertree::{Hypertree, LeafEdge, SubForest};
use crate::util::{binomial, derive_seed};

/// Resampling rounds for the leftover sample in the leaves branch.
const SAMPLE_RETRIES: usize = 20;

/// An absorbing set together with the data needed to finish the embedding
/// once the leftover vertices are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingSet {
    /// Sorted; contains the root image.
    pub vertices: Vec<Vertex>,
    pub root_image: Vertex,
    /// |B| that `complete` expects.
    pub leftover: usize,
    pub state: ResumeState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumeState {
    /// A partial embedding with the family immersed; finished by switching.
    Bare { partial: Vec<Option<Vertex>>, family: AbsorberFamily },
    /// A partial embedding missing the listed leaf edges; finished by one
    /// star embedding over the leftover vertices plus `extra`.
    Leaves {
        partial: Vec<Option<Vertex>>,
        leaf_edges: Vec<LeafEdge>,
        extra: Vec<Vertex>,
    },
}

impl AbsorbingSet {
    pub fn is_bare(&self) -> bool {
        matches!(self.state, ResumeState::Bare { .. })
    }

    /// Embeds all of `tree` into the absorbing set plus `b`, root on the
    /// root image. `b` must have exactly `leftover` vertices outside the set.
    pub fn complete(&self, host: &KGraph, tree: &Hypertree, b: &[Vertex]) -> Result<Embedding> {
        if b.len() != self.leftover {
            return Err(Error::InvalidArgument(format!("expected {} leftover vertices, got {}", self.leftover, b.len())));
        }
        if let Some(w) = b.iter().find(|w| self.vertices.binary_search(w).is_ok()) {
            return Err(Error::InvalidArgument(format!("leftover vertex {w} lies in the absorbing set")));
        }
        match &self.state {
            ResumeState::Bare { partial, family } => {
                let partial = Embedding::from_map(partial.clone())?;
                extend_with_absorbers(host, tree, &partial, b, family)
            }
            ResumeState::Leaves { partial, leaf_edges, extra } => complete_leaves(host, tree, partial, leaf_edges, extra, b),
        }
    }
}

fn complete_leaves(
    host: &KGraph,
    tree: &Hypertree,
    partial: &[Option<Vertex>],
    leaf_edges: &[LeafEdge],
    extra: &[Vertex],
    b: &[Vertex],
) -> Result<Embedding> {
    let mut emb = Embedding::from_map(partial.to_vec())?;
    let mut centres: Vec<Vertex> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for le in leaf_edges {
        let c = emb.get(le.parent).ok_or(Error::UnknownVertex(le.parent))?;
        match centres.iter().position(|&x| x == c) {
            Some(i) => {
                sizes[i] += 1;
                groups[i].push(le.edge);
            }
            None => {
                centres.push(c);
                sizes.push(1);
                groups.push(vec![le.edge]);
            }
        }
    }
    let pool = vertex_set(host.n(), b.iter().chain(extra).copied());
    let stars = embed_stars(host, &pool, &centres, &sizes, None)?;
    for ((star, group), le_parent) in stars.iter().zip(&groups).zip(&centres) {
        for (leaves, &e) in star.leaves.iter().zip(group) {
            let parent = emb.preimage(*le_parent).expect("centre is mapped");
            let fresh = tree.edge(e).iter().copied().filter(|&x| x != parent);
            for (x, &y) in fresh.zip(leaves) {
                emb.set(x, y)?;
            }
        }
    }
    Ok(emb)
}

/// Dispatches on the tree's leaf/path dichotomy.
pub fn absorbing_set(host: &KGraph, v: Vertex, tree: &Hypertree, epsilon: Rational64, config: &HierarchyConfig, seed: u64) -> Result<AbsorbingSet> {
    let p = steps_for(epsilon, host);
    absorbing_set_with(host, v, tree, p, &[], config, seed)
}

/// ⌊εn/(k−1)⌋.
fn steps_for(epsilon: Rational64, host: &KGraph) -> usize {
    floor_times(epsilon / (host.k() as i64 - 1), host.n())
}

pub(crate) fn absorbing_set_with(
    host: &KGraph,
    v: Vertex,
    tree: &Hypertree,
    p: usize,
    avoid: &[Vertex],
    config: &HierarchyConfig,
    seed: u64,
) -> Result<AbsorbingSet> {
    match dichotomy(tree, dichotomy_gamma(tree.k()))? {
        // At small n the dichotomy calls almost every tree leaf-rich.
        Dichotomy::ManyLeaves(_) if select_leaf_edges(tree, p, host.n()).len() >= p => leaves_with(host, v, tree, p, avoid, config, seed),
        Dichotomy::ManyLeaves(_) => bare_with(host, v, tree, p, avoid, config, seed),
        Dichotomy::ManyBarePaths(_) => bare_with(host, v, tree, p, avoid, config, seed),
    }
}

/// The branch for trees rich in semi-bare paths: a family of star tuples
/// immersed into the tree minus a few leaf edges.
pub fn absorbing_set_bare(host: &KGraph, v: Vertex, tree: &Hypertree, epsilon: Rational64, config: &HierarchyConfig, seed: u64) -> Result<AbsorbingSet> {
    bare_with(host, v, tree, steps_for(epsilon, host), &[], config, seed)
}

/// The branch for trees rich in leaf edges: the tree minus some leaf edges,
/// plus a sample of spare vertices for the leaves.
pub fn absorbing_set_leaves(host: &KGraph, v: Vertex, tree: &Hypertree, epsilon: Rational64, config: &HierarchyConfig, seed: u64) -> Result<AbsorbingSet> {
    leaves_with(host, v, tree, steps_for(epsilon, host), &[], config, seed)
}

fn check_inputs(host: &KGraph, v: Vertex, tree: &Hypertree, avoid: &[Vertex]) -> Result<Vec<bool>> {
    if host.k() != tree.k() {
        return Err(Error::InvalidArgument(format!("tree is {}-uniform, host {}-uniform", tree.k(), host.k())));
    }
    if tree.n() > host.n() {
        return Err(Error::InvalidArgument(format!("tree on {} vertices, host on {}", tree.n(), host.n())));
    }
    let mut forbidden = vec![false; host.n()];
    for &w in avoid.iter().chain([&v]) {
        if w as usize >= host.n() {
            return Err(Error::UnknownVertex(w));
        }
        forbidden[w as usize] = true;
    }
    if avoid.contains(&v) {
        return Err(Error::InvalidArgument(format!("root image {v} is excluded")));
    }
    Ok(forbidden)
}

fn finish(host: &KGraph, v: Vertex, emb: &Embedding, extra: &[Vertex], p: usize, state: ResumeState) -> AbsorbingSet {
    let mut vertices = emb.image();
    vertices.extend_from_slice(extra);
    vertices.sort_unstable();
    AbsorbingSet {
        vertices,
        root_image: v,
        leftover: p * (host.k() - 1),
        state,
    }
}

fn bare_with(host: &KGraph, v: Vertex, tree: &Hypertree, p: usize, avoid: &[Vertex], config: &HierarchyConfig, seed: u64) -> Result<AbsorbingSet> {
    let forbidden = check_inputs(host, v, tree, avoid)?;
    let k = tree.k();
    let root = tree.root();
    let full = SubForest::full(tree);
    let paths = immersion_paths(&full, root, usize::MAX);
    // ⌊βn⌋ is tiny at desk scale, so the family may grow to 4p tuples while
    // the tree has paths to spare and leaf edges left to strip.
    let most = paths.len() / (k - 1);
    let largest = floor_times(config.beta(), host.n()).max(4 * p).min(most);
    if most < p {
        return Err(Error::AbsorbingFailure(format!("{} semi-bare paths for {} stars", paths.len(), p * (k - 1))));
    }
    let protected_first = (p..=largest)
        .rev()
        .find_map(|size| strip_leaves(tree, &paths[..size * (k - 1)], p).map(|f| (size, f, paths[..size * (k - 1)].to_vec())));
    // Otherwise strip first and keep the paths the stripping left intact.
    let strip_first = || {
        let f = strip_leaves(tree, &[], p)?;
        let intact: Vec<Vec<usize>> = paths.iter().filter(|q| q.iter().all(|&e| f.active[e])).cloned().collect();
        let size = (intact.len() / (k - 1)).min(largest);
        (size >= p).then(|| (size, f, intact[..size * (k - 1)].to_vec()))
    };
    let (size, forest, paths) = protected_first
        .or_else(strip_first)
        .ok_or_else(|| Error::AbsorbingFailure("no leaf edge left to strip".into()))?;
    let paths = &paths[..];
    let alpha_target = config.epsilon() / (k as i64 - 1);
    let excluded: Vec<Vertex> = (0..host.n() as Vertex).filter(|&w| forbidden[w as usize]).collect();
    let family = family_of_size(host, size, alpha_target, &excluded, seed)?;
    let mut blocked = forbidden;
    blocked[v as usize] = false;
    let emb = immerse_in(host, &forest, root, v, &family.stars(), paths, &blocked)?;
    let partial = emb.map().to_vec();
    Ok(finish(host, v, &emb, &[], p, ResumeState::Bare { partial, family }))
}

/// The tree minus `p` leaf edges that avoid `paths` and whose leaves avoid
/// the root.
fn strip_leaves<'a>(tree: &'a Hypertree, paths: &[Vec<usize>], p: usize) -> Option<SubForest<'a>> {
    let root = tree.root();
    let mut protected = vec![false; tree.num_edges()];
    for &e in paths.iter().flatten() {
        protected[e] = true;
    }
    let mut forest = SubForest::full(tree);
    for _ in 0..p {
        let e = forest
            .leaf_edges()
            .into_iter()
            .rev()
            .find(|le| !protected[le.edge] && (le.parent == root || !tree.edge(le.edge).contains(&root)))?;
        forest.remove(e.edge);
    }
    Some(forest)
}

/// Up to max(p, ⌈|V(T)|²/n⌉) leaf edges that can go together: the root is
/// never one of their leaves and every parent other than the root keeps an
/// edge in the rest of the tree.
fn leaf_selection(tree: &Hypertree, p: usize, n: usize) -> (SubForest<'_>, Vec<LeafEdge>) {
    let root = tree.root();
    let q = if p == usize::MAX { p } else { (tree.n() * tree.n()).div_ceil(n).max(p) };
    let mut forest = SubForest::full(tree);
    let mut chosen: Vec<LeafEdge> = Vec::new();
    for le in tree.leaf_edges() {
        if chosen.len() == q {
            break;
        }
        let root_ok = le.parent == root || !tree.edge(le.edge).contains(&root);
        let parent_ok = le.parent == root || forest.deg[le.parent as usize] >= 2;
        if root_ok && parent_ok && forest.leaf_parent(le.edge) == Some(le.parent) {
            forest.remove(le.edge);
            chosen.push(le);
        }
    }
    (forest, chosen)
}

/// How many absorption steps each branch could support for `tree` inside a
/// host on `n` vertices: (leaves branch, bare branch).
pub(crate) fn absorb_capacity(tree: &Hypertree, n: usize) -> (usize, usize) {
    let leaves = leaf_selection(tree, usize::MAX, n).1.len();
    let paths = immersion_paths(&SubForest::full(tree), tree.root(), usize::MAX).len();
    (leaves, paths / (tree.k() - 1))
}

fn select_leaf_edges(tree: &Hypertree, p: usize, n: usize) -> Vec<LeafEdge> {
    leaf_selection(tree, p, n).1
}

fn leaves_with(host: &KGraph, v: Vertex, tree: &Hypertree, p: usize, avoid: &[Vertex], config: &HierarchyConfig, seed: u64) -> Result<AbsorbingSet> {
    let forbidden = check_inputs(host, v, tree, avoid)?;
    let (k, n) = (tree.k(), host.n());
    let root = tree.root();
    let (forest, chosen) = leaf_selection(tree, p, n);
    if chosen.len() < p {
        return Err(Error::AbsorbingFailure(format!("{} usable leaf edges, {p} needed", chosen.len())));
    }
    let q = chosen.len();
    let mut emb = Embedding::new(tree.n());
    emb.set(root, v)?;
    let target = vertex_set(n, (0..n as Vertex).filter(|&w| !forbidden[w as usize]));
    let kept = forest.active_edges();
    embed_edges_greedily(tree, &kept, &[root], root, host, &target, &mut emb)?;
    let pool: Vec<Vertex> = (0..n as Vertex).filter(|&w| !forbidden[w as usize] && !emb.is_used(w)).collect();
    let size = (k - 1) * (q - p);
    if size > pool.len() {
        return Err(Error::AbsorbingFailure(format!("{size} spare vertices wanted, {} free", pool.len())));
    }
    let mut centres: Vec<Vertex> = chosen.iter().map(|le| emb.get(le.parent).expect("parent in T′")).collect();
    centres.sort_unstable();
    centres.dedup();
    let extra = sample_extra(host, &pool, size, &centres, config, seed)?;
    let partial = emb.map().to_vec();
    Ok(finish(
        host,
        v,
        &emb,
        &extra,
        p,
        ResumeState::Leaves { partial, leaf_edges: chosen, extra: extra.clone() },
    ))
}

/// Samples `size` vertices from `pool` so that each centre keeps its
/// normalised degree into the sample within γ/4 of its degree in the host.
/// Failing samples are repaired by swaps, up to ⌊αn⌋ of them, then redrawn.
fn sample_extra(host: &KGraph, pool: &[Vertex], size: usize, centres: &[Vertex], config: &HierarchyConfig, seed: u64) -> Result<Vec<Vertex>> {
    if size == 0 {
        return Ok(Vec::new());
    }
    let (k, n) = (host.k(), host.n());
    let slack = config.gamma() / 4;
    let swaps = floor_times(config.alpha(), n).max(1);
    let full_norm = |c: Vertex| Rational64::new(host.vertex_degree(c) as i64, binomial(n - 1, k - 1) as i64);
    let deficit = |sample: &[Vertex]| -> Option<Vertex> {
        let within = vertex_set(n, sample.iter().copied());
        let total = binomial(size, k - 1) as i64;
        centres.iter().copied().find(|&c| {
            let d = host.degree(&[c], &within).expect("valid centre") as i64;
            Rational64::new(d, total) < full_norm(c) - slack
        })
    };
    for attempt in 0..SAMPLE_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt as u64));
        let mut sample: Vec<Vertex> = pool.choose_multiple(&mut rng, size).copied().collect();
        for _ in 0..=swaps {
            let Some(c) = deficit(&sample) else {
                sample.sort_unstable();
                return Ok(sample);
            };
            // Swap the sample vertex with the fewest edges at c for the best outsider.
            let within = vertex_set(n, sample.iter().copied());
            let score = |w: Vertex| host.incident(c).filter(|e| e.contains(&w) && e.iter().all(|&x| x == c || x == w || within.contains(x as usize))).count();
            let (i, _) = sample.iter().enumerate().min_by_key(|(_, &w)| score(w)).expect("non-empty");
            let outsiders: Vec<Vertex> = pool.iter().copied().filter(|w| !within.contains(*w as usize)).collect();
            let Some(&best) = outsiders.iter().max_by_key(|&&w| {
                let mut s = sample.clone();
                s[i] = w;
                let inner = vertex_set(n, s);
                host.incident(c).filter(|e| e.contains(&w) && e.iter().all(|&x| x == c || inner.contains(x as usize))).count()
            }) else {
                break;
            };
            sample[i] = best;
        }
    }
    Err(Error::AbsorbingFailure(format!("no spare sample of {size} vertices passed the degree audit")))
}
