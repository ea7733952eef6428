use std::collections::HashMap;

use super::tuples::TwoStar;
use crate::decompose::extract_in;
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::hypergraph::{Edge, KGraph, Vertex};
use crate::hypertree::{Hypertree, PathKind, SubForest};

/// Embeds `tree` into `host` with the root on `v` so that every given star
/// is the image of the two middle edges of a semi-bare path of length six.
pub fn immerse_embed(host: &KGraph, tree: &Hypertree, v: Vertex, stars: &[TwoStar]) -> Result<Embedding> {
    let forest = SubForest::full(tree);
    let paths = immersion_paths(&forest, tree.root(), stars.len());
    let forbidden = vec![false; host.n()];
    immerse_in(host, &forest, tree.root(), v, stars, &paths, &forbidden)
}

/// Up to `count` edge-disjoint length-six windows in the active forest that
/// are semi-bare there and keep `root` off their four middle edges.
pub(crate) fn immersion_paths(forest: &SubForest, root: Vertex, count: usize) -> Vec<Vec<usize>> {
    let tree = forest.tree;
    extract_in(forest, 5)
        .into_iter()
        .filter(|p| !p[1..5].iter().any(|&e| tree.edge(e).contains(&root)))
        .take(count)
        .collect()
}

/// Immersion over the active edges of `forest`. `paths` supplies one window
/// per star; host vertices marked `forbidden` are never used.
pub(crate) fn immerse_in(
    host: &KGraph,
    forest: &SubForest,
    root: Vertex,
    v: Vertex,
    stars: &[TwoStar],
    paths: &[Vec<usize>],
    forbidden: &[bool],
) -> Result<Embedding> {
    let tree = forest.tree;
    if root as usize >= tree.n() {
        return Err(Error::UnknownVertex(root));
    }
    if v as usize >= host.n() {
        return Err(Error::UnknownVertex(v));
    }
    if paths.len() < stars.len() {
        return Err(Error::ImmersionFailure(stars[paths.len()].centre));
    }
    let mut st = State {
        host,
        tree,
        emb: Embedding::new(tree.n()),
        blocked: forbidden.to_vec(),
    };
    for s in stars {
        if !s.is_valid(host) || s.vertices().any(|w| w == v) {
            return Err(Error::ImmersionFailure(s.centre));
        }
        for w in s.vertices() {
            if std::mem::replace(&mut st.blocked[w as usize], true) {
                return Err(Error::ImmersionFailure(s.centre));
            }
        }
    }
    st.emb.set(root, v)?;
    st.blocked[v as usize] = true;
    let Some(&start) = tree.incident(root).iter().find(|&&e| forest.active[e]) else {
        return match stars.first() {
            Some(s) => Err(Error::ImmersionFailure(s.centre)),
            None => Ok(st.emb),
        };
    };
    let paths = &paths[..stars.len()];
    let mut path_of = vec![usize::MAX; tree.num_edges()];
    for (i, p) in paths.iter().enumerate() {
        for &e in p {
            path_of[e] = i;
        }
    }
    let order = tree.dfs_priority_in(&forest.active, start, paths)?;
    let mut i = 0;
    while i < order.len() {
        let p = path_of[order[i]];
        if p == usize::MAX {
            st.place_edge(order[i])?;
            i += 1;
            continue;
        }
        let block = &order[i..i + 6];
        debug_assert!(block.iter().all(|&e| path_of[e] == p));
        st.place_block(block, &stars[p])?;
        i += 6;
    }
    Ok(st.emb)
}

struct State<'a> {
    host: &'a KGraph,
    tree: &'a Hypertree,
    emb: Embedding,
    /// Used, reserved for a star, or forbidden.
    blocked: Vec<bool>,
}

impl State<'_> {
    fn mapped(&self, e: usize) -> Vec<Vertex> {
        self.tree.edge(e).iter().copied().filter(|&x| self.emb.get(x).is_some()).collect()
    }

    fn assign(&mut self, tree_vs: impl IntoIterator<Item = Vertex>, host_vs: impl IntoIterator<Item = Vertex>) -> Result<()> {
        for (x, y) in tree_vs.into_iter().zip(host_vs) {
            self.emb.set(x, y)?;
            self.blocked[y as usize] = true;
        }
        Ok(())
    }

    /// Least host edge through the image of the one mapped vertex of `e`,
    /// otherwise on free vertices.
    fn place_edge(&mut self, e: usize) -> Result<()> {
        let stuck = || Error::EmbeddingStuck { edge: self.tree.edge(e).clone() };
        let fixed = self.mapped(e);
        let &[a] = fixed.as_slice() else { return Err(stuck()) };
        let at = self.emb.get(a).expect("mapped");
        let h = self
            .host
            .incident(at)
            .find(|h| h.iter().all(|&w| w == at || !self.blocked[w as usize]))
            .ok_or_else(stuck)?
            .clone();
        let new_tree: Vec<Vertex> = self.tree.edge(e).iter().copied().filter(|&x| x != a).collect();
        self.assign(new_tree, h.into_iter().filter(|&w| w != at))
    }

    /// Maps a six-edge block (in walk order) so that its middle edges land on
    /// the star, then places the last two edges greedily.
    fn place_block(&mut self, block: &[usize], star: &TwoStar) -> Result<()> {
        let fail = Error::ImmersionFailure(star.centre);
        let e: Vec<&Edge> = block.iter().map(|&i| self.tree.edge(i)).collect();
        let meet = |a: &Edge, b: &Edge| *a.iter().find(|w| b.binary_search(w).is_ok()).expect("consecutive path edges meet");
        let (c12, c23, x, c45) = (meet(e[0], e[1]), meet(e[1], e[2]), meet(e[2], e[3]), meet(e[3], e[4]));
        let fixed = self.mapped(block[0]);
        let &[z] = fixed.as_slice() else { return Err(fail) };
        let hz = self.emb.get(z).expect("mapped");
        for w in star.vertices() {
            self.blocked[w as usize] = false;
        }
        let choice = self.find_link(hz, star);
        for w in star.vertices() {
            self.blocked[w as usize] = true;
        }
        let Some((h1, h2, y, u, j)) = choice else { return Err(fail) };
        let others = |edge: &Edge, skip: &[Vertex]| -> Vec<Vertex> { edge.iter().copied().filter(|w| !skip.contains(w)).collect() };
        self.assign([c12], [y])?;
        self.assign(others(e[0], &[z, c12]), others(&h1, &[hz, y]))?;
        self.assign([c23], [u])?;
        self.assign(others(e[1], &[c12, c23]), others(&h2, &[y, u]))?;
        self.assign([x], [star.centre])?;
        self.assign(others(e[2], &[c23, x]), others(&star.leaves[j], &[u]))?;
        let l2 = &star.leaves[1 - j];
        self.assign([c45], [l2[0]])?;
        self.assign(others(e[3], &[x, c45]), l2[1..].iter().copied())?;
        for &i in &block[4..] {
            self.place_edge(i).map_err(|_| Error::ImmersionFailure(star.centre))?;
        }
        Ok(())
    }

    /// Host edges h1 ∋ hz and h2 ∋ u meeting only in y, with u a leaf of the
    /// star's edge j, everything else on free vertices.
    fn find_link(&self, hz: Vertex, star: &TwoStar) -> Option<(Edge, Edge, Vertex, Vertex, usize)> {
        let star_vs: Vec<Vertex> = star.vertices().collect();
        let free = |w: Vertex| !self.blocked[w as usize] && !star_vs.contains(&w);
        let first: Vec<&Edge> = self.host.incident(hz).filter(|h| h.iter().all(|&w| w == hz || free(w))).collect();
        for j in 0..2 {
            for &u in &star.leaves[j] {
                let mut by_vertex: HashMap<Vertex, Vec<&Edge>> = HashMap::new();
                for h in self.host.incident(u).filter(|h| !h.contains(&hz) && h.iter().all(|&w| w == u || free(w))) {
                    for &w in h.iter().filter(|&&w| w != u) {
                        by_vertex.entry(w).or_default().push(h);
                    }
                }
                for h1 in &first {
                    for &y in h1.iter().filter(|&&w| w != hz) {
                        let Some(list) = by_vertex.get(&y) else { continue };
                        if let Some(h2) = list.iter().find(|h2| h2.iter().all(|w| *w == y || h1.binary_search(w).is_err())) {
                            return Some(((*h1).clone(), (*h2).clone(), y, u, j));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Whether `star` sits in the image as the middle of a semi-bare or bare
/// length-six path of `tree` whose four middle edges avoid the root.
pub fn is_immersed(tree: &Hypertree, emb: &Embedding, star: &TwoStar) -> bool {
    let Some(x) = emb.preimage(star.centre) else { return false };
    let at_x = tree.incident(x);
    if at_x.len() != 2 {
        return false;
    }
    let image = |e: usize| -> Option<Edge> {
        let mut h: Option<Edge> = tree.edge(e).iter().map(|&t| emb.get(t)).collect();
        if let Some(h) = h.as_mut() {
            h.sort_unstable();
        }
        h
    };
    let (s0, s1) = (star.edge(0), star.edge(1));
    let (i0, i1) = (image(at_x[0]), image(at_x[1]));
    let (e3, e4) = if i0.as_ref() == Some(&s0) && i1.as_ref() == Some(&s1) || i0.as_ref() == Some(&s1) && i1.as_ref() == Some(&s0) {
        (at_x[0], at_x[1])
    } else {
        return false;
    };
    let root = tree.root();
    let outward = |e: usize, from: usize| -> Vec<usize> {
        let mut out: Vec<usize> = tree
            .edge(e)
            .iter()
            .filter(|w| !tree.edge(from).contains(w))
            .flat_map(|&w| tree.incident(w).iter().copied())
            .filter(|&f| f != e)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    for e2 in outward(e3, e4) {
        for e5 in outward(e4, e3) {
            if [e2, e3, e4, e5].iter().any(|&e| tree.edge(e).contains(&root)) {
                continue;
            }
            for e1 in outward(e2, e3) {
                for e6 in outward(e5, e4) {
                    let kind = tree.classify_path(&[e1, e2, e3, e4, e5, e6]);
                    if matches!(kind, Ok(PathKind::Bare | PathKind::SemiBare)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}
