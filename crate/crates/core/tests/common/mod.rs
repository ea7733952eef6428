//! Independent checkers shared by the integration tests. None of them call
//! into the library's own verification code.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use loosetree::{Hypertree, KGraph, Vertex};

/// Host edge lookup built from the raw edge list.
pub struct HostIndex {
    k: usize,
    n: usize,
    edges: HashSet<Vec<Vertex>>,
}

impl HostIndex {
    pub fn new(host: &KGraph) -> Self {
        HostIndex { k: host.k(), n: host.n(), edges: host.edges().iter().cloned().collect() }
    }

    pub fn has(&self, vs: &[Vertex]) -> bool {
        let mut e = vs.to_vec();
        e.sort_unstable();
        e.dedup();
        e.len() == self.k && self.edges.contains(&e)
    }
}

/// Checks that `map` embeds every edge of `tree` into the host, is
/// injective, honours the pinned roots and, if asked, covers the host.
pub fn check_embedding(
    tree: &Hypertree,
    host: &HostIndex,
    map: &[Option<Vertex>],
    roots: &[(Vertex, Vertex)],
    spanning: bool,
) -> Result<(), String> {
    if map.len() != tree.n() {
        return Err(format!("map has {} entries for {} tree vertices", map.len(), tree.n()));
    }
    let mut seen = HashSet::new();
    for (x, y) in map.iter().enumerate() {
        let y = y.ok_or_else(|| format!("tree vertex {x} unmapped"))?;
        if y as usize >= host.n {
            return Err(format!("image {y} of {x} out of range"));
        }
        if !seen.insert(y) {
            return Err(format!("host vertex {y} used twice"));
        }
    }
    for &(r, v) in roots {
        if map[r as usize] != Some(v) {
            return Err(format!("root {r} sent to {:?}, wanted {v}", map[r as usize]));
        }
    }
    for (i, e) in tree.edges().iter().enumerate() {
        let img: Vec<Vertex> = e.iter().map(|&x| map[x as usize].unwrap()).collect();
        if !host.has(&img) {
            return Err(format!("tree edge {i} = {e:?} maps to non-edge {img:?}"));
        }
    }
    if spanning && seen.len() != host.n {
        return Err(format!("covers {} of {} host vertices", seen.len(), host.n));
    }
    Ok(())
}

/// Binomial coefficient in u128.
pub fn choose(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Minimum ℓ-degree counted directly from the edge list.
pub fn min_degree(host: &KGraph, level: usize) -> u64 {
    let mut deg: HashMap<Vec<Vertex>, u64> = HashMap::new();
    for e in host.edges() {
        for mask in 0u32..(1 << e.len()) {
            if mask.count_ones() as usize == level {
                let s: Vec<Vertex> = (0..e.len()).filter(|i| mask >> i & 1 == 1).map(|i| e[i]).collect();
                *deg.entry(s).or_default() += 1;
            }
        }
    }
    if deg.len() as u128 != choose(host.n(), level) {
        return 0;
    }
    deg.values().copied().min().unwrap_or(0)
}

/// Whether δ_ℓ/C(n−ℓ, k−ℓ) is non-increasing in ℓ = 1, …, k−1.
pub fn degree_monotone(host: &KGraph) -> bool {
    let (k, n) = (host.k(), host.n());
    let ratios: Vec<(u128, u128)> = (1..k).map(|l| (min_degree(host, l) as u128, choose(n - l, k - l))).collect();
    ratios.windows(2).all(|w| w[0].0 * w[1].1 >= w[1].0 * w[0].1)
}

/// Records every host a test touches and checks degree monotonicity on it.
#[derive(Default)]
pub struct Touched {
    pub hosts: usize,
    pub violations: Vec<String>,
    seen: HashSet<u64>,
}

impl Touched {
    pub fn touch(&mut self, host: &KGraph, label: &str) {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (host.k(), host.n(), host.edges()).hash(&mut h);
        if !self.seen.insert(h.finish()) {
            return;
        }
        self.hosts += 1;
        if !degree_monotone(host) {
            self.violations.push(label.to_string());
        }
    }
}

/// Whether the edges form a loose path in order: consecutive edges share
/// exactly one vertex and non-consecutive ones are disjoint.
pub fn is_loose_path(tree: &Hypertree, path: &[usize]) -> bool {
    for i in 0..path.len() {
        for j in i + 1..path.len() {
            let shared = tree.edge(path[i]).iter().filter(|v| tree.edge(path[j]).contains(v)).count();
            if shared != usize::from(j == i + 1) {
                return false;
            }
        }
    }
    true
}

/// Semi-bare: a loose path whose vertices outside the two end pairs have
/// no tree edges other than path edges.
pub fn is_semi_bare(tree: &Hypertree, path: &[usize]) -> bool {
    if path.is_empty() || !is_loose_path(tree, path) {
        return false;
    }
    let mut count: HashMap<Vertex, usize> = HashMap::new();
    for &e in path {
        for &v in tree.edge(e) {
            *count.entry(v).or_default() += 1;
        }
    }
    let last = path.len() - 1;
    let end_pair = |e: usize, nb: Option<usize>| -> Vec<Vertex> {
        tree.edge(e).iter().copied().filter(|v| nb.is_none_or(|f| !tree.edge(f).contains(v))).collect()
    };
    let mut ends: HashSet<Vertex> = end_pair(path[0], path.get(1).copied()).into_iter().collect();
    ends.extend(end_pair(path[last], if last > 0 { Some(path[last - 1]) } else { None }));
    let mut tree_deg: HashMap<Vertex, usize> = HashMap::new();
    for e in tree.edges() {
        for &v in e {
            *tree_deg.entry(v).or_default() += 1;
        }
    }
    count.iter().all(|(v, &c)| ends.contains(v) || tree_deg[v] == c)
}

/// Connected, and |V| = 1 + e(k − 1): together these make the edge set a
/// loose hypertree.
pub fn is_subtree(tree: &Hypertree, edges: &[usize]) -> bool {
    if edges.is_empty() {
        return true;
    }
    let mut vs: Vec<Vertex> = edges.iter().flat_map(|&e| tree.edge(e).iter().copied()).collect();
    vs.sort_unstable();
    vs.dedup();
    if vs.len() != 1 + edges.len() * (tree.k() - 1) {
        return false;
    }
    let pos = |v: Vertex| vs.binary_search(&v).unwrap();
    let mut parent: Vec<usize> = (0..vs.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for &e in edges {
        let a = pos(tree.edge(e)[0]);
        for &v in &tree.edge(e)[1..] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, pos(v)));
            parent[ra] = rb;
        }
    }
    let r0 = find(&mut parent, 0);
    (0..vs.len()).all(|i| find(&mut parent, i) == r0)
}

/// Leaf edges counted directly: at least k − 1 vertices of degree one.
pub fn leaf_edge_count(tree: &Hypertree) -> usize {
    let mut deg = vec![0usize; tree.n()];
    for e in tree.edges() {
        for &v in e {
            deg[v as usize] += 1;
        }
    }
    tree.edges().iter().filter(|e| e.iter().filter(|&&v| deg[v as usize] == 1).count() >= tree.k() - 1).count()
}
