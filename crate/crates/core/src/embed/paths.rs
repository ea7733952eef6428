use crate::error::{Error, Result};
use crate::hypergraph::{Edge, KGraph, Vertex, VertexSet};

/// A loose path of three host edges; the first holds `u`, the last holds `v`.
pub type Path3 = [Edge; 3];

/// Searches for length-3 loose paths whose interior vertices lie in an
/// allowed set, caching per-vertex edge lists.
pub(crate) struct PathFinder<'a> {
    host: &'a KGraph,
    allowed: &'a VertexSet,
    lists: Vec<Option<Vec<&'a Edge>>>,
}

impl<'a> PathFinder<'a> {
    pub fn new(host: &'a KGraph, allowed: &'a VertexSet) -> Self {
        PathFinder {
            host,
            allowed,
            lists: vec![None; host.n()],
        }
    }

    /// Edges at `x` whose other vertices are all allowed.
    fn list(&mut self, x: Vertex) -> Vec<&'a Edge> {
        let (host, allowed) = (self.host, self.allowed);
        self.lists[x as usize]
            .get_or_insert_with(|| {
                host.incident(x)
                    .filter(|e| e.iter().all(|&w| w == x || allowed.contains(w as usize)))
                    .collect()
            })
            .clone()
    }

    /// One u–v path whose interior avoids `blocked`, u and v.
    pub fn find(&mut self, u: Vertex, v: Vertex, blocked: &[bool]) -> Option<Path3> {
        let free = |e: &Edge, own: Vertex| e.iter().all(|&w| w == own || (w != u && w != v && !blocked[w as usize]));
        let at_u: Vec<&Edge> = self.list(u).into_iter().filter(|e| free(e, u)).collect();
        let at_v: Vec<&Edge> = self.list(v).into_iter().filter(|e| free(e, v)).collect();
        if at_u.is_empty() || at_v.is_empty() {
            return None;
        }
        for e in &at_u {
            for &p in e.iter().filter(|&&p| p != u) {
                for f in self.list(p) {
                    if !free(f, p) || f.iter().any(|&w| w != p && e.binary_search(&w).is_ok()) {
                        continue;
                    }
                    for g in &at_v {
                        if g.iter().any(|&w| e.binary_search(&w).is_ok()) {
                            continue;
                        }
                        if g.iter().filter(|&&w| f.binary_search(&w).is_ok()).count() == 1 {
                            return Some([(*e).clone(), f.clone(), (*g).clone()]);
                        }
                    }
                }
            }
        }
        None
    }
}

/// Interior vertices of a path: everything except its two ends.
pub(crate) fn interior(path: &Path3, u: Vertex, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
    let mut all: Vec<Vertex> = path.iter().flatten().copied().filter(|&w| w != u && w != v).collect();
    all.sort_unstable();
    all.dedup();
    all.into_iter()
}

/// A maximal collection of internally disjoint length-3 loose u–v paths with
/// interiors inside `allowed`, built greedily.
pub fn count_disjoint_paths3(host: &KGraph, u: Vertex, v: Vertex, allowed: &VertexSet) -> Result<(usize, Vec<Path3>)> {
    let paths = disjoint_paths3(host, u, v, allowed, usize::MAX)?;
    Ok((paths.len(), paths))
}

pub(crate) fn disjoint_paths3(host: &KGraph, u: Vertex, v: Vertex, allowed: &VertexSet, cap: usize) -> Result<Vec<Path3>> {
    check_pair(host, u, v)?;
    let mut finder = PathFinder::new(host, allowed);
    let mut blocked = vec![false; host.n()];
    let mut paths = Vec::new();
    while paths.len() < cap {
        let Some(p) = finder.find(u, v, &blocked) else { break };
        for w in interior(&p, u, v) {
            blocked[w as usize] = true;
        }
        paths.push(p);
    }
    Ok(paths)
}

fn check_pair(host: &KGraph, u: Vertex, v: Vertex) -> Result<()> {
    for x in [u, v] {
        if x as usize >= host.n() {
            return Err(Error::UnknownVertex(x));
        }
    }
    if u == v {
        return Err(Error::InvalidArgument(format!("path ends coincide at {u}")));
    }
    Ok(())
}

/// One length-3 path per pair, pairwise internally disjoint, with interiors
/// drawn from `available` and never reused.
pub fn connect_bare_paths(host: &KGraph, pairs: &[(Vertex, Vertex)], available: &VertexSet) -> Result<Vec<Path3>> {
    let mut blocked: Vec<bool> = (0..host.n()).map(|w| !available.contains(w)).collect();
    for &(u, v) in pairs {
        check_pair(host, u, v)?;
        blocked[u as usize] = true;
        blocked[v as usize] = true;
    }
    let allowed = available.clone();
    let mut finder = PathFinder::new(host, &allowed);
    let mut out = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        // Ends of other pairs stay blocked; this pair's own ends are handled by `find`.
        let path = finder.find(u, v, &blocked).ok_or(Error::ConnectionFailure(u, v))?;
        for w in interior(&path, u, v) {
            blocked[w as usize] = true;
        }
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{full_set, vertex_set};

    /// Independent check: a loose u–v path whose interior is allowed.
    fn valid(host: &KGraph, u: Vertex, v: Vertex, p: &Path3, allowed: &VertexSet) -> bool {
        let [e, f, g] = p;
        let meet = |a: &Edge, b: &Edge| a.iter().filter(|w| b.contains(w)).count();
        p.iter().all(|x| host.contains(x))
            && e.contains(&u)
            && g.contains(&v)
            && !e.contains(&v)
            && !g.contains(&u)
            && !f.contains(&u)
            && !f.contains(&v)
            && meet(e, f) == 1
            && meet(f, g) == 1
            && meet(e, g) == 0
            && p.iter().flatten().all(|&w| w == u || w == v || allowed.contains(w as usize))
    }

    fn disjoint_interiors(paths: &[Path3], u: Vertex, v: Vertex) -> bool {
        let mut seen = std::collections::HashSet::new();
        paths.iter().all(|p| interior(p, u, v).all(|w| seen.insert(w)))
    }

    #[test]
    fn complete_graph_has_paths() {
        let g = KGraph::complete(3, 12);
        let all = full_set(12);
        let (count, paths) = count_disjoint_paths3(&g, 0, 1, &all).unwrap();
        assert!(count >= 1);
        // 10 interior vertices, 5 per path.
        assert_eq!(count, 2);
        assert!(paths.iter().all(|p| valid(&g, 0, 1, p, &all)));
        assert!(disjoint_interiors(&paths, 0, 1));
        let none = vertex_set(12, []);
        assert_eq!(count_disjoint_paths3(&g, 0, 1, &none).unwrap().0, 0);
    }

    #[test]
    fn random_graphs_give_valid_paths() {
        use crate::instances::{random_kgraph, GenKind, GenSpec};
        for seed in 0..20 {
            let g = random_kgraph(&GenSpec::graph(GenKind::Density, 14, 3, 0.3, seed)).unwrap();
            let allowed = vertex_set(14, (2..14).filter(|w| w % 3 != 0));
            let (_, paths) = count_disjoint_paths3(&g, 0, 1, &allowed).unwrap();
            assert!(paths.iter().all(|p| valid(&g, 0, 1, p, &allowed)));
            assert!(disjoint_interiors(&paths, 0, 1));
        }
    }

    #[test]
    fn connects_many_pairs() {
        let k = 3;
        let t = 4;
        let n = 2 * t + 3 * k * t + 3;
        let g = KGraph::complete(k, n);
        let pairs: Vec<(Vertex, Vertex)> = (0..t as Vertex).map(|i| (2 * i, 2 * i + 1)).collect();
        let r = vertex_set(n, 2 * t as Vertex..n as Vertex);
        let paths = connect_bare_paths(&g, &pairs, &r).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (p, &(u, v)) in paths.iter().zip(&pairs) {
            assert!(valid(&g, u, v, p, &r));
            assert!(interior(p, u, v).all(|w| seen.insert(w)));
        }
        let tiny = vertex_set(n, [20, 21, 22]);
        assert_eq!(connect_bare_paths(&g, &pairs, &tiny), Err(Error::ConnectionFailure(0, 1)));
    }
}
