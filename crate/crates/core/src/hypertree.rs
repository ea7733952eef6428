//! Rooted loose hypertrees and their structural queries.
//!
//! Edges are stored in loose construction order: every edge after the first
//! meets the union of the earlier ones in exactly one vertex. Many queries
//! also run on sub-forests of a tree (an active mask over its edges), which
//! is what the decomposition needs while it strips edges away.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{Edge, KGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypertree {
    k: usize,
    n: usize,
    root: Vertex,
    root2: Option<Vertex>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

/// Which structural rule a hypertree violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Uniformity,
    VertexRange,
    Linearity,
    Size,
    ConstructionOrder,
    Connectivity,
    Root,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub edge: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.edge {
            Some(i) => write!(f, "{:?} violated at edge {i}", self.rule),
            None => write!(f, "{:?} violated", self.rule),
        }
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::InvalidTree(v.to_string())
    }
}

/// A leaf edge together with its parent vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafEdge {
    pub edge: usize,
    pub parent: Vertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Bare,
    SemiBare,
    Neither,
}

/// A loose path inside a tree, given by edge indices in path order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathWitness {
    pub edges: Vec<usize>,
    /// One vertex from each end pair: the one touched from outside the path
    /// if there is one, otherwise the smallest.
    pub ends: [Vertex; 2],
    pub kind: PathKind,
}

fn incidence(n: usize, edges: &[Edge]) -> Vec<Vec<usize>> {
    let mut inc = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        for &v in e {
            if (v as usize) < n {
                inc[v as usize].push(i);
            }
        }
    }
    inc
}

fn shared(a: &[Vertex], b: &[Vertex]) -> usize {
    a.iter().filter(|v| b.binary_search(v).is_ok()).count()
}

impl Hypertree {
    /// Validates and builds a rooted hypertree. If the edges form a hypertree
    /// but are not listed in construction order they are reordered by a BFS
    /// from the root.
    pub fn new(k: usize, n: usize, root: Vertex, edges: Vec<Edge>) -> Result<Self> {
        Self::with_roots(k, n, root, None, edges)
    }

    pub fn with_roots(
        k: usize,
        n: usize,
        root: Vertex,
        root2: Option<Vertex>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|mut e| {
                e.sort_unstable();
                e
            })
            .collect();
        let tree = Self::raw(k, n, root, root2, edges);
        match tree.validate() {
            Ok(()) => Ok(tree),
            Err(v) if v.rule == Rule::ConstructionOrder => {
                let order = tree.bfs_from(&[root]);
                if order.len() != tree.edges.len() {
                    return Err(Violation {
                        edge: None,
                        rule: Rule::Connectivity,
                    }
                    .into());
                }
                let edges = order.iter().map(|&i| tree.edges[i].clone()).collect();
                let repaired = Self::raw(k, n, root, root2, edges);
                repaired.validate()?;
                Ok(repaired)
            }
            Err(v) => Err(v.into()),
        }
    }

    pub(crate) fn raw(k: usize, n: usize, root: Vertex, root2: Option<Vertex>, edges: Vec<Edge>) -> Self {
        let incident = incidence(n, &edges);
        Hypertree {
            k,
            n,
            root,
            root2,
            edges,
            incident,
        }
    }

    /// The loose path with `len` edges, rooted at its first vertex.
    pub fn loose_path(k: usize, len: usize) -> Self {
        let step = (k - 1) as Vertex;
        let edges = (0..len as Vertex)
            .map(|i| (i * step..=(i + 1) * step).collect())
            .collect();
        Self::raw(k, (k - 1) * len + 1, 0, None, edges)
    }

    /// The star with `d` edges sharing vertex 0, rooted at the centre.
    pub fn star(k: usize, d: usize) -> Self {
        let step = (k - 1) as Vertex;
        let edges = (0..d as Vertex)
            .map(|i| {
                let mut e = vec![0];
                e.extend(1 + i * step..1 + (i + 1) * step);
                e
            })
            .collect();
        Self::raw(k, (k - 1) * d + 1, 0, None, edges)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn root2(&self) -> Option<Vertex> {
        self.root2
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    /// Edge indices containing `v`.
    pub fn incident(&self, v: Vertex) -> &[usize] {
        &self.incident[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.incident[v as usize].len()
    }

    pub fn with_root(mut self, root: Vertex) -> Result<Self> {
        if root as usize >= self.n {
            return Err(Error::UnknownVertex(root));
        }
        self.root = root;
        Ok(self)
    }

    pub fn set_root2(mut self, root2: Option<Vertex>) -> Result<Self> {
        if let Some(r) = root2 {
            if r as usize >= self.n || r == self.root {
                return Err(Violation {
                    edge: None,
                    rule: Rule::Root,
                }
                .into());
            }
        }
        self.root2 = root2;
        Ok(self)
    }

    /// Checks uniformity, linearity, the vertex/edge count identity,
    /// construction order (which implies connectivity) and the roots.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let fail = |edge, rule| Err(Violation { edge, rule });
        if self.k < 2 {
            return fail(None, Rule::Uniformity);
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.len() != self.k || e.windows(2).any(|w| w[0] >= w[1]) {
                return fail(Some(i), Rule::Uniformity);
            }
            if e.iter().any(|&v| v as usize >= self.n) {
                return fail(Some(i), Rule::VertexRange);
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            for &v in e {
                for &j in &self.incident[v as usize] {
                    if j < i && shared(e, &self.edges[j]) > 1 {
                        return fail(Some(i), Rule::Linearity);
                    }
                }
            }
        }
        if self.n == 0 || !(self.n - 1).is_multiple_of(self.k - 1) || self.edges.len() != (self.n - 1) / (self.k - 1) {
            return fail(None, Rule::Size);
        }
        let mut seen = vec![false; self.n];
        if let Some(first) = self.edges.first() {
            for &v in first {
                seen[v as usize] = true;
            }
        }
        for (i, e) in self.edges.iter().enumerate().skip(1) {
            let old = e.iter().filter(|&&v| seen[v as usize]).count();
            if old != 1 {
                return fail(Some(i), Rule::ConstructionOrder);
            }
            for &v in e {
                seen[v as usize] = true;
            }
        }
        if self.edges.is_empty() && self.n != 1 {
            return fail(None, Rule::Connectivity);
        }
        if self.root as usize >= self.n {
            return fail(None, Rule::Root);
        }
        if let Some(r2) = self.root2 {
            if r2 as usize >= self.n || r2 == self.root {
                return fail(None, Rule::Root);
            }
        }
        Ok(())
    }

    /// Every leaf edge with its parent.
    pub fn leaf_edges(&self) -> Vec<LeafEdge> {
        SubForest::full(self).leaf_edges()
    }

    /// A maximum set of pairwise disjoint leaf edges avoiding `excluded`.
    pub fn max_leaf_matching(&self, excluded: &[usize]) -> Vec<usize> {
        SubForest::full(self).max_leaf_matching(excluded)
    }

    /// Classifies a loose path of `T` given by its edge indices in order.
    pub fn classify_path(&self, path: &[usize]) -> Result<PathKind> {
        let active = vec![true; self.edges.len()];
        classify_in(self, &active, path)
    }

    /// Line graph: one vertex per edge, adjacent when edges share a vertex.
    pub fn line_graph(&self) -> KGraph {
        let mut pairs = Vec::new();
        for inc in &self.incident {
            for (a, &i) in inc.iter().enumerate() {
                for &j in &inc[a + 1..] {
                    pairs.push(vec![i as Vertex, j as Vertex]);
                }
            }
        }
        KGraph::new(2, self.edges.len(), pairs).expect("line graph edges are valid")
    }

    /// Edges in BFS order from `start`.
    pub fn bfs_edge_order(&self, start: Vertex) -> Result<Vec<usize>> {
        if start as usize >= self.n {
            return Err(Error::UnknownVertex(start));
        }
        Ok(self.bfs_from(&[start]))
    }

    fn bfs_from(&self, starts: &[Vertex]) -> Vec<usize> {
        SubForest::full(self).bfs_order(starts)
    }

    /// DFS over the line graph from `start_edge`; once an edge of a priority
    /// path is reached the rest of that path is emitted consecutively,
    /// walking outwards from the entry edge.
    pub fn dfs_edge_order_with_priority(&self, start_edge: usize, priority: &[Vec<usize>]) -> Result<Vec<usize>> {
        self.dfs_priority_in(&vec![true; self.edges.len()], start_edge, priority)
    }

    /// As `dfs_edge_order_with_priority`, over the active edges only.
    pub(crate) fn dfs_priority_in(&self, active: &[bool], start_edge: usize, priority: &[Vec<usize>]) -> Result<Vec<usize>> {
        if start_edge >= self.edges.len() || !active[start_edge] {
            return Err(Error::InvalidArgument(format!("no edge {start_edge}")));
        }
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (p, path) in priority.iter().enumerate() {
            for &e in path {
                if owner.insert(e, p).is_some() {
                    return Err(Error::InvalidArgument("priority paths share an edge".into()));
                }
            }
        }
        let m = self.edges.len();
        let mut visited: Vec<bool> = (0..m).map(|e| !active[e]).collect();
        let mut order = Vec::with_capacity(m);
        let mut stack = vec![start_edge];
        while let Some(e) = stack.pop() {
            if visited[e] {
                continue;
            }
            let block: Vec<usize> = match owner.get(&e) {
                Some(&p) => {
                    let path = &priority[p];
                    let at = path.iter().position(|&x| x == e).expect("owner map is consistent");
                    let mut b: Vec<usize> = path[at..].to_vec();
                    b.extend(path[..at].iter().rev());
                    b
                }
                None => vec![e],
            };
            for &b in &block {
                if !visited[b] {
                    visited[b] = true;
                    order.push(b);
                }
            }
            for &b in block.iter().rev() {
                let mut next: Vec<usize> = self.edges[b]
                    .iter()
                    .flat_map(|&v| self.incident[v as usize].iter().copied())
                    .filter(|&x| !visited[x])
                    .collect();
                next.sort_unstable();
                next.dedup();
                stack.extend(next.into_iter().rev());
            }
        }
        Ok(order)
    }

    /// Sub-hypertree on the given edges, relabelled densely (sorted by old id).
    /// Returns the tree and the map from new ids to old ids.
    pub fn restrict(&self, edge_ids: &[usize], root: Vertex) -> Result<(Hypertree, Vec<Vertex>)> {
        let mut old: Vec<Vertex> = edge_ids
            .iter()
            .flat_map(|&i| self.edges[i].iter().copied())
            .collect();
        old.push(root);
        old.sort_unstable();
        old.dedup();
        let pos: HashMap<Vertex, Vertex> = old.iter().enumerate().map(|(i, &v)| (v, i as Vertex)).collect();
        let edges: Vec<Edge> = edge_ids
            .iter()
            .map(|&i| {
                let mut e: Edge = self.edges[i].iter().map(|v| pos[v]).collect();
                e.sort_unstable();
                e
            })
            .collect();
        let tree = Hypertree::new(self.k, old.len(), pos[&root], edges)?;
        Ok((tree, old))
    }

    /// The unique loose path between two distinct vertices, as edge indices.
    pub fn path_between(&self, u: Vertex, v: Vertex) -> Result<Vec<usize>> {
        for x in [u, v] {
            if x as usize >= self.n {
                return Err(Error::UnknownVertex(x));
            }
        }
        let mut via: Vec<Option<(usize, Vertex)>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([u]);
        seen[u as usize] = true;
        while let Some(x) = queue.pop_front() {
            if x == v {
                break;
            }
            for &e in &self.incident[x as usize] {
                for &y in &self.edges[e] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        via[y as usize] = Some((e, x));
                        queue.push_back(y);
                    }
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = v;
        while cur != u {
            let (e, prev) = via[cur as usize].ok_or_else(|| Error::InvalidArgument("vertices not connected".into()))?;
            path.push(e);
            cur = prev;
        }
        path.reverse();
        Ok(path)
    }

    pub fn to_file(&self) -> HypertreeFile {
        HypertreeFile {
            schema: Some(crate::instances::SCHEMA.to_string()),
            k: self.k,
            n: self.n,
            root: self.root,
            root2: self.root2,
            edges: self.edges.clone(),
        }
    }
}

/// On-disk form of a rooted hypertree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypertreeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub k: usize,
    pub n: usize,
    pub root: Vertex,
    #[serde(default)]
    pub root2: Option<Vertex>,
    pub edges: Vec<Edge>,
}

impl TryFrom<HypertreeFile> for Hypertree {
    type Error = Error;

    fn try_from(f: HypertreeFile) -> Result<Self> {
        crate::instances::check_schema(f.schema.as_deref())?;
        Hypertree::with_roots(f.k, f.n, f.root, f.root2, f.edges)
    }
}

/// Validation without the reordering repair, for reporting.
pub fn validate_file(f: &HypertreeFile) -> std::result::Result<(), Violation> {
    let edges = f
        .edges
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.sort_unstable();
            e
        })
        .collect();
    let t = Hypertree::raw(f.k, f.n, f.root, f.root2, edges);
    match t.validate() {
        Err(v) if v.rule == Rule::ConstructionOrder => {
            if t.bfs_from(&[f.root]).len() == t.edges.len() {
                Ok(())
            } else {
                Err(Violation {
                    edge: v.edge,
                    rule: Rule::Connectivity,
                })
            }
        }
        other => other,
    }
}

/// A sub-forest of a hypertree: an active mask over its edges with degrees
/// maintained incrementally.
#[derive(Debug, Clone)]
pub(crate) struct SubForest<'a> {
    pub tree: &'a Hypertree,
    pub active: Vec<bool>,
    pub deg: Vec<u32>,
}

impl<'a> SubForest<'a> {
    pub fn full(tree: &'a Hypertree) -> Self {
        Self::from_mask(tree, vec![true; tree.edges.len()])
    }

    pub fn from_mask(tree: &'a Hypertree, active: Vec<bool>) -> Self {
        let mut deg = vec![0u32; tree.n];
        for (i, e) in tree.edges.iter().enumerate() {
            if active[i] {
                for &v in e {
                    deg[v as usize] += 1;
                }
            }
        }
        SubForest { tree, active, deg }
    }

    pub fn remove(&mut self, e: usize) {
        debug_assert!(self.active[e]);
        self.active[e] = false;
        for &v in &self.tree.edges[e] {
            self.deg[v as usize] -= 1;
        }
    }

    pub fn active_edges(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    /// Parent of an active edge if it is a leaf edge.
    pub fn leaf_parent(&self, e: usize) -> Option<Vertex> {
        let edge = &self.tree.edges[e];
        let ones = edge.iter().filter(|&&v| self.deg[v as usize] == 1).count();
        if ones + 1 < self.tree.k {
            return None;
        }
        Some(
            edge.iter()
                .copied()
                .find(|&v| self.deg[v as usize] >= 2)
                .unwrap_or(edge[0]),
        )
    }

    pub fn leaf_edges(&self) -> Vec<LeafEdge> {
        (0..self.active.len())
            .filter(|&i| self.active[i])
            .filter_map(|i| self.leaf_parent(i).map(|parent| LeafEdge { edge: i, parent }))
            .collect()
    }

    /// Whether `v` is a leaf vertex: degree one inside a leaf edge of which it
    /// is not the parent.
    pub fn is_leaf_vertex(&self, v: Vertex) -> Option<usize> {
        if self.deg[v as usize] != 1 {
            return None;
        }
        let e = *self.tree.incident[v as usize].iter().find(|&&e| self.active[e])?;
        match self.leaf_parent(e) {
            Some(p) if p != v => Some(e),
            _ => None,
        }
    }

    pub fn max_leaf_matching(&self, excluded: &[usize]) -> Vec<usize> {
        let mut by_parent: BTreeMap<Vertex, usize> = BTreeMap::new();
        for LeafEdge { edge, parent } in self.leaf_edges() {
            if excluded.contains(&edge) {
                continue;
            }
            by_parent.entry(parent).or_insert(edge);
        }
        let mut m: Vec<usize> = by_parent.into_values().collect();
        m.sort_unstable();
        m
    }

    /// BFS edge order over the active edges: first from each of `starts` in
    /// turn, then from the smallest vertex of every untouched component.
    pub fn bfs_order(&self, starts: &[Vertex]) -> Vec<usize> {
        let n = self.tree.n;
        let mut listed = vec![false; self.active.len()];
        let mut seen = vec![false; n];
        let mut order = Vec::new();
        let run = |s: Vertex, seen: &mut Vec<bool>, order: &mut Vec<usize>, listed: &mut Vec<bool>| {
            if seen[s as usize] {
                return;
            }
            seen[s as usize] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &e in &self.tree.incident[x as usize] {
                    if !self.active[e] || listed[e] {
                        continue;
                    }
                    listed[e] = true;
                    order.push(e);
                    for &y in &self.tree.edges[e] {
                        if !seen[y as usize] {
                            seen[y as usize] = true;
                            queue.push_back(y);
                        }
                    }
                }
            }
        };
        for &s in starts {
            run(s, &mut seen, &mut order, &mut listed);
        }
        for e in 0..self.active.len() {
            if self.active[e] && !listed[e] {
                let s = self.tree.edges[e][0];
                run(s, &mut seen, &mut order, &mut listed);
            }
        }
        order
    }
}

/// Checks that `path` is a loose path made of active edges and classifies it
/// relative to the active sub-forest.
pub(crate) fn classify_in(tree: &Hypertree, active: &[bool], path: &[usize]) -> Result<PathKind> {
    let bad = |msg: &str| Err(Error::InvalidArgument(format!("not a loose path: {msg}")));
    if path.is_empty() {
        return bad("empty");
    }
    let mut distinct = HashSet::new();
    for &e in path {
        if e >= tree.edges.len() || !active[e] {
            return bad("edge not in tree");
        }
        if !distinct.insert(e) {
            return bad("repeated edge");
        }
    }
    let m = path.len();
    for i in 0..m {
        for j in i + 1..m {
            let s = shared(&tree.edges[path[i]], &tree.edges[path[j]]);
            if (j == i + 1 && s != 1) || (j > i + 1 && s != 0) {
                return bad("wrong intersections");
            }
        }
    }
    let mut in_path: HashMap<Vertex, usize> = HashMap::new();
    for &e in path {
        for &v in &tree.edges[e] {
            *in_path.entry(v).or_insert(0) += 1;
        }
    }
    let deg = |v: Vertex| {
        tree.incident[v as usize]
            .iter()
            .filter(|&&e| active[e])
            .count()
    };
    let touched = |v: Vertex| deg(v) > in_path[&v];
    if m == 1 {
        let t = tree.edges[path[0]].iter().filter(|&&v| touched(v)).count();
        return Ok(if t <= 2 { PathKind::Bare } else { PathKind::SemiBare });
    }
    let (end1, end2) = end_pairs(tree, path);
    for &v in in_path.keys() {
        if !end1.contains(&v) && !end2.contains(&v) && touched(v) {
            return Ok(PathKind::Neither);
        }
    }
    let t1 = end1.iter().filter(|&&v| touched(v)).count();
    let t2 = end2.iter().filter(|&&v| touched(v)).count();
    Ok(if t1 <= 1 && t2 <= 1 {
        PathKind::Bare
    } else {
        PathKind::SemiBare
    })
}

/// End pairs of a loose path with at least two edges.
pub(crate) fn end_pairs(tree: &Hypertree, path: &[usize]) -> (Vec<Vertex>, Vec<Vertex>) {
    let m = path.len();
    let first_link = shared_vertex(&tree.edges[path[0]], &tree.edges[path[1]]);
    let last_link = shared_vertex(&tree.edges[path[m - 1]], &tree.edges[path[m - 2]]);
    let end1 = tree.edges[path[0]].iter().copied().filter(|&v| v != first_link).collect();
    let end2 = tree.edges[path[m - 1]].iter().copied().filter(|&v| v != last_link).collect();
    (end1, end2)
}

/// Builds the witness for a loose path of at least two edges.
pub(crate) fn witness_in(tree: &Hypertree, active: &[bool], path: Vec<usize>) -> Result<PathWitness> {
    let kind = classify_in(tree, active, &path)?;
    let (end1, end2) = end_pairs(tree, &path);
    let inside: HashSet<usize> = path.iter().copied().collect();
    let touched = |v: &Vertex| {
        tree.incident[*v as usize]
            .iter()
            .any(|&e| active[e] && !inside.contains(&e))
    };
    let pick = |pair: &[Vertex]| pair.iter().copied().find(|v| touched(v)).unwrap_or(pair[0]);
    Ok(PathWitness {
        ends: [pick(&end1), pick(&end2)],
        edges: path,
        kind,
    })
}

pub(crate) fn shared_vertex(a: &[Vertex], b: &[Vertex]) -> Vertex {
    *a.iter().find(|v| b.binary_search(v).is_ok()).expect("edges intersect")
}
