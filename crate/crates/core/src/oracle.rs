//! Exhaustive reference searches used to cross-check the constructive code.
//!
//! Nothing here shares logic with the pipeline: the tree is re-rooted and
//! traversed locally, and the rainbow search walks the plain product of edge
//! sets.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::hypergraph::{Edge, KGraph, Vertex};
use crate::hypertree::Hypertree;
use crate::matching::GraphSystem;

pub const DEFAULT_ORACLE_BUDGET: u64 = 100_000_000;

/// Largest tree `count_embeddings` accepts without `allow_large`.
pub const COUNT_LIMIT: usize = 10;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub found: bool,
    pub embedding: Option<Embedding>,
    pub nodes_explored: u64,
    /// The whole search space was covered without hitting the budget.
    pub exhausted: bool,
}

impl OracleResult {
    /// `Some(answer)` when the search settled the question, `None` when it ran out of budget.
    pub fn decided(&self) -> Option<bool> {
        if self.found {
            Some(true)
        } else if self.exhausted {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RainbowOracle {
    pub found: bool,
    pub matching: Option<Vec<Edge>>,
    pub nodes_explored: u64,
    /// The whole product was covered without hitting the budget.
    pub exhausted: bool,
}

/// Search for an embedding of `tree` into `host` sending each constrained
/// tree vertex to its target. Isomorphic sibling subtrees are explored once.
pub fn oracle_embed(
    host: &KGraph,
    tree: &Hypertree,
    constraints: &[(Vertex, Vertex)],
    budget: Option<u64>,
) -> Result<OracleResult> {
    let plan = Plan::new(host, tree, constraints, true)?;
    let mut search = Search::new(host, &plan, budget.unwrap_or(DEFAULT_ORACLE_BUDGET), Mode::Find);
    if tree.n() > host.n() {
        return Ok(OracleResult {
            found: false,
            embedding: None,
            nodes_explored: 0,
            exhausted: true,
        });
    }
    search.run();
    let embedding = search.found.take().map(|map| {
        Embedding::from_map(map.into_iter().map(Some).collect()).expect("search keeps the map injective")
    });
    Ok(OracleResult {
        found: embedding.is_some(),
        exhausted: !search.budget_hit && embedding.is_none(),
        embedding,
        nodes_explored: search.nodes,
    })
}

/// Number of embeddings of `tree` into `host` respecting `constraints`,
/// counting every injective map separately.
pub fn count_embeddings(
    host: &KGraph,
    tree: &Hypertree,
    constraints: &[(Vertex, Vertex)],
    allow_large: bool,
) -> Result<u64> {
    if tree.n() > COUNT_LIMIT && !allow_large {
        return Err(Error::InvalidArgument(format!(
            "tree has {} vertices; counting is limited to {COUNT_LIMIT} unless allow_large is set",
            tree.n()
        )));
    }
    let plan = Plan::new(host, tree, constraints, false)?;
    if tree.n() > host.n() {
        return Ok(0);
    }
    let mut search = Search::new(host, &plan, u64::MAX, Mode::Count);
    search.run();
    Ok(search.count)
}

/// Exhaustive rainbow perfect matching search over the product of the edge
/// sets, keeping only pairwise disjoint partial choices.
pub fn oracle_rainbow(sys: &GraphSystem, budget: Option<u64>) -> RainbowOracle {
    let budget = budget.unwrap_or(DEFAULT_ORACLE_BUDGET);
    let graphs: Vec<&KGraph> = sys.graphs().collect();
    let mut out = RainbowOracle {
        found: false,
        matching: None,
        nodes_explored: 0,
        exhausted: true,
    };
    if graphs.len() * sys.k() > sys.n() {
        return out;
    }
    let mut used = vec![false; sys.n()];
    let mut chosen: Vec<Edge> = Vec::with_capacity(graphs.len());

    fn go(
        j: usize,
        graphs: &[&KGraph],
        used: &mut [bool],
        chosen: &mut Vec<Edge>,
        out: &mut RainbowOracle,
        budget: u64,
    ) -> bool {
        if j == graphs.len() {
            return true;
        }
        for e in graphs[j].edges() {
            if out.nodes_explored >= budget {
                out.exhausted = false;
                return false;
            }
            out.nodes_explored += 1;
            if e.iter().any(|&v| used[v as usize]) {
                continue;
            }
            e.iter().for_each(|&v| used[v as usize] = true);
            chosen.push(e.clone());
            if go(j + 1, graphs, used, chosen, out, budget) {
                return true;
            }
            chosen.pop();
            e.iter().for_each(|&v| used[v as usize] = false);
            if !out.exhausted {
                return false;
            }
        }
        false
    }

    if go(0, &graphs, &mut used, &mut chosen, &mut out, budget) {
        out.found = true;
        out.exhausted = false;
        out.matching = Some(chosen);
    }
    out
}

/// The tree rooted at a start vertex, with its edges in BFS order.
struct Plan {
    k: usize,
    start: Vertex,
    /// Per position: the already placed vertex and the new ones, grouped by form.
    anchor: Vec<Vertex>,
    children: Vec<Vec<Vertex>>,
    child_form: Vec<Vec<usize>>,
    /// Earlier sibling edge with the same form, when symmetry is used.
    twin: Vec<Option<usize>>,
    target: Vec<Option<Vertex>>,
    tree_degree: Vec<usize>,
    reserved: Vec<bool>,
    symmetry: bool,
    tree_n: usize,
}

impl Plan {
    fn new(host: &KGraph, tree: &Hypertree, constraints: &[(Vertex, Vertex)], symmetry: bool) -> Result<Plan> {
        if host.k() != tree.k() {
            return Err(Error::InvalidArgument(format!(
                "tree is {}-uniform but the host is {}-uniform",
                tree.k(),
                host.k()
            )));
        }
        let n = tree.n();
        let mut target = vec![None; n];
        let mut reserved = vec![false; host.n()];
        for &(x, y) in constraints {
            if x as usize >= n {
                return Err(Error::UnknownVertex(x));
            }
            if y as usize >= host.n() {
                return Err(Error::UnknownVertex(y));
            }
            if target[x as usize].is_some_and(|t| t != y) || (reserved[y as usize] && target[x as usize] != Some(y)) {
                return Err(Error::InvalidArgument(format!("conflicting constraint ({x}, {y})")));
            }
            target[x as usize] = Some(y);
            reserved[y as usize] = true;
        }
        let start = constraints.first().map(|c| c.0).unwrap_or(tree.root());

        // BFS over edges from the start vertex.
        let mut seen_e = vec![false; tree.num_edges()];
        let mut order = Vec::with_capacity(tree.num_edges());
        let mut anchor = Vec::with_capacity(tree.num_edges());
        let mut children: Vec<Vec<Vertex>> = Vec::with_capacity(tree.num_edges());
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &e in tree.incident(x) {
                if std::mem::replace(&mut seen_e[e], true) {
                    continue;
                }
                let new: Vec<Vertex> = tree.edge(e).iter().copied().filter(|&y| y != x).collect();
                queue.extend(new.iter().copied());
                order.push(e);
                anchor.push(x);
                children.push(new);
            }
        }

        // Canonical forms, leaves first. Constrained vertices get unique forms.
        let mut interner: HashMap<(Option<Vertex>, Vec<usize>), usize> = HashMap::new();
        let mut intern = |key: (Option<Vertex>, Vec<usize>)| {
            let next = interner.len();
            *interner.entry(key).or_insert(next)
        };
        let mut vertex_form = vec![usize::MAX; n];
        let mut edge_form = vec![usize::MAX; order.len()];
        let mut child_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (pos, &x) in anchor.iter().enumerate() {
            child_edges[x as usize].push(pos);
        }
        for pos in (0..order.len()).rev() {
            for &c in &children[pos] {
                let mut forms: Vec<usize> = child_edges[c as usize].iter().map(|&p| edge_form[p]).collect();
                forms.sort_unstable();
                vertex_form[c as usize] = intern((target[c as usize], forms));
            }
            let mut forms: Vec<usize> = children[pos].iter().map(|&c| vertex_form[c as usize]).collect();
            forms.sort_unstable();
            // Offset edge forms so they never collide with vertex forms.
            edge_form[pos] = intern((Some(Vertex::MAX), forms));
        }
        let mut child_form = Vec::with_capacity(order.len());
        for ch in children.iter_mut() {
            ch.sort_by_key(|&c| (vertex_form[c as usize], c));
            child_form.push(ch.iter().map(|&c| vertex_form[c as usize]).collect());
        }
        let mut twin = vec![None; order.len()];
        if symmetry {
            let mut last: HashMap<(Vertex, usize), usize> = HashMap::new();
            for pos in 0..order.len() {
                twin[pos] = last.insert((anchor[pos], edge_form[pos]), pos);
            }
        }
        let tree_degree = (0..n as Vertex).map(|x| tree.degree(x)).collect();
        Ok(Plan {
            k: tree.k(),
            start,
            anchor,
            children,
            child_form,
            twin,
            target,
            tree_degree,
            reserved,
            symmetry,
            tree_n: n,
        })
    }
}

#[derive(PartialEq, Eq)]
enum Mode {
    Find,
    Count,
}

struct Search<'a> {
    host: &'a KGraph,
    plan: &'a Plan,
    host_degree: Vec<usize>,
    map: Vec<Option<Vertex>>,
    used: Vec<bool>,
    keys: Vec<Vec<Vertex>>,
    budget: u64,
    nodes: u64,
    budget_hit: bool,
    mode: Mode,
    count: u64,
    found: Option<Vec<Vertex>>,
}

impl<'a> Search<'a> {
    fn new(host: &'a KGraph, plan: &'a Plan, budget: u64, mode: Mode) -> Self {
        Search {
            host,
            plan,
            host_degree: (0..host.n() as Vertex).map(|v| host.vertex_degree(v)).collect(),
            map: vec![None; plan.tree_n],
            used: vec![false; host.n()],
            keys: vec![Vec::new(); plan.anchor.len()],
            budget,
            nodes: 0,
            budget_hit: false,
            mode,
            count: 0,
            found: None,
        }
    }

    fn done(&self) -> bool {
        self.budget_hit || self.found.is_some()
    }

    fn admissible(&self, x: Vertex, y: Vertex) -> bool {
        if self.used[y as usize] {
            return false;
        }
        match self.plan.target[x as usize] {
            Some(t) => t == y,
            None => !self.plan.reserved[y as usize] && self.host_degree[y as usize] >= self.plan.tree_degree[x as usize],
        }
    }

    fn place(&mut self, x: Vertex, y: Vertex) {
        self.map[x as usize] = Some(y);
        self.used[y as usize] = true;
    }

    fn lift(&mut self, x: Vertex) {
        if let Some(y) = self.map[x as usize].take() {
            self.used[y as usize] = false;
        }
    }

    fn run(&mut self) {
        let s = self.plan.start;
        let candidates: Vec<Vertex> = match self.plan.target[s as usize] {
            Some(t) => vec![t],
            None => (0..self.host.n() as Vertex).collect(),
        };
        for y in candidates {
            if self.done() {
                return;
            }
            if !self.admissible(s, y) {
                continue;
            }
            self.place(s, y);
            self.edge(0);
            self.lift(s);
        }
    }

    fn edge(&mut self, pos: usize) {
        if pos == self.plan.anchor.len() {
            match self.mode {
                Mode::Count => self.count += 1,
                Mode::Find => self.found = Some(self.map.iter().map(|y| y.expect("all placed")).collect()),
            }
            return;
        }
        let y = self.map[self.plan.anchor[pos] as usize].expect("anchor placed first");
        let host = self.host;
        for h in host.incident(y) {
            if self.done() {
                return;
            }
            if self.nodes >= self.budget {
                self.budget_hit = true;
                return;
            }
            self.nodes += 1;
            let others: Vec<Vertex> = h.iter().copied().filter(|&w| w != y).collect();
            if others.iter().any(|&w| self.used[w as usize]) {
                continue;
            }
            let mut taken = vec![false; others.len()];
            self.assign(pos, 0, &others, &mut taken);
        }
    }

    fn assign(&mut self, pos: usize, j: usize, others: &[Vertex], taken: &mut [bool]) {
        let plan = self.plan;
        if j == plan.k - 1 {
            let mut key: Vec<Vertex> = plan.children[pos].iter().map(|&c| self.map[c as usize].unwrap()).collect();
            key.sort_unstable();
            if let Some(t) = plan.twin[pos] {
                if key <= self.keys[t] {
                    return;
                }
            }
            self.keys[pos] = key;
            self.edge(pos + 1);
            return;
        }
        let c = plan.children[pos][j];
        let floor = (plan.symmetry && j > 0 && plan.child_form[pos][j] == plan.child_form[pos][j - 1])
            .then(|| self.map[plan.children[pos][j - 1] as usize].unwrap());
        for i in 0..others.len() {
            if self.done() {
                return;
            }
            let w = others[i];
            if taken[i] || floor.is_some_and(|f| w <= f) || !self.admissible(c, w) {
                continue;
            }
            taken[i] = true;
            self.place(c, w);
            self.assign(pos, j + 1, others, taken);
            self.lift(c);
            taken[i] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{verify_embedding, Requirements};
    use crate::instances::pm_barrier;

    #[test]
    fn counts_single_edge_and_clique() {
        let t = Hypertree::loose_path(3, 1);
        let one = KGraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(count_embeddings(&one, &t, &[], false).unwrap(), 6);
        assert_eq!(count_embeddings(&KGraph::complete(3, 4), &t, &[], false).unwrap(), 24);
        assert_eq!(count_embeddings(&KGraph::complete(3, 4), &t, &[(0, 2)], false).unwrap(), 6);
    }

    #[test]
    fn count_guard() {
        let t = Hypertree::loose_path(3, 5);
        assert!(count_embeddings(&KGraph::complete(3, 11), &t, &[], false).is_err());
    }

    /// Brute force over all injective maps for small cases.
    fn brute_count(host: &KGraph, tree: &Hypertree, constraints: &[(Vertex, Vertex)]) -> u64 {
        let hosts: Vec<Vertex> = (0..host.n() as Vertex).collect();
        let mut total = 0;
        for subset in crate::util::subsets(&hosts, tree.n()) {
            for perm in crate::util::permutations(&subset) {
                let ok_c = constraints.iter().all(|&(x, y)| perm[x as usize] == y);
                let ok_e = tree.edges().iter().all(|e| {
                    let img: Vec<Vertex> = e.iter().map(|&x| perm[x as usize]).collect();
                    host.contains(&img)
                });
                total += u64::from(ok_c && ok_e);
            }
        }
        total
    }

    #[test]
    fn count_matches_brute_force() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let g = crate::instances::random_kgraph(
                &crate::instances::GenSpec::graph(crate::instances::GenKind::Density, 7, 3, 0.6, rand::Rng::gen(&mut rng)),
            )
            .unwrap();
            for t in [Hypertree::loose_path(3, 2), Hypertree::star(3, 2), Hypertree::loose_path(3, 3)] {
                assert_eq!(count_embeddings(&g, &t, &[], false).unwrap(), brute_count(&g, &t, &[]));
                assert_eq!(count_embeddings(&g, &t, &[(1, 3)], false).unwrap(), brute_count(&g, &t, &[(1, 3)]));
            }
        }
    }

    #[test]
    fn finds_and_refutes() {
        let t = Hypertree::loose_path(3, 3);
        let g = KGraph::complete(3, 7);
        let r = oracle_embed(&g, &t, &[(0, 6)], None).unwrap();
        let e = r.embedding.unwrap();
        verify_embedding(&t, &g, &e, &Requirements::complete().with_roots(&[(0, 6)])).unwrap();
        let empty = KGraph::empty(3, 7);
        let r = oracle_embed(&empty, &t, &[], None).unwrap();
        assert_eq!(r.decided(), Some(false));
    }

    #[test]
    fn star_into_barrier_link_fails() {
        // Six 3-edges at the apex need a perfect matching of its link graph.
        let t = Hypertree::star(3, 6);
        let link = |g: &KGraph| {
            let edges = g.edges().iter().map(|e| vec![e[0], e[1], 12]);
            KGraph::new(3, 13, edges).unwrap()
        };
        let barrier = link(&pm_barrier(2, 12).unwrap());
        let r = oracle_embed(&barrier, &t, &[(0, 12)], None).unwrap();
        assert_eq!(r.decided(), Some(false));
        let full = link(&KGraph::complete(2, 12));
        let r = oracle_embed(&full, &t, &[(0, 12)], None).unwrap();
        verify_embedding(&t, &full, &r.embedding.unwrap(), &Requirements::complete()).unwrap();
    }

    #[test]
    fn symmetry_reduction_agrees_with_counting() {
        use crate::instances::{random_hypertree, random_kgraph, GenKind, GenSpec};
        for seed in 0..40 {
            let g = random_kgraph(&GenSpec::graph(GenKind::Density, 8, 3, 0.25, seed)).unwrap();
            let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 7, 3, seed)).unwrap();
            let c = [(0, (seed % 8) as Vertex)];
            let found = oracle_embed(&g, &t, &c, None).unwrap();
            let count = count_embeddings(&g, &t, &c, false).unwrap();
            assert_eq!(found.decided(), Some(count > 0), "seed {seed}");
            if let Some(e) = found.embedding {
                verify_embedding(&t, &g, &e, &Requirements::complete().with_roots(&c)).unwrap();
            }
        }
    }

    #[test]
    fn budget_leaves_question_open() {
        let t = Hypertree::star(3, 6);
        let g = crate::instances::tightness_construction(3, 2, 13, &pm_barrier(2, 12).unwrap()).unwrap().0;
        let r = oracle_embed(&g, &t, &[(0, 12)], Some(10)).unwrap();
        assert!(!r.found && !r.exhausted);
        assert_eq!(r.decided(), None);
    }

    #[test]
    fn rainbow_oracle() {
        let sys = GraphSystem::new(3, 6, vec![KGraph::complete(3, 6), KGraph::complete(3, 6)]).unwrap();
        let r = oracle_rainbow(&sys, None);
        assert!(r.found);
        let g = KGraph::new(3, 6, vec![vec![0, 1, 2]]).unwrap();
        let sys = GraphSystem::new(3, 6, vec![g.clone(), g]).unwrap();
        assert!(!oracle_rainbow(&sys, None).found);
        let sys = GraphSystem::new(3, 6, vec![KGraph::empty(3, 6), KGraph::complete(3, 6)]).unwrap();
        let r = oracle_rainbow(&sys, None);
        assert!(!r.found && r.exhausted);
    }
}
