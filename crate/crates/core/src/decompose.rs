//! Structural decompositions of hypertrees: the level chain used by the
//! almost-spanning embedder, semi-bare path extraction, the leaf/path
//! dichotomy and rooted subtree splitting.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::audit::Audit;
use crate::error::{Error, Result};
use crate::hypergraph::Vertex;
use crate::hypertree::{shared_vertex, witness_in, Hypertree, PathKind, PathWitness, SubForest};
use crate::instances::{check_schema, Persist, SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelKind {
    Base,
    Stars,
    Matching,
    Paths3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarInfo {
    pub centre: Vertex,
    pub edges: Vec<usize>,
}

/// A bare path of three edges between `u` and `v`, edges in path order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarePath3 {
    pub u: Vertex,
    pub v: Vertex,
    pub edges: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub kind: LevelKind,
    /// Edge indices added at this level (for the base level, all of E(T_0)).
    pub edges: Vec<usize>,
    /// V(T_0); only set on the base level.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<Vertex>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stars: Vec<StarInfo>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<BarePath3>,
}

impl Level {
    fn plain(kind: LevelKind, edges: Vec<usize>) -> Self {
        Level {
            kind,
            edges,
            vertices: Vec::new(),
            stars: Vec::new(),
            paths: Vec::new(),
        }
    }
}

/// The nested chain T_0 ⊆ T_1 ⊆ … ⊆ T_L = T as per-level edge lists into
/// the parent tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub k: usize,
    pub d: usize,
    #[serde(with = "crate::util_serde::rational64")]
    pub mu: Rational64,
    /// The size parameter the thresholds were computed against.
    pub n: usize,
    /// Length parameter of the extracted semi-bare paths.
    pub m: usize,
    pub r1: Vertex,
    pub r2: Vertex,
    pub s: usize,
    pub levels: Vec<Level>,
}

impl TreeDecomposition {
    /// L, the index of the last level.
    pub fn num_levels(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn kinds(&self) -> Vec<LevelKind> {
        self.levels.iter().map(|l| l.kind).collect()
    }

    /// E(T_i), sorted.
    pub fn edges_upto(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.levels[..=i].iter().flat_map(|l| l.edges.iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// V(T_i), sorted.
    pub fn vertices_upto(&self, tree: &Hypertree, i: usize) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self.levels[0].vertices.clone();
        for l in &self.levels[1..=i] {
            for &e in &l.edges {
                out.extend(tree.edge(e).iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether L ≤ 10^5·k·D·μ^{-2}.
    pub fn within_level_bound(&self) -> bool {
        let (num, den) = (*self.mu.numer() as i128, *self.mu.denom() as i128);
        (self.num_levels() as i128) * num * num <= 100_000 * (self.k * self.d) as i128 * den * den
    }
}

impl Persist for TreeDecomposition {
    type File = TreeDecomposition;

    fn to_file(&self) -> TreeDecomposition {
        TreeDecomposition {
            schema: Some(SCHEMA.to_string()),
            ..self.clone()
        }
    }

    fn from_file(file: TreeDecomposition) -> Result<Self> {
        check_schema(file.schema.as_deref())?;
        Ok(file)
    }
}

/// Optional overrides for [`tree_split_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SplitOptions {
    /// Size parameter; defaults to |V(T)|.
    pub n: Option<usize>,
    /// Fix the path length parameter instead of searching for one.
    pub m: Option<usize>,
}

pub fn tree_split(tree: &Hypertree, r1: Vertex, r2: Vertex, d: usize, mu: Rational64) -> Result<TreeDecomposition> {
    tree_split_with(tree, r1, r2, d, mu, SplitOptions::default())
}

/// Splits `tree` into the level chain. Candidate path lengths are tried from
/// ⌈1000/μ⌉ downwards by halving; the first whose base passes A1 is kept,
/// otherwise the one with the smallest base.
pub fn tree_split_with(
    tree: &Hypertree,
    r1: Vertex,
    r2: Vertex,
    d: usize,
    mu: Rational64,
    opts: SplitOptions,
) -> Result<TreeDecomposition> {
    if tree.n() < 2 {
        return Err(Error::InvalidArgument("tree needs at least two vertices".into()));
    }
    if r1 == r2 {
        return Err(Error::InvalidArgument("roots must be distinct".into()));
    }
    for r in [r1, r2] {
        if r as usize >= tree.n() {
            return Err(Error::UnknownVertex(r));
        }
    }
    if d < 2 {
        return Err(Error::InvalidArgument("star size D must be at least 2".into()));
    }
    if mu <= Rational64::from_integer(0) || mu >= Rational64::from_integer(1) {
        return Err(Error::InvalidArgument("mu must lie in (0, 1)".into()));
    }
    let n = opts.n.unwrap_or(tree.n());
    if n < tree.num_edges() {
        return Err(Error::InvalidArgument(format!(
            "size parameter {n} is below the edge count {}",
            tree.num_edges()
        )));
    }
    let candidates: Vec<usize> = match opts.m {
        Some(m) if m >= 4 => vec![m],
        Some(m) => return Err(Error::InvalidArgument(format!("path parameter {m} is below 4"))),
        None => {
            let first = (1000 * *mu.denom() + *mu.numer() - 1) / *mu.numer();
            std::iter::successors(Some(first as usize), |&m| Some(m / 2))
                .take_while(|&m| m >= 4)
                .collect()
        }
    };
    let roots = [r1, r2];
    let mut stripped: HashMap<usize, Stripped> = HashMap::new();
    let mut best: Option<TreeDecomposition> = None;
    for m in candidates {
        let threshold = leaf_threshold(mu, n, m, d);
        let phase = stripped
            .entry(threshold)
            .or_insert_with(|| strip_leaf_matchings(tree, roots, threshold));
        let dec = finish_split(tree, roots, d, mu, n, m, phase);
        let e0 = dec.levels[0].edges.len() as i64;
        let v0 = dec.levels[0].vertices.len() as i64;
        let (num, den) = (*mu.numer(), *mu.denom());
        if e0 * den <= num * n as i64 && v0 * den <= (tree.k() as i64) * num * n as i64 {
            return Ok(dec);
        }
        if best.as_ref().is_none_or(|b| dec.levels[0].edges.len() < b.levels[0].edges.len()) {
            best = Some(dec);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// max(2, ⌊μn / (50m(D+2))⌋).
fn leaf_threshold(mu: Rational64, n: usize, m: usize, d: usize) -> usize {
    let num = *mu.numer() as i128 * n as i128;
    let den = *mu.denom() as i128 * 50 * m as i128 * (d + 2) as i128;
    ((num / den) as usize).max(2)
}

#[derive(Debug, Clone)]
struct Stripped {
    active: Vec<bool>,
    present: Vec<bool>,
    rounds: Vec<Vec<usize>>,
}

fn protected(f: &SubForest, roots: [Vertex; 2]) -> Vec<usize> {
    roots.iter().filter_map(|&r| f.is_leaf_vertex(r)).collect()
}

/// Removes a leaf edge, keeping `anchor`; clears the other vertices.
fn remove_keeping(f: &mut SubForest, present: &mut [bool], e: usize, anchors: &[Vertex]) {
    f.remove(e);
    for &v in f.tree.edge(e) {
        if !anchors.contains(&v) {
            debug_assert_eq!(f.deg[v as usize], 0);
            present[v as usize] = false;
        }
    }
}

fn strip_leaf_matchings(tree: &Hypertree, roots: [Vertex; 2], threshold: usize) -> Stripped {
    let mut f = SubForest::full(tree);
    let mut present = vec![true; tree.n()];
    let mut rounds = Vec::new();
    loop {
        let prot = protected(&f, roots);
        let matching = f.max_leaf_matching(&prot);
        if matching.len() < threshold {
            break;
        }
        let parents: Vec<Vertex> = matching.iter().map(|&e| f.leaf_parent(e).expect("leaf edge")).collect();
        for (&e, &p) in matching.iter().zip(&parents) {
            remove_keeping(&mut f, &mut present, e, &[p]);
        }
        rounds.push(matching);
    }
    Stripped {
        active: f.active,
        present,
        rounds,
    }
}

/// Removes every unprotected leaf edge of each parent carrying at least
/// D+2 leaf edges.
fn strip_heavy_parents(f: &mut SubForest, present: &mut [bool], roots: [Vertex; 2], d: usize) -> Vec<StarInfo> {
    let prot = protected(f, roots);
    let mut by_parent: BTreeMap<Vertex, Vec<usize>> = BTreeMap::new();
    for le in f.leaf_edges() {
        by_parent.entry(le.parent).or_default().push(le.edge);
    }
    let mut stars = Vec::new();
    for (centre, edges) in by_parent {
        if edges.len() < d + 2 {
            continue;
        }
        let edges: Vec<usize> = edges.into_iter().filter(|e| !prot.contains(e)).collect();
        for &e in &edges {
            remove_keeping(f, present, e, &[centre]);
        }
        stars.push(StarInfo { centre, edges });
    }
    stars
}

fn finish_split(
    tree: &Hypertree,
    roots: [Vertex; 2],
    d: usize,
    mu: Rational64,
    n: usize,
    m: usize,
    phase: &Stripped,
) -> TreeDecomposition {
    let mut f = SubForest::from_mask(tree, phase.active.clone());
    let mut present = phase.present.clone();

    let mut s_forest = f.clone();
    let mut scratch = present.clone();
    strip_heavy_parents(&mut s_forest, &mut scratch, roots, d);
    let a = (m - 2) / 2;
    let survivors: Vec<Vec<usize>> = extract_in(&s_forest, m)
        .into_iter()
        .filter(|q| {
            let kind = crate::hypertree::classify_in(tree, &f.active, q);
            matches!(kind, Ok(PathKind::SemiBare) | Ok(PathKind::Bare))
                && !roots.iter().any(|&r| internal_vertices(tree, q).contains(&r))
        })
        .collect();

    let mut paths = Vec::new();
    for q in &survivors {
        let u = shared_vertex(tree.edge(q[a - 1]), tree.edge(q[a]));
        let v = shared_vertex(tree.edge(q[a + 2]), tree.edge(q[a + 3]));
        for &e in &q[a..a + 3] {
            f.remove(e);
        }
        for &e in &q[a..a + 3] {
            for &x in tree.edge(e) {
                if x != u && x != v {
                    debug_assert_eq!(f.deg[x as usize], 0);
                    present[x as usize] = false;
                }
            }
        }
        paths.push(BarePath3 {
            u,
            v,
            edges: [q[a], q[a + 1], q[a + 2]],
        });
    }

    // Peel both sides of every survivor inwards-out, keeping the end edges.
    let mut peel_rounds: Vec<Vec<usize>> = Vec::new();
    let sides: Vec<(Vec<usize>, Vec<usize>)> = survivors
        .iter()
        .map(|q| {
            let left: Vec<usize> = (1..a).rev().collect();
            let right: Vec<usize> = (a + 3..q.len() - 1).collect();
            (left, right)
        })
        .collect();
    let depth = sides.iter().map(|(l, r)| l.len().max(r.len())).max().unwrap_or(0);
    for j in 0..depth {
        let mut round = Vec::new();
        for (q, (left, right)) in survivors.iter().zip(&sides) {
            if let Some(&i) = left.get(j) {
                let parent = shared_vertex(tree.edge(q[i]), tree.edge(q[i - 1]));
                remove_keeping(&mut f, &mut present, q[i], &[parent]);
                round.push(q[i]);
            }
            if let Some(&i) = right.get(j) {
                let parent = shared_vertex(tree.edge(q[i]), tree.edge(q[i + 1]));
                remove_keeping(&mut f, &mut present, q[i], &[parent]);
                round.push(q[i]);
            }
        }
        round.sort_unstable();
        peel_rounds.push(round);
    }

    let stars = strip_heavy_parents(&mut f, &mut present, roots, d);

    let mut levels = Vec::new();
    levels.push(Level {
        vertices: (0..tree.n() as Vertex).filter(|&v| present[v as usize]).collect(),
        ..Level::plain(LevelKind::Base, f.active_edges())
    });
    let mut star_edges: Vec<usize> = stars.iter().flat_map(|s| s.edges.iter().copied()).collect();
    star_edges.sort_unstable();
    levels.push(Level {
        stars,
        ..Level::plain(LevelKind::Stars, star_edges)
    });
    for round in peel_rounds.into_iter().rev() {
        levels.push(Level::plain(LevelKind::Matching, round));
    }
    let s = levels.len() - 1;
    let mut path_edges: Vec<usize> = paths.iter().flat_map(|p| p.edges).collect();
    path_edges.sort_unstable();
    levels.push(Level {
        paths,
        ..Level::plain(LevelKind::Paths3, path_edges)
    });
    for round in phase.rounds.iter().rev() {
        let mut round = round.clone();
        round.sort_unstable();
        levels.push(Level::plain(LevelKind::Matching, round));
    }
    TreeDecomposition {
        schema: None,
        k: tree.k(),
        d,
        mu,
        n,
        m,
        r1: roots[0],
        r2: roots[1],
        s,
        levels,
    }
}

fn internal_vertices(tree: &Hypertree, path: &[usize]) -> HashSet<Vertex> {
    let (end1, end2) = crate::hypertree::end_pairs(tree, path);
    path.iter()
        .flat_map(|&e| tree.edge(e).iter().copied())
        .filter(|v| !end1.contains(v) && !end2.contains(v))
        .collect()
}

/// Independent re-check of a decomposition against its tree: level shape,
/// exact cover, A1–A4 and the bound on L.
pub fn audit_decomposition(tree: &Hypertree, dec: &TreeDecomposition) -> Audit {
    let mut audit = Audit::default();
    let k = tree.k();
    let big_l = dec.levels.len().saturating_sub(1);

    let kinds = dec.kinds();
    let shape_ok = big_l >= 2
        && dec.s >= 1
        && dec.s < big_l
        && kinds.iter().enumerate().all(|(i, &kind)| {
            kind == match i {
                0 => LevelKind::Base,
                1 => LevelKind::Stars,
                _ if i == dec.s + 1 => LevelKind::Paths3,
                _ => LevelKind::Matching,
            }
        });
    audit.record("shape", shape_ok, format!("L = {big_l}, s = {}", dec.s));
    if !shape_ok {
        return audit;
    }

    let mut seen = vec![0usize; tree.num_edges()];
    let mut out_of_range = false;
    for l in &dec.levels {
        for &e in &l.edges {
            match seen.get_mut(e) {
                Some(c) => *c += 1,
                None => out_of_range = true,
            }
        }
    }
    let base_vertices: HashSet<Vertex> = dec.levels[0].vertices.iter().copied().collect();
    let base_closed = dec.levels[0]
        .edges
        .iter()
        .all(|&e| e < tree.num_edges() && tree.edge(e).iter().all(|v| base_vertices.contains(v)));
    let cover_ok = !out_of_range && seen.iter().all(|&c| c == 1) && base_closed;
    audit.record(
        "cover",
        cover_ok,
        format!("{} edges, each listed once: {}", tree.num_edges(), cover_ok),
    );
    if !cover_ok {
        return audit;
    }

    let (num, den) = (*dec.mu.numer() as i128, *dec.mu.denom() as i128);
    let n = dec.n as i128;
    let e0 = dec.levels[0].edges.len() as i128;
    let v0 = base_vertices.len() as i128;
    let roots_in = base_vertices.contains(&dec.r1) && base_vertices.contains(&dec.r2);
    audit.record(
        "A1",
        e0 * den <= num * n && v0 * den <= k as i128 * num * n && roots_in,
        format!("e(T0) = {e0}, |V(T0)| = {v0}, mu*n = {}/{}, roots in T0: {roots_in}", num * n, den),
    );

    // Degrees and vertex sets tracked level by level.
    let mut present: HashSet<Vertex> = base_vertices;
    let mut deg = vec![0usize; tree.n()];
    for &e in &dec.levels[0].edges {
        for &v in tree.edge(e) {
            deg[v as usize] += 1;
        }
    }
    let mut a2 = (true, String::from("no stars"));
    let mut a3 = (true, String::from("ok"));
    let mut a4 = (true, String::from("no paths"));
    for (i, level) in dec.levels.iter().enumerate().skip(1) {
        for &e in &level.edges {
            for &v in tree.edge(e) {
                deg[v as usize] += 1;
            }
        }
        let new_of = |e: usize| -> Vec<Vertex> {
            tree.edge(e).iter().copied().filter(|v| !present.contains(v)).collect()
        };
        let mut new_seen: HashSet<Vertex> = HashSet::new();
        let mut disjoint_new = true;
        for &e in &level.edges {
            for v in new_of(e) {
                disjoint_new &= new_seen.insert(v);
            }
        }
        match level.kind {
            LevelKind::Stars => {
                let mut centres: BTreeMap<Vertex, usize> = BTreeMap::new();
                let mut one_old = true;
                for &e in &level.edges {
                    let old: Vec<Vertex> = tree.edge(e).iter().copied().filter(|v| present.contains(v)).collect();
                    if old.len() == 1 {
                        *centres.entry(old[0]).or_default() += 1;
                    } else {
                        one_old = false;
                    }
                }
                let small = centres.values().any(|&c| c < dec.d);
                let ok = one_old && disjoint_new && !small;
                a2 = (
                    ok,
                    format!("{} stars, sizes ≥ D: {}, disjoint: {disjoint_new}", centres.len(), !small),
                );
            }
            LevelKind::Matching => {
                let mut used: HashSet<Vertex> = HashSet::new();
                let mut ok = true;
                for &e in &level.edges {
                    let new = new_of(e);
                    ok &= new.len() == k - 1;
                    ok &= new.iter().all(|&v| deg[v as usize] == 1);
                    for &v in tree.edge(e) {
                        ok &= used.insert(v);
                    }
                }
                if !ok && a3.0 {
                    a3 = (false, format!("level {i} is not a leaf matching with its leaf set as new vertices"));
                }
            }
            LevelKind::Paths3 => {
                let (ok, detail) = check_paths3(tree, &level.edges, &present, &deg, num, den, n);
                a4 = (ok, detail);
            }
            LevelKind::Base => {}
        }
        for &e in &level.edges {
            present.extend(tree.edge(e).iter().copied());
        }
    }
    audit.record("A2", a2.0, a2.1);
    audit.record("A3", a3.0, a3.1);
    audit.record("A4", a4.0, a4.1);
    let all = present.len() == tree.n();
    audit.record("nesting", all, format!("V(T_L) = V(T): {all}"));
    audit.record(
        "L-bound",
        dec.within_level_bound(),
        format!("L = {big_l} against 10^5*k*D/mu^2"),
    );
    audit
}

fn check_paths3(
    tree: &Hypertree,
    edges: &[usize],
    present: &HashSet<Vertex>,
    deg: &[usize],
    num: i128,
    den: i128,
    n: i128,
) -> (bool, String) {
    // group the added edges into components through shared vertices
    let mut by_vertex: HashMap<Vertex, Vec<usize>> = HashMap::new();
    for &e in edges {
        for &v in tree.edge(e) {
            by_vertex.entry(v).or_default().push(e);
        }
    }
    let mut done: HashSet<usize> = HashSet::new();
    let mut count = 0i128;
    for &start in edges {
        if done.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        done.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(e) = queue.pop_front() {
            for v in tree.edge(e) {
                for &f in &by_vertex[v] {
                    if done.insert(f) {
                        comp.push(f);
                        queue.push_back(f);
                    }
                }
            }
        }
        count += 1;
        if comp.len() != 3 {
            return (false, format!("component of {} edges", comp.len()));
        }
        let old: Vec<usize> = comp
            .iter()
            .map(|&e| tree.edge(e).iter().filter(|v| present.contains(v)).count())
            .collect();
        let Some(mid) = (0..3).find(|&i| old[i] == 0) else {
            return (false, "no interior edge".into());
        };
        let ends: Vec<usize> = (0..3).filter(|&i| i != mid).map(|i| comp[i]).collect();
        let path = [ends[0], comp[mid], ends[1]];
        if crate::hypertree::classify_in(tree, &vec![true; tree.num_edges()], &path).is_err() {
            // classify_in also checks the loose path shape
            return (false, "added edges do not form a loose path".into());
        }
        if ends.iter().any(|&e| tree.edge(e).iter().filter(|v| present.contains(v)).count() != 1) {
            return (false, "end edge without exactly one old vertex".into());
        }
        let mut in_path: HashMap<Vertex, usize> = HashMap::new();
        for &e in &path {
            for &v in tree.edge(e) {
                *in_path.entry(v).or_default() += 1;
            }
        }
        for (&v, &c) in &in_path {
            if !present.contains(&v) && deg[v as usize] != c {
                return (false, format!("path vertex {v} is touched from outside"));
            }
        }
    }
    let ok = count * den <= num * n;
    (ok, format!("{count} bare paths of length 3"))
}

/// Edge-disjoint semi-bare paths of length m+1 in `tree`.
pub fn extract_semibare_paths(tree: &Hypertree, m: usize) -> Vec<PathWitness> {
    let f = SubForest::full(tree);
    extract_in(&f, m)
        .into_iter()
        .map(|p| witness_in(tree, &f.active, p).expect("extracted windows are loose paths"))
        .collect()
}

/// Chops maximal runs of path edges (two vertices of degree two, the rest of
/// degree one), extended by their neighbouring edges, into windows of m+1.
pub(crate) fn extract_in(f: &SubForest, m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return Vec::new();
    }
    let tree = f.tree;
    let k = tree.k();
    let twos = |e: usize| -> Vec<Vertex> {
        tree.edge(e).iter().copied().filter(|&v| f.deg[v as usize] == 2).collect()
    };
    let is_path_edge = |e: usize| {
        f.active[e]
            && twos(e).len() == 2
            && tree.edge(e).iter().filter(|&&v| f.deg[v as usize] == 1).count() == k - 2
    };
    let other = |v: Vertex, e: usize| -> usize {
        *tree
            .incident(v)
            .iter()
            .find(|&&x| x != e && f.active[x])
            .expect("degree-two vertex has a second edge")
    };
    let mut in_run = vec![false; tree.num_edges()];
    let mut used_end = vec![false; tree.num_edges()];
    let mut out = Vec::new();
    for start in 0..tree.num_edges() {
        if in_run[start] || !is_path_edge(start) {
            continue;
        }
        in_run[start] = true;
        let mut walks: Vec<(Vec<usize>, usize)> = Vec::new();
        for v0 in twos(start) {
            let (mut cur, mut v) = (start, v0);
            let mut walk = Vec::new();
            let ext = loop {
                let nb = other(v, cur);
                if !is_path_edge(nb) {
                    break nb;
                }
                in_run[nb] = true;
                walk.push(nb);
                v = *twos(nb).iter().find(|&&x| x != v).expect("two degree-two vertices");
                cur = nb;
            };
            walks.push((walk, ext));
        }
        let (left, left_ext) = &walks[0];
        let (right, right_ext) = &walks[1];
        let mut seq: Vec<usize> = Vec::new();
        if !used_end[*left_ext] {
            seq.push(*left_ext);
        }
        seq.extend(left.iter().rev());
        seq.push(start);
        seq.extend(right.iter());
        seq.push(*right_ext);
        for window in seq.chunks_exact(m + 1) {
            if used_end[window[m]] {
                break;
            }
            for &e in [window[0], window[m]].iter() {
                if !in_run[e] {
                    used_end[e] = true;
                }
            }
            out.push(window.to_vec());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dichotomy {
    ManyLeaves(usize),
    ManyBarePaths(Vec<PathWitness>),
}

/// Leaf edges ≥ γn, or else at least 2γn semi-bare paths of length six.
pub fn dichotomy(tree: &Hypertree, gamma: Rational64) -> Result<Dichotomy> {
    let n = tree.n() as i128;
    let (num, den) = (*gamma.numer() as i128, *gamma.denom() as i128);
    let leaves = tree.leaf_edges().len();
    if leaves as i128 * den >= num * n {
        return Ok(Dichotomy::ManyLeaves(leaves));
    }
    let paths = extract_semibare_paths(tree, 5);
    if paths.len() as i128 * den >= 2 * num * n {
        return Ok(Dichotomy::ManyBarePaths(paths));
    }
    Err(Error::DichotomyFailure {
        vertices: tree.n(),
        leaf_edges: leaves,
        paths: paths.len(),
    })
}

/// The dichotomy constant 1/(200k).
pub fn dichotomy_gamma(k: usize) -> Rational64 {
    Rational64::new(1, 200 * k as i64)
}

/// Two edge-disjoint subtrees covering `tree` and meeting in `cut`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtreeSplit {
    pub t1_edges: Vec<usize>,
    pub t2_edges: Vec<usize>,
    pub cut: Vertex,
}

impl SubtreeSplit {
    pub fn vertices(tree: &Hypertree, edges: &[usize]) -> Vec<Vertex> {
        let mut vs: Vec<Vertex> = edges.iter().flat_map(|&e| tree.edge(e).iter().copied()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// Splits off a subtree T1 with m/(2k) ≤ |V(T1)| ≤ 3m that avoids `root`
/// except possibly at the cut vertex.
pub fn subtree_split(tree: &Hypertree, root: Vertex, m: usize) -> Result<SubtreeSplit> {
    let (k, n) = (tree.k(), tree.n());
    if m < 2 * k || 3 * k * m > n {
        return Err(Error::InvalidArgument(format!(
            "m = {m} outside [2k, n/(3k)] for k = {k}, n = {n}"
        )));
    }
    subtree_split_relaxed(tree, root, m)
}

/// The same construction without the upper limit on `m`; it only needs the
/// target edge count ⌈(m−1)/(k−1)⌉ to fit in the tree. The size guarantee
/// then weakens to 1 ≤ |V(T1)| ≤ 3m.
pub fn subtree_split_relaxed(tree: &Hypertree, root: Vertex, m: usize) -> Result<SubtreeSplit> {
    let k = tree.k();
    if root as usize >= tree.n() {
        return Err(Error::UnknownVertex(root));
    }
    if m < 2 || (m - 1).div_ceil(k - 1) > tree.num_edges() {
        return Err(Error::InvalidArgument(format!("m = {m} does not fit a tree with {} edges", tree.num_edges())));
    }
    let e_root = tree.incident(root)[0];
    let line = tree.line_graph();
    let edges = tree.num_edges();
    // BFS tree of the line graph from e_root
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); edges];
    for pair in line.edges() {
        adj[pair[0] as usize].push(pair[1] as usize);
        adj[pair[1] as usize].push(pair[0] as usize);
    }
    let mut parent = vec![usize::MAX; edges];
    let mut order = vec![e_root];
    parent[e_root] = e_root;
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for &y in &adj[x] {
            if parent[y] == usize::MAX {
                parent[y] = x;
                order.push(y);
            }
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); edges];
    for &x in &order[1..] {
        children[parent[x]].push(x);
    }
    let mut size = vec![1usize; edges];
    for &x in order[1..].iter().rev() {
        size[parent[x]] += size[x];
    }
    let m_star = (m - 1).div_ceil(k - 1);
    // descend to the heaviest child while it is still large enough
    let mut x = e_root;
    while let Some(&c) = children[x].iter().max_by_key(|&&c| (size[c], std::cmp::Reverse(c))) {
        if size[c] < m_star {
            break;
        }
        x = c;
    }
    let mut t1_star = vec![x];
    let mut total = 1;
    for &c in &children[x] {
        if total >= m_star {
            break;
        }
        let mut stack = vec![c];
        while let Some(y) = stack.pop() {
            t1_star.push(y);
            stack.extend(children[y].iter().copied());
        }
        total += size[c];
    }
    // largest component of T1' minus the shared edge x
    let mut best: Option<(usize, Vertex, Vec<usize>)> = None;
    let members: HashSet<usize> = t1_star.iter().copied().collect();
    for &w in tree.edge(x) {
        let mut comp = Vec::new();
        let mut seen: HashSet<usize> = HashSet::from([x]);
        let mut stack: Vec<usize> = tree.incident(w).iter().copied().filter(|e| members.contains(e) && *e != x).collect();
        for &e in &stack {
            seen.insert(e);
        }
        while let Some(e) = stack.pop() {
            comp.push(e);
            for &v in tree.edge(e) {
                for &g in tree.incident(v) {
                    if members.contains(&g) && seen.insert(g) {
                        stack.push(g);
                    }
                }
            }
        }
        if best.as_ref().is_none_or(|b| comp.len() > b.0) {
            best = Some((comp.len(), w, comp));
        }
    }
    let (_, cut, mut t1_edges) = best.expect("edges have k vertices");
    t1_edges.sort_unstable();
    let t1: HashSet<usize> = t1_edges.iter().copied().collect();
    let t2_edges = (0..edges).filter(|e| !t1.contains(e)).collect();
    Ok(SubtreeSplit { t1_edges, t2_edges, cut })
}
