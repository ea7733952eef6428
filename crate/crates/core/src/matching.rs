//! Exact perfect and rainbow perfect matching search for small systems of
//! k-graphs, plus the table of known perfect matching thresholds.
//!
//! Identical graphs in a system are grouped into classes with a copy count,
//! so the solver never branches over permutations of interchangeable copies.

use num_rational::{BigRational, Rational64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{DegreeReport, Edge, KGraph};
use crate::instances::{check_schema, Persist, SCHEMA};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Known value (or lower bound) of the perfect matching ℓ-degree threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThresholdEntry {
    pub k: usize,
    pub level: usize,
    #[serde(with = "opt_ratio")]
    pub value: Option<Rational64>,
    #[serde(with = "crate::util_serde::rational64")]
    pub lower_bound: Rational64,
    pub source: &'static str,
}

mod opt_ratio {
    use num_rational::Rational64;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Option<Rational64>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }
}

impl ThresholdEntry {
    /// The exact value if known, otherwise the lower bound.
    pub fn best_known(&self) -> Rational64 {
        self.value.unwrap_or(self.lower_bound)
    }
}

pub fn pm_threshold(k: usize, level: usize) -> Result<ThresholdEntry> {
    if k < 2 || level == 0 || level >= k {
        return Err(Error::InvalidArgument(format!("level {level} outside [1, k-1] for k = {k}")));
    }
    let half = Rational64::new(1, 2);
    let (value, source) = if 2 * level >= k {
        (Some(half), "exact: level at least k/2")
    } else if (k, level) == (3, 1) {
        (Some(Rational64::new(5, 9)), "exact: k = 3, level 1")
    } else {
        (None, "open: lower bound only")
    };
    Ok(ThresholdEntry {
        k,
        level,
        value,
        lower_bound: value.unwrap_or(half),
        source,
    })
}

/// An ordered list G_1..G_m of k-graphs on a shared vertex set `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSystem {
    k: usize,
    n: usize,
    classes: Vec<KGraph>,
    class_of: Vec<usize>,
}

impl GraphSystem {
    pub fn new(k: usize, n: usize, graphs: Vec<KGraph>) -> Result<Self> {
        let mut classes: Vec<KGraph> = Vec::new();
        let mut class_of = Vec::with_capacity(graphs.len());
        for g in graphs {
            Self::check(k, n, &g)?;
            match classes.iter().position(|c| *c == g) {
                Some(c) => class_of.push(c),
                None => {
                    class_of.push(classes.len());
                    classes.push(g);
                }
            }
        }
        Ok(GraphSystem {
            k,
            n,
            classes,
            class_of,
        })
    }

    /// A system given as (graph, number of copies) pairs, in order.
    pub fn with_copies(k: usize, n: usize, groups: Vec<(KGraph, usize)>) -> Result<Self> {
        let mut classes = Vec::new();
        let mut class_of = Vec::new();
        for (g, copies) in groups {
            Self::check(k, n, &g)?;
            class_of.extend(std::iter::repeat_n(classes.len(), copies));
            classes.push(g);
        }
        Ok(GraphSystem {
            k,
            n,
            classes,
            class_of,
        })
    }

    fn check(k: usize, n: usize, g: &KGraph) -> Result<()> {
        if g.k() != k || g.n() != n {
            return Err(Error::InvalidArgument(format!(
                "graph is a {}-graph on {} vertices, system expects a {k}-graph on {n}",
                g.k(),
                g.n()
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of graphs m.
    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn graph(&self, j: usize) -> &KGraph {
        &self.classes[self.class_of[j]]
    }

    pub fn graphs(&self) -> impl Iterator<Item = &KGraph> + '_ {
        self.class_of.iter().map(|&c| &self.classes[c])
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub k: usize,
    pub n: usize,
    pub graphs: Vec<Vec<Edge>>,
}

impl Persist for GraphSystem {
    type File = GraphSystemFile;

    fn to_file(&self) -> GraphSystemFile {
        GraphSystemFile {
            schema: Some(SCHEMA.to_string()),
            k: self.k,
            n: self.n,
            graphs: self.graphs().map(|g| g.edges().to_vec()).collect(),
        }
    }

    fn from_file(file: GraphSystemFile) -> Result<Self> {
        check_schema(file.schema.as_deref())?;
        let graphs = file
            .graphs
            .into_iter()
            .map(|edges| KGraph::new(file.k, file.n, edges))
            .collect::<Result<Vec<_>>>()?;
        GraphSystem::new(file.k, file.n, graphs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveOutcome {
    /// e_j ∈ G_j for every j, pairwise disjoint.
    Found(Vec<Edge>),
    NoSolution,
    BudgetExhausted,
}

impl SolveOutcome {
    pub fn found(&self) -> Option<&[Edge]> {
        match self {
            SolveOutcome::Found(m) => Some(m),
            _ => None,
        }
    }
}

/// Search result with the number of expanded nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solve {
    pub outcome: SolveOutcome,
    pub nodes: u64,
}

struct Class {
    masks: Vec<u64>,
    edges: Vec<Edge>,
    by_vertex: Vec<Vec<u32>>,
    remaining: usize,
    floor: usize,
    chosen: Vec<usize>,
}

struct Solver {
    words: usize,
    n: usize,
    classes: Vec<Class>,
    used: Vec<u64>,
    nodes: u64,
    budget: u64,
}

struct OutOfBudget;

impl Solver {
    fn new(sys: &GraphSystem, budget: u64) -> Self {
        let words = sys.n.div_ceil(64).max(1);
        let mut counts = vec![0usize; sys.classes.len()];
        for &c in &sys.class_of {
            counts[c] += 1;
        }
        let classes = sys
            .classes
            .iter()
            .zip(counts)
            .map(|(g, remaining)| {
                let mut masks = vec![0u64; words * g.num_edges()];
                let mut by_vertex = vec![Vec::new(); sys.n];
                for (i, e) in g.edges().iter().enumerate() {
                    for &v in e {
                        masks[i * words + v as usize / 64] |= 1 << (v % 64);
                        by_vertex[v as usize].push(i as u32);
                    }
                }
                Class {
                    masks,
                    edges: g.edges().to_vec(),
                    by_vertex,
                    remaining,
                    floor: 0,
                    chosen: Vec::new(),
                }
            })
            .collect();
        Solver {
            words,
            n: sys.n,
            classes,
            used: vec![0; words],
            nodes: 0,
            budget,
        }
    }

    fn free(&self, c: usize, i: usize) -> bool {
        let m = &self.classes[c].masks[i * self.words..(i + 1) * self.words];
        m.iter().zip(&self.used).all(|(a, b)| a & b == 0)
    }

    fn toggle(&mut self, c: usize, i: usize) {
        for w in 0..self.words {
            self.used[w] ^= self.classes[c].masks[i * self.words + w];
        }
    }

    fn is_used(&self, v: usize) -> bool {
        self.used[v / 64] >> (v % 64) & 1 == 1
    }

    fn tick(&mut self) -> std::result::Result<(), OutOfBudget> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }

    fn take(&mut self, c: usize, i: usize) {
        self.toggle(c, i);
        let class = &mut self.classes[c];
        class.remaining -= 1;
        class.chosen.push(i);
    }

    fn untake(&mut self, c: usize, i: usize) {
        let class = &mut self.classes[c];
        class.remaining += 1;
        class.chosen.pop();
        self.toggle(c, i);
    }

    /// Every vertex must be covered: branch on the uncovered vertex with the
    /// fewest live options.
    fn perfect(&mut self, left: usize) -> std::result::Result<bool, OutOfBudget> {
        if left == 0 {
            return Ok(true);
        }
        self.tick()?;
        let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
        for v in 0..self.n {
            if self.is_used(v) {
                continue;
            }
            let mut options = Vec::new();
            for c in 0..self.classes.len() {
                if self.classes[c].remaining == 0 {
                    continue;
                }
                for &i in &self.classes[c].by_vertex[v] {
                    if self.free(c, i as usize) {
                        options.push((c, i as usize));
                    }
                }
            }
            if options.is_empty() {
                return Ok(false);
            }
            if best.as_ref().is_none_or(|b| options.len() < b.1.len()) {
                let single = options.len() == 1;
                best = Some((v, options));
                if single {
                    break;
                }
            }
        }
        let (_, options) = best.expect("an uncovered vertex exists");
        for (c, i) in options {
            self.take(c, i);
            let ok = self.perfect(left - 1)?;
            if ok {
                return Ok(true);
            }
            self.untake(c, i);
        }
        Ok(false)
    }

    /// Branch on the class with the fewest candidates; copies of a class
    /// take edges in increasing index order.
    fn partial(&mut self, left: usize) -> std::result::Result<bool, OutOfBudget> {
        if left == 0 {
            return Ok(true);
        }
        self.tick()?;
        let mut best: Option<(usize, Vec<usize>)> = None;
        for c in 0..self.classes.len() {
            let class = &self.classes[c];
            if class.remaining == 0 {
                continue;
            }
            let candidates: Vec<usize> = (class.floor..class.edges.len()).filter(|&i| self.free(c, i)).collect();
            if candidates.len() < class.remaining {
                return Ok(false);
            }
            if best.as_ref().is_none_or(|b| candidates.len() < b.1.len()) {
                best = Some((c, candidates));
            }
        }
        let (c, candidates) = best.expect("some class has copies left");
        let saved = self.classes[c].floor;
        for i in candidates {
            self.take(c, i);
            self.classes[c].floor = i + 1;
            let ok = self.partial(left - 1)?;
            self.classes[c].floor = saved;
            if ok {
                return Ok(true);
            }
            self.untake(c, i);
        }
        Ok(false)
    }
}

/// Exact search for a rainbow matching using every graph of the system once.
pub fn rainbow_perfect_matching(sys: &GraphSystem, budget: Option<u64>) -> Solve {
    let m = sys.len();
    if m * sys.k > sys.n {
        return Solve {
            outcome: SolveOutcome::NoSolution,
            nodes: 0,
        };
    }
    let mut solver = Solver::new(sys, budget.unwrap_or(DEFAULT_BUDGET));
    let result = if m * sys.k == sys.n {
        solver.perfect(m)
    } else {
        solver.partial(m)
    };
    let outcome = match result {
        Err(OutOfBudget) => SolveOutcome::BudgetExhausted,
        Ok(false) => SolveOutcome::NoSolution,
        Ok(true) => {
            let mut next = vec![0usize; solver.classes.len()];
            let matching = sys
                .class_of
                .iter()
                .map(|&c| {
                    let class = &solver.classes[c];
                    let e = class.edges[class.chosen[next[c]]].clone();
                    next[c] += 1;
                    e
                })
                .collect();
            SolveOutcome::Found(matching)
        }
    };
    Solve {
        outcome,
        nodes: solver.nodes,
    }
}

/// Exact perfect matching search.
pub fn perfect_matching(g: &KGraph, budget: Option<u64>) -> Result<SolveOutcome> {
    if !g.n().is_multiple_of(g.k()) {
        return Err(Error::InvalidArgument(format!("{} does not divide {}", g.k(), g.n())));
    }
    let sys = GraphSystem::with_copies(g.k(), g.n(), vec![(g.clone(), g.n() / g.k())])?;
    Ok(rainbow_perfect_matching(&sys, budget).outcome)
}

/// Checks that `matching` is a rainbow matching of `sys`.
pub fn verify_rainbow(sys: &GraphSystem, matching: &[Edge]) -> Result<()> {
    if matching.len() != sys.len() {
        return Err(Error::Verification(format!(
            "{} edges for {} graphs",
            matching.len(),
            sys.len()
        )));
    }
    let mut seen = vec![false; sys.n];
    for (j, e) in matching.iter().enumerate() {
        if !sys.graph(j).contains(e) {
            return Err(Error::Verification(format!("edge {e:?} is not in graph {j}")));
        }
        for &v in e {
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::Verification(format!("vertex {v} covered twice")));
            }
        }
    }
    Ok(())
}

/// A rainbow matching attempt preceded by an exact degree audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedMatching {
    pub outcome: SolveOutcome,
    pub reports: Vec<DegreeReport>,
    /// Audit passed but no matching was found at this size.
    pub flagged: bool,
}

pub fn degree_certified_rainbow_pm(
    sys: &GraphSystem,
    level: usize,
    delta: &BigRational,
    budget: Option<u64>,
) -> Result<CertifiedMatching> {
    let mut reports = Vec::with_capacity(sys.num_classes());
    for (j, g) in sys.graphs().enumerate() {
        let report = g.min_degree(level)?;
        if !report.meets(delta) {
            return Err(Error::DegreeViolation {
                graph: j,
                witness: report.witness_set,
                degree: report.min_degree,
            });
        }
        reports.push(report);
    }
    let outcome = rainbow_perfect_matching(sys, budget).outcome;
    let flagged = !matches!(outcome, SolveOutcome::Found(_));
    Ok(CertifiedMatching {
        outcome,
        reports,
        flagged,
    })
}
