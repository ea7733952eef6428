use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use loosetree::decompose::{dichotomy, dichotomy_gamma};
use loosetree::embed::{concentration_threshold, concentration_trial, spanning_embed, verify_embedding, DegreeIndex, HierarchyConfig, Requirements};
use loosetree::instances::{random_graph_system, random_hypertree, random_kgraph, GenKind, GenSpec, Persist};
use loosetree::matching::{rainbow_perfect_matching, verify_rainbow};
use loosetree::oracle::oracle_rainbow;
use loosetree::util::derive_seed;
use loosetree::{Error, KGraph, Vertex};

use crate::failure::{Failure, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Concentration,
    PipelineSweep,
    DichotomySweep,
    SolverAgreement,
}

pub struct Params {
    pub kind: Kind,
    pub seed: u64,
    pub trials: usize,
    pub jobs: Option<usize>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub p: f64,
    pub gamma: Rational64,
    pub level: Option<usize>,
    pub density: Vec<f64>,
    pub config: HierarchyConfig,
    pub counterexamples: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub digest: String,
    pub success: bool,
    pub elapsed_ms: u128,
    pub detail: Value,
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub command: String,
    pub kind: Kind,
    pub seed: u64,
    pub trials: usize,
    pub elapsed_ms: u128,
    pub successes: usize,
    pub summary: Value,
    pub rows: Vec<TrialRow>,
    pub counterexamples: Vec<String>,
}

fn digest(text: &str) -> String {
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// A failing instance, written out once the run is over.
struct Counterexample {
    name: String,
    json: String,
}

fn host(n: usize, k: usize, density: f64, seed: u64) -> loosetree::Result<KGraph> {
    if density >= 1.0 {
        Ok(KGraph::complete(k, n))
    } else {
        random_kgraph(&GenSpec::graph(GenKind::Density, n, k, density, seed))
    }
}

/// Runs the experiment; a counterexample makes the result exit 5 after the
/// report has been written.
pub fn run(p: &Params, out: Option<&Path>) -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(p.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    let start = Instant::now();
    let (rows, summary, found) = pool.install(|| match p.kind {
        Kind::Concentration => concentration(p),
        Kind::PipelineSweep => pipeline_sweep(p),
        Kind::DichotomySweep => dichotomy_sweep(p),
        Kind::SolverAgreement => solver_agreement(p),
    })?;
    let mut written = Vec::new();
    if !found.is_empty() {
        std::fs::create_dir_all(&p.counterexamples)?;
        for c in &found {
            let path = p.counterexamples.join(&c.name);
            std::fs::write(&path, &c.json)?;
            written.push(path.display().to_string());
        }
    }
    let report = ExperimentReport {
        command: "experiment".into(),
        kind: p.kind,
        seed: p.seed,
        trials: rows.len(),
        elapsed_ms: start.elapsed().as_millis(),
        successes: rows.iter().filter(|r| r.success).count(),
        summary,
        rows,
        counterexamples: written.clone(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("serialisable");
    text.push('\n');
    crate::commands::emit(out, &text)?;
    if written.is_empty() {
        Ok(())
    } else {
        Err(Failure::Counterexample(format!("{} instance(s) written to {}", written.len(), p.counterexamples.display())))
    }
}

type Run = Outcome<(Vec<TrialRow>, Value, Vec<Counterexample>)>;

fn first<T: Copy>(v: &[T], default: T) -> T {
    v.first().copied().unwrap_or(default)
}

fn concentration(p: &Params) -> Run {
    let (n, k, density) = (first(&p.n, 200), first(&p.k, 3), first(&p.density, 1.0));
    let level = p.level.unwrap_or(k - 1);
    let g = host(n, k, density, p.seed)?;
    let index = DegreeIndex::new(&g, level)?;
    let threshold = concentration_threshold(&g, level, p.gamma)?;
    let graph_digest = digest(&g.to_json());
    let rows: Vec<TrialRow> = (0..p.trials)
        .into_par_iter()
        .map(|t| {
            let clock = Instant::now();
            let witness = concentration_trial(&index, n, p.p, &threshold, p.seed, t);
            TrialRow {
                trial: t,
                seed: derive_seed(p.seed, t as u64),
                digest: graph_digest.clone(),
                success: witness.is_none(),
                elapsed_ms: clock.elapsed().as_millis(),
                detail: json!({ "witness": witness }),
            }
        })
        .collect();
    let passed = rows.iter().filter(|r| r.success).count();
    let summary = json!({
        "n": n, "k": k, "level": level, "p": p.p, "density": density,
        "threshold": threshold.to_string(),
        "pass_rate": passed as f64 / p.trials.max(1) as f64,
    });
    Ok((rows, summary, Vec::new()))
}

fn pipeline_sweep(p: &Params) -> Run {
    let sizes = if p.n.is_empty() { vec![25, 31, 55, 61] } else { p.n.clone() };
    let densities = if p.density.is_empty() { vec![1.0, 0.9] } else { p.density.clone() };
    let k = first(&p.k, 3);
    let mut cells = Vec::new();
    for &n in &sizes {
        for &d in &densities {
            for t in 0..p.trials {
                cells.push((n, d, t));
            }
        }
    }
    let rows: Vec<TrialRow> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(n, d, t))| -> Outcome<TrialRow> {
            let seed = derive_seed(p.seed, i as u64);
            let g = host(n, k, d, seed)?;
            let tree = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, n, k, seed))?;
            let (r, v) = (0, (t % n) as Vertex);
            let clock = Instant::now();
            let res = spanning_embed(&g, &tree, r, v, &p.config, seed);
            let elapsed_ms = clock.elapsed().as_millis();
            let (success, detail) = match res {
                Ok(emb) => {
                    verify_embedding(&tree, &g, &emb, &Requirements::spanning().with_roots(&[(r, v)]))
                        .map_err(|e| Failure::Pipeline(format!("unverified embedding: {e}")))?;
                    (true, json!({ "n": n, "density": d }))
                }
                Err(Error::Pipeline { phase, attempts, source }) => {
                    (false, json!({ "n": n, "density": d, "phase": phase, "attempts": attempts, "error": source.to_string() }))
                }
                Err(e) => return Err(e.into()),
            };
            Ok(TrialRow {
                trial: i,
                seed,
                digest: digest(&format!("{}{}", g.to_json(), tree.to_json())),
                success,
                elapsed_ms,
                detail,
            })
        })
        .collect::<Outcome<_>>()?;
    let mut cells_summary = Vec::new();
    for &n in &sizes {
        for &d in &densities {
            let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.detail["n"] == n && r.detail["density"] == d).collect();
            let ok = mine.iter().filter(|r| r.success).count();
            cells_summary.push(json!({ "n": n, "density": d, "trials": mine.len(), "successes": ok }));
        }
    }
    Ok((rows, json!({ "k": k, "cells": cells_summary }), Vec::new()))
}

fn dichotomy_sweep(p: &Params) -> Run {
    let ks = if p.k.is_empty() { vec![3, 4, 5] } else { p.k.clone() };
    let max_n = first(&p.n, 301);
    let kinds = [GenKind::UniformAttachment, GenKind::PathHeavy, GenKind::StarHeavy];
    let cells: Vec<(usize, usize)> = ks.iter().flat_map(|&k| (0..p.trials).map(move |t| (k, t))).collect();
    let results: Vec<(TrialRow, Option<Counterexample>)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(k, t))| -> Outcome<_> {
            let seed = derive_seed(p.seed, i as u64);
            let edges = 1 + (seed as usize % ((max_n - 1) / (k - 1)).max(1));
            let n = 1 + edges * (k - 1);
            let tree = random_hypertree(&GenSpec::tree(kinds[t % 3], n, k, seed))?;
            let text = tree.to_json();
            let clock = Instant::now();
            let res = dichotomy(&tree, dichotomy_gamma(k));
            let elapsed_ms = clock.elapsed().as_millis();
            let (success, detail, cx) = match res {
                Ok(d) => (true, json!({ "k": k, "n": n, "outcome": d_name(&d) }), None),
                Err(e @ Error::DichotomyFailure { .. }) => {
                    let cx = Counterexample { name: format!("dichotomy-k{k}-trial{i}.json"), json: text.clone() };
                    (false, json!({ "k": k, "n": n, "error": e.to_string() }), Some(cx))
                }
                Err(e) => return Err(e.into()),
            };
            Ok((TrialRow { trial: i, seed, digest: digest(&text), success, elapsed_ms, detail }, cx))
        })
        .collect::<Outcome<_>>()?;
    let (rows, cxs): (Vec<TrialRow>, Vec<Option<Counterexample>>) = results.into_iter().unzip();
    let failures = rows.iter().filter(|r| !r.success).count();
    Ok((rows, json!({ "ks": ks, "failures": failures }), cxs.into_iter().flatten().collect()))
}

fn d_name(d: &loosetree::decompose::Dichotomy) -> &'static str {
    match d {
        loosetree::decompose::Dichotomy::ManyLeaves(_) => "many-leaves",
        loosetree::decompose::Dichotomy::ManyBarePaths(_) => "many-bare-paths",
    }
}

fn solver_agreement(p: &Params) -> Run {
    let k = first(&p.k, 3);
    let results: Vec<(TrialRow, Option<Counterexample>)> = (0..p.trials)
        .into_par_iter()
        .map(|t| -> Outcome<_> {
            let seed = derive_seed(p.seed, t as u64);
            let m = 1 + (seed % 4) as usize;
            let n = k * m + (seed as usize / 4) % (12usize.saturating_sub(k * m) + 1);
            let density = 0.1 + 0.8 * ((seed >> 8) % 1000) as f64 / 1000.0;
            let sys = random_graph_system(k, n, m, density, seed)?;
            let text = sys.to_json();
            let clock = Instant::now();
            let fast = rainbow_perfect_matching(&sys, None);
            let slow = oracle_rainbow(&sys, None);
            let elapsed_ms = clock.elapsed().as_millis();
            let fast_found = match fast.outcome.found() {
                Some(mt) => {
                    verify_rainbow(&sys, mt).map_err(|e| Failure::Pipeline(format!("unverified matching: {e}")))?;
                    Some(true)
                }
                None if fast.outcome == loosetree::matching::SolveOutcome::NoSolution => Some(false),
                None => None,
            };
            let slow_found = if slow.found { Some(true) } else if slow.exhausted { Some(false) } else { None };
            let agree = fast_found == slow_found;
            let cx = (!agree).then(|| Counterexample { name: format!("rainbow-trial{t}.json"), json: text.clone() });
            let detail = json!({ "n": n, "m": m, "density": density, "solver": fast_found, "oracle": slow_found });
            Ok((TrialRow { trial: t, seed, digest: digest(&text), success: agree, elapsed_ms, detail }, cx))
        })
        .collect::<Outcome<_>>()?;
    let (rows, cxs): (Vec<TrialRow>, Vec<Option<Counterexample>>) = results.into_iter().unzip();
    let disagreements = rows.iter().filter(|r| !r.success).count();
    Ok((rows, json!({ "k": k, "disagreements": disagreements }), cxs.into_iter().flatten().collect()))
}
