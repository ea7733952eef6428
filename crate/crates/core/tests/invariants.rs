mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use common::{check_embedding, choose, is_semi_bare, is_subtree, HostIndex};
use loosetree::embed::{spanning_embed, HierarchyConfig};
use loosetree::hypergraph::{full_set, vertex_set};
use loosetree::hypertree::PathKind;
use loosetree::instances::{pm_barrier, random_hypertree, random_kgraph, tightness_construction, GenKind, GenSpec};
use loosetree::matching::{perfect_matching, rainbow_perfect_matching, GraphSystem, SolveOutcome};
use loosetree::oracle::count_embeddings;
use loosetree::{Hypertree, KGraph, Vertex};

fn tree_kind() -> impl Strategy<Value = GenKind> {
    prop_oneof![Just(GenKind::UniformAttachment), Just(GenKind::PathHeavy), Just(GenKind::StarHeavy)]
}

fn tree(max_edges: usize) -> impl Strategy<Value = Hypertree> {
    (tree_kind(), 3usize..6, 1..=max_edges, any::<u64>())
        .prop_map(|(kind, k, m, seed)| random_hypertree(&GenSpec::tree(kind, 1 + m * (k - 1), k, seed)).unwrap())
}

fn graph(k: usize, n: usize, density: f64, seed: u64) -> KGraph {
    random_kgraph(&GenSpec::graph(GenKind::Density, n, k, density, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trees_are_connected_with_the_right_size(t in tree(60)) {
        prop_assert!(t.validate().is_ok());
        prop_assert_eq!(t.n() - 1, (t.k() - 1) * t.num_edges());
        let all: Vec<usize> = (0..t.num_edges()).collect();
        prop_assert!(is_subtree(&t, &all));
    }

    #[test]
    fn leaf_matching_is_disjoint_leaf_edges(t in tree(60)) {
        let leaves: HashSet<usize> = t.leaf_edges().iter().map(|l| l.edge).collect();
        let mut used = HashSet::new();
        for e in t.max_leaf_matching(&[]) {
            prop_assert!(leaves.contains(&e));
            for &v in t.edge(e) {
                prop_assert!(used.insert(v), "vertex {} shared", v);
            }
        }
    }

    #[test]
    fn bare_paths_are_semi_bare(t in tree(40), a in any::<u32>(), b in any::<u32>()) {
        let (u, v) = (a % t.n() as u32, b % t.n() as u32);
        prop_assume!(u != v);
        let path = t.path_between(u, v).unwrap();
        let kind = t.classify_path(&path).unwrap();
        if kind == PathKind::Bare {
            prop_assert!(is_semi_bare(&t, &path));
        }
        prop_assert_eq!(kind != PathKind::Neither, is_semi_bare(&t, &path));
    }

    #[test]
    fn bfs_prefixes_are_subtrees(t in tree(40), start in any::<u32>()) {
        let order = t.bfs_edge_order(start % t.n() as u32).unwrap();
        prop_assert_eq!(order.len(), t.num_edges());
        for i in 1..=order.len() {
            prop_assert!(is_subtree(&t, &order[..i]), "prefix {}", i);
        }
    }

    #[test]
    fn identity_removal_and_full_induction(k in 3usize..5, n in 6usize..10, seed in any::<u64>()) {
        let g = graph(k, n, 0.5, seed);
        prop_assert_eq!(&g.remove_vertices(&vertex_set(n, [])), &g);
        prop_assert_eq!(&g.induced(&full_set(n)), &g);
    }

    #[test]
    fn equal_rainbow_system_agrees_with_perfect_matching(n in prop_oneof![Just(6usize), Just(9), Just(12)], d in 0.05f64..0.6, seed in any::<u64>()) {
        let g = graph(3, n, d, seed);
        let sys = GraphSystem::new(3, n, vec![g.clone(); n / 3]).unwrap();
        let rainbow = rainbow_perfect_matching(&sys, None).outcome;
        let plain = perfect_matching(&g, None).unwrap();
        prop_assert_eq!(rainbow.found().is_some(), plain.found().is_some());
        prop_assert!(rainbow != SolveOutcome::BudgetExhausted);
        for m in [rainbow.found(), plain.found()].into_iter().flatten() {
            let host = HostIndex::new(&g);
            let mut seen = HashSet::new();
            for e in m {
                prop_assert!(host.has(e));
                prop_assert!(e.iter().all(|&v| seen.insert(v)));
            }
            prop_assert_eq!(seen.len(), n);
        }
    }

    #[test]
    fn rainbow_solver_is_deterministic(seed in any::<u64>()) {
        let graphs = (0..3).map(|j| graph(3, 9, 0.4, seed ^ j)).collect();
        let sys = GraphSystem::new(3, 9, graphs).unwrap();
        prop_assert_eq!(rainbow_perfect_matching(&sys, None), rainbow_perfect_matching(&sys, None));
    }

    #[test]
    fn counts_survive_relabelling(m in 1usize..4, n in 6usize..9, d in 0.3f64..0.9, seed in any::<u64>()) {
        let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 1 + 2 * m, 3, seed)).unwrap();
        let g = graph(3, n, d, seed);
        let mut perm: Vec<Vertex> = (0..n as Vertex).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let moved = KGraph::new(3, n, g.edges().iter().map(|e| e.iter().map(|&v| perm[v as usize]).collect())).unwrap();
        let before = count_embeddings(&g, &t, &[], false).unwrap();
        prop_assert_eq!(count_embeddings(&moved, &t, &[], false).unwrap(), before);
        let pinned = count_embeddings(&g, &t, &[(0, 1)], false).unwrap();
        prop_assert_eq!(count_embeddings(&moved, &t, &[(0, perm[1])], false).unwrap(), pinned);
    }

    #[test]
    fn generated_graphs_have_the_requested_shape(k in 3usize..6, n in 6usize..14, d in 0.0f64..1.0, seed in any::<u64>()) {
        let g = graph(k, n, d, seed);
        prop_assert_eq!((g.k(), g.n()), (k, n));
        prop_assert!(g.edges().iter().all(|e| e.len() == k && e.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn spanning_embedding_is_deterministic(m in 2usize..6, v in 0u32..11, seed in any::<u64>()) {
        let t = random_hypertree(&GenSpec::tree(GenKind::UniformAttachment, 1 + 2 * m, 3, seed)).unwrap();
        let g = KGraph::complete(3, t.n());
        let v = v % t.n() as u32;
        let config = HierarchyConfig::default();
        let a = spanning_embed(&g, &t, 0, v, &config, seed).unwrap();
        let b = spanning_embed(&g, &t, 0, v, &config, seed).unwrap();
        prop_assert_eq!(a.map(), b.map());
        prop_assert!(check_embedding(&t, &HostIndex::new(&g), a.map(), &[(0, v)], true).is_ok());
    }
}

/// Degrees in the tightness host, counted from the edges of H alone.
#[test]
fn tightness_degree_identity() {
    for (k, n) in [(3usize, 11usize), (3, 13), (4, 13)] {
        let h = pm_barrier(k - 1, n - 1).unwrap();
        for level in 1..k {
            let (g, apex) = tightness_construction(k, level, n, &h).unwrap();
            let host = HostIndex::new(&g);
            let h_index = HostIndex::new(&h);
            let mut rng = ChaCha8Rng::seed_from_u64(level as u64);
            for _ in 0..40 {
                let mut s: Vec<Vertex> = (0..n as Vertex).collect::<Vec<_>>().choose_multiple(&mut rng, level).copied().collect();
                if rand::Rng::gen_bool(&mut rng, 0.5) && !s.contains(&apex) {
                    s[0] = apex;
                }
                s.sort_unstable();
                let rest: Vec<Vertex> = (0..n as Vertex).filter(|v| !s.contains(v)).collect();
                let mut d_g = 0u64;
                let mut d_h_link = 0u64;
                for_each_subset(&rest, k - level, &mut |c| {
                    let e: Vec<Vertex> = s.iter().chain(c).copied().collect();
                    d_g += u64::from(host.has(&e));
                    if e.contains(&apex) {
                        let without: Vec<Vertex> = e.iter().copied().filter(|&v| v != apex).collect();
                        d_h_link += u64::from(h_index.has(&without));
                    }
                });
                let lib = g.degree(&s, &vertex_set(n, rest.iter().copied())).unwrap();
                assert_eq!(lib, d_g, "k={k} level={level} S={s:?}");
                if s.contains(&apex) {
                    let s_h: Vec<Vertex> = s.iter().copied().filter(|&v| v != apex).collect();
                    let d_h = if s_h.is_empty() {
                        h.num_edges() as u64
                    } else {
                        h.degree(&s_h, &vertex_set(n - 1, rest.iter().copied())).unwrap()
                    };
                    assert_eq!(lib, d_h, "S={s:?}");
                } else {
                    let base = choose(n - 1 - level, k - level) as u64;
                    assert_eq!(lib, base + d_h_link, "S={s:?}");
                }
            }
        }
    }
}

fn for_each_subset(items: &[Vertex], size: usize, f: &mut dyn FnMut(&[Vertex])) {
    fn go(items: &[Vertex], size: usize, cur: &mut Vec<Vertex>, f: &mut dyn FnMut(&[Vertex])) {
        if cur.len() == size {
            f(cur);
            return;
        }
        for (i, &v) in items.iter().enumerate() {
            cur.push(v);
            go(&items[i + 1..], size, cur, f);
            cur.pop();
        }
    }
    go(items, size, &mut Vec::new(), f);
}
