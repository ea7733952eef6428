use super::immerse::is_immersed;
use super::tuples::AbsorberFamily;
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::hypergraph::{KGraph, Vertex};
use crate::hypertree::Hypertree;
use crate::util::subsets;

/// How many (k−1)-subsets of the leftover vertices are tried per step.
const TARGET_CHOICES: usize = 64;

/// Extends a partial embedding of `tree` (a subtree containing the root,
/// with the family's stars immersed) to all of `tree` using exactly the
/// vertices `b`. Each step attaches one missing edge by switching the
/// centres of one unused family tuple into it; the vertices the centres
/// used to host move onto k−1 vertices of `b`. The order of the switches is
/// searched with backtracking.
pub fn extend_with_absorbers(host: &KGraph, tree: &Hypertree, partial: &Embedding, b: &[Vertex], family: &AbsorberFamily) -> Result<Embedding> {
    let k = host.k();
    let missing: usize = (0..tree.n() as Vertex).filter(|&x| partial.get(x).is_none()).count();
    if missing != b.len() || !b.len().is_multiple_of(k - 1) {
        return Err(Error::InvalidArgument(format!(
            "{} leftover vertices for {missing} missing tree vertices",
            b.len()
        )));
    }
    for &w in b {
        if w as usize >= host.n() {
            return Err(Error::UnknownVertex(w));
        }
        if partial.is_used(w) {
            return Err(Error::InvalidArgument(format!("leftover vertex {w} is already used")));
        }
    }
    let steps = b.len() / (k - 1);
    if steps > family.tuples.len() {
        return Err(Error::FamilyTooSmall { achieved: family.tuples.len(), required: steps });
    }
    let mut left: Vec<Vertex> = b.to_vec();
    left.sort_unstable();
    let mut search = Search { host, tree, family, spent: vec![false; family.tuples.len()], budget: SWITCH_BUDGET };
    let mut emb = partial.clone();
    if search.run(&mut emb, &left) {
        return Ok(emb);
    }
    let x1 = (0..tree.num_edges())
        .find_map(|e| {
            let mapped: Vec<Vertex> = tree.edge(e).iter().copied().filter(|&x| partial.get(x).is_some()).collect();
            (mapped.len() == 1).then(|| mapped[0])
        })
        .ok_or_else(|| Error::InvalidArgument("mapped part is not a subtree".into()))?;
    let mut target = vec![partial.get(x1).expect("mapped")];
    target.extend(left.iter().take(k - 1));
    Err(Error::AbsorptionFailure(target))
}

/// Switches tried in total before giving up.
const SWITCH_BUDGET: usize = 4096;

/// Depth-first search over the order of switches: which missing edge, which
/// leftover vertices and which tuple go next.
struct Search<'a> {
    host: &'a KGraph,
    tree: &'a Hypertree,
    family: &'a AbsorberFamily,
    spent: Vec<bool>,
    budget: usize,
}

impl Search<'_> {
    fn run(&mut self, emb: &mut Embedding, left: &[Vertex]) -> bool {
        if left.is_empty() {
            return true;
        }
        let (tree, k) = (self.tree, self.host.k());
        // Any edge hanging off the mapped part may go next.
        let frontier: Vec<usize> = (0..tree.num_edges())
            .filter(|&e| tree.edge(e).iter().filter(|&&x| emb.get(x).is_some()).count() == 1)
            .collect();
        let usable: Vec<usize> = (0..self.family.tuples.len())
            .filter(|&t| !self.spent[t] && self.family.tuples[t].stars.iter().all(|s| is_immersed(tree, emb, s)))
            .collect();
        for &e in &frontier {
            let edge = tree.edge(e);
            let x1 = *edge.iter().find(|&&x| emb.get(x).is_some()).expect("one mapped vertex");
            let u1 = emb.get(x1).expect("mapped");
            let fresh: Vec<Vertex> = edge.iter().copied().filter(|&x| x != x1).collect();
            for us in subsets(left, k - 1).take(TARGET_CHOICES) {
                let targets: Vec<Vertex> = std::iter::once(u1).chain(us.iter().copied()).collect();
                for &t in &usable {
                    let Some(stars) = self.family.tuples[t].absorbing_order(self.host, &targets) else {
                        continue;
                    };
                    if self.budget == 0 {
                        return false;
                    }
                    self.budget -= 1;
                    let saved = emb.clone();
                    for ((star, &u), &x) in stars.iter().zip(&us).zip(&fresh) {
                        let old = emb.preimage(star.centre).expect("immersed centre is mapped");
                        emb.unset(old);
                        emb.set(old, u).expect("leftover vertex is free");
                        emb.set(x, star.centre).expect("centre was just freed");
                    }
                    self.spent[t] = true;
                    let rest: Vec<Vertex> = left.iter().copied().filter(|w| !us.contains(w)).collect();
                    if self.run(emb, &rest) {
                        return true;
                    }
                    self.spent[t] = false;
                    *emb = saved;
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorb::immerse::{immerse_in, immersion_paths};
    use crate::absorb::tuples::family_of_size;
    use crate::embed::{verify_embedding, Requirements};
    use crate::hypertree::SubForest;
    use num_rational::Rational64;

    /// Loose path of 16 edges; the last edge is withheld and absorbed.
    #[test]
    fn absorbs_one_missing_edge() {
        let t = Hypertree::loose_path(3, 16);
        let g = KGraph::complete(3, 60);
        let mut forest = SubForest::full(&t);
        forest.remove(15);
        let paths = immersion_paths(&forest, 0, 2);
        let fam = family_of_size(&g, 1, Rational64::new(1, 60), &[5], 9).unwrap();
        let partial = immerse_in(&g, &forest, 0, 5, &fam.stars(), &paths, &[false; 60]).unwrap();
        let used: Vec<Vertex> = partial.image();
        let b: Vec<Vertex> = (0..60).filter(|w| !used.contains(w)).take(2).collect();
        let full = extend_with_absorbers(&g, &t, &partial, &b, &fam).unwrap();
        verify_embedding(&t, &g, &full, &Requirements::complete().with_roots(&[(0, 5)])).unwrap();
        let mut img = full.image();
        img.retain(|w| !used.contains(w));
        assert_eq!(img, b);
    }

    #[test]
    fn rejects_wrong_leftover_size() {
        let t = Hypertree::loose_path(3, 2);
        let g = KGraph::complete(3, 10);
        let mut partial = Embedding::new(t.n());
        for x in 0..3 {
            partial.set(x, x).unwrap();
        }
        let fam = family_of_size(&g, 0, Rational64::new(1, 10), &[], 0).unwrap();
        assert!(matches!(extend_with_absorbers(&g, &t, &partial, &[7], &fam), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            extend_with_absorbers(&g, &t, &partial, &[7, 8], &fam),
            Err(Error::FamilyTooSmall { achieved: 0, required: 1 })
        ));
    }
}
