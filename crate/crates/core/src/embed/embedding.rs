use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{KGraph, Vertex, VertexSet};
use crate::hypertree::Hypertree;
use crate::instances::{check_schema, Persist, SCHEMA};

/// A partial injective map from tree vertices to host vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    map: Vec<Option<Vertex>>,
    inverse: HashMap<Vertex, Vertex>,
}

impl Embedding {
    pub fn new(tree_n: usize) -> Self {
        Embedding {
            map: vec![None; tree_n],
            inverse: HashMap::new(),
        }
    }

    pub fn from_map(map: Vec<Option<Vertex>>) -> Result<Self> {
        let mut e = Embedding::new(map.len());
        for (x, y) in map.into_iter().enumerate() {
            if let Some(y) = y {
                e.set(x as Vertex, y)?;
            }
        }
        Ok(e)
    }

    pub fn tree_n(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, x: Vertex) -> Option<Vertex> {
        self.map[x as usize]
    }

    /// Tree vertex mapped onto host vertex `y`, if any.
    pub fn preimage(&self, y: Vertex) -> Option<Vertex> {
        self.inverse.get(&y).copied()
    }

    pub fn is_used(&self, y: Vertex) -> bool {
        self.inverse.contains_key(&y)
    }

    pub fn set(&mut self, x: Vertex, y: Vertex) -> Result<()> {
        if let Some(&other) = self.inverse.get(&y) {
            if other != x {
                return Err(Error::Verification(format!(
                    "host vertex {y} already hosts tree vertex {other}"
                )));
            }
        }
        if let Some(old) = self.map[x as usize].replace(y) {
            self.inverse.remove(&old);
        }
        self.inverse.insert(y, x);
        Ok(())
    }

    pub fn unset(&mut self, x: Vertex) {
        if let Some(y) = self.map[x as usize].take() {
            self.inverse.remove(&y);
        }
    }

    pub fn mapped(&self) -> usize {
        self.inverse.len()
    }

    pub fn is_complete(&self) -> bool {
        self.map.iter().all(Option::is_some)
    }

    /// Image set, sorted.
    pub fn image(&self) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.inverse.keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn map(&self) -> &[Option<Vertex>] {
        &self.map
    }

    /// Image of a set of tree vertices, if all are mapped.
    pub fn image_of(&self, xs: &[Vertex]) -> Option<Vec<Vertex>> {
        xs.iter().map(|&x| self.get(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub map: Vec<Option<Vertex>>,
}

impl Persist for Embedding {
    type File = EmbeddingFile;

    fn to_file(&self) -> EmbeddingFile {
        EmbeddingFile {
            schema: Some(SCHEMA.to_string()),
            map: self.map.clone(),
        }
    }

    fn from_file(file: EmbeddingFile) -> Result<Self> {
        check_schema(file.schema.as_deref())?;
        Embedding::from_map(file.map)
    }
}

/// What the verifier should insist on beyond injectivity and edges.
#[derive(Debug, Clone, Default)]
pub struct Requirements<'a> {
    pub roots: Vec<(Vertex, Vertex)>,
    pub allowed: Option<&'a VertexSet>,
    pub complete: bool,
    pub spanning: bool,
}

impl Requirements<'_> {
    pub fn complete() -> Self {
        Requirements {
            complete: true,
            ..Default::default()
        }
    }

    pub fn spanning() -> Self {
        Requirements {
            complete: true,
            spanning: true,
            ..Default::default()
        }
    }

    pub fn with_roots(mut self, roots: &[(Vertex, Vertex)]) -> Self {
        self.roots = roots.to_vec();
        self
    }
}

/// Independent check of an embedding against its tree and host: every
/// mapped vertex lands in the host, the map is injective, every fully mapped
/// tree edge is a host edge, and the listed requirements hold.
pub fn verify_embedding(tree: &Hypertree, host: &KGraph, emb: &Embedding, req: &Requirements) -> Result<()> {
    let fail = |msg: String| Err(Error::Verification(msg));
    if emb.map.len() != tree.n() {
        return fail(format!("map covers {} vertices, tree has {}", emb.map.len(), tree.n()));
    }
    let mut hit = vec![false; host.n()];
    for (x, y) in emb.map.iter().enumerate() {
        let Some(y) = *y else {
            if req.complete || req.spanning {
                return fail(format!("tree vertex {x} is unmapped"));
            }
            continue;
        };
        if y as usize >= host.n() {
            return fail(format!("tree vertex {x} maps outside the host ({y})"));
        }
        if std::mem::replace(&mut hit[y as usize], true) {
            return fail(format!("host vertex {y} is hit twice"));
        }
        if let Some(allowed) = req.allowed {
            if !allowed.contains(y as usize) {
                return fail(format!("tree vertex {x} maps to {y}, outside the allowed set"));
            }
        }
    }
    for (i, e) in tree.edges().iter().enumerate() {
        let image: Option<Vec<Vertex>> = e.iter().map(|&x| emb.map[x as usize]).collect();
        if let Some(image) = image {
            if !host.contains(&image) {
                return fail(format!("tree edge {i} maps to non-edge {image:?}"));
            }
        }
    }
    for &(r, v) in &req.roots {
        if emb.map.get(r as usize).copied().flatten() != Some(v) {
            return fail(format!("root {r} does not map to {v}"));
        }
    }
    if req.spanning && hit.iter().any(|h| !h) {
        return fail("image is not the whole host".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injectivity_enforced() {
        let mut e = Embedding::new(3);
        e.set(0, 5).unwrap();
        assert!(e.set(1, 5).is_err());
        e.set(0, 6).unwrap();
        e.set(1, 5).unwrap();
        assert_eq!(e.image(), vec![5, 6]);
        assert_eq!(e.preimage(6), Some(0));
        e.unset(0);
        assert!(!e.is_used(6));
    }

    #[test]
    fn verifier_catches_problems() {
        let t = Hypertree::loose_path(3, 1);
        let g = KGraph::new(3, 4, vec![vec![0, 1, 2]]).unwrap();
        let good = Embedding::from_map(vec![Some(0), Some(1), Some(2)]).unwrap();
        verify_embedding(&t, &g, &good, &Requirements::complete().with_roots(&[(0, 0)])).unwrap();
        assert!(verify_embedding(&t, &g, &good, &Requirements::complete().with_roots(&[(0, 1)])).is_err());
        let off = Embedding::from_map(vec![Some(0), Some(1), Some(3)]).unwrap();
        assert!(verify_embedding(&t, &g, &off, &Requirements::default()).is_err());
        let partial = Embedding::from_map(vec![Some(0), None, Some(3)]).unwrap();
        verify_embedding(&t, &g, &partial, &Requirements::default()).unwrap();
        assert!(verify_embedding(&t, &g, &partial, &Requirements::complete()).is_err());
        let spanning = Requirements {
            spanning: true,
            ..Default::default()
        };
        assert!(verify_embedding(&t, &g, &good, &spanning).is_err());
    }

    #[test]
    fn json_round_trip() {
        let e = Embedding::from_map(vec![Some(3), None, Some(1)]).unwrap();
        assert_eq!(Embedding::from_json(&e.to_json()).unwrap(), e);
        assert!(Embedding::from_json(r#"{"map":[1,1]}"#).is_err());
    }
}
