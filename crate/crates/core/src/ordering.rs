//! Spin orders for the autoregressive factorisation.
//!
//! The criticality order is read off a maximum spanning tree of the
//! coupling graph built with Kruskal's algorithm on edges sorted by
//! decreasing bond strength `|J_uv + J_vu|`. Vertices enter the order the
//! first time an accepted tree edge touches them.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::rng;

/// A permutation of `0..n`; position `t` holds the spin generated at step `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SpinOrder(Vec<usize>);

impl SpinOrder {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidConfig(format!("{permutation:?} is not a permutation")));
            }
        }
        Ok(Self(permutation))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The reversed sequence.
    pub fn inverse_order(&self) -> SpinOrder {
        SpinOrder(self.0.iter().rev().copied().collect())
    }
}

impl TryFrom<Vec<usize>> for SpinOrder {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinOrder> for Vec<usize> {
    fn from(o: SpinOrder) -> Self {
        o.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Accepted tree edges, in acceptance order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanningForest {
    pub edges: Vec<WeightedEdge>,
}

impl SpanningForest {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    /// Ties sorted by `(u, v)`; both endpoints of a fresh edge appended `u` first.
    #[default]
    ByIndex,
    /// Ties shuffled and fresh endpoints appended in random order.
    Seeded(u64),
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// All pairs `u < v` with non-zero bond strength `|J_uv + J_vu|`.
pub fn weighted_edges(model: &IsingModel) -> Vec<WeightedEdge> {
    let n = model.n();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let weight = model.bond(u, v).abs();
            if weight > 0.0 {
                edges.push(WeightedEdge { u, v, weight });
            }
        }
    }
    edges
}

/// Criticality-ordered spin sequence and the maximum spanning forest it
/// was read from. Disconnected graphs yield a forest; vertices no tree edge
/// touches are appended in ascending index order.
pub fn criticality_order(model: &IsingModel, tie_break: TieBreak) -> (SpinOrder, SpanningForest) {
    let n = model.n();
    let mut edges = weighted_edges(model);
    let mut rng = match tie_break {
        TieBreak::ByIndex => None,
        TieBreak::Seeded(seed) => Some(rng::rng_from_seed(seed)),
    };
    match rng.as_mut() {
        None => edges.sort_by(|a, b| {
            b.weight.total_cmp(&a.weight).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v))
        }),
        Some(r) => {
            edges.shuffle(r);
            // stable sort keeps the shuffled order inside each tie group
            edges.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        }
    }

    let mut sets = UnionFind::new(n);
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut forest = SpanningForest::default();
    for e in edges {
        if forest.edges.len() + 1 >= n.max(1) {
            break;
        }
        if !sets.union(e.u, e.v) {
            continue;
        }
        forest.edges.push(e);
        match (placed[e.u], placed[e.v]) {
            (false, false) => {
                let swap = rng.as_mut().is_some_and(|r| r.random::<bool>());
                let (a, b) = if swap { (e.v, e.u) } else { (e.u, e.v) };
                order.extend([a, b]);
                placed[a] = true;
                placed[b] = true;
            }
            (true, false) => {
                order.push(e.v);
                placed[e.v] = true;
            }
            (false, true) => {
                order.push(e.u);
                placed[e.u] = true;
            }
            (true, true) => {}
        }
    }
    order.extend((0..n).filter(|&i| !placed[i]));
    (SpinOrder(order), forest)
}

/// Uniformly random permutation of `0..n`.
pub fn random_order(n: usize, seed: u64) -> SpinOrder {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng::rng_from_seed(seed));
    SpinOrder(p)
}

pub fn inverse_order(order: &SpinOrder) -> SpinOrder {
    order.inverse_order()
}

/// File layout `{"order": [...], "tree_edges": [[u, v], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderFile {
    pub order: SpinOrder,
    pub tree_edges: Vec<[usize; 2]>,
}

impl OrderFile {
    pub fn new(order: SpinOrder, forest: Option<&SpanningForest>) -> Self {
        let tree_edges = forest.map_or_else(Vec::new, |f| f.edges.iter().map(|e| [e.u, e.v]).collect());
        Self { order, tree_edges }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper(n: usize, entries: &[(usize, usize, f64)]) -> IsingModel {
        let mut j = vec![0.0; n * n];
        for &(u, v, w) in entries {
            j[u * n + v] = w;
        }
        IsingModel::new(n, j, vec![0.0; n], 1.0).unwrap()
    }

    #[test]
    fn three_spin_chain() {
        let m = upper(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)]);
        let (order, forest) = criticality_order(&m, TieBreak::ByIndex);
        assert_eq!(order.as_slice(), &[0, 1, 2]);
        let pairs: Vec<_> = forest.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(inverse_order(&order).as_slice(), &[2, 1, 0]);
    }

    #[test]
    fn negative_single_edge() {
        let m = upper(2, &[(0, 1, -5.0)]);
        assert_eq!(criticality_order(&m, TieBreak::ByIndex).0.as_slice(), &[0, 1]);
    }

    #[test]
    fn star_graph() {
        let m = upper(4, &[(0, 2, 4.0), (1, 2, 3.0), (2, 3, 1.0)]);
        let (order, forest) = criticality_order(&m, TieBreak::ByIndex);
        assert_eq!(order.as_slice(), &[0, 2, 1, 3]);
        assert_eq!(forest.total_weight(), 8.0);
    }

    #[test]
    fn symmetric_storage_uses_bond_strength() {
        let mut j = vec![0.0; 9];
        j[1] = 1.0;
        j[3] = 1.0;
        j[5] = 0.5;
        j[7] = 0.5;
        let m = IsingModel::new(3, j, vec![0.0; 3], 1.0).unwrap();
        let (order, forest) = criticality_order(&m, TieBreak::ByIndex);
        assert_eq!(order.as_slice(), &[0, 1, 2]);
        assert_eq!(forest.total_weight(), 3.0);
    }

    #[test]
    fn disconnected_graph_gets_ascending_suffix() {
        let m = upper(5, &[(3, 4, 1.0)]);
        let (order, forest) = criticality_order(&m, TieBreak::ByIndex);
        assert_eq!(order.as_slice(), &[3, 4, 0, 1, 2]);
        assert_eq!(forest.edges.len(), 1);
        let single = IsingModel::free(1, 1.0).unwrap();
        assert_eq!(criticality_order(&single, TieBreak::ByIndex).0.as_slice(), &[0]);
    }

    #[test]
    fn seeded_tie_break_is_deterministic() {
        let m = upper(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]);
        let a = criticality_order(&m, TieBreak::Seeded(9));
        let b = criticality_order(&m, TieBreak::Seeded(9));
        assert_eq!(a, b);
        assert_eq!(a.1.total_weight(), 3.0);
    }

    #[test]
    fn order_validation_and_random_order() {
        assert!(SpinOrder::new(vec![0, 0]).is_err());
        assert!(SpinOrder::new(vec![1, 2]).is_err());
        assert_eq!(random_order(1, 5).as_slice(), &[0]);
        assert_eq!(random_order(7, 11), random_order(7, 11));
        let o = random_order(9, 3);
        assert_eq!(inverse_order(&inverse_order(&o)), o);
    }

    #[test]
    fn order_file_layout() {
        let m = upper(3, &[(0, 1, 3.0), (1, 2, 2.0)]);
        let (order, forest) = criticality_order(&m, TieBreak::ByIndex);
        let v = serde_json::to_value(OrderFile::new(order, Some(&forest))).unwrap();
        assert_eq!(v, serde_json::json!({"order": [0, 1, 2], "tree_edges": [[0, 1], [1, 2]]}));
    }
}
