//! Declarations of local dependence and the reductions between them.
//!
//! Three ways to declare that a family `X_1, ..., X_n` is locally dependent,
//! ordered from weakest to most explicit:
//!
//! * **Neighborhoods** ([`Ld1Neighborhoods`]): for each `i` a set `A_i` with
//!   `i ∈ A_i` such that `X_i` is independent of the variables outside
//!   `A_i`. Nothing is claimed jointly; see the sign-flip ensemble in
//!   [`crate::ensembles`] for a family where every variable has a two-element
//!   neighborhood yet no joint independence whatsoever holds.
//! * **Dependency graph** ([`DependencyGraph`]): variables indexed by the
//!   vertices such that for any independent set `S`, the variables in `S` are
//!   mutually independent and jointly independent of the variables outside
//!   the closed neighborhood of `S`. The graph is what the cover machinery
//!   in [`crate::covers`] consumes.
//! * **Source factorization** ([`HyperDependence`]): independent sources
//!   `Y_1, ..., Y_N` and index sets `S_i` with `X_i = f_i(Y_j : j ∈ S_i)`.
//!   The usage parameters `k = max_i |S_i|` and `l = max_j |R_j|`, where
//!   `R_j = {i : j ∈ S_i}` collects the variables reading source `j`, drive
//!   the `(k, l)` bounds in [`crate::bounds`].
//!
//! A source factorization always induces a dependency graph (variables are
//! adjacent when they share a source), and grouping sources into blocks never
//! increases the induced maximum degree: [`HyperDependence::reduce`] regroups
//! an arbitrary factorization so that both usage parameters drop to at most
//! `m`, the induced maximum degree plus one.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Validation failures for structure declarations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructError {
    #[error("vertex index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("source set of variable {0} is empty")]
    EmptySourceSet(usize),
    #[error("source index {index} of variable {var} out of range for N = {n_sources}")]
    SourceOutOfRange {
        var: usize,
        index: usize,
        n_sources: usize,
    },
    #[error("neighborhood of variable {0} does not contain the variable itself")]
    MissingSelf(usize),
    #[error("declaration lists {got} sets but n = {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Undirected simple graph on `{0, ..., n-1}` stored as sorted adjacency
/// lists. Serializes as `{"n": n, "edges": [[i, j], ...]}` with `i < j`;
/// ingestion deduplicates edges and rejects loops and out-of-range indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphDto", into = "GraphDto")]
pub struct DependencyGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct GraphDto {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphDto> for DependencyGraph {
    type Error = StructError;
    fn try_from(dto: GraphDto) -> Result<Self, StructError> {
        DependencyGraph::from_edges(dto.n, &dto.edges)
    }
}

impl From<DependencyGraph> for GraphDto {
    fn from(g: DependencyGraph) -> GraphDto {
        GraphDto {
            n: g.n,
            edges: g.edges(),
        }
    }
}

impl DependencyGraph {
    /// Builds a graph from an edge list, deduplicating repeated or reversed
    /// pairs. Errors on loops and on endpoints `>= n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, StructError> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(StructError::IndexOutOfRange { index: v, n });
                }
            }
            if a == b {
                return Err(StructError::SelfLoop(a));
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Ok(DependencyGraph {
            n,
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Graph with no edges.
    pub fn edgeless(n: usize) -> Self {
        DependencyGraph {
            n,
            adj: vec![Vec::new(); n],
        }
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        DependencyGraph::from_edges(n, &edges).expect("complete graph is valid")
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        DependencyGraph::from_edges(n, &edges).expect("cycle is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Neighbors of `v` in increasing order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.adj.iter().enumerate() {
            for &j in nb.iter().filter(|&&j| j > i) {
                out.push((i, j));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Source factorization: variable `i` reads exactly the independent sources
/// listed in `sets[i]`. Serializes as `{"n": n, "N": N, "S": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HdDto", into = "HdDto")]
pub struct HyperDependence {
    n_sources: usize,
    sets: Vec<BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct HdDto {
    n: usize,
    #[serde(rename = "N")]
    n_sources: usize,
    #[serde(rename = "S")]
    sets: Vec<Vec<usize>>,
}

impl TryFrom<HdDto> for HyperDependence {
    type Error = StructError;
    fn try_from(dto: HdDto) -> Result<Self, StructError> {
        if dto.sets.len() != dto.n {
            return Err(StructError::LengthMismatch {
                got: dto.sets.len(),
                expected: dto.n,
            });
        }
        let sets: Vec<BTreeSet<usize>> = dto.sets.iter().map(|s| s.iter().copied().collect()).collect();
        HyperDependence::new(dto.n_sources, sets)
    }
}

impl From<HyperDependence> for HdDto {
    fn from(hd: HyperDependence) -> HdDto {
        HdDto {
            n: hd.sets.len(),
            n_sources: hd.n_sources,
            sets: hd.sets.iter().map(|s| s.iter().copied().collect()).collect(),
        }
    }
}

/// Usage parameters of a source factorization: no variable reads more than
/// `k` sources, no source is read by more than `l` variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdParams {
    pub k: usize,
    pub l: usize,
}

impl HyperDependence {
    /// Validates that every variable reads at least one in-range source.
    pub fn new(n_sources: usize, sets: Vec<BTreeSet<usize>>) -> Result<Self, StructError> {
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                return Err(StructError::EmptySourceSet(i));
            }
            if let Some(&max) = s.iter().next_back() {
                if max >= n_sources {
                    return Err(StructError::SourceOutOfRange {
                        var: i,
                        index: max,
                        n_sources,
                    });
                }
            }
        }
        Ok(HyperDependence { n_sources, sets })
    }

    pub fn n_vars(&self) -> usize {
        self.sets.len()
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Sources read by variable `i`.
    pub fn source_set(&self, i: usize) -> &BTreeSet<usize> {
        &self.sets[i]
    }

    /// For each source, the set of variables reading it (`R_j`).
    pub fn reader_sets(&self) -> Vec<BTreeSet<usize>> {
        let mut readers = vec![BTreeSet::new(); self.n_sources];
        for (i, s) in self.sets.iter().enumerate() {
            for &j in s {
                readers[j].insert(i);
            }
        }
        readers
    }

    /// `k = max |S_i|` and `l = max |R_j|`. Unread sources do not contribute
    /// to `l`; an empty declaration yields `(0, 0)`.
    pub fn params(&self) -> HdParams {
        let k = self.sets.iter().map(BTreeSet::len).max().unwrap_or(0);
        let l = self
            .reader_sets()
            .iter()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(0);
        HdParams { k, l }
    }

    /// Graph with an edge between any two variables sharing a source. This
    /// is a valid dependency graph for the factorized family.
    pub fn derived_graph(&self) -> DependencyGraph {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.sets.len()];
        for readers in self.reader_sets() {
            for &a in &readers {
                for &b in &readers {
                    if a != b {
                        sets[a].insert(b);
                    }
                }
            }
        }
        DependencyGraph {
            n: self.sets.len(),
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Regroups sources into blocks so that both usage parameters are at most
    /// `m`, the maximum degree of [`Self::derived_graph`] plus one.
    ///
    /// Block `j` collects the sources whose lowest-indexed reader is variable
    /// `j`; empty blocks are dropped. In the regrouped declaration, variable
    /// `i` reads block `j` exactly when `S_i` meets the block, and because
    /// block `j` is contained in `S_j`, every block a variable reads belongs
    /// to a closed neighbor, capping `|S'_i|` and `|R'_j|` by `m`.
    pub fn reduce(&self) -> HyperDependence {
        let n = self.sets.len();
        // owner[y] = lowest-indexed variable reading source y.
        let mut owner = vec![usize::MAX; self.n_sources];
        for (i, s) in self.sets.iter().enumerate() {
            for &y in s {
                if owner[y] == usize::MAX {
                    owner[y] = i;
                }
            }
        }
        let mut block_of_owner = vec![usize::MAX; n];
        let mut next = 0usize;
        for &o in owner.iter().filter(|&&o| o != usize::MAX) {
            if block_of_owner[o] == usize::MAX {
                block_of_owner[o] = next;
                next += 1;
            }
        }
        let sets = self
            .sets
            .iter()
            .map(|s| s.iter().map(|&y| block_of_owner[owner[y]]).collect())
            .collect();
        HyperDependence {
            n_sources: next,
            sets,
        }
    }
}

/// Per-variable neighborhoods `A_i` with `i ∈ A_i`: variable `i` is
/// independent of the variables outside `A_i`, with no joint claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Ld1Dto", into = "Ld1Dto")]
pub struct Ld1Neighborhoods {
    sets: Vec<BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct Ld1Dto {
    n: usize,
    #[serde(rename = "A")]
    sets: Vec<Vec<usize>>,
}

impl TryFrom<Ld1Dto> for Ld1Neighborhoods {
    type Error = StructError;
    fn try_from(dto: Ld1Dto) -> Result<Self, StructError> {
        if dto.sets.len() != dto.n {
            return Err(StructError::LengthMismatch {
                got: dto.sets.len(),
                expected: dto.n,
            });
        }
        Ld1Neighborhoods::new(dto.sets.iter().map(|s| s.iter().copied().collect()).collect())
    }
}

impl From<Ld1Neighborhoods> for Ld1Dto {
    fn from(ld1: Ld1Neighborhoods) -> Ld1Dto {
        Ld1Dto {
            n: ld1.sets.len(),
            sets: ld1.sets.iter().map(|s| s.iter().copied().collect()).collect(),
        }
    }
}

impl Ld1Neighborhoods {
    pub fn new(sets: Vec<BTreeSet<usize>>) -> Result<Self, StructError> {
        let n = sets.len();
        for (i, s) in sets.iter().enumerate() {
            if !s.contains(&i) {
                return Err(StructError::MissingSelf(i));
            }
            if let Some(&max) = s.iter().next_back() {
                if max >= n {
                    return Err(StructError::IndexOutOfRange { index: max, n });
                }
            }
        }
        Ok(Ld1Neighborhoods { sets })
    }

    pub fn n(&self) -> usize {
        self.sets.len()
    }

    pub fn neighborhood(&self, i: usize) -> &BTreeSet<usize> {
        &self.sets[i]
    }

    /// Symmetrized graph: `i ~ j` when either neighborhood contains the other
    /// endpoint. Its maximum degree plus one caps the proper cover size
    /// usable with neighborhood-based bounds.
    pub fn graph(&self) -> DependencyGraph {
        let n = self.sets.len();
        let mut edges = Vec::new();
        for (i, s) in self.sets.iter().enumerate() {
            for &j in s.iter().filter(|&&j| j != i) {
                edges.push((i.min(j), i.max(j)));
            }
        }
        DependencyGraph::from_edges(n, &edges).expect("validated neighborhoods produce a valid graph")
    }
}
