//! Covers of a dependency graph by independent sets.
//!
//! A *proper cover* partitions concentration work across groups of mutually
//! independent variables: it is a family of independent sets whose union is
//! the whole vertex set. A *fractional* cover attaches rational weights
//! `w_j ∈ [0, 1]` to independent sets so that every vertex accumulates total
//! weight at least one, and it is *exact* when every vertex accumulates
//! exactly one. The two graph invariants computed here are
//!
//! * `chromatic_number`: the size of the smallest proper cover, equal to the
//!   usual chromatic number since color classes are independent sets, and
//! * `fractional_chromatic`: the smallest total weight of a proper
//!   fractional cover, obtained exactly as a rational LP optimum over the
//!   maximal independent sets.
//!
//! For any graph, writing `Δ` for the maximum degree,
//! `fractional chromatic <= chromatic <= Δ + 1`, and bounds driven by a cover
//! only improve as the total weight drops.
//!
//! Everything here is exact: weights are rationals, comparisons are
//! equalities, and no floating point is involved.

use crate::depstruct::DependencyGraph;
use crate::lp::solve_covering_lp;
use crate::rational::{self, Rational};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Largest vertex count accepted by the exact enumeration routines. The
/// number of maximal independent sets grows exponentially, so callers must
/// opt in explicitly beyond this.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("graph has {n} vertices, above the enumeration cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("element {element} has total coverage {coverage} < 1, not a fractional cover")]
    NotFractional { element: usize, coverage: String },
    #[error("cover is over {cover_n} elements but the graph has {graph_n}")]
    DimensionMismatch { cover_n: usize, graph_n: usize },
    #[error("part {part} has weight {weight} outside [0, 1]")]
    WeightOutOfRange { part: usize, weight: String },
    #[error("part {part} contains element {index} out of range for n = {n}")]
    ElementOutOfRange { part: usize, index: usize, n: usize },
}

/// Weighted family of subsets of `{0, ..., n-1}` with rational weights in
/// `[0, 1]`. Parts produced by the solvers are independent sets; the type
/// itself only checks ranges, and [`verify_cover`] reports independence and
/// coverage against a concrete graph.
///
/// Parts may be empty: exactification must sometimes park surplus weight on
/// a part covering nothing to keep the total weight unchanged (for instance
/// no cover of a single element by nonempty sets can have coverage exactly
/// one but total weight `3/2`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CoverDto", into = "CoverDto")]
pub struct FractionalCover {
    n: usize,
    parts: Vec<(BTreeSet<usize>, Rational)>,
}

#[derive(Serialize, Deserialize, Clone)]
struct PartDto {
    set: Vec<usize>,
    w: String,
}

#[derive(Serialize, Deserialize, Clone)]
struct CoverDto {
    n: usize,
    parts: Vec<PartDto>,
}

impl TryFrom<CoverDto> for FractionalCover {
    type Error = String;
    fn try_from(dto: CoverDto) -> Result<Self, String> {
        let mut parts = Vec::with_capacity(dto.parts.len());
        for p in &dto.parts {
            let w = rational::parse(&p.w)?;
            parts.push((p.set.iter().copied().collect(), w));
        }
        FractionalCover::new(dto.n, parts).map_err(|e| e.to_string())
    }
}

impl From<FractionalCover> for CoverDto {
    fn from(c: FractionalCover) -> CoverDto {
        CoverDto {
            n: c.n,
            parts: c
                .parts
                .iter()
                .map(|(s, w)| PartDto {
                    set: s.iter().copied().collect(),
                    w: rational::format(w),
                })
                .collect(),
        }
    }
}

impl FractionalCover {
    pub fn new(n: usize, parts: Vec<(BTreeSet<usize>, Rational)>) -> Result<Self, CoverError> {
        for (idx, (set, w)) in parts.iter().enumerate() {
            if !rational::in_unit_interval(w) {
                return Err(CoverError::WeightOutOfRange {
                    part: idx,
                    weight: rational::format(w),
                });
            }
            if let Some(&max) = set.iter().next_back() {
                if max >= n {
                    return Err(CoverError::ElementOutOfRange {
                        part: idx,
                        index: max,
                        n,
                    });
                }
            }
        }
        Ok(FractionalCover { n, parts })
    }

    /// Cover with unit weight on each given set.
    pub fn unit(n: usize, sets: Vec<BTreeSet<usize>>) -> Result<Self, CoverError> {
        FractionalCover::new(n, sets.into_iter().map(|s| (s, Rational::one())).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> &[(BTreeSet<usize>, Rational)] {
        &self.parts
    }

    pub fn total_weight(&self) -> Rational {
        self.parts.iter().map(|(_, w)| w.clone()).sum()
    }

    /// Total weight of the parts containing `i`.
    pub fn coverage(&self, i: usize) -> Rational {
        self.parts
            .iter()
            .filter(|(s, _)| s.contains(&i))
            .map(|(_, w)| w.clone())
            .sum()
    }
}

/// Outcome of checking a weighted family against a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    /// Every element has coverage at least one.
    pub fractional: bool,
    /// Every part is an independent set of the graph.
    pub proper: bool,
    /// Every element has coverage exactly one.
    pub exact: bool,
}

/// Checks coverage and independence of `cover` in `g`.
pub fn verify_cover(g: &DependencyGraph, cover: &FractionalCover) -> Result<CoverReport, CoverError> {
    if cover.n() != g.n() {
        return Err(CoverError::DimensionMismatch {
            cover_n: cover.n(),
            graph_n: g.n(),
        });
    }
    let one = Rational::one();
    let mut fractional = true;
    let mut exact = true;
    for i in 0..g.n() {
        let c = cover.coverage(i);
        if c < one {
            fractional = false;
        }
        if c != one {
            exact = false;
        }
    }
    let proper = cover.parts.iter().all(|(set, _)| is_independent(g, set));
    Ok(CoverReport {
        fractional,
        proper,
        exact,
    })
}

fn is_independent(g: &DependencyGraph, set: &BTreeSet<usize>) -> bool {
    set.iter()
        .all(|&a| set.iter().all(|&b| a >= b || !g.has_edge(a, b)))
}

/// All maximal independent sets, lexicographically sorted. Errors when the
/// vertex count exceeds `cap`.
pub fn maximal_independent_sets(
    g: &DependencyGraph,
    cap: usize,
) -> Result<Vec<BTreeSet<usize>>, CoverError> {
    let n = g.n();
    if n > cap || n > 32 {
        return Err(CoverError::CapExceeded { n, cap: cap.min(32) });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let all = (1u32 << n) - 1;
    // Independent sets are cliques of the complement graph.
    let comp: Vec<u32> = (0..n)
        .map(|v| {
            let adj = g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w));
            all & !adj & !(1 << v)
        })
        .collect();
    let mut found: Vec<u32> = Vec::new();
    bron_kerbosch(&comp, 0, all, 0, &mut found);
    let mut sets: Vec<BTreeSet<usize>> = found
        .into_iter()
        .map(|mask| (0..n).filter(|&v| mask & (1 << v) != 0).collect())
        .collect();
    sets.sort();
    Ok(sets)
}

fn bron_kerbosch(adj: &[u32], r: u32, mut p: u32, mut x: u32, out: &mut Vec<u32>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    // Pivot on the candidate dominating most of P to prune branches.
    let pivot = iter_bits(p | x)
        .max_by_key(|&u| (p & adj[u]).count_ones())
        .expect("p | x nonempty");
    for v in iter_bits(p & !adj[pivot]).collect::<Vec<_>>() {
        let bit = 1u32 << v;
        bron_kerbosch(adj, r | bit, p & adj[v], x & adj[v], out);
        p &= !bit;
        x |= bit;
    }
}

fn iter_bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&i| mask & (1 << i) != 0)
}

/// Size of the smallest proper cover together with a witness. Equivalent to
/// graph coloring: the witness parts are the color classes. Exact branch and
/// bound, so subject to the same cap as enumeration.
pub fn chromatic_number(
    g: &DependencyGraph,
    cap: usize,
) -> Result<(usize, Vec<BTreeSet<usize>>), CoverError> {
    let n = g.n();
    if n > cap {
        return Err(CoverError::CapExceeded { n, cap });
    }
    if n == 0 {
        return Ok((0, Vec::new()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (usize::MAX - g.degree(v), v));
    let lower = greedy_clique_size(g);
    for k in lower..=n {
        let mut colors = vec![usize::MAX; n];
        if try_color(g, &order, 0, k, &mut colors) {
            let mut classes = vec![BTreeSet::new(); k];
            for (v, &c) in colors.iter().enumerate() {
                classes[c].insert(v);
            }
            classes.retain(|s| !s.is_empty());
            let count = classes.len();
            return Ok((count, classes));
        }
    }
    unreachable!("every graph is n-colorable")
}

fn greedy_clique_size(g: &DependencyGraph) -> usize {
    let n = g.n();
    let start = (0..n).max_by_key(|&v| (g.degree(v), usize::MAX - v)).unwrap_or(0);
    let mut clique = vec![start];
    let mut candidates: Vec<usize> = g.neighbors(start).to_vec();
    while let Some(&v) = candidates
        .iter()
        .max_by_key(|&&v| (g.degree(v), usize::MAX - v))
    {
        clique.push(v);
        candidates.retain(|&u| u != v && g.has_edge(u, v));
    }
    clique.len().max(1)
}

fn try_color(g: &DependencyGraph, order: &[usize], idx: usize, k: usize, colors: &mut [usize]) -> bool {
    if idx == order.len() {
        return true;
    }
    let v = order[idx];
    // Symmetry breaking: never open more than one fresh color per step.
    let used = colors.iter().filter(|&&c| c != usize::MAX).map(|&c| c + 1).max().unwrap_or(0);
    for c in 0..k.min(used + 1) {
        if g.neighbors(v).iter().all(|&u| colors[u] != c) {
            colors[v] = c;
            if try_color(g, order, idx + 1, k, colors) {
                return true;
            }
            colors[v] = usize::MAX;
        }
    }
    false
}

/// Smallest total weight of a proper fractional cover, with an optimal
/// witness. Solved exactly as a rational covering LP whose columns are the
/// maximal independent sets (restricting to maximal sets loses nothing since
/// enlarging a part only helps coverage).
pub fn fractional_chromatic(
    g: &DependencyGraph,
    cap: usize,
) -> Result<(Rational, FractionalCover), CoverError> {
    let sets = maximal_independent_sets(g, cap)?;
    if g.n() == 0 {
        return Ok((Rational::zero(), FractionalCover::new(0, Vec::new()).unwrap()));
    }
    let sol = solve_covering_lp(g.n(), &sets);
    let parts: Vec<(BTreeSet<usize>, Rational)> = sets
        .into_iter()
        .zip(sol.weights)
        .filter(|(_, w)| !w.is_zero())
        .collect();
    let cover = FractionalCover::new(g.n(), parts).expect("LP weights lie in [0, 1]");
    debug_assert!(verify_cover(g, &cover).unwrap().fractional);
    debug_assert!(verify_cover(g, &cover).unwrap().proper);
    Ok((sol.value, cover))
}

/// Rewrites a fractional cover so every element has coverage exactly one,
/// without changing the total weight. Every output part is a subset of some
/// input part, so properness is preserved; surplus weight that cannot stay
/// on any element ends up on empty parts.
///
/// Elements are processed in increasing order; while an element is
/// over-covered, the lowest-weight part containing it (ties to the earliest
/// part) is split into a piece keeping the element and a piece without it,
/// and the surplus moves to the piece without.
pub fn exactify(cover: &FractionalCover) -> Result<FractionalCover, CoverError> {
    let one = Rational::one();
    let mut parts: Vec<(BTreeSet<usize>, Rational)> = cover
        .parts
        .iter()
        .filter(|(_, w)| !w.is_zero())
        .cloned()
        .collect();
    for i in 0..cover.n() {
        let mut cov: Rational = parts
            .iter()
            .filter(|(s, _)| s.contains(&i))
            .map(|(_, w)| w.clone())
            .sum();
        if cov < one {
            return Err(CoverError::NotFractional {
                element: i,
                coverage: rational::format(&cov),
            });
        }
        while cov > one {
            let j = parts
                .iter()
                .enumerate()
                .filter(|(_, (s, _))| s.contains(&i))
                .min_by(|(ja, (_, wa)), (jb, (_, wb))| wa.cmp(wb).then(ja.cmp(jb)))
                .map(|(j, _)| j)
                .expect("over-covered element lies in some part");
            let surplus = &cov - &one;
            let delta = parts[j].1.clone().min(surplus);
            let mut without: BTreeSet<usize> = parts[j].0.clone();
            without.remove(&i);
            parts[j].1 -= delta.clone();
            cov -= delta.clone();
            parts.push((without, delta));
            if parts[j].1.is_zero() {
                parts.remove(j);
            }
        }
    }
    FractionalCover::new(cover.n(), parts)
}
