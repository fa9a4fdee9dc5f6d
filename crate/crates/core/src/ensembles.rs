//! Deterministic, seedable generators for locally dependent random systems,
//! each exposing the dependence structure it was built from.
//!
//! Samplers are pure functions of `(seed, replica)`: replica substreams are
//! derived by hashing, so replicas can be generated concurrently and any
//! run is reproducible bit for bit. Discrete ±1 values use one random bit;
//! continuous values use uniform doubles built from 53 random bits.
//!
//! The ensembles:
//!
//! * `counterexample`: iid signs `X_i`, one global sign `Q`, partners
//!   `X_i' = Q X_i`. Pair neighborhoods satisfy the marginal independence
//!   property even though the system has no joint independence structure;
//!   the statistic `Σ X_i X_i' / 2` equals `n Q / 2` exactly.
//! * `m-dependent`: iid sources `Y` and sliding cyclic windows
//!   `X_i = f(Y_i, ..., Y_{i+m-1})` for a named local family (sum, xor,
//!   max). The factorization groups sources into blocks of size `m`, giving
//!   `(k, l) = (2, 2m-1)` when `m` divides `n`; otherwise the last block
//!   absorbs the remainder.
//! * `er-triangles`: iid Bernoulli edges on `n` vertices and one indicator
//!   per triangle, a `(k, l) = (3, n-2)` factorization.
//! * `hd-symmetric`: a symmetric matrix whose upper-diagonal entries are
//!   deterministic functions of shared and private sign sources, entries in
//!   `[-1, 1]`.
//! * `ld1-hermitian`: a Hermitian sign matrix whose upper-diagonal entries
//!   are dependent only within consecutive pairs (partner = global sign
//!   times base), so the declared neighborhoods form a matching.

use crate::depstruct::{DependencyGraph, HyperDependence, Ld1Neighborhoods};
use crate::eigen::{ComplexMatrix, SymMatrix};
use crate::selfbound::convex_distance_to_hamming_ball;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("n must be even and at least 2, got {0}")]
    OddPairCount(usize),
    #[error("need n >= m >= 1, got n = {n}, m = {m}")]
    BadWindow { n: usize, m: usize },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("need at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("matrix side must be at least 1, got {0}")]
    EmptyMatrix(usize),
    #[error("block width must be at least 1")]
    ZeroWidth,
    #[error("the xor family needs sign sources")]
    XorNeedsSigns,
    #[error("statistic {stat} does not apply to ensemble {ensemble}")]
    StatisticMismatch { stat: String, ensemble: String },
    #[error("eigenvalue index {s} outside 1..={n}")]
    EigenIndexOutOfRange { s: usize, n: usize },
    #[error("mask position {0} outside the entry range")]
    MaskOutOfRange(usize),
    #[error("bad ensemble spec: {0}")]
    BadSpec(String),
}

/// 64-bit generator with the standard increment-and-mix update.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Substream for one replica: the state is a hash of `(seed, index)`,
    /// so distinct replicas get unrelated streams.
    pub fn substream(seed: u64, index: u64) -> Self {
        SplitMix64 {
            state: mix64(seed ^ mix64(index.wrapping_add(0xa0761d6478bd642f))),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        mix64(self.state)
    }

    /// Uniform in [0, 1) from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform ±1 from one bit.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Local function applied to each source window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowFamily {
    WindowSum,
    WindowXor,
    WindowMax,
}

impl std::str::FromStr for WindowFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "window-sum" => Ok(WindowFamily::WindowSum),
            "window-xor" => Ok(WindowFamily::WindowXor),
            "window-max" => Ok(WindowFamily::WindowMax),
            other => Err(format!(
                "unknown family {other:?}; expected window-sum, window-xor, or window-max"
            )),
        }
    }
}

/// Distribution of the independent sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// Uniform ±1.
    Signs,
    /// Uniform on [0, 1).
    Uniform01,
}

/// Upper-diagonal entry pattern of the symmetric matrix ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "pattern")]
pub enum MatrixPattern {
    /// One private source per entry.
    Iid,
    /// Entries `(Q_c + R_p) / 2` where `Q_c` is shared along row chunks of
    /// the given width and `R_p` is private.
    SharedBlocks { width: usize },
}

/// Upper-diagonal entry pattern of the Hermitian ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "pattern")]
pub enum HermitianPattern {
    Iid,
    /// Consecutive entry pairs `(2t, 2t+1)` with partner = global sign
    /// times base; a trailing unpaired entry stays independent.
    Paired,
}

/// Declared dependence structure of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Structure {
    Ld1(Ld1Neighborhoods),
    Hd(HyperDependence),
}

/// One sampled state: declared variables plus the underlying sources drawn
/// to produce them (for debugging dumps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub vars: Vec<f64>,
    pub sources: Vec<f64>,
}

/// Named function of a realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Statistic {
    /// Sum of all variables.
    Sum,
    /// Half the sum of consecutive-pair products `Σ v_{2t} v_{2t+1} / 2`.
    PairedProductHalfSum,
    /// `s`-th largest eigenvalue of the assembled symmetric matrix,
    /// 1-based.
    Eigenvalue { s: usize },
    /// Operator norm of the assembled matrix.
    OperatorNorm,
    /// Operator norm with entries outside `keep` zeroed.
    MaskedOperatorNorm { keep: BTreeSet<usize> },
    /// Convex distance to the Hamming ball of the given radius around the
    /// all-plus pattern; variables must be ±1-valued.
    BallDistance { radius: usize },
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Statistic::Sum => write!(f, "sum"),
            Statistic::PairedProductHalfSum => write!(f, "paired-product-half-sum"),
            Statistic::Eigenvalue { s } => write!(f, "eigenvalue:{s}"),
            Statistic::OperatorNorm => write!(f, "operator-norm"),
            Statistic::MaskedOperatorNorm { keep } => {
                write!(f, "masked-operator-norm[{} kept]", keep.len())
            }
            Statistic::BallDistance { radius } => write!(f, "ball-distance:{radius}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Counterexample {
        n: usize,
    },
    MDependent {
        n: usize,
        m: usize,
        family: WindowFamily,
        source: SourceKind,
    },
    ErTriangles {
        n: usize,
        p: f64,
    },
    HdSymmetric {
        side: usize,
        pattern: MatrixPattern,
    },
    Ld1Hermitian {
        side: usize,
        pattern: HermitianPattern,
    },
}

/// A named sampler with its declared dependence structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    kind: Kind,
    structure: Structure,
}

/// Number of upper-diagonal positions of a `side × side` matrix.
pub fn n_upper_positions(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Row-major index of upper-diagonal position `(i, j)`, `i <= j`.
fn position_index(side: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < side);
    i * (2 * side - i + 1) / 2 + (j - i)
}

fn chunk_starts(side: usize, width: usize) -> Vec<(usize, usize)> {
    // (position, length) of each row chunk of upper-diagonal positions.
    let mut chunks = Vec::new();
    for i in 0..side {
        let row_len = side - i;
        let row_start = position_index(side, i, i);
        let mut off = 0;
        while off < row_len {
            let len = width.min(row_len - off);
            chunks.push((row_start + off, len));
            off += len;
        }
    }
    chunks
}

impl Ensemble {
    /// iid signs with one global partner sign; `n` pairs, `2n` variables
    /// interleaved as `X_0, X_0', X_1, X_1', ...`.
    pub fn counterexample(n: usize) -> Result<Self, EnsembleError> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(EnsembleError::OddPairCount(n));
        }
        let neighborhoods: Vec<BTreeSet<usize>> = (0..2 * n)
            .map(|v| {
                let base = v - v % 2;
                BTreeSet::from([base, base + 1])
            })
            .collect();
        let ld1 = Ld1Neighborhoods::new(neighborhoods).expect("pairs are valid neighborhoods");
        Ok(Ensemble {
            kind: Kind::Counterexample { n },
            structure: Structure::Ld1(ld1),
        })
    }

    /// Sliding cyclic windows of length `m` over `n` iid sources. The
    /// factorization groups sources into `n / m` blocks, the last absorbing
    /// any remainder.
    pub fn m_dependent(
        n: usize,
        m: usize,
        family: WindowFamily,
        source: SourceKind,
    ) -> Result<Self, EnsembleError> {
        if m == 0 || n < m {
            return Err(EnsembleError::BadWindow { n, m });
        }
        if family == WindowFamily::WindowXor && source != SourceKind::Signs {
            return Err(EnsembleError::XorNeedsSigns);
        }
        let n_blocks = n / m;
        let block_of = |s: usize| (s / m).min(n_blocks - 1);
        let sets: Vec<BTreeSet<usize>> = (0..n)
            .map(|i| (0..m).map(|d| block_of((i + d) % n)).collect())
            .collect();
        let hd = HyperDependence::new(n_blocks, sets).expect("window blocks are valid");
        Ok(Ensemble {
            kind: Kind::MDependent {
                n,
                m,
                family,
                source,
            },
            structure: Structure::Hd(hd),
        })
    }

    /// iid Bernoulli(p) edges on `n` vertices; one indicator variable per
    /// triangle, reading its 3 edges.
    pub fn er_triangles(n: usize, p: f64) -> Result<Self, EnsembleError> {
        if n < 3 {
            return Err(EnsembleError::TooFewVertices(n));
        }
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(EnsembleError::BadProbability(p));
        }
        let edge_index = |a: usize, b: usize| position_index(n - 1, a, b - 1);
        let mut sets = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    sets.push(BTreeSet::from([
                        edge_index(i, j),
                        edge_index(i, k),
                        edge_index(j, k),
                    ]));
                }
            }
        }
        let hd = HyperDependence::new(n * (n - 1) / 2, sets).expect("edge triples are valid");
        Ok(Ensemble {
            kind: Kind::ErTriangles { n, p },
            structure: Structure::Hd(hd),
        })
    }

    /// Symmetric `side × side` matrix with upper-diagonal entries in
    /// `[-1, 1]` generated per `pattern`.
    pub fn hd_symmetric(side: usize, pattern: MatrixPattern) -> Result<Self, EnsembleError> {
        if side == 0 {
            return Err(EnsembleError::EmptyMatrix(side));
        }
        let positions = n_upper_positions(side);
        let sets: Vec<BTreeSet<usize>> = match pattern {
            MatrixPattern::Iid => (0..positions).map(|p| BTreeSet::from([p])).collect(),
            MatrixPattern::SharedBlocks { width } => {
                if width == 0 {
                    return Err(EnsembleError::ZeroWidth);
                }
                let chunks = chunk_starts(side, width);
                let mut chunk_of = vec![0usize; positions];
                for (c, &(start, len)) in chunks.iter().enumerate() {
                    chunk_of[start..start + len].fill(c);
                }
                let n_chunks = chunks.len();
                (0..positions)
                    .map(|p| BTreeSet::from([chunk_of[p], n_chunks + p]))
                    .collect()
            }
        };
        let n_sources = match pattern {
            MatrixPattern::Iid => positions,
            MatrixPattern::SharedBlocks { width } => chunk_starts(side, width).len() + positions,
        };
        let hd = HyperDependence::new(n_sources, sets).expect("entry sources are valid");
        Ok(Ensemble {
            kind: Kind::HdSymmetric { side, pattern },
            structure: Structure::Hd(hd),
        })
    }

    /// Hermitian `side × side` sign matrix whose upper-diagonal entries are
    /// dependent only within declared neighborhoods.
    pub fn ld1_hermitian(side: usize, pattern: HermitianPattern) -> Result<Self, EnsembleError> {
        if side == 0 {
            return Err(EnsembleError::EmptyMatrix(side));
        }
        let positions = n_upper_positions(side);
        let neighborhoods: Vec<BTreeSet<usize>> = match pattern {
            HermitianPattern::Iid => (0..positions).map(|p| BTreeSet::from([p])).collect(),
            HermitianPattern::Paired => (0..positions)
                .map(|p| {
                    let base = p - p % 2;
                    if base + 1 < positions {
                        BTreeSet::from([base, base + 1])
                    } else {
                        BTreeSet::from([p])
                    }
                })
                .collect(),
        };
        let ld1 = Ld1Neighborhoods::new(neighborhoods).expect("pairs are valid neighborhoods");
        Ok(Ensemble {
            kind: Kind::Ld1Hermitian { side, pattern },
            structure: Structure::Ld1(ld1),
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Counterexample { .. } => "counterexample",
            Kind::MDependent { .. } => "m-dependent",
            Kind::ErTriangles { .. } => "er-triangles",
            Kind::HdSymmetric { .. } => "hd-symmetric",
            Kind::Ld1Hermitian { .. } => "ld1-hermitian",
        }
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn n_vars(&self) -> usize {
        match self.kind {
            Kind::Counterexample { n } => 2 * n,
            Kind::MDependent { n, .. } => n,
            Kind::ErTriangles { n, .. } => n * (n - 1) * (n - 2) / 6,
            Kind::HdSymmetric { side, .. } | Kind::Ld1Hermitian { side, .. } => {
                n_upper_positions(side)
            }
        }
    }

    /// Side length when the variables are matrix entries.
    pub fn matrix_side(&self) -> Option<usize> {
        match self.kind {
            Kind::HdSymmetric { side, .. } | Kind::Ld1Hermitian { side, .. } => Some(side),
            _ => None,
        }
    }

    /// Dependency graph of the variables. For the windowed ensemble this is
    /// the window-overlap graph, which is finer than the derived graph of
    /// the blocked factorization; for the others it follows the declared
    /// structure.
    pub fn dependency_graph(&self) -> DependencyGraph {
        match &self.kind {
            Kind::MDependent { n, m, .. } => {
                let mut edges = Vec::new();
                for i in 0..*n {
                    for d in 1..*m {
                        let j = (i + d) % n;
                        if i != j {
                            edges.push((i, j));
                        }
                    }
                }
                DependencyGraph::from_edges(*n, &edges).expect("window overlaps are simple edges")
            }
            _ => match &self.structure {
                Structure::Ld1(ld1) => ld1.graph(),
                Structure::Hd(hd) => hd.derived_graph(),
            },
        }
    }

    /// Pointwise (min, max) of each variable, when the kind admits one.
    pub fn summand_bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Counterexample { .. } => Some((-1.0, 1.0)),
            Kind::MDependent {
                m, family, source, ..
            } => Some(match (family, source) {
                (WindowFamily::WindowSum, SourceKind::Signs) => (-(m as f64), m as f64),
                (WindowFamily::WindowSum, SourceKind::Uniform01) => (0.0, m as f64),
                (WindowFamily::WindowXor, _) => (-1.0, 1.0),
                (WindowFamily::WindowMax, SourceKind::Signs) => (-1.0, 1.0),
                (WindowFamily::WindowMax, SourceKind::Uniform01) => (0.0, 1.0),
            }),
            Kind::ErTriangles { .. } => Some((0.0, 1.0)),
            _ => None,
        }
    }

    /// Exact per-variable variance, when the kind admits one.
    pub fn summand_variance(&self) -> Option<f64> {
        match self.kind {
            Kind::MDependent {
                m, family, source, ..
            } => {
                let m = m as f64;
                Some(match (family, source) {
                    (WindowFamily::WindowSum, SourceKind::Signs) => m,
                    (WindowFamily::WindowSum, SourceKind::Uniform01) => m / 12.0,
                    (WindowFamily::WindowXor, _) => 1.0,
                    (WindowFamily::WindowMax, SourceKind::Signs) => {
                        // max of m signs: P(all minus) = 2^-m.
                        let q = 0.5f64.powi(m as i32);
                        4.0 * q * (1.0 - q)
                    }
                    (WindowFamily::WindowMax, SourceKind::Uniform01) => {
                        m / (m + 2.0) - (m / (m + 1.0)).powi(2)
                    }
                })
            }
            Kind::ErTriangles { p, .. } => Some(p.powi(3) * (1.0 - p.powi(3))),
            Kind::Counterexample { .. } => Some(1.0),
            _ => None,
        }
    }

    /// Draws replica `replica` of the stream `seed`. Identical arguments
    /// always produce the identical realization.
    pub fn sample(&self, seed: u64, replica: u64) -> Realization {
        let mut rng = SplitMix64::substream(seed, replica);
        match &self.kind {
            Kind::Counterexample { n } => {
                let x: Vec<f64> = (0..*n).map(|_| rng.next_sign()).collect();
                let q = rng.next_sign();
                let mut vars = Vec::with_capacity(2 * n);
                for &xi in &x {
                    vars.push(xi);
                    vars.push(q * xi);
                }
                let mut sources = x;
                sources.push(q);
                Realization { vars, sources }
            }
            Kind::MDependent {
                n,
                m,
                family,
                source,
            } => {
                let draw = |rng: &mut SplitMix64| match source {
                    SourceKind::Signs => rng.next_sign(),
                    SourceKind::Uniform01 => rng.next_f64(),
                };
                let y: Vec<f64> = (0..*n).map(|_| draw(&mut rng)).collect();
                let vars = (0..*n)
                    .map(|i| {
                        let window = (0..*m).map(|d| y[(i + d) % n]);
                        match family {
                            WindowFamily::WindowSum => window.sum(),
                            WindowFamily::WindowXor => window.product(),
                            WindowFamily::WindowMax => window.fold(f64::NEG_INFINITY, f64::max),
                        }
                    })
                    .collect();
                Realization { vars, sources: y }
            }
            Kind::ErTriangles { n, p } => {
                let n_edges = n * (n - 1) / 2;
                let edges: Vec<f64> = (0..n_edges)
                    .map(|_| f64::from(u8::from(rng.next_f64() < *p)))
                    .collect();
                let edge = |a: usize, b: usize| edges[position_index(n - 1, a, b - 1)];
                let mut vars = Vec::with_capacity(self.n_vars());
                for i in 0..*n {
                    for j in i + 1..*n {
                        for k in j + 1..*n {
                            vars.push(edge(i, j) * edge(i, k) * edge(j, k));
                        }
                    }
                }
                Realization {
                    vars,
                    sources: edges,
                }
            }
            Kind::HdSymmetric { side, pattern } => {
                let positions = n_upper_positions(*side);
                match pattern {
                    MatrixPattern::Iid => {
                        let vars: Vec<f64> = (0..positions).map(|_| rng.next_sign()).collect();
                        Realization {
                            sources: vars.clone(),
                            vars,
                        }
                    }
                    MatrixPattern::SharedBlocks { width } => {
                        let chunks = chunk_starts(*side, *width);
                        let shared: Vec<f64> = (0..chunks.len()).map(|_| rng.next_sign()).collect();
                        let private: Vec<f64> = (0..positions).map(|_| rng.next_sign()).collect();
                        let mut vars = vec![0.0; positions];
                        for (c, &(start, len)) in chunks.iter().enumerate() {
                            for p in start..start + len {
                                vars[p] = (shared[c] + private[p]) / 2.0;
                            }
                        }
                        let mut sources = shared;
                        sources.extend_from_slice(&private);
                        Realization { vars, sources }
                    }
                }
            }
            Kind::Ld1Hermitian { side, pattern } => {
                let positions = n_upper_positions(*side);
                match pattern {
                    HermitianPattern::Iid => {
                        let vars: Vec<f64> = (0..positions).map(|_| rng.next_sign()).collect();
                        Realization {
                            sources: vars.clone(),
                            vars,
                        }
                    }
                    HermitianPattern::Paired => {
                        let n_pairs = positions / 2;
                        let bases: Vec<f64> = (0..n_pairs).map(|_| rng.next_sign()).collect();
                        let leftover = (positions % 2 == 1).then(|| rng.next_sign());
                        let q = rng.next_sign();
                        let mut vars = Vec::with_capacity(positions);
                        for &b in &bases {
                            vars.push(b);
                            vars.push(q * b);
                        }
                        let mut sources = bases;
                        if let Some(v) = leftover {
                            vars.push(v);
                            sources.push(v);
                        }
                        sources.push(q);
                        Realization { vars, sources }
                    }
                }
            }
        }
    }

    fn assemble_symmetric(&self, vars: &[f64], keep: Option<&BTreeSet<usize>>) -> SymMatrix {
        let side = self.matrix_side().expect("caller checked matrix kind");
        SymMatrix::from_fn(side, |i, j| {
            let p = position_index(side, i, j);
            match keep {
                Some(k) if !k.contains(&p) => 0.0,
                _ => vars[p],
            }
        })
    }

    fn assemble_complex(&self, vars: &[f64], keep: Option<&BTreeSet<usize>>) -> ComplexMatrix {
        let sym = self.assemble_symmetric(vars, keep);
        ComplexMatrix::from_fn(sym.n(), sym.n(), |i, j| Complex64::new(sym.get(i, j), 0.0))
    }

    /// Evaluates a statistic on one realization.
    pub fn evaluate(&self, stat: &Statistic, r: &Realization) -> Result<f64, EnsembleError> {
        let mismatch = || EnsembleError::StatisticMismatch {
            stat: stat.to_string(),
            ensemble: self.name().to_string(),
        };
        match stat {
            Statistic::Sum => Ok(r.vars.iter().sum()),
            Statistic::PairedProductHalfSum => {
                if !r.vars.len().is_multiple_of(2) {
                    return Err(mismatch());
                }
                Ok(r.vars.chunks_exact(2).map(|c| c[0] * c[1]).sum::<f64>() / 2.0)
            }
            Statistic::Eigenvalue { s } => {
                let side = self.matrix_side().ok_or_else(mismatch)?;
                if *s == 0 || *s > side {
                    return Err(EnsembleError::EigenIndexOutOfRange { s: *s, n: side });
                }
                let m = self.assemble_symmetric(&r.vars, None);
                Ok(m.eigenvalues_desc()[s - 1])
            }
            Statistic::OperatorNorm => {
                self.matrix_side().ok_or_else(mismatch)?;
                Ok(self.assemble_complex(&r.vars, None).operator_norm())
            }
            Statistic::MaskedOperatorNorm { keep } => {
                self.matrix_side().ok_or_else(mismatch)?;
                if let Some(&bad) = keep.iter().find(|&&p| p >= r.vars.len()) {
                    return Err(EnsembleError::MaskOutOfRange(bad));
                }
                Ok(self.assemble_complex(&r.vars, Some(keep)).operator_norm())
            }
            Statistic::BallDistance { radius } => {
                if r.vars.iter().any(|v| v.abs() != 1.0) {
                    return Err(mismatch());
                }
                let x: Vec<bool> = r.vars.iter().map(|&v| v > 0.0).collect();
                let center = vec![true; x.len()];
                Ok(convex_distance_to_hamming_ball(&x, &center, *radius))
            }
        }
    }

    /// Parses `{"name": ..., "params": {...}}`.
    pub fn from_spec(spec: &serde_json::Value) -> Result<Self, EnsembleError> {
        let bad = |msg: &str| EnsembleError::BadSpec(msg.to_string());
        let name = spec
            .get("name")
            .and_then(|v| v.as_str())
            .ok_or_else(|| bad("missing name"))?;
        let params = spec
            .get("params")
            .and_then(|v| v.as_object())
            .ok_or_else(|| bad("missing params object"))?;
        let get_usize = |key: &str| {
            params
                .get(key)
                .and_then(|v| v.as_u64())
                .map(|v| v as usize)
                .ok_or_else(|| bad(&format!("missing integer param {key:?}")))
        };
        match name {
            "counterexample" => Ensemble::counterexample(get_usize("n")?),
            "m-dependent" => {
                let family = params
                    .get("family")
                    .and_then(|v| v.as_str())
                    .unwrap_or("window-sum")
                    .parse::<WindowFamily>()
                    .map_err(EnsembleError::BadSpec)?;
                let source = match params.get("source").and_then(|v| v.as_str()) {
                    None | Some("signs") => SourceKind::Signs,
                    Some("uniform01") => SourceKind::Uniform01,
                    Some(other) => return Err(bad(&format!("unknown source {other:?}"))),
                };
                Ensemble::m_dependent(get_usize("n")?, get_usize("m")?, family, source)
            }
            "er-triangles" => {
                let p = params
                    .get("p")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| bad("missing number param \"p\""))?;
                Ensemble::er_triangles(get_usize("n")?, p)
            }
            "hd-symmetric" => {
                let pattern = match params.get("pattern").and_then(|v| v.as_str()) {
                    Some("iid") => MatrixPattern::Iid,
                    Some("shared-blocks") => MatrixPattern::SharedBlocks {
                        width: get_usize("width")?,
                    },
                    other => return Err(bad(&format!("unknown pattern {other:?}"))),
                };
                Ensemble::hd_symmetric(get_usize("n")?, pattern)
            }
            "ld1-hermitian" => {
                let pattern = match params.get("pattern").and_then(|v| v.as_str()) {
                    Some("iid") => HermitianPattern::Iid,
                    Some("paired") => HermitianPattern::Paired,
                    other => return Err(bad(&format!("unknown pattern {other:?}"))),
                };
                Ensemble::ld1_hermitian(get_usize("n")?, pattern)
            }
            other => Err(bad(&format!("unknown ensemble {other:?}"))),
        }
    }

    /// The `{"name", "params"}` spec that reproduces this ensemble.
    pub fn to_spec(&self) -> serde_json::Value {
        use serde_json::json;
        match &self.kind {
            Kind::Counterexample { n } => json!({"name": "counterexample", "params": {"n": n}}),
            Kind::MDependent {
                n,
                m,
                family,
                source,
            } => {
                let family = match family {
                    WindowFamily::WindowSum => "window-sum",
                    WindowFamily::WindowXor => "window-xor",
                    WindowFamily::WindowMax => "window-max",
                };
                let source = match source {
                    SourceKind::Signs => "signs",
                    SourceKind::Uniform01 => "uniform01",
                };
                json!({"name": "m-dependent",
                       "params": {"n": n, "m": m, "family": family, "source": source}})
            }
            Kind::ErTriangles { n, p } => {
                json!({"name": "er-triangles", "params": {"n": n, "p": p}})
            }
            Kind::HdSymmetric { side, pattern } => match pattern {
                MatrixPattern::Iid => {
                    json!({"name": "hd-symmetric", "params": {"n": side, "pattern": "iid"}})
                }
                MatrixPattern::SharedBlocks { width } => json!({
                    "name": "hd-symmetric",
                    "params": {"n": side, "pattern": "shared-blocks", "width": width}
                }),
            },
            Kind::Ld1Hermitian { side, pattern } => {
                let pattern = match pattern {
                    HermitianPattern::Iid => "iid",
                    HermitianPattern::Paired => "paired",
                };
                json!({"name": "ld1-hermitian", "params": {"n": side, "pattern": pattern}})
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depstruct::HdParams;

    #[test]
    fn splitmix_matches_the_reference_stream() {
        // First three outputs for seed 0 from the reference implementation.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(rng.next_u64(), 0x6e789e6aa1b965f4);
        assert_eq!(rng.next_u64(), 0x06c45d188009454f);
    }

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let a: Vec<u64> = {
            let mut r = SplitMix64::substream(7, 3);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SplitMix64::substream(7, 3);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<u64> = {
            let mut r = SplitMix64::substream(7, 4);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn counterexample_statistic_is_half_n_times_global_sign() {
        let e = Ensemble::counterexample(10).unwrap();
        for replica in 0..200 {
            let r = e.sample(42, replica);
            let f = e
                .evaluate(&Statistic::PairedProductHalfSum, &r)
                .unwrap();
            let q = *r.sources.last().unwrap();
            assert_eq!(f, 5.0 * q, "replica {replica}");
            // Every pair contributes the same ±1/2.
            for c in r.vars.chunks_exact(2) {
                assert_eq!(c[0] * c[1] / 2.0, q / 2.0);
            }
        }
    }

    #[test]
    fn counterexample_rejects_odd_counts() {
        assert_eq!(
            Ensemble::counterexample(7).unwrap_err(),
            EnsembleError::OddPairCount(7)
        );
    }

    #[test]
    fn window_blocks_give_expected_factorization_parameters() {
        let e = Ensemble::m_dependent(6, 1, WindowFamily::WindowSum, SourceKind::Signs).unwrap();
        let Structure::Hd(hd) = e.structure() else {
            panic!("windowed ensemble declares a factorization")
        };
        assert_eq!(hd.params(), HdParams { k: 1, l: 1 });

        let e = Ensemble::m_dependent(6, 2, WindowFamily::WindowSum, SourceKind::Signs).unwrap();
        let Structure::Hd(hd) = e.structure() else {
            panic!()
        };
        assert_eq!(hd.params(), HdParams { k: 2, l: 3 });

        // Remainder absorbed by the last block: readers grow accordingly.
        let e = Ensemble::m_dependent(7, 3, WindowFamily::WindowSum, SourceKind::Signs).unwrap();
        let Structure::Hd(hd) = e.structure() else {
            panic!()
        };
        assert_eq!(hd.params(), HdParams { k: 2, l: 6 });
    }

    #[test]
    fn window_values_recompute_from_sources() {
        let e = Ensemble::m_dependent(9, 3, WindowFamily::WindowSum, SourceKind::Uniform01).unwrap();
        let r = e.sample(5, 17);
        for i in 0..9 {
            let expect = r.sources[i] + r.sources[(i + 1) % 9] + r.sources[(i + 2) % 9];
            assert!((r.vars[i] - expect).abs() < 1e-15);
        }
        let e = Ensemble::m_dependent(8, 2, WindowFamily::WindowXor, SourceKind::Signs).unwrap();
        let r = e.sample(5, 17);
        for i in 0..8 {
            assert_eq!(r.vars[i], r.sources[i] * r.sources[(i + 1) % 8]);
        }
    }

    #[test]
    fn xor_family_requires_sign_sources() {
        assert_eq!(
            Ensemble::m_dependent(4, 2, WindowFamily::WindowXor, SourceKind::Uniform01)
                .unwrap_err(),
            EnsembleError::XorNeedsSigns
        );
    }

    #[test]
    fn window_overlap_graph_is_a_circulant() {
        let e = Ensemble::m_dependent(8, 2, WindowFamily::WindowSum, SourceKind::Signs).unwrap();
        let g = e.dependency_graph();
        assert_eq!(g.max_degree(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(0, 7));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn triangle_ensemble_matches_construction_oracles() {
        let e = Ensemble::er_triangles(5, 0.5).unwrap();
        let Structure::Hd(hd) = e.structure() else {
            panic!()
        };
        assert_eq!(hd.params(), HdParams { k: 3, l: 3 });
        // Each triangle overlaps 3(n-3) others in the derived graph.
        assert_eq!(hd.derived_graph().max_degree(), 6);

        let full = Ensemble::er_triangles(6, 1.0).unwrap();
        let r = full.sample(1, 0);
        let count = full.evaluate(&Statistic::Sum, &r).unwrap();
        assert_eq!(count, 20.0, "all C(6,3) triangles present at p = 1");
    }

    #[test]
    fn shared_block_matrix_has_bounded_entries_and_declared_overlap() {
        let e = Ensemble::hd_symmetric(6, MatrixPattern::SharedBlocks { width: 2 }).unwrap();
        let Structure::Hd(hd) = e.structure() else {
            panic!()
        };
        assert_eq!(hd.params(), HdParams { k: 2, l: 2 });
        for replica in 0..50 {
            let r = e.sample(9, replica);
            assert!(r.vars.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        let iid = Ensemble::hd_symmetric(4, MatrixPattern::Iid).unwrap();
        let Structure::Hd(hd) = iid.structure() else {
            panic!()
        };
        assert_eq!(hd.params(), HdParams { k: 1, l: 1 });
    }

    #[test]
    fn eigenvalue_statistic_sorts_descending() {
        let e = Ensemble::hd_symmetric(5, MatrixPattern::Iid).unwrap();
        let r = e.sample(3, 1);
        let l1 = e.evaluate(&Statistic::Eigenvalue { s: 1 }, &r).unwrap();
        let l5 = e.evaluate(&Statistic::Eigenvalue { s: 5 }, &r).unwrap();
        assert!(l1 >= l5);
        assert_eq!(
            e.evaluate(&Statistic::Eigenvalue { s: 6 }, &r).unwrap_err(),
            EnsembleError::EigenIndexOutOfRange { s: 6, n: 5 }
        );
    }

    #[test]
    fn paired_hermitian_entries_follow_the_global_sign() {
        let e = Ensemble::ld1_hermitian(6, HermitianPattern::Paired).unwrap();
        let Structure::Ld1(ld1) = e.structure() else {
            panic!()
        };
        // 21 positions: 10 pairs and one leftover singleton.
        assert_eq!(ld1.graph().edge_count(), 10);
        for replica in 0..20 {
            let r = e.sample(11, replica);
            let q = *r.sources.last().unwrap();
            assert_eq!(r.vars.len(), 21);
            for t in 0..10 {
                assert_eq!(r.vars[2 * t + 1], q * r.vars[2 * t]);
                assert_eq!(r.vars[2 * t].abs(), 1.0);
            }
            assert_eq!(r.vars[20].abs(), 1.0);
        }
    }

    #[test]
    fn masked_norm_drops_excluded_entries() {
        let e = Ensemble::ld1_hermitian(3, HermitianPattern::Iid).unwrap();
        let r = e.sample(2, 0);
        let full = e.evaluate(&Statistic::OperatorNorm, &r).unwrap();
        assert!(full > 0.0);
        let none = e
            .evaluate(
                &Statistic::MaskedOperatorNorm {
                    keep: BTreeSet::new(),
                },
                &r,
            )
            .unwrap();
        assert_eq!(none, 0.0);
        let all: BTreeSet<usize> = (0..6).collect();
        let kept = e
            .evaluate(&Statistic::MaskedOperatorNorm { keep: all }, &r)
            .unwrap();
        assert!((kept - full).abs() < 1e-12);
    }

    #[test]
    fn ball_distance_requires_sign_variables() {
        let e = Ensemble::m_dependent(6, 2, WindowFamily::WindowXor, SourceKind::Signs).unwrap();
        let r = e.sample(4, 2);
        let d = e
            .evaluate(&Statistic::BallDistance { radius: 0 }, &r)
            .unwrap();
        let disagreements = r.vars.iter().filter(|&&v| v < 0.0).count() as f64;
        if disagreements > 0.0 {
            assert!((d - disagreements / disagreements.sqrt()).abs() < 1e-12);
        } else {
            assert_eq!(d, 0.0);
        }
        let u = Ensemble::m_dependent(6, 2, WindowFamily::WindowSum, SourceKind::Uniform01)
            .unwrap();
        let r = u.sample(4, 2);
        assert!(matches!(
            u.evaluate(&Statistic::BallDistance { radius: 0 }, &r),
            Err(EnsembleError::StatisticMismatch { .. })
        ));
    }

    #[test]
    fn samples_are_reproducible_and_replicas_differ() {
        let e = Ensemble::hd_symmetric(8, MatrixPattern::SharedBlocks { width: 3 }).unwrap();
        assert_eq!(e.sample(77, 5), e.sample(77, 5));
        assert_ne!(e.sample(77, 5), e.sample(77, 6));
        assert_ne!(e.sample(77, 5), e.sample(78, 5));
    }

    #[test]
    fn specs_round_trip_through_json() {
        let ensembles = vec![
            Ensemble::counterexample(10).unwrap(),
            Ensemble::m_dependent(20, 2, WindowFamily::WindowXor, SourceKind::Signs).unwrap(),
            Ensemble::er_triangles(6, 0.25).unwrap(),
            Ensemble::hd_symmetric(6, MatrixPattern::SharedBlocks { width: 2 }).unwrap(),
            Ensemble::ld1_hermitian(6, HermitianPattern::Paired).unwrap(),
        ];
        for e in ensembles {
            let spec = e.to_spec();
            let back = Ensemble::from_spec(&spec).unwrap();
            assert_eq!(back, e, "spec {spec}");
        }
        assert!(matches!(
            Ensemble::from_spec(&serde_json::json!({"name": "nope", "params": {}})),
            Err(EnsembleError::BadSpec(_))
        ));
    }
}
