//! Brute-force certification of self-bounding properties on finite domains.
//!
//! For a function `f` on a product domain `Λ_0 × ... × Λ_{n-1}` write
//! `g_i(x_{-i}) = inf_{v} f(..., x_{i-1}, v, x_{i+1}, ...)` for the infimum
//! over the `i`-th coordinate. The certified properties, for parameters
//! `a, b >= 0`, are:
//!
//! * **`(a, b)`-self-bounding**: `0 <= f(x) - g_i(x_{-i}) <= 1` for every
//!   `i`, and `Σ_i (f(x) - g_i(x_{-i})) <= a f(x) + b`.
//! * **weakly `(a, b)`-self-bounding**:
//!   `Σ_i (f(x) - g_i(x_{-i}))² <= a f(x) + b`.
//! * **α-`(a, b)`-self-bounding**, for caller-supplied nonnegative tables
//!   `α_i`: the two-point inequality
//!   `f(x) - f(y) <= Σ_{i: x_i ≠ y_i} α_i(x)` for all pairs, `α_i(x) <= 1`,
//!   and `Σ_i α_i(x) <= a f(x) + b`.
//! * **weakly α-`(a, b)`-self-bounding**: the same two-point inequality and
//!   `Σ_i α_i(x)² <= a f(x) + b`, with no cap on individual `α_i`.
//!
//! Certification enumerates the whole domain (and, for α variants, all
//! ordered pairs), so it is deliberately a desk-scale instrument. Values are
//! either exact rationals, in which case every comparison is exact, or
//! floats, in which case conditions get a fixed `1e-12` absolute slack.
//!
//! The module also evaluates Talagrand's convex distance
//! `d_T(x, S) = min { ‖z‖ : z ∈ conv{ (1[x_i ≠ y_i])_i : y ∈ S } }`
//! exactly, and certifies that `d_T²(·, S)` is weakly α-(4, 0)-self-bounding
//! with `α(x) = 2 ẑ(x)`, where `ẑ(x)` is the minimizing hull point.

use crate::depstruct::HyperDependence;
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on tabulated domain sizes.
pub const DOMAIN_CAP: usize = 1 << 20;
/// Ceiling for the quadratic two-point sweep of the α variants.
pub const PAIR_CHECK_CAP: usize = 1 << 12;
/// Largest point set accepted by the exact convex-distance solver.
pub const CONVEX_DISTANCE_MAX_POINTS: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertifyError {
    #[error("values length {got} does not match domain size {expected}")]
    ValueLengthMismatch { got: usize, expected: usize },
    #[error("domain has {size} points, above the cap {cap}")]
    DomainTooLarge { size: usize, cap: usize },
    #[error("coordinate {0} has an empty alphabet")]
    EmptyAlphabet(usize),
    #[error("parameter {0} must be nonnegative")]
    NegativeParam(&'static str),
    #[error("variant requires α tables but none were supplied")]
    MissingAlpha,
    #[error("variant takes no α tables but some were supplied")]
    UnexpectedAlpha,
    #[error("expected {expected} α tables on the same domain as f, got {got}")]
    AlphaShapeMismatch { got: usize, expected: usize },
    #[error("α_{coord} is negative at point index {index}")]
    NegativeAlpha { coord: usize, index: usize },
    #[error("point set for convex distance is empty")]
    EmptyPointSet,
    #[error("point set has {got} points, above the exact-solver limit {limit}")]
    TooManyPoints { got: usize, limit: usize },
    #[error("point {index} has dimension {got}, expected {expected}")]
    PointDimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("point {index} leaves the declared domain at coordinate {coord}")]
    PointOutOfDomain { index: usize, coord: usize },
    #[error("variable {var}: map table length {got} does not match its source alphabets ({expected})")]
    MapLengthMismatch {
        var: usize,
        got: usize,
        expected: usize,
    },
    #[error("variable {var}: map value {value} outside its alphabet of size {size}")]
    MapValueOutOfRange {
        var: usize,
        value: usize,
        size: usize,
    },
    #[error("lift needs {expected} source alphabets, got {got}")]
    SourceAlphabetMismatch { got: usize, expected: usize },
    #[error("lift is undefined when no source is read (l = 0)")]
    NoReaders,
}

/// Value domain for tabulated functions: exact rationals or floats with a
/// fixed comparison slack.
pub trait Scalar: Clone + PartialOrd + std::fmt::Debug {
    /// Additive slack granted when deciding whether a condition holds:
    /// zero for exact types.
    fn slack() -> Self;
    fn zero() -> Self;
    fn from_usize(n: usize) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div_usize(&self, n: usize) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn slack() -> f64 {
        1e-12
    }
    fn zero() -> f64 {
        0.0
    }
    fn from_usize(n: usize) -> f64 {
        n as f64
    }
    fn add(&self, rhs: &f64) -> f64 {
        self + rhs
    }
    fn sub(&self, rhs: &f64) -> f64 {
        self - rhs
    }
    fn mul(&self, rhs: &f64) -> f64 {
        self * rhs
    }
    fn div_usize(&self, n: usize) -> f64 {
        self / n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn slack() -> Rational {
        rational::int(0)
    }
    fn zero() -> Rational {
        rational::int(0)
    }
    fn from_usize(n: usize) -> Rational {
        rational::int(n as i64)
    }
    fn add(&self, rhs: &Rational) -> Rational {
        self + rhs
    }
    fn sub(&self, rhs: &Rational) -> Rational {
        self - rhs
    }
    fn mul(&self, rhs: &Rational) -> Rational {
        self * rhs
    }
    fn div_usize(&self, n: usize) -> Rational {
        self / rational::int(n as i64)
    }
    fn to_f64(&self) -> f64 {
        rational::to_f64(self)
    }
}

/// Function tabulated over a finite product domain. `sizes[i]` is the
/// alphabet size of coordinate `i`; values are stored row-major with the
/// last coordinate fastest, so the point `(x_0, ..., x_{n-1})` lives at
/// index `Σ_i x_i · Π_{j>i} sizes[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction<S> {
    sizes: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> TabulatedFunction<S> {
    pub fn new(sizes: Vec<usize>, values: Vec<S>) -> Result<Self, CertifyError> {
        let expected = checked_domain_size(&sizes)?;
        if values.len() != expected {
            return Err(CertifyError::ValueLengthMismatch {
                got: values.len(),
                expected,
            });
        }
        Ok(TabulatedFunction { sizes, values })
    }

    /// Tabulates `f` over the whole domain.
    pub fn from_fn(sizes: Vec<usize>, mut f: impl FnMut(&[usize]) -> S) -> Result<Self, CertifyError> {
        let size = checked_domain_size(&sizes)?;
        let mut point = vec![0usize; sizes.len()];
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            values.push(f(&point));
            advance(&mut point, &sizes);
        }
        TabulatedFunction::new(sizes, values)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_coords(&self) -> usize {
        self.sizes.len()
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn index_of(&self, point: &[usize]) -> usize {
        debug_assert_eq!(point.len(), self.sizes.len());
        point
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&x, &s)| acc * s + x)
    }

    pub fn point_of(&self, mut index: usize) -> Vec<usize> {
        let mut point = vec![0usize; self.sizes.len()];
        for i in (0..self.sizes.len()).rev() {
            point[i] = index % self.sizes[i];
            index /= self.sizes[i];
        }
        point
    }

    pub fn value(&self, point: &[usize]) -> &S {
        &self.values[self.index_of(point)]
    }
}

fn checked_domain_size(sizes: &[usize]) -> Result<usize, CertifyError> {
    let mut size: usize = 1;
    for (i, &s) in sizes.iter().enumerate() {
        if s == 0 {
            return Err(CertifyError::EmptyAlphabet(i));
        }
        size = size.checked_mul(s).filter(|&v| v <= DOMAIN_CAP).ok_or(
            CertifyError::DomainTooLarge {
                size: usize::MAX,
                cap: DOMAIN_CAP,
            },
        )?;
    }
    Ok(size)
}

/// Advances `point` one step in row-major order (last coordinate fastest).
fn advance(point: &mut [usize], sizes: &[usize]) {
    for i in (0..point.len()).rev() {
        point[i] += 1;
        if point[i] < sizes[i] {
            return;
        }
        point[i] = 0;
    }
}

/// Infimum marginals `g_i`: one table per coordinate, over the domain with
/// coordinate `i` removed.
pub fn inf_marginals<S: Scalar>(f: &TabulatedFunction<S>) -> Vec<TabulatedFunction<S>> {
    let n = f.n_coords();
    let total = f.domain_size();
    (0..n)
        .map(|i| {
            let size_i = f.sizes[i];
            let low: usize = f.sizes[i + 1..].iter().product();
            let reduced_sizes: Vec<usize> = f
                .sizes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &s)| s)
                .collect();
            let mut reduced: Vec<Option<S>> = vec![None; total / size_i];
            for idx in 0..total {
                let hi = idx / (size_i * low);
                let lo = idx % low;
                let rid = hi * low + lo;
                let v = &f.values[idx];
                match &reduced[rid] {
                    Some(cur) if cur <= v => {}
                    _ => reduced[rid] = Some(v.clone()),
                }
            }
            TabulatedFunction::new(
                reduced_sizes,
                reduced.into_iter().map(|v| v.expect("every slot visited")).collect(),
            )
            .expect("reduced domain is within the cap")
        })
        .collect()
}

/// Which self-bounding property to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Sb,
    WeakSb,
    AlphaSb,
    WeakAlphaSb,
}

impl Variant {
    pub fn needs_alpha(self) -> bool {
        matches!(self, Variant::AlphaSb | Variant::WeakAlphaSb)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Variant::Sb => "sb",
            Variant::WeakSb => "weak-sb",
            Variant::AlphaSb => "alpha-sb",
            Variant::WeakAlphaSb => "weak-alpha-sb",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sb" => Ok(Variant::Sb),
            "weak-sb" => Ok(Variant::WeakSb),
            "alpha-sb" => Ok(Variant::AlphaSb),
            "weak-alpha-sb" => Ok(Variant::WeakAlphaSb),
            other => Err(format!(
                "unknown variant {other:?}; expected sb, weak-sb, alpha-sb, or weak-alpha-sb"
            )),
        }
    }
}

/// Location and label of the extremal condition found by certification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Name of the condition attaining the worst value.
    pub condition: String,
    pub x: Vec<usize>,
    /// Second point for the two-point conditions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<usize>>,
}

/// Result of a certification sweep. `worst_violation` is the maximum of
/// `lhs - rhs` over every condition of the variant, so the property holds
/// exactly when it is nonpositive (up to the scalar's slack).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub holds: bool,
    pub worst_violation: f64,
    pub witness: Option<Witness>,
}

struct Worst<S> {
    value: Option<S>,
    witness: Option<Witness>,
}

impl<S: Scalar> Worst<S> {
    fn new() -> Self {
        Worst {
            value: None,
            witness: None,
        }
    }

    fn update(&mut self, candidate: S, make_witness: impl FnOnce() -> Witness) {
        if self.value.as_ref().is_none_or(|cur| candidate > *cur) {
            self.value = Some(candidate);
            self.witness = Some(make_witness());
        }
    }
}

/// Certifies that `f` satisfies `variant` with parameters `(a, b)`,
/// enumerating the full domain. α tables are required by (and only by) the
/// α variants: `alpha[i]` must live on the same domain as `f` and be
/// nonnegative everywhere.
pub fn certify<S: Scalar>(
    f: &TabulatedFunction<S>,
    variant: Variant,
    a: &S,
    b: &S,
    alpha: Option<&[TabulatedFunction<S>]>,
) -> Result<CertificateReport, CertifyError> {
    if *a < S::zero() {
        return Err(CertifyError::NegativeParam("a"));
    }
    if *b < S::zero() {
        return Err(CertifyError::NegativeParam("b"));
    }
    match (variant.needs_alpha(), alpha) {
        (true, None) => return Err(CertifyError::MissingAlpha),
        (false, Some(_)) => return Err(CertifyError::UnexpectedAlpha),
        _ => {}
    }

    let mut worst = Worst::new();
    match variant {
        Variant::Sb | Variant::WeakSb => {
            certify_marginal_variant(f, variant, a, b, &mut worst);
        }
        Variant::AlphaSb | Variant::WeakAlphaSb => {
            let alpha = alpha.expect("checked above");
            validate_alpha(f, alpha)?;
            certify_alpha_variant(f, variant, a, b, alpha, &mut worst)?;
        }
    }

    let violation = worst.value.expect("domain is nonempty");
    let holds = violation <= S::slack();
    Ok(CertificateReport {
        variant,
        a: a.to_f64(),
        b: b.to_f64(),
        holds,
        worst_violation: violation.to_f64(),
        witness: worst.witness,
    })
}

fn certify_marginal_variant<S: Scalar>(
    f: &TabulatedFunction<S>,
    variant: Variant,
    a: &S,
    b: &S,
    worst: &mut Worst<S>,
) {
    let n = f.n_coords();
    let marginals = inf_marginals(f);
    let lows: Vec<usize> = (0..n).map(|i| f.sizes[i + 1..].iter().product()).collect();
    let mut point = vec![0usize; n];
    let one = S::from_usize(1);
    for idx in 0..f.domain_size() {
        let fx = &f.values[idx];
        let mut total = S::zero();
        for i in 0..n {
            let hi = idx / (f.sizes[i] * lows[i]);
            let rid = hi * lows[i] + idx % lows[i];
            let d = fx.sub(&marginals[i].values[rid]);
            // With infimum marginals d >= 0 automatically; it is still
            // reported so the slack of the lower range shows up.
            worst.update(S::zero().sub(&d), || Witness {
                condition: format!("increment-nonnegative[{i}]"),
                x: point.clone(),
                y: None,
            });
            match variant {
                Variant::Sb => {
                    worst.update(d.sub(&one), || Witness {
                        condition: format!("increment-at-most-one[{i}]"),
                        x: point.clone(),
                        y: None,
                    });
                    total = total.add(&d);
                }
                Variant::WeakSb => total = total.add(&d.mul(&d)),
                _ => unreachable!(),
            }
        }
        let budget = a.mul(fx).add(b);
        let label = match variant {
            Variant::Sb => "increment-total",
            Variant::WeakSb => "squared-increment-total",
            _ => unreachable!(),
        };
        worst.update(total.sub(&budget), || Witness {
            condition: label.to_string(),
            x: point.clone(),
            y: None,
        });
        advance(&mut point, &f.sizes);
    }
}

fn validate_alpha<S: Scalar>(
    f: &TabulatedFunction<S>,
    alpha: &[TabulatedFunction<S>],
) -> Result<(), CertifyError> {
    if alpha.len() != f.n_coords() || alpha.iter().any(|t| t.sizes != f.sizes) {
        return Err(CertifyError::AlphaShapeMismatch {
            got: alpha.len(),
            expected: f.n_coords(),
        });
    }
    for (coord, table) in alpha.iter().enumerate() {
        if let Some(index) = table.values.iter().position(|v| *v < S::zero()) {
            return Err(CertifyError::NegativeAlpha { coord, index });
        }
    }
    Ok(())
}

fn certify_alpha_variant<S: Scalar>(
    f: &TabulatedFunction<S>,
    variant: Variant,
    a: &S,
    b: &S,
    alpha: &[TabulatedFunction<S>],
    worst: &mut Worst<S>,
) -> Result<(), CertifyError> {
    let size = f.domain_size();
    if size > PAIR_CHECK_CAP {
        return Err(CertifyError::DomainTooLarge {
            size,
            cap: PAIR_CHECK_CAP,
        });
    }
    let n = f.n_coords();
    let one = S::from_usize(1);
    let points: Vec<Vec<usize>> = (0..size).map(|i| f.point_of(i)).collect();

    for (idx, x) in points.iter().enumerate() {
        let fx = &f.values[idx];
        let mut total = S::zero();
        for (i, alpha_i) in alpha.iter().enumerate() {
            let av = &alpha_i.values[idx];
            match variant {
                Variant::AlphaSb => {
                    worst.update(av.sub(&one), || Witness {
                        condition: format!("alpha-at-most-one[{i}]"),
                        x: x.clone(),
                        y: None,
                    });
                    total = total.add(av);
                }
                Variant::WeakAlphaSb => total = total.add(&av.mul(av)),
                _ => unreachable!(),
            }
        }
        let budget = a.mul(fx).add(b);
        let label = match variant {
            Variant::AlphaSb => "alpha-total",
            Variant::WeakAlphaSb => "alpha-squared-total",
            _ => unreachable!(),
        };
        worst.update(total.sub(&budget), || Witness {
            condition: label.to_string(),
            x: x.clone(),
            y: None,
        });
    }

    // Two-point inequality over all ordered pairs.
    for (xi, x) in points.iter().enumerate() {
        for (yi, y) in points.iter().enumerate() {
            if xi == yi {
                continue;
            }
            let mut allowance = S::zero();
            for i in 0..n {
                if x[i] != y[i] {
                    allowance = allowance.add(&alpha[i].values[xi]);
                }
            }
            let gap = f.values[xi].sub(&f.values[yi]).sub(&allowance);
            worst.update(gap, || Witness {
                condition: "two-point".to_string(),
                x: x.clone(),
                y: Some(y.clone()),
            });
        }
    }
    Ok(())
}

/// Map table of one factorized variable: entry `t` gives the variable's
/// value when its sources (in increasing source order, last fastest) sit at
/// the mixed-radix point `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceMap {
    pub values: Vec<usize>,
}

/// Composes `h(y) = f(x(y)) / l` on the source domain, where variable `i`
/// of `x(y)` is `maps[i]` applied to the sources `hd.source_set(i)` and `l`
/// is the maximal number of readers of a source.
///
/// When `f` is certified α-`(a, b)`-self-bounding, `h` is
/// `(k a, (k/l) b)`-self-bounding, and when `f` is certified weakly
/// α-`(a, b)`-self-bounding, `h` is weakly `(k a, (k/l) b)`-self-bounding;
/// [`hd_transfer`] checks both ends of that implication.
pub fn hd_lift<S: Scalar>(
    f: &TabulatedFunction<S>,
    hd: &HyperDependence,
    y_sizes: &[usize],
    maps: &[SourceMap],
) -> Result<TabulatedFunction<S>, CertifyError> {
    let (composed, l) = compose(f, hd, y_sizes, maps)?;
    let values = composed.values.iter().map(|v| v.div_usize(l)).collect();
    TabulatedFunction::new(composed.sizes, values)
}

/// `f(x(y))` without the `1/l` normalization, plus `l`.
fn compose<S: Scalar>(
    f: &TabulatedFunction<S>,
    hd: &HyperDependence,
    y_sizes: &[usize],
    maps: &[SourceMap],
) -> Result<(TabulatedFunction<S>, usize), CertifyError> {
    let n = hd.n_vars();
    if f.n_coords() != n || maps.len() != n {
        return Err(CertifyError::AlphaShapeMismatch {
            got: maps.len(),
            expected: n,
        });
    }
    if y_sizes.len() != hd.n_sources() {
        return Err(CertifyError::SourceAlphabetMismatch {
            got: y_sizes.len(),
            expected: hd.n_sources(),
        });
    }
    let l = hd.params().l;
    if l == 0 {
        return Err(CertifyError::NoReaders);
    }
    for (var, map) in maps.iter().enumerate() {
        let expected: usize = hd
            .source_set(var)
            .iter()
            .map(|&j| y_sizes[j])
            .product();
        if map.values.len() != expected {
            return Err(CertifyError::MapLengthMismatch {
                var,
                got: map.values.len(),
                expected,
            });
        }
        if let Some(&bad) = map.values.iter().find(|&&v| v >= f.sizes[var]) {
            return Err(CertifyError::MapValueOutOfRange {
                var,
                value: bad,
                size: f.sizes[var],
            });
        }
    }
    let y_domain = checked_domain_size(y_sizes)?;
    let sources: Vec<Vec<usize>> = (0..n)
        .map(|i| hd.source_set(i).iter().copied().collect())
        .collect();
    let mut y_point = vec![0usize; y_sizes.len()];
    let mut values = Vec::with_capacity(y_domain);
    let mut x_point = vec![0usize; n];
    for _ in 0..y_domain {
        for i in 0..n {
            let t = sources[i]
                .iter()
                .fold(0usize, |acc, &j| acc * y_sizes[j] + y_point[j]);
            x_point[i] = maps[i].values[t];
        }
        values.push(f.value(&x_point).clone());
        advance(&mut y_point, y_sizes);
    }
    Ok((TabulatedFunction::new(y_sizes.to_vec(), values)?, l))
}

/// Both ends of the factorization transfer for a certified premise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// Certificate of `f` under the requested α variant.
    pub premise: CertificateReport,
    /// Certificate of `h = f(x(y))/l` under the transferred variant and the
    /// scaled parameters `(k a, (k/l) b)`.
    pub conclusion: CertificateReport,
    /// For the weak premise only: the worst value of `|h(z) - h(z')| - 1`
    /// over single-source changes, which the transfer also asserts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_increment_violation: Option<f64>,
    /// False exactly when the premise holds but some asserted conclusion
    /// fails.
    pub consistent: bool,
}

/// Certifies the premise on `f`, lifts to `h`, and certifies the transferred
/// conclusion. `variant` must be one of the two α variants.
#[allow(clippy::too_many_arguments)]
pub fn hd_transfer<S: Scalar>(
    f: &TabulatedFunction<S>,
    hd: &HyperDependence,
    y_sizes: &[usize],
    maps: &[SourceMap],
    variant: Variant,
    a: &S,
    b: &S,
    alpha: &[TabulatedFunction<S>],
) -> Result<TransferReport, CertifyError> {
    if !variant.needs_alpha() {
        return Err(CertifyError::MissingAlpha);
    }
    let premise = certify(f, variant, a, b, Some(alpha))?;
    let params = hd.params();
    let h = hd_lift(f, hd, y_sizes, maps)?;
    let a_out = a.mul(&S::from_usize(params.k));
    let b_out = b.mul(&S::from_usize(params.k)).div_usize(params.l);
    let (conclusion, unit_violation) = match variant {
        Variant::AlphaSb => (certify(&h, Variant::Sb, &a_out, &b_out, None)?, None),
        Variant::WeakAlphaSb => {
            let report = certify(&h, Variant::WeakSb, &a_out, &b_out, None)?;
            let v = unit_increment_violation(&h);
            (report, Some(v.to_f64()))
        }
        _ => unreachable!(),
    };
    let lipschitz_ok = unit_violation.is_none_or(|v| v <= S::slack().to_f64());
    let consistent = !premise.holds || (conclusion.holds && lipschitz_ok);
    Ok(TransferReport {
        premise,
        conclusion,
        unit_increment_violation: unit_violation,
        consistent,
    })
}

/// Worst `|h(z) - h(z')| - 1` over pairs differing in one coordinate.
fn unit_increment_violation<S: Scalar>(h: &TabulatedFunction<S>) -> S {
    let n = h.n_coords();
    let one = S::from_usize(1);
    let mut worst = S::zero().sub(&one);
    let lows: Vec<usize> = (0..n).map(|i| h.sizes[i + 1..].iter().product()).collect();
    for idx in 0..h.domain_size() {
        for (&low, &size) in lows.iter().zip(&h.sizes) {
            let v = (idx / low) % size;
            for w in v + 1..size {
                let jdx = idx + (w - v) * low;
                let d = h.values[idx].sub(&h.values[jdx]);
                let gap = if d < S::zero() { S::zero().sub(&d) } else { d };
                let candidate = gap.sub(&one);
                if candidate > worst {
                    worst = candidate;
                }
            }
        }
    }
    worst
}

/// Exact minimum squared norm over the convex hull of 0/1 disagreement
/// patterns, together with the minimizing hull point. Enumerates candidate
/// supports: the optimum has affinely independent support, where the
/// stationarity system `G λ = μ 1, Σ λ = 1` is nonsingular.
fn min_norm_hull_point(patterns: &[Vec<Rational>]) -> (Rational, Vec<Rational>) {
    let dim = patterns[0].len();
    let m = patterns.len();
    let gram: Vec<Vec<Rational>> = patterns
        .iter()
        .map(|p| {
            patterns
                .iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let s = support.len();
        // Bordered stationarity system in unknowns (λ, μ).
        let mut mat: Vec<Vec<Rational>> = vec![vec![rational::int(0); s + 2]; s + 1];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                mat[r][c] = gram[i][j].clone();
            }
            mat[r][s] = -Rational::one();
            mat[r][s + 1] = rational::int(0);
        }
        for cell in &mut mat[s][..s] {
            *cell = Rational::one();
        }
        mat[s][s + 1] = Rational::one();
        let Some(solution) = solve_linear(&mut mat) else {
            continue;
        };
        let lambda = &solution[..s];
        if lambda.iter().any(|l| l.is_negative()) {
            continue;
        }
        let z: Vec<Rational> = (0..dim)
            .map(|d| {
                support
                    .iter()
                    .zip(lambda)
                    .map(|(&i, l)| l * &patterns[i][d])
                    .sum()
            })
            .collect();
        let norm2: Rational = z.iter().map(|v| v * v).sum();
        if best.as_ref().is_none_or(|(cur, _)| norm2 < *cur) {
            best = Some((norm2, z));
        }
    }
    best.expect("full support or some singleton is always feasible")
}

/// Gaussian elimination with exact pivoting; `mat` is `n x (n+1)` augmented.
/// Returns `None` when singular.
fn solve_linear(mat: &mut [Vec<Rational>]) -> Option<Vec<Rational>> {
    let n = mat.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !mat[r][col].is_zero())?;
        mat.swap(col, pivot);
        let p = mat[col][col].clone();
        for v in mat[col].iter_mut() {
            *v /= p.clone();
        }
        let pivot_row = mat[col].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
    }
    Some((0..n).map(|r| mat[r][n].clone()).collect())
}

fn disagreement_patterns(
    x: &[usize],
    points: &[Vec<usize>],
) -> Result<Vec<Vec<Rational>>, CertifyError> {
    if points.is_empty() {
        return Err(CertifyError::EmptyPointSet);
    }
    if points.len() > CONVEX_DISTANCE_MAX_POINTS {
        return Err(CertifyError::TooManyPoints {
            got: points.len(),
            limit: CONVEX_DISTANCE_MAX_POINTS,
        });
    }
    let mut patterns: Vec<Vec<Rational>> = Vec::new();
    for (index, y) in points.iter().enumerate() {
        if y.len() != x.len() {
            return Err(CertifyError::PointDimensionMismatch {
                index,
                got: y.len(),
                expected: x.len(),
            });
        }
        let p: Vec<Rational> = x
            .iter()
            .zip(y)
            .map(|(a, b)| if a == b { rational::int(0) } else { Rational::one() })
            .collect();
        if !patterns.contains(&p) {
            patterns.push(p);
        }
    }
    Ok(patterns)
}

/// Exact squared convex distance from `x` to the point set, with the
/// minimizing hull point `ẑ`. At most [`CONVEX_DISTANCE_MAX_POINTS`] points.
pub fn convex_distance_squared(
    x: &[usize],
    points: &[Vec<usize>],
) -> Result<(Rational, Vec<Rational>), CertifyError> {
    let patterns = disagreement_patterns(x, points)?;
    Ok(min_norm_hull_point(&patterns))
}

/// Convex distance `d_T(x, S)` as a float; see [`convex_distance_squared`].
pub fn convex_distance(x: &[usize], points: &[Vec<usize>]) -> Result<f64, CertifyError> {
    let (norm2, _) = convex_distance_squared(x, points)?;
    Ok(rational::to_f64(&norm2).sqrt())
}

/// Convex distance from a binary vector to the Hamming ball of the given
/// radius around `center`: with `d` disagreements against the center,
/// `d_T = (d - radius)⁺ / √d`.
///
/// Valid only for binary alphabets: a ball point may cancel any `radius` of
/// the disagreements by copying `x` there, so the reachable patterns are the
/// indicators of the `(d - radius)`-subsets of the disagreement set, whose
/// minimum-norm hull point is the uniform vector with total mass
/// `d - radius`. The generic solver reproduces this on small instances.
pub fn convex_distance_to_hamming_ball(x: &[bool], center: &[bool], radius: usize) -> f64 {
    assert_eq!(x.len(), center.len());
    let d = x.iter().zip(center).filter(|(a, b)| a != b).count();
    if d <= radius {
        0.0
    } else {
        (d - radius) as f64 / (d as f64).sqrt()
    }
}

/// Tabulates `f(x) = d_T²(x, S)` over the product domain and certifies that
/// it is weakly α-(4, 0)-self-bounding with `α(x) = 2 ẑ(x)` taken from the
/// minimizing hull point of each `x`. All arithmetic is exact.
pub fn certify_dt_squared(
    sizes: &[usize],
    points: &[Vec<usize>],
) -> Result<CertificateReport, CertifyError> {
    let size = checked_domain_size(sizes)?;
    if size > PAIR_CHECK_CAP {
        return Err(CertifyError::DomainTooLarge {
            size,
            cap: PAIR_CHECK_CAP,
        });
    }
    for (index, p) in points.iter().enumerate() {
        if p.len() != sizes.len() {
            return Err(CertifyError::PointDimensionMismatch {
                index,
                got: p.len(),
                expected: sizes.len(),
            });
        }
        if let Some(coord) = (0..sizes.len()).find(|&c| p[c] >= sizes[c]) {
            return Err(CertifyError::PointOutOfDomain { index, coord });
        }
    }
    let n = sizes.len();
    let mut values = Vec::with_capacity(size);
    let mut alpha_values: Vec<Vec<Rational>> = vec![Vec::with_capacity(size); n];
    let mut point = vec![0usize; n];
    let two = rational::int(2);
    for _ in 0..size {
        let (norm2, z) = convex_distance_squared(&point, points)?;
        values.push(norm2);
        for (i, zi) in z.iter().enumerate() {
            alpha_values[i].push(&two * zi);
        }
        advance(&mut point, sizes);
    }
    let f = TabulatedFunction::new(sizes.to_vec(), values)?;
    let alpha: Vec<TabulatedFunction<Rational>> = alpha_values
        .into_iter()
        .map(|vals| TabulatedFunction::new(sizes.to_vec(), vals).expect("same domain as f"))
        .collect();
    certify(&f, Variant::WeakAlphaSb, &rational::int(4), &rational::int(0), Some(&alpha))
}

/// Parses `{"sizes": [...], "values": [...]}` with float values.
pub fn tabulated_f64_from_json(v: &serde_json::Value) -> Result<TabulatedFunction<f64>, String> {
    let (sizes, raw) = split_table_json(v)?;
    let values = raw
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| format!("non-numeric value {x}")))
        .collect::<Result<Vec<_>, _>>()?;
    TabulatedFunction::new(sizes, values).map_err(|e| e.to_string())
}

/// Parses `{"sizes": [...], "values": [...]}` exactly: values must be
/// integers or `"p/q"` strings.
pub fn tabulated_rational_from_json(
    v: &serde_json::Value,
) -> Result<TabulatedFunction<Rational>, String> {
    let (sizes, raw) = split_table_json(v)?;
    let values = raw
        .iter()
        .map(|x| match x {
            serde_json::Value::String(s) => rational::parse(s),
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(rational::int)
                .ok_or_else(|| format!("value {n} is not an exact integer; use a \"p/q\" string")),
            other => Err(format!("unsupported value {other}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    TabulatedFunction::new(sizes, values).map_err(|e| e.to_string())
}

fn split_table_json(v: &serde_json::Value) -> Result<(Vec<usize>, Vec<serde_json::Value>), String> {
    let obj = v.as_object().ok_or("expected an object with sizes and values")?;
    let sizes = obj
        .get("sizes")
        .and_then(|s| s.as_array())
        .ok_or("missing \"sizes\" array")?
        .iter()
        .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| format!("bad size {x}")))
        .collect::<Result<Vec<_>, _>>()?;
    let values = obj
        .get("values")
        .and_then(|s| s.as_array())
        .ok_or("missing \"values\" array")?
        .clone();
    Ok((sizes, values))
}

impl TabulatedFunction<f64> {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({ "sizes": self.sizes, "values": self.values })
    }
}

impl TabulatedFunction<Rational> {
    pub fn to_json_value(&self) -> serde_json::Value {
        let values: Vec<String> = self.values.iter().map(rational::format).collect();
        serde_json::json!({ "sizes": self.sizes, "values": values })
    }
}
