//! Closed-form tail and moment-generating-function bounds for sums and
//! functionals of locally dependent variables.
//!
//! Every evaluator is a pure function of its parameters. Dependence enters
//! only through a fractional chromatic number `χ*` of a dependency graph or
//! through the factorization parameters `(k, l)` of a source system. Raw
//! values above 1 are returned unmodified with a `capped` flag; consumers
//! decide presentation.
//!
//! Implemented forms, all for `t ≥ 0`:
//!
//! * Hoeffding-type for sums with ranges `b_i - a_i`:
//!   `exp(-2t² / (χ* Σ (b_i - a_i)²))`, two-sided.
//! * Bernstein-type with total variance `S` and uniform bound `b`:
//!   `exp(-8t² / (25 χ* (S + b t / 3)))`.
//! * Self-bounding tails with `c = (3a - 1)/6`:
//!   upper `exp(-t²/(2(a EZ + b + c₊ t)))`, weak upper
//!   `exp(-t²/(2(a EZ + b + a t / 2)))`, weak lower (for `t ≤ EZ`)
//!   `exp(-t²/(2(a EZ + b + c₋ t)))`; log-MGF bounds
//!   `(a EZ + b) λ² / (2(1 - c₊ λ))` for `λ < 1/c₊` and
//!   `(a EZ + b) λ² / (2(1 - a λ / 2))` for `λ ≤ 2/a`.
//! * Bounded-differences under `(k, l)` factorization with weights `c`:
//!   tail `exp(-2t² / (k l Σ c_i²))`, MGF bound `exp(λ² k l Σ c_i² / 8)`.
//! * Convex-distance product bound `P(X ∈ S) P(d_T(X, S) ≥ t) ≤
//!   exp(-t² / (10 k l))`, with exponential-moment coefficient `1/(10 k l)`.
//! * Subadditive MGF recombination `(1/χ*) Σ_j w_j M_j` over an exact
//!   fractional cover.
//! * Random-matrix norm tails: hermitian threshold `3 C χ* K √n` with
//!   `exp(-t²/(32 χ*² K²))`, rectangular threshold
//!   `C χ* K (√n + √N + (nN)^{1/4})` with `exp(-t²/(8 χ*² K²))`.
//! * Eigenvalue deviation from the median: `4 exp(-t² / (80 s² k l))`.

use crate::rational::{self, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("t must be nonnegative, got {0}")]
    NegativeT(f64),
    #[error("chi_star must be at least 1, got {0}")]
    ChiStarTooSmall(f64),
    #[error("parameter {0} must be nonnegative")]
    NegativeParam(&'static str),
    #[error("parameter {0} must be positive")]
    NonpositiveParam(&'static str),
    #[error("lower tail needs t <= EZ, got t = {t} with EZ = {ez}")]
    LowerTailBeyondMean { t: f64, ez: f64 },
    #[error("lambda = {lambda} outside the admissible range (limit {limit})")]
    LambdaOutOfRange { lambda: f64, limit: f64 },
    #[error("rectangular shape needs the second dimension N")]
    MissingRectangularDim,
    #[error("cover weights sum to {total}, expected chi_star = {chi_star}")]
    CoverWeightMismatch { total: String, chi_star: String },
    #[error("bad t-grid {grid:?}: {reason}")]
    Grid { grid: String, reason: String },
}

/// Raw bound value plus flags. `degenerate` marks the zero-denominator
/// convention (bound 0 for t > 0, 1 at t = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eval {
    pub raw: f64,
    pub degenerate: bool,
}

impl Eval {
    fn plain(raw: f64) -> Eval {
        Eval {
            raw,
            degenerate: false,
        }
    }

    fn degenerate(t: f64) -> Eval {
        Eval {
            raw: if t > 0.0 { 0.0 } else { 1.0 },
            degenerate: true,
        }
    }

    /// Value clipped to the probability scale.
    pub fn capped(&self) -> f64 {
        self.raw.min(1.0)
    }

    pub fn is_capped(&self) -> bool {
        self.raw > 1.0
    }
}

fn check_t(t: f64) -> Result<(), BoundError> {
    if t < 0.0 || t.is_nan() {
        return Err(BoundError::NegativeT(t));
    }
    Ok(())
}

fn check_chi_star(chi_star: &Rational) -> Result<f64, BoundError> {
    let v = rational::to_f64(chi_star);
    if v < 1.0 {
        return Err(BoundError::ChiStarTooSmall(v));
    }
    Ok(v)
}

/// Two-sided Hoeffding-type tail for a sum of bounded variables whose
/// dependency graph admits a fractional cover of weight `chi_star`:
/// `exp(-2t² / (χ* Σ r_i²))` with `r_i` the value ranges.
pub fn janson_hoeffding(chi_star: &Rational, ranges: &[f64], t: f64) -> Result<Eval, BoundError> {
    check_t(t)?;
    let chi = check_chi_star(chi_star)?;
    if ranges.iter().any(|&r| r < 0.0 || r.is_nan()) {
        return Err(BoundError::NegativeParam("range"));
    }
    let sq: f64 = ranges.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        return Ok(Eval::degenerate(t));
    }
    Ok(Eval::plain((-2.0 * t * t / (chi * sq)).exp()))
}

/// Bernstein-type tail with total summand variance `s_var` and a uniform
/// absolute bound `b` on the summands:
/// `exp(-8t² / (25 χ* (S + b t / 3)))`.
pub fn janson_bernstein(
    chi_star: &Rational,
    s_var: f64,
    b: f64,
    t: f64,
) -> Result<Eval, BoundError> {
    check_t(t)?;
    let chi = check_chi_star(chi_star)?;
    if s_var < 0.0 || s_var.is_nan() {
        return Err(BoundError::NegativeParam("S_var"));
    }
    if b <= 0.0 || b.is_nan() {
        return Err(BoundError::NonpositiveParam("b"));
    }
    let denom = 25.0 * chi * (s_var + b * t / 3.0);
    if denom == 0.0 {
        return Ok(Eval::degenerate(t));
    }
    Ok(Eval::plain((-8.0 * t * t / denom).exp()))
}

/// Parameters of a self-bounding certificate together with the mean of the
/// certified function. `c = (3a - 1)/6` splits into its positive and
/// negative parts `c₊`, `c₋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfBoundParams {
    pub a: f64,
    pub b: f64,
    pub ez: f64,
    pub c: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl SelfBoundParams {
    pub fn new(a: f64, b: f64, ez: f64) -> Result<Self, BoundError> {
        if a < 0.0 || a.is_nan() {
            return Err(BoundError::NegativeParam("a"));
        }
        if b < 0.0 || b.is_nan() {
            return Err(BoundError::NegativeParam("b"));
        }
        if ez.is_nan() || a * ez + b < 0.0 {
            return Err(BoundError::NegativeParam("a*EZ + b"));
        }
        let c = (3.0 * a - 1.0) / 6.0;
        Ok(SelfBoundParams {
            a,
            b,
            ez,
            c,
            c_plus: c.max(0.0),
            c_minus: (-c).max(0.0),
        })
    }

    fn variance_proxy(&self) -> f64 {
        self.a * self.ez + self.b
    }
}

/// Which self-bounding tail to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    /// Upper tail under the strong property.
    SbUpper,
    /// Upper tail under the weak property.
    WeakUpper,
    /// Lower tail under the weak property, valid for `t ≤ EZ`.
    WeakLower,
}

impl std::str::FromStr for TailKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sb-upper" => Ok(TailKind::SbUpper),
            "weak-upper" => Ok(TailKind::WeakUpper),
            "weak-lower" => Ok(TailKind::WeakLower),
            other => Err(format!(
                "unknown tail kind {other:?}; expected sb-upper, weak-upper, or weak-lower"
            )),
        }
    }
}

/// Tail bound for a self-bounding function; see [`TailKind`] for the three
/// forms. All evaluate to `exp(-t² / (2(a EZ + b + s t)))` with slope
/// `s ∈ {c₊, a/2, c₋}`.
pub fn self_bounding_tail(kind: TailKind, p: &SelfBoundParams, t: f64) -> Result<Eval, BoundError> {
    check_t(t)?;
    let slope = match kind {
        TailKind::SbUpper => p.c_plus,
        TailKind::WeakUpper => p.a / 2.0,
        TailKind::WeakLower => {
            if t > p.ez {
                return Err(BoundError::LowerTailBeyondMean { t, ez: p.ez });
            }
            p.c_minus
        }
    };
    let denom = 2.0 * (p.variance_proxy() + slope * t);
    if denom == 0.0 {
        return Ok(Eval::degenerate(t));
    }
    Ok(Eval::plain((-t * t / denom).exp()))
}

/// Which log-MGF bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MgfKind {
    Sb,
    Weak,
}

impl std::str::FromStr for MgfKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sb" => Ok(MgfKind::Sb),
            "weak" => Ok(MgfKind::Weak),
            other => Err(format!("unknown MGF kind {other:?}; expected sb or weak")),
        }
    }
}

/// Log-MGF bound of the centered function: `(a EZ + b) λ² / (2(1 - c₊ λ))`
/// for `λ < 1/c₊` under the strong property, and
/// `(a EZ + b) λ² / (2(1 - a λ / 2))` for `λ ≤ 2/a` under the weak one.
pub fn mgf_self_bounding(kind: MgfKind, p: &SelfBoundParams, lambda: f64) -> Result<f64, BoundError> {
    if lambda < 0.0 || lambda.is_nan() {
        return Err(BoundError::NegativeParam("lambda"));
    }
    let denom_slope = match kind {
        MgfKind::Sb => {
            if p.c_plus > 0.0 && lambda >= 1.0 / p.c_plus {
                return Err(BoundError::LambdaOutOfRange {
                    lambda,
                    limit: 1.0 / p.c_plus,
                });
            }
            p.c_plus
        }
        MgfKind::Weak => {
            if p.a > 0.0 && lambda > 2.0 / p.a {
                return Err(BoundError::LambdaOutOfRange {
                    lambda,
                    limit: 2.0 / p.a,
                });
            }
            p.a / 2.0
        }
    };
    let numerator = p.variance_proxy() * lambda * lambda;
    let denom = 2.0 * (1.0 - denom_slope * lambda);
    if denom == 0.0 {
        // Admissible boundary point lambda = 2/a of the weak form.
        return Ok(if numerator == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(numerator / denom)
}

/// Two-sided bounded-differences tail under a `(k, l)` factorization, for a
/// function whose value moves by at most `c_i` when variable `i` changes:
/// tail `exp(-2t² / (k l Σ c_i²))`, and at `lambda` the MGF bound
/// `exp(λ² k l Σ c_i² / 8)`.
pub fn mcdiarmid_hd(
    k: usize,
    l: usize,
    c: &[f64],
    t: f64,
    lambda: Option<f64>,
) -> Result<(Eval, Option<f64>), BoundError> {
    check_t(t)?;
    if k == 0 || l == 0 {
        return Err(BoundError::NonpositiveParam("k, l"));
    }
    if c.iter().any(|&w| w < 0.0 || w.is_nan()) {
        return Err(BoundError::NegativeParam("c_i"));
    }
    let sq: f64 = c.iter().map(|w| w * w).sum();
    let kl = (k * l) as f64;
    let mgf = lambda
        .map(|lam| {
            if lam.is_nan() {
                return Err(BoundError::NegativeParam("lambda"));
            }
            Ok((lam * lam * kl * sq / 8.0).exp())
        })
        .transpose()?;
    if sq == 0.0 {
        return Ok((Eval::degenerate(t), mgf));
    }
    Ok((Eval::plain((-2.0 * t * t / (kl * sq)).exp()), mgf))
}

/// Convex-distance product bound under a `(k, l)` factorization:
/// `P(X ∈ S) · P(d_T(X, S) ≥ t) ≤ exp(-t² / (10 k l))`.
pub fn talagrand_hd(k: usize, l: usize, t: f64) -> Result<Eval, BoundError> {
    check_t(t)?;
    if k == 0 || l == 0 {
        return Err(BoundError::NonpositiveParam("k, l"));
    }
    Ok(Eval::plain((-t * t / (10.0 * (k * l) as f64)).exp()))
}

/// Coefficient `1/(10 k l)` of the companion exponential-moment form
/// `E exp(d_T²(X, S) / (10 k l)) ≤ 1 / P(X ∈ S)`.
pub fn talagrand_moment_coefficient(k: usize, l: usize) -> Rational {
    rational::ratio(1, 10 * (k * l) as i64)
}

/// Recombines per-part MGF values through an exact fractional cover:
/// `(1/χ*) Σ_j w_j M_j`. The weights must sum to `chi_star` exactly.
pub fn subadditive_mgf(
    theta: f64,
    parts: &[(Rational, f64)],
    chi_star: &Rational,
) -> Result<f64, BoundError> {
    if theta <= 0.0 || theta.is_nan() {
        return Err(BoundError::NonpositiveParam("theta"));
    }
    let chi = check_chi_star(chi_star)?;
    if parts.iter().any(|(_, m)| *m <= 0.0 || m.is_nan()) {
        return Err(BoundError::NonpositiveParam("M_j"));
    }
    let total: Rational = parts.iter().map(|(w, _)| w.clone()).sum();
    if total != *chi_star {
        return Err(BoundError::CoverWeightMismatch {
            total: rational::format(&total),
            chi_star: rational::format(chi_star),
        });
    }
    let sum: f64 = parts
        .iter()
        .map(|(w, m)| rational::to_f64(w) * m)
        .sum();
    Ok(sum / chi)
}

/// Matrix shape for the norm tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixShape {
    Hermitian,
    Rectangular,
}

/// Threshold and deviation probability for the operator norm of a random
/// matrix with `K`-bounded centered entries whose dependency graph has
/// fractional chromatic number `chi_star`. `C` is the universal constant of
/// the independent-case norm estimate and must be supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormTail {
    pub threshold: f64,
    pub eval: Eval,
}

/// Hermitian (`n × n`): threshold `3 C χ* K √n`, tail
/// `exp(-t² / (32 χ*² K²))`. Rectangular (`n × N`): threshold
/// `C χ* K (√n + √N + (nN)^{1/4})`, tail `exp(-t² / (8 χ*² K²))`.
/// The threshold presumes entries with mean zero.
pub fn matrix_norm_tail(
    shape: MatrixShape,
    n: usize,
    n_cols: Option<usize>,
    k_bound: f64,
    chi_star: &Rational,
    c_const: f64,
    t: f64,
) -> Result<NormTail, BoundError> {
    check_t(t)?;
    let chi = check_chi_star(chi_star)?;
    if k_bound <= 0.0 || k_bound.is_nan() {
        return Err(BoundError::NonpositiveParam("K"));
    }
    if c_const <= 0.0 || c_const.is_nan() {
        return Err(BoundError::NonpositiveParam("C"));
    }
    let (threshold, denom_factor) = match shape {
        MatrixShape::Hermitian => (3.0 * c_const * chi * k_bound * (n as f64).sqrt(), 32.0),
        MatrixShape::Rectangular => {
            let m = n_cols.ok_or(BoundError::MissingRectangularDim)? as f64;
            let nf = n as f64;
            (
                c_const * chi * k_bound * (nf.sqrt() + m.sqrt() + (nf * m).powf(0.25)),
                8.0,
            )
        }
    };
    let raw = (-t * t / (denom_factor * chi * chi * k_bound * k_bound)).exp();
    Ok(NormTail {
        threshold,
        eval: Eval::plain(raw),
    })
}

/// Deviation of the `s`-th largest (or smallest) eigenvalue from its median
/// under a `(k, l)` factorization: `4 exp(-t² / (80 s² k l))`. Raw values at
/// small `t` exceed 1 and carry the capped flag downstream.
pub fn eigenvalue_tail(s: usize, k: usize, l: usize, t: f64) -> Result<Eval, BoundError> {
    check_t(t)?;
    if s == 0 || k == 0 || l == 0 {
        return Err(BoundError::NonpositiveParam("s, k, l"));
    }
    let denom = 80.0 * (s * s * k * l) as f64;
    Ok(Eval::plain(4.0 * (-t * t / denom).exp()))
}

/// One evaluated grid point of a [`BoundCurve`]. `capped` is the usable
/// probability `min(raw, 1)`; `raw > capped` tells a reader the cap bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub t: f64,
    pub raw: f64,
    pub capped: f64,
    pub degenerate: bool,
}

/// A named bound evaluated over a t-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub points: Vec<BoundPoint>,
}

impl BoundCurve {
    pub fn tabulate(
        name: &str,
        params: BTreeMap<String, f64>,
        grid: &[f64],
        mut eval: impl FnMut(f64) -> Result<Eval, BoundError>,
    ) -> Result<BoundCurve, BoundError> {
        let points = grid
            .iter()
            .map(|&t| {
                eval(t).map(|e| BoundPoint {
                    t,
                    raw: e.raw,
                    capped: e.capped(),
                    degenerate: e.degenerate,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundCurve {
            name: name.to_string(),
            params,
            points,
        })
    }

    /// CSV with columns `t,raw,capped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,raw,capped\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.t, p.raw, p.capped));
        }
        out
    }
}

/// Parses an inclusive arithmetic grid `start:end:step`.
pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>, BoundError> {
    let grid = || spec.to_string();
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(BoundError::Grid {
            grid: grid(),
            reason: "expected start:end:step".to_string(),
        });
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim().parse::<f64>().map_err(|e| BoundError::Grid {
                grid: grid(),
                reason: format!("{p:?}: {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !step.is_finite() || step <= 0.0 {
        return Err(BoundError::Grid {
            grid: grid(),
            reason: "step must be positive".to_string(),
        });
    }
    if end < start {
        return Err(BoundError::Grid {
            grid: grid(),
            reason: "end is below start".to_string(),
        });
    }
    // Slack of half a step absorbs accumulated floating-point error at the
    // endpoint without admitting an extra point.
    let count = ((end - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    const TOL: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn hoeffding_type_matches_hand_values() {
        let chi = int(2);
        let ranges = vec![1.0; 16];
        assert!(close(
            janson_hoeffding(&chi, &ranges, 0.0).unwrap().raw,
            1.0
        ));
        assert!(close(
            janson_hoeffding(&chi, &ranges, 4.0).unwrap().raw,
            (-1.0f64).exp()
        ));
    }

    #[test]
    fn hoeffding_type_with_unit_cover_dominates_exact_independent_tail() {
        // Four fair ±1 summands: P(S >= 4) = 1/16 by enumeration.
        let bound = janson_hoeffding(&int(1), &[2.0; 4], 4.0).unwrap().raw;
        assert!(close(bound, (-2.0f64).exp()));
        assert!(bound >= 1.0 / 16.0);
    }

    #[test]
    fn hoeffding_type_flags_zero_ranges_as_degenerate() {
        let e = janson_hoeffding(&int(1), &[0.0, 0.0], 2.0).unwrap();
        assert!(e.degenerate, "constant summands give a point mass");
        assert_eq!(e.raw, 0.0);
        let e = janson_hoeffding(&int(1), &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(e.raw, 1.0);
    }

    #[test]
    fn bernstein_type_matches_hand_value_and_decreases() {
        let at3 = janson_bernstein(&int(1), 4.0, 1.0, 3.0).unwrap().raw;
        assert!(close(at3, (-72.0f64 / 125.0).exp()));
        let at6 = janson_bernstein(&int(1), 4.0, 1.0, 6.0).unwrap().raw;
        assert!(at6 < at3, "tail must shrink with t: {at6} vs {at3}");
        assert!(close(janson_bernstein(&int(1), 4.0, 1.0, 0.0).unwrap().raw, 1.0));
    }

    #[test]
    fn self_bound_params_expose_split_constant() {
        let p = SelfBoundParams::new(1.0, 0.0, 10.0).unwrap();
        assert!(close(p.c, 1.0 / 3.0));
        assert!(close(p.c_plus, 1.0 / 3.0));
        assert_eq!(p.c_minus, 0.0);
        let p = SelfBoundParams::new(0.0, 1.0, 5.0).unwrap();
        assert!(close(p.c, -1.0 / 6.0));
        assert_eq!(p.c_plus, 0.0);
        assert!(close(p.c_minus, 1.0 / 6.0));
        assert!(SelfBoundParams::new(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn self_bounding_upper_tail_matches_hand_value() {
        let p = SelfBoundParams::new(1.0, 0.0, 10.0).unwrap();
        for kind in [TailKind::SbUpper, TailKind::WeakUpper, TailKind::WeakLower] {
            assert!(close(self_bounding_tail(kind, &p, 0.0).unwrap().raw, 1.0));
        }
        let v = self_bounding_tail(TailKind::SbUpper, &p, 5.0).unwrap().raw;
        assert!(close(v, (-15.0f64 / 14.0).exp()));
    }

    #[test]
    fn weak_lower_tail_at_the_mean_collapses_to_eighth_rate() {
        // a = 4, b = 0 gives c > 0, so the lower slope vanishes and the
        // bound at t = EZ is exp(-EZ/8).
        let ez = 8.0;
        let p = SelfBoundParams::new(4.0, 0.0, ez).unwrap();
        let v = self_bounding_tail(TailKind::WeakLower, &p, ez).unwrap().raw;
        assert!(close(v, (-ez / 8.0).exp()));
        assert_eq!(
            self_bounding_tail(TailKind::WeakLower, &p, ez + 0.5).unwrap_err(),
            BoundError::LowerTailBeyondMean { t: ez + 0.5, ez }
        );
    }

    #[test]
    fn mgf_bound_matches_hand_value_and_is_increasing() {
        let p = SelfBoundParams::new(4.0, 0.0, 1.0).unwrap();
        assert_eq!(mgf_self_bounding(MgfKind::Weak, &p, 0.0).unwrap(), 0.0);
        let v = mgf_self_bounding(MgfKind::Weak, &p, 0.1).unwrap();
        assert!(close(v, 1.0 / 40.0));
        let lo = mgf_self_bounding(MgfKind::Weak, &p, 0.2).unwrap();
        let hi = mgf_self_bounding(MgfKind::Weak, &p, 0.3).unwrap();
        assert!(hi > lo && lo > v);
        assert!(matches!(
            mgf_self_bounding(MgfKind::Weak, &p, 0.51),
            Err(BoundError::LambdaOutOfRange { .. })
        ));
        // Strong form rejects lambda at the pole.
        let q = SelfBoundParams::new(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            mgf_self_bounding(MgfKind::Sb, &q, 3.0),
            Err(BoundError::LambdaOutOfRange { .. })
        ));
    }

    #[test]
    fn bounded_differences_tail_matches_hand_values() {
        let (tail, mgf) = mcdiarmid_hd(2, 3, &[1.0; 6], 3.0, None).unwrap();
        assert!(close(tail.raw, (-0.5f64).exp()));
        assert!(mgf.is_none());
        let (_, mgf) = mcdiarmid_hd(1, 1, &[1.0, 1.0], 0.0, Some(1.0)).unwrap();
        assert!(close(mgf.unwrap(), (0.25f64).exp()));
    }

    #[test]
    fn bounded_differences_with_trivial_factorization_is_classical() {
        let c = [0.5, 1.5, 2.0];
        let sq: f64 = c.iter().map(|x| x * x).sum();
        let t = 1.25;
        let (tail, _) = mcdiarmid_hd(1, 1, &c, t, None).unwrap();
        assert!(close(tail.raw, (-2.0 * t * t / sq).exp()));
    }

    #[test]
    fn convex_distance_product_bound_matches_hand_value() {
        assert!(close(talagrand_hd(1, 1, 0.0).unwrap().raw, 1.0));
        let v = talagrand_hd(1, 1, 10f64.sqrt()).unwrap().raw;
        assert!(close(v, (-1.0f64).exp()));
        assert_eq!(talagrand_moment_coefficient(2, 3), ratio(1, 60));
    }

    #[test]
    fn moment_coefficient_budget_identity_is_exact() {
        // lambda + (4kl)·lambda²/(2(1 - 2kl·lambda)) at lambda = 1/(10kl)
        // equals 1/(8kl): the tail exponent split 1/10 + 1/40 = 1/8.
        for (k, l) in [(1usize, 1usize), (2, 3), (4, 7)] {
            let kl = int((k * l) as i64);
            let lambda = ratio(1, 10 * (k * l) as i64);
            let lhs = &lambda
                + int(4) * &kl * &lambda * &lambda
                    / (int(2) * (int(1) - int(2) * &kl * &lambda));
            assert_eq!(lhs, ratio(1, 8 * (k * l) as i64));
        }
    }

    #[test]
    fn subadditive_recombination_matches_hand_values() {
        // Symmetric two-part cover.
        let e = std::f64::consts::E;
        let v = subadditive_mgf(1.0, &[(int(1), e), (int(1), e)], &int(2)).unwrap();
        assert!(close(v, e));
        // Single part with unit weight is the identity.
        let v = subadditive_mgf(0.5, &[(int(1), 7.25)], &int(1)).unwrap();
        assert!(close(v, 7.25));
        // Fractional weights.
        let parts = [(int(1), 2.0), (ratio(1, 2), 4.0), (ratio(1, 2), 4.0)];
        let v = subadditive_mgf(1.0, &parts, &int(2)).unwrap();
        assert!(close(v, 3.0));
    }

    #[test]
    fn subadditive_recombination_rejects_inconsistent_weights() {
        let err = subadditive_mgf(1.0, &[(int(1), 2.0)], &int(2)).unwrap_err();
        assert_eq!(
            err,
            BoundError::CoverWeightMismatch {
                total: "1".to_string(),
                chi_star: "2".to_string()
            }
        );
    }

    #[test]
    fn matrix_norm_tail_matches_hand_values() {
        let h = matrix_norm_tail(MatrixShape::Hermitian, 100, None, 1.0, &int(1), 1.0, 8.0)
            .unwrap();
        assert!(close(h.threshold, 30.0));
        assert!(close(h.eval.raw, (-2.0f64).exp()));
        let r = matrix_norm_tail(MatrixShape::Rectangular, 16, Some(16), 1.0, &int(1), 1.0, 4.0)
            .unwrap();
        assert!(close(r.threshold, 12.0));
        assert!(close(r.eval.raw, (-2.0f64).exp()));
        assert_eq!(
            matrix_norm_tail(MatrixShape::Rectangular, 16, None, 1.0, &int(1), 1.0, 4.0)
                .unwrap_err(),
            BoundError::MissingRectangularDim
        );
    }

    #[test]
    fn eigenvalue_tail_scales_with_rank_index() {
        let e = eigenvalue_tail(1, 1, 1, 0.0).unwrap();
        assert_eq!(e.raw, 4.0);
        assert!(e.is_capped());
        assert_eq!(e.capped(), 1.0);
        let v = eigenvalue_tail(1, 1, 1, (80.0f64).sqrt()).unwrap().raw;
        assert!(close(v, 4.0 * (-1.0f64).exp()));
        // Doubling s multiplies the denominator by four.
        let s1 = eigenvalue_tail(1, 2, 2, 6.0).unwrap().raw;
        let s2 = eigenvalue_tail(2, 2, 2, 6.0).unwrap().raw;
        assert!(close(s2, 4.0 * (-36.0f64 / (80.0 * 16.0)).exp()));
        assert!(s2 > s1);
    }

    #[test]
    fn hd_bounds_weakly_increase_with_k_and_l() {
        for t in [0.5, 1.0, 2.5] {
            let base = talagrand_hd(2, 2, t).unwrap().raw;
            assert!(talagrand_hd(3, 2, t).unwrap().raw >= base);
            assert!(talagrand_hd(2, 3, t).unwrap().raw >= base);
            let (m_base, _) = mcdiarmid_hd(2, 2, &[1.0; 4], t, None).unwrap();
            let (m_up, _) = mcdiarmid_hd(2, 3, &[1.0; 4], t, None).unwrap();
            assert!(m_up.raw >= m_base.raw);
            let e_base = eigenvalue_tail(1, 2, 2, t).unwrap().raw;
            let e_up = eigenvalue_tail(1, 2, 3, t).unwrap().raw;
            assert!(e_up >= e_base);
        }
    }

    #[test]
    fn curves_tabulate_grids_and_render_csv() {
        let grid = parse_t_grid("0:2:0.5").unwrap();
        assert_eq!(grid.len(), 5);
        assert!(close(grid[4], 2.0));
        let curve = BoundCurve::tabulate(
            "eigenvalue",
            BTreeMap::from([("s".to_string(), 1.0)]),
            &grid,
            |t| eigenvalue_tail(1, 1, 1, t),
        )
        .unwrap();
        assert_eq!(curve.points.len(), 5);
        assert!(curve.points[0].raw > 1.0 && curve.points[0].capped == 1.0);
        assert!(curve.points.windows(2).all(|w| w[1].raw <= w[0].raw));
        let csv = curve.to_csv();
        assert!(csv.starts_with("t,raw,capped\n"));
        assert!(csv.lines().count() == 6);
    }

    #[test]
    fn grid_parsing_rejects_malformed_specs() {
        assert!(parse_t_grid("0:1").is_err());
        assert!(parse_t_grid("0:1:0").is_err());
        assert!(parse_t_grid("1:0:0.5").is_err());
        assert!(parse_t_grid("a:b:c").is_err());
        // A step that does not divide the span still lands inside.
        let g = parse_t_grid("0:1:0.3").unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.last().unwrap() <= &1.0);
    }
}
