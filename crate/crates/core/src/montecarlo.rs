//! Deterministic Monte Carlo estimation of tails, MGFs, and spectral
//! statistics, and comparison of the estimates against bound curves.
//!
//! Replicas are generated from hashed per-replica substreams and reduced in
//! replica order, so a report is a pure function of `(ensemble, seed,
//! replicas)` and is byte-identical no matter how many worker threads run
//! the sampling. Tail frequencies get exact binomial (Clopper-Pearson)
//! confidence intervals, which stay honest in the small-probability regime
//! where bound comparisons live.
//!
//! A bound "fails" only when the empirical evidence is unambiguous: the
//! lower confidence limit of the tail frequency exceeds the capped bound
//! value.

use crate::bounds::BoundCurve;
pub use crate::eigen::{ComplexMatrix, EigenError, SymMatrix};
use crate::ensembles::{Ensemble, EnsembleError, Statistic};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};
use thiserror::Error;

/// Fewest replicas accepted by the estimators.
pub const MIN_REPLICAS: usize = 100;
/// Largest side length accepted by [`symmetric_spectrum`].
pub const MAX_SPECTRUM_SIDE: usize = 256;
/// `|theta * stat|` above this would overflow `exp`.
pub const MGF_EXPONENT_GUARD: f64 = 700.0;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("need at least {MIN_REPLICAS} replicas, got {0}")]
    TooFewReplicas(usize),
    #[error("confidence level {0} outside (0, 1)")]
    BadCiLevel(f64),
    #[error("matrix side {0} above the spectrum cap {MAX_SPECTRUM_SIDE}")]
    MatrixTooLarge(usize),
    #[error("exponent {0} at theta = {1} would overflow the MGF estimate")]
    MgfOverflow(f64, f64),
    #[error("t-grids differ at index {0}: {1} vs {2}")]
    GridMismatch(usize, f64, f64),
    #[error("report carries no grid point")]
    EmptyGrid,
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Eigenvalues of a real symmetric matrix, sorted descending.
pub fn symmetric_spectrum(m: &SymMatrix) -> Result<Vec<f64>, McError> {
    if m.n() > MAX_SPECTRUM_SIDE {
        return Err(McError::MatrixTooLarge(m.n()));
    }
    Ok(m.eigenvalues_desc())
}

/// Largest singular value of a complex matrix.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    m.operator_norm()
}

/// Exact binomial confidence interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n with n > 0");
    assert!((0.0..1.0).contains(&level) && level > 0.0);
    let alpha = 1.0 - level;
    let low = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .expect("shape parameters are positive")
            .inverse_cdf(alpha / 2.0)
    };
    let high = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .expect("shape parameters are positive")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

/// How the replica values are centered before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// Subtract the same run's sample mean (two-pass). The estimation error
    /// of the mean is not corrected for; it is folded into the confidence
    /// commentary.
    SampleMean,
    /// Threshold the raw values; for statistics with a known exact mean of
    /// zero this avoids knife-edge effects at atoms of the distribution.
    None,
}

/// One grid point of an estimated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per-point comparison outcome; `pass` unless the lower confidence limit
/// exceeds the capped bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub t: f64,
    pub bound_raw: f64,
    pub bound_capped: f64,
    pub pass: bool,
}

/// Full record of one estimation run, with the bound comparison attached
/// once [`compare_bound`] runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub ensemble: String,
    pub statistic: String,
    pub replicas: usize,
    pub seed: u64,
    pub ci_level: f64,
    /// "sample-mean", "none", or "median".
    pub centering: String,
    /// The subtracted center (0 when centering is "none").
    pub center_value: f64,
    pub points: Vec<TailPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<Verdict>>,
}

impl SimulationReport {
    /// AND over the per-point verdicts; `None` before a bound is attached.
    pub fn overall_pass(&self) -> Option<bool> {
        self.verdicts.as_ref().map(|v| v.iter().all(|x| x.pass))
    }

    /// CSV columns `t,p_hat,ci_low,ci_high,bound_raw,bound_capped,verdict`;
    /// bound columns stay empty until a bound is attached.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p_hat,ci_low,ci_high,bound_raw,bound_capped,verdict\n");
        for (i, p) in self.points.iter().enumerate() {
            let (raw, capped, pass) = match &self.verdicts {
                Some(v) => {
                    let v = &v[i];
                    (
                        v.bound_raw.to_string(),
                        v.bound_capped.to_string(),
                        if v.pass { "PASS" } else { "FAIL" }.to_string(),
                    )
                }
                None => (String::new(), String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.t, p.p_hat, p.ci_low, p.ci_high, raw, capped, pass
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_run(replicas: usize, ci_level: f64) -> Result<(), McError> {
    if replicas < MIN_REPLICAS {
        return Err(McError::TooFewReplicas(replicas));
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(McError::BadCiLevel(ci_level));
    }
    Ok(())
}

/// Evaluates the statistic over all replicas, in replica order.
pub fn replica_values(
    ensemble: &Ensemble,
    stat: &Statistic,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>, McError> {
    let values: Result<Vec<f64>, EnsembleError> = (0..replicas)
        .into_par_iter()
        .map(|i| ensemble.evaluate(stat, &ensemble.sample(seed, i as u64)))
        .collect();
    Ok(values?)
}

fn tail_points(values: &[f64], center: f64, grid: &[f64], ci_level: f64) -> Vec<TailPoint> {
    grid.iter()
        .map(|&t| {
            let k = values.iter().filter(|&&v| v - center >= t).count();
            let p_hat = k as f64 / values.len() as f64;
            let (ci_low, ci_high) = clopper_pearson(k, values.len(), ci_level);
            TailPoint {
                t,
                p_hat,
                ci_low,
                ci_high,
            }
        })
        .collect()
}

/// Estimates `P(stat - center >= t)` over the grid with exact binomial
/// confidence intervals. The center is the run's own sample mean (two-pass)
/// or zero, per `centering`.
pub fn estimate_tail(
    ensemble: &Ensemble,
    stat: &Statistic,
    grid: &[f64],
    replicas: usize,
    seed: u64,
    ci_level: f64,
    centering: Centering,
) -> Result<SimulationReport, McError> {
    check_run(replicas, ci_level)?;
    let values = replica_values(ensemble, stat, replicas, seed)?;
    let center = match centering {
        Centering::SampleMean => values.iter().sum::<f64>() / values.len() as f64,
        Centering::None => 0.0,
    };
    Ok(SimulationReport {
        ensemble: ensemble.to_spec().to_string(),
        statistic: stat.to_string(),
        replicas,
        seed,
        ci_level,
        centering: match centering {
            Centering::SampleMean => "sample-mean",
            Centering::None => "none",
        }
        .to_string(),
        center_value: center,
        points: tail_points(&values, center, grid, ci_level),
        bound: None,
        verdicts: None,
    })
}

/// Sample mean of `exp(theta * stat)` with a normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfEstimate {
    pub theta: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: usize,
}

pub fn estimate_mgf(
    ensemble: &Ensemble,
    stat: &Statistic,
    theta: f64,
    replicas: usize,
    seed: u64,
    ci_level: f64,
) -> Result<MgfEstimate, McError> {
    check_run(replicas, ci_level)?;
    let values = replica_values(ensemble, stat, replicas, seed)?;
    if let Some(&v) = values.iter().find(|&&v| (theta * v).abs() > MGF_EXPONENT_GUARD) {
        return Err(McError::MgfOverflow(theta * v, theta));
    }
    let exps: Vec<f64> = values.iter().map(|&v| (theta * v).exp()).collect();
    let mean = exps.iter().sum::<f64>() / exps.len() as f64;
    let var = exps.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>()
        / (exps.len().saturating_sub(1)) as f64;
    let se = (var / exps.len() as f64).sqrt();
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(0.5 + ci_level / 2.0);
    Ok(MgfEstimate {
        theta,
        mean,
        ci_low: mean - z * se,
        ci_high: mean + z * se,
        replicas,
    })
}

/// Estimates `P(|lambda_s - median| > t)` with the median taken from the
/// same run (lower median for even counts).
pub fn estimate_median_deviation(
    ensemble: &Ensemble,
    s: usize,
    grid: &[f64],
    replicas: usize,
    seed: u64,
    ci_level: f64,
) -> Result<SimulationReport, McError> {
    check_run(replicas, ci_level)?;
    let stat = Statistic::Eigenvalue { s };
    let values = replica_values(ensemble, &stat, replicas, seed)?;
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("statistics are finite"));
    let median = sorted[(sorted.len() - 1) / 2];
    let points = grid
        .iter()
        .map(|&t| {
            let k = values.iter().filter(|&&v| (v - median).abs() > t).count();
            let p_hat = k as f64 / values.len() as f64;
            let (ci_low, ci_high) = clopper_pearson(k, values.len(), ci_level);
            TailPoint {
                t,
                p_hat,
                ci_low,
                ci_high,
            }
        })
        .collect();
    Ok(SimulationReport {
        ensemble: ensemble.to_spec().to_string(),
        statistic: stat.to_string(),
        replicas,
        seed,
        ci_level,
        centering: "median".to_string(),
        center_value: median,
        points,
        bound: None,
        verdicts: None,
    })
}

/// Attaches a bound curve to a report and judges every grid point: PASS
/// unless the lower confidence limit exceeds the capped bound.
pub fn compare_bound(
    report: &SimulationReport,
    curve: &BoundCurve,
) -> Result<SimulationReport, McError> {
    if report.points.is_empty() {
        return Err(McError::EmptyGrid);
    }
    if report.points.len() != curve.points.len() {
        return Err(McError::GridMismatch(
            report.points.len().min(curve.points.len()),
            f64::NAN,
            f64::NAN,
        ));
    }
    let verdicts = report
        .points
        .iter()
        .zip(&curve.points)
        .enumerate()
        .map(|(i, (p, b))| {
            if (p.t - b.t).abs() > 1e-12 {
                return Err(McError::GridMismatch(i, p.t, b.t));
            }
            Ok(Verdict {
                t: p.t,
                bound_raw: b.raw,
                bound_capped: b.capped,
                pass: p.ci_low <= b.capped,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = report.clone();
    out.bound = Some(curve.clone());
    out.verdicts = Some(verdicts);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{self, BoundCurve};
    use crate::ensembles::{MatrixPattern, SourceKind, WindowFamily};
    use std::collections::BTreeMap;

    #[test]
    fn spectrum_wrapper_enforces_size_cap() {
        let m = SymMatrix::from_fn(2, |i, j| (i + j) as f64);
        assert_eq!(symmetric_spectrum(&m).unwrap().len(), 2);
        let big = SymMatrix::from_fn(257, |_, _| 0.0);
        assert_eq!(symmetric_spectrum(&big).unwrap_err(), McError::MatrixTooLarge(257));
    }

    #[test]
    fn clopper_pearson_matches_closed_forms_at_the_edges() {
        let (low, high) = clopper_pearson(0, 10, 0.95);
        assert_eq!(low, 0.0);
        // P(X = 0) = (1-p)^10 = alpha/2 at the upper limit.
        assert!((high - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (low, high) = clopper_pearson(10, 10, 0.95);
        assert_eq!(high, 1.0);
        assert!((low - 0.025f64.powf(0.1)).abs() < 1e-9);
        // Interior: interval brackets the point estimate.
        let (low, high) = clopper_pearson(5, 10, 0.95);
        assert!(low < 0.5 && 0.5 < high);
        assert!((low - 0.187).abs() < 0.005 && (high - 0.813).abs() < 0.005);
    }

    fn iid_sign_sum(n: usize) -> Ensemble {
        Ensemble::m_dependent(n, 1, WindowFamily::WindowSum, SourceKind::Signs).unwrap()
    }

    #[test]
    fn constant_statistic_has_a_step_tail() {
        let e = Ensemble::er_triangles(5, 1.0).unwrap();
        let report = estimate_tail(
            &e,
            &Statistic::Sum,
            &[0.0, 1.0],
            200,
            1,
            0.99,
            Centering::SampleMean,
        )
        .unwrap();
        assert_eq!(report.points[0].p_hat, 1.0);
        assert_eq!(report.points[1].p_hat, 0.0);
        assert_eq!(report.center_value, 10.0, "C(5,3) triangles at p = 1");
    }

    #[test]
    fn iid_sign_sum_tail_matches_exact_enumeration() {
        // P(sum of 4 fair signs >= 4) = 1/16 exactly.
        let e = iid_sign_sum(4);
        let report = estimate_tail(
            &e,
            &Statistic::Sum,
            &[4.0],
            20_000,
            7,
            0.99,
            Centering::None,
        )
        .unwrap();
        let p = report.points[0];
        assert!(p.ci_low <= 1.0 / 16.0 && 1.0 / 16.0 <= p.ci_high);
        assert!((p.p_hat - 1.0 / 16.0).abs() < 0.01);
    }

    #[test]
    fn tail_estimates_are_nonincreasing_in_t() {
        let e = iid_sign_sum(10);
        let grid: Vec<f64> = (0..6).map(|i| i as f64 * 2.0).collect();
        let report =
            estimate_tail(&e, &Statistic::Sum, &grid, 2_000, 3, 0.95, Centering::SampleMean)
                .unwrap();
        for w in report.points.windows(2) {
            assert!(w[1].p_hat <= w[0].p_hat);
        }
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let e = Ensemble::hd_symmetric(6, MatrixPattern::SharedBlocks { width: 2 }).unwrap();
        let run = || {
            estimate_median_deviation(&e, 1, &[0.0, 0.5, 1.0], 400, 11, 0.99)
                .unwrap()
                .to_json()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(single, multi);
    }

    #[test]
    fn mgf_estimate_is_exact_at_theta_zero_and_near_cosh_at_one() {
        let e = iid_sign_sum(1);
        let at0 = estimate_mgf(&e, &Statistic::Sum, 0.0, 500, 5, 0.99).unwrap();
        assert_eq!(at0.mean, 1.0);
        assert_eq!(at0.ci_low, 1.0);
        let at1 = estimate_mgf(&e, &Statistic::Sum, 1.0, 20_000, 5, 0.99).unwrap();
        let target = 1.0f64.cosh();
        assert!(
            at1.ci_low <= target && target <= at1.ci_high,
            "cosh(1) = {target} outside [{}, {}]",
            at1.ci_low,
            at1.ci_high
        );
        // Deterministic statistic: mean is exactly exp(theta * value).
        let c = Ensemble::er_triangles(5, 1.0).unwrap();
        let v = estimate_mgf(&c, &Statistic::Sum, 0.1, 200, 5, 0.99).unwrap();
        assert!((v.mean - (1.0f64).exp()).abs() < 1e-12);
        assert!(matches!(
            estimate_mgf(&c, &Statistic::Sum, 100.0, 200, 5, 0.99),
            Err(McError::MgfOverflow(..))
        ));
    }

    #[test]
    fn median_deviation_mirrors_between_extreme_eigenvalues() {
        // Sign-symmetric ensemble: lambda_s(-M) = -lambda_{n+1-s}(M), so the
        // two deviation curves agree in distribution.
        let e = Ensemble::hd_symmetric(4, MatrixPattern::Iid).unwrap();
        let grid = [0.5, 1.0, 2.0];
        let top = estimate_median_deviation(&e, 1, &grid, 4_000, 13, 0.99).unwrap();
        let bottom = estimate_median_deviation(&e, 4, &grid, 4_000, 13, 0.99).unwrap();
        for (a, b) in top.points.iter().zip(&bottom.points) {
            assert!(
                (a.p_hat - b.p_hat).abs() < 0.04,
                "mirror gap at t = {}: {} vs {}",
                a.t,
                a.p_hat,
                b.p_hat
            );
        }
    }

    #[test]
    fn comparison_requires_matching_grids_and_caps_bounds() {
        let e = iid_sign_sum(4);
        let grid = [0.0, 2.0, 4.0];
        let report =
            estimate_tail(&e, &Statistic::Sum, &grid, 1_000, 2, 0.99, Centering::None).unwrap();
        // A bound that is always above 1 passes everywhere once capped.
        let curve = BoundCurve::tabulate("flat", BTreeMap::new(), &grid, |t| {
            bounds::eigenvalue_tail(1, 1, 1, t * 0.0)
        })
        .unwrap();
        let judged = compare_bound(&report, &curve).unwrap();
        assert_eq!(judged.overall_pass(), Some(true));
        assert!(judged.verdicts.unwrap().iter().all(|v| v.bound_capped == 1.0));

        let other = BoundCurve::tabulate("flat", BTreeMap::new(), &[0.0, 1.0, 4.0], |_| {
            bounds::talagrand_hd(1, 1, 0.0)
        })
        .unwrap();
        assert!(matches!(
            compare_bound(&report, &other),
            Err(McError::GridMismatch(1, _, _))
        ));
    }

    #[test]
    fn csv_report_carries_bound_columns_after_comparison() {
        let e = iid_sign_sum(4);
        let grid = [0.0, 4.0];
        let report =
            estimate_tail(&e, &Statistic::Sum, &grid, 500, 2, 0.99, Centering::None).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("t,p_hat,ci_low,ci_high,bound_raw,bound_capped,verdict\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,"));
        let curve = BoundCurve::tabulate("hoeffding", BTreeMap::new(), &grid, |t| {
            bounds::janson_hoeffding(&crate::rational::int(1), &[2.0; 4], t)
        })
        .unwrap();
        let judged = compare_bound(&report, &curve).unwrap();
        let csv = judged.to_csv();
        assert!(csv.contains("PASS"));
        let round: SimulationReport = serde_json::from_str(&judged.to_json()).unwrap();
        assert_eq!(round, judged);
    }
}
