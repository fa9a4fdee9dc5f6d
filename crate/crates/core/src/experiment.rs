//! Config-driven experiment runner: sample an ensemble, estimate a tail,
//! attach the selected bound curve, and write CSV + JSON reports.
//!
//! A config names the ensemble, the estimation mode, the t-grid, the run
//! parameters, and optionally a bound. Dependence parameters feeding the
//! bound are resolved per the config: `χ*` from the degree bound, the
//! chromatic number, the exact fractional chromatic number, or a literal
//! value; `(k, l)` from the declared factorization or literal values.
//! Everything downstream of the seed is deterministic, so reruns produce
//! byte-identical reports.

use crate::bounds::{self, BoundCurve, BoundError, Eval};
use crate::covers::{self, CoverError};
use crate::depstruct::DependencyGraph;
use crate::ensembles::{Ensemble, EnsembleError, Statistic, Structure};
use crate::montecarlo::{
    self, Centering, McError, SimulationReport, TailPoint,
};
use crate::rational::{self, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::Config(msg.into()))
}

/// Where the fractional-cover weight fed into a bound comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case")]
pub enum ChiStarSource {
    /// Max degree + 1 of the dependency graph; always a valid cover weight.
    DegreeBound,
    /// Chromatic number of the dependency graph.
    Chromatic,
    /// Exact fractional chromatic number (small graphs only).
    Fractional,
    /// Literal value, integer or `"p/q"`.
    Value { value: String },
}

/// Where the factorization parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case")]
pub enum KlSource {
    /// From the ensemble's declared factorization.
    Declared,
    Value { k: usize, l: usize },
}

/// Where per-variable weights (ranges or Lipschitz constants) come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case")]
pub enum WeightsSource {
    /// Ranges of the ensemble's summands.
    Declared,
    /// The same value repeated `count` times.
    Uniform { value: f64, count: usize },
    Values { values: Vec<f64> },
}

/// Bound attached to the estimated tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "kebab-case")]
pub enum BoundSpec {
    JansonHoeffding {
        chi_star: ChiStarSource,
        ranges: WeightsSource,
    },
    JansonBernstein {
        chi_star: ChiStarSource,
        /// Total summand variance; defaults to the ensemble's exact value.
        #[serde(default)]
        s_var: Option<f64>,
        /// Uniform absolute summand bound; defaults from the summand range.
        #[serde(default)]
        b: Option<f64>,
    },
    McdiarmidHd {
        kl: KlSource,
        c: WeightsSource,
    },
    TalagrandHd {
        kl: KlSource,
    },
    Eigenvalue {
        s: usize,
        kl: KlSource,
    },
    /// Fluctuation part of the matrix-norm bound: `exp(-t²/(32 χ*² K²))`
    /// against the mean-centered operator norm.
    NormFluctuation {
        chi_star: ChiStarSource,
        k_bound: f64,
    },
}

/// Estimation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    /// `P(stat - center >= t)` over the grid.
    Tail {
        statistic: Statistic,
        #[serde(default = "default_centering")]
        centering: Centering,
    },
    /// `P(|lambda_s - median| > t)` over the grid.
    MedianDeviation { s: usize },
    /// Product `P(X ∈ B) · P(d_T(X, B) >= t)` for the Hamming ball of the
    /// given radius around the all-plus pattern. The report's `p_hat` is
    /// the product; its interval multiplies the component intervals, a
    /// conservative envelope rather than an exact binomial interval.
    TalagrandProduct { radius: usize },
}

fn default_centering() -> Centering {
    Centering::SampleMean
}

/// Inclusive `start:end:step` string or explicit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Spec(String),
    Points(Vec<f64>),
}

/// Everything one experiment run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `{"name", "params"}` ensemble spec.
    pub ensemble: serde_json::Value,
    #[serde(flatten)]
    pub mode: Mode,
    pub t_grid: GridSpec,
    pub replicas: usize,
    pub seed: u64,
    pub ci_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

/// Report plus where it was written and the overall verdict (`None` when no
/// bound was requested).
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: SimulationReport,
    pub pass: Option<bool>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

fn resolve_grid(grid: &GridSpec) -> Result<Vec<f64>, ExperimentError> {
    let points = match grid {
        GridSpec::Spec(s) => bounds::parse_t_grid(s)?,
        GridSpec::Points(p) => p.clone(),
    };
    if points.is_empty() {
        return config_err("t-grid has no points");
    }
    if points.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return config_err("t-grid points must be finite and nonnegative");
    }
    Ok(points)
}

/// Vertex cap for exact coloring when resolving `χ*` from a config. The
/// LP enumeration keeps its own tighter cap.
const CHROMATIC_CAP: usize = 128;

/// Resolves `χ*` against the ensemble's dependency graph.
pub fn resolve_chi_star(
    source: &ChiStarSource,
    graph: &DependencyGraph,
) -> Result<Rational, ExperimentError> {
    Ok(match source {
        ChiStarSource::DegreeBound => rational::int((graph.max_degree() + 1) as i64),
        ChiStarSource::Chromatic => {
            let (chi, _) = covers::chromatic_number(graph, CHROMATIC_CAP)?;
            rational::int(chi as i64)
        }
        ChiStarSource::Fractional => {
            covers::fractional_chromatic(graph, covers::DEFAULT_ENUMERATION_CAP)?.0
        }
        ChiStarSource::Value { value } => {
            rational::parse(value).map_err(ExperimentError::Config)?
        }
    })
}

fn resolve_kl(source: &KlSource, ensemble: &Ensemble) -> Result<(usize, usize), ExperimentError> {
    match source {
        KlSource::Declared => match ensemble.structure() {
            Structure::Hd(hd) => {
                let p = hd.params();
                Ok((p.k, p.l))
            }
            Structure::Ld1(_) => config_err(
                "ensemble declares neighborhoods, not a factorization; supply k and l explicitly",
            ),
        },
        KlSource::Value { k, l } => Ok((*k, *l)),
    }
}

fn resolve_weights(
    source: &WeightsSource,
    ensemble: &Ensemble,
) -> Result<Vec<f64>, ExperimentError> {
    match source {
        WeightsSource::Declared => {
            let (lo, hi) = ensemble.summand_bounds().ok_or_else(|| {
                ExperimentError::Config(format!(
                    "ensemble {} has no per-variable range; supply weights explicitly",
                    ensemble.name()
                ))
            })?;
            Ok(vec![hi - lo; ensemble.n_vars()])
        }
        WeightsSource::Uniform { value, count } => Ok(vec![*value; *count]),
        WeightsSource::Values { values } => Ok(values.clone()),
    }
}

fn chi_star_f64(chi: &Rational) -> f64 {
    rational::to_f64(chi)
}

fn build_curve(
    spec: &BoundSpec,
    ensemble: &Ensemble,
    mode: &Mode,
    grid: &[f64],
) -> Result<BoundCurve, ExperimentError> {
    let graph = ensemble.dependency_graph();
    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    let curve = match spec {
        BoundSpec::JansonHoeffding { chi_star, ranges } => {
            let chi = resolve_chi_star(chi_star, &graph)?;
            let r = resolve_weights(ranges, ensemble)?;
            params.insert("chi_star".into(), chi_star_f64(&chi));
            params.insert("sq_range_sum".into(), r.iter().map(|x| x * x).sum());
            BoundCurve::tabulate("janson-hoeffding", params, grid, |t| {
                bounds::janson_hoeffding(&chi, &r, t)
            })?
        }
        BoundSpec::JansonBernstein { chi_star, s_var, b } => {
            let chi = resolve_chi_star(chi_star, &graph)?;
            let s_var = match s_var {
                Some(v) => *v,
                None => {
                    let per = ensemble.summand_variance().ok_or_else(|| {
                        ExperimentError::Config(
                            "ensemble has no per-variable variance; supply s_var".into(),
                        )
                    })?;
                    per * ensemble.n_vars() as f64
                }
            };
            let b = match b {
                Some(v) => *v,
                None => {
                    let (lo, hi) = ensemble.summand_bounds().ok_or_else(|| {
                        ExperimentError::Config(
                            "ensemble has no per-variable range; supply b".into(),
                        )
                    })?;
                    lo.abs().max(hi.abs())
                }
            };
            params.insert("chi_star".into(), chi_star_f64(&chi));
            params.insert("s_var".into(), s_var);
            params.insert("b".into(), b);
            BoundCurve::tabulate("janson-bernstein", params, grid, |t| {
                bounds::janson_bernstein(&chi, s_var, b, t)
            })?
        }
        BoundSpec::McdiarmidHd { kl, c } => {
            let (k, l) = resolve_kl(kl, ensemble)?;
            let c = resolve_weights(c, ensemble)?;
            params.insert("k".into(), k as f64);
            params.insert("l".into(), l as f64);
            params.insert("sq_c_sum".into(), c.iter().map(|x| x * x).sum());
            BoundCurve::tabulate("mcdiarmid-hd", params, grid, |t| {
                bounds::mcdiarmid_hd(k, l, &c, t, None).map(|(e, _)| e)
            })?
        }
        BoundSpec::TalagrandHd { kl } => {
            if !matches!(mode, Mode::TalagrandProduct { .. }) {
                return config_err("the talagrand-hd bound applies to the talagrand-product mode");
            }
            let (k, l) = resolve_kl(kl, ensemble)?;
            params.insert("k".into(), k as f64);
            params.insert("l".into(), l as f64);
            BoundCurve::tabulate("talagrand-hd", params, grid, |t| bounds::talagrand_hd(k, l, t))?
        }
        BoundSpec::Eigenvalue { s, kl } => {
            let mode_s = match mode {
                Mode::MedianDeviation { s } => *s,
                _ => return config_err("the eigenvalue bound applies to median-deviation mode"),
            };
            if *s != mode_s {
                return config_err(format!(
                    "bound index s = {s} does not match the estimated eigenvalue index {mode_s}"
                ));
            }
            let (k, l) = resolve_kl(kl, ensemble)?;
            params.insert("s".into(), *s as f64);
            params.insert("k".into(), k as f64);
            params.insert("l".into(), l as f64);
            BoundCurve::tabulate("eigenvalue", params, grid, |t| {
                bounds::eigenvalue_tail(*s, k, l, t)
            })?
        }
        BoundSpec::NormFluctuation { chi_star, k_bound } => {
            let chi = resolve_chi_star(chi_star, &graph)?;
            let chi_f = chi_star_f64(&chi);
            params.insert("chi_star".into(), chi_f);
            params.insert("k_bound".into(), *k_bound);
            if *k_bound <= 0.0 {
                return config_err("k_bound must be positive");
            }
            BoundCurve::tabulate("norm-fluctuation", params, grid, |t| {
                Ok(Eval {
                    raw: (-t * t / (32.0 * chi_f * chi_f * k_bound * k_bound)).exp(),
                    degenerate: false,
                })
            })?
        }
    };
    Ok(curve)
}

fn validate_bound_mode(spec: &BoundSpec, mode: &Mode) -> Result<(), ExperimentError> {
    let tail_only = |name: &str| match mode {
        Mode::Tail { .. } => Ok(()),
        _ => config_err(format!("the {name} bound applies to tail mode")),
    };
    match spec {
        BoundSpec::JansonHoeffding { .. } => tail_only("janson-hoeffding"),
        BoundSpec::JansonBernstein { .. } => tail_only("janson-bernstein"),
        BoundSpec::McdiarmidHd { .. } => tail_only("mcdiarmid-hd"),
        BoundSpec::NormFluctuation { .. } => tail_only("norm-fluctuation"),
        BoundSpec::TalagrandHd { .. } | BoundSpec::Eigenvalue { .. } => Ok(()),
    }
}

/// Product-of-probabilities estimate for the convex-distance inequality.
fn talagrand_product_report(
    ensemble: &Ensemble,
    radius: usize,
    grid: &[f64],
    replicas: usize,
    seed: u64,
    ci_level: f64,
) -> Result<SimulationReport, McError> {
    let stat = Statistic::BallDistance { radius };
    let values = montecarlo::replica_values(ensemble, &stat, replicas, seed)?;
    let n = values.len();
    let k_in = values.iter().filter(|&&d| d == 0.0).count();
    let (in_low, in_high) = montecarlo::clopper_pearson(k_in, n, ci_level);
    let p_in = k_in as f64 / n as f64;
    let points = grid
        .iter()
        .map(|&t| {
            let k = values.iter().filter(|&&d| d >= t).count();
            let (low, high) = montecarlo::clopper_pearson(k, n, ci_level);
            TailPoint {
                t,
                p_hat: p_in * k as f64 / n as f64,
                ci_low: in_low * low,
                ci_high: in_high * high,
            }
        })
        .collect();
    Ok(SimulationReport {
        ensemble: ensemble.to_spec().to_string(),
        statistic: format!("membership-product:{stat}"),
        replicas,
        seed,
        ci_level,
        centering: "product-with-membership".to_string(),
        center_value: p_in,
        points,
        bound: None,
        verdicts: None,
    })
}

/// Runs one configured experiment and writes `report.csv` and
/// `report.json` into `out_dir` (created if missing).
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentOutcome, ExperimentError> {
    if config.replicas < montecarlo::MIN_REPLICAS {
        return config_err(format!(
            "replicas must be at least {}, got {}",
            montecarlo::MIN_REPLICAS,
            config.replicas
        ));
    }
    let ensemble = Ensemble::from_spec(&config.ensemble)?;
    let grid = resolve_grid(&config.t_grid)?;
    if let Some(bound) = &config.bound {
        validate_bound_mode(bound, &config.mode)?;
    }
    let report = match &config.mode {
        Mode::Tail {
            statistic,
            centering,
        } => montecarlo::estimate_tail(
            &ensemble,
            statistic,
            &grid,
            config.replicas,
            config.seed,
            config.ci_level,
            *centering,
        )?,
        Mode::MedianDeviation { s } => montecarlo::estimate_median_deviation(
            &ensemble,
            *s,
            &grid,
            config.replicas,
            config.seed,
            config.ci_level,
        )?,
        Mode::TalagrandProduct { radius } => talagrand_product_report(
            &ensemble,
            *radius,
            &grid,
            config.replicas,
            config.seed,
            config.ci_level,
        )?,
    };
    let report = match &config.bound {
        Some(spec) => {
            let curve = build_curve(spec, &ensemble, &config.mode, &grid)?;
            montecarlo::compare_bound(&report, &curve)?
        }
        None => report,
    };
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("report.csv");
    let json_path = out_dir.join("report.json");
    std::fs::write(&csv_path, report.to_csv())?;
    std::fs::write(&json_path, report.to_json())?;
    Ok(ExperimentOutcome {
        pass: report.overall_pass(),
        report,
        csv_path,
        json_path,
    })
}
