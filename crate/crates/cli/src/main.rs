//! Command-line front end. Every subcommand is a thin adapter over the
//! library: it parses flags and files, calls one library operation, and
//! prints the result, so scripted runs and direct library calls agree.
//!
//! Exit codes: 0 success (or verdict PASS), 1 FAIL verdict (a bound
//! contradicted by the estimate, or a certificate that does not hold),
//! 2 usage or config error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use locdep::bounds::{self, BoundCurve, MatrixShape, SelfBoundParams, TailKind};
use locdep::covers;
use locdep::experiment::{self, ExperimentConfig, GridSpec};
use locdep::rational::{self, Rational};
use locdep::selfbound::{self, Variant};
use locdep::{DependencyGraph, Ensemble};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "locdep",
    version,
    about = "Covers, concentration bound curves, self-bounding certificates, and Monte Carlo verification for locally dependent variables"
)]
struct Cli {
    /// Worker threads for sampling. Reports are byte-identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the chromatic and fractional chromatic numbers of a
    /// dependency graph, with witness covers.
    Covers(CoversArgs),
    /// Evaluate a bound curve over a t-grid from explicit parameters.
    Bound(BoundArgs),
    /// Certify a self-bounding property of a tabulated function by
    /// exhaustive enumeration.
    Certify(CertifyArgs),
    /// Run a configured experiment: sample, estimate, compare, report.
    Verify(VerifyArgs),
    /// Dump one sampled realization of an ensemble.
    Example(ExampleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CoversArgs {
    /// Graph JSON `{"n": 5, "edges": [[0,1], ...]}`; a path or an inline object.
    #[arg(long)]
    graph: String,
    /// Vertex cap for the exact computations.
    #[arg(long, default_value_t = covers::DEFAULT_ENUMERATION_CAP)]
    cap: usize,
    /// Output format; omit for a human summary. csv lists the optimal
    /// fractional cover parts; json carries everything.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundName {
    JansonHoeffding,
    JansonBernstein,
    McdiarmidHd,
    TalagrandHd,
    Eigenvalue,
    SelfBounding,
    MatrixNorm,
}

#[derive(Args)]
struct BoundArgs {
    /// Which curve to evaluate.
    #[arg(long, value_enum)]
    name: BoundName,
    /// Inclusive grid `start:end:step`.
    #[arg(long, value_name = "a:b:step")]
    t_grid: String,
    /// Fractional cover weight, integer or `p/q`.
    #[arg(long)]
    chi_star: Option<String>,
    /// Comma-separated per-variable ranges (janson-hoeffding).
    #[arg(long, value_delimiter = ',')]
    ranges: Option<Vec<f64>>,
    /// Total summand variance (janson-bernstein).
    #[arg(long)]
    s_var: Option<f64>,
    /// Uniform absolute summand bound (janson-bernstein) or the additive
    /// self-bounding parameter (self-bounding).
    #[arg(long)]
    b: Option<f64>,
    /// Sources per variable.
    #[arg(long)]
    k: Option<usize>,
    /// Variables per source.
    #[arg(long)]
    l: Option<usize>,
    /// Comma-separated Lipschitz constants (mcdiarmid-hd).
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    /// Eigenvalue index, 1-based from either spectrum edge (eigenvalue).
    #[arg(long)]
    s: Option<usize>,
    /// Multiplicative self-bounding parameter (self-bounding).
    #[arg(long)]
    a: Option<f64>,
    /// Mean of the statistic (self-bounding).
    #[arg(long)]
    ez: Option<f64>,
    /// Tail kind (self-bounding).
    #[arg(long, value_parser = ["sb-upper", "weak-upper", "weak-lower"])]
    kind: Option<String>,
    /// Matrix shape (matrix-norm).
    #[arg(long, value_parser = ["hermitian", "rectangular"])]
    shape: Option<String>,
    /// Matrix rows (matrix-norm).
    #[arg(long)]
    n: Option<usize>,
    /// Matrix columns for the rectangular shape (matrix-norm).
    #[arg(long)]
    n_cols: Option<usize>,
    /// Uniform entry bound K (matrix-norm).
    #[arg(long)]
    k_bound: Option<f64>,
    /// Universal constant C supplied by the caller (matrix-norm).
    #[arg(long)]
    c_const: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct CertifyArgs {
    /// Function table JSON `{"sizes": [...], "values": [...]}`; a path or
    /// an inline object. In exact mode values are integers or `p/q` strings.
    #[arg(long, conflicts_with = "dt_sizes")]
    f: Option<String>,
    /// Property variant to certify.
    #[arg(long, requires = "f", value_parser = ["sb", "weak-sb", "alpha-sb", "weak-alpha-sb"])]
    variant: Option<String>,
    /// Multiplicative parameter; decimal, or `p/q` in exact mode.
    #[arg(long, requires = "f")]
    a: Option<String>,
    /// Additive parameter; decimal, or `p/q` in exact mode.
    #[arg(long, requires = "f")]
    b: Option<String>,
    /// JSON array of weight tables for the alpha variants.
    #[arg(long, requires = "f")]
    alpha: Option<String>,
    /// Certify with exact rational arithmetic instead of floats.
    #[arg(long, default_value_t = false)]
    exact: bool,
    /// Alphabet sizes for the built-in squared convex distance check.
    #[arg(long, value_delimiter = ',', conflicts_with = "f")]
    dt_sizes: Option<Vec<usize>>,
    /// Target set for the convex distance check: points `x0,x1;y0,y1;...`.
    #[arg(long, requires = "dt_sizes")]
    dt_points: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Experiment config JSON; a path or an inline object.
    #[arg(long)]
    config: String,
    /// Directory for report.csv and report.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replica count.
    #[arg(long)]
    replicas: Option<usize>,
    /// Override the config's confidence level.
    #[arg(long)]
    ci_level: Option<f64>,
    /// Override the config's grid, `start:end:step`.
    #[arg(long, value_name = "a:b:step")]
    t_grid: Option<String>,
    /// Also print the report to stdout in this format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ExampleArgs {
    /// Ensemble spec JSON `{"name": ..., "params": {...}}`; a path or an
    /// inline object.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replica index to sample.
    #[arg(long, default_value_t = 0)]
    replica: u64,
    /// Optional statistic JSON to evaluate on the realization.
    #[arg(long)]
    statistic: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            let err = serde_json::json!({ "error": message });
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err("--threads must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("cannot configure {threads} threads: {e}"))?;
    }
    match cli.command {
        Command::Covers(args) => run_covers(args),
        Command::Bound(args) => run_bound(args),
        Command::Certify(args) => run_certify(args),
        Command::Verify(args) => run_verify(args),
        Command::Example(args) => run_example(args),
    }
}

/// Reads the argument as inline JSON when it starts with a brace or
/// bracket, otherwise as a file path.
fn read_json_arg(arg: &str) -> Result<serde_json::Value, String> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?
    };
    serde_json::from_str(&text).map_err(|e| format!("invalid JSON in {arg}: {e}"))
}

fn set_members(set: &std::collections::BTreeSet<usize>) -> String {
    let inner = set
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{inner}}}")
}

fn run_covers(args: CoversArgs) -> Result<ExitCode, String> {
    let graph: DependencyGraph =
        serde_json::from_value(read_json_arg(&args.graph)?).map_err(|e| e.to_string())?;
    let (chi, chi_witness) =
        covers::chromatic_number(&graph, args.cap).map_err(|e| e.to_string())?;
    let (chi_star, cover) =
        covers::fractional_chromatic(&graph, args.cap).map_err(|e| e.to_string())?;
    let chi_star_decimal = rational::to_f64(&chi_star);
    match args.format {
        None => {
            println!("n: {}", graph.n());
            println!("edges: {}", graph.edge_count());
            println!("chi: {chi}");
            let classes = chi_witness
                .iter()
                .map(set_members)
                .collect::<Vec<_>>()
                .join(" ");
            println!("chi witness: {classes}");
            println!(
                "chi_star: {} = {}",
                rational::format(&chi_star),
                chi_star_decimal
            );
            println!("optimal fractional cover:");
            for (members, weight) in cover.parts() {
                println!(
                    "  weight {} = {}: {}",
                    rational::format(weight),
                    rational::to_f64(weight),
                    set_members(members)
                );
            }
        }
        Some(Format::Json) => {
            let value = serde_json::json!({
                "n": graph.n(),
                "edges": graph.edge_count(),
                "chi": chi,
                "chi_witness": chi_witness,
                "chi_star": {
                    "exact": rational::format(&chi_star),
                    "decimal": chi_star_decimal,
                },
                "cover": cover.parts().iter().map(|(members, weight)| {
                    serde_json::json!({
                        "members": members,
                        "weight": rational::format(weight),
                        "weight_decimal": rational::to_f64(weight),
                    })
                }).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
        }
        Some(Format::Csv) => {
            println!("part,weight,weight_decimal,members");
            for (index, (members, weight)) in cover.parts().iter().enumerate() {
                let joined = members
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                println!(
                    "{index},{},{},{joined}",
                    rational::format(weight),
                    rational::to_f64(weight)
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn require<T>(value: Option<T>, flag: &str, name: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("--{flag} is required for --name {name}"))
}

fn run_bound(args: BoundArgs) -> Result<ExitCode, String> {
    let grid = bounds::parse_t_grid(&args.t_grid).map_err(|e| e.to_string())?;
    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    let parse_chi = |text: &Option<String>| -> Result<Rational, String> {
        rational::parse(require(text.as_ref(), "chi-star", "this bound")?)
    };
    let curve: BoundCurve = match args.name {
        BoundName::JansonHoeffding => {
            let chi = parse_chi(&args.chi_star)?;
            let ranges = require(args.ranges, "ranges", "janson-hoeffding")?;
            params.insert("chi_star".into(), rational::to_f64(&chi));
            params.insert("sq_range_sum".into(), ranges.iter().map(|r| r * r).sum());
            BoundCurve::tabulate("janson-hoeffding", params, &grid, |t| {
                bounds::janson_hoeffding(&chi, &ranges, t)
            })
        }
        BoundName::JansonBernstein => {
            let chi = parse_chi(&args.chi_star)?;
            let s_var = require(args.s_var, "s-var", "janson-bernstein")?;
            let b = require(args.b, "b", "janson-bernstein")?;
            params.insert("chi_star".into(), rational::to_f64(&chi));
            params.insert("s_var".into(), s_var);
            params.insert("b".into(), b);
            BoundCurve::tabulate("janson-bernstein", params, &grid, |t| {
                bounds::janson_bernstein(&chi, s_var, b, t)
            })
        }
        BoundName::McdiarmidHd => {
            let k = require(args.k, "k", "mcdiarmid-hd")?;
            let l = require(args.l, "l", "mcdiarmid-hd")?;
            let c = require(args.c, "c", "mcdiarmid-hd")?;
            params.insert("k".into(), k as f64);
            params.insert("l".into(), l as f64);
            params.insert("sq_c_sum".into(), c.iter().map(|x| x * x).sum());
            BoundCurve::tabulate("mcdiarmid-hd", params, &grid, |t| {
                bounds::mcdiarmid_hd(k, l, &c, t, None).map(|(e, _)| e)
            })
        }
        BoundName::TalagrandHd => {
            let k = require(args.k, "k", "talagrand-hd")?;
            let l = require(args.l, "l", "talagrand-hd")?;
            params.insert("k".into(), k as f64);
            params.insert("l".into(), l as f64);
            BoundCurve::tabulate("talagrand-hd", params, &grid, |t| {
                bounds::talagrand_hd(k, l, t)
            })
        }
        BoundName::Eigenvalue => {
            let s = require(args.s, "s", "eigenvalue")?;
            let k = require(args.k, "k", "eigenvalue")?;
            let l = require(args.l, "l", "eigenvalue")?;
            params.insert("s".into(), s as f64);
            params.insert("k".into(), k as f64);
            params.insert("l".into(), l as f64);
            BoundCurve::tabulate("eigenvalue", params, &grid, |t| {
                bounds::eigenvalue_tail(s, k, l, t)
            })
        }
        BoundName::SelfBounding => {
            let kind_text = require(args.kind.as_deref(), "kind", "self-bounding")?;
            let kind = TailKind::from_str(kind_text).map_err(|e| e.to_string())?;
            let a = require(args.a, "a", "self-bounding")?;
            let b = require(args.b, "b", "self-bounding")?;
            let ez = require(args.ez, "ez", "self-bounding")?;
            let p = SelfBoundParams::new(a, b, ez).map_err(|e| e.to_string())?;
            params.insert("a".into(), a);
            params.insert("b".into(), b);
            params.insert("ez".into(), ez);
            BoundCurve::tabulate(&format!("self-bounding-{kind_text}"), params, &grid, |t| {
                bounds::self_bounding_tail(kind, &p, t)
            })
        }
        BoundName::MatrixNorm => {
            let chi = parse_chi(&args.chi_star)?;
            let shape = match require(args.shape.as_deref(), "shape", "matrix-norm")? {
                "hermitian" => MatrixShape::Hermitian,
                _ => MatrixShape::Rectangular,
            };
            let n = require(args.n, "n", "matrix-norm")?;
            let k_bound = require(args.k_bound, "k-bound", "matrix-norm")?;
            let c_const = require(args.c_const, "c-const", "matrix-norm")?;
            let first = bounds::matrix_norm_tail(shape, n, args.n_cols, k_bound, &chi, c_const, 0.0)
                .map_err(|e| e.to_string())?;
            params.insert("chi_star".into(), rational::to_f64(&chi));
            params.insert("n".into(), n as f64);
            if let Some(m) = args.n_cols {
                params.insert("n_cols".into(), m as f64);
            }
            params.insert("k_bound".into(), k_bound);
            params.insert("c_const".into(), c_const);
            params.insert("threshold".into(), first.threshold);
            BoundCurve::tabulate("matrix-norm", params, &grid, |t| {
                bounds::matrix_norm_tail(shape, n, args.n_cols, k_bound, &chi, c_const, t)
                    .map(|nt| nt.eval)
            })
        }
    }
    .map_err(|e| e.to_string())?;
    match args.format {
        Format::Csv => print!("{}", curve.to_csv()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&curve).unwrap()),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_scalar_f64(text: &str) -> Result<f64, String> {
    if let Ok(v) = text.parse::<f64>() {
        return Ok(v);
    }
    rational::parse(text).map(|r| rational::to_f64(&r))
}

fn parse_points(text: &str) -> Result<Vec<Vec<usize>>, String> {
    text.split(';')
        .map(|point| {
            point
                .split(',')
                .map(|c| c.trim().parse::<usize>().map_err(|e| e.to_string()))
                .collect()
        })
        .collect()
}

fn run_certify(args: CertifyArgs) -> Result<ExitCode, String> {
    let report = if let Some(sizes) = args.dt_sizes {
        let points_text = require(args.dt_points.as_deref(), "dt-points", "the dt check")?;
        let points = parse_points(points_text)?;
        selfbound::certify_dt_squared(&sizes, &points).map_err(|e| e.to_string())?
    } else {
        let table = require(args.f.as_deref(), "f", "certification")?;
        let table = read_json_arg(table)?;
        let variant = args.variant.as_deref().ok_or("--variant is required")?;
        let variant = Variant::from_str(variant).map_err(|e| e.to_string())?;
        let a = require(args.a.as_deref(), "a", "certification")?;
        let b = require(args.b.as_deref(), "b", "certification")?;
        let alpha_json = match &args.alpha {
            Some(arg) => Some(read_json_arg(arg)?),
            None => None,
        };
        if args.exact {
            let f = selfbound::tabulated_rational_from_json(&table)?;
            let alpha = alpha_json.map(|v| rational_tables(&v)).transpose()?;
            selfbound::certify(
                &f,
                variant,
                &rational::parse(a)?,
                &rational::parse(b)?,
                alpha.as_deref(),
            )
            .map_err(|e| e.to_string())?
        } else {
            let f = selfbound::tabulated_f64_from_json(&table)?;
            let alpha = alpha_json.map(|v| f64_tables(&v)).transpose()?;
            selfbound::certify(
                &f,
                variant,
                &parse_scalar_f64(a)?,
                &parse_scalar_f64(b)?,
                alpha.as_deref(),
            )
            .map_err(|e| e.to_string())?
        }
    };
    let holds = report.holds;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn f64_tables(v: &serde_json::Value) -> Result<Vec<locdep::TabulatedFunction<f64>>, String> {
    let arr = v.as_array().ok_or("alpha must be a JSON array of tables")?;
    arr.iter().map(selfbound::tabulated_f64_from_json).collect()
}

fn rational_tables(
    v: &serde_json::Value,
) -> Result<Vec<locdep::TabulatedFunction<Rational>>, String> {
    let arr = v.as_array().ok_or("alpha must be a JSON array of tables")?;
    arr.iter()
        .map(selfbound::tabulated_rational_from_json)
        .collect()
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let mut config: ExperimentConfig =
        serde_json::from_value(read_json_arg(&args.config)?).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(replicas) = args.replicas {
        config.replicas = replicas;
    }
    if let Some(level) = args.ci_level {
        config.ci_level = level;
    }
    if let Some(grid) = args.t_grid {
        config.t_grid = GridSpec::Spec(grid);
    }
    let outcome = experiment::run_experiment(&config, &args.out).map_err(|e| e.to_string())?;
    match args.format {
        Some(Format::Csv) => print!("{}", outcome.report.to_csv()),
        Some(Format::Json) => println!("{}", outcome.report.to_json()),
        None => {
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.json_path.display());
            match outcome.pass {
                Some(true) => println!("verdict: PASS ({} grid points)", outcome.report.points.len()),
                Some(false) => {
                    let failures = outcome
                        .report
                        .verdicts
                        .as_ref()
                        .map(|v| v.iter().filter(|x| !x.pass).count())
                        .unwrap_or(0);
                    println!(
                        "verdict: FAIL ({failures} of {} grid points)",
                        outcome.report.points.len()
                    );
                }
                None => println!("no bound requested"),
            }
        }
    }
    Ok(match outcome.pass {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn run_example(args: ExampleArgs) -> Result<ExitCode, String> {
    let ensemble = Ensemble::from_spec(&read_json_arg(&args.spec)?).map_err(|e| e.to_string())?;
    let realization = ensemble.sample(args.seed, args.replica);
    let mut out = serde_json::json!({
        "ensemble": ensemble.to_spec(),
        "seed": args.seed,
        "replica": args.replica,
        "vars": realization.vars,
        "sources": realization.sources,
    });
    if let Some(stat_arg) = args.statistic {
        let stat: locdep::ensembles::Statistic =
            serde_json::from_value(read_json_arg(&stat_arg)?).map_err(|e| e.to_string())?;
        let value = ensemble
            .evaluate(&stat, &realization)
            .map_err(|e| e.to_string())?;
        out["statistic"] = serde_json::json!(stat.to_string());
        out["value"] = serde_json::json!(value);
    }
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(ExitCode::SUCCESS)
}
