//! Command-line pipelines.
//!
//! All numerics live in the library; this module resolves arguments into a
//! [`RunConfig`], runs the requested pipeline and writes one report. Reports
//! embed the resolved configuration and the library version and contain no
//! timestamps, so identical configurations give byte-identical output.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calculus::{p_laplacian, Charge, Exponent};
use crate::capacity::{
    capacity_optimize, capacity_recursive, rescaling_residuals, EquilibriumResult, SolverKind,
    DEFAULT_TOL,
};
use crate::carleson::{capacity_via_carleson, carleson_norm, gram_solve};
use crate::counterexample::Counterexample;
use crate::dirichlet::{
    p_harmonic_extension, poisson, regular_convergence, BoundaryData, BoundaryRule,
};
use crate::error::{Error, Result};
use crate::stochastic::capacity_escape_identity;
use crate::tree::{BoundarySet, GeodesicRay, Nested, Tree, TreeKind, TreeSpec};
use crate::wiener::{deficit, wiener_series, SetRule};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_DEPTH: usize = 10;
const DEFAULT_SPINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Gen,
    Capacity,
    Equilibrium,
    Wiener,
    Walk,
    Dirichlet,
    Carleson,
    PaperExample,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Column computed by `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Capacity,
    Deficit,
    Gap,
    Spine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySource {
    Rule(BoundaryRule),
    Data(BoundaryData),
}

#[derive(Parser, Debug)]
#[command(
    name = "arbor",
    version,
    about = "Nonlinear potential theory on rooted trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Build a tree and describe it.
    Gen(Opts),
    /// p-capacity of a boundary set.
    Capacity(Opts),
    /// Equilibrium function and measure, with consistency checks.
    Equilibrium(Opts),
    /// Wiener series along a geodesic ray.
    Wiener(Opts),
    /// Capacity, exact escape probability and a Monte Carlo estimate.
    Walk(Opts),
    /// Harmonic or p-harmonic extension of boundary data, or a convergence sweep.
    Dirichlet(Opts),
    /// Carleson norm of a boundary measure.
    Carleson(Opts),
    /// The charge whose potential vanishes off a single boundary point.
    PaperExample(Opts),
    /// One row per depth for a chosen quantity.
    Sweep(Opts),
}

impl CliCommand {
    fn split(self) -> (Command, Opts) {
        match self {
            CliCommand::Gen(o) => (Command::Gen, o),
            CliCommand::Capacity(o) => (Command::Capacity, o),
            CliCommand::Equilibrium(o) => (Command::Equilibrium, o),
            CliCommand::Wiener(o) => (Command::Wiener, o),
            CliCommand::Walk(o) => (Command::Walk, o),
            CliCommand::Dirichlet(o) => (Command::Dirichlet, o),
            CliCommand::Carleson(o) => (Command::Carleson, o),
            CliCommand::PaperExample(o) => (Command::PaperExample, o),
            CliCommand::Sweep(o) => (Command::Sweep, o),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// `homogeneous:Q`, `spherical:D1,D2,..`, `dyadic`, `path`, `counterexample[:S]` or a JSON file.
    #[arg(long, default_value = "homogeneous:2")]
    pub tree: String,
    /// Leaf level; dyadic generations per branch for the counterexample.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Sweep depths, `A..B` (inclusive) or `A,B,C`.
    #[arg(long)]
    pub depths: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// `full` or tents given by son paths, e.g. `0.1,1`.
    #[arg(long, default_value = "full")]
    pub set: String,
    /// `leftmost`, `rightmost` or son indices such as `0.1.1`.
    #[arg(long, default_value = "leftmost")]
    pub ray: String,
    /// Last ray level in Wiener reports (defaults to the ray's leaf).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random walks.
    #[arg(long = "n", default_value_t = 100_000)]
    pub n_walks: u64,
    #[arg(long, value_enum, default_value_t = SolverKind::Recursive)]
    pub solver: SolverKind,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub spine_depth: Option<usize>,
    /// `constant:V`, `tent:0.1`, `distance[:0.1]` or a JSON file.
    #[arg(long, default_value = "constant:1")]
    pub boundary: String,
    #[arg(long, default_value_t = 0.0)]
    pub value_at_o: f64,
    /// JSON array of leaf masses for `carleson`.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Quantity::Capacity)]
    pub quantity: Quantity,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Fully resolved run description, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub tree: TreeSpec,
    pub p: f64,
    pub depth: usize,
    pub depths: Vec<usize>,
    pub set: SetRule,
    pub ray: GeodesicRay,
    pub horizon: Option<usize>,
    pub seed: u64,
    pub n_walks: u64,
    pub solver: SolverKind,
    pub tol: f64,
    pub boundary: BoundarySource,
    pub measure: Option<Vec<f64>>,
    pub quantity: Quantity,
    pub output: Option<PathBuf>,
    pub format: Format,
}

fn parse_sons(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() || s == "root" {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::parameter(format!("bad son index {x:?}")))
        })
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::parameter(format!("bad integer {x:?}")))
        })
        .collect()
}

pub fn parse_depths(s: &str) -> Result<Vec<usize>> {
    let depths = match s.split_once("..") {
        Some((a, b)) => {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| Error::parameter(format!("bad range {s:?}")))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| Error::parameter(format!("bad range {s:?}")))?;
            (a..=b).collect()
        }
        None => parse_list(s)?,
    };
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter("depths must increase"));
    }
    Ok(depths)
}

pub fn parse_ray(s: &str) -> Result<GeodesicRay> {
    Ok(match s {
        "leftmost" | "spine" => GeodesicRay::leftmost(),
        "rightmost" => GeodesicRay::rightmost(),
        other => GeodesicRay::sons(parse_sons(other)?),
    })
}

pub fn parse_set(s: &str) -> Result<SetRule> {
    if s == "full" {
        return Ok(SetRule::Full);
    }
    Ok(SetRule::Tents(
        s.split(',').map(parse_sons).collect::<Result<_>>()?,
    ))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Parses a tree description; `depth` and `spine` override the recipe's values.
pub fn parse_tree(s: &str, depth: Option<usize>, spine: Option<usize>) -> Result<TreeSpec> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let mut spec = match name {
        "homogeneous" => TreeSpec::homogeneous(
            arg.parse()
                .map_err(|_| Error::parameter(format!("bad degree in {s:?}")))?,
            DEFAULT_DEPTH,
        ),
        "dyadic" => TreeSpec::homogeneous(2, DEFAULT_DEPTH),
        "path" => TreeSpec::homogeneous(1, DEFAULT_DEPTH),
        "spherical" => TreeSpec::spherical(parse_list(arg)?, DEFAULT_DEPTH),
        "counterexample" => {
            let s = if arg.is_empty() {
                DEFAULT_SPINE
            } else {
                arg.parse()
                    .map_err(|_| Error::parameter(format!("bad spine depth in {s:?}")))?
            };
            TreeSpec::counterexample(s, 1)
        }
        _ => {
            let text = fs::read_to_string(s)?;
            match serde_json::from_str::<TreeSpec>(&text) {
                Ok(spec) => spec,
                Err(_) => TreeSpec::explicit(
                    serde_json::from_str::<Nested>(&text)
                        .map_err(|e| Error::structure(format!("{s}: {e}")))?,
                ),
            }
        }
    };
    if let Some(d) = depth {
        spec.depth = d;
    }
    if spec.kind == TreeKind::Counterexample {
        if let Some(sd) = spine {
            spec.spine_depth = Some(sd);
        }
    }
    Ok(spec)
}

pub fn parse_boundary(s: &str, value_at_o: f64) -> Result<BoundarySource> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let mut rule = match name {
        "constant" => BoundaryRule::constant(
            arg.parse()
                .map_err(|_| Error::parameter(format!("bad constant in {s:?}")))?,
            0.0,
        ),
        "tent" => BoundaryRule::tent_indicator(parse_sons(arg)?),
        "distance" => BoundaryRule::distance(if arg.is_empty() {
            GeodesicRay::leftmost()
        } else {
            parse_ray(arg)?
        }),
        _ => {
            let text = fs::read_to_string(s)?;
            if let Ok(rule) = serde_json::from_str::<BoundaryRule>(&text) {
                return Ok(BoundarySource::Rule(rule));
            }
            let data = match serde_json::from_str::<BoundaryData>(&text) {
                Ok(d) => d,
                Err(_) => BoundaryData {
                    values: serde_json::from_str(&text)?,
                    value_at_o,
                },
            };
            return Ok(BoundarySource::Data(data));
        }
    };
    rule.value_at_o = value_at_o;
    Ok(BoundarySource::Rule(rule))
}

impl RunConfig {
    pub fn resolve(command: Command, o: Opts) -> Result<Self> {
        Exponent::new(o.p)?;
        if o.tol.is_nan() || o.tol <= 0.0 {
            return Err(Error::parameter("tolerance must be positive"));
        }
        let tree = if command == Command::PaperExample {
            TreeSpec::counterexample(o.spine_depth.unwrap_or(DEFAULT_SPINE), o.depth.unwrap_or(1))
        } else {
            parse_tree(&o.tree, o.depth, o.spine_depth)?
        };
        let depths = match &o.depths {
            Some(s) => parse_depths(s)?,
            None => Vec::new(),
        };
        if command == Command::Sweep && depths.len() < 2 {
            return Err(Error::parameter("sweep needs at least two depths"));
        }
        let measure = match &o.measure {
            Some(path) => Some(read_json::<Vec<f64>>(path)?),
            None => None,
        };
        Ok(RunConfig {
            command,
            depth: tree.depth,
            tree,
            p: o.p,
            depths,
            set: parse_set(&o.set)?,
            ray: parse_ray(&o.ray)?,
            horizon: o.horizon,
            seed: o.seed,
            n_walks: o.n_walks,
            solver: o.solver,
            tol: o.tol,
            boundary: parse_boundary(&o.boundary, o.value_at_o)?,
            measure,
            quantity: o.quantity,
            output: o.output,
            format: o.format,
        })
    }

    fn exponent(&self) -> Result<Exponent> {
        Exponent::new(self.p)
    }
}

/// Result of a pipeline: the JSON payload and a table for CSV output.
#[derive(Debug, Clone)]
pub struct Output {
    pub result: Value,
    pub csv: String,
}

fn table<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Numerical(format!("csv encoding: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn solve(config: &RunConfig, tree: &Tree, set: &BoundarySet) -> Result<EquilibriumResult> {
    let p = config.exponent()?;
    match config.solver {
        SolverKind::Recursive => capacity_recursive(tree, set, p),
        SolverKind::Barrier => capacity_optimize(tree, set, p, config.tol),
    }
}

fn gen(config: &RunConfig) -> Result<Output> {
    let tree = config.tree.build()?;
    #[derive(Serialize)]
    struct Row {
        edge: usize,
        parent: Option<usize>,
        level: usize,
        leaf: bool,
    }
    let rows: Vec<Row> = (0..tree.edge_count())
        .map(|e| Row {
            edge: e,
            parent: tree.parent(e),
            level: tree.level(e),
            leaf: tree.is_leaf(e),
        })
        .collect();
    Ok(Output {
        result: json!({
            "edges": tree.edge_count(),
            "vertices": tree.vertex_count(),
            "leaves": tree.leaf_count(),
            "depth": tree.depth(),
            "level_counts": tree.level_counts(),
            "parent": rows.iter().map(|r| r.parent).collect::<Vec<_>>(),
        }),
        csv: table(&rows)?,
    })
}

fn capacity(config: &RunConfig) -> Result<Output> {
    let tree = config.tree.build()?;
    let set = config.set.realize(&tree)?;
    let r = solve(config, &tree, &set)?;
    #[derive(Serialize)]
    struct Row {
        depth: usize,
        edges: usize,
        set_size: usize,
        p: f64,
        capacity: f64,
    }
    let row = Row {
        depth: tree.depth(),
        edges: tree.edge_count(),
        set_size: set.len(),
        p: config.p,
        capacity: r.capacity,
    };
    Ok(Output {
        result: json!({
            "capacity": r.capacity,
            "p": config.p,
            "solver": r.solver,
            "tol": r.tol,
            "edges": row.edges,
            "set_size": row.set_size,
        }),
        csv: table(&[row])?,
    })
}

fn equilibrium(config: &RunConfig) -> Result<Output> {
    let tree = config.tree.build()?;
    let set = config.set.realize(&tree)?;
    let r = solve(config, &tree, &set)?;
    let (r1, r2) = rescaling_residuals(&tree, &r)?;
    let m = r.copotential(&tree);
    #[derive(Serialize)]
    struct Row {
        edge: usize,
        level: usize,
        f: f64,
        m: f64,
    }
    let rows: Vec<Row> = (0..tree.edge_count())
        .map(|e| Row {
            edge: e,
            level: tree.level(e),
            f: r.eq_fn.0[e],
            m: m.0[e],
        })
        .collect();
    let mut result = serde_json::to_value(&r)?;
    result["consistency_defect"] = json!(r.consistency_defect(&tree));
    result["rescaling"] = json!({ "r1": r1, "r2": r2 });
    Ok(Output {
        result,
        csv: table(&rows)?,
    })
}

fn wiener(config: &RunConfig) -> Result<Output> {
    let tree = config.tree.build()?;
    let set = config.set.realize(&tree)?;
    let horizon = config
        .horizon
        .unwrap_or_else(|| config.ray.realize(&tree).len() - 1);
    let report = wiener_series(&tree, &set, &config.ray, config.exponent()?, horizon)?;
    Ok(Output {
        csv: table(&report.rows(tree.depth()))?,
        result: serde_json::to_value(&report)?,
    })
}

fn walk(config: &RunConfig) -> Result<Output> {
    let tree = config.tree.build()?;
    let r = capacity_escape_identity(&tree, config.n_walks, config.seed)?;
    Ok(Output {
        result: serde_json::to_value(r)?,
        csv: table(&[r])?,
    })
}

fn rule(config: &RunConfig) -> Result<&BoundaryRule> {
    match &config.boundary {
        BoundarySource::Rule(r) => Ok(r),
        BoundarySource::Data(_) => Err(Error::parameter(
            "depth sweeps need a boundary rule, not explicit leaf values",
        )),
    }
}

fn dirichlet(config: &RunConfig) -> Result<Output> {
    if !config.depths.is_empty() {
        let rows = regular_convergence(&config.tree, rule(config)?, &config.ray, &config.depths)?;
        return Ok(Output {
            result: json!({ "rows": rows }),
            csv: table(&rows)?,
        });
    }
    let tree = config.tree.build()?;
    let phi = match &config.boundary {
        BoundarySource::Rule(r) => r.realize(&tree)?,
        BoundarySource::Data(d) => {
            d.validate(&tree)?;
            d.clone()
        }
    };
    let p = config.exponent()?;
    let (g, method) = if config.p == 2.0 {
        (poisson(&tree, &phi)?, "poisson")
    } else {
        (
            p_harmonic_extension(&tree, &phi, p, config.tol)?,
            "gauss-seidel",
        )
    };
    let residual = p_laplacian(&tree, &g, p).max_interior();
    #[derive(Serialize)]
    struct Row {
        vertex: usize,
        value: f64,
    }
    let rows: Vec<Row> =
        g.0.iter()
            .enumerate()
            .map(|(vertex, &value)| Row { vertex, value })
            .collect();
    Ok(Output {
        result: json!({ "method": method, "residual": residual, "values": g.0 }),
        csv: table(&rows)?,
    })
}

fn carleson(config: &RunConfig) -> Result<Output> {
    let tree = config.tree.build()?;
    let set = config.set.realize(&tree)?;
    let p = config.exponent()?;
    let eq = capacity_recursive(&tree, &set, p)?;
    let mu = match &config.measure {
        Some(masses) => {
            let mu = Charge::new(masses.clone());
            mu.validate(&tree)?;
            mu
        }
        None => eq.eq_measure.clone(),
    };
    let report = carleson_norm(&tree, &mu, p)?;
    let via = capacity_via_carleson(&tree, &set, p, eq.capacity, std::slice::from_ref(&mu))?;
    let sandwich = via.sandwiches[0];
    #[derive(Serialize)]
    struct Row {
        cm_norm: f64,
        infinite: bool,
        attaining_edge: Option<usize>,
        capacity_lower_bound: f64,
        dual_bound: f64,
        capacity: f64,
    }
    let row = Row {
        cm_norm: report.cm_norm,
        infinite: report.infinite,
        attaining_edge: report.attaining_edge,
        capacity_lower_bound: report.capacity_lower_bound,
        dual_bound: sandwich.dual_bound,
        capacity: eq.capacity,
    };
    Ok(Output {
        result: json!({
            "report": report,
            "capacity": eq.capacity,
            "sandwich": sandwich,
            "sandwich_holds": sandwich.holds(1e-9),
        }),
        csv: table(&[row])?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpineRow {
    pub spine_depth: usize,
    pub partial_sum: f64,
    pub epsilon: f64,
    pub edges: usize,
}

/// Wiener partial sums along the spine of the counterexample, one row per spine depth.
pub fn spine_sweep(
    spine_depths: &[usize],
    generations: usize,
    p: Exponent,
) -> Result<Vec<SpineRow>> {
    spine_depths
        .par_iter()
        .map(|&s| {
            let c = Counterexample::new(s, generations)?;
            let set = BoundarySet::full(&c.tree);
            let ray = GeodesicRay::leftmost();
            let horizon = ray.realize(&c.tree).len() - 1;
            let r = wiener_series(&c.tree, &set, &ray, p, horizon.saturating_sub(1))?;
            Ok(SpineRow {
                spine_depth: s,
                partial_sum: r.partial_sum(),
                epsilon: r.epsilon,
                edges: c.tree.edge_count(),
            })
        })
        .collect()
}

fn strictly_increasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] > w[0])
}

fn paper_example(config: &RunConfig) -> Result<Output> {
    let spine = config.tree.spine_depth.unwrap_or(DEFAULT_SPINE);
    let generations = config.tree.depth;
    let p = config.exponent()?;
    let c = Counterexample::new(spine, generations)?;
    let defect = c.forward_defect_exact();
    let spine_leaf = c.spine_leaf();
    let mut off_spine = 0usize;
    let mut off_spine_nonzero = 0usize;
    for &l in c.tree.leaves() {
        if l != spine_leaf {
            off_spine += 1;
            if c.boundary_potential_exact(l)? != Some(crate::dyadic::Dyadic::ZERO) {
                off_spine_nonzero += 1;
            }
        }
    }
    let rows = spine_sweep(&(2..=spine).collect::<Vec<_>>(), generations, p)?;

    // Finite-depth uniqueness on the one-generation truncation.
    let small = Counterexample::new(spine, 1)?;
    let zero = gram_solve(&small.tree, &vec![0.0; small.tree.leaf_count()])?;
    let values: Vec<f64> = small
        .tree
        .leaves()
        .iter()
        .map(|&l| small.leaf_potential_exact(l).map(|d| d.to_f64()))
        .collect::<Result<_>>()?;
    let recovered = gram_solve(&small.tree, &values)?;

    Ok(Output {
        result: json!({
            "spine_depth": spine,
            "generations": generations,
            "edges": c.tree.edge_count(),
            "forward_defect_exact": defect.to_string(),
            "forward_additive": defect.is_zero(),
            "total_charge": c.charge.total(),
            "off_spine_leaves": off_spine,
            "off_spine_nonzero_potential": off_spine_nonzero,
            "spine_leaf_potential": c.leaf_potential_exact(spine_leaf)?.to_string(),
            "spine_partial_sums": rows,
            "partial_sums_increasing": strictly_increasing(rows.iter().map(|r| r.partial_sum)),
            "gram_zero_is_zero": zero.masses().iter().all(|&m| m == 0.0),
            "gram_recovery_error": recovered.max_abs_diff(&small.charge),
        }),
        csv: table(&rows)?,
    })
}

fn sweep(config: &RunConfig) -> Result<Output> {
    let p = config.exponent()?;
    match config.quantity {
        Quantity::Capacity => {
            #[derive(Serialize)]
            struct Row {
                depth: usize,
                edges: usize,
                capacity: f64,
            }
            let rows = config
                .depths
                .par_iter()
                .map(|&d| {
                    let tree = config.tree.with_depth(d).build()?;
                    let set = config.set.realize(&tree)?;
                    let r = solve(config, &tree, &set)?;
                    Ok(Row {
                        depth: d,
                        edges: tree.edge_count(),
                        capacity: r.capacity,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let monotone = rows.windows(2).all(|w| w[1].capacity <= w[0].capacity);
            Ok(Output {
                result: json!({ "rows": rows, "monotone": monotone }),
                csv: table(&rows)?,
            })
        }
        Quantity::Deficit => {
            let s = deficit(&config.tree, &config.set, &config.ray, p, &config.depths)?;
            #[derive(Serialize)]
            struct Row {
                depth: usize,
                epsilon: f64,
                partial_sum: f64,
                product: f64,
            }
            let rows: Vec<Row> = (0..s.depths.len())
                .map(|i| Row {
                    depth: s.depths[i],
                    epsilon: s.epsilon[i],
                    partial_sum: s.partial_sums[i],
                    product: s.products[i],
                })
                .collect();
            Ok(Output {
                csv: table(&rows)?,
                result: serde_json::to_value(&s)?,
            })
        }
        Quantity::Gap => {
            let rows =
                regular_convergence(&config.tree, rule(config)?, &config.ray, &config.depths)?;
            Ok(Output {
                result: json!({ "rows": rows }),
                csv: table(&rows)?,
            })
        }
        Quantity::Spine => {
            let generations = if config.tree.kind == TreeKind::Counterexample {
                config.tree.depth
            } else {
                1
            };
            let rows = spine_sweep(&config.depths, generations, p)?;
            let increasing = strictly_increasing(rows.iter().map(|r| r.partial_sum));
            Ok(Output {
                result: json!({ "rows": rows, "partial_sums_increasing": increasing }),
                csv: table(&rows)?,
            })
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Output> {
    match config.command {
        Command::Gen => gen(config),
        Command::Capacity => capacity(config),
        Command::Equilibrium => equilibrium(config),
        Command::Wiener => wiener(config),
        Command::Walk => walk(config),
        Command::Dirichlet => dirichlet(config),
        Command::Carleson => carleson(config),
        Command::PaperExample => paper_example(config),
        Command::Sweep => sweep(config),
    }
}

/// Serializes a successful report in the configured format.
pub fn render(config: &RunConfig, out: &Output) -> Result<String> {
    Ok(match config.format {
        Format::Json => {
            let report = json!({
                "arbor": VERSION,
                "config": config,
                "status": "ok",
                "result": out.result,
            });
            serde_json::to_string_pretty(&report)? + "\n"
        }
        Format::Csv => format!(
            "# arbor {VERSION}\n# config {}\n{}",
            serde_json::to_string(config)?,
            out.csv
        ),
    })
}

/// Diagnostic JSON for a failed run.
pub fn render_failure(config: &RunConfig, err: &Error) -> Result<String> {
    let mut report = json!({
        "arbor": VERSION,
        "config": config,
        "status": "error",
        "error": err.to_string(),
    });
    if let Error::Solver {
        solver,
        iterations,
        lower,
        upper,
    } = err
    {
        report["partial"] = json!({
            "solver": solver,
            "iterations": iterations,
            "lower": lower,
            "upper": upper,
        });
    }
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(config: &RunConfig, text: &str) -> Result<()> {
    match &config.output {
        Some(path) => write_atomic(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn is_usage(err: &Error) -> bool {
    matches!(
        err,
        Error::Parameter(_)
            | Error::Structure(_)
            | Error::InvalidEdge(_)
            | Error::Validation(_)
            | Error::Json(_)
            | Error::Io(_)
    )
}

/// Caps the global thread pool at `ARBOR_THREADS` when it is set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("ARBOR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// Runs the command line and returns the process exit code:
/// 0 on success, 1 on solver failure, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, opts) = cli.command.split();
    let config = match RunConfig::resolve(command, opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("arbor: {e}");
            return 2;
        }
    };
    match run(&config).and_then(|out| render(&config, &out)) {
        Ok(text) => match emit(&config, &text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("arbor: {e}");
                1
            }
        },
        Err(e) if is_usage(&e) => {
            eprintln!("arbor: {e}");
            2
        }
        Err(e) => {
            eprintln!("arbor: {e}");
            if let Ok(text) = render_failure(&config, &e) {
                let _ = emit(&config, &text);
            }
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> RunConfig {
        let cli =
            Cli::try_parse_from(std::iter::once("arbor").chain(args.iter().copied())).unwrap();
        let (c, o) = cli.command.split();
        RunConfig::resolve(c, o).unwrap()
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_depths("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_depths("1,4,9").unwrap(), vec![1, 4, 9]);
        assert!(parse_depths("4,2").is_err());
        assert_eq!(
            parse_set("0.1,1").unwrap(),
            SetRule::Tents(vec![vec![0, 1], vec![1]])
        );
        assert_eq!(parse_ray("1.0").unwrap(), GeodesicRay::sons(vec![1, 0]));
        let spec = parse_tree("spherical:2,3", Some(4), None).unwrap();
        assert_eq!(spec, TreeSpec::spherical(vec![2, 3], 4));
        assert!(parse_tree("no-such-file.json", None, None).is_err());
    }

    #[test]
    fn capacity_report() {
        let c = config(&[
            "capacity",
            "--tree",
            "homogeneous:2",
            "--depth",
            "10",
            "--p",
            "2",
        ]);
        let out = run(&c).unwrap();
        let cap = out.result["capacity"].as_f64().unwrap();
        assert!((cap - 1024.0 / 2047.0).abs() < 1e-12);
        let text = render(&c, &out).unwrap();
        assert!(text.contains("\"arbor\""));
        assert_eq!(text, render(&c, &run(&c).unwrap()).unwrap());
    }

    #[test]
    fn csv_has_header_and_config() {
        let c = config(&[
            "sweep", "--tree", "dyadic", "--depths", "2..6", "--format", "csv",
        ]);
        let text = render(&c, &run(&c).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# arbor"));
        assert!(lines[1].starts_with("# config {"));
        assert_eq!(lines[2], "depth,edges,capacity");
        assert_eq!(lines.len(), 3 + 5);
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(main_with_args(["arbor", "capacity", "--p", "1"]), 2);
        assert_eq!(main_with_args(["arbor", "sweep", "--depths", "3"]), 2);
        assert_eq!(main_with_args(["arbor", "frobnicate"]), 2);
        assert_eq!(main_with_args(["arbor", "capacity", "--set", "7"]), 2);
    }
}
