//! `essmetric` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod svg;

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use essmetric::experiments::{
    collapsed_disc_experiment, cusp_lobes, cusp_threshold, graph_metric, grid_identity,
    sample_nodes,
};
use essmetric::io::to_json;
use essmetric::{
    default_eps_mod, essential_length, essential_metric, essential_predistance, p_modulus,
    path_pullback_metric, pullback_essential_metric, quasiconvexity_constant, quotient_space,
    sobolev_to_lipschitz_check, thickness_profile, Cap, DiscreteFunction, EdgeLengthMap, Error,
    EssentialParams, FamilySpec, MetricMatrix, MetricMeasureGraph, ModulusFlag, ModulusParams,
    NodeId, Recipe, SetSpec, ThicknessParams, DEFAULT_SEGMENT,
};

#[derive(Parser, Debug)]
#[command(
    name = "essmetric",
    version,
    about = "Modulus and essential metrics on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Graph JSON file.
    #[arg(long, global = true, conflicts_with = "gen")]
    graph: Option<PathBuf>,
    /// Generated graph: grid:n=N, cusp:p=P,n=N or disc:n=N.
    #[arg(long, global = true)]
    gen: Option<String>,
    /// Exponent, a number ≥ 1 or `inf`.
    #[arg(long, global = true, default_value = "2", value_parser = parse_p)]
    p: f64,
    /// First node set: ids:1,2 | ball:x=ID,r=R | rect:x0,y0,x1,y1.
    #[arg(long = "set-e", global = true)]
    set_e: Option<SetSpec>,
    #[arg(long = "set-f", global = true)]
    set_f: Option<SetSpec>,
    /// Length cap on family members.
    #[arg(long, global = true)]
    cap: Option<f64>,
    /// Relative gap for modulus solves.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Absolute accuracy of essential lengths (default 1e-3 · diameter).
    #[arg(long = "tol-lambda", global = true)]
    tol_lambda: Option<f64>,
    /// Accuracy of quasiconvexity constants.
    #[arg(long = "tol-c", global = true, default_value_t = 1e-3)]
    tol_c: f64,
    /// Modulus floor below which families count as negligible.
    #[arg(long = "eps-mod", global = true)]
    eps_mod: Option<f64>,
    /// Distance at or below which quotient classes merge.
    #[arg(long = "tol-quot", global = true, default_value_t = 1e-9)]
    tol_quot: f64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also write SVG figures (graphs with node positions only).
    #[arg(long, global = true)]
    svg: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// p-modulus of the paths joining two node sets.
    Modulus {
        /// Restrict to paths of length at most C times the endpoint distance.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Essential length between two sets, or the essential metric on nodes.
    Essmetric(NodeChoice),
    /// Essential and path pull-backs of an edge-length map.
    Pullback {
        #[command(flatten)]
        nodes: NodeChoice,
        /// Edge-length map JSON; defaults to the generator's own map.
        #[arg(long)]
        lengths: Option<PathBuf>,
    },
    /// Modulus of the quasiconvex family under refinement.
    Thickness {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
    },
    /// Smallest C for which the C-quasiconvex family is non-negligible.
    Quasiconvexity,
    /// Lipschitz constant of a function with unit upper gradient.
    Sobcheck {
        #[command(flatten)]
        nodes: NodeChoice,
        /// JSON array of node values; defaults to the pre-distance from --x0.
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long)]
        x0: Option<NodeId>,
        /// Metric to test against.
        #[arg(long, value_enum, default_value_t = Against::Dp)]
        against: Against,
    },
    /// One of the reference experiments.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: Experiment,
    #[arg(long)]
    n: Option<usize>,
    /// Nodes sampled for grid-identity, pairs for collapsed-disc.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    levels: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    qs: Vec<f64>,
    #[arg(long = "p-exp", default_value_t = 2.0)]
    p_exp: f64,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
}

#[derive(Args, Debug)]
struct NodeChoice {
    /// Nodes to evaluate on.
    #[arg(long)]
    nodes: Option<SetSpec>,
    /// Number of nodes to sample when --nodes is absent.
    #[arg(long, default_value_t = 8)]
    sample: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Against {
    Dp,
    D,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Experiment {
    GridIdentity,
    CuspThreshold,
    CollapsedDisc,
}

fn parse_p(s: &str) -> Result<f64, String> {
    let p = if s.eq_ignore_ascii_case("inf") {
        f64::INFINITY
    } else {
        s.parse::<f64>().map_err(|e| e.to_string())?
    };
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(format!("p = {s} must lie in [1, inf]"))
    }
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn check_failed(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn parse_recipe(spec: &str) -> Result<Recipe, Failure> {
    let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
    let mut n = None;
    let mut p_exp = None;
    for item in body.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| input_error(format!("generator parameter {item:?} is not KEY=VALUE")))?;
        let bad = || input_error(format!("generator parameter {item:?} has a bad value"));
        match k.trim() {
            "n" => n = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
            "p" | "p_exp" => p_exp = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
            other => {
                return Err(input_error(format!(
                    "unknown generator parameter {other:?}"
                )))
            }
        }
    }
    let n = n.ok_or_else(|| input_error("generator needs n=N"))?;
    match name {
        "grid" | "grid_square" => Ok(Recipe::GridSquare { n }),
        "cusp" | "cusp_domain" => Ok(Recipe::CuspDomain {
            p_exp: p_exp.ok_or_else(|| input_error("cusp generator needs p=P"))?,
            n,
        }),
        "disc" | "collapsed_disc" => Ok(Recipe::CollapsedDisc {
            n,
            segment: DEFAULT_SEGMENT,
        }),
        other => Err(input_error(format!("unknown generator {other:?}"))),
    }
}

struct Run {
    common: Common,
}

impl Run {
    fn positive(&self, name: &str, v: Option<f64>) -> Outcome {
        match v {
            Some(x) if !(x > 0.0) => Err(input_error(format!("--{name} must be positive"))),
            _ => Ok(()),
        }
    }

    fn validate(&self) -> Outcome {
        let c = &self.common;
        self.positive("tol", c.tol)?;
        self.positive("tol-lambda", c.tol_lambda)?;
        self.positive("tol-c", Some(c.tol_c))?;
        self.positive("eps-mod", c.eps_mod)?;
        if !(c.tol_quot >= 0.0) {
            return Err(input_error("--tol-quot must be nonnegative"));
        }
        if let Some(cap) = c.cap {
            if !(cap >= 0.0) {
                return Err(input_error("--cap must be nonnegative"));
            }
        }
        if c.jobs == Some(0) {
            return Err(input_error("--jobs must be at least 1"));
        }
        Ok(())
    }

    fn recipe(&self) -> Result<Option<Recipe>, Failure> {
        self.common.gen.as_deref().map(parse_recipe).transpose()
    }

    fn graph(&self) -> Result<MetricMeasureGraph, Failure> {
        match (&self.common.graph, self.recipe()?) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
                MetricMeasureGraph::from_json(&text)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))
            }
            (None, Some(recipe)) => Ok(recipe.build()?),
            (None, None) => Err(input_error("give --graph FILE or --gen NAME:PARAMS")),
        }
    }

    fn sets(
        &self,
        g: &MetricMeasureGraph,
    ) -> Result<(essmetric::NodeSet, essmetric::NodeSet), Failure> {
        let c = &self.common;
        match (&c.set_e, &c.set_f) {
            (Some(e), Some(f)) => Ok((e.resolve(g)?, f.resolve(g)?)),
            _ => Err(input_error("give both --set-e and --set-f")),
        }
    }

    fn nodes(&self, g: &MetricMeasureGraph, choice: &NodeChoice) -> Result<Vec<NodeId>, Failure> {
        match &choice.nodes {
            Some(spec) => Ok(spec.resolve(g)?.to_vec()),
            None => Ok(sample_nodes(
                g,
                choice.sample.min(g.node_count()),
                self.common.seed,
            )?),
        }
    }

    fn essential_params(&self, g: &MetricMeasureGraph) -> EssentialParams {
        let c = &self.common;
        let mut params = EssentialParams::defaults(g, c.p);
        if let Some(v) = c.eps_mod {
            params.eps_mod = v;
        }
        if let Some(v) = c.tol_lambda {
            params.tol_lambda = v;
        }
        if let Some(v) = c.tol {
            params.modulus_tol = v;
        }
        params
    }

    fn write(&self, name: &str, contents: &str) -> Outcome {
        let dir = &self.common.out;
        fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join(name), contents))
            .map_err(|e| input_error(format!("{}: {e}", dir.join(name).display())))?;
        println!("wrote {}", dir.join(name).display());
        Ok(())
    }

    fn write_svg(&self, name: &str, figure: Option<String>) -> Outcome {
        if !self.common.svg {
            return Ok(());
        }
        match figure {
            Some(s) => self.write(name, &s),
            None => {
                eprintln!("note: graph has no node positions; skipping {name}");
                Ok(())
            }
        }
    }

    fn modulus(&self, c: Option<f64>) -> Outcome {
        let g = self.graph()?;
        let (e, f) = self.sets(&g)?;
        let fam = FamilySpec::connecting(e, f);
        let fam = match (self.common.cap, c) {
            (Some(_), Some(_)) => return Err(input_error("--cap and --c are exclusive")),
            (Some(value), None) => fam.with_cap(Cap::Length {
                functional: None,
                value,
            }),
            (None, Some(c)) => fam.with_cap(Cap::Quasiconvex { c }),
            (None, None) => fam,
        };
        let r = p_modulus(
            &g,
            &fam,
            self.common.p,
            &ModulusParams::with_tol(self.common.tol.unwrap_or(1e-6)),
        )?;
        self.write("modulus.json", &r.to_json())?;
        self.write_svg(
            "modulus.svg",
            svg::edge_heatmap(&g, r.rho.values(), "optimal density"),
        )?;
        println!("modulus {} ({:?})", r.value, r.flag);
        if r.flag == ModulusFlag::Finite && !r.converged {
            return Err(Failure {
                code: 3,
                message: format!("modulus solve stopped with gap {}", r.gap),
            });
        }
        Ok(())
    }

    fn essmetric(&self, choice: &NodeChoice) -> Outcome {
        let g = self.graph()?;
        let params = self.essential_params(&g);
        if self.common.set_e.is_some() || self.common.set_f.is_some() {
            let (e, f) = self.sets(&g)?;
            let r = essential_length(&g, &g.lengths(), &e, &f, &params)?;
            self.write("essential_length.json", &r.to_json())?;
            println!("essential length {}", r.lambda);
            return Ok(());
        }
        let nodes = self.nodes(&g, choice)?;
        let dp = essential_metric(&g, &nodes, &params)?;
        let d = graph_metric(&g, &nodes)?;
        self.write("essmetric.csv", &dp.to_csv())?;
        self.write("essmetric.json", &dp.to_json())?;
        self.write("distance.csv", &d.to_csv())?;
        let distortion = row_distortion(&dp, &d);
        let worst = distortion.iter().map(|x| x.1).fold(0.0, f64::max);
        self.write_svg(
            "essmetric.svg",
            svg::node_markers(&g, &distortion, "max relative gap d_p vs d"),
        )?;
        println!("max relative gap to graph distance {worst}");
        Ok(())
    }

    fn pullback(&self, choice: &NodeChoice, lengths: Option<&FsPath>) -> Outcome {
        let g = self.graph()?;
        let lu = match (lengths, g.recipe()) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
                EdgeLengthMap::from_json(&g, &text)?
            }
            (None, Some(recipe)) => recipe.image_lengths(&g)?,
            (None, None) => g.lengths(),
        };
        let nodes = self.nodes(&g, choice)?;
        let params = self.essential_params(&g);
        let essential = pullback_essential_metric(&g, &lu, &nodes, &params)?;
        let path = path_pullback_metric(&g, &lu, &nodes)?;
        self.write("pullback_essential.csv", &essential.to_csv())?;
        self.write("pullback_path.csv", &path.to_csv())?;
        let q_ess = quotient_space(&essential, self.common.tol_quot)?;
        let q_path = quotient_space(&path, self.common.tol_quot)?;
        self.write("quotient_essential.json", &q_ess.to_json())?;
        self.write("quotient_path.json", &q_path.to_json())?;
        for w in q_ess.warnings.iter().chain(&q_path.warnings) {
            eprintln!("warning: {w}");
        }
        self.write_svg(
            "pullback.svg",
            svg::edge_heatmap(&g, lu.values(), "image edge length"),
        )?;
        println!(
            "classes: essential {}, path {}",
            q_ess.classes.len(),
            q_path.classes.len()
        );
        Ok(())
    }

    fn thickness(&self, levels: &[usize], c: f64) -> Outcome {
        let recipe = self.recipe()?.ok_or_else(|| {
            input_error("thickness needs --gen to rebuild the graph at each level")
        })?;
        let (e, f) = match (&self.common.set_e, &self.common.set_f) {
            (Some(e), Some(f)) => (e.clone(), f.clone()),
            (None, None) if matches!(recipe, Recipe::CuspDomain { .. }) => cusp_lobes(),
            _ => return Err(input_error("give both --set-e and --set-f")),
        };
        let mut params = ThicknessParams::new(self.common.p, c);
        if let Some(v) = self.common.eps_mod {
            params.eps_mod = v;
        }
        if let Some(v) = self.common.tol {
            params.tol = v;
        }
        let r = thickness_profile(&recipe, levels, &e, &f, &params)?;
        self.write("thickness.json", &r.to_json())?;
        println!("verdict {} (exponent {})", r.verdict, r.exponent);
        Ok(())
    }

    fn quasiconvexity(&self) -> Outcome {
        let g = self.graph()?;
        let (e, f) = self.sets(&g)?;
        let eps = self
            .common
            .eps_mod
            .unwrap_or_else(|| default_eps_mod(&g, self.common.p));
        let r = quasiconvexity_constant(&g, self.common.p, &e, &f, eps, self.common.tol_c)?;
        self.write("quasiconvexity.json", &to_json(&r))?;
        println!("C* = {}", r.c);
        Ok(())
    }

    fn sobcheck(
        &self,
        choice: &NodeChoice,
        function: Option<&FsPath>,
        x0: Option<NodeId>,
        against: Against,
    ) -> Outcome {
        let g = self.graph()?;
        let params = self.essential_params(&g);
        let mut nodes = self.nodes(&g, choice)?;
        let values: Vec<f64> = match function {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))?
            }
            None => {
                let x0 = x0.unwrap_or(nodes[0]);
                g.check_node(x0)?;
                if !nodes.contains(&x0) {
                    nodes.push(x0);
                    nodes.sort_unstable();
                }
                predistance_row(&g, x0, &params)?
            }
        };
        let d = match against {
            Against::Dp => essential_metric(&g, &nodes, &params)?,
            Against::D => graph_metric(&g, &nodes)?,
        };
        let tol = self.common.tol.unwrap_or(2.0 * params.tol_lambda);
        let f = DiscreteFunction::unit_gradient(&g, values);
        let r = sobolev_to_lipschitz_check(&g, &d, &f, tol)?;
        self.write("sobcheck.json", &to_json(&r))?;
        println!("Lipschitz constant {}", r.constant);
        if r.passed {
            Ok(())
        } else {
            Err(check_failed(format!(
                "Lipschitz constant {} exceeds 1 + {tol}",
                r.constant
            )))
        }
    }

    fn experiment(&self, args: &ExperimentArgs) -> Outcome {
        let ExperimentArgs {
            name,
            n,
            sample,
            ref levels,
            ref qs,
            p_exp,
            c,
        } = *args;
        let p = self.common.p;
        let seed = self.common.seed;
        let (passed, summary) = match name {
            Experiment::GridIdentity => {
                let r = grid_identity(n.unwrap_or(16), p, sample.unwrap_or(7), seed)?;
                self.write("grid_identity.json", &to_json(&r))?;
                self.write("grid_identity_d.csv", &r.d.to_csv())?;
                self.write("grid_identity_dp.csv", &r.d_p.to_csv())?;
                (
                    r.passed,
                    format!(
                        "grid-identity: max relative error {} (tolerance {})",
                        r.max_rel_err, r.tolerance
                    ),
                )
            }
            Experiment::CuspThreshold => {
                let r = cusp_threshold(p_exp, c, levels, qs)?;
                self.write("cusp_threshold.json", &to_json(&r))?;
                let verdicts: Vec<String> = r
                    .profiles
                    .iter()
                    .map(|(q, prof)| format!("q={q}: {} ({:.3})", prof.verdict, prof.exponent))
                    .collect();
                (r.passed, format!("cusp-threshold: {}", verdicts.join(", ")))
            }
            Experiment::CollapsedDisc => {
                let r = collapsed_disc_experiment(n.unwrap_or(64), p, sample.unwrap_or(10), seed)?;
                self.write("collapsed_disc.json", &to_json(&r))?;
                self.write("collapsed_disc_d.csv", &r.d.to_csv())?;
                self.write("collapsed_disc_essential.csv", &r.essential.to_csv())?;
                self.write("collapsed_disc_path.csv", &r.path.to_csv())?;
                (
                    r.passed,
                    format!(
                        "collapsed-disc: max relative error {} (tolerance {}), endpoint path pull-back {}",
                        r.max_rel_err, r.tolerance, r.endpoint_path_pullback
                    ),
                )
            }
        };
        println!("{summary}");
        if passed {
            Ok(())
        } else {
            Err(check_failed(format!("failed: {summary}")))
        }
    }
}

/// Pre-distance from `x0` to every node (zero at `x0`).
fn predistance_row(
    g: &MetricMeasureGraph,
    x0: NodeId,
    params: &EssentialParams,
) -> essmetric::Result<Vec<f64>> {
    (0..g.node_count())
        .into_par_iter()
        .map(|y| {
            if y == x0 {
                Ok(0.0)
            } else {
                essential_predistance(g, &g.lengths(), x0, y, params).map(|r| r.value)
            }
        })
        .collect()
}

/// Largest `|a − b| / b` in each row.
fn row_distortion(a: &MetricMatrix, b: &MetricMatrix) -> Vec<(NodeId, f64)> {
    let n = a.size();
    (0..n)
        .map(|i| {
            let worst = (0..n)
                .filter(|&j| j != i && b.get(i, j) > 0.0)
                .map(|j| (a.get(i, j) - b.get(i, j)).abs() / b.get(i, j))
                .fold(0.0, f64::max);
            (a.nodes()[i], worst)
        })
        .collect()
}

fn dispatch(cli: Cli) -> Outcome {
    let run = Run { common: cli.common };
    run.validate()?;
    match &cli.command {
        Command::Modulus { c } => run.modulus(*c),
        Command::Essmetric(choice) => run.essmetric(choice),
        Command::Pullback { nodes, lengths } => run.pullback(nodes, lengths.as_deref()),
        Command::Thickness { levels, c } => run.thickness(levels, *c),
        Command::Quasiconvexity => run.quasiconvexity(),
        Command::Sobcheck {
            nodes,
            function,
            x0,
            against,
        } => run.sobcheck(nodes, function.as_deref(), *x0, *against),
        Command::Experiment(args) => run.experiment(args),
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let jobs = cli.common.jobs.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
