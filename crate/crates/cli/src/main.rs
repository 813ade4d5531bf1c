//! `mera`: derive and check the observable constraints of a hidden-variable
//! causal graph.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mera_core::constraints::{derive_all, evaluate, DerivationResult, DeriveOptions, RenderMode};
use mera_core::independence::enumerate_ci;
use mera_core::polyhedra::InsertionOrder;
use mera_core::rational::{self, Rational};
use mera_core::response::DEFAULT_COLUMN_LIMIT;
use mera_core::table::JointTable;
use mera_core::transform;
use mera_core::{fixtures, Error, HiddenDag, VarId};

const EXIT_VIOLATED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CONDITIONS: u8 = 3;
const EXIT_COST: u8 = 4;
const EXIT_DISTRIBUTION: u8 = 5;

#[derive(Parser)]
#[command(name = "mera", version, about = "Equality and inequality constraints of hidden-variable causal graphs")]
struct Cli {
    /// Worker threads for the district pipelines (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the bundled example graphs into DIR.
    #[arg(long, value_name = "DIR")]
    emit_examples: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Variables, structural conditions, districts and independences.
    Info { graph: PathBuf },
    /// Apply one rewrite; the new graph goes to stdout, the log to stderr.
    Rewrite(RewriteArgs),
    /// Derive all constraints.
    Derive {
        graph: PathBuf,
        #[command(flatten)]
        opts: DeriveArgs,
        /// Where to write the derivation (`-` for stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Evaluate the constraints on a joint distribution.
    Check {
        graph: PathBuf,
        /// CSV with one column per observed variable and a `prob` column.
        distribution: PathBuf,
        #[command(flatten)]
        opts: DeriveArgs,
        /// Absolute tolerance (default: 0 for exact tables, 1e-9 for decimals).
        #[arg(long)]
        tolerance: Option<String>,
        /// Where to write the JSON report (`-` for stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RewriteArgs {
    graph: PathBuf,
    /// Exogenize latents and absorb nested or small ones.
    #[arg(long, group = "rule")]
    normalize: bool,
    /// Merge the latents of each district into one.
    #[arg(long, group = "rule")]
    merge_latents: bool,
    /// Add the edge W1 -> W2.
    #[arg(long, group = "rule", num_args = 2, value_names = ["W1", "W2"])]
    hlp: Option<Vec<String>>,
    /// `--replace U C... -- D...`: replace paths `c <- U -> d` by `c -> d`.
    #[arg(long, group = "rule", num_args = 2.., value_names = ["U", "C"])]
    replace: Option<Vec<String>>,
    /// Split the given latents over their private and shared children.
    #[arg(long, group = "rule", num_args = 1.., value_name = "U")]
    face_split: Option<Vec<String>>,
    /// Shared child set for `--face-split`.
    #[arg(long, num_args = 1.., requires = "face_split")]
    shared: Option<Vec<String>>,
    /// The `D` set of `--replace`.
    #[arg(last = true)]
    rest: Vec<String>,
}

#[derive(Args)]
struct DeriveArgs {
    /// Merge latents of districts with c-degree above one (valid, possibly incomplete).
    #[arg(long)]
    merge: bool,
    /// Largest conditioning set for independence statements.
    #[arg(long)]
    max_ci_size: Option<usize>,
    /// Refuse districts needing more response columns than this.
    #[arg(long, default_value_t = DEFAULT_COLUMN_LIMIT)]
    column_limit: u128,
    /// Row insertion order of the double description method.
    #[arg(long, value_enum, default_value_t = Order::Index)]
    order: Order,
    /// Recorded in the output metadata.
    #[arg(long)]
    seed: Option<u64>,
    /// Include wall-clock timings in the output.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Cdd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Index,
    MinCutoff,
}

impl DeriveArgs {
    fn options(&self) -> DeriveOptions {
        DeriveOptions {
            merge: self.merge,
            max_ci_size: self.max_ci_size,
            column_limit: self.column_limit,
            insertion_order: match self.order {
                Order::Index => InsertionOrder::Index,
                Order::MinCutoff => InsertionOrder::MinCutoff,
            },
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Conditions(_) | Error::CDegree { .. } | Error::Precondition(_) => EXIT_CONDITIONS,
            Error::CostGuard { .. } => EXIT_COST,
            Error::Distribution(_) => EXIT_DISTRIBUTION,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("mera: {e}");
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("mera: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(dir) = &cli.emit_examples {
        emit_examples(dir)?;
    }
    match cli.command {
        None if cli.emit_examples.is_some() => Ok(0),
        None => Err(fail(EXIT_INPUT, "no subcommand given; see --help")),
        Some(Command::Info { graph }) => info(&load(&graph)?),
        Some(Command::Rewrite(args)) => rewrite(&args),
        Some(Command::Derive {
            graph,
            opts,
            output,
            format,
        }) => {
            let r = derive_all(&load(&graph)?, &opts.options())?;
            if let Some(path) = &output {
                let text = match format {
                    Format::Json => json_text(&r.to_json(opts.seed, opts.timings)),
                    Format::Cdd => cdd_text(&r),
                };
                write_output(path, &text)?;
            }
            print!("{}", summary(&r));
            Ok(0)
        }
        Some(Command::Check {
            graph,
            distribution,
            opts,
            tolerance,
            output,
        }) => check(&load(&graph)?, &distribution, &opts, tolerance.as_deref(), output.as_deref()),
    }
}

fn load(path: &Path) -> Result<HiddenDag, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    HiddenDag::parse(&text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    if path.as_os_str() == "-" {
        print!("{text}");
        return Ok(());
    }
    fs::write(path, text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn emit_examples(dir: &Path) -> Result<(), Failure> {
    let io = |e: std::io::Error| fail(EXIT_INPUT, format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for (stem, text) in fixtures::ALL {
        fs::write(dir.join(format!("{stem}.graph")), text).map_err(io)?;
    }
    let tri = HiddenDag::parse(fixtures::TRIANGLE)?;
    let half = rational::ratio(1, 2);
    let wolfe = JointTable::from_fn(&tri, |v| {
        if v.iter().all(|&x| x == v[0]) {
            half.clone()
        } else {
            rational::int(0)
        }
    })?;
    fs::write(dir.join("triangle_wolfe.csv"), wolfe.to_csv()).map_err(io)?;
    Ok(())
}

fn info(dag: &HiddenDag) -> Result<u8, Failure> {
    let vars: Vec<String> = dag
        .observed()
        .into_iter()
        .map(|v| format!("{} ({})", dag.name(v), dag.cardinality(v)))
        .collect();
    println!("observed: {}", vars.join(", "));
    let latents: Vec<&str> = dag.latents().into_iter().map(|v| dag.name(v)).collect();
    println!("latent: {}", if latents.is_empty() { "none".to_string() } else { latents.join(", ") });
    let ds: Vec<String> = dag
        .districts()
        .iter()
        .map(|d| format!("{} (c={})", dag.fmt_set(&d.members), d.c_degree()))
        .collect();
    println!("districts: {}", ds.join(", "));
    let ci = enumerate_ci(dag, None);
    if ci.is_empty() {
        println!("independences: none");
    } else {
        println!("independences:");
        for s in &ci {
            println!("  {}", s.display(dag));
        }
    }
    let report = dag.validate_conditions();
    if report.is_ok() {
        println!("conditions: ok");
        Ok(0)
    } else {
        println!("conditions: violated");
        for v in &report.violations {
            println!("  {v}");
        }
        Err(fail(EXIT_CONDITIONS, "structural conditions violated; run `mera rewrite --normalize` first"))
    }
}

fn resolve(dag: &HiddenDag, names: &[String]) -> Result<Vec<VarId>, Failure> {
    names.iter().map(|n| dag.id(n).map_err(Failure::from)).collect()
}

fn rewrite(args: &RewriteArgs) -> Result<u8, Failure> {
    let dag = load(&args.graph)?;
    let (out, log) = if args.normalize {
        transform::normalize(&dag)?
    } else if args.merge_latents {
        transform::merge_district_latents(&dag)?
    } else if let Some(pair) = &args.hlp {
        let ids = resolve(&dag, pair)?;
        transform::hlp_add_edge(&dag, ids[0], ids[1])?
    } else if let Some(list) = &args.replace {
        let u = dag.latent_id(&list[0])?;
        let c = resolve(&dag, &list[1..])?;
        let d = resolve(&dag, &args.rest)?;
        transform::replace_latent_with_edges(&dag, u, &c, &d)?
    } else if let Some(list) = &args.face_split {
        let us = list
            .iter()
            .map(|n| dag.latent_id(n))
            .collect::<Result<Vec<_>, _>>()?;
        let shared = args.shared.as_ref().map(|s| resolve(&dag, s)).transpose()?;
        transform::strong_face_split(&dag, &us, shared.as_deref())?
    } else {
        return Err(fail(EXIT_INPUT, "choose one of --normalize, --merge-latents, --hlp, --replace, --face-split"));
    };
    print!("{}", out.to_text());
    eprint!("{log}");
    Ok(0)
}

fn summary(r: &DerivationResult) -> String {
    let g = &r.graph;
    let mut out = String::new();
    for d in &r.districts {
        let c = d.counts();
        out.push_str(&format!(
            "district {} (c={}{}): {} ({} flagged equalities)\n",
            g.fmt_set(&d.members),
            d.c_degree,
            if d.merged { ", merged" } else { "" },
            c.summary(),
            c.flagged_equalities
        ));
    }
    for s in &r.ci {
        out.push_str(&format!("independence: {}\n", s.display(g)));
    }
    out.push_str(&format!("total: {}\n", r.counts().summary()));
    if !r.complete() {
        out.push_str("incomplete: latents were merged, so the constraints are valid but may not be complete\n");
    }
    out
}

fn cdd_text(r: &DerivationResult) -> String {
    let mut out = String::new();
    for d in &r.districts {
        out.push_str(&format!("* district {}\n", r.graph.fmt_set(&d.members)));
        out.push_str(&d.hrep.to_cdd());
    }
    out
}

fn check(
    dag: &HiddenDag,
    distribution: &Path,
    opts: &DeriveArgs,
    tolerance: Option<&str>,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let r = derive_all(dag, &opts.options())?;
    let text = fs::read_to_string(distribution)
        .map_err(|e| fail(EXIT_DISTRIBUTION, format!("{}: {e}", distribution.display())))?;
    let table = JointTable::from_csv(dag, &text)?;
    let tol: Option<Rational> = match tolerance {
        Some(t) => Some(
            rational::parse(t)
                .map(|(x, _)| x)
                .ok_or_else(|| fail(EXIT_INPUT, format!("bad tolerance `{t}`")))?,
        ),
        None => None,
    };
    let report = evaluate(&r, &table, tol.as_ref())?;
    for c in report.violated() {
        let k = &r.districts[c.district].constraints[c.index];
        let margin = c.margin.as_ref().map(rational::to_f64).unwrap_or(f64::NAN);
        println!("violated: {}  (margin {margin:.6})", r.render(k, RenderMode::Observable));
    }
    for c in report.ci.iter().filter(|c| c.status == mera_core::constraints::CheckStatus::Violated) {
        println!("violated independence: {}  (deviation {:.6})", c.text, rational::to_f64(&c.deviation));
    }
    println!(
        "{} constraints checked, {} violated, {} not evaluable; {} independences checked",
        report.constraints.len(),
        report.violated().count(),
        report.not_evaluable(),
        report.ci.len()
    );
    if let Some(path) = output {
        write_output(path, &json_text(&report.to_json()))?;
    }
    Ok(if report.falsified() { EXIT_VIOLATED } else { 0 })
}
