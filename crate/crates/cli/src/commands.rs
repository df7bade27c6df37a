use crate::config::{read_config, Method, Mode, Overrides, RunConfig};
use crate::document::{
    to_points, Aggregates, DocumentConfig, SolutionBlock, SolutionDocument, SolutionKind,
};
use crate::error::{CliError, Result};
use crate::svg;
use balconf::continuation::{
    quotient_distinct, step1_nbody_with_progress, step3_refine, tree_from_bases, ContinuationTree,
};
use balconf::metrics::{delta_q0, match_and_delta_r, verify, MatchDistances, VerificationReport};
use balconf::multistart::{self, Progress};
use balconf::problems::ExtendedProblem;
use balconf::ScaleMatrix;
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Residual bound for accepted solutions: `F = |f|^2 / 2 < 1e-20`.
pub const RESIDUAL_TOLERANCE: f64 = 1.5e-10;
/// Bound on the center of mass and `|I_S - 1|` of a verified solution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "balconf",
    version,
    about = "Planar central and balanced configurations with a small mass"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find all n-body solutions.
    Nbody(RunArgs),
    /// Find the restricted critical points for every base solution of a document.
    Restricted(RestrictedArgs),
    /// Continue n-body solutions to (n+1)-body solutions with a small mass.
    Continue(RunArgs),
    /// Search the (n+1)-body system directly.
    Direct(RunArgs),
    /// Match direct solutions against continued ones.
    Compare(CompareArgs),
    /// Draw a document as SVG.
    Plot(PlotArgs),
    /// Re-verify every solution of a document.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ExecArgs {
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Single-threaded, bit-reproducible run.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Tab-separated progress log of the multistart search.
    #[arg(long)]
    pub progress: Option<PathBuf>,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Args)]
pub struct RestrictedArgs {
    /// Document with base solutions.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Document from `direct`.
    #[arg(long)]
    pub a: PathBuf,
    /// Document from `continue`.
    #[arg(long)]
    pub b: PathBuf,
    /// Match on distances among the primaries only.
    #[arg(long)]
    pub primaries: bool,
    /// Write the comparison report as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Nbody(a) => nbody(&a),
        Command::Restricted(a) => restricted(&a),
        Command::Continue(a) => continuation(&a),
        Command::Direct(a) => direct(&a),
        Command::Compare(a) => compare(&a),
        Command::Plot(a) => plot(&a),
        Command::Verify(a) => verify_document(&a),
    }
}

/// Returns whether searches may run in parallel.
fn setup_threads(exec: &ExecArgs) -> bool {
    let threads = if exec.deterministic { 1 } else { exec.threads };
    if threads > 0 {
        // fails only if the pool already exists, e.g. a second run in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    !exec.deterministic
}

fn load(args: &RunArgs, method: Method) -> Result<RunConfig> {
    let file = read_config(&args.config)?;
    let overrides = Overrides {
        seed: args.seed,
        epsilon: args.epsilon,
        delta: args.delta,
        mode: args.mode,
    };
    RunConfig::resolve(file, &overrides, method)
}

struct ProgressLog(Option<BufWriter<File>>);

impl ProgressLog {
    fn open(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self(None));
        };
        let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
        let _ = writeln!(w, "samples\tsolutions\ttypical_distance");
        Ok(Self(Some(w)))
    }

    fn record(&mut self, p: &Progress) {
        if let Some(w) = &mut self.0 {
            let _ = writeln!(w, "{p}");
        }
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn document(
    run: RunConfig,
    command: &str,
    solutions: Vec<SolutionBlock>,
    aggregates: Aggregates,
) -> SolutionDocument {
    SolutionDocument {
        config: DocumentConfig {
            run,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: now_unix(),
        },
        solutions,
        aggregates,
    }
}

fn block(kind: SolutionKind, q: &[f64], report: VerificationReport) -> SolutionBlock {
    SolutionBlock {
        kind,
        k: None,
        l: None,
        m: None,
        coordinates: to_points(q),
        residual_inf: report.residual_inf,
        lambda: report.lambda,
        delta_q0: None,
        delta_r: None,
        restricted_point: None,
        accepted: None,
        objective: None,
        termination: None,
        verification: report,
    }
}

/// Masses used to verify a block of the given kind.
fn block_masses(run: &RunConfig, kind: SolutionKind) -> Vec<f64> {
    let mut m = vec![run.mass; run.n];
    match kind {
        SolutionKind::Base => {}
        SolutionKind::Restricted => m.push(0.0),
        SolutionKind::Continued | SolutionKind::Direct => m.push(run.epsilon * run.mass),
    }
    m
}

fn verify_as(
    run: &RunConfig,
    scale: &ScaleMatrix,
    kind: SolutionKind,
    q: &[f64],
) -> VerificationReport {
    verify(&block_masses(run, kind), scale, q, run.mode.symmetry())
}

fn base_blocks(run: &RunConfig, scale: &ScaleMatrix, bases: &[Vec<f64>]) -> Vec<SolutionBlock> {
    bases
        .iter()
        .enumerate()
        .map(|(k, q)| SolutionBlock {
            k: Some(k),
            ..block(
                SolutionKind::Base,
                q,
                verify_as(run, scale, SolutionKind::Base, q),
            )
        })
        .collect()
}

fn output_path(args_output: Option<&PathBuf>, run: &RunConfig, name: &str) -> PathBuf {
    args_output
        .cloned()
        .unwrap_or_else(|| run.output_dir.join(format!("{name}.json")))
}

fn save(doc: &SolutionDocument, path: &Path) -> Result<()> {
    doc.write(path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn nbody(args: &RunArgs) -> Result<()> {
    let t0 = Instant::now();
    let run = load(args, Method::Continuation)?;
    let parallel = setup_threads(&args.exec);
    let scale = run.scale()?;
    let mut log = ProgressLog::open(args.progress.as_deref())?;
    let bases =
        step1_nbody_with_progress(&run.masses()?, scale, &run.multistart(parallel), &mut |p| {
            log.record(p)
        })?;
    let blocks = base_blocks(&run, &scale, &bases);
    let aggregates = Aggregates {
        n_sol_n: Some(bases.len()),
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        ..Aggregates::default()
    };
    println!("N_sol({}) = {}", run.n, bases.len());
    let path = output_path(args.output.as_ref(), &run, "nbody");
    save(&document(run, "nbody", blocks, aggregates), &path)
}

fn restricted_blocks(run: &RunConfig, tree: &ContinuationTree) -> Vec<SolutionBlock> {
    let mut out = Vec::new();
    for (k, row) in tree.restricted_solutions.iter().enumerate() {
        for (l, p) in row.iter().enumerate() {
            let q = tree.initial_guess(k, l);
            let report = verify_as(run, &tree.scale, SolutionKind::Restricted, &q);
            out.push(SolutionBlock {
                k: Some(k),
                l: Some(l),
                restricted_point: Some(*p),
                ..block(SolutionKind::Restricted, &q, report)
            });
        }
    }
    out
}

fn restricted(args: &RestrictedArgs) -> Result<()> {
    let t0 = Instant::now();
    let input = SolutionDocument::read(&args.input)?;
    let mut run = input.config.run.clone();
    if let Some(seed) = args.seed {
        run.seed = seed;
    }
    let parallel = setup_threads(&args.exec);
    let scale = run.scale()?;
    let bases: Vec<Vec<f64>> = input
        .blocks(SolutionKind::Base)
        .map(SolutionBlock::flat)
        .collect();
    if bases.is_empty() {
        return Err(CliError::Config(format!(
            "{} has no base solutions",
            args.input.display()
        )));
    }
    let tree = tree_from_bases(
        &run.masses()?,
        scale,
        bases,
        &run.continuation(parallel).restricted,
    )?;
    let mut blocks = base_blocks(&run, &scale, &tree.n_body_solutions);
    blocks.extend(restricted_blocks(&run, &tree));
    let aggregates = Aggregates {
        n_sol_n: Some(tree.n_sol_n()),
        n_sol_per_base: Some(tree.n_sol_per_base()),
        n_sol_n1: Some(tree.n_sol_n1()),
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        ..Aggregates::default()
    };
    println!(
        "N_sol({}) = {}, N_sol({}) = {}",
        run.n,
        tree.n_sol_n(),
        run.n + 1,
        tree.n_sol_n1()
    );
    let path = output_path(args.output.as_ref(), &run, "restricted");
    save(&document(run, "restricted", blocks, aggregates), &path)
}

fn continuation(args: &RunArgs) -> Result<()> {
    let t0 = Instant::now();
    let run = load(args, Method::Continuation)?;
    let parallel = setup_threads(&args.exec);
    let scale = run.scale()?;
    let masses = run.masses()?;
    let settings = run.continuation(parallel);
    settings.validate()?;
    let mut log = ProgressLog::open(args.progress.as_deref())?;
    let bases =
        step1_nbody_with_progress(&masses, scale, &settings.n_body, &mut |p| log.record(p))?;
    let tree = tree_from_bases(&masses, scale, bases, &settings.restricted)?;
    let tree = step3_refine(&tree, run.epsilon, run.delta, &settings.refine)?;

    let mut blocks = base_blocks(&run, &scale, &tree.n_body_solutions);
    for (k, row) in tree.refined_solutions.iter().enumerate() {
        for (l, r) in row.iter().enumerate() {
            let report = verify_as(&run, &scale, SolutionKind::Continued, &r.point);
            blocks.push(SolutionBlock {
                k: Some(k),
                l: Some(l),
                delta_q0: Some(r.delta_q0),
                restricted_point: Some(tree.restricted_solutions[k][l]),
                accepted: Some(r.accepted),
                objective: Some(r.objective),
                termination: Some(r.termination),
                ..block(SolutionKind::Continued, &r.point, report)
            });
        }
    }
    let failed = tree.failed_refinements();
    let distinct = quotient_distinct(&tree, run.mode.symmetry());
    let aggregates = Aggregates {
        n_sol_n: Some(tree.n_sol_n()),
        n_sol_per_base: Some(tree.n_sol_per_base()),
        n_sol_n1: Some(tree.n_sol_n1()),
        n_sol_distinct: Some(distinct),
        delta_q0: Some(delta_q0(&tree)?.1),
        failed_refinements: failed.iter().map(|&(k, l)| [k, l]).collect(),
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        ..Aggregates::default()
    };
    println!(
        "N_sol({}) = {}, N_sol({}) = {}, N0_sol({}) = {}, delta_q0 = {:.3e}",
        run.n,
        tree.n_sol_n(),
        run.n + 1,
        tree.n_sol_n1(),
        run.n + 1,
        distinct,
        aggregates.delta_q0.unwrap_or(0.0)
    );
    let path = output_path(args.output.as_ref(), &run, "continue");
    save(&document(run, "continue", blocks, aggregates), &path)?;
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!(
            "{} refinements did not converge",
            failed.len()
        )));
    }
    Ok(())
}

fn direct(args: &RunArgs) -> Result<()> {
    let t0 = Instant::now();
    let run = load(args, Method::Direct)?;
    let parallel = setup_threads(&args.exec);
    let scale = run.scale()?;
    let problem = ExtendedProblem::new(&run.extended_masses()?, scale)?;
    let mut log = ProgressLog::open(args.progress.as_deref())?;
    let outcome =
        multistart::run_with_progress(&problem, &run.multistart(parallel), &mut |p| log.record(p))?;
    if outcome.registry.is_empty() {
        return Err(CliError::Numerical("no solutions found".into()));
    }
    let blocks: Vec<SolutionBlock> = outcome
        .registry
        .records()
        .iter()
        .enumerate()
        .map(|(m, r)| SolutionBlock {
            m: Some(m),
            objective: Some(r.objective),
            ..block(
                SolutionKind::Direct,
                &r.point,
                verify_as(&run, &scale, SolutionKind::Direct, &r.point),
            )
        })
        .collect();
    let aggregates = Aggregates {
        n_sol_direct: Some(blocks.len()),
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
        ..Aggregates::default()
    };
    println!("N_hat_sol({}) = {}", run.n + 1, blocks.len());
    let path = output_path(args.output.as_ref(), &run, "direct");
    save(&document(run, "direct", blocks, aggregates), &path)
}

fn compare(args: &CompareArgs) -> Result<()> {
    let a = SolutionDocument::read(&args.a)?;
    let b = SolutionDocument::read(&args.b)?;
    let direct: Vec<Vec<f64>> = a
        .blocks(SolutionKind::Direct)
        .map(SolutionBlock::flat)
        .collect();
    if direct.is_empty() {
        return Err(CliError::Config(format!(
            "{} has no direct solutions",
            args.a.display()
        )));
    }
    if a.config.run.n != b.config.run.n {
        return Err(CliError::Config(
            "documents have different numbers of bodies".into(),
        ));
    }
    let tree = b.to_tree()?;
    if tree.refined_solutions.is_empty() {
        return Err(CliError::Config(format!(
            "{} has no continued solutions",
            args.b.display()
        )));
    }
    let by = if args.primaries {
        MatchDistances::Primaries
    } else {
        MatchDistances::AllBodies
    };
    let report = match_and_delta_r(&direct, &tree, by)?;
    println!(
        "N_hat_sol = {}, N0_sol = {}, counts agree: {}",
        report.direct_count, report.distinct_continued, report.counts_agree
    );
    println!("delta_R = {:.3e}", report.delta_r);
    println!("delta_q0 = {:.3e}", report.delta_q0);
    if let Some(path) = &args.output {
        let text = serde_json::to_string_pretty(&report).expect("finite report");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<()> {
    let doc = SolutionDocument::read(&args.input)?;
    std::fs::write(&args.output, svg::render(&doc)).map_err(|e| CliError::io(&args.output, e))
}

/// Whether a recomputed report confirms a solution of the given kind.
pub fn confirms(kind: SolutionKind, r: &VerificationReport) -> bool {
    let normalized =
        r.com_norm <= NORMALIZATION_TOLERANCE && r.inertia_dev <= NORMALIZATION_TOLERANCE;
    match kind {
        // the massless body does not enter the normalization
        SolutionKind::Restricted => r.passed(1e-10),
        _ => r.passed(RESIDUAL_TOLERANCE) && normalized,
    }
}

fn verify_document(args: &VerifyArgs) -> Result<()> {
    let doc = SolutionDocument::read(&args.input)?;
    let run = &doc.config.run;
    let scale = run.scale()?;
    let mut failures = 0;
    for (i, b) in doc.solutions.iter().enumerate() {
        let r = verify_as(run, &scale, b.kind, &b.flat());
        if !confirms(b.kind, &r) {
            failures += 1;
            println!(
                "solution {i} ({:?} k={:?} l={:?} m={:?}): residual {:?}, com {:.1e}, inertia {:.1e}{}",
                b.kind,
                b.k,
                b.l,
                b.m,
                r.residual_inf,
                r.com_norm,
                r.inertia_dev,
                r.failure.map(|f| format!(", {f}")).unwrap_or_default()
            );
        }
    }
    println!(
        "verified {} solutions, {failures} failed",
        doc.solutions.len()
    );
    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} solutions failed verification"
        )));
    }
    Ok(())
}
