use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use pgm_core::bounds::{verify_appendix, AppendixCheck, BoundReport, VerificationSummary};
use pgm_core::ensemble::{from_gram, from_json, gram_from_json, haar_random, to_json, GramMatrix};
use pgm_core::suite::{run_suite, VerifySpec};
use pgm_core::sweep::{sweep, to_csv, SweepSpec, DOMINANCE_MIN_M};
use pgm_core::Exec;

#[derive(Parser)]
#[command(
    name = "pgm",
    version,
    about = "Worst-case state discrimination: PGM, sequential measurement and their bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an ensemble file.
    Gen(GenArgs),
    /// Evaluate success probabilities and bounds for an ensemble file.
    Eval(EvalArgs),
    /// Linear and refined bounds over an F grid, as CSV.
    Sweep(SweepArgs),
    /// Randomized property suite over Haar-random ensembles.
    Verify(VerifyArgs),
    /// Grid and critical-point certification of the positivity argument.
    Appendix(AppendixArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Haar,
    EqualOverlap,
    FromGram,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Dimension; required for haar, optional padding for the Gram kinds.
    #[arg(long)]
    d: Option<usize>,
    /// Number of states (haar, equal-overlap).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Common real overlap (equal-overlap).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// JSON Gram matrix: rows of reals or [re, im] pairs (from-gram).
    #[arg(long)]
    gram: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Slack for the dominance flags.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Also write the CSV report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    f_max: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Inclusive dimension range, `LO..HI` or a single value.
    #[arg(long, default_value = "2..16", value_parser = parse_range)]
    d: (usize, usize),
    /// Inclusive state-count range, `LO..HI` or a single value.
    #[arg(long, default_value = "2..8", value_parser = parse_range)]
    m: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Keep m ≤ d so every ensemble is linearly independent.
    #[arg(long)]
    independent_only: bool,
    /// Where the first counterexample ensemble is written.
    #[arg(long, default_value = "counterexample.json")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct AppendixArgs {
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    #[arg(long, default_value_t = 64)]
    m_max: usize,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once("..") {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi.strip_prefix('=').unwrap_or(hi))?)),
        None => parse(s).map(|v| (v, v)),
    }
}

enum Failure {
    /// A checked property does not hold.
    Violation(String),
    Input(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Input(m) | Failure::Io(m) => m,
        }
    }
}

impl From<pgm_core::Error> for Failure {
    fn from(e: pgm_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn required<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Input(format!("--{flag} is required for --kind {kind}")))
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let e = match args.kind {
        Kind::Haar => haar_random(
            required(args.d, "d", "haar")?,
            required(args.m, "m", "haar")?,
            args.seed,
        )?,
        Kind::EqualOverlap => {
            let g = GramMatrix::equal_overlap(
                required(args.m, "m", "equal-overlap")?,
                required(args.c, "c", "equal-overlap")?,
            )?;
            from_gram(&g, args.d)?
        }
        Kind::FromGram => {
            let text = read(&required(args.gram, "gram", "from-gram")?)?;
            from_gram(&gram_from_json(&text)?, args.d)?
        }
    };
    let mut text = to_json(&e);
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

const EVAL_HEADER: &str =
    "m,d,F,pgm,sm,linear,refined,eq3,refined_ge_linear,pgm_ge_refined,pgm_ge_linear,sm_ge_eq3";

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "na",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| x.to_string())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let e = from_json(&read(&args.input)?)?;
    let r = BoundReport::for_ensemble(&e)?;
    let dom = r.dominance(args.tol);
    let fields: [(&str, String); 12] = [
        ("m", r.m.to_string()),
        ("d", r.d.map_or("na".into(), |d| d.to_string())),
        ("F", r.f.to_string()),
        ("pgm", opt(r.pgm_exact)),
        ("sm", opt(r.sm_exact)),
        ("linear", r.linear.to_string()),
        ("refined", r.refined.to_string()),
        ("eq3", opt(r.eq3)),
        (
            "refined_ge_linear",
            flag((r.m >= DOMINANCE_MIN_M).then_some(dom.refined_ge_linear)).into(),
        ),
        ("pgm_ge_refined", flag(dom.pgm_ge_refined).into()),
        ("pgm_ge_linear", flag(dom.pgm_ge_linear).into()),
        ("sm_ge_eq3", flag(dom.sm_ge_eq3).into()),
    ];
    for (name, value) in &fields {
        println!("{name:<18} {value}");
    }
    if let Some(out) = &args.out {
        let row: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
        write(out, &format!("{EVAL_HEADER}\n{}\n", row.join(",")))?;
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let spec = SweepSpec {
        m_values: args.m,
        f_max: args.f_max,
        steps: args.steps,
    };
    let rows = sweep(&spec, Exec::default())?;
    emit(args.out.as_deref(), &to_csv(&rows))
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let spec = VerifySpec {
        trials: args.trials,
        d_range: args.d,
        m_range: args.m,
        seed: args.seed,
        tolerance: args.tol,
        independent_only: args.independent_only,
    };
    let report = run_suite(&spec, Exec::default())?;
    println!(
        "trials {}  d {}..{}  m {}..{}  seed {}  tol {:e}  independent_only {}",
        spec.trials,
        spec.d_range.0,
        spec.d_range.1,
        spec.m_range.0,
        spec.m_range.1,
        spec.seed,
        spec.tolerance,
        spec.independent_only
    );
    // excess: how far the worst trial overshoots the inequality (negative
    // means slack); margin: tolerance minus excess, negative when violated.
    println!(
        "{:<24} {:>9} {:>10} {:>12} {:>12}",
        "check", "evaluated", "violations", "max_excess", "min_margin"
    );
    let outcomes = report.evaluate();
    for o in &outcomes {
        let (excess, margin) = if o.evaluated == 0 {
            ("na".to_string(), "na".to_string())
        } else {
            (
                format!("{:.3e}", o.max_excess),
                format!("{:.3e}", o.tolerance - o.max_excess),
            )
        };
        println!(
            "{:<24} {:>9} {:>10} {:>12} {:>12}",
            o.check.name(),
            o.evaluated,
            o.violations,
            excess,
            margin
        );
    }
    let Some(index) = report.first_violation() else {
        println!("all checks passed");
        return Ok(());
    };
    let failing: Vec<&str> = outcomes
        .iter()
        .filter(|o| o.first_violation == Some(index))
        .map(|o| o.check.name())
        .collect();
    let t = &report.trials[index];
    let e = spec.trial_ensemble(index)?;
    write(&args.out, &(to_json(&e) + "\n"))?;
    Err(Failure::Violation(format!(
        "trial {index} (d={}, m={}, F={}) violates {}; counterexample written to {}",
        t.d,
        t.m,
        t.f,
        failing.join(", "),
        args.out.display()
    )))
}

fn appendix_report(s: &VerificationSummary) -> String {
    let mut out = String::new();
    let w = &mut out;
    let h = &s.h_critical;
    let p = &s.p_critical;
    let _ = writeln!(w, "h(F, 4) critical point   F+ = {:.15}", h.location);
    let _ = writeln!(w, "                         h(F+, 4) = {:.15}", h.value);
    let _ = writeln!(
        w,
        "                         h'' = {:.6}, slope = {:.1e}",
        h.second_derivative, h.slope
    );
    let _ = writeln!(w, "p(F) critical point      F+ = {:.15}", p.location);
    let _ = writeln!(w, "                         p(F+) = {:.15}", p.value);
    let _ = writeln!(
        w,
        "                         p'' = {:.6}, slope = {:.1e}",
        p.second_derivative, p.slope
    );
    let _ = writeln!(
        w,
        "grid: step {}, {} points, m 4..={}, {} cells",
        s.grid_step, s.grid_points, s.m_max, s.cells
    );
    for check in AppendixCheck::ALL {
        let t = s.tally(check);
        let _ = writeln!(
            w,
            "  {:<28} evaluated {:>8}  violations {}",
            check.name(),
            t.evaluated,
            t.violations
        );
    }
    let ext = |name: &str, e: &pgm_core::bounds::GridExtremum| {
        format!("{name:<28} {:.6e} at F = {}, m = {}", e.value, e.f, e.m)
    };
    let _ = writeln!(w, "  {}", ext("min h", &s.min_h));
    let _ = writeln!(w, "  {}", ext("min h at m = 4", &s.min_h_at_m4));
    let _ = writeln!(
        w,
        "  {}",
        ext("min refined - linear", &s.min_dominance_margin)
    );
    let _ = writeln!(w, "  {}", ext("min dh/dm (m > 4)", &s.min_dh_dm));
    let _ = writeln!(
        w,
        "  max |g - F h| / scale        {:.3e}",
        s.max_factorization_residual
    );
    for c in &s.negative_controls {
        let first = c
            .first_without_dominance
            .map_or("none".to_string(), |f| f.to_string());
        let _ = writeln!(
            w,
            "negative control m = {}: refined <= linear at {} of {} points, first at F = {first}",
            c.m, c.points_without_dominance, c.points
        );
    }
    for v in s.violations.iter().take(10) {
        let _ = writeln!(
            w,
            "violation {} at F = {}, m = {}: {:e}",
            v.check.name(),
            v.f,
            v.m,
            v.value
        );
    }
    let _ = writeln!(
        w,
        "certified: {}",
        if s.is_certified() { "yes" } else { "no" }
    );
    out
}

fn appendix(args: AppendixArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let summary = verify_appendix(args.grid_step, args.m_max, Exec::default())?;
    print!("{}", appendix_report(&summary));
    println!("elapsed {:.3} s", start.elapsed().as_secs_f64());
    if summary.is_certified() {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "{} grid violations",
            summary.violations.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Verify(a) => verify(a),
        Command::Appendix(a) => appendix(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
