//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or IO, 2 parse error, 3 semantic or range
//! error, 4 algorithms disagree.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use jumprelax_core::encoder::{decode_verify, encode, final_layout, EncodeError, VerifyError};
use jumprelax_core::ir::{Mode, SemanticError, SizeAssignment, SourceProgram};
use jumprelax_core::layout::layout_all_short;
use jumprelax_core::oracles::{brute_force_minimal, iterative_fixpoint, OracleError, DEFAULT_MAX_JUMPS};
use jumprelax_core::relax::relax;
use jumprelax_core::testgen::{gen_cascade, gen_mutual, gen_random, GenParams};

use crate::bench::{self, Algo, BenchError, BenchKind, BenchRow, MIN_REPS};
use crate::listing;
use crate::parser::{self, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", join_lines(.0))]
    Parse(Vec<ParseError>),
    #[error("{}", join_lines(.0))]
    Semantic(Vec<SemanticError>),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("decode-verify failed: {0}")]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Oracle(OracleError),
    #[error("{0}")]
    Mismatch(String),
}

fn join_lines<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Parse(_) => 2,
            CliError::Semantic(_) | CliError::Encode(_) | CliError::Verify(_) => 3,
            CliError::Oracle(OracleError::Semantic(_) | OracleError::LongRangeExceeded { .. }) => 3,
            CliError::Oracle(OracleError::TooManyJumps { .. }) => 1,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Semantic(errs) => CliError::Semantic(errs),
            other => CliError::Oracle(other),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Semantic(errs) => CliError::Semantic(errs),
            BenchError::Oracle(e) => e.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "jumprelax", version, about = "Assembler for x86 relative jumps with optimal short/long selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble a source file to a flat binary.
    Asm {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        listing: Option<PathBuf>,
        #[arg(long, default_value = "linear")]
        algo: Algo,
        /// Overrides the file's `.mode` directive.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Print the per-jump decisions of the linear algorithm.
    Explain {
        input: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Run every algorithm and check that they choose the same long jumps.
    Compare {
        input: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        /// Flip the linear algorithm's decision for this jump (exercises the mismatch path).
        #[arg(long, hide = true)]
        debug_flip_jump: Option<usize>,
    },
    /// Time the algorithms on generated programs and write CSV.
    Bench {
        #[arg(long, default_value = "cascade")]
        kind: BenchKind,
        /// Jump counts, separated by `,` or `;`.
        #[arg(long, value_parser = parse_list::<usize>)]
        jumps: Vec<Vec<usize>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Algorithms, separated by `,` or `;`.
        #[arg(long, value_parser = parse_list::<Algo>, default_value = "linear")]
        algo: Vec<Vec<Algo>>,
        #[arg(long, default_value_t = MIN_REPS)]
        reps: usize,
        #[arg(long, value_parser = parse_mode, default_value = "32")]
        mode: Mode,
        /// Output file; standard output when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a generated program as source text.
    Gen {
        #[arg(long)]
        kind: GenKind,
        #[arg(long, default_value_t = 16)]
        jumps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_parser = parse_mode, default_value = "32")]
        mode: Mode,
        #[arg(long, default_value_t = 40)]
        blob_mean: u32,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum GenKind {
    Mutual,
    Cascade,
    Random,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
        .ok()
        .and_then(Mode::from_bits)
        .ok_or_else(|| format!("unknown mode `{s}` (expected 16, 32 or 64)"))
}

/// Parses `a,b;c` into a list. Clap collects repeated flags, so each call
/// yields a `Vec` that is flattened afterwards.
fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split([',', ';'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Asm {
            input,
            out,
            listing,
            algo,
            mode,
        } => cmd_asm(&input, &out, listing.as_deref(), algo, mode),
        Command::Explain { input, mode } => cmd_explain(&input, mode, stdout),
        Command::Compare {
            input,
            mode,
            debug_flip_jump,
        } => cmd_compare(&input, mode, debug_flip_jump, stdout),
        Command::Bench {
            kind,
            jumps,
            seed,
            algo,
            reps,
            mode,
            csv,
        } => cmd_bench(kind, &jumps, seed, &algo, reps, mode, csv.as_deref(), stdout),
        Command::Gen {
            kind,
            jumps,
            seed,
            mode,
            blob_mean,
            out,
        } => cmd_gen(kind, jumps, seed, mode, blob_mean, out.as_deref(), stdout),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Reads, parses and validates a source file.
fn load(path: &Path, mode: Option<Mode>) -> Result<SourceProgram, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let mut program = parser::parse(&text).map_err(CliError::Parse)?;
    if let Some(mode) = mode {
        program.mode = mode;
    }
    jumprelax_core::ir::validate(&program).map_err(CliError::Semantic)?;
    Ok(program)
}

fn linear_assignment(program: &SourceProgram) -> Result<SizeAssignment, CliError> {
    let mut table = layout_all_short(program).map_err(CliError::Semantic)?.jumps;
    Ok(relax(&mut table).assignment)
}

fn cmd_asm(
    input: &Path,
    out: &Path,
    listing_path: Option<&Path>,
    algo: Algo,
    mode: Option<Mode>,
) -> Result<(), CliError> {
    let program = load(input, mode)?;
    let assignment = match algo {
        Algo::Linear => linear_assignment(&program)?,
        Algo::Iterative => iterative_fixpoint(&program)?.assignment,
    };
    let encoded = encode(&program, &assignment)?;
    decode_verify(&encoded, &program, &assignment)?;
    fs::write(out, &encoded.bytes).map_err(io_error(out))?;
    if let Some(path) = listing_path {
        fs::write(path, listing::render(&program, &encoded)).map_err(io_error(path))?;
    }
    Ok(())
}

fn cmd_explain(input: &Path, mode: Option<Mode>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let program = load(input, mode)?;
    let mut table = layout_all_short(&program).map_err(CliError::Semantic)?.jumps;
    let result = relax(&mut table);
    let encoded = encode(&program, &result.assignment)?;
    decode_verify(&encoded, &program, &result.assignment)?;
    let layout = final_layout(&program, &result.assignment)?;

    let mut text = format!(
        "{:>6} {:>10} {:>9} {:>9} {:>5} {:>8} {:>10} {:>10}\n",
        "jump", "short_at", "orig", "tracked", "size", "long_sz", "final_at", "final_disp"
    );
    for ((r, (_, _, target)), &tracked) in table
        .records
        .iter()
        .zip(program.jumps())
        .zip(&result.final_distances)
    {
        let k = r.index;
        text.push_str(&format!(
            "{:>6} {:>10} {:>9} {:>9} {:>5} {:>8} {:>10} {:>10}\n",
            k,
            r.all_short_start,
            r.original_distance,
            tracked,
            if r.marked { "long" } else { "short" },
            r.long_size,
            layout.jump_offsets[k],
            layout.displacement(k, target).expect("validated"),
        ));
    }
    stdout.write_all(text.as_bytes()).map_err(io_error(Path::new("<stdout>")))
}

fn cmd_compare(
    input: &Path,
    mode: Option<Mode>,
    flip: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let program = load(input, mode)?;
    let mut linear = linear_assignment(&program)?;
    if let Some(k) = flip {
        if k >= linear.len() {
            return Err(CliError::Usage(format!("no jump {k} to flip")));
        }
        linear.set_long(k, !linear.is_long(k));
    }
    let mut runs = vec![("linear", linear), ("iterative", iterative_fixpoint(&program)?.assignment)];
    if program.jump_count() <= DEFAULT_MAX_JUMPS {
        runs.push(("brute-force", brute_force_minimal(&program, DEFAULT_MAX_JUMPS)?.assignment));
    }

    let (reference_name, reference) = &runs[0];
    let mut diffs = Vec::new();
    for (name, assignment) in &runs[1..] {
        for k in 0..reference.len() {
            if reference.is_long(k) != assignment.is_long(k) {
                diffs.push(format!(
                    "jump {k}: {reference_name}={} {name}={}",
                    size_word(reference.is_long(k)),
                    size_word(assignment.is_long(k)),
                ));
            }
        }
    }
    if !diffs.is_empty() {
        return Err(CliError::Mismatch(format!(
            "algorithms disagree:\n{}",
            diffs.join("\n")
        )));
    }
    let size = final_layout(&program, reference)?.total_size;
    writeln!(
        stdout,
        "{} algorithms agreed: {} of {} jumps long, {} bytes",
        runs.len(),
        reference.long_count(),
        reference.len(),
        size
    )
    .map_err(io_error(Path::new("<stdout>")))
}

fn size_word(long: bool) -> &'static str {
    if long {
        "long"
    } else {
        "short"
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    kind: BenchKind,
    jumps: &[Vec<usize>],
    seed: u64,
    algos: &[Vec<Algo>],
    reps: usize,
    mode: Mode,
    csv_path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let jumps: Vec<usize> = jumps.iter().flatten().copied().collect();
    let algos: Vec<Algo> = algos.iter().flatten().copied().collect();
    if jumps.is_empty() {
        return Err(CliError::Usage("--jumps needs at least one count".into()));
    }
    if algos.is_empty() {
        return Err(CliError::Usage("--algo needs at least one algorithm".into()));
    }
    if reps < MIN_REPS {
        return Err(CliError::Usage(format!("--reps must be at least {MIN_REPS}")));
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for &n in &jumps {
        let program = bench::bench_program(kind, n, seed, mode);
        for &algo in &algos {
            rows.push(bench::measure(algo, &program, reps)?);
        }
    }
    let csv_error = |e: csv::Error| CliError::Usage(format!("writing CSV: {e}"));
    match csv_path {
        Some(path) => {
            let file = fs::File::create(path).map_err(io_error(path))?;
            bench::write_csv(&rows, file).map_err(csv_error)
        }
        None => bench::write_csv(&rows, stdout).map_err(csv_error),
    }
}

fn cmd_gen(
    kind: GenKind,
    jumps: usize,
    seed: u64,
    mode: Mode,
    blob_mean: u32,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let program = match kind {
        GenKind::Mutual => gen_mutual(),
        GenKind::Cascade => gen_cascade(jumps, mode),
        GenKind::Random => gen_random(&GenParams {
            seed,
            jump_count: jumps,
            blob_mean,
            mode,
            ..GenParams::default()
        }),
    };
    let text = parser::format(&program);
    match out {
        Some(path) => fs::write(path, text).map_err(io_error(path)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(io_error(Path::new("<stdout>"))),
    }
}
