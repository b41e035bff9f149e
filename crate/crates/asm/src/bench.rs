//! Scaling benchmarks. Only the size-selection phase is timed: all-short
//! layout plus relaxation for the linear algorithm, the whole fixed-point loop
//! for the iterative one. Generation, encoding and IO stay outside the clock.

use std::io;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use jumprelax_core::encoder::final_layout;
use jumprelax_core::ir::{Mode, SourceProgram};
use jumprelax_core::layout::layout_all_short;
use jumprelax_core::oracles::{iterative_fixpoint, OracleError};
use jumprelax_core::relax::relax;
use jumprelax_core::testgen::{gen_cascade, gen_random, GenParams};

pub const MIN_REPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Linear,
    Iterative,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Linear => "linear",
            Algo::Iterative => "iterative",
        }
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Algo::Linear),
            "iterative" => Ok(Algo::Iterative),
            _ => Err(format!("unknown algorithm `{s}` (expected linear or iterative)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Cascade,
    Random,
}

impl FromStr for BenchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cascade" => Ok(BenchKind::Cascade),
            "random" => Ok(BenchKind::Random),
            _ => Err(format!("unknown program kind `{s}` (expected cascade or random)")),
        }
    }
}

/// One CSV row: `algo,jumps,ns,dequeues,neighbor_checks,bytes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub algo: &'static str,
    pub jumps: usize,
    /// Minimum wall time over all repetitions.
    pub ns: u128,
    pub dequeues: u64,
    pub neighbor_checks: u64,
    /// Size of the final image.
    pub bytes: u64,
}

pub fn bench_program(kind: BenchKind, jumps: usize, seed: u64, mode: Mode) -> SourceProgram {
    match kind {
        BenchKind::Cascade => gen_cascade(jumps, mode),
        BenchKind::Random => gen_random(&GenParams {
            seed,
            jump_count: jumps,
            mode,
            ..GenParams::default()
        }),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("program does not lay out: {0:?}")]
    Semantic(Vec<jumprelax_core::ir::SemanticError>),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Times `algo` on `program` `reps` times and keeps the fastest run. With at
/// least [`MIN_REPS`] repetitions one extra untimed run warms caches and the
/// allocator first.
pub fn measure(algo: Algo, program: &SourceProgram, reps: usize) -> Result<BenchRow, BenchError> {
    if reps >= MIN_REPS {
        match algo {
            Algo::Linear => {
                let mut table = layout_all_short(program).map_err(BenchError::Semantic)?.jumps;
                relax(&mut table);
            }
            Algo::Iterative => {
                iterative_fixpoint(program)?;
            }
        }
    }
    let mut best = u128::MAX;
    let mut row = BenchRow {
        algo: algo.name(),
        jumps: program.jump_count(),
        ns: 0,
        dequeues: 0,
        neighbor_checks: 0,
        bytes: 0,
    };
    for _ in 0..reps.max(1) {
        let assignment = match algo {
            Algo::Linear => {
                let clock = Instant::now();
                let mut table = layout_all_short(program).map_err(BenchError::Semantic)?.jumps;
                let result = relax(&mut table);
                best = best.min(clock.elapsed().as_nanos());
                row.dequeues = result.stats.dequeues;
                row.neighbor_checks = result.stats.neighbor_checks;
                result.assignment
            }
            Algo::Iterative => {
                let clock = Instant::now();
                let report = iterative_fixpoint(program)?;
                best = best.min(clock.elapsed().as_nanos());
                report.assignment
            }
        };
        row.bytes = final_layout(program, &assignment)
            .expect("assignment sized from the same program")
            .total_size;
    }
    row.ns = best;
    Ok(row)
}

pub fn write_csv<W: io::Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
