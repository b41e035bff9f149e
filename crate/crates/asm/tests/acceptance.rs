//! Acceptance gate. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any failed. Runs without the libtest harness so
//! the timing criterion does not compete with parallel tests.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use jumprelax::bench::{self, Algo, BenchKind};
use jumprelax_core::encoder::{decode_verify, encode, final_layout, EncodedProgram};
use jumprelax_core::ir::{
    long_size, short_fits, Condition, Item, JumpKind, Mode, SizeAssignment, SourceProgram,
};
use jumprelax_core::layout::layout_all_short;
use jumprelax_core::oracles::{brute_force_minimal, iterative_fixpoint, OracleWork};
use jumprelax_core::relax::{relax, relax_with_order, QueuePolicy, RelaxationResult};
use jumprelax_core::testgen::{gen_cascade, gen_random, GenParams};

const ORACLE_SEEDS: u64 = 10_000;
const MAX_RANDOM_JUMPS: usize = 512;
const CASCADE_KS: std::ops::RangeInclusive<usize> = 1..=64;
const MINIMALITY_PROGRAMS: u64 = 2_000;
const BRUTE_FORCE_MAX: usize = 12;
const CONFLUENCE_PROGRAMS: u64 = 1_000;
const NEIGHBOR_BOUND: u64 = 130;
const SCALING_SIZES: [usize; 3] = [10_000, 20_000, 40_000];
const SCALING_REPS: usize = 5;
const LINEAR_GROWTH: (f64, f64) = (1.4, 2.8);
const ITERATIVE_GROWTH_MIN: f64 = 3.0;

/// Varies size, density, direction mix, conditional mix and mode by seed.
fn corpus_params(seed: u64, max_jumps: usize) -> GenParams {
    let mode = [Mode::Bits32, Mode::Bits16, Mode::Bits64][(seed % 3) as usize];
    GenParams {
        seed,
        jump_count: (seed.wrapping_mul(7919) % (max_jumps as u64 + 1)) as usize,
        blob_mean: [8, 24, 40, 64][(seed / 3 % 4) as usize].min(if mode == Mode::Bits16 { 40 } else { 64 }),
        backward_fraction: (seed % 5) as f64 / 4.0,
        conditional_fraction: (seed / 5 % 3) as f64 / 2.0,
        mode,
    }
}

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Outcome {
            ok,
            detail: detail.into(),
        }
    }
}

/// Every work-counter observation made anywhere in the suite.
#[derive(Default)]
struct WorkLog {
    runs: u64,
    violations: Vec<String>,
}

impl WorkLog {
    fn record(&mut self, label: &str, jumps: usize, result: &RelaxationResult) {
        self.runs += 1;
        let s = result.stats;
        if s.dequeues > jumps as u64 || s.neighbor_checks > NEIGHBOR_BOUND * s.dequeues {
            self.violations.push(format!(
                "{label}: n={jumps} dequeues={} checks={}",
                s.dequeues, s.neighbor_checks
            ));
        }
    }
}

fn run_relax(program: &SourceProgram) -> RelaxationResult {
    relax(&mut layout_all_short(program).expect("generated programs validate").jumps)
}

/// Encoding validity for one program: decode-verify passes, every short
/// displacement is in rel8 range, every decoded target hits its label.
fn encoding_valid<'a>(program: &'a SourceProgram, assignment: &SizeAssignment) -> Result<EncodedProgram<'a>, String> {
    let encoded = encode(program, assignment).map_err(|e| e.to_string())?;
    decode_verify(&encoded, program, assignment).map_err(|e| e.to_string())?;
    let layout = final_layout(program, assignment).map_err(|e| e.to_string())?;
    for (k, (_, _, target)) in program.jumps().enumerate() {
        let d = layout.displacement(k, target).ok_or("missing label")?;
        if !assignment.is_long(k) && !short_fits(d) {
            return Err(format!("jump {k}: short displacement {d}"));
        }
    }
    Ok(encoded)
}

struct Encodings {
    checked: u64,
    failures: Vec<String>,
}

impl Encodings {
    fn check<'a>(&mut self, label: &str, program: &'a SourceProgram, assignment: &SizeAssignment) -> Option<EncodedProgram<'a>> {
        self.checked += 1;
        match encoding_valid(program, assignment) {
            Ok(e) => Some(e),
            Err(e) => {
                self.failures.push(format!("{label}: {e}"));
                None
            }
        }
    }
}

fn criterion_1(enc: &mut Encodings) -> Outcome {
    let over = |blob: usize| {
        SourceProgram::new(Mode::Bits32, vec![Item::jmp("X"), Item::space(blob), Item::label("X")])
    };
    let mut problems = Vec::new();

    // 59 bytes spanned by a 2-byte form: displacement 57.
    let p = over(57);
    let a = run_relax(&p).assignment;
    match enc.check("59-byte jump", &p, &a) {
        Some(e) if e.listing[0].size == 2 && e.bytes[..2] == [0xEB, 0x39] => {}
        Some(e) => problems.push(format!("59-byte jump encoded as {:02X?}", e.entry_bytes(&e.listing[0]))),
        None => problems.push("59-byte jump failed to encode".into()),
    }

    // 237 bytes spanned by a 5-byte form: displacement 232.
    let p = over(232);
    let a = run_relax(&p).assignment;
    match enc.check("237-byte jump", &p, &a) {
        Some(e) if e.listing[0].size == 5 && e.bytes[..5] == [0xE9, 0xE8, 0, 0, 0] => {}
        Some(e) => problems.push(format!("237-byte jump encoded as {:02X?}", e.entry_bytes(&e.listing[0]))),
        None => problems.push("237-byte jump failed to encode".into()),
    }

    let cond = JumpKind::Conditional(Condition::E);
    let table = [
        (Mode::Bits32, JumpKind::Unconditional, 5),
        (Mode::Bits32, cond, 6),
        (Mode::Bits64, JumpKind::Unconditional, 5),
        (Mode::Bits64, cond, 6),
        (Mode::Bits16, JumpKind::Unconditional, 3),
        (Mode::Bits16, cond, 4),
    ];
    for (mode, kind, size) in table {
        if long_size(mode, kind) != size {
            problems.push(format!("long_size({mode:?}, {kind:?}) != {size}"));
        }
    }
    Outcome::check(problems.is_empty(), if problems.is_empty() {
        "59-byte span -> EB 39, 237-byte span -> E9 rel32, six long sizes match".to_string()
    } else {
        problems.join("; ")
    })
}

/// Criteria 2 and 7 share the corpus.
fn criteria_2_and_7(enc: &mut Encodings, work: &mut WorkLog) -> (Outcome, Outcome) {
    let mut programs = 0u64;
    let mut mismatches = Vec::new();
    let mut unmarked = 0u64;
    let mut drift = Vec::new();

    let mut corpus: Vec<(String, SourceProgram)> = (1..=ORACLE_SEEDS)
        .map(|s| (format!("random seed {s}"), gen_random(&corpus_params(s, MAX_RANDOM_JUMPS))))
        .collect();
    for k in CASCADE_KS {
        let mode = [Mode::Bits32, Mode::Bits16, Mode::Bits64][k % 3];
        corpus.push((format!("cascade k={k}"), gen_cascade(k, mode)));
    }

    for (label, program) in &corpus {
        programs += 1;
        let result = run_relax(program);
        work.record(label, program.jump_count(), &result);
        match iterative_fixpoint(program) {
            Ok(oracle) if oracle.assignment == result.assignment => {}
            Ok(_) => mismatches.push(label.clone()),
            Err(e) => mismatches.push(format!("{label}: oracle failed: {e}")),
        }
        let Some(encoded) = enc.check(label, program, &result.assignment) else {
            continue;
        };
        // Compare tracked distances against the rel8 byte actually emitted.
        let jump_entries = encoded
            .listing
            .iter()
            .filter(|e| matches!(program.items[e.item_index], Item::Jump { .. }));
        for (k, entry) in jump_entries.enumerate() {
            if result.assignment.is_long(k) {
                continue;
            }
            unmarked += 1;
            let emitted = encoded.entry_bytes(entry)[1] as i8 as i64;
            if emitted != result.final_distances[k] {
                drift.push(format!(
                    "{label} jump {k}: tracked {} emitted {emitted}",
                    result.final_distances[k]
                ));
            }
        }
    }

    let c2 = Outcome::check(
        mismatches.is_empty(),
        format!(
            "{} of {programs} programs match the iterative fixed point{}",
            programs - mismatches.len() as u64,
            first(&mismatches)
        ),
    );
    let c7 = Outcome::check(
        drift.is_empty() && unmarked > 0,
        format!(
            "{} of {unmarked} unmarked jumps track their emitted rel8 exactly{}",
            unmarked - drift.len() as u64,
            first(&drift)
        ),
    );
    (c2, c7)
}

fn criterion_3(enc: &mut Encodings, work: &mut WorkLog) -> Outcome {
    let mut failures = Vec::new();
    for seed in 1..=MINIMALITY_PROGRAMS {
        let program = gen_random(&corpus_params(seed, BRUTE_FORCE_MAX));
        let label = format!("small seed {seed}");
        let result = run_relax(&program);
        work.record(&label, program.jump_count(), &result);
        match brute_force_minimal(&program, BRUTE_FORCE_MAX) {
            Ok(brute) => {
                let least = matches!(brute.work, OracleWork::Enumeration { least_solution: true, .. });
                if brute.assignment != result.assignment || !least {
                    failures.push(label.clone());
                }
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
        enc.check(&label, &program, &result.assignment);
    }
    Outcome::check(
        failures.is_empty(),
        format!(
            "{} of {MINIMALITY_PROGRAMS} long sets equal the least feasible set{}",
            MINIMALITY_PROGRAMS - failures.len() as u64,
            first(&failures)
        ),
    )
}

fn criterion_6(work: &mut WorkLog) -> Outcome {
    let mut failures = Vec::new();
    for seed in 1..=CONFLUENCE_PROGRAMS {
        let program = gen_random(&corpus_params(seed, MAX_RANDOM_JUMPS));
        let fresh = layout_all_short(&program).unwrap().jumps;
        let runs: Vec<RelaxationResult> = [
            QueuePolicy::Fifo,
            QueuePolicy::Lifo,
            QueuePolicy::Shuffle(seed ^ 0x9E37_79B9_7F4A_7C15),
        ]
        .into_iter()
        .map(|policy| relax_with_order(&mut fresh.clone(), policy))
        .collect();
        for r in &runs {
            work.record(&format!("confluence seed {seed}"), program.jump_count(), r);
        }
        if runs.iter().any(|r| r.assignment != runs[0].assignment) {
            failures.push(format!("seed {seed}"));
        }
    }
    Outcome::check(
        failures.is_empty(),
        format!(
            "{} of {CONFLUENCE_PROGRAMS} programs agree under FIFO, LIFO and shuffle{}",
            CONFLUENCE_PROGRAMS - failures.len() as u64,
            first(&failures)
        ),
    )
}

fn criterion_5(work: &mut WorkLog) -> Outcome {
    let mut linear_ns = Vec::new();
    let mut iterative_ns = Vec::new();
    let programs: Vec<_> = SCALING_SIZES
        .iter()
        .map(|&n| bench::bench_program(BenchKind::Cascade, n, 1, Mode::Bits32))
        .collect();
    // All linear timings first so the oracle's allocations cannot disturb them.
    for (&n, program) in SCALING_SIZES.iter().zip(&programs) {
        work.record(&format!("cascade n={n}"), n, &run_relax(program));
        let row = bench::measure(Algo::Linear, program, SCALING_REPS).expect("cascade lays out");
        if row.dequeues > n as u64 || row.neighbor_checks > NEIGHBOR_BOUND * row.dequeues {
            work.violations.push(format!("bench n={n}"));
        }
        linear_ns.push(row.ns as f64);
    }
    for program in &programs {
        // Reported only; one repetition keeps the quadratic oracle affordable.
        let row = bench::measure(Algo::Iterative, program, 1).expect("cascade lays out");
        iterative_ns.push(row.ns as f64);
    }
    let ratios = |ns: &[f64]| ns.windows(2).map(|w| w[1] / w[0]).collect::<Vec<_>>();
    let linear = ratios(&linear_ns);
    let iterative = ratios(&iterative_ns);
    let linear_ok = linear
        .iter()
        .all(|&r| (LINEAR_GROWTH.0..=LINEAR_GROWTH.1).contains(&r));
    let counters_ok = work.violations.is_empty() && work.runs > 0;
    let iterative_note = if iterative.iter().all(|&r| r > ITERATIVE_GROWTH_MIN) {
        "superlinear as expected"
    } else {
        "below x3 (not gating)"
    };
    Outcome::check(
        counters_ok && linear_ok,
        format!(
            "work bound held on {} of {} runs{}; linear {} us, growth per doubling {} (gate {:.1}..{:.1}); iterative {} ({iterative_note})",
            work.runs - work.violations.len() as u64,
            work.runs,
            first(&work.violations),
            linear_ns.iter().map(|ns| format!("{:.0}", ns / 1e3)).collect::<Vec<_>>().join("/"),
            fmt_ratios(&linear),
            LINEAR_GROWTH.0,
            LINEAR_GROWTH.1,
            fmt_ratios(&iterative),
        ),
    )
}

fn fmt_ratios(r: &[f64]) -> String {
    r.iter().map(|x| format!("x{x:.2}")).collect::<Vec<_>>().join(", ")
}

fn first(list: &[String]) -> String {
    match list.first() {
        Some(f) => format!(" (first failure: {f})"),
        None => String::new(),
    }
}

fn report(results: &mut Vec<bool>, id: u32, name: &str, limit: Option<Duration>, elapsed: Duration, outcome: Outcome) {
    let in_time = limit.is_none_or(|l| elapsed < l);
    let ok = outcome.ok && in_time;
    let time_note = match limit {
        Some(l) if !in_time => format!(" [over time limit {l:?}]"),
        _ => String::new(),
    };
    println!(
        "[{}] criterion {id} ({name}) in {:.2?}: {}{time_note}",
        if ok { "PASS" } else { "FAIL" },
        elapsed,
        outcome.detail
    );
    results.push(ok);
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut enc = Encodings {
        checked: 0,
        failures: Vec::new(),
    };
    let mut work = WorkLog::default();

    let clock = Instant::now();
    let c1 = criterion_1(&mut enc);
    report(&mut results, 1, "encoding constants", Some(Duration::from_secs(1)), clock.elapsed(), c1);

    let clock = Instant::now();
    let (c2, c7) = criteria_2_and_7(&mut enc, &mut work);
    let t2 = clock.elapsed();
    report(&mut results, 2, "oracle equivalence", Some(Duration::from_secs(120)), t2, c2);

    let clock = Instant::now();
    let c3 = criterion_3(&mut enc, &mut work);
    report(&mut results, 3, "minimality", Some(Duration::from_secs(120)), clock.elapsed(), c3);

    let c4 = Outcome::check(
        enc.failures.is_empty() && enc.checked > 0,
        format!(
            "{} of {} programs decode-verify with in-range short displacements{}",
            enc.checked - enc.failures.len() as u64,
            enc.checked,
            first(&enc.failures)
        ),
    );
    report(&mut results, 4, "encoding validity", None, Duration::ZERO, c4);

    let clock = Instant::now();
    let c6 = criterion_6(&mut work);
    let t6 = clock.elapsed();

    let clock = Instant::now();
    let c5 = criterion_5(&mut work);
    report(&mut results, 5, "linear work bound", None, clock.elapsed(), c5);
    report(&mut results, 6, "confluence", None, t6, c6);
    report(&mut results, 7, "tracked distance exactness", None, t2, c7);

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
