//! Queue-driven selection of long jumps in linear time.
//!
//! Every jump starts short. Jumps whose all-short displacement is already out
//! of rel8 range are marked long and queued. Each dequeued jump `J` pushes the
//! tracked displacement of every unmarked jump that spans it further from zero
//! by `long_size(J) - 2`; any jump that leaves rel8 range is marked and queued
//! in turn. A jump is queued at most once.
//!
//! Only jumps whose first byte lies within [`WINDOW`] bytes of `J` are
//! examined. An unmarked jump spanning `J` has a displacement of at most 127
//! (or at least -128) that already covers `J`, so it cannot start further away
//! than that. Jumps are at least 2 bytes apart, bounding the scan to 128
//! records per dequeue.
//!
//! All positions are compared in all-short coordinates. Relative order of
//! jumps and labels is identical in every layout, so these coordinates decide
//! spanning even after distances have drifted.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{short_fits, SizeAssignment};
use crate::layout::{JumpRecord, JumpTable};

/// Scan radius in all-short bytes, inclusive on both sides.
pub const WINDOW: u64 = 128;

/// Upper bound on neighbor checks per dequeue, as asserted by the test suites.
pub const NEIGHBOR_CHECK_BOUND: u64 = 130;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueuePolicy {
    #[default]
    Fifo,
    Lifo,
    /// Dequeue a uniformly random pending jump, seeded.
    Shuffle(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelaxStats {
    pub seeded: u64,
    pub dequeues: u64,
    pub neighbor_checks: u64,
    pub max_neighbors_per_dequeue: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxationResult {
    pub assignment: SizeAssignment,
    /// `current_distance` of every record at termination.
    pub final_distances: Vec<i64>,
    pub stats: RelaxStats,
}

/// Whether growing `j` changes the displacement of `k`.
///
/// `j`'s extra bytes are inserted right after its short form, at
/// `j.all_short_start + 2`. A label sits in front of whatever follows it, so a
/// label at exactly that point moves while a label at `j.all_short_start`
/// stays put.
pub fn spans(k: &JumpRecord, j: &JumpRecord) -> bool {
    let target = k.target();
    if k.original_distance > 0 {
        k.all_short_start < j.all_short_start && target >= j.src_point() as i64
    } else if k.original_distance < 0 {
        k.all_short_start > j.all_short_start && target <= j.all_short_start as i64
    } else {
        false
    }
}

/// Runs the relaxation with a FIFO queue.
pub fn relax(table: &mut JumpTable) -> RelaxationResult {
    relax_with_order(table, QueuePolicy::Fifo)
}

pub fn relax_with_order(table: &mut JumpTable, policy: QueuePolicy) -> RelaxationResult {
    run(table, policy, Scan::Window).0
}

/// Same fixed point, but every dequeue scans the whole table instead of the
/// window. Returns the widest all-short gap between a dequeued jump and a jump
/// it updated; quadratic, for checking that the window never misses anything.
pub fn relax_exhaustive(table: &mut JumpTable) -> (RelaxationResult, u64) {
    run(table, QueuePolicy::Fifo, Scan::Everything)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scan {
    Window,
    Everything,
}

enum Worklist {
    Deque { queue: VecDeque<usize>, lifo: bool },
    Random { pending: Vec<usize>, rng: Box<ChaCha8Rng> },
}

impl Worklist {
    fn new(policy: QueuePolicy) -> Self {
        match policy {
            QueuePolicy::Fifo => Worklist::Deque {
                queue: VecDeque::new(),
                lifo: false,
            },
            QueuePolicy::Lifo => Worklist::Deque {
                queue: VecDeque::new(),
                lifo: true,
            },
            QueuePolicy::Shuffle(seed) => Worklist::Random {
                pending: Vec::new(),
                rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
            },
        }
    }

    fn push(&mut self, index: usize) {
        match self {
            Worklist::Deque { queue, .. } => queue.push_back(index),
            Worklist::Random { pending, .. } => pending.push(index),
        }
    }

    fn pop(&mut self) -> Option<usize> {
        match self {
            Worklist::Deque { queue, lifo: false } => queue.pop_front(),
            Worklist::Deque { queue, lifo: true } => queue.pop_back(),
            Worklist::Random { pending, rng } => {
                if pending.is_empty() {
                    None
                } else {
                    let at = rng.gen_range(0..pending.len());
                    Some(pending.swap_remove(at))
                }
            }
        }
    }
}

fn run(table: &mut JumpTable, policy: QueuePolicy, scan: Scan) -> (RelaxationResult, u64) {
    let records = &mut table.records;
    let n = records.len();
    let mut stats = RelaxStats::default();
    let mut widest_gap = 0u64;
    let mut work = Worklist::new(policy);

    for r in records.iter_mut() {
        if !short_fits(r.current_distance) {
            r.marked = true;
            work.push(r.index);
            stats.seeded += 1;
        }
    }

    while let Some(j) = work.pop() {
        stats.dequeues += 1;
        let j_start = records[j].all_short_start;
        let mut checked = 0u64;

        // Jumps before j: only forward ones can span it.
        let mut i = j;
        while i > 0 {
            i -= 1;
            if scan == Scan::Window && j_start - records[i].all_short_start > WINDOW {
                break;
            }
            checked += 1;
            if let Some(gap) = bump(records, i, j, &mut work) {
                widest_gap = widest_gap.max(gap);
            }
        }

        // Jumps after j: only backward ones can span it.
        for i in j + 1..n {
            if scan == Scan::Window && records[i].all_short_start - j_start > WINDOW {
                break;
            }
            checked += 1;
            if let Some(gap) = bump(records, i, j, &mut work) {
                widest_gap = widest_gap.max(gap);
            }
        }

        stats.neighbor_checks += checked;
        stats.max_neighbors_per_dequeue = stats.max_neighbors_per_dequeue.max(checked);
    }

    let assignment = SizeAssignment::from_flags(records.iter().map(|r| r.marked).collect());
    let final_distances = records.iter().map(|r| r.current_distance).collect();
    (
        RelaxationResult {
            assignment,
            final_distances,
            stats,
        },
        widest_gap,
    )
}

/// Applies `j`'s growth to `i` if `i` is unmarked and spans `j`. Returns the
/// all-short gap between the two when an update happened.
fn bump(records: &mut [JumpRecord], i: usize, j: usize, work: &mut Worklist) -> Option<u64> {
    let (k, grown) = (&records[i], &records[j]);
    if k.marked || !spans(k, grown) {
        return None;
    }
    let growth = grown.growth() as i64;
    let gap = k.all_short_start.abs_diff(grown.all_short_start);
    let k = &mut records[i];
    if k.original_distance > 0 {
        k.current_distance += growth;
    } else {
        k.current_distance -= growth;
    }
    if !short_fits(k.current_distance) {
        k.marked = true;
        work.push(i);
    }
    Some(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Item, Mode, SourceProgram};
    use crate::layout::layout_all_short;
    use crate::testgen::{gen_cascade, gen_mutual};
    use alloc::vec;

    fn record(start: u64, distance: i64) -> JumpRecord {
        JumpRecord {
            index: 0,
            item_index: 0,
            all_short_start: start,
            original_distance: distance,
            current_distance: distance,
            marked: false,
            long_size: 5,
        }
    }

    fn table_of(program: &SourceProgram) -> JumpTable {
        layout_all_short(program).unwrap().jumps
    }

    #[test]
    fn spans_forward_boundaries() {
        let j = record(2, 0);
        // target 128 from src 2; j's expansion point is 4
        assert!(spans(&record(0, 126), &j));
        // target exactly at j's first byte: nothing in between moves
        assert!(!spans(&record(0, 0), &j));
        // target exactly at j's expansion point moves
        assert!(spans(&record(0, 2), &j));
    }

    #[test]
    fn spans_backward_boundaries() {
        let j = record(10, 0);
        // k at 20, src 22; target exactly at j's first byte
        assert!(spans(&record(20, -12), &j));
        // target right after j moves together with k
        assert!(!spans(&record(20, -10), &j));
        // backward k before j never spans
        assert!(!spans(&record(4, -6), &j));
    }

    #[test]
    fn spans_zero_distance_never() {
        assert!(!spans(&record(0, 0), &record(2, 0)));
        assert!(!spans(&record(4, 0), &record(2, 0)));
    }

    #[test]
    fn mutual_example_stays_short() {
        let mut table = table_of(&gen_mutual());
        let result = relax(&mut table);
        assert_eq!(result.assignment.long_count(), 0);
        assert_eq!(result.final_distances, [2, -4]);
        assert_eq!(result.stats.dequeues, 0);
    }

    #[test]
    fn cascade_pair_marks_both() {
        let mut table = table_of(&gen_cascade(2, Mode::Bits32));
        assert_eq!(
            table.records.iter().map(|r| r.original_distance).collect::<Vec<_>>(),
            [126, 128]
        );
        let result = relax(&mut table);
        assert_eq!(result.assignment.long_set(), [0, 1]);
        assert_eq!(result.final_distances, [129, 128]);
        assert_eq!(result.stats.seeded, 1);
        assert_eq!(result.stats.dequeues, 2);
    }

    #[test]
    fn cascade_pair_lifo_and_shuffle() {
        for policy in [QueuePolicy::Lifo, QueuePolicy::Shuffle(9)] {
            let mut table = table_of(&gen_cascade(2, Mode::Bits32));
            assert_eq!(relax_with_order(&mut table, policy).assignment.long_set(), [0, 1]);
        }
    }

    #[test]
    fn single_jump_at_126_stays_short() {
        let p = SourceProgram::new(
            Mode::Bits32,
            vec![Item::jmp("X"), Item::space(126), Item::label("X")],
        );
        let result = relax(&mut table_of(&p));
        assert!(!result.assignment.is_long(0));
        assert_eq!(result.final_distances, [126]);
    }

    #[test]
    fn empty_seed_marks_nothing() {
        let p = SourceProgram::new(
            Mode::Bits16,
            vec![Item::label("A"), Item::space(100), Item::jmp("A"), Item::jmp("A")],
        );
        for policy in [QueuePolicy::Fifo, QueuePolicy::Lifo, QueuePolicy::Shuffle(1)] {
            let result = relax_with_order(&mut table_of(&p), policy);
            assert_eq!(result.assignment.long_count(), 0);
            assert_eq!(result.stats.dequeues, 0);
        }
    }

    #[test]
    fn backward_growth_is_subtracted() {
        // A: space 120, B: jmp far (long), jmp A (backward -126 -> -129)
        let p = SourceProgram::new(
            Mode::Bits32,
            vec![
                Item::label("A"),
                Item::space(122),
                Item::jmp("F"),
                Item::jmp("A"),
                Item::space(200),
                Item::label("F"),
            ],
        );
        let mut table = table_of(&p);
        assert_eq!(table.records[1].original_distance, -126);
        let result = relax(&mut table);
        assert_eq!(result.final_distances[1], -129);
        assert_eq!(result.assignment.long_set(), [0, 1]);
    }

    #[test]
    fn exhaustive_scan_agrees_on_cascade() {
        let mut a = table_of(&gen_cascade(40, Mode::Bits32));
        let mut b = a.clone();
        let windowed = relax(&mut a);
        let (full, gap) = relax_exhaustive(&mut b);
        assert_eq!(windowed.assignment, full.assignment);
        assert_eq!(windowed.final_distances, full.final_distances);
        assert!(gap <= WINDOW);
    }

    #[test]
    fn reset_restores_layout_state() {
        let mut table = table_of(&gen_cascade(3, Mode::Bits16));
        let fresh = table.clone();
        relax(&mut table);
        assert_ne!(table, fresh);
        table.reset();
        assert_eq!(table, fresh);
    }
}
