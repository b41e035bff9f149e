//! Deterministic program generators.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit seed, so a given
//! parameter set always yields the same program on every platform.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::ir::{long_size, Condition, Item, JumpKind, Mode, SourceProgram, SHORT_SIZE};

/// Fraction of jumps whose target is placed right at the rel8 boundary.
const BOUNDARY_FRACTION: f64 = 0.5;
/// Boundary-targeted displacements land within this many bytes of the limit.
pub const BOUNDARY_SLACK: i64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub jump_count: usize,
    /// Mean blob length between consecutive jumps.
    pub blob_mean: u32,
    pub backward_fraction: f64,
    pub conditional_fraction: f64,
    pub mode: Mode,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 1,
            jump_count: 16,
            blob_mean: 40,
            backward_fraction: 0.3,
            conditional_fraction: 0.5,
            mode: Mode::Bits32,
        }
    }
}

impl GenParams {
    pub fn with_seed(seed: u64, jump_count: usize) -> Self {
        GenParams {
            seed,
            jump_count,
            ..GenParams::default()
        }
    }
}

/// Random jumps separated by geometrically sized blobs of random bytes.
///
/// Half of the jumps get a label placed so their all-short displacement is
/// within [`BOUNDARY_SLACK`] bytes of the rel8 limit in their direction; the
/// rest pick uniformly among the labels sitting in front of each jump (plus
/// the program start and end) on the chosen side.
pub fn gen_random(params: &GenParams) -> SourceProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.jump_count;
    let backward_p = params.backward_fraction.clamp(0.0, 1.0);
    let conditional_p = params.conditional_fraction.clamp(0.0, 1.0);
    let blob_len = Geometric::new(1.0 / (params.blob_mean as f64 + 1.0)).expect("p in (0, 1]");

    // Skeleton: blob, jump, blob, jump, ..., blob.
    let mut blobs: Vec<Vec<u8>> = Vec::with_capacity(n + 1);
    let mut starts: Vec<u64> = Vec::with_capacity(n);
    let mut offset = 0u64;
    for k in 0..=n {
        let mut blob = alloc::vec![0u8; blob_len.sample(&mut rng) as usize];
        rng.fill_bytes(&mut blob);
        offset += blob.len() as u64;
        blobs.push(blob);
        if k < n {
            starts.push(offset);
            offset += SHORT_SIZE as u64;
        }
    }
    let total = offset;

    // Anchors: program start, in front of every jump, program end.
    let mut anchors: Vec<u64> = Vec::with_capacity(n + 2);
    anchors.push(0);
    anchors.extend(&starts);
    anchors.push(total);
    anchors.dedup();

    let inside_jump = |at: u64| starts.binary_search(&(at.wrapping_sub(1))).is_ok();

    let mut kinds = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for &start in &starts {
        let src = start + SHORT_SIZE as u64;
        let backward = rng.gen_bool(backward_p);
        let kind = if rng.gen_bool(conditional_p) {
            JumpKind::Conditional(Condition::new(rng.gen_range(0..16)).unwrap())
        } else {
            JumpKind::Unconditional
        };

        let mut target = None;
        if rng.gen_bool(BOUNDARY_FRACTION) {
            let d = if backward {
                -rng.gen_range(121..=121 + 2 * BOUNDARY_SLACK - 1)
            } else {
                rng.gen_range(120..=120 + 2 * BOUNDARY_SLACK - 1)
            };
            let t = src as i64 + d;
            if (0..=total as i64).contains(&t) {
                let mut t = t as u64;
                if inside_jump(t) {
                    t += 1;
                }
                target = Some(t);
            }
        }
        let target = target.unwrap_or_else(|| {
            // anchors[here] == start
            let here = anchors.partition_point(|&a| a < start);
            if backward {
                anchors[rng.gen_range(0..=here)]
            } else {
                anchors[rng.gen_range(here + 1..anchors.len())]
            }
        });
        kinds.push(kind);
        targets.push(target);
    }

    let mut names: BTreeMap<u64, String> = BTreeMap::new();
    for &t in &targets {
        names.entry(t).or_default();
    }
    for (i, name) in names.values_mut().enumerate() {
        *name = format!("L{i}");
    }

    let mut items = Vec::with_capacity(3 * n + 2);
    let mut labels = names.iter().peekable();
    let mut at = 0u64;
    for (k, blob) in blobs.into_iter().enumerate() {
        let end = at + blob.len() as u64;
        let mut cut = at;
        let last = k == n;
        while let Some((&pos, name)) = labels.next_if(|(&pos, _)| pos < end || (last && pos == end)) {
            if pos > cut {
                items.push(Item::Blob(blob[(cut - at) as usize..(pos - at) as usize].to_vec()));
                cut = pos;
            }
            items.push(Item::Label(name.clone()));
        }
        if end > cut {
            items.push(Item::Blob(blob[(cut - at) as usize..].to_vec()));
        }
        at = end;
        if k < n {
            while let Some((_, name)) = labels.next_if(|(&pos, _)| pos == at) {
                items.push(Item::Label(name.clone()));
            }
            items.push(Item::Jump {
                kind: kinds[k],
                target: names[&targets[k]].clone(),
            });
            at += SHORT_SIZE as u64;
        }
    }
    debug_assert!(labels.next().is_none());

    SourceProgram::new(params.mode, items)
}

/// `k` forward jumps where marking the last one forces each earlier one long
/// in turn, one promotion per step.
///
/// Jump `i` targets the label just past jump `i + 1`, so it spans only that
/// jump. The last jump starts one byte beyond rel8 range (128). Every earlier
/// jump sits close enough to the limit that one expansion pushes it over:
/// 126 when the long form adds two or more bytes, 127 when it adds one.
/// `k = 0` yields an empty program.
pub fn gen_cascade(k: usize, mode: Mode) -> SourceProgram {
    let growth = (long_size(mode, JumpKind::Unconditional) - SHORT_SIZE) as usize;
    let near = 128 - growth.min(2);
    let mut items = Vec::with_capacity(3 * k + 1);
    for i in 1..=k {
        items.push(Item::jmp(format!("L{i}")));
        if i > 1 {
            items.push(Item::label(format!("L{}", i - 1)));
        }
        if i < k {
            // jump i spans this gap and jump i + 1
            items.push(Item::space(near - SHORT_SIZE as usize));
        }
    }
    if k > 0 {
        items.push(Item::space(128));
        items.push(Item::label(format!("L{k}")));
    }
    SourceProgram::new(mode, items)
}

/// The two mutually dependent jumps:
///
/// ```text
/// LabelA:
///     jmp LabelB
///     jmp LabelA
/// LabelB:
/// ```
pub fn gen_mutual() -> SourceProgram {
    SourceProgram::new(
        Mode::Bits32,
        alloc::vec![
            Item::label("LabelA"),
            Item::jmp("LabelB"),
            Item::jmp("LabelA"),
            Item::label("LabelB"),
        ],
    )
}
