//! Reference answers that share no code with the fast path.
//!
//! Both oracles recompute the exact layout from scratch for every candidate
//! assignment. [`iterative_fixpoint`] grows the long set one full relayout at
//! a time, quadratic in the worst case. [`brute_force_minimal`] enumerates
//! every assignment of a small program.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::ir::{
    encoded_size, long_fits, short_fits, Item, JumpKind, Mode, SemanticError, SizeAssignment,
    SourceProgram,
};

pub const DEFAULT_MAX_JUMPS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("invalid program: {0:?}")]
    Semantic(Vec<SemanticError>),
    #[error("{jumps} jumps exceed the enumeration limit of {max}")]
    TooManyJumps { jumps: usize, max: usize },
    #[error("jump {jump}: displacement {displacement} exceeds the {mode}-bit long range")]
    LongRangeExceeded {
        jump: usize,
        displacement: i64,
        mode: Mode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleWork {
    FixedPoint {
        /// Relayouts performed, including the final one that promoted nothing.
        rounds: usize,
        /// Rounds that promoted at least one jump.
        promoting_rounds: usize,
    },
    Enumeration {
        tried: u64,
        feasible: u64,
        /// The chosen long set is contained in every feasible long set.
        least_solution: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub assignment: SizeAssignment,
    pub total_size: u64,
    pub work: OracleWork,
}

struct ResolvedJump {
    item: usize,
    kind: JumpKind,
    target_item: usize,
}

/// Jumps with their target resolved to the index of the label item.
struct Resolved {
    mode: Mode,
    jumps: Vec<ResolvedJump>,
    /// Jump index of each item, for jump items.
    jump_of_item: Vec<Option<usize>>,
}

impl Resolved {
    fn new(program: &SourceProgram) -> Result<Self, OracleError> {
        crate::ir::validate(program).map_err(OracleError::Semantic)?;
        let labels: BTreeMap<&str, usize> = program
            .items
            .iter()
            .enumerate()
            .filter_map(|(i, item)| match item {
                Item::Label(name) => Some((name.as_str(), i)),
                _ => None,
            })
            .collect();
        let mut jumps = Vec::new();
        let mut jump_of_item = Vec::with_capacity(program.items.len());
        for (i, item) in program.items.iter().enumerate() {
            if let Item::Jump { kind, target } = item {
                jump_of_item.push(Some(jumps.len()));
                jumps.push(ResolvedJump {
                    item: i,
                    kind: *kind,
                    target_item: labels[target.as_str()],
                });
            } else {
                jump_of_item.push(None);
            }
        }
        Ok(Resolved {
            mode: program.mode,
            jumps,
            jump_of_item,
        })
    }

    /// Exact displacement of every jump under `long`, plus the total size.
    /// `offsets` is scratch space for per-item offsets.
    fn displacements(
        &self,
        program: &SourceProgram,
        long: &[bool],
        offsets: &mut Vec<u64>,
        out: &mut Vec<i64>,
    ) -> u64 {
        offsets.clear();
        let mut at = 0u64;
        for (item, jump) in program.items.iter().zip(&self.jump_of_item) {
            offsets.push(at);
            at += match (item, jump) {
                (Item::Blob(bytes), _) => bytes.len() as u64,
                (Item::Jump { .. }, Some(k)) => {
                    encoded_size(self.mode, self.jumps[*k].kind, long[*k]) as u64
                }
                _ => 0,
            };
        }
        offsets.push(at);
        out.clear();
        out.extend(self.jumps.iter().map(|j| {
            // The item after a jump starts where the jump ends.
            offsets[j.target_item] as i64 - offsets[j.item + 1] as i64
        }));
        at
    }

    fn fits(&self, long: &[bool], displacements: &[i64]) -> bool {
        long.iter().zip(displacements).all(|(&l, &d)| {
            if l {
                long_fits(d, self.mode)
            } else {
                short_fits(d)
            }
        })
    }
}

/// Whether every jump's exact displacement fits the form it was assigned.
pub fn feasible(program: &SourceProgram, assignment: &SizeAssignment) -> bool {
    let Ok(resolved) = Resolved::new(program) else {
        return false;
    };
    if assignment.len() != resolved.jumps.len() {
        return false;
    }
    let (mut offsets, mut disp) = (Vec::new(), Vec::new());
    resolved.displacements(program, assignment.flags(), &mut offsets, &mut disp);
    resolved.fits(assignment.flags(), &disp)
}

/// Start all short; each round relays out the whole program and promotes
/// every short jump that no longer fits. Promotions are never undone.
pub fn iterative_fixpoint(program: &SourceProgram) -> Result<OracleReport, OracleError> {
    let resolved = Resolved::new(program)?;
    let n = resolved.jumps.len();
    let mut long = alloc::vec![false; n];
    let (mut offsets, mut disp) = (Vec::new(), Vec::new());
    let mut rounds = 0;
    let mut promoting_rounds = 0;
    let total_size = loop {
        rounds += 1;
        let total = resolved.displacements(program, &long, &mut offsets, &mut disp);
        let mut promoted = false;
        for (k, &d) in disp.iter().enumerate() {
            if !long[k] && !short_fits(d) {
                long[k] = true;
                promoted = true;
            }
        }
        if !promoted {
            break total;
        }
        promoting_rounds += 1;
    };
    if let Some(k) = (0..n).find(|&k| long[k] && !long_fits(disp[k], resolved.mode)) {
        return Err(OracleError::LongRangeExceeded {
            jump: k,
            displacement: disp[k],
            mode: resolved.mode,
        });
    }
    Ok(OracleReport {
        assignment: SizeAssignment::from_flags(long),
        total_size,
        work: OracleWork::FixedPoint {
            rounds,
            promoting_rounds,
        },
    })
}

/// Enumerates all `2^n` assignments and returns the smallest feasible one,
/// ties broken by the lexicographically least long set.
pub fn brute_force_minimal(
    program: &SourceProgram,
    max_jumps: usize,
) -> Result<OracleReport, OracleError> {
    let resolved = Resolved::new(program)?;
    let n = resolved.jumps.len();
    if n > max_jumps || n >= 64 {
        return Err(OracleError::TooManyJumps {
            jumps: n,
            max: max_jumps.min(63),
        });
    }
    let (mut offsets, mut disp) = (Vec::new(), Vec::new());
    let mut long = alloc::vec![false; n];
    let mut feasible_masks: Vec<(u64, u64)> = Vec::new();
    let tried = 1u64 << n;
    for mask in 0..tried {
        for (k, l) in long.iter_mut().enumerate() {
            *l = mask >> k & 1 == 1;
        }
        let total = resolved.displacements(program, &long, &mut offsets, &mut disp);
        if resolved.fits(&long, &disp) {
            feasible_masks.push((mask, total));
        }
    }
    let &(best, total_size) = feasible_masks
        .iter()
        .min_by(|a, b| a.1.cmp(&b.1).then_with(|| long_set(a.0).cmp(&long_set(b.0))))
        .ok_or_else(|| {
            // Even all-long failed: report the offender under that layout.
            let all = alloc::vec![true; n];
            resolved.displacements(program, &all, &mut offsets, &mut disp);
            let k = (0..n)
                .find(|&k| !long_fits(disp[k], resolved.mode))
                .unwrap_or(0);
            OracleError::LongRangeExceeded {
                jump: k,
                displacement: disp.get(k).copied().unwrap_or(0),
                mode: resolved.mode,
            }
        })?;
    let least_solution = feasible_masks.iter().all(|&(m, _)| best & !m == 0);
    Ok(OracleReport {
        assignment: SizeAssignment::from_mask(n, best),
        total_size,
        work: OracleWork::Enumeration {
            tried,
            feasible: feasible_masks.len() as u64,
            least_solution,
        },
    })
}

fn long_set(mask: u64) -> Vec<u32> {
    (0..64).filter(|k| mask >> k & 1 == 1).collect()
}
