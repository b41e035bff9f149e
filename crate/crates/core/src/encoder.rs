//! Final layout and byte emission once every jump has a size, plus an
//! independent decoder that checks the emitted image.
//!
//! Emission is two-pass: sizes fix every offset, then each displacement is
//! the target's final offset minus the end of the jump.
//!
//! | form               | bytes              |
//! |--------------------|--------------------|
//! | short jmp          | `EB rel8`          |
//! | short jcc          | `70+cc rel8`       |
//! | long jmp (32/64)   | `E9 rel32`         |
//! | long jcc (32/64)   | `0F 80+cc rel32`   |
//! | long jmp (16)      | `E9 rel16`         |
//! | long jcc (16)      | `0F 80+cc rel16`   |

use alloc::string::String;
use alloc::vec::Vec;

use crate::ir::{
    encoded_size, long_fits, short_fits, Item, JumpKind, Mode, SizeAssignment, SourceProgram,
};
use crate::layout::LabelTable;

const JMP_SHORT: u8 = 0xEB;
const JMP_LONG: u8 = 0xE9;
const JCC_SHORT_BASE: u8 = 0x70;
const TWO_BYTE_ESCAPE: u8 = 0x0F;
const JCC_LONG_BASE: u8 = 0x80;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("assignment covers {got} jumps but the program has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("jump {jump}: undefined or duplicate label `{label}`")]
    BadLabel { jump: usize, label: String },
    #[error("jump {jump}: displacement {displacement} does not fit a short jump")]
    ShortRangeViolation { jump: usize, displacement: i64 },
    #[error("jump {jump}: displacement {displacement} exceeds the {mode}-bit long range")]
    LongRangeExceeded {
        jump: usize,
        displacement: i64,
        mode: Mode,
    },
}

/// Offsets under a concrete size assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalLayout<'a> {
    pub labels: LabelTable<'a>,
    /// First byte of each jump, program order.
    pub jump_offsets: Vec<u64>,
    pub jump_sizes: Vec<u32>,
    pub total_size: u64,
}

impl FinalLayout<'_> {
    /// Displacement of jump `k` relative to the byte after it.
    pub fn displacement(&self, k: usize, target: &str) -> Option<i64> {
        let end = self.jump_offsets[k] + self.jump_sizes[k] as u64;
        self.labels.get(target).map(|t| t as i64 - end as i64)
    }
}

pub fn final_layout<'a>(
    program: &'a SourceProgram,
    assignment: &SizeAssignment,
) -> Result<FinalLayout<'a>, EncodeError> {
    let jumps = program.jump_count();
    if assignment.len() != jumps {
        return Err(EncodeError::AssignmentLength {
            expected: jumps,
            got: assignment.len(),
        });
    }
    let mut labels = LabelTable::with_capacity(program.items.len() - jumps);
    let mut jump_offsets = Vec::with_capacity(jumps);
    let mut jump_sizes = Vec::with_capacity(jumps);
    let mut offset = 0u64;
    for item in &program.items {
        match item {
            Item::Label(name) => {
                labels.insert(name, offset);
            }
            Item::Jump { kind, .. } => {
                let size = encoded_size(program.mode, *kind, assignment.is_long(jump_offsets.len()));
                jump_offsets.push(offset);
                jump_sizes.push(size);
                offset += size as u64;
            }
            Item::Blob(bytes) => offset += bytes.len() as u64,
        }
    }
    Ok(FinalLayout {
        labels,
        jump_offsets,
        jump_sizes,
        total_size: offset,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ListingEntry {
    pub item_index: usize,
    pub offset: u64,
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedProgram<'a> {
    pub bytes: Vec<u8>,
    pub label_offsets: LabelTable<'a>,
    /// One entry per item, in program order.
    pub listing: Vec<ListingEntry>,
}

impl EncodedProgram<'_> {
    pub fn entry_bytes(&self, entry: &ListingEntry) -> &[u8] {
        let start = entry.offset as usize;
        &self.bytes[start..start + entry.size as usize]
    }
}

pub fn encode<'a>(
    program: &'a SourceProgram,
    assignment: &SizeAssignment,
) -> Result<EncodedProgram<'a>, EncodeError> {
    let layout = final_layout(program, assignment)?;
    let mut bytes = Vec::with_capacity(layout.total_size as usize);
    let mut listing = Vec::with_capacity(program.items.len());
    let mut jump = 0usize;

    for (item_index, item) in program.items.iter().enumerate() {
        let offset = bytes.len() as u64;
        match item {
            Item::Label(_) => {}
            Item::Blob(blob) => bytes.extend_from_slice(blob),
            Item::Jump { kind, target } => {
                let displacement =
                    layout
                        .displacement(jump, target)
                        .ok_or_else(|| EncodeError::BadLabel {
                            jump,
                            label: target.clone(),
                        })?;
                emit_jump(
                    &mut bytes,
                    program.mode,
                    *kind,
                    assignment.is_long(jump),
                    displacement,
                )
                .map_err(|e| e.at(jump))?;
                jump += 1;
            }
        }
        listing.push(ListingEntry {
            item_index,
            offset,
            size: (bytes.len() as u64 - offset) as u32,
        });
    }

    Ok(EncodedProgram {
        bytes,
        label_offsets: layout.labels,
        listing,
    })
}

impl EncodeError {
    fn at(self, jump: usize) -> Self {
        match self {
            EncodeError::ShortRangeViolation { displacement, .. } => {
                EncodeError::ShortRangeViolation { jump, displacement }
            }
            EncodeError::LongRangeExceeded {
                displacement, mode, ..
            } => EncodeError::LongRangeExceeded {
                jump,
                displacement,
                mode,
            },
            other => other,
        }
    }
}

fn emit_jump(
    out: &mut Vec<u8>,
    mode: Mode,
    kind: JumpKind,
    long: bool,
    displacement: i64,
) -> Result<(), EncodeError> {
    if !long {
        if !short_fits(displacement) {
            return Err(EncodeError::ShortRangeViolation {
                jump: 0,
                displacement,
            });
        }
        out.push(match kind {
            JumpKind::Unconditional => JMP_SHORT,
            JumpKind::Conditional(cc) => JCC_SHORT_BASE + cc.code(),
        });
        out.push(displacement as i8 as u8);
        return Ok(());
    }
    if !long_fits(displacement, mode) {
        return Err(EncodeError::LongRangeExceeded {
            jump: 0,
            displacement,
            mode,
        });
    }
    match kind {
        JumpKind::Unconditional => out.push(JMP_LONG),
        JumpKind::Conditional(cc) => out.extend_from_slice(&[TWO_BYTE_ESCAPE, JCC_LONG_BASE + cc.code()]),
    }
    match mode {
        Mode::Bits16 => out.extend_from_slice(&(displacement as i16).to_le_bytes()),
        Mode::Bits32 | Mode::Bits64 => out.extend_from_slice(&(displacement as i32).to_le_bytes()),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("assignment covers {got} jumps but the program has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("image ends at {len} while item {item} needs bytes at {offset}")]
    Truncated { item: usize, offset: u64, len: u64 },
    #[error("{trailing} unexpected bytes after the last item")]
    TrailingBytes { trailing: u64 },
    #[error("item {item}: blob bytes differ at offset {offset:#x}")]
    BlobMismatch { item: usize, offset: u64 },
    #[error("jump {jump} at {offset:#x}: opcode {found:02x?} does not match the expected form")]
    WrongForm {
        jump: usize,
        offset: u64,
        found: Vec<u8>,
    },
    #[error("jump {jump}: decoded target {decoded:#x} but label `{label}` is at {expected:#x}")]
    TargetMismatch {
        jump: usize,
        label: String,
        decoded: i64,
        expected: i64,
    },
    #[error("jump {jump}: target label `{label}` is missing from the image")]
    MissingLabel { jump: usize, label: String },
    #[error("label `{label}`: recorded at {recorded:?}, found at {found:#x}")]
    LabelOffset {
        label: String,
        recorded: Option<u64>,
        found: u64,
    },
}

/// Walks the image item by item without consulting the encoder's layout,
/// decoding every jump and checking that it lands on its label.
pub fn decode_verify(
    encoded: &EncodedProgram,
    program: &SourceProgram,
    assignment: &SizeAssignment,
) -> Result<(), VerifyError> {
    let jumps = program.jump_count();
    if assignment.len() != jumps {
        return Err(VerifyError::AssignmentLength {
            expected: jumps,
            got: assignment.len(),
        });
    }
    let image = &encoded.bytes[..];
    let mut found_labels: Vec<(&str, u64)> = Vec::new();
    let mut decoded: Vec<(usize, u64, &str, i64)> = Vec::with_capacity(jumps);
    let mut cursor = 0usize;

    let take = |cursor: usize, n: usize, item: usize| -> Result<&[u8], VerifyError> {
        image
            .get(cursor..cursor + n)
            .ok_or(VerifyError::Truncated {
                item,
                offset: cursor as u64,
                len: image.len() as u64,
            })
    };

    for (item_index, item) in program.items.iter().enumerate() {
        match item {
            Item::Label(name) => found_labels.push((name, cursor as u64)),
            Item::Blob(blob) => {
                let got = take(cursor, blob.len(), item_index)?;
                if let Some(pos) = got.iter().zip(blob).position(|(a, b)| a != b) {
                    return Err(VerifyError::BlobMismatch {
                        item: item_index,
                        offset: (cursor + pos) as u64,
                    });
                }
                cursor += blob.len();
            }
            Item::Jump { kind, target } => {
                let k = decoded.len();
                let long = assignment.is_long(k);
                let (opcode_len, disp_len) = match (long, kind) {
                    (false, _) => (1, 1),
                    (true, JumpKind::Unconditional) => (1, program.mode.long_disp_width() as usize),
                    (true, JumpKind::Conditional(_)) => (2, program.mode.long_disp_width() as usize),
                };
                let insn = take(cursor, opcode_len + disp_len, item_index)?;
                let expected_opcode: &[u8] = match (long, kind) {
                    (false, JumpKind::Unconditional) => &[JMP_SHORT],
                    (false, JumpKind::Conditional(cc)) => &[JCC_SHORT_BASE + cc.code()],
                    (true, JumpKind::Unconditional) => &[JMP_LONG],
                    (true, JumpKind::Conditional(cc)) => &[TWO_BYTE_ESCAPE, JCC_LONG_BASE + cc.code()],
                };
                if &insn[..opcode_len] != expected_opcode {
                    return Err(VerifyError::WrongForm {
                        jump: k,
                        offset: cursor as u64,
                        found: insn[..opcode_len].to_vec(),
                    });
                }
                let field = &insn[opcode_len..];
                let displacement = match disp_len {
                    1 => field[0] as i8 as i64,
                    2 => i16::from_le_bytes([field[0], field[1]]) as i64,
                    _ => i32::from_le_bytes([field[0], field[1], field[2], field[3]]) as i64,
                };
                cursor += insn.len();
                decoded.push((k, cursor as u64, target, displacement));
            }
        }
    }
    if cursor != image.len() {
        return Err(VerifyError::TrailingBytes {
            trailing: (image.len() - cursor) as u64,
        });
    }

    let mut walked = LabelTable::default();
    for &(name, offset) in &found_labels {
        walked.insert(name, offset);
        if encoded.label_offsets.get(name) != Some(offset) {
            return Err(VerifyError::LabelOffset {
                label: name.into(),
                recorded: encoded.label_offsets.get(name),
                found: offset,
            });
        }
    }
    for (k, end, target, displacement) in decoded {
        let expected = walked.get(target).ok_or_else(|| VerifyError::MissingLabel {
            jump: k,
            label: target.into(),
        })?;
        let landed = end as i64 + displacement;
        if landed != expected as i64 {
            return Err(VerifyError::TargetMismatch {
                jump: k,
                label: target.into(),
                decoded: landed,
                expected: expected as i64,
            });
        }
    }
    Ok(())
}
