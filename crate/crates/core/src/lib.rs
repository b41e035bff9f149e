//! Short/long selection and encoding for x86 relative jumps.
//!
//! A program is a sequence of labels, label-relative jumps and opaque byte
//! blobs. [`layout::layout_all_short`] lays it out with every jump in its
//! 2-byte form, [`relax::relax`] decides in linear time which jumps must use
//! the long form, and [`encoder::encode`] emits the final image. The
//! [`oracles`] module recomputes the same decision the slow way.

#![no_std]

extern crate alloc;

pub mod encoder;
pub mod ir;
pub mod layout;
pub mod oracles;
pub mod relax;
pub mod testgen;

use alloc::vec::Vec;

pub use encoder::{decode_verify, encode, EncodeError, EncodedProgram, VerifyError};
pub use ir::{Condition, Item, JumpKind, Mode, SemanticError, SizeAssignment, SourceProgram};
pub use layout::{layout_all_short, JumpTable, LabelTable};
pub use relax::{relax, QueuePolicy, RelaxationResult};

/// Output of the full pipeline.
#[derive(Debug, Clone)]
pub struct Assembled<'a> {
    /// Jump table after relaxation: marks and tracked distances are final.
    pub table: JumpTable,
    pub relaxation: RelaxationResult,
    pub encoded: EncodedProgram<'a>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("invalid program: {0:?}")]
    Semantic(Vec<SemanticError>),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Lays out, relaxes, encodes and decode-verifies `program`.
pub fn assemble(program: &SourceProgram) -> Result<Assembled<'_>, AssembleError> {
    let mut table = layout_all_short(program).map_err(AssembleError::Semantic)?.jumps;
    let relaxation = relax(&mut table);
    let encoded = encode(program, &relaxation.assignment)?;
    decode_verify(&encoded, program, &relaxation.assignment)?;
    Ok(Assembled {
        table,
        relaxation,
        encoded,
    })
}
