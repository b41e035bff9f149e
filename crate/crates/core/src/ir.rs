//! The program model: assembly modes, jump kinds, items and size decisions.
//!
//! Non-jump content is opaque. A [`Item::Blob`] carries its bytes verbatim and
//! its length never depends on layout, so no item can shrink when code
//! elsewhere grows. Every jump is label-relative.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

/// Size of every short (rel8) jump form.
pub const SHORT_SIZE: u32 = 2;

/// Smallest displacement a rel8 form can carry.
pub const SHORT_MIN: i64 = -128;
/// Largest displacement a rel8 form can carry.
pub const SHORT_MAX: i64 = 127;

/// Assembly mode. Bits32 and Bits64 share every jump constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    Bits16,
    #[default]
    Bits32,
    Bits64,
}

impl Mode {
    pub fn bits(self) -> u32 {
        match self {
            Mode::Bits16 => 16,
            Mode::Bits32 => 32,
            Mode::Bits64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Mode> {
        match bits {
            16 => Some(Mode::Bits16),
            32 => Some(Mode::Bits32),
            64 => Some(Mode::Bits64),
            _ => None,
        }
    }

    /// Inclusive displacement bounds of the long form.
    pub fn long_range(self) -> (i64, i64) {
        match self {
            Mode::Bits16 => (i16::MIN as i64, i16::MAX as i64),
            Mode::Bits32 | Mode::Bits64 => (i32::MIN as i64, i32::MAX as i64),
        }
    }

    /// Width in bytes of the long-form displacement field.
    pub fn long_disp_width(self) -> u32 {
        match self {
            Mode::Bits16 => 2,
            Mode::Bits32 | Mode::Bits64 => 4,
        }
    }
}

/// x86 condition code, the low nibble of the `70h`/`0F 80h` opcode families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition(u8);

impl Condition {
    pub const O: Condition = Condition(0);
    pub const E: Condition = Condition(4);
    pub const NE: Condition = Condition(5);

    pub fn new(code: u8) -> Option<Condition> {
        (code < 16).then_some(Condition(code))
    }

    pub fn code(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpKind {
    Unconditional,
    Conditional(Condition),
}

impl JumpKind {
    pub fn is_conditional(self) -> bool {
        matches!(self, JumpKind::Conditional(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Item {
    Label(String),
    Jump { kind: JumpKind, target: String },
    Blob(Vec<u8>),
}

impl Item {
    pub fn label(name: impl Into<String>) -> Item {
        Item::Label(name.into())
    }

    pub fn jmp(target: impl Into<String>) -> Item {
        Item::Jump {
            kind: JumpKind::Unconditional,
            target: target.into(),
        }
    }

    pub fn jcc(cond: Condition, target: impl Into<String>) -> Item {
        Item::Jump {
            kind: JumpKind::Conditional(cond),
            target: target.into(),
        }
    }

    /// `len` zero bytes.
    pub fn space(len: usize) -> Item {
        Item::Blob(alloc::vec![0; len])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceProgram {
    pub mode: Mode,
    pub items: Vec<Item>,
}

impl SourceProgram {
    pub fn new(mode: Mode, items: Vec<Item>) -> Self {
        SourceProgram { mode, items }
    }

    pub fn jump_count(&self) -> usize {
        self.items
            .iter()
            .filter(|item| matches!(item, Item::Jump { .. }))
            .count()
    }

    /// Total bytes of blob content.
    pub fn blob_bytes(&self) -> u64 {
        self.items
            .iter()
            .map(|item| match item {
                Item::Blob(bytes) => bytes.len() as u64,
                _ => 0,
            })
            .sum()
    }

    /// Iterates `(item_index, kind, target)` over jumps in program order.
    pub fn jumps(&self) -> impl Iterator<Item = (usize, JumpKind, &str)> + '_ {
        self.items.iter().enumerate().filter_map(|(i, item)| match item {
            Item::Jump { kind, target } => Some((i, *kind, target.as_str())),
            _ => None,
        })
    }
}

/// One short/long decision per jump, in program order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SizeAssignment {
    is_long: Vec<bool>,
}

impl SizeAssignment {
    pub fn from_flags(is_long: Vec<bool>) -> Self {
        SizeAssignment { is_long }
    }

    pub fn all_short(jumps: usize) -> Self {
        SizeAssignment {
            is_long: alloc::vec![false; jumps],
        }
    }

    pub fn all_long(jumps: usize) -> Self {
        SizeAssignment {
            is_long: alloc::vec![true; jumps],
        }
    }

    /// Bit `k` of `mask` selects jump `k` as long.
    pub fn from_mask(jumps: usize, mask: u64) -> Self {
        SizeAssignment {
            is_long: (0..jumps).map(|k| mask >> k & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.is_long.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_long.is_empty()
    }

    pub fn is_long(&self, jump: usize) -> bool {
        self.is_long[jump]
    }

    pub fn set_long(&mut self, jump: usize, long: bool) {
        self.is_long[jump] = long;
    }

    pub fn flags(&self) -> &[bool] {
        &self.is_long
    }

    pub fn long_count(&self) -> usize {
        self.is_long.iter().filter(|&&l| l).count()
    }

    /// Indices of long jumps, ascending.
    pub fn long_set(&self) -> Vec<usize> {
        self.is_long
            .iter()
            .enumerate()
            .filter_map(|(k, &l)| l.then_some(k))
            .collect()
    }

    /// True when every long jump here is also long in `other`.
    pub fn is_subset_of(&self, other: &SizeAssignment) -> bool {
        self.len() == other.len()
            && self
                .is_long
                .iter()
                .zip(&other.is_long)
                .all(|(&a, &b)| !a || b)
    }
}

/// Byte size of the long form of a jump.
pub fn long_size(mode: Mode, kind: JumpKind) -> u32 {
    match (mode, kind) {
        (Mode::Bits16, JumpKind::Unconditional) => 3,
        (Mode::Bits16, JumpKind::Conditional(_)) => 4,
        (Mode::Bits32 | Mode::Bits64, JumpKind::Unconditional) => 5,
        (Mode::Bits32 | Mode::Bits64, JumpKind::Conditional(_)) => 6,
    }
}

pub fn encoded_size(mode: Mode, kind: JumpKind, long: bool) -> u32 {
    if long {
        long_size(mode, kind)
    } else {
        SHORT_SIZE
    }
}

pub fn short_fits(displacement: i64) -> bool {
    (SHORT_MIN..=SHORT_MAX).contains(&displacement)
}

pub fn long_fits(displacement: i64, mode: Mode) -> bool {
    let (lo, hi) = mode.long_range();
    (lo..=hi).contains(&displacement)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticError {
    #[error("item {item}: duplicate label `{name}`")]
    DuplicateLabel { item: usize, name: String },
    #[error("item {item}: jump to undefined label `{name}`")]
    UndefinedTarget { item: usize, name: String },
}

impl SemanticError {
    pub fn item(&self) -> usize {
        match self {
            SemanticError::DuplicateLabel { item, .. }
            | SemanticError::UndefinedTarget { item, .. } => *item,
        }
    }
}

/// Checks label uniqueness and that every jump target exists. Reports every
/// violation, ordered by item index.
pub fn validate(program: &SourceProgram) -> Result<(), Vec<SemanticError>> {
    let mut defined: HashMap<&str, usize> = HashMap::new();
    let mut errors = Vec::new();
    for (i, item) in program.items.iter().enumerate() {
        if let Item::Label(name) = item {
            if defined.insert(name.as_str(), i).is_some() {
                errors.push(SemanticError::DuplicateLabel {
                    item: i,
                    name: name.clone(),
                });
            }
        }
    }
    for (i, _, target) in program.jumps() {
        if !defined.contains_key(target) {
            errors.push(SemanticError::UndefinedTarget {
                item: i,
                name: target.into(),
            });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        errors.sort_by_key(SemanticError::item);
        Err(errors)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}
