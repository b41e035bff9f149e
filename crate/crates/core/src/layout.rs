//! The all-short layout: every jump sized 2, label offsets recorded by name,
//! and the offset-sorted jump table the relaxation pass works on.

use alloc::vec::Vec;

use hashbrown::hash_map::Entry;
use hashbrown::HashMap;

use crate::ir::{long_size, Item, Mode, SemanticError, SourceProgram, SHORT_SIZE};

/// Label name to byte offset, borrowing names from the program. Offsets refer
/// to whichever layout built the table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable<'a> {
    offsets: HashMap<&'a str, u64>,
}

impl<'a> LabelTable<'a> {
    pub fn with_capacity(labels: usize) -> Self {
        LabelTable {
            offsets: HashMap::with_capacity(labels),
        }
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.offsets.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.offsets.iter().map(|(&k, &v)| (k, v))
    }

    /// Returns false if `name` was already present.
    pub(crate) fn insert(&mut self, name: &'a str, offset: u64) -> bool {
        match self.offsets.entry(name) {
            Entry::Occupied(_) => false,
            Entry::Vacant(slot) => {
                slot.insert(offset);
                true
            }
        }
    }
}

/// One jump in all-short coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpRecord {
    /// Position in the table, equal to the jump's program-order index.
    pub index: usize,
    pub item_index: usize,
    /// Offset of the jump's first byte when all jumps are short.
    pub all_short_start: u64,
    /// Target offset minus [`JumpRecord::src_point`], all-short.
    pub original_distance: i64,
    /// Tracked displacement, only ever moving away from zero.
    pub current_distance: i64,
    pub marked: bool,
    pub long_size: u32,
}

impl JumpRecord {
    /// Displacement base of the short form: the byte after it.
    pub fn src_point(&self) -> u64 {
        self.all_short_start + SHORT_SIZE as u64
    }

    /// All-short offset of the target label.
    pub fn target(&self) -> i64 {
        self.src_point() as i64 + self.original_distance
    }

    /// Zero-distance jumps count as forward.
    pub fn is_forward(&self) -> bool {
        self.original_distance >= 0
    }

    /// Bytes added to the layout when this jump goes long.
    pub fn growth(&self) -> u32 {
        self.long_size - SHORT_SIZE
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpTable {
    pub mode: Mode,
    pub records: Vec<JumpRecord>,
}

impl JumpTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Restores every record to its freshly laid-out state.
    pub fn reset(&mut self) {
        for r in &mut self.records {
            r.current_distance = r.original_distance;
            r.marked = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllShortLayout<'a> {
    pub labels: LabelTable<'a>,
    pub jumps: JumpTable,
    /// Offset just past the last item.
    pub total_size: u64,
}

/// Lays the program out with every jump short and builds the jump table.
///
/// Fails with the same errors [`crate::ir::validate`] would report.
pub fn layout_all_short(program: &SourceProgram) -> Result<AllShortLayout<'_>, Vec<SemanticError>> {
    let label_count = program
        .items
        .iter()
        .filter(|item| matches!(item, Item::Label(_)))
        .count();
    let mut labels = LabelTable::with_capacity(label_count);
    let mut errors = Vec::new();
    let mut pending: Vec<(usize, u64, u32, &str)> = Vec::with_capacity(program.items.len() - label_count);
    let mut offset = 0u64;

    for (i, item) in program.items.iter().enumerate() {
        match item {
            Item::Label(name) => {
                if !labels.insert(name, offset) {
                    errors.push(SemanticError::DuplicateLabel {
                        item: i,
                        name: name.clone(),
                    });
                }
            }
            Item::Jump { kind, target } => {
                pending.push((i, offset, long_size(program.mode, *kind), target));
                offset += SHORT_SIZE as u64;
            }
            Item::Blob(bytes) => offset += bytes.len() as u64,
        }
    }

    let mut records = Vec::with_capacity(pending.len());
    for (index, (item_index, start, long_size, target)) in pending.into_iter().enumerate() {
        let Some(target_offset) = labels.get(target) else {
            errors.push(SemanticError::UndefinedTarget {
                item: item_index,
                name: target.into(),
            });
            continue;
        };
        let distance = target_offset as i64 - (start + SHORT_SIZE as u64) as i64;
        records.push(JumpRecord {
            index,
            item_index,
            all_short_start: start,
            original_distance: distance,
            current_distance: distance,
            marked: false,
            long_size,
        });
    }

    if !errors.is_empty() {
        errors.sort_by_key(SemanticError::item);
        return Err(errors);
    }
    Ok(AllShortLayout {
        labels,
        jumps: JumpTable {
            mode: program.mode,
            records,
        },
        total_size: offset,
    })
}
