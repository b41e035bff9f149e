//! Text listing: one line per item, `%08x  %-14s  %s` (offset, bytes, source).
//! Items longer than [`BYTES_PER_LINE`] continue on extra lines that carry
//! only offset and bytes.

use std::fmt::Write;

use jumprelax_core::encoder::EncodedProgram;
use jumprelax_core::ir::SourceProgram;

use crate::parser::render_item;

/// Seven bytes fill the 14-column field; every jump form fits on one line.
pub const BYTES_PER_LINE: usize = 7;

pub fn render(program: &SourceProgram, encoded: &EncodedProgram) -> String {
    let mut out = String::new();
    for entry in &encoded.listing {
        let source = render_item(&program.items[entry.item_index]);
        let bytes = encoded.entry_bytes(entry);
        let mut chunks = bytes.chunks(BYTES_PER_LINE);
        let first = chunks.next().unwrap_or(&[]);
        writeln!(out, "{:08x}  {:<14}  {}", entry.offset, hex(first), source).unwrap();
        for (i, chunk) in chunks.enumerate() {
            let offset = entry.offset + ((i + 1) * BYTES_PER_LINE) as u64;
            writeln!(out, "{:08x}  {}", offset, hex(chunk)).unwrap();
        }
    }
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect()
}
