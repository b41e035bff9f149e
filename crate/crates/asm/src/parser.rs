//! The text dialect.
//!
//! One statement per line, `;` starts a comment:
//!
//! ```text
//! .mode 16|32|64          ; at most once, before any item (default 32)
//! name:                   ; label, may share a line with an instruction
//! jmp name                ; unconditional jump
//! je name                 ; conditional jump, any of CONDITION_MNEMONICS
//! db 0f 1f 44 00          ; literal bytes, two hex digits each
//! space 130               ; that many zero bytes
//! ```

use std::fmt;

use jumprelax_core::ir::{Condition, Item, JumpKind, Mode, SourceProgram};

/// Conditional jump mnemonics, indexed by condition code.
pub const CONDITION_MNEMONICS: [&str; 16] = [
    "jo", "jno", "jb", "jae", "je", "jne", "jbe", "ja", "js", "jns", "jp", "jnp", "jl", "jge",
    "jle", "jg",
];

/// Largest `space` operand accepted.
pub const MAX_SPACE: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn mnemonic(kind: JumpKind) -> &'static str {
    match kind {
        JumpKind::Unconditional => "jmp",
        JumpKind::Conditional(cc) => CONDITION_MNEMONICS[cc.code() as usize],
    }
}

fn jump_kind(mnemonic: &str) -> Option<JumpKind> {
    if mnemonic == "jmp" {
        return Some(JumpKind::Unconditional);
    }
    CONDITION_MNEMONICS
        .iter()
        .position(|&m| m == mnemonic)
        .map(|cc| JumpKind::Conditional(Condition::new(cc as u8).unwrap()))
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A whitespace-separated token and its 1-based column.
#[derive(Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (column, (byte, c)) in line.char_indices().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some((byte, column + 1)),
            (true, Some((b, col))) => {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: col,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, col)) = start {
        tokens.push(Token {
            text: &line[b..],
            column: col,
        });
    }
    tokens
}

struct LineParser<'a> {
    line: usize,
    errors: &'a mut Vec<ParseError>,
}

impl LineParser<'_> {
    fn error(&mut self, column: usize, message: impl Into<String>) {
        self.errors.push(ParseError {
            line: self.line,
            column,
            message: message.into(),
        });
    }
}

/// Parses `text`. Every malformed line is reported; label resolution is left
/// to [`jumprelax_core::ir::validate`].
pub fn parse(text: &str) -> Result<SourceProgram, Vec<ParseError>> {
    let mut program = SourceProgram::default();
    let mut mode_seen = false;
    let mut errors = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let code = raw.split(';').next().unwrap_or("");
        let mut tokens = tokenize(code);
        let mut p = LineParser {
            line: index + 1,
            errors: &mut errors,
        };
        if tokens.is_empty() {
            continue;
        }

        // Leading `name:`, possibly glued to the instruction.
        let first = tokens[0];
        if let Some(colon) = first.text.find(':') {
            let name = &first.text[..colon];
            let rest = &first.text[colon + 1..];
            if !is_identifier(name) {
                p.error(first.column, format!("invalid label name `{name}`"));
                continue;
            }
            program.items.push(Item::Label(name.into()));
            if rest.is_empty() {
                tokens.remove(0);
            } else {
                tokens[0] = Token {
                    text: rest,
                    column: first.column + name.chars().count() + 1,
                };
            }
            if tokens.is_empty() {
                continue;
            }
        }

        let op = tokens[0];
        let operands = &tokens[1..];
        match op.text {
            ".mode" => {
                if mode_seen {
                    p.error(op.column, "`.mode` given more than once");
                } else if !program.items.is_empty() {
                    p.error(op.column, "`.mode` must come before any label or instruction");
                } else if let [arg] = operands {
                    match arg.text.parse().ok().and_then(Mode::from_bits) {
                        Some(mode) => program.mode = mode,
                        None => p.error(arg.column, format!("unknown mode `{}`", arg.text)),
                    }
                } else {
                    p.error(op.column, "`.mode` takes one operand: 16, 32 or 64");
                }
                mode_seen = true;
            }
            "db" => {
                if operands.is_empty() {
                    p.error(op.column, "`db` needs at least one byte");
                    continue;
                }
                let mut bytes = Vec::with_capacity(operands.len());
                for t in operands {
                    let valid = t.text.len() == 2 && t.text.chars().all(|c| c.is_ascii_hexdigit());
                    match u8::from_str_radix(t.text, 16) {
                        Ok(b) if valid => bytes.push(b),
                        _ => {
                            p.error(t.column, format!("expected two hex digits, found `{}`", t.text));
                            break;
                        }
                    }
                }
                if bytes.len() == operands.len() {
                    program.items.push(Item::Blob(bytes));
                }
            }
            "space" => match operands {
                [n] if n.text.chars().all(|c| c.is_ascii_digit()) => match n.text.parse::<usize>() {
                    Ok(len) if len <= MAX_SPACE => program.items.push(Item::space(len)),
                    _ => p.error(n.column, format!("`space` is limited to {MAX_SPACE} bytes")),
                },
                [n] => p.error(n.column, format!("expected a decimal byte count, found `{}`", n.text)),
                _ => p.error(op.column, "`space` takes one operand"),
            },
            mnemonic => match jump_kind(mnemonic) {
                Some(kind) => match operands {
                    [target] if is_identifier(target.text) => program.items.push(Item::Jump {
                        kind,
                        target: target.text.into(),
                    }),
                    [target] => p.error(target.column, format!("invalid label name `{}`", target.text)),
                    _ => p.error(op.column, format!("`{mnemonic}` takes one label operand")),
                },
                None => p.error(op.column, format!("unknown instruction `{mnemonic}`")),
            },
        }
    }

    if errors.is_empty() {
        Ok(program)
    } else {
        Err(errors)
    }
}

/// One item as a line of source, without indentation.
pub fn render_item(item: &Item) -> String {
    match item {
        Item::Label(name) => format!("{name}:"),
        Item::Jump { kind, target } => format!("{} {target}", mnemonic(*kind)),
        Item::Blob(bytes) if bytes.iter().all(|&b| b == 0) => format!("space {}", bytes.len()),
        Item::Blob(bytes) => {
            let mut line = String::with_capacity(3 + 3 * bytes.len());
            line.push_str("db");
            for b in bytes {
                line.push_str(&format!(" {b:02x}"));
            }
            line
        }
    }
}

/// Renders a program that [`parse`] maps back to the same items and mode.
pub fn format(program: &SourceProgram) -> String {
    let mut out = format!(".mode {}\n", program.mode.bits());
    for item in &program.items {
        if !matches!(item, Item::Label(_)) {
            out.push_str("    ");
        }
        out.push_str(&render_item(item));
        out.push('\n');
    }
    out
}
