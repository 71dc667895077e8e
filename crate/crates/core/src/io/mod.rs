//! File formats and the synthetic instance generator.

pub mod format;
pub mod generator;
pub mod journal;
pub mod stats;

use std::fmt;
use std::path::Path;

pub use format::{read, write};
pub use generator::{generate, GeneratorError, GeneratorSpec, Generated, Plant, PlantKind};

/// Error while reading one of the text formats.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// 1-based line number; 0 when the error concerns the whole file.
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        ParseError { line: 0, message: format!("{}: {e}", path.display()) }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

/// Shortest decimal text that parses back to `v`; `inf` / `-inf` for infinities.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
