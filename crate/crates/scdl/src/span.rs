//! Source positions.
//!
//! A [`SourceSpan`] is half open: it starts at (`start_line`, `start_col`)
//! inclusive and ends at (`end_line`, `end_col`) exclusive. Lines and columns
//! are 1-based and counted in characters, not bytes.

/// A half-open region of one source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    /// Path of the file the span points into, as it was given to the loader.
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: &str, start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        debug_assert!(
            (start_line, start_col) <= (end_line, end_col),
            "span start must not come after its end"
        );
        SourceSpan { file: file.to_string(), start_line, start_col, end_line, end_col }
    }

    /// Zero-width span at a point. Used for diagnostics that mark a position
    /// rather than a region (end of file, missing argument targets).
    pub fn point(file: &str, line: u32, col: u32) -> Self {
        SourceSpan::new(file, line, col, line, col)
    }

    /// Placeholder span used when positions are irrelevant, e.g. for unit
    /// trees built programmatically or normalized for structural comparison.
    pub fn dummy() -> Self {
        SourceSpan::point("", 1, 1)
    }

    /// Smallest span covering both `self` and `other`.
    pub fn join(&self, other: &SourceSpan) -> SourceSpan {
        let start = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let end = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        SourceSpan::new(&self.file, start.0, start.1, end.0, end.1)
    }
}
