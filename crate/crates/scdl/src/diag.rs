//! Diagnostics.
//!
//! Every failure mode of the toolkit is reported as a [`Diagnostic`] value
//! carrying a stable code from the catalog below, a severity, a message and a
//! source span. The catalog is frozen: severities are not configurable and new
//! codes are additions, never repurposings. docs/diagnostics.md describes each
//! code; [`CATALOG`] is the machine-readable list and construction asserts
//! membership.

use crate::span::SourceSpan;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

pub mod codes {
    //! Stable diagnostic codes.

    // Lexing.
    pub const E_LEX_001: &str = "E-LEX-001"; // unrecognized character
    pub const E_LEX_002: &str = "E-LEX-002"; // unterminated string or block comment

    // Parsing and unit-level invariants.
    pub const E_PAR_001: &str = "E-PAR-001"; // unexpected token
    pub const E_PAR_002: &str = "E-PAR-002"; // duplicate system name
    pub const E_PAR_003: &str = "E-PAR-003"; // unknown keyword in section position
    pub const E_PAR_004: &str = "E-PAR-004"; // association endpoint not a declared system
    pub const E_PAR_005: &str = "E-PAR-005"; // duplicate name inside a section or fragment
    pub const E_PAR_006: &str = "E-PAR-006"; // unresolved reference inside the unit
    pub const E_PAR_007: &str = "E-PAR-007"; // nesting depth exceeded
    pub const E_PAR_008: &str = "E-PAR-008"; // malformed declaration
    pub const E_DIM_009: &str = "E-DIM-009"; // interaction dimension not supported

    // Level resolution.
    pub const E_LVL_001: &str = "E-LVL-001"; // explode target failed to load or parse
    pub const E_LVL_002: &str = "E-LVL-002"; // explode cycle
    pub const E_LVL_003: &str = "E-LVL-003"; // child systems do not match parent composition
    pub const E_LVL_004: &str = "E-LVL-004"; // two explode references share one file

    // Queries.
    pub const E_QRY_001: &str = "E-QRY-001"; // path does not resolve
    pub const E_QRY_002: &str = "E-QRY-002"; // system has no explode link

    // Validation.
    pub const E_BWW_001: &str = "E-BWW-001"; // composition fails the bipartition criterion
    pub const E_KND_001: &str = "E-KND-001"; // energy-typed coupling on a conceptual system
    pub const E_MAP_001: &str = "E-MAP-001"; // mechanism actor without structural counterpart
    pub const E_MAP_002: &str = "E-MAP-002"; // mapping path does not resolve
    pub const W_MAP_010: &str = "W-MAP-010"; // entity with no mechanism counterpart
    pub const E_PRP_001: &str = "E-PRP-001"; // aggregate property without derivation
    pub const E_PRP_002: &str = "E-PRP-002"; // derivation references something no component declares
    pub const W_PRP_003: &str = "W-PRP-003"; // emergent property carries a derivation
    pub const W_CSM_001: &str = "W-CSM-001"; // concrete system with components but no structure
    pub const W_CSM_002: &str = "W-CSM-002"; // concrete system without a mechanism
    pub const W_CSM_003: &str = "W-CSM-003"; // association with no mappings
    pub const W_ATOM_001: &str = "W-ATOM-001"; // system with empty composition

    // Evaluation.
    pub const E_EVL_001: &str = "E-EVL-001"; // missing valuation entry
    pub const E_EVL_002: &str = "E-EVL-002"; // division by zero
    pub const E_EVL_003: &str = "E-EVL-003"; // min/max/avg over an empty set
    pub const E_EVL_004: &str = "E-EVL-004"; // derivation reference cycle
}

/// Every code the toolkit may emit, with its fixed severity.
pub const CATALOG: &[(&str, Severity)] = &[
    (codes::E_LEX_001, Severity::Error),
    (codes::E_LEX_002, Severity::Error),
    (codes::E_PAR_001, Severity::Error),
    (codes::E_PAR_002, Severity::Error),
    (codes::E_PAR_003, Severity::Error),
    (codes::E_PAR_004, Severity::Error),
    (codes::E_PAR_005, Severity::Error),
    (codes::E_PAR_006, Severity::Error),
    (codes::E_PAR_007, Severity::Error),
    (codes::E_PAR_008, Severity::Error),
    (codes::E_DIM_009, Severity::Error),
    (codes::E_LVL_001, Severity::Error),
    (codes::E_LVL_002, Severity::Error),
    (codes::E_LVL_003, Severity::Error),
    (codes::E_LVL_004, Severity::Error),
    (codes::E_QRY_001, Severity::Error),
    (codes::E_QRY_002, Severity::Error),
    (codes::E_BWW_001, Severity::Error),
    (codes::E_KND_001, Severity::Error),
    (codes::E_MAP_001, Severity::Error),
    (codes::E_MAP_002, Severity::Error),
    (codes::W_MAP_010, Severity::Warning),
    (codes::E_PRP_001, Severity::Error),
    (codes::E_PRP_002, Severity::Error),
    (codes::W_PRP_003, Severity::Warning),
    (codes::W_CSM_001, Severity::Warning),
    (codes::W_CSM_002, Severity::Warning),
    (codes::W_CSM_003, Severity::Warning),
    (codes::W_ATOM_001, Severity::Warning),
    (codes::E_EVL_001, Severity::Error),
    (codes::E_EVL_002, Severity::Error),
    (codes::E_EVL_003, Severity::Error),
    (codes::E_EVL_004, Severity::Error),
];

/// Fixed severity of a cataloged code.
pub fn catalog_severity(code: &str) -> Option<Severity> {
    CATALOG.iter().find(|(c, _)| *c == code).map(|(_, s)| *s)
}

/// One reported problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    /// Builds a diagnostic for a cataloged code with the catalog's severity.
    pub fn new(code: &str, message: impl Into<String>, span: SourceSpan) -> Self {
        let severity = catalog_severity(code)
            .unwrap_or_else(|| panic!("diagnostic code {code} is not in the catalog"));
        Diagnostic { severity, code: code.to_string(), message: message.into(), span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Renders the fixed single-line form `FILE:LINE:COL: SEVERITY[CODE]: MESSAGE`.
    pub fn render(&self) -> String {
        format!(
            "{}:{}:{}: {}[{}]: {}",
            self.span.file,
            self.span.start_line,
            self.span.start_col,
            self.severity.as_str(),
            self.code,
            self.message
        )
    }

    /// Renders the machine form: one JSON object with keys
    /// file, line, col, severity, code, message.
    pub fn render_json(&self) -> String {
        serde_json::json!({
            "file": self.span.file,
            "line": self.span.start_line,
            "col": self.span.start_col,
            "severity": self.severity.as_str(),
            "code": self.code,
            "message": self.message,
        })
        .to_string()
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Orders diagnostics by (file, start line, start column, code), keeping the
/// emission order of exact ties. All pipeline stages sort their output this
/// way before returning it.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (&a.span.file, a.span.start_line, a.span.start_col, &a.code).cmp(&(
            &b.span.file,
            b.span.start_line,
            b.span.start_col,
            &b.code,
        ))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_matches_fixed_template() {
        let d = Diagnostic::new(
            codes::E_PAR_001,
            "unexpected token `;`",
            SourceSpan::new("m.scd", 3, 7, 3, 8),
        );
        assert_eq!(d.render(), "m.scd:3:7: error[E-PAR-001]: unexpected token `;`");
    }

    #[test]
    fn json_form_has_exactly_the_six_keys() {
        let d = Diagnostic::new(codes::W_ATOM_001, "x", SourceSpan::point("a.scd", 1, 1));
        let v: serde_json::Value = serde_json::from_str(&d.render_json()).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(|k| k.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["code", "col", "file", "line", "message", "severity"]);
        assert_eq!(obj["severity"], "warning");
    }

    #[test]
    fn catalog_codes_are_unique_and_well_formed() {
        let mut seen = std::collections::BTreeSet::new();
        for (code, sev) in CATALOG {
            assert!(seen.insert(*code), "duplicate catalog code {code}");
            let class = match sev {
                Severity::Error => 'E',
                Severity::Warning => 'W',
            };
            assert!(code.starts_with(class), "severity letter mismatch for {code}");
            let parts: Vec<_> = code.split('-').collect();
            assert_eq!(parts.len(), 3, "code shape for {code}");
            assert!((3..=4).contains(&parts[1].len()), "area length for {code}");
            assert!(parts[1].chars().all(|c| c.is_ascii_uppercase()));
            assert_eq!(parts[2].len(), 3);
            assert!(parts[2].chars().all(|c| c.is_ascii_digit()));
        }
    }

    #[test]
    fn sorting_is_by_file_line_col_code_with_stable_ties() {
        let s = |f: &str, l, c| SourceSpan::point(f, l, c);
        let mut diags = vec![
            Diagnostic::new(codes::E_PAR_001, "b", s("b.scd", 1, 1)),
            Diagnostic::new(codes::E_LVL_003, "first", s("a.scd", 2, 5)),
            Diagnostic::new(codes::E_LVL_003, "second", s("a.scd", 2, 5)),
            Diagnostic::new(codes::E_BWW_001, "x", s("a.scd", 2, 5)),
            Diagnostic::new(codes::E_PAR_001, "y", s("a.scd", 1, 9)),
        ];
        sort_diagnostics(&mut diags);
        let rendered: Vec<_> = diags.iter().map(|d| (d.span.file.clone(), d.message.clone())).collect();
        assert_eq!(
            rendered,
            vec![
                ("a.scd".to_string(), "y".to_string()),
                ("a.scd".to_string(), "x".to_string()),
                ("a.scd".to_string(), "first".to_string()),
                ("a.scd".to_string(), "second".to_string()),
                ("b.scd".to_string(), "b".to_string()),
            ]
        );
    }
}
