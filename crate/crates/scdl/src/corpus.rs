//! Conformance-corpus manifest parsing.
//!
//! The corpus ships a plain-text manifest with one model per line:
//!
//! ```text
//! # name  root-unit-path  expected-diagnostic-codes
//! healthcare healthcare/root.scd -
//! coronavirus-broken coronavirus-broken/root.scd E-MAP-001
//! ```
//!
//! Fields are whitespace-separated. The third field is `-` for a clean
//! model, otherwise a comma-separated multiset of diagnostic codes the
//! model must produce — exactly those, no more, no fewer. Root paths are
//! relative to the manifest file.

/// One corpus model and the diagnostics running it must yield.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    /// Root unit path, relative to the manifest's directory.
    pub root: String,
    /// Expected diagnostic codes, sorted; empty means the model is clean.
    pub expected_codes: Vec<String>,
}

/// Parses a manifest. `#` starts a comment, blank lines are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<CorpusEntry>, String> {
    let mut entries = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let number = index + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [name, root, codes] = fields.as_slice() else {
            return Err(format!(
                "line {number}: expected `name root-path codes`, got {} fields",
                fields.len()
            ));
        };
        let mut expected_codes: Vec<String> = if *codes == "-" {
            Vec::new()
        } else {
            codes.split(',').map(str::to_string).collect()
        };
        if expected_codes.iter().any(String::is_empty) {
            return Err(format!("line {number}: empty diagnostic code"));
        }
        expected_codes.sort_unstable();
        if entries.iter().any(|e: &CorpusEntry| e.name == *name) {
            return Err(format!("line {number}: duplicate model name `{name}`"));
        }
        entries.push(CorpusEntry {
            name: name.to_string(),
            root: root.to_string(),
            expected_codes,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lines_parse() {
        let entries = parse_manifest(
            "# corpus\nhealthcare healthcare/root.scd -\nbroken broken/root.scd E-MAP-001,W-MAP-010\n\n",
        )
        .expect("parses");
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].name, "healthcare");
        assert_eq!(entries[0].root, "healthcare/root.scd");
        assert!(entries[0].expected_codes.is_empty());
        assert_eq!(entries[1].expected_codes, vec!["E-MAP-001", "W-MAP-010"]);
    }

    #[test]
    fn malformed_manifests_are_rejected() {
        assert!(parse_manifest("just-two fields").unwrap_err().contains("line 1"));
        assert!(parse_manifest("a a/root.scd -\na b/root.scd -").unwrap_err().contains("duplicate"));
        assert!(parse_manifest("a a/root.scd E-MAP-001,").unwrap_err().contains("empty"));
    }
}
