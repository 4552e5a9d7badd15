//! The dialect difference catalog and the false-friend linter.
//!
//! The catalog ships as a data file (`data/catalog.txt`) so that rows can be
//! corrected without touching code. [`Catalog::builtin`] loads it once.

mod format;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;

use crate::ast::{feature_occurrences, Ast, Dialect, FeatureId, Span};

pub use format::{CatalogError, FORMAT_VERSION};

const BUILTIN: &str = include_str!("../../data/catalog.txt");

/// Message suffix for behavior the target dialect does not document.
pub const UNDOCUMENTED: &str = "behavior verified experimentally, not documented";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryGroup {
    FalseFriend1,
    FalseFriend2,
    Nuanced,
    EngineBugNote,
}

impl EntryGroup {
    pub fn name(self) -> &'static str {
        match self {
            EntryGroup::FalseFriend1 => "false-friend-1",
            EntryGroup::FalseFriend2 => "false-friend-2",
            EntryGroup::Nuanced => "nuanced",
            EntryGroup::EngineBugNote => "engine-bug-note",
        }
    }
}

impl fmt::Display for EntryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            EntryGroup::FalseFriend1,
            EntryGroup::FalseFriend2,
            EntryGroup::Nuanced,
            EntryGroup::EngineBugNote,
        ]
        .into_iter()
        .find(|g| g.name() == s)
        .ok_or_else(|| format!("unknown group `{s}`"))
    }
}

/// How one dialect reads a construct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Interpretation {
    Feature(String),
    /// The text degrades to these literal characters.
    Literal(String),
    SyntaxError,
    /// The notation means some other feature.
    Alternate(String),
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interpretation::Feature(n) => write!(f, "feature `{n}`"),
            Interpretation::Literal(t) => write!(f, "the literal \"{t}\""),
            Interpretation::SyntaxError => f.write_str("a syntax error"),
            Interpretation::Alternate(n) => write!(f, "feature `{n}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub interpretation: Interpretation,
    /// False where the dialect's documentation does not specify the behavior.
    pub documented: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: String,
    pub group: EntryGroup,
    /// Empty for engine bug notes.
    pub features: Vec<FeatureId>,
    /// One cell per host dialect.
    pub cells: BTreeMap<Dialect, Cell>,
}

impl CatalogEntry {
    /// The interpretation in `dialect`. portable-core takes the majority
    /// reading of the eight hosts (ties go to the earlier column).
    pub fn interpretation(&self, dialect: Dialect) -> &Interpretation {
        if let Some(cell) = self.cells.get(&dialect) {
            return &cell.interpretation;
        }
        let mut best: Option<(&Interpretation, usize)> = None;
        for d in Dialect::HOSTS {
            let i = &self.cells[&d].interpretation;
            let n = self
                .cells
                .values()
                .filter(|c| &c.interpretation == i)
                .count();
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((i, n));
            }
        }
        best.unwrap().0
    }

    pub fn documented(&self, dialect: Dialect) -> bool {
        self.cells.get(&dialect).is_none_or(|c| c.documented)
    }

    pub fn is_note(&self) -> bool {
        self.group == EntryGroup::EngineBugNote
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a catalog construct")]
pub struct UnknownConstruct(pub FeatureId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub entry_id: String,
    pub feature: String,
    pub location: Span,
    pub target: Dialect,
    pub severity: Severity,
    pub message: String,
}

/// The parsed catalog. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub version: u32,
    entries: Vec<CatalogEntry>,
    lines: Vec<format::Line>,
}

impl Catalog {
    /// The catalog shipped with the crate.
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::parse(BUILTIN).expect("shipped catalog is valid"))
    }

    /// The exact text of the shipped catalog file.
    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        format::parse(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<Catalog> {
        let text = std::fs::read_to_string(path)?;
        Ok(Catalog::parse(&text)?)
    }

    /// Serialize back to the file format.
    pub fn to_text(&self) -> String {
        format::write(self)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn entry(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn entry_for(&self, feature: FeatureId) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.features.contains(&feature))
    }

    /// The catalog cell for `feature` in `dialect`. On rows that cover more
    /// than one construct, a literal fallback is narrowed to the text of
    /// this construct alone (`\A` in `/\Ab\Z/` reads as "A").
    pub fn interpretation(
        &self,
        feature: FeatureId,
        dialect: Dialect,
    ) -> Result<Interpretation, UnknownConstruct> {
        let entry = self.entry_for(feature).ok_or(UnknownConstruct(feature))?;
        let interp = entry.interpretation(dialect).clone();
        match (&interp, feature.fallback_text()) {
            (Interpretation::Literal(_), Some(text)) if entry.features.len() > 1 => {
                Ok(Interpretation::Literal(text.to_string()))
            }
            _ => Ok(interp),
        }
    }

    /// Findings for every catalog construct in `ast` that `target` reads
    /// differently from `source`.
    pub fn lint(&self, ast: &Ast, source: Dialect, target: Dialect) -> Vec<Finding> {
        let mut out = Vec::new();
        for (feature, span) in feature_occurrences(ast) {
            let Some(entry) = self.entry_for(feature) else {
                continue;
            };
            let (Ok(from), Ok(to)) = (
                self.interpretation(feature, source),
                self.interpretation(feature, target),
            ) else {
                continue;
            };
            if from == to {
                continue;
            }
            let severity = if to == Interpretation::SyntaxError {
                Severity::Error
            } else if entry.group == EntryGroup::Nuanced {
                Severity::Info
            } else {
                Severity::Warning
            };
            let mut message =
                format!("`{feature}`: {source} reads it as {from}, {target} reads it as {to}");
            if !entry.documented(target) {
                message.push_str(&format!(" ({UNDOCUMENTED})"));
            }
            out.push(Finding {
                entry_id: entry.id.clone(),
                feature: feature.name().to_string(),
                location: span,
                target,
                severity,
                message,
            });
        }
        out
    }

    /// Lint against each of the eight hosts, using the tree's own dialect
    /// as the source.
    pub fn portability_matrix(&self, ast: &Ast) -> BTreeMap<Dialect, Vec<Finding>> {
        Dialect::HOSTS
            .iter()
            .map(|&d| (d, self.lint(ast, ast.dialect, d)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse;

    fn cat() -> &'static Catalog {
        Catalog::builtin()
    }

    #[test]
    fn golden_file_round_trip() {
        assert_eq!(cat().to_text(), Catalog::builtin_text());
    }

    #[test]
    fn table_lookups() {
        use Interpretation::*;
        let c = cat();
        assert_eq!(
            c.interpretation(FeatureId::PossessiveQuantifier, Dialect::JavaScript),
            Ok(SyntaxError)
        );
        assert_eq!(
            c.interpretation(FeatureId::AnchorA, Dialect::JavaScript),
            Ok(Literal("A".into()))
        );
        assert_eq!(
            c.interpretation(FeatureId::BackrefNumeric, Dialect::Rust),
            Ok(Alternate("octal".into()))
        );
        assert_eq!(
            c.interpretation(FeatureId::QuoteBlock, Dialect::Python),
            Ok(Literal("QaE".into()))
        );
        assert_eq!(
            c.interpretation(FeatureId::Lookaround, Dialect::Java),
            Err(UnknownConstruct(FeatureId::Lookaround))
        );
        assert_eq!(
            c.interpretation(FeatureId::Caret, Dialect::PortableCore),
            Ok(Feature("input-start".into()))
        );
    }

    #[test]
    fn every_catalog_feature_has_one_entry() {
        for f in FeatureId::ALL {
            assert_eq!(cat().entry_for(f).is_some(), f.is_catalog(), "{f}");
        }
    }

    #[test]
    fn lint_examples() {
        let c = cat();
        let ast = parse(r"\Ab\Z", Dialect::Java).unwrap();
        let f = c.lint(&ast, Dialect::Java, Dialect::JavaScript);
        assert_eq!(f.len(), 2);
        assert!(f.iter().all(|f| f.severity == Severity::Warning));
        assert!(f[0].message.contains(UNDOCUMENTED));

        let abc = parse("abc", Dialect::Java).unwrap();
        assert!(c.lint(&abc, Dialect::Java, Dialect::Go).is_empty());

        let hex = parse(r"\x{41}", Dialect::Java).unwrap();
        let f = c.lint(&hex, Dialect::Java, Dialect::Python);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Error);

        let nuanced = parse("((a)|(b))+", Dialect::Java).unwrap();
        let f = c.lint(&nuanced, Dialect::Java, Dialect::JavaScript);
        assert_eq!(f[0].severity, Severity::Info);
    }

    #[test]
    fn matrix_examples() {
        let c = cat();
        let g = parse(r"\Gabc", Dialect::Java).unwrap();
        let m = c.portability_matrix(&g);
        assert_eq!(m[&Dialect::JavaScript][0].severity, Severity::Warning);
        assert_eq!(m[&Dialect::Go][0].severity, Severity::Error);
        assert_eq!(m[&Dialect::Rust][0].severity, Severity::Error);
        for d in [Dialect::Java, Dialect::Php, Dialect::Perl] {
            assert!(m[&d].is_empty());
        }
        let p = parse(r"\pN", Dialect::Java).unwrap();
        let m = c.portability_matrix(&p);
        let flagged: Vec<Dialect> = m
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(d, _)| *d)
            .collect();
        assert_eq!(
            flagged,
            vec![Dialect::JavaScript, Dialect::Python, Dialect::Ruby]
        );
        let ab = parse("a|b", Dialect::Java).unwrap();
        let m = c.portability_matrix(&ab);
        assert_eq!(m.len(), 8);
        assert!(m.values().all(Vec::is_empty));
    }

    #[test]
    fn self_lint_is_empty() {
        for p in [r"\Ab\Z", "a++", r"(a)\1", "[]]", "((a*)+)"] {
            for d in Dialect::ALL {
                if let Ok(ast) = parse(p, d) {
                    assert!(cat().lint(&ast, d, d).is_empty());
                }
            }
        }
    }
}
