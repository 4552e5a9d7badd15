//! Reading and writing the line-oriented catalog file.

use std::collections::BTreeMap;

use super::{Catalog, CatalogEntry, Cell, EntryGroup, Interpretation};
use crate::ast::{Dialect, FeatureId};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("catalog line {line}: {reason}")]
pub struct CatalogError {
    pub line: usize,
    pub reason: String,
}

/// A non-record line kept so that writing reproduces the file exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Line {
    Text(String),
    Version,
    Entry(usize),
}

pub(super) fn parse(text: &str) -> Result<Catalog, CatalogError> {
    let mut lines = Vec::new();
    let mut entries: Vec<CatalogEntry> = Vec::new();
    let mut version = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |reason: String| CatalogError {
            line: lineno,
            reason,
        };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            lines.push(Line::Text(raw.to_string()));
            continue;
        }
        if let Some(v) = trimmed.strip_prefix("@version") {
            let v: u32 = v
                .trim()
                .parse()
                .map_err(|_| err(format!("bad version `{}`", v.trim())))?;
            if v != FORMAT_VERSION {
                return Err(err(format!("unsupported catalog version {v}")));
            }
            version = Some(v);
            lines.push(Line::Version);
            continue;
        }
        if version.is_none() {
            return Err(err("record before `@version`".into()));
        }
        let entry = parse_record(trimmed).map_err(err)?;
        if entries.iter().any(|e| e.id == entry.id) {
            return Err(err(format!("duplicate id `{}`", entry.id)));
        }
        for f in &entry.features {
            if let Some(other) = entries.iter().find(|e| e.features.contains(f)) {
                return Err(err(format!("feature `{f}` already used by `{}`", other.id)));
            }
        }
        lines.push(Line::Entry(entries.len()));
        entries.push(entry);
    }
    let Some(version) = version else {
        return Err(CatalogError {
            line: 0,
            reason: "missing `@version` line".into(),
        });
    };
    Ok(Catalog {
        version,
        entries,
        lines,
    })
}

fn parse_record(line: &str) -> Result<CatalogEntry, String> {
    let fields: Vec<&str> = line.split(" | ").map(str::trim).collect();
    let [id, group, construct, cells] = fields[..] else {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    };
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
        return Err(format!("bad id `{id}`"));
    }
    let group: EntryGroup = group.parse()?;
    let features = if construct == "-" {
        Vec::new()
    } else {
        construct
            .split(',')
            .map(|f| f.parse::<FeatureId>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if features.is_empty() != (group == EntryGroup::EngineBugNote) {
        return Err("only notes may omit the construct".into());
    }
    let mut map = BTreeMap::new();
    for (i, cell) in cells.split_whitespace().enumerate() {
        let (dialect, rest) = cell
            .split_once('=')
            .ok_or_else(|| format!("bad cell `{cell}`"))?;
        let dialect: Dialect = dialect
            .parse()
            .map_err(|e: crate::ast::UnknownDialect| e.to_string())?;
        if Dialect::HOSTS.get(i) != Some(&dialect) {
            return Err(format!("cell `{cell}` out of order"));
        }
        let (interp, documented) = match rest.strip_suffix(",!doc") {
            Some(r) => (r, false),
            None => (rest, true),
        };
        map.insert(
            dialect,
            Cell {
                interpretation: parse_interpretation(interp)?,
                documented,
            },
        );
    }
    if map.len() != Dialect::HOSTS.len() {
        return Err(format!("expected 8 cells, found {}", map.len()));
    }
    Ok(CatalogEntry {
        id: id.to_string(),
        group,
        features,
        cells: map,
    })
}

fn parse_interpretation(text: &str) -> Result<Interpretation, String> {
    if text == "error" {
        return Ok(Interpretation::SyntaxError);
    }
    let (kind, value) = text
        .split_once(':')
        .ok_or_else(|| format!("bad interpretation `{text}`"))?;
    if value.is_empty() {
        return Err(format!("empty interpretation `{text}`"));
    }
    let value = value.to_string();
    match kind {
        "feature" => Ok(Interpretation::Feature(value)),
        "alt" => Ok(Interpretation::Alternate(value)),
        "literal" => Ok(Interpretation::Literal(value)),
        _ => Err(format!("unknown interpretation kind `{kind}`")),
    }
}

pub(super) fn write(catalog: &Catalog) -> String {
    let mut out = String::new();
    for line in &catalog.lines {
        match line {
            Line::Text(t) => out.push_str(t),
            Line::Version => out.push_str(&format!("@version {}", catalog.version)),
            Line::Entry(i) => out.push_str(&record(&catalog.entries[*i])),
        }
        out.push('\n');
    }
    out
}

fn record(e: &CatalogEntry) -> String {
    let construct = if e.features.is_empty() {
        "-".to_string()
    } else {
        e.features
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join(",")
    };
    let cells: Vec<String> = Dialect::HOSTS
        .iter()
        .map(|d| {
            let cell = &e.cells[d];
            let interp = match &cell.interpretation {
                Interpretation::SyntaxError => "error".to_string(),
                Interpretation::Feature(v) => format!("feature:{v}"),
                Interpretation::Alternate(v) => format!("alt:{v}"),
                Interpretation::Literal(v) => format!("literal:{v}"),
            };
            let doc = if cell.documented { "" } else { ",!doc" };
            format!("{d}={interp}{doc}")
        })
        .collect();
    format!(
        "{} | {} | {} | {}",
        e.id,
        e.group,
        construct,
        cells.join(" ")
    )
}
