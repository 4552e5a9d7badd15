//! Regex corpora: extraction from source trees, the corpus CSV file and
//! the re-use report.

mod extract;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use extract::{extract_patterns, Language, UnsupportedLanguage};

/// Patterns shorter than this never count as duplicates.
pub const DEFAULT_MIN_LENGTH: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorpusEntry {
    /// Raw pattern text as declared.
    pub pattern: String,
    pub registry: String,
    pub module: String,
    pub file: String,
    pub line: usize,
}

/// Regexes declared in one file.
pub fn extract_regexes(
    file: &str,
    contents: &str,
    language: Language,
    registry: &str,
    module: &str,
) -> Vec<CorpusEntry> {
    extract_patterns(contents, language)
        .into_iter()
        .map(|(pattern, line)| CorpusEntry {
            pattern,
            registry: registry.to_string(),
            module: module.to_string(),
            file: file.to_string(),
            line,
        })
        .collect()
}

/// Walk `root` and extract from every file of `language`. Each top-level
/// directory is a module; files directly under `root` belong to a module
/// named after `root` itself.
pub fn extract_tree(
    root: &Path,
    language: Language,
    registry: &str,
) -> anyhow::Result<Vec<CorpusEntry>> {
    let exts = language.extensions();
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            exts.is_empty()
                || p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| exts.contains(&e))
        })
        .collect();
    files.sort();
    let root_name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| ".".into());
    let per_file: Vec<Vec<CorpusEntry>> = files
        .par_iter()
        .map(|path| {
            let rel = path.strip_prefix(root).unwrap_or(path);
            let module = match rel.components().count() {
                0 | 1 => root_name.clone(),
                _ => rel
                    .components()
                    .next()
                    .unwrap()
                    .as_os_str()
                    .to_string_lossy()
                    .into_owned(),
            };
            let Ok(bytes) = std::fs::read(path) else {
                log::warn!("skipping unreadable file {}", path.display());
                return Vec::new();
            };
            let contents = String::from_utf8_lossy(&bytes);
            let file = rel.to_string_lossy().replace('\\', "/");
            extract_regexes(&file, &contents, language, registry, &module)
        })
        .collect();
    Ok(per_file.into_iter().flatten().collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    registry: String,
    module: String,
    file: String,
    line: usize,
    pattern_b64: String,
}

pub fn write_corpus(entries: &[CorpusEntry], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in entries {
        w.serialize(Row {
            registry: e.registry.clone(),
            module: e.module.clone(),
            file: e.file.clone(),
            line: e.line,
            pattern_b64: STANDARD.encode(&e.pattern),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus(input: impl Read) -> anyhow::Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    for (i, row) in csv::Reader::from_reader(input)
        .deserialize::<Row>()
        .enumerate()
    {
        let row = row?;
        let pattern = String::from_utf8(STANDARD.decode(&row.pattern_b64)?)
            .map_err(|_| anyhow::anyhow!("row {}: pattern is not UTF-8", i + 1))?;
        out.push(CorpusEntry {
            pattern,
            registry: row.registry,
            module: row.module,
            file: row.file,
            line: row.line,
        });
    }
    Ok(out)
}

/// Newline-delimited base64 snippets.
pub fn read_internet_sources(input: &str) -> anyhow::Result<Vec<String>> {
    input
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(String::from_utf8(STANDARD.decode(l.trim())?)?))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ModuleFlags {
    pub intra_duplicate: bool,
    pub inter_duplicate: bool,
    pub internet_duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleReport {
    pub registry: String,
    pub module: String,
    #[serde(flatten)]
    pub flags: ModuleFlags,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReuseReport {
    pub min_length: usize,
    /// Sorted by registry, then module.
    pub modules: Vec<ModuleReport>,
    /// Number of distinct modules declaring each pattern.
    pub occurrences: BTreeMap<String, usize>,
}

impl ReuseReport {
    pub fn flags(&self, registry: &str, module: &str) -> Option<ModuleFlags> {
        self.modules
            .iter()
            .find(|m| m.registry == registry && m.module == module)
            .map(|m| m.flags)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "registry",
            "module",
            "intra_duplicate",
            "inter_duplicate",
            "internet_duplicate",
        ])
        .unwrap();
        for m in &self.modules {
            let f = m.flags;
            w.write_record([
                m.registry.clone(),
                m.module.clone(),
                f.intra_duplicate.to_string(),
                f.inter_duplicate.to_string(),
                f.internet_duplicate.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Exact-text duplicate detection within and across registries and
/// against internet snippets.
pub fn reuse_report(
    corpus: &[CorpusEntry],
    min_length: usize,
    internet_sources: &[String],
) -> ReuseReport {
    // pattern -> registry -> modules
    let mut users: BTreeMap<&str, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    let mut flags: BTreeMap<(&str, &str), ModuleFlags> = BTreeMap::new();
    for e in corpus {
        users
            .entry(&e.pattern)
            .or_default()
            .entry(&e.registry)
            .or_default()
            .insert(&e.module);
        flags.entry((&e.registry, &e.module)).or_default();
    }
    let internet: HashSet<&str> = internet_sources.iter().map(String::as_str).collect();
    let mut occurrences = BTreeMap::new();
    for (pattern, registries) in &users {
        occurrences.insert(
            pattern.to_string(),
            registries.values().map(BTreeSet::len).sum(),
        );
        if pattern.chars().count() < min_length {
            continue;
        }
        let inter = registries.len() >= 2;
        let online = internet.contains(pattern);
        for (registry, modules) in registries {
            let intra = modules.len() >= 2;
            for module in modules {
                let f = flags.get_mut(&(*registry, *module)).unwrap();
                f.intra_duplicate |= intra;
                f.inter_duplicate |= inter;
                f.internet_duplicate |= online;
            }
        }
    }
    ReuseReport {
        min_length,
        modules: flags
            .into_iter()
            .map(|((registry, module), flags)| ModuleReport {
                registry: registry.to_string(),
                module: module.to_string(),
                flags,
            })
            .collect(),
        occurrences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(registry: &str, module: &str, pattern: &str) -> CorpusEntry {
        CorpusEntry {
            pattern: pattern.into(),
            registry: registry.into(),
            module: module.into(),
            file: "index".into(),
            line: 1,
        }
    }

    #[test]
    fn csv_round_trip() {
        let entries = vec![entry("npm", "m,1", "a\n\"b\""), entry("pypi", "x", "é+")];
        let mut buf = Vec::new();
        write_corpus(&entries, &mut buf).unwrap();
        assert!(buf.starts_with(b"registry,module,file,line,pattern_b64\n"));
        assert_eq!(read_corpus(&buf[..]).unwrap(), entries);
    }

    #[test]
    fn reuse_flags() {
        let shared = r"[\w\-]+\@([^:]+):";
        assert_eq!(shared.chars().count(), 17);
        let corpus = vec![
            entry("npm", "a", shared),
            entry("pypi", "b", shared),
            entry("npm", "c", r"\s"),
            entry("pypi", "d", r"\s"),
            entry("npm", "e", &"x".repeat(40)),
            entry("npm", "f", "0123456789abcde"),
            entry("npm", "g", "0123456789abcde"),
        ];
        let r = reuse_report(
            &corpus,
            DEFAULT_MIN_LENGTH,
            &["0123456789abcde".to_string()],
        );
        let f = |m: &str| {
            r.flags(if "bd".contains(m) { "pypi" } else { "npm" }, m)
                .unwrap()
        };
        assert!(f("a").inter_duplicate && f("b").inter_duplicate);
        assert!(!f("a").intra_duplicate);
        assert_eq!(f("c"), ModuleFlags::default());
        assert_eq!(f("e"), ModuleFlags::default());
        assert!(f("f").intra_duplicate && f("f").internet_duplicate && !f("f").inter_duplicate);
        assert_eq!(r.occurrences[shared], 2);
        assert!(
            reuse_report(&corpus, 16, &[]).flags("npm", "f").unwrap() == ModuleFlags::default()
        );
    }
}
