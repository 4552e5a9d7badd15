//! Character sets as sorted, disjoint, non-adjacent inclusive ranges.

use std::sync::OnceLock;

use crate::ast::{CharClass, ClassItem, Dialect, EscapeClass, UnicodeProperty};

const MAX: char = char::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CharSet {
    ranges: Vec<(char, char)>,
}

fn next_char(c: char) -> Option<char> {
    match c {
        '\u{d7ff}' => Some('\u{e000}'),
        MAX => None,
        c => char::from_u32(c as u32 + 1),
    }
}

fn prev_char(c: char) -> Option<char> {
    match c {
        '\u{e000}' => Some('\u{d7ff}'),
        '\0' => None,
        c => char::from_u32(c as u32 - 1),
    }
}

impl CharSet {
    pub fn empty() -> CharSet {
        CharSet::default()
    }

    pub fn any() -> CharSet {
        CharSet {
            ranges: vec![('\0', MAX)],
        }
    }

    pub fn single(c: char) -> CharSet {
        CharSet {
            ranges: vec![(c, c)],
        }
    }

    pub fn from_ranges(ranges: impl IntoIterator<Item = (char, char)>) -> CharSet {
        let mut ranges: Vec<(char, char)> = ranges.into_iter().filter(|(a, b)| a <= b).collect();
        ranges.sort_unstable();
        let mut out: Vec<(char, char)> = Vec::with_capacity(ranges.len());
        for (lo, hi) in ranges {
            if let Some(last) = out.last_mut() {
                if next_char(last.1).is_none_or(|n| lo <= n) {
                    last.1 = last.1.max(hi);
                    continue;
                }
            }
            out.push((lo, hi));
        }
        CharSet { ranges: out }
    }

    fn from_chars(chars: &str) -> CharSet {
        CharSet::from_ranges(chars.chars().map(|c| (c, c)))
    }

    pub fn ranges(&self) -> &[(char, char)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.ranges
            .binary_search_by(|&(lo, hi)| {
                if hi < c {
                    std::cmp::Ordering::Less
                } else if lo > c {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    pub fn first(&self) -> Option<char> {
        self.ranges.first().map(|r| r.0)
    }

    /// Number of scalar values in the set.
    pub fn len(&self) -> u64 {
        self.ranges
            .iter()
            .map(|&(lo, hi)| {
                let n = hi as u64 - lo as u64 + 1;
                if lo <= '\u{d7ff}' && hi >= '\u{e000}' {
                    n - 0x800
                } else {
                    n
                }
            })
            .sum()
    }

    pub fn union(&self, other: &CharSet) -> CharSet {
        CharSet::from_ranges(self.ranges.iter().chain(&other.ranges).copied())
    }

    pub fn negate(&self) -> CharSet {
        let mut out = Vec::new();
        let mut start = Some('\0');
        for &(lo, hi) in &self.ranges {
            if let (Some(s), Some(p)) = (start, prev_char(lo)) {
                if s <= p {
                    out.push((s, p));
                }
            }
            start = next_char(hi);
        }
        if let Some(s) = start {
            out.push((s, MAX));
        }
        CharSet { ranges: out }
    }

    pub fn intersect(&self, other: &CharSet) -> CharSet {
        self.negate().union(&other.negate()).negate()
    }

    pub fn intersects(&self, other: &CharSet) -> bool {
        !self.intersect(other).is_empty()
    }

    /// Up to `n` members, smallest first.
    pub fn sample(&self, n: usize) -> Vec<char> {
        let mut out = Vec::new();
        for &(lo, hi) in &self.ranges {
            let mut c = Some(lo);
            while let Some(ch) = c {
                if ch > hi || out.len() >= n {
                    break;
                }
                out.push(ch);
                c = next_char(ch);
            }
            if out.len() >= n {
                break;
            }
        }
        out
    }
}

/// Sets matched by an escape class under default flags (ASCII semantics).
pub fn escape_set(e: EscapeClass) -> CharSet {
    let digit = || CharSet::from_ranges([('0', '9')]);
    let word = || CharSet::from_ranges([('0', '9'), ('A', 'Z'), ('_', '_'), ('a', 'z')]);
    let space = || CharSet::from_chars(" \t\n\r\u{b}\u{c}");
    let hspace = || {
        CharSet::from_ranges([
            (' ', ' '),
            ('\t', '\t'),
            ('\u{a0}', '\u{a0}'),
            ('\u{1680}', '\u{1680}'),
            ('\u{180e}', '\u{180e}'),
            ('\u{2000}', '\u{200a}'),
            ('\u{202f}', '\u{202f}'),
            ('\u{205f}', '\u{205f}'),
            ('\u{3000}', '\u{3000}'),
        ])
    };
    let hex = || CharSet::from_ranges([('0', '9'), ('A', 'F'), ('a', 'f')]);
    match e {
        EscapeClass::Digit => digit(),
        EscapeClass::NotDigit => digit().negate(),
        EscapeClass::Word => word(),
        EscapeClass::NotWord => word().negate(),
        EscapeClass::Space => space(),
        EscapeClass::NotSpace => space().negate(),
        EscapeClass::HorizSpace => hspace(),
        EscapeClass::NotHorizSpace => hspace().negate(),
        EscapeClass::HexDigit => hex(),
        EscapeClass::NotHexDigit => hex().negate(),
    }
}

pub fn posix_set(name: &str) -> CharSet {
    let r = |v: &[(char, char)]| CharSet::from_ranges(v.iter().copied());
    match name {
        "alnum" => r(&[('0', '9'), ('A', 'Z'), ('a', 'z')]),
        "alpha" => r(&[('A', 'Z'), ('a', 'z')]),
        "blank" => r(&[(' ', ' '), ('\t', '\t')]),
        "cntrl" => r(&[('\0', '\u{1f}'), ('\u{7f}', '\u{7f}')]),
        "digit" => r(&[('0', '9')]),
        "graph" => r(&[('!', '~')]),
        "lower" => r(&[('a', 'z')]),
        "print" => r(&[(' ', '~')]),
        "punct" => r(&[('!', '/'), (':', '@'), ('[', '`'), ('{', '~')]),
        "space" => r(&[('\t', '\r'), (' ', ' ')]),
        "upper" => r(&[('A', 'Z')]),
        "word" => r(&[('0', '9'), ('A', 'Z'), ('_', '_'), ('a', 'z')]),
        "xdigit" => r(&[('0', '9'), ('A', 'F'), ('a', 'f')]),
        _ => CharSet::empty(),
    }
}

fn scan(pred: fn(char) -> bool) -> CharSet {
    let mut ranges = Vec::new();
    let mut open: Option<(char, char)> = None;
    for c in ('\0'..=MAX).filter(|&c| pred(c)) {
        match open {
            Some((lo, hi)) if next_char(hi) == Some(c) => open = Some((lo, c)),
            Some(r) => {
                ranges.push(r);
                open = Some((c, c));
            }
            None => open = Some((c, c)),
        }
    }
    ranges.extend(open);
    CharSet { ranges }
}

/// Unicode general-category sets, approximated with the standard library's
/// character predicates.
pub fn property_set(p: &UnicodeProperty) -> CharSet {
    static NUMBER: OnceLock<CharSet> = OnceLock::new();
    static LETTER: OnceLock<CharSet> = OnceLock::new();
    static UPPER: OnceLock<CharSet> = OnceLock::new();
    static LOWER: OnceLock<CharSet> = OnceLock::new();
    let separators = || {
        CharSet::from_ranges([
            (' ', ' '),
            ('\u{a0}', '\u{a0}'),
            ('\u{1680}', '\u{1680}'),
            ('\u{2000}', '\u{200a}'),
            ('\u{202f}', '\u{202f}'),
            ('\u{205f}', '\u{205f}'),
            ('\u{3000}', '\u{3000}'),
        ])
    };
    let set = match p.name.as_str() {
        "N" | "Nd" => NUMBER.get_or_init(|| scan(char::is_numeric)).clone(),
        "L" => LETTER.get_or_init(|| scan(char::is_alphabetic)).clone(),
        "Lu" => UPPER.get_or_init(|| scan(char::is_uppercase)).clone(),
        "Ll" => LOWER.get_or_init(|| scan(char::is_lowercase)).clone(),
        "Zs" => separators(),
        "Z" => separators().union(&CharSet::from_ranges([('\u{2028}', '\u{2029}')])),
        _ => CharSet::empty(),
    };
    if p.negated {
        set.negate()
    } else {
        set
    }
}

/// The set of characters `.` matches under default flags.
pub fn dot_set(dialect: Dialect) -> CharSet {
    match dialect {
        Dialect::JavaScript => CharSet::from_chars("\n\r\u{2028}\u{2029}").negate(),
        _ => CharSet::single('\n').negate(),
    }
}

/// The sorted disjoint range form of a bracketed class.
pub fn class_ranges(class: &CharClass) -> CharSet {
    let mut ranges: Vec<(char, char)> = Vec::new();
    for item in &class.items {
        match item {
            ClassItem::Char(c) => ranges.push((*c, *c)),
            ClassItem::Range(lo, hi) => ranges.push((*lo, *hi)),
            ClassItem::Escape(e) => ranges.extend_from_slice(escape_set(*e).ranges()),
            ClassItem::Posix { name, negated } => {
                let s = posix_set(name);
                let s = if *negated { s.negate() } else { s };
                ranges.extend_from_slice(s.ranges());
            }
            ClassItem::Property(p) => ranges.extend_from_slice(property_set(p).ranges()),
        }
    }
    let set = CharSet::from_ranges(ranges);
    if class.negated {
        set.negate()
    } else {
        set
    }
}
