//! Dialect-aware regex syntax trees.
//!
//! A pattern is always parsed *under* a [`Dialect`]: the same text can yield
//! different trees in different dialects (`\A` is an anchor in Java and a
//! literal `A` in JavaScript). Every downstream analysis consumes an [`Ast`].

mod emit;
mod features;
mod parse;
mod variant;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use emit::emit;
pub use features::{feature_inventory, feature_occurrences, FeatureId, FeatureSet};
pub use parse::{parse, ParseError};
pub use variant::{anchor_variant, has_bounded_repeat, is_start_anchored, unbounded_variant};

/// A regex dialect: one of the eight studied host languages, or the
/// conservative intersection of all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dialect {
    JavaScript,
    Java,
    Php,
    Python,
    Ruby,
    Go,
    Perl,
    Rust,
    PortableCore,
}

impl Dialect {
    /// The eight host dialects, in catalog column order.
    pub const HOSTS: [Dialect; 8] = [
        Dialect::JavaScript,
        Dialect::Java,
        Dialect::Php,
        Dialect::Python,
        Dialect::Ruby,
        Dialect::Go,
        Dialect::Perl,
        Dialect::Rust,
    ];

    pub const ALL: [Dialect; 9] = [
        Dialect::JavaScript,
        Dialect::Java,
        Dialect::Php,
        Dialect::Python,
        Dialect::Ruby,
        Dialect::Go,
        Dialect::Perl,
        Dialect::Rust,
        Dialect::PortableCore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dialect::JavaScript => "javascript",
            Dialect::Java => "java",
            Dialect::Php => "php",
            Dialect::Python => "python",
            Dialect::Ruby => "ruby",
            Dialect::Go => "go",
            Dialect::Perl => "perl",
            Dialect::Rust => "rust",
            Dialect::PortableCore => "portable-core",
        }
    }

    /// Semantics of `$` under default flags.
    pub fn dollar(self) -> Assertion {
        match self {
            Dialect::Java | Dialect::Php | Dialect::Python | Dialect::Perl => {
                Assertion::EndTextOptNewline
            }
            Dialect::Ruby => Assertion::LineEnd,
            Dialect::JavaScript | Dialect::Go | Dialect::Rust | Dialect::PortableCore => {
                Assertion::EndText
            }
        }
    }

    /// Semantics of `^` under default flags.
    pub fn caret(self) -> Assertion {
        match self {
            Dialect::Ruby => Assertion::LineStart,
            _ => Assertion::StartText,
        }
    }

    /// Engines in this dialect reject a loop iteration that matched the
    /// empty string (instead of accepting it and leaving the loop).
    pub fn rejects_empty_iterations(self) -> bool {
        matches!(self, Dialect::JavaScript | Dialect::Go | Dialect::Rust)
    }

    /// Captures inside a repeated group are reset at each iteration.
    pub fn clears_captures_per_iteration(self) -> bool {
        self == Dialect::JavaScript
    }

    /// A backreference to a group that has not participated matches empty.
    pub fn unset_backref_matches_empty(self) -> bool {
        self == Dialect::JavaScript
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Dialect {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Dialect {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dialect `{0}`")]
pub struct UnknownDialect(pub String);

impl FromStr for Dialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let d = match lower.as_str() {
            "javascript" | "js" | "node" => Dialect::JavaScript,
            "java" => Dialect::Java,
            "php" => Dialect::Php,
            "python" | "py" => Dialect::Python,
            "ruby" | "rb" => Dialect::Ruby,
            "go" | "golang" => Dialect::Go,
            "perl" | "pl" => Dialect::Perl,
            "rust" | "rs" => Dialect::Rust,
            "portable-core" | "portable" | "core" => Dialect::PortableCore,
            _ => return Err(UnknownDialect(s.to_string())),
        };
        Ok(d)
    }
}

/// Half-open range of character offsets in the pattern text.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }
}

/// A parsed pattern.
#[derive(Debug, Clone)]
pub struct Ast {
    pub dialect: Dialect,
    pub root: Node,
    /// Name (if any) of each capture group, indexed from group 1.
    pub capture_names: Vec<Option<String>>,
}

impl Ast {
    pub fn capture_count(&self) -> usize {
        self.capture_names.len()
    }

    /// Wrap a root node, recomputing the capture table.
    pub fn from_root(dialect: Dialect, root: Node) -> Ast {
        let mut names = Vec::new();
        collect_captures(&root, &mut names);
        Ast {
            dialect,
            root,
            capture_names: names,
        }
    }

    pub fn has_backreferences(&self) -> bool {
        self.root.any(&|n| matches!(n.kind, NodeKind::Backref(_)))
    }
}

fn collect_captures(node: &Node, out: &mut Vec<Option<String>>) {
    if let NodeKind::Group(g) = &node.kind {
        if let GroupKind::Capture { name, .. } = &g.kind {
            out.push(name.clone());
        }
    }
    for child in node.children() {
        collect_captures(child, out);
    }
}

/// Structural equality: source spans are ignored.
impl PartialEq for Ast {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.capture_names == other.capture_names
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Node {
        Node { kind, span }
    }

    pub fn children(&self) -> Vec<&Node> {
        match &self.kind {
            NodeKind::Concat(items) | NodeKind::Alternation(items) => items.iter().collect(),
            NodeKind::Repeat(r) => vec![&*r.child],
            NodeKind::Group(g) => vec![&*g.child],
            NodeKind::Lookaround(l) => vec![&*l.child],
            _ => Vec::new(),
        }
    }

    /// True if `pred` holds for this node or any descendant.
    pub fn any(&self, pred: &dyn Fn(&Node) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    /// Whether the node can match the empty string, ignoring assertions.
    pub fn is_nullable(&self) -> bool {
        match &self.kind {
            NodeKind::Empty
            | NodeKind::Anchor(_)
            | NodeKind::MatchReset
            | NodeKind::Lookaround(_)
            | NodeKind::Backref(_) => true,
            NodeKind::Literal(_)
            | NodeKind::Class(_)
            | NodeKind::Dot
            | NodeKind::EscapeClass(_)
            | NodeKind::UnicodeProperty(_) => false,
            NodeKind::Quote(text) => text.is_empty(),
            NodeKind::Concat(items) => items.iter().all(Node::is_nullable),
            NodeKind::Alternation(items) => items.iter().any(Node::is_nullable),
            NodeKind::Repeat(r) => r.min == 0 || r.child.is_nullable(),
            NodeKind::Group(g) => g.child.is_nullable(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Empty,
    Literal(Literal),
    Class(CharClass),
    Dot,
    Concat(Vec<Node>),
    Alternation(Vec<Node>),
    Repeat(Repeat),
    Group(Group),
    Backref(Backref),
    Anchor(AnchorKind),
    EscapeClass(EscapeClass),
    /// `\Q...\E`
    Quote(String),
    UnicodeProperty(UnicodeProperty),
    /// `\K`
    MatchReset,
    Lookaround(Lookaround),
}

#[derive(Debug, Clone)]
pub struct Literal {
    pub ch: char,
    pub syntax: LiteralSyntax,
}

impl Literal {
    pub fn plain(ch: char) -> Literal {
        Literal {
            ch,
            syntax: LiteralSyntax::Plain,
        }
    }
}

/// Two literals are the same if they denote the same character and
/// carry the same catalog notation (if any). Other spellings such as
/// `\x41` versus `A` are presentation only.
impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.ch == other.ch && self.syntax.fallback() == other.syntax.fallback()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralSyntax {
    Plain,
    /// `\n`, `\t`, ... (the letter is stored).
    ControlEscape(char),
    /// `\xHH`
    Hex,
    /// `\x{H...}`
    HexBrace,
    /// `\uHHHH`
    Unicode,
    /// `\0`, `\012`, or a numeric escape read as octal.
    Octal,
    /// `\cX` (the letter is stored).
    Control(char),
    /// `\e`
    Esc,
    /// An escaped character that stands for itself, e.g. `\y` in JavaScript.
    Identity,
    /// An escape that is a feature elsewhere but degrades to the bare
    /// letter in this dialect, e.g. `\A` in JavaScript.
    Fallback(FeatureId),
}

impl LiteralSyntax {
    pub fn fallback(self) -> Option<FeatureId> {
        match self {
            LiteralSyntax::Fallback(f) => Some(f),
            _ => None,
        }
    }
}

/// A bracketed character class. Items are kept in source order; use
/// [`crate::automata::class_ranges`] for the sorted disjoint range form.
#[derive(Debug, Clone, PartialEq)]
pub struct CharClass {
    pub items: Vec<ClassItem>,
    pub negated: bool,
    /// The class opened with an unescaped `]` taken literally (`[]]`).
    pub leading_bracket: bool,
    /// The class text looked like a POSIX class (`[[:digit:]]`) but this
    /// dialect reads it as a plain set of characters.
    pub posix_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassItem {
    Char(char),
    Range(char, char),
    Escape(EscapeClass),
    Posix { name: String, negated: bool },
    Property(UnicodeProperty),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EscapeClass {
    Digit,
    NotDigit,
    Word,
    NotWord,
    Space,
    NotSpace,
    /// `\h` in Java, PHP and Perl.
    HorizSpace,
    NotHorizSpace,
    /// `\h` in Ruby.
    HexDigit,
    NotHexDigit,
}

impl EscapeClass {
    pub fn letter(self) -> char {
        match self {
            EscapeClass::Digit => 'd',
            EscapeClass::NotDigit => 'D',
            EscapeClass::Word => 'w',
            EscapeClass::NotWord => 'W',
            EscapeClass::Space => 's',
            EscapeClass::NotSpace => 'S',
            EscapeClass::HorizSpace | EscapeClass::HexDigit => 'h',
            EscapeClass::NotHorizSpace | EscapeClass::NotHexDigit => 'H',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnicodeProperty {
    pub name: String,
    pub negated: bool,
    /// Written `\p{Name}` rather than `\pN`.
    pub braced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepeatMode {
    Greedy,
    Lazy,
    Possessive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repeat {
    pub child: Box<Node>,
    pub min: u32,
    /// `None` is unbounded.
    pub max: Option<u32>,
    pub mode: RepeatMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub kind: GroupKind,
    pub child: Box<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    Capture {
        index: u32,
        name: Option<String>,
        syntax: NameSyntax,
    },
    /// `(?:...)`
    NonCapture,
    /// Bare parentheses that do not capture (Ruby, when named groups exist).
    BareNonCapture,
    /// `(?>...)`
    Atomic,
    /// `(?flags)` or `(?flags:...)`; accepted but not interpreted.
    InlineFlags { flags: String, scoped: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameSyntax {
    Unnamed,
    /// `(?<name>...)`
    Angle,
    /// `(?'name'...)`
    Quote,
    /// `(?P<name>...)`
    PythonP,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackrefTarget {
    Index(u32),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackrefSyntax {
    /// `\1`
    Plain,
    /// `\g1`
    G,
    /// `\g{1}`
    GBrace,
    /// `\g<1>`
    GAngle,
    /// `\k<name>`
    K,
    /// `(?P=name)`
    PythonP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backref {
    pub target: BackrefTarget,
    pub syntax: BackrefSyntax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorKind {
    /// `^`
    Caret,
    /// `$`
    Dollar,
    /// `\A`
    StartText,
    /// `\Z`
    EndTextOptNewline,
    /// `\z`
    EndText,
    /// `\b`
    WordBoundary,
    /// `\B`
    NotWordBoundary,
    /// `\G`
    SearchStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lookaround {
    pub ahead: bool,
    pub negated: bool,
    pub child: Box<Node>,
}

/// A zero-width condition evaluated by the engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assertion {
    StartText,
    EndText,
    EndTextOptNewline,
    LineStart,
    LineEnd,
    WordBoundary,
    NotWordBoundary,
}

impl AnchorKind {
    pub fn assertion(self, dialect: Dialect) -> Assertion {
        match self {
            AnchorKind::Caret => dialect.caret(),
            AnchorKind::Dollar => dialect.dollar(),
            AnchorKind::StartText | AnchorKind::SearchStart => Assertion::StartText,
            AnchorKind::EndTextOptNewline => Assertion::EndTextOptNewline,
            AnchorKind::EndText => Assertion::EndText,
            AnchorKind::WordBoundary => Assertion::WordBoundary,
            AnchorKind::NotWordBoundary => Assertion::NotWordBoundary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dialect_names_round_trip() {
        for d in Dialect::ALL {
            assert_eq!(d.name().parse::<Dialect>().unwrap(), d);
        }
        assert!("cobol".parse::<Dialect>().is_err());
    }

    #[test]
    fn literal_equality_ignores_spelling() {
        let a = Literal {
            ch: '\u{1}',
            syntax: LiteralSyntax::Octal,
        };
        let b = Literal {
            ch: '\u{1}',
            syntax: LiteralSyntax::Hex,
        };
        assert_eq!(a, b);
        let c = Literal {
            ch: 'A',
            syntax: LiteralSyntax::Fallback(FeatureId::AnchorA),
        };
        assert_ne!(c, Literal::plain('A'));
    }
}
