use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{
    AnchorKind, Ast, BackrefSyntax, BackrefTarget, EscapeClass, GroupKind, LiteralSyntax,
    NameSyntax, Node, NodeKind, RepeatMode, Span,
};

/// A construct whose presence matters for portability.
///
/// The first block maps one-to-one onto dialect catalog constructs; the
/// rest are tracked for analysis routing only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureId {
    QuoteBlock,
    AnchorG,
    AnchorA,
    AnchorUpperZ,
    AnchorLowerZ,
    MatchReset,
    EscapeE,
    ControlC,
    HexBrace,
    BackrefG,
    BackrefGAngle,
    UnicodePropBraced,
    UnicodePropShort,
    PosixClass,
    Caret,
    PossessiveQuantifier,
    BackrefNumeric,
    EscapeH,
    MixedNamedUnnamed,
    ClassLeadingBracket,
    RepeatNullableCapture,
    RepeatCaptureReset,

    Lookaround,
    AtomicGroup,
    InlineFlags,
    NamedGroup,
    NamedBackref,
    LazyQuantifier,
}

impl FeatureId {
    pub const ALL: [FeatureId; 28] = [
        FeatureId::QuoteBlock,
        FeatureId::AnchorG,
        FeatureId::AnchorA,
        FeatureId::AnchorUpperZ,
        FeatureId::AnchorLowerZ,
        FeatureId::MatchReset,
        FeatureId::EscapeE,
        FeatureId::ControlC,
        FeatureId::HexBrace,
        FeatureId::BackrefG,
        FeatureId::BackrefGAngle,
        FeatureId::UnicodePropBraced,
        FeatureId::UnicodePropShort,
        FeatureId::PosixClass,
        FeatureId::Caret,
        FeatureId::PossessiveQuantifier,
        FeatureId::BackrefNumeric,
        FeatureId::EscapeH,
        FeatureId::MixedNamedUnnamed,
        FeatureId::ClassLeadingBracket,
        FeatureId::RepeatNullableCapture,
        FeatureId::RepeatCaptureReset,
        FeatureId::Lookaround,
        FeatureId::AtomicGroup,
        FeatureId::InlineFlags,
        FeatureId::NamedGroup,
        FeatureId::NamedBackref,
        FeatureId::LazyQuantifier,
    ];

    /// Whether the feature is one of the dialect catalog's constructs.
    pub fn is_catalog(self) -> bool {
        (self as usize) <= FeatureId::RepeatCaptureReset as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::QuoteBlock => r"quote-\Q\E",
            FeatureId::AnchorG => r"anchor-\G",
            FeatureId::AnchorA => r"anchor-\A",
            FeatureId::AnchorUpperZ => r"anchor-\Z",
            FeatureId::AnchorLowerZ => r"anchor-\z",
            FeatureId::MatchReset => r"match-reset-\K",
            FeatureId::EscapeE => r"escape-\e",
            FeatureId::ControlC => r"control-\c",
            FeatureId::HexBrace => r"hex-brace-\x{}",
            FeatureId::BackrefG => r"backref-\g",
            FeatureId::BackrefGAngle => r"backref-\g<>",
            FeatureId::UnicodePropBraced => r"unicode-prop-\p{}",
            FeatureId::UnicodePropShort => r"unicode-prop-\p",
            FeatureId::PosixClass => "posix-class",
            FeatureId::Caret => "anchor-^",
            FeatureId::PossessiveQuantifier => "possessive-quantifier",
            FeatureId::BackrefNumeric => r"backref-\1",
            FeatureId::EscapeH => r"escape-\h",
            FeatureId::MixedNamedUnnamed => "mixed-named-unnamed",
            FeatureId::ClassLeadingBracket => "class-leading-bracket",
            FeatureId::RepeatNullableCapture => "repeat-nullable-capture",
            FeatureId::RepeatCaptureReset => "repeat-capture-reset",
            FeatureId::Lookaround => "lookaround",
            FeatureId::AtomicGroup => "atomic-group",
            FeatureId::InlineFlags => "inline-flags",
            FeatureId::NamedGroup => "named-group",
            FeatureId::NamedBackref => "named-backref",
            FeatureId::LazyQuantifier => "lazy-quantifier",
        }
    }

    /// The bare text an escape degrades to where it is not a feature.
    pub fn fallback_text(self) -> Option<&'static str> {
        Some(match self {
            FeatureId::QuoteBlock => "Q",
            FeatureId::AnchorG => "G",
            FeatureId::AnchorA => "A",
            FeatureId::AnchorUpperZ => "Z",
            FeatureId::AnchorLowerZ => "z",
            FeatureId::MatchReset => "K",
            FeatureId::EscapeE => "e",
            FeatureId::ControlC => "c",
            FeatureId::HexBrace => "x",
            FeatureId::BackrefG | FeatureId::BackrefGAngle => "g",
            FeatureId::UnicodePropBraced | FeatureId::UnicodePropShort => "p",
            FeatureId::EscapeH => "h",
            _ => return None,
        })
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature `{0}`")]
pub struct UnknownFeature(pub String);

impl FromStr for FeatureId {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| UnknownFeature(s.to_string()))
    }
}

pub type FeatureSet = BTreeSet<FeatureId>;

/// The set of features present in `ast`.
pub fn feature_inventory(ast: &Ast) -> FeatureSet {
    feature_occurrences(ast)
        .into_iter()
        .map(|(f, _)| f)
        .collect()
}

/// Every feature occurrence with its location, in source order.
pub fn feature_occurrences(ast: &Ast) -> Vec<(FeatureId, Span)> {
    let mut out = Vec::new();
    walk(&ast.root, ast, &mut out);

    if has_named(&ast.root) && has_unnamed(&ast.root) {
        out.push((FeatureId::MixedNamedUnnamed, ast.root.span));
    }
    out.sort_by_key(|(f, s)| (s.start, s.end, *f));
    out.dedup();
    out
}

fn has_named(node: &Node) -> bool {
    node.any(&|n| {
        matches!(&n.kind, NodeKind::Group(g) if matches!(g.kind, GroupKind::Capture { name: Some(_), .. }))
    })
}

fn has_unnamed(node: &Node) -> bool {
    node.any(&|n| {
        matches!(&n.kind, NodeKind::Group(g) if matches!(g.kind, GroupKind::Capture { name: None, .. } | GroupKind::BareNonCapture))
    })
}

fn walk(node: &Node, ast: &Ast, out: &mut Vec<(FeatureId, Span)>) {
    let span = node.span;
    match &node.kind {
        NodeKind::Literal(lit) => match lit.syntax {
            LiteralSyntax::Fallback(f) => out.push((f, span)),
            LiteralSyntax::HexBrace => out.push((FeatureId::HexBrace, span)),
            LiteralSyntax::Esc => out.push((FeatureId::EscapeE, span)),
            LiteralSyntax::Control(_) => out.push((FeatureId::ControlC, span)),
            LiteralSyntax::Octal if is_numeric_backref_notation(ast.dialect, span, lit.ch) => {
                out.push((FeatureId::BackrefNumeric, span));
            }
            _ => {}
        },
        NodeKind::Class(class) => {
            if class.posix_fallback
                || class
                    .items
                    .iter()
                    .any(|i| matches!(i, super::ClassItem::Posix { .. }))
            {
                out.push((FeatureId::PosixClass, span));
            }
            if class.leading_bracket || (class.items.is_empty() && !class.negated) {
                out.push((FeatureId::ClassLeadingBracket, span));
            }
            for item in &class.items {
                match item {
                    super::ClassItem::Escape(e) => escape_feature(*e, span, out),
                    super::ClassItem::Property(p) => out.push((prop_feature(p.braced), span)),
                    _ => {}
                }
            }
        }
        NodeKind::Anchor(kind) => {
            let f = match kind {
                AnchorKind::Caret => Some(FeatureId::Caret),
                AnchorKind::StartText => Some(FeatureId::AnchorA),
                AnchorKind::EndTextOptNewline => Some(FeatureId::AnchorUpperZ),
                AnchorKind::EndText => Some(FeatureId::AnchorLowerZ),
                AnchorKind::SearchStart => Some(FeatureId::AnchorG),
                _ => None,
            };
            if let Some(f) = f {
                out.push((f, span));
            }
        }
        NodeKind::EscapeClass(e) => escape_feature(*e, span, out),
        NodeKind::Quote(_) => out.push((FeatureId::QuoteBlock, span)),
        NodeKind::UnicodeProperty(p) => out.push((prop_feature(p.braced), span)),
        NodeKind::MatchReset => out.push((FeatureId::MatchReset, span)),
        NodeKind::Backref(b) => {
            let f = match (b.syntax, &b.target) {
                (BackrefSyntax::Plain, _) => FeatureId::BackrefNumeric,
                (BackrefSyntax::G | BackrefSyntax::GBrace, _) => FeatureId::BackrefG,
                (BackrefSyntax::GAngle, _) => FeatureId::BackrefGAngle,
                (_, BackrefTarget::Name(_)) | (_, BackrefTarget::Index(_)) => {
                    FeatureId::NamedBackref
                }
            };
            out.push((f, span));
        }
        NodeKind::Lookaround(_) => out.push((FeatureId::Lookaround, span)),
        NodeKind::Group(g) => match &g.kind {
            GroupKind::Atomic => out.push((FeatureId::AtomicGroup, span)),
            GroupKind::InlineFlags { .. } => out.push((FeatureId::InlineFlags, span)),
            GroupKind::Capture { syntax, .. } if *syntax != NameSyntax::Unnamed => {
                out.push((FeatureId::NamedGroup, span))
            }
            _ => {}
        },
        NodeKind::Repeat(r) => {
            match r.mode {
                RepeatMode::Possessive => out.push((FeatureId::PossessiveQuantifier, span)),
                RepeatMode::Lazy => out.push((FeatureId::LazyQuantifier, span)),
                RepeatMode::Greedy => {}
            }
            // Stacked quantifiers (`a++` read as a repeated repeat).
            if matches!(r.child.kind, NodeKind::Repeat(_)) && r.max.is_none_or(|m| m > 1) {
                out.push((FeatureId::PossessiveQuantifier, span));
            }
            if r.max.is_none_or(|m| m > 1) {
                if captures_with(&r.child, &|g| g.child.is_nullable()) {
                    out.push((FeatureId::RepeatNullableCapture, span));
                }
                if optional_capture(&r.child, false) {
                    out.push((FeatureId::RepeatCaptureReset, span));
                }
            }
        }
        _ => {}
    }
    for child in node.children() {
        walk(child, ast, out);
    }
}

/// An octal escape written without a leading zero (`\1`, `\12`) is the
/// backreference notation read as octal.
fn is_numeric_backref_notation(dialect: super::Dialect, span: Span, ch: char) -> bool {
    let digits = (span.end - span.start).saturating_sub(1) as u32;
    dialect == super::Dialect::Rust && digits >= 1 && (ch as u32) >= 8u32.pow(digits - 1)
}

fn escape_feature(e: EscapeClass, span: Span, out: &mut Vec<(FeatureId, Span)>) {
    if matches!(
        e,
        EscapeClass::HorizSpace
            | EscapeClass::NotHorizSpace
            | EscapeClass::HexDigit
            | EscapeClass::NotHexDigit
    ) {
        out.push((FeatureId::EscapeH, span));
    }
}

fn prop_feature(braced: bool) -> FeatureId {
    if braced {
        FeatureId::UnicodePropBraced
    } else {
        FeatureId::UnicodePropShort
    }
}

fn captures_with(node: &Node, pred: &dyn Fn(&super::Group) -> bool) -> bool {
    node.any(&|n| match &n.kind {
        NodeKind::Group(g) => matches!(g.kind, GroupKind::Capture { .. }) && pred(g),
        _ => false,
    })
}

/// A capture group that some iteration of the enclosing loop may skip.
fn optional_capture(node: &Node, optional: bool) -> bool {
    match &node.kind {
        NodeKind::Group(g) => {
            (optional && matches!(g.kind, GroupKind::Capture { .. }))
                || optional_capture(&g.child, optional)
        }
        NodeKind::Alternation(items) => items.iter().any(|i| optional_capture(i, true)),
        NodeKind::Repeat(r) => optional_capture(&r.child, optional || r.min == 0),
        NodeKind::Concat(items) => items.iter().any(|i| optional_capture(i, optional)),
        NodeKind::Lookaround(l) => optional_capture(&l.child, true),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, Dialect};

    fn inv(p: &str, d: Dialect) -> Vec<FeatureId> {
        feature_inventory(&parse(p, d).unwrap())
            .into_iter()
            .collect()
    }

    #[test]
    fn anchors_in_java_and_javascript() {
        let want = vec![FeatureId::AnchorA, FeatureId::AnchorUpperZ];
        assert_eq!(inv(r"\Ab\Z", Dialect::Java), want);
        assert_eq!(inv(r"\Ab\Z", Dialect::JavaScript), want);
    }

    #[test]
    fn plain_literals_have_no_features() {
        assert!(inv("abc", Dialect::PortableCore).is_empty());
        assert!(inv("a|b", Dialect::Java).is_empty());
    }

    #[test]
    fn possessive_and_stacked() {
        assert_eq!(
            inv("a++", Dialect::Java),
            vec![FeatureId::PossessiveQuantifier]
        );
        assert_eq!(
            inv("a++", Dialect::Rust),
            vec![FeatureId::PossessiveQuantifier]
        );
    }

    #[test]
    fn rust_octal_backref_notation() {
        assert!(inv(r"(a)\1", Dialect::Rust).contains(&FeatureId::BackrefNumeric));
        assert!(inv(r"(a)\1", Dialect::Perl).contains(&FeatureId::BackrefNumeric));
        assert!(!inv(r"\01", Dialect::Rust).contains(&FeatureId::BackrefNumeric));
        assert!(inv(r"\12", Dialect::Rust).contains(&FeatureId::BackrefNumeric));
    }

    #[test]
    fn nuanced_structures() {
        assert!(inv("((a*)+)", Dialect::Java).contains(&FeatureId::RepeatNullableCapture));
        assert!(inv("((a)|(b))+", Dialect::Java).contains(&FeatureId::RepeatCaptureReset));
        assert!(!inv("(ab)+", Dialect::Java).contains(&FeatureId::RepeatCaptureReset));
        assert!(inv("(a)(?<b>b)", Dialect::Java).contains(&FeatureId::MixedNamedUnnamed));
        assert!(inv("(a)(?<b>b)", Dialect::Ruby).contains(&FeatureId::MixedNamedUnnamed));
        assert!(inv("[]]", Dialect::Java).contains(&FeatureId::ClassLeadingBracket));
        assert!(inv("[]]", Dialect::JavaScript).contains(&FeatureId::ClassLeadingBracket));
    }

    #[test]
    fn names_parse_back() {
        for f in FeatureId::ALL {
            assert_eq!(f.name().parse::<FeatureId>().unwrap(), f);
        }
    }
}
