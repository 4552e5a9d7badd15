use super::{
    AnchorKind, Ast, BackrefSyntax, BackrefTarget, CharClass, ClassItem, Dialect, FeatureId,
    GroupKind, Literal, LiteralSyntax, NameSyntax, Node, NodeKind, Repeat, RepeatMode,
    UnicodeProperty,
};

/// Render `ast` as pattern text in its own dialect.
///
/// The output is canonical rather than a copy of the source: `{n,n}` becomes
/// `{n}`, metacharacters are escaped and non-printable characters use `\xHH`.
/// Parsing the output under the same dialect yields an equal tree.
pub fn emit(ast: &Ast) -> String {
    let mut out = String::new();
    emit_node(&ast.root, ast.dialect, &mut out);
    out
}

fn emit_node(node: &Node, dialect: Dialect, out: &mut String) {
    match &node.kind {
        NodeKind::Empty => {}
        NodeKind::Literal(l) => emit_literal(l, out),
        NodeKind::Class(c) => emit_class(c, out),
        NodeKind::Dot => out.push('.'),
        NodeKind::Concat(items) => emit_concat(items, dialect, out),
        NodeKind::Alternation(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push('|');
                }
                emit_node(item, dialect, out);
            }
        }
        NodeKind::Repeat(r) => emit_repeat(r, dialect, out),
        NodeKind::Group(g) => {
            match &g.kind {
                GroupKind::Capture { name, syntax, .. } => match (syntax, name) {
                    (NameSyntax::Angle, Some(n)) => out.push_str(&format!("(?<{n}>")),
                    (NameSyntax::Quote, Some(n)) => out.push_str(&format!("(?'{n}'")),
                    (NameSyntax::PythonP, Some(n)) => out.push_str(&format!("(?P<{n}>")),
                    _ => out.push('('),
                },
                GroupKind::NonCapture => out.push_str("(?:"),
                GroupKind::BareNonCapture => out.push('('),
                GroupKind::Atomic => out.push_str("(?>"),
                GroupKind::InlineFlags { flags, scoped } => {
                    if !*scoped {
                        out.push_str(&format!("(?{flags})"));
                        return;
                    }
                    out.push_str(&format!("(?{flags}:"));
                }
            }
            emit_node(&g.child, dialect, out);
            out.push(')');
        }
        NodeKind::Backref(b) => {
            let target = match &b.target {
                BackrefTarget::Index(i) => i.to_string(),
                BackrefTarget::Name(n) => n.clone(),
            };
            match b.syntax {
                BackrefSyntax::Plain => out.push_str(&format!("\\{target}")),
                BackrefSyntax::G => out.push_str(&format!("\\g{target}")),
                BackrefSyntax::GBrace => out.push_str(&format!("\\g{{{target}}}")),
                BackrefSyntax::GAngle => out.push_str(&format!("\\g<{target}>")),
                BackrefSyntax::K => out.push_str(&format!("\\k<{target}>")),
                BackrefSyntax::PythonP => out.push_str(&format!("(?P={target})")),
            }
        }
        NodeKind::Anchor(a) => out.push_str(match a {
            AnchorKind::Caret => "^",
            AnchorKind::Dollar => "$",
            AnchorKind::StartText => r"\A",
            AnchorKind::EndTextOptNewline => r"\Z",
            AnchorKind::EndText => r"\z",
            AnchorKind::WordBoundary => r"\b",
            AnchorKind::NotWordBoundary => r"\B",
            AnchorKind::SearchStart => r"\G",
        }),
        NodeKind::EscapeClass(e) => {
            out.push('\\');
            out.push(e.letter());
        }
        NodeKind::Quote(text) => {
            out.push_str(r"\Q");
            out.push_str(text);
            out.push_str(r"\E");
        }
        NodeKind::UnicodeProperty(p) => emit_property(p, out),
        NodeKind::MatchReset => out.push_str(r"\K"),
        NodeKind::Lookaround(l) => {
            out.push_str(match (l.ahead, l.negated) {
                (true, false) => "(?=",
                (true, true) => "(?!",
                (false, false) => "(?<=",
                (false, true) => "(?<!",
            });
            emit_node(&l.child, dialect, out);
            out.push(')');
        }
    }
}

fn emit_concat(items: &[Node], dialect: Dialect, out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| &items[p].kind);
        if let NodeKind::Literal(l) = &item.kind {
            // A digit right after a numeric backreference would extend it.
            let after_backref = matches!(prev, Some(NodeKind::Backref(b))
                if matches!(b.syntax, BackrefSyntax::Plain | BackrefSyntax::G));
            if after_backref && l.ch.is_ascii_digit() && l.syntax.fallback().is_none() {
                out.push_str(&format!("\\x{:02X}", l.ch as u32));
                continue;
            }
            // JavaScript `\x{zz}` and `\p{L}`: the brace must stay bare after the fallback.
            let after_x = matches!(prev, Some(NodeKind::Literal(p))
                if matches!(p.syntax.fallback(),
                    Some(FeatureId::HexBrace | FeatureId::UnicodePropBraced)));
            if after_x && l.ch == '{' {
                out.push('{');
                continue;
            }
        }
        if matches!(item.kind, NodeKind::Alternation(_)) {
            out.push_str("(?:");
            emit_node(item, dialect, out);
            out.push(')');
        } else {
            emit_node(item, dialect, out);
        }
    }
}

fn emit_repeat(r: &Repeat, dialect: Dialect, out: &mut String) {
    let wrap = match &r.child.kind {
        NodeKind::Concat(_) | NodeKind::Alternation(_) | NodeKind::Empty => true,
        NodeKind::Repeat(_) => dialect != Dialect::Rust,
        _ => false,
    };
    if wrap {
        out.push_str("(?:");
        emit_node(&r.child, dialect, out);
        out.push(')');
    } else {
        emit_node(&r.child, dialect, out);
    }
    match (r.min, r.max) {
        (0, None) => out.push('*'),
        (1, None) => out.push('+'),
        (0, Some(1)) => out.push('?'),
        (n, None) => out.push_str(&format!("{{{n},}}")),
        (n, Some(m)) if n == m => out.push_str(&format!("{{{n}}}")),
        (n, Some(m)) => out.push_str(&format!("{{{n},{m}}}")),
    }
    match r.mode {
        RepeatMode::Greedy => {}
        RepeatMode::Lazy => out.push('?'),
        RepeatMode::Possessive => out.push('+'),
    }
}

fn push_hex(ch: char, out: &mut String) {
    out.push_str(&format!("\\x{:02X}", ch as u32));
}

fn is_unprintable(ch: char) -> bool {
    ch.is_control() && (ch as u32) <= 0xff
}

fn emit_literal(l: &Literal, out: &mut String) {
    let ch = l.ch;
    match l.syntax {
        LiteralSyntax::Fallback(_) => {
            out.push('\\');
            out.push(ch);
        }
        LiteralSyntax::ControlEscape(letter) => {
            out.push('\\');
            out.push(letter);
        }
        LiteralSyntax::HexBrace => out.push_str(&format!("\\x{{{:X}}}", ch as u32)),
        LiteralSyntax::Unicode => out.push_str(&format!("\\u{:04X}", ch as u32)),
        LiteralSyntax::Control(letter) => {
            out.push_str(r"\c");
            out.push(letter);
        }
        LiteralSyntax::Esc => out.push_str(r"\e"),
        LiteralSyntax::Hex | LiteralSyntax::Octal if (ch as u32) <= 0xff => push_hex(ch, out),
        _ => {
            if is_unprintable(ch) {
                push_hex(ch, out);
            } else {
                if r"\.^$|?*+()[]{}".contains(ch) {
                    out.push('\\');
                }
                out.push(ch);
            }
        }
    }
}

fn emit_class_char(ch: char, posix_fallback: bool, out: &mut String) {
    if is_unprintable(ch) {
        push_hex(ch, out);
        return;
    }
    let special = match ch {
        '\\' | ']' | '^' | '-' => true,
        '[' => !posix_fallback,
        _ => false,
    };
    if special {
        out.push('\\');
    }
    out.push(ch);
}

fn emit_class(c: &CharClass, out: &mut String) {
    out.push('[');
    if c.negated {
        out.push('^');
    }
    let mut items = c.items.iter();
    if c.leading_bracket {
        out.push(']');
        items.next();
    }
    for item in items {
        match item {
            ClassItem::Char(ch) => emit_class_char(*ch, c.posix_fallback, out),
            ClassItem::Range(lo, hi) => {
                emit_class_char(*lo, c.posix_fallback, out);
                out.push('-');
                emit_class_char(*hi, c.posix_fallback, out);
            }
            ClassItem::Escape(e) => {
                out.push('\\');
                out.push(e.letter());
            }
            ClassItem::Posix { name, negated } => {
                out.push_str(if *negated { "[:^" } else { "[:" });
                out.push_str(name);
                out.push_str(":]");
            }
            ClassItem::Property(p) => emit_property(p, out),
        }
    }
    out.push(']');
}

fn emit_property(p: &UnicodeProperty, out: &mut String) {
    out.push_str(if p.negated { r"\P" } else { r"\p" });
    if p.braced {
        out.push('{');
        out.push_str(&p.name);
        out.push('}');
    } else {
        out.push_str(&p.name);
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use proptest::prelude::*;

    fn canon(p: &str, d: Dialect) -> String {
        emit(&parse(p, d).unwrap())
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canon("a{2,2}", Dialect::Java), "a{2}");
        assert_eq!(canon(r"\x41", Dialect::Java), r"\x41");
        assert_eq!(canon("\u{1}", Dialect::Java), r"\x01");
        assert_eq!(canon(r"[a\-z]", Dialect::Go), r"[a\-z]");
        assert_eq!(canon(r"\Q.\E", Dialect::Perl), r"\Q.\E");
        assert_eq!(canon(r"(a)\1", Dialect::Rust), r"(a)\x01");
    }

    #[test]
    fn backref_followed_by_digit() {
        let ast = parse(r"(a)\1\x30", Dialect::Java).unwrap();
        let text = emit(&ast);
        assert_eq!(parse(&text, Dialect::Java).unwrap(), ast);
    }

    #[test]
    fn fallbacks_round_trip() {
        for p in [
            r"\x{41}",
            r"\x{zz}",
            r"[[:digit:]]",
            "[]]",
            r"\Qa\E",
            r"\g<1>",
            r"\pN",
        ] {
            let ast = parse(p, Dialect::JavaScript).unwrap();
            assert_eq!(parse(&emit(&ast), Dialect::JavaScript).unwrap(), ast, "{p}");
        }
    }

    const TOKENS: &[&str] = &[
        "a",
        "b",
        "0",
        "1",
        ".",
        "|",
        "(",
        ")",
        "(?:",
        "*",
        "+",
        "?",
        "{2}",
        "{1,3}",
        "{2,}",
        "[ab]",
        "[^a-c]",
        r"[\d-]",
        "[]a]",
        "[[:alpha:]]",
        "^",
        "$",
        r"\d",
        r"\w",
        r"\s",
        r"\b",
        r"\A",
        r"\Z",
        r"\z",
        r"\G",
        r"\K",
        r"\Q.*\E",
        r"\E",
        r"\x41",
        r"\x{42}",
        r"\n",
        r"\e",
        r"\cA",
        r"\1",
        r"\g1",
        r"\g<1>",
        r"\k<n>",
        "(?<n>",
        "(?P<n>",
        r"\p{L}",
        r"\pL",
        r"\h",
        "{",
        "}",
        "]",
        "-",
        r"\.",
        r"\\",
        "(?=",
        "(?>",
        "(?i)",
        "\u{7}",
        "é",
    ];

    proptest! {
        #[test]
        fn round_trip(idx in proptest::collection::vec(0..TOKENS.len(), 0..12)) {
            let pattern: String = idx.iter().map(|&i| TOKENS[i]).collect();
            for d in Dialect::ALL {
                if let Ok(ast) = parse(&pattern, d) {
                    let text = emit(&ast);
                    let again = parse(&text, d);
                    prop_assert!(again.is_ok(), "{d}: {pattern:?} -> {text:?}: {again:?}");
                    prop_assert_eq!(&again.unwrap(), &ast, "{}: {:?} -> {:?}", d, pattern, text);
                }
            }
        }
    }
}
