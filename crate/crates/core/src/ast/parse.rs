use super::{
    AnchorKind, Ast, Backref, BackrefSyntax, BackrefTarget, CharClass, ClassItem, Dialect,
    EscapeClass, FeatureId, Group, GroupKind, Literal, LiteralSyntax, Lookaround, NameSyntax, Node,
    NodeKind, Repeat, RepeatMode, Span, UnicodeProperty,
};

use Dialect::*;

/// Largest repetition bound accepted in `{n,m}`.
pub const MAX_REPEAT: u32 = 100_000;

const UNICODE_PROPERTIES: &[&str] = &["N", "Nd", "L", "Lu", "Ll", "Z", "Zs"];
const POSIX_CLASSES: &[&str] = &[
    "alnum", "alpha", "blank", "cntrl", "digit", "graph", "lower", "print", "punct", "space",
    "upper", "word", "xdigit",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason} at position {position}")]
pub struct ParseError {
    /// Character offset into the pattern.
    pub position: usize,
    pub reason: String,
}

/// Parse `source` under `dialect`'s syntax and default flags.
pub fn parse(source: &str, dialect: Dialect) -> Result<Ast, ParseError> {
    let mut p = Parser {
        chars: source.chars().collect(),
        pos: 0,
        dialect,
        names: Vec::new(),
        ruby_named_only: dialect == Ruby && has_named_group_syntax(source),
    };
    let root = p.parse_alternation()?;
    if p.pos < p.chars.len() {
        return Err(p.error("unmatched `)`"));
    }
    let ast = Ast {
        dialect,
        root,
        capture_names: p.names,
    };
    validate_backrefs(&ast.root, &ast)?;
    if dialect == PortableCore {
        let blocked = super::feature_occurrences(&ast)
            .into_iter()
            .find(|(f, _)| *f != FeatureId::LazyQuantifier);
        if let Some((feature, span)) = blocked {
            return Err(ParseError {
                position: span.start,
                reason: format!("`{feature}` is not portable"),
            });
        }
    }
    Ok(ast)
}

fn has_named_group_syntax(source: &str) -> bool {
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '(' if chars.get(i + 1) == Some(&'?') => {
                let c = chars.get(i + 2).copied();
                let d = chars.get(i + 3).copied();
                if c == Some('\'') || (c == Some('<') && !matches!(d, Some('=') | Some('!'))) {
                    return true;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    false
}

fn validate_backrefs(node: &Node, ast: &Ast) -> Result<(), ParseError> {
    if let NodeKind::Backref(b) = &node.kind {
        let ok = match &b.target {
            BackrefTarget::Index(i) => *i >= 1 && (*i as usize) <= ast.capture_count(),
            BackrefTarget::Name(n) => ast.capture_names.iter().any(|c| c.as_deref() == Some(n)),
        };
        if !ok {
            return Err(ParseError {
                position: node.span.start,
                reason: "backreference to a nonexistent group".into(),
            });
        }
    }
    for c in node.children() {
        validate_backrefs(c, ast)?;
    }
    Ok(())
}

enum Escape {
    Lit(Literal),
    Node(NodeKind),
    Class(EscapeClass),
    Prop(UnicodeProperty),
    /// Consumed but produces nothing (a stray `\E`).
    Nothing,
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    dialect: Dialect,
    names: Vec<Option<String>>,
    ruby_named_only: bool,
}

impl Parser {
    fn error(&self, reason: &str) -> ParseError {
        self.error_at(self.pos, reason)
    }

    fn error_at(&self, position: usize, reason: &str) -> ParseError {
        ParseError {
            position,
            reason: reason.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn is(&self, dialects: &[Dialect]) -> bool {
        dialects.contains(&self.dialect)
    }

    fn unsupported(&self, start: usize, what: &str) -> ParseError {
        self.error_at(
            start,
            &format!("{what} is not supported in {}", self.dialect),
        )
    }

    fn parse_alternation(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let mut branches = vec![self.parse_concat()?];
        while self.eat('|') {
            branches.push(self.parse_concat()?);
        }
        if branches.len() == 1 {
            Ok(branches.pop().unwrap())
        } else {
            Ok(Node::new(
                NodeKind::Alternation(branches),
                Span::new(start, self.pos),
            ))
        }
    }

    fn parse_concat(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            if let Some(atom) = self.parse_atom()? {
                let node = self.parse_quantifiers(atom)?;
                items.push(node);
            }
        }
        Ok(match items.len() {
            0 => Node::new(NodeKind::Empty, Span::new(start, start)),
            1 => items.pop().unwrap(),
            _ => Node::new(NodeKind::Concat(items), Span::new(start, self.pos)),
        })
    }

    fn parse_atom(&mut self) -> Result<Option<Node>, ParseError> {
        let start = self.pos;
        let c = self.peek().unwrap();
        let kind = match c {
            '(' => return self.parse_group().map(Some),
            '[' => NodeKind::Class(self.parse_class()?),
            '.' => {
                self.pos += 1;
                NodeKind::Dot
            }
            '^' => {
                self.pos += 1;
                NodeKind::Anchor(AnchorKind::Caret)
            }
            '$' => {
                self.pos += 1;
                NodeKind::Anchor(AnchorKind::Dollar)
            }
            '\\' => match self.parse_escape(false)? {
                Escape::Lit(l) => NodeKind::Literal(l),
                Escape::Node(k) => k,
                Escape::Class(e) => NodeKind::EscapeClass(e),
                Escape::Prop(p) => NodeKind::UnicodeProperty(p),
                Escape::Nothing => return Ok(None),
            },
            '*' | '+' | '?' => return Err(self.error("nothing to repeat")),
            '{' => {
                if self.brace_quantifier_at(self.pos).is_some() {
                    return Err(self.error("nothing to repeat"));
                }
                if !self.lenient_braces() {
                    return Err(self.error("unescaped `{`"));
                }
                self.pos += 1;
                NodeKind::Literal(Literal::plain('{'))
            }
            _ => {
                self.pos += 1;
                NodeKind::Literal(Literal::plain(c))
            }
        };
        Ok(Some(Node::new(kind, Span::new(start, self.pos))))
    }

    fn lenient_braces(&self) -> bool {
        !self.is(&[Java, Rust, PortableCore])
    }

    /// If a valid `{n}`, `{n,}` or `{n,m}` starts at `at`, return
    /// (min, max, end offset).
    fn brace_quantifier_at(&self, at: usize) -> Option<(u64, Option<u64>, usize)> {
        if self.chars.get(at) != Some(&'{') {
            return None;
        }
        let mut i = at + 1;
        let read_num = |i: &mut usize| -> Option<u64> {
            let s = *i;
            while self.chars.get(*i).is_some_and(|c| c.is_ascii_digit()) {
                *i += 1;
            }
            if *i == s {
                return None;
            }
            let text: String = self.chars[s..*i].iter().collect();
            Some(text.parse::<u64>().unwrap_or(u64::MAX))
        };
        let min = read_num(&mut i)?;
        let max = if self.chars.get(i) == Some(&',') {
            i += 1;
            if self.chars.get(i) == Some(&'}') {
                None
            } else {
                Some(read_num(&mut i)?)
            }
        } else {
            Some(min)
        };
        if self.chars.get(i) != Some(&'}') {
            return None;
        }
        Some((min, max, i + 1))
    }

    fn parse_quantifiers(&mut self, atom: Node) -> Result<Node, ParseError> {
        let mut node = atom;
        let mut quantified = false;
        loop {
            let start = self.pos;
            let (min, max) = match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    (0, None)
                }
                Some('+') => {
                    self.pos += 1;
                    (1, None)
                }
                Some('?') => {
                    self.pos += 1;
                    (0, Some(1))
                }
                Some('{') => match self.brace_quantifier_at(self.pos) {
                    Some((min, max, end)) => {
                        if min > MAX_REPEAT as u64 || max.is_some_and(|m| m > MAX_REPEAT as u64) {
                            return Err(self.error("repetition count too large"));
                        }
                        if max.is_some_and(|m| m < min) {
                            return Err(self.error("quantifier min>max"));
                        }
                        self.pos = end;
                        (min as u32, max.map(|m| m as u32))
                    }
                    None => return Ok(node),
                },
                _ => return Ok(node),
            };
            if quantified && self.dialect != Rust {
                return Err(self.error_at(start, "nothing to repeat"));
            }
            if matches!(
                node.kind,
                NodeKind::Anchor(_)
                    | NodeKind::MatchReset
                    | NodeKind::Empty
                    | NodeKind::Lookaround(_)
            ) {
                return Err(self.error_at(start, "nothing to repeat"));
            }
            let mut mode = RepeatMode::Greedy;
            if self.eat('?') {
                mode = RepeatMode::Lazy;
            } else if self.peek() == Some('+') && self.is(&[Java, Php, Ruby, Perl]) {
                self.pos += 1;
                mode = RepeatMode::Possessive;
            }
            let span = Span::new(node.span.start, self.pos);
            node = Node::new(
                NodeKind::Repeat(Repeat {
                    child: Box::new(node),
                    min,
                    max,
                    mode,
                }),
                span,
            );
            quantified = true;
        }
    }

    fn parse_name(&mut self, close: char) -> Result<String, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == close {
                break;
            }
            if !(c.is_alphanumeric() || c == '_') {
                return Err(self.error("invalid group name"));
            }
            self.pos += 1;
        }
        if !self.eat(close) {
            return Err(self.error_at(start, "unterminated group name"));
        }
        let name: String = self.chars[start..self.pos - 1].iter().collect();
        if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.error_at(start, "invalid group name"));
        }
        Ok(name)
    }

    fn parse_group(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        self.pos += 1; // (
        let kind = if self.eat('?') {
            match self.peek() {
                Some(':') => {
                    self.pos += 1;
                    GroupKind::NonCapture
                }
                Some('=') | Some('!') => return self.parse_lookaround(start, true),
                Some('<') if matches!(self.peek_at(1), Some('=') | Some('!')) => {
                    self.pos += 1;
                    return self.parse_lookaround(start, false);
                }
                Some('>') => {
                    if !self.is(&[Java, Php, Ruby, Perl]) {
                        return Err(self.unsupported(start, "atomic group"));
                    }
                    self.pos += 1;
                    GroupKind::Atomic
                }
                Some('P') if self.peek_at(1) == Some('<') => {
                    if !self.is(&[Python, Php, Perl, Go, Rust]) {
                        return Err(self.unsupported(start, "`(?P<name>...)`"));
                    }
                    self.pos += 2;
                    let name = self.parse_name('>')?;
                    self.new_capture(Some(name), NameSyntax::PythonP)
                }
                Some('P') if self.peek_at(1) == Some('=') => {
                    if !self.is(&[Python, Php, Perl]) {
                        return Err(self.unsupported(start, "`(?P=name)`"));
                    }
                    self.pos += 2;
                    let name = self.parse_name(')')?;
                    return Ok(Node::new(
                        NodeKind::Backref(Backref {
                            target: BackrefTarget::Name(name),
                            syntax: BackrefSyntax::PythonP,
                        }),
                        Span::new(start, self.pos),
                    ));
                }
                Some('<') => {
                    if !self.is(&[JavaScript, Java, Php, Ruby, Perl]) {
                        return Err(self.unsupported(start, "`(?<name>...)`"));
                    }
                    self.pos += 1;
                    let name = self.parse_name('>')?;
                    self.new_capture(Some(name), NameSyntax::Angle)
                }
                Some('\'') => {
                    if !self.is(&[Php, Ruby, Perl]) {
                        return Err(self.unsupported(start, "`(?'name'...)`"));
                    }
                    self.pos += 1;
                    let name = self.parse_name('\'')?;
                    self.new_capture(Some(name), NameSyntax::Quote)
                }
                Some(c) if c.is_ascii_alphabetic() || c == '-' => {
                    if self.dialect == PortableCore {
                        return Err(self.unsupported(start, "inline flag group"));
                    }
                    let fstart = self.pos;
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphabetic() || c == '-')
                    {
                        self.pos += 1;
                    }
                    let flags: String = self.chars[fstart..self.pos].iter().collect();
                    if self.eat(')') {
                        return Ok(Node::new(
                            NodeKind::Group(Group {
                                kind: GroupKind::InlineFlags {
                                    flags,
                                    scoped: false,
                                },
                                child: Box::new(Node::new(
                                    NodeKind::Empty,
                                    Span::new(self.pos, self.pos),
                                )),
                            }),
                            Span::new(start, self.pos),
                        ));
                    }
                    if !self.eat(':') {
                        return Err(self.error("malformed inline flag group"));
                    }
                    GroupKind::InlineFlags {
                        flags,
                        scoped: true,
                    }
                }
                _ => return Err(self.error("unknown group syntax")),
            }
        } else if self.ruby_named_only {
            GroupKind::BareNonCapture
        } else {
            self.new_capture(None, NameSyntax::Unnamed)
        };
        let child = self.parse_alternation()?;
        if !self.eat(')') {
            return Err(self.error_at(start, "unclosed group"));
        }
        Ok(Node::new(
            NodeKind::Group(Group {
                kind,
                child: Box::new(child),
            }),
            Span::new(start, self.pos),
        ))
    }

    fn new_capture(&mut self, name: Option<String>, syntax: NameSyntax) -> GroupKind {
        self.names.push(name.clone());
        GroupKind::Capture {
            index: self.names.len() as u32,
            name,
            syntax,
        }
    }

    fn parse_lookaround(&mut self, start: usize, ahead: bool) -> Result<Node, ParseError> {
        if self.is(&[Go, Rust, PortableCore]) {
            return Err(self.unsupported(start, "lookaround"));
        }
        let negated = self.peek() == Some('!');
        self.pos += 1;
        let child = self.parse_alternation()?;
        if !self.eat(')') {
            return Err(self.error_at(start, "unclosed group"));
        }
        Ok(Node::new(
            NodeKind::Lookaround(Lookaround {
                ahead,
                negated,
                child: Box::new(child),
            }),
            Span::new(start, self.pos),
        ))
    }

    fn fallback(&self, ch: char, feature: FeatureId) -> Escape {
        Escape::Lit(Literal {
            ch,
            syntax: LiteralSyntax::Fallback(feature),
        })
    }

    fn identity(&self, ch: char) -> Escape {
        Escape::Lit(Literal {
            ch,
            syntax: LiteralSyntax::Identity,
        })
    }

    fn read_hex(&mut self, count: usize) -> Option<char> {
        let digits: String = self.chars.get(self.pos..self.pos + count)?.iter().collect();
        if digits.len() != count || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return None;
        }
        let value = u32::from_str_radix(&digits, 16).ok()?;
        let ch = char::from_u32(value)?;
        self.pos += count;
        Some(ch)
    }

    fn read_octal(&mut self, max_digits: usize) -> Option<char> {
        let start = self.pos;
        while self.pos - start < max_digits && self.peek().is_some_and(|c| ('0'..='7').contains(&c))
        {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if text.is_empty() {
            return None;
        }
        char::from_u32(u32::from_str_radix(&text, 8).ok()?)
    }

    /// Parse an escape; `self.pos` is at the backslash.
    fn parse_escape(&mut self, in_class: bool) -> Result<Escape, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let Some(c) = self.peek() else {
            return Err(self.error_at(start, "trailing backslash"));
        };
        self.pos += 1;
        let d = self.dialect;
        let lit = |ch: char, syntax: LiteralSyntax| Ok(Escape::Lit(Literal { ch, syntax }));
        match c {
            '1'..='9' if !in_class => {
                if self.is(&[Go, PortableCore]) {
                    return Err(self.unsupported(start, "backreference"));
                }
                if d == Rust {
                    self.pos -= 1;
                    if !('1'..='7').contains(&c) {
                        return Err(self.error_at(start, "invalid escape"));
                    }
                    let ch = self.read_octal(3).unwrap();
                    return lit(ch, LiteralSyntax::Octal);
                }
                let mut n = c.to_digit(10).unwrap();
                while let Some(next) = self.peek().and_then(|c| c.to_digit(10)) {
                    n = n.saturating_mul(10).saturating_add(next);
                    self.pos += 1;
                }
                Ok(Escape::Node(NodeKind::Backref(Backref {
                    target: BackrefTarget::Index(n),
                    syntax: BackrefSyntax::Plain,
                })))
            }
            '0'..='7' => {
                if d == PortableCore && c != '0' {
                    return Err(self.unsupported(start, "octal escape"));
                }
                self.pos -= 1;
                let ch = self.read_octal(3).unwrap();
                lit(ch, LiteralSyntax::Octal)
            }
            'x' => {
                if self.peek() == Some('{') {
                    if d == JavaScript {
                        return Ok(self.fallback('x', FeatureId::HexBrace));
                    }
                    if !self.is(&[Java, Php, Go, Perl, Rust]) {
                        return Err(self.unsupported(start, r"`\x{...}`"));
                    }
                    self.pos += 1;
                    let hs = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                        self.pos += 1;
                    }
                    let digits: String = self.chars[hs..self.pos].iter().collect();
                    if !self.eat('}') || digits.is_empty() || digits.len() > 6 {
                        return Err(self.error_at(start, "malformed hex escape"));
                    }
                    let ch = u32::from_str_radix(&digits, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| self.error_at(start, "invalid code point"))?;
                    return lit(ch, LiteralSyntax::HexBrace);
                }
                match self.read_hex(2) {
                    Some(ch) => lit(ch, LiteralSyntax::Hex),
                    None if d == JavaScript => Ok(self.identity('x')),
                    None => Err(self.error_at(start, "malformed hex escape")),
                }
            }
            'u' => {
                if !self.is(&[JavaScript, Java, Python, Ruby]) {
                    return Err(self.unsupported(start, r"`\u` escape"));
                }
                match self.read_hex(4) {
                    Some(ch) => lit(ch, LiteralSyntax::Unicode),
                    None if d == JavaScript => Ok(self.identity('u')),
                    None => Err(self.error_at(start, "malformed unicode escape")),
                }
            }
            'n' => lit('\n', LiteralSyntax::ControlEscape('n')),
            't' => lit('\t', LiteralSyntax::ControlEscape('t')),
            'r' => lit('\r', LiteralSyntax::ControlEscape('r')),
            'f' => lit('\u{c}', LiteralSyntax::ControlEscape('f')),
            'v' => lit('\u{b}', LiteralSyntax::ControlEscape('v')),
            'a' if d != JavaScript => lit('\u{7}', LiteralSyntax::ControlEscape('a')),
            'e' => match d {
                JavaScript | Python => Ok(self.fallback('e', FeatureId::EscapeE)),
                Go | Rust | PortableCore => Err(self.unsupported(start, r"`\e`")),
                _ => lit('\u{1b}', LiteralSyntax::Esc),
            },
            'c' => match d {
                Python => Ok(self.fallback('c', FeatureId::ControlC)),
                Go | Rust | PortableCore => Err(self.unsupported(start, r"`\c`")),
                _ => match self.peek() {
                    Some(x) if x.is_ascii_alphabetic() => {
                        self.pos += 1;
                        let ch = char::from(x.to_ascii_uppercase() as u8 & 0x1f);
                        lit(ch, LiteralSyntax::Control(x))
                    }
                    _ if d == JavaScript => Ok(self.identity('c')),
                    _ => Err(self.error_at(start, r"malformed `\c` escape")),
                },
            },
            'd' => Ok(Escape::Class(EscapeClass::Digit)),
            'D' => Ok(Escape::Class(EscapeClass::NotDigit)),
            'w' => Ok(Escape::Class(EscapeClass::Word)),
            'W' => Ok(Escape::Class(EscapeClass::NotWord)),
            's' => Ok(Escape::Class(EscapeClass::Space)),
            'S' => Ok(Escape::Class(EscapeClass::NotSpace)),
            'h' | 'H' => match d {
                Java | Php | Perl => Ok(Escape::Class(if c == 'h' {
                    EscapeClass::HorizSpace
                } else {
                    EscapeClass::NotHorizSpace
                })),
                Ruby => Ok(Escape::Class(if c == 'h' {
                    EscapeClass::HexDigit
                } else {
                    EscapeClass::NotHexDigit
                })),
                JavaScript | Python => Ok(self.fallback(c, FeatureId::EscapeH)),
                Go | Rust | PortableCore => Err(self.unsupported(start, r"`\h`")),
            },
            'b' if in_class => lit('\u{8}', LiteralSyntax::ControlEscape('b')),
            'b' => Ok(Escape::Node(NodeKind::Anchor(AnchorKind::WordBoundary))),
            'B' if !in_class => Ok(Escape::Node(NodeKind::Anchor(AnchorKind::NotWordBoundary))),
            'A' | 'Z' | 'G' | 'z' | 'K' if in_class => match d {
                JavaScript | Python | Ruby => Ok(self.identity(c)),
                _ => Err(self.error_at(start, "assertion inside a character class")),
            },
            'A' | 'Z' => {
                let (feature, anchor) = if c == 'A' {
                    (FeatureId::AnchorA, AnchorKind::StartText)
                } else {
                    (FeatureId::AnchorUpperZ, AnchorKind::EndTextOptNewline)
                };
                match d {
                    JavaScript => Ok(self.fallback(c, feature)),
                    Go | Rust | PortableCore => Err(self.unsupported(start, &format!("`\\{c}`"))),
                    _ => Ok(Escape::Node(NodeKind::Anchor(anchor))),
                }
            }
            'z' => match d {
                JavaScript | Python => Ok(self.fallback('z', FeatureId::AnchorLowerZ)),
                PortableCore => Err(self.unsupported(start, r"`\z`")),
                _ => Ok(Escape::Node(NodeKind::Anchor(AnchorKind::EndText))),
            },
            'G' => match d {
                JavaScript | Python => Ok(self.fallback('G', FeatureId::AnchorG)),
                Go | Rust | PortableCore => Err(self.unsupported(start, r"`\G`")),
                _ => Ok(Escape::Node(NodeKind::Anchor(AnchorKind::SearchStart))),
            },
            'K' => match d {
                JavaScript | Python => Ok(self.fallback('K', FeatureId::MatchReset)),
                Php | Ruby | Perl => Ok(Escape::Node(NodeKind::MatchReset)),
                _ => Err(self.unsupported(start, r"`\K`")),
            },
            'Q' => match d {
                JavaScript | Python | Ruby => Ok(self.fallback('Q', FeatureId::QuoteBlock)),
                Rust | PortableCore => Err(self.unsupported(start, r"`\Q...\E`")),
                _ if in_class => Err(self.error_at(start, r"`\Q` inside a character class")),
                _ => {
                    let qs = self.pos;
                    let mut end = self.chars.len();
                    let mut i = qs;
                    while i + 1 < self.chars.len() {
                        if self.chars[i] == '\\' && self.chars[i + 1] == 'E' {
                            end = i;
                            break;
                        }
                        i += 1;
                    }
                    let text: String = self.chars[qs..end].iter().collect();
                    self.pos = if end < self.chars.len() { end + 2 } else { end };
                    Ok(Escape::Node(NodeKind::Quote(text)))
                }
            },
            'E' => match d {
                JavaScript | Python | Ruby => Ok(self.identity('E')),
                Java | Php | Perl => Ok(Escape::Nothing),
                _ => Err(self.unsupported(start, r"`\E`")),
            },
            'g' if !in_class => self.parse_g_escape(start),
            'k' if !in_class => {
                if self.peek() == Some('<') && self.is(&[JavaScript, Java, Php, Ruby, Perl]) {
                    self.pos += 1;
                    let name = self.parse_name('>')?;
                    return Ok(Escape::Node(NodeKind::Backref(Backref {
                        target: BackrefTarget::Name(name),
                        syntax: BackrefSyntax::K,
                    })));
                }
                match d {
                    JavaScript | Python | Ruby => Ok(self.identity('k')),
                    _ => Err(self.error_at(start, r"malformed `\k` escape")),
                }
            }
            'p' | 'P' => self.parse_property(start, c == 'P'),
            c if c.is_ascii_alphanumeric() => match d {
                JavaScript | Python | Ruby => Ok(self.identity(c)),
                _ => Err(self.error_at(start, &format!("unrecognized escape `\\{c}`"))),
            },
            c => lit(c, LiteralSyntax::Plain),
        }
    }

    fn parse_g_escape(&mut self, start: usize) -> Result<Escape, ParseError> {
        let d = self.dialect;
        let angle = self.peek() == Some('<');
        match d {
            JavaScript | Python => Ok(self.fallback(
                'g',
                if angle {
                    FeatureId::BackrefGAngle
                } else {
                    FeatureId::BackrefG
                },
            )),
            Ruby if !angle => Ok(self.fallback('g', FeatureId::BackrefG)),
            Ruby | Php if angle => {
                self.pos += 1;
                let target = self.parse_ref_target('>')?;
                Ok(Escape::Node(NodeKind::Backref(Backref {
                    target,
                    syntax: BackrefSyntax::GAngle,
                })))
            }
            Php | Perl if self.peek().is_some_and(|c| c.is_ascii_digit()) => {
                let ns = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let text: String = self.chars[ns..self.pos].iter().collect();
                Ok(Escape::Node(NodeKind::Backref(Backref {
                    target: BackrefTarget::Index(text.parse().unwrap_or(u32::MAX)),
                    syntax: BackrefSyntax::G,
                })))
            }
            Php | Perl if self.peek() == Some('{') => {
                self.pos += 1;
                let target = self.parse_ref_target('}')?;
                Ok(Escape::Node(NodeKind::Backref(Backref {
                    target,
                    syntax: BackrefSyntax::GBrace,
                })))
            }
            _ => Err(self.unsupported(start, r"`\g` backreference")),
        }
    }

    fn parse_ref_target(&mut self, close: char) -> Result<BackrefTarget, ParseError> {
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let ns = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let text: String = self.chars[ns..self.pos].iter().collect();
            if !self.eat(close) {
                return Err(self.error("malformed backreference"));
            }
            Ok(BackrefTarget::Index(text.parse().unwrap_or(u32::MAX)))
        } else {
            Ok(BackrefTarget::Name(self.parse_name(close)?))
        }
    }

    fn parse_property(&mut self, start: usize, negated: bool) -> Result<Escape, ParseError> {
        let d = self.dialect;
        let braced = self.peek() == Some('{');
        let letter = if negated { 'P' } else { 'p' };
        let feature = if braced {
            FeatureId::UnicodePropBraced
        } else {
            FeatureId::UnicodePropShort
        };
        match d {
            JavaScript | Python => return Ok(self.fallback(letter, feature)),
            Ruby if !braced => return Ok(self.fallback(letter, feature)),
            PortableCore => return Err(self.unsupported(start, "Unicode property")),
            _ => {}
        }
        let name = if braced {
            self.pos += 1;
            let ns = self.pos;
            while self.peek().is_some_and(|c| c != '}') {
                self.pos += 1;
            }
            if !self.eat('}') {
                return Err(self.error_at(start, "unterminated Unicode property"));
            }
            self.chars[ns..self.pos - 1].iter().collect::<String>()
        } else {
            match self.peek() {
                Some(c) if c.is_ascii_alphabetic() => {
                    self.pos += 1;
                    c.to_string()
                }
                _ => return Err(self.error_at(start, "malformed Unicode property")),
            }
        };
        if !UNICODE_PROPERTIES.contains(&name.as_str()) {
            return Err(self.error_at(start, &format!("unknown Unicode property `{name}`")));
        }
        Ok(Escape::Prop(UnicodeProperty {
            name,
            negated,
            braced,
        }))
    }

    /// `[:name:]` or `[:^name:]` at the cursor, if well formed.
    fn posix_at(&self) -> Option<(String, bool, usize)> {
        if self.peek() != Some('[') || self.peek_at(1) != Some(':') {
            return None;
        }
        let mut i = self.pos + 2;
        let negated = self.chars.get(i) == Some(&'^');
        if negated {
            i += 1;
        }
        let ns = i;
        while self.chars.get(i).is_some_and(|c| c.is_ascii_alphabetic()) {
            i += 1;
        }
        if i == ns || self.chars.get(i) != Some(&':') || self.chars.get(i + 1) != Some(&']') {
            return None;
        }
        Some((self.chars[ns..i].iter().collect(), negated, i + 2))
    }

    fn parse_class(&mut self) -> Result<CharClass, ParseError> {
        let start = self.pos;
        self.pos += 1; // [
        let negated = self.eat('^');
        let mut class = CharClass {
            items: Vec::new(),
            negated,
            leading_bracket: false,
            posix_fallback: false,
        };
        if self.peek() == Some(']') {
            if self.dialect == JavaScript {
                self.pos += 1;
                return Ok(class);
            }
            if self.dialect == PortableCore {
                return Err(self.error("leading `]` in a character class"));
            }
            self.pos += 1;
            class.leading_bracket = true;
            class.items.push(ClassItem::Char(']'));
        }
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error_at(start, "unclosed character class"));
            };
            if c == ']' {
                self.pos += 1;
                return Ok(class);
            }
            if let Some((name, neg, end)) = self.posix_at() {
                match self.dialect {
                    Php | Ruby | Go | Perl | Rust => {
                        if !POSIX_CLASSES.contains(&name.as_str()) {
                            return Err(self.error(&format!("unknown POSIX class `{name}`")));
                        }
                        self.pos = end;
                        class.items.push(ClassItem::Posix { name, negated: neg });
                        continue;
                    }
                    PortableCore => return Err(self.unsupported(self.pos, "POSIX class")),
                    _ => class.posix_fallback = true,
                }
            }
            let item_start = self.pos;
            let single = if c == '\\' {
                match self.parse_escape(true)? {
                    Escape::Lit(l) => Some(l.ch),
                    Escape::Class(e) => {
                        class.items.push(ClassItem::Escape(e));
                        None
                    }
                    Escape::Prop(p) => {
                        class.items.push(ClassItem::Property(p));
                        None
                    }
                    Escape::Nothing => None,
                    Escape::Node(_) => {
                        return Err(self.error_at(item_start, "invalid escape in a character class"))
                    }
                }
            } else {
                self.pos += 1;
                Some(c)
            };
            let Some(lo) = single else { continue };
            if self.peek() == Some('-') && self.peek_at(1).is_some_and(|n| n != ']') {
                let save = self.pos;
                self.pos += 1;
                let hi = if self.peek() == Some('\\') {
                    match self.parse_escape(true)? {
                        Escape::Lit(l) => Some(l.ch),
                        _ => None,
                    }
                } else {
                    let h = self.peek().unwrap();
                    self.pos += 1;
                    Some(h)
                };
                match hi {
                    Some(hi) => {
                        if hi < lo {
                            return Err(self.error_at(item_start, "invalid class range"));
                        }
                        class.items.push(ClassItem::Range(lo, hi));
                    }
                    None => {
                        // `a-\d`: the dash is literal.
                        self.pos = save;
                        class.items.push(ClassItem::Char(lo));
                    }
                }
            } else {
                class.items.push(ClassItem::Char(lo));
            }
        }
    }
}
