//! Lexical extraction of statically declared regexes. Each language gets a
//! small tokenizer that knows its strings, comments and regex literals;
//! calls are recognized on the token stream.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    JavaScript,
    Ruby,
    Python,
    /// One pattern per line, taken verbatim.
    List,
}

impl Language {
    pub fn name(self) -> &'static str {
        match self {
            Language::JavaScript => "javascript",
            Language::Ruby => "ruby",
            Language::Python => "python",
            Language::List => "list",
        }
    }

    /// File extensions scanned when walking a directory; empty means all.
    pub fn extensions(self) -> &'static [&'static str] {
        match self {
            Language::JavaScript => &["js", "mjs", "cjs", "jsx"],
            Language::Ruby => &["rb"],
            Language::Python => &["py"],
            Language::List => &[],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no extraction rule for language `{0}`")]
pub struct UnsupportedLanguage(pub String);

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Language, UnsupportedLanguage> {
        match s.to_ascii_lowercase().as_str() {
            "javascript" | "js" | "npm" => Ok(Language::JavaScript),
            "ruby" | "rb" => Ok(Language::Ruby),
            "python" | "py" | "pypi" => Ok(Language::Python),
            "list" | "lines" => Ok(Language::List),
            _ => Err(UnsupportedLanguage(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    /// A string literal without interpolation, unescaped.
    Str(String),
    /// A string whose value is not known statically.
    DynamicStr,
    Regex(String),
    Punct(char),
}

/// Patterns with the 1-based line they start on.
pub fn extract_patterns(contents: &str, language: Language) -> Vec<(String, usize)> {
    if language == Language::List {
        return contents
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| (l.to_string(), i + 1))
            .collect();
    }
    let tokens = Lexer::new(contents, language).run();
    let mut out = Vec::new();
    for (i, (tok, line)) in tokens.iter().enumerate() {
        match tok {
            Token::Regex(body) => out.push((body.clone(), *line)),
            Token::Punct('(') if is_regex_call(&tokens[..i], language) => {
                if let (Some((Token::Str(s), l)), Some((Token::Punct(',' | ')'), _))) =
                    (tokens.get(i + 1), tokens.get(i + 2))
                {
                    out.push((s.clone(), *l));
                }
            }
            _ => {}
        }
    }
    out
}

/// Whether the tokens before an opening parenthesis name a regex
/// constructor or matching function.
fn is_regex_call(before: &[(Token, usize)], language: Language) -> bool {
    let ident = |k: usize| match before.len().checked_sub(k).map(|i| &before[i].0) {
        Some(Token::Ident(s)) => Some(s.as_str()),
        _ => None,
    };
    let dot = |k: usize| {
        matches!(
            before.len().checked_sub(k).map(|i| &before[i].0),
            Some(Token::Punct('.'))
        )
    };
    match language {
        Language::JavaScript => ident(1) == Some("RegExp"),
        Language::Ruby => ident(1) == Some("new") && dot(2) && ident(3) == Some("Regexp"),
        Language::Python => {
            const FUNCTIONS: [&str; 9] = [
                "compile",
                "match",
                "search",
                "fullmatch",
                "findall",
                "finditer",
                "sub",
                "subn",
                "split",
            ];
            ident(1).is_some_and(|f| FUNCTIONS.contains(&f))
                && dot(2)
                && matches!(ident(3), Some("re" | "regex"))
        }
        Language::List => false,
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    language: Language,
    tokens: Vec<(Token, usize)>,
}

impl Lexer {
    fn new(src: &str, language: Language) -> Lexer {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            language,
            tokens: Vec::new(),
        }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.peek(k) == Some(c))
    }

    fn skip_to(&mut self, end: &str) {
        while self.peek(0).is_some() && !self.starts_with(end) {
            self.bump();
        }
        for _ in end.chars() {
            self.bump();
        }
    }

    /// A `/` here starts a regex literal rather than a division.
    fn regex_allowed(&self) -> bool {
        const KEYWORDS: [&str; 18] = [
            "return", "typeof", "case", "do", "else", "in", "of", "new", "delete", "void", "throw",
            "yield", "await", "when", "if", "unless", "and", "or",
        ];
        match self.tokens.last().map(|t| &t.0) {
            None => true,
            Some(Token::Punct(c)) => "(,=:[!&|?{};+-*%<>~^".contains(*c),
            Some(Token::Ident(k)) => KEYWORDS.contains(&k.as_str()),
            _ => false,
        }
    }

    fn run(mut self) -> Vec<(Token, usize)> {
        let hash_comments = matches!(self.language, Language::Ruby | Language::Python);
        while let Some(c) = self.peek(0) {
            let line = self.line;
            if c.is_whitespace() {
                self.bump();
            } else if (hash_comments && c == '#')
                || (self.language == Language::JavaScript && self.starts_with("//"))
            {
                self.skip_to("\n");
            } else if self.language == Language::JavaScript && self.starts_with("/*") {
                self.skip_to("*/");
            } else if self.language == Language::Ruby
                && line_start(&self.chars, self.pos)
                && self.starts_with("=begin")
            {
                self.skip_to("=end");
            } else if c == '/' && self.language != Language::Python && self.regex_allowed() {
                self.bump();
                let body = self.regex_body('/');
                self.skip_flags();
                self.push(body.map_or(Token::DynamicStr, Token::Regex), line);
            } else if self.language == Language::Ruby && self.starts_with("%r") {
                self.bump();
                self.bump();
                let close = match self.bump() {
                    Some('{') => '}',
                    Some('(') => ')',
                    Some('[') => ']',
                    Some('<') => '>',
                    Some(d) => d,
                    None => break,
                };
                let body = self.regex_body(close);
                self.skip_flags();
                self.push(body.map_or(Token::DynamicStr, Token::Regex), line);
            } else if c == '"' || c == '\'' || c == '`' {
                let tok = self.string(String::new());
                self.push(tok, line);
            } else if c.is_alphanumeric() || c == '_' || c == '$' {
                let mut word = String::new();
                while let Some(c) = self
                    .peek(0)
                    .filter(|c| c.is_alphanumeric() || *c == '_' || *c == '$')
                {
                    word.push(c);
                    self.bump();
                }
                let prefix = word.to_ascii_lowercase();
                let is_prefix = self.language == Language::Python
                    && prefix.len() <= 2
                    && prefix.chars().all(|c| "rbuf".contains(c));
                if is_prefix && matches!(self.peek(0), Some('"' | '\'')) {
                    let tok = self.string(prefix);
                    self.push(tok, line);
                } else {
                    self.push(Token::Ident(word), line);
                }
            } else {
                self.bump();
                self.push(Token::Punct(c), line);
            }
        }
        self.tokens
    }

    fn push(&mut self, tok: Token, line: usize) {
        self.tokens.push((tok, line));
    }

    fn skip_flags(&mut self) {
        while self.peek(0).is_some_and(|c| c.is_ascii_alphabetic()) {
            self.bump();
        }
    }

    /// The raw body of a regex literal up to the unescaped `close`, or
    /// `None` if it has interpolation or runs off the line.
    fn regex_body(&mut self, close: char) -> Option<String> {
        let mut body = String::new();
        let mut in_class = false;
        let mut dynamic = false;
        loop {
            let c = self.peek(0)?;
            if c == '\n' && close == '/' {
                return None;
            }
            self.bump();
            match c {
                '\\' => {
                    body.push(c);
                    body.push(self.bump()?);
                    continue;
                }
                '[' => in_class = true,
                ']' => in_class = false,
                '#' if self.language == Language::Ruby && self.peek(0) == Some('{') => {
                    dynamic = true
                }
                _ if c == close && (!in_class || close != '/') => break,
                _ => {}
            }
            body.push(c);
        }
        (!dynamic).then_some(body)
    }

    /// A string literal starting at the quote; `prefix` holds Python
    /// string prefix letters.
    fn string(&mut self, prefix: String) -> Token {
        let quote = self.bump().unwrap();
        let triple = self.language == Language::Python
            && self.peek(0) == Some(quote)
            && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let raw = prefix.contains('r');
        let mut dynamic =
            prefix.contains('f') || quote == '`' && self.language == Language::JavaScript;
        let interpolates = self.language == Language::Ruby && quote == '"';
        let mut value = String::new();
        while let Some(c) = self.peek(0) {
            if triple {
                if c == quote && self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.bump();
                    self.bump();
                    self.bump();
                    break;
                }
            } else if c == quote {
                self.bump();
                break;
            } else if c == '\n' && quote != '`' {
                dynamic = true;
                break;
            }
            self.bump();
            if c == '\\' {
                let Some(e) = self.bump() else { break };
                if raw
                    || (quote == '\'' && self.language == Language::Ruby && e != '\'' && e != '\\')
                {
                    value.push('\\');
                    value.push(e);
                } else {
                    match unescape(e) {
                        Some(u) => value.push(u),
                        None => {
                            value.push('\\');
                            value.push(e);
                        }
                    }
                }
            } else {
                if interpolates && c == '#' && self.peek(0) == Some('{') {
                    dynamic = true;
                }
                if c == '$' && quote == '`' && self.peek(0) == Some('{') {
                    dynamic = true;
                }
                value.push(c);
            }
        }
        if dynamic {
            Token::DynamicStr
        } else {
            Token::Str(value)
        }
    }
}

fn line_start(chars: &[char], pos: usize) -> bool {
    pos == 0 || chars[pos - 1] == '\n'
}

/// Simple string escapes. Unknown escapes keep their backslash, which
/// matches how the languages treat `"\d"`.
fn unescape(e: char) -> Option<char> {
    Some(match e {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '0' => '\0',
        '\\' | '\'' | '"' | '`' | '/' => e,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pats(src: &str, lang: Language) -> Vec<String> {
        extract_patterns(src, lang)
            .into_iter()
            .map(|p| p.0)
            .collect()
    }

    #[test]
    fn javascript() {
        let src = "const r = /foo+/g;\nlet x = a / b / c;\n// /not/ here\nconst s = new RegExp(\"a\\\\d+\", 'g');\nRegExp(prefix + \"b\");\nif (/[/]x/.test(y)) {}\n";
        assert_eq!(pats(src, Language::JavaScript), ["foo+", "a\\d+", "[/]x"]);
        let lines: Vec<usize> = extract_patterns(src, Language::JavaScript)
            .iter()
            .map(|p| p.1)
            .collect();
        assert_eq!(lines, [1, 4, 6]);
        assert!(pats("RegExp(`a${b}`)", Language::JavaScript).is_empty());
    }

    #[test]
    fn python() {
        let src = "import re\nre.compile(\"a+b\")\nre.compile(prefix + \"b\")\nre.match(r'\\d+\\.', s)  # re.compile('x')\nre.search(f'{x}', s)\nx = '/notregex/'\n";
        assert_eq!(pats(src, Language::Python), ["a+b", "\\d+\\."]);
    }

    #[test]
    fn ruby_and_list() {
        let src = "x =~ /ab+c/i\ny = %r{a/b}\nz = Regexp.new('q\\d')\nw = /a#{v}/\n";
        assert_eq!(pats(src, Language::Ruby), ["ab+c", "a/b", "q\\d"]);
        assert_eq!(pats("a+\n\n\\s\n", Language::List), ["a+", "\\s"]);
        assert_eq!(
            "cobol".parse::<Language>(),
            Err(UnsupportedLanguage("cobol".into()))
        );
    }
}
