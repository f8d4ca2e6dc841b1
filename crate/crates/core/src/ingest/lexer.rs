//! A small C tokenizer.
//!
//! Comments are dropped, string and character literals become single tokens,
//! and every preprocessor directive (including backslash continuations) is
//! collapsed into one [`TokenKind::Directive`] token. No macro expansion is
//! attempted.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    Directive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// 1-based line of the first byte.
    pub line: u32,
    /// Byte range into the tokenized source.
    pub start: usize,
    pub end: usize,
}

impl Token<'_> {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }

    pub fn is_ident_named(&self, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == name
    }
}

const PUNCT3: [&str; 3] = ["<<=", ">>=", "..."];
const PUNCT2: [&str; 20] = [
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
    "##",
];

struct Cursor<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) {
        if let Some(b) = self.peek(0) {
            if b == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn skip_block_comment(&mut self) {
        self.bump_n(2);
        while let Some(b) = self.peek(0) {
            if b == b'*' && self.peek(1) == Some(b'/') {
                self.bump_n(2);
                return;
            }
            self.bump();
        }
    }

    fn skip_line_comment(&mut self) {
        while let Some(b) = self.peek(0) {
            if b == b'\n' {
                return;
            }
            if b == b'\\' && self.peek(1) == Some(b'\n') {
                self.bump_n(2);
                continue;
            }
            self.bump();
        }
    }

    fn skip_quoted(&mut self, quote: u8) {
        self.bump();
        while let Some(b) = self.peek(0) {
            match b {
                b'\\' => self.bump_n(2),
                b'\n' => return,
                _ if b == quote => {
                    self.bump();
                    return;
                }
                _ => self.bump(),
            }
        }
    }

    /// Consume a directive up to (not including) the terminating newline.
    fn skip_directive(&mut self) {
        while let Some(b) = self.peek(0) {
            match b {
                b'\n' => return,
                b'\\' if self.peek(1) == Some(b'\n') => self.bump_n(2),
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => self.bump_n(3),
                b'/' if self.peek(1) == Some(b'*') => self.skip_block_comment(),
                b'/' if self.peek(1) == Some(b'/') => self.skip_line_comment(),
                b'"' | b'\'' => self.skip_quoted(b),
                _ => self.bump(),
            }
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80
}

fn is_ident_continue(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

/// Tokenize C source text.
pub fn tokenize(src: &str) -> Vec<Token<'_>> {
    let mut cur = Cursor {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
    };
    let mut out = Vec::new();
    // Only whitespace (or comments) seen since the last newline.
    let mut at_line_start = true;

    while let Some(b) = cur.peek(0) {
        if b == b'\n' {
            cur.bump();
            at_line_start = true;
            continue;
        }
        if b.is_ascii_whitespace() {
            cur.bump();
            continue;
        }
        if b == b'\\' && matches!(cur.peek(1), Some(b'\n')) {
            cur.bump_n(2);
            continue;
        }
        if b == b'/' && cur.peek(1) == Some(b'*') {
            cur.skip_block_comment();
            continue;
        }
        if b == b'/' && cur.peek(1) == Some(b'/') {
            cur.skip_line_comment();
            continue;
        }

        let start = cur.pos;
        let line = cur.line;
        let kind = if b == b'#' && at_line_start {
            cur.skip_directive();
            TokenKind::Directive
        } else if b == b'"' {
            cur.skip_quoted(b'"');
            TokenKind::Str
        } else if b == b'\'' {
            cur.skip_quoted(b'\'');
            TokenKind::Char
        } else if is_ident_start(b) {
            while cur.peek(0).is_some_and(is_ident_continue) {
                cur.bump();
            }
            // Encoding prefixes: L"..", u8"..", U'..'.
            let word = &src[start..cur.pos];
            match (word, cur.peek(0)) {
                ("L" | "u" | "U" | "u8", Some(q @ (b'"' | b'\''))) => {
                    cur.skip_quoted(q);
                    if q == b'"' {
                        TokenKind::Str
                    } else {
                        TokenKind::Char
                    }
                }
                _ => TokenKind::Ident,
            }
        } else if b.is_ascii_digit() || (b == b'.' && cur.peek(1).is_some_and(|c| c.is_ascii_digit())) {
            cur.bump();
            while let Some(c) = cur.peek(0) {
                if matches!(c, b'e' | b'E' | b'p' | b'P') && matches!(cur.peek(1), Some(b'+' | b'-')) {
                    cur.bump_n(2);
                } else if c.is_ascii_alphanumeric() || c == b'.' || c == b'_' || c == b'\'' {
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Number
        } else {
            let rest = cur.rest();
            let len = PUNCT3
                .iter()
                .chain(PUNCT2.iter())
                .find(|p| rest.starts_with(**p))
                .map(|p| p.len())
                .unwrap_or_else(|| rest.chars().next().map_or(1, char::len_utf8));
            cur.bump_n(len);
            TokenKind::Punct
        };
        at_line_start = false;
        out.push(Token {
            kind,
            text: &src[start..cur.pos],
            line,
            start,
            end: cur.pos,
        });
    }
    out
}
