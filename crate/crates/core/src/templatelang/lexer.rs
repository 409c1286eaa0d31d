use super::ast::Span;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(Vec<u8>),
    Char(u8),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Float(v) => format!("number `{v}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Char(_) => "character literal".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that maximal munch falls out of a linear scan.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "&=", "^=", "|=", "->", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~",
    "&", "|", "^", "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}",
];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self, ahead: usize) -> u8 {
        self.src.get(self.pos + ahead).copied().unwrap_or(0)
    }

    fn bump(&mut self) -> u8 {
        let c = self.peek(0);
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn here(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn err(&self, span: Span, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(span, msg)
    }

    fn skip_trivia(&mut self) -> Result<(), Diagnostic> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (b' ' | b'\t' | b'\r' | b'\n', _) => {
                    self.bump();
                }
                (b'/', b'/') => {
                    while self.pos < self.src.len() && self.peek(0) != b'\n' {
                        self.bump();
                    }
                }
                (b'/', b'*') => {
                    let start = self.here();
                    self.bump();
                    self.bump();
                    loop {
                        if self.pos >= self.src.len() {
                            return Err(self.err(start, "unterminated block comment"));
                        }
                        if self.peek(0) == b'*' && self.peek(1) == b'/' {
                            self.bump();
                            self.bump();
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn escape(&mut self, span: Span) -> Result<u8, Diagnostic> {
        let c = self.bump();
        Ok(match c {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'0' => 0,
            b'\\' => b'\\',
            b'\'' => b'\'',
            b'"' => b'"',
            b'x' => {
                let mut v: u32 = 0;
                let mut digits = 0;
                while self.peek(0).is_ascii_hexdigit() && digits < 2 {
                    v = v * 16 + (self.bump() as char).to_digit(16).unwrap();
                    digits += 1;
                }
                if digits == 0 {
                    return Err(self.err(span, "`\\x` escape without hex digits"));
                }
                v as u8
            }
            other => {
                return Err(self.err(span, format!("unknown escape `\\{}`", other as char)));
            }
        })
    }

    fn number(&mut self, span: Span) -> Result<Tok, Diagnostic> {
        let start = self.pos;
        if self.peek(0) == b'0' && matches!(self.peek(1), b'x' | b'X') {
            self.bump();
            self.bump();
            let digits_start = self.pos;
            while self.peek(0).is_ascii_hexdigit() {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
            let v = u64::from_str_radix(text, 16)
                .map_err(|_| self.err(span, "malformed hexadecimal literal"))?;
            self.int_suffix();
            return Ok(Tok::Int(v as i64));
        }
        while self.peek(0).is_ascii_digit() {
            self.bump();
        }
        let is_float = (self.peek(0) == b'.' && self.peek(1).is_ascii_digit())
            || matches!(self.peek(0), b'e' | b'E');
        if is_float {
            if self.peek(0) == b'.' {
                self.bump();
                while self.peek(0).is_ascii_digit() {
                    self.bump();
                }
            }
            if matches!(self.peek(0), b'e' | b'E') {
                self.bump();
                if matches!(self.peek(0), b'+' | b'-') {
                    self.bump();
                }
                while self.peek(0).is_ascii_digit() {
                    self.bump();
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let v: f64 = text
                .parse()
                .map_err(|_| self.err(span, "malformed floating-point literal"))?;
            if matches!(self.peek(0), b'f' | b'F') {
                self.bump();
            }
            return Ok(Tok::Float(v));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v = if text.len() > 1 && text.starts_with('0') {
            u64::from_str_radix(&text[1..], 8)
                .map_err(|_| self.err(span, "malformed octal literal"))?
        } else {
            text.parse::<u64>()
                .map_err(|_| self.err(span, "integer literal out of range"))?
        };
        self.int_suffix();
        Ok(Tok::Int(v as i64))
    }

    fn int_suffix(&mut self) {
        while matches!(self.peek(0), b'u' | b'U' | b'l' | b'L') {
            self.bump();
        }
    }

    fn next(&mut self) -> Result<Token, Diagnostic> {
        self.skip_trivia()?;
        let span = self.here();
        if self.pos >= self.src.len() {
            return Ok(Token {
                tok: Tok::Eof,
                span,
            });
        }
        let c = self.peek(0);
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                self.bump();
            }
            Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_ascii_digit()) {
            self.number(span)?
        } else if c == b'"' {
            self.bump();
            let mut bytes = Vec::new();
            loop {
                match self.peek(0) {
                    0 if self.pos >= self.src.len() => {
                        return Err(self.err(span, "unterminated string literal"));
                    }
                    b'\n' => return Err(self.err(span, "newline in string literal")),
                    b'"' => {
                        self.bump();
                        break;
                    }
                    b'\\' => {
                        self.bump();
                        bytes.push(self.escape(span)?);
                    }
                    _ => bytes.push(self.bump()),
                }
            }
            Tok::Str(bytes)
        } else if c == b'\'' {
            self.bump();
            let v = match self.bump() {
                b'\\' => self.escape(span)?,
                b'\'' => return Err(self.err(span, "empty character literal")),
                other => other,
            };
            if self.bump() != b'\'' {
                return Err(self.err(span, "unterminated character literal"));
            }
            Tok::Char(v)
        } else if c == b'#' {
            return Err(self.err(span, "preprocessor directives are not supported"));
        } else {
            let rest = &self.src[self.pos..];
            let p = PUNCTS
                .iter()
                .find(|p| rest.starts_with(p.as_bytes()))
                .ok_or_else(|| self.err(span, format!("unexpected character `{}`", c as char)))?;
            for _ in 0..p.len() {
                self.bump();
            }
            Tok::Punct(p)
        };
        Ok(Token { tok, span })
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        src: source.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}
