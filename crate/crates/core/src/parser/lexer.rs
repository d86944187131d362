use super::{ParseError, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare identifier or keyword; keywords are recognised by the parser.
    Ident(String),
    /// Backtick-quoted identifier, never a keyword.
    Quoted(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    DotDot,
    Colon,
    Pipe,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(f) => format!("`{f}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub(crate) fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Colon => ":",
            Tok::Pipe => "|",
            Tok::Star => "*",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Byte offset one past the token's last character.
    pub end: usize,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and // comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => {
                    while !matches!(cur.peek(), None | Some('\n')) {
                        cur.bump();
                    }
                }
                _ => break,
            }
        }
        let pos = cur.pos();
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                pos,
                end: cur.offset,
            });
            return Ok(out);
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '|' => Tok::Pipe,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '=' => Tok::Eq,
            '.' => {
                if cur.peek() == Some('.') {
                    cur.bump();
                    Tok::DotDot
                } else {
                    Tok::Dot
                }
            }
            '<' => match cur.peek() {
                Some('>') => {
                    cur.bump();
                    Tok::Ne
                }
                Some('=') => {
                    cur.bump();
                    Tok::Le
                }
                _ => Tok::Lt,
            },
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '\'' | '"' => Tok::Str(string_body(&mut cur, c, pos)?),
            '`' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some('`') if cur.peek() == Some('`') => {
                            cur.bump();
                            s.push('`');
                        }
                        Some('`') => break,
                        Some(ch) => s.push(ch),
                        None => {
                            return Err(ParseError::syntax("unterminated quoted identifier", pos))
                        }
                    }
                }
                Tok::Quoted(s)
            }
            c if c.is_ascii_digit() => number(&mut cur, c, pos)?,
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(ch) = cur.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        s.push(ch);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                return Err(ParseError::syntax(
                    format!("unexpected character `{other}`"),
                    pos,
                ))
            }
        };
        out.push(Token {
            tok,
            pos,
            end: cur.offset,
        });
    }
}

fn string_body(cur: &mut Cursor<'_>, quote: char, start: Pos) -> Result<String, ParseError> {
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err(ParseError::syntax("unterminated string literal", start)),
            Some(c) if c == quote => return Ok(s),
            Some('\\') => {
                let esc_pos = cur.pos();
                let c = match cur.bump() {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('r') => '\r',
                    Some('\\') => '\\',
                    Some('\'') => '\'',
                    Some('"') => '"',
                    Some(other) => {
                        return Err(ParseError::syntax(
                            format!("unknown escape `\\{other}`"),
                            esc_pos,
                        ))
                    }
                    None => return Err(ParseError::syntax("unterminated string literal", start)),
                };
                s.push(c);
            }
            Some(c) => s.push(c),
        }
    }
}

fn number(cur: &mut Cursor<'_>, first: char, start: Pos) -> Result<Tok, ParseError> {
    let mut s = String::from(first);
    let mut is_float = false;
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() {
            s.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    // `1..2` is a range, not a float
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        is_float = true;
        s.push('.');
        cur.bump();
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            s.push(c);
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E'))
        && (cur
            .peek2()
            .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+'))
    {
        is_float = true;
        s.push('e');
        cur.bump();
        if let Some(sign @ ('-' | '+')) = cur.peek() {
            s.push(sign);
            cur.bump();
        }
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            s.push(c);
            cur.bump();
        }
    }
    if is_float {
        s.parse()
            .map(Tok::Float)
            .map_err(|_| ParseError::syntax(format!("malformed number `{s}`"), start))
    } else {
        s.parse()
            .map(Tok::Int)
            .map_err(|_| ParseError::syntax(format!("integer `{s}` out of range"), start))
    }
}
