use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Bare identifier or keyword; keywords are recognized by the parser.
    Ident(String),
    /// Backtick-quoted identifier, never a keyword.
    QuotedIdent(String),
    Str(String),
    Int(String),
    Float(String),
    Param(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    DotDot,
    Minus,
    Plus,
    Star,
    Slash,
    Percent,
    Caret,
    Pipe,
    Semicolon,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Neq,
    RegexEq,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    /// Character offset of the first character.
    pub pos: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(ParseError::syntax(start, "unterminated block comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let (tok, len) = if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let is_float = chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit());
            if is_float {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                (Tok::Float(chars[i..j].iter().collect()), j - i)
            } else {
                (Tok::Int(chars[i..j].iter().collect()), j - i)
            }
        } else if c == '\'' || c == '"' {
            let (s, len) = string_literal(&chars, i)?;
            (Tok::Str(s), len)
        } else if c == '`' {
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                match chars.get(j) {
                    None => return Err(ParseError::syntax(start, "unterminated quoted identifier")),
                    Some('`') if chars.get(j + 1) == Some(&'`') => {
                        s.push('`');
                        j += 2;
                    }
                    Some('`') => break,
                    Some(ch) => {
                        s.push(*ch);
                        j += 1;
                    }
                }
            }
            if s.is_empty() {
                return Err(ParseError::syntax(start, "empty quoted identifier"));
            }
            (Tok::QuotedIdent(s), j + 1 - i)
        } else if c == '$' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Param(chars[i + 1..j].iter().collect()), j - i)
        } else if two('=', '~') {
            (Tok::RegexEq, 2)
        } else if two('<', '>') {
            (Tok::Neq, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else if two('.', '.') {
            (Tok::DotDot, 2)
        } else {
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '-' => Tok::Minus,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '%' => Tok::Percent,
                '^' => Tok::Caret,
                '|' => Tok::Pipe,
                ';' => Tok::Semicolon,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '=' => Tok::Eq,
                _ => return Err(ParseError::syntax(start, format!("unexpected character {c:?}"))),
            };
            (tok, 1)
        };
        out.push(Token { tok, pos: start });
        i += len;
    }
    out.push(Token { tok: Tok::Eof, pos: chars.len() });
    Ok(out)
}

fn string_literal(chars: &[char], start: usize) -> Result<(String, usize), ParseError> {
    let quote = chars[start];
    let mut s = String::new();
    let mut j = start + 1;
    loop {
        let Some(&ch) = chars.get(j) else {
            return Err(ParseError::syntax(start, "unterminated string literal"));
        };
        if ch == quote {
            return Ok((s, j + 1 - start));
        }
        if ch == '\\' {
            let Some(&esc) = chars.get(j + 1) else {
                return Err(ParseError::syntax(j, "dangling escape"));
            };
            let decoded = match esc {
                '\\' => '\\',
                '\'' => '\'',
                '"' => '"',
                'n' => '\n',
                't' => '\t',
                'r' => '\r',
                'b' => '\u{8}',
                'f' => '\u{c}',
                'u' => {
                    let hex: String = chars.get(j + 2..j + 6).map(|h| h.iter().collect()).unwrap_or_default();
                    let code = u32::from_str_radix(&hex, 16)
                        .ok()
                        .filter(|_| hex.len() == 4)
                        .and_then(char::from_u32)
                        .ok_or_else(|| ParseError::syntax(j, "invalid unicode escape"))?;
                    s.push(code);
                    j += 6;
                    continue;
                }
                other => return Err(ParseError::syntax(j, format!("invalid escape \\{other}"))),
            };
            s.push(decoded);
            j += 2;
            continue;
        }
        s.push(ch);
        j += 1;
    }
}
