use num_bigint::BigInt;

use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Var(String),
    Name(String),
    Int(BigInt),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bar,
    End,
    Neck,
    Query,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Var(s) | Tok::Name(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Eof => "end of input".to_owned(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Bar => "|",
            Tok::End => ".",
            Tok::Neck => ":-",
            Tok::Query => "?-",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::Parse {
                        line: l0,
                        column: c0,
                        message: "unterminated block comment".to_owned(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }

        let (tl, tc) = (line, col);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            if c.is_ascii_uppercase() || c == '_' {
                Tok::Var(word)
            } else {
                Tok::Name(word)
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let digits: String = chars[start..i].iter().collect();
            Tok::Int(digits.parse().expect("ascii digits"))
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                (':', Some('-')) => (Tok::Neck, 2),
                ('?', Some('-')) => (Tok::Query, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('=', Some('<')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                ('|', _) => (Tok::Bar, 1),
                ('.', _) => (Tok::End, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                ('=', _) => (Tok::Eq, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                _ => {
                    return Err(SyntaxError::Parse {
                        line,
                        column: col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            for _ in 0..width {
                bump!();
            }
            tok
        };
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}
