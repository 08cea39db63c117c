use super::ast::Pos;
use super::IrError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// Punctuation and operators, by spelling.
    Sym(&'static str),
    Eof,
}

const SYMS: &[&str] = &[
    ":=", "<=", ">=", "==", "!=", "{", "}", "(", ")", "[", "]", ";", ",", ".", "+", "-", "*", "<", ">",
];

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, IrError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let mut adv = |n: usize, i: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            adv(1, &mut i);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                adv(1, &mut i);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            i = start;
            adv(text.len(), &mut i);
            let v = text.parse::<i64>().map_err(|_| IrError::Syntax { pos, msg: format!("integer literal {text} out of range") })?;
            out.push((Tok::Int(v), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            i = start;
            adv(text.chars().count(), &mut i);
            out.push((Tok::Ident(text), pos));
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            adv(1, &mut i);
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(IrError::Syntax { pos, msg: "unterminated string literal".into() }),
                    Some('"') => {
                        adv(1, &mut i);
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        adv(1, &mut i);
                    }
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                adv(s.len(), &mut i);
                out.push((Tok::Sym(s), pos));
            }
            None => return Err(IrError::Syntax { pos, msg: format!("unexpected character '{c}'") }),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
