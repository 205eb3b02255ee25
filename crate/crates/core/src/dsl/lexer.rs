use chrono::{DateTime, NaiveDate, NaiveTime, Timelike};

use super::DslError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    /// Unix seconds from an RFC 3339 timestamp.
    Timestamp(i64),
    /// Unix seconds at midnight UTC.
    Date(i64),
    /// Seconds after midnight.
    Clock(i64),
    /// Seconds.
    Duration(u64),
    /// Meters.
    Distance(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Le,
    Ge,
    Lt,
    Newline,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Timestamp(_) => "timestamp".into(),
            Tok::Date(_) => "date".into(),
            Tok::Clock(_) => "clock time".into(),
            Tok::Duration(_) => "duration".into(),
            Tok::Distance(_) => "distance".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Newline => "end of line".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-' | '+')
}

fn classify(word: &str, line: usize, col: usize) -> Result<Tok, DslError> {
    let err = |msg: &str| DslError::Syntax {
        line,
        col,
        expected: msg.to_string(),
        found: format!("`{word}`"),
    };
    let first = word.chars().next().unwrap_or(' ');
    if first.is_ascii_alphabetic() || first == '_' {
        if word.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Ok(Tok::Ident(word.to_string()));
        }
        return Err(err("identifier"));
    }
    if word.contains('T') {
        return DateTime::parse_from_rfc3339(word)
            .map(|t| Tok::Timestamp(t.timestamp()))
            .map_err(|_| err("RFC 3339 timestamp"));
    }
    if word.len() == 10 && word.as_bytes()[4] == b'-' {
        return NaiveDate::parse_from_str(word, "%Y-%m-%d")
            .map(|d| Tok::Date(d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()))
            .map_err(|_| err("date YYYY-MM-DD"));
    }
    if word.contains(':') {
        let t = NaiveTime::parse_from_str(word, "%H:%M:%S")
            .or_else(|_| NaiveTime::parse_from_str(word, "%H:%M"))
            .map_err(|_| err("clock time HH:MM[:SS]"))?;
        return Ok(Tok::Clock(t.num_seconds_from_midnight() as i64));
    }
    let unit = |suffix: &str| word.strip_suffix(suffix);
    for (suffix, scale) in [("min", 60u64), ("h", 3600), ("s", 1)] {
        if let Some(n) = unit(suffix) {
            let n: u64 = n.parse().map_err(|_| err("whole-number duration"))?;
            return n
                .checked_mul(scale)
                .map(Tok::Duration)
                .ok_or_else(|| err("duration in range"));
        }
    }
    if let Some(n) = unit("m") {
        let d: f64 = n.parse().map_err(|_| err("distance in meters"))?;
        return if d.is_finite() {
            Ok(Tok::Distance(d))
        } else {
            Err(err("finite distance"))
        };
    }
    match word.parse::<f64>() {
        Ok(n) if n.is_finite() => Ok(Tok::Number(n)),
        _ => Err(err("number")),
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: line_no, col });
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '(' => {
                    push(&mut out, Tok::LParen);
                    i += 1;
                }
                ')' => {
                    push(&mut out, Tok::RParen);
                    i += 1;
                }
                '[' => {
                    push(&mut out, Tok::LBracket);
                    i += 1;
                }
                ']' => {
                    push(&mut out, Tok::RBracket);
                    i += 1;
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    i += 1;
                }
                '=' => {
                    push(&mut out, Tok::Eq);
                    i += 1;
                }
                '<' | '>' => {
                    let eq = chars.get(i + 1) == Some(&'=');
                    let tok = match (c, eq) {
                        ('<', true) => Tok::Le,
                        ('>', true) => Tok::Ge,
                        ('<', false) => Tok::Lt,
                        _ => {
                            return Err(DslError::Syntax {
                                line: line_no,
                                col,
                                expected: "`>=`".into(),
                                found: "`>`".into(),
                            })
                        }
                    };
                    push(&mut out, tok);
                    i += if eq { 2 } else { 1 };
                }
                c if is_word_char(c) => {
                    let start = i;
                    while i < chars.len() && is_word_char(chars[i]) {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    push(&mut out, classify(&word, line_no, col)?);
                }
                other => {
                    return Err(DslError::Syntax {
                        line: line_no,
                        col,
                        expected: "token".into(),
                        found: format!("`{other}`"),
                    })
                }
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
            col: chars.len() + 1,
        });
    }
    Ok(out)
}
