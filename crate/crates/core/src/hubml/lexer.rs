use super::{ErrorKind, ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    Semi,
    Eq,
    Dot,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub(crate) fn lex(text: &str) -> (Vec<Token>, Vec<ParseError>) {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (i, line, col);
        let span = |len: usize| SourceSpan { line: start.1, column: start.2, length: len.max(1) };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            '.' => Some(Tok::Dot),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Token { tok, span: span(1) });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            tokens.push(Token { tok: Tok::Ident(word), span: span(j - i) });
            col += j - i;
            i = j;
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            let digits = |j: &mut usize| {
                let s = *j;
                while *j < chars.len() && chars[*j].is_ascii_digit() {
                    *j += 1;
                }
                *j > s
            };
            digits(&mut j);
            let mut ok = true;
            if j < chars.len() && chars[j] == '.' && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
                j += 1;
                digits(&mut j);
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                j += 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                ok = digits(&mut j);
            }
            // A number glued to a word, like `12ab`, is one bad token.
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
                ok = false;
            }
            let word: String = chars[i..j].iter().collect();
            match word.parse::<f64>() {
                Ok(v) if ok && v.is_finite() => tokens.push(Token { tok: Tok::Number(v), span: span(j - i) }),
                _ => errors.push(ParseError::new(span(j - i), ErrorKind::Lexical, format!("malformed number `{word}`"))),
            }
            col += j - i;
            i = j;
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if j < chars.len() && chars[j] == '"' {
                let s: String = chars[i + 1..j].iter().collect();
                tokens.push(Token { tok: Tok::Str(s), span: span(j + 1 - i) });
                col += j + 1 - i;
                i = j + 1;
            } else {
                errors.push(ParseError::new(span(j - i), ErrorKind::Lexical, "unterminated string"));
                col += j - i;
                i = j;
            }
            continue;
        }
        errors.push(ParseError::new(span(1), ErrorKind::Lexical, format!("unexpected character {c:?}")));
        i += 1;
        col += 1;
    }
    tokens.push(Token { tok: Tok::Eof, span: SourceSpan { line, column: col, length: 1 } });
    (tokens, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_words() {
        let (t, e) = lex("wacc 0.07; x = 1e-5 // note\n\"Sahara desert\"");
        assert!(e.is_empty());
        let toks: Vec<Tok> = t.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("wacc".into()),
                Tok::Number(0.07),
                Tok::Semi,
                Tok::Ident("x".into()),
                Tok::Eq,
                Tok::Number(1e-5),
                Tok::Str("Sahara desert".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_number_has_span() {
        let (_, e) = lex("a\n  12x;");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].span, SourceSpan { line: 2, column: 3, length: 3 });
    }
}
