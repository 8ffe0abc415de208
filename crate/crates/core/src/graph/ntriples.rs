//! Canonical N-Triples serialization: one triple per line, lines sorted
//! bytewise, minimal escaping, raw UTF-8 elsewhere. The parser is more
//! lenient than the writer (comments, blank lines, \uXXXX escapes) so a
//! serialized file always reads back into an equal graph.

use std::path::Path;

use super::{GraphConfig, GraphError, Iri, PddGraph, Term, Triple};

fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn format_term(term: &Term, out: &mut String) {
    match term {
        Term::Iri(iri) => {
            out.push('<');
            out.push_str(iri.as_str());
            out.push('>');
        }
        Term::Literal { value, datatype } => {
            out.push('"');
            out.push_str(&escape_literal(value));
            out.push('"');
            if let Some(dt) = datatype {
                out.push_str("^^<");
                out.push_str(dt.as_str());
                out.push('>');
            }
        }
    }
}

pub fn format_triple(triple: &Triple) -> String {
    let mut line = String::new();
    line.push('<');
    line.push_str(triple.subject.as_str());
    line.push_str("> <");
    line.push_str(triple.predicate.as_str());
    line.push_str("> ");
    format_term(&triple.object, &mut line);
    line.push_str(" .");
    line
}

/// Every line including the last ends with '\n'; an empty graph is an
/// empty string. Line order is bytewise, independent of insertion order.
pub fn serialize_to_string(graph: &PddGraph) -> String {
    let mut lines: Vec<String> = graph.iter().map(format_triple).collect();
    lines.sort_unstable();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Writes the canonical form and returns how many triples went out.
pub fn serialize_ntriples(graph: &PddGraph, path: &Path) -> Result<usize, GraphError> {
    std::fs::write(path, serialize_to_string(graph)).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(graph.len())
}

struct Cursor<'a> {
    rest: std::str::Chars<'a>,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a str) -> Self {
        Cursor { rest: line.chars() }
    }

    fn peek(&self) -> Option<char> {
        self.rest.clone().next()
    }

    fn bump(&mut self) -> Option<char> {
        self.rest.next()
    }

    fn eat(&mut self, expected: char) -> bool {
        if self.peek() == Some(expected) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) -> usize {
        let mut n = 0;
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.bump();
            n += 1;
        }
        n
    }
}

fn parse_iri(cur: &mut Cursor) -> Result<Iri, String> {
    if !cur.eat('<') {
        return Err("expected '<'".into());
    }
    let mut iri = String::new();
    loop {
        match cur.bump() {
            None => return Err("unterminated IRI".into()),
            Some('>') => break,
            Some(c) if c == ' ' || c == '<' || c == '"' || c.is_control() => {
                return Err(format!("character {c:?} not allowed inside an IRI"));
            }
            Some(c) => iri.push(c),
        }
    }
    if iri.is_empty() {
        return Err("empty IRI".into());
    }
    Ok(Iri::new(iri))
}

fn parse_unicode_escape(cur: &mut Cursor, digits: usize) -> Result<char, String> {
    let mut code = 0u32;
    for _ in 0..digits {
        let c = cur.bump().ok_or("truncated unicode escape")?;
        let digit = c
            .to_digit(16)
            .ok_or_else(|| format!("bad hex digit {c:?} in unicode escape"))?;
        code = code * 16 + digit;
    }
    char::from_u32(code).ok_or_else(|| format!("U+{code:04X} is not a scalar value"))
}

fn parse_literal(cur: &mut Cursor) -> Result<Term, String> {
    if !cur.eat('"') {
        return Err("expected '\"'".into());
    }
    let mut value = String::new();
    loop {
        match cur.bump() {
            None => return Err("unterminated literal".into()),
            Some('"') => break,
            Some('\\') => match cur.bump() {
                Some('\\') => value.push('\\'),
                Some('"') => value.push('"'),
                Some('\'') => value.push('\''),
                Some('n') => value.push('\n'),
                Some('r') => value.push('\r'),
                Some('t') => value.push('\t'),
                Some('b') => value.push('\u{0008}'),
                Some('f') => value.push('\u{000C}'),
                Some('u') => value.push(parse_unicode_escape(cur, 4)?),
                Some('U') => value.push(parse_unicode_escape(cur, 8)?),
                Some(c) => return Err(format!("unknown escape \\{c}")),
                None => return Err("truncated escape".into()),
            },
            Some(c) => value.push(c),
        }
    }
    let datatype = if cur.peek() == Some('^') {
        cur.bump();
        if !cur.eat('^') {
            return Err("expected \"^^\" before datatype".into());
        }
        Some(parse_iri(cur)?)
    } else {
        None
    };
    Ok(Term::Literal { value, datatype })
}

fn parse_triple_line(line: &str) -> Result<Triple, String> {
    let mut cur = Cursor::new(line);
    let subject = parse_iri(&mut cur)?;
    if cur.skip_ws() == 0 {
        return Err("expected whitespace after subject".into());
    }
    let predicate = parse_iri(&mut cur)?;
    if cur.skip_ws() == 0 {
        return Err("expected whitespace after predicate".into());
    }
    let object = match cur.peek() {
        Some('<') => Term::Iri(parse_iri(&mut cur)?),
        Some('"') => parse_literal(&mut cur)?,
        other => return Err(format!("expected IRI or literal object, found {other:?}")),
    };
    cur.skip_ws();
    if !cur.eat('.') {
        return Err("expected terminating '.'".into());
    }
    cur.skip_ws();
    if let Some(c) = cur.peek() {
        return Err(format!("trailing content starting at {c:?}"));
    }
    Ok(Triple {
        subject,
        predicate,
        object,
    })
}

/// Blank lines and `#` comment lines are skipped; anything else must be
/// a full triple. Line numbers in errors are 1-based.
pub fn parse_ntriples_str(input: &str, config: GraphConfig) -> Result<PddGraph, GraphError> {
    let mut graph = PddGraph::new(config)?;
    for (idx, raw_line) in input.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let triple = parse_triple_line(line).map_err(|reason| GraphError::Parse {
            line: idx + 1,
            reason,
        })?;
        graph.insert(triple);
    }
    Ok(graph)
}

pub fn parse_ntriples(path: &Path, config: GraphConfig) -> Result<PddGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_ntriples_str(&text, config)
}
